//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! timing checks are not disturbed by other tests running alongside.

use std::process::ExitCode;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unlearn_core::data::{load_dataset, make_full_class_split, LabeledExample, Scenario};
use unlearn_core::harness::{
    emit_report, parse_csv_report, parse_grid, render_rows, ExperimentConfig, ExperimentRecord, ReportFormat, ReportRow,
    Runner, COLUMNS,
};
use unlearn_core::metrics::{js_divergence, mia_score_from_losses, zrf, AttackDataset};
use unlearn_core::model::{
    fim_diagonal, load_checkpoint, per_sample_losses, random_init, train, Architecture, Classifier, OptimizerKind,
    TrainConfig,
};
use unlearn_core::unlearn::{
    optimize_noise, MethodConfig, MethodId, MislabelConfig, ScrubConfig, SsdConfig, TeacherConfig, UnsirConfig,
};

const DESK_GRID: &str = include_str!("../configs/desk-full-class.toml");

const JS_TOL: f64 = 1e-9;
const JS_PAIRS: usize = 1000;
const ZRF_SELF_TOL: f64 = 1e-6;
const METRIC_BUDGET_SECONDS: f64 = 10.0;
const FIM_TOL: f64 = 1e-6;
const MAX_ACC_F: f64 = 10.0;
const MIN_ACC_R: f64 = 85.0;
const DESK_BUDGET_SECONDS: f64 = 15.0 * 60.0;
const MAX_TIME_RATIO: f64 = 0.5;
const MIA_NEUTRAL_TOL: f64 = 0.05;
const NOISE_TRIALS: u64 = 10;
const DETERMINISM_TOL: f64 = 1e-9;

type Outcome = Result<(bool, String), String>;

struct Desk {
    configs: Vec<ExperimentConfig>,
    records: Vec<ExperimentRecord>,
    baseline: Classifier,
    wall_seconds: f64,
    _cache: tempfile::TempDir,
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut line = |n: usize, name: &str, outcome: Outcome| {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!pass);
        println!("[{}] criterion {n} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };

    line(1, "metric oracles", metric_oracles());
    line(2, "fisher oracle", fisher_oracle());
    line(3, "no-op identities", noop_identities());

    let desk = desk_grid();
    if let Ok(desk) = &desk {
        println!("desk-scale results ({:.1} s wall):", desk.wall_seconds);
        let rows = unlearn_core::harness::rows_with_baselines(&desk.records);
        print!("{}", render_rows(&rows, ReportFormat::Markdown).unwrap_or_default());
    }
    let with_desk = |f: fn(&Desk) -> Outcome| desk.as_ref().map_err(Clone::clone).and_then(f);
    line(4, "desk full-class forgetting", with_desk(desk_forgetting));
    line(5, "speed versus retraining", with_desk(speed));
    line(6, "membership inference", with_desk(membership));
    line(7, "noise ascent", with_desk(noise_ascent));
    line(8, "determinism", with_desk(determinism));
    line(9, "report fidelity", with_desk(report_fidelity));

    if failures == 0 {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

fn entropy_bits(p: &[f64]) -> f64 {
    -compensated_sum(p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln() / std::f64::consts::LN_2))
}

/// JS through the entropy identity H(m) − (H(p) + H(q))/2.
fn js_oracle(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
    entropy_bits(&m) - 0.5 * entropy_bits(p) - 0.5 * entropy_bits(q)
}

fn random_distribution(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = rng.random_range(2..=32);
    let skew = rng.random_range(0.2..4.0);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(1e-6..1.0f64).powf(skew)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..JS_PAIRS {
        let p = random_distribution(&mut rng);
        let mut q = random_distribution(&mut rng);
        q.resize(p.len(), 0.0);
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= total);
        worst = worst.max((js_divergence(&p, &q).map_err(err)? - js_oracle(&p, &q)).abs());
    }
    let disjoint = js_divergence(&[1.0, 0.0], &[0.0, 1.0]).map_err(err)?;

    let options = desk_configs()?[0].dataset.options.clone();
    let data = load_dataset("synthetic-glyphs", &options).map_err(err)?;
    let split = make_full_class_split(&data, 3).map_err(err)?;
    let arch = Architecture::new(data.feature_dim(), vec![128, 64], data.num_classes).map_err(err)?;
    let incompetent = random_init(&arch, 0).map_err(err)?;
    let self_zrf = zrf(&incompetent, &incompetent, &split.forget).map_err(err)?;
    let elapsed = start.elapsed().as_secs_f64();

    let pass = worst <= JS_TOL
        && disjoint == 1.0
        && (self_zrf - 1.0).abs() <= ZRF_SELF_TOL
        && elapsed < METRIC_BUDGET_SECONDS;
    Ok((
        pass,
        format!(
            "max |js - oracle| = {worst:.3e} over {JS_PAIRS} pairs (tol {JS_TOL:e}); JS([1,0],[0,1]) = {disjoint}; \
             zrf(incompetent, incompetent) = {self_zrf:.12}; {elapsed:.2} s"
        ),
    ))
}

/// Forward pass written independently of the library: per layer a row-major
/// out × in weight block followed by the biases, ReLU between layers.
fn reference_loss(dims: &[usize], params: &[f64], x: &[f64], label: usize) -> f64 {
    let mut act = x.to_vec();
    let mut offset = 0;
    for (l, w) in dims.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weights = &params[offset..offset + fan_in * fan_out];
        let bias = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
        offset += fan_in * fan_out + fan_out;
        let mut next: Vec<f64> =
            (0..fan_out).map(|o| bias[o] + (0..fan_in).map(|i| weights[o * fan_in + i] * act[i]).sum::<f64>()).collect();
        if l + 2 < dims.len() {
            next.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        act = next;
    }
    let max = act.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + act.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - act[label]
}

fn fisher_case(dims: &[usize], n: usize, seed: u64) -> Result<(usize, f64), String> {
    let arch = Architecture::new(dims[0], dims[1..dims.len() - 1].to_vec(), dims[dims.len() - 1]).map_err(err)?;
    let model = random_init(&arch, seed).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = arch.num_classes;
    let data: Vec<LabeledExample> = (0..n)
        .map(|_| LabeledExample::new((0..dims[0]).map(|_| rng.random_range(-2.0..2.0)).collect(), rng.random_range(0..k)))
        .collect();
    let fim = fim_diagonal(&model, &data).map_err(err)?;
    let params = model.parameters().to_vec();

    let mut oracle = vec![0.0; params.len()];
    for ex in &data {
        let grad: Vec<f64> = if dims.len() == 2 {
            // linear softmax regression: dL/dW[o][i] = (p_o − 1{o=y}) x_i, dL/db[o] = p_o − 1{o=y}
            let d = dims[0];
            let logits: Vec<f64> =
                (0..k).map(|o| params[d * k + o] + (0..d).map(|i| params[o * d + i] * ex.features[i]).sum::<f64>()).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|v| (v - max).exp()).sum();
            let delta: Vec<f64> =
                (0..k).map(|o| (logits[o] - max).exp() / z - if o == ex.label { 1.0 } else { 0.0 }).collect();
            let mut g = vec![0.0; params.len()];
            for o in 0..k {
                for i in 0..d {
                    g[o * d + i] = delta[o] * ex.features[i];
                }
                g[d * k + o] = delta[o];
            }
            g
        } else {
            let h = 1e-6;
            (0..params.len())
                .map(|j| {
                    let mut up = params.clone();
                    let mut down = params.clone();
                    up[j] += h;
                    down[j] -= h;
                    (reference_loss(dims, &up, &ex.features, ex.label) - reference_loss(dims, &down, &ex.features, ex.label))
                        / (2.0 * h)
                })
                .collect()
        };
        for (o, g) in oracle.iter_mut().zip(&grad) {
            *o += g * g / n as f64;
        }
    }
    let worst = fim.values.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((params.len(), worst))
}

fn fisher_oracle() -> Outcome {
    let (p_lin, d_lin) = fisher_case(&[4, 3], 20, 5)?;
    let (p_mlp, d_mlp) = fisher_case(&[3, 5, 3], 20, 6)?;
    let pass = p_lin <= 50 && p_mlp <= 50 && d_lin <= FIM_TOL && d_mlp <= FIM_TOL;
    Ok((
        pass,
        format!(
            "linear ({p_lin} params, closed-form gradients) max diff {d_lin:.3e}; \
             one hidden layer ({p_mlp} params, finite differences) max diff {d_mlp:.3e}; 20 samples (tol {FIM_TOL:e})"
        ),
    ))
}

fn noop_identities() -> Outcome {
    let data = load_dataset(
        "synthetic-blobs",
        &unlearn_core::data::LoadOptions { num_classes: Some(3), per_class: Some(40), ..Default::default() },
    )
    .map_err(err)?;
    let arch = Architecture::new(data.feature_dim(), vec![8], 3).map_err(err)?;
    let tc = TrainConfig { epochs: 5, learning_rate: 0.01, batch_size: 16, seed: 1, optimizer: OptimizerKind::Adam };
    let model = train(&random_init(&arch, 1).map_err(err)?, &data.train, &tc).map_err(err)?;
    let split = make_full_class_split(&data, 1).map_err(err)?;
    let cases = [
        ("ssd alpha=1e12", MethodConfig::Ssd(SsdConfig { alpha: 1e12, gamma: 1.0 })),
        ("teacher epochs=0", MethodConfig::Teacher(TeacherConfig { epochs: 0, ..Default::default() })),
        ("mislabel epochs=0", MethodConfig::Mislabel(MislabelConfig { epochs: 0, ..Default::default() })),
        (
            "scrub epochs=0",
            MethodConfig::Scrub(ScrubConfig { unlearn_epochs: 0, extra_min_epochs: 0, ..Default::default() }),
        ),
        ("unsir rounds=0", MethodConfig::Unsir(UnsirConfig { impair_repair_rounds: 0, ..Default::default() })),
    ];
    let mut broken = Vec::new();
    for (name, cfg) in &cases {
        let out = cfg.run(&model, &split, &tc).map_err(err)?;
        let same = out.model.parameters().len() == model.parameters().len()
            && out.model.parameters().iter().zip(model.parameters()).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            broken.push(*name);
        }
    }
    let detail = if broken.is_empty() {
        format!("{} configurations returned bitwise-equal parameters", cases.len())
    } else {
        format!("parameters changed for {broken:?}")
    };
    Ok((broken.is_empty(), detail))
}

fn desk_configs() -> Result<Vec<ExperimentConfig>, String> {
    parse_grid(DESK_GRID).map_err(err)
}

fn desk_grid() -> Result<Desk, String> {
    let configs = desk_configs()?;
    let cache = tempfile::tempdir().map_err(err)?;
    let runner = Runner::new(Some(cache.path().to_path_buf()));
    let start = Instant::now();
    let records = runner
        .run_grid(&configs, 1)
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let ckpt = cache.path().join(format!("baseline-{}.ckpt", records[0].baseline_key));
    let baseline = load_checkpoint(&ckpt).map_err(err)?;
    Ok(Desk { configs, records, baseline, wall_seconds, _cache: cache })
}

fn record_for(desk: &Desk, id: MethodId) -> Result<&ExperimentRecord, String> {
    desk.records.iter().find(|r| r.config.method.id() == id).ok_or_else(|| format!("no {id} run in the desk grid"))
}

fn desk_forgetting(desk: &Desk) -> Outcome {
    let cfg = &desk.configs[0];
    let data = load_dataset(&cfg.dataset.name, &cfg.dataset.options).map_err(err)?;
    let split = cfg.scenario.build(&data).map_err(err)?;
    if data.train.len() > 5000 || data.num_classes != 10 || cfg.scenario.kind != Scenario::FullClass {
        return Err("desk grid is not a 10-class full-class task on at most 5000 samples".into());
    }
    let mut pass = desk.wall_seconds < DESK_BUDGET_SECONDS;
    let mut parts = Vec::new();
    for id in [MethodId::Ssd, MethodId::Mislabel, MethodId::Teacher, MethodId::Scrub] {
        let r = record_for(desk, id)?.report;
        pass &= r.acc_f <= MAX_ACC_F && r.acc_r >= MIN_ACC_R;
        parts.push(format!("{} Acc_f {:.2} Acc_r {:.2}", id.display_name(), r.acc_f, r.acc_r));
    }
    let forget_acc = unlearn_core::model::evaluate_accuracy(&desk.baseline, &split.forget).map_err(err)?;
    let chance = 100.0 / data.num_classes as f64 / forget_acc;
    let retrain = record_for(desk, MethodId::Retrain)?.report;
    pass &= retrain.acc_f <= chance;
    parts.push(format!("Retrain Acc_f {:.2} (chance-level {chance:.2})", retrain.acc_f));
    Ok((
        pass,
        format!(
            "{}; limits Acc_f <= {MAX_ACC_F}, Acc_r >= {MIN_ACC_R}; {} train samples, {:.1} s",
            parts.join(", "),
            data.train.len(),
            desk.wall_seconds
        ),
    ))
}

fn speed(desk: &Desk) -> Outcome {
    let retrain = record_for(desk, MethodId::Retrain)?.report.time_seconds;
    let mut pass = retrain > 0.0;
    let mut parts = Vec::new();
    for r in desk.records.iter().filter(|r| r.config.method.id() != MethodId::Retrain) {
        let ratio = r.report.time_seconds / retrain;
        pass &= ratio < MAX_TIME_RATIO;
        parts.push(format!("{} {:.3}", r.config.method.id().display_name(), ratio));
    }
    Ok((pass, format!("time / retrain ({retrain:.2} s): {} (limit {MAX_TIME_RATIO})", parts.join(", "))))
}

fn membership(desk: &Desk) -> Outcome {
    // every side resampled from the baseline's own test losses
    let cfg = &desk.configs[0];
    let data = load_dataset(&cfg.dataset.name, &cfg.dataset.options).map_err(err)?;
    let split = cfg.scenario.build(&data).map_err(err)?;
    let test_losses = per_sample_losses(&desk.baseline, &data.test).map_err(err)?;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| *test_losses.choose(&mut rng).unwrap()).collect() };
        let attack = AttackDataset { member_losses: draw(split.retain.len()), nonmember_losses: draw(data.test.len()) };
        let target = draw(split.forget.len());
        let score = mia_score_from_losses(&attack, &target, seed).map_err(err)?;
        worst = worst.max((score - 0.5).abs());
    }
    let mut pass = worst <= MIA_NEUTRAL_TOL;
    let mut parts = Vec::new();
    for r in desk.records.iter().filter(|r| r.report.acc_f <= MAX_ACC_F) {
        pass &= r.report.mia < r.baseline_report.mia;
        parts.push(format!("{} {:.4}", r.config.method.id().display_name(), r.report.mia));
    }
    let baseline_mia = desk.records[0].baseline_report.mia;
    Ok((
        pass,
        format!(
            "identical distributions: max |mia - 0.5| = {worst:.4} over 10 seeds (tol {MIA_NEUTRAL_TOL}); \
             baseline {baseline_mia:.4} vs unlearned {}",
            parts.join(", ")
        ),
    ))
}

fn noise_ascent(desk: &Desk) -> Outcome {
    let cfg = match &record_for(desk, MethodId::Unsir)?.config.method {
        MethodConfig::Unsir(c) => c.clone(),
        _ => unreachable!(),
    };
    let target = desk.configs[0].scenario.target_class.unwrap_or(0);
    let samples = cfg.noise_samples.unwrap_or(128);
    let mut increased = 0;
    let mut gains = Vec::new();
    for seed in 0..NOISE_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = optimize_noise(&desk.baseline, target, samples, &cfg, &mut rng).map_err(err)?;
        increased += usize::from(batch.final_objective > batch.initial_objective);
        gains.push(batch.final_objective - batch.initial_objective);
    }
    let min_gain = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((
        increased as u64 == NOISE_TRIALS,
        format!(
            "loss increased in {increased}/{NOISE_TRIALS} trials ({} steps, {samples} samples), smallest gain {min_gain:.4}",
            cfg.noise_steps
        ),
    ))
}

fn max_diff(a: &[ExperimentRecord], b: &[ExperimentRecord]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.report.max_abs_diff(&y.report).max(x.baseline_report.max_abs_diff(&y.baseline_report)))
        .fold(0.0, f64::max)
}

fn determinism(desk: &Desk) -> Outcome {
    // fresh runner, no disk cache: the baseline is trained again
    let again: Vec<ExperimentRecord> = {
        let runner = Runner::new(None);
        desk.configs.iter().map(|c| runner.run_experiment(c)).collect::<Result<_, _>>().map_err(err)?
    };
    let parallel: Vec<ExperimentRecord> = Runner::new(None)
        .run_grid(&desk.configs, 4)
        .map_err(err)?
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let rerun = max_diff(&desk.records, &again);
    let grid = max_diff(&desk.records, &parallel);
    let configs_match = desk.records.iter().zip(&parallel).all(|(a, b)| a.config == b.config);
    Ok((
        rerun <= DETERMINISM_TOL && grid == 0.0 && configs_match,
        format!("rerun max diff {rerun:.3e} (tol {DETERMINISM_TOL:e}); parallelism 1 vs 4 max diff {grid:.3e}"),
    ))
}

fn decimals(cell: &str) -> Option<usize> {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let body = cell.strip_prefix('-').unwrap_or(cell);
    match body.split_once('.') {
        Some((int, frac)) if digits(int) && digits(frac) => Some(frac.len()),
        None if digits(body) => Some(0),
        _ => None,
    }
}

fn report_fidelity(desk: &Desk) -> Outcome {
    let csv = emit_report(&desk.records, ReportFormat::Csv).map_err(err)?;
    let md = emit_report(&desk.records, ReportFormat::Markdown).map_err(err)?;
    let mut lines = csv.lines();
    let header_ok = lines.next() == Some("Method,Acc_t,Acc_r,Acc_f,ZRF,MIA,Time")
        && md.lines().next() == Some("| Method | Acc_t | Acc_r | Acc_f | ZRF | MIA | Time |")
        && COLUMNS == ["Method", "Acc_t", "Acc_r", "Acc_f", "ZRF", "MIA", "Time"];
    let expected = [2, 2, 2, 4, 4, 0];
    let mut precision_ok = true;
    let mut rows = 0;
    for line in lines {
        rows += 1;
        let cells: Vec<&str> = line.rsplitn(7, ',').collect();
        precision_ok &= cells.len() == 7
            && cells[..6].iter().rev().zip(expected).all(|(c, places)| decimals(c) == Some(places));
    }
    let parsed = parse_csv_report(&csv).map_err(err)?;
    let rounded: Vec<ReportRow> = desk.records.iter().map(|r| ReportRow::from_record(r).rounded()).collect();
    let round_trip = parsed == rounded && render_rows(&parsed, ReportFormat::Csv).map_err(err)? == csv;
    let empty = emit_report(&[], ReportFormat::Csv).map_err(err)? == "Method,Acc_t,Acc_r,Acc_f,ZRF,MIA,Time\n";
    Ok((
        header_ok && precision_ok && round_trip && empty && rows == desk.records.len(),
        format!(
            "header {header_ok}, precision {precision_ok} over {rows} rows, csv round trip {round_trip}, \
             header-only when empty {empty}"
        ),
    ))
}
