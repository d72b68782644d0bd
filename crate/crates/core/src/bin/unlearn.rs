use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unlearn_core::data::{registered_datasets, DATA_DIR_ENV};
use unlearn_core::harness::{
    load_grid, load_records, persist_records, render_rows, rows_with_baselines, ExperimentConfig, ExperimentRecord,
    ReportFormat, ReportRow, Runner, CACHE_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "unlearn", version, about = "Run and tabulate machine-unlearning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run every config of a grid file or directory.
    Grid {
        path: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Render a results table from a records file.
    Report {
        records: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Prepend a Baseline row for each distinct baseline.
        #[arg(long)]
        baseline: bool,
    },
    /// List the dataset names configs can refer to.
    Datasets,
}

#[derive(Args)]
struct RunArgs {
    /// Override every seed except the dataset's. Repeat for replicates.
    #[arg(long)]
    seed: Vec<u64>,
    /// Baseline checkpoint cache.
    #[arg(long, env = CACHE_DIR_ENV)]
    cache_dir: Option<PathBuf>,
    #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
    data_dir: PathBuf,
    /// Append records to this JSON-lines file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table printed after the run.
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> unlearn_core::Result<bool> {
    match cli.command {
        Command::Run { config, run } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = ExperimentConfig::from_toml(&text)
                .map_err(|e| unlearn_core::Error::Config(format!("{}: {e}", config.display())))?;
            execute(vec![cfg], 1, &run)
        }
        Command::Grid { path, parallelism, run } => execute(load_grid(&path)?, parallelism, &run),
        Command::Report { records, format, out, baseline } => {
            let records = load_records(&records)?;
            let rows = if baseline {
                rows_with_baselines(&records)
            } else {
                records.iter().map(ReportRow::from_record).collect()
            };
            write_output(&render_rows(&rows, format)?, out.as_deref())?;
            Ok(true)
        }
        Command::Datasets => {
            for (name, about) in registered_datasets() {
                println!("{name:18} {about}");
            }
            Ok(true)
        }
    }
}

fn execute(configs: Vec<ExperimentConfig>, parallelism: usize, args: &RunArgs) -> unlearn_core::Result<bool> {
    let configs: Vec<ExperimentConfig> = if args.seed.is_empty() {
        configs
    } else {
        configs.iter().flat_map(|c| args.seed.iter().map(|&s| c.with_seed(s))).collect()
    };
    let runner = Runner::new(args.cache_dir.clone()).with_data_dir(&args.data_dir);
    let outcomes = runner.run_grid(&configs, parallelism)?;

    let mut records: Vec<ExperimentRecord> = Vec::new();
    let mut failures = 0;
    for (cfg, outcome) in configs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                failures += 1;
                eprintln!("run `{}` failed: {e}", cfg.row_label());
            }
        }
    }
    if let Some(out) = &args.out {
        persist_records(&records, out)?;
    }
    print!("{}", render_rows(&rows_with_baselines(&records), args.format)?);
    if failures > 0 {
        eprintln!("{failures} of {} runs failed", configs.len());
    }
    Ok(failures == 0)
}

fn write_output(text: &str, out: Option<&Path>) -> unlearn_core::Result<()> {
    match out {
        Some(path) => {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir)?;
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            std::io::Write::write_all(&mut tmp, text.as_bytes())?;
            tmp.persist(path).map_err(|e| unlearn_core::Error::Io(e.error))?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
