//! Deterministic generators that stand in for image archives in offline runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::LabeledExample;

/// Isotropic Gaussian blobs with class centers spaced evenly on a circle of
/// radius 5 in the first two coordinates.
pub(super) fn blobs(
    classes: usize,
    per_class: usize,
    test_per_class: usize,
    dim: usize,
    noise: f64,
    seed: u64,
) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|c| {
            let mut center = vec![0.0; dim];
            let angle = std::f64::consts::TAU * c as f64 / classes as f64;
            if dim == 1 {
                center[0] = 5.0 * c as f64;
            } else {
                center[0] = 5.0 * angle.cos();
                center[1] = 5.0 * angle.sin();
            }
            center
        })
        .collect();
    let normal = Normal::new(0.0, noise).expect("noise is validated by the registry");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| {
        let mut out = Vec::with_capacity(count * classes);
        for _ in 0..count {
            for (label, center) in centers.iter().enumerate() {
                let features = center.iter().map(|c| c + normal.sample(&mut rng)).collect();
                out.push(LabeledExample::new(features, label));
            }
        }
        out
    };
    let train = draw(per_class);
    let test = draw(test_per_class);
    (train, test)
}

/// A line segment in glyph coordinates.
type Stroke = ((f64, f64), (f64, f64));

fn render(strokes: &[Stroke], side: usize, shift: (f64, f64)) -> Vec<f64> {
    let mut img = vec![0.0; side * side];
    for (row, col) in (0..side).flat_map(|r| (0..side).map(move |c| (r, c))) {
        let p = (col as f64 - shift.0, row as f64 - shift.1);
        let mut best = f64::INFINITY;
        for &((ax, ay), (bx, by)) in strokes {
            let (dx, dy) = (bx - ax, by - ay);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 { 0.0 } else { (((p.0 - ax) * dx + (p.1 - ay) * dy) / len2).clamp(0.0, 1.0) };
            let (qx, qy) = (ax + t * dx - p.0, ay + t * dy - p.1);
            best = best.min((qx * qx + qy * qy).sqrt());
        }
        img[row * side + col] = (1.0 - best / 1.2).max(0.0);
    }
    img
}

/// Grayscale `side × side` glyphs: each class is a fixed set of three random
/// strokes, and each sample is that glyph jittered by a sub-pixel shift, a
/// contrast change and additive pixel noise, clipped to [0, 1].
pub(super) fn glyphs(
    classes: usize,
    per_class: usize,
    test_per_class: usize,
    side: usize,
    noise: f64,
    seed: u64,
) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let mut proto_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let lo = side as f64 * 0.15;
    let hi = side as f64 * 0.85;
    let prototypes: Vec<Vec<Stroke>> = (0..classes)
        .map(|_| {
            (0..3)
                .map(|_| {
                    let a = (proto_rng.random_range(lo..hi), proto_rng.random_range(lo..hi));
                    let b = (proto_rng.random_range(lo..hi), proto_rng.random_range(lo..hi));
                    (a, b)
                })
                .collect()
        })
        .collect();
    let normal = Normal::new(0.0, noise).expect("noise is validated by the registry");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| {
        let mut out = Vec::with_capacity(count * classes);
        for _ in 0..count {
            for (label, strokes) in prototypes.iter().enumerate() {
                let shift = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let contrast = rng.random_range(0.6..1.2);
                let features = render(strokes, side, shift)
                    .into_iter()
                    .map(|v| (contrast * v + normal.sample(&mut rng)).clamp(0.0, 1.0))
                    .collect();
                out.push(LabeledExample::new(features, label));
            }
        }
        out
    };
    let train = draw(per_class);
    let test = draw(test_per_class);
    (train, test)
}
