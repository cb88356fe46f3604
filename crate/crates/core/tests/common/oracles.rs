//! Independent reference computations the library is checked against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semgap::features::FeatureRow;
use semgap::probe::{cross_entropy_loss, ProbeModel};

pub fn row(features: Vec<f64>, label: usize) -> FeatureRow {
    FeatureRow {
        features,
        label,
        group_id: String::new(),
    }
}

/// Random rows and a model with random parameters, for gradient checks.
pub fn random_problem(classes: usize, dim: usize, n: usize, seed: u64) -> (ProbeModel, Vec<FeatureRow>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..classes).map(|c| c.to_string()).collect();
    let mut model = ProbeModel::zeros(labels, dim).unwrap();
    let params: Vec<f64> = (0..model.num_parameters()).map(|_| rng.gen_range(-0.5..0.5)).collect();
    model.set_parameters(&params).unwrap();
    let rows = (0..n)
        .map(|i| row((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect(), i % classes))
        .collect();
    (model, rows)
}

/// Largest relative error between the analytic gradient and central finite
/// differences with step `h`.
pub fn max_gradient_error(model: &ProbeModel, rows: &[FeatureRow], l2: f64, h: f64) -> f64 {
    let (_, grad) = cross_entropy_loss(model, rows, l2).unwrap();
    let base = model.parameters();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (i, g) in grad.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_parameters(&p).unwrap();
        let up = cross_entropy_loss(&probe, rows, l2).unwrap().0;
        p[i] = base[i] - h;
        probe.set_parameters(&p).unwrap();
        let down = cross_entropy_loss(&probe, rows, l2).unwrap().0;
        let numeric = (up - down) / (2.0 * h);
        let err = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

/// Two uniform 2-D blobs: class 0 left of the y axis, class 1 right of it,
/// every point at least `margin` from the line x = 0.
pub fn separable_blobs(n: usize, margin: f64, seed: u64) -> Vec<FeatureRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let sign = if label == 1 { 1.0 } else { -1.0 };
            let x = sign * rng.gen_range(margin..margin + 2.0);
            let y = rng.gen_range(-2.0..2.0);
            row(vec![x, y], label)
        })
        .collect()
}

/// Best training accuracy of any 2-D linear rule `sign(cos t * x + sin t * y - b)`
/// over a grid of directions, with thresholds at every midpoint of the
/// projected points (either orientation).
pub fn best_linear_accuracy(rows: &[FeatureRow]) -> f64 {
    let n = rows.len() as f64;
    let mut best = 0.0f64;
    for step in 0..720 {
        let t = step as f64 * std::f64::consts::PI / 360.0;
        let (s, c) = t.sin_cos();
        let mut proj: Vec<(f64, usize)> = rows.iter().map(|r| (c * r.features[0] + s * r.features[1], r.label)).collect();
        proj.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cuts = vec![proj[0].0 - 1.0];
        cuts.extend(proj.windows(2).map(|w| (w[0].0 + w[1].0) / 2.0));
        cuts.push(proj[proj.len() - 1].0 + 1.0);
        for b in cuts {
            let above = proj.iter().filter(|(p, l)| (*p > b) == (*l == 1)).count() as f64;
            best = best.max(above / n).max((n - above) / n);
        }
    }
    best
}

/// The four XOR corners, `copies` times each.
pub fn xor(copies: usize) -> Vec<FeatureRow> {
    let corners = [([0.0, 0.0], 0), ([1.0, 1.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1)];
    (0..copies)
        .flat_map(|_| corners.iter().map(|(x, l)| row(x.to_vec(), *l)))
        .collect()
}

pub fn row_accuracy(model: &ProbeModel, rows: &[FeatureRow]) -> f64 {
    let correct = rows
        .iter()
        .filter(|r| model.predict(&r.features).unwrap() == r.label)
        .count();
    correct as f64 / rows.len() as f64
}
