//! Independent oracles and random fixtures shared by the integration tests
//! and the acceptance suite.
#![allow(dead_code)]

use eptr_core::bayes::{fit_bayes_total, LabeledDataset};
use eptr_core::kernelreg::{nw_estimate, KernelRegConfig, RadialKernel};
use eptr_core::linreg::RegressionDataset;
use eptr_core::mechanisms::{l2_norm, project_ball};
use eptr_core::rng::Stream;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut Stream) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform point in the radius-`r` ball of `R^p`.
pub fn uniform_ball(rng: &mut Stream, p: usize, r: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..p).map(|_| normal(rng)).collect();
    let norm = l2_norm(&dir).max(1e-300);
    let radius = r * rng.random::<f64>().powf(1.0 / p as f64);
    dir.into_iter().map(|c| c * radius / norm).collect()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Random labelled dataset with features inside the `r_x` ball.
pub fn random_labeled(rng: &mut Stream, n: usize, classes: usize, p: usize, r_x: f64) -> LabeledDataset {
    let x = (0..n).map(|_| uniform_ball(rng, p, r_x)).collect();
    let y = (0..n).map(|_| rng.random_range(0..classes)).collect();
    LabeledDataset::new(x, y, classes).unwrap()
}

/// Replaces a uniformly chosen record by a uniform feasible record.
pub fn replace_labeled(rng: &mut Stream, d: &LabeledDataset, r_x: f64) -> LabeledDataset {
    let i = rng.random_range(0..d.n());
    let x = uniform_ball(rng, d.dim(), r_x);
    let y = rng.random_range(0..d.classes());
    d.with_record(i, x, y)
}

pub fn random_regression(rng: &mut Stream, n: usize, p: usize, r_x: f64, r_y: f64) -> RegressionDataset {
    let x = (0..n).map(|_| uniform_ball(rng, p, r_x)).collect();
    let y = (0..n).map(|_| rng.random_range(-r_y..=r_y)).collect();
    RegressionDataset::new(x, y).unwrap()
}

pub fn replace_regression(rng: &mut Stream, d: &RegressionDataset, r_x: f64, r_y: f64) -> RegressionDataset {
    let i = rng.random_range(0..d.n());
    let x = uniform_ball(rng, d.dim(), r_x);
    let y = rng.random_range(-r_y..=r_y);
    d.with_record(i, x, y)
}

/// Scalar covariates in `[0, 1]`.
pub fn replace_scalar(rng: &mut Stream, d: &RegressionDataset, r_y: f64) -> RegressionDataset {
    let i = rng.random_range(0..d.n());
    let x = rng.random::<f64>();
    let y = rng.random_range(-r_y..=r_y);
    d.with_record(i, vec![x], y)
}

/// Replacement feature candidates: the `±r_x` corners on each axis, the
/// origin, then seeded points of the ball up to 26 in total.
pub fn bayes_candidates(rng: &mut Stream, p: usize, r_x: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; p]];
    for j in 0..p {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; p];
            e[j] = s * r_x;
            out.push(e);
        }
    }
    while out.len() < 26 {
        out.push(uniform_ball(rng, p, r_x));
    }
    out.truncate(26);
    out
}

/// Largest change of the flattened naive-Bayes fit over every record, every
/// label and the 26 feature candidates.
pub fn bayes_sensitivity_oracle(rng: &mut Stream, d: &LabeledDataset, r_x: f64) -> f64 {
    let base = fit_bayes_total(d).flatten();
    let cands = bayes_candidates(rng, d.dim(), r_x);
    let mut worst = 0.0f64;
    for i in 0..d.n() {
        for k in 0..d.classes() {
            for c in &cands {
                let other = fit_bayes_total(&d.with_record(i, c.clone(), k)).flatten();
                worst = worst.max(diff_norm(&base, &other));
            }
        }
    }
    worst
}

/// Largest change of the clamped Nadaraya–Watson estimate over `candidates`
/// random replacements. Half of them put the new record on the query point
/// with an extreme response; the replaced record is chosen at random or as
/// the heaviest one.
pub fn kernel_sensitivity_oracle(
    rng: &mut Stream,
    d: &RegressionDataset,
    config: &KernelRegConfig,
    kernel: &RadialKernel,
    candidates: usize,
) -> f64 {
    let base = nw_estimate(&config.x0, d, kernel, config.r_f).unwrap();
    let heaviest = (0..d.n())
        .max_by(|&a, &b| {
            let da = diff_norm(&d.x()[a], &config.x0);
            let db = diff_norm(&d.x()[b], &config.x0);
            db.total_cmp(&da)
        })
        .unwrap();
    let mut worst = 0.0f64;
    for c in 0..candidates {
        let i = if c % 4 == 0 { heaviest } else { rng.random_range(0..d.n()) };
        let (x, y) = if c % 2 == 0 {
            (config.x0.clone(), if rng.random::<bool>() { config.r_f } else { -config.r_f })
        } else {
            (vec![rng.random::<f64>()], rng.random_range(-config.r_f..=config.r_f))
        };
        let other = nw_estimate(&config.x0, &d.with_record(i, x, y), kernel, config.r_f).unwrap();
        worst = worst.max((other - base).abs());
    }
    worst
}

/// Smallest eigenvalue of a symmetric 2×2 matrix `[[a, b], [b, c]]`.
pub fn min_eig_2x2(a: f64, b: f64, c: f64) -> f64 {
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    mid - rad
}

/// Smallest eigenvalue of a symmetric 3×3 matrix by the trigonometric
/// solution of the characteristic cubic.
pub fn min_eig_3x3(m: [[f64; 3]; 3]) -> f64 {
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        return m[0][0].min(m[1][1]).min(m[2][2]);
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

/// Right side of the projection Lipschitz lemma.
pub fn projection_lemma_holds(v: &[f64], w: &[f64], a: f64) -> bool {
    let lhs = diff_norm(&project_ball(v, a), &project_ball(w, a));
    let factor = 2.0 / (l2_norm(v) / a).max(1.0);
    lhs <= factor * diff_norm(v, w) * (1.0 + 1e-12) + 1e-15
}
