//! Private ordinary least squares gated by the smallest eigenvalue of the
//! Gram matrix.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, min_eigenvalue, pseudo_solve, Matrix};
use crate::mechanisms::{
    clamp_abs, eptr_release, l2_norm, project_ball, BotPolicy, Dataset, EstimatorAdapter,
    PrivacyBudget, ReleaseOutcome, SensitivityLevel,
};

/// Records `(x_i, y_i)` with `x_i ∈ R^p`. Also used for kernel regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl RegressionDataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParameter("dataset must have at least one record".into()));
        }
        if x.len() != y.len() {
            return Err(Error::InvalidParameter("covariate and response counts differ".into()));
        }
        let p = x[0].len();
        if p == 0 || x.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidParameter("inconsistent covariate dimension".into()));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Projects covariates onto the `r_x` ball and clamps responses to
    /// `±r_y`.
    pub fn clipped(&self, r_x: f64, r_y: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| project_ball(v, r_x)).collect(),
            y: self.y.iter().map(|&v| clamp_abs(v, r_y)).collect(),
        }
    }

    /// Applies `f` to each covariate and clamps responses to `±r_y`.
    pub fn map_clipped(&self, f: impl Fn(&[f64]) -> Vec<f64>, r_y: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| f(v)).collect(),
            y: self.y.iter().map(|&v| clamp_abs(v, r_y)).collect(),
        }
    }

    pub fn with_record(&self, i: usize, x: Vec<f64>, y: f64) -> Self {
        let mut out = self.clone();
        out.x[i] = x;
        out.y[i] = y;
        out
    }
}

impl Dataset for RegressionDataset {
    fn len(&self) -> usize {
        self.n()
    }

    fn record_eq(&self, other: &Self, i: usize) -> bool {
        self.y[i] == other.y[i] && self.x[i] == other.x[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinRegConfig {
    pub r_x: f64,
    pub r_theta: f64,
    pub c0: f64,
    pub budget: PrivacyBudget,
}

impl LinRegConfig {
    pub fn r_y(&self) -> f64 {
        self.r_x * self.r_theta
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("R_x", self.r_x), ("R_theta", self.r_theta), ("c0", self.c0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `G = Σ x_i x_iᵀ` and `b = Σ y_i x_i`, accumulated in record order.
pub fn gram_and_moment(data: &RegressionDataset) -> (Matrix, Vec<f64>) {
    let p = data.dim();
    let mut g = Matrix::zeros(p);
    let mut b = vec![0.0; p];
    for (x, &y) in data.x.iter().zip(&data.y) {
        g.add_outer(x, 1.0);
        for (bj, xj) in b.iter_mut().zip(x) {
            *bj += y * xj;
        }
    }
    (g, b)
}

fn singular_threshold(g: &Matrix) -> f64 {
    1e-10 * g.trace() / g.dim() as f64
}

/// Unprojected OLS `G⁻¹ b`; fails on a (numerically) singular Gram matrix.
pub fn ols_unprojected(data: &RegressionDataset) -> Result<Vec<f64>> {
    let (g, b) = gram_and_moment(data);
    solve_gram(&g, &b)
}

fn solve_gram(g: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let lmin = min_eigenvalue(g)?;
    if lmin <= singular_threshold(g) {
        return Err(Error::SingularGram(lmin));
    }
    cholesky_solve(g, b).ok_or(Error::SingularGram(lmin))
}

fn solve_gram_total(g: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    match solve_gram(g, b) {
        Err(Error::SingularGram(_)) => pseudo_solve(g, b, 1e-10),
        other => other,
    }
}

/// Minimum-norm OLS; falls back to the eigendecomposition pseudo-solve when
/// the Gram matrix is singular. Diagnostic and ⊥-region use only.
pub fn ols_total(data: &RegressionDataset) -> Result<Vec<f64>> {
    let (g, b) = gram_and_moment(data);
    solve_gram_total(&g, &b)
}

/// Projected OLS `Π_{R_θ}(G⁻¹ b)`.
pub fn ols_fit(data: &RegressionDataset, r_theta: f64) -> Result<Vec<f64>> {
    Ok(project_ball(&ols_unprojected(data)?, r_theta))
}

/// `(λ_min(G) − c0·n − 2R_x²)_+ / (2R_x²)`, on covariates already clipped
/// to `R_x`.
pub fn gamma_ols(data: &RegressionDataset, r_x: f64, c0: f64) -> Result<f64> {
    let (g, _) = gram_and_moment(data);
    Ok(gamma_from_gram(&g, data.n(), r_x, c0)?)
}

fn gamma_from_gram(g: &Matrix, n: usize, r_x: f64, c0: f64) -> Result<f64> {
    let two_r2 = 2.0 * r_x * r_x;
    Ok((min_eigenvalue(g)? - c0 * n as f64 - two_r2).max(0.0) / two_r2)
}

/// `8 R_x² R_θ / (n c0)`.
pub fn alpha_ols(n: usize, config: &LinRegConfig) -> SensitivityLevel {
    let a = 8.0 * config.r_x * config.r_x * config.r_theta / (n as f64 * config.c0);
    SensitivityLevel::new(a).expect("alpha_ols is finite for positive bounds")
}

/// Adapter over datasets already clipped to `(R_x, R_x R_θ)`.
#[derive(Debug, Clone)]
pub struct LinRegAdapter {
    pub config: LinRegConfig,
    pub bot: BotPolicy,
}

impl EstimatorAdapter<RegressionDataset> for LinRegAdapter {
    fn estimate(&self, data: &RegressionDataset) -> Result<Vec<f64>> {
        // Singular designs have gamma = 0; the pseudo-solve keeps the estimate
        // defined there so a passing coin cannot hit an undefined value.
        Ok(project_ball(&ols_total(data)?, self.config.r_theta))
    }

    fn gamma(&self, data: &RegressionDataset) -> f64 {
        gamma_ols(data, self.config.r_x, self.config.c0).unwrap_or(0.0)
    }

    fn alpha(&self, data: &RegressionDataset) -> SensitivityLevel {
        alpha_ols(data.n(), &self.config)
    }

    fn bot_policy(&self) -> &BotPolicy {
        &self.bot
    }
}

pub fn linreg_eptr<R: Rng + ?Sized>(
    data: &RegressionDataset,
    config: &LinRegConfig,
    rng: &mut R,
) -> Result<ReleaseOutcome> {
    config.validate()?;
    let clipped = data.clipped(config.r_x, config.r_y());
    let adapter = LinRegAdapter { config: *config, bot: BotPolicy::Null };
    eptr_release(&adapter, &clipped, &config.budget, rng)
}

fn oracle_directions(p: usize, resolution: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for j in 0..p {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; p];
            e[j] = s;
            dirs.push(e);
        }
    }
    if p == 2 {
        for k in 0..resolution {
            let t = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
            dirs.push(vec![t.cos(), t.sin()]);
        }
    } else if p > 2 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..resolution {
            let v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = l2_norm(&v);
            dirs.push(v.into_iter().map(|c| c / norm).collect());
        }
    }
    dirs
}

/// Brute-force lower bound on the local sensitivity of projected OLS at
/// `data`: the largest change over every record index and every replacement
/// on a radial grid of the `R_x` ball (`resolution` directions × magnitudes)
/// with response in `{−R_x R_θ, 0, R_x R_θ}`.
pub fn local_sensitivity_oracle(
    data: &RegressionDataset,
    config: &LinRegConfig,
    resolution: usize,
) -> Result<f64> {
    let (n, p) = (data.n(), data.dim());
    if n * p > 500 {
        return Err(Error::TooLarge(n * p));
    }
    let resolution = resolution.max(1);
    let clipped = data.clipped(config.r_x, config.r_y());
    let (g, b) = gram_and_moment(&clipped);
    let base = project_ball(&solve_gram_total(&g, &b)?, config.r_theta);

    let mut candidates_x = vec![vec![0.0; p]];
    for d in oracle_directions(p, resolution) {
        for k in 1..=resolution {
            let r = config.r_x * k as f64 / resolution as f64;
            candidates_x.push(d.iter().map(|c| c * r).collect());
        }
    }
    let ry = config.r_y();
    let candidates_y = [-ry, 0.0, ry];

    let mut worst = 0.0f64;
    for i in 0..n {
        let (xi, yi) = (&clipped.x[i], clipped.y[i]);
        let mut g_minus = g.clone();
        g_minus.add_outer(xi, -1.0);
        let b_minus: Vec<f64> = b.iter().zip(xi).map(|(bj, xj)| bj - yi * xj).collect();
        for xc in &candidates_x {
            let mut g2 = g_minus.clone();
            g2.add_outer(xc, 1.0);
            for &yc in &candidates_y {
                let b2: Vec<f64> = b_minus.iter().zip(xc).map(|(bj, xj)| bj + yc * xj).collect();
                let theta = project_ball(&solve_gram_total(&g2, &b2)?, config.r_theta);
                let diff: Vec<f64> = theta.iter().zip(&base).map(|(a, c)| a - c).collect();
                worst = worst.max(l2_norm(&diff));
            }
        }
    }
    Ok(worst)
}
