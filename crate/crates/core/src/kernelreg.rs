//! Private Nadaraya–Watson regression at a single query point, gated by the
//! kernel degree at that point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_partial_pivot;
use crate::linreg::RegressionDataset;
use crate::mechanisms::{
    clamp_abs, eptr_release, BotPolicy, EstimatorAdapter, PrivacyBudget, ReleaseOutcome,
    SensitivityLevel,
};

const MAX_ORDER: usize = 12;

/// Mixture of isotropic Gaussians `Σ a_i φ_{iσ}` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialKernel {
    mixture: Vec<(f64, u32)>,
    sigma: f64,
    dim: usize,
    c_k: f64,
}

impl RadialKernel {
    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        Self::from_mixture(vec![(1.0, 1)], sigma, dim)
    }

    pub fn from_mixture(mixture: Vec<(f64, u32)>, sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {sigma}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("kernel dimension must be positive".into()));
        }
        if mixture.is_empty() || mixture.iter().any(|&(a, i)| i == 0 || !a.is_finite()) {
            return Err(Error::InvalidParameter("invalid mixture components".into()));
        }
        let total: f64 = mixture.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}")));
        }
        let peak = (2.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0);
        let c_k = mixture.iter().map(|&(a, i)| a.abs() * peak * (i as f64).powi(-(dim as i32))).sum();
        Ok(Self { mixture, sigma, dim, c_k })
    }

    pub fn mixture(&self) -> &[(f64, u32)] {
        &self.mixture
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sup bound with `|K_σ| ≤ σ^{−d} C_K`.
    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::from_mixture(self.mixture.clone(), sigma, self.dim)
    }

    fn max_multiplier(&self) -> u32 {
        self.mixture.iter().map(|c| c.1).max().unwrap_or(1)
    }

    /// Kernel value as a function of the distance `r`.
    pub fn profile(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        self.mixture
            .iter()
            .map(|&(a, i)| {
                let s = i as f64 * self.sigma;
                a * (2.0 * std::f64::consts::PI * s * s).powf(-d / 2.0) * (-r * r / (2.0 * s * s)).exp()
            })
            .sum()
    }

    /// Largest `|σ^d K_σ(r)|` over a fine radial grid. Always `≤ c_k()`.
    pub fn c_k_scan(&self, points: usize) -> f64 {
        let r_max = 10.0 * self.max_multiplier() as f64 * self.sigma;
        let scale = self.sigma.powi(self.dim as i32);
        (0..=points)
            .map(|k| (scale * self.profile(r_max * k as f64 / points as f64)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn kernel_eval(kernel: &RadialKernel, x: &[f64], x_prime: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), x_prime.len());
    let r2: f64 = x.iter().zip(x_prime).map(|(a, b)| (a - b) * (a - b)).sum();
    kernel.profile(r2.sqrt())
}

/// Correctly rounded sum of `values` (Shewchuk partials with the final
/// half-way correction). The result does not depend on input order.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for idx in 0..partials.len() {
            let mut y = partials[idx];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    let Some(mut hi) = partials.pop() else { return 0.0 };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

/// `Σ_i K_σ(x0, x_i)`.
pub fn degree(x0: &[f64], data: &RegressionDataset, kernel: &RadialKernel) -> f64 {
    exact_sum(data.x().iter().map(|x| kernel_eval(kernel, x0, x)))
}

/// Clamped ratio `Σ K_σ(x0,x_i) y_i / Σ K_σ(x0,x_i)`.
pub fn nw_estimate(x0: &[f64], data: &RegressionDataset, kernel: &RadialKernel, r_f: f64) -> Result<f64> {
    let weights: Vec<f64> = data.x().iter().map(|x| kernel_eval(kernel, x0, x)).collect();
    let den = exact_sum(weights.iter().copied());
    if den == 0.0 {
        return Err(Error::ZeroDegree);
    }
    let num = exact_sum(weights.iter().zip(data.y()).map(|(w, y)| w * y));
    Ok(clamp_abs(num / den, r_f))
}

/// Covariate domain used before estimation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Clamp each coordinate into `[0, 1]`.
    #[default]
    UnitBox,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRegConfig {
    pub x0: Vec<f64>,
    pub r_f: f64,
    pub c0: f64,
    pub budget: PrivacyBudget,
    #[serde(default)]
    pub domain: Domain,
}

impl KernelRegConfig {
    pub fn validate(&self, kernel: &RadialKernel) -> Result<()> {
        if self.x0.len() != kernel.dim() {
            return Err(Error::InvalidParameter("query point dimension differs from kernel".into()));
        }
        for (name, v) in [("R_f", self.r_f), ("c0", self.c0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn project(&self, data: &RegressionDataset) -> RegressionDataset {
        match self.domain {
            Domain::UnitBox => data.map_clipped(|v| v.iter().map(|c| c.clamp(0.0, 1.0)).collect(), self.r_f),
            Domain::Unbounded => data.map_clipped(|v| v.to_vec(), self.r_f),
        }
    }
}

fn peak_bound(kernel: &RadialKernel) -> f64 {
    kernel.sigma().powi(-(kernel.dim() as i32)) * kernel.c_k()
}

/// `(degree − c0 n − 2σ^{−d}C_K)_+ / (2σ^{−d}C_K)`.
pub fn gamma_kernel(data: &RegressionDataset, config: &KernelRegConfig, kernel: &RadialKernel) -> f64 {
    let two_b = 2.0 * peak_bound(kernel);
    (degree(&config.x0, data, kernel) - config.c0 * data.n() as f64 - two_b).max(0.0) / two_b
}

/// `4 R_f C_K / (σ^d c0 n)`.
pub fn alpha_kernel(n: usize, config: &KernelRegConfig, kernel: &RadialKernel) -> SensitivityLevel {
    let a = 4.0 * config.r_f * peak_bound(kernel) / (config.c0 * n as f64);
    SensitivityLevel::new(a).expect("alpha_kernel is finite for positive bounds")
}

/// Adapter over datasets already projected into the domain.
#[derive(Debug, Clone)]
pub struct KernelAdapter {
    pub config: KernelRegConfig,
    pub kernel: RadialKernel,
    pub bot: BotPolicy,
}

impl EstimatorAdapter<RegressionDataset> for KernelAdapter {
    fn estimate(&self, data: &RegressionDataset) -> Result<Vec<f64>> {
        match nw_estimate(&self.config.x0, data, &self.kernel, self.config.r_f) {
            // only reachable when gamma = 0
            Err(Error::ZeroDegree) => Ok(vec![0.0]),
            other => other.map(|v| vec![v]),
        }
    }

    fn gamma(&self, data: &RegressionDataset) -> f64 {
        gamma_kernel(data, &self.config, &self.kernel)
    }

    fn alpha(&self, data: &RegressionDataset) -> SensitivityLevel {
        alpha_kernel(data.n(), &self.config, &self.kernel)
    }

    fn bot_policy(&self) -> &BotPolicy {
        &self.bot
    }
}

pub fn nw_eptr<R: Rng + ?Sized>(
    data: &RegressionDataset,
    config: &KernelRegConfig,
    kernel: &RadialKernel,
    rng: &mut R,
) -> Result<ReleaseOutcome<f64>> {
    config.validate(kernel)?;
    let projected = config.project(data);
    let adapter = KernelAdapter { config: config.clone(), kernel: kernel.clone(), bot: BotPolicy::Null };
    Ok(eptr_release(&adapter, &projected, &config.budget, rng)?.map(|v| v[0]))
}

/// Order-`2s` kernel `Σ_{i=1}^s a_i φ_{iσ}` whose even moments `2..2s−2`
/// vanish.
pub fn build_higher_order_kernel(s: usize, sigma: f64, dim: usize) -> Result<RadialKernel> {
    if s == 0 || s > MAX_ORDER {
        return Err(Error::OutOfRange(format!("kernel order parameter s must be in 1..={MAX_ORDER}, got {s}")));
    }
    let mut rows = Vec::with_capacity(s);
    for k in 0..s {
        rows.push((1..=s).map(|i| (i as f64).powi(2 * k as i32)).collect::<Vec<_>>());
    }
    let mut rhs = vec![0.0; s];
    rhs[0] = 1.0;
    let vander = crate::linalg::Matrix::from_rows(&rows);
    let a = solve_partial_pivot(&vander, &rhs).ok_or(Error::IllConditioned(f64::INFINITY))?;
    let residual = rows
        .iter()
        .zip(&rhs)
        .map(|(row, r)| (row.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>() - r).abs())
        .fold(0.0, f64::max);
    if !(residual <= 1e-10) {
        return Err(Error::IllConditioned(residual));
    }
    RadialKernel::from_mixture(a.into_iter().zip(1..=s as u32).collect(), sigma, dim)
}

fn double_factorial_odd(j: u32) -> f64 {
    // (j-1)!! for even j
    (1..j).step_by(2).map(|k| k as f64).product()
}

/// `∫ u^j K_σ(u) du` of the one-dimensional profile, in closed form.
pub fn kernel_moment(kernel: &RadialKernel, j: u32) -> f64 {
    if j % 2 == 1 {
        return 0.0;
    }
    let df = double_factorial_odd(j);
    kernel
        .mixture()
        .iter()
        .map(|&(a, i)| a * (i as f64 * kernel.sigma()).powi(j as i32) * df)
        .sum()
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod estimate and error bound; the bound is floored at the roundoff
/// level of `∫|f|` on the panel.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, bool) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    let mut abs = GK_WEIGHTS[7] * fc.abs();
    for k in 0..7 {
        let x = h * GK_NODES[k];
        let (lo, hi) = (f(c - x), f(c + x));
        kron += GK_WEIGHTS[k] * (lo + hi);
        abs += GK_WEIGHTS[k] * (lo.abs() + hi.abs());
        if k % 2 == 1 {
            gauss += G_WEIGHTS[k / 2] * (lo + hi);
        }
    }
    let err = ((kron - gauss) * h).abs();
    let floor = 50.0 * f64::EPSILON * abs * h.abs();
    (kron * h, err.max(floor), err <= floor)
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`, starting
/// from `panels` equal subintervals so narrow features are not missed.
/// Panels whose error is at roundoff level are not split further.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, abs_tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err, at_roundoff) = gk15(f, a, b);
        if err <= tol || at_roundoff || depth == 0 {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, tol / 2.0, depth - 1) + recurse(f, m, b, tol / 2.0, depth - 1)
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let tol = abs_tol / panels as f64;
    (0..panels).map(|k| recurse(&f, a + k as f64 * h, a + (k + 1) as f64 * h, tol, 30)).sum()
}

/// Quadrature cross-check of `kernel_moment` over `[−50σ_max, 50σ_max]`.
pub fn kernel_moment_quadrature(kernel: &RadialKernel, j: u32) -> f64 {
    let reach = 50.0 * kernel.max_multiplier() as f64 * kernel.sigma();
    let one_d = RadialKernel {
        dim: 1,
        ..kernel.clone()
    };
    integrate(|u| u.powi(j as i32) * one_d.profile(u.abs()), -reach, reach, 400, 1e-12)
}
