//! Simplified noisy-statistics comparators. They are transparent stand-ins
//! for published private estimators, built from the Gaussian mechanism and
//! basic composition.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{normalize_prior, BayesParams, LabeledDataset};
use crate::error::{Error, Result};
use crate::kernelreg::{kernel_eval, exact_sum, KernelRegConfig, RadialKernel};
use crate::linreg::{LinRegConfig, RegressionDataset};
use crate::mechanisms::{add_gaussian_noise, clamp_abs, gaussian_mechanism_scale, project_ball, PrivacyBudget};

/// Tag used in every output that comes from this module.
pub const SIMPLIFIED_LABEL: &str = "simplified";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub budget: PrivacyBudget,
    /// Share of the budget spent on class counts (Bayes) or the denominator
    /// (kernel); the remainder goes to sums or the numerator.
    #[serde(default = "half")]
    pub split: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn half() -> f64 {
    0.5
}

fn default_steps() -> usize {
    10
}

fn default_eta() -> f64 {
    0.5
}

impl BaselineConfig {
    pub fn new(budget: PrivacyBudget) -> Self {
        Self { budget, split: half(), steps: default_steps(), eta: default_eta() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::InvalidParameter(format!("budget split must be in (0, 1), got {}", self.split)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("at least one gradient step is required".into()));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be nonnegative, got {}", self.eta)));
        }
        Ok(())
    }

    fn parts(&self) -> Result<(PrivacyBudget, PrivacyBudget)> {
        Ok((self.budget.split(self.split)?, self.budget.split(1.0 - self.split)?))
    }
}

/// Noisy class counts and per-class feature sums. Means are projected back
/// to the `r_x` ball and priors are floored at `c0`.
pub fn noisy_stats_bayes<R: Rng + ?Sized>(
    data: &LabeledDataset,
    r_x: f64,
    c0: f64,
    config: &BaselineConfig,
    rng: &mut R,
) -> Result<BayesParams> {
    config.validate()?;
    let (count_budget, sum_budget) = config.parts()?;
    let data = data.clipped(r_x);
    let (k, p, n) = (data.classes(), data.dim(), data.n());

    let counts: Vec<f64> = data.class_counts().into_iter().map(|c| c as f64).collect();
    let mut sums = vec![0.0; k * p];
    for (x, &y) in data.features().iter().zip(data.labels()) {
        for (s, v) in sums[y * p..(y + 1) * p].iter_mut().zip(x) {
            *s += v;
        }
    }
    let counts = add_gaussian_noise(&counts, gaussian_mechanism_scale(2f64.sqrt(), &count_budget), rng);
    let sums = add_gaussian_noise(&sums, gaussian_mechanism_scale(2.0 * 2f64.sqrt() * r_x, &sum_budget), rng);

    let means = (0..k)
        .map(|j| {
            if counts[j] <= 0.0 {
                vec![0.0; p]
            } else {
                let m: Vec<f64> = sums[j * p..(j + 1) * p].iter().map(|s| s / counts[j].max(1.0)).collect();
                project_ball(&m, r_x)
            }
        })
        .collect();
    let mu: Vec<f64> = counts.iter().map(|c| c / n as f64).collect();
    Ok(BayesParams { mu: normalize_prior(&mu, c0), means })
}

/// Projected gradient descent on the mean squared loss with clipped
/// per-record gradients and Gaussian noise at every step.
pub fn noisy_gd_linreg<R: Rng + ?Sized>(
    data: &RegressionDataset,
    linreg: &LinRegConfig,
    config: &BaselineConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    config.validate()?;
    let data = data.clipped(linreg.r_x, linreg.r_y());
    let (n, p) = (data.n(), data.dim());
    let clip = 4.0 * linreg.r_x * linreg.r_x * linreg.r_theta;
    let step_budget = config.budget.split(1.0 / config.steps as f64)?;
    let scale = gaussian_mechanism_scale(2.0 * clip / n as f64, &step_budget);

    let mut theta = vec![0.0; p];
    for _ in 0..config.steps {
        let mut grad = vec![0.0; p];
        for (x, &y) in data.x().iter().zip(data.y()) {
            let resid: f64 = y - x.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>();
            let g: Vec<f64> = x.iter().map(|v| -2.0 * resid * v).collect();
            for (acc, v) in grad.iter_mut().zip(project_ball(&g, clip)) {
                *acc += v / n as f64;
            }
        }
        let noisy = add_gaussian_noise(&grad, scale, rng);
        let stepped: Vec<f64> = theta.iter().zip(&noisy).map(|(t, g)| t - config.eta * g).collect();
        theta = project_ball(&stepped, linreg.r_theta);
    }
    Ok(theta)
}

/// Noisy kernel-weighted sum over a noisy degree, with the degree floored at
/// `c0 n / 2`.
pub fn noisy_ratio_kernel<R: Rng + ?Sized>(
    data: &RegressionDataset,
    kernel_config: &KernelRegConfig,
    kernel: &RadialKernel,
    config: &BaselineConfig,
    rng: &mut R,
) -> Result<f64> {
    config.validate()?;
    kernel_config.validate(kernel)?;
    let (den_budget, num_budget) = config.parts()?;
    let data = kernel_config.project(data);
    let x0 = &kernel_config.x0;
    let weights: Vec<f64> = data.x().iter().map(|x| kernel_eval(kernel, x0, x)).collect();
    let den = exact_sum(weights.iter().copied());
    let num = exact_sum(weights.iter().zip(data.y()).map(|(w, y)| w * y));

    let peak = kernel.c_k() * kernel.sigma().powi(-(kernel.dim() as i32));
    let noisy_den = add_gaussian_noise(&[den], gaussian_mechanism_scale(2.0 * peak, &den_budget), rng)[0];
    let noisy_num =
        add_gaussian_noise(&[num], gaussian_mechanism_scale(2.0 * peak * kernel_config.r_f, &num_budget), rng)[0];
    let floor = kernel_config.c0 * data.n() as f64 / 2.0;
    Ok(clamp_abs(noisy_num / noisy_den.max(floor), kernel_config.r_f))
}
