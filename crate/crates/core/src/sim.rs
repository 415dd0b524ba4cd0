//! Synthetic data generators and the Monte-Carlo experiment runner.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::Problem;
use crate::baselines::{noisy_gd_linreg, noisy_ratio_kernel, noisy_stats_bayes, BaselineConfig};
use crate::bayes::{bayes_classify, bayes_eptr, fit_bayes_total, BayesConfig, BayesParams, LabeledDataset};
use crate::error::{Error, Result};
use crate::kernelreg::{build_higher_order_kernel, nw_eptr, nw_estimate, Domain, KernelRegConfig, RadialKernel};
use crate::linreg::{linreg_eptr, ols_total, LinRegConfig, RegressionDataset};
use crate::mechanisms::{PrivacyBudget, ReleaseOutcome};
use crate::rng::{derive_seed, stream, Stream};

pub const CSV_HEADER: &str = "problem,method,sweep_var,sweep_value,rep,seed,metric,value,released";

/// Labels are drawn from `mu`, features from `N(means[k], I)`.
pub fn gen_bayes<R: Rng + ?Sized>(n: usize, mu: &[f64], means: &[Vec<f64>], rng: &mut R) -> Result<LabeledDataset> {
    if mu.len() != means.len() || mu.is_empty() {
        return Err(Error::InvalidParameter("priors and means disagree on the class count".into()));
    }
    let labels = WeightedIndex::new(mu).map_err(|e| Error::InvalidParameter(format!("invalid priors: {e}")))?;
    let mut features = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let k = labels.sample(rng);
        features.push(means[k].iter().map(|m| m + { let z: f64 = StandardNormal.sample(rng); z }).collect::<Vec<f64>>());
        ys.push(k);
    }
    LabeledDataset::new(features, ys, mu.len())
}

/// Class means `separation · e_k`.
pub fn separated_means(classes: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|k| {
            let mut m = vec![0.0; dim];
            m[k % dim] = separation;
            m
        })
        .collect()
}

/// `(1, 1/2, …, 1/p)` scaled to unit norm.
pub fn harmonic_theta(dim: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=dim).map(|j| 1.0 / j as f64).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    raw.into_iter().map(|v| v / norm).collect()
}

/// `x ~ N(0, I)`, `y = θᵀx + N(0, noise_std²)`.
pub fn gen_linreg<R: Rng + ?Sized>(n: usize, theta: &[f64], noise_std: f64, rng: &mut R) -> Result<RegressionDataset> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = theta.iter().map(|_| StandardNormal.sample(rng)).collect();
        let e: f64 = StandardNormal.sample(rng);
        ys.push(x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() + noise_std * e);
        xs.push(x);
    }
    RegressionDataset::new(xs, ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Uniform,
    Beta { a: f64 },
}

/// Regression function of the kernel experiments.
pub fn kernel_truth(x: f64) -> f64 {
    (2.0 * PI * x).sin() + 0.5 * (4.0 * PI * x).cos()
}

pub fn gen_kernel<R: Rng + ?Sized>(n: usize, design: Design, noise_std: f64, rng: &mut R) -> Result<RegressionDataset> {
    let beta = match design {
        Design::Uniform => None,
        Design::Beta { a } => {
            Some(Beta::new(a, a).map_err(|e| Error::InvalidParameter(format!("invalid Beta shape {a}: {e}")))?)
        }
    };
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = match &beta {
            None => rng.random::<f64>(),
            Some(b) => b.sample(rng),
        };
        let e: f64 = StandardNormal.sample(rng);
        ys.push(kernel_truth(x) + noise_std * e);
        xs.push(vec![x]);
    }
    RegressionDataset::new(xs, ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    Epsilon,
    N,
    PiMin,
    A,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Epsilon => "epsilon",
            SweepVar::N => "n",
            SweepVar::PiMin => "pi_min",
            SweepVar::A => "a",
        }
    }

    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            SweepVar::Epsilon => vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            SweepVar::N => vec![250.0, 500.0, 1000.0, 2000.0, 4000.0],
            SweepVar::PiMin => vec![0.02, 0.05, 0.1, 0.2, 0.3],
            SweepVar::A => vec![0.5, 1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nonprivate,
    Eptr,
    /// The simplified noisy-statistics comparator of the problem.
    Baseline,
}

impl Method {
    pub fn name(&self, problem: Problem) -> &'static str {
        match (self, problem) {
            (Method::Nonprivate, _) => "nonprivate",
            (Method::Eptr, _) => "eptr",
            (Method::Baseline, Problem::Bayes) => "noisy_stats_simplified",
            (Method::Baseline, Problem::Linreg) => "noisy_gd_simplified",
            (Method::Baseline, Problem::Kernel) => "noisy_ratio_simplified",
        }
    }

    fn index(&self) -> u64 {
        match self {
            Method::Nonprivate => 0,
            Method::Eptr => 1,
            Method::Baseline => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BayesSettings {
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
    pub priors: Vec<f64>,
    pub r_x: f64,
    pub c0: f64,
}

impl Default for BayesSettings {
    fn default() -> Self {
        Self { classes: 3, dim: 10, separation: 3.0, priors: vec![0.75, 0.15, 0.10], r_x: 8.0, c0: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinRegSettings {
    pub dim: usize,
    pub noise_std: f64,
    /// Defaults to `2√p`.
    pub r_x: Option<f64>,
    pub r_theta: f64,
    pub c0: f64,
}

impl Default for LinRegSettings {
    fn default() -> Self {
        Self { dim: 5, noise_std: 1.0, r_x: None, r_theta: 1.0, c0: 0.25 }
    }
}

impl LinRegSettings {
    pub fn r_x(&self) -> f64 {
        self.r_x.unwrap_or(2.0 * (self.dim as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSettings {
    pub x0: f64,
    pub noise_std: f64,
    pub r_f: f64,
    pub c0: f64,
    /// Bandwidth `σ = bandwidth_scale · n^{−1/5}`.
    pub bandwidth_scale: f64,
    /// Mixture size; 1 is the plain Gaussian kernel.
    pub order: usize,
    pub design: Design,
}

impl Default for KernelSettings {
    fn default() -> Self {
        Self { x0: 0.5, noise_std: 0.2, r_f: 2.0, c0: 0.1, bandwidth_scale: 0.2, order: 1, design: Design::Uniform }
    }
}

impl KernelSettings {
    pub fn bandwidth(&self, n: usize) -> f64 {
        self.bandwidth_scale * (n as f64).powf(-0.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 500 replications.
    Full,
    /// 100 replications.
    Ci,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: Problem,
    pub sweep_var: SweepVar,
    pub grid: Vec<f64>,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub reps: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    pub master_seed: u64,
    #[serde(default)]
    pub bayes: BayesSettings,
    #[serde(default)]
    pub linreg: LinRegSettings,
    #[serde(default)]
    pub kernel: KernelSettings,
    #[serde(default = "default_baseline_steps")]
    pub baseline_steps: usize,
    #[serde(default = "default_baseline_eta")]
    pub baseline_eta: f64,
    #[serde(default = "default_baseline_split")]
    pub baseline_split: f64,
}

fn default_test_size() -> usize {
    100_000
}

fn all_methods() -> Vec<Method> {
    vec![Method::Nonprivate, Method::Eptr, Method::Baseline]
}

fn default_baseline_steps() -> usize {
    10
}

fn default_baseline_eta() -> f64 {
    0.5
}

fn default_baseline_split() -> f64 {
    0.5
}

fn default_n(problem: Problem) -> usize {
    match problem {
        Problem::Kernel => 5000,
        _ => 2000,
    }
}

impl ExperimentSpec {
    pub fn preset(problem: Problem, sweep_var: SweepVar, preset: Preset, master_seed: u64) -> Self {
        Self {
            problem,
            sweep_var,
            grid: sweep_var.default_grid(),
            n: default_n(problem),
            epsilon: 1.0,
            delta: 0.01,
            reps: match preset {
                Preset::Full => 500,
                Preset::Ci => 100,
            },
            test_size: default_test_size(),
            methods: all_methods(),
            master_seed,
            bayes: BayesSettings::default(),
            linreg: LinRegSettings::default(),
            kernel: KernelSettings::default(),
            baseline_steps: default_baseline_steps(),
            baseline_eta: default_baseline_eta(),
            baseline_split: default_baseline_split(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.grid.is_empty() {
            return bad("sweep grid is empty".into());
        }
        if self.reps == 0 {
            return bad("at least one replication is required".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return bad("sweep grid contains a non-finite value".into());
        }
        match (self.sweep_var, self.problem) {
            (SweepVar::PiMin, p) if p != Problem::Bayes => return bad("pi_min sweeps apply to bayes only".into()),
            (SweepVar::A, p) if p != Problem::Kernel => return bad("a sweeps apply to kernel only".into()),
            _ => {}
        }
        for &v in &self.grid {
            let point = self.point(v).map_err(|e| Error::Config(format!("grid value {v}: {e}")))?;
            if point.n < 2 {
                return bad(format!("sample size must be at least 2, got {}", point.n));
            }
        }
        if self.test_size == 0 && self.problem != Problem::Kernel {
            return bad("test set must be non-empty".into());
        }
        let b = &self.bayes;
        if self.problem == Problem::Bayes {
            if b.classes < 2 || b.dim == 0 || b.priors.len() != b.classes {
                return bad("bayes settings need K ≥ 2, p ≥ 1 and K priors".into());
            }
            if b.priors.iter().any(|&m| !(m >= 0.0)) || (b.priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad("bayes priors must be a probability vector".into());
            }
        }
        if self.problem == Problem::Linreg && self.linreg.dim == 0 {
            return bad("linreg dimension must be positive".into());
        }
        if self.problem == Problem::Kernel && !(1..=12).contains(&self.kernel.order) {
            return bad("kernel order must be in 1..=12".into());
        }
        BaselineConfig {
            budget: PrivacyBudget::new(self.epsilon.max(1e-12), self.delta).map_err(|e| Error::Config(e.to_string()))?,
            split: self.baseline_split,
            steps: self.baseline_steps,
            eta: self.baseline_eta,
        }
        .validate()
        .map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolves the parameters of one grid point.
    pub fn point(&self, value: f64) -> Result<GridPoint> {
        let mut p = GridPoint {
            n: self.n,
            budget: PrivacyBudget::new(self.epsilon, self.delta)?,
            priors: self.bayes.priors.clone(),
            design: self.kernel.design,
        };
        match self.sweep_var {
            SweepVar::Epsilon => p.budget = PrivacyBudget::new(value, self.delta)?,
            SweepVar::N => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("sample size {value} is not a positive integer")));
                }
                p.n = value as usize;
            }
            SweepVar::PiMin => p.priors = min_prior_vector(self.bayes.classes, value)?,
            SweepVar::A => {
                if !(value > 0.0) {
                    return Err(Error::Config(format!("Beta shape must be positive, got {value}")));
                }
                p.design = Design::Beta { a: value };
            }
        }
        Ok(p)
    }
}

/// `(1 − (K−1)π, π, …, π)`: every minority class gets prior `π`.
pub fn min_prior_vector(classes: usize, pi_min: f64) -> Result<Vec<f64>> {
    if !(pi_min > 0.0 && pi_min <= 1.0 / classes as f64) {
        return Err(Error::Config(format!("pi_min must be in (0, 1/K], got {pi_min}")));
    }
    let mut mu = vec![pi_min; classes];
    mu[0] = 1.0 - (classes - 1) as f64 * pi_min;
    Ok(mu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub budget: PrivacyBudget,
    pub priors: Vec<f64>,
    pub design: Design,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub method: String,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub rep: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub released: bool,
}

/// Balanced error: mean over classes present in the test set of the
/// per-class misclassification rate.
pub fn balanced_error(params: &BayesParams, test: &LabeledDataset) -> f64 {
    let k = test.classes();
    let mut wrong = vec![0usize; k];
    let mut total = vec![0usize; k];
    for (x, &y) in test.features().iter().zip(test.labels()) {
        total[y] += 1;
        wrong[y] += usize::from(bayes_classify(params, x) != y);
    }
    let rates: Vec<f64> = (0..k).filter(|&c| total[c] > 0).map(|c| wrong[c] as f64 / total[c] as f64).collect();
    rates.iter().sum::<f64>() / rates.len() as f64
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn test_mse(theta: &[f64], test: &RegressionDataset) -> f64 {
    let total: f64 = test
        .x()
        .iter()
        .zip(test.y())
        .map(|(x, y)| {
            let pred: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
            (y - pred) * (y - pred)
        })
        .sum();
    total / test.n() as f64
}

struct RepOutput {
    method: Method,
    metrics: Vec<(&'static str, f64)>,
    released: bool,
}

fn baseline_config(spec: &ExperimentSpec, budget: PrivacyBudget) -> BaselineConfig {
    BaselineConfig { budget, split: spec.baseline_split, steps: spec.baseline_steps, eta: spec.baseline_eta }
}

fn method_stream(seed: u64, m: Method) -> Stream {
    stream(seed, &[2, m.index()])
}

fn run_bayes(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<Vec<RepOutput>> {
    let s = &spec.bayes;
    let means = separated_means(s.classes, s.dim, s.separation);
    let train = gen_bayes(point.n, &point.priors, &means, &mut stream(seed, &[0]))?;
    let test = gen_bayes(spec.test_size, &point.priors, &means, &mut stream(seed, &[1]))?;
    let config = BayesConfig { r_x: s.r_x, c0: s.c0, budget: point.budget };
    spec.methods
        .iter()
        .map(|&m| {
            let mut rng = method_stream(seed, m);
            let (params, released) = match m {
                Method::Nonprivate => (fit_bayes_total(&train), true),
                Method::Eptr => match bayes_eptr(&train, &config, &mut rng)? {
                    ReleaseOutcome::Released(p) => (p, true),
                    _ => (BayesParams::uninformative(s.classes, s.dim), false),
                },
                Method::Baseline => {
                    (noisy_stats_bayes(&train, s.r_x, s.c0, &baseline_config(spec, point.budget), &mut rng)?, true)
                }
            };
            Ok(RepOutput { method: m, metrics: vec![("balanced_error", balanced_error(&params, &test))], released })
        })
        .collect()
}

fn run_linreg(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<Vec<RepOutput>> {
    let s = &spec.linreg;
    let theta = harmonic_theta(s.dim);
    let train = gen_linreg(point.n, &theta, s.noise_std, &mut stream(seed, &[0]))?;
    let test = gen_linreg(spec.test_size, &theta, s.noise_std, &mut stream(seed, &[1]))?;
    let config = LinRegConfig { r_x: s.r_x(), r_theta: s.r_theta, c0: s.c0, budget: point.budget };
    spec.methods
        .iter()
        .map(|&m| {
            let mut rng = method_stream(seed, m);
            let (est, released) = match m {
                Method::Nonprivate => (ols_total(&train)?, true),
                Method::Eptr => match linreg_eptr(&train, &config, &mut rng)? {
                    ReleaseOutcome::Released(t) => (t, true),
                    _ => (vec![0.0; s.dim], false),
                },
                Method::Baseline => (noisy_gd_linreg(&train, &config, &baseline_config(spec, point.budget), &mut rng)?, true),
            };
            Ok(RepOutput {
                method: m,
                metrics: vec![("param_error", sq_dist(&est, &theta)), ("test_mse", test_mse(&est, &test))],
                released,
            })
        })
        .collect()
}

fn run_kernel(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<Vec<RepOutput>> {
    let s = &spec.kernel;
    let train = gen_kernel(point.n, point.design, s.noise_std, &mut stream(seed, &[0]))?;
    let kernel: RadialKernel = build_higher_order_kernel(s.order, s.bandwidth(point.n), 1)?;
    let config = KernelRegConfig { x0: vec![s.x0], r_f: s.r_f, c0: s.c0, budget: point.budget, domain: Domain::UnitBox };
    let truth = kernel_truth(s.x0);
    spec.methods
        .iter()
        .map(|&m| {
            let mut rng = method_stream(seed, m);
            let (est, released) = match m {
                Method::Nonprivate => {
                    let projected = config.project(&train);
                    (nw_estimate(&config.x0, &projected, &kernel, config.r_f).unwrap_or(0.0), true)
                }
                Method::Eptr => match nw_eptr(&train, &config, &kernel, &mut rng)? {
                    ReleaseOutcome::Released(v) => (v, true),
                    _ => (0.0, false),
                },
                Method::Baseline => {
                    (noisy_ratio_kernel(&train, &config, &kernel, &baseline_config(spec, point.budget), &mut rng)?, true)
                }
            };
            Ok(RepOutput { method: m, metrics: vec![("sq_error", (est - truth) * (est - truth))], released })
        })
        .collect()
}

/// Runs every grid point and replication. Replication `r` at grid index `g`
/// uses the seed `derive_seed(master_seed, [g, r])`; rows come out ordered by
/// grid index, replication, method and metric whatever the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.grid.len()).flat_map(|g| (0..spec.reps).map(move |r| (g, r))).collect();
    let blocks: Vec<Vec<ResultRow>> = jobs
        .into_par_iter()
        .map(|(g, rep)| {
            let value = spec.grid[g];
            let point = spec.point(value)?;
            let seed = derive_seed(spec.master_seed, &[g as u64, rep as u64]);
            let outputs = match spec.problem {
                Problem::Bayes => run_bayes(spec, &point, seed)?,
                Problem::Linreg => run_linreg(spec, &point, seed)?,
                Problem::Kernel => run_kernel(spec, &point, seed)?,
            };
            let mut rows = Vec::new();
            for out in outputs {
                for (metric, v) in out.metrics {
                    if !v.is_finite() {
                        return Err(Error::InvalidParameter(format!("non-finite {metric} at grid value {value}")));
                    }
                    rows.push(ResultRow {
                        problem: spec.problem.name().into(),
                        method: out.method.name(spec.problem).into(),
                        sweep_var: spec.sweep_var.name().into(),
                        sweep_value: value,
                        rep,
                        seed,
                        metric: metric.into(),
                        value: v,
                        released: out.released,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Rows as CSV text with the fixed header. Floats use the shortest
/// round-trip representation.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.problem, r.method, r.sweep_var, r.sweep_value, r.rep, r.seed, r.metric, r.value, r.released
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub method: String,
    pub metric: String,
    pub sweep_value: f64,
    pub reps: usize,
    pub mean: f64,
    pub median: f64,
    pub std_error: f64,
    pub release_fraction: f64,
}

/// Mean, median, standard error and release fraction per
/// `(sweep value, method, metric)`, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<Summary> {
    let mut keys: Vec<(f64, String, String)> = Vec::new();
    for r in rows {
        let key = (r.sweep_value, r.method.clone(), r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(v, method, metric)| {
            let sel: Vec<&ResultRow> =
                rows.iter().filter(|r| r.sweep_value == v && r.method == method && r.metric == metric).collect();
            let mut values: Vec<f64> = sel.iter().map(|r| r.value).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = if values.len() > 1 { values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            values.sort_by(f64::total_cmp);
            let mid = values.len() / 2;
            let median = if values.len() % 2 == 1 { values[mid] } else { 0.5 * (values[mid - 1] + values[mid]) };
            Summary {
                method,
                metric,
                sweep_value: v,
                reps: values.len(),
                mean,
                median,
                std_error: (var / n).sqrt(),
                release_fraction: sel.iter().filter(|r| r.released).count() as f64 / n,
            }
        })
        .collect()
}
