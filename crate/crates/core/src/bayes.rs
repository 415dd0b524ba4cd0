//! Private Gaussian naive-Bayes classification with identity class
//! covariances.
//!
//! The released vector is flattened as `(μ_1..μ_K, m_1, …, m_K)`, row-major.
//! Labels are 0-based internally; CSV input uses 1..K.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{
    eptr_release, project_ball, BotPolicy, Dataset, EstimatorAdapter, PrivacyBudget,
    ReleaseOutcome, SensitivityLevel,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: usize,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidParameter("dataset must have at least one record".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::InvalidParameter("feature and label counts differ".into()));
        }
        if classes == 0 {
            return Err(Error::InvalidParameter("need at least one class".into()));
        }
        let p = features[0].len();
        if features.iter().any(|x| x.len() != p) {
            return Err(Error::InvalidParameter("inconsistent feature dimension".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self { features, labels, classes })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Copy with every feature vector projected onto the `r_x` ball.
    pub fn clipped(&self, r_x: f64) -> Self {
        Self {
            features: self.features.iter().map(|x| project_ball(x, r_x)).collect(),
            labels: self.labels.clone(),
            classes: self.classes,
        }
    }

    /// Copy with record `i` replaced.
    pub fn with_record(&self, i: usize, x: Vec<f64>, y: usize) -> Self {
        let mut out = self.clone();
        out.features[i] = x;
        out.labels[i] = y;
        out
    }
}

impl Dataset for LabeledDataset {
    fn len(&self) -> usize {
        self.n()
    }

    fn record_eq(&self, other: &Self, i: usize) -> bool {
        self.labels[i] == other.labels[i] && self.features[i] == other.features[i]
    }
}

/// Class priors and class means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesParams {
    pub mu: Vec<f64>,
    pub means: Vec<Vec<f64>>,
}

impl BayesParams {
    pub fn classes(&self) -> usize {
        self.mu.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.mu.clone();
        for m in &self.means {
            v.extend_from_slice(m);
        }
        v
    }

    pub fn unflatten(v: &[f64], classes: usize, dim: usize) -> Self {
        assert_eq!(v.len(), classes + classes * dim, "flattened length mismatch");
        let mu = v[..classes].to_vec();
        let means = v[classes..].chunks(dim.max(1)).take(classes).map(|c| c[..dim].to_vec()).collect();
        Self { mu, means }
    }

    /// Uniform priors and zero means: the fallback predictor.
    pub fn uninformative(classes: usize, dim: usize) -> Self {
        Self {
            mu: vec![1.0 / classes as f64; classes],
            means: vec![vec![0.0; dim]; classes],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesConfig {
    pub r_x: f64,
    pub c0: f64,
    pub budget: PrivacyBudget,
}

impl BayesConfig {
    pub fn validate(&self, classes: usize) -> Result<()> {
        if !(self.r_x > 0.0 && self.r_x.is_finite()) {
            return Err(Error::InvalidParameter(format!("R_x must be positive, got {}", self.r_x)));
        }
        if !(self.c0 > 0.0 && self.c0 < 1.0 / classes as f64) {
            return Err(Error::InvalidParameter(format!(
                "c0 must lie in (0, 1/K) = (0, {}), got {}",
                1.0 / classes as f64,
                self.c0
            )));
        }
        Ok(())
    }
}

fn class_sums(data: &LabeledDataset) -> (Vec<usize>, Vec<Vec<f64>>) {
    let p = data.dim();
    let mut counts = vec![0usize; data.classes];
    let mut sums = vec![vec![0.0; p]; data.classes];
    for (x, &y) in data.features.iter().zip(&data.labels) {
        counts[y] += 1;
        for (s, v) in sums[y].iter_mut().zip(x) {
            *s += v;
        }
    }
    (counts, sums)
}

/// Sample frequencies and class means. Fails if a class is empty.
pub fn fit_bayes(data: &LabeledDataset) -> Result<BayesParams> {
    let (counts, _) = class_sums(data);
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(k));
    }
    Ok(fit_bayes_total(data))
}

/// As [`fit_bayes`], but an empty class gets a zero mean.
pub fn fit_bayes_total(data: &LabeledDataset) -> BayesParams {
    let n = data.n() as f64;
    let (counts, sums) = class_sums(data);
    let mu = counts.iter().map(|&c| c as f64 / n).collect();
    let means = counts
        .iter()
        .zip(sums)
        .map(|(&c, s)| {
            if c == 0 {
                vec![0.0; s.len()]
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect();
    BayesParams { mu, means }
}

/// `(min_k |I_k| − c0·n − 1)_+`.
pub fn gamma_bayes(data: &LabeledDataset, c0: f64) -> f64 {
    let min_count = data.class_counts().into_iter().min().unwrap_or(0) as f64;
    (min_count - c0 * data.n() as f64 - 1.0).max(0.0)
}

/// `(2/n)·sqrt(2 R_x²/c0² + 2)`.
pub fn alpha_bayes(n: usize, r_x: f64, c0: f64) -> SensitivityLevel {
    let a = 2.0 / n as f64 * (2.0 * r_x * r_x / (c0 * c0) + 2.0).sqrt();
    SensitivityLevel::new(a).expect("alpha_bayes is finite for positive c0")
}

/// Floors every prior at `c0` and renormalizes.
pub fn normalize_prior(mu: &[f64], c0: f64) -> Vec<f64> {
    let floored: Vec<f64> = mu.iter().map(|&m| m.max(c0)).collect();
    let total: f64 = floored.iter().sum();
    floored.into_iter().map(|m| m / total).collect()
}

/// Adapter over datasets whose features are already clipped to `r_x`.
#[derive(Debug, Clone)]
pub struct BayesAdapter {
    pub r_x: f64,
    pub c0: f64,
    pub bot: BotPolicy,
}

impl EstimatorAdapter<LabeledDataset> for BayesAdapter {
    fn estimate(&self, data: &LabeledDataset) -> Result<Vec<f64>> {
        Ok(fit_bayes_total(data).flatten())
    }

    fn gamma(&self, data: &LabeledDataset) -> f64 {
        gamma_bayes(data, self.c0)
    }

    fn alpha(&self, data: &LabeledDataset) -> SensitivityLevel {
        alpha_bayes(data.n(), self.r_x, self.c0)
    }

    fn bot_policy(&self) -> &BotPolicy {
        &self.bot
    }
}

/// Clips, fits, gates and releases; priors of a released vector are floored
/// and renormalized, the means are left as released.
pub fn bayes_eptr<R: Rng + ?Sized>(
    data: &LabeledDataset,
    config: &BayesConfig,
    rng: &mut R,
) -> Result<ReleaseOutcome<BayesParams>> {
    config.validate(data.classes())?;
    let clipped = data.clipped(config.r_x);
    let adapter = BayesAdapter { r_x: config.r_x, c0: config.c0, bot: BotPolicy::Null };
    let (k, p) = (data.classes(), data.dim());
    let outcome = eptr_release(&adapter, &clipped, &config.budget, rng)?;
    Ok(outcome.map(|v| {
        let mut params = BayesParams::unflatten(&v, k, p);
        params.mu = normalize_prior(&params.mu, config.c0);
        params
    }))
}

/// Posterior `∝ μ_k exp(−‖x − m_k‖²/2)` and the arg-max class (lowest index
/// on ties).
pub fn bayes_predict(params: &BayesParams, x: &[f64]) -> (Vec<f64>, usize) {
    let scores: Vec<f64> = params
        .mu
        .iter()
        .zip(&params.means)
        .map(|(&mu, m)| {
            let d2: f64 = m.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            mu.ln() - 0.5 * d2
        })
        .collect();
    (softmax(&scores), argmax(&scores))
}

/// Arg-max class only; skips the normalization.
pub fn bayes_classify(params: &BayesParams, x: &[f64]) -> usize {
    let score = |k: usize| {
        let d2: f64 = params.means[k].iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        params.mu[k].ln() - 0.5 * d2
    };
    let mut best = 0;
    let mut best_score = score(0);
    for k in 1..params.classes() {
        let s = score(k);
        if s > best_score {
            best = k;
            best_score = s;
        }
    }
    best
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
