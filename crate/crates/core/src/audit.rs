//! Empirical check of the (ε, δ) inequality on adjacent dataset pairs.
//!
//! Each mechanism is run many times on both datasets with independent
//! streams. For every event the two hit probabilities get exact binomial
//! (Clopper–Pearson) bounds, and the audit fails an event only when the
//! bounds prove `P_X(E) > e^ε P_X'(E) + δ` in one of the two orderings.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::baselines::{noisy_gd_linreg, noisy_ratio_kernel, noisy_stats_bayes, BaselineConfig};
use crate::bayes::{bayes_eptr, gamma_bayes, BayesAdapter, BayesConfig, LabeledDataset};
use crate::error::{Error, Result};
use crate::kernelreg::{nw_eptr, Domain, KernelRegConfig, RadialKernel};
use crate::linreg::{linreg_eptr, LinRegConfig, RegressionDataset};
use crate::mechanisms::{eptr_release, hamming_distance, BotPolicy, Dataset, EstimatorAdapter, FnAdapter, PrivacyBudget, ReleaseOutcome};
use crate::rng::{derive_seed, stream, Stream};

pub const MIN_TRIALS: usize = 10_000;
pub const CONFIDENCE: f64 = 0.99;
pub const DEFAULT_BINS: usize = 20;

const REPORT_HEADER: &str =
    "Empirical privacy audit. A PASS is statistical evidence, not a proof of differential privacy.";

const TAG_X: u64 = 0;
const TAG_X_PRIME: u64 = 1;
const TAG_PILOT_X: u64 = 2;
const TAG_PILOT_X_PRIME: u64 = 3;
const CHUNK: usize = 2048;

/// Two datasets differing in exactly one record.
#[derive(Debug, Clone)]
pub struct AdjacentPair<D> {
    pub x: D,
    pub x_prime: D,
    pub description: String,
}

impl<D: Dataset> AdjacentPair<D> {
    pub fn new(x: D, x_prime: D, description: impl Into<String>) -> Result<Self> {
        match hamming_distance(&x, &x_prime) {
            Some(1) => Ok(Self { x, x_prime, description: description.into() }),
            other => Err(Error::InvalidParameter(format!(
                "datasets are not adjacent (differing records: {other:?})"
            ))),
        }
    }
}

impl<D> AdjacentPair<D> {
    /// Skips the adjacency check; for diagnostics such as `X = X'`.
    pub fn unchecked(x: D, x_prime: D, description: impl Into<String>) -> Self {
        Self { x, x_prime, description: description.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Released,
    /// Anything other than a noisy release of the estimate.
    Bot,
    /// Released and coordinate `coordinate` is at most `threshold`.
    AtMost { coordinate: usize, threshold: f64 },
}

impl Event {
    pub fn holds(&self, outcome: &ReleaseOutcome) -> bool {
        match self {
            Event::Released => outcome.is_released(),
            Event::Bot => !outcome.is_released(),
            Event::AtMost { coordinate, threshold } => {
                outcome.released().is_some_and(|v| v.get(*coordinate).is_some_and(|x| x <= threshold))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Event::Released => "released".into(),
            Event::Bot => "bot".into(),
            Event::AtMost { coordinate, threshold } => format!("released&v{coordinate}<={threshold:.6e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventFamily {
    events: Vec<Event>,
}

impl EventFamily {
    pub fn indicators() -> Self {
        Self { events: vec![Event::Released, Event::Bot] }
    }

    /// Adds half-line events for `coordinate`; `thresholds` must be sorted.
    pub fn with_thresholds(mut self, coordinate: usize, thresholds: &[f64]) -> Result<Self> {
        if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidParameter("thresholds must be sorted".into()));
        }
        self.events.extend(thresholds.iter().map(|&threshold| Event::AtMost { coordinate, threshold }));
        Ok(self)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Exact two-sided binomial interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n);
    let tail = (1.0 - confidence) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let lower = if k == 0 { 0.0 } else { Beta::new(kf, nf - kf + 1.0).unwrap().inverse_cdf(tail) };
    let upper = if k == n { 1.0 } else { Beta::new(kf + 1.0, nf - kf).unwrap().inverse_cdf(1.0 - tail) };
    (lower, upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventResult {
    pub event: String,
    pub hits_x: u64,
    pub hits_x_prime: u64,
    pub p_x: f64,
    pub p_x_prime: f64,
    pub lower_x: f64,
    pub upper_x: f64,
    pub lower_x_prime: f64,
    pub upper_x_prime: f64,
    /// Smallest of `e^ε U' + δ − L` and `e^ε U + δ − L'`.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub description: String,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub confidence: f64,
    pub events: Vec<EventResult>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.events.iter().all(|e| e.pass)
    }

    pub fn min_margin(&self) -> f64 {
        self.events.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min)
    }

    pub const CSV_HEADER: &'static str =
        "pair,epsilon,delta,trials,event,hits_x,hits_x_prime,p_x,p_x_prime,lower_x,upper_x,lower_x_prime,upper_x_prime,margin,pass";

    /// One CSV line per event, without the header.
    pub fn csv_rows(&self) -> Vec<String> {
        self.events
            .iter()
            .map(|e| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    self.description.replace(',', ";"),
                    self.epsilon,
                    self.delta,
                    self.trials,
                    e.event,
                    e.hits_x,
                    e.hits_x_prime,
                    e.p_x,
                    e.p_x_prime,
                    e.lower_x,
                    e.upper_x,
                    e.lower_x_prime,
                    e.upper_x_prime,
                    e.margin,
                    if e.pass { "PASS" } else { "FAIL" }
                )
            })
            .collect()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{REPORT_HEADER}");
        let _ = writeln!(
            out,
            "pair: {} | epsilon={} delta={} trials={} confidence={} (Bonferroni over {} events)",
            self.description,
            self.epsilon,
            self.delta,
            self.trials,
            self.confidence,
            self.events.len()
        );
        for e in &self.events {
            let _ = writeln!(
                out,
                "  {:<32} P_X={:.5} P_X'={:.5} margin={:+.5} {}",
                e.event,
                e.p_x,
                e.p_x_prime,
                e.margin,
                if e.pass { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "verdict: {}", if self.pass() { "PASS" } else { "FAIL" });
        out
    }
}

fn count_events<D, M>(mechanism: &M, data: &D, trials: usize, seed: u64, tag: u64, events: &[Event]) -> Result<Vec<u64>>
where
    D: Sync + ?Sized,
    M: Fn(&D, &mut Stream) -> Result<ReleaseOutcome> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut hits = vec![0u64; events.len()];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = stream(seed, &[tag, t as u64]);
                let outcome = mechanism(data, &mut rng)?;
                for (h, e) in hits.iter_mut().zip(events) {
                    *h += e.holds(&outcome) as u64;
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    Ok(partial.into_iter().fold(vec![0; events.len()], |mut acc, v| {
        acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        acc
    }))
}

/// Runs `mechanism` `trials` times on each dataset of `pair` and tests every
/// event. Trial `t` on `X` uses the stream `(seed, 0, t)`, on `X'` the stream
/// `(seed, 1, t)`, so the report does not depend on the thread schedule.
pub fn audit_mechanism<D, M>(
    mechanism: M,
    pair: &AdjacentPair<D>,
    budget: &PrivacyBudget,
    trials: usize,
    events: &EventFamily,
    seed: u64,
) -> Result<AuditReport>
where
    D: Sync,
    M: Fn(&D, &mut Stream) -> Result<ReleaseOutcome> + Sync,
{
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!("an audit needs at least {MIN_TRIALS} trials, got {trials}")));
    }
    if events.is_empty() {
        return Err(Error::InvalidParameter("event family is empty".into()));
    }
    let hits_x = count_events(&mechanism, &pair.x, trials, seed, TAG_X, events.events())?;
    let hits_xp = count_events(&mechanism, &pair.x_prime, trials, seed, TAG_X_PRIME, events.events())?;

    let per_event = 1.0 - (1.0 - CONFIDENCE) / events.len() as f64;
    let factor = budget.epsilon().exp();
    let n = trials as u64;
    let results = events
        .events()
        .iter()
        .zip(hits_x.iter().zip(&hits_xp))
        .map(|(e, (&a, &b))| {
            let (lx, ux) = clopper_pearson(a, n, per_event);
            let (lxp, uxp) = clopper_pearson(b, n, per_event);
            let margin = (factor * uxp + budget.delta() - lx).min(factor * ux + budget.delta() - lxp);
            EventResult {
                event: e.label(),
                hits_x: a,
                hits_x_prime: b,
                p_x: a as f64 / trials as f64,
                p_x_prime: b as f64 / trials as f64,
                lower_x: lx,
                upper_x: ux,
                lower_x_prime: lxp,
                upper_x_prime: uxp,
                margin,
                pass: margin >= 0.0,
            }
        })
        .collect();
    Ok(AuditReport {
        description: pair.description.clone(),
        epsilon: budget.epsilon(),
        delta: budget.delta(),
        trials,
        confidence: CONFIDENCE,
        events: results,
    })
}

fn collect_released<D, M>(mechanism: &M, data: &D, runs: usize, seed: u64, tag: u64, coordinate: usize) -> Result<Vec<f64>>
where
    D: Sync,
    M: Fn(&D, &mut Stream) -> Result<ReleaseOutcome> + Sync,
{
    let values: Vec<Option<f64>> = (0..runs)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, &[tag, t as u64]);
            Ok(mechanism(data, &mut rng)?.released().and_then(|v| v.get(coordinate).copied()))
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().flatten().collect())
}

/// Release and ⊥ indicators plus, for each coordinate, `bins` half-lines at
/// empirical quantiles of released values pooled from a pilot run on both
/// datasets. The pilot uses streams disjoint from the audit's.
pub fn pilot_event_family<D, M>(
    mechanism: &M,
    pair: &AdjacentPair<D>,
    pilot_runs: usize,
    coordinates: &[usize],
    bins: usize,
    seed: u64,
) -> Result<EventFamily>
where
    D: Sync,
    M: Fn(&D, &mut Stream) -> Result<ReleaseOutcome> + Sync,
{
    let mut family = EventFamily::indicators();
    for &c in coordinates {
        let mut pooled = collect_released(mechanism, &pair.x, pilot_runs, seed, TAG_PILOT_X, c)?;
        pooled.extend(collect_released(mechanism, &pair.x_prime, pilot_runs, seed, TAG_PILOT_X_PRIME, c)?);
        if pooled.is_empty() {
            continue;
        }
        pooled.sort_by(f64::total_cmp);
        let mut cuts: Vec<f64> = (1..=bins)
            .map(|b| pooled[(b * pooled.len() / (bins + 1)).min(pooled.len() - 1)])
            .collect();
        cuts.dedup();
        family = family.with_thresholds(c, &cuts)?;
    }
    Ok(family)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Bayes,
    Linreg,
    Kernel,
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Bayes => "bayes",
            Problem::Linreg => "linreg",
            Problem::Kernel => "kernel",
        }
    }

    fn index(&self) -> u64 {
        match self {
            Problem::Bayes => 0,
            Problem::Linreg => 1,
            Problem::Kernel => 2,
        }
    }
}

/// What to run on the adversarial pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditTarget {
    Eptr,
    /// The simplified noisy-statistics comparator for the problem.
    Baseline,
    /// Bayes only: the efficient mechanism with its sub-distance multiplied
    /// by ten, which breaks the Lipschitz requirement.
    BrokenLipschitz,
}

/// Bounds used by the Bayes adversarial pairs.
pub const BAYES_PAIR_R_X: f64 = 1.0;
pub const BAYES_PAIR_C0: f64 = 0.1;
pub const LINREG_PAIR_R_X: f64 = 1.0;
pub const LINREG_PAIR_R_THETA: f64 = 1.0;
pub const LINREG_PAIR_C0: f64 = 0.25;
pub const LINREG_PAIR_U: f64 = 0.01;
pub const KERNEL_PAIR_SIGMA: f64 = 0.04;
pub const KERNEL_PAIR_R_F: f64 = 1.0;
pub const KERNEL_PAIR_C0: f64 = 0.1;
pub const KERNEL_PAIR_X0: f64 = 0.5;
const PAIR_N: usize = 20;

pub fn bayes_pair_config(budget: PrivacyBudget) -> BayesConfig {
    BayesConfig { r_x: BAYES_PAIR_R_X, c0: BAYES_PAIR_C0, budget }
}

pub fn linreg_pair_config(budget: PrivacyBudget) -> LinRegConfig {
    LinRegConfig { r_x: LINREG_PAIR_R_X, r_theta: LINREG_PAIR_R_THETA, c0: LINREG_PAIR_C0, budget }
}

pub fn kernel_pair_config(budget: PrivacyBudget) -> (KernelRegConfig, RadialKernel) {
    let config = KernelRegConfig {
        x0: vec![KERNEL_PAIR_X0],
        r_f: KERNEL_PAIR_R_F,
        c0: KERNEL_PAIR_C0,
        budget,
        domain: Domain::UnitBox,
    };
    (config, RadialKernel::gaussian(KERNEL_PAIR_SIGMA, 1).expect("positive bandwidth"))
}

/// Single-extreme-point pair: class 0 holds one record at `+R_x` versus
/// `−R_x`; and a boundary pair where the class-0 count is `c0 n + 2` versus
/// `c0 n + 1`.
pub fn bayes_pairs() -> Vec<AdjacentPair<LabeledDataset>> {
    let r = BAYES_PAIR_R_X;
    let mut x = vec![vec![0.0]; PAIR_N];
    let mut y = vec![1; PAIR_N];
    x[0] = vec![r];
    y[0] = 0;
    let extreme = LabeledDataset::new(x, y, 2).expect("valid");
    let extreme_prime = extreme.with_record(0, vec![-r], 0);

    let boundary_count = (BAYES_PAIR_C0 * PAIR_N as f64).round() as usize + 2;
    let x: Vec<Vec<f64>> = (0..PAIR_N).map(|i| vec![if i < boundary_count { 0.8 } else { -0.5 }]).collect();
    let y: Vec<usize> = (0..PAIR_N).map(|i| usize::from(i >= boundary_count)).collect();
    let boundary = LabeledDataset::new(x, y, 2).expect("valid");
    let boundary_prime = boundary.with_record(0, vec![r], 1);

    vec![
        AdjacentPair::new(extreme, extreme_prime, "bayes single extreme point").expect("adjacent"),
        AdjacentPair::new(boundary, boundary_prime, "bayes class count at boundary").expect("adjacent"),
    ]
}

/// Near-singular design `{(u,1),(0,0),…}` versus `{(−u,1),(0,0),…}`; a
/// boundary pair with `Σx² = c0 n + 2R_x² + 1` versus one less; and a
/// rank-deficient two-dimensional pair.
pub fn linreg_pairs() -> Vec<AdjacentPair<RegressionDataset>> {
    let u = LINREG_PAIR_U;
    let mut x = vec![vec![0.0]; PAIR_N];
    let mut y = vec![0.0; PAIR_N];
    x[0] = vec![u];
    y[0] = 1.0;
    let tiny = RegressionDataset::new(x, y).expect("valid");
    let tiny_prime = tiny.with_record(0, vec![-u], 1.0);

    let ones = (LINREG_PAIR_C0 * PAIR_N as f64 + 2.0 * LINREG_PAIR_R_X * LINREG_PAIR_R_X).round() as usize + 1;
    let x: Vec<Vec<f64>> = (0..PAIR_N).map(|i| vec![if i < ones { 1.0 } else { 0.0 }]).collect();
    let y: Vec<f64> = (0..PAIR_N).map(|i| if i < ones && i % 3 == 2 { -1.0 } else if i < ones { 1.0 } else { 0.0 }).collect();
    let boundary = RegressionDataset::new(x, y).expect("valid");
    let boundary_prime = boundary.with_record(0, vec![0.0], -1.0);

    let mut x = vec![vec![1.0, 0.0]; PAIR_N];
    let y = vec![0.5; PAIR_N];
    x[0] = vec![0.0, 0.5];
    let flat = RegressionDataset::new(x, y).expect("valid");
    let flat_prime = flat.with_record(0, vec![0.0, -0.5], 0.5);

    vec![
        AdjacentPair::new(tiny, tiny_prime, "linreg near-singular design").expect("adjacent"),
        AdjacentPair::new(boundary, boundary_prime, "linreg eigenvalue at boundary").expect("adjacent"),
        AdjacentPair::new(flat, flat_prime, "linreg rank-deficient plane").expect("adjacent"),
    ]
}

/// Empty neighborhood versus one record moved onto the query point; and a
/// boundary pair with four versus three records at the query point.
pub fn kernel_pairs() -> Vec<AdjacentPair<RegressionDataset>> {
    let x0 = KERNEL_PAIR_X0;
    let far = RegressionDataset::new(vec![vec![0.0]; PAIR_N], vec![0.0; PAIR_N]).expect("valid");
    let far_prime = far.with_record(0, vec![x0], 1.0);

    let near = 4;
    let x: Vec<Vec<f64>> = (0..PAIR_N).map(|i| vec![if i < near { x0 } else { 0.0 }]).collect();
    let y: Vec<f64> = (0..PAIR_N).map(|i| if i < near - 1 { 1.0 } else if i < near { -1.0 } else { 0.0 }).collect();
    let boundary = RegressionDataset::new(x, y).expect("valid");
    let boundary_prime = boundary.with_record(0, vec![0.0], 0.0);

    vec![
        AdjacentPair::new(far, far_prime, "kernel empty neighborhood").expect("adjacent"),
        AdjacentPair::new(boundary, boundary_prime, "kernel degree at boundary").expect("adjacent"),
    ]
}

/// Efficient release for naive Bayes with `gamma` inflated tenfold. Not
/// private; used to show the audit has power.
pub fn broken_bayes_release(data: &LabeledDataset, config: &BayesConfig, rng: &mut Stream) -> Result<ReleaseOutcome> {
    let clipped = data.clipped(config.r_x);
    let honest = BayesAdapter { r_x: config.r_x, c0: config.c0, bot: BotPolicy::Null };
    let c0 = config.c0;
    let adapter = FnAdapter {
        estimate: |d: &LabeledDataset| honest.estimate(d),
        gamma: move |d: &LabeledDataset| 10.0 * gamma_bayes(d, c0),
        alpha: honest.alpha(&clipped),
        bot: BotPolicy::Null,
    };
    eptr_release(&adapter, &clipped, &config.budget, rng)
}

fn run_pair<D, M>(
    mechanism: M,
    pair: &AdjacentPair<D>,
    budget: &PrivacyBudget,
    trials: usize,
    coordinates: &[usize],
    seed: u64,
) -> Result<AuditReport>
where
    D: Sync,
    M: Fn(&D, &mut Stream) -> Result<ReleaseOutcome> + Sync,
{
    let pilot = (trials / 10).max(1000);
    let family = pilot_event_family(&mechanism, pair, pilot, coordinates, DEFAULT_BINS, seed)?;
    audit_mechanism(mechanism, pair, budget, trials, &family, seed)
}

/// Audits `target` on every adversarial pair of `problem`. The seed of pair
/// `i` is derived from `(seed, problem, i)`.
pub fn audit_problem(
    problem: Problem,
    target: AuditTarget,
    budget: PrivacyBudget,
    trials: usize,
    seed: u64,
) -> Result<Vec<AuditReport>> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!("an audit needs at least {MIN_TRIALS} trials, got {trials}")));
    }
    let pair_seed = |i: usize| derive_seed(seed, &[problem.index(), i as u64]);
    let baseline = BaselineConfig::new(budget);
    let mut reports = Vec::new();
    match (problem, target) {
        (Problem::Bayes, _) => {
            let config = bayes_pair_config(budget);
            // first prior and first feature of the first class mean
            let coords = [0, 2];
            for (i, pair) in bayes_pairs().iter().enumerate() {
                let report = match target {
                    AuditTarget::Eptr => run_pair(
                        |d: &LabeledDataset, r: &mut Stream| Ok(bayes_eptr(d, &config, r)?.map(|p| p.flatten())),
                        pair,
                        &budget,
                        trials,
                        &coords,
                        pair_seed(i),
                    )?,
                    AuditTarget::Baseline => run_pair(
                        |d: &LabeledDataset, r: &mut Stream| {
                            Ok(ReleaseOutcome::Released(noisy_stats_bayes(d, config.r_x, config.c0, &baseline, r)?.flatten()))
                        },
                        pair,
                        &budget,
                        trials,
                        &coords,
                        pair_seed(i),
                    )?,
                    AuditTarget::BrokenLipschitz => run_pair(
                        |d: &LabeledDataset, r: &mut Stream| broken_bayes_release(d, &config, r),
                        pair,
                        &budget,
                        trials,
                        &coords,
                        pair_seed(i),
                    )?,
                };
                reports.push(report);
            }
        }
        (_, AuditTarget::BrokenLipschitz) => {
            return Err(Error::InvalidParameter("the broken mechanism is defined for bayes only".into()));
        }
        (Problem::Linreg, _) => {
            let config = linreg_pair_config(budget);
            for (i, pair) in linreg_pairs().iter().enumerate() {
                let coords: Vec<usize> = (0..pair.x.dim()).collect();
                let report = if target == AuditTarget::Eptr {
                    run_pair(|d: &RegressionDataset, r: &mut Stream| linreg_eptr(d, &config, r), pair, &budget, trials, &coords, pair_seed(i))?
                } else {
                    run_pair(
                        |d: &RegressionDataset, r: &mut Stream| Ok(ReleaseOutcome::Released(noisy_gd_linreg(d, &config, &baseline, r)?)),
                        pair,
                        &budget,
                        trials,
                        &coords,
                        pair_seed(i),
                    )?
                };
                reports.push(report);
            }
        }
        (Problem::Kernel, _) => {
            let (config, kernel) = kernel_pair_config(budget);
            for (i, pair) in kernel_pairs().iter().enumerate() {
                let report = if target == AuditTarget::Eptr {
                    run_pair(
                        |d: &RegressionDataset, r: &mut Stream| Ok(nw_eptr(d, &config, &kernel, r)?.map(|v| vec![v])),
                        pair,
                        &budget,
                        trials,
                        &[0],
                        pair_seed(i),
                    )?
                } else {
                    run_pair(
                        |d: &RegressionDataset, r: &mut Stream| {
                            Ok(ReleaseOutcome::Released(vec![noisy_ratio_kernel(d, &config, &kernel, &baseline, r)?]))
                        },
                        pair,
                        &budget,
                        trials,
                        &[0],
                        pair_seed(i),
                    )?
                };
                reports.push(report);
            }
        }
    }
    Ok(reports)
}
