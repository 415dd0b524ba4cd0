//! Generic privacy primitives: the efficient PTR engine, the classical PTR
//! reference, the Gaussian release step and ball projection.
//!
//! All logarithms are natural. Randomness is consumed in a fixed order: one
//! uniform draw for the release coin, then one standard normal per output
//! coordinate (or the fallback draws when the coin fails).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The (ε, δ) pair governing noise calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBudget")]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawBudget {
    epsilon: f64,
    delta: f64,
}

impl TryFrom<RawBudget> for PrivacyBudget {
    type Error = Error;

    fn try_from(raw: RawBudget) -> Result<Self> {
        Self::new(raw.epsilon, raw.delta)
    }
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0 && delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidBudget { epsilon, delta });
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Scales both components, e.g. `split(0.5)` for half of the budget.
    pub fn split(&self, fraction: f64) -> Result<Self> {
        Self::new(self.epsilon * fraction, self.delta * fraction)
    }
}

/// Proposed bound on the local sensitivity, in the units of the estimate's
/// Euclidean norm.
///
/// Zero is accepted and disables the noise; it exists for tests only.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SensitivityLevel(f64);

impl SensitivityLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sensitivity level must be finite and non-negative, got {alpha}"
            )));
        }
        Ok(Self(alpha))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Output of a PTR-style mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReleaseOutcome<T = Vec<f64>> {
    /// The test passed and a noised estimate was released.
    Released(T),
    /// The test failed and the fallback distribution produced this value.
    Fallback(T),
    /// The test failed; no reply.
    Bot,
}

impl<T> ReleaseOutcome<T> {
    pub fn is_released(&self) -> bool {
        matches!(self, ReleaseOutcome::Released(_))
    }

    pub fn released(&self) -> Option<&T> {
        match self {
            ReleaseOutcome::Released(v) => Some(v),
            _ => None,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> ReleaseOutcome<U> {
        match self {
            ReleaseOutcome::Released(v) => ReleaseOutcome::Released(f(v)),
            ReleaseOutcome::Fallback(v) => ReleaseOutcome::Fallback(f(v)),
            ReleaseOutcome::Bot => ReleaseOutcome::Bot,
        }
    }
}

/// Distributions the fallback sampler can draw from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FallbackDistribution {
    /// Uniform on `[-half_width, half_width]^dim`.
    UniformCube { half_width: f64 },
    /// `N(0, scale^2 I)`.
    Normal { scale: f64 },
}

/// What to output when the test fails.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum BotPolicy {
    #[default]
    Null,
    PointMass(Vec<f64>),
    Sampler {
        distribution: FallbackDistribution,
        dim: usize,
    },
}

impl BotPolicy {
    pub fn outcome<R: Rng + ?Sized>(&self, rng: &mut R) -> ReleaseOutcome {
        match self {
            BotPolicy::Null => ReleaseOutcome::Bot,
            BotPolicy::PointMass(v) => ReleaseOutcome::Fallback(v.clone()),
            BotPolicy::Sampler { distribution, dim } => {
                let v = match distribution {
                    FallbackDistribution::UniformCube { half_width } => (0..*dim)
                        .map(|_| half_width * (2.0 * rng.random::<f64>() - 1.0))
                        .collect(),
                    FallbackDistribution::Normal { scale } => (0..*dim)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(rng);
                            scale * z
                        })
                        .collect(),
                };
                ReleaseOutcome::Fallback(v)
            }
        }
    }
}

/// Fixed-size record collection with replace-one adjacency.
pub trait Dataset {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether record `i` is identical in both datasets.
    fn record_eq(&self, other: &Self, i: usize) -> bool;
}

/// Number of records that differ between two equal-length datasets, or
/// `None` when the lengths differ.
pub fn hamming_distance<D: Dataset + ?Sized>(a: &D, b: &D) -> Option<usize> {
    if a.len() != b.len() {
        return None;
    }
    Some((0..a.len()).filter(|&i| !a.record_eq(b, i)).count())
}

/// Plugs an estimator into [`eptr_release`].
///
/// Contract: `gamma` is 1-Lipschitz under single-record replacement, and
/// whenever `gamma(X) > 0` every neighbour `X'` satisfies
/// `‖estimate(X) − estimate(X')‖ ≤ alpha`.
pub trait EstimatorAdapter<D: ?Sized> {
    fn estimate(&self, data: &D) -> Result<Vec<f64>>;
    fn gamma(&self, data: &D) -> f64;
    /// May depend on public dataset properties only (the record count).
    fn alpha(&self, data: &D) -> SensitivityLevel;
    fn bot_policy(&self) -> &BotPolicy;
}

/// Adapter assembled from closures.
pub struct FnAdapter<E, G> {
    pub estimate: E,
    pub gamma: G,
    pub alpha: SensitivityLevel,
    pub bot: BotPolicy,
}

impl<D: ?Sized, E, G> EstimatorAdapter<D> for FnAdapter<E, G>
where
    E: Fn(&D) -> Result<Vec<f64>>,
    G: Fn(&D) -> f64,
{
    fn estimate(&self, data: &D) -> Result<Vec<f64>> {
        (self.estimate)(data)
    }

    fn gamma(&self, data: &D) -> f64 {
        (self.gamma)(data)
    }

    fn alpha(&self, _data: &D) -> SensitivityLevel {
        self.alpha
    }

    fn bot_policy(&self) -> &BotPolicy {
        &self.bot
    }
}

/// Gate offset `M = 1 + (2/ε) ln(max(1/δ, 1/ε))`.
pub fn compute_m(budget: &PrivacyBudget) -> f64 {
    let eps = budget.epsilon();
    1.0 + (2.0 / eps) * (1.0 / budget.delta()).max(1.0 / eps).ln()
}

/// Numerically stable logistic function.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Probability that the efficient test passes: `logistic(ε(γ − M)/2)`.
pub fn release_probability(gamma: f64, budget: &PrivacyBudget) -> f64 {
    logistic(0.5 * budget.epsilon() * (gamma - compute_m(budget)))
}

/// Per-coordinate noise standard deviation of the efficient release,
/// `(2α/ε)·sqrt(2 ln(1.25/δ))`.
///
/// The textbook Gaussian mechanism uses `(2/ε)·sqrt(ln(1.25/δ))` per unit of
/// sensitivity; all releases here use the constant above.
pub fn eptr_noise_scale(level: SensitivityLevel, budget: &PrivacyBudget) -> f64 {
    2.0 * level.value() / budget.epsilon() * (2.0 * (1.25 / budget.delta()).ln()).sqrt()
}

/// Per-coordinate noise standard deviation of classical PTR,
/// `(α/ε)·sqrt(2 ln(1.25/δ))`.
pub fn ptr_noise_scale(level: SensitivityLevel, budget: &PrivacyBudget) -> f64 {
    level.value() / budget.epsilon() * (2.0 * (1.25 / budget.delta()).ln()).sqrt()
}

/// Standard Gaussian mechanism scale `Δ·sqrt(2 ln(1.25/δ))/ε`, used by the
/// baselines.
pub fn gaussian_mechanism_scale(sensitivity: f64, budget: &PrivacyBudget) -> f64 {
    sensitivity * (2.0 * (1.25 / budget.delta()).ln()).sqrt() / budget.epsilon()
}

/// Adds `scale · ζ` with `ζ ~ N(0, I)`, one normal per coordinate in order.
pub fn add_gaussian_noise<R: Rng + ?Sized>(theta: &[f64], scale: f64, rng: &mut R) -> Vec<f64> {
    theta
        .iter()
        .map(|&t| {
            let z: f64 = StandardNormal.sample(rng);
            t + scale * z
        })
        .collect()
}

/// Release step of the efficient mechanism.
pub fn gaussian_release<R: Rng + ?Sized>(
    theta_hat: &[f64],
    level: SensitivityLevel,
    budget: &PrivacyBudget,
    rng: &mut R,
) -> Vec<f64> {
    add_gaussian_noise(theta_hat, eptr_noise_scale(level, budget), rng)
}

/// Efficient propose-test-release.
///
/// Evaluates `gamma` and `estimate` exactly once each. An undefined estimate
/// is tolerated only when `gamma` is zero and the coin fails.
pub fn eptr_release<D, A, R>(
    adapter: &A,
    data: &D,
    budget: &PrivacyBudget,
    rng: &mut R,
) -> Result<ReleaseOutcome>
where
    D: ?Sized,
    A: EstimatorAdapter<D> + ?Sized,
    R: Rng + ?Sized,
{
    let gamma = adapter.gamma(data);
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::ContractViolation(format!(
            "sub-distance must be finite and non-negative, got {gamma}"
        )));
    }
    let p = release_probability(gamma, budget);
    let pass = rng.random::<f64>() < p;
    let estimate = adapter.estimate(data);

    if let Err(e) = &estimate {
        if gamma > 0.0 || pass {
            return Err(Error::ContractViolation(format!(
                "estimate undefined on the release path (gamma = {gamma}): {e}"
            )));
        }
    }
    if !pass {
        return Ok(adapter.bot_policy().outcome(rng));
    }
    let estimate = estimate?;
    if estimate.iter().any(|v| !v.is_finite()) {
        return Err(Error::ContractViolation("estimate is not finite".into()));
    }
    Ok(ReleaseOutcome::Released(gaussian_release(
        &estimate,
        adapter.alpha(data),
        budget,
        rng,
    )))
}

/// Two-branch pass probability of classical PTR given the exact distance
/// `D_α` from the dataset to the high-sensitivity region.
pub fn ptr_release_probability(distance: f64, budget: &PrivacyBudget) -> Result<f64> {
    if !(distance >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "distance must be non-negative, got {distance}"
        )));
    }
    let eps = budget.epsilon();
    let delta = budget.delta();
    let half = 0.5 * eps * distance;
    let p = if (1.0 / delta).ln() > half {
        0.5 * delta * half.exp()
    } else {
        1.0 - (-half).exp() / (2.0 * delta)
    };
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(p)
}

/// Classical propose-test-release with a caller-supplied exact distance.
/// Consumes randomness in the same order as [`eptr_release`].
pub fn ptr_release<R: Rng + ?Sized>(
    theta_hat: &[f64],
    distance: f64,
    level: SensitivityLevel,
    budget: &PrivacyBudget,
    bot: &BotPolicy,
    rng: &mut R,
) -> Result<ReleaseOutcome> {
    let p = ptr_release_probability(distance, budget)?;
    if rng.random::<f64>() >= p {
        return Ok(bot.outcome(rng));
    }
    Ok(ReleaseOutcome::Released(add_gaussian_noise(
        theta_hat,
        ptr_noise_scale(level, budget),
        rng,
    )))
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Projection onto the centred Euclidean ball: `v · min(1, radius/‖v‖)`.
pub fn project_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let norm = l2_norm(v);
    // rescaled vectors can land a few ulps above the radius; treating them as
    // inside keeps the projection idempotent
    if norm <= radius * (1.0 + 8.0 * f64::EPSILON) {
        return v.to_vec();
    }
    let s = radius / norm;
    v.iter().map(|x| x * s).collect()
}

/// Scalar clamp to `[-bound, bound]`.
pub fn clamp_abs(x: f64, bound: f64) -> f64 {
    x.clamp(-bound, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn budget(e: f64, d: f64) -> PrivacyBudget {
        PrivacyBudget::new(e, d).unwrap()
    }

    #[test]
    fn budget_validation() {
        assert!(PrivacyBudget::new(0.0, 0.1).is_err());
        assert!(PrivacyBudget::new(1.0, 0.0).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
        assert!(PrivacyBudget::new(f64::INFINITY, 0.1).is_err());
        assert!(PrivacyBudget::new(1.0, 0.5).is_ok());
    }

    #[test]
    fn gate_offset_values() {
        assert!(close(compute_m(&budget(1.0, 0.01)), 1.0 + 2.0 * 100f64.ln(), 1e-12));
        assert!(close(compute_m(&budget(1.0, 0.01)), 10.210340, 1e-6));
        assert!(close(compute_m(&budget(2.0, (-1f64).exp())), 2.0, 1e-12));
        assert!(close(compute_m(&budget(0.1, 0.5)), 1.0 + 20.0 * 10f64.ln(), 1e-12));
        assert!(close(compute_m(&budget(0.1, 0.5)), 47.0517, 1e-4));
    }

    #[test]
    fn release_probability_values() {
        let b = budget(1.0, 0.01);
        let m = compute_m(&b);
        assert_eq!(release_probability(m, &b), 0.5);
        let p0 = release_probability(0.0, &b);
        assert!(close(p0, 1.0 / (1.0 + (m / 2.0).exp()), 1e-15));
        assert!(close(p0, 0.006_028_740, 1e-9));
        let big = release_probability(m + 10_000.0, &b);
        assert!(big.is_finite() && big >= 1.0 - 1e-300);
        let tiny = release_probability(0.0, &budget(1e-3, 0.01));
        assert!(tiny.is_finite() && tiny >= 0.0);
    }

    #[test]
    fn noise_scale_value() {
        let s = eptr_noise_scale(SensitivityLevel::new(0.1).unwrap(), &budget(1.0, 0.01));
        assert!(close(s, 0.2 * (2.0 * 125f64.ln()).sqrt(), 1e-15));
        assert!(close(s, 0.621_502_292, 1e-9));
    }

    #[test]
    fn zero_level_is_identity() {
        let theta = [1.5, -2.0, 0.25];
        let mut rng = stream(1, &[]);
        let out = gaussian_release(&theta, SensitivityLevel::new(0.0).unwrap(), &budget(1.0, 0.01), &mut rng);
        assert_eq!(out, theta);
    }

    #[test]
    fn gaussian_release_moments() {
        let b = budget(1.0, 0.01);
        let level = SensitivityLevel::new(0.1).unwrap();
        let s = eptr_noise_scale(level, &b);
        let mut rng = stream(11, &[]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| gaussian_release(&[0.0], level, &b, &mut rng)[0]).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((sd / s - 1.0).abs() < 0.01, "sd {sd} vs {s}");
        assert!(mean.abs() < 3.0 * s / (n as f64).sqrt());
        // standard error of the sample sd is s / sqrt(2n)
        assert!((sd - s).abs() < 3.0 * s / (2.0 * n as f64).sqrt());
    }

    #[test]
    fn ptr_branches() {
        let b = budget(1.0, 0.01);
        let boundary = 2.0 / 1.0 * 100f64.ln();
        let p = ptr_release_probability(boundary, &b).unwrap();
        assert!(close(p, 0.5, 1e-12));
        // both branch formulas agree at the crossover
        let half = 0.5 * boundary;
        assert!(close(0.5 * 0.01 * half.exp(), 1.0 - (-half).exp() / 0.02, 1e-12));
        assert!(close(ptr_release_probability(0.0, &b).unwrap(), 0.005, 1e-15));
        let p20 = ptr_release_probability(20.0, &b).unwrap();
        assert!(close(p20, 1.0 - 50.0 * (-10f64).exp(), 1e-15));
        assert!(close(p20, 0.99773, 1e-5));
        assert!(ptr_release_probability(-1.0, &b).is_err());
        assert!(ptr_release_probability(f64::NAN, &b).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_ball(&[0.3, 0.4], 1.0), vec![0.3, 0.4]);
        let p = project_ball(&[3.0, 4.0], 1.0);
        assert!(close(p[0], 0.6, 1e-15) && close(p[1], 0.8, 1e-15));
        assert_eq!(project_ball(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    fn constant_adapter(gamma: f64) -> FnAdapter<impl Fn(&[f64]) -> Result<Vec<f64>>, impl Fn(&[f64]) -> f64> {
        FnAdapter {
            estimate: |d: &[f64]| Ok(vec![d.iter().sum::<f64>()]),
            gamma: move |_: &[f64]| gamma,
            alpha: SensitivityLevel::new(0.1).unwrap(),
            bot: BotPolicy::Null,
        }
    }

    #[test]
    fn zero_gamma_rarely_releases() {
        let b = budget(1.0, 0.01);
        let adapter = constant_adapter(0.0);
        let data = [1.0, 2.0];
        let mut rng = stream(5, &[]);
        let trials = 1_000_000;
        let released = (0..trials)
            .filter(|_| eptr_release(&adapter, &data[..], &b, &mut rng).unwrap().is_released())
            .count();
        let frac = released as f64 / trials as f64;
        assert!(frac < 0.0075, "{frac}");
        assert!(release_probability(0.0, &b) <= 0.01 * (-0.5f64).exp());
    }

    #[test]
    fn gamma_at_gate_offset_releases_half() {
        let b = budget(1.0, 0.01);
        let mut adapter = constant_adapter(compute_m(&b));
        adapter.bot = BotPolicy::PointMass(vec![0.0]);
        let mut rng = stream(6, &[]);
        let trials = 100_000;
        let mut released = 0;
        for _ in 0..trials {
            match eptr_release(&adapter, &[1.0][..], &b, &mut rng).unwrap() {
                ReleaseOutcome::Released(_) => released += 1,
                ReleaseOutcome::Fallback(v) => assert_eq!(v, vec![0.0]),
                ReleaseOutcome::Bot => panic!("point mass policy must not yield Bot"),
            }
        }
        let frac = released as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    #[test]
    fn eptr_is_deterministic() {
        let b = budget(1.0, 0.01);
        let adapter = constant_adapter(12.0);
        let run = || {
            let mut rng = stream(99, &[1, 2]);
            (0..50)
                .map(|_| eptr_release(&adapter, &[0.5, 0.25][..], &b, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn contract_violations_are_reported() {
        let b = budget(1.0, 0.01);
        let undefined = FnAdapter {
            estimate: |_: &[f64]| Err(Error::AdapterFailure("singular".into())),
            gamma: |_: &[f64]| 3.0,
            alpha: SensitivityLevel::new(0.1).unwrap(),
            bot: BotPolicy::Null,
        };
        let mut rng = stream(1, &[]);
        assert!(matches!(
            eptr_release(&undefined, &[0.0][..], &b, &mut rng),
            Err(Error::ContractViolation(_))
        ));

        // gamma = 0 with undefined estimate: Bot unless the coin passes
        let gated = FnAdapter {
            estimate: |_: &[f64]| Err(Error::AdapterFailure("singular".into())),
            gamma: |_: &[f64]| 0.0,
            alpha: SensitivityLevel::new(0.1).unwrap(),
            bot: BotPolicy::Null,
        };
        let mut bots = 0;
        let mut violations = 0;
        for _ in 0..20_000 {
            match eptr_release(&gated, &[0.0][..], &b, &mut rng) {
                Ok(ReleaseOutcome::Bot) => bots += 1,
                Err(Error::ContractViolation(_)) => violations += 1,
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(violations > 0 && bots > violations * 50);

        let negative = FnAdapter {
            estimate: |_: &[f64]| Ok(vec![0.0]),
            gamma: |_: &[f64]| -1.0,
            alpha: SensitivityLevel::new(0.1).unwrap(),
            bot: BotPolicy::Null,
        };
        assert!(eptr_release(&negative, &[0.0][..], &b, &mut rng).is_err());
    }

    #[test]
    fn sampler_fallback_shape() {
        let policy = BotPolicy::Sampler {
            distribution: FallbackDistribution::UniformCube { half_width: 1.0 },
            dim: 3,
        };
        let mut rng = stream(2, &[]);
        for _ in 0..100 {
            match policy.outcome(&mut rng) {
                ReleaseOutcome::Fallback(v) => {
                    assert_eq!(v.len(), 3);
                    assert!(v.iter().all(|x| x.abs() <= 1.0));
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn ptr_release_gating() {
        let b = budget(1.0, 0.01);
        let level = SensitivityLevel::new(0.1).unwrap();
        let mut rng = stream(3, &[]);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| {
                ptr_release(&[0.0], 0.0, level, &b, &BotPolicy::Null, &mut rng)
                    .unwrap()
                    .is_released()
            })
            .count();
        let frac = hits as f64 / trials as f64;
        assert!((frac - 0.005).abs() < 0.0015, "{frac}");
    }
}
