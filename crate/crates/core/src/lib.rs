//! Differentially private estimation through efficient propose-test-release.
//!
//! The generic engine lives in [`mechanisms`]: an estimator is plugged in via
//! [`mechanisms::EstimatorAdapter`], which supplies a point estimate, a
//! 1-Lipschitz sub-distance `gamma` to the high-sensitivity region, and a
//! local-sensitivity level `alpha`. The engine releases the estimate with
//! Gaussian noise with probability increasing in `gamma`, and the null
//! response otherwise.
//!
//! Three instantiations are provided: a Gaussian naive-Bayes classifier
//! ([`bayes`]), ordinary least squares ([`linreg`]) and pointwise
//! Nadaraya–Watson regression ([`kernelreg`]). [`baselines`] holds simplified
//! noisy-statistics comparators, [`audit`] empirically checks the
//! (ε, δ)-inequality on adjacent datasets, and [`sim`] runs the Monte-Carlo
//! experiments.

pub mod audit;
pub mod baselines;
pub mod bayes;
pub mod error;
pub mod kernelreg;
pub mod linalg;
pub mod linreg;
pub mod mechanisms;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use mechanisms::{
    eptr_release, BotPolicy, EstimatorAdapter, PrivacyBudget, ReleaseOutcome, SensitivityLevel,
};
