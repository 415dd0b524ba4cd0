use eptr_core::audit::Problem;
use eptr_core::bayes::{bayes_eptr, BayesConfig};
use eptr_core::kernelreg::{degree, nw_eptr, Domain, KernelRegConfig, RadialKernel};
use eptr_core::linreg::RegressionDataset;
use eptr_core::mechanisms::PrivacyBudget;
use eptr_core::rng::stream;
use eptr_core::sim::*;

fn summary_for<'a>(s: &'a [Summary], value: f64, method: &str, metric: &str) -> &'a Summary {
    s.iter().find(|x| x.sweep_value == value && x.method == method && x.metric == metric).unwrap()
}

#[test]
fn bayes_generator_frequencies_and_means() {
    let mu = [0.75, 0.15, 0.10];
    let means = separated_means(3, 10, 3.0);
    let d = gen_bayes(100_000, &mu, &means, &mut stream(1, &[])).unwrap();
    let counts = d.class_counts();
    for k in 0..3 {
        assert!((counts[k] as f64 / 1e5 - mu[k]).abs() < 0.01);
        let mut m = vec![0.0; 10];
        for (x, &y) in d.features().iter().zip(d.labels()) {
            if y == k {
                m.iter_mut().zip(x).for_each(|(a, b)| *a += b / counts[k] as f64);
            }
        }
        assert!(m.iter().zip(&means[k]).all(|(a, b)| (a - b).abs() < 0.05));
    }
}

#[test]
fn linreg_generator_variance() {
    let d = gen_linreg(100_000, &harmonic_theta(5), 1.0, &mut stream(2, &[])).unwrap();
    let mean = d.y().iter().sum::<f64>() / 1e5;
    let var = d.y().iter().map(|y| (y - mean).powi(2)).sum::<f64>() / 1e5;
    assert!((var - 2.0).abs() < 0.1, "{var}");
}

#[test]
fn beta_design_is_centered() {
    let d = gen_kernel(100_000, Design::Beta { a: 3.0 }, 0.2, &mut stream(3, &[])).unwrap();
    let mean = d.x().iter().map(|x| x[0]).sum::<f64>() / 1e5;
    assert!((mean - 0.5).abs() < 0.01);
}

#[test]
fn degree_tracks_density() {
    let kernel = RadialKernel::gaussian(0.05, 1).unwrap();
    let good = (0..100)
        .filter(|&rep| {
            let d = gen_kernel(10_000, Design::Uniform, 0.2, &mut stream(4, &[rep])).unwrap();
            (degree(&[0.5], &d, &kernel) / 1e4 - 1.0).abs() < 0.05
        })
        .count();
    assert!(good >= 90, "{good}");
}

#[test]
fn release_fractions_at_default_configurations() {
    let budget = PrivacyBudget::new(1.0, 0.01).unwrap();
    let s = BayesSettings::default();
    let config = BayesConfig { r_x: s.r_x, c0: 0.02, budget };
    let means = separated_means(3, 10, 3.0);
    let released = (0..200)
        .filter(|&rep| {
            let d = gen_bayes(2000, &s.priors, &means, &mut stream(5, &[rep, 0])).unwrap();
            bayes_eptr(&d, &config, &mut stream(5, &[rep, 1])).unwrap().is_released()
        })
        .count();
    assert!(released >= 198, "{released}");

    let kc = KernelRegConfig { x0: vec![0.5], r_f: 2.0, c0: 0.1, budget, domain: Domain::UnitBox };
    let kernel = RadialKernel::gaussian(0.2 * 5000f64.powf(-0.2), 1).unwrap();
    let released = (0..200)
        .filter(|&rep| {
            let d = gen_kernel(5000, Design::Beta { a: 3.0 }, 0.2, &mut stream(6, &[rep, 0])).unwrap();
            nw_eptr(&d, &kc, &kernel, &mut stream(6, &[rep, 1])).unwrap().is_released()
        })
        .count();
    assert!(released >= 198, "{released}");
}

#[test]
fn empty_neighborhood_rarely_releases() {
    let budget = PrivacyBudget::new(1.0, 0.01).unwrap();
    let kc = KernelRegConfig { x0: vec![0.5], r_f: 1.0, c0: 0.1, budget, domain: Domain::UnitBox };
    let kernel = RadialKernel::gaussian(0.02, 1).unwrap();
    let d = RegressionDataset::new(vec![vec![0.0]; 50], vec![0.3; 50]).unwrap();
    let trials = 100_000;
    let released = (0..trials).filter(|&t| nw_eptr(&d, &kc, &kernel, &mut stream(7, &[t])).unwrap().is_released()).count();
    // p(0) ≈ 0.006 < δ
    assert!((released as f64 / trials as f64) < budget.delta());
}

#[test]
fn nonprivate_ols_error_scale() {
    let mut spec = ExperimentSpec::preset(Problem::Linreg, SweepVar::N, Preset::Ci, 8);
    spec.grid = vec![2000.0];
    spec.methods = vec![Method::Nonprivate];
    spec.test_size = 1000;
    let s = summarize(&run_experiment(&spec).unwrap());
    let mean = summary_for(&s, 2000.0, "nonprivate", "param_error").mean;
    assert!((0.5 * 5.0 / 2000.0..=2.0 * 5.0 / 2000.0).contains(&mean), "{mean}");
}

#[test]
fn linreg_eptr_error_falls_with_n() {
    let mut spec = ExperimentSpec::preset(Problem::Linreg, SweepVar::N, Preset::Ci, 9);
    spec.grid = vec![500.0, 1000.0, 2000.0, 4000.0];
    spec.epsilon = 2.0;
    spec.methods = vec![Method::Eptr];
    spec.test_size = 100;
    let s = summarize(&run_experiment(&spec).unwrap());
    let medians: Vec<f64> = spec.grid.iter().map(|&n| summary_for(&s, n, "eptr", "param_error").median).collect();
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}

#[test]
fn bayes_nonprivate_error_falls_with_n() {
    let mut spec = ExperimentSpec::preset(Problem::Bayes, SweepVar::N, Preset::Ci, 10);
    spec.grid = vec![200.0, 2000.0];
    spec.reps = 50;
    spec.methods = vec![Method::Nonprivate];
    spec.test_size = 20_000;
    let s = summarize(&run_experiment(&spec).unwrap());
    let small = summary_for(&s, 200.0, "nonprivate", "balanced_error").median;
    let large = summary_for(&s, 2000.0, "nonprivate", "balanced_error").median;
    assert!(large < small, "{small} {large}");
}

#[test]
fn kernel_nonprivate_error_and_bandwidth_rate() {
    let mut spec = ExperimentSpec::preset(Problem::Kernel, SweepVar::N, Preset::Ci, 11);
    spec.grid = vec![500.0, 2000.0, 5000.0, 8000.0];
    spec.methods = vec![Method::Nonprivate];
    let s = summarize(&run_experiment(&spec).unwrap());
    let med = |n: f64| summary_for(&s, n, "nonprivate", "sq_error").median;
    assert!(med(5000.0) < 0.02);
    assert!(med(2000.0) <= med(500.0) && med(8000.0) <= med(2000.0));
}

#[test]
fn eptr_error_falls_with_budget() {
    for problem in [Problem::Bayes, Problem::Linreg, Problem::Kernel] {
        let mut spec = ExperimentSpec::preset(problem, SweepVar::Epsilon, Preset::Ci, 12);
        spec.grid = vec![0.25, 8.0];
        spec.methods = vec![Method::Eptr];
        spec.test_size = 5000;
        let s = summarize(&run_experiment(&spec).unwrap());
        let metric = match problem {
            Problem::Bayes => "balanced_error",
            Problem::Linreg => "param_error",
            Problem::Kernel => "sq_error",
        };
        let lo = summary_for(&s, 0.25, "eptr", metric).mean;
        let hi = summary_for(&s, 8.0, "eptr", metric).mean;
        assert!(hi <= lo, "{problem:?}: {lo} {hi}");
    }
}

#[test]
fn thread_count_does_not_change_rows() {
    let mut spec = ExperimentSpec::preset(Problem::Bayes, SweepVar::PiMin, Preset::Ci, 13);
    spec.reps = 3;
    spec.n = 300;
    spec.test_size = 500;
    let a = to_csv(&run_experiment(&spec).unwrap());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| to_csv(&run_experiment(&spec).unwrap()));
    assert_eq!(a, b);
}
