//! `eptr`: simulations, privacy audits, single releases and kernel
//! construction.
//!
//! Exit codes: 0 success, 1 audit FAIL, 2 usage or configuration error.

mod input;
mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eptr_core::audit::{audit_problem, AuditReport, AuditTarget, Problem};
use eptr_core::bayes::{bayes_eptr, BayesConfig};
use eptr_core::kernelreg::{
    build_higher_order_kernel, kernel_moment, kernel_moment_quadrature, nw_eptr, Domain, KernelRegConfig,
};
use eptr_core::linreg::{linreg_eptr, LinRegConfig};
use eptr_core::mechanisms::{PrivacyBudget, ReleaseOutcome};
use eptr_core::rng::stream;
use eptr_core::sim::{
    run_experiment, summarize, to_csv, BayesSettings, ExperimentSpec, KernelSettings, LinRegSettings, Method, Preset,
    SweepVar,
};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "eptr", version, about = "Efficient propose-test-release estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep over one variable; writes one CSV row per
    /// (grid point, replication, method, metric).
    Sim(SimArgs),
    /// Empirical (ε, δ) audit on the built-in adjacent pairs.
    Audit(AuditArgs),
    /// One private release on a CSV dataset.
    Release(ReleaseArgs),
    /// Print the mixture coefficients and moments of a higher-order kernel.
    KernelBuild(KernelBuildArgs),
}

/// Parses a snake_case name through the serde representation of `T`.
fn snake<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

#[derive(Args)]
struct Threads {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimArgs {
    /// JSON experiment spec; flags given on the command line override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// bayes | linreg | kernel
    #[arg(long, value_parser = snake::<Problem>)]
    problem: Option<Problem>,
    /// epsilon | n | pi_min | a
    #[arg(long, value_parser = snake::<SweepVar>)]
    vary: Option<SweepVar>,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// full (500 reps) | ci (100 reps)
    #[arg(long, value_parser = snake::<Preset>, default_value = "ci")]
    preset: Preset,
    #[arg(long)]
    test_size: Option<usize>,
    /// Comma-separated subset of nonprivate,eptr,baseline
    #[arg(long, value_delimiter = ',', value_parser = snake::<Method>)]
    methods: Option<Vec<Method>>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_parser = snake::<Problem>)]
    problem: Problem,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 200_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Per-event CSV report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the text verdict here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Audit the simplified noisy-statistics comparator instead.
    #[arg(long, conflicts_with = "break_lipschitz")]
    baseline: bool,
    /// Bayes only: audit a deliberately broken mechanism.
    #[arg(long)]
    break_lipschitz: bool,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct ReleaseArgs {
    #[arg(long, value_parser = snake::<Problem>)]
    problem: Problem,
    /// bayes: label,x…; linreg: y,x…; kernel: y,x
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    /// Feature radius (bayes, linreg).
    #[arg(long)]
    r_x: Option<f64>,
    #[arg(long)]
    r_theta: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    /// Number of classes (bayes); defaults to the largest label plus one.
    #[arg(long)]
    classes: Option<usize>,
    /// Response bound (kernel).
    #[arg(long)]
    r_f: Option<f64>,
    /// Query point (kernel).
    #[arg(long)]
    x0: Option<f64>,
    /// Bandwidth (kernel); defaults to 0.2·n^(−1/5).
    #[arg(long)]
    sigma: Option<f64>,
    /// Mixture size of the kernel (kernel).
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct KernelBuildArgs {
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    d: usize,
}

enum Failure {
    Usage(String),
    AuditFail,
}

impl From<eptr_core::Error> for Failure {
    fn from(e: eptr_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn with_threads<T>(threads: &Threads, f: impl FnOnce() -> Result<T, Failure> + Send) -> Result<T, Failure>
where
    T: Send,
{
    match threads.threads {
        None => f(),
        Some(0) => Err(Failure::Usage("--threads must be positive".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build().map_err(|e| Failure::Usage(e.to_string()))?;
            pool.install(f)
        }
    }
}

/// Writes to stdout; a closed pipe (`eptr … | head`) is not an error.
fn say(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => Ok(output::write_atomic(p, text)?),
        None => {
            say(text);
            Ok(())
        }
    }
}

fn sim_spec(args: &SimArgs) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentSpec>(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let (Some(problem), Some(vary)) = (args.problem, args.vary) else {
                return Err(Failure::Usage("--problem and --vary are required without --spec".into()));
            };
            let Some(seed) = args.seed else {
                return Err(Failure::Usage("--seed is required".into()));
            };
            ExperimentSpec::preset(problem, vary, args.preset, seed)
        }
    };
    if let Some(p) = args.problem {
        spec.problem = p;
    }
    if let Some(v) = args.vary {
        if v != spec.sweep_var && args.grid.is_none() {
            spec.grid = v.default_grid();
        }
        spec.sweep_var = v;
    }
    if let Some(g) = &args.grid {
        spec.grid = g.clone();
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(r) = args.reps {
        spec.reps = r;
    }
    if let Some(e) = args.epsilon {
        spec.epsilon = e;
    }
    if let Some(d) = args.delta {
        spec.delta = d;
    }
    if let Some(s) = args.seed {
        spec.master_seed = s;
    }
    if let Some(t) = args.test_size {
        spec.test_size = t;
    }
    if let Some(m) = &args.methods {
        spec.methods = m.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn run_sim(args: SimArgs) -> Result<(), Failure> {
    let spec = sim_spec(&args)?;
    let rows = with_threads(&args.threads, || Ok(run_experiment(&spec)?))?;
    emit(&args.out, &to_csv(&rows))?;

    let mut lines = String::new();
    let summaries = summarize(&rows);
    for &v in &spec.grid {
        let _ = write!(lines, "{}={v}:", spec.sweep_var.name());
        for s in summaries.iter().filter(|s| s.sweep_value == v) {
            let _ = write!(lines, " {} {} median={:.4e} released={:.3};", s.method, s.metric, s.median, s.release_fraction);
        }
        lines.push('\n');
    }
    if args.out.is_some() {
        say(&lines);
    } else {
        eprint!("{lines}");
    }
    Ok(())
}

fn audit_csv(reports: &[AuditReport]) -> String {
    let mut out = String::from(AuditReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        for row in r.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

fn run_audit(args: AuditArgs) -> Result<(), Failure> {
    let budget = PrivacyBudget::new(args.epsilon, args.delta)?;
    let target = if args.break_lipschitz {
        AuditTarget::BrokenLipschitz
    } else if args.baseline {
        AuditTarget::Baseline
    } else {
        AuditTarget::Eptr
    };
    let reports = with_threads(&args.threads, || Ok(audit_problem(args.problem, target, budget, args.trials, args.seed)?))?;

    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.summary());
        text.push('\n');
    }
    let pass = reports.iter().all(AuditReport::pass);
    let worst = reports.iter().map(AuditReport::min_margin).fold(f64::INFINITY, f64::min);
    let _ = writeln!(
        text,
        "VERDICT: {} ({} {}, {} pairs, min margin {:+.5})",
        if pass { "PASS" } else { "FAIL" },
        args.problem.name(),
        match target {
            AuditTarget::Eptr => "eptr",
            AuditTarget::Baseline => "baseline",
            AuditTarget::BrokenLipschitz => "broken_lipschitz",
        },
        reports.len(),
        worst
    );
    say(&text);
    if let Some(p) = &args.out {
        output::write_atomic(p, &audit_csv(&reports))?;
    }
    if let Some(p) = &args.report {
        output::write_atomic(p, &text)?;
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::AuditFail)
    }
}

fn print_outcome(outcome: ReleaseOutcome<Vec<f64>>) {
    match outcome {
        ReleaseOutcome::Released(v) | ReleaseOutcome::Fallback(v) => say(&format!("{}\n", output::join_values(&v))),
        ReleaseOutcome::Bot => say("BOT\n"),
    }
}

fn run_release(args: ReleaseArgs) -> Result<(), Failure> {
    let budget = PrivacyBudget::new(args.epsilon, args.delta)?;
    let mut rng = stream(args.seed, &[]);
    eprintln!(
        "warning: this release spends (epsilon, delta) = ({}, {}); releases on the same data compose",
        args.epsilon, args.delta
    );
    let outcome = match args.problem {
        Problem::Bayes => {
            let data = input::read_labeled(&args.input, args.classes).map_err(Failure::Usage)?;
            let d = BayesSettings::default();
            let config = BayesConfig { r_x: args.r_x.unwrap_or(d.r_x), c0: args.c0.unwrap_or(d.c0), budget };
            bayes_eptr(&data, &config, &mut rng)?.map(|p| p.flatten())
        }
        Problem::Linreg => {
            let data = input::read_regression(&args.input, false).map_err(Failure::Usage)?;
            let d = LinRegSettings { dim: data.dim(), ..Default::default() };
            let config = LinRegConfig {
                r_x: args.r_x.unwrap_or(d.r_x()),
                r_theta: args.r_theta.unwrap_or(d.r_theta),
                c0: args.c0.unwrap_or(d.c0),
                budget,
            };
            linreg_eptr(&data, &config, &mut rng)?
        }
        Problem::Kernel => {
            let data = input::read_regression(&args.input, true).map_err(Failure::Usage)?;
            let d = KernelSettings::default();
            let sigma = args.sigma.unwrap_or(d.bandwidth(data.n()));
            let kernel = build_higher_order_kernel(args.order, sigma, 1)?;
            let config = KernelRegConfig {
                x0: vec![args.x0.unwrap_or(d.x0)],
                r_f: args.r_f.unwrap_or(d.r_f),
                c0: args.c0.unwrap_or(d.c0),
                budget,
                domain: Domain::UnitBox,
            };
            nw_eptr(&data, &config, &kernel, &mut rng)?.map(|f| vec![f])
        }
    };
    print_outcome(outcome);
    Ok(())
}

fn run_kernel_build(args: KernelBuildArgs) -> Result<(), Failure> {
    let kernel = build_higher_order_kernel(args.s, args.sigma, args.d)?;
    let mut text = String::new();
    let _ = writeln!(text, "# s={} sigma={} d={} C_K={}", args.s, args.sigma, args.d, output::sig12(kernel.c_k()));
    text.push_str("i,a_i\n");
    for &(a, i) in kernel.mixture() {
        let _ = writeln!(text, "{i},{}", output::sig12(a));
    }
    // one-dimensional profile moments; 1..2s−1 vanish
    text.push_str("j,moment,quadrature,check\n");
    let top = 2 * args.s as u32;
    for j in 0..=top {
        let quad = kernel_moment_quadrature(&kernel, j);
        let check = match j {
            0 if (quad - 1.0).abs() < 1e-8 => "ok",
            0 => "FAIL",
            j if j == top => "-",
            _ if quad.abs() < 1e-8 => "ok",
            _ => "FAIL",
        };
        let _ = writeln!(text, "{j},{:.6e},{quad:.6e},{check}", kernel_moment(&kernel, j));
    }
    say(&text);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Sim(a) => run_sim(a),
        Command::Audit(a) => run_audit(a),
        Command::Release(a) => {
            let threads = Threads { threads: a.threads.threads };
            with_threads(&threads, || run_release(a))
        }
        Command::KernelBuild(a) => run_kernel_build(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::AuditFail) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
