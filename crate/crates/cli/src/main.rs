// `!(a < b)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use inertia_cli::output::{self, fmt_f};
use inertia_cli::{execute, load, parse_seeds, CliResult, Emit};
use inertia_core::dynamics::energy_nonincreasing;
use inertia_core::rates::fit_rate_with_floor;
use inertia_core::{
    builtin_problem, check_assumptions, integrate, parameter_box, rate_certificate, rate_constants, run,
    theorem_bounds, AlgorithmConfig, DomainBox, FitKind, OdeConfig, PerturbationSpec, Point, Problem,
    StoppingRule, Theorem, Variant,
};

const OK: u8 = 0;
const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;
const DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "inertia", version, about = "Inertial methods with implicit Hessian damping")]
struct Cli {
    /// Seed for sampling and random perturbations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for experiment outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Suppress tables on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the structural assumptions and print admissible parameter boxes.
    Check(CheckArgs),
    /// Integrate the continuous-time system.
    Ode(OdeArgs),
    /// Run one discrete method.
    Opt(OptArgs),
    /// Run a preset (fig12, fig34, fig45) or a TOML experiment file.
    Exp(ExpArgs),
    /// Fit a convergence rate to a column of a run CSV.
    Rate(RateArgs),
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    problem: String,
    /// Theorems to report (default: all).
    #[arg(long, value_delimiter = ',')]
    theorem: Vec<Theorem>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Step size for the discrete theorems (default 1/L).
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Sampling cube as `lo,hi`.
    #[arg(long, default_value = "-10,10", allow_hyphen_values = true, value_parser = parse_domain)]
    domain: (f64, f64),
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct OdeArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value = "none")]
    perturb: PerturbationSpec,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    x0: Vec<f64>,
    /// Initial velocity (default 0).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    v0: Vec<f64>,
    /// Start time (default 0, or 1 for perturbed runs).
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long, default_value_t = 40.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 100)]
    record_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    algo: Variant,
    #[arg(long)]
    alpha: f64,
    /// IAA extrapolation coefficient, or the baselines' gradient step.
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// IAA step size s (default 1/L).
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value = "none")]
    perturb: PerturbationSpec,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    x0: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpArgs {
    /// Preset name or path to a TOML file.
    target: String,
    /// Seed list such as `1-10` or `1,4,9`; overrides the config and --seed.
    #[arg(long)]
    seeds: Option<String>,
    /// Subset of csv,summary,checks.
    #[arg(long, value_delimiter = ',')]
    emit: Vec<String>,
}

#[derive(Args)]
struct RateArgs {
    csv: PathBuf,
    #[arg(long, default_value = "value_error")]
    column: String,
    /// Index column (`k` for discrete runs, `t` for trajectories).
    #[arg(long, default_value = "k")]
    index: String,
    #[arg(long, value_enum, default_value = "exponential")]
    kind: Kind,
    #[arg(long, default_value_t = 0.5)]
    window: f64,
    /// Values at or below this are dropped.
    #[arg(long, default_value_t = inertia_core::rates::FIT_FLOOR)]
    floor: f64,
    /// Fail (exit 1) when the fitted rate is below this.
    #[arg(long)]
    min_rate: Option<f64>,
    /// Shorthand for `--min-rate −ln(1−ρ)`.
    #[arg(long, conflicts_with = "min_rate")]
    rho: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Kind {
    Exponential,
    Power,
}

fn say(quiet: bool, text: &str) {
    if !quiet {
        // a closed pipe (`| head`) is not an error worth a panic
        let _ = writeln!(std::io::stdout().lock(), "{text}");
    }
}

fn problem_and_dim(name: &str, x0: &[f64]) -> CliResult<(Problem, Point)> {
    let p = builtin_problem(name)?;
    let x = Point::finite(x0.to_vec())?;
    x.check_dim(p.dim())?;
    Ok((p, x))
}

fn parse_domain(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    if !(lo < hi) {
        return Err(format!("empty domain [{lo}, {hi}]"));
    }
    Ok((lo, hi))
}

fn cmd_check(cli: &Cli, a: &CheckArgs) -> CliResult<u8> {
    let p = builtin_problem(&a.problem)?;
    let dom = DomainBox::cube(p.dim(), a.domain.0, a.domain.1);
    let reports = check_assumptions(&p, &dom, a.samples, cli.seed.unwrap_or(0))?;
    let mut failed = false;
    let mut text = format!(
        "problem {} (gamma={}, L={}, kappa={})\n{:<11} {:>8} {:>10} {:>14}  verdict\n",
        p.name(),
        p.gamma(),
        p.lipschitz(),
        p.kappa(),
        "assumption",
        "samples",
        "violations",
        "worst_margin"
    );
    for r in &reports {
        failed |= !r.pass;
        text += &format!(
            "{:<11} {:>8} {:>10} {:>14.6e}  {}\n",
            r.assumption.to_string(),
            r.samples,
            r.violations,
            r.worst_margin,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    // Without --theorem every box is listed for information only; a pair
    // outside one of them is not a failure.
    let explicit = !a.theorem.is_empty();
    let theorems = if explicit { a.theorem.clone() } else { Theorem::ALL.to_vec() };
    let mut boxes = Vec::new();
    for t in theorems {
        let bx = match parameter_box(&p, t, a.alpha, a.s) {
            Ok(b) => b,
            Err(e) => {
                failed |= explicit;
                text += &format!("{t}: {e}\n");
                continue;
            }
        };
        text += &format!("{t}: alpha in {}", bx.alpha_interval);
        if let Some(b) = bx.beta_interval {
            text += &format!(", beta in {b} at alpha={}", a.alpha.unwrap_or_default());
        }
        if let Some(l) = bx.derived.lambda {
            text += &format!(", lambda={l}");
        }
        if let (Some(alpha), Some(beta)) = (a.alpha, a.beta) {
            let s = a.s.unwrap_or(1.0 / p.lipschitz());
            match rate_constants(&p, t, alpha, beta, s) {
                Ok(d) => {
                    for (name, v) in [("rho", d.rho), ("sigma", d.sigma), ("N", d.n), ("c", d.c)] {
                        if let Some(v) = v {
                            text += &format!(", {name}={v:.6e}");
                        }
                    }
                }
                Err(e) => {
                    failed |= explicit;
                    text += &format!(", {e}");
                }
            }
        }
        text.push('\n');
        boxes.push(bx);
    }
    say(cli.quiet, text.trim_end());
    if let Some(path) = &a.csv {
        output::write_file(path, &output::assumptions_csv(&reports, &boxes))?;
    }
    Ok(if failed { CHECK_FAILED } else { OK })
}

fn cmd_ode(cli: &Cli, a: &OdeArgs) -> CliResult<u8> {
    let (p, x0) = problem_and_dim(&a.problem, &a.x0)?;
    let v0 = if a.v0.is_empty() { Point::zeros(p.dim()) } else { Point::finite(a.v0.clone())? };
    let mut pert = a.perturb.clone();
    if let Some(seed) = cli.seed {
        pert = pert.with_seed(seed);
    }
    let mut cfg = OdeConfig::new(a.alpha, a.beta, a.t_end)
        .with_dt(a.dt)
        .with_record_every(a.record_every)
        .perturbed(pert);
    if let Some(t0) = a.t0 {
        cfg.t0 = t0;
    }
    let recs = integrate(&p, &cfg, &x0, &v0)?;
    let last = recs.last().expect("integrate records the start");
    let mut text = format!(
        "t={} value_error={:.6e} traj_error={} speed={:.6e} energy={}",
        last.t,
        last.value_error,
        last.traj_error.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into()),
        last.speed,
        last.energy.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into()),
    );
    let mut code = OK;
    let certified = cfg.perturbation.is_none()
        && parameter_box(&p, Theorem::T31, None, None).is_ok_and(|b| b.contains(a.alpha, a.beta));
    if certified && p.minimizer().is_some() {
        let lambda = 2.0 * a.alpha / (p.kappa() + 4.0);
        let cert = rate_certificate(&recs, lambda, p.kappa())?;
        let (mono, worst) = energy_nonincreasing(&recs, 1e-6)?;
        text += &format!(
            "\nT31 certificate: decay {} (worst slack {:.3e}), monotone {} (worst increase {:.3e})",
            if cert.pass { "pass" } else { "FAIL" },
            cert.worst_slack,
            if mono { "pass" } else { "FAIL" },
            worst
        );
        if !(cert.pass && mono) {
            code = CHECK_FAILED;
        }
    }
    say(cli.quiet, &text);
    if let Some(path) = &a.out {
        let comment = format!("ode alpha={} beta={} perturb={} dt={}", a.alpha, a.beta, cfg.perturbation, a.dt);
        output::write_file(path, &output::trajectory_csv(&recs, Some(&comment)))?;
    }
    Ok(code)
}

fn cmd_opt(cli: &Cli, a: &OptArgs) -> CliResult<u8> {
    let (p, x0) = problem_and_dim(&a.problem, &a.x0)?;
    let mut algo = match a.algo {
        Variant::Iaa => AlgorithmConfig::iaa(a.alpha, a.beta, a.step.unwrap_or(1.0 / p.lipschitz())),
        v => {
            if a.step.is_some() {
                eprintln!("warning: --step only applies to iaa; baselines use --beta as the step");
            }
            AlgorithmConfig::baseline(v, a.alpha, a.theta, a.beta)
        }
    };
    let mut pert = a.perturb.clone();
    if let Some(seed) = cli.seed {
        pert = pert.with_seed(seed);
    }
    algo = algo.with_perturbation(pert);
    let res = run(&p, &algo, &x0, &x0, &StoppingRule::new(a.tol, a.max_iter))?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let last = res.last();
    let mut text = format!(
        "{algo}\nstop={} k={} value_error={:.6e} grad_norm={:.6e} grad_evals={}",
        res.stop, last.k, last.value_error, last.grad_norm, res.grad_evals
    );
    let mut code = OK;
    if let Ok(checks) = theorem_bounds(&p, &algo, &res.records) {
        for c in checks {
            text += &format!(
                "\n{} {}: {} ({} checked, worst ratio {:.3e})",
                c.theorem,
                c.name,
                if c.pass { "pass" } else { "FAIL" },
                c.checked,
                c.worst_ratio
            );
            if !c.pass {
                code = CHECK_FAILED;
            }
        }
    }
    say(cli.quiet, &text);
    if let Some(path) = &a.out {
        let scale = if a.algo == Variant::Iaa { "s" } else { "beta" };
        let comment = format!("{algo}; perturbation enters as +{scale}*eps_k");
        output::write_file(path, &output::iterates_csv(&res.records, Some(&comment)))?;
    }
    Ok(code)
}

fn cmd_exp(cli: &Cli, a: &ExpArgs) -> CliResult<u8> {
    let mut cfg = load(&a.target)?;
    if let Some(s) = &a.seeds {
        cfg.seeds = parse_seeds(s)?;
    } else if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if !a.emit.is_empty() {
        cfg.emit = a.emit.iter().map(|s| s.parse::<Emit>()).collect::<CliResult<_>>()?;
    }
    cfg.outputs = Some(cfg.outputs.take().unwrap_or_else(|| cli.out_dir.join(&cfg.name)));
    let summary = execute(&cfg)?;
    say(cli.quiet, summary.render().trim_end());
    if !cli.quiet {
        for f in &summary.files {
            say(false, &format!("wrote {}", f.display()));
        }
    }
    Ok(if summary.all_checks_pass() { OK } else { CHECK_FAILED })
}

fn cmd_rate(cli: &Cli, a: &RateArgs) -> CliResult<u8> {
    let series = output::read_series(&a.csv, &a.index, &a.column)?;
    let kind = match a.kind {
        Kind::Exponential => FitKind::Exponential,
        Kind::Power => FitKind::Power,
    };
    let fit = fit_rate_with_floor(&series, kind, a.window, a.floor)?;
    let floor = a.min_rate.or(a.rho.map(|r| -(1.0 - r).ln()));
    let pass = floor.is_none_or(|f| fit.rate >= f);
    let mut line = format!(
        "{} {} rate={} r2={} window={}..{}",
        a.column,
        kind,
        fmt_f(fit.rate),
        fmt_f(fit.r_squared),
        fit.window.0,
        fit.window.1
    );
    if let Some(f) = floor {
        line += &format!(" min_rate={} {}", fmt_f(f), if pass { "pass" } else { "FAIL" });
    }
    say(cli.quiet, &line);
    Ok(if pass { OK } else { CHECK_FAILED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Check(a) => cmd_check(&cli, a),
        Cmd::Ode(a) => cmd_ode(&cli, a),
        Cmd::Opt(a) => cmd_opt(&cli, a),
        Cmd::Exp(a) => cmd_exp(&cli, a),
        Cmd::Rate(a) => cmd_rate(&cli, a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_divergence() { DIVERGED } else { USAGE })
        }
    }
}

