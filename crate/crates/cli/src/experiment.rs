//! Multi-run comparisons.

use std::fmt::Write as _;
use std::path::PathBuf;

use inertia_core::rates::iterations_to;
use inertia_core::{
    builtin_problem, fit_rate, oscillation_metric, run, theorem_bounds, BoundCheck, Error, FitKind,
    RunResult, StopReason,
};
use rayon::prelude::*;

use crate::config::{Emit, ExperimentConfig, RunSpec};
use crate::error::{CliError, CliResult};
use crate::output;

/// Outcome of one `(run, seed)` job.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    /// `None` for runs whose perturbation ignores the seed.
    pub seed: Option<u64>,
    pub iterations: usize,
    pub stop: StopReason,
    pub iterations_to_tol: Option<usize>,
    pub final_value_error: f64,
    pub final_dist: Option<f64>,
    pub final_norm: f64,
    pub oscillation: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub grad_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub algorithm: String,
    pub outcomes: Vec<SeedOutcome>,
    /// Worst case over seeds; `None` if any seed stopped on `max_iter`.
    pub iterations_to_tol: Option<usize>,
    pub max_iter_hit: bool,
    // seed means below
    pub final_value_error: f64,
    pub final_dist: Option<f64>,
    pub final_norm: f64,
    /// Reversal fraction; see [`inertia_core::oscillation_metric`].
    pub oscillation: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub grad_evals: f64,
    pub warnings: Vec<String>,
}

/// One theorem-bound assertion evaluated along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub label: String,
    pub seed: Option<u64>,
    pub bound: BoundCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub name: String,
    pub problem: String,
    pub runs: Vec<RunSummary>,
    /// Labels by iterations-to-tolerance, then by final value error.
    pub ordering: Vec<String>,
    pub checks: Vec<CheckRecord>,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
}

impl ComparisonSummary {
    pub fn run(&self, label: &str) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.label == label)
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.bound.pass)
    }

    /// Plain-text table for terminals.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment {} on {}", self.name, self.problem);
        let _ = writeln!(
            out,
            "{:>4}  {:<10} {:>6} {:>10} {:>12} {:>12} {:>8} {:>10}",
            "rank", "label", "seeds", "iters", "f - f*", "|x|", "osc", "grad_evals"
        );
        for (i, label) in self.ordering.iter().enumerate() {
            let r = self.run(label).expect("ordering lists known labels");
            let iters = match r.iterations_to_tol {
                Some(k) => k.to_string(),
                None => format!("{}*", r.outcomes.iter().map(|o| o.iterations).max().unwrap_or(0)),
            };
            let osc = r.oscillation.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:>4}  {:<10} {:>6} {:>10} {:>12.4e} {:>12.4e} {:>8} {:>10.1}",
                i + 1,
                r.label,
                r.outcomes.len(),
                iters,
                r.final_value_error,
                r.final_norm,
                osc,
                r.grad_evals
            );
        }
        if self.runs.iter().any(|r| r.max_iter_hit) {
            let _ = writeln!(out, "* stopped on max_iter");
        }
        let _ = writeln!(out, "osc = fraction of consecutive steps that reverse direction");
        if !self.checks.is_empty() {
            let failed = self.checks.iter().filter(|c| !c.bound.pass).count();
            let _ = writeln!(out, "theorem checks: {} evaluated, {} failed", self.checks.len(), failed);
        }
        for r in &self.runs {
            for w in &r.warnings {
                let _ = writeln!(out, "warning [{}]: {w}", r.label);
            }
        }
        out
    }
}

struct Job<'a> {
    spec: &'a RunSpec,
    seed: Option<u64>,
}

struct JobOutput {
    outcome: SeedOutcome,
    checks: Vec<BoundCheck>,
    warnings: Vec<String>,
    csv: Option<String>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>> + Clone) -> Option<f64> {
    if xs.clone().all(|x| x.is_some()) {
        let m = mean(xs.flatten());
        (!m.is_nan()).then_some(m)
    } else {
        None
    }
}

fn summarize(res: &RunResult, seed: Option<u64>, tol: f64) -> SeedOutcome {
    let last = res.last();
    let series: Vec<(f64, f64)> = res.records.iter().skip(1).map(|r| (r.k as f64, r.value_error)).collect();
    SeedOutcome {
        seed,
        iterations: res.iterations(),
        stop: res.stop,
        iterations_to_tol: if tol > 0.0 { iterations_to(&res.records[1..], tol) } else { None },
        final_value_error: last.value_error,
        final_dist: last.dist,
        final_norm: last.x.norm(),
        oscillation: oscillation_metric(&res.records).ok(),
        fitted_rate: fit_rate(&series, FitKind::Exponential, 0.5).ok().map(|f| f.rate),
        grad_evals: res.grad_evals,
    }
}

fn run_job(job: &Job<'_>, problem: &inertia_core::Problem, want_csv: bool) -> CliResult<JobOutput> {
    let spec = job.spec;
    let mut algo = spec.algo.clone();
    if let Some(seed) = job.seed {
        algo.perturb = algo.perturb.with_seed(seed);
    }
    let x1 = spec.x1.as_ref().unwrap_or(&spec.x0);
    let wrap = |source: Error| CliError::Run { label: spec.label.clone(), seed: job.seed, source };
    let res = run(problem, &algo, &spec.x0, x1, &spec.stop).map_err(wrap)?;
    let checks = match theorem_bounds(problem, &algo, &res.records) {
        Ok(c) => c,
        // no theorem covers this configuration
        Err(Error::OutOfBox { .. } | Error::InvalidParameter(_) | Error::MissingMinimizer) => Vec::new(),
        Err(e) => return Err(wrap(e)),
    };
    let csv = want_csv.then(|| {
        let scale = if algo.variant == inertia_core::Variant::Iaa { "s" } else { "beta" };
        let comment = format!("{}: {algo}; perturbation enters as +{scale}*eps_k", spec.label);
        output::iterates_csv(&res.records, Some(&comment))
    });
    Ok(JobOutput { outcome: summarize(&res, job.seed, spec.stop.tol), checks, warnings: res.warnings, csv })
}

fn csv_name(label: &str, seed: Option<u64>) -> String {
    let base = label.to_ascii_lowercase();
    match seed {
        Some(s) => format!("{base}_seed{s}.csv"),
        None => format!("{base}.csv"),
    }
}

/// Runs every `(run, seed)` job, in parallel, and writes the requested files
/// under `cfg.outputs` (nothing is written when it is `None`).
pub fn execute(cfg: &ExperimentConfig) -> CliResult<ComparisonSummary> {
    cfg.validate()?;
    let problem = builtin_problem(&cfg.problem)?;
    let jobs: Vec<Job<'_>> = cfg
        .runs
        .iter()
        .flat_map(|spec| {
            let seeds: Vec<Option<u64>> = if spec.algo.perturb.uses_seed() {
                cfg.seeds.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            seeds.into_iter().map(move |seed| Job { spec, seed })
        })
        .collect();
    let want_csv = cfg.outputs.is_some() && cfg.emit.contains(&Emit::Csv);
    let results: Vec<CliResult<JobOutput>> = jobs.par_iter().map(|j| run_job(j, &problem, want_csv)).collect();

    let mut files = Vec::new();
    let mut checks = Vec::new();
    let mut runs: Vec<RunSummary> = Vec::new();
    for (job, res) in jobs.iter().zip(results) {
        let out = res?;
        if let (Some(dir), Some(text)) = (&cfg.outputs, &out.csv) {
            let path = dir.join(csv_name(&job.spec.label, job.seed));
            output::write_file(&path, text)?;
            files.push(path);
        }
        checks.extend(out.checks.into_iter().map(|bound| CheckRecord {
            label: job.spec.label.clone(),
            seed: job.seed,
            bound,
        }));
        match runs.last_mut().filter(|r| r.label == job.spec.label) {
            Some(r) => {
                r.outcomes.push(out.outcome);
                for w in out.warnings {
                    if !r.warnings.contains(&w) {
                        r.warnings.push(w);
                    }
                }
            }
            None => runs.push(RunSummary {
                label: job.spec.label.clone(),
                algorithm: job.spec.algo.to_string(),
                outcomes: vec![out.outcome],
                iterations_to_tol: None,
                max_iter_hit: false,
                final_value_error: 0.0,
                final_dist: None,
                final_norm: 0.0,
                oscillation: None,
                fitted_rate: None,
                grad_evals: 0.0,
                warnings: out.warnings,
            }),
        }
    }
    for r in &mut runs {
        let o = &r.outcomes;
        r.max_iter_hit = o.iter().any(|x| x.stop == StopReason::MaxIter);
        r.iterations_to_tol = if o.iter().all(|x| x.stop == StopReason::Tolerance) {
            o.iter().map(|x| x.iterations).max()
        } else {
            None
        };
        r.final_value_error = mean(o.iter().map(|x| x.final_value_error));
        r.final_dist = mean_opt(o.iter().map(|x| x.final_dist));
        r.final_norm = mean(o.iter().map(|x| x.final_norm));
        r.oscillation = mean_opt(o.iter().map(|x| x.oscillation));
        r.fitted_rate = mean_opt(o.iter().map(|x| x.fitted_rate));
        r.grad_evals = mean(o.iter().map(|x| x.grad_evals as f64));
    }

    let mut order: Vec<&RunSummary> = runs.iter().collect();
    order.sort_by(|a, b| {
        let ka = a.iterations_to_tol.unwrap_or(usize::MAX);
        let kb = b.iterations_to_tol.unwrap_or(usize::MAX);
        ka.cmp(&kb).then(a.final_value_error.total_cmp(&b.final_value_error))
    });
    let ordering = order.into_iter().map(|r| r.label.clone()).collect();

    let mut summary = ComparisonSummary {
        name: cfg.name.clone(),
        problem: problem.name().to_string(),
        runs,
        ordering,
        checks,
        files,
    };
    if let Some(dir) = &cfg.outputs {
        if cfg.emit.contains(&Emit::Summary) {
            let path = dir.join("summary.csv");
            output::write_file(&path, &output::summary_csv(&summary))?;
            summary.files.push(path);
        }
        if cfg.emit.contains(&Emit::Checks) {
            let path = dir.join("checks.csv");
            output::write_file(&path, &output::checks_csv(&summary))?;
            summary.files.push(path);
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    #[test]
    fn empty_experiment_is_fine() {
        let cfg = ExperimentConfig::empty("nothing", "example51");
        let s = execute(&cfg).unwrap();
        assert!(s.runs.is_empty() && s.ordering.is_empty() && s.all_checks_pass());
    }

    #[test]
    fn fig12_ranks_iaa_first_and_checks_pass() {
        let s = execute(&preset("fig12").unwrap()).unwrap();
        assert_eq!(s.ordering[0], "IAA");
        assert_eq!(s.run("IAA").unwrap().iterations_to_tol, Some(14));
        assert_eq!(s.run("HBM").unwrap().iterations_to_tol, Some(69));
        let iaa_checks: Vec<_> = s.checks.iter().filter(|c| c.label == "IAA").collect();
        assert!(iaa_checks.iter().any(|c| c.bound.name == "energy_contraction"));
        assert!(s.all_checks_pass());
        assert!(s.checks.iter().all(|c| c.label == "IAA"));
    }

    #[test]
    fn deterministic_runs_ignore_seeds() {
        let s = execute(&preset("fig12").unwrap().with_seeds(vec![1, 2, 3])).unwrap();
        assert!(s.runs.iter().all(|r| r.outcomes.len() == 1 && r.outcomes[0].seed.is_none()));
    }

    #[test]
    fn fig34_hits_iteration_cap_for_slow_methods() {
        let s = execute(&preset("fig34").unwrap()).unwrap();
        let hbm = s.run("HBM").unwrap();
        assert!(hbm.max_iter_hit);
        assert_eq!(hbm.outcomes[0].iterations, 50);
        assert_eq!(s.ordering[0], "IAA");
        assert!(s.render().contains("* stopped on max_iter"));
    }

    #[test]
    fn run_errors_carry_label() {
        let mut cfg = ExperimentConfig::empty("boom", "example51");
        cfg.runs.push(RunSpec::new(
            "wild",
            inertia_core::AlgorithmConfig::hbm(0.0, 10.0),
            vec![3.0],
            inertia_core::StoppingRule::default(),
        ));
        let err = execute(&cfg).unwrap_err();
        assert!(err.is_divergence());
        assert!(err.to_string().starts_with("run `wild`"), "{err}");
    }
}
