//! Experiment descriptions: presets and TOML config files.
//!
//! A config file has top-level `problem`, optional `name`, `seeds`, `emit`
//! and `outputs`, and one `[runs.<label>]` table per run:
//!
//! ```toml
//! problem = "example51"
//! seeds = [1, 2]
//!
//! [runs.IAA]
//! algo = "iaa"
//! alpha = 0.3
//! beta = 0.2
//! s = 0.16666666666666666
//! x0 = [3.0]
//! tol = 1e-10
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use inertia_core::{AlgorithmConfig, PerturbationSpec, Point, StoppingRule, Variant};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Emit {
    Csv,
    Summary,
    Checks,
}

impl Emit {
    pub fn all() -> BTreeSet<Emit> {
        [Emit::Csv, Emit::Summary, Emit::Checks].into_iter().collect()
    }
}

impl FromStr for Emit {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim() {
            "csv" => Ok(Emit::Csv),
            "summary" => Ok(Emit::Summary),
            "checks" => Ok(Emit::Checks),
            other => Err(CliError::Config(format!("unknown emit target `{other}`"))),
        }
    }
}

impl fmt::Display for Emit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Emit::Csv => "csv",
            Emit::Summary => "summary",
            Emit::Checks => "checks",
        })
    }
}

/// One labelled run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub algo: AlgorithmConfig,
    pub x0: Point,
    /// Defaults to `x0`.
    pub x1: Option<Point>,
    pub stop: StoppingRule,
}

impl RunSpec {
    pub fn new(label: &str, algo: AlgorithmConfig, x0: Vec<f64>, stop: StoppingRule) -> Self {
        RunSpec { label: label.to_string(), algo, x0: Point::new(x0), x1: None, stop }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: String,
    pub runs: Vec<RunSpec>,
    /// Seeds for runs whose perturbation is random; deterministic runs go once.
    pub seeds: Vec<u64>,
    /// Where files go; `None` keeps everything in memory.
    pub outputs: Option<PathBuf>,
    pub emit: BTreeSet<Emit>,
}

impl ExperimentConfig {
    pub fn empty(name: &str, problem: &str) -> Self {
        ExperimentConfig {
            name: name.to_string(),
            problem: problem.to_string(),
            runs: Vec::new(),
            seeds: vec![0],
            outputs: None,
            emit: Emit::all(),
        }
    }

    pub fn with_outputs(mut self, dir: impl Into<PathBuf>) -> Self {
        self.outputs = Some(dir.into());
        self
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        let mut seen = BTreeSet::new();
        for r in &self.runs {
            if r.label.is_empty()
                || !r.label.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            {
                return Err(CliError::Config(format!(
                    "label `{}` must be nonempty and use only [A-Za-z0-9._-]",
                    r.label
                )));
            }
            if !seen.insert(r.label.to_ascii_lowercase()) {
                return Err(CliError::Config(format!("duplicate run label `{}`", r.label)));
            }
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seed list is empty".into()));
        }
        Ok(())
    }
}

const FIG51_START: [f64; 1] = [3.0];
const FIG52_START: [f64; 2] = [3.0, 3.0];

fn example51_runs(stop: StoppingRule) -> Vec<RunSpec> {
    let x0 = FIG51_START.to_vec();
    let step = 1.0 / 24.0;
    vec![
        RunSpec::new("IAA", AlgorithmConfig::iaa(0.3, 0.2, 1.0 / 6.0), x0.clone(), stop),
        RunSpec::new("HBM", AlgorithmConfig::hbm(0.7, step), x0.clone(), stop),
        RunSpec::new("NAG", AlgorithmConfig::nag(0.7, step), x0.clone(), stop),
        RunSpec::new("HBM-H", AlgorithmConfig::hbm_h(0.7, 0.05, step), x0.clone(), stop),
        RunSpec::new("NAG-H", AlgorithmConfig::nag_h(0.7, 0.05, step), x0, stop),
    ]
}

fn example52_runs() -> Vec<RunSpec> {
    let noise = PerturbationSpec::gaussian_decay(0.001, 0.01, 0).expect("valid schedule");
    let stop = StoppingRule::iterations(200);
    let x0 = FIG52_START.to_vec();
    let per = |cfg: AlgorithmConfig| cfg.with_perturbation(noise.clone());
    vec![
        RunSpec::new("IAA-Per", per(AlgorithmConfig::iaa(0.4, 0.15, 0.125)), x0.clone(), stop),
        RunSpec::new("HBM-Per", per(AlgorithmConfig::hbm(0.7, 0.04)), x0.clone(), stop),
        RunSpec::new("NAG-Per", per(AlgorithmConfig::nag(0.7, 0.04)), x0.clone(), stop),
        RunSpec::new("HBM-H-Per", per(AlgorithmConfig::hbm_h(0.7, 0.05, 0.04)), x0.clone(), stop),
        RunSpec::new("NAG-H-Per", per(AlgorithmConfig::nag_h(0.7, 0.05, 0.04)), x0, stop),
    ]
}

/// Built-in experiments.
///
/// * `fig12`: five methods on example51 until `f − f* ≤ 1e-10`.
/// * `fig34`: the same runs capped at 50 iterations.
/// * `fig45`: five perturbed methods on example52 for 200 iterations,
///   seeds 1 to 10.
pub fn preset(name: &str) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::empty(name, "example51");
    match name {
        "fig12" => cfg.runs = example51_runs(StoppingRule::new(1e-10, 100_000)),
        "fig34" => cfg.runs = example51_runs(StoppingRule::new(1e-10, 50)),
        "fig45" => {
            cfg.problem = "example52".into();
            cfg.runs = example52_runs();
            cfg.seeds = (1..=10).collect();
        }
        other => return Err(CliError::UnknownPreset(other.to_string())),
    }
    Ok(cfg)
}

pub const PRESETS: [&str; 3] = ["fig12", "fig34", "fig45"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    name: Option<String>,
    problem: String,
    seeds: Option<Vec<u64>>,
    emit: Option<Vec<String>>,
    outputs: Option<PathBuf>,
    #[serde(default)]
    runs: toml::Table,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRun {
    algo: String,
    alpha: f64,
    beta: f64,
    #[serde(default)]
    theta: f64,
    s: Option<f64>,
    perturb: Option<String>,
    x0: Vec<f64>,
    x1: Option<Vec<f64>>,
    tol: Option<f64>,
    max_iter: Option<usize>,
}

impl FileRun {
    fn into_spec(self, label: String) -> CliResult<RunSpec> {
        let variant: Variant = self.algo.parse()?;
        let mut algo = match variant {
            Variant::Iaa => {
                let s = self.s.ok_or_else(|| CliError::Config(format!("run `{label}`: iaa needs `s`")))?;
                AlgorithmConfig::iaa(self.alpha, self.beta, s)
            }
            v => AlgorithmConfig::baseline(v, self.alpha, self.theta, self.beta),
        };
        if let Some(spec) = self.perturb {
            algo = algo.with_perturbation(spec.parse()?);
        }
        let defaults = StoppingRule::default();
        Ok(RunSpec {
            label,
            algo,
            x0: Point::new(self.x0),
            x1: self.x1.map(Point::new),
            stop: StoppingRule::new(self.tol.unwrap_or(defaults.tol), self.max_iter.unwrap_or(defaults.max_iter)),
        })
    }
}

/// Parses a TOML experiment description; `fallback_name` names it when the
/// file has no `name` key.
pub fn parse_config(text: &str, fallback_name: &str) -> CliResult<ExperimentConfig> {
    let file: FileConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let mut runs = Vec::with_capacity(file.runs.len());
    for (label, value) in file.runs {
        let run: FileRun = value.try_into().map_err(|e| CliError::Config(format!("run `{label}`: {e}")))?;
        runs.push(run.into_spec(label)?);
    }
    let emit = match file.emit {
        Some(list) => list.iter().map(|s| s.parse()).collect::<CliResult<_>>()?,
        None => Emit::all(),
    };
    let cfg = ExperimentConfig {
        name: file.name.unwrap_or_else(|| fallback_name.to_string()),
        problem: file.problem,
        runs,
        seeds: file.seeds.unwrap_or_else(|| vec![0]),
        outputs: file.outputs,
        emit,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves `exp` targets: a preset name or a path to a TOML file.
pub fn load(target: &str) -> CliResult<ExperimentConfig> {
    if PRESETS.contains(&target) {
        return preset(target);
    }
    let path = Path::new(target);
    if !path.exists() {
        return Err(CliError::UnknownPreset(target.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    parse_config(&text, stem)
}

/// Parses seed lists such as `1,2,5` or `1-10`.
pub fn parse_seeds(s: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Config(format!("bad seed list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_published_settings() {
        let c = preset("fig12").unwrap();
        assert_eq!(c.runs.len(), 5);
        assert_eq!(c.problem, "example51");
        assert!(c.runs.iter().all(|r| r.stop.tol == 1e-10 && r.x0.as_slice() == [3.0]));
        assert_eq!(c.runs[0].algo, AlgorithmConfig::iaa(0.3, 0.2, 1.0 / 6.0));
        assert_eq!(c.runs[3].algo, AlgorithmConfig::hbm_h(0.7, 0.05, 1.0 / 24.0));

        let c = preset("fig34").unwrap();
        assert!(c.runs.iter().all(|r| r.stop.max_iter == 50));

        let c = preset("fig45").unwrap();
        assert_eq!(c.problem, "example52");
        assert_eq!(c.seeds, (1..=10).collect::<Vec<_>>());
        for r in &c.runs {
            assert_eq!(r.stop.max_iter, 200);
            assert_eq!(r.algo.perturb.sigma_at(100), Some(0.0005));
        }
        assert_eq!(c.runs[4].algo, AlgorithmConfig::nag_h(0.7, 0.05, 0.04).with_perturbation(c.runs[4].algo.perturb.clone()));
        assert!(matches!(preset("fig99"), Err(CliError::UnknownPreset(_))));
    }

    #[test]
    fn config_file_round_trip() {
        let text = r#"
            problem = "example52"
            seeds = [4, 5]
            emit = ["summary"]

            [runs.zeta]
            algo = "nag-h"
            alpha = 0.7
            beta = 0.04
            theta = 0.05
            perturb = "gauss:sigma0=0.001,decay=0.01"
            x0 = [3.0, 3.0]
            max_iter = 20

            [runs.alpha]
            algo = "iaa"
            alpha = 0.4
            beta = 0.15
            s = 0.125
            x0 = [3.0, 3.0]
        "#;
        let c = parse_config(text, "mine").unwrap();
        assert_eq!(c.name, "mine");
        assert_eq!(c.seeds, vec![4, 5]);
        assert_eq!(c.emit, [Emit::Summary].into_iter().collect());
        // file order, not alphabetical
        assert_eq!(c.runs[0].label, "zeta");
        assert_eq!(c.runs[0].algo.variant, Variant::NagH);
        assert_eq!(c.runs[0].stop, StoppingRule::new(1e-10, 20));
        assert_eq!(c.runs[1].algo, AlgorithmConfig::iaa(0.4, 0.15, 0.125));
    }

    #[test]
    fn config_errors() {
        assert!(parse_config("problem = 1", "x").is_err());
        assert!(parse_config("problem = \"example51\"\nbogus = 2", "x").is_err());
        let missing_s = "problem = \"example51\"\n[runs.a]\nalgo = \"iaa\"\nalpha = 0.3\nbeta = 0.2\nx0 = [3.0]";
        assert!(parse_config(missing_s, "x").is_err());
        let dup = "problem = \"example51\"\n[runs.a]\nalgo = \"hbm\"\nalpha = 0.3\nbeta = 0.2\nx0 = [3.0]\n\
                   [runs.A]\nalgo = \"hbm\"\nalpha = 0.3\nbeta = 0.2\nx0 = [3.0]";
        assert!(matches!(parse_config(dup, "x"), Err(CliError::Config(_))));
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1-3,7").unwrap(), vec![1, 2, 3, 7]);
        assert!(parse_seeds("3-1").is_err());
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("a").is_err());
    }
}
