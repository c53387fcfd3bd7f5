//! CSV rendering. Floats use 17 significant digits (`{:.16e}`) and rows end
//! in LF, so equal runs give byte-equal files.

use std::path::Path;

use inertia_core::{AssumptionReport, IterateRecord, ParameterBox, TrajectoryRecord};

use crate::error::{CliError, CliResult};
use crate::experiment::ComparisonSummary;

pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

fn coord_names(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

fn to_string(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer does not fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

fn with_comment(comment: Option<&str>, body: String) -> String {
    match comment {
        Some(c) => format!("# {c}\n{body}"),
        None => body,
    }
}

/// `k, x1.., value_error, grad_norm, dist, step, energy, n_grad_evals`,
/// preceded by a `#` line describing the method.
pub fn iterates_csv(records: &[IterateRecord], comment: Option<&str>) -> String {
    let dim = records.first().map_or(0, |r| r.x.dim());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k".to_string()];
    header.extend(coord_names("x", dim));
    header.extend(["value_error", "grad_norm", "dist", "step", "energy", "n_grad_evals"].map(String::from));
    w.write_record(&header).expect("in-memory write");
    for r in records {
        let mut row = vec![r.k.to_string()];
        row.extend(r.x.iter().map(|v| fmt_f(*v)));
        row.extend([
            fmt_f(r.value_error),
            fmt_f(r.grad_norm),
            fmt_opt(r.dist),
            fmt_f(r.step),
            fmt_opt(r.energy),
            r.grad_evals.to_string(),
        ]);
        w.write_record(&row).expect("in-memory write");
    }
    with_comment(comment, to_string(w))
}

/// `t, x1.., v1.., value_error, traj_error, speed, energy`.
pub fn trajectory_csv(records: &[TrajectoryRecord], comment: Option<&str>) -> String {
    let dim = records.first().map_or(0, |r| r.x.dim());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(coord_names("x", dim));
    header.extend(coord_names("v", dim));
    header.extend(["value_error", "traj_error", "speed", "energy"].map(String::from));
    w.write_record(&header).expect("in-memory write");
    for r in records {
        let mut row = vec![fmt_f(r.t)];
        row.extend(r.x.iter().chain(r.v.iter()).map(|v| fmt_f(*v)));
        row.extend([fmt_f(r.value_error), fmt_opt(r.traj_error), fmt_f(r.speed), fmt_opt(r.energy)]);
        w.write_record(&row).expect("in-memory write");
    }
    with_comment(comment, to_string(w))
}

pub fn summary_csv(s: &ComparisonSummary) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "label",
        "algorithm",
        "seeds",
        "iterations_to_tol",
        "max_iter_hit",
        "final_value_error",
        "final_dist",
        "final_norm",
        "oscillation",
        "fitted_rate",
        "grad_evals",
        "warnings",
    ])
    .expect("in-memory write");
    for (rank, label) in s.ordering.iter().enumerate() {
        let r = s.run(label).expect("ordering lists known labels");
        w.write_record([
            (rank + 1).to_string(),
            r.label.clone(),
            r.algorithm.clone(),
            r.outcomes.len().to_string(),
            r.iterations_to_tol.map(|k| k.to_string()).unwrap_or_default(),
            r.max_iter_hit.to_string(),
            fmt_f(r.final_value_error),
            fmt_opt(r.final_dist),
            fmt_f(r.final_norm),
            fmt_opt(r.oscillation),
            fmt_opt(r.fitted_rate),
            fmt_f(r.grad_evals),
            r.warnings.join("; "),
        ])
        .expect("in-memory write");
    }
    to_string(w)
}

pub fn checks_csv(s: &ComparisonSummary) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "seed", "theorem", "check", "checked", "violations", "worst_ratio", "pass"])
        .expect("in-memory write");
    for c in &s.checks {
        w.write_record([
            c.label.clone(),
            c.seed.map(|s| s.to_string()).unwrap_or_default(),
            c.bound.theorem.to_string(),
            c.bound.name.to_string(),
            c.bound.checked.to_string(),
            c.bound.violations.to_string(),
            fmt_f(c.bound.worst_ratio),
            c.bound.pass.to_string(),
        ])
        .expect("in-memory write");
    }
    to_string(w)
}

pub fn assumptions_csv(reports: &[AssumptionReport], boxes: &[ParameterBox]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "name", "samples", "violations", "worst_margin", "pass", "alpha_interval", "beta_interval"])
        .expect("in-memory write");
    for r in reports {
        w.write_record([
            "assumption".into(),
            r.assumption.to_string(),
            r.samples.to_string(),
            r.violations.to_string(),
            fmt_f(r.worst_margin),
            r.pass.to_string(),
            String::new(),
            String::new(),
        ])
        .expect("in-memory write");
    }
    for b in boxes {
        w.write_record([
            "box".into(),
            b.theorem.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            b.alpha_interval.to_string(),
            b.beta_interval.map(|i| i.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    to_string(w)
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    std::fs::write(path, contents).map_err(CliError::io(path))
}

/// Reads `(index, value)` pairs from a run CSV, skipping `#` lines and rows
/// where either cell is empty.
pub fn read_series(path: &Path, index_col: &str, value_col: &str) -> CliResult<Vec<(f64, f64)>> {
    let wrap = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(wrap)?;
    let headers = rdr.headers().map_err(wrap)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: no column `{name}`", path.display())))
    };
    let (ic, vc) = (col(index_col)?, col(value_col)?);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(wrap)?;
        let (i, v) = (&row[ic], &row[vc]);
        if i.is_empty() || v.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| CliError::Config(format!("{}: bad number `{s}`", path.display())))
        };
        out.push((parse(i)?, parse(v)?));
    }
    Ok(out)
}
