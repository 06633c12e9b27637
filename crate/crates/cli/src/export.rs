//! CSV and JSON artifacts. Floats are written with 17 significant digits so
//! repeated runs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cornerflow::{BoundaryCurve, CharGrid, CharNode, DeltaBarProfile, EosModel, LevelCurve};
use serde::Serialize;
use serde_json::json;

use crate::config::Target;
use crate::error::CliError;
use crate::pipeline::{Run, Setup, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub const GRID_HEADER: &str = "xi,eta,u,v,tau,phi,alpha,beta,status";
pub const CURVE_HEADER: &str = "xi,eta,u,v,tau,phi,alpha,beta";
pub const EOS_HEADER: &str = "tau,p,dp,d2p,c,m,m_prime,delta_bar,psi,chi";

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

fn state_cols(n: &CharNode) -> String {
    [n.xi, n.eta, n.u, n.v, n.tau, n.phi, n.alpha, n.beta].iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

/// One row per node in row-major order; nodes without a state get `nan`.
pub fn grid_csv(grid: &CharGrid) -> String {
    let mut s = String::with_capacity(grid.rows * grid.cols * 200);
    s.push_str(GRID_HEADER);
    s.push('\n');
    let blank = ["nan"; 8].join(",");
    for i in 0..grid.rows {
        for j in 0..grid.cols {
            let cols = grid.state(i, j).map_or_else(|| blank.clone(), state_cols);
            let _ = writeln!(s, "{cols},{}", grid.status(i, j).as_str());
        }
    }
    s
}

#[derive(Serialize)]
struct GridNodeJson<'a> {
    i: usize,
    j: usize,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<&'a CharNode>,
}

pub fn grid_json(run: &Run) -> String {
    let grid = &run.solved.grid;
    let nodes: Vec<GridNodeJson> = (0..grid.rows)
        .flat_map(|i| (0..grid.cols).map(move |j| (i, j)))
        .map(|(i, j)| GridNodeJson { i, j, status: grid.status(i, j).as_str(), state: grid.state(i, j) })
        .collect();
    to_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": run.report.scenario,
        "config": run.report.config,
        "solver": run.report.solver,
        "residual_maxima": run.report.residual_maxima,
        "rows": grid.rows,
        "cols": grid.cols,
        "spacing": grid.spacing,
        "nodes": nodes,
    }))
}

pub fn curve_csv(c: &BoundaryCurve) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for p in &c.points {
        s.push_str(&state_cols(p));
        s.push('\n');
    }
    s
}

pub fn points_csv(points: &[(f64, f64)]) -> String {
    let mut s = String::from("xi,eta\n");
    for &(x, y) in points {
        let _ = writeln!(s, "{},{}", num(x), num(y));
    }
    s
}

pub fn level_curves_csv(levels: &[LevelCurve]) -> String {
    let mut s = String::from("tau,xi,eta\n");
    for l in levels {
        for &(x, y) in &l.points {
            let _ = writeln!(s, "{},{},{}", num(l.tau), num(x), num(y));
        }
    }
    s
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn vacuum_json(run: &Run) -> String {
    to_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "summary": run.report.vacuum,
        "points": run.vacuum.curve.points,
    }))
}

pub fn hypothesis_json(s: &Setup) -> String {
    to_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": s.cfg.name,
        "pass": s.hypothesis.all_pass(),
        "margin": s.hypothesis.margin(),
        "first_failure": s.hypothesis.first_failure(),
        "report": s.hypothesis,
    }))
}

/// m′ by central difference of m; the step keeps both points inside the domain.
fn m_prime(eos: &EosModel, tau: f64) -> f64 {
    let h = 1e-5 * tau.min(tau - eos.tau_min);
    match (eos.m_value(tau + h), eos.m_value(tau - h)) {
        (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
        _ => f64::NAN,
    }
}

pub fn eos_profile_csv(eos: &EosModel, profile: &DeltaBarProfile) -> String {
    let mut s = format!("{EOS_HEADER}\n");
    for (k, &t) in profile.tau_samples.iter().enumerate() {
        let row = [
            t,
            eos.p(t),
            eos.dp(t),
            eos.d2p(t),
            eos.c(t),
            eos.m_value(t).unwrap_or(f64::NAN),
            m_prime(eos, t),
            profile.delta_bar[k],
            profile.psi[k],
            profile.chi[k],
        ];
        s.push_str(&row.iter().map(|&x| num(x)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

pub fn eos_extrema_csv(eos: &EosModel, profile: &DeltaBarProfile) -> String {
    let mut s = String::from("tau,delta_bar,kind\n");
    for (k, &t) in profile.extrema.iter().enumerate() {
        let kind = if k == 0 { "tau0" } else { "extremum" };
        let _ = writeln!(s, "{},{},{kind}", num(t), num(eos.delta_bar(t).unwrap_or(f64::NAN)));
    }
    s
}

/// Writes `contents` under `dir`, creating the directory on demand.
pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Writes the requested targets of a finished run; returns the files written.
pub fn write_run(run: &Run, dir: &Path, targets: &[Target], format: Format) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let json = format == Format::Json;
    for t in targets {
        match t {
            Target::Grid if json => out.push(write(dir, "grid.json", &grid_json(run))?),
            Target::Grid => out.push(write(dir, "grid.csv", &grid_csv(&run.solved.grid))?),
            Target::Vacuum => {
                if !json {
                    out.push(write(dir, "vacuum.csv", &points_csv(&run.vacuum.curve.points))?);
                }
                out.push(write(dir, "vacuum.json", &vacuum_json(run))?);
            }
            Target::Audit => out.push(write(
                dir,
                "audit.json",
                &to_json(&json!({"schema_version": SCHEMA_VERSION, "audit": run.audit})),
            )?),
            Target::Boundaries if json => out.push(write(
                dir,
                "boundaries.json",
                &to_json(&json!({"schema_version": SCHEMA_VERSION, "pq": run.solved.pq, "pr": run.solved.pr})),
            )?),
            Target::Boundaries => {
                out.push(write(dir, "pq.csv", &curve_csv(&run.solved.pq))?);
                out.push(write(dir, "pr.csv", &curve_csv(&run.solved.pr))?);
            }
            Target::LevelCurves if json => out.push(write(
                dir,
                "level_curves.json",
                &to_json(&json!({"schema_version": SCHEMA_VERSION, "summary": run.report.level_curves, "curves": run.levels})),
            )?),
            Target::LevelCurves => out.push(write(dir, "level_curves.csv", &level_curves_csv(&run.levels))?),
            Target::Hypothesis => out.push(write(dir, "hypothesis.json", &hypothesis_json(&run.setup))?),
            Target::Residuals => out.push(write(
                dir,
                "residuals.json",
                &to_json(&json!({"schema_version": SCHEMA_VERSION, "residuals": run.residuals})),
            )?),
            Target::Report => out.push(write(dir, "report.json", &to_json(&run.report))?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_and_nan_is_spelled_out() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn points_csv_is_newline_terminated() {
        let s = points_csv(&[(1.0, 2.0)]);
        assert!(s.starts_with("xi,eta\n") && s.ends_with('\n'));
        assert_eq!(s.lines().count(), 2);
    }

    #[test]
    fn json_ends_with_newline() {
        assert!(to_json(&json!({"a": 1})).ends_with("}\n"));
    }
}
