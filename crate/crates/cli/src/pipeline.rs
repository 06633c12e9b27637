//! Orchestration: hypothesis, boundary data, march, audit, bounds and residuals.

use cornerflow::goursat::slope_bound;
use cornerflow::monitor::{default_margins, m1_bound, m2_bound, scan_n_exp, AuditContext};
use cornerflow::validation::{commutator_check, SecondOrderReport};
use cornerflow::{
    audit_grid, convergence_study, decomposition_residual, extract_level_curve, extract_vacuum_boundary, hypothesis_check,
    march_grid, pde_residual, second_order_residual, AuditReport, BoundaryCurve, CharGrid, ConvergenceStudy, CornerProblem,
    DeltaBarProfile, EosModel, HypothesisReport, LevelCurve, NodeStatus, ResidualReport, SolverOptions, SyntheticTriple,
    VacuumBoundary, VacuumCut,
};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, EXIT_AUDIT, EXIT_OK, EXIT_SOLVER};

pub const SCHEMA_VERSION: u32 = 1;

/// A validated scenario with its hypothesis verdict; nothing is solved yet.
pub struct Setup {
    pub cfg: ScenarioConfig,
    pub problem: CornerProblem,
    pub hypothesis: HypothesisReport,
    pub profile: DeltaBarProfile,
    pub eps1: f64,
    pub eps2: f64,
}

impl Setup {
    pub fn eos(&self) -> &EosModel {
        &self.problem.eos
    }

    pub fn solver_options(&self) -> SolverOptions {
        let (p, g) = (&self.problem, &self.cfg.grid);
        SolverOptions {
            tol: g.tol,
            max_iter: g.max_iter,
            phi_tol: g.phi_tol * p.c0 * p.c0,
            tau_vac: p.tau_cut,
            c_vac: g.c_vac * p.c0,
            ..SolverOptions::default()
        }
    }

    /// One-line verdict for the terminal.
    pub fn hypothesis_summary(&self) -> String {
        let h = &self.hypothesis;
        let verdict = if h.all_pass() { "PASS" } else { "FAIL" };
        let left = h.condition_left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = format!(
            "hypothesis {verdict}: max(2*db0 + chi) = {left:.6} < alpha0 + pi/2 = {:.6} < 4*db0 = {:.6} (margin {:.3e})",
            h.opening,
            h.condition_right,
            h.margin()
        );
        if let Some(t) = h.first_failure() {
            s.push_str(&format!(", first failure at tau = {t:.6e}"));
        }
        s
    }
}

pub fn setup(cfg: ScenarioConfig) -> Result<Setup, CliError> {
    cfg.validate()?;
    let eos = cfg.eos_model()?;
    let u0 = cfg.u0(&eos)?;
    let cut = VacuumCut { c_vac: cfg.grid.c_vac, rho_vac: cfg.grid.rho_vac };
    let problem = CornerProblem::new(eos, u0, cfg.flow.tau0, cfg.flow.theta, cut).map_err(CliError::from_flow)?;
    let (hypothesis, profile) =
        hypothesis_check(&problem.eos, u0, problem.tau0, problem.tau_cut).map_err(CliError::from_flow)?;
    let (d1, d2) = default_margins(hypothesis.delta_bar_0, problem.alpha0);
    let eps1 = cfg.monitor.eps1.unwrap_or(d1);
    let eps2 = cfg.monitor.eps2.unwrap_or(d2);
    Ok(Setup { cfg, problem, hypothesis, profile, eps1, eps2 })
}

/// Fails with the hypothesis diagnostic unless every sample passes.
pub fn require_hypothesis(s: &Setup) -> Result<(), CliError> {
    if s.hypothesis.all_pass() {
        Ok(())
    } else {
        Err(CliError::Hypothesis(s.hypothesis_summary()))
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Solver(format!("cannot start worker pool: {e}")))
}

pub struct Solved {
    pub pq: BoundaryCurve,
    pub pr: BoundaryCurve,
    pub grid: CharGrid,
}

pub fn march(s: &Setup) -> Result<Solved, CliError> {
    let p = &s.problem;
    let n = s.cfg.grid.n;
    let pq = p.curve_pq(p.tau_cut, n + 1).map_err(CliError::from_flow)?;
    let pr = p.curve_pr_with_states(p.pr_tau_end(), n + 1).map_err(CliError::from_flow)?;
    let opts = s.solver_options();
    let grid = thread_pool(s.cfg.grid.workers)?
        .install(|| march_grid(&pq, &pr, &p.table, &opts))
        .map_err(|e| CliError::Solver(e.to_string()))?;
    Ok(Solved { pq, pr, grid })
}

#[derive(Debug, Clone, Serialize)]
pub struct VacuumSummary {
    pub tau_tilde: f64,
    pub chi: f64,
    pub lipschitz: f64,
    /// Slope bound plus 10 h.
    pub bound: f64,
    pub spacing: f64,
    pub points: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub tau: f64,
    pub chi: f64,
    pub points: usize,
    pub max_slope: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pde: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pde_error: Option<String>,
    pub decomposition: Vec<ResidualReport>,
    pub second_order: SecondOrderReport,
    pub bernoulli_drift: f64,
    pub pde_ceiling: f64,
    pub decomposition_ceiling: f64,
    pub second_order_ceiling: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeCounts {
    pub total: usize,
    pub solved: usize,
    pub vacuum: usize,
    pub failed: usize,
    pub unreached: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    pub what: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub config: ScenarioConfig,
    pub solver: SolverOptions,
    pub u0: f64,
    pub c0: f64,
    pub alpha0: f64,
    pub tau_cut: f64,
    pub tau_wall: Option<f64>,
    pub hypothesis_pass: bool,
    pub hypothesis_margin: f64,
    pub grid_spacing: f64,
    pub nodes: NodeCounts,
    pub audit_violations: usize,
    pub vacuum: VacuumSummary,
    pub level_curves: Vec<LevelSummary>,
    pub residual_maxima: Vec<(String, f64)>,
    pub failures: Vec<Failure>,
    pub exit_code: i32,
}

/// Everything a `solve` produces.
pub struct Run {
    pub setup: Setup,
    pub solved: Solved,
    pub audit: AuditReport,
    pub vacuum: VacuumBoundary,
    pub levels: Vec<LevelCurve>,
    pub residuals: Residuals,
    pub report: RunReport,
}

/// Geometric τ levels strictly between τ₀ and the vacuum cut.
pub fn level_taus(tau0: f64, tau_cut: f64, count: usize) -> Vec<f64> {
    let r = tau_cut / tau0;
    (1..=count).map(|k| tau0 * r.powf(k as f64 / (count + 1) as f64)).collect()
}

pub fn audit(s: &Setup, sv: &Solved) -> Result<AuditReport, CliError> {
    let eos = s.eos();
    let m1 = m1_bound(&sv.pq, &sv.pr).map_err(CliError::from_flow)?;
    let n_max = s.cfg.monitor.n_max;
    let found = scan_n_exp(&sv.grid, eos, n_max);
    let n_exp = found.unwrap_or(n_max);
    let m2 = m2_bound(&sv.pq, &sv.pr, n_exp as i32).map_err(CliError::from_flow)?;
    let ctx = AuditContext {
        eos,
        profile: &s.profile,
        alpha0: s.problem.alpha0,
        eps1: s.eps1,
        eps2: s.eps2,
        m1: &m1,
        m2: &m2,
        n_exp,
    };
    let mut report = audit_grid(&sv.grid, &ctx);
    if found.is_none() {
        report.notes.push(format!("no exponent n <= {n_max} makes g positive at every node; M2 checked with n = {n_max}"));
    }
    Ok(report)
}

pub fn residuals(s: &Setup, grid: &CharGrid) -> Residuals {
    let eos = s.eos();
    let v = &s.cfg.validation;
    let (pde, pde_error) = match pde_residual(grid, eos) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Residuals {
        pde,
        pde_error,
        decomposition: decomposition_residual(grid, eos).to_vec(),
        second_order: second_order_residual(grid, eos),
        bernoulli_drift: grid.bernoulli_drift(),
        pde_ceiling: v.pde_ceiling,
        decomposition_ceiling: v.decomposition_ceiling,
        second_order_ceiling: v.second_order_ceiling,
    }
}

/// Runs the construction after a passed hypothesis; errors only when the
/// march itself cannot proceed.
pub fn run(setup: Setup) -> Result<Run, CliError> {
    require_hypothesis(&setup)?;
    let solved = march(&setup)?;
    let audit = audit(&setup, &solved)?;
    let grid = &solved.grid;
    let (p, h) = (&setup.problem, &setup.hypothesis);
    let mut failures = Vec::new();

    let failed = grid.count(NodeStatus::Failed);
    if failed > 0 {
        failures.push(Failure { kind: "solver", what: format!("{failed} nodes failed to solve") });
    }
    for c in audit.checks.iter().filter(|c| c.violations > 0) {
        failures.push(Failure {
            kind: "audit",
            what: format!("{}: {} of {} violated, worst margin {:.3e} at {:?}", c.name, c.violations, c.checked, c.worst_margin, c.worst_at),
        });
    }

    let vacuum = extract_vacuum_boundary(grid);
    let h10 = 10.0 * vacuum.spacing;
    let (_, chi_cut) = setup.profile.psi_chi(p.tau_cut);
    let vb = slope_bound(h.delta_bar_0, chi_cut, setup.eps1) + h10;
    let vsum = VacuumSummary {
        tau_tilde: p.tau_cut,
        chi: chi_cut,
        lipschitz: vacuum.lipschitz,
        bound: vb,
        spacing: vacuum.spacing,
        points: vacuum.curve.points.len(),
        pass: vacuum.lipschitz <= vb,
    };
    if !vsum.pass {
        failures.push(Failure { kind: "audit", what: format!("vacuum Lipschitz constant {:.4} exceeds {:.4}", vsum.lipschitz, vb) });
    }

    let levels: Vec<LevelCurve> =
        level_taus(p.tau0, p.tau_cut, setup.cfg.monitor.levels).into_iter().map(|t| extract_level_curve(grid, t)).collect();
    let level_sums: Vec<LevelSummary> = levels
        .iter()
        .map(|l| {
            let (_, chi) = setup.profile.psi_chi(l.tau);
            let bound = slope_bound(h.delta_bar_0, chi, setup.eps1) + h10;
            let max_slope = l.max_slope(0.5 * vacuum.spacing);
            LevelSummary { tau: l.tau, chi, points: l.points.len(), max_slope, bound, pass: max_slope <= bound }
        })
        .collect();
    for l in level_sums.iter().filter(|l| !l.pass) {
        failures.push(Failure {
            kind: "audit",
            what: format!("level curve tau = {:.4e} has slope {:.4} above {:.4}", l.tau, l.max_slope, l.bound),
        });
    }

    let res = residuals(&setup, grid);
    let mut maxima = Vec::new();
    match &res.pde {
        Some(r) => {
            maxima.push(("pde".to_string(), r.max_abs));
            if !(r.max_abs <= res.pde_ceiling) {
                failures.push(Failure { kind: "residual", what: format!("pde residual {:.3e} above {:.3e}", r.max_abs, res.pde_ceiling) });
            }
        }
        None => failures.push(Failure {
            kind: "residual",
            what: format!("pde residual unavailable: {}", res.pde_error.as_deref().unwrap_or("")),
        }),
    }
    for r in &res.decomposition {
        maxima.push((r.name.clone(), r.max_abs));
        if !(r.max_abs <= res.decomposition_ceiling) {
            failures.push(Failure {
                kind: "residual",
                what: format!("{} residual {:.3e} above {:.3e}", r.name, r.max_abs, res.decomposition_ceiling),
            });
        }
    }
    let so = &res.second_order.residual;
    maxima.push((so.name.clone(), so.max_abs));
    if !(so.max_abs <= res.second_order_ceiling) {
        failures.push(Failure {
            kind: "residual",
            what: format!("second-order residual {:.3e} above {:.3e}", so.max_abs, res.second_order_ceiling),
        });
    }

    let exit_code = if failures.iter().any(|f| f.kind == "solver") {
        EXIT_SOLVER
    } else if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_AUDIT
    };
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: setup.cfg.name.clone(),
        config: setup.cfg.clone(),
        solver: setup.solver_options(),
        u0: p.u0,
        c0: p.c0,
        alpha0: p.alpha0,
        tau_cut: p.tau_cut,
        tau_wall: p.tau_wall,
        hypothesis_pass: h.all_pass(),
        hypothesis_margin: h.margin(),
        grid_spacing: grid.spacing,
        nodes: NodeCounts {
            total: grid.rows * grid.cols,
            solved: grid.count(NodeStatus::Solved),
            vacuum: grid.count(NodeStatus::Vacuum),
            failed,
            unreached: grid.count(NodeStatus::Unreached),
        },
        audit_violations: audit.total_violations(),
        vacuum: vsum,
        level_curves: level_sums,
        residual_maxima: maxima,
        failures,
        exit_code,
    };
    Ok(Run { setup, solved, audit, vacuum, levels, residuals: res, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub scenario: String,
    pub hypothesis_pass: bool,
    pub tau_level: f64,
    pub study: ConvergenceStudy,
    pub commutator: Vec<ResidualReport>,
    /// Diagnostics whose observed order must reach 1.
    pub gated: Vec<(String, f64)>,
    pub failures: Vec<String>,
    pub exit_code: i32,
}

/// Diagnostics held to an observed order of at least one.
pub const GATED_DIAGNOSTICS: [&str; 6] = [
    "bernoulli_drift",
    "decomposition_plus_alpha",
    "decomposition_plus_beta",
    "decomposition_minus_alpha",
    "decomposition_minus_beta",
    "node_position",
];

/// Grid-refinement study and commutator checks. Order failures only set the
/// exit code when the hypothesis holds.
pub fn validate(cfg: ScenarioConfig) -> Result<ValidationReport, CliError> {
    let s = setup(cfg)?;
    let p = &s.problem;
    let tau_level = (p.tau0 * p.tau_cut).sqrt();
    let resolutions = s.cfg.resolutions();
    let opts = s.solver_options();
    let study = thread_pool(s.cfg.grid.workers)?
        .install(|| convergence_study(p, &opts, &resolutions, tau_level))
        .map_err(CliError::from_flow)?;
    let commutator: Vec<ResidualReport> = SyntheticTriple::ALL
        .iter()
        .map(|&t| commutator_check(t, 21))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Solver(e.to_string()))?;

    let mut failures = Vec::new();
    let mut gated = Vec::new();
    for name in GATED_DIAGNOSTICS {
        let order = study.row(name).map_or(f64::NAN, |r| r.min_order());
        gated.push((name.to_string(), order));
        if !(order >= 1.0) {
            failures.push(format!("{name}: observed order {order:.3} below 1"));
        }
    }
    for c in &commutator {
        if !(c.max_abs < 1e-10) {
            failures.push(format!("{}: residual {:.3e}", c.name, c.max_abs));
        }
    }
    let hypothesis_pass = s.hypothesis.all_pass();
    let exit_code = if hypothesis_pass && !failures.is_empty() { EXIT_AUDIT } else { EXIT_OK };
    Ok(ValidationReport {
        schema_version: SCHEMA_VERSION,
        scenario: s.cfg.name.clone(),
        hypothesis_pass,
        tau_level,
        study,
        commutator,
        gated,
        failures,
        exit_code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_taus_are_interior_and_geometric() {
        let t = level_taus(1.0, 16.0, 3);
        assert_eq!(t.len(), 3);
        assert!((t[0] - 2.0).abs() < 1e-12 && (t[1] - 4.0).abs() < 1e-12 && (t[2] - 8.0).abs() < 1e-12);
    }
}
