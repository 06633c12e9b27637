//! Characteristic-net solution of the Goursat problem between PQ and PR.
//!
//! Node (i, j) sits on the i-th C₊ characteristic (row, i = 0 is PQ) and the
//! j-th C₋ characteristic (column, j = 0 is PR). Its predecessors are
//! L = (i, j−1) along C₊ and R = (i−1, j) along C₋.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FlowError, Result};
use crate::node::{char_angles, CharNode};
use crate::thermo::ThermoTable;
use crate::waves::BoundaryCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Relative change between iterates accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest accepted gap between φ carried along C₊ and along C₋.
    pub phi_tol: f64,
    /// Position lines closer than this in angle are treated as parallel.
    pub min_gap: f64,
    /// Nodes beyond this specific volume are vacuum.
    pub tau_vac: f64,
    /// Nodes with a slower sound speed are vacuum.
    pub c_vac: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, phi_tol: 1e-2, min_gap: 0.0, tau_vac: f64::INFINITY, c_vac: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeSolution {
    pub node: CharNode,
    pub iterations: usize,
    /// φ along C₋ minus φ along C₊.
    pub phi_gap: f64,
    /// q²/2 + B(τ) + φ at the converged node.
    pub bernoulli: f64,
}

/// Pseudo-Bernoulli residual of a node.
pub fn bernoulli_residual(node: &CharNode, table: &ThermoTable) -> f64 {
    let q2 = node.big_u().powi(2) + node.big_v().powi(2);
    0.5 * q2 + table.b(node.tau) + node.phi
}

/// Trapezoidal ∫ U dξ + V dη from `a` to the point (ξ, η) with pseudo-velocity (U, V).
fn phi_step(a: &CharNode, xi: f64, eta: f64, big_u: f64, big_v: f64) -> f64 {
    a.phi + 0.5 * ((a.big_u() + big_u) * (xi - a.xi) + (a.big_v() + big_v) * (eta - a.eta))
}

/// Solves the new node X from its C₊ predecessor `l` and C₋ predecessor `r`.
pub fn solve_node(l: &CharNode, r: &CharNode, table: &ThermoTable, opts: &SolverOptions) -> Result<NodeSolution> {
    let eos = table.eos();
    let (mut ax, mut bx) = (l.alpha, r.beta);
    let mut prev = [f64::NAN; 7];
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let a = 0.5 * (l.alpha + ax);
        let b = 0.5 * (r.beta + bx);
        let gap = a - b;
        if !(gap > opts.min_gap) {
            return Err(FlowError::NearParallel { gap });
        }
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        let k1 = -sa * l.xi + ca * l.eta;
        let k2 = -sb * r.xi + cb * r.eta;
        let det = ca * sb - sa * cb;
        let xi = (k1 * cb - ca * k2) / det;
        let eta = (sb * k1 - sa * k2) / det;

        let bp = 0.5 * (l.beta + bx);
        let am = 0.5 * (r.alpha + ax);
        let (sbp, cbp) = bp.sin_cos();
        let (sam, cam) = am.sin_cos();
        let m1 = cbp * l.u + sbp * l.v;
        let m2 = cam * r.u + sam * r.v;
        let det2 = cbp * sam - sbp * cam;
        let u = (m1 * sam - m2 * sbp) / det2;
        let v = (cbp * m2 - cam * m1) / det2;

        let (big_u, big_v) = (u - xi, v - eta);
        let phi = phi_step(l, xi, eta, big_u, big_v);
        let tau = table.invert_b(-phi - 0.5 * (big_u * big_u + big_v * big_v))?;
        let c = eos.c(tau);
        let (alpha, beta) = char_angles(big_u, big_v, c)?;
        ax = alpha;
        bx = beta;

        let cur = [xi, eta, u, v, tau, alpha, beta];
        change = cur
            .iter()
            .zip(prev.iter())
            .enumerate()
            .map(|(k, (&n, &o))| if k == 4 { (n - o).abs() / n } else { (n - o).abs() / (1.0 + n.abs()) })
            // NaN (first pass) must not read as converged.
            .fold(0.0, |m: f64, d| if d.is_nan() { f64::INFINITY } else { m.max(d) });
        prev = cur;
        if change <= opts.tol {
            let node = CharNode { xi, eta, u, v, tau, phi, alpha, beta, c };
            let phi_minus = phi_step(r, xi, eta, big_u, big_v);
            let phi_gap = phi_minus - phi;
            if phi_gap.abs() > opts.phi_tol {
                return Err(FlowError::PhiInconsistency { diff: phi_gap });
            }
            let bernoulli = bernoulli_residual(&node, table);
            if bernoulli.abs() > opts.tol * (1.0 + phi.abs()) {
                return Err(FlowError::NoConvergence { iters: it, change: bernoulli });
            }
            return Ok(NodeSolution { node, iterations: it, phi_gap, bernoulli });
        }
    }
    Err(FlowError::NoConvergence { iters: opts.max_iter, change })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Solved,
    /// Past the vacuum cut; the computed state is kept when one exists.
    Vacuum,
    Failed,
    /// A predecessor was not solved.
    Unreached,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Solved => "solved",
            NodeStatus::Vacuum => "vacuum",
            NodeStatus::Failed => "failed",
            NodeStatus::Unreached => "unreached",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CharGrid {
    pub rows: usize,
    pub cols: usize,
    nodes: Vec<Option<CharNode>>,
    status: Vec<NodeStatus>,
    phi_gap: Vec<f64>,
    iterations: Vec<u32>,
    errors: Vec<Option<FlowError>>,
    /// Mean boundary segment length.
    pub spacing: f64,
    pub tau_vac: f64,
}

/// One grid edge ending at a node, oriented along its characteristic.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub from: CharNode,
    pub to: CharNode,
    /// Signed length along the unit direction of the characteristic.
    pub ds: f64,
}

impl Edge {
    fn new(from: CharNode, to: CharNode, angle: f64) -> Self {
        let ds = (to.xi - from.xi) * angle.cos() + (to.eta - from.eta) * angle.sin();
        Self { from, to, ds }
    }

    pub fn diff(&self, f: impl Fn(&CharNode) -> f64) -> f64 {
        (f(&self.to) - f(&self.from)) / self.ds
    }

    pub fn mid(&self, f: impl Fn(&CharNode) -> f64) -> f64 {
        0.5 * (f(&self.to) + f(&self.from))
    }
}

impl CharGrid {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    /// Builds a grid with only the boundary data filled in.
    fn with_boundaries(pq: &BoundaryCurve, pr: &BoundaryCurve, tau_vac: f64) -> Self {
        let (rows, cols) = (pr.points.len(), pq.points.len());
        let n = rows * cols;
        let mut g = Self {
            rows,
            cols,
            nodes: vec![None; n],
            status: vec![NodeStatus::Unreached; n],
            phi_gap: vec![0.0; n],
            iterations: vec![0; n],
            errors: vec![None; n],
            spacing: 0.0,
            tau_vac,
        };
        for (j, p) in pq.points.iter().enumerate() {
            let k = g.idx(0, j);
            g.nodes[k] = Some(*p);
            g.status[k] = NodeStatus::Solved;
        }
        for (i, p) in pr.points.iter().enumerate() {
            let k = g.idx(i, 0);
            g.nodes[k] = Some(*p);
            g.status[k] = NodeStatus::Solved;
        }
        let seg: Vec<f64> = pq
            .points
            .windows(2)
            .chain(pr.points.windows(2))
            .map(|w| w[0].distance(&w[1]))
            .collect();
        g.spacing = seg.iter().sum::<f64>() / seg.len().max(1) as f64;
        g
    }

    pub fn status(&self, i: usize, j: usize) -> NodeStatus {
        self.status[self.idx(i, j)]
    }

    /// Solved node at (i, j).
    pub fn node(&self, i: usize, j: usize) -> Option<&CharNode> {
        let k = self.idx(i, j);
        match self.status[k] {
            NodeStatus::Solved => self.nodes[k].as_ref(),
            _ => None,
        }
    }

    /// Mutable access to a solved node, for fixtures and fault injection.
    pub fn node_mut(&mut self, i: usize, j: usize) -> Option<&mut CharNode> {
        let k = self.idx(i, j);
        match self.status[k] {
            NodeStatus::Solved => self.nodes[k].as_mut(),
            _ => None,
        }
    }

    /// Any computed state at (i, j), including vacuum-truncated nodes.
    pub fn state(&self, i: usize, j: usize) -> Option<&CharNode> {
        self.nodes[self.idx(i, j)].as_ref()
    }

    pub fn phi_gap(&self, i: usize, j: usize) -> f64 {
        self.phi_gap[self.idx(i, j)]
    }

    pub fn iterations(&self, i: usize, j: usize) -> u32 {
        self.iterations[self.idx(i, j)]
    }

    pub fn error(&self, i: usize, j: usize) -> Option<&FlowError> {
        self.errors[self.idx(i, j)].as_ref()
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0
    }

    /// (i, j, node) for every solved node in row-major order.
    pub fn solved(&self) -> impl Iterator<Item = (usize, usize, &CharNode)> + '_ {
        (0..self.rows).flat_map(move |i| (0..self.cols).filter_map(move |j| self.node(i, j).map(|n| (i, j, n))))
    }

    pub fn count(&self, s: NodeStatus) -> usize {
        self.status.iter().filter(|&&x| x == s).count()
    }

    /// C₊ edge from (i, j−1) to (i, j), both solved.
    pub fn plus_edge(&self, i: usize, j: usize) -> Option<Edge> {
        if j == 0 {
            return None;
        }
        let (a, b) = (self.node(i, j - 1)?, self.node(i, j)?);
        Some(Edge::new(*a, *b, 0.5 * (a.alpha + b.alpha)))
    }

    /// C₋ edge from (i−1, j) to (i, j), both solved.
    pub fn minus_edge(&self, i: usize, j: usize) -> Option<Edge> {
        if i == 0 {
            return None;
        }
        let (a, b) = (self.node(i - 1, j)?, self.node(i, j)?);
        Some(Edge::new(*a, *b, 0.5 * (a.beta + b.beta)))
    }

    /// Largest |q²/2 + B(τ) + φ| over solved nodes.
    pub fn bernoulli_max(&self, table: &ThermoTable) -> f64 {
        self.solved().map(|(_, _, n)| bernoulli_residual(n, table).abs()).fold(0.0, f64::max)
    }

    /// Largest |φ gap| between the two characteristic paths over interior solved nodes.
    pub fn bernoulli_drift(&self) -> f64 {
        self.solved()
            .filter(|(i, j, _)| !self.is_boundary(*i, *j))
            .map(|(i, j, _)| self.phi_gap(i, j).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_solved_tau(&self) -> f64 {
        self.solved().map(|(_, _, n)| n.tau).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Marches the characteristic net from the boundary curves, one
/// anti-diagonal at a time.
pub fn march_grid(pq: &BoundaryCurve, pr: &BoundaryCurve, table: &ThermoTable, opts: &SolverOptions) -> Result<CharGrid> {
    let (p, q) = (pq.points.first(), pr.points.first());
    match (p, q) {
        (Some(a), Some(b)) if a.xi == b.xi && a.eta == b.eta && a.tau == b.tau => {}
        _ => return Err(FlowError::Parameter("boundary curves must share the corner node P".into())),
    }
    let mut grid = CharGrid::with_boundaries(pq, pr, opts.tau_vac);
    let (rows, cols) = (grid.rows, grid.cols);
    for d in 2..rows + cols - 1 {
        let lo = d.saturating_sub(cols - 1).max(1);
        let hi = (d - 1).min(rows - 1);
        if lo > hi {
            continue;
        }
        let results: Vec<(usize, NodeStatus, Option<NodeSolution>, Option<FlowError>)> = (lo..=hi)
            .into_par_iter()
            .map(|i| {
                let j = d - i;
                let (l, r) = match (grid.node(i, j - 1), grid.node(i - 1, j)) {
                    (Some(l), Some(r)) => (l, r),
                    _ => return (i, NodeStatus::Unreached, None, None),
                };
                match solve_node(l, r, table, opts) {
                    Ok(s) if s.node.c < opts.c_vac || s.node.tau > opts.tau_vac => (i, NodeStatus::Vacuum, Some(s), None),
                    Ok(s) => (i, NodeStatus::Solved, Some(s), None),
                    Err(e @ FlowError::BernoulliNoRoot { .. }) => (i, NodeStatus::Vacuum, None, Some(e)),
                    Err(e) => (i, NodeStatus::Failed, None, Some(e)),
                }
            })
            .collect();
        for (i, st, sol, err) in results {
            let k = grid.idx(i, d - i);
            grid.status[k] = st;
            if let Some(s) = sol {
                grid.nodes[k] = Some(s.node);
                grid.phi_gap[k] = s.phi_gap;
                grid.iterations[k] = s.iterations as u32;
            }
            grid.errors[k] = err;
        }
    }
    if rows > 1 && cols > 1 && grid.status(1, 1) == NodeStatus::Failed {
        return Err(grid.error(1, 1).cloned().unwrap_or(FlowError::Degenerate("corner node failed".into())));
    }
    Ok(grid)
}

/// Step bound −sin(2δ̄(τ₀) + χ(τ̃) − ε₁) / (2 τ̃ M₁(τ̃)).
pub fn step_bound(delta_bar0: f64, tau_tilde: f64, m1: f64, eps1: f64, chi: f64) -> Result<f64> {
    if !(m1 < 0.0) {
        return Err(FlowError::SignCondition { which: "M1 < 0", index: 0, value: m1 });
    }
    let arg = 2.0 * delta_bar0 + chi - eps1;
    if !(arg > 0.0) {
        return Err(FlowError::Range { what: "eps1", value: eps1, lo: 0.0, hi: 2.0 * delta_bar0 + chi });
    }
    Ok(-arg.sin() / (2.0 * tau_tilde * m1))
}

/// Level-curve slope bound 2 / sin(2δ̄(τ₀) + χ(τ̃) − ε₁).
pub fn slope_bound(delta_bar0: f64, chi: f64, eps1: f64) -> f64 {
    2.0 / (2.0 * delta_bar0 + chi - eps1).sin()
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCurve {
    pub tau: f64,
    /// Crossing points from the PQ end to the PR end.
    pub points: Vec<(f64, f64)>,
}

impl LevelCurve {
    /// Largest |Δξ/Δη| between consecutive points at least `min_sep` apart.
    pub fn max_slope(&self, min_sep: f64) -> f64 {
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(self.points.len());
        for &p in &self.points {
            match kept.last() {
                Some(&q) if (p.0 - q.0).hypot(p.1 - q.1) < min_sep => {}
                _ => kept.push(p),
            }
        }
        if kept.len() == 1 && self.points.len() > 1 {
            kept.push(*self.points.last().unwrap());
        }
        kept.windows(2)
            .map(|w| ((w[1].0 - w[0].0) / (w[1].1 - w[0].1)).abs())
            .fold(0.0, f64::max)
    }
}

fn tau_or_inf(grid: &CharGrid, i: usize, j: usize) -> f64 {
    match grid.status(i, j) {
        NodeStatus::Solved | NodeStatus::Vacuum => grid.state(i, j).map_or(f64::INFINITY, |n| n.tau),
        _ => f64::INFINITY,
    }
}

/// Crossing of τ* on the edge a→b; none when b carries no state.
fn crossing(a: &CharNode, b: Option<&CharNode>, tau_star: f64) -> Option<(f64, f64)> {
    match b {
        Some(b) if b.tau.is_finite() && b.tau >= tau_star && b.tau > a.tau => {
            let s = (tau_star - a.tau) / (b.tau - a.tau);
            Some((a.xi + s * (b.xi - a.xi), a.eta + s * (b.eta - a.eta)))
        }
        _ => None,
    }
}

/// Polyline where τ = τ*, by linear interpolation on grid edges that cross it.
pub fn extract_level_curve(grid: &CharGrid, tau_star: f64) -> LevelCurve {
    let mut out = LevelCurve { tau: tau_star, points: Vec::new() };
    let p = match grid.node(0, 0) {
        Some(p) => *p,
        None => return out,
    };
    if tau_star < p.tau || tau_star > grid.max_solved_tau() {
        return out;
    }
    if tau_star == p.tau {
        out.points.push((p.xi, p.eta));
        return out;
    }
    // Number of leading nodes of each row below the level.
    let lead: Vec<usize> = (0..grid.rows)
        .map(|i| (0..grid.cols).take_while(|&j| tau_or_inf(grid, i, j) < tau_star).count())
        .collect();
    for i in 0..grid.rows {
        let ji = lead[i];
        if ji == 0 {
            break;
        }
        if ji < grid.cols {
            let a = grid.state(i, ji - 1).unwrap();
            out.points.extend(crossing(a, grid.state(i, ji), tau_star));
        }
        let next = if i + 1 < grid.rows { lead[i + 1] } else { 0 };
        if i + 1 < grid.rows {
            for j in (next..ji).rev() {
                let a = grid.state(i, j).unwrap();
                let b = match grid.status(i + 1, j) {
                    NodeStatus::Solved | NodeStatus::Vacuum => grid.state(i + 1, j),
                    _ => None,
                };
                out.points.extend(crossing(a, b, tau_star));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VacuumBoundary {
    pub curve: LevelCurve,
    /// Largest |Δξ/Δη| along the thinned boundary polyline.
    pub lipschitz: f64,
    pub spacing: f64,
}

/// Vacuum frontier as the level curve τ = tau_vac, with its discrete Lipschitz constant.
pub fn extract_vacuum_boundary(grid: &CharGrid) -> VacuumBoundary {
    let curve = if grid.tau_vac.is_finite() && grid.max_solved_tau() >= grid.tau_vac {
        extract_level_curve(grid, grid.tau_vac)
    } else {
        LevelCurve { tau: grid.tau_vac, points: Vec::new() }
    };
    let lipschitz = curve.max_slope(0.5 * grid.spacing);
    VacuumBoundary { curve, lipschitz, spacing: grid.spacing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::EosModel;
    use crate::waves::{CornerProblem, Family, VacuumCut};
    use approx::assert_relative_eq;

    fn gamma2(cut: f64) -> CornerProblem {
        let eos = EosModel::polytropic(1.0, 2.0).unwrap();
        let c0 = eos.c(1.0);
        CornerProblem::new(eos, 2.0 * c0, 1.0, -1.3, VacuumCut { c_vac: cut, rho_vac: 1e-4 }).unwrap()
    }

    fn opts(p: &CornerProblem) -> SolverOptions {
        SolverOptions { tau_vac: p.tau_cut, c_vac: p.cut.c_vac * p.c0, phi_tol: 1e-2 * p.c0 * p.c0, ..SolverOptions::default() }
    }

    /// Node on the tangent line of the sonic circle of a constant state.
    fn tangent_node(p: &CornerProblem, u: f64, v: f64, tau: f64, xi: f64, eta: f64) -> CharNode {
        p.node_at(xi, eta, u, v, tau).unwrap()
    }

    #[test]
    fn constant_state_is_reproduced() {
        let p = gamma2(0.2);
        let (u, v, tau) = (0.3, -0.1, 1.5);
        let c = p.c(tau);
        // X outside the sonic circle; walk back along its two tangent lines.
        let x = tangent_node(&p, u, v, tau, u - 2.0 * c, v + 1.1 * c);
        let l = {
            let (s, co) = x.alpha.sin_cos();
            tangent_node(&p, u, v, tau, x.xi - 0.2 * co, x.eta - 0.2 * s)
        };
        let r = {
            let (s, co) = x.beta.sin_cos();
            tangent_node(&p, u, v, tau, x.xi - 0.15 * co, x.eta - 0.15 * s)
        };
        assert_relative_eq!(l.alpha, x.alpha, epsilon = 1e-13);
        let sol = solve_node(&l, &r, &p.table, &SolverOptions::default()).unwrap();
        let n = sol.node;
        assert_relative_eq!(n.xi, x.xi, epsilon = 1e-12);
        assert_relative_eq!(n.eta, x.eta, epsilon = 1e-12);
        assert_relative_eq!(n.u, u, epsilon = 1e-12);
        assert_relative_eq!(n.v, v, epsilon = 1e-12);
        assert_relative_eq!(n.tau, tau, max_relative = 1e-11);
        assert!(sol.phi_gap.abs() < 1e-12);

        let same = solve_node(&x, &x, &p.table, &SolverOptions::default()).unwrap().node;
        assert_relative_eq!(same.xi, x.xi, epsilon = 1e-14);
        assert_relative_eq!(same.tau, x.tau, max_relative = 1e-12);
    }

    #[test]
    fn planar_fan_node_matches_exact_state() {
        // Two nodes inside the planar fan: the C₊ through L meets the vertical C₋ through R.
        let p = gamma2(0.2);
        let err = |h: f64| {
            let xr = p.xi_p + 0.5;
            let r = p.planar_node(xr, 0.5).unwrap();
            // C₋ in the fan are vertical; aim the C₊ from L at (xr, 0.3).
            let l0 = p.planar_node(xr - h, 0.3).unwrap();
            let l = p.planar_node(xr - h, 0.3 - h * l0.alpha.tan()).unwrap();
            let sol = solve_node(&l, &r, &p.table, &SolverOptions::default()).unwrap().node;
            let exact = p.planar_node(sol.xi, sol.eta).unwrap();
            (sol.tau - exact.tau).abs() + (sol.u - exact.u).abs() + sol.v.abs()
        };
        // C₋ are vertical lines of constant state, so X lands on R's state.
        for h in [0.04, 0.02, 0.01] {
            assert!(err(h) < 1e-9, "h = {h}: {}", err(h));
        }
    }

    #[test]
    fn degenerate_grid_is_one_node_solve() {
        let p = gamma2(0.2);
        let pq = p.curve_pq(1.2, 2).unwrap();
        let pr = p.curve_pr_with_states(1.2, 2).unwrap();
        let o = opts(&p);
        let g = march_grid(&pq, &pr, &p.table, &o).unwrap();
        let direct = solve_node(&pr.points[1], &pq.points[1], &p.table, &o).unwrap().node;
        assert_eq!(g.node(1, 1).copied(), Some(direct));
    }

    #[test]
    fn march_polytropic_is_monotone_and_deterministic() {
        let p = gamma2(0.3);
        let pq = p.curve_pq(p.tau_cut, 33).unwrap();
        let pr = p.curve_pr_with_states(p.pr_tau_end(), 33).unwrap();
        let o = opts(&p);
        let g = march_grid(&pq, &pr, &p.table, &o).unwrap();
        assert!(g.count(NodeStatus::Solved) > 33 * 33 / 2);
        assert_eq!(g.count(NodeStatus::Failed), 0);
        for i in 0..g.rows {
            for j in 0..g.cols {
                if let Some(e) = g.plus_edge(i, j) {
                    assert!(e.diff(|n| n.tau) > 0.0, "dtau+ at {i},{j}");
                    assert!(e.ds > 0.0);
                }
                if let Some(e) = g.minus_edge(i, j) {
                    assert!(e.diff(|n| n.tau) > 0.0, "dtau- at {i},{j}");
                    assert!(e.ds > 0.0);
                }
            }
        }
        assert!(g.bernoulli_max(&p.table) < 1e-9);
        let again = march_grid(&pq, &pr, &p.table, &o).unwrap();
        for (a, b) in g.solved().zip(again.solved()) {
            assert_eq!(a.2, b.2);
        }
    }

    #[test]
    fn level_curves() {
        let p = gamma2(0.3);
        let pq = p.curve_pq(p.tau_cut, 17).unwrap();
        let pr = p.curve_pr_with_states(p.pr_tau_end(), 17).unwrap();
        let g = march_grid(&pq, &pr, &p.table, &opts(&p)).unwrap();
        let at_p = extract_level_curve(&g, p.tau0);
        assert_eq!(at_p.points, vec![(p.xi_p, p.eta_p)]);
        assert!(extract_level_curve(&g, 0.5 * p.tau0).points.is_empty());
        let lc = extract_level_curve(&g, 3.0);
        assert!(lc.points.len() > 3);
        let vb = extract_vacuum_boundary(&g);
        assert!(!vb.curve.points.is_empty());
        assert!(vb.lipschitz.is_finite());
    }

    #[test]
    fn constant_grid_has_no_vacuum_boundary() {
        let p = gamma2(0.3);
        let (u, v, tau) = (0.0, 0.0, 1.0);
        let c = p.c(tau);
        // Constant state: PQ and PR along the two tangents from X0.
        let x0 = tangent_node(&p, u, v, tau, 2.0 * c, 0.2 * c);
        let mk = |family: Family| {
            let pts: Vec<CharNode> = (0..5)
                .map(|k| {
                    let ang = if family == Family::Plus { x0.alpha } else { x0.beta };
                    let s = 0.05 * k as f64;
                    tangent_node(&p, u, v, tau, x0.xi + s * ang.cos(), x0.eta + s * ang.sin())
                })
                .collect();
            BoundaryCurve { points: pts, family, tau_range: (tau, tau) }
        };
        let g = march_grid(&mk(Family::Plus), &mk(Family::Minus), &p.table, &opts(&p)).unwrap();
        assert_eq!(g.count(NodeStatus::Solved), 25);
        assert!(extract_vacuum_boundary(&g).curve.points.is_empty());
        assert!(g.solved().all(|(_, _, n)| (n.tau - tau).abs() < 1e-10));
    }

    #[test]
    fn step_bound_scaling() {
        let b = step_bound(0.5, 2.0, -1.0, 0.05, 0.0).unwrap();
        let b2 = step_bound(0.5, 2.0, -2.0, 0.05, 0.0).unwrap();
        assert_relative_eq!(b2, 0.5 * b, epsilon = 1e-15);
        assert!(step_bound(0.5, 2.0, 0.0, 0.05, 0.0).is_err());
        let tiny = step_bound(0.5, 2.0, -1.0, 1.0 - 1e-9, 0.0).unwrap();
        assert!(tiny < 1e-8);
    }
}
