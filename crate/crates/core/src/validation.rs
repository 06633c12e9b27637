//! Independent oracles for a solved net: PDE residuals on a Cartesian probe
//! lattice, first- and second-order characteristic decompositions, the
//! commutator identity on synthetic fields and refinement studies.

use num_dual::{DualNum, HyperDual64};
use rayon::prelude::*;
use serde::Serialize;

use crate::eos::EosModel;
use crate::error::{FlowError, Result};
use crate::goursat::{extract_level_curve, march_grid, CharGrid, Edge, SolverOptions};
use crate::monitor::f_factor;
use crate::node::CharNode;
use crate::numerics::observed_order;
use crate::waves::CornerProblem;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub max_abs: f64,
    /// Root-mean-square over the evaluation points.
    pub l2: f64,
    pub grid_spacing: f64,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_node: Option<Vec<f64>>,
}

impl ResidualReport {
    pub fn from_values(name: impl Into<String>, values: Vec<f64>, grid_spacing: f64, keep: bool) -> Self {
        let count = values.len();
        let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = if count == 0 { 0.0 } else { (values.iter().map(|v| v * v).sum::<f64>() / count as f64).sqrt() };
        Self { name: name.into(), max_abs, l2, grid_spacing, count, per_node: keep.then_some(values) }
    }
}

/// Point sampler of (u, v, τ); `None` outside its support.
pub trait FieldSampler: Sync {
    fn sample(&self, xi: f64, eta: f64) -> Option<(f64, f64, f64)>;
}

/// Analytic planar fan of a corner problem, usable where ξ lies inside the fan.
pub struct PlanarFanSampler<'a>(pub &'a CornerProblem);

impl FieldSampler for PlanarFanSampler<'_> {
    fn sample(&self, xi: f64, _eta: f64) -> Option<(f64, f64, f64)> {
        self.0.planar_state(xi).ok().map(|s| (s.u, s.v, s.tau))
    }
}

/// Piecewise-linear interpolation of a solved net over the triangles of its cells.
pub struct GridSampler {
    tris: Vec<[CharNode; 3]>,
    lo: (f64, f64),
    cell: (f64, f64),
    nb: usize,
    buckets: Vec<Vec<usize>>,
}

impl GridSampler {
    pub fn new(grid: &CharGrid) -> Self {
        let mut tris = Vec::new();
        for i in 1..grid.rows {
            for j in 1..grid.cols {
                let a = grid.node(i - 1, j - 1);
                let l = grid.node(i, j - 1);
                let r = grid.node(i - 1, j);
                let x = grid.node(i, j);
                if let (Some(a), Some(l), Some(r)) = (a, l, r) {
                    tris.push([*a, *l, *r]);
                }
                if let (Some(l), Some(r), Some(x)) = (l, r, x) {
                    tris.push([*l, *r, *x]);
                }
            }
        }
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for t in &tris {
            for n in t {
                lo = (lo.0.min(n.xi), lo.1.min(n.eta));
                hi = (hi.0.max(n.xi), hi.1.max(n.eta));
            }
        }
        let nb = ((tris.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let cell = (((hi.0 - lo.0) / nb as f64).max(1e-300), ((hi.1 - lo.1) / nb as f64).max(1e-300));
        let mut s = Self { tris, lo, cell, nb, buckets: vec![Vec::new(); nb * nb] };
        for (k, t) in s.tris.iter().enumerate() {
            let (x0, x1) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |m, n| (m.0.min(n.xi), m.1.max(n.xi)));
            let (y0, y1) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |m, n| (m.0.min(n.eta), m.1.max(n.eta)));
            let (i0, j0) = s.bucket(x0, y0);
            let (i1, j1) = s.bucket(x1, y1);
            for bi in i0..=i1 {
                for bj in j0..=j1 {
                    s.buckets[bi * nb + bj].push(k);
                }
            }
        }
        s
    }

    fn bucket(&self, xi: f64, eta: f64) -> (usize, usize) {
        let f = |v: f64, lo: f64, w: f64| (((v - lo) / w).floor().max(0.0) as usize).min(self.nb - 1);
        (f(xi, self.lo.0, self.cell.0), f(eta, self.lo.1, self.cell.1))
    }

    /// Bounding box (ξ_lo, η_lo, ξ_hi, η_hi) of the triangulated region.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        (self.lo.0, self.lo.1, self.lo.0 + self.cell.0 * self.nb as f64, self.lo.1 + self.cell.1 * self.nb as f64)
    }

    pub fn triangles(&self) -> usize {
        self.tris.len()
    }
}

impl FieldSampler for GridSampler {
    fn sample(&self, xi: f64, eta: f64) -> Option<(f64, f64, f64)> {
        if self.tris.is_empty() {
            return None;
        }
        let (x0, y0, x1, y1) = self.bbox();
        if xi < x0 || xi > x1 || eta < y0 || eta > y1 {
            return None;
        }
        let (bi, bj) = self.bucket(xi, eta);
        for &k in &self.buckets[bi * self.nb + bj] {
            let [a, b, c] = &self.tris[k];
            let det = (b.xi - a.xi) * (c.eta - a.eta) - (c.xi - a.xi) * (b.eta - a.eta);
            if det.abs() < 1e-300 {
                continue;
            }
            let l1 = ((xi - a.xi) * (c.eta - a.eta) - (c.xi - a.xi) * (eta - a.eta)) / det;
            let l2 = ((b.xi - a.xi) * (eta - a.eta) - (xi - a.xi) * (b.eta - a.eta)) / det;
            let l0 = 1.0 - l1 - l2;
            let tol = -1e-12;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                let mix = |f: fn(&CharNode) -> f64| l0 * f(a) + l1 * f(b) + l2 * f(c);
                return Some((mix(|n| n.u), mix(|n| n.v), mix(|n| n.tau)));
            }
        }
        None
    }
}

/// Residuals of the three self-similar Euler equations at (ξ, η) from
/// central differences of step `d`:
/// ρ_ξU + ρ_ηV + ρ(u_ξ + v_η), Uu_ξ + Vu_η + τp_ξ, Uv_ξ + Vv_η + τp_η.
pub fn euler_residual(s: &dyn FieldSampler, eos: &EosModel, xi: f64, eta: f64, d: f64) -> Option<[f64; 3]> {
    let (u, v, tau) = s.sample(xi, eta)?;
    let e = s.sample(xi + d, eta)?;
    let w = s.sample(xi - d, eta)?;
    let n = s.sample(xi, eta + d)?;
    let so = s.sample(xi, eta - d)?;
    let dx = |f: fn(&(f64, f64, f64)) -> f64| (f(&e) - f(&w)) / (2.0 * d);
    let dy = |f: fn(&(f64, f64, f64)) -> f64| (f(&n) - f(&so)) / (2.0 * d);
    let (u_x, u_y) = (dx(|s| s.0), dy(|s| s.0));
    let (v_x, v_y) = (dx(|s| s.1), dy(|s| s.1));
    let (t_x, t_y) = (dx(|s| s.2), dy(|s| s.2));
    let (bu, bv) = (u - xi, v - eta);
    let rho = 1.0 / tau;
    let (r_x, r_y) = (-t_x * rho * rho, -t_y * rho * rho);
    let tp = tau * eos.dp(tau);
    Some([
        r_x * bu + r_y * bv + rho * (u_x + v_y),
        bu * u_x + bv * u_y + tp * t_x,
        bu * v_x + bv * v_y + tp * t_y,
    ])
}

/// Euler residual over an m×m lattice spanning `bbox`, keeping probes whose
/// whole stencil is sampled. Each probe reports the norm of (τ·mass, x-momentum, y-momentum).
pub fn pde_residual_sampled(
    s: &dyn FieldSampler,
    eos: &EosModel,
    bbox: (f64, f64, f64, f64),
    m: usize,
    d: f64,
    spacing: f64,
) -> Result<ResidualReport> {
    let (x0, y0, x1, y1) = bbox;
    let probes: Vec<(f64, f64)> = (0..m)
        .flat_map(|a| {
            (0..m).map(move |b| {
                let t = |k: usize| (k as f64 + 0.5) / m as f64;
                (x0 + t(a) * (x1 - x0), y0 + t(b) * (y1 - y0))
            })
        })
        .collect();
    let values: Vec<f64> = probes
        .par_iter()
        .filter_map(|&(x, y)| {
            let tau = s.sample(x, y)?.2;
            let r = euler_residual(s, eos, x, y, d)?;
            Some((tau * r[0]).hypot(r[1]).hypot(r[2]))
        })
        .collect();
    if values.len() < 16 {
        return Err(FlowError::HullTooThin { fit: (values.len() as f64).sqrt() as usize });
    }
    Ok(ResidualReport::from_values("euler", values, spacing, false))
}

/// Euler residual of a solved net, interpolated to a 40×40 probe lattice.
pub fn pde_residual(grid: &CharGrid, eos: &EosModel) -> Result<ResidualReport> {
    let s = GridSampler::new(grid);
    if s.triangles() == 0 {
        return Err(FlowError::HullTooThin { fit: 0 });
    }
    pde_residual_sampled(&s, eos, s.bbox(), 40, grid.spacing, grid.spacing)
}

/// Edge average of 2 sin²δ with U, V linear along the edge:
/// 2c² ∫₀¹ ds/|W(s)|² = 2c² Δθ / (W₀ × W₁).
fn mean_two_sin2(e: &Edge, c: f64) -> f64 {
    let (u0, v0, u1, v1) = (e.from.big_u(), e.from.big_v(), e.to.big_u(), e.to.big_v());
    let cross = u0 * v1 - v0 * u1;
    let dot = u0 * u1 + v0 * v1;
    let n = u0.hypot(v0) * u1.hypot(v1);
    let k = if cross.abs() < 1e-12 * n { 1.0 / n } else { cross.atan2(dot) / cross };
    2.0 * c * c * k
}

struct EdgeCoeffs {
    c: f64,
    a: f64,
    omega_sin2d: f64,
    tan_d: f64,
}

fn coeffs(e: &Edge, eos: &EosModel) -> EdgeCoeffs {
    let tau = e.mid(|n| n.tau);
    let delta = e.mid(|n| n.delta());
    let c = eos.c(tau);
    let a = tau * tau * eos.d2p(tau) / c;
    EdgeCoeffs { c, a, omega_sin2d: (eos.m_unchecked(tau) - delta.tan().powi(2)) * (2.0 * delta).sin(), tan_d: delta.tan() }
}

/// The four first-order decomposition residuals, evaluated on every net edge:
/// c∂₊α − (τ²p″/4c)Ω sin2δ ∂₊τ, c∂₊β − (τ²p″/2c)tanδ ∂₊τ + 2sin²δ,
/// c∂₋α + (τ²p″/2c)tanδ ∂₋τ − 2sin²δ, c∂₋β + (τ²p″/4c)Ω sin2δ ∂₋τ.
pub fn decomposition_residual(grid: &CharGrid, eos: &EosModel) -> [ResidualReport; 4] {
    let mut r: [Vec<f64>; 4] = Default::default();
    for (i, j, _) in grid.solved() {
        if let Some(e) = grid.plus_edge(i, j) {
            let k = coeffs(&e, eos);
            let dt = e.diff(|n| n.tau);
            r[0].push(k.c * e.diff(|n| n.alpha) - 0.25 * k.a * k.omega_sin2d * dt);
            r[1].push(k.c * e.diff(|n| n.beta) - 0.5 * k.a * k.tan_d * dt + mean_two_sin2(&e, k.c));
        }
        if let Some(e) = grid.minus_edge(i, j) {
            let k = coeffs(&e, eos);
            let dt = e.diff(|n| n.tau);
            r[2].push(k.c * e.diff(|n| n.alpha) + 0.5 * k.a * k.tan_d * dt - mean_two_sin2(&e, k.c));
            r[3].push(k.c * e.diff(|n| n.beta) + 0.25 * k.a * k.omega_sin2d * dt);
        }
    }
    let h = grid.spacing;
    let [a, b, c, d] = r;
    [
        ResidualReport::from_values("plus_alpha", a, h, false),
        ResidualReport::from_values("plus_beta", b, h, false),
        ResidualReport::from_values("minus_alpha", c, h, false),
        ResidualReport::from_values("minus_beta", d, h, false),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondOrderReport {
    pub residual: ResidualReport,
    pub f_min: f64,
    pub f_violations: usize,
}

/// Midpoint distance between two edges measured along direction `angle`.
fn across(a: &Edge, b: &Edge, angle: f64) -> f64 {
    let dx = 0.5 * (b.from.xi + b.to.xi - a.from.xi - a.to.xi);
    let dy = 0.5 * (b.from.eta + b.to.eta - a.from.eta - a.to.eta);
    dx * angle.cos() + dy * angle.sin()
}

/// Second-order decompositions of ρ on every complete cell
/// A = (i−1, j−1), L = (i, j−1), R = (i−1, j), X = (i, j), plus f > 0 at every node.
pub fn second_order_residual(grid: &CharGrid, eos: &EosModel) -> SecondOrderReport {
    let mut values = Vec::new();
    for i in 1..grid.rows {
        for j in 1..grid.cols {
            let (Some(m0), Some(m1), Some(p0), Some(p1)) =
                (grid.minus_edge(i, j - 1), grid.minus_edge(i, j), grid.plus_edge(i - 1, j), grid.plus_edge(i, j))
            else {
                continue;
            };
            let nodes = [m0.from, m0.to, m1.from, m1.to];
            let avg = |f: fn(&CharNode) -> f64| nodes.iter().map(f).sum::<f64>() / 4.0;
            let (tau, delta) = (avg(|n| n.tau), avg(|n| n.delta()));
            let (alpha, beta) = (avg(|n| n.alpha), avg(|n| n.beta));
            let c = eos.c(tau);
            let rho = |n: &CharNode| n.rho();
            let (dm0, dm1, dp0, dp1) = (m0.diff(rho), m1.diff(rho), p0.diff(rho), p1.diff(rho));
            let (dm, dp) = (0.5 * (dm0 + dm1), 0.5 * (dp0 + dp1));
            let pm = (dm1 - dm0) / across(&m0, &m1, alpha);
            let mp = (dp1 - dp0) / across(&p0, &p1, beta);
            let f = f_factor(eos, tau, delta);
            let k = tau.powi(4) * eos.d2p(tau) / (4.0 * c * delta.cos().powi(2));
            let s2 = (2.0 * delta).sin();
            let r1 = c * pm - dm * (s2 + k * (dm + (f - 1.0) * dp));
            let r2 = c * mp - dp * (s2 + k * (dp + (f - 1.0) * dm));
            values.push(r1.abs().max(r2.abs()));
        }
    }
    let mut f_min = f64::INFINITY;
    let mut f_violations = 0;
    for (_, _, n) in grid.solved() {
        let f = f_factor(eos, n.tau, n.delta());
        f_min = f_min.min(f);
        if !(f > 0.0) {
            f_violations += 1;
        }
    }
    SecondOrderReport { residual: ResidualReport::from_values("second_order", values, grid.spacing, false), f_min, f_violations }
}

/// Version of the shipped synthetic commutator fields; bump when any triple changes.
pub const SYNTHETIC_FIELDS_VERSION: u32 = 1;

/// Smooth synthetic triples (I, α, β) on [0, 1]².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SyntheticTriple {
    Constant,
    Linear,
    Bilinear,
    Trigonometric,
    ExpPoly,
}

impl SyntheticTriple {
    pub const ALL: [SyntheticTriple; 5] = [Self::Constant, Self::Linear, Self::Bilinear, Self::Trigonometric, Self::ExpPoly];

    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Linear => "linear",
            Self::Bilinear => "bilinear",
            Self::Trigonometric => "trigonometric",
            Self::ExpPoly => "exp_poly",
        }
    }

    /// (I, α, β) at (ξ, η).
    pub fn eval<D: DualNum<f64> + Copy>(self, x: D, y: D) -> (D, D, D) {
        let k = |v: f64| D::from(v);
        match self {
            Self::Constant => (k(2.5), k(0.8), k(-0.7)),
            Self::Linear => (x, k(0.6), k(-0.9)),
            Self::Bilinear => (x * y, x * 0.05 + 0.9, y * 0.05 - 0.9),
            Self::Trigonometric => (
                (x * 2.0).sin() * y.cos() + x * x * y,
                (x * y).sin() * 0.2 + 1.0,
                (x + y).cos() * 0.1 - 0.8,
            ),
            Self::ExpPoly => (
                (x * 0.3 - y * 0.2).exp() + y.powi(3),
                x * x * 0.1 - y * 0.05 + 0.7,
                x * y * 0.15 - 1.1,
            ),
        }
    }
}

/// Both sides of the normalized commutator identity at one point, using
/// exact derivatives: returns (∂₋∂₊I − ∂₊∂₋I, right-hand side).
pub fn commutator_sides(t: SyntheticTriple, xi: f64, eta: f64) -> Result<(f64, f64)> {
    let hd = |a: (f64, f64), b: (f64, f64)| {
        let x = HyperDual64::new(xi, a.0, b.0, 0.0);
        let y = HyperDual64::new(eta, a.1, b.1, 0.0);
        t.eval(x, y)
    };
    let (ixx, _, _) = hd((1.0, 0.0), (1.0, 0.0));
    let (iyy, _, _) = hd((0.0, 1.0), (0.0, 1.0));
    let (ixy, al, be) = hd((1.0, 0.0), (0.0, 1.0));
    let (gx, gy) = (ixy.eps1, ixy.eps2);
    let (hxx, hyy, hxy) = (ixx.eps1eps2, iyy.eps1eps2, ixy.eps1eps2);
    let (a, b) = (al.re, be.re);
    let delta = 0.5 * (a - b);
    let s2 = (2.0 * delta).sin();
    if s2.abs() < 1e-6 {
        return Err(FlowError::Degenerate(format!("sin 2δ = {s2:e} at ({xi}, {eta})")));
    }
    let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
    let dp = |fx: f64, fy: f64| ca * fx + sa * fy;
    let dm = |fx: f64, fy: f64| cb * fx + sb * fy;
    let hess = |p: (f64, f64), q: (f64, f64)| p.0 * q.0 * hxx + (p.0 * q.1 + p.1 * q.0) * hxy + p.1 * q.1 * hyy;
    let dma = dm(al.eps1, al.eps2);
    let dpb = dp(be.eps1, be.eps2);
    // ∂₋(∂₊I) = d₋ᵀ H d₊ + ∂₋α (−sinα I_ξ + cosα I_η), and symmetrically.
    let mp = hess((cb, sb), (ca, sa)) + dma * (-sa * gx + ca * gy);
    let pm = hess((ca, sa), (cb, sb)) + dpb * (-sb * gx + cb * gy);
    let lhs = mp - pm;
    let c2 = (2.0 * delta).cos();
    let rhs = ((c2 * dpb - dma) * dm(gx, gy) - (dpb - c2 * dma) * dp(gx, gy)) / s2;
    Ok((lhs, rhs))
}

/// Commutator identity residual over an n×n probe set on [0, 1]².
pub fn commutator_check(t: SyntheticTriple, n: usize) -> Result<ResidualReport> {
    let n = n.max(2);
    let mut values = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let (x, y) = (a as f64 / (n - 1) as f64, b as f64 / (n - 1) as f64);
            let (l, r) = commutator_sides(t, x, y)?;
            values.push(l - r);
        }
    }
    Ok(ResidualReport::from_values(format!("commutator/{}/v{}", t.name(), SYNTHETIC_FIELDS_VERSION), values, 1.0 / (n - 1) as f64, false))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub diagnostic: String,
    pub resolutions: Vec<usize>,
    pub values: Vec<f64>,
    /// Observed order between consecutive entries of `values`.
    pub orders: Vec<f64>,
    pub monotone: bool,
}

impl ConvergenceRow {
    fn new(diagnostic: &str, resolutions: &[usize], values: Vec<f64>) -> Self {
        let orders = values
            .windows(2)
            .zip(resolutions.windows(2))
            .map(|(v, r)| observed_order(v[0], v[1], r[1] as f64 / r[0] as f64))
            .collect();
        let monotone = values.windows(2).all(|v| v[1] < v[0]);
        Self { diagnostic: diagnostic.into(), resolutions: resolutions.to_vec(), values, orders, monotone }
    }

    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
}

impl ConvergenceStudy {
    pub fn row(&self, name: &str) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.diagnostic == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("diagnostic,resolution,value,order\n");
        for r in &self.rows {
            for (k, (&n, &v)) in r.resolutions.iter().zip(&r.values).enumerate() {
                let o = if k == 0 { String::new() } else { format!("{:.6e}", r.orders[k - 1]) };
                s.push_str(&format!("{},{},{:.9e},{}\n", r.diagnostic, n, v, o));
            }
        }
        s
    }
}

/// Builds and marches the net of `problem` with `n` segments per boundary.
pub fn solve_at(problem: &CornerProblem, opts: &SolverOptions, n: usize) -> Result<CharGrid> {
    let pq = problem.curve_pq(problem.tau_cut, n + 1)?;
    let pr = problem.curve_pr_with_states(problem.pr_tau_end(), n + 1)?;
    march_grid(&pq, &pr, &problem.table, opts)
}

/// Largest distance from any point of `a` to the polyline `b`.
fn polyline_gap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let seg = |p: (f64, f64), s: (f64, f64), e: (f64, f64)| {
        let (dx, dy) = (e.0 - s.0, e.1 - s.1);
        let l2 = dx * dx + dy * dy;
        let t = if l2 > 0.0 { (((p.0 - s.0) * dx + (p.1 - s.1) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
        (p.0 - s.0 - t * dx).hypot(p.1 - s.1 - t * dy)
    };
    a.iter()
        .map(|&p| match b.len() {
            0 => f64::INFINITY,
            1 => (p.0 - b[0].0).hypot(p.1 - b[0].1),
            _ => b.windows(2).map(|w| seg(p, w[0], w[1])).fold(f64::INFINITY, f64::min),
        })
        .fold(0.0, f64::max)
}

/// Grid-refinement study over nested resolutions n, 2n, 4n, ...
///
/// Residual diagnostics use their own value per resolution; node positions and
/// the level curve τ = `tau_level` use differences between consecutive resolutions.
pub fn convergence_study(problem: &CornerProblem, opts: &SolverOptions, resolutions: &[usize], tau_level: f64) -> Result<ConvergenceStudy> {
    if resolutions.len() < 3 {
        return Err(FlowError::Parameter(format!("convergence study needs at least 3 resolutions, got {}", resolutions.len())));
    }
    let r = resolutions[1] as f64 / resolutions[0] as f64;
    for w in resolutions.windows(2) {
        if w[1] % w[0] != 0 || (w[1] as f64 / w[0] as f64 - r).abs() > 1e-12 || r < 2.0 {
            return Err(FlowError::Parameter(format!("resolutions must be nested in geometric progression: {resolutions:?}")));
        }
    }
    let grids: Vec<CharGrid> = resolutions.iter().map(|&n| solve_at(problem, opts, n)).collect::<Result<_>>()?;
    let eos = &problem.eos;
    let mut rows = Vec::new();
    rows.push(ConvergenceRow::new("bernoulli_drift", resolutions, grids.iter().map(|g| g.bernoulli_drift()).collect()));
    let dec: Vec<[ResidualReport; 4]> = grids.iter().map(|g| decomposition_residual(g, eos)).collect();
    for (k, name) in ["plus_alpha", "plus_beta", "minus_alpha", "minus_beta"].iter().enumerate() {
        rows.push(ConvergenceRow::new(&format!("decomposition_{name}"), resolutions, dec.iter().map(|d| d[k].max_abs).collect()));
    }

    // Node positions at the nodes of the coarsest net, differenced between neighbours.
    let step = resolutions[1] / resolutions[0];
    let coarse = &grids[0];
    let mut pos = Vec::new();
    let mut level = Vec::new();
    for k in 0..grids.len() - 1 {
        let (a, b) = (&grids[k], &grids[k + 1]);
        let sa = step.pow(k as u32);
        let mut e: f64 = 0.0;
        for (i, j, _) in coarse.solved() {
            let (Some(x), Some(y)) = (a.node(i * sa, j * sa), b.node(i * sa * step, j * sa * step)) else { continue };
            e = e.max(x.distance(y));
        }
        pos.push(e);
        let la = extract_level_curve(a, tau_level);
        let lb = extract_level_curve(b, tau_level);
        level.push(polyline_gap(&la.points, &lb.points));
    }
    rows.push(ConvergenceRow::new("node_position", &resolutions[..resolutions.len() - 1], pos));
    rows.push(ConvergenceRow::new("level_curve", &resolutions[..resolutions.len() - 1], level));

    let warnings = rows
        .iter()
        .filter(|r| !r.monotone)
        .map(|r| format!("{} does not decrease monotonically: {:?}", r.diagnostic, r.values))
        .collect();
    Ok(ConvergenceStudy { rows, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goursat::NodeStatus;
    use crate::waves::{BoundaryCurve, Family, VacuumCut};

    fn gamma2(cut: f64) -> CornerProblem {
        let eos = EosModel::polytropic(1.0, 2.0).unwrap();
        let c0 = eos.c(1.0);
        CornerProblem::new(eos, 2.0 * c0, 1.0, -1.3, VacuumCut { c_vac: cut, rho_vac: 1e-4 }).unwrap()
    }

    fn opts(p: &CornerProblem) -> SolverOptions {
        SolverOptions { tau_vac: p.tau_cut, c_vac: p.cut.c_vac * p.c0, phi_tol: 1e-2 * p.c0 * p.c0, ..SolverOptions::default() }
    }

    /// Constant-state net between the two tangents from a point outside the sonic circle.
    fn constant_grid(p: &CornerProblem, n: usize) -> CharGrid {
        let (u, v, tau) = (0.1, -0.05, 1.2);
        let c = p.c(tau);
        let x0 = p.node_at(u + 2.0 * c, v + 0.2 * c, u, v, tau).unwrap();
        let mk = |family: Family| {
            let ang = if family == Family::Plus { x0.alpha } else { x0.beta };
            let pts = (0..n)
                .map(|k| {
                    let s = 0.3 * k as f64 / n as f64;
                    p.node_at(x0.xi + s * ang.cos(), x0.eta + s * ang.sin(), u, v, tau).unwrap()
                })
                .collect();
            BoundaryCurve { points: pts, family, tau_range: (tau, tau) }
        };
        march_grid(&mk(Family::Plus), &mk(Family::Minus), &p.table, &opts(p)).unwrap()
    }

    #[test]
    fn residual_report_norms() {
        let r = ResidualReport::from_values("x", vec![3.0, -4.0], 0.1, true);
        assert_eq!(r.max_abs, 4.0);
        assert!((r.l2 - (12.5f64).sqrt()).abs() < 1e-15);
        assert!(r.l2 <= r.max_abs * (r.count as f64).sqrt());
        assert_eq!(ResidualReport::from_values("e", vec![], 0.1, false).max_abs, 0.0);
    }

    #[test]
    fn constant_state_residuals_vanish() {
        let p = gamma2(0.3);
        let g = constant_grid(&p, 12);
        assert_eq!(g.count(NodeStatus::Solved), 144);
        let pde = pde_residual(&g, &p.eos).unwrap();
        assert!(pde.max_abs < 1e-9, "{}", pde.max_abs);
        for r in decomposition_residual(&g, &p.eos) {
            assert!(r.max_abs < 1e-9, "{}: {}", r.name, r.max_abs);
        }
        let so = second_order_residual(&g, &p.eos);
        assert!(so.residual.max_abs < 1e-9);
        assert_eq!(so.f_violations, 0);
    }

    #[test]
    fn planar_fan_euler_residual_is_second_order() {
        let p = gamma2(0.3);
        let s = PlanarFanSampler(&p);
        let x0 = p.xi_p + 0.05;
        let bbox = (x0, 0.2, x0 + 0.4, 0.6);
        let r1 = pde_residual_sampled(&s, &p.eos, bbox, 6, 0.02, 0.02).unwrap();
        let r2 = pde_residual_sampled(&s, &p.eos, bbox, 6, 0.01, 0.01).unwrap();
        let ratio = r1.max_abs / r2.max_abs;
        assert!((3.3..4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn thin_hull_is_rejected() {
        let p = gamma2(0.3);
        let g = constant_grid(&p, 2);
        assert!(matches!(pde_residual(&g, &p.eos), Err(FlowError::HullTooThin { .. })));
    }

    #[test]
    fn plus_beta_relation_on_planar_fan_boundary() {
        // Along PQ β ≡ −π/2, so c∂₊β = 0 and the relation fixes ∂₊τ = 4c sin²δ/(τ²p″ tanδ).
        let p = gamma2(0.3);
        let err = |n: usize| {
            let pq = p.curve_pq(4.0, n + 1).unwrap();
            pq.points
                .windows(2)
                .map(|w| {
                    let tau = 0.5 * (w[0].tau + w[1].tau);
                    let d = 0.5 * (w[0].delta() + w[1].delta());
                    let c = p.c(tau);
                    let ds = w[0].distance(&w[1]);
                    let dtau = (w[1].tau - w[0].tau) / ds;
                    let want = 4.0 * c * d.sin().powi(2) / (tau * tau * p.eos.d2p(tau) * d.tan());
                    (dtau - want).abs()
                })
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(32), err(64));
        assert!(a / b > 3.0, "{a} {b}");
    }

    #[test]
    fn commutator_identity_on_all_triples() {
        for t in SyntheticTriple::ALL {
            let r = commutator_check(t, 11).unwrap();
            assert!(r.max_abs < 1e-10, "{}: {}", r.name, r.max_abs);
        }
        let (l, r) = commutator_sides(SyntheticTriple::Constant, 0.3, 0.4).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let (l, r) = commutator_sides(SyntheticTriple::Linear, 0.3, 0.4).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
    }

    #[test]
    fn bilinear_triple_matches_hand_derivatives() {
        // I = ξη, α = 0.9 + 0.05ξ, β = −0.9 + 0.05η.
        let (x, y) = (0.7, 0.2);
        let (a, b) = (0.9 + 0.05 * x, -0.9 + 0.05 * y);
        let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
        let mp = cb * (0.05 * (x * ca - y * sa) + sa) + sb * ca;
        let pm = ca * sb + sa * (0.05 * (x * cb - y * sb) + cb);
        let (lhs, _) = commutator_sides(SyntheticTriple::Bilinear, x, y).unwrap();
        assert!((lhs - (mp - pm)).abs() < 1e-12, "{lhs}");
    }

    #[test]
    fn single_resolution_is_an_error() {
        let p = gamma2(0.3);
        assert!(convergence_study(&p, &opts(&p), &[16], 2.0).is_err());
        assert!(convergence_study(&p, &opts(&p), &[16, 32, 48], 2.0).is_err());
    }

    #[test]
    fn polytropic_study_converges() {
        let p = gamma2(0.3);
        let s = convergence_study(&p, &opts(&p), &[16, 32, 64], 2.0).unwrap();
        for r in &s.rows {
            eprintln!("{} {:?} {:?}", r.diagnostic, r.values, r.orders);
        }
        assert!(s.row("node_position").unwrap().min_order() > 1.5);
        assert!(s.row("bernoulli_drift").unwrap().min_order() > 1.5);
        assert!(s.to_csv().starts_with("diagnostic,resolution,value,order\n"));
    }
}
