//! Admissibility hypothesis, invariant regions in (α, β) and a bound-by-bound
//! audit of a solved characteristic net.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::eos::{DeltaBarProfile, EosModel};
use crate::error::{FlowError, Result};
use crate::goursat::{CharGrid, Edge};
use crate::node::{lambda_plus, CharNode};
use crate::waves::{interaction_point, BoundaryCurve, Family};

/// C₊ angle at P from the rationalized eigenvalue (U = c₀ there).
pub fn alpha0_at_p(eos: &EosModel, u0: f64, tau0: f64) -> Result<f64> {
    let c0 = eos.sound_speed(tau0)?;
    if !(u0 > c0) {
        return Err(FlowError::Degenerate(format!("u0 = {u0} does not exceed c0 = {c0}")));
    }
    let (_, eta_p) = interaction_point(eos, u0, tau0)?;
    Ok(lambda_plus(c0, -eta_p, c0)?.atan())
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub delta_bar_0: f64,
    pub alpha0: f64,
    /// α₀ + π/2, the quantity bracketed by the condition.
    pub opening: f64,
    /// Largest |χ| over the samples.
    pub chi_max: f64,
    pub psi_max: f64,
    pub tau: Vec<f64>,
    /// 2δ̄(τ₀) + χ(τ) per sample.
    pub condition_left: Vec<f64>,
    /// 4δ̄(τ₀).
    pub condition_right: f64,
    pub pass: Vec<bool>,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    /// Smallest sampled τ where the condition fails.
    pub fn first_failure(&self) -> Option<f64> {
        self.tau.iter().zip(&self.pass).find(|(_, &p)| !p).map(|(&t, _)| t)
    }

    /// Distance of α₀ + π/2 from the nearer side of the window (negative outside).
    pub fn margin(&self) -> f64 {
        let left = self.condition_left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (self.opening - left).min(self.condition_right - self.opening)
    }
}

/// Evaluates 2δ̄(τ₀) + χ(τ) < α₀ + π/2 < 4δ̄(τ₀) on every profile sample.
pub fn hypothesis_from_profile(profile: &DeltaBarProfile, alpha0: f64) -> HypothesisReport {
    let d0 = profile.delta_bar0();
    let opening = alpha0 + FRAC_PI_2;
    let condition_left: Vec<f64> = profile.chi.iter().map(|&x| 2.0 * d0 + x).collect();
    let condition_right = 4.0 * d0;
    let pass = condition_left.iter().map(|&l| l < opening && opening < condition_right).collect();
    HypothesisReport {
        delta_bar_0: d0,
        alpha0,
        opening,
        chi_max: profile.chi.iter().fold(0.0, |m, x| m.max(x.abs())),
        psi_max: profile.psi.iter().copied().fold(0.0, f64::max),
        tau: profile.tau_samples.clone(),
        condition_left,
        condition_right,
        pass,
    }
}

/// Builds the δ̄ profile on [τ₀, τ_max] and checks the hypothesis on it.
pub fn hypothesis_check(eos: &EosModel, u0: f64, tau0: f64, tau_max: f64) -> Result<(HypothesisReport, DeltaBarProfile)> {
    let alpha0 = alpha0_at_p(eos, u0, tau0)?;
    let profile = DeltaBarProfile::build(eos, tau0, tau_max, 400)?;
    Ok((hypothesis_from_profile(&profile, alpha0), profile))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxKind {
    /// δ̄ nondecreasing: upper α and lower β sides widen by ψ.
    SquareIncreasing,
    /// δ̄ nonincreasing: lower α and upper β sides move by χ.
    SquareDecreasing,
    /// δ̄ with interior extrema; the ψ/χ box cut by α − β > ε₂.
    Pentagon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantBox {
    pub tau: f64,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub eps1: f64,
    pub eps2: f64,
    pub kind: BoxKind,
}

impl InvariantBox {
    /// Smallest signed distance of (α, β) to the open box sides; positive inside.
    pub fn margin(&self, alpha: f64, beta: f64) -> f64 {
        let m = (alpha - self.alpha_range.0)
            .min(self.alpha_range.1 - alpha)
            .min(beta - self.beta_range.0)
            .min(self.beta_range.1 - beta);
        if self.kind == BoxKind::Pentagon {
            m.min(alpha - beta - self.eps2)
        } else {
            m
        }
    }

    pub fn contains(&self, alpha: f64, beta: f64) -> bool {
        self.margin(alpha, beta) > 0.0
    }
}

/// Admissible (α, β) region at level τ:
/// α ∈ (−π/2 − ε₁ + 2δ̄(τ₀) + χ, α₀ + ε₁ + ψ), β ∈ (−π/2 − ε₁ − ψ, α₀ + ε₁ − 2δ̄(τ₀) − χ).
pub fn invariant_box(profile: &DeltaBarProfile, alpha0: f64, tau: f64, eps1: f64, eps2: f64) -> InvariantBox {
    let (psi, chi) = profile.psi_chi(tau);
    let d0 = profile.delta_bar0();
    let kind = if profile.extrema.len() > 1 {
        BoxKind::Pentagon
    } else if profile.local_trend(tau) < 0 {
        BoxKind::SquareDecreasing
    } else {
        BoxKind::SquareIncreasing
    };
    InvariantBox {
        tau,
        alpha_range: (-FRAC_PI_2 - eps1 + 2.0 * d0 + chi, alpha0 + eps1 + psi),
        beta_range: (-FRAC_PI_2 - eps1 - psi, alpha0 + eps1 - 2.0 * d0 - chi),
        eps1,
        eps2,
        kind,
    }
}

/// A boundary profile of a derivative quantity against segment-midpoint τ.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryProfile {
    pub tau: Vec<f64>,
    pub value: Vec<f64>,
}

impl BoundaryProfile {
    fn from_curve(curve: &BoundaryCurve, f: impl Fn(&CharNode, &CharNode) -> f64) -> Self {
        let mut tau = Vec::new();
        let mut value = Vec::new();
        for w in curve.points.windows(2) {
            tau.push(0.5 * (w[0].tau + w[1].tau));
            value.push(f(&w[0], &w[1]));
        }
        Self { tau, value }
    }

    fn covers(&self, t: f64) -> bool {
        !self.tau.is_empty() && t >= self.tau[0] && t <= *self.tau.last().unwrap()
    }

    /// Linear interpolation in ln τ, clamped at the ends.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.tau.len();
        if t <= self.tau[0] {
            return self.value[0];
        }
        if t >= self.tau[n - 1] {
            return self.value[n - 1];
        }
        let k = self.tau.partition_point(|&x| x <= t).clamp(1, n - 1);
        let (a, b) = (self.tau[k - 1].ln(), self.tau[k].ln());
        let s = (t.ln() - a) / (b - a);
        self.value[k - 1] + s * (self.value[k] - self.value[k - 1])
    }
}

/// Pointwise minimum in τ of the PQ and PR boundary profiles.
#[derive(Debug, Clone, Serialize)]
pub struct MinProfile {
    pub pq: BoundaryProfile,
    pub pr: BoundaryProfile,
}

impl MinProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match (self.pq.covers(t), self.pr.covers(t)) {
            (true, true) => self.pq.eval(t).min(self.pr.eval(t)),
            (true, false) => self.pq.eval(t),
            (false, true) => self.pr.eval(t),
            (false, false) => self.pq.eval(t).min(self.pr.eval(t)),
        }
    }
}

fn signed_ds(a: &CharNode, b: &CharNode, angle: f64) -> f64 {
    (b.xi - a.xi) * angle.cos() + (b.eta - a.eta) * angle.sin()
}

fn boundary_drho(curve: &BoundaryCurve) -> BoundaryProfile {
    let family = curve.family;
    BoundaryProfile::from_curve(curve, move |a, b| {
        let angle = match family {
            Family::Plus => 0.5 * (a.alpha + b.alpha),
            Family::Minus => 0.5 * (a.beta + b.beta),
        };
        (b.rho() - a.rho()) / signed_ds(a, b, angle)
    })
}

fn check_negative(p: &BoundaryProfile, which: &'static str) -> Result<()> {
    for (k, &v) in p.value.iter().enumerate() {
        if !(v < 0.0) {
            return Err(FlowError::SignCondition { which, index: k, value: v });
        }
    }
    Ok(())
}

/// M₁(τ) = min{∂₊ρ on PQ, ∂₋ρ on PR} from boundary differences.
pub fn m1_bound(pq: &BoundaryCurve, pr: &BoundaryCurve) -> Result<MinProfile> {
    let a = boundary_drho(pq);
    let b = boundary_drho(pr);
    check_negative(&a, "d+ rho < 0 on PQ")?;
    check_negative(&b, "d- rho < 0 on PR")?;
    Ok(MinProfile { pq: a, pr: b })
}

/// ρⁿ ∂ρ / sin²δ at a segment, with midpoint ρ and δ.
fn scaled(a: &CharNode, b: &CharNode, drho: f64, n: i32) -> f64 {
    let rho = 0.5 * (a.rho() + b.rho());
    let s = (0.5 * (a.delta() + b.delta())).sin();
    rho.powi(n) * drho / (s * s)
}

/// M₂(τ): minimum over the two boundaries of ρⁿ∂ρ/sin²δ at level τ.
pub fn m2_bound(pq: &BoundaryCurve, pr: &BoundaryCurve, n: i32) -> Result<MinProfile> {
    let m1 = m1_bound(pq, pr)?;
    let mk = |curve: &BoundaryCurve, d: &BoundaryProfile| BoundaryProfile {
        tau: d.tau.clone(),
        value: curve.points.windows(2).zip(&d.value).map(|(w, &v)| scaled(&w[0], &w[1], v, n)).collect(),
    };
    Ok(MinProfile { pq: mk(pq, &m1.pq), pr: mk(pr, &m1.pr) })
}

/// f = 2 sin²δ − 8p′cos⁴δ/(τp″).
pub fn f_factor(eos: &EosModel, tau: f64, delta: f64) -> f64 {
    let c2 = delta.cos().powi(2);
    2.0 * delta.sin().powi(2) - 8.0 * eos.dp(tau) * c2 * c2 / (tau * eos.d2p(tau))
}

/// 𝒢 = f − 2cos²δ + 2Ω cos⁴δ − 1 + 4n c² cos²δ/(τ³p″) for F = ρⁿ.
pub fn g_factor(eos: &EosModel, tau: f64, delta: f64, n: f64) -> f64 {
    let c2 = delta.cos().powi(2);
    let omega = eos.m_unchecked(tau) - delta.tan().powi(2);
    let c = eos.c(tau);
    f_factor(eos, tau, delta) - 2.0 * c2 + 2.0 * omega * c2 * c2 - 1.0
        + 4.0 * n * c * c * c2 / (tau.powi(3) * eos.d2p(tau))
}

/// Smallest integer n in [0, n_max] with 𝒢 > 0 at every solved node.
pub fn scan_n_exp(grid: &CharGrid, eos: &EosModel, n_max: u32) -> Option<u32> {
    (0..=n_max).find(|&n| grid.solved().all(|(_, _, x)| g_factor(eos, x.tau, x.delta(), n as f64) > 0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    /// Smallest margin seen; negative when violated.
    pub worst_margin: f64,
    pub worst_at: Option<(usize, usize)>,
}

impl CheckSummary {
    fn new(name: &'static str) -> Self {
        Self { name, checked: 0, violations: 0, worst_margin: f64::INFINITY, worst_at: None }
    }

    fn record(&mut self, margin: f64, ok: bool, at: (usize, usize)) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
        }
        if margin < self.worst_margin || (!ok && self.worst_at.is_none()) {
            self.worst_margin = margin;
            self.worst_at = Some(at);
        }
    }
}

/// Inputs of an audit besides the grid itself.
#[derive(Debug, Clone)]
pub struct AuditContext<'a> {
    pub eos: &'a EosModel,
    pub profile: &'a DeltaBarProfile,
    pub alpha0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub m1: &'a MinProfile,
    pub m2: &'a MinProfile,
    pub n_exp: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub eps1: f64,
    pub eps2: f64,
    pub n_exp: u32,
    pub nodes_audited: usize,
    pub checks: Vec<CheckSummary>,
    /// Edges with exactly zero gradient, accepted at the closed end of the interval.
    pub degenerate_pass: usize,
    pub notes: Vec<String>,
}

impl AuditReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn violations_of(&self, names: &[&str]) -> usize {
        names.iter().filter_map(|n| self.check(n)).map(|c| c.violations).sum()
    }
}

/// Membership of `v` in (lo, 0): strict inside the net, closed on its boundary.
fn interval_check(v: f64, lo: f64, boundary: bool) -> (f64, bool) {
    let margin = (v - lo).min(-v);
    let ok = if boundary { v >= lo - 1e-12 * lo.abs() && v <= 0.0 } else { v > lo && v < 0.0 };
    (margin, ok)
}

/// Audits every solved node against the invariant box of its τ and the
/// gradient bounds, without changing the grid.
pub fn audit_grid(grid: &CharGrid, ctx: &AuditContext<'_>) -> AuditReport {
    let mut boxes = CheckSummary::new("invariant_box");
    let mut gap = CheckSummary::new("alpha_minus_beta_gt_eps2");
    let mut mach = CheckSummary::new("mach_gt_1");
    let mut dtau_p = CheckSummary::new("dtau_plus_positive");
    let mut dtau_m = CheckSummary::new("dtau_minus_positive");
    let mut m1_p = CheckSummary::new("drho_plus_in_m1");
    let mut m1_m = CheckSummary::new("drho_minus_in_m1");
    let mut m2_p = CheckSummary::new("scaled_plus_in_m2");
    let mut m2_m = CheckSummary::new("scaled_minus_in_m2");
    let mut f_pos = CheckSummary::new("f_positive");
    let mut degenerate = 0usize;
    let mut nodes = 0usize;
    let n = ctx.n_exp as i32;

    for (i, j, x) in grid.solved() {
        nodes += 1;
        let b = invariant_box(ctx.profile, ctx.alpha0, x.tau, ctx.eps1, ctx.eps2);
        let m = b.margin(x.alpha, x.beta);
        boxes.record(m, m > 0.0, (i, j));
        let g = x.alpha - x.beta - ctx.eps2;
        gap.record(g, g > 0.0, (i, j));
        let mm = x.q() / x.c - 1.0;
        mach.record(mm, mm > 0.0, (i, j));
        let f = f_factor(ctx.eos, x.tau, x.delta());
        f_pos.record(f, f > 0.0, (i, j));

        let mut edge_checks = |edge: Option<Edge>, on_boundary: bool, dt: &mut CheckSummary, c1: &mut CheckSummary, c2: &mut CheckSummary| {
            let Some(e) = edge else { return };
            let dtau = e.diff(|n| n.tau);
            dt.record(dtau, dtau > 0.0, (i, j));
            let drho = e.diff(|n| n.rho());
            if drho == 0.0 {
                degenerate += 1;
                return;
            }
            let t = e.mid(|n| n.tau);
            let (m1, ok1) = interval_check(drho, ctx.m1.eval(t), on_boundary);
            c1.record(m1, ok1, (i, j));
            let s = scaled(&e.from, &e.to, drho, n);
            let (m2, ok2) = interval_check(s, ctx.m2.eval(t), on_boundary);
            c2.record(m2, ok2, (i, j));
        };
        edge_checks(grid.plus_edge(i, j), i == 0, &mut dtau_p, &mut m1_p, &mut m2_p);
        edge_checks(grid.minus_edge(i, j), j == 0, &mut dtau_m, &mut m1_m, &mut m2_m);
    }
    AuditReport {
        eps1: ctx.eps1,
        eps2: ctx.eps2,
        n_exp: ctx.n_exp,
        nodes_audited: nodes,
        checks: vec![boxes, gap, mach, dtau_p, dtau_m, m1_p, m1_m, m2_p, m2_m, f_pos],
        degenerate_pass: degenerate,
        notes: vec![
            "gradient intervals are strict at interior edges and closed on PQ/PR".into(),
            "M1 and M2 are compared at the edge-midpoint specific volume".into(),
        ],
    }
}

/// Default margins: ε₁ = 0.05 δ̄(τ₀), ε₂ = 0.1 (α₀ + π/2).
pub fn default_margins(delta_bar0: f64, alpha0: f64) -> (f64, f64) {
    (0.05 * delta_bar0, 0.1 * (alpha0 + FRAC_PI_2))
}
