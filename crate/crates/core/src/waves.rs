//! Planar and centered rarefaction waves, the interaction point P and the
//! two characteristic boundary curves PQ (C₊ through the planar fan) and PR
//! (C₋ through the centered fan) that carry the Goursat data.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::eos::EosModel;
use crate::error::{FlowError, Result};
use crate::node::{char_angles, lambda_plus, CharNode};
use crate::numerics::{brent, integrate_log_split, rk4_adaptive};
use crate::thermo::ThermoTable;

/// Velocity and specific volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasState {
    pub u: f64,
    pub v: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// C₊ characteristic (PQ).
    Plus,
    /// C₋ characteristic (PR).
    Minus,
}

/// A sampled characteristic carrying full states, ordered away from P.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCurve {
    pub points: Vec<CharNode>,
    pub family: Family,
    pub tau_range: (f64, f64),
}

impl BoundaryCurve {
    /// Discrete ∂ρ along the curve at each segment, (ρ_{k+1} − ρ_k)/|Δx|.
    pub fn rho_derivatives(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| (w[1].rho() - w[0].rho()) / w[1].distance(&w[0]))
            .collect()
    }

    /// Midpoint τ of each segment.
    pub fn segment_taus(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| 0.5 * (w[0].tau + w[1].tau)).collect()
    }

    fn check_sign(&self, which: &'static str, values: &[f64], want_negative: bool) -> Result<()> {
        for (k, &v) in values.iter().enumerate() {
            if (want_negative && !(v < 0.0)) || (!want_negative && !(v > 0.0)) {
                return Err(FlowError::SignCondition { which, index: k, value: v });
            }
        }
        Ok(())
    }

    /// Checks the sign conditions carried by the boundary data: τ increasing,
    /// ∂ρ < 0 along the curve, β ≡ −π/2 on PQ and ∂₋α < 0 on PR.
    pub fn check_sign_conditions(&self) -> Result<()> {
        let dtau: Vec<f64> = self.points.windows(2).map(|w| w[1].tau - w[0].tau).collect();
        self.check_sign("tau increasing", &dtau, false)?;
        self.check_sign("d rho < 0", &self.rho_derivatives(), true)?;
        match self.family {
            Family::Plus => {
                for (k, p) in self.points.iter().enumerate() {
                    if p.beta != -FRAC_PI_2 {
                        return Err(FlowError::SignCondition { which: "beta = -pi/2 on PQ", index: k, value: p.beta });
                    }
                }
            }
            Family::Minus => {
                let dalpha: Vec<f64> = self.points.windows(2).map(|w| w[1].alpha - w[0].alpha).collect();
                self.check_sign("d_- alpha < 0", &dalpha, true)?;
            }
        }
        Ok(())
    }
}

/// Cut-off rules that turn the asymptotic vacuum into a finite τ level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VacuumCut {
    /// Vacuum when c < c_vac · c₀.
    pub c_vac: f64,
    /// Also vacuum when ρ < rho_vac · ρ₀, for laws whose c stays bounded below.
    pub rho_vac: f64,
}

impl Default for VacuumCut {
    fn default() -> Self {
        Self { c_vac: 1e-4, rho_vac: 1e-4 }
    }
}

/// P = (u₀ − c₀, c₀ √((u₀ − c₀)/(u₀ + c₀))).
pub fn interaction_point(eos: &EosModel, u0: f64, tau0: f64) -> Result<(f64, f64)> {
    let c0 = eos.sound_speed(tau0)?;
    if !(u0 > c0) {
        return Err(FlowError::SubsonicInflow { u0, c0 });
    }
    Ok((u0 - c0, c0 * ((u0 - c0) / (u0 + c0)).sqrt()))
}

/// Planar fan state at ξ̂ by direct adaptive quadrature of u_r = u₀ + ∫ c/τ.
///
/// Standalone (no tables); [`CornerProblem::planar_state`] is the fast path.
pub fn planar_wave_state(eos: &EosModel, u0: f64, tau0: f64, xi_hat: f64) -> Result<GasState> {
    let c0 = eos.sound_speed(tau0)?;
    let head = u0 - c0;
    let u_r = |t: f64| u0 + integrate_log_split(|s| eos.c(s) / s, tau0, t, 1e-15 * (1.0 + u0.abs()));
    let g = |t: f64| u_r(t) - eos.c(t) - xi_hat;
    if xi_hat < head {
        return Err(FlowError::Range { what: "xi_hat", value: xi_hat, lo: head, hi: f64::INFINITY });
    }
    if xi_hat == head {
        return Ok(GasState { u: u0, v: 0.0, tau: tau0 });
    }
    let mut hi = tau0 * 2.0;
    let mut prev = g(tau0);
    loop {
        if eos.d2p(hi) <= 0.0 {
            return Err(FlowError::Monotonicity { tau: hi });
        }
        let gh = g(hi);
        if gh < prev {
            return Err(FlowError::Monotonicity { tau: hi });
        }
        if gh >= 0.0 {
            break;
        }
        prev = gh;
        hi *= 2.0;
        if hi > tau0 * 1e15 {
            return Err(FlowError::Range { what: "xi_hat", value: xi_hat, lo: head, hi: xi_hat + gh });
        }
    }
    let tol = 1e-13 * u0.abs().max(1.0);
    let tau = brent(g, hi / 2.0_f64.max(1.0), hi, tol * 1e-3)
        .or_else(|_| brent(g, tau0, hi, tol * 1e-3))?;
    Ok(GasState { u: u_r(tau), v: 0.0, tau })
}

/// Inflow data, its derived constants and the tabulated integrals.
#[derive(Debug, Clone)]
pub struct CornerProblem {
    pub eos: EosModel,
    pub u0: f64,
    pub tau0: f64,
    /// Wall inclination in (−π/2, 0).
    pub theta: f64,
    pub c0: f64,
    pub xi_p: f64,
    pub eta_p: f64,
    /// C₊ angle at P.
    pub alpha0: f64,
    /// Pseudo-potential at P, −(c₀² + η_P²)/2.
    pub phi_p: f64,
    pub cut: VacuumCut,
    /// Specific volume treated as vacuum.
    pub tau_cut: f64,
    /// Where the centered-fan flow turns parallel to the wall, if before `tau_cut`.
    pub tau_wall: Option<f64>,
    pub table: ThermoTable,
}

impl CornerProblem {
    pub fn new(eos: EosModel, u0: f64, tau0: f64, theta: f64, cut: VacuumCut) -> Result<Self> {
        let c0 = eos.sound_speed(tau0)?;
        eos.admissible_at(tau0)?;
        if !(theta > -FRAC_PI_2 && theta < 0.0) {
            return Err(FlowError::Range { what: "theta", value: theta, lo: -FRAC_PI_2, hi: 0.0 });
        }
        if !(cut.c_vac > 0.0 && cut.c_vac < 1.0 && cut.rho_vac > 0.0 && cut.rho_vac < 1.0) {
            return Err(FlowError::Parameter("vacuum thresholds must lie in (0, 1)".into()));
        }
        let (xi_p, eta_p) = interaction_point(&eos, u0, tau0)?;
        let alpha0 = lambda_plus(c0, -eta_p, c0)?.atan();
        let tau_cut = vacuum_tau(&eos, tau0, c0, cut)?;
        let tau_lo = (0.5 * tau0).max(eos.tau_min + 0.5 * (tau0 - eos.tau_min));
        let table = ThermoTable::new(&eos, tau0, tau_lo, 100.0 * tau_cut)?;
        let mut prob = Self {
            eos,
            u0,
            tau0,
            theta,
            c0,
            xi_p,
            eta_p,
            alpha0,
            phi_p: -0.5 * (c0 * c0 + eta_p * eta_p),
            cut,
            tau_cut,
            tau_wall: None,
            table,
        };
        prob.check_fan_monotone()?;
        prob.tau_wall = prob.find_wall_tau()?;
        Ok(prob)
    }

    fn check_fan_monotone(&self) -> Result<()> {
        let n = 400;
        let (l0, l1) = (self.tau0.ln(), self.tau_cut.ln());
        for k in 0..=n {
            let t = (l0 + (l1 - l0) * k as f64 / n as f64).exp();
            if !(self.eos.d2p(t) > 0.0) || !(self.eos.dp(t) < 0.0) {
                return Err(FlowError::Monotonicity { tau: t });
            }
        }
        Ok(())
    }

    pub fn c(&self, tau: f64) -> f64 {
        self.eos.c(tau)
    }

    /// u_r(τ) = u₀ + ∫_{τ₀}^{τ} c/s ds.
    pub fn u_r(&self, tau: f64) -> f64 {
        self.u0 + self.table.i(tau)
    }

    /// ξ̂(τ) = u_r(τ) − c(τ) across the planar fan.
    pub fn xi_hat(&self, tau: f64) -> f64 {
        self.u_r(tau) - self.c(tau)
    }

    /// dξ̂/dτ = τ²p″/(2c).
    pub fn dxi_hat(&self, tau: f64) -> f64 {
        tau * tau * self.eos.d2p(tau) / (2.0 * self.c(tau))
    }

    /// Inverse of [`Self::xi_hat`] on [τ₀, tau_hi].
    pub fn tau_of_xi_hat(&self, xi_hat: f64) -> Result<f64> {
        let head = self.u0 - self.c0;
        let hi = self.table.tau_hi();
        let tail = self.xi_hat(hi);
        if !(xi_hat >= head && xi_hat <= tail) {
            return Err(FlowError::Range { what: "xi_hat", value: xi_hat, lo: head, hi: tail });
        }
        if xi_hat == head {
            return Ok(self.tau0);
        }
        let s = brent(|s: f64| self.xi_hat(s.exp()) - xi_hat, self.tau0.ln(), hi.ln(), 1e-15)?;
        let t = s.exp();
        // Newton polish in case Brent stopped on its bracket tolerance.
        let t = t - (self.xi_hat(t) - xi_hat) / self.dxi_hat(t);
        let t = t - (self.xi_hat(t) - xi_hat) / self.dxi_hat(t);
        Ok(t)
    }

    /// Planar fan state at ξ̂ (table-based).
    pub fn planar_state(&self, xi_hat: f64) -> Result<GasState> {
        let tau = self.tau_of_xi_hat(xi_hat)?;
        Ok(GasState { u: self.u_r(tau), v: 0.0, tau })
    }

    /// Full net node of the planar fan at (ξ, η), ξ ≥ u₀ − c₀, η > 0.
    pub fn planar_node(&self, xi: f64, eta: f64) -> Result<CharNode> {
        let s = self.planar_state(xi)?;
        self.node_at(xi, eta, s.u, s.v, s.tau)
    }

    /// Builds a node from position and state, deriving φ from the pseudo-Bernoulli law.
    pub fn node_at(&self, xi: f64, eta: f64, u: f64, v: f64, tau: f64) -> Result<CharNode> {
        let c = self.c(tau);
        let (big_u, big_v) = (u - xi, v - eta);
        let (alpha, beta) = char_angles(big_u, big_v, c)?;
        let phi = -0.5 * (big_u * big_u + big_v * big_v) - self.table.b(tau);
        Ok(CharNode { xi, eta, u, v, tau, phi, alpha, beta, c })
    }

    /// Ray speed W(τ) = √(u₀² − c² − 2B(τ)) in the centered fan.
    pub fn ray_speed(&self, tau: f64) -> Result<f64> {
        let c = self.c(tau);
        let w2 = self.u0 * self.u0 - c * c - 2.0 * self.table.b(tau);
        if !(w2 > 0.0) {
            return Err(FlowError::SubsonicInflow { u0: self.u0, c0: self.c0 });
        }
        Ok(w2.sqrt())
    }

    /// dα/dτ = −τ²p″/(2cW) along the centered fan.
    fn dalpha_dtau(&self, tau: f64) -> Result<f64> {
        Ok(-tau * tau * self.eos.d2p(tau) / (2.0 * self.c(tau) * self.ray_speed(tau)?))
    }

    /// Ray angle of the centered fan carrying specific volume τ.
    pub fn alpha_of_tau(&self, tau: f64) -> f64 {
        let f = |s: f64| self.dalpha_dtau(s).unwrap_or(f64::NAN);
        self.alpha0 + integrate_log_split(f, self.tau0, tau, 1e-15)
    }

    /// Centered-fan velocity on the ray carrying τ: û = W cos α + c sin α,
    /// v̂ = W sin α − c cos α.
    pub fn centered_velocity(&self, tau: f64, alpha: f64) -> Result<(f64, f64)> {
        let w = self.ray_speed(tau)?;
        let c = self.c(tau);
        Ok((w * alpha.cos() + c * alpha.sin(), w * alpha.sin() - c * alpha.cos()))
    }

    /// Flow direction atan2(v̂, û) in the centered fan at τ.
    pub fn flow_angle(&self, tau: f64) -> Result<f64> {
        let (u, v) = self.centered_velocity(tau, self.alpha_of_tau(tau))?;
        Ok(v.atan2(u))
    }

    fn find_wall_tau(&self) -> Result<Option<f64>> {
        let g = |t: f64| self.flow_angle(t).map(|a| a - self.theta);
        if g(self.tau_cut)? > 0.0 {
            return Ok(None);
        }
        let mut lo = self.tau0;
        let mut hi = self.tau_cut;
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if g(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-13 {
                break;
            }
        }
        Ok(Some(lo))
    }

    /// Largest τ reached along PR: vacuum cut or wall alignment.
    pub fn pr_tau_end(&self) -> f64 {
        self.tau_wall.map_or(self.tau_cut, |w| w.min(self.tau_cut))
    }

    /// Vacuum angle α_v: where c drops below 10⁻⁶c₀ or the flow meets the wall.
    pub fn alpha_v(&self) -> f64 {
        let mut t = self.table.tau_hi();
        if let Some(w) = self.tau_wall {
            t = t.min(w);
        }
        if let Ok(tc) = tau_where_c(&self.eos, self.tau0, 1e-6 * self.c0, t) {
            t = t.min(tc);
        }
        self.alpha_of_tau(t)
    }

    /// Sign-corrected closed form of the C₊ characteristic PQ through the planar fan:
    /// ξ = ξ̂(τ), η² = (c/τ)[η_P²τ₀/c₀ + τ₀c₀ − τc + 2∫c].
    pub fn pq_closed_form(&self, tau: f64) -> Result<(f64, f64)> {
        let c = self.c(tau);
        let bracket = self.eta_p * self.eta_p * self.tau0 / self.c0 + self.tau0 * self.c0 - tau * c
            + 2.0 * self.table.j(tau);
        if bracket < 0.0 {
            return Err(FlowError::Radicand { tau });
        }
        Ok((self.xi_hat(tau), (c / tau * bracket).sqrt()))
    }

    /// Point of the C₋ characteristic PR at specific volume τ, integrated in ln τ
    /// with the closed-form ray speed W(τ).
    pub fn pr_point(&self, tau: f64) -> Result<(f64, f64)> {
        if tau == self.tau0 {
            return Ok((self.xi_p, self.eta_p));
        }
        if tau < self.tau0 || tau > self.pr_tau_end() * (1.0 + 1e-12) {
            return Err(FlowError::Range { what: "tau on PR", value: tau, lo: self.tau0, hi: self.pr_tau_end() });
        }
        let r_p = self.xi_p.hypot(self.eta_p);
        let rhs = |s: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
            let t = s.exp();
            let w = self.ray_speed(t)?;
            let c = self.c(t);
            if !(w > y[1]) {
                return Err(FlowError::HyperbolicityLoss { q: w - y[1], c });
            }
            let delta = c.atan2(w - y[1]);
            let da = t * self.dalpha_dtau(t)?;
            Ok([da, -y[1] / (2.0 * delta).tan() * da])
        };
        let y = rk4_adaptive(&rhs, self.tau0.ln(), [self.alpha0, r_p], tau.ln(), 1e-13, 1e-15, 1e-3)?;
        Ok((y[1] * y[0].cos(), y[1] * y[0].sin()))
    }

    /// Centered-fan principal state at ray angle α, integrated in α from P.
    ///
    /// Independent of the closed-form ray speed: W is recovered from (û, v̂).
    pub fn centered_wave_state(&self, alpha: f64) -> Result<GasState> {
        let alpha_v = self.alpha_v();
        if !(alpha <= self.alpha0 && alpha >= alpha_v) {
            return Err(FlowError::Range { what: "alpha", value: alpha, lo: alpha_v, hi: self.alpha0 });
        }
        let y = rk4_adaptive(
            &|a: f64, y: &[f64; 3]| self.centered_rhs(a, y),
            self.alpha0,
            [self.u0, 0.0, self.tau0],
            alpha,
            1e-13,
            1e-15,
            1e-3,
        )
        .map_err(|e| match e {
            FlowError::Integration { at, .. } => FlowError::Integration { at, what: "centered fan near vacuum".into() },
            other => other,
        })?;
        Ok(GasState { u: y[0], v: y[1], tau: y[2] })
    }

    fn centered_rhs(&self, a: f64, y: &[f64; 3]) -> Result<[f64; 3]> {
        let (u, v, t) = (y[0], y[1], y[2]);
        if !(t > self.eos.tau_min) {
            return Err(FlowError::Integration { at: a, what: "tau left the domain".into() });
        }
        let c = self.c(t);
        let w = u * a.cos() + v * a.sin();
        let dt = -2.0 * c * w / (t * t * self.eos.d2p(t));
        let k = t * self.eos.dp(t) * dt / c;
        Ok([-a.sin() * k, a.cos() * k, dt])
    }

    /// C₊ boundary PQ sampled at `n` points with ξ̂ uniform from P to τ = tau_end.
    pub fn curve_pq(&self, tau_end: f64, n: usize) -> Result<BoundaryCurve> {
        if n < 2 || !(tau_end > self.tau0) {
            return Err(FlowError::Parameter("curve_pq needs n >= 2 and tau_end > tau0".into()));
        }
        let (x0, x1) = (self.xi_hat(self.tau0), self.xi_hat(tau_end));
        let mut taus = Vec::with_capacity(n);
        taus.push(self.tau0);
        for k in 1..n - 1 {
            taus.push(self.tau_of_xi_hat(x0 + (x1 - x0) * k as f64 / (n - 1) as f64)?);
        }
        taus.push(tau_end);

        let rhs = |s: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
            let t = s.exp();
            let c = self.c(t);
            let eta = y[0];
            if !(eta > 0.0) {
                return Err(FlowError::Integration { at: t, what: "PQ reached eta = 0".into() });
            }
            let dxi = t * self.dxi_hat(t);
            let deta = (c * c - eta * eta) / (2.0 * c * eta) * dxi;
            Ok([deta, c * dxi - eta * deta])
        };
        let mut y = [self.eta_p, self.phi_p];
        let mut points = Vec::with_capacity(n);
        for (k, &t) in taus.iter().enumerate() {
            if k > 0 {
                let h0 = (t.ln() - taus[k - 1].ln()) / 4.0;
                y = rk4_adaptive(&rhs, taus[k - 1].ln(), y, t.ln(), 1e-13, 1e-15, h0)?;
            }
            let c = self.c(t);
            let xi = self.xi_hat(t);
            let eta = y[0];
            let alpha = ((c * c - eta * eta) / (2.0 * c * eta)).atan();
            points.push(CharNode { xi, eta, u: self.u_r(t), v: 0.0, tau: t, phi: y[1], alpha, beta: -FRAC_PI_2, c });
            let q = c.hypot(eta);
            if !(q > c) {
                return Err(FlowError::HyperbolicityLoss { q, c });
            }
        }
        Ok(BoundaryCurve { points, family: Family::Plus, tau_range: (self.tau0, tau_end) })
    }

    /// C₋ boundary PR sampled at `n` points uniform in ray angle from P to τ = tau_end.
    ///
    /// States come from the centered-fan ODE integrated jointly with the
    /// characteristic radius r(α) and potential φ(α).
    pub fn curve_pr_with_states(&self, tau_end: f64, n: usize) -> Result<BoundaryCurve> {
        if n < 2 || !(tau_end > self.tau0) || tau_end > self.pr_tau_end() * (1.0 + 1e-12) {
            return Err(FlowError::Parameter(format!(
                "curve_pr_with_states needs n >= 2 and tau_end in (tau0, {}]",
                self.pr_tau_end()
            )));
        }
        let a_end = self.alpha_of_tau(tau_end);
        let r_p = self.xi_p.hypot(self.eta_p);
        let rhs = |a: f64, y: &[f64; 5]| -> Result<[f64; 5]> {
            let [du, dv, dt] = self.centered_rhs(a, &[y[0], y[1], y[2]])?;
            let c = self.c(y[2]);
            let w = y[0] * a.cos() + y[1] * a.sin();
            let r = y[3];
            if !(w > r) {
                return Err(FlowError::HyperbolicityLoss { q: w - r, c });
            }
            let delta = c.atan2(w - r);
            let dr = -r / (2.0 * delta).tan();
            Ok([du, dv, dt, dr, (w - r) * dr - c * r])
        };
        let mut y = [self.u0, 0.0, self.tau0, r_p, self.phi_p];
        let mut points = Vec::with_capacity(n);
        let mut a_prev = self.alpha0;
        for k in 0..n {
            let a = if k + 1 == n { a_end } else { self.alpha0 + (a_end - self.alpha0) * k as f64 / (n - 1) as f64 };
            if k > 0 {
                y = rk4_adaptive(&rhs, a_prev, y, a, 1e-13, 1e-15, (a - a_prev) / 4.0)?;
            }
            a_prev = a;
            let (u, v, t, r, phi) = (y[0], y[1], y[2], y[3], y[4]);
            let c = self.c(t);
            let w = u * a.cos() + v * a.sin();
            let delta = c.atan2(w - r);
            let node = if k == 0 {
                CharNode { xi: self.xi_p, eta: self.eta_p, u, v, tau: t, phi, alpha: a, beta: -FRAC_PI_2, c }
            } else {
                CharNode { xi: r * a.cos(), eta: r * a.sin(), u, v, tau: t, phi, alpha: a, beta: a - 2.0 * delta, c }
            };
            points.push(node);
        }
        let t_last = points.last().unwrap().tau;
        Ok(BoundaryCurve { points, family: Family::Minus, tau_range: (self.tau0, t_last) })
    }
}

/// τ where c first drops to `c_target`, searched geometrically up to `tau_cap`.
fn tau_where_c(eos: &EosModel, tau0: f64, c_target: f64, tau_cap: f64) -> Result<f64> {
    let mut lo = tau0;
    let mut hi = tau0;
    while eos.c(hi) > c_target {
        lo = hi;
        hi *= 2.0;
        if hi > tau_cap {
            return Err(FlowError::Range { what: "sound speed floor", value: c_target, lo: 0.0, hi: eos.c(tau_cap) });
        }
    }
    brent(|t| eos.c(t) - c_target, lo, hi, 1e-14 * hi)
}

/// Vacuum level: c = c_vac·c₀ or ρ = rho_vac·ρ₀, whichever is reached first.
fn vacuum_tau(eos: &EosModel, tau0: f64, c0: f64, cut: VacuumCut) -> Result<f64> {
    let cap = tau0 / cut.rho_vac;
    Ok(tau_where_c(eos, tau0, cut.c_vac * c0, cap).unwrap_or(cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gamma2() -> CornerProblem {
        let eos = EosModel::polytropic(1.0, 2.0).unwrap();
        let c0 = eos.c(1.0);
        CornerProblem::new(eos, 2.0 * c0, 1.0, -1.3, VacuumCut::default()).unwrap()
    }

    #[test]
    fn interaction_point_examples() {
        let eos = EosModel::polytropic(1.0, 2.0).unwrap();
        let s2 = 2f64.sqrt();
        let (x, y) = interaction_point(&eos, 2.0 * s2, 1.0).unwrap();
        assert_relative_eq!(x, s2, epsilon = 1e-15);
        assert_relative_eq!(y, s2 * (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert!(matches!(interaction_point(&eos, s2, 1.0), Err(FlowError::SubsonicInflow { .. })));
    }

    #[test]
    fn planar_state_head_and_interior() {
        let eos = EosModel::polytropic(1.0, 2.0).unwrap();
        let c0 = eos.c(1.0);
        let head = planar_wave_state(&eos, 3.0, 1.0, 3.0 - c0).unwrap();
        assert_eq!(head, GasState { u: 3.0, v: 0.0, tau: 1.0 });
        // γ = 2: ∫₁⁴ c/τ = 2√2 (1 − 1/2) = √2; u_r = 3 + √2, ξ̂ = u_r − c(4).
        let u_r = 3.0 + 2f64.sqrt();
        let xi = u_r - eos.c(4.0);
        let s = planar_wave_state(&eos, 3.0, 1.0, xi).unwrap();
        assert_relative_eq!(s.tau, 4.0, max_relative = 1e-11);
        assert_relative_eq!(s.u, u_r, max_relative = 1e-12);
        // Vacuum edge: u₀ + 2√2.
        assert!(planar_wave_state(&eos, 3.0, 1.0, 3.0 + 2.0 * 2f64.sqrt() + 0.1).is_err());
        assert!(planar_wave_state(&eos, 3.0, 1.0, 3.0 - c0 - 0.1).is_err());
    }

    #[test]
    fn table_planar_state_matches_direct() {
        let p = gamma2();
        for &xi in &[p.xi_p, p.xi_p + 0.3, p.xi_p + 2.0] {
            let a = p.planar_state(xi).unwrap();
            let b = planar_wave_state(&p.eos, p.u0, p.tau0, xi).unwrap();
            assert_relative_eq!(a.tau, b.tau, max_relative = 1e-10);
            assert_relative_eq!(a.u, b.u, max_relative = 1e-12);
        }
    }

    #[test]
    fn alpha0_from_rationalized_lambda() {
        let p = gamma2();
        // u₀ = 2c₀: tan α₀ = c₀/√(u₀² − c₀²) = 1/√3.
        assert_relative_eq!(p.alpha0, std::f64::consts::FRAC_PI_6, epsilon = 1e-14);
        let on_ray = p.eta_p / p.xi_p;
        assert_relative_eq!(on_ray, p.alpha0.tan(), epsilon = 1e-14);
    }

    #[test]
    fn pq_closed_form_matches_integration() {
        let p = gamma2();
        let pq = p.curve_pq(50.0, 33).unwrap();
        assert_eq!(pq.points[0].xi, p.xi_p);
        assert_eq!(pq.points[0].eta, p.eta_p);
        for node in &pq.points {
            let (x, y) = p.pq_closed_form(node.tau).unwrap();
            assert_relative_eq!(node.xi, x, epsilon = 1e-12);
            assert_relative_eq!(node.eta, y, epsilon = 1e-10);
            // φ carried along the curve agrees with pseudo-Bernoulli.
            let q2 = node.big_u().powi(2) + node.big_v().powi(2);
            assert!((0.5 * q2 + p.table.b(node.tau) + node.phi).abs() < 1e-10);
        }
        pq.check_sign_conditions().unwrap();
        let (x, y) = p.pq_closed_form(p.tau0).unwrap();
        assert_relative_eq!(x, p.xi_p, epsilon = 1e-14);
        assert_relative_eq!(y, p.eta_p, epsilon = 1e-14);
    }

    #[test]
    fn pq_derivative_matches_analytic_rho_slope() {
        // ∂₊ρ = −2 sin 2δ c ρ⁴ / p″ on PQ.
        let p = gamma2();
        let pq = p.curve_pq(3.0, 2001).unwrap();
        let d = pq.rho_derivatives();
        for k in (100..2000).step_by(300) {
            let a = &pq.points[k];
            let b = &pq.points[k + 1];
            let mid = p.node_at(0.5 * (a.xi + b.xi), 0.5 * (a.eta + b.eta), 0.5 * (a.u + b.u), 0.0, 0.5 * (a.tau + b.tau)).unwrap();
            let delta = 0.5 * (mid.alpha - (-FRAC_PI_2));
            let exact = -2.0 * (2.0 * delta).sin() * mid.c * mid.rho().powi(4) / p.eos.d2p(mid.tau);
            assert_relative_eq!(d[k], exact, max_relative = 1e-4);
        }
    }

    #[test]
    fn pr_starts_at_p_and_routes_agree() {
        let p = gamma2();
        let (x, y) = p.pr_point(p.tau0).unwrap();
        assert_eq!((x, y), (p.xi_p, p.eta_p));
        let pr = p.curve_pr_with_states(20.0, 17).unwrap();
        for node in &pr.points[1..] {
            let (x, y) = p.pr_point(node.tau).unwrap();
            assert_relative_eq!(node.xi, x, epsilon = 1e-9);
            assert_relative_eq!(node.eta, y, epsilon = 1e-9);
            // Closed-form ray speed agrees with the ODE velocity.
            let (u, v) = p.centered_velocity(node.tau, node.alpha).unwrap();
            assert_relative_eq!(node.u, u, epsilon = 1e-10);
            assert_relative_eq!(node.v, v, epsilon = 1e-10);
            let q2 = node.big_u().powi(2) + node.big_v().powi(2);
            assert!((0.5 * q2 + p.table.b(node.tau) + node.phi).abs() < 1e-9);
            // Angles agree with the eigenvalue formulas.
            let (a, b) = char_angles(node.big_u(), node.big_v(), node.c).unwrap();
            assert_relative_eq!(a, node.alpha, epsilon = 1e-10);
            assert_relative_eq!(b, node.beta, epsilon = 1e-10);
        }
        pr.check_sign_conditions().unwrap();
    }

    #[test]
    fn centered_state_relations() {
        let p = gamma2();
        let s = p.centered_wave_state(p.alpha0).unwrap();
        assert_eq!(s, GasState { u: p.u0, v: 0.0, tau: p.tau0 });
        let av = p.alpha_v();
        for k in 1..8 {
            let a = p.alpha0 + (av - p.alpha0) * k as f64 / 8.0;
            let s = p.centered_wave_state(a).unwrap();
            let c = p.c(s.tau);
            let bern = 0.5 * (s.u * s.u + s.v * s.v) + p.table.b(s.tau) - 0.5 * p.u0 * p.u0;
            assert!(bern.abs() < 1e-8, "Bernoulli {bern}");
            let q2 = s.u * s.u + s.v * s.v;
            let lp = (s.u * s.v + c * (q2 - c * c).sqrt()) / (s.u * s.u - c * c);
            assert!((a.tan() - lp).abs() < 1e-8);
        }
        assert!(p.centered_wave_state(p.alpha0 + 0.1).is_err());
    }

    #[test]
    fn wall_truncation_found() {
        let eos = EosModel::polytropic(1.0, 2.0).unwrap();
        let c0 = eos.c(1.0);
        let steep = CornerProblem::new(eos.clone(), 2.0 * c0, 1.0, -1.3, VacuumCut::default()).unwrap();
        assert!(steep.tau_wall.is_none());
        let shallow = CornerProblem::new(eos, 2.0 * c0, 1.0, -0.3, VacuumCut::default()).unwrap();
        let tw = shallow.tau_wall.unwrap();
        assert_relative_eq!(shallow.flow_angle(tw).unwrap(), -0.3, epsilon = 1e-9);
    }
}
