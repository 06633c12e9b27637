//! Tabulated thermodynamic integrals with exact knot derivatives.
//!
//! Three running integrals from τ₀ are needed repeatedly inside node solves:
//! B(τ) = ∫ s p′(s) ds, I(τ) = ∫ c(s)/s ds and J(τ) = ∫ c(s) ds.  Each is
//! stored on a log-spaced knot grid (τ₀ is a knot) with segment values from
//! adaptive quadrature and slopes from the integrand itself, and evaluated by
//! cubic Hermite interpolation in ln τ.

use crate::eos::EosModel;
use crate::error::{FlowError, Result};
use crate::numerics::integrate;

/// Knots per decade of τ; interpolation error scales like (ln10/K)⁴.
const KNOTS_PER_DECADE: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integral {
    /// ∫ s p′(s) ds
    B,
    /// ∫ c(s)/s ds
    I,
    /// ∫ c(s) ds
    J,
}

#[derive(Debug, Clone)]
pub struct ThermoTable {
    eos: EosModel,
    tau0: f64,
    x0: f64,
    dx: f64,
    /// Index of τ₀ in the knot arrays.
    k0: usize,
    taus: Vec<f64>,
    vals: [Vec<f64>; 3],
    /// Slopes d/d(ln τ) at the knots.
    slopes: [Vec<f64>; 3],
}

fn slot(which: Integral) -> usize {
    match which {
        Integral::B => 0,
        Integral::I => 1,
        Integral::J => 2,
    }
}

impl ThermoTable {
    /// Tabulates on [tau_lo, tau_hi] with tau_lo ≤ τ₀ < tau_hi.
    pub fn new(eos: &EosModel, tau0: f64, tau_lo: f64, tau_hi: f64) -> Result<Self> {
        if !(tau_lo > eos.tau_min && tau_lo <= tau0 && tau_hi > tau0) {
            return Err(FlowError::Parameter(format!(
                "thermo table range [{tau_lo}, {tau_hi}] must contain tau0 = {tau0} above tau_min"
            )));
        }
        let dx = 10f64.ln() / KNOTS_PER_DECADE;
        let x0 = tau0.ln();
        let k_lo = ((x0 - tau_lo.ln()) / dx).floor() as usize;
        let k_hi = ((tau_hi.ln() - x0) / dx).ceil() as usize;
        let n = k_lo + k_hi + 1;
        let taus: Vec<f64> = (0..n)
            .map(|k| {
                if k == k_lo {
                    tau0
                } else {
                    (x0 + (k as f64 - k_lo as f64) * dx).exp()
                }
            })
            .collect();
        for &t in &taus {
            eos.sound_speed(t)?;
        }
        let integrands: [Box<dyn Fn(f64) -> f64 + '_>; 3] = [
            Box::new(|s: f64| s * eos.dp(s)),
            Box::new(|s: f64| eos.c(s) / s),
            Box::new(|s: f64| eos.c(s)),
        ];
        let mut vals: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut slopes: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (w, f) in integrands.iter().enumerate() {
            for k in 0..n {
                slopes[w][k] = taus[k] * f(taus[k]);
            }
            let seg = |a: f64, b: f64| {
                let scale = (f(0.5 * (a + b)) * (b - a)).abs().max(1e-300);
                integrate(f, a, b, 1e-15 * scale)
            };
            for k in k_lo + 1..n {
                vals[w][k] = vals[w][k - 1] + seg(taus[k - 1], taus[k]);
            }
            for k in (0..k_lo).rev() {
                vals[w][k] = vals[w][k + 1] - seg(taus[k], taus[k + 1]);
            }
        }
        Ok(Self { eos: eos.clone(), tau0, x0, dx, k0: k_lo, taus, vals, slopes })
    }

    pub fn eos(&self) -> &EosModel {
        &self.eos
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn tau_lo(&self) -> f64 {
        self.taus[0]
    }

    pub fn tau_hi(&self) -> f64 {
        *self.taus.last().unwrap()
    }

    fn segment(&self, tau: f64) -> Option<(usize, f64)> {
        let s = (tau.ln() - self.x0) / self.dx + self.k0 as f64;
        if !(s >= 0.0) || s > (self.taus.len() - 1) as f64 {
            return None;
        }
        let k = (s.floor() as usize).min(self.taus.len() - 2);
        Some((k, s - k as f64))
    }

    fn hermite(&self, w: usize, k: usize, t: f64) -> f64 {
        let (y0, y1) = (self.vals[w][k], self.vals[w][k + 1]);
        let (m0, m1) = (self.slopes[w][k] * self.dx, self.slopes[w][k + 1] * self.dx);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    fn hermite_dt(&self, w: usize, k: usize, t: f64) -> f64 {
        let (y0, y1) = (self.vals[w][k], self.vals[w][k + 1]);
        let (m0, m1) = (self.slopes[w][k] * self.dx, self.slopes[w][k + 1] * self.dx);
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * (y0 - y1) + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (3.0 * t2 - 2.0 * t) * m1
    }

    /// Running integral from τ₀ to τ. Falls back to direct quadrature from the
    /// nearest table end outside the tabulated range.
    pub fn eval(&self, which: Integral, tau: f64) -> f64 {
        let w = slot(which);
        match self.segment(tau) {
            Some((k, t)) => self.hermite(w, k, t),
            None => {
                let (end, base) = if tau < self.tau_lo() {
                    (self.tau_lo(), self.vals[w][0])
                } else {
                    (self.tau_hi(), *self.vals[w].last().unwrap())
                };
                let eos = &self.eos;
                let f = |s: f64| match which {
                    Integral::B => s * eos.dp(s),
                    Integral::I => eos.c(s) / s,
                    Integral::J => eos.c(s),
                };
                base + crate::numerics::integrate_log_split(f, end, tau, 1e-14 * base.abs().max(1e-12))
            }
        }
    }

    pub fn b(&self, tau: f64) -> f64 {
        self.eval(Integral::B, tau)
    }

    pub fn i(&self, tau: f64) -> f64 {
        self.eval(Integral::I, tau)
    }

    pub fn j(&self, tau: f64) -> f64 {
        self.eval(Integral::J, tau)
    }

    /// Solves B(τ) = target. B is strictly decreasing, so the root is unique.
    pub fn invert_b(&self, target: f64) -> Result<f64> {
        let b = &self.vals[0];
        let n = b.len();
        if target > b[0] {
            return Err(FlowError::Range {
                what: "Bernoulli target (below tabulated tau)",
                value: target,
                lo: b[n - 1],
                hi: b[0],
            });
        }
        if target < b[n - 1] {
            return Err(FlowError::BernoulliNoRoot { target });
        }
        // b is decreasing: first knot with b[k] < target marks the segment end.
        let hi = b.partition_point(|&v| v >= target).clamp(1, n - 1);
        let k = hi - 1;
        let (mut lo_t, mut hi_t) = (0.0f64, 1.0f64);
        let mut t = if b[k] != b[k + 1] { (b[k] - target) / (b[k] - b[k + 1]) } else { 0.5 };
        for _ in 0..60 {
            let r = self.hermite(0, k, t) - target;
            if r > 0.0 {
                lo_t = t;
            } else {
                hi_t = t;
            }
            let d = self.hermite_dt(0, k, t);
            let mut next = if d < 0.0 { t - r / d } else { 0.5 * (lo_t + hi_t) };
            if !(next > lo_t && next < hi_t) {
                next = 0.5 * (lo_t + hi_t);
            }
            if (next - t).abs() < 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        Ok((self.x0 + (k as f64 + t - self.k0 as f64) * self.dx).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn polytropic_table() -> (EosModel, ThermoTable) {
        let eos = EosModel::polytropic(1.0, 2.0).unwrap();
        let t = ThermoTable::new(&eos, 1.0, 0.5, 1e6).unwrap();
        (eos, t)
    }

    #[test]
    fn polytropic_closed_forms() {
        // γ = 2: s p′ = −2/s², c = √2 s^(−1/2).
        let (_, tab) = polytropic_table();
        for &t in &[0.7, 1.0, 1.37, 10.0, 4321.0] {
            assert_relative_eq!(tab.b(t), 2.0 / t - 2.0, epsilon = 1e-12, max_relative = 1e-11);
            let i = 2.0 * 2f64.sqrt() * (1.0 - t.powf(-0.5));
            assert_relative_eq!(tab.i(t), i, epsilon = 1e-12, max_relative = 1e-11);
            let j = 2.0 * 2f64.sqrt() * (t.sqrt() - 1.0);
            assert_relative_eq!(tab.j(t), j, epsilon = 1e-12, max_relative = 1e-11);
        }
        assert_eq!(tab.b(1.0), 0.0);
    }

    #[test]
    fn outside_range_falls_back() {
        let (_, tab) = polytropic_table();
        assert_relative_eq!(tab.b(5e6), 2.0 / 5e6 - 2.0, epsilon = 1e-11);
    }

    #[test]
    fn inverse_round_trip() {
        let (_, tab) = polytropic_table();
        for &t in &[0.6, 1.0, 1.0001, 3.3] {
            let back = tab.invert_b(tab.b(t)).unwrap();
            assert_relative_eq!(back, t, max_relative = 1e-12);
        }
        // Far out B is nearly flat, so only the residual is well conditioned.
        let back = tab.invert_b(tab.b(7e4)).unwrap();
        assert!((tab.b(back) - tab.b(7e4)).abs() < 1e-15);
        assert!(matches!(tab.invert_b(-2.5), Err(FlowError::BernoulliNoRoot { .. })));
    }
}
