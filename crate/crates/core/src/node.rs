use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

/// One point of the characteristic net with its full state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharNode {
    pub xi: f64,
    pub eta: f64,
    pub u: f64,
    pub v: f64,
    pub tau: f64,
    pub phi: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Sound speed c(τ), cached.
    pub c: f64,
}

impl CharNode {
    /// Pseudo-velocity component U = u − ξ.
    pub fn big_u(&self) -> f64 {
        self.u - self.xi
    }

    /// Pseudo-velocity component V = v − η.
    pub fn big_v(&self) -> f64 {
        self.v - self.eta
    }

    pub fn q(&self) -> f64 {
        self.big_u().hypot(self.big_v())
    }

    pub fn sigma(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    pub fn delta(&self) -> f64 {
        0.5 * (self.alpha - self.beta)
    }

    /// Pseudo-Mach number 1/sin δ.
    pub fn mach(&self) -> f64 {
        1.0 / self.delta().sin()
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.tau
    }

    pub fn position(&self) -> (f64, f64) {
        (self.xi, self.eta)
    }

    pub fn distance(&self, other: &CharNode) -> f64 {
        (self.xi - other.xi).hypot(self.eta - other.eta)
    }
}

/// Characteristic angles (α, β) = (σ + δ, σ − δ) from the pseudo-velocity
/// and sound speed, with σ = atan2(V, U) and sin δ = c/q.
pub fn char_angles(big_u: f64, big_v: f64, c: f64) -> Result<(f64, f64)> {
    let q = big_u.hypot(big_v);
    if !(q > c) {
        return Err(FlowError::HyperbolicityLoss { q, c });
    }
    let sigma = big_v.atan2(big_u);
    let delta = c.atan2(((q - c) * (q + c)).sqrt());
    Ok((sigma + delta, sigma - delta))
}

/// λ₊ in the rationalized form (V² − c²)/(UV − c√(q² − c²)), finite at U = c.
pub fn lambda_plus(big_u: f64, big_v: f64, c: f64) -> Result<f64> {
    let q2 = big_u * big_u + big_v * big_v;
    if !(q2 > c * c) {
        return Err(FlowError::HyperbolicityLoss { q: q2.sqrt(), c });
    }
    Ok((big_v * big_v - c * c) / (big_u * big_v - c * (q2 - c * c).sqrt()))
}

/// λ₊ = (UV + c√(q² − c²))/(U² − c²), the unrationalized form.
pub fn lambda_plus_direct(big_u: f64, big_v: f64, c: f64) -> f64 {
    let q2 = big_u * big_u + big_v * big_v;
    (big_u * big_v + c * (q2 - c * c).sqrt()) / (big_u * big_u - c * c)
}

/// λ₋ = (UV − c√(q² − c²))/(U² − c²).
pub fn lambda_minus_direct(big_u: f64, big_v: f64, c: f64) -> f64 {
    let q2 = big_u * big_u + big_v * big_v;
    (big_u * big_v - c * (q2 - c * c).sqrt()) / (big_u * big_u - c * c)
}
