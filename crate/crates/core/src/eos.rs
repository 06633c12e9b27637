//! Convex pressure laws p(τ) and the thermodynamic functionals built from them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

/// A barotropic pressure law with analytic first and second derivatives.
pub trait PressureLaw: Send + Sync {
    fn p(&self, tau: f64) -> f64;
    fn dp(&self, tau: f64) -> f64;
    fn d2p(&self, tau: f64) -> f64;
}

/// Builtin families with their parameters, kept for reporting and presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EosFamily {
    Polytropic { a: f64, gamma: f64 },
    TwoConstant { a1: f64, b1: f64, gamma1: f64, gamma2: f64 },
    ShallowWater { g: f64, k: f64 },
    Magneto { a1: f64, gamma: f64, mu: f64, kappa0: f64 },
    VanDerWaals { s1: f64, gamma: f64 },
    Custom,
}

struct TwoPower {
    a1: f64,
    g1: f64,
    b1: f64,
    g2: f64,
}

impl PressureLaw for TwoPower {
    fn p(&self, tau: f64) -> f64 {
        self.a1 * tau.powf(self.g1) + self.b1 * tau.powf(self.g2)
    }
    fn dp(&self, tau: f64) -> f64 {
        self.a1 * self.g1 * tau.powf(self.g1 - 1.0) + self.b1 * self.g2 * tau.powf(self.g2 - 1.0)
    }
    fn d2p(&self, tau: f64) -> f64 {
        self.a1 * self.g1 * (self.g1 - 1.0) * tau.powf(self.g1 - 2.0)
            + self.b1 * self.g2 * (self.g2 - 1.0) * tau.powf(self.g2 - 2.0)
    }
}

struct VdW {
    s1: f64,
    gamma: f64,
}

impl PressureLaw for VdW {
    fn p(&self, tau: f64) -> f64 {
        self.s1 * (tau - 1.0).powf(-(self.gamma + 1.0)) - tau.powi(-2)
    }
    fn dp(&self, tau: f64) -> f64 {
        let g1 = self.gamma + 1.0;
        -g1 * self.s1 * (tau - 1.0).powf(-g1 - 1.0) + 2.0 * tau.powi(-3)
    }
    fn d2p(&self, tau: f64) -> f64 {
        let g1 = self.gamma + 1.0;
        g1 * (g1 + 1.0) * self.s1 * (tau - 1.0).powf(-g1 - 2.0) - 6.0 * tau.powi(-4)
    }
}

struct Closures<P, D, D2> {
    p: P,
    dp: D,
    d2p: D2,
}

impl<P, D, D2> PressureLaw for Closures<P, D, D2>
where
    P: Fn(f64) -> f64 + Send + Sync,
    D: Fn(f64) -> f64 + Send + Sync,
    D2: Fn(f64) -> f64 + Send + Sync,
{
    fn p(&self, tau: f64) -> f64 {
        (self.p)(tau)
    }
    fn dp(&self, tau: f64) -> f64 {
        (self.dp)(tau)
    }
    fn d2p(&self, tau: f64) -> f64 {
        (self.d2p)(tau)
    }
}

/// Equation of state: a pressure law plus its validity bound.
#[derive(Clone)]
pub struct EosModel {
    law: Arc<dyn PressureLaw>,
    pub tau_min: f64,
    pub label: String,
    pub family: EosFamily,
}

impl fmt::Debug for EosModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EosModel")
            .field("label", &self.label)
            .field("tau_min", &self.tau_min)
            .field("family", &self.family)
            .finish()
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(FlowError::Parameter(msg.into()))
    }
}

impl EosModel {
    /// Wraps user-supplied p, p', p'' closures.
    pub fn custom<P, D, D2>(label: impl Into<String>, tau_min: f64, p: P, dp: D, d2p: D2) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            law: Arc::new(Closures { p, dp, d2p }),
            tau_min,
            label: label.into(),
            family: EosFamily::Custom,
        }
    }

    /// p = A τ^(−γ).
    pub fn polytropic(a: f64, gamma: f64) -> Result<Self> {
        require(a > 0.0, "polytropic: A must be positive")?;
        require(gamma > 1.0, "polytropic: gamma must exceed 1")?;
        Ok(Self {
            law: Arc::new(TwoPower { a1: a, g1: -gamma, b1: 0.0, g2: 0.0 }),
            tau_min: 0.0,
            label: format!("polytropic(A={a}, gamma={gamma})"),
            family: EosFamily::Polytropic { a, gamma },
        })
    }

    /// p = A₁ τ^γ₁ + B₁ τ^γ₂.
    pub fn two_constant(a1: f64, b1: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        require(
            a1.is_finite() && b1.is_finite() && gamma1.is_finite() && gamma2.is_finite(),
            "two_constant: parameters must be finite",
        )?;
        require(a1 != 0.0 || b1 != 0.0, "two_constant: A1 and B1 cannot both vanish")?;
        Ok(Self {
            law: Arc::new(TwoPower { a1, g1: gamma1, b1, g2: gamma2 }),
            tau_min: 0.0,
            label: format!("two_constant(A1={a1}, B1={b1}, gamma1={gamma1}, gamma2={gamma2})"),
            family: EosFamily::TwoConstant { a1, b1, gamma1, gamma2 },
        })
    }

    /// Modified shallow water: p = k/τ + (g/2)/τ², τ = 1/h.
    pub fn shallow_water(g: f64, k: f64) -> Result<Self> {
        require(g > 0.0, "shallow_water: g must be positive")?;
        require(k >= 0.0, "shallow_water: k must be nonnegative")?;
        Ok(Self {
            law: Arc::new(TwoPower { a1: k, g1: -1.0, b1: 0.5 * g, g2: -2.0 }),
            tau_min: 0.0,
            label: format!("shallow_water(g={g}, k={k})"),
            family: EosFamily::ShallowWater { g, k },
        })
    }

    /// Transverse-field magnetogasdynamics under the frozen law:
    /// p = A₁ τ^(−γ) + B₁ τ^(−2), B₁ = μκ₀²/2.
    pub fn magneto(a1: f64, gamma: f64, mu: f64, kappa0: f64) -> Result<Self> {
        require(a1 > 0.0, "magneto: A1 must be positive")?;
        require(gamma > 0.0, "magneto: gamma must be positive")?;
        let b1 = 0.5 * mu * kappa0 * kappa0;
        require(b1 > 0.0, "magneto: mu*kappa0^2/2 must be positive")?;
        Ok(Self {
            law: Arc::new(TwoPower { a1, g1: -gamma, b1, g2: -2.0 }),
            tau_min: 0.0,
            label: format!("magneto(A1={a1}, gamma={gamma}, mu={mu}, kappa0={kappa0})"),
            family: EosFamily::Magneto { a1, gamma, mu, kappa0 },
        })
    }

    /// Van der Waals type law p = S₁/(τ−1)^(γ+1) − 1/τ².
    ///
    /// `tau_min` is the smallest τ ≥ 4 from which p' < 0, p'' > 0 and m > 0
    /// hold on a dense scan out to 10⁶.
    pub fn van_der_waals(s1: f64, gamma: f64) -> Result<Self> {
        require(
            s1 > 0.25 && s1 < 81.0 / 256.0,
            format!("van_der_waals: S1 = {s1} outside (1/4, 81/256)"),
        )?;
        require(gamma > 0.0 && gamma < 1.0, "van_der_waals: gamma must lie in (0, 1)")?;
        let law = VdW { s1, gamma };
        let tau_min = vdw_admissible_from(&law).ok_or_else(|| {
            FlowError::Parameter(format!(
                "van_der_waals: no admissible range found for S1={s1}, gamma={gamma}"
            ))
        })?;
        Ok(Self {
            law: Arc::new(law),
            tau_min,
            label: format!("van_der_waals(S1={s1}, gamma={gamma})"),
            family: EosFamily::VanDerWaals { s1, gamma },
        })
    }

    /// Builds a builtin family from its parameters; `Custom` has no closed form here.
    pub fn from_family(family: &EosFamily) -> Result<Self> {
        match *family {
            EosFamily::Polytropic { a, gamma } => Self::polytropic(a, gamma),
            EosFamily::TwoConstant { a1, b1, gamma1, gamma2 } => Self::two_constant(a1, b1, gamma1, gamma2),
            EosFamily::ShallowWater { g, k } => Self::shallow_water(g, k),
            EosFamily::Magneto { a1, gamma, mu, kappa0 } => Self::magneto(a1, gamma, mu, kappa0),
            EosFamily::VanDerWaals { s1, gamma } => Self::van_der_waals(s1, gamma),
            EosFamily::Custom => Err(FlowError::Parameter("custom laws must be built from closures".into())),
        }
    }

    pub fn with_tau_min(mut self, tau_min: f64) -> Self {
        self.tau_min = tau_min;
        self
    }

    pub fn p(&self, tau: f64) -> f64 {
        self.law.p(tau)
    }
    pub fn dp(&self, tau: f64) -> f64 {
        self.law.dp(tau)
    }
    pub fn d2p(&self, tau: f64) -> f64 {
        self.law.d2p(tau)
    }

    fn check_domain(&self, tau: f64) -> Result<()> {
        if tau > self.tau_min && tau.is_finite() {
            Ok(())
        } else {
            Err(FlowError::Domain { tau, tau_min: self.tau_min })
        }
    }

    /// c = √(−τ² p′).
    pub fn sound_speed(&self, tau: f64) -> Result<f64> {
        self.check_domain(tau)?;
        let dp = self.dp(tau);
        if dp >= 0.0 {
            return Err(FlowError::Convexity { tau, what: "p' >= 0" });
        }
        Ok((-tau * tau * dp).sqrt())
    }

    /// Unchecked sound speed for hot loops where τ is already known valid.
    #[inline]
    pub fn c(&self, tau: f64) -> f64 {
        (-tau * tau * self.dp(tau)).sqrt()
    }

    /// κ = −2p′ / (2p′ + τp″).
    pub fn kappa(&self, tau: f64) -> Result<f64> {
        self.check_domain(tau)?;
        let dp = self.dp(tau);
        let den = 2.0 * dp + tau * self.d2p(tau);
        if den == 0.0 || (den.abs() <= 1e-14 * dp.abs()) {
            return Err(FlowError::KappaSingular { tau });
        }
        Ok(-2.0 * dp / den)
    }

    /// μ² = 1/(1+κ), evaluated as 1 + 2p′/(τp″).
    pub fn mu2(&self, tau: f64) -> Result<f64> {
        let d2p = self.checked_d2p(tau)?;
        Ok(1.0 + 2.0 * self.dp(tau) / (tau * d2p))
    }

    fn checked_d2p(&self, tau: f64) -> Result<f64> {
        self.check_domain(tau)?;
        let d2p = self.d2p(tau);
        if d2p <= 0.0 {
            return Err(FlowError::Convexity { tau, what: "p'' <= 0" });
        }
        Ok(d2p)
    }

    /// m = (κ−1)/(κ+1), evaluated as −1 − 4p′/(τp″).
    pub fn m_value(&self, tau: f64) -> Result<f64> {
        let d2p = self.checked_d2p(tau)?;
        Ok(-1.0 - 4.0 * self.dp(tau) / (tau * d2p))
    }

    #[inline]
    pub fn m_unchecked(&self, tau: f64) -> f64 {
        -1.0 - 4.0 * self.dp(tau) / (tau * self.d2p(tau))
    }

    /// Ω(τ, δ) = m(τ) − tan²δ.
    pub fn omega(&self, tau: f64, delta: f64) -> Result<f64> {
        Ok(self.m_value(tau)? - delta.tan().powi(2))
    }

    /// δ̄ = arctan √m.
    pub fn delta_bar(&self, tau: f64) -> Result<f64> {
        let m = self.m_value(tau)?;
        if m <= 0.0 {
            return Err(FlowError::HypothesisViolation { tau, m });
        }
        Ok(m.sqrt().atan())
    }

    /// Checks p′ < 0, p″ > 0 and m > 0 at τ.
    pub fn admissible_at(&self, tau: f64) -> Result<()> {
        self.sound_speed(tau)?;
        self.delta_bar(tau).map(|_| ())
    }

    /// Lower end of the window used for derivative sampling: `tau_min`, or
    /// 10⁻² when the law is valid down to 0.
    pub fn sample_floor(&self) -> f64 {
        if self.tau_min > 0.0 {
            self.tau_min
        } else {
            1e-2
        }
    }
}

fn vdw_admissible_from(law: &VdW) -> Option<f64> {
    let ok = |t: f64| {
        let dp = law.dp(t);
        let d2p = law.d2p(t);
        dp < 0.0 && d2p > 0.0 && (-1.0 - 4.0 * dp / (t * d2p)) > 0.0
    };
    // Geometric scan from 4 to 10^6; the admissible set must be a tail.
    let n = 4000;
    let lo = 4.0f64.ln();
    let hi = 1e6f64.ln();
    let grid: Vec<f64> = (0..=n).map(|k| (lo + (hi - lo) * k as f64 / n as f64).exp()).collect();
    let last_bad = grid.iter().rposition(|&t| !ok(t));
    match last_bad {
        None => Some(4.0),
        Some(k) if k == n => None,
        Some(k) => {
            let (mut a, mut b) = (grid[k], grid[k + 1]);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if ok(mid) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            Some(b)
        }
    }
}

/// Extrema and running variation functionals of δ̄ on [τ₀, τ_max].
#[derive(Debug, Clone, Serialize)]
pub struct DeltaBarProfile {
    pub tau_samples: Vec<f64>,
    pub delta_bar: Vec<f64>,
    /// τ₀ followed by the interior local extrema, increasing.
    pub extrema: Vec<f64>,
    pub psi: Vec<f64>,
    pub chi: Vec<f64>,
    pub delta_bar_star: f64,
    pub delta_bar_star_tail: f64,
    /// δ̄ evaluated at each entry of `extrema`.
    extrema_values: Vec<f64>,
    #[serde(skip)]
    eos: Option<EosModel>,
}

/// Below this value of |τ dδ̄/dτ| the derivative is treated as zero.
const FLAT_LOG_SLOPE: f64 = 1e-9;

fn delta_bar_slope(eos: &EosModel, tau: f64) -> Result<f64> {
    let hi = tau * (1.0 + 1e-5);
    let lo = (tau * (1.0 - 1e-5)).max(eos.tau_min + 0.5 * (tau - eos.tau_min));
    Ok((eos.delta_bar(hi)? - eos.delta_bar(lo)?) / (hi - lo))
}

fn slope_sign(eos: &EosModel, tau: f64) -> Result<i8> {
    let s = delta_bar_slope(eos, tau)?;
    Ok(if (s * tau).abs() <= FLAT_LOG_SLOPE {
        0
    } else if s > 0.0 {
        1
    } else {
        -1
    })
}

impl DeltaBarProfile {
    pub fn build(eos: &EosModel, tau0: f64, tau_max: f64, n_samples: usize) -> Result<Self> {
        if !(tau0 > eos.tau_min) {
            return Err(FlowError::Domain { tau: tau0, tau_min: eos.tau_min });
        }
        if !(tau_max > tau0) {
            return Err(FlowError::Parameter(format!("tau_max {tau_max} must exceed tau0 {tau0}")));
        }
        if n_samples < 16 {
            return Err(FlowError::Parameter("profile needs at least 16 samples".into()));
        }
        let (l0, l1) = (tau0.ln(), tau_max.ln());
        let tau_samples: Vec<f64> = (0..n_samples)
            .map(|k| {
                if k == 0 {
                    tau0
                } else if k + 1 == n_samples {
                    tau_max
                } else {
                    (l0 + (l1 - l0) * k as f64 / (n_samples - 1) as f64).exp()
                }
            })
            .collect();
        let delta_bar = tau_samples
            .iter()
            .map(|&t| eos.delta_bar(t))
            .collect::<Result<Vec<_>>>()?;

        let mut extrema = vec![tau0];
        let signs = tau_samples
            .iter()
            .map(|&t| slope_sign(eos, t))
            .collect::<Result<Vec<_>>>()?;
        let mut last_sign = signs[0];
        for k in 0..n_samples - 1 {
            let (a, b) = (tau_samples[k], tau_samples[k + 1]);
            // Sub-sampling guards against two sign changes hiding inside one interval.
            let mut changes = 0;
            let mut prev = signs[k];
            for s in 1..=4 {
                let t = a + (b - a) * s as f64 / 4.0;
                let sg = if s == 4 { signs[k + 1] } else { slope_sign(eos, t)? };
                if sg != 0 && prev != 0 && sg != prev {
                    changes += 1;
                }
                if sg != 0 {
                    prev = sg;
                }
            }
            if changes > 1 {
                return Err(FlowError::Resolution { tau: a });
            }
            let sb = signs[k + 1];
            if sb != 0 {
                if last_sign != 0 && sb != last_sign {
                    extrema.push(refine_extremum(eos, a, b, last_sign, tau0)?);
                }
                last_sign = sb;
            }
        }

        let extrema_values = extrema
            .iter()
            .map(|&t| eos.delta_bar(t))
            .collect::<Result<Vec<_>>>()?;
        let mut profile = Self {
            tau_samples,
            delta_bar,
            extrema,
            psi: Vec::new(),
            chi: Vec::new(),
            delta_bar_star: 0.0,
            delta_bar_star_tail: 0.0,
            extrema_values,
            eos: Some(eos.clone()),
        };
        let (psi, chi): (Vec<f64>, Vec<f64>) = profile
            .tau_samples
            .iter()
            .zip(&profile.delta_bar)
            .map(|(&t, &d)| profile.psi_chi_with(t, d))
            .unzip();
        profile.psi = psi;
        profile.chi = chi;

        let x0 = eos.delta_bar(tau_max / 4.0).unwrap_or(profile.delta_bar[0]);
        let x1 = eos.delta_bar(tau_max / 2.0).unwrap_or(profile.delta_bar[0]);
        let x2 = *profile.delta_bar.last().unwrap();
        let (d1, d2) = (x1 - x0, x2 - x1);
        let r = if d1 != 0.0 { d2 / d1 } else { 0.0 };
        profile.delta_bar_star = x2;
        profile.delta_bar_star_tail = if r > 0.0 && r < 1.0 { (d2 * r / (1.0 - r)).abs() } else { d2.abs() };
        Ok(profile)
    }

    pub fn tau0(&self) -> f64 {
        self.extrema[0]
    }

    pub fn delta_bar0(&self) -> f64 {
        self.extrema_values[0]
    }

    pub fn tau_max(&self) -> f64 {
        *self.tau_samples.last().unwrap()
    }

    /// Total variation of δ̄ on [τ₀, τ], exact given monotonicity between extrema.
    fn variation_to(&self, tau: f64, d_tau: f64) -> f64 {
        let mut tv = 0.0;
        let mut prev = self.extrema_values[0];
        for (&t, &v) in self.extrema.iter().zip(&self.extrema_values).skip(1) {
            if t >= tau {
                break;
            }
            tv += (v - prev).abs();
            prev = v;
        }
        tv + (d_tau - prev).abs()
    }

    fn psi_chi_with(&self, tau: f64, d_tau: f64) -> (f64, f64) {
        let base = d_tau - self.delta_bar0();
        let tv = self.variation_to(tau, d_tau);
        ((base + tv).max(0.0), (base - tv).min(0.0))
    }

    /// (ψ(τ), χ(τ)) at an arbitrary τ ≥ τ₀.
    pub fn psi_chi(&self, tau: f64) -> (f64, f64) {
        let tau = tau.max(self.tau0());
        let d = match &self.eos {
            Some(eos) => eos.delta_bar(tau).unwrap_or(self.delta_bar0()),
            None => self.delta_bar0(),
        };
        self.psi_chi_with(tau, d)
    }

    /// Sign of δ̄′ on the monotone piece containing τ: +1, −1 or 0 (flat).
    pub fn local_trend(&self, tau: f64) -> i8 {
        let k = self.extrema.iter().rposition(|&t| t <= tau).unwrap_or(0);
        let a = self.extrema[k];
        let b = self.extrema.get(k + 1).copied().unwrap_or(self.tau_max());
        let (Some(eos), true) = (&self.eos, b > a) else { return 0 };
        let (Ok(da), Ok(db)) = (eos.delta_bar(a), eos.delta_bar(b)) else { return 0 };
        let scale = 1e-12 * da.abs().max(1.0);
        if (db - da).abs() <= scale {
            0
        } else if db > da {
            1
        } else {
            -1
        }
    }

    /// True when δ̄ never decreases on [τ₀, τ_max].
    pub fn is_nondecreasing(&self) -> bool {
        self.delta_bar.windows(2).all(|w| w[1] >= w[0] - 1e-13)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.delta_bar.windows(2).all(|w| w[1] <= w[0] + 1e-13)
    }
}

fn refine_extremum(eos: &EosModel, mut a: f64, mut b: f64, sign_a: i8, tau0: f64) -> Result<f64> {
    while b - a > 1e-8 * tau0 {
        let mid = 0.5 * (a + b);
        let s = slope_sign(eos, mid)?;
        if s == sign_a || s == 0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Builds a δ̄ profile; thin wrapper over [`DeltaBarProfile::build`].
pub fn build_delta_bar_profile(
    eos: &EosModel,
    tau0: f64,
    tau_max: f64,
    n_samples: usize,
) -> Result<DeltaBarProfile> {
    DeltaBarProfile::build(eos, tau0, tau_max, n_samples)
}
