//! Quadrature, root bracketing and explicit Runge-Kutta helpers.

use roots::{find_root_brent, SimpleConvergency};

use crate::error::{FlowError, Result};

/// ∫ₐᵇ f by double-exponential quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    quadrature::integrate(&f, a, b, abs_tol).integral
}

/// ∫ₐᵇ f over geometrically split pieces (a, b > 0).
pub fn integrate_log_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let pieces = ((hi / lo).ln() / 2f64.ln()).ceil().max(1.0) as usize;
    let ratio = (hi / lo).powf(1.0 / pieces as f64);
    let mut sum = 0.0;
    let mut x0 = lo;
    for k in 0..pieces {
        let x1 = if k + 1 == pieces { hi } else { x0 * ratio };
        sum += quadrature::integrate(&f, x0, x1, abs_tol / pieces as f64).integral;
        x0 = x1;
    }
    sign * sum
}

/// Brent root of f on a sign-changing bracket [a, b].
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    // Below a few ulps of the bracket the convergence test can never pass.
    let eps = tol.max(4.0 * f64::EPSILON * a.abs().max(b.abs()));
    let mut conv = SimpleConvergency { eps, max_iter: 400 };
    find_root_brent(a, b, &mut f, &mut conv).map_err(|e| FlowError::Integration {
        at: a,
        what: format!("root bracket [{a}, {b}]: {e:?}"),
    })
}

/// One classical RK4 step.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |y: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h))?;
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h))?;
    let k4 = f(t + h, &axpy(y, &k3, h))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrates y' = f(t, y) from t0 to t1 with step-doubling error control.
///
/// Returns the state at t1. `h0` is the first trial step.
pub fn rk4_adaptive<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    rtol: f64,
    atol: f64,
    h0: f64,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut h = h0.abs().min(span.abs()) * dir;
    let mut t = t0;
    let mut y = y0;
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let full = rk4_step(f, t, &y, h)?;
        let half = rk4_step(f, t, &y, 0.5 * h)?;
        let two = rk4_step(f, t + 0.5 * h, &half, 0.5 * h)?;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let scale = atol + rtol * two[i].abs().max(y[i].abs());
            err = err.max((two[i] - full[i]).abs() / 15.0 / scale);
        }
        if err <= 1.0 {
            t += h;
            // Richardson-corrected fifth-order update.
            for i in 0..N {
                y[i] = two[i] + (two[i] - full[i]) / 15.0;
            }
            let grow = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 4.0 };
            h *= grow.clamp(0.2, 4.0);
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.1);
        }
        steps += 1;
        if steps > 200_000 || h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(FlowError::Integration { at: t, what: "step size underflow".into() });
        }
    }
    Ok(y)
}

/// Log-ratio observed order between successive errors at refinement factor `r`.
pub fn observed_order(e_coarse: f64, e_fine: f64, r: f64) -> f64 {
    (e_coarse / e_fine).ln() / r.ln()
}
