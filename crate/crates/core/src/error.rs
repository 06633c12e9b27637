use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("specific volume {tau} is at or below the validity bound {tau_min}")]
    Domain { tau: f64, tau_min: f64 },

    #[error("pressure law is not admissible at tau = {tau}: {what}")]
    Convexity { tau: f64, what: &'static str },

    #[error("kappa is singular at tau = {tau} (2p' + tau p'' = 0)")]
    KappaSingular { tau: f64 },

    #[error("m(tau) = {m} <= 0 at tau = {tau}")]
    HypothesisViolation { tau: f64, m: f64 },

    #[error("delta-bar profile under-resolved near tau = {tau}: more than one extremum between samples")]
    Resolution { tau: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("u_r - c is not strictly increasing near tau = {tau}")]
    Monotonicity { tau: f64 },

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    Range { what: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("inflow is not supersonic: u0 = {u0}, c0 = {c0}")]
    SubsonicInflow { u0: f64, c0: f64 },

    #[error("radicand of the PQ closed form is negative at tau = {tau}")]
    Radicand { tau: f64 },

    #[error("integration failed at {at}: {what}")]
    Integration { at: f64, what: String },

    #[error("pseudo-flow is not supersonic (q = {q}, c = {c})")]
    HyperbolicityLoss { q: f64, c: f64 },

    #[error("node iteration did not converge after {iters} iterations (last change {change:e})")]
    NoConvergence { iters: usize, change: f64 },

    #[error("potential mismatch between C+ and C- paths: {diff:e}")]
    PhiInconsistency { diff: f64 },

    #[error("characteristic directions nearly parallel (alpha - beta = {gap:e})")]
    NearParallel { gap: f64 },

    #[error("sign condition {which} violated at sample {index} (value {value:e})")]
    SignCondition { which: &'static str, index: usize, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("grid hull too thin: only {fit} probes fit per direction")]
    HullTooThin { fit: usize },

    #[error("pseudo-Bernoulli relation has no root (target {target:e} beyond table)")]
    BernoulliNoRoot { target: f64 },
}

pub type Result<T> = std::result::Result<T, FlowError>;
