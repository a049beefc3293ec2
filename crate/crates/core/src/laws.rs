//! Closed-form distributional laws: the Brownian and compound arctangent
//! CDF/PDF of the time to exceed the running maximum, envelope bounds for a
//! stochastic clock, the two-interval variant, arcsine laws, and the
//! finite-expectation criterion with a truncated-mean estimator.

use std::f64::consts::PI;

use thiserror::Error;

use crate::catalog::{DeterministicTimeChange, RealFn};
use crate::quad;

#[derive(Debug, Error)]
pub enum LawError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid time change: {0}")]
    InvalidTimeChange(String),
    #[error("density is singular at t = 0")]
    SingularAtZero,
    #[error("lower bound undefined for t <= t_bar = {t_bar}")]
    UndefinedBound { t_bar: f64 },
    #[error("degenerate comparison window: rho(r2) = rho(r1)")]
    DegenerateWindow,
    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

fn arctan_cdf(ratio: f64) -> f64 {
    2.0 / PI * ratio.sqrt().atan()
}

/// P(S_B(r) <= t) = (2/pi) arctan sqrt(t/r) for Brownian motion.
pub fn bm_cdf(t: f64, r: f64) -> Result<f64, LawError> {
    if r <= 0.0 {
        return Err(LawError::Domain(format!("r must be positive, got {r}")));
    }
    if t < 0.0 {
        return Err(LawError::Domain(format!("t must be nonnegative, got {t}")));
    }
    Ok(arctan_cdf(t / r))
}

/// Density sqrt(r) / (pi (r+t) sqrt(t)) of S_B(r).
pub fn bm_pdf(t: f64, r: f64) -> Result<f64, LawError> {
    if r <= 0.0 {
        return Err(LawError::Domain(format!("r must be positive, got {r}")));
    }
    if t == 0.0 {
        return Err(LawError::SingularAtZero);
    }
    if t < 0.0 {
        return Err(LawError::Domain(format!("t must be positive, got {t}")));
    }
    Ok(r.sqrt() / (PI * (r + t) * t.sqrt()))
}

/// The law of S(r) for a deterministic clock rho.
#[derive(Debug, Clone)]
pub struct CompoundArctanLaw {
    pub r: f64,
    pub timechange: DeterministicTimeChange,
}

impl CompoundArctanLaw {
    pub fn new(r: f64, timechange: DeterministicTimeChange) -> Result<Self, LawError> {
        if r <= 0.0 {
            return Err(LawError::Domain(format!("r must be positive, got {r}")));
        }
        if timechange.rho(r) <= 0.0 {
            return Err(LawError::InvalidTimeChange(format!("rho(r) must be positive at r = {r}")));
        }
        Ok(Self { r, timechange })
    }
}

/// P(S(r) <= t) = (2/pi) arctan sqrt((rho(t+r) - rho(r)) / rho(r)).
pub fn compound_cdf(t: f64, law: &CompoundArctanLaw) -> Result<f64, LawError> {
    if t < 0.0 {
        return Err(LawError::Domain(format!("t must be nonnegative, got {t}")));
    }
    let rr = law.timechange.rho(law.r);
    let rtr = law.timechange.rho(t + law.r);
    if rtr < rr {
        return Err(LawError::InvalidTimeChange(format!(
            "rho is not nondecreasing: rho({}) = {rtr} < rho({}) = {rr}",
            t + law.r,
            law.r
        )));
    }
    Ok(arctan_cdf((rtr - rr) / rr))
}

/// Density of the compound law:
/// rho'(t+r) sqrt(rho(r)) / (pi rho(t+r) sqrt(rho(t+r) - rho(r))).
pub fn compound_pdf(t: f64, law: &CompoundArctanLaw) -> Result<f64, LawError> {
    if t == 0.0 {
        return Err(LawError::SingularAtZero);
    }
    if t < 0.0 {
        return Err(LawError::Domain(format!("t must be positive, got {t}")));
    }
    let rr = law.timechange.rho(law.r);
    let rtr = law.timechange.rho(t + law.r);
    if rtr <= rr {
        return Err(LawError::InvalidTimeChange(format!(
            "rho({}) must exceed rho({})",
            t + law.r,
            law.r
        )));
    }
    Ok(law.timechange.rho_prime(t + law.r) * rr.sqrt() / (PI * rtr * (rtr - rr).sqrt()))
}

/// Envelope pair alpha <= rho <= beta around a stochastic clock, for a fixed
/// horizon r. `t_bar` is the smallest t with alpha(r+t) >= beta(r), possibly
/// infinite.
pub struct BoundPair {
    pub r: f64,
    alpha: RealFn,
    beta: RealFn,
    pub t_bar: f64,
}

impl BoundPair {
    pub fn new(r: f64, alpha: RealFn, beta: RealFn) -> Result<Self, LawError> {
        if r <= 0.0 {
            return Err(LawError::Domain(format!("r must be positive, got {r}")));
        }
        if alpha(r) <= 0.0 {
            return Err(LawError::Domain(format!("alpha(r) must be positive at r = {r}")));
        }
        let t_bar = t_bar(r, &*alpha, &*beta);
        Ok(Self { r, alpha, beta, t_bar })
    }

    pub fn alpha(&self, t: f64) -> f64 {
        (self.alpha)(t)
    }

    pub fn beta(&self, t: f64) -> f64 {
        (self.beta)(t)
    }
}

/// Probability value with a flag marking envelope inconsistency (beta(t+r)
/// fell below alpha(r), impossible for ordered increasing envelopes).
#[derive(Debug, Clone, Copy)]
pub struct FlaggedProbability {
    pub value: f64,
    pub inconsistent: bool,
}

/// Upper bound (2/pi) arctan sqrt((beta(t+r) - alpha(r)) / alpha(r)).
pub fn upper_bound_cdf(t: f64, bounds: &BoundPair) -> Result<FlaggedProbability, LawError> {
    if t < 0.0 {
        return Err(LawError::Domain(format!("t must be nonnegative, got {t}")));
    }
    let ar = bounds.alpha(bounds.r);
    let btr = bounds.beta(t + bounds.r);
    if btr < ar {
        return Ok(FlaggedProbability { value: 0.0, inconsistent: true });
    }
    Ok(FlaggedProbability { value: arctan_cdf((btr - ar) / ar), inconsistent: false })
}

/// Lower bound (2/pi) arctan sqrt((alpha(t+r) - beta(r)) / beta(r)),
/// valid only past `t_bar`.
pub fn lower_bound_cdf(t: f64, bounds: &BoundPair) -> Result<f64, LawError> {
    if t <= bounds.t_bar {
        return Err(LawError::UndefinedBound { t_bar: bounds.t_bar });
    }
    let br = bounds.beta(bounds.r);
    let atr = bounds.alpha(t + bounds.r);
    if atr < br {
        return Err(LawError::UndefinedBound { t_bar: bounds.t_bar });
    }
    Ok(arctan_cdf((atr - br) / br))
}

/// Smallest t >= 0 with alpha(r+t) >= beta(r), by bisection on a doubling
/// bracket; +∞ when alpha stays below beta(r).
pub fn t_bar(r: f64, alpha: &(dyn Fn(f64) -> f64 + Sync), beta: &(dyn Fn(f64) -> f64 + Sync)) -> f64 {
    let target = beta(r);
    if alpha(r) >= target {
        return 0.0;
    }
    let mut hi = 1.0f64;
    while alpha(r + hi) < target {
        hi *= 2.0;
        if hi > 1e18 {
            return f64::INFINITY;
        }
    }
    let mut lo = hi * 0.5;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if alpha(r + mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Law of the two-interval time S(r1, r2):
/// (2/pi) arctan sqrt((rho(t+r2) - rho(r2)) / (rho(r2) - rho(r1))).
pub fn two_interval_cdf(
    t: f64,
    r1: f64,
    r2: f64,
    timechange: &DeterministicTimeChange,
) -> Result<f64, LawError> {
    if t < 0.0 || r1 < 0.0 || r2 <= r1 {
        return Err(LawError::Domain(format!("need t >= 0 and 0 <= r1 < r2, got t={t}, r1={r1}, r2={r2}")));
    }
    let denom = timechange.rho(r2) - timechange.rho(r1);
    if denom <= 0.0 {
        return Err(LawError::DegenerateWindow);
    }
    Ok(arctan_cdf((timechange.rho(t + r2) - timechange.rho(r2)) / denom))
}

/// Compound arcsine law (2/pi) arcsin sqrt(rho(t)/rho(r)) for the first
/// instant the maximum over [0, r] is attained.
pub fn theta_arcsine_cdf(t: f64, r: f64, timechange: &DeterministicTimeChange) -> Result<f64, LawError> {
    if r <= 0.0 {
        return Err(LawError::Domain(format!("r must be positive, got {r}")));
    }
    if t < 0.0 || t > r {
        return Err(LawError::Domain(format!("t must lie in [0, r], got t={t}, r={r}")));
    }
    Ok(2.0 / PI * (timechange.rho(t) / timechange.rho(r)).sqrt().asin())
}

/// Occupation-time arcsine law (2/pi) arcsin sqrt(t/r); Brownian motion only.
pub fn occupation_arcsine_cdf(t: f64, r: f64) -> Result<f64, LawError> {
    if r <= 0.0 {
        return Err(LawError::Domain(format!("r must be positive, got {r}")));
    }
    if t < 0.0 || t > r {
        return Err(LawError::Domain(format!("t must lie in [0, r], got t={t}, r={r}")));
    }
    Ok(2.0 / PI * (t / r).sqrt().asin())
}

/// E(S(r)) is finite iff the clock's tail exponent gamma exceeds 2 (rho(t) ~
/// const * t^gamma).
pub fn expectation_finite(gamma: f64) -> Result<bool, LawError> {
    if gamma <= 0.0 {
        return Err(LawError::Domain(format!("gamma must be positive, got {gamma}")));
    }
    Ok(gamma > 2.0)
}

/// Truncated-mean estimate: the quadrature value of ∫_0^{t_cut} t f_S(t) dt
/// plus, when a tail exponent is declared with gamma > 2, the analytic tail
/// estimate for the mass beyond t_cut.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedMean {
    pub integral: f64,
    pub tail_bound: Option<f64>,
}

impl TruncatedMean {
    /// integral + tail, when the tail is available.
    pub fn corrected(&self) -> Option<f64> {
        self.tail_bound.map(|tail| self.integral + tail)
    }
}

pub fn truncated_mean(
    r: f64,
    timechange: &DeterministicTimeChange,
    t_cut: f64,
    tail_exponent: Option<f64>,
) -> Result<TruncatedMean, LawError> {
    if t_cut < 0.0 {
        return Err(LawError::Domain(format!("t_cut must be nonnegative, got {t_cut}")));
    }
    if t_cut == 0.0 {
        return Ok(TruncatedMean { integral: 0.0, tail_bound: None });
    }
    let law = CompoundArctanLaw::new(r, timechange.clone())?;
    let integrand = |t: f64| t * compound_pdf(t, &law).unwrap_or(f64::NAN);
    let integral = quad::integrate(integrand, 0.0, t_cut, 1e-9)
        .map_err(|e| LawError::Quadrature(e.to_string()))?;
    // For rho ~ c t^gamma the complementary CDF beyond T is approximately
    // (2/pi) sqrt(rho(r)/c) t^{-gamma/2}, which integrates to the tail term
    // below; meaningful only when the mean is finite (gamma > 2).
    let tail_bound = tail_exponent.and_then(|gamma| {
        if gamma <= 2.0 {
            return None;
        }
        let c = timechange.rho(t_cut) / t_cut.powf(gamma);
        let half = 0.5 * gamma;
        Some(2.0 / PI * (timechange.rho(r) / c).sqrt() * t_cut.powf(1.0 - half) * half / (half - 1.0))
    });
    Ok(TruncatedMean { integral, tail_bound })
}

/// Analytic complement of the compound CDF past `t_big`, used by the
/// normalization checks: 1 - cdf(T) expanded as (2/pi)(u^{-1/2} - u^{-3/2}/3)
/// with u = (rho(T+r) - rho(r))/rho(r).
pub fn compound_tail_mass(t_big: f64, law: &CompoundArctanLaw) -> f64 {
    let rr = law.timechange.rho(law.r);
    let u = (law.timechange.rho(t_big + law.r) - rr) / rr;
    2.0 / PI * (u.powf(-0.5) - u.powf(-1.5) / 3.0)
}
