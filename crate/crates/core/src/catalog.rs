//! Diffusion model definitions: drift/diffusion coefficients on an interval,
//! scale functions, conjugation maps to Brownian motion, time changes, and
//! the built-in catalog of worked examples.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::interp::MonotoneCubic;
use crate::quad::{self, QuadError};

/// Shared real-valued function of one real variable.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn real_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RealFn {
    Arc::new(f)
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("invalid interval: lo = {lo} must be strictly below hi = {hi}")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("integral diverges at endpoint {endpoint}; shift the basepoint away from the singular boundary")]
    Divergent { endpoint: f64 },
    #[error("diffusion coefficient vanishes at x = {x} inside the requested range")]
    Singularity { x: f64 },
    #[error("scale derivative w'(x) <= 0 at x = {x}")]
    NonIncreasingScale { x: f64 },
    #[error("state {x} lies outside the interval [{lo}, {hi}]")]
    OutsideInterval { x: f64, lo: f64, hi: f64 },
    #[error("basepoint {x0} lies outside the tabulation window [{lo}, {hi}]")]
    BasepointOutsideWindow { x0: f64, lo: f64, hi: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

impl From<QuadError> for CatalogError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::Divergent { endpoint } => CatalogError::Divergent { endpoint },
            QuadError::NonFinite { x } => CatalogError::Singularity { x },
            other => CatalogError::Quadrature(other.to_string()),
        }
    }
}

/// What happens to the state at an interval endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Project the state back to the endpoint; coefficients are evaluated at
    /// the clamped state (the "∨ 0" convention).
    Clamp,
    /// The state freezes once the endpoint is reached.
    Absorb,
    /// The endpoint is never attained; no projection is applied.
    Unreachable,
}

#[derive(Debug, Clone, Copy)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_policy: BoundaryPolicy,
    pub hi_policy: BoundaryPolicy,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_policy: BoundaryPolicy, hi_policy: BoundaryPolicy) -> Result<Self, CatalogError> {
        if !(lo < hi) {
            return Err(CatalogError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi, lo_policy, hi_policy })
    }

    pub fn whole_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            lo_policy: BoundaryPolicy::Unreachable,
            hi_policy: BoundaryPolicy::Unreachable,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// State used for coefficient evaluation: clamped endpoints pull the
    /// argument back inside, other policies leave it untouched.
    pub fn eval_state(&self, x: f64) -> f64 {
        let mut y = x;
        if self.lo_policy == BoundaryPolicy::Clamp && y < self.lo {
            y = self.lo;
        }
        if self.hi_policy == BoundaryPolicy::Clamp && y > self.hi {
            y = self.hi;
        }
        y
    }
}

/// Initial-state sampler.
#[derive(Debug, Clone, Copy)]
pub enum Eta {
    Point(f64),
    Uniform { lo: f64, hi: f64 },
}

/// A one-dimensional time-homogeneous diffusion dX = mu(X) dt + sigma(X) dB
/// on an interval.
#[derive(Clone)]
pub struct DiffusionSpec {
    pub name: String,
    mu: RealFn,
    sigma: RealFn,
    pub interval: Interval,
    pub eta: Eta,
}

impl DiffusionSpec {
    pub fn new(name: impl Into<String>, mu: RealFn, sigma: RealFn, interval: Interval, eta: Eta) -> Self {
        Self { name: name.into(), mu, sigma, interval, eta }
    }

    /// Drift, evaluated at the clamp-projected state.
    pub fn mu(&self, x: f64) -> f64 {
        (self.mu)(self.interval.eval_state(x))
    }

    /// Diffusion coefficient, evaluated at the clamp-projected state.
    pub fn sigma(&self, x: f64) -> f64 {
        (self.sigma)(self.interval.eval_state(x))
    }

    /// Raw diffusion coefficient closure, without clamping.
    pub fn sigma_fn(&self) -> RealFn {
        self.sigma.clone()
    }
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec")
            .field("name", &self.name)
            .field("interval", &self.interval)
            .field("eta", &self.eta)
            .finish()
    }
}

enum ScaleRepr {
    Closed { w: RealFn, wp: RealFn, wpp: RealFn, winv: RealFn },
    Tabulated { w: MonotoneCubic, wp: MonotoneCubic, wpp: MonotoneCubic, tol: f64 },
}

/// Increasing harmonic map w with w(x0) = 0, w'(x0) = 1, together with its
/// first two derivatives and inverse.
pub struct ScaleFunction {
    pub basepoint: f64,
    repr: Arc<ScaleRepr>,
}

impl Clone for ScaleFunction {
    fn clone(&self) -> Self {
        Self { basepoint: self.basepoint, repr: self.repr.clone() }
    }
}

impl ScaleFunction {
    /// Register a closed-form scale function. The second derivative may be
    /// supplied; otherwise it falls back to a central difference of `wp`.
    pub fn closed(basepoint: f64, w: RealFn, wp: RealFn, wpp: Option<RealFn>, winv: RealFn) -> Self {
        let wpp = wpp.unwrap_or_else(|| {
            let wp = wp.clone();
            real_fn(move |x| {
                let h = central_step(x);
                (wp(x + h) - wp(x - h)) / (2.0 * h)
            })
        });
        Self { basepoint, repr: Arc::new(ScaleRepr::Closed { w, wp, wpp, winv }) }
    }

    pub fn identity(basepoint: f64) -> Self {
        Self::closed(
            basepoint,
            real_fn(move |x| x - basepoint),
            real_fn(|_| 1.0),
            Some(real_fn(|_| 0.0)),
            real_fn(move |y| y + basepoint),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &*self.repr {
            ScaleRepr::Closed { w, .. } => w(x),
            ScaleRepr::Tabulated { w, .. } => w.eval(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match &*self.repr {
            ScaleRepr::Closed { wp, .. } => wp(x),
            ScaleRepr::Tabulated { wp, .. } => wp.eval(x),
        }
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        match &*self.repr {
            ScaleRepr::Closed { wpp, .. } => wpp(x),
            ScaleRepr::Tabulated { wpp, .. } => wpp.eval(x),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match &*self.repr {
            ScaleRepr::Closed { winv, .. } => winv(y),
            ScaleRepr::Tabulated { w, tol, .. } => w.inverse(y, *tol),
        }
    }

    /// Tabulated x-range, if any; closed forms report an unbounded range.
    pub fn range(&self) -> (f64, f64) {
        match &*self.repr {
            ScaleRepr::Closed { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ScaleRepr::Tabulated { w, .. } => (w.x_min(), w.x_max()),
        }
    }
}

impl fmt::Debug for ScaleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &*self.repr {
            ScaleRepr::Closed { .. } => "closed",
            ScaleRepr::Tabulated { .. } => "tabulated",
        };
        write!(f, "ScaleFunction {{ basepoint: {}, repr: {kind} }}", self.basepoint)
    }
}

fn central_step(x: f64) -> f64 {
    // A relative step keeps x - h on the same side of 0 as x, which matters
    // for derivatives with a pole at 0 (e.g. w'(x) = 1/x evaluated along a
    // path that has decayed to ~1e-7).
    if x == 0.0 {
        1e-6
    } else {
        1e-6 * x.abs()
    }
}

/// Number of tabulation nodes for numerically constructed maps.
pub const TABLE_SIZE: usize = 4096;

/// Default absolute quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Solve Lw = 0 with w(x0) = 0, w'(x0) = 1 on the window `[window.0, window.1]`
/// by tabulating w(x) = ∫_{x0}^{x} exp(-∫_{x0}^{t} 2 mu / sigma^2) dt.
pub fn scale_function(
    spec: &DiffusionSpec,
    x0: f64,
    window: (f64, f64),
    tol: f64,
) -> Result<ScaleFunction, CatalogError> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(CatalogError::InvalidInterval { lo, hi });
    }
    if x0 < lo || x0 > hi {
        return Err(CatalogError::BasepointOutsideWindow { x0, lo, hi });
    }
    // Node set: uniform grid with x0 spliced in.
    let mut xs: Vec<f64> = (0..TABLE_SIZE)
        .map(|i| lo + (hi - lo) * i as f64 / (TABLE_SIZE - 1) as f64)
        .collect();
    if !xs.iter().any(|&x| x == x0) {
        xs.push(x0);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    for &x in &xs {
        if x > lo && x < hi && (spec.sigma)(x) == 0.0 {
            return Err(CatalogError::Singularity { x });
        }
    }
    let i0 = xs.iter().position(|&x| x == x0).unwrap();
    let q = |z: f64| 2.0 * spec.mu(z) / spec.sigma(z).powi(2);
    let panel_tol = tol / xs.len() as f64;

    // Cumulative inner integral ∫_{x0}^{x} q, node by node in both directions.
    let n = xs.len();
    let mut inner = vec![0.0f64; n];
    for i in i0 + 1..n {
        inner[i] = inner[i - 1] + quad::integrate(q, xs[i - 1], xs[i], panel_tol)?;
    }
    for i in (0..i0).rev() {
        inner[i] = inner[i + 1] - quad::integrate(q, xs[i], xs[i + 1], panel_tol)?;
    }
    let wp_vals: Vec<f64> = inner.iter().map(|&v| (-v).exp()).collect();
    for (i, &v) in wp_vals.iter().enumerate() {
        if !v.is_finite() || v <= 0.0 {
            return Err(CatalogError::NonIncreasingScale { x: xs[i] });
        }
    }

    // Outer cumulative integral of exp(-inner(t)); inside a panel the inner
    // integral is re-anchored at the nearest node below.
    let mut w_vals = vec![0.0f64; n];
    for i in i0 + 1..n {
        let (a, base) = (xs[i - 1], inner[i - 1]);
        let g = |t: f64| (-(base + quad::integrate(q, a, t, panel_tol * 0.1).unwrap_or(f64::NAN))).exp();
        w_vals[i] = w_vals[i - 1] + quad::integrate(g, a, xs[i], panel_tol)?;
    }
    for i in (0..i0).rev() {
        let (a, base) = (xs[i], inner[i]);
        let g = |t: f64| (-(base + quad::integrate(q, a, t, panel_tol * 0.1).unwrap_or(f64::NAN))).exp();
        w_vals[i] = w_vals[i + 1] - quad::integrate(g, a, xs[i + 1], panel_tol)?;
    }

    let wpp_vals: Vec<f64> = xs.iter().zip(&wp_vals).map(|(&x, &wp)| -q(x) * wp).collect();
    let w = MonotoneCubic::new(xs.clone(), w_vals);
    let wp = MonotoneCubic::new(xs.clone(), wp_vals);
    let wpp = MonotoneCubic::new(xs, wpp_vals);
    Ok(ScaleFunction {
        basepoint: x0,
        repr: Arc::new(ScaleRepr::Tabulated { w, wp, wpp, tol: tol.max(1e-14) }),
    })
}

enum MapRepr {
    Closed { v: RealFn, v_inv: RealFn, v_prime: RealFn },
    Tabulated { v: MonotoneCubic, sigma: RealFn, tol: f64 },
}

/// Increasing map v(x) = ∫ 1/sigma with v(basepoint) = 0; conjugates the
/// diffusion dX = (sigma sigma'/2) dt + sigma dB to Brownian motion.
pub struct ConjugationMap {
    pub basepoint: f64,
    repr: Arc<MapRepr>,
    pub formula: Option<String>,
}

impl Clone for ConjugationMap {
    fn clone(&self) -> Self {
        Self { basepoint: self.basepoint, repr: self.repr.clone(), formula: self.formula.clone() }
    }
}

impl ConjugationMap {
    pub fn closed(basepoint: f64, v: RealFn, v_inv: RealFn, v_prime: RealFn, formula: impl Into<String>) -> Self {
        Self { basepoint, repr: Arc::new(MapRepr::Closed { v, v_inv, v_prime }), formula: Some(formula.into()) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &*self.repr {
            MapRepr::Closed { v, .. } => v(x),
            MapRepr::Tabulated { v, .. } => v.eval(x),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match &*self.repr {
            MapRepr::Closed { v_inv, .. } => v_inv(y),
            MapRepr::Tabulated { v, tol, .. } => v.inverse(y, *tol),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match &*self.repr {
            MapRepr::Closed { v_prime, .. } => v_prime(x),
            MapRepr::Tabulated { sigma, .. } => 1.0 / sigma(x),
        }
    }

    /// View this map as a (non-normalized) scale function, for quadratic
    /// variation accumulation along paths.
    pub fn as_scale(&self) -> ScaleFunction {
        match &*self.repr {
            MapRepr::Closed { v, v_inv, v_prime } => ScaleFunction::closed(
                self.basepoint,
                v.clone(),
                v_prime.clone(),
                None,
                v_inv.clone(),
            ),
            MapRepr::Tabulated { v, sigma, tol } => {
                let sigma = sigma.clone();
                let table = v.clone();
                let tol = *tol;
                let t2 = table.clone();
                ScaleFunction {
                    basepoint: self.basepoint,
                    repr: Arc::new(ScaleRepr::Closed {
                        w: real_fn(move |x| table.eval(x)),
                        wp: real_fn(move |x| 1.0 / sigma(x)),
                        wpp: {
                            let s = self.clone();
                            real_fn(move |x| {
                                let h = central_step(x);
                                (s.deriv(x + h) - s.deriv(x - h)) / (2.0 * h)
                            })
                        },
                        winv: real_fn(move |y| t2.inverse(y, tol)),
                    }),
                }
            }
        }
    }
}

impl fmt::Debug for ConjugationMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConjugationMap {{ basepoint: {}, formula: {:?} }}", self.basepoint, self.formula)
    }
}

/// Tabulate v(x) = ∫_{x0}^{x} 1/sigma over `window`, tolerating an integrable
/// singularity of 1/sigma at the basepoint or window endpoints.
pub fn conjugation_map(
    sigma: RealFn,
    x0: f64,
    window: (f64, f64),
    tol: f64,
) -> Result<ConjugationMap, CatalogError> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(CatalogError::InvalidInterval { lo, hi });
    }
    if x0 < lo || x0 > hi {
        return Err(CatalogError::BasepointOutsideWindow { x0, lo, hi });
    }
    let mut xs: Vec<f64> = (0..TABLE_SIZE)
        .map(|i| lo + (hi - lo) * i as f64 / (TABLE_SIZE - 1) as f64)
        .collect();
    if !xs.iter().any(|&x| x == x0) {
        xs.push(x0);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let i0 = xs.iter().position(|&x| x == x0).unwrap();
    let integrand = {
        let sigma = sigma.clone();
        move |z: f64| 1.0 / sigma(z)
    };
    let panel_tol = tol / xs.len() as f64;
    let n = xs.len();
    let mut vals = vec![0.0f64; n];
    for i in i0 + 1..n {
        vals[i] = vals[i - 1] + quad::integrate(&integrand, xs[i - 1], xs[i], panel_tol)?;
    }
    for i in (0..i0).rev() {
        vals[i] = vals[i + 1] - quad::integrate(&integrand, xs[i], xs[i + 1], panel_tol)?;
    }
    let table = MonotoneCubic::new(xs, vals);
    Ok(ConjugationMap {
        basepoint: x0,
        repr: Arc::new(MapRepr::Tabulated { v: table, sigma, tol: tol.max(1e-14) }),
        formula: None,
    })
}

/// Outcome of checking a spec against a candidate conjugation map.
#[derive(Debug, Clone)]
pub struct ConjugationReport {
    /// max |mu(x) - s(x) s'(x)/2| over the grid, where s = 1/v' is the
    /// diffusion coefficient the map implies.
    pub max_drift_deviation: f64,
    /// Mean of v'(x) sigma(x) over the grid.
    pub product_mean: f64,
    /// max |v'(x) sigma(x) - mean| over the grid.
    pub max_product_spread: f64,
    pub pass: bool,
}

/// Check that the spec's drift matches s s'/2 for the map-implied diffusion
/// coefficient s = 1/v' (s' by central difference), and that v' sigma is
/// constant across `grid`; the constancy is what forces a linear time change.
pub fn verify_conjugation(
    spec: &DiffusionSpec,
    map: &ConjugationMap,
    grid: &[f64],
    tol: f64,
) -> Result<ConjugationReport, CatalogError> {
    assert!(!grid.is_empty());
    let implied_sigma = |x: f64| 1.0 / map.deriv(x);
    let mut max_drift_dev = 0.0f64;
    let mut products = Vec::with_capacity(grid.len());
    for &x in grid {
        if !spec.interval.contains(x) {
            return Err(CatalogError::OutsideInterval { x, lo: spec.interval.lo, hi: spec.interval.hi });
        }
        let h = central_step(x);
        let sigma_prime = (implied_sigma(x + h) - implied_sigma(x - h)) / (2.0 * h);
        let dev = (spec.mu(x) - 0.5 * implied_sigma(x) * sigma_prime).abs();
        max_drift_dev = max_drift_dev.max(dev);
        products.push(map.deriv(x) * spec.sigma(x));
    }
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    let spread = products.iter().map(|p| (p - mean).abs()).fold(0.0f64, f64::max);
    Ok(ConjugationReport {
        max_drift_deviation: max_drift_dev,
        product_mean: mean,
        max_product_spread: spread,
        pass: max_drift_dev <= tol && spread <= tol,
    })
}

/// Deterministic clock: increasing rho with rho(0) = 0.
#[derive(Clone)]
pub struct DeterministicTimeChange {
    rho: RealFn,
    rho_prime: RealFn,
    rho_inv: Option<RealFn>,
    /// Declared (unchecked) property rho(t) -> ∞ as t -> ∞, required by the
    /// time-changed Brownian representation.
    pub unbounded: bool,
    pub formula: String,
}

impl DeterministicTimeChange {
    pub fn new(rho: RealFn, rho_prime: RealFn, rho_inv: Option<RealFn>, formula: impl Into<String>) -> Self {
        Self { rho, rho_prime, rho_inv, unbounded: true, formula: formula.into() }
    }

    pub fn identity() -> Self {
        Self::new(real_fn(|t| t), real_fn(|_| 1.0), Some(real_fn(|s| s)), "t")
    }

    /// rho(t) = c t.
    pub fn linear(c: f64) -> Self {
        Self::new(
            real_fn(move |t| c * t),
            real_fn(move |_| c),
            Some(real_fn(move |s| s / c)),
            format!("{c}*t"),
        )
    }

    /// rho(t) = t^3/3, the clock of integrated Brownian motion.
    pub fn cubic() -> Self {
        Self::new(
            real_fn(|t| t * t * t / 3.0),
            real_fn(|t| t * t),
            Some(real_fn(|s| (3.0 * s).cbrt())),
            "t^3/3",
        )
    }

    pub fn rho(&self, t: f64) -> f64 {
        (self.rho)(t)
    }

    pub fn rho_prime(&self, t: f64) -> f64 {
        (self.rho_prime)(t)
    }

    /// Inverse clock; falls back to bisection with a doubling bracket when no
    /// closed form was registered.
    pub fn rho_inv(&self, s: f64) -> f64 {
        if let Some(inv) = &self.rho_inv {
            return inv(s);
        }
        let mut hi = 1.0f64;
        while self.rho(hi) < s && hi < 1e300 {
            hi *= 2.0;
        }
        let mut lo = 0.0f64;
        while hi - lo > 1e-10 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.rho(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl fmt::Debug for DeterministicTimeChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DeterministicTimeChange({})", self.formula)
    }
}

/// Stochastic clock known only through deterministic envelopes
/// alpha(t) <= rho(t) <= beta(t).
#[derive(Clone)]
pub struct StochasticEnvelopes {
    alpha: RealFn,
    beta: RealFn,
    pub formula: String,
}

impl StochasticEnvelopes {
    pub fn new(alpha: RealFn, beta: RealFn, formula: impl Into<String>) -> Self {
        Self { alpha, beta, formula: formula.into() }
    }

    pub fn alpha(&self, t: f64) -> f64 {
        (self.alpha)(t)
    }

    pub fn beta(&self, t: f64) -> f64 {
        (self.beta)(t)
    }

    pub fn alpha_fn(&self) -> RealFn {
        self.alpha.clone()
    }

    pub fn beta_fn(&self) -> RealFn {
        self.beta.clone()
    }
}

impl fmt::Debug for StochasticEnvelopes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StochasticEnvelopes({})", self.formula)
    }
}

#[derive(Debug, Clone)]
pub enum TimeChange {
    Deterministic(DeterministicTimeChange),
    Stochastic(StochasticEnvelopes),
}

impl TimeChange {
    pub fn deterministic(&self) -> Option<&DeterministicTimeChange> {
        match self {
            TimeChange::Deterministic(tc) => Some(tc),
            TimeChange::Stochastic(_) => None,
        }
    }

    pub fn formula(&self) -> &str {
        match self {
            TimeChange::Deterministic(tc) => &tc.formula,
            TimeChange::Stochastic(env) => &env.formula,
        }
    }
}

/// Coefficient pair of the time-changed SDE
/// dX = -rho'(t) w''(X) / (2 w'(X)^3) dt + sqrt(rho'(t)) / w'(X) dB.
pub struct TimeChangedCoefficients {
    w: ScaleFunction,
    rho_prime: RealFn,
}

impl TimeChangedCoefficients {
    pub fn drift(&self, x: f64, t: f64) -> Result<f64, CatalogError> {
        let wp = self.w.deriv(x);
        if wp <= 0.0 {
            return Err(CatalogError::NonIncreasingScale { x });
        }
        Ok(-(self.rho_prime)(t) * self.w.second_deriv(x) / (2.0 * wp.powi(3)))
    }

    pub fn diffusion(&self, x: f64, t: f64) -> Result<f64, CatalogError> {
        let wp = self.w.deriv(x);
        if wp <= 0.0 {
            return Err(CatalogError::NonIncreasingScale { x });
        }
        Ok((self.rho_prime)(t).sqrt() / wp)
    }
}

pub fn timechanged_coefficients(w: &ScaleFunction, rho_prime: RealFn) -> TimeChangedCoefficients {
    TimeChangedCoefficients { w: w.clone(), rho_prime }
}

/// How paths of an entry are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    /// Ordinary SDE; Euler applies, plus exact schemes where registered.
    Diffusion,
    /// Integrated Brownian motion; only its joint-Gaussian exact scheme applies.
    IntegratedBm,
}

/// One catalog model: coefficients, optional conjugation map, the scale used
/// for quadratic-variation accumulation, and the associated clock.
#[derive(Clone)]
pub struct CatalogEntry {
    pub spec: DiffusionSpec,
    pub conjugation: Option<ConjugationMap>,
    pub scale: Option<ScaleFunction>,
    pub timechange: TimeChange,
    pub kind: ProcessKind,
    /// Tail exponent gamma when rho(t) ~ const * t^gamma as t -> ∞.
    pub tail_exponent: Option<f64>,
    pub mu_formula: &'static str,
    pub sigma_formula: &'static str,
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    /// Scale used for path-wise quadratic variation; for conjugated entries
    /// this is the conjugation map itself.
    pub fn rho_scale(&self) -> Option<ScaleFunction> {
        if let Some(s) = &self.scale {
            return Some(s.clone());
        }
        self.conjugation.as_ref().map(|m| m.as_scale())
    }

    /// Structured text description for experiment manifests and the catalog
    /// listing.
    pub fn describe(&self) -> String {
        let interval = format!(
            "[{}, {}] ({:?}/{:?})",
            self.spec.interval.lo, self.spec.interval.hi, self.spec.interval.lo_policy, self.spec.interval.hi_policy
        );
        let map = self
            .conjugation
            .as_ref()
            .and_then(|m| m.formula.clone())
            .unwrap_or_else(|| "-".to_string());
        let (kind, rho) = match &self.timechange {
            TimeChange::Deterministic(tc) => ("deterministic", tc.formula.clone()),
            TimeChange::Stochastic(env) => ("stochastic", env.formula.clone()),
        };
        format!(
            "name={} mu={} sigma={} interval={} eta={:?} map={} timechange={} rho={}",
            self.name(), self.mu_formula, self.sigma_formula, interval, self.spec.eta, map, kind, rho
        )
    }
}

/// The worked examples: Brownian motion, the diffusions conjugated to it,
/// integrated Brownian motion, and a bounded-volatility model whose clock is
/// stochastic but sandwiched by linear envelopes.
pub fn builtin_catalog() -> Vec<CatalogEntry> {
    let mut entries = Vec::new();

    entries.push(CatalogEntry {
        spec: DiffusionSpec::new(
            "bm",
            real_fn(|_| 0.0),
            real_fn(|_| 1.0),
            Interval::whole_line(),
            Eta::Point(0.0),
        ),
        conjugation: Some(ConjugationMap::closed(
            0.0,
            real_fn(|x| x),
            real_fn(|y| y),
            real_fn(|_| 1.0),
            "x",
        )),
        scale: Some(ScaleFunction::identity(0.0)),
        timechange: TimeChange::Deterministic(DeterministicTimeChange::identity()),
        kind: ProcessKind::Diffusion,
        tail_exponent: Some(1.0),
        mu_formula: "0",
        sigma_formula: "1",
    });

    entries.push(CatalogEntry {
        spec: DiffusionSpec::new(
            "cube",
            real_fn(|x| x.cbrt() / 3.0),
            real_fn(|x| x.cbrt().powi(2)),
            Interval::whole_line(),
            Eta::Point(1.0),
        ),
        conjugation: Some(ConjugationMap::closed(
            0.0,
            real_fn(|x| 3.0 * x.cbrt()),
            real_fn(|y| (y / 3.0).powi(3)),
            real_fn(|x| 1.0 / x.cbrt().powi(2)),
            "3*x^(1/3)",
        )),
        scale: None,
        timechange: TimeChange::Deterministic(DeterministicTimeChange::linear(1.0)),
        kind: ProcessKind::Diffusion,
        tail_exponent: Some(1.0),
        mu_formula: "x^(1/3)/3",
        sigma_formula: "x^(2/3)",
    });

    entries.push(CatalogEntry {
        spec: DiffusionSpec::new(
            "feller",
            real_fn(|_| 0.25),
            real_fn(|x| x.max(0.0).sqrt()),
            Interval::new(0.0, f64::INFINITY, BoundaryPolicy::Clamp, BoundaryPolicy::Unreachable).unwrap(),
            Eta::Point(1.0),
        ),
        conjugation: Some(ConjugationMap::closed(
            0.0,
            real_fn(|x| 2.0 * x.sqrt()),
            // Strictly increasing extension of the inverse below y = 0;
            // extracted path functionals depend only on the path ordering,
            // which any increasing extension preserves.
            real_fn(|y| 0.25 * y * y.abs()),
            real_fn(|x| 1.0 / x.sqrt()),
            "2*sqrt(x)",
        )),
        scale: None,
        timechange: TimeChange::Deterministic(DeterministicTimeChange::linear(1.0)),
        kind: ProcessKind::Diffusion,
        tail_exponent: Some(1.0),
        mu_formula: "1/4",
        sigma_formula: "sqrt(max(x,0))",
    });

    entries.push(CatalogEntry {
        spec: DiffusionSpec::new(
            "wright_fisher",
            real_fn(|x| 0.25 - 0.5 * x),
            real_fn(|x| (x * (1.0 - x)).max(0.0).sqrt()),
            Interval::new(0.0, 1.0, BoundaryPolicy::Clamp, BoundaryPolicy::Clamp).unwrap(),
            Eta::Point(0.5),
        ),
        conjugation: Some(ConjugationMap::closed(
            0.0,
            real_fn(|x| 2.0 * x.sqrt().asin()),
            // Strictly increasing extension of the inverse outside [0, pi];
            // extracted path functionals depend only on the path ordering,
            // which any increasing extension preserves.
            real_fn(|y| {
                if y < 0.0 {
                    0.25 * y
                } else if y > std::f64::consts::PI {
                    1.0 + 0.25 * (y - std::f64::consts::PI)
                } else {
                    (0.5 * y).sin().powi(2)
                }
            }),
            real_fn(|x| 1.0 / (x * (1.0 - x)).sqrt()),
            "2*arcsin(sqrt(x))",
        )),
        scale: None,
        timechange: TimeChange::Deterministic(DeterministicTimeChange::linear(1.0)),
        kind: ProcessKind::Diffusion,
        tail_exponent: Some(1.0),
        mu_formula: "1/4 - x/2",
        sigma_formula: "sqrt(max(x(1-x),0))",
    });

    entries.push(CatalogEntry {
        spec: DiffusionSpec::new(
            "gbm",
            real_fn(|x| 0.5 * x),
            real_fn(|x| x),
            Interval::new(0.0, f64::INFINITY, BoundaryPolicy::Unreachable, BoundaryPolicy::Unreachable).unwrap(),
            Eta::Point(1.0),
        ),
        // The basepoint sits at 1: the integral of 1/sigma from 0 diverges.
        conjugation: Some(ConjugationMap::closed(
            1.0,
            real_fn(|x| x.ln()),
            real_fn(|y| y.exp()),
            real_fn(|x| 1.0 / x),
            "ln(x)",
        )),
        scale: None,
        timechange: TimeChange::Deterministic(DeterministicTimeChange::linear(1.0)),
        kind: ProcessKind::Diffusion,
        tail_exponent: Some(1.0),
        mu_formula: "x/2",
        sigma_formula: "x",
    });

    entries.push(CatalogEntry {
        spec: DiffusionSpec::new(
            "integrated_bm",
            real_fn(|_| 0.0),
            real_fn(|_| 0.0),
            Interval::whole_line(),
            Eta::Point(0.0),
        ),
        conjugation: None,
        scale: None,
        timechange: TimeChange::Deterministic(DeterministicTimeChange::cubic()),
        kind: ProcessKind::IntegratedBm,
        tail_exponent: Some(3.0),
        mu_formula: "n/a (integral of BM)",
        sigma_formula: "n/a (integral of BM)",
    });

    entries.push(CatalogEntry {
        spec: DiffusionSpec::new(
            "bounded_sigma",
            real_fn(|_| 0.0),
            real_fn(|x| 1.0 + 0.5 * x.sin()),
            Interval::whole_line(),
            Eta::Point(0.0),
        ),
        conjugation: None,
        scale: Some(ScaleFunction::identity(0.0)),
        timechange: TimeChange::Stochastic(StochasticEnvelopes::new(
            real_fn(|t| 0.25 * t),
            real_fn(|t| 2.25 * t),
            "t/4 <= rho <= 9t/4",
        )),
        kind: ProcessKind::Diffusion,
        tail_exponent: None,
        mu_formula: "0",
        sigma_formula: "1 + sin(x)/2",
    });

    entries
}

pub fn catalog_entry(name: &str) -> Option<CatalogEntry> {
    builtin_catalog().into_iter().find(|e| e.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_function_of_driftless_unit_diffusion_is_identity() {
        let spec = DiffusionSpec::new(
            "plain",
            real_fn(|_| 0.0),
            real_fn(|_| 1.0),
            Interval::whole_line(),
            Eta::Point(0.0),
        );
        let w = scale_function(&spec, 0.0, (-2.0, 2.0), 1e-10).unwrap();
        for i in 0..40 {
            let x = -1.9 + i as f64 * 0.1;
            assert!((w.eval(x) - x).abs() < 1e-8, "w({x}) = {}", w.eval(x));
            assert!((w.deriv(x) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn scale_function_of_gbm_is_log() {
        // mu = x/2, sigma = x, basepoint 1: the inner integral is ln t, so
        // the integrand is 1/t and w(x) = ln x.
        let entry = catalog_entry("gbm").unwrap();
        let w = scale_function(&entry.spec, 1.0, (0.2, 5.0), 1e-10).unwrap();
        for i in 1..40 {
            let x = 0.25 + i as f64 * 0.1;
            assert!((w.eval(x) - x.ln()).abs() < 1e-6, "w({x}) = {}", w.eval(x));
        }
    }

    #[test]
    fn scale_function_ou_matches_brute_force_quadrature() {
        // mu = -x, sigma = sqrt(2): w(1) = ∫_0^1 e^{t^2/2} dt. The oracle is
        // a midpoint rule at one million panels, independent of the adaptive
        // quadrature path.
        let spec = DiffusionSpec::new(
            "ou",
            real_fn(|x| -x),
            real_fn(|_| 2f64.sqrt()),
            Interval::whole_line(),
            Eta::Point(0.0),
        );
        let n = 1_000_000;
        let oracle: f64 = (0..n)
            .map(|i| (((i as f64 + 0.5) / n as f64).powi(2) / 2.0).exp())
            .sum::<f64>()
            / n as f64;
        let w = scale_function(&spec, 0.0, (-1.5, 1.5), 1e-12).unwrap();
        assert!((w.eval(1.0) - oracle).abs() < 1e-8, "w(1) = {}, oracle {}", w.eval(1.0), oracle);
        assert!((w.deriv(0.0) - 1.0).abs() < 1e-10);
        assert!(w.eval(0.0).abs() < 1e-12);
    }

    #[test]
    fn scale_function_ode_residual_small() {
        let spec = DiffusionSpec::new(
            "ou",
            real_fn(|x| -x),
            real_fn(|_| 2f64.sqrt()),
            Interval::whole_line(),
            Eta::Point(0.0),
        );
        let tol = 1e-10;
        let w = scale_function(&spec, 0.0, (-1.5, 1.5), tol).unwrap();
        for i in 0..60 {
            let x = -1.4 + i as f64 * 0.047;
            let residual = 0.5 * 2.0 * w.second_deriv(x) + (-x) * w.deriv(x);
            assert!(residual.abs() <= 10.0 * tol.max(1e-7), "residual {residual} at {x}");
        }
    }

    #[test]
    fn scale_function_inverse_round_trip() {
        let entry = catalog_entry("gbm").unwrap();
        let w = scale_function(&entry.spec, 1.0, (0.2, 5.0), 1e-10).unwrap();
        for i in 0..50 {
            let x = 0.3 + i as f64 * 0.09;
            assert!((w.inverse(w.eval(x)) - x).abs() < 1e-7);
        }
    }

    #[test]
    fn scale_function_divergence_error_names_endpoint() {
        // Feller spec with basepoint at the singular boundary 0: the inner
        // integrand (1/2)/x is not integrable there.
        let entry = catalog_entry("feller").unwrap();
        let err = scale_function(&entry.spec, 0.0, (0.0, 2.0), 1e-10).unwrap_err();
        match err {
            CatalogError::Divergent { endpoint } => assert_eq!(endpoint, 0.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn numeric_conjugation_map_cube_root_sigma() {
        let map = conjugation_map(real_fn(|x| x.cbrt().powi(2)), 0.0, (0.0, 2.0), 1e-9).unwrap();
        for i in 1..40 {
            let x = i as f64 * 0.05;
            assert!((map.eval(x) - 3.0 * x.cbrt()).abs() < 1e-5, "v({x}) = {}", map.eval(x));
        }
    }

    #[test]
    fn numeric_conjugation_map_sqrt_sigma() {
        let map = conjugation_map(real_fn(|x| x.sqrt()), 0.0, (0.0, 4.0), 1e-9).unwrap();
        for i in 1..40 {
            let x = i as f64 * 0.1;
            assert!((map.eval(x) - 2.0 * x.sqrt()).abs() < 1e-5);
        }
    }

    #[test]
    fn numeric_conjugation_map_wright_fisher_sigma() {
        let map = conjugation_map(
            real_fn(|x| (x * (1.0 - x)).max(0.0).sqrt()),
            0.0,
            (0.0, 1.0),
            1e-9,
        )
        .unwrap();
        for i in 1..20 {
            let x = i as f64 * 0.045;
            assert!(
                (map.eval(x) - 2.0 * x.sqrt().asin()).abs() < 1e-5,
                "v({x}) = {} vs {}",
                map.eval(x),
                2.0 * x.sqrt().asin()
            );
        }
    }

    #[test]
    fn conjugation_map_divergent_for_gbm_from_zero() {
        let err = conjugation_map(real_fn(|x| x), 0.0, (0.0, 2.0), 1e-9).unwrap_err();
        match err {
            CatalogError::Divergent { endpoint } => assert_eq!(endpoint, 0.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn verify_conjugation_feller_passes_with_unit_product() {
        let entry = catalog_entry("feller").unwrap();
        let map = entry.conjugation.clone().unwrap();
        let report = verify_conjugation(&entry.spec, &map, &[0.25, 1.0, 4.0], 1e-6).unwrap();
        assert!(report.pass, "{report:?}");
        assert!((report.product_mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn verify_conjugation_wright_fisher_passes() {
        let entry = catalog_entry("wright_fisher").unwrap();
        let map = entry.conjugation.clone().unwrap();
        let grid: Vec<f64> = (1..10).map(|i| i as f64 * 0.1).collect();
        // Symbolically sigma sigma'/2 = (1-2x)/4 = mu; the numeric check
        // confirms it through central differences.
        let report = verify_conjugation(&entry.spec, &map, &grid, 1e-6).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn verify_conjugation_rejects_mismatched_map() {
        let entry = catalog_entry("bm").unwrap();
        let map = catalog_entry("feller").unwrap().conjugation.unwrap();
        let report = verify_conjugation(&entry.spec, &map, &[1.0], 1e-6).unwrap();
        assert!(!report.pass);
        // The map implies s = sqrt(x), so s s'/2 = 1/4 while BM's drift is 0.
        assert!((report.max_drift_deviation - 0.25).abs() < 1e-6);
    }

    #[test]
    fn catalog_contains_expected_entries() {
        let names: Vec<String> = builtin_catalog().iter().map(|e| e.name().to_string()).collect();
        for expected in ["bm", "cube", "feller", "wright_fisher", "gbm", "integrated_bm", "bounded_sigma"] {
            assert!(names.contains(&expected.to_string()), "missing {expected}");
        }
    }

    #[test]
    fn feller_entry_carries_square_root_map() {
        let entry = catalog_entry("feller").unwrap();
        let map = entry.conjugation.unwrap();
        // X(t) = (B_t + 2 sqrt(x))^2 / 4 is the inverse map applied to the
        // shifted Brownian motion.
        let x = 1.0;
        let b = 0.7;
        let inv = map.inverse(b + map.eval(x));
        assert!((inv - 0.25 * (b + 2.0 * x.sqrt()).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn integrated_bm_entry_has_cubic_clock() {
        let entry = catalog_entry("integrated_bm").unwrap();
        let tc = entry.timechange.deterministic().unwrap();
        assert!((tc.rho(2.0) - 8.0 / 3.0).abs() < 1e-12);
        assert!((tc.rho_prime(2.0) - 4.0).abs() < 1e-12);
        assert!((tc.rho_inv(9.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bounded_sigma_envelopes_are_quarter_and_nine_quarters() {
        let entry = catalog_entry("bounded_sigma").unwrap();
        match &entry.timechange {
            TimeChange::Stochastic(env) => {
                // sigma in [1/2, 3/2], so sigma^2 in [1/4, 9/4]; with the
                // identity scale the quadratic variation is squeezed by the
                // constant bounds.
                assert!((env.alpha(4.0) - 1.0).abs() < 1e-12);
                assert!((env.beta(4.0) - 9.0).abs() < 1e-12);
            }
            _ => panic!("bounded_sigma must carry a stochastic time change"),
        }
    }

    #[test]
    fn catalog_maps_have_unit_derivative_product() {
        for entry in builtin_catalog() {
            let Some(map) = &entry.conjugation else { continue };
            let grid: Vec<f64> = match entry.name() {
                "wright_fisher" => (1..20).map(|i| i as f64 * 0.05).collect(),
                _ => (1..20).map(|i| 0.1 + i as f64 * 0.2).collect(),
            };
            for &x in &grid {
                let p = map.deriv(x) * entry.spec.sigma(x);
                assert!((p - 1.0).abs() < 1e-8, "{}: v'sigma = {p} at {x}", entry.name());
            }
        }
    }

    #[test]
    fn timechanged_coefficients_identity_scale_recovers_bm() {
        let w = ScaleFunction::identity(0.0);
        let coeffs = timechanged_coefficients(&w, real_fn(|_| 1.0));
        assert_eq!(coeffs.drift(0.3, 1.0).unwrap(), 0.0);
        assert_eq!(coeffs.diffusion(0.3, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn timechanged_coefficients_cubic_clock_gives_time_diffusion() {
        let w = ScaleFunction::identity(0.0);
        let coeffs = timechanged_coefficients(&w, real_fn(|t| t * t));
        assert_eq!(coeffs.drift(0.0, 2.0).unwrap(), 0.0);
        assert!((coeffs.diffusion(0.0, 2.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn timechanged_coefficients_log_scale_recovers_gbm() {
        // w = ln x, rho = t: drift x/2 and diffusion x, matching the gbm
        // spec pointwise.
        let entry = catalog_entry("gbm").unwrap();
        let w = entry.conjugation.as_ref().unwrap().as_scale();
        let coeffs = timechanged_coefficients(&w, real_fn(|_| 1.0));
        for i in 1..30 {
            let x = 0.2 + i as f64 * 0.15;
            assert!((coeffs.drift(x, 3.0).unwrap() - entry.spec.mu(x)).abs() < 1e-4);
            assert!((coeffs.diffusion(x, 3.0).unwrap() - entry.spec.sigma(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_rejects_empty_range() {
        assert!(Interval::new(1.0, 1.0, BoundaryPolicy::Clamp, BoundaryPolicy::Clamp).is_err());
    }

    #[test]
    fn verify_conjugation_rejects_out_of_interval_grid() {
        let entry = catalog_entry("wright_fisher").unwrap();
        let map = entry.conjugation.clone().unwrap();
        let err = verify_conjugation(&entry.spec, &map, &[1.5], 1e-6).unwrap_err();
        assert!(matches!(err, CatalogError::OutsideInterval { .. }));
    }
}
