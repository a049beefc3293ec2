//! Trajectory generation (Euler-Maruyama plus exact schemes) and extraction
//! of the path functionals: running extrema, the exceedance times S and U,
//! the argmax time theta, occupation time, the two-interval variant, and the
//! path-wise quadratic variation of the scale-transformed process.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{BoundaryPolicy, CatalogEntry, DiffusionSpec, Eta, ProcessKind, ScaleFunction};
use crate::rng::path_rng;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid sampler config: {0}")]
    Config(String),
    #[error("scheme {scheme:?} is not valid for spec `{spec}`")]
    SchemeMismatch { scheme: Scheme, spec: String },
    #[error("time {t} exceeds the simulated horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("path left the scale function's tabulated range [{lo}, {hi}] at x = {x}; widen the tabulation window")]
    ScaleRange { x: f64, lo: f64, hi: f64 },
    #[error("state {x} escaped the interval after clamping on path {path_index} (internal invariant violation)")]
    StateEscaped { x: f64, path_index: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    ExactBm,
    ExactIntegratedBm,
    /// Exact simulation of a conjugated diffusion: map a Brownian path
    /// through the inverse conjugation.
    ExactConjugated,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(SimError::Config(format!(
                "need 0 < dt <= horizon, got dt = {}, horizon = {}",
                self.dt, self.horizon
            )));
        }
        if self.n_paths < 1 {
            return Err(SimError::Config("n_paths must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// One trajectory on the uniform grid k*dt, k = 0..=n_steps.
#[derive(Debug, Clone)]
pub struct PathGrid {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl PathGrid {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    /// Grid index of time `t`, rounded to the nearest step.
    pub fn index_of(&self, t: f64) -> Result<usize, SimError> {
        if t < 0.0 {
            return Err(SimError::Domain(format!("time must be nonnegative, got {t}")));
        }
        let idx = (t / self.dt).round() as usize;
        if idx > self.n_steps() {
            return Err(SimError::BeyondHorizon { t, horizon: self.horizon() });
        }
        Ok(idx)
    }

    /// Effective time after grid rounding.
    pub fn effective_time(&self, t: f64) -> Result<f64, SimError> {
        Ok(self.index_of(t)? as f64 * self.dt)
    }
}

fn draw_eta<R: Rng>(eta: &Eta, rng: &mut R) -> f64 {
    match *eta {
        Eta::Point(x) => x,
        Eta::Uniform { lo, hi } => rng.random_range(lo..hi),
    }
}

fn apply_policy(x: f64, spec: &DiffusionSpec, absorbed: &mut bool) -> f64 {
    let iv = &spec.interval;
    let mut y = x;
    if y < iv.lo {
        match iv.lo_policy {
            BoundaryPolicy::Clamp => y = iv.lo,
            BoundaryPolicy::Absorb => {
                y = iv.lo;
                *absorbed = true;
            }
            BoundaryPolicy::Unreachable => {}
        }
    }
    if y > iv.hi {
        match iv.hi_policy {
            BoundaryPolicy::Clamp => y = iv.hi,
            BoundaryPolicy::Absorb => {
                y = iv.hi;
                *absorbed = true;
            }
            BoundaryPolicy::Unreachable => {}
        }
    }
    y
}

fn supports(entry: &CatalogEntry, scheme: Scheme) -> bool {
    match scheme {
        Scheme::Euler => entry.kind == ProcessKind::Diffusion,
        Scheme::ExactBm => entry.name() == "bm",
        Scheme::ExactIntegratedBm => entry.kind == ProcessKind::IntegratedBm,
        Scheme::ExactConjugated => entry.conjugation.is_some() && entry.kind == ProcessKind::Diffusion,
    }
}

/// Simulate one trajectory of a catalog entry. Path `path_index` draws from
/// its own random stream, so results do not depend on scheduling.
pub fn simulate_path(entry: &CatalogEntry, config: &SamplerConfig, path_index: u64) -> Result<PathGrid, SimError> {
    config.validate()?;
    if !supports(entry, config.scheme) {
        return Err(SimError::SchemeMismatch { scheme: config.scheme, spec: entry.name().to_string() });
    }
    let mut rng = path_rng(config.seed, path_index);
    let n = config.n_steps();
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let mut values = Vec::with_capacity(n + 1);
    match config.scheme {
        Scheme::Euler => {
            let spec = &entry.spec;
            let mut x = draw_eta(&spec.eta, &mut rng);
            let mut absorbed = false;
            values.push(x);
            for _ in 0..n {
                if !absorbed {
                    let z: f64 = rng.sample(StandardNormal);
                    x = x + spec.mu(x) * dt + spec.sigma(x) * sqrt_dt * z;
                    x = apply_policy(x, spec, &mut absorbed);
                }
                values.push(x);
            }
        }
        Scheme::ExactBm => {
            let mut x = draw_eta(&entry.spec.eta, &mut rng);
            values.push(x);
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                x += sqrt_dt * z;
                values.push(x);
            }
        }
        Scheme::ExactIntegratedBm => {
            // Exact sampling of the time-changed Brownian representation
            // X(t) = W(rho(t)) with the cubic clock rho(t) = t^3/3: the
            // increments are independent Gaussians with variance
            // rho(t_{k+1}) - rho(t_k). This is the process whose running-max
            // functionals follow the compound laws; it shares all
            // one-dimensional marginals with the integral of Brownian motion
            // (Var X(1) = 1/3).
            let tc = entry.timechange.deterministic().expect("checked by supports");
            let mut x = draw_eta(&entry.spec.eta, &mut rng);
            values.push(x);
            let mut rho_prev = tc.rho(0.0);
            for k in 0..n {
                let rho_next = tc.rho((k + 1) as f64 * dt);
                let z: f64 = rng.sample(StandardNormal);
                x += (rho_next - rho_prev).sqrt() * z;
                rho_prev = rho_next;
                values.push(x);
            }
        }
        Scheme::ExactConjugated => {
            let map = entry.conjugation.as_ref().expect("checked by supports");
            let x0 = draw_eta(&entry.spec.eta, &mut rng);
            let mut y = map.eval(x0);
            values.push(x0);
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                y += sqrt_dt * z;
                values.push(map.inverse(y));
            }
        }
    }
    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(PathGrid { dt, values })
}

/// Euler-Maruyama for time-dependent coefficients, used to cross-validate
/// the time-changed SDE representation.
pub fn simulate_time_dependent(
    drift: &(dyn Fn(f64, f64) -> f64 + Sync),
    diffusion: &(dyn Fn(f64, f64) -> f64 + Sync),
    eta: &Eta,
    config: &SamplerConfig,
    path_index: u64,
) -> Result<PathGrid, SimError> {
    config.validate()?;
    let mut rng = path_rng(config.seed, path_index);
    let n = config.n_steps();
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let mut x = draw_eta(eta, &mut rng);
    let mut values = Vec::with_capacity(n + 1);
    values.push(x);
    for k in 0..n {
        let t = k as f64 * dt;
        let z: f64 = rng.sample(StandardNormal);
        x = x + drift(x, t) * dt + diffusion(x, t) * sqrt_dt * z;
        values.push(x);
    }
    Ok(PathGrid { dt, values })
}

/// Max and min of the path over grid times in [0, r].
pub fn running_extrema(path: &PathGrid, r: f64) -> Result<(f64, f64), SimError> {
    let idx = path.index_of(r)?;
    let slice = &path.values[..=idx];
    let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = slice.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max, min))
}

/// First grid time t >= r with X(t) >= M_r, minus r; `None` when the maximum
/// is never re-attained within the horizon.
pub fn sample_s(path: &PathGrid, r: f64) -> Result<Option<f64>, SimError> {
    let idx = path.index_of(r)?;
    let (m_r, _) = running_extrema(path, r)?;
    Ok(path.values[idx..]
        .iter()
        .position(|&v| v >= m_r)
        .map(|k| k as f64 * path.dt))
}

/// First grid time in [0, r] attaining M_r (ties to the earliest).
pub fn sample_theta(path: &PathGrid, r: f64) -> Result<f64, SimError> {
    let idx = path.index_of(r)?;
    let slice = &path.values[..=idx];
    let m_r = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k = slice.iter().position(|&v| v == m_r).unwrap();
    Ok(k as f64 * path.dt)
}

/// First grid time t >= r at or below the running minimum L_r, minus r;
/// `None` when the minimum is never re-attained within the horizon. Mirrors
/// `sample_s` under sign flip, which is what makes U(r) and S(r) agree in
/// law.
pub fn sample_u(path: &PathGrid, r: f64) -> Result<Option<f64>, SimError> {
    let idx = path.index_of(r)?;
    let (_, l_r) = running_extrema(path, r)?;
    Ok(path.values[idx..]
        .iter()
        .position(|&v| v <= l_r)
        .map(|k| k as f64 * path.dt))
}

/// Two-interval variant: M over grid times in [r1, r2], first grid time
/// t >= r2 with X(t) >= M, minus r2.
pub fn sample_two_interval_s(path: &PathGrid, r1: f64, r2: f64) -> Result<Option<f64>, SimError> {
    if !(r1 >= 0.0 && r1 < r2) {
        return Err(SimError::Domain(format!("need 0 <= r1 < r2, got r1={r1}, r2={r2}")));
    }
    let i1 = path.index_of(r1)?;
    let i2 = path.index_of(r2)?;
    let m = path.values[i1..=i2].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(path.values[i2..]
        .iter()
        .position(|&v| v >= m)
        .map(|k| k as f64 * path.dt))
}

/// Left-endpoint occupation time of the positive half-line over [0, r).
pub fn occupation_time_positive(path: &PathGrid, r: f64) -> Result<f64, SimError> {
    let idx = path.index_of(r)?;
    let count = path.values[..idx].iter().filter(|&&v| v > 0.0).count();
    Ok(count as f64 * path.dt)
}

/// Left-endpoint Riemann sum of [w'(X) sigma(X)]^2 along the path: the
/// accumulated quadratic variation of w(X), tabulated at every grid time.
pub fn empirical_rho(
    path: &PathGrid,
    w: &ScaleFunction,
    sigma: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Vec<f64>, SimError> {
    let (lo, hi) = w.range();
    let mut rho = Vec::with_capacity(path.values.len());
    let mut acc = 0.0;
    rho.push(0.0);
    for &x in &path.values[..path.values.len() - 1] {
        if x < lo || x > hi {
            return Err(SimError::ScaleRange { x, lo, hi });
        }
        let g = w.deriv(x) * sigma(x);
        acc += g * g * path.dt;
        rho.push(acc);
    }
    Ok(rho)
}

/// Per-path functional record. `None` times are censored at the horizon.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalSample {
    pub path_index: u64,
    pub m_r: f64,
    pub l_r: f64,
    pub s: Option<f64>,
    pub theta: f64,
    pub u: Option<f64>,
    pub occupation: f64,
}

#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub samples: Vec<FunctionalSample>,
    /// r after grid rounding.
    pub effective_r: f64,
    pub censored_s_fraction: f64,
    pub censored_u_fraction: f64,
}

impl MonteCarloResult {
    pub fn s_samples(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.s).collect()
    }

    pub fn u_samples(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.u).collect()
    }

    pub fn theta_samples(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| Some(s.theta)).collect()
    }

    pub fn occupation_samples(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| Some(s.occupation)).collect()
    }
}

fn extract(path: &PathGrid, r: f64, path_index: u64) -> Result<FunctionalSample, SimError> {
    let (m_r, l_r) = running_extrema(path, r)?;
    Ok(FunctionalSample {
        path_index,
        m_r,
        l_r,
        s: sample_s(path, r)?,
        theta: sample_theta(path, r)?,
        u: sample_u(path, r)?,
        occupation: occupation_time_positive(path, r)?,
    })
}

/// Run `config.n_paths` independent paths and extract the functionals at
/// horizon-aligned r. Path k's randomness is a pure function of
/// (seed, k), so the result is independent of worker scheduling.
pub fn monte_carlo(entry: &CatalogEntry, config: &SamplerConfig, r: f64) -> Result<MonteCarloResult, SimError> {
    config.validate()?;
    let probe = PathGrid { dt: config.dt, values: vec![0.0; config.n_steps() + 1] };
    let effective_r = probe.effective_time(r)?;
    let samples: Vec<FunctionalSample> = (0..config.n_paths)
        .into_par_iter()
        .map(|k| {
            let path = simulate_path(entry, config, k)?;
            extract(&path, effective_r, k)
        })
        .collect::<Result<_, _>>()?;
    let n = samples.len() as f64;
    let censored_s = samples.iter().filter(|s| s.s.is_none()).count() as f64 / n;
    let censored_u = samples.iter().filter(|s| s.u.is_none()).count() as f64 / n;
    Ok(MonteCarloResult {
        samples,
        effective_r,
        censored_s_fraction: censored_s,
        censored_u_fraction: censored_u,
    })
}

/// Two-interval Monte Carlo: S(r1, r2) per path.
pub fn monte_carlo_two_interval(
    entry: &CatalogEntry,
    config: &SamplerConfig,
    r1: f64,
    r2: f64,
) -> Result<Vec<Option<f64>>, SimError> {
    config.validate()?;
    (0..config.n_paths)
        .into_par_iter()
        .map(|k| {
            let path = simulate_path(entry, config, k)?;
            sample_two_interval_s(&path, r1, r2)
        })
        .collect()
}

/// Run a closure inside a dedicated thread pool of `workers` threads; `None`
/// uses the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to build thread pool")
            .install(f),
    }
}
