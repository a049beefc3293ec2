//! Named end-to-end verification experiments: each one simulates a catalog
//! model at scale, compares empirical distributions against the closed-form
//! laws, and reports per-check statistics with explicit thresholds.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{catalog_entry, timechanged_coefficients, CatalogEntry, DeterministicTimeChange, Eta, TimeChange};
use crate::laws::{self, BoundPair, CompoundArctanLaw};
use crate::pathsim::{
    empirical_rho, monte_carlo, monte_carlo_two_interval, sample_s, simulate_path,
    simulate_time_dependent, with_workers, SamplerConfig, Scheme,
};
use crate::stats::{dkw_band, ks_one_sample, ks_two_sample, linear_grid, log_grid, EmpiricalCdf};

pub const EXPERIMENTS: &[&str] = &[
    "bm_arctangent",
    "conjugated_reduction",
    "integrated_bm_compound",
    "density_consistency",
    "stochastic_bounds",
    "two_interval",
    "u_equals_s",
    "arcsine_laws",
    "expectation_dichotomy",
    "eta_invariance",
    "timechanged_sde",
    "determinism",
];

/// Flat experiment configuration; every field is overridable from a manifest
/// file or a command-line flag, with unset fields falling back to the
/// experiment's built-in defaults.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub spec: Option<String>,
    pub r: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub paths: Option<u64>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Manifest {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            spec: None,
            r: None,
            r1: None,
            r2: None,
            dt: None,
            horizon: None,
            paths: None,
            seed: 42,
            workers: None,
            tolerance: None,
            out: None,
        }
    }

    /// Parse a flat `key = value` manifest file; `#` starts a comment.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut manifest: Option<Manifest> = None;
        let mut pending: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "experiment" {
                manifest = Some(Manifest::new(value));
            } else {
                pending.push((key.to_string(), value.to_string()));
            }
        }
        let mut manifest = manifest.ok_or_else(|| anyhow!("manifest must set `experiment`"))?;
        for (key, value) in pending {
            manifest.set(&key, &value)?;
        }
        Ok(manifest)
    }

    /// Set one field by key; used for both manifest entries and flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
        }
        match key {
            "experiment" => self.experiment = value.to_string(),
            "spec" => self.spec = Some(value.to_string()),
            "r" => self.r = Some(parse(key, value)?),
            "r1" => self.r1 = Some(parse(key, value)?),
            "r2" => self.r2 = Some(parse(key, value)?),
            "dt" => self.dt = Some(parse(key, value)?),
            "horizon" => self.horizon = Some(parse(key, value)?),
            "paths" => self.paths = Some(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            "workers" => self.workers = Some(parse(key, value)?),
            "tolerance" => self.tolerance = Some(parse(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            other => bail!("unknown manifest key `{other}`"),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Pass iff statistic <= threshold.
    fn upper(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self { name: name.into(), statistic, threshold, pass: statistic <= threshold }
    }

    /// Pass iff statistic >= threshold.
    fn lower(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self { name: name.into(), statistic, threshold, pass: statistic >= threshold }
    }
}

/// One ECDF-vs-law comparison table, emitted as CSV by the CLI.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub label: String,
    /// (t, empirical, analytic, lower_env, upper_env, abs_gap)
    pub rows: Vec<[f64; 6]>,
}

#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    /// r after grid rounding, when the experiment simulates paths.
    pub effective_r: Option<f64>,
    pub censored_fraction: Option<f64>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub duration_secs: f64,
    #[serde(skip)]
    pub comparisons: Vec<Comparison>,
}

struct Outcome {
    checks: Vec<CheckResult>,
    comparisons: Vec<Comparison>,
    effective_r: Option<f64>,
    censored_fraction: Option<f64>,
}

impl Outcome {
    fn new(checks: Vec<CheckResult>) -> Self {
        Self { checks, comparisons: Vec::new(), effective_r: None, censored_fraction: None }
    }
}

pub fn run_experiment(manifest: &Manifest) -> Result<ExperimentReport> {
    let start = Instant::now();
    let workers = manifest.workers;
    let mut outcome = with_workers(workers, || dispatch(manifest))?;
    if let Some(tol) = manifest.tolerance {
        for check in &mut outcome.checks {
            check.threshold = tol;
            check.pass = check.statistic <= tol;
        }
    }
    let pass = outcome.checks.iter().all(|c| c.pass);
    Ok(ExperimentReport {
        experiment: manifest.experiment.clone(),
        seed: manifest.seed,
        effective_r: outcome.effective_r,
        censored_fraction: outcome.censored_fraction,
        checks: outcome.checks,
        pass,
        duration_secs: start.elapsed().as_secs_f64(),
        comparisons: outcome.comparisons,
    })
}

fn dispatch(m: &Manifest) -> Result<Outcome> {
    match m.experiment.as_str() {
        "bm_arctangent" => bm_arctangent(m),
        "conjugated_reduction" => conjugated_reduction(m),
        "integrated_bm_compound" => integrated_bm_compound(m),
        "density_consistency" => density_consistency(m),
        "stochastic_bounds" => stochastic_bounds(m),
        "two_interval" => two_interval(m),
        "u_equals_s" => u_equals_s(m),
        "arcsine_laws" => arcsine_laws(m),
        "expectation_dichotomy" => expectation_dichotomy(m),
        "eta_invariance" => eta_invariance(m),
        "timechanged_sde" => timechanged_sde(m),
        "determinism" => determinism(m),
        other => bail!("unknown experiment `{other}`; known: {}", EXPERIMENTS.join(", ")),
    }
}

fn entry(name: &str) -> Result<CatalogEntry> {
    catalog_entry(name).ok_or_else(|| anyhow!("no catalog entry named `{name}`"))
}

fn deterministic_clock(e: &CatalogEntry) -> Result<DeterministicTimeChange> {
    e.timechange
        .deterministic()
        .cloned()
        .ok_or_else(|| anyhow!("entry `{}` has no deterministic time change", e.name()))
}

struct McRun {
    ecdf_s: EmpiricalCdf,
    result: crate::pathsim::MonteCarloResult,
}

fn run_mc(e: &CatalogEntry, config: &SamplerConfig, r: f64) -> Result<McRun> {
    let result = monte_carlo(e, config, r).context("monte carlo run failed")?;
    let valid = config.horizon - result.effective_r;
    let ecdf_s = EmpiricalCdf::new(&result.s_samples(), valid)?;
    Ok(McRun { ecdf_s, result })
}

fn comparison_rows(
    ecdf: &EmpiricalCdf,
    cdf: &dyn Fn(f64) -> f64,
    grid: &[f64],
) -> Result<Vec<[f64; 6]>> {
    let band = dkw_band(ecdf.n_total(), 0.01)?;
    grid.iter()
        .map(|&t| {
            let emp = ecdf.eval(t)?;
            let ana = cdf(t);
            Ok([t, emp, ana, ana - band, ana + band, (emp - ana).abs()])
        })
        .collect()
}

/// Scale a default path count down for the determinism re-runs.
fn paths_or(m: &Manifest, default: u64) -> u64 {
    m.paths.unwrap_or(default)
}

// Brownian arctangent law: ECDF of S against (2/pi) arctan sqrt(t/r).
fn bm_arctangent(m: &Manifest) -> Result<Outcome> {
    let e = entry("bm")?;
    let config = SamplerConfig {
        dt: m.dt.unwrap_or(1e-3),
        horizon: m.horizon.unwrap_or(21.0),
        n_paths: paths_or(m, 100_000),
        seed: m.seed,
        scheme: Scheme::ExactBm,
    };
    let r = m.r.unwrap_or(1.0);
    let run = run_mc(&e, &config, r)?;
    let r_eff = run.result.effective_r;
    let cdf = move |t: f64| laws::bm_cdf(t, r_eff).unwrap();

    let pointwise = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let max_gap = pointwise
        .iter()
        .map(|&t| Ok((run.ecdf_s.eval(t)? - cdf(t)).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    let grid = log_grid(0.01, 10.0, 200);
    let ks = ks_one_sample(&run.ecdf_s, cdf, &grid)?;

    let mut outcome = Outcome::new(vec![
        CheckResult::upper("pointwise_max_gap", max_gap, 0.02),
        CheckResult::upper("grid_ks", ks, 0.03),
    ]);
    outcome.comparisons.push(Comparison {
        label: "bm_arctangent_s".into(),
        rows: comparison_rows(&run.ecdf_s, &cdf, &grid)?,
    });
    outcome.effective_r = Some(r_eff);
    outcome.censored_fraction = Some(run.result.censored_s_fraction);
    Ok(outcome)
}

// Conjugated diffusions reduce to the Brownian law exactly.
fn conjugated_reduction(m: &Manifest) -> Result<Outcome> {
    let names: Vec<&str> = match m.spec.as_deref() {
        Some(s) => vec![s],
        None => vec!["cube", "feller", "wright_fisher", "gbm"],
    };
    let r = m.r.unwrap_or(1.0);
    let grid = log_grid(0.01, 10.0, 200);
    let mut outcome = Outcome::new(Vec::new());
    for name in names {
        let e = entry(name)?;
        // Entries with a degenerate boundary use the exact conjugated route
        // (and a finer step): the Euler scheme folds the path at the boundary
        // and converges to a different law for the re-exceedance time.
        let (scheme, default_dt) = match name {
            "feller" | "wright_fisher" => (Scheme::ExactConjugated, 5e-4),
            _ => (Scheme::Euler, 1e-3),
        };
        let config = SamplerConfig {
            dt: m.dt.unwrap_or(default_dt),
            horizon: m.horizon.unwrap_or(21.0),
            n_paths: paths_or(m, 50_000),
            seed: m.seed,
            scheme,
        };
        let run = run_mc(&e, &config, r)?;
        let r_eff = run.result.effective_r;
        let cdf = move |t: f64| laws::bm_cdf(t, r_eff).unwrap();
        let ks = ks_one_sample(&run.ecdf_s, cdf, &grid)?;
        outcome.checks.push(CheckResult::upper(format!("{name}_grid_ks"), ks, 0.035));
        outcome.comparisons.push(Comparison {
            label: format!("conjugated_reduction_{name}"),
            rows: comparison_rows(&run.ecdf_s, &cdf, &grid)?,
        });
        outcome.effective_r = Some(r_eff);
        outcome.censored_fraction = Some(run.result.censored_s_fraction);
    }
    Ok(outcome)
}

// Compound law for integrated Brownian motion (cubic clock).
fn integrated_bm_compound(m: &Manifest) -> Result<Outcome> {
    let e = entry("integrated_bm")?;
    let config = SamplerConfig {
        dt: m.dt.unwrap_or(1e-3),
        horizon: m.horizon.unwrap_or(11.0),
        n_paths: paths_or(m, 100_000),
        seed: m.seed,
        scheme: Scheme::ExactIntegratedBm,
    };
    let r = m.r.unwrap_or(1.0);
    let run = run_mc(&e, &config, r)?;
    let law = CompoundArctanLaw::new(run.result.effective_r, deterministic_clock(&e)?)?;
    let cdf = move |t: f64| laws::compound_cdf(t, &law).unwrap();

    let pointwise = [0.25, 1.0, 2.0, 4.0];
    let max_gap = pointwise
        .iter()
        .map(|&t| Ok((run.ecdf_s.eval(t)? - cdf(t)).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    let grid = log_grid(0.01, 10.0, 200);
    let ks = ks_one_sample(&run.ecdf_s, &cdf, &grid)?;

    let mut outcome = Outcome::new(vec![
        CheckResult::upper("pointwise_max_gap", max_gap, 0.02),
        CheckResult::upper("grid_ks", ks, 0.03),
    ]);
    outcome.comparisons.push(Comparison {
        label: "integrated_bm_compound_s".into(),
        rows: comparison_rows(&run.ecdf_s, &cdf, &grid)?,
    });
    outcome.effective_r = Some(run.result.effective_r);
    outcome.censored_fraction = Some(run.result.censored_s_fraction);
    Ok(outcome)
}

// The compound density against a finite difference of the CDF, plus
// normalization.
fn density_consistency(_m: &Manifest) -> Result<Outcome> {
    let clocks = [
        ("identity", DeterministicTimeChange::identity()),
        ("cubic", DeterministicTimeChange::cubic()),
    ];
    let mut checks = Vec::new();
    for (label, tc) in clocks {
        let mut max_rel = 0.0f64;
        for r in [0.5, 1.0] {
            let law = CompoundArctanLaw::new(r, tc.clone())?;
            for t in [0.5, 1.0, 2.0] {
                let h = 1e-5;
                let fd = (laws::compound_cdf(t + h, &law)? - laws::compound_cdf(t - h, &law)?) / (2.0 * h);
                let pdf = laws::compound_pdf(t, &law)?;
                max_rel = max_rel.max(((pdf - fd) / pdf).abs());
            }
        }
        checks.push(CheckResult::upper(format!("{label}_pdf_vs_cdf_fd_rel"), max_rel, 1e-6));

        let mut max_norm_dev = 0.0f64;
        for r in [0.5, 1.0, 2.0] {
            let law = CompoundArctanLaw::new(r, tc.clone())?;
            let t_big = if label == "identity" { 1e6 } else { 1e3 };
            let mass = crate::quad::integrate(
                |t| laws::compound_pdf(t, &law).unwrap_or(f64::NAN),
                0.0,
                t_big,
                1e-10,
            )
            .map_err(|e| anyhow!("quadrature failed: {e}"))?;
            let total = mass + laws::compound_tail_mass(t_big, &law);
            max_norm_dev = max_norm_dev.max((total - 1.0).abs());
        }
        checks.push(CheckResult::upper(format!("{label}_pdf_normalization"), max_norm_dev, 1e-8));
    }
    Ok(Outcome::new(checks))
}

// Envelope bounds for the stochastic clock of the bounded-volatility model,
// plus the exact path-wise sandwich of the accumulated quadratic variation.
fn stochastic_bounds(m: &Manifest) -> Result<Outcome> {
    let e = entry("bounded_sigma")?;
    let env = match &e.timechange {
        TimeChange::Stochastic(env) => env.clone(),
        _ => bail!("bounded_sigma must carry envelopes"),
    };
    let config = SamplerConfig {
        dt: m.dt.unwrap_or(1e-3),
        horizon: m.horizon.unwrap_or(41.0),
        n_paths: paths_or(m, 100_000),
        seed: m.seed,
        scheme: Scheme::Euler,
    };
    let r = m.r.unwrap_or(1.0);
    let run = run_mc(&e, &config, r)?;
    let r_eff = run.result.effective_r;
    let bounds = BoundPair::new(r_eff, env.alpha_fn(), env.beta_fn())?;

    let grid_upper = linear_grid(0.0, 30.0, 301);
    let mut worst_upper = f64::NEG_INFINITY;
    for &t in &grid_upper {
        let ub = laws::upper_bound_cdf(t, &bounds)?;
        worst_upper = worst_upper.max(run.ecdf_s.eval(t)? - ub.value);
    }

    let grid_lower = linear_grid(bounds.t_bar + 0.1, 30.0, 220);
    let mut worst_lower = f64::NEG_INFINITY;
    for &t in &grid_lower {
        let lb = laws::lower_bound_cdf(t, &bounds)?;
        worst_lower = worst_lower.max(lb - run.ecdf_s.eval(t)?);
    }

    // Path-wise sandwich, exact: spot-check the accumulated quadratic
    // variation of 100 paths against the envelopes at every grid point.
    let w = e.scale.clone().ok_or_else(|| anyhow!("bounded_sigma needs a scale"))?;
    let n_spot = 100.min(config.n_paths);
    let violations: u64 = (0..n_spot)
        .into_par_iter()
        .map(|k| {
            let path = simulate_path(&e, &config, k)?;
            let rho = empirical_rho(&path, &w, &|x| e.spec.sigma(x))?;
            let mut bad = 0u64;
            for (i, &v) in rho.iter().enumerate() {
                let t = i as f64 * config.dt;
                if v < env.alpha(t) || v > env.beta(t) {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();

    let mut rows = Vec::new();
    for &t in &grid_upper {
        let emp = run.ecdf_s.eval(t)?;
        let upper = laws::upper_bound_cdf(t, &bounds)?.value;
        let lower = if t > bounds.t_bar { laws::lower_bound_cdf(t, &bounds)? } else { f64::NAN };
        let gap = (emp - upper).max(if lower.is_nan() { 0.0 } else { lower - emp }).max(0.0);
        rows.push([t, emp, f64::NAN, lower, upper, gap]);
    }

    let mut outcome = Outcome::new(vec![
        CheckResult::upper("ecdf_below_upper_bound", worst_upper, 0.015),
        CheckResult::upper("ecdf_above_lower_bound", worst_lower, 0.015),
        CheckResult::upper("pathwise_rho_sandwich_violations", violations as f64, 0.0),
    ]);
    outcome.comparisons.push(Comparison { label: "stochastic_bounds_s".into(), rows });
    outcome.effective_r = Some(r_eff);
    outcome.censored_fraction = Some(run.result.censored_s_fraction);
    Ok(outcome)
}

// Two-interval law for Brownian and integrated Brownian motion.
fn two_interval(m: &Manifest) -> Result<Outcome> {
    let r1 = m.r1.unwrap_or(1.0);
    let r2 = m.r2.unwrap_or(2.0);
    let grid = log_grid(0.01, 9.0, 200);
    let mut outcome = Outcome::new(Vec::new());
    for (name, scheme, horizon) in [
        ("bm", Scheme::ExactBm, 22.0),
        ("integrated_bm", Scheme::ExactIntegratedBm, 12.0),
    ] {
        let e = entry(name)?;
        let config = SamplerConfig {
            dt: m.dt.unwrap_or(1e-3),
            horizon: m.horizon.unwrap_or(horizon),
            n_paths: paths_or(m, 50_000),
            seed: m.seed,
            scheme,
        };
        let samples = monte_carlo_two_interval(&e, &config, r1, r2)?;
        let ecdf = EmpiricalCdf::new(&samples, config.horizon - r2)?;
        let tc = deterministic_clock(&e)?;
        let cdf = |t: f64| laws::two_interval_cdf(t, r1, r2, &tc).unwrap();
        let ks = ks_one_sample(&ecdf, cdf, &grid)?;
        outcome.checks.push(CheckResult::upper(format!("{name}_grid_ks"), ks, 0.03));
        outcome.comparisons.push(Comparison {
            label: format!("two_interval_{name}"),
            rows: comparison_rows(&ecdf, &cdf, &grid)?,
        });
    }
    Ok(outcome)
}

// U(r) and S(r) share a distribution.
fn u_equals_s(m: &Manifest) -> Result<Outcome> {
    let r = m.r.unwrap_or(1.0);
    let mut grid = vec![0.0];
    grid.extend(log_grid(0.01, 19.0, 200));
    let mut outcome = Outcome::new(Vec::new());
    for (name, scheme, dt) in [("bm", Scheme::ExactBm, 1e-3), ("feller", Scheme::ExactConjugated, 5e-4)] {
        let e = entry(name)?;
        let config = SamplerConfig {
            dt: m.dt.unwrap_or(dt),
            horizon: m.horizon.unwrap_or(21.0),
            n_paths: paths_or(m, 50_000),
            seed: m.seed,
            scheme,
        };
        let run = run_mc(&e, &config, r)?;
        let valid = config.horizon - run.result.effective_r;
        let ecdf_u = EmpiricalCdf::new(&run.result.u_samples(), valid)?;
        let ks = ks_two_sample(&run.ecdf_s, &ecdf_u, &grid)?;
        outcome.checks.push(CheckResult::upper(format!("{name}_two_sample_ks"), ks, 0.02));
        let rows = grid
            .iter()
            .map(|&t| {
                let s = run.ecdf_s.eval(t)?;
                let u = ecdf_u.eval(t)?;
                Ok([t, s, u, f64::NAN, f64::NAN, (s - u).abs()])
            })
            .collect::<Result<Vec<_>>>()?;
        outcome.comparisons.push(Comparison { label: format!("u_equals_s_{name}"), rows });
        outcome.effective_r = Some(run.result.effective_r);
        outcome.censored_fraction = Some(run.result.censored_s_fraction);
    }
    Ok(outcome)
}

// Occupation-time arcsine law for Brownian motion and the compound arcsine
// law for the argmax time theta.
fn arcsine_laws(m: &Manifest) -> Result<Outcome> {
    let r = m.r.unwrap_or(1.0);
    let mut outcome = Outcome::new(Vec::new());
    let grid = linear_grid(0.005 * r, 0.995 * r, 199);

    let bm = entry("bm")?;
    let config = SamplerConfig {
        dt: m.dt.unwrap_or(1e-3),
        horizon: m.horizon.unwrap_or(r),
        n_paths: paths_or(m, 100_000),
        seed: m.seed,
        scheme: Scheme::ExactBm,
    };
    let result = monte_carlo(&bm, &config, r)?;
    let r_eff = result.effective_r;

    let ecdf_occ = EmpiricalCdf::new(&result.occupation_samples(), r_eff)?;
    let occ_cdf = |t: f64| laws::occupation_arcsine_cdf(t, r_eff).unwrap();
    let ks_occ = ks_one_sample(&ecdf_occ, occ_cdf, &grid)?;
    outcome.checks.push(CheckResult::upper("bm_occupation_grid_ks", ks_occ, 0.02));
    outcome.comparisons.push(Comparison {
        label: "arcsine_occupation_bm".into(),
        rows: comparison_rows(&ecdf_occ, &occ_cdf, &grid)?,
    });

    let ecdf_theta = EmpiricalCdf::new(&result.theta_samples(), r_eff)?;
    let id = DeterministicTimeChange::identity();
    let theta_cdf_bm = |t: f64| laws::theta_arcsine_cdf(t, r_eff, &id).unwrap();
    let ks_theta = ks_one_sample(&ecdf_theta, theta_cdf_bm, &grid)?;
    outcome.checks.push(CheckResult::upper("bm_theta_grid_ks", ks_theta, 0.02));
    outcome.comparisons.push(Comparison {
        label: "arcsine_theta_bm".into(),
        rows: comparison_rows(&ecdf_theta, &theta_cdf_bm, &grid)?,
    });

    let ibm = entry("integrated_bm")?;
    let config_ibm = SamplerConfig { scheme: Scheme::ExactIntegratedBm, ..config };
    let result_ibm = monte_carlo(&ibm, &config_ibm, r)?;
    let ecdf_theta_ibm = EmpiricalCdf::new(&result_ibm.theta_samples(), r_eff)?;
    let cubic = deterministic_clock(&ibm)?;
    let theta_cdf_ibm = |t: f64| laws::theta_arcsine_cdf(t, r_eff, &cubic).unwrap();
    let ks_theta_ibm = ks_one_sample(&ecdf_theta_ibm, theta_cdf_ibm, &grid)?;
    outcome.checks.push(CheckResult::upper("integrated_bm_theta_grid_ks", ks_theta_ibm, 0.02));
    outcome.comparisons.push(Comparison {
        label: "arcsine_theta_integrated_bm".into(),
        rows: comparison_rows(&ecdf_theta_ibm, &theta_cdf_ibm, &grid)?,
    });

    outcome.effective_r = Some(r_eff);
    Ok(outcome)
}

// Truncated means: divergent sqrt growth for the identity clock, convergence
// for the cubic clock (finite mean since gamma = 3 > 2).
fn expectation_dichotomy(m: &Manifest) -> Result<Outcome> {
    let r = m.r.unwrap_or(1.0);
    let id = DeterministicTimeChange::identity();
    let cuts = [10.0, 100.0, 1000.0, 10_000.0];
    let means: Vec<f64> = cuts
        .iter()
        .map(|&t| Ok(laws::truncated_mean(r, &id, t, Some(1.0))?.integral))
        .collect::<Result<_>>()?;
    let strictly_increasing = means.windows(2).all(|w| w[1] > w[0]);
    let increments: Vec<f64> = means.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = increments.windows(2).map(|w| w[1] / w[0]).collect();
    let ratio_min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio_max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let cubic = DeterministicTimeChange::cubic();
    let est_100 = laws::truncated_mean(r, &cubic, 100.0, Some(3.0))?
        .corrected()
        .ok_or_else(|| anyhow!("tail bound missing for the cubic clock"))?;
    let est_1000 = laws::truncated_mean(r, &cubic, 1000.0, Some(3.0))?
        .corrected()
        .ok_or_else(|| anyhow!("tail bound missing for the cubic clock"))?;

    Ok(Outcome::new(vec![
        CheckResult::lower("bm_truncated_means_strictly_increase", strictly_increasing as u64 as f64, 1.0),
        CheckResult::lower("bm_increment_ratio_min", ratio_min, 2.5),
        CheckResult::upper("bm_increment_ratio_max", ratio_max, 4.0),
        CheckResult::upper("integrated_bm_mean_stability", (est_1000 - est_100).abs(), 1e-2),
    ]))
}

// The law of S(r) does not involve the initial state.
fn eta_invariance(m: &Manifest) -> Result<Outcome> {
    let r = m.r.unwrap_or(1.0);
    let config = SamplerConfig {
        dt: m.dt.unwrap_or(1e-3),
        horizon: m.horizon.unwrap_or(21.0),
        n_paths: paths_or(m, 50_000),
        seed: m.seed,
        scheme: Scheme::ExactBm,
    };
    let point = entry("bm")?;
    let mut uniform = entry("bm")?;
    uniform.spec.eta = Eta::Uniform { lo: -1.0, hi: 1.0 };

    let run_point = run_mc(&point, &config, r)?;
    let config_u = SamplerConfig { seed: m.seed.wrapping_add(1), ..config };
    let run_uniform = run_mc(&uniform, &config_u, r)?;

    let mut grid = vec![0.0];
    grid.extend(log_grid(0.01, 19.0, 200));
    let ks = ks_two_sample(&run_point.ecdf_s, &run_uniform.ecdf_s, &grid)?;
    let mut outcome = Outcome::new(vec![CheckResult::upper("eta_two_sample_ks", ks, 0.02)]);
    outcome.effective_r = Some(run_point.result.effective_r);
    outcome.censored_fraction = Some(run_point.result.censored_s_fraction);
    Ok(outcome)
}

// Simulating the time-changed SDE built from (w, rho') must reproduce the
// S-law of the original diffusion.
fn timechanged_sde(m: &Manifest) -> Result<Outcome> {
    let e = entry("gbm")?;
    let r = m.r.unwrap_or(1.0);
    let config = SamplerConfig {
        dt: m.dt.unwrap_or(1e-3),
        horizon: m.horizon.unwrap_or(21.0),
        n_paths: paths_or(m, 50_000),
        seed: m.seed,
        scheme: Scheme::Euler,
    };
    let run_direct = run_mc(&e, &config, r)?;
    let r_eff = run_direct.result.effective_r;

    let w = e.conjugation.as_ref().unwrap().as_scale();
    let coeffs = timechanged_coefficients(&w, crate::catalog::real_fn(|_| 1.0));
    let drift = |x: f64, t: f64| coeffs.drift(x, t).unwrap();
    let diffusion = |x: f64, t: f64| coeffs.diffusion(x, t).unwrap();
    let config_tc = SamplerConfig { seed: m.seed.wrapping_add(1), ..config };
    let samples: Vec<Option<f64>> = (0..config_tc.n_paths)
        .into_par_iter()
        .map(|k| {
            let path = simulate_time_dependent(&drift, &diffusion, &e.spec.eta, &config_tc, k)?;
            sample_s(&path, r_eff)
        })
        .collect::<Result<_, _>>()?;
    let ecdf_tc = EmpiricalCdf::new(&samples, config.horizon - r_eff)?;

    let mut grid = vec![0.0];
    grid.extend(log_grid(0.01, 19.0, 200));
    let ks = ks_two_sample(&run_direct.ecdf_s, &ecdf_tc, &grid)?;
    let mut outcome = Outcome::new(vec![CheckResult::upper("two_sample_ks", ks, 0.025)]);
    outcome.effective_r = Some(r_eff);
    outcome.censored_fraction = Some(run_direct.result.censored_s_fraction);
    Ok(outcome)
}

// Every experiment's statistics must be identical across worker counts and
// re-runs; exercised at reduced path counts.
fn determinism(m: &Manifest) -> Result<Outcome> {
    let mut checks = Vec::new();
    for name in EXPERIMENTS {
        if *name == "determinism" {
            continue;
        }
        let mut small = Manifest::new(*name);
        small.seed = m.seed;
        small.paths = Some(m.paths.unwrap_or(2000));
        let mut a = small.clone();
        a.workers = Some(1);
        let mut b = small.clone();
        b.workers = Some(4);
        let ra = run_experiment(&a)?;
        let rb = run_experiment(&b)?;
        let identical = ra.checks.len() == rb.checks.len()
            && ra
                .checks
                .iter()
                .zip(&rb.checks)
                .all(|(x, y)| x.name == y.name && x.statistic.to_bits() == y.statistic.to_bits());
        checks.push(CheckResult::lower(format!("{name}_workers_invariant"), identical as u64 as f64, 1.0));
    }
    Ok(Outcome::new(checks))
}
