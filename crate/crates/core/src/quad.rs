//! Adaptive Simpson quadrature with handling for integrable endpoint
//! singularities.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    /// The integral does not converge; the offending endpoint is reported.
    #[error("integral diverges at endpoint {endpoint}")]
    Divergent { endpoint: f64 },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error("adaptive refinement exceeded maximum depth on [{a}, {b}]")]
    MaxDepth { a: f64, b: f64 },
}

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() {
        return Err(QuadError::NonFinite { x: lm });
    }
    if !frm.is_finite() {
        return Err(QuadError::NonFinite { x: rm });
    }
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(QuadError::MaxDepth { a, b });
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`. Both endpoints
/// must yield finite integrand values; use [`integrate`] when an endpoint may
/// be singular. `a > b` flips the sign.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return Ok(-adaptive_simpson(f, b, a, tol)?);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    for (x, v) in [(a, fa), (m, fm), (b, fb)] {
        if !v.is_finite() {
            return Err(QuadError::NonFinite { x });
        }
    }
    let whole = simpson(fa, fm, fb, b - a);
    adaptive_step(&f, a, b, fa, fm, fb, whole, tol, 0)
}

/// Integrate toward a possibly singular endpoint `sing` from `other` by
/// summing dyadic subintervals shrinking into `sing`. Converges when the
/// piece contributions decay geometrically; a non-decaying sequence of
/// pieces is reported as divergence at `sing`.
fn integrate_dyadic<F: Fn(f64) -> f64>(f: &F, sing: f64, other: f64, tol: f64) -> Result<f64, QuadError> {
    let span = other - sing; // may be negative
    let mut total = 0.0;
    let mut prev_piece = f64::INFINITY;
    let mut last_ratio = f64::INFINITY;
    let mut frac = 1.0;
    // Pieces of an integrable singularity decay geometrically, so a few
    // hundred levels always suffice; a divergent integral's pieces never
    // decay (they are constant for a logarithmic divergence) and exhaust the
    // level budget instead.
    for level in 0..400 {
        let hi = sing + span * frac;
        frac *= 0.5;
        let lo = sing + span * frac;
        // Close enough to the singularity, floating-point evaluation of the
        // integrand breaks down (endpoints round onto `sing`, or interior
        // cancellation yields NaN). Once the pieces are already decaying
        // geometrically, account for the remainder with the tail of that
        // geometric series instead of failing.
        let noise_floor = level > 10 && last_ratio < 1.0 && prev_piece.is_finite();
        if (lo == sing || lo == hi) && noise_floor {
            total += prev_piece * last_ratio / (1.0 - last_ratio);
            return Ok(total);
        }
        let piece = match adaptive_simpson(f, lo, hi, tol * 0.25) {
            Ok(p) => p,
            Err(QuadError::NonFinite { .. }) if noise_floor => {
                total += prev_piece * last_ratio / (1.0 - last_ratio);
                return Ok(total);
            }
            // Growing pieces that finally overflow the integrand: divergent.
            Err(QuadError::NonFinite { .. }) if level > 10 && last_ratio >= 1.0 => {
                return Err(QuadError::Divergent { endpoint: sing });
            }
            Err(e) => return Err(e),
        };
        total += piece;
        if !total.is_finite() {
            return Err(QuadError::Divergent { endpoint: sing });
        }
        let mag = piece.abs();
        if mag < tol * 0.125 {
            // Geometric tail estimate from the last observed decay ratio.
            let ratio = if prev_piece.abs() > 0.0 { mag / prev_piece.abs() } else { 0.0 };
            if ratio < 1.0 {
                total += piece * ratio / (1.0 - ratio);
            }
            return Ok(total);
        }
        if prev_piece.is_finite() && prev_piece.abs() > 0.0 {
            last_ratio = mag / prev_piece.abs();
        }
        prev_piece = piece;
    }
    Err(QuadError::Divergent { endpoint: sing })
}

/// Integrate `f` over `[a, b]`, tolerating an integrable singularity at
/// either endpoint. Divergent integrals are reported with the offending
/// endpoint.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return Ok(-integrate(f, b, a, tol)?);
    }
    let singular_lo = !f(a).is_finite();
    let singular_hi = !f(b).is_finite();
    match (singular_lo, singular_hi) {
        (false, false) => adaptive_simpson(&f, a, b, tol),
        (true, false) => integrate_dyadic(&f, a, b, tol),
        (false, true) => integrate_dyadic(&f, b, a, tol).map(|v| -v),
        (true, true) => {
            let m = 0.5 * (a + b);
            let lo = integrate_dyadic(&f, a, m, 0.5 * tol)?;
            let hi = integrate_dyadic(&f, b, m, 0.5 * tol)?;
            Ok(lo - hi)
        }
    }
}
