//! Monotone cubic (Fritsch-Carlson) interpolation over a strictly
//! increasing tabulation, with a bisection inverse for monotone tables.

/// Piecewise-cubic Hermite interpolant whose node slopes are limited so the
/// interpolant preserves the monotonicity of the data.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` must be strictly increasing and the same length as `ys`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2);
        assert!(xs.windows(2).all(|w| w[0] < w[1]), "abscissae must be strictly increasing");
        let n = xs.len();
        let deltas: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = deltas[0];
        slopes[n - 1] = deltas[n - 2];
        for i in 1..n - 1 {
            if deltas[i - 1] * deltas[i] <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // Harmonic mean weighted by interval widths.
                let w1 = 2.0 * (xs[i + 1] - xs[i]) + (xs[i] - xs[i - 1]);
                let w2 = (xs[i + 1] - xs[i]) + 2.0 * (xs[i] - xs[i - 1]);
                slopes[i] = (w1 + w2) / (w1 / deltas[i - 1] + w2 / deltas[i]);
            }
        }
        // Fritsch-Carlson limiter on the endpoint slopes.
        for (i, d) in [(0usize, deltas[0]), (n - 1, deltas[n - 2])] {
            if slopes[i] * d <= 0.0 {
                slopes[i] = 0.0;
            } else if slopes[i].abs() > 3.0 * d.abs() {
                slopes[i] = 3.0 * d;
            }
        }
        Self { xs, ys, slopes }
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= self.xs.len() => self.xs.len() - 2,
            p => p - 1,
        }
    }

    /// Evaluate at `x`; extrapolates linearly outside the tabulated range.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h
    }

    /// Invert an increasing interpolant by bisection to absolute tolerance
    /// `tol` in x. `y` outside the tabulated range clamps to the nearest
    /// endpoint abscissa.
    pub fn inverse(&self, y: f64, tol: f64) -> f64 {
        let n = self.ys.len();
        if y <= self.ys[0] {
            return self.xs[0];
        }
        if y >= self.ys[n - 1] {
            return self.xs[n - 1];
        }
        let i = self.ys.partition_point(|&v| v <= y) - 1;
        let (mut lo, mut hi) = (self.xs[i], self.xs[i + 1]);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> MonotoneCubic {
        let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        MonotoneCubic::new(xs, ys)
    }

    #[test]
    fn reproduces_smooth_function() {
        let interp = table(|x| x.exp(), 0.0, 2.0, 512);
        for i in 0..100 {
            let x = 0.013 + i as f64 * 0.019;
            assert!((interp.eval(x) - x.exp()).abs() < 1e-8);
            assert!((interp.derivative(x) - x.exp()).abs() < 1e-4);
        }
    }

    #[test]
    fn preserves_monotonicity_between_nodes() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 0.11, 3.0, 3.01];
        let interp = MonotoneCubic::new(xs, ys);
        let mut prev = interp.eval(0.0);
        for i in 1..=400 {
            let v = interp.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn inverse_round_trip() {
        let interp = table(|x| x.ln(), 0.5, 4.0, 1024);
        for i in 0..50 {
            let x = 0.6 + i as f64 * 0.06;
            let y = interp.eval(x);
            assert!((interp.inverse(y, 1e-12) - x).abs() < 1e-9);
        }
    }
}
