//! Natural cubic spline interpolation with analytic first and second
//! derivatives.
//!
//! Used for two things: C² interpolation of tabulated obstacle/adhesion data
//! and the random smooth test curves of the Modica–Mortola property suite.
//! Natural end conditions (vanishing second derivative) keep the interpolant
//! in C² without inventing end slopes.

/// A natural cubic spline through `(xs[i], ys[i])` with strictly increasing
/// knots. Evaluation clamps to the end cubics outside the knot range.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (natural: zero at both ends).
    m: Vec<f64>,
}

impl CubicSpline {
    /// Fits the spline. Requires at least two strictly increasing knots.
    pub fn natural(xs: &[f64], ys: &[f64]) -> Option<CubicSpline> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return None;
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        if n == 2 {
            return Some(CubicSpline {
                xs: xs.to_vec(),
                ys: ys.to_vec(),
                m: vec![0.0; 2],
            });
        }
        // Tridiagonal system for interior second derivatives (Thomas solve).
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Some(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    fn segment(&self, x: f64) -> usize {
        match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).expect("knot is finite"))
        {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    /// Value, first and second derivative at `x`.
    pub fn eval2(&self, x: f64) -> (f64, f64, f64) {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let v = a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0;
        let d = (self.ys[i + 1] - self.ys[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0;
        let dd = a * self.m[i] + b * self.m[i + 1];
        (v, d, dd)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval2(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_exactly() {
        let xs = [0.0, 0.4, 1.1, 2.0, 2.7];
        let ys = [1.0, -0.5, 0.25, 3.0, 2.0];
        let s = CubicSpline::natural(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!((s.eval(*x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_are_consistent_with_finite_differences() {
        let xs: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin()).collect();
        let s = CubicSpline::natural(&xs, &ys).unwrap();
        let h = 1e-6;
        for &x in &[0.13, 0.5, 0.77] {
            let (_, d, dd) = s.eval2(x);
            let fd = (s.eval(x + h) - s.eval(x - h)) / (2.0 * h);
            let fdd = (s.eval(x + h) - 2.0 * s.eval(x) + s.eval(x - h)) / (h * h);
            assert!((d - fd).abs() < 1e-7, "first derivative off: {d} vs {fd}");
            assert!((dd - fdd).abs() < 1e-3, "second derivative off: {dd} vs {fdd}");
        }
    }

    #[test]
    fn second_derivative_is_continuous_at_knots() {
        let xs = [0.0, 0.3, 0.8, 1.5, 2.0];
        let ys = [0.0, 1.0, -1.0, 0.5, 0.0];
        let s = CubicSpline::natural(&xs, &ys).unwrap();
        for &x in &xs[1..4] {
            let left = s.eval2(x - 1e-9).2;
            let right = s.eval2(x + 1e-9).2;
            assert!((left - right).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_unsorted_or_short_input() {
        assert!(CubicSpline::natural(&[0.0], &[1.0]).is_none());
        assert!(CubicSpline::natural(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
    }
}
