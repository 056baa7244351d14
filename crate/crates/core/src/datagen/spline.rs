use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;

/// Interpolating cubic with zero second derivative at both end knots.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalCubicSpline {
    t: Vec<f64>,
    v: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!("spline needs ≥ 2 knots, got {}", points.len())));
        }
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::NonFinite("spline knots"));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument("spline knot times must be strictly increasing".into()));
        }
        let (t, v): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        let n = t.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
            let k = n - 2;
            let mut lower = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let r = i - 1;
                lower[r] = h[i - 1];
                diag[r] = 2.0 * (h[i - 1] + h[i]);
                upper[r] = h[i];
                rhs[r] = 6.0 * ((v[i + 1] - v[i]) / h[i] - (v[i] - v[i - 1]) / h[i - 1]);
            }
            let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
            m[1..n - 1].copy_from_slice(&inner);
        }
        Ok(Self { t, v, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.t
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    /// Segment containing `x`; the end segments extend past the knot range.
    fn segment(&self, x: f64) -> usize {
        let last = self.t.len() - 2;
        match self.t[1..=last].iter().position(|&k| x < k) {
            Some(i) => i,
            None => last,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_on(self.segment(x), x)
    }

    /// Cubic of segment `i` evaluated at `x`, even outside `[t_i, t_{i+1}]`.
    pub fn eval_on(&self, i: usize, x: f64) -> f64 {
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let (a, b) = (t1 - x, x - t0);
        self.m[i] * a * a * a / (6.0 * h)
            + self.m[i + 1] * b * b * b / (6.0 * h)
            + (self.v[i] / h - self.m[i] * h / 6.0) * a
            + (self.v[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }

    /// Second derivative of segment `i` at `x`.
    pub fn second_derivative_on(&self, i: usize, x: f64) -> f64 {
        let h = self.t[i + 1] - self.t[i];
        (self.m[i] * (self.t[i + 1] - x) + self.m[i + 1] * (x - self.t[i])) / h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let s = NaturalCubicSpline::new(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert_eq!(s.second_derivatives(), &[0.0, -3.0, 0.0]);
        assert!((s.eval(0.5) - 0.6875).abs() < 1e-15);
        assert!((s.eval(1.5) - 0.6875).abs() < 1e-15);
    }

    #[test]
    fn two_points_is_a_line() {
        let s = NaturalCubicSpline::new(&[(1.0, 2.0), (3.0, -2.0)]).unwrap();
        for x in [1.0, 1.5, 2.2, 3.0] {
            assert!((s.eval(x) - (2.0 - 2.0 * (x - 1.0))).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(NaturalCubicSpline::new(&[(0.0, 1.0)]).is_err());
        assert!(NaturalCubicSpline::new(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(NaturalCubicSpline::new(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
    }
}
