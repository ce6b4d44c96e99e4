//! Natural cubic spline interpolation for tabulated weights and transform
//! tables. Evaluation returns 0 outside the knot range, matching the
//! compact-support convention for sampled weights.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// second derivatives at the knots (natural: zero at both ends)
    d2: Vec<f64>,
}

fn validate_knots(x: &[f64], y: &[f64]) -> Result<()> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::InvalidConfig(format!(
            "spline needs at least 3 matching knots, got {} x and {} y",
            n,
            y.len()
        )));
    }
    for w in x.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidConfig(
                "spline knots must be strictly increasing and finite".into(),
            ));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("spline values must be finite".into()));
    }
    Ok(())
}

impl CubicSpline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        validate_knots(&x, &y)?;
        let n = x.len();

        // Thomas algorithm on the interior tridiagonal system for d2
        let mut d2 = vec![0.0; n];
        let m = n - 2;
        let mut diag = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for i in 0..m {
            let h0 = x[i + 1] - x[i];
            let h1 = x[i + 2] - x[i + 1];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
        }
        // forward sweep (lower diagonal of row i is h at the shared knot)
        for i in 1..m {
            let lower = x[i + 1] - x[i];
            let w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        if m > 0 {
            d2[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                d2[i + 1] = (rhs[i] - upper[i] * d2[i + 2]) / diag[i];
            }
        }
        Ok(CubicSpline { x, y, d2 })
    }

    /// Interpolant with not-a-knot ends: the third derivative is continuous
    /// across the second and second-to-last knots, so the two outermost
    /// segment pairs each form a single cubic. Exact for cubic polynomials,
    /// and free of the curvature boundary layer a natural fit imposes on
    /// data whose underlying profile does not flatten at the ends, which is
    /// why sampled weights use it. Three knots fit the parabola through
    /// them.
    pub fn not_a_knot(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        validate_knots(&x, &y)?;
        let n = x.len();
        let h = |i: usize| x[i + 1] - x[i];
        let r = |i: usize| 6.0 * ((y[i + 1] - y[i]) / h(i) - (y[i] - y[i - 1]) / h(i - 1));
        if n == 3 {
            let c = r(1) / (3.0 * (h(0) + h(1)));
            return Ok(CubicSpline { x, y, d2: vec![c; 3] });
        }

        // Eliminate d2[0] and d2[n-1] through the end conditions
        //   d2[0]   = (1+a) d2[1]   - a d2[2],       a = h0/h1,
        //   d2[n-1] = (1+b) d2[n-2] - b d2[n-3],     b = h_{n-2}/h_{n-3},
        // which folds them into the first and last interior equations, then
        // solve the remaining tridiagonal system for d2[1..n-1].
        let k = n - 2;
        let a = h(0) / h(1);
        let b = h(n - 2) / h(n - 3);
        let mut lower = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for j in 0..k {
            let i = j + 1;
            lower[j] = h(i - 1);
            diag[j] = 2.0 * (h(i - 1) + h(i));
            upper[j] = h(i);
            rhs[j] = r(i);
        }
        diag[0] += h(0) * (1.0 + a);
        upper[0] -= a * h(0);
        diag[k - 1] += h(n - 2) * (1.0 + b);
        lower[k - 1] -= b * h(n - 2);

        for j in 1..k {
            let w = lower[j] / diag[j - 1];
            diag[j] -= w * upper[j - 1];
            rhs[j] -= w * rhs[j - 1];
        }
        let mut d2 = vec![0.0; n];
        d2[k] = rhs[k - 1] / diag[k - 1];
        for j in (0..k - 1).rev() {
            d2[j + 1] = (rhs[j] - upper[j] * d2[j + 2]) / diag[j];
        }
        d2[0] = (1.0 + a) * d2[1] - a * d2[2];
        d2[n - 1] = (1.0 + b) * d2[n - 2] - b * d2[n - 3];
        Ok(CubicSpline { x, y, d2 })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Spline value at `t`; 0 outside the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        if t < self.x[0] || t > *self.x.last().unwrap() {
            return 0.0;
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(j) => j.min(self.x.len() - 2),
            Err(j) => j - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.d2[i] + (b * b * b - b) * self.d2[i + 1]) * h * h / 6.0
    }

    /// Slopes at the two end knots.
    pub fn boundary_slopes(&self) -> (f64, f64) {
        let n = self.x.len();
        let h0 = self.x[1] - self.x[0];
        let s0 = (self.y[1] - self.y[0]) / h0 - h0 * (2.0 * self.d2[0] + self.d2[1]) / 6.0;
        let h1 = self.x[n - 1] - self.x[n - 2];
        let s1 =
            (self.y[n - 1] - self.y[n - 2]) / h1 + h1 * (self.d2[n - 2] + 2.0 * self.d2[n - 1]) / 6.0;
        (s0, s1)
    }

    /// Sum of |jump of the third derivative| across interior knots plus the
    /// third-derivative magnitudes at the ends. Scales the heuristic constant
    /// in the declared polynomial Fourier floor of sampled weights.
    pub fn third_derivative_jump_sum(&self) -> f64 {
        let n = self.x.len();
        let d3: Vec<f64> = (0..n - 1)
            .map(|i| (self.d2[i + 1] - self.d2[i]) / (self.x[i + 1] - self.x[i]))
            .collect();
        let mut total = d3[0].abs() + d3[n - 2].abs();
        for i in 1..n - 1 {
            total += (d3[i] - d3[i - 1]).abs();
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knot_values() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|&t| (t - 1.0).tanh()).collect();
        let s = CubicSpline::natural(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.eval(*xi) - yi).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolates_smooth_function_between_knots() {
        let x: Vec<f64> = (0..201).map(|i| -1.0 + i as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|&t| (-t * t).exp()).collect();
        let s = CubicSpline::natural(x, y).unwrap();
        // stay a few knots away from the ends, where the free boundary
        // condition costs accuracy
        for i in 0..100 {
            let t = -0.895 + i as f64 * 0.018;
            let want = (-t * t).exp();
            assert!((s.eval(t) - want).abs() < 1e-7, "at {t}");
        }
    }

    #[test]
    fn zero_outside_range() {
        let s = CubicSpline::natural(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(s.eval(-0.5), 0.0);
        assert_eq!(s.eval(2.5), 0.0);
    }

    #[test]
    fn not_a_knot_reproduces_cubics_exactly() {
        let p = |t: f64| 0.7 * t * t * t - 2.0 * t * t + 0.5 * t + 1.0;
        // deliberately non-uniform knots
        let x = vec![-1.0, -0.4, -0.1, 0.3, 0.35, 0.9, 1.7, 2.0];
        let y: Vec<f64> = x.iter().map(|&t| p(t)).collect();
        let s = CubicSpline::not_a_knot(x, y).unwrap();
        for i in 0..=120 {
            let t = -1.0 + 3.0 * i as f64 / 120.0;
            assert!((s.eval(t) - p(t)).abs() < 1e-12, "at {t}");
        }
    }

    #[test]
    fn not_a_knot_three_points_is_the_parabola() {
        let q = |t: f64| 2.0 * t * t - t + 3.0;
        let x = vec![0.0, 0.7, 1.8];
        let y: Vec<f64> = x.iter().map(|&t| q(t)).collect();
        let s = CubicSpline::not_a_knot(x, y).unwrap();
        for i in 0..=18 {
            let t = 0.1 * i as f64;
            assert!((s.eval(t) - q(t)).abs() < 1e-13, "at {t}");
        }
    }

    #[test]
    fn not_a_knot_tracks_ends_without_boundary_layer() {
        // a profile with nonzero curvature at the ends, where the natural
        // fit is ~1e-5 off but this one keeps full fourth-order accuracy
        let x: Vec<f64> = (0..=120).map(|i| -1.0 + i as f64 / 60.0).collect();
        let y: Vec<f64> =
            x.iter().map(|&t| (std::f64::consts::PI * t / 2.0).cos().powi(2)).collect();
        let s = CubicSpline::not_a_knot(x, y).unwrap();
        for i in 0..=600 {
            let t = -1.0 + i as f64 / 300.0;
            let want = (std::f64::consts::PI * t / 2.0).cos().powi(2);
            assert!((s.eval(t) - want).abs() < 2e-7, "at {t}");
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicSpline::natural(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(CubicSpline::natural(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_on_cubics_in_the_interior_limit() {
        // a natural spline is not exact on cubics near the ends, but a linear
        // function it must reproduce everywhere
        let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&t| 3.0 * t - 2.0).collect();
        let s = CubicSpline::natural(x, y).unwrap();
        for i in 0..80 {
            let t = i as f64 * 0.1;
            assert!((s.eval(t) - (3.0 * t - 2.0)).abs() < 1e-12);
        }
    }
}
