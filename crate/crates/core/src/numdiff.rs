//! Central finite-difference oracles.
//!
//! These are verification tools: they are kept independent of the analytic
//! gradient/Hessian routines they are used to cross-check.

use ndarray::{Array1, Array2};

/// Central-difference gradient of a scalar function.
pub fn central_gradient<F>(f: F, at: &Array1<f64>, step: f64) -> Array1<f64>
where
    F: Fn(&Array1<f64>) -> f64,
{
    let d = at.len();
    let mut grad = Array1::zeros(d);
    let mut probe = at.clone();
    for i in 0..d {
        probe[i] = at[i] + step;
        let plus = f(&probe);
        probe[i] = at[i] - step;
        let minus = f(&probe);
        probe[i] = at[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Central-difference Jacobian of a gradient function, symmetrized.
///
/// Differencing an analytic gradient keeps the truncation error at
/// `O(step^2)` without the `O(eps/step^2)` rounding blow-up of double
/// differencing, which is what the tight Hessian comparisons need.
pub fn central_hessian_of_gradient<G>(grad: G, at: &Array1<f64>, step: f64) -> Array2<f64>
where
    G: Fn(&Array1<f64>) -> Array1<f64>,
{
    let d = at.len();
    let mut hess = Array2::zeros((d, d));
    let mut probe = at.clone();
    for j in 0..d {
        probe[j] = at[j] + step;
        let plus = grad(&probe);
        probe[j] = at[j] - step;
        let minus = grad(&probe);
        probe[j] = at[j];
        for i in 0..d {
            hess[[i, j]] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    let t = hess.t().to_owned();
    hess.zip_mut_with(&t, |a, &b| *a = 0.5 * (*a + b));
    hess
}

/// Second central difference `(f(x+step) - 2 f(x) + f(x-step)) / step^2`
/// along one coordinate.
pub fn second_difference<F>(f: F, at: f64, step: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (f(at + step) - 2.0 * f(at) + f(at - step)) / (step * step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn gradient_of_quadratic() {
        let f = |v: &Array1<f64>| v[0] * v[0] + 2.0 * v[0] * v[1] + 3.0 * v[1] * v[1];
        let g = central_gradient(f, &array![1.0, 2.0], 1e-6);
        assert_abs_diff_eq!(g[0], 6.0, epsilon = 1e-7);
        assert_abs_diff_eq!(g[1], 14.0, epsilon = 1e-7);
    }

    #[test]
    fn hessian_of_quadratic() {
        let g = |v: &Array1<f64>| array![2.0 * v[0] + 2.0 * v[1], 2.0 * v[0] + 6.0 * v[1]];
        let h = central_hessian_of_gradient(g, &array![0.3, -0.7], 1e-5);
        assert_abs_diff_eq!(h[[0, 0]], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h[[0, 1]], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h[[1, 1]], 6.0, epsilon = 1e-9);
    }

    #[test]
    fn second_difference_of_parabola() {
        let c = 1.7;
        let d2 = second_difference(|a| c * a * a, 0.0, 0.05);
        assert_abs_diff_eq!(d2, 2.0 * c, epsilon = 1e-9);
    }
}
