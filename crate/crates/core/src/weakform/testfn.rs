use crate::error::{CoreError, Result};
use crate::field::{gradient, hessian, Grid, GridScalar, GridVector, Point};
use crate::scalar::Scalar;

/// Compactly supported bump `φ(x) = exp(1 − 1/(1 − |x−c|²/R²))`, sampled on the grid.
/// Derivatives are spectral derivatives of the samples, so their grid sums vanish.
#[derive(Clone, Debug)]
pub struct TestFunction<T: Scalar> {
    pub center: Point<T>,
    pub radius: T,
    pub values: GridScalar<T>,
    pub grad: GridVector<T>,
    /// `hess[i][j] = ∂_i∂_j φ`.
    pub hess: Vec<Vec<GridScalar<T>>>,
}

fn bump_value<T: Scalar>(rho: T) -> T {
    if rho >= T::one() {
        return T::zero();
    }
    (T::one() - T::one() / (T::one() - rho)).exp()
}

/// Builds a bump whose support lies inside the central half of the box.
pub fn bump_test_function<T: Scalar>(grid: &Grid<T>, center: Point<T>, radius: T) -> Result<TestFunction<T>> {
    let l = grid.period();
    let q = l / T::of(4.0);
    if !(radius > T::zero()) {
        return Err(CoreError::InvalidParameter("radius must be positive".into()));
    }
    for a in 0..grid.dim() {
        if center[a] - radius < q || center[a] + radius > l - q {
            return Err(CoreError::SupportViolation);
        }
    }
    let n = grid.dim();
    let r2 = radius * radius;
    let values = GridScalar::from_fn(grid, |p| {
        let d0 = p[0] - center[0];
        let d1 = if n == 2 { p[1] - center[1] } else { T::zero() };
        bump_value((d0 * d0 + d1 * d1) / r2)
    });
    Ok(TestFunction { center, radius, grad: gradient(&values), hess: hessian(&values), values })
}

impl<T: Scalar> TestFunction<T> {
    /// The same bump scaled by `s` (derivatives included).
    pub fn scaled(&self, s: T) -> Self {
        Self {
            center: self.center,
            radius: self.radius,
            values: self.values.scale(s),
            grad: self.grad.scale(s),
            hess: self.hess.iter().map(|r| r.iter().map(|h| h.scale(s)).collect()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_grid;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn nonnegative_with_vanishing_derivative_integrals() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let phi = bump_test_function(&g, [PI, PI], 1.4).unwrap();
        assert!(phi.values.values.iter().all(|&v| v >= 0.0));
        for c in &phi.grad.components {
            assert!(c.integral().abs() < 1e-12);
        }
        for row in &phi.hess {
            for h in row {
                assert!(h.integral().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn support_precondition() {
        let g = build_grid::<f64>(1, TAU, 64).unwrap();
        assert_eq!(bump_test_function(&g, [PI, 0.0], 1.7).unwrap_err(), CoreError::SupportViolation);
        assert!(bump_test_function(&g, [PI, 0.0], 1.5).is_ok());
    }

    #[test]
    fn spectral_derivatives_match_closed_form_on_fine_grid() {
        let g = build_grid::<f64>(1, TAU, 256).unwrap();
        let r = 1.5;
        let phi = bump_test_function(&g, [PI, 0.0], r).unwrap();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..g.len() {
            let d = g.node(i)[0] - PI;
            let rho = d * d / (r * r);
            if rho >= 1.0 {
                continue;
            }
            let s = 1.0 - rho;
            let v = (1.0 - 1.0 / s).exp();
            let g1 = -v / (s * s);
            let g2 = v * (2.0 * rho - 1.0) / s.powi(4);
            let ra = 2.0 * d / (r * r);
            let exact = g2 * ra * ra + g1 * 2.0 / (r * r);
            scale = scale.max(exact.abs());
            worst = worst.max((phi.hess[0][0].values[i] - exact).abs());
        }
        assert!(worst < 1e-3 * scale, "{worst} vs {scale}");
    }
}
