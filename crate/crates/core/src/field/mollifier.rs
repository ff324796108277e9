use num_complex::Complex;

use super::fields::GridScalar;
use super::grid::Grid;
use super::spectral::derivative_symbol;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Discrete rescaled bump `η_ε` with unit discrete mass.
#[derive(Clone, Debug)]
pub struct MollifierKernel<T: Scalar> {
    pub grid: Grid<T>,
    pub epsilon: T,
    pub values: GridScalar<T>,
    spectrum: Vec<Complex<T>>,
}

/// Reference bump `exp(-1/(1-r²))` on `r < 1`, zero outside.
#[inline]
pub fn reference_bump<T: Scalar>(r2: T) -> T {
    if r2 < T::one() {
        (-T::one() / (T::one() - r2)).exp()
    } else {
        T::zero()
    }
}

/// Admissible radius range `[2h, L/4]`.
pub fn epsilon_range<T: Scalar>(grid: &Grid<T>) -> (T, T) {
    (T::of(2.0) * grid.spacing(), grid.period() / T::of(4.0))
}

/// Builds `η_ε` on the grid, normalized so that `Σ η_ε h^n = 1`.
pub fn mollifier<T: Scalar>(grid: &Grid<T>, epsilon: T) -> Result<MollifierKernel<T>> {
    let (lo, hi) = epsilon_range(grid);
    let slack = T::one() + T::of(1e-12);
    if !(epsilon * slack >= lo && epsilon <= hi * slack) {
        return Err(CoreError::EpsilonOutOfRange { epsilon: epsilon.to64(), min: lo.to64(), max: hi.to64() });
    }
    let mut values: Vec<T> = (0..grid.len())
        .map(|i| {
            let x = grid.centered(i);
            let r2 = (x[0] * x[0] + x[1] * x[1]) / (epsilon * epsilon);
            reference_bump(r2)
        })
        .collect();
    let mass = values.iter().copied().sum::<T>() * grid.cell_volume();
    for v in &mut values {
        *v = *v / mass;
    }
    let hn = grid.cell_volume();
    let spectrum = grid.plan().forward(&values).into_iter().map(|z| z * hn).collect();
    Ok(MollifierKernel { grid: grid.clone(), epsilon, values: GridScalar { grid: grid.clone(), values }, spectrum })
}

impl<T: Scalar> MollifierKernel<T> {
    /// Fourier multiplier of the kernel (transform times `h^n`).
    pub fn spectrum(&self) -> &[Complex<T>] {
        &self.spectrum
    }

    pub fn mass(&self) -> T {
        self.values.integral()
    }

    /// Periodic convolution `η_ε ⋆ f`.
    pub fn convolve(&self, f: &GridScalar<T>) -> Result<GridScalar<T>> {
        if f.grid != self.grid {
            return Err(CoreError::GridMismatch);
        }
        let plan = self.grid.plan();
        let spec = plan.forward(&f.values).into_iter().zip(&self.spectrum).map(|(a, &b)| a * b).collect();
        Ok(GridScalar { grid: self.grid.clone(), values: plan.inverse(spec) })
    }

    /// Kernel `η_ε ⋆ η_ε`, as a field sampled at centered offsets.
    pub fn self_convolution(&self) -> GridScalar<T> {
        self.convolve(&self.values).expect("same grid")
    }

    /// Discrete `∫ x^α ∂^β η_ε dx` with a spectral derivative.
    pub fn moment(&self, alpha: [usize; 2], beta: [usize; 2]) -> Result<T> {
        if alpha[0] + alpha[1] > 2 {
            return Err(CoreError::OrderTooHigh(alpha[0] + alpha[1]));
        }
        if beta[0] + beta[1] > 2 {
            return Err(CoreError::OrderTooHigh(beta[0] + beta[1]));
        }
        let g = &self.grid;
        let spec = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(j, &z)| z * derivative_symbol(g, j, g.wavevector(j), beta) / g.cell_volume())
            .collect();
        let d = g.plan().inverse(spec);
        let mut acc = T::zero();
        for (i, &v) in d.iter().enumerate() {
            let x = g.centered(i);
            acc = acc + x[0].powi(alpha[0] as i32) * x[1].powi(alpha[1] as i32) * v;
        }
        Ok(acc * g.cell_volume())
    }
}

/// Free-function form of [`MollifierKernel::convolve`].
pub fn convolve<T: Scalar>(f: &GridScalar<T>, kernel: &MollifierKernel<T>) -> Result<GridScalar<T>> {
    kernel.convolve(f)
}

/// Free-function form of [`MollifierKernel::moment`].
pub fn kernel_moment<T: Scalar>(kernel: &MollifierKernel<T>, alpha: [usize; 2], beta: [usize; 2]) -> Result<T> {
    kernel.moment(alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::build_grid;
    use crate::field::spectral::partial;
    use std::f64::consts::TAU;

    fn unit(a: usize) -> [usize; 2] {
        let mut e = [0, 0];
        e[a] = 1;
        e
    }

    #[test]
    fn unit_mass_support_symmetry() {
        for dim in [1, 2] {
            let g = build_grid::<f64>(dim, TAU, 32).unwrap();
            let k = mollifier(&g, TAU / 8.0).unwrap();
            assert!((k.mass() - 1.0).abs() < 1e-10);
            for i in 0..g.len() {
                let x = g.centered(i);
                if (x[0] * x[0] + x[1] * x[1]).sqrt() > k.epsilon {
                    assert_eq!(k.values.values[i], 0.0);
                }
                assert!(k.values.values[i] >= 0.0);
                let idx = g.split(i);
                let mirror = g.flat([(32 - idx[0]) % 32, if dim == 2 { (32 - idx[1]) % 32 } else { 0 }]);
                assert_eq!(k.values.values[i], k.values.values[mirror]);
            }
        }
    }

    #[test]
    fn radius_range_enforced() {
        let g = build_grid::<f64>(1, TAU, 64).unwrap();
        assert!(mollifier(&g, g.spacing()).is_err());
        assert!(mollifier(&g, TAU / 3.0).is_err());
        assert!(mollifier(&g, 2.0 * g.spacing()).is_ok());
    }

    #[test]
    fn constants_are_preserved() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let k = mollifier(&g, TAU / 8.0).unwrap();
        let f = k.convolve(&GridScalar::constant(&g, 1.7)).unwrap();
        for v in f.values {
            assert!((v - 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_multiplier_matches_closed_form() {
        // η_ε ⋆ cos = m(1) cos, with m(1) = Σ η(x) cos(x) h.
        let g = build_grid::<f64>(1, TAU, 64).unwrap();
        let f = GridScalar::from_fn(&g, |p| p[0].cos());
        let mut prev = f64::INFINITY;
        for eps in [TAU / 4.0, TAU / 8.0, TAU / 16.0, 2.0 * g.spacing()] {
            let k = mollifier(&g, eps).unwrap();
            let m: f64 = (0..64).map(|i| k.values.values[i] * g.centered(i)[0].cos()).sum::<f64>() * g.spacing();
            let fe = k.convolve(&f).unwrap();
            for i in 0..64 {
                assert!((fe.values[i] - m * f.values[i]).abs() < 1e-12);
            }
            let err = (1.0 - m).abs();
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn convolution_is_associative() {
        let g = build_grid::<f64>(1, TAU, 64).unwrap();
        let k = mollifier(&g, TAU / 16.0).unwrap();
        let f = GridScalar::from_fn(&g, |p| (3.0 * p[0]).sin() + p[0].cos().powi(3));
        let twice = k.convolve(&k.convolve(&f).unwrap()).unwrap();
        let kk = k.self_convolution();
        let direct: Vec<f64> = (0..64)
            .map(|i| (0..64).map(|j| kk.values[(i + 64 - j) % 64] * f.values[j]).sum::<f64>() * g.spacing())
            .collect();
        for i in 0..64 {
            assert!((twice.values[i] - direct[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_commutes_with_derivative() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let k = mollifier(&g, TAU / 16.0).unwrap();
        let f = GridScalar::from_fn(&g, |p| (p[0].sin() + p[1].cos()).exp());
        let a = partial(&k.convolve(&f).unwrap(), 1);
        let b = k.convolve(&partial(&f, 1)).unwrap();
        assert!((&a - &b).max_abs() / a.max_abs() < 1e-8);
    }

    #[test]
    fn moments_match_integration_by_parts() {
        let g = build_grid::<f64>(2, TAU, 64).unwrap();
        for eps in [TAU / 16.0, 4.0 * g.spacing()] {
            let k = mollifier(&g, eps).unwrap();
            assert!((k.moment([0, 0], [0, 0]).unwrap() - 1.0).abs() < 1e-8);
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { -1.0 } else { 0.0 };
                    assert!((k.moment(unit(i), unit(j)).unwrap() - want).abs() < 5e-3);
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            let mut alpha = unit(i);
                            alpha[j] += 1;
                            let mut beta = unit(a);
                            beta[b] += 1;
                            let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
                            let want = d(i, a) * d(j, b) + d(i, b) * d(j, a);
                            assert!((k.moment(alpha, beta).unwrap() - want).abs() < 5e-3);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mass_exact_in_single_precision() {
        let g = build_grid::<f32>(1, 6.0, 64).unwrap();
        let k = mollifier(&g, 0.75f32).unwrap();
        assert!((k.mass() - 1.0).abs() < 1e-5);
    }
}
