//! Fourier-multiplier calculus on periodic grids.

use num_complex::Complex;

use super::fields::{GridScalar, GridVector};
use super::grid::{Grid, Point};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Cached forward transform of a field, for applying several multipliers.
pub struct Spectrum<T: Scalar> {
    grid: Grid<T>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn of(f: &GridScalar<T>) -> Self {
        Self { grid: f.grid.clone(), coeffs: f.grid.plan().forward(&f.values) }
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Applies `m(k)` mode by mode and transforms back.
    pub fn apply<F: Fn(usize, Point<T>) -> Complex<T>>(&self, m: F) -> GridScalar<T> {
        let spec = self.coeffs.iter().enumerate().map(|(j, &z)| z * m(j, self.grid.wavevector(j))).collect();
        GridScalar { grid: self.grid.clone(), values: self.grid.plan().inverse(spec) }
    }

    /// Partial derivative with per-axis orders (`order[a]` derivatives along axis `a`).
    pub fn derivative(&self, order: [usize; 2]) -> Result<GridScalar<T>> {
        let total = order[0] + order[1];
        if total > 2 {
            return Err(CoreError::OrderTooHigh(total));
        }
        if self.grid.dim() == 1 && order[1] > 0 {
            return Err(CoreError::InvalidParameter("axis 1 on a 1-d grid".into()));
        }
        let g = &self.grid;
        Ok(self.apply(|j, k| derivative_symbol(g, j, k, order)))
    }
}

/// Symbol `Π (i k_a)^{m_a}` with the Nyquist mode removed for odd orders.
pub fn derivative_symbol<T: Scalar>(g: &Grid<T>, flat: usize, k: Point<T>, order: [usize; 2]) -> Complex<T> {
    let idx = g.split(flat);
    let mut z = Complex::new(T::one(), T::zero());
    for a in 0..g.dim() {
        let m = order[a];
        if m == 0 {
            continue;
        }
        if m % 2 == 1 && g.is_nyquist(idx[a]) {
            return Complex::new(T::zero(), T::zero());
        }
        let ik = Complex::new(T::zero(), k[a]);
        for _ in 0..m {
            z = z * ik;
        }
    }
    z
}

/// `∂^order f` for `|order| ≤ 2`.
pub fn spectral_derivative<T: Scalar>(f: &GridScalar<T>, order: [usize; 2]) -> Result<GridScalar<T>> {
    Spectrum::of(f).derivative(order)
}

fn axis_order(a: usize) -> [usize; 2] {
    let mut o = [0, 0];
    o[a] = 1;
    o
}

/// `∂_a f`.
pub fn partial<T: Scalar>(f: &GridScalar<T>, a: usize) -> GridScalar<T> {
    spectral_derivative(f, axis_order(a)).expect("first order on a valid axis")
}

/// `∂_a ∂_b f`.
pub fn second_partial<T: Scalar>(f: &GridScalar<T>, a: usize, b: usize) -> GridScalar<T> {
    let mut o = [0, 0];
    o[a] += 1;
    o[b] += 1;
    spectral_derivative(f, o).expect("second order on a valid axis")
}

pub fn gradient<T: Scalar>(f: &GridScalar<T>) -> GridVector<T> {
    let s = Spectrum::of(f);
    let components = (0..f.grid.dim()).map(|a| s.derivative(axis_order(a)).expect("valid axis")).collect();
    GridVector { grid: f.grid.clone(), components }
}

pub fn divergence<T: Scalar>(v: &GridVector<T>) -> GridScalar<T> {
    let mut out = GridScalar::zeros(&v.grid);
    for (a, c) in v.components.iter().enumerate() {
        out = &out + &partial(c, a);
    }
    out
}

pub fn laplacian<T: Scalar>(f: &GridScalar<T>) -> GridScalar<T> {
    Spectrum::of(f).apply(|_, k| {
        let k2 = k[0] * k[0] + k[1] * k[1];
        Complex::new(-k2, T::zero())
    })
}

/// Jacobian entries `J[i][j] = ∂_j v_i`.
pub fn jacobian<T: Scalar>(v: &GridVector<T>) -> Vec<Vec<GridScalar<T>>> {
    v.components.iter().map(|c| gradient(c).components).collect()
}

/// Hessian entries `H[i][j] = ∂_i ∂_j f`.
pub fn hessian<T: Scalar>(f: &GridScalar<T>) -> Vec<Vec<GridScalar<T>>> {
    let s = Spectrum::of(f);
    let n = f.grid.dim();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut o = [0, 0];
                    o[i] += 1;
                    o[j] += 1;
                    s.derivative(o).expect("second order")
                })
                .collect()
        })
        .collect()
}

/// Spectral energy `Σ |f̂|² h^n / N^n`, equal to `‖f‖₂²` by Parseval.
pub fn spectral_energy<T: Scalar>(f: &GridScalar<T>) -> T {
    let s = Spectrum::of(f);
    let scale = f.grid.cell_volume() / T::of_usize(f.grid.len());
    s.coeffs.iter().map(|z| z.norm_sqr()).sum::<T>() * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::build_grid;
    use std::f64::consts::TAU;

    #[test]
    fn derivative_of_sine() {
        let g = build_grid::<f64>(1, TAU, 64).unwrap();
        let f = GridScalar::from_fn(&g, |p| p[0].sin());
        let d = partial(&f, 0);
        for i in 0..g.len() {
            assert!((d.values[i] - g.node(i)[0].cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let f = GridScalar::constant(&g, 2.5);
        assert!(partial(&f, 1).max_abs() < 1e-12);
    }

    #[test]
    fn div_grad_is_laplacian() {
        let g = build_grid::<f64>(2, TAU, 64).unwrap();
        let f = GridScalar::from_fn(&g, |p| (p[0].sin() * (2.0 * p[1]).cos()).exp());
        let a = divergence(&gradient(&f));
        let b = laplacian(&f);
        assert!((&a - &b).max_abs() < 1e-10);
    }

    #[test]
    fn third_order_rejected() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let f = GridScalar::constant(&g, 1.0);
        assert_eq!(spectral_derivative(&f, [2, 1]).unwrap_err(), CoreError::OrderTooHigh(3));
    }

    #[test]
    fn parseval() {
        let g = build_grid::<f64>(2, 3.0, 16).unwrap();
        let f = GridScalar::from_fn(&g, |p| (p[0] * 1.3).sin() + p[1] * p[1]);
        let direct = f.inner(&f);
        assert!(((spectral_energy(&f) - direct) / direct).abs() < 1e-8);
    }

    #[test]
    fn mixed_partials_commute() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let f = GridScalar::from_fn(&g, |p| (p[0] + 2.0 * p[1]).sin());
        let h = hessian(&f);
        assert!((&h[0][1] - &h[1][0]).max_abs() < 1e-12);
        let exact = GridScalar::from_fn(&g, |p| -2.0 * (p[0] + 2.0 * p[1]).sin());
        assert!((&h[0][1] - &exact).max_abs() < 1e-10);
    }
}
