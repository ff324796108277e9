//! Periodic cubic B-spline interpolation (C² with analytic gradient).

use num_complex::Complex;

use super::fields::{GridScalar, GridVector};
use super::grid::{Grid, Point};
use crate::scalar::Scalar;

/// Interpolating periodic cubic spline of a grid field.
#[derive(Clone, Debug)]
pub struct PeriodicSpline<T: Scalar> {
    grid: Grid<T>,
    coeffs: Vec<T>,
}

#[inline]
fn weights<T: Scalar>(t: T) -> ([T; 4], [T; 4]) {
    let six = T::of(6.0);
    let half = T::of(0.5);
    let one = T::one();
    let s = one - t;
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        s * s * s / six,
        (T::of(3.0) * t3 - T::of(6.0) * t2 + T::of(4.0)) / six,
        (T::of(-3.0) * t3 + T::of(3.0) * t2 + T::of(3.0) * t + one) / six,
        t3 / six,
    ];
    let dw = [
        -(s * s) * half,
        (T::of(3.0) * t2 - T::of(4.0) * t) * half,
        (T::of(-3.0) * t2 + T::of(2.0) * t + one) * half,
        t2 * half,
    ];
    (w, dw)
}

impl<T: Scalar> PeriodicSpline<T> {
    pub fn new(f: &GridScalar<T>) -> Self {
        let g = &f.grid;
        let n = g.points();
        let sym: Vec<T> = (0..n)
            .map(|j| (T::of(4.0) + T::of(2.0) * (T::TAU() * T::of_usize(j) / T::of_usize(n)).cos()) / T::of(6.0))
            .collect();
        let spec: Vec<Complex<T>> = g
            .plan()
            .forward(&f.values)
            .into_iter()
            .enumerate()
            .map(|(k, z)| {
                let [i, j] = g.split(k);
                let d = if g.dim() == 2 { sym[i] * sym[j] } else { sym[i] };
                z / d
            })
            .collect();
        Self { grid: g.clone(), coeffs: g.plan().inverse(spec) }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    fn locate(&self, x: T) -> (usize, T) {
        let n = self.grid.points();
        let s = self.grid.wrap(x) / self.grid.spacing();
        let f = s.floor();
        let t = s - f;
        let i = f.to_usize().unwrap_or(0) % n;
        (i, t)
    }

    /// Value at an arbitrary point.
    #[inline]
    pub fn eval(&self, p: Point<T>) -> T {
        self.eval_grad(p).0
    }

    /// Value and gradient at an arbitrary point.
    pub fn eval_grad(&self, p: Point<T>) -> (T, Point<T>) {
        let n = self.grid.points();
        let inv_h = T::one() / self.grid.spacing();
        let (i0, t0) = self.locate(p[0]);
        let (w0, d0) = weights(t0);
        if self.grid.dim() == 1 {
            let mut v = T::zero();
            let mut g = T::zero();
            for a in 0..4 {
                let c = self.coeffs[(i0 + n + a - 1) % n];
                v = v + w0[a] * c;
                g = g + d0[a] * c;
            }
            return (v, [g * inv_h, T::zero()]);
        }
        let (i1, t1) = self.locate(p[1]);
        let (w1, d1) = weights(t1);
        let mut v = T::zero();
        let mut gx = T::zero();
        let mut gy = T::zero();
        for a in 0..4 {
            let row = ((i0 + n + a - 1) % n) * n;
            let mut rv = T::zero();
            let mut rd = T::zero();
            for b in 0..4 {
                let c = self.coeffs[row + (i1 + n + b - 1) % n];
                rv = rv + w1[b] * c;
                rd = rd + d1[b] * c;
            }
            v = v + w0[a] * rv;
            gx = gx + d0[a] * rv;
            gy = gy + w0[a] * rd;
        }
        (v, [gx * inv_h, gy * inv_h])
    }
}

/// Spline interpolant of every component of a vector field.
#[derive(Clone, Debug)]
pub struct VectorSpline<T: Scalar> {
    comps: Vec<PeriodicSpline<T>>,
}

impl<T: Scalar> VectorSpline<T> {
    pub fn new(v: &GridVector<T>) -> Self {
        Self { comps: v.components.iter().map(PeriodicSpline::new).collect() }
    }

    #[inline]
    pub fn eval(&self, p: Point<T>) -> Point<T> {
        let mut out = [T::zero(); 2];
        for (a, s) in self.comps.iter().enumerate() {
            out[a] = s.eval(p);
        }
        out
    }

    /// Value and Jacobian `J[i][j] = ∂_j v_i`.
    #[inline]
    pub fn eval_jac(&self, p: Point<T>) -> (Point<T>, [[T; 2]; 2]) {
        let mut out = [T::zero(); 2];
        let mut jac = [[T::zero(); 2]; 2];
        for (a, s) in self.comps.iter().enumerate() {
            let (v, g) = s.eval_grad(p);
            out[a] = v;
            jac[a] = g;
        }
        (out, jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::build_grid;
    use std::f64::consts::TAU;

    #[test]
    fn interpolates_nodes() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let f = GridScalar::from_fn(&g, |p| (p[0].sin() * p[1].cos()).exp());
        let s = PeriodicSpline::new(&f);
        for i in 0..g.len() {
            assert!((s.eval(g.node(i)) - f.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fourth_order_off_grid() {
        let mut errs = vec![];
        for n in [16, 32, 64] {
            let g = build_grid::<f64>(1, TAU, n).unwrap();
            let f = GridScalar::from_fn(&g, |p| p[0].sin());
            let s = PeriodicSpline::new(&f);
            let e = (0..200)
                .map(|k| {
                    let x = k as f64 * 0.0313 + 0.01;
                    let (v, d) = s.eval_grad([x, 0.0]);
                    (v - x.sin()).abs().max((d[0] - x.cos()).abs() / 10.0)
                })
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 7.0 && errs[1] / errs[2] > 7.0, "{errs:?}");
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let g = build_grid::<f64>(2, 3.0, 16).unwrap();
        let f = GridScalar::from_fn(&g, |p| (2.0 * p[0]).sin() + (p[0] - p[1]).cos());
        let s = PeriodicSpline::new(&f);
        let p = [1.234, 2.71];
        let (_, gr) = s.eval_grad(p);
        let e = 1e-6;
        let fx = (s.eval([p[0] + e, p[1]]) - s.eval([p[0] - e, p[1]])) / (2.0 * e);
        let fy = (s.eval([p[0], p[1] + e]) - s.eval([p[0], p[1] - e])) / (2.0 * e);
        assert!((gr[0] - fx).abs() < 1e-6 && (gr[1] - fy).abs() < 1e-6);
    }

    #[test]
    fn periodic_wrap() {
        let g = build_grid::<f64>(1, 2.0, 8).unwrap();
        let f = GridScalar::from_fn(&g, |p| (std::f64::consts::PI * p[0]).cos());
        let s = PeriodicSpline::new(&f);
        assert!((s.eval([0.3, 0.0]) - s.eval([2.3, 0.0])).abs() < 1e-13);
        assert!((s.eval([-1.7, 0.0]) - s.eval([0.3, 0.0])).abs() < 1e-13);
    }
}
