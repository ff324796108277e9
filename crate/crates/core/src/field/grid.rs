use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Point in the box; only the first `dim` entries are meaningful.
pub type Point<T> = [T; 2];

/// Forward and inverse FFT plans for one grid size.
pub struct SpectralPlan<T: Scalar> {
    n: usize,
    dim: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> SpectralPlan<T> {
    fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Self { n, dim, fwd, inv }
    }

    fn run(&self, fft: &Arc<dyn Fft<T>>, buf: &mut [Complex<T>]) {
        let n = self.n;
        if self.dim == 1 {
            fft.process(buf);
            return;
        }
        // rows (axis 1, contiguous)
        fft.process(buf);
        // columns via transpose
        let mut t = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = buf[i * n + j];
            }
        }
        fft.process(&mut t);
        for i in 0..n {
            for j in 0..n {
                buf[i * n + j] = t[j * n + i];
            }
        }
    }

    /// Unnormalized forward transform of real data.
    pub fn forward(&self, data: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = data.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.run(&self.fwd, &mut buf);
        buf
    }

    /// Inverse transform (normalized by the node count), real part.
    pub fn inverse(&self, mut spec: Vec<Complex<T>>) -> Vec<T> {
        self.run(&self.inv, &mut spec);
        let scale = T::one() / T::of_usize(spec.len());
        spec.into_iter().map(|z| z.re * scale).collect()
    }
}

/// Uniform periodic grid on `[0, L)^dim`.
#[derive(Clone)]
pub struct Grid<T: Scalar> {
    dim: usize,
    l: T,
    n: usize,
    h: T,
    plan: Arc<SpectralPlan<T>>,
}

impl<T: Scalar> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("L", &self.l)
            .field("N", &self.n)
            .field("h", &self.h)
            .finish()
    }
}

impl<T: Scalar> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.l == other.l
    }
}

/// Builds a grid, rejecting odd or tiny point counts.
pub fn build_grid<T: Scalar>(dim: usize, l: T, n: usize) -> Result<Grid<T>> {
    Grid::new(dim, l, n)
}

impl<T: Scalar> Grid<T> {
    pub fn new(dim: usize, l: T, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(CoreError::BadDimension(dim));
        }
        if n % 2 == 1 {
            return Err(CoreError::OddN(n));
        }
        if n < 8 {
            return Err(CoreError::TooFewPoints(n));
        }
        if !(l > T::zero()) || !l.is_finite() {
            return Err(CoreError::InvalidParameter(format!("period L = {l} must be positive")));
        }
        Ok(Self { dim, l, n, h: l / T::of_usize(n), plan: Arc::new(SpectralPlan::new(dim, n)) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn period(&self) -> T {
        self.l
    }
    pub fn points(&self) -> usize {
        self.n
    }
    pub fn spacing(&self) -> T {
        self.h
    }
    /// Total number of nodes, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Quadrature weight `h^dim`.
    pub fn cell_volume(&self) -> T {
        self.h.powi(self.dim as i32)
    }
    /// Box volume `L^dim`.
    pub fn volume(&self) -> T {
        self.l.powi(self.dim as i32)
    }
    pub fn center(&self) -> Point<T> {
        let m = self.l / T::of(2.0);
        [m, if self.dim == 2 { m } else { T::zero() }]
    }
    pub fn plan(&self) -> &SpectralPlan<T> {
        &self.plan
    }

    /// Per-axis indices of a flat (row-major) index.
    #[inline]
    pub fn split(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    #[inline]
    pub fn flat(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.n + idx[1]
        }
    }

    /// Node coordinate `i h` per axis.
    #[inline]
    pub fn node(&self, flat: usize) -> Point<T> {
        let [i, j] = self.split(flat);
        [T::of_usize(i) * self.h, T::of_usize(j) * self.h]
    }

    /// Signed offset of axis index `i` in `[-L/2, L/2)`.
    #[inline]
    pub fn centered_axis(&self, i: usize) -> T {
        if i < self.n / 2 {
            T::of_usize(i) * self.h
        } else {
            -(T::of_usize(self.n - i) * self.h)
        }
    }

    /// Node offset from the origin in centered (periodic) coordinates.
    #[inline]
    pub fn centered(&self, flat: usize) -> Point<T> {
        let [i, j] = self.split(flat);
        let y = if self.dim == 2 { self.centered_axis(j) } else { T::zero() };
        [self.centered_axis(i), y]
    }

    /// Angular wavenumber for FFT index `j`.
    #[inline]
    pub fn wavenumber_axis(&self, j: usize) -> T {
        let base = T::TAU() / self.l;
        if j <= self.n / 2 {
            base * T::of_usize(j)
        } else {
            -(base * T::of_usize(self.n - j))
        }
    }

    /// Wavevector of a flat spectral index.
    #[inline]
    pub fn wavevector(&self, flat: usize) -> Point<T> {
        let [i, j] = self.split(flat);
        let ky = if self.dim == 2 { self.wavenumber_axis(j) } else { T::zero() };
        [self.wavenumber_axis(i), ky]
    }

    /// True when axis index `j` is the Nyquist mode.
    #[inline]
    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    /// Wraps a coordinate into `[0, L)`.
    #[inline]
    pub fn wrap(&self, x: T) -> T {
        let r = x - (x / self.l).floor() * self.l;
        if r >= self.l {
            r - self.l
        } else {
            r
        }
    }

    /// Minimal-image displacement `a - b` per axis.
    #[inline]
    pub fn min_image(&self, d: T) -> T {
        d - (d / self.l).round() * self.l
    }
}
