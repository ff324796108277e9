use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;

use super::grid::{Grid, Point};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Real samples on every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridScalar<T: Scalar> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> GridScalar<T> {
    pub fn new(grid: &Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at every node.
    pub fn from_fn<F: Fn(Point<T>) -> T + Sync>(grid: &Grid<T>, f: F) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.node(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(T) -> T + Sync>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), values: self.values.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with<F: Fn(T, T) -> T + Sync>(&self, other: &Self, f: F) -> Result<Self> {
        self.check(other)?;
        let values = self.values.par_iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn check(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            Err(CoreError::GridMismatch)
        } else {
            Ok(())
        }
    }

    /// Quadrature `Σ f h^n`, summed in index order.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.cell_volume()
    }

    /// `⟨f, g⟩ = Σ f g h^n`.
    pub fn inner(&self, other: &Self) -> T {
        debug_assert!(self.grid == other.grid);
        self.values.iter().zip(&other.values).map(|(&a, &b)| a * b).sum::<T>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl<T: Scalar> $tr<&GridScalar<T>> for &GridScalar<T> {
            type Output = GridScalar<T>;
            fn $m(self, rhs: &GridScalar<T>) -> GridScalar<T> {
                assert!(self.grid == rhs.grid, "grid mismatch");
                let values = self.values.iter().zip(&rhs.values).map(|(&a, &b)| a $op b).collect();
                GridScalar { grid: self.grid.clone(), values }
            }
        }
    };
}
scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);

impl<T: Scalar> Neg for &GridScalar<T> {
    type Output = GridScalar<T>;
    fn neg(self) -> GridScalar<T> {
        self.map(|v| -v)
    }
}

/// Vector field with one component per spatial axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVector<T: Scalar> {
    pub grid: Grid<T>,
    pub components: Vec<GridScalar<T>>,
}

impl<T: Scalar> GridVector<T> {
    pub fn new(components: Vec<GridScalar<T>>) -> Result<Self> {
        let grid = components.first().ok_or(CoreError::InvalidParameter("no components".into()))?.grid.clone();
        if components.len() != grid.dim() {
            return Err(CoreError::InvalidParameter(format!(
                "{} components on a {}-d grid",
                components.len(),
                grid.dim()
            )));
        }
        for c in &components {
            if c.grid != grid {
                return Err(CoreError::GridMismatch);
            }
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, [T::zero(); 2])
    }

    pub fn constant(grid: &Grid<T>, v: Point<T>) -> Self {
        let components = (0..grid.dim()).map(|a| GridScalar::constant(grid, v[a])).collect();
        Self { grid: grid.clone(), components }
    }

    /// Unit vector `e_k`.
    pub fn unit(grid: &Grid<T>, k: usize) -> Self {
        let mut v = [T::zero(); 2];
        v[k] = T::one();
        Self::constant(grid, v)
    }

    pub fn from_fn<F: Fn(Point<T>) -> Point<T> + Sync>(grid: &Grid<T>, f: F) -> Self {
        let pts: Vec<Point<T>> = (0..grid.len()).into_par_iter().map(|i| f(grid.node(i))).collect();
        let components =
            (0..grid.dim()).map(|a| GridScalar { grid: grid.clone(), values: pts.iter().map(|p| p[a]).collect() }).collect();
        Self { grid: grid.clone(), components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn at(&self, i: usize) -> Point<T> {
        let mut p = [T::zero(); 2];
        for (a, c) in self.components.iter().enumerate() {
            p[a] = c.values[i];
        }
        p
    }

    pub fn dot(&self, other: &Self) -> GridScalar<T> {
        let mut out = GridScalar::zeros(&self.grid);
        for (a, b) in self.components.iter().zip(&other.components) {
            for ((o, &x), &y) in out.values.iter_mut().zip(&a.values).zip(&b.values) {
                *o = *o + x * y;
            }
        }
        out
    }

    pub fn mul_scalar(&self, f: &GridScalar<T>) -> Self {
        Self { grid: self.grid.clone(), components: self.components.iter().map(|c| c * f).collect() }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { grid: self.grid.clone(), components: self.components.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            grid: self.grid.clone(),
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            grid: self.grid.clone(),
            components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect(),
        }
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> GridScalar<T> {
        let sq = self.dot(self);
        sq.map(|v| v.sqrt())
    }

    /// `a·self + b·other`, used for time interpolation.
    pub fn lerp(&self, other: &Self, w: T) -> Self {
        let a = T::one() - w;
        Self {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(x, y)| GridScalar {
                    grid: self.grid.clone(),
                    values: x.values.iter().zip(&y.values).map(|(&p, &q)| a * p + w * q).collect(),
                })
                .collect(),
        }
    }
}

/// Time-dependent vector field sampled at increasing instants on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGridVector<T: Scalar> {
    pub times: Vec<T>,
    pub slices: Vec<GridVector<T>>,
}

impl<T: Scalar> TimeGridVector<T> {
    pub fn new(times: Vec<T>, slices: Vec<GridVector<T>>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(CoreError::TimeGrid("times and slices must be non-empty and of equal length".into()));
        }
        if times[0] != T::zero() {
            return Err(CoreError::TimeGrid("first time must be 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::TimeGrid("times must be strictly increasing".into()));
        }
        let g = &slices[0].grid;
        if slices.iter().any(|s| &s.grid != g) {
            return Err(CoreError::GridMismatch);
        }
        Ok(Self { times, slices })
    }

    /// Time-independent field on `[0, T]`.
    pub fn steady(field: GridVector<T>, t_final: T) -> Self {
        Self { times: vec![T::zero(), t_final], slices: vec![field.clone(), field] }
    }

    /// Samples `f(t, x)` at `steps + 1` uniform instants.
    pub fn from_fn<F: Fn(T, Point<T>) -> Point<T> + Sync>(grid: &Grid<T>, t_final: T, steps: usize, f: F) -> Self {
        let times: Vec<T> = (0..=steps).map(|m| t_final * T::of_usize(m) / T::of_usize(steps)).collect();
        let slices = times.iter().map(|&t| GridVector::from_fn(grid, |p| f(t, p))).collect();
        Self { times, slices }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.slices[0].grid
    }

    pub fn final_time(&self) -> T {
        *self.times.last().expect("non-empty")
    }

    /// Bracketing slice index and linear weight for time `t` (clamped to `[0, T]`).
    pub fn locate(&self, t: T) -> (usize, T) {
        locate_time(&self.times, t)
    }

    /// Linear interpolation in time.
    pub fn slice_at(&self, t: T) -> GridVector<T> {
        let (i, w) = self.locate(t);
        if w == T::zero() {
            self.slices[i].clone()
        } else {
            self.slices[i].lerp(&self.slices[i + 1], w)
        }
    }

    /// Applies a spatial map to every slice.
    pub fn map_slices<F: Fn(&GridVector<T>) -> GridVector<T>>(&self, f: F) -> Self {
        Self { times: self.times.clone(), slices: self.slices.iter().map(f).collect() }
    }
}

/// Index `i` and weight `w` such that `t ≈ (1-w) times[i] + w times[i+1]`.
pub fn locate_time<T: Scalar>(times: &[T], t: T) -> (usize, T) {
    let last = times.len() - 1;
    if last == 0 || t <= times[0] {
        return (0, T::zero());
    }
    if t >= times[last] {
        return (last, T::zero());
    }
    let i = match times.binary_search_by(|s| s.partial_cmp(&t).expect("finite times")) {
        Ok(i) => return (i, T::zero()),
        Err(i) => i - 1,
    };
    (i, (t - times[i]) / (times[i + 1] - times[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::build_grid;

    #[test]
    fn integral_of_constant() {
        let g = build_grid::<f64>(2, 2.0, 8).unwrap();
        let f = GridScalar::constant(&g, 3.0);
        assert!((f.integral() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn time_interpolation_is_linear() {
        let g = build_grid::<f64>(1, 1.0, 8).unwrap();
        let tv = TimeGridVector::from_fn(&g, 1.0, 4, |t, _| [2.0 * t, 0.0]);
        let s = tv.slice_at(0.3);
        assert!((s.components[0].values[3] - 0.6).abs() < 1e-14);
        let end = tv.slice_at(1.0);
        assert_eq!(end.components[0].values[0], 2.0);
    }

    #[test]
    fn rejects_unordered_times() {
        let g = build_grid::<f64>(1, 1.0, 8).unwrap();
        let v = GridVector::zeros(&g);
        assert!(TimeGridVector::new(vec![0.0, 0.5, 0.5], vec![v.clone(), v.clone(), v]).is_err());
    }

    #[test]
    fn vector_component_count_checked() {
        let g = build_grid::<f64>(2, 1.0, 8).unwrap();
        assert!(GridVector::new(vec![GridScalar::zeros(&g)]).is_err());
    }
}
