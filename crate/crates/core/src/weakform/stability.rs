use crate::error::{CoreError, Result};
use crate::field::{integrate_series, Grid, GridScalar, Point, TimeGridVector};
use crate::scalar::Scalar;
use crate::stats::mean_stderr;

/// Weight used by the weighted-`L¹` functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight<T> {
    /// `w ≡ 1`.
    Uniform,
    /// `w(x) = (1 + |x − center|²)^{−r/2}`.
    Polynomial { r: T, center: Point<T> },
}

impl<T: Scalar> Weight<T> {
    /// Polynomial weight centred in the box; requires `r > n`.
    pub fn centered(grid: &Grid<T>, r: T) -> Result<Self> {
        if !(r > T::of_usize(grid.dim())) {
            return Err(CoreError::InvalidParameter(format!("weight exponent {r} must exceed the dimension")));
        }
        Ok(Weight::Polynomial { r, center: grid.center() })
    }

    pub fn field(&self, grid: &Grid<T>) -> GridScalar<T> {
        match *self {
            Weight::Uniform => GridScalar::constant(grid, T::one()),
            Weight::Polynomial { r, center } => GridScalar::from_fn(grid, |p| {
                let d2 = (0..grid.dim()).map(|a| (p[a] - center[a]) * (p[a] - center[a])).sum::<T>();
                (T::one() + d2).powf(-r / T::of(2.0))
            }),
        }
    }

    /// Constants `(C_b, C_σ)` with `|b·∇w| ≤ C_b ‖b/(1+|x|)‖∞ w` and
    /// `½ σσ:∇²w ≤ C_σ ‖σ/(1+|x|)‖²∞ w`.
    pub fn growth_constants(&self) -> (T, T) {
        match *self {
            Weight::Uniform => (T::zero(), T::zero()),
            Weight::Polynomial { r, .. } => {
                let m = (T::one() + T::SQRT_2()) / T::of(2.0);
                (r * m, T::of(0.5) * r * (r + T::of(2.0)) * m * m)
            }
        }
    }
}

/// `∫ w |f|`.
pub fn weighted_l1<T: Scalar>(f: &GridScalar<T>, w: &GridScalar<T>) -> T {
    f.values.iter().zip(&w.values).map(|(&a, &b)| a.abs() * b).sum::<T>() * f.grid.cell_volume()
}

/// Grönwall factor `exp(∫₀ᵗ C_b‖b/(1+|x|)‖∞ + C_σ Σ_k ‖σ^k/(1+|x|)‖²∞ ds)` at each time in `times`.
pub fn gronwall_envelope<T: Scalar>(b: &TimeGridVector<T>, sigmas: &[TimeGridVector<T>], weight: &Weight<T>, times: &[T]) -> Vec<T> {
    let (cb, cs) = weight.growth_constants();
    let grid = b.grid();
    let center = match *weight {
        Weight::Polynomial { center, .. } => center,
        Weight::Uniform => grid.center(),
    };
    let damp: Vec<T> = (0..grid.len())
        .map(|i| {
            let p = grid.node(i);
            let d = (0..grid.dim()).map(|a| (p[a] - center[a]) * (p[a] - center[a])).sum::<T>().sqrt();
            T::one() / (T::one() + d)
        })
        .collect();
    let sup = |v: &crate::field::GridVector<T>| {
        let m = v.magnitude();
        m.values.iter().zip(&damp).fold(T::zero(), |acc, (&x, &d)| acc.max(x * d))
    };
    let rate: Vec<T> = times
        .iter()
        .map(|&t| {
            let mut c = cb * sup(&b.slice_at(t));
            for s in sigmas {
                let v = sup(&s.slice_at(t));
                c = c + cs * v * v;
            }
            c
        })
        .collect();
    let mut out = Vec::with_capacity(times.len());
    let mut acc = T::zero();
    out.push(T::one());
    for i in 1..times.len() {
        acc = acc + integrate_series(&rate[i - 1..=i], &times[i - 1..=i]);
        out.push(acc.exp());
    }
    out
}

/// Monte Carlo summary of `E ∫ w|f(t)|` against its Grönwall envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport<T> {
    pub mean: Vec<T>,
    pub stderr: Vec<T>,
    pub bound: Vec<T>,
    /// `mean / bound` per time.
    pub ratio: Vec<T>,
}

impl<T: Scalar> StabilityReport<T> {
    /// Every time satisfies `mean + z·stderr ≤ bound`.
    pub fn within_envelope(&self, z: T) -> bool {
        (0..self.mean.len()).all(|i| self.mean[i] + z * self.stderr[i] <= self.bound[i])
    }

    /// Every time stays within `z` standard errors of the initial value.
    pub fn constant_in_time(&self, z: T, floor: T) -> bool {
        let m0 = self.mean[0];
        (0..self.mean.len()).all(|i| (self.mean[i] - m0).abs() <= z * self.stderr[i] + floor)
    }
}

/// Aggregates per-member series `series[m][t] = ∫ w|f_m(t)|` with the envelope factors.
pub fn weighted_l1_stability<T: Scalar>(series: &[Vec<T>], initial: T, envelope: &[T]) -> Result<StabilityReport<T>> {
    if series.is_empty() {
        return Err(CoreError::TooFewEntries { needed: 1, got: 0 });
    }
    let steps = series[0].len();
    if envelope.len() != steps || series.iter().any(|s| s.len() != steps) {
        return Err(CoreError::TimeGrid("series and envelope lengths differ".into()));
    }
    let mut mean = Vec::with_capacity(steps);
    let mut stderr = Vec::with_capacity(steps);
    let mut bound = Vec::with_capacity(steps);
    let mut ratio = Vec::with_capacity(steps);
    for t in 0..steps {
        let col: Vec<T> = series.iter().map(|s| s[t]).collect();
        let (m, se) = mean_stderr(&col);
        let b = initial * envelope[t];
        mean.push(m);
        stderr.push(se);
        bound.push(b);
        ratio.push(if b > T::zero() { m / b } else { T::zero() });
    }
    Ok(StabilityReport { mean, stderr, bound, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_grid, GridVector};
    use std::f64::consts::TAU;

    #[test]
    fn zero_density_gives_zero_series() {
        let g = build_grid::<f64>(1, TAU, 16).unwrap();
        let w = Weight::centered(&g, 2.0).unwrap().field(&g);
        assert_eq!(weighted_l1(&GridScalar::zeros(&g), &w), 0.0);
        let rep = weighted_l1_stability(&[vec![0.0; 3], vec![0.0; 3]], 0.0, &[1.0; 3]).unwrap();
        assert!(rep.mean.iter().all(|&m| m == 0.0));
        assert!(weighted_l1_stability::<f64>(&[], 0.0, &[]).is_err());
    }

    #[test]
    fn weight_constants_bound_derivatives() {
        let r = 3.0;
        let (cb, cs) = Weight::Polynomial { r, center: [0.0, 0.0] }.growth_constants();
        for i in 0..4000 {
            let s = i as f64 * 0.01;
            let w = (1.0f64 + s * s).powf(-r / 2.0);
            let dw = r * s / (1.0 + s * s) * w;
            let d2 = r * (r + 2.0) * s * s / (1.0 + s * s).powi(2) * w;
            assert!(dw <= cb * w / (1.0 + s) + 1e-15);
            assert!(0.5 * d2 <= cs * w / (1.0 + s).powi(2) + 1e-15);
        }
    }

    #[test]
    fn uniform_weight_has_flat_envelope() {
        let g = build_grid::<f64>(2, TAU, 8).unwrap();
        let b = TimeGridVector::steady(GridVector::constant(&g, [1.0, 2.0]), 1.0);
        let env = gronwall_envelope(&b, &[], &Weight::Uniform, &[0.0, 0.5, 1.0]);
        assert_eq!(env, vec![1.0, 1.0, 1.0]);
        assert!(Weight::centered(&g, 1.5).is_err());
    }
}
