use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::field::{divergence, integrate_series, jacobian, GridVector, TimeGridVector};
use crate::scalar::Scalar;
use crate::stats::mean_stderr;

/// Monte Carlo mean with standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate<T> {
    pub mean: T,
    pub stderr: T,
    pub members: usize,
}

impl<T: Scalar> MomentEstimate<T> {
    /// One-sided upper confidence limit at `z` standard errors.
    pub fn upper(&self, z: T) -> T {
        self.mean + z * self.stderr
    }
}

/// `E[functional(e)^power]` over independent members. The functional runs in parallel;
/// the reduction is in member order.
pub fn ensemble_moment<E: Sync, T: Scalar, F>(members: &[E], functional: F, power: T) -> Result<MomentEstimate<T>>
where
    F: Fn(&E) -> T + Sync,
{
    if members.is_empty() {
        return Err(CoreError::TooFewEntries { needed: 1, got: 0 });
    }
    let vals: Vec<T> = members.par_iter().map(|e| functional(e).powf(power)).collect();
    let (mean, stderr) = mean_stderr(&vals);
    Ok(MomentEstimate { mean, stderr, members: vals.len() })
}

fn sup_norm_series<T: Scalar, F: Fn(&GridVector<T>) -> T>(field: &TimeGridVector<T>, times: &[T], f: F) -> Vec<T> {
    times.iter().map(|&t| f(&field.slice_at(t))).collect()
}

/// Constant `C` of the moment bound `E sup_t ‖f(t)‖_p^{2p} ≤ C ‖f0‖_p^{2p}`:
/// `C = 4 exp(2(p−1)‖(Div b − ½∂σ∂σ)^−‖_{L¹L∞}) exp(2(p−1)² Σ_k‖Div σ^k‖²_{L²L∞})`.
pub fn apriori_constant<T: Scalar>(b: &TimeGridVector<T>, sigmas: &[TimeGridVector<T>], p: T, times: &[T]) -> Result<T> {
    if p < T::one() {
        return Err(CoreError::ExponentBelowOne(p.to64()));
    }
    let q = p - T::one();
    let grid = b.grid().clone();
    let neg_part: Vec<T> = times
        .iter()
        .map(|&t| {
            let mut c = divergence(&b.slice_at(t));
            for s in sigmas {
                let j = jacobian(&s.slice_at(t));
                let n = grid.dim();
                for a in 0..n {
                    for bb in 0..n {
                        c = &c - &(&j[a][bb] * &j[bb][a]).scale(T::of(0.5));
                    }
                }
            }
            c.values.iter().fold(T::zero(), |m, &v| m.max(-v))
        })
        .collect();
    let mut div_sq = vec![T::zero(); times.len()];
    for s in sigmas {
        let d = sup_norm_series(s, times, |v| divergence(v).max_abs());
        for (acc, v) in div_sq.iter_mut().zip(d) {
            *acc = *acc + v * v;
        }
    }
    let two = T::of(2.0);
    Ok(T::of(4.0) * (two * q * integrate_series(&neg_part, times)).exp() * (two * q * q * integrate_series(&div_sq, times)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_grid;
    use std::f64::consts::TAU;

    #[test]
    fn constant_functional() {
        let est = ensemble_moment(&[1, 2, 3], |_| 1.0f64, 4.0).unwrap();
        assert_eq!((est.mean, est.stderr), (1.0, 0.0));
        assert!(ensemble_moment::<i32, f64, _>(&[], |_| 1.0, 1.0).is_err());
    }

    #[test]
    fn stderr_shrinks_like_inverse_sqrt() {
        let vals: Vec<f64> = (0..4000).map(|i| ((i as f64) * 0.618_033_988_7).fract()).collect();
        let a = ensemble_moment(&vals[..1000], |&v| v, 1.0).unwrap();
        let b = ensemble_moment(&vals[..4000], |&v| v, 1.0).unwrap();
        let r = a.stderr / b.stderr;
        assert!((r - 2.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn solenoidal_constant_noise_gives_four() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let b = TimeGridVector::steady(GridVector::from_fn(&g, |p| [p[1].sin(), p[0].cos()]), 1.0);
        let s = TimeGridVector::steady(GridVector::unit(&g, 1), 1.0);
        let c = apriori_constant(&b, &[s], 2.0, &[0.0, 0.5, 1.0]).unwrap();
        assert!((c - 4.0).abs() < 1e-9);
        assert!(apriori_constant(&b, &[], 0.5, &[0.0, 1.0]).is_err());
    }
}
