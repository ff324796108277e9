use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Brownian increments for `k_count` independent components on a uniform step grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath<T> {
    t_final: T,
    dt: T,
    steps: usize,
    k_count: usize,
    /// Step-major: `increments[m * k_count + k]`.
    increments: Vec<T>,
    stream_id: u64,
}

/// Number of steps `T/dt`, rejecting non-integral ratios.
pub fn step_count<T: Scalar>(t_final: T, dt: T) -> Result<usize> {
    if !(dt > T::zero()) || !(t_final > T::zero()) {
        return Err(CoreError::InvalidParameter("T and dt must be positive".into()));
    }
    let ratio = (t_final / dt).to64();
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
        return Err(CoreError::NonIntegralSteps(ratio));
    }
    Ok(n as usize)
}

/// Draws a path from the counter-based stream `stream_id`.
pub fn sample_brownian<T: Scalar>(t_final: T, dt: T, k_count: usize, stream_id: u64) -> Result<BrownianPath<T>> {
    let steps = step_count(t_final, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_id);
    let sd = dt.to64().sqrt();
    let increments = (0..steps * k_count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::of(z * sd)
        })
        .collect();
    Ok(BrownianPath { t_final, dt, steps, k_count, increments, stream_id })
}

impl<T: Scalar> BrownianPath<T> {
    /// Path with prescribed increments (step-major).
    pub fn from_increments(t_final: T, dt: T, k_count: usize, increments: Vec<T>) -> Result<Self> {
        let steps = step_count(t_final, dt)?;
        if increments.len() != steps * k_count {
            return Err(CoreError::InvalidParameter("increment count does not match T/dt".into()));
        }
        Ok(Self { t_final, dt, steps, k_count, increments, stream_id: 0 })
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }
    pub fn dt(&self) -> T {
        self.dt
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn k_count(&self) -> usize {
        self.k_count
    }
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Time of step `m`.
    pub fn time(&self, m: usize) -> T {
        self.t_final * T::of_usize(m) / T::of_usize(self.steps)
    }

    /// Increments `ΔW^k` over `[t_m, t_{m+1}]`.
    #[inline]
    pub fn increment(&self, m: usize) -> &[T] {
        &self.increments[m * self.k_count..(m + 1) * self.k_count]
    }

    /// `W_{t_m}` for every component.
    pub fn value_at(&self, m: usize) -> Vec<T> {
        let mut w = vec![T::zero(); self.k_count];
        for s in 0..m {
            for (k, v) in w.iter_mut().enumerate() {
                *v = *v + self.increments[s * self.k_count + k];
            }
        }
        w
    }

    /// Same realization on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(CoreError::InvalidParameter(format!("cannot coarsen {} steps by {factor}", self.steps)));
        }
        let steps = self.steps / factor;
        let mut increments = vec![T::zero(); steps * self.k_count];
        for m in 0..steps {
            for s in 0..factor {
                for k in 0..self.k_count {
                    increments[m * self.k_count + k] =
                        increments[m * self.k_count + k] + self.increments[(m * factor + s) * self.k_count + k];
                }
            }
        }
        Ok(Self { t_final: self.t_final, dt: self.dt * T::of_usize(factor), steps, k_count: self.k_count, increments, stream_id: self.stream_id })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_id;
    use crate::stats::mean_stderr;

    #[test]
    fn terminal_value_has_variance_t() {
        let t = 0.5;
        let finals: Vec<f64> = (0..10_000)
            .map(|m| {
                let p = sample_brownian::<f64>(t, 0.05, 1, stream_id(11, m)).unwrap();
                p.value_at(p.steps())[0]
            })
            .collect();
        let (mean, se) = mean_stderr(&finals);
        let var = finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (finals.len() as f64 - 1.0);
        assert!(mean.abs() < 4.0 * se);
        assert!((var - t).abs() < 0.05 * t);
    }

    #[test]
    fn deterministic_per_stream() {
        let a = sample_brownian::<f64>(1.0, 0.01, 2, 99).unwrap();
        let b = sample_brownian::<f64>(1.0, 0.01, 2, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_brownian::<f64>(1.0, 0.01, 2, 100).unwrap());
    }

    #[test]
    fn zero_components_allowed() {
        let p = sample_brownian::<f64>(1.0, 0.25, 0, 1).unwrap();
        assert_eq!(p.steps(), 4);
        assert!(p.increment(2).is_empty());
    }

    #[test]
    fn non_integral_step_count_rejected() {
        assert!(matches!(sample_brownian::<f64>(1.0, 0.3, 1, 1), Err(CoreError::NonIntegralSteps(_))));
    }

    #[test]
    fn coarsening_preserves_endpoint() {
        let p = sample_brownian::<f64>(0.5, 1e-3, 2, 5).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.steps(), 125);
        for k in 0..2 {
            assert!((c.value_at(125)[k] - p.value_at(500)[k]).abs() < 1e-12);
        }
        assert!(p.coarsen(3).is_err());
    }
}
