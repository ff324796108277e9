use rayon::prelude::*;

use super::brownian::BrownianPath;
use super::coeffs::SdeCoefficients;
use super::inverse::{displacement_of, invert_displacement, invert_flow, InverseMap};
use super::sde::{FlowEnsemble, FlowStepper};
use crate::error::Result;
use crate::field::{GridScalar, PeriodicSpline};
use crate::scalar::Scalar;

/// `f(x) = f0(Ψ(x)) det ∂Ψ(x)` with `f0` interpolated.
pub fn pushforward_with<T: Scalar>(f0: &PeriodicSpline<T>, inv: &InverseMap<T>) -> GridScalar<T> {
    let values = inv.psi.par_iter().zip(inv.det.values.par_iter()).map(|(&y, &d)| f0.eval(y) * d).collect();
    GridScalar { grid: inv.det.grid.clone(), values }
}

/// Push-forward of `f0` by the recorded flow at time `t`.
pub fn pushforward_solution<T: Scalar>(f0: &GridScalar<T>, ens: &FlowEnsemble<T>, t: T) -> Result<GridScalar<T>> {
    f0.check(&GridScalar::zeros(&ens.grid))?;
    let inv = invert_flow(ens, t)?;
    Ok(pushforward_with(&PeriodicSpline::new(f0), &inv))
}

/// Density path `f(t_m)` produced step by step, so memory stays independent of the step count.
/// Each inversion is seeded with the previous inverse.
pub struct DensityStream<'a, T: Scalar> {
    stepper: FlowStepper<'a, T>,
    f0: PeriodicSpline<T>,
    inverse: InverseMap<T>,
    started: bool,
}

impl<'a, T: Scalar> DensityStream<'a, T> {
    pub fn new(f0: &GridScalar<T>, coeffs: &'a SdeCoefficients<T>, path: &'a BrownianPath<T>) -> Result<Self> {
        f0.check(&GridScalar::zeros(coeffs.grid()))?;
        Ok(Self {
            stepper: FlowStepper::new(coeffs, path)?,
            f0: PeriodicSpline::new(f0),
            inverse: InverseMap::identity(coeffs.grid()),
            started: false,
        })
    }

    /// Step index of the density returned by the last `next_density` call.
    pub fn step(&self) -> usize {
        self.stepper.state().step
    }

    pub fn time(&self) -> T {
        self.stepper.time()
    }

    pub fn inverse(&self) -> &InverseMap<T> {
        &self.inverse
    }

    /// Next density, or `None` once the final step has been returned.
    pub fn next_density(&mut self) -> Option<Result<GridScalar<T>>> {
        if !self.started {
            self.started = true;
        } else {
            if self.stepper.done() {
                return None;
            }
            if let Err(e) = self.stepper.advance() {
                return Some(Err(e));
            }
            let grid = self.inverse.det.grid.clone();
            let disp = displacement_of(&grid, &self.stepper.state().pos);
            match invert_displacement(&disp, Some(&self.inverse.psi)) {
                Ok(inv) => self.inverse = inv,
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(pushforward_with(&self.f0, &self.inverse)))
    }
}

/// Collects the whole density path `f(t_0), …, f(t_steps)`.
pub fn density_path<T: Scalar>(f0: &GridScalar<T>, coeffs: &SdeCoefficients<T>, path: &BrownianPath<T>) -> Result<Vec<GridScalar<T>>> {
    let mut s = DensityStream::new(f0, coeffs, path)?;
    let mut out = Vec::with_capacity(path.steps() + 1);
    while let Some(f) = s.next_density() {
        out.push(f?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_grid, GridVector, TimeGridVector};
    use crate::flow::brownian::sample_brownian;
    use crate::flow::sde::{simulate_flow, SdeConfig};
    use std::f64::consts::TAU;

    fn bump(p: [f64; 2]) -> f64 {
        ((p[0]).cos() + (p[1]).sin()).exp()
    }

    #[test]
    fn constant_density_stays_constant_under_solenoidal_flow() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let b = GridVector::from_fn(&g, |p| [-(p[0]).cos() * p[1].sin(), p[0].sin() * p[1].cos()]).scale(0.5);
        let c = SdeCoefficients::new(TimeGridVector::steady(b, 0.5), vec![TimeGridVector::steady(GridVector::unit(&g, 0), 0.5)]).unwrap();
        let path = sample_brownian(0.5, 0.01, 1, 7).unwrap();
        let f0 = GridScalar::constant(&g, 2.0);
        let fs = density_path(&f0, &c, &path).unwrap();
        let last = fs.last().unwrap();
        assert!(last.values.iter().all(|v| (v - 2.0).abs() < 2e-2));
    }

    #[test]
    fn translation_shifts_initial_data() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let c = SdeCoefficients::new(TimeGridVector::steady(GridVector::zeros(&g), 0.5), vec![TimeGridVector::steady(GridVector::unit(&g, 0), 0.5)])
            .unwrap();
        let path = sample_brownian(0.5, 0.05, 1, 9).unwrap();
        let ens = simulate_flow(&c, &SdeConfig::new(0.05, 1).unwrap(), &path).unwrap();
        let f0 = GridScalar::from_fn(&g, bump);
        let f = pushforward_solution(&f0, &ens, 0.5).unwrap();
        let w = path.value_at(path.steps())[0];
        for i in 0..g.len() {
            let p = g.node(i);
            assert!((f.values[i] - bump([p[0] - w, p[1]])).abs() < 1e-3);
        }
    }

    #[test]
    fn mass_is_conserved() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let b = GridVector::from_fn(&g, |p| [0.3 * p[0].sin(), 0.2 * (p[0] + p[1]).cos()]);
        let s = GridVector::from_fn(&g, |p| [0.2 * p[1].cos(), 0.2 * p[0].sin()]);
        let c = SdeCoefficients::new(TimeGridVector::steady(b, 0.5), vec![TimeGridVector::steady(s, 0.5)]).unwrap();
        let path = sample_brownian(0.5, 0.01, 1, 3).unwrap();
        let f0 = GridScalar::from_fn(&g, bump);
        let m0 = f0.integral();
        let mut stream = DensityStream::new(&f0, &c, &path).unwrap();
        let h = g.spacing();
        while let Some(f) = stream.next_density() {
            let m = f.unwrap().integral();
            assert!((m - m0).abs() <= 10.0 * h * h * m0.abs(), "{m} vs {m0}");
        }
        assert_eq!(stream.step(), path.steps());
    }

    #[test]
    fn stream_matches_recorded_ensemble() {
        let g = build_grid::<f64>(1, TAU, 32).unwrap();
        let b = GridVector::from_fn(&g, |p| [0.4 * p[0].sin(), 0.0]);
        let c = SdeCoefficients::new(TimeGridVector::steady(b, 0.2), vec![]).unwrap();
        let path = sample_brownian(0.2, 0.02, 0, 0).unwrap();
        let f0 = GridScalar::from_fn(&g, |p| bump([p[0], 0.0]));
        let ens = simulate_flow(&c, &SdeConfig::new(0.02, 1).unwrap(), &path).unwrap();
        let direct = pushforward_solution(&f0, &ens, 0.2).unwrap();
        let streamed = density_path(&f0, &c, &path).unwrap();
        for (a, b) in direct.values.iter().zip(&streamed.last().unwrap().values) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
