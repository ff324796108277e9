use rayon::prelude::*;

use super::brownian::BrownianPath;
use super::coeffs::{PointCoeffs, SdeCoefficients};
use crate::error::{CoreError, Result};
use crate::field::{Grid, Point};
use crate::scalar::Scalar;

pub type Mat2<T> = [[T; 2]; 2];

/// Time-stepping parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdeConfig<T> {
    pub dt: T,
    pub mc_members: usize,
    /// Record every `record_stride`-th step (the final step is always recorded).
    pub record_stride: usize,
}

impl<T: Scalar> SdeConfig<T> {
    pub fn new(dt: T, mc_members: usize) -> Result<Self> {
        if !(dt > T::zero()) || mc_members == 0 {
            return Err(CoreError::InvalidParameter("dt > 0 and mc_members ≥ 1 required".into()));
        }
        Ok(Self { dt, mc_members, record_stride: 1 })
    }
}

fn identity<T: Scalar>() -> Mat2<T> {
    [[T::one(), T::zero()], [T::zero(), T::one()]]
}

#[inline]
fn matmul<T: Scalar>(a: &Mat2<T>, b: &Mat2<T>, n: usize) -> Mat2<T> {
    let mut c = [[T::zero(); 2]; 2];
    for i in 0..n {
        for j in 0..n {
            let mut s = T::zero();
            for k in 0..n {
                s = s + a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

#[inline]
pub fn det<T: Scalar>(m: &Mat2<T>, n: usize) -> T {
    if n == 1 {
        m[0][0]
    } else {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

#[inline]
fn trace<T: Scalar>(m: &Mat2<T>, n: usize) -> T {
    (0..n).map(|i| m[i][i]).fold(T::zero(), |a, b| a + b)
}

/// Euler–Maruyama position update.
#[inline]
pub fn em_position<T: Scalar>(c: &PointCoeffs<T>, x: Point<T>, dw: &[T], dt: T, n: usize) -> Point<T> {
    let mut y = x;
    for a in 0..n {
        let mut v = x[a] + c.b[a] * dt;
        for (k, s) in c.sigma.iter().enumerate() {
            v = v + s[a] * dw[k];
        }
        y[a] = v;
    }
    y
}

/// Euler–Maruyama update of `∂Φ`: `J + ∂b J dt + Σ ∂σ^k J ΔW^k`.
#[inline]
pub fn em_jacobian<T: Scalar>(c: &PointCoeffs<T>, j: &Mat2<T>, dw: &[T], dt: T, n: usize) -> Mat2<T> {
    let mut g = [[T::zero(); 2]; 2];
    for r in 0..n {
        for s in 0..n {
            let mut v = c.db[r][s] * dt;
            for (k, ds) in c.dsigma.iter().enumerate() {
                v = v + ds[r][s] * dw[k];
            }
            g[r][s] = v;
        }
    }
    let gj = matmul(&g, j, n);
    let mut out = *j;
    for r in 0..n {
        for s in 0..n {
            out[r][s] = out[r][s] + gj[r][s];
        }
    }
    out
}

/// Left-point increment of `log det ∂Φ`:
/// `Div b dt + Σ Div σ^k ΔW^k − ½ Σ ∂_iσ^k_j∂_jσ^k_i dt`.
#[inline]
pub fn logdet_increment<T: Scalar>(c: &PointCoeffs<T>, dw: &[T], dt: T, n: usize) -> T {
    let mut v = trace(&c.db, n) * dt;
    for (k, ds) in c.dsigma.iter().enumerate() {
        v = v + trace(ds, n) * dw[k] - T::of(0.5) * trace(&matmul(ds, ds, n), n) * dt;
    }
    v
}

/// State of the flow started from every grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState<T> {
    pub step: usize,
    pub pos: Vec<Point<T>>,
    pub jac: Vec<Mat2<T>>,
    pub logdet: Vec<T>,
}

/// Advances positions, variational Jacobians and log-determinants together.
pub struct FlowStepper<'a, T: Scalar> {
    coeffs: &'a SdeCoefficients<T>,
    path: &'a BrownianPath<T>,
    state: FlowState<T>,
}

impl<'a, T: Scalar> FlowStepper<'a, T> {
    pub fn new(coeffs: &'a SdeCoefficients<T>, path: &'a BrownianPath<T>) -> Result<Self> {
        if coeffs.k_count() != path.k_count() {
            return Err(CoreError::InvalidParameter(format!(
                "{} noise fields but {} Brownian components",
                coeffs.k_count(),
                path.k_count()
            )));
        }
        let g = coeffs.grid();
        let pos = (0..g.len()).map(|i| g.node(i)).collect();
        Ok(Self { coeffs, path, state: FlowState { step: 0, pos, jac: vec![identity(); g.len()], logdet: vec![T::zero(); g.len()] } })
    }

    pub fn state(&self) -> &FlowState<T> {
        &self.state
    }

    pub fn time(&self) -> T {
        self.path.time(self.state.step)
    }

    pub fn done(&self) -> bool {
        self.state.step >= self.path.steps()
    }

    pub fn advance(&mut self) -> Result<()> {
        let m = self.state.step;
        let t = self.path.time(m);
        let dw = self.path.increment(m);
        let dt = self.path.dt();
        let n = self.coeffs.grid().dim();
        let coeffs = self.coeffs;
        let st = &mut self.state;
        st.pos
            .par_iter_mut()
            .zip(st.jac.par_iter_mut())
            .zip(st.logdet.par_iter_mut())
            .for_each(|((x, j), l)| {
                let c = coeffs.eval(t, *x);
                *l = *l + logdet_increment(&c, dw, dt, n);
                *j = em_jacobian(&c, j, dw, dt, n);
                *x = em_position(&c, *x, dw, dt, n);
            });
        let finite = st.pos.iter().all(|p| p[0].is_finite() && p[1].is_finite()) && st.logdet.iter().all(|v| v.is_finite());
        if !finite {
            return Err(CoreError::Trajectory { step: m + 1 });
        }
        st.step = m + 1;
        Ok(())
    }
}

/// Recorded trajectories of the flow from every grid node under one Brownian path.
#[derive(Clone, Debug)]
pub struct FlowEnsemble<T: Scalar> {
    pub grid: Grid<T>,
    /// Step index of each record.
    pub steps: Vec<usize>,
    pub times: Vec<T>,
    pub positions: Vec<Vec<Point<T>>>,
    pub jac_variational: Vec<Vec<Mat2<T>>>,
    pub logdet_exponential: Vec<Vec<T>>,
    pub path: BrownianPath<T>,
}

impl<T: Scalar> FlowEnsemble<T> {
    /// Record index of the latest record at or before step `m`.
    pub fn record_for_step(&self, m: usize) -> Option<usize> {
        self.steps.iter().position(|&s| s == m)
    }

    fn require_every_step(&self) -> Result<()> {
        if self.steps.len() != self.path.steps() + 1 {
            return Err(CoreError::InvalidParameter("every step must be recorded".into()));
        }
        Ok(())
    }

    /// `log det` of the variational Jacobian at each record and node.
    pub fn logdet_variational(&self) -> Vec<Vec<T>> {
        let n = self.grid.dim();
        self.jac_variational.iter().map(|r| r.iter().map(|j| det(j, n).ln()).collect()).collect()
    }
}

fn record_steps(steps: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut v: Vec<usize> = (0..=steps).step_by(stride).collect();
    if *v.last().expect("non-empty") != steps {
        v.push(steps);
    }
    v
}

/// Euler–Maruyama flow from every grid node, all nodes sharing the path's increments.
pub fn simulate_flow<T: Scalar>(coeffs: &SdeCoefficients<T>, config: &SdeConfig<T>, path: &BrownianPath<T>) -> Result<FlowEnsemble<T>> {
    if (path.dt() - config.dt).abs() > config.dt * T::of(1e-9) {
        return Err(CoreError::InvalidParameter("path dt differs from config dt".into()));
    }
    let mut stepper = FlowStepper::new(coeffs, path)?;
    let steps = record_steps(path.steps(), config.record_stride);
    let mut positions = Vec::with_capacity(steps.len());
    let mut jac = Vec::with_capacity(steps.len());
    let mut logdet = Vec::with_capacity(steps.len());
    let mut next = 0;
    loop {
        if steps[next] == stepper.state().step {
            let s = stepper.state();
            positions.push(s.pos.clone());
            jac.push(s.jac.clone());
            logdet.push(s.logdet.clone());
            next += 1;
        }
        if stepper.done() {
            break;
        }
        stepper.advance()?;
    }
    let times = steps.iter().map(|&m| path.time(m)).collect();
    Ok(FlowEnsemble {
        grid: coeffs.grid().clone(),
        steps,
        times,
        positions,
        jac_variational: jac,
        logdet_exponential: logdet,
        path: path.clone(),
    })
}

/// Recomputes `∂Φ` along the recorded trajectories by Euler–Maruyama on the matrix SDE.
pub fn variational_jacobian<T: Scalar>(ens: &mut FlowEnsemble<T>, coeffs: &SdeCoefficients<T>) -> Result<()> {
    ens.require_every_step()?;
    let n = ens.grid.dim();
    let mut j: Vec<Mat2<T>> = vec![identity(); ens.grid.len()];
    let mut out = vec![j.clone()];
    for m in 0..ens.path.steps() {
        let t = ens.path.time(m);
        let dw = ens.path.increment(m);
        let dt = ens.path.dt();
        let xs = &ens.positions[m];
        j = j.par_iter().zip(xs.par_iter()).map(|(jm, &x)| em_jacobian(&coeffs.eval(t, x), jm, dw, dt, n)).collect();
        out.push(j.clone());
    }
    ens.jac_variational = out;
    Ok(())
}

/// Recomputes `log det ∂Φ` along the recorded trajectories by left-point Itô sums of the
/// stochastic-exponential formula.
pub fn logdet_stochastic_exponential<T: Scalar>(ens: &mut FlowEnsemble<T>, coeffs: &SdeCoefficients<T>) -> Result<()> {
    ens.require_every_step()?;
    let n = ens.grid.dim();
    let mut l = vec![T::zero(); ens.grid.len()];
    let mut out = vec![l.clone()];
    for m in 0..ens.path.steps() {
        let t = ens.path.time(m);
        let dw = ens.path.increment(m);
        let dt = ens.path.dt();
        let xs = &ens.positions[m];
        l = l.par_iter().zip(xs.par_iter()).map(|(&lm, &x)| lm + logdet_increment(&coeffs.eval(t, x), dw, dt, n)).collect();
        out.push(l.clone());
    }
    ens.logdet_exponential = out;
    Ok(())
}
