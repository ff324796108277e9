//! Damped backward parabolic problem `∂_t u + b·∇u + ½Δu − λu + b = 0`, `u(T) = 0`,
//! solved in forward time `τ = T − t` through its mild form.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::field::{jacobian, laplacian, lp_norm, time_norm, integrate_series, divergence, hessian, Grid, GridScalar, GridVector, Region, TimeGridVector};
use crate::scalar::Scalar;
use crate::stats::loglog_slope;

/// `P_t g` for the semigroup generated by `½Δ`.
pub fn heat_apply<T: Scalar>(g: &GridScalar<T>, t: T) -> Result<GridScalar<T>> {
    if t < T::zero() {
        return Err(CoreError::InvalidParameter(format!("negative heat time {t}")));
    }
    if t == T::zero() {
        return Ok(g.clone());
    }
    let half = T::of(0.5);
    Ok(crate::field::Spectrum::of(g).apply(|_, k| Complex::new((-(k[0] * k[0] + k[1] * k[1]) * t * half).exp(), T::zero())))
}

/// `P_t` applied componentwise.
pub fn heat_apply_vector<T: Scalar>(g: &GridVector<T>, t: T) -> Result<GridVector<T>> {
    let components = g.components.iter().map(|c| heat_apply(c, t)).collect::<Result<Vec<_>>>()?;
    Ok(GridVector { grid: g.grid.clone(), components })
}

/// Picard controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MildConfig<T> {
    pub quad_steps: usize,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for MildConfig<T> {
    fn default() -> Self {
        Self { quad_steps: 256, tol: T::of(1e-10), max_iter: 200 }
    }
}

/// Solution `u_λ` in backward time together with its Picard history.
#[derive(Clone, Debug)]
pub struct ParabolicSolution<T: Scalar> {
    pub lambda: T,
    /// Backward-time slices on a uniform grid over `[0, T]`, `u(T) = 0`.
    pub u: TimeGridVector<T>,
    pub iterations: usize,
    /// Sup-norm defect of the last Picard step.
    pub residual: T,
    pub defects: Vec<T>,
    /// Set when `sup|∇u| ≥ 1`, where the contraction estimate no longer applies.
    pub contraction_warning: bool,
}

impl<T: Scalar> ParabolicSolution<T> {
    pub fn steps(&self) -> usize {
        self.u.slices.len() - 1
    }

    /// Slice at forward time `τ_m = m T / steps`.
    pub fn forward_slice(&self, m: usize) -> &GridVector<T> {
        &self.u.slices[self.steps() - m]
    }

    /// Largest pointwise spectral norm of `∇u` over all slices.
    pub fn lipschitz(&self) -> T {
        self.u.slices.iter().map(max_spectral_norm).fold(T::zero(), T::max)
    }

    /// Ratios of successive Picard defects.
    pub fn contraction_ratios(&self) -> Vec<T> {
        self.defects.windows(2).filter(|w| w[0] > T::zero()).map(|w| w[1] / w[0]).collect()
    }
}

/// Spectral norm of a 2×2 (or 1×1) matrix.
pub fn spectral_norm<T: Scalar>(m: &[[T; 2]; 2], n: usize) -> T {
    if n == 1 {
        return m[0][0].abs();
    }
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - T::of(4.0) * det * det).max(T::zero()).sqrt();
    ((s + disc) * T::of(0.5)).sqrt()
}

pub fn max_spectral_norm<T: Scalar>(u: &GridVector<T>) -> T {
    let j = jacobian(u);
    let n = u.grid.dim();
    (0..u.grid.len())
        .map(|i| {
            let mut m = [[T::zero(); 2]; 2];
            for r in 0..n {
                for c in 0..n {
                    m[r][c] = j[r][c].values[i];
                }
            }
            spectral_norm(&m, n)
        })
        .fold(T::zero(), T::max)
}

type Spec<T> = Vec<Complex<T>>;

struct Stepper<T: Scalar> {
    grid: Grid<T>,
    decay: Vec<T>,
    phi1: Vec<T>,
    ik: Vec<[Complex<T>; 2]>,
}

impl<T: Scalar> Stepper<T> {
    fn new(grid: &Grid<T>, lambda: T, dt: T) -> Self {
        let half = T::of(0.5);
        let mut decay = Vec::with_capacity(grid.len());
        let mut phi1 = Vec::with_capacity(grid.len());
        let mut ik = Vec::with_capacity(grid.len());
        for j in 0..grid.len() {
            let k = grid.wavevector(j);
            let a = lambda + (k[0] * k[0] + k[1] * k[1]) * half;
            let e = (-a * dt).exp();
            decay.push(e);
            // (1 − e^{−a dt}) / a, with the a → 0 limit
            phi1.push(if (a * dt).abs() < T::of(1e-8) { dt } else { -(-a * dt).exp_m1() / a });
            let idx = grid.split(j);
            let mut z = [Complex::new(T::zero(), T::zero()); 2];
            for (ax, zi) in z.iter_mut().enumerate().take(grid.dim()) {
                if !grid.is_nyquist(idx[ax]) {
                    *zi = Complex::new(T::zero(), k[ax]);
                }
            }
            ik.push(z);
        }
        Self { grid: grid.clone(), decay, phi1, ik }
    }

    /// Spectrum of `b·∇u_i + b_i` for each component.
    fn source(&self, b: &GridVector<T>, u_hat: &[Spec<T>]) -> Vec<Spec<T>> {
        let n = self.grid.dim();
        let plan = self.grid.plan();
        (0..n)
            .map(|i| {
                let mut g = b.components[i].values.clone();
                for a in 0..n {
                    let d: Spec<T> = u_hat[i].iter().zip(&self.ik).map(|(z, k)| z * k[a]).collect();
                    let du = plan.inverse(d);
                    for (gv, (dv, bv)) in g.iter_mut().zip(du.iter().zip(&b.components[a].values)) {
                        *gv = *gv + *bv * *dv;
                    }
                }
                plan.forward(&g)
            })
            .collect()
    }
}

/// Solves the forward problem `∂_τ u = ½Δu + b̃·∇u − λu + b̃`, `b̃(τ) = b(T − τ)`, by Picard
/// iteration on the mild map from `u⁰ = 0`. Each Duhamel step freezes the source at the left
/// endpoint and integrates the semigroup factor exactly. The result is reported in backward time.
pub fn mild_solve<T: Scalar>(b: &TimeGridVector<T>, lambda: T, config: &MildConfig<T>) -> Result<ParabolicSolution<T>> {
    if !(lambda > T::zero()) {
        return Err(CoreError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if config.quad_steps == 0 || config.max_iter == 0 {
        return Err(CoreError::InvalidParameter("quad_steps and max_iter must be positive".into()));
    }
    let grid = b.grid().clone();
    let n = grid.dim();
    let steps = config.quad_steps;
    let t_final = b.final_time();
    let dt = t_final / T::of_usize(steps);
    let stepper = Stepper::new(&grid, lambda, dt);
    let plan = grid.plan();
    let b_fwd: Vec<GridVector<T>> = (0..=steps).map(|m| b.slice_at(t_final - dt * T::of_usize(m))).collect();
    let zero_spec = vec![Complex::new(T::zero(), T::zero()); grid.len()];
    // forward spectra and values per slice
    let mut u_hat: Vec<Vec<Spec<T>>> = vec![vec![zero_spec.clone(); n]; steps + 1];
    let mut u_val: Vec<Vec<Vec<T>>> = vec![vec![vec![T::zero(); grid.len()]; n]; steps + 1];
    let mut defects = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let sources: Vec<Vec<Spec<T>>> = (0..steps).into_par_iter().map(|m| stepper.source(&b_fwd[m], &u_hat[m])).collect();
        let mut next: Vec<Vec<Spec<T>>> = Vec::with_capacity(steps + 1);
        next.push(vec![zero_spec.clone(); n]);
        for (m, src) in sources.iter().enumerate() {
            let prev = &next[m];
            let s: Vec<Spec<T>> = (0..n)
                .map(|i| {
                    prev[i]
                        .iter()
                        .zip(&src[i])
                        .zip(stepper.decay.iter().zip(&stepper.phi1))
                        .map(|((&p, &g), (&e, &f))| p * e + g * f)
                        .collect()
                })
                .collect();
            next.push(s);
        }
        let vals: Vec<Vec<Vec<T>>> = next.par_iter().map(|s| s.iter().map(|c| plan.inverse(c.clone())).collect()).collect();
        let defect = vals
            .iter()
            .zip(&u_val)
            .flat_map(|(a, b)| a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (*p - *q).abs())))
            .fold(T::zero(), T::max);
        defects.push(defect);
        u_hat = next;
        u_val = vals;
        if defect <= config.tol {
            break;
        }
        if iterations >= config.max_iter || !defect.is_finite() {
            return Err(CoreError::NoConvergence { iterations, defect: defect.to64() });
        }
    }
    // backward time t_m = m dt holds the forward slice steps − m
    let slices: Vec<GridVector<T>> = (0..=steps)
        .map(|m| {
            let comps = u_val[steps - m].iter().map(|v| GridScalar { grid: grid.clone(), values: v.clone() }).collect();
            GridVector { grid: grid.clone(), components: comps }
        })
        .collect();
    let times = (0..=steps).map(|m| dt * T::of_usize(m)).collect();
    let u = TimeGridVector::new(times, slices)?;
    let mut sol = ParabolicSolution { lambda, u, iterations, residual: *defects.last().expect("one iteration"), defects, contraction_warning: false };
    sol.contraction_warning = sol.lipschitz() >= T::one();
    Ok(sol)
}

/// Defect of one further application of the mild map.
pub fn mild_defect<T: Scalar>(sol: &ParabolicSolution<T>, b: &TimeGridVector<T>) -> Result<T> {
    let cfg = MildConfig { quad_steps: sol.steps(), tol: T::infinity(), max_iter: 1 };
    // one Picard step from the returned solution
    let grid = b.grid().clone();
    let n = grid.dim();
    let steps = cfg.quad_steps;
    let t_final = b.final_time();
    let dt = t_final / T::of_usize(steps);
    let stepper = Stepper::new(&grid, sol.lambda, dt);
    let plan = grid.plan();
    let mut prev: Vec<Spec<T>> = vec![vec![Complex::new(T::zero(), T::zero()); grid.len()]; n];
    let mut worst = T::zero();
    for m in 0..steps {
        let u_m = sol.forward_slice(m);
        let uh: Vec<Spec<T>> = u_m.components.iter().map(|c| plan.forward(&c.values)).collect();
        let src = stepper.source(&b.slice_at(t_final - dt * T::of_usize(m)), &uh);
        for i in 0..n {
            prev[i] = prev[i].iter().zip(&src[i]).zip(stepper.decay.iter().zip(&stepper.phi1)).map(|((&p, &g), (&e, &f))| p * e + g * f).collect();
            let v = plan.inverse(prev[i].clone());
            let w = &sol.forward_slice(m + 1).components[i].values;
            worst = v.iter().zip(w).fold(worst, |acc, (a, c)| acc.max((*a - *c).abs()));
        }
    }
    Ok(worst)
}

fn forward_rhs<T: Scalar>(u: &GridVector<T>, b: &GridVector<T>, lambda: T) -> Vec<GridScalar<T>> {
    let j = jacobian(u);
    let n = u.grid.dim();
    (0..n)
        .map(|i| {
            let mut r = &laplacian(&u.components[i]).scale(T::of(0.5)) + &b.components[i];
            r = &r - &u.components[i].scale(lambda);
            for a in 0..n {
                r = &r + &(&b.components[a] * &j[i][a]);
            }
            r
        })
        .collect()
}

/// `L²` space-time norm of the forward PDE residual, with a trapezoidal time average.
pub fn pde_residual<T: Scalar>(sol: &ParabolicSolution<T>, b: &TimeGridVector<T>) -> T {
    let steps = sol.steps();
    let t_final = b.final_time();
    let dt = t_final / T::of_usize(steps);
    let rhs: Vec<Vec<GridScalar<T>>> = (0..=steps)
        .into_par_iter()
        .map(|m| forward_rhs(sol.forward_slice(m), &b.slice_at(t_final - dt * T::of_usize(m)), sol.lambda))
        .collect();
    let mut acc = T::zero();
    for m in 0..steps {
        for i in 0..sol.u.grid().dim() {
            let du = &sol.forward_slice(m + 1).components[i] - &sol.forward_slice(m).components[i];
            let avg = (&rhs[m][i] + &rhs[m + 1][i]).scale(T::of(0.5));
            let r = &du.scale(T::one() / dt) - &avg;
            acc = acc + r.inner(&r) * dt;
        }
    }
    acc.sqrt()
}

/// Pointwise `|∇^α u|` (Euclidean / Frobenius over all components).
pub fn derivative_magnitude<T: Scalar>(u: &GridVector<T>, alpha: usize) -> Result<GridScalar<T>> {
    let grid = &u.grid;
    let mut acc = GridScalar::zeros(grid);
    match alpha {
        0 => {
            for c in &u.components {
                acc = &acc + &(c * c);
            }
        }
        1 => {
            for row in jacobian(u) {
                for e in row {
                    acc = &acc + &(&e * &e);
                }
            }
        }
        2 => {
            for c in &u.components {
                for row in hessian(c) {
                    for e in row {
                        acc = &acc + &(&e * &e);
                    }
                }
            }
        }
        _ => return Err(CoreError::OrderTooHigh(alpha)),
    }
    Ok(acc.map(|v| v.sqrt()))
}

/// `‖∇^α u‖_{L^q_t(L^r)}` over the solution's time grid.
pub fn space_time_norm<T: Scalar>(sol: &ParabolicSolution<T>, alpha: usize, r: T, q: T) -> Result<T> {
    let per: Vec<T> = sol
        .u
        .slices
        .par_iter()
        .map(|s| derivative_magnitude(s, alpha).and_then(|m| lp_norm(&m, r, &Region::Full)))
        .collect::<Result<Vec<T>>>()?;
    Ok(time_norm(&per, &sol.u.times, q))
}

/// `δ = 1 − α/2 + (n/2)(1/r − 1/p)`.
pub fn theory_delta<T: Scalar>(alpha: usize, r: T, p: T, n: usize) -> T {
    T::one() - T::of_usize(alpha) / T::of(2.0) + T::of_usize(n) / T::of(2.0) * (T::one() / r - T::one() / p)
}

/// `2/q + n/p < 1`.
pub fn krylov_rockner<T: Scalar>(p: T, q: T, n: usize) -> bool {
    T::of(2.0) / q + T::of_usize(n) / p < T::one()
}

/// λ-decay of `‖∇^α u_λ‖_{L^q_t(L^r)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayStudy<T> {
    pub alpha: usize,
    pub r: T,
    pub p: T,
    pub q: T,
    pub lambdas: Vec<T>,
    pub norms: Vec<T>,
    pub fitted_slope: T,
    pub theory_delta: T,
}

impl<T: Scalar> DecayStudy<T> {
    /// `slope ≤ −δ + tol`.
    pub fn within_bound(&self, tol: T) -> bool {
        self.fitted_slope <= -self.theory_delta + tol
    }

    /// `|slope + δ| ≤ tol`.
    pub fn matches_rate(&self, tol: T) -> bool {
        (self.fitted_slope + self.theory_delta).abs() <= tol
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,norm,theory_delta,fitted_slope\n");
        for (l, v) in self.lambdas.iter().zip(&self.norms) {
            s.push_str(&format!("{l:e},{v:e},{:e},{:e}\n", self.theory_delta, self.fitted_slope));
        }
        s
    }
}

/// Fits the slope of `log‖∇^α u_λ‖` against `log λ`.
#[allow(clippy::too_many_arguments)]
pub fn decay_study<T: Scalar>(
    b: &TimeGridVector<T>,
    lambdas: &[T],
    alpha: usize,
    r: T,
    p: T,
    q: T,
    config: &MildConfig<T>,
) -> Result<DecayStudy<T>> {
    if lambdas.len() < 3 {
        return Err(CoreError::TooFewEntries { needed: 3, got: lambdas.len() });
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::InvalidParameter("lambdas must increase".into()));
    }
    let ok = match alpha {
        0 | 1 => r <= p,
        2 => r < p,
        _ => false,
    };
    if !ok {
        return Err(CoreError::InvalidParameter(format!("alpha = {alpha} with r = {r}, p = {p} is outside the estimate")));
    }
    let n = b.grid().dim();
    if !krylov_rockner(p, q, n) {
        return Err(CoreError::InvalidParameter(format!("(p, q) = ({p}, {q}) violates 2/q + n/p < 1")));
    }
    let norms = lambdas
        .par_iter()
        .map(|&l| mild_solve(b, l, config).and_then(|s| space_time_norm(&s, alpha, r, q)))
        .collect::<Result<Vec<T>>>()?;
    Ok(DecayStudy {
        alpha,
        r,
        p,
        q,
        lambdas: lambdas.to_vec(),
        fitted_slope: loglog_slope(lambdas, &norms),
        norms,
        theory_delta: theory_delta(alpha, r, p, n),
    })
}

/// `(‖λu_λ − b‖_{L¹_t(L^p)}, ‖Div(λu_λ) − Div b‖_{L¹_t(L¹)})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relaxation<T> {
    pub lambda: T,
    pub drift: T,
    pub divergence: T,
}

pub fn relaxation_residuals<T: Scalar>(sol: &ParabolicSolution<T>, b: &TimeGridVector<T>, p: T) -> Result<Relaxation<T>> {
    let per: Vec<(T, T)> = sol
        .u
        .times
        .par_iter()
        .zip(sol.u.slices.par_iter())
        .map(|(&t, u)| {
            let bt = b.slice_at(t);
            let d = u.scale(sol.lambda).sub(&bt);
            let mag = derivative_magnitude(&d, 0)?;
            let drift = lp_norm(&mag, p, &Region::Full)?;
            let dv = divergence(&d);
            Ok((drift, lp_norm(&dv, T::one(), &Region::Full)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let a: Vec<T> = per.iter().map(|x| x.0).collect();
    let c: Vec<T> = per.iter().map(|x| x.1).collect();
    Ok(Relaxation { lambda: sol.lambda, drift: integrate_series(&a, &sol.u.times), divergence: integrate_series(&c, &sol.u.times) })
}
