//! The transform `φ_t = id + u_λ(t)`: inversion, transformed coefficients, push-forward of
//! densities and the relaxation of the transformed coefficients as `λ → ∞`.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::field::{
    divergence, integrate_series, jacobian, lp_norm, time_norm, GridScalar, GridVector, PeriodicSpline, Point, Region,
    TimeGridVector, VectorSpline,
};
use crate::flow::{invert_displacement, BrownianPath, DensityStream, InverseMap, SdeCoefficients, SplineTimeField};
use crate::parabolic::{derivative_magnitude, max_spectral_norm, ParabolicSolution};
use crate::presets::unit_noise;
use crate::scalar::Scalar;
use crate::weakform::{CovariationQuadrature, LedgerBuilder, Snapshot, TestFunction, Variant, WeakFormLedger};

/// `φ_t = id + u(t)` with its measured Lipschitz constant.
#[derive(Clone, Debug)]
pub struct Diffeo<T: Scalar> {
    pub u: TimeGridVector<T>,
    /// `sup_t sup_x |∇u|` (spectral norm).
    pub lip: T,
    pub det_lo: T,
    pub det_hi: T,
    spline: SplineTimeField<T>,
}

/// Refuses `u` with `sup|∇u| ≥ 1`.
pub fn build_diffeo<T: Scalar>(u: &TimeGridVector<T>) -> Result<Diffeo<T>> {
    let lip = u.slices.par_iter().map(max_spectral_norm).collect::<Vec<T>>().into_iter().fold(T::zero(), T::max);
    if !(lip < T::one()) {
        return Err(CoreError::LipTooLarge(lip.to64()));
    }
    let n = u.grid().dim() as i32;
    Ok(Diffeo { u: u.clone(), lip, det_lo: (T::one() - lip).powi(n), det_hi: (T::one() + lip).powi(n), spline: SplineTimeField::new(u) })
}

impl<T: Scalar> Diffeo<T> {
    /// `φ_t(x)`.
    pub fn apply(&self, t: T, x: Point<T>) -> Point<T> {
        let d = self.spline.eval(t, x);
        [x[0] + d[0], x[1] + d[1]]
    }

    /// Checks `det_lo ≤ det(I + ∇u) ≤ det_hi` at every node and slice; returns the extreme
    /// determinants seen.
    pub fn det_range(&self) -> (T, T) {
        let n = self.u.grid().dim();
        let per: Vec<(T, T)> = self
            .u
            .slices
            .par_iter()
            .map(|s| {
                let j = jacobian(s);
                (0..s.grid.len()).fold((T::infinity(), T::neg_infinity()), |(lo, hi), i| {
                    let d = if n == 1 {
                        T::one() + j[0][0].values[i]
                    } else {
                        (T::one() + j[0][0].values[i]) * (T::one() + j[1][1].values[i]) - j[0][1].values[i] * j[1][0].values[i]
                    };
                    (lo.min(d), hi.max(d))
                })
            })
            .collect();
        per.into_iter().fold((T::infinity(), T::neg_infinity()), |(a, b), (c, d)| (a.min(c), b.max(d)))
    }

    pub fn det_bracket_holds(&self) -> bool {
        let (lo, hi) = self.det_range();
        let slack = T::of(1e-12);
        lo >= self.det_lo - slack && hi <= self.det_hi + slack
    }

    /// Inverse sampled on the grid at slice `m`, seeded by `warm`.
    pub fn inverse_at_slice(&self, m: usize, warm: Option<&[Point<T>]>) -> Result<InverseMap<T>> {
        invert_displacement(&self.u.slices[m], warm)
    }

    /// Inverse sampled on the grid at time `t` (slices interpolated linearly).
    pub fn inverse_at(&self, t: T) -> Result<InverseMap<T>> {
        invert_displacement(&self.u.slice_at(t), None)
    }
}

/// Result of the contraction `y ← x − u(t, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointInverse<T> {
    pub y: Point<T>,
    pub iterations: usize,
    /// `|y + u(t,y) − x|`.
    pub residual: T,
    /// Largest ratio of successive step lengths.
    pub max_ratio: T,
}

/// Inverts `φ_t` at `x` by fixed-point iteration.
pub fn invert_diffeo<T: Scalar>(diffeo: &Diffeo<T>, t: T, x: Point<T>, tol: T) -> Result<PointInverse<T>> {
    if !(tol > T::zero()) {
        return Err(CoreError::InvalidParameter("tol must be positive".into()));
    }
    let n = diffeo.u.grid().dim();
    let norm = |p: Point<T>| (0..n).map(|a| p[a] * p[a]).sum::<T>().sqrt();
    let bound = if diffeo.lip > T::zero() { (tol.ln() / diffeo.lip.ln()).to64().ceil().max(0.0) as usize } else { 1 };
    let max_iter = bound + 60;
    let mut y = x;
    let mut prev_step = T::zero();
    let mut max_ratio = T::zero();
    for it in 1..=max_iter {
        let d = diffeo.spline.eval(t, y);
        let mut next = y;
        for a in 0..n {
            next[a] = x[a] - d[a];
        }
        let step = norm([next[0] - y[0], next[1] - y[1]]);
        if prev_step > T::zero() && step > T::zero() {
            max_ratio = max_ratio.max(step / prev_step);
        }
        prev_step = step;
        y = next;
        let fy = diffeo.apply(t, y);
        let residual = norm([fy[0] - x[0], fy[1] - x[1]]);
        if residual <= tol {
            return Ok(PointInverse { y, iterations: it, residual, max_ratio });
        }
    }
    let fy = diffeo.apply(t, y);
    Err(CoreError::Stagnation { node: 0, residual: norm([fy[0] - x[0], fy[1] - x[1]]).to64() })
}

/// `h(x) = f(φ_t^{-1}(x)) det ∂φ_t^{-1}(x)` with `f` interpolated.
pub fn pushforward_with_inverse<T: Scalar>(f: &GridScalar<T>, inv: &InverseMap<T>) -> GridScalar<T> {
    let s = PeriodicSpline::new(f);
    let values = inv.psi.par_iter().zip(inv.det.values.par_iter()).map(|(&y, &d)| s.eval(y) * d).collect();
    GridScalar { grid: f.grid.clone(), values }
}

/// Push-forward `(φ_t)_# f`.
pub fn pushforward_under_diffeo<T: Scalar>(f: &GridScalar<T>, diffeo: &Diffeo<T>, t: T) -> Result<GridScalar<T>> {
    if f.grid != *diffeo.u.grid() {
        return Err(CoreError::GridMismatch);
    }
    Ok(pushforward_with_inverse(f, &diffeo.inverse_at(t)?))
}

/// `b̂ = λu(φ^{-1})` and `σ̂^k = e_k + ∂_k u(φ^{-1})` for one slice.
pub fn transform_slice<T: Scalar>(u: &GridVector<T>, lambda: T, inv: &InverseMap<T>) -> (GridVector<T>, Vec<GridVector<T>>) {
    let grid = &u.grid;
    let n = grid.dim();
    let spline = VectorSpline::new(u);
    let evals: Vec<(Point<T>, [[T; 2]; 2])> = inv.psi.par_iter().map(|&y| spline.eval_jac(y)).collect();
    let col = |f: &dyn Fn(&(Point<T>, [[T; 2]; 2])) -> T| GridScalar { grid: grid.clone(), values: evals.iter().map(f).collect() };
    let b_hat = GridVector { grid: grid.clone(), components: (0..n).map(|i| col(&|e| lambda * e.0[i])).collect() };
    let sigma_hat = (0..n)
        .map(|k| {
            let comps = (0..n).map(|i| col(&|e| if i == k { T::one() + e.1[i][k] } else { e.1[i][k] })).collect();
            GridVector { grid: grid.clone(), components: comps }
        })
        .collect();
    (b_hat, sigma_hat)
}

/// Transformed coefficients on every slice of `u`.
#[derive(Clone, Debug)]
pub struct TransformedCoeffs<T: Scalar> {
    pub lambda: T,
    pub b_hat: TimeGridVector<T>,
    pub sigma_hat: Vec<TimeGridVector<T>>,
}

pub fn transform_coeffs<T: Scalar>(diffeo: &Diffeo<T>, lambda: T) -> Result<TransformedCoeffs<T>> {
    let n = diffeo.u.grid().dim();
    let mut b_slices = Vec::with_capacity(diffeo.u.slices.len());
    let mut s_slices: Vec<Vec<GridVector<T>>> = vec![Vec::with_capacity(diffeo.u.slices.len()); n];
    let mut warm: Option<Vec<Point<T>>> = None;
    for (m, u) in diffeo.u.slices.iter().enumerate() {
        let inv = diffeo.inverse_at_slice(m, warm.as_deref())?;
        let (b, s) = transform_slice(u, lambda, &inv);
        b_slices.push(b);
        for (k, v) in s.into_iter().enumerate() {
            s_slices[k].push(v);
        }
        warm = Some(inv.psi);
    }
    let times = diffeo.u.times.clone();
    Ok(TransformedCoeffs {
        lambda,
        b_hat: TimeGridVector::new(times.clone(), b_slices)?,
        sigma_hat: s_slices.into_iter().map(|s| TimeGridVector::new(times.clone(), s)).collect::<Result<Vec<_>>>()?,
    })
}

/// Ledger of the original weak form for `h_m = (φ_{t_m})_# f_m` against `(b̂, σ̂)`.
/// `u` must share the path's time grid; the driving noise is `σ^k = e_k`.
pub fn transformed_residual<T: Scalar>(
    fpath: &[GridScalar<T>],
    sol: &ParabolicSolution<T>,
    phi: &TestFunction<T>,
    path: &BrownianPath<T>,
    quadrature: CovariationQuadrature,
) -> Result<WeakFormLedger<T>> {
    crate::weakform::ledger::check_path(fpath, path, path.k_count())?;
    let mut t = TransformedLedger::new(sol, phi, path, quadrature)?;
    for f in fpath {
        t.push(f)?;
    }
    t.finish()
}

/// Streams the original equation with `σ^k = e_k` from `f0` and assembles the transformed ledger.
pub fn transformed_residual_stream<T: Scalar>(
    f0: &GridScalar<T>,
    b: &TimeGridVector<T>,
    sol: &ParabolicSolution<T>,
    phi: &TestFunction<T>,
    path: &BrownianPath<T>,
    quadrature: CovariationQuadrature,
) -> Result<WeakFormLedger<T>> {
    let coeffs = SdeCoefficients::new(b.clone(), unit_noise(b.grid(), b.final_time()))?;
    let mut stream = DensityStream::new(f0, &coeffs, path)?;
    let mut t = TransformedLedger::new(sol, phi, path, quadrature)?;
    while let Some(f) = stream.next_density() {
        t.push(&f?)?;
    }
    t.finish()
}

struct TransformedLedger<'a, T: Scalar> {
    sol: &'a ParabolicSolution<T>,
    path: &'a BrownianPath<T>,
    builder: LedgerBuilder<'a, T>,
    step: usize,
    warm: Option<Vec<Point<T>>>,
    last: Option<GridScalar<T>>,
}

impl<'a, T: Scalar> TransformedLedger<'a, T> {
    fn new(sol: &'a ParabolicSolution<T>, phi: &'a TestFunction<T>, path: &'a BrownianPath<T>, quadrature: CovariationQuadrature) -> Result<Self> {
        let tol = path.dt() * T::of(1e-6);
        if sol.steps() != path.steps() || (sol.u.final_time() - path.t_final()).abs() > tol {
            return Err(CoreError::TimeGrid("u and the path must share the time grid".into()));
        }
        if path.k_count() != sol.u.grid().dim() {
            return Err(CoreError::InvalidParameter("the transform needs one noise component per axis".into()));
        }
        if sol.lipschitz() >= T::one() {
            return Err(CoreError::LipTooLarge(sol.lipschitz().to64()));
        }
        Ok(Self { sol, path, builder: LedgerBuilder::new(phi, Variant::Original, quadrature), step: 0, warm: None, last: None })
    }

    fn push(&mut self, f: &GridScalar<T>) -> Result<()> {
        let m = self.step;
        if m > self.path.steps() {
            return Err(CoreError::TimeGrid("more states than steps".into()));
        }
        let u = &self.sol.u.slices[m];
        let inv = invert_displacement(u, self.warm.as_deref())?;
        let h = pushforward_with_inverse(f, &inv);
        if m < self.path.steps() {
            let (b_hat, s_hat) = transform_slice(u, self.sol.lambda, &inv);
            let snap = Snapshot::new(b_hat, s_hat)?;
            self.builder.push_step(&h, &snap, self.path.increment(m), self.path.dt());
        }
        self.warm = Some(inv.psi);
        self.last = Some(h);
        self.step += 1;
        Ok(())
    }

    fn finish(self) -> Result<WeakFormLedger<T>> {
        if self.step != self.path.steps() + 1 {
            return Err(CoreError::TimeGrid(format!("{} states for {} steps", self.step, self.path.steps())));
        }
        Ok(self.builder.finish(&self.last.expect("at least one state")))
    }
}

/// The four relaxation norms of the transformed coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxationMetrics<T> {
    pub lambda: T,
    /// `‖b̂ − b‖_{L^q_t(L^p)}`.
    pub bhat_err: T,
    /// `Σ_k ‖σ̂^k − e_k‖_{L^q_t(L^p)}`.
    pub sigma_err: T,
    /// `Σ_k ‖∇σ̂^k‖_{L^q_t(L^r)}`.
    pub grad_sigma_err: T,
    /// `‖Div b̂ − Div b‖_{L¹_t(L¹)}`.
    pub div_err: T,
}

impl<T: Scalar> RelaxationMetrics<T> {
    pub fn as_array(&self) -> [T; 4] {
        [self.bhat_err, self.sigma_err, self.grad_sigma_err, self.div_err]
    }

    pub fn csv_header() -> &'static str {
        "lambda,bhat_err,sigma_err,grad_sigma_err,div_err\n"
    }

    pub fn csv_row(&self) -> String {
        format!("{:e},{:e},{:e},{:e},{:e}\n", self.lambda, self.bhat_err, self.sigma_err, self.grad_sigma_err, self.div_err)
    }
}

pub fn relaxation_metrics<T: Scalar>(coeffs: &TransformedCoeffs<T>, b: &TimeGridVector<T>, q: T, p: T, r: T) -> Result<RelaxationMetrics<T>> {
    if !(r < p) {
        return Err(CoreError::InvalidParameter(format!("r = {r} must be below p = {p}")));
    }
    let times = &coeffs.b_hat.times;
    let grid = coeffs.b_hat.grid().clone();
    let full = Region::Full;
    let rows: Vec<[T; 4]> = times
        .par_iter()
        .enumerate()
        .map(|(m, &t)| {
            let bt = b.slice_at(t);
            let bh = &coeffs.b_hat.slices[m];
            let e0 = lp_norm(&derivative_magnitude(&bh.sub(&bt), 0)?, p, &full)?;
            let mut e1 = T::zero();
            let mut e2 = T::zero();
            for (k, s) in coeffs.sigma_hat.iter().enumerate() {
                let d = s.slices[m].sub(&GridVector::unit(&grid, k));
                e1 = e1 + lp_norm(&derivative_magnitude(&d, 0)?, p, &full)?;
                e2 = e2 + lp_norm(&derivative_magnitude(&s.slices[m], 1)?, r, &full)?;
            }
            let e3 = lp_norm(&(&divergence(bh) - &divergence(&bt)), T::one(), &full)?;
            Ok([e0, e1, e2, e3])
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<T>>();
    Ok(RelaxationMetrics {
        lambda: coeffs.lambda,
        bhat_err: time_norm(&col(0), times, q),
        sigma_err: time_norm(&col(1), times, q),
        grad_sigma_err: time_norm(&col(2), times, q),
        div_err: integrate_series(&col(3), times),
    })
}

/// `‖g_λ∘φ_t^{-1} − g‖_{L^p}`; with `g_λ = g` this is the fixed-target composition error.
pub fn composition_error<T: Scalar>(g_lambda: &GridScalar<T>, g: &GridScalar<T>, diffeo: &Diffeo<T>, t: T, p: T) -> Result<T> {
    let inv = diffeo.inverse_at(t)?;
    let s = PeriodicSpline::new(g_lambda);
    let composed = GridScalar { grid: g.grid.clone(), values: inv.psi.iter().map(|&y| s.eval(y)).collect() };
    lp_norm(&(&composed - g), p, &Region::Full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_grid, Grid};
    use crate::parabolic::{mild_solve, MildConfig};
    use crate::presets::{constant_drift, rotation_drift};
    use crate::weakform::bump_test_function;
    use std::f64::consts::TAU;

    fn steady(g: &Grid<f64>, f: impl Fn([f64; 2]) -> [f64; 2] + Sync) -> TimeGridVector<f64> {
        TimeGridVector::steady(GridVector::from_fn(g, f), 0.5)
    }

    #[test]
    fn zero_u_is_identity() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let d = build_diffeo(&steady(&g, |_| [0.0, 0.0])).unwrap();
        assert_eq!((d.lip, d.det_lo, d.det_hi), (0.0, 1.0, 1.0));
        let r = invert_diffeo(&d, 0.2, [1.0, 2.0], 1e-12).unwrap();
        assert_eq!((r.y, r.iterations), ([1.0, 2.0], 1));
        let tc = transform_coeffs(&d, 4.0).unwrap();
        assert!(tc.b_hat.slices[0].components[0].max_abs() == 0.0);
        assert!((&tc.sigma_hat[1].slices[1].components[1] - &GridScalar::constant(&g, 1.0)).max_abs() == 0.0);
        let f = GridScalar::from_fn(&g, |p| p[0].sin());
        assert!((&pushforward_under_diffeo(&f, &d, 0.3).unwrap() - &f).max_abs() < 1e-12);
    }

    #[test]
    fn determinant_bounds_for_lip_04() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let d = build_diffeo(&steady(&g, |p| [0.4 * p[0].sin(), 0.0])).unwrap();
        assert!((d.lip - 0.4).abs() < 1e-12);
        assert!((d.det_lo - 0.36).abs() < 1e-12 && (d.det_hi - 1.96).abs() < 1e-12);
        assert!(d.det_bracket_holds());
        assert!(matches!(build_diffeo(&steady(&g, |p| [1.2 * p[0].sin(), 0.0])), Err(CoreError::LipTooLarge(_))));
    }

    #[test]
    fn contraction_inverse_in_1d() {
        let g = build_grid::<f64>(1, TAU, 64).unwrap();
        let d = build_diffeo(&steady(&g, |p| [0.3 * p[0].sin(), 0.0])).unwrap();
        for x in [0.3, 1.7, 3.0, 5.5] {
            let r = invert_diffeo(&d, 0.0, [x, 0.0], 1e-10).unwrap();
            assert!(r.residual <= 1e-10 && r.iterations <= 60);
            assert!(r.max_ratio <= d.lip + 0.05, "{}", r.max_ratio);
            // round trip the other way
            let back = invert_diffeo(&d, 0.0, d.apply(0.0, [x, 0.0]), 1e-12).unwrap();
            assert!((back.y[0] - x).abs() <= 1e-12 / (1.0 - d.lip) + 1e-14);
        }
    }

    #[test]
    fn constant_drift_transforms_to_relaxed_constant() {
        let g = build_grid::<f64>(2, TAU, 8).unwrap();
        let c = [0.8, -0.3];
        let t = 0.5;
        let b = constant_drift(&g, t, c);
        let lam = 16.0;
        let sol = mild_solve(&b, lam, &MildConfig { quad_steps: 256, ..Default::default() }).unwrap();
        let d = build_diffeo(&sol.u).unwrap();
        let tc = transform_coeffs(&d, lam).unwrap();
        for (m, &tm) in tc.b_hat.times.iter().enumerate() {
            let f = 1.0 - (-lam * (t - tm)).exp();
            for a in 0..2 {
                assert!(tc.b_hat.slices[m].components[a].values.iter().all(|v| (v - c[a] * f).abs() < 1e-10));
            }
        }
        let rm = relaxation_metrics(&tc, &b, 4.0, 8.0, 4.0).unwrap();
        let cn = (c[0] * c[0] + c[1] * c[1]).sqrt();
        let en: Vec<f64> = tc.b_hat.times.iter().map(|&s| (-lam * (t - s)).exp()).collect();
        let want = cn * (TAU * TAU).powf(1.0 / 8.0) * time_norm(&en, &tc.b_hat.times, 4.0);
        let exact = cn * (TAU * TAU).powf(1.0 / 8.0) * ((1.0 - (-4.0 * lam * t).exp()) / (4.0 * lam)).powf(0.25);
        assert!((rm.bhat_err - want).abs() < 1e-9 * want);
        assert!((rm.bhat_err - exact).abs() < 1e-3 * exact);
        assert!(rm.sigma_err < 1e-12 && rm.grad_sigma_err < 1e-12 && rm.div_err < 1e-12);
    }

    #[test]
    fn sigma_hat_columns_and_determinant() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let u = steady(&g, |p| [0.2 * p[1].sin(), 0.25 * (p[0] + p[1]).cos()]);
        let d = build_diffeo(&u).unwrap();
        let inv = d.inverse_at_slice(0, None).unwrap();
        let (_, s) = transform_slice(&u.slices[0], 1.0, &inv);
        for i in 0..g.len() {
            let a = s[0].at(i);
            let b = s[1].at(i);
            let det = a[0] * b[1] - a[1] * b[0];
            assert!((det * inv.det.values[i] - 1.0).abs() < 1e-3);
            assert!(((a[0] - 1.0).powi(2) + a[1] * a[1]).sqrt() <= d.lip + 1e-3);
        }
    }

    #[test]
    fn pushforward_duality_and_mass() {
        let g = build_grid::<f64>(2, TAU, 64).unwrap();
        let u = steady(&g, |p| [0.2 * p[1].sin(), 0.25 * (p[0] + p[1]).cos()]);
        let d = build_diffeo(&u).unwrap();
        let f = GridScalar::from_fn(&g, |p| (p[0].cos() + 0.5 * p[1].sin()).exp());
        let h = pushforward_under_diffeo(&f, &d, 0.0).unwrap();
        let hh = g.spacing() * g.spacing();
        assert!((h.integral() - f.integral()).abs() <= 10.0 * hh * f.integral());
        let psi = bump_test_function(&g, g.center(), 1.4).unwrap();
        let spl = PeriodicSpline::new(&psi.values);
        let psi_phi = GridScalar::from_fn(&g, |p| spl.eval(d.apply(0.0, p)));
        assert!((h.inner(&psi.values) - f.inner(&psi_phi)).abs() <= 10.0 * hh);
        let c = GridScalar::constant(&g, 2.0);
        let hc = pushforward_under_diffeo(&c, &d, 0.0).unwrap();
        assert!((hc.integral() - 2.0 * TAU * TAU).abs() < 10.0 * hh);
    }

    #[test]
    fn relaxation_and_composition_improve_with_lambda() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let b = rotation_drift(&g, 0.25, 0.8).unwrap();
        let target = GridScalar::from_fn(&g, |p| (p[0].sin() * p[1].cos()).exp());
        let mut prev = [f64::INFINITY; 5];
        for lam in [4.0, 16.0, 64.0] {
            let sol = mild_solve(&b, lam, &MildConfig { quad_steps: 64, ..Default::default() }).unwrap();
            let d = build_diffeo(&sol.u).unwrap();
            assert!(d.det_bracket_holds());
            let rm = relaxation_metrics(&transform_coeffs(&d, lam).unwrap(), &b, 4.0, 8.0, 4.0).unwrap();
            let ce = composition_error(&target, &target, &d, 0.0, 2.0).unwrap();
            let now = [rm.bhat_err, rm.sigma_err, rm.grad_sigma_err, rm.div_err, ce];
            for i in 0..5 {
                assert!(now[i] < prev[i], "{lam} {i} {now:?} {prev:?}");
            }
            prev = now;
        }
    }

    #[test]
    fn zero_drift_ledger_matches_untransformed() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let t = 0.1;
        let b = constant_drift(&g, t, [0.0, 0.0]);
        let path = crate::flow::sample_brownian(t, 0.01, 2, 5).unwrap();
        let sol = mild_solve(&b, 4.0, &MildConfig { quad_steps: path.steps(), ..Default::default() }).unwrap();
        let phi = bump_test_function(&g, g.center(), 1.4).unwrap();
        let f0 = crate::presets::trig_density(&g);
        let z = transformed_residual_stream(&f0, &b, &sol, &phi, &path, CovariationQuadrature::Realized).unwrap();
        let coeffs = SdeCoefficients::new(b.clone(), unit_noise(&g, t)).unwrap();
        let fpath = crate::flow::density_path(&f0, &coeffs, &path).unwrap();
        let o = crate::weakform::residual_original(&fpath, &b, &unit_noise(&g, t), &phi, &path, CovariationQuadrature::Realized).unwrap();
        assert!((z.residual - o.residual).abs() < 1e-12);
        let direct = transformed_residual(&fpath, &sol, &phi, &path, CovariationQuadrature::Realized).unwrap();
        assert_eq!(direct, z);
    }
}
