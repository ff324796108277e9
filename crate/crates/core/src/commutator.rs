//! Mollifier commutators `T_{σ,ε}`, `S_{σ,ε}`, their smooth limits and the remainder identities.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::field::{
    divergence, gradient, hessian, jacobian, lp_norm, mollifier, partial, second_partial, GridScalar, GridVector,
    MollifierKernel, Region,
};
use crate::scalar::Scalar;
use crate::stats::loglog_slope;
use crate::weakform::Renormalizer;

/// Sign of the `ε → 0` limit of `T_{σ,ε}(f)` relative to `(Div σ) f`.
pub const T_LIMIT_SIGN: f64 = -1.0;

/// Sign in front of `Div σ Γ(f_ε)` in the first remainder identity.
pub const R1_DIV_SIGN: f64 = 1.0;

fn check_grids<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>) -> Result<()> {
    if sigma.grid != f.grid {
        Err(CoreError::GridMismatch)
    } else {
        Ok(())
    }
}

/// `T_{σ,ε}(f)` using a prebuilt kernel.
pub fn op_t_with<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>, k: &MollifierKernel<T>) -> Result<GridScalar<T>> {
    check_grids(sigma, f)?;
    let fe = k.convolve(f)?;
    let lhs = sigma.dot(&gradient(&fe));
    let flux = sigma.mul_scalar(f);
    let mut rhs = GridScalar::zeros(&f.grid);
    for (a, c) in flux.components.iter().enumerate() {
        rhs = &rhs + &partial(&k.convolve(c)?, a);
    }
    Ok(&lhs - &rhs)
}

/// `T_{σ,ε}(f) = ∇_σ f_ε − (Div_σ f)_ε`.
pub fn op_t<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>, epsilon: T) -> Result<GridScalar<T>> {
    check_grids(sigma, f)?;
    op_t_with(sigma, f, &mollifier(&f.grid, epsilon)?)
}

/// Drift commutator `T_{b,ε}(f)`; same operator with `b` in place of `σ`.
pub fn op_t_drift<T: Scalar>(b: &GridVector<T>, f: &GridScalar<T>, epsilon: T) -> Result<GridScalar<T>> {
    op_t(b, f, epsilon)
}

/// `𝓛_σ g = ½ σ_i σ_j ∂_i∂_j g`.
pub fn generator<T: Scalar>(sigma: &GridVector<T>, g: &GridScalar<T>) -> GridScalar<T> {
    let h = hessian(g);
    let n = g.grid.dim();
    let mut out = GridScalar::zeros(&g.grid);
    for i in 0..n {
        for j in 0..n {
            let term = &(&sigma.components[i] * &sigma.components[j]) * &h[i][j];
            out = &out + &term;
        }
    }
    out.scale(T::of(0.5))
}

/// `𝓛*_σ g = ½ ∂_i∂_j(σ_i σ_j g)`.
pub fn adjoint_generator<T: Scalar>(sigma: &GridVector<T>, g: &GridScalar<T>) -> GridScalar<T> {
    let n = g.grid.dim();
    let mut out = GridScalar::zeros(&g.grid);
    for i in 0..n {
        for j in 0..n {
            let prod = &(&sigma.components[i] * &sigma.components[j]) * g;
            out = &out + &second_partial(&prod, i, j);
        }
    }
    out.scale(T::of(0.5))
}

/// `Div_σ g = Div(σ g)`.
pub fn div_sigma<T: Scalar>(sigma: &GridVector<T>, g: &GridScalar<T>) -> GridScalar<T> {
    divergence(&sigma.mul_scalar(g))
}

/// `S_{σ,ε}(f)` using a prebuilt kernel.
pub fn op_s_with<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>, k: &MollifierKernel<T>) -> Result<GridScalar<T>> {
    check_grids(sigma, f)?;
    let fe = k.convolve(f)?;
    let a = generator(sigma, &fe);
    let b = sigma.dot(&gradient(&k.convolve(&div_sigma(sigma, f))?));
    let c = k.convolve(&adjoint_generator(sigma, f))?;
    Ok(&(&a - &b) + &c)
}

/// `S_{σ,ε}(f) = 𝓛_σ f_ε − ∇_σ(Div_σ f)_ε + (𝓛*_σ f)_ε`.
pub fn op_s<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>, epsilon: T) -> Result<GridScalar<T>> {
    check_grids(sigma, f)?;
    op_s_with(sigma, f, &mollifier(&f.grid, epsilon)?)
}

/// `∂_i σ_j ∂_j σ_i` pointwise.
pub fn trace_grad_sq<T: Scalar>(sigma: &GridVector<T>) -> GridScalar<T> {
    let j = jacobian(sigma);
    let n = sigma.dim();
    let mut out = GridScalar::zeros(&sigma.grid);
    for a in 0..n {
        for b in 0..n {
            out = &out + &(&j[a][b] * &j[b][a]);
        }
    }
    out
}

/// Pointwise Frobenius norm of `∇σ`.
pub fn grad_norm<T: Scalar>(sigma: &GridVector<T>) -> GridScalar<T> {
    let j = jacobian(sigma);
    let mut sq = GridScalar::zeros(&sigma.grid);
    for row in &j {
        for e in row {
            sq = &sq + &(e * e);
        }
    }
    sq.map(|v| v.sqrt())
}

/// Smooth-case limits `(s_T (Div σ) f, ½(∂_iσ_j∂_jσ_i + (Div σ)²) f)`.
pub fn commutator_limits<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>) -> (GridScalar<T>, GridScalar<T>) {
    let d = divergence(sigma);
    let t_lim = (&d * f).scale(T::of(T_LIMIT_SIGN));
    let s_lim = &(&trace_grad_sq(sigma) + &(&d * &d)) * f;
    (t_lim, s_lim.scale(T::of(0.5)))
}

/// Direct kernel quadrature `∫ ∇η_ε(x−y)·(σ(x)−σ(y)) f(y) dy` (O(N^{2n}) oracle).
pub fn op_t_kernel_form<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>, epsilon: T) -> Result<GridScalar<T>> {
    check_grids(sigma, f)?;
    let k = mollifier(&f.grid, epsilon)?;
    let deta = gradient(&k.values);
    let g = &f.grid;
    let n = g.points();
    let hn = g.cell_volume();
    let values = (0..g.len())
        .into_par_iter()
        .map(|x| {
            let xi = g.split(x);
            let mut acc = T::zero();
            for y in 0..g.len() {
                let yi = g.split(y);
                let off = g.flat([(xi[0] + n - yi[0]) % n, (xi[1] + n - yi[1]) % n]);
                let mut dot = T::zero();
                for a in 0..g.dim() {
                    dot = dot + deta.components[a].values[off] * (sigma.components[a].values[x] - sigma.components[a].values[y]);
                }
                acc = acc + dot * f.values[y];
            }
            acc * hn
        })
        .collect();
    Ok(GridScalar { grid: g.clone(), values })
}

/// Direct kernel quadrature `½ ∫ ∂_i∂_jη_ε(x−y)(σ_i(x)−σ_i(y))(σ_j(x)−σ_j(y)) f(y) dy`.
pub fn op_s_kernel_form<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>, epsilon: T) -> Result<GridScalar<T>> {
    check_grids(sigma, f)?;
    let k = mollifier(&f.grid, epsilon)?;
    let h = hessian(&k.values);
    let g = &f.grid;
    let n = g.points();
    let d = g.dim();
    let hn = g.cell_volume();
    let values = (0..g.len())
        .into_par_iter()
        .map(|x| {
            let xi = g.split(x);
            let mut acc = T::zero();
            for y in 0..g.len() {
                let yi = g.split(y);
                let off = g.flat([(xi[0] + n - yi[0]) % n, (xi[1] + n - yi[1]) % n]);
                let mut q = T::zero();
                for a in 0..d {
                    let da = sigma.components[a].values[x] - sigma.components[a].values[y];
                    for b in 0..d {
                        let db = sigma.components[b].values[x] - sigma.components[b].values[y];
                        q = q + h[a][b].values[off] * da * db;
                    }
                }
                acc = acc + q * f.values[y];
            }
            acc * hn * T::of(0.5)
        })
        .collect();
    Ok(GridScalar { grid: g.clone(), values })
}

/// Which commutator a study measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorTag {
    T,
    S,
    TDrift,
}

impl OperatorTag {
    pub fn name(self) -> &'static str {
        match self {
            OperatorTag::T => "T",
            OperatorTag::S => "S",
            OperatorTag::TDrift => "T_drift",
        }
    }
}

/// Error and bound ratios of a commutator over a decreasing list of radii.
#[derive(Clone, Debug)]
pub struct CommutatorStudy<T: Scalar> {
    pub operator_tag: OperatorTag,
    pub epsilons: Vec<T>,
    pub errors: Vec<T>,
    pub bound_ratios: Vec<T>,
    /// Least-squares slope of log error against log ε; `None` for degenerate studies.
    pub fitted_rate: Option<T>,
    pub degenerate_zero: bool,
    /// Largest observed bound ratio.
    pub bound_constant: T,
    pub r: T,
}

impl<T: Scalar> CommutatorStudy<T> {
    pub fn errors_strictly_decreasing(&self) -> bool {
        crate::stats::strictly_decreasing(&self.errors)
    }

    /// CSV body with columns `epsilon,error_Lr,bound_ratio`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,error_Lr,bound_ratio\n");
        for i in 0..self.epsilons.len() {
            s.push_str(&format!("{:e},{:e},{:e}\n", self.epsilons[i], self.errors[i], self.bound_ratios[i]));
        }
        s
    }
}

/// Lebesgue exponent of the commutator given `σ ∈ L^q`, `f ∈ L^p`.
pub fn study_exponent<T: Scalar>(tag: OperatorTag, q: T, p: T) -> Result<T> {
    let inv = match tag {
        OperatorTag::T | OperatorTag::TDrift => T::one() / q + T::one() / p,
        OperatorTag::S => T::of(2.0) / q + T::one() / p,
    };
    if inv > T::one() {
        return Err(CoreError::InvalidParameter(format!("1/r = {inv} exceeds 1")));
    }
    Ok(if inv == T::zero() { T::infinity() } else { T::one() / inv })
}

/// Error of `op − limit` in `L^r(region)` per radius, rate fit and bound ratios.
pub fn convergence_study<T: Scalar>(
    tag: OperatorTag,
    sigma: &GridVector<T>,
    f: &GridScalar<T>,
    epsilons: &[T],
    q: T,
    p: T,
    region: &Region<T>,
) -> Result<CommutatorStudy<T>> {
    if epsilons.len() < 3 {
        return Err(CoreError::TooFewEntries { needed: 3, got: epsilons.len() });
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(CoreError::InvalidParameter("epsilons must be strictly decreasing".into()));
    }
    check_grids(sigma, f)?;
    let r = study_exponent(tag, q, p)?;
    let (t_lim, s_lim) = commutator_limits(sigma, f);
    let limit = if tag == OperatorTag::S { s_lim } else { t_lim };
    let gs = lp_norm(&grad_norm(sigma), q, &Region::Full)?;
    let fp = lp_norm(f, p, &Region::Full)?;
    let denom = if tag == OperatorTag::S { gs * gs * fp } else { gs * fp };
    let rows: Vec<Result<(T, T)>> = epsilons
        .par_iter()
        .map(|&eps| {
            let k = mollifier(&f.grid, eps)?;
            let op = if tag == OperatorTag::S { op_s_with(sigma, f, &k)? } else { op_t_with(sigma, f, &k)? };
            let err = lp_norm(&(&op - &limit), r, region)?;
            let size = lp_norm(&op, r, region)?;
            Ok((err, size))
        })
        .collect();
    let mut errors = Vec::with_capacity(rows.len());
    let mut bound_ratios = Vec::with_capacity(rows.len());
    for row in rows {
        let (e, s) = row?;
        errors.push(e);
        bound_ratios.push(if denom > T::zero() { s / denom } else { T::zero() });
    }
    let tiny = T::of(1e-9);
    let degenerate_zero = errors.iter().all(|&e| e <= tiny) && lp_norm(&limit, r, region)? <= tiny;
    let fitted_rate = if degenerate_zero { None } else { Some(loglog_slope(epsilons, &errors)) };
    let bound_constant = bound_ratios.iter().fold(T::zero(), |m, &v| m.max(v));
    Ok(CommutatorStudy { operator_tag: tag, epsilons: epsilons.to_vec(), errors, bound_ratios, fitted_rate, degenerate_zero, bound_constant, r })
}

/// First remainder from its definition: `Div_σ Γ(f_ε) − Γ'(f_ε)(Div_σ f)_ε`.
pub fn r1_defining<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>, k: &MollifierKernel<T>, gamma: &Renormalizer<T>) -> Result<GridScalar<T>> {
    let fe = k.convolve(f)?;
    let a = div_sigma(sigma, &fe.map(|z| gamma.gamma(z)));
    let b = &fe.map(|z| gamma.d1(z)) * &k.convolve(&div_sigma(sigma, f))?;
    Ok(&a - &b)
}

/// First remainder rebuilt from the commutator: `Γ'(f_ε) T + s (Div σ) Γ(f_ε)`.
pub fn r1_reconstruction<T: Scalar>(
    sigma: &GridVector<T>,
    f: &GridScalar<T>,
    k: &MollifierKernel<T>,
    gamma: &Renormalizer<T>,
    sign: T,
) -> Result<GridScalar<T>> {
    let fe = k.convolve(f)?;
    let t = op_t_with(sigma, f, k)?;
    let a = &fe.map(|z| gamma.d1(z)) * &t;
    let b = &divergence(sigma) * &fe.map(|z| gamma.gamma(z));
    Ok(&a + &b.scale(sign))
}

/// Second remainder from its definition:
/// `Γ'(f_ε)(𝓛*_σ f)_ε − 𝓛*_σ Γ(f_ε) + ½ Γ''(f_ε) (Div_σ f)_ε²`.
pub fn r2_defining<T: Scalar>(sigma: &GridVector<T>, f: &GridScalar<T>, k: &MollifierKernel<T>, gamma: &Renormalizer<T>) -> Result<GridScalar<T>> {
    let fe = k.convolve(f)?;
    let a = &fe.map(|z| gamma.d1(z)) * &k.convolve(&adjoint_generator(sigma, f))?;
    let b = adjoint_generator(sigma, &fe.map(|z| gamma.gamma(z)));
    let dsf = k.convolve(&div_sigma(sigma, f))?;
    let c = &fe.map(|z| gamma.d2(z)) * &(&dsf * &dsf);
    Ok(&(&a - &b) + &c.scale(T::of(0.5)))
}

/// Signs of the three sign-ambiguous terms in the second remainder identity:
/// `± ½Γ'(Div σ)T`, `± Div_σ R¹`, `± ½(Div σ)R¹`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct R2Signs {
    pub div_t: f64,
    pub div_sigma_r1: f64,
    pub div_r1: f64,
}

impl R2Signs {
    /// The combination that reproduces the defining expression.
    pub const CONSISTENT: R2Signs = R2Signs { div_t: 1.0, div_sigma_r1: -1.0, div_r1: 1.0 };

    /// All eight sign combinations.
    pub fn all() -> Vec<R2Signs> {
        let mut v = Vec::with_capacity(8);
        for a in [1.0, -1.0] {
            for b in [1.0, -1.0] {
                for c in [1.0, -1.0] {
                    v.push(R2Signs { div_t: a, div_sigma_r1: b, div_r1: c });
                }
            }
        }
        v
    }
}

/// Second remainder rebuilt from `T`, `S` and the defining first remainder:
/// `Γ'S − ½Γ ∂_iσ_j∂_jσ_i + s₁ ½Γ'(Div σ)T + ½Γ''T² + s₂ Div_σ R¹ + s₃ ½(Div σ)R¹`.
pub fn r2_reconstruction<T: Scalar>(
    sigma: &GridVector<T>,
    f: &GridScalar<T>,
    k: &MollifierKernel<T>,
    gamma: &Renormalizer<T>,
    signs: R2Signs,
) -> Result<GridScalar<T>> {
    let fe = k.convolve(f)?;
    let g0 = fe.map(|z| gamma.gamma(z));
    let g1 = fe.map(|z| gamma.d1(z));
    let g2 = fe.map(|z| gamma.d2(z));
    let t = op_t_with(sigma, f, k)?;
    let s = op_s_with(sigma, f, k)?;
    let d = divergence(sigma);
    let r1 = r1_defining(sigma, f, k, gamma)?;
    let half = T::of(0.5);
    let mut out = &g1 * &s;
    out = &out - &(&g0 * &trace_grad_sq(sigma)).scale(half);
    out = &out + &(&(&g1 * &d) * &t).scale(half * T::of(signs.div_t));
    out = &out + &(&g2 * &(&t * &t)).scale(half);
    out = &out + &div_sigma(sigma, &r1).scale(T::of(signs.div_sigma_r1));
    out = &out + &(&d * &r1).scale(half * T::of(signs.div_r1));
    Ok(out)
}

/// Relative sup-norm mismatch `‖a − b‖∞ / max(‖b‖∞, tiny)`.
pub fn relative_mismatch<T: Scalar>(a: &GridScalar<T>, b: &GridScalar<T>) -> T {
    (a - b).max_abs() / b.max_abs().max(T::min_positive_value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_grid;
    use crate::weakform::RenormKind;
    use std::f64::consts::TAU;

    fn grid1(n: usize) -> crate::field::Grid<f64> {
        build_grid(1, TAU, n).unwrap()
    }

    #[test]
    fn constant_sigma_gives_zero() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let s = GridVector::constant(&g, [0.7, -1.3]);
        let f = GridScalar::from_fn(&g, |p| (p[0].sin() + p[1].cos()).exp());
        assert!(op_t(&s, &f, TAU / 8.0).unwrap().max_abs() < 1e-10);
        assert!(op_s(&s, &f, TAU / 8.0).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn zero_sigma_gives_exact_zero() {
        let g = grid1(32);
        let f = GridScalar::from_fn(&g, |p| p[0].cos());
        assert_eq!(op_s(&GridVector::zeros(&g), &f, TAU / 8.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn unit_density_gives_minus_mollified_divergence() {
        let g = grid1(64);
        let s = GridVector::from_fn(&g, |p| [p[0].sin() + 0.3 * (2.0 * p[0]).cos(), 0.0]);
        let one = GridScalar::constant(&g, 1.0);
        let eps = TAU / 16.0;
        let k = mollifier(&g, eps).unwrap();
        let want = k.convolve(&divergence(&s)).unwrap().scale(-1.0);
        assert!((&op_t(&s, &one, eps).unwrap() - &want).max_abs() < 1e-10);
        assert!((&op_t_drift(&s, &one, eps).unwrap() - &want).max_abs() < 1e-10);
    }

    #[test]
    fn kernel_form_matches_derivative_form() {
        for (dim, n) in [(1, 64), (2, 32)] {
            let g = build_grid::<f64>(dim, TAU, n).unwrap();
            let s = GridVector::from_fn(&g, |p| [p[1].sin() + 0.5 * p[0].cos(), (p[0] - p[1]).sin()]);
            let f = GridScalar::from_fn(&g, |p| (p[0].cos() + 0.5 * p[1].sin()).exp());
            let eps = TAU / 8.0;
            let a = op_t(&s, &f, eps).unwrap();
            let b = op_t_kernel_form(&s, &f, eps).unwrap();
            assert!(relative_mismatch(&a, &b) < 1e-7, "T {dim} {}", relative_mismatch(&a, &b));
            let a = op_s(&s, &f, eps).unwrap();
            let b = op_s_kernel_form(&s, &f, eps).unwrap();
            assert!(relative_mismatch(&a, &b) < 1e-7, "S {dim} {}", relative_mismatch(&a, &b));
        }
    }

    #[test]
    fn t_limit_sign_selected_by_smooth_expansion() {
        // T → σ·∇f − Div(σf) = −(Div σ) f for smooth data.
        let g = grid1(64);
        let s = GridVector::from_fn(&g, |p| [p[0].sin(), 0.0]);
        let f = GridScalar::from_fn(&g, |p| p[0].cos());
        let t = op_t(&s, &f, 4.0 * g.spacing()).unwrap();
        let base = &divergence(&s) * &f;
        let plus = (&t - &base).max_abs();
        let minus = (&t + &base).max_abs();
        assert!(minus < 0.05 * plus);
        assert_eq!(T_LIMIT_SIGN, -1.0);
    }

    #[test]
    fn s_limit_for_sine() {
        let g = grid1(64);
        let s = GridVector::from_fn(&g, |p| [p[0].sin(), 0.0]);
        let one = GridScalar::constant(&g, 1.0);
        let (t_lim, s_lim) = commutator_limits(&s, &one);
        for i in 0..g.len() {
            let x = g.node(i)[0];
            assert!((t_lim.values[i] + x.cos()).abs() < 1e-10);
            assert!((s_lim.values[i] - x.cos().powi(2)).abs() < 1e-10);
        }
        let sv = op_s(&s, &one, 4.0 * g.spacing()).unwrap();
        assert!((&sv - &s_lim).max_abs() < 0.05);
    }

    #[test]
    fn limits_for_rotation_like_field() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let s = GridVector::from_fn(&g, |p| [p[1].sin(), p[0].sin()]);
        let one = GridScalar::constant(&g, 1.0);
        let (t_lim, s_lim) = commutator_limits(&s, &one);
        assert!(t_lim.max_abs() < 1e-12);
        for i in 0..g.len() {
            let p = g.node(i);
            assert!((s_lim.values[i] - p[0].cos() * p[1].cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn study_rates_and_degenerate_case() {
        let g = grid1(64);
        let s = GridVector::from_fn(&g, |p| [p[0].sin(), 0.0]);
        let f = GridScalar::from_fn(&g, |p| p[0].cos());
        let eps = [TAU / 8.0, TAU / 16.0, TAU / 32.0];
        let region = Region::central_half(&g);
        for tag in [OperatorTag::T, OperatorTag::S] {
            let st = convergence_study(tag, &s, &f, &eps, 4.0, 4.0, &region).unwrap();
            assert!(st.errors_strictly_decreasing());
            assert!(st.fitted_rate.unwrap() >= 0.9);
            assert!(st.bound_constant.is_finite());
        }
        let c = GridVector::constant(&g, [2.0, 0.0]);
        let st = convergence_study(OperatorTag::T, &c, &f, &eps, 4.0, 4.0, &region).unwrap();
        assert!(st.degenerate_zero);
        assert!(st.errors.iter().all(|&e| e <= 1e-9));
        assert!(convergence_study(OperatorTag::T, &c, &f, &eps[..2], 4.0, 4.0, &region).is_err());
    }

    #[test]
    fn remainder_identities_select_one_sign() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let s = GridVector::from_fn(&g, |p| [0.6 * p[1].sin() + 0.4 * p[0].cos(), 0.5 * (p[0] + p[1]).sin()]);
        let f = GridScalar::from_fn(&g, |p| 0.8 + 0.5 * (p[0].cos() * p[1].sin()));
        let k = mollifier(&g, TAU / 8.0).unwrap();
        let gamma = Renormalizer::new(RenormKind::Tanh).unwrap();
        let r1 = r1_defining(&s, &f, &k, &gamma).unwrap();
        let good = r1_reconstruction(&s, &f, &k, &gamma, R1_DIV_SIGN).unwrap();
        let bad = r1_reconstruction(&s, &f, &k, &gamma, -R1_DIV_SIGN).unwrap();
        assert!(relative_mismatch(&good, &r1) < 1e-6);
        assert!(relative_mismatch(&bad, &r1) > 1e-2);
        let r2 = r2_defining(&s, &f, &k, &gamma).unwrap();
        let passing: Vec<R2Signs> = R2Signs::all()
            .into_iter()
            .filter(|&sg| relative_mismatch(&r2_reconstruction(&s, &f, &k, &gamma, sg).unwrap(), &r2) < 1e-6)
            .collect();
        assert_eq!(passing, vec![R2Signs::CONSISTENT]);
    }
}
