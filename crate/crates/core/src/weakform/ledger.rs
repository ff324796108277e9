use crate::error::{CoreError, Result};
use crate::field::{divergence, jacobian, GridScalar, GridVector, TimeGridVector};
use crate::flow::BrownianPath;
use crate::scalar::Scalar;

use super::renormalizer::Renormalizer;
use super::testfn::TestFunction;

/// How quadratic-variation terms are integrated in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovariationQuadrature {
    /// `d⟨W^k, W^l⟩ ≈ δ_kl dt`.
    Nominal,
    /// `d⟨W^k, W^l⟩ ≈ ΔW^k ΔW^l` from the driving path.
    Realized,
}

/// Which weak formulation a ledger assembles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant<T> {
    Original,
    Renormalized(Renormalizer<T>),
}

pub const ORIGINAL_TERMS: [&str; 3] = ["drift", "diffusion", "ito"];
pub const RENORMALIZED_TERMS: [&str; 8] = [
    "drift",
    "diffusion",
    "ito",
    "ito_G_div_sigma",
    "G_div_b",
    "G_div_sigma_grad_phi",
    "G_grad_sigma_sq",
    "H_div_sigma_sq",
];

/// The four terms carrying `G` or `H`.
pub const G_TERMS: [&str; 4] = ["ito_G_div_sigma", "G_div_b", "G_div_sigma_grad_phi", "G_grad_sigma_sq"];

/// Per-term time integrals of a weak form and the resulting residual.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakFormLedger<T> {
    pub terms: Vec<(String, T)>,
    pub lhs_delta: T,
    pub residual: T,
}

impl<T: Scalar> WeakFormLedger<T> {
    pub fn term(&self, name: &str) -> Option<T> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// CSV body `term_name,value` with `lhs_delta` and `residual` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("term_name,value\n");
        for (n, v) in &self.terms {
            s.push_str(&format!("{n},{v:e}\n"));
        }
        s.push_str(&format!("lhs_delta,{:e}\nresidual,{:e}\n", self.lhs_delta, self.residual));
        s
    }
}

/// Coefficients and their spatial derivatives frozen at one instant.
#[derive(Clone, Debug)]
pub struct Snapshot<T: Scalar> {
    pub b: GridVector<T>,
    pub div_b: GridScalar<T>,
    pub sigmas: Vec<GridVector<T>>,
    /// `jac[k][i][j] = ∂_j σ^k_i`.
    pub jac: Vec<Vec<Vec<GridScalar<T>>>>,
    pub div_sigmas: Vec<GridScalar<T>>,
}

impl<T: Scalar> Snapshot<T> {
    pub fn new(b: GridVector<T>, sigmas: Vec<GridVector<T>>) -> Result<Self> {
        if sigmas.iter().any(|s| s.grid != b.grid) {
            return Err(CoreError::GridMismatch);
        }
        Ok(Self {
            div_b: divergence(&b),
            jac: sigmas.iter().map(jacobian).collect(),
            div_sigmas: sigmas.iter().map(divergence).collect(),
            b,
            sigmas,
        })
    }

    /// Coefficients at time `t`, linear between samples.
    pub fn at(b: &TimeGridVector<T>, sigmas: &[TimeGridVector<T>], t: T) -> Result<Self> {
        Self::new(b.slice_at(t), sigmas.iter().map(|s| s.slice_at(t)).collect())
    }

    pub fn k_count(&self) -> usize {
        self.sigmas.len()
    }
}

/// `∂_iσ^k_j ∂_jσ^l_i` from cached Jacobians.
fn cross_trace<T: Scalar>(jk: &[Vec<GridScalar<T>>], jl: &[Vec<GridScalar<T>>]) -> GridScalar<T> {
    let n = jk.len();
    let mut out = GridScalar::zeros(&jk[0][0].grid);
    for i in 0..n {
        for j in 0..n {
            // ∂_i σ^k_j = jk[j][i], ∂_j σ^l_i = jl[i][j]
            out = &out + &(&jk[j][i] * &jl[i][j]);
        }
    }
    out
}

/// Streaming assembly of a weak-form ledger, one time step at a time.
pub struct LedgerBuilder<'a, T: Scalar> {
    phi: &'a TestFunction<T>,
    variant: Variant<T>,
    quadrature: CovariationQuadrature,
    names: Vec<&'static str>,
    signs: Vec<T>,
    sums: Vec<T>,
    initial: Option<T>,
}

impl<'a, T: Scalar> LedgerBuilder<'a, T> {
    pub fn new(phi: &'a TestFunction<T>, variant: Variant<T>, quadrature: CovariationQuadrature) -> Self {
        let names: Vec<&'static str> = match variant {
            Variant::Original => ORIGINAL_TERMS.to_vec(),
            Variant::Renormalized(_) => RENORMALIZED_TERMS.to_vec(),
        };
        let m = names.len();
        Self { phi, variant, quadrature, names, signs: vec![T::one(); m], sums: vec![T::zero(); m], initial: None }
    }

    /// Flips the sign of one term (used by sign-certification anti-tests).
    pub fn flip_term(mut self, name: &str) -> Result<Self> {
        let i = self
            .names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| CoreError::InvalidParameter(format!("unknown term {name}")))?;
        self.signs[i] = -self.signs[i];
        Ok(self)
    }

    fn transformed(&self, f: &GridScalar<T>) -> (GridScalar<T>, Option<(GridScalar<T>, GridScalar<T>)>) {
        match self.variant {
            Variant::Original => (f.clone(), None),
            Variant::Renormalized(r) => (f.map(|z| r.gamma(z)), Some((f.map(|z| r.g(z)), f.map(|z| r.h(z))))),
        }
    }

    /// Pairing of the (renormalized) state with `φ`.
    pub fn pairing(&self, f: &GridScalar<T>) -> T {
        self.transformed(f).0.inner(&self.phi.values)
    }

    /// Adds the contribution of one step with state and coefficients at its left endpoint.
    pub fn push_step(&mut self, f: &GridScalar<T>, s: &Snapshot<T>, dw: &[T], dt: T) {
        let (gam, gh) = self.transformed(f);
        if self.initial.is_none() {
            self.initial = Some(gam.inner(&self.phi.values));
        }
        let kc = s.sigmas.len();
        let phi = &self.phi;
        let n = f.grid.dim();
        let q = |k: usize, l: usize| match self.quadrature {
            CovariationQuadrature::Nominal => {
                if k == l {
                    dt
                } else {
                    T::zero()
                }
            }
            CovariationQuadrature::Realized => dw[k] * dw[l],
        };
        let half = T::of(0.5);
        let mut add = vec![T::zero(); self.names.len()];
        add[0] = gam.inner(&s.b.dot(&phi.grad)) * dt;
        let sig_grad: Vec<GridScalar<T>> = s.sigmas.iter().map(|sg| sg.dot(&phi.grad)).collect();
        for k in 0..kc {
            for l in 0..kc {
                let qkl = q(k, l);
                if qkl == T::zero() {
                    continue;
                }
                let mut a = GridScalar::zeros(&f.grid);
                for i in 0..n {
                    for j in 0..n {
                        let prod = &(&s.sigmas[k].components[i] * &s.sigmas[l].components[j]) * &phi.hess[i][j];
                        a = &a + &prod;
                    }
                }
                add[1] = add[1] + half * gam.inner(&a) * qkl;
            }
            add[2] = add[2] + gam.inner(&sig_grad[k]) * dw[k];
        }
        if let Some((g, h)) = gh {
            let gphi = &g * &phi.values;
            let hphi = &h * &phi.values;
            add[4] = -gphi.inner(&s.div_b) * dt;
            for k in 0..kc {
                add[3] = add[3] - gphi.inner(&s.div_sigmas[k]) * dw[k];
                for l in 0..kc {
                    let qkl = q(k, l);
                    if qkl == T::zero() {
                        continue;
                    }
                    add[5] = add[5] - (&g * &s.div_sigmas[k]).inner(&sig_grad[l]) * qkl;
                    add[6] = add[6] + half * gphi.inner(&cross_trace(&s.jac[k], &s.jac[l])) * qkl;
                    add[7] = add[7] + half * hphi.inner(&(&s.div_sigmas[k] * &s.div_sigmas[l])) * qkl;
                }
            }
        }
        for (acc, v) in self.sums.iter_mut().zip(add) {
            *acc = *acc + v;
        }
    }

    /// Closes the ledger with the state at the final time.
    pub fn finish(self, f_final: &GridScalar<T>) -> WeakFormLedger<T> {
        let end = self.pairing(f_final);
        let start = self.initial.unwrap_or(end);
        let lhs_delta = end - start;
        let mut total = T::zero();
        let terms: Vec<(String, T)> = self
            .names
            .iter()
            .zip(self.sums.iter().zip(&self.signs))
            .map(|(n, (&v, &sg))| {
                total = total + sg * v;
                (n.to_string(), sg * v)
            })
            .collect();
        WeakFormLedger { terms, lhs_delta, residual: lhs_delta - total }
    }
}

pub(crate) fn check_path<T: Scalar>(fpath: &[GridScalar<T>], path: &BrownianPath<T>, k_count: usize) -> Result<()> {
    if fpath.len() != path.steps() + 1 {
        return Err(CoreError::TimeGrid(format!("{} states for {} steps", fpath.len(), path.steps())));
    }
    if path.k_count() != k_count {
        return Err(CoreError::InvalidParameter(format!("{} noise fields for a {}-component path", k_count, path.k_count())));
    }
    Ok(())
}

fn assemble<T: Scalar>(
    fpath: &[GridScalar<T>],
    b: &TimeGridVector<T>,
    sigmas: &[TimeGridVector<T>],
    phi: &TestFunction<T>,
    path: &BrownianPath<T>,
    variant: Variant<T>,
    quadrature: CovariationQuadrature,
) -> Result<WeakFormLedger<T>> {
    check_path(fpath, path, sigmas.len())?;
    let mut builder = LedgerBuilder::new(phi, variant, quadrature);
    for m in 0..path.steps() {
        let snap = Snapshot::at(b, sigmas, path.time(m))?;
        builder.push_step(&fpath[m], &snap, path.increment(m), path.dt());
    }
    Ok(builder.finish(&fpath[path.steps()]))
}

/// Ledger of the time-integrated weak form for a sampled density path.
pub fn residual_original<T: Scalar>(
    fpath: &[GridScalar<T>],
    b: &TimeGridVector<T>,
    sigmas: &[TimeGridVector<T>],
    phi: &TestFunction<T>,
    path: &BrownianPath<T>,
    quadrature: CovariationQuadrature,
) -> Result<WeakFormLedger<T>> {
    assemble(fpath, b, sigmas, phi, path, Variant::Original, quadrature)
}

/// Ledger of the renormalized weak form for a sampled density path.
pub fn residual_renormalized<T: Scalar>(
    fpath: &[GridScalar<T>],
    b: &TimeGridVector<T>,
    sigmas: &[TimeGridVector<T>],
    phi: &TestFunction<T>,
    renormalizer: &Renormalizer<T>,
    path: &BrownianPath<T>,
    quadrature: CovariationQuadrature,
) -> Result<WeakFormLedger<T>> {
    assemble(fpath, b, sigmas, phi, path, Variant::Renormalized(*renormalizer), quadrature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_grid;
    use crate::flow::{density_path, sample_brownian, SdeCoefficients};
    use crate::presets::{trig_density, trig_drift, trig_noise, unit_noise};
    use crate::weakform::{bump_test_function, RenormKind};
    use std::f64::consts::TAU;

    fn setup(n: usize) -> (crate::field::Grid<f64>, TestFunction<f64>) {
        let g = build_grid::<f64>(2, TAU, n).unwrap();
        let phi = bump_test_function(&g, g.center(), 1.4).unwrap();
        (g, phi)
    }

    #[test]
    fn constant_state_with_unit_noise_has_zero_terms() {
        let (g, phi) = setup(32);
        let t = 0.1;
        let path = sample_brownian(t, 0.01, 1, 3).unwrap();
        let b = TimeGridVector::steady(GridVector::zeros(&g), t);
        let s = vec![TimeGridVector::steady(GridVector::unit(&g, 0), t)];
        let fpath = vec![GridScalar::constant(&g, 1.7); path.steps() + 1];
        let l = residual_original(&fpath, &b, &s, &phi, &path, CovariationQuadrature::Nominal).unwrap();
        assert!(l.residual.abs() < 1e-9, "{l:?}");
        assert!(l.terms.iter().all(|(_, v)| v.abs() < 1e-9));
        assert_eq!(l.terms.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), ORIGINAL_TERMS.to_vec());
    }

    #[test]
    fn time_grid_mismatch_is_rejected() {
        let (g, phi) = setup(16);
        let path = sample_brownian(0.1, 0.01, 1, 3).unwrap();
        let b = TimeGridVector::steady(GridVector::zeros(&g), 0.1);
        let s = vec![TimeGridVector::steady(GridVector::unit(&g, 0), 0.1)];
        let fpath = vec![GridScalar::constant(&g, 1.0); 3];
        assert!(matches!(residual_original(&fpath, &b, &s, &phi, &path, CovariationQuadrature::Nominal), Err(CoreError::TimeGrid(_))));
    }

    fn trig_case(n: usize, dt: f64) -> (Vec<GridScalar<f64>>, TimeGridVector<f64>, Vec<TimeGridVector<f64>>, TestFunction<f64>, BrownianPath<f64>) {
        let (g, phi) = setup(n);
        let t = 0.1;
        let b = trig_drift(&g, t, 0.6);
        let s = trig_noise(&g, t, 0.4);
        let path = sample_brownian(t, dt, 2, 11).unwrap();
        let c = SdeCoefficients::new(b.clone(), s.clone()).unwrap();
        let fpath = density_path(&trig_density(&g), &c, &path).unwrap();
        (fpath, b, s, phi, path)
    }

    #[test]
    fn linear_renormalizer_reduces_to_original() {
        let (fpath, b, s, phi, path) = trig_case(32, 5e-3);
        let q = CovariationQuadrature::Realized;
        let o = residual_original(&fpath, &b, &s, &phi, &path, q).unwrap();
        let r = residual_renormalized(&fpath, &b, &s, &phi, &Renormalizer::new(RenormKind::Linear).unwrap(), &path, q).unwrap();
        for name in ORIGINAL_TERMS {
            assert!((o.term(name).unwrap() - r.term(name).unwrap()).abs() < 1e-12);
        }
        for name in G_TERMS.iter().chain(["H_div_sigma_sq"].iter()) {
            assert_eq!(r.term(name).unwrap(), 0.0);
        }
        assert!((o.residual - r.residual).abs() < 1e-12);
    }

    #[test]
    fn residual_is_linear_in_phi() {
        let (fpath, b, s, phi, path) = trig_case(16, 1e-2);
        let q = CovariationQuadrature::Nominal;
        let a = residual_original(&fpath, &b, &s, &phi, &path, q).unwrap();
        let c = residual_original(&fpath, &b, &s, &phi.scaled(-2.5), &path, q).unwrap();
        assert!((c.residual + 2.5 * a.residual).abs() < 1e-12 * (1.0 + a.residual.abs()));
    }

    #[test]
    fn pushforward_solution_beats_frozen_state() {
        let (fpath, b, s, phi, path) = trig_case(32, 2.5e-3);
        let q = CovariationQuadrature::Realized;
        let good = residual_original(&fpath, &b, &s, &phi, &path, q).unwrap();
        let frozen = vec![fpath[0].clone(); fpath.len()];
        let bad = residual_original(&frozen, &b, &s, &phi, &path, q).unwrap();
        assert!(bad.residual.abs() >= 10.0 * good.residual.abs(), "{} {}", bad.residual, good.residual);
    }

    #[test]
    fn unit_noise_renormalized_residual_is_small() {
        let (g, phi) = setup(32);
        let t = 0.1;
        let b = crate::presets::rotation_drift(&g, t, 0.6).unwrap();
        let s = unit_noise(&g, t);
        let path = sample_brownian(t, 2.5e-3, 2, 2).unwrap();
        let c = SdeCoefficients::new(b.clone(), s.clone()).unwrap();
        let fpath = density_path(&trig_density(&g), &c, &path).unwrap();
        let r = residual_renormalized(&fpath, &b, &s, &phi, &Renormalizer::new(RenormKind::Tanh).unwrap(), &path, CovariationQuadrature::Realized)
            .unwrap();
        assert!(r.residual.abs() < 2e-2, "{}", r.residual);
        assert!(G_TERMS.iter().all(|n| r.term(n).unwrap().abs() < 1e-10));
    }

    #[test]
    fn flipping_unknown_term_fails() {
        let (_, phi) = setup(16);
        assert!(LedgerBuilder::new(&phi, Variant::<f64>::Original, CovariationQuadrature::Nominal).flip_term("G_div_b").is_err());
    }

    #[test]
    fn csv_lists_every_term() {
        let l = WeakFormLedger { terms: vec![("drift".into(), 1.0), ("ito".into(), -0.5)], lhs_delta: 0.25, residual: -0.25 };
        let csv = l.to_csv();
        assert!(csv.starts_with("term_name,value\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
