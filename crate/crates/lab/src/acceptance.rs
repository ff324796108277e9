//! The fifteen acceptance checks.

use std::f64::consts::TAU;

use rayon::prelude::*;

use renormlab_core::commutator::{
    convergence_study, r1_defining, r1_reconstruction, r2_defining, r2_reconstruction, relative_mismatch, OperatorTag,
    R2Signs, R1_DIV_SIGN,
};
use renormlab_core::field::{build_grid, lp_norm, mollifier, Grid, GridScalar, GridVector, Region, TimeGridVector};
use renormlab_core::flow::{apriori_constant, ensemble_moment, sample_brownian, simulate_flow, BrownianPath, DensityStream, SdeCoefficients, SdeConfig};
use renormlab_core::parabolic::{decay_study, mild_solve, relaxation_residuals, MildConfig};
use renormlab_core::presets::{
    constant_drift, positive_density, rotation_drift, square_wave_drift, trig_density, trig_drift, trig_noise, unit_noise,
};
use renormlab_core::rng::{splitmix64, stream_id};
use renormlab_core::stats::{mean_stderr, rms, strictly_decreasing};
use renormlab_core::weakform::{
    bump_test_function, gronwall_envelope, weighted_l1, weighted_l1_stability, CovariationQuadrature, LedgerBuilder,
    RenormKind, Renormalizer, Snapshot, TestFunction, Variant, Weight, G_TERMS,
};
use renormlab_core::zvonkin::{build_diffeo, relaxation_metrics, transform_coeffs, transformed_residual_stream};

use crate::config::ExperimentConfig;
use crate::error::{Context, LabError};
use crate::report::{CheckResult, EnvStamp, RunReport};

type Res<T> = Result<T, LabError>;

pub const CHECK_NAMES: [&str; 15] = [
    "mollifier",
    "commutator_t_limit",
    "commutator_s_limit",
    "cancellation_identities",
    "jacobian_cross_check",
    "pushforward_weak_solution",
    "mass_and_lp_conservation",
    "apriori_moment_bound",
    "parabolic_closed_form",
    "decay_exponents",
    "relaxation",
    "renormalized_residual",
    "zvonkin_chain",
    "stability_functional",
    "determinism",
];

/// One-sided 95% normal quantile.
const Z95: f64 = 1.645;

#[derive(Clone, Debug, PartialEq)]
pub struct AcceptanceOptions {
    pub master_seed: u64,
    /// Members for the Monte Carlo checks.
    pub mc_members: usize,
    /// Debug: flip this `G` term in the renormalized ledgers of check 12.
    pub flip_g_term: Option<String>,
    /// Pool sizes for the two passes compared by check 15.
    pub pools: [usize; 2],
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self { master_seed: 7, mc_members: 32, flip_g_term: None, pools: [8, 1] }
    }
}

impl AcceptanceOptions {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self { master_seed: cfg.scalars.master_seed, mc_members: cfg.scalars.mc_members, flip_g_term: cfg.debug.flip_g_term.clone(), pools: [8, 1] }
    }

    fn seed(&self, check: usize, member: u64) -> u64 {
        stream_id(splitmix64(self.master_seed ^ (check as u64).wrapping_mul(0x9E37_79B9)), member)
    }
}

fn grid(dim: usize, n: usize) -> Grid<f64> {
    build_grid(dim, TAU, n).expect("valid grid")
}

struct Check {
    id: usize,
    value: f64,
    threshold: f64,
    passed: bool,
    detail: String,
    measurements: Vec<f64>,
}

impl Check {
    fn new(id: usize, value: f64, threshold: f64) -> Self {
        Self { id, value, threshold, passed: true, detail: String::new(), measurements: vec![value] }
    }

    /// Records a sub-measurement and its verdict.
    fn sub(&mut self, label: &str, v: f64, ok: bool) {
        self.measurements.push(v);
        self.passed &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&format!("{label}={v:.3e}{}", if ok { "" } else { " (fail)" }));
    }

    fn note(&mut self, text: &str) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(text);
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            id: self.id,
            name: CHECK_NAMES[self.id - 1].into(),
            value: self.value,
            threshold: self.threshold,
            passed: self.passed,
            detail: self.detail,
            measurements: self.measurements,
        }
    }
}

/// Runs one of the checks 1..=14.
pub fn run_check(id: usize, opts: &AcceptanceOptions) -> Res<CheckResult> {
    let c = match id {
        1 => check_mollifier()?,
        2 => check_t_limit()?,
        3 => check_s_limit()?,
        4 => check_identities()?,
        5 => check_jacobian(opts)?,
        6 => check_pushforward(opts)?,
        7 => check_conservation(opts)?,
        8 => check_moment_bound(opts)?,
        9 => check_closed_form()?,
        10 => check_decay()?,
        11 => check_relaxation()?,
        12 => check_renormalized(opts)?,
        13 => check_zvonkin(opts)?,
        14 => check_stability(opts)?,
        _ => return Err(LabError::Config(vec![format!("no check with id {id}; checks 1..=14 run directly")])),
    };
    Ok(c.finish())
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Res<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| LabError::Io(e.to_string()))?;
    Ok(pool.install(f))
}

fn run_pass(ids: &[usize], opts: &AcceptanceOptions, threads: usize) -> Res<Vec<CheckResult>> {
    in_pool(threads, || ids.iter().map(|&id| run_check(id, opts)).collect::<Res<Vec<_>>>())?
}

/// Runs checks 1..=14 under the first pool size, reruns them under the second, and adds
/// the determinism check comparing every measurement bitwise.
pub fn acceptance_suite_with(opts: &AcceptanceOptions, grid_label: &str) -> Res<RunReport> {
    let ids: Vec<usize> = (1..=14).collect();
    let first = run_pass(&ids, opts, opts.pools[0])?;
    let second = run_pass(&ids, opts, opts.pools[1])?;
    let mut mismatches = Vec::new();
    let mut compared = 0usize;
    for (a, b) in first.iter().zip(&second) {
        compared += a.measurements.len();
        let same = a.measurements.len() == b.measurements.len()
            && a.measurements.iter().zip(&b.measurements).all(|(x, y)| x.to_bits() == y.to_bits())
            && a.passed == b.passed;
        if !same {
            mismatches.push(a.id.to_string());
        }
    }
    let mut c = Check::new(15, mismatches.len() as f64, 0.0);
    c.passed = mismatches.is_empty();
    c.measurements = vec![mismatches.len() as f64, compared as f64];
    c.note(&format!("{compared} values compared across pools of {} and {} workers", opts.pools[0], opts.pools[1]));
    if !mismatches.is_empty() {
        c.note(&format!("differing checks: {}", mismatches.join(",")));
    }
    let mut checks = first;
    checks.push(c.finish());
    Ok(RunReport {
        checks,
        env: EnvStamp {
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: opts.master_seed,
            grid: grid_label.into(),
            threads: opts.pools.to_vec(),
        },
    })
}

pub fn acceptance_suite(cfg: &ExperimentConfig) -> Res<RunReport> {
    cfg.validate()?;
    let label = format!("dim={} N={} L={}", cfg.grid.dim, cfg.grid.n, cfg.grid.l);
    acceptance_suite_with(&AcceptanceOptions::from_config(cfg), &label)
}

// 1
fn check_mollifier() -> Res<Check> {
    let mut worst_mass: f64 = 0.0;
    let mut worst_moment: f64 = 0.0;
    let mut symmetric = true;
    let mut supported = true;
    for dim in [1, 2] {
        let g = grid(dim, 64);
        for eps in [TAU / 8.0, TAU / 16.0, 4.0 * g.spacing()] {
            let k = mollifier(&g, eps).ctx("mollifier")?;
            worst_mass = worst_mass.max((k.mass() - 1.0).abs());
            for i in 0..g.len() {
                let x = g.centered(i);
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let v = k.values.values[i];
                if (r >= eps && v != 0.0) || (r < eps * (1.0 - 1e-9) && !(v > 0.0)) {
                    supported = false;
                }
                let idx = g.split(i);
                let n = g.points();
                let mirror = g.flat([(n - idx[0]) % n, if dim == 2 { (n - idx[1]) % n } else { 0 }]);
                symmetric &= v == k.values.values[mirror];
            }
            let unit = |a: usize| {
                let mut e = [0, 0];
                e[a] = 1;
                e
            };
            for i in 0..dim {
                for j in 0..dim {
                    let want = if i == j { -1.0 } else { 0.0 };
                    worst_moment = worst_moment.max((k.moment(unit(i), unit(j)).ctx("moment")? - want).abs());
                    for a in 0..dim {
                        for b in 0..dim {
                            let mut alpha = unit(i);
                            alpha[j] += 1;
                            let mut beta = unit(a);
                            beta[b] += 1;
                            let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
                            let want = d(i, a) * d(j, b) + d(i, b) * d(j, a);
                            worst_moment = worst_moment.max((k.moment(alpha, beta).ctx("moment")? - want).abs());
                        }
                    }
                }
            }
        }
    }
    let mut c = Check::new(1, worst_moment, 5e-3);
    c.passed = worst_moment <= 5e-3;
    c.sub("moment_err", worst_moment, worst_moment <= 5e-3);
    c.sub("mass_err", worst_mass, worst_mass <= 1e-10);
    c.sub("symmetric", symmetric as u8 as f64, symmetric);
    c.sub("support_exact", supported as u8 as f64, supported);
    Ok(c)
}

fn sine_setup(n: usize) -> (GridVector<f64>, GridScalar<f64>, Region<f64>) {
    let g = grid(1, n);
    let s = GridVector::from_fn(&g, |p| [p[0].sin(), 0.0]);
    let f = GridScalar::from_fn(&g, |p| p[0].cos());
    let region = Region::central_half(&g);
    (s, f, region)
}

const STUDY_EPS: [f64; 3] = [TAU / 8.0, TAU / 16.0, TAU / 32.0];

// 2
fn check_t_limit() -> Res<Check> {
    let (s, f, region) = sine_setup(64);
    let st = convergence_study(OperatorTag::T, &s, &f, &STUDY_EPS, 4.0, 4.0, &region).ctx("T study")?;
    let rate = st.fitted_rate.unwrap_or(f64::NAN);
    let mut c = Check::new(2, rate, 0.9);
    c.passed = rate >= 0.9;
    c.measurements.extend(&st.errors);
    c.sub("rate", rate, rate >= 0.9);
    c.sub("strictly_decreasing", st.errors_strictly_decreasing() as u8 as f64, st.errors_strictly_decreasing());
    let konst = GridVector::constant(&s.grid, [2.0, 0.0]);
    let dg = convergence_study(OperatorTag::T, &konst, &f, &STUDY_EPS, 4.0, 4.0, &region).ctx("degenerate study")?;
    let worst = dg.errors.iter().fold(0.0f64, |m, &e| m.max(e));
    c.sub("constant_sigma_err", worst, worst <= 1e-9);
    Ok(c)
}

// 3
fn check_s_limit() -> Res<Check> {
    let (s, f, region) = sine_setup(64);
    let st = convergence_study(OperatorTag::S, &s, &f, &STUDY_EPS, 4.0, 4.0, &region).ctx("S study")?;
    let rate = st.fitted_rate.unwrap_or(f64::NAN);
    let mut c = Check::new(3, rate, 0.9);
    c.passed = rate >= 0.9;
    c.measurements.extend(&st.errors);
    c.sub("rate", rate, rate >= 0.9);
    c.sub("strictly_decreasing", st.errors_strictly_decreasing() as u8 as f64, st.errors_strictly_decreasing());
    let eps = [TAU / 4.0, TAU / 8.0, TAU / 16.0];
    for tag in [OperatorTag::T, OperatorTag::S] {
        let mut consts = Vec::new();
        for n in [32, 64] {
            let (s, f, region) = sine_setup(n);
            consts.push(convergence_study(tag, &s, &f, &eps, 4.0, 4.0, &region).ctx("bound study")?.bound_constant);
        }
        let finite = consts.iter().all(|v| v.is_finite() && *v > 0.0);
        let drift = (consts[1] / consts[0] - 1.0).abs();
        c.sub(&format!("{}_bound_ratio_N32", tag.name()), consts[0], finite);
        c.sub(&format!("{}_bound_ratio_change", tag.name()), drift, finite && drift <= 0.2);
    }
    Ok(c)
}

// 4
fn check_identities() -> Res<Check> {
    let g = grid(2, 32);
    let s = GridVector::from_fn(&g, |p| [0.6 * p[1].sin() + 0.4 * p[0].cos(), 0.5 * (p[0] + p[1]).sin()]);
    let f = GridScalar::from_fn(&g, |p| 0.8 + 0.5 * (p[0].cos() * p[1].sin()));
    let k = mollifier(&g, TAU / 8.0).ctx("mollifier")?;
    let gamma = Renormalizer::new(RenormKind::Tanh).ctx("renormalizer")?;
    let tol = 1e-6;
    let r1 = r1_defining(&s, &f, &k, &gamma).ctx("R1")?;
    let r1_mis: Vec<f64> = [R1_DIV_SIGN, -R1_DIV_SIGN]
        .iter()
        .map(|&sg| r1_reconstruction(&s, &f, &k, &gamma, sg).map(|r| relative_mismatch(&r, &r1)))
        .collect::<Result<_, _>>()
        .ctx("R1 reconstruction")?;
    let r2 = r2_defining(&s, &f, &k, &gamma).ctx("R2")?;
    let signs = R2Signs::all();
    let r2_mis: Vec<f64> = signs
        .iter()
        .map(|&sg| r2_reconstruction(&s, &f, &k, &gamma, sg).map(|r| relative_mismatch(&r, &r2)))
        .collect::<Result<_, _>>()
        .ctx("R2 reconstruction")?;
    let r1_pass = r1_mis.iter().filter(|&&m| m < tol).count();
    let r2_passing: Vec<usize> = (0..signs.len()).filter(|&i| r2_mis[i] < tol).collect();
    let best = r1_mis[0].max(r2_mis.iter().copied().fold(f64::INFINITY, f64::min));
    let mut c = Check::new(4, best, tol);
    c.passed = best < tol;
    c.measurements.extend(&r1_mis);
    c.measurements.extend(&r2_mis);
    c.sub("r1_passing_signs", r1_pass as f64, r1_pass == 1 && r1_mis[0] < tol);
    c.sub("r2_passing_signs", r2_passing.len() as f64, r2_passing.len() == 1);
    if let [i] = r2_passing[..] {
        let sg = signs[i];
        c.note(&format!("R1 div sign {:+}, R2 signs ({:+},{:+},{:+})", R1_DIV_SIGN, sg.div_t, sg.div_sigma_r1, sg.div_r1));
    }
    Ok(c)
}

fn trig_coeffs(g: &Grid<f64>, t_final: f64) -> Res<SdeCoefficients<f64>> {
    SdeCoefficients::new(trig_drift(g, t_final, 0.6), trig_noise(g, t_final, 0.4)).ctx("coefficients")
}

// 5
fn check_jacobian(opts: &AcceptanceOptions) -> Res<Check> {
    let t_final = 0.25;
    let g = grid(2, 16);
    let coeffs = trig_coeffs(&g, t_final)?;
    let mut means = Vec::new();
    for dt in [1e-3, 2.5e-4] {
        let errs: Vec<f64> = (0..64u64)
            .into_par_iter()
            .map(|m| -> Res<f64> {
                let path = sample_brownian(t_final, dt, 2, opts.seed(5, m)).ctx("brownian")?;
                let e = simulate_flow(&coeffs, &SdeConfig::new(dt, 1).ctx("config")?, &path).ctx("flow")?;
                let lv = e.logdet_variational();
                let last = e.times.len() - 1;
                Ok(lv[last].iter().zip(&e.logdet_exponential[last]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Res<_>>()?;
        means.push(mean_stderr(&errs).0);
    }
    let order = (means[0] / means[1]).ln() / 4f64.ln();
    let mut c = Check::new(5, means[0], 0.05);
    c.passed = means[0] <= 0.05;
    c.sub("err_dt_1e-3", means[0], means[0] <= 0.05);
    c.sub("err_dt_2.5e-4", means[1], true);
    c.sub("order", order, order >= 0.4);
    Ok(c)
}

/// Streams the density of one path and feeds every ledger builder; frozen builders see `f0`.
fn stream_ledgers(
    f0: &GridScalar<f64>,
    coeffs: &SdeCoefficients<f64>,
    b: &TimeGridVector<f64>,
    sigmas: &[TimeGridVector<f64>],
    path: &BrownianPath<f64>,
    builders: Vec<(LedgerBuilder<'_, f64>, bool)>,
) -> Res<Vec<f64>> {
    let mut stream = DensityStream::new(f0, coeffs, path).ctx("density stream")?;
    let mut builders = builders;
    let mut m = 0;
    let mut last = f0.clone();
    while let Some(f) = stream.next_density() {
        let f = f.ctx("push-forward")?;
        if m < path.steps() {
            let snap = Snapshot::at(b, sigmas, path.time(m)).ctx("snapshot")?;
            for (builder, frozen) in builders.iter_mut() {
                builder.push_step(if *frozen { f0 } else { &f }, &snap, path.increment(m), path.dt());
            }
        }
        last = f;
        m += 1;
    }
    Ok(builders.into_iter().map(|(bl, frozen)| bl.finish(if frozen { f0 } else { &last }).residual).collect())
}

fn test_function(g: &Grid<f64>) -> Res<TestFunction<f64>> {
    bump_test_function(g, g.center(), 1.4).ctx("test function")
}

// 6
fn check_pushforward(opts: &AcceptanceOptions) -> Res<Check> {
    let t_final = 0.25;
    let fine = sample_brownian(t_final, 2.5e-4, 2, opts.seed(6, 0)).ctx("brownian")?;
    let mut res = Vec::new();
    let mut frozen = 0.0;
    for (n, factor) in [(64, 4), (128, 1)] {
        let g = grid(2, n);
        let coeffs = trig_coeffs(&g, t_final)?;
        let (b, s) = (trig_drift(&g, t_final, 0.6), trig_noise(&g, t_final, 0.4));
        let path = fine.coarsen(factor).ctx("coarsen")?;
        let phi = test_function(&g)?;
        let q = CovariationQuadrature::Realized;
        let mut builders = vec![(LedgerBuilder::new(&phi, Variant::Original, q), false)];
        if n == 64 {
            builders.push((LedgerBuilder::new(&phi, Variant::Original, q), true));
        }
        let r = stream_ledgers(&trig_density(&g), &coeffs, &b, &s, &path, builders)?;
        res.push(r[0].abs());
        if n == 64 {
            frozen = r[1].abs();
        }
    }
    let ratio = res[0] / res[1];
    let mut c = Check::new(6, res[0], 1e-2);
    c.passed = res[0] <= 1e-2;
    c.sub("residual_N64", res[0], res[0] <= 1e-2);
    c.sub("residual_N128", res[1], true);
    c.sub("refinement_ratio", ratio, ratio >= 2.0);
    c.sub("frozen_over_true", frozen / res[0], frozen >= 10.0 * res[0]);
    Ok(c)
}

/// Per-step `(∫f, ‖f‖_p)` along one path.
fn mass_and_norm(f0: &GridScalar<f64>, coeffs: &SdeCoefficients<f64>, path: &BrownianPath<f64>, p: f64) -> Res<Vec<(f64, f64)>> {
    let mut stream = DensityStream::new(f0, coeffs, path).ctx("density stream")?;
    let mut out = Vec::with_capacity(path.steps() + 1);
    while let Some(f) = stream.next_density() {
        let f = f.ctx("push-forward")?;
        out.push((f.integral(), lp_norm(&f, p, &Region::Full).ctx("norm")?));
    }
    Ok(out)
}

fn par_members<R: Send>(members: usize, f: impl Fn(u64) -> Res<R> + Sync + Send) -> Res<Vec<R>> {
    (0..members as u64).into_par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

// 7
fn check_conservation(opts: &AcceptanceOptions) -> Res<Check> {
    let (t_final, dt): (f64, f64) = (0.25, 5e-3);
    let g = grid(2, 32);
    let h2 = g.spacing() * g.spacing();
    let members = 8;
    let f0 = trig_density(&g);
    let m0 = f0.integral();
    let trig = trig_coeffs(&g, t_final)?;
    let mass_dev = par_members(members, |m| {
        let path = sample_brownian(t_final, dt, 2, opts.seed(7, m)).ctx("brownian")?;
        Ok(mass_and_norm(&f0, &trig, &path, 2.0)?.iter().fold(0.0f64, |a, &(mass, _)| a.max((mass - m0).abs())))
    })?;
    let rot = SdeCoefficients::new(rotation_drift(&g, t_final, 0.6).ctx("rotation")?, unit_noise(&g, t_final)).ctx("coefficients")?;
    let p = 2.0;
    let n0 = lp_norm(&f0, p, &Region::Full).ctx("norm")?;
    let lp_dev = par_members(members, |m| {
        let path = sample_brownian(t_final, dt, 2, opts.seed(7, 1000 + m)).ctx("brownian")?;
        Ok(mass_and_norm(&f0, &rot, &path, p)?.iter().fold(0.0f64, |a, &(_, nrm)| a.max((nrm / n0 - 1.0).abs())))
    })?;
    let worst_mass = mass_dev.iter().fold(0.0f64, |a, &v| a.max(v));
    let worst_lp = lp_dev.iter().fold(0.0f64, |a, &v| a.max(v));
    let mut c = Check::new(7, worst_mass, 10.0 * h2);
    c.passed = worst_mass <= 10.0 * h2;
    c.measurements.extend(&mass_dev);
    c.measurements.extend(&lp_dev);
    c.sub("mass_dev", worst_mass, worst_mass <= 10.0 * h2);
    c.sub("lp_ratio_dev", worst_lp, worst_lp <= 2e-2);
    Ok(c)
}

// 8
fn check_moment_bound(opts: &AcceptanceOptions) -> Res<Check> {
    let (t_final, dt, p) = (0.25, 5e-3, 2.0);
    let g = grid(2, 32);
    let coeffs = trig_coeffs(&g, t_final)?;
    let f0 = trig_density(&g);
    let sups = par_members(opts.mc_members, |m| {
        let path = sample_brownian(t_final, dt, 2, opts.seed(8, m)).ctx("brownian")?;
        Ok(mass_and_norm(&f0, &coeffs, &path, p)?.iter().fold(0.0f64, |a, &(_, nrm)| a.max(nrm)))
    })?;
    let est = ensemble_moment(&sups, |&v| v, 2.0 * p).ctx("moment")?;
    let times: Vec<f64> = (0..=50).map(|i| t_final * i as f64 / 50.0).collect();
    let big_c = apriori_constant(&trig_drift(&g, t_final, 0.6), &trig_noise(&g, t_final, 0.4), p, &times).ctx("constant")?;
    let bound = big_c * lp_norm(&f0, p, &Region::Full).ctx("norm")?.powf(2.0 * p);
    let ratio = est.upper(Z95) / bound;
    let mut c = Check::new(8, ratio, 1.0);
    c.passed = ratio <= 1.0;
    c.measurements.extend([est.mean, est.stderr, big_c]);
    c.sub("mean", est.mean, true);
    c.sub("upper95", est.upper(Z95), true);
    c.sub("bound", bound, ratio <= 1.0);
    Ok(c)
}

// 9
fn check_closed_form() -> Res<Check> {
    let g = grid(2, 8);
    let cv = [0.7, -0.4];
    let t_final = 0.5;
    let b = constant_drift(&g, t_final, cv);
    let steps = 512;
    let mut worst: f64 = 0.0;
    for lam in [4.0, 16.0, 64.0] {
        let sol = mild_solve(&b, lam, &MildConfig { quad_steps: steps, ..Default::default() }).ctx("mild solve")?;
        for m in 0..=steps {
            let tau = t_final * m as f64 / steps as f64;
            let want = (1.0 - (-lam * tau).exp()) / lam;
            let slice = sol.forward_slice(m);
            for a in 0..2 {
                worst = slice.components[a].values.iter().fold(worst, |acc, &v| acc.max((v - cv[a] * want).abs()));
            }
        }
    }
    let mut c = Check::new(9, worst, 1e-4);
    c.passed = worst <= 1e-4;
    c.sub("closed_form_err", worst, worst <= 1e-4);
    let g = grid(2, 32);
    let b = trig_drift(&g, 0.25, 0.6);
    let mut lips = Vec::new();
    for lam in [4.0, 16.0, 64.0] {
        lips.push(mild_solve(&b, lam, &MildConfig { quad_steps: 64, ..Default::default() }).ctx("mild solve")?.lipschitz());
    }
    for (lam, l) in [4, 16, 64].iter().zip(&lips) {
        c.sub(&format!("lip_{lam}"), *l, true);
    }
    c.sub("lip_decreasing", strictly_decreasing(&lips) as u8 as f64, strictly_decreasing(&lips));
    Ok(c)
}

// 10
fn check_decay() -> Res<Check> {
    let (p, q) = (8.0, 4.0);
    let t_final = 0.5;
    let lambdas = [16.0, 32.0, 64.0, 128.0, 256.0];
    let cfg = MildConfig { quad_steps: 512, ..Default::default() };
    let tol = 0.15;
    let smooth = trig_drift(&grid(1, 64), t_final, 0.6);
    let rough = square_wave_drift(&grid(1, 128), t_final, 0.6).ctx("square wave")?;
    let s0 = decay_study(&smooth, &lambdas, 0, p, p, q, &cfg).ctx("decay study")?;
    let s1 = decay_study(&smooth, &lambdas, 1, p, p, q, &cfg).ctx("decay study")?;
    let r0 = decay_study(&rough, &lambdas, 0, p, p, q, &cfg).ctx("decay study")?;
    let r1 = decay_study(&rough, &lambdas, 1, p, p, q, &cfg).ctx("decay study")?;
    let dev = |s: &renormlab_core::parabolic::DecayStudy<f64>| (s.fitted_slope + s.theory_delta).abs();
    let worst = dev(&s0).max(dev(&r0)).max(dev(&r1));
    let mut c = Check::new(10, worst, tol);
    c.passed = worst <= tol;
    for s in [&s0, &s1, &r0, &r1] {
        c.measurements.extend(&s.norms);
    }
    c.sub("trig_a0_slope", s0.fitted_slope, s0.matches_rate(tol));
    c.sub("trig_a1_slope", s1.fitted_slope, s1.within_bound(tol));
    c.sub("square_a0_slope", r0.fitted_slope, r0.matches_rate(tol));
    c.sub("square_a1_slope", r1.fitted_slope, r1.matches_rate(tol));
    c.note(&format!(
        "trig a1 two-sided {} (smooth drift decays faster than the worst case)",
        if s1.matches_rate(tol) { "holds" } else { "does not hold" }
    ));
    Ok(c)
}

// 11
fn check_relaxation() -> Res<Check> {
    let g = grid(2, 32);
    let b = trig_drift(&g, 0.25, 0.6);
    let p = 4.0;
    let mut drift = Vec::new();
    let mut div = Vec::new();
    for lam in [4.0, 16.0, 64.0] {
        let sol = mild_solve(&b, lam, &MildConfig { quad_steps: 64, ..Default::default() }).ctx("mild solve")?;
        let r = relaxation_residuals(&sol, &b, p).ctx("relaxation")?;
        drift.push(r.drift);
        div.push(r.divergence);
    }
    let g8 = grid(2, 8);
    let cv = [0.7, -0.4];
    let (t_final, lam) = (0.5, 16.0);
    let cb = constant_drift(&g8, t_final, cv);
    let sol = mild_solve(&cb, lam, &MildConfig { quad_steps: 512, ..Default::default() }).ctx("mild solve")?;
    let r = relaxation_residuals(&sol, &cb, p).ctx("relaxation")?;
    let cn = (cv[0] * cv[0] + cv[1] * cv[1]).sqrt();
    let want = cn * (1.0 - (-lam * t_final).exp()) / lam * (TAU * TAU).powf(1.0 / p);
    let rel = (r.drift - want).abs() / want;
    let mut c = Check::new(11, rel, 1e-6);
    c.passed = rel <= 1e-6;
    c.measurements.extend(&drift);
    c.measurements.extend(&div);
    c.sub("constant_drift_rel_err", rel, rel <= 1e-6);
    c.sub("constant_drift_divergence", r.divergence, r.divergence <= 1e-6);
    c.sub("drift_residual_lambda64", drift[2], strictly_decreasing(&drift));
    c.sub("divergence_residual_lambda64", div[2], strictly_decreasing(&div));
    Ok(c)
}

/// Residuals of every flip variant, RMS over members, at base and refined resolution.
struct RenormStudy {
    base: Vec<f64>,
    fine: Vec<f64>,
}

fn renorm_study(opts: &AcceptanceOptions, case_b: bool, flips: &[Option<&str>]) -> Res<RenormStudy> {
    let t_final = 0.25;
    let members = 8;
    let gamma = Renormalizer::new(RenormKind::Tanh).ctx("renormalizer")?;
    let mut levels = Vec::new();
    for (n, factor) in [(32, 4), (64, 1)] {
        let g = grid(2, n);
        let (b, s) = if case_b {
            (trig_drift(&g, t_final, 0.6), trig_noise(&g, t_final, 0.4))
        } else {
            (rotation_drift(&g, t_final, 0.6).ctx("rotation")?, unit_noise(&g, t_final))
        };
        let coeffs = SdeCoefficients::new(b.clone(), s.clone()).ctx("coefficients")?;
        let phi = test_function(&g)?;
        let f0 = trig_density(&g);
        let per_member = par_members(members, |m| {
            let fine = sample_brownian(t_final, 1.25e-3, 2, opts.seed(12, m + if case_b { 100 } else { 0 })).ctx("brownian")?;
            let path = fine.coarsen(factor).ctx("coarsen")?;
            let builders = flips
                .iter()
                .map(|fl| {
                    let bl = LedgerBuilder::new(&phi, Variant::Renormalized(gamma), CovariationQuadrature::Realized);
                    Ok((match fl {
                        Some(name) => bl.flip_term(name).ctx("flip")?,
                        None => bl,
                    }, false))
                })
                .collect::<Res<Vec<_>>>()?;
            stream_ledgers(&f0, &coeffs, &b, &s, &path, builders)
        })?;
        levels.push((0..flips.len()).map(|k| rms(&per_member.iter().map(|r| r[k]).collect::<Vec<_>>())).collect::<Vec<_>>());
    }
    let fine = levels.pop().expect("two levels");
    let base = levels.pop().expect("two levels");
    Ok(RenormStudy { base, fine })
}

fn converges(base: f64, fine: f64) -> bool {
    base <= 2e-2 && base >= 2.0 * fine
}

// 12
fn check_renormalized(opts: &AcceptanceOptions) -> Res<Check> {
    let main = opts.flip_g_term.as_deref();
    let a = renorm_study(opts, false, &[main])?;
    let mut flips = vec![main];
    flips.extend(G_TERMS.iter().map(|t| Some(*t)).filter(|t| *t != main));
    let b = renorm_study(opts, true, &flips)?;
    let worst = a.base[0].max(b.base[0]);
    let mut c = Check::new(12, worst, 2e-2);
    c.passed = worst <= 2e-2;
    if let Some(t) = main {
        c.note(&format!("debug flip of {t} active"));
    }
    c.sub("a_base", a.base[0], a.base[0] <= 2e-2);
    c.sub("a_ratio", a.base[0] / a.fine[0], converges(a.base[0], a.fine[0]));
    c.sub("b_base", b.base[0], b.base[0] <= 2e-2);
    c.sub("b_ratio", b.base[0] / b.fine[0], converges(b.base[0], b.fine[0]));
    let mut broken = 0;
    for k in 1..flips.len() {
        c.measurements.extend([b.base[k], b.fine[k]]);
        if !converges(b.base[k], b.fine[k]) {
            broken += 1;
        }
    }
    c.sub("flipped_variants_failing", broken as f64, broken == flips.len() - 1);
    Ok(c)
}

// 13
fn check_zvonkin(opts: &AcceptanceOptions) -> Res<Check> {
    let t_final = 0.25;
    let lam = 16.0;
    let members = 8;
    let mut levels = Vec::new();
    let mut brackets = true;
    for (n, dt, factor) in [(32, 5e-3, 4), (64, 1.25e-3, 1)] {
        let g = grid(2, n);
        let b = trig_drift(&g, t_final, 0.6);
        let steps = (t_final / dt).round() as usize;
        let sol = mild_solve(&b, lam, &MildConfig { quad_steps: steps, ..Default::default() }).ctx("mild solve")?;
        brackets &= build_diffeo(&sol.u).ctx("diffeo")?.det_bracket_holds();
        let phi = test_function(&g)?;
        let f0 = trig_density(&g);
        let res = par_members(members, |m| {
            let fine = sample_brownian(t_final, 1.25e-3, 2, opts.seed(13, m)).ctx("brownian")?;
            let path = fine.coarsen(factor).ctx("coarsen")?;
            Ok(transformed_residual_stream(&f0, &b, &sol, &phi, &path, CovariationQuadrature::Realized).ctx("transformed residual")?.residual)
        })?;
        levels.push(rms(&res));
    }
    let ratio = levels[0] / levels[1];
    let g = grid(2, 32);
    let b = trig_drift(&g, t_final, 0.6);
    let mut metrics: Vec<[f64; 4]> = Vec::new();
    for lam in [4.0, 16.0, 64.0] {
        let sol = mild_solve(&b, lam, &MildConfig { quad_steps: 64, ..Default::default() }).ctx("mild solve")?;
        let d = build_diffeo(&sol.u).ctx("diffeo")?;
        brackets &= d.det_bracket_holds();
        let tc = transform_coeffs(&d, lam).ctx("transform")?;
        metrics.push(relaxation_metrics(&tc, &b, 4.0, 8.0, 4.0).ctx("metrics")?.as_array());
    }
    let mut c = Check::new(13, ratio, 2.0);
    c.passed = ratio >= 2.0;
    c.sub("residual_base", levels[0], true);
    c.sub("residual_fine", levels[1], true);
    c.sub("refinement_ratio", ratio, ratio >= 2.0);
    for (i, name) in ["bhat_err", "sigma_err", "grad_sigma_err", "div_err"].iter().enumerate() {
        let series: Vec<f64> = metrics.iter().map(|m| m[i]).collect();
        c.measurements.extend(&series);
        c.sub(&format!("{name}_lambda64"), series[2], strictly_decreasing(&series));
    }
    c.sub("det_bracket", brackets as u8 as f64, brackets);
    Ok(c)
}

// 14
fn check_stability(opts: &AcceptanceOptions) -> Res<Check> {
    let (t_final, dt): (f64, f64) = (0.25, 5e-3);
    let g = grid(2, 32);
    let steps = (t_final / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|m| t_final * m as f64 / steps as f64).collect();
    let run = |coeffs: &SdeCoefficients<f64>, f0: &GridScalar<f64>, w: &GridScalar<f64>, salt: u64| {
        par_members(opts.mc_members, |m| {
            let path = sample_brownian(t_final, dt, 2, opts.seed(14, salt + m)).ctx("brownian")?;
            let mut stream = DensityStream::new(f0, coeffs, &path).ctx("density stream")?;
            let mut out = Vec::with_capacity(steps + 1);
            while let Some(f) = stream.next_density() {
                out.push(weighted_l1(&f.ctx("push-forward")?, w));
            }
            Ok(out)
        })
    };
    let weight = Weight::centered(&g, 3.0).ctx("weight")?;
    let w = weight.field(&g);
    let (b, s) = (trig_drift(&g, t_final, 0.6), trig_noise(&g, t_final, 0.4));
    let f0 = trig_density(&g);
    let series = run(&trig_coeffs(&g, t_final)?, &f0, &w, 0)?;
    let env = gronwall_envelope(&b, &s, &weight, &times);
    let rep = weighted_l1_stability(&series, weighted_l1(&f0, &w), &env).ctx("stability")?;
    let worst_ratio = (1..rep.mean.len()).map(|i| (rep.mean[i] + Z95 * rep.stderr[i]) / rep.bound[i]).fold(0.0f64, f64::max);

    let rot = SdeCoefficients::new(rotation_drift(&g, t_final, 0.6).ctx("rotation")?, unit_noise(&g, t_final)).ctx("coefficients")?;
    let ones = Weight::Uniform.field(&g);
    let fp = positive_density(&g);
    let flat = run(&rot, &fp, &ones, 10_000)?;
    let flat_env = vec![1.0; times.len()];
    let frep = weighted_l1_stability(&flat, weighted_l1(&fp, &ones), &flat_env).ctx("stability")?;
    let floor = 10.0 * g.spacing() * g.spacing();
    let drift = (0..frep.mean.len()).map(|i| (frep.mean[i] - frep.mean[0]).abs()).fold(0.0f64, f64::max);

    let mut c = Check::new(14, worst_ratio, 1.0);
    c.passed = rep.within_envelope(Z95);
    c.measurements.extend(&rep.mean);
    c.measurements.extend(&frep.mean);
    c.sub("max_upper95_over_bound", worst_ratio, rep.within_envelope(Z95));
    c.sub("uniform_weight_drift", drift, frep.constant_in_time(2.0, floor));
    Ok(c)
}
