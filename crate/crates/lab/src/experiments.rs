//! Experiment drivers. Each writes versioned CSVs into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use renormlab_core::commutator::{convergence_study, OperatorTag};
use renormlab_core::field::{lp_norm, GridScalar, Region};
use renormlab_core::flow::{sample_brownian, simulate_flow, step_count, DensityStream, SdeCoefficients, SdeConfig};
use renormlab_core::io::{FieldFile, FlowFile};
use renormlab_core::parabolic::{decay_study, mild_solve, MildConfig};
use renormlab_core::rng::stream_id;
use renormlab_core::weakform::{
    bump_test_function, CovariationQuadrature, LedgerBuilder, RenormKind, Renormalizer, Snapshot, Variant,
};
use renormlab_core::zvonkin::{build_diffeo, relaxation_metrics, transform_coeffs, RelaxationMetrics};

use crate::acceptance::acceptance_suite;
use crate::config::ExperimentConfig;
use crate::csv::{num, Csv};
use crate::error::{Context, LabError};
use crate::report::RunReport;

type Res<T> = Result<T, LabError>;

/// Files written by a run, plus the report for `acceptance_all`.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: Option<RunReport>,
}

fn write(dir: &Path, name: &str, body: String, files: &mut Vec<PathBuf>) -> Res<()> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    files.push(path);
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Res<Outcome> {
    cfg.validate()?;
    let dir = cfg.output_path();
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut report = None;
    match cfg.experiment.as_str() {
        "commutator_study" => commutator(cfg, &dir, &mut files)?,
        "parabolic_decay" => decay(cfg, &dir, &mut files)?,
        "flow_conservation" => conservation(cfg, &dir, &mut files)?,
        "renorm_residual" => renorm(cfg, &dir, &mut files)?,
        "zvonkin_relaxation" => zvonkin(cfg, &dir, &mut files)?,
        "acceptance_all" => {
            let r = acceptance_suite(cfg)?;
            write(&dir, "acceptance.csv", r.to_csv(), &mut files)?;
            report = Some(r);
        }
        other => return Err(LabError::Config(vec![format!("unknown experiment {other:?}")])),
    }
    Ok(Outcome { files, report })
}

fn steps(cfg: &ExperimentConfig) -> Res<usize> {
    step_count(cfg.time.t_final, cfg.time.dt).ctx("time grid")
}

fn commutator(cfg: &ExperimentConfig, dir: &Path, files: &mut Vec<PathBuf>) -> Res<()> {
    let g = cfg.build_grid()?;
    let sigma = cfg.noise(&g)?.first().map(|s| s.slices[0].clone()).ok_or_else(|| {
        LabError::Config(vec!["commutator_study needs a noise field".into()])
    })?;
    let f = cfg.density(&g)?;
    let region = Region::central_half(&g);
    let eps = cfg.epsilons();
    let s = &cfg.scalars;
    for tag in [OperatorTag::T, OperatorTag::S] {
        let st = convergence_study(tag, &sigma, &f, &eps, s.q, s.p, &region).ctx("commutator study")?;
        write(dir, &format!("commutator_{}.csv", tag.name()), Csv::from_table(&st.to_csv()).finish(), files)?;
    }
    Ok(())
}

fn decay(cfg: &ExperimentConfig, dir: &Path, files: &mut Vec<PathBuf>) -> Res<()> {
    let g = cfg.build_grid()?;
    let b = cfg.drift(&g)?;
    let mc = MildConfig { quad_steps: steps(cfg)?, ..Default::default() };
    let s = &cfg.scalars;
    for alpha in [0, 1] {
        let st = decay_study(&b, &s.lambda, alpha, s.r, s.p, s.q, &mc).ctx("decay study")?;
        write(dir, &format!("decay_alpha{alpha}.csv"), Csv::from_table(&st.to_csv()).finish(), files)?;
    }
    Ok(())
}

fn coefficients(cfg: &ExperimentConfig) -> Res<(renormlab_core::Grid64, SdeCoefficients<f64>)> {
    let g = cfg.build_grid()?;
    let c = SdeCoefficients::new(cfg.drift(&g)?, cfg.noise(&g)?).ctx("coefficients")?;
    Ok((g, c))
}

fn member_seed(cfg: &ExperimentConfig, m: usize) -> u64 {
    stream_id(cfg.scalars.master_seed, m as u64)
}

fn collect<R: Send>(members: usize, f: impl Fn(usize) -> Res<R> + Sync + Send) -> Res<Vec<R>> {
    (0..members).into_par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

fn conservation(cfg: &ExperimentConfig, dir: &Path, files: &mut Vec<PathBuf>) -> Res<()> {
    let (g, coeffs) = coefficients(cfg)?;
    let f0 = cfg.density(&g)?;
    let p = cfg.scalars.p;
    let n0 = lp_norm(&f0, p, &Region::Full).ctx("norm")?;
    let k = coeffs.k_count();
    let (t_final, dt) = (cfg.time.t_final, cfg.time.dt);
    let stride = (steps(cfg)? / 16).max(1);
    let runs = collect(cfg.scalars.mc_members, |m| {
        let path = sample_brownian(t_final, dt, k, member_seed(cfg, m)).ctx("brownian")?;
        let mut stream = DensityStream::new(&f0, &coeffs, &path).ctx("density stream")?;
        let mut rows = Vec::new();
        let mut kept: Vec<(f64, GridScalar<f64>)> = Vec::new();
        let mut step = 0;
        while let Some(f) = stream.next_density() {
            let f = f.ctx("push-forward")?;
            let t = path.time(step);
            rows.push((step, t, f.integral(), lp_norm(&f, p, &Region::Full).ctx("norm")? / n0));
            if m == 0 && (step % stride == 0 || step == path.steps()) {
                kept.push((t, f));
            }
            step += 1;
        }
        let mut sde = SdeConfig::new(dt, 1).ctx("flow config")?;
        sde.record_stride = stride;
        let ens = simulate_flow(&coeffs, &sde, &path).ctx("flow")?;
        Ok((rows, kept, ens))
    })?;
    let mut csv = Csv::new(&["member", "step", "time", "mass", "lp_ratio"]);
    for (m, (rows, _, _)) in runs.iter().enumerate() {
        for &(step, t, mass, ratio) in rows {
            csv.row(&[m.to_string(), step.to_string(), num(t), num(mass), num(ratio)]);
        }
    }
    write(dir, "flow_conservation.csv", csv.finish(), files)?;
    let ens: Vec<_> = runs.iter().map(|r| r.2.clone()).collect();
    let meta = serde_json::to_value(cfg).map_err(|e| LabError::Io(e.to_string()))?;
    let flo = dir.join("flow.flo");
    FlowFile::from_ensembles(&ens, meta).ctx("flow file")?.write(&flo).ctx("write flow file")?;
    files.push(flo);
    let (times, fields): (Vec<f64>, Vec<GridScalar<f64>>) = runs[0].1.iter().cloned().unzip();
    let fld = dir.join("density_member0.fld");
    FieldFile::from_scalars(&times, &fields).ctx("field file")?.write(&fld).ctx("write field file")?;
    files.push(fld);
    Ok(())
}

fn renorm(cfg: &ExperimentConfig, dir: &Path, files: &mut Vec<PathBuf>) -> Res<()> {
    let (g, coeffs) = coefficients(cfg)?;
    let f0 = cfg.density(&g)?;
    let (b, sigmas) = (cfg.drift(&g)?, cfg.noise(&g)?);
    let radius = g.period() * 0.2;
    let phi = bump_test_function(&g, g.center(), radius).ctx("test function")?;
    let gamma = Renormalizer::new(RenormKind::Tanh).ctx("renormalizer")?;
    let q = CovariationQuadrature::Realized;
    let ledgers = collect(cfg.scalars.mc_members, |m| {
        let path = sample_brownian(cfg.time.t_final, cfg.time.dt, coeffs.k_count(), member_seed(cfg, m)).ctx("brownian")?;
        let mut orig = LedgerBuilder::new(&phi, Variant::Original, q);
        let mut ren = LedgerBuilder::new(&phi, Variant::Renormalized(gamma), q);
        if let Some(t) = &cfg.debug.flip_g_term {
            ren = ren.flip_term(t).ctx("flip")?;
        }
        let mut stream = DensityStream::new(&f0, &coeffs, &path).ctx("density stream")?;
        let mut step = 0;
        let mut last = f0.clone();
        while let Some(f) = stream.next_density() {
            let f = f.ctx("push-forward")?;
            if step < path.steps() {
                let snap = Snapshot::at(&b, &sigmas, path.time(step)).ctx("snapshot")?;
                orig.push_step(&f, &snap, path.increment(step), path.dt());
                ren.push_step(&f, &snap, path.increment(step), path.dt());
            }
            last = f;
            step += 1;
        }
        Ok([("original", orig.finish(&last)), ("renormalized", ren.finish(&last))])
    })?;
    let mut csv = Csv::new(&["member", "variant", "term_name", "value"]);
    for (m, pair) in ledgers.iter().enumerate() {
        for (variant, l) in pair {
            let mut row = |name: &str, v: f64| csv.row(&[m.to_string(), (*variant).into(), name.into(), num(v)]);
            for (n, v) in &l.terms {
                row(n, *v);
            }
            row("lhs_delta", l.lhs_delta);
            row("residual", l.residual);
        }
    }
    write(dir, "renorm_residual.csv", csv.finish(), files)
}

fn zvonkin(cfg: &ExperimentConfig, dir: &Path, files: &mut Vec<PathBuf>) -> Res<()> {
    let g = cfg.build_grid()?;
    let b = cfg.drift(&g)?;
    let s = &cfg.scalars;
    let mc = MildConfig { quad_steps: steps(cfg)?, ..Default::default() };
    let mut body = String::from(RelaxationMetrics::<f64>::csv_header());
    for &lam in &s.lambda {
        let sol = mild_solve(&b, lam, &mc).ctx("mild solve")?;
        let d = build_diffeo(&sol.u).ctx("diffeo")?;
        let tc = transform_coeffs(&d, lam).ctx("transform")?;
        body.push_str(&relaxation_metrics(&tc, &b, s.q, s.p, s.r).ctx("metrics")?.csv_row());
    }
    write(dir, "zvonkin_relaxation.csv", Csv::from_table(&body).finish(), files)
}
