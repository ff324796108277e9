//! Experiment configuration: JSON in, itemized validation out.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use renormlab_core::field::{epsilon_range, Grid, GridScalar, TimeGridVector};
use renormlab_core::flow::step_count;
use renormlab_core::io::FieldFile;
use renormlab_core::presets::{self, DRIFT_PRESETS, NOISE_PRESETS};
use renormlab_core::weakform::G_TERMS;

use crate::error::LabError;

pub const EXPERIMENTS: [&str; 6] =
    ["commutator_study", "parabolic_decay", "flow_conservation", "renorm_residual", "zvonkin_relaxation", "acceptance_all"];

pub const DENSITY_PRESETS: [&str; 3] = ["trig", "positive", "constant"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    #[serde(rename = "L", default = "default_period")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
}

/// A coefficient given by preset name or by a `.fld` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    Preset(String),
    File { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientSpec {
    pub drift: Source,
    pub noise: Source,
    pub density: Source,
    pub drift_amp: f64,
    pub noise_amp: f64,
    /// Value used by the `constant` drift and density presets.
    pub constant: [f64; 2],
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        Self {
            drift: Source::Preset("trig".into()),
            noise: Source::Preset("trig".into()),
            density: Source::Preset("trig".into()),
            drift_amp: 0.6,
            noise_amp: 0.4,
            constant: [1.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scalars {
    pub lambda: Vec<f64>,
    /// Mollifier radii; defaults to `L/8, L/16, L/32`.
    pub epsilon: Option<Vec<f64>>,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub mc_members: usize,
    pub master_seed: u64,
}

impl Default for Scalars {
    fn default() -> Self {
        Self { lambda: vec![4.0, 16.0, 64.0], epsilon: None, p: 8.0, q: 4.0, r: 4.0, mc_members: 16, master_seed: 7 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DebugFlags {
    /// Flip the sign of this `G` term in renormalized ledgers.
    pub flip_g_term: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub grid: GridSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    #[serde(default)]
    pub scalars: Scalars,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker pool size; `RENORMLAB_THREADS` overrides it.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub debug: DebugFlags,
    /// Directory relative file references resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_period() -> f64 {
    TAU
}

fn default_output() -> PathBuf {
    PathBuf::from("renormlab-out")
}

impl ExperimentConfig {
    /// Parses JSON and validates it.
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(vec![format!("parse: {e}")]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(vec![format!("{}: {e}", path.display())]))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| LabError::Config(vec![format!("parse {}: {e}", path.display())]))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default acceptance configuration.
    pub fn acceptance_default() -> Self {
        Self {
            experiment: "acceptance_all".into(),
            grid: GridSpec { dim: 2, l: TAU, n: 32 },
            time: TimeSpec { t_final: 0.25, dt: 5e-3 },
            coefficients: CoefficientSpec::default(),
            scalars: Scalars { mc_members: 32, ..Scalars::default() },
            output_dir: default_output(),
            threads: None,
            debug: DebugFlags::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.scalars.epsilon.clone().unwrap_or_else(|| [8.0, 16.0, 32.0].iter().map(|d| self.grid.l / d).collect())
    }

    pub fn build_grid(&self) -> Result<Grid<f64>, LabError> {
        Grid::new(self.grid.dim, self.grid.l, self.grid.n).map_err(|e| LabError::Config(vec![format!("grid: {e}")]))
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<(), LabError> {
        let mut issues = Vec::new();
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            issues.push(format!("unknown experiment {:?}; valid tags: {}", self.experiment, EXPERIMENTS.join(", ")));
        }
        let g = &self.grid;
        if g.dim != 1 && g.dim != 2 {
            issues.push(format!("grid.dim must be 1 or 2, got {}", g.dim));
        }
        if g.n < 8 || g.n % 2 != 0 {
            issues.push(format!("grid.N must be even and at least 8, got {}", g.n));
        }
        if !(g.l > 0.0 && g.l.is_finite()) {
            issues.push(format!("grid.L must be positive, got {}", g.l));
        }
        let t = &self.time;
        if !(t.t_final > 0.0 && t.dt > 0.0) {
            issues.push(format!("time.T and time.dt must be positive, got T = {}, dt = {}", t.t_final, t.dt));
        } else if let Err(e) = step_count(t.t_final, t.dt) {
            issues.push(format!("time: {e}"));
        }
        let s = &self.scalars;
        if s.lambda.iter().any(|&l| !(l > 0.0)) {
            issues.push("scalars.lambda entries must be positive".into());
        }
        if matches!(self.experiment.as_str(), "parabolic_decay" | "zvonkin_relaxation") {
            if s.lambda.len() < 3 {
                issues.push(format!("scalars.lambda needs at least 3 entries, got {}", s.lambda.len()));
            }
            if s.lambda.windows(2).any(|w| w[1] <= w[0]) {
                issues.push("scalars.lambda must be strictly increasing".into());
            }
        }
        for (name, v) in [("p", s.p), ("q", s.q), ("r", s.r)] {
            if !(v >= 1.0) {
                issues.push(format!("scalars.{name} must be at least 1, got {v}"));
            }
        }
        if self.experiment == "parabolic_decay" && 2.0 / s.q + g.dim as f64 / s.p >= 1.0 {
            issues.push(format!("(p, q) = ({}, {}) violates 2/q + n/p < 1", s.p, s.q));
        }
        if self.experiment == "zvonkin_relaxation" && !(s.r < s.p) {
            issues.push(format!("scalars.r = {} must be below p = {}", s.r, s.p));
        }
        if s.mc_members == 0 || s.mc_members > 256 {
            issues.push(format!("scalars.mc_members must lie in 1..=256, got {}", s.mc_members));
        }
        if self.experiment == "commutator_study" && issues.is_empty() {
            let eps = self.epsilons();
            if eps.len() < 3 {
                issues.push(format!("scalars.epsilon needs at least 3 entries, got {}", eps.len()));
            }
            if eps.windows(2).any(|w| w[1] >= w[0]) {
                issues.push("scalars.epsilon must be strictly decreasing".into());
            }
            if let Ok(grid) = self.build_grid() {
                let (lo, hi) = epsilon_range(&grid);
                for e in eps {
                    if e < lo * (1.0 - 1e-12) || e > hi * (1.0 + 1e-12) {
                        issues.push(format!("epsilon {e} outside [{lo}, {hi}]"));
                    }
                }
            }
        }
        if let Some(n) = self.threads {
            if n == 0 {
                issues.push("threads must be positive".into());
            }
        }
        if let Some(name) = &self.debug.flip_g_term {
            if !G_TERMS.contains(&name.as_str()) {
                issues.push(format!("debug.flip_g_term {name:?} is not one of {}", G_TERMS.join(", ")));
            }
        }
        self.check_source("drift", &self.coefficients.drift, &DRIFT_PRESETS, &mut issues);
        self.check_source("noise", &self.coefficients.noise, &NOISE_PRESETS, &mut issues);
        self.check_source("density", &self.coefficients.density, &DENSITY_PRESETS, &mut issues);
        if let Source::Preset(p) = &self.coefficients.drift {
            if p == "rotation" && g.dim != 2 {
                issues.push("drift preset \"rotation\" needs dim = 2".into());
            }
            if p == "square_wave" && g.dim != 1 {
                issues.push("drift preset \"square_wave\" needs dim = 1".into());
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(LabError::Config(issues))
        }
    }

    fn check_source(&self, what: &str, src: &Source, presets: &[&str], issues: &mut Vec<String>) {
        match src {
            Source::Preset(p) if !presets.contains(&p.as_str()) => {
                issues.push(format!("unknown {what} preset {p:?}; valid: {}", presets.join(", ")));
            }
            Source::File { file } if !self.resolve(file).is_file() => {
                issues.push(format!("{what} file {} does not exist", self.resolve(file).display()));
            }
            _ => {}
        }
    }

    fn read_field(&self, file: &Path, grid: &Grid<f64>) -> Result<TimeGridVector<f64>, LabError> {
        let ff = FieldFile::read(&self.resolve(file)).map_err(|e| LabError::context(format!("reading {}", file.display()), e))?;
        let v = ff.to_time_vector::<f64>().map_err(|e| LabError::context(format!("decoding {}", file.display()), e))?;
        if v.grid() != grid {
            return Err(LabError::Config(vec![format!("{} was written on a different grid", file.display())]));
        }
        Ok(v)
    }

    pub fn drift(&self, grid: &Grid<f64>) -> Result<TimeGridVector<f64>, LabError> {
        let c = &self.coefficients;
        match &c.drift {
            Source::Preset(name) => presets::drift_preset(name, grid, self.time.t_final, c.drift_amp, c.constant)
                .map_err(|e| LabError::context("drift preset", e)),
            Source::File { file } => {
                let v = self.read_field(file, grid)?;
                if v.slices[0].components.len() != grid.dim() {
                    return Err(LabError::Config(vec![format!("drift file {} must have {} components", file.display(), grid.dim())]));
                }
                Ok(v)
            }
        }
    }

    /// Noise fields; a file stores them as consecutive groups of `dim` components.
    pub fn noise(&self, grid: &Grid<f64>) -> Result<Vec<TimeGridVector<f64>>, LabError> {
        let c = &self.coefficients;
        match &c.noise {
            Source::Preset(name) => {
                presets::noise_preset(name, grid, self.time.t_final, c.noise_amp).map_err(|e| LabError::context("noise preset", e))
            }
            Source::File { file } => {
                let v = self.read_field(file, grid)?;
                let n = grid.dim();
                let comps = v.slices[0].components.len();
                if comps % n != 0 {
                    return Err(LabError::Config(vec![format!("noise file {} has {comps} components, not a multiple of {n}", file.display())]));
                }
                (0..comps / n)
                    .map(|k| {
                        let slices = v
                            .slices
                            .iter()
                            .map(|s| renormlab_core::field::GridVector { grid: grid.clone(), components: s.components[k * n..(k + 1) * n].to_vec() })
                            .collect();
                        TimeGridVector::new(v.times.clone(), slices).map_err(|e| LabError::context("noise file", e))
                    })
                    .collect()
            }
        }
    }

    pub fn density(&self, grid: &Grid<f64>) -> Result<GridScalar<f64>, LabError> {
        match &self.coefficients.density {
            Source::Preset(name) => Ok(match name.as_str() {
                "trig" => presets::trig_density(grid),
                "positive" => presets::positive_density(grid),
                _ => GridScalar::constant(grid, self.coefficients.constant[0]),
            }),
            Source::File { file } => {
                let v = self.read_field(file, grid)?;
                Ok(v.slices[0].components[0].clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"experiment":"commutator_study","grid":{"dim":1,"N":64},"time":{"T":0.25,"dt":0.001}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.grid.l, TAU);
        assert_eq!(c.scalars.lambda, vec![4.0, 16.0, 64.0]);
        assert_eq!(c.epsilons().len(), 3);
    }

    #[test]
    fn unknown_tag_lists_valid_tags() {
        let bad = MINIMAL.replace("commutator_study", "bogus");
        match ExperimentConfig::from_json(&bad) {
            Err(LabError::Config(items)) => {
                assert_eq!(items.len(), 1);
                for tag in EXPERIMENTS {
                    assert!(items[0].contains(tag));
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn problems_are_itemized() {
        let bad = r#"{"experiment":"parabolic_decay","grid":{"dim":3,"N":7},"time":{"T":0.25,"dt":0.003},
            "scalars":{"lambda":[4,2],"p":2,"q":2,"mc_members":0},"coefficients":{"drift":"wiggly","density":{"file":"/no/such.fld"}}}"#;
        match ExperimentConfig::from_json(bad) {
            Err(LabError::Config(items)) => assert!(items.len() >= 7, "{items:#?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = MINIMAL.replace("\"dt\"", "\"dtt\"");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(LabError::Config(_))));
    }

    #[test]
    fn rotation_needs_two_dimensions() {
        let bad = MINIMAL.replace("\"time\"", "\"coefficients\":{\"drift\":\"rotation\"},\"time\"");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }
}
