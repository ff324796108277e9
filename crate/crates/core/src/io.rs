//! `.fld` and `.flo` files: one JSON header line followed by little-endian `f64` values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{Grid, GridScalar, GridVector, TimeGridVector};
use crate::flow::FlowEnsemble;
use crate::scalar::Scalar;

/// Header of a `.fld` file. Values are stored slice by slice, component by component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dim: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub components: usize,
    pub times: Vec<f64>,
}

impl FieldHeader {
    fn nodes(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn value_count(&self) -> usize {
        self.times.len() * self.components * self.nodes()
    }
}

/// Header of a `.flo` file. For every member and record the payload holds the
/// positions (component-major) and then the stochastic-exponential log-determinant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowHeader {
    pub dim: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub times: Vec<f64>,
}

impl FlowHeader {
    pub fn value_count(&self) -> usize {
        self.seeds.len() * self.times.len() * (self.dim + 1) * self.n.pow(self.dim as u32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub header: FieldHeader,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowFile {
    pub header: FlowHeader,
    pub data: Vec<f64>,
}

/// Either kind of file, as detected from the extension.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyFile {
    Field(FieldFile),
    Flow(FlowFile),
}

fn io_err(e: std::io::Error) -> CoreError {
    CoreError::Io(e.to_string())
}

fn write_raw<H: Serialize>(path: &Path, header: &H, data: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let line = serde_json::to_string(header).map_err(|e| CoreError::Format(e.to_string()))?;
    w.write_all(line.as_bytes()).map_err(io_err)?;
    w.write_all(b"\n").map_err(io_err)?;
    for v in data {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn read_raw<H: for<'de> Deserialize<'de>>(path: &Path) -> Result<(H, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path).map_err(io_err)?);
    let mut line = String::new();
    r.read_line(&mut line).map_err(io_err)?;
    let header: H = serde_json::from_str(line.trim_end()).map_err(|e| CoreError::Format(format!("header: {e}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err)?;
    if bytes.len() % 8 != 0 {
        return Err(CoreError::Format(format!("payload of {} bytes is not a multiple of 8", bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((header, data))
}

fn check_count(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(CoreError::Format(format!("header promises {expected} values, payload has {got}")));
    }
    Ok(())
}

impl FieldFile {
    pub fn from_time_vector<T: Scalar>(v: &TimeGridVector<T>) -> Self {
        let g = v.grid();
        let comps = v.slices[0].components.len();
        let data = v.slices.iter().flat_map(|s| s.components.iter().flat_map(|c| c.values.iter().map(|x| x.to64()))).collect();
        let header = FieldHeader { dim: g.dim(), l: g.period().to64(), n: g.points(), components: comps, times: v.times.iter().map(|t| t.to64()).collect() };
        Self { header, data }
    }

    /// A scalar time series, e.g. a density path.
    pub fn from_scalars<T: Scalar>(times: &[T], fields: &[GridScalar<T>]) -> Result<Self> {
        if times.len() != fields.len() || fields.is_empty() {
            return Err(CoreError::TimeGrid(format!("{} times for {} fields", times.len(), fields.len())));
        }
        let g = &fields[0].grid;
        let data = fields.iter().flat_map(|f| f.values.iter().map(|x| x.to64())).collect();
        let header = FieldHeader { dim: g.dim(), l: g.period().to64(), n: g.points(), components: 1, times: times.iter().map(|t| t.to64()).collect() };
        Ok(Self { header, data })
    }

    pub fn grid<T: Scalar>(&self) -> Result<Grid<T>> {
        Grid::new(self.header.dim, T::of(self.header.l), self.header.n)
    }

    pub fn to_time_vector<T: Scalar>(&self) -> Result<TimeGridVector<T>> {
        check_count(self.header.value_count(), self.data.len())?;
        let grid = self.grid::<T>()?;
        let nodes = self.header.nodes();
        let slices = self
            .data
            .chunks(nodes * self.header.components)
            .map(|s| GridVector {
                grid: grid.clone(),
                components: s.chunks(nodes).map(|c| GridScalar { grid: grid.clone(), values: c.iter().map(|&x| T::of(x)).collect() }).collect(),
            })
            .collect();
        TimeGridVector::new(self.header.times.iter().map(|&t| T::of(t)).collect(), slices)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        check_count(self.header.value_count(), self.data.len())?;
        write_raw(path, &self.header, &self.data)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (header, data): (FieldHeader, Vec<f64>) = read_raw(path)?;
        check_count(header.value_count(), data.len())?;
        Ok(Self { header, data })
    }
}

impl FlowFile {
    /// Packs ensembles that share a grid and record times.
    pub fn from_ensembles<T: Scalar>(ensembles: &[FlowEnsemble<T>], config: serde_json::Value) -> Result<Self> {
        let first = ensembles.first().ok_or(CoreError::TooFewEntries { needed: 1, got: 0 })?;
        let g = &first.grid;
        let dim = g.dim();
        let mut data = Vec::new();
        for e in ensembles {
            if e.times != first.times || e.grid.points() != g.points() {
                return Err(CoreError::TimeGrid("ensembles disagree on grid or record times".into()));
            }
            for (pos, ld) in e.positions.iter().zip(&e.logdet_exponential) {
                for a in 0..dim {
                    data.extend(pos.iter().map(|p| p[a].to64()));
                }
                data.extend(ld.iter().map(|x| x.to64()));
            }
        }
        let header = FlowHeader {
            dim,
            l: g.period().to64(),
            n: g.points(),
            config,
            seeds: ensembles.iter().map(|e| e.path.stream_id()).collect(),
            times: first.times.iter().map(|t| t.to64()).collect(),
        };
        Ok(Self { header, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        check_count(self.header.value_count(), self.data.len())?;
        write_raw(path, &self.header, &self.data)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (header, data): (FlowHeader, Vec<f64>) = read_raw(path)?;
        check_count(header.value_count(), data.len())?;
        Ok(Self { header, data })
    }
}

/// Reads a `.fld` or `.flo` file by extension.
pub fn read_any(path: &Path) -> Result<AnyFile> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("fld") => FieldFile::read(path).map(AnyFile::Field),
        Some("flo") => FlowFile::read(path).map(AnyFile::Flow),
        other => Err(CoreError::Format(format!("unknown extension {other:?}; expected .fld or .flo"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_grid;
    use crate::flow::{sample_brownian, simulate_flow, SdeCoefficients, SdeConfig};
    use crate::presets::{trig_drift, unit_noise};
    use std::f64::consts::TAU;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("renormlab-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn field_roundtrip_is_bit_exact() {
        let g = build_grid::<f64>(2, TAU, 8).unwrap();
        let v = trig_drift(&g, 0.5, 0.6);
        let p = tmp("drift.fld");
        FieldFile::from_time_vector(&v).write(&p).unwrap();
        let back = FieldFile::read(&p).unwrap().to_time_vector::<f64>().unwrap();
        assert_eq!(back.times, v.times);
        for (a, b) in back.slices.iter().zip(&v.slices) {
            for (x, y) in a.components.iter().zip(&b.components) {
                assert!(x.values.iter().zip(&y.values).all(|(u, w)| u.to_bits() == w.to_bits()));
            }
        }
        let first = std::fs::read(&p).unwrap();
        let nl = first.iter().position(|&c| c == b'\n').unwrap();
        let h: serde_json::Value = serde_json::from_slice(&first[..nl]).unwrap();
        assert_eq!(h["N"], 8);
        assert_eq!(h["components"], 2);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let g = build_grid::<f64>(1, TAU, 8).unwrap();
        let f = FieldFile::from_scalars(&[0.0], &[GridScalar::constant(&g, 1.0)]).unwrap();
        let p = tmp("short.fld");
        f.write(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(FieldFile::read(&p), Err(CoreError::Format(_))));
    }

    #[test]
    fn flow_roundtrip_keeps_seeds() {
        let g = build_grid::<f64>(2, TAU, 8).unwrap();
        let c = SdeCoefficients::new(trig_drift(&g, 0.1, 0.6), unit_noise(&g, 0.1)).unwrap();
        let ens: Vec<_> = (0..2)
            .map(|s| simulate_flow(&c, &SdeConfig::new(0.05, 1).unwrap(), &sample_brownian(0.1, 0.05, 2, s).unwrap()).unwrap())
            .collect();
        let f = FlowFile::from_ensembles(&ens, serde_json::json!({"dt": 0.05})).unwrap();
        let p = tmp("ens.flo");
        f.write(&p).unwrap();
        match read_any(&p).unwrap() {
            AnyFile::Flow(back) => {
                assert_eq!(back.header.seeds, vec![0, 1]);
                assert_eq!(back, f);
            }
            AnyFile::Field(_) => panic!("wrong kind"),
        }
        assert!(read_any(&tmp("x.txt")).is_err());
    }
}
