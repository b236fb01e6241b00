//! File formats: measures and operators as JSON, reports and samples as CSV,
//! phase-space observables as a directory of row files.
//!
//! Every format is plain serde data with explicit fields, so files are
//! stable across runs and diffable byte-for-byte.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{GriddedDensity, MomentReport, ScalarMeasure};
use crate::operator::{trace_pairing, DensityOperator, Operator};
use crate::phasespace::{Axis, PhaseSpaceGrid, PhaseSpacePOVM};
use crate::sampling::OutcomeSample;
use crate::semispectral::DiscretizedPOVM;

/// JSON shape of a [`ScalarMeasure`]: atoms as `[x, re, im]` triples plus an
/// optional gridded density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    pub atoms: Vec<(f64, f64, f64)>,
    pub density: Option<DensityFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityFile {
    pub origin: f64,
    pub step: f64,
    pub values: Vec<(f64, f64)>,
}

impl MeasureFile {
    pub fn from_measure(m: &ScalarMeasure) -> Self {
        Self {
            atoms: m.atoms().iter().map(|&(x, w)| (x, w.re, w.im)).collect(),
            density: m.density().map(|d| DensityFile {
                origin: d.origin(),
                step: d.step(),
                values: d.values().iter().map(|v| (v.re, v.im)).collect(),
            }),
        }
    }

    pub fn into_measure(self) -> Result<ScalarMeasure> {
        let atoms = self
            .atoms
            .into_iter()
            .map(|(x, re, im)| (x, Complex64::new(re, im)))
            .collect();
        let density = match self.density {
            Some(d) => Some(GriddedDensity::new(
                d.origin,
                d.step,
                d.values
                    .into_iter()
                    .map(|(re, im)| Complex64::new(re, im))
                    .collect(),
            )?),
            None => None,
        };
        ScalarMeasure::new(atoms, density)
    }
}

/// JSON shape of an [`Operator`]: row-major `[re, im]` entry pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorFile {
    pub dim: usize,
    pub entries: Vec<(f64, f64)>,
}

impl OperatorFile {
    pub fn from_operator(op: &Operator) -> Self {
        let dim = op.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let v = op.entry(i, j);
                entries.push((v.re, v.im));
            }
        }
        Self { dim, entries }
    }

    pub fn into_operator(self) -> Result<Operator> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::Serialization(format!(
                "operator file claims dim {} but holds {} entries",
                self.dim,
                self.entries.len()
            )));
        }
        let mat = nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let (re, im) = self.entries[i * self.dim + j];
            Complex64::new(re, im)
        });
        Operator::from_matrix(mat)
    }
}

/// JSON shape of a [`DiscretizedPOVM`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmFile {
    pub edges: Vec<f64>,
    pub effects: Vec<OperatorFile>,
    pub reps: Vec<f64>,
}

impl PovmFile {
    pub fn from_povm(e: &DiscretizedPOVM) -> Self {
        Self {
            edges: e.edges().to_vec(),
            effects: e.effects().iter().map(OperatorFile::from_operator).collect(),
            reps: e.reps().to_vec(),
        }
    }

    pub fn into_povm(self) -> Result<DiscretizedPOVM> {
        let effects = self
            .effects
            .into_iter()
            .map(OperatorFile::into_operator)
            .collect::<Result<Vec<_>>>()?;
        DiscretizedPOVM::new(self.edges, effects, self.reps)
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Serialization(e.to_string())
}

fn io_error(e: std::io::Error) -> Error {
    Error::Serialization(e.to_string())
}

pub fn save_measure(m: &ScalarMeasure, path: &Path) -> Result<()> {
    let text =
        serde_json::to_string_pretty(&MeasureFile::from_measure(m)).map_err(json_error)?;
    fs::write(path, text).map_err(io_error)
}

pub fn load_measure(path: &Path) -> Result<ScalarMeasure> {
    let text = fs::read_to_string(path).map_err(io_error)?;
    let file: MeasureFile = serde_json::from_str(&text).map_err(json_error)?;
    file.into_measure()
}

pub fn save_operator(op: &Operator, path: &Path) -> Result<()> {
    let text =
        serde_json::to_string_pretty(&OperatorFile::from_operator(op)).map_err(json_error)?;
    fs::write(path, text).map_err(io_error)
}

pub fn load_operator(path: &Path) -> Result<Operator> {
    let text = fs::read_to_string(path).map_err(io_error)?;
    let file: OperatorFile = serde_json::from_str(&text).map_err(json_error)?;
    file.into_operator()
}

pub fn save_povm(e: &DiscretizedPOVM, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&PovmFile::from_povm(e)).map_err(json_error)?;
    fs::write(path, text).map_err(io_error)
}

pub fn load_povm(path: &Path) -> Result<DiscretizedPOVM> {
    let text = fs::read_to_string(path).map_err(io_error)?;
    let file: PovmFile = serde_json::from_str(&text).map_err(json_error)?;
    file.into_povm()
}

/// Writes a moment report as CSV rows `R,re,im,abs_partial,verdict`.
/// `header_lines` are emitted first as `#`-prefixed comments.
pub fn write_moment_report_csv(
    report: &MomentReport,
    header_lines: &[String],
    out: &mut dyn std::io::Write,
) -> Result<()> {
    for line in header_lines {
        writeln!(out, "# {line}").map_err(io_error)?;
    }
    writeln!(out, "R,re,im,abs_partial,verdict").map_err(io_error)?;
    for w in &report.windows {
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{}",
            w.radius, w.partial.re, w.partial.im, w.abs_partial, report.verdict
        )
        .map_err(io_error)?;
    }
    Ok(())
}

/// Writes sample outcomes as CSV rows `index,outcome` and a JSON metadata
/// sidecar (`<path>.meta.json`) recording seed, size, source POVM, and the
/// generator algorithm.
pub fn save_sample(
    s: &OutcomeSample,
    header_lines: &[String],
    path: &Path,
) -> Result<()> {
    let mut out = Vec::new();
    for line in header_lines {
        writeln!(out, "# {line}").map_err(io_error)?;
    }
    writeln!(out, "index,outcome").map_err(io_error)?;
    for (i, x) in s.outcomes.iter().enumerate() {
        writeln!(out, "{i},{x:.17e}").map_err(io_error)?;
    }
    fs::write(path, out).map_err(io_error)?;

    #[derive(Serialize)]
    struct Sidecar<'a> {
        seed: u64,
        n: usize,
        povm: &'a str,
        generator: &'a str,
    }
    let sidecar = serde_json::to_string_pretty(&Sidecar {
        seed: s.seed,
        n: s.outcomes.len(),
        povm: &s.source,
        generator: crate::sampling::GENERATOR_NAME,
    })
    .map_err(json_error)?;
    let meta_path = path.with_extension("meta.json");
    fs::write(meta_path, sidecar).map_err(io_error)
}

/// Grid descriptor stored at the root of a phase-space POVM directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    pub half_width: f64,
    pub points_per_axis: usize,
    pub dim: usize,
}

/// Writes a phase-space POVM as a directory: `grid.json`, one
/// `row_XXX.json` per grid row of effects, and `marginals.csv` holding the
/// per-bin masses of both Cartesian marginals in the state `rho`.
pub fn save_phase_space_povm(
    povm: &PhaseSpacePOVM,
    rho: &DensityOperator,
    header_lines: &[String],
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_error)?;
    let grid = GridFile {
        half_width: povm.grid().half_width(),
        points_per_axis: povm.grid().points_per_axis(),
        dim: povm.dim(),
    };
    let text = serde_json::to_string_pretty(&grid).map_err(json_error)?;
    fs::write(dir.join("grid.json"), text).map_err(io_error)?;

    let m = povm.grid().points_per_axis();
    for iq in 0..m {
        let row: Vec<OperatorFile> = (0..m)
            .map(|ip| OperatorFile::from_operator(povm.effect(iq, ip)))
            .collect();
        let text = serde_json::to_string(&row).map_err(json_error)?;
        fs::write(dir.join(format!("row_{iq:03}.json")), text).map_err(io_error)?;
    }

    let marg_x = povm.marginal(Axis::X)?;
    let marg_y = povm.marginal(Axis::Y)?;
    let mut out = Vec::new();
    for line in header_lines {
        writeln!(out, "# {line}").map_err(io_error)?;
    }
    writeln!(out, "bin,lo,hi,mass_x,mass_y").map_err(io_error)?;
    let edges = marg_x.edges();
    for i in 0..marg_x.bins() {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            edges[i - 1]
        };
        let hi = if i == marg_x.bins() - 1 {
            f64::INFINITY
        } else {
            edges[i]
        };
        let mx = trace_pairing(rho.as_operator(), &marg_x.effects()[i])?.re;
        let my = trace_pairing(rho.as_operator(), &marg_y.effects()[i])?.re;
        writeln!(out, "{i},{lo},{hi},{mx:.17e},{my:.17e}").map_err(io_error)?;
    }
    fs::write(dir.join("marginals.csv"), out).map_err(io_error)
}

/// Reads back a phase-space POVM directory written by
/// [`save_phase_space_povm`]; `marginals.csv` is derived output and ignored.
pub fn load_phase_space_povm(dir: &Path) -> Result<PhaseSpacePOVM> {
    let text = fs::read_to_string(dir.join("grid.json")).map_err(io_error)?;
    let grid_file: GridFile = serde_json::from_str(&text).map_err(json_error)?;
    let grid = PhaseSpaceGrid::new(grid_file.half_width, grid_file.points_per_axis)?;
    let m = grid.points_per_axis();
    let mut effects = Vec::with_capacity(m * m);
    for iq in 0..m {
        let text =
            fs::read_to_string(dir.join(format!("row_{iq:03}.json"))).map_err(io_error)?;
        let row: Vec<OperatorFile> = serde_json::from_str(&text).map_err(json_error)?;
        if row.len() != m {
            return Err(Error::Serialization(format!(
                "row {iq} holds {} effects, expected {m}",
                row.len()
            )));
        }
        for op in row {
            if op.dim != grid_file.dim {
                return Err(Error::Serialization(format!(
                    "effect dim {} does not match grid dim {}",
                    op.dim, grid_file.dim
                )));
            }
            effects.push(op.into_operator()?);
        }
    }
    PhaseSpacePOVM::from_parts(grid, grid_file.dim, effects)
}
