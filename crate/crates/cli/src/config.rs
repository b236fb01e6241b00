//! Run configurations: JSON documents describing one computation each, with
//! inline generators for measures, operators, and states so that presets
//! need no input files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qsmear::io;
use qsmear::measure::{MomentOptions, ScalarMeasure};
use qsmear::operator::{DensityOperator, HermitianOperator};
use qsmear::phasespace::{self, Axis};

use crate::CliError;

/// A scalar measure: an existing file, explicit atoms, or a named density.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    File {
        file: PathBuf,
    },
    /// Atoms as `[location, re, im]` triples.
    Atoms {
        atoms: Vec<(f64, f64, f64)>,
    },
    Gaussian {
        mean: f64,
        variance: f64,
        lo: f64,
        hi: f64,
        step: f64,
    },
    /// Density proportional to `(1 + |x|)^-3` on `[-half_width, half_width]`.
    InverseCubic {
        half_width: f64,
        step: f64,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<ScalarMeasure, CliError> {
        Ok(match self {
            MeasureSpec::File { file } => io::load_measure(file)?,
            MeasureSpec::Atoms { atoms } => {
                let atoms: Vec<(f64, num_complex::Complex64)> = atoms
                    .iter()
                    .map(|&(x, re, im)| (x, num_complex::Complex64::new(re, im)))
                    .collect();
                ScalarMeasure::from_atoms(atoms)?
            }
            MeasureSpec::Gaussian {
                mean,
                variance,
                lo,
                hi,
                step,
            } => ScalarMeasure::gaussian_density(*mean, *variance, *lo, *hi, *step)?,
            MeasureSpec::InverseCubic { half_width, step } => {
                ScalarMeasure::inverse_cubic_density(*half_width, *step)?
            }
        })
    }

}

/// A selfadjoint operator: an existing file, row-major entries, or the
/// truncated position operator.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    File { file: PathBuf },
    Position { position_dim: usize },
    Entries { dim: usize, entries: Vec<(f64, f64)> },
}

impl OperatorSpec {
    pub fn build(&self) -> Result<HermitianOperator, CliError> {
        let op = match self {
            OperatorSpec::File { file } => io::load_operator(file)?,
            OperatorSpec::Position { position_dim } => {
                return Ok(phasespace::position_operator(*position_dim)?);
            }
            OperatorSpec::Entries { dim, entries } => io::OperatorFile {
                dim: *dim,
                entries: entries.clone(),
            }
            .into_operator()?,
        };
        Ok(HermitianOperator::new(op)?)
    }
}

/// A density operator; the default is the ground basis state.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    File { file: PathBuf },
    BasisIndex { basis_index: usize },
}

impl StateSpec {
    pub fn build(&self, dim: usize) -> Result<DensityOperator, CliError> {
        Ok(match self {
            StateSpec::File { file } => DensityOperator::new(io::load_operator(file)?)?,
            StateSpec::BasisIndex { basis_index } => {
                DensityOperator::basis_state(dim, *basis_index)?
            }
        })
    }
}

pub fn default_state() -> StateSpec {
    StateSpec::BasisIndex { basis_index: 0 }
}

/// Convergence gate overrides for windowed moments.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentGate {
    pub converge_rel: Option<f64>,
    pub diverge_growth: Option<f64>,
}

impl MomentGate {
    pub fn options(&self) -> MomentOptions {
        let mut opts = MomentOptions::default();
        if let Some(c) = self.converge_rel {
            opts.converge_rel = c;
        }
        if let Some(d) = self.diverge_growth {
            opts.diverge_growth = d;
        }
        opts
    }
}

fn default_kmax() -> u32 {
    4
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolveConfig {
    pub mu: MeasureSpec,
    pub nu: MeasureSpec,
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    /// Moment window radii; defaults to the saturation ladder above the
    /// support radius.
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub gate: MomentGate,
    /// When set, a non-converged verdict in any report fails the run.
    #[serde(default)]
    pub require_converged: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub mu: MeasureSpec,
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub gate: MomentGate,
    #[serde(default)]
    pub require_converged: bool,
}

fn default_cutoff() -> usize {
    20
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Config {
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
}

impl Default for Example1Config {
    fn default() -> Self {
        Example1Config {
            cutoff: default_cutoff(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmearConfig {
    pub mu: MeasureSpec,
    pub operator: OperatorSpec,
    /// Bin edges; defaults to midpoints isolating every eigenvalue-atom sum.
    pub edges: Option<Vec<f64>>,
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    /// Window radii handed to the binomial route's moment gate.
    pub probe_radii: Option<Vec<f64>>,
    #[serde(default)]
    pub gate: MomentGate,
    /// When set, the per-k max-entry distance must stay below this.
    pub max_distance: Option<f64>,
}

fn default_quadrature() -> usize {
    phasespace::DEFAULT_QUADRATURE_ORDER
}

/// Parameters that determine a phase-space observable build.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasespaceParams {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature_order: usize,
    /// Seed state; ground state when omitted.
    pub state: Option<StateSpec>,
}

impl PhasespaceParams {
    pub fn seed_state(&self) -> Result<DensityOperator, CliError> {
        match &self.state {
            Some(s) => s.build(self.dim),
            None => Ok(DensityOperator::basis_state(self.dim, 0)?),
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "phasespace(dim={},half_width={},points_per_axis={})",
            self.dim, self.half_width, self.points_per_axis
        )
    }
}

fn default_kmax_phase() -> u32 {
    2
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasespaceConfig {
    pub build: PhasespaceParams,
    #[serde(default = "default_kmax_phase")]
    pub kmax: u32,
    /// Basis block for operator comparisons; half the dimension if unset.
    pub leading_block: Option<usize>,
    /// When set, both marginal checks must stay below this distance.
    pub max_distance: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisSpec {
    X,
    Y,
}

impl AxisSpec {
    pub fn axis(&self) -> Axis {
        match self {
            AxisSpec::X => Axis::X,
            AxisSpec::Y => Axis::Y,
        }
    }
}

fn default_axis() -> AxisSpec {
    AxisSpec::X
}

/// The observable to sample: a binned POVM file or a freshly built
/// phase-space marginal.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PovmSpec {
    File {
        file: PathBuf,
    },
    Marginal {
        marginal_of: PhasespaceParams,
        #[serde(default = "default_axis")]
        axis: AxisSpec,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub povm: PovmSpec,
    /// State to sample in; ground state when omitted.
    pub state: Option<StateSpec>,
    pub n: usize,
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    pub seed: Option<u64>,
    /// When set, every moment z-score must stay within this bound.
    pub zmax: Option<f64>,
}

/// Built-in configurations, addressable with `--preset NAME`.
pub fn preset(command: &str, name: &str) -> Option<&'static str> {
    match (command, name) {
        ("convolve", "gaussian-pair") => Some(
            r#"{
  "mu": { "mean": 0.0, "variance": 1.0, "lo": -8.0, "hi": 8.0, "step": 0.0625 },
  "nu": { "mean": 0.0, "variance": 0.5, "lo": -8.0, "hi": 8.0, "step": 0.0625 },
  "kmax": 4,
  "require_converged": true
}"#,
        ),
        ("moments", "heavy-tail") => Some(
            r#"{
  "mu": { "half_width": 10000.0, "step": 0.5 },
  "kmax": 2,
  "radii": [100.0, 1000.0, 10000.0],
  "gate": { "converge_rel": 0.005 }
}"#,
        ),
        ("example1", "dyadic") => Some(r#"{ "cutoff": 20 }"#),
        ("smear", "noisy-position") => Some(
            r#"{
  "operator": { "position_dim": 16 },
  "mu": { "atoms": [[-0.5, 0.25, 0.0], [0.0, 0.5, 0.0], [0.5, 0.25, 0.0]] },
  "kmax": 3,
  "max_distance": 1e-8
}"#,
        ),
        ("phasespace", "vacuum") => Some(
            r#"{
  "build": { "dim": 40, "half_width": 6.0, "points_per_axis": 48 },
  "kmax": 2,
  "leading_block": 10,
  "max_distance": 0.005
}"#,
        ),
        ("sample", "vacuum-marginal") => Some(
            r#"{
  "povm": {
    "marginal_of": { "dim": 40, "half_width": 6.0, "points_per_axis": 48 },
    "axis": "x"
  },
  "n": 100000,
  "seed": 7,
  "kmax": 4,
  "zmax": 5.0
}"#,
        ),
        _ => None,
    }
}

pub fn preset_names(command: &str) -> &'static [&'static str] {
    match command {
        "convolve" => &["gaussian-pair"],
        "moments" => &["heavy-tail"],
        "example1" => &["dyadic"],
        "smear" => &["noisy-position"],
        "phasespace" => &["vacuum"],
        "sample" => &["vacuum-marginal"],
        _ => &[],
    }
}
