//! Seeded generation of random operators, states, and measures, used by the
//! property suites and by the CLI's random-instance presets.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::measure::{ProbabilityMeasure, ScalarMeasure};
use crate::operator::{DensityOperator, HermitianOperator, Operator};

fn standard_complex<R: Rng>(rng: &mut R) -> Complex64 {
    // Box-Muller pair; a standard complex Gaussian.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (-2.0 * u1.ln()).sqrt();
    Complex64::new(r * u2.cos(), r * u2.sin()) / 2f64.sqrt()
}

/// Square matrix of iid standard complex Gaussians.
pub fn random_operator<R: Rng>(dim: usize, rng: &mut R) -> Operator {
    let mat = DMatrix::from_fn(dim, dim, |_, _| standard_complex(rng));
    Operator::from_matrix(mat).expect("finite Gaussian entries")
}

/// Hermitian matrix (G + G^*)/2 of a Gaussian G; exactly Hermitian in
/// floating point.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> HermitianOperator {
    HermitianOperator::symmetrized(&random_operator(dim, rng))
}

/// Hermitian matrix rescaled to the given spectral radius, which keeps
/// moment-formula comparisons well conditioned.
pub fn random_hermitian_with_radius<R: Rng>(
    dim: usize,
    radius: f64,
    rng: &mut R,
) -> Result<HermitianOperator> {
    random_hermitian(dim, rng).scaled_to_spectral_radius(radius)
}

/// Unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> Operator {
    let qr = random_operator(dim, rng).into_matrix().qr();
    Operator::from_matrix(qr.q()).expect("Q factor is well formed")
}

/// Normalized Gaussian state vector.
pub fn random_state_vector<R: Rng>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| standard_complex(rng));
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v / Complex64::new(n, 0.0)
}

/// Full-rank random density operator G G^* / Tr(G G^*).
pub fn random_density<R: Rng>(dim: usize, rng: &mut R) -> Result<DensityOperator> {
    let g = random_operator(dim, rng).into_matrix();
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityOperator::new(Operator::from_matrix(m / tr)?)
}

/// Random atomic probability measure with up to `max_atoms` atoms at uniform
/// locations in `[-span, span]`.
pub fn random_atom_probability<R: Rng>(
    max_atoms: usize,
    span: f64,
    rng: &mut R,
) -> Result<ProbabilityMeasure> {
    let n = rng.gen_range(1..=max_atoms);
    let mut atoms = Vec::with_capacity(n);
    let mut total = 0.0;
    for _ in 0..n {
        let w: f64 = rng.gen_range(0.01..1.0);
        total += w;
        atoms.push((rng.gen_range(-span..span), w));
    }
    for a in &mut atoms {
        a.1 /= total;
    }
    ProbabilityMeasure::normalized(ScalarMeasure::from_real_atoms(&atoms)?)
}

/// Random atomic complex measure: up to `max_atoms` atoms at uniform
/// locations in `[-span, span]` with weights in the unit disc.
pub fn random_atom_complex<R: Rng>(
    max_atoms: usize,
    span: f64,
    rng: &mut R,
) -> Result<ScalarMeasure> {
    let n = rng.gen_range(1..=max_atoms);
    let atoms = (0..n)
        .map(|_| {
            let r: f64 = rng.gen_range(0.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            (
                rng.gen_range(-span..span),
                Complex64::new(r * phi.cos(), r * phi.sin()),
            )
        })
        .collect();
    ScalarMeasure::from_atoms(atoms)
}
