//! Finite-dimensional semispectral measures: sharp spectral measures of
//! Hermitian operators, discretized POVMs on binned real outcomes, smearing
//! of a spectral measure by a probability measure, and moment operators
//! computed both by direct integration against the POVM and by the binomial
//! closed form for smeared measures.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{gated_moment, MomentOptions, ProbabilityMeasure, ScalarMeasure};
use crate::operator::{
    decompose, hs_norm, trace_pairing, DensityOperator, HermitianOperator, Operator,
    SpectralDecomposition, DEFAULT_DEGENERACY_TOL,
};
use crate::util::binomial;

/// Default max-entry tolerance for "the effects sum to the identity".
pub const POVM_NORMALIZATION_TOL: f64 = 1e-8;

/// Default eigenvalue window for effect positivity checks:
/// eigenvalues must lie in [-PSD tol, 1 + PSD tol].
pub const EFFECT_PSD_TOL: f64 = 1e-9;

/// The spectral measure of a Hermitian operator: point masses at the merged
/// eigenvalue clusters, weighted by the spectral projections.
#[derive(Debug, Clone)]
pub struct SpectralMeasureFD {
    decomposition: SpectralDecomposition,
}

impl SpectralMeasureFD {
    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn dim(&self) -> usize {
        self.decomposition.dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.decomposition.eigenvalues()
    }

    pub fn projections(&self) -> &[Operator] {
        self.decomposition.projections()
    }

    /// Complex scalar measure `X -> <psi| E(X) |phi>`: one atom per
    /// eigenvalue cluster.
    pub fn bilinear_measure(
        &self,
        psi: &DVector<Complex64>,
        phi: &DVector<Complex64>,
    ) -> Result<ScalarMeasure> {
        bilinear_atoms(
            self.eigenvalues(),
            self.projections(),
            self.dim(),
            psi,
            phi,
        )
    }

    /// Bins this spectral measure into a [`DiscretizedPOVM`]; equivalent to
    /// smearing with a unit point mass at zero.
    pub fn discretize(&self, edges: &[f64]) -> Result<DiscretizedPOVM> {
        let delta = ProbabilityMeasure::new(ScalarMeasure::delta(0.0))?;
        smear(&delta, self, edges)
    }
}

/// Spectral measure with the default degeneracy-merging tolerance.
pub fn spectral_measure_of(a: &HermitianOperator) -> Result<SpectralMeasureFD> {
    spectral_measure_with_tol(a, DEFAULT_DEGENERACY_TOL)
}

pub fn spectral_measure_with_tol(a: &HermitianOperator, tol: f64) -> Result<SpectralMeasureFD> {
    Ok(SpectralMeasureFD {
        decomposition: decompose(a, tol)?,
    })
}

/// A POVM with finitely many effects attached to the bins
/// `(-inf, e0], (e0, e1], ..., (em, +inf)` of an increasing edge list, plus
/// one representative outcome value per bin.
#[derive(Debug, Clone)]
pub struct DiscretizedPOVM {
    edges: Vec<f64>,
    effects: Vec<Operator>,
    reps: Vec<f64>,
}

impl DiscretizedPOVM {
    /// Validates shape, symmetrizes each effect, and checks normalization
    /// within [`POVM_NORMALIZATION_TOL`].
    pub fn new(edges: Vec<f64>, effects: Vec<Operator>, reps: Vec<f64>) -> Result<Self> {
        Self::with_normalization_tol(edges, effects, reps, POVM_NORMALIZATION_TOL)
    }

    /// As [`DiscretizedPOVM::new`] with an explicit normalization tolerance
    /// (marginals of truncated phase-space observables need a looser one).
    pub fn with_normalization_tol(
        edges: Vec<f64>,
        effects: Vec<Operator>,
        reps: Vec<f64>,
        norm_tol: f64,
    ) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidEdges("need at least one edge".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidEdges("edges must be finite".into()));
        }
        for w in edges.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidEdges(format!(
                    "edges must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let bins = edges.len() + 1;
        if effects.len() != bins || reps.len() != bins {
            return Err(Error::InvalidPovm(format!(
                "{} edges define {} bins, got {} effects and {} representatives",
                edges.len(),
                bins,
                effects.len(),
                reps.len()
            )));
        }
        let dim = effects[0].dim();
        if effects.iter().any(|e| e.dim() != dim) {
            return Err(Error::InvalidPovm("effects have mixed dimensions".into()));
        }
        for (i, &r) in reps.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::InvalidPovm(format!("representative {i} not finite")));
            }
            let lo = if i == 0 { f64::NEG_INFINITY } else { edges[i - 1] };
            let hi = if i == bins - 1 { f64::INFINITY } else { edges[i] };
            if !(lo <= r && r <= hi) {
                return Err(Error::InvalidPovm(format!(
                    "representative {r} lies outside bin {i}"
                )));
            }
        }
        let effects: Vec<Operator> = effects
            .iter()
            .map(|e| HermitianOperator::symmetrized(e).into_operator())
            .collect();
        let mut sum = Operator::zeros(dim);
        for e in &effects {
            sum = &sum + e;
        }
        let defect = sum.max_entry_distance(&Operator::identity(dim));
        if defect > norm_tol {
            return Err(Error::InvalidPovm(format!(
                "effects sum differs from the identity by {defect:.3e} (tolerance {norm_tol:.1e})"
            )));
        }
        Ok(Self {
            edges,
            effects,
            reps,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn reps(&self) -> &[f64] {
        &self.reps
    }

    pub fn bins(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    /// Index of the bin containing `x` under the half-open convention
    /// `(e_{i-1}, e_i]`.
    pub fn bin_index(&self, x: f64) -> usize {
        self.edges.partition_point(|&e| e < x)
    }

    pub fn sum_effects(&self) -> Operator {
        let mut sum = Operator::zeros(self.dim());
        for e in &self.effects {
            sum = &sum + e;
        }
        sum
    }

    /// Checks that every effect's spectrum lies in
    /// `[-psd_tol, 1 + psd_tol]`. O(bins * dim^3); intended for tests and
    /// explicit validation passes, not construction hot paths.
    pub fn validate_psd(&self, psd_tol: f64) -> Result<()> {
        for (i, e) in self.effects.iter().enumerate() {
            let herm = HermitianOperator::symmetrized(e);
            let eigs = herm.eigenvalues()?;
            let (lo, hi) = (eigs[0], eigs[eigs.len() - 1]);
            if lo < -psd_tol || hi > 1.0 + psd_tol {
                return Err(Error::InvalidPovm(format!(
                    "effect {i} has spectrum [{lo:.3e}, {hi:.3e}] outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Complex scalar measure `X -> <psi| E(X) |phi>`: one atom per bin at
    /// the representative point.
    pub fn bilinear_measure(
        &self,
        psi: &DVector<Complex64>,
        phi: &DVector<Complex64>,
    ) -> Result<ScalarMeasure> {
        bilinear_atoms(&self.reps, &self.effects, self.dim(), psi, phi)
    }

    /// Outcome distribution of this POVM in the state `rho`: one atom per
    /// bin, weight `Tr(rho E_bin)`, at the representative point. Atoms at
    /// coincident representatives merge.
    pub fn outcome_probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: rho.dim(),
                right: self.dim(),
            });
        }
        self.effects
            .iter()
            .map(|e| Ok(trace_pairing(rho.as_operator(), e)?.re))
            .collect()
    }
}

fn bilinear_atoms(
    locations: &[f64],
    operators: &[Operator],
    dim: usize,
    psi: &DVector<Complex64>,
    phi: &DVector<Complex64>,
) -> Result<ScalarMeasure> {
    if psi.len() != dim || phi.len() != dim {
        return Err(Error::DimensionMismatch {
            left: psi.len().max(phi.len()),
            right: dim,
        });
    }
    let atoms = locations
        .iter()
        .zip(operators)
        .map(|(&x, op)| {
            let w = (psi.adjoint() * op.apply(phi))[(0, 0)];
            (x, w)
        })
        .collect();
    ScalarMeasure::from_atoms(atoms)
}

/// Smears a finite-dimensional spectral measure by a probability measure:
/// the effect of bin `X` is `sum_j mu(X - a_j) P_j` over the spectral atoms
/// `(a_j, P_j)`. Outer bins absorb the tails, so the effects sum to the
/// identity exactly.
///
/// Representative points follow the convention: a bin containing exactly one
/// smeared atom location (and no density mass) represents as that location;
/// otherwise interior bins use their midpoint and outer bins their finite
/// edge.
pub fn smear(
    mu: &ProbabilityMeasure,
    e: &SpectralMeasureFD,
    edges: &[f64],
) -> Result<DiscretizedPOVM> {
    if edges.is_empty() {
        return Err(Error::InvalidEdges("need at least one edge".into()));
    }
    let dim = e.dim();
    let bins = edges.len() + 1;
    let bin_of = |x: f64| edges.partition_point(|&e| e < x);
    let mut mats = vec![nalgebra::DMatrix::<Complex64>::zeros(dim, dim); bins];
    // Distinct smeared atom locations per bin, and whether density mass hit it.
    let mut atom_locs: Vec<Vec<f64>> = vec![Vec::new(); bins];
    let mut density_mass = vec![false; bins];

    for (&a, proj) in e.eigenvalues().iter().zip(e.projections()) {
        for &(t, w) in mu.atoms() {
            let loc = t + a;
            let bin = bin_of(loc);
            mats[bin] += proj.matrix() * w;
            let known = atom_locs[bin]
                .iter()
                .any(|&l| (l - loc).abs() <= crate::measure::ATOM_MERGE_TOL);
            if !known {
                atom_locs[bin].push(loc);
            }
        }
        if let Some(d) = mu.density() {
            for bin in 0..bins {
                let lo = if bin == 0 {
                    f64::NEG_INFINITY
                } else {
                    edges[bin - 1] - a
                };
                let hi = if bin == bins - 1 {
                    f64::INFINITY
                } else {
                    edges[bin] - a
                };
                let mass = d.interval_mass(lo, hi);
                if mass.re != 0.0 {
                    mats[bin] += proj.matrix() * mass;
                    density_mass[bin] = true;
                }
            }
        }
    }

    let effects = mats
        .into_iter()
        .map(|m| Operator::from_matrix(m))
        .collect::<Result<Vec<_>>>()?;
    let reps = (0..bins)
        .map(|bin| {
            if atom_locs[bin].len() == 1 && !density_mass[bin] {
                atom_locs[bin][0]
            } else if bin == 0 {
                edges[0]
            } else if bin == bins - 1 {
                edges[edges.len() - 1]
            } else {
                0.5 * (edges[bin - 1] + edges[bin])
            }
        })
        .collect();
    DiscretizedPOVM::new(edges.to_vec(), effects, reps)
}

/// k-th moment operator by direct integration: `sum_bins rep^k * effect`.
pub fn moment_operator_direct(e: &DiscretizedPOVM, k: u32) -> Operator {
    let mut acc = nalgebra::DMatrix::<Complex64>::zeros(e.dim(), e.dim());
    for (&r, effect) in e.reps().iter().zip(e.effects()) {
        acc += effect.matrix() * Complex64::new(r.powi(k as i32), 0.0);
    }
    HermitianOperator::symmetrized(&Operator::from_matrix(acc).expect("square"))
        .into_operator()
}

/// k-th moment operator of the smeared measure `mu * E^A` via the binomial
/// closed form `sum_n C(k,n) mu[k-n] A^n`, evaluated without building any
/// POVM. Every moment of `mu` up to order k must pass the convergence gate
/// (see [`crate::measure::gated_moment`]); `probe = None` uses the
/// saturation ladder, explicit radii screen for heavy tails.
pub fn moment_operator_binomial(
    mu: &ProbabilityMeasure,
    a: &HermitianOperator,
    k: u32,
    probe: Option<&[f64]>,
    opts: &MomentOptions,
) -> Result<Operator> {
    let moments: Vec<f64> = (0..=k)
        .map(|n| gated_moment(mu, n, probe, opts).map(|v| v.re))
        .collect::<Result<_>>()?;
    let mut acc = nalgebra::DMatrix::<Complex64>::zeros(a.dim(), a.dim());
    let mut a_pow = Operator::identity(a.dim());
    for n in 0..=k {
        let coeff = binomial(k, n) * moments[(k - n) as usize];
        acc += a_pow.matrix() * Complex64::new(coeff, 0.0);
        if n < k {
            a_pow = &a_pow * a.as_operator();
        }
    }
    Ok(HermitianOperator::symmetrized(&Operator::from_matrix(acc).expect("square"))
        .into_operator())
}

/// Outcome distribution of the sharp observable `A` in the state `T`:
/// atoms `Tr(T P_j)` at the eigenvalue clusters of `A`.
pub fn state_distribution(
    t: &DensityOperator,
    a: &HermitianOperator,
) -> Result<ProbabilityMeasure> {
    if t.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: t.dim(),
            right: a.dim(),
        });
    }
    let e = spectral_measure_of(a)?;
    let mut atoms = Vec::with_capacity(e.eigenvalues().len());
    for (&l, proj) in e.eigenvalues().iter().zip(e.projections()) {
        let w = trace_pairing(t.as_operator(), proj)?;
        if w.re < -EFFECT_PSD_TOL {
            return Err(Error::InvalidProbabilities(format!(
                "Tr(T P) = {:.3e} at eigenvalue {l}",
                w.re
            )));
        }
        atoms.push((l, Complex64::new(w.re.max(0.0), 0.0)));
    }
    ProbabilityMeasure::new(ScalarMeasure::from_atoms(atoms)?)
}

/// Both sides of the Hilbert-Schmidt moment identity
/// `|| |A|^(k/2) sqrt(T) ||_HS^2 = integral of |x|^k against p_T^A`.
#[derive(Debug, Clone, Copy)]
pub struct HsMomentDiagnostic {
    /// Squared Hilbert-Schmidt norm of `|A|^(k/2) sqrt(T)`.
    pub hs_side: f64,
    /// Absolute k-th moment of the outcome distribution of A in T.
    pub moment_side: f64,
}

/// Evaluates both routes of the absolute-moment identity; they agree up to
/// roundoff for any state and Hermitian operator of matching dimension.
pub fn hs_moment_diagnostic(
    t: &DensityOperator,
    a: &HermitianOperator,
    k: u32,
) -> Result<HsMomentDiagnostic> {
    if t.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: t.dim(),
            right: a.dim(),
        });
    }
    let half_power = a.apply_function(|x| x.abs().powf(k as f64 / 2.0))?;
    let root = t.sqrt()?;
    let hs_side = hs_norm(&(half_power.as_operator() * root.as_operator())).powi(2);
    let p = state_distribution(t, a)?;
    let moment_side: f64 = p
        .atoms()
        .iter()
        .map(|&(x, w)| x.abs().powi(k as i32) * w.re)
        .sum();
    Ok(HsMomentDiagnostic {
        hs_side,
        moment_side,
    })
}

/// `Tr(A^m T)`, the m-th moment of `p_T^A`. The imaginary residue must stay
/// below 1e-10; anything larger signals broken inputs.
pub fn trace_moment(t: &DensityOperator, a: &HermitianOperator, m: u32) -> Result<f64> {
    let tr = trace_pairing(t.as_operator(), &a.pow(m))?;
    if tr.im.abs() > 1e-10 {
        return Err(Error::InvalidOperator(format!(
            "trace moment has imaginary residue {:.3e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{full_moment, moment, Verdict};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn two_level() -> HermitianOperator {
        HermitianOperator::from_diagonal(&[0.0, 1.0])
    }

    fn pm_atoms(atoms: &[(f64, f64)]) -> ProbabilityMeasure {
        ProbabilityMeasure::new(ScalarMeasure::from_real_atoms(atoms).unwrap()).unwrap()
    }

    #[test]
    fn smear_two_level_with_symmetric_coin() {
        let a = two_level();
        let e = spectral_measure_of(&a).unwrap();
        let mu = pm_atoms(&[(-1.0, 0.5), (1.0, 0.5)]);
        let povm = smear(&mu, &e, &[-0.5, 0.5]).unwrap();
        assert_eq!(povm.bins(), 3);
        // Smeared atom locations: -1, 1 (from eigenvalue 0) and 0, 2 (from 1).
        let e0 = povm.effects()[0].clone();
        assert_relative_eq!(e0.entry(0, 0).re, 0.5, max_relative = 1e-14);
        assert_relative_eq!(e0.entry(1, 1).re, 0.0, max_relative = 1e-14);
        let e1 = povm.effects()[1].clone();
        assert_relative_eq!(e1.entry(1, 1).re, 0.5, max_relative = 1e-14);
        let e2 = povm.effects()[2].clone();
        assert_relative_eq!(e2.entry(0, 0).re, 0.5, max_relative = 1e-14);
        assert_relative_eq!(e2.entry(1, 1).re, 0.5, max_relative = 1e-14);
        // Bin 0 and 1 hold single atoms; the outer bin 2 holds two.
        assert_eq!(povm.reps(), &[-1.0, 0.0, 0.5]);
        povm.validate_psd(EFFECT_PSD_TOL).unwrap();
    }

    #[test]
    fn discretized_spectral_measure_reproduces_operator() {
        let a = HermitianOperator::from_diagonal(&[-0.75, 0.1, 0.6]);
        let e = spectral_measure_of(&a).unwrap();
        // One eigenvalue per bin.
        let povm = e.discretize(&[-0.5, 0.3]).unwrap();
        assert_eq!(povm.reps(), &[-0.75, 0.1, 0.6]);
        let m1 = moment_operator_direct(&povm, 1);
        assert!(m1.max_entry_distance(a.as_operator()) < 1e-10);
        let m0 = moment_operator_direct(&povm, 0);
        assert!(m0.max_entry_distance(&Operator::identity(3)) < 1e-12);
    }

    #[test]
    fn povm_shape_and_normalization_checks() {
        let id = Operator::identity(2);
        let half = id.scale(Complex64::new(0.5, 0.0));
        // Non-increasing edges.
        assert!(DiscretizedPOVM::new(
            vec![0.5, 0.5],
            vec![half.clone(), half.clone(), Operator::zeros(2)],
            vec![0.0, 0.5, 1.0],
        )
        .is_err());
        // Wrong effect count.
        assert!(DiscretizedPOVM::new(vec![0.0], vec![id.clone()], vec![0.0]).is_err());
        // Normalization failure.
        assert!(DiscretizedPOVM::new(
            vec![0.0],
            vec![half.clone(), half.scale(Complex64::new(0.5, 0.0))],
            vec![-1.0, 1.0],
        )
        .is_err());
        // Representative outside its bin.
        assert!(DiscretizedPOVM::new(
            vec![0.0],
            vec![half.clone(), half.clone()],
            vec![1.0, 2.0],
        )
        .is_err());
        // Valid two-bin split.
        let povm =
            DiscretizedPOVM::new(vec![0.0], vec![half.clone(), half], vec![-1.0, 1.0]).unwrap();
        assert_eq!(povm.bin_index(0.0), 0);
        assert_eq!(povm.bin_index(1e-12), 1);
    }

    #[test]
    fn binomial_moment_matches_quadrature_for_gaussian_smearing() {
        let mu = ProbabilityMeasure::normalized(
            ScalarMeasure::gaussian_density(1.0, 2.0, -14.0, 16.0, 0.01).unwrap(),
        )
        .unwrap();
        let a = two_level();
        let opts = MomentOptions::default();
        let m2 = moment_operator_binomial(&mu, &a, 2, None, &opts).unwrap();
        // mu[2] I + 2 mu[1] A + A^2 with mu[1] = 1, mu[2] = 3; A^2 = A here.
        assert_relative_eq!(m2.entry(0, 0).re, 3.0, max_relative = 1e-3);
        assert_relative_eq!(m2.entry(1, 1).re, 6.0, max_relative = 1e-3);
        // Exact against the same quadrature moments.
        let m1v = full_moment(&mu, 1).re;
        let m2v = full_moment(&mu, 2).re;
        assert_relative_eq!(m2.entry(1, 1).re, m2v + 2.0 * m1v + 1.0, max_relative = 1e-12);
    }

    #[test]
    fn binomial_refuses_heavy_tail_but_passes_first_moment() {
        let heavy = ProbabilityMeasure::normalized(
            ScalarMeasure::inverse_cubic_density(1e6, 1.0).unwrap(),
        )
        .unwrap();
        let a = two_level();
        let probe = [1e2, 1e3, 1e4, 1e5, 1e6];
        // The absolute first-moment tail beyond R is ~2/R; at the last
        // window pair the relative change is ~2e-5, so the gate threshold is
        // set to the window scale.
        let opts = MomentOptions {
            converge_rel: 1e-4,
            ..MomentOptions::default()
        };
        let m1 = moment_operator_binomial(&heavy, &a, 1, Some(&probe), &opts);
        assert!(m1.is_ok());
        let m2 = moment_operator_binomial(&heavy, &a, 2, Some(&probe), &opts);
        assert!(matches!(
            m2,
            Err(Error::NonConvergedMoment { order: 2, .. })
        ));
        let rep = moment(&heavy, 2, &probe, &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::Diverging);
    }

    #[test]
    fn state_distribution_of_mixed_state() {
        let t = DensityOperator::maximally_mixed(2).unwrap();
        let a = HermitianOperator::from_diagonal(&[-1.0, 1.0]);
        let p = state_distribution(&t, &a).unwrap();
        assert_eq!(p.atoms().len(), 2);
        assert_relative_eq!(p.atoms()[0].1.re, 0.5, max_relative = 1e-14);
        assert_relative_eq!(p.atoms()[1].1.re, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn hs_identity_on_small_instance() {
        let t = DensityOperator::maximally_mixed(3).unwrap();
        let a = HermitianOperator::from_diagonal(&[-2.0, 0.5, 1.0]);
        for k in 0..=6 {
            let d = hs_moment_diagnostic(&t, &a, k).unwrap();
            assert!(
                (d.hs_side - d.moment_side).abs() <= 1e-9,
                "k = {k}: {} vs {}",
                d.hs_side,
                d.moment_side
            );
        }
    }

    #[test]
    fn trace_moment_rejects_mismatch() {
        let t = DensityOperator::maximally_mixed(2).unwrap();
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            trace_moment(&t, &a, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bilinear_measure_of_povm() {
        let a = two_level();
        let e = spectral_measure_of(&a).unwrap();
        let psi = DVector::from_vec(vec![
            Complex64::new(1.0, 0.0) / 2f64.sqrt(),
            Complex64::new(1.0, 0.0) / 2f64.sqrt(),
        ]);
        let m = e.bilinear_measure(&psi, &psi).unwrap();
        assert_relative_eq!(m.atoms()[0].1.re, 0.5, max_relative = 1e-14);
        assert_relative_eq!(m.atoms()[1].1.re, 0.5, max_relative = 1e-14);
        assert!((m.mass().re - 1.0).abs() < 1e-14);
    }
}
