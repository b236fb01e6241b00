//! Dense complex operators on finite-dimensional Hilbert spaces: Hermitian
//! spectral decompositions with degeneracy merging, operator functions,
//! traces, and Hilbert-Schmidt norms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on operator dimension. Everything here is desk scale; dense
/// storage and O(dim^3) decompositions are assumed throughout.
pub const MAX_OPERATOR_DIM: usize = 256;

/// Eigenvalues closer than this are treated as one degenerate cluster when
/// no explicit tolerance is supplied.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Max-entry deviation from M = M^* accepted by [`HermitianOperator::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Eigenvalue floor accepted by [`DensityOperator::new`]: positive
/// semidefiniteness is enforced up to this much numerical leakage.
pub const DENSITY_PSD_TOL: f64 = 1e-12;

/// Allowed deviation of a density operator's trace from one.
pub const DENSITY_TRACE_TOL: f64 = 1e-12;

/// A square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<Complex64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidOperator(format!(
                "matrix is {}x{}, expected square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidOperator("dimension must be >= 1".into()));
        }
        if mat.nrows() > MAX_OPERATOR_DIM {
            return Err(Error::DimensionCap(mat.nrows()));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidOperator("non-finite entry".into()));
        }
        Ok(Self { mat })
    }

    /// Builds the dim x dim zero operator. Panics if `dim` is outside the cap;
    /// use [`Operator::from_matrix`] for fallible construction.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_OPERATOR_DIM, "dimension {dim} out of range");
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_OPERATOR_DIM, "dimension {dim} out of range");
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: Complex64) -> Operator {
        Operator {
            mat: &self.mat * s,
        }
    }

    /// n-fold matrix power; `pow(0)` is the identity.
    pub fn pow(&self, n: u32) -> Operator {
        let mut out = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..n {
            out = &out * &self.mat;
        }
        Operator { mat: out }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.mat * v
    }

    /// Largest entry magnitude, the max-entry norm used by the comparison
    /// diagnostics in this crate.
    pub fn max_entry_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_entry_distance(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let mut d = 0.0f64;
        for (a, b) in self.mat.iter().zip(other.mat.iter()) {
            d = d.max((a - b).norm());
        }
        d
    }

    /// Top-left k x k corner, used to compare operators away from the levels
    /// most distorted by basis truncation.
    pub fn leading_block(&self, k: usize) -> Operator {
        let k = k.min(self.dim());
        Operator {
            mat: self.mat.view((0, 0), (k, k)).into_owned(),
        }
    }

    pub fn max_entry_distance_on_block(&self, other: &Operator, k: usize) -> f64 {
        self.leading_block(k).max_entry_distance(&other.leading_block(k))
    }

    /// Max-entry deviation from self-adjointness.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in i..n {
                d = d.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        d
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

impl std::ops::Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: -&self.mat }
    }
}

/// An operator verified (or forced) to satisfy M = M^*.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    op: Operator,
}

impl HermitianOperator {
    /// Accepts `op` if its hermiticity defect is within [`HERMITICITY_TOL`].
    pub fn new(op: Operator) -> Result<Self> {
        let defect = op.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { op })
    }

    /// Projects onto the Hermitian part (M + M^*)/2. Used where roundoff in a
    /// long accumulation may have left an asymmetry of a few ulps.
    pub fn symmetrized(op: &Operator) -> Self {
        let mat = (op.matrix() + op.matrix().adjoint()) * Complex64::new(0.5, 0.0);
        Self {
            op: Operator { mat },
        }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mat = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self {
            op: Operator { mat },
        }
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        HermitianOperator {
            op: self.op.scale(Complex64::new(s, 0.0)),
        }
    }

    /// Rescales so the spectral radius becomes `r` (no-op on the zero operator).
    pub fn scaled_to_spectral_radius(&self, r: f64) -> Result<HermitianOperator> {
        let eigs = self.eigenvalues()?;
        let rho = eigs.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        if rho == 0.0 {
            return Ok(self.clone());
        }
        Ok(self.scale(r / rho))
    }

    /// Eigenvalues in ascending order, without projections.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = try_symmetric_eigen(self.op.matrix().clone())?;
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(v)
    }

    /// Full spectral decomposition with eigenvalues closer than
    /// `degeneracy_tol` merged into a single projection.
    pub fn decompose(&self, degeneracy_tol: f64) -> Result<SpectralDecomposition> {
        decompose(self, degeneracy_tol)
    }

    /// Applies a real function to the spectrum: sum of f(lambda) P_lambda over
    /// the merged eigenvalue clusters (default degeneracy tolerance).
    pub fn apply_function<F: Fn(f64) -> f64>(&self, f: F) -> Result<HermitianOperator> {
        apply_function(self, f)
    }
}

impl std::ops::Deref for HermitianOperator {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.op
    }
}

/// Eigenvalue clusters and their (merged) orthogonal spectral projections,
/// ascending in eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    projections: Vec<Operator>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projections(&self) -> &[Operator] {
        &self.projections
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projections[0].dim()
    }

    /// Sum of lambda * P_lambda.
    pub fn reconstruct(&self) -> Operator {
        let mut acc = DMatrix::zeros(self.dim(), self.dim());
        for (l, p) in self.eigenvalues.iter().zip(&self.projections) {
            acc += p.matrix() * Complex64::new(*l, 0.0);
        }
        Operator { mat: acc }
    }

    /// Structural checks: projections idempotent, mutually orthogonal,
    /// Hermitian, and resolving the identity, all within `tol` (max-entry).
    pub fn validate(&self, tol: f64) -> Result<()> {
        let dim = self.dim();
        let mut sum = Operator::zeros(dim);
        for (i, p) in self.projections.iter().enumerate() {
            if p.hermiticity_defect() > tol {
                return Err(Error::InvalidOperator(format!(
                    "projection {i} is not Hermitian"
                )));
            }
            if (&(p * p) - p).max_entry_norm() > tol {
                return Err(Error::InvalidOperator(format!(
                    "projection {i} is not idempotent"
                )));
            }
            for (j, q) in self.projections.iter().enumerate().skip(i + 1) {
                if (p * q).max_entry_norm() > tol {
                    return Err(Error::InvalidOperator(format!(
                        "projections {i} and {j} are not orthogonal"
                    )));
                }
            }
            sum = &sum + p;
        }
        if sum.max_entry_distance(&Operator::identity(dim)) > tol {
            return Err(Error::InvalidOperator(
                "projections do not resolve the identity".into(),
            ));
        }
        Ok(())
    }
}

fn try_symmetric_eigen(
    mat: DMatrix<Complex64>,
) -> Result<nalgebra::SymmetricEigen<Complex64, nalgebra::Dyn>> {
    let dim = mat.nrows();
    nalgebra::SymmetricEigen::try_new(mat, f64::EPSILON, 10_000)
        .ok_or(Error::EigensolverFailed { dim })
}

/// Raw eigenpairs of a Hermitian matrix, ascending, no degeneracy merging:
/// eigenvalue i belongs to eigenvector column i.
pub(crate) fn sorted_eigen_pairs(
    mat: &DMatrix<Complex64>,
) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = mat.nrows();
    let eig = try_symmetric_eigen(mat.clone())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("finite eigenvalues")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Spectral decomposition of a Hermitian operator. Eigenvalues within
/// `degeneracy_tol` of their neighbour are merged into one cluster whose
/// projection is the sum of the member rank-one projections; the cluster is
/// labelled by the mean of its members.
pub fn decompose(a: &HermitianOperator, degeneracy_tol: f64) -> Result<SpectralDecomposition> {
    if !(degeneracy_tol >= 0.0 && degeneracy_tol.is_finite()) {
        return Err(Error::InvalidOperator(format!(
            "degeneracy tolerance must be finite and >= 0, got {degeneracy_tol}"
        )));
    }
    let n = a.dim();
    let eig = try_symmetric_eigen(a.matrix().clone())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("finite eigenvalues")
    });

    let mut eigenvalues = Vec::new();
    let mut projections = Vec::new();
    let mut k = 0;
    while k < n {
        // Grow the cluster while consecutive gaps stay within tolerance.
        let mut members = vec![order[k]];
        while k + 1 < n
            && eig.eigenvalues[order[k + 1]] - eig.eigenvalues[order[k]] <= degeneracy_tol
        {
            k += 1;
            members.push(order[k]);
        }
        k += 1;

        let mut proj = DMatrix::zeros(n, n);
        for &idx in &members {
            let v = eig.eigenvectors.column(idx).clone_owned();
            proj += &v * v.adjoint();
        }
        // Numerical hermitization; the formula is Hermitian up to roundoff.
        let proj = (&proj + proj.adjoint()) * Complex64::new(0.5, 0.0);
        let mean = members.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / members.len() as f64;
        eigenvalues.push(mean);
        projections.push(Operator { mat: proj });
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        projections,
    })
}

/// f applied through the spectral decomposition (default degeneracy
/// tolerance). Fails if f is non-finite at some eigenvalue.
pub fn apply_function<F: Fn(f64) -> f64>(
    a: &HermitianOperator,
    f: F,
) -> Result<HermitianOperator> {
    let dec = decompose(a, DEFAULT_DEGENERACY_TOL)?;
    let mut acc = DMatrix::zeros(a.dim(), a.dim());
    for (l, p) in dec.eigenvalues().iter().zip(dec.projections()) {
        let fl = f(*l);
        if !fl.is_finite() {
            return Err(Error::NonFiniteFunctionValue { at: *l });
        }
        acc += p.matrix() * Complex64::new(fl, 0.0);
    }
    Ok(HermitianOperator::symmetrized(&Operator { mat: acc }))
}

/// Hilbert-Schmidt norm: sqrt(Tr B^* B) = Frobenius norm of the entries.
pub fn hs_norm(b: &Operator) -> f64 {
    b.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Trace pairing Tr(T A), computed without forming the product matrix.
pub fn trace_pairing(t: &Operator, a: &Operator) -> Result<Complex64> {
    if t.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: t.dim(),
            right: a.dim(),
        });
    }
    let n = t.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += t.entry(i, j) * a.entry(j, i);
        }
    }
    Ok(acc)
}

/// A positive semidefinite Hermitian operator of unit trace.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    herm: HermitianOperator,
    eigenvalues: Vec<f64>,
}

impl DensityOperator {
    /// Validates hermiticity, positivity within [`DENSITY_PSD_TOL`], and unit
    /// trace within [`DENSITY_TRACE_TOL`].
    pub fn new(op: Operator) -> Result<Self> {
        let herm = HermitianOperator::new(op)?;
        let tr = herm.trace();
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL || tr.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidDensity(format!(
                "trace is {} + {}i, expected 1",
                tr.re, tr.im
            )));
        }
        let eigenvalues = herm.eigenvalues()?;
        if let Some(min) = eigenvalues.first() {
            if *min < -DENSITY_PSD_TOL {
                return Err(Error::InvalidDensity(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { herm, eigenvalues })
    }

    /// Rank-one density |v><v| / <v|v>.
    pub fn from_pure(v: &DVector<Complex64>) -> Result<Self> {
        let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(Error::InvalidDensity("state vector has invalid norm".into()));
        }
        let mat = (v * v.adjoint()) / Complex64::new(norm_sqr, 0.0);
        Self::new(Operator::from_matrix(mat)?)
    }

    /// |e_index><e_index| in the standard basis.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidDensity(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self::from_pure(&v)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let mat = DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0);
        Self::new(Operator::from_matrix(mat)?)
    }

    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.herm
    }

    /// Ascending eigenvalues, cached at construction.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Operator square root; eigenvalues in [-PSD tolerance, 0) are clipped
    /// to zero before the root is taken.
    pub fn sqrt(&self) -> Result<HermitianOperator> {
        self.herm.apply_function(|l| l.max(0.0).sqrt())
    }
}

impl std::ops::Deref for DensityOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.herm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        let m = DMatrix::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(Operator::from_matrix(m).is_err());
        let m = DMatrix::from_row_slice(1, 1, &[c(f64::NAN, 0.0)]);
        assert!(Operator::from_matrix(m).is_err());
    }

    #[test]
    fn rejects_dimension_over_cap() {
        let m: DMatrix<C> = DMatrix::zeros(MAX_OPERATOR_DIM + 1, MAX_OPERATOR_DIM + 1);
        assert!(matches!(
            Operator::from_matrix(m),
            Err(Error::DimensionCap(_))
        ));
    }

    #[test]
    fn hermitian_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.3, 0.0), c(2.0, 0.0)]);
        let op = Operator::from_matrix(m).unwrap();
        assert!(matches!(
            HermitianOperator::new(op),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn diagonal_decomposition_is_exact() {
        let a = HermitianOperator::from_diagonal(&[3.0, -1.0, 3.0]);
        let dec = a.decompose(1e-10).unwrap();
        assert_eq!(dec.eigenvalues(), &[-1.0, 3.0]);
        dec.validate(1e-12).unwrap();
        assert!(dec.reconstruct().max_entry_distance(&a) < 1e-12);
    }

    #[test]
    fn degeneracy_merging_follows_tolerance() {
        let a = HermitianOperator::from_diagonal(&[0.0, 1e-9, 1.0]);
        assert_eq!(a.decompose(1e-8).unwrap().len(), 2);
        assert_eq!(a.decompose(1e-12).unwrap().len(), 3);
    }

    #[test]
    fn apply_function_identity_and_square() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)]);
        let a = HermitianOperator::new(Operator::from_matrix(m).unwrap()).unwrap();
        let id = a.apply_function(|x| x).unwrap();
        assert!(id.max_entry_distance(&a) < 1e-12);
        let sq = a.apply_function(|x| x * x).unwrap();
        assert!(sq.max_entry_distance(&a.pow(2)) < 1e-12);
    }

    #[test]
    fn apply_function_rejects_non_finite_values() {
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let err = a.apply_function(|x| 1.0 / x);
        assert!(matches!(err, Err(Error::NonFiniteFunctionValue { .. })));
    }

    #[test]
    fn hs_norm_matches_frobenius() {
        let m = DMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 4.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let b = Operator::from_matrix(m).unwrap();
        assert_relative_eq!(hs_norm(&b), 5.0, max_relative = 1e-14);
    }

    #[test]
    fn trace_pairing_matches_product_trace() {
        let t = Operator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)],
        ))
        .unwrap();
        let a = Operator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(-1.0, 0.0)],
        ))
        .unwrap();
        let direct = trace_pairing(&t, &a).unwrap();
        let via_product = (&t * &a).trace();
        assert!((direct - via_product).norm() < 1e-14);
    }

    #[test]
    fn trace_pairing_rejects_dimension_mismatch() {
        let t = Operator::identity(2);
        let a = Operator::identity(3);
        assert!(matches!(
            trace_pairing(&t, &a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_validation() {
        // Valid qubit state.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        let rho = DensityOperator::new(Operator::from_matrix(m).unwrap()).unwrap();
        let root = rho.sqrt().unwrap();
        assert!((&root.pow(2) - rho.as_operator()).max_entry_norm() < 1e-12);

        // Wrong trace.
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(DensityOperator::new(Operator::from_matrix(m).unwrap()).is_err());

        // Not PSD.
        let m = DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityOperator::new(Operator::from_matrix(m).unwrap()).is_err());
    }

    #[test]
    fn basis_state_and_mixed() {
        let rho = DensityOperator::basis_state(4, 0).unwrap();
        assert_relative_eq!(rho.entry(0, 0).re, 1.0, max_relative = 1e-15);
        let mixed = DensityOperator::maximally_mixed(4).unwrap();
        assert_relative_eq!(mixed.trace().re, 1.0, max_relative = 1e-14);
    }
}
