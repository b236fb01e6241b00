//! Truncated Fock-space construction of the covariant phase-space
//! observable: ladder and quadrature operators, Weyl displacement operators,
//! a grid-quadrature POVM builder, Cartesian marginals with their
//! convolution structure, and the closed-form marginal moment operators.
//!
//! Everything lives in the number basis of a fixed dimension N. Weyl
//! operators are matrix exponentials of `i(pQ - qP)` computed through an
//! exact spectral factorization (see [`WeylFactors`]), so they are unitary
//! to machine precision at every (q, p); faithfulness to the untruncated
//! displacement degrades once `(q^2 + p^2) / 2` approaches N.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{GriddedDensity, ProbabilityMeasure, ScalarMeasure};
use crate::operator::{
    sorted_eigen_pairs, trace_pairing, DensityOperator, HermitianOperator, Operator,
    MAX_OPERATOR_DIM,
};
use crate::semispectral::{smear, spectral_measure_of, state_distribution, DiscretizedPOVM};
use crate::util::binomial;

/// Tensor Gauss-Legendre order used per grid cell when none is requested.
pub const DEFAULT_QUADRATURE_ORDER: usize = 3;

/// Cap on `cells * dim^2` so one POVM cannot silently allocate gigabytes.
const MAX_POVM_ENTRIES: usize = 1 << 27;

/// Eigenvalue cutoff below which a state's spectral component is dropped
/// from the rank decomposition used by the POVM builder.
const STATE_RANK_CUTOFF: f64 = 1e-14;

fn require_fock_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::FockDimensionTooSmall(dim));
    }
    Ok(())
}

/// Lowering operator on the truncated number basis: `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(dim: usize) -> Result<Operator> {
    require_fock_dim(dim)?;
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Operator::from_matrix(m)
}

/// Position quadrature `Q = (a + a^dag) / sqrt(2)`.
pub fn position_operator(dim: usize) -> Result<HermitianOperator> {
    let a = annihilation(dim)?;
    let m = (a.matrix() + a.matrix().adjoint()) / Complex64::new(2f64.sqrt(), 0.0);
    HermitianOperator::new(Operator::from_matrix(m)?)
}

/// Momentum quadrature `P = (a - a^dag) / (i sqrt(2))`.
pub fn momentum_operator(dim: usize) -> Result<HermitianOperator> {
    let a = annihilation(dim)?;
    let m = (a.matrix() - a.matrix().adjoint()) / Complex64::new(0.0, 2f64.sqrt());
    HermitianOperator::new(Operator::from_matrix(m)?)
}

/// Discrete harmonic-oscillator Fourier operator `diag(i^n)`. Conjugation
/// sends Q to P and P to -Q, exactly, at every truncation.
pub fn fourier_operator(dim: usize) -> Result<Operator> {
    require_fock_dim(dim)?;
    let mut m = DMatrix::zeros(dim, dim);
    let i = Complex64::new(0.0, 1.0);
    let mut phase = Complex64::new(1.0, 0.0);
    for n in 0..dim {
        m[(n, n)] = phase;
        phase *= i;
    }
    Operator::from_matrix(m)
}

/// Number-basis amplitudes of the untruncated coherent state at
/// `alpha = (q + ip)/sqrt(2)`, cut at `dim` (norm < 1). Oracle helper for
/// displacement tests.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        v[n] = c;
        c *= alpha / Complex64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    v
}

/// Factorized form of every Weyl operator at one truncation.
///
/// `i(pQ - qP)` is a phase conjugation of `irQ`: with `r = sqrt(q^2 + p^2)`,
/// `alpha = arg(p + iq)` and `U = diag(e^{-i n alpha})`,
/// `pQ - qP = r * U Q U^dag`. Diagonalizing Q once as `V diag(lambda) V^dag`
/// gives `W(q, p) = U V diag(e^{i r lambda}) V^dag U^dag` for every (q, p):
/// exactly unitary, with only diagonal phases and two fixed matrix products
/// left per evaluation.
pub struct WeylFactors {
    lambda: Vec<f64>,
    v: DMatrix<Complex64>,
}

impl WeylFactors {
    pub fn new(dim: usize) -> Result<Self> {
        let q = position_operator(dim)?;
        let (lambda, v) = sorted_eigen_pairs(q.matrix())?;
        Ok(Self { lambda, v })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn phases(q: f64, p: f64) -> (f64, f64) {
        ((q * q + p * p).sqrt(), f64::atan2(q, p))
    }

    /// `W(q, p) x` in O(dim^2): two diagonal phase passes around a
    /// diagonal-phase conjugation in Q's eigenbasis.
    pub fn apply(&self, q: f64, p: f64, x: &DVector<Complex64>) -> DVector<Complex64> {
        let (r, alpha) = Self::phases(q, p);
        let n = self.dim();
        let mut y = DVector::zeros(n);
        for k in 0..n {
            y[k] = x[k] * Complex64::from_polar(1.0, alpha * k as f64);
        }
        let mut z = self.v.adjoint() * y;
        for k in 0..n {
            z[k] *= Complex64::from_polar(1.0, r * self.lambda[k]);
        }
        let u = &self.v * z;
        let mut out = DVector::zeros(n);
        for k in 0..n {
            out[k] = u[k] * Complex64::from_polar(1.0, -alpha * k as f64);
        }
        out
    }

    /// The full Weyl matrix `exp(i(pQ - qP))`.
    pub fn weyl(&self, q: f64, p: f64) -> Operator {
        let (r, alpha) = Self::phases(q, p);
        let n = self.dim();
        let mut core = self.v.clone();
        // core = V e^{i r Lambda} V^dag, built by scaling V's columns.
        for k in 0..n {
            let ph = Complex64::from_polar(1.0, r * self.lambda[k]);
            for row in 0..n {
                core[(row, k)] *= ph;
            }
        }
        let mut m = core * self.v.adjoint();
        for row in 0..n {
            for col in 0..n {
                m[(row, col)] *= Complex64::from_polar(1.0, alpha * (col as f64 - row as f64));
            }
        }
        Operator::from_matrix(m).expect("square by construction")
    }
}

/// One-shot Weyl operator (spectral factors rebuilt each call; batch callers
/// should hold a [`WeylFactors`]).
pub fn weyl(q: f64, p: f64, dim: usize) -> Result<Operator> {
    Ok(WeylFactors::new(dim)?.weyl(q, p))
}

/// Uniform m x m grid over the square `[-L, L]^2` in phase space.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhaseSpaceGrid {
    half_width: f64,
    points_per_axis: usize,
}

impl PhaseSpaceGrid {
    pub fn new(half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be finite and positive, got {half_width}"
            )));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points per axis, got {points_per_axis}"
            )));
        }
        Ok(Self {
            half_width,
            points_per_axis,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_width() * self.cell_width()
    }

    /// The m+1 grid lines of one axis, from -L to L.
    pub fn edges(&self) -> Vec<f64> {
        let h = self.cell_width();
        (0..=self.points_per_axis)
            .map(|i| -self.half_width + i as f64 * h)
            .collect()
    }

    /// The m cell centers of one axis.
    pub fn centers(&self) -> Vec<f64> {
        let h = self.cell_width();
        (0..self.points_per_axis)
            .map(|i| -self.half_width + (i as f64 + 0.5) * h)
            .collect()
    }

    pub fn cell_center(&self, iq: usize, ip: usize) -> (f64, f64) {
        let h = self.cell_width();
        (
            -self.half_width + (iq as f64 + 0.5) * h,
            -self.half_width + (ip as f64 + 0.5) * h,
        )
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(order: usize) -> Result<(&'static [f64], &'static [f64])> {
    // Nodes for orders 4 and 5 follow the closed forms
    // sqrt(3/7 -+ 2/7 sqrt(6/5)) and 1/3 sqrt(5 -+ 2 sqrt(10/7)).
    const N1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const N2: [f64; 2] = [-0.5773502691896257, 0.5773502691896257];
    const W2: [f64; 2] = [1.0, 1.0];
    const N3: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
    const W3: [f64; 3] = [
        0.5555555555555556,
        0.8888888888888888,
        0.5555555555555556,
    ];
    const N4: [f64; 4] = [
        -0.8611363115940526,
        -0.3399810435848563,
        0.3399810435848563,
        0.8611363115940526,
    ];
    const W4: [f64; 4] = [
        0.3478548451374538,
        0.6521451548625461,
        0.6521451548625461,
        0.3478548451374538,
    ];
    const N5: [f64; 5] = [
        -0.9061798459386640,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.9061798459386640,
    ];
    const W5: [f64; 5] = [
        0.2369268850561891,
        0.4786286704993665,
        0.5688888888888889,
        0.4786286704993665,
        0.2369268850561891,
    ];
    match order {
        1 => Ok((&N1, &W1)),
        2 => Ok((&N2, &W2)),
        3 => Ok((&N3, &W3)),
        4 => Ok((&N4, &W4)),
        5 => Ok((&N5, &W5)),
        other => Err(Error::UnsupportedQuadratureOrder(other)),
    }
}

/// Axis selector for Cartesian marginals: X bins the first (q) coordinate,
/// Y the second (p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
        }
    }
}

/// The grid-discretized covariant phase-space observable of a seed state:
/// one effect per cell, row-major `iq * m + ip`.
pub struct PhaseSpacePOVM {
    grid: PhaseSpaceGrid,
    dim: usize,
    effects: Vec<Operator>,
}

impl PhaseSpacePOVM {
    /// Reassembles a grid observable from stored parts (the deserialization
    /// path). Checks the cell count and effect dimensions, not positivity;
    /// callers loading untrusted data can run their own PSD validation.
    pub fn from_parts(
        grid: PhaseSpaceGrid,
        dim: usize,
        effects: Vec<Operator>,
    ) -> Result<Self> {
        require_fock_dim(dim)?;
        let m = grid.points_per_axis();
        if effects.len() != m * m {
            return Err(Error::InvalidGrid(format!(
                "{} effects for an {m} x {m} grid",
                effects.len()
            )));
        }
        for e in &effects {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: e.dim(),
                    right: dim,
                });
            }
        }
        Ok(Self { grid, dim, effects })
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn effect(&self, iq: usize, ip: usize) -> &Operator {
        &self.effects[iq * self.grid.points_per_axis() + ip]
    }

    pub fn sum_effects(&self) -> Operator {
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        for e in &self.effects {
            acc += e.matrix();
        }
        Operator::from_matrix(acc).expect("square")
    }

    /// `Tr(sum of effects) / N`: the fraction of the truncated identity the
    /// grid captured. Approaches 1 as L, m, N grow; the deficiency is
    /// reported, never renormalized away.
    pub fn captured_mass(&self) -> f64 {
        let mut tr = 0.0;
        for e in &self.effects {
            tr += e.trace().re;
        }
        tr / self.dim as f64
    }

    /// Total outcome probability the grid captures in the state `rho`.
    pub fn captured_mass_in_state(&self, rho: &DensityOperator) -> Result<f64> {
        Ok(trace_pairing(rho.as_operator(), &self.sum_effects())?.re)
    }

    /// Per-cell outcome probabilities in the state `rho`, row-major.
    pub fn cell_probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: rho.dim(),
                right: self.dim,
            });
        }
        self.effects
            .iter()
            .map(|e| Ok(trace_pairing(rho.as_operator(), e)?.re))
            .collect()
    }

    /// Cartesian marginal along the chosen axis: strip sums of the effect
    /// grid on the interior bins, with the identity deficiency split evenly
    /// between the two outer bins so normalization is exact.
    pub fn marginal(&self, axis: Axis) -> Result<DiscretizedPOVM> {
        let m = self.grid.points_per_axis();
        let mut strips = vec![DMatrix::zeros(self.dim, self.dim); m];
        for iq in 0..m {
            for ip in 0..m {
                let strip = match axis {
                    Axis::X => iq,
                    Axis::Y => ip,
                };
                strips[strip] += self.effects[iq * m + ip].matrix();
            }
        }
        let mut total = DMatrix::zeros(self.dim, self.dim);
        for s in &strips {
            total += s;
        }
        let deficiency = DMatrix::identity(self.dim, self.dim) - total;
        let half_deficiency = deficiency * Complex64::new(0.5, 0.0);

        let l = self.grid.half_width();
        let mut effects = Vec::with_capacity(m + 2);
        effects.push(Operator::from_matrix(half_deficiency.clone())?);
        for s in strips {
            effects.push(Operator::from_matrix(s)?);
        }
        effects.push(Operator::from_matrix(half_deficiency)?);

        let mut reps = Vec::with_capacity(m + 2);
        reps.push(-l);
        reps.extend(self.grid.centers());
        reps.push(l);

        DiscretizedPOVM::new(self.grid.edges(), effects, reps)
    }

    pub fn marginal_x(&self) -> Result<DiscretizedPOVM> {
        self.marginal(Axis::X)
    }

    pub fn marginal_y(&self) -> Result<DiscretizedPOVM> {
        self.marginal(Axis::Y)
    }
}

/// Builds the phase-space POVM of the seed state `t` by per-cell tensor
/// Gauss-Legendre quadrature of `(1/2pi) W(q,p) t W(q,p)^dag`.
///
/// The builder runs strictly sequentially in a fixed cell-major order, so
/// repeated runs are bit-identical. Cost is
/// `O(cells * order^2 * rank(t) * dim^2)`.
pub fn build_phase_space_povm(
    t: &DensityOperator,
    grid: &PhaseSpaceGrid,
    quad_order: usize,
) -> Result<PhaseSpacePOVM> {
    let dim = t.dim();
    require_fock_dim(dim)?;
    let m = grid.points_per_axis();
    let (nodes, weights) = gauss_legendre(quad_order)?;

    if m * m * dim * dim > MAX_POVM_ENTRIES {
        return Err(Error::ResultTooLarge {
            what: "phase-space POVM entries",
            needed: m * m * dim * dim,
            cap: MAX_POVM_ENTRIES,
        });
    }
    if grid.cell_area() > 1.0 {
        log::warn!(
            "phase-space cell area {:.3} exceeds 1; per-cell quadrature may be coarse",
            grid.cell_area()
        );
    }

    // Rank decomposition of the seed state: t = sum_r w_r chi_r chi_r^dag.
    let (t_eigs, t_vecs) = sorted_eigen_pairs(t.matrix())?;
    let components: Vec<(f64, DVector<Complex64>)> = t_eigs
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > STATE_RANK_CUTOFF)
        .map(|(i, &w)| (w, t_vecs.column(i).clone_owned()))
        .collect();

    // Integrate in a padded Fock space so the corner displacement stays
    // faithful, then compress each effect to the leading dim x dim block.
    // A displaced component occupying levels up to n_top spreads to about
    // n_top + |alpha|^2 + 2 sqrt(n_top |alpha|^2); six standard deviations
    // of headroom keep the lost mass below ~1e-9.
    let mut n_top = 0usize;
    for (w, chi) in &components {
        for i in (0..dim).rev() {
            if chi[i].norm_sqr() * w > 1e-16 {
                n_top = n_top.max(i);
                break;
            }
        }
    }
    let corner = grid.half_width() * grid.half_width();
    let center = n_top as f64 + corner + 2.0 * (corner * n_top as f64).sqrt();
    let needed = (center + 6.0 * center.sqrt() + 10.0).ceil() as usize;
    let build_dim = needed.clamp(dim, MAX_OPERATOR_DIM);
    if needed > MAX_OPERATOR_DIM {
        log::warn!(
            "corner displacement |alpha|^2 = {corner:.1} wants an internal dimension of \
             {needed} but the cap is {MAX_OPERATOR_DIM}; effects near the grid edge are \
             truncation-limited"
        );
    }

    let factors = WeylFactors::new(build_dim)?;
    let padded: Vec<(f64, DVector<Complex64>)> = components
        .into_iter()
        .map(|(w, chi)| {
            let mut big = DVector::zeros(build_dim);
            big.rows_mut(0, dim).copy_from(&chi);
            (w, big)
        })
        .collect();

    let h = grid.cell_width();
    let half = 0.5 * h;
    let mut effects = Vec::with_capacity(m * m);
    for iq in 0..m {
        for ip in 0..m {
            let (qc, pc) = grid.cell_center(iq, ip);
            let mut acc: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
            for (u, &xi_q) in nodes.iter().enumerate() {
                let q = qc + half * xi_q;
                for (v, &xi_p) in nodes.iter().enumerate() {
                    let p = pc + half * xi_p;
                    let scale = weights[u] * weights[v] * half * half / (2.0 * PI);
                    for (w_r, chi) in &padded {
                        let moved = factors.apply(q, p, chi);
                        let head = moved.rows(0, dim).clone_owned();
                        acc.gerc(
                            Complex64::new(scale * w_r, 0.0),
                            &head,
                            &head,
                            Complex64::new(1.0, 0.0),
                        );
                    }
                }
            }
            let sym = (&acc + acc.adjoint()) * Complex64::new(0.5, 0.0);
            effects.push(Operator::from_matrix(sym)?);
        }
    }

    Ok(PhaseSpacePOVM {
        grid: grid.clone(),
        dim,
        effects,
    })
}

/// Quadrature operator for an axis: Q for X, P for Y.
pub fn axis_operator(axis: Axis, dim: usize) -> Result<HermitianOperator> {
    match axis {
        Axis::X => position_operator(dim),
        Axis::Y => momentum_operator(dim),
    }
}

/// Per-bin comparison between a Cartesian marginal of the phase-space
/// observable and the smearing of the sharp quadrature observable predicted
/// by the convolution structure.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MarginalCheck {
    pub axis: Axis,
    /// Size of the leading block the operator distances are measured on.
    pub leading_block: usize,
    pub edges: Vec<f64>,
    /// Max-entry distance between marginal and smeared effect, per bin, on
    /// the leading block.
    pub per_bin_distance: Vec<f64>,
    pub max_distance: f64,
    /// |Tr[t (marginal effect - smeared effect)]| per bin: how far the two
    /// outcome distributions disagree in the seed state itself.
    pub per_bin_mass_delta: Vec<f64>,
    pub max_mass_delta: f64,
}

/// Projects the atoms of a probability measure onto the uniform cells of
/// `edges` as a piecewise-constant density, splitting each atom between the
/// two cells whose centers bracket it so mass and mean are preserved.
/// Mass outside the edge span is folded into the end cells. The atomic
/// spectrum of a truncated quadrature is a quadrature rule, not a point set
/// the physical distribution charges, so comparisons at a grid's resolution
/// use this representation.
fn at_bin_resolution(mu: &ProbabilityMeasure, edges: &[f64]) -> Result<ProbabilityMeasure> {
    let cells = edges.len() - 1;
    let step = (edges[cells] - edges[0]) / cells as f64;
    let mut masses = vec![0.0; cells];
    for &(x, w) in mu.atoms() {
        // Position in units of cells, measured from the center of cell 0.
        let s = ((x - edges[0]) / step - 0.5).clamp(0.0, (cells - 1) as f64);
        let lo = s.floor();
        let frac = s - lo;
        let lo = lo as usize;
        let hi = (lo + 1).min(cells - 1);
        masses[lo] += w.re * (1.0 - frac);
        masses[hi] += w.re * frac;
    }
    let values = masses
        .into_iter()
        .map(|m| Complex64::new(m / step, 0.0))
        .collect();
    let density = GriddedDensity::new(edges[0], step, values)?;
    ProbabilityMeasure::new(ScalarMeasure::from_density(density))
}

/// Builds `marginal(E^t)` and `smear(p_t^{-A}, E^A)` on the same bins, where
/// A is the axis quadrature, and reports per-bin distances. The smearing
/// measure enters at the grid's own resolution (see [`at_bin_resolution`]):
/// its atoms sit on the quadrature lattice of the truncated A, and holding
/// bins finer than that lattice against raw atom positions would compare
/// lattice artifacts, not the convolution structure. `leading_block`
/// defaults to N/2; the top of the truncated basis never matches because the
/// builder's effects are truncation-limited there.
pub fn marginal_convolution_check(
    t: &DensityOperator,
    grid: &PhaseSpaceGrid,
    quad_order: usize,
    axis: Axis,
    leading_block: Option<usize>,
) -> Result<MarginalCheck> {
    let dim = t.dim();
    let block = leading_block.unwrap_or(dim / 2).clamp(1, dim);
    let povm = build_phase_space_povm(t, grid, quad_order)?;
    let marg = povm.marginal(axis)?;

    let a = axis_operator(axis, dim)?;
    let mu = at_bin_resolution(&state_distribution(t, &a.scale(-1.0))?, marg.edges())?;
    let e = spectral_measure_of(&a)?;
    let predicted = smear(&mu, &e, marg.edges())?;

    let mut per_bin_distance = Vec::with_capacity(marg.bins());
    let mut per_bin_mass_delta = Vec::with_capacity(marg.bins());
    for (got, want) in marg.effects().iter().zip(predicted.effects()) {
        per_bin_distance.push(got.max_entry_distance_on_block(want, block));
        let got_mass = trace_pairing(t.as_operator(), got)?.re;
        let want_mass = trace_pairing(t.as_operator(), want)?.re;
        per_bin_mass_delta.push((got_mass - want_mass).abs());
    }
    let max_distance = per_bin_distance.iter().cloned().fold(0.0, f64::max);
    let max_mass_delta = per_bin_mass_delta.iter().cloned().fold(0.0, f64::max);
    Ok(MarginalCheck {
        axis,
        leading_block: block,
        edges: marg.edges().to_vec(),
        per_bin_distance,
        max_distance,
        per_bin_mass_delta,
        max_mass_delta,
    })
}

/// Closed-form moment operator of the Cartesian marginal:
/// `sum_n C(k,n) (-1)^{k-n} Tr[A^{k-n} t] A^n` with A the axis quadrature.
/// The scalar factors are the moments of the reflected outcome distribution
/// `p_t^{-A}`, so this is the binomial moment formula of the smearing with
/// no POVM ever built.
pub fn marginal_moment_operator(
    t: &DensityOperator,
    k: u32,
    axis: Axis,
) -> Result<Operator> {
    let dim = t.dim();
    let a = axis_operator(axis, dim)?;
    if t.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: t.dim(),
            right: a.dim(),
        });
    }
    // Moments of p_t^{-A}: m_j = (-1)^j Tr[A^j t], read off one power table.
    let mut pow = Operator::identity(dim);
    let mut trace_moments = Vec::with_capacity(k as usize + 1);
    let mut powers = Vec::with_capacity(k as usize + 1);
    for j in 0..=k {
        trace_moments.push(trace_pairing(t.as_operator(), &pow)?.re);
        powers.push(pow.clone());
        if j < k {
            pow = &pow * a.as_operator();
        }
    }
    let mut acc = DMatrix::zeros(dim, dim);
    for n in 0..=k {
        let j = (k - n) as usize;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = binomial(k, n) * sign * trace_moments[j];
        acc += powers[n as usize].matrix() * Complex64::new(coeff, 0.0);
    }
    let sym = (&acc + acc.adjoint()) * Complex64::new(0.5, 0.0);
    Operator::from_matrix(sym)
}
