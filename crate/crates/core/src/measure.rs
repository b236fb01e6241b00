//! Complex scalar measures on the real line, represented as finitely many
//! atoms plus an optional piecewise-constant density on a uniform grid.
//!
//! Densities are treated as exactly piecewise constant and integrated by the
//! midpoint rule, so a density cell behaves like an atom of mass
//! `step * value` sitting at the cell midpoint. Convolution, moments, and
//! integration are all consistent with that convention, which keeps the
//! binomial moment identity for convolutions exact up to roundoff.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::util::binomial;

/// Atom locations closer than this are merged by weight addition.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// A piecewise-constant complex density: cell `j` covers
/// `[origin + j*step, origin + (j+1)*step)` and carries the constant value
/// `values[j]` (a density, not a mass; the cell mass is `step * values[j]`).
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity {
    origin: f64,
    step: f64,
    values: Vec<Complex64>,
}

impl GriddedDensity {
    pub fn new(origin: f64, step: f64, values: Vec<Complex64>) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidMeasure("density origin must be finite".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "density step must be finite and > 0, got {step}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidMeasure("density needs at least one cell".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite density value".into()));
        }
        Ok(Self {
            origin,
            step,
            values,
        })
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        self.origin + (j as f64 + 0.5) * self.step
    }

    /// Right end of the last cell.
    pub fn end(&self) -> f64 {
        self.origin + self.len() as f64 * self.step
    }

    /// Exact mass of the intersection of the density support with `[lo, hi]`.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        if hi <= lo {
            return acc;
        }
        for (j, v) in self.values.iter().enumerate() {
            let cell_lo = self.origin + j as f64 * self.step;
            let cell_hi = cell_lo + self.step;
            let overlap = (hi.min(cell_hi) - lo.max(cell_lo)).max(0.0);
            if overlap > 0.0 {
                acc += v * Complex64::new(overlap, 0.0);
            }
        }
        acc
    }
}

/// A complex Borel measure of finite total variation: finitely many atoms
/// (locations strictly increasing) plus an optional gridded density.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMeasure {
    atoms: Vec<(f64, Complex64)>,
    density: Option<GriddedDensity>,
}

impl ScalarMeasure {
    /// Sorts the atoms, merges locations within [`ATOM_MERGE_TOL`], and
    /// validates finiteness of every weight and density value.
    pub fn new(atoms: Vec<(f64, Complex64)>, density: Option<GriddedDensity>) -> Result<Self> {
        for &(x, w) in &atoms {
            if !x.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom location {x} not finite")));
            }
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom weight at {x} not finite"
                )));
            }
        }
        Ok(Self {
            atoms: merge_atoms(atoms),
            density,
        })
    }

    pub fn from_atoms(atoms: Vec<(f64, Complex64)>) -> Result<Self> {
        Self::new(atoms, None)
    }

    pub fn from_real_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::from_atoms(
            atoms
                .iter()
                .map(|&(x, w)| (x, Complex64::new(w, 0.0)))
                .collect(),
        )
    }

    /// Unit point mass at `x`.
    pub fn delta(x: f64) -> Self {
        Self {
            atoms: vec![(x, Complex64::new(1.0, 0.0))],
            density: None,
        }
    }

    /// The zero measure.
    pub fn zero() -> Self {
        Self {
            atoms: Vec::new(),
            density: None,
        }
    }

    pub fn from_density(density: GriddedDensity) -> Self {
        Self {
            atoms: Vec::new(),
            density: Some(density),
        }
    }

    /// Normal density with the given mean and variance sampled at cell
    /// midpoints on `[lo, hi)` with the given step.
    pub fn gaussian_density(mean: f64, variance: f64, lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "variance must be positive, got {variance}"
            )));
        }
        if !(hi > lo) {
            return Err(Error::InvalidMeasure("need hi > lo".into()));
        }
        let cells = ((hi - lo) / step).round().max(1.0) as usize;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * variance).sqrt();
        let values = (0..cells)
            .map(|j| {
                let x = lo + (j as f64 + 0.5) * step;
                let z = x - mean;
                Complex64::new(norm * (-z * z / (2.0 * variance)).exp(), 0.0)
            })
            .collect();
        Ok(Self::from_density(GriddedDensity::new(lo, step, values)?))
    }

    /// Unnormalized heavy-tail density (1 + |x|)^-3 on `[-half_width, half_width)`.
    pub fn inverse_cubic_density(half_width: f64, step: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidMeasure("half_width must be positive".into()));
        }
        let cells = (2.0 * half_width / step).round().max(1.0) as usize;
        let lo = -half_width;
        let values = (0..cells)
            .map(|j| {
                let x = lo + (j as f64 + 0.5) * step;
                Complex64::new((1.0 + x.abs()).powi(-3), 0.0)
            })
            .collect();
        Ok(Self::from_density(GriddedDensity::new(lo, step, values)?))
    }

    pub fn atoms(&self) -> &[(f64, Complex64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&GriddedDensity> {
        self.density.as_ref()
    }

    /// Total mass: sum of atom weights plus the density integral.
    pub fn mass(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(_, w) in &self.atoms {
            acc += w;
        }
        if let Some(d) = &self.density {
            let mut cell_sum = Complex64::new(0.0, 0.0);
            for v in &d.values {
                cell_sum += v;
            }
            acc += cell_sum * Complex64::new(d.step, 0.0);
        }
        acc
    }

    /// Total variation norm under the piecewise-constant reading of the
    /// density: sum of |weights| plus step * sum of |values|.
    pub fn total_variation(&self) -> f64 {
        let mut acc: f64 = self.atoms.iter().map(|(_, w)| w.norm()).sum();
        if let Some(d) = &self.density {
            acc += d.step * d.values.iter().map(|v| v.norm()).sum::<f64>();
        }
        acc
    }

    /// Radius of the support: largest |x| over atom locations and grid ends.
    pub fn support_radius(&self) -> f64 {
        let mut r = 0.0f64;
        for &(x, _) in &self.atoms {
            r = r.max(x.abs());
        }
        if let Some(d) = &self.density {
            r = r.max(d.origin.abs()).max(d.end().abs());
        }
        r
    }

    /// Multiplies every weight and density value by `s`.
    pub fn scaled(&self, s: Complex64) -> ScalarMeasure {
        ScalarMeasure {
            atoms: self.atoms.iter().map(|&(x, w)| (x, w * s)).collect(),
            density: self.density.as_ref().map(|d| GriddedDensity {
                origin: d.origin,
                step: d.step,
                values: d.values.iter().map(|v| v * s).collect(),
            }),
        }
    }

    /// All mass points in the midpoint reading: atoms, then density cells as
    /// (midpoint, step * value), sorted by location.
    fn mass_points(&self) -> Vec<(f64, Complex64)> {
        let mut pts: Vec<(f64, Complex64)> = self.atoms.clone();
        if let Some(d) = &self.density {
            let h = Complex64::new(d.step, 0.0);
            pts.extend((0..d.len()).map(|j| (d.midpoint(j), d.values[j] * h)));
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite locations"));
        pts
    }
}

fn merge_atoms(mut atoms: Vec<(f64, Complex64)>) -> Vec<(f64, Complex64)> {
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite locations"));
    let mut out: Vec<(f64, Complex64)> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match out.last_mut() {
            Some((x0, w0)) if x - *x0 <= ATOM_MERGE_TOL => *w0 += w,
            _ => out.push((x, w)),
        }
    }
    out
}

/// A [`ScalarMeasure`] with real nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMeasure {
    inner: ScalarMeasure,
}

/// Allowed deviation of a probability measure's mass from one.
pub const PROBABILITY_MASS_TOL: f64 = 1e-12;

impl ProbabilityMeasure {
    pub fn new(m: ScalarMeasure) -> Result<Self> {
        check_real_nonnegative(&m)?;
        let mass = m.mass();
        if (mass.re - 1.0).abs() > PROBABILITY_MASS_TOL {
            return Err(Error::InvalidMeasure(format!(
                "total mass {} differs from 1 by more than {PROBABILITY_MASS_TOL:e}",
                mass.re
            )));
        }
        Ok(Self { inner: m })
    }

    /// Rescales a real nonnegative measure of positive mass to unit mass.
    pub fn normalized(m: ScalarMeasure) -> Result<Self> {
        check_real_nonnegative(&m)?;
        let mass = m.mass().re;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "cannot normalize measure of mass {mass}"
            )));
        }
        Ok(Self {
            inner: m.scaled(Complex64::new(1.0 / mass, 0.0)),
        })
    }

    pub fn as_scalar(&self) -> &ScalarMeasure {
        &self.inner
    }

    pub fn into_scalar(self) -> ScalarMeasure {
        self.inner
    }
}

impl std::ops::Deref for ProbabilityMeasure {
    type Target = ScalarMeasure;
    fn deref(&self) -> &ScalarMeasure {
        &self.inner
    }
}

fn check_real_nonnegative(m: &ScalarMeasure) -> Result<()> {
    for &(x, w) in m.atoms() {
        if w.im != 0.0 || w.re < 0.0 {
            return Err(Error::InvalidMeasure(format!(
                "weight at {x} is not real nonnegative"
            )));
        }
    }
    if let Some(d) = m.density() {
        if d.values().iter().any(|v| v.im != 0.0 || v.re < 0.0) {
            return Err(Error::InvalidMeasure(
                "density value is not real nonnegative".into(),
            ));
        }
    }
    Ok(())
}

/// Size caps for convolution results.
#[derive(Debug, Clone, Copy)]
pub struct ConvolveLimits {
    pub max_atoms: usize,
    pub max_cells: usize,
}

impl Default for ConvolveLimits {
    fn default() -> Self {
        Self {
            max_atoms: 1 << 20,
            max_cells: 1 << 23,
        }
    }
}

/// Convolution with default size caps. See [`convolve_with`].
pub fn convolve(mu: &ScalarMeasure, nu: &ScalarMeasure) -> Result<ScalarMeasure> {
    convolve_with(mu, nu, &ConvolveLimits::default())
}

/// Convolution of two scalar measures.
///
/// Atom x atom terms become atoms at pairwise location sums (merged within
/// [`ATOM_MERGE_TOL`]). Atom x density terms are shifted scaled copies of the
/// density. Density x density becomes the discrete convolution of cell values
/// scaled by the step, placed so that cell midpoints are exactly the pairwise
/// midpoint sums. All density contributions must share one step and sit on a
/// common lattice (no resampling is ever performed); otherwise this fails
/// with [`Error::GridIncompatible`].
///
/// The midpoint placement implies an alignment rule for mixed inputs: when a
/// measure carries both atoms and a density and the other factor also has a
/// density, its atoms must sit on its own density's midpoint lattice
/// (origin + step/2, mod step), or the shifted copies land half a cell off
/// the density x density lattice and the convolution is rejected.
pub fn convolve_with(
    mu: &ScalarMeasure,
    nu: &ScalarMeasure,
    limits: &ConvolveLimits,
) -> Result<ScalarMeasure> {
    if let (Some(dm), Some(dn)) = (mu.density(), nu.density()) {
        if dm.step() != dn.step() {
            return Err(Error::GridIncompatible(format!(
                "steps {} and {} differ",
                dm.step(),
                dn.step()
            )));
        }
    }

    // Atom x atom.
    let pair_count = mu.atoms().len().saturating_mul(nu.atoms().len());
    if pair_count > limits.max_atoms {
        return Err(Error::ResultTooLarge {
            what: "atom pairs",
            needed: pair_count,
            cap: limits.max_atoms,
        });
    }
    let mut atoms = Vec::with_capacity(pair_count);
    for &(x, w) in mu.atoms() {
        for &(y, v) in nu.atoms() {
            atoms.push((x + y, w * v));
        }
    }

    // Collect density contributions as (origin, values) on a shared step.
    let mut contributions: Vec<(f64, Vec<Complex64>)> = Vec::new();
    let mut step = None;
    if let Some(d) = nu.density() {
        step = Some(d.step());
        for &(x, w) in mu.atoms() {
            contributions.push((d.origin() + x, d.values().iter().map(|v| v * w).collect()));
        }
    }
    if let Some(d) = mu.density() {
        step = Some(d.step());
        for &(y, v) in nu.atoms() {
            contributions.push((d.origin() + y, d.values().iter().map(|u| u * v).collect()));
        }
    }
    if let (Some(dm), Some(dn)) = (mu.density(), nu.density()) {
        let h = dm.step();
        let out_len = dm.len() + dn.len() - 1;
        if out_len > limits.max_cells {
            return Err(Error::ResultTooLarge {
                what: "density cells",
                needed: out_len,
                cap: limits.max_cells,
            });
        }
        let mut vals = vec![Complex64::new(0.0, 0.0); out_len];
        for (i, u) in dm.values().iter().enumerate() {
            for (j, v) in dn.values().iter().enumerate() {
                vals[i + j] += u * v;
            }
        }
        for v in &mut vals {
            *v *= Complex64::new(h, 0.0);
        }
        // Shift by half a cell so midpoints add exactly:
        // midpoint_mu(i) + midpoint_nu(j) = origin + (i + j + 0.5) * h.
        contributions.push((dm.origin() + dn.origin() + 0.5 * h, vals));
    }

    let density = if contributions.is_empty() {
        None
    } else {
        let h = step.expect("contributions imply a density step");
        Some(accumulate_contributions(contributions, h, limits)?)
    };

    ScalarMeasure::new(atoms, density)
}

/// Sums shifted copies of densities on the lattice `base + k*h`. Every copy's
/// origin must land on that lattice within 1e-9 cells; a misaligned shift
/// cannot be represented without resampling and is rejected.
fn accumulate_contributions(
    contributions: Vec<(f64, Vec<Complex64>)>,
    h: f64,
    limits: &ConvolveLimits,
) -> Result<GriddedDensity> {
    let base = contributions
        .iter()
        .map(|(o, _)| *o)
        .fold(f64::INFINITY, f64::min);
    let mut offsets = Vec::with_capacity(contributions.len());
    let mut total_len = 0usize;
    for (o, vals) in &contributions {
        let raw = (o - base) / h;
        let k = raw.round();
        if (raw - k).abs() > 1e-9 {
            return Err(Error::GridIncompatible(format!(
                "density shift of {raw:.12} cells is not on the common lattice"
            )));
        }
        let k = k as usize;
        offsets.push(k);
        total_len = total_len.max(k + vals.len());
    }
    if total_len > limits.max_cells {
        return Err(Error::ResultTooLarge {
            what: "density cells",
            needed: total_len,
            cap: limits.max_cells,
        });
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); total_len];
    for ((_, vals), k) in contributions.iter().zip(offsets) {
        for (j, v) in vals.iter().enumerate() {
            acc[k + j] += v;
        }
    }
    GriddedDensity::new(base, h, acc)
}

/// Convergence verdict of a windowed moment computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converged,
    Diverging,
    Undetermined,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Converged => write!(f, "converged"),
            Verdict::Diverging => write!(f, "diverging"),
            Verdict::Undetermined => write!(f, "undetermined"),
        }
    }
}

/// Thresholds for the verdict heuristics. The defaults are deliberately
/// strict; pick `converge_rel` to match the tail scale of the windows being
/// probed (the relative change left in the last window pair).
#[derive(Debug, Clone, Copy)]
pub struct MomentOptions {
    /// Converged when the last two absolute partial moments differ by less
    /// than this, relative to the last one.
    pub converge_rel: f64,
    /// Diverging when absolute partial moments grow by at least this
    /// fraction per window over the last three windows.
    pub diverge_growth: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            converge_rel: 1e-9,
            diverge_growth: 0.05,
        }
    }
}

/// One window of a moment computation: the partial k-th moment over
/// `|x| <= radius` and the corresponding absolute partial moment.
#[derive(Debug, Clone)]
pub struct MomentWindow {
    pub radius: f64,
    pub partial: Complex64,
    pub abs_partial: f64,
}

/// Windowed k-th moment of a measure with a convergence verdict.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub order: u32,
    pub windows: Vec<MomentWindow>,
    pub verdict: Verdict,
}

impl MomentReport {
    /// Partial moment over the largest window.
    pub fn value(&self) -> Complex64 {
        self.windows.last().expect("nonempty windows").partial
    }

    pub fn last_abs(&self) -> f64 {
        self.windows.last().expect("nonempty windows").abs_partial
    }
}

/// Windowed k-th moment over `|x| <= R` for each radius in `radii`
/// (which must be strictly increasing and positive).
///
/// The absolute partial moments are nondecreasing by construction. The
/// verdict: `converged` when the last two absolute partials differ by less
/// than `opts.converge_rel` relative; `diverging` when they grow by at least
/// `opts.diverge_growth` per window over the last three windows;
/// `undetermined` otherwise.
pub fn moment(
    mu: &ScalarMeasure,
    k: u32,
    radii: &[f64],
    opts: &MomentOptions,
) -> Result<MomentReport> {
    if radii.is_empty() {
        return Err(Error::InvalidRadii("need at least one radius".into()));
    }
    for w in radii.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidRadii(format!(
                "radii must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidRadii("radii must be finite and positive".into()));
    }

    // Terms sorted by |x|; prefix sums make the windows exactly nested.
    let mut terms: Vec<(f64, Complex64, f64)> = mu
        .mass_points()
        .into_iter()
        .map(|(x, w)| {
            let xk = x.powi(k as i32);
            (x.abs(), w * Complex64::new(xk, 0.0), w.norm() * xk.abs())
        })
        .collect();
    terms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite locations"));

    let mut windows = Vec::with_capacity(radii.len());
    let mut partial = Complex64::new(0.0, 0.0);
    let mut abs_partial = 0.0f64;
    let mut idx = 0;
    for &r in radii {
        while idx < terms.len() && terms[idx].0 <= r {
            partial += terms[idx].1;
            abs_partial += terms[idx].2;
            idx += 1;
        }
        windows.push(MomentWindow {
            radius: r,
            partial,
            abs_partial,
        });
    }

    let verdict = classify(&windows, opts);
    Ok(MomentReport {
        order: k,
        windows,
        verdict,
    })
}

fn classify(windows: &[MomentWindow], opts: &MomentOptions) -> Verdict {
    let m = windows.len();
    if m < 2 {
        return Verdict::Undetermined;
    }
    let last = windows[m - 1].abs_partial;
    let prev = windows[m - 2].abs_partial;
    let denom = if last > 0.0 { last } else { 1.0 };
    if (last - prev) / denom < opts.converge_rel {
        return Verdict::Converged;
    }
    if m >= 3 {
        let third = windows[m - 3].abs_partial;
        let g = 1.0 + opts.diverge_growth;
        if last >= g * prev && prev >= g * third {
            return Verdict::Diverging;
        }
    }
    Verdict::Undetermined
}

/// Exact k-th moment over the full (finite) support, with no verdict.
pub fn full_moment(mu: &ScalarMeasure, k: u32) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in mu.mass_points() {
        acc += w * Complex64::new(x.powi(k as i32), 0.0);
    }
    acc
}

/// Windowed moment that must reach a `converged` verdict; returns the value
/// over the largest window. With `probe = None` the windows are a saturation
/// ladder beyond the support (every finite-support measure converges there);
/// explicit probe radii screen for heavy tails instead.
pub fn gated_moment(
    mu: &ScalarMeasure,
    k: u32,
    probe: Option<&[f64]>,
    opts: &MomentOptions,
) -> Result<Complex64> {
    let default_radii;
    let radii = match probe {
        Some(r) => r,
        None => {
            let r = mu.support_radius().max(1.0);
            default_radii = [r, 1.25 * r, 1.5 * r];
            &default_radii
        }
    };
    let report = moment(mu, k, radii, opts)?;
    if report.verdict != Verdict::Converged {
        return Err(Error::NonConvergedMoment { order: k, report });
    }
    Ok(report.value())
}

/// k-th moment of the convolution via the binomial identity
/// `sum_n C(k,n) mu[k-n] nu[n]`, without forming the convolution.
///
/// Every input moment of order up to k must pass the convergence gate of
/// [`gated_moment`] with the same probe and options.
pub fn binomial_convolution_moment(
    mu: &ScalarMeasure,
    nu: &ScalarMeasure,
    k: u32,
    probe: Option<&[f64]>,
    opts: &MomentOptions,
) -> Result<Complex64> {
    let mu_moments: Vec<Complex64> = (0..=k)
        .map(|n| gated_moment(mu, n, probe, opts))
        .collect::<Result<_>>()?;
    let nu_moments: Vec<Complex64> = (0..=k)
        .map(|n| gated_moment(nu, n, probe, opts))
        .collect::<Result<_>>()?;
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..=k {
        acc += Complex64::new(binomial(k, n), 0.0)
            * mu_moments[(k - n) as usize]
            * nu_moments[n as usize];
    }
    Ok(acc)
}

/// Integral of `f` against the measure under the midpoint convention:
/// `sum f(x_i) w_i + step * sum f(midpoint_j) value_j`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, mu: &ScalarMeasure) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in mu.mass_points() {
        let fx = f(x);
        if !fx.re.is_finite() || !fx.im.is_finite() {
            return Err(Error::NonFiniteFunctionValue { at: x });
        }
        acc += fx * w;
    }
    Ok(acc)
}
