//! A paired-weight construction of two discrete measures on the integers
//! whose convolution vanishes identically on the even integers, while the
//! absolute product mass on every even diagonal slice `x + y = n` stays
//! bounded away from zero.
//!
//! Consequence: the reference function that weighs each even slice by the
//! inverse of its absolute mass integrates to zero against the convolution,
//! yet its absolute integral along every slice of the product equals one.
//! This is the standard counterexample showing that a transform identity for
//! convolutions needs absolute integrability of the lifted integrand, not
//! just integrability against the convolution.
//!
//! Construction, with a strictly positive summable sequence `a_k` truncated
//! at `k = cutoff`:
//!
//! * weights `b` pair up parities: `b(2k) = b(2k+1) = a_k`, zero for
//!   negative indices or beyond the cutoff;
//! * `mu({n}) = b(n)` on the nonnegative integers;
//! * `nu({n}) = (-1)^n b(-n)` on the nonpositive integers;
//! * `c(n) = sum_j b(j) b(j-n)` is the absolute mass of slice `x + y = n`;
//! * the reference function is `1/c(n)` at even integers `n` with
//!   `c(n) > 0`, and zero everywhere else.
//!
//! Cancellation of `(mu * nu)({n})` for even `n` is exact pair-by-pair, so
//! with dyadic `a_k` it holds to the last bit in floating point.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{convolve, ScalarMeasure};

/// Tolerance for recognizing a real argument as an integer when evaluating
/// the slice-weighted reference function.
const INTEGER_TOL: f64 = 1e-9;

/// The default sequence `a_k = 2^-(k+1)`; dyadic, so all pair cancellations
/// are exact in binary floating point.
pub fn dyadic_sequence(k: usize) -> f64 {
    0.5f64.powi(k as i32 + 1)
}

/// The built pair of measures together with the slice-mass table.
#[derive(Debug, Clone)]
pub struct Example1 {
    mu: ScalarMeasure,
    nu: ScalarMeasure,
    b: Vec<f64>,
    c: BTreeMap<i64, f64>,
    cutoff: usize,
}

/// Builds the pair for `a(0..=cutoff)`. Every sequence term must be finite
/// and strictly positive.
pub fn example1_build<F: Fn(usize) -> f64>(a: F, cutoff: usize) -> Result<Example1> {
    let mut b = Vec::with_capacity(2 * cutoff + 2);
    for k in 0..=cutoff {
        let ak = a(k);
        if !(ak.is_finite() && ak > 0.0) {
            return Err(Error::NonPositiveSequenceTerm {
                index: k,
                value: ak,
            });
        }
        b.push(ak);
        b.push(ak);
    }

    let top = b.len() as i64 - 1; // = 2*cutoff + 1
    let mu = ScalarMeasure::from_atoms(
        (0..=top)
            .map(|n| (n as f64, Complex64::new(b[n as usize], 0.0)))
            .collect(),
    )?;
    let nu = ScalarMeasure::from_atoms(
        (-top..=0)
            .map(|n| {
                let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                (n as f64, Complex64::new(sign * b[(-n) as usize], 0.0))
            })
            .collect(),
    )?;

    let mut c = BTreeMap::new();
    for n in -top..=top {
        let mut acc = 0.0;
        for (j, bj) in b.iter().enumerate() {
            let shifted = j as i64 - n;
            if (0..=top).contains(&shifted) {
                acc += bj * b[shifted as usize];
            }
        }
        if acc > 0.0 {
            c.insert(n, acc);
        }
    }

    Ok(Example1 {
        mu,
        nu,
        b,
        c,
        cutoff,
    })
}

impl Example1 {
    /// Builds the pair with the default dyadic sequence.
    pub fn with_dyadic(cutoff: usize) -> Result<Self> {
        example1_build(dyadic_sequence, cutoff)
    }

    /// The measure supported on the nonnegative integers.
    pub fn mu(&self) -> &ScalarMeasure {
        &self.mu
    }

    /// The sign-alternating measure supported on the nonpositive integers.
    pub fn nu(&self) -> &ScalarMeasure {
        &self.nu
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Paired weight `b(n)`, zero outside `0..=2*cutoff+1`.
    pub fn b(&self, n: i64) -> f64 {
        if n >= 0 && (n as usize) < self.b.len() {
            self.b[n as usize]
        } else {
            0.0
        }
    }

    /// Absolute slice mass `c(n) = sum_j b(j) b(j-n)`; zero when the slice
    /// holds no product atoms at this cutoff.
    pub fn c(&self, n: i64) -> f64 {
        self.c.get(&n).copied().unwrap_or(0.0)
    }

    /// The even integers whose slice carries mass at this cutoff.
    pub fn even_slices(&self) -> Vec<i64> {
        self.c.keys().copied().filter(|n| n.rem_euclid(2) == 0).collect()
    }

    /// The slice-weighted reference function: `1/c(n)` at even integers with
    /// positive slice mass, zero everywhere else on the line.
    pub fn f(&self, x: f64) -> f64 {
        let n = x.round();
        if (x - n).abs() > INTEGER_TOL {
            return 0.0;
        }
        let n = n as i64;
        if n.rem_euclid(2) != 0 {
            return 0.0;
        }
        match self.c.get(&n) {
            Some(&cn) => 1.0 / cn,
            None => 0.0,
        }
    }

    /// Same as [`Example1::f`] but complex-valued, for use with
    /// [`crate::measure::integrate`].
    pub fn f_complex(&self, x: f64) -> Complex64 {
        Complex64::new(self.f(x), 0.0)
    }

    /// The convolution `mu * nu`.
    pub fn convolution(&self) -> Result<ScalarMeasure> {
        convolve(&self.mu, &self.nu)
    }

    /// Absolute integral of the reference function along the product slice
    /// `x + y = n`: `f(n) * sum |mu({j}) nu({n-j})|`, recomputed from the
    /// atoms. Equals one for every even slice with mass, up to roundoff.
    ///
    /// Odd slices are rejected; even slices without product atoms at this
    /// cutoff are rejected as empty.
    pub fn slice_absolute_integral(&self, n: i64) -> Result<f64> {
        if n.rem_euclid(2) != 0 {
            return Err(Error::OddSliceIndex(n));
        }
        let mut mass = 0.0;
        for &(x, w) in self.mu.atoms() {
            let y = n as f64 - x;
            // nu is supported on integers; locate the matching atom exactly.
            if let Ok(idx) = self
                .nu
                .atoms()
                .binary_search_by(|probe| probe.0.partial_cmp(&y).expect("finite"))
            {
                mass += (w * self.nu.atoms()[idx].1).norm();
            }
        }
        if mass <= 0.0 {
            return Err(Error::EmptySlice(n));
        }
        Ok(self.f(n as f64) * mass)
    }
}

/// Free-function form of [`Example1::slice_absolute_integral`].
pub fn example1_slice_absolute_integral(ex: &Example1, n: i64) -> Result<f64> {
    ex.slice_absolute_integral(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{full_moment, integrate};
    use approx::assert_relative_eq;

    /// Brute-force product-measure convolution weight at an integer point.
    fn product_weight(ex: &Example1, n: i64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, w) in ex.mu().atoms() {
            for &(y, v) in ex.nu().atoms() {
                if (x + y - n as f64).abs() < 1e-9 {
                    acc += w * v;
                }
            }
        }
        acc
    }

    #[test]
    fn small_cutoff_tables() {
        // cutoff 1 with a = (1/2, 1/4): b = (1/2, 1/2, 1/4, 1/4).
        let ex = Example1::with_dyadic(1).unwrap();
        assert_eq!(ex.b(0), 0.5);
        assert_eq!(ex.b(3), 0.25);
        assert_eq!(ex.b(4), 0.0);
        assert_eq!(ex.b(-1), 0.0);
        // nu weights alternate in sign.
        assert_eq!(ex.nu().atoms()[3].1.re, 0.5); // at n = 0
        assert_eq!(ex.nu().atoms()[2].1.re, -0.5); // at n = -1
        // c(0) = sum b^2, c(2) = b2 b0 + b3 b1.
        assert_relative_eq!(ex.c(0), 0.625, max_relative = 1e-15);
        assert_relative_eq!(ex.c(2), 0.25, max_relative = 1e-15);
        assert_eq!(ex.c(5), 0.0);
    }

    #[test]
    fn convolution_vanishes_on_even_integers_exactly() {
        let ex = Example1::with_dyadic(20).unwrap();
        let lambda = ex.convolution().unwrap();
        for &(x, w) in lambda.atoms() {
            let n = x.round() as i64;
            if n.rem_euclid(2) == 0 {
                assert_eq!(w.re, 0.0, "lambda({{{n}}}) must cancel exactly");
                assert_eq!(w.im, 0.0);
            }
        }
        // Spot-check an odd atom against the brute-force product loop.
        let direct = product_weight(&ex, 1);
        let found = lambda
            .atoms()
            .iter()
            .find(|(x, _)| (*x - 1.0).abs() < 1e-9)
            .unwrap()
            .1;
        assert!((direct - found).norm() < 1e-15);
        // lambda({1}) = sum a_k^2 - sum a_{k+1} a_k; with the dyadic sequence
        // truncated at M this is 1/6 + 4^-M / 12 exactly.
        let expected = 1.0 / 6.0 + 0.25f64.powi(20) / 12.0;
        assert_relative_eq!(found.re, expected, max_relative = 1e-13);
    }

    #[test]
    fn reference_function_integrates_to_zero() {
        let ex = Example1::with_dyadic(20).unwrap();
        let lambda = ex.convolution().unwrap();
        let integral = integrate(|x| ex.f_complex(x), &lambda).unwrap();
        assert!(integral.norm() <= 1e-12);
    }

    #[test]
    fn every_even_slice_has_unit_absolute_integral() {
        let ex = Example1::with_dyadic(20).unwrap();
        let slices = ex.even_slices();
        assert_eq!(slices.first(), Some(&-40));
        assert_eq!(slices.last(), Some(&40));
        for n in slices {
            let s = ex.slice_absolute_integral(n).unwrap();
            assert!((s - 1.0).abs() <= 1e-9, "slice {n} gave {s}");
        }
    }

    #[test]
    fn slice_errors() {
        let ex = Example1::with_dyadic(3).unwrap();
        assert!(matches!(
            ex.slice_absolute_integral(1),
            Err(Error::OddSliceIndex(1))
        ));
        assert!(matches!(
            ex.slice_absolute_integral(100),
            Err(Error::EmptySlice(100))
        ));
    }

    #[test]
    fn nu_has_zero_mass_and_expected_total_variation() {
        let ex = Example1::with_dyadic(20).unwrap();
        // Signs alternate within each pair, so the mass cancels exactly.
        assert_eq!(ex.nu().mass().re, 0.0);
        // Total variation = 2 * sum a_k = 2 - 2^-20 for the dyadic sequence.
        let expect = 2.0 - 0.5f64.powi(20);
        assert_relative_eq!(ex.nu().total_variation(), expect, max_relative = 1e-15);
        // Zeroth moments: mu has mass 2 - 2^-20 as well.
        assert_relative_eq!(full_moment(ex.mu(), 0).re, expect, max_relative = 1e-15);
    }

    #[test]
    fn rejects_non_positive_sequences() {
        let err = example1_build(|k| if k == 2 { 0.0 } else { 0.5 }, 4);
        assert!(matches!(
            err,
            Err(Error::NonPositiveSequenceTerm { index: 2, .. })
        ));
    }
}
