//! Acceptance gate: seven fixed-seed end-to-end checks with pinned
//! tolerances and runtime budgets. Each test prints one summary line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use qsmear::example1::Example1;
use qsmear::measure::{
    binomial_convolution_moment, convolve, full_moment, integrate, moment, MomentOptions,
    ScalarMeasure, Verdict,
};
use qsmear::operator::{DensityOperator, Operator};
use qsmear::phasespace::{
    build_phase_space_povm, marginal_convolution_check, marginal_moment_operator,
    position_operator, Axis, PhaseSpaceGrid, DEFAULT_QUADRATURE_ORDER,
};
use qsmear::random::{
    random_atom_complex, random_atom_probability, random_density, random_hermitian_with_radius,
};
use qsmear::sampling::{empirical_moment, moment_standard_deviation, sample};
use qsmear::semispectral::{
    hs_moment_diagnostic, moment_operator_binomial, moment_operator_direct, smear,
    spectral_measure_of,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn budget(t0: Instant, limit: Duration, what: &str) {
    let elapsed = t0.elapsed();
    assert!(
        elapsed <= limit,
        "{what} took {elapsed:.2?}, budget {limit:.2?}"
    );
}

fn vacuum(dim: usize) -> DensityOperator {
    DensityOperator::basis_state(dim, 0).unwrap()
}

/// Midpoints separating all values in `xs`; None if two distinct values
/// crowd below resolvability.
fn isolating_edges(xs: &[f64]) -> Option<Vec<f64>> {
    let mut xs = xs.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    for w in xs.windows(2) {
        if w[1] - w[0] < 1e-6 {
            return None;
        }
    }
    Some(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
}

/// Dyadic two-slit construction at cutoff 20: the convolution vanishes at
/// every even integer, the slice-weighted function integrates to zero, yet
/// every even slice carries unit absolute mass.
#[test]
fn criterion_1_dyadic_construction() {
    let t0 = Instant::now();
    let ex = Example1::with_dyadic(20).unwrap();
    let conv = ex.convolution().unwrap();

    let mut worst_point = 0.0f64;
    let mut worst_slice = 0.0f64;
    let mut slices = 0usize;
    for n in ex.even_slices() {
        let mass: Complex64 = conv
            .atoms()
            .iter()
            .filter(|&&(x, _)| (x - n as f64).abs() <= 1e-9)
            .map(|&(_, w)| w)
            .sum();
        worst_point = worst_point.max(mass.norm());
        assert!(mass.norm() <= 1e-12, "convolution({n}) = {mass}");

        let s = ex.slice_absolute_integral(n).unwrap();
        worst_slice = worst_slice.max((s - 1.0).abs());
        assert!((s - 1.0).abs() <= 1e-9, "slice {n}: absolute integral {s}");
        slices += 1;
    }
    assert!(slices > 0, "no even slices at this cutoff");

    let f_int = integrate(|x| ex.f_complex(x), &conv).unwrap();
    assert!(f_int.norm() <= 1e-10, "integral of f: {f_int}");

    budget(t0, Duration::from_secs(1), "criterion 1");
    println!(
        "criterion 1: pass ({slices} even slices, max point mass {worst_point:.2e}, \
         max slice deviation {worst_slice:.2e}, integral {:.2e}, {:.2?})",
        f_int.norm(),
        t0.elapsed()
    );
}

/// Binomial moment formula against the direct moment of the convolution on
/// random complex atomic pairs.
#[test]
fn criterion_2_binomial_equals_direct_on_atoms() {
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(1002);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mu = random_atom_complex(50, 3.0, &mut rng).unwrap();
        let nu = random_atom_complex(50, 3.0, &mut rng).unwrap();
        let k = rng.gen_range(0..=6u32);

        let direct = full_moment(&convolve(&mu, &nu).unwrap(), k);
        let binomial =
            binomial_convolution_moment(&mu, &nu, k, None, &MomentOptions::default()).unwrap();
        let rel = (binomial - direct).norm() / direct.norm().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        assert!(
            rel <= 1e-9,
            "k = {k}: direct {direct}, binomial {binomial}, rel {rel}"
        );
    }
    budget(t0, Duration::from_secs(10), "criterion 2");
    println!(
        "criterion 2: pass (200 instances, worst relative error {worst:.2e}, {:.2?})",
        t0.elapsed()
    );
}

/// Moment operators of a smeared spectral measure: direct integration of
/// the smeared POVM against the binomial closed form.
#[test]
fn criterion_3_smearing_moments() {
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(1003);
    let mut worst = 0.0f64;
    let mut done = 0usize;
    while done < 50 {
        let dim = rng.gen_range(2..=16usize);
        let a = random_hermitian_with_radius(dim, 2.0, &mut rng).unwrap();
        let mu = random_atom_probability(30, 2.0, &mut rng).unwrap();
        let k = rng.gen_range(0..=5u32);

        let e = spectral_measure_of(&a).unwrap();
        let sums: Vec<f64> = e
            .eigenvalues()
            .iter()
            .flat_map(|&l| mu.atoms().iter().map(move |&(x, _)| l + x))
            .collect();
        let edges = match isolating_edges(&sums) {
            Some(edges) => edges,
            None => continue,
        };
        let smeared = smear(&mu, &e, &edges).unwrap();
        let direct = moment_operator_direct(&smeared, k);
        let binomial =
            moment_operator_binomial(&mu, &a, k, None, &MomentOptions::default()).unwrap();
        let dist = direct.max_entry_distance(&binomial);
        worst = worst.max(dist);
        assert!(dist <= 1e-8, "dim {dim}, k {k}: max-entry distance {dist}");
        done += 1;
    }
    budget(t0, Duration::from_secs(30), "criterion 3");
    println!(
        "criterion 3: pass (50 instances, worst max-entry distance {worst:.2e}, {:.2?})",
        t0.elapsed()
    );
}

/// Hilbert-Schmidt moment identity: both diagnostic components compute the
/// same number on random states and observables.
#[test]
fn criterion_4_hilbert_schmidt_identity() {
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(1004);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let dim = rng.gen_range(2..=32usize);
        let t = random_density(dim, &mut rng).unwrap();
        let a = random_hermitian_with_radius(dim, 2.0, &mut rng).unwrap();
        let k = rng.gen_range(0..=6u32);
        let d = hs_moment_diagnostic(&t, &a, k).unwrap();
        let err = (d.hs_side - d.moment_side).abs();
        worst = worst.max(err);
        assert!(
            err <= 1e-9,
            "dim {dim}, k {k}: hs {} vs moment {}",
            d.hs_side,
            d.moment_side
        );
    }
    budget(t0, Duration::from_secs(10), "criterion 4");
    println!(
        "criterion 4: pass (100 instances, worst deviation {worst:.2e}, {:.2?})",
        t0.elapsed()
    );
}

/// Cartesian marginal of the vacuum phase-space observable against the
/// smeared position measure, on the common leading block, with the distance
/// shrinking as the truncation grows.
#[test]
fn criterion_5_marginal_is_smeared_position() {
    let t0 = Instant::now();
    let grid = PhaseSpaceGrid::new(6.0, 48).unwrap();
    // Common comparison block: half the smallest truncation in the sweep.
    let block = Some(10);

    let mut dists = Vec::new();
    let mut deltas = Vec::new();
    for &dim in &[20usize, 40, 60] {
        let check = marginal_convolution_check(
            &vacuum(dim),
            &grid,
            DEFAULT_QUADRATURE_ORDER,
            Axis::X,
            block,
        )
        .unwrap();
        dists.push(check.max_distance);
        deltas.push(check.max_mass_delta);
    }

    assert!(dists[1] <= 5e-3, "operator distance at N = 40: {}", dists[1]);
    assert!(deltas[1] <= 5e-3, "mass delta at N = 40: {}", deltas[1]);
    for w in dists.windows(2) {
        assert!(w[1] < w[0], "distances must decrease: {dists:?}");
    }
    for w in deltas.windows(2) {
        assert!(w[1] < w[0], "mass deltas must decrease: {deltas:?}");
    }
    budget(t0, Duration::from_secs(300), "criterion 5");
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|d| format!("{d:.2e}"))
            .collect::<Vec<_>>()
            .join(" > ")
    };
    println!(
        "criterion 5: pass (distances {}, mass deltas {}, {:.2?})",
        fmt(&dists),
        fmt(&deltas),
        t0.elapsed()
    );
}

/// First and second moment operators of the vacuum marginal against the
/// position operator and its square, plus the sampled variance.
#[test]
fn criterion_6_marginal_moment_operators() {
    let t0 = Instant::now();
    let dim = 40;
    let t = vacuum(dim);
    let grid = PhaseSpaceGrid::new(8.0, 96).unwrap();
    // Comparison block: the outermost bins absorb the truncation deficiency,
    // which pollutes basis levels above ~dim/3 in the second moment; the
    // leading 15 levels are budgeted at 5e-3.
    let block = 15;

    let q = position_operator(dim).unwrap();
    let q2_matrix = q.as_operator().matrix() * q.as_operator().matrix()
        + DMatrix::identity(dim, dim) * Complex64::new(0.5, 0.0);
    let q2_plus_half = Operator::from_matrix(q2_matrix).unwrap();

    // Closed-form route is exact for the vacuum seed.
    let closed1 = marginal_moment_operator(&t, 1, Axis::X).unwrap();
    let closed2 = marginal_moment_operator(&t, 2, Axis::X).unwrap();
    assert!(closed1.max_entry_distance(q.as_operator()) <= 1e-10);
    assert!(closed2.max_entry_distance(&q2_plus_half) <= 1e-10);

    // Direct route integrates the built observable.
    let povm = build_phase_space_povm(&t, &grid, DEFAULT_QUADRATURE_ORDER).unwrap();
    let marg = povm.marginal_x().unwrap();
    let d1 = moment_operator_direct(&marg, 1).max_entry_distance_on_block(q.as_operator(), block);
    let d2 = moment_operator_direct(&marg, 2).max_entry_distance_on_block(&q2_plus_half, block);
    assert!(d1 <= 5e-3, "first moment distance {d1}");
    assert!(d2 <= 5e-3, "second moment distance {d2}");

    // Sampled variance of the vacuum marginal: 1.0 within five standard
    // errors.
    let n = 100_000usize;
    let s = sample(&marg, &t, n, 9, "acceptance").unwrap();
    let m1 = empirical_moment(&s, 1).unwrap();
    let m2 = empirical_moment(&s, 2).unwrap();
    let variance = m2 - m1 * m1;
    let se = moment_standard_deviation(&s, 2).unwrap() / (n as f64).sqrt();
    assert!(
        (variance - 1.0).abs() <= 5.0 * se,
        "sampled variance {variance}, allowed deviation {}",
        5.0 * se
    );
    budget(t0, Duration::from_secs(300), "criterion 6");
    println!(
        "criterion 6: pass (moment distances {d1:.2e}/{d2:.2e} on block {block}, \
         sampled variance {variance:.4} within {:.1e}, {:.2?})",
        5.0 * se,
        t0.elapsed()
    );
}

/// Heavy-tail divergence diagnostic: first moment converges across the
/// window ladder, second moment is flagged as diverging.
#[test]
fn criterion_7_heavy_tail_divergence() {
    let t0 = Instant::now();
    let mu = ScalarMeasure::inverse_cubic_density(1e6, 0.5).unwrap();
    let radii = [1e2, 1e3, 1e4, 1e5, 1e6];
    // The absolute tail of the first moment beyond R decays like 1/R; the
    // stability threshold sits above it at the smallest window.
    let opts = MomentOptions {
        converge_rel: 1e-4,
        ..MomentOptions::default()
    };

    let rep1 = moment(&mu, 1, &radii, &opts).unwrap();
    assert_eq!(rep1.verdict, Verdict::Converged, "first moment: {:?}", rep1.verdict);
    let rep2 = moment(&mu, 2, &radii, &opts).unwrap();
    assert_eq!(rep2.verdict, Verdict::Diverging, "second moment: {:?}", rep2.verdict);

    budget(t0, Duration::from_secs(5), "criterion 7");
    println!(
        "criterion 7: pass (k = 1 {}, k = 2 {}, {:.2?})",
        rep1.verdict,
        rep2.verdict,
        t0.elapsed()
    );
}
