//! Seeded Monte-Carlo sampling of discretized observables, plus the moment
//! comparisons that tie empirical statistics back to operator traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::operator::{trace_pairing, DensityOperator};
use crate::semispectral::{moment_operator_direct, DiscretizedPOVM};

/// Generator recorded in sample metadata: ChaCha12 keyed by the 64-bit seed,
/// outcomes drawn by CDF inversion of the per-bin probabilities.
pub const GENERATOR_NAME: &str = "chacha12-cdf-inversion";

/// Largest negative probability treated as rounding noise and clipped to 0.
pub const PROBABILITY_CLIP_TOL: f64 = 1e-9;

/// Largest deviation of the probability total from 1 that is silently
/// renormalized; anything worse signals a broken POVM upstream.
pub const PROBABILITY_SUM_TOL: f64 = 1e-6;

/// Outcomes of repeated measurements of one POVM in one state. Outcomes are
/// the bin representative points, not bin indices, so moments read off the
/// sample live on the same value scale as the operator predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSample {
    pub seed: u64,
    pub outcomes: Vec<f64>,
    /// Identifier of the POVM the sample was drawn from.
    pub source: String,
}

/// Cleaned outcome distribution of the pair: traces clipped at
/// [`PROBABILITY_CLIP_TOL`] and renormalized within [`PROBABILITY_SUM_TOL`].
pub fn outcome_distribution(
    e: &DiscretizedPOVM,
    rho: &DensityOperator,
) -> Result<Vec<f64>> {
    let raw = e.outcome_probabilities(rho)?;
    let mut probs = Vec::with_capacity(raw.len());
    for (i, p) in raw.into_iter().enumerate() {
        if p < -PROBABILITY_CLIP_TOL {
            return Err(Error::InvalidProbabilities(format!(
                "bin {i} has probability {p:.3e}"
            )));
        }
        probs.push(p.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() >= PROBABILITY_SUM_TOL {
        return Err(Error::InvalidProbabilities(format!(
            "probabilities sum to {total}, off by more than {PROBABILITY_SUM_TOL:e}"
        )));
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Draws `n` i.i.d. outcomes of measuring `e` in the state `rho`.
/// Identical (seed, inputs) give byte-identical outcome lists.
pub fn sample(
    e: &DiscretizedPOVM,
    rho: &DensityOperator,
    n: usize,
    seed: u64,
    source: impl Into<String>,
) -> Result<OutcomeSample> {
    let probs = outcome_distribution(e, rho)?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }

    let reps = e.reps();
    let last = reps.len() - 1;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut outcomes = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        outcomes.push(reps[idx]);
    }
    Ok(OutcomeSample {
        seed,
        outcomes,
        source: source.into(),
    })
}

/// Mean of `outcome^k` over the sample.
pub fn empirical_moment(s: &OutcomeSample, k: u32) -> Result<f64> {
    if s.outcomes.is_empty() {
        return Err(Error::EmptySample);
    }
    let sum: f64 = s.outcomes.iter().map(|x| x.powi(k as i32)).sum();
    Ok(sum / s.outcomes.len() as f64)
}

/// Sample standard deviation of `outcome^k`; the scale for judging how far
/// an empirical moment may sit from its prediction.
pub fn moment_standard_deviation(s: &OutcomeSample, k: u32) -> Result<f64> {
    let n = s.outcomes.len();
    if n < 2 {
        return Err(Error::EmptySample);
    }
    let mean = empirical_moment(s, k)?;
    let ss: f64 = s
        .outcomes
        .iter()
        .map(|x| {
            let d = x.powi(k as i32) - mean;
            d * d
        })
        .sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

/// `Tr[rho * moment_operator_direct(e, k)]`: what the operator calculus says
/// the k-th sample moment should approach.
pub fn predicted_moment(
    e: &DiscretizedPOVM,
    rho: &DensityOperator,
    k: u32,
) -> Result<f64> {
    Ok(trace_pairing(rho.as_operator(), &moment_operator_direct(e, k))?.re)
}
