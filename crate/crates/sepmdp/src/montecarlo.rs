//! Long-run average reward by simulation, with a batch-means confidence
//! interval. Uses no linear algebra, so it checks the exact gains
//! independently.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sepmdp_core::chain::is_irreducible;
use sepmdp_core::perturbation::unit;
use sepmdp_core::{restrict, Mdp, Policy};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::CliError;

pub const DEFAULT_BATCHES: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    /// 95% half-width from batch means.
    pub half_width: f64,
    /// Recorded steps, `batches * batch_length`.
    pub horizon: u64,
    pub batches: u64,
    pub batch_length: u64,
    /// Discarded steps simulated before recording starts.
    pub burn_in: u64,
    pub seed: u64,
}

/// Simulates `pi` from state 0 for `horizon / 10` burn-in steps and then
/// `horizon` recorded steps split into `batches` equal batches.
pub fn simulate_gain(m: &Mdp, pi: &Policy, horizon: u64, batches: u64, seed: u64) -> Result<SimEstimate, CliError> {
    if batches < 2 {
        return Err(CliError::Usage("simulation needs at least 2 batches".into()));
    }
    if horizon < 100 * batches {
        return Err(CliError::Usage(format!(
            "horizon {horizon} must be at least 100 x batches ({})",
            100 * batches
        )));
    }
    if !horizon.is_multiple_of(batches) {
        return Err(CliError::Usage(format!(
            "horizon {horizon} is not a multiple of {batches} batches"
        )));
    }
    let (p, r) = restrict(m, pi)?;
    if !is_irreducible(&p) {
        return Err(sepmdp_core::Error::PolicyNotIrreducible(pi.actions().to_vec()).into());
    }

    let cumulative: Vec<Vec<f64>> = p
        .row_iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = 0usize;
    let mut step = |state: &mut usize| {
        let u = unit(&mut rng) * cumulative[*state].last().copied().unwrap_or(1.0);
        let row = &cumulative[*state];
        *state = row.iter().position(|&c| u < c).unwrap_or(row.len() - 1);
    };

    let burn_in = horizon / 10;
    for _ in 0..burn_in {
        step(&mut state);
    }

    // Rewards are accumulated relative to the first recorded reward so that
    // a constant reward stream averages to exactly that constant.
    let batch_length = horizon / batches;
    let reference = r[state];
    let mut batch_means = Vec::with_capacity(batches as usize);
    for _ in 0..batches {
        let mut acc = 0.0;
        for _ in 0..batch_length {
            acc += r[state] - reference;
            step(&mut state);
        }
        batch_means.push(acc / batch_length as f64);
    }

    let k = batches as f64;
    let centred_mean = batch_means.iter().sum::<f64>() / k;
    let variance = batch_means.iter().map(|b| (b - centred_mean).powi(2)).sum::<f64>() / (k - 1.0);
    let t = StudentsT::new(0.0, 1.0, k - 1.0)
        .expect("batches >= 2 gives positive degrees of freedom")
        .inverse_cdf(0.975);

    Ok(SimEstimate {
        mean: reference + centred_mean,
        half_width: t * (variance / k).sqrt(),
        horizon,
        batches,
        batch_length,
        burn_in,
        seed,
    })
}
