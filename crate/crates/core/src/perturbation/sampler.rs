use alloc::vec::Vec;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::mdp::SeparableSpec;

/// Uniform in `[0, 1)` with 53 random bits.
pub fn unit<R: Rng>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n`.
pub(crate) fn below<R: Rng>(rng: &mut R, n: usize) -> usize {
    ((unit(rng) * n as f64) as usize).min(n - 1)
}

fn symmetric(rng: &mut ChaCha8Rng) -> f64 {
    2.0 * unit(rng) - 1.0
}

/// Smallest entry of every sampled stochastic row: 0.05, shrunk for wide
/// rows so that the floors alone never exceed half the mass.
pub fn entry_floor(n_states: usize) -> f64 {
    0.05f64.min(0.5 / n_states as f64)
}

/// Flat-Dirichlet weights lifted onto the floor: `floor + (1 - N floor) w`.
fn stochastic_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let floor = entry_floor(n);
    let weights: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - unit(rng))).collect();
    let total: f64 = weights.iter().sum();
    let free = 1.0 - n as f64 * floor;
    if total > 0.0 {
        weights.iter().map(|w| floor + free * w / total).collect()
    } else {
        alloc::vec![1.0 / n as f64; n]
    }
}

/// Deterministic random nearly separable instance with `epsilon = 0`.
///
/// Rewards are uniform on `[-1, 1]`. Every kernel entry is at least
/// [`entry_floor`], and each `Q(·|s,a)` is `perturb_scale` times the
/// difference of two such rows, so every chain stays strictly positive (hence
/// irreducible) for `ε < entry_floor / perturb_scale`.
pub fn sample_instance(seed: u64, n_states: usize, n_actions: usize, perturb_scale: f64) -> Result<SeparableSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (n_states, n_actions);

    let r_state: Vec<f64> = (0..n).map(|_| symmetric(&mut rng)).collect();
    let r_action: Vec<f64> = (0..m).map(|_| symmetric(&mut rng)).collect();
    let kernel_rows: Vec<Vec<f64>> = (0..m).map(|_| stochastic_row(&mut rng, n)).collect();
    let reward_rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| symmetric(&mut rng)).collect()).collect();
    let kernel_perturb: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let plus = stochastic_row(&mut rng, n);
                    let minus = stochastic_row(&mut rng, n);
                    plus.iter().zip(&minus).map(|(a, b)| perturb_scale * (a - b)).collect()
                })
                .collect()
        })
        .collect();

    SeparableSpec::new(
        r_state,
        r_action,
        Matrix::from_rows(&kernel_rows)?,
        0.0,
        Some(Matrix::from_rows(&reward_rows)?),
        Some(kernel_perturb),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::epsilon_max;

    #[test]
    fn deterministic_in_seed() {
        let a = sample_instance(7, 4, 3, 0.5).unwrap();
        let b = sample_instance(7, 4, 3, 0.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_instance(8, 4, 3, 0.5).unwrap());
    }

    #[test]
    fn rows_respect_floor() {
        let spec = sample_instance(3, 5, 2, 1.0).unwrap();
        for row in spec.kernel_action().row_iter() {
            assert!(row.iter().all(|&p| p >= 0.05 - 1e-15));
        }
        assert_eq!(spec.epsilon(), 0.0);
    }

    #[test]
    fn feasibility_margin() {
        for seed in 0..50 {
            let spec = sample_instance(seed, 1 + (seed as usize % 6), 1 + (seed as usize % 4), 0.4).unwrap();
            assert!(epsilon_max(&spec) >= 0.05 / 0.4);
        }
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| below(&mut rng, 3) < 3));
    }
}
