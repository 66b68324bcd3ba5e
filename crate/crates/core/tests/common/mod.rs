#![allow(dead_code)]

use proptest::prelude::*;
use sepmdp_core::linalg::{Lu, Matrix};

/// Lazy power iteration `x ← x (I + P) / 2` from the uniform vector. The
/// lazy chain shares the invariant distribution of `P` and is aperiodic.
pub fn power_iteration(p: &Matrix, tol: f64) -> Vec<f64> {
    let n = p.rows();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..2_000_000 {
        let px = p.vec_mul(&x);
        let next: Vec<f64> = x.iter().zip(&px).map(|(a, b)| 0.5 * (a + b)).collect();
        let delta = next.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        x = next;
        if delta < tol {
            break;
        }
    }
    x
}

/// Solves `(I - P) h = rhs` with `h[pin] = 0` by replacing row `pin` of the
/// singular system with the pin equation. Independent of the group inverse.
pub fn pinned_poisson(p: &Matrix, rhs: &[f64], pin: usize) -> Vec<f64> {
    let n = p.rows();
    let mut a = Matrix::identity(n).sub(p);
    let mut b = rhs.to_vec();
    a.row_mut(pin).fill(0.0);
    a[(pin, pin)] = 1.0;
    b[pin] = 0.0;
    Lu::factor(&a).expect("pinned system is regular").solve(&b)
}

/// Irreducible transition matrices with 1..=max_n states. Half of the cases
/// are sparse: a random subset of edges plus a Hamiltonian cycle (which may
/// make the chain periodic).
pub fn irreducible_chain(max_n: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), n),
            prop::collection::vec(prop::bool::ANY, n * n),
            prop::bool::ANY,
        )
            .prop_map(move |(weights, mask, sparse)| {
                let rows: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        let mut row: Vec<f64> = (0..n)
                            .map(|j| {
                                if sparse && !mask[i * n + j] {
                                    0.0
                                } else {
                                    0.05 + weights[i][j]
                                }
                            })
                            .collect();
                        row[(i + 1) % n] += 0.5;
                        let total: f64 = row.iter().sum();
                        row.iter_mut().for_each(|x| *x /= total);
                        row
                    })
                    .collect();
                Matrix::from_rows(&rows).unwrap()
            })
    })
}

pub fn reward_vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}
