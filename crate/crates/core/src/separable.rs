//! Closed-form solution of the totally separable model.
//!
//! When `r(s,a) = r_S(s) + r_A(a)` and `P(·|s,a) = P_A(·|a)`, the optimal
//! stationary policy is the constant action maximizing
//! `g(a) = π_aᵀ r_S + r_A(a)`, where `π_a` is the invariant distribution of
//! `P_A(·|a)`. Its bias comes from the Poisson equation of that chain, and the
//! pair `(g*, h*)` zeroes the average-cost optimality residual.

use alloc::vec::Vec;

use crate::chain;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::mdp::{Mdp, Policy, SeparableSpec};

/// Two Q-values (or gains) within this of each other count as tied; ties go
/// to the smallest action index.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BaselineSolution {
    pub best_action: usize,
    pub gain: f64,
    pub per_action_gain: Vec<f64>,
    pub bias: Vec<f64>,
    /// Invariant distribution of the chain driven by `best_action`.
    pub invariant: Vec<f64>,
    pub policy: Policy,
}

/// Transition matrix of the chain that always plays `a`: every row is `P_A(·|a)`.
pub fn action_chain(spec: &SeparableSpec, a: usize) -> Matrix {
    let n = spec.n_states();
    let row = spec.kernel_action().row(a);
    let mut p = Matrix::zeros(n, n);
    for s in 0..n {
        p.row_mut(s).copy_from_slice(row);
    }
    p
}

/// Smallest index whose value is within [`TIE_TOL`] of the maximum.
pub(crate) fn first_argmax(values: impl Iterator<Item = f64> + Clone) -> (usize, f64) {
    let best = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let idx = values.clone().position(|v| v >= best - TIE_TOL).unwrap_or(0);
    (idx, best)
}

fn action_invariants(spec: &SeparableSpec) -> Result<Vec<Vec<f64>>> {
    let chains: Vec<Matrix> = (0..spec.n_actions()).map(|a| action_chain(spec, a)).collect();
    let reducible: Vec<usize> = chains
        .iter()
        .enumerate()
        .filter(|(_, p)| !chain::is_irreducible(p))
        .map(|(a, _)| a)
        .collect();
    if !reducible.is_empty() {
        return Err(Error::ActionsNotIrreducible(reducible));
    }
    chains.iter().map(chain::invariant_distribution).collect()
}

/// `g(a) = π_aᵀ r_S + r_A(a)` for every action.
pub fn per_action_gain(spec: &SeparableSpec) -> Result<Vec<f64>> {
    let invariants = action_invariants(spec)?;
    Ok(invariants
        .iter()
        .zip(spec.r_action())
        .map(|(pi, ra)| dot(pi, spec.r_state()) + ra)
        .collect())
}

/// The optimal constant policy of the ε = 0 model, with its gain and bias.
pub fn solve_baseline(spec: &SeparableSpec) -> Result<BaselineSolution> {
    let invariants = action_invariants(spec)?;
    let per_action_gain: Vec<f64> = invariants
        .iter()
        .zip(spec.r_action())
        .map(|(pi, ra)| dot(pi, spec.r_state()) + ra)
        .collect();
    let (best_action, _) = first_argmax(per_action_gain.iter().copied());
    let gain = per_action_gain[best_action];

    let p = action_chain(spec, best_action);
    let invariant = invariants[best_action].clone();
    let r: Vec<f64> = spec
        .r_state()
        .iter()
        .map(|rs| rs + spec.r_action()[best_action])
        .collect();
    let bias = chain::solve_poisson(&p, &r, &invariant, gain)?;

    Ok(BaselineSolution {
        best_action,
        gain,
        per_action_gain,
        bias,
        invariant,
        policy: Policy::constant(spec.n_states(), best_action),
    })
}

/// Per-state defect of the average-cost optimality equation:
/// `max_a [r(s,a) + Σ P(s'|s,a) h(s')] - g - h(s)`.
pub fn acoe_residual(m: &Mdp, g: f64, h: &[f64]) -> Vec<f64> {
    (0..m.n_states())
        .map(|s| {
            let best = (0..m.n_actions())
                .map(|a| m.q_value(s, a, h))
                .fold(f64::NEG_INFINITY, f64::max);
            best - g - h[s]
        })
        .collect()
}

/// Greedy action per state with respect to `h` (ties to the smallest index).
pub fn maximizer_profile(m: &Mdp, h: &[f64]) -> Policy {
    let actions = (0..m.n_states())
        .map(|s| first_argmax((0..m.n_actions()).map(|a| m.q_value(s, a, h))).0)
        .collect();
    Policy::new(actions, m.n_actions()).expect("argmax indices are in range")
}
