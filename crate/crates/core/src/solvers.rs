//! General exact solvers for finite average-reward MDPs whose stationary
//! policies all induce irreducible chains. They make no use of separable
//! structure and serve as independent routes to the optimal gain.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain;
use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::mdp::{restrict, Mdp, Policy};
use crate::separable::{acoe_residual, first_argmax, maximizer_profile};

/// Default limit on `M^N` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;
/// Policy iteration switches an action only if it improves the Q-value by more than this.
pub const IMPROVEMENT_TOL: f64 = 1e-12;
/// Damping factor of relative value iteration.
pub const RVI_DAMPING: f64 = 0.5;
pub const DEFAULT_RVI_SWEEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PolicySolution {
    pub policy: Policy,
    pub gain: f64,
    pub bias: Vec<f64>,
    pub acoe_residual_norm: f64,
    pub iterations: u64,
}

fn not_irreducible(pi: &Policy) -> Error {
    Error::PolicyNotIrreducible(pi.actions().to_vec())
}

/// Exact gain and bias of a fixed policy.
pub fn policy_evaluation(m: &Mdp, pi: &Policy) -> Result<PolicySolution> {
    let (p, r) = restrict(m, pi)?;
    let sol = chain::analyze_chain(&p, &r).map_err(|e| match e {
        Error::NotIrreducible => not_irreducible(pi),
        other => other,
    })?;
    Ok(PolicySolution {
        policy: pi.clone(),
        gain: sol.gain,
        acoe_residual_norm: max_abs(&acoe_residual(m, sol.gain, &sol.bias)),
        bias: sol.bias,
        iterations: 0,
    })
}

/// Gain of a fixed policy only (no group inverse).
pub fn evaluate_gain(m: &Mdp, pi: &Policy) -> Result<f64> {
    let (p, r) = restrict(m, pi)?;
    if !chain::is_irreducible(&p) {
        return Err(not_irreducible(pi));
    }
    let invariant = chain::invariant_distribution(&p)?;
    Ok(chain::gain(&r, &invariant))
}

/// Howard policy iteration from `initial`.
pub fn policy_iteration(m: &Mdp, initial: &Policy) -> Result<PolicySolution> {
    policy_iteration_with_history(m, initial).map(|(sol, _)| sol)
}

/// Policy iteration that also returns the gain evaluated at each round.
pub fn policy_iteration_with_history(m: &Mdp, initial: &Policy) -> Result<(PolicySolution, Vec<f64>)> {
    if !initial.is_valid_for(m) {
        return Err(Error::Dimension("initial policy does not fit the MDP"));
    }
    let max_rounds = u64::try_from(m.policy_count()).unwrap_or(u64::MAX).saturating_add(1);
    let mut policy = initial.clone();
    let mut history = Vec::new();

    for round in 0..max_rounds {
        let mut eval = policy_evaluation(m, &policy)?;
        history.push(eval.gain);

        let mut actions = policy.actions().to_vec();
        let mut changed = false;
        for (s, current) in actions.iter_mut().enumerate() {
            let q_current = m.q_value(s, *current, &eval.bias);
            let (best, q_best) = first_argmax((0..m.n_actions()).map(|a| m.q_value(s, a, &eval.bias)));
            if q_best > q_current + IMPROVEMENT_TOL && best != *current {
                *current = best;
                changed = true;
            }
        }
        if !changed {
            eval.iterations = round + 1;
            return Ok((eval, history));
        }
        policy = Policy::new(actions, m.n_actions())?;
    }
    Err(Error::NonConvergence { iterations: max_rounds })
}

/// Evaluates all `M^N` policies; ties keep the lexicographically smallest.
pub fn brute_force(m: &Mdp) -> Result<PolicySolution> {
    brute_force_capped(m, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_capped(m: &Mdp, cap: u64) -> Result<PolicySolution> {
    let count = m.policy_count();
    if count > cap as u128 {
        return Err(Error::CapExceeded { policies: count, cap });
    }
    let mut best: Option<(Policy, f64)> = None;
    for index in 0..count {
        let pi = Policy::from_index(index, m.n_states(), m.n_actions());
        let g = evaluate_gain(m, &pi)?;
        if best.as_ref().is_none_or(|(_, bg)| g > bg + crate::separable::TIE_TOL) {
            best = Some((pi, g));
        }
    }
    let (pi, _) = best.expect("at least one policy");
    let mut sol = policy_evaluation(m, &pi)?;
    sol.iterations = count as u64;
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RviSolution {
    /// Midpoint of the span bounds.
    pub gain: f64,
    pub lower: f64,
    pub upper: f64,
    /// Relative values, pinned to zero at state 0.
    pub bias: Vec<f64>,
    pub policy: Policy,
    pub sweeps: u64,
}

/// Damped relative value iteration, stopping once `span(Tv - v) < span_tol`.
pub fn relative_value_iteration(m: &Mdp, span_tol: f64) -> Result<RviSolution> {
    relative_value_iteration_capped(m, span_tol, DEFAULT_RVI_SWEEPS)
}

pub fn relative_value_iteration_capped(m: &Mdp, span_tol: f64, max_sweeps: u64) -> Result<RviSolution> {
    let n = m.n_states();
    let mut v = vec![0.0; n];
    let mut diff = vec![0.0; n];

    for sweep in 1..=max_sweeps {
        for (s, d) in diff.iter_mut().enumerate() {
            let tv = (0..m.n_actions())
                .map(|a| m.q_value(s, a, &v))
                .fold(f64::NEG_INFINITY, f64::max);
            *d = tv - v[s];
        }
        let lower = diff.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = diff.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < span_tol {
            return Ok(RviSolution {
                gain: 0.5 * (lower + upper),
                lower,
                upper,
                policy: maximizer_profile(m, &v),
                bias: v,
                sweeps: sweep,
            });
        }
        for (x, d) in v.iter_mut().zip(&diff) {
            *x += RVI_DAMPING * d;
        }
        let pin = v[0];
        v.iter_mut().for_each(|x| *x -= pin);
    }
    Err(Error::NonConvergence { iterations: max_sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::mdp::{assemble, SeparableSpec};
    use crate::separable::solve_baseline;

    fn worked_spec() -> SeparableSpec {
        SeparableSpec::separable(
            vec![1.0, 0.0],
            vec![0.0, 0.25],
            Matrix::from_rows(&[[0.8, 0.2], [0.5, 0.5]]).unwrap(),
        )
        .unwrap()
    }

    /// A small non-separable instance with state-dependent kernels.
    fn coupled() -> Mdp {
        Mdp::new(
            &[vec![1.0, 0.2], vec![0.0, 0.9]],
            &[
                vec![vec![0.9, 0.1], vec![0.3, 0.7]],
                vec![vec![0.6, 0.4], vec![0.2, 0.8]],
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_state_evaluation() {
        let m = Mdp::new(&[vec![1.5, 2.5]], &[vec![vec![1.0], vec![1.0]]]).unwrap();
        let sol = policy_evaluation(&m, &Policy::constant(1, 1)).unwrap();
        assert_eq!(sol.gain, 2.5);
        assert_eq!(sol.bias, vec![0.0]);
    }

    #[test]
    fn constant_policy_matches_per_action_gain() {
        let spec = worked_spec();
        let m = assemble(&spec).unwrap();
        let g = crate::separable::per_action_gain(&spec).unwrap();
        for (a, ga) in g.iter().enumerate() {
            let sol = policy_evaluation(&m, &Policy::constant(2, a)).unwrap();
            assert!((sol.gain - ga).abs() < 1e-14);
        }
    }

    #[test]
    fn reward_shift_moves_gain_only() {
        let m = coupled();
        let shifted = Mdp::new(
            &[vec![1.0 + 3.0, 0.2 + 3.0], vec![0.0 + 3.0, 0.9 + 3.0]],
            &[
                vec![vec![0.9, 0.1], vec![0.3, 0.7]],
                vec![vec![0.6, 0.4], vec![0.2, 0.8]],
            ],
        )
        .unwrap();
        let pi = Policy::new(vec![0, 1], 2).unwrap();
        let a = policy_evaluation(&m, &pi).unwrap();
        let b = policy_evaluation(&shifted, &pi).unwrap();
        assert!((b.gain - a.gain - 3.0).abs() < 1e-14);
        assert!(crate::linalg::max_abs_diff(&a.bias, &b.bias) < 1e-13);
    }

    #[test]
    fn single_action_policy_iteration() {
        let m = Mdp::new(&[vec![1.0], vec![2.0]], &[vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]]).unwrap();
        let sol = policy_iteration(&m, &Policy::constant(2, 0)).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!((sol.gain - 1.5).abs() < 1e-15);
    }

    #[test]
    fn policy_iteration_matches_baseline_and_brute_force() {
        let spec = worked_spec();
        let m = assemble(&spec).unwrap();
        let pi = policy_iteration(&m, &Policy::constant(2, 1)).unwrap();
        assert!((pi.gain - solve_baseline(&spec).unwrap().gain).abs() < 1e-9);
        assert!(pi.acoe_residual_norm < 1e-9);

        let m = coupled();
        let pi = policy_iteration(&m, &Policy::constant(2, 0)).unwrap();
        let bf = brute_force(&m).unwrap();
        assert!((pi.gain - bf.gain).abs() < 1e-9);
        assert_eq!(bf.iterations, 4);
    }

    #[test]
    fn brute_force_single_state() {
        let m = Mdp::new(&[vec![0.5, 2.0, -1.0]], &[vec![vec![1.0], vec![1.0], vec![1.0]]]).unwrap();
        let sol = brute_force(&m).unwrap();
        assert_eq!(sol.policy.actions(), &[1]);
        assert_eq!(sol.gain, 2.0);
    }

    #[test]
    fn brute_force_ties_pick_zero_vector() {
        let m = Mdp::new(
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            &[
                vec![vec![0.5, 0.5], vec![0.1, 0.9]],
                vec![vec![0.7, 0.3], vec![0.4, 0.6]],
            ],
        )
        .unwrap();
        assert_eq!(brute_force(&m).unwrap().policy.actions(), &[0, 0]);
    }

    #[test]
    fn brute_force_cap() {
        let m = coupled();
        assert_eq!(
            brute_force_capped(&m, 3).unwrap_err(),
            Error::CapExceeded { policies: 4, cap: 3 }
        );
    }

    #[test]
    fn reducible_policy_is_named() {
        let m = Mdp::new(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[
                vec![vec![1.0, 0.0], vec![0.5, 0.5]],
                vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            ],
        )
        .unwrap();
        assert_eq!(
            policy_evaluation(&m, &Policy::constant(2, 0)).unwrap_err(),
            Error::PolicyNotIrreducible(vec![0, 0])
        );
    }

    #[test]
    fn rvi_single_state() {
        let m = Mdp::new(&[vec![0.5, 2.0]], &[vec![vec![1.0], vec![1.0]]]).unwrap();
        let sol = relative_value_iteration(&m, 1e-10).unwrap();
        assert_eq!(sol.sweeps, 1);
        assert_eq!(sol.gain, 2.0);
    }

    #[test]
    fn rvi_matches_brute_force() {
        for m in [assemble(&worked_spec()).unwrap(), coupled()] {
            let rvi = relative_value_iteration(&m, 1e-10).unwrap();
            let bf = brute_force(&m).unwrap();
            assert!((rvi.gain - bf.gain).abs() < 1e-9);
            let greedy = evaluate_gain(&m, &rvi.policy).unwrap();
            assert!((greedy - rvi.gain).abs() < 1e-10);
        }
    }

    #[test]
    fn rvi_handles_periodic_chain() {
        let m = Mdp::new(&[vec![1.0], vec![0.0]], &[vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]]).unwrap();
        let sol = relative_value_iteration(&m, 1e-10).unwrap();
        assert!((sol.gain - 0.5).abs() < 1e-10);
    }
}
