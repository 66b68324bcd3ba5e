use alloc::vec::Vec;

use crate::chain;
use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs_diff, Matrix};
use crate::mdp::{epsilon_max, restrict, Policy, SeparableSpec, STOCHASTIC_TOL};

use super::loglog_slope;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CurvePoint {
    pub epsilon: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExpansionReport {
    pub policy: Policy,
    pub pi0: Vec<f64>,
    pub pi1: Vec<f64>,
    pub g0: f64,
    pub g1: f64,
    /// `|gᵋ - g⁰ - ε g¹|` from an exact re-solve at each ε.
    pub residual_curve: Vec<CurvePoint>,
    /// `max |πᵋ - π⁰ - ε π¹|` at each ε.
    pub distribution_residual_curve: Vec<CurvePoint>,
    /// Log-log slope of `residual_curve`; `None` when the gain is affine in ε
    /// to within the fit floor.
    pub residual_slope: Option<f64>,
    /// Smallest `K` with distribution residual `≤ K ε²` on the grid.
    pub second_order_constant: f64,
}

/// Restricted chain and reward of `pi` at any real ε, including negative
/// values (used for two-sided finite differences).
pub fn perturbed_chain(spec: &SeparableSpec, pi: &Policy, epsilon: f64) -> Result<(Matrix, Vec<f64>)> {
    let n = spec.n_states();
    if pi.len() != n || pi.actions().iter().any(|&a| a >= spec.n_actions()) {
        return Err(Error::Dimension("policy does not fit the spec"));
    }
    let mut p = Matrix::zeros(n, n);
    let mut r = Vec::with_capacity(n);
    for s in 0..n {
        let a = pi.action(s);
        let base = spec.kernel_action().row(a);
        let q = spec.kernel_perturb(s, a);
        for (next, slot) in p.row_mut(s).iter_mut().enumerate() {
            let value = base[next] + epsilon * q[next];
            if value < -STOCHASTIC_TOL {
                return Err(Error::AssemblyInfeasible {
                    state: s,
                    action: a,
                    next,
                    value,
                    epsilon,
                });
            }
            *slot = value.max(0.0);
        }
        r.push(spec.reward_at(s, a, epsilon));
    }
    Ok((p, r))
}

fn not_irreducible(pi: &Policy) -> Error {
    Error::PolicyNotIrreducible(pi.actions().to_vec())
}

/// First-order expansion of the invariant distribution and gain of `pi`,
/// checked against exact re-solves over `grid`.
pub fn first_order_expansion(spec: &SeparableSpec, pi: &Policy, grid: &[f64]) -> Result<ExpansionReport> {
    let (p0, r0) = perturbed_chain(spec, pi, 0.0)?;
    if !chain::is_irreducible(&p0) {
        return Err(not_irreducible(pi));
    }
    let pi0 = chain::invariant_distribution(&p0)?;
    let (_, sharp) = chain::fundamental_and_group_inverse(&p0, &pi0)?;

    let n = spec.n_states();
    let mut q_pi = Matrix::zeros(n, n);
    let mut r_eps = Vec::with_capacity(n);
    for s in 0..n {
        let a = pi.action(s);
        q_pi.row_mut(s).copy_from_slice(spec.kernel_perturb(s, a));
        r_eps.push(spec.reward_perturb()[(s, a)]);
    }

    // Differentiating πᵋ(P⁰ + εQ) = πᵋ gives π¹(I - P⁰) = π⁰Q; since Q1 = 0 the
    // group inverse solves it as π¹ = +π⁰Q(I - P⁰)#.
    let pi1 = sharp.vec_mul(&q_pi.vec_mul(&pi0));
    let g0 = dot(&pi0, &r0);
    let g1 = dot(&pi0, &r_eps) + dot(&pi1, &r0);

    let bound = epsilon_max(spec);
    let mut residual_curve = Vec::with_capacity(grid.len());
    let mut distribution_residual_curve = Vec::with_capacity(grid.len());
    let mut second_order_constant: f64 = 0.0;
    for &eps in grid {
        if !(eps >= 0.0 && (eps == 0.0 || eps < bound)) {
            return Err(Error::EpsilonOutOfRange { epsilon: eps, bound });
        }
        let (p, r) = restrict(&spec.assemble_at(eps)?, pi)?;
        if !chain::is_irreducible(&p) {
            return Err(not_irreducible(pi));
        }
        let pi_eps = chain::invariant_distribution(&p)?;
        let g_eps = dot(&pi_eps, &r);
        let predicted: Vec<f64> = pi0.iter().zip(&pi1).map(|(a, b)| a + eps * b).collect();
        let dist = max_abs_diff(&pi_eps, &predicted);
        residual_curve.push(CurvePoint {
            epsilon: eps,
            residual: (g_eps - g0 - eps * g1).abs(),
        });
        distribution_residual_curve.push(CurvePoint {
            epsilon: eps,
            residual: dist,
        });
        if eps > 0.0 {
            second_order_constant = second_order_constant.max(dist / (eps * eps));
        }
    }
    let residual_slope = loglog_slope(residual_curve.iter().map(|c| (c.epsilon, c.residual)));

    Ok(ExpansionReport {
        policy: pi.clone(),
        pi0,
        pi1,
        g0,
        g1,
        residual_curve,
        distribution_residual_curve,
        residual_slope,
        second_order_constant,
    })
}
