//! Exact analysis of finite average-reward MDPs with nearly separable
//! structure.
//!
//! A nearly separable MDP has rewards `r_S(s) + r_A(a) + ε r_ε(s,a)` and
//! kernels `P_A(·|a) + ε Q(·|s,a)`. At `ε = 0` the optimal stationary policy is
//! the constant action maximizing `π_aᵀ r_S + r_A(a)` ([`separable`]); for
//! `ε > 0` that policy stays within `2Cε` of optimal, where `C` bounds how fast
//! any policy's gain drifts with `ε` ([`perturbation`]).
//!
//! The crate is `no_std` and needs only `alloc`. Linear algebra is dense and
//! direct; [`solvers`] provides policy iteration, exhaustive enumeration and
//! relative value iteration as independent routes to the optimal gain.

#![no_std]

extern crate alloc;

pub mod chain;
pub mod error;
pub mod linalg;
pub mod mdp;
pub mod perturbation;
pub mod separable;
pub mod solvers;

pub use chain::{analyze_chain, ChainSolution};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use mdp::{assemble, epsilon_max, restrict, validate_mdp, Mdp, Policy, SeparableSpec, Violation, ViolationKind};
pub use perturbation::{
    first_order_expansion, measure_uniform_c, sample_instance, sweep, ExpansionReport, SweepReport, UniformConstant,
};
pub use separable::{acoe_residual, maximizer_profile, per_action_gain, solve_baseline, BaselineSolution};
pub use solvers::{
    brute_force, policy_evaluation, policy_iteration, relative_value_iteration, PolicySolution, RviSolution,
};
