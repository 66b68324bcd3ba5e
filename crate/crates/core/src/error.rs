use alloc::vec::Vec;

use thiserror::Error;

use crate::mdp::Violation;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model failed validation ({} violation(s))", .0.len())]
    Invalid(Vec<Violation>),

    #[error("assembled kernel entry P({next}|{state},{action}) = {value:e} is negative at epsilon = {epsilon}")]
    AssemblyInfeasible {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
        epsilon: f64,
    },

    #[error("epsilon {epsilon} is outside the feasible range [0, {bound})")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },

    #[error("transition matrix is not irreducible")]
    NotIrreducible,

    #[error("action kernel(s) {0:?} are not irreducible")]
    ActionsNotIrreducible(Vec<usize>),

    #[error("policy {0:?} induces a chain that is not irreducible")]
    PolicyNotIrreducible(Vec<usize>),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("Poisson right-hand side is not orthogonal to the invariant distribution (defect {defect:e})")]
    CompatibilityViolation { defect: f64 },

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: u64 },

    #[error("{policies} policies exceed the enumeration cap of {cap}")]
    CapExceeded { policies: u128, cap: u64 },

    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),

    #[error("cross-check failed: {what} differ by {difference:e}")]
    CrossCheck { what: &'static str, difference: f64 },
}
