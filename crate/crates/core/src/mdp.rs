//! Flat finite MDPs, the nearly separable structured model, and stationary
//! deterministic policies.
//!
//! A [`SeparableSpec`] carries the structured pieces
//! `r(s,a) = r_S(s) + r_A(a) + ε r_ε(s,a)` and
//! `P(·|s,a) = P_A(·|a) + ε Q(·|s,a)`; [`assemble`] flattens it into an [`Mdp`].

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Absolute tolerance on row sums and entry ranges.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A finite MDP with dense reward table and transition kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    // reward[s * M + a]
    reward: Vec<f64>,
    // kernel[(s * M + a) * N + s']
    kernel: Vec<f64>,
}

impl Mdp {
    /// Builds an MDP from `reward[s][a]` and `kernel[s][a][s']`.
    ///
    /// Only shapes are checked here; use [`validate_mdp`] for the
    /// stochasticity and finiteness invariants.
    pub fn new(reward: &[Vec<f64>], kernel: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = reward.len();
        let m = reward.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::Dimension("an MDP needs at least one state and one action"));
        }
        if reward.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("reward rows must all have n_actions entries"));
        }
        if kernel.len() != n
            || kernel
                .iter()
                .any(|per_a| per_a.len() != m || per_a.iter().any(|row| row.len() != n))
        {
            return Err(Error::Dimension("kernel must be n_states x n_actions x n_states"));
        }
        Ok(Self {
            n_states: n,
            n_actions: m,
            reward: reward.iter().flatten().copied().collect(),
            kernel: kernel.iter().flatten().flatten().copied().collect(),
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    /// Next-state distribution `P(·|s,a)`.
    pub fn kernel_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.kernel[start..start + self.n_states]
    }

    /// One-step lookahead `r(s,a) + Σ_{s'} P(s'|s,a) h(s')`.
    pub fn q_value(&self, s: usize, a: usize, h: &[f64]) -> f64 {
        self.reward(s, a) + crate::linalg::dot(self.kernel_row(s, a), h)
    }

    /// Number of deterministic stationary policies, `M^N`, saturating.
    pub fn policy_count(&self) -> u128 {
        (0..self.n_states).fold(1u128, |acc, _| acc.saturating_mul(self.n_actions as u128))
    }
}

/// What went wrong in one row or entry of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "check", rename_all = "snake_case"))]
pub enum ViolationKind {
    RowSum { sum: f64, expected: f64 },
    Negative { next: usize, value: f64 },
    AboveOne { next: usize, value: f64 },
    NonFinite { next: Option<usize>, value: f64 },
    Range { value: f64 },
}

/// A single failed check, located by field and (state, action) where that applies.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Violation {
    pub field: &'static str,
    pub state: Option<usize>,
    pub action: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.field)?;
        match (self.state, self.action) {
            (Some(s), Some(a)) => write!(f, "[s={s},a={a}]")?,
            (Some(s), None) => write!(f, "[s={s}]")?,
            (None, Some(a)) => write!(f, "[a={a}]")?,
            (None, None) => {}
        }
        f.write_str(": ")?;
        match self.kind {
            ViolationKind::RowSum { sum, expected } => write!(f, "row sum {sum} ≠ {expected}"),
            ViolationKind::Negative { next, value } => write!(f, "entry {next} is negative ({value})"),
            ViolationKind::AboveOne { next, value } => write!(f, "entry {next} exceeds 1 ({value})"),
            ViolationKind::NonFinite {
                next: Some(next),
                value,
            } => {
                write!(f, "entry {next} is not finite ({value})")
            }
            ViolationKind::NonFinite { next: None, value } => write!(f, "value is not finite ({value})"),
            ViolationKind::Range { value } => write!(f, "value {value} out of range"),
        }
    }
}

fn check_row(
    out: &mut Vec<Violation>,
    field: &'static str,
    state: Option<usize>,
    action: Option<usize>,
    row: &[f64],
    expected_sum: f64,
    probability: bool,
) {
    let at = |kind| Violation {
        field,
        state,
        action,
        kind,
    };
    let mut finite = true;
    for (next, &value) in row.iter().enumerate() {
        if !value.is_finite() {
            finite = false;
            out.push(at(ViolationKind::NonFinite {
                next: Some(next),
                value,
            }));
        } else if probability && value < -STOCHASTIC_TOL {
            out.push(at(ViolationKind::Negative { next, value }));
        } else if probability && value > 1.0 + STOCHASTIC_TOL {
            out.push(at(ViolationKind::AboveOne { next, value }));
        }
    }
    if finite {
        let sum: f64 = row.iter().sum();
        if (sum - expected_sum).abs() > STOCHASTIC_TOL {
            out.push(at(ViolationKind::RowSum {
                sum,
                expected: expected_sum,
            }));
        }
    }
}

fn check_finite(
    out: &mut Vec<Violation>,
    field: &'static str,
    state: Option<usize>,
    action: Option<usize>,
    value: f64,
) {
    if !value.is_finite() {
        out.push(Violation {
            field,
            state,
            action,
            kind: ViolationKind::NonFinite { next: None, value },
        });
    }
}

/// Checks every kernel row and reward entry; an empty report means the MDP is valid.
pub fn validate_mdp(m: &Mdp) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in 0..m.n_states() {
        for a in 0..m.n_actions() {
            check_finite(&mut out, "reward", Some(s), Some(a), m.reward(s, a));
            check_row(&mut out, "kernel", Some(s), Some(a), m.kernel_row(s, a), 1.0, true);
        }
    }
    out
}

/// The nearly separable model: separable baseline plus ε-scaled perturbations.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSpec {
    r_state: Vec<f64>,
    r_action: Vec<f64>,
    // M x N
    kernel_action: Matrix,
    epsilon: f64,
    // N x M
    reward_perturb: Matrix,
    // (s * M + a) * N + s'
    kernel_perturb: Vec<f64>,
}

impl SeparableSpec {
    /// Builds and validates a spec. `reward_perturb` is `N x M`,
    /// `kernel_perturb` is `N x M x N`; `None` means all-zero.
    pub fn new(
        r_state: Vec<f64>,
        r_action: Vec<f64>,
        kernel_action: Matrix,
        epsilon: f64,
        reward_perturb: Option<Matrix>,
        kernel_perturb: Option<Vec<Vec<Vec<f64>>>>,
    ) -> Result<Self> {
        let n = r_state.len();
        let m = r_action.len();
        if n == 0 || m == 0 {
            return Err(Error::Dimension("a spec needs at least one state and one action"));
        }
        if kernel_action.rows() != m || kernel_action.cols() != n {
            return Err(Error::Dimension("kernel_action must be n_actions x n_states"));
        }
        let reward_perturb = reward_perturb.unwrap_or_else(|| Matrix::zeros(n, m));
        if reward_perturb.rows() != n || reward_perturb.cols() != m {
            return Err(Error::Dimension("reward_perturb must be n_states x n_actions"));
        }
        let kernel_perturb = match kernel_perturb {
            None => vec![0.0; n * m * n],
            Some(q) => {
                if q.len() != n
                    || q.iter()
                        .any(|per_a| per_a.len() != m || per_a.iter().any(|row| row.len() != n))
                {
                    return Err(Error::Dimension(
                        "kernel_perturb must be n_states x n_actions x n_states",
                    ));
                }
                q.into_iter().flatten().flatten().collect()
            }
        };
        let spec = Self {
            r_state,
            r_action,
            kernel_action,
            epsilon,
            reward_perturb,
            kernel_perturb,
        };
        let violations = spec.validate();
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Invalid(violations))
        }
    }

    /// The totally separable case: no perturbation terms, ε = 0.
    pub fn separable(r_state: Vec<f64>, r_action: Vec<f64>, kernel_action: Matrix) -> Result<Self> {
        Self::new(r_state, r_action, kernel_action, 0.0, None, None)
    }

    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (s, &v) in self.r_state.iter().enumerate() {
            check_finite(&mut out, "r_state", Some(s), None, v);
        }
        for (a, &v) in self.r_action.iter().enumerate() {
            check_finite(&mut out, "r_action", None, Some(a), v);
        }
        for a in 0..self.n_actions() {
            check_row(
                &mut out,
                "kernel_action",
                None,
                Some(a),
                self.kernel_action.row(a),
                1.0,
                true,
            );
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            out.push(Violation {
                field: "epsilon",
                state: None,
                action: None,
                kind: ViolationKind::Range { value: self.epsilon },
            });
        }
        for s in 0..self.n_states() {
            for a in 0..self.n_actions() {
                check_finite(
                    &mut out,
                    "reward_perturb",
                    Some(s),
                    Some(a),
                    self.reward_perturb[(s, a)],
                );
                check_row(
                    &mut out,
                    "kernel_perturb",
                    Some(s),
                    Some(a),
                    self.kernel_perturb(s, a),
                    0.0,
                    false,
                );
            }
        }
        out
    }

    pub fn n_states(&self) -> usize {
        self.r_state.len()
    }

    pub fn n_actions(&self) -> usize {
        self.r_action.len()
    }

    pub fn r_state(&self) -> &[f64] {
        &self.r_state
    }

    pub fn r_action(&self) -> &[f64] {
        &self.r_action
    }

    pub fn kernel_action(&self) -> &Matrix {
        &self.kernel_action
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn reward_perturb(&self) -> &Matrix {
        &self.reward_perturb
    }

    /// `Q(·|s,a)`.
    pub fn kernel_perturb(&self, s: usize, a: usize) -> &[f64] {
        let n = self.n_states();
        let start = (s * self.n_actions() + a) * n;
        &self.kernel_perturb[start..start + n]
    }

    /// The kernel perturbation as nested `[s][a][s']` vectors.
    pub fn kernel_perturb_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.n_states();
        self.kernel_perturb
            .chunks_exact(n * self.n_actions())
            .map(|per_s| per_s.chunks_exact(n).map(<[f64]>::to_vec).collect())
            .collect()
    }

    pub fn is_unperturbed(&self) -> bool {
        self.kernel_perturb.iter().all(|&q| q == 0.0) && self.reward_perturb.max_abs() == 0.0
    }

    /// Same model with a different ε.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Invalid(vec![Violation {
                field: "epsilon",
                state: None,
                action: None,
                kind: ViolationKind::Range { value: epsilon },
            }]));
        }
        let mut spec = self.clone();
        spec.epsilon = epsilon;
        Ok(spec)
    }

    /// Flat MDP at `epsilon`, leaving `self` untouched.
    pub fn assemble_at(&self, epsilon: f64) -> Result<Mdp> {
        assemble(&self.with_epsilon(epsilon)?)
    }

    /// Reward `r(s,a)` at a given ε (any sign).
    pub(crate) fn reward_at(&self, s: usize, a: usize, epsilon: f64) -> f64 {
        self.r_state[s] + self.r_action[a] + epsilon * self.reward_perturb[(s, a)]
    }
}

/// Flattens a spec into `r = r_S + r_A + ε r_ε`, `P = P_A + ε Q`.
pub fn assemble(spec: &SeparableSpec) -> Result<Mdp> {
    let n = spec.n_states();
    let m = spec.n_actions();
    let eps = spec.epsilon();
    let mut reward = Vec::with_capacity(n * m);
    let mut kernel = Vec::with_capacity(n * m * n);
    for s in 0..n {
        for a in 0..m {
            reward.push(spec.reward_at(s, a, eps));
            let base = spec.kernel_action().row(a);
            for (next, (&p, &q)) in base.iter().zip(spec.kernel_perturb(s, a)).enumerate() {
                let value = if eps == 0.0 { p } else { p + eps * q };
                if value < -STOCHASTIC_TOL {
                    return Err(Error::AssemblyInfeasible {
                        state: s,
                        action: a,
                        next,
                        value,
                        epsilon: eps,
                    });
                }
                kernel.push(value.max(0.0));
            }
        }
    }
    Ok(Mdp {
        n_states: n,
        n_actions: m,
        reward,
        kernel,
    })
}

/// Largest ε ≥ 0 keeping every `P_A(s'|a) + ε Q(s'|s,a)` nonnegative;
/// `f64::INFINITY` when no entry of `Q` is negative.
pub fn epsilon_max(spec: &SeparableSpec) -> f64 {
    let mut bound = f64::INFINITY;
    for s in 0..spec.n_states() {
        for a in 0..spec.n_actions() {
            let base = spec.kernel_action().row(a);
            for (&p, &q) in base.iter().zip(spec.kernel_perturb(s, a)) {
                if q < 0.0 {
                    bound = bound.min(p.max(0.0) / -q);
                }
            }
        }
    }
    bound
}

/// A deterministic stationary policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(transparent))]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn new(actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Dimension("a policy needs at least one state"));
        }
        if actions.iter().any(|&a| a >= n_actions) {
            return Err(Error::Dimension("policy action index out of range"));
        }
        Ok(Self(actions))
    }

    pub fn constant(n_states: usize, action: usize) -> Self {
        Self(vec![action; n_states])
    }

    /// Decodes the `index`-th policy in lexicographic order (state 0 most significant).
    pub fn from_index(mut index: u128, n_states: usize, n_actions: usize) -> Self {
        let mut actions = vec![0; n_states];
        for slot in actions.iter_mut().rev() {
            *slot = (index % n_actions as u128) as usize;
            index /= n_actions as u128;
        }
        Self(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    /// `Some(a)` if every state uses action `a`.
    pub fn constant_action(&self) -> Option<usize> {
        let first = *self.0.first()?;
        self.0.iter().all(|&a| a == first).then_some(first)
    }

    pub fn is_valid_for(&self, m: &Mdp) -> bool {
        self.0.len() == m.n_states() && self.0.iter().all(|&a| a < m.n_actions())
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// Transition matrix and reward vector of the chain induced by `pi`.
pub fn restrict(m: &Mdp, pi: &Policy) -> Result<(Matrix, Vec<f64>)> {
    if !pi.is_valid_for(m) {
        return Err(Error::Dimension("policy does not fit the MDP"));
    }
    let n = m.n_states();
    let mut p = Matrix::zeros(n, n);
    let mut r = Vec::with_capacity(n);
    for s in 0..n {
        let a = pi.action(s);
        p.row_mut(s).copy_from_slice(m.kernel_row(s, a));
        r.push(m.reward(s, a));
    }
    Ok((p, r))
}
