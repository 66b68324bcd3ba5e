use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chain;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::mdp::{epsilon_max, Policy, SeparableSpec};
use crate::separable::{solve_baseline, BaselineSolution};
use crate::solvers::{brute_force_capped, evaluate_gain, policy_iteration, DEFAULT_ENUMERATION_CAP};

use super::expansion::{first_order_expansion, perturbed_chain};
use super::loglog_slope;
use super::sampler::below;

/// Policies drawn when `M^N` exceeds the enumeration cap.
pub const DEFAULT_POLICY_SAMPLES: u64 = 10_000;
/// Policy iteration and brute force must agree on `g*_ε` to this.
pub const SOLVER_AGREEMENT_TOL: f64 = 1e-8;
/// A fixed policy may not beat the computed optimum by more than this.
const OPTIMALITY_SLACK: f64 = 1e-10;
const SAMPLE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UniformConstant {
    /// `max_π |g_πᵋ - g_π⁰| / ε`.
    pub value: f64,
    pub policies_evaluated: u64,
    /// True when policies were sampled instead of enumerated.
    pub sampled: bool,
    pub maximizer: Policy,
}

fn policy_gain(spec: &SeparableSpec, pi: &Policy, epsilon: f64) -> Result<f64> {
    let (p, r) = perturbed_chain(spec, pi, epsilon)?;
    if !chain::is_irreducible(&p) {
        return Err(Error::PolicyNotIrreducible(pi.actions().to_vec()));
    }
    Ok(dot(&chain::invariant_distribution(&p)?, &r))
}

/// Uniform perturbation constant at `epsilon` over all policies, or over a
/// seeded random sample when `M^N` exceeds the default cap.
pub fn measure_uniform_c(spec: &SeparableSpec, epsilon: f64) -> Result<UniformConstant> {
    measure_uniform_c_with(spec, epsilon, DEFAULT_ENUMERATION_CAP, DEFAULT_POLICY_SAMPLES)
}

pub fn measure_uniform_c_with(spec: &SeparableSpec, epsilon: f64, cap: u64, samples: u64) -> Result<UniformConstant> {
    let (n, m) = (spec.n_states(), spec.n_actions());
    let count = (0..n).fold(1u128, |acc, _| acc.saturating_mul(m as u128));
    let sampled = count > cap as u128;

    let mut best = UniformConstant {
        value: 0.0,
        policies_evaluated: 0,
        sampled,
        maximizer: Policy::constant(n, 0),
    };
    let mut visit = |pi: Policy| -> Result<()> {
        best.policies_evaluated += 1;
        if epsilon > 0.0 {
            let drift = (policy_gain(spec, &pi, epsilon)? - policy_gain(spec, &pi, 0.0)?).abs() / epsilon;
            if drift > best.value {
                best.value = drift;
                best.maximizer = pi;
            }
        }
        Ok(())
    };

    if sampled {
        // Constant policies always take part; the rest are drawn at random.
        for a in 0..m {
            visit(Policy::constant(n, a))?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        for _ in 0..samples {
            let actions = (0..n).map(|_| below(&mut rng, m)).collect();
            visit(Policy::new(actions, m)?)?;
        }
    } else {
        for index in 0..count {
            visit(Policy::from_index(index, n, m))?;
        }
    }
    Ok(best)
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepPoint {
    pub epsilon: f64,
    pub optimal_gain: f64,
    pub fixed_policy_gain: f64,
    pub gap: f64,
    pub optimal_policy: Policy,
    /// Uniform constant measured at this ε (zero at ε = 0).
    pub uniform_c: f64,
    pub uniform_c_sampled: bool,
    pub brute_force_checked: bool,
}

fn check_epsilon(epsilon: f64, bound: f64) -> Result<()> {
    if epsilon >= 0.0 && (epsilon == 0.0 || epsilon < bound) {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange { epsilon, bound })
    }
}

/// Optimal gain, baseline-policy gain and gap at one ε.
pub fn sweep_point(spec: &SeparableSpec, baseline: &BaselineSolution, epsilon: f64) -> Result<SweepPoint> {
    check_epsilon(epsilon, epsilon_max(spec))?;
    let m = spec.assemble_at(epsilon)?;
    let optimum = policy_iteration(&m, &baseline.policy)?;

    let brute_force_checked = m.policy_count() <= DEFAULT_ENUMERATION_CAP as u128;
    if brute_force_checked {
        let bf = brute_force_capped(&m, DEFAULT_ENUMERATION_CAP)?;
        let difference = (bf.gain - optimum.gain).abs();
        if difference > SOLVER_AGREEMENT_TOL {
            return Err(Error::CrossCheck {
                what: "policy iteration and brute force optimal gains",
                difference,
            });
        }
    }

    let fixed_policy_gain = evaluate_gain(&m, &baseline.policy)?;
    let gap = optimum.gain - fixed_policy_gain;
    if gap < -OPTIMALITY_SLACK {
        return Err(Error::CrossCheck {
            what: "optimal gain and baseline policy gain",
            difference: gap,
        });
    }
    let c = measure_uniform_c(spec, epsilon)?;

    Ok(SweepPoint {
        epsilon,
        optimal_gain: optimum.gain,
        fixed_policy_gain,
        gap,
        optimal_policy: optimum.policy,
        uniform_c: c.value,
        uniform_c_sampled: c.sampled,
        brute_force_checked,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepReport {
    pub best_action: usize,
    pub baseline_gain: f64,
    /// `None` when the kernel perturbation never pushes an entry negative.
    pub epsilon_max: Option<f64>,
    pub epsilons: Vec<f64>,
    pub optimal_gain: Vec<f64>,
    pub fixed_policy_gain: Vec<f64>,
    pub gap: Vec<f64>,
    /// Log-log slope of the gap over points with `gap > 1e-12`.
    pub gap_slope: Option<f64>,
    /// Log-log slope of the baseline policy's second-order gain residual.
    pub expansion_slope: Option<f64>,
    /// Largest per-ε uniform constant over the swept ε > 0.
    pub uniform_c: f64,
    pub uniform_c_sampled: bool,
    pub brute_force_checked: bool,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    /// Assembles a report from per-ε points (in the order given).
    pub fn from_points(spec: &SeparableSpec, baseline: &BaselineSolution, points: Vec<SweepPoint>) -> Result<Self> {
        let positive: Vec<f64> = points.iter().map(|p| p.epsilon).filter(|&e| e > 0.0).collect();
        let expansion_slope = if positive.is_empty() {
            None
        } else {
            first_order_expansion(spec, &baseline.policy, &positive)?.residual_slope
        };
        let bound = epsilon_max(spec);
        Ok(Self {
            best_action: baseline.best_action,
            baseline_gain: baseline.gain,
            epsilon_max: bound.is_finite().then_some(bound),
            epsilons: points.iter().map(|p| p.epsilon).collect(),
            optimal_gain: points.iter().map(|p| p.optimal_gain).collect(),
            fixed_policy_gain: points.iter().map(|p| p.fixed_policy_gain).collect(),
            gap: points.iter().map(|p| p.gap).collect(),
            gap_slope: loglog_slope(points.iter().map(|p| (p.epsilon, p.gap))),
            expansion_slope,
            uniform_c: points.iter().map(|p| p.uniform_c).fold(0.0, f64::max),
            uniform_c_sampled: points.iter().any(|p| p.uniform_c_sampled),
            brute_force_checked: points.iter().all(|p| p.brute_force_checked),
            points,
        })
    }
}

/// Gap of the separable baseline policy across `epsilons`.
pub fn sweep(spec: &SeparableSpec, epsilons: &[f64]) -> Result<SweepReport> {
    let bound = epsilon_max(spec);
    for &e in epsilons {
        check_epsilon(e, bound)?;
    }
    let baseline = solve_baseline(spec)?;
    let points = epsilons
        .iter()
        .map(|&e| sweep_point(spec, &baseline, e))
        .collect::<Result<Vec<_>>>()?;
    SweepReport::from_points(spec, &baseline, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use alloc::vec;

    fn spec_with(
        reward_perturb: Option<Matrix>,
        kernel_perturb: Option<Vec<Vec<Vec<f64>>>>,
        kernels: Matrix,
    ) -> SeparableSpec {
        SeparableSpec::new(
            vec![1.0, -0.5, 0.25],
            vec![0.1, 0.0],
            kernels,
            0.0,
            reward_perturb,
            kernel_perturb,
        )
        .unwrap()
    }

    fn kernels() -> Matrix {
        Matrix::from_rows(&[[0.2, 0.3, 0.5], [0.6, 0.3, 0.1]]).unwrap()
    }

    #[test]
    fn null_perturbation_has_zero_constant() {
        let spec = spec_with(None, None, kernels());
        let c = measure_uniform_c(&spec, 1e-2).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.policies_evaluated, 8);
        assert!(!c.sampled);
    }

    #[test]
    fn constant_reward_perturbation() {
        let spec = spec_with(Some(Matrix::from_rows(&[[-0.7; 2]; 3]).unwrap()), None, kernels());
        let c = measure_uniform_c(&spec, 1e-3).unwrap();
        assert!((c.value - 0.7).abs() < 1e-9);
    }

    #[test]
    fn sampling_fallback_is_flagged() {
        let spec = spec_with(Some(Matrix::from_rows(&[[0.3, -0.2]; 3]).unwrap()), None, kernels());
        let c = measure_uniform_c_with(&spec, 1e-3, 4, 20).unwrap();
        assert!(c.sampled);
        assert_eq!(c.policies_evaluated, 22);
        assert!(c.value > 0.0);
    }

    #[test]
    fn gap_vanishes_at_zero() {
        let spec = spec_with(Some(Matrix::from_rows(&[[0.3, -0.2]; 3]).unwrap()), None, kernels());
        let rep = sweep(&spec, &[0.0]).unwrap();
        assert!(rep.gap[0].abs() <= 1e-9);
        assert_eq!(rep.gap_slope, None);
        assert_eq!(rep.epsilon_max, None);
    }

    #[test]
    fn state_only_reward_perturbation_with_shared_kernel() {
        // All actions share one kernel and r_ε depends on the state only, so
        // every policy's gain moves by the same amount.
        let shared = Matrix::from_rows(&[[0.2, 0.3, 0.5], [0.2, 0.3, 0.5]]).unwrap();
        let r_eps = Matrix::from_rows(&[[0.9, 0.9], [-0.4, -0.4], [0.3, 0.3]]).unwrap();
        let spec = spec_with(Some(r_eps), None, shared);
        let rep = sweep(&spec, &[0.0, 1e-3, 1e-2, 1e-1, 0.5]).unwrap();
        assert!(rep.gap.iter().all(|g| g.abs() <= 1e-9));
    }

    #[test]
    fn out_of_range_epsilon() {
        let q = vec![
            vec![vec![0.0, 0.5, -0.5], vec![0.0, 0.0, 0.0]],
            vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
            vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
        ];
        let spec = spec_with(None, Some(q), kernels());
        assert_eq!(
            sweep(&spec, &[0.1, 1.0]).unwrap_err(),
            Error::EpsilonOutOfRange {
                epsilon: 1.0,
                bound: 1.0
            }
        );
    }
}
