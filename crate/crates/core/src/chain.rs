//! Exact analysis of a single finite Markov chain: structural irreducibility,
//! the invariant distribution, the fundamental matrix and group inverse of
//! `I - P`, and the Poisson (bias) equation.
//!
//! Everything is a dense direct solve. With `π` the invariant distribution,
//!
//! ```text
//! Z   = (I - P + 1πᵀ)⁻¹
//! A#  = Z - 1πᵀ            (group inverse of A = I - P)
//! h   = A# (r - g1)        (bias, normalized so πᵀh = 0)
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs, Lu, Matrix};

/// Entries at or below this are treated as missing edges.
pub const EDGE_THRESHOLD: f64 = 1e-14;
/// Orthogonality tolerance for the Poisson right-hand side.
pub const COMPATIBILITY_TOL: f64 = 1e-9;
const NEGATIVE_MASS_TOL: f64 = 1e-12;

/// Invariant distribution, gain, bias and generalized inverses of one chain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ChainSolution {
    pub invariant: Vec<f64>,
    pub gain: f64,
    pub bias: Vec<f64>,
    pub group_inverse: Matrix,
    pub fundamental: Matrix,
}

fn reaches_all(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !seen[v] && edge(u, v) {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Strong connectivity of the graph with an edge `s -> s'` whenever
/// `P(s'|s) > 1e-14`.
pub fn is_irreducible(p: &Matrix) -> bool {
    let n = p.rows();
    if n == 0 || !p.is_square() {
        return false;
    }
    reaches_all(n, |u, v| p[(u, v)] > EDGE_THRESHOLD) && reaches_all(n, |u, v| p[(v, u)] > EDGE_THRESHOLD)
}

/// Solves `πᵀP = πᵀ`, `πᵀ1 = 1` by replacing one equation of `(I - Pᵀ)π = 0`
/// with the normalization.
pub fn invariant_distribution(p: &Matrix) -> Result<Vec<f64>> {
    if !p.is_square() {
        return Err(Error::Dimension("transition matrix must be square"));
    }
    let n = p.rows();
    let mut a = Matrix::identity(n).sub(&p.transpose());
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut pi = Lu::factor(&a)?.solve(&rhs);

    if pi.iter().any(|x| !x.is_finite() || *x < -NEGATIVE_MASS_TOL) {
        return Err(Error::SingularSystem);
    }
    if pi.iter().any(|&x| x < 0.0) {
        pi.iter_mut().for_each(|x| *x = x.max(0.0));
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= total);
    }
    Ok(pi)
}

/// Returns `(Z, A#)` for `A = I - P`.
pub fn fundamental_and_group_inverse(p: &Matrix, invariant: &[f64]) -> Result<(Matrix, Matrix)> {
    let n = p.rows();
    if !p.is_square() || invariant.len() != n {
        return Err(Error::Dimension("chain and invariant distribution sizes differ"));
    }
    let ones = vec![1.0; n];
    let limit = Matrix::outer(&ones, invariant);
    let z = Matrix::identity(n).sub(p).add(&limit).inverse()?;
    let sharp = z.sub(&limit);
    Ok((z, sharp))
}

/// `πᵀ r`.
pub fn gain(r: &[f64], invariant: &[f64]) -> f64 {
    dot(invariant, r)
}

/// Bias `h = A# (r - g1)` from a precomputed group inverse.
pub fn solve_poisson_with(group_inverse: &Matrix, r: &[f64], invariant: &[f64], g: f64) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = r.iter().map(|x| x - g).collect();
    let defect = dot(invariant, &rhs);
    if defect.abs() > COMPATIBILITY_TOL {
        return Err(Error::CompatibilityViolation { defect });
    }
    Ok(group_inverse.mul_vec(&rhs))
}

/// Solves `(I - P) h = r - g1` with `πᵀh = 0`.
pub fn solve_poisson(p: &Matrix, r: &[f64], invariant: &[f64], g: f64) -> Result<Vec<f64>> {
    let (_, sharp) = fundamental_and_group_inverse(p, invariant)?;
    solve_poisson_with(&sharp, r, invariant, g)
}

pub fn analyze_chain(p: &Matrix, r: &[f64]) -> Result<ChainSolution> {
    if p.rows() != r.len() {
        return Err(Error::Dimension("reward vector length differs from chain size"));
    }
    if !is_irreducible(p) {
        return Err(Error::NotIrreducible);
    }
    let invariant = invariant_distribution(p)?;
    let (fundamental, group_inverse) = fundamental_and_group_inverse(p, &invariant)?;
    let g = gain(r, &invariant);
    let bias = solve_poisson_with(&group_inverse, r, &invariant, g)?;
    Ok(ChainSolution {
        invariant,
        gain: g,
        bias,
        group_inverse,
        fundamental,
    })
}

/// Max-norm of `(I - P) h - (r - g1)`.
pub fn poisson_residual(p: &Matrix, r: &[f64], g: f64, h: &[f64]) -> f64 {
    let ph = p.mul_vec(h);
    let res: Vec<f64> = (0..h.len()).map(|s| h[s] - ph[s] - (r[s] - g)).collect();
    max_abs(&res)
}

/// The three defining identities of the group inverse for `A = I - P`,
/// as max-norms of `A A# A - A`, `A# A A# - A#`, `A A# - A# A`.
pub fn group_inverse_defects(p: &Matrix, sharp: &Matrix) -> [f64; 3] {
    let a = Matrix::identity(p.rows()).sub(p);
    let a_s = a.matmul(sharp);
    let s_a = sharp.matmul(&a);
    [
        a_s.matmul(&a).sub(&a).max_abs(),
        s_a.matmul(sharp).sub(sharp).max_abs(),
        a_s.sub(&s_a).max_abs(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn worked() -> Matrix {
        m(&[&[0.9, 0.1], &[0.2, 0.8]])
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&m(&[&[0.0, 1.0], &[1.0, 0.0]])));
        assert!(!is_irreducible(&m(&[&[1.0, 0.0], &[0.0, 1.0]])));
        assert!(!is_irreducible(&m(&[&[0.5, 0.5], &[0.0, 1.0]])));
        assert!(is_irreducible(&m(&[&[1.0]])));
    }

    #[test]
    fn tiny_entries_are_not_edges() {
        assert!(!is_irreducible(&m(&[&[1.0 - 1e-15, 1e-15], &[1e-15, 1.0 - 1e-15]])));
    }

    #[test]
    fn invariant_examples() {
        let uniform = invariant_distribution(&m(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert!(max_abs_diff(&uniform, &[0.5, 0.5]) < 1e-15);

        // By hand: 0.1 π0 = 0.2 π1 and π0 + π1 = 1.
        let pi = invariant_distribution(&worked()).unwrap();
        assert!(max_abs_diff(&pi, &[2.0 / 3.0, 1.0 / 3.0]) < 1e-14);

        let cycle = invariant_distribution(&m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]])).unwrap();
        assert!(max_abs_diff(&cycle, &[1.0 / 3.0; 3]) < 1e-15);
    }

    #[test]
    fn reducible_chain_is_singular() {
        let err = invariant_distribution(&m(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap_err();
        assert_eq!(err, Error::SingularSystem);
    }

    #[test]
    fn rank_one_group_inverse_is_i_minus_p() {
        let p = m(&[&[0.3, 0.7], &[0.3, 0.7]]);
        let pi = invariant_distribution(&p).unwrap();
        let (_, sharp) = fundamental_and_group_inverse(&p, &pi).unwrap();
        let a = Matrix::identity(2).sub(&p);
        assert!(sharp.sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn single_state_chain() {
        let p = m(&[&[1.0]]);
        let (z, sharp) = fundamental_and_group_inverse(&p, &[1.0]).unwrap();
        assert_eq!(z.to_rows(), vec![vec![1.0]]);
        assert_eq!(sharp.to_rows(), vec![vec![0.0]]);
    }

    #[test]
    fn worked_group_inverse_identities() {
        let p = worked();
        let pi = invariant_distribution(&p).unwrap();
        let (_, sharp) = fundamental_and_group_inverse(&p, &pi).unwrap();
        for d in group_inverse_defects(&p, &sharp) {
            assert!(d < 1e-8, "defect {d}");
        }
    }

    #[test]
    fn gain_examples() {
        let p = worked();
        let pi = invariant_distribution(&p).unwrap();
        assert!((gain(&[3.5, 3.5], &pi) - 3.5).abs() < 1e-15);
        assert!((gain(&[1.0, 0.0], &pi) - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(gain(&[1.0, 0.0], &[0.5, 0.5]), 0.5);
    }

    #[test]
    fn poisson_examples() {
        let p = worked();
        let pi = invariant_distribution(&p).unwrap();

        let h = solve_poisson(&p, &[2.0, 2.0], &pi, 2.0).unwrap();
        assert!(max_abs(&h) < 1e-15);

        let rank_one = m(&[&[0.25, 0.75], &[0.25, 0.75]]);
        let r = [4.0, -1.0];
        let g = 0.25 * 4.0 - 0.75;
        let h = solve_poisson(&rank_one, &r, &[0.25, 0.75], g).unwrap();
        assert!(max_abs_diff(&h, &[4.0 - g, -1.0 - g]) < 1e-14);

        let h = solve_poisson(&p, &[1.0, 0.0], &pi, 2.0 / 3.0).unwrap();
        assert!(poisson_residual(&p, &[1.0, 0.0], 2.0 / 3.0, &h) < 1e-10);
        assert!(dot(&pi, &h).abs() < 1e-12);
    }

    #[test]
    fn wrong_gain_is_incompatible() {
        let p = worked();
        let pi = invariant_distribution(&p).unwrap();
        assert!(matches!(
            solve_poisson(&p, &[1.0, 0.0], &pi, 0.5),
            Err(Error::CompatibilityViolation { .. })
        ));
    }

    #[test]
    fn analyze_rejects_reducible() {
        assert_eq!(
            analyze_chain(&m(&[&[0.5, 0.5], &[0.0, 1.0]]), &[0.0, 0.0]).unwrap_err(),
            Error::NotIrreducible
        );
    }
}
