//! First-order perturbation analysis of the nearly separable model.
//!
//! For a fixed policy with unperturbed chain `P⁰` and invariant distribution
//! `π⁰`, perturbing the kernel to `P⁰ + εQ` moves the invariant distribution by
//!
//! ```text
//! π¹ = π⁰ Q (I - P⁰)#
//! ```
//!
//! to first order, and the gain by `g¹ = π⁰ r_ε + π¹ r⁰`. Summed over the
//! finitely many policies, the per-policy drift `|gᵋ - g⁰| / ε` is bounded
//! by a uniform constant `C`, which in turn bounds the optimality gap of the
//! separable baseline policy by `2Cε`.

mod expansion;
mod sampler;
mod sweep;

pub use expansion::{first_order_expansion, perturbed_chain, CurvePoint, ExpansionReport};
pub use sampler::{entry_floor, sample_instance, unit};
pub use sweep::{
    measure_uniform_c, measure_uniform_c_with, sweep, sweep_point, SweepPoint, SweepReport, UniformConstant,
    DEFAULT_POLICY_SAMPLES, SOLVER_AGREEMENT_TOL,
};

/// Points with a residual at or below this are left out of log-log fits.
pub const FIT_FLOOR: f64 = 1e-12;

/// Least-squares slope of `ln y` against `ln x` over points with `x > 0` and
/// `y > FIT_FLOOR`; `None` with fewer than two usable points.
pub fn loglog_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in points {
        if x > 0.0 && y > FIT_FLOOR {
            let (lx, ly) = (libm::log(x), libm::log(y));
            n += 1.0;
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
    }
    let denom = n * sxx - sx * sx;
    if n < 2.0 || denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}
