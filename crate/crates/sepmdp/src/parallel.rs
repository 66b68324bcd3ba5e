//! Sweep points are independent, so they are evaluated on a rayon pool and
//! merged back in grid order.

use rayon::prelude::*;
use sepmdp_core::perturbation::{sweep_point, SweepPoint};
use sepmdp_core::{epsilon_max, solve_baseline, Error, SeparableSpec, SweepReport};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SEPMDP_THREADS";

fn pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Same result as [`sepmdp_core::sweep`], with ε values evaluated concurrently.
pub fn par_sweep(spec: &SeparableSpec, epsilons: &[f64]) -> Result<SweepReport, Error> {
    let bound = epsilon_max(spec);
    if let Some(&bad) = epsilons.iter().find(|&&e| !(e >= 0.0 && (e == 0.0 || e < bound))) {
        return Err(Error::EpsilonOutOfRange { epsilon: bad, bound });
    }
    let baseline = solve_baseline(spec)?;
    let points = pool().install(|| {
        epsilons
            .par_iter()
            .map(|&e| sweep_point(spec, &baseline, e))
            .collect::<Result<Vec<SweepPoint>, Error>>()
    })?;
    SweepReport::from_points(spec, &baseline, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sepmdp_core::perturbation::sample_instance;

    #[test]
    fn matches_sequential_sweep() {
        let spec = sample_instance(3, 3, 2, 0.5).unwrap();
        let grid = [0.0, 1e-3, 1e-2, 5e-2];
        assert_eq!(
            par_sweep(&spec, &grid).unwrap(),
            sepmdp_core::sweep(&spec, &grid).unwrap()
        );
    }
}
