//! Parallel path loop.
//!
//! Paths are independent and seeded by index, so the pool only changes who
//! computes a path, never its value. Records are gathered in path order and
//! reduced sequentially, which keeps outputs bit-identical for any thread
//! count.

use cmt_core::engine::{PathRecord, PricingPlan, PricingResult};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{CliError, CliResult};

pub fn thread_pool(threads: Option<usize>) -> CliResult<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::validation(format!("cannot start worker threads: {e}")))
}

/// Simulates `n_paths` paths of every fixing of `plan`. On failure the error of
/// the lowest failing path is reported.
pub fn simulate(pool: &ThreadPool, plan: &PricingPlan, n_paths: usize) -> CliResult<Vec<Vec<PathRecord>>> {
    pool.install(|| {
        plan.engines()
            .map(|engine| {
                let results: Vec<_> = (0..n_paths as u64).into_par_iter().map(|p| engine.simulate_path(p)).collect();
                results.into_iter().collect::<Result<Vec<_>, _>>().map_err(CliError::from)
            })
            .collect()
    })
}

pub fn price(pool: &ThreadPool, plan: &PricingPlan) -> CliResult<PricingResult> {
    let records = simulate(pool, plan, plan.n_paths())?;
    Ok(plan.assemble(&records)?)
}
