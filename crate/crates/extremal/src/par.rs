//! Replicate runners. Results are always collected in replicate order, so
//! output does not depend on the number of worker threads.

use anyhow::Result;
use extremal_core::density::{joint_density_cells, tuple_cells, DensityGrid, DensityKind, JOINT_REL_TOL};
use extremal_core::quad::Simpson;
use extremal_core::MeasureTable;
use rayon::prelude::*;

pub fn replicates<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

pub fn try_replicates<T, E, F>(count: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Run `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => Ok(rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(f)),
    }
}

/// Joint density of the first `k ∈ {2, 3}` argmins on every cell tuple,
/// evaluated in parallel.
pub fn joint_density_grid(table: &MeasureTable, k: usize) -> Result<DensityGrid> {
    let n = table.domain().cell_count();
    let opts = Simpson::with_rel_tol(JOINT_REL_TOL);
    let values = (0..n.pow(k as u32))
        .into_par_iter()
        .map(|idx| joint_density_cells(table, &tuple_cells(n, k, idx), opts))
        .collect::<Result<Vec<f64>, _>>()?;
    let grid = DensityGrid::new(table.domain().clone(), k, DensityKind::JointArgmin(k), values)?;
    grid.check_normalized()?;
    Ok(grid)
}
