//! Rayon drivers for the path ensemble and the PD cube.
//!
//! Each path draws from its own counter-keyed stream and writes to its own
//! slice, and every reduction runs afterwards in path order. The output is
//! therefore independent of the number of workers.

use climcredit_core::credit::{check_years, PdCube, RiskModel};
use climcredit_core::var_process::{PathEnsemble, PathSimulator, ThetaInit, VarParams};
use rayon::prelude::*;

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Parallel twin of `var_process::simulate_paths`; bit-identical output.
pub fn simulate_paths(
    params: &VarParams,
    init: &ThetaInit,
    horizon: usize,
    paths: usize,
    seed: u64,
) -> climcredit_core::Result<PathEnsemble> {
    let sim = PathSimulator::new(params, init)?;
    let mut ens = PathEnsemble::zeros(params.dim(), horizon, paths, seed);
    let stride = ens.stride();
    ens.theta
        .par_chunks_mut(stride)
        .zip(ens.a_circ.par_chunks_mut(stride))
        .enumerate()
        .for_each(|(m, (th, ac))| sim.simulate_into(seed, m as u64, th, ac));
    Ok(ens)
}

/// Parallel twin of `credit::pd_cube`.
pub fn pd_cube(model: &RiskModel, ens: &PathEnsemble, years: &[usize]) -> climcredit_core::Result<PdCube> {
    check_years(model, ens, years)?;
    let nf = model.portfolio.firms.len();
    let stride = years.len() * nf;
    let mut data = vec![0.0; ens.paths * stride];
    if stride > 0 {
        data.par_chunks_mut(stride)
            .enumerate()
            .for_each(|(m, chunk)| model.path_pds(ens, m, years, chunk));
    }
    Ok(PdCube {
        paths: ens.paths,
        years: years.to_vec(),
        firms: nf,
        data,
    })
}
