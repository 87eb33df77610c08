use crate::config::{Quantity, SweepConfig};
use crate::run::solve_pair;
use crate::{output, CliError};
use log::{info, warn};
use polaron_nm::{blp_measure, decay_time, Averaging, KernelTables64, Method};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major over `(axis1, axis2)`, NaN where the cell failed.
    pub values: Vec<f64>,
    /// Measure over `[0, T/2]`, same layout; empty for `tau_d` sweeps.
    pub half_horizon: Vec<f64>,
    pub failures: Vec<(usize, usize, String)>,
}

/// Seed of cell `index`, drawn from its own stream of the master generator.
pub fn cell_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

fn evaluate(cfg: &SweepConfig, v1: f64, v2: f64, seed: Option<u64>) -> Result<(f64, f64), CliError> {
    let mut run = cfg.cell_config(v1, v2)?;
    if let (Some(s), Averaging::MonteCarlo { seed: cell, .. }) = (seed, &mut run.solver.averaging) {
        *cell = s;
    }
    let horizon = run.solver.horizon();
    let method = match cfg.quantity {
        Quantity::TauD => {
            let fit = decay_time(&run.bath, horizon, run.solver.step())?;
            return Ok((fit.tau_d.log10(), f64::NAN));
        }
        Quantity::BlpNz => Method::Nz,
        Quantity::BlpTcl => Method::Tcl,
    };
    let tables = KernelTables64::new(&run.bath, &run.sys, &run.noise_or_silent(), &run.solver)?;
    let (_, d) = solve_pair(&tables, method, run.solver.averaging)?;
    let full = blp_measure(&d)?.measure;
    let half = blp_measure(&d.truncated(horizon / 2.0))?.measure;
    Ok((full, half))
}

/// Evaluates every cell on `workers` threads. Cell results depend only on
/// the configuration, the cell index and `seed`, never on scheduling.
pub fn compute(cfg: &SweepConfig, workers: usize, seed: Option<u64>) -> Result<SweepOutcome, CliError> {
    let (a1, a2) = (cfg.axes[0].values(), cfg.axes[1].values());
    let cells: Vec<(usize, usize)> = (0..a1.len()).flat_map(|i| (0..a2.len()).map(move |j| (i, j))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let results: Vec<Result<(f64, f64), CliError>> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(k, &(i, j))| evaluate(cfg, a1[i], a2[j], seed.map(|s| cell_seed(s, k))))
            .collect()
    });
    let mut out = SweepOutcome {
        axis1: a1.clone(),
        axis2: a2.clone(),
        values: Vec::with_capacity(cells.len()),
        half_horizon: Vec::new(),
        failures: Vec::new(),
    };
    for (&(i, j), r) in cells.iter().zip(results) {
        match r {
            Ok((v, half)) => {
                out.values.push(v);
                out.half_horizon.push(half);
            }
            Err(e) => {
                warn!("cell ({}={}, {}={}) failed: {e}", cfg.axes[0].name, a1[i], cfg.axes[1].name, a2[j]);
                out.values.push(f64::NAN);
                out.half_horizon.push(f64::NAN);
                out.failures.push((i, j, e.to_string()));
            }
        }
    }
    if cfg.quantity == Quantity::TauD {
        out.half_horizon.clear();
    }
    Ok(out)
}

fn log_horizon_sensitivity(out: &SweepOutcome) {
    let pairs = out.values.iter().zip(&out.half_horizon).filter(|(v, h)| v.is_finite() && h.is_finite());
    let (mut changed, mut worst) = (0, 0.0f64);
    for (v, h) in pairs {
        let delta = v - h;
        if delta > 1e-3 * v.abs().max(1e-6) {
            changed += 1;
        }
        worst = worst.max(delta);
    }
    info!("horizon sensitivity: {changed} cells gain more than 0.1% of N between T/2 and T, largest gain {worst}");
}

/// Writes `grid.csv`, `heatmap.pgm` and `failed_cells.csv` into `out`.
pub fn run_sweep(cfg: &SweepConfig, workers: usize, seed: Option<u64>, out: &Path) -> Result<SweepOutcome, CliError> {
    let res = compute(cfg, workers, seed)?;
    let names = [cfg.axes[0].name, cfg.axes[1].name];
    let label = cfg.quantity.to_string();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("grid.csv"), output::grid_csv(names, &label, &res.axis1, &res.axis2, &res.values))?;
    let pgm = output::heatmap_pgm(res.axis1.len(), res.axis2.len(), &res.values, &label);
    std::fs::write(out.join("heatmap.pgm"), pgm)?;
    let mut failed = format!("{},{},error\n", names[0], names[1]);
    for (i, j, e) in &res.failures {
        let _ = writeln!(failed, "{},{},\"{}\"", res.axis1[*i], res.axis2[*j], e.replace('"', "'"));
    }
    std::fs::write(out.join("failed_cells.csv"), failed)?;
    if !res.half_horizon.is_empty() {
        log_horizon_sensitivity(&res);
    }
    info!("{} cells, {} failed", res.values.len(), res.failures.len());
    Ok(res)
}
