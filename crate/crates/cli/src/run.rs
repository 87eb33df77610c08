use crate::config::{Output, RunConfig};
use crate::output;
use crate::CliError;
use log::info;
use polaron_nm::{
    blp_measure, decay_time, ensemble_average, optimal_initial_pair, AveragedState, AveragedState64, Averaging,
    BlpResult64, DecayFit, DistinguishabilityTrace64, KernelTables64, Method, Trajectory,
};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    /// Solution started from `P = (1, 0, 0)`.
    pub trajectory: Trajectory<f64, AveragedState64>,
    /// Distance between the solutions from `(±1, 0, 0)`.
    pub distinguishability: DistinguishabilityTrace64,
    pub blp: BlpResult64,
    /// The measure accumulated over the first half of the horizon.
    pub blp_half: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub methods: Vec<MethodOutcome>,
    pub tau_d: Option<DecayFit<f64>>,
}

/// Solves from both optimal initial states and returns the `(1, 0, 0)`
/// solution with the distinguishability trace.
pub fn solve_pair(
    tables: &KernelTables64,
    method: Method,
    averaging: Averaging,
) -> Result<(Trajectory<f64, AveragedState64>, DistinguishabilityTrace64), CliError> {
    let (p1, p2) = optimal_initial_pair();
    let solve = |p| match averaging {
        Averaging::Exact => match method {
            Method::Nz => tables.solve_nz(AveragedState::uncorrelated(p)),
            Method::Tcl => tables.solve_tcl(AveragedState::uncorrelated(p)),
        },
        Averaging::MonteCarlo { trajectories, seed } => {
            ensemble_average(tables, method, p, trajectories, seed).map(|r| r.mean)
        }
    };
    let (a, b) = (solve(p1)?, solve(p2)?);
    let d = DistinguishabilityTrace64::between_averaged(&a, &b)?;
    Ok((a, d))
}

pub fn compute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let horizon = cfg.solver.horizon();
    let tau_d = if cfg.wants(Output::TauD) {
        Some(decay_time(&cfg.bath, horizon, cfg.solver.step())?)
    } else {
        None
    };
    let mut methods = Vec::new();
    if cfg.wants(Output::Trace) || cfg.wants(Output::Blp) {
        let tables = KernelTables64::new(&cfg.bath, &cfg.sys, &cfg.noise_or_silent(), &cfg.solver)?;
        for &method in &cfg.methods {
            let (trajectory, d) = solve_pair(&tables, method, cfg.solver.averaging)?;
            let blp = blp_measure(&d)?;
            let blp_half = blp_measure(&d.truncated(horizon / 2.0))?.measure;
            methods.push(MethodOutcome {
                method,
                trajectory,
                distinguishability: d,
                blp,
                blp_half,
            });
        }
    }
    Ok(RunOutcome { methods, tau_d })
}

/// Writes `trace.csv` (when requested) and `summary.csv` into `out`.
pub fn run_single(cfg: &RunConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let outcome = compute(cfg)?;
    std::fs::create_dir_all(out)?;
    if cfg.wants(Output::Trace) {
        let mut csv = format!("{}\n", output::TRACE_HEADER);
        for m in &outcome.methods {
            output::trace_rows(&mut csv, m.method, &m.trajectory, &m.distinguishability);
        }
        std::fs::write(out.join("trace.csv"), csv)?;
    }
    let mut summary = format!("{}\n", output::SUMMARY_HEADER);
    let tau = outcome.tau_d.map(|f| f.tau_d);
    if outcome.methods.is_empty() {
        for &m in &cfg.methods {
            output::summary_row(&mut summary, m, None, tau);
        }
    }
    for m in &outcome.methods {
        let blp = cfg.wants(Output::Blp).then_some(&m.blp);
        output::summary_row(&mut summary, m.method, blp, tau);
        info!(
            "{}: N = {} (N at T/2 = {}, late-time D <= {})",
            m.method.label(),
            m.blp.measure,
            m.blp_half,
            m.blp.tail_bound
        );
    }
    if let Some(f) = outcome.tau_d {
        info!("tau_d = {} ({:?} fit{})", f.tau_d, f.model, if f.no_decay { ", no decay within horizon" } else { "" });
    }
    std::fs::write(out.join("summary.csv"), summary)?;
    Ok(outcome)
}
