//! Dissipative dynamics of a two-state system driven by random telegraph
//! noise in the polaron frame, with memory-kernel (Nakajima-Zwanzig) and
//! time-convolutionless master equations and the trace-distance
//! non-Markovianity measure.
//!
//! All numerics are generic over [`Real`] (`f32`/`f64`); the `*64` aliases at
//! the crate root fix the scalar to `f64`.

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod noise;
pub mod nonmarkov;
mod linalg;
mod quadrature;
pub mod scalar;

pub use bath::{
    bath_operator_average, compute_correlations, decay_time, fit_decay_time, spectral_density, BathParams, CorrelationIntegrals,
    CorrelationTable, DecayFit, DecayModel, Sign,
};
pub use dynamics::{
    bloch_to_density, coefficients_gamma, ensemble_average, kernels_k, solve_averaged, solve_nz_averaged,
    solve_per_realization, solve_tcl_averaged, Averaging, AveragedState, BlochState, EnsembleResult, KernelTables,
    Method, SolverConfig, SystemParams, Trajectory,
};
pub use error::{Error, Result};
pub use noise::{
    propagators, sample_trajectory, sample_trajectory_stream, NoiseParams, Propagators, TelegraphTrajectory,
};
pub use nonmarkov::{
    analytic_blp, analytic_distinguishability, blp_measure, optimal_initial_pair, reduced_limit_solution,
    revival_blp, trace_distance, BlpResult, DistinguishabilityTrace,
};
pub use scalar::Real;

pub type BathParams64 = BathParams<f64>;
pub type CorrelationTable64 = CorrelationTable<f64>;
pub type NoiseParams64 = NoiseParams<f64>;
pub type TelegraphTrajectory64 = TelegraphTrajectory<f64>;
pub type SystemParams64 = SystemParams<f64>;
pub type BlochState64 = BlochState<f64>;
pub type AveragedState64 = AveragedState<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type KernelTables64 = KernelTables<f64>;
pub type DistinguishabilityTrace64 = DistinguishabilityTrace<f64>;
pub type BlpResult64 = BlpResult<f64>;

pub type BathParams32 = BathParams<f32>;
pub type NoiseParams32 = NoiseParams<f32>;
pub type SystemParams32 = SystemParams<f32>;
