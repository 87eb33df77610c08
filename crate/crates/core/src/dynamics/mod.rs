//! Master-equation solvers for the Bloch components: the noise-averaged
//! memory-kernel (NZ) and time-convolutionless (TCL) systems, the
//! per-realization equations and their Monte-Carlo ensemble average.

mod averaged;
mod ensemble;
mod kernels;
mod realization;

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::scalar::Real;

pub use averaged::{solve_averaged, solve_nz_averaged, solve_tcl_averaged};
pub use ensemble::{ensemble_average, EnsembleResult};
pub use kernels::{coefficients_gamma, kernels_k, Gammas, KernelTables, Kernels};
pub use realization::solve_per_realization;

/// Static bias `ε₀` and tunneling `V` of the two-state system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    epsilon0: T,
    tunneling: T,
}

impl<T: Real> SystemParams<T> {
    pub fn new(epsilon0: T, tunneling: T) -> Result<Self> {
        if !epsilon0.is_finite() {
            return Err(invalid("epsilon0", format!("must be finite, got {epsilon0}")));
        }
        if !(tunneling.is_finite() && tunneling >= T::zero()) {
            return Err(invalid("tunneling", format!("must be finite and >= 0, got {tunneling}")));
        }
        Ok(Self { epsilon0, tunneling })
    }
    pub fn epsilon0(&self) -> T {
        self.epsilon0
    }
    pub fn tunneling(&self) -> T {
        self.tunneling
    }
}

/// Expectation values of `σ_x`, `σ_y`, `σ_z`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochState<T> {
    pub px: T,
    pub py: T,
    pub pz: T,
}

impl<T: Real> BlochState<T> {
    pub fn new(px: T, py: T, pz: T) -> Self {
        Self { px, py, pz }
    }
    pub fn norm(&self) -> T {
        (self.px * self.px + self.py * self.py + self.pz * self.pz).sqrt()
    }
    pub fn as_array(&self) -> [T; 3] {
        [self.px, self.py, self.pz]
    }
    pub fn from_array(v: [T; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Noise-averaged Bloch vector `⟨P_i⟩` and correlators `⟨α P_i⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AveragedState<T> {
    pub p: BlochState<T>,
    pub a: [T; 3],
}

impl<T: Real> AveragedState<T> {
    /// State prepared uncorrelated with the stationary noise (`⟨α P_i⟩ = 0`).
    pub fn uncorrelated(p: BlochState<T>) -> Self {
        Self { p, a: [T::zero(); 3] }
    }

    pub fn as_array(&self) -> [T; 6] {
        [self.p.px, self.p.py, self.p.pz, self.a[0], self.a[1], self.a[2]]
    }

    pub fn from_array(v: [T; 6]) -> Self {
        Self {
            p: BlochState::new(v[0], v[1], v[2]),
            a: [v[3], v[4], v[5]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Memory-kernel (Nakajima-Zwanzig) equations.
    Nz,
    /// Time-convolutionless equations.
    Tcl,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Nz => "NZ",
            Method::Tcl => "TCL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// Closed noise-averaged equations.
    Exact,
    /// Average of per-realization solutions over sampled trajectories.
    MonteCarlo { trajectories: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    horizon: T,
    step: T,
    pub method: Method,
    pub averaging: Averaging,
}

impl<T: Real> SolverConfig<T> {
    /// `horizon / step` must be an integer (to 1e-9 relative) of at least 10.
    pub fn new(horizon: T, step: T, method: Method, averaging: Averaging) -> Result<Self> {
        if !(step.is_finite() && step > T::zero()) {
            return Err(invalid("step", format!("must be finite and > 0, got {step}")));
        }
        if !(horizon.is_finite() && horizon > T::zero()) {
            return Err(invalid("horizon", format!("must be finite and > 0, got {horizon}")));
        }
        let ratio = horizon / step;
        let steps = ratio.round();
        if (ratio - steps).abs() > T::lit(1e-9) * ratio.max(T::one()) {
            return Err(invalid("step", format!("horizon/step = {ratio} is not an integer")));
        }
        if steps < T::lit(10.0) {
            return Err(invalid("step", format!("horizon/step = {steps} is below 10")));
        }
        if let Averaging::MonteCarlo { trajectories, .. } = averaging {
            if trajectories < 100 {
                return Err(invalid("trajectories", format!("need at least 100, got {trajectories}")));
            }
        }
        Ok(Self {
            horizon,
            step: horizon / steps,
            method,
            averaging,
        })
    }

    /// Config with the default step `min(0.01/max(ε₀+Ω, V, ω₀/10), T/1000)`,
    /// shrunk so that it divides the horizon.
    pub fn with_default_step(
        horizon: T,
        method: Method,
        averaging: Averaging,
        sys: &SystemParams<T>,
        noise_amp: T,
        omega0: T,
    ) -> Result<Self> {
        let scale = (sys.epsilon0().abs() + noise_amp)
            .max(sys.tunneling())
            .max(omega0 / T::lit(10.0))
            .max(T::min_positive_value());
        let h = (T::lit(0.01) / scale).min(horizon / T::lit(1000.0));
        let steps = (horizon / h).ceil().max(T::lit(10.0));
        Self::new(horizon, horizon / steps, method, averaging)
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }
    pub fn step(&self) -> T {
        self.step
    }
    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round().to_usize().expect("validated step count")
    }
}

/// States sampled on the uniform grid `t_k = k·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T, S> {
    pub step: T,
    pub states: Vec<S>,
}

impl<T: Real, S> Trajectory<T, S> {
    pub fn time(&self, k: usize) -> T {
        self.step * T::count(k)
    }
    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.states.len()).map(move |k| self.time(k))
    }
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// `ρ = (𝕀 + P·σ)/2` as a row-major 2×2 matrix.
pub fn bloch_to_density<T: Real>(p: &BlochState<T>) -> [[Complex<T>; 2]; 2] {
    let half = T::lit(0.5);
    [
        [Complex::new(half * (T::one() + p.pz), T::zero()), Complex::new(half * p.px, -half * p.py)],
        [Complex::new(half * p.px, half * p.py), Complex::new(half * (T::one() - p.pz), T::zero())],
    ]
}
