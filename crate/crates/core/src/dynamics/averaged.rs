//! Closed noise-averaged equations for `⟨P_i⟩` and `⟨α P_i⟩`.

use super::{ensemble_average, AveragedState, Averaging, KernelTables, Method, SolverConfig, SystemParams, Trajectory};
use crate::bath::BathParams;
use crate::error::{Error, Result};
use crate::linalg::{apply4, expm4, Mat4};
use crate::noise::NoiseParams;
use crate::scalar::Real;

const NORM_BOUND: f64 = 1e-3;

pub(crate) fn check_norm<T: Real>(t: T, y: &[T; 6]) -> Result<()> {
    let norm = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    if !y.iter().all(|v| v.is_finite()) || norm > T::one() + T::lit(NORM_BOUND) {
        return Err(Error::Unstable {
            t: t.as_f64(),
            norm: norm.as_f64(),
        });
    }
    Ok(())
}

fn tcl_rhs<T: Real>(g: &[T; 6], eps: T, omega: T, nu: T, y: &[T; 6]) -> [T; 6] {
    let half = T::lit(0.5);
    let [px, py, pz, ax, ay, az] = *y;
    let e = eps + g[4];
    let w = omega + g[5];
    let damp = half * g[1];
    let mix = half * g[2];
    [
        -damp * px + mix * ax + e * py + w * ay,
        -damp * py + mix * ay - e * px - w * ax,
        -g[0] - g[1] * pz + g[2] * az,
        -(nu + damp) * ax + mix * px + e * ay + w * py,
        -(nu + damp) * ay + mix * py - e * ax - w * px,
        -(nu + g[1]) * az + g[2] * pz - g[3],
    ]
}

fn axpy<T: Real>(y: &[T; 6], a: T, d: &[T; 6]) -> [T; 6] {
    std::array::from_fn(|i| y[i] + a * d[i])
}

impl<T: Real> KernelTables<T> {
    /// Fourth-order Runge-Kutta on the averaged time-convolutionless system.
    pub fn solve_tcl(&self, initial: AveragedState<T>) -> Result<Trajectory<T, AveragedState<T>>> {
        let h = self.step();
        let eps = self.system().epsilon0();
        let omega = self.noise().omega_amp();
        let nu = self.noise().nu();
        let mut y = initial.as_array();
        check_norm(T::zero(), &y)?;
        let mut states = Vec::with_capacity(self.steps() + 1);
        states.push(initial);
        let half = T::lit(0.5);
        let sixth = h / T::lit(6.0);
        for n in 0..self.steps() {
            let g0 = self.gammas_at_node(n);
            let gm = self.gammas_at_midpoint(n);
            let g1 = self.gammas_at_node(n + 1);
            let k1 = tcl_rhs(&g0, eps, omega, nu, &y);
            let k2 = tcl_rhs(&gm, eps, omega, nu, &axpy(&y, half * h, &k1));
            let k3 = tcl_rhs(&gm, eps, omega, nu, &axpy(&y, half * h, &k2));
            let k4 = tcl_rhs(&g1, eps, omega, nu, &axpy(&y, h, &k3));
            y = std::array::from_fn(|i| y[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]));
            check_norm(h * T::count(n + 1), &y)?;
            states.push(AveragedState::from_array(y));
        }
        Ok(Trajectory { step: h, states })
    }

    /// Exponential Heun predictor-corrector on the averaged memory-kernel
    /// system: the constant-coefficient precession and noise relaxation are
    /// propagated exactly, memory integrals use product integration.
    pub fn solve_nz(&self, initial: AveragedState<T>) -> Result<Trajectory<T, AveragedState<T>>> {
        let h = self.step();
        let steps = self.steps();
        let eps = self.system().epsilon0();
        let omega = self.noise().omega_amp();
        let nu = self.noise().nu();
        let v = self.system().tunneling();
        let two_v2 = T::lit(2.0) * v * v;

        let z = T::zero();
        let generator: Mat4<T> = [
            [z, eps, z, omega],
            [-eps, z, -omega, z],
            [z, omega, -nu, eps],
            [-omega, z, -eps, -nu],
        ];
        let rotation = expm4(&generator.map(|r| r.map(|x| x * h)));
        let relax = (-nu * h).exp();
        let propagate = |y: &[T; 6]| -> [T; 6] {
            let c = apply4(&rotation, [y[0], y[1], y[3], y[4]]);
            [c[0], c[1], y[2], c[2], c[3], y[5] * relax]
        };

        let mut y = initial.as_array();
        check_norm(T::zero(), &y)?;
        let mut hist: [Vec<T>; 6] = Default::default();
        for (c, v) in hist.iter_mut().zip(y.iter()) {
            c.reserve(steps + 1);
            c.push(*v);
        }
        let mut states = Vec::with_capacity(steps + 1);
        states.push(initial);

        // Memory partial sums at node n (all history except node n itself).
        let partials = |n: usize, hist: &[Vec<T>; 6]| -> [T; 8] {
            [
                two_v2 * self.w_kc.history(n, &hist[0]),
                two_v2 * self.w_kc.history(n, &hist[1]),
                self.w_k2.history(n, &hist[2]),
                self.w_k3.history(n, &hist[5]),
                self.w_kc_decay.history(n, &hist[3]),
                self.w_kc_decay.history(n, &hist[4]),
                self.w_k3.history(n, &hist[2]),
                self.w_k5.history(n, &hist[5]),
            ]
        };
        let e_kc = two_v2 * self.w_kc.endpoint();
        let e_k2 = self.w_k2.endpoint();
        let e_k3 = self.w_k3.endpoint();
        let e_kd = self.w_kc_decay.endpoint();
        let e_k5 = self.w_k5.endpoint();
        // Memory and inhomogeneous terms at a node with n ≥ 1.
        let forcing = |p: &[T; 8], g: &[T; 6], y: &[T; 6]| -> [T; 6] {
            let [px, py, pz, ax, ay, az] = *y;
            [
                -(p[0] + e_kc * px),
                -(p[1] + e_kc * py),
                -g[0] - (p[2] + e_k2 * pz) + (p[3] + e_k3 * az),
                -(p[4] + e_kd * ax),
                -(p[5] + e_kd * ay),
                (p[6] + e_k3 * pz) - g[3] - (p[7] + e_k5 * az),
            ]
        };

        // At t = 0 every memory integral vanishes.
        let g0 = self.gammas_at_node(0);
        let mut f = [z, z, -g0[0], z, z, -g0[3]];
        let half_h = h / T::lit(2.0);
        for n in 0..steps {
            let g = self.gammas_at_node(n + 1);
            let p = partials(n + 1, &hist);
            let pred = propagate(&axpy(&y, h, &f));
            let fp = forcing(&p, &g, &pred);
            y = axpy(&propagate(&axpy(&y, half_h, &f)), half_h, &fp);
            check_norm(h * T::count(n + 1), &y)?;
            f = forcing(&p, &g, &y);
            for (c, v) in hist.iter_mut().zip(y.iter()) {
                c.push(*v);
            }
            states.push(AveragedState::from_array(y));
        }
        Ok(Trajectory { step: h, states })
    }
}

/// Averaged time-convolutionless dynamics from an initial state.
pub fn solve_tcl_averaged<T: Real>(
    bath: &BathParams<T>,
    sys: &SystemParams<T>,
    noise: &NoiseParams<T>,
    cfg: &SolverConfig<T>,
    initial: AveragedState<T>,
) -> Result<Trajectory<T, AveragedState<T>>> {
    KernelTables::new(bath, sys, noise, cfg)?.solve_tcl(initial)
}

/// Averaged memory-kernel dynamics from an initial state.
pub fn solve_nz_averaged<T: Real>(
    bath: &BathParams<T>,
    sys: &SystemParams<T>,
    noise: &NoiseParams<T>,
    cfg: &SolverConfig<T>,
    initial: AveragedState<T>,
) -> Result<Trajectory<T, AveragedState<T>>> {
    KernelTables::new(bath, sys, noise, cfg)?.solve_nz(initial)
}

/// Dispatches on `cfg.method` and `cfg.averaging`.
pub fn solve_averaged<T: Real>(
    bath: &BathParams<T>,
    sys: &SystemParams<T>,
    noise: &NoiseParams<T>,
    cfg: &SolverConfig<T>,
    initial: AveragedState<T>,
) -> Result<Trajectory<T, AveragedState<T>>> {
    let tables = KernelTables::new(bath, sys, noise, cfg)?;
    match (cfg.averaging, cfg.method) {
        (Averaging::Exact, Method::Tcl) => tables.solve_tcl(initial),
        (Averaging::Exact, Method::Nz) => tables.solve_nz(initial),
        (Averaging::MonteCarlo { trajectories, seed }, method) => {
            if initial.a.iter().any(|a| *a != T::zero()) {
                return Err(Error::Domain(
                    "sampled noise starts stationary, so the initial correlators must vanish".into(),
                ));
            }
            Ok(ensemble_average(&tables, method, initial.p, trajectories, seed)?.mean)
        }
    }
}
