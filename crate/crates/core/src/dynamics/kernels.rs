//! Memory kernels `K₁…K₅`, TCL coefficients `Γ₁…Γ₆` and the product
//! integration weights used by the convolution solvers.

use std::ops::{Add, Mul};

use num_traits::Zero;

use super::{SolverConfig, SystemParams};
use crate::bath::{BathParams, CorrelationIntegrals, CorrelationTable};
use crate::error::{invalid, Result};
use crate::noise::{propagators, NoiseParams, Propagators};
use crate::scalar::Real;

const MAX_REFINEMENT: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kernels<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
    pub k4: T,
    pub k5: T,
}

/// Time-local coefficients; `g[i]` holds `Γ_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gammas<T> {
    pub g: [T; 6],
}

/// Integrands of `Γ₁…Γ₆` at lag `τ`, given `exp(−Q₂)cos Q₁`, `exp(−Q₂)sin Q₁`.
fn integrands<T: Real>(kc: T, ks: T, s: &Propagators<T>, eps_tau: T, v2: T) -> [T; 6] {
    let four = T::lit(4.0) * v2;
    let two = T::lit(2.0) * v2;
    let (sn, cs) = eps_tau.sin_cos();
    [
        four * ks * s.s0 * sn,
        four * kc * s.s0 * cs,
        -four * kc * s.s1_im * sn,
        -four * ks * s.s1_im * cs,
        two * kc * s.s0 * sn,
        -two * kc * s.s1_im * cs,
    ]
}

fn phase_parts<T: Real>(q1: T, q2: T) -> (T, T) {
    let env = (-q2).exp();
    let (sn, cs) = q1.sin_cos();
    (env * cs, env * sn)
}

/// `K₁…K₅` at lag `t`, with `Q₁`, `Q₂` interpolated from `table`.
pub fn kernels_k<T: Real>(
    t: T,
    table: &CorrelationTable<T>,
    sys: &SystemParams<T>,
    noise: &NoiseParams<T>,
) -> Result<Kernels<T>> {
    let (q1, q2) = table.at(t)?;
    let (kc, ks) = phase_parts(q1, q2);
    let s = propagators(noise, t);
    let v2 = sys.tunneling() * sys.tunneling();
    let four = T::lit(4.0) * v2;
    let (sn, cs) = (sys.epsilon0() * t).sin_cos();
    Ok(Kernels {
        k1: four * ks * s.s0 * sn,
        k2: four * kc * s.s0 * cs,
        k3: -four * kc * s.s1_im * sn,
        k4: -four * ks * s.s1_im * cs,
        k5: four * kc * s.s2 * cs,
    })
}

/// `Γ₁…Γ₆` at `t` by trapezoidal integration on the grid of `table`.
pub fn coefficients_gamma<T: Real>(
    t: T,
    table: &CorrelationTable<T>,
    sys: &SystemParams<T>,
    noise: &NoiseParams<T>,
) -> Result<Gammas<T>> {
    table.at(t)?;
    let v2 = sys.tunneling() * sys.tunneling();
    let eps = sys.epsilon0();
    let at = |tau: T, q1: T, q2: T| {
        let (kc, ks) = phase_parts(q1, q2);
        integrands(kc, ks, &propagators(noise, tau), eps * tau, v2)
    };
    let half = T::lit(0.5);
    let h = table.step();
    let mut g = [T::zero(); 6];
    let mut prev = at(T::zero(), table.q1()[0], table.q2()[0]);
    let mut k = 0;
    while k < table.intervals() && table.time(k + 1) <= t {
        let next = at(table.time(k + 1), table.q1()[k + 1], table.q2()[k + 1]);
        for i in 0..6 {
            g[i] = g[i] + half * h * (prev[i] + next[i]);
        }
        prev = next;
        k += 1;
    }
    let rest = t - table.time(k);
    if rest > T::zero() {
        let (q1, q2) = table.at(t)?;
        let end = at(t, q1, q2);
        for i in 0..6 {
            g[i] = g[i] + half * rest * (prev[i] + end[i]);
        }
    }
    Ok(Gammas { g })
}

/// Product-integration weights for `∫₀^{t_n} k(t_n − s) g(s) ds` with `g`
/// linear between solver nodes and `k` resolved on a finer grid.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ProductWeights<T> {
    /// `∫₀^h k(mh − u)(1 − u/h) du`
    w0: Vec<T>,
    /// `∫₀^h k(mh − u)(u/h) du`
    w1: Vec<T>,
    /// `w0[m] + w1[m + 1]`
    interior: Vec<T>,
}

impl<T: Real> ProductWeights<T> {
    /// `kernel` holds `k` on the fine grid, `per_step` (even) fine intervals
    /// per solver step, `steps` solver steps.
    fn new(kernel: &[T], per_step: usize, steps: usize, fine: T) -> Self {
        let h = fine * T::count(per_step);
        let mut w0 = vec![T::zero(); steps + 2];
        let mut w1 = vec![T::zero(); steps + 2];
        let third = fine / T::lit(3.0);
        for m in 1..=steps {
            let (mut a, mut b) = (T::zero(), T::zero());
            for j in 0..=per_step {
                let simpson = if j == 0 || j == per_step {
                    T::one()
                } else if j % 2 == 1 {
                    T::lit(4.0)
                } else {
                    T::lit(2.0)
                };
                let k = kernel[m * per_step - j];
                let frac = fine * T::count(j) / h;
                a = a + simpson * k * (T::one() - frac);
                b = b + simpson * k * frac;
            }
            w0[m] = third * a;
            w1[m] = third * b;
        }
        let interior = (0..steps + 1).map(|m| w0[m] + w1[m + 1]).collect();
        Self { w0, w1, interior }
    }

    /// Memory at node `n` from `g[0..n]`, excluding the `g[n]` contribution.
    pub(crate) fn history<S>(&self, n: usize, g: &[S]) -> S
    where
        S: Copy + Zero + Add<Output = S> + Mul<T, Output = S>,
    {
        if n == 0 {
            return S::zero();
        }
        let mut acc = g[0] * self.w0[n];
        for (i, gi) in g.iter().enumerate().take(n).skip(1) {
            acc = acc + *gi * self.interior[n - i];
        }
        acc
    }

    /// Weight multiplying `g[n]` in the memory at node `n ≥ 1`.
    pub(crate) fn endpoint(&self) -> T {
        self.w1[1]
    }
}

/// Below this the bath envelope `exp(−Q₂)` is dropped from the kernels.
const NEGLIGIBLE_ENVELOPE: f64 = 1e-15;

/// `Q₁`, `Q₂` on the fine grid, evaluated only around solver steps where the
/// envelope is not negligible at a neighbouring node (`None` elsewhere).
#[allow(clippy::type_complexity)]
fn resolve_correlations<T: Real>(
    integrals: &CorrelationIntegrals<T>,
    step: T,
    steps: usize,
    per_step: usize,
    fine: T,
) -> (Vec<Option<T>>, Vec<Option<T>>) {
    let floor = -T::lit(NEGLIGIBLE_ENVELOPE).ln();
    let node_q2: Vec<T> = (0..=steps).map(|m| integrals.q2(step * T::count(m))).collect();
    let active: Vec<bool> = (0..steps)
        .map(|m| {
            let lo = m.saturating_sub(1);
            let hi = (m + 2).min(steps);
            node_q2[lo..=hi].iter().any(|&q| q < floor)
        })
        .collect();
    let fine_n = steps * per_step;
    let mut q1 = vec![None; fine_n + 1];
    let mut q2 = vec![None; fine_n + 1];
    for k in 0..=fine_n {
        let m = k / per_step;
        let on_node = k % per_step == 0;
        let needed = if on_node {
            (m > 0 && active[m - 1]) || (m < steps && active[m])
        } else {
            active[m]
        };
        if needed {
            let t = fine * T::count(k);
            q1[k] = Some(integrals.q1(t));
            q2[k] = Some(if on_node { node_q2[m] } else { integrals.q2(t) });
        }
    }
    (q1, q2)
}

/// Kernel data resolved on a fine grid `step/(2M)`, `M ≥ 2` a power of two,
/// covering `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct KernelTables<T> {
    sys: SystemParams<T>,
    noise: NoiseParams<T>,
    step: T,
    steps: usize,
    per_step: usize,
    fine: T,
    /// `Γ₁…Γ₆` cumulated on the fine grid.
    gamma: [Vec<T>; 6],
    pub(crate) w_kc: ProductWeights<T>,
    pub(crate) w_ks: ProductWeights<T>,
    pub(crate) w_kc_decay: ProductWeights<T>,
    pub(crate) w_k2: ProductWeights<T>,
    pub(crate) w_k3: ProductWeights<T>,
    pub(crate) w_k5: ProductWeights<T>,
}

impl<T: Real> KernelTables<T> {
    pub fn new(
        bath: &BathParams<T>,
        sys: &SystemParams<T>,
        noise: &NoiseParams<T>,
        cfg: &SolverConfig<T>,
    ) -> Result<Self> {
        let integrals = CorrelationIntegrals::new(bath)?;
        Self::from_integrals(&integrals, bath, sys, noise, cfg)
    }

    /// Reuses prepared correlation integrals of `bath`.
    pub fn from_integrals(
        integrals: &CorrelationIntegrals<T>,
        bath: &BathParams<T>,
        sys: &SystemParams<T>,
        noise: &NoiseParams<T>,
        cfg: &SolverConfig<T>,
    ) -> Result<Self> {
        let step = cfg.step();
        let steps = cfg.steps();
        let target = bath
            .short_time_decay()
            .min(bath.reorg_energy().recip())
            .min(bath.omega0().recip())
            / T::lit(20.0);
        // At least two fine intervals per half step keep the midpoints on
        // Simpson nodes.
        let mut half_refine = 2;
        while step / T::count(2 * half_refine) > target && half_refine < MAX_REFINEMENT {
            half_refine *= 2;
        }
        let per_step = 2 * half_refine;
        let fine_n = steps * per_step;
        if fine_n > 50_000_000 {
            return Err(invalid("step", format!("kernel grid of {fine_n} points is too large")));
        }
        let fine = cfg.horizon() / T::count(fine_n);
        let (q1, q2) = resolve_correlations(integrals, step, steps, per_step, fine);
        let v2 = sys.tunneling() * sys.tunneling();
        let two = T::lit(2.0) * v2;
        let four = T::lit(4.0) * v2;

        let mut kc = Vec::with_capacity(fine_n + 1);
        let mut ks = Vec::with_capacity(fine_n + 1);
        let mut kc_decay = Vec::with_capacity(fine_n + 1);
        let mut k2 = Vec::with_capacity(fine_n + 1);
        let mut k3 = Vec::with_capacity(fine_n + 1);
        let mut k5 = Vec::with_capacity(fine_n + 1);
        let mut gamma: [Vec<T>; 6] = Default::default();
        for g in gamma.iter_mut() {
            g.reserve(fine_n + 1);
            g.push(T::zero());
        }
        let half = T::lit(0.5);
        let third = T::lit(3.0).recip();
        let mut prev = [T::zero(); 6];
        let mut prev2 = [T::zero(); 6];
        for k in 0..=fine_n {
            let tau = fine * T::count(k);
            let (c, s) = match (q1[k], q2[k]) {
                (Some(a), Some(b)) => phase_parts(a, b),
                _ => (T::zero(), T::zero()),
            };
            let p = propagators(noise, tau);
            let (sn, cs) = (sys.epsilon0() * tau).sin_cos();
            kc.push(c);
            ks.push(s);
            kc_decay.push(two * c * (-noise.nu() * tau).exp());
            k2.push(four * c * p.s0 * cs);
            k3.push(-four * c * p.s1_im * sn);
            k5.push(four * c * p.s2 * cs);
            let cur = integrands(c, s, &p, sys.epsilon0() * tau, v2);
            // Simpson on even nodes, trapezoid from the last even node on odd ones.
            if k % 2 == 1 {
                for i in 0..6 {
                    let last = gamma[i][k - 1];
                    gamma[i].push(last + half * fine * (prev[i] + cur[i]));
                }
            } else if k > 0 {
                for i in 0..6 {
                    let last = gamma[i][k - 2];
                    gamma[i].push(last + third * fine * (prev2[i] + T::lit(4.0) * prev[i] + cur[i]));
                }
            }
            prev2 = prev;
            prev = cur;
        }
        let weights = |k: &[T]| ProductWeights::new(k, per_step, steps, fine);
        Ok(Self {
            sys: *sys,
            noise: *noise,
            step,
            steps,
            per_step,
            fine,
            w_kc: weights(&kc),
            w_ks: weights(&ks),
            w_kc_decay: weights(&kc_decay),
            w_k2: weights(&k2),
            w_k3: weights(&k3),
            w_k5: weights(&k5),
            gamma,
        })
    }

    pub fn system(&self) -> &SystemParams<T> {
        &self.sys
    }
    pub fn noise(&self) -> &NoiseParams<T> {
        &self.noise
    }
    pub fn step(&self) -> T {
        self.step
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn fine_step(&self) -> T {
        self.fine
    }

    /// `Γ₁…Γ₆` at fine-grid node `k`.
    pub(crate) fn gammas_at_fine(&self, k: usize) -> [T; 6] {
        std::array::from_fn(|i| self.gamma[i][k])
    }

    /// `Γ₁…Γ₆` at solver node `n`.
    pub(crate) fn gammas_at_node(&self, n: usize) -> [T; 6] {
        self.gammas_at_fine(n * self.per_step)
    }

    /// `Γ₁…Γ₆` halfway between solver nodes `n` and `n + 1`.
    pub(crate) fn gammas_at_midpoint(&self, n: usize) -> [T; 6] {
        self.gammas_at_fine(n * self.per_step + self.per_step / 2)
    }

    /// `Γ₁…Γ₆` at an arbitrary `t` in range (linear interpolation).
    pub fn gammas(&self, t: T) -> Result<Gammas<T>> {
        let horizon = self.step * T::count(self.steps);
        if !(t >= T::zero() && t <= horizon * (T::one() + T::epsilon())) {
            return Err(crate::error::Error::OutOfRange {
                t: t.as_f64(),
                max: horizon.as_f64(),
            });
        }
        let last = self.steps * self.per_step;
        let pos = t / self.fine;
        let k = pos.floor().to_usize().unwrap_or(0).min(last);
        if k == last {
            return Ok(Gammas { g: self.gammas_at_fine(last) });
        }
        let frac = pos - T::count(k);
        Ok(Gammas {
            g: std::array::from_fn(|i| self.gamma[i][k] + (self.gamma[i][k + 1] - self.gamma[i][k]) * frac),
        })
    }
}
