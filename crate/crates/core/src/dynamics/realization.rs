//! Equations of motion for a single telegraph-noise realization.

use num_complex::Complex;

use super::{BlochState, KernelTables, Method, Trajectory};
use crate::error::{Error, Result};
use crate::noise::TelegraphTrajectory;
use crate::scalar::Real;

/// Single realizations are not positivity preserving (the TCL rates can turn
/// negative for a given noise history), so only a blow-up is reported here.
const BLOWUP_NORM: f64 = 2.0;

fn check<T: Real>(t: T, p: &BlochState<T>) -> Result<()> {
    let norm = p.norm();
    if !norm.is_finite() || norm > T::lit(BLOWUP_NORM) {
        return Err(Error::Unstable {
            t: t.as_f64(),
            norm: norm.as_f64(),
        });
    }
    Ok(())
}

/// Solves the master equation for one noise trajectory `α(t)`, which must
/// cover the horizon of `tables`.
pub fn solve_per_realization<T: Real>(
    tables: &KernelTables<T>,
    traj: &TelegraphTrajectory<T>,
    method: Method,
    initial: BlochState<T>,
) -> Result<Trajectory<T, BlochState<T>>> {
    let h = tables.step();
    let steps = tables.steps();
    let horizon = h * T::count(steps);
    if traj.horizon() < horizon * (T::one() - T::lit(1e-12)) {
        return Err(Error::Domain(format!(
            "trajectory covers [0, {}] but the solver needs [0, {}]",
            traj.horizon(),
            horizon
        )));
    }
    check(T::zero(), &initial)?;
    let eps = tables.system().epsilon0();
    let omega = tables.noise().omega_amp();
    let v = tables.system().tunneling();
    let two_v2 = T::lit(2.0) * v * v;
    let four_v2 = two_v2 + two_v2;

    // θ(t) = ε₀t + Ω∫₀ᵗα, and e^{-iθ} at the nodes.
    let mut theta = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let t = (h * T::count(n)).min(traj.horizon());
        theta.push(eps * t + omega * traj.cumulative_phase(t)?);
    }
    let rot: Vec<Complex<T>> = theta.iter().map(|&th| Complex::from_polar(T::one(), -th)).collect();

    // Bath-driven population source a(t) = 4V² Im[e^{iθ}∫k_s e^{-iθ'}].
    let source: Vec<T> = (0..=steps)
        .map(|n| {
            let m = tables.w_ks.history(n, &rot) + if n > 0 { rot[n] * tables.w_ks.endpoint() } else { Complex::new(T::zero(), T::zero()) };
            four_v2 * (rot[n].conj() * m).im
        })
        .collect();

    let states = match method {
        Method::Tcl => tcl(tables, &theta, &rot, &source, initial, two_v2)?,
        Method::Nz => nz(tables, &rot, &source, initial, two_v2)?,
    };
    Ok(Trajectory { step: h, states })
}

fn tcl<T: Real>(
    tables: &KernelTables<T>,
    theta: &[T],
    rot: &[Complex<T>],
    source: &[T],
    initial: BlochState<T>,
    two_v2: T,
) -> Result<Vec<BlochState<T>>> {
    let h = tables.step();
    let steps = tables.steps();
    let half = T::lit(0.5);
    let zero = Complex::new(T::zero(), T::zero());
    // Z(t) = 2V² e^{iθ(t)} ∫₀ᵗ k_c(t − t') e^{-iθ(t')} dt'
    let z: Vec<Complex<T>> = (0..=steps)
        .map(|n| {
            let m = tables.w_kc.history(n, rot) + if n > 0 { rot[n] * tables.w_kc.endpoint() } else { zero };
            rot[n].conj() * m * two_v2
        })
        .collect();
    let u0 = Complex::new(initial.px, initial.py);
    let mut acc = zero;
    let mut pz = initial.pz;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial);
    for n in 0..steps {
        acc = acc + (z[n] + z[n + 1]) * (half * h);
        let u = u0 * (-(acc + Complex::new(T::zero(), theta[n + 1]))).exp();
        let rate = |k: usize, p: T| -source[k] - T::lit(2.0) * z[k].re * p;
        let f0 = rate(n, pz);
        let pred = pz + h * f0;
        pz = pz + half * h * (f0 + rate(n + 1, pred));
        let state = BlochState::new(u.re, u.im, pz);
        check(h * T::count(n + 1), &state)?;
        out.push(state);
    }
    Ok(out)
}

fn nz<T: Real>(
    tables: &KernelTables<T>,
    rot: &[Complex<T>],
    source: &[T],
    initial: BlochState<T>,
    two_v2: T,
) -> Result<Vec<BlochState<T>>> {
    let h = tables.step();
    let steps = tables.steps();
    let half_h = h / T::lit(2.0);
    let four_v2 = two_v2 + two_v2;
    let ec = tables.w_kc.endpoint();

    // Rotating frame v = e^{iθ}(P_x + iP_y):
    //   v' = −2V² e^{iθ} ∫ k_c(t − t') (P_x + iP_y)(t') dt'
    //   P_z' = −a(t) − 4V² Re[e^{iθ} ∫ k_c(t − t') e^{-iθ'} P_z(t') dt']
    let mut u_hist: Vec<Complex<T>> = Vec::with_capacity(steps + 1);
    let mut z_hist: Vec<Complex<T>> = Vec::with_capacity(steps + 1);
    let u0 = Complex::new(initial.px, initial.py);
    let mut v = u0 / rot[0];
    let mut pz = initial.pz;
    u_hist.push(u0);
    z_hist.push(rot[0] * pz);
    let mut fv = Complex::new(T::zero(), T::zero());
    let mut fz = -source[0];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial);
    for n in 0..steps {
        let k = n + 1;
        let mu = tables.w_kc.history(k, &u_hist);
        let mz = tables.w_kc.history(k, &z_hist);
        let back = rot[k].conj();
        let rhs = |v: Complex<T>, pz: T| {
            let u = v * rot[k];
            let dv = back * (mu + u * ec) * (-two_v2);
            let dz = -source[k] - four_v2 * (back * (mz + rot[k] * (pz * ec))).re;
            (dv, dz)
        };
        let (pv, pzp) = rhs(v + fv * h, pz + fz * h);
        v = v + (fv + pv) * half_h;
        pz = pz + (fz + pzp) * half_h;
        let (nv, nzv) = rhs(v, pz);
        fv = nv;
        fz = nzv;
        let u = v * rot[k];
        u_hist.push(u);
        z_hist.push(rot[k] * pz);
        let state = BlochState::new(u.re, u.im, pz);
        check(h * T::count(k), &state)?;
        out.push(state);
    }
    Ok(out)
}
