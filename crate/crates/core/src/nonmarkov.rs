//! Trace-distance distinguishability and the BLP non-Markovianity measure,
//! plus closed forms for the strong-coupling, high-temperature limit.

use crate::dynamics::{AveragedState, BlochState, SystemParams, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{apply4, expm4, Mat4};
use crate::noise::{propagators, NoiseParams};
use crate::scalar::Real;

/// Increments at or below this are treated as float jitter.
pub const FLOW_FLOOR: f64 = 1e-9;

/// `D(ρ₁, ρ₂) = ½ Tr|ρ₁ − ρ₂| = ½ |P₁ − P₂|`.
pub fn trace_distance<T: Real>(p1: &BlochState<T>, p2: &BlochState<T>) -> T {
    let d = BlochState::new(p1.px - p2.px, p1.py - p2.py, p1.pz - p2.pz);
    d.norm() / T::lit(2.0)
}

/// The orthogonal pure states `P = (±1, 0, 0)`.
pub fn optimal_initial_pair<T: Real>() -> (BlochState<T>, BlochState<T>) {
    (
        BlochState::new(T::one(), T::zero(), T::zero()),
        BlochState::new(-T::one(), T::zero(), T::zero()),
    )
}

/// `D(t)` sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishabilityTrace<T> {
    pub times: Vec<T>,
    pub d: Vec<T>,
}

impl<T: Real> DistinguishabilityTrace<T> {
    pub fn new(times: Vec<T>, d: Vec<T>) -> Result<Self> {
        if times.len() != d.len() {
            return Err(Error::Domain(format!("{} times but {} values", times.len(), d.len())));
        }
        Ok(Self { times, d })
    }

    /// `D(t_k)` on `t_k = k·step`.
    pub fn uniform(step: T, d: Vec<T>) -> Self {
        let times = (0..d.len()).map(|k| step * T::count(k)).collect();
        Self { times, d }
    }

    /// Pointwise distance between two solutions on the same grid.
    pub fn between(a: &Trajectory<T, BlochState<T>>, b: &Trajectory<T, BlochState<T>>) -> Result<Self> {
        if a.len() != b.len() || a.step != b.step {
            return Err(Error::Domain("trajectories are sampled on different grids".into()));
        }
        let d = a.states.iter().zip(&b.states).map(|(x, y)| trace_distance(x, y)).collect();
        Ok(Self::uniform(a.step, d))
    }

    /// Same as [`Self::between`] for averaged solutions (uses `⟨P⟩` only).
    pub fn between_averaged(
        a: &Trajectory<T, AveragedState<T>>,
        b: &Trajectory<T, AveragedState<T>>,
    ) -> Result<Self> {
        if a.len() != b.len() || a.step != b.step {
            return Err(Error::Domain("trajectories are sampled on different grids".into()));
        }
        let d = a.states.iter().zip(&b.states).map(|(x, y)| trace_distance(&x.p, &y.p)).collect();
        Ok(Self::uniform(a.step, d))
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }
    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Prefix ending at the last sample with `t ≤ until`.
    pub fn truncated(&self, until: T) -> Self {
        let n = self.times.iter().take_while(|&&t| t <= until).count();
        Self {
            times: self.times[..n].to_vec(),
            d: self.d[..n].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlpResult<T> {
    /// Sum of the rises of `D` over the trace.
    pub measure: T,
    /// Maximal runs `(t_start, t_end)` of increasing `D`.
    pub growth_intervals: Vec<(T, T)>,
    /// Largest `D` over the final tenth of the trace: revivals past the
    /// horizon start below this height.
    pub tail_bound: T,
}

/// Total increase of `D` over the trace, counting increments above
/// [`FLOW_FLOOR`].
pub fn blp_measure<T: Real>(trace: &DistinguishabilityTrace<T>) -> Result<BlpResult<T>> {
    let n = trace.len();
    if n < 10 || trace.times.len() != n {
        return Err(Error::InsufficientData(format!("BLP measure needs at least 10 samples, got {n}")));
    }
    let step = trace.times[1] - trace.times[0];
    if !(step > T::zero()) {
        return Err(Error::Domain("time grid must be increasing".into()));
    }
    let tol = T::lit(1e-9) * step.max(trace.times[n - 1].abs() * T::epsilon() / step);
    for w in trace.times.windows(2) {
        if ((w[1] - w[0]) - step).abs() > tol.max(T::lit(1e-6) * step) {
            return Err(Error::Domain(format!(
                "time grid is not uniform: step {} vs {}",
                w[1] - w[0],
                step
            )));
        }
    }
    let floor = T::lit(FLOW_FLOOR);
    let mut measure = T::zero();
    let mut intervals = Vec::new();
    let mut open: Option<usize> = None;
    for k in 0..n - 1 {
        let inc = trace.d[k + 1] - trace.d[k];
        if inc > floor {
            measure = measure + inc;
            open.get_or_insert(k);
        } else if let Some(s) = open.take() {
            intervals.push((trace.times[s], trace.times[k]));
        }
    }
    if let Some(s) = open {
        intervals.push((trace.times[s], trace.times[n - 1]));
    }
    let tail_start = n - (n / 10).max(1);
    let tail_bound = trace.d[tail_start..].iter().fold(T::zero(), |m, &v| m.max(v));
    Ok(BlpResult {
        measure,
        growth_intervals: intervals,
        tail_bound,
    })
}

/// `D(t) = |S₀(t)|` in the strong-coupling, high-temperature limit.
pub fn analytic_distinguishability<T: Real>(noise: &NoiseParams<T>, t: T) -> T {
    propagators(noise, t).s0.abs()
}

fn require_revivals<T: Real>(noise: &NoiseParams<T>) -> Result<T> {
    if noise.is_silent() || !noise.is_oscillatory() {
        return Err(Error::Regime(format!(
            "|S0| decays monotonically for K = {} <= 1/2, the measure is 0",
            noise.color()
        )));
    }
    Ok(noise.eta_squared().abs().sqrt())
}

/// `2(1 − ν(ν+2)/(4Ω²)) / (e^ξ − 1)` with `ξ = −2iπν/η`, evaluated as
/// written; see [`revival_blp`] for the value of the measure of `|S₀|`.
pub fn analytic_blp<T: Real>(noise: &NoiseParams<T>) -> Result<T> {
    let eta = require_revivals(noise)?;
    let nu = noise.nu();
    let om = noise.omega_amp();
    // η = i|η| for K > 1/2, so ξ is real.
    let xi = -T::lit(2.0) * T::PI() * nu / eta;
    let prefactor = T::lit(2.0) * (T::one() - nu * (nu + T::lit(2.0)) / (T::lit(4.0) * om * om));
    Ok(prefactor / xi.exp_m1())
}

/// Measure of `|S₀|` on `[0, ∞)`: the revivals at `t_k = 2πk/|η|` reach
/// `q^k` with `q = e^{−πν/|η|}`, each rising from a zero, so `𝒩 = q/(1 − q)`.
pub fn revival_blp<T: Real>(noise: &NoiseParams<T>) -> Result<T> {
    let eta = require_revivals(noise)?;
    Ok((T::PI() * noise.nu() / eta).exp_m1().recip())
}

/// Propagates `(P_x, P_y, ⟨αP_x⟩, ⟨αP_y⟩)` under the constant-coefficient
/// coherence equations that remain when the bath terms are negligible.
pub fn reduced_limit_solution<T: Real>(
    sys: &SystemParams<T>,
    noise: &NoiseParams<T>,
    t: T,
    initial: [T; 4],
) -> Result<[T; 4]> {
    if !(t >= T::zero() && t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    let e = sys.epsilon0();
    let w = noise.omega_amp();
    let nu = noise.nu();
    let z = T::zero();
    let generator: Mat4<T> = [[z, e, z, w], [-e, z, -w, z], [z, w, -nu, e], [-w, z, -e, -nu]];
    let m = expm4(&generator.map(|r| r.map(|v| v * t)));
    Ok(apply4(&m, initial))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimal_pair_is_antipodal() {
        let (a, b) = optimal_initial_pair::<f64>();
        assert_eq!(trace_distance(&a, &b), 1.0);
        assert_eq!(a.norm(), 1.0);
        assert_eq!(b.norm(), 1.0);
    }

    #[test]
    fn monotone_trace_has_no_measure() {
        let d: Vec<f64> = (0..100).map(|k| (-0.1 * k as f64).exp()).collect();
        let r = blp_measure(&DistinguishabilityTrace::uniform(0.1, d)).unwrap();
        assert_eq!(r.measure, 0.0);
        assert!(r.growth_intervals.is_empty());
    }

    #[test]
    fn abs_cos_has_two_revivals() {
        let n = 4000;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let d: Vec<f64> = (0..=n).map(|k| (k as f64 * h).cos().abs()).collect();
        let r = blp_measure(&DistinguishabilityTrace::uniform(h, d)).unwrap();
        assert!((r.measure - 2.0).abs() < 1e-9, "{}", r.measure);
        assert_eq!(r.growth_intervals.len(), 2);
        let sum: f64 = r
            .growth_intervals
            .iter()
            .map(|&(a, b)| {
                let (ia, ib) = ((a / h).round() as usize, (b / h).round() as usize);
                (ib as f64 * h).cos().abs() - (ia as f64 * h).cos().abs()
            })
            .sum();
        assert!((sum - r.measure).abs() < 1e-10);
    }

    #[test]
    fn jitter_below_floor_is_ignored() {
        let d: Vec<f64> = (0..20).map(|k| 0.5 + if k % 2 == 0 { 0.0 } else { 1e-10 }).collect();
        assert_eq!(blp_measure(&DistinguishabilityTrace::uniform(1.0, d)).unwrap().measure, 0.0);
    }

    #[test]
    fn grid_checks() {
        let short = DistinguishabilityTrace::uniform(1.0, vec![1.0; 5]);
        assert!(matches!(blp_measure(&short), Err(Error::InsufficientData(_))));
        let mut times: Vec<f64> = (0..12).map(|k| k as f64).collect();
        times[6] = 5.5;
        let bad = DistinguishabilityTrace::new(times, vec![1.0; 12]).unwrap();
        assert!(matches!(blp_measure(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn regime_errors_for_fast_noise() {
        let fast = NoiseParams::<f64>::from_color(0.3, 1.0).unwrap();
        assert!(matches!(analytic_blp(&fast), Err(Error::Regime(_))));
        assert!(matches!(revival_blp(&fast), Err(Error::Regime(_))));
        assert!(matches!(revival_blp(&NoiseParams::<f64>::silent()), Err(Error::Regime(_))));
    }

    #[test]
    fn revival_measure_grows_with_amplitude() {
        let mut last = 0.0;
        for om in [1.0, 4.0, 16.0, 64.0] {
            let v = revival_blp(&NoiseParams::<f64>::new(om, 1.0).unwrap()).unwrap();
            assert!(v > last);
            last = v;
        }
    }
}
