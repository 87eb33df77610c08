//! Structured oscillator bath: spectral density, correlation integrals
//! `Q₁`, `Q₂`, bath-operator averages and the decay time of `exp(−Q₂)`.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::quadrature::FilonPanels;
use crate::scalar::Real;

/// Parameters of the damped-resonance spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams<T> {
    kappa: T,
    omega0: T,
    gamma: T,
    beta: T,
}

fn positive<T: Real>(name: &'static str, v: T) -> Result<T> {
    if v.is_finite() && v > T::zero() {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

impl<T: Real> BathParams<T> {
    pub fn new(kappa: T, omega0: T, gamma: T, beta: T) -> Result<Self> {
        Ok(Self {
            kappa: positive("kappa", kappa)?,
            omega0: positive("omega0", omega0)?,
            gamma: positive("gamma", gamma)?,
            beta: positive("beta", beta)?,
        })
    }

    /// Builds the parameters from the dimensionless coupling
    /// `α = 4κ²γ/ω₀³` instead of `κ`.
    pub fn from_alpha(alpha: T, omega0: T, gamma: T, beta: T) -> Result<Self> {
        let alpha = positive("alpha", alpha)?;
        let omega0 = positive("omega0", omega0)?;
        let gamma = positive("gamma", gamma)?;
        let kappa = (alpha * omega0.powi(3) / (T::lit(4.0) * gamma)).sqrt();
        Self::new(kappa, omega0, gamma, beta)
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }
    pub fn omega0(&self) -> T {
        self.omega0
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }
    pub fn beta(&self) -> T {
        self.beta
    }

    /// Dimensionless coupling `4κ²γ/ω₀³`.
    pub fn alpha(&self) -> T {
        T::lit(4.0) * self.kappa * self.kappa * self.gamma / self.omega0.powi(3)
    }

    /// Reorganization energy `κ²/ω₀`.
    pub fn reorg_energy(&self) -> T {
        self.kappa * self.kappa / self.omega0
    }

    /// Short-time Gaussian decay time `√(β/E_r)` of `exp(−Q₂)`.
    pub fn short_time_decay(&self) -> T {
        (self.beta / self.reorg_energy()).sqrt()
    }

    /// Numerator constant `8κ²γω₀`.
    fn amplitude(&self) -> T {
        T::lit(8.0) * self.kappa * self.kappa * self.gamma * self.omega0
    }

    /// `(ω² − ω₀²)² + 4γ²ω²`.
    fn denominator(&self, omega: T) -> T {
        let w2 = omega * omega;
        let d = w2 - self.omega0 * self.omega0;
        d * d + T::lit(4.0) * self.gamma * self.gamma * w2
    }
}

/// `J(ω) = 8κ²γω₀ω / [(ω² − ω₀²)² + 4γ²ω²]`.
pub fn spectral_density<T: Real>(omega: T, p: &BathParams<T>) -> Result<T> {
    if !omega.is_finite() || omega < T::zero() {
        return Err(Error::Domain(format!(
            "spectral density needs a finite, non-negative frequency, got {omega}"
        )));
    }
    Ok(p.amplitude() * omega / p.denominator(omega))
}

/// Taylor coefficients of `(coth x − 1/x)/x` in powers of `x²`,
/// `2^{2n} B_{2n} / (2n)!` for `n = 1..=13`.
const COTH_SERIES: [f64; 13] = [
    0.3333333333333333,
    -0.022222222222222223,
    0.0021164021164021165,
    -0.00021164021164021165,
    2.1377799155576935e-05,
    -2.1644042808063972e-06,
    2.1925947851873778e-07,
    -2.2214608789979678e-08,
    2.2507846516808994e-09,
    -2.2805151204592183e-10,
    2.3106432599002624e-11,
    -2.3411706819824882e-12,
    2.3721017400233653e-13,
];

/// `(coth x − 1/x)/x`, summed from its Taylor series below `x = 1/2`.
fn coth_remainder_over_x<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        let x2 = x * x;
        COTH_SERIES.iter().rev().fold(T::zero(), |acc, &c| acc * x2 + T::lit(c))
    } else {
        (T::one() / x.tanh() - T::one() / x) / x
    }
}

/// Fourier representation of `Q₁` and `Q₂` valid for any `t ≥ 0`.
///
/// The `1/ω` (for `Q₁`) and `1/ω²` (for `Q₂`) behaviour of the integrands at
/// the origin is removed by subtracting `ψ₀c²/(ω(ω²+c²))` and
/// `φ₋₂c²/(ω²(ω²+c²))`, whose transforms are known in closed form. The smooth
/// remainders go through Filon quadrature.
#[derive(Debug, Clone)]
pub struct CorrelationIntegrals<T> {
    q1_panels: FilonPanels<T>,
    q2_panels: FilonPanels<T>,
    /// `lim_{ω→0} ω · J(ω)/ω²`
    psi0: T,
    /// `lim_{ω→0} ω² · J(ω)/ω² · coth(βω/2)`
    phi_m2: T,
    c: T,
    cutoff: T,
}

const QUAD_REL_TOL: f64 = 1e-12;
const TAIL_REL_TOL: f64 = 1e-8;

impl<T: Real> CorrelationIntegrals<T> {
    pub fn new(p: &BathParams<T>) -> Result<Self> {
        let two = T::lit(2.0);
        let a = p.amplitude();
        let w0 = p.omega0;
        let d0 = w0.powi(4);
        let psi0 = a / d0;
        let phi_m2 = two * psi0 / p.beta;
        let c = w0;

        // Tail bounds, valid once the cutoff exceeds 2·max(ω₀, γ).
        let tail = |lam: T| -> (T, T) {
            let coth = T::one() / (p.beta * lam / two).tanh();
            let t1 = (T::lit(4.0) * a / (T::lit(9.0) * lam.powi(4)) + psi0 * c * c / (two * lam * lam))
                / (two * T::PI());
            let t2 = two
                * (T::lit(4.0) * a * coth / (T::lit(9.0) * lam.powi(4)) + phi_m2 * c * c / (T::lit(3.0) * lam.powi(3)))
                / (two * T::PI());
            (t1, t2)
        };
        let scale1 = psi0 / T::lit(4.0);
        let scale2 = phi_m2 / (T::lit(4.0) * c);
        let mut cutoff = (T::lit(20.0) * w0)
            .max(T::lit(20.0) / p.beta)
            .max(T::lit(50.0) * p.gamma)
            .max(two * w0.max(p.gamma));
        loop {
            let (t1, t2) = tail(cutoff);
            if t1 <= T::lit(TAIL_REL_TOL) * scale1 && t2 <= T::lit(TAIL_REL_TOL) * scale2 {
                break;
            }
            cutoff = cutoff * two;
            if !cutoff.is_finite() {
                return Err(Error::QuadratureNonConvergence {
                    lo: 0.0,
                    hi: f64::INFINITY,
                    estimate: f64::INFINITY,
                });
            }
        }

        let excess = move |w: T| -> T {
            // (ψ(ω) − ψ₀)/ω² without cancellation
            let w2 = w * w;
            a * (two * w0 * w0 - w2 - T::lit(4.0) * p.gamma * p.gamma) / (p.denominator(w) * d0)
        };
        let r1 = move |w: T| -> T { w * excess(w) + psi0 * w / (w * w + c * c) };
        let r2 = move |w: T| -> T {
            let psi = a / p.denominator(w);
            let x = p.beta * w / two;
            two / p.beta * excess(w)
                + phi_m2 / (w * w + c * c)
                + psi * p.beta / two * coth_remainder_over_x(x)
        };

        let breakpoints = Self::breakpoints(p, cutoff);
        let q1_panels = FilonPanels::build(r1, &breakpoints, T::lit(QUAD_REL_TOL))?;
        let q2_panels = FilonPanels::build(r2, &breakpoints, T::lit(QUAD_REL_TOL))?;
        Ok(Self {
            q1_panels,
            q2_panels,
            psi0,
            phi_m2,
            c,
            cutoff,
        })
    }

    fn breakpoints(p: &BathParams<T>, cutoff: T) -> Vec<T> {
        let mut bps = vec![T::zero(), cutoff];
        let w0 = p.omega0;
        let mut w = w0 / T::lit(64.0);
        while w < cutoff {
            bps.push(w);
            w = w * T::lit(2.0);
        }
        for j in -4i32..=4 {
            let v = w0 + p.gamma * T::lit(f64::from(j));
            if v > T::zero() && v < cutoff {
                bps.push(v);
            }
        }
        let thermal = T::lit(2.0) * T::PI() / p.beta;
        if thermal < cutoff {
            bps.push(thermal);
        }
        bps.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        bps.dedup_by(|x, y| (*x - *y).abs() <= T::epsilon() * y.abs().max(T::one()));
        bps
    }

    /// Frequency above which the integrands are neglected.
    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    /// `Q₁(t) = (1/2π)∫₀^∞ J(ω)/ω² sin(ωt) dω`.
    pub fn q1(&self, t: T) -> T {
        if t == T::zero() {
            return T::zero();
        }
        let two_pi = T::lit(2.0) * T::PI();
        let singular = self.psi0 * T::FRAC_PI_2() * (-(-self.c * t).exp_m1());
        (self.q1_panels.fourier(t).im + singular) / two_pi
    }

    /// `Q₂(t) = (1/2π)∫₀^∞ J(ω)/ω² coth(βω/2)(1 − cos ωt) dω`.
    pub fn q2(&self, t: T) -> T {
        if t == T::zero() {
            return T::zero();
        }
        let two_pi = T::lit(2.0) * T::PI();
        let x = self.c * t;
        // x − (1 − e^{−x})
        let shifted = if x < T::lit(1e-2) {
            let x2 = x * x;
            x2 / T::lit(2.0) - x2 * x / T::lit(6.0) + x2 * x2 / T::lit(24.0) - x2 * x2 * x / T::lit(120.0)
        } else {
            x + (-x).exp_m1()
        };
        let singular = self.phi_m2 * T::FRAC_PI_2() / self.c * shifted;
        let smooth = self.q2_panels.integral() - self.q2_panels.fourier(t).re;
        ((smooth + singular) / two_pi).max(T::zero())
    }
}

/// `Q₁`, `Q₂` tabulated on a uniform grid `t_k = k·step`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable<T> {
    step: T,
    q1: Vec<T>,
    q2: Vec<T>,
}

impl<T: Real> CorrelationTable<T> {
    pub fn step(&self) -> T {
        self.step
    }
    /// Number of grid intervals.
    pub fn intervals(&self) -> usize {
        self.q1.len() - 1
    }
    pub fn horizon(&self) -> T {
        self.step * T::count(self.intervals())
    }
    pub fn time(&self, k: usize) -> T {
        self.step * T::count(k)
    }
    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.q1.len()).map(move |k| self.time(k))
    }
    pub fn q1(&self) -> &[T] {
        &self.q1
    }
    pub fn q2(&self) -> &[T] {
        &self.q2
    }

    /// Kernel envelope `G(t_k) = exp(−Q₂(t_k))` on the grid.
    pub fn envelope(&self) -> Vec<T> {
        self.q2.iter().map(|q| (-*q).exp()).collect()
    }

    /// Linearly interpolated `(Q₁(t), Q₂(t))`.
    pub fn at(&self, t: T) -> Result<(T, T)> {
        let (k, frac) = self.locate(t)?;
        if frac == T::zero() {
            return Ok((self.q1[k], self.q2[k]));
        }
        let lerp = |v: &[T]| v[k] + (v[k + 1] - v[k]) * frac;
        Ok((lerp(&self.q1), lerp(&self.q2)))
    }

    fn locate(&self, t: T) -> Result<(usize, T)> {
        let horizon = self.horizon();
        let slack = T::epsilon() * T::lit(16.0) * horizon;
        if !(t >= -slack && t <= horizon + slack) {
            return Err(Error::OutOfRange {
                t: t.as_f64(),
                max: horizon.as_f64(),
            });
        }
        let pos = (t / self.step).max(T::zero());
        let n = self.intervals();
        let k = pos.floor().to_usize().unwrap_or(0).min(n);
        if k == n {
            return Ok((n, T::zero()));
        }
        Ok((k, (pos - T::count(k)).min(T::one())))
    }
}

/// Tabulates `Q₁`, `Q₂` on `n + 1` uniform instants spanning `[0, horizon]`.
pub fn compute_correlations<T: Real>(p: &BathParams<T>, horizon: T, n: usize) -> Result<CorrelationTable<T>> {
    let integrals = CorrelationIntegrals::new(p)?;
    tabulate(&integrals, horizon, n)
}

/// Tabulates already-prepared integrals.
pub fn tabulate<T: Real>(integrals: &CorrelationIntegrals<T>, horizon: T, n: usize) -> Result<CorrelationTable<T>> {
    if !(horizon.is_finite() && horizon > T::zero()) {
        return Err(invalid("horizon", format!("must be finite and > 0, got {horizon}")));
    }
    if n < 2 {
        return Err(invalid("n", format!("grid needs at least 2 intervals, got {n}")));
    }
    let step = horizon / T::count(n);
    let mut q1 = Vec::with_capacity(n + 1);
    let mut q2 = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = step * T::count(k);
        q1.push(integrals.q1(t));
        q2.push(integrals.q2(t));
    }
    Ok(CorrelationTable { step, q1, q2 })
}

/// Operator ordering of the bath two-point average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `⟨B±(0)B∓(t)⟩ = exp(−Q₂(t) − iQ₁(t))`
    Plus,
    /// `⟨B±(t)B∓(0)⟩ = exp(−Q₂(t) + iQ₁(t))`
    Minus,
}

pub fn bath_operator_average<T: Real>(table: &CorrelationTable<T>, t: T, sign: Sign) -> Result<Complex<T>> {
    let (q1, q2) = table.at(t)?;
    let phase = match sign {
        Sign::Plus => -q1,
        Sign::Minus => q1,
    };
    Ok(Complex::from_polar((-q2).exp(), phase))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    Exponential,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit<T> {
    pub tau_d: T,
    pub model: DecayModel,
    /// The envelope never fell below 0.1; `tau_d` is then the horizon.
    pub no_decay: bool,
    /// Whether the envelope of interior maxima was fitted.
    pub oscillatory: bool,
}

const FIT_FLOOR: f64 = 1e-3;
const NO_DECAY_LEVEL: f64 = 0.1;

/// Fits `exp(−t/τ)` and `exp(−t²/τ²)` to a kernel envelope sampled with a
/// uniform `step`, keeping the model with the smaller log-space residual.
///
/// Envelopes with at least two interior maxima above `1e-3` are treated as
/// oscillatory and only their maxima are fitted; otherwise the initial decay
/// (up to the first local minimum or the `1e-3` floor) is fitted.
pub fn fit_decay_time<T: Real>(step: T, g: &[T]) -> Result<DecayFit<T>> {
    if !(step.is_finite() && step > T::zero()) {
        return Err(invalid("step", format!("must be finite and > 0, got {step}")));
    }
    if g.len() < 3 {
        return Err(Error::InsufficientData(format!("{} samples", g.len())));
    }
    if (g[0] - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::Domain(format!("envelope must start at 1, got {}", g[0])));
    }
    let horizon = step * T::count(g.len() - 1);
    let floor = T::lit(FIT_FLOOR);
    if g.iter().all(|&v| v > T::lit(NO_DECAY_LEVEL)) {
        return Ok(DecayFit {
            tau_d: horizon,
            model: DecayModel::Exponential,
            no_decay: true,
            oscillatory: false,
        });
    }

    let maxima: Vec<usize> = (1..g.len() - 1)
        .filter(|&k| g[k] > g[k - 1] && g[k] >= g[k + 1] && g[k] > floor)
        .collect();
    let oscillatory = maxima.len() >= 2;
    let points: Vec<(T, T)> = if oscillatory {
        std::iter::once(0)
            .chain(maxima)
            .map(|k| (step * T::count(k), g[k].ln()))
            .collect()
    } else {
        let mut pts = vec![(T::zero(), T::zero())];
        for k in 1..g.len() {
            if g[k] < floor || g[k] > g[k - 1] {
                break;
            }
            pts.push((step * T::count(k), g[k].ln()));
        }
        pts
    };
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} fit points above the {FIT_FLOOR} floor",
            points.len()
        )));
    }

    // least squares through the origin: ln g = −a t  and  ln g = −b t²
    let (mut sty, mut stt, mut st2y, mut st4) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &(t, y) in &points {
        sty = sty + t * y;
        stt = stt + t * t;
        st2y = st2y + t * t * y;
        st4 = st4 + t.powi(4);
    }
    let a = -sty / stt;
    let b = -st2y / st4;
    let residual = |f: &dyn Fn(T) -> T| -> T { points.iter().map(|&(t, y)| (y - f(t)).powi(2)).sum() };
    let res_exp = residual(&|t| -a * t);
    let res_gauss = residual(&|t| -b * t * t);
    let (tau_d, model) = if res_gauss < res_exp {
        (T::one() / b.sqrt(), DecayModel::Gaussian)
    } else {
        (T::one() / a, DecayModel::Exponential)
    };
    if !(tau_d.is_finite() && tau_d > T::zero()) {
        return Err(Error::InsufficientData("fit produced a non-positive decay rate".into()));
    }
    Ok(DecayFit {
        tau_d,
        model,
        no_decay: false,
        oscillatory,
    })
}

/// Fits `τ_d` to `exp(−Q₂)` tabulated on `[0, horizon]` with roughly the given
/// step. When the envelope falls below the fit floor within a few samples,
/// the initial drop is re-tabulated on a finer grid.
pub fn decay_time<T: Real>(p: &BathParams<T>, horizon: T, step: T) -> Result<DecayFit<T>> {
    if !(horizon.is_finite() && horizon > T::zero() && step > T::zero() && step < horizon) {
        return Err(invalid("horizon", format!("need 0 < step < horizon, got step {step}, horizon {horizon}")));
    }
    let integrals = CorrelationIntegrals::new(p)?;
    let n = (horizon / step).ceil().to_usize().unwrap_or(usize::MAX).max(2);
    let table = tabulate(&integrals, horizon, n)?;
    let g = table.envelope();
    let floor = T::lit(FIT_FLOOR);
    let drop = (1..g.len()).find(|&k| g[k] < floor || g[k] > g[k - 1]);
    match drop {
        Some(k) if k < MIN_FIT_SAMPLES && g[k] < floor => {
            let fine = tabulate(&integrals, table.time(k) * T::lit(2.0), 20 * MIN_FIT_SAMPLES)?;
            fit_decay_time(fine.step(), &fine.envelope())
        }
        _ => fit_decay_time(table.step(), &g),
    }
}

const MIN_FIT_SAMPLES: usize = 20;
