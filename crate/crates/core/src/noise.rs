//! Symmetric dichotomous (random telegraph) noise: trajectories, the
//! accumulated Kubo phase, and the noise-averaged propagators `S₀`, `S₁`, `S₂`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Telegraph noise amplitude `Ω` and correlation rate `ν`, with
/// `⟨α(t)α(t')⟩ = exp(−ν|t − t'|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams<T> {
    omega_amp: T,
    nu: T,
}

impl<T: Real> NoiseParams<T> {
    pub fn new(omega_amp: T, nu: T) -> Result<Self> {
        if !(omega_amp.is_finite() && omega_amp >= T::zero()) {
            return Err(invalid("omega", format!("amplitude must be finite and >= 0, got {omega_amp}")));
        }
        if !(nu.is_finite() && nu > T::zero()) {
            return Err(invalid("nu", format!("switching rate must be finite and > 0, got {nu}")));
        }
        Ok(Self { omega_amp, nu })
    }

    /// Builds the parameters from the noise color `K = Ω/ν`.
    pub fn from_color(color: T, nu: T) -> Result<Self> {
        if !(color.is_finite() && color >= T::zero()) {
            return Err(invalid("K", format!("noise color must be finite and >= 0, got {color}")));
        }
        Self::new(color * nu, nu)
    }

    /// Noise-free limit (`Ω = 0`); the rate is irrelevant but kept positive.
    pub fn silent() -> Self {
        Self {
            omega_amp: T::zero(),
            nu: T::one(),
        }
    }

    pub fn omega_amp(&self) -> T {
        self.omega_amp
    }
    pub fn nu(&self) -> T {
        self.nu
    }
    pub fn is_silent(&self) -> bool {
        self.omega_amp == T::zero()
    }

    /// Noise color `K = Ω/ν`.
    pub fn color(&self) -> T {
        self.omega_amp / self.nu
    }

    /// `η² = ν² − 4Ω²`.
    pub fn eta_squared(&self) -> T {
        self.nu * self.nu - T::lit(4.0) * self.omega_amp * self.omega_amp
    }

    /// `η = √(ν² − 4Ω²)`, purely imaginary for slow noise (`K > 1/2`).
    pub fn eta(&self) -> Complex<T> {
        let e2 = self.eta_squared();
        if e2 >= T::zero() {
            Complex::new(e2.sqrt(), T::zero())
        } else {
            Complex::new(T::zero(), (-e2).sqrt())
        }
    }

    pub fn nu_plus(&self) -> Complex<T> {
        Complex::new(self.nu, T::zero()) + self.eta()
    }
    pub fn nu_minus(&self) -> Complex<T> {
        Complex::new(self.nu, T::zero()) - self.eta()
    }

    /// Whether `S₀` oscillates (has zeros), i.e. `K > 1/2`.
    pub fn is_oscillatory(&self) -> bool {
        self.eta_squared() < T::zero()
    }
}

/// Noise propagators at one instant. `S₁` is purely imaginary; `s1_im`
/// holds its imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagators<T> {
    pub s0: T,
    pub s1_im: T,
    pub s2: T,
}

impl<T: Real> Propagators<T> {
    pub fn s1(&self) -> Complex<T> {
        Complex::new(T::zero(), self.s1_im)
    }
}

/// `(cosh x, sinh x / x)` as functions of `z = x²`, real for either sign.
fn even_hyperbolics<T: Real>(z: T) -> (T, T) {
    if z >= T::zero() {
        let x = z.sqrt();
        let sinhc = if x < T::lit(1e-4) { T::one() + z / T::lit(6.0) } else { x.sinh() / x };
        (x.cosh(), sinhc)
    } else {
        let y = (-z).sqrt();
        let sinc = if y < T::lit(1e-4) { T::one() + z / T::lit(6.0) } else { y.sin() / y };
        (y.cos(), sinc)
    }
}

/// Noise-averaged propagators of the Kubo oscillator:
///
/// `S₀ = (ν₊e^{−tν₋/2} − ν₋e^{−tν₊/2})/(2η)`,
/// `S₁ = i(Ω/η)(e^{−tν₊/2} − e^{−tν₋/2})`,
/// `S₂ = (ν₊e^{−tν₊/2} − ν₋e^{−tν₋/2})/(2η)`.
///
/// They are evaluated through `cosh(ηt/2)` and `sinh(ηt/2)/(ηt/2)`, which
/// depend only on `η²t²` and stay real and regular across `η = 0`.
pub fn propagators<T: Real>(p: &NoiseParams<T>, t: T) -> Propagators<T> {
    let half_t = t / T::lit(2.0);
    let decay = (-p.nu * half_t).exp();
    let (ch, shc) = even_hyperbolics(p.eta_squared() * half_t * half_t);
    let drift = p.nu * half_t * shc;
    Propagators {
        s0: decay * (ch + drift),
        s1_im: -p.omega_amp * t * decay * shc,
        s2: decay * (ch - drift),
    }
}

/// One realization of `α(t) ∈ {±1}` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphTrajectory<T> {
    jump_times: Vec<T>,
    /// `∫₀^{jump_k} α dτ`
    phase_at_jump: Vec<T>,
    initial: i8,
    horizon: T,
}

impl<T: Real> TelegraphTrajectory<T> {
    /// Builds a trajectory from explicit jump times (strictly increasing,
    /// within `[0, horizon]`).
    pub fn new(initial: i8, jump_times: Vec<T>, horizon: T) -> Result<Self> {
        if initial != 1 && initial != -1 {
            return Err(invalid("initial", format!("must be +1 or -1, got {initial}")));
        }
        if !(horizon.is_finite() && horizon > T::zero()) {
            return Err(invalid("horizon", format!("must be finite and > 0, got {horizon}")));
        }
        if jump_times.windows(2).any(|w| w[1] <= w[0])
            || jump_times.iter().any(|&j| !(j >= T::zero() && j <= horizon))
        {
            return Err(invalid("jump_times", "must be strictly increasing within [0, horizon]"));
        }
        let mut phase_at_jump = Vec::with_capacity(jump_times.len());
        let mut phase = T::zero();
        let mut last = T::zero();
        let mut value = T::from_i8(initial).expect("±1");
        for &j in &jump_times {
            phase = phase + value * (j - last);
            phase_at_jump.push(phase);
            last = j;
            value = -value;
        }
        Ok(Self {
            jump_times,
            phase_at_jump,
            initial,
            horizon,
        })
    }

    pub fn jump_times(&self) -> &[T] {
        &self.jump_times
    }
    pub fn initial_value(&self) -> i8 {
        self.initial
    }
    pub fn horizon(&self) -> T {
        self.horizon
    }

    fn check(&self, t: T) -> Result<()> {
        if t >= T::zero() && t <= self.horizon {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                t: t.as_f64(),
                max: self.horizon.as_f64(),
            })
        }
    }

    /// Number of jumps at or before `t`.
    fn jumps_until(&self, t: T) -> usize {
        self.jump_times.partition_point(|&j| j <= t)
    }

    fn sign_after(&self, jumps: usize) -> T {
        let v = if jumps.is_multiple_of(2) { self.initial } else { -self.initial };
        T::from_i8(v).expect("±1")
    }

    /// `α(t)`; at a jump instant the value after the jump is returned.
    pub fn value_at(&self, t: T) -> Result<T> {
        self.check(t)?;
        Ok(self.sign_after(self.jumps_until(t)))
    }

    /// `∫₀ᵗ α(τ) dτ`.
    pub fn cumulative_phase(&self, t: T) -> Result<T> {
        self.check(t)?;
        let k = self.jumps_until(t);
        let (base, start) = if k == 0 {
            (T::zero(), T::zero())
        } else {
            (self.phase_at_jump[k - 1], self.jump_times[k - 1])
        };
        Ok(base + self.sign_after(k) * (t - start))
    }

    /// `∫_{t1}^{t2} α(τ) dτ`, summed exactly over the constant segments.
    pub fn kubo_phase(&self, t1: T, t2: T) -> Result<T> {
        if t2 < t1 {
            return Err(Error::Domain(format!("reversed interval [{t1}, {t2}]")));
        }
        Ok(self.cumulative_phase(t2)? - self.cumulative_phase(t1)?)
    }
}

/// Samples a trajectory from the stationary process: `α(0) = ±1` with equal
/// probability and flips after exponential waiting times of rate `ν/2`, which
/// yields the correlation `exp(−ν|t − t'|)`.
pub fn sample_trajectory<T: Real>(p: &NoiseParams<T>, horizon: T, seed: u64) -> Result<TelegraphTrajectory<T>> {
    sample_trajectory_stream(p, horizon, seed, 0)
}

/// Like [`sample_trajectory`], drawing from substream `stream` of the master
/// seed so that ensemble members are independent and order-free.
pub fn sample_trajectory_stream<T: Real>(
    p: &NoiseParams<T>,
    horizon: T,
    seed: u64,
    stream: u64,
) -> Result<TelegraphTrajectory<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    sample_with(p, horizon, &mut rng)
}

fn sample_with<T: Real, R: Rng>(p: &NoiseParams<T>, horizon: T, rng: &mut R) -> Result<TelegraphTrajectory<T>> {
    if !(horizon.is_finite() && horizon > T::zero()) {
        return Err(invalid("horizon", format!("must be finite and > 0, got {horizon}")));
    }
    let initial: i8 = if rng.gen::<bool>() { 1 } else { -1 };
    let rate = p.nu().as_f64() / 2.0;
    let end = horizon.as_f64();
    let mut jumps = Vec::new();
    let mut t = 0.0f64;
    loop {
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / rate;
        if t > end {
            break;
        }
        let jt = T::lit(t);
        if jumps.last().is_none_or(|&l: &T| jt > l) {
            jumps.push(jt);
        }
    }
    TelegraphTrajectory::new(initial, jumps, horizon)
}
