//! Filon-type quadrature for Fourier integrals of a smooth amplitude.
//!
//! The amplitude is split into panels on which a degree-8 Chebyshev
//! interpolant reaches the requested accuracy. Each interpolant is stored in
//! monomial form so that `∫ p(ω) e^{iωt} dω` can be evaluated exactly for any
//! `t` from closed-form moments. The cost per evaluation is independent of how
//! many oscillations `e^{iωt}` completes on a panel.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const DEGREE: usize = 8;
const NODES: usize = DEGREE + 1;
const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone)]
struct Panel<T> {
    center: T,
    half: T,
    coeffs: [T; NODES],
}

/// Piecewise polynomial representation of an amplitude on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct FilonPanels<T> {
    panels: Vec<Panel<T>>,
    integral: T,
}

fn chebyshev_nodes<T: Real>() -> [T; NODES] {
    let mut x = [T::zero(); NODES];
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = (T::PI() * (T::count(j) + T::lit(0.5)) / T::count(NODES)).cos();
    }
    x
}

fn check_points<T: Real>() -> [T; NODES] {
    let mut x = [T::zero(); NODES];
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = (T::PI() * T::count(j) / T::count(DEGREE)).cos();
    }
    x
}

/// Monomial coefficients (in the local variable `x ∈ [-1, 1]`) of the
/// polynomial interpolating `values` at the Chebyshev nodes.
fn interpolate<T: Real>(values: &[T; NODES]) -> [T; NODES] {
    let n = T::count(NODES);
    let mut cheb = [T::zero(); NODES];
    for (k, ck) in cheb.iter_mut().enumerate() {
        let mut acc = T::zero();
        for j in 0..NODES {
            let theta = T::PI() * T::count(k) * (T::count(j) + T::lit(0.5)) / n;
            acc = acc + values[j] * theta.cos();
        }
        *ck = T::lit(2.0) * acc / n;
    }
    cheb[0] = cheb[0] / T::lit(2.0);

    let mut mono = [T::zero(); NODES];
    let mut prev = [T::zero(); NODES];
    let mut cur = [T::zero(); NODES];
    prev[0] = T::one();
    cur[1] = T::one();
    for (m, &c) in mono.iter_mut().zip(prev.iter()) {
        *m = *m + cheb[0] * c;
    }
    for (m, &c) in mono.iter_mut().zip(cur.iter()) {
        *m = *m + cheb[1] * c;
    }
    for &ck in cheb.iter().skip(2) {
        let mut next = [T::zero(); NODES];
        for i in 0..NODES {
            let shifted = if i > 0 { cur[i - 1] } else { T::zero() };
            next[i] = T::lit(2.0) * shifted - prev[i];
        }
        for (m, &c) in mono.iter_mut().zip(next.iter()) {
            *m = *m + ck * c;
        }
        prev = cur;
        cur = next;
    }
    mono
}

fn horner<T: Real>(coeffs: &[T; NODES], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

/// `μ_k(s) = ∫_{-1}^{1} x^k e^{isx} dx` for `k = 0..=DEGREE`.
fn moments<T: Real>(s: T) -> [Complex<T>; NODES] {
    let mut mu = [Complex::new(T::zero(), T::zero()); NODES];
    if s.abs() < T::one() {
        // power series; only terms with k + j even survive
        for (k, m) in mu.iter_mut().enumerate() {
            let mut re = T::zero();
            let mut im = T::zero();
            let mut term = T::one(); // s^j / j!
            for j in 0..40usize {
                if j > 0 {
                    term = term * s / T::count(j);
                }
                if (k + j) % 2 == 0 {
                    let w = term * T::lit(2.0) / T::count(k + j + 1);
                    match j % 4 {
                        0 => re = re + w,
                        1 => im = im + w,
                        2 => re = re - w,
                        _ => im = im - w,
                    }
                }
                if term < T::epsilon() * T::lit(1e-3) && j > k {
                    break;
                }
            }
            *m = Complex::new(re, im);
        }
        return mu;
    }
    let (sin, cos) = s.sin_cos();
    let two = T::lit(2.0);
    mu[0] = Complex::new(two * sin / s, T::zero());
    for k in 1..NODES {
        let boundary = if k % 2 == 0 {
            Complex::new(two * sin / s, T::zero())
        } else {
            Complex::new(T::zero(), -two * cos / s)
        };
        let factor = Complex::new(T::zero(), T::count(k) / s);
        mu[k] = boundary + factor * mu[k - 1];
    }
    mu
}

impl<T: Real> FilonPanels<T> {
    /// Builds panels covering the breakpoints (sorted, at least two) so that the
    /// interpolation error integrated over `[lo, hi]` stays below
    /// `rel_tol · ∫|f|`.
    pub fn build<F: Fn(T) -> T>(f: F, breakpoints: &[T], rel_tol: T) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Domain("at least two breakpoints are required".into()));
        }
        let nodes = chebyshev_nodes::<T>();
        let checks = check_points::<T>();
        let lo = breakpoints[0];
        let hi = breakpoints[breakpoints.len() - 1];
        let width = hi - lo;

        // crude scale of ∫|f| from the initial panels
        let mut abs_scale = T::zero();
        for w in breakpoints.windows(2) {
            let c = (w[0] + w[1]) / T::lit(2.0);
            let h = (w[1] - w[0]) / T::lit(2.0);
            let mean = nodes.iter().map(|&x| f(c + h * x).abs()).sum::<T>() / T::count(NODES);
            abs_scale = abs_scale + mean * T::lit(2.0) * h;
        }
        let tol_abs = rel_tol * abs_scale.max(T::min_positive_value());
        let floor = T::epsilon() * T::lit(256.0);

        let mut panels = Vec::new();
        let mut stack: Vec<(T, T, usize)> = breakpoints
            .windows(2)
            .rev()
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1], 0))
            .collect();
        while let Some((a, b, depth)) = stack.pop() {
            let center = (a + b) / T::lit(2.0);
            let half = (b - a) / T::lit(2.0);
            let mut values = [T::zero(); NODES];
            for (v, &x) in values.iter_mut().zip(nodes.iter()) {
                *v = f(center + half * x);
            }
            let coeffs = interpolate(&values);
            let mut err = T::zero();
            let mut fmax = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            for &x in checks.iter() {
                let exact = f(center + half * x);
                fmax = fmax.max(exact.abs());
                err = err.max((exact - horner(&coeffs, x)).abs());
            }
            if !err.is_finite() {
                return Err(Error::QuadratureNonConvergence {
                    lo: a.as_f64(),
                    hi: b.as_f64(),
                    estimate: f64::INFINITY,
                });
            }
            let accepted = err * T::lit(2.0) * half <= tol_abs * T::lit(2.0) * half / width
                || err <= floor * fmax;
            if accepted {
                panels.push(Panel { center, half, coeffs });
            } else if depth >= MAX_DEPTH {
                return Err(Error::QuadratureNonConvergence {
                    lo: a.as_f64(),
                    hi: b.as_f64(),
                    estimate: (err * T::lit(2.0) * half).as_f64(),
                });
            } else {
                stack.push((center, b, depth + 1));
                stack.push((a, center, depth + 1));
            }
        }
        let integral = panels
            .iter()
            .map(|p| {
                let s: T = p
                    .coeffs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| k % 2 == 0)
                    .map(|(k, &c)| c * T::lit(2.0) / T::count(k + 1))
                    .sum();
                s * p.half
            })
            .sum();
        Ok(Self { panels, integral })
    }

    /// `∫ f(ω) dω` over the covered range.
    pub fn integral(&self) -> T {
        self.integral
    }

    #[cfg(test)]
    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// `∫ f(ω) e^{iωt} dω` over the covered range.
    pub fn fourier(&self, t: T) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for p in &self.panels {
            let mu = moments(p.half * t);
            let mut local = Complex::new(T::zero(), T::zero());
            for (c, m) in p.coeffs.iter().zip(mu.iter()) {
                local = local + m * *c;
            }
            let (s, c) = (p.center * t).sin_cos();
            acc = acc + Complex::new(c, s) * local * p.half;
        }
        acc
    }
}
