//! Trace distance, the BLP measure and the strong-coupling limit against
//! independent closed forms.

use num_complex::Complex64;
use polaron_nm::{
    analytic_blp, analytic_distinguishability, bloch_to_density, blp_measure, reduced_limit_solution, revival_blp,
    trace_distance, BlochState, DistinguishabilityTrace, NoiseParams, SystemParams,
};
use proptest::prelude::*;
use std::f64::consts::PI;

/// Half the sum of |eigenvalues| of ρ₁ − ρ₂ from the 2×2 Hermitian formula.
fn trace_distance_oracle(a: &BlochState<f64>, b: &BlochState<f64>) -> f64 {
    let (ra, rb) = (bloch_to_density(a), bloch_to_density(b));
    let d = |i: usize, j: usize| ra[i][j] - rb[i][j];
    let mean = 0.5 * (d(0, 0).re + d(1, 1).re);
    let radius = (0.25 * (d(0, 0).re - d(1, 1).re).powi(2) + d(0, 1).norm_sqr()).sqrt();
    0.5 * ((mean + radius).abs() + (mean - radius).abs())
}

fn ball_point() -> impl Strategy<Value = BlochState<f64>> {
    (0.0f64..=1.0, -1.0f64..=1.0, 0.0..2.0 * PI).prop_map(|(r, c, phi)| {
        let s = (1.0 - c * c).sqrt();
        BlochState::new(r * s * phi.cos(), r * s * phi.sin(), r * c)
    })
}

proptest! {
    #[test]
    fn trace_distance_matches_eigenvalues(a in ball_point(), b in ball_point()) {
        prop_assert!((trace_distance(&a, &b) - trace_distance_oracle(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_is_a_metric(a in ball_point(), b in ball_point(), c in ball_point()) {
        let d = trace_distance;
        prop_assert!(d(&a, &a) == 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-15);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!(d(&a, &b) <= 1.0 + 1e-12);
    }
}

/// `S₀` and `dS₀/dt` from the exponential form with complex `η`.
fn s0_closed(nu: f64, omega: f64, t: f64) -> (f64, f64) {
    let eta = Complex64::new(nu * nu - 4.0 * omega * omega, 0.0).sqrt();
    let (plus, minus) = (nu + eta, nu - eta);
    let (ep, em) = ((-plus * t / 2.0).exp(), (-minus * t / 2.0).exp());
    let s0 = (plus * em - minus * ep) / (2.0 * eta);
    let ds0 = -(4.0 * omega * omega) / (4.0 * eta) * (em - ep);
    (s0.re, ds0.re)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-12 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) < f(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    f(0.5 * (a + b))
}

fn bisect_zero(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sum of rises of `|S₀|` located by bracketing sign changes of `S₀` and
/// refining the maxima in between.
fn revival_oracle(nu: f64, omega: f64, horizon: f64) -> f64 {
    let s0 = |t: f64| s0_closed(nu, omega, t).0;
    let h = 1e-3;
    let n = (horizon / h) as usize;
    let mut zeros = vec![];
    for k in 0..n {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        if s0(a).signum() != s0(b).signum() {
            zeros.push(bisect_zero(s0, a, b));
        }
    }
    zeros.windows(2).map(|w| golden_max(|t| s0(t).abs(), w[0], w[1])).sum()
}

#[test]
fn revival_sum_matches_closed_form() {
    for (nu, omega) in [(1.0, 1.0), (1.0, 2.0), (0.5, 2.0), (PI / 2.0, PI)] {
        let noise = NoiseParams::new(omega, nu).unwrap();
        let want = revival_oracle(nu, omega, 80.0);
        let got = revival_blp(&noise).unwrap();
        assert!((got - want).abs() < 1e-6, "nu={nu} omega={omega}: {got} vs {want}");
    }
}

#[test]
fn literal_formula_differs_from_the_revival_sum() {
    let noise = NoiseParams::new(2.0, 1.0).unwrap();
    let literal: f64 = analytic_blp(&noise).unwrap();
    assert!(literal < 0.0);
    assert!((literal - revival_blp(&noise).unwrap()).abs() > 0.5);
}

#[test]
fn sampled_measure_converges_with_the_grid() {
    let noise = NoiseParams::new(2.0, 1.0).unwrap();
    let measure = |h: f64| {
        let n = (40.0 / h).round() as usize;
        let d = (0..=n).map(|k| analytic_distinguishability(&noise, k as f64 * h)).collect();
        blp_measure(&DistinguishabilityTrace::uniform(h, d)).unwrap().measure
    };
    let (coarse, fine) = (measure(0.02), measure(0.01));
    assert!((coarse - fine).abs() / fine < 0.01);
    assert!((fine - revival_blp(&noise).unwrap()).abs() / fine < 0.01);
}

#[test]
fn monotone_regime_has_no_revivals() {
    for k in [0.1, 0.3, 0.5] {
        let noise = NoiseParams::from_color(k, 1.0).unwrap();
        let d = (0..=4000).map(|i| analytic_distinguishability(&noise, i as f64 * 0.01)).collect();
        let r = blp_measure(&DistinguishabilityTrace::uniform(0.01, d)).unwrap();
        assert_eq!(r.measure, 0.0, "K={k}");
        assert!(revival_blp(&noise).is_err());
    }
}

#[test]
fn reduced_limit_matches_kubo_oscillator() {
    let noise = NoiseParams::new(2.0, 1.0).unwrap();
    for eps in [0.0, 1.0, 5.0] {
        let sys = SystemParams::new(eps, 0.0).unwrap();
        for t in [0.0, 0.3, 1.7, 4.0, 9.5] {
            let got = reduced_limit_solution(&sys, &noise, t, [1.0, 0.0, 0.0, 0.0]).unwrap();
            let (s0, ds0) = s0_closed(1.0, 2.0, t);
            let rot = Complex64::from_polar(1.0, -eps * t);
            let u = rot * s0;
            let w = rot * Complex64::i() * ds0 / 2.0;
            let want = [u.re, u.im, w.re, w.im];
            for i in 0..4 {
                assert!((got[i] - want[i]).abs() < 1e-10, "eps={eps} t={t} i={i}");
            }
            let d = (got[0].hypot(got[1]) - analytic_distinguishability(&noise, t)).abs();
            assert!(d < 1e-10);
        }
    }
}
