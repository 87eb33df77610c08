//! Solver properties: exact limits, cross-method consistency, linearity,
//! refinement behaviour and the Monte-Carlo equivalence of the averaged
//! memory-kernel equations.

use polaron_nm::{
    bath::CorrelationTable, coefficients_gamma, compute_correlations, ensemble_average, kernels_k, optimal_initial_pair,
    sample_trajectory, solve_per_realization, Averaging, AveragedState, BathParams, BlochState, KernelTables, Method,
    NoiseParams, SolverConfig, SystemParams, TelegraphTrajectory, Trajectory,
};
use proptest::prelude::*;
use std::f64::consts::PI;

type Series = Trajectory<f64, AveragedState<f64>>;

fn fig3_bath() -> BathParams<f64> {
    BathParams::from_alpha(0.035, 10.0, 1.0, 0.1).unwrap()
}

fn fig3_noise() -> NoiseParams<f64> {
    NoiseParams::new(PI, PI / 2.0).unwrap()
}

fn tables(bath: &BathParams<f64>, sys: &SystemParams<f64>, noise: &NoiseParams<f64>, horizon: f64, h: f64) -> KernelTables<f64> {
    let cfg = SolverConfig::new(horizon, h, Method::Tcl, Averaging::Exact).unwrap();
    KernelTables::new(bath, sys, noise, &cfg).unwrap()
}

fn solve(t: &KernelTables<f64>, method: Method, p: BlochState<f64>) -> Series {
    let init = AveragedState::uncorrelated(p);
    match method {
        Method::Tcl => t.solve_tcl(init),
        Method::Nz => t.solve_nz(init),
    }
    .unwrap()
}

fn sup_diff(a: &Series, b: &Series) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| {
            let (x, y) = (x.as_array(), y.as_array());
            (0..6).map(move |i| (x[i] - y[i]).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn free_precession_without_tunneling_or_noise() {
    let sys = SystemParams::new(1.3, 0.0).unwrap();
    let t = tables(&fig3_bath(), &sys, &NoiseParams::silent(), 10.0, 0.01);
    let init = BlochState::new(0.8, 0.0, 0.6);
    for m in [Method::Tcl, Method::Nz] {
        let s = solve(&t, m, init);
        for (k, st) in s.states.iter().enumerate() {
            let time = s.time(k);
            assert!((st.p.px - 0.8 * (1.3 * time).cos()).abs() < 1e-8, "{m:?} t={time}");
            assert!((st.p.py + 0.8 * (1.3 * time).sin()).abs() < 1e-8);
            assert!((st.p.pz - 0.6).abs() < 1e-12);
        }
        let tr = sample_trajectory(&NoiseParams::silent(), 10.0, 1).unwrap();
        let per = solve_per_realization(&t, &tr, m, init).unwrap();
        for (k, st) in per.states.iter().enumerate() {
            assert!((st.px - 0.8 * (1.3 * per.time(k)).cos()).abs() < 1e-10);
        }
    }
}

#[test]
fn kernels_at_the_origin_and_limits() {
    let bath = fig3_bath();
    let table = compute_correlations(&bath, 2.0, 200).unwrap();
    let sys = SystemParams::new(1.0, 0.5).unwrap();
    let k = kernels_k(0.0, &table, &sys, &fig3_noise()).unwrap();
    assert_eq!((k.k1, k.k3, k.k4), (0.0, 0.0, 0.0));
    assert!((k.k2 - 1.0).abs() < 1e-15 && (k.k5 - 1.0).abs() < 1e-15);
    // Without amplitude the noise only survives through its two-time
    // correlation e^{−ντ}, which weights K₅.
    let mute = NoiseParams::new(0.0, 0.8).unwrap();
    let quiet = kernels_k(0.7, &table, &sys, &mute).unwrap();
    assert_eq!((quiet.k3, quiet.k4), (0.0, 0.0));
    assert!((quiet.k5 - quiet.k2 * (-0.8f64 * 0.7).exp()).abs() < 1e-14);
    let off = SystemParams::new(1.0, 0.0).unwrap();
    let g = coefficients_gamma(1.5, &table, &off, &fig3_noise()).unwrap();
    assert_eq!(g.g, [0.0; 6]);
    assert!(kernels_k(2.5, &table, &sys, &fig3_noise()).is_err());
}

/// Simpson's rule for Γ₂ on a table ten times finer than the solver's grid.
fn gamma2_oracle(table: &CorrelationTable<f64>, sys: &SystemParams<f64>, noise: &NoiseParams<f64>, t: f64) -> f64 {
    let n = ((t / table.step()).round() as usize) & !1;
    let h = table.step();
    let mut acc = 0.0;
    for k in 0..=n {
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * kernels_k(k as f64 * h, table, sys, noise).unwrap().k2;
    }
    acc * h / 3.0
}

#[test]
fn gamma2_matches_refined_quadrature() {
    let bath = fig3_bath();
    let sys = SystemParams::new(1.0, 0.3).unwrap();
    let noise = fig3_noise();
    let t = tables(&bath, &sys, &noise, 4.0, 0.01);
    let fine = compute_correlations(&bath, 4.0, (4.0 / (t.fine_step() / 10.0)).round() as usize).unwrap();
    for time in [0.5, 1.0, 2.5, 4.0] {
        let got = t.gammas(time).unwrap().g[1];
        let want = gamma2_oracle(&fine, &sys, &noise, time);
        assert!((got - want).abs() < 1e-6, "t={time}: {got} vs {want}");
    }
}

#[test]
fn silent_noise_decouples_correlators() {
    let bath = fig3_bath();
    let sys = SystemParams::new(1.0, 0.3).unwrap();
    let quiet = tables(&bath, &sys, &NoiseParams::new(0.0, 2.0).unwrap(), 6.0, 0.01);
    let silent = tables(&bath, &sys, &NoiseParams::silent(), 6.0, 0.01);
    let p = BlochState::new(0.6, 0.0, 0.8);
    for m in [Method::Tcl, Method::Nz] {
        let a = solve(&quiet, m, p);
        let b = solve(&silent, m, p);
        assert!(sup_diff(&a, &b) < 1e-8);
        assert!(a.states.iter().all(|s| s.a == [0.0; 3]));
    }
}

#[test]
fn per_realization_matches_averaged_without_noise() {
    // With Ω = 0 both describe the same equations; their discretizations
    // differ at O(h²), so the gap must shrink fourfold under halving.
    let bath = fig3_bath();
    let sys = SystemParams::new(1.0, 0.3).unwrap();
    let silent = NoiseParams::silent();
    let p = BlochState::new(0.6, 0.0, 0.8);
    for m in [Method::Tcl, Method::Nz] {
        let gap = |h: f64| {
            let t = tables(&bath, &sys, &silent, 5.0, h);
            let avg = solve(&t, m, p);
            let per = solve_per_realization(&t, &sample_trajectory(&silent, 5.0, 9).unwrap(), m, p).unwrap();
            avg.states
                .iter()
                .zip(&per.states)
                .map(|(a, b)| (a.p.px - b.px).abs().max((a.p.py - b.py).abs()).max((a.p.pz - b.pz).abs()))
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (gap(0.02), gap(0.01));
        assert!(coarse < 1e-3 && fine < coarse / 3.0, "{m:?}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn constant_noise_is_a_static_bias_shift() {
    let bath = fig3_bath();
    let noise = fig3_noise();
    let sys = SystemParams::new(1.0, 0.3).unwrap();
    let shifted = SystemParams::new(1.0 + PI, 0.3).unwrap();
    let a = tables(&bath, &sys, &noise, 5.0, 0.01);
    let b = tables(&bath, &shifted, &NoiseParams::silent(), 5.0, 0.01);
    let stuck = TelegraphTrajectory::new(1, vec![], 5.0).unwrap();
    let quiet = TelegraphTrajectory::new(-1, vec![], 5.0).unwrap();
    let p = BlochState::new(1.0, 0.0, 0.0);
    for m in [Method::Tcl, Method::Nz] {
        let x = solve_per_realization(&a, &stuck, m, p).unwrap();
        let y = solve_per_realization(&b, &quiet, m, p).unwrap();
        for (u, v) in x.states.iter().zip(&y.states) {
            assert!((u.px - v.px).abs() < 1e-11 && (u.py - v.py).abs() < 1e-11 && (u.pz - v.pz).abs() < 1e-11);
        }
    }
}

#[test]
fn populations_relax_to_the_stationary_point() {
    // Setting dP_z/dt = 0 at large t gives P_z = −Γ₁(∞)/Γ₂(∞).
    let sys = SystemParams::new(1.0, 1.0).unwrap();
    let t = tables(&fig3_bath(), &sys, &NoiseParams::silent(), 60.0, 0.01);
    let g = t.gammas(60.0).unwrap().g;
    let fixed = -g[0] / g[1];
    assert!(fixed.abs() > 1e-2);
    for m in [Method::Tcl, Method::Nz] {
        let s = solve(&t, m, BlochState::new(0.0, 0.0, 1.0));
        let end = s.states.last().unwrap().p.pz;
        assert!((end - fixed).abs() < 1e-6, "{m:?}: {end} vs {fixed}");
    }
}

#[test]
fn coherences_and_populations_decouple() {
    let t = tables(&fig3_bath(), &SystemParams::new(1.0, 0.3).unwrap(), &fig3_noise(), 5.0, 0.01);
    for m in [Method::Tcl, Method::Nz] {
        let a = solve(&t, m, BlochState::new(1.0, 0.0, 0.0));
        let b = solve(&t, m, BlochState::new(0.0, -0.5, 0.0));
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((x.p.pz - y.p.pz).abs() < 1e-14 && (x.a[2] - y.a[2]).abs() < 1e-14);
        }
        let c = solve(&t, m, BlochState::new(0.0, 0.0, 0.7));
        assert!(c.states.iter().all(|s| s.p.px == 0.0 && s.p.py == 0.0 && s.a[0] == 0.0 && s.a[1] == 0.0));
    }
}

#[test]
fn optimal_states_stay_in_the_bloch_ball() {
    let corners = [
        BathParams::from_alpha(0.35, 10.0, 0.1, 0.05).unwrap(),
        BathParams::from_alpha(0.0035, 10.0, 100.0, 20.0).unwrap(),
        fig3_bath(),
    ];
    let (p1, p2) = optimal_initial_pair();
    for bath in &corners {
        for noise in [NoiseParams::silent(), fig3_noise(), NoiseParams::from_color(0.1, 2.0).unwrap()] {
            let t = tables(bath, &SystemParams::new(1.0, 0.3).unwrap(), &noise, 10.0, 0.01);
            for m in [Method::Tcl, Method::Nz] {
                for p in [p1, p2] {
                    let worst = solve(&t, m, p).states.iter().map(|s| s.p.norm()).fold(0.0, f64::max);
                    assert!(worst <= 1.0 + 1e-6, "{m:?} {bath:?} {noise:?}: {worst}");
                }
            }
        }
    }
}

#[test]
fn self_convergence_order() {
    let bath = fig3_bath();
    let sys = SystemParams::new(1.0, 0.3).unwrap();
    let p = BlochState::new(0.6, 0.0, 0.8);
    for m in [Method::Tcl, Method::Nz] {
        let end = |h: f64| solve(&tables(&bath, &sys, &fig3_noise(), 4.0, h), m, p).states.last().unwrap().as_array();
        let (a, b, c) = (end(0.04), end(0.02), end(0.01));
        let d1 = (0..6).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
        let d2 = (0..6).map(|i| (b[i] - c[i]).abs()).fold(0.0, f64::max);
        let order = (d1 / d2).log2();
        assert!(order >= 1.9, "{m:?}: order {order}");
    }
}

#[test]
fn short_time_agreement_between_methods() {
    // For t ≤ 0.1/V the two master equations differ at O(V⁴t³).
    let t = tables(&fig3_bath(), &SystemParams::new(1.0, 1.0).unwrap(), &fig3_noise(), 0.1, 0.0005);
    let (p, _) = optimal_initial_pair();
    let gap = sup_diff(&solve(&t, Method::Tcl, p), &solve(&t, Method::Nz, p));
    assert!(gap < 1e-4, "{gap:e}");
}

#[test]
fn monte_carlo_without_noise_reproduces_single_solve() {
    let t = tables(&fig3_bath(), &SystemParams::new(1.0, 0.3).unwrap(), &NoiseParams::new(0.0, 1.0).unwrap(), 3.0, 0.01);
    let p = BlochState::new(1.0, 0.0, 0.0);
    for m in [Method::Tcl, Method::Nz] {
        let mc = ensemble_average(&t, m, p, 100, 3).unwrap();
        let single = solve_per_realization(&t, &sample_trajectory(&NoiseParams::silent(), 3.0, 0).unwrap(), m, p).unwrap();
        for (a, b) in mc.mean.states.iter().zip(&single.states) {
            assert!((a.p.px - b.px).abs() < 1e-12 && (a.p.py - b.py).abs() < 1e-12 && (a.p.pz - b.pz).abs() < 1e-12);
        }
    }
}

#[test]
fn standard_error_scales_with_ensemble_size() {
    let t = tables(&fig3_bath(), &SystemParams::new(1.0, 0.3).unwrap(), &fig3_noise(), 3.0, 0.01);
    let p = BlochState::new(1.0, 0.0, 0.0);
    let se = |n| {
        let r = ensemble_average(&t, Method::Tcl, p, n, 21).unwrap();
        r.stderr.states.iter().map(|s| s.p.px).sum::<f64>()
    };
    let ratio = se(1600) / se(800);
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let t = tables(&fig3_bath(), &SystemParams::new(1.0, 0.3).unwrap(), &fig3_noise(), 2.0, 0.01);
    let p = BlochState::new(1.0, 0.0, 0.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ensemble_average(&t, Method::Nz, p, 300, 5).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn averaged_memory_kernel_equations_match_monte_carlo() {
    let sys = SystemParams::new(1.0, 0.3).unwrap();
    let t = tables(&fig3_bath(), &sys, &fig3_noise(), 5.0, 0.01);
    for p in [BlochState::new(1.0, 0.0, 0.0), BlochState::new(0.0, 0.0, 1.0)] {
        let exact = solve(&t, Method::Nz, p);
        let mc = ensemble_average(&t, Method::Nz, p, 3000, 17).unwrap();
        for i in 0..6 {
            let diff = exact
                .states
                .iter()
                .zip(&mc.mean.states)
                .map(|(a, b)| (a.as_array()[i] - b.as_array()[i]).abs())
                .fold(0.0, f64::max);
            let se = mc.stderr.states.iter().map(|s| s.as_array()[i]).fold(0.0, f64::max);
            assert!(diff <= 3.0 * se + 1e-9, "component {i}: {diff} vs 3×{se}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn solutions_respect_convex_combinations(
        a in prop::array::uniform3(-0.5f64..0.5),
        b in prop::array::uniform3(-0.5f64..0.5),
        lambda in 0.0f64..1.0,
        nz in any::<bool>(),
    ) {
        let t = tables(&fig3_bath(), &SystemParams::new(1.0, 0.3).unwrap(), &fig3_noise(), 2.0, 0.02);
        let m = if nz { Method::Nz } else { Method::Tcl };
        let (pa, pb) = (BlochState::from_array(a), BlochState::from_array(b));
        let mix = BlochState::from_array(std::array::from_fn(|i| lambda * a[i] + (1.0 - lambda) * b[i]));
        let (sa, sb, sm) = (solve(&t, m, pa), solve(&t, m, pb), solve(&t, m, mix));
        for k in 0..sm.len() {
            let (x, y, z) = (sa.states[k].as_array(), sb.states[k].as_array(), sm.states[k].as_array());
            for i in 0..6 {
                prop_assert!((lambda * x[i] + (1.0 - lambda) * y[i] - z[i]).abs() < 1e-8);
            }
        }
    }
}
