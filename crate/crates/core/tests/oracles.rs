//! Cross-checks against independent oracles: eigenvalue sign tests, dense
//! frequency sweeps, modal superposition and closed-form responses.

use nlpid_core::freq::{sensitivity_magnitude, step_response_closed_form, step_response_omega_form};
use nlpid_core::lti::{build_loop_tf, build_sensitivity_tf, ActuatorSpec, Polynomial, RationalTF};
use nlpid_core::sim::{simulate, steady_state_amplitude, DisturbanceSpec, SimConfig, Trajectory};
use nlpid_core::stability::{
    circle_exact, circle_sweep, default_circle_grid, pole_placement_gains, routh_hurwitz_3rd,
};
use nlpid_core::ControllerParams;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (r.gen_range(lo.ln()..hi.ln())).exp()
}

/// `y(t)` of the linear PID loop from initial `(y0, ẏ0)`, zero integral and
/// constant σ: `Y(s) = (y0 s² + (ẏ0 + a y0) s + σ) / (s³ + a s² + b s + c)`,
/// expanded over the (distinct) poles.
fn modal_solution(a: f64, b: f64, c: f64, y0: f64, ydot0: f64, sigma: f64) -> impl Fn(f64) -> f64 {
    let p = Polynomial::new(vec![1.0, a, b, c]).unwrap();
    let dp = p.derivative();
    let num = Polynomial::new(vec![y0, ydot0 + a * y0, sigma]).unwrap();
    let poles = p.roots().unwrap();
    let residues: Vec<(Complex64, Complex64)> = poles
        .iter()
        .map(|&r| (r, num.eval(r) / dp.eval(r)))
        .collect();
    move |t| residues.iter().map(|(p, k)| k * (p * t).exp()).sum::<Complex64>().re
}

#[test]
fn random_stable_cubics_recover_their_roots() {
    let mut r = rng(1);
    for _ in 0..2000 {
        let roots: Vec<f64> = (0..3).map(|_| log_uniform(&mut r, 1e-2, 1e3)).collect();
        let poly = Polynomial::from_real_roots(&roots.iter().map(|x| -x).collect::<Vec<_>>()).unwrap();
        let mut want: Vec<f64> = roots.iter().map(|x| -x).collect();
        want.sort_by(f64::total_cmp);
        let got = poly.roots().unwrap();
        let min_gap = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| (want[i] - want[j]).abs() / want[i].abs())
            .fold(f64::INFINITY, f64::min);
        if min_gap < 1e-3 {
            continue;
        }
        for (g, w) in got.iter().zip(&want) {
            assert!(((g.re - w) / w).abs() < 1e-6 && g.im.abs() < 1e-6 * w.abs(), "{g} vs {w}");
        }
    }
}

fn random_tf(r: &mut impl Rng) -> RationalTF {
    let deg = r.gen_range(1..=6);
    let den: Vec<f64> = (0..=deg).map(|i| if i == 0 { 1.0 } else { r.gen_range(-50.0..50.0) }).collect();
    let num: Vec<f64> = (0..r.gen_range(1..=deg + 1)).map(|_| r.gen_range(-50.0..50.0)).collect();
    RationalTF::new(Polynomial::new(num).unwrap(), Polynomial::new(den).unwrap()).unwrap()
}

#[test]
fn tf_eval_is_polynomial_ratio_and_conjugate_symmetric() {
    let mut r = rng(2);
    for _ in 0..1000 {
        let h = random_tf(&mut r);
        let w = log_uniform(&mut r, 1e-3, 1e3);
        let s = Complex64::new(0.0, w);
        let Ok(v) = h.eval(w) else { continue };
        assert_eq!(v, h.num().eval(s) / h.den().eval(s));
        let neg = h.eval(-w).unwrap();
        assert!((neg - v.conj()).norm() <= 1e-14 * v.norm().max(1e-300));
    }
}

#[test]
fn sensitivity_tf_equals_plant_over_one_plus_loop() {
    let mut r = rng(3);
    for _ in 0..100 {
        let (a, b) = (r.gen_range(1.0..100.0), r.gen_range(1.0..2000.0));
        let omega_gain = r.gen_range(0.01..0.99) * a * b;
        let w = log_uniform(&mut r, 1e-2, 1e3);
        let s = Complex64::new(0.0, w);
        let g = (s * s).inv();
        let ctrl = (a * s * s + b * s + omega_gain) / s;
        let symbolic = g / (1.0 + ctrl * g);
        let tf = build_sensitivity_tf(a, b, omega_gain).unwrap().eval(w).unwrap();
        assert!((tf - symbolic).norm() < 1e-12, "{tf} vs {symbolic}");
    }
}

#[test]
fn sensitivity_formula_matches_tf_magnitude() {
    let mut r = rng(4);
    for _ in 0..10_000 {
        let (a, b) = (r.gen_range(0.5..200.0), r.gen_range(0.5..5000.0));
        let omega_gain = r.gen_range(0.01..0.99) * a * b;
        let w = log_uniform(&mut r, 1e-3, 1e4);
        let tf = build_sensitivity_tf(a, b, omega_gain).unwrap().eval(w).unwrap().norm();
        let f = sensitivity_magnitude(a, b, omega_gain, w);
        assert!((tf - f).abs() <= 1e-12 * f.max(1e-300) + 1e-300, "{tf} {f}");
    }
}

#[test]
fn routh_hurwitz_agrees_with_eigenvalue_signs() {
    let mut r = rng(5);
    let mut checked = 0;
    for _ in 0..10_000 {
        let (a, b, c): (f64, f64, f64) = (r.gen_range(1e-9..1e3), r.gen_range(1e-9..1e3), r.gen_range(1e-9..1e3));
        if (a * b - c).abs() < 1e-9 * a * b {
            continue;
        }
        let roots = Polynomial::new(vec![1.0, a, b, c]).unwrap().roots().unwrap();
        let eig = roots.iter().all(|z| z.re < 0.0);
        assert_eq!(routh_hurwitz_3rd(a, b, c).stable, eig, "({a}, {b}, {c}) roots {roots:?}");
        checked += 1;
    }
    assert!(checked > 9_900);
}

#[test]
fn circle_exact_agrees_with_sweep() {
    let mut r = rng(6);
    let grid = default_circle_grid();
    let (mut stable, mut unstable) = (0, 0);
    while stable + unstable < 300 {
        let a = log_uniform(&mut r, 0.1, 1e3);
        let b = log_uniform(&mut r, 0.1, 1e3);
        let c = r.gen_range(0.0..1.0) * a * b;
        let d = r.gen_range(0.0..10.0);
        if !routh_hurwitz_3rd(a, b, c).stable || c <= 0.0 {
            continue;
        }
        let exact = circle_exact(a, b, c, d).unwrap();
        if exact.margin.abs() <= 1e-6 {
            continue;
        }
        let h = build_loop_tf(a, b, c, &ActuatorSpec::none()).unwrap();
        let sweep = circle_sweep(&h, c * d, &grid).unwrap();
        assert_eq!(exact.stable, sweep.stable, "({a}, {b}, {c}, {d}): {exact:?} vs {sweep:?}");
        if exact.stable {
            stable += 1;
        } else {
            unstable += 1;
        }
    }
    assert!(unstable > 0, "sample never exercised a violated criterion");
}

#[test]
fn circle_exact_witness_attains_minimum_on_dense_sweep() {
    // 10⁶-point brute-force scan of the cleared inequality
    for (a, b, c, d) in [(60.0, 1100.0, 3000.0, 1.0), (1.0, 100.0, 90.0, 10.0), (5.0, 50.0, 200.0, 4.0)] {
        let exact = circle_exact(a, b, c, d).unwrap();
        let h = build_loop_tf(a, b, c, &ActuatorSpec::none()).unwrap();
        let n = 1_000_000;
        let dense_min = (0..n)
            .map(|i| 10f64.powf(-3.0 + 9.0 * i as f64 / (n - 1) as f64))
            .map(|w| 1.0 + c * d * h.eval(w).unwrap().re)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(exact.stable, dense_min > 0.0, "({a},{b},{c},{d})");
    }
}

#[test]
fn pole_placement_round_trip() {
    let mut r = rng(7);
    for _ in 0..100 {
        let (l1, l2) = (log_uniform(&mut r, 0.1, 100.0), log_uniform(&mut r, 0.1, 100.0));
        let g = pole_placement_gains(l1, l2).unwrap();
        let expanded = Polynomial::from_real_roots(&[-l1, -l1, -l2]).unwrap();
        for (x, y) in [g.a, g.b, g.omega].iter().zip(&expanded.coeffs()[1..]) {
            assert!((x - y).abs() <= 1e-12 * y.abs());
        }
        if (l1 / l2 - 1.0).abs() < 1e-2 {
            continue;
        }
        let roots = Polynomial::new(vec![1.0, g.a, g.b, g.omega]).unwrap().roots().unwrap();
        let mut single = 0;
        for z in &roots {
            if ((z.re + l2) / l2).abs() < 1e-6 && z.im.abs() < 1e-6 * l2 {
                single += 1;
            } else {
                assert!(((z.re + l1) / l1).abs() < 1e-6 && z.im.abs() < 1e-6 * l1, "{z} for ({l1}, {l2})");
            }
        }
        assert_eq!(single, 1);
    }
}

#[test]
fn omega_form_is_substitution_of_closed_form() {
    let mut r = rng(8);
    for _ in 0..1000 {
        let l1 = log_uniform(&mut r, 0.5, 50.0);
        let ratio = if r.gen_bool(0.5) { r.gen_range(0.05..0.9) } else { r.gen_range(1.1..20.0) };
        let l2 = l1 * ratio;
        let omega_gain = l1 * l1 * l2;
        let t = r.gen_range(0.0..10.0 / l1.min(l2));
        let a = step_response_closed_form(l1, l2, t).unwrap();
        let b = step_response_omega_form(l1, omega_gain, t).unwrap();
        let gamma = (l1 - l2).powi(-2);
        assert!((a - b).abs() <= 1e-12 * (1.0 + gamma * (1.0 + (l2 - l1).abs() * t)), "{a} {b}");
    }
}

fn linear_cfg(a: f64, b: f64, c: f64, sigma: f64, y0: f64, dt: f64, duration: f64) -> SimConfig {
    let mut cfg = SimConfig::new(
        ControllerParams::pid(a, b, c).unwrap(),
        DisturbanceSpec::Constant { amplitude: sigma },
        duration,
    );
    cfg.y0 = y0;
    cfg.dt = dt;
    cfg
}

fn max_error(traj: &Trajectory, exact: impl Fn(f64) -> f64) -> f64 {
    traj.t
        .iter()
        .zip(&traj.y)
        .map(|(&t, &y)| (y - exact(t)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn paper_example_matches_modal_superposition() {
    let traj = simulate(&linear_cfg(60.0, 1100.0, 3000.0, -100.0, -1.0, 1e-4, 3.0)).unwrap();
    let exact = modal_solution(60.0, 1100.0, 3000.0, -1.0, 0.0, -100.0);
    assert!(max_error(&traj, &exact) < 1e-5);
    assert!((traj.y.last().unwrap() - exact(3.0)).abs() < 1e-9);
}

#[test]
fn rk4_error_shrinks_at_fourth_order() {
    let exact = modal_solution(60.0, 1100.0, 3000.0, -1.0, 0.0, -100.0);
    let dts = [1e-3, 5e-4, 2.5e-4];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| max_error(&simulate(&linear_cfg(60.0, 1100.0, 3000.0, -100.0, -1.0, dt, 1.0)).unwrap(), &exact))
        .collect();
    let slope = least_squares_slope(&dts.map(f64::ln), &errs.iter().map(|e| e.ln()).collect::<Vec<_>>());
    assert!(slope >= 3.5, "observed order {slope} from {errs:?}");
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn closed_form_step_matches_simulation_within_dt_squared() {
    let g = pole_placement_gains(10.0, 20.0).unwrap();
    for dt in [1e-3, 1e-4] {
        let traj = simulate(&linear_cfg(g.a, g.b, g.omega, 1.0, 0.0, dt, 2.0)).unwrap();
        let err = max_error(&traj, |t| step_response_closed_form(10.0, 20.0, t).unwrap());
        assert!(err < 10.0 * dt * dt, "dt {dt}: {err}");
    }
}

#[test]
fn sinusoidal_disturbance_bound_follows_sensitivity() {
    let (a, b, c) = (60.0, 1100.0, 3000.0);
    for (amp, w) in [(100.0, 5.0), (10.0, 33.0)] {
        let mut cfg = linear_cfg(a, b, c, 0.0, 0.0, 1e-4, 12.0);
        cfg.disturbance = DisturbanceSpec::Sinusoid { amplitude: amp, frequency: w };
        let traj = simulate(&cfg).unwrap();
        let window = 4.0 * std::f64::consts::TAU / w;
        let bound = steady_state_amplitude(&traj, window);
        let want = amp * sensitivity_magnitude(a, b, c, w);
        assert!(((bound - want) / want).abs() < 0.02, "{bound} vs {want}");
    }
}

#[test]
fn unforced_pid_state_norm_decays_past_slowest_mode() {
    let mut cfg = linear_cfg(60.0, 1100.0, 3000.0, 0.0, 1.0, 1e-3, 6.0);
    cfg.ydot0 = -3.0;
    let traj = simulate(&cfg).unwrap();
    let norm = |k: usize| (traj.y[k].powi(2) + traj.ydot[k].powi(2) + traj.integral[k].powi(2)).sqrt();
    // slowest time constant 1/3.28 s
    for k in (400..traj.len() - 1000).step_by(100) {
        assert!(norm(k + 1000) < norm(k));
    }
}
