//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use semispec::classical::{
    closed_form_density, dgu_density, integrate_flow, minimal_period_search, period_lower_bound, predicted_density,
    Direction, FlowOptions, PhasePoint,
};
use semispec::detector::{
    classify_level, default_density_centers, default_probe, density_from_quantum, fit_power_log, infer_degree,
    recover_hessian_spectrum, recover_spherical_mean_ratio, ClassifyParams, DensityParams,
};
use semispec::invariants::{classify_singularity, min_functional, CriticalType};
use semispec::potential::{spherical_mean_of_germ, Potential};
use semispec::quantum::{count_eigenvalues, liouville_volume, spectrum_for, SolverParams, Window};
use semispec::specdist::{default_h_list, h_sweep, upsilon, Combination, SweepParams};
use semispec::testfn::{SupportMode, TestFunction, TestFunctionSpec};
use semispec::{Polynomial, Term};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn harmonic_oracle() -> Outcome {
    let start = Instant::now();
    let pot = Potential::harmonic(&[1.0]).unwrap();
    let h = 0.05;
    let spec = spectrum_for(&pot, h, &Window::new(0.0, 1.0, 0.0).unwrap(), &SolverParams::default()).unwrap();
    let worst = spec
        .indices
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(&j, &l)| (l - h * (2 * j + 1) as f64).abs())
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    check(
        spec.len() == 10 && worst <= 1e-6 && secs <= 10.0,
        format!("{} eigenvalues, max error {worst:.2e}, {secs:.2} s", spec.len()),
    )
}

fn weyl_count() -> Outcome {
    let h = 0.01;
    let window = Window::new(0.0, 1.0, 0.05).unwrap();
    let harm = Potential::harmonic(&[1.0]).unwrap();
    let spec = spectrum_for(&harm, h, &window, &SolverParams::default()).unwrap();
    let count = count_eigenvalues(&spec, 0.0, 1.0).unwrap();
    let weyl = liouville_volume(&harm, 0.0, 1.0).unwrap().value / (2.0 * PI * h);
    let quartic = Potential::pure_power(1, 1.0, 2).unwrap();
    let qspec = spectrum_for(&quartic, h, &window, &SolverParams::default()).unwrap();
    let qcount = count_eigenvalues(&qspec, 0.0, 1.0).unwrap();
    let qweyl = liouville_volume(&quartic, 0.0, 1.0).unwrap().value / (2.0 * PI * h);
    let rel = (qcount as f64 - qweyl).abs() / qweyl;
    check(
        count == 50 && (weyl - 50.0).abs() < 1e-6 && rel <= 0.03,
        format!("x^2: N = {count}, Weyl {weyl:.6}; x^4: N = {qcount}, Weyl {qweyl:.3} ({:.2}%)", 100.0 * rel),
    )
}

fn regular_decay() -> Outcome {
    let start = Instant::now();
    let pot = Potential::harmonic(&[1.0]).unwrap();
    let tf = TestFunctionSpec::new(3, 0.2, PI - 0.2, SupportMode::OneSided).build().unwrap();
    let sweep = h_sweep(&pot, 1.0, &tf, &default_h_list(), &SweepParams::default()).unwrap();
    let fit = fit_power_log(&sweep).unwrap();
    let secs = start.elapsed().as_secs_f64();
    match fit.fit() {
        Some(f) => check(f.alpha >= 3.0 && secs <= 300.0, format!("slope {:.3}, {secs:.1} s", f.alpha)),
        None => Err(format!("sweep is numerically zero, no slope to report ({secs:.1} s)")),
    }
}

fn quartic_exponent() -> Outcome {
    let pot = Potential::pure_power(1, 1.0, 2).unwrap();
    let level = classify_level(&pot, 0.0, &default_probe().unwrap(), &ClassifyParams::default()).unwrap();
    let f = level.primary_fit().ok_or("numerically zero sweep")?;
    check(
        (f.alpha + 0.25).abs() <= 0.05 && level.log_power() == 0,
        format!("α = {:.4} ± {:.4}, m = {}", f.alpha, f.alpha_std(), level.log_power()),
    )
}

fn harmonic_minimum() -> Outcome {
    let pot = Potential::harmonic(&[1.0]).unwrap();
    let level = classify_level(&pot, 0.0, &default_probe().unwrap(), &ClassifyParams::default()).unwrap();
    let f = level.primary_fit().ok_or("numerically zero sweep")?;
    let tail = level.sweep.points.iter().map(|p| p.tail_bound).fold(0.0, f64::max);
    check(
        f.alpha.abs() <= 0.05 && level.log_power() == 0 && f.amplitude >= 10.0 * tail,
        format!("α = {:.4}, m = {}, |C| = {:.4e}, max tail bound {tail:.2e}", f.alpha, level.log_power(), f.amplitude),
    )
}

fn barrier_log() -> Outcome {
    let pot = Potential::double_well();
    let level = classify_level(&pot, 1.0, &default_probe().unwrap(), &ClassifyParams::default()).unwrap();
    let probe = level.log_probe.as_ref().and_then(|p| p.fit()).ok_or("no log probe fit")?;
    check(
        probe.log_power == 1 && probe.alpha.abs() <= 0.1,
        format!("probe: m = {}, α = {:.4}, F = {:.1}", probe.log_power, probe.alpha, probe.f_statistic.unwrap_or(0.0)),
    )
}

fn degree_roundtrip() -> Outcome {
    let mut hits = 0;
    for n in 1..=3u32 {
        for k in 1..=3u32 {
            let class = classify_singularity(n, k, CriticalType::Min).unwrap();
            if infer_degree(class.alpha(), 0.0, n).map(|d| d.k) == Ok(k) {
                hits += 1;
            }
        }
    }
    check(hits == 9, format!("{hits}/9"))
}

fn spherical_mean_ratio() -> Outcome {
    let a = Potential::pure_power(1, 1.0, 2).unwrap();
    let b = Potential::pure_power(1, 16.0, 2).unwrap();
    let r = recover_spherical_mean_ratio(&a, 0.0, &b, 0.0, &default_probe().unwrap(), &ClassifyParams::default())
        .unwrap();
    check((r.ratio - 2.0).abs() <= 0.4, format!("ratio {:.4} (spread {:.3}, {} points)", r.ratio, r.spread, r.points))
}

fn period_bound() -> Outcome {
    let cases = [
        (Potential::harmonic(&[1.0]).unwrap(), [0.5, 1.0, 2.0]),
        (Potential::pure_power(1, 1.0, 2).unwrap(), [0.5, 1.0, 2.0]),
        (Potential::double_well(), [0.5, 1.5, 2.0]),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, (pot, energies)) in cases.iter().enumerate() {
        for &e in energies {
            let bound = period_lower_bound(pot, e, e).unwrap().period;
            let found = minimal_period_search(pot, e).unwrap();
            match found {
                Some(t) => {
                    ok &= t >= bound;
                    if i == 0 {
                        ok &= (t - bound).abs() <= 1e-3;
                    }
                    lines.push(format!("{t:.4}>={bound:.4}"));
                }
                None => {
                    ok = false;
                    lines.push(format!("none at E = {e}"));
                }
            }
        }
    }
    check(ok, lines.join(" "))
}

fn density_oracle() -> Outcome {
    let configs: Vec<(&str, Potential, Vec<f64>)> = vec![
        ("elliptic", Potential::harmonic(&[1.0]).unwrap(), vec![2.0]),
        ("hyperbolic", Potential::harmonic(&[-1.0]).unwrap(), vec![-2.0]),
        ("mixed", Potential::harmonic(&[1.0, -2.0]).unwrap(), vec![2.0, -4.0]),
        ("elliptic pair", Potential::harmonic(&[1.0, 2.5]).unwrap(), vec![2.0, 5.0]),
    ];
    let mut worst: f64 = 0.0;
    for (_, pot, hess) in &configs {
        let n = pot.dim();
        let z0 = PhasePoint::rest(vec![0.0; n]);
        let fastest = hess.iter().filter(|m| **m > 0.0).map(|m| (m / 2.0).sqrt()).fold(1.0, f64::max);
        let period = PI / fastest;
        for i in 0..9 {
            let t = period * (0.1 + 0.1 * i as f64);
            let a = dgu_density(pot, &z0, t).unwrap();
            let b = predicted_density(hess, t).unwrap();
            worst = worst.max((a - b).abs() / b);
        }
    }
    check(worst <= 1e-6, format!("max relative error {worst:.2e} over {} configurations", configs.len()))
}

fn hessian_recovery() -> Outcome {
    let configs: Vec<Vec<(f64, Direction)>> = vec![
        vec![(1.0, Direction::Elliptic)],
        vec![(2.0, Direction::Hyperbolic)],
        vec![(1.0, Direction::Hyperbolic), (3.0, Direction::Elliptic)],
        vec![(3.0, Direction::Hyperbolic), (2.0, Direction::Elliptic), (2.5, Direction::Elliptic)],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for alphas in &configs {
        let n = alphas.len();
        let top = alphas
            .iter()
            .filter(|(_, d)| *d == Direction::Elliptic)
            .map(|(a, _)| PI / a)
            .fold(3.0f64, f64::min);
        let count = 4096;
        let samples: Vec<(f64, f64)> = (0..count)
            .map(|i| {
                let t = top * (0.1 + 0.8 * i as f64 / (count - 1) as f64);
                (t, closed_form_density(alphas, t).unwrap() * (1.0 + noise.sample(&mut rng)))
            })
            .collect();
        let fit = recover_hessian_spectrum(&samples, n).unwrap();
        let r = alphas.iter().filter(|(_, d)| *d == Direction::Hyperbolic).count();
        ok &= fit.signature == r;
        for ((a, _), b) in alphas.iter().zip(&fit.alphas) {
            worst = worst.max((a - b).abs() / a);
        }
    }
    ok &= worst <= 0.02;
    let pot = Potential::harmonic(&[1.0]).unwrap();
    let centers = default_density_centers(&pot, &[0.0], 16);
    let samples = density_from_quantum(&pot, &[0.0], 0.0, &centers, &DensityParams::default()).unwrap();
    let pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.value)).collect();
    let fit = recover_hessian_spectrum(&pairs, 1).unwrap();
    let quantum_err = (fit.alphas[0] - 1.0).abs();
    ok &= fit.signature == 0 && quantum_err <= 0.1;
    check(
        ok,
        format!(
            "synthetic: worst relative error {:.3}% over {} products; quantum x^2: α = {:.4}, r = {}",
            100.0 * worst,
            configs.len(),
            fit.alphas[0],
            fit.signature
        ),
    )
}

fn quadratic(n: usize, m: &DMatrix<f64>) -> Polynomial {
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut powers = vec![0u32; n];
            powers[i] += 1;
            powers[j] += 1;
            terms.push(Term { coeff: m[(i, j)], powers });
        }
    }
    Polynomial::new(n, terms)
}

fn property_suites() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // flow invariants
    let mut det_err: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let flows = [
        (Potential::double_well(), PhasePoint::new(vec![0.3], vec![0.7])),
        (Potential::pure_power(1, 1.0, 2).unwrap(), PhasePoint::new(vec![1.1], vec![-0.2])),
        (Potential::pure_power(2, 0.5, 2).unwrap(), PhasePoint::new(vec![0.4, -0.9], vec![0.5, 0.1])),
    ];
    for (pot, z0) in &flows {
        let flow = integrate_flow(pot, z0, 3.0, true, &FlowOptions { step_fraction: 1e-3, sample_every: 20 }).unwrap();
        let e0 = z0.energy(pot);
        for e in &flow.energies {
            drift = drift.max((e - e0).abs() / (1.0 + e0.abs()));
        }
        for m in flow.monodromy.as_ref().unwrap() {
            det_err = det_err.max((m.determinant() - 1.0).abs());
        }
    }
    ok &= det_err <= 1e-6 && drift <= 1e-8;
    notes.push(format!("det {det_err:.1e}, drift {drift:.1e}"));

    // linearity and truncation of Υ
    let pot = Potential::harmonic(&[1.0]).unwrap();
    let h = 0.03;
    let f1 = TestFunctionSpec::new(0, -1.0, 1.0, SupportMode::Symmetric).build().unwrap();
    let f2 = TestFunctionSpec::new(1, 0.3, 2.0, SupportMode::OneSided).build().unwrap();
    let narrow = spectrum_for(&pot, h, &Window::new(0.6, 0.6, 0.2).unwrap(), &SolverParams::default()).unwrap();
    let wide = spectrum_for(&pot, h, &Window::new(0.6, 0.6, 0.4).unwrap(), &SolverParams::default()).unwrap();
    let (a, b) = (Complex64::new(1.5, -0.5), Complex64::new(-2.0, 0.25));
    let combo = Combination { terms: vec![(a, &f1), (b, &f2)] };
    let u = upsilon(&narrow, 0.6, &combo).unwrap().value;
    let u1 = upsilon(&narrow, 0.6, &f1).unwrap();
    let u2 = upsilon(&narrow, 0.6, &f2).unwrap();
    let lin = (u - (a * u1.value + b * u2.value)).norm() / (a.norm() * u1.value.norm() + b.norm() * u2.value.norm());
    let uw = upsilon(&wide, 0.6, &f2).unwrap();
    let trunc = (uw.value - u2.value).norm();
    ok &= lin <= 1e-13 && trunc <= u2.tail_bound;
    notes.push(format!("linearity {lin:.1e}, truncation {trunc:.1e} <= {:.1e}", u2.tail_bound));

    // spherical mean invariances
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.7, 2.3]));
    let th: f64 = 0.83;
    let rot = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
    let rot = DMatrix::from_fn(2, 2, |i, j| rot[(i, j)]);
    let base = quadratic(2, &d);
    let turned = quadratic(2, &(rot.transpose() * &d * &rot));
    let a0 = spherical_mean_of_germ(&base, 1).unwrap();
    let rot_err = (spherical_mean_of_germ(&turned, 1).unwrap() - a0).abs() / a0;
    let scale_err = (2..=3)
        .map(|j| (spherical_mean_of_germ(&base.pow(j), j).unwrap() - a0).abs() / a0)
        .fold(0.0, f64::max);
    ok &= rot_err <= 1e-8 && scale_err <= 1e-8;
    notes.push(format!("A(V) rotation {rot_err:.1e}, rescaling {scale_err:.1e}"));

    // min_functional against a midpoint grid over u, v
    let mut worst: f64 = 0.0;
    for spec in [
        TestFunctionSpec::new(0, -1.0, 1.0, SupportMode::Symmetric),
        TestFunctionSpec::new(0, 0.5, 2.0, SupportMode::OneSided),
        TestFunctionSpec::new(1, -2.0, 2.0, SupportMode::Symmetric),
    ] {
        let tf = spec.build().unwrap();
        let (n, k) = (1, 2);
        let value = min_functional(&tf, n, k).unwrap();
        let (grid, scale) = grid_functional(&tf, n as i32, k as i32);
        worst = worst.max((value - grid).norm() / scale);
    }
    ok &= worst <= 1e-4;
    notes.push(format!("min functional {worst:.1e}"));
    check(ok, notes.join("; "))
}

fn grid_functional(tf: &TestFunction, n: i32, k: i32) -> (Complex64, f64) {
    let cells = 1000;
    let s_max = tf.s_max();
    let (u_max, v_max) = (s_max.sqrt(), s_max.powf(1.0 / (2.0 * k as f64)));
    let (du, dv) = (u_max / cells as f64, v_max / cells as f64);
    let (mut acc, mut abs) = (Complex64::new(0.0, 0.0), 0.0);
    for i in 0..cells {
        let u = (i as f64 + 0.5) * du;
        for j in 0..cells {
            let v = (j as f64 + 0.5) * dv;
            let s = u * u + v.powi(2 * k);
            if s <= s_max {
                let term = tf.eval(s) * (u * v).powi(n - 1);
                acc += term;
                abs += term.norm();
            }
        }
    }
    (acc * du * dv, abs * du * dv)
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: Vec<Criterion> = vec![
        ("harmonic oracle", harmonic_oracle),
        ("Weyl count", weyl_count),
        ("regular-level decay", regular_decay),
        ("quartic minimum exponent", quartic_exponent),
        ("harmonic minimum exponent", harmonic_minimum),
        ("log term at the barrier top", barrier_log),
        ("degree roundtrip", degree_roundtrip),
        ("spherical-mean ratio", spherical_mean_ratio),
        ("period bound", period_bound),
        ("density oracle", density_oracle),
        ("Hessian spectrum recovery", hessian_recovery),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
