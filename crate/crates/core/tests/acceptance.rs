//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line;
//! run with `cargo test --test acceptance -- --nocapture --test-threads=1`.

use std::path::{Path, PathBuf};

use ptc::analysis::{find_peak, peak_growth_curve, velocity_lower_bound_check, PeakLocation};
use ptc::cli::output::read_trajectory_csv;
use ptc::cli::{run_scenario, Scenario};
use ptc::derivatives::{classify_singularity, Classification};
use ptc::integrator::{integrate, solution_error, ClosedLoop, IntegrationSettings};
use ptc::laws::{
    closed_form_state, corrected_bound_gap, corrected_law, integration_constant, original_law,
    FixedTimeParams, Horizon, PredefParams, Variant,
};

fn params(eta: f64, duration: f64) -> PredefParams {
    PredefParams::new(eta, Horizon::new(0.0, duration).unwrap()).unwrap()
}

fn report(n: u32, ok: bool, detail: &str) {
    println!(
        "criterion {n}: {} {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

const GRID_ETA: [f64; 3] = [1.5, 2.0, 3.0];
const GRID_X0: [f64; 4] = [-5.0, -1.0, 0.5, 3.0];

fn grid_settings() -> IntegrationSettings {
    IntegrationSettings::new(1e-4, 1e-3)
}

#[test]
fn criterion_1_closed_form_agreement() {
    let start = std::time::Instant::now();
    let mut worst: f64 = 0.0;
    for eta in GRID_ETA {
        let p = params(eta, 1.0);
        for x0 in GRID_X0 {
            let mut variants = vec![Variant::Corrected];
            if x0 > 0.0 {
                variants.push(Variant::Original);
            }
            for v in variants {
                let traj = integrate(ClosedLoop::predefined(v, p), x0, &grid_settings()).unwrap();
                worst = worst.max(solution_error(&traj, &p, v).unwrap());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        worst <= 1e-6,
        &format!("max solution_error {worst:.3e} <= 1e-6 ({elapsed:.2} s)"),
    );
}

#[test]
fn criterion_2_corrected_law_bound() {
    // |u| is compared with the bound in f64, and strictness is certified by
    // the exact gap η e^{−|x₀|}/(t_f − t₀), since 1 − e^{−|x₀|} rounds to 1
    // for |x₀| ≳ 36.7.
    let mut points = 0;
    let mut violations = 0;
    let mut saturated = 0;
    for eta in [1.5, 2.0, 3.0, 5.0] {
        let p = params(eta, 1.0);
        for i in 0..=1000 {
            let x0 = -50.0 + 0.1 * i as f64;
            let u = corrected_law(0.0, x0, &p).unwrap();
            let gap = corrected_bound_gap(0.0, x0, &p).unwrap();
            points += 1;
            if u.abs() > p.initial_bound() || !(gap > 0.0) {
                violations += 1;
            }
            if u.abs() == p.initial_bound() {
                saturated += 1;
            }
        }
    }
    report(
        2,
        points == 4004 && violations == 0,
        &format!(
            "{points} points, {violations} violations ({saturated} points where |u| rounds to the bound in f64; exact gap > 0 at all)"
        ),
    );
}

#[test]
fn criterion_3_original_law_blow_up() {
    let p = params(2.0, 1.0);
    let u = |x0: f64| original_law(0.0, x0, &p).unwrap();
    let e = std::f64::consts::E;
    let value_ok = (u(-5.0) - 294.826).abs() <= 1e-3;
    let mut detail = format!("u(t0, -5) = {:.6}", u(-5.0));
    let mut ratios_ok = true;
    for x0 in (4..=10).map(|k| -(k as f64)) {
        let ratio = u(x0 - 1.0) / u(x0);
        let ok = (e - 0.01..=e + 0.01).contains(&ratio);
        ratios_ok &= ok;
        detail.push_str(&format!(
            "; ratio@{x0} = {ratio:.5}{}",
            if ok {
                ""
            } else {
                " (outside [e-0.01, e+0.01])"
            }
        ));
    }
    report(3, value_ok && ratios_ok, &detail);
}

#[test]
fn criterion_4_velocity_lower_bound() {
    let mut failures = Vec::new();
    for eta in GRID_ETA {
        let p = params(eta, 1.0);
        for x0 in GRID_X0 {
            let mut variants = vec![Variant::Corrected];
            if x0 > 0.0 {
                variants.push(Variant::Original);
            }
            for v in variants {
                let traj = integrate(ClosedLoop::predefined(v, p), x0, &grid_settings()).unwrap();
                let check = velocity_lower_bound_check(&traj).unwrap();
                let required = x0.abs() / 1.0 * (1.0 - 1e-6);
                if !check.holds || check.max_speed < required {
                    failures.push(format!("eta={eta} x0={x0} {v:?}"));
                }
            }
        }
    }
    let growth =
        peak_growth_curve(&params(2.0, 1.0), &[1.0, 2.0, 4.0, 8.0], &grid_settings()).unwrap();
    let monotone = growth.windows(2).all(|w| w[1].magnitude >= w[0].magnitude);
    let magnitudes: Vec<String> = growth
        .iter()
        .map(|g| format!("{:.4}", g.magnitude))
        .collect();
    report(
        4,
        failures.is_empty() && monotone,
        &format!(
            "bound failures {failures:?}; peak magnitudes on |x0| = 1,2,4,8: [{}]",
            magnitudes.join(", ")
        ),
    );
}

/// Second-order central difference of the exact solution.
fn fd_second_derivative(t: f64, x0: f64, p: &PredefParams, h: f64) -> f64 {
    let x = |t: f64| closed_form_state(t, x0, p, Variant::Corrected);
    (x(t + h) - 2.0 * x(t) + x(t - h)) / (h * h)
}

#[test]
fn criterion_5_gain_rule() {
    let mut mismatches = Vec::new();
    for k in 1..=3usize {
        for (eta, expected) in [
            (k as f64 - 0.5, Classification::Divergent),
            (k as f64, Classification::BoundedDiscontinuous),
            (k as f64 + 0.5, Classification::ContinuousZero),
        ] {
            if eta <= 1.0 {
                continue;
            }
            for x0 in [-3.0, 0.7, 2.0] {
                let got = classify_singularity(&params(eta, 1.0), x0, k).map(|v| v.classification);
                if got != Ok(expected) {
                    mismatches.push(format!("k={k} eta={eta} x0={x0}: {got:?}"));
                }
            }
        }
    }
    // η = k = 2: |limit| = 2 C₁.
    let mut limit_errors = Vec::new();
    let p = params(2.0, 1.0);
    for x0 in [-3.0, 0.7, 2.0] {
        let c1 = integration_constant(x0, &p, Variant::Corrected).value;
        let hand = 2.0 * c1;
        let fd = fd_second_derivative(1.0 - 1e-3, x0, &p, 1e-5).abs();
        let profile = ptc::derivatives::derivative_profile(&p, x0, 2).unwrap();
        let series = match profile.limit_estimate {
            ptc::derivatives::LimitEstimate::Finite(v) => v.abs(),
            ptc::derivatives::LimitEstimate::Diverging => f64::INFINITY,
        };
        for (name, v) in [("finite-difference", fd), ("series", series)] {
            let rel = (v - hand).abs() / hand;
            if rel > 0.01 {
                limit_errors.push(format!("x0={x0} {name} {v} vs 2C1 {hand} ({rel:.2e})"));
            }
        }
    }
    report(
        5,
        mismatches.is_empty() && limit_errors.is_empty(),
        &format!("classification mismatches {mismatches:?}; limit errors {limit_errors:?}"),
    );
}

#[test]
fn criterion_6_peak_location() {
    let p = params(2.0, 1.0);
    let x0 = 5f64.ln();
    let traj = integrate(ClosedLoop::Corrected(p), x0, &grid_settings()).unwrap();
    let peak = find_peak(&traj).unwrap();

    // Independent oracle: dense scan of |ẋ| = C₁ η s^{η−1} / (C₁ s^η + 1).
    let c1 = 4.0;
    let (mut t_best, mut m_best) = (0.0, 0.0);
    let n = 1_000_000;
    for i in 0..=n {
        let t = (1.0 - 1e-3) * i as f64 / n as f64;
        let s: f64 = 1.0 - t;
        let m = c1 * 2.0 * s / (c1 * s * s + 1.0);
        if m > m_best {
            t_best = t;
            m_best = m;
        }
    }
    let predef_ok = (peak.t_peak - 0.5).abs() <= 1e-3
        && (peak.magnitude - 2.0).abs() <= 1e-3
        && (peak.t_peak - t_best).abs() <= 1e-3
        && (peak.magnitude - m_best).abs() <= 1e-3
        && peak.location == PeakLocation::Interior;
    let mut detail = format!(
        "corrected: t_peak {:.6} magnitude {:.9} {:?} (dense oracle t {:.6} m {:.9})",
        peak.t_peak, peak.magnitude, peak.location, t_best, m_best
    );

    let fixed = ClosedLoop::FixedTime {
        params: FixedTimeParams::new(1.0, 1.0, 0.5, 2.0).unwrap(),
        horizon: Horizon::new(0.0, 1.0).unwrap(),
    };
    let mut fixed_ok = true;
    for x0 in [0.5, 1.0, 4.0] {
        let traj = integrate(fixed, x0, &grid_settings()).unwrap();
        let peak = find_peak(&traj).unwrap();
        let expected = x0.powf(0.5) + x0.powi(2);
        let ok =
            peak.location == PeakLocation::Initial && (peak.magnitude - expected).abs() <= 1e-9;
        fixed_ok &= ok;
        detail.push_str(&format!(
            "; fixed x0={x0}: {:?} magnitude {} (expected {expected})",
            peak.location, peak.magnitude
        ));
    }
    report(6, predef_ok && fixed_ok, &detail);
}

#[test]
fn criterion_7_step_halving() {
    let p = params(3.0, 1.0);
    let x0 = 3.0;
    let err = |step: f64| {
        let traj = integrate(
            ClosedLoop::Corrected(p),
            x0,
            &IntegrationSettings::new(step, 2e-2),
        )
        .unwrap();
        solution_error(&traj, &p, Variant::Corrected).unwrap()
    };
    let coarse = err(1e-2);
    let fine = err(5e-3);
    let ratio = coarse / fine;
    report(
        7,
        ratio >= 8.0,
        &format!("error {coarse:.3e} -> {fine:.3e}, reduction {ratio:.2}x (>= 8)"),
    );
}

fn scenario_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/lab.toml")
}

fn dir_listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_8_cli_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scenario(&scenario_path(), a.path(), None).unwrap();
    run_scenario(&scenario_path(), b.path(), None).unwrap();
    let la = dir_listing(a.path());
    let lb = dir_listing(b.path());
    let identical = la == lb && !la.is_empty();

    let scenario = Scenario::from_path(&scenario_path()).unwrap();
    let mut csvs = 0;
    let mut round_trip_failures = Vec::new();
    for (name, _) in &la {
        let (law, x0s) = if name.starts_with("trajectory_") {
            (scenario.law, &scenario.x0)
        } else if name.starts_with("compare_") {
            let side = scenario.compare.as_ref().unwrap();
            (side.law, &side.x0)
        } else {
            continue;
        };
        let idx: usize = name[name.len() - 7..name.len() - 4].parse().unwrap();
        csvs += 1;
        if let Err(e) = read_trajectory_csv(&a.path().join(name), law, x0s[idx]) {
            round_trip_failures.push(format!("{name}: {e}"));
        }
    }
    report(
        8,
        identical && csvs > 0 && round_trip_failures.is_empty(),
        &format!(
            "{} files byte-identical: {identical}; {csvs} CSVs, round-trip failures {round_trip_failures:?}",
            la.len()
        ),
    );
}
