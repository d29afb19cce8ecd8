//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lzforge::analytic::{bessel_j, design_diabatic_pulse, jump_events, JumpModelParams, J0_FIRST_ZERO};
use lzforge::dynamics::{
    adiabatic_transfer, evolve, gate_fidelity, lz_probability, propagate_with, survival_error, OscillatingSweep,
    PixelatedPulse, PropagationOptions, PulseWaveform, TwoLevelSystem, Unitary2, Window,
};
use lzforge::experiments::{
    default_adiabatic_grid, estimate_qsl, fit_qsl, phase_grid, probe_valley, qsl_model, scan_adiabatic_fidelity,
    scan_phase_sensitivity, trace_trajectory, AdiabaticScanConfig, QslConfig, TraceRequest,
};
use lzforge::optim::{
    grape_gradient, grape_optimize, optimize_oscillation_params, oscillation_error, pulse_fidelity, GrapeConfig,
    OscillationObjective, OscillationParams, SimplexConfig,
};
use lzforge::Result;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn run(n: u32, title: &str, limit: Duration, f: impl FnOnce() -> Result<Check>) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok(c) => (c.pass && elapsed <= limit, c.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {n}: {} {title}: {detail} [{:.2} s, limit {} s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn lz_convergence() -> Result<Check> {
    let sys = TwoLevelSystem::new(1.0)?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for v in [1.0, 5.0, 10.0, 20.0] {
        let pulse = PulseWaveform::from(OscillatingSweep::linear(v));
        let u = evolve(&sys, &pulse, -50.0, 50.0)?;
        let transfer = adiabatic_transfer(&u, -50.0 * v, 50.0 * v, 1.0);
        let err = (transfer - lz_probability(1.0, v)?).abs();
        worst = worst.max(err);
        parts.push(format!("v={v}: |dP|={err:.1e} (bare {:.1e})", (survival_error(&u) - lz_probability(1.0, v)?).abs()));
    }
    Ok(check(worst < 2e-3, format!("{}; tol 2e-3", parts.join(", "))))
}

fn jump_reproduction() -> Result<Check> {
    let pulse = OscillatingSweep {
        v: 10.0,
        lambda_r: 120.24,
        omega: 50.0,
        phi: 0.0,
        window: None,
    };
    let trace = trace_trajectory(&TraceRequest::new(1.0, pulse, -50.0, 50.0))?;
    let offset = trace.max_jump_offset().unwrap_or(f64::INFINITY);
    let plateau = trace.max_plateau_deviation().unwrap_or(f64::INFINITY);
    Ok(check(
        offset < 0.2 && plateau < 0.02,
        format!(
            "{} jumps located, max offset {offset:.3e} (tol 0.2), max plateau deviation {plateau:.3e} (tol 0.02)",
            trace.located_jumps.len()
        ),
    ))
}

fn designed_pulse() -> Result<Check> {
    let d = design_diabatic_pulse(8.0, 50.0, 2.8, 1.0)?;
    let sys = TwoLevelSystem::new(1.0)?;
    let e = survival_error(&evolve(&sys, &d.pulse.into(), -100.0, 100.0)?);
    Ok(check(
        e < 1e-5,
        format!("T+Ts={:.2}, survival_error {e:.3e} (tol 1e-5)", d.drive_duration()),
    ))
}

fn phase_sensitivity() -> Result<Check> {
    let d = design_diabatic_pulse(8.0, 50.0, 2.8, 1.0)?;
    let phases = phase_grid(64);
    let long = scan_phase_sensitivity(1.0, &d.pulse, &phases, 200.0)?.max();
    let switching = d.window().switching;
    let short_pulse = OscillatingSweep {
        window: Some(Window::new(13.86 - switching, switching)?),
        ..d.pulse
    };
    let short = scan_phase_sensitivity(1.0, &short_pulse, &phases, 200.0)?.max();
    let in_band = (long - 0.16).abs() <= 0.03;
    Ok(check(
        in_band && short < long,
        format!("max over phase {long:.4} (expected 0.16 +/- 0.03), shortened pulse {short:.4} (must be smaller)"),
    ))
}

fn nm_start() -> OscillationParams {
    OscillationParams {
        v: 8.0,
        lambda: J0_FIRST_ZERO * 50.0,
        omega: 50.0,
        phi: 0.0,
    }
}

fn nm_optimum(sys: TwoLevelSystem) -> Result<(OscillationParams, f64)> {
    let objective = OscillationObjective {
        max_step_phase: 0.2,
        ..OscillationObjective::new(sys, 200.0)
    };
    let r = optimize_oscillation_params(&objective, nm_start(), &SimplexConfig::default())?;
    let b = &r.best_parameters;
    let best = OscillationParams {
        v: b[0],
        lambda: b[1],
        omega: b[2],
        phi: b[3],
    };
    Ok((best, oscillation_error(&sys, 200.0, &best, 0.05)?))
}

fn nelder_mead_optimum(optimum: &mut Option<OscillationParams>) -> Result<Check> {
    let (best, e) = nm_optimum(TwoLevelSystem::new(1.0)?)?;
    *optimum = Some(best);
    Ok(check(
        e <= 1e-6,
        format!(
            "survival_error {e:.3e} (tol 1e-6) at v={:.4}, lambda={:.3}, omega={:.3}, phi={:.3}",
            best.v, best.lambda, best.omega, best.phi
        ),
    ))
}

fn valley(optimum: Option<OscillationParams>) -> Result<Check> {
    let p = match optimum {
        Some(p) => p,
        None => nm_optimum(TwoLevelSystem::new(1.0)?)?.0,
    };
    let probe = probe_valley(1.0, &p, 200.0, 0.01)?;
    let along = probe.along_degradation();
    let across = probe.across_degradation();
    let ratio = across / along.max(f64::MIN_POSITIVE);
    Ok(check(
        across >= 10.0 * along,
        format!("degradation along {along:.3e}, across {across:.3e}, ratio {ratio:.1} (need >= 10)"),
    ))
}

fn grape_identity() -> Result<Check> {
    let sys = TwoLevelSystem::new(1.0)?;
    let seed = PulseWaveform::from(OscillatingSweep::linear(40.0 * PI * PI)).pixelate(256, -4.8, 4.8)?;
    let r = grape_optimize(&sys, &seed, &Unitary2::identity(), &GrapeConfig::default())?;
    let best = r.best_pulse.clone().unwrap_or_else(|| seed.clone());
    let error = 1.0 - pulse_fidelity(&sys, &best, &Unitary2::identity());
    let correction: Vec<f64> = best.values.iter().zip(&seed.values).map(|(a, b)| a - b).collect();
    let n = correction.len();
    let energy: f64 = correction.iter().map(|c| c * c).sum();
    let central: f64 = correction[n / 3..n - n / 3].iter().map(|c| c * c).sum();
    let fraction = if energy > 0.0 { central / energy } else { 0.0 };
    Ok(check(
        error <= 1e-5 && fraction >= 0.7,
        format!(
            "error {error:.3e} (tol 1e-5) after {} iterations, central-third energy {:.1}% (need >= 70%)",
            r.iterations_used,
            100.0 * fraction
        ),
    ))
}

fn adiabatic_scans() -> Result<Check> {
    let delta = 0.04;
    let config = AdiabaticScanConfig::default();
    let (eps0, t) = default_adiabatic_grid(delta, &config, 20);
    let plain = scan_adiabatic_fidelity(delta, &eps0, &t, false, &config)?;
    let optimized = scan_adiabatic_fidelity(delta, &eps0, &t, true, &config)?;
    let witnesses = plain
        .values
        .iter()
        .zip(&optimized.values)
        .filter(|(p, o)| **p < 0.999 && **o >= 0.9999)
        .count();
    let reached = optimized.values.iter().filter(|o| **o >= 0.9999).count();
    Ok(check(
        witnesses > 0,
        format!(
            "{witnesses} of {} cells below 0.999 unoptimized but >= 0.9999 after GRAPE; {reached} optimized cells reach 0.9999",
            plain.values.len()
        ),
    ))
}

fn qsl_fit() -> Result<Check> {
    let (t0, c, delta0) = (12.5, 3.25, 0.015);
    let deltas = [0.02, 0.03, 0.04, 0.06, 0.08, 0.12];
    let synthetic: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, qsl_model(t0, c, delta0, d))).collect();
    let f = fit_qsl(&synthetic, None)?;
    let rel = [(f.t0, t0), (f.c, c), (f.delta0, delta0)]
        .iter()
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);

    let points = estimate_qsl(&deltas, &QslConfig::default())?;
    let data: Vec<(f64, f64)> = points.iter().filter_map(|p| p.t_qsl.map(|t| (p.delta, t))).collect();
    if data.len() < 5 {
        return Ok(check(false, format!("only {} of {} gaps resolved", data.len(), deltas.len())));
    }
    let fit = fit_qsl(&data, None)?;
    let mean = data.iter().map(|p| p.1).sum::<f64>() / data.len() as f64;
    let rms_rel = fit.rms() / mean;
    let monotone = data.windows(2).all(|w| w[1].1 <= w[0].1);
    let listed: Vec<String> = data.iter().map(|(d, t)| format!("{d}:{t:.1}")).collect();
    Ok(check(
        rel < 1e-6 && rms_rel < 0.05 && monotone,
        format!(
            "synthetic max rel error {rel:.1e} (tol 1e-6); T_QSL [{}], rms/mean {:.2}% (tol 5%), monotone {monotone}",
            listed.join(", "),
            100.0 * rms_rel
        ),
    ))
}

fn random_pixels(rng: &mut ChaCha8Rng, n: usize, amplitude: f64, dt: f64) -> PixelatedPulse {
    let values = (0..n).map(|_| rng.gen_range(-amplitude..amplitude)).collect();
    PixelatedPulse::new(values, dt, -0.5 * n as f64 * dt).expect("valid pixels")
}

fn random_pulse(rng: &mut ChaCha8Rng) -> PulseWaveform {
    if rng.gen_bool(0.5) {
        PulseWaveform::from(OscillatingSweep {
            v: rng.gen_range(0.1..20.0),
            lambda_r: rng.gen_range(0.0..100.0),
            omega: rng.gen_range(1.0..60.0),
            phi: rng.gen_range(0.0..2.0 * PI),
            window: None,
        })
    } else {
        let n = rng.gen_range(2..64);
        let dt = rng.gen_range(0.01..0.5);
        PulseWaveform::from(random_pixels(rng, n, 20.0, dt))
    }
}

fn properties() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut failures = Vec::new();

    let mut unitarity: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for _ in 0..1000 {
        let sys = TwoLevelSystem::new(rng.gen_range(0.0..3.0))?;
        let pulse = random_pulse(&mut rng);
        let (t0, t1) = match &pulse {
            PulseWaveform::Pixelated(p) => (p.start, p.end()),
            _ => (-5.0, 5.0),
        };
        let opts = PropagationOptions {
            samples: 50,
            ..Default::default()
        };
        let p = propagate_with(&sys, &pulse, t0, t1, &opts)?;
        unitarity = unitarity.max(p.unitary.unitarity_defect());
        for s in &p.trajectory.states {
            norm = norm.max((s[0].norm_sqr() + s[1].norm_sqr() - 1.0).abs());
        }
    }
    if unitarity >= 1e-10 {
        failures.push(format!("unitarity {unitarity:.1e}"));
    }
    if norm >= 1e-10 {
        failures.push(format!("norm {norm:.1e}"));
    }

    let targets = [
        Unitary2::identity(),
        Unitary2::sigma_x(),
        Unitary2::sigma_y(),
        Unitary2::sigma_z(),
        Unitary2::hadamard(),
    ];
    let mut grad_err: f64 = 0.0;
    for _ in 0..100 {
        let sys = TwoLevelSystem::new(rng.gen_range(0.2..2.0))?;
        let n = rng.gen_range(4..24);
        let dt = rng.gen_range(0.05..0.4);
        let pulse = random_pixels(&mut rng, n, 5.0, dt);
        let target = targets[rng.gen_range(0..targets.len())];
        let g = grape_gradient(&sys, &pulse, &target, 0)?;
        let h = 1e-5;
        let fd: Vec<f64> = (0..n)
            .map(|k| {
                let mut up = pulse.clone();
                let mut down = pulse.clone();
                up.values[k] += h;
                down.values[k] -= h;
                (pulse_fidelity(&sys, &up, &target) - pulse_fidelity(&sys, &down, &target)) / (2.0 * h)
            })
            .collect();
        let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-3);
        let diff = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        grad_err = grad_err.max(diff / scale);
    }
    if grad_err >= 1e-6 {
        failures.push(format!("gradient {grad_err:.1e}"));
    }

    let mut bessel: f64 = 0.0;
    for _ in 0..200 {
        let x = rng.gen_range(0.0..60.0);
        for m in 0..30 {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            bessel = bessel.max((bessel_j(-m, x) - sign * bessel_j(m, x)).abs());
        }
    }
    if bessel > 1e-14 {
        failures.push(format!("bessel parity {bessel:.1e}"));
    }

    let mut factor: f64 = 0.0;
    for _ in 0..200 {
        let params = JumpModelParams::new(
            rng.gen_range(0.1..2.0),
            rng.gen_range(1.0..20.0),
            rng.gen_range(0.0..200.0),
            rng.gen_range(10.0..60.0),
            rng.gen_range(0.0..2.0 * PI),
            100.0,
            None,
        )?;
        for e in jump_events(&params)? {
            factor = factor.max(e.matrix().unitarity_defect());
        }
    }
    if factor >= 1e-12 {
        failures.push(format!("jump factor {factor:.1e}"));
    }

    let mut monotone = true;
    let mut deterministic = true;
    for _ in 0..10 {
        let sys = TwoLevelSystem::new(1.0)?;
        let n = 32;
        let seed = random_pixels(&mut rng, n, 10.0, 0.1);
        let config = GrapeConfig {
            pixel_count: n,
            max_iterations: 50,
            ..Default::default()
        };
        let a = grape_optimize(&sys, &seed, &Unitary2::sigma_x(), &config)?;
        let b = grape_optimize(&sys, &seed, &Unitary2::sigma_x(), &config)?;
        monotone &= a.value_history.windows(2).all(|w| w[1] <= w[0]);
        deterministic &= a.value_history == b.value_history && a.best_parameters == b.best_parameters;
    }
    let d = design_diabatic_pulse(8.0, 50.0, 2.8, 1.0)?;
    let s1 = scan_phase_sensitivity(1.0, &d.pulse, &phase_grid(32), 60.0)?;
    let s2 = scan_phase_sensitivity(1.0, &d.pulse, &phase_grid(32), 60.0)?;
    deterministic &= s1.values == s2.values;
    if !monotone {
        failures.push("GRAPE ascent not monotone".into());
    }
    if !deterministic {
        failures.push("reruns differ".into());
    }

    let u = evolve(&TwoLevelSystem::new(1.0)?, &OscillatingSweep::linear(3.0).into(), -10.0, 10.0)?;
    let target = Unitary2::hadamard();
    let mut phase: f64 = 0.0;
    for k in 0..16 {
        let alpha = num_complex::Complex64::from_polar(1.0, 0.4 * k as f64);
        phase = phase.max((gate_fidelity(&u.scale(alpha), &target) - gate_fidelity(&u, &target)).abs());
    }
    if phase > 1e-14 {
        failures.push(format!("global phase {phase:.1e}"));
    }

    Ok(check(
        failures.is_empty(),
        format!(
            "unitarity {unitarity:.1e}, norm {norm:.1e}, gradient rel {grad_err:.1e}, J parity {bessel:.1e}, \
             jump factors {factor:.1e}, global phase {phase:.1e}, monotone {monotone}, deterministic {deterministic}{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failures.join(", "))
            }
        ),
    ))
}

fn main() -> ExitCode {
    let mut optimum = None;
    let results = [
        run(1, "LZ formula convergence", secs(1), lz_convergence),
        run(2, "multi-jump trajectory", secs(5), jump_reproduction),
        run(3, "designed diabatic pulse", secs(1), designed_pulse),
        run(4, "phase sensitivity", secs(30), phase_sensitivity),
        run(5, "Nelder-Mead optimum", secs(300), || nelder_mead_optimum(&mut optimum)),
        run(6, "robustness valley", secs(120), || valley(optimum)),
        run(7, "GRAPE identity gate", secs(120), grape_identity),
        run(8, "adiabatic scans", secs(1200), adiabatic_scans),
        run(9, "speed-limit fit", secs(3600), qsl_fit),
        run(10, "property suites", secs(60), properties),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
