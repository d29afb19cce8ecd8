use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use lzforge::analytic::{bessel_j, jump_events, multi_jump_unitary, JumpModelParams};
use lzforge::dynamics::{
    evolve, gate_fidelity, pixel_unitary, propagate_with, OscillatingSweep, PixelatedPulse, PropagationOptions,
    PulseWaveform, TwoLevelSystem, Unitary2,
};
use lzforge::optim::{grape_gradient, grape_optimize, pulse_fidelity, GrapeConfig};

fn sweep() -> impl Strategy<Value = OscillatingSweep> {
    (0.1..20.0f64, 0.0..150.0f64, 1.0..60.0f64, 0.0..2.0 * PI).prop_map(|(v, lambda_r, omega, phi)| {
        OscillatingSweep {
            v,
            lambda_r,
            omega,
            phi,
            window: None,
        }
    })
}

fn pixels(max_len: usize, amplitude: f64) -> impl Strategy<Value = PixelatedPulse> {
    (prop::collection::vec(-amplitude..amplitude, 2..max_len), 0.01..0.5f64, -5.0..5.0f64)
        .prop_map(|(values, dt, start)| PixelatedPulse::new(values, dt, start).unwrap())
}

fn target() -> impl Strategy<Value = Unitary2> {
    prop::sample::select(vec![
        Unitary2::identity(),
        Unitary2::sigma_x(),
        Unitary2::sigma_y(),
        Unitary2::sigma_z(),
        Unitary2::hadamard(),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sweeps_evolve_unitarily(p in sweep(), delta in 0.0..3.0f64, t0 in -10.0..0.0f64, len in 0.1..10.0f64) {
        let sys = TwoLevelSystem::new(delta).unwrap();
        let u = evolve(&sys, &p.into(), t0, t0 + len).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-10, "defect {}", u.unitarity_defect());
    }

    #[test]
    fn pixel_products_are_unitary(p in pixels(64, 50.0), delta in 0.0..3.0f64) {
        let sys = TwoLevelSystem::new(delta).unwrap();
        let u = pixel_unitary(&sys, &p);
        prop_assert!(u.unitarity_defect() < 1e-10);
        let stepped = evolve(&sys, &p.clone().into(), p.start, p.end()).unwrap();
        prop_assert!(stepped.max_abs_diff(&u) < 1e-9, "diff {}", stepped.max_abs_diff(&u));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn trajectories_conserve_norm(p in sweep(), delta in 0.1..3.0f64) {
        let sys = TwoLevelSystem::new(delta).unwrap();
        let opts = PropagationOptions { samples: 200, ..Default::default() };
        let r = propagate_with(&sys, &p.into(), -5.0, 5.0, &opts).unwrap();
        for s in &r.trajectory.states {
            prop_assert!((s[0].norm_sqr() + s[1].norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gate_fidelity_ignores_global_phase(p in sweep(), alpha in 0.0..2.0 * PI, t in target()) {
        let u = evolve(&TwoLevelSystem::new(1.0).unwrap(), &p.into(), -2.0, 2.0).unwrap();
        let shifted = u.scale(Complex64::from_polar(1.0, alpha));
        prop_assert!((gate_fidelity(&shifted, &t) - gate_fidelity(&u, &t)).abs() < 1e-14);
    }

    #[test]
    fn grape_gradient_matches_finite_differences(
        p in pixels(24, 5.0),
        delta in 0.2..2.0f64,
        t in target(),
    ) {
        let sys = TwoLevelSystem::new(delta).unwrap();
        let g = grape_gradient(&sys, &p, &t, 0).unwrap();
        let h = 1e-5;
        let scale = g.iter().fold(1e-3f64, |m, x| m.max(x.abs()));
        for (k, gk) in g.iter().enumerate() {
            let mut up = p.clone();
            let mut down = p.clone();
            up.values[k] += h;
            down.values[k] -= h;
            let fd = (pulse_fidelity(&sys, &up, &t) - pulse_fidelity(&sys, &down, &t)) / (2.0 * h);
            prop_assert!((gk - fd).abs() / scale < 1e-6, "pixel {k}: {gk} vs {fd}");
        }
    }

    #[test]
    fn buffer_pixels_have_zero_gradient(p in pixels(24, 5.0), buffer in 1usize..4) {
        let sys = TwoLevelSystem::new(1.0).unwrap();
        let g = grape_gradient(&sys, &p, &Unitary2::sigma_x(), buffer).unwrap();
        for (k, gk) in g.iter().enumerate() {
            if k < buffer || k + buffer >= g.len() {
                prop_assert_eq!(*gk, 0.0);
            }
        }
    }

    #[test]
    fn bessel_negative_order(m in 0i32..40, x in 0.0..80.0f64) {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(bessel_j(-m, x), sign * bessel_j(m, x));
    }

    #[test]
    fn jump_factors_are_unitary(
        delta in 0.05..2.0f64,
        v in 1.0..20.0f64,
        lambda in 0.0..200.0f64,
        omega in 10.0..60.0f64,
        phi in 0.0..2.0 * PI,
    ) {
        let params = JumpModelParams::new(delta, v, lambda, omega, phi, 100.0, None).unwrap();
        for e in jump_events(&params).unwrap() {
            prop_assert!(e.matrix().unitarity_defect() < 1e-12);
        }
        prop_assert!(multi_jump_unitary(&params).unwrap().unitarity_defect() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn grape_ascent_is_monotone_and_repeatable(p in pixels(40, 10.0), t in target()) {
        let sys = TwoLevelSystem::new(1.0).unwrap();
        let config = GrapeConfig {
            pixel_count: p.len(),
            max_iterations: 40,
            buffer_pixels: 0,
            smoothing_sigma: Some(2.0 * p.dt),
            ..Default::default()
        };
        let a = grape_optimize(&sys, &p, &t, &config).unwrap();
        let b = grape_optimize(&sys, &p, &t, &config).unwrap();
        prop_assert!(a.value_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(a.best_value <= a.value_history[0]);
        prop_assert_eq!(&a.value_history, &b.value_history);
        prop_assert_eq!(a.best_pulse, b.best_pulse);
    }
}

#[test]
fn step_doubling_converges() {
    let sys = TwoLevelSystem::new(1.0).unwrap();
    let pulse = PulseWaveform::from(OscillatingSweep {
        v: 10.0,
        lambda_r: 120.24,
        omega: 50.0,
        phi: 0.3,
        window: None,
    });
    let target = Unitary2::sigma_x();
    let fidelity = |steps: usize| {
        let opts = PropagationOptions {
            steps: Some(steps),
            ..PropagationOptions::unitary_only()
        };
        gate_fidelity(&propagate_with(&sys, &pulse, -20.0, 20.0, &opts).unwrap().unitary, &target)
    };
    let mut steps = 4000;
    let mut previous = fidelity(steps);
    loop {
        steps *= 2;
        let next = fidelity(steps);
        if (next - previous).abs() < 1e-8 {
            break;
        }
        assert!(steps < 1 << 22, "no convergence by {steps} steps");
        previous = next;
    }
}
