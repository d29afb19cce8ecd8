use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use super::config::{
    DesignConfig, EnergyUnit, FitQslConfig, GrapeCommandConfig, OptimizeNmConfig, PulseExport, RunConfig, ScanConfig,
    SimulateConfig,
};
use super::output::{read_table, Cell, Sink};
use super::svg::{Heatmap, LinePlot, Series, Style};
use crate::analytic::design_diabatic_pulse;
use crate::dynamics::{
    evolve, gate_fidelity, phase_insensitive_fidelity, pixel_unitary, survival_error, PixelatedPulse, PulseWaveform,
    TwoLevelSystem, Unitary2,
};
use crate::error::{Error, Result};
use crate::experiments::{
    default_adiabatic_grid, estimate_qsl, fit_qsl, log_grid, phase_grid, scan_adiabatic_fidelity,
    scan_phase_sensitivity, scan_robustness, trace_trajectory, QslFit, ScanResult, TraceRequest,
};
use crate::optim::{
    grape_optimize, optimize_oscillation_params, oscillation_error, pulse_fidelity, OscillationObjective,
    OscillationParams,
};

/// What a finished command reports back to the dispatcher.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False when an optimizer, scan cell or export did not converge; the
    /// files are written regardless.
    pub converged: bool,
    pub files: Vec<PathBuf>,
}

/// Resolved configuration echoed into every output header.
fn resolved<T: Serialize>(run: &RunConfig, name: &str, section: &T) -> Value {
    let mut block = serde_json::to_value(section).unwrap_or(Value::Null);
    // keep file references instead of the inlined pixel values
    let raw_pulse = run.raw_section(name).and_then(|v| v.get("pulse").cloned());
    if let (Some(raw), Some(obj)) = (raw_pulse, block.as_object_mut()) {
        if raw.get("file").is_some() {
            obj.insert("pulse".into(), raw);
        }
    }
    serde_json::json!({
        "units": run.units,
        "output": run.output,
        name: block,
    })
}

fn sink<T: Serialize>(run: &RunConfig, command: &str, name: &str, section: &T) -> Result<Sink> {
    let dir = run.resolve_path(&run.output.directory);
    Sink::new(&dir, &run.output.formats, command, run.output.seed, &resolved(run, name, section))
}

fn system(delta: f64, field: &str) -> Result<TwoLevelSystem> {
    TwoLevelSystem::new(delta).map_err(|e| Error::validation(field, e.to_string()))
}

pub fn simulate(run: &RunConfig) -> Result<Outcome> {
    let cfg: SimulateConfig = run.section("simulate")?;
    cfg.pulse
        .validate()
        .map_err(|e| Error::validation("simulate.pulse", e.to_string()))?;
    let (t0, t1) = cfg.interval().resolve(&cfg.pulse, "simulate")?;
    let mut out = sink(run, "simulate", "simulate", &cfg)?;
    let trace = trace_trajectory(&TraceRequest {
        delta: cfg.delta,
        pulse: cfg.pulse.clone(),
        t_start: t0,
        t_end: t1,
        samples: cfg.samples,
    })?;

    let traj = &trace.trajectory;
    let p0 = &traj.populations;
    out.table(
        "trajectory.csv",
        &["t", "population_0", "population_1", "epsilon"],
        (0..traj.len()).map(|i| vec![traj.times[i], p0[i], 1.0 - p0[i], trace.epsilon[i]]),
    )?;
    if !trace.plateau_checks.is_empty() {
        out.table(
            "plateaus.csv",
            &["m", "start", "end", "predicted", "simulated"],
            trace
                .plateau_checks
                .iter()
                .map(|p| vec![p.m as f64, p.start, p.end, p.predicted, p.simulated]),
        )?;
    }
    if !trace.located_jumps.is_empty() {
        out.table(
            "jumps.csv",
            &["m", "predicted", "located", "population_change"],
            trace
                .located_jumps
                .iter()
                .map(|j| vec![j.m as f64, j.predicted, j.located, j.population_change]),
        )?;
    }

    let u = trace.unitary;
    let last = p0.last().copied().unwrap_or(f64::NAN);
    let mut rows: Vec<(&str, Cell)> = vec![
        ("survival_error", trace.survival_error.into()),
        ("phase_insensitive_fidelity", phase_insensitive_fidelity(&u).into()),
        ("final_population_0", last.into()),
        ("final_population_1", (1.0 - last).into()),
        ("t_start", t0.into()),
        ("t_end", t1.into()),
        ("jumps", trace.jumps.len().into()),
    ];
    if let Some(target) = cfg.target {
        rows.push(("gate_fidelity", gate_fidelity(&u, &target.unitary()).into()));
    }
    if let Some(d) = trace.max_jump_offset() {
        rows.push(("max_jump_offset", d.into()));
    }
    if let Some(d) = trace.max_plateau_deviation() {
        rows.push(("max_plateau_deviation", d.into()));
    }
    out.results("result.csv", &rows)?;

    let mut plot = LinePlot::new("Population transfer", "t", "population")
        .with(Series::new("population_0", traj.times.clone(), p0.clone(), Style::Line));
    if !trace.plateaus.is_empty() {
        let (mut x, mut y) = (vec![t0], vec![0.0]);
        for p in &trace.plateaus {
            x.extend([p.start, p.start]);
            y.extend([*y.last().unwrap_or(&0.0), p.population]);
        }
        x.push(t1);
        y.push(*y.last().unwrap_or(&0.0));
        plot = plot.with(Series::new("multi-jump model", x, y, Style::Dashed));
    }
    out.svg("trajectory.svg", |c| plot.render(c))?;
    Ok(Outcome {
        converged: true,
        files: out.written,
    })
}

/// Uniform pixelation of an analytic pulse, doubled until its survival
/// error agrees with the continuous propagation.
fn export_pixels(
    system: &TwoLevelSystem,
    pulse: &PulseWaveform,
    t0: f64,
    t1: f64,
    reference: f64,
    export: &PulseExport,
) -> Result<(PixelatedPulse, f64, bool)> {
    if export.min_pixels == 0 || export.max_pixels < export.min_pixels {
        return Err(Error::validation("export.max_pixels", "needs 0 < min_pixels <= max_pixels"));
    }
    let mut n = export.min_pixels;
    loop {
        let px = pulse.pixelate(n, t0, t1)?;
        let e = survival_error(&pixel_unitary(system, &px));
        let ok = (e - reference).abs() <= export.tolerance;
        if ok || 2 * n > export.max_pixels {
            return Ok((px, e, ok));
        }
        n *= 2;
    }
}

fn pulse_plot(title: &str, pulses: &[(&str, &PixelatedPulse)]) -> LinePlot {
    let mut plot = LinePlot::new(title, "t", "epsilon");
    for (k, (label, p)) in pulses.iter().enumerate() {
        let stride = (p.len() / 4000).max(1);
        let idx: Vec<usize> = (0..p.len()).step_by(stride).collect();
        let x = idx.iter().map(|&i| p.pixel_time(i)).collect();
        let y = idx.iter().map(|&i| p.values[i]).collect();
        let style = if k == 0 && pulses.len() > 1 { Style::Dashed } else { Style::Line };
        plot = plot.with(Series::new(label, x, y, style));
    }
    plot
}

pub fn design(run: &RunConfig) -> Result<Outcome> {
    let cfg: DesignConfig = run.section("design")?;
    let sys = system(cfg.delta, "design.delta")?;
    if !(cfg.span > 0.0) {
        return Err(Error::validation("design.span", "must be positive"));
    }
    let d = design_diabatic_pulse(cfg.v, cfg.omega, cfg.switching, cfg.delta)?;
    let mut out = sink(run, "design", "design", &cfg)?;
    let pulse = PulseWaveform::from(d.pulse);
    let (t0, t1) = (-0.5 * cfg.span, 0.5 * cfg.span);
    let continuous = survival_error(&evolve(&sys, &pulse, t0, t1)?);
    let (px, pixelated, ok) = export_pixels(&sys, &pulse, t0, t1, continuous, &cfg.export)?;
    let w = d.window();
    out.results(
        "result.csv",
        &[
            ("survival_error", continuous.into()),
            ("pixelated_survival_error", pixelated.into()),
            ("pixel_count", px.len().into()),
            ("converged", ok.into()),
            ("v", d.pulse.v.into()),
            ("lambda_r", d.pulse.lambda_r.into()),
            ("omega", d.pulse.omega.into()),
            ("phi", d.pulse.phi.into()),
            ("drive_time", (w.total - w.switching).into()),
            ("switching", w.switching.into()),
            ("drive_duration", d.drive_duration().into()),
            ("inner_margin", d.inner_margin.into()),
            ("outer_margin", d.outer_margin.into()),
            ("jumps_separated", d.jumps_separated.into()),
            ("span", cfg.span.into()),
        ],
    )?;
    out.pulse("pulse.csv", &px)?;
    let half = w.half_extent() + 2.0 * cfg.omega / cfg.v;
    let shown = pulse.pixelate(4000, -half, half)?;
    out.svg("pulse.svg", |c| pulse_plot("Designed sweep", &[("epsilon", &shown)]).render(c))?;
    Ok(Outcome {
        converged: ok,
        files: out.written,
    })
}

fn history_outputs(out: &mut Sink, history: &[f64], title: &str) -> Result<()> {
    out.table(
        "history.csv",
        &["iteration", "best_value"],
        history.iter().enumerate().map(|(i, v)| vec![(i + 1) as f64, *v]),
    )?;
    let x: Vec<f64> = (1..=history.len()).map(|i| i as f64).collect();
    let plot = LinePlot::new(title, "iteration", "best value")
        .log_y()
        .with(Series::new("best", x, history.to_vec(), Style::Line));
    out.svg("history.svg", |c| plot.render(c))
}

pub fn optimize_nm(run: &RunConfig) -> Result<Outcome> {
    let cfg: OptimizeNmConfig = run.section("optimize_nm")?;
    let sys = system(cfg.delta, "optimize_nm.delta")?;
    cfg.simplex.validate().map_err(|e| match e {
        Error::Validation { field, message } => Error::validation(format!("optimize_nm.simplex.{field}"), message),
        other => other,
    })?;
    if !(cfg.duration > 0.0) {
        return Err(Error::validation("optimize_nm.duration", "must be positive"));
    }
    for (field, x) in [
        ("optimize_nm.search_step_phase", cfg.search_step_phase),
        ("optimize_nm.score_step_phase", cfg.score_step_phase),
    ] {
        if !(x > 0.0) {
            return Err(Error::validation(field, "must be positive"));
        }
    }
    let p0 = cfg.initial;
    if !(p0.v > 0.0) || !(p0.omega > 0.0) || !p0.lambda.is_finite() || !p0.phi.is_finite() {
        return Err(Error::validation(
            "optimize_nm.initial",
            "v and omega must be positive, lambda and phi finite",
        ));
    }
    let mut out = sink(run, "optimize-nm", "optimize_nm", &cfg)?;
    let objective = OscillationObjective {
        max_step_phase: cfg.search_step_phase,
        ..OscillationObjective::new(sys, cfg.duration)
    };
    let r = optimize_oscillation_params(&objective, p0, &cfg.simplex)?;
    let b = &r.best_parameters;
    let best = OscillationParams {
        v: b[0],
        lambda: b[1],
        omega: b[2],
        phi: b[3],
    };
    let scored = oscillation_error(&sys, cfg.duration, &best, cfg.score_step_phase)?;
    let initial = oscillation_error(&sys, cfg.duration, &p0, cfg.score_step_phase)?;
    let pulse = PulseWaveform::from(best.sweep());
    let half = 0.5 * cfg.duration;
    let (px, pixelated, exported) = export_pixels(&sys, &pulse, -half, half, scored, &cfg.export)?;

    out.results(
        "result.csv",
        &[
            ("best_value", scored.into()),
            ("search_value", r.best_value.into()),
            ("initial_value", initial.into()),
            ("pixelated_survival_error", pixelated.into()),
            ("pixel_count", px.len().into()),
            ("iterations_used", r.iterations_used.into()),
            ("converged", r.converged.into()),
            ("v", best.v.into()),
            ("lambda", best.lambda.into()),
            ("omega", best.omega.into()),
            ("phi", best.phi.into()),
            ("duration", cfg.duration.into()),
        ],
    )?;
    out.pulse("pulse.csv", &px)?;
    history_outputs(&mut out, &r.value_history, "Nelder-Mead convergence")?;
    Ok(Outcome {
        converged: r.converged && exported,
        files: out.written,
    })
}

pub fn grape(run: &RunConfig) -> Result<Outcome> {
    let mut cfg: GrapeCommandConfig = run.section("grape")?;
    let sys = system(cfg.delta, "grape.delta")?;
    cfg.pulse
        .validate()
        .map_err(|e| Error::validation("grape.pulse", e.to_string()))?;
    let initial = match &cfg.pulse {
        PulseWaveform::Pixelated(p) => {
            cfg.config.pixel_count = p.len();
            p.clone()
        }
        other => {
            let (t0, t1) = cfg.interval().resolve(other, "grape")?;
            other.pixelate(cfg.config.pixel_count, t0, t1)?
        }
    };
    cfg.config.validate().map_err(|e| match e {
        Error::Validation { field, message } => Error::validation(format!("grape.config.{field}"), message),
        other => other,
    })?;
    let mut out = sink(run, "grape", "grape", &cfg)?;
    let target: Unitary2 = cfg.target.unitary();
    let r = grape_optimize(&sys, &initial, &target, &cfg.config)?;
    let best = r.best_pulse.clone().unwrap_or_else(|| initial.clone());
    let fidelity = pulse_fidelity(&sys, &best, &target);
    let correction: Vec<f64> = best.values.iter().zip(&initial.values).map(|(a, b)| a - b).collect();
    let energy: f64 = correction.iter().map(|c| c * c).sum();
    let n = correction.len();
    let central: f64 = correction[n / 3..n - n / 3].iter().map(|c| c * c).sum();

    out.results(
        "result.csv",
        &[
            ("fidelity", fidelity.into()),
            ("best_value", r.best_value.into()),
            ("initial_fidelity", pulse_fidelity(&sys, &initial, &target).into()),
            ("survival_error", survival_error(&pixel_unitary(&sys, &best)).into()),
            ("iterations_used", r.iterations_used.into()),
            ("converged", r.converged.into()),
            ("pixel_count", n.into()),
            ("dt", best.dt.into()),
            ("t_start", best.start.into()),
            (
                "central_correction_fraction",
                (if energy > 0.0 { central / energy } else { 0.0 }).into(),
            ),
        ],
    )?;
    out.pulse("pulse.csv", &best)?;
    out.table(
        "correction.csv",
        &["t", "initial", "optimized", "correction"],
        (0..n).map(|k| vec![best.pixel_time(k), initial.values[k], best.values[k], correction[k]]),
    )?;
    out.svg("pulse.svg", |c| {
        pulse_plot("GRAPE pulse", &[("initial", &initial), ("optimized", &best)]).render(c)
    })?;
    let shift = LinePlot::new("GRAPE correction", "t", "optimized - initial").with(Series::new(
        "correction",
        (0..n).map(|k| best.pixel_time(k)).collect(),
        correction.clone(),
        Style::Line,
    ));
    out.svg("correction.svg", |c| shift.render(c))?;
    history_outputs(&mut out, &r.value_history, "GRAPE convergence")?;
    Ok(Outcome {
        converged: r.converged,
        files: out.written,
    })
}

fn linear_grid(center: f64, relative: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![center];
    }
    (0..n)
        .map(|i| center * (1.0 - relative + 2.0 * relative * i as f64 / (n - 1) as f64))
        .collect()
}

fn unit_label(run: &RunConfig, unit: &str) -> String {
    let energy = match run.units.energy_unit {
        EnergyUnit::Delta => "delta",
        EnergyUnit::Ghz => "GHz",
    };
    match unit {
        "energy" => energy.into(),
        "time" => run.units.energy_unit.time_unit().into(),
        other => other.into(),
    }
}

fn scan_outputs(run: &RunConfig, out: &mut Sink, scan: &ScanResult, title: &str) -> Result<()> {
    let (a, b) = scan.shape();
    match &scan.axis2 {
        Some(axis2) => {
            out.table(
                "scan.csv",
                &[&scan.axis1.name, &axis2.name, &scan.metric_name],
                (0..a).flat_map(|i| (0..b).map(move |j| (i, j))).map(|(i, j)| {
                    vec![scan.axis1.values[i], axis2.values[j], scan.get(i, j)]
                }),
            )?;
            let map = Heatmap {
                title: format!("{title}: {}", scan.metric_name),
                x_label: format!("{} [{}]", scan.axis1.name, unit_label(run, &scan.axis1.unit)),
                y_label: format!("{} [{}]", axis2.name, unit_label(run, &axis2.unit)),
                x: scan.axis1.values.clone(),
                y: axis2.values.clone(),
                values: scan.values.clone(),
            };
            out.svg("scan.svg", |c| map.render(c))?;
        }
        None => {
            out.table(
                "scan.csv",
                &[&scan.axis1.name, &scan.metric_name],
                (0..a).map(|i| vec![scan.axis1.values[i], scan.values[i]]),
            )?;
            let plot = LinePlot::new(
                title,
                &format!("{} [{}]", scan.axis1.name, unit_label(run, &scan.axis1.unit)),
                &scan.metric_name,
            )
            .with(Series::new(&scan.metric_name, scan.axis1.values.clone(), scan.values.clone(), Style::Line));
            out.svg("scan.svg", |c| plot.render(c))?;
        }
    }
    let (min, max) = scan
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    out.results(
        "result.csv",
        &[
            ("metric", scan.metric_name.as_str().into()),
            ("rows", a.into()),
            ("columns", b.into()),
            ("min", min.into()),
            ("max", max.into()),
            ("failed_cells", scan.failed.len().into()),
            ("converged", scan.failed.is_empty().into()),
        ],
    )
}

pub fn scan(run: &RunConfig) -> Result<Outcome> {
    let cfg: ScanConfig = run.section("scan")?;
    let (scan, title) = match &cfg {
        ScanConfig::Phase {
            delta,
            sweep,
            design,
            points,
            span,
        } => {
            let base = match (sweep, design) {
                (Some(s), None) => *s,
                (None, Some(d)) => design_diabatic_pulse(d.v, d.omega, d.switching, *delta)?.pulse,
                _ => return Err(Error::validation("scan.sweep", "give exactly one of `sweep` and `design`")),
            };
            if *points < 32 {
                return Err(Error::validation("scan.points", "need at least 32 phases"));
            }
            (
                scan_phase_sensitivity(*delta, &base, &phase_grid(*points), *span)?,
                "Phase sensitivity",
            )
        }
        ScanConfig::Robustness {
            delta,
            optimum,
            duration,
            v_grid,
            omega_grid,
            relative_span,
            points,
        } => {
            let vs = v_grid
                .clone()
                .unwrap_or_else(|| linear_grid(optimum.v, *relative_span, *points));
            let ws = omega_grid
                .clone()
                .unwrap_or_else(|| linear_grid(optimum.omega, *relative_span, *points));
            (
                scan_robustness(*delta, optimum, *duration, &vs, &ws)?,
                "Robustness",
            )
        }
        ScanConfig::Adiabatic {
            delta,
            optimize,
            points,
            eps0_grid,
            t_grid,
            config,
        } => {
            config.grape.validate().map_err(|e| match e {
                Error::Validation { field, message } => {
                    Error::validation(format!("scan.config.grape.{field}"), message)
                }
                other => other,
            })?;
            let (de, dt) = default_adiabatic_grid(*delta, config, *points);
            let e = eps0_grid.clone().unwrap_or(de);
            let t = t_grid.clone().unwrap_or(dt);
            let title = if *optimize { "Optimized transfer" } else { "Adiabatic transfer" };
            (scan_adiabatic_fidelity(*delta, &e, &t, *optimize, config)?, title)
        }
    };
    let mut out = sink(run, "scan", "scan", &cfg)?;
    scan_outputs(run, &mut out, &scan, title)?;
    Ok(Outcome {
        converged: scan.failed.is_empty(),
        files: out.written,
    })
}

fn fit_outputs(out: &mut Sink, fit: &QslFit, unresolved: &[f64]) -> Result<()> {
    out.table(
        "fit.csv",
        &["delta", "t_qsl", "fitted", "residual"],
        fit.data
            .iter()
            .zip(&fit.residuals)
            .map(|(&(d, t), r)| vec![d, t, fit.model(d), *r]),
    )?;
    let mean = fit.data.iter().map(|p| p.1).sum::<f64>() / fit.data.len() as f64;
    let mut rows: Vec<(&str, Cell)> = vec![
        ("t0", fit.t0.into()),
        ("c", fit.c.into()),
        ("delta0", fit.delta0.into()),
        ("t0_fixed", fit.t0_fixed.into()),
        ("rms", fit.rms().into()),
        ("rms_relative", (fit.rms() / mean).into()),
        ("points", fit.data.len().into()),
        ("unresolved", unresolved.len().into()),
        ("converged", unresolved.is_empty().into()),
    ];
    let listed = unresolved.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ");
    if !unresolved.is_empty() {
        rows.push(("unresolved_deltas", listed.as_str().into()));
    }
    out.results("result.csv", &rows)?;

    let (lo, hi) = fit
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let xs = log_grid(lo, hi, 200);
    let ys = xs.iter().map(|&d| fit.model(d)).collect();
    let plot = LinePlot::new("Quantum speed limit", "delta", "T_QSL")
        .with(Series::new(
            "estimated",
            fit.data.iter().map(|p| p.0).collect(),
            fit.data.iter().map(|p| p.1).collect(),
            Style::Markers,
        ))
        .with(Series::new("fit", xs, ys, Style::Line));
    out.svg("fit.svg", |c| plot.render(c))
}

pub fn fit_qsl_command(run: &RunConfig) -> Result<Outcome> {
    let cfg: FitQslConfig = run.section("fit_qsl")?;
    let sources = [cfg.data.is_some(), cfg.data_file.is_some(), cfg.estimate.is_some()];
    if sources.iter().filter(|s| **s).count() != 1 {
        return Err(Error::validation(
            "fit_qsl.data",
            "give exactly one of `data`, `data_file` and `estimate`",
        ));
    }
    let mut unresolved = Vec::new();
    let data: Vec<(f64, f64)> = if let Some(d) = &cfg.data {
        d.clone()
    } else if let Some(path) = &cfg.data_file {
        let path = run.resolve_path(path);
        let (columns, rows) = read_table(&path)?;
        let col = |name: &str| {
            columns.iter().position(|c| c == name).ok_or_else(|| Error::Validation {
                field: "fit_qsl.data_file".into(),
                message: format!("{} has no `{name}` column", path.display()),
            })
        };
        let (di, ti) = (col("delta")?, col("t_qsl")?);
        rows.iter().map(|r| (r[di], r[ti])).collect()
    } else {
        let est = cfg.estimate.as_ref().expect("one source is present");
        est.config.validate().map_err(|e| match e {
            Error::Validation { field, message } => {
                Error::validation(format!("fit_qsl.estimate.config.{field}"), message)
            }
            other => other,
        })?;
        let points = estimate_qsl(&est.deltas, &est.config)?;
        points
            .iter()
            .filter_map(|p| match p.t_qsl {
                Some(t) => Some((p.delta, t)),
                None => {
                    unresolved.push(p.delta);
                    None
                }
            })
            .collect()
    };
    let mut out = sink(run, "fit-qsl", "fit_qsl", &cfg)?;
    let fit = fit_qsl(&data, cfg.fix_t0)?;
    fit_outputs(&mut out, &fit, &unresolved)?;
    Ok(Outcome {
        converged: unresolved.is_empty(),
        files: out.written,
    })
}
