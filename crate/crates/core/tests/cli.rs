use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use lzforge::dynamics::lz_probability;
use lzforge::experiments::qsl_model;
use serde_json::json;

const BIN: &str = env!("CARGO_BIN_EXE_lzforge");

struct Run {
    code: i32,
    stderr: String,
}

fn lzforge(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(BIN);
    cmd.args(args).current_dir(dir).env_remove("LZFORGE_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write_config(dir: &Path, name: &str, value: serde_json::Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path.display().to_string()
}

fn results(path: &Path) -> HashMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter_map(|l| l.split_once(','))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn number(r: &HashMap<String, String>, key: &str) -> f64 {
    r.get(key).unwrap_or_else(|| panic!("no `{key}`")).parse().unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn linear_sweep(v: f64) -> serde_json::Value {
    json!({"kind": "linear_oscillating", "v": v, "lambda_r": 0.0, "omega": 1.0, "phi": 0.0})
}

#[test]
fn simulate_linear_sweep_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        json!({"output": {"directory": "out"}, "simulate": {"pulse": linear_sweep(10.0), "duration": 100.0}}),
    );
    let r = lzforge(dir.path(), &["simulate", "--config", &cfg, "--seed", "42"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = dir.path().join("out/trajectory.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().any(|l| l == "# seed: 42"));
    assert!(text.lines().any(|l| l.starts_with('#') && l.contains("\"energy_unit\"")));
    assert!(text.lines().any(|l| l == "t,population_0,population_1,epsilon"));
    let rows = data_rows(&csv);
    let last = rows.last().unwrap();
    let p = lz_probability(1.0, 10.0).unwrap();
    assert!((last[1] - p).abs() < 2e-3, "{} vs {p}", last[1]);
    assert!((last[2] - (1.0 - p)).abs() < 2e-3);
    assert!((last[3] - 500.0).abs() < 1e-9);
    assert!(dir.path().join("out/trajectory.svg").exists());
    let svg = fs::read_to_string(dir.path().join("out/trajectory.svg")).unwrap();
    assert!(svg.contains("# seed: 42"));
}

#[test]
fn empty_pulse_block_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", json!({"simulate": {"pulse": {}, "duration": 10.0}}));
    let r = lzforge(dir.path(), &["simulate", "--config", &cfg], &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("pulse"), "{}", r.stderr);
}

#[test]
fn csv_only_emits_no_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", json!({"simulate": {"pulse": linear_sweep(5.0), "duration": 20.0}}));
    let r = lzforge(dir.path(), &["simulate", "--config", &cfg, "--out", "o", "--format", "csv"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let names: Vec<String> = fs::read_dir(dir.path().join("o"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"trajectory.csv".to_string()));
    assert!(names.iter().all(|n| !n.ends_with(".svg")), "{names:?}");
}

#[test]
fn designed_pulse_round_trips_through_pulse_csv() {
    let dir = tempfile::tempdir().unwrap();
    let design = write_config(
        dir.path(),
        "design.json",
        json!({"output": {"directory": "design"}, "design": {"v": 8.0, "omega": 50.0, "switching": 2.8}}),
    );
    let r = lzforge(dir.path(), &["design", "--config", &design], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let d = results(&dir.path().join("design/result.csv"));
    assert!(number(&d, "survival_error") < 1e-5);
    assert_eq!(d["converged"], "true");

    let replay = write_config(
        dir.path(),
        "replay.json",
        json!({
            "output": {"directory": "replay", "formats": ["csv"]},
            "simulate": {"pulse": {"kind": "pixelated", "file": "design/pulse.csv"}}
        }),
    );
    let r = lzforge(dir.path(), &["simulate", "--config", &replay], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let s = results(&dir.path().join("replay/result.csv"));
    let replayed = number(&s, "survival_error");
    assert!(replayed < 1e-5, "{replayed}");
    assert!((replayed - number(&d, "pixelated_survival_error")).abs() < 1e-8);
    let header = fs::read_to_string(dir.path().join("replay/result.csv")).unwrap();
    assert!(header.contains("design/pulse.csv"));
}

#[test]
fn grape_pulse_round_trips_and_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let grape = |name: &str, iterations: usize| {
        write_config(
            dir.path(),
            &format!("{name}.json"),
            json!({
                "output": {"directory": name},
                "grape": {
                    "pulse": linear_sweep(40.0),
                    "duration": 3.0,
                    "target": "identity",
                    "config": {"pixel_count": 64, "max_iterations": iterations, "target_error": 1e-12}
                }
            }),
        )
    };
    let cfg = grape("short", 3);
    let r = lzforge(dir.path(), &["grape", "--config", &cfg], &[]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    let g = results(&dir.path().join("short/result.csv"));
    assert_eq!(g["converged"], "false");
    assert!(dir.path().join("short/pulse.csv").exists());

    let replay = write_config(
        dir.path(),
        "replay.json",
        json!({
            "output": {"directory": "replay", "formats": ["csv"]},
            "simulate": {"pulse": {"kind": "pixelated", "file": "short/pulse.csv"}, "target": "identity"}
        }),
    );
    let r = lzforge(dir.path(), &["simulate", "--config", &replay], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let s = results(&dir.path().join("replay/result.csv"));
    assert!((number(&s, "gate_fidelity") - number(&g, "fidelity")).abs() < 1e-8);
}

#[test]
fn fit_qsl_recovers_synthetic_generators() {
    let dir = tempfile::tempdir().unwrap();
    let (t0, c, d0) = (4.0, 3.2, 0.005);
    let mut table = String::from("# synthetic\ndelta,t_qsl\n");
    for d in [0.02, 0.03, 0.045, 0.06, 0.08, 0.1, 0.13] {
        table.push_str(&format!("{d:.17e},{:.17e}\n", qsl_model(t0, c, d0, d)));
    }
    fs::write(dir.path().join("qsl.csv"), table).unwrap();
    let cfg = write_config(
        dir.path(),
        "fit.json",
        json!({"units": {"energy_unit": "GHz"}, "output": {"directory": "fit"}, "fit_qsl": {"data_file": "qsl.csv"}}),
    );
    let r = lzforge(dir.path(), &["fit-qsl", "--config", &cfg], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let f = results(&dir.path().join("fit/result.csv"));
    for (key, want) in [("t0", t0), ("c", c), ("delta0", d0)] {
        let got = number(&f, key);
        assert!(((got - want) / want).abs() < 1e-6, "{key}: {got} vs {want}");
    }
    let rows = data_rows(&dir.path().join("fit/fit.csv"));
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r[3].abs() < 1e-8));
    assert!(dir.path().join("fit/fit.svg").exists());
}

#[test]
fn exit_status_contract() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "ok.json", json!({"simulate": {"pulse": linear_sweep(5.0), "duration": 10.0}}));

    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let r = lzforge(dir.path(), &["simulate", "--config", &ok, "--out", "blocker/sub"], &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("blocker"), "{}", r.stderr);

    assert_eq!(lzforge(dir.path(), &["simulate", "--bogus"], &[]).code, 1);
    assert_eq!(lzforge(dir.path(), &["simulate"], &[]).code, 1);
    assert_eq!(lzforge(dir.path(), &["design", "--config", &ok], &[]).code, 1);
    assert_eq!(lzforge(dir.path(), &["--help"], &[]).code, 0);
    let r = lzforge(dir.path(), &["simulate", "--config", &ok], &[("LZFORGE_THREADS", "lots")]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("LZFORGE_THREADS"));

    let units = write_config(
        dir.path(),
        "units.json",
        json!({"units": {"energy_unit": "GHz", "time_unit": "us"}, "simulate": {"pulse": linear_sweep(5.0), "duration": 10.0}}),
    );
    let r = lzforge(dir.path(), &["simulate", "--config", &units], &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("time_unit"));

    let infeasible = write_config(
        dir.path(),
        "bad.json",
        json!({"design": {"v": 8.0, "omega": 50.0, "switching": 20.0}}),
    );
    assert_eq!(lzforge(dir.path(), &["design", "--config", &infeasible], &[]).code, 1);

    let degenerate = write_config(dir.path(), "fit.json", json!({"fit_qsl": {"data": [[0.1, 5.0], [0.1, 6.0], [0.1, 7.0]]}}));
    assert_eq!(lzforge(dir.path(), &["fit-qsl", "--config", &degenerate], &[]).code, 2);
}

#[test]
fn scans_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scan.json",
        json!({"scan": {"kind": "phase", "design": {"v": 8.0, "omega": 50.0, "switching": 2.8}, "points": 32, "span": 60.0}}),
    );
    let a = lzforge(dir.path(), &["scan", "--config", &cfg, "--out", "a", "--threads", "1"], &[]);
    let b = lzforge(dir.path(), &["scan", "--config", &cfg, "--out", "b"], &[("LZFORGE_THREADS", "3")]);
    assert_eq!((a.code, b.code), (0, 0), "{} {}", a.stderr, b.stderr);
    let read = |d: &str| {
        fs::read_to_string(dir.path().join(d).join("scan.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    };
    assert_eq!(read("a"), read("b"));
    let rows = data_rows(&dir.path().join("a/scan.csv"));
    assert_eq!(rows.len(), 32);
    assert!(rows[0][1] < 1e-4);
    assert!(read("a").lines().any(|l| l == "phi,survival_error"));

    let grid = write_config(
        dir.path(),
        "adiabatic.json",
        json!({
            "units": {"energy_unit": "GHz"},
            "scan": {"kind": "adiabatic", "delta": 0.04, "eps0_grid": [0.1, 0.5], "t_grid": [60.0, 120.0, 240.0]}
        }),
    );
    let r = lzforge(dir.path(), &["scan", "--config", &grid, "--out", "c"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = data_rows(&dir.path().join("c/scan.csv"));
    assert_eq!(rows.len(), 6);
    assert_eq!((rows[1][0], rows[1][1]), (0.1, 120.0));
    let svg = fs::read_to_string(dir.path().join("c/scan.svg")).unwrap();
    assert!(svg.contains("T [ns]"));
}

#[test]
fn optimize_nm_reaches_the_quoted_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "nm.json",
        json!({"output": {"directory": "nm", "formats": ["csv"]}, "optimize_nm": {"duration": 200.0}}),
    );
    let r = lzforge(dir.path(), &["optimize-nm", "--config", &cfg], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let n = results(&dir.path().join("nm/result.csv"));
    assert!(number(&n, "best_value") <= 1e-6, "{}", n["best_value"]);
    assert_eq!(n["converged"], "true");
    assert!(data_rows(&dir.path().join("nm/history.csv")).len() as f64 == number(&n, "iterations_used"));
}
