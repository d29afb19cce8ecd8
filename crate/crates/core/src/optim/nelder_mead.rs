use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OptimizationResult;
use crate::error::{Error, Result};

/// Simplex diameter, relative to the incumbent's magnitude, below which a run
/// is considered collapsed.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexConfig {
    /// Initial vertex displacement as a fraction of each coordinate
    /// (absolute when the coordinate is zero).
    pub initial_simplex_scale: f64,
    pub max_iterations: usize,
    pub target_value: f64,
    pub reflect: f64,
    pub expand: f64,
    pub contract: f64,
    pub shrink: f64,
    /// Fresh simplices built around the incumbent after a collapse.
    pub restarts: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        SimplexConfig {
            initial_simplex_scale: 0.05,
            max_iterations: 5000,
            target_value: 1e-6,
            reflect: 1.0,
            expand: 2.0,
            contract: 0.5,
            shrink: 0.5,
            restarts: 3,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        let coeffs = [
            ("initial_simplex_scale", self.initial_simplex_scale),
            ("reflect", self.reflect),
            ("expand", self.expand),
            ("contract", self.contract),
            ("shrink", self.shrink),
        ];
        for (name, c) in coeffs {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::validation(name, format!("must be positive, got {c}")));
            }
        }
        if !(self.expand > self.reflect) {
            return Err(Error::validation("expand", "must exceed the reflection coefficient"));
        }
        if !(self.contract < 1.0) || !(self.shrink < 1.0) {
            return Err(Error::validation("contract", "contraction and shrink coefficients must be below 1"));
        }
        Ok(())
    }
}

/// Minimises `objective` from `initial` with the downhill simplex method.
///
/// Stops at `target_value`, after `max_iterations` simplex steps, or once the
/// simplex has collapsed `restarts + 1` times. Non-finite objective values
/// count as `+inf`. `value_history` holds the best value after each step.
pub fn nelder_mead<F>(objective: F, initial: &[f64], config: &SimplexConfig) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let steps: Vec<f64> = initial
        .iter()
        .map(|&x| {
            if x == 0.0 {
                config.initial_simplex_scale
            } else {
                config.initial_simplex_scale * x.abs()
            }
        })
        .collect();
    nelder_mead_with_steps(objective, initial, &steps, config)
}

/// As [`nelder_mead`] with explicit absolute initial displacements.
pub fn nelder_mead_with_steps<F>(
    objective: F,
    initial: &[f64],
    steps: &[f64],
    config: &SimplexConfig,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let n = initial.len();
    if n == 0 {
        return Err(Error::domain("Nelder-Mead needs at least one parameter"));
    }
    if steps.len() != n || steps.iter().any(|s| !(s.abs() > 0.0) || !s.is_finite()) {
        return Err(Error::domain("initial simplex steps must be finite and non-zero, one per parameter"));
    }
    let f = |x: &[f64]| {
        let y = objective(x);
        if y.is_finite() {
            y
        } else {
            f64::INFINITY
        }
    };
    let f0 = objective(initial);
    if !f0.is_finite() {
        return Err(Error::Numeric(format!("objective is {f0} at the initial point")));
    }

    let mut best = (initial.to_vec(), f0);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut collapsed = false;
    let reached = |v: f64| v <= config.target_value;

    for _ in 0..=config.restarts {
        if reached(best.1) || iterations >= config.max_iterations {
            break;
        }
        let mut simplex = build_simplex(&best.0, best.1, steps, &f);
        collapsed = false;
        while iterations < config.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[0].1 < best.1 {
                best = simplex[0].clone();
            }
            if reached(best.1) {
                break;
            }
            if diameter(&simplex) <= SIMPLEX_TOLERANCE * norm_inf(&simplex[0].0).max(1.0) {
                collapsed = true;
                break;
            }
            step(&mut simplex, &f, config);
            iterations += 1;
            let lowest = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
            history.push(lowest.min(best.1));
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best.1 {
            best = simplex[0].clone();
        }
        if !collapsed {
            break;
        }
    }

    Ok(OptimizationResult {
        converged: reached(best.1) || collapsed,
        best_parameters: best.0,
        best_pulse: None,
        best_value: best.1,
        iterations_used: iterations,
        value_history: history,
    })
}

type Vertex = (Vec<f64>, f64);

fn build_simplex<F: Fn(&[f64]) -> f64 + Sync>(x0: &[f64], f0: f64, steps: &[f64], f: &F) -> Vec<Vertex> {
    let mut out = vec![(x0.to_vec(), f0)];
    let others: Vec<Vertex> = (0..x0.len())
        .into_par_iter()
        .map(|i| {
            let mut x = x0.to_vec();
            x[i] += steps[i];
            let y = f(&x);
            (x, y)
        })
        .collect();
    out.extend(others);
    out
}

/// One reflect/expand/contract/shrink move on a sorted simplex.
fn step<F: Fn(&[f64]) -> f64 + Sync>(simplex: &mut [Vertex], f: &F, c: &SimplexConfig) {
    let n = simplex.len() - 1;
    let mut centroid = vec![0.0; n];
    for v in &simplex[..n] {
        for (c, x) in centroid.iter_mut().zip(&v.0) {
            *c += x / n as f64;
        }
    }
    let along = |t: f64| -> Vec<f64> {
        centroid
            .iter()
            .zip(&simplex[n].0)
            .map(|(c, w)| c + t * (c - w))
            .collect()
    };
    let (f_best, f_second, f_worst) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);

    let xr = along(c.reflect);
    let fr = f(&xr);
    if fr < f_best {
        let xe = along(c.reflect * c.expand);
        let fe = f(&xe);
        simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        return;
    }
    if fr < f_second {
        simplex[n] = (xr, fr);
        return;
    }
    let (xc, fc) = if fr < f_worst {
        let x = along(c.reflect * c.contract);
        let y = f(&x);
        (x, y)
    } else {
        let x = along(-c.contract);
        let y = f(&x);
        (x, y)
    };
    if fc < fr.min(f_worst) {
        simplex[n] = (xc, fc);
        return;
    }
    let best = simplex[0].0.clone();
    let shrunk: Vec<Vertex> = simplex[1..]
        .par_iter()
        .map(|v| {
            let x: Vec<f64> = best.iter().zip(&v.0).map(|(b, x)| b + c.shrink * (x - b)).collect();
            let y = f(&x);
            (x, y)
        })
        .collect();
    simplex[1..].clone_from_slice(&shrunk);
}

fn diameter(simplex: &[Vertex]) -> f64 {
    let x0 = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|v| v.0.iter().zip(x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
