use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{log_grid, AdiabaticScanConfig};
use crate::dynamics::TwoLevelSystem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QslConfig {
    pub fidelity_threshold: f64,
    /// Fraction of `eps0` cells that must reach the threshold.
    pub coverage: f64,
    /// `eps0` grid as multiples of `delta`, log-spaced.
    pub eps0_min: f64,
    pub eps0_max: f64,
    pub eps0_points: usize,
    /// Bisection stops once `hi / lo <= 1 + resolution`.
    pub resolution: f64,
    /// Search bracket as multiples of the adiabatic estimate.
    pub bracket: (f64, f64),
    pub scan: AdiabaticScanConfig,
}

impl Default for QslConfig {
    fn default() -> Self {
        QslConfig {
            fidelity_threshold: 0.9999,
            coverage: 0.95,
            eps0_min: 2.0,
            eps0_max: 50.0,
            eps0_points: 20,
            resolution: 0.01,
            bracket: (0.25, 4.0),
            scan: AdiabaticScanConfig::default(),
        }
    }
}

impl QslConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fidelity_threshold > 0.0 && self.fidelity_threshold < 1.0) {
            return Err(Error::validation("fidelity_threshold", "must lie in (0, 1)"));
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(Error::validation("coverage", "must lie in (0, 1]"));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::validation("resolution", "must be positive"));
        }
        if !(self.bracket.0 > 0.0 && self.bracket.1 > self.bracket.0) {
            return Err(Error::validation("bracket", "needs 0 < lower < upper"));
        }
        if !(self.eps0_min > 0.0 && self.eps0_max >= self.eps0_min) || self.eps0_points == 0 {
            return Err(Error::validation("eps0_points", "eps0 grid is empty or non-positive"));
        }
        Ok(())
    }

    pub fn eps0_grid(&self, delta: f64) -> Vec<f64> {
        log_grid(self.eps0_min * delta, self.eps0_max * delta, self.eps0_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QslPoint {
    pub delta: f64,
    /// Shortest duration found to meet the coverage; `None` if even the top
    /// of the bracket fails.
    pub t_qsl: Option<f64>,
    /// Longest duration found to fail, or the bottom of the bracket.
    pub lower: f64,
    /// The bottom of the bracket already succeeded.
    pub below_bracket: bool,
    pub evaluations: usize,
}

impl QslPoint {
    pub fn resolved(&self) -> bool {
        self.t_qsl.is_some()
    }
}

/// Speed limit per gap: bisection in `ln T` for the shortest duration at
/// which GRAPE brings at least `coverage` of the erf-tan seeds to the
/// fidelity threshold against `sigma_x`.
pub fn estimate_qsl(deltas: &[f64], config: &QslConfig) -> Result<Vec<QslPoint>> {
    estimate_qsl_with(deltas, config, |delta, duration| {
        let system = TwoLevelSystem::new(delta)?;
        let grid = config.eps0_grid(delta);
        let passed = grid
            .par_iter()
            .map(|&eps0| {
                let seed = config.scan.seed(delta, eps0, duration)?;
                Ok(config.scan.optimized_fidelity(&system, &seed)? >= config.fidelity_threshold)
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(passed.iter().filter(|p| **p).count() as f64 / grid.len() as f64)
    })
}

/// [`estimate_qsl`] with the coverage at `(delta, T)` supplied by the caller.
pub fn estimate_qsl_with<F>(deltas: &[f64], config: &QslConfig, coverage_at: F) -> Result<Vec<QslPoint>>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    config.validate()?;
    deltas
        .iter()
        .map(|&delta| {
            if !(delta > 0.0) {
                return Err(Error::domain(format!("gap must be positive, got {delta}")));
            }
            let t_ad = config.scan.adiabatic_estimate(delta);
            let mut lo = config.bracket.0 * t_ad;
            let mut hi = config.bracket.1 * t_ad;
            let ok = |t: f64| coverage_at(delta, t).map(|c| c >= config.coverage);
            let mut evaluations = 2;
            if !ok(hi)? {
                return Ok(QslPoint {
                    delta,
                    t_qsl: None,
                    lower: hi,
                    below_bracket: false,
                    evaluations: 1,
                });
            }
            if ok(lo)? {
                return Ok(QslPoint {
                    delta,
                    t_qsl: Some(lo),
                    lower: lo,
                    below_bracket: true,
                    evaluations,
                });
            }
            while hi / lo > 1.0 + config.resolution {
                let mid = (lo * hi).sqrt();
                evaluations += 1;
                if ok(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(QslPoint {
                delta,
                t_qsl: Some(hi),
                lower: lo,
                below_bracket: false,
                evaluations,
            })
        })
        .collect()
}

/// `T_QSL(delta) = t0 + c / (delta + delta0)` fitted by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QslFit {
    pub t0: f64,
    pub c: f64,
    pub delta0: f64,
    pub t0_fixed: bool,
    /// `data - model` per point.
    pub residuals: Vec<f64>,
    pub data: Vec<(f64, f64)>,
}

impl QslFit {
    pub fn model(&self, delta: f64) -> f64 {
        qsl_model(self.t0, self.c, self.delta0, delta)
    }

    pub fn rms(&self) -> f64 {
        (self.residuals.iter().map(|r| r * r).sum::<f64>() / self.residuals.len() as f64).sqrt()
    }
}

pub fn qsl_model(t0: f64, c: f64, delta0: f64, delta: f64) -> f64 {
    t0 + c / (delta + delta0)
}

/// Levenberg-Marquardt over `(t0, c, delta0)`, or `(c, delta0)` with `t0`
/// fixed, started from the best `delta0` on a coarse grid with `t0` and `c`
/// solved linearly.
pub fn fit_qsl(data: &[(f64, f64)], fix_t0: Option<f64>) -> Result<QslFit> {
    let need = if fix_t0.is_some() { 2 } else { 3 };
    if data.len() < need {
        return Err(Error::Fit(format!("need at least {need} points, got {}", data.len())));
    }
    if data.iter().any(|(d, t)| !d.is_finite() || !t.is_finite()) {
        return Err(Error::Fit("data must be finite".into()));
    }
    let d_min = data.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let d_max = data.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(d_max > d_min) {
        return Err(Error::Fit("all gaps are equal; the model is not identifiable".into()));
    }

    let feasible = |delta0: f64| delta0 > -d_min;
    let residuals = |p: &[f64; 3]| -> Vec<f64> { data.iter().map(|&(d, t)| t - qsl_model(p[0], p[1], p[2], d)).collect() };
    let cost = |p: &[f64; 3]| residuals(p).iter().map(|r| r * r).sum::<f64>();

    // starting point: scan delta0, solve (t0, c) or c linearly
    let span = d_max - d_min;
    let mut start: Option<([f64; 3], f64)> = None;
    for k in 0..=400 {
        let delta0 = -d_min + span * (1e-4 * 10f64.powf(k as f64 / 100.0));
        if let Some(p) = linear_part(data, delta0, fix_t0) {
            let c = cost(&p);
            if start.as_ref().is_none_or(|(_, best)| c < *best) {
                start = Some((p, c));
            }
        }
    }
    let (mut p, mut current) = start.ok_or_else(|| Error::Fit("no feasible starting point".into()))?;
    let free: Vec<usize> = if fix_t0.is_some() { vec![1, 2] } else { vec![0, 1, 2] };

    let mut lambda = 1e-3;
    for _ in 0..500 {
        let r = residuals(&p);
        // Jacobian of the model (residual = data - model)
        let jac: Vec<[f64; 3]> = data
            .iter()
            .map(|&(d, _)| {
                let x = 1.0 / (d + p[2]);
                [1.0, x, -p[1] * x * x]
            })
            .collect();
        let k = free.len();
        let mut a = vec![vec![0.0; k]; k];
        let mut g = vec![0.0; k];
        for (row, ri) in jac.iter().zip(&r) {
            for (i, &fi) in free.iter().enumerate() {
                g[i] += row[fi] * ri;
                for (j, &fj) in free.iter().enumerate() {
                    a[i][j] += row[fi] * row[fj];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for i in 0..k {
                damped[i][i] += lambda * a[i][i].max(1e-300);
            }
            let Some(step) = solve(damped, g.clone()) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p;
            for (i, &fi) in free.iter().enumerate() {
                trial[fi] += step[i];
            }
            let c = if feasible(trial[2]) { cost(&trial) } else { f64::INFINITY };
            if c < current {
                let rel = (current - c) / current.max(f64::MIN_POSITIVE);
                p = trial;
                current = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || current == 0.0 {
            break;
        }
    }
    if !p.iter().all(|x| x.is_finite()) {
        return Err(Error::Fit("fit diverged".into()));
    }
    Ok(QslFit {
        t0: p[0],
        c: p[1],
        delta0: p[2],
        t0_fixed: fix_t0.is_some(),
        residuals: residuals(&p),
        data: data.to_vec(),
    })
}

/// Least-squares `(t0, c)` for a fixed `delta0`, or `c` alone when `t0` is fixed.
fn linear_part(data: &[(f64, f64)], delta0: f64, fix_t0: Option<f64>) -> Option<[f64; 3]> {
    let xs: Vec<f64> = data.iter().map(|&(d, _)| 1.0 / (d + delta0)).collect();
    if xs.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return None;
    }
    match fix_t0 {
        Some(t0) => {
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(data).map(|(x, &(_, t))| x * (t - t0)).sum();
            Some([t0, sxy / sxx, delta0])
        }
        None => {
            let n = xs.len() as f64;
            let (sx, sy) = (xs.iter().sum::<f64>(), data.iter().map(|p| p.1).sum::<f64>());
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(data).map(|(x, &(_, t))| x * t).sum();
            let det = n * sxx - sx * sx;
            if !(det.abs() > 0.0) {
                return None;
            }
            let c = (n * sxy - sx * sy) / det;
            Some([(sy - c * sx) / n, c, delta0])
        }
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > 0.0) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (i, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[col + 1 + i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic(t0: f64, c: f64, d0: f64, deltas: &[f64]) -> Vec<(f64, f64)> {
        deltas.iter().map(|&d| (d, qsl_model(t0, c, d0, d))).collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let deltas = log_grid(0.01, 0.5, 8);
        let fit = fit_qsl(&synthetic(1.0, 5.0, 0.02, &deltas), None).unwrap();
        assert!(rel(fit.t0, 1.0) < 1e-6 && rel(fit.c, 5.0) < 1e-6 && rel(fit.delta0, 0.02) < 1e-6, "{fit:?}");
        assert!(fit.rms() < 1e-9);
        assert!(!fit.t0_fixed);

        let fixed = fit_qsl(&synthetic(1.0, 5.0, 0.02, &deltas), Some(1.0)).unwrap();
        assert!(rel(fixed.c, 5.0) < 1e-6 && rel(fixed.delta0, 0.02) < 1e-6);
        assert_eq!(fixed.t0, 1.0);
    }

    #[test]
    fn two_points_with_fixed_offset_interpolate() {
        let data = [(0.03, 40.0), (0.09, 17.0)];
        let fit = fit_qsl(&data, Some(3.0)).unwrap();
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9), "{fit:?}");
        assert!(fit_qsl(&data, None).is_err());
    }

    #[test]
    fn degenerate_data_is_rejected() {
        let data = [(0.04, 80.0), (0.04, 81.0), (0.04, 79.0)];
        assert!(matches!(fit_qsl(&data, None), Err(Error::Fit(_))));
        assert!(matches!(fit_qsl(&[(0.1, f64::NAN), (0.2, 1.0), (0.3, 1.0)], None), Err(Error::Fit(_))));
    }

    #[test]
    fn noisy_recovery_median_within_ten_percent() {
        let deltas = log_grid(0.01, 0.5, 8);
        let clean = synthetic(1.0, 5.0, 0.02, &deltas);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut cs = Vec::new();
        let mut d0s = Vec::new();
        for _ in 0..100 {
            let noisy: Vec<(f64, f64)> = clean
                .iter()
                .map(|&(d, t)| (d, t * (1.0 + 0.01 * (rng.gen::<f64>() * 2.0 - 1.0) * 3f64.sqrt())))
                .collect();
            let f = fit_qsl(&noisy, None).unwrap();
            cs.push(f.c);
            d0s.push(f.delta0);
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(f64::total_cmp);
            0.5 * (v[49] + v[50])
        };
        assert!(rel(median(&mut cs), 5.0) < 0.1);
        assert!(rel(median(&mut d0s), 0.02) < 0.1);
    }

    #[test]
    fn planted_threshold_is_recovered() {
        let (t0, c, d0) = (12.0, 3.5, 0.01);
        let cfg = QslConfig::default();
        let deltas = [0.02, 0.04, 0.08, 0.16, 0.32];
        let pts = estimate_qsl_with(&deltas, &cfg, |d, t| Ok(if t >= qsl_model(t0, c, d0, d) { 1.0 } else { 0.0 })).unwrap();
        for p in pts {
            let truth = qsl_model(t0, c, d0, p.delta);
            let got = p.t_qsl.unwrap();
            assert!(got >= truth && got <= truth * (1.0 + cfg.resolution), "{p:?} vs {truth}");
            assert!(p.lower < truth);
        }
    }

    #[test]
    fn unreachable_threshold_is_flagged() {
        let pts = estimate_qsl_with(&[0.05], &QslConfig::default(), |_, _| Ok(0.5)).unwrap();
        assert!(!pts[0].resolved());
        let pts = estimate_qsl_with(&[0.05], &QslConfig::default(), |_, _| Ok(1.0)).unwrap();
        assert!(pts[0].below_bracket);
    }
}
