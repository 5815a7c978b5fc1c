//! Levenberg-Marquardt least squares and the retention power-law fit
//! |I| = I0 (t - t0)^-alpha carried out on log |I|.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::trace::TimeSeriesTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step changes the cost by less than this fraction.
    pub cost_tol: f64,
    /// Stop when the largest gradient component falls below this.
    pub gradient_tol: f64,
    /// Central-difference step relative to max(|p|, scale).
    pub relative_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 200, cost_tol: 1e-12, gradient_tol: 1e-12, relative_step: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmStatus {
    CostConverged,
    GradientConverged,
    MaxIterations,
    /// No downhill step could be found even at the largest damping.
    DampingExhausted,
}

impl LmStatus {
    pub fn converged(self) -> bool {
        matches!(self, LmStatus::CostConverged | LmStatus::GradientConverged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// s^2 (J^T J)^-1 with s^2 the residual variance.
    pub covariance: DMatrix<f64>,
    pub stderr: Vec<f64>,
    /// Half the sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub status: LmStatus,
    /// Number of trial points moved back into the feasible set.
    pub projections: usize,
}

/// Problem description for [`lm_fit`].
pub struct LmProblem<'a> {
    /// Residual vector of length `n_data` at the given parameters.
    pub residuals: &'a dyn Fn(&[f64]) -> Vec<f64>,
    pub n_data: usize,
    /// Typical magnitude of each parameter, used for the difference step when the
    /// parameter itself is near zero. Empty means 1 for every parameter.
    pub scales: Vec<f64>,
    /// Moves a trial point back into the feasible set; returns true if it did.
    pub project: Option<&'a dyn Fn(&mut [f64]) -> bool>,
}

const MAX_DAMPING: f64 = 1e16;

fn jacobian(problem: &LmProblem, p: &[f64], opts: &LmOptions) -> DMatrix<f64> {
    let k = p.len();
    let mut jac = DMatrix::zeros(problem.n_data, k);
    let mut q = p.to_vec();
    for j in 0..k {
        let scale = problem.scales.get(j).copied().unwrap_or(1.0);
        let h = opts.relative_step * p[j].abs().max(scale);
        q[j] = p[j] + h;
        let up = (problem.residuals)(&q);
        q[j] = p[j] - h;
        let down = (problem.residuals)(&q);
        q[j] = p[j];
        let finite = |r: &[f64]| r.iter().all(|x| x.is_finite());
        // Fall back to a one-sided difference next to a feasibility boundary.
        let (a, b, span) = match (finite(&up), finite(&down)) {
            (true, true) => (up, down, 2.0 * h),
            (true, false) => (up, (problem.residuals)(p), h),
            (false, true) => ((problem.residuals)(p), down, h),
            (false, false) => (vec![f64::NAN; problem.n_data], vec![0.0; problem.n_data], 1.0),
        };
        for i in 0..problem.n_data {
            jac[(i, j)] = (a[i] - b[i]) / span;
        }
    }
    jac
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Damped Gauss-Newton (Marquardt scaling) on a central-difference Jacobian.
pub fn lm_fit(problem: &LmProblem, init: &[f64], opts: &LmOptions) -> Result<LmResult> {
    let k = init.len();
    if k == 0 {
        return Err(param("init", "no parameters to fit"));
    }
    if problem.n_data <= k {
        return Err(param(
            "data",
            format!("{} points cannot determine {k} parameters", problem.n_data),
        ));
    }
    if init.iter().any(|x| !x.is_finite()) {
        return Err(param("init", "initial parameters must be finite"));
    }
    let mut p = init.to_vec();
    let mut projections = 0;
    if let Some(project) = problem.project {
        projections += project(&mut p) as usize;
    }
    let mut r = (problem.residuals)(&p);
    if r.len() != problem.n_data || r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit("residuals at the initial point are not finite".into()));
    }
    let mut cost = half_sq(&r);
    let mut lambda: Option<f64> = None;
    let mut status = LmStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(problem, &p, opts);
        if jac.iter().any(|x| !x.is_finite()) {
            return Err(Error::Fit(format!("Jacobian is not finite at {p:?}")));
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &rv;
        if grad.amax() < opts.gradient_tol {
            status = LmStatus::GradientConverged;
            break;
        }
        let diag: Vec<f64> = (0..k).map(|j| if jtj[(j, j)] > 0.0 { jtj[(j, j)] } else { 1.0 }).collect();
        let mut lam = lambda.unwrap_or_else(|| 1e-3 * diag.iter().cloned().fold(0.0, f64::max));
        let mut accepted = None;
        while lam <= MAX_DAMPING * diag.iter().cloned().fold(1.0, f64::max) {
            let mut a = jtj.clone();
            for j in 0..k {
                a[(j, j)] += lam * diag[j];
            }
            if let Some(chol) = a.cholesky() {
                let delta = chol.solve(&(-&grad));
                let mut trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
                let mut projected = false;
                if let Some(project) = problem.project {
                    projected = project(&mut trial);
                }
                let rt = (problem.residuals)(&trial);
                if rt.iter().all(|x| x.is_finite()) {
                    let ct = half_sq(&rt);
                    if ct <= cost {
                        projections += projected as usize;
                        accepted = Some((trial, rt, ct));
                        break;
                    }
                }
            }
            lam *= 10.0;
        }
        match accepted {
            Some((trial, rt, ct)) => {
                let change = if cost > 0.0 { (cost - ct) / cost } else { 0.0 };
                p = trial;
                r = rt;
                cost = ct;
                lambda = Some((lam / 10.0).max(f64::MIN_POSITIVE));
                if change < opts.cost_tol {
                    status = LmStatus::CostConverged;
                    break;
                }
            }
            None => {
                status = LmStatus::DampingExhausted;
                break;
            }
        }
    }

    let jac = jacobian(problem, &p, opts);
    let dof = (problem.n_data - k) as f64;
    let s2 = 2.0 * cost / dof;
    let jtj = jac.transpose() * &jac;
    if jtj.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit("Jacobian is not finite at the solution".into()));
    }
    let inv = jtj.clone().try_inverse().filter(|m| m.iter().all(|x| x.is_finite()));
    let inv = match inv {
        Some(m) => m,
        None => jtj.pseudo_inverse(1e-14).map_err(|e| Error::Fit(e.to_string()))?,
    };
    let covariance = inv * s2;
    let stderr = (0..k).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    Ok(LmResult { params: p, covariance, stderr, cost, iterations, status, projections })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Prefactor (A).
    pub i0: f64,
    /// Time origin (s).
    pub t0: f64,
    pub alpha: f64,
    pub stderr_alpha: f64,
    /// Adjusted coefficient of determination of log |I|.
    pub r2_adj: f64,
    pub iterations: usize,
    pub status: LmStatus,
    /// Diagnostics that do not invalidate the fit.
    pub notes: Vec<String>,
}

pub const MIN_POWER_LAW_SAMPLES: usize = 10;

/// Fits |I| = I0 (t - t0)^-alpha to a trace in log space with uniform weights.
pub fn fit_power_law(trace: &TimeSeriesTrace) -> Result<PowerLawFit> {
    let t = trace.times();
    let i = trace.currents();
    if t.len() < MIN_POWER_LAW_SAMPLES {
        return Err(param(
            "trace",
            format!("need at least {MIN_POWER_LAW_SAMPLES} samples, got {}", t.len()),
        ));
    }
    if let Some(k) = i.iter().position(|x| *x == 0.0) {
        return Err(param("trace", format!("sample {k} has zero current")));
    }
    let y: Vec<f64> = i.iter().map(|x| x.abs().ln()).collect();
    let (t_min, t_max) = (t[0], t[t.len() - 1]);
    let span = t_max - t_min;
    let gap = 1e-9 * span;

    let t0_init = if t_min > 0.0 { 0.0 } else { t_min - 1e-3 * span };
    let lt: Vec<f64> = t.iter().map(|x| (x - t0_init).ln()).collect();
    let tail: Vec<usize> = (0..t.len()).filter(|&k| t[k] - t0_init >= (t_max - t0_init) / 10.0).collect();
    let tail = if tail.len() >= 2 { tail } else { vec![t.len() - 2, t.len() - 1] };
    let alpha_init = -slope(&tail.iter().map(|&k| lt[k]).collect::<Vec<_>>(), &tail.iter().map(|&k| y[k]).collect::<Vec<_>>());
    let alpha_init = if alpha_init.is_finite() { alpha_init } else { 0.0 };
    let ln_i0_init = y[0] + alpha_init * lt[0];

    let residuals = |p: &[f64]| -> Vec<f64> {
        t.iter()
            .zip(&y)
            .map(|(tk, yk)| p[0] - p[2] * (tk - p[1]).ln() - yk)
            .collect()
    };
    let project = |p: &mut [f64]| -> bool {
        if p[1] > t_min - gap {
            p[1] = t_min - gap;
            true
        } else {
            false
        }
    };
    let problem = LmProblem {
        residuals: &residuals,
        n_data: t.len(),
        scales: vec![1.0, t_min.abs().max(span * 1e-6), 1.0],
        project: Some(&project),
    };
    let res = lm_fit(&problem, &[ln_i0_init, t0_init, alpha_init], &LmOptions::default())?;
    let (ln_i0, t0, alpha) = (res.params[0], res.params[1], res.params[2]);

    let m = t.len() as f64;
    let mean = y.iter().sum::<f64>() / m;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res = 2.0 * res.cost;
    // A spread at rounding level means the trace is flat; R^2 is then reported as 0.
    let flat = ss_tot <= m * (16.0 * f64::EPSILON * mean.abs().max(1.0)).powi(2);
    let ss_tot = if flat { 0.0 } else { ss_tot };
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    let r2_adj = if ss_tot > 0.0 { 1.0 - (1.0 - r2) * (m - 1.0) / (m - 3.0) } else { 0.0 };

    let mut notes = Vec::new();
    if res.projections > 0 {
        notes.push(format!("t0 projected below the first sample {} time(s)", res.projections));
    }
    if !res.status.converged() {
        notes.push(format!("fit stopped without convergence: {:?}", res.status));
    }
    if !(0.0..1.0).contains(&alpha) {
        notes.push(format!("alpha = {alpha:.4} lies outside the (0, 1) range of the trapping model"));
    }
    Ok(PowerLawFit {
        i0: ln_i0.exp() * i[0].signum(),
        t0,
        alpha,
        stderr_alpha: res.stderr[2],
        r2_adj,
        iterations: res.iterations,
        status: res.status,
        notes,
    })
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// One line of the fit report JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub radius_m: Option<f64>,
    #[serde(rename = "read_v_V")]
    pub read_v: f64,
    pub alpha: f64,
    pub stderr: f64,
    pub i0: f64,
    pub t0: f64,
    pub r2_adj: f64,
}

impl FitReport {
    pub fn new(radius_m: Option<f64>, read_v: f64, fit: &PowerLawFit) -> Self {
        Self {
            radius_m,
            read_v,
            alpha: fit.alpha,
            stderr: fit.stderr_alpha,
            i0: fit.i0,
            t0: fit.t0,
            r2_adj: fit.r2_adj,
        }
    }
}

/// Exponent magnitudes of one device at the positive and negative read voltages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub radius: f64,
    pub alpha_positive: Option<f64>,
    pub alpha_negative: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// |alpha| strictly increases as the radius decreases.
    Holds,
    Violated,
    /// Fewer than two radii carry a value.
    NotEvaluable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// Rows sorted by decreasing radius, with |alpha|.
    pub rows: Vec<ScalingEntry>,
    pub trend_positive: Trend,
    pub trend_negative: Trend,
    pub warnings: Vec<String>,
}

fn trend(values: &[Option<f64>]) -> Trend {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() < 2 {
        Trend::NotEvaluable
    } else if present.windows(2).all(|w| w[1] > w[0]) {
        Trend::Holds
    } else {
        Trend::Violated
    }
}

/// Tabulates |alpha| per radius and checks that it grows as devices shrink.
pub fn scaling_table(entries: &[ScalingEntry]) -> ScalingReport {
    let mut rows: Vec<ScalingEntry> = entries
        .iter()
        .map(|e| ScalingEntry {
            radius: e.radius,
            alpha_positive: e.alpha_positive.map(f64::abs),
            alpha_negative: e.alpha_negative.map(f64::abs),
        })
        .collect();
    rows.sort_by(|a, b| b.radius.total_cmp(&a.radius));
    let mut warnings = Vec::new();
    if rows.len() < 2 {
        warnings.push("fewer than two radii: trend not evaluable".to_string());
    }
    for r in &rows {
        if r.alpha_positive.is_none() {
            warnings.push(format!("radius {:e} m: positive-read branch missing", r.radius));
        }
        if r.alpha_negative.is_none() {
            warnings.push(format!("radius {:e} m: negative-read branch missing", r.radius));
        }
    }
    let pos: Vec<Option<f64>> = rows.iter().map(|r| r.alpha_positive).collect();
    let neg: Vec<Option<f64>> = rows.iter().map(|r| r.alpha_negative).collect();
    ScalingReport { trend_positive: trend(&pos), trend_negative: trend(&neg), rows, warnings }
}
