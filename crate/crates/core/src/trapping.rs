//! Charge-trapping kinetics with Coulombic deactivation of neighbouring sites and
//! the Curie-von Schweidler current decay it produces.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::params::TrapParams;
use crate::trace::{TimeSeriesTrace, TraceMeta, TraceRecord};
use crate::units::{EPS_VAC, Q_E};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrapState {
    /// Trapped density (1/m^3).
    pub n: f64,
    /// Injected charge per area (C/m^2).
    pub q_injected: f64,
    /// Time (s).
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvsExponents {
    pub beta: f64,
    pub alpha: f64,
    /// Characteristic injected charge (C/m^2).
    pub q_star: f64,
    /// Slope of (alpha/(1-alpha)) ln J_s against applied field (m/V).
    pub m_coeff: f64,
}

/// Rate-law variants for the trapped density.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateLaw {
    /// (n0 - n) sigma J v_th / (q v_d), saturating at n0.
    FirstOrder,
    /// n0 sigma J v_th / (q v_d) exp(-n h / V).
    #[default]
    Coulombic,
    /// Coulombic law with the available trap density growing by
    /// `per_charge` (1/m^3 per C/m^2) with injected charge.
    TrapGeneration { per_charge: f64 },
}

fn bare_rate(j: f64, p: &TrapParams) -> f64 {
    p.n0_max * p.sigma * j * p.v_th / (Q_E * p.v_d)
}

/// Trapping rate dn/dt (1/(m^3 s)) for an injected flux magnitude `j` (A/m^2).
pub fn trapping_rate(state: &TrapState, j: f64, p: &TrapParams) -> f64 {
    bare_rate(j, p) * (-state.n / p.density_scale()).exp()
}

impl RateLaw {
    pub fn rate(&self, state: &TrapState, j: f64, p: &TrapParams) -> f64 {
        match *self {
            RateLaw::FirstOrder => (p.n0_max - state.n) * p.sigma * j * p.v_th / (Q_E * p.v_d),
            RateLaw::Coulombic => trapping_rate(state, j, p),
            RateLaw::TrapGeneration { per_charge } => {
                let n0 = p.n0_max + per_charge * state.q_injected;
                n0 * p.sigma * j * p.v_th / (Q_E * p.v_d) * (-state.n / p.density_scale()).exp()
            }
        }
    }
}

/// Trapped density after injecting `q_injected` (C/m^2): (V/h) ln(Q/Q* + 1).
pub fn trapped_density(q_injected: f64, p: &TrapParams) -> f64 {
    p.density_scale() * (q_injected / p.q_star()).ln_1p()
}

/// Charge that must be injected to reach density `n`; inverse of [`trapped_density`].
pub fn injected_charge_for(n: f64, p: &TrapParams) -> f64 {
    p.q_star() * (n / p.density_scale()).exp_m1()
}

pub fn alpha_from_beta(beta: f64) -> f64 {
    beta / (1.0 + beta)
}

pub fn beta_from_alpha(alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(alpha / (1.0 - alpha))
}

/// beta = V q x / (h E0 eta) with eta = eps_r * eps_vac.
pub fn exponents_from_params(p: &TrapParams, eps_r: f64) -> Result<CvsExponents> {
    p.validate()?;
    if !(eps_r.is_finite() && eps_r > 0.0) {
        return Err(param("eps_r", "must be > 0"));
    }
    let beta = p.density_scale() * Q_E * p.x_centroid / (p.e0_scale * eps_r * EPS_VAC);
    let alpha = alpha_from_beta(beta);
    Ok(CvsExponents { beta, alpha, q_star: p.q_star(), m_coeff: alpha / p.e0_scale })
}

/// True while the trapped density stays in the dilute regime the simplified law assumes.
pub fn within_validity(n: f64, p: &TrapParams) -> bool {
    n < 0.1 * p.n0_max
}

const RTOL: f64 = 1e-8;
const MIN_STEP_FRACTION: f64 = 1e-14;

/// Adaptive RK4 with step doubling for an autonomous scalar ODE. Advances `y` from
/// `t0` to `t1`, reusing and updating the step guess `h`.
fn rk4_adaptive(
    f: &dyn Fn(f64) -> f64,
    y: &mut f64,
    t0: f64,
    t1: f64,
    h: &mut f64,
    atol: f64,
) -> Result<()> {
    let rk4 = |y: f64, h: f64| {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let mut t = t0;
    while t < t1 {
        let step = h.min(t1 - t);
        let full = rk4(*y, step);
        let half = rk4(rk4(*y, 0.5 * step), 0.5 * step);
        let err = (half - full).abs() / 15.0;
        let scale = atol + RTOL * half.abs();
        if err <= scale {
            t += step;
            *y = half + (half - full) / 15.0;
            let grow = if err == 0.0 { 4.0 } else { (0.9 * (scale / err).powf(0.2)).min(4.0) };
            if step == *h {
                *h *= grow;
            }
        } else {
            let shrink = if err.is_finite() { (0.9 * (scale / err).powf(0.2)).max(0.1) } else { 0.1 };
            *h = step * shrink;
            if *h < MIN_STEP_FRACTION * t1.max(f64::MIN_POSITIVE) {
                return Err(Error::StepUnderflow { t, last_state: *y });
            }
        }
    }
    Ok(())
}

/// Integrates the Coulombic rate law numerically under a constant flux `j` and
/// reports the state at each of the strictly increasing `times`.
pub fn integrate_constant_current(j: f64, p: &TrapParams, times: &[f64]) -> Result<Vec<TrapState>> {
    p.validate()?;
    if !(j.is_finite() && j >= 0.0) {
        return Err(param("j", "injected flux must be finite and >= 0"));
    }
    check_times(times)?;
    let scale = p.density_scale();
    let rate = bare_rate(j, p) / scale;
    let f = move |u: f64| rate * (-u).exp();
    let mut u = 0.0;
    let mut t = 0.0;
    let mut h = times[0].min(1.0 / rate.max(f64::MIN_POSITIVE)) * 1e-3;
    let mut out = Vec::with_capacity(times.len());
    for &tk in times {
        rk4_adaptive(&f, &mut u, t, tk, &mut h, 1e-14)?;
        t = tk;
        out.push(TrapState { n: u * scale, q_injected: j * tk, t: tk });
    }
    Ok(out)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(param("times", "no sample times"));
    }
    if !(times[0] > 0.0) || times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
        return Err(param("times", "sample times must be finite, positive and strictly increasing"));
    }
    Ok(())
}

/// Logarithmically spaced times from `t_first` to `t_last` inclusive.
pub fn log_times(t_first: f64, t_last: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t_last];
    }
    let (a, b) = (t_first.ln(), t_last.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Result of a constant-field decay simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantBiasRun {
    /// Records carry t (s), the applied field in `v` (V/m) and J in `i` (A/m^2).
    pub trace: TimeSeriesTrace,
    pub n: Vec<f64>,
    pub exponents: CvsExponents,
    /// Initial current density J0 exp(E_ap/E0) (A/m^2).
    pub j_initial: f64,
    /// Onset time Q*/((1+beta) J_initial) (s).
    pub t_onset: f64,
    /// Set when the trapped density left the dilute regime.
    pub validity_exceeded: bool,
}

/// Decay of J = J0 exp((E_ap - q n x / eta)/E0) as n fills by the Coulombic law,
/// from n(0) = 0 to `t_end`, sampled on `n_samples` log-spaced times spanning nine
/// decades below `t_end`.
pub fn simulate_constant_bias(
    e_ap: f64,
    p: &TrapParams,
    eps_r: f64,
    t_end: f64,
    n_samples: usize,
) -> Result<ConstantBiasRun> {
    if !e_ap.is_finite() {
        return Err(param("e_ap", "applied field must be finite"));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(param("t_end", "must be > 0"));
    }
    if n_samples < 2 {
        return Err(param("n_samples", "need at least two samples"));
    }
    let ex = exponents_from_params(p, eps_r)?;
    let scale = p.density_scale();
    let j_initial = p.j0_ref * (e_ap / p.e0_scale).exp();
    if !j_initial.is_finite() {
        return Err(Error::Domain(format!("J0 exp(E_ap/E0) overflows for E_ap = {e_ap:e}")));
    }
    let times = log_times(t_end * 1e-9, t_end, n_samples);
    // In u = n h / V: du/dt = (J_i / Q*) exp(-(1 + beta) u).
    let rate = j_initial / ex.q_star;
    let decay = 1.0 + ex.beta;
    let t_onset = if rate > 0.0 { 1.0 / (rate * decay) } else { f64::INFINITY };
    let f = move |u: f64| rate * (-decay * u).exp();
    let mut u = 0.0;
    let mut t = 0.0;
    let mut h = times[0].min(t_onset) * 1e-3;
    let mut trace = TimeSeriesTrace::new(TraceMeta {
        protocol: "constant_bias".into(),
        ..TraceMeta::default()
    });
    let mut n_out = Vec::with_capacity(n_samples);
    let mut validity_exceeded = false;
    for &tk in &times {
        if rate > 0.0 {
            rk4_adaptive(&f, &mut u, t, tk, &mut h, 1e-14)?;
        }
        t = tk;
        let n = u * scale;
        validity_exceeded |= !within_validity(n, p);
        trace.push(TraceRecord { t: tk, v: e_ap, i: j_initial * (-ex.beta * u).exp() })?;
        n_out.push(n);
    }
    Ok(ConstantBiasRun { trace, n: n_out, exponents: ex, j_initial, t_onset, validity_exceeded })
}

/// Current density at time `t` of the exact constant-field solution.
pub fn exact_constant_bias_current(j_initial: f64, beta: f64, t_onset: f64, t: f64) -> f64 {
    j_initial * (1.0 + t / t_onset).powf(-alpha_from_beta(beta))
}

/// One member of a constant-field family: applied field, fitted prefactor and exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub e_ap: f64,
    pub j_s: f64,
    pub alpha: f64,
}

/// Least-squares line through (E_ap, (alpha/(1-alpha)) ln J_s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsRelation {
    pub m_coeff: f64,
    pub n_est: f64,
    /// Residual norm of the line fit.
    pub residual: f64,
    /// Norm of the regressand.
    pub y_norm: f64,
    pub r_squared: f64,
}

pub fn j_s_relation_check(family: &[FamilyMember]) -> Result<JsRelation> {
    if family.len() < 3 {
        return Err(param("family", "need at least three members"));
    }
    let mut xs = Vec::with_capacity(family.len());
    let mut ys = Vec::with_capacity(family.len());
    for m in family {
        if !(m.j_s > 0.0) || !(0.0..1.0).contains(&m.alpha) || !m.e_ap.is_finite() {
            return Err(param("family", format!("member {m:?} needs J_s > 0 and 0 <= alpha < 1")));
        }
        xs.push(m.e_ap);
        ys.push(m.alpha / (1.0 - m.alpha) * m.j_s.ln());
    }
    let nf = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let spread = xs.iter().fold(0.0f64, |m, x| m.max((x - xm).abs()));
    if sxx <= (1e-12 * (spread + xm.abs())).powi(2) * nf || spread == 0.0 {
        return Err(Error::Fit("applied fields are degenerate; slope is undetermined".into()));
    }
    let m = sxy / sxx;
    let n = ym - m * xm;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - (m * x + n)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    Ok(JsRelation {
        m_coeff: m,
        n_est: n,
        residual: ss_res.sqrt(),
        y_norm: ys.iter().map(|y| y * y).sum::<f64>().sqrt(),
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
    })
}
