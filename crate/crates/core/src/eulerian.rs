//! Method-of-lines pseudo-spectral integrator for
//! `u_t + (u + Gamma) u_x + lambda u = Q(u)` with blow-up monitors.

use serde::{Deserialize, Serialize};

use crate::besov::{DyadicPartition, LittlewoodPaley};
use crate::error::{Error, Result};
use crate::model::{Field, ModelParams};
use crate::norms::odd_slope_moment;
use crate::spectral::Spectral;
use crate::stepper::{integrate_adaptive, integrate_fixed, OdeSystem, StepControl, Termination, Verdict};

fn default_threshold() -> f64 {
    1e6
}
fn default_resolution_tol() -> Option<f64> {
    Some(1e-8)
}
fn default_delta_break() -> f64 {
    1e-6
}
fn default_moment_n() -> u32 {
    1
}
fn default_true() -> bool {
    true
}
fn default_rtol() -> f64 {
    1e-8
}
fn default_atol() -> f64 {
    1e-12
}
fn default_dt_init() -> f64 {
    1e-3
}
fn default_dt_min() -> f64 {
    1e-12
}

/// Adaptive stepping and termination settings shared by both solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeStepperConfig {
    pub t_end: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_dt_init")]
    pub dt_init: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    /// Terminate with `BlowupDetected` once `|min_x u_x|` exceeds this.
    #[serde(default = "default_threshold")]
    pub blowup_slope_threshold: f64,
    /// Spectral tail fraction that triggers `ResolutionLost` (Eulerian only).
    #[serde(default = "default_resolution_tol")]
    pub resolution_tol: Option<f64>,
    /// Breaking guard on `y_xi` (Lagrangian only).
    #[serde(default = "default_delta_break")]
    pub delta_break: f64,
    /// Order `n` of the tracked moment `int u_x^{2n+1} dx`.
    #[serde(default = "default_moment_n")]
    pub moment_n: u32,
    /// Track `||u_x||_{B^0_{inf,inf}}` (one Littlewood-Paley pass per step).
    #[serde(default = "default_true")]
    pub monitor_b0: bool,
}

impl TimeStepperConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            rtol: default_rtol(),
            atol: default_atol(),
            dt_init: default_dt_init(),
            dt_min: default_dt_min(),
            blowup_slope_threshold: default_threshold(),
            resolution_tol: default_resolution_tol(),
            delta_break: default_delta_break(),
            moment_n: default_moment_n(),
            monitor_b0: true,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_threshold(mut self, slope: f64) -> Self {
        self.blowup_slope_threshold = slope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be > 0, got {}", self.t_end));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be > 0".into());
        }
        if !(self.dt_min > 0.0) {
            return bad(format!("dt_min must be > 0, got {}", self.dt_min));
        }
        if !(self.dt_min <= self.dt_init) {
            return bad(format!("dt_min ({}) must not exceed dt_init ({})", self.dt_min, self.dt_init));
        }
        if !(self.blowup_slope_threshold > 0.0) {
            return bad("blowup_slope_threshold must be > 0".into());
        }
        if !(self.delta_break > 0.0 && self.delta_break < 1.0) {
            return bad("delta_break must lie in (0, 1)".into());
        }
        if self.moment_n < 1 {
            return bad("moment_n must be >= 1".into());
        }
        Ok(())
    }

    pub(crate) fn step_control(&self, checkpoints: &[f64]) -> StepControl {
        let mut cps: Vec<f64> = checkpoints.iter().copied().filter(|&t| t > 0.0 && t < self.t_end).collect();
        cps.sort_by(f64::total_cmp);
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            dt_init: self.dt_init,
            dt_min: self.dt_min,
            dt_max: self.t_end,
            checkpoints: cps,
        }
    }
}

/// Monitored quantities at every accepted step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub h1_norms: Vec<f64>,
    /// `min_x u_x`.
    pub min_slope: Vec<f64>,
    /// `||u_x||_{L^inf}`.
    pub max_abs_slope: Vec<f64>,
    /// Running `int_0^t ||u_x||_{L^inf} dt`.
    pub integral_linf: Vec<f64>,
    /// `||u_x||_{B^0_{inf,inf}}` (empty when not monitored).
    pub b0_slope: Vec<f64>,
    /// Running `int_0^t ||u_x||_{B^0_{inf,inf}} dt`.
    pub integral_b0: Vec<f64>,
    pub moment_n: u32,
    /// `int u_x^{2n+1} dx`.
    pub moments_f_n: Vec<f64>,
    pub terminated: Option<Termination>,
}

impl TrajectoryRecord {
    pub fn new(moment_n: u32) -> Self {
        Self {
            moment_n,
            ..Default::default()
        }
    }

    pub fn push(&mut self, t: f64, h1: f64, min_slope: f64, max_abs: f64, b0: Option<f64>, moment: f64) {
        let (il, ib) = match self.times.last() {
            None => (0.0, 0.0),
            Some(&t0) => {
                let dt = t - t0;
                let il = self.integral_linf.last().unwrap() + 0.5 * dt * (max_abs + self.max_abs_slope.last().unwrap());
                let ib = match (b0, self.b0_slope.last()) {
                    (Some(b), Some(prev)) => self.integral_b0.last().unwrap() + 0.5 * dt * (b + prev),
                    _ => 0.0,
                };
                (il, ib)
            }
        };
        self.times.push(t);
        self.h1_norms.push(h1);
        self.min_slope.push(min_slope);
        self.max_abs_slope.push(max_abs);
        self.integral_linf.push(il);
        if let Some(b) = b0 {
            self.b0_slope.push(b);
            self.integral_b0.push(ib);
        }
        self.moments_f_n.push(moment);
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Linear interpolation of a recorded series at time `t`.
    pub fn interpolate(&self, series: &[f64], t: f64) -> Option<f64> {
        if series.len() != self.times.len() || self.times.is_empty() {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return Some(series[0]);
        }
        if i == self.times.len() {
            return Some(*series.last().unwrap());
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        Some(series[i - 1] * (1.0 - w) + series[i] * w)
    }
}

/// Semi-discrete system for the spectral solver.
pub struct EulerianSystem {
    spectral: Spectral,
    params: ModelParams,
}

impl EulerianSystem {
    pub fn new(grid: &crate::model::PeriodicGrid, params: ModelParams) -> Self {
        Self {
            spectral: Spectral::new(grid),
            params,
        }
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `-(u + Gamma) u_x - lambda u + Q(u)` with dealiased products.
    pub fn evaluate(&self, u: &[f64], out: &mut [f64]) {
        let sp = &self.spectral;
        let p = &self.params;
        let uh = sp.forward(u);
        let (ud, uxd) = sp.dealiased_u_ux(&uh);
        let flux = sp.flux_coeffs(&ud, &uxd, p);
        let adv: Vec<f64> = ud.iter().zip(&uxd).map(|(&v, &vx)| (v + p.big_gamma) * vx).collect();
        let advh = sp.forward(&adv);
        let rhs: Vec<_> = (0..uh.len())
            .map(|m| {
                let nonlinear = if sp.retained(m) {
                    -advh[m] + sp.dx_helmholtz_symbol(m) * flux[m]
                } else {
                    num_complex::Complex64::new(0.0, 0.0)
                };
                nonlinear - uh[m] * p.lambda_d
            })
            .collect();
        out.copy_from_slice(&sp.inverse(rhs));
    }
}

impl OdeSystem for EulerianSystem {
    fn dim(&self) -> usize {
        self.spectral.grid().n_points()
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        self.evaluate(y, dydt);
        if dydt.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

pub fn eulerian_rhs(u: &Field, params: &ModelParams) -> Field {
    let sys = EulerianSystem::new(&u.grid, *params);
    let mut out = vec![0.0; u.values.len()];
    sys.evaluate(&u.values, &mut out);
    Field {
        grid: u.grid,
        values: out,
        time: u.time,
    }
}

/// Per-step diagnostics of a spectral state.
pub(crate) struct Monitors {
    pub h1: f64,
    pub min_slope: f64,
    pub max_abs_slope: f64,
    pub b0: Option<f64>,
    pub moment: f64,
    pub tail_fraction: f64,
}

pub(crate) fn spectral_monitors(sp: &Spectral, lp: Option<&LittlewoodPaley>, u: &[f64], moment_n: u32) -> Monitors {
    let grid = sp.grid();
    let n = grid.n_points();
    let uh = sp.forward(u);
    let mut uxh = uh.clone();
    sp.differentiate_coeffs(&mut uxh, 1);
    let scale = grid.length() / (n as f64 * n as f64);
    let mut h1sq = 0.0;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (m, c) in uh.iter().enumerate() {
        let k = sp.wavenumbers()[m];
        let e = c.norm_sqr();
        h1sq += (1.0 + k * k) * e;
        total += e;
        let sm = if m <= n / 2 { m } else { n - m };
        if 4 * sm >= n && 3 * sm < n {
            tail += e;
        }
    }
    let b0 = lp.map(|lp| lp.b0_inf_from_coeffs(&uxh));
    let ux = sp.inverse(uxh);
    let min_slope = ux.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs_slope = ux.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Monitors {
        h1: (scale * h1sq).sqrt(),
        min_slope,
        max_abs_slope,
        b0,
        moment: odd_slope_moment(&ux, moment_n, grid.spacing()),
        tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
    }
}

/// Integrate to `cfg.t_end` or until a termination criterion fires.
pub fn integrate(u0: &Field, params: &ModelParams, cfg: &TimeStepperConfig) -> Result<(Field, TrajectoryRecord)> {
    integrate_with(u0, params, cfg, &[], |_, _| {})
}

/// As [`integrate`], additionally landing exactly on `snapshot_times` and
/// handing every accepted state to `observer` (the flag marks snapshot times).
pub fn integrate_with<F>(
    u0: &Field,
    params: &ModelParams,
    cfg: &TimeStepperConfig,
    snapshot_times: &[f64],
    mut observer: F,
) -> Result<(Field, TrajectoryRecord)>
where
    F: FnMut(&Field, bool),
{
    params.validate()?;
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(Error::NonFinite);
    }
    let grid = u0.grid;
    let sys = EulerianSystem::new(&grid, *params);
    let lp = cfg.monitor_b0.then(|| LittlewoodPaley::new(&grid, DyadicPartition::default()));
    let mut record = TrajectoryRecord::new(cfg.moment_n);
    let ctrl = cfg.step_control(snapshot_times);
    let t0 = u0.time;

    let outcome = integrate_adaptive(&sys, t0, u0.values.clone(), t0 + cfg.t_end, &ctrl, |t, y, at_cp| {
        let m = spectral_monitors(sys.spectral(), lp.as_ref(), y, cfg.moment_n);
        record.push(t, m.h1, m.min_slope, m.max_abs_slope, m.b0, m.moment);
        observer(
            &Field {
                grid,
                values: y.to_vec(),
                time: t,
            },
            at_cp,
        );
        if -m.min_slope > cfg.blowup_slope_threshold {
            return Verdict::Stop(Termination::BlowupDetected);
        }
        if let Some(tol) = cfg.resolution_tol {
            if m.tail_fraction > tol {
                return Verdict::Stop(Termination::ResolutionLost);
            }
        }
        Verdict::Continue
    });
    record.terminated = Some(outcome.status);
    Ok((
        Field {
            grid,
            values: outcome.y,
            time: outcome.t,
        },
        record,
    ))
}

/// Fixed-step fourth-order solution at `t_end` using `n_steps` steps.
pub fn integrate_fixed_steps(u0: &Field, params: &ModelParams, t_end: f64, n_steps: usize) -> Result<Field> {
    let sys = EulerianSystem::new(&u0.grid, *params);
    let y = integrate_fixed(&sys, u0.time, &u0.values, u0.time + t_end, n_steps)?;
    Ok(Field {
        grid: u0.grid,
        values: y,
        time: u0.time + t_end,
    })
}

/// Least-squares slope of `log(error)` against `log(dt)` for fixed-step runs
/// on `[0, t_end]`, measured against an adaptive reference at `rtol = 1e-13`.
pub fn temporal_order_test(u0: &Field, params: &ModelParams, t_end: f64, dt_list: &[f64]) -> Result<f64> {
    if dt_list.len() < 2 {
        return Err(Error::InvalidArgument("need at least two step sizes".into()));
    }
    let mut cfg = TimeStepperConfig::new(t_end).with_tolerances(1e-13, 1e-15);
    cfg.resolution_tol = None;
    cfg.monitor_b0 = false;
    cfg.dt_min = 1e-14;
    cfg.dt_init = dt_list.iter().copied().fold(f64::INFINITY, f64::min);
    let (reference, rec) = integrate(u0, params, &cfg)?;
    if rec.terminated != Some(Termination::Completed) {
        return Err(Error::Degenerate(format!("reference run ended with {:?}", rec.terminated)));
    }
    let mut pts = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let steps = (t_end / dt).round().max(1.0) as usize;
        let sol = integrate_fixed_steps(u0, params, t_end, steps)?;
        let err = sol
            .values
            .iter()
            .zip(&reference.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        pts.push(((t_end / steps as f64).ln(), err.ln()));
    }
    Ok(ls_slope(&pts))
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
