//! Characteristic (Lagrangian) formulation.
//!
//! Labels `xi` sit on the grid nodes. The state carries
//! `y` (particle position), `U = u(y)`, `V = u_x(y) y_xi`, `zeta = y - xi - Gamma t`
//! and `s = y_xi`; the nonlocal source is evaluated with O(N) one-sided
//! exponential sums instead of an FFT.

use crate::besov::{DyadicPartition, LittlewoodPaley};
use crate::error::{Error, Result};
use crate::eulerian::{TimeStepperConfig, TrajectoryRecord};
use crate::model::{Field, ModelParams, PeriodicGrid};
use crate::spectral::Spectral;
use crate::stepper::{integrate_adaptive, OdeSystem, Termination, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    pub grid: PeriodicGrid,
    pub time: f64,
    pub xi: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub zeta: Vec<f64>,
    pub stretch: Vec<f64>,
}

impl LagrangianState {
    pub fn n(&self) -> usize {
        self.xi.len()
    }

    fn pack(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(5 * self.n());
        for part in [&self.y, &self.u, &self.v, &self.zeta, &self.stretch] {
            out.extend_from_slice(part);
        }
        out
    }

    fn unpack(grid: PeriodicGrid, xi: &[f64], time: f64, flat: &[f64]) -> Self {
        let n = xi.len();
        let part = |k: usize| flat[k * n..(k + 1) * n].to_vec();
        Self {
            grid,
            time,
            xi: xi.to_vec(),
            y: part(0),
            u: part(1),
            v: part(2),
            zeta: part(3),
            stretch: part(4),
        }
    }

    /// `u_x` at the particles.
    pub fn slopes(&self) -> Vec<f64> {
        self.v.iter().zip(&self.stretch).map(|(v, s)| v / s).collect()
    }

    /// `(int (U^2 s + V^2 / s) dxi)^{1/2}`, equal to `||u||_{H^1}` while smooth.
    pub fn h1_norm(&self) -> f64 {
        h1_functional(&self.u, &self.v, &self.stretch, self.grid.spacing())
    }

    pub fn min_stretch(&self) -> f64 {
        self.stretch.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Resample `u` on the Eulerian grid by periodic cubic Hermite
    /// interpolation through `(y_i, U_i)` with slopes `V_i / s_i`.
    /// Particles that crossed at breaking are reordered by position first.
    pub fn to_eulerian(&self) -> Result<Field> {
        self.to_grid(&self.grid)
    }

    /// As [`to_eulerian`](Self::to_eulerian) but onto another grid of the
    /// same period (typically a refinement, to resolve a compressed front).
    pub fn to_grid(&self, grid: &PeriodicGrid) -> Result<Field> {
        if grid.length() != self.grid.length() {
            return Err(Error::InvalidGrid(format!(
                "target period {} differs from {}",
                grid.length(),
                self.grid.length()
            )));
        }
        let n = self.n();
        let period = self.grid.length();
        let d = self.slopes();
        if self.y.iter().chain(&self.u).chain(&d).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut order: Vec<usize> = (0..n).collect();
        if check_monotone(&self.y, period).is_err() {
            let base = self.y[0];
            order.sort_by(|&a, &b| {
                let ya = base + (self.y[a] - base).rem_euclid(period);
                let yb = base + (self.y[b] - base).rem_euclid(period);
                ya.total_cmp(&yb)
            });
        }
        let y0 = self.y[order[0]];
        let ys: Vec<f64> = order.iter().map(|&i| y0 + (self.y[i] - y0).rem_euclid(period)).collect();
        let values = grid
            .nodes()
            .iter()
            .map(|&x| {
                let xr = y0 + (x - y0).rem_euclid(period);
                let j = ys.partition_point(|&yy| yy <= xr).max(1) - 1;
                let (ia, ib) = (order[j], order[(j + 1) % n]);
                let yb = if j + 1 < n { ys[j + 1] } else { y0 + period };
                if yb - ys[j] <= 0.0 {
                    return self.u[ia];
                }
                hermite(xr, ys[j], yb, self.u[ia], self.u[ib], d[ia], d[ib])
            })
            .collect();
        Field::new(*grid, values).map(|f| f.with_time(self.time))
    }
}

fn hermite(x: f64, xa: f64, xb: f64, ua: f64, ub: f64, da: f64, db: f64) -> f64 {
    let dx = xb - xa;
    let t = (x - xa) / dx;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * ua
        + (t3 - 2.0 * t2 + t) * dx * da
        + (-2.0 * t3 + 3.0 * t2) * ub
        + (t3 - t2) * dx * db
}

pub(crate) fn h1_functional(u: &[f64], v: &[f64], s: &[f64], spacing: f64) -> f64 {
    let sum: f64 = u
        .iter()
        .zip(v)
        .zip(s)
        .map(|((u, v), s)| u * u * s + v * v / s)
        .sum();
    (spacing * sum).sqrt()
}

/// Identity map: `y = xi`, `U = u_0`, `V = u_0'`, `zeta = 0`, `s = 1`.
pub fn init_from_eulerian(u0: &Field) -> Result<LagrangianState> {
    if !u0.is_finite() {
        return Err(Error::NonFinite);
    }
    let sp = Spectral::new(&u0.grid);
    let xi = u0.grid.nodes();
    let n = xi.len();
    Ok(LagrangianState {
        grid: u0.grid,
        time: u0.time,
        y: xi.clone(),
        xi,
        u: u0.values.clone(),
        v: sp.derivative(&u0.values, 1),
        zeta: vec![0.0; n],
        stretch: vec![1.0; n],
    })
}

/// Errors unless `y` increases strictly and `y_{N-1} < y_0 + period`.
pub fn check_monotone(y: &[f64], period: f64) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    for i in 1..y.len() {
        if y[i] <= y[i - 1] {
            return Err(Error::NonMonotone { index: i });
        }
    }
    if let (Some(&first), Some(&last)) = (y.first(), y.last()) {
        if last >= first + period {
            return Err(Error::NonMonotone { index: 0 });
        }
    }
    Ok(())
}

/// Periodic one-sided sums
/// `A_i = sum_{z < y_i} e^{-(y_i - z)} w(z)` and `B_i = sum_{z > y_i} e^{-(z - y_i)} w(z)`
/// over all periodic images `z = y_j + p L`, by forward/backward recursion.
pub fn fast_exp_kernel_sums(y: &[f64], w: &[f64], period: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if y.len() != w.len() {
        return Err(Error::LengthMismatch(y.len(), w.len()));
    }
    let n = y.len();
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    check_monotone(y, period)?;
    Ok(label_ordered_sums(y, w, period))
}

/// Recursion behind [`fast_exp_kernel_sums`] without the ordering check.
/// Sums are taken in label order, so a small inversion `y_i < y_{i-1}` only
/// perturbs the result by `O(w |y_i - y_{i-1}|)`.
fn label_ordered_sums(y: &[f64], w: &[f64], period: f64) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let wrap = 1.0 / (1.0 - (-period).exp());
    // e^{-(y_i - y_{i-1})}, with the gap across the period at i = 0
    let gaps: Vec<f64> = (0..n)
        .map(|i| {
            let d = if i == 0 { y[0] + period - y[n - 1] } else { y[i] - y[i - 1] };
            (-d).exp()
        })
        .collect();

    let mut a = vec![0.0; n];
    a[0] = wrap
        * y.iter()
            .zip(w)
            .map(|(&yj, &wj)| (-(period - (yj - y[0]))).exp() * wj)
            .sum::<f64>();
    for i in 1..n {
        a[i] = gaps[i] * (a[i - 1] + w[i - 1]);
    }

    let mut b = vec![0.0; n];
    b[n - 1] = wrap
        * y.iter()
            .zip(w)
            .map(|(&yj, &wj)| (-(yj + period - y[n - 1])).exp() * wj)
            .sum::<f64>();
    for i in (0..n - 1).rev() {
        b[i] = gaps[i + 1] * (b[i + 1] + w[i + 1]);
    }
    (a, b)
}

/// Breaking guard for the right-hand side: `s > 0` everywhere and no
/// particle overtakes its neighbour by more than one label spacing.
fn check_unbroken(state: &LagrangianState) -> Result<()> {
    if let Some(index) = state.stretch.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::Breaking {
            index,
            stretch: state.stretch[index],
        });
    }
    let h = state.grid.spacing();
    let n = state.n();
    for i in 0..n {
        let prev = if i == 0 { state.y[n - 1] - state.grid.length() } else { state.y[i - 1] };
        let gap = state.y[i] - prev;
        if !gap.is_finite() {
            return Err(Error::NonFinite);
        }
        if gap < -h {
            return Err(Error::NonMonotone { index: i });
        }
    }
    Ok(())
}

/// O(N^2) evaluation of the same sums (reference and benchmark baseline).
pub fn direct_exp_kernel_sums(y: &[f64], w: &[f64], period: f64) -> (Vec<f64>, Vec<f64>) {
    let wrap = 1.0 / (1.0 - (-period).exp());
    let row = |i: usize| {
        let mut a = 0.0;
        let mut b = 0.0;
        for (&yj, &wj) in y.iter().zip(w) {
            let mut dl = (y[i] - yj).rem_euclid(period);
            if dl == 0.0 {
                dl = period;
            }
            let mut dr = (yj - y[i]).rem_euclid(period);
            if dr == 0.0 {
                dr = period;
            }
            a += (-dl).exp() * wj;
            b += (-dr).exp() * wj;
        }
        (wrap * a, wrap * b)
    };
    (0..y.len()).map(row).unzip()
}

/// Only rows `rows` of [`direct_exp_kernel_sums`]; used to time the direct
/// method on grids where the full product is too slow.
pub fn direct_exp_kernel_rows(y: &[f64], w: &[f64], period: f64, rows: &[usize]) -> Vec<(f64, f64)> {
    let wrap = 1.0 / (1.0 - (-period).exp());
    rows.iter()
        .map(|&i| {
            let (mut a, mut b) = (0.0, 0.0);
            for (&yj, &wj) in y.iter().zip(w) {
                let dl = match (y[i] - yj).rem_euclid(period) {
                    0.0 => period,
                    d => d,
                };
                let dr = match (yj - y[i]).rem_euclid(period) {
                    0.0 => period,
                    d => d,
                };
                a += (-dl).exp() * wj;
                b += (-dr).exp() * wj;
            }
            (wrap * a, wrap * b)
        })
        .collect()
}

/// Nonlocal terms at the particles.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTerms {
    /// `Q(y_i)`.
    pub q: Vec<f64>,
    /// `Q_x(y_i) s_i`.
    pub q_xi: Vec<f64>,
    /// `(1 - d_xx)^{-1}` applied to `u^2 - h(u) + u_x^2 / 2`, at `y_i`.
    pub p: Vec<f64>,
}

/// Evaluate the source by trapezoid sums in `xi` with an end correction for
/// the kink of the kernel at `xi_i`.
pub fn source_terms(state: &LagrangianState, params: &ModelParams) -> Result<SourceTerms> {
    let n = state.n();
    let h = state.grid.spacing();
    check_unbroken(state)?;
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let (u, v, s) = (state.u[i], state.v[i], state.stretch[i]);
            (u * u - params.h(u)) * s + 0.5 * v * v / s
        })
        .collect();
    let w: Vec<f64> = g.iter().map(|gi| h * gi).collect();
    let (a, b) = label_ordered_sums(&state.y, &w, state.grid.length());
    let c = h * h / 12.0;
    let mut out = SourceTerms {
        q: vec![0.0; n],
        q_xi: vec![0.0; n],
        p: vec![0.0; n],
    };
    for i in 0..n {
        let gp = (g[(i + 1) % n] - g[(i + n - 1) % n]) / (2.0 * h);
        let (u, v, s) = (state.u[i], state.v[i], state.stretch[i]);
        let q = 0.5 * (a[i] - b[i]) - c * gp;
        let p = 0.5 * (a[i] + b[i] + h * g[i]) - c * s * g[i];
        out.q[i] = q;
        out.p[i] = p;
        out.q_xi[i] = (u * u - params.h(u) - p) * s + 0.5 * v * v / s;
    }
    Ok(out)
}

pub fn eval_qtilde(state: &LagrangianState, params: &ModelParams) -> Result<Vec<f64>> {
    source_terms(state, params).map(|t| t.q)
}

pub fn eval_qtilde_xi(state: &LagrangianState, params: &ModelParams) -> Result<Vec<f64>> {
    source_terms(state, params).map(|t| t.q_xi)
}

pub struct LagrangianSystem {
    grid: PeriodicGrid,
    xi: Vec<f64>,
    params: ModelParams,
}

impl LagrangianSystem {
    pub fn new(grid: PeriodicGrid, params: ModelParams) -> Self {
        Self {
            grid,
            xi: grid.nodes(),
            params,
        }
    }
}

impl OdeSystem for LagrangianSystem {
    fn dim(&self) -> usize {
        5 * self.xi.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let state = LagrangianState::unpack(self.grid, &self.xi, t, y);
        let d = lagrangian_rhs(&state, &self.params)?;
        dydt.copy_from_slice(&d.pack());
        Ok(())
    }
}

/// Time derivative of every component, returned as a state-shaped value.
pub fn lagrangian_rhs(state: &LagrangianState, params: &ModelParams) -> Result<LagrangianState> {
    let src = source_terms(state, params)?;
    let lam = params.lambda_d;
    let out = LagrangianState {
        grid: state.grid,
        time: state.time,
        xi: state.xi.clone(),
        y: state.u.iter().map(|u| u + params.big_gamma).collect(),
        u: src.q.iter().zip(&state.u).map(|(q, u)| q - lam * u).collect(),
        v: src.q_xi.iter().zip(&state.v).map(|(q, v)| q - lam * v).collect(),
        zeta: state.u.clone(),
        stretch: state.v.clone(),
    };
    if out.pack().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

pub fn integrate_lagrangian(
    u0: &Field,
    params: &ModelParams,
    cfg: &TimeStepperConfig,
) -> Result<(LagrangianState, TrajectoryRecord)> {
    integrate_lagrangian_with(u0, params, cfg, &[], |_, _| {})
}

/// Adaptive integration of the characteristic system. Stops with
/// `BlowupDetected` once `min s < delta_break` or `min u_x` falls below
/// `-blowup_slope_threshold`.
pub fn integrate_lagrangian_with<F>(
    u0: &Field,
    params: &ModelParams,
    cfg: &TimeStepperConfig,
    snapshot_times: &[f64],
    mut observer: F,
) -> Result<(LagrangianState, TrajectoryRecord)>
where
    F: FnMut(&LagrangianState, bool),
{
    params.validate()?;
    cfg.validate()?;
    let init = init_from_eulerian(u0)?;
    let grid = u0.grid;
    let h = grid.spacing();
    let sys = LagrangianSystem::new(grid, *params);
    let lp = cfg.monitor_b0.then(|| LittlewoodPaley::new(&grid, DyadicPartition::default()));
    let mut record = TrajectoryRecord::new(cfg.moment_n);
    let ctrl = cfg.step_control(snapshot_times);
    let t0 = u0.time;

    let outcome = integrate_adaptive(&sys, t0, init.pack(), t0 + cfg.t_end, &ctrl, |t, flat, at_cp| {
        let st = LagrangianState::unpack(grid, &sys.xi, t, flat);
        let slopes = st.slopes();
        let min_slope = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let max_abs = slopes.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        // int u_x^{2n+1} dx = int (V/s)^{2n+1} s dxi
        let e = 2 * cfg.moment_n as i32 + 1;
        let moment = h * slopes.iter().zip(&st.stretch).map(|(d, s)| d.powi(e) * s).sum::<f64>();
        let b0 = lp.as_ref().and_then(|lp| {
            st.to_eulerian().ok().map(|f| {
                let ux = lp.spectral().derivative(&f.values, 1);
                lp.b0_inf(&ux)
            })
        });
        record.push(t, st.h1_norm(), min_slope, max_abs, b0, moment);
        observer(&st, at_cp);
        if st.min_stretch() < cfg.delta_break || -min_slope > cfg.blowup_slope_threshold {
            return Verdict::Stop(Termination::BlowupDetected);
        }
        Verdict::Continue
    });
    record.terminated = Some(outcome.status);
    Ok((LagrangianState::unpack(grid, &sys.xi, outcome.t, &outcome.y), record))
}
