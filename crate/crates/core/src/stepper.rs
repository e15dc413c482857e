//! Runge-Kutta-Fehlberg 4(5) time integration.
//!
//! The fourth-order solution is propagated and the fifth-order companion
//! provides the local error estimate, so fixed-step runs converge at order
//! four.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A first-order system `y' = F(t, y)`. Failing right-hand sides (for
/// example a breaking guard) cause the trial step to be rejected.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<(), Error>;
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    BlowupDetected,
    StepUnderflow,
    /// Spectral energy reached the top of the retained band.
    ResolutionLost,
}

/// Decision returned by the observer after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Continue,
    Stop(Termination),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Times the stepper must land on exactly (sorted ascending).
    pub checkpoints: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub status: Termination,
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 6] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

struct Workspace {
    k: [Vec<f64>; 6],
    stage: Vec<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
        }
    }
}

/// One RKF45 step; returns the fourth-order update and the error vector.
fn rkf45_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    dt: f64,
    ws: &mut Workspace,
    y_new: &mut [f64],
    err: &mut [f64],
) -> Result<(), Error> {
    let dim = y.len();
    for s in 0..6 {
        if s == 0 {
            ws.stage.copy_from_slice(y);
        } else {
            for (i, (st, yi)) in ws.stage.iter_mut().zip(y).enumerate() {
                let mut acc = 0.0;
                for (r, a) in A[s][..s].iter().enumerate() {
                    acc += a * ws.k[r][i];
                }
                *st = yi + dt * acc;
            }
        }
        sys.rhs(t + C[s] * dt, &ws.stage, &mut ws.k[s])?;
    }
    for i in 0..dim {
        let mut hi4 = 0.0;
        let mut e = 0.0;
        for s in 0..6 {
            hi4 += B4[s] * ws.k[s][i];
            e += (B5[s] - B4[s]) * ws.k[s][i];
        }
        y_new[i] = y[i] + dt * hi4;
        err[i] = dt * e;
    }
    if y_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], rtol: f64, atol: f64) -> f64 {
    y.iter()
        .zip(y_new)
        .zip(err)
        .fold(0.0_f64, |m, ((a, b), e)| {
            m.max(e.abs() / (atol + rtol * a.abs().max(b.abs())))
        })
}

/// Adaptive integration from `t0` to `t_end`. `on_accept` sees every accepted
/// state (and the initial one) together with a flag telling whether the step
/// landed on a checkpoint.
pub fn integrate_adaptive<S, F>(
    sys: &S,
    t0: f64,
    y0: Vec<f64>,
    t_end: f64,
    ctrl: &StepControl,
    mut on_accept: F,
) -> Outcome
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &[f64], bool) -> Verdict,
{
    let dim = sys.dim();
    assert_eq!(y0.len(), dim);
    let mut ws = Workspace::new(dim);
    let mut y = y0;
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut t = t0;
    let mut dt = ctrl.dt_init.min(ctrl.dt_max);
    let mut accepted = 0;
    let mut rejected = 0;
    let mut next_cp = ctrl.checkpoints.iter().position(|&c| c > t0);

    if let Verdict::Stop(status) = on_accept(t, &y, false) {
        return Outcome { t, y, status, accepted, rejected };
    }
    let end_tol = 1e-12 * t_end.abs().max(1.0);

    while t_end - t > end_tol {
        let mut target = t_end;
        let mut hitting_cp = false;
        if let Some(ic) = next_cp {
            if ctrl.checkpoints[ic] < t_end {
                target = ctrl.checkpoints[ic];
                hitting_cp = true;
            }
        }
        let remaining = target - t;
        let (step, lands) = if dt >= remaining { (remaining, true) } else { (dt, false) };

        match rkf45_step(sys, t, &y, step, &mut ws, &mut y_new, &mut err) {
            Ok(()) => {
                let e = error_norm(&y, &y_new, &err, ctrl.rtol, ctrl.atol);
                let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                if e <= 1.0 {
                    t = if lands { target } else { t + step };
                    std::mem::swap(&mut y, &mut y_new);
                    accepted += 1;
                    let at_cp = lands && hitting_cp;
                    if at_cp {
                        next_cp = next_cp.map(|i| i + 1).filter(|&i| i < ctrl.checkpoints.len());
                    }
                    // keep the controller's own proposal when the step was
                    // shortened only to land on a target
                    let proposed = if lands && step < dt { dt } else { step * factor };
                    dt = proposed.min(ctrl.dt_max);
                    if let Verdict::Stop(status) = on_accept(t, &y, at_cp) {
                        return Outcome { t, y, status, accepted, rejected };
                    }
                } else {
                    rejected += 1;
                    dt = step * factor;
                }
            }
            Err(_) => {
                rejected += 1;
                dt = step * 0.25;
            }
        }
        if dt < ctrl.dt_min && t_end - t > end_tol {
            return Outcome {
                t,
                y,
                status: Termination::StepUnderflow,
                accepted,
                rejected,
            };
        }
    }
    Outcome {
        t,
        y,
        status: Termination::Completed,
        accepted,
        rejected,
    }
}

/// Fixed-step fourth-order integration with `n_steps` equal steps.
pub fn integrate_fixed<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    n_steps: usize,
) -> Result<Vec<f64>, Error> {
    let dim = sys.dim();
    let mut ws = Workspace::new(dim);
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let dt = (t_end - t0) / n_steps as f64;
    for s in 0..n_steps {
        rkf45_step(sys, t0 + s as f64 * dt, &y, dt, &mut ws, &mut y_new, &mut err)?;
        std::mem::swap(&mut y, &mut y_new);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay(f64);
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], d: &mut [f64]) -> Result<(), Error> {
            d[0] = -self.0 * y[0];
            Ok(())
        }
    }

    struct Oscillator;
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], d: &mut [f64]) -> Result<(), Error> {
            d[0] = y[1];
            d[1] = -y[0];
            Ok(())
        }
    }

    fn ctrl(rtol: f64) -> StepControl {
        StepControl {
            rtol,
            atol: 1e-14,
            dt_init: 0.1,
            dt_min: 1e-12,
            dt_max: 1.0,
            checkpoints: vec![],
        }
    }

    #[test]
    fn tableau_consistency() {
        for s in 0..6 {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-14);
        }
        assert!((B4.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((B5.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_matches_exponential() {
        let out = integrate_adaptive(&Decay(0.7), 0.0, vec![1.0], 3.0, &ctrl(1e-10), |_, _, _| Verdict::Continue);
        assert_eq!(out.status, Termination::Completed);
        assert!((out.t - 3.0).abs() < 1e-14);
        assert!((out.y[0] - (-2.1_f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn fixed_step_order_is_four() {
        let exact = [1.0_f64.cos(), -1.0_f64.sin()];
        let errs: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&n| {
                let y = integrate_fixed(&Oscillator, 0.0, &[1.0, 0.0], 1.0, n).unwrap();
                ((y[0] - exact[0]).powi(2) + (y[1] - exact[1]).powi(2)).sqrt()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 4.0).abs() < 0.3, "order {order}");
        }
    }

    #[test]
    fn checkpoints_are_hit_exactly() {
        let mut c = ctrl(1e-8);
        c.checkpoints = vec![0.25, 0.5, 1.3];
        let mut hits = vec![];
        integrate_adaptive(&Decay(1.0), 0.0, vec![1.0], 2.0, &c, |t, _, cp| {
            if cp {
                hits.push(t);
            }
            Verdict::Continue
        });
        assert_eq!(hits, vec![0.25, 0.5, 1.3]);
    }

    #[test]
    fn large_initial_step_is_rejected_but_converges() {
        let mut c = ctrl(1e-9);
        c.dt_init = 1.0;
        let out = integrate_adaptive(&Decay(50.0), 0.0, vec![1.0], 1.0, &c, |_, _, _| Verdict::Continue);
        assert!(out.rejected > 0);
        assert!((out.y[0] - (-50.0_f64).exp()).abs() < 1e-12);
    }

    struct AlwaysFails;
    impl OdeSystem for AlwaysFails {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, _y: &[f64], _d: &mut [f64]) -> Result<(), Error> {
            Err(Error::NonFinite)
        }
    }

    #[test]
    fn persistent_failure_underflows() {
        let out = integrate_adaptive(&AlwaysFails, 0.0, vec![1.0], 1.0, &ctrl(1e-6), |_, _, _| Verdict::Continue);
        assert_eq!(out.status, Termination::StepUnderflow);
    }
}
