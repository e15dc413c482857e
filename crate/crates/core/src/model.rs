//! Model coefficients, the periodic grid and sampled fields.
//!
//! The equation is posed on the line; the solvers work on a periodic box
//! `[-L/2, L/2)` wide enough that the data and the kernel `e^{-|x|}/2` have
//! decayed to round-off at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients `(alpha, beta, gamma, Gamma, lambda)` of the weakly
/// dissipative equation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma_c: f64,
    /// Advection shift.
    #[serde(default)]
    pub big_gamma: f64,
    /// Dissipation rate. Zero is admitted ("conservative mode").
    #[serde(default)]
    pub lambda_d: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, gamma_c: f64, big_gamma: f64, lambda_d: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma_c,
            big_gamma,
            lambda_d,
        };
        p.validate()?;
        Ok(p)
    }

    /// Pure Camassa-Holm with dissipation `lambda_d`.
    pub fn camassa_holm(lambda_d: f64) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            gamma_c: 0.0,
            big_gamma: 0.0,
            lambda_d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma_c, self.big_gamma, self.lambda_d];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all coefficients must be finite".into()));
        }
        if self.lambda_d < 0.0 {
            return Err(Error::InvalidParams(format!(
                "lambda_d must be >= 0, got {}",
                self.lambda_d
            )));
        }
        Ok(())
    }

    pub fn is_conservative(&self) -> bool {
        self.lambda_d == 0.0
    }

    /// `h(u) = (alpha + Gamma) u + beta/3 u^3 + gamma/4 u^4`.
    #[inline]
    pub fn h(&self, u: f64) -> f64 {
        let u2 = u * u;
        (self.alpha + self.big_gamma) * u + self.beta / 3.0 * u2 * u + self.gamma_c / 4.0 * u2 * u2
    }

    /// `kappa = max{|alpha|, |beta|/3, |gamma|/4, |Gamma|}`.
    pub fn kappa(&self) -> f64 {
        self.alpha
            .abs()
            .max(self.beta.abs() / 3.0)
            .max(self.gamma_c.abs() / 4.0)
            .max(self.big_gamma.abs())
    }
}

/// Uniform periodic grid with nodes `x_i = -L/2 + i h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    length: f64,
    n_points: usize,
}

impl PeriodicGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(length: f64, n_points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be > 0, got {length}")));
        }
        if n_points < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "N must be at least {}, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        if !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N must be a power of two, got {n_points}")));
        }
        Ok(Self { length, n_points })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n_points as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Angular wavenumber of DFT index `m` (Nyquist reported as positive).
    #[inline]
    pub fn wavenumber(&self, m: usize) -> f64 {
        let n = self.n_points as isize;
        let m = m as isize;
        let signed = if m <= n / 2 { m } else { m - n };
        2.0 * std::f64::consts::PI * signed as f64 / self.length
    }

    /// Largest resolved angular wavenumber `pi N / L`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n_points as f64 / self.length
    }

    /// Same box with twice as many nodes.
    pub fn refined(&self) -> Self {
        Self {
            length: self.length,
            n_points: self.n_points * 2,
        }
    }
}

/// Samples of a periodic function at the grid nodes, at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch(values.len(), grid.n_points()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            grid,
            values,
            time: 0.0,
        })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_points()],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: (0..grid.n_points()).map(|i| f(grid.node(i))).collect(),
            time: 0.0,
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
            time: self.time,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Pointwise `h(u)`.
pub fn eval_h(u: &Field, params: &ModelParams) -> Field {
    Field {
        grid: u.grid,
        values: u.values.iter().map(|&v| params.h(v)).collect(),
        time: u.time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(10.0, 32).unwrap()
    }

    #[test]
    fn h_vanishes_at_zero() {
        let p = ModelParams::new(1.3, -2.0, 0.7, 4.0, 0.1).unwrap();
        let out = eval_h(&Field::zeros(grid()), &p);
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn h_direct_substitution() {
        let p = ModelParams::new(1.0, 3.0, 4.0, 2.0, 0.5).unwrap();
        let u = Field::from_fn(grid(), |_| 1.0);
        let out = eval_h(&u, &p);
        assert!(out.values.iter().all(|&v| (v - 5.0).abs() < 1e-15));
    }

    #[test]
    fn h_zero_coefficients() {
        let p = ModelParams::camassa_holm(0.0);
        let u = Field::from_fn(grid(), |_| 2.5);
        assert!(eval_h(&u, &p).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid::new(10.0, 1000).is_err());
        assert!(PeriodicGrid::new(10.0, 8).is_err());
        assert!(PeriodicGrid::new(0.0, 64).is_err());
        let g = PeriodicGrid::new(8.0, 16).unwrap();
        assert_eq!(g.node(0), -4.0);
        assert!((g.node(15) + g.spacing() - 4.0).abs() < 1e-15);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 0.0, 0.0, 0.0, -1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 0.0, 0.0, 0.0, 0.0).unwrap().is_conservative());
    }

    #[test]
    fn field_rejects_nan() {
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert_eq!(Field::new(PeriodicGrid::new(1.0, 16).unwrap(), v), Err(Error::NonFinite));
    }
}
