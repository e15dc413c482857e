//! Fourier multipliers on the periodic grid: derivatives, the Helmholtz
//! inverse `(1 - d_xx)^{-1}` and the nonlocal source `Q`.
//!
//! A [`Spectral`] workspace owns immutable FFT plans for one grid. It holds no
//! mutable state, so one instance may be shared across threads.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{Field, ModelParams, PeriodicGrid};

pub struct Spectral {
    grid: PeriodicGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
    keep: Vec<bool>,
    nyquist_index: usize,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &PeriodicGrid) -> Self {
        let n = grid.n_points();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let k = (0..n).map(|m| grid.wavenumber(m)).collect();
        // 2/3 rule: retain |m| < N/3.
        let keep = (0..n)
            .map(|m| {
                let signed = if m <= n / 2 { m } else { n - m };
                3 * signed < n
            })
            .collect();
        Self {
            grid: *grid,
            fwd,
            inv,
            k,
            keep,
            nyquist_index: n / 2,
        }
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Angular wavenumbers in DFT order.
    #[inline]
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    #[inline]
    pub fn nyquist_index(&self) -> usize {
        self.nyquist_index
    }

    /// `true` for modes retained by the dealiasing filter.
    #[inline]
    pub fn retained(&self, m: usize) -> bool {
        self.keep[m]
    }

    /// Unnormalized forward DFT.
    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(u.len(), self.grid.n_points());
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse DFT (normalized by 1/N), real part.
    pub fn inverse(&self, mut uh: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut uh);
        let scale = 1.0 / self.grid.n_points() as f64;
        uh.into_iter().map(|c| c.re * scale).collect()
    }

    pub fn dealias(&self, uh: &mut [Complex64]) {
        for (c, &keep) in uh.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Spectral derivative of order `order` applied to coefficients in place.
    /// The Nyquist mode is dropped for odd orders.
    pub fn differentiate_coeffs(&self, uh: &mut [Complex64], order: u32) {
        let odd = order % 2 == 1;
        for (m, c) in uh.iter_mut().enumerate() {
            if odd && m == self.nyquist_index {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            *c *= Complex64::new(0.0, self.k[m]).powu(order);
        }
    }

    pub fn derivative(&self, u: &[f64], order: u32) -> Vec<f64> {
        let mut uh = self.forward(u);
        self.differentiate_coeffs(&mut uh, order);
        self.inverse(uh)
    }

    pub fn helmholtz_inverse(&self, f: &[f64]) -> Vec<f64> {
        let mut fh = self.forward(f);
        for (c, &k) in fh.iter_mut().zip(&self.k) {
            *c /= 1.0 + k * k;
        }
        self.inverse(fh)
    }

    /// Apply `(1 - d_xx)`.
    pub fn helmholtz(&self, g: &[f64]) -> Vec<f64> {
        let mut gh = self.forward(g);
        for (c, &k) in gh.iter_mut().zip(&self.k) {
            *c *= 1.0 + k * k;
        }
        self.inverse(gh)
    }

    /// Symbol of `d_x (1 - d_xx)^{-1}`; zero at `k = 0` and at Nyquist.
    #[inline]
    pub fn dx_helmholtz_symbol(&self, m: usize) -> Complex64 {
        if m == self.nyquist_index {
            return Complex64::new(0.0, 0.0);
        }
        let k = self.k[m];
        Complex64::new(0.0, k / (1.0 + k * k))
    }

    /// Dealiased physical values of `u` and `u_x` from the coefficients of `u`.
    pub fn dealiased_u_ux(&self, uh: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut filtered = uh.to_vec();
        self.dealias(&mut filtered);
        let mut dx = filtered.clone();
        self.differentiate_coeffs(&mut dx, 1);
        (self.inverse(filtered), self.inverse(dx))
    }

    /// Coefficients of `h(u) - u^2 - u_x^2/2` from dealiased samples.
    pub fn flux_coeffs(&self, u: &[f64], ux: &[f64], params: &ModelParams) -> Vec<Complex64> {
        let flux: Vec<f64> = u
            .iter()
            .zip(ux)
            .map(|(&v, &vx)| params.h(v) - v * v - 0.5 * vx * vx)
            .collect();
        let mut fh = self.forward(&flux);
        self.dealias(&mut fh);
        fh
    }

    /// `Q = (1 - d_xx)^{-1} d_x (h(u) - u^2 - u_x^2/2)`.
    pub fn q_source(&self, u: &[f64], params: &ModelParams) -> Vec<f64> {
        let uh = self.forward(u);
        let (ud, uxd) = self.dealiased_u_ux(&uh);
        let mut fh = self.flux_coeffs(&ud, &uxd, params);
        for (m, c) in fh.iter_mut().enumerate() {
            *c *= self.dx_helmholtz_symbol(m);
        }
        self.inverse(fh)
    }
}

/// Periodic solution of `(1 - d_xx) g = f`.
pub fn helmholtz_inverse(f: &Field) -> Field {
    let sp = Spectral::new(&f.grid);
    Field {
        grid: f.grid,
        values: sp.helmholtz_inverse(&f.values),
        time: f.time,
    }
}

/// Fourier derivative `(ik)^order`.
pub fn spectral_derivative(u: &Field, order: u32) -> Result<Field> {
    if order == 0 {
        return Err(Error::InvalidArgument("derivative order must be >= 1".into()));
    }
    let sp = Spectral::new(&u.grid);
    Ok(Field {
        grid: u.grid,
        values: sp.derivative(&u.values, order),
        time: u.time,
    })
}

/// Trigonometric interpolation of `u` onto a grid `factor` times finer
/// (`factor` a power of two).
pub fn spectral_refine(u: &Field, factor: usize) -> Result<Field> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("refinement factor must be a power of two, got {factor}")));
    }
    let n = u.grid.n_points();
    let fine = PeriodicGrid::new(u.grid.length(), n * factor)?;
    if factor == 1 {
        return Ok(u.clone());
    }
    let m = fine.n_points();
    let coarse = Spectral::new(&u.grid).forward(&u.values);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let scale = factor as f64;
    for (i, c) in coarse.iter().enumerate() {
        if i < n / 2 {
            padded[i] = c * scale;
        } else if i > n / 2 {
            padded[m - (n - i)] = c * scale;
        } else {
            padded[i] = c * (0.5 * scale);
            padded[m - i] = c * (0.5 * scale);
        }
    }
    Ok(Field {
        grid: fine,
        values: Spectral::new(&fine).inverse(padded),
        time: u.time,
    })
}

/// The nonlocal source `Q(u)`.
#[allow(non_snake_case)]
pub fn eval_Q(u: &Field, params: &ModelParams) -> Field {
    let sp = Spectral::new(&u.grid);
    Field {
        grid: u.grid,
        values: sp.q_source(&u.values, params),
        time: u.time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn refinement_interpolates_band_limited_data() {
        let g = PeriodicGrid::new(2.0 * PI, 32).unwrap();
        let f = |x: f64| (3.0 * x).sin() + 0.5 * (16.0 * x).cos() + 0.2;
        let fine = spectral_refine(&Field::from_fn(g, f), 4).unwrap();
        assert_eq!(fine.grid.n_points(), 128);
        for (x, v) in fine.grid.nodes().iter().zip(&fine.values) {
            assert!((f(*x) - v).abs() < 1e-12);
        }
        assert!(spectral_refine(&Field::from_fn(g, f), 3).is_err());
    }

    #[test]
    fn helmholtz_inverse_of_unit_mode() {
        let g = PeriodicGrid::new(2.0 * PI, 64).unwrap();
        let f = Field::from_fn(g, |x| x.cos());
        let out = helmholtz_inverse(&f);
        let expect: Vec<f64> = g.nodes().iter().map(|x| 0.5 * x.cos()).collect();
        assert!(max_diff(&out.values, &expect) < 1e-14);
    }

    #[test]
    fn helmholtz_inverse_keeps_constants() {
        let g = PeriodicGrid::new(7.0, 32).unwrap();
        let out = helmholtz_inverse(&Field::from_fn(g, |_| 1.0));
        assert!(out.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn helmholtz_round_trip_random() {
        let g = PeriodicGrid::new(20.0, 256).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = Field::new(g, (0..256).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let sp = Spectral::new(&g);
        let back = sp.helmholtz(&sp.helmholtz_inverse(&f.values));
        let scale = f.max_abs();
        assert!(max_diff(&back, &f.values) / scale < 1e-10);
    }

    #[test]
    fn derivative_of_sine() {
        let g = PeriodicGrid::new(2.0 * PI, 32).unwrap();
        let k = 3.0;
        let u = Field::from_fn(g, |x| (k * x).sin());
        let du = spectral_derivative(&u, 1).unwrap();
        let expect: Vec<f64> = g.nodes().iter().map(|x| k * (k * x).cos()).collect();
        assert!(max_diff(&du.values, &expect) < 1e-12);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = PeriodicGrid::new(3.0, 32).unwrap();
        let u = Field::from_fn(g, |_| 4.2);
        for order in 1..=3 {
            let du = spectral_derivative(&u, order).unwrap();
            assert!(du.max_abs() < 1e-12);
        }
        assert!(spectral_derivative(&u, 0).is_err());
    }

    #[test]
    fn derivative_of_gaussian_matches_closed_form() {
        let g = PeriodicGrid::new(80.0, 1024).unwrap();
        let u = Field::from_fn(g, |x| (-x * x).exp());
        let du = spectral_derivative(&u, 1).unwrap();
        let expect: Vec<f64> = g.nodes().iter().map(|x| -2.0 * x * (-x * x).exp()).collect();
        assert!(max_diff(&du.values, &expect) < 1e-8);
    }

    #[test]
    fn q_vanishes_at_zero() {
        let g = PeriodicGrid::new(10.0, 64).unwrap();
        let p = ModelParams::new(1.0, 3.0, 4.0, 2.0, 0.5).unwrap();
        assert!(eval_Q(&Field::zeros(g), &p).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn q_of_cosine_matches_fourier_computation() {
        // -u^2 - u_x^2/2 has the oscillating part eps^2 (k^2 - 2)/4 cos(2kx).
        let g = PeriodicGrid::new(2.0 * PI, 64).unwrap();
        let eps = 0.3;
        for &k in &[1.0, 2.0, 3.0] {
            let u = Field::from_fn(g, |x| eps * (k * x).cos());
            let q = eval_Q(&u, &ModelParams::camassa_holm(0.0));
            let expect: Vec<f64> = g
                .nodes()
                .iter()
                .map(|x| eps * eps * k * (2.0 - k * k) * (2.0 * k * x).sin() / (2.0 * (1.0 + 4.0 * k * k)))
                .collect();
            assert!(max_diff(&q.values, &expect) < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn q_of_even_field_is_odd() {
        let g = PeriodicGrid::new(30.0, 256).unwrap();
        let p = ModelParams::new(1.0, 3.0, 4.0, 2.0, 0.5).unwrap();
        let u = Field::from_fn(g, |x| 0.4 * (-x * x / 2.0).exp() + 0.1 * (-x * x).exp());
        let q = eval_Q(&u, &p);
        let n = g.n_points();
        // x_{N-i} = -x_i on the periodic grid.
        let worst = (1..n).fold(q.values[0].abs(), |m, i| m.max((q.values[i] + q.values[n - i]).abs()));
        assert!(worst < 1e-12, "antisymmetry residual {worst}");
    }

    #[test]
    fn q_is_quadratic_for_pure_ch() {
        let g = PeriodicGrid::new(30.0, 128).unwrap();
        let p = ModelParams::camassa_holm(0.0);
        let u = Field::from_fn(g, |x| (x / 3.0).sin() * (-x * x / 20.0).exp());
        let q1 = eval_Q(&u, &p);
        let q2 = eval_Q(&u.scaled(2.0), &p);
        let expect: Vec<f64> = q1.values.iter().map(|v| 4.0 * v).collect();
        assert!(max_diff(&q2.values, &expect) < 1e-14);
    }
}
