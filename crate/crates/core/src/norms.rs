//! Norm functionals on sampled fields.

use crate::model::Field;
use crate::spectral::Spectral;

/// Sobolev norm `(sum_m (1 + k_m^2)^s |u_m|^2)^{1/2}`, normalized so that the
/// `s = 1` value squared equals `int (u^2 + u_x^2) dx`.
pub fn norm_h_s(u: &Field, s: f64) -> f64 {
    norm_h_s_with(&Spectral::new(&u.grid), &u.values, s)
}

pub fn norm_h_s_with(sp: &Spectral, u: &[f64], s: f64) -> f64 {
    let uh = sp.forward(u);
    let n = sp.grid().n_points() as f64;
    let scale = sp.grid().length() / (n * n);
    let sum: f64 = uh
        .iter()
        .zip(sp.wavenumbers())
        .map(|(c, &k)| (1.0 + k * k).powf(s) * c.norm_sqr())
        .sum();
    (scale * sum).sqrt()
}

/// `||u||_{H^1}` from samples of `u` and `u_x` by the trapezoid rule.
pub fn h1_from_samples(u: &[f64], ux: &[f64], spacing: f64) -> f64 {
    let sum: f64 = u.iter().zip(ux).map(|(a, b)| a * a + b * b).sum();
    (spacing * sum).sqrt()
}

/// Discrete `L^p` norm `(h sum |u_i|^p)^{1/p}`; `p = inf` gives the sample max.
pub fn norm_lp(u: &Field, p: f64) -> f64 {
    lp_of_samples(&u.values, u.grid.spacing(), p)
}

pub fn lp_of_samples(values: &[f64], spacing: f64, p: f64) -> f64 {
    assert!(p >= 1.0, "p must be >= 1");
    if p.is_infinite() {
        return values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    }
    if p == 2.0 {
        return (spacing * values.iter().map(|v| v * v).sum::<f64>()).sqrt();
    }
    let sum: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    (spacing * sum).powf(1.0 / p)
}

/// `||u||_{L^inf} + ||u_x||_{L^inf}`.
pub fn norm_w1inf(u: &Field) -> f64 {
    let sp = Spectral::new(&u.grid);
    let ux = sp.derivative(&u.values, 1);
    lp_of_samples(&u.values, 1.0, f64::INFINITY) + lp_of_samples(&ux, 1.0, f64::INFINITY)
}

/// `int u_x^{2n+1} dx` by the trapezoid rule.
pub fn odd_slope_moment(ux: &[f64], n: u32, spacing: f64) -> f64 {
    let e = 2 * n as i32 + 1;
    spacing * ux.iter().map(|v| v.powi(e)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PeriodicGrid;
    use std::f64::consts::PI;

    #[test]
    fn h1_of_sine() {
        let g = PeriodicGrid::new(2.0 * PI, 64).unwrap();
        let u = Field::from_fn(g, f64::sin);
        assert!((norm_h_s(&u, 1.0) - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!((norm_h_s(&u, 0.0) - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn h_s_of_zero() {
        let g = PeriodicGrid::new(5.0, 32).unwrap();
        assert_eq!(norm_h_s(&Field::zeros(g), 2.0), 0.0);
    }

    #[test]
    fn h1_of_gaussian_matches_quadrature() {
        let g = PeriodicGrid::new(80.0, 2048).unwrap();
        let u = Field::from_fn(g, |x| (-x * x).exp());
        // trapezoid oracle with the analytic derivative
        let h = g.spacing();
        let direct: f64 = g
            .nodes()
            .iter()
            .map(|&x| {
                let v = (-x * x).exp();
                let d = -2.0 * x * v;
                v * v + d * d
            })
            .sum::<f64>()
            * h;
        let spectral = norm_h_s(&u, 1.0).powi(2);
        assert!((spectral - direct).abs() / direct < 1e-8);
        // closed form: sqrt(pi/2) (1 + 1)
        let exact = (PI / 2.0).sqrt() * 2.0;
        assert!((spectral - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn lp_of_constant() {
        let g = PeriodicGrid::new(3.0, 32).unwrap();
        let u = Field::from_fn(g, |_| -2.0);
        for &p in &[1.0, 2.0, 3.5] {
            assert!((norm_lp(&u, p) - 2.0 * 3.0_f64.powf(1.0 / p)).abs() < 1e-13);
        }
        assert_eq!(norm_lp(&u, f64::INFINITY), 2.0);
    }

    #[test]
    fn lp_of_sine() {
        let n = 64;
        let g = PeriodicGrid::new(2.0 * PI, n).unwrap();
        let u = Field::from_fn(g, f64::sin);
        let sup = norm_lp(&u, f64::INFINITY);
        assert!(sup <= 1.0 && 1.0 - sup <= (PI / n as f64).powi(2) / 2.0);
        assert!((norm_lp(&u, 2.0) - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn w1inf_of_sine() {
        let g = PeriodicGrid::new(2.0 * PI, 64).unwrap();
        let u = Field::from_fn(g, |x| (x + 0.3).sin());
        assert!((norm_w1inf(&u) - 2.0).abs() < 5e-3);
    }
}
