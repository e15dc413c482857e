//! Inputs shared by the benchmarks in `benches/`.

use wdch::{Field, PeriodicGrid};

/// Strictly increasing, mildly jittered positions in `[-period/2, period/2)`
/// and oscillating weights; deterministic so runs compare across commits.
pub fn ordered_instance(n: usize, period: f64) -> (Vec<f64>, Vec<f64>) {
    let h = period / n as f64;
    let y = (0..n).map(|i| -period / 2.0 + (i as f64 + 0.3 * (i as f64).sin()) * h).collect();
    let w = (0..n).map(|i| (0.7 * i as f64).sin()).collect();
    (y, w)
}

pub fn smooth_datum(n: usize) -> Field {
    let g = PeriodicGrid::new(40.0, n).expect("power-of-two grid");
    Field::from_fn(g, |x| 0.5 * (-x * x).exp() - 0.2 * x * (-(x * x) / 4.0).exp())
}
