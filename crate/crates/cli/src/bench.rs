//! `kernel-bench`: equivalence and timing of the fast kernel sums.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wdch::lagrangian::{direct_exp_kernel_rows, direct_exp_kernel_sums, fast_exp_kernel_sums};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBenchReport {
    pub seed: u64,
    pub instances: usize,
    pub check_points: usize,
    /// Largest `|fast - direct|` over all instances, both sums.
    pub max_abs_error: f64,
    pub timing_points: usize,
    pub fast_seconds: f64,
    /// Rows of the direct sum actually timed; the full cost is extrapolated
    /// linearly in the row count.
    pub direct_rows_timed: usize,
    pub direct_seconds_estimated: f64,
    pub speedup: f64,
}

/// Sorted positions in `[-period/2, period/2)` and weights in `[-1, 1)`.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, period: f64) -> (Vec<f64>, Vec<f64>) {
    let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-period / 2.0..period / 2.0)).collect();
    y.sort_by(f64::total_cmp);
    let w = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (y, w)
}

pub fn kernel_bench(seed: u64, instances: usize, check_points: usize, timing_points: usize) -> wdch::Result<KernelBenchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..instances {
        let period = rng.random_range(5.0..100.0);
        let (y, w) = random_instance(&mut rng, check_points, period);
        let (a, b) = fast_exp_kernel_sums(&y, &w, period)?;
        let (da, db) = direct_exp_kernel_sums(&y, &w, period);
        for i in 0..check_points {
            max_err = max_err.max((a[i] - da[i]).abs()).max((b[i] - db[i]).abs());
        }
    }

    let period = 40.0;
    let (y, w) = random_instance(&mut rng, timing_points, period);
    let mut fast = f64::INFINITY;
    for _ in 0..5 {
        let t = Instant::now();
        let out = fast_exp_kernel_sums(&y, &w, period)?;
        fast = fast.min(t.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    let rows_timed = timing_points.min(512);
    let stride = timing_points / rows_timed;
    let rows: Vec<usize> = (0..rows_timed).map(|k| k * stride).collect();
    let t = Instant::now();
    std::hint::black_box(direct_exp_kernel_rows(&y, &w, period, &rows));
    let direct = t.elapsed().as_secs_f64() * timing_points as f64 / rows_timed as f64;
    Ok(KernelBenchReport {
        seed,
        instances,
        check_points,
        max_abs_error: max_err,
        timing_points,
        fast_seconds: fast,
        direct_rows_timed: rows_timed,
        direct_seconds_estimated: direct,
        speedup: direct / fast,
    })
}
