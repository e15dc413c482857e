//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use wdch::besov::{decompose, make_illposed_datum, BesovIndex, IllposedDatumSpec, LittlewoodPaley};
use wdch::eulerian::temporal_order_test;
use wdch::harness::{
    decay_experiment_with, eta_lambda_admissibility, evolve, gn_constant_estimate, inflation_from_datum, last_decade_growth,
    lifespan_bound, lifespan_constants, small_data_experiment, small_data_threshold, standard_gn_family, F0Source, Solver,
};
use wdch::spectral::spectral_derivative;
use wdch::{Field, ModelParams, PeriodicGrid, Termination, TimeStepperConfig};
use wdch_cli::bench::kernel_bench;
use wdch_cli::config::Experiment;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn decay_data(grid: PeriodicGrid) -> Field {
    Field::from_fn(grid, |x| 0.1 * (-x * x).exp())
}

fn criterion_1() -> Outcome {
    let g = PeriodicGrid::new(80.0, 2048).map_err(|e| e.to_string())?;
    let cfg = TimeStepperConfig::new(2.0).with_tolerances(1e-9, 1e-12);
    let t = Instant::now();
    let p = ModelParams::new(1.0, 3.0, 4.0, 2.0, 0.5).map_err(|e| e.to_string())?;
    let (dissipative, _) = decay_experiment_with(&decay_data(g), &p, &cfg, Solver::Eulerian).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let (conservative, _) =
        decay_experiment_with(&decay_data(g), &ModelParams::camassa_holm(0.0), &cfg, Solver::Eulerian).map_err(|e| e.to_string())?;
    check(
        dissipative.status == Termination::Completed
            && conservative.status == Termination::Completed
            && dissipative.max_relative_deviation < 1e-5
            && conservative.max_relative_deviation < 1e-5
            && secs < 30.0,
        format!(
            "decay deviation {:.2e}, conservative deviation {:.2e}, {secs:.1} s",
            dissipative.max_relative_deviation, conservative.max_relative_deviation
        ),
    )
}

fn criterion_2() -> Outcome {
    let g = PeriodicGrid::new(80.0, 2048).map_err(|e| e.to_string())?;
    let p = ModelParams::new(1.0, 3.0, 4.0, 2.0, 0.5).map_err(|e| e.to_string())?;
    let cfg = TimeStepperConfig::new(1.0).with_tolerances(1e-9, 1e-12);
    let t = Instant::now();
    let e = evolve(&decay_data(g), &p, &cfg, Solver::Eulerian, &[], |_, _| {}).map_err(|e| e.to_string())?;
    let l = evolve(&decay_data(g), &p, &cfg, Solver::Lagrangian, &[], |_, _| {}).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let diff = e
        .final_field
        .values
        .iter()
        .zip(&l.final_field.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        e.status() == Termination::Completed && l.status() == Termination::Completed && diff < 1e-4 && secs < 60.0,
        format!("max |u_E - u_L| at t=1 is {diff:.2e}, {secs:.1} s"),
    )
}

fn criterion_3() -> Outcome {
    let r = kernel_bench(2024, 100, 2048, 65536).map_err(|e| e.to_string())?;
    check(
        r.max_abs_error < 1e-12 && r.speedup >= 50.0,
        format!(
            "max error {:.2e} over {} instances at N={}, speedup {:.0}x at N={} (direct cost extrapolated from {} rows)",
            r.max_abs_error, r.instances, r.check_points, r.speedup, r.timing_points, r.direct_rows_timed
        ),
    )
}

fn criterion_4() -> Outcome {
    let g = PeriodicGrid::new(20.0, 16384).map_err(|e| e.to_string())?;
    let u0 = Field::from_fn(g, |x| -20.0 * x * (-x * x).exp());
    let p = ModelParams::camassa_holm(0.0);
    let cfg = TimeStepperConfig::new(1.0).with_threshold(200.0);
    let mut out = Vec::new();
    for s in [Solver::Eulerian, Solver::Lagrangian] {
        let ev = evolve(&u0, &p, &cfg, s, &[], |_, _| {}).map_err(|e| e.to_string())?;
        out.push((ev.status(), ev.record.final_time(), last_decade_growth(&ev.record).unwrap_or(0.0)));
    }
    let (te, tl) = (out[0].1, out[1].1);
    let rel = (te - tl).abs() / te.min(tl);
    check(
        out.iter().all(|o| o.0 == Termination::BlowupDetected && o.2 >= 10.0) && rel < 0.05,
        format!(
            "T_E = {te:.5}, T_L = {tl:.5} (rel. diff {rel:.2e}); last-decade growth {:.1} / {:.1}",
            out[0].2, out[1].2
        ),
    )
}

fn criterion_5() -> Outcome {
    // closed-form C2 against a direct evaluation
    let mut c2_ok = true;
    for (a, b, c, gg) in [(1.0, 3.0, 4.0, 2.0), (-0.5, 0.0, 2.0, 1.0), (0.0, -6.0, 0.0, 0.0)] {
        let p = ModelParams::new(a, b, c, gg, 0.1).map_err(|e| e.to_string())?;
        let (_, c2, _) = lifespan_constants(&p, 1, 1.0, 0.5);
        c2_ok &= c2 == f64::abs(a) + f64::abs(gg) + f64::abs(b) / 3.0 + f64::abs(c) / 4.0 + 0.5;
    }
    let c_est = gn_constant_estimate(1, &standard_gn_family(&PeriodicGrid::new(40.0, 4096).map_err(|e| e.to_string())?))
        .map_err(|e| e.to_string())?;
    let g = PeriodicGrid::new(10.0, 32768).map_err(|e| e.to_string())?;
    let ch = |l: f64| ModelParams::camassa_holm(l);
    let cases = [
        (ch(0.1), 0.003, 0.05),
        (ch(0.5), 0.002, 0.1),
        (ch(1.0), 0.002, 0.2),
        (ModelParams::new(0.2, 0.0, 0.0, 0.1, 0.5).map_err(|e| e.to_string())?, 0.002, 0.2),
        (ModelParams::new(0.0, 1.0, 0.0, 0.0, 0.1).map_err(|e| e.to_string())?, 0.002, 0.02),
        (ch(0.1), 0.002, 0.5),
    ];
    let mut worst: f64 = 0.0;
    let mut all = c2_ok;
    let mut met = 0;
    for (p, w, a) in cases {
        let u0 = Field::from_fn(g, |x| -a * (x / w) * (-(x / w).powi(2)).exp());
        let lb = lifespan_bound(&u0, &p, 1, c_est).map_err(|e| e.to_string())?;
        if !lb.condition_met {
            all = false;
            continue;
        }
        met += 1;
        let mut cfg = TimeStepperConfig::new(2.0 * lb.bound_t.min(10.0));
        cfg.monitor_b0 = false;
        cfg.dt_init = 1e-5;
        let ev = evolve(&u0, &p, &cfg, Solver::Lagrangian, &[], |_, _| {}).map_err(|e| e.to_string())?;
        let t_obs = ev.record.final_time();
        all &= ev.status() == Termination::BlowupDetected && t_obs <= lb.bound_t;
        worst = worst.max(t_obs / lb.bound_t);
    }
    check(
        all && met >= 5,
        format!("{met} cases with condition met (c_est = {c_est:.3}), max T_obs/bound = {worst:.3}, C2 exact: {c2_ok}"),
    )
}

fn criterion_6() -> Outcome {
    let g = PeriodicGrid::new(40.0, 1024).map_err(|e| e.to_string())?;
    let profile = Field::from_fn(g, |x| -x * (-x * x).exp() / (0.5f64.sqrt() * (-0.5f64).exp()));
    let p = ModelParams::camassa_holm(0.5);
    let idx = BesovIndex::critical(2.0, 1.0).map_err(|e| e.to_string())?;
    let mut cfg = TimeStepperConfig::new(50.0);
    cfg.resolution_tol = Some(1e-6);
    let t = small_data_threshold(&profile, &p, &idx, &cfg, 0.01, 20.0, 8).map_err(|e| e.to_string())?;
    let mut all = true;
    let mut worst: f64 = 0.0;
    let amps: Vec<f64> = [1.0, 0.75, 0.5, 0.25, 0.1, 0.01].iter().map(|f| f * t.a_star / 2.0).collect();
    for &a in &amps {
        let r = small_data_experiment(&profile.scaled(a), &p, &idx, &cfg).map_err(|e| e.to_string())?;
        all &= r.bounded && r.status == Termination::Completed;
        worst = worst.max(r.max_h / r.h0);
    }
    check(
        all,
        format!(
            "a* = {:.4} (first failure {:.4}); {} runs with amp <= a*/2 to t=50, max H/H0 = {worst:.4}",
            t.a_star,
            t.a_fail,
            amps.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let g = PeriodicGrid::new(40.0, 8192).map_err(|e| e.to_string())?;
    let spec = IllposedDatumSpec {
        r_index: 2.0,
        levels: 3,
        target_eps: 2.0,
        p: 2.0,
        mollifier: Default::default(),
    };
    let u0 = make_illposed_datum(&spec, &g).map_err(|e| e.to_string())?;
    let lp = LittlewoodPaley::new(&g, Default::default());
    let norm = lp.besov_norm(&u0.values, &spec.index());
    let blocks = lp.weighted_block_norms(&u0.values, 0.0, spec.p);
    let pc = spec.p / (spec.p - 1.0);
    let law = |j: u32| 2f64.powf(j as f64 / pc) * spec.weight(j);
    let ratios: Vec<f64> = (1..=spec.levels)
        .map(|j| (blocks[j as usize + 1] / blocks[2]) / (law(j) / law(1)))
        .collect();
    let law_ok = ratios.iter().all(|q| (0.5..=2.0).contains(q));
    let p = ModelParams::camassa_holm(0.1);
    let adm = eta_lambda_admissibility(&u0, &p, wdch::harness::eta0(&p), 0.0, F0Source::SlopeAtX0).map_err(|e| e.to_string())?;
    let cfg = TimeStepperConfig::new(spec.target_eps);
    let (r, _) = inflation_from_datum(&u0, &spec, &p, &cfg, Solver::Lagrangian, 256).map_err(|e| e.to_string())?;
    check(
        (norm - spec.target_eps).abs() < 1e-6 && law_ok && r.status == Termination::BlowupDetected && r.inflation_ratio >= 10.0,
        format!(
            "||u0|| = {norm:.9} (eps = {}), block/law ratios {ratios:.3?}, slope condition {}, blow-up at T = {:.4} \
             (T < eps: {}), B^1_inf,inf inflation {:.1}x on {} points",
            spec.target_eps, adm.slope_condition, r.t_final, r.lifespan_below_eps, r.inflation_ratio, r.measure_points
        ),
    )
}

fn criterion_8() -> Outcome {
    let g = PeriodicGrid::new(20.0, 64).map_err(|e| e.to_string())?;
    let p = ModelParams::new(0.5, 1.0, 1.0, 0.3, 0.5).map_err(|e| e.to_string())?;
    let order = temporal_order_test(&Field::from_fn(g, |x| 0.5 * (-x * x).exp()), &p, 1.0, &[0.05, 0.025, 0.0125])
        .map_err(|e| e.to_string())?;

    let f = |x: f64| (3.0 * x).sin() + 0.4 * (9.0 * x).cos() * x.sin();
    let df = |x: f64| 3.0 * (3.0 * x).cos() - 3.6 * (9.0 * x).sin() * x.sin() + 0.4 * (9.0 * x).cos() * x.cos();
    let mut spatial: f64 = 0.0;
    for n in [32, 64] {
        let gg = PeriodicGrid::new(2.0 * PI, n).map_err(|e| e.to_string())?;
        let d = spectral_derivative(&Field::from_fn(gg, f), 1).map_err(|e| e.to_string())?;
        for (x, v) in gg.nodes().iter().zip(&d.values) {
            spatial = spatial.max((df(*x) - v).abs());
        }
    }

    let gl = PeriodicGrid::new(40.0, 1024).map_err(|e| e.to_string())?;
    let u = Field::from_fn(gl, |x| (-x * x).exp() * (4.0 * x).cos() + 0.3 / (1.0 + x * x));
    let rec = decompose(&u).reconstruct();
    let lp_res = u.values.iter().zip(&rec.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let text = "[model]\nlambda_d = 0.5\nalpha = 1.0\n[grid]\nL = 40.0\nN = 512\n[time]\nt_end = 1.0\n\
                [initial_data]\nkind = \"gaussian\"\namp = 0.3\nwidth = 1.0\n[output]\nsnapshot_every = 0.5\n";
    let mut cfg = wdch_cli::parse_config(text).map_err(|e| e.to_string())?;
    cfg.output.dir = dir.path().join("run");
    let mut bytes = Vec::new();
    for _ in 0..2 {
        wdch_cli::run(&cfg, &Experiment::Simulate).map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for f in ["timeseries.csv", "snapshots/snap_00000.csv", "snapshots/snap_00001.csv", "report.json"] {
            files.push(fs::read(cfg.output.dir.join(f)).map_err(|e| e.to_string())?);
        }
        bytes.push(files);
    }
    let identical = bytes[0] == bytes[1];
    check(
        (order - 4.0).abs() <= 0.3 && spatial < 1e-8 && lp_res < 1e-10 && identical,
        format!(
            "temporal order {order:.3}, spectral derivative error {spatial:.1e} at N = 32 and 64, LP residual {lp_res:.1e}, \
             byte-identical reruns: {identical}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("exact H1 decay", criterion_1),
        ("solver cross-validation", criterion_2),
        ("fast kernel sums", criterion_3),
        ("blow-up consistency", criterion_4),
        ("lifespan bound", criterion_5),
        ("small-data global runs", criterion_6),
        ("ill-posedness datum and norm inflation", criterion_7),
        ("numerics hygiene", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let label = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|w| label.contains(w.as_str()) || name.contains(w.as_str())) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("{label} PASS [{name}] {d} ({secs:.1} s)"),
            Err(d) => {
                failed += 1;
                println!("{label} FAIL [{name}] {d} ({secs:.1} s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
