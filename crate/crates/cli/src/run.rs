//! Dispatch of a validated config to the solvers and the harness.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wdch::besov::{make_illposed_datum, BesovIndex, DyadicPartition, LittlewoodPaley};
use wdch::harness::{
    decay_summary, eta_lambda_admissibility, gn_constant_estimate, inflation_summary, last_decade_growth, lifespan_bound,
    small_data_summary, small_data_threshold, standard_gn_family, Admissibility, DecayReport, Evolution, InflationReport,
    InflationTraces, LifespanBound, SmallDataReport, Solver, ThresholdReport, GN_SAFETY,
};
use wdch::lagrangian::{integrate_lagrangian_with, LagrangianState};
use wdch::spectral::Spectral;
use wdch::{eulerian, Field, PeriodicGrid, Termination, TrajectoryRecord};

use crate::config::{Experiment, InitialData, RunConfig};
use crate::output::{write_json, write_snapshot, write_timeseries, ExtraColumn};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Core(#[from] wdch::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_ctx(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

/// Process exit code for a termination status; errors map to 1.
pub fn exit_code(status: Termination) -> i32 {
    match status {
        Termination::Completed => 0,
        Termination::BlowupDetected => 2,
        Termination::StepUnderflow => 3,
        Termination::ResolutionLost => 4,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentReport {
    Simulate {
        /// Time of the blow-up event, if one was detected.
        blowup_time: Option<f64>,
        /// Growth of `int ||u_x||_inf dt` over the last decade before the end.
        last_decade_growth: Option<f64>,
    },
    Decay(DecayReport),
    Smalldata(SmallDataReport),
    Threshold(ThresholdReport),
    Lifespan {
        bound: LifespanBound,
        observed_blowup: Option<f64>,
        /// `observed_blowup <= bound_t`; absent when no blow-up was seen.
        within_bound: Option<bool>,
    },
    Admissibility(Admissibility),
    Inflation(InflationReport),
    Gn {
        n: u32,
        c_est: f64,
        c_gn: f64,
        family_size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub solver: Solver,
    pub status: Termination,
    pub t_final: f64,
    /// Run directory relative to the output root.
    pub dir: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub record: TrajectoryRecord,
    pub report: Option<ExperimentReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub experiment: String,
    pub runs: Vec<SolverRun>,
    /// Reports not tied to a single trajectory.
    pub reports: Vec<ExperimentReport>,
    /// `max |u_E - u_L|` at the common final time when both solvers completed.
    pub solver_linf_difference: Option<f64>,
    pub status: Option<Termination>,
    pub exit_code: i32,
    /// Noted config/solver combinations that are allowed but questionable.
    pub warnings: Vec<String>,
}

pub fn build_initial(data: &InitialData, grid: &PeriodicGrid) -> Result<Field, RunError> {
    let l = grid.length();
    Ok(match data {
        InitialData::Gaussian { amp, width, center } => Field::from_fn(*grid, |x| amp * (-((x - center) / width).powi(2)).exp()),
        InitialData::Cosine { amp, k } => {
            let kk = 2.0 * std::f64::consts::PI * *k as f64 / l;
            Field::from_fn(*grid, |x| amp * (kk * x).cos())
        }
        InitialData::SmoothPeakon { c, mollify_width } => {
            let raw = Field::from_fn(*grid, |x| c * (-x.abs()).exp());
            let sp = Spectral::new(grid);
            let mut uh = sp.forward(&raw.values);
            for (z, &k) in uh.iter_mut().zip(sp.wavenumbers()) {
                *z *= (-0.5 * (k * mollify_width).powi(2)).exp();
            }
            Field::new(*grid, sp.inverse(uh))?
        }
        InitialData::Illposed { .. } => make_illposed_datum(&data.illposed_spec().expect("illposed"), grid)?,
        InitialData::File { path } => {
            let v = crate::output::read_samples(path).map_err(io_ctx(format!("reading {}", path.display())))?;
            if v.len() != grid.n_points() {
                return Err(crate::config::ConfigError::Invalid {
                    path: "initial_data.path".into(),
                    msg: format!("{} holds {} samples, grid.N is {}", path.display(), v.len(), grid.n_points()),
                }
                .into());
            }
            Field::new(*grid, v)?
        }
    })
}

/// Every accepted state as seen by the CLI.
struct Trace {
    b_norm: Vec<f64>,
    b1: Vec<f64>,
    snapshots: Vec<PathBuf>,
    io_error: Option<RunError>,
}

fn integrate_one(
    cfg: &RunConfig,
    u0: &Field,
    solver: Solver,
    idx: &BesovIndex,
    want_b1: bool,
    dir: &Path,
) -> Result<(Evolution, Trace), RunError> {
    let snapshot_times: Vec<f64> = match cfg.output.snapshot_every {
        Some(dt) => (1..).map(|k| u0.time + k as f64 * dt).take_while(|t| *t < u0.time + cfg.time.t_end).collect(),
        None => Vec::new(),
    };
    let lp = LittlewoodPaley::new(&u0.grid, DyadicPartition::default());
    let b1_idx = BesovIndex::new(1.0, f64::INFINITY, f64::INFINITY)?;
    let mut tr = Trace {
        b_norm: Vec::new(),
        b1: Vec::new(),
        snapshots: Vec::new(),
        io_error: None,
    };
    let seen = |f: &Field, st: Option<&LagrangianState>, snap: bool, tr: &mut Trace| {
        tr.b_norm.push(lp.besov_norm(&f.values, idx));
        if want_b1 {
            tr.b1.push(lp.besov_norm(&f.values, &b1_idx));
        }
        if snap && tr.io_error.is_none() {
            match write_snapshot(dir, tr.snapshots.len(), f, st) {
                Ok(p) => tr.snapshots.push(p),
                Err(e) => tr.io_error = Some(io_ctx("writing snapshot")(e)),
            }
        }
    };
    let ev = match solver {
        Solver::Eulerian => {
            let (final_field, record) = eulerian::integrate_with(u0, &cfg.model, &cfg.time, &snapshot_times, |f, snap| {
                seen(f, None, snap, &mut tr)
            })?;
            Evolution {
                final_field,
                record,
                lagrangian: None,
            }
        }
        Solver::Lagrangian => {
            let (st, record) = integrate_lagrangian_with(u0, &cfg.model, &cfg.time, &snapshot_times, |st, snap| {
                match st.to_eulerian() {
                    Ok(f) => seen(&f, Some(st), snap, &mut tr),
                    Err(e) => {
                        tr.b_norm.push(f64::NAN);
                        if want_b1 {
                            tr.b1.push(f64::NAN);
                        }
                        if tr.io_error.is_none() {
                            tr.io_error = Some(e.into());
                        }
                    }
                }
            })?;
            Evolution {
                final_field: st.to_eulerian()?,
                record,
                lagrangian: Some(st),
            }
        }
    };
    if let Some(e) = tr.io_error.take() {
        return Err(e);
    }
    // the state at termination is always written, so a blow-up run keeps its last profile
    let final_snap = write_snapshot(dir, tr.snapshots.len(), &ev.final_field, ev.lagrangian.as_ref())
        .map_err(io_ctx("writing final snapshot"))?;
    tr.snapshots.push(final_snap);
    Ok((ev, tr))
}

fn solver_name(s: Solver) -> &'static str {
    match s {
        Solver::Eulerian => "eulerian",
        Solver::Lagrangian => "lagrangian",
    }
}

/// Run `cfg` with the given experiment, writing everything below `cfg.output.dir`.
pub fn run(cfg: &RunConfig, experiment: &Experiment) -> Result<RunResult, RunError> {
    let mut cfg = cfg.clone();
    cfg.experiment = Some(experiment.clone());
    cfg.validate()?;
    let root = cfg.output.dir.clone();
    fs::create_dir_all(&root).map_err(io_ctx(format!("creating {}", root.display())))?;
    let grid = cfg.grid.grid();
    let u0 = build_initial(&cfg.initial_data, &grid)?;
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    let mut runs = Vec::new();

    match experiment {
        Experiment::Gn { n } => {
            let fam = standard_gn_family(&grid);
            let c = gn_constant_estimate(*n, &fam)?;
            reports.push(ExperimentReport::Gn {
                n: *n,
                c_est: c,
                c_gn: GN_SAFETY * c,
                family_size: fam.len(),
            });
        }
        Experiment::Admissibility { eta, x0, f0_source } => {
            reports.push(ExperimentReport::Admissibility(eta_lambda_admissibility(&u0, &cfg.model, *eta, *x0, *f0_source)?));
        }
        _ => {
            let idx = match experiment {
                Experiment::Smalldata { p, r, .. } => BesovIndex::critical(*p, *r)?,
                Experiment::Inflation { .. } => cfg.initial_data.illposed_spec().expect("validated").index(),
                _ => BesovIndex::critical(cfg.output.besov_p, cfg.output.besov_r)?,
            };
            let want_b1 = matches!(experiment, Experiment::Inflation { .. });
            if matches!(cfg.initial_data, InitialData::Illposed { .. }) && cfg.solver != crate::config::SolverChoice::Eulerian {
                warnings.push("illposed datum on the Lagrangian solver: particles start from the band-limited samples".into());
            }
            let solvers = cfg.solver.solvers();
            let multi = solvers.len() > 1;
            let mut finals = Vec::new();
            for solver in solvers {
                let rel = if multi { PathBuf::from(solver_name(solver)) } else { PathBuf::new() };
                let dir = root.join(&rel);
                fs::create_dir_all(&dir).map_err(io_ctx(format!("creating {}", dir.display())))?;
                let (ev, tr) = integrate_one(&cfg, &u0, solver, &idx, want_b1, &dir)?;
                let status = ev.status();
                let rec = &ev.record;
                let mut extra = Vec::new();
                let report = match experiment {
                    Experiment::Simulate => Some(ExperimentReport::Simulate {
                        blowup_time: (status == Termination::BlowupDetected).then(|| rec.final_time() - u0.time),
                        last_decade_growth: last_decade_growth(rec),
                    }),
                    Experiment::Decay => Some(ExperimentReport::Decay(decay_summary(rec, cfg.model.lambda_d))),
                    Experiment::Smalldata { .. } => {
                        let r = small_data_summary(&cfg.model, rec.times.clone(), &tr.b_norm, status);
                        extra.push(ExtraColumn {
                            name: "H".into(),
                            unit: "small-data functional".into(),
                            values: r.h_trace.clone(),
                        });
                        Some(ExperimentReport::Smalldata(r))
                    }
                    Experiment::Lifespan { n, c_est } => {
                        let c = match c_est {
                            Some(c) => *c,
                            None => gn_constant_estimate(*n, &standard_gn_family(&grid))?,
                        };
                        let bound = lifespan_bound(&u0, &cfg.model, *n, c)?;
                        let observed = (status == Termination::BlowupDetected).then(|| rec.final_time() - u0.time);
                        Some(ExperimentReport::Lifespan {
                            within_bound: observed.map(|t| t <= bound.bound_t),
                            bound,
                            observed_blowup: observed,
                        })
                    }
                    Experiment::Inflation { measure_refinement } => {
                        extra.push(ExtraColumn {
                            name: "B1_inf_inf".into(),
                            unit: "B^1_(inf,inf) norm".into(),
                            values: tr.b1.clone(),
                        });
                        let traces = InflationTraces {
                            times: rec.times.clone(),
                            b1: tr.b1.clone(),
                            norm: tr.b_norm.clone(),
                        };
                        let spec = cfg.initial_data.illposed_spec().expect("validated");
                        Some(ExperimentReport::Inflation(inflation_summary(&u0, &spec, &ev, traces, *measure_refinement)?))
                    }
                    Experiment::Gn { .. } | Experiment::Admissibility { .. } => None,
                };
                write_timeseries(&dir.join("timeseries.csv"), rec, &tr.b_norm, &extra).map_err(io_ctx("writing timeseries"))?;
                let snapshots = tr.snapshots.iter().map(|p| p.strip_prefix(&root).unwrap_or(p).to_path_buf()).collect();
                finals.push((status, ev.final_field.clone()));
                runs.push(SolverRun {
                    solver,
                    status,
                    t_final: rec.final_time() - u0.time,
                    dir: rel,
                    snapshots,
                    record: ev.record,
                    report,
                });
            }
            if let Experiment::Smalldata {
                p,
                r,
                bracket: Some([lo, hi]),
                iterations,
            } = experiment
            {
                let amp = u0.max_abs();
                if amp == 0.0 {
                    warnings.push("zero datum: no amplitude bisection".into());
                } else {
                    let profile = u0.scaled(1.0 / amp);
                    let t = small_data_threshold(&profile, &cfg.model, &BesovIndex::critical(*p, *r)?, &cfg.time, *lo, *hi, *iterations)?;
                    reports.push(ExperimentReport::Threshold(t));
                }
            }
            if let [(Termination::Completed, a), (Termination::Completed, b)] = finals.as_slice() {
                let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                return finish(cfg, experiment, runs, reports, Some(d), warnings, &root);
            }
        }
    }
    finish(cfg, experiment, runs, reports, None, warnings, &root)
}

fn finish(
    cfg: RunConfig,
    experiment: &Experiment,
    runs: Vec<SolverRun>,
    reports: Vec<ExperimentReport>,
    diff: Option<f64>,
    warnings: Vec<String>,
    root: &Path,
) -> Result<RunResult, RunError> {
    let status = if runs.is_empty() {
        None
    } else {
        Some(
            runs.iter()
                .map(|r| r.status)
                .find(|s| *s != Termination::Completed)
                .unwrap_or(Termination::Completed),
        )
    };
    let result = RunResult {
        config: cfg,
        experiment: experiment.name().into(),
        runs,
        reports,
        solver_linf_difference: diff,
        status,
        exit_code: status.map_or(0, exit_code),
        warnings,
    };
    fs::write(root.join("config.toml"), crate::config::emit(&result.config)).map_err(io_ctx("writing config echo"))?;
    write_json(&root.join("report.json"), &result).map_err(io_ctx("writing report"))?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub index: usize,
    pub amplitude: f64,
    pub dir: PathBuf,
    pub status: Option<Termination>,
    pub exit_code: i32,
    pub error: Option<String>,
}

/// One run per amplitude in `cfg.sweep`, each in its own directory, plus an
/// `index.csv` listing them. Entries run in parallel on the current rayon pool.
pub fn sweep(cfg: &RunConfig, experiment: &Experiment) -> Result<Vec<SweepEntry>, RunError> {
    use rayon::prelude::*;
    cfg.validate()?;
    let amps = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| crate::config::ConfigError::Invalid {
            path: "sweep".into(),
            msg: "the sweep subcommand needs a [sweep] table with amplitudes".into(),
        })?
        .amplitudes
        .clone();
    let root = cfg.output.dir.clone();
    fs::create_dir_all(&root).map_err(io_ctx(format!("creating {}", root.display())))?;
    let entries: Vec<SweepEntry> = amps
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            let rel = PathBuf::from(format!("run_{i:03}"));
            let mut c = cfg.clone();
            c.sweep = None;
            c.output.dir = root.join(&rel);
            let (data, scale) = cfg.initial_data.with_amplitude(a);
            let out = if scale == 1.0 {
                c.initial_data = data;
                run(&c, experiment)
            } else {
                run_scaled(&c, experiment, scale)
            };
            match out {
                Ok(r) => SweepEntry {
                    index: i,
                    amplitude: a,
                    dir: rel,
                    status: r.status,
                    exit_code: r.exit_code,
                    error: None,
                },
                Err(e) => SweepEntry {
                    index: i,
                    amplitude: a,
                    dir: rel,
                    status: None,
                    exit_code: 1,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "amplitude", "dir", "status", "exit_code", "error"])
        .map_err(|e| io_ctx("writing index")(std::io::Error::other(e)))?;
    for e in &entries {
        w.write_record([
            e.index.to_string(),
            format!("{:e}", e.amplitude),
            e.dir.display().to_string(),
            e.status.map(|s| format!("{s:?}")).unwrap_or_default(),
            e.exit_code.to_string(),
            e.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| io_ctx("writing index")(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| io_ctx("writing index")(std::io::Error::other(e.to_string())))?;
    fs::write(root.join("index.csv"), bytes).map_err(io_ctx("writing index"))?;
    Ok(entries)
}

/// File data have no amplitude parameter: write the scaled samples next to
/// the run and point the config at them.
fn run_scaled(cfg: &RunConfig, experiment: &Experiment, scale: f64) -> Result<RunResult, RunError> {
    let grid = cfg.grid.grid();
    let u0 = build_initial(&cfg.initial_data, &grid)?.scaled(scale);
    fs::create_dir_all(&cfg.output.dir).map_err(io_ctx("creating run dir"))?;
    let path = write_snapshot(&cfg.output.dir, 0, &u0, None).map_err(io_ctx("writing scaled datum"))?;
    let data_path = cfg.output.dir.join("initial.csv");
    fs::rename(&path, &data_path).map_err(io_ctx("writing scaled datum"))?;
    let mut c = cfg.clone();
    c.initial_data = InitialData::File { path: data_path };
    run(&c, experiment)
}
