//! Run configuration: TOML in, validated [`RunConfig`] out.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wdch::besov::{AnnularBump, BesovIndex, IllposedDatumSpec};
use wdch::harness::{F0Source, Solver};
use wdch::{ModelParams, PeriodicGrid, TimeStepperConfig};

/// A config problem, tagged with the dotted path of the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

fn invalid(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
}

impl GridConfig {
    pub fn grid(&self) -> PeriodicGrid {
        PeriodicGrid::new(self.length, self.n_points).expect("validated grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    #[default]
    Eulerian,
    Lagrangian,
    Both,
}

impl SolverChoice {
    pub fn solvers(self) -> Vec<Solver> {
        match self {
            SolverChoice::Eulerian => vec![Solver::Eulerian],
            SolverChoice::Lagrangian => vec![Solver::Lagrangian],
            SolverChoice::Both => vec![Solver::Eulerian, Solver::Lagrangian],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Gaussian {
        amp: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// `amp cos(2 pi k x / L)`, `k` a mode number so the datum is periodic.
    Cosine { amp: f64, k: u32 },
    /// `c e^{-|x|}` convolved with a Gaussian of standard deviation `mollify_width`.
    SmoothPeakon { c: f64, mollify_width: f64 },
    Illposed {
        #[serde(with = "wdch::serde_ext::ext_real")]
        r_index: f64,
        levels: u32,
        target_eps: f64,
        #[serde(default = "two", with = "wdch::serde_ext::ext_real")]
        p: f64,
        #[serde(default)]
        mollifier: AnnularBump,
    },
    /// CSV with an `x,u` header (or a single `u` column), one row per node.
    File { path: PathBuf },
}

fn two() -> f64 {
    2.0
}

impl InitialData {
    pub fn illposed_spec(&self) -> Option<IllposedDatumSpec> {
        match *self {
            InitialData::Illposed {
                r_index,
                levels,
                target_eps,
                p,
                mollifier,
            } => Some(IllposedDatumSpec {
                r_index,
                levels,
                target_eps,
                p,
                mollifier,
            }),
            _ => None,
        }
    }

    /// The same datum with its amplitude parameter replaced (used by sweeps).
    /// File data have no amplitude; `a` scales the samples instead.
    pub fn with_amplitude(&self, a: f64) -> (InitialData, f64) {
        let mut out = self.clone();
        let mut scale = 1.0;
        match &mut out {
            InitialData::Gaussian { amp, .. } | InitialData::Cosine { amp, .. } => *amp = a,
            InitialData::SmoothPeakon { c, .. } => *c = a,
            InitialData::Illposed { target_eps, .. } => *target_eps = a,
            InitialData::File { .. } => scale = a,
        }
        (out, scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Simulate,
    Decay,
    Smalldata {
        #[serde(default = "two", with = "wdch::serde_ext::ext_real")]
        p: f64,
        #[serde(default = "one", with = "wdch::serde_ext::ext_real")]
        r: f64,
        /// Amplitude bracket `[lo, hi]` for the threshold bisection.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bracket: Option<[f64; 2]>,
        #[serde(default = "eight")]
        iterations: u32,
    },
    Lifespan {
        #[serde(default = "one_u32")]
        n: u32,
        /// Gagliardo-Nirenberg constant; estimated on the grid when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_est: Option<f64>,
    },
    Admissibility {
        eta: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        f0_source: F0Source,
    },
    Inflation {
        #[serde(default = "one_usize")]
        measure_refinement: usize,
    },
    Gn {
        #[serde(default = "one_u32")]
        n: u32,
    },
}

fn one() -> f64 {
    1.0
}
fn one_u32() -> u32 {
    1
}
fn one_usize() -> usize {
    1
}
fn eight() -> u32 {
    8
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Decay => "decay",
            Experiment::Smalldata { .. } => "smalldata",
            Experiment::Lifespan { .. } => "lifespan",
            Experiment::Admissibility { .. } => "admissibility",
            Experiment::Inflation { .. } => "inflation",
            Experiment::Gn { .. } => "gn",
        }
    }

    /// Defaults for a subcommand given without an `[experiment]` table.
    pub fn default_for(name: &str) -> Option<Experiment> {
        Some(match name {
            "simulate" => Experiment::Simulate,
            "decay" => Experiment::Decay,
            "smalldata" => Experiment::Smalldata {
                p: 2.0,
                r: 1.0,
                bracket: None,
                iterations: 8,
            },
            "lifespan" => Experiment::Lifespan { n: 1, c_est: None },
            "inflation" => Experiment::Inflation { measure_refinement: 1 },
            "gn" => Experiment::Gn { n: 1 },
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Snapshot spacing in time; only the final state is written when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    /// Index `(p, r)` of the critical Besov norm in the `B_norm` column.
    #[serde(default = "two", with = "wdch::serde_ext::ext_real")]
    pub besov_p: f64,
    #[serde(default = "one", with = "wdch::serde_ext::ext_real")]
    pub besov_r: f64,
}

fn default_dir() -> PathBuf {
    PathBuf::from("wdch-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            snapshot_every: None,
            besov_p: 2.0,
            besov_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_solver_field")]
    pub solver: SolverChoice,
    #[serde(default)]
    pub model: ModelParams,
    pub grid: GridConfig,
    pub time: TimeStepperConfig,
    pub initial_data: InitialData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_solver_field() -> SolverChoice {
    SolverChoice::Eulerian
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate().map_err(|e| invalid("model", e.to_string()))?;
        let g = &self.grid;
        if !(g.length > 0.0 && g.length.is_finite()) {
            return Err(invalid("grid.L", format!("must be positive and finite (got {})", g.length)));
        }
        if !g.n_points.is_power_of_two() {
            return Err(invalid("grid.N", format!("grid.N must be a power of two (got {})", g.n_points)));
        }
        if g.n_points < 8 {
            return Err(invalid("grid.N", format!("grid.N must be at least 8 (got {})", g.n_points)));
        }
        self.time.validate().map_err(|e| invalid("time", e.to_string()))?;
        self.validate_data()?;
        if let Some(e) = &self.experiment {
            self.validate_experiment(e)?;
        }
        let o = &self.output;
        if let Some(dt) = o.snapshot_every {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("output.snapshot_every", format!("must be positive (got {dt})")));
            }
        }
        BesovIndex::new(1.0 + 1.0 / o.besov_p, o.besov_p, o.besov_r).map_err(|e| invalid("output.besov_p", e.to_string()))?;
        if let Some(s) = &self.sweep {
            if s.amplitudes.is_empty() {
                return Err(invalid("sweep.amplitudes", "must not be empty"));
            }
            if let Some(a) = s.amplitudes.iter().find(|a| !a.is_finite()) {
                return Err(invalid("sweep.amplitudes", format!("non-finite entry {a}")));
            }
        }
        Ok(())
    }

    fn validate_data(&self) -> Result<(), ConfigError> {
        let path = "initial_data";
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(&format!("{path}.{name}"), format!("must be finite (got {v})")))
            }
        };
        match &self.initial_data {
            InitialData::Gaussian { amp, width, center } => {
                finite("amp", *amp)?;
                finite("center", *center)?;
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(invalid("initial_data.width", format!("must be positive (got {width})")));
                }
            }
            InitialData::Cosine { amp, k } => {
                finite("amp", *amp)?;
                if 3 * *k as usize >= self.grid.n_points {
                    return Err(invalid("initial_data.k", format!("mode {k} lies outside the dealiased band")));
                }
            }
            InitialData::SmoothPeakon { c, mollify_width } => {
                finite("c", *c)?;
                if !(*mollify_width > 0.0 && mollify_width.is_finite()) {
                    return Err(invalid(
                        "initial_data.mollify_width",
                        format!("must be positive (got {mollify_width})"),
                    ));
                }
            }
            InitialData::Illposed { .. } => {
                let spec = self.initial_data.illposed_spec().expect("illposed");
                spec.validate().map_err(|e| invalid(path, e.to_string()))?;
                spec.check_resolution(&self.grid.grid()).map_err(|e| invalid(path, e.to_string()))?;
            }
            InitialData::File { path: p } => {
                if p.as_os_str().is_empty() {
                    return Err(invalid("initial_data.path", "must not be empty"));
                }
            }
        }
        Ok(())
    }

    fn validate_experiment(&self, e: &Experiment) -> Result<(), ConfigError> {
        match e {
            Experiment::Smalldata { p, r, bracket, .. } => {
                BesovIndex::critical(*p, *r).map_err(|err| invalid("experiment.p", err.to_string()))?;
                if let Some([lo, hi]) = bracket {
                    if !(0.0 < *lo && lo < hi && hi.is_finite()) {
                        return Err(invalid("experiment.bracket", format!("need 0 < lo < hi (got [{lo}, {hi}])")));
                    }
                }
            }
            Experiment::Lifespan { n, .. } | Experiment::Gn { n } if *n < 1 => {
                return Err(invalid("experiment.n", "must be >= 1"));
            }
            Experiment::Lifespan { c_est: Some(c), .. } if !(*c > 0.0 && c.is_finite()) => {
                return Err(invalid("experiment.c_est", format!("must be positive (got {c})")));
            }
            Experiment::Admissibility { eta, x0, .. } => {
                if !(*eta > 0.0 && eta.is_finite()) {
                    return Err(invalid("experiment.eta", format!("must be positive (got {eta})")));
                }
                if !(x0.abs() < self.grid.length / 2.0) {
                    return Err(invalid("experiment.x0", format!("must lie inside the box (got {x0})")));
                }
            }
            Experiment::Inflation { measure_refinement } => {
                if !measure_refinement.is_power_of_two() {
                    return Err(invalid(
                        "experiment.measure_refinement",
                        format!("must be a power of two (got {measure_refinement})"),
                    ));
                }
                if self.initial_data.illposed_spec().is_none() {
                    return Err(invalid("initial_data.kind", "the inflation experiment needs kind = \"illposed\""));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn emit(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
lambda_d = 0.5

[grid]
L = 40.0
N = 256

[time]
t_end = 1.0

[initial_data]
kind = "gaussian"
amp = 0.1
width = 1.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.solver, SolverChoice::Eulerian);
        assert_eq!(c.time.rtol, 1e-8);
        assert_eq!(c.output, OutputConfig::default());
        assert!(c.experiment.is_none());
        assert_eq!(
            c.initial_data,
            InitialData::Gaussian {
                amp: 0.1,
                width: 1.0,
                center: 0.0
            }
        );
    }

    #[test]
    fn n_not_power_of_two() {
        let err = parse_config(&MINIMAL.replace("N = 256", "N = 1000")).unwrap_err();
        assert!(err.to_string().contains("grid.N must be a power of two"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_time_are_reported() {
        let err = parse_config(&MINIMAL.replace("t_end = 1.0", "t_end = 1.0\nbogus = 2")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = parse_config(&MINIMAL.replace("t_end = 1.0", "t_end = 1.0\ndt_min = 0.0")).unwrap_err();
        assert!(err.to_string().starts_with("time:"), "{err}");
    }

    #[test]
    fn round_trip_of_every_experiment() {
        let exps = [
            "kind = \"decay\"",
            "kind = \"smalldata\"\nbracket = [0.01, 2.0]\nr = \"inf\"",
            "kind = \"lifespan\"\nn = 2\nc_est = 0.9",
            "kind = \"admissibility\"\neta = 1.0\nf0_source = { kind = \"min_slope\" }",
            "kind = \"gn\"",
        ];
        for e in exps {
            let text = format!("{MINIMAL}\n[experiment]\n{e}\n");
            let c = parse_config(&text).unwrap();
            assert_eq!(parse_config(&emit(&c)).unwrap(), c, "{e}");
        }
        let ill = MINIMAL
            .replace("kind = \"gaussian\"\namp = 0.1\nwidth = 1.0", "kind = \"illposed\"\nr_index = 2.0\nlevels = 2\ntarget_eps = 1.0")
            .replace("N = 256", "N = 1024");
        let c = parse_config(&format!("{ill}\n[experiment]\nkind = \"inflation\"\nmeasure_refinement = 4\n")).unwrap();
        assert_eq!(parse_config(&emit(&c)).unwrap(), c);
        let err = parse_config(&format!("{MINIMAL}\n[experiment]\nkind = \"inflation\"\n")).unwrap_err();
        assert!(err.to_string().contains("illposed"));
    }
}
