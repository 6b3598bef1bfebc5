//! Flat `key = value` run configuration.
//!
//! Lines are trimmed, `#` starts a comment, and decimal numbers always use `.`.
//! Unknown or repeated keys are errors; missing keys keep their defaults.
//! Vector values are comma-separated.

use smcga_core::ga::GENES;
use smcga_core::sim::ControlUpdate;
use smcga_core::{
    DisturbanceShape, DisturbanceSpec, GaConfig, ManipulatorParams, SimConfig, SmcGains,
    SwitchingMode, Vector3,
};
use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Where a gain vector comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GainsSource {
    Table2,
    Baseline,
    Inline([f64; GENES]),
    File(PathBuf),
}

impl GainsSource {
    pub fn parse(value: &str) -> Result<Self, String> {
        match value {
            "table2" => return Ok(GainsSource::Table2),
            "baseline" => return Ok(GainsSource::Baseline),
            _ => {}
        }
        if value.contains(',') {
            let v = parse_list(value)?;
            let arr: [f64; GENES] = v
                .try_into()
                .map_err(|v: Vec<f64>| format!("expected 9 gains, got {}", v.len()))?;
            Ok(GainsSource::Inline(arr))
        } else {
            Ok(GainsSource::File(PathBuf::from(value)))
        }
    }

    /// Resolves to concrete gains; files are read as config fragments and
    /// must carry an inline `gains = ...` entry.
    pub fn resolve(&self) -> Result<SmcGains, ConfigError> {
        let values = match self {
            GainsSource::Table2 => return Ok(SmcGains::TABLE2),
            GainsSource::Baseline => return Ok(SmcGains::BASELINE),
            GainsSource::Inline(v) => *v,
            GainsSource::File(path) => {
                let text = read(path)?;
                let entries = parse_entries(&text, &path.display().to_string())?;
                let (line, _, value) =
                    entries
                        .iter()
                        .find(|(_, k, _)| k == "gains")
                        .ok_or_else(|| {
                            ConfigError::Validation(format!(
                                "{} has no `gains` entry",
                                path.display()
                            ))
                        })?;
                match GainsSource::parse(value) {
                    Ok(GainsSource::File(_)) | Err(_) => {
                        return Err(ConfigError::Parse {
                            source_name: path.display().to_string(),
                            line: *line,
                            msg: "gains file must list 9 comma-separated values".into(),
                        })
                    }
                    Ok(inner) => return inner.resolve(),
                }
            }
        };
        SmcGains::from_slice(&values).map_err(|e| ConfigError::Validation(e.to_string()))
    }
}

/// Everything a workflow needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ManipulatorParams,
    pub sim: SimConfig,
    pub ga: GaConfig,
    pub fitness_dt: f64,
    pub fitness_t_final: f64,
    pub gains: GainsSource,
    /// Second controller for `compare`.
    pub gains_b: GainsSource,
    pub out_dir: PathBuf,
    /// Boundary layer used whenever `switching = saturation`.
    pub phi: f64,
    /// Shape applied to the `disturbance` entry.
    pub disturbance_shape: DisturbanceShape,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fitness = SimConfig::fitness_default();
        Self {
            params: ManipulatorParams::default(),
            sim: SimConfig::default(),
            ga: GaConfig::default(),
            fitness_dt: fitness.dt,
            fitness_t_final: fitness.t_final,
            gains: GainsSource::Table2,
            gains_b: GainsSource::Baseline,
            out_dir: PathBuf::from("out"),
            phi: DEFAULT_PHI,
            disturbance_shape: DisturbanceShape::Step,
        }
    }
}

impl RunConfig {
    /// Nominal closed loop used as GA fitness: the simulation settings with
    /// the fitness step and horizon, every step recorded, no disturbance.
    pub fn fitness_config(&self) -> SimConfig {
        SimConfig {
            dt: self.fitness_dt,
            t_final: self.fitness_t_final,
            record_stride: 1,
            disturbance: None,
            ..self.sim
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = |e: String| ConfigError::Validation(e);
        self.params.validate().map_err(|e| v(e.to_string()))?;
        self.sim.validate().map_err(|e| v(e.to_string()))?;
        self.ga.validate().map_err(|e| v(e.to_string()))?;
        self.fitness_config()
            .validate()
            .map_err(|e| v(format!("fitness_dt / fitness_t_final: {e}")))?;
        for g in [&self.gains, &self.gains_b] {
            if let GainsSource::Inline(values) = g {
                SmcGains::from_slice(values).map_err(|e| v(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let num = || parse_f64(value);
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| format!("expected a non-negative integer, got `{value}`"))
        };
        match key {
            "m1" => self.params.m1 = num()?,
            "m2" => self.params.m2 = num()?,
            "m3" => self.params.m3 = num()?,
            "i3" => self.params.i3 = num()?,
            "g" => self.params.g = num()?,
            "friction" => self.params.friction = parse_vec3(value)?,
            "regularize_mass" => self.params.regularize_mass = num()?,

            "dt" => self.sim.dt = num()?,
            "t_final" => self.sim.t_final = num()?,
            "record_stride" => self.sim.record_stride = count()?,
            "q0" => self.sim.initial.q = parse_vec3(value)?,
            "v0" => self.sim.initial.v = parse_vec3(value)?,
            "switching" => {
                self.sim.switching = match value {
                    "sign" => SwitchingMode::Sign,
                    "saturation" => SwitchingMode::Saturation { phi: self.phi },
                    _ => {
                        return Err(format!(
                            "switching must be `sign` or `saturation`, got `{value}`"
                        ))
                    }
                }
            }
            "phi" => {
                let phi = num()?;
                self.phi = phi;
                if let SwitchingMode::Saturation { .. } = self.sim.switching {
                    self.sim.switching = SwitchingMode::Saturation { phi };
                }
            }
            "control_update" => {
                self.sim.control_update = match value {
                    "stage" => ControlUpdate::PerStage,
                    "zoh" => ControlUpdate::ZeroOrderHold,
                    _ => {
                        return Err(format!(
                            "control_update must be `stage` or `zoh`, got `{value}`"
                        ))
                    }
                }
            }
            "emax_window_start" => self.sim.emax_window_start = num()?,
            "ref_amplitude" => self.sim.reference.amplitude = num()?,
            "ref_omega" => self.sim.reference.angular_frequency = num()?,
            "ref_phase" => self.sim.reference.phase = num()?,
            "disturbance" => {
                self.sim.disturbance = parse_disturbance(value, self.disturbance_shape)?
            }
            "disturbance_shape" => {
                let shape = match value {
                    "step" => DisturbanceShape::Step,
                    "pulse" => DisturbanceShape::Pulse,
                    _ => {
                        return Err(format!(
                            "disturbance_shape must be `step` or `pulse`, got `{value}`"
                        ))
                    }
                };
                self.disturbance_shape = shape;
                if let Some(d) = self.sim.disturbance.as_mut() {
                    d.shape = shape;
                }
            }

            "population_size" => self.ga.population_size = count()?,
            "max_generations" => self.ga.max_generations = count()?,
            "crossover_rate" => self.ga.crossover_rate = num()?,
            "mutation_rate" => self.ga.mutation_rate = num()?,
            "gene_bounds" => {
                let v = parse_list(value)?;
                self.ga.gene_bounds = match v.as_slice() {
                    [lo, hi] => [(*lo, *hi); GENES],
                    _ if v.len() == 2 * GENES => std::array::from_fn(|i| (v[2 * i], v[2 * i + 1])),
                    _ => return Err("gene_bounds takes `low,high` or 9 `low,high` pairs".into()),
                };
            }
            "convergence_threshold" => self.ga.convergence_threshold = num()?,
            "elitism" => self.ga.elitism = count()?,
            "tournament_size" => self.ga.tournament_size = count()?,
            "seed" => {
                self.ga.seed = value
                    .parse()
                    .map_err(|_| format!("seed must be a 64-bit integer, got `{value}`"))?
            }
            "workers" => self.ga.workers = count()?,
            "fitness_dt" => self.fitness_dt = num()?,
            "fitness_t_final" => self.fitness_t_final = num()?,

            "gains" => self.gains = GainsSource::parse(value)?,
            "gains_b" => self.gains_b = GainsSource::parse(value)?,
            "out" => self.out_dir = PathBuf::from(value),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

/// Boundary-layer half-width used when `switching = saturation` has no `phi`.
pub const DEFAULT_PHI: f64 = 0.01;

/// Keys accepted by [`load_config`], in documentation order.
pub const KEYS: &[&str] = &[
    "m1",
    "m2",
    "m3",
    "i3",
    "g",
    "friction",
    "regularize_mass",
    "dt",
    "t_final",
    "record_stride",
    "q0",
    "v0",
    "switching",
    "phi",
    "control_update",
    "emax_window_start",
    "ref_amplitude",
    "ref_omega",
    "ref_phase",
    "disturbance",
    "disturbance_shape",
    "population_size",
    "max_generations",
    "crossover_rate",
    "mutation_rate",
    "gene_bounds",
    "convergence_threshold",
    "elitism",
    "tournament_size",
    "seed",
    "workers",
    "fitness_dt",
    "fitness_t_final",
    "gains",
    "gains_b",
    "out",
];

fn parse_f64(value: &str) -> Result<f64, String> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("expected a number, got `{value}`"))
}

fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    value.split(',').map(parse_f64).collect()
}

fn parse_vec3(value: &str) -> Result<Vector3<f64>, String> {
    let v = parse_list(value)?;
    match v.as_slice() {
        [a, b, c] => Ok(Vector3::new(*a, *b, *c)),
        [a] => Ok(Vector3::repeat(*a)),
        _ => Err(format!(
            "expected 1 or 3 comma-separated values, got {}",
            v.len()
        )),
    }
}

/// `none` or `joint,start,magnitude[,duration]`.
pub fn parse_disturbance(
    value: &str,
    shape: DisturbanceShape,
) -> Result<Option<DisturbanceSpec>, String> {
    if value == "none" {
        return Ok(None);
    }
    let fields: Vec<&str> = value.split(',').map(str::trim).collect();
    if !(3..=4).contains(&fields.len()) {
        return Err("disturbance takes `none` or `joint,start,magnitude[,duration]`".into());
    }
    let joint = fields[0]
        .parse::<usize>()
        .map_err(|_| format!("bad disturbance joint `{}`", fields[0]))?;
    Ok(Some(DisturbanceSpec {
        joint,
        start: parse_f64(fields[1])?,
        magnitude: parse_f64(fields[2])?,
        duration: fields.get(3).map_or(Ok(f64::INFINITY), |d| parse_f64(d))?,
        shape,
    }))
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

type Entry = (usize, String, String);

fn parse_entries(text: &str, source_name: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| ConfigError::Parse {
            source_name: source_name.to_string(),
            line,
            msg,
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(err("missing key".into()));
        }
        if !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Builds a [`RunConfig`] from config text plus command-line overrides, which
/// take precedence.
pub fn parse_config(
    text: &str,
    source_name: &str,
    overrides: &[(String, String)],
) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (line, key, value) in parse_entries(text, source_name)? {
        cfg.set(&key, &value).map_err(|msg| ConfigError::Parse {
            source_name: source_name.to_string(),
            line,
            msg,
        })?;
    }
    for (key, value) in overrides {
        cfg.set(key, value)
            .map_err(|msg| ConfigError::Validation(format!("option {key}: {msg}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    load_config_with_overrides(Some(path), &[])
}

pub fn load_config_with_overrides(
    path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<RunConfig, ConfigError> {
    match path {
        Some(p) => parse_config(&read(p)?, &p.display().to_string(), overrides),
        None => parse_config("", "<defaults>", overrides),
    }
}
