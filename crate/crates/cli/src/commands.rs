use crate::config::RunConfig;
use crate::output::{fmt_num, gains_fragment, history_csv, summary_text, trace_csv};
use crate::CliError;
use smcga_core::ga::{run_ga, GaReport};
use smcga_core::sim::{max_abs_error, simulate, SimResult};
use smcga_core::{DisturbanceSpec, SimConfig, SmcGains, Vector3};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Runs one closed-loop simulation; writes `trace.csv` and `summary.txt`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimResult, CliError> {
    let gains = cfg.gains.resolve()?;
    let result = simulate(&gains, &cfg.sim, &cfg.params)?;
    ensure_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir, "trace.csv", &trace_csv(&result))?;
    write_file(&cfg.out_dir, "summary.txt", &summary_text(&result))?;
    Ok(result)
}

/// Runs the GA; writes `ga_history.csv` and `best_gains.cfg`.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<GaReport, CliError> {
    let report = run_ga(&cfg.ga, &cfg.fitness_config(), &cfg.params)?;
    let best = SmcGains::from_slice(&report.best.genes);
    ensure_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir, "ga_history.csv", &history_csv(&report))?;
    match best {
        Ok(gains) => {
            write_file(
                &cfg.out_dir,
                "best_gains.cfg",
                &gains_fragment(&gains, &report),
            )?;
        }
        Err(e) => {
            log::warn!("best individual is outside the controller domain ({e}); best_gains.cfg not written");
            return Err(CliError::NoValidGains(e.to_string()));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    A,
    B,
    Tie,
}

impl Winner {
    pub fn label(self) -> &'static str {
        match self {
            Winner::A => "a",
            Winner::B => "b",
            Winner::Tie => "tie",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub disturbance: DisturbanceSpec,
    /// Post-disturbance per-joint max |e|; `None` when the window is empty.
    pub e_max_a: Option<Vector3<f64>>,
    pub e_max_b: Option<Vector3<f64>>,
    pub winners: Option<[Winner; 3]>,
    pub overall: Option<Winner>,
}

/// Post-disturbance per-joint max |e|.
pub fn post_disturbance_error(
    result: &SimResult,
    sim: &SimConfig,
    d: &DisturbanceSpec,
) -> Option<Vector3<f64>> {
    if d.start >= sim.t_final {
        None
    } else {
        max_abs_error(result, d.start)
    }
}

/// Runs both controllers under the same disturbance; writes `trace_a.csv`,
/// `trace_b.csv` and `compare.txt`. Without a configured disturbance the
/// default joint-3 step is used.
pub fn cmd_compare(
    cfg: &RunConfig,
    gains_a: &SmcGains,
    gains_b: &SmcGains,
) -> Result<Comparison, CliError> {
    let disturbance = cfg.sim.disturbance.unwrap_or_default();
    let sim = SimConfig {
        disturbance: Some(disturbance),
        ..cfg.sim
    };
    let a = simulate(gains_a, &sim, &cfg.params)?;
    let b = simulate(gains_b, &sim, &cfg.params)?;

    let e_max_a = post_disturbance_error(&a, &sim, &disturbance);
    let e_max_b = post_disturbance_error(&b, &sim, &disturbance);
    let winners = e_max_a.zip(e_max_b).map(|(ea, eb)| {
        std::array::from_fn(|j| {
            if ea[j] < eb[j] {
                Winner::A
            } else if eb[j] < ea[j] {
                Winner::B
            } else {
                Winner::Tie
            }
        })
    });
    let overall = winners.map(|w: [Winner; 3]| {
        let wins_a = w.iter().filter(|&&x| x == Winner::A).count();
        let wins_b = w.iter().filter(|&&x| x == Winner::B).count();
        match wins_a.cmp(&wins_b) {
            std::cmp::Ordering::Greater => Winner::A,
            std::cmp::Ordering::Less => Winner::B,
            std::cmp::Ordering::Equal => Winner::Tie,
        }
    });
    let cmp = Comparison {
        disturbance,
        e_max_a,
        e_max_b,
        winners,
        overall,
    };

    ensure_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir, "trace_a.csv", &trace_csv(&a))?;
    write_file(&cfg.out_dir, "trace_b.csv", &trace_csv(&b))?;
    write_file(
        &cfg.out_dir,
        "compare.txt",
        &compare_text(&cmp, gains_a, gains_b),
    )?;
    Ok(cmp)
}

fn compare_text(cmp: &Comparison, gains_a: &SmcGains, gains_b: &SmcGains) -> String {
    let d = &cmp.disturbance;
    let list = |g: &SmcGains| g.to_array().map(fmt_num).join(",");
    let mut out = String::new();
    let _ = writeln!(out, "gains_a = {}", list(gains_a));
    let _ = writeln!(out, "gains_b = {}", list(gains_b));
    let _ = writeln!(
        out,
        "disturbance = joint {}, start {}, magnitude {}, duration {}, shape {}",
        d.joint,
        fmt_num(d.start),
        fmt_num(d.magnitude),
        fmt_num(d.duration),
        format!("{:?}", d.shape).to_lowercase()
    );
    match (cmp.e_max_a, cmp.e_max_b, cmp.winners) {
        (Some(ea), Some(eb), Some(w)) => {
            let _ = writeln!(out, "window = t >= {}", fmt_num(d.start));
            let _ = writeln!(out, "joint,e_max_a,e_max_b,winner");
            for j in 0..3 {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    j + 1,
                    fmt_num(ea[j]),
                    fmt_num(eb[j]),
                    w[j].label()
                );
            }
            let _ = writeln!(
                out,
                "overall = {}",
                cmp.overall.unwrap_or(Winner::Tie).label()
            );
        }
        _ => {
            let _ = writeln!(out, "no disturbance window");
        }
    }
    out
}
