//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints a PASS/FAIL line; exits non-zero if any fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smcga_cli::{cmd_optimize, cmd_simulate, parse_config};
use smcga_core::dynamics::{
    forward_dynamics, inverse_dynamics, mass_matrix, velocity_forces, DynamicsError,
};
use smcga_core::ga::run_ga;
use smcga_core::sim::{max_abs_error, simulate};
use smcga_core::{
    DisturbanceSpec, GaConfig, JointState, ManipulatorParams, SimConfig, SmcGains, Vector3,
};
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn nominal_config() -> SimConfig {
    SimConfig {
        record_stride: 1,
        ..SimConfig::default()
    }
}

fn nominal_tracking() -> Outcome {
    let p = ManipulatorParams::default();
    let started = Instant::now();
    let res = match simulate(&SmcGains::TABLE2, &nominal_config(), &p) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("simulation failed: {e}")),
    };
    let elapsed = started.elapsed();
    let e_max = max_abs_error(&res, 0.3).expect("window is non-empty");
    let e0 = res.rows[0].e.abs();
    let peak = max_abs_error(&res, 0.0).unwrap();
    let bounded = (0..3).all(|j| peak[j] <= e0[j]);
    let pass = e_max.max() <= 0.01 && bounded && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!(
            "e_max[0.3,2] = ({:.3e}, {:.3e}, {:.3e}) <= 0.01; max|e| = {:.4} <= |e(0)| = {:.4}: {bounded}; runtime {:.3} s < 5 s",
            e_max[0], e_max[1], e_max[2], peak.max(), e0.min(), elapsed.as_secs_f64()
        ),
    )
}

fn reaching_law() -> Outcome {
    let res = simulate(
        &SmcGains::TABLE2,
        &nominal_config(),
        &ManipulatorParams::default(),
    )
    .unwrap();
    let d = &res.metrics.sliding;
    let medians: Vec<f64> = d
        .reaching_residual_median
        .iter()
        .map(|m| m.unwrap_or(f64::INFINITY))
        .collect();
    let pass = medians.iter().all(|&m| m < 0.05);
    outcome(
        pass,
        format!(
            "median residual = ({:.3e}, {:.3e}, {:.3e}) < 0.05 over {:?} samples",
            medians[0], medians[1], medians[2], d.samples_outside_band
        ),
    )
}

fn lyapunov_condition() -> Outcome {
    let res = simulate(
        &SmcGains::TABLE2,
        &nominal_config(),
        &ManipulatorParams::default(),
    )
    .unwrap();
    let f = res.metrics.sliding.lyapunov_violation_fraction;
    outcome(f < 0.01, format!("violation fraction = {f:.3e} < 0.01"))
}

fn disturbance_robustness() -> Outcome {
    let p = ManipulatorParams::default();
    let d = DisturbanceSpec::default();
    let cfg = SimConfig {
        disturbance: Some(d),
        ..nominal_config()
    };
    let post = |g: &SmcGains| {
        let res = simulate(g, &cfg, &p).unwrap();
        max_abs_error(&res, d.start).unwrap()[2]
    };
    let (tuned, baseline) = (post(&SmcGains::TABLE2), post(&SmcGains::BASELINE));
    let ratio = baseline / tuned;
    outcome(
        tuned < baseline && ratio >= 2.0,
        format!("joint-3 post-disturbance e_max: tuned {tuned:.4e}, baseline {baseline:.4e}, ratio {ratio:.1} >= 2"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ga_effectiveness() -> Outcome {
    let p = ManipulatorParams::default();
    let fitness = SimConfig::fitness_default();
    let (mut first, mut last) = (Vec::new(), Vec::new());
    let mut monotone = true;
    let mut in_bounds = true;
    let mut slowest = Duration::ZERO;
    for seed in 0..10 {
        let cfg = GaConfig {
            seed,
            ..GaConfig::default()
        };
        let started = Instant::now();
        let report = run_ga(&cfg, &fitness, &p).unwrap();
        slowest = slowest.max(started.elapsed());
        monotone &= report
            .history
            .windows(2)
            .all(|w| w[1].best_fitness <= w[0].best_fitness);
        in_bounds &= report
            .best
            .genes
            .iter()
            .zip(cfg.gene_bounds)
            .all(|(g, (lo, hi))| (lo..=hi).contains(g));
        first.push(report.history[0].best_fitness);
        last.push(report.history.last().unwrap().best_fitness);
    }
    let (m0, mf) = (median(first), median(last));
    let pass = monotone && in_bounds && mf <= 0.01 * m0 && slowest < Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "10 seeds: monotone {monotone}, in bounds {in_bounds}, median best {mf:.4e} / gen-0 {m0:.4e} = {:.3}% <= 1%, slowest run {:.1} s",
            100.0 * mf / m0,
            slowest.as_secs_f64()
        ),
    )
}

fn dynamics_oracle() -> Outcome {
    let p = ManipulatorParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut draw = |b: f64| Vector3::from_fn(|_, _| rng.random_range(-b..=b));
    let (mut accepted, mut worst) = (0, 0.0f64);
    while accepted < 1000 {
        let s = JointState::new(draw(2.0), draw(2.0));
        let a = draw(2.0);
        let tau = inverse_dynamics(&s.q, &s.v, &a, &p);
        match forward_dynamics(&s, &tau, &Vector3::zeros(), &p) {
            Ok(back) => {
                worst = worst.max((back - a).amax());
                accepted += 1;
            }
            Err(DynamicsError::SingularMassMatrix { .. }) => {}
            Err(e) => return outcome(false, format!("unexpected error {e}")),
        }
    }

    // Hand evaluation from the default masses: m1 + m2 = 48.999627,
    // m1 - m2 = 23.735183, sin 0.5 cos 0.5 = 0.4207354924.
    let sc = 0.5f64.sin() * 0.5f64.cos();
    let m = |q: [f64; 3]| mass_matrix(&Vector3::from(q), &p);
    let zero = m([0.0, 0.0, 0.0]);
    let quarter = m([std::f64::consts::FRAC_PI_2, 0.0, 0.0]);
    let half = m([0.5, 0.0, 0.2]);
    let vf1 = velocity_forces(
        &Vector3::new(0.0, 0.0, 0.1),
        &Vector3::new(1.0, 0.0, 0.0),
        &p,
    );
    let vf2 = velocity_forces(
        &Vector3::new(std::f64::consts::FRAC_PI_4, 0.0, 0.0),
        &Vector3::new(0.0, 0.0, 1.0),
        &p,
    );
    let checks = [
        (zero[(0, 0)], 1.0),
        (zero[(1, 1)], 23.735183),
        (zero[(2, 2)], 25.264444),
        (quarter[(2, 2)], 72.734810),
        (half[(0, 2)], 48.999627 * sc * 0.2),
        (half[(2, 0)], 36.367405 * sc),
        (vf1[0], -1.2632222),
        (vf1[2], -2.5264444),
        (vf2[0], -23.735183 * std::f64::consts::FRAC_1_SQRT_2),
    ];
    let entry_err = checks
        .iter()
        .map(|(got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-9 && entry_err < 1e-6,
        format!("round trip max error {worst:.2e} < 1e-9 over 1000 states; hand entries max error {entry_err:.2e} < 1e-6"),
    )
}

fn integrator_order() -> Outcome {
    // With λ = 0 and e(0) = 0.99, ė(0) = 0 the exact error stays at 0.99.
    let p = ManipulatorParams::default();
    let gains = SmcGains::new(SmcGains::BASELINE.c, [0.0; 3]).unwrap();
    let err = |dt: f64| {
        let cfg = SimConfig {
            dt,
            t_final: 1.0,
            record_stride: 1,
            ..SimConfig::default()
        };
        let res = simulate(&gains, &cfg, &p).unwrap();
        res.rows
            .iter()
            .map(|r| (r.e.add_scalar(-0.99)).amax())
            .fold(0.0, f64::max)
    };
    let errs = [err(0.02), err(0.01), err(0.005)];
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    let order = orders[0].min(orders[1]);
    outcome(
        order >= 3.8,
        format!(
            "errors {:.3e}, {:.3e}, {:.3e} at dt 0.02/0.01/0.005; observed order {:.3}, {:.3} >= 3.8",
            errs[0], errs[1], errs[2], orders[0], orders[1]
        ),
    )
}

fn determinism() -> Outcome {
    let run = |text: &str, optimize: bool| {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = parse_config(text, "acceptance", &[]).unwrap();
        cfg.out_dir = dir.path().to_path_buf();
        let files: &[&str] = if optimize {
            cmd_optimize(&cfg).unwrap();
            &["ga_history.csv", "best_gains.cfg"]
        } else {
            cmd_simulate(&cfg).unwrap();
            &["trace.csv", "summary.txt"]
        };
        files
            .iter()
            .map(|f| fs::read(dir.path().join(f)).unwrap())
            .collect::<Vec<_>>()
    };
    let sim_text = "disturbance = 3,0.5,100\n";
    let sim_same = run(sim_text, false) == run(sim_text, false);
    let ga = |workers: usize| format!("seed = 11\nmax_generations = 40\nworkers = {workers}\n");
    let reference = run(&ga(1), true);
    let ga_same = reference == run(&ga(1), true);
    let ga_workers = [2, 4].iter().all(|&w| run(&ga(w), true) == reference);
    outcome(
        sim_same && ga_same && ga_workers,
        format!("simulate rerun identical: {sim_same}; optimize rerun identical: {ga_same}; workers 1/2/4 identical: {ga_workers}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("AC1 nominal tracking", nominal_tracking),
        ("AC2 reaching law", reaching_law),
        ("AC3 Lyapunov condition", lyapunov_condition),
        ("AC4 disturbance robustness", disturbance_robustness),
        ("AC5 GA effectiveness", ga_effectiveness),
        ("AC6 dynamics oracle", dynamics_oracle),
        ("AC7 integrator order", integrator_order),
        ("AC8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = check();
        failed += usize::from(!result.pass);
        println!(
            "[{}] {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
