//! Fixed-step closed-loop simulation of the manipulator under sliding-mode
//! control.

mod integrator;
mod metrics;

pub use integrator::rk4_step;
pub use metrics::{ise, max_abs_error, SlidingDiagnostics};

use crate::control::{
    lyapunov_value, sliding_surface, smc_torque, tracking_error, ControlError, SmcGains,
    SwitchingMode,
};
use crate::dynamics::{
    forward_dynamics, mass_conditioning, DynamicsError, JointState, ManipulatorParams,
};
use crate::reference::{reference_at, ReferenceSpec};
use metrics::DiagnosticsAccumulator;
use nalgebra::{SVector, Vector3};
use thiserror::Error;

type State6 = SVector<f64, 6>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gains(#[from] ControlError),
    #[error("at t = {t:.6} s: {source}")]
    Dynamics { t: f64, source: DynamicsError },
    #[error("non-finite state at t = {t:.6} s")]
    NonFiniteState { t: f64 },
}

impl SimError {
    /// Simulation time of the failure, if it happened while integrating.
    pub fn time(&self) -> Option<f64> {
        match self {
            SimError::Dynamics { t, .. } | SimError::NonFiniteState { t } => Some(*t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceShape {
    /// Constant force over `[start, start + duration)`.
    Step,
    /// Half-sine bump of peak `magnitude` over `[start, start + duration)`.
    Pulse,
}

/// External generalized force on a single joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSpec {
    /// Joint index, 1-based.
    pub joint: usize,
    pub start: f64,
    pub duration: f64,
    pub magnitude: f64,
    pub shape: DisturbanceShape,
}

impl Default for DisturbanceSpec {
    fn default() -> Self {
        Self {
            joint: 3,
            start: 0.5,
            duration: f64::INFINITY,
            magnitude: 100.0,
            shape: DisturbanceShape::Step,
        }
    }
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(1..=3).contains(&self.joint) {
            return bad("disturbance joint must be 1, 2 or 3");
        }
        if !(self.start >= 0.0 && self.start.is_finite()) {
            return bad("disturbance start must be >= 0");
        }
        if self.duration.is_nan() || self.duration <= 0.0 {
            return bad("disturbance duration must be > 0");
        }
        if !self.magnitude.is_finite() {
            return bad("disturbance magnitude must be finite");
        }
        if self.shape == DisturbanceShape::Pulse && !self.duration.is_finite() {
            return bad("pulse disturbance needs a finite duration");
        }
        Ok(())
    }

    pub fn force_at(&self, t: f64) -> Vector3<f64> {
        let mut d = Vector3::zeros();
        let elapsed = t - self.start;
        if elapsed >= 0.0 && elapsed < self.duration {
            d[self.joint - 1] = match self.shape {
                DisturbanceShape::Step => self.magnitude,
                DisturbanceShape::Pulse => {
                    self.magnitude * (std::f64::consts::PI * elapsed / self.duration).sin()
                }
            };
        }
        d
    }
}

/// When the control law is evaluated relative to the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlUpdate {
    /// Recomputed at every Runge–Kutta stage (continuous-time controller).
    #[default]
    PerStage,
    /// Computed once at the start of each step and held.
    ZeroOrderHold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub initial: JointState,
    pub reference: ReferenceSpec,
    pub disturbance: Option<DisturbanceSpec>,
    pub switching: SwitchingMode,
    pub record_stride: usize,
    pub control_update: ControlUpdate,
    /// Start of the window used for the `e_max` metric.
    pub emax_window_start: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_final: 2.0,
            initial: JointState::new(Vector3::repeat(0.01), Vector3::zeros()),
            reference: ReferenceSpec::default(),
            disturbance: None,
            switching: SwitchingMode::Sign,
            record_stride: 10,
            control_update: ControlUpdate::PerStage,
            emax_window_start: 0.3,
        }
    }
}

impl SimConfig {
    /// Short, coarse horizon used for GA fitness evaluation.
    pub fn fitness_default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
            record_stride: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return bad(format!("t_final must be >= dt (got {})", self.t_final));
        }
        if self.record_stride < 1 {
            return bad("record_stride must be >= 1".into());
        }
        if !self.initial.is_finite() {
            return bad("initial state must be finite".into());
        }
        if !self.emax_window_start.is_finite() {
            return bad("emax_window_start must be finite".into());
        }
        self.reference.validate().map_err(SimError::InvalidConfig)?;
        self.switching
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if let Some(d) = &self.disturbance {
            d.validate()?;
        }
        Ok(())
    }

    /// Number of integration steps covering `[0, t_final]`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt + 1e-9).floor() as usize
    }

    pub fn expected_rows(&self) -> usize {
        self.steps() / self.record_stride + 1
    }

    fn disturbance_at(&self, t: f64) -> Vector3<f64> {
        self.disturbance
            .map_or_else(Vector3::zeros, |d| d.force_at(t))
    }
}

/// One recorded sample of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRow {
    pub t: f64,
    pub q: Vector3<f64>,
    pub v: Vector3<f64>,
    pub q_ref: Vector3<f64>,
    pub e: Vector3<f64>,
    pub edot: Vector3<f64>,
    pub s: Vector3<f64>,
    /// Controller torque at this sample (excludes the disturbance).
    pub tau: Vector3<f64>,
    pub lyapunov: f64,
    pub mass_det: f64,
    pub mass_cond: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub ise: f64,
    pub e_max_window_start: f64,
    /// Per-joint max |e| over `t >= e_max_window_start`; `None` if the window is empty.
    pub e_max: Option<Vector3<f64>>,
    pub sliding: SlidingDiagnostics,
    pub min_abs_mass_det: f64,
    pub mass_det_sign_changes: usize,
    pub max_mass_cond: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub rows: Vec<SimRow>,
    pub metrics: SimMetrics,
}

impl SimResult {
    /// Wraps externally built rows, computing the row-derived metrics.
    pub fn from_rows(rows: Vec<SimRow>, e_max_window_start: f64) -> Self {
        let mut result = SimResult {
            rows,
            metrics: SimMetrics {
                ise: 0.0,
                e_max_window_start,
                e_max: None,
                sliding: SlidingDiagnostics::default(),
                min_abs_mass_det: f64::INFINITY,
                mass_det_sign_changes: 0,
                max_mass_cond: 0.0,
            },
        };
        result.refresh_row_metrics();
        result
    }

    fn refresh_row_metrics(&mut self) {
        let ise = ise(self);
        let e_max = max_abs_error(self, self.metrics.e_max_window_start);
        let m = &mut self.metrics;
        m.ise = ise;
        m.e_max = e_max;
        m.min_abs_mass_det = self
            .rows
            .iter()
            .map(|r| r.mass_det.abs())
            .fold(f64::INFINITY, f64::min);
        m.max_mass_cond = self.rows.iter().map(|r| r.mass_cond).fold(0.0, f64::max);
        m.mass_det_sign_changes = self
            .rows
            .windows(2)
            .filter(|w| (w[0].mass_det < 0.0) != (w[1].mass_det < 0.0))
            .count();
    }
}

fn pack(s: &JointState) -> State6 {
    State6::from_iterator(s.q.iter().chain(s.v.iter()).copied())
}

fn unpack(x: &State6) -> JointState {
    JointState::new(
        x.fixed_rows::<3>(0).into_owned(),
        x.fixed_rows::<3>(3).into_owned(),
    )
}

fn derivative(state: &JointState, accel: Vector3<f64>) -> State6 {
    State6::from_iterator(state.v.iter().chain(accel.iter()).copied())
}

/// Runs the closed loop over `[0, t_final]`.
///
/// Identical inputs give bit-identical results.
pub fn simulate(
    gains: &SmcGains,
    cfg: &SimConfig,
    p: &ManipulatorParams,
) -> Result<SimResult, SimError> {
    cfg.validate()?;
    gains.validate()?;
    p.validate()
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;

    let n_steps = cfg.steps();
    let mut rows = Vec::with_capacity(cfg.expected_rows());
    let mut diag = DiagnosticsAccumulator::new(gains, cfg.switching, cfg.dt);
    let mut x = pack(&cfg.initial);
    let dyn_err = |t: f64| move |source: DynamicsError| SimError::Dynamics { t, source };

    for k in 0..=n_steps {
        let t = k as f64 * cfg.dt;
        let state = unpack(&x);
        if !state.is_finite() {
            return Err(SimError::NonFiniteState { t });
        }
        let r = reference_at(t, &cfg.reference);
        let (e, edot) = tracking_error(&r.pos, &r.vel, &state);
        let s = sliding_surface(&e, &edot, gains);
        let tau = smc_torque(&state, &r, gains, cfg.switching, p)?;
        diag.push(&s);

        if k % cfg.record_stride == 0 {
            let (mass_det, mass_cond) = mass_conditioning(&state.q, p);
            rows.push(SimRow {
                t,
                q: state.q,
                v: state.v,
                q_ref: r.pos,
                e,
                edot,
                s,
                tau,
                lyapunov: lyapunov_value(&s),
                mass_det,
                mass_cond,
            });
        }
        if k == n_steps {
            break;
        }

        x = match cfg.control_update {
            ControlUpdate::PerStage => rk4_step(
                |ts, xs| {
                    let st = unpack(xs);
                    let rs = reference_at(ts, &cfg.reference);
                    let u = smc_torque(&st, &rs, gains, cfg.switching, p)?;
                    let a = forward_dynamics(&st, &u, &cfg.disturbance_at(ts), p)
                        .map_err(dyn_err(ts))?;
                    Ok(derivative(&st, a))
                },
                t,
                &x,
                cfg.dt,
            )?,
            ControlUpdate::ZeroOrderHold => rk4_step(
                |ts, xs| {
                    let st = unpack(xs);
                    let a = forward_dynamics(&st, &tau, &cfg.disturbance_at(ts), p)
                        .map_err(dyn_err(ts))?;
                    Ok(derivative(&st, a))
                },
                t,
                &x,
                cfg.dt,
            )?,
        };
    }

    let mut result = SimResult::from_rows(rows, cfg.emax_window_start);
    result.metrics.sliding = diag.finish();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{gravity_vector, velocity_forces};

    fn on_trajectory(reference: &ReferenceSpec) -> JointState {
        let r = reference_at(0.0, reference);
        JointState::new(r.pos, r.vel)
    }

    #[test]
    fn row_count_and_uniform_spacing() {
        let cfg = SimConfig {
            t_final: 0.2,
            ..Default::default()
        };
        let res = simulate(&SmcGains::TABLE2, &cfg, &ManipulatorParams::default()).unwrap();
        assert_eq!(res.rows.len(), 201);
        assert_eq!(res.rows.len(), cfg.expected_rows());
        for w in res.rows.windows(2) {
            assert!((w[1].t - w[0].t - 1e-3).abs() < 1e-12);
        }
        for r in &res.rows {
            assert_eq!(r.lyapunov, lyapunov_value(&r.s));
        }
    }

    #[test]
    fn on_trajectory_start_stays_on_trajectory() {
        let cfg0 = SimConfig::default();
        let cfg = SimConfig {
            initial: on_trajectory(&cfg0.reference),
            t_final: 1.0,
            ..cfg0
        };
        let gains = SmcGains {
            lambda: [7.0, 300.0, 0.5],
            ..SmcGains::BASELINE
        };
        let res = simulate(&gains, &cfg, &ManipulatorParams::default()).unwrap();
        let worst = res.rows.iter().map(|r| r.e.abs().max()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "max error {worst}");
    }

    #[test]
    fn disturbance_is_causal() {
        let cfg = SimConfig {
            t_final: 0.7,
            ..Default::default()
        };
        let disturbed = SimConfig {
            disturbance: Some(DisturbanceSpec::default()),
            ..cfg
        };
        let p = ManipulatorParams::default();
        let a = simulate(&SmcGains::TABLE2, &cfg, &p).unwrap();
        let b = simulate(&SmcGains::TABLE2, &disturbed, &p).unwrap();
        let mut differs_later = false;
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            if ra.t < 0.5 {
                assert_eq!(ra.tau, rb.tau, "t = {}", ra.t);
                assert_eq!(ra.e, rb.e, "t = {}", ra.t);
            } else if ra.e != rb.e {
                differs_later = true;
            }
        }
        assert!(differs_later);
    }

    #[test]
    fn open_loop_force_balance_holds_still() {
        // With v = 0 the velocity forces vanish, so τ = G keeps the arm at rest.
        let p = ManipulatorParams::default();
        let start = JointState::new(Vector3::new(0.4, -0.2, 0.3), Vector3::zeros());
        let tau = velocity_forces(&start.q, &start.v, &p) + gravity_vector(&p);
        let dt = 1e-3;
        let mut x = pack(&start);
        for k in 0..1000 {
            x = rk4_step(
                |_, xs| {
                    let st = unpack(xs);
                    Ok(derivative(
                        &st,
                        forward_dynamics(&st, &tau, &Vector3::zeros(), &p).unwrap(),
                    ))
                },
                k as f64 * dt,
                &x,
                dt,
            )
            .unwrap();
        }
        assert!((x - pack(&start)).abs().max() < 1e-9);
    }

    #[test]
    fn identical_inputs_are_bit_identical() {
        let cfg = SimConfig {
            t_final: 0.3,
            disturbance: Some(DisturbanceSpec {
                start: 0.1,
                ..Default::default()
            }),
            ..Default::default()
        };
        let p = ManipulatorParams::default();
        let a = simulate(&SmcGains::TABLE2, &cfg, &p).unwrap();
        let b = simulate(&SmcGains::TABLE2, &cfg, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let p = ManipulatorParams::default();
        let g = SmcGains::TABLE2;
        for cfg in [
            SimConfig {
                dt: -1.0,
                ..Default::default()
            },
            SimConfig {
                t_final: 1e-5,
                ..Default::default()
            },
            SimConfig {
                record_stride: 0,
                ..Default::default()
            },
            SimConfig {
                switching: SwitchingMode::Saturation { phi: 0.0 },
                ..Default::default()
            },
            SimConfig {
                disturbance: Some(DisturbanceSpec {
                    joint: 4,
                    ..Default::default()
                }),
                ..Default::default()
            },
            SimConfig {
                disturbance: Some(DisturbanceSpec {
                    shape: DisturbanceShape::Pulse,
                    ..Default::default()
                }),
                ..Default::default()
            },
        ] {
            assert!(
                matches!(simulate(&g, &cfg, &p), Err(SimError::InvalidConfig(_))),
                "{cfg:?}"
            );
        }
        let bad_gains = SmcGains {
            c: [1.0, 0.0, 1.0, 1.0, 1.0, 1.0],
            lambda: [1.0; 3],
        };
        assert!(matches!(
            simulate(&bad_gains, &SimConfig::default(), &p),
            Err(SimError::Gains(_))
        ));
    }

    #[test]
    fn singular_plant_surfaces_with_timestamp() {
        // The arm starts exactly on the M11 = 0 surface with zero coupling terms.
        let p = ManipulatorParams::default();
        let q = Vector3::new(0.0, 0.0, p.i3 / (4.0 * p.m2));
        let cfg = SimConfig {
            initial: JointState::new(q, Vector3::zeros()),
            t_final: 0.01,
            ..Default::default()
        };
        let err = simulate(&SmcGains::BASELINE, &cfg, &p).unwrap_err();
        assert!(
            matches!(
                err,
                SimError::Dynamics {
                    source: DynamicsError::SingularMassMatrix { .. },
                    ..
                }
            ),
            "{err}"
        );
        assert_eq!(err.time(), Some(0.0));
    }

    #[test]
    fn disturbance_shapes() {
        let step = DisturbanceSpec {
            joint: 2,
            start: 1.0,
            duration: 0.5,
            magnitude: 7.0,
            shape: DisturbanceShape::Step,
        };
        assert_eq!(step.force_at(0.99), Vector3::zeros());
        assert_eq!(step.force_at(1.2), Vector3::new(0.0, 7.0, 0.0));
        assert_eq!(step.force_at(1.5), Vector3::zeros());
        let pulse = DisturbanceSpec {
            shape: DisturbanceShape::Pulse,
            ..step
        };
        assert!((pulse.force_at(1.25)[1] - 7.0).abs() < 1e-12);
        assert!(pulse.force_at(1.0)[1].abs() < 1e-12);
    }

    #[test]
    fn zero_order_hold_mode_runs() {
        let cfg = SimConfig {
            t_final: 0.02,
            control_update: ControlUpdate::ZeroOrderHold,
            ..Default::default()
        };
        let res = simulate(&SmcGains::TABLE2, &cfg, &ManipulatorParams::default()).unwrap();
        assert!(res.rows.last().unwrap().e.abs().max() < 0.99);
    }
}
