//! Sliding-mode tracking controller.
//!
//! Each joint `i` has a surface `sᵢ = c_odd·eᵢ + c_even·ėᵢ` and the reaching law
//! `ṡᵢ = −λᵢ σ(sᵢ)`. Solving that law for the joint acceleration gives the
//! commanded acceleration
//!
//! ```text
//! aᶜᵢ = q̈dᵢ + (c_odd / c_even)·ėᵢ + (λᵢ / c_even)·σ(sᵢ)
//! ```
//!
//! which is realized through the inverse dynamics of the plant model. With a
//! matched model and no disturbance the reaching law then holds exactly.

use crate::dynamics::{inverse_dynamics, JointState, ManipulatorParams};
use crate::reference::RefSample;
use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("gain domain error: {0}")]
    GainDomain(String),
}

/// The nine tunable parameters: surface coefficients `c₁..c₆` and switching
/// gains `λ₁..λ₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcGains {
    pub c: [f64; 6],
    pub lambda: [f64; 3],
}

impl SmcGains {
    /// Reference tuned gains (c₁..c₆, λ₁..λ₃); the `table2` preset.
    pub const TABLE2: SmcGains = SmcGains {
        c: [2.1815, 0.0008, 2.2091, 0.0012, 1.6590, 0.0002],
        lambda: [52.0574, 47.3860, 49.9532],
    };

    /// Hand-tuned comparison controller.
    pub const BASELINE: SmcGains = SmcGains {
        c: [5.0, 1.0, 5.0, 1.0, 5.0, 1.0],
        lambda: [10.0, 10.0, 10.0],
    };

    pub fn new(c: [f64; 6], lambda: [f64; 3]) -> Result<Self, ControlError> {
        let g = Self { c, lambda };
        g.validate()?;
        Ok(g)
    }

    /// Builds gains from a flat `[c₁..c₆, λ₁..λ₃]` vector.
    pub fn from_slice(v: &[f64]) -> Result<Self, ControlError> {
        if v.len() != 9 {
            return Err(ControlError::GainDomain(format!(
                "expected 9 gains, got {}",
                v.len()
            )));
        }
        let mut c = [0.0; 6];
        let mut lambda = [0.0; 3];
        c.copy_from_slice(&v[..6]);
        lambda.copy_from_slice(&v[6..]);
        Self::new(c, lambda)
    }

    pub fn to_array(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[..6].copy_from_slice(&self.c);
        out[6..].copy_from_slice(&self.lambda);
        out
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if self.c.iter().chain(&self.lambda).any(|x| !x.is_finite()) {
            return Err(ControlError::GainDomain("gains must be finite".into()));
        }
        for j in 0..3 {
            if self.c_even(j) <= 0.0 {
                return Err(ControlError::GainDomain(format!(
                    "c{} must be > 0 (got {})",
                    2 * j + 2,
                    self.c_even(j)
                )));
            }
            if self.c_odd(j) < 0.0 {
                return Err(ControlError::GainDomain(format!(
                    "c{} must be >= 0",
                    2 * j + 1
                )));
            }
            if self.lambda[j] < 0.0 {
                return Err(ControlError::GainDomain(format!(
                    "lambda{} must be >= 0",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// Error coefficient of joint `j` (c₁, c₃, c₅).
    pub fn c_odd(&self, j: usize) -> f64 {
        self.c[2 * j]
    }

    /// Error-rate coefficient of joint `j` (c₂, c₄, c₆).
    pub fn c_even(&self, j: usize) -> f64 {
        self.c[2 * j + 1]
    }

    pub fn lambda_vec(&self) -> Vector3<f64> {
        Vector3::from(self.lambda)
    }
}

/// Switching function used in the reaching law.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SwitchingMode {
    #[default]
    Sign,
    /// `clamp(s / phi, −1, 1)` inside a boundary layer of half-width `phi`.
    Saturation { phi: f64 },
}

impl SwitchingMode {
    pub fn validate(&self) -> Result<(), ControlError> {
        match *self {
            SwitchingMode::Sign => Ok(()),
            SwitchingMode::Saturation { phi } if phi > 0.0 && phi.is_finite() => Ok(()),
            SwitchingMode::Saturation { phi } => Err(ControlError::GainDomain(format!(
                "boundary layer phi must be > 0 (got {phi})"
            ))),
        }
    }

    pub fn apply(&self, s: f64) -> f64 {
        match *self {
            SwitchingMode::Sign => sign(s),
            SwitchingMode::Saturation { phi } => (s / phi).clamp(-1.0, 1.0),
        }
    }

    /// Half-width of the linear region, zero for pure switching.
    pub fn boundary_layer(&self) -> f64 {
        match *self {
            SwitchingMode::Sign => 0.0,
            SwitchingMode::Saturation { phi } => phi,
        }
    }
}

/// Signum with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Desired minus actual position and velocity.
pub fn tracking_error(
    ref_pos: &Vector3<f64>,
    ref_vel: &Vector3<f64>,
    state: &JointState,
) -> (Vector3<f64>, Vector3<f64>) {
    (ref_pos - state.q, ref_vel - state.v)
}

pub fn sliding_surface(e: &Vector3<f64>, edot: &Vector3<f64>, g: &SmcGains) -> Vector3<f64> {
    Vector3::from_fn(|j, _| g.c_odd(j) * e[j] + g.c_even(j) * edot[j])
}

/// Joint accelerations that enforce the reaching law on the matched model.
pub fn commanded_acceleration(
    state: &JointState,
    reference: &RefSample,
    g: &SmcGains,
    mode: SwitchingMode,
) -> Result<Vector3<f64>, ControlError> {
    g.validate()?;
    let (e, edot) = tracking_error(&reference.pos, &reference.vel, state);
    let s = sliding_surface(&e, &edot, g);
    Ok(Vector3::from_fn(|j, _| {
        let ce = g.c_even(j);
        reference.acc[j] + g.c_odd(j) / ce * edot[j] + g.lambda[j] / ce * mode.apply(s[j])
    }))
}

pub fn smc_torque(
    state: &JointState,
    reference: &RefSample,
    g: &SmcGains,
    mode: SwitchingMode,
    p: &ManipulatorParams,
) -> Result<Vector3<f64>, ControlError> {
    let a = commanded_acceleration(state, reference, g, mode)?;
    Ok(inverse_dynamics(&state.q, &state.v, &a, p))
}

/// `V = ½‖s‖²`.
pub fn lyapunov_value(s: &Vector3<f64>) -> f64 {
    0.5 * s.norm_squared()
}

/// `V̇ = sᵀṡ`.
pub fn lyapunov_rate(s: &Vector3<f64>, sdot: &Vector3<f64>) -> f64 {
    s.dot(sdot)
}
