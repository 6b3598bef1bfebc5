//! Sinusoidal joint-space reference shared by all three joints.

use nalgebra::Vector3;
use std::f64::consts::{FRAC_PI_2, PI};

/// Desired position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSample {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub acc: Vector3<f64>,
}

/// `A·sin(ωt + φ)` on every joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSpec {
    pub amplitude: f64,
    pub angular_frequency: f64,
    pub phase: f64,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            angular_frequency: 2.0 * PI,
            phase: FRAC_PI_2,
        }
    }
}

impl ReferenceSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.amplitude.is_finite() && self.phase.is_finite()) {
            return Err("reference amplitude and phase must be finite".into());
        }
        if !(self.angular_frequency > 0.0 && self.angular_frequency.is_finite()) {
            return Err("reference angular frequency must be > 0".into());
        }
        Ok(())
    }
}

pub fn reference_at(t: f64, spec: &ReferenceSpec) -> RefSample {
    let (a, w) = (spec.amplitude, spec.angular_frequency);
    let (s, c) = (w * t + spec.phase).sin_cos();
    RefSample {
        pos: Vector3::repeat(a * s),
        vel: Vector3::repeat(a * w * c),
        acc: Vector3::repeat(-a * w * w * s),
    }
}
