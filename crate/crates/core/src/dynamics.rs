//! Equations of motion of the 3-DOF cylindrical manipulator.
//!
//! Joint 1 is revolute (θ₁, rad); joints 2 and 3 are prismatic (q₂, q₃, m).
//! The plant is
//!
//! ```text
//! M(q) q̈ + C₂(q)·[v₁², v₂², v₃²] + C₃(q)·[v₁v₂, v₁v₃, v₂v₃] + F v + G = τ − d
//! ```
//!
//! with the matrices used exactly as given, without symmetrization. The model
//! is asymmetric and `M(q)` is not positive definite everywhere; it becomes
//! singular on several surfaces crossed by the nominal reference trajectory.
//! The controller uses the same model, so the closed loop stays model-matched.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Relative determinant threshold below which `M(q)` is treated as singular.
pub const SINGULAR_DET_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("singular mass matrix at q = [{:.6}, {:.6}, {:.6}] (det = {det:e})", q[0], q[1], q[2])]
    SingularMassMatrix { q: [f64; 3], det: f64 },
    #[error("invalid manipulator parameter: {0}")]
    InvalidParams(String),
}

/// Physical constants of the manipulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulatorParams {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// Moment of inertia of joint 3 (kg·m²).
    pub i3: f64,
    pub g: f64,
    /// Diagonal viscous friction coefficients.
    pub friction: Vector3<f64>,
    /// When positive, `εI` is added to `M(q)` in forward dynamics whenever the
    /// determinant falls below the singularity threshold.
    pub regularize_mass: f64,
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        Self {
            m1: 36.367405,
            m2: 12.632222,
            m3: 23.735183,
            i3: 1.0,
            g: 9.8,
            friction: Vector3::zeros(),
            regularize_mass: 0.0,
        }
    }
}

impl ManipulatorParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: &str| Err(DynamicsError::InvalidParams(msg.to_string()));
        let all = [
            self.m1,
            self.m2,
            self.m3,
            self.i3,
            self.g,
            self.regularize_mass,
        ];
        if all
            .iter()
            .chain(self.friction.iter())
            .any(|x| !x.is_finite())
        {
            return bad("all parameters must be finite");
        }
        if self.m1 <= 0.0 || self.m2 <= 0.0 || self.m3 <= 0.0 {
            return bad("masses m1, m2, m3 must be > 0");
        }
        if self.i3 <= 0.0 {
            return bad("i3 must be > 0");
        }
        if self.g < 0.0 {
            return bad("g must be >= 0");
        }
        if self.friction.iter().any(|&f| f < 0.0) {
            return bad("friction coefficients must be >= 0");
        }
        if self.regularize_mass < 0.0 {
            return bad("regularize_mass must be >= 0");
        }
        Ok(())
    }
}

/// Generalized positions and velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub q: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl JointState {
    pub fn new(q: Vector3<f64>, v: Vector3<f64>) -> Self {
        Self { q, v }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

pub fn mass_matrix(q: &Vector3<f64>, p: &ManipulatorParams) -> Matrix3<f64> {
    let (s, c) = q[0].sin_cos();
    let q3 = q[2];
    let (m1, m2) = (p.m1, p.m2);
    #[rustfmt::skip]
    let m = Matrix3::new(
        (4.0 * m1 * s - 4.0 * m2 * c) * q3 + p.i3, 0.0,  (m1 + m2) * s * c * q3,
        0.0,                                        p.m3, 0.0,
        m1 * s * c,                                 0.0,  2.0 * (m1 * s + m2 * c),
    );
    m
}

/// Velocity-product forces `C(q, q̇) q̇`.
pub fn velocity_forces(q: &Vector3<f64>, v: &Vector3<f64>, p: &ManipulatorParams) -> Vector3<f64> {
    let (s, c) = q[0].sin_cos();
    let q3 = q[2];
    let (m1, m2) = (p.m1, p.m2);
    let a = m1 * s - m2 * c;
    let msc = (m1 + m2) * s * c;
    #[rustfmt::skip]
    let c_sq = Matrix3::new(
        a * q3,             0.0, -m1 * c + m2 * s,
        0.0,                0.0, 0.0,
        2.0 * q3 * a,       0.0, 0.0,
    );
    #[rustfmt::skip]
    let c_cross = Matrix3::new(
        0.0, -msc * q3, 0.0,
        0.0, 0.0,       0.0,
        0.0, -msc,      0.0,
    );
    let squares = v.component_mul(v);
    let cross = Vector3::new(v[0] * v[1], v[0] * v[2], v[1] * v[2]);
    c_sq * squares + c_cross * cross
}

pub fn gravity_vector(p: &ManipulatorParams) -> Vector3<f64> {
    Vector3::new(0.0, p.g * (p.m2 + p.m3), 0.0)
}

/// Magnitude of `det M` for a well-conditioned matrix of the same size.
fn det_scale(m: &Matrix3<f64>) -> f64 {
    m.norm().powi(3)
}

/// Returns true when `m` is numerically singular relative to its own scale.
pub fn is_singular(m: &Matrix3<f64>) -> bool {
    let det = m.determinant();
    det.is_nan() || det.abs() <= SINGULAR_DET_TOLERANCE * det_scale(m)
}

/// Solves `M(q) q̈ = τ − n(q, v) − F v − G − d` for the joint accelerations.
pub fn forward_dynamics(
    state: &JointState,
    tau: &Vector3<f64>,
    d_ext: &Vector3<f64>,
    p: &ManipulatorParams,
) -> Result<Vector3<f64>, DynamicsError> {
    let mut m = mass_matrix(&state.q, p);
    if is_singular(&m) && p.regularize_mass > 0.0 {
        m += Matrix3::identity() * p.regularize_mass;
    }
    if is_singular(&m) {
        return Err(DynamicsError::SingularMassMatrix {
            q: state.q.into(),
            det: m.determinant(),
        });
    }
    let rhs = tau
        - velocity_forces(&state.q, &state.v, p)
        - p.friction.component_mul(&state.v)
        - gravity_vector(p)
        - d_ext;
    m.lu().solve(&rhs).ok_or(DynamicsError::SingularMassMatrix {
        q: state.q.into(),
        det: m.determinant(),
    })
}

/// Torque required to realize acceleration `a` from state `(q, v)`.
pub fn inverse_dynamics(
    q: &Vector3<f64>,
    v: &Vector3<f64>,
    a: &Vector3<f64>,
    p: &ManipulatorParams,
) -> Vector3<f64> {
    mass_matrix(q, p) * a
        + velocity_forces(q, v, p)
        + p.friction.component_mul(v)
        + gravity_vector(p)
}

/// Determinant and 1-norm condition number of `M(q)`.
///
/// The condition number is infinite when the matrix cannot be inverted.
pub fn mass_conditioning(q: &Vector3<f64>, p: &ManipulatorParams) -> (f64, f64) {
    let m = mass_matrix(q, p);
    let det = m.determinant();
    let norm1 = |x: &Matrix3<f64>| {
        x.column_iter()
            .map(|c| c.iter().map(|e| e.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let cond = match m.try_inverse() {
        Some(inv) if det != 0.0 => norm1(&m) * norm1(&inv),
        _ => f64::INFINITY,
    };
    (det, cond)
}
