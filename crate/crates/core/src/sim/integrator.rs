use super::SimError;
use nalgebra::SVector;

/// One classical fourth-order Runge–Kutta step.
///
/// `deriv` may fail (e.g. on a singular mass matrix); the error is passed
/// through unchanged. A step producing a NaN or infinite component yields
/// [`SimError::NonFiniteState`] stamped with the end-of-step time.
pub fn rk4_step<const N: usize, F>(
    mut deriv: F,
    t: f64,
    x: &SVector<f64, N>,
    dt: f64,
) -> Result<SVector<f64, N>, SimError>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, SimError>,
{
    let half = 0.5 * dt;
    let k1 = deriv(t, x)?;
    let k2 = deriv(t + half, &(x + k1 * half))?;
    let k3 = deriv(t + half, &(x + k2 * half))?;
    let k4 = deriv(t + dt, &(x + k3 * dt))?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(SimError::NonFiniteState { t: t + dt })
    }
}
