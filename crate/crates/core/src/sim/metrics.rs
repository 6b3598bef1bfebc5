use super::SimResult;
use crate::control::{SmcGains, SwitchingMode};
use nalgebra::Vector3;

/// Trapezoidal `∫ (e₁² + e₂² + e₃²) dt` over the recorded rows.
pub fn ise(result: &SimResult) -> f64 {
    result
        .rows
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].e.norm_squared() + w[1].e.norm_squared()))
        .sum()
}

/// Per-joint max |eᵢ| over rows with `t >= window_start`, or `None` if no row
/// falls in the window.
pub fn max_abs_error(result: &SimResult, window_start: f64) -> Option<Vector3<f64>> {
    result
        .rows
        .iter()
        .filter(|r| r.t >= window_start)
        .map(|r| r.e.abs())
        .reduce(|acc, e| acc.sup(&e))
}

/// Finite-difference checks of the reaching law and the sliding condition.
///
/// Only samples outside the chattering band `|sᵢ| > max(φ, 2λᵢ·dt)` are
/// counted; inside it the switching term flips within a step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlidingDiagnostics {
    pub samples_outside_band: [usize; 3],
    /// Median of `|Δsᵢ/dt + λᵢσ(sᵢ)| / λᵢ`; `None` for joints with no samples or λᵢ = 0.
    pub reaching_residual_median: [Option<f64>; 3],
    /// Fraction of counted samples with `sᵢṡᵢ > −(λᵢ/2)|sᵢ|`.
    pub lyapunov_violation_fraction: f64,
}

pub(super) struct DiagnosticsAccumulator {
    lambda: [f64; 3],
    band: [f64; 3],
    mode: SwitchingMode,
    dt: f64,
    prev: Option<Vector3<f64>>,
    residuals: [Vec<f64>; 3],
    violations: usize,
}

impl DiagnosticsAccumulator {
    pub(super) fn new(gains: &SmcGains, mode: SwitchingMode, dt: f64) -> Self {
        let band = gains
            .lambda
            .map(|l| (2.0 * l * dt).max(mode.boundary_layer()));
        Self {
            lambda: gains.lambda,
            band,
            mode,
            dt,
            prev: None,
            residuals: Default::default(),
            violations: 0,
        }
    }

    pub(super) fn push(&mut self, s: &Vector3<f64>) {
        if let Some(prev) = self.prev {
            for j in 0..3 {
                if prev[j].abs() <= self.band[j] {
                    continue;
                }
                let sdot = (s[j] - prev[j]) / self.dt;
                let lam = self.lambda[j];
                self.residuals[j].push((sdot + lam * self.mode.apply(prev[j])).abs() / lam);
                if prev[j] * sdot > -0.5 * lam * prev[j].abs() {
                    self.violations += 1;
                }
            }
        }
        self.prev = Some(*s);
    }

    pub(super) fn finish(self) -> SlidingDiagnostics {
        let samples_outside_band = self.residuals.each_ref().map(Vec::len);
        let total: usize = samples_outside_band.iter().sum();
        let lambda = self.lambda;
        let mut j = 0;
        let reaching_residual_median = self.residuals.map(|mut r| {
            let lam = lambda[j];
            j += 1;
            (lam > 0.0 && !r.is_empty()).then(|| median(&mut r))
        });
        SlidingDiagnostics {
            samples_outside_band,
            reaching_residual_median,
            lyapunov_violation_fraction: if total == 0 {
                0.0
            } else {
                self.violations as f64 / total as f64
            },
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
