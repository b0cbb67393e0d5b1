use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::plan::TransformPlan;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKind {
    /// Five-cycle tone burst `sin(0.2 pi f t) sin(2 pi f t)` on `0 < f t < 5`.
    ToneBurst,
    /// First derivative of a Gaussian peaking at `f`, truncated to a window
    /// where the Gaussian is below 1e-13 of its peak.
    GaussianDerivative,
}

/// Causal, compactly supported excitation `chi(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub kind: PulseKind,
    /// Center frequency in cycles per unit time.
    pub frequency: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

const GAUSS_HALF_WIDTH: f64 = 8.0;

impl Pulse {
    pub fn new(kind: PulseKind, frequency: f64) -> Result<Self> {
        let p = Self {
            kind,
            frequency,
            amplitude: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn tone_burst(frequency: f64) -> Self {
        Self {
            kind: PulseKind::ToneBurst,
            frequency,
            amplitude: 1.0,
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.amplitude *= factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pulse frequency must be positive, got {}",
                self.frequency
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidConfig("pulse amplitude must be finite".into()));
        }
        Ok(())
    }

    fn gauss_width(&self) -> f64 {
        1.0 / (2.0 * PI * self.frequency)
    }

    /// End of the support; `chi(t) = 0` for `t >= t_end`.
    pub fn t_end(&self) -> f64 {
        match self.kind {
            PulseKind::ToneBurst => 5.0 / self.frequency,
            PulseKind::GaussianDerivative => 2.0 * GAUSS_HALF_WIDTH * self.gauss_width(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(t > 0.0 && t < self.t_end()) {
            return 0.0;
        }
        let f = self.frequency;
        let shape = match self.kind {
            PulseKind::ToneBurst => (0.2 * PI * f * t).sin() * (2.0 * PI * f * t).sin(),
            PulseKind::GaussianDerivative => {
                let tau = self.gauss_width();
                let x = (t - GAUSS_HALF_WIDTH * tau) / tau;
                -x * (0.5 * (1.0 - x * x)).exp()
            }
        };
        self.amplitude * shape
    }

    /// Samples at the record times `t_k = k dt`, `k = 1..=n`.
    pub fn sample(&self, dt: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.eval(k as f64 * dt)).collect()
    }

    /// Damped transform `chi_hat(s_j)` of the sampled pulse on the plan's
    /// half spectrum.
    pub fn spectrum(&self, plan: &TransformPlan) -> Vec<Complex64> {
        plan.forward(&self.sample(plan.dt(), plan.n_t()), 1)
    }
}

/// Indices of frequencies whose pulse weight is at least `rel` of the peak.
pub fn active_frequencies(spectrum: &[Complex64], rel: f64) -> Vec<usize> {
    let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    spectrum
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= rel * peak)
        .map(|(j, _)| j)
        .collect()
}
