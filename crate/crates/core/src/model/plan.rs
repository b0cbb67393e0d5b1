use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Time axis and damped-transform settings as they appear in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    /// Number of record samples `N_t`.
    pub n_t: usize,
    /// Record duration `T`; `dt = T / N_t`.
    pub duration: f64,
    /// Laplace abscissa; defaults to `2 / T`.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// `N_pad` is the next power of two at or above `pad_factor * N_t`.
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
}

fn default_pad() -> usize {
    2
}

impl PlanConfig {
    pub fn build(&self) -> Result<TransformPlan> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.n_t == 0 {
            return Err(Error::InvalidConfig("n_t must be positive".into()));
        }
        TransformPlan::with_padding(
            self.duration / self.n_t as f64,
            self.n_t,
            self.sigma,
            self.pad_factor,
        )
    }
}

/// Damped discrete Fourier transform on a zero-padded uniform time axis.
///
/// A record `x` whose first entry sits at time index `n0` transforms to
/// `X_j = sum_n x_n exp(i s_j t_n) dt` with `s_j = eta_j + i sigma`,
/// `eta_j = 2 pi j / (N_pad dt)` for `j = 0..=N_pad/2`. Products of transforms
/// invert to linear convolutions as long as the supports fit in `N_pad`.
#[derive(Clone)]
pub struct TransformPlan {
    dt: f64,
    n_t: usize,
    n_pad: usize,
    sigma: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TransformPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformPlan")
            .field("dt", &self.dt)
            .field("n_t", &self.n_t)
            .field("n_pad", &self.n_pad)
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl PartialEq for TransformPlan {
    fn eq(&self, other: &Self) -> bool {
        self.dt == other.dt
            && self.n_t == other.n_t
            && self.n_pad == other.n_pad
            && self.sigma == other.sigma
    }
}

impl TransformPlan {
    pub fn new(dt: f64, n_t: usize, sigma: Option<f64>) -> Result<Self> {
        Self::with_padding(dt, n_t, sigma, default_pad())
    }

    pub fn with_padding(
        dt: f64,
        n_t: usize,
        sigma: Option<f64>,
        pad_factor: usize,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if n_t == 0 {
            return Err(Error::InvalidConfig("n_t must be positive".into()));
        }
        if pad_factor < 2 {
            return Err(Error::InvalidConfig(format!(
                "pad_factor must be at least 2, got {pad_factor}"
            )));
        }
        let sigma = sigma.unwrap_or(2.0 / (dt * n_t as f64));
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let n_pad = (pad_factor * n_t).next_power_of_two();
        Ok(Self::build(dt, n_t, n_pad, sigma))
    }

    fn build(dt: f64, n_t: usize, n_pad: usize, sigma: f64) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n_pad);
        Self {
            dt,
            n_t,
            n_pad,
            sigma,
            fft,
        }
    }

    /// Same grid with `sigma = 0`, i.e. the plain discrete Fourier transform.
    pub fn undamped(&self) -> Self {
        Self {
            sigma: 0.0,
            ..self.clone()
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_pad(&self) -> usize {
        self.n_pad
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_t as f64
    }

    /// Number of retained frequencies, `N_pad / 2 + 1`.
    pub fn n_freq(&self) -> usize {
        self.n_pad / 2 + 1
    }

    pub fn d_eta(&self) -> f64 {
        2.0 * PI / (self.n_pad as f64 * self.dt)
    }

    pub fn eta(&self, j: usize) -> f64 {
        j as f64 * self.d_eta()
    }

    pub fn s(&self, j: usize) -> Complex64 {
        Complex64::new(self.eta(j), self.sigma)
    }

    /// Multiplicity of frequency `j` in the half spectrum: 1 at DC and
    /// Nyquist, 2 elsewhere.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.n_pad / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// Plancherel weight `weight(j) * d_eta / (2 pi)`.
    pub fn quad_weight(&self, j: usize) -> f64 {
        self.weight(j) / (self.n_pad as f64 * self.dt)
    }

    /// Half-spectrum damped transform of `x`, whose entry `m` sits at time
    /// index `n0 + m`.
    pub fn forward(&self, x: &[f64], n0: usize) -> Vec<Complex64> {
        assert!(
            n0 + x.len() <= self.n_pad,
            "record of length {} at offset {n0} exceeds padded length {}",
            x.len(),
            self.n_pad
        );
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_pad];
        for (m, &v) in x.iter().enumerate() {
            let n = n0 + m;
            buf[n] = Complex64::new(v * (-self.sigma * n as f64 * self.dt).exp(), 0.0);
        }
        self.fft.process(&mut buf);
        buf.truncate(self.n_freq());
        for c in &mut buf {
            *c = c.conj() * self.dt;
        }
        buf
    }

    /// Inverse of [`TransformPlan::forward`]: returns the `len` real samples at
    /// time indices `n0..n0 + len`.
    pub fn inverse(&self, spec: &[Complex64], n0: usize, len: usize) -> Vec<f64> {
        assert_eq!(spec.len(), self.n_freq(), "half spectrum length mismatch");
        assert!(n0 + len <= self.n_pad);
        let n = self.n_pad;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..spec.len()].copy_from_slice(spec);
        for j in 1..n / 2 {
            buf[n - j] = spec[j].conj();
        }
        self.fft.process(&mut buf);
        let scale = 1.0 / (n as f64 * self.dt);
        (n0..n0 + len)
            .map(|k| buf[k].re * scale * (self.sigma * k as f64 * self.dt).exp())
            .collect()
    }
}
