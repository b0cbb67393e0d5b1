use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wave physics carried by the model. Both share every interface; they differ
/// in the number of displacement components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Out-of-plane shear (SH) waves: scalar displacement, speed `c_s`.
    AntiplaneScalar,
    /// In-plane P-SV elastodynamics: two displacement components.
    InplaneElastic,
}

/// Homogeneous isotropic background in dimensionless units: density and
/// shear modulus are both one, so `c_s = 1` and `c_p = sqrt(lambda + 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumModel {
    pub mode: Mode,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    2.0
}

impl MediumModel {
    pub fn new(mode: Mode, lambda: f64) -> Result<Self> {
        let m = Self { mode, lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn antiplane() -> Self {
        Self {
            mode: Mode::AntiplaneScalar,
            lambda: default_lambda(),
        }
    }

    pub fn inplane(lambda: f64) -> Result<Self> {
        Self::new(Mode::InplaneElastic, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "Lame lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        1.0
    }

    pub fn mu(&self) -> f64 {
        1.0
    }

    pub fn cs(&self) -> f64 {
        (self.mu() / self.rho()).sqrt()
    }

    pub fn cp(&self) -> f64 {
        ((self.lambda + 2.0 * self.mu()) / self.rho()).sqrt()
    }

    /// Displacement components: 1 for anti-plane, 2 for in-plane.
    pub fn dim(&self) -> usize {
        match self.mode {
            Mode::AntiplaneScalar => 1,
            Mode::InplaneElastic => 2,
        }
    }

    /// Fastest body-wave speed, i.e. the one that bounds first arrivals.
    pub fn fastest_speed(&self) -> f64 {
        match self.mode {
            Mode::AntiplaneScalar => self.cs(),
            Mode::InplaneElastic => self.cp(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speeds_and_dimension() {
        let a = MediumModel::antiplane();
        assert_eq!(a.dim(), 1);
        assert_eq!(a.cs(), 1.0);

        let e = MediumModel::inplane(1.0).unwrap();
        assert_eq!(e.dim(), 2);
        assert!((e.cp() - 3f64.sqrt()).abs() < 1e-15);
        assert!(e.cp() > e.cs() && e.cs() > 0.0);
        assert_eq!(e.fastest_speed(), e.cp());
    }

    #[test]
    fn rejects_negative_lambda() {
        assert!(MediumModel::inplane(-0.5).is_err());
        assert!(MediumModel::inplane(f64::NAN).is_err());
    }
}
