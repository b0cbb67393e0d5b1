//! Scenario files: everything one batch run needs, in TOML.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::inversion::InversionSettings;
use crate::model::geometry::{dot, Point};
use crate::model::{CrackScene, LayoutConfig, MediumModel, PlanConfig, Pulse, SensingLayout};
use crate::trials::SamplingGrid;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorChoice {
    #[default]
    Tlsm,
    Flsm,
    Both,
}

impl IndicatorChoice {
    pub fn tlsm(self) -> bool {
        self != IndicatorChoice::Flsm
    }

    pub fn flsm(self) -> bool {
        self != IndicatorChoice::Tlsm
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct NoiseSpec {
    /// Signal-to-noise ratio in dB; omit for clean data.
    #[serde(default)]
    pub snr_db: Option<f64>,
}


fn up() -> Point {
    [0.0, 1.0]
}

/// Which sensing subsets are inverted. Every study also inverts the full
/// layout so degradation can be reported against it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Study {
    #[default]
    Full,
    /// One map per receiver count, each a uniform subset of the full ring.
    Sparse { receivers: Vec<usize> },
    /// Receivers (and optionally sources) restricted to the angular sector
    /// `[start_angle, start_angle + span]` about the layout origin.
    PartialAperture {
        start_angle: f64,
        span: f64,
        #[serde(default)]
        sources: bool,
    },
    /// Sources and receivers restricted to the half plane `(p - o) . direction >= 0`.
    OneSided {
        #[serde(default = "up")]
        direction: Point,
        #[serde(default)]
        origin: Point,
    },
}

/// One inversion of the study: a name and the masks it applies.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyCell {
    pub name: String,
    pub layout: SensingLayout,
}

fn default_tau() -> f64 {
    0.6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default)]
    pub indicator: IndicatorChoice,
    /// Mask threshold relative to the map maximum.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Existing dataset stem (`<stem>.toml` + `<stem>.bin`) to invert instead
    /// of generating one.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    pub medium: MediumModel,
    pub pulse: Pulse,
    #[serde(default)]
    pub scene: CrackScene,
    pub layout: LayoutConfig,
    pub plan: PlanConfig,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub grid: SamplingGrid,
    #[serde(default)]
    pub study: Study,
    #[serde(default)]
    pub inversion: InversionSettings,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a scenario; relative dataset paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut s: Self = toml::from_str(&fs::read_to_string(path)?)?;
        if let (Some(d), Some(base)) = (&s.dataset, path.parent()) {
            if d.is_relative() {
                s.dataset = Some(base.join(d));
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        self.pulse.validate()?;
        self.scene.validate()?;
        self.plan.build()?;
        self.grid.validate()?;
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidConfig(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if let Some(snr) = self.noise.snr_db {
            if snr.is_nan() || snr == f64::NEG_INFINITY {
                return Err(Error::InvalidConfig(format!("invalid SNR {snr} dB")));
            }
        }
        if let Some(d) = &self.dataset {
            let header = d.with_extension("toml");
            if !header.is_file() {
                return Err(Error::InvalidConfig(format!(
                    "dataset header {} does not exist",
                    header.display()
                )));
            }
        }
        match &self.study {
            Study::Full => {}
            Study::Sparse { receivers } => {
                if receivers.is_empty() || receivers.contains(&0) {
                    return Err(Error::InvalidConfig(
                        "sparse study needs positive receiver counts".into(),
                    ));
                }
            }
            Study::PartialAperture { span, start_angle, .. } => {
                if !(span.is_finite() && *span > 0.0 && start_angle.is_finite()) {
                    return Err(Error::InvalidConfig("aperture span must be positive".into()));
                }
            }
            Study::OneSided { direction, origin } => {
                if dot(*direction, *direction) == 0.0
                    || direction.iter().chain(origin).any(|v| !v.is_finite())
                {
                    return Err(Error::InvalidConfig(
                        "one-sided study needs a finite nonzero direction".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Cells of the study, full layout first.
    pub fn cells(&self, full: &SensingLayout) -> Result<Vec<StudyCell>> {
        let mut cells = vec![StudyCell {
            name: "full".into(),
            layout: full.clone(),
        }];
        match &self.study {
            Study::Full => {}
            Study::Sparse { receivers } => {
                for &n in receivers {
                    cells.push(StudyCell {
                        name: format!("sparse-{n}"),
                        layout: full.downsample_receivers(n)?,
                    });
                }
            }
            Study::PartialAperture {
                start_angle,
                span,
                sources,
            } => {
                let layout = sector(full, *start_angle, *span, *sources)?;
                cells.push(StudyCell {
                    name: "partial-aperture".into(),
                    layout,
                });
            }
            Study::OneSided { direction, origin } => {
                cells.push(StudyCell {
                    name: "one-sided".into(),
                    layout: full.half_plane(*origin, *direction)?,
                });
            }
        }
        Ok(cells)
    }
}

fn in_sector(p: Point, start: f64, span: f64) -> bool {
    let a = (p[1].atan2(p[0]) - start).rem_euclid(2.0 * PI);
    a <= span + 1e-12
}

/// Masks receivers (and sources when asked) outside the angular sector.
pub fn sector(layout: &SensingLayout, start: f64, span: f64, sources: bool) -> Result<SensingLayout> {
    let mut out = layout.clone();
    for (m, p) in layout.receivers.iter().enumerate() {
        out.receiver_mask[m] &= in_sector(*p, start, span);
    }
    if sources {
        for (i, p) in layout.sources.iter().enumerate() {
            out.source_mask[i] &= in_sector(*p, start, span);
        }
    }
    out.check_masks()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_layout;

    pub(crate) const REFERENCE: &str = r#"
seed = 7
indicator = "both"
tau = 0.6

[medium]
mode = "antiplane-scalar"

[pulse]
kind = "tone-burst"
frequency = 10.0

[[scene.arcs]]
start = [-0.08, -0.06]
end = [0.08, 0.06]
stiffness = 0.0

[layout]
kind = "ring"
radius = 1.0
n_sources = 8
n_receivers = 32

[plan]
n_t = 512
duration = 3.0

[noise]
snr_db = 30.0

[grid]
region = [-0.4, 0.4, -0.4, 0.4]
nx = 64
ny = 64
n_normals = 8

[study]
kind = "sparse"
receivers = [16, 8]
"#;

    #[test]
    fn reference_parses_and_round_trips() {
        let s = Scenario::from_toml(REFERENCE).unwrap();
        assert_eq!(s.grid.nx, 64);
        assert_eq!(s.indicator, IndicatorChoice::Both);
        assert_eq!(s.study, Study::Sparse { receivers: vec![16, 8] });
        let again = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = REFERENCE.replace("tau = 0.6", "tau = 0.6\ntua = 1");
        assert!(Scenario::from_toml(&text).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Scenario::from_toml(&REFERENCE.replace("tau = 0.6", "tau = 1.5")).is_err());
        assert!(Scenario::from_toml(&REFERENCE.replace("receivers = [16, 8]", "receivers = []")).is_err());
        let missing = format!("dataset = \"/nonexistent/data\"\n{REFERENCE}");
        assert!(Scenario::from_toml(&missing).is_err());
    }

    #[test]
    fn study_cells() {
        let s = Scenario::from_toml(REFERENCE).unwrap();
        let full = make_layout(&s.layout, &s.scene).unwrap();
        let cells = s.cells(&full).unwrap();
        let names: Vec<&str> = cells.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["full", "sparse-16", "sparse-8"]);
        assert_eq!(cells[2].layout.active_receivers().len(), 8);

        let mut one = s.clone();
        one.study = Study::OneSided {
            direction: [0.0, 1.0],
            origin: [0.0, 0.0],
        };
        let cells = one.cells(&full).unwrap();
        let l = &cells[1].layout;
        assert_eq!(l.active_receivers().len(), 17);
        assert_eq!(l.active_sources().len(), 5);
        assert!(l.active_receivers().iter().all(|&m| l.receivers[m][1] >= -1e-12));

        let mut part = s;
        part.study = Study::PartialAperture {
            start_angle: 0.0,
            span: PI / 2.0,
            sources: false,
        };
        let cells = part.cells(&full).unwrap();
        assert_eq!(cells[1].layout.active_receivers().len(), 9);
        assert_eq!(cells[1].layout.active_sources().len(), 8);
    }
}
