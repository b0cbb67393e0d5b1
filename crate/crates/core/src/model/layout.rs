use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::geometry::{dot, norm, CrackScene, Point};
use crate::error::{Error, Result};

/// Points closer than this to a crack are rejected.
pub const ON_CRACK_TOL: f64 = 1e-8;

/// Direction of the point force at each source (in-plane mode only).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum Polarization {
    /// Perpendicular to the line joining the source to the layout center.
    #[default]
    Tangential,
    /// Along the line joining the source to the layout center.
    Radial,
    Fixed(Point),
}


fn default_center() -> Point {
    [0.0, 0.0]
}

fn full_turn() -> f64 {
    2.0 * PI
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LayoutConfig {
    /// Sources and receivers equally spaced in angle on a circle, or on the
    /// circular arc `[start_angle, start_angle + span)`.
    Ring {
        radius: f64,
        n_sources: usize,
        n_receivers: usize,
        #[serde(default = "default_center")]
        center: Point,
        #[serde(default)]
        start_angle: f64,
        #[serde(default = "full_turn")]
        span: f64,
        #[serde(default)]
        polarization: Polarization,
    },
    Points {
        sources: Vec<Point>,
        receivers: Vec<Point>,
        #[serde(default)]
        polarization: Polarization,
    },
}

impl LayoutConfig {
    pub fn ring(radius: f64, n_sources: usize, n_receivers: usize) -> Self {
        LayoutConfig::Ring {
            radius,
            n_sources,
            n_receivers,
            center: default_center(),
            start_angle: 0.0,
            span: full_turn(),
            polarization: Polarization::default(),
        }
    }
}

/// Source and receiver positions plus the masks used by the sparse and
/// reduced-aperture studies. Data are always generated for every point; masks
/// only select what the inversion sees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingLayout {
    pub sources: Vec<Point>,
    pub receivers: Vec<Point>,
    /// Unit force direction per source.
    pub polarizations: Vec<Point>,
    pub source_mask: Vec<bool>,
    pub receiver_mask: Vec<bool>,
}

fn ring_points(center: Point, radius: f64, n: usize, start: f64, span: f64) -> Vec<Point> {
    let step = if (span - full_turn()).abs() < 1e-12 || n < 2 {
        span / n as f64
    } else {
        span / (n - 1) as f64
    };
    (0..n)
        .map(|k| {
            let a = start + k as f64 * step;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect()
}

fn unit(p: Point) -> Point {
    let l = norm(p);
    [p[0] / l, p[1] / l]
}

/// Builds a layout and checks that every point lies off the cracks.
pub fn make_layout(config: &LayoutConfig, scene: &CrackScene) -> Result<SensingLayout> {
    let (sources, receivers, polarization, center) = match config {
        LayoutConfig::Ring {
            radius,
            n_sources,
            n_receivers,
            center,
            start_angle,
            span,
            polarization,
        } => {
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "ring radius must be positive, got {radius}"
                )));
            }
            if !(span.is_finite() && *span > 0.0 && *span <= full_turn() + 1e-12) {
                return Err(Error::InvalidConfig(format!(
                    "ring span must lie in (0, 2 pi], got {span}"
                )));
            }
            (
                ring_points(*center, *radius, *n_sources, *start_angle, *span),
                ring_points(*center, *radius, *n_receivers, *start_angle, *span),
                *polarization,
                *center,
            )
        }
        LayoutConfig::Points {
            sources,
            receivers,
            polarization,
        } => {
            let n = (sources.len() + receivers.len()).max(1) as f64;
            let c = sources
                .iter()
                .chain(receivers)
                .fold([0.0, 0.0], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n]);
            (sources.clone(), receivers.clone(), *polarization, c)
        }
    };
    if sources.is_empty() || receivers.is_empty() {
        return Err(Error::InvalidConfig(
            "layout needs at least one source and one receiver".into(),
        ));
    }
    for (kind, pts) in [("source", &sources), ("receiver", &receivers)] {
        for (index, p) in pts.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{kind} {index} is not finite")));
            }
            if let Some((arc, distance)) = scene.nearest(*p) {
                if distance < ON_CRACK_TOL {
                    return Err(Error::PointOnCrack {
                        kind,
                        index,
                        x: p[0],
                        y: p[1],
                        arc,
                        distance,
                    });
                }
            }
        }
    }
    let polarizations = sources
        .iter()
        .map(|y| {
            let r = [y[0] - center[0], y[1] - center[1]];
            match polarization {
                Polarization::Fixed(d) => Ok(unit(d)),
                _ if norm(r) == 0.0 => Err(Error::InvalidConfig(
                    "radial/tangential polarization undefined at the layout center".into(),
                )),
                Polarization::Radial => Ok(unit(r)),
                Polarization::Tangential => Ok(unit([-r[1], r[0]])),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if polarizations.iter().any(|p| !p[0].is_finite()) {
        return Err(Error::InvalidConfig("polarization must be nonzero".into()));
    }
    Ok(SensingLayout {
        source_mask: vec![true; sources.len()],
        receiver_mask: vec![true; receivers.len()],
        sources,
        receivers,
        polarizations,
    })
}

/// `n` indices spread uniformly over `0..total`.
pub fn uniform_subset(total: usize, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > total {
        return Err(Error::InvalidParameter(format!(
            "cannot select {n} of {total} points"
        )));
    }
    Ok((0..n).map(|k| k * total / n).collect())
}

impl SensingLayout {
    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn active_sources(&self) -> Vec<usize> {
        (0..self.sources.len()).filter(|&i| self.source_mask[i]).collect()
    }

    pub fn active_receivers(&self) -> Vec<usize> {
        (0..self.receivers.len()).filter(|&m| self.receiver_mask[m]).collect()
    }

    /// Keeps `n` receivers spread uniformly over the full set.
    pub fn downsample_receivers(&self, n: usize) -> Result<Self> {
        let keep = uniform_subset(self.receivers.len(), n)?;
        let mut out = self.clone();
        out.receiver_mask = vec![false; self.receivers.len()];
        for m in keep {
            out.receiver_mask[m] = true;
        }
        Ok(out)
    }

    /// Keeps only sources and receivers with `(p - origin) . direction >= 0`
    /// (points on the dividing line are kept).
    pub fn half_plane(&self, origin: Point, direction: Point) -> Result<Self> {
        let side = |p: &Point| dot([p[0] - origin[0], p[1] - origin[1]], direction) >= -1e-12;
        let mut out = self.clone();
        for (i, p) in self.sources.iter().enumerate() {
            out.source_mask[i] &= side(p);
        }
        for (m, p) in self.receivers.iter().enumerate() {
            out.receiver_mask[m] &= side(p);
        }
        out.check_masks()?;
        Ok(out)
    }

    pub fn check_masks(&self) -> Result<()> {
        if self.source_mask.len() != self.sources.len()
            || self.receiver_mask.len() != self.receivers.len()
        {
            return Err(Error::ShapeMismatch("layout masks do not match point counts".into()));
        }
        if !self.source_mask.iter().any(|&b| b) || !self.receiver_mask.iter().any(|&b| b) {
            return Err(Error::InvalidParameter(
                "mask leaves no active sources or receivers".into(),
            ));
        }
        Ok(())
    }
}
