use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

const TOUCH_TOL: f64 = 1e-12;

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Interface stiffness in the local (tangential, normal) frame of an arc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stiffness {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

impl Default for Stiffness {
    fn default() -> Self {
        Stiffness::Scalar(0.0)
    }
}

impl Stiffness {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        match *self {
            Stiffness::Scalar(k) => [[k, 0.0], [0.0, k]],
            Stiffness::Matrix(m) => m,
        }
    }

    /// Out-of-plane shear stiffness used in anti-plane mode: the tangential
    /// entry of the matrix.
    pub fn antiplane(&self) -> f64 {
        self.matrix()[0][0]
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.matrix();
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("stiffness must be finite".into()));
        }
        let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if (m[0][1] - m[1][0]).abs() > 1e-12 * scale {
            return Err(Error::InvalidConfig("stiffness matrix must be symmetric".into()));
        }
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let tol = 1e-12 * scale * scale;
        if m[0][0] < 0.0 || m[1][1] < 0.0 || det < -tol || tr < 0.0 {
            return Err(Error::InvalidConfig(
                "stiffness matrix must be positive semidefinite".into(),
            ));
        }
        Ok(())
    }
}

/// Straight open crack segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub start: Point,
    pub end: Point,
    #[serde(default)]
    pub stiffness: Stiffness,
}

impl Arc {
    pub fn new(start: Point, end: Point, stiffness: Stiffness) -> Self {
        Self {
            start,
            end,
            stiffness,
        }
    }

    pub fn length(&self) -> f64 {
        norm(sub(self.end, self.start))
    }

    pub fn tangent(&self) -> Point {
        let d = sub(self.end, self.start);
        let l = norm(d);
        [d[0] / l, d[1] / l]
    }

    /// Tangent rotated by +90 degrees. The jump across the arc is taken as
    /// the value on the side this normal points to minus the other side.
    pub fn normal(&self) -> Point {
        let t = self.tangent();
        [-t[1], t[0]]
    }

    /// Point at parameter `u` in `[0, 1]`.
    pub fn point(&self, u: f64) -> Point {
        [
            self.start[0] + u * (self.end[0] - self.start[0]),
            self.start[1] + u * (self.end[1] - self.start[1]),
        ]
    }

    pub fn midpoint(&self) -> Point {
        self.point(0.5)
    }

    pub fn distance(&self, p: Point) -> f64 {
        let d = sub(self.end, self.start);
        let u = (dot(sub(p, self.start), d) / dot(d, d)).clamp(0.0, 1.0);
        norm(sub(p, self.point(u)))
    }

    fn intersects(&self, other: &Arc) -> bool {
        let d1 = sub(self.end, self.start);
        let d2 = sub(other.end, other.start);
        let o1 = cross(d1, sub(other.start, self.start));
        let o2 = cross(d1, sub(other.end, self.start));
        let o3 = cross(d2, sub(self.start, other.start));
        let o4 = cross(d2, sub(self.end, other.start));
        if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
            return true;
        }
        // Touching or collinear overlap.
        self.distance(other.start) < TOUCH_TOL
            || self.distance(other.end) < TOUCH_TOL
            || other.distance(self.start) < TOUCH_TOL
            || other.distance(self.end) < TOUCH_TOL
    }
}

fn default_density() -> f64 {
    200.0
}

fn default_grading() -> f64 {
    2.0
}

/// Union of straight cracks plus the forward-solver mesh resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackScene {
    #[serde(default)]
    pub arcs: Vec<Arc>,
    /// Boundary elements per unit crack length.
    #[serde(default = "default_density")]
    pub density: f64,
    /// Mesh grading exponent toward the tips.
    #[serde(default = "default_grading")]
    pub grading: f64,
}

impl Default for CrackScene {
    fn default() -> Self {
        Self {
            arcs: Vec::new(),
            density: default_density(),
            grading: default_grading(),
        }
    }
}

impl CrackScene {
    pub fn new(arcs: Vec<Arc>) -> Result<Self> {
        let s = Self {
            arcs,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    pub fn with_stiffness(mut self, k: Stiffness) -> Self {
        for a in &mut self.arcs {
            a.stiffness = k;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(Error::InvalidConfig("mesh density must be positive".into()));
        }
        if !(self.grading.is_finite() && self.grading >= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "mesh grading must be at least 2, got {}",
                self.grading
            )));
        }
        for (i, a) in self.arcs.iter().enumerate() {
            if a.start.iter().chain(&a.end).any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("arc {i} has non-finite endpoints")));
            }
            if a.length() <= 0.0 {
                return Err(Error::InvalidConfig(format!("arc {i} has zero length")));
            }
            a.stiffness
                .validate()
                .map_err(|e| Error::InvalidConfig(format!("arc {i}: {e}")))?;
            for (j, b) in self.arcs.iter().enumerate().skip(i + 1) {
                if a.intersects(b) {
                    return Err(Error::InvalidConfig(format!("arcs {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    /// Closest arc to `p` and its distance, if any arcs exist.
    pub fn nearest(&self, p: Point) -> Option<(usize, f64)> {
        self.arcs
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(Arc::length).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_and_distance() {
        let a = Arc::new([-1.0, 0.0], [1.0, 0.0], Stiffness::Scalar(0.0));
        assert_eq!(a.length(), 2.0);
        assert_eq!(a.normal(), [0.0, 1.0]);
        assert_eq!(a.distance([0.0, 0.5]), 0.5);
        assert_eq!(a.distance([2.0, 0.0]), 1.0);
        assert!(a.distance([0.3, 0.0]) < 1e-15);
    }

    #[test]
    fn rejects_bad_scenes() {
        let z = Stiffness::Scalar(0.0);
        assert!(CrackScene::new(vec![Arc::new([0.0, 0.0], [0.0, 0.0], z)]).is_err());
        let crossing = vec![
            Arc::new([-1.0, 0.0], [1.0, 0.0], z),
            Arc::new([0.0, -1.0], [0.0, 1.0], z),
        ];
        assert!(CrackScene::new(crossing).is_err());
        let touching = vec![
            Arc::new([-1.0, 0.0], [0.0, 0.0], z),
            Arc::new([0.0, 0.0], [0.0, 1.0], z),
        ];
        assert!(CrackScene::new(touching).is_err());
        let neg = Stiffness::Matrix([[1.0, 2.0], [2.0, 1.0]]);
        assert!(CrackScene::new(vec![Arc::new([0.0, 0.0], [1.0, 0.0], neg)]).is_err());
        let asym = Stiffness::Matrix([[1.0, 0.1], [0.0, 1.0]]);
        assert!(CrackScene::new(vec![Arc::new([0.0, 0.0], [1.0, 0.0], asym)]).is_err());
        let ok = Stiffness::Matrix([[2.0, 1.0], [1.0, 2.0]]);
        assert!(CrackScene::new(vec![Arc::new([0.0, 0.0], [1.0, 0.0], ok)]).is_ok());
    }

    #[test]
    fn stiffness_parses_scalar_or_matrix() {
        #[derive(Deserialize)]
        struct W {
            k: Stiffness,
        }
        let a: W = toml::from_str("k = 3.0").unwrap();
        assert_eq!(a.k, Stiffness::Scalar(3.0));
        let b: W = toml::from_str("k = [[1.0, 0.0], [0.0, 2.0]]").unwrap();
        assert_eq!(b.k.matrix()[1][1], 2.0);
    }
}
