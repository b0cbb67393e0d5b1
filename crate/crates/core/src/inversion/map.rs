use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trials::SamplingGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorKind {
    /// Space-time sampling indicator.
    Tlsm,
    /// Multi-frequency comparison indicator.
    Flsm,
}

impl IndicatorKind {
    pub fn label(self) -> &'static str {
        match self {
            IndicatorKind::Tlsm => "tlsm",
            IndicatorKind::Flsm => "flsm",
        }
    }
}

/// How the discrepancy principle ended across all trials of a map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapStats {
    pub achieved: usize,
    pub floor_limited: usize,
    pub uninformative: usize,
    /// Sampling points that coincide with a receiver.
    pub holes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorMap {
    pub kind: IndicatorKind,
    pub grid: SamplingGrid,
    /// Raw indicator per grid point (zero at holes).
    pub values: Vec<f64>,
    /// Normal index achieving the minimal density norm.
    pub normals: Vec<Option<usize>>,
    /// Density norm of every trial, point-major.
    pub trial_norms: Vec<f64>,
    pub stats: MapStats,
    pub dataset_sha256: String,
    /// Angular frequencies combined (frequency-domain indicator only).
    pub frequencies: Vec<f64>,
}

/// Support estimate `value > tau * max`, with ties at the maximum included so
/// a constant map is all ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Thresholded {
    pub tau: f64,
    pub mask: Vec<bool>,
    /// `mask * value`
    pub values: Vec<f64>,
}

impl IndicatorMap {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Values divided by the maximum.
    pub fn normalized(&self) -> Vec<f64> {
        let m = self.max();
        if m == 0.0 {
            return self.values.clone();
        }
        self.values.iter().map(|v| v / m).collect()
    }

    /// First grid index attaining the maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (q, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = q;
            }
        }
        best
    }

    /// Writes `z1,z2,value,mask,normal` rows in grid order.
    pub fn write_csv(&self, path: &Path, mask: &[bool]) -> Result<()> {
        if mask.len() != self.values.len() {
            return Err(Error::ShapeMismatch("mask and map differ in size".into()));
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["z1", "z2", "value", "mask", "normal"])?;
        for (q, &v) in self.values.iter().enumerate() {
            let z = self.grid.point(q);
            let normal = self.normals[q].map_or_else(|| "-1".to_string(), |n| n.to_string());
            w.write_record([
                format!("{:.6}", z[0]),
                format!("{:.6}", z[1]),
                format!("{v:.12e}"),
                u8::from(mask[q]).to_string(),
                normal,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Binary 8-bit graymap of the max-normalized map, top row at the largest `y`.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let v = self.normalized();
        let mut bytes = format!("P5\n{nx} {ny}\n255\n").into_bytes();
        for iy in (0..ny).rev() {
            for ix in 0..nx {
                let x = v[iy * nx + ix].clamp(0.0, 1.0);
                bytes.push((x * 255.0).round() as u8);
            }
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }
}

/// Thresholds `map` at `tau` times its maximum.
pub fn threshold_map(map: &IndicatorMap, tau: f64) -> Result<Thresholded> {
    threshold_values(&map.values, tau)
}

pub fn threshold_values(values: &[f64], tau: f64) -> Result<Thresholded> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {tau}"
        )));
    }
    let m = values.iter().copied().fold(0.0, f64::max);
    let mask: Vec<bool> = values.iter().map(|&v| v > tau * m || v == m).collect();
    let kept = values
        .iter()
        .zip(&mask)
        .map(|(&v, &k)| if k { v } else { 0.0 })
        .collect();
    Ok(Thresholded {
        tau,
        mask,
        values: kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: Vec<f64>) -> IndicatorMap {
        let n = values.len();
        IndicatorMap {
            kind: IndicatorKind::Tlsm,
            grid: SamplingGrid::new([0.0, 1.0, 0.0, 0.0], n, 1, 1).unwrap(),
            normals: vec![Some(0); n],
            trial_norms: values.iter().map(|v| 1.0 / v).collect(),
            values,
            stats: MapStats::default(),
            dataset_sha256: String::new(),
            frequencies: Vec::new(),
        }
    }

    #[test]
    fn threshold_example() {
        let t = threshold_map(&map(vec![1.0, 0.7, 0.5]), 0.6).unwrap();
        assert_eq!(t.mask, vec![true, true, false]);
        assert_eq!(t.values, vec![1.0, 0.7, 0.0]);
    }

    #[test]
    fn threshold_is_idempotent() {
        let t = threshold_values(&[0.3, 0.9, 0.65, 0.61, 0.2], 0.7).unwrap();
        let again = threshold_values(&t.values, 0.7).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn constant_map_is_all_ones() {
        let t = threshold_values(&[2.0; 5], 0.6).unwrap();
        assert!(t.mask.iter().all(|&m| m));
    }

    #[test]
    fn threshold_range_checked() {
        assert!(threshold_values(&[1.0], 0.0).is_err());
        assert!(threshold_values(&[1.0], 1.0).is_err());
    }

    #[test]
    fn csv_and_pgm_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let m = map(vec![0.5, 2.0, 1.0]);
        let t = threshold_map(&m, 0.6).unwrap();
        m.write_csv(&dir.path().join("map.csv"), &t.mask).unwrap();
        let text = fs::read_to_string(dir.path().join("map.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "z1,z2,value,mask,normal");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("0.500000,0.000000,2.0"));
        assert!(lines[2].ends_with(",1,0"));
        m.write_pgm(&dir.path().join("map.pgm")).unwrap();
        let raw = fs::read(dir.path().join("map.pgm")).unwrap();
        assert!(raw.starts_with(b"P5\n3 1\n255\n"));
        assert_eq!(&raw[raw.len() - 3..], &[64, 255, 128]);
        assert_eq!(m.argmax(), 1);
    }
}
