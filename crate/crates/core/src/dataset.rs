//! Scattered-field tensor and its on-disk form.
//!
//! Values are indexed `[row, k, i]` where `row = dim * m + c` runs over
//! receiver `m` and displacement component `c`, `k` over record times
//! `t_k = (k + 1) dt` and `i` over sources. The flat index is
//! `(row * N_t + k) * N_i + i`, and the binary file stores exactly that
//! sequence as little-endian `f64`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteredDataset {
    pub dim: usize,
    pub n_receivers: usize,
    pub n_t: usize,
    pub n_sources: usize,
    pub dt: f64,
    pub values: Vec<f64>,
    /// `dt`-weighted l2 norm of the added noise; zero for clean data.
    pub noise_norm: f64,
}

/// Sidecar description of a dataset binary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    /// `[dim * N_m, N_t, N_i]`
    pub shape: [usize; 3],
    pub dim: usize,
    pub dt: f64,
    pub noise_norm: f64,
    pub sha256: String,
}

pub const FORMAT: &str = "f64-le c-order [component*receiver, time, source]";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ScatteredDataset {
    pub fn zeros(dim: usize, n_receivers: usize, n_t: usize, n_sources: usize, dt: f64) -> Self {
        Self {
            dim,
            n_receivers,
            n_t,
            n_sources,
            dt,
            values: vec![0.0; dim * n_receivers * n_t * n_sources],
            noise_norm: 0.0,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.dim * self.n_receivers
    }

    pub fn index(&self, row: usize, k: usize, i: usize) -> usize {
        (row * self.n_t + k) * self.n_sources + i
    }

    pub fn get(&self, row: usize, k: usize, i: usize) -> f64 {
        self.values[self.index(row, k, i)]
    }

    pub fn get_mut(&mut self, row: usize, k: usize, i: usize) -> &mut f64 {
        let idx = self.index(row, k, i);
        &mut self.values[idx]
    }

    /// Time trace of one (row, source) pair.
    pub fn trace(&self, row: usize, i: usize) -> Vec<f64> {
        (0..self.n_t).map(|k| self.get(row, k, i)).collect()
    }

    /// `sqrt(sum v^2 dt)`.
    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.dt).sqrt()
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.dt
    }

    /// Relative noise level `||noise|| / ||data||`.
    pub fn noise_ratio(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            0.0
        } else {
            self.noise_norm / n
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out.noise_norm *= c.abs();
        out
    }

    /// Restriction to the given receivers and sources (in the given order).
    pub fn select(&self, receivers: &[usize], sources: &[usize]) -> Self {
        let mut out = Self::zeros(self.dim, receivers.len(), self.n_t, sources.len(), self.dt);
        for (mo, &m) in receivers.iter().enumerate() {
            for c in 0..self.dim {
                for k in 0..self.n_t {
                    for (io, &i) in sources.iter().enumerate() {
                        *out.get_mut(mo * self.dim + c, k, io) = self.get(m * self.dim + c, k, i);
                    }
                }
            }
        }
        // The selection keeps the same relative noise level.
        out.noise_norm = self.noise_ratio() * out.norm();
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            format: FORMAT.into(),
            shape: [self.n_rows(), self.n_t, self.n_sources],
            dim: self.dim,
            dt: self.dt,
            noise_norm: self.noise_norm,
            sha256: sha256_hex(&self.to_bytes()),
        }
    }

    /// Writes `<stem>.bin` and `<stem>.toml`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<DatasetHeader> {
        fs::create_dir_all(dir)?;
        let bytes = self.to_bytes();
        fs::write(dir.join(format!("{stem}.bin")), &bytes)?;
        let header = self.header();
        fs::write(dir.join(format!("{stem}.toml")), toml::to_string(&header)?)?;
        Ok(header)
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let header: DatasetHeader =
            toml::from_str(&fs::read_to_string(dir.join(format!("{stem}.toml")))?)?;
        let bytes = fs::read(dir.join(format!("{stem}.bin")))?;
        Self::from_parts(&header, &bytes)
    }

    pub fn from_parts(header: &DatasetHeader, bytes: &[u8]) -> Result<Self> {
        let [rows, n_t, n_src] = header.shape;
        if header.dim == 0 || rows % header.dim != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{rows} rows are not a multiple of dimension {}",
                header.dim
            )));
        }
        if bytes.len() != rows * n_t * n_src * 8 {
            return Err(Error::ShapeMismatch(format!(
                "binary holds {} bytes, shape {:?} needs {}",
                bytes.len(),
                header.shape,
                rows * n_t * n_src * 8
            )));
        }
        let digest = sha256_hex(bytes);
        if digest != header.sha256 {
            return Err(Error::Manifest(format!(
                "dataset hash mismatch: expected {}, found {digest}",
                header.sha256
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("dataset contains non-finite values".into()));
        }
        Ok(Self {
            dim: header.dim,
            n_receivers: rows / header.dim,
            n_t,
            n_sources: n_src,
            dt: header.dt,
            values,
            noise_norm: header.noise_norm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dim: usize) -> ScatteredDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut d = ScatteredDataset::zeros(dim, 3, 5, 2, 0.1);
        for v in &mut d.values {
            *v = rng.random::<f64>() - 0.5;
        }
        d.noise_norm = 0.01;
        d
    }

    #[test]
    fn indexing_is_row_time_source() {
        let d = random(2);
        assert_eq!(d.index(0, 0, 1), 1);
        assert_eq!(d.index(0, 1, 0), 2);
        assert_eq!(d.index(1, 0, 0), 10);
        assert_eq!(d.values.len(), 2 * 3 * 5 * 2);
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let d = random(2);
        d.write(dir.path(), "data").unwrap();
        let back = ScatteredDataset::read(dir.path(), "data").unwrap();
        assert_eq!(back, d);
        let raw = fs::read(dir.path().join("data.bin")).unwrap();
        assert_eq!(&raw[..8], &d.values[0].to_le_bytes());
    }

    #[test]
    fn corrupted_binary_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        random(1).write(dir.path(), "data").unwrap();
        let p = dir.path().join("data.bin");
        let mut raw = fs::read(&p).unwrap();
        raw[3] ^= 1;
        fs::write(&p, raw).unwrap();
        assert!(matches!(
            ScatteredDataset::read(dir.path(), "data"),
            Err(Error::Manifest(_))
        ));
    }

    #[test]
    fn selection_keeps_entries() {
        let d = random(2);
        let s = d.select(&[2, 0], &[1]);
        assert_eq!(s.n_rows(), 4);
        assert_eq!(s.get(0, 3, 0), d.get(4, 3, 1));
        assert_eq!(s.get(3, 1, 0), d.get(1, 1, 1));
    }
}
