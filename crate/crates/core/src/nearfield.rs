//! Composite near-field operator.
//!
//! For data `v[row, k, i]` and a density `g[i, j]` the operator is
//!
//! ```text
//! (N g)[row, k] = sum_i sum_{j = 0}^{k - 1} v[row, k - j, i] g[i, j]
//! ```
//!
//! with 1-based record times `k`. In 0-based storage (sample `k0` at time
//! `(k0 + 1) dt`) this is the plain linear convolution of the two arrays,
//! truncated to the record length. Both spaces carry the `dt`-weighted
//! inner product, so the adjoint is the plain transpose: correlation in time,
//! transpose in source space.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::dataset::ScatteredDataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::TransformPlan;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Source density `g[i, j]` over sources and time lags `j dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityVector {
    pub n_sources: usize,
    pub n_t: usize,
    pub dt: f64,
    /// Flat index `i * n_t + j`.
    pub values: Vec<f64>,
}

/// Receiver-side space-time vector `r[row, k]` (trial signatures, residuals).
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub n_rows: usize,
    pub n_t: usize,
    pub dt: f64,
    /// Flat index `row * n_t + k`, sample `k` at time `(k + 1) dt`.
    pub values: Vec<f64>,
}

fn weighted_norm(v: &[f64], dt: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * dt).sqrt()
}

fn weighted_dot(a: &[f64], b: &[f64], dt: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dt
}

impl DensityVector {
    pub fn zeros(n_sources: usize, n_t: usize, dt: f64) -> Self {
        Self {
            n_sources,
            n_t,
            dt,
            values: vec![0.0; n_sources * n_t],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_t + j]
    }

    pub fn trace(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_t..(i + 1) * self.n_t]
    }

    pub fn norm(&self) -> f64 {
        weighted_norm(&self.values, self.dt)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        weighted_dot(&self.values, &other.values, self.dt)
    }
}

impl SpaceTimeField {
    pub fn zeros(n_rows: usize, n_t: usize, dt: f64) -> Self {
        Self {
            n_rows,
            n_t,
            dt,
            values: vec![0.0; n_rows * n_t],
        }
    }

    pub fn get(&self, row: usize, k: usize) -> f64 {
        self.values[row * self.n_t + k]
    }

    pub fn trace(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_t..(row + 1) * self.n_t]
    }

    pub fn norm(&self) -> f64 {
        weighted_norm(&self.values, self.dt)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        weighted_dot(&self.values, &other.values, self.dt)
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.n_t);
        for &r in rows {
            values.extend_from_slice(self.trace(r));
        }
        Self {
            n_rows: rows.len(),
            n_t: self.n_t,
            dt: self.dt,
            values,
        }
    }
}

/// Near-field operator with the data spectra cached for repeated products.
#[derive(Clone)]
pub struct NearFieldOperator {
    n_rows: usize,
    n_t: usize,
    n_sources: usize,
    dt: f64,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Zero-padded FFT of every data trace, flat index `(row * n_sources + i) * len`.
    spectra: Vec<Complex64>,
    exec: Exec,
}

impl std::fmt::Debug for NearFieldOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NearFieldOperator")
            .field("n_rows", &self.n_rows)
            .field("n_t", &self.n_t)
            .field("n_sources", &self.n_sources)
            .field("fft_len", &self.len)
            .finish()
    }
}

impl NearFieldOperator {
    pub fn new(data: &ScatteredDataset, exec: Exec) -> Self {
        let len = (2 * data.n_t).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let (n_rows, n_src) = (data.n_rows(), data.n_sources);
        let blocks = exec.map(n_rows * n_src, |q| {
            let (row, i) = (q / n_src, q % n_src);
            let mut buf = vec![ZERO; len];
            for k in 0..data.n_t {
                buf[k].re = data.get(row, k, i);
            }
            fwd.process(&mut buf);
            buf
        });
        Self {
            n_rows,
            n_t: data.n_t,
            n_sources: n_src,
            dt: data.dt,
            len,
            fwd,
            inv,
            spectra: blocks.concat(),
            exec,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    fn block(&self, row: usize, i: usize) -> &[Complex64] {
        let q = (row * self.n_sources + i) * self.len;
        &self.spectra[q..q + self.len]
    }

    fn padded_spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![ZERO; self.len];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.fwd.process(&mut buf);
        buf
    }

    pub fn apply(&self, g: &DensityVector) -> Result<SpaceTimeField> {
        if g.n_sources != self.n_sources || g.n_t != self.n_t {
            return Err(Error::ShapeMismatch(format!(
                "density is {}x{}, operator expects {}x{}",
                g.n_sources, g.n_t, self.n_sources, self.n_t
            )));
        }
        let gs: Vec<Vec<Complex64>> = (0..self.n_sources)
            .map(|i| self.padded_spectrum(g.trace(i)))
            .collect();
        let scale = 1.0 / self.len as f64;
        let rows = self.exec.map(self.n_rows, |row| {
            let mut acc = vec![ZERO; self.len];
            for (i, gi) in gs.iter().enumerate() {
                for ((a, v), w) in acc.iter_mut().zip(self.block(row, i)).zip(gi) {
                    *a += v * w;
                }
            }
            self.inv.process(&mut acc);
            acc[..self.n_t].iter().map(|c| c.re * scale).collect::<Vec<f64>>()
        });
        Ok(SpaceTimeField {
            n_rows: self.n_rows,
            n_t: self.n_t,
            dt: self.dt,
            values: rows.concat(),
        })
    }

    pub fn adjoint(&self, r: &SpaceTimeField) -> Result<DensityVector> {
        if r.n_rows != self.n_rows || r.n_t != self.n_t {
            return Err(Error::ShapeMismatch(format!(
                "residual is {}x{}, operator expects {}x{}",
                r.n_rows, r.n_t, self.n_rows, self.n_t
            )));
        }
        let rs: Vec<Vec<Complex64>> = (0..self.n_rows)
            .map(|row| self.padded_spectrum(r.trace(row)))
            .collect();
        let scale = 1.0 / self.len as f64;
        let traces = self.exec.map(self.n_sources, |i| {
            let mut acc = vec![ZERO; self.len];
            for (row, rr) in rs.iter().enumerate() {
                for ((a, v), w) in acc.iter_mut().zip(self.block(row, i)).zip(rr) {
                    *a += v.conj() * w;
                }
            }
            self.inv.process(&mut acc);
            acc[..self.n_t].iter().map(|c| c.re * scale).collect::<Vec<f64>>()
        });
        Ok(DensityVector {
            n_sources: self.n_sources,
            n_t: self.n_t,
            dt: self.dt,
            values: traces.concat(),
        })
    }
}

/// `N g` by zero-padded fast convolution.
pub fn apply_nearfield(data: &ScatteredDataset, g: &DensityVector) -> Result<SpaceTimeField> {
    NearFieldOperator::new(data, Exec::default()).apply(g)
}

/// `N^T r`: time-reversed correlation with the data traces.
pub fn apply_adjoint(data: &ScatteredDataset, r: &SpaceTimeField) -> Result<DensityVector> {
    NearFieldOperator::new(data, Exec::default()).adjoint(r)
}

/// Triple-loop evaluation of `N g`, kept as a reference for the fast path.
pub fn apply_nearfield_dense(data: &ScatteredDataset, g: &DensityVector) -> Result<SpaceTimeField> {
    if g.n_sources != data.n_sources || g.n_t != data.n_t {
        return Err(Error::ShapeMismatch(format!(
            "density is {}x{}, data has {} sources and {} samples",
            g.n_sources, g.n_t, data.n_sources, data.n_t
        )));
    }
    let mut out = SpaceTimeField::zeros(data.n_rows(), data.n_t, data.dt);
    for row in 0..data.n_rows() {
        for k in 0..data.n_t {
            let mut acc = 0.0;
            for i in 0..data.n_sources {
                for j in 0..=k {
                    acc += data.get(row, k - j, i) * g.get(i, j);
                }
            }
            out.values[row * data.n_t + k] = acc;
        }
    }
    Ok(out)
}

/// Per-frequency matrices `N(s_j)[row, i] = sum_k v[row, k, i] exp(i s_j t_k)`.
///
/// With `G = plan.forward(g, 0)` and `R = plan.forward(N g, 1)`, the product
/// satisfies `R_j = N(s_j) G_j` exactly when the padded length holds the full
/// linear convolution, which `n_pad >= 2 N_t` guarantees.
pub fn spectral_factors(
    data: &ScatteredDataset,
    plan: &TransformPlan,
    exec: Exec,
) -> Result<Vec<DMatrix<Complex64>>> {
    check_plan(data, plan)?;
    let (n_rows, n_src) = (data.n_rows(), data.n_sources);
    let spectra = exec.map(n_rows * n_src, |q| {
        let (row, i) = (q / n_src, q % n_src);
        let mut s = plan.forward(&data.trace(row, i), 1);
        for c in &mut s {
            *c /= data.dt;
        }
        s
    });
    Ok((0..plan.n_freq())
        .map(|j| DMatrix::from_fn(n_rows, n_src, |row, i| spectra[row * n_src + i][j]))
        .collect())
}

pub(crate) fn check_plan(data: &ScatteredDataset, plan: &TransformPlan) -> Result<()> {
    if plan.n_t() != data.n_t || (plan.dt() - data.dt).abs() > 1e-12 * data.dt {
        return Err(Error::ShapeMismatch(format!(
            "plan has {} samples of {}, data has {} samples of {}",
            plan.n_t(),
            plan.dt(),
            data.n_t,
            data.dt
        )));
    }
    if plan.n_pad() < 2 * data.n_t {
        return Err(Error::InvalidParameter(format!(
            "padded length {} is shorter than twice the record length {}",
            plan.n_pad(),
            data.n_t
        )));
    }
    Ok(())
}
