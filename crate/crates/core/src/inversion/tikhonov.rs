//! Per-frequency Tikhonov solves and the discrepancy principle.
//!
//! The space-time cost `||N g - Phi||^2 + eta ||g||^2` in damped-weighted
//! norms on the padded window block-diagonalizes over frequencies:
//! `sum_j w_j (|N_j g_j - Phi_j|^2 + eta |g_j|^2)`. Each block is solved
//! through the SVD of `N_j`, so one factorization per frequency serves every
//! trial and every `eta`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Relative width of the Morozov acceptance band (the contract is 1%).
const MOROZOV_TOL: f64 = 2e-3;
const MAX_BISECTIONS: usize = 200;

/// Smallest `eta` tried, relative to the largest squared singular value.
pub const ETA_FLOOR: f64 = 1e-12;

struct Block {
    weight: f64,
    u: DMatrix<Complex64>,
    sv: Vec<f64>,
    v_t: DMatrix<Complex64>,
}

/// SVDs of the near-field factors with their quadrature weights.
pub struct SpectralSystem {
    blocks: Vec<Block>,
    n_rows: usize,
    n_cols: usize,
    sigma_max: f64,
}

/// Trial right-hand side expressed in the singular bases.
#[derive(Clone, Debug)]
pub struct Projection {
    /// `U_j^* Phi_j` per frequency.
    beta: Vec<Vec<Complex64>>,
    /// Weighted energy of `Phi` outside the ranges.
    perp2: f64,
    phi2: f64,
}

impl Projection {
    pub fn phi_norm(&self) -> f64 {
        self.phi2.sqrt()
    }

    /// Residual as `eta -> 0`.
    pub fn floor_residual(&self) -> f64 {
        self.perp2.sqrt()
    }
}

/// Outcome of one Tikhonov solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tradeoff {
    pub eta: f64,
    pub residual: f64,
    pub norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MorozovStatus {
    /// Residual matched the target within tolerance.
    Achieved,
    /// Target at or above `||Phi||`: only `g = 0` is consistent with the noise.
    Uninformative,
    /// Target below the residual reachable at the smallest `eta`.
    FloorLimited,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MorozovChoice {
    pub solve: Tradeoff,
    pub target: f64,
    pub status: MorozovStatus,
}

impl SpectralSystem {
    /// `factors[j]` is `N(s_j)`, `weights[j]` its quadrature weight.
    pub fn new(factors: &[DMatrix<Complex64>], weights: &[f64], exec: Exec) -> Result<Self> {
        if factors.is_empty() || factors.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} factors with {} weights",
                factors.len(),
                weights.len()
            )));
        }
        let (n_rows, n_cols) = factors[0].shape();
        if factors.iter().any(|f| f.shape() != (n_rows, n_cols)) {
            return Err(Error::ShapeMismatch("factors differ in shape".into()));
        }
        let blocks = exec.map(factors.len(), |j| {
            let svd = factors[j].clone().svd(true, true);
            Block {
                weight: weights[j],
                u: svd.u.expect("requested U"),
                sv: svd.singular_values.iter().copied().collect(),
                v_t: svd.v_t.expect("requested V^T"),
            }
        });
        let sigma_max = blocks
            .iter()
            .flat_map(|b| b.sv.iter().copied())
            .fold(0.0, f64::max);
        Ok(Self {
            blocks,
            n_rows,
            n_cols,
            sigma_max,
        })
    }

    pub fn n_freq(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// `phi[j]` is the transformed right-hand side at frequency `j`.
    pub fn project(&self, phi: &[DVector<Complex64>]) -> Result<Projection> {
        if phi.len() != self.blocks.len() || phi.iter().any(|p| p.len() != self.n_rows) {
            return Err(Error::ShapeMismatch(format!(
                "right-hand side needs {} frequencies of length {}",
                self.blocks.len(),
                self.n_rows
            )));
        }
        let mut beta = Vec::with_capacity(self.blocks.len());
        let (mut perp2, mut phi2) = (0.0, 0.0);
        for (b, p) in self.blocks.iter().zip(phi) {
            let bj: Vec<Complex64> = (0..b.sv.len())
                .map(|k| b.u.column(k).dotc(p))
                .collect();
            let total = p.norm_squared();
            let inside: f64 = bj.iter().map(|c| c.norm_sqr()).sum();
            perp2 += b.weight * (total - inside).max(0.0);
            phi2 += b.weight * total;
            beta.push(bj);
        }
        Ok(Projection { beta, perp2, phi2 })
    }

    pub fn tradeoff(&self, proj: &Projection, eta: f64) -> Result<Tradeoff> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regularization must be positive, got {eta}"
            )));
        }
        let (mut res2, mut norm2) = (proj.perp2, 0.0);
        for (b, bj) in self.blocks.iter().zip(&proj.beta) {
            let (mut r, mut n) = (0.0, 0.0);
            for (s, c) in b.sv.iter().zip(bj) {
                let d = s * s + eta;
                let a = c.norm_sqr();
                r += (eta / d).powi(2) * a;
                n += (s / d).powi(2) * a;
            }
            res2 += b.weight * r;
            norm2 += b.weight * n;
        }
        Ok(Tradeoff {
            eta,
            residual: res2.sqrt(),
            norm: norm2.sqrt(),
        })
    }

    /// Regularized solution per frequency, `(N^* N + eta)^{-1} N^* Phi`.
    pub fn solution(&self, proj: &Projection, eta: f64) -> Result<Vec<DVector<Complex64>>> {
        self.tradeoff(proj, eta)?;
        Ok(self
            .blocks
            .iter()
            .zip(&proj.beta)
            .map(|(b, bj)| {
                let mut g = DVector::from_element(self.n_cols, Complex64::new(0.0, 0.0));
                for (k, (s, c)) in b.sv.iter().zip(bj).enumerate() {
                    let f = c * (s / (s * s + eta));
                    for i in 0..self.n_cols {
                        g[i] += b.v_t[(k, i)].conj() * f;
                    }
                }
                g
            })
            .collect())
    }

    /// Picks `eta` so that the residual matches `target` (bisection on
    /// `log eta`; the residual is non-decreasing in `eta`).
    pub fn morozov(&self, proj: &Projection, target: f64) -> Result<MorozovChoice> {
        if !(target >= 0.0 && target.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid discrepancy target {target}")));
        }
        let phi = proj.phi_norm();
        let scale = self.sigma_max.powi(2).max(f64::MIN_POSITIVE);
        let lo_eta = ETA_FLOOR * scale;
        if phi == 0.0 || target >= phi || self.sigma_max == 0.0 {
            let eta = f64::MAX.sqrt();
            return Ok(MorozovChoice {
                solve: Tradeoff {
                    eta,
                    residual: phi,
                    norm: 0.0,
                },
                target,
                status: MorozovStatus::Uninformative,
            });
        }
        let lo = self.tradeoff(proj, lo_eta)?;
        if lo.residual >= target * (1.0 - MOROZOV_TOL) {
            return Ok(MorozovChoice {
                solve: lo,
                target,
                status: MorozovStatus::FloorLimited,
            });
        }
        let mut hi = self.tradeoff(proj, scale)?;
        while hi.residual < target {
            hi = self.tradeoff(proj, hi.eta * 100.0)?;
            if !hi.eta.is_finite() || hi.eta > 1e300 {
                return Err(Error::InvalidParameter("Morozov bracket diverged".into()));
            }
        }
        let (mut a, mut b) = (lo.eta.ln(), hi.eta.ln());
        let mut best = hi;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (a + b);
            let t = self.tradeoff(proj, mid.exp())?;
            if (t.residual - target).abs() <= MOROZOV_TOL * target {
                best = t;
                break;
            }
            if t.residual < target {
                a = mid;
            } else {
                b = mid;
            }
            best = t;
        }
        Ok(MorozovChoice {
            solve: best,
            target,
            status: MorozovStatus::Achieved,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar(n: f64, phi: f64) -> (SpectralSystem, Projection) {
        let sys = SpectralSystem::new(&[DMatrix::from_element(1, 1, c(n))], &[1.0], Exec::Sequential).unwrap();
        let proj = sys.project(&[DVector::from_element(1, c(phi))]).unwrap();
        (sys, proj)
    }

    fn random_system(rng: &mut ChaCha8Rng, rows: usize, cols: usize, nf: usize) -> (SpectralSystem, Projection) {
        let mut cplx = || Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let factors: Vec<DMatrix<Complex64>> = (0..nf).map(|_| DMatrix::from_fn(rows, cols, |_, _| cplx())).collect();
        let phi: Vec<DVector<Complex64>> = (0..nf).map(|_| DVector::from_fn(rows, |_, _| cplx())).collect();
        let weights: Vec<f64> = (0..nf).map(|j| if j == 0 { 0.5 } else { 1.0 }).collect();
        let sys = SpectralSystem::new(&factors, &weights, Exec::Sequential).unwrap();
        let proj = sys.project(&phi).unwrap();
        (sys, proj)
    }

    #[test]
    fn scalar_closed_form() {
        let (sys, proj) = scalar(2.0, 1.0);
        let t = sys.tradeoff(&proj, 2.0).unwrap();
        assert!((t.norm - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.residual - 1.0 / 3.0).abs() < 1e-15);
        let g = sys.solution(&proj, 2.0).unwrap();
        assert!((g[0][0].re.abs() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn large_eta_limit() {
        let (sys, proj) = scalar(2.0, 1.0);
        let t = sys.tradeoff(&proj, 1e12).unwrap();
        assert!(t.norm < 1e-11);
        assert!((t.residual - 1.0).abs() < 1e-11);
    }

    #[test]
    fn nonpositive_eta_rejected() {
        let (sys, proj) = scalar(2.0, 1.0);
        assert!(sys.tradeoff(&proj, 0.0).is_err());
        assert!(sys.tradeoff(&proj, -1.0).is_err());
    }

    #[test]
    fn scalar_morozov() {
        let (sys, proj) = scalar(1.0, 1.0);
        let m = sys.morozov(&proj, 0.5).unwrap();
        assert_eq!(m.status, MorozovStatus::Achieved);
        assert!((m.solve.eta - 1.0).abs() < 0.02);
        assert!((m.solve.residual - 0.5).abs() <= 0.005);
    }

    #[test]
    fn morozov_degenerate_targets() {
        let (sys, proj) = scalar(1.0, 1.0);
        assert_eq!(sys.morozov(&proj, 1.0).unwrap().status, MorozovStatus::Uninformative);
        assert_eq!(sys.morozov(&proj, 2.0).unwrap().solve.norm, 0.0);
        // Half of phi is out of range, so residuals below 1/sqrt(2) are unreachable.
        let sys = SpectralSystem::new(
            &[DMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)])],
            &[1.0],
            Exec::Sequential,
        )
        .unwrap();
        let proj = sys.project(&[DVector::from_column_slice(&[c(1.0), c(1.0)])]).unwrap();
        let m = sys.morozov(&proj, 0.1).unwrap();
        assert_eq!(m.status, MorozovStatus::FloorLimited);
        assert!((m.solve.residual - 1.0).abs() < 1e-9);
    }

    #[test]
    fn morozov_hits_target_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let (sys, proj) = random_system(&mut rng, 6, 6, 5);
            let target = proj.phi_norm() * (0.01 + 0.9 * rng.random::<f64>());
            let m = sys.morozov(&proj, target).unwrap();
            assert_eq!(m.status, MorozovStatus::Achieved);
            assert!((m.solve.residual - target).abs() <= 0.01 * target);
        }
    }

    #[test]
    fn tradeoff_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let (sys, proj) = random_system(&mut rng, 6, 3, 8);
            let mut prev = sys.tradeoff(&proj, 1e-3).unwrap();
            for p in 1..=30 {
                let t = sys.tradeoff(&proj, 1e-3 * 10f64.powf(p as f64 / 10.0)).unwrap();
                assert!(t.residual >= prev.residual);
                assert!(t.norm <= prev.norm);
                prev = t;
            }
        }
    }

    #[test]
    fn solution_is_regularized_normal_equation_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut cplx = || Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let n = DMatrix::from_fn(6, 3, |_, _| cplx());
        let phi = DVector::from_fn(6, |_, _| cplx());
        let sys = SpectralSystem::new(std::slice::from_ref(&n), &[1.0], Exec::Sequential).unwrap();
        let proj = sys.project(std::slice::from_ref(&phi)).unwrap();
        let eta = 0.07;
        let g = &sys.solution(&proj, eta).unwrap()[0];
        let lhs = n.adjoint() * &n + DMatrix::identity(3, 3) * c(eta);
        let want = lhs.lu().solve(&(n.adjoint() * &phi)).unwrap();
        assert!((g - &want).norm() < 1e-12 * want.norm());
        let t = sys.tradeoff(&proj, eta).unwrap();
        assert!((t.residual - (&n * g - &phi).norm()).abs() < 1e-12);
        assert!((t.norm - g.norm()).abs() < 1e-12);
    }
}
