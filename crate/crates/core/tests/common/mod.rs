//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tlsm::dataset::ScatteredDataset;
use tlsm::inversion::SpectralSystem;
use tlsm::model::TransformPlan;
use tlsm::nearfield::spectral_factors;
use tlsm::Exec;

pub fn random_dataset(rows: usize, n_t: usize, cols: usize, dt: f64, seed: u64) -> ScatteredDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = ScatteredDataset::zeros(1, rows, n_t, cols, dt);
    for v in &mut d.values {
        *v = rng.random::<f64>() * 2.0 - 1.0;
    }
    d
}

pub fn random_traces(rows: usize, n_t: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| (0..n_t).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect()
}

/// The time-domain problem the damped frequency solve is equivalent to, on
/// the padded window `0..N_pad`: convolution wraps with weight
/// `exp(-sigma N_pad dt)`, residual samples (data offset one step) weigh
/// `exp(-2 sigma (n + 1) dt) dt`, density samples `exp(-2 sigma n dt) dt`.
pub struct PaddedWindow {
    /// Rows `row * N_pad + n`, columns `col * N_pad + m`.
    pub a: DMatrix<f64>,
    pub w_res: DVector<f64>,
    pub w_den: DVector<f64>,
    pub phi: DVector<f64>,
    pub n_pad: usize,
}

impl PaddedWindow {
    pub fn new(data: &ScatteredDataset, phi: &[Vec<f64>], plan: &TransformPlan) -> Self {
        let (rows, cols, n_t, np) = (data.n_rows(), data.n_sources, data.n_t, plan.n_pad());
        let (dt, sigma) = (plan.dt(), plan.sigma());
        let wrap = (-sigma * np as f64 * dt).exp();
        let mut a = DMatrix::zeros(rows * np, cols * np);
        for r in 0..rows {
            for c in 0..cols {
                for n in 0..np {
                    for m in 0..np {
                        let (lag, w) = if m <= n { (n - m, 1.0) } else { (n + np - m, wrap) };
                        if lag < n_t {
                            a[(r * np + n, c * np + m)] = w * data.get(r, lag, c);
                        }
                    }
                }
            }
        }
        let w_res = DVector::from_fn(rows * np, |q, _| {
            let n = q % np;
            (-2.0 * sigma * (n + 1) as f64 * dt).exp() * dt
        });
        let w_den = DVector::from_fn(cols * np, |q, _| {
            let n = q % np;
            (-2.0 * sigma * n as f64 * dt).exp() * dt
        });
        let phi = DVector::from_fn(rows * np, |q, _| {
            let (r, n) = (q / np, q % np);
            phi[r].get(n).copied().unwrap_or(0.0)
        });
        Self { a, w_res, w_den, phi, n_pad: np }
    }

    /// Solves `(A^T W_r A + eta W_g) g = A^T W_r phi` densely.
    pub fn solve(&self, eta: f64) -> DVector<f64> {
        let at_w = self.a.transpose() * DMatrix::from_diagonal(&self.w_res);
        let lhs = &at_w * &self.a + DMatrix::from_diagonal(&(self.w_den.clone() * eta));
        let rhs = &at_w * &self.phi;
        lhs.lu().solve(&rhs).expect("normal equations are nonsingular for eta > 0")
    }

    /// Gradient of `|A g - phi|^2_{W_r} + eta |g|^2_{W_g}` (halved).
    pub fn gradient(&self, g: &DVector<f64>, eta: f64) -> DVector<f64> {
        let r = &self.a * g - &self.phi;
        self.a.transpose() * r.component_mul(&self.w_res) + g.component_mul(&self.w_den) * eta
    }

    pub fn objective(&self, g: &DVector<f64>, eta: f64) -> f64 {
        let r = &self.a * g - &self.phi;
        r.component_mul(&r).dot(&self.w_res) + eta * g.component_mul(g).dot(&self.w_den)
    }
}

/// Frequency-domain Tikhonov solution mapped back to the padded window.
pub fn spectral_solve(
    data: &ScatteredDataset,
    phi: &[Vec<f64>],
    plan: &TransformPlan,
    eta: f64,
) -> (DVector<f64>, SpectralSystem) {
    let factors = spectral_factors(data, plan, Exec::Sequential).unwrap();
    let weights: Vec<f64> = (0..plan.n_freq()).map(|j| plan.quad_weight(j)).collect();
    let system = SpectralSystem::new(&factors, &weights, Exec::Sequential).unwrap();
    let spectra: Vec<Vec<Complex64>> = phi.iter().map(|t| plan.forward(t, 1)).collect();
    let rhs: Vec<DVector<Complex64>> = (0..plan.n_freq())
        .map(|j| DVector::from_fn(phi.len(), |r, _| spectra[r][j]))
        .collect();
    let proj = system.project(&rhs).unwrap();
    let g_hat = system.solution(&proj, eta).unwrap();
    let np = plan.n_pad();
    let mut g = DVector::zeros(data.n_sources * np);
    for c in 0..data.n_sources {
        let spec: Vec<Complex64> = g_hat.iter().map(|v| v[c]).collect();
        for (m, x) in plan.inverse(&spec, 0, np).into_iter().enumerate() {
            g[c * np + m] = x;
        }
    }
    (g, system)
}
