use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::ScatteredDataset;
use crate::error::{Error, Result};

/// Adds white Gaussian noise at `snr_db` (signal power over noise power,
/// both per sample). `snr_db = +inf` returns the data unchanged.
pub fn add_noise(data: &ScatteredDataset, snr_db: f64, seed: u64) -> Result<ScatteredDataset> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!("invalid SNR {snr_db} dB")));
    }
    let mut out = data.clone();
    if snr_db == f64::INFINITY {
        return Ok(out);
    }
    let n = data.values.len() as f64;
    let power = data.values.iter().map(|v| v * v).sum::<f64>() / n;
    if power == 0.0 {
        return Ok(out);
    }
    let std = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise_sq = 0.0;
    for v in &mut out.values {
        let e: f64 = normal.sample(&mut rng);
        noise_sq += e * e;
        *v += e;
    }
    out.noise_norm = (data.noise_norm.powi(2) + noise_sq * data.dt).sqrt();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(n_t: usize) -> ScatteredDataset {
        let mut d = ScatteredDataset::zeros(1, 40, n_t, 8, 0.01);
        for (q, v) in d.values.iter_mut().enumerate() {
            *v = (q as f64 * 0.37).sin() * (1.0 + (q % 7) as f64);
        }
        d
    }

    #[test]
    fn infinite_snr_is_identity() {
        let d = signal(16);
        let out = add_noise(&d, f64::INFINITY, 1).unwrap();
        assert_eq!(out, d);
        assert_eq!(out.noise_norm, 0.0);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let d = signal(16);
        let a = add_noise(&d, 20.0, 42).unwrap();
        let b = add_noise(&d, 20.0, 42).unwrap();
        let c = add_noise(&d, 20.0, 43).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn empirical_snr_matches_request() {
        let d = signal(400);
        assert!(d.values.len() >= 100_000);
        for snr in [0.0, 10.0, 30.0] {
            let out = add_noise(&d, snr, 7).unwrap();
            let sig: f64 = d.values.iter().map(|v| v * v).sum();
            let noise: f64 = out.values.iter().zip(&d.values).map(|(a, b)| (a - b).powi(2)).sum();
            let achieved = 10.0 * (sig / noise).log10();
            assert!((achieved - snr).abs() < 0.1, "{achieved} vs {snr}");
            assert!((out.noise_norm - (noise * d.dt).sqrt()).abs() < 1e-12 * out.noise_norm);
        }
    }

    #[test]
    fn nan_snr_rejected() {
        assert!(add_noise(&signal(4), f64::NAN, 0).is_err());
    }
}
