use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::map::{IndicatorKind, IndicatorMap, MapStats};
use super::tikhonov::{MorozovStatus, SpectralSystem};
use crate::dataset::ScatteredDataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::TransformPlan;
use crate::nearfield::{check_plan, spectral_factors};
use crate::trials::{TrialContext, TrialSignature};

/// Solver settings shared by both indicators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionSettings {
    /// Lower bound on the discrepancy target relative to `||Phi||`.
    #[serde(default = "default_floor")]
    pub delta_floor: f64,
    /// Number of frequencies combined by the frequency-domain indicator.
    #[serde(default = "default_n_freq")]
    pub flsm_frequencies: usize,
    #[serde(default)]
    pub flsm_rule: FlsmRule,
}

fn default_floor() -> f64 {
    1e-3
}

fn default_n_freq() -> usize {
    5
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self {
            delta_floor: default_floor(),
            flsm_frequencies: default_n_freq(),
            flsm_rule: FlsmRule::default(),
        }
    }
}

/// How single-frequency maps are merged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlsmRule {
    /// Normalize each map to unit maximum, then average.
    #[default]
    NormalizedMean,
    /// Average the raw maps.
    RawMean,
}

/// Discrepancy target for one trial.
pub fn discrepancy_target(noise_ratio: f64, phi_norm: f64, floor: f64) -> f64 {
    (noise_ratio * phi_norm).max(floor * phi_norm)
}

/// Per-trial outcome kept for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSolve {
    pub eta: f64,
    pub norm: f64,
    pub residual: f64,
    pub target: f64,
    pub status: MorozovStatus,
}

fn transformed(sig: &TrialSignature, plan: &TransformPlan, freqs: &[usize]) -> Vec<DVector<Complex64>> {
    let rows: Vec<Vec<Complex64>> = (0..sig.field.n_rows)
        .map(|r| plan.forward(sig.field.trace(r), 1))
        .collect();
    freqs
        .iter()
        .map(|&j| DVector::from_fn(rows.len(), |r, _| rows[r][j]))
        .collect()
}

fn check_inputs(data: &ScatteredDataset, ctx: &TrialContext, plan: &TransformPlan) -> Result<()> {
    check_plan(data, plan)?;
    if ctx.n_rows() != data.n_rows() {
        return Err(Error::ShapeMismatch(format!(
            "trials have {} rows, data {}",
            ctx.n_rows(),
            data.n_rows()
        )));
    }
    if data.values.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidMap(
            "dataset is identically zero, every near-field solve is degenerate".into(),
        ));
    }
    Ok(())
}

struct PointResult {
    value: f64,
    normal: Option<usize>,
    solves: Vec<TrialSolve>,
}

/// Smallest norm over the normals, lowest index on ties.
fn pick(solves: &[TrialSolve]) -> (f64, usize) {
    let mut best = 0;
    for (p, s) in solves.iter().enumerate() {
        if s.norm < solves[best].norm {
            best = p;
        }
    }
    (solves[best].norm, best)
}

/// Time-domain indicator `1 / min_n ||g_{z,n}||` with the regularization of
/// every trial chosen by the discrepancy principle.
pub fn tlsm_indicator(
    data: &ScatteredDataset,
    ctx: &TrialContext,
    plan: &TransformPlan,
    settings: &InversionSettings,
    exec: Exec,
) -> Result<IndicatorMap> {
    check_inputs(data, ctx, plan)?;
    let factors = spectral_factors(data, plan, exec)?;
    let weights: Vec<f64> = (0..plan.n_freq()).map(|j| plan.quad_weight(j)).collect();
    let system = SpectralSystem::new(&factors, &weights, exec)?;
    let freqs: Vec<usize> = (0..plan.n_freq()).collect();
    let eps = data.noise_ratio();
    let grid = ctx.grid();
    let results = exec.try_map(grid.n_points(), |q| -> Result<Option<PointResult>> {
        let Ok(sigs) = ctx.at_point(q) else {
            return Ok(None);
        };
        let mut solves = Vec::with_capacity(sigs.len());
        for sig in &sigs {
            let proj = system.project(&transformed(sig, plan, &freqs))?;
            let target = discrepancy_target(eps, proj.phi_norm(), settings.delta_floor);
            let m = system.morozov(&proj, target)?;
            let norm = if m.status == MorozovStatus::Uninformative {
                f64::INFINITY
            } else {
                m.solve.norm
            };
            solves.push(TrialSolve {
                eta: m.solve.eta,
                norm,
                residual: m.solve.residual,
                target,
                status: m.status,
            });
        }
        let (norm, best) = pick(&solves);
        Ok(Some(PointResult {
            value: if norm > 0.0 { 1.0 / norm } else { f64::INFINITY },
            normal: Some(best),
            solves,
        }))
    })?;
    assemble(IndicatorKind::Tlsm, data, ctx, results)
}

fn assemble(
    kind: IndicatorKind,
    data: &ScatteredDataset,
    ctx: &TrialContext,
    results: Vec<Option<PointResult>>,
) -> Result<IndicatorMap> {
    let grid = ctx.grid().clone();
    let mut stats = MapStats::default();
    let mut values = Vec::with_capacity(results.len());
    let mut normals = Vec::with_capacity(results.len());
    let mut trial_norms = Vec::with_capacity(grid.n_trials());
    for r in results {
        match r {
            None => {
                stats.holes += 1;
                values.push(0.0);
                normals.push(None);
                trial_norms.extend(std::iter::repeat_n(f64::NAN, grid.n_normals));
            }
            Some(p) => {
                for s in &p.solves {
                    match s.status {
                        MorozovStatus::Achieved => stats.achieved += 1,
                        MorozovStatus::FloorLimited => stats.floor_limited += 1,
                        MorozovStatus::Uninformative => stats.uninformative += 1,
                    }
                    trial_norms.push(s.norm);
                }
                values.push(p.value);
                normals.push(p.normal);
            }
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMap("indicator has non-finite values".into()));
    }
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidMap(
            "every sampling point is degenerate or uninformative".into(),
        ));
    }
    Ok(IndicatorMap {
        kind,
        grid,
        values,
        normals,
        trial_norms,
        stats,
        dataset_sha256: crate::dataset::sha256_hex(&data.to_bytes()),
        frequencies: Vec::new(),
    })
}

/// Indices of the `m` frequencies (DC excluded) carrying the most data energy.
pub fn select_frequencies(factors: &[nalgebra::DMatrix<Complex64>], m: usize) -> Vec<usize> {
    let mut e: Vec<(usize, f64)> = factors
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, f)| (j, f.norm_squared()))
        .collect();
    e.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<usize> = e.into_iter().take(m).map(|(j, _)| j).collect();
    out.sort_unstable();
    out
}

/// Multi-frequency comparison indicator built from single-frequency sampling
/// solves on the undamped transform.
pub fn flsm_indicator(
    data: &ScatteredDataset,
    ctx: &TrialContext,
    plan: &TransformPlan,
    settings: &InversionSettings,
    exec: Exec,
) -> Result<IndicatorMap> {
    if settings.flsm_frequencies == 0 {
        return Err(Error::InvalidParameter(
            "the frequency-domain indicator needs at least one frequency".into(),
        ));
    }
    check_inputs(data, ctx, plan)?;
    let plain = plan.undamped();
    let factors = spectral_factors(data, &plain, exec)?;
    let freqs = select_frequencies(&factors, settings.flsm_frequencies);
    let systems: Vec<SpectralSystem> = freqs
        .iter()
        .map(|&j| SpectralSystem::new(&factors[j..=j], &[1.0], Exec::Sequential))
        .collect::<Result<_>>()?;
    let eps = data.noise_ratio();
    let grid = ctx.grid();
    // Per point: the minimal norm over normals at each selected frequency.
    let results = exec.try_map(grid.n_points(), |q| -> Result<Option<(Vec<f64>, Vec<TrialSolve>)>> {
        let Ok(sigs) = ctx.at_point(q) else {
            return Ok(None);
        };
        let mut per_freq = vec![f64::INFINITY; freqs.len()];
        let mut solves = Vec::with_capacity(sigs.len());
        for sig in &sigs {
            let phi = transformed(sig, &plain, &freqs);
            let mut first: Option<TrialSolve> = None;
            for (f, sys) in systems.iter().enumerate() {
                let proj = sys.project(&phi[f..=f])?;
                let target = discrepancy_target(eps, proj.phi_norm(), settings.delta_floor);
                let m = sys.morozov(&proj, target)?;
                let norm = if m.status == MorozovStatus::Uninformative {
                    f64::INFINITY
                } else {
                    m.solve.norm
                };
                per_freq[f] = per_freq[f].min(norm);
                first.get_or_insert(TrialSolve {
                    eta: m.solve.eta,
                    norm,
                    residual: m.solve.residual,
                    target,
                    status: m.status,
                });
            }
            solves.push(first.expect("at least one frequency"));
        }
        Ok(Some((per_freq, solves)))
    })?;
    // Single-frequency maps, then the combination rule.
    let nf = freqs.len();
    let mut maps = vec![vec![0.0; grid.n_points()]; nf];
    for (q, r) in results.iter().enumerate() {
        if let Some((pf, _)) = r {
            for f in 0..nf {
                maps[f][q] = if pf[f] > 0.0 { 1.0 / pf[f] } else { f64::INFINITY };
            }
        }
    }
    if settings.flsm_rule == FlsmRule::NormalizedMean {
        for m in &mut maps {
            let peak = m.iter().copied().fold(0.0, f64::max);
            if peak > 0.0 && peak.is_finite() {
                m.iter_mut().for_each(|v| *v /= peak);
            }
        }
    }
    let point_results = results
        .into_iter()
        .enumerate()
        .map(|(q, r)| {
            r.map(|(_, solves)| {
                let value = maps.iter().map(|m| m[q]).sum::<f64>() / nf as f64;
                // Reported normal: best at the first selected frequency.
                let (_, best) = pick(&solves);
                PointResult {
                    value,
                    normal: Some(best),
                    solves,
                }
            })
        })
        .collect();
    let mut map = assemble(IndicatorKind::Flsm, data, ctx, point_results)?;
    map.frequencies = freqs.iter().map(|&j| plain.eta(j)).collect();
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn frequency_selection_skips_dc() {
        let f = |v: f64| DMatrix::from_element(2, 2, Complex64::new(v, 0.0));
        let factors = vec![f(100.0), f(1.0), f(5.0), f(3.0), f(4.0)];
        assert_eq!(select_frequencies(&factors, 2), vec![2, 4]);
        assert_eq!(select_frequencies(&factors, 10), vec![1, 2, 3, 4]);
    }

    #[test]
    fn ties_pick_lowest_normal() {
        let s = |norm| TrialSolve {
            eta: 1.0,
            norm,
            residual: 0.0,
            target: 0.0,
            status: MorozovStatus::Achieved,
        };
        assert_eq!(pick(&[s(2.0), s(1.0), s(1.0)]), (1.0, 1));
        assert_eq!(pick(&[s(f64::INFINITY), s(f64::INFINITY)]).1, 0);
    }

    #[test]
    fn target_has_floor() {
        assert_eq!(discrepancy_target(0.0, 2.0, 1e-3), 2e-3);
        assert_eq!(discrepancy_target(0.1, 2.0, 1e-3), 0.2);
    }
}
