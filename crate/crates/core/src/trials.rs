//! Trial signatures: receiver traces of a point dislocation at a sampling
//! point `z` with normal `n`, pulsed by the source wavelet.
//!
//! The signature is `Phi_c(x_m, t) = chi * sum_j T_cj(x_m - z, n) d_j`, the
//! same kernel that maps crack jumps to receiver displacements in the forward
//! solver, so a jump `d` concentrated at `z` radiates exactly `Phi`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::greens::Kernels;
use crate::model::geometry::Point;
use crate::model::pulse::active_frequencies;
use crate::model::{MediumModel, Pulse, SensingLayout, TransformPlan};
use crate::nearfield::SpaceTimeField;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Spectrum samples of the pulse below this fraction of the peak are dropped.
pub const TRIAL_CUTOFF: f64 = 1e-6;

/// Dislocation direction `d` of the in-plane trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialPolarization {
    /// Opening dislocation, `d = n`.
    #[default]
    Normal,
    /// Sliding dislocation, `d` along the tangent.
    Tangential,
}

/// Sampling points on a rectangle plus trial normals on the half circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingGrid {
    /// `[x_min, x_max, y_min, y_max]`
    pub region: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub n_normals: usize,
    #[serde(default)]
    pub polarization: TrialPolarization,
}

impl SamplingGrid {
    pub fn new(region: [f64; 4], nx: usize, ny: usize, n_normals: usize) -> Result<Self> {
        let g = Self {
            region,
            nx,
            ny,
            n_normals,
            polarization: TrialPolarization::Normal,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let [x0, x1, y0, y1] = self.region;
        if !self.region.iter().all(|v| v.is_finite()) || x1 < x0 || y1 < y0 {
            return Err(Error::InvalidConfig(format!("invalid sampling region {:?}", self.region)));
        }
        if self.nx == 0 || self.ny == 0 || self.n_normals == 0 {
            return Err(Error::InvalidConfig(
                "sampling grid needs at least one point and one normal".into(),
            ));
        }
        if (self.nx > 1 && x1 == x0) || (self.ny > 1 && y1 == y0) {
            return Err(Error::InvalidConfig("degenerate sampling region".into()));
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_trials(&self) -> usize {
        self.n_points() * self.n_normals
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    /// Grid spacing `(hx, hy)`; zero along a single-point axis.
    pub fn spacing(&self) -> (f64, f64) {
        let [x0, x1, y0, y1] = self.region;
        let h = |lo: f64, hi: f64, n: usize| if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
        (h(x0, x1, self.nx), h(y0, y1, self.ny))
    }

    /// Point `q`, enumerated row by row (`x` fastest).
    pub fn point(&self, q: usize) -> Point {
        let [x0, x1, y0, y1] = self.region;
        let (ix, iy) = (q % self.nx, q / self.nx);
        [Self::axis(x0, x1, self.nx, ix), Self::axis(y0, y1, self.ny, iy)]
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.n_points()).map(|q| self.point(q)).collect()
    }

    /// Normal `p` at angle `pi p / n_normals`; antipodes are not repeated.
    pub fn normal(&self, p: usize) -> Point {
        let a = PI * p as f64 / self.n_normals as f64;
        [a.cos(), a.sin()]
    }

    pub fn direction(&self, n: Point) -> Point {
        match self.polarization {
            TrialPolarization::Normal => n,
            TrialPolarization::Tangential => [-n[1], n[0]],
        }
    }
}

/// Trial field of one `(z, n)` pair on the active receivers.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSignature {
    pub point: usize,
    pub normal: usize,
    pub z: Point,
    pub n: Point,
    pub field: SpaceTimeField,
}

/// Shared state for evaluating many trial signatures.
pub struct TrialContext<'a> {
    grid: &'a SamplingGrid,
    receivers: Vec<Point>,
    plan: &'a TransformPlan,
    dim: usize,
    chi: Vec<Complex64>,
    active: Vec<usize>,
    kernels: Vec<Kernels>,
}

impl<'a> TrialContext<'a> {
    pub fn new(
        grid: &'a SamplingGrid,
        layout: &SensingLayout,
        pulse: &Pulse,
        plan: &'a TransformPlan,
        medium: &MediumModel,
    ) -> Result<Self> {
        grid.validate()?;
        medium.validate()?;
        pulse.validate()?;
        let receivers = layout
            .active_receivers()
            .into_iter()
            .map(|m| layout.receivers[m])
            .collect();
        let chi = pulse.spectrum(plan);
        let active = active_frequencies(&chi, TRIAL_CUTOFF);
        let kernels = active.iter().map(|&j| Kernels::new(medium, plan.s(j))).collect();
        Ok(Self {
            grid,
            receivers,
            plan,
            dim: medium.dim(),
            chi,
            active,
            kernels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.dim * self.receivers.len()
    }

    pub fn grid(&self) -> &SamplingGrid {
        self.grid
    }

    /// Signatures of every trial normal at grid point `q`. Fails when `z`
    /// coincides with a receiver.
    pub fn at_point(&self, q: usize) -> Result<Vec<TrialSignature>> {
        let z = self.grid.point(q);
        let (dim, nf, nn) = (self.dim, self.plan.n_freq(), self.grid.n_normals);
        let normals: Vec<Point> = (0..nn).map(|p| self.grid.normal(p)).collect();
        // spec[(p * rows + row) * nf + j]
        let rows = self.n_rows();
        let mut spec = vec![ZERO; nn * rows * nf];
        for (a, &j) in self.active.iter().enumerate() {
            let k = &self.kernels[a];
            for (m, x) in self.receivers.iter().enumerate() {
                let t = k.traction_basis([x[0] - z[0], x[1] - z[1]])?;
                for (p, n) in normals.iter().enumerate() {
                    let d = self.grid.direction(*n);
                    for c in 0..dim {
                        let v = if dim == 1 {
                            t[0][0][0] * n[0] + t[0][0][1] * n[1]
                        } else {
                            (0..2)
                                .map(|jj| (t[c][jj][0] * n[0] + t[c][jj][1] * n[1]) * d[jj])
                                .sum()
                        };
                        spec[(p * rows + m * dim + c) * nf + j] = v * self.chi[j];
                    }
                }
            }
        }
        let n_t = self.plan.n_t();
        Ok(normals
            .iter()
            .enumerate()
            .map(|(p, n)| {
                let mut values = Vec::with_capacity(rows * n_t);
                for row in 0..rows {
                    let s = &spec[(p * rows + row) * nf..(p * rows + row + 1) * nf];
                    values.extend(self.plan.inverse(s, 1, n_t));
                }
                TrialSignature {
                    point: q,
                    normal: p,
                    z,
                    n: *n,
                    field: SpaceTimeField {
                        n_rows: rows,
                        n_t,
                        dt: self.plan.dt(),
                        values,
                    },
                }
            })
            .collect())
    }

    /// Signatures for flat trial indices `q * n_normals + p` in `range`.
    pub fn chunk(&self, range: Range<usize>, exec: Exec) -> Result<Vec<TrialSignature>> {
        let nn = self.grid.n_normals;
        if range.end > self.grid.n_trials() {
            return Err(Error::InvalidParameter(format!(
                "trial range {range:?} exceeds {} trials",
                self.grid.n_trials()
            )));
        }
        if range.is_empty() {
            return Ok(Vec::new());
        }
        let first = range.start / nn;
        let last = (range.end - 1) / nn;
        let per_point = exec.try_map(last - first + 1, |q| self.at_point(first + q))?;
        Ok(per_point
            .into_iter()
            .flatten()
            .filter(|t| (range.start..range.end).contains(&(t.point * nn + t.normal)))
            .collect())
    }
}

/// Single trial field at an arbitrary `(z, n)`.
pub fn trial_field(
    z: Point,
    n: Point,
    layout: &SensingLayout,
    pulse: &Pulse,
    plan: &TransformPlan,
    medium: &MediumModel,
) -> Result<TrialSignature> {
    let len = n[0].hypot(n[1]);
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("trial normal has length {len}")));
    }
    // A one-point grid whose single normal is n: build the spectrum directly.
    let grid = SamplingGrid::new([z[0], z[0], z[1], z[1]], 1, 1, 1)?;
    let ctx = TrialContext::new(&grid, layout, pulse, plan, medium)?;
    let dim = medium.dim();
    let rows = ctx.n_rows();
    let nf = plan.n_freq();
    let d = grid.direction(n);
    let mut spec = vec![ZERO; rows * nf];
    for (a, &j) in ctx.active.iter().enumerate() {
        for (m, x) in ctx.receivers.iter().enumerate() {
            let t = ctx.kernels[a].traction([x[0] - z[0], x[1] - z[1]], n)?;
            // Anti-plane: d is the out-of-plane unit and the contraction is scalar.
            let v = if dim == 1 { [t.get(0, 0), ZERO] } else { t.apply(d) };
            for c in 0..dim {
                spec[(m * dim + c) * nf + j] = v[c] * ctx.chi[j];
            }
        }
    }
    let mut values = Vec::with_capacity(rows * plan.n_t());
    for row in 0..rows {
        values.extend(plan.inverse(&spec[row * nf..(row + 1) * nf], 1, plan.n_t()));
    }
    Ok(TrialSignature {
        point: 0,
        normal: 0,
        z,
        n,
        field: SpaceTimeField {
            n_rows: rows,
            n_t: plan.n_t(),
            dt: plan.dt(),
            values,
        },
    })
}

/// Every trial signature of the grid in enumeration order (point-major, then
/// normal), evaluated in chunks of `chunk` trials.
pub fn batch_trials<'a>(
    ctx: &'a TrialContext<'a>,
    chunk: usize,
    exec: Exec,
) -> impl Iterator<Item = Result<Vec<TrialSignature>>> + 'a {
    let total = ctx.grid.n_trials();
    let step = chunk.max(1);
    (0..total)
        .step_by(step)
        .map(move |start| ctx.chunk(start..(start + step).min(total), exec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_layout, CrackScene, LayoutConfig, PlanConfig};

    fn setup() -> (SensingLayout, Pulse, TransformPlan) {
        let layout = make_layout(&LayoutConfig::ring(1.0, 4, 6), &CrackScene::empty()).unwrap();
        let plan = PlanConfig {
            n_t: 256,
            duration: 3.0,
            sigma: None,
            pad_factor: 2,
        }
        .build()
        .unwrap();
        (layout, Pulse::tone_burst(10.0), plan)
    }

    fn media() -> [MediumModel; 2] {
        [MediumModel::antiplane(), MediumModel::inplane(2.0).unwrap()]
    }

    #[test]
    fn grid_enumeration() {
        let g = SamplingGrid::new([-1.0, 1.0, 0.0, 2.0], 3, 2, 4).unwrap();
        assert_eq!(g.point(0), [-1.0, 0.0]);
        assert_eq!(g.point(2), [1.0, 0.0]);
        assert_eq!(g.point(3), [-1.0, 2.0]);
        assert_eq!(g.spacing(), (1.0, 2.0));
        assert_eq!(g.n_trials(), 24);
        for p in 0..4 {
            let n = g.normal(p);
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-15);
            assert!(n[1] >= 0.0 && (p == 0 || n[1] > 0.0));
        }
        let big = SamplingGrid::new([0.0, 1.0, 0.0, 1.0], 100, 100, 16).unwrap();
        assert_eq!(big.n_trials(), 160_000);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(SamplingGrid::new([0.0, 1.0, 0.0, 1.0], 0, 3, 2).is_err());
        assert!(SamplingGrid::new([1.0, 0.0, 0.0, 1.0], 2, 3, 2).is_err());
        assert!(SamplingGrid::new([0.0, 0.0, 0.0, 1.0], 2, 3, 2).is_err());
        assert!(SamplingGrid::new([0.0, 1.0, 0.0, 1.0], 2, 3, 0).is_err());
    }

    #[test]
    fn sign_flips_with_normal() {
        let (layout, pulse, plan) = setup();
        for m in media() {
            let a = trial_field([0.1, 0.05], [0.6, 0.8], &layout, &pulse, &plan, &m).unwrap();
            let b = trial_field([0.1, 0.05], [-0.6, -0.8], &layout, &pulse, &plan, &m).unwrap();
            // d = n flips too for in-plane, so the in-plane signature is even.
            let sign = if m.dim() == 1 { -1.0 } else { 1.0 };
            for (x, y) in a.field.values.iter().zip(&b.field.values) {
                assert!((x - sign * y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn signatures_are_causal() {
        let (layout, pulse, plan) = setup();
        for m in media() {
            let z = [0.2, -0.1];
            let t = trial_field(z, [0.0, 1.0], &layout, &pulse, &plan, &m).unwrap();
            let peak = t.field.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (r, x) in layout.receivers.iter().enumerate() {
                let arrival = 0.9 * (x[0] - z[0]).hypot(x[1] - z[1]) / m.fastest_speed();
                for c in 0..m.dim() {
                    for (k, v) in t.field.trace(r * m.dim() + c).iter().enumerate() {
                        if (k + 1) as f64 * plan.dt() < arrival {
                            assert!(v.abs() <= 1e-4 * peak);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn matches_stress_of_point_force_field() {
        // Independent construction: traction on the plane through z from
        // centred differences of the displacement kernel, then pulsed.
        let (layout, pulse, plan) = setup();
        for m in media() {
            let (lam, mu) = (m.lambda, m.mu());
            let z = [-0.15, 0.1];
            let n = [0.3f64.cos(), 0.3f64.sin()];
            let t = trial_field(z, n, &layout, &pulse, &plan, &m).unwrap();
            let chi = pulse.spectrum(&plan);
            let h = 1e-5;
            let dim = m.dim();
            let mut worst: f64 = 0.0;
            let scale = t.field.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (r, x) in layout.receivers.iter().enumerate() {
                let mut spec = vec![vec![ZERO; plan.n_freq()]; dim];
                for j in 0..plan.n_freq() {
                    if chi[j].norm() < TRIAL_CUTOFF * 1e-3 {
                        continue;
                    }
                    let k = Kernels::new(&m, plan.s(j));
                    let grad = |q: usize| {
                        let e = if q == 0 { [h, 0.0] } else { [0.0, h] };
                        let a = k.disp([x[0] - z[0] - e[0], x[1] - z[1] - e[1]]).unwrap();
                        let b = k.disp([x[0] - z[0] + e[0], x[1] - z[1] + e[1]]).unwrap();
                        [[(a.get(0, 0) - b.get(0, 0)) / (2.0 * h), (a.get(0, 1) - b.get(0, 1)) / (2.0 * h)],
                         [(a.get(1, 0) - b.get(1, 0)) / (2.0 * h), (a.get(1, 1) - b.get(1, 1)) / (2.0 * h)]]
                    };
                    let gr = [grad(0), grad(1)];
                    if dim == 1 {
                        spec[0][j] = (gr[0][0][0] * n[0] + gr[1][0][0] * n[1]) * mu * chi[j];
                        continue;
                    }
                    for c in 0..2 {
                        let mut v = ZERO;
                        for jj in 0..2 {
                            let mut tr = (gr[0][c][0] + gr[1][c][1]) * (lam * n[jj]);
                            for b in 0..2 {
                                tr += (gr[b][c][jj] + gr[jj][c][b]) * (mu * n[b]);
                            }
                            v += tr * n[jj];
                        }
                        spec[c][j] = v * chi[j];
                    }
                }
                for c in 0..dim {
                    let fd = plan.inverse(&spec[c], 1, plan.n_t());
                    for (a, b) in fd.iter().zip(t.field.trace(r * dim + c)) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
            assert!(worst <= 1e-6 * scale, "{:?}: {worst} vs {scale}", m.mode);
        }
    }

    #[test]
    fn chunks_match_monolithic_evaluation() {
        let (layout, pulse, plan) = setup();
        let grid = SamplingGrid::new([-0.2, 0.2, -0.2, 0.2], 3, 2, 3).unwrap();
        let m = MediumModel::inplane(2.0).unwrap();
        let ctx = TrialContext::new(&grid, &layout, &pulse, &plan, &m).unwrap();
        let all = ctx.chunk(0..grid.n_trials(), Exec::Sequential).unwrap();
        let streamed: Vec<TrialSignature> = batch_trials(&ctx, 4, Exec::default())
            .flat_map(|c| c.unwrap())
            .collect();
        assert_eq!(all.len(), 18);
        assert_eq!(all, streamed);
        for (idx, t) in all.iter().enumerate() {
            assert_eq!(t.point * 3 + t.normal, idx);
        }
        let single = trial_field(all[7].z, all[7].n, &layout, &pulse, &plan, &m).unwrap();
        for (a, b) in single.field.values.iter().zip(&all[7].field.values) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn one_point_grid_gives_one_signature() {
        let (layout, pulse, plan) = setup();
        let grid = SamplingGrid::new([0.05, 0.05, -0.02, -0.02], 1, 1, 1).unwrap();
        let m = MediumModel::antiplane();
        let ctx = TrialContext::new(&grid, &layout, &pulse, &plan, &m).unwrap();
        let all: Vec<_> = batch_trials(&ctx, 10, Exec::default()).collect();
        assert_eq!(all.len(), 1);
        let sigs = all.into_iter().next().unwrap().unwrap();
        assert_eq!(sigs.len(), 1);
        let single = trial_field([0.05, -0.02], [1.0, 0.0], &layout, &pulse, &plan, &m).unwrap();
        assert_eq!(sigs[0].field, single.field);
    }

    #[test]
    fn homogeneous_in_pulse_and_translation_covariant() {
        let (layout, pulse, plan) = setup();
        let m = MediumModel::antiplane();
        let z = [0.1, 0.1];
        let n = [0.0, 1.0];
        let base = trial_field(z, n, &layout, &pulse, &plan, &m).unwrap();
        let scaled = trial_field(z, n, &layout, &pulse.scaled(2.5), &plan, &m).unwrap();
        for (a, b) in base.field.values.iter().zip(&scaled.field.values) {
            assert!((2.5 * a - b).abs() < 1e-13);
        }
        let shift = [0.3, -0.7];
        let mut moved = layout.clone();
        for p in moved.receivers.iter_mut() {
            *p = [p[0] + shift[0], p[1] + shift[1]];
        }
        let zt = [z[0] + shift[0], z[1] + shift[1]];
        let t = trial_field(zt, n, &moved, &pulse, &plan, &m).unwrap();
        let peak = base.field.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in base.field.values.iter().zip(&t.field.values) {
            assert!((a - b).abs() < 1e-10 * peak);
        }
    }

    #[test]
    fn receiver_coincidence_is_rejected() {
        let (layout, pulse, plan) = setup();
        let z = layout.receivers[2];
        assert!(trial_field(z, [1.0, 0.0], &layout, &pulse, &plan, &MediumModel::antiplane()).is_err());
    }
}
