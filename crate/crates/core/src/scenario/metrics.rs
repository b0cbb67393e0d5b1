//! Map-versus-truth metrics: localization error, skeleton Hausdorff distance,
//! mask components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::{threshold_values, IndicatorMap};
use crate::model::geometry::Point;
use crate::model::CrackScene;
use crate::trials::SamplingGrid;

/// Metrics of one map against the true cracks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapMetrics {
    pub kind: String,
    pub argmax: Point,
    /// Distance from the argmax to the nearest crack point.
    pub localization_error: f64,
    /// The same in grid cells (largest spacing).
    pub localization_cells: f64,
    pub tau: f64,
    pub mask_cells: usize,
    pub components: usize,
    /// Components that never come within one cell diagonal of a crack.
    pub spurious_components: usize,
    /// Hausdorff distance between the mask skeleton and the cracks.
    pub hausdorff: f64,
    /// Fraction of mask cells within one cell diagonal of a crack.
    pub precision: f64,
    /// Fraction of crack samples within one cell diagonal of the mask.
    pub recall: f64,
}

fn cell(grid: &SamplingGrid) -> f64 {
    let (hx, hy) = grid.spacing();
    hx.max(hy)
}

fn diagonal(grid: &SamplingGrid) -> f64 {
    let (hx, hy) = grid.spacing();
    hx.hypot(hy)
}

fn crack_distance(scene: &CrackScene, p: Point) -> f64 {
    scene.nearest(p).map_or(f64::INFINITY, |(_, d)| d)
}

/// Dense samples along every crack.
fn crack_samples(scene: &CrackScene, step: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for a in &scene.arcs {
        let n = ((a.length() / step).ceil() as usize).max(1);
        out.extend((0..=n).map(|q| a.point(q as f64 / n as f64)));
    }
    out
}

/// 8-connected component labels; `None` outside the mask.
pub fn components(mask: &[bool], nx: usize, ny: usize) -> (Vec<Option<usize>>, usize) {
    let mut label = vec![None; mask.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start].is_some() {
            continue;
        }
        label[start] = Some(count);
        stack.push(start);
        while let Some(q) = stack.pop() {
            let (x, y) = ((q % nx) as isize, (q / nx) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (u, v) = (x + dx, y + dy);
                    if u < 0 || v < 0 || u >= nx as isize || v >= ny as isize {
                        continue;
                    }
                    let r = v as usize * nx + u as usize;
                    if mask[r] && label[r].is_none() {
                        label[r] = Some(count);
                        stack.push(r);
                    }
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Zhang-Suen thinning of a binary image.
pub fn skeleton(mask: &[bool], nx: usize, ny: usize) -> Vec<bool> {
    let mut img = mask.to_vec();
    let at = |img: &[bool], x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && x < nx as isize && y < ny as isize && img[y as usize * nx + x as usize]
    };
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for q in 0..img.len() {
                if !img[q] {
                    continue;
                }
                let (x, y) = ((q % nx) as isize, (q / nx) as isize);
                // P2..P9 clockwise from north.
                let p = [
                    at(&img, x, y - 1),
                    at(&img, x + 1, y - 1),
                    at(&img, x + 1, y),
                    at(&img, x + 1, y + 1),
                    at(&img, x, y + 1),
                    at(&img, x - 1, y + 1),
                    at(&img, x - 1, y),
                    at(&img, x - 1, y - 1),
                ];
                let b = p.iter().filter(|&&v| v).count();
                let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                let cond = if pass == 0 {
                    !(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6])
                } else {
                    !(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6])
                };
                if (2..=6).contains(&b) && a == 1 && cond {
                    remove.push(q);
                }
            }
            changed |= !remove.is_empty();
            for q in remove {
                img[q] = false;
            }
        }
        if !changed {
            return img;
        }
    }
}

fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let directed = |from: &[Point], to: &[Point]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    directed(a, b).max(directed(b, a))
}

/// Metrics of `values` on `grid` against `truth`, thresholded at `tau`.
pub fn map_metrics(
    kind: &str,
    grid: &SamplingGrid,
    values: &[f64],
    truth: &CrackScene,
    tau: f64,
) -> Result<MapMetrics> {
    if values.len() != grid.n_points() {
        return Err(Error::ShapeMismatch("map and grid differ in size".into()));
    }
    if truth.arcs.is_empty() {
        return Err(Error::InvalidParameter("metrics need at least one true crack".into()));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let th = threshold_values(values, tau)?;
    let mut best = 0;
    for (q, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = q;
        }
    }
    let argmax = grid.point(best);
    let err = crack_distance(truth, argmax);
    let near = diagonal(grid);
    let (labels, count) = components(&th.mask, nx, ny);
    let mut touches = vec![false; count];
    let mut close_cells = 0;
    for (q, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            if crack_distance(truth, grid.point(q)) <= near {
                touches[*l] = true;
                close_cells += 1;
            }
        }
    }
    let mask_cells = th.mask.iter().filter(|&&m| m).count();
    let skel: Vec<Point> = skeleton(&th.mask, nx, ny)
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(q, _)| grid.point(q))
        .collect();
    let samples = crack_samples(truth, 0.1 * cell(grid).max(1e-6));
    let masked: Vec<Point> = (0..th.mask.len())
        .filter(|&q| th.mask[q])
        .map(|q| grid.point(q))
        .collect();
    let covered = samples
        .iter()
        .filter(|s| masked.iter().any(|p| (p[0] - s[0]).hypot(p[1] - s[1]) <= near))
        .count();
    Ok(MapMetrics {
        kind: kind.to_string(),
        argmax,
        localization_error: err,
        localization_cells: err / cell(grid),
        tau,
        mask_cells,
        components: count,
        spurious_components: touches.iter().filter(|&&t| !t).count(),
        hausdorff: hausdorff(&skel, &samples),
        precision: close_cells as f64 / mask_cells.max(1) as f64,
        recall: covered as f64 / samples.len() as f64,
    })
}

/// Metrics straight from an indicator map.
pub fn metrics_of(map: &IndicatorMap, truth: &CrackScene, tau: f64) -> Result<MapMetrics> {
    map_metrics(map.kind.label(), &map.grid, &map.values, truth, tau)
}
