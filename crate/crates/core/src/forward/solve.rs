use nalgebra::DMatrix;
use num_complex::Complex64;

use super::assemble::assemble_crack_system;
use super::mesh::{gauss01, ArcMesh, CrackMesh};
use crate::dataset::ScatteredDataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::greens::Kernels;
use crate::model::geometry::Point;
use crate::model::pulse::active_frequencies;
use crate::model::{CrackScene, MediumModel, Pulse, SensingLayout, TransformPlan};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest accepted 1-norm condition number of a crack system.
pub const MAX_CONDITION: f64 = 1e14;
/// Relative residual accepted from the dense solve.
pub const MAX_RESIDUAL: f64 = 1e-10;
/// Frequencies where the pulse spectrum falls below this fraction of its
/// peak are not solved.
pub const SPECTRUM_CUTOFF: f64 = 1e-6;

/// Gauss rule for integrating a smooth field over an element as seen from a
/// point at distance `dist`.
fn point_rule(dist: f64, h: f64) -> usize {
    if dist > 4.0 * h {
        6
    } else if dist > 1.5 * h {
        10
    } else {
        20
    }
}

/// Rows `int psi_a(z) T(x - z, n_z) e_alpha(z)` mapping crack degrees of
/// freedom to the displacement at `x`; one row per displacement component.
pub fn representation_rows(
    mesh: &CrackMesh,
    k: &Kernels,
    x: Point,
) -> Result<Vec<Vec<Complex64>>> {
    let dim = mesh.dim;
    let mut rows = vec![vec![ZERO; mesh.n_dof()]; dim];
    for (ia, am) in mesh.arcs.iter().enumerate() {
        for e in 0..am.n_elements() {
            element_rows(am, e, k, x, dim, |basis, comp, w| {
                for c in 0..dim {
                    rows[c][mesh.dof(ia, basis, comp)] += w[c];
                }
            })?;
        }
    }
    Ok(rows)
}

fn element_rows<F>(am: &ArcMesh, e: usize, k: &Kernels, x: Point, dim: usize, mut sink: F) -> Result<()>
where
    F: FnMut(usize, usize, [Complex64; 2]),
{
    let (x0, x1) = am.element(e);
    let h = x1 - x0;
    let mid = am.point(0.5 * (x0 + x1));
    let dist = (x[0] - mid[0]).hypot(x[1] - mid[1]);
    for (xi, w) in gauss01(point_rule(dist, h)) {
        let zs = x0 + xi * h;
        let z = am.point(zs);
        let t = k.traction_basis([x[0] - z[0], x[1] - z[1]])?;
        let shape = [1.0 - xi, xi];
        for a in 0..2 {
            let Some(basis) = am.basis_of(e, a) else { continue };
            let wa = w * h * shape[a];
            for comp in 0..dim {
                // Jump along e_comp (anti-plane: the scalar jump).
                let ej = if dim == 1 { [1.0, 0.0] } else { am.frame(comp) };
                let mut v = [ZERO; 2];
                for c in 0..dim {
                    for j in 0..dim {
                        let tn = if dim == 1 {
                            t[0][0][0] * am.normal[0] + t[0][0][1] * am.normal[1]
                        } else {
                            t[c][j][0] * am.normal[0] + t[c][j][1] * am.normal[1]
                        };
                        v[c] += tn * (ej[j] * wa);
                    }
                }
                sink(basis, comp, v);
            }
        }
    }
    Ok(())
}

/// Load vector `-int psi_a t^i_alpha` of a unit point force `p` at `y`. The
/// incident traction on the crack is the traction kernel seen from the
/// source, transposed.
pub fn incident_load(mesh: &CrackMesh, k: &Kernels, y: Point, p: Point) -> Result<Vec<Complex64>> {
    let dim = mesh.dim;
    let mut f = vec![ZERO; mesh.n_dof()];
    for (ia, am) in mesh.arcs.iter().enumerate() {
        for e in 0..am.n_elements() {
            element_rows(am, e, k, y, dim, |basis, comp, w| {
                let v = if dim == 1 { w[0] } else { w[0] * p[0] + w[1] * p[1] };
                f[mesh.dof(ia, basis, comp)] -= v;
            })?;
        }
    }
    Ok(f)
}

fn norm1(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solution of one crack system for several right-hand sides.
#[derive(Clone, Debug)]
pub struct FrequencySolve {
    pub s: Complex64,
    pub condition: f64,
    pub residual: f64,
    /// Jump coefficients, one column per right-hand side.
    pub jumps: DMatrix<Complex64>,
}

/// Assembles and solves `A(s) x = rhs` with condition and residual checks.
pub fn solve_crack_system(
    mesh: &CrackMesh,
    medium: &MediumModel,
    s: Complex64,
    rhs: &DMatrix<Complex64>,
) -> Result<FrequencySolve> {
    let k = Kernels::new(medium, s);
    let a = assemble_crack_system(mesh, &k, medium)?;
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularSystem {
            eta: s.re,
            cond: f64::INFINITY,
        })?;
    let condition = norm1(&a) * norm1(&inv);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularSystem {
            eta: s.re,
            cond: condition,
        });
    }
    let jumps = a.clone().lu().solve(rhs).ok_or(Error::SingularSystem {
        eta: s.re,
        cond: condition,
    })?;
    let scale = rhs.norm();
    let residual = if scale > 0.0 {
        (&a * &jumps - rhs).norm() / scale
    } else {
        0.0
    };
    if !(residual <= MAX_RESIDUAL) {
        return Err(Error::InaccurateSolve { eta: s.re, residual });
    }
    Ok(FrequencySolve {
        s,
        condition,
        residual,
        jumps,
    })
}

/// Scattered-field spectra at the receivers for every source at frequency
/// `s`, without the pulse: `[row][source]` with rows ordered receiver-major,
/// component-minor.
pub fn scattered_response(
    mesh: &CrackMesh,
    layout: &SensingLayout,
    medium: &MediumModel,
    s: Complex64,
) -> Result<DMatrix<Complex64>> {
    let dim = medium.dim();
    let n_rows = dim * layout.n_receivers();
    if mesh.is_empty() {
        return Ok(DMatrix::from_element(n_rows, layout.n_sources(), ZERO));
    }
    let k = Kernels::new(medium, s);
    let mut rhs = DMatrix::from_element(mesh.n_dof(), layout.n_sources(), ZERO);
    for (i, (y, p)) in layout.sources.iter().zip(&layout.polarizations).enumerate() {
        let f = incident_load(mesh, &k, *y, *p)?;
        rhs.set_column(i, &nalgebra::DVector::from_vec(f));
    }
    let sol = solve_crack_system(mesh, medium, s, &rhs)?;
    let mut r = DMatrix::from_element(n_rows, mesh.n_dof(), ZERO);
    for (m, x) in layout.receivers.iter().enumerate() {
        let rows = representation_rows(mesh, &k, *x)?;
        for (c, row) in rows.into_iter().enumerate() {
            for (q, v) in row.into_iter().enumerate() {
                r[(m * dim + c, q)] = v;
            }
        }
    }
    Ok(r * sol.jumps)
}

/// Synthetic scattered waveforms of a crack scene for every source and
/// receiver of the layout (masks are ignored here).
pub fn solve_scattering(
    scene: &CrackScene,
    layout: &SensingLayout,
    pulse: &Pulse,
    plan: &TransformPlan,
    medium: &MediumModel,
    exec: Exec,
) -> Result<ScatteredDataset> {
    medium.validate()?;
    pulse.validate()?;
    let dim = medium.dim();
    let mesh = CrackMesh::new(scene, dim)?;
    let (n_rows, n_src, n_t) = (dim * layout.n_receivers(), layout.n_sources(), plan.n_t());
    let mut data = ScatteredDataset::zeros(dim, layout.n_receivers(), n_t, n_src, plan.dt());
    if mesh.is_empty() {
        return Ok(data);
    }
    for (kind, pts) in [("source", &layout.sources), ("receiver", &layout.receivers)] {
        for (index, p) in pts.iter().enumerate() {
            if let Some((arc, distance)) = scene.nearest(*p) {
                if distance < crate::model::layout::ON_CRACK_TOL {
                    return Err(Error::PointOnCrack {
                        kind,
                        index,
                        x: p[0],
                        y: p[1],
                        arc,
                        distance,
                    });
                }
            }
        }
    }
    let chi = pulse.spectrum(plan);
    let active = active_frequencies(&chi, SPECTRUM_CUTOFF);
    let spectra = exec.try_map(active.len(), |q| {
        let j = active[q];
        scattered_response(&mesh, layout, medium, plan.s(j)).map(|r| r * chi[j])
    })?;
    let traces = exec.map(n_rows * n_src, |idx| {
        let (row, i) = (idx / n_src, idx % n_src);
        let mut spec = vec![ZERO; plan.n_freq()];
        for (q, &j) in active.iter().enumerate() {
            spec[j] = spectra[q][(row, i)];
        }
        plan.inverse(&spec, 1, n_t)
    });
    for (idx, tr) in traces.into_iter().enumerate() {
        let (row, i) = (idx / n_src, idx % n_src);
        for (k, v) in tr.into_iter().enumerate() {
            *data.get_mut(row, k, i) = v;
        }
    }
    Ok(data)
}
