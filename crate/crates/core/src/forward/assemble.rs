//! Galerkin matrix of the crack traction operator.
//!
//! On a straight crack the hypersingular kernel, restricted to the line and
//! written in the local (tangent, normal) frame, is diagonal and splits into
//! a mass part and a second tangential derivative:
//!
//! ```text
//! H_c(r) = M_c(r) + d^2/dr^2 S_c(r)        (c = tangential, normal)
//! ```
//!
//! Integrating the derivative by parts onto the test and trial functions
//! leaves only logarithmically singular kernels:
//! `W = int int (M_c psi phi - S_c psi' phi')`. Identical and adjacent
//! element pairs split `K = a ln r + R` and integrate the logarithm
//! analytically in the inner variable. Pairs on different cracks use the
//! full kernel with ordinary Gauss rules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::mesh::{gauss01, ArcMesh, CrackMesh};
use crate::error::Result;
use crate::greens::Kernels;
use crate::model::{MediumModel, Mode};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Mass and stiffness line kernels per local component.
#[derive(Clone, Copy, Debug)]
pub struct LineKernels {
    pub mass: [Complex64; 2],
    pub stiff: [Complex64; 2],
}

/// Line kernels of the self-crack weak form at separation `r`.
pub fn line_kernels(k: &Kernels, medium: &MediumModel, r: f64) -> LineKernels {
    let s2 = k.s() * k.s();
    let mu = medium.mu();
    let gs = k.gs(r)[0];
    match medium.mode {
        Mode::AntiplaneScalar => LineKernels {
            mass: [s2 * gs, ZERO],
            stiff: [gs * mu, ZERO],
        },
        Mode::InplaneElastic => {
            let gp = k.gp(r)[0];
            let b = k.b_ladder(r);
            let b2 = b[1] + b[2] * (r * r);
            let cp2 = medium.cp().powi(2);
            LineKernels {
                mass: [s2 * gs, s2 * gp],
                stiff: [
                    gs * (4.0 * mu) - gp * (4.0 * mu * mu / cp2) + b2 * (4.0 * mu * mu),
                    gp * (4.0 * mu) - gs * (4.0 * mu) - b2 * (4.0 * mu * mu),
                ],
            }
        }
    }
}

/// Coefficients of `ln r` in [`line_kernels`].
pub fn line_log_coeffs(k: &Kernels, medium: &MediumModel) -> LineKernels {
    let s2 = k.s() * k.s();
    let mu = medium.mu();
    let g = -1.0 / (2.0 * PI);
    match medium.mode {
        Mode::AntiplaneScalar => LineKernels {
            mass: [s2 * g, ZERO],
            stiff: [Complex64::new(mu * g, 0.0), ZERO],
        },
        Mode::InplaneElastic => {
            let a = -(mu / PI) * (1.0 - mu / medium.cp().powi(2));
            LineKernels {
                mass: [s2 * g, s2 * g],
                stiff: [Complex64::new(a, 0.0); 2],
            }
        }
    }
}

fn shape(x: f64, (x0, x1): (f64, f64)) -> [f64; 2] {
    let h = x1 - x0;
    [(x1 - x) / h, (x - x0) / h]
}

fn slope((x0, x1): (f64, f64)) -> [f64; 2] {
    let h = x1 - x0;
    [-1.0 / h, 1.0 / h]
}

fn f0(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u.abs().ln() - u
    }
}

fn f1(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        0.5 * u * u * u.abs().ln() - 0.25 * u * u
    }
}

/// `int_e int_f ln|x - y| N_a(x) N_b(y)` and `int_e int_f ln|x - y|` on a
/// line, inner integral in closed form. The outer rule is pulled toward the
/// element ends by `t -> t^2 (3 - 2t)`, where the inner result behaves like
/// `u ln u`.
fn log_pair(e: (f64, f64), f: (f64, f64), outer: &[(f64, f64)]) -> ([[f64; 2]; 2], f64) {
    let he = e.1 - e.0;
    let hf = f.1 - f.0;
    let mut m = [[0.0; 2]; 2];
    let mut plain = 0.0;
    for &(t, wt) in outer {
        let xi = t * t * (3.0 - 2.0 * t);
        let w = wt * 6.0 * t * (1.0 - t);
        let x = e.0 + xi * he;
        let (u0, u1) = (f.0 - x, f.1 - x);
        let c0 = f0(u1) - f0(u0);
        let cy = x * c0 + f1(u1) - f1(u0);
        let nb = [(f.1 * c0 - cy) / hf, (cy - f.0 * c0) / hf];
        let na = shape(x, e);
        let wx = w * he;
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += wx * na[a] * nb[b];
            }
        }
        plain += wx * c0;
    }
    (m, plain)
}

/// Local contributions of one element pair on the same crack:
/// `[component][a][b]`.
type PairBlock = [[[Complex64; 2]; 2]; 2];

struct SelfRules {
    outer16: Vec<(f64, f64)>,
    rem_outer: Vec<(f64, f64)>,
    rem_inner: Vec<(f64, f64)>,
    regular: [Vec<(f64, f64)>; 3],
}

impl SelfRules {
    fn new() -> Self {
        Self {
            outer16: gauss01(16),
            rem_outer: gauss01(8),
            rem_inner: gauss01(7),
            regular: [gauss01(4), gauss01(6), gauss01(10)],
        }
    }

    fn regular_for(&self, gap: f64, h: f64) -> &[(f64, f64)] {
        let ratio = gap / h;
        if ratio >= 3.0 {
            &self.regular[0]
        } else if ratio >= 1.0 {
            &self.regular[1]
        } else {
            &self.regular[2]
        }
    }
}

fn self_pair(
    k: &Kernels,
    medium: &MediumModel,
    logc: &LineKernels,
    rules: &SelfRules,
    e: (f64, f64),
    f: (f64, f64),
    singular: bool,
) -> PairBlock {
    let ncomp = medium.dim();
    let mut mass = [[[ZERO; 2]; 2]; 2];
    let mut stiff = [ZERO; 2];
    let (he, hf) = (e.1 - e.0, f.1 - f.0);
    let mut accumulate = |x: f64, y: f64, w: f64, sub_log: bool| {
        let r = (x - y).abs();
        let mut lk = line_kernels(k, medium, r);
        if sub_log {
            let lr = r.ln();
            for c in 0..ncomp {
                lk.mass[c] -= logc.mass[c] * lr;
                lk.stiff[c] -= logc.stiff[c] * lr;
            }
        }
        let (na, nb) = (shape(x, e), shape(y, f));
        for c in 0..ncomp {
            for a in 0..2 {
                for b in 0..2 {
                    mass[c][a][b] += lk.mass[c] * (w * na[a] * nb[b]);
                }
            }
            stiff[c] += lk.stiff[c] * w;
        }
    };
    let (outer, inner) = if singular {
        (&rules.rem_outer[..], &rules.rem_inner[..])
    } else {
        let gap = (f.0 - e.1).max(e.0 - f.1).max(0.0);
        let q = rules.regular_for(gap, he.max(hf));
        (q, q)
    };
    for &(xi, wx) in outer {
        for &(eta, wy) in inner {
            accumulate(e.0 + xi * he, f.0 + eta * hf, wx * wy * he * hf, singular);
        }
    }
    if singular {
        let (lm, l0) = log_pair(e, f, &rules.outer16);
        for c in 0..ncomp {
            for a in 0..2 {
                for b in 0..2 {
                    mass[c][a][b] += logc.mass[c] * lm[a][b];
                }
            }
            stiff[c] += logc.stiff[c] * l0;
        }
    }
    let (sa, sb) = (slope(e), slope(f));
    let mut out = [[[ZERO; 2]; 2]; 2];
    for c in 0..ncomp {
        for a in 0..2 {
            for b in 0..2 {
                out[c][a][b] = mass[c][a][b] - stiff[c] * (sa[a] * sb[b]);
            }
        }
    }
    out
}

fn cross_pair(
    k: &Kernels,
    dim: usize,
    am: &ArcMesh,
    e: (f64, f64),
    bm: &ArcMesh,
    f: (f64, f64),
) -> Result<[[[[Complex64; 2]; 2]; 2]; 2]> {
    // [alpha][beta][a][b]
    let mid = |m: &ArcMesh, el: (f64, f64)| m.point(0.5 * (el.0 + el.1));
    let (pa, pb) = (mid(am, e), mid(bm, f));
    let dist = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
    let h = (e.1 - e.0).max(f.1 - f.0);
    let n = if dist > 6.0 * h {
        4
    } else if dist > 3.0 * h {
        6
    } else if dist > 1.5 * h {
        10
    } else {
        16
    };
    let q = gauss01(n);
    let mut out = [[[[ZERO; 2]; 2]; 2]; 2];
    let (he, hf) = (e.1 - e.0, f.1 - f.0);
    for &(xi, wx) in &q {
        let xs = e.0 + xi * he;
        let x = am.point(xs);
        let na = shape(xs, e);
        for &(eta, wy) in &q {
            let ys = f.0 + eta * hf;
            let y = bm.point(ys);
            let nb = shape(ys, f);
            let hk = k.hypersingular([x[0] - y[0], x[1] - y[1]], am.normal, bm.normal)?;
            let w = wx * wy * he * hf;
            for al in 0..dim {
                for be in 0..dim {
                    let v = if dim == 1 {
                        hk.get(0, 0)
                    } else {
                        let (ex, ey) = (am.frame(al), bm.frame(be));
                        let mut v = ZERO;
                        for i in 0..2 {
                            for j in 0..2 {
                                v += hk.get(i, j) * (ex[i] * ey[j]);
                            }
                        }
                        v
                    };
                    for a in 0..2 {
                        for b in 0..2 {
                            out[al][be][a][b] += v * (w * na[a] * nb[b]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Galerkin matrix `W` of the traction operator (without the stiffness
/// term). Complex symmetric by construction.
pub fn traction_operator(mesh: &CrackMesh, k: &Kernels, medium: &MediumModel) -> Result<DMatrix<Complex64>> {
    let n = mesh.n_dof();
    let dim = mesh.dim;
    let mut w = DMatrix::from_element(n, n, ZERO);
    let rules = SelfRules::new();
    let logc = line_log_coeffs(k, medium);
    // Adds a pair contribution and its transpose partner; `once` marks the
    // diagonal entry of an element with itself, which has no partner.
    let add = |w: &mut DMatrix<Complex64>, i: usize, j: usize, v: Complex64, once: bool| {
        w[(i, j)] += v;
        if !once {
            w[(j, i)] += v;
        }
    };
    for (ia, am) in mesh.arcs.iter().enumerate() {
        for e in 0..am.n_elements() {
            for f in e..am.n_elements() {
                let blk = self_pair(k, medium, &logc, &rules, am.element(e), am.element(f), f - e <= 1);
                for a in 0..2 {
                    let Some(ba) = am.basis_of(e, a) else { continue };
                    for b in 0..2 {
                        let Some(bb) = am.basis_of(f, b) else { continue };
                        // Within one element only the upper triangle is used
                        // so that the matrix is exactly symmetric.
                        if e == f && b < a {
                            continue;
                        }
                        let once = e == f && a == b;
                        for c in 0..dim {
                            let (i, j) = (mesh.dof(ia, ba, c), mesh.dof(ia, bb, c));
                            add(&mut w, i, j, blk[c][a][b], once);
                        }
                    }
                }
            }
        }
        for (ib, bm) in mesh.arcs.iter().enumerate().skip(ia + 1) {
            for e in 0..am.n_elements() {
                for f in 0..bm.n_elements() {
                    let blk = cross_pair(k, dim, am, am.element(e), bm, bm.element(f))?;
                    for a in 0..2 {
                        let Some(ba) = am.basis_of(e, a) else { continue };
                        for b in 0..2 {
                            let Some(bb) = bm.basis_of(f, b) else { continue };
                            for al in 0..dim {
                                for be in 0..dim {
                                    add(
                                        &mut w,
                                        mesh.dof(ia, ba, al),
                                        mesh.dof(ib, bb, be),
                                        blk[al][be][a][b],
                                        false,
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(w)
}

/// Mass matrix of the stiffness term, `K (x) int psi_a psi_b`.
pub fn stiffness_term(mesh: &CrackMesh) -> DMatrix<f64> {
    let n = mesh.n_dof();
    let dim = mesh.dim;
    let mut m = DMatrix::zeros(n, n);
    for (ia, am) in mesh.arcs.iter().enumerate() {
        let kmat = if dim == 1 {
            [[am.stiffness.antiplane(), 0.0], [0.0, 0.0]]
        } else {
            am.stiffness.matrix()
        };
        for e in 0..am.n_elements() {
            let (x0, x1) = am.element(e);
            let h = x1 - x0;
            let local = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
            for a in 0..2 {
                let Some(ba) = am.basis_of(e, a) else { continue };
                for b in 0..2 {
                    let Some(bb) = am.basis_of(e, b) else { continue };
                    for al in 0..dim {
                        for be in 0..dim {
                            m[(mesh.dof(ia, ba, al), mesh.dof(ia, bb, be))] +=
                                kmat[al][be] * local[a][b];
                        }
                    }
                }
            }
        }
    }
    m
}

/// Full crack system `A = W - K (x) M`.
pub fn assemble_crack_system(
    mesh: &CrackMesh,
    k: &Kernels,
    medium: &MediumModel,
) -> Result<DMatrix<Complex64>> {
    let mut a = traction_operator(mesh, k, medium)?;
    let m = stiffness_term(mesh);
    for (v, kv) in a.iter_mut().zip(m.iter()) {
        *v -= *kv;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Arc, CrackScene, Stiffness};

    fn media() -> [MediumModel; 2] {
        [MediumModel::antiplane(), MediumModel::inplane(1.5).unwrap()]
    }

    #[test]
    fn line_kernels_reproduce_direct_hypersingular_kernel() {
        // On the line, H_c = M_c + S_c''; S'' by central differences.
        let s = Complex64::new(3.0, 0.7);
        for m in media() {
            let k = Kernels::new(&m, s);
            for r in [0.05, 0.3, 1.2] {
                let h = 1e-3 * r;
                let (lo, mid, hi) = (
                    line_kernels(&k, &m, r - h),
                    line_kernels(&k, &m, r),
                    line_kernels(&k, &m, r + h),
                );
                let direct = k.hypersingular([r, 0.0], [0.0, 1.0], [0.0, 1.0]).unwrap();
                let scale = direct.max_abs();
                for c in 0..m.dim() {
                    let s2 = (lo.stiff[c] - mid.stiff[c] * 2.0 + hi.stiff[c]) / (h * h);
                    let want = direct.get(c, c);
                    assert!((mid.mass[c] + s2 - want).norm() < 1e-5 * scale, "r = {r}, c = {c}");
                }
                if m.dim() == 2 {
                    assert!(direct.get(0, 1).norm() < 1e-12 * scale);
                    assert!(direct.get(1, 0).norm() < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn log_coefficients_capture_the_singularity() {
        let s = Complex64::new(2.0, 0.4);
        for m in media() {
            let k = Kernels::new(&m, s);
            let a = line_log_coeffs(&k, &m);
            let rem = |r: f64| {
                let lk = line_kernels(&k, &m, r);
                [lk.stiff[0] - a.stiff[0] * r.ln(), lk.mass[0] - a.mass[0] * r.ln()]
            };
            let (r1, r2) = (rem(1e-6), rem(1e-7));
            for q in 0..2 {
                assert!((r1[q] - r2[q]).norm() < 1e-5 * (1.0 + r1[q].norm()));
            }
        }
    }

    #[test]
    fn log_pair_matches_brute_force() {
        // Separated elements: the analytic inner integral agrees with Gauss.
        let e = (0.0, 0.3);
        let f = (0.5, 0.6);
        let (lm, l0) = log_pair(e, f, &gauss01(16));
        let q = gauss01(20);
        let mut bm = [[0.0; 2]; 2];
        let mut b0 = 0.0;
        for &(xi, wx) in &q {
            for &(eta, wy) in &q {
                let (x, y) = (0.3 * xi, 0.5 + 0.1 * eta);
                let w = wx * wy * 0.3 * 0.1 * (x - y).abs().ln();
                let (na, nb) = (shape(x, e), shape(y, f));
                for a in 0..2 {
                    for b in 0..2 {
                        bm[a][b] += w * na[a] * nb[b];
                    }
                }
                b0 += w;
            }
        }
        assert!((l0 - b0).abs() < 1e-12);
        for a in 0..2 {
            for b in 0..2 {
                assert!((lm[a][b] - bm[a][b]).abs() < 1e-12);
            }
        }
        // Identical element: int_0^1 int_0^1 ln|x - y| = -3/2.
        let (_, same) = log_pair((0.0, 1.0), (0.0, 1.0), &gauss01(16));
        assert!((same + 1.5).abs() < 1e-7, "{same}");
    }

    fn two_cracks(k: f64) -> CrackScene {
        CrackScene::new(vec![
            Arc::new([-0.2, 0.0], [0.1, 0.05], Stiffness::Scalar(k)),
            Arc::new([0.0, 0.2], [0.1, 0.35], Stiffness::Scalar(k)),
        ])
        .unwrap()
        .with_density(60.0)
    }

    #[test]
    fn system_is_complex_symmetric() {
        for m in media() {
            let mesh = CrackMesh::new(&two_cracks(0.0), m.dim()).unwrap();
            let k = Kernels::new(&m, Complex64::new(5.0, 0.5));
            let a = assemble_crack_system(&mesh, &k, &m).unwrap();
            assert_eq!(a, a.transpose());
        }
    }

    #[test]
    fn stiffness_shift_is_mass_matrix() {
        let c = 3.5;
        for m in media() {
            let k = Kernels::new(&m, Complex64::new(4.0, 0.3));
            let a0 = assemble_crack_system(&CrackMesh::new(&two_cracks(1.0), m.dim()).unwrap(), &k, &m).unwrap();
            let mesh = CrackMesh::new(&two_cracks(1.0 + c), m.dim()).unwrap();
            let a1 = assemble_crack_system(&mesh, &k, &m).unwrap();
            let mass = stiffness_term(&CrackMesh::new(&two_cracks(1.0), m.dim()).unwrap());
            let diff = &a0 - &a1;
            for (d, mv) in diff.iter().zip(mass.iter()) {
                assert!((d - c * mv).norm() < 1e-12 * (1.0 + d.norm()));
            }
        }
    }
}
