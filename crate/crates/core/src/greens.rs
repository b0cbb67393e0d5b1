//! Frequency-domain fundamental solutions on the damped line and time
//! synthesis of point-source fields.
//!
//! Kernels are written in terms of the separation `d = x - y` and the radial
//! ladder `F_m = ((1/r) d/dr)^m f`, which turns every Cartesian derivative of
//! a radial function into a short sum, e.g.
//! `d_i d_j f = delta_ij F_1 + d_i d_j F_2`. For the Helmholtz kernel
//! `g = (i/4) H_0(k r)` the ladder is `F_m = (i/4) (-k/r)^m H_m(k r)`.
//!
//! In-plane, the displacement dyadic is `G = A I + grad grad B` with
//! `A = g_s / mu` and `B = (g_s - g_p) / s^2`; `P = A + lap B = g_p / c_p^2`
//! carries the dilatational part.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::geometry::{dot, norm, Point};
use crate::model::{MediumModel, Mode, Pulse, TransformPlan};
use crate::special::hankel1_seq;

/// Kernels are not evaluated closer than this.
pub const MIN_SEPARATION: f64 = 1e-8;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `[F_0, ..., F_4]` for a radial function.
pub type Ladder = [Complex64; 5];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn helmholtz_ladder(k: Complex64, r: f64) -> Ladder {
    let h = hankel1_seq::<5>(k * r);
    let q = -k / r;
    let mut pow = Complex64::new(0.0, 0.25);
    let mut out = [ZERO; 5];
    for m in 0..5 {
        out[m] = pow * h[m];
        pow *= q;
    }
    out
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Cartesian derivatives (with respect to `d`) of a radial function.
#[derive(Clone, Copy)]
struct Tensor {
    d: Point,
    f: Ladder,
}

impl Tensor {
    fn d1(&self, i: usize) -> Complex64 {
        self.f[1] * self.d[i]
    }

    fn d2(&self, i: usize, j: usize) -> Complex64 {
        self.f[1] * delta(i, j) + self.f[2] * (self.d[i] * self.d[j])
    }

    fn d3(&self, i: usize, j: usize, k: usize) -> Complex64 {
        let d = &self.d;
        let a = delta(i, j) * d[k] + delta(i, k) * d[j] + delta(j, k) * d[i];
        self.f[2] * a + self.f[3] * (d[i] * d[j] * d[k])
    }

    fn d4(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let d = &self.d;
        let a = delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k);
        let b = delta(i, j) * d[k] * d[l]
            + delta(i, k) * d[j] * d[l]
            + delta(i, l) * d[j] * d[k]
            + delta(j, k) * d[i] * d[l]
            + delta(j, l) * d[i] * d[k]
            + delta(k, l) * d[i] * d[j];
        self.f[2] * a + self.f[3] * b + self.f[4] * (d[i] * d[j] * d[k] * d[l])
    }
}

/// A `dim x dim` complex kernel value; entries beyond `dim` are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dyad {
    pub dim: usize,
    pub m: [[Complex64; 2]; 2],
}

impl Dyad {
    pub fn scalar(v: Complex64) -> Self {
        Self {
            dim: 1,
            m: [[v, ZERO], [ZERO, ZERO]],
        }
    }

    pub fn get(&self, k: usize, j: usize) -> Complex64 {
        self.m[k][j]
    }

    pub fn transpose(&self) -> Self {
        let m = self.m;
        Self {
            dim: self.dim,
            m: [[m[0][0], m[1][0]], [m[0][1], m[1][1]]],
        }
    }

    /// `M p` for a real vector `p` (only `p[0]` is used when `dim = 1`).
    pub fn apply(&self, p: Point) -> [Complex64; 2] {
        if self.dim == 1 {
            return [self.m[0][0] * p[0], ZERO];
        }
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1],
            self.m[1][0] * p[0] + self.m[1][1] * p[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Kernels of one medium at one complex frequency `s`.
#[derive(Clone, Copy, Debug)]
pub struct Kernels {
    mode: Mode,
    lambda: f64,
    mu: f64,
    cp: f64,
    s: Complex64,
    ks: Complex64,
    kp: Complex64,
}

impl Kernels {
    pub fn new(medium: &MediumModel, s: Complex64) -> Self {
        Self {
            mode: medium.mode,
            lambda: medium.lambda,
            mu: medium.mu(),
            cp: medium.cp(),
            s,
            ks: s / medium.cs(),
            kp: s / medium.cp(),
        }
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        match self.mode {
            Mode::AntiplaneScalar => 1,
            Mode::InplaneElastic => 2,
        }
    }

    fn separation(&self, d: Point) -> Result<f64> {
        let r = norm(d);
        if !(r >= MIN_SEPARATION) {
            return Err(Error::SingularEvaluation { r });
        }
        Ok(r)
    }

    pub fn gs(&self, r: f64) -> Ladder {
        helmholtz_ladder(self.ks, r)
    }

    pub fn gp(&self, r: f64) -> Ladder {
        helmholtz_ladder(self.kp, r)
    }

    /// Ladder of `B = (g_s - g_p) / s^2`. Small arguments use the ascending
    /// series, where the difference can be formed without cancellation.
    pub fn b_ladder(&self, r: f64) -> Ladder {
        if (self.ks * r).norm() > 2.0 {
            let (a, b) = (self.gs(r), self.gp(r));
            let s2 = self.s * self.s;
            let mut out = [ZERO; 5];
            for m in 0..5 {
                out[m] = (a[m] - b[m]) / s2;
            }
            return out;
        }
        self.b_series(r)
    }

    fn b_series(&self, r: f64) -> Ladder {
        // B = sum_p r^(2p) (a_p + b_p ln r); (1/r) d/dr maps
        // r^(2p) (a + b ln r) to r^(2p-2) (2p a + b + 2p b ln r).
        const TERMS: usize = 30;
        let cs = self.mu.sqrt();
        let alpha =
            |k: Complex64| Complex64::new(0.0, 0.25) - ((k / 2.0).ln() + EULER_GAMMA) / (2.0 * PI);
        let (al_s, al_p) = (alpha(self.ks), alpha(self.kp));
        let s2 = self.s * self.s;
        let mut terms: Vec<(i32, Complex64, Complex64)> = Vec::with_capacity(TERMS + 1);
        terms.push((0, -(self.cp / cs).ln() / (2.0 * PI) / s2, ZERO));
        let mut coef = Complex64::new(1.0, 0.0);
        let mut harmonic = 0.0;
        for m in 1..=TERMS {
            let mf = m as f64;
            coef *= -1.0 / (4.0 * mf * mf);
            if m > 1 {
                coef *= s2;
            }
            harmonic += 1.0 / mf;
            let ws = cs.powi(-2 * m as i32);
            let wp = self.cp.powi(-2 * m as i32);
            let h = harmonic / (2.0 * PI);
            let a = coef * ((al_s + h) * ws - (al_p + h) * wp);
            let b = coef * (-(ws - wp) / (2.0 * PI));
            terms.push((m as i32, a, b));
        }
        let lr = r.ln();
        let mut out = [ZERO; 5];
        for slot in out.iter_mut() {
            *slot = terms
                .iter()
                .map(|&(p, a, b)| (a + b * lr) * r.powi(2 * p))
                .sum();
            for t in terms.iter_mut() {
                let (p, a, b) = *t;
                let tp = 2.0 * p as f64;
                *t = (p - 1, a * tp + b, b * tp);
            }
        }
        out
    }

    /// Displacement at `x` due to a unit point force at `y`, `d = x - y`.
    pub fn disp(&self, d: Point) -> Result<Dyad> {
        let r = self.separation(d)?;
        let a = Tensor { d, f: self.gs(r) };
        match self.mode {
            Mode::AntiplaneScalar => Ok(Dyad::scalar(a.f[0] / self.mu)),
            Mode::InplaneElastic => {
                let b = Tensor { d, f: self.b_ladder(r) };
                let mut m = [[ZERO; 2]; 2];
                for k in 0..2 {
                    for p in 0..2 {
                        m[k][p] = a.f[0] / self.mu * delta(k, p) + b.d2(k, p);
                    }
                }
                Ok(Dyad { dim: 2, m })
            }
        }
    }

    /// Normal-traction kernel decomposed over the normal: `T_kjb` with
    /// `T(n)_kj = sum_b T_kjb n_b`. Anti-plane uses index `[0][0][b]`.
    pub fn traction_basis(&self, d: Point) -> Result<[[[Complex64; 2]; 2]; 2]> {
        let r = self.separation(d)?;
        let a = Tensor { d, f: self.gs(r) };
        let mut t = [[[ZERO; 2]; 2]; 2];
        match self.mode {
            Mode::AntiplaneScalar => {
                for b in 0..2 {
                    t[0][0][b] = -a.d1(b);
                }
            }
            Mode::InplaneElastic => {
                let (lam, mu) = (self.lambda, self.mu);
                let fa = a.f.map(|v| v / mu);
                let a = Tensor { d, f: fa };
                let p = Tensor {
                    d,
                    f: self.gp(r).map(|v| v / (self.cp * self.cp)),
                };
                let bt = Tensor { d, f: self.b_ladder(r) };
                for k in 0..2 {
                    for j in 0..2 {
                        for b in 0..2 {
                            t[k][j][b] = -(p.d1(k) * (lam * delta(j, b))
                                + (a.d1(b) * delta(k, j) + a.d1(j) * delta(k, b)
                                    + bt.d3(j, k, b) * 2.0)
                                    * mu);
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    /// Displacement at `x` due to a unit displacement jump across an element
    /// at `y` with unit normal `n`; equals the traction at `y` (normal `n`) of
    /// the point-force field centred at `x`.
    pub fn traction(&self, d: Point, n: Point) -> Result<Dyad> {
        let t = self.traction_basis(d)?;
        let mut m = [[ZERO; 2]; 2];
        for k in 0..2 {
            for j in 0..2 {
                m[k][j] = t[k][j][0] * n[0] + t[k][j][1] * n[1];
            }
        }
        Ok(Dyad { dim: self.dim(), m })
    }

    /// Traction at `x` (normal `nx`) due to a unit jump at `y` (normal `ny`).
    pub fn hypersingular(&self, d: Point, nx: Point, ny: Point) -> Result<Dyad> {
        let r = self.separation(d)?;
        let mu = self.mu;
        let a = Tensor { d, f: self.gs(r) };
        match self.mode {
            Mode::AntiplaneScalar => {
                let v = a.f[1] * dot(nx, ny) + a.f[2] * (dot(d, nx) * dot(d, ny));
                Ok(Dyad::scalar(-v * mu))
            }
            Mode::InplaneElastic => {
                let lam = self.lambda;
                let a = Tensor {
                    d,
                    f: a.f.map(|v| v / mu),
                };
                let p = Tensor {
                    d,
                    f: self.gp(r).map(|v| v / (self.cp * self.cp)),
                };
                let bt = Tensor { d, f: self.b_ladder(r) };
                // grad_m T_kj
                let dt = |m: usize, k: usize, j: usize| -> Complex64 {
                    let mut v = p.d2(m, k) * (lam * ny[j]);
                    for b in 0..2 {
                        v += (a.d2(m, b) * delta(k, j) * ny[b]
                            + bt.d4(m, j, k, b) * (2.0 * ny[b]))
                            * mu;
                    }
                    v += a.d2(m, j) * (mu * ny[k]);
                    -v
                };
                let mut h = [[ZERO; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let mut v = (dt(0, 0, j) + dt(1, 1, j)) * (lam * nx[i]);
                        for q in 0..2 {
                            v += (dt(q, i, j) + dt(i, q, j)) * (mu * nx[q]);
                        }
                        h[i][j] = v;
                    }
                }
                Ok(Dyad { dim: 2, m: h })
            }
        }
    }
}

/// Inverse-transforms per-frequency component spectra into `dim` real traces
/// of length `N_t` on the record times `t_k = k dt`, `k = 1..=N_t`.
pub fn synthesize<F>(plan: &TransformPlan, dim: usize, mut f: F) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(usize) -> Result<[Complex64; 2]>,
{
    let nf = plan.n_freq();
    let mut spec = vec![vec![ZERO; nf]; dim];
    for j in 0..nf {
        let v = f(j)?;
        for c in 0..dim {
            spec[c][j] = v[c];
        }
    }
    Ok(spec
        .iter()
        .map(|s| plan.inverse(s, 1, plan.n_t()))
        .collect())
}

/// Incident field `u(x, t)` of a point force `chi(t) p` at `y`.
pub fn synthesize_pointsource(
    x: Point,
    y: Point,
    p: Point,
    pulse: &Pulse,
    plan: &TransformPlan,
    medium: &MediumModel,
) -> Result<Vec<Vec<f64>>> {
    let chi = pulse.spectrum(plan);
    let d = [x[0] - y[0], x[1] - y[1]];
    synthesize(plan, medium.dim(), |j| {
        if chi[j] == ZERO {
            return Ok([ZERO; 2]);
        }
        let g = Kernels::new(medium, plan.s(j)).disp(d)?;
        let v = g.apply(p);
        Ok([v[0] * chi[j], v[1] * chi[j]])
    })
}
