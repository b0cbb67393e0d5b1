use gauss_quad::GaussLegendre;

use crate::error::Result;
use crate::model::geometry::{Point, Stiffness};
use crate::model::CrackScene;

/// Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss01(n: usize) -> Vec<(f64, f64)> {
    let q = GaussLegendre::new(n.try_into().expect("quadrature order must be nonzero"));
    q.iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Piecewise-linear mesh of one straight crack. Node positions are arc
/// lengths from the start point; hat functions live on the interior nodes, so
/// the jump vanishes at both tips.
#[derive(Clone, Debug)]
pub struct ArcMesh {
    pub start: Point,
    pub tangent: Point,
    pub normal: Point,
    pub length: f64,
    pub nodes: Vec<f64>,
    pub stiffness: Stiffness,
}

impl ArcMesh {
    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_basis(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn point(&self, xi: f64) -> Point {
        [
            self.start[0] + xi * self.tangent[0],
            self.start[1] + xi * self.tangent[1],
        ]
    }

    /// Basis index carried by local node `a` (0 = left, 1 = right) of element
    /// `e`, if that node is interior.
    pub fn basis_of(&self, e: usize, a: usize) -> Option<usize> {
        let node = e + a;
        (node >= 1 && node <= self.n_basis()).then(|| node - 1)
    }

    /// Local frame vector: 0 = tangent, 1 = normal.
    pub fn frame(&self, alpha: usize) -> Point {
        if alpha == 0 {
            self.tangent
        } else {
            self.normal
        }
    }
}

/// Graded node positions on `[0, 1]`: `u -> (2u)^q / 2`, mirrored about 1/2.
pub fn graded_nodes(n_elements: usize, grading: f64) -> Vec<f64> {
    (0..=n_elements)
        .map(|i| {
            let u = i as f64 / n_elements as f64;
            if 2 * i <= n_elements {
                0.5 * (2.0 * u).powf(grading)
            } else {
                1.0 - 0.5 * (2.0 * (1.0 - u)).powf(grading)
            }
        })
        .collect()
}

/// Crack discretization with degrees of freedom ordered arc by arc, then by
/// basis function, then by local component (tangential, normal).
#[derive(Clone, Debug)]
pub struct CrackMesh {
    pub arcs: Vec<ArcMesh>,
    pub dim: usize,
    offsets: Vec<usize>,
    n_dof: usize,
}

pub const MIN_ELEMENTS: usize = 8;

impl CrackMesh {
    pub fn new(scene: &CrackScene, dim: usize) -> Result<Self> {
        scene.validate()?;
        let arcs: Vec<ArcMesh> = scene
            .arcs
            .iter()
            .map(|a| {
                let length = a.length();
                let n = ((scene.density * length).ceil() as usize).max(MIN_ELEMENTS);
                ArcMesh {
                    start: a.start,
                    tangent: a.tangent(),
                    normal: a.normal(),
                    length,
                    nodes: graded_nodes(n, scene.grading)
                        .into_iter()
                        .map(|u| u * length)
                        .collect(),
                    stiffness: a.stiffness,
                }
            })
            .collect();
        let mut offsets = Vec::with_capacity(arcs.len());
        let mut n_dof = 0;
        for a in &arcs {
            offsets.push(n_dof);
            n_dof += a.n_basis() * dim;
        }
        Ok(Self {
            arcs,
            dim,
            offsets,
            n_dof,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    pub fn dof(&self, arc: usize, basis: usize, comp: usize) -> usize {
        self.offsets[arc] + basis * self.dim + comp
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}
