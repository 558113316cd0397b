//! Λ² machinery in dimension 4: frames, the Weyl operator, simple bivectors.
//!
//! Bivectors are written in the orthonormal basis
//! `e12, e13, e14, e34, e24, e23` (zero-based pairs below), so for a Weyl
//! tensor diagonal in a coordinate-adapted frame the operator shows two
//! repeated 3×3 blocks.

use serde::Serialize;
use thiserror::Error;

use crate::curvature::{CurvatureError, CurvaturePoint};
use crate::linalg::{self, Mat};

pub use crate::linalg::{symmetric_eigen, Eigen, EigenError};

pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (1, 3), (1, 2)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BivectorError {
    #[error("frame seed is rank deficient")]
    RankDeficient,
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

/// A g-orthonormal frame at a point, vectors in coordinate components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub e: Vec<Vec<f64>>,
}

impl Frame {
    /// Coordinate components of `Σ c_a e_a`.
    pub fn to_coords(&self, c: &[f64]) -> Vec<f64> {
        let n = self.e[0].len();
        let mut v = vec![0.0; n];
        for (ca, ea) in c.iter().zip(&self.e) {
            for (vi, ei) in v.iter_mut().zip(ea) {
                *vi += ca * ei;
            }
        }
        v
    }

    /// Frame components `g(v, e_a)` of a coordinate vector.
    pub fn to_frame(&self, g: &Mat, v: &[f64]) -> Vec<f64> {
        self.e.iter().map(|ea| linalg::metric_dot(g, v, ea)).collect()
    }
}

/// Gram–Schmidt of `seed` with respect to `g(p)`; the flags of the seed are kept.
pub fn orthonormal_frame(cp: &CurvaturePoint, seed: &[Vec<f64>]) -> Result<Frame, BivectorError> {
    let g = cp.g_value();
    linalg::gram_schmidt(&g, seed)
        .filter(|e| e.len() == cp.dim)
        .map(|e| Frame { e })
        .ok_or(BivectorError::RankDeficient)
}

/// The Weyl tensor as a symmetric operator on Λ² in a frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylOperator {
    pub frame: Frame,
    /// `matrix[a][b] = ¼ W(e_p, e_q, e_s, e_r)` for `a = (p,q)`, `b = (r,s)`.
    pub matrix: Mat,
    /// Max-norm of the Riemann tensor on the frame, the scale for "zero".
    pub riemann_scale: f64,
}

/// Normalization of the operator entries relative to the (0,4) Weyl tensor.
pub const WEYL_OPERATOR_NORMALIZATION: f64 = 0.25;

pub fn weyl_operator(cp: &CurvaturePoint, frame: &Frame) -> Result<WeylOperator, BivectorError> {
    let w = cp
        .weyl
        .as_ref()
        .ok_or(CurvatureError::Dimension { want: 4, got: cp.dim })?;
    let e = &frame.e;
    let mut m = linalg::zeros(6, 6);
    for (a, &(p, q)) in PAIRS.iter().enumerate() {
        for (b, &(r, s)) in PAIRS.iter().enumerate().skip(a) {
            let v = WEYL_OPERATOR_NORMALIZATION * CurvaturePoint::contract4(w, 4, &e[p], &e[q], &e[s], &e[r]);
            m[a][b] = v;
            m[b][a] = v;
        }
    }
    Ok(WeylOperator {
        frame: frame.clone(),
        matrix: m,
        riemann_scale: cp.riemann_frame_max(e),
    })
}

impl WeylOperator {
    pub fn apply(&self, b: &Bivector) -> Bivector {
        let v = linalg::mat_vec(&self.matrix, &b.c);
        Bivector { c: [v[0], v[1], v[2], v[3], v[4], v[5]] }
    }

    pub fn trace(&self) -> f64 {
        (0..6).map(|i| self.matrix[i][i]).sum()
    }
}

/// A bivector by its components in the frame basis `e12, e13, e14, e34, e24, e23`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bivector {
    pub c: [f64; 6],
}

impl Bivector {
    pub fn from_slice(v: &[f64]) -> Bivector {
        let mut c = [0.0; 6];
        c.copy_from_slice(&v[..6]);
        Bivector { c }
    }

    pub fn basis(a: usize) -> Bivector {
        let mut c = [0.0; 6];
        c[a] = 1.0;
        Bivector { c }
    }

    /// `v ∧ w` for frame-component vectors.
    pub fn wedge(v: &[f64], w: &[f64]) -> Bivector {
        let mut c = [0.0; 6];
        for (k, &(p, q)) in PAIRS.iter().enumerate() {
            c[k] = v[p] * w[q] - v[q] * w[p];
        }
        Bivector { c }
    }

    /// Antisymmetric 4×4 form `B_pq` with `B = Σ b_pq e_p ∧ e_q`.
    pub fn to_matrix(&self) -> Mat {
        let mut m = linalg::zeros(4, 4);
        for (k, &(p, q)) in PAIRS.iter().enumerate() {
            m[p][q] = self.c[k];
            m[q][p] = -self.c[k];
        }
        m
    }

    pub fn from_matrix(m: &Mat) -> Bivector {
        let mut c = [0.0; 6];
        for (k, &(p, q)) in PAIRS.iter().enumerate() {
            c[k] = 0.5 * (m[p][q] - m[q][p]);
        }
        Bivector { c }
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.c)
    }

    pub fn dot(&self, o: &Bivector) -> f64 {
        linalg::dot(&self.c, &o.c)
    }

    pub fn normalized(&self) -> Bivector {
        let n = self.norm();
        Bivector { c: self.c.map(|x| x / n) }
    }

    /// Coefficient of `b ∧ b` on the volume form.
    pub fn plucker_defect(&self) -> f64 {
        let p = &self.c;
        2.0 * (p[0] * p[3] - p[1] * p[4] + p[2] * p[5])
    }

    /// Polar form of [`Bivector::plucker_defect`].
    pub fn plucker_pairing(&self, o: &Bivector) -> f64 {
        let (p, q) = (&self.c, &o.c);
        p[0] * q[3] + p[3] * q[0] - p[1] * q[4] - p[4] * q[1] + p[2] * q[5] + p[5] * q[2]
    }

    /// Orthogonal projector (frame components) onto the plane of a simple bivector.
    pub fn plane_projector(&self) -> Mat {
        let b = self.normalized().to_matrix();
        let b2 = linalg::mat_mul(&b, &b);
        b2.iter().map(|r| r.iter().map(|v| -v).collect()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PluckerTest {
    pub simple: bool,
    pub defect: f64,
}

/// Simple iff `|b ∧ b| ≤ tau · ‖b‖²`.
pub fn plucker_simple(b: &Bivector, tau: f64) -> PluckerTest {
    let defect = b.plucker_defect();
    PluckerTest {
        simple: defect.abs() <= tau * b.norm().powi(2),
        defect,
    }
}
