//! Algebraic classification of the Cotton–York tensor (3D) and the Weyl
//! operator (4D), with extraction of eigenflag directions.

use serde::Serialize;

use crate::bivector::{plucker_simple, Bivector, Frame, WeylOperator};
use crate::curvature::{CurvatureError, CurvaturePoint};
use crate::linalg::{self, Mat};
use crate::tolerance::{Margin, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
pub enum WeylType {
    A,
    B,
    C,
    D,
}

impl std::fmt::Display for WeylType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A 2-plane at a point: orthonormal basis in coordinates plus its frame projector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plane {
    pub basis: [Vec<f64>; 2],
    #[serde(skip)]
    pub frame_projector: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylClass {
    pub kind: WeylType,
    /// Type B: the four eigenflag directions (coordinate components, unit).
    pub directions: Vec<Vec<f64>>,
    /// Type C: the two orthogonal planes of eigenflag directions.
    pub planes: Vec<Plane>,
    /// Ascending eigenvalues of the operator.
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Cluster>,
    /// Spectral radius against the vanishing threshold.
    pub zero_margin: Margin,
    /// Every consecutive eigenvalue gap against the coincidence threshold.
    pub gaps: Vec<Margin>,
    /// Worst Plücker defect among the extracted simple bivectors.
    pub plucker_defect: f64,
    pub ambiguous: bool,
    pub notes: Vec<String>,
}

impl WeylClass {
    /// Reported λ values (distinct clusters, ascending) summing to zero with multiplicity.
    pub fn lambdas(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenflagTest {
    pub pass: bool,
    /// Norm of the part of `W(v ∧ v^⊥)` outside `v ∧ v^⊥`, relative to ‖W‖.
    pub defect: f64,
}

/// Orthonormal completion of a unit vector in Euclidean `ℝⁿ`.
fn complement(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut cands: Vec<(f64, usize)> = (0..n).map(|i| (1.0 - v[i] * v[i], i)).collect();
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<Vec<f64>> = vec![v.to_vec()];
    for &(_, i) in &cands {
        if out.len() == n {
            break;
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        for _ in 0..2 {
            for e in &out {
                let c = linalg::dot(&w, e);
                for (wi, ei) in w.iter_mut().zip(e) {
                    *wi -= c * ei;
                }
            }
        }
        let len = linalg::norm(&w);
        if len > 1e-8 {
            out.push(w.iter().map(|x| x / len).collect());
        }
    }
    out.remove(0);
    out
}

/// Eigenflag condition `W(v ∧ v^⊥) ⊂ v ∧ v^⊥` for a unit vector in frame components.
pub fn eigenflag_test(w: &WeylOperator, v: &[f64], tol: f64) -> EigenflagTest {
    let scale = linalg::symmetric_eigen(&w.matrix)
        .map(|e| e.spectral_radius())
        .unwrap_or_else(|_| linalg::frobenius(&w.matrix));
    if scale == 0.0 {
        return EigenflagTest { pass: true, defect: 0.0 };
    }
    let nv = linalg::norm(v);
    let v: Vec<f64> = v.iter().map(|x| x / nv).collect();
    let span: Vec<Bivector> = complement(&v).iter().map(|u| Bivector::wedge(&v, u)).collect();
    let mut defect: f64 = 0.0;
    for b in &span {
        let mut wb = w.apply(b);
        for s in &span {
            let c = wb.dot(s);
            for k in 0..6 {
                wb.c[k] -= c * s.c[k];
            }
        }
        defect = defect.max(wb.norm() / scale);
    }
    EigenflagTest { pass: defect <= tol, defect }
}

/// Two simple unit bivectors spanning a 2-dimensional subspace of Λ², if the
/// restricted Plücker form is indefinite.
fn simple_pair(u1: &Bivector, u2: &Bivector, tau: f64) -> Option<(Bivector, Bivector)> {
    let q11 = 0.5 * u1.plucker_pairing(u1);
    let q22 = 0.5 * u2.plucker_pairing(u2);
    let q12 = 0.5 * u1.plucker_pairing(u2);
    let e = linalg::symmetric_eigen(&vec![vec![q11, q12], vec![q12, q22]]).ok()?;
    let (m1, m2) = (e.values[0], e.values[1]);
    if !(m1 < -tau && m2 > tau) {
        return None;
    }
    let (v1, v2) = (&e.vectors[0], &e.vectors[1]);
    let (s2, s1) = (m2.sqrt(), (-m1).sqrt());
    let make = |sign: f64| {
        let a = s2 * v1[0] + sign * s1 * v2[0];
        let b = s2 * v1[1] + sign * s1 * v2[1];
        let mut c = [0.0; 6];
        for k in 0..6 {
            c[k] = a * u1.c[k] + b * u2.c[k];
        }
        Bivector { c }.normalized()
    };
    Some((make(1.0), make(-1.0)))
}

fn mat_dist(a: &Mat, b: &Mat) -> f64 {
    let mut s: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            s = s.max((x - y).abs());
        }
    }
    s
}

fn add_mats(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

/// Complementary orthogonal planes from an eigenspace, with the worst defect.
fn eigenspace_planes(vectors: &[Vec<f64>], tol: &Tolerances) -> Result<(Mat, Mat, f64), String> {
    let u1 = Bivector::from_slice(&vectors[0]);
    let u2 = Bivector::from_slice(&vectors[1]);
    let (s1, s2) = simple_pair(&u1, &u2, tol.plucker).ok_or("eigenspace contains no pair of simple bivectors")?;
    let t1 = plucker_simple(&s1, tol.plucker);
    let t2 = plucker_simple(&s2, tol.plucker);
    if !(t1.simple && t2.simple) {
        return Err("extracted bivectors fail the Plücker test".into());
    }
    let p1 = s1.plane_projector();
    let p2 = s2.plane_projector();
    let d = mat_dist(&add_mats(&p1, &p2), &linalg::identity(4));
    if d > tol.angle {
        return Err(format!("simple eigenbivectors are not complementary (defect {d:e})"));
    }
    Ok((p1, p2, t1.defect.abs().max(t2.defect.abs())))
}

/// Common line of two planes given by projectors; `None` if they do not meet in a line.
fn intersection(pa: &Mat, pb: &Mat, tol: f64) -> Option<Vec<f64>> {
    let e = linalg::symmetric_eigen(&add_mats(pa, pb)).ok()?;
    let top = e.values[3];
    if (top - 2.0).abs() > tol || e.values[2] > 2.0 - 1e3 * tol.max(1e-9) {
        return None;
    }
    Some(e.vectors[3].clone())
}

fn plane_from_projector(p: &Mat, frame: &Frame) -> Plane {
    let e = linalg::symmetric_eigen(p).expect("projector is symmetric");
    let mut b0 = frame.to_coords(&e.vectors[3]);
    let mut b1 = frame.to_coords(&e.vectors[2]);
    linalg::orient(&mut b0);
    linalg::orient(&mut b1);
    Plane {
        basis: [b0, b1],
        frame_projector: p.clone(),
    }
}

fn cluster(values: &[f64], tau: f64) -> (Vec<Cluster>, Vec<Vec<usize>>, Vec<Margin>) {
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    let mut gaps = Vec::new();
    for k in 1..values.len() {
        let gap = Margin::new(values[k] - values[k - 1], tau);
        gaps.push(gap);
        if gap.pass() {
            clusters.last_mut().expect("nonempty").push(k);
        } else {
            clusters.push(vec![k]);
        }
    }
    let summary = clusters
        .iter()
        .map(|idx| Cluster {
            value: idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64,
            multiplicity: idx.len(),
        })
        .collect();
    (summary, clusters, gaps)
}

/// Weyl type A/B/C/D with eigenflag directions.
pub fn classify_weyl(w: &WeylOperator, tol: &Tolerances) -> WeylClass {
    let eig = linalg::symmetric_eigen(&w.matrix).expect("Weyl operator is symmetric");
    let radius = eig.spectral_radius();
    let zero_margin = Margin::new(radius, tol.zero * (1.0 + w.riemann_scale));
    let tau_deg = tol.degeneracy * radius.max(1.0);
    let (clusters, members, gaps) = cluster(&eig.values, tau_deg);
    let mut out = WeylClass {
        kind: WeylType::A,
        directions: Vec::new(),
        planes: Vec::new(),
        eigenvalues: eig.values.clone(),
        clusters,
        zero_margin,
        gaps,
        plucker_defect: 0.0,
        ambiguous: false,
        notes: Vec::new(),
    };
    if zero_margin.pass() {
        out.kind = WeylType::D;
        out.clusters = vec![Cluster { value: 0.0, multiplicity: 6 }];
        out.ambiguous = zero_margin.ambiguous();
        if out.ambiguous {
            out.notes.push(format!("operator norm {radius:e} near the vanishing threshold"));
        }
        return out;
    }
    if zero_margin.ambiguous() {
        out.ambiguous = true;
        out.notes.push(format!("operator norm {radius:e} near the vanishing threshold"));
    }
    if let Some(g) = out.gaps.iter().find(|g| g.ambiguous()) {
        out.ambiguous = true;
        out.notes.push(format!("eigenvalue gap {:e} within a factor 10 of {:e}", g.value, g.threshold));
    }
    let space = |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&i| eig.vectors[i].clone()).collect() };
    let mut dims: Vec<usize> = members.iter().map(|m| m.len()).collect();
    dims.sort_unstable();
    match dims.as_slice() {
        [2, 2, 2] => {
            let mut planes = Vec::new();
            for m in &members {
                match eigenspace_planes(&space(m), tol) {
                    Ok((p1, p2, d)) => {
                        out.plucker_defect = out.plucker_defect.max(d);
                        planes.push((p1, p2));
                    }
                    Err(e) => {
                        out.notes.push(e);
                        return out;
                    }
                }
            }
            let (a, a2) = &planes[0];
            let (b, b2) = &planes[1];
            let (c, _) = &planes[2];
            let mut dirs = Vec::new();
            for pa in [a, a2] {
                for pb in [b, b2] {
                    match intersection(pa, pb, tol.angle) {
                        Some(v) => dirs.push(v),
                        None => {
                            out.notes.push("eigenflag planes do not meet in lines".into());
                            return out;
                        }
                    }
                }
            }
            for v in &dirs {
                let pv = linalg::mat_vec(c, v);
                let inside = linalg::norm(&pv.iter().zip(v).map(|(x, y)| x - y).collect::<Vec<_>>());
                let outside = linalg::norm(&pv);
                if inside.min(outside) > tol.angle {
                    out.notes.push("direction not compatible with the third eigenspace".into());
                    return out;
                }
            }
            out.kind = WeylType::B;
            out.directions = dirs
                .iter()
                .map(|v| {
                    let mut c = w.frame.to_coords(v);
                    linalg::orient(&mut c);
                    c
                })
                .collect();
        }
        [2, 4] => {
            let two = members.iter().find(|m| m.len() == 2).expect("pattern has a 2-space");
            match eigenspace_planes(&space(two), tol) {
                Ok((p1, p2, d)) => {
                    out.plucker_defect = d;
                    out.kind = WeylType::C;
                    out.planes = vec![plane_from_projector(&p1, &w.frame), plane_from_projector(&p2, &w.frame)];
                }
                Err(e) => out.notes.push(e),
            }
        }
        _ => out.notes.push(format!("eigenspace dimensions {dims:?}")),
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
pub enum CyKind {
    Zero,
    Degenerate,
    Nondegenerate,
}

impl std::fmt::Display for CyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyClass {
    pub kind: CyKind,
    /// Degenerate: the two eigenflag directions. Frame components from
    /// [`classify_cy`], coordinate components from [`classify_cy_at`].
    pub directions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub norm: f64,
    pub det: f64,
    pub zero_margin: Margin,
    /// `|det|` against `τ_det ‖CY‖³`; failing means nondegenerate.
    pub det_margin: Margin,
    pub ambiguous: bool,
}

/// Trichotomy for a traceless symmetric 3×3 operator in an orthonormal frame.
pub fn classify_cy(cy: &Mat, tol: &Tolerances, curvature_scale: f64) -> CyClass {
    let eig = linalg::symmetric_eigen(cy).expect("Cotton-York tensor is symmetric");
    let norm = eig.spectral_radius();
    let det = linalg::det3(cy);
    let zero_margin = Margin::new(norm, tol.zero * (1.0 + curvature_scale));
    let det_margin = Margin::new(det.abs(), tol.det * norm.powi(3));
    let mut out = CyClass {
        kind: CyKind::Zero,
        directions: Vec::new(),
        eigenvalues: eig.values.clone(),
        norm,
        det,
        zero_margin,
        det_margin,
        ambiguous: zero_margin.ambiguous(),
    };
    if zero_margin.pass() {
        return out;
    }
    out.ambiguous |= det_margin.ambiguous();
    if !det_margin.pass() {
        out.kind = CyKind::Nondegenerate;
        return out;
    }
    out.kind = CyKind::Degenerate;
    let (um, up) = (&eig.vectors[0], &eig.vectors[2]);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for s in [1.0, -1.0] {
        let mut d: Vec<f64> = (0..3).map(|k| r * (up[k] + s * um[k])).collect();
        linalg::orient(&mut d);
        out.directions.push(d);
    }
    out
}

/// Eigenflag defect of a direction for a 3×3 operator: `CY(v,v)` and `CY|_{v⊥}`
/// relative to the operator norm.
pub fn cy_eigenflag_defect(cy: &Mat, v: &[f64]) -> f64 {
    let scale = linalg::symmetric_eigen(cy).map(|e| e.spectral_radius()).unwrap_or(0.0);
    if scale == 0.0 {
        return 0.0;
    }
    let nv = linalg::norm(v);
    let v: Vec<f64> = v.iter().map(|x| x / nv).collect();
    let w = complement(&v);
    let q = |a: &[f64], b: &[f64]| linalg::dot(a, &linalg::mat_vec(cy, b));
    let mut s = q(&v, &v).powi(2);
    for a in &w {
        for b in &w {
            s += q(a, b).powi(2);
        }
    }
    s.sqrt() / scale
}

/// Cotton–York components in an orthonormal frame.
pub fn cy_in_frame(cp: &CurvaturePoint, frame: &Frame) -> Result<Mat, CurvatureError> {
    let cy = cp.cotton_york()?;
    let e = &frame.e;
    Ok((0..3)
        .map(|a| (0..3).map(|b| linalg::dot(&e[a], &linalg::mat_vec(&cy, &e[b]))).collect())
        .collect())
}

/// Classifies the Cotton–York tensor at a curvature point; directions in coordinates.
pub fn classify_cy_at(cp: &CurvaturePoint, tol: &Tolerances) -> Result<(CyClass, Frame), CurvatureError> {
    let frame = Frame { e: cp.coordinate_frame() };
    let m = cy_in_frame(cp, &frame)?;
    let mut c = classify_cy(&m, tol, cp.riemann_frame_max(&frame.e));
    for d in c.directions.iter_mut() {
        let mut v = frame.to_coords(d);
        linalg::orient(&mut v);
        *d = v;
    }
    Ok((c, frame))
}
