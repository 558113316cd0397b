//! Curvature tensors of a closed-form metric at a point, carried as jets.
//!
//! Conventions: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`,
//! `Rm_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l)` and `Ric_jk = R^i_{kij}`, so the round
//! sphere has positive Ricci curvature and `Rm(e1,e2,e2,e1)` is the sectional
//! curvature of the plane `e1∧e2`. All stored tensors are covariant.

use serde::Serialize;
use thiserror::Error;

use crate::dsl::{MetricError, MetricSpec};
use crate::jet::{Jet, JetError};
use crate::linalg::{self, Mat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("singular metric: {0}")]
    Singular(String),
    #[error("jet order {order} too low for {what}")]
    Order { order: usize, what: &'static str },
    #[error("operation requires dimension {want}, metric has dimension {got}")]
    Dimension { want: usize, got: usize },
}

impl From<JetError> for CurvatureError {
    fn from(e: JetError) -> Self {
        CurvatureError::Metric(MetricError::Jet(e))
    }
}

/// Index helpers for flat row-major tensors of dimension `n`.
#[derive(Debug, Clone, Copy)]
pub struct Ix(pub usize);

impl Ix {
    #[inline]
    pub fn i2(self, a: usize, b: usize) -> usize {
        a * self.0 + b
    }
    #[inline]
    pub fn i3(self, a: usize, b: usize, c: usize) -> usize {
        (a * self.0 + b) * self.0 + c
    }
    #[inline]
    pub fn i4(self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.0 + b) * self.0 + c) * self.0 + d
    }
}

/// Determinant of an `n × n` jet matrix (cofactor expansion, n ≤ 4).
pub fn det_jets(a: &[Jet], n: usize) -> Jet {
    match n {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => {
            let mut acc = None;
            for c in 0..n {
                let minor: Vec<Jet> = (1..n)
                    .flat_map(|r| (0..n).filter(move |&k| k != c).map(move |k| (r, k)))
                    .map(|(r, k)| a[r * n + k])
                    .collect();
                let term = a[c] * det_jets(&minor, n - 1);
                acc = Some(match (acc, c % 2) {
                    (None, 0) => term,
                    (None, _) => -term,
                    (Some(s), 0) => s + term,
                    (Some(s), _) => s - term,
                });
            }
            acc.expect("n ≥ 1")
        }
    }
}

/// Inverse of a jet matrix by Gauss–Jordan elimination, pivoting on constant terms.
pub fn invert_jets(a: &[Jet], n: usize) -> Result<Vec<Jet>, CurvatureError> {
    let proto = a[0];
    let mut m = a.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(if k / n == k % n { 1.0 } else { 0.0 }, proto.order(), proto.nvars()))
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r * n + col].value().abs().total_cmp(&m[s * n + col].value().abs()))
            .expect("nonempty");
        if m[piv * n + col].value().abs() < 1e-300 {
            return Err(CurvatureError::Singular("metric matrix not invertible".into()));
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let r = m[col * n + col].recip()?;
        for k in 0..n {
            m[col * n + k] = m[col * n + k] * r;
            inv[col * n + k] = inv[col * n + k] * r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row * n + col];
            if f.coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            for k in 0..n {
                m[row * n + k] = m[row * n + k] - f * m[col * n + k];
                inv[row * n + k] = inv[row * n + k] - f * inv[col * n + k];
            }
        }
    }
    Ok(inv)
}

/// `Γ^k_ij`, flat index `(k, i, j)`; one order below the metric jets.
pub fn christoffel_from(g: &[Jet], g_inv: &[Jet], n: usize) -> Vec<Jet> {
    let ix = Ix(n);
    // dg[l][i][j] = ∂_l g_ij
    let dg: Vec<Jet> = (0..n * n * n)
        .map(|f| {
            let (l, ij) = (f / (n * n), f % (n * n));
            g[ij].partial(l)
        })
        .collect();
    let proto = dg[0];
    let mut gamma = vec![Jet::zero(proto.order(), n); n * n * n];
    for i in 0..n {
        for j in i..n {
            // Γ_{lij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let lower: Vec<Jet> = (0..n)
                .map(|l| (dg[ix.i3(i, j, l)] + dg[ix.i3(j, i, l)] - dg[ix.i3(l, i, j)]).scale(0.5))
                .collect();
            for k in 0..n {
                let mut s = g_inv[ix.i2(k, 0)] * lower[0];
                for l in 1..n {
                    s += g_inv[ix.i2(k, l)] * lower[l];
                }
                gamma[ix.i3(k, i, j)] = s;
                gamma[ix.i3(k, j, i)] = s;
            }
        }
    }
    gamma
}

/// All curvature quantities at one point.
#[derive(Debug, Clone)]
pub struct CurvaturePoint {
    pub dim: usize,
    pub point: Vec<f64>,
    /// Order of the metric jets; derived tensors lose one order per derivative.
    pub order: usize,
    pub g: Vec<Jet>,
    pub g_inv: Vec<Jet>,
    /// `Γ^k_ij` at `i3(k, i, j)`.
    pub gamma: Vec<Jet>,
    /// `Rm_ijkl`.
    pub riem: Vec<Jet>,
    pub ric: Vec<Jet>,
    pub scal: Jet,
    /// Undefined in dimension 2.
    pub schouten: Option<Vec<Jet>>,
    /// `C_ijk = ∇_i P_jk − ∇_j P_ik` (3D, metric order ≥ 3).
    pub cotton: Option<Vec<Jet>>,
    /// Cotton–York tensor, symmetrized (3D, metric order ≥ 3).
    pub cy: Option<Vec<Jet>>,
    /// `W_ijkl` (4D).
    pub weyl: Option<Vec<Jet>>,
}

/// Curvature at `p` with metric jets of the highest order worth carrying (3 in 3D/4D).
pub fn curvature_point(m: &MetricSpec, p: &[f64]) -> Result<CurvaturePoint, CurvatureError> {
    curvature_point_order(m, p, 3)
}

pub fn curvature_point_order(m: &MetricSpec, p: &[f64], order: usize) -> Result<CurvaturePoint, CurvatureError> {
    if order < 2 {
        return Err(CurvatureError::Order { order, what: "Riemann tensor" });
    }
    let n = m.dim;
    let ix = Ix(n);
    let g = m.eval_jets(p, order)?;
    let g_inv = invert_jets(&g, n)?;
    let gamma = christoffel_from(&g, &g_inv, n);

    // Rup^l_kij = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    let ro = order - 2;
    let zero = Jet::zero(ro, n);
    let dgam: Vec<Vec<Jet>> = (0..n).map(|i| gamma.iter().map(|j| j.partial(i)).collect()).collect();
    let mut rup = vec![zero; n * n * n * n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut v = dgam[i][ix.i3(l, j, k)] - dgam[j][ix.i3(l, i, k)];
                    for mm in 0..n {
                        v += gamma[ix.i3(l, i, mm)] * gamma[ix.i3(mm, j, k)]
                            - gamma[ix.i3(l, j, mm)] * gamma[ix.i3(mm, i, k)];
                    }
                    rup[ix.i4(l, k, i, j)] = v;
                    rup[ix.i4(l, k, j, i)] = -v;
                }
            }
        }
    }
    let mut riem = vec![zero; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = zero;
                    for mm in 0..n {
                        s += rup[ix.i4(mm, k, i, j)] * g[ix.i2(mm, l)];
                    }
                    riem[ix.i4(i, j, k, l)] = s;
                }
            }
        }
    }
    let mut ric = vec![zero; n * n];
    for j in 0..n {
        for k in 0..n {
            let mut s = zero;
            for i in 0..n {
                s += rup[ix.i4(i, k, i, j)];
            }
            ric[ix.i2(j, k)] = s;
        }
    }
    let mut scal = zero;
    for j in 0..n {
        for k in 0..n {
            scal += g_inv[ix.i2(j, k)] * ric[ix.i2(j, k)];
        }
    }

    let schouten = (n > 2).then(|| {
        let c = 1.0 / (2.0 * (n as f64 - 1.0));
        (0..n * n)
            .map(|f| (ric[f] - scal * g[f] * c).scale(1.0 / (n as f64 - 2.0)))
            .collect::<Vec<Jet>>()
    });

    let (mut cotton, mut cy) = (None, None);
    if n == 3 && order >= 3 {
        let pp = schouten.as_ref().expect("n = 3");
        let (c, y) = cotton_and_york(&g, &g_inv, &gamma, pp);
        cotton = Some(c);
        cy = Some(y);
    }

    let weyl = (n == 4).then(|| {
        let pp = schouten.as_ref().expect("n = 4");
        let mut w = vec![zero; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let kn = pp[ix.i2(i, l)] * g[ix.i2(j, k)] + pp[ix.i2(j, k)] * g[ix.i2(i, l)]
                            - pp[ix.i2(i, k)] * g[ix.i2(j, l)]
                            - pp[ix.i2(j, l)] * g[ix.i2(i, k)];
                        w[ix.i4(i, j, k, l)] = riem[ix.i4(i, j, k, l)] - kn;
                    }
                }
            }
        }
        w
    });

    Ok(CurvaturePoint {
        dim: n,
        point: p.to_vec(),
        order,
        g,
        g_inv,
        gamma,
        riem,
        ric,
        scal,
        schouten,
        cotton,
        cy,
        weyl,
    })
}

/// Covariant derivative `∇_k P_lj` of a symmetric covariant 2-tensor, at `i3(k, l, j)`.
pub fn covariant_derivative_2(p: &[Jet], gamma: &[Jet], n: usize) -> Vec<Jet> {
    let ix = Ix(n);
    let mut out = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for l in 0..n {
            for j in 0..n {
                let mut v = p[ix.i2(l, j)].partial(k);
                for m in 0..n {
                    v -= gamma[ix.i3(m, k, l)] * p[ix.i2(m, j)] + gamma[ix.i3(m, k, j)] * p[ix.i2(l, m)];
                }
                out.push(v);
            }
        }
    }
    out
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn cotton_and_york(g: &[Jet], g_inv: &[Jet], gamma: &[Jet], p: &[Jet]) -> (Vec<Jet>, Vec<Jet>) {
    let n = 3;
    let ix = Ix(n);
    let np = covariant_derivative_2(p, gamma, n);
    let cotton: Vec<Jet> = (0..27)
        .map(|f| {
            let (i, j, k) = (f / 9, (f / 3) % 3, f % 3);
            np[ix.i3(i, j, k)] - np[ix.i3(j, i, k)]
        })
        .collect();
    // ε_i^{kl} = √det g · [i a b] g^{ak} g^{bl}
    let vol = det_jets(&g[..9], 3)
        .truncate(np[0].order())
        .sqrt()
        .expect("positive definite metric");
    let mut raw = vec![Jet::zero(np[0].order(), n); 9];
    for i in 0..n {
        for j in 0..n {
            let mut s = None;
            for a in 0..n {
                for b in 0..n {
                    let e = levi_civita(i, a, b);
                    if e == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        for l in 0..n {
                            let t = (g_inv[ix.i2(a, k)] * g_inv[ix.i2(b, l)] * np[ix.i3(k, l, j)]).scale(e);
                            s = Some(match s {
                                None => t,
                                Some(acc) => acc + t,
                            });
                        }
                    }
                }
            }
            raw[ix.i2(i, j)] = vol * s.expect("nonempty contraction");
        }
    }
    let cy = (0..9)
        .map(|f| {
            let (i, j) = (f / 3, f % 3);
            (raw[ix.i2(i, j)] + raw[ix.i2(j, i)]).scale(0.5)
        })
        .collect();
    (cotton, cy)
}

fn values(v: &[Jet], n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| v[i * n + j].value()).collect()).collect()
}

/// Plain-number snapshot of a [`CurvaturePoint`].
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureValues {
    pub point: Vec<f64>,
    pub g: Mat,
    /// `christoffel[k][i][j] = Γ^k_ij`.
    pub christoffel: Vec<Mat>,
    pub ricci: Mat,
    pub scalar: f64,
    pub schouten: Option<Mat>,
    pub cotton_york: Option<Mat>,
    /// Max-norm of the Riemann tensor in coordinates.
    pub riemann_max: f64,
    /// Max-norm of the Weyl tensor in coordinates.
    pub weyl_max: Option<f64>,
}

impl CurvaturePoint {
    fn ix(&self) -> Ix {
        Ix(self.dim)
    }

    pub fn g_value(&self) -> Mat {
        values(&self.g, self.dim)
    }

    pub fn g_inv_value(&self) -> Mat {
        values(&self.g_inv, self.dim)
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[self.ix().i3(k, i, j)].value()
    }

    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.riem[self.ix().i4(i, j, k, l)].value()
    }

    pub fn weyl_value(&self, i: usize, j: usize, k: usize, l: usize) -> Option<f64> {
        self.weyl.as_ref().map(|w| w[self.ix().i4(i, j, k, l)].value())
    }

    pub fn ricci_value(&self) -> Mat {
        values(&self.ric, self.dim)
    }

    pub fn scalar(&self) -> f64 {
        self.scal.value()
    }

    /// Covariant Cotton–York components at the point.
    pub fn cotton_york(&self) -> Result<Mat, CurvatureError> {
        if self.dim != 3 {
            return Err(CurvatureError::Dimension { want: 3, got: self.dim });
        }
        match &self.cy {
            Some(cy) => Ok(values(cy, 3)),
            None => Err(CurvatureError::Order { order: self.order, what: "Cotton-York tensor" }),
        }
    }

    /// Evaluates a covariant 4-tensor on frame vectors.
    pub fn contract4(t: &[Jet], n: usize, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let ix = Ix(n);
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if c[k] == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        if d[l] != 0.0 {
                            s += t[ix.i4(i, j, k, l)].value() * a[i] * b[j] * c[k] * d[l];
                        }
                    }
                }
            }
        }
        s
    }

    /// Largest `|Rm(e_a,e_b,e_c,e_d)|` over an orthonormal frame.
    pub fn riemann_frame_max(&self, frame: &[Vec<f64>]) -> f64 {
        let n = self.dim;
        let mut m: f64 = 0.0;
        for a in frame {
            for b in frame {
                for c in frame {
                    for d in frame {
                        m = m.max(Self::contract4(&self.riem, n, a, b, c, d).abs());
                    }
                }
            }
        }
        m
    }

    /// Orthonormal frame obtained from the coordinate fields by Gram–Schmidt.
    pub fn coordinate_frame(&self) -> Vec<Vec<f64>> {
        let g = self.g_value();
        linalg::gram_schmidt(&g, &linalg::identity(self.dim)).expect("positive definite metric")
    }

    pub fn values(&self) -> CurvatureValues {
        let n = self.dim;
        let christoffel = (0..n)
            .map(|k| (0..n).map(|i| (0..n).map(|j| self.christoffel(k, i, j)).collect()).collect())
            .collect();
        CurvatureValues {
            point: self.point.clone(),
            g: self.g_value(),
            christoffel,
            ricci: self.ricci_value(),
            scalar: self.scalar(),
            schouten: self.schouten.as_ref().map(|p| values(p, n)),
            cotton_york: self.cy.as_ref().map(|c| values(c, 3)),
            riemann_max: self.riem.iter().fold(0.0, |m, j| m.max(j.value().abs())),
            weyl_max: self
                .weyl
                .as_ref()
                .map(|w| w.iter().fold(0.0f64, |m, j| m.max(j.value().abs()))),
        }
    }
}

/// Gaussian curvature jet of a 2D metric (`scal / 2`), `order − 2` deep.
pub fn gaussian_curvature(m: &MetricSpec, p: &[f64], order: usize) -> Result<Jet, CurvatureError> {
    if m.dim != 2 {
        return Err(CurvatureError::Dimension { want: 2, got: m.dim });
    }
    Ok(curvature_point_order(m, p, order)?.scal.scale(0.5))
}
