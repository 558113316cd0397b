//! Distributions given by spanning vector fields: brackets, second fundamental
//! forms, umbilicity, the 1-form Φ, Lie-derivative conformality, the
//! conformal-factor decision and Killing checks.
//!
//! A distribution is written either by fields spanning it (`Side::Tangent`)
//! or by fields spanning its orthogonal complement (`Side::Normal`). At each
//! point the pair `(D, D^⊥)` is represented by g-orthonormal jet frames `E`
//! (spanning `D`) and `N` (spanning `D^⊥`), so one more derivative of any
//! derived quantity is always at hand.

use serde::Serialize;
use thiserror::Error;

use crate::curvature::{christoffel_from, gaussian_curvature, invert_jets, CurvatureError, Ix};
use crate::dsl::{MetricError, MetricSpec, ParseError, VectorFieldSpec};
use crate::jet::{Jet, JetError};
use crate::linalg;
use crate::parallel::Exec;
use crate::region::SampleSet;
use crate::tolerance::{Margin, Tolerances};

/// Metric and field jet order used by the per-point analysis.
pub const SPLIT_ORDER: usize = 2;
/// Metric jet order for the surface Killing detector.
pub const KILLING_ORDER: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("distribution loses rank at {point:?}")]
    RankDrop { point: Vec<f64> },
    #[error("distribution must have rank between 1 and {max}, got {rank}")]
    BadRank { rank: usize, max: usize },
    #[error("field has {got} components, metric has dimension {want}")]
    FieldDim { want: usize, got: usize },
    #[error("operation requires dimension {want}, metric has dimension {got}")]
    Dimension { want: usize, got: usize },
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl From<MetricError> for DistributionError {
    fn from(e: MetricError) -> Self {
        DistributionError::Curvature(CurvatureError::Metric(e))
    }
}

impl From<JetError> for DistributionError {
    fn from(e: JetError) -> Self {
        DistributionError::Curvature(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// The fields span the distribution.
    Tangent,
    /// The fields span its orthogonal complement.
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSpec {
    pub fields: Vec<VectorFieldSpec>,
    pub side: Side,
}

impl DistributionSpec {
    pub fn tangent(fields: Vec<VectorFieldSpec>) -> DistributionSpec {
        DistributionSpec { fields, side: Side::Tangent }
    }

    pub fn normal(fields: Vec<VectorFieldSpec>) -> DistributionSpec {
        DistributionSpec { fields, side: Side::Normal }
    }

    /// Span of coordinate fields.
    pub fn coordinates(dim: usize, idx: &[usize]) -> DistributionSpec {
        DistributionSpec::tangent(idx.iter().map(|&i| VectorFieldSpec::coordinate(dim, i)).collect())
    }

    /// `"dt, dx"` spans; `"perp: dx"` is the orthogonal complement of a span.
    /// Fields are separated by commas; a field may itself be a combination
    /// such as `cos(x)*dy + sin(x)*dz`.
    pub fn parse(text: &str, m: &MetricSpec) -> Result<DistributionSpec, DistributionError> {
        let (side, body) = match text.trim().strip_prefix("perp:") {
            Some(rest) => (Side::Normal, rest),
            None => (Side::Tangent, text),
        };
        let fields = body
            .split(',')
            .map(|f| m.parse_field(f.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        let d = DistributionSpec { fields, side };
        d.validate(m.dim)?;
        Ok(d)
    }

    pub fn rank(&self, dim: usize) -> usize {
        match self.side {
            Side::Tangent => self.fields.len(),
            Side::Normal => dim - self.fields.len().min(dim),
        }
    }

    /// The orthogonal complement, described by the same fields.
    pub fn complement(&self) -> DistributionSpec {
        DistributionSpec {
            fields: self.fields.clone(),
            side: match self.side {
                Side::Tangent => Side::Normal,
                Side::Normal => Side::Tangent,
            },
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), DistributionError> {
        for f in &self.fields {
            if f.dim() != dim {
                return Err(DistributionError::FieldDim { want: dim, got: f.dim() });
            }
        }
        let k = self.fields.len();
        if k == 0 || k >= dim {
            return Err(DistributionError::BadRank { rank: self.rank(dim), max: dim - 1 });
        }
        Ok(())
    }

    pub fn describe(&self, names: &[String]) -> String {
        let f: Vec<String> = self.fields.iter().map(|f| f.to_text(names)).collect();
        match self.side {
            Side::Tangent => format!("<{}>", f.join(", ")),
            Side::Normal => format!("<{}>^perp", f.join(", ")),
        }
    }
}

fn jet_dot(g: &[Jet], n: usize, u: &[Jet], v: &[Jet]) -> Jet {
    let ix = Ix(n);
    let mut s = g[0] * u[0] * v[0];
    for i in 0..n {
        for j in 0..n {
            if i + j > 0 {
                s += g[ix.i2(i, j)] * u[i] * v[j];
            }
        }
    }
    s
}

fn jet_lower(g: &[Jet], n: usize, u: &[Jet]) -> Vec<Jet> {
    let ix = Ix(n);
    (0..n)
        .map(|i| {
            let mut s = g[ix.i2(i, 0)] * u[0];
            for j in 1..n {
                s += g[ix.i2(i, j)] * u[j];
            }
            s
        })
        .collect()
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// `∇_X Y` for jet vector fields.
fn covariant(gamma: &[Jet], n: usize, x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    let ix = Ix(n);
    (0..n)
        .map(|i| {
            let mut s = x[0] * y[i].partial(0);
            for j in 1..n {
                s += x[j] * y[i].partial(j);
            }
            for j in 0..n {
                for k in 0..n {
                    s += gamma[ix.i3(i, j, k)] * x[j] * y[k];
                }
            }
            s
        })
        .collect()
}

/// `(L_Z T)_jk = Z^m ∂_m T_jk + T_mk ∂_j Z^m + T_jm ∂_k Z^m` for a covariant 2-tensor.
fn lie_derivative_2(t: &[Jet], n: usize, z: &[Jet]) -> Vec<Jet> {
    let ix = Ix(n);
    let dz: Vec<Vec<Jet>> = z.iter().map(|c| (0..n).map(|j| c.partial(j)).collect()).collect();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut s = z[0] * t[ix.i2(j, k)].partial(0);
            for m in 1..n {
                s += z[m] * t[ix.i2(j, k)].partial(m);
            }
            for m in 0..n {
                s += t[ix.i2(m, k)] * dz[m][j] + t[ix.i2(j, m)] * dz[m][k];
            }
            out.push(s);
        }
    }
    out
}

fn trace_g(g_inv: &[Jet], n: usize, t: &[Jet]) -> Jet {
    let mut s = g_inv[0] * t[0];
    for f in 1..n * n {
        s += g_inv[f] * t[f];
    }
    s
}

/// Exterior derivative of a jet 1-form: values of `∂_i ω_j − ∂_j ω_i` (i < j)
/// and of all first partials for the scale.
fn exterior(omega: &[Jet]) -> (Vec<f64>, f64) {
    let n = omega.len();
    let mut d = Vec::new();
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(omega[j].partial(i).value().abs());
        }
        for j in (i + 1)..n {
            d.push(omega[j].partial(i).value() - omega[i].partial(j).value());
        }
    }
    (d, scale)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Orthonormal jet frames of `D` and `D^⊥` at one point.
#[derive(Debug, Clone)]
pub struct LocalSplit {
    pub n: usize,
    pub d: usize,
    pub point: Vec<f64>,
    pub g: Vec<Jet>,
    pub g_inv: Vec<Jet>,
    pub gamma: Vec<Jet>,
    /// Orthonormal basis of `D`.
    pub e: Vec<Vec<Jet>>,
    /// Orthonormal basis of `D^⊥`.
    pub nf: Vec<Vec<Jet>>,
}

impl LocalSplit {
    pub fn new(m: &MetricSpec, dist: &DistributionSpec, p: &[f64], order: usize) -> Result<LocalSplit, DistributionError> {
        dist.validate(m.dim)?;
        let n = m.dim;
        let g = m.eval_jets(p, order)?;
        let g_inv = invert_jets(&g, n)?;
        let gamma = christoffel_from(&g, &g_inv, n);
        let gv: linalg::Mat = (0..n).map(|i| (0..n).map(|j| g[i * n + j].value()).collect()).collect();
        let rank_drop = || DistributionError::RankDrop { point: p.to_vec() };

        let mut span: Vec<Vec<Jet>> = Vec::new();
        for f in &dist.fields {
            let v = f.eval_jets(p, order)?;
            span.push(Self::orthonormalize(&g, n, &span, v).ok_or_else(rank_drop)?);
        }
        // Complete with the coordinate field leaving the largest relative residual.
        let mut rest: Vec<Vec<Jet>> = Vec::new();
        while span.len() + rest.len() < n {
            let basis: Vec<Vec<f64>> = span.iter().chain(&rest).map(|v| values(v)).collect();
            let mut best: Option<(f64, usize)> = None;
            for j in 0..n {
                let mut w = vec![0.0; n];
                w[j] = 1.0;
                for b in &basis {
                    let c = linalg::metric_dot(&gv, &w, b);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
                let r = linalg::metric_dot(&gv, &w, &w).sqrt() / gv[j][j].sqrt();
                if best.map_or(true, |(b, _)| r > b + 1e-9) {
                    best = Some((r, j));
                }
            }
            let j = best.ok_or_else(rank_drop)?.1;
            let unit: Vec<Jet> = (0..n)
                .map(|k| Jet::constant(if k == j { 1.0 } else { 0.0 }, order, n))
                .collect();
            let all: Vec<Vec<Jet>> = span.iter().chain(&rest).cloned().collect();
            rest.push(Self::orthonormalize(&g, n, &all, unit).ok_or_else(rank_drop)?);
        }
        let (e, nf) = match dist.side {
            Side::Tangent => (span, rest),
            Side::Normal => (rest, span),
        };
        Ok(LocalSplit {
            n,
            d: e.len(),
            point: p.to_vec(),
            g,
            g_inv,
            gamma,
            e,
            nf,
        })
    }

    fn orthonormalize(g: &[Jet], n: usize, basis: &[Vec<Jet>], v: Vec<Jet>) -> Option<Vec<Jet>> {
        let len0 = jet_dot(g, n, &v, &v).value().sqrt();
        let mut w = v;
        for _ in 0..2 {
            for b in basis {
                let c = jet_dot(g, n, &w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * *bi;
                }
            }
        }
        let l2 = jet_dot(g, n, &w, &w);
        if !(l2.value().sqrt() > 1e-10 * len0) {
            return None;
        }
        let inv = l2.sqrt().ok()?.recip().ok()?;
        Some(w.into_iter().map(|c| c * inv).collect())
    }

    pub fn dot(&self, u: &[Jet], v: &[Jet]) -> Jet {
        jet_dot(&self.g, self.n, u, v)
    }

    pub fn lower(&self, u: &[Jet]) -> Vec<Jet> {
        jet_lower(&self.g, self.n, u)
    }

    pub fn covariant(&self, x: &[Jet], y: &[Jet]) -> Vec<Jet> {
        covariant(&self.gamma, self.n, x, y)
    }

    /// `ii[r][a][b] = g(∇_{A_a} A_b, B_r)` for frames `A` (tangent) and `B` (normal).
    fn form(&self, a: &[Vec<Jet>], b: &[Vec<Jet>]) -> Vec<Vec<Vec<Jet>>> {
        let nab: Vec<Vec<Vec<Jet>>> = a.iter().map(|x| a.iter().map(|y| self.covariant(x, y)).collect()).collect();
        b.iter()
            .map(|nr| {
                (0..a.len())
                    .map(|i| (0..a.len()).map(|j| self.dot(&nab[i][j], nr)).collect())
                    .collect()
            })
            .collect()
    }

    /// Second fundamental form of `D`, valued in `D^⊥`.
    pub fn ii(&self) -> Vec<Vec<Vec<Jet>>> {
        self.form(&self.e, &self.nf)
    }

    /// Second fundamental form of `D^⊥`, valued in `D`.
    pub fn ii_perp(&self) -> Vec<Vec<Vec<Jet>>> {
        self.form(&self.nf, &self.e)
    }

    /// `(1/rank) Σ_r tr(II^r) B_r`.
    fn mean_vector(&self, ii: &[Vec<Vec<Jet>>], b: &[Vec<Jet>], rank: usize) -> Vec<Jet> {
        let proto = self.gamma[0];
        let mut h = vec![Jet::zero(proto.order(), self.n); self.n];
        for (r, form) in ii.iter().enumerate() {
            let mut tr = form[0][0];
            for a in 1..rank {
                tr += form[a][a];
            }
            let tr = tr.scale(1.0 / rank as f64);
            for (hi, bi) in h.iter_mut().zip(&b[r]) {
                *hi += tr * *bi;
            }
        }
        h
    }

    pub fn mean_curvature(&self) -> Vec<Jet> {
        self.mean_vector(&self.ii(), &self.nf, self.d)
    }

    pub fn mean_curvature_perp(&self) -> Vec<Jet> {
        self.mean_vector(&self.ii_perp(), &self.e, self.n - self.d)
    }

    /// `g^D = Σ E_a♭ ⊗ E_a♭`.
    pub fn g_tangent(&self) -> Vec<Jet> {
        Self::outer_sum(&self.e.iter().map(|e| self.lower(e)).collect::<Vec<_>>(), self.n)
    }

    pub fn g_normal(&self) -> Vec<Jet> {
        Self::outer_sum(&self.nf.iter().map(|e| self.lower(e)).collect::<Vec<_>>(), self.n)
    }

    fn outer_sum(flats: &[Vec<Jet>], n: usize) -> Vec<Jet> {
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let mut s = flats[0][j] * flats[0][k];
                for f in &flats[1..] {
                    s += f[j] * f[k];
                }
                out.push(s);
            }
        }
        out
    }

    /// `Φ_i` with its two summands: the `L_{X^⊥} g^D` term and the `L_{X^D} g^⊥` term.
    pub fn phi(&self) -> PhiForm {
        let n = self.n;
        let (d, dp) = (self.d as f64, (self.n - self.d) as f64);
        let gd = self.g_tangent();
        let gp = self.g_normal();
        let e_flat: Vec<Vec<Jet>> = self.e.iter().map(|e| self.lower(e)).collect();
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        for i in 0..n {
            // X^D = Σ_a E_a♭(∂_i) E_a, X^⊥ = ∂_i − X^D
            let x_d: Vec<Jet> = (0..n)
                .map(|k| {
                    let mut s = e_flat[0][i] * self.e[0][k];
                    for a in 1..self.d {
                        s += e_flat[a][i] * self.e[a][k];
                    }
                    s
                })
                .collect();
            let x_perp: Vec<Jet> = x_d
                .iter()
                .enumerate()
                .map(|(k, c)| if k == i { -*c + 1.0 } else { -*c })
                .collect();
            first.push(trace_g(&self.g_inv, n, &lie_derivative_2(&gd, n, &x_perp)).scale(1.0 / d));
            second.push(trace_g(&self.g_inv, n, &lie_derivative_2(&gp, n, &x_d)).scale(1.0 / dp));
        }
        let total: Vec<Jet> = first.iter().zip(&second).map(|(a, b)| *a + *b).collect();
        PhiForm {
            point: self.point.clone(),
            values: values(&total),
            tangential_term: values(&first),
            normal_term: values(&second),
            jets: total,
        }
    }

    /// Frame `E ∪ N` as values.
    pub fn frame_values(&self) -> Vec<Vec<f64>> {
        self.e.iter().chain(&self.nf).map(|v| values(v)).collect()
    }

    /// Worst deviation of `L_Z t` from `(tr/rank)·t` over `Z` in `zs`, in the
    /// adapted frame, with the Frobenius norm of `L_Z t` as scale.
    fn conformality(&self, t: &[Jet], zs: &[Vec<Jet>], rank: usize) -> (f64, f64) {
        let n = self.n;
        let frame = self.frame_values();
        let tv: Vec<f64> = values(t);
        let gi: Vec<f64> = values(&self.g_inv);
        let mut worst: (f64, f64) = (0.0, 0.0);
        for z in zs {
            let l = values(&lie_derivative_2(t, n, z));
            let tr: f64 = gi.iter().zip(&l).map(|(a, b)| a * b).sum();
            let c = tr / rank as f64;
            let mut dev = 0.0;
            let mut lf = 0.0;
            for a in &frame {
                for b in &frame {
                    let mut lab = 0.0;
                    let mut tab = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            lab += l[j * n + k] * a[j] * b[k];
                            tab += tv[j * n + k] * a[j] * b[k];
                        }
                    }
                    dev += (lab - c * tab).powi(2);
                    lf += lab * lab;
                }
            }
            let (dev, lf) = (dev.sqrt(), lf.sqrt());
            if dev / (1.0 + lf) >= worst.0 / (1.0 + worst.1) {
                worst = (dev, lf);
            }
        }
        worst
    }
}

/// Values of a second fundamental form at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondFundamentalForm {
    pub point: Vec<f64>,
    /// Orthonormal basis of the distribution (coordinate components).
    pub basis: Vec<Vec<f64>>,
    /// Orthonormal basis of the complement.
    pub normals: Vec<Vec<f64>>,
    /// `components[r][a][b] = g(∇_{e_a} e_b, n_r)`.
    pub components: Vec<linalg::Mat>,
    /// Largest `|II_ab − II_ba|`.
    pub symmetry_defect: f64,
    pub norm: f64,
}

impl SecondFundamentalForm {
    fn from_jets(point: &[f64], basis: &[Vec<Jet>], normals: &[Vec<Jet>], ii: &[Vec<Vec<Jet>>]) -> SecondFundamentalForm {
        let components: Vec<linalg::Mat> = ii.iter().map(|f| f.iter().map(|r| values(r)).collect()).collect();
        let mut asym: f64 = 0.0;
        let mut norm2 = 0.0;
        for c in &components {
            for a in 0..c.len() {
                for b in 0..c.len() {
                    asym = asym.max((c[a][b] - c[b][a]).abs());
                    norm2 += c[a][b] * c[a][b];
                }
            }
        }
        SecondFundamentalForm {
            point: point.to_vec(),
            basis: basis.iter().map(|v| values(v)).collect(),
            normals: normals.iter().map(|v| values(v)).collect(),
            components,
            symmetry_defect: asym,
            norm: norm2.sqrt(),
        }
    }

    /// Frobenius norm of `II − g|_D ⊗ H` (antisymmetric part included).
    pub fn anisotropy(&self) -> f64 {
        let mut s = 0.0;
        for c in &self.components {
            let d = c.len();
            let h = (0..d).map(|a| c[a][a]).sum::<f64>() / d as f64;
            for a in 0..d {
                for b in 0..d {
                    let want = if a == b { h } else { 0.0 };
                    s += (c[a][b] - want).powi(2);
                }
            }
        }
        s.sqrt()
    }

    /// Mean curvature components along the normals.
    pub fn mean_curvature(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| (0..c.len()).map(|a| c[a][a]).sum::<f64>() / c.len() as f64)
            .collect()
    }
}

pub fn second_fundamental_form(dist: &DistributionSpec, m: &MetricSpec, p: &[f64]) -> Result<SecondFundamentalForm, DistributionError> {
    let s = LocalSplit::new(m, dist, p, SPLIT_ORDER)?;
    Ok(SecondFundamentalForm::from_jets(p, &s.e, &s.nf, &s.ii()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiForm {
    pub point: Vec<f64>,
    pub values: Vec<f64>,
    /// `(1/d) tr L_{X^⊥} g^D` per coordinate `X = ∂_i`.
    pub tangential_term: Vec<f64>,
    /// `(1/(n−d)) tr L_{X^D} g^⊥` per coordinate.
    pub normal_term: Vec<f64>,
    #[serde(skip)]
    pub jets: Vec<Jet>,
}

pub fn phi_form(dist: &DistributionSpec, m: &MetricSpec, p: &[f64]) -> Result<PhiForm, DistributionError> {
    Ok(LocalSplit::new(m, dist, p, SPLIT_ORDER)?.phi())
}

/// `[X,Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i`.
pub fn lie_bracket(x: &VectorFieldSpec, y: &VectorFieldSpec, p: &[f64]) -> Result<Vec<f64>, DistributionError> {
    let n = p.len();
    if x.dim() != n || y.dim() != n {
        return Err(DistributionError::FieldDim { want: n, got: x.dim().min(y.dim()) });
    }
    let xj = x.eval_jets(p, 1)?;
    let yj = y.eval_jets(p, 1)?;
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| xj[j].value() * yj[i].partial(j).value() - yj[j].value() * xj[i].partial(j).value())
                .sum()
        })
        .collect())
}

/// Every threshold comparison of the conformal-factor decision at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorMargins {
    pub integrable: Margin,
    pub integrable_perp: Margin,
    pub umbilic: Margin,
    pub umbilic_perp: Margin,
    /// Closedness of `(H_D + H_⊥)♭`.
    pub mean_closed: Margin,
    pub lie_conformal: Margin,
    pub lie_conformal_perp: Margin,
    pub phi_closed: Margin,
}

impl FactorMargins {
    fn criterion3(&self) -> [(&'static str, Margin); 5] {
        [
            ("integrability of D", self.integrable),
            ("integrability of D^perp", self.integrable_perp),
            ("umbilicity of D", self.umbilic),
            ("umbilicity of D^perp", self.umbilic_perp),
            ("closedness of (H1+H2)^flat", self.mean_closed),
        ]
    }

    fn criterion2(&self) -> [(&'static str, Margin); 3] {
        [
            ("Lie conformality of g^D", self.lie_conformal),
            ("Lie conformality of g^perp", self.lie_conformal_perp),
            ("closedness of Phi", self.phi_closed),
        ]
    }

    fn worst(self, o: FactorMargins) -> FactorMargins {
        FactorMargins {
            integrable: self.integrable.worst(o.integrable),
            integrable_perp: self.integrable_perp.worst(o.integrable_perp),
            umbilic: self.umbilic.worst(o.umbilic),
            umbilic_perp: self.umbilic_perp.worst(o.umbilic_perp),
            mean_closed: self.mean_closed.worst(o.mean_closed),
            lie_conformal: self.lie_conformal.worst(o.lie_conformal),
            lie_conformal_perp: self.lie_conformal_perp.worst(o.lie_conformal_perp),
            phi_closed: self.phi_closed.worst(o.phi_closed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorPoint {
    pub point: Vec<f64>,
    pub margins: FactorMargins,
    pub ii: SecondFundamentalForm,
    pub ii_perp: SecondFundamentalForm,
    pub mean_curvature: Vec<f64>,
    pub mean_curvature_perp: Vec<f64>,
    /// `(H_D + H_⊥)♭`.
    pub omega: Vec<f64>,
    pub phi: PhiForm,
}

fn rel(value: f64, tol: f64, scale: f64) -> Margin {
    Margin::new(value, tol * (1.0 + scale))
}

/// All per-point data of the conformal-factor decision.
pub fn factor_point(dist: &DistributionSpec, m: &MetricSpec, p: &[f64], tol: &Tolerances) -> Result<FactorPoint, DistributionError> {
    let s = LocalSplit::new(m, dist, p, SPLIT_ORDER)?;
    let t = tol.check;
    let ii = SecondFundamentalForm::from_jets(p, &s.e, &s.nf, &s.ii());
    let iip = SecondFundamentalForm::from_jets(p, &s.nf, &s.e, &s.ii_perp());

    let h = s.mean_curvature();
    let hp = s.mean_curvature_perp();
    let sum: Vec<Jet> = h.iter().zip(&hp).map(|(a, b)| *a + *b).collect();
    let omega = s.lower(&sum);
    let (d_omega, omega_scale) = exterior(&omega);

    let phi = s.phi();
    let (d_phi, phi_scale) = exterior(&phi.jets);

    let (lie_dev, lie_scale) = s.conformality(&s.g_tangent(), &s.nf, s.d);
    let (liep_dev, liep_scale) = s.conformality(&s.g_normal(), &s.e, s.n - s.d);

    let margins = FactorMargins {
        integrable: rel(ii.symmetry_defect, t, ii.norm),
        integrable_perp: rel(iip.symmetry_defect, t, iip.norm),
        umbilic: rel(ii.anisotropy(), t, ii.norm),
        umbilic_perp: rel(iip.anisotropy(), t, iip.norm),
        mean_closed: rel(max_abs(&d_omega), t, omega_scale),
        lie_conformal: rel(lie_dev, t, lie_scale),
        lie_conformal_perp: rel(liep_dev, t, liep_scale),
        phi_closed: rel(max_abs(&d_phi), t, phi_scale),
    };
    Ok(FactorPoint {
        point: p.to_vec(),
        margins,
        mean_curvature: values(&h),
        mean_curvature_perp: values(&hp),
        omega: values(&omega),
        phi,
        ii,
        ii_perp: iip,
    })
}

fn factor_points(
    dist: &DistributionSpec,
    m: &MetricSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<Vec<FactorPoint>, DistributionError> {
    exec.map(&samples.points, |p| factor_point(dist, m, p, tol))
        .into_iter()
        .collect()
}

/// A pass/fail check over a region with its worst margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCheck {
    pub pass: bool,
    pub worst: Margin,
    pub per_point: Vec<Margin>,
    pub ambiguous: bool,
}

impl RegionCheck {
    pub fn from_margins(per_point: Vec<Margin>) -> RegionCheck {
        let worst = per_point.iter().copied().reduce(Margin::worst).unwrap_or_else(Margin::zero);
        RegionCheck {
            pass: per_point.iter().all(Margin::pass),
            worst,
            ambiguous: worst.ambiguous(),
            per_point,
        }
    }
}

/// Normal component of brackets of orthonormal spanning fields, as the
/// antisymmetric part of the second fundamental form.
pub fn integrability_check(
    dist: &DistributionSpec,
    m: &MetricSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<RegionCheck, DistributionError> {
    let pts = factor_points(dist, m, samples, tol, exec)?;
    Ok(RegionCheck::from_margins(pts.iter().map(|f| f.margins.integrable).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UmbilicityReport {
    pub umbilic: bool,
    /// Mean curvature vector (coordinate components) per sample.
    pub mean_curvature: Vec<Vec<f64>>,
    pub anisotropy: Margin,
    pub per_point: Vec<Margin>,
    pub ambiguous: bool,
}

pub fn umbilicity_check(
    dist: &DistributionSpec,
    m: &MetricSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<UmbilicityReport, DistributionError> {
    let pts = factor_points(dist, m, samples, tol, exec)?;
    let check = RegionCheck::from_margins(pts.iter().map(|f| f.margins.umbilic).collect());
    Ok(UmbilicityReport {
        umbilic: check.pass,
        mean_curvature: pts.iter().map(|f| f.mean_curvature.clone()).collect(),
        anisotropy: check.worst,
        per_point: check.per_point,
        ambiguous: check.ambiguous,
    })
}

/// `dΦ = 0` over the region.
pub fn closedness_check(
    dist: &DistributionSpec,
    m: &MetricSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<RegionCheck, DistributionError> {
    let pts = factor_points(dist, m, samples, tol, exec)?;
    Ok(RegionCheck::from_margins(pts.iter().map(|f| f.margins.phi_closed).collect()))
}

/// `L_Z g^D ∝ g^D` for `Z ⊥ D`, and `L_Z g^⊥ ∝ g^⊥` for `Z ∈ D`.
pub fn lie_conformality_check(
    dist: &DistributionSpec,
    m: &MetricSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<RegionCheck, DistributionError> {
    let pts = factor_points(dist, m, samples, tol, exec)?;
    Ok(RegionCheck::from_margins(
        pts.iter()
            .map(|f| f.margins.lie_conformal.worst(f.margins.lie_conformal_perp))
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorVerdict {
    pub distribution: String,
    pub rank: usize,
    pub is_factor: bool,
    /// Both distributions integrable and umbilic, `(H_D + H_⊥)♭` closed.
    pub criterion_mean_curvature: bool,
    /// Lie conformality both ways and `dΦ = 0`.
    pub criterion_lie: bool,
    /// The two criteria disagree.
    pub inconsistent: bool,
    pub ambiguous: bool,
    /// First failing step of the mean-curvature criterion.
    pub failed_step: Option<String>,
    pub worst: FactorMargins,
    #[serde(skip)]
    pub per_point: Vec<FactorPoint>,
}

fn criterion_outcome(margins: &[(&'static str, Margin)]) -> (bool, bool, Option<String>) {
    let pass = margins.iter().all(|(_, m)| m.pass());
    let failed = margins.iter().find(|(_, m)| !m.pass()).map(|(s, _)| s.to_string());
    let ambiguous = if pass {
        margins.iter().any(|(_, m)| m.ambiguous())
    } else {
        margins.iter().filter(|(_, m)| !m.pass()).all(|(_, m)| m.ambiguous())
    };
    (pass, ambiguous, failed)
}

pub fn conformal_factor_decision(
    dist: &DistributionSpec,
    m: &MetricSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<FactorVerdict, DistributionError> {
    let pts = factor_points(dist, m, samples, tol, exec)?;
    let worst = pts
        .iter()
        .map(|f| f.margins)
        .reduce(FactorMargins::worst)
        .ok_or(DistributionError::RankDrop { point: vec![] })?;
    let (c3, amb3, failed) = criterion_outcome(&worst.criterion3());
    let (c2, amb2, _) = criterion_outcome(&worst.criterion2());
    Ok(FactorVerdict {
        distribution: dist.describe(&m.var_names),
        rank: dist.rank(m.dim),
        is_factor: c3,
        criterion_mean_curvature: c3,
        criterion_lie: c2,
        inconsistent: c2 != c3,
        ambiguous: amb3 || (c2 != c3 && amb2),
        failed_step: failed,
        worst,
        per_point: pts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KillingCheck {
    pub pass: bool,
    pub worst: Margin,
    /// `max |(L_X g)_ij|` per sample.
    pub per_point: Vec<f64>,
}

/// `L_X g` as values, with the size of its two parts as scale.
fn killing_tensor(m: &MetricSpec, x: &VectorFieldSpec, p: &[f64]) -> Result<(Vec<f64>, f64), DistributionError> {
    let n = m.dim;
    let g = m.eval_jets(p, 1)?;
    let xj = x.eval_jets(p, 1)?;
    let mut l = Vec::with_capacity(n * n);
    let (mut transport, mut twist) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let a: f64 = (0..n).map(|k| xj[k].value() * g[i * n + j].partial(k).value()).sum();
            let b: f64 = (0..n)
                .map(|k| g[k * n + j].value() * xj[k].partial(i).value() + g[i * n + k].value() * xj[k].partial(j).value())
                .sum();
            transport = transport.max(a.abs());
            twist = twist.max(b.abs());
            l.push(a + b);
        }
    }
    Ok((l, transport + twist))
}

pub fn killing_check(
    m: &MetricSpec,
    x: &VectorFieldSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<KillingCheck, DistributionError> {
    if x.dim() != m.dim {
        return Err(DistributionError::FieldDim { want: m.dim, got: x.dim() });
    }
    let rows = exec
        .map(&samples.points, |p| killing_tensor(m, x, p))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let margins: Vec<Margin> = rows.iter().map(|(l, s)| rel(max_abs(l), tol.check, *s)).collect();
    let check = RegionCheck::from_margins(margins);
    Ok(KillingCheck {
        pass: check.pass,
        worst: check.worst,
        per_point: rows.iter().map(|(l, _)| max_abs(l)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KillingKind {
    /// A Killing field exists along the level sets of the Gaussian curvature.
    Found,
    None,
    /// Constant curvature on the whole region.
    Inapplicable,
    /// `∇K` vanishes on part of the region only.
    Mixed,
}

impl std::fmt::Display for KillingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KillingKind::Found => "found",
            KillingKind::None => "none",
            KillingKind::Inapplicable => "inapplicable",
            KillingKind::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KillingDetection {
    pub kind: KillingKind,
    /// `|∇K|` against the flatness threshold, per sample.
    pub gradient: Vec<Margin>,
    /// Worst `(N,N)` component of `L_Ŷ g`, the consistency residual.
    pub residual: Margin,
    /// Worst defect of `d(df/f) = 0`.
    pub closed: Margin,
    /// Unit candidate `Ŷ` per sample (zero where `∇K` vanishes).
    pub directions: Vec<Vec<f64>>,
    /// Coordinate field parallel to `Ŷ` at every sample, if any.
    pub coordinate: Option<usize>,
    /// Samples where `∇K` vanishes.
    pub flat_points: Vec<usize>,
    pub ambiguous: bool,
}

struct KillingPoint {
    gradient: Margin,
    residual: Margin,
    closed: Margin,
    direction: Vec<f64>,
}

fn killing_point(m: &MetricSpec, p: &[f64], tol: &Tolerances) -> Result<KillingPoint, DistributionError> {
    let n = 2;
    let k = gaussian_curvature(m, p, KILLING_ORDER)?;
    let g = m.eval_jets(p, KILLING_ORDER)?;
    let g_inv = invert_jets(&g, n)?;
    let dk = [k.partial(0), k.partial(1)];
    let grad: Vec<Jet> = (0..n).map(|i| g_inv[2 * i] * dk[0] + g_inv[2 * i + 1] * dk[1]).collect();
    let gnorm2 = jet_dot(&g, n, &grad, &grad);
    let gnorm = gnorm2.value().max(0.0).sqrt();
    let gradient = Margin::new(gnorm, tol.check * (1.0 + k.value().abs()));
    if gradient.pass() {
        return Ok(KillingPoint {
            gradient,
            residual: Margin::zero(),
            closed: Margin::zero(),
            direction: vec![0.0; n],
        });
    }
    let sqrt_det = (g[0] * g[3] - g[1] * g[2]).sqrt()?;
    let inv_det = sqrt_det.recip()?;
    let y = vec![dk[1] * inv_det, -dk[0] * inv_det];
    let inv_y = jet_dot(&g, n, &y, &y).sqrt()?.recip()?;
    let y: Vec<Jet> = y.into_iter().map(|c| c * inv_y).collect();
    let inv_n = gnorm2.sqrt()?.recip()?;
    let nv: Vec<Jet> = grad.into_iter().map(|c| c * inv_n).collect();

    let l = lie_derivative_2(&g, n, &y);
    let pair = |a: &[Jet], b: &[Jet]| {
        let mut s = l[0] * a[0] * b[0];
        s += l[1] * a[0] * b[1];
        s += l[2] * a[1] * b[0];
        s += l[3] * a[1] * b[1];
        s
    };
    let (l_yy, l_yn, l_nn) = (pair(&y, &y), pair(&y, &nv), pair(&nv, &nv));
    let l_scale = (l_yy.value().powi(2) + 2.0 * l_yn.value().powi(2) + l_nn.value().powi(2)).sqrt();
    // f L_Ŷ g + df ⊗ Ŷ♭ + Ŷ♭ ⊗ df = 0 gives d ln f on the frame.
    let w_y = l_yy.scale(-0.5);
    let w_n = -l_yn;
    let yf = jet_lower(&g, n, &y);
    let nf = jet_lower(&g, n, &nv);
    let omega: Vec<Jet> = (0..n).map(|i| w_y * yf[i] + w_n * nf[i]).collect();
    let (d, scale) = exterior(&omega);
    Ok(KillingPoint {
        gradient,
        residual: rel(l_nn.value().abs(), tol.check, l_scale),
        closed: rel(max_abs(&d), tol.check, scale),
        direction: values(&y),
    })
}

/// Decides whether a surface metric carries a Killing field on the region.
pub fn killing_detect_surface(
    m: &MetricSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<KillingDetection, DistributionError> {
    if m.dim != 2 {
        return Err(DistributionError::Dimension { want: 2, got: m.dim });
    }
    let pts = exec
        .map(&samples.points, |p| killing_point(m, p, tol))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let flat_points: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].gradient.pass()).collect();
    let residual = pts.iter().map(|k| k.residual).reduce(Margin::worst).unwrap_or_else(Margin::zero);
    let closed = pts.iter().map(|k| k.closed).reduce(Margin::worst).unwrap_or_else(Margin::zero);
    let directions: Vec<Vec<f64>> = pts.iter().map(|k| k.direction.clone()).collect();
    let kind = if flat_points.len() == pts.len() {
        KillingKind::Inapplicable
    } else if !flat_points.is_empty() {
        KillingKind::Mixed
    } else if residual.pass() && closed.pass() {
        KillingKind::Found
    } else {
        KillingKind::None
    };
    let grad_amb = pts.iter().any(|k| k.gradient.ambiguous());
    let ambiguous = grad_amb
        || match kind {
            KillingKind::Found => residual.ambiguous() || closed.ambiguous(),
            KillingKind::None => [residual, closed].iter().filter(|m| !m.pass()).all(Margin::ambiguous),
            _ => false,
        };
    let coordinate = if kind == KillingKind::Found {
        (0..2).find(|&j| {
            samples.points.iter().zip(&directions).all(|(p, d)| {
                m.eval(p)
                    .map(|gv| {
                        let mut c = vec![0.0; 2];
                        c[j] = 1.0;
                        let cos = linalg::metric_dot(&gv, d, &c) / linalg::metric_dot(&gv, &c, &c).sqrt();
                        (1.0 - cos * cos).max(0.0).sqrt() <= tol.angle
                    })
                    .unwrap_or(false)
            })
        })
    } else {
        None
    };
    Ok(KillingDetection {
        kind,
        gradient: pts.iter().map(|k| k.gradient).collect(),
        residual,
        closed,
        directions,
        coordinate,
        flat_points,
        ambiguous,
    })
}

/// `∇X = 0` for a metric and field, all components of `∂_j X^i + Γ^i_jk X^k`.
pub fn parallel_check(
    m: &MetricSpec,
    x: &VectorFieldSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<RegionCheck, DistributionError> {
    if x.dim() != m.dim {
        return Err(DistributionError::FieldDim { want: m.dim, got: x.dim() });
    }
    let n = m.dim;
    let margins = exec
        .map(&samples.points, |p| -> Result<Margin, DistributionError> {
            let g = m.eval_jets(p, 1)?;
            let gi = invert_jets(&g, n)?;
            let gamma = christoffel_from(&g, &gi, n);
            let xj = x.eval_jets(p, 1)?;
            let ix = Ix(n);
            let (mut worst, mut scale) = (0.0f64, 0.0f64);
            for i in 0..n {
                for j in 0..n {
                    let a = xj[i].partial(j).value();
                    let b: f64 = (0..n).map(|k| gamma[ix.i3(i, j, k)].value() * xj[k].value()).sum();
                    worst = worst.max((a + b).abs());
                    scale = scale.max(a.abs()).max(b.abs());
                }
            }
            Ok(rel(worst, tol.check, scale))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RegionCheck::from_margins(margins))
}

/// Parallelism of the unit field `X̂` spanning a line field `D` for the
/// conformal metric that makes `D` a product factor, without integrating:
/// with `Φ` of `D`, checks `∇_Y X̂ = ½(Φ(X̂) Y − g(Y, X̂) Φ♯)` for all
/// coordinate `Y`.
pub fn rescaled_parallel_check(
    m: &MetricSpec,
    dist: &DistributionSpec,
    samples: &SampleSet,
    tol: &Tolerances,
    exec: Exec,
) -> Result<RegionCheck, DistributionError> {
    let n = m.dim;
    if dist.rank(n) != 1 {
        return Err(DistributionError::BadRank { rank: dist.rank(n), max: 1 });
    }
    let margins = exec
        .map(&samples.points, |p| -> Result<Margin, DistributionError> {
            let s = LocalSplit::new(m, dist, p, SPLIT_ORDER)?;
            let phi = s.phi().values;
            let gi: Vec<f64> = values(&s.g_inv);
            let xh = &s.e[0];
            let xv = values(xh);
            let xflat = values(&s.lower(xh));
            let phi_x: f64 = phi.iter().zip(&xv).map(|(a, b)| a * b).sum();
            let phi_sharp: Vec<f64> = (0..n).map(|i| (0..n).map(|k| gi[i * n + k] * phi[k]).sum()).collect();
            let (mut worst, mut scale) = (0.0f64, 0.0f64);
            for j in 0..n {
                let mut y = vec![Jet::constant(0.0, SPLIT_ORDER, n); n];
                y[j] = Jet::constant(1.0, SPLIT_ORDER, n);
                let nab = values(&s.covariant(&y, xh));
                for i in 0..n {
                    let want = 0.5 * (phi_x * if i == j { 1.0 } else { 0.0 } - xflat[j] * phi_sharp[i]);
                    worst = worst.max((nab[i] - want).abs());
                    scale = scale.max(nab[i].abs()).max(want.abs());
                }
            }
            Ok(rel(worst, tol.check, scale))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RegionCheck::from_margins(margins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_metric;
    use crate::region::RegionSpec;

    fn warped_b() -> MetricSpec {
        parse_metric("dim = 4\ng tt = 1\ng xx = 1\ng yy = x\ng zz = x^2\ndomain x > 0\n").unwrap()
    }

    fn warped_c() -> MetricSpec {
        parse_metric("dim = 4\ng tt = 1\ng xx = 1\ng yy = x^3\ng zz = 1/x\ndomain x > 0\n").unwrap()
    }

    fn small(m: &MetricSpec) -> SampleSet {
        RegionSpec::default_for(m).with_grid(3, 5).samples()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn brackets() {
        let t = VectorFieldSpec::coordinate(2, 0);
        let rot = VectorFieldSpec::new(crate::dsl::parse_vector_field("-y*dx + x*dy", &["x".to_string(), "y".to_string()]).unwrap());
        let b = lie_bracket(&rot, &t, &[0.3, 0.7]).unwrap();
        assert!(close(b[0], 0.0) && close(b[1], -1.0));
        let m = parse_metric("dim = 3\ng tt = 1\ng xx = 1\ng yy = 1\n").unwrap();
        let x = m.parse_field("y*dt + dx").unwrap();
        let y = m.parse_field("dy").unwrap();
        let b = lie_bracket(&x, &y, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(b, vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn warped_b_second_fundamental_form() {
        let m = warped_b();
        let d = DistributionSpec::normal(vec![m.coordinate_field(1)]);
        let ii = second_fundamental_form(&d, &m, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        let c = &ii.components[0];
        let want = [0.0, -0.25, -0.5];
        for a in 0..3 {
            for b in 0..3 {
                assert!(close(c[a][b], if a == b { want[a] } else { 0.0 }), "{c:?}");
            }
        }
    }

    #[test]
    fn warped_b_factors() {
        let m = warped_b();
        let s = small(&m);
        let tol = Tolerances::default();
        for (i, want) in [(0, true), (1, false), (2, true), (3, true)] {
            let v = conformal_factor_decision(&DistributionSpec::coordinates(4, &[i]), &m, &s, &tol, Exec::Sequential).unwrap();
            assert_eq!(v.is_factor, want, "{i}: {v:?}");
            assert!(!v.inconsistent, "{i}: {:?}", v.worst);
            assert!(!v.ambiguous);
        }
    }

    #[test]
    fn warped_c_plane_not_factor() {
        let m = warped_c();
        let s = small(&m);
        let v = conformal_factor_decision(&DistributionSpec::coordinates(4, &[2, 3]), &m, &s, &Tolerances::default(), Exec::Sequential)
            .unwrap();
        assert!(!v.is_factor && !v.inconsistent);
        assert_eq!(v.failed_step.as_deref(), Some("umbilicity of D"));
    }

    #[test]
    fn phi_of_conformal_product() {
        let m = parse_metric("dim = 4\ng tt = exp(x + y^2)\ng xx = exp(x + y^2)\ng yy = exp(x + y^2)*(2 + sin(y))\ng zz = exp(x + y^2)\n").unwrap();
        let d = DistributionSpec::coordinates(4, &[0, 1]);
        let p = [0.2, 0.4, -0.3, 0.5];
        let phi = phi_form(&d, &m, &p).unwrap();
        let want = [0.0, 1.0, 2.0 * p[2], 0.0];
        for i in 0..4 {
            assert!((phi.values[i] - want[i]).abs() < 1e-9, "{:?}", phi.values);
        }
        let v = conformal_factor_decision(&d, &m, &small(&m), &Tolerances::default(), Exec::Parallel).unwrap();
        assert!(v.is_factor && v.criterion_lie);
    }

    #[test]
    fn contact_not_integrable() {
        let m = parse_metric("dim = 3\ng tt = 1\ng xx = 1\ng yy = 1\n").unwrap();
        let d = DistributionSpec::tangent(vec![m.parse_field("y*dt + dx").unwrap(), m.parse_field("dy").unwrap()]);
        let c = integrability_check(&d, &m, &small(&m), &Tolerances::default(), Exec::Sequential).unwrap();
        assert!(!c.pass && c.worst.value > 0.1);
    }

    #[test]
    fn killing() {
        let m = parse_metric("dim = 2\nvars = t x\ng tt = exp(sin(x))\ng xx = exp(sin(x))\n").unwrap();
        let s = RegionSpec::default_for(&m).with_grid(3, 5).samples();
        let tol = Tolerances::default();
        assert!(killing_check(&m, &m.coordinate_field(0), &s, &tol, Exec::Sequential).unwrap().pass);
        assert!(!killing_check(&m, &m.coordinate_field(1), &s, &tol, Exec::Sequential).unwrap().pass);
        let flat = parse_metric("dim = 2\ng xx = 1\ng yy = 1\n").unwrap();
        let rot = flat.parse_field("-y*dx + x*dy").unwrap();
        assert!(killing_check(&flat, &rot, &s, &tol, Exec::Sequential).unwrap().pass);
    }

    #[test]
    fn detect_revolution_and_sphere() {
        let tol = Tolerances::default();
        let rev = parse_metric("dim = 2\ng xx = 1\ng yy = x^4\ndomain x > 0\n").unwrap();
        let s = RegionSpec::default_for(&rev).with_grid(3, 5).samples();
        let k = killing_detect_surface(&rev, &s, &tol, Exec::Sequential).unwrap();
        assert_eq!(k.kind, KillingKind::Found, "{k:?}");
        assert_eq!(k.coordinate, Some(1));
        let sph = parse_metric("dim = 2\ng xx = 4/(1 + x^2 + y^2)^2\ng yy = 4/(1 + x^2 + y^2)^2\n").unwrap();
        let s = RegionSpec::default_for(&sph).with_grid(3, 5).samples();
        let k = killing_detect_surface(&sph, &s, &tol, Exec::Sequential).unwrap();
        assert_eq!(k.kind, KillingKind::Inapplicable);
    }

    #[test]
    fn rescaled_parallel() {
        let m = warped_c();
        let s = small(&m);
        let tol = Tolerances::default();
        let gt = m.conformal_rescale(&m.parse_expr("-3*log(x)").unwrap());
        assert!(parallel_check(&gt, &m.coordinate_field(2), &s, &tol, Exec::Sequential).unwrap().pass);
        assert!(!parallel_check(&m, &m.coordinate_field(2), &s, &tol, Exec::Sequential).unwrap().pass);
        for i in [0, 2, 3] {
            let d = DistributionSpec::coordinates(4, &[i]);
            assert!(rescaled_parallel_check(&m, &d, &s, &tol, Exec::Sequential).unwrap().pass);
        }
        let d = DistributionSpec::normal(vec![m.coordinate_field(0), m.coordinate_field(2), m.coordinate_field(3)]);
        assert!(!rescaled_parallel_check(&m, &d, &s, &tol, Exec::Sequential).unwrap().pass);
    }
}
