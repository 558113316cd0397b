//! Top-level LCW decisions in dimensions 3 and 4.
//!
//! Per-sample classification runs in parallel; everything after it (direction
//! tracking, snapping to closed-form fields, the angle sweep, the product
//! branch) is a sequential fold over the table of per-point results, calling
//! back into the parallel region checks of [`crate::distribution`].

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::bivector::{orthonormal_frame, weyl_operator, BivectorError};
use crate::classify::{classify_cy_at, classify_weyl, CyClass, CyKind, WeylClass, WeylType};
use crate::curvature::{curvature_point, CurvatureError};
use crate::distribution::{
    conformal_factor_decision, killing_detect_surface, phi_form, rescaled_parallel_check, DistributionError,
    DistributionSpec, FactorVerdict, KillingDetection, KillingKind, LocalSplit, Side, SPLIT_ORDER,
};
use crate::dsl::expr::{self, Expr, Func};
use crate::dsl::{DomainConstraint, MetricError, MetricSpec, VectorFieldSpec};
use crate::jet::{Jet, JetError};
use crate::linalg::{self, Mat};
use crate::parallel::Exec;
use crate::region::{RegionError, RegionSpec, SampleSet};
use crate::tolerance::{Margin, Tolerances};

pub const DEFAULT_ANGLES: usize = 180;

/// Tracked eigen-directions must stay this aligned between grid neighbours.
const TRACK_MIN_COS: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecideError {
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Bivector(#[from] BivectorError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("decision procedures need dimension 3 or 4, got {0}")]
    Dimension(usize),
    #[error("{0}")]
    Form(String),
}

impl From<MetricError> for DecideError {
    fn from(e: MetricError) -> Self {
        DecideError::Curvature(CurvatureError::Metric(e))
    }
}

impl From<JetError> for DecideError {
    fn from(e: JetError) -> Self {
        DecideError::Curvature(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub tol: Tolerances,
    pub exec: Exec,
    pub n_angles: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: Tolerances::default(),
            exec: Exec::default(),
            n_angles: DEFAULT_ANGLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    LcwExists,
    ConformallyFlat,
    NoLcw,
    Ambiguous,
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictKind::LcwExists => "LCW exists",
            VerdictKind::ConformallyFlat => "conformally flat",
            VerdictKind::NoLcw => "no LCW",
            VerdictKind::Ambiguous => "ambiguous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "tensor", rename_all = "kebab-case")]
pub enum PointClass {
    Weyl(WeylClass),
    CottonYork(CyClass),
}

impl PointClass {
    pub fn label(&self) -> String {
        match self {
            PointClass::Weyl(w) => w.kind.to_string(),
            PointClass::CottonYork(c) => c.kind.to_string(),
        }
    }

    pub fn ambiguous(&self) -> bool {
        match self {
            PointClass::Weyl(w) => w.ambiguous,
            PointClass::CottonYork(c) => c.ambiguous,
        }
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        match self {
            PointClass::Weyl(w) => &w.directions,
            PointClass::CottonYork(c) => &c.directions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub class: PointClass,
}

/// Closed form found for a numerically tracked direction field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Snap {
    /// Parallel to `∂_i`.
    Coordinate(usize),
    /// Parallel to `∇x_i`, i.e. orthogonal to every other `∂_j`.
    GradientNormal(usize),
    Unresolved,
}

impl Snap {
    pub fn distribution(&self, n: usize) -> Option<DistributionSpec> {
        match *self {
            Snap::Coordinate(i) => Some(DistributionSpec::coordinates(n, &[i])),
            Snap::GradientNormal(i) => Some(DistributionSpec::normal(
                (0..n).filter(|&j| j != i).map(|j| VectorFieldSpec::coordinate(n, j)).collect(),
            )),
            Snap::Unresolved => None,
        }
    }

    pub fn label(&self, names: &[String]) -> String {
        match *self {
            Snap::Coordinate(i) => format!("d{}", names[i]),
            Snap::GradientNormal(i) => format!("grad {}", names[i]),
            Snap::Unresolved => "unresolved".into(),
        }
    }

    fn sort_key(&self) -> (usize, usize) {
        match *self {
            Snap::Coordinate(i) => (0, i),
            Snap::GradientNormal(i) => (1, i),
            Snap::Unresolved => (2, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedDirection {
    pub label: String,
    pub snap: Snap,
    /// Worst angle (sine) to the snapped closed form over the samples.
    pub snap_residual: f64,
    /// Unit vectors per sample, signs propagated along the grid.
    #[serde(skip)]
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneForm {
    /// `span(∂_i, ∂_j)`.
    Coordinates([usize; 2]),
    /// `span(∂_k, ∂_l)^⊥`.
    Complement([usize; 2]),
    Unresolved,
}

impl PlaneForm {
    pub fn distribution(&self, n: usize) -> Option<DistributionSpec> {
        match *self {
            PlaneForm::Coordinates(ij) => Some(DistributionSpec::coordinates(n, &ij)),
            PlaneForm::Complement(kl) => Some(DistributionSpec::normal(
                kl.iter().map(|&k| VectorFieldSpec::coordinate(n, k)).collect(),
            )),
            PlaneForm::Unresolved => None,
        }
    }

    pub fn label(&self, names: &[String]) -> String {
        match *self {
            PlaneForm::Coordinates([i, j]) => format!("<d{}, d{}>", names[i], names[j]),
            PlaneForm::Complement([k, l]) => format!("<d{}, d{}>^perp", names[k], names[l]),
            PlaneForm::Unresolved => "unresolved plane".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedPlane {
    pub label: String,
    pub form: PlaneForm,
    pub snap_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub label: String,
    /// Where the candidate came from: an eigenflag field or a sweep of a plane.
    pub source: String,
    pub snap: Snap,
    pub factor: Option<FactorVerdict>,
    /// `∇X̂ = 0` for the conformal metric recovered from `Φ`.
    pub rescaled_parallel: Option<Margin>,
    pub accepted: bool,
    pub ambiguous: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Survivor {
    pub theta: f64,
    pub objective: Margin,
    /// Rounded to a multiple of π/2.
    pub snapped: bool,
    #[serde(skip)]
    pub directions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub plane: String,
    pub n_angles: usize,
    pub survivors: Vec<Survivor>,
    /// Every grid angle passes: the sweep cannot discriminate.
    pub degenerate: bool,
    pub min_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafReport {
    pub plane: String,
    /// Leaf metric through the base point, in metric file syntax.
    pub metric: String,
    pub detection: KillingDetection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductOutcome {
    /// LCWs tangent to these factors (indices into `factors`).
    LcwAlongFactors(Vec<usize>),
    NoLcw,
    Unresolved,
    NotApplicable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductReport {
    pub planes: [String; 2],
    /// Loop defect of `α` integrated from `Φ = dα` along grid edges.
    pub alpha_path: Margin,
    pub inconsistent: bool,
    pub factors: Vec<LeafReport>,
    pub outcome: ProductOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionCell {
    pub label: String,
    pub samples: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub verdict: VerdictKind,
    pub directions: Vec<String>,
    pub reasons: Vec<String>,
    pub ambiguous: bool,
    pub partition: Vec<PartitionCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub dim: usize,
    pub per_point: Vec<PointRecord>,
    pub directions: Vec<TrackedDirection>,
    pub planes: Vec<TrackedPlane>,
    /// Conformal-factor verdicts of the planes, `None` where no closed form was found.
    pub plane_factors: Vec<Option<FactorVerdict>>,
    pub candidates: Vec<Candidate>,
    pub sweeps: Vec<SweepReport>,
    pub product: Option<ProductReport>,
    pub summary: Summary,
}

impl Verdict {
    pub fn headline(&self) -> String {
        match self.summary.verdict {
            VerdictKind::LcwExists => format!("LCW directions: {}", self.summary.directions.join(", ")),
            k => k.to_string(),
        }
    }

    pub fn is_decided(&self) -> bool {
        self.summary.verdict != VerdictKind::Ambiguous && !self.summary.ambiguous
    }
}

/// Weyl (4D) or Cotton–York (3D) class at one point.
pub fn classify_point(m: &MetricSpec, p: &[f64], tol: &Tolerances) -> Result<PointClass, DecideError> {
    let cp = curvature_point(m, p)?;
    match m.dim {
        3 => Ok(PointClass::CottonYork(classify_cy_at(&cp, tol)?.0)),
        4 => {
            let frame = orthonormal_frame(&cp, &linalg::identity(4))?;
            Ok(PointClass::Weyl(classify_weyl(&weyl_operator(&cp, &frame)?, tol)))
        }
        n => Err(DecideError::Dimension(n)),
    }
}

pub fn classify_region(m: &MetricSpec, samples: &SampleSet, opts: &Options) -> Result<Vec<PointRecord>, DecideError> {
    opts.exec
        .map(&samples.points, |p| {
            classify_point(m, p, &opts.tol).map(|class| PointRecord { point: p.clone(), class })
        })
        .into_iter()
        .collect()
}

fn metrics_at(m: &MetricSpec, samples: &SampleSet) -> Result<Vec<Mat>, DecideError> {
    samples.points.iter().map(|p| m.eval(p).map_err(DecideError::from)).collect()
}

fn unit(g: &Mat, v: &[f64]) -> Vec<f64> {
    let l = linalg::metric_dot(g, v, v).sqrt();
    v.iter().map(|x| x / l).collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Propagates line fields from the base point along the sample spanning tree,
/// matching each sample's directions to its parent's and fixing signs.
pub fn track_directions(
    samples: &SampleSet,
    per_point: &[Vec<Vec<f64>>],
    metrics: &[Mat],
) -> Result<Vec<Vec<Vec<f64>>>, String> {
    let k = per_point[samples.base].len();
    let mut tracked: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); samples.len()]; k];
    let perms = permutations(k);
    for (u, parent) in samples.spanning_order() {
        let dirs = &per_point[u];
        if dirs.len() != k {
            return Err(format!("sample {u} has {} directions, base has {k}", dirs.len()));
        }
        let g = &metrics[u];
        let units: Vec<Vec<f64>> = dirs.iter().map(|v| unit(g, v)).collect();
        let Some(par) = parent else {
            for (j, v) in units.into_iter().enumerate() {
                tracked[j][u] = v;
            }
            continue;
        };
        let cos = |j: usize, v: &[f64]| linalg::metric_dot(g, &unit(g, &tracked[j][par]), v);
        let best = perms
            .iter()
            .map(|p| (p, (0..k).map(|j| cos(j, &units[p[j]]).abs()).fold(f64::INFINITY, f64::min)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one permutation");
        if best.1 < TRACK_MIN_COS {
            return Err(format!(
                "direction fields cannot be followed from sample {par} to sample {u} (alignment {:.3})",
                best.1
            ));
        }
        let chosen: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let v = &units[best.0[j]];
                let s = if cos(j, v) < 0.0 { -1.0 } else { 1.0 };
                v.iter().map(|x| s * x).collect()
            })
            .collect();
        for (j, v) in chosen.into_iter().enumerate() {
            tracked[j][u] = v;
        }
    }
    Ok(tracked)
}

fn line_residual(g: &Mat, v: &[f64], i: usize) -> f64 {
    let v = unit(g, v);
    let c = linalg::metric_dot(g, &v, &basis(v.len(), i)) / g[i][i];
    let r: Vec<f64> = (0..v.len()).map(|k| v[k] - if k == i { c } else { 0.0 }).collect();
    linalg::metric_dot(g, &r, &r).max(0.0).sqrt()
}

fn basis(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

fn normal_residual(g: &Mat, v: &[f64], i: usize) -> f64 {
    let v = unit(g, v);
    (0..v.len())
        .filter(|&j| j != i)
        .map(|j| linalg::metric_dot(g, &v, &basis(v.len(), j)).abs() / g[j][j].sqrt())
        .fold(0.0, f64::max)
}

/// Matches a tracked line field to `∂_i` or `∇x_i` within `angle` at every sample.
pub fn snap_direction(values: &[Vec<f64>], metrics: &[Mat], angle: f64) -> (Snap, f64) {
    let n = values[0].len();
    let worst = |f: &dyn Fn(&Mat, &[f64]) -> f64| values.iter().zip(metrics).map(|(v, g)| f(g, v)).fold(0.0, f64::max);
    let coord: Vec<f64> = (0..n).map(|i| worst(&|g, v| line_residual(g, v, i))).collect();
    let (ci, cr) = argmin(&coord);
    if cr <= angle {
        return (Snap::Coordinate(ci), cr);
    }
    let grad: Vec<f64> = (0..n).map(|i| worst(&|g, v| normal_residual(g, v, i))).collect();
    let (gi, gr) = argmin(&grad);
    if gr <= angle {
        return (Snap::GradientNormal(gi), gr);
    }
    (Snap::Unresolved, cr.min(gr))
}

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, x)| if x < b.1 { (i, x) } else { b })
}

/// Distance of a g-unit vector from `span(∂_i, ∂_j)`.
fn span_residual(g: &Mat, v: &[f64], ij: [usize; 2]) -> f64 {
    let [i, j] = ij;
    let (a, b, c) = (g[i][i], g[i][j], g[j][j]);
    let (ri, rj) = (
        linalg::metric_dot(g, v, &basis(v.len(), i)),
        linalg::metric_dot(g, v, &basis(v.len(), j)),
    );
    let det = a * c - b * b;
    let (xi, xj) = ((c * ri - b * rj) / det, (a * rj - b * ri) / det);
    let mut r = v.to_vec();
    r[i] -= xi;
    r[j] -= xj;
    linalg::metric_dot(g, &r, &r).max(0.0).sqrt()
}

fn plane_residual(g: &Mat, basis2: &[Vec<f64>; 2], form: PlaneForm) -> f64 {
    let n = basis2[0].len();
    basis2
        .iter()
        .map(|b| {
            let b = unit(g, b);
            match form {
                PlaneForm::Coordinates(ij) => span_residual(g, &b, ij),
                PlaneForm::Complement(kl) => kl
                    .iter()
                    .map(|&k| linalg::metric_dot(g, &b, &basis(n, k)).abs() / g[k][k].sqrt())
                    .fold(0.0, f64::max),
                PlaneForm::Unresolved => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max)
}

fn pairs(n: usize) -> Vec<[usize; 2]> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| [i, j])).collect()
}

/// Closed forms for the eigenflag planes, fixed at the base point and
/// confirmed at every sample.
fn snap_planes(records: &[PointRecord], samples: &SampleSet, metrics: &[Mat], angle: f64, names: &[String]) -> Vec<TrackedPlane> {
    let planes_at = |u: usize| match &records[u].class {
        PointClass::Weyl(w) => w.planes.iter().map(|p| p.basis.clone()).collect::<Vec<_>>(),
        _ => Vec::new(),
    };
    let n = names.len();
    let base = samples.base;
    let mut out = Vec::new();
    for b in planes_at(base) {
        let g = &metrics[base];
        let mut form = PlaneForm::Unresolved;
        for make in [PlaneForm::Coordinates as fn([usize; 2]) -> PlaneForm, PlaneForm::Complement] {
            if form != PlaneForm::Unresolved {
                break;
            }
            let best = pairs(n)
                .into_iter()
                .map(|ij| (make(ij), plane_residual(g, &b, make(ij))))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((f, r)) = best {
                if r <= angle {
                    form = f;
                }
            }
        }
        let residual = if form == PlaneForm::Unresolved {
            f64::INFINITY
        } else {
            (0..samples.len())
                .map(|u| {
                    planes_at(u)
                        .iter()
                        .map(|pb| plane_residual(&metrics[u], pb, form))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        let form = if residual <= angle { form } else { PlaneForm::Unresolved };
        out.push(TrackedPlane {
            label: form.label(names),
            form,
            snap_residual: residual,
        });
    }
    out.sort_by_key(|p| p.form);
    out
}

/// Connected clusters of equally classified samples.
pub fn partition(samples: &SampleSet, labels: &[String]) -> Vec<PartitionCell> {
    let n = samples.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let join = |a: usize, b: usize, p: &mut Vec<usize>| {
        if labels[a] == labels[b] {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra.max(rb)] = ra.min(rb);
            }
        }
    };
    for (a, b) in samples.grid_edges() {
        join(a, b, &mut parent);
    }
    for k in samples.n_grid..n {
        join(k, samples.nearest_grid(k), &mut parent);
    }
    let mut cells: Vec<(usize, PartitionCell)> = Vec::new();
    for u in 0..n {
        let r = find(&mut parent, u);
        match cells.iter_mut().find(|(root, _)| *root == r) {
            Some((_, c)) => c.samples.push(u),
            None => cells.push((r, PartitionCell { label: labels[u].clone(), samples: vec![u] })),
        }
    }
    cells.into_iter().map(|(_, c)| c).collect()
}

fn evaluate_candidate(
    m: &MetricSpec,
    samples: &SampleSet,
    opts: &Options,
    dist: Option<DistributionSpec>,
    label: String,
    source: String,
    snap: Snap,
) -> Result<Candidate, DecideError> {
    let Some(dist) = dist else {
        return Ok(Candidate {
            label,
            source,
            snap,
            factor: None,
            rescaled_parallel: None,
            accepted: false,
            ambiguous: true,
            note: Some("direction field has no closed form; conformal-factor test not run".into()),
        });
    };
    let factor = conformal_factor_decision(&dist, m, samples, &opts.tol, opts.exec)?;
    let parallel = if factor.is_factor {
        Some(rescaled_parallel_check(m, &dist, samples, &opts.tol, opts.exec)?.worst)
    } else {
        None
    };
    let parallel_ok = parallel.map_or(true, |p| p.pass());
    let mut note = None;
    if factor.inconsistent {
        note = Some("the Lie-derivative and mean-curvature criteria disagree".into());
    } else if factor.is_factor && !parallel_ok {
        note = Some("conformal factor, but the rescaled field is not parallel".into());
    }
    Ok(Candidate {
        label,
        source,
        snap,
        accepted: factor.is_factor && parallel_ok && !factor.inconsistent,
        ambiguous: factor.ambiguous || factor.inconsistent || parallel.is_some_and(|p| p.ambiguous() || !p.pass()),
        rescaled_parallel: parallel,
        factor: Some(factor),
        note,
    })
}

fn factor_reason(label: &str, f: &FactorVerdict) -> String {
    if f.is_factor {
        format!("{label}: conformal factor (integrable, umbilic, (H1+H2)^flat closed)")
    } else {
        format!(
            "{label}: not a conformal factor ({} fails)",
            f.failed_step.as_deref().unwrap_or("a criterion")
        )
    }
}

fn summarize(
    candidates: &[Candidate],
    mut extra: Vec<String>,
    mut reasons: Vec<String>,
    ambiguous_in: bool,
) -> Summary {
    let mut accepted: Vec<&Candidate> = candidates.iter().filter(|c| c.accepted).collect();
    accepted.sort_by(|a, b| a.snap.sort_key().cmp(&b.snap.sort_key()).then(a.label.cmp(&b.label)));
    let mut directions: Vec<String> = Vec::new();
    for c in accepted {
        if !directions.contains(&c.label) {
            directions.push(c.label.clone());
        }
    }
    extra.retain(|e| !directions.contains(e));
    directions.extend(extra);
    let cand_amb = candidates.iter().any(|c| c.ambiguous);
    let ambiguous = ambiguous_in || cand_amb;
    let verdict = if !directions.is_empty() {
        VerdictKind::LcwExists
    } else if ambiguous {
        VerdictKind::Ambiguous
    } else {
        VerdictKind::NoLcw
    };
    if cand_amb {
        reasons.push("some candidate margins are within a factor 10 of their thresholds".into());
    }
    if verdict == VerdictKind::NoLcw {
        reasons.push("no candidate direction is a conformal factor: no local LCW".into());
    }
    Summary {
        verdict,
        directions,
        reasons,
        ambiguous,
        partition: Vec::new(),
    }
}

fn counts(labels: &[String]) -> String {
    let mut seen: Vec<(String, usize)> = Vec::new();
    for l in labels {
        match seen.iter_mut().find(|(s, _)| s == l) {
            Some((_, c)) => *c += 1,
            None => seen.push((l.clone(), 1)),
        }
    }
    seen.sort();
    seen.iter().map(|(l, c)| format!("{l}: {c}")).collect::<Vec<_>>().join(", ")
}

fn base_verdict(dim: usize, records: Vec<PointRecord>, summary: Summary) -> Verdict {
    Verdict {
        dim,
        per_point: records,
        directions: Vec::new(),
        planes: Vec::new(),
        plane_factors: Vec::new(),
        candidates: Vec::new(),
        sweeps: Vec::new(),
        product: None,
        summary,
    }
}

fn plain(verdict: VerdictKind, reasons: Vec<String>, ambiguous: bool, partition: Vec<PartitionCell>) -> Summary {
    Summary {
        verdict,
        directions: Vec::new(),
        reasons,
        ambiguous,
        partition,
    }
}

/// Tracks and snaps the eigenflag line fields of the records.
pub fn eigenflag_directions(
    m: &MetricSpec,
    samples: &SampleSet,
    records: &[PointRecord],
    tol: &Tolerances,
) -> Result<Vec<TrackedDirection>, DecideError> {
    let metrics = metrics_at(m, samples)?;
    let per: Vec<Vec<Vec<f64>>> = records.iter().map(|r| r.class.directions().to_vec()).collect();
    let tracked = track_directions(samples, &per, &metrics).map_err(DecideError::Form)?;
    let mut out: Vec<TrackedDirection> = tracked
        .into_iter()
        .map(|vals| {
            let (snap, r) = snap_direction(&vals, &metrics, tol.angle);
            TrackedDirection {
                label: snap.label(&m.var_names),
                snap,
                snap_residual: r,
                values: vals,
            }
        })
        .collect();
    out.sort_by(|a, b| a.snap.sort_key().cmp(&b.snap.sort_key()));
    Ok(out)
}

/// Eigenflag planes of type-C records in closed form.
pub fn eigenflag_planes(m: &MetricSpec, samples: &SampleSet, records: &[PointRecord], tol: &Tolerances) -> Result<Vec<TrackedPlane>, DecideError> {
    let metrics = metrics_at(m, samples)?;
    Ok(snap_planes(records, samples, &metrics, tol.angle, &m.var_names))
}

fn direction_candidates(
    m: &MetricSpec,
    samples: &SampleSet,
    opts: &Options,
    dirs: &[TrackedDirection],
) -> Result<Vec<Candidate>, DecideError> {
    dirs.iter()
        .map(|d| {
            evaluate_candidate(
                m,
                samples,
                opts,
                d.snap.distribution(m.dim),
                d.label.clone(),
                "eigenflag direction".into(),
                d.snap,
            )
        })
        .collect()
}

/// Three-dimensional procedure driven by the Cotton–York tensor.
pub fn decide_lcw_3d(m: &MetricSpec, region: &RegionSpec, opts: &Options) -> Result<Verdict, DecideError> {
    if m.dim != 3 {
        return Err(DecideError::Dimension(m.dim));
    }
    let samples = region.samples();
    let records = classify_region(m, &samples, opts)?;
    let kinds: Vec<CyKind> = records
        .iter()
        .map(|r| match &r.class {
            PointClass::CottonYork(c) => c.kind,
            PointClass::Weyl(_) => unreachable!("3D records carry Cotton-York classes"),
        })
        .collect();
    let labels: Vec<String> = records.iter().map(|r| r.class.label()).collect();
    let point_amb = records.iter().any(|r| r.class.ambiguous());
    let mut reasons = vec![format!("Cotton-York classes over {} samples: {}", samples.len(), counts(&labels))];
    if point_amb {
        reasons.push("some samples classify with margins within a factor 10 of threshold".into());
    }

    let hard_nondeg = records
        .iter()
        .zip(&kinds)
        .any(|(r, k)| *k == CyKind::Nondegenerate && !r.class.ambiguous());
    if hard_nondeg {
        reasons.push("det CY != 0 at a sample: there are no local LCWs there".into());
        return Ok(base_verdict(3, records, plain(VerdictKind::NoLcw, reasons, false, Vec::new())));
    }
    if kinds.iter().all(|k| *k == CyKind::Zero) {
        reasons.push("CY = 0 on the region: conformally flat, LCWs as in flat space".into());
        return Ok(base_verdict(3, records, plain(VerdictKind::ConformallyFlat, reasons, point_amb, Vec::new())));
    }
    if !kinds.iter().all(|k| *k == CyKind::Degenerate) {
        reasons.push("the Cotton-York class changes over the region".into());
        let cells = partition(&samples, &labels);
        return Ok(base_verdict(3, records, plain(VerdictKind::Ambiguous, reasons, true, cells)));
    }
    reasons.push("CY degenerate everywhere: testing the two eigenflag line fields".into());
    let dirs = match eigenflag_directions(m, &samples, &records, &opts.tol) {
        Ok(d) => d,
        Err(DecideError::Form(e)) => {
            reasons.push(e);
            return Ok(base_verdict(3, records, plain(VerdictKind::Ambiguous, reasons, true, Vec::new())));
        }
        Err(e) => return Err(e),
    };
    let candidates = direction_candidates(m, &samples, opts, &dirs)?;
    for c in &candidates {
        if let Some(f) = &c.factor {
            reasons.push(factor_reason(&c.label, f));
        }
    }
    let summary = summarize(&candidates, Vec::new(), reasons, point_amb);
    Ok(Verdict {
        dim: 3,
        per_point: records,
        directions: dirs,
        planes: Vec::new(),
        plane_factors: Vec::new(),
        candidates,
        sweeps: Vec::new(),
        product: None,
        summary,
    })
}

/// Four-dimensional procedure driven by the Weyl type.
pub fn decide_lcw_4d(m: &MetricSpec, region: &RegionSpec, opts: &Options) -> Result<Verdict, DecideError> {
    if m.dim != 4 {
        return Err(DecideError::Dimension(m.dim));
    }
    let samples = region.samples();
    let records = classify_region(m, &samples, opts)?;
    let kinds: Vec<WeylType> = records
        .iter()
        .map(|r| match &r.class {
            PointClass::Weyl(w) => w.kind,
            PointClass::CottonYork(_) => unreachable!("4D records carry Weyl classes"),
        })
        .collect();
    let labels: Vec<String> = records.iter().map(|r| r.class.label()).collect();
    let point_amb = records.iter().any(|r| r.class.ambiguous());
    let mut reasons = vec![format!("Weyl types over {} samples: {}", samples.len(), counts(&labels))];
    if point_amb {
        reasons.push("some samples classify with margins within a factor 10 of threshold".into());
    }

    if records
        .iter()
        .zip(&kinds)
        .any(|(r, k)| *k == WeylType::A && !r.class.ambiguous())
    {
        reasons.push("W of type A at a sample: there are no local LCWs there".into());
        return Ok(base_verdict(4, records, plain(VerdictKind::NoLcw, reasons, false, Vec::new())));
    }
    let first = kinds[0];
    if !kinds.iter().all(|k| *k == first) {
        reasons.push("the Weyl type changes over the region".into());
        let cells = partition(&samples, &labels);
        return Ok(base_verdict(4, records, plain(VerdictKind::Ambiguous, reasons, true, cells)));
    }
    match first {
        WeylType::D => {
            reasons.push("W = 0 on the region: conformally flat, LCWs as in flat space".into());
            Ok(base_verdict(4, records, plain(VerdictKind::ConformallyFlat, reasons, point_amb, Vec::new())))
        }
        WeylType::A => {
            reasons.push("type A only within the ambiguity band".into());
            Ok(base_verdict(4, records, plain(VerdictKind::Ambiguous, reasons, true, Vec::new())))
        }
        WeylType::B => {
            reasons.push("type B everywhere: testing the four eigenflag line fields".into());
            let dirs = match eigenflag_directions(m, &samples, &records, &opts.tol) {
                Ok(d) => d,
                Err(DecideError::Form(e)) => {
                    reasons.push(e);
                    return Ok(base_verdict(4, records, plain(VerdictKind::Ambiguous, reasons, true, Vec::new())));
                }
                Err(e) => return Err(e),
            };
            let candidates = direction_candidates(m, &samples, opts, &dirs)?;
            for c in &candidates {
                if let Some(f) = &c.factor {
                    reasons.push(factor_reason(&c.label, f));
                }
            }
            let summary = summarize(&candidates, Vec::new(), reasons, point_amb);
            Ok(Verdict {
                dim: 4,
                per_point: records,
                directions: dirs,
                planes: Vec::new(),
                plane_factors: Vec::new(),
                candidates,
                sweeps: Vec::new(),
                product: None,
                summary,
            })
        }
        WeylType::C => decide_type_c(m, region, &samples, records, reasons, point_amb, opts),
    }
}

fn decide_type_c(
    m: &MetricSpec,
    region: &RegionSpec,
    samples: &SampleSet,
    records: Vec<PointRecord>,
    mut reasons: Vec<String>,
    mut ambiguous: bool,
    opts: &Options,
) -> Result<Verdict, DecideError> {
    let n = m.dim;
    reasons.push("type C everywhere: testing the two eigenflag planes".into());
    let planes = eigenflag_planes(m, samples, &records, &opts.tol)?;
    let mut factors: Vec<Option<FactorVerdict>> = Vec::new();
    for p in &planes {
        match p.form.distribution(n) {
            Some(d) => {
                let f = conformal_factor_decision(&d, m, samples, &opts.tol, opts.exec)?;
                reasons.push(factor_reason(&format!("plane {}", p.label), &f));
                ambiguous |= f.ambiguous || f.inconsistent;
                factors.push(Some(f));
            }
            None => {
                reasons.push("an eigenflag plane has no closed form; plane tests not run".into());
                ambiguous = true;
                factors.push(None);
            }
        }
    }

    let both = factors.len() == 2 && factors.iter().all(|f| f.as_ref().is_some_and(|f| f.is_factor));
    let mut product = None;
    let mut extra = Vec::new();
    if both {
        let report = match (planes[0].form, planes[1].form) {
            (PlaneForm::Coordinates(a), PlaneForm::Coordinates(b)) => product_reduction(m, a, b, region, opts)?,
            _ => ProductReport {
                planes: [planes[0].label.clone(), planes[1].label.clone()],
                alpha_path: Margin::zero(),
                inconsistent: false,
                factors: Vec::new(),
                outcome: ProductOutcome::NotApplicable("factor planes are not coordinate planes".into()),
            },
        };
        match &report.outcome {
            ProductOutcome::LcwAlongFactors(ks) => {
                for &k in ks {
                    let leaf = &report.factors[k];
                    let plane = match planes[k].form {
                        PlaneForm::Coordinates(ij) => ij,
                        _ => unreachable!("product branch runs on coordinate planes"),
                    };
                    match (leaf.detection.kind, leaf.detection.coordinate) {
                        (KillingKind::Found, Some(c)) => extra.push(format!("d{}", m.var_names[plane[c]])),
                        (KillingKind::Found, None) => extra.push(format!("Killing field of factor {}", leaf.plane)),
                        _ => extra.push(format!("Killing field of constant-curvature factor {}", leaf.plane)),
                    }
                }
                reasons.push("conformal to a product of surfaces; a factor carries a Killing field".into());
            }
            ProductOutcome::NoLcw => {
                reasons.push("conformal to a product of surfaces; neither factor has a Killing field: no LCW".into())
            }
            ProductOutcome::Unresolved => {
                reasons.push("product branch: Killing detection unresolved on part of a factor".into());
                ambiguous = true;
            }
            ProductOutcome::NotApplicable(why) => reasons.push(format!("product branch not applicable: {why}")),
        }
        if report.inconsistent {
            reasons.push("recovered conformal exponent is path dependent".into());
            ambiguous = true;
        }
        product = Some(report);
    } else {
        reasons.push("not conformal to a product of surfaces; product branch not taken".into());
    }

    let mut sweeps = Vec::new();
    let mut candidates = Vec::new();
    for p in &planes {
        let Some(d) = p.form.distribution(n) else { continue };
        let sweep = direction_sweep(&d, m, samples, opts)?;
        reasons.push(format!(
            "sweep of {}: {} surviving angle(s) {:?}",
            p.label,
            sweep.survivors.len(),
            sweep.survivors.iter().map(|s| s.theta).collect::<Vec<_>>()
        ));
        if sweep.degenerate {
            reasons.push(format!("sweep of {} cannot discriminate: every angle survives", p.label));
            ambiguous = true;
        }
        for s in &sweep.survivors {
            candidates.push(survivor_candidate(m, samples, opts, &d, p, s)?);
        }
        sweeps.push(sweep);
    }
    for c in &candidates {
        if let Some(f) = &c.factor {
            reasons.push(factor_reason(&c.label, f));
        }
    }
    if let Some(pr) = &product {
        if pr.outcome == ProductOutcome::NoLcw && candidates.iter().any(|c| c.accepted) {
            reasons.push("sweep and product branch disagree".into());
            ambiguous = true;
        }
    }
    let summary = summarize(&candidates, extra, reasons, ambiguous);
    Ok(Verdict {
        dim: 4,
        per_point: records,
        directions: Vec::new(),
        planes,
        plane_factors: factors,
        candidates,
        sweeps,
        product,
        summary,
    })
}

fn survivor_candidate(
    m: &MetricSpec,
    samples: &SampleSet,
    opts: &Options,
    plane: &DistributionSpec,
    tracked: &TrackedPlane,
    s: &Survivor,
) -> Result<Candidate, DecideError> {
    let metrics = metrics_at(m, samples)?;
    let (snap, _) = snap_direction(&s.directions, &metrics, opts.tol.angle);
    let source = format!("sweep of {} at theta = {:.6}", tracked.label, s.theta);
    if snap != Snap::Unresolved {
        return evaluate_candidate(m, samples, opts, snap.distribution(m.dim), snap.label(&m.var_names), source, snap);
    }
    match plane_direction_field(m, plane, s.theta) {
        Some(f) => {
            let label = f.to_text(&m.var_names);
            evaluate_candidate(m, samples, opts, Some(DistributionSpec::tangent(vec![f])), label, source, snap)
        }
        None => evaluate_candidate(m, samples, opts, None, format!("theta = {:.6} in {}", s.theta, tracked.label), source, snap),
    }
}

fn g_expr(m: &MetricSpec, u: &[Expr], v: &[Expr]) -> Expr {
    let n = m.dim;
    let mut acc = Expr::Const(0.0);
    for i in 0..n {
        for j in 0..n {
            acc = expr::add(acc, expr::mul(m.entries[i][j].clone(), expr::mul(u[i].clone(), v[j].clone())));
        }
    }
    acc
}

fn normalize_expr(m: &MetricSpec, u: &[Expr]) -> Vec<Expr> {
    let len = expr::func(Func::Sqrt, g_expr(m, u, u));
    u.iter().map(|c| expr::div(c.clone(), len.clone())).collect()
}

/// `cos θ Ê₁ + sin θ Ê₂` as an expression, `Ê` the Gram–Schmidt frame of the
/// plane's spanning fields; only for planes given by their spanning fields.
pub fn plane_direction_field(m: &MetricSpec, plane: &DistributionSpec, theta: f64) -> Option<VectorFieldSpec> {
    if plane.side != Side::Tangent || plane.fields.len() != 2 {
        return None;
    }
    let e1 = normalize_expr(m, &plane.fields[0].components);
    let u2 = &plane.fields[1].components;
    let c = g_expr(m, u2, &e1);
    let w: Vec<Expr> = u2
        .iter()
        .zip(&e1)
        .map(|(a, b)| expr::sub(a.clone(), expr::mul(c.clone(), b.clone())))
        .collect();
    let e2 = normalize_expr(m, &w);
    let (co, si) = (theta.cos(), theta.sin());
    Some(VectorFieldSpec::new(
        e1.iter()
            .zip(&e2)
            .map(|(a, b)| expr::add(expr::mul(expr::real(co), a.clone()), expr::mul(expr::real(si), b.clone())))
            .collect(),
    ))
}

/// Per-sample covariant derivatives `B_i(X, Y) = g(∇_X Ê_i, Y)` of the
/// plane frame, in the adapted frame `(Ê₁, Ê₂, F₃, F₄)`.
struct SweepPoint {
    b: [Mat; 2],
    frame: [Vec<f64>; 2],
}

fn sweep_point(m: &MetricSpec, plane: &DistributionSpec, p: &[f64]) -> Result<SweepPoint, DecideError> {
    let s = LocalSplit::new(m, plane, p, SPLIT_ORDER)?;
    if s.d != 2 {
        return Err(DecideError::Form(format!("sweep needs a 2-plane, got rank {}", s.d)));
    }
    let frame: Vec<&Vec<Jet>> = s.e.iter().chain(&s.nf).collect();
    let k = frame.len();
    let mut b = [linalg::zeros(k, k), linalg::zeros(k, k)];
    for (i, bi) in b.iter_mut().enumerate() {
        for a in 0..k {
            let nab = s.covariant(frame[a], &s.e[i]);
            for c in 0..k {
                bi[a][c] = s.dot(&nab, frame[c]).value();
            }
        }
    }
    let vals = |v: &[Jet]| v.iter().map(Jet::value).collect::<Vec<_>>();
    Ok(SweepPoint {
        b,
        frame: [vals(&s.e[0]), vals(&s.e[1])],
    })
}

/// Umbilicity defect of `Z(θ)^⊥` at one sample, relative to `1 + ‖II‖`.
fn sweep_defect(sp: &SweepPoint, theta: f64) -> f64 {
    let (c, s) = (theta.cos(), theta.sin());
    let k = sp.b[0].len();
    let mut xs: Vec<Vec<f64>> = vec![{
        let mut w = vec![0.0; k];
        w[0] = -s;
        w[1] = c;
        w
    }];
    for j in 2..k {
        xs.push(basis(k, j));
    }
    let q = xs.len();
    let mut ii = linalg::zeros(q, q);
    for p in 0..q {
        for r in 0..q {
            let mut v = 0.0;
            for a in 0..k {
                for b in 0..k {
                    v -= xs[p][a] * xs[r][b] * (c * sp.b[0][a][b] + s * sp.b[1][a][b]);
                }
            }
            ii[p][r] = v;
        }
    }
    let h = (0..q).map(|p| ii[p][p]).sum::<f64>() / q as f64;
    let (mut asym, mut aniso) = (0.0, 0.0);
    for p in 0..q {
        for r in 0..q {
            let a = 0.5 * (ii[p][r] - ii[r][p]);
            let sy = 0.5 * (ii[p][r] + ii[r][p]) - if p == r { h } else { 0.0 };
            asym += a * a;
            aniso += sy * sy;
        }
    }
    (asym.sqrt() + aniso.sqrt()) / (1.0 + linalg::frobenius(&ii))
}

fn sweep_objective(points: &[SweepPoint], theta: f64) -> f64 {
    points.iter().map(|sp| sweep_defect(sp, theta)).fold(0.0, f64::max)
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if PI - t < 1e-12 {
        0.0
    } else {
        t
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Lines `Z(θ) = cos θ Ê₁ + sin θ Ê₂` in a 2-plane whose orthogonal
/// complement is umbilic over the samples.
pub fn direction_sweep(
    plane: &DistributionSpec,
    m: &MetricSpec,
    samples: &SampleSet,
    opts: &Options,
) -> Result<SweepReport, DecideError> {
    let pts = opts
        .exec
        .map(&samples.points, |p| sweep_point(m, plane, p))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let tol = opts.tol.check;
    let na = opts.n_angles.max(3);
    let step = PI / na as f64;
    let grid: Vec<f64> = (0..na).map(|k| k as f64 * step).collect();
    let vals: Vec<f64> = opts.exec.map(&grid, |&t| sweep_objective(&pts, t));
    let f = |t: f64| sweep_objective(&pts, t);
    let mut found: Vec<(f64, f64)> = Vec::new();
    for k in 0..na {
        let (l, r) = (vals[(k + na - 1) % na], vals[(k + 1) % na]);
        if vals[k] > l || vals[k] > r {
            continue;
        }
        let (t, v) = if vals[k] == 0.0 {
            (grid[k], 0.0)
        } else {
            golden(&f, grid[k] - step, grid[k] + step)
        };
        let (t, v) = if v <= vals[k] { (wrap(t), v) } else { (grid[k], vals[k]) };
        if v <= tol && !found.iter().any(|(s, _)| angle_gap(*s, t) < 1e-6) {
            found.push((t, v));
        }
    }
    let degenerate = vals.iter().all(|v| *v <= tol);
    let mut survivors: Vec<Survivor> = found
        .into_iter()
        .map(|(t, v)| {
            let q = (t / (0.5 * PI)).round() * 0.5 * PI;
            let (theta, value, snapped) = if angle_gap(q, t) <= 1e-6 && f(q) <= tol {
                (wrap(q), f(q), true)
            } else {
                (t, v, false)
            };
            Survivor {
                theta,
                objective: Margin::new(value, tol),
                snapped,
                directions: pts
                    .iter()
                    .map(|sp| {
                        sp.frame[0]
                            .iter()
                            .zip(&sp.frame[1])
                            .map(|(a, b)| theta.cos() * a + theta.sin() * b)
                            .collect()
                    })
                    .collect(),
            }
        })
        .collect();
    survivors.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    survivors.dedup_by(|a, b| angle_gap(a.theta, b.theta) < 1e-6);
    Ok(SweepReport {
        plane: plane.describe(&m.var_names),
        n_angles: na,
        survivors,
        degenerate,
        min_objective: vals.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `∫ Φ` along the straight segment `a → b`.
fn segment_integral(dist: &DistributionSpec, m: &MetricSpec, a: &[f64], b: &[f64]) -> Result<f64, DecideError> {
    let mut acc = 0.0;
    for (xi, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
        let s = 0.5 * (1.0 + xi);
        let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect();
        let phi = phi_form(dist, m, &p)?.values;
        let tangent: f64 = phi.iter().zip(a.iter().zip(b)).map(|(f, (x, y))| f * (y - x)).sum();
        acc += 0.5 * w * tangent;
    }
    Ok(acc)
}

/// Leaf metric `G₁ / √det G₂` on the leaf of `plane` through `base`.
pub fn leaf_metric(m: &MetricSpec, plane: [usize; 2], other: [usize; 2], base: &[f64]) -> MetricSpec {
    let mut subs: Vec<Option<Expr>> = vec![None; m.dim];
    subs[plane[0]] = Some(Expr::Var(0));
    subs[plane[1]] = Some(Expr::Var(1));
    for &o in &other {
        subs[o] = Some(expr::real(base[o]));
    }
    let e = |i: usize, j: usize| m.entries[i][j].substitute(&subs);
    let det = expr::sub(
        expr::mul(e(other[0], other[0]), e(other[1], other[1])),
        expr::pow(e(other[0], other[1]), 2),
    );
    let scale = expr::func(Func::Sqrt, det);
    let entries: Vec<Vec<Expr>> = plane
        .iter()
        .map(|&i| plane.iter().map(|&j| expr::div(e(i, j), scale.clone())).collect())
        .collect();
    let names = [m.var_names[plane[0]].as_str(), m.var_names[plane[1]].as_str()];
    let mut leaf = MetricSpec::new(entries).with_names(&names);
    leaf.domain = m
        .domain
        .iter()
        .filter_map(|c| {
            plane
                .iter()
                .position(|&v| v == c.var)
                .map(|k| DomainConstraint { var: k, op: c.op, bound: c.bound })
        })
        .collect();
    leaf
}

/// Product-of-surfaces branch for two complementary coordinate planes that
/// are conformal factors.
pub fn product_reduction(
    m: &MetricSpec,
    d1: [usize; 2],
    d2: [usize; 2],
    region: &RegionSpec,
    opts: &Options,
) -> Result<ProductReport, DecideError> {
    let names = &m.var_names;
    let plane_label = |p: [usize; 2]| format!("<d{}, d{}>", names[p[0]], names[p[1]]);
    let labels = [plane_label(d1), plane_label(d2)];
    if !m.is_block_diagonal(&d1, &d2) {
        return Ok(ProductReport {
            planes: labels,
            alpha_path: Margin::zero(),
            inconsistent: false,
            factors: Vec::new(),
            outcome: ProductOutcome::NotApplicable("metric is not block diagonal in the factor planes".into()),
        });
    }
    let samples = region.samples();
    let dist = DistributionSpec::coordinates(m.dim, &d1);
    let edges = samples.grid_edges();
    let integrals: Vec<f64> = opts
        .exec
        .map(&edges, |&(a, b)| segment_integral(&dist, m, &samples.points[a], &samples.points[b]))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let mut alpha = vec![0.0; samples.n_grid];
    let edge_value = |a: usize, b: usize| -> f64 {
        let (lo, hi) = (a.min(b), a.max(b));
        let k = edges.iter().position(|&e| e == (lo, hi)).expect("tree edges are grid edges");
        if a < b {
            integrals[k]
        } else {
            -integrals[k]
        }
    };
    for (u, parent) in samples.spanning_order() {
        if u >= samples.n_grid {
            continue;
        }
        if let Some(p) = parent {
            alpha[u] = alpha[p] + edge_value(p, u);
        }
    }
    let scale = alpha.iter().fold(0.0f64, |s, a| s.max(a.abs()));
    let defect = edges
        .iter()
        .zip(&integrals)
        .map(|(&(a, b), i)| (alpha[b] - alpha[a] - i).abs())
        .fold(0.0, f64::max);
    let alpha_path = Margin::new(defect, opts.tol.check * (1.0 + scale));

    let base = &samples.points[samples.base];
    let mut factors = Vec::new();
    for (k, (plane, other)) in [(d1, d2), (d2, d1)].into_iter().enumerate() {
        let leaf = leaf_metric(m, plane, other, base);
        let leaf_region = RegionSpec {
            intervals: vec![region.intervals[plane[0]], region.intervals[plane[1]]],
            ..region.clone()
        };
        let detection = killing_detect_surface(&leaf, &leaf_region.samples(), &opts.tol, opts.exec)?;
        factors.push(LeafReport {
            plane: labels[k].clone(),
            metric: leaf.to_text(),
            detection,
        });
    }
    let with_killing: Vec<usize> = (0..2)
        .filter(|&k| matches!(factors[k].detection.kind, KillingKind::Found | KillingKind::Inapplicable))
        .collect();
    let outcome = if !with_killing.is_empty() {
        ProductOutcome::LcwAlongFactors(with_killing)
    } else if factors.iter().any(|f| f.detection.kind == KillingKind::Mixed || f.detection.ambiguous) {
        ProductOutcome::Unresolved
    } else {
        ProductOutcome::NoLcw
    };
    Ok(ProductReport {
        planes: labels,
        alpha_path,
        inconsistent: !alpha_path.pass(),
        factors,
        outcome,
    })
}

/// Closed-form `W(∂̂t, ∂̂x, ∂̂x, ∂̂t)` for `diag(f, f, h, h)` with `f = f(t, x)`,
/// `h = h(y, z)`.
pub fn product_surface_lambda(f: &Expr, h: &Expr, p: &[f64]) -> Result<f64, DecideError> {
    if p.len() != 4 || f.depends_on(2) || f.depends_on(3) || h.depends_on(0) || h.depends_on(1) {
        return Err(DecideError::Form("need f = f(t, x) and h = h(y, z) in four variables".into()));
    }
    let fj = f.eval_jet(p, 2)?;
    let hj = h.eval_jet(p, 2)?;
    let part = |j: &Jet, a: usize, b: usize| {
        let d = |i: usize, k: usize| {
            let mut mi = [0usize; 4];
            mi[i] += 1;
            if k < 4 {
                mi[k] += 1;
            }
            j.derivative(&mi)
        };
        let v = j.value();
        (d(a, 4).powi(2) + d(b, 4).powi(2) - v * d(a, a) - v * d(b, b)) / (6.0 * v.powi(3))
    };
    Ok(part(&hj, 2, 3) + part(&fj, 0, 1))
}

/// The metric `e^α g` with its exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalRescale {
    pub alpha: Expr,
    pub metric: MetricSpec,
}

pub fn conformal_rescale(m: &MetricSpec, alpha: &Expr) -> ConformalRescale {
    ConformalRescale {
        alpha: alpha.clone(),
        metric: m.conformal_rescale(alpha),
    }
}

impl ConformalRescale {
    /// Largest relative deviation of `g̃_ij / g_ij` from `e^α` over the samples.
    pub fn entry_defect(&self, original: &MetricSpec, samples: &SampleSet) -> Result<f64, DecideError> {
        let mut worst: f64 = 0.0;
        for p in &samples.points {
            let a = self.alpha.eval(p)?.exp();
            let (g, gt) = (original.eval(p)?, self.metric.eval(p)?);
            for (r, rt) in g.iter().zip(&gt) {
                for (x, y) in r.iter().zip(rt) {
                    worst = worst.max((y - a * x).abs() / (a * x).abs().max(f64::MIN_POSITIVE));
                }
            }
        }
        Ok(worst)
    }
}

/// 3D or 4D procedure by dimension.
pub fn decide(m: &MetricSpec, region: &RegionSpec, opts: &Options) -> Result<Verdict, DecideError> {
    match m.dim {
        3 => decide_lcw_3d(m, region, opts),
        4 => decide_lcw_4d(m, region, opts),
        n => Err(DecideError::Dimension(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_metric;

    fn warped_b() -> MetricSpec {
        parse_metric("dim = 4\ng tt = 1\ng xx = 1\ng yy = x\ng zz = x^2\ndomain x > 0\n").unwrap()
    }

    fn warped_c() -> MetricSpec {
        parse_metric("dim = 4\ng tt = 1\ng xx = 1\ng yy = x^3\ng zz = 1/x\ndomain x > 0\n").unwrap()
    }

    fn small(m: &MetricSpec) -> RegionSpec {
        RegionSpec::default_for(m).with_grid(3, 6)
    }

    #[test]
    fn warped_b_decision() {
        let m = warped_b();
        let v = decide(&m, &small(&m), &Options::default()).unwrap();
        assert_eq!(v.headline(), "LCW directions: dt, dy, dz", "{:#?}", v.summary);
        assert!(v.is_decided());
        let x = v.candidates.iter().find(|c| c.label == "dx").unwrap();
        assert!(!x.accepted);
    }

    #[test]
    fn warped_c_decision() {
        let m = warped_c();
        let v = decide(&m, &small(&m), &Options::default()).unwrap();
        assert_eq!(v.headline(), "LCW directions: dt, dy, dz", "{:#?}", v.summary);
        assert!(v.is_decided());
        assert!(v.product.is_none());
    }

    #[test]
    fn warped_c_sweeps() {
        let m = warped_c();
        let s = small(&m).samples();
        let o = Options::default();
        let yz = direction_sweep(&DistributionSpec::coordinates(4, &[2, 3]), &m, &s, &o).unwrap();
        let th: Vec<f64> = yz.survivors.iter().map(|s| s.theta).collect();
        assert_eq!(th, vec![0.0, 0.5 * PI]);
        let tx = direction_sweep(&DistributionSpec::coordinates(4, &[0, 1]), &m, &s, &o).unwrap();
        let th: Vec<f64> = tx.survivors.iter().map(|s| s.theta).collect();
        assert_eq!(th, vec![0.0]);
    }

    #[test]
    fn flat_and_three_dimensional() {
        let o = Options::default();
        let flat = parse_metric("dim = 3\ng tt = 1\ng xx = 1\ng yy = 1\n").unwrap();
        let v = decide(&flat, &small(&flat), &o).unwrap();
        assert_eq!(v.summary.verdict, VerdictKind::ConformallyFlat);
        let rev = parse_metric("dim = 3\ng tt = 1\ng xx = 1\ng yy = x^4\ndomain x > 0\n").unwrap();
        let v = decide(&rev, &small(&rev), &o).unwrap();
        assert_eq!(v.summary.verdict, VerdictKind::LcwExists, "{:#?}", v.summary);
        assert!(v.summary.directions.contains(&"dt".to_string()));
        let gen = parse_metric("dim = 3\ng tt = 1\ng xx = 1\ng yy = 1 + t^2 + 2*x^2 + 3*y^2\n").unwrap();
        let v = decide(&gen, &small(&gen), &o).unwrap();
        assert_eq!(v.summary.verdict, VerdictKind::NoLcw, "{:#?}", v.summary);
    }

    #[test]
    fn lambda_of_spheres() {
        let f = crate::dsl::parse_expr("4/(1 + t^2 + x^2)^2", &["t", "x", "y", "z"].map(String::from)).unwrap();
        let h = crate::dsl::parse_expr("4/(1 + y^2 + z^2)^2", &["t", "x", "y", "z"].map(String::from)).unwrap();
        let l = product_surface_lambda(&f, &h, &[0.3, -0.2, 0.5, 0.1]).unwrap();
        assert!((l - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn permutations_complete() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }
}
