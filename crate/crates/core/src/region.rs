//! Rectangular sample regions: a tensor grid plus seeded quasi-random interior points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dsl::{DomainOp, MetricSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("bad region spec '{0}': expected var:lo:hi[,var:lo:hi...]")]
    Syntax(String),
    #[error("unknown variable '{0}' in region")]
    UnknownVar(String),
    #[error("empty interval for '{0}'")]
    Empty(String),
    #[error("interval for '{var}' leaves the declared domain")]
    OutsideDomain { var: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSpec {
    pub intervals: Vec<(f64, f64)>,
    pub per_axis: usize,
    pub extra: usize,
    pub seed: u64,
}

pub const DEFAULT_PER_AXIS: usize = 5;
pub const DEFAULT_EXTRA: usize = 50;
pub const DEFAULT_SEED: u64 = 0x5EED;

impl RegionSpec {
    pub fn new(intervals: Vec<(f64, f64)>) -> RegionSpec {
        RegionSpec {
            intervals,
            per_axis: DEFAULT_PER_AXIS,
            extra: DEFAULT_EXTRA,
            seed: DEFAULT_SEED,
        }
    }

    pub fn with_grid(mut self, per_axis: usize, extra: usize) -> RegionSpec {
        self.per_axis = per_axis;
        self.extra = extra;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> RegionSpec {
        self.seed = seed;
        self
    }

    /// Unit box per variable, shifted one unit past any declared half-line bound.
    pub fn default_for(m: &MetricSpec) -> RegionSpec {
        let intervals = (0..m.dim)
            .map(|i| {
                let mut iv = (0.0, 1.0);
                for c in m.domain.iter().filter(|c| c.var == i) {
                    iv = match c.op {
                        DomainOp::Greater => (c.bound + 1.0, c.bound + 2.0),
                        DomainOp::Less => (c.bound - 2.0, c.bound - 1.0),
                    };
                }
                iv
            })
            .collect();
        RegionSpec::new(intervals)
    }

    /// Parses `"x:1:3,y:0:0.5"`; unnamed variables keep the metric's default interval.
    pub fn parse(text: &str, m: &MetricSpec) -> Result<RegionSpec, RegionError> {
        let mut r = RegionSpec::default_for(m);
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let f: Vec<&str> = part.split(':').map(str::trim).collect();
            if f.len() != 3 {
                return Err(RegionError::Syntax(text.into()));
            }
            let i = m
                .var_names
                .iter()
                .position(|v| v == f[0])
                .ok_or_else(|| RegionError::UnknownVar(f[0].into()))?;
            let lo: f64 = f[1].parse().map_err(|_| RegionError::Syntax(text.into()))?;
            let hi: f64 = f[2].parse().map_err(|_| RegionError::Syntax(text.into()))?;
            if !(lo <= hi) {
                return Err(RegionError::Empty(f[0].into()));
            }
            r.intervals[i] = (lo, hi);
        }
        for c in &m.domain {
            let (lo, hi) = r.intervals[c.var];
            if !(c.admits(lo) && c.admits(hi)) {
                return Err(RegionError::OutsideDomain { var: m.var_names[c.var].clone() });
            }
        }
        Ok(r)
    }

    pub fn samples(&self) -> SampleSet {
        SampleSet::build(self)
    }
}

/// Sample points: grid points first (lexicographic, last axis fastest), then extras.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub grid_dims: Vec<usize>,
    pub n_grid: usize,
    /// Index of the grid point nearest the center.
    pub base: usize,
}

const HALTON_BASES: [u64; 4] = [2, 3, 5, 7];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

impl SampleSet {
    fn build(spec: &RegionSpec) -> SampleSet {
        let dims: Vec<usize> = spec
            .intervals
            .iter()
            .map(|&(lo, hi)| if lo == hi { 1 } else { spec.per_axis.max(1) })
            .collect();
        let n_grid: usize = dims.iter().product();
        let mut points = Vec::with_capacity(n_grid + spec.extra);
        for flat in 0..n_grid {
            let idx = Self::unflatten(&dims, flat);
            points.push(
                idx.iter()
                    .zip(&spec.intervals)
                    .zip(&dims)
                    .map(|((&k, &(lo, hi)), &d)| {
                        if d == 1 {
                            0.5 * (lo + hi)
                        } else {
                            lo + (hi - lo) * k as f64 / (d - 1) as f64
                        }
                    })
                    .collect(),
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let shift: Vec<f64> = (0..spec.intervals.len()).map(|_| rng.gen::<f64>()).collect();
        for k in 0..spec.extra {
            points.push(
                spec.intervals
                    .iter()
                    .enumerate()
                    .map(|(a, &(lo, hi))| {
                        let u = (radical_inverse(k as u64 + 1, HALTON_BASES[a]) + shift[a]).fract();
                        // keep strictly inside
                        let u = 0.02 + 0.96 * u;
                        lo + (hi - lo) * u
                    })
                    .collect(),
            );
        }
        let center: Vec<usize> = dims.iter().map(|d| (d - 1) / 2).collect();
        let base = Self::flatten(&dims, &center);
        SampleSet {
            points,
            grid_dims: dims,
            n_grid,
            base,
        }
    }

    fn unflatten(dims: &[usize], mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; dims.len()];
        for a in (0..dims.len()).rev() {
            idx[a] = flat % dims[a];
            flat /= dims[a];
        }
        idx
    }

    fn flatten(dims: &[usize], idx: &[usize]) -> usize {
        idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn grid_index(&self, flat: usize) -> Vec<usize> {
        Self::unflatten(&self.grid_dims, flat)
    }

    /// Grid neighbours of a grid point (±1 along each axis).
    pub fn grid_neighbors(&self, flat: usize) -> Vec<usize> {
        let idx = self.grid_index(flat);
        let mut out = Vec::new();
        for a in 0..idx.len() {
            for delta in [-1i64, 1] {
                let k = idx[a] as i64 + delta;
                if k >= 0 && (k as usize) < self.grid_dims[a] {
                    let mut j = idx.clone();
                    j[a] = k as usize;
                    out.push(Self::flatten(&self.grid_dims, &j));
                }
            }
        }
        out
    }

    /// Nearest grid point (Euclidean in coordinates) for an extra sample.
    pub fn nearest_grid(&self, k: usize) -> usize {
        let p = &self.points[k];
        (0..self.n_grid)
            .min_by(|&a, &b| {
                let da: f64 = self.points[a].iter().zip(p).map(|(x, y)| (x - y).powi(2)).sum();
                let db: f64 = self.points[b].iter().zip(p).map(|(x, y)| (x - y).powi(2)).sum();
                da.total_cmp(&db)
            })
            .expect("grid is nonempty")
    }

    /// Breadth-first traversal order from the base point with the parent of each
    /// visited node; extras follow, parented to their nearest grid point.
    pub fn spanning_order(&self) -> Vec<(usize, Option<usize>)> {
        let mut seen = vec![false; self.n_grid];
        let mut order = vec![(self.base, None)];
        seen[self.base] = true;
        let mut head = 0;
        while head < order.len() {
            let (u, _) = order[head];
            head += 1;
            for v in self.grid_neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    order.push((v, Some(u)));
                }
            }
        }
        for k in self.n_grid..self.points.len() {
            order.push((k, Some(self.nearest_grid(k))));
        }
        order
    }

    /// Every grid edge once, `(a, b)` with `a < b`.
    pub fn grid_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_grid)
            .flat_map(|a| self.grid_neighbors(a).into_iter().filter(move |&b| b > a).map(move |b| (a, b)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_metric;

    #[test]
    fn default_region_avoids_domain() {
        let m = parse_metric("dim = 4\ng tt = 1\ng xx = 1\ng yy = x\ng zz = x^2\ndomain x > 0\n").unwrap();
        let r = RegionSpec::default_for(&m);
        assert_eq!(r.intervals[1], (1.0, 2.0));
        assert_eq!(r.intervals[0], (0.0, 1.0));
        assert!(RegionSpec::parse("x:-1:1", &m).is_err());
        let r = RegionSpec::parse("x:1:3", &m).unwrap();
        assert_eq!(r.intervals[1], (1.0, 3.0));
    }

    #[test]
    fn grid_and_extras() {
        let r = RegionSpec::new(vec![(0.0, 1.0), (1.0, 2.0), (0.0, 0.0)]).with_grid(3, 7);
        let s = r.samples();
        assert_eq!(s.grid_dims, vec![3, 3, 1]);
        assert_eq!(s.n_grid, 9);
        assert_eq!(s.len(), 16);
        assert_eq!(s.points[s.base], vec![0.5, 1.5, 0.0]);
        for p in &s.points[9..] {
            assert!(p[0] > 0.0 && p[0] < 1.0 && p[1] > 1.0 && p[1] < 2.0);
        }
        assert_eq!(s, r.samples());
        let order = s.spanning_order();
        assert_eq!(order.len(), 16);
        assert_eq!(s.grid_edges().len(), 12);
    }
}
