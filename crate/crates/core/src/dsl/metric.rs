use serde::Serialize;

use super::expr::{self, Expr, Func};
use super::parser::{self, DomainOp, ParseError};
use crate::jet::{Jet, JetError};
use crate::linalg;

/// A metric in closed form on a chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSpec {
    pub dim: usize,
    pub var_names: Vec<String>,
    /// Full symmetric matrix, row-major; `entries[i][j]` and `entries[j][i]` are the same tree.
    pub entries: Vec<Vec<Expr>>,
    /// Declared open half-lines `x > c` / `x < c` avoiding singular loci.
    pub domain: Vec<DomainConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainConstraint {
    pub var: usize,
    pub op: DomainOp,
    pub bound: f64,
}

impl DomainConstraint {
    pub fn admits(&self, v: f64) -> bool {
        match self.op {
            DomainOp::Greater => v > self.bound,
            DomainOp::Less => v < self.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorFieldSpec {
    pub components: Vec<Expr>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MetricError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("metric is not positive definite at {point:?}")]
    NotPositive { point: Vec<f64> },
    #[error("point has {got} coordinates, metric dimension is {dim}")]
    PointDim { got: usize, dim: usize },
}

/// Parses a metric file.
pub fn parse_metric(text: &str) -> Result<MetricSpec, ParseError> {
    let f = parser::parse_metric_file(text)?;
    Ok(MetricSpec {
        dim: f.dim,
        var_names: f.vars,
        entries: f.entries,
        domain: f
            .domain
            .into_iter()
            .map(|(var, op, bound)| DomainConstraint { var, op, bound })
            .collect(),
    })
}

impl MetricSpec {
    /// Builds a metric from a full symmetric matrix; dimension 2 to 4 with default names.
    pub fn new(entries: Vec<Vec<Expr>>) -> MetricSpec {
        let dim = entries.len();
        assert!((2..=4).contains(&dim), "metric dimension must be 2, 3 or 4");
        assert!(entries.iter().all(|r| r.len() == dim), "metric matrix must be square");
        MetricSpec {
            dim,
            var_names: parser::default_vars(dim),
            entries,
            domain: Vec::new(),
        }
    }

    pub fn diagonal(diag: Vec<Expr>) -> MetricSpec {
        let n = diag.len();
        let mut entries = vec![vec![Expr::Const(0.0); n]; n];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i][i] = d;
        }
        Self::new(entries)
    }

    pub fn with_names(mut self, names: &[&str]) -> MetricSpec {
        assert_eq!(names.len(), self.dim);
        self.var_names = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i][j]
    }

    pub fn parse_expr(&self, text: &str) -> Result<Expr, ParseError> {
        parser::parse_expr(text, &self.var_names)
    }

    pub fn parse_field(&self, text: &str) -> Result<VectorFieldSpec, ParseError> {
        Ok(VectorFieldSpec {
            components: parser::parse_vector_field(text, &self.var_names)?,
        })
    }

    /// Coordinate vector field ∂_i.
    pub fn coordinate_field(&self, i: usize) -> VectorFieldSpec {
        VectorFieldSpec::coordinate(self.dim, i)
    }

    pub fn in_domain(&self, p: &[f64]) -> bool {
        self.domain.iter().all(|c| c.admits(p[c.var]))
    }

    fn check_point(&self, p: &[f64]) -> Result<(), MetricError> {
        if p.len() != self.dim {
            return Err(MetricError::PointDim { got: p.len(), dim: self.dim });
        }
        Ok(())
    }

    /// Metric values at `p`.
    pub fn eval(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, MetricError> {
        self.check_point(p)?;
        let n = self.dim;
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.entries[i][j].eval(p)?;
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        if linalg::cholesky(&g).is_none() {
            return Err(MetricError::NotPositive { point: p.to_vec() });
        }
        Ok(g)
    }

    /// Metric jets at `p`, row-major `n × n`, after checking positivity of the value.
    pub fn eval_jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>, MetricError> {
        self.check_point(p)?;
        let n = self.dim;
        let vars = expr::coordinate_jets(p, order)?;
        let mut g = vec![Jet::zero(order, n); n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.entries[i][j].eval_with(&vars)?;
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        let vals: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| g[i * n + j].value()).collect())
            .collect();
        if linalg::cholesky(&vals).is_none() {
            return Err(MetricError::NotPositive { point: p.to_vec() });
        }
        Ok(g)
    }

    /// The metric `e^α g`.
    pub fn conformal_rescale(&self, alpha: &Expr) -> MetricSpec {
        let factor = expr::func(Func::Exp, alpha.clone());
        let entries = self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| {
                        if e.is_const(0.0) {
                            e.clone()
                        } else {
                            expr::mul(factor.clone(), e.clone())
                        }
                    })
                    .collect()
            })
            .collect();
        MetricSpec {
            dim: self.dim,
            var_names: self.var_names.clone(),
            entries,
            domain: self.domain.clone(),
        }
    }

    /// Block components are zero between the index sets `a` and `b`.
    pub fn is_block_diagonal(&self, a: &[usize], b: &[usize]) -> bool {
        a.iter()
            .all(|&i| b.iter().all(|&j| self.entries[i][j].is_const(0.0)))
    }

    /// Human-readable text in metric file syntax (used for diagnostics and JSON).
    pub fn to_text(&self) -> String {
        let mut s = format!("dim = {}\nvars = {}\n", self.dim, self.var_names.join(" "));
        for i in 0..self.dim {
            for j in i..self.dim {
                let e = &self.entries[i][j];
                if i == j || !e.is_const(0.0) {
                    s.push_str(&format!(
                        "g {} {} = {}\n",
                        self.var_names[i],
                        self.var_names[j],
                        e.display(&self.var_names)
                    ));
                }
            }
        }
        for c in &self.domain {
            let op = match c.op {
                DomainOp::Greater => '>',
                DomainOp::Less => '<',
            };
            s.push_str(&format!("domain {} {} {:?}\n", self.var_names[c.var], op, c.bound));
        }
        s
    }
}

impl VectorFieldSpec {
    pub fn new(components: Vec<Expr>) -> VectorFieldSpec {
        VectorFieldSpec { components }
    }

    pub fn coordinate(dim: usize, i: usize) -> VectorFieldSpec {
        VectorFieldSpec {
            components: (0..dim)
                .map(|k| Expr::Const(if k == i { 1.0 } else { 0.0 }))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval_jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        let vars = expr::coordinate_jets(p, order)?;
        self.components.iter().map(|c| c.eval_with(&vars)).collect()
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, JetError> {
        self.components.iter().map(|c| c.eval(p)).collect()
    }

    /// If this is a constant multiple of a coordinate field, its index.
    pub fn as_coordinate(&self) -> Option<usize> {
        let nz: Vec<usize> = (0..self.dim())
            .filter(|&k| !self.components[k].is_const(0.0))
            .collect();
        match nz.as_slice() {
            [k] if self.components[*k].as_const().is_some() => Some(*k),
            _ => None,
        }
    }

    pub fn to_text(&self, names: &[String]) -> String {
        let terms: Vec<String> = self
            .components
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_const(0.0))
            .map(|(k, c)| {
                if c.is_const(1.0) {
                    format!("d{}", names[k])
                } else {
                    format!("{}*d{}", c.display(names), names[k])
                }
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}
