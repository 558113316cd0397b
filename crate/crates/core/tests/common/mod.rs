#![allow(dead_code)]

use std::path::PathBuf;

use lcw::curvature::{curvature_point, CurvaturePoint, Ix};
use lcw::dsl::expr::{self as ex, Expr, Func};
use lcw::dsl::{parse_metric, MetricSpec};
use lcw::linalg::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> MetricSpec {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_metric(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const FIXTURES_4D: [&str; 4] = ["warped_b.gmet", "warped_c.gmet", "spheres4.gmet", "ellipsoids4.gmet"];
pub const FIXTURES_3D: [&str; 4] = ["flat3.gmet", "revolution3.gmet", "perturbed3.gmet", "exp_product3.gmet"];

fn coef(r: &mut TestRng, lo: f64, hi: f64) -> Expr {
    ex::real(r.gen_range(lo..hi))
}

/// Random smooth expression, finite on all of `ℝⁿ` near the unit box.
pub fn random_expr(r: &mut TestRng, vars: &[usize], depth: usize) -> Expr {
    if depth == 0 || r.gen_bool(0.2) {
        return if r.gen_bool(0.7) {
            Expr::Var(vars[r.gen_range(0..vars.len())])
        } else {
            coef(r, 0.2, 2.0)
        };
    }
    let a = random_expr(r, vars, depth - 1);
    match r.gen_range(0..9) {
        0 => ex::add(a, random_expr(r, vars, depth - 1)),
        1 => ex::sub(a, random_expr(r, vars, depth - 1)),
        2 => ex::mul(a, random_expr(r, vars, depth - 1)),
        3 => ex::div(a, ex::add(ex::real(1.0), ex::pow(random_expr(r, vars, depth - 1), 2))),
        4 => ex::pow(a, r.gen_range(2..4)),
        5 => ex::func(if r.gen_bool(0.5) { Func::Sin } else { Func::Cos }, a),
        6 => ex::func(Func::Exp, ex::mul(coef(r, -0.5, 0.5), a)),
        7 => ex::func(
            if r.gen_bool(0.5) { Func::Sqrt } else { Func::Log },
            ex::add(ex::real(1.0), ex::pow(a, 2)),
        ),
        _ => ex::func(if r.gen_bool(0.5) { Func::Sinh } else { Func::Cosh }, ex::mul(coef(r, -0.5, 0.5), a)),
    }
}

/// `a sin(b x_k + c)`, bounded by `|a|`.
fn wave(r: &mut TestRng, vars: &[usize], amp: f64) -> Expr {
    let k = vars[r.gen_range(0..vars.len())];
    let l = vars[r.gen_range(0..vars.len())];
    let arg = ex::add(
        ex::add(ex::mul(coef(r, -1.5, 1.5), Expr::Var(k)), ex::mul(coef(r, -1.0, 1.0), Expr::Var(l))),
        coef(r, -1.0, 1.0),
    );
    ex::mul(coef(r, -amp, amp), ex::func(Func::Sin, arg))
}

/// Positive definite by diagonal dominance: `δ + w` with `|w_ij| < 0.9 / n`.
pub fn random_block(r: &mut TestRng, vars: &[usize], size: usize) -> Vec<Vec<Expr>> {
    let amp = 0.9 / size as f64;
    let mut e = vec![vec![Expr::Const(0.0); size]; size];
    for i in 0..size {
        for j in i..size {
            let w = ex::add(wave(r, vars, 0.5 * amp), wave(r, vars, 0.5 * amp));
            e[i][j] = if i == j { ex::add(ex::real(1.0), w) } else { w };
            e[j][i] = e[i][j].clone();
        }
    }
    e
}

pub fn random_metric(r: &mut TestRng, n: usize) -> MetricSpec {
    let vars: Vec<usize> = (0..n).collect();
    MetricSpec::new(random_block(r, &vars, n))
}

pub fn random_alpha(r: &mut TestRng, n: usize) -> Expr {
    let vars: Vec<usize> = (0..n).collect();
    let mut a = ex::add(wave(r, &vars, 0.8), wave(r, &vars, 0.8));
    let (i, j) = (r.gen_range(0..n), r.gen_range(0..n));
    a = ex::add(a, ex::mul(coef(r, -0.5, 0.5), ex::mul(Expr::Var(i), Expr::Var(j))));
    a
}

/// `e^α (g₁ ⊕ g₂)` with random factor blocks on the given coordinate split.
pub fn random_conformal_product(r: &mut TestRng, n: usize, first: &[usize]) -> (MetricSpec, Expr) {
    let second: Vec<usize> = (0..n).filter(|i| !first.contains(i)).collect();
    let mut e = vec![vec![Expr::Const(0.0); n]; n];
    for block in [first.to_vec(), second] {
        let b = random_block(r, &block, block.len());
        for (a, &i) in block.iter().enumerate() {
            for (c, &j) in block.iter().enumerate() {
                e[i][j] = b[a][c].clone();
            }
        }
    }
    let alpha = random_alpha(r, n);
    (MetricSpec::new(e).conformal_rescale(&alpha), alpha)
}

pub fn random_point(r: &mut TestRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(0.05..0.95)).collect()
}

/// Central differences with one Richardson step.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, p: &[f64], h: f64) -> Vec<f64> {
    let d = |i: usize, h: f64| {
        let (mut a, mut b) = (p.to_vec(), p.to_vec());
        a[i] += h;
        b[i] -= h;
        (f(&a) - f(&b)) / (2.0 * h)
    };
    (0..p.len()).map(|i| (4.0 * d(i, 0.5 * h) - d(i, h)) / 3.0).collect()
}

pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, p: &[f64], h: f64) -> Mat {
    let n = p.len();
    let d = |i: usize, j: usize, h: f64| {
        let at = |si: f64, sj: f64| {
            let mut q = p.to_vec();
            q[i] += si * h;
            q[j] += sj * h;
            f(&q)
        };
        (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
    };
    (0..n)
        .map(|i| (0..n).map(|j| (4.0 * d(i, j, 0.5 * h) - d(i, j, h)) / 3.0).collect())
        .collect()
}

pub fn t4(cp: &CurvaturePoint, t: &[lcw::jet::Jet], a: usize, b: usize, c: usize, d: usize) -> f64 {
    t[Ix(cp.dim).i4(a, b, c, d)].value()
}

pub fn max_abs(t: &[lcw::jet::Jet]) -> f64 {
    t.iter().map(|j| j.value().abs()).fold(0.0, f64::max)
}

/// Riemann, Ricci and Weyl symmetry and trace identities at one point.
pub fn tensor_invariants(m: &MetricSpec, p: &[f64]) -> f64 {
    let cp = curvature_point(m, p).unwrap();
    let n = cp.dim;
    let ix = Ix(n);
    let rm = |a, b, c, d| t4(&cp, &cp.riem, a, b, c, d);
    let scale = max_abs(&cp.riem).max(1.0);
    let gi = cp.g_inv_value();
    let mut worst: f64 = 0.0;
    let mut upd = |v: f64| worst = worst.max(v.abs() / scale);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    upd(rm(a, b, c, d) + rm(b, a, c, d));
                    upd(rm(a, b, c, d) + rm(a, b, d, c));
                    upd(rm(a, b, c, d) - rm(c, d, a, b));
                    upd(rm(a, b, c, d) + rm(b, c, a, d) + rm(c, a, b, d));
                }
            }
            let mut ric = 0.0;
            for i in 0..n {
                for l in 0..n {
                    ric += gi[i][l] * rm(i, a, b, l);
                }
            }
            upd(ric - cp.ric[ix.i2(a, b)].value());
            upd(cp.ric[ix.i2(a, b)].value() - cp.ric[ix.i2(b, a)].value());
        }
    }
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            s += gi[a][b] * cp.ric[ix.i2(a, b)].value();
        }
    }
    upd(s - cp.scal.value());
    if let Some(w) = &cp.weyl {
        let wv = |a, b, c, d| t4(&cp, w, a, b, c, d);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        upd(wv(a, b, c, d) + wv(b, a, c, d));
                        upd(wv(a, b, c, d) - wv(c, d, a, b));
                        upd(wv(a, b, c, d) + wv(b, c, a, d) + wv(c, a, b, d));
                    }
                    let mut tr = 0.0;
                    for i in 0..n {
                        for l in 0..n {
                            tr += gi[i][l] * wv(i, a, b, l);
                        }
                    }
                    upd(tr);
                }
            }
        }
    }
    if let Ok(cy) = cp.cotton_york() {
        let mut tr = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                upd(cy[a][b] - cy[b][a]);
                tr += gi[a][b] * cy[a][b];
            }
        }
        upd(tr);
    }
    worst
}

/// `CY(v,v)` and `CY` on `v^⊥`, relative to the operator norm, written out
/// independently of the library.
pub fn flag_defect(cy: &Mat, v: [f64; 3]) -> f64 {
    let a = if v[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let cross = |p: [f64; 3], q: [f64; 3]| [p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]];
    let w1 = cross(v, a);
    let l = (w1[0] * w1[0] + w1[1] * w1[1] + w1[2] * w1[2]).sqrt();
    let w1 = [w1[0] / l, w1[1] / l, w1[2] / l];
    let w2 = cross(v, w1);
    let q = |p: [f64; 3], s: [f64; 3]| (0..3).map(|i| (0..3).map(|j| p[i] * cy[i][j] * s[j]).sum::<f64>()).sum::<f64>();
    (q(v, v).powi(2) + q(w1, w1).powi(2) + 2.0 * q(w1, w2).powi(2) + q(w2, w2).powi(2)).sqrt()
}

