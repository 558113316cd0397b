mod common;

use common::*;
use lcw::bivector::{orthonormal_frame, weyl_operator};
use lcw::classify::{classify_cy, classify_weyl, CyKind};
use lcw::curvature::curvature_point;
use lcw::dsl::parse_expr;
use lcw::jet::{lift_variable, Jet};
use lcw::linalg;
use lcw::region::RegionSpec;
use lcw::{Margin, Tolerances};
use proptest::prelude::*;

fn names() -> Vec<String> {
    ["t", "x", "y", "z"].map(String::from).to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jet_gradient_matches_differences(seed in any::<u64>(), n in 1usize..5) {
        let mut g = rng(seed);
        let vars: Vec<usize> = (0..n).collect();
        let e = random_expr(&mut g, &vars, 3);
        let p = random_point(&mut g, n);
        let jet = e.eval_jet(&p, 1).unwrap();
        let fd = fd_gradient(&|q| e.eval(q).unwrap(), &p, 1e-3);
        for (a, b) in jet.gradient().iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{} at {p:?}: {a} vs {b}", e.display(&names()));
        }
    }

    #[test]
    fn printed_expressions_reparse(seed in any::<u64>()) {
        let mut g = rng(seed);
        let e = random_expr(&mut g, &[0, 1, 2, 3], 4);
        let text = e.display(&names()).to_string();
        let back = parse_expr(&text, &names()).unwrap();
        let p = random_point(&mut g, 4);
        let (a, b) = (e.eval(&p).unwrap(), back.eval(&p).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{text}: {a} vs {b}");
    }

    #[test]
    fn pythagorean_identity_on_jets(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let u = lift_variable(0, x, 5, 2).unwrap();
        let v = lift_variable(1, y, 5, 2).unwrap();
        let w = u * v + u;
        let one = w.sin() * w.sin() + w.cos() * w.cos();
        let c = Jet::constant(1.0, 5, 2);
        for (a, b) in one.coeffs().iter().zip(c.coeffs()) {
            prop_assert!((a - b).abs() < 1e-11);
        }
        let e = (w * w + Jet::constant(1.0, 5, 2)).ln().unwrap().exp();
        let direct = w * w + Jet::constant(1.0, 5, 2);
        for (a, b) in e.coeffs().iter().zip(direct.coeffs()) {
            prop_assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn curvature_identities(seed in any::<u64>(), n in 3usize..5) {
        let mut g = rng(seed);
        let m = random_metric(&mut g, n);
        let p = random_point(&mut g, n);
        let d = tensor_invariants(&m, &p);
        prop_assert!(d <= 1e-10, "defect {d:e}");
    }

    #[test]
    fn weyl_operator_symmetric_traceless(seed in any::<u64>()) {
        let mut g = rng(seed);
        let m = random_metric(&mut g, 4);
        let cp = curvature_point(&m, &random_point(&mut g, 4)).unwrap();
        let w = weyl_operator(&cp, &orthonormal_frame(&cp, &linalg::identity(4)).unwrap()).unwrap();
        let s = linalg::max_abs(&w.matrix).max(1e-300);
        prop_assert!(w.trace().abs() <= 1e-10 * s.max(1.0));
        for a in 0..6 {
            for b in 0..6 {
                prop_assert!((w.matrix[a][b] - w.matrix[b][a]).abs() <= 1e-12 * s.max(1.0));
            }
        }
        let c = classify_weyl(&w, &Tolerances::default());
        let total: f64 = c.eigenvalues.iter().sum();
        prop_assert!(total.abs() <= 1e-9 * s.max(1.0));
    }

    #[test]
    fn weyl_type_is_conformally_invariant(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (m, _) = random_conformal_product(&mut g, 4, &[0, 1]);
        let alpha = random_alpha(&mut g, 4);
        let p = random_point(&mut g, 4);
        let tol = Tolerances::default();
        let kind = |m: &lcw::dsl::MetricSpec| {
            let cp = curvature_point(m, &p).unwrap();
            classify_weyl(&weyl_operator(&cp, &orthonormal_frame(&cp, &linalg::identity(4)).unwrap()).unwrap(), &tol).kind
        };
        prop_assert_eq!(kind(&m), kind(&m.conformal_rescale(&alpha)));
    }

    #[test]
    fn degenerate_cy_directions_are_eigenflags(
        angles in prop::array::uniform3(-3.0f64..3.0),
        mu in 0.1f64..5.0,
    ) {
        let (a, b, c) = (angles[0], angles[1], angles[2]);
        let rx = vec![vec![1.0, 0.0, 0.0], vec![0.0, a.cos(), -a.sin()], vec![0.0, a.sin(), a.cos()]];
        let ry = vec![vec![b.cos(), 0.0, b.sin()], vec![0.0, 1.0, 0.0], vec![-b.sin(), 0.0, b.cos()]];
        let rz = vec![vec![c.cos(), -c.sin(), 0.0], vec![c.sin(), c.cos(), 0.0], vec![0.0, 0.0, 1.0]];
        let q = linalg::mat_mul(&rz, &linalg::mat_mul(&ry, &rx));
        let d = vec![vec![mu, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, -mu]];
        let cy = linalg::mat_mul(&q, &linalg::mat_mul(&d, &linalg::transpose(&q)));
        let class = classify_cy(&cy, &Tolerances::default(), 1.0);
        prop_assert_eq!(class.kind, CyKind::Degenerate);
        prop_assert_eq!(class.directions.len(), 2);
        for v in &class.directions {
            let l = linalg::norm(v);
            let defect = flag_defect(&cy, [v[0] / l, v[1] / l, v[2] / l]) / mu;
            prop_assert!(defect < 1e-12, "defect {defect:e}");
        }
    }

    #[test]
    fn margin_worst_is_symmetric(a in 0.0f64..10.0, b in 1e-6f64..1.0, c in 0.0f64..10.0, d in 1e-6f64..1.0) {
        let (x, y) = (Margin::new(a, b), Margin::new(c, d));
        prop_assert_eq!(x.worst(y).ratio(), y.worst(x).ratio());
        prop_assert!(x.worst(y).ratio() >= x.ratio().max(y.ratio()) - 1e-15);
        prop_assert_eq!(x.worst(y).pass(), x.pass() && y.pass());
    }

    #[test]
    fn samples_stay_in_box(seed in any::<u64>(), per_axis in 2usize..5, extra in 0usize..20) {
        let region = RegionSpec::new(vec![(0.0, 1.0), (1.0, 3.0), (-1.0, 0.5)]).with_grid(per_axis, extra).with_seed(seed);
        let s = region.samples();
        prop_assert_eq!(s.len(), per_axis.pow(3) + extra);
        for p in &s.points {
            for (v, (lo, hi)) in p.iter().zip(&region.intervals) {
                prop_assert!(*v >= *lo && *v <= *hi);
            }
        }
        prop_assert_eq!(s.clone(), region.samples());
        prop_assert_eq!(s.spanning_order().len(), s.len());
    }
}
