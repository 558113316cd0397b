mod common;

use common::*;
use lcw::decide::{self, conformal_rescale, leaf_metric, partition, Options, PlaneForm, Snap, VerdictKind};
use lcw::distribution::{killing_detect_surface, DistributionSpec, KillingKind};
use lcw::dsl::parse_expr;
use lcw::region::RegionSpec;
use lcw::Exec;

fn quick(m: &lcw::dsl::MetricSpec) -> RegionSpec {
    RegionSpec::default_for(m).with_grid(3, 6)
}

#[test]
fn sequential_and_parallel_agree() {
    let m = fixture("warped_c.gmet");
    let region = quick(&m);
    let par = decide::decide(&m, &region, &Options::default()).unwrap();
    let seq = decide::decide(&m, &region, &Options { exec: Exec::Sequential, ..Options::default() }).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn verdict_serializes() {
    let m = fixture("warped_b.gmet");
    let v = decide::decide(&m, &quick(&m), &Options::default()).unwrap();
    let json = serde_json::to_value(&v).unwrap();
    assert_eq!(json["summary"]["verdict"], "lcw-exists");
    assert_eq!(json["per_point"].as_array().unwrap().len(), 87);
    assert_eq!(json["per_point"][0]["class"]["tensor"], "weyl");
}

#[test]
fn warped_c_planes_snap_to_coordinates() {
    let m = fixture("warped_c.gmet");
    let v = decide::decide(&m, &quick(&m), &Options::default()).unwrap();
    let forms: Vec<PlaneForm> = v.planes.iter().map(|p| p.form).collect();
    assert_eq!(forms, vec![PlaneForm::Coordinates([0, 1]), PlaneForm::Coordinates([2, 3])]);
    let y = v.candidates.iter().find(|c| c.label == "dy").unwrap();
    assert_eq!(y.snap, Snap::Coordinate(2));
    assert!(y.accepted);
}

#[test]
fn spheres_have_killing_factors() {
    let m = fixture("spheres4.gmet");
    let v = decide::decide(&m, &quick(&m), &Options::default()).unwrap();
    assert_eq!(v.summary.verdict, VerdictKind::LcwExists);
    let p = v.product.unwrap();
    assert!(p.factors.iter().all(|f| f.detection.kind == KillingKind::Inapplicable));
    assert!(p.alpha_path.pass());
}

#[test]
fn leaf_of_a_product_is_the_factor_metric() {
    let m = fixture("spheres4.gmet");
    let leaf = leaf_metric(&m, [0, 1], [2, 3], &[0.2, 0.3, 0.0, 0.0]);
    // sqrt(det) of the frozen second factor at y = z = 0 is 4
    let g = leaf.eval(&[0.5, -0.25]).unwrap();
    let want = 1.0 / (1.0f64 + 0.25 + 0.0625).powi(2);
    assert!((g[0][0] - want).abs() < 1e-14 && g[0][1] == 0.0);
    let k = killing_detect_surface(&leaf, &RegionSpec::new(vec![(0.0, 1.0), (0.0, 1.0)]).with_grid(3, 4).samples(), &Default::default(), Exec::Sequential)
        .unwrap();
    assert_eq!(k.kind, KillingKind::Inapplicable);
}

#[test]
fn rescale_multiplies_entries() {
    let m = fixture("ellipsoids4.gmet");
    let alpha = parse_expr("sin(t*y) + x^2", &m.var_names).unwrap();
    let r = conformal_rescale(&m, &alpha);
    let d = r.entry_defect(&m, &quick(&m).samples()).unwrap();
    assert!(d < 1e-13, "{d}");
}

#[test]
fn partition_by_connectivity() {
    let region = RegionSpec::new(vec![(0.0, 1.0), (0.0, 1.0)]).with_grid(3, 0);
    let s = region.samples();
    // left column differs from the rest
    let labels: Vec<String> = (0..9).map(|k| if k < 3 { "B" } else { "C" }.to_string()).collect();
    let cells = partition(&s, &labels);
    assert_eq!(cells.len(), 2);
    assert_eq!(cells[0].samples, vec![0, 1, 2]);
    let corners: Vec<String> = (0..9).map(|k| if k == 0 || k == 8 { "A" } else { "B" }.to_string()).collect();
    assert_eq!(partition(&s, &corners).len(), 3);
}

#[test]
fn gradient_normal_snap() {
    // dt^2 + dx^2 + x^4 dy^2 after x -> x + t: the LCW direction becomes grad t
    let m = lcw::dsl::parse_metric("dim = 3\ng tt = 2\ng tx = -1\ng xx = 1\ng yy = (x - t)^4\n").unwrap();
    let region = RegionSpec::parse("x:2:3", &m).unwrap().with_grid(3, 6);
    let v = decide::decide(&m, &region, &Options::default()).unwrap();
    assert!(v.directions.iter().any(|d| d.snap == Snap::GradientNormal(0)), "{:?}", v.directions);
    assert_eq!(v.summary.verdict, VerdictKind::LcwExists, "{:#?}", v.summary);
    assert!(v.summary.directions.contains(&"grad t".to_string()));
}

#[test]
fn rejects_other_dimensions() {
    let m = lcw::dsl::parse_metric("dim = 2\ng xx = 1\ng yy = 1\n").unwrap();
    assert!(decide::decide(&m, &RegionSpec::default_for(&m), &Options::default()).is_err());
}

#[test]
fn every_coordinate_plane_of_warped_b_is_checked() {
    let m = fixture("warped_b.gmet");
    let s = quick(&m).samples();
    let o = Options::default();
    let f = lcw::distribution::conformal_factor_decision(&DistributionSpec::coordinates(4, &[1]), &m, &s, &o.tol, o.exec).unwrap();
    assert!(!f.is_factor && !f.inconsistent);
}
