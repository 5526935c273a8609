use latdisp::critical::{degenerate_catalog, CatalogKind};
use latdisp::newton::{
    adaptedness, apply_change, case_catalog, expand_phase, max_order_on_circle, newton_polygon, nondegeneracy_check,
    polygon_from_support, CoordinateChange, Face, NewtonError, TaylorSeries2, Q,
};
use latdisp::symbol::{PhaseSpec, TorusPoint};
use proptest::prelude::*;
use std::f64::consts::PI;

const GAMMAS: [f64; 8] = [-20.0, -16.0, -12.0, -8.0, -4.0, 0.0, 1.0, 5.0];

fn expected_index(kind: CatalogKind, gamma: f64) -> (Q, u8) {
    match kind {
        CatalogKind::Sigma2 if gamma == -8.0 => (Q::new(1, 2), 1),
        CatalogKind::Sigma2 => (Q::new(1, 2), 0),
        CatalogKind::Special if gamma == -8.0 => (Q::new(1, 2), 0),
        CatalogKind::Special => (Q::new(3, 4), 0),
        CatalogKind::DCurve => (Q::new(1, 2), 0),
        CatalogKind::ECurve => (Q::new(5, 6), 0),
    }
}

#[test]
fn every_catalog_point_reaches_adapted_coordinates() {
    for gamma in GAMMAS {
        let cat = degenerate_catalog(gamma);
        for p in cat.points(9) {
            let r = case_catalog(gamma, &p.xi).unwrap_or_else(|e| panic!("γ={gamma} {:?} {:?}: {e}", p.kind, p.xi));
            assert_eq!(r.kind, p.kind, "γ={gamma} {:?}", p.xi);
            assert!(r.report.adapted);
            assert_eq!(r.report.index, expected_index(p.kind, gamma), "γ={gamma} {:?} {:?}", p.kind, p.xi);
            for (name, v) in &r.claims {
                assert!(v.abs() > 1e-8, "{name} vanishes at {:?}", p.xi);
            }
        }
    }
}

#[test]
fn eigenvector_frame_on_the_curve_is_not_adapted() {
    // cos ξ₁ + cos ξ₂ = 1 at γ = −4
    let c1: f64 = 0.3;
    let xi = TorusPoint::new(vec![c1.acos(), (1.0 - c1).acos()]).unwrap();
    let r = case_catalog(-4.0, &xi).unwrap();
    let first = &r.stages[0];
    assert_eq!(first.polygon.distance, Q::new(4, 3));
    assert!(first.obstruction.is_some());
    assert_eq!(r.changes.len(), 2);
    assert!(matches!(r.polygon.principal_face, Face::UnboundedEdge { .. }));
    assert_eq!(r.polygon.vertices, vec![(0, 2)]);
}

#[test]
fn perfect_square_has_no_odd_pure_terms() {
    // at v = 0 the phase minus its value is (ω² + γ/2)², so after any change of
    // variables it stays a square and cannot carry a lone w₂³ term
    let c1: f64 = -0.2;
    let xi = TorusPoint::new(vec![c1.acos(), (0.5 - c1).acos()]).unwrap();
    let spec = PhaseSpec::at_rest(2, -6.0).unwrap();
    let s = expand_phase(&spec, &xi, 10).unwrap().without_constant();
    let (s1, s2) = (xi.coords()[0].sin(), xi.coords()[1].sin());
    let b1 = s2 * s2 * c1 + s1 * s1 * (0.5 - c1);
    let b2 = s1 * s1 + s2 * s2;
    let z = apply_change(&s, &CoordinateChange::linear([[s2, s1], [-s1, s2]])).unwrap();
    assert!((z.coeff(4, 0) - b1 * b1).abs() < 1e-12);
    assert!((z.coeff(2, 1) - 4.0 * b1 * b2).abs() < 1e-12);
    assert!((z.coeff(0, 2) - 4.0 * b2 * b2).abs() < 1e-12);
    let w = apply_change(&z, &CoordinateChange::Quadratic { b1, b2 }).unwrap();
    assert!((w.coeff(2, 0) - 1.0).abs() < 1e-12);
    assert!(w.coeff(0, 3).abs() < 1e-12);
}

#[test]
fn expansion_orders_agree() {
    let cat = degenerate_catalog(1.0);
    let xi = &cat.e_curve(7)[2];
    let spec =
        PhaseSpec::new(2, 1.0, latdisp::symbol::dispersion_gradient(1.0, xi).iter().map(|g| -g).collect()).unwrap();
    let a = expand_phase(&spec, xi, 8).unwrap();
    let b = expand_phase(&spec, xi, 10).unwrap();
    assert_eq!(a, b.truncate(8));
}

#[test]
fn not_covered_and_bad_dimension() {
    let xi = TorusPoint::new(vec![0.7, 2.0]).unwrap();
    assert!(matches!(case_catalog(1.0, &xi), Err(NewtonError::CaseNotCovered { .. })));
    let one = TorusPoint::new(vec![0.7]).unwrap();
    assert_eq!(case_catalog(1.0, &one).unwrap_err(), NewtonError::TwoDimensionalOnly);
}

#[test]
fn special_point_principal_part() {
    let r = case_catalog(1.0, &TorusPoint::new(vec![PI / 2.0, PI / 2.0]).unwrap()).unwrap();
    let pr = &r.report.principal_part;
    assert!((pr.coeff(2, 0) - 16.0).abs() < 1e-12);
    assert!((pr.coeff(1, 2) + 18.0).abs() < 1e-12);
    assert_eq!(r.polygon.distance, Q::new(4, 3));
    assert_eq!(max_order_on_circle(pr).unwrap(), 1);
}

#[test]
fn nondegenerate_faces_in_adapted_frames() {
    for gamma in [0.0, -8.0, 1.0] {
        for p in degenerate_catalog(gamma).points(5) {
            let r = case_catalog(gamma, &p.xi).unwrap();
            let s = apply_changes(gamma, &p.xi, &r.changes);
            assert!(nondegeneracy_check(&s, &newton_polygon(&s).unwrap(), 2048).unwrap(), "γ={gamma} {:?}", p.xi);
        }
    }
}

fn apply_changes(gamma: f64, xi: &TorusPoint, changes: &[CoordinateChange]) -> TaylorSeries2 {
    let v = latdisp::symbol::dispersion_gradient(gamma, xi).iter().map(|g| -g).collect();
    let spec = PhaseSpec::new(2, gamma, v).unwrap();
    let xi = latdisp::critical::fold_quadrant(xi);
    let mut s = expand_phase(&spec, &xi, 10).unwrap().without_constant();
    for c in changes {
        s = apply_change(&s, c).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_change_preserves_homogeneous_degree(
        coeffs in proptest::collection::vec(-3.0f64..3.0, 5),
        m in proptest::array::uniform4(-2.0f64..2.0),
    ) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.1);
        let terms: Vec<((usize, usize), f64)> = coeffs.iter().enumerate().map(|(j, &c)| ((4 - j, j), c)).collect();
        let s = TaylorSeries2::from_terms(8, &terms);
        let out = apply_change(&s, &CoordinateChange::linear([[m[0], m[1]], [m[2], m[3]]])).unwrap();
        for ((i, j), c) in out.terms() {
            if i + j != 4 {
                prop_assert!(c.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distance_is_on_the_boundary(pts in proptest::collection::vec((0usize..9, 0usize..9), 1..8)) {
        prop_assume!(pts.iter().any(|&(i, j)| i + j > 0));
        let p = polygon_from_support(pts.clone()).unwrap();
        let d = p.distance;
        // no support point lies strictly below the diagonal point along any supporting line
        for e in &p.edges {
            if let Ok((k1, k2)) = e.kappa() {
                for &(i, j) in &pts {
                    if i + j > 0 {
                        prop_assert!(k1 * Q::from_integer(i as i64) + k2 * Q::from_integer(j as i64) >= Q::from_integer(1));
                    }
                }
                prop_assert!((k1 + k2) * d >= Q::from_integer(1));
            }
        }
        prop_assert!(d > Q::from_integer(0));
    }

    #[test]
    fn adaptedness_index_matches_distance(a in 2usize..7, b in 2usize..7) {
        // two-term polynomial x₁^a + x₂^b: m ≤ d always holds
        let s = TaylorSeries2::from_terms(12, &[((a, 0), 1.0), ((0, b), 1.0)]);
        let p = newton_polygon(&s).unwrap();
        let r = adaptedness(&s, &p).unwrap();
        prop_assert_eq!(r.index.0, p.distance.recip());
        prop_assert_eq!(p.distance, Q::new((a * b) as i64, (a + b) as i64));
    }
}
