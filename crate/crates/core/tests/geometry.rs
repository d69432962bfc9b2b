use ibckit::polytope::{Membership, Polytope};
use ibckit::Scalar;
use nalgebra::DVector;
use proptest::prelude::*;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// Shoelace area of a counter-clockwise polygon.
fn shoelace(pts: &[DVector<f64>]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (&pts[i], &pts[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0
}

fn cloud(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, dim), dim + 4..dim + 14)
}

fn with_origin_inside(points: &[Vec<f64>]) -> Vec<DVector<f64>> {
    let mut pts: Vec<DVector<f64>> = points.iter().map(|p| v(p)).collect();
    let d = pts[0].len();
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = 0.5;
        pts.push(e.clone());
        pts.push(-e);
    }
    pts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hull_halfspace_round_trip_2d(points in cloud(2)) {
        let p = Polytope::hull(&with_origin_inside(&points)).unwrap();
        let raw: Vec<_> = p.halfspaces().iter().map(|h| (h.normal.clone(), h.offset)).collect();
        let q = Polytope::from_halfspaces(2, &raw).unwrap();
        prop_assert!(q.same_vertices(&p, 1e-9));
    }

    #[test]
    fn hull_halfspace_round_trip_3d(points in cloud(3)) {
        let p = Polytope::hull(&with_origin_inside(&points)).unwrap();
        let raw: Vec<_> = p.halfspaces().iter().map(|h| (h.normal.clone(), h.offset)).collect();
        let q = Polytope::from_halfspaces(3, &raw).unwrap();
        prop_assert!(q.same_vertices(&p, 1e-9));
    }

    #[test]
    fn every_input_point_is_inside_its_hull(points in cloud(3)) {
        let pts = with_origin_inside(&points);
        let p = Polytope::hull(&pts).unwrap();
        for x in &pts {
            prop_assert_ne!(p.membership(x), Membership::Outside);
        }
        prop_assert_eq!(p.membership(&DVector::zeros(3)), Membership::Interior);
    }

    #[test]
    fn fan_volume_matches_shoelace(points in cloud(2)) {
        let p = Polytope::hull(&with_origin_inside(&points)).unwrap();
        let tri = p.triangulate_with_origin().unwrap();
        prop_assert!((tri.volume() - shoelace(p.vertices())).abs() < 1e-9);
    }

    #[test]
    fn scaled_membership(points in cloud(2), s in 0.05..0.95f64, t in 0.0..1.0f64) {
        let p = Polytope::hull(&with_origin_inside(&points)).unwrap();
        let small = p.scale(s);
        let k = ((t * p.vertices().len() as f64) as usize).min(p.vertices().len() - 1);
        let x = &p.vertices()[k] * s;
        prop_assert_eq!(small.membership(&x), Membership::Boundary);
        prop_assert_eq!(p.membership(&x), Membership::Interior);
    }

    #[test]
    fn tangent_cones_contain_edges_to_other_vertices(points in cloud(3)) {
        let p = Polytope::hull(&with_origin_inside(&points)).unwrap();
        for (i, a) in p.vertices().iter().enumerate() {
            let cone = p.tangent_cone_at(i);
            for b in p.vertices() {
                prop_assert!(cone.contains(&(b - a), 1e-9));
            }
            prop_assert!(cone.contains_strictly(&(-a), 1e-9));
        }
    }
}

#[test]
fn single_precision_hexagon() {
    let pts: Vec<DVector<f32>> = [[0.8f32, 1.0], [-0.8, 1.0], [0.8, -1.0], [-0.8, -1.0], [1.0, 0.0], [-1.0, 0.0]]
        .iter()
        .map(|p| DVector::from_column_slice(p))
        .collect();
    let p = Polytope::hull(&pts).unwrap();
    assert_eq!(p.vertices().len(), 6);
    assert!(p.is_simplicial());
    assert_eq!(p.tolerance(), f32::tolerances().geo);
    let tri = p.triangulate_with_origin().unwrap();
    assert!((tri.volume() - 3.6).abs() < 1e-5);
}
