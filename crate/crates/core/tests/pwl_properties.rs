use ibckit::ibc::{construct_ibc_polytope, InputSet};
use ibckit::pwl::build_pwl;
use ibckit::{LinearSystem, Polytope};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn system() -> impl Strategy<Value = LinearSystem<f64>> {
    (prop::collection::vec(-2.0..2.0f64, 4), prop::collection::vec(-1.0..1.0f64, 2)).prop_filter_map(
        "controllable with O + B = R^2",
        |(a, b)| {
            LinearSystem::new(DMatrix::from_row_slice(2, 2, &a), DMatrix::from_row_slice(2, 1, &b))
                .ok()
                .filter(|s| s.is_controllable() && s.decompose().is_ok())
        },
    )
}

fn hexagon() -> (LinearSystem<f64>, Polytope<f64>) {
    let sys = LinearSystem::double_integrator(1);
    let p = Polytope::from_box(&[-0.8, -1.0], &[0.8, 1.0]).unwrap();
    (sys.clone(), construct_ibc_polytope(&sys, &p, 1.25).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_along_rays(k in 0usize..6, s in 0.0..1.0f64, w in 0.0..1.0f64) {
        let (sys, x) = hexagon();
        let c = build_pwl(&sys, &x, &InputSet::Unbounded).unwrap();
        let a = &x.vertices()[k];
        let b = &x.vertices()[(k + 1) % 6];
        // a point on the boundary, then a ray from the origin through it
        let p = a * (1.0 - w) + b * w;
        let up = c.eval(&p).unwrap();
        prop_assert!((c.eval(&(&p * s)).unwrap() - &up * s).norm() < 1e-9);
        prop_assert!((c.lyapunov(&(&p * s)) - s).abs() < 1e-9);
    }

    #[test]
    fn continuous_across_simplices(t in 0.01..0.99f64, k in 0usize..6) {
        let (sys, x) = hexagon();
        let c = build_pwl(&sys, &x, &InputSet::Unbounded).unwrap();
        // a point on the shared edge between origin and vertex k
        let p = &x.vertices()[k] * t;
        let tri = c.triangulation();
        let owners: Vec<usize> = (0..tri.simplices.len())
            .filter(|&i| tri.simplices[i].iter().any(|&j| j > 0 && (&tri.points[j] - &x.vertices()[k]).norm() < 1e-12))
            .collect();
        prop_assert_eq!(owners.len(), 2);
        let values: Vec<f64> = owners.iter().map(|&i| (&c.gains()[i] * &p)[0]).collect();
        prop_assert!((values[0] - values[1]).abs() < 1e-9);
    }

    #[test]
    fn lyapunov_decreases_on_random_systems(sys in system(), seed in 0u64..1000) {
        let p = Polytope::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let x = construct_ibc_polytope(&sys, &p, 1.5).unwrap();
        let c = build_pwl(&sys, &x, &InputSet::Unbounded).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for q in x.sample_interior(&mut rng, 50) {
            prop_assert!(c.dini_derivative(&sys, &q).unwrap() <= 1e-6);
        }
    }
}

#[test]
fn extension_is_homogeneous_outside() {
    let (sys, x) = hexagon();
    let c = build_pwl(&sys, &x, &InputSet::Unbounded).unwrap();
    let p = v(&[0.4, 0.5]);
    let far = &p * 3.0;
    assert!((c.eval_extended(&far) - c.eval(&p).unwrap() * 3.0).norm() < 1e-9);
    assert!(c.eval(&far).is_err());
}

#[test]
fn controls_stay_within_the_input_box() {
    let sys = LinearSystem::<f64>::double_integrator(1);
    let p = Polytope::from_box(&[-0.8, -1.0], &[0.8, 1.0]).unwrap();
    let x = construct_ibc_polytope(&sys, &p, 1.25).unwrap();
    let u = InputSet::symmetric(1, 8.0);
    let c = build_pwl(&sys, &x, &u).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for q in x.sample_interior(&mut rng, 300) {
        assert!(c.eval(&q).unwrap()[0].abs() <= 8.0 + 1e-9);
    }
}
