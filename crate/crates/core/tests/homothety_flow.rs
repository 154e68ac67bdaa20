//! Closed-form homotheties against the integrated Hamiltonian flow, and the
//! volume exponent against the geodesic dimension.

use srcurv::hamflow::exponential_map;
use srcurv::homothety::*;
use srcurv::model::{builtin_model, Params};

#[test]
fn closed_form_flow_matches_integration() {
    for (name, model) in [("heisenberg", OracleModel::Heisenberg), ("sphere2", OracleModel::Sphere2)] {
        let cm = builtin_model(name, &Params::new()).unwrap().to_f64();
        let mut job = HomothetyJob::standard(model, 0);
        job.center = vec![0.1, -0.2, 0.05][..model.dim()].to_vec();
        for x in [vec![0.6, 0.3, -0.4], vec![-0.5, 0.7, 0.2]] {
            let x = &x[..model.dim()];
            let p = distance_gradient(&job, x).unwrap();
            for t in [0.3, 0.7] {
                let closed = homothety_map(&job, x, t).unwrap();
                let integrated = exponential_map(&cm, x, &p, t - 1.0).unwrap();
                for i in 0..x.len() {
                    assert!((closed[i] - integrated[i]).abs() < 1e-8, "{name}: {closed:?} {integrated:?}");
                }
            }
            // φ₀ collapses onto the center.
            let c = homothety_map(&job, x, 1e-9).unwrap();
            for i in 0..x.len() {
                assert!((c[i] - job.center[i]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn exponent_is_geodesic_dimension() {
    for (model, tol) in
        [(OracleModel::Heisenberg, 0.1), (OracleModel::Euclidean(2), 0.05), (OracleModel::Sphere2, 0.05)]
    {
        let mut job = HomothetyJob::standard(model, 7);
        job.samples = 1000;
        let a = volume_exponent(&job).unwrap();
        assert!((a.slope - model.geodesic_dimension() as f64).abs() < tol, "{model:?}: {}", a.slope);
        assert!(a.is_monotone());
        assert_eq!(a, volume_exponent(&job).unwrap());
    }
}
