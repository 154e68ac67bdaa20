//! The closed-form LQ curvature against the generic Jacobi-curve pipeline.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srcurv::hamflow::ExtremalState;
use srcurv::jacobi::{curvature_report, FitOptions};
use srcurv::lq::{gramian_quadrature, gramian_series, lq_curvature, LqSystem};
use srcurv::model::lq_model;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let b = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0));
    (a, b)
}

fn compare(a: &DMatrix<f64>, b: &DMatrix<f64>, p: Vec<f64>) {
    let sys = LqSystem::new(a.clone(), b.clone()).unwrap();
    let closed = lq_curvature(&sys).unwrap();
    let model = lq_model(&rows(a), &rows(b)).unwrap().to_f64();
    let n = a.nrows();
    let rep = curvature_report(&model, &ExtremalState::new(vec![0.0; n], p), FitOptions::default()).unwrap();
    let scale = closed.i_matrix.norm();
    let di = (&rep.i_matrix - &closed.i_matrix).norm() / scale;
    let dr = (&rep.r_matrix - &closed.r_matrix).norm() / closed.r_matrix.norm().max(1.0);
    println!("n={n} k={} I err {di:e} R err {dr:e} residual {:e}", b.ncols(), rep.residual);
    assert!(di < 1e-6, "I: {} vs {}", rep.i_matrix, closed.i_matrix);
    assert!(dr < 1e-6, "R: {} vs {}", rep.r_matrix, closed.r_matrix);
}

#[test]
fn random_systems_match_generic_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n, k) in [(2, 1), (3, 1), (4, 2), (4, 1), (3, 2)] {
        let (a, b) = random_pair(&mut rng, n, k);
        let p = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        compare(&a, &b, p);
    }
}

#[test]
fn gramian_series_and_quadrature_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=4 {
        let (a, b) = random_pair(&mut rng, n, 1);
        let sys = LqSystem::new(a, b).unwrap();
        for t in [0.1, 1.0, 3.0] {
            let (s, bound) = gramian_series(&sys, t).unwrap();
            let q = gramian_quadrature(&sys, t).unwrap();
            assert!((&s - &q).norm() <= 1e-10 * s.norm(), "n={n} t={t}");
            assert!(bound <= 1e-12 * s.norm());
        }
    }
}
