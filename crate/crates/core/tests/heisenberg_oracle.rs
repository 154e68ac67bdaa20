//! The generic pipeline against the Heisenberg closed forms.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srcurv::hamflow::exponential_map;
use srcurv::heisenberg::*;
use srcurv::jacobi::{curvature_report, FitOptions};
use srcurv::model::{builtin_model, Params};
use srcurv::ExtremalState;

fn heis() -> srcurv::ControlModel<f64> {
    builtin_model("heisenberg", &Params::new()).unwrap().to_f64()
}

fn random_point(rng: &mut ChaCha8Rng) -> HeisPoint {
    HeisPoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

#[test]
fn exponential_map_matches_closed_form() {
    let m = heis();
    for &(phi, hz) in &[(0.0, 0.0), (0.4, 1.0), (2.0, -2.0)] {
        let h = unit_covector(phi, hz);
        for &t in &[0.3, 1.0, 2.5] {
            let x = exponential_map(&m, &[0.0; 3], &h, t).unwrap();
            let c = heis_geodesic(Complex::new(h[0], h[1]), hz, t).to_vec();
            for i in 0..3 {
                assert!((x[i] - c[i]).abs() < 1e-9, "{x:?} {c:?}");
            }
            if hz == 0.0 || t < 2.0 * PI / hz.abs() {
                let d = heis_distance(&HeisPoint::origin(), &HeisPoint::from_slice(&x));
                assert!((d - t).abs() < 1e-8, "d={d} t={t}");
            }
        }
    }
}

#[test]
fn metric_axioms_and_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        let (ab, bc, ac) = (heis_distance(&a, &b), heis_distance(&b, &c), heis_distance(&a, &c));
        assert!(ac <= ab + bc + 1e-12);
        assert!((ab - heis_distance(&b, &a)).abs() < 1e-12);
        let g = random_point(&mut rng);
        assert!((heis_distance(&(g * a), &(g * b)) - ab).abs() < 1e-10 * (1.0 + ab));
        let alpha = rng.gen_range(0.1..3.0);
        let scaled = heis_distance(&a.dilate(alpha), &b.dilate(alpha));
        assert!((scaled - alpha * ab).abs() < 1e-10 * (1.0 + ab));
    }
    assert_eq!(heis_distance(&HeisPoint::new(0.3, 0.1, -0.2), &HeisPoint::new(0.3, 0.1, -0.2)), 0.0);
}

#[test]
fn generic_curvature_matches_closed_form() {
    let m = heis();
    for &phi in &[0.0, PI / 4.0, PI / 2.0] {
        for &hz in &[0.5, 1.0, 2.0] {
            let h = unit_covector(phi, hz);
            let rep =
                curvature_report(&m, &ExtremalState::new(vec![0.0; 3], h.to_vec()), FitOptions::default()).unwrap();
            let basis = DMatrix::from_row_slice(2, 2, &[-h[1], h[0], h[0], h[1]]);
            let i_b = basis.transpose() * &rep.i_matrix * &basis;
            let r_b = basis.transpose() * &rep.r_matrix * &basis;
            let (i_ex, r_ex) = heis_curvature(hz);
            assert!((rep.i_eigenvalues[0] - 4.0).abs() < 1e-4 && (rep.i_eigenvalues[1] - 1.0).abs() < 1e-4);
            assert!((&i_b - &i_ex).norm() < 1e-4, "{i_b}");
            assert!((&r_b - &r_ex).norm() <= 1e-3 * r_ex.norm(), "phi={phi} hz={hz} {r_b}");
            assert!((rep.ric - 0.4 * hz * hz).abs() <= 1e-3 * 0.4 * hz * hz);
        }
    }
}

#[test]
fn sublaplacian_and_gradient() {
    for &hz in &[0.0, 0.5, 1.0, 2.0] {
        let (b0, b1, b2) = heis_sublaplacian(1.1, hz, &default_t_grid(hz)).unwrap();
        assert!((b0 - 5.0).abs() < 1e-3 && b1.abs() < 1e-3);
        let e2 = -2.0 / 15.0 * hz * hz;
        assert!((b2 - e2).abs() <= if hz == 0.0 { 1e-3 } else { 1e-2 * e2.abs() });
        let h = unit_covector(1.1, hz);
        let g = cost_gradient_at_origin(h, 0.4, 1e-5);
        for i in 0..3 {
            assert!((g[i] - h[i]).abs() < 1e-6);
        }
    }
}
