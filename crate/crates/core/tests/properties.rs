//! Randomized invariants over the built-in models.

use proptest::prelude::*;
use srcurv::field::{lie_bracket, PolyVectorField};
use srcurv::flag::{extremal_series, feedback_transform, growth_vector, growth_vector_of_curve, Feedback};
use srcurv::hamflow::{symplectic_j, variational_flow, ExtremalState, Hamiltonian};
use srcurv::jacobi::{curvature_report, FitOptions};
use srcurv::model::{builtin_model, ControlModel, Params};
use srcurv::poly::{parse_polynomial, Coeff, Polynomial, Rational};

/// Lower bound on the error budget for homogeneity: below it the fit residual
/// no longer dominates and integration error sets the agreement.
const HOMOGENEITY_FLOOR: f64 = 1e-9;

fn model(name: &str, params: &[(&str, &str)]) -> ControlModel<Rational> {
    let p: Params = params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    builtin_model(name, &p).unwrap()
}

fn builtins() -> Vec<ControlModel<Rational>> {
    vec![
        model("heisenberg", &[]),
        model("contact3d_perturbed", &[("preset", "a")]),
        model("contact3d_perturbed", &[("preset", "b")]),
        model("contact3d_perturbed", &[("preset", "c")]),
        model("lq", &[("preset", "double_integrator")]),
        model("lq", &[("preset", "triple_integrator")]),
        model("sphere2", &[]),
        model("euclidean", &[("n", "3")]),
        model("carnot36", &[]),
    ]
}

fn poly3() -> impl Strategy<Value = Polynomial<Rational>> {
    prop::collection::vec(((0u32..3, 0u32..3, 0u32..3), -5i64..6, 1i64..4), 0..4).prop_map(|terms| {
        Polynomial::from_terms(
            3,
            terms.into_iter().map(|((a, b, c), n, d)| (vec![a, b, c], Rational::from_ratio(n, d))),
        )
    })
}

fn field3() -> impl Strategy<Value = PolyVectorField<Rational>> {
    prop::collection::vec(poly3(), 3).prop_map(|c| PolyVectorField::new(c).unwrap())
}

/// A covector away from zero with a nonzero horizontal part.
fn covector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_filter("away from zero", |v| {
        let r: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        r > 0.3 && v[0].abs() + v[1.min(v.len() - 1)].abs() > 0.2
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jacobi_identity(a in field3(), b in field3(), c in field3()) {
        let ab_c = lie_bracket(&lie_bracket(&a, &b).unwrap(), &c).unwrap();
        let bc_a = lie_bracket(&lie_bracket(&b, &c).unwrap(), &a).unwrap();
        let ca_b = lie_bracket(&lie_bracket(&c, &a).unwrap(), &b).unwrap();
        prop_assert!(ab_c.add(&bc_a).unwrap().add(&ca_b).unwrap().is_zero());
    }

    #[test]
    fn print_reparse_round_trip(p in poly3()) {
        let text = p.to_string();
        prop_assert_eq!(parse_polynomial(&text, 3).unwrap(), p);
    }

    #[test]
    fn symplectic_and_energy(idx in 0usize..9, p in covector(6), t in 0.1f64..1.0) {
        let m = builtins()[idx].to_f64();
        let n = m.n();
        let lam = ExtremalState::new(m.base_point().to_vec(), p[..n].to_vec());
        let traj = variational_flow(&m, &lam, t, 1e-12).unwrap();
        let fr = traj.frame(t).unwrap();
        let j = symplectic_j(n);
        let defect = (fr.m.transpose() * &j * &fr.m - &j).amax();
        prop_assert!(defect < 1e-8, "{}: defect {defect:e}", m.name());
        let h = Hamiltonian::new(&m);
        let drift = (h.value(&traj.state(t).unwrap()) - h.value(&lam)).abs();
        prop_assert!(drift < 1e-10 * (1.0 + h.value(&lam).abs()), "{}: energy drift {drift:e}", m.name());
    }

    #[test]
    fn flag_inequalities(idx in 0usize..9, p in covector(6)) {
        let m = builtins()[idx].to_f64();
        let n = m.n();
        let lam = ExtremalState::new(m.base_point().to_vec(), p[..n].to_vec());
        let gv = growth_vector(&m, &lam, 0.0, n + 1).unwrap();
        prop_assert!(gv.check_invariants(n).is_ok(), "{}: {:?}", m.name(), gv.ks);
    }

    #[test]
    fn feedback_invariance(idx in 0usize..9, p in covector(6), angle in 0.0f64..6.0, s in 1i64..4) {
        let exact = &builtins()[idx];
        let m = exact.to_f64();
        let (n, k) = (m.n(), m.k());
        // Polynomial mixing Φ = s·I + x₁·N with a constant rotation when k ≥ 2.
        let mut fb = Feedback::identity(n, k);
        let (c, sn) = ((angle.cos() * 8.0).round() as i64, (angle.sin() * 8.0).round() as i64);
        for i in 0..k {
            for j in 0..k {
                let mut v = if i == j { Rational::from_ratio(s, 1) } else { Rational::from_ratio(0, 1) };
                if k >= 2 && i < 2 && j < 2 {
                    let r = [[c, -sn], [sn, c]][i][j];
                    v = v + Rational::from_ratio(r, 8);
                }
                let mut poly = Polynomial::constant(n, v);
                if i == 0 && j == k - 1 && k >= 2 {
                    poly = &poly + &Polynomial::var(n, 0);
                }
                fb.mix[i][j] = poly;
            }
        }
        fb.shift[0] = Polynomial::var(n, n - 1);
        let Ok(tm) = feedback_transform(exact, &fb) else {
            // Φ(x₀) singular for this draw.
            return Ok(());
        };
        let lam = ExtremalState::new(m.base_point().to_vec(), p[..n].to_vec());
        let depth = n + 1;
        let (xs, us) = extremal_series(&m, &lam, 0.0, depth + 2).unwrap();
        let us2 = fb.transform_controls(&xs, &us).unwrap();
        let g1 = growth_vector_of_curve(&m, &xs, &us, depth, 0.0).unwrap();
        let g2 = growth_vector_of_curve(&tm.to_f64(), &xs, &us2, depth, 0.0).unwrap();
        prop_assert_eq!(g1.ks, g2.ks);
    }

    #[test]
    fn homogeneity(idx in prop::sample::select(vec![0usize, 1, 2, 3, 6, 7, 8]), p in covector(6), alpha in 0.5f64..2.0) {
        let m = builtins()[idx].to_f64();
        let n = m.n();
        let p = p[..n].to_vec();
        let x0 = m.base_point().to_vec();
        let a = curvature_report(&m, &ExtremalState::new(x0.clone(), p.clone()), FitOptions::default()).unwrap();
        let pa: Vec<f64> = p.iter().map(|v| v * alpha).collect();
        let b = curvature_report(&m, &ExtremalState::new(x0, pa), FitOptions::default()).unwrap();
        let res = a.residual.max(b.residual).max(HOMOGENEITY_FLOOR);
        let di = (&b.i_matrix - &a.i_matrix).norm() / a.i_matrix.norm();
        let scale = a.r_matrix.norm().max(1.0) * alpha * alpha;
        let dr = (&b.r_matrix - &a.r_matrix * (alpha * alpha)).norm() / scale;
        prop_assert!(di <= 10.0 * res, "{}: I {di:e} vs residual {res:e}", m.name());
        prop_assert!(dr <= 10.0 * res, "{}: R {dr:e} vs residual {res:e}", m.name());
    }
}

#[test]
fn heisenberg_growth_is_generic() {
    use rand::{Rng, SeedableRng};
    let m = model("heisenberg", &[]).to_f64();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut seen = 0;
    while seen < 100 {
        // Uniform on the unit sphere of covectors.
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(r > 0.1 && r <= 1.0) {
            continue;
        }
        let p: Vec<f64> = v.iter().map(|x| x / r).collect();
        if p[0].abs() + p[1].abs() < 1e-6 {
            continue;
        }
        let gv = growth_vector(&m, &ExtremalState::new(vec![0.0; 3], p), 0.0, 4).unwrap();
        assert_eq!(gv.ks, vec![2, 3]);
        seen += 1;
    }
}

#[test]
fn identity_feedback_is_identity() {
    for m in builtins() {
        let fb = Feedback::identity(m.n(), m.k());
        let t = feedback_transform(&m, &fb).unwrap();
        for (a, b) in m.fields().iter().zip(t.fields()) {
            assert_eq!(a, b);
        }
    }
}
