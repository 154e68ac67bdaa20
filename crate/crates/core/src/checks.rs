//! Self-check suites comparing the generic pipeline with the closed-form
//! oracles. Each check records what was expected, what came out and the
//! tolerance used.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contact3d::{chart_covector, chi_kappa, conjugate_length_asymptote, contact_structural, r_lambda};
use crate::error::{Error, Result};
use crate::flag::YoungDiagram;
use crate::hamflow::{first_conjugate_time, ExtremalState};
use crate::heisenberg::{
    default_t_grid, expansion_coefficients, heis_curvature, heis_distance, heis_expansion_check, heis_sublaplacian,
    unit_covector, HeisPoint,
};
use crate::homothety::{volume_exponent, HomothetyJob, OracleModel};
use crate::jacobi::tables::{canonical_tables, omega_coefficient, omega_double_sum};
use crate::jacobi::{curvature_report, residue_crosscheck, FitOptions};
use crate::linalg::{q_identity, q_mul};
use crate::lq::{gramian_quadrature, gramian_series, lq_curvature, LqSystem};
use crate::model::{builtin_model, lq_model, ControlModel, Params};

/// Suite names accepted by [`run_suite`].
pub const SUITES: &[&str] = &["heisenberg", "lq", "contact", "tables", "volume"];

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub tolerance: String,
    pub pass: bool,
}

struct Collector {
    suite: &'static str,
    out: Vec<CheckResult>,
}

impl Collector {
    fn push(
        &mut self,
        name: impl Into<String>,
        expected: impl Into<String>,
        actual: impl Into<String>,
        tol: impl Into<String>,
        pass: bool,
    ) {
        self.out.push(CheckResult {
            suite: self.suite.to_string(),
            name: name.into(),
            expected: expected.into(),
            actual: actual.into(),
            tolerance: tol.into(),
            pass,
        });
    }

    /// Records a failed check for an error raised while computing it.
    fn error(&mut self, name: impl Into<String>, expected: impl Into<String>, e: Error) {
        self.push(name, expected, format!("error: {e}"), "-", false);
    }

    fn rel(&mut self, name: impl Into<String>, expected: f64, actual: f64, tol: f64) {
        let pass = (actual - expected).abs() <= tol * expected.abs();
        self.push(name, format!("{expected:.9}"), format!("{actual:.9}"), format!("{tol:e} rel"), pass);
    }

    fn abs(&mut self, name: impl Into<String>, expected: f64, actual: f64, tol: f64) {
        let pass = (actual - expected).abs() <= tol;
        self.push(name, format!("{expected:.9}"), format!("{actual:.9}"), format!("{tol:e} abs"), pass);
    }
}

/// Runs one suite. Computation errors become failing checks.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckResult>> {
    let suite = SUITES
        .iter()
        .find(|s| **s == name)
        .ok_or_else(|| Error::InvalidParam(format!("unknown suite `{name}`; expected one of {SUITES:?}")))?;
    let mut c = Collector { suite, out: Vec::new() };
    match name {
        "heisenberg" => heisenberg_suite(&mut c, seed),
        "lq" => lq_suite(&mut c, seed),
        "contact" => contact_suite(&mut c, seed),
        "tables" => tables_suite(&mut c),
        "volume" => volume_suite(&mut c, seed),
        _ => unreachable!(),
    }
    Ok(c.out)
}

/// All suites in order.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    SUITES.iter().flat_map(|s| run_suite(s, seed).expect("known suite")).collect()
}

fn builtin_f64(name: &str, params: &[(&str, &str)]) -> Result<ControlModel<f64>> {
    let p: Params = params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    Ok(builtin_model(name, &p)?.to_f64())
}

fn heisenberg_suite(c: &mut Collector, seed: u64) {
    let model = match builtin_f64("heisenberg", &[]) {
        Ok(m) => m,
        Err(e) => return c.error("model", "heisenberg", e),
    };
    for &phi in &[0.0, PI / 4.0, PI / 2.0] {
        for &hz in &[0.5, 1.0, 2.0] {
            let tag = format!("phi={phi:.4} hz={hz}");
            let h = unit_covector(phi, hz);
            let lam = ExtremalState::new(vec![0.0; 3], h.to_vec());
            match curvature_report(&model, &lam, FitOptions::default()) {
                Ok(rep) => {
                    let basis = DMatrix::from_row_slice(2, 2, &[-h[1], h[0], h[0], h[1]]);
                    let r_b = basis.transpose() * &rep.r_matrix * &basis;
                    let (_, r_ex) = heis_curvature(hz);
                    c.abs(format!("I eigenvalue 4 ({tag})"), 4.0, rep.i_eigenvalues[0], 1e-4);
                    c.abs(format!("I eigenvalue 1 ({tag})"), 1.0, rep.i_eigenvalues[1], 1e-4);
                    let dr = (&r_b - &r_ex).norm();
                    c.push(
                        format!("R = (2/5)diag(hz², 0) ({tag})"),
                        format!("{:.9}", r_ex[(0, 0)]),
                        format!("{:.9} (off-block norm {:.2e})", r_b[(0, 0)], dr),
                        "1e-3 rel (Frobenius)",
                        dr <= 1e-3 * r_ex.norm(),
                    );
                    c.rel(format!("Ric ({tag})"), 0.4 * hz * hz, rep.ric, 1e-3);
                }
                Err(e) => c.error(format!("curvature ({tag})"), "I, R", e),
            }
        }
    }
    for &(p1, hz, p2) in &[(0.0, 1.0, PI / 2.0), (0.0, 2.0, PI / 4.0), (0.2, 1.0, 1.2)] {
        let tag = format!("phi1={p1:.3} hz={hz} phi2={p2:.3}");
        match heis_expansion_check(p1, hz, p2) {
            Ok((a0, a1, a2)) => {
                let (e0, e1, e2) = expansion_coefficients(p1, hz, p2);
                for (k, a, e) in [(0, a0, e0), (1, a1, e1), (2, a2, e2)] {
                    if e.abs() > 1e-12 {
                        c.rel(format!("expansion a{k} ({tag})"), e, a, 1e-3);
                    } else {
                        c.abs(format!("expansion a{k} ({tag})"), e, a, 1e-4);
                    }
                }
            }
            Err(e) => c.error(format!("expansion ({tag})"), "a0, a1, a2", e),
        }
    }
    for &hz in &[0.5, 1.0, 2.0] {
        match heis_sublaplacian(0.3, hz, &default_t_grid(hz)) {
            Ok((b0, b1, b2)) => {
                c.abs(format!("sub-Laplacian b0 (hz={hz})"), 5.0, b0, 1e-3);
                c.abs(format!("sub-Laplacian b1 (hz={hz})"), 0.0, b1, 1e-3);
                c.rel(format!("sub-Laplacian b2 (hz={hz})"), -2.0 / 15.0 * hz * hz, b2, 1e-2);
            }
            Err(e) => c.error(format!("sub-Laplacian (hz={hz})"), "b0, b1, b2", e),
        }
    }
    let o = HeisPoint::origin();
    c.abs("d(0, (1,0,0))", 1.0, heis_distance(&o, &HeisPoint::new(1.0, 0.0, 0.0)), 1e-14);
    c.abs("d(0, (0,0,0.3))", (4.0 * PI * 0.3).sqrt(), heis_distance(&o, &HeisPoint::new(0.0, 0.0, 0.3)), 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_hom: f64 = 0.0;
    let mut worst_tri: f64 = f64::NEG_INFINITY;
    for _ in 0..100 {
        let mut pt = || HeisPoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (a, b, x) = (pt(), pt(), pt());
        let alpha = rng.gen_range(0.1..3.0);
        let d = heis_distance(&a, &b);
        worst_hom = worst_hom.max((heis_distance(&a.dilate(alpha), &b.dilate(alpha)) - alpha * d).abs() / (1.0 + d));
        worst_tri = worst_tri.max(d - heis_distance(&a, &x) - heis_distance(&x, &b));
    }
    c.abs("dilation homogeneity (worst of 100)", 0.0, worst_hom, 1e-10);
    c.push("triangle inequality (worst excess of 100)", "≤ 0", format!("{worst_tri:e}"), "1e-12", worst_tri <= 1e-12);
    for &hz in &[1.0, 2.0] {
        let lam = ExtremalState::new(vec![0.0; 3], unit_covector(0.3, hz).to_vec());
        match first_conjugate_time(&model, &lam, 1.5 * 2.0 * PI / hz) {
            Ok(s) => match s.time {
                Some(t) => c.abs(format!("conjugate time (hz={hz})"), 2.0 * PI / hz, t, 1e-6),
                None => c.push(format!("conjugate time (hz={hz})"), "2π/|hz|", "none found", "1e-6", false),
            },
            Err(e) => c.error(format!("conjugate time (hz={hz})"), "2π/|hz|", e),
        }
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A random controllable pair with entries in `[−1, 1]`.
pub fn random_controllable_pair(rng: &mut ChaCha8Rng, n: usize, k: usize) -> LqSystem {
    loop {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0));
        if let Ok(s) = LqSystem::new(a, b) {
            if lq_curvature(&s).is_ok() {
                return s;
            }
        }
    }
}

fn lq_compare(c: &mut Collector, tag: &str, sys: &LqSystem, p: Vec<f64>) {
    let closed = match lq_curvature(sys) {
        Ok(v) => v,
        Err(e) => return c.error(format!("closed form ({tag})"), "I, R", e),
    };
    let model = match lq_model(&rows(sys.a()), &rows(sys.b())) {
        Ok(m) => m.to_f64(),
        Err(e) => return c.error(format!("model ({tag})"), "lq model", e),
    };
    let n = sys.n();
    match curvature_report(&model, &ExtremalState::new(vec![0.0; n], p), FitOptions::default()) {
        Ok(rep) => {
            let di = (&rep.i_matrix - &closed.i_matrix).norm() / closed.i_matrix.norm();
            let dr = (&rep.r_matrix - &closed.r_matrix).norm() / closed.r_matrix.norm().max(1.0);
            c.push(format!("I generic vs closed form ({tag})"), "0", format!("{di:e}"), "1e-6 rel", di <= 1e-6);
            c.push(
                format!("R generic vs closed form ({tag})"),
                "0",
                format!("{dr:e}"),
                "1e-6 rel (floor 1)",
                dr <= 1e-6,
            );
        }
        Err(e) => c.error(format!("generic pipeline ({tag})"), "I, R", e),
    }
    let mut expect: Vec<f64> = sys.kronecker_indices().iter().map(|&r| (r * r) as f64).collect();
    expect.sort_by(|a, b| b.total_cmp(a));
    let got = crate::linalg::sym_eigenvalues_desc(&closed.i_matrix);
    let err = expect.iter().zip(&got).map(|(e, g)| (e - g).abs()).fold(0.0, f64::max);
    c.push(
        format!("I eigenvalues = squared Kronecker indices ({tag})"),
        format!("{expect:?}"),
        format!("{got:?}"),
        "1e-9",
        err <= 1e-9 && expect.len() == got.len(),
    );
    for t in [0.5, 2.0] {
        match (gramian_series(sys, t), gramian_quadrature(sys, t)) {
            (Ok((s, _)), Ok(q)) => {
                let d = (&s - &q).norm() / s.norm();
                c.push(
                    format!("Gramian series vs quadrature t={t} ({tag})"),
                    "0",
                    format!("{d:e}"),
                    "1e-10 rel",
                    d <= 1e-10,
                );
            }
            (Err(e), _) | (_, Err(e)) => c.error(format!("Gramian t={t} ({tag})"), "C(t)", e),
        }
    }
}

fn lq_suite(c: &mut Collector, seed: u64) {
    let di = LqSystem::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]], &[vec![0.0], vec![1.0]]);
    let ti = LqSystem::from_rows(
        &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]],
        &[vec![0.0], vec![0.0], vec![1.0]],
    );
    match di {
        Ok(s) => lq_compare(c, "double integrator", &s, vec![1.0, 0.5]),
        Err(e) => c.error("double integrator", "controllable", e),
    }
    match ti {
        Ok(s) => lq_compare(c, "triple integrator", &s, vec![0.3, -1.0, 0.5]),
        Err(e) => c.error("triple integrator", "controllable", e),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (n, k) in [(3, 1), (4, 2), (4, 1)] {
        let sys = random_controllable_pair(&mut rng, n, k);
        let p = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        lq_compare(c, &format!("random n={n} k={k}"), &sys, p);
    }
}

fn contact_suite(c: &mut Collector, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for preset in ["a", "b", "c"] {
        let p: Params = [("preset".to_string(), preset.to_string())].into_iter().collect();
        let model = match builtin_model("contact3d_perturbed", &p) {
            Ok(m) => m,
            Err(e) => return c.error(format!("model {preset}"), "contact model", e),
        };
        let d = match contact_structural(&model) {
            Ok(d) => d,
            Err(e) => return c.error(format!("structure {preset}"), "contact frame", e),
        };
        let ck = chi_kappa(&d);
        c.push(
            format!("Sec = κ + χ² − 3/4 (preset {preset})"),
            ck.sec_levi_civita.to_string(),
            ck.sec_from_invariants.to_string(),
            "exact",
            ck.sec_levi_civita == ck.sec_from_invariants,
        );
        let fm = model.to_f64();
        let mut worst: f64 = 0.0;
        let mut failure = None;
        for _ in 0..20 {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = rng.gen_range(0.5..1.5);
            let h = [rng.gen_range(-2.0..2.0), rho * th.cos(), rho * th.sin()];
            let lam = ExtremalState::new(vec![0.0; 3], chart_covector(&d, h));
            match curvature_report(&fm, &lam, FitOptions::default()) {
                Ok(rep) => {
                    let r = 0.4 * r_lambda(&d, h);
                    worst = worst.max((rep.ric - r).abs() / r.abs().max(1e-12));
                }
                Err(e) => failure = Some(e),
            }
        }
        match failure {
            Some(e) => c.error(format!("Ric = (2/5)r (preset {preset})"), "0", e),
            None => c.push(
                format!("Ric = (2/5)r, worst of 20 (preset {preset})"),
                "0",
                format!("{worst:e}"),
                "1e-4 rel",
                worst <= 1e-4,
            ),
        }
        let grid: Vec<f64> = (0..7).map(|i| 10.0 + 5.0 * i as f64).collect();
        match conjugate_length_asymptote(&model, ck.kappa, &grid, 0.3) {
            Ok(f) => c.rel(format!("conjugate length c3 = −πκ (preset {preset})"), f.predicted_c3, f.c3, 0.05),
            Err(e) => c.error(format!("conjugate length (preset {preset})"), "−πκ", e),
        }
    }
}

fn tables_suite(c: &mut Collector) {
    let mut bad = Vec::new();
    for n in 1..=8 {
        for m in 1..=n {
            let d = YoungDiagram { rows: if m == n { vec![n] } else { vec![n, m] } };
            match canonical_tables(&d) {
                Some(t) if q_mul(&t.s_hat, &t.s_hat_inv) == q_identity(t.boxes.len()) => {}
                _ => bad.push(d.rows.clone()),
            }
        }
    }
    c.push(
        "Ŝ·Ŝ⁻¹ = I, rows ≤ 8",
        "all 36 diagrams",
        format!("{} failures {bad:?}", bad.len()),
        "exact",
        bad.is_empty(),
    );
    let mut bad = Vec::new();
    for n in 1..=8 {
        for m in 1..=8 {
            if omega_double_sum(n, m) != omega_coefficient(n, m) {
                bad.push((n, m));
            }
        }
    }
    c.push(
        "Ω double sum = closed form, 1 ≤ n, m ≤ 8",
        "64 pairs",
        format!("{} failures {bad:?}", bad.len()),
        "exact",
        bad.is_empty(),
    );
    let cases: [(&str, &[(&str, &str)], Vec<f64>, Vec<f64>); 3] = [
        ("heisenberg", &[], vec![0.0, 1.0, 1.0], vec![4.0, 1.0]),
        ("euclidean", &[], vec![1.0, 0.0], vec![1.0, 1.0]),
        ("lq", &[("preset", "double_integrator")], vec![1.0, 0.5], vec![4.0]),
    ];
    for (name, params, p, expect) in cases {
        let res = builtin_f64(name, params).and_then(|m| {
            let x0 = m.base_point().to_vec();
            residue_crosscheck(&m, &ExtremalState::new(x0, p), FitOptions::default())
        });
        match res {
            Ok(f) => {
                let err = f.d_eigenvalues.iter().zip(&expect).map(|(g, e)| (g - e).abs() / e).fold(0.0, f64::max);
                c.push(
                    format!("residue D eigenvalues ({name})"),
                    format!("{expect:?}"),
                    format!("{:?}", f.d_eigenvalues),
                    "1e-4 rel",
                    err <= 1e-4 && f.d_eigenvalues.len() == expect.len(),
                );
            }
            Err(e) => c.error(format!("residue ({name})"), format!("{expect:?}"), e),
        }
    }
}

fn volume_suite(c: &mut Collector, seed: u64) {
    for (model, tol) in
        [(OracleModel::Heisenberg, 0.1), (OracleModel::Euclidean(2), 0.05), (OracleModel::Sphere2, 0.05)]
    {
        let job = HomothetyJob::standard(model, seed);
        let target = model.geodesic_dimension() as f64;
        match (volume_exponent(&job), volume_exponent(&job)) {
            (Ok(a), Ok(b)) => {
                c.abs(format!("volume exponent ({model:?}, seed {seed})"), target, a.slope, tol);
                c.push(
                    format!("volume exponent reproducible ({model:?})"),
                    format!("{}", a.slope),
                    format!("{}", b.slope),
                    "bitwise",
                    a == b,
                );
                c.push(
                    format!("μ(Ω_t) increasing in t ({model:?})"),
                    "increasing",
                    format!("{:?}", a.volumes.iter().map(|v| v.1).collect::<Vec<_>>()),
                    "-",
                    a.is_monotone(),
                );
            }
            (Err(e), _) | (_, Err(e)) => c.error(format!("volume exponent ({model:?})"), format!("{target}"), e),
        }
    }
}
