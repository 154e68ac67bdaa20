//! Three-dimensional contact sub-Riemannian structures: the Reeb field,
//! structural functions, the invariants `χ` and `κ`, the curvature quadratic
//! form `r_λ` and the small-time conjugate length.
//!
//! Everything is computed exactly on Taylor jets at the base point. The
//! normalized contact form `α` and the Reeb field are rational functions of
//! the frame, so they are represented by their jets of a fixed degree, which is
//! enough for the at-most-second derivatives that enter `χ`, `κ` and `Sec`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::field::PolyVectorField;
use crate::hamflow::{first_conjugate_time, ExtremalState};
use crate::linalg::lstsq;
use crate::model::ControlModel;
use crate::poly::{Coeff, Polynomial, Rational};

/// Degree of the jets of `α`; every derivative costs one degree.
const JET_DEGREE: u32 = 4;

type Jet = Polynomial<Rational>;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn jmul(a: &Jet, b: &Jet) -> Jet {
    a.mul_truncated(b, JET_DEGREE)
}

/// `1/a` for a jet with non-zero constant term.
fn jrecip(a: &Jet) -> Option<Jet> {
    let c0 = a.coeff(&[0, 0, 0]);
    if c0.is_zero() {
        return None;
    }
    let inv0 = Rational::one() / c0.clone();
    // 1/(c0(1 + r)) = (1/c0) Σ (−r)^j
    let r = (a - &Jet::constant(3, c0)).scale(&inv0);
    let mut acc = Jet::constant(3, Rational::one());
    let mut pow = Jet::constant(3, Rational::one());
    for _ in 0..JET_DEGREE {
        pow = jmul(&pow, &-&r);
        acc = &acc + &pow;
    }
    Some(acc.scale(&inv0))
}

/// Derivative of `f` along `v`.
fn along(v: &[Jet], f: &Jet) -> Jet {
    let mut acc = Jet::zero(3);
    for (i, vi) in v.iter().enumerate() {
        acc = &acc + &jmul(vi, &f.derivative(i));
    }
    acc
}

fn bracket(v: &[Jet], w: &[Jet]) -> Vec<Jet> {
    (0..3).map(|i| &along(v, &w[i]) - &along(w, &v[i])).collect()
}

fn cross(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    vec![
        &jmul(&a[1], &b[2]) - &jmul(&a[2], &b[1]),
        &jmul(&a[2], &b[0]) - &jmul(&a[0], &b[2]),
        &jmul(&a[0], &b[1]) - &jmul(&a[1], &b[0]),
    ]
}

fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    a.iter().zip(b).fold(Jet::zero(3), |acc, (x, y)| &acc + &jmul(x, y))
}

fn at0(j: &Jet) -> Rational {
    j.coeff(&[0, 0, 0])
}

/// Structural data of a 3D contact frame at its base point.
#[derive(Clone, Debug)]
pub struct ContactData {
    pub point: Vec<f64>,
    /// Taylor jet of the Reeb field at the point (coordinates centered there).
    pub reeb: PolyVectorField<Rational>,
    /// Jets of `c_ij^k`, indexed `[i][j][k]`, for `[X_i, X_j] = Σ c_ij^k X_k`.
    pub structural: Vec<Vec<Vec<Jet>>>,
    pub chi: f64,
    pub kappa: Rational,
    /// `χ²`, exact.
    pub chi_squared: Rational,
    /// The frame `(X₀, X₁, X₂)` at the point, as columns.
    pub frame_at_point: [[f64; 3]; 3],
    /// Jets of `X₀, X₁, X₂`.
    frame: [Vec<Jet>; 3],
}

impl ContactData {
    /// `c_ij^k` at the point.
    pub fn c(&self, i: usize, j: usize, k: usize) -> Rational {
        at0(&self.structural[i][j][k])
    }

    fn c_f(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c(i, j, k).to_f64()
    }
}

/// Reeb field and structural functions of an oriented orthonormal frame,
/// with the contact form normalized by `dα(X₁, X₂) = 1`.
pub fn contact_structural(model: &ControlModel<Rational>) -> Result<ContactData> {
    contact_structural_with_form(model, None)
}

/// As [`contact_structural`], with an optional prescribed contact form
/// (polynomial components). A prescribed form must annihilate the frame and
/// satisfy `dα(X₁, X₂) = 1` at the point.
pub fn contact_structural_with_form(
    model: &ControlModel<Rational>,
    form: Option<&[Polynomial<Rational>]>,
) -> Result<ContactData> {
    if model.n() != 3 || model.k() != 2 || !model.is_drift_free() {
        return Err(Error::ModelRejected("contact structures need n = 3, two fields and no drift".into()));
    }
    let base: Vec<Rational> =
        model.base_point().iter().map(|&v| Rational::from_f64(v).expect("finite base point")).collect();
    let jet_of = |f: &PolyVectorField<Rational>| -> Vec<Jet> {
        f.components().iter().map(|c| c.translate(&base).truncate(JET_DEGREE)).collect()
    };
    let x1 = jet_of(&model.fields()[0]);
    let x2 = jet_of(&model.fields()[1]);
    let b12 = bracket(&x1, &x2);
    let theta = cross(&x1, &x2);
    let lev = dot(&theta, &b12);
    if at0(&lev).is_zero() {
        return Err(Error::ModelRejected("[X₁, X₂] is tangent to the distribution: not contact".into()));
    }
    // α = −θ/⟨θ, [X₁, X₂]⟩ gives α(Xᵢ) = 0 and dα(X₁, X₂) = −α([X₁, X₂]) = 1.
    let alpha: Vec<Jet> = match form {
        None => {
            let inv = jrecip(&lev).expect("non-zero constant term");
            theta.iter().map(|c| -&jmul(c, &inv)).collect()
        }
        Some(f) => {
            if f.len() != 3 {
                return Err(Error::Dimension("contact form needs 3 components".into()));
            }
            let a: Vec<Jet> = f.iter().map(|c| c.translate(&base).truncate(JET_DEGREE)).collect();
            for (i, x) in [&x1, &x2].iter().enumerate() {
                if !at0(&dot(&a, x)).is_zero() {
                    return Err(Error::ModelRejected(format!("the form does not annihilate X{}", i + 1)));
                }
            }
            let d = -at0(&dot(&a, &b12));
            if d != Rational::one() {
                return Err(Error::ModelRejected(format!(
                    "dα(X₁, X₂) = {} at the point; the frame must satisfy dα(X₁, X₂) = 1",
                    d.to_f64()
                )));
            }
            a
        }
    };
    // The Reeb field spans ker dα, i.e. the curl of α, normalized by α(X₀) = 1.
    let curl = vec![
        &alpha[2].derivative(1) - &alpha[1].derivative(2),
        &alpha[0].derivative(2) - &alpha[2].derivative(0),
        &alpha[1].derivative(0) - &alpha[0].derivative(1),
    ];
    let norm =
        jrecip(&dot(&alpha, &curl)).ok_or_else(|| Error::ModelRejected("α ∧ dα vanishes: not contact".into()))?;
    let x0: Vec<Jet> = curl.iter().map(|c| jmul(c, &norm)).collect();
    let frame = [x0.clone(), x1, x2];
    // Inverse of the frame matrix by cofactors: row k of F⁻¹ is the cross
    // product of the other two columns divided by det F.
    let det = dot(&frame[0], &cross(&frame[1], &frame[2]));
    let det_inv = jrecip(&det).ok_or_else(|| Error::ModelRejected("frame degenerate at the point".into()))?;
    let rows: Vec<Vec<Jet>> = (0..3)
        .map(|k| cross(&frame[(k + 1) % 3], &frame[(k + 2) % 3]).iter().map(|c| jmul(c, &det_inv)).collect())
        .collect();
    let structural: Vec<Vec<Vec<Jet>>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let br = bracket(&frame[i], &frame[j]);
                    (0..3).map(|k| dot(&rows[k], &br)).collect()
                })
                .collect()
        })
        .collect();
    let c = |i: usize, j: usize, k: usize| at0(&structural[i][j][k]);
    // χ² = (c₀₁¹)² + ¼(c₀₂¹ + c₀₁²)²
    let s = c(0, 2, 1) + c(0, 1, 2);
    let chi_squared = c(0, 1, 1) * c(0, 1, 1) + q(1, 4) * s.clone() * s;
    // κ = X₁(c₁₂²) − X₂(c₁₂¹) − (c₁₂¹)² − (c₁₂²)² + ½(c₀₂¹ − c₀₁²)
    let kappa = at0(&along(&frame[1], &structural[1][2][2]))
        - at0(&along(&frame[2], &structural[1][2][1]))
        - c(1, 2, 1) * c(1, 2, 1)
        - c(1, 2, 2) * c(1, 2, 2)
        + q(1, 2) * (c(0, 2, 1) - c(0, 1, 2));
    let mut frame_at_point = [[0.0; 3]; 3];
    for (col, f) in frame.iter().enumerate() {
        for (row, comp) in f.iter().enumerate() {
            frame_at_point[row][col] = at0(comp).to_f64();
        }
    }
    let data = ContactData {
        point: model.base_point().to_vec(),
        reeb: PolyVectorField::new(x0)?,
        structural,
        chi: chi_squared.to_f64().sqrt(),
        kappa,
        chi_squared,
        frame_at_point,
        frame,
    };
    check_invariants(&data)?;
    Ok(data)
}

fn check_invariants(d: &ContactData) -> Result<()> {
    if d.c(1, 2, 0) != q(-1, 1) {
        return Err(Error::ModelRejected(format!("c₁₂⁰ = {} ≠ −1", d.c_f(1, 2, 0))));
    }
    for i in 0..3 {
        if !d.c(i, 0, 0).is_zero() {
            return Err(Error::ModelRejected(format!("c_{i}0⁰ = {} ≠ 0", d.c_f(i, 0, 0))));
        }
    }
    if !(d.c(1, 0, 1) + d.c(2, 0, 2)).is_zero() {
        return Err(Error::ModelRejected("c₁₀¹ + c₂₀² ≠ 0".into()));
    }
    Ok(())
}

/// The invariants at the point.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiKappa {
    pub chi: f64,
    pub kappa: f64,
    /// `κ + χ² − 3/4`.
    pub sec_from_invariants: Rational,
    /// Sectional curvature of `D` for the metric making `(X₀, X₁, X₂)`
    /// orthonormal, from the Levi-Civita connection.
    pub sec_levi_civita: Rational,
}

/// `χ`, `κ` and the sectional curvature of the distribution computed two
/// ways: from the invariants, and from Christoffel symbols
/// `Γ_ij^k = ½(c_ij^k − c_jk^i + c_ki^j)` of the canonical Riemannian metric.
pub fn chi_kappa(d: &ContactData) -> ChiKappa {
    let c = &d.structural;
    let gamma = |i: usize, j: usize, k: usize| -> Jet { (&(&c[i][j][k] - &c[j][k][i]) + &c[k][i][j]).scale(&q(1, 2)) };
    let g = |i: usize, j: usize, k: usize| at0(&gamma(i, j, k));
    let deriv = |i: usize, f: &Jet| at0(&along(&d.frame[i], f));
    // g(∇₁∇₂X₂ − ∇₂∇₁X₂ − ∇_{[X₁,X₂]}X₂, X₁)
    let mut sec = deriv(1, &gamma(2, 2, 1)) - deriv(2, &gamma(1, 2, 1));
    for k in 0..3 {
        sec = sec + g(2, 2, k) * g(1, k, 1) - g(1, 2, k) * g(2, k, 1) - at0(&c[1][2][k]) * g(k, 2, 1);
    }
    ChiKappa {
        chi: d.chi,
        kappa: d.kappa.to_f64(),
        sec_from_invariants: d.kappa.clone() + d.chi_squared.clone() - q(3, 4),
        sec_levi_civita: sec,
    }
}

/// Frame coordinates `(h₀, h₁, h₂)` of a covector given in chart coordinates.
pub fn frame_covector(d: &ContactData, p: &[f64]) -> [f64; 3] {
    let mut h = [0.0; 3];
    for (i, hi) in h.iter_mut().enumerate() {
        *hi = (0..3).map(|r| p[r] * d.frame_at_point[r][i]).sum();
    }
    h
}

/// Chart covector with frame coordinates `h`.
pub fn chart_covector(d: &ContactData, h: [f64; 3]) -> Vec<f64> {
    let f = nalgebra::Matrix3::from_fn(|r, c| d.frame_at_point[r][c]);
    let p = f.transpose().try_inverse().expect("frame is invertible") * nalgebra::Vector3::from(h);
    p.iter().copied().collect()
}

/// `r_λ = h₀² + 2Hκ + (3/2) ∂_θ{H, h₀}` with
/// `{H, h₀} = c₁₀¹h₁² + (c₁₀² + c₂₀¹)h₁h₂ + c₂₀²h₂²`, `h = (h₀, h₁, h₂)`.
pub fn r_lambda(d: &ContactData, h: [f64; 3]) -> f64 {
    let [h0, h1, h2] = h;
    let ham = 0.5 * (h1 * h1 + h2 * h2);
    let a = d.c_f(1, 0, 1);
    let b = d.c_f(1, 0, 2) + d.c_f(2, 0, 1);
    let c = d.c_f(2, 0, 2);
    // ∂_θ h₁ = −h₂, ∂_θ h₂ = h₁
    let dtheta = 2.0 * (c - a) * h1 * h2 + b * (h1 * h1 - h2 * h2);
    h0 * h0 + 2.0 * ham * d.kappa.to_f64() + 1.5 * dtheta
}

/// `r_λ` in the form valid for isotropic frames,
/// `h₀² + κ(h₁² + h₂²) + 3χ(h₁² − h₂²)`.
pub fn r_lambda_isotropic(d: &ContactData, h: [f64; 3]) -> f64 {
    let [h0, h1, h2] = h;
    h0 * h0 + d.kappa.to_f64() * (h1 * h1 + h2 * h2) + 3.0 * d.chi * (h1 * h1 - h2 * h2)
}

/// Fit of the first conjugate length against `|h₀|`.
#[derive(Clone, Debug)]
pub struct ConjugateLengthFit {
    pub h0: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Coefficient of `|h₀|⁻³` in `ℓ − 2π/|h₀|`.
    pub c3: f64,
    /// Coefficient of `|h₀|⁻⁴`.
    pub c4: f64,
    /// `−π κ(x₀)`, the predicted `c3`.
    pub predicted_c3: f64,
    pub residual: f64,
}

impl ConjugateLengthFit {
    /// Relative deviation of the fitted `c3` from `−πκ`.
    pub fn relative_error(&self) -> f64 {
        (self.c3 - self.predicted_c3).abs() / self.predicted_c3.abs().max(f64::MIN_POSITIVE)
    }
}

/// Conjugate lengths of unit-speed geodesics with frame covector
/// `(h₀, cos θ, sin θ)` for each `h₀`, fitted to
/// `2π/|h₀| + c₃/|h₀|³ + c₄/|h₀|⁴`.
pub fn conjugate_length_asymptote(
    model: &ControlModel<Rational>,
    kappa: f64,
    h0_grid: &[f64],
    theta: f64,
) -> Result<ConjugateLengthFit> {
    let d = contact_structural(model)?;
    let fm = model.to_f64();
    let mut lengths = Vec::with_capacity(h0_grid.len());
    for &h0 in h0_grid {
        if h0.abs() < 1.0 {
            return Err(Error::InvalidParam(format!("|h₀| = {} is not in the asymptotic regime", h0.abs())));
        }
        let p = chart_covector(&d, [h0, theta.cos(), theta.sin()]);
        let lam = ExtremalState::new(fm.base_point().to_vec(), p);
        let t_max = 3.0 * std::f64::consts::PI / h0.abs();
        let t = first_conjugate_time(&fm, &lam, t_max)?
            .time
            .ok_or_else(|| Error::Integration {
                t: t_max, reason: format!("no conjugate time found for h₀ = {h0}")
            })?;
        lengths.push(t);
    }
    let rows = h0_grid.len();
    let design = nalgebra::DMatrix::from_fn(rows, 2, |i, j| h0_grid[i].abs().powi(-(3 + j as i32)));
    let rhs = nalgebra::DMatrix::from_fn(rows, 1, |i, _| lengths[i] - 2.0 * std::f64::consts::PI / h0_grid[i].abs());
    // Scale columns so the two unknowns are of comparable size.
    let s3 = design.column(0).amax();
    let s4 = design.column(1).amax();
    let scaled = nalgebra::DMatrix::from_fn(rows, 2, |i, j| design[(i, j)] / if j == 0 { s3 } else { s4 });
    let (x, resid) = lstsq(&scaled, &rhs);
    Ok(ConjugateLengthFit {
        h0: h0_grid.to_vec(),
        lengths,
        c3: x[(0, 0)] / s3,
        c4: x[(1, 0)] / s4,
        predicted_c3: -std::f64::consts::PI * kappa,
        residual: resid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, Params};

    fn perturbed(preset: &str) -> ControlModel<Rational> {
        let mut p = Params::new();
        p.insert("preset".into(), preset.into());
        builtin_model("contact3d_perturbed", &p).unwrap()
    }

    #[test]
    fn heisenberg_structure() {
        let m = builtin_model("heisenberg", &Params::new()).unwrap();
        let d = contact_structural(&m).unwrap();
        // dα(X₁, X₂) = 1 forces [X₁, X₂] = −X₀, so X₀ = −∂z.
        assert_eq!(d.frame_at_point[2][0], -1.0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let v = d.c(i, j, k);
                    match (i, j, k) {
                        (1, 2, 0) => assert_eq!(v, q(-1, 1)),
                        (2, 1, 0) => assert_eq!(v, q(1, 1)),
                        _ => assert!(v.is_zero(), "c_{i}{j}^{k} = {v}"),
                    }
                }
            }
        }
        let ck = chi_kappa(&d);
        assert_eq!(ck.chi, 0.0);
        assert_eq!(ck.kappa, 0.0);
        assert_eq!(ck.sec_levi_civita, q(-3, 4));
        assert_eq!(ck.sec_from_invariants, ck.sec_levi_civita);
        assert_eq!(r_lambda(&d, [1.5, 0.6, 0.8]), 2.25 + 0.0);
    }

    #[test]
    fn perturbed_sec_identity() {
        for preset in ["a", "b", "c"] {
            let d = contact_structural(&perturbed(preset)).unwrap();
            let ck = chi_kappa(&d);
            assert_eq!(ck.sec_from_invariants, ck.sec_levi_civita, "preset {preset}");
        }
    }

    #[test]
    fn prescribed_form_normalization() {
        let m = builtin_model("heisenberg", &Params::new()).unwrap();
        let good = [
            crate::poly::parse_polynomial("-1/2*x2", 3).unwrap(),
            crate::poly::parse_polynomial("1/2*x1", 3).unwrap(),
            crate::poly::parse_polynomial("-1", 3).unwrap(),
        ];
        assert!(contact_structural_with_form(&m, Some(&good)).is_ok());
        let doubled: Vec<_> = good.iter().map(|c| c.scale(&q(2, 1))).collect();
        assert!(matches!(contact_structural_with_form(&m, Some(&doubled)), Err(Error::ModelRejected(_))));
    }

    #[test]
    fn r_on_annihilator() {
        let d = contact_structural(&perturbed("c")).unwrap();
        assert_eq!(r_lambda(&d, [2.0, 0.0, 0.0]), 4.0);
    }
}
