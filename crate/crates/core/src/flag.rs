//! Flag and growth vector of admissible curves, Young diagrams and the
//! geodesic dimension.
//!
//! Along a curve with control `u(t)` the linearized system has matrices
//! `A(t) = ∂f₀/∂x + Σ uᵢ ∂fᵢ/∂x` and `B(t) = [f₁ … f_k]` evaluated on the
//! curve. The flag is spanned by `B₁ = B`, `B_{i+1} = A Bᵢ − Ḃᵢ`. Everything is
//! propagated as Taylor series in time so that `Ḃᵢ` is exact.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{lie_bracket, PolyVectorField};
use crate::hamflow::{ExtremalState, Hamiltonian};
use crate::linalg::{numerical_rank, RankField};
use crate::model::ControlModel;
use crate::poly::{Coeff, Polynomial, Rational};
use crate::series::{self, MatSeries};
use crate::taylor::{PolySystem, Tape};

/// Relative singular-value threshold of rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Minimal ratio between kept and dropped singular values.
pub const RANK_GAP: f64 = 10.0;

/// Dimensions `k₁ < k₂ < …` of the flag of a curve at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthVector {
    pub ks: Vec<usize>,
    pub t: f64,
    /// Relative tolerance used for numerical ranks (0 for exact ranks).
    pub rank_tol: f64,
}

impl GrowthVector {
    /// Differences `dᵢ = kᵢ − k_{i−1}` with `k₀ = 0`.
    pub fn differences(&self) -> Vec<usize> {
        let mut prev = 0;
        self.ks
            .iter()
            .map(|&k| {
                let d = k - prev;
                prev = k;
                d
            })
            .collect()
    }

    pub fn is_ample(&self, n: usize) -> bool {
        self.ks.last() == Some(&n)
    }

    /// Checks `0 < k₁ ≤ … ≤ n`, strict growth and non-increasing differences
    /// `d_{i+1} ≤ dᵢ`.
    pub fn check_invariants(&self, n: usize) -> std::result::Result<(), String> {
        if self.ks.is_empty() || self.ks[0] == 0 {
            return Err(format!("{:?}: first entry must be positive", self.ks));
        }
        if self.ks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("{:?}: not strictly increasing", self.ks));
        }
        if *self.ks.last().unwrap() > n {
            return Err(format!("{:?}: exceeds dimension {n}", self.ks));
        }
        let d = self.differences();
        if d.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("{:?}: differences {d:?} increase", self.ks));
        }
        Ok(())
    }
}

/// Row lengths `n₁ ≥ n₂ ≥ … ≥ n_k` of the Young diagram of a flag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct YoungDiagram {
    pub rows: Vec<usize>,
}

impl YoungDiagram {
    /// The conjugate partition of the column heights `d₁ ≥ d₂ ≥ …`.
    pub fn from_columns(d: &[usize]) -> Self {
        let k = d.first().copied().unwrap_or(0);
        let rows = (1..=k).map(|a| d.iter().filter(|&&di| di >= a).count()).collect();
        Self { rows }
    }

    pub fn size(&self) -> usize {
        self.rows.iter().sum()
    }

    /// `Σ n_a²`, the trace of `I_λ`.
    pub fn trace(&self) -> usize {
        self.rows.iter().map(|r| r * r).sum()
    }
}

/// Young diagram, geodesic dimension `N = Σ (2i−1) dᵢ` and `Σ n_a²`.
pub fn young_diagram_and_dimension(gv: &GrowthVector, n: usize) -> Result<(YoungDiagram, usize, usize)> {
    if !gv.is_ample(n) {
        return Err(Error::NotAmple(gv.ks.clone()));
    }
    let d = gv.differences();
    let yd = YoungDiagram::from_columns(&d);
    let dim = d.iter().enumerate().map(|(i, di)| (2 * i + 1) * di).sum();
    let tr = yd.trace();
    Ok((yd, dim, tr))
}

/// `A(t)` and `B(t)` along the normal extremal from `λ₀`.
pub fn linearization_matrices(
    model: &ControlModel<f64>,
    lambda0: &ExtremalState,
    t: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let h = Hamiltonian::new(model);
    let s = if t == 0.0 { lambda0.clone() } else { h.integrate(lambda0, t, 1e-13)?.state(t)? };
    let u = h.controls(&s);
    let n = model.n();
    let mut a = DMatrix::zeros(n, n);
    if let Some(f0) = model.drift() {
        a += jacobian_at(f0, &s.x);
    }
    for (f, ui) in model.fields().iter().zip(&u) {
        a += jacobian_at(f, &s.x) * *ui;
    }
    Ok((a, model.frame_at(&s.x)))
}

fn jacobian_at(f: &PolyVectorField<f64>, x: &[f64]) -> DMatrix<f64> {
    let n = f.dim();
    let jac = f.jacobian();
    DMatrix::from_fn(n, n, |i, j| jac[i][j].eval_f64(x))
}

/// Series of `A(s)` and `B(s)` along a curve given by its state series and
/// control series.
fn linearization_series(
    model: &ControlModel<f64>,
    x_series: &[Vec<f64>],
    u_series: &[Vec<f64>],
) -> (MatSeries, MatSeries) {
    let n = model.n();
    let k = model.k();
    let jac_tape = |f: &PolyVectorField<f64>| {
        let polys: Vec<Polynomial<f64>> = f.jacobian().into_iter().flatten().collect();
        let tape = Tape::compile(&polys.iter().collect::<Vec<_>>());
        series::from_entries(n, n, &tape.eval_series(x_series))
    };
    let order = x_series.len();
    let mut a: MatSeries = vec![DMatrix::zeros(n, n); order];
    if let Some(f0) = model.drift() {
        a = jac_tape(f0);
    }
    for (i, f) in model.fields().iter().enumerate() {
        let ji = jac_tape(f);
        // Scalar series times matrix series.
        for kk in 0..order.min(u_series.len()) {
            let mut acc = DMatrix::zeros(n, n);
            for j in 0..=kk {
                acc += &ji[j] * u_series[kk - j][i];
            }
            a[kk] += acc;
        }
    }
    let cols: Vec<Polynomial<f64>> =
        (0..n).flat_map(|r| model.fields().iter().map(move |f| f.component(r).clone())).collect();
    let tape = Tape::compile(&cols.iter().collect::<Vec<_>>());
    let b = series::from_entries(n, k, &tape.eval_series(x_series));
    (a, b)
}

/// Growth vector of the curve whose state and control Taylor series at the
/// evaluation time are given. `depth_max` bounds the number of flag steps.
pub fn growth_vector_of_curve(
    model: &ControlModel<f64>,
    x_series: &[Vec<f64>],
    u_series: &[Vec<f64>],
    depth_max: usize,
    t: f64,
) -> Result<GrowthVector> {
    let n = model.n();
    if x_series.len() < depth_max + 1 || u_series.len() < depth_max + 1 {
        return Err(Error::InvalidParam("series too short for the requested depth".into()));
    }
    let (a, b1) = linearization_series(model, x_series, u_series);
    let mut blocks: Vec<DMatrix<f64>> = vec![b1[0].clone()];
    let mut ks = Vec::new();
    let mut bi = b1;
    loop {
        let stacked = DMatrix::from_columns(
            &blocks
                .iter()
                .flat_map(|m| m.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        let dec = numerical_rank(&stacked, RANK_TOL, RANK_GAP);
        if dec.indeterminate {
            return Err(Error::RankIndeterminate {
                sigma_kept: dec.singular_values[dec.rank - 1],
                sigma_dropped: dec.singular_values[dec.rank],
            });
        }
        if ks.last() == Some(&dec.rank) {
            break;
        }
        ks.push(dec.rank);
        if dec.rank == n || ks.len() >= depth_max || bi.len() < 2 {
            break;
        }
        bi = series::sub(&series::mul(&a, &bi), &series::derivative(&bi));
        blocks.push(bi[0].clone());
    }
    Ok(GrowthVector { ks, t, rank_tol: RANK_TOL })
}

/// State and control series of the normal extremal from `λ₀` around time `t`.
pub fn extremal_series(
    model: &ControlModel<f64>,
    lambda0: &ExtremalState,
    t: f64,
    order: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let h = Hamiltonian::new(model);
    let s = if t == 0.0 { lambda0.clone() } else { h.integrate(lambda0, t, 1e-13)?.state(t)? };
    let z = h.system().series(&s.to_vec(), order);
    let n = model.n();
    let x_series: Vec<Vec<f64>> = z.iter().map(|zk| zk[..n].to_vec()).collect();
    let ctape = Tape::compile(&h.control_polynomials().iter().collect::<Vec<_>>());
    let u_by_control = ctape.eval_series(&z);
    let u_series: Vec<Vec<f64>> = (0..=order).map(|kk| u_by_control.iter().map(|u| u[kk]).collect()).collect();
    Ok((x_series, u_series))
}

/// The matrices `B₁(t), …, B_depth(t)` along the normal extremal from `λ₀`.
pub fn flag_matrices(
    model: &ControlModel<f64>,
    lambda0: &ExtremalState,
    t: f64,
    depth: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let (xs, us) = extremal_series(model, lambda0, t, depth + 1)?;
    let (a, mut bi) = linearization_series(model, &xs, &us);
    let mut out = vec![bi[0].clone()];
    for _ in 1..depth {
        bi = series::sub(&series::mul(&a, &bi), &series::derivative(&bi));
        out.push(bi[0].clone());
    }
    Ok(out)
}

/// Growth vector at time `t` of the normal extremal from `λ₀`.
pub fn growth_vector(
    model: &ControlModel<f64>,
    lambda0: &ExtremalState,
    t: f64,
    depth_max: usize,
) -> Result<GrowthVector> {
    if depth_max == 0 {
        return Err(Error::InvalidParam("depth_max must be at least 1".into()));
    }
    let (x_series, u_series) = extremal_series(model, lambda0, t, depth_max + 2)?;
    growth_vector_of_curve(model, &x_series, &u_series, depth_max, t)
}

/// Recomputes the growth vector at five jittered times in `[0, eps]`;
/// returns whether they all agree and the vectors found.
pub fn equiregularity(
    model: &ControlModel<f64>,
    lambda0: &ExtremalState,
    eps: f64,
    depth_max: usize,
) -> Result<(bool, Vec<GrowthVector>)> {
    let times = [0.0, 0.173, 0.419, 0.661, 0.937].map(|f| f * eps);
    let gvs = times.iter().map(|&t| growth_vector(model, lambda0, t, depth_max)).collect::<Result<Vec<_>>>()?;
    let same = gvs.windows(2).all(|w| w[0].ks == w[1].ks);
    Ok((same, gvs))
}

/// Flag at the base point of the curve with constant control `u`, from exact
/// iterated brackets `L_T^j fᵢ`, `T = f₀ + Σ uᵢ fᵢ`.
pub fn flag_from_brackets(model: &ControlModel<Rational>, u: &[Rational], depth_max: usize) -> Result<GrowthVector> {
    if u.len() != model.k() {
        return Err(Error::Dimension(format!("{} controls for rank {}", u.len(), model.k())));
    }
    let x0: Vec<Rational> =
        model.base_point().iter().map(|&v| Rational::from_f64(v).expect("finite base point")).collect();
    let t = model.constant_control_field(u);
    let mut level: Vec<PolyVectorField<Rational>> = model.fields().to_vec();
    let mut span: Vec<Vec<Rational>> = level.iter().map(|f| f.eval(&x0)).collect();
    let mut ks = vec![Rational::rank(&span)];
    while ks.len() < depth_max && *ks.last().unwrap() < model.n() {
        level = level.iter().map(|f| lie_bracket(&t, f)).collect::<Result<Vec<_>>>()?;
        span.extend(level.iter().map(|f| f.eval(&x0)));
        let r = Rational::rank(&span);
        if r == *ks.last().unwrap() {
            break;
        }
        ks.push(r);
    }
    Ok(GrowthVector { ks, t: 0.0, rank_tol: 0.0 })
}

/// State and control series of the constant-control curve from the base point.
pub fn constant_control_series(model: &ControlModel<f64>, u: &[f64], order: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let t = model.constant_control_field(u);
    let sys = PolySystem::new(t.components());
    let xs = sys.series(model.base_point(), order);
    let mut us = vec![vec![0.0; u.len()]; order + 1];
    us[0] = u.to_vec();
    (xs, us)
}

/// A state feedback: new fields `f'ⱼ = Σᵢ Φᵢⱼ(x) fᵢ` and drift
/// `f'₀ = f₀ + Σᵢ φᵢ(x) fᵢ`. In terms of controls this is
/// `u' = Φ⁻¹(u − φ)`, the same admissible curves.
#[derive(Clone, Debug)]
pub struct Feedback {
    /// `φ`, one polynomial per control.
    pub shift: Vec<Polynomial<Rational>>,
    /// `Φ` as `k × k` polynomials, row-major.
    pub mix: Vec<Vec<Polynomial<Rational>>>,
}

impl Feedback {
    pub fn identity(n: usize, k: usize) -> Self {
        let mix =
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| {
                            if i == j {
                                Polynomial::constant(n, Rational::from_ratio(1, 1))
                            } else {
                                Polynomial::zero(n)
                            }
                        })
                        .collect()
                })
                .collect();
        Self { shift: vec![Polynomial::zero(n); k], mix }
    }

    /// Transformed controls along a curve, as series.
    pub fn transform_controls(&self, x_series: &[Vec<f64>], u_series: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let k = self.mix.len();
        let len = x_series.len().min(u_series.len());
        let flat: Vec<Polynomial<f64>> = self.mix.iter().flatten().map(Polynomial::to_f64).collect();
        let phi =
            series::from_entries(k, k, &Tape::compile(&flat.iter().collect::<Vec<_>>()).eval_series(&x_series[..len]));
        let shift: Vec<Polynomial<f64>> = self.shift.iter().map(Polynomial::to_f64).collect();
        let sh =
            series::from_entries(k, 1, &Tape::compile(&shift.iter().collect::<Vec<_>>()).eval_series(&x_series[..len]));
        let u: MatSeries = u_series[..len].iter().map(|uk| DMatrix::from_column_slice(k, 1, uk)).collect();
        let inv = series::inverse(&phi)
            .ok_or_else(|| Error::ModelRejected("feedback matrix singular on the curve".into()))?;
        let out = series::mul(&inv, &series::sub(&u, &sh));
        Ok(out.iter().map(|c| c.column(0).iter().copied().collect()).collect())
    }
}

/// Applies a state feedback to a model (see [`Feedback`]).
pub fn feedback_transform(model: &ControlModel<Rational>, fb: &Feedback) -> Result<ControlModel<Rational>> {
    let k = model.k();
    let n = model.n();
    if fb.mix.len() != k || fb.mix.iter().any(|r| r.len() != k) || fb.shift.len() != k {
        return Err(Error::Dimension(format!("feedback must be {k} × {k} with {k} shifts")));
    }
    let x0: Vec<Rational> =
        model.base_point().iter().map(|&v| Rational::from_f64(v).expect("finite base point")).collect();
    let at_x0: Vec<Vec<Rational>> = fb.mix.iter().map(|r| r.iter().map(|p| p.eval(&x0)).collect()).collect();
    if Rational::rank(&at_x0) < k {
        return Err(Error::ModelRejected("feedback matrix is singular at the base point".into()));
    }
    let fields = (0..k)
        .map(|j| {
            let mut acc = PolyVectorField::zero(n);
            for i in 0..k {
                acc = acc.add(&model.fields()[i].mul_fn(&fb.mix[i][j]))?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut drift = model.drift().cloned().unwrap_or_else(|| PolyVectorField::zero(n));
    for i in 0..k {
        drift = drift.add(&model.fields()[i].mul_fn(&fb.shift[i]))?;
    }
    ControlModel::new(model.name(), Some(drift), fields, model.base_point().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, parse_builtin_spec, Params};

    #[test]
    fn young_diagrams() {
        let gv = |ks: Vec<usize>| GrowthVector { ks, t: 0.0, rank_tol: 0.0 };
        let (yd, dim, tr) = young_diagram_and_dimension(&gv(vec![2, 3]), 3).unwrap();
        assert_eq!((yd.rows, dim, tr), (vec![2, 1], 5, 5));
        let (yd, dim, tr) = young_diagram_and_dimension(&gv(vec![1, 2]), 2).unwrap();
        assert_eq!((yd.rows, dim, tr), (vec![2], 4, 4));
        let (yd, dim, _) = young_diagram_and_dimension(&gv(vec![4]), 4).unwrap();
        assert_eq!((yd.rows, dim), (vec![1, 1, 1, 1], 4));
        assert!(young_diagram_and_dimension(&gv(vec![2]), 3).is_err());
    }

    #[test]
    fn heisenberg_growth() {
        let m = builtin_model("heisenberg", &Params::new()).unwrap();
        let mf = m.to_f64();
        let s = ExtremalState::new(vec![0.0; 3], vec![0.6, 0.8, 1.3]);
        assert_eq!(growth_vector(&mf, &s, 0.0, 6).unwrap().ks, vec![2, 3]);
        assert_eq!(growth_vector(&mf, &s, 0.7, 6).unwrap().ks, vec![2, 3]);
        let one = Rational::from_ratio(1, 1);
        let zero = Rational::from_ratio(0, 1);
        assert_eq!(flag_from_brackets(&m, &[one, zero], 6).unwrap().ks, vec![2, 3]);
    }

    #[test]
    fn lq_kalman_ranks() {
        let (name, p) = parse_builtin_spec("lq:double_integrator").unwrap();
        let m = builtin_model(&name, &p).unwrap();
        let s = ExtremalState::new(vec![0.0; 2], vec![1.0, 0.3]);
        assert_eq!(growth_vector(&m.to_f64(), &s, 0.2, 6).unwrap().ks, vec![1, 2]);
        assert_eq!(flag_from_brackets(&m, &[Rational::from_ratio(0, 1)], 6).unwrap().ks, vec![1, 2]);
        assert_eq!(flag_from_brackets(&m, &[Rational::from_ratio(0, 1)], 1).unwrap().ks, vec![1]);
    }

    #[test]
    fn linearization_of_lq_is_constant() {
        let (name, p) = parse_builtin_spec("lq:double_integrator").unwrap();
        let m = builtin_model(&name, &p).unwrap().to_f64();
        let s = ExtremalState::new(vec![0.0; 2], vec![1.0, 0.3]);
        let (a, b) = linearization_matrices(&m, &s, 0.9).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert_eq!(b, DMatrix::from_row_slice(2, 1, &[0.0, 1.0]));
    }
}
