//! Normal Hamiltonian, extremal flow, its linearization and conjugate times.
//!
//! Phase-space coordinates are `z = (x, p)` with `p` the covector components
//! in the chart. The maximized Hamiltonian of a model with cost `½|u|²` is
//! `H = ⟨p, f₀(x)⟩ + ½ Σ ⟨p, fᵢ(x)⟩²` and the normal control is
//! `uᵢ = ⟨p, fᵢ(x)⟩`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::ControlModel;
use crate::poly::Polynomial;
use crate::taylor::{integrate, PolySystem, TaylorOptions, TaylorSolution};

/// Canonical symplectic matrix `[[0, I], [−I, 0]]`, so that `ż = J ∇H`.
pub fn symplectic_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// A point `λ = (x, p)` of the cotangent bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl ExtremalState {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        Self { x, p }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.x.iter().chain(&self.p).copied().collect()
    }

    pub fn from_slice(z: &[f64]) -> Self {
        let n = z.len() / 2;
        Self { x: z[..n].to_vec(), p: z[n..].to_vec() }
    }
}

/// Fundamental solution of the linearized flow at time `t`.
#[derive(Clone, Debug)]
pub struct VariationalFrame {
    pub t: f64,
    pub m: DMatrix<f64>,
    /// Symplectic inverse `−J Mᵀ J`.
    pub m_inv: DMatrix<f64>,
}

/// The maximized Hamiltonian of a model, compiled for integration.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n: usize,
    h: Polynomial<f64>,
    controls: Vec<Polynomial<f64>>,
    system: PolySystem,
}

impl Hamiltonian {
    pub fn new(model: &ControlModel<f64>) -> Self {
        let n = model.n();
        let nn = 2 * n;
        let pairing = |f: &crate::field::PolyVectorField<f64>| {
            let mut acc = Polynomial::zero(nn);
            for (j, c) in f.components().iter().enumerate() {
                acc = &acc + &(&Polynomial::var(nn, n + j) * &c.embed(nn, 0));
            }
            acc
        };
        let controls: Vec<Polynomial<f64>> = model.fields().iter().map(pairing).collect();
        let mut h = model.drift().map(pairing).unwrap_or_else(|| Polynomial::zero(nn));
        for u in &controls {
            h = &h + &(u * u).scale(&0.5);
        }
        let mut rhs = Vec::with_capacity(nn);
        for j in 0..n {
            rhs.push(h.derivative(n + j));
        }
        for j in 0..n {
            rhs.push(-&h.derivative(j));
        }
        Self { n, h, controls, system: PolySystem::new(&rhs) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polynomial(&self) -> &Polynomial<f64> {
        &self.h
    }

    /// The normal controls `uᵢ = ⟨p, fᵢ(x)⟩` as polynomials in `(x, p)`.
    pub fn control_polynomials(&self) -> &[Polynomial<f64>] {
        &self.controls
    }

    pub fn system(&self) -> &PolySystem {
        &self.system
    }

    pub fn value(&self, s: &ExtremalState) -> f64 {
        self.h.eval_f64(&s.to_vec())
    }

    pub fn controls(&self, s: &ExtremalState) -> Vec<f64> {
        let z = s.to_vec();
        self.controls.iter().map(|u| u.eval_f64(&z)).collect()
    }

    /// Jacobian of the Hamiltonian vector field at `z`.
    pub fn flow_jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        self.system.jacobian(z)
    }

    fn check_state(&self, s: &ExtremalState) -> Result<()> {
        if s.x.len() != self.n || s.p.len() != self.n {
            return Err(Error::Dimension(format!(
                "state of size ({}, {}) for a model on R^{}",
                s.x.len(),
                s.p.len(),
                self.n
            )));
        }
        if s.x.iter().chain(&s.p).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("state must be finite".into()));
        }
        Ok(())
    }

    pub fn integrate(&self, s0: &ExtremalState, t: f64, tol: f64) -> Result<Trajectory> {
        self.check_state(s0)?;
        let sol = integrate(&self.system, &s0.to_vec(), None, t, options(tol))?;
        Ok(Trajectory { n: self.n, sol })
    }

    pub fn integrate_variational(&self, s0: &ExtremalState, t: f64, tol: f64) -> Result<Trajectory> {
        self.check_state(s0)?;
        let m0 = DMatrix::identity(2 * self.n, 2 * self.n);
        let sol = integrate(&self.system, &s0.to_vec(), Some(&m0), t, options(tol))?;
        Ok(Trajectory { n: self.n, sol })
    }
}

fn options(tol: f64) -> TaylorOptions {
    TaylorOptions { tol, ..TaylorOptions::default() }
}

/// A solution of the Hamiltonian system with dense output.
#[derive(Clone, Debug)]
pub struct Trajectory {
    n: usize,
    sol: TaylorSolution,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn state(&self, t: f64) -> Result<ExtremalState> {
        Ok(ExtremalState::from_slice(&self.sol.state(t)?))
    }

    /// Fundamental matrix at `t`; errors when the variational equation was
    /// not integrated.
    pub fn frame(&self, t: f64) -> Result<VariationalFrame> {
        let m = self.sol.matrix(t)?.ok_or_else(|| Error::Integration {
            t,
            reason: "trajectory integrated without variational equations".into(),
        })?;
        let j = symplectic_j(self.n);
        let m_inv = -(&j * m.transpose() * &j);
        Ok(VariationalFrame { t, m, m_inv })
    }

    /// Evenly spaced samples including both end points.
    pub fn samples(&self, count: usize) -> Result<Vec<(f64, ExtremalState)>> {
        let count = count.max(2);
        (0..count)
            .map(|i| {
                let t = self.t_end() * i as f64 / (count - 1) as f64;
                Ok((t, self.state(t)?))
            })
            .collect()
    }
}

/// `H(λ)` and the normal controls at `λ`.
pub fn hamiltonian(model: &ControlModel<f64>, s: &ExtremalState) -> (f64, Vec<f64>) {
    let h = Hamiltonian::new(model);
    (h.value(s), h.controls(s))
}

/// Normal extremal from `λ₀` over `[0, t]` (negative `t` integrates backward).
pub fn integrate_extremal(model: &ControlModel<f64>, lambda0: &ExtremalState, t: f64, tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParam("tolerance must be positive".into()));
    }
    Hamiltonian::new(model).integrate(lambda0, t, tol)
}

/// Exponential map `π ∘ e^{tH⃗}(λ₀)` with `λ₀` based at `x₀`.
pub fn exponential_map(model: &ControlModel<f64>, x0: &[f64], p0: &[f64], t: f64) -> Result<Vec<f64>> {
    let s0 = ExtremalState::new(x0.to_vec(), p0.to_vec());
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    Ok(integrate_extremal(model, &s0, t, 1e-12)?.state(t)?.x)
}

/// Extremal together with its fundamental matrix.
pub fn variational_flow(model: &ControlModel<f64>, lambda0: &ExtremalState, t: f64, tol: f64) -> Result<Trajectory> {
    Hamiltonian::new(model).integrate_variational(lambda0, t, tol)
}

/// Result of a conjugate-time search.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugateSearch {
    /// First sign change of `det ∂x(t)/∂p₀`.
    pub time: Option<f64>,
    /// Earliest time where the normalized determinant dipped below 1e-10
    /// without changing sign before `time`: a possible even-order zero.
    pub possible_even_order: Option<f64>,
}

/// `det(∂x/∂p₀)` divided by the product of its column norms.
fn normalized_det(b: &DMatrix<f64>) -> f64 {
    let mut scale = 1.0;
    for c in b.column_iter() {
        let nc = c.norm();
        if nc == 0.0 {
            return 0.0;
        }
        scale *= nc;
    }
    b.determinant() / scale
}

fn x_block(fr: &VariationalFrame, n: usize) -> DMatrix<f64> {
    fr.m.view((0, n), (n, n)).into_owned()
}

/// First conjugate time in `(0, t_max]` from the sign of `det ∂x(t)/∂p₀`,
/// scanned on a uniform grid and refined by bisection.
pub fn first_conjugate_time(model: &ControlModel<f64>, lambda0: &ExtremalState, t_max: f64) -> Result<ConjugateSearch> {
    first_conjugate_time_with(model, lambda0, t_max, 400)
}

/// [`first_conjugate_time`] with an explicit number of scan intervals.
pub fn first_conjugate_time_with(
    model: &ControlModel<f64>,
    lambda0: &ExtremalState,
    t_max: f64,
    scan: usize,
) -> Result<ConjugateSearch> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidParam("t_max must be positive".into()));
    }
    let n = model.n();
    let traj = variational_flow(model, lambda0, t_max, 1e-13)?;
    let det_at = |t: f64| -> Result<f64> { Ok(normalized_det(&x_block(&traj.frame(t)?, n))) };
    let dt = t_max / scan as f64;
    let mut prev_t = dt;
    let mut prev = det_at(prev_t)?;
    let mut even = None;
    for i in 2..=scan {
        let t = dt * i as f64;
        let d = det_at(t)?;
        if d.abs() < 1e-10 && even.is_none() && d.signum() == prev.signum() {
            even = Some(t);
        }
        if d == 0.0 || d.signum() != prev.signum() {
            let (mut lo, mut hi) = (prev_t, t);
            let s_lo = prev.signum();
            while hi - lo > 1e-14 * hi {
                let mid = 0.5 * (lo + hi);
                let dm = det_at(mid)?;
                if dm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if dm.signum() == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(ConjugateSearch { time: Some(0.5 * (lo + hi)), possible_even_order: even });
        }
        prev_t = t;
        prev = d;
    }
    Ok(ConjugateSearch { time: None, possible_even_order: even })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, parse_builtin_spec, Params};

    fn heis() -> ControlModel<f64> {
        builtin_model("heisenberg", &Params::new()).unwrap().to_f64()
    }

    #[test]
    fn hamiltonian_values() {
        let m = heis();
        let (h, u) = hamiltonian(&m, &ExtremalState::new(vec![0.0; 3], vec![1.0, 0.0, 0.0]));
        assert_eq!((h, u), (0.5, vec![1.0, 0.0]));
        let (h, _) = hamiltonian(&m, &ExtremalState::new(vec![0.0; 3], vec![0.0, 0.0, 1.0]));
        assert_eq!(h, 0.0);
        let (name, p) = parse_builtin_spec("lq:double_integrator").unwrap();
        let lq = builtin_model(&name, &p).unwrap().to_f64();
        let s = ExtremalState::new(vec![0.3, -0.7], vec![1.5, 2.0]);
        let (h, _) = hamiltonian(&lq, &s);
        assert!((h - (1.5 * -0.7 + 0.5 * 4.0)).abs() < 1e-15);
    }

    #[test]
    fn euclidean_linear_shear() {
        let m = builtin_model("euclidean", &Params::new()).unwrap().to_f64();
        let tr = variational_flow(&m, &ExtremalState::new(vec![0.0; 2], vec![1.0, 2.0]), 3.0, 1e-12).unwrap();
        let fr = tr.frame(2.0).unwrap();
        let mut expect = DMatrix::identity(4, 4);
        expect[(0, 2)] = 2.0;
        expect[(1, 3)] = 2.0;
        assert!((fr.m - expect).amax() < 1e-12);
        assert_eq!(tr.frame(0.0).unwrap().m, DMatrix::identity(4, 4));
    }

    #[test]
    fn heisenberg_conjugate_time() {
        let m = heis();
        let s = ExtremalState::new(vec![0.0; 3], vec![0.0, 1.0, 2.0]);
        let c = first_conjugate_time(&m, &s, 5.0).unwrap();
        assert!((c.time.unwrap() - std::f64::consts::PI).abs() < 1e-8);
        let s = ExtremalState::new(vec![0.0; 3], vec![0.0, 1.0, 0.0]);
        assert_eq!(first_conjugate_time(&m, &s, 20.0).unwrap().time, None);
    }
}
