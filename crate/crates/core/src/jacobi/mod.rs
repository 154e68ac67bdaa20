//! Jacobi curves, the family `Q_λ(t)` and the curvature invariants.
//!
//! With `M(t) = [[a, b], [c, d]]` the fundamental matrix of the linearized
//! Hamiltonian flow in `(x, p)` coordinates, the Jacobi curve pulled back to
//! `λ₀` is spanned by `X = −bᵀ`, `P = aᵀ`, hence `S = X P⁻¹` and
//! `S⁻¹ = −aᵀ b⁻ᵀ`. In coordinates adapted to `fᵢ(x₀)` the distribution block
//! of `d/dt S⁻¹` is `Q_λ(t) = I/t² + R/3 + O(t)`.

pub mod fit;
pub mod tables;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::flag::{flag_matrices, growth_vector, young_diagram_and_dimension, GrowthVector, YoungDiagram};
use crate::hamflow::{ExtremalState, Hamiltonian, Trajectory};
use crate::linalg::sym_eigenvalues_desc;
use crate::model::{ControlModel, FrameAdaptation};
use crate::series;

use fit::{fit_powers, geometric_grid, PowerFit};

/// Integration tolerance used for Jacobi curves.
pub const JACOBI_TOL: f64 = 1e-14;
/// Largest admissible condition number of `P(t)` inside the fit window.
pub const MAX_COND_P: f64 = 1e8;
/// Default number of grid points of the Laurent fit.
pub const DEFAULT_GRID: usize = 12;
/// Fit residual above which a report is marked unreliable.
pub const RESIDUAL_THRESHOLD: f64 = 1e-6;

/// The Jacobi curve and its derivative at time `t`, in adapted coordinates.
#[derive(Clone, Debug)]
pub struct JacobiSample {
    pub t: f64,
    pub s: DMatrix<f64>,
    pub sdot: DMatrix<f64>,
}

/// Everything evaluated at one time by [`JacobiCurve::eval`].
#[derive(Clone, Debug)]
pub struct JacobiPoint {
    pub t: f64,
    /// `[S⁻¹]₁₁` in adapted coordinates.
    pub sinv11: DMatrix<f64>,
    /// `Q(t) = d/dt [S⁻¹]₁₁`.
    pub q: DMatrix<f64>,
    /// Condition number of `P(t)`.
    pub cond_p: f64,
}

/// Jacobi curve of a normal extremal, integrated on `[0, t_max]`.
pub struct JacobiCurve {
    n: usize,
    k: usize,
    ham: Hamiltonian,
    traj: Trajectory,
    frame: FrameAdaptation,
    /// Orthonormal basis adapted to the flag of the extremal at `t = 0`.
    graded: DMatrix<f64>,
    near: Option<NearSeries>,
}

/// Regular series of the Jacobi curve at `t = 0`.
///
/// In the flag-adapted basis `G` the entry `(α, β)` of `S(t)` vanishes to
/// order `ℓ_α + ℓ_β − 1`, `ℓ` the flag level. Dividing out these powers leaves
/// an analytic `Ŝ(t)` with `Ŝ(0)` invertible, and
/// `t [S⁻¹]₁₁ = E [Ŝ(t)⁻¹]₁₁ Eᵀ` with `E` the level-one part of `T₁ᵀ G`.
/// Evaluating this form avoids the cancellations of inverting `S(t)` itself.
struct NearSeries {
    s_hat: Vec<DMatrix<f64>>,
    e: DMatrix<f64>,
    /// Number of level-one basis vectors.
    k: usize,
    /// Times below this are evaluated from the series.
    radius: f64,
}

/// Order of the Taylor expansion of `M(t)` used near `t = 0`.
const NEAR_ORDER: usize = 40;

impl NearSeries {
    /// `None` when the flag is not ample or `S(t)` lacks the graded structure.
    fn new(
        ham: &Hamiltonian,
        lambda0: &ExtremalState,
        g: &DMatrix<f64>,
        levels: &[usize],
        t1: &DMatrix<f64>,
    ) -> Option<Self> {
        let n = lambda0.x.len();
        let top_level = *levels.iter().max()?;
        if levels.len() != n || top_level > n {
            return None;
        }
        let m0 = DMatrix::identity(2 * n, 2 * n);
        let (_, ms) = ham.system().series_variational(&lambda0.to_vec(), &m0, NEAR_ORDER);
        let a: Vec<DMatrix<f64>> = ms.iter().map(|m| m.view((0, 0), (n, n)).transpose()).collect();
        let a_inv = series::inverse(&a)?;
        // S = X P⁻¹ with X = −bᵀ, P = aᵀ.
        let x: Vec<DMatrix<f64>> = ms.iter().map(|m| -m.view((0, n), (n, n)).transpose()).collect();
        let sg: Vec<DMatrix<f64>> = series::mul(&x, &a_inv).into_iter().map(|c| g.transpose() * c * g).collect();
        let scale = sg.iter().map(|c| c.amax()).fold(0.0f64, f64::max);
        for (al, &la) in levels.iter().enumerate() {
            for (be, &lb) in levels.iter().enumerate() {
                if sg.iter().take(la + lb - 1).any(|c| c[(al, be)].abs() > 1e-11 * scale) {
                    return None;
                }
            }
        }
        let len = NEAR_ORDER + 2 - 2 * top_level;
        let s_hat: Vec<DMatrix<f64>> =
            (0..len).map(|r| DMatrix::from_fn(n, n, |al, be| sg[r + levels[al] + levels[be] - 1][(al, be)])).collect();
        let norms: Vec<f64> = s_hat.iter().map(|c| c.amax()).collect();
        let top = norms.iter().copied().fold(0.0f64, f64::max);
        let radius = [len - 2, len - 1]
            .iter()
            .map(|&k| if norms[k] == 0.0 { f64::INFINITY } else { (1e-17 * top / norms[k]).powf(1.0 / k as f64) })
            .fold(f64::INFINITY, f64::min);
        let k = levels.iter().filter(|&&l| l == 1).count();
        let e = (t1.transpose() * g).columns(0, k).into_owned();
        Some(Self { s_hat, e, k, radius })
    }

    /// `[S⁻¹]₁₁` and `Q(t)` in adapted coordinates.
    fn eval(&self, t: f64) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let mut v = self.s_hat.last()?.clone();
        let mut d = DMatrix::zeros(v.nrows(), v.ncols());
        for c in self.s_hat.iter().rev().skip(1) {
            d = d * t + &v;
            v = v * t + c;
        }
        let inv = v.lu().try_inverse()?;
        let k = self.k;
        let f = &self.e * inv.view((0, 0), (k, k)) * self.e.transpose();
        let dinv = -(&inv * d * &inv);
        let fdot = &self.e * dinv.view((0, 0), (k, k)) * self.e.transpose();
        // [S⁻¹]₁₁ = F/t, Q = F'/t − F/t².
        Some((&f / t, (fdot * t - f) / (t * t)))
    }
}

/// Two-sided diagonal equilibration; returns row and column scalings.
fn ruiz(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let (r, c) = m.shape();
    let mut dr = vec![1.0; r];
    let mut dc = vec![1.0; c];
    for _ in 0..30 {
        let scaled = DMatrix::from_fn(r, c, |i, j| dr[i] * m[(i, j)] * dc[j]);
        let mut done = true;
        for i in 0..r {
            let mx = scaled.row(i).amax();
            if mx > 0.0 {
                if (mx - 1.0).abs() > 1e-3 {
                    done = false;
                }
                dr[i] /= mx.sqrt();
            }
        }
        for j in 0..c {
            let mx = scaled.column(j).amax();
            if mx > 0.0 {
                if (mx - 1.0).abs() > 1e-3 {
                    done = false;
                }
                dc[j] /= mx.sqrt();
            }
        }
        if done {
            break;
        }
    }
    (dr, dc)
}

/// Inverse of a graded matrix after equilibration.
fn graded_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (dr, dc) = ruiz(m);
    let (r, c) = m.shape();
    let scaled = DMatrix::from_fn(r, c, |i, j| dr[i] * m[(i, j)] * dc[j]);
    let inv = scaled.lu().try_inverse()?;
    Some(DMatrix::from_fn(c, r, |i, j| dc[i] * inv[(i, j)] * dr[j]))
}

/// Orthonormal basis whose first vectors span `B₁`, then `B₁ + B₂`, and so
/// on, with the flag level of each vector (`usize::MAX` for completions).
fn flag_basis(blocks: &[DMatrix<f64>], n: usize) -> (DMatrix<f64>, Vec<usize>) {
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    let mut levels = Vec::with_capacity(n);
    let candidates =
        blocks.iter().enumerate().flat_map(|(l, b)| b.column_iter().map(move |c| (l + 1, c.into_owned()))).chain(
            (0..n).map(|i| {
                let mut e = nalgebra::DVector::zeros(n);
                e[i] = 1.0;
                (usize::MAX, e)
            }),
        );
    for (level, v) in candidates {
        if basis.len() == n {
            break;
        }
        let nv = v.norm();
        if nv == 0.0 {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                r -= q * q.dot(&r);
            }
        }
        if r.norm() > 1e-8 * nv {
            basis.push(r.normalize());
            levels.push(level);
        }
    }
    (DMatrix::from_columns(&basis), levels)
}

impl JacobiCurve {
    pub fn new(model: &ControlModel<f64>, lambda0: &ExtremalState, t_max: f64) -> Result<Self> {
        let n = model.n();
        let ham = Hamiltonian::new(model);
        let traj = ham.integrate_variational(lambda0, t_max, JACOBI_TOL)?;
        let frame = FrameAdaptation::new(model)?;
        let blocks = flag_matrices(model, lambda0, 0.0, n)?;
        let (graded, levels) = flag_basis(&blocks, n);
        let t1 = frame.t.columns(0, model.k()).into_owned();
        let near = NearSeries::new(&ham, lambda0, &graded, &levels, &t1);
        Ok(Self { n, k: model.k(), ham, traj, frame, graded, near })
    }

    pub fn t_max(&self) -> f64 {
        self.traj.t_end()
    }

    pub fn adaptation(&self) -> &FrameAdaptation {
        &self.frame
    }

    /// Blocks `a, b` of `M(t)` and their time derivatives.
    fn blocks(&self, t: f64) -> Result<[DMatrix<f64>; 4]> {
        let n = self.n;
        let fr = self.traj.frame(t)?;
        let z = self.traj.state(t)?.to_vec();
        let mdot = self.ham.flow_jacobian(&z) * &fr.m;
        let a = fr.m.view((0, 0), (n, n)).into_owned();
        let b = fr.m.view((0, n), (n, n)).into_owned();
        let adot = mdot.view((0, 0), (n, n)).into_owned();
        let bdot = mdot.view((0, n), (n, n)).into_owned();
        Ok([a, b, adot, bdot])
    }

    /// `S(t)` and `Ṡ(t)` in adapted coordinates.
    pub fn sample(&self, t: f64) -> Result<JacobiSample> {
        let [a, b, adot, bdot] = self.blocks(t)?;
        let x = -b.transpose();
        let xdot = -bdot.transpose();
        let p = a.transpose();
        let pdot = adot.transpose();
        let pinv = p
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Singular { t, what: "P(t) outside the transversality window".into() })?;
        let s = &x * &pinv;
        let sdot = &xdot * &pinv - &s * &pdot * &pinv;
        let ti = &self.frame.t_inv;
        let tit = &self.frame.t_inv_transpose;
        Ok(JacobiSample { t, s: ti * s * tit, sdot: ti * sdot * tit })
    }

    /// `[S⁻¹]₁₁` and `Q(t)` in adapted coordinates.
    pub fn eval(&self, t: f64) -> Result<JacobiPoint> {
        if !(t > 0.0) {
            return Err(Error::Singular { t, what: "S(0) = 0 is not invertible".into() });
        }
        let g = &self.graded;
        let [a, b, adot, bdot] = self.blocks(t)?;
        let sv = a.clone().svd(false, false).singular_values;
        let cond_p = sv.max() / sv.min();
        if let Some(near) = self.near.as_ref().filter(|ns| t <= ns.radius) {
            if let Some((sinv11, q)) = near.eval(t) {
                return Ok(JacobiPoint { t, sinv11, q, cond_p });
            }
        }
        let bg = g.transpose() * &b * g;
        let bg_inv = graded_inverse(&bg)
            .ok_or_else(|| Error::Singular { t, what: "∂x/∂p₀ is singular (conjugate point)".into() })?;
        let w = (g * bg_inv * g.transpose()).transpose();
        let sinv = -(a.transpose() * &w);
        let dsinv = -(adot.transpose() * &w) + a.transpose() * &w * bdot.transpose() * &w;
        let t1 = self.frame.t.columns(0, self.k).into_owned();
        Ok(JacobiPoint { t, sinv11: t1.transpose() * sinv * &t1, q: t1.transpose() * dsinv * &t1, cond_p })
    }
}

/// `S(t)`, `Ṡ(t)` on a time grid inside `(0, max t]`.
pub fn jacobi_samples(model: &ControlModel<f64>, lambda0: &ExtremalState, t_grid: &[f64]) -> Result<Vec<JacobiSample>> {
    let t_max = t_grid.iter().fold(0.0f64, |m, &t| m.max(t));
    if t_max <= 0.0 {
        return Err(Error::InvalidParam("time grid must contain positive times".into()));
    }
    let jc = JacobiCurve::new(model, lambda0, t_max)?;
    t_grid.iter().map(|&t| jc.sample(t)).collect()
}

/// `(t, Q(t))` on a grid.
pub fn q_family(
    model: &ControlModel<f64>,
    lambda0: &ExtremalState,
    t_grid: &[f64],
) -> Result<Vec<(f64, DMatrix<f64>)>> {
    let t_max = t_grid.iter().fold(0.0f64, |m, &t| m.max(t));
    let jc = JacobiCurve::new(model, lambda0, t_max)?;
    t_grid.iter().map(|&t| Ok((t, jc.eval(t)?.q))).collect()
}

/// Invariants `I_λ`, `R_λ`, `Ric` with the flag data and fit diagnostics.
#[derive(Clone, Debug)]
pub struct CurvatureReport {
    pub i_matrix: DMatrix<f64>,
    pub r_matrix: DMatrix<f64>,
    pub ric: f64,
    pub i_eigenvalues: Vec<f64>,
    pub growth_vector: GrowthVector,
    pub young_diagram: YoungDiagram,
    pub geodesic_dimension: usize,
    /// Relative residual of the Laurent fit.
    pub residual: f64,
    /// Norm of the antisymmetric part of the fitted `R`.
    pub r_asymmetry: f64,
    /// Magnitude of the `t¹` coefficient of `t²Q` in a diagnostic fit.
    pub t1_coefficient: f64,
    pub window: (f64, f64),
    pub reliable: bool,
    /// Violated report invariants, empty when all hold.
    pub warnings: Vec<String>,
}

/// Fit settings of [`curvature_report`].
#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// Upper end `ε` of the fit window; chosen from the covector when `None`.
    pub window: Option<f64>,
    pub grid: usize,
    /// Highest power of `t` in the polynomial model of `t²Q(t)`.
    pub degree: i32,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { window: None, grid: DEFAULT_GRID, degree: 8 }
    }
}

/// Natural time scale of the extremal: covector size in adapted coordinates
/// and the size of the drift linearization.
fn default_window(model: &ControlModel<f64>, lambda0: &ExtremalState, frame: &FrameAdaptation) -> f64 {
    let p = nalgebra::DVector::from_column_slice(&lambda0.p);
    let mut scale = (frame.t.transpose() * p).norm();
    if let Some(f0) = model.drift() {
        let jac = f0.jacobian();
        let n = model.n();
        let a = DMatrix::from_fn(n, n, |i, j| jac[i][j].eval_f64(&lambda0.x));
        scale = scale.max((&frame.t_inv * a * &frame.t).norm());
    }
    0.5 / scale.max(1e-3)
}

/// Curvature report from the Laurent fit of `t²Q(t)` on a geometric grid.
pub fn curvature_report(
    model: &ControlModel<f64>,
    lambda0: &ExtremalState,
    opts: FitOptions,
) -> Result<CurvatureReport> {
    let n = model.n();
    let gv = growth_vector(model, lambda0, 0.0, n.max(2) + 1)?;
    let (yd, dim, _) = young_diagram_and_dimension(&gv, n)?;
    let frame = FrameAdaptation::new(model)?;
    let mut eps = opts.window.unwrap_or_else(|| default_window(model, lambda0, &frame));
    if !(eps > 0.0) {
        return Err(Error::InvalidParam("fit window must be positive".into()));
    }
    let (ts, points) = loop {
        let jc = JacobiCurve::new(model, lambda0, eps)?;
        let ts = geometric_grid(eps, opts.grid);
        let points = ts.iter().map(|&t| jc.eval(t)).collect::<Result<Vec<_>>>();
        match points {
            Ok(p) if p.iter().all(|q| q.cond_p < MAX_COND_P) => break (ts, p),
            _ if eps > 1e-6 => eps *= 0.5,
            Ok(_) => return Err(Error::Fit("P(t) ill-conditioned on every window".into())),
            Err(e) => return Err(e),
        }
    };
    let ys: Vec<DMatrix<f64>> = points.iter().map(|p| &p.q * (p.t * p.t)).collect();
    let powers: Vec<i32> = std::iter::once(0).chain(2..=opts.degree).collect();
    let main = fit_powers(&ts, &ys, &powers);
    let diag_powers: Vec<i32> = (0..=opts.degree).collect();
    let diag = fit_powers(&ts, &ys, &diag_powers);
    let i_raw = main.coeff(0).expect("constant term").clone();
    let i_matrix = (&i_raw + i_raw.transpose()) * 0.5;
    let r_raw = main.coeff(2).expect("quadratic term") * 3.0;
    let r_matrix = (&r_raw + r_raw.transpose()) * 0.5;
    let r_asymmetry = ((&r_raw - r_raw.transpose()) * 0.5).norm();
    let ric = r_matrix.trace();
    let i_eigenvalues = sym_eigenvalues_desc(&i_matrix);
    let mut warnings = Vec::new();
    let min_ev = *i_eigenvalues.last().expect("k ≥ 1");
    if min_ev < 1.0 - 1e-4 {
        warnings.push(format!("I has eigenvalue {min_ev} below 1"));
    }
    let mut expected: Vec<f64> = yd.rows.iter().map(|&r| (r * r) as f64).collect();
    expected.sort_by(|a, b| b.total_cmp(a));
    if expected.len() == i_eigenvalues.len() {
        for (e, got) in expected.iter().zip(&i_eigenvalues) {
            if (got - e).abs() > 1e-4 * e {
                warnings.push(format!("I eigenvalue {got} differs from squared row length {e}"));
            }
        }
    } else {
        warnings.push(format!("Young diagram has {} rows for {} controls", expected.len(), i_eigenvalues.len()));
    }
    let t1_coefficient = diag.coeff(1).map_or(0.0, |c| c.amax());
    let reliable = main.residual <= RESIDUAL_THRESHOLD && warnings.is_empty();
    Ok(CurvatureReport {
        i_matrix,
        r_matrix,
        ric,
        i_eigenvalues,
        growth_vector: gv,
        young_diagram: yd,
        geodesic_dimension: dim,
        residual: main.residual,
        r_asymmetry,
        t1_coefficient,
        window: (ts[0], eps),
        reliable,
        warnings,
    })
}

/// Laurent data of `[S⁻¹]₁₁ = −D/t + K + L t + …`.
#[derive(Clone, Debug)]
pub struct ResidueFit {
    pub d: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub l: DMatrix<f64>,
    /// Eigenvalues of `D`, descending.
    pub d_eigenvalues: Vec<f64>,
    /// `L` in an orthonormal eigenbasis of `D` ordered like `d_eigenvalues`.
    pub l_in_eigenbasis: DMatrix<f64>,
    pub residual: f64,
}

/// Fits the simple pole and linear term of the distribution block of `S⁻¹`.
pub fn residue_crosscheck(model: &ControlModel<f64>, lambda0: &ExtremalState, opts: FitOptions) -> Result<ResidueFit> {
    let frame = FrameAdaptation::new(model)?;
    let eps = opts.window.unwrap_or_else(|| default_window(model, lambda0, &frame));
    let jc = JacobiCurve::new(model, lambda0, eps)?;
    let ts = geometric_grid(eps, opts.grid);
    let ys = ts.iter().map(|&t| Ok(jc.eval(t)?.sinv11 * t)).collect::<Result<Vec<_>>>()?;
    let powers: Vec<i32> = (0..=opts.degree).collect();
    let f: PowerFit = fit_powers(&ts, &ys, &powers);
    let d = -f.coeff(0).expect("constant").clone();
    let d = (&d + d.transpose()) * 0.5;
    let k = f.coeff(1).expect("linear").clone();
    let l = f.coeff(2).expect("quadratic").clone();
    let eig = d.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let basis =
        DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    let l_sym = (&l + l.transpose()) * 0.5;
    let l_in_eigenbasis = basis.transpose() * l_sym * &basis;
    Ok(ResidueFit {
        d_eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        d,
        k,
        l,
        l_in_eigenbasis,
        residual: f.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, parse_builtin_spec, Params};

    fn model(spec: &str) -> ControlModel<f64> {
        let (n, p) = parse_builtin_spec(spec).unwrap();
        builtin_model(&n, &p).unwrap().to_f64()
    }

    #[test]
    fn euclidean_jacobi_curve() {
        let m = model("euclidean");
        let s = ExtremalState::new(vec![0.0; 2], vec![0.6, 0.8]);
        let samples = jacobi_samples(&m, &s, &[0.1, 0.7]).unwrap();
        for smp in samples {
            assert!((smp.s + DMatrix::identity(2, 2) * smp.t).amax() < 1e-12);
            assert!((smp.sdot + DMatrix::identity(2, 2)).amax() < 1e-12);
        }
        let r = curvature_report(&m, &s, FitOptions::default()).unwrap();
        assert!((r.i_matrix - DMatrix::identity(2, 2)).amax() < 1e-10);
        assert!(r.r_matrix.amax() < 1e-8);
    }

    #[test]
    fn double_integrator() {
        let m = model("lq:double_integrator");
        let s = ExtremalState::new(vec![0.0; 2], vec![1.0, 0.0]);
        let smp = &jacobi_samples(&m, &s, &[0.3]).unwrap()[0];
        let t: f64 = 0.3;
        let expect = DMatrix::from_row_slice(2, 2, &[-t, t * t / 2.0, t * t / 2.0, -t.powi(3) / 3.0]);
        assert!((&smp.s - expect).amax() < 1e-12);
        let q = q_family(&m, &s, &[0.2]).unwrap();
        assert!((q[0].1[(0, 0)] - 4.0 / 0.04).abs() < 1e-8);
        let r = curvature_report(&m, &s, FitOptions::default()).unwrap();
        assert!((r.i_matrix[(0, 0)] - 4.0).abs() < 1e-9, "{r:?}");
        assert!(r.r_matrix.amax() < 1e-7);
    }

    #[test]
    fn heisenberg_curvature() {
        let m = builtin_model("heisenberg", &Params::new()).unwrap().to_f64();
        let hz = 1.0;
        let s = ExtremalState::new(vec![0.0; 3], vec![0.0, 1.0, hz]);
        let r = curvature_report(&m, &s, FitOptions::default()).unwrap();
        // γ̇ = (0, 1): I = diag(4, 1) in (γ̇⊥, γ̇) = (e₁, e₂).
        assert!((r.i_matrix[(0, 0)] - 4.0).abs() < 1e-6, "{r:?}");
        assert!((r.i_matrix[(1, 1)] - 1.0).abs() < 1e-6);
        assert!((r.r_matrix[(0, 0)] - 0.4).abs() < 1e-4, "{r:?}");
        assert!(r.reliable, "{r:?}");
    }
}
