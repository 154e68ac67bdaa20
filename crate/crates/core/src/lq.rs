//! Linear-quadratic systems `ẋ = Ax + Bu` with cost `½|u|²`.
//!
//! The Jacobi curve of every extremal is determined by the controllability
//! Gramian `C(t) = ∫₀ᵗ e^{−sA} B Bᵀ e^{−sAᵀ} ds`, and
//! `Q(t) = −Bᵀ d/dt C(t)⁻¹ B` is independent of the covector and of the
//! initial point. This module evaluates it in closed form.
//!
//! `C(t)` vanishes to high order at `t = 0`. In a Kronecker basis
//! `V = [A^j bᵢ]` and with `Δ(t) = diag(t^{j+½})` the rescaled Gramian
//! `G(t) = Δ⁻¹ V⁻¹ C V⁻ᵀ Δ⁻¹` is entire with `G(0)` invertible, and
//! `t·BᵀC⁻¹B` is the `j = 0` block of `G(t)⁻¹`. All Laurent coefficients
//! come from this regular series.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::flag::{YoungDiagram, RANK_GAP, RANK_TOL};
use crate::linalg::numerical_rank;
use crate::series::{self, MatSeries};

/// Relative agreement required between the two Gramian evaluations.
pub const GRAMIAN_AGREEMENT: f64 = 1e-10;
/// Largest series length tried before giving up on the tail bound.
const MAX_SERIES_TERMS: usize = 400;

/// A controllable pair `(A, B)` with its Kronecker structure.
#[derive(Clone, Debug)]
pub struct LqSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    depth: usize,
    kronecker: Vec<usize>,
    /// Columns `A^j bᵢ`, `j < nᵢ`, grouped by power `j`.
    basis: Vec<(usize, usize)>,
}

impl LqSystem {
    /// Validates the Kalman rank condition and computes the Kronecker indices.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "A is {}×{}, B is {}×{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let k = b.ncols();
        let mut alive = vec![true; k];
        let mut cols: Vec<nalgebra::DVector<f64>> = Vec::new();
        let mut basis = Vec::new();
        let mut powers: Vec<DMatrix<f64>> = vec![b.clone()];
        let mut depth = 0;
        for j in 0..n {
            if j > 0 {
                powers.push(&a * &powers[j - 1]);
            }
            for i in 0..k {
                if !alive[i] || cols.len() == n {
                    continue;
                }
                let cand = powers[j].column(i).into_owned();
                let mut trial = cols.clone();
                trial.push(cand.clone());
                let d = numerical_rank(&DMatrix::from_columns(&trial), RANK_TOL, RANK_GAP);
                if d.indeterminate {
                    return Err(Error::ModelRejected(format!(
                        "controllability rank is ill-conditioned (singular values {:?})",
                        d.singular_values
                    )));
                }
                if d.rank == trial.len() {
                    cols = trial;
                    basis.push((i, j));
                    depth = j + 1;
                } else {
                    alive[i] = false;
                }
            }
        }
        if cols.len() < n {
            return Err(Error::ModelRejected(format!("Kalman rank {} < {n}: (A, B) is not controllable", cols.len())));
        }
        let mut kronecker: Vec<usize> = (0..k).map(|i| basis.iter().filter(|(c, _)| *c == i).count()).collect();
        if kronecker.contains(&0) {
            return Err(Error::ModelRejected("columns of B are dependent".into()));
        }
        kronecker.sort_by(|x, y| y.cmp(x));
        Ok(Self { a, b, depth, kronecker, basis })
    }

    /// Builds the system from rows of numbers.
    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        if a.iter().any(|r| r.len() != n) || b.len() != n || b.iter().any(|r| r.len() != b[0].len()) {
            return Err(Error::Dimension("A must be n×n and B n×k".into()));
        }
        let k = b.first().map_or(0, Vec::len);
        Self::new(DMatrix::from_fn(n, n, |i, j| a[i][j]), DMatrix::from_fn(n, k, |i, j| b[i][j]))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.b.ncols()
    }

    /// Smallest `m` with `rank{B, AB, …, A^{m−1}B} = n`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Kronecker indices `n₁ ≥ … ≥ n_k`.
    pub fn kronecker_indices(&self) -> &[usize] {
        &self.kronecker
    }

    /// The Young diagram whose rows are the Kronecker indices.
    pub fn young_diagram(&self) -> YoungDiagram {
        YoungDiagram { rows: self.kronecker.clone() }
    }

    /// Kalman ranks `rank{B, …, A^{i−1}B}` for `i = 1..=depth`.
    pub fn kalman_ranks(&self) -> Vec<usize> {
        (1..=self.depth).map(|i| self.basis.iter().filter(|(_, j)| *j < i).count()).collect()
    }

    /// Coefficients `C_l` with `C(t) = Σ_l C_l t^{l+1}`, for `l < len`.
    fn gramian_coefficients(&self, len: usize) -> Vec<DMatrix<f64>> {
        // E_i = (−A)^i B / i!
        let mut e = vec![self.b.clone()];
        for i in 1..len {
            e.push(-(&self.a * &e[i - 1]) / i as f64);
        }
        (0..len)
            .map(|l| {
                let mut acc = DMatrix::zeros(self.n(), self.n());
                for i in 0..=l {
                    acc.gemm(1.0, &e[i], &e[l - i].transpose(), 1.0);
                }
                acc / (l + 1) as f64
            })
            .collect()
    }

    /// Kronecker basis matrix `V` and the power `j` of each column.
    fn kronecker_basis(&self) -> (DMatrix<f64>, Vec<usize>) {
        let mut cols = Vec::with_capacity(self.n());
        let mut degs = Vec::with_capacity(self.n());
        for &(i, j) in &self.basis {
            let mut v = self.b.column(i).into_owned();
            for _ in 0..j {
                v = &self.a * v;
            }
            cols.push(v);
            degs.push(j);
        }
        (DMatrix::from_columns(&cols), degs)
    }

    /// Series of the rescaled Gramian `G(t)` with `len` coefficients.
    fn scaled_gramian_series(&self, len: usize) -> MatSeries {
        let (v, degs) = self.kronecker_basis();
        let v_inv = v.try_inverse().expect("Kronecker basis is invertible");
        let n = self.n();
        let max_shift = 2 * degs.iter().max().copied().unwrap_or(0);
        let cs: Vec<DMatrix<f64>> =
            self.gramian_coefficients(len + max_shift).into_iter().map(|c| &v_inv * c * v_inv.transpose()).collect();
        (0..len).map(|r| DMatrix::from_fn(n, n, |a, b| cs[r + degs[a] + degs[b]][(a, b)])).collect()
    }

    /// Indices of the basis vectors `bᵢ` (power zero) in column order of `B`.
    fn control_slots(&self) -> Vec<usize> {
        (0..self.k())
            .map(|i| {
                self.basis.iter().position(|&(c, j)| c == i && j == 0).expect("every control column is in the basis")
            })
            .collect()
    }
}

/// Gramian by truncated power series, with the bound on the neglected tail.
pub fn gramian_series(sys: &LqSystem, t: f64) -> Result<(DMatrix<f64>, f64)> {
    if !(t > 0.0) {
        return Err(Error::InvalidParam(format!("Gramian time must be positive, got {t}")));
    }
    // ‖C_l‖ ≤ ‖B‖² (2‖A‖)^l / (l+1)!, so the tail after L terms is bounded by
    // ‖B‖² t · x^L / L! · 1/(1 − x/(L+1)) with x = 2‖A‖t.
    let x = 2.0 * sys.a.norm() * t;
    let b2 = sys.b.norm_squared();
    // ‖C(t)‖ is at least of order t^{2m−1}; aim the bound well below that.
    let target = 1e-16 * b2 * t * t.min(1.0).powi(2 * sys.depth as i32 - 2);
    let mut len = MAX_SERIES_TERMS;
    let mut bound = f64::INFINITY;
    let mut term = 1.0f64;
    for l in 1..=MAX_SERIES_TERMS {
        term *= x / l as f64;
        if l as f64 + 1.0 > x {
            bound = b2 * t * term / (1.0 - x / (l as f64 + 1.0));
            if bound <= target {
                len = l;
                break;
            }
        }
    }
    let coeffs = sys.gramian_coefficients(len);
    let mut c = DMatrix::zeros(sys.n(), sys.n());
    for (l, cl) in coeffs.iter().enumerate().rev() {
        c += cl * t.powi(l as i32 + 1);
    }
    let scale = c.norm();
    if !(bound <= 1e-12 * scale) {
        return Err(Error::Fit(format!("Gramian series tail bound {bound:e} not below 1e-12 of ‖C‖ = {scale:e}")));
    }
    Ok((c, bound))
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=m {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Gramian by composite Gauss–Legendre quadrature of the matrix-exponential
/// integrand.
pub fn gramian_quadrature(sys: &LqSystem, t: f64) -> Result<DMatrix<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParam(format!("Gramian time must be positive, got {t}")));
    }
    let nodes = gauss_legendre(12);
    let panels = ((sys.a.norm() * t * 4.0).ceil() as usize).clamp(4, 4096);
    let h = t / panels as f64;
    let mut c = DMatrix::zeros(sys.n(), sys.n());
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for &(x, w) in &nodes {
            let s = mid + 0.5 * h * x;
            let eb = (&sys.a * -s).exp() * &sys.b;
            c.gemm(0.5 * h * w, &eb, &eb.transpose(), 1.0);
        }
    }
    Ok(c)
}

/// Controllability Gramian `C(t)`, evaluated by series and by quadrature;
/// fails unless both agree to [`GRAMIAN_AGREEMENT`] relative.
pub fn lq_gramian(sys: &LqSystem, t: f64) -> Result<DMatrix<f64>> {
    let (series, _) = gramian_series(sys, t)?;
    let quad = gramian_quadrature(sys, t)?;
    let diff = (&series - &quad).norm();
    if diff > GRAMIAN_AGREEMENT * series.norm() {
        return Err(Error::Fit(format!(
            "Gramian series and quadrature differ by {diff:e} (‖C‖ = {:e})",
            series.norm()
        )));
    }
    Ok(series)
}

/// Closed-form curvature data of an LQ system.
#[derive(Clone, Debug)]
pub struct LqCurvature {
    /// `F(t) = t·BᵀC(t)⁻¹B = I + F₁t + F₂t² + …`.
    f: MatSeries,
    slots: Vec<usize>,
    /// Long series of the rescaled Gramian for evaluating `Q(t)`.
    g_long: MatSeries,
    pub i_matrix: DMatrix<f64>,
    pub r_matrix: DMatrix<f64>,
}

impl LqCurvature {
    /// `Q(t) = F/t² − F′/t`, evaluated from the rescaled Gramian at `t`.
    pub fn q(&self, t: f64) -> DMatrix<f64> {
        let gt = series::eval(&self.g_long, t);
        let dg = series::eval(&series::derivative(&self.g_long), t);
        let g_inv = gt.try_inverse().expect("rescaled Gramian is invertible");
        let slots = &self.slots;
        let k = slots.len();
        let f = DMatrix::from_fn(k, k, |a, b| g_inv[(slots[a], slots[b])]);
        let fd_full = -(&g_inv * dg * &g_inv);
        let fd = DMatrix::from_fn(k, k, |a, b| fd_full[(slots[a], slots[b])]);
        f / (t * t) - fd / t
    }

    /// Taylor coefficients of `t·BᵀC(t)⁻¹B`.
    pub fn f_series(&self) -> &MatSeries {
        &self.f
    }
}

/// `I` and `R` from the Laurent expansion of `BᵀC(t)⁻¹B`; series of length
/// `2m + 4` in the Gramian so the `t⁻¹ … t¹` coefficients are exact.
pub fn lq_curvature(sys: &LqSystem) -> Result<LqCurvature> {
    // Six coefficients of G need 2m + 4 Gramian coefficients.
    let g = sys.scaled_gramian_series(6);
    let cond = {
        let sv = g[0].clone().svd(false, false).singular_values;
        sv.max() / sv.min()
    };
    if !(cond < 1e12) {
        return Err(Error::ModelRejected(format!(
            "system is near-uncontrollable: leading rescaled Gramian has condition {cond:e}"
        )));
    }
    let g_inv =
        series::inverse(&g).ok_or_else(|| Error::Singular { t: 0.0, what: "leading rescaled Gramian".into() })?;
    let slots = sys.control_slots();
    let k = slots.len();
    let f: MatSeries = g_inv.iter().map(|m| DMatrix::from_fn(k, k, |a, b| m[(slots[a], slots[b])])).collect();
    let sym = |m: &DMatrix<f64>| (m + m.transpose()) * 0.5;
    let i_matrix = sym(&f[0]);
    let r_matrix = sym(&(&f[2] * -3.0));
    Ok(LqCurvature { f, slots, g_long: sys.scaled_gramian_series(60), i_matrix, r_matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_integrator() -> LqSystem {
        LqSystem::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]], &[vec![0.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn gramian_closed_forms() {
        let s = LqSystem::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        let c = lq_gramian(&s, 0.7).unwrap();
        assert!((c - DMatrix::identity(2, 2) * 0.7).amax() < 1e-14);
        let t: f64 = 1.3;
        let c = lq_gramian(&double_integrator(), t).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[t.powi(3) / 3.0, -t * t / 2.0, -t * t / 2.0, t]);
        assert!((c - expect).amax() < 1e-13);
    }

    #[test]
    fn double_integrator_curvature() {
        let s = double_integrator();
        assert_eq!(s.kronecker_indices(), &[2]);
        assert_eq!(s.kalman_ranks(), vec![1, 2]);
        let c = lq_curvature(&s).unwrap();
        assert!((c.i_matrix[(0, 0)] - 4.0).abs() < 1e-12);
        assert!(c.r_matrix.amax() < 1e-12);
        assert!((c.q(0.2)[(0, 0)] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn triple_integrator_index() {
        let a = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]];
        let s = LqSystem::from_rows(&a, &[vec![0.0], vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(s.kronecker_indices(), &[3]);
        let c = lq_curvature(&s).unwrap();
        assert!((c.i_matrix[(0, 0)] - 9.0).abs() < 1e-10);
    }

    #[test]
    fn q_matches_gramian_derivative() {
        // Oscillator with a position control: Q = BᵀC⁻¹ĊC⁻¹B.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, 0.3]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let s = LqSystem::new(a.clone(), b.clone()).unwrap();
        let c = lq_curvature(&s).unwrap();
        let t = 0.4;
        let g = lq_gramian(&s, t).unwrap();
        let gi = g.try_inverse().unwrap();
        let eb = (&a * -t).exp() * &b;
        let direct = b.transpose() * &gi * &eb * eb.transpose() * &gi * &b;
        assert!(((c.q(t) - &direct)[(0, 0)] / direct[(0, 0)]).abs() < 1e-9);
    }

    #[test]
    fn uncontrollable_rejected() {
        let r = LqSystem::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[vec![0.0], vec![1.0]]);
        assert!(matches!(r, Err(Error::ModelRejected(_))));
    }
}
