//! Small dense linear-algebra helpers: numerical and exact rank, exact
//! rational matrices.

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::poly::Rational;

/// Outcome of a numerical rank decision by singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct RankDecision {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// True when the last kept and first dropped singular values are closer
    /// than the required gap ratio.
    pub indeterminate: bool,
}

/// Rank of `m` with singular values below `tau · σ_max` treated as zero.
///
/// `gap` is the minimum ratio between the smallest kept and the largest
/// dropped singular value; a smaller ratio marks the decision indeterminate.
pub fn numerical_rank(m: &DMatrix<f64>, tau: f64, gap: f64) -> RankDecision {
    if m.nrows() == 0 || m.ncols() == 0 {
        return RankDecision { rank: 0, singular_values: vec![], indeterminate: false };
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smax = sv[0];
    if smax == 0.0 {
        return RankDecision { rank: 0, singular_values: sv, indeterminate: false };
    }
    let rank = sv.iter().take_while(|&&s| s > tau * smax).count();
    let indeterminate = rank > 0 && rank < sv.len() && {
        let dropped = sv[rank];
        dropped > 0.0 && sv[rank - 1] / dropped < gap
    };
    RankDecision { rank, singular_values: sv, indeterminate }
}

/// Rank of a set of real vectors with relative singular-value tolerance.
pub fn rank_f64(vectors: &[Vec<f64>], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let n = vectors[0].len();
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let sv = m.svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax.max(1.0)).count()
}

/// Exact rank by fraction-valued Gaussian elimination.
pub fn rank_exact(vectors: &[Vec<Rational>]) -> usize {
    let mut rows: Vec<Vec<Rational>> = vectors.to_vec();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, piv);
        let p = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = rows[r][col].clone() / p.clone();
                for c in col..ncols {
                    let v = rows[rank][c].clone() * f.clone();
                    rows[r][c] -= v;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Coefficient fields with a rank decision for sets of vectors: singular
/// values (relative tolerance 1e-10) for doubles, exact elimination for
/// rationals.
pub trait RankField: crate::poly::Coeff {
    fn rank(vectors: &[Vec<Self>]) -> usize;
}

impl RankField for f64 {
    fn rank(vectors: &[Vec<f64>]) -> usize {
        rank_f64(vectors, 1e-10)
    }
}

impl RankField for Rational {
    fn rank(vectors: &[Vec<Rational>]) -> usize {
        rank_exact(vectors)
    }
}

/// Dense exact matrix, row-major.
pub type QMatrix = Vec<Vec<Rational>>;

pub fn q_identity(n: usize) -> QMatrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect()
}

pub fn q_mul(a: &QMatrix, b: &QMatrix) -> QMatrix {
    let m = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..m).map(|j| row.iter().zip(b).fold(Rational::zero(), |acc, (x, brow)| acc + x * &brow[j])).collect()
        })
        .collect()
}

/// Exact inverse by Gauss–Jordan elimination; `None` when singular.
pub fn q_inverse(a: &QMatrix) -> Option<QMatrix> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> =
        a.iter().zip(q_identity(n)).map(|(r, e)| r.iter().cloned().chain(e).collect()).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for c in 0..2 * n {
            m[col][c] = m[col][c].clone() / p.clone();
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..2 * n {
                    let v = m[col][c].clone() * f.clone();
                    m[r][c] -= v;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn q_to_f64(a: &QMatrix) -> DMatrix<f64> {
    use num_traits::ToPrimitive;
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| a[i][j].to_f64().unwrap_or(f64::NAN))
}

/// Symmetric eigenvalues sorted in descending order.
pub fn sym_eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Solves the linear least-squares problem `min ‖A c − b‖` by SVD.
/// Returns the coefficients and the residual norm.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let x = svd.solve(b, 1e-14 * svd.singular_values.max()).expect("SVD computed with U and V");
    let r = (a * &x - b).norm();
    (x, r)
}
