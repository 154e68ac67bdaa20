//! Exact coefficient tables of the canonical Jacobi curve of a Young diagram.
//!
//! Boxes are indexed by `(a, i)`: row `a` of length `n_a`, position
//! `1 ≤ i ≤ n_a`. Matrices are ordered row by row.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::flag::YoungDiagram;
use crate::linalg::{q_identity, q_mul, QMatrix};
use crate::poly::Rational;

/// Rows longer than this are rejected by [`canonical_tables`].
pub const MAX_ROW: usize = 12;

fn fact(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn binom(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    fact(n) / (fact(k) * fact(n - k))
}

fn q(n: impl Into<BigInt>, d: impl Into<BigInt>) -> Rational {
    Rational::new(n.into(), d.into())
}

fn sign(e: usize) -> i64 {
    if e % 2 == 0 {
        1
    } else {
        -1
    }
}

/// The three tables with the box list they are indexed by.
#[derive(Clone, Debug)]
pub struct CanonicalTables {
    pub boxes: Vec<(usize, usize)>,
    /// `Ŝ`: leading coefficients of `S(t)`.
    pub s_hat: QMatrix,
    /// `Ŝ⁻¹`: leading coefficients of `S(t)⁻¹`.
    pub s_hat_inv: QMatrix,
    /// Coefficients `C` coupling `R_{ab,11}` into the next order.
    pub c: QMatrix,
}

fn boxes(d: &YoungDiagram) -> Vec<(usize, usize)> {
    d.rows.iter().enumerate().flat_map(|(a, &na)| (1..=na).map(move |i| (a, i))).collect()
}

/// `Ŝ_{ab,ij} = δ_ab (−1)^{i+j−1} / ((i−1)!(j−1)!(i+j−1))`.
pub fn s_hat_entry(a: usize, i: usize, b: usize, j: usize) -> Rational {
    if a != b {
        return Rational::zero();
    }
    q(sign(i + j - 1), fact(i - 1) * fact(j - 1) * BigInt::from(i + j - 1))
}

/// `Ŝ⁻¹_{ab,ij} = −δ_ab C(n_a+i−1, i−1) C(n_a+j−1, j−1) n_a!² / ((i+j−1)(n_a−i)!(n_a−j)!)`.
pub fn s_hat_inv_entry(na: usize, a: usize, i: usize, b: usize, j: usize) -> Rational {
    if a != b {
        return Rational::zero();
    }
    let num = binom(na + i - 1, i - 1) * binom(na + j - 1, j - 1) * fact(na) * fact(na);
    let den = BigInt::from(i + j - 1) * fact(na - i) * fact(na - j);
    -q(num, den)
}

/// `C_{ij} = (−1)^{i+j} (i+j+2) / ((i−1)!(j−1)!(i+j+1)(i+1)(j+1))`, the same
/// for every pair of rows.
pub fn c_entry(i: usize, j: usize) -> Rational {
    q(sign(i + j) * (i + j + 2) as i64, fact(i - 1) * fact(j - 1) * BigInt::from((i + j + 1) * (i + 1) * (j + 1)))
}

/// Exact tables of a diagram. `None` when a row exceeds [`MAX_ROW`] or the
/// product check `Ŝ Ŝ⁻¹ = I` fails.
pub fn canonical_tables(d: &YoungDiagram) -> Option<CanonicalTables> {
    if d.rows.iter().any(|&r| r == 0 || r > MAX_ROW) {
        return None;
    }
    let bx = boxes(d);
    let s_hat: QMatrix = bx.iter().map(|&(a, i)| bx.iter().map(|&(b, j)| s_hat_entry(a, i, b, j)).collect()).collect();
    let s_hat_inv: QMatrix =
        bx.iter().map(|&(a, i)| bx.iter().map(|&(b, j)| s_hat_inv_entry(d.rows[a], a, i, b, j)).collect()).collect();
    let c: QMatrix = bx.iter().map(|&(_, i)| bx.iter().map(|&(_, j)| c_entry(i, j)).collect()).collect();
    if q_mul(&s_hat, &s_hat_inv) != q_identity(bx.len()) {
        return None;
    }
    Some(CanonicalTables { boxes: bx, s_hat, s_hat_inv, c })
}

/// Closed form of `Ω(n, m)`: `n/(4n²−1)` on the diagonal, `1/(4(n+m))` when
/// `|n−m| = 1`, zero otherwise.
pub fn omega_coefficient(n: usize, m: usize) -> Rational {
    assert!(n >= 1 && m >= 1);
    match n.abs_diff(m) {
        0 => q(n as i64, (4 * n * n - 1) as i64),
        1 => q(1, 4 * (n + m) as i64),
        _ => Rational::zero(),
    }
}

/// `Ω(n, m)` as the double sum
/// `nm/((n+1)(m+1)) Σ_{j≤n} Σ_{i≤m} (−1)^{i+j} C(n+i−1,i−1) C(n+1,i+1)
/// C(m+j−1,j−1) C(m+1,j+1) (i+j+2)/(i+j+1)`.
pub fn omega_double_sum(n: usize, m: usize) -> Rational {
    let mut acc = Rational::zero();
    // `i` pairs with the `n` binomials and `j` with the `m` ones.
    for i in 1..=n {
        for j in 1..=m {
            let num = binom(n + i - 1, i - 1)
                * binom(n + 1, i + 1)
                * binom(m + j - 1, j - 1)
                * binom(m + 1, j + 1)
                * BigInt::from(sign(i + j) * (i + j + 2) as i64);
            acc += q(num, BigInt::from(i + j + 1));
        }
    }
    acc * q((n * m) as i64, ((n + 1) * (m + 1)) as i64)
}

/// `Ω(n_a, n_b)` as the `(a1, b1)` entry of `Ŝ⁻¹ C Ŝ⁻¹` for the two-row
/// diagram `(n_a, n_b)` (or the one-row diagram when `a = b`).
pub fn omega_from_tables(n: usize, m: usize) -> Rational {
    let d = YoungDiagram { rows: vec![n, m] };
    let t = canonical_tables(&d).expect("rows within bounds");
    let prod = q_mul(&q_mul(&t.s_hat_inv, &t.c), &t.s_hat_inv);
    // Box (0,1) is index 0; box (1,1) is index n.
    if n == m {
        prod[0][0].clone()
    } else {
        prod[0][n].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rows() {
        let t = canonical_tables(&YoungDiagram { rows: vec![2] }).unwrap();
        assert_eq!(t.s_hat, vec![vec![q(-1, 1), q(1, 2)], vec![q(1, 2), q(-1, 3)]]);
        assert_eq!(t.s_hat_inv, vec![vec![q(-4, 1), q(-6, 1)], vec![q(-6, 1), q(-12, 1)]]);
        let t = canonical_tables(&YoungDiagram { rows: vec![1] }).unwrap();
        assert_eq!(t.s_hat, vec![vec![q(-1, 1)]]);
        assert_eq!(t.s_hat_inv, vec![vec![q(-1, 1)]]);
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega_coefficient(1, 1), q(1, 3));
        assert_eq!(omega_coefficient(2, 2), q(2, 15));
        assert_eq!(omega_coefficient(2, 1), q(1, 12));
        assert_eq!(omega_coefficient(3, 1), q(0, 1));
        for n in 1..=4 {
            for m in 1..=4 {
                assert_eq!(omega_double_sum(n, m), omega_coefficient(n, m), "({n},{m})");
            }
        }
    }

    #[test]
    fn omega_from_tables_matches_closed_form() {
        for n in 1..=5 {
            for m in 1..=5 {
                assert_eq!(omega_from_tables(n, m), omega_coefficient(n, m), "({n},{m})");
            }
        }
    }

    #[test]
    fn rejects_long_rows() {
        assert!(canonical_tables(&YoungDiagram { rows: vec![13] }).is_none());
    }
}
