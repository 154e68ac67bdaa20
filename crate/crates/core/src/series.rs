//! Truncated power series with matrix coefficients.

use nalgebra::DMatrix;

/// `Σ_k c_k s^k`, coefficients in increasing order.
pub type MatSeries = Vec<DMatrix<f64>>;

/// Product truncated to the shorter length.
pub fn mul(a: &MatSeries, b: &MatSeries) -> MatSeries {
    let len = a.len().min(b.len());
    (0..len)
        .map(|k| {
            let mut acc = DMatrix::zeros(a[0].nrows(), b[0].ncols());
            for j in 0..=k {
                acc.gemm(1.0, &a[j], &b[k - j], 1.0);
            }
            acc
        })
        .collect()
}

/// Term-by-term derivative; one order shorter.
pub fn derivative(a: &MatSeries) -> MatSeries {
    a.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

pub fn sub(a: &MatSeries, b: &MatSeries) -> MatSeries {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Inverse of a square series with invertible constant term.
pub fn inverse(a: &MatSeries) -> Option<MatSeries> {
    let a0inv = a.first()?.clone().try_inverse()?;
    let mut out: MatSeries = vec![a0inv.clone()];
    for k in 1..a.len() {
        let mut acc = DMatrix::zeros(a[0].nrows(), a[0].ncols());
        for j in 1..=k {
            acc.gemm(1.0, &a[j], &out[k - j], 1.0);
        }
        out.push(-(&a0inv * acc));
    }
    Some(out)
}

/// Builds a matrix series from scalar series of its entries (row-major).
pub fn from_entries(rows: usize, cols: usize, entries: &[Vec<f64>]) -> MatSeries {
    let len = entries.iter().map(Vec::len).min().unwrap_or(0);
    (0..len).map(|k| DMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j][k])).collect()
}

/// Evaluates at `s` by Horner's rule.
pub fn eval(a: &MatSeries, s: f64) -> DMatrix<f64> {
    let mut acc = a.last().cloned().expect("non-empty series");
    for c in a.iter().rev().skip(1) {
        acc *= s;
        acc += c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_one_minus_s() {
        let a: MatSeries = vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, -1.0)]
            .into_iter()
            .chain(std::iter::repeat(DMatrix::zeros(1, 1)).take(4))
            .collect();
        let inv = inverse(&a).unwrap();
        assert!(inv.iter().all(|c| (c[(0, 0)] - 1.0).abs() < 1e-15));
        let d = derivative(&inv);
        assert_eq!(d[2][(0, 0)], 3.0);
        let p = mul(&a, &inv);
        assert_eq!(p[0][(0, 0)], 1.0);
        assert!(p[1..].iter().all(|c| c[(0, 0)] == 0.0));
    }
}
