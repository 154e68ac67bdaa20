//! Least-squares fits of matrix-valued functions by power laws in `t`.

use nalgebra::DMatrix;

use crate::linalg::lstsq;

/// Result of fitting `Y(t) ≈ Σ_p C_p t^p` over sample points.
#[derive(Clone, Debug)]
pub struct PowerFit {
    pub powers: Vec<i32>,
    pub coeffs: Vec<DMatrix<f64>>,
    /// Largest absolute residual over all samples and entries, divided by the
    /// largest absolute data entry.
    pub residual: f64,
}

impl PowerFit {
    pub fn coeff(&self, p: i32) -> Option<&DMatrix<f64>> {
        self.powers.iter().position(|&q| q == p).map(|i| &self.coeffs[i])
    }
}

/// Fits every entry of `ys` (all of the same shape) with the given powers of
/// `t`. Columns are scaled by `t_ref` for conditioning.
pub fn fit_powers(ts: &[f64], ys: &[DMatrix<f64>], powers: &[i32]) -> PowerFit {
    assert_eq!(ts.len(), ys.len());
    let (r, c) = ys[0].shape();
    let t_ref = ts.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let design = DMatrix::from_fn(ts.len(), powers.len(), |i, j| (ts[i] / t_ref).powi(powers[j]));
    let rhs = DMatrix::from_fn(ts.len(), r * c, |i, e| ys[i][(e / c, e % c)]);
    let (x, _) = lstsq(&design, &rhs);
    let coeffs: Vec<DMatrix<f64>> = powers
        .iter()
        .enumerate()
        .map(|(j, &p)| DMatrix::from_fn(r, c, |a, b| x[(j, a * c + b)] / t_ref.powi(p)))
        .collect();
    let pred = &design * &x;
    let scale = rhs.amax().max(f64::MIN_POSITIVE);
    let residual = (pred - rhs).amax() / scale;
    PowerFit { powers: powers.to_vec(), coeffs, residual }
}

/// `count` points `ε·64^{-(count-1-i)/(count-1)}`, geometric on `[ε/64, ε]`.
pub fn geometric_grid(eps: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count).map(|i| eps * 64f64.powf(-((count - 1 - i) as f64) / (count - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_polynomial() {
        let ts = geometric_grid(0.5, 12);
        let ys: Vec<_> = ts.iter().map(|&t| DMatrix::from_element(1, 1, 2.0 - 3.0 * t * t + 0.5 * t.powi(3))).collect();
        let f = fit_powers(&ts, &ys, &[0, 2, 3, 4]);
        assert!((f.coeff(0).unwrap()[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((f.coeff(2).unwrap()[(0, 0)] + 3.0).abs() < 1e-10);
        assert!(f.residual < 1e-13);
        assert!((ts[0] - 0.5 / 64.0).abs() < 1e-15 && ts[11] == 0.5);
    }
}
