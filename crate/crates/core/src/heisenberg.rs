//! Closed-form oracle for the Heisenberg group.
//!
//! Points are `(w, z)` with `w = x + iy`, product
//! `(w, z)(w', z') = (w + w', z + z' − ½ Im(w w̄'))`, and the left-invariant
//! frame `X = ∂x − (y/2)∂z`, `Y = ∂y + (x/2)∂z`. The squared distance from the
//! origin is `r² θ²/sin²θ` with `θ = θ(z/r²)` the root of
//! `4ξ = θ/sin²θ − cot θ`.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::jacobi::fit::fit_powers;

/// Point of the Heisenberg group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisPoint {
    pub w: Complex<f64>,
    pub z: f64,
}

impl HeisPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { w: Complex::new(x, y), z }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// From coordinates `[x, y, z]`.
    pub fn from_slice(x: &[f64]) -> Self {
        Self::new(x[0], x[1], x[2])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.w.re, self.w.im, self.z]
    }

    pub fn inverse(&self) -> Self {
        Self { w: -self.w, z: -self.z }
    }

    /// Dilation `δ_α(w, z) = (αw, α²z)`.
    pub fn dilate(&self, alpha: f64) -> Self {
        Self { w: self.w * alpha, z: self.z * alpha * alpha }
    }

    pub fn is_finite(&self) -> bool {
        self.w.re.is_finite() && self.w.im.is_finite() && self.z.is_finite()
    }
}

impl Mul for HeisPoint {
    type Output = HeisPoint;

    fn mul(self, o: HeisPoint) -> HeisPoint {
        HeisPoint { w: self.w + o.w, z: self.z + o.z - 0.5 * (self.w * o.w.conj()).im }
    }
}

/// `θ − sinθ cosθ`, with a series for small `θ` where the difference cancels.
fn theta_minus_sc(th: f64) -> f64 {
    let u = 2.0 * th;
    if u.abs() < 0.1 {
        // (u − sin u)/2
        let u2 = u * u;
        let mut term = u * u2 / 6.0;
        let mut sum = 0.0;
        for k in 0..6 {
            sum += term;
            let a = (2 * k + 4) as f64;
            term *= -u2 / (a * (a + 1.0));
        }
        0.5 * sum
    } else {
        th - 0.5 * u.sin()
    }
}

/// `sinθ − θ cosθ`, with a series for small `θ`.
fn sin_minus_tcos(th: f64) -> f64 {
    if th.abs() < 0.1 {
        // Σ_{k≥1} (−1)^{k+1} θ^{2k+1} · 2k / (2k+1)!
        let t2 = th * th;
        let mut pow = th * t2;
        let mut fact = 6.0;
        let mut sum = 0.0;
        for k in 1..8 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * pow * (2 * k) as f64 / fact;
            pow *= t2;
            fact *= ((2 * k + 2) * (2 * k + 3)) as f64;
        }
        sum
    } else {
        th.sin() - th * th.cos()
    }
}

/// Right-hand side `θ/sin²θ − cot θ`, continuous at 0.
fn theta_rhs(th: f64) -> f64 {
    if th == 0.0 {
        return 0.0;
    }
    let s = th.sin();
    theta_minus_sc(th) / (s * s)
}

fn theta_rhs_derivative(th: f64) -> f64 {
    if th == 0.0 {
        return 2.0 / 3.0;
    }
    let s = th.sin();
    2.0 * sin_minus_tcos(th) / (s * s * s)
}

/// Root `θ ∈ (−π, π)` of `4ξ = θ/sin²θ − cot θ`.
///
/// Safeguarded Newton on a shrinking bracket; the final iterate is polished
/// against its floating-point neighbours.
pub fn theta_solve(xi: f64) -> f64 {
    if xi == 0.0 || !xi.is_finite() {
        return if xi.is_nan() {
            f64::NAN
        } else if xi == 0.0 {
            0.0
        } else {
            PI.copysign(xi)
        };
    }
    let target = 4.0 * xi.abs();
    let f = |th: f64| theta_rhs(th) - target;
    let mut lo = 0.0f64;
    let mut hi = PI;
    // Starting guess: small-θ or near-π asymptotics.
    let mut th = if target < 2.0 { 1.5 * target } else { PI - (PI / target).sqrt() };
    th = th.clamp(1e-300, PI - 1e-16);
    for _ in 0..200 {
        let fv = f(th);
        if fv == 0.0 {
            break;
        }
        if fv > 0.0 {
            hi = hi.min(th);
        } else {
            lo = lo.max(th);
        }
        let d = theta_rhs_derivative(th);
        let mut next = th - fv / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - th).abs() <= 1e-17 * th.abs().max(1e-300) || hi - lo <= f64::EPSILON * hi {
            th = next;
            break;
        }
        th = next;
    }
    // Polish: the best of the neighbouring floats.
    let mut best = th;
    let mut best_r = f(th).abs();
    for cand in [th.next_down(), th.next_up(), th.next_down().next_down(), th.next_up().next_up()] {
        if cand > 0.0 && cand < PI {
            let r = f(cand).abs();
            if r < best_r {
                best = cand;
                best_r = r;
            }
        }
    }
    best.copysign(xi)
}

/// Residual `|ξ − rhs(θ)/4|` of a solution of [`theta_solve`].
pub fn theta_residual(xi: f64, th: f64) -> f64 {
    (xi - 0.25 * theta_rhs(th)).abs()
}

/// Squared distance from the origin to `(w, z)`.
pub fn heis_distance_sq_origin(p: &HeisPoint) -> f64 {
    let r2 = p.w.norm_sqr();
    let z = p.z;
    if r2 == 0.0 {
        return 4.0 * PI * z.abs();
    }
    let xi = z / r2;
    if !xi.is_finite() {
        return 4.0 * PI * z.abs();
    }
    let th = theta_solve(xi);
    if th.abs() < 0.5 * PI {
        let ratio = if th == 0.0 { 1.0 } else { th / th.sin() };
        r2 * ratio * ratio
    } else {
        // r²/sin²θ = 4z/(θ − sinθ cosθ): no cancellation as θ → ±π.
        4.0 * z * th * th / theta_minus_sc(th)
    }
}

/// Sub-Riemannian distance `d(a, b) = d₀(a⁻¹·b)`.
pub fn heis_distance(a: &HeisPoint, b: &HeisPoint) -> f64 {
    heis_distance_sq_origin(&(a.inverse() * *b)).max(0.0).sqrt()
}

/// `(e^{iu} − 1)/(iu)`.
fn phase_ratio(u: f64) -> Complex<f64> {
    if u == 0.0 {
        return Complex::new(1.0, 0.0);
    }
    let h = 0.5 * u;
    Complex::new(u.sin() / u, 2.0 * h.sin() * h.sin() / u)
}

/// `(u − sin u)/u²`.
fn vertical_ratio(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let u2 = u * u;
        let mut term = u / 6.0;
        let mut sum = 0.0;
        for k in 0..7 {
            sum += term;
            let a = (2 * k + 4) as f64;
            term *= -u2 / (a * (a + 1.0));
        }
        sum
    } else {
        (u - u.sin()) / (u * u)
    }
}

/// Geodesic from the origin with initial covector `(h_w, h_z)`, `h_w = h_x + i h_y`:
/// `w(t) = (h_w/(i h_z))(e^{i h_z t} − 1)`, `z(t) = ½∫ Im(w̄ dw)`.
pub fn heis_geodesic(hw: Complex<f64>, hz: f64, t: f64) -> HeisPoint {
    let u = hz * t;
    let w = hw * t * phase_ratio(u);
    let z = 0.5 * hw.norm_sqr() * t * t * vertical_ratio(u);
    HeisPoint { w, z }
}

/// Geodesic from `x0`, covector components `(h_x, h_y, h_z)` in the frame `(X, Y, ∂z)`.
pub fn heis_geodesic_from(x0: &HeisPoint, h: [f64; 3], t: f64) -> HeisPoint {
    *x0 * heis_geodesic(Complex::new(h[0], h[1]), h[2], t)
}

/// Unit covector `h_w = i e^{iφ}`, i.e. `λ = (−sin φ, cos φ, h_z)`.
pub fn unit_covector(phi: f64, hz: f64) -> [f64; 3] {
    [-phi.sin(), phi.cos(), hz]
}

/// `I_λ` and `R_λ` in the basis `(γ̇⊥, γ̇)`.
pub fn heis_curvature(hz: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    (
        DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[0.4 * hz * hz, 0.0, 0.0, 0.0]),
    )
}

/// Second-derivative step in `s`.
pub const S_STEP: f64 = 1e-4;

/// `∂²/∂s² g(0)` by central differences with one Richardson level.
fn second_derivative(g: impl Fn(f64) -> f64, h: f64) -> Result<f64> {
    if !(h > 1e-8) {
        return Err(Error::InvalidParam(format!("differencing step {h:e} underflows")));
    }
    let g0 = g(0.0);
    let d = |h: f64| (g(h) - 2.0 * g0 + g(-h)) / (h * h);
    let (d1, d2) = (d(h), d(0.5 * h));
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `C(t, s) = ½ d²(γ₁(t), γ₂(s))` for `γ₁` with `(φ₁, h_{z,1})` and the straight
/// line `γ₂` in direction `φ₂`.
pub fn cost_two_geodesics(phi1: f64, hz1: f64, phi2: f64, t: f64, s: f64) -> f64 {
    let h1 = unit_covector(phi1, hz1);
    let g1 = heis_geodesic(Complex::new(h1[0], h1[1]), hz1, t);
    let g2 = heis_geodesic(Complex::new(-phi2.sin(), phi2.cos()), 0.0, s);
    0.5 * heis_distance_sq_origin(&(g1.inverse() * g2))
}

/// `∂²C/∂s²(t, 0)`.
pub fn cost_ss(phi1: f64, hz1: f64, phi2: f64, t: f64) -> Result<f64> {
    second_derivative(|s| cost_two_geodesics(phi1, hz1, phi2, t, s), S_STEP)
}

/// Default `t` grid: 16 points on `[0.02, 0.6]·min(1, 1/|h_z|)`.
pub fn default_t_grid(hz: f64) -> Vec<f64> {
    let scale = 1.0f64.min(1.0 / hz.abs().max(1e-12));
    (0..16).map(|i| scale * (0.02 + 0.58 * i as f64 / 15.0)).collect()
}

/// Leading coefficients `(c₀, c₁, c₂)` of a polynomial fit; powers up to 6 absorb
/// the tail when the grid allows it.
fn fit_quadratic_head(ts: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if ts.len() < 3 {
        return Err(Error::Fit("need at least three t values".into()));
    }
    let deg = (ts.len() as i32 - 1).min(6);
    let powers: Vec<i32> = (0..=deg).collect();
    let ym: Vec<DMatrix<f64>> = ys.iter().map(|&y| DMatrix::from_element(1, 1, y)).collect();
    let fit = fit_powers(ts, &ym, &powers);
    let c = |p: i32| fit.coeff(p).map(|m| m[(0, 0)]).unwrap_or(0.0);
    Ok((c(0), c(1), c(2)))
}

/// Fitted `(a₀, a₁, a₂)` of `∂²C/∂s²(t, 0) = a₀ + a₁t + a₂t² + …` on the default grid.
pub fn heis_expansion_check(phi1: f64, hz1: f64, phi2: f64) -> Result<(f64, f64, f64)> {
    let ts = default_t_grid(hz1);
    let ys = ts.iter().map(|&t| cost_ss(phi1, hz1, phi2, t)).collect::<Result<Vec<_>>>()?;
    fit_quadratic_head(&ts, &ys)
}

/// Expected `(a₀, a₁, a₂)` for a straight second geodesic.
pub fn expansion_coefficients(phi1: f64, hz1: f64, phi2: f64) -> (f64, f64, f64) {
    let d = phi2 - phi1;
    let s2 = d.sin().powi(2);
    (1.0 + 3.0 * s2, -0.5 * hz1 * (2.0 * d).sin(), -2.0 / 15.0 * hz1 * hz1 * s2)
}

/// `Δf_t(0)` for `f_t = ½d²(·, γ(t))`: second derivatives along the integral
/// lines of `X` and `Y` through the origin.
pub fn sublaplacian_at(phi: f64, hz: f64, t: f64) -> Result<f64> {
    // X-line has h_w = 1 (φ₂ = −π/2), Y-line has h_w = i (φ₂ = 0).
    Ok(cost_ss(phi, hz, -0.5 * PI, t)? + cost_ss(phi, hz, 0.0, t)?)
}

/// Fitted `(b₀, b₁, b₂)` of `Δf_t(0) = b₀ + b₁t + b₂t² + …` over `t_grid`.
pub fn heis_sublaplacian(phi: f64, hz: f64, t_grid: &[f64]) -> Result<(f64, f64, f64)> {
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParam("t grid must be positive".into()));
    }
    let ys = t_grid.iter().map(|&t| sublaplacian_at(phi, hz, t)).collect::<Result<Vec<_>>>()?;
    fit_quadratic_head(t_grid, &ys)
}

/// Gradient of `c_t(x) = −(1/2t) d²(x, γ(t))` at the origin, by central
/// differences with step `h`.
pub fn cost_gradient_at_origin(h: [f64; 3], t: f64, step: f64) -> [f64; 3] {
    let target = heis_geodesic(Complex::new(h[0], h[1]), h[2], t);
    let c = |x: [f64; 3]| {
        let p = HeisPoint::new(x[0], x[1], x[2]);
        -heis_distance_sq_origin(&(p.inverse() * target)) / (2.0 * t)
    };
    let mut g = [0.0; 3];
    for i in 0..3 {
        let mut xp = [0.0; 3];
        let mut xm = [0.0; 3];
        xp[i] = step;
        xm[i] = -step;
        g[i] = (c(xp) - c(xm)) / (2.0 * step);
    }
    g
}

/// Exact gradient of `½d₀²` at `p` with `r ≠ 0`, in coordinates `(∂x, ∂y, ∂z)`.
///
/// This is the final covector of the minimizing geodesic from the origin,
/// found by inverting the closed-form exponential map.
pub fn half_sq_distance_gradient(p: &HeisPoint) -> Result<[f64; 3]> {
    let r2 = p.w.norm_sqr();
    if r2 == 0.0 {
        return Err(Error::Excluded("gradient of d² is undefined on the vertical axis".into()));
    }
    let th = theta_solve(p.z / r2);
    // Geodesic of length L with h_z = 2θ/L ending at p; L = d₀(p).
    let len = heis_distance_sq_origin(p).sqrt();
    let hz = 2.0 * th / len;
    // w(L) = h_w L (e^{iu} − 1)/(iu), u = 2θ.
    let hw = p.w / (phase_ratio(2.0 * th) * len);
    // Final covector in the frame: h_w rotates by e^{iu}; scale by L.
    let hw_end = hw * Complex::new((2.0 * th).cos(), (2.0 * th).sin()) * len;
    let hz_end = hz * len;
    // Coordinates: p_x = h_X + (y/2) h_z, p_y = h_Y − (x/2) h_z, p_z = h_z.
    let (x, y) = (p.w.re, p.w.im);
    Ok([hw_end.re + 0.5 * y * hz_end, hw_end.im - 0.5 * x * hz_end, hz_end])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_basic() {
        assert_eq!(theta_solve(0.0), 0.0);
        for &xi in &[1e-8, 1e-3, 0.1, 1.0, 7.5, 1e3, 1e6] {
            let th = theta_solve(xi);
            assert!(th > 0.0 && th < PI);
            assert_eq!(theta_solve(-xi), -th);
            assert!(theta_residual(xi, th) <= 1e-12 * (1.0 + xi), "xi={xi}");
        }
        assert!(PI - theta_solve(1e6) < 1e-3);
    }

    #[test]
    fn distance_examples() {
        let o = HeisPoint::origin();
        assert!((heis_distance(&o, &HeisPoint::new(1.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        let z = 0.3;
        let d = heis_distance(&o, &HeisPoint::new(0.0, 0.0, z));
        assert!((d - (4.0 * PI * z).sqrt()).abs() < 1e-14);
        // Continuity towards the axis.
        let near = heis_distance(&o, &HeisPoint::new(1e-7, 0.0, z));
        assert!((near - d).abs() < 1e-6);
    }

    #[test]
    fn geodesic_length_is_distance() {
        for &(phi, hz) in &[(0.3, 0.0), (1.0, 1.0), (-2.0, 2.5)] {
            let h = unit_covector(phi, hz);
            let t_cut = if hz == 0.0 { 5.0 } else { 0.9 * 2.0 * PI / hz.abs() };
            for &t in &[0.1, 0.5 * t_cut, t_cut] {
                let p = heis_geodesic(Complex::new(h[0], h[1]), hz, t);
                assert!((heis_distance_sq_origin(&p).sqrt() - t).abs() < 1e-12 * (1.0 + t));
            }
        }
    }

    #[test]
    fn expansion_matches() {
        for &(p1, hz, p2) in &[(0.0, 1.0, PI / 2.0), (0.0, 2.0, PI / 4.0), (0.3, 0.7, 0.3), (0.0, 1.0, 1.0)] {
            let (a0, a1, a2) = heis_expansion_check(p1, hz, p2).unwrap();
            let (e0, e1, e2) = expansion_coefficients(p1, hz, p2);
            for (a, e) in [(a0, e0), (a1, e1), (a2, e2)] {
                // Relative on nonzero coefficients, absolute on vanishing ones.
                let tol = if e.abs() > 1e-12 { 1e-3 * e.abs() } else { 1e-4 };
                assert!((a - e).abs() <= tol, "{a} {e}");
            }
        }
    }

    #[test]
    fn sublaplacian_expansion() {
        let (b0, b1, b2) = heis_sublaplacian(0.4, 1.0, &default_t_grid(1.0)).unwrap();
        assert!((b0 - 5.0).abs() < 1e-3);
        assert!(b1.abs() < 1e-3);
        assert!((b2 + 2.0 / 15.0).abs() < 1e-2 * 2.0 / 15.0);
    }

    #[test]
    fn gradient_is_initial_covector() {
        let h = unit_covector(0.7, 1.3);
        let g = cost_gradient_at_origin(h, 0.5, 1e-5);
        for i in 0..3 {
            assert!((g[i] - h[i]).abs() < 1e-6, "{g:?} {h:?}");
        }
    }

    #[test]
    fn closed_form_gradient() {
        let p = HeisPoint::new(0.4, -0.2, 0.15);
        let g = half_sq_distance_gradient(&p).unwrap();
        let f = |q: HeisPoint| 0.5 * heis_distance_sq_origin(&q);
        let h = 1e-6;
        let num = [
            (f(HeisPoint::new(0.4 + h, -0.2, 0.15)) - f(HeisPoint::new(0.4 - h, -0.2, 0.15))) / (2.0 * h),
            (f(HeisPoint::new(0.4, -0.2 + h, 0.15)) - f(HeisPoint::new(0.4, -0.2 - h, 0.15))) / (2.0 * h),
            (f(HeisPoint::new(0.4, -0.2, 0.15 + h)) - f(HeisPoint::new(0.4, -0.2, 0.15 - h))) / (2.0 * h),
        ];
        for i in 0..3 {
            assert!((g[i] - num[i]).abs() < 1e-7, "{g:?} {num:?}");
        }
    }
}
