//! Geodesic homotheties `φ_t(x) = π ∘ e^{(t−1)H⃗}(d_x f)`, `f = ½d²(x₀, ·)`, and
//! a Monte Carlo estimate of the exponent in `μ(φ_t(Ω)) ~ t^N`.
//!
//! Only models with a closed-form distance are supported: for them both the
//! covector `d_x f` and the extremal flow are explicit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::{half_sq_distance_gradient, heis_distance_sq_origin, heis_geodesic_from, HeisPoint};

/// Step of the central differences used for gradients and Jacobians.
pub const DIFF_STEP: f64 = 1e-5;
/// Radius of the excluded tube around the vertical axis, as a fraction of the
/// box diameter (Heisenberg only).
pub const TUBE_FRACTION: f64 = 0.1;

/// Models with a distance oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleModel {
    Heisenberg,
    /// Flat `ℝⁿ`.
    Euclidean(usize),
    /// Unit sphere in the stereographic chart of the `sphere2` model.
    Sphere2,
}

impl OracleModel {
    /// Parses `heisenberg`, `sphere2`, `euclidean` or `euclidean:n=k`.
    pub fn parse(name: &str) -> Result<Self> {
        let (base, params) = crate::model::parse_builtin_spec(name)?;
        match base.as_str() {
            "heisenberg" => Ok(Self::Heisenberg),
            "sphere2" => Ok(Self::Sphere2),
            "euclidean" => {
                let n = match params.get("n") {
                    Some(v) => v.parse().map_err(|_| Error::InvalidParam(format!("n: `{v}` is not a dimension")))?,
                    None => 2,
                };
                Ok(Self::Euclidean(n))
            }
            other => Err(Error::InvalidParam(format!(
                "model `{other}` has no distance oracle (heisenberg, sphere2, euclidean)"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Heisenberg => 3,
            Self::Euclidean(n) => *n,
            Self::Sphere2 => 2,
        }
    }

    /// Geodesic dimension at every point.
    pub fn geodesic_dimension(&self) -> usize {
        match self {
            Self::Heisenberg => 5,
            other => other.dim(),
        }
    }
}

/// A homothety experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomothetyJob {
    pub model: OracleModel,
    pub center: Vec<f64>,
    /// Axis-aligned box `[lo_i, hi_i]`.
    pub region: Vec<(f64, f64)>,
    pub t_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl HomothetyJob {
    /// Default job for a model: a unit box around the origin and
    /// `t ∈ {0.0125, 0.025, 0.05, 0.1}`.
    pub fn standard(model: OracleModel, seed: u64) -> Self {
        let half = match model {
            OracleModel::Sphere2 => 0.5,
            _ => 1.0,
        };
        Self {
            model,
            center: vec![0.0; model.dim()],
            region: vec![(-half, half); model.dim()],
            t_grid: vec![0.0125, 0.025, 0.05, 0.1],
            samples: 4000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.model.dim();
        if self.center.len() != n || self.region.len() != n {
            return Err(Error::Dimension(format!("job needs {n} coordinates")));
        }
        if self.region.iter().any(|&(a, b)| !(a < b)) {
            return Err(Error::InvalidParam("empty sampling box".into()));
        }
        if self.t_grid.len() < 2 || self.t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidParam("t grid needs at least two values in (0, 1]".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParam("sample count must be positive".into()));
        }
        Ok(())
    }

    fn diameter(&self) -> f64 {
        self.region.iter().map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Whether `x` lies in the excluded set of the oracle.
    pub fn excluded(&self, x: &[f64]) -> bool {
        match self.model {
            OracleModel::Heisenberg => {
                let q = HeisPoint::from_slice(&self.center).inverse() * HeisPoint::from_slice(x);
                q.w.norm() < TUBE_FRACTION * self.diameter()
            }
            OracleModel::Euclidean(_) => false,
            // Stay inside the injectivity radius: away from the antipode.
            OracleModel::Sphere2 => sphere_distance(&self.center, x) > 0.9 * std::f64::consts::PI,
        }
    }
}

fn stereo_to_sphere(x: &[f64]) -> [f64; 3] {
    let (y1, y2) = (0.5 * x[0], 0.5 * x[1]);
    let s = 1.0 + y1 * y1 + y2 * y2;
    [2.0 * y1 / s, 2.0 * y2 / s, 2.0 / s - 1.0]
}

fn sphere_to_stereo(p: &[f64; 3]) -> Vec<f64> {
    let d = 1.0 + p[2];
    vec![2.0 * p[0] / d, 2.0 * p[1] / d]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Great-circle distance between chart points of `sphere2`.
pub fn sphere_distance(a: &[f64], b: &[f64]) -> f64 {
    let (p, q) = (stereo_to_sphere(a), stereo_to_sphere(b));
    let c = cross(&p, &q);
    dot3(&c, &c).sqrt().atan2(dot3(&p, &q))
}

/// Squared distance from the job center.
pub fn oracle_distance_sq(job: &HomothetyJob, x: &[f64]) -> f64 {
    match job.model {
        OracleModel::Heisenberg => {
            heis_distance_sq_origin(&(HeisPoint::from_slice(&job.center).inverse() * HeisPoint::from_slice(x)))
        }
        OracleModel::Euclidean(_) => x.iter().zip(&job.center).map(|(a, b)| (a - b) * (a - b)).sum(),
        OracleModel::Sphere2 => sphere_distance(&job.center, x).powi(2),
    }
}

/// `d_x f` for `f = ½d²(x₀, ·)`, in coordinates.
pub fn distance_gradient(job: &HomothetyJob, x: &[f64]) -> Result<Vec<f64>> {
    match job.model {
        OracleModel::Heisenberg => {
            let g = HeisPoint::from_slice(&job.center);
            let q = g.inverse() * HeisPoint::from_slice(x);
            // Frame components are left-invariant; re-express them at `x`.
            let p = half_sq_distance_gradient(&q)?;
            let h = heis_frame_components(&q.to_vec(), &p);
            Ok(heis_coordinates(x, &h).to_vec())
        }
        OracleModel::Euclidean(_) => Ok(x.iter().zip(&job.center).map(|(a, b)| a - b).collect()),
        OracleModel::Sphere2 => {
            let mut g = vec![0.0; 2];
            for i in 0..2 {
                let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
                xp[i] += DIFF_STEP;
                xm[i] -= DIFF_STEP;
                g[i] = (oracle_distance_sq(job, &xp) - oracle_distance_sq(job, &xm)) / (4.0 * DIFF_STEP);
            }
            Ok(g)
        }
    }
}

/// `(p·X, p·Y, p_z)` at `x`.
fn heis_frame_components(x: &[f64], p: &[f64; 3]) -> [f64; 3] {
    [p[0] - 0.5 * x[1] * p[2], p[1] + 0.5 * x[0] * p[2], p[2]]
}

fn heis_coordinates(x: &[f64], h: &[f64; 3]) -> [f64; 3] {
    [h[0] + 0.5 * x[1] * h[2], h[1] - 0.5 * x[0] * h[2], h[2]]
}

/// Extremal flow of the oracle for time `tau` from `(x, p)`.
pub fn oracle_flow(model: OracleModel, x: &[f64], p: &[f64], tau: f64) -> Vec<f64> {
    match model {
        OracleModel::Heisenberg => {
            let h = heis_frame_components(x, &[p[0], p[1], p[2]]);
            heis_geodesic_from(&HeisPoint::from_slice(x), h, tau).to_vec()
        }
        OracleModel::Euclidean(_) => x.iter().zip(p).map(|(a, b)| a + tau * b).collect(),
        OracleModel::Sphere2 => {
            // Velocity g⁻¹p in the chart, pushed to the sphere.
            let conf = 1.0 + 0.25 * (x[0] * x[0] + x[1] * x[1]);
            let v = [conf * conf * p[0], conf * conf * p[1]];
            let (y1, y2) = (0.5 * x[0], 0.5 * x[1]);
            let s = 1.0 + y1 * y1 + y2 * y2;
            let y = [y1, y2];
            let mut vel = [0.0; 3];
            for j in 0..2 {
                let dyj = 0.5 * v[j];
                for i in 0..2 {
                    let dij = if i == j { 2.0 / s } else { 0.0 };
                    vel[i] += (dij - 4.0 * y[i] * y[j] / (s * s)) * dyj;
                }
                vel[2] += -4.0 * y[j] / (s * s) * dyj;
            }
            let pt = stereo_to_sphere(x);
            let speed = dot3(&vel, &vel).sqrt();
            if speed == 0.0 {
                return x.to_vec();
            }
            let (c, sn) = ((speed * tau).cos(), (speed * tau).sin());
            let q = [c * pt[0] + sn * vel[0] / speed, c * pt[1] + sn * vel[1] / speed, c * pt[2] + sn * vel[2] / speed];
            sphere_to_stereo(&q)
        }
    }
}

/// `φ_t(x)`: flow the covector `d_x f` for time `t − 1`.
pub fn homothety_map(job: &HomothetyJob, x: &[f64], t: f64) -> Result<Vec<f64>> {
    if job.excluded(x) {
        return Err(Error::Excluded(format!("{x:?} lies in the singular set of the distance")));
    }
    let p = distance_gradient(job, x)?;
    Ok(oracle_flow(job.model, x, &p, t - 1.0))
}

/// `|det Dφ_t(x)|` by central differences.
pub fn homothety_jacobian_det(job: &HomothetyJob, x: &[f64], t: f64) -> Result<f64> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
        xp[j] += DIFF_STEP;
        xm[j] -= DIFF_STEP;
        let (fp, fm) = (homothety_map(job, &xp, t)?, homothety_map(job, &xm, t)?);
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * DIFF_STEP);
        }
    }
    let det = jac.determinant().abs();
    if !det.is_finite() {
        return Err(Error::Singular { t, what: format!("homothety Jacobian at {x:?}") });
    }
    Ok(det)
}

/// Pairwise summation: fixed association order, independent of thread count.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Outcome of [`volume_exponent`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub slope: f64,
    pub stderr: f64,
    /// `(t, μ(φ_t(Ω)))`.
    pub volumes: Vec<(f64, f64)>,
    /// Lebesgue measure of the region after exclusion.
    pub region_volume: f64,
}

impl VolumeEstimate {
    pub fn is_monotone(&self) -> bool {
        let mut v = self.volumes.clone();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.windows(2).all(|w| w[1].1 > w[0].1)
    }
}

/// Monte Carlo estimate of `μ(φ_t(Ω)) = ∫_Ω |det Dφ_t|` and the slope of
/// `log μ` against `log t`.
pub fn volume_exponent(job: &HomothetyJob) -> Result<VolumeEstimate> {
    job.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let mut points = Vec::with_capacity(job.samples);
    let mut drawn = 0usize;
    while points.len() < job.samples {
        let x: Vec<f64> = job.region.iter().map(|&(a, b)| rng.gen_range(a..b)).collect();
        drawn += 1;
        if !job.excluded(&x) {
            points.push(x);
        }
        if drawn > 100 * job.samples {
            return Err(Error::InvalidParam("sampling box lies almost entirely in the excluded set".into()));
        }
    }
    let box_volume: f64 = job.region.iter().map(|(a, b)| b - a).product();
    let region_volume = box_volume * points.len() as f64 / drawn as f64;
    let mut volumes = Vec::with_capacity(job.t_grid.len());
    for &t in &job.t_grid {
        let dets = points.par_iter().map(|x| homothety_jacobian_det(job, x, t)).collect::<Result<Vec<_>>>()?;
        volumes.push((t, region_volume * pairwise_sum(&dets) / dets.len() as f64));
    }
    let (slope, stderr) = log_log_slope(&volumes)?;
    Ok(VolumeEstimate { slope, stderr, volumes, region_volume })
}

/// Least-squares slope of `log y` on `log t` and its standard error.
fn log_log_slope(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pts.iter().any(|&(_, v)| !(v > 0.0)) {
        return Err(Error::Fit("nonpositive volume estimate".into()));
    }
    let m = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let stderr = if pts.len() > 2 { (rss / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok((slope, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_one_and_contraction() {
        for model in [OracleModel::Heisenberg, OracleModel::Sphere2, OracleModel::Euclidean(2)] {
            let job = HomothetyJob::standard(model, 1);
            let x: Vec<f64> = vec![0.4, -0.3, 0.2][..model.dim()].to_vec();
            let y = homothety_map(&job, &x, 1.0).unwrap();
            for i in 0..x.len() {
                assert!((y[i] - x[i]).abs() < 1e-6, "{model:?} {y:?}");
            }
            let small = homothety_map(&job, &x, 0.01).unwrap();
            assert!(small.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.05);
        }
    }

    #[test]
    fn euclidean_is_linear() {
        let mut job = HomothetyJob::standard(OracleModel::Euclidean(2), 1);
        job.center = vec![0.2, -0.1];
        let y = homothety_map(&job, &[0.7, 0.4], 0.3).unwrap();
        assert!((y[0] - (0.2 + 0.3 * 0.5)).abs() < 1e-15);
        assert!((y[1] - (-0.1 + 0.3 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn heisenberg_excludes_axis() {
        let job = HomothetyJob::standard(OracleModel::Heisenberg, 1);
        assert!(matches!(homothety_map(&job, &[0.01, 0.0, 0.5], 0.5), Err(Error::Excluded(_))));
    }

    #[test]
    fn pairwise_is_order_stable() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v));
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
