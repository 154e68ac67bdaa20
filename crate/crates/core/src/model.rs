//! Affine control models `ẋ = f₀(x) + Σ uᵢ fᵢ(x)` with cost `½|u|²`.
//!
//! A [`ControlModel`] owns polynomial vector fields and a base point and is
//! validated on construction: the controlled fields must be independent at the
//! base point and the Lie algebra generated by drift and controlled fields must
//! reach full rank there within a bounded bracket depth.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::{lie_bracket, parse_polynomial_field, PolyVectorField};
use crate::linalg::RankField;
use crate::poly::{parse_polynomial, Coeff, Polynomial, Rational};

/// Default depth of the bracket-generation search.
pub const DEFAULT_BRACKET_DEPTH: usize = 6;

/// An affine control system with a distinguished base point.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlModel<C: Coeff = f64> {
    name: String,
    n: usize,
    drift: Option<PolyVectorField<C>>,
    fields: Vec<PolyVectorField<C>>,
    base_point: Vec<f64>,
}

impl<C: Coeff + RankField> ControlModel<C> {
    pub fn new(
        name: impl Into<String>,
        drift: Option<PolyVectorField<C>>,
        fields: Vec<PolyVectorField<C>>,
        base_point: Vec<f64>,
    ) -> Result<Self> {
        Self::with_depth(name, drift, fields, base_point, DEFAULT_BRACKET_DEPTH)
    }

    /// Like [`ControlModel::new`] with an explicit bracket depth for the
    /// generation check.
    pub fn with_depth(
        name: impl Into<String>,
        drift: Option<PolyVectorField<C>>,
        fields: Vec<PolyVectorField<C>>,
        base_point: Vec<f64>,
        depth: usize,
    ) -> Result<Self> {
        let n = base_point.len();
        if fields.is_empty() {
            return Err(Error::ModelRejected("no controlled fields".into()));
        }
        for f in fields.iter().chain(drift.iter()) {
            if f.dim() != n {
                return Err(Error::Dimension(format!("field on R^{} with a base point in R^{n}", f.dim())));
            }
        }
        if base_point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("base point must be finite".into()));
        }
        let drift = drift.filter(|d| !d.is_zero());
        let m = Self { name: name.into(), n, drift, fields, base_point };
        m.validate(depth)?;
        Ok(m)
    }

    fn x0(&self) -> Vec<C> {
        self.base_point.iter().map(|&v| C::from_f64(v).expect("finite base point")).collect()
    }

    fn validate(&self, depth: usize) -> Result<()> {
        let x0 = self.x0();
        let vals: Vec<Vec<C>> = self.fields.iter().map(|f| f.eval(&x0)).collect();
        let k = self.fields.len();
        if C::rank(&vals) < k {
            return Err(Error::ModelRejected(format!(
                "controlled fields are linearly dependent at the base point (rank {} < {k})",
                C::rank(&vals)
            )));
        }
        let reached = self.bracket_rank(depth);
        if reached < self.n {
            return Err(Error::ModelRejected(format!(
                "brackets up to depth {depth} span only {reached} of {} dimensions at the base point",
                self.n
            )));
        }
        Ok(())
    }

    /// Rank at the base point of all right-normed brackets of the generators
    /// `{f₀, f₁, …, f_k}` up to the given length.
    pub fn bracket_rank(&self, depth: usize) -> usize {
        let x0 = self.x0();
        let gens: Vec<PolyVectorField<C>> = self.drift.iter().cloned().chain(self.fields.iter().cloned()).collect();
        let mut span: Vec<Vec<C>> = gens.iter().map(|g| g.eval(&x0)).collect();
        let mut rank = C::rank(&span);
        let mut level = gens.clone();
        for _ in 1..depth {
            if rank >= self.n {
                break;
            }
            let mut next: Vec<PolyVectorField<C>> = Vec::new();
            for g in &gens {
                for b in &level {
                    let br = lie_bracket(g, b).expect("equal dimensions");
                    if br.is_zero() || next.iter().any(|v| v == &br || v == &br.scale(&-C::one())) {
                        continue;
                    }
                    span.push(br.eval(&x0));
                    next.push(br);
                }
            }
            rank = C::rank(&span);
            if next.is_empty() {
                break;
            }
            level = next;
        }
        rank
    }
}

impl<C: Coeff> ControlModel<C> {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Control rank.
    pub fn k(&self) -> usize {
        self.fields.len()
    }

    pub fn drift(&self) -> Option<&PolyVectorField<C>> {
        self.drift.as_ref()
    }

    pub fn fields(&self) -> &[PolyVectorField<C>] {
        &self.fields
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn is_drift_free(&self) -> bool {
        self.drift.is_none()
    }

    /// Same model with a different base point, without re-validation.
    pub fn at_point(&self, x0: &[f64]) -> Self {
        Self { base_point: x0.to_vec(), ..self.clone() }
    }

    pub fn to_f64(&self) -> ControlModel<f64> {
        ControlModel {
            name: self.name.clone(),
            n: self.n,
            drift: self.drift.as_ref().map(PolyVectorField::to_f64),
            fields: self.fields.iter().map(PolyVectorField::to_f64).collect(),
            base_point: self.base_point.clone(),
        }
    }

    /// Controlled fields evaluated at `x`, as columns of an `n × k` matrix.
    pub fn frame_at(&self, x: &[f64]) -> DMatrix<f64> {
        let k = self.k();
        DMatrix::from_fn(self.n, k, |i, j| self.fields[j].component(i).eval_f64(x))
    }

    /// The field `T = f₀ + Σ uᵢ fᵢ` generating the curve of a constant control.
    pub fn constant_control_field(&self, u: &[C]) -> PolyVectorField<C> {
        let mut t = self.drift.clone().unwrap_or_else(|| PolyVectorField::zero(self.n));
        for (f, ui) in self.fields.iter().zip(u) {
            t = t.add(&f.scale(ui)).expect("equal dimensions");
        }
        t
    }
}

impl ControlModel<f64> {
    /// Exact rational copy (every double is a dyadic rational).
    pub fn to_exact(&self) -> ControlModel<Rational> {
        ControlModel {
            name: self.name.clone(),
            n: self.n,
            drift: self.drift.as_ref().map(PolyVectorField::to_exact),
            fields: self.fields.iter().map(PolyVectorField::to_exact).collect(),
            base_point: self.base_point.clone(),
        }
    }
}

/// Change of coordinates adapted to the distribution at the base point.
///
/// New coordinates `y = T⁻¹ x`; the first `k` basis vectors are `fᵢ(x₀)`.
/// Covectors change by `Tᵀ`, so `(x, p) ↦ (T⁻¹x, Tᵀp)` is symplectic.
#[derive(Clone, Debug)]
pub struct FrameAdaptation {
    pub t: DMatrix<f64>,
    pub t_inv: DMatrix<f64>,
    /// `T⁻ᵀ`, the matrix acting on covector components.
    pub t_inv_transpose: DMatrix<f64>,
    pub k: usize,
}

impl FrameAdaptation {
    /// Columns `f₁(x₀), …, f_k(x₀)` completed by an orthonormal basis of their
    /// orthogonal complement (Gram–Schmidt over the standard basis).
    pub fn new(model: &ControlModel<f64>) -> Result<Self> {
        let n = model.n();
        let k = model.k();
        let f = model.frame_at(model.base_point());
        let mut cols: Vec<nalgebra::DVector<f64>> = (0..k).map(|j| f.column(j).into_owned()).collect();
        // Orthonormal basis of span(f) to project against.
        let mut ortho: Vec<nalgebra::DVector<f64>> = Vec::new();
        for c in &cols {
            let mut v = c.clone();
            for q in &ortho {
                v -= q * q.dot(&v);
            }
            let nv = v.norm();
            if nv < 1e-12 * c.norm().max(1.0) {
                return Err(Error::ModelRejected("controlled fields are dependent at the base point".into()));
            }
            ortho.push(v / nv);
        }
        for i in 0..n {
            if cols.len() == n {
                break;
            }
            let mut v = nalgebra::DVector::zeros(n);
            v[i] = 1.0;
            for q in &ortho {
                v -= q * q.dot(&v);
            }
            let nv = v.norm();
            if nv > 1e-6 {
                let v = v / nv;
                ortho.push(v.clone());
                cols.push(v);
            }
        }
        let t = DMatrix::from_columns(&cols);
        let t_inv = t.clone().try_inverse().ok_or_else(|| Error::ModelRejected("adapted frame is singular".into()))?;
        let t_inv_transpose = t_inv.transpose();
        Ok(Self { t, t_inv, t_inv_transpose, k })
    }

    /// Maximal deviation of `(T ⊕ T⁻ᵀ)ᵀ J (T ⊕ T⁻ᵀ) − J` for the canonical `J`.
    pub fn symplectic_defect(&self) -> f64 {
        let n = self.t.nrows();
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&self.t_inv);
        g.view_mut((n, n), (n, n)).copy_from(&self.t.transpose());
        let j = crate::hamflow::symplectic_j(n);
        (g.transpose() * &j * &g - j).amax()
    }
}

// ---------------------------------------------------------------------------
// Built-in models

/// Parameters of a built-in model, `key=value` pairs.
pub type Params = BTreeMap<String, String>;

/// Names accepted by [`builtin_model`].
pub const BUILTIN_NAMES: &[&str] = &["heisenberg", "contact3d_perturbed", "lq", "sphere2", "euclidean", "carnot36"];

/// Perturbation presets of the contact family, as `(p1, p2)` added to the
/// vertical components of the two Heisenberg fields.
pub const CONTACT_PRESETS: &[(&str, &str, &str)] =
    &[("a", "0", "1/2*x1^2"), ("b", "1/4*x2^2", "-1/3*x1*x2"), ("c", "1/5*x1*x2 + 1/10*x3", "3/10*x1^2 - 1/5*x2^2")];

fn rfield(e: &[&str]) -> Result<PolyVectorField<Rational>> {
    parse_polynomial_field(e, e.len())
}

fn parse_matrix(key: &str, s: &str) -> Result<Vec<Vec<f64>>> {
    let m: Vec<Vec<f64>> =
        serde_json::from_str(s).map_err(|e| Error::InvalidParam(format!("{key}: expected [[..],..] matrix: {e}")))?;
    Ok(m)
}

fn parse_point(key: &str, s: &str) -> Result<Vec<f64>> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    t.split(|c| c == ',' || c == ' ')
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| Error::InvalidParam(format!("{key}: `{p}` is not a number"))))
        .collect()
}

/// Builds one of the shipped models.
///
/// * `heisenberg`: `X = ∂x − (y/2)∂z`, `Y = ∂y + (x/2)∂z` at the origin.
/// * `contact3d_perturbed`: Heisenberg frame with polynomials `p1`, `p2`
///   added to the vertical components (`preset=a|b|c` or explicit `p1`, `p2`).
/// * `lq`: `ẋ = Ax + Bu` (`A`, `B` as JSON matrices, or
///   `preset=double_integrator|triple_integrator`).
/// * `sphere2`: orthonormal frame `(1 + |x|²/4)∂ᵢ` of the unit sphere in
///   stereographic coordinates (`base=[a,b]`, default the origin).
/// * `euclidean`: `∂₁, …, ∂ₙ` (`n`, default 2).
/// * `carnot36`: free step-two nilpotent structure of rank 3 in dimension 6.
pub fn builtin_model(name: &str, params: &Params) -> Result<ControlModel<Rational>> {
    let allowed: &[&str] = match name {
        "heisenberg" | "carnot36" => &[],
        "contact3d_perturbed" => &["preset", "p1", "p2"],
        "lq" => &["preset", "A", "B"],
        "sphere2" => &["base"],
        "euclidean" => &["n"],
        _ => return Err(Error::UnknownModel(name.to_string())),
    };
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidParam(format!("`{bad}` is not a parameter of {name}")));
    }
    match name {
        "heisenberg" => ControlModel::new(
            "heisenberg",
            None,
            vec![rfield(&["1", "0", "-1/2*x2"])?, rfield(&["0", "1", "1/2*x1"])?],
            vec![0.0; 3],
        ),
        "contact3d_perturbed" => {
            let (p1, p2) = match (params.get("p1"), params.get("p2")) {
                (None, None) => {
                    let preset = params.get("preset").map_or("a", String::as_str);
                    let (_, a, b) = CONTACT_PRESETS
                        .iter()
                        .find(|(n, _, _)| *n == preset)
                        .ok_or_else(|| Error::InvalidParam(format!("unknown preset `{preset}`")))?;
                    (a.to_string(), b.to_string())
                }
                (a, b) => (a.cloned().unwrap_or_else(|| "0".into()), b.cloned().unwrap_or_else(|| "0".into())),
            };
            let p1 = parse_polynomial(&p1, 3)?;
            let p2 = parse_polynomial(&p2, 3)?;
            let x = rfield(&["1", "0", "-1/2*x2"])?;
            let y = rfield(&["0", "1", "1/2*x1"])?;
            let zero = Polynomial::zero(3);
            let dx = PolyVectorField::new(vec![zero.clone(), zero.clone(), p1])?;
            let dy = PolyVectorField::new(vec![zero.clone(), zero, p2])?;
            let m = ControlModel::new("contact3d_perturbed", None, vec![x.add(&dx)?, y.add(&dy)?], vec![0.0; 3])?;
            let br = lie_bracket(&m.fields[0], &m.fields[1])?;
            if br.component(2).eval_f64(&[0.0; 3]).abs() < 1e-12 {
                return Err(Error::ModelRejected("perturbation destroys the contact condition at 0".into()));
            }
            Ok(m)
        }
        "lq" => {
            let (a, b) = match params.get("preset").map(String::as_str) {
                Some("double_integrator") => (vec![vec![0.0, 1.0], vec![0.0, 0.0]], vec![vec![0.0], vec![1.0]]),
                Some("triple_integrator") => (
                    vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]],
                    vec![vec![0.0], vec![0.0], vec![1.0]],
                ),
                Some(other) => return Err(Error::InvalidParam(format!("unknown lq preset `{other}`"))),
                None => {
                    let a = params.get("A").ok_or_else(|| Error::InvalidParam("lq needs A and B".into()))?;
                    let b = params.get("B").ok_or_else(|| Error::InvalidParam("lq needs A and B".into()))?;
                    (parse_matrix("A", a)?, parse_matrix("B", b)?)
                }
            };
            lq_model(&a, &b)
        }
        "sphere2" => {
            let base = match params.get("base") {
                Some(s) => parse_point("base", s)?,
                None => vec![0.0, 0.0],
            };
            if base.len() != 2 {
                return Err(Error::InvalidParam("sphere2 base point needs 2 coordinates".into()));
            }
            let c = "1 + 1/4*x1^2 + 1/4*x2^2";
            ControlModel::new("sphere2", None, vec![rfield(&[c, "0"])?, rfield(&["0", c])?], base)
        }
        "euclidean" => {
            let n: usize = match params.get("n") {
                Some(s) => s.parse().map_err(|_| Error::InvalidParam(format!("n: `{s}` is not a positive integer")))?,
                None => 2,
            };
            if n == 0 {
                return Err(Error::InvalidParam("n must be positive".into()));
            }
            let fields = (0..n)
                .map(|i| {
                    let mut v = vec![Rational::from_ratio(0, 1); n];
                    v[i] = Rational::from_ratio(1, 1);
                    PolyVectorField::constant(&v)
                })
                .collect();
            ControlModel::new("euclidean", None, fields, vec![0.0; n])
        }
        "carnot36" => ControlModel::new(
            "carnot36",
            None,
            vec![
                rfield(&["1", "0", "0", "-1/2*x2", "-1/2*x3", "0"])?,
                rfield(&["0", "1", "0", "1/2*x1", "0", "-1/2*x3"])?,
                rfield(&["0", "0", "1", "0", "1/2*x1", "1/2*x2"])?,
            ],
            vec![0.0; 6],
        ),
        _ => unreachable!(),
    }
}

/// The linear system `ẋ = Ax + Bu` as a control model at the origin.
pub fn lq_model(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<ControlModel<Rational>> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParam("A must be a non-empty square matrix".into()));
    }
    if b.len() != n || b.is_empty() || b[0].is_empty() || b.iter().any(|r| r.len() != b[0].len()) {
        return Err(Error::InvalidParam("B must have n rows of equal length".into()));
    }
    let q = |v: f64| Rational::from_f64(v).ok_or_else(|| Error::InvalidParam("matrix entries must be finite".into()));
    let mut drift = Vec::with_capacity(n);
    for row in a {
        let mut p = Polynomial::zero(n);
        for (j, &v) in row.iter().enumerate() {
            p = &p + &Polynomial::var(n, j).scale(&q(v)?);
        }
        drift.push(p);
    }
    let k = b[0].len();
    let fields = (0..k)
        .map(|j| Ok(PolyVectorField::constant(&b.iter().map(|r| q(r[j])).collect::<Result<Vec<_>>>()?)))
        .collect::<Result<Vec<_>>>()?;
    ControlModel::new("lq", Some(PolyVectorField::new(drift)?), fields, vec![0.0; n])
}

/// Splits `name[:params]` where params are `;`-separated `key=value` pairs
/// and a bare token stands for `preset=token`.
pub fn parse_builtin_spec(spec: &str) -> Result<(String, Params)> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (spec.trim(), ""),
    };
    let mut params = Params::new();
    for item in rest.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once('=') {
            Some((k, v)) => {
                params.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => {
                params.insert("preset".into(), item.to_string());
            }
        }
    }
    Ok((name.to_string(), params))
}

/// Model configuration file (TOML).
#[derive(Debug, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub n: usize,
    pub k: Option<usize>,
    pub drift: Option<Vec<String>>,
    #[serde(rename = "A")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    pub b: Option<Vec<Vec<f64>>>,
    pub base_point: Option<Vec<f64>>,
    pub homothety: Option<toml::Table>,
    #[serde(flatten)]
    pub fields: BTreeMap<String, Vec<String>>,
}

/// Reads a model from its configuration text. Controlled fields are given as
/// `field_1 … field_k`, each a list of `n` polynomial expressions; a linear
/// system may instead be given by matrices `A` and `B`.
pub fn model_from_config(text: &str) -> Result<ControlModel<Rational>> {
    let cfg: ModelConfig = toml::from_str(text).map_err(|e| Error::Config(format!("model file: {e}")))?;
    let n = cfg.n;
    if let (Some(a), Some(b)) = (&cfg.a, &cfg.b) {
        if a.len() != n {
            return Err(Error::Config(format!("A has {} rows but n = {n}", a.len())));
        }
        let m = lq_model(a, b)?;
        return Ok(ControlModel { name: cfg.name, ..m });
    }
    let k = cfg.k.ok_or_else(|| Error::Config("model file: missing `k`".into()))?;
    let mut fields = Vec::with_capacity(k);
    for i in 1..=k {
        let key = format!("field_{i}");
        let e = cfg.fields.get(&key).ok_or_else(|| Error::Config(format!("model file: missing `{key}`")))?;
        fields.push(parse_polynomial_field(e, n)?);
    }
    if let Some(extra) = cfg
        .fields
        .keys()
        .find(|key| key.strip_prefix("field_").and_then(|i| i.parse::<usize>().ok()).is_none_or(|i| i == 0 || i > k))
    {
        return Err(Error::Config(format!("model file: unexpected key `{extra}`")));
    }
    let drift = cfg.drift.as_ref().map(|d| parse_polynomial_field(d, n)).transpose()?;
    let base = cfg.base_point.unwrap_or_else(|| vec![0.0; n]);
    ControlModel::new(cfg.name, drift, fields, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_builtin() {
        let m = builtin_model("heisenberg", &Params::new()).unwrap();
        assert_eq!((m.n(), m.k()), (3, 2));
        assert_eq!(m.fields()[0].to_texts(), vec!["1", "0", "-1/2*x2"]);
        assert!(m.is_drift_free());
    }

    #[test]
    fn lq_double_integrator() {
        let (name, params) = parse_builtin_spec("lq:A=[[0,1],[0,0]];B=[[0],[1]]").unwrap();
        let m = builtin_model(&name, &params).unwrap();
        assert_eq!(m.drift().unwrap().to_texts(), vec!["x2", "0"]);
        assert_eq!(m.fields()[0].to_texts(), vec!["0", "1"]);
        let (name, params) = parse_builtin_spec("lq:double_integrator").unwrap();
        assert_eq!(builtin_model(&name, &params).unwrap(), m);
    }

    #[test]
    fn rejections() {
        let p = Params::new();
        assert!(matches!(builtin_model("torus", &p), Err(Error::UnknownModel(_))));
        let (n, p) = parse_builtin_spec("lq:A=[[0,0],[0,0]];B=[[0],[1]]").unwrap();
        assert!(matches!(builtin_model(&n, &p), Err(Error::ModelRejected(_))));
        let dep = ControlModel::new(
            "dep",
            None,
            vec![rfield(&["1", "0"]).unwrap(), rfield(&["2", "0"]).unwrap()],
            vec![0.0, 0.0],
        );
        assert!(matches!(dep, Err(Error::ModelRejected(_))));
        let (n, p) = parse_builtin_spec("euclidean:dim=3").unwrap();
        assert!(matches!(builtin_model(&n, &p), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn bracket_depth_matters() {
        // Triple integrator needs brackets of length 3.
        let a = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]];
        let b = vec![vec![0.0], vec![0.0], vec![1.0]];
        let m = lq_model(&a, &b).unwrap();
        assert_eq!(m.bracket_rank(2), 2);
        assert_eq!(m.bracket_rank(3), 3);
    }

    #[test]
    fn carnot_growth() {
        let m = builtin_model("carnot36", &Params::new()).unwrap();
        assert_eq!(m.bracket_rank(1), 3);
        assert_eq!(m.bracket_rank(2), 6);
    }

    #[test]
    fn config_round_trip() {
        let text = r#"
name = "heis-file"
n = 3
k = 2
field_1 = ["1", "0", "-1/2*x2"]
field_2 = ["0", "1", "1/2*x1"]
base_point = [0, 0, 0]
"#;
        let m = model_from_config(text).unwrap();
        let h = builtin_model("heisenberg", &Params::new()).unwrap();
        assert_eq!(m.fields(), h.fields());
        assert!(model_from_config(&text.replace("field_2", "field_3")).is_err());
    }

    #[test]
    fn adapted_frame_is_symplectic() {
        let m = builtin_model("lq", &parse_builtin_spec("lq:double_integrator").unwrap().1).unwrap().to_f64();
        let fa = FrameAdaptation::new(&m).unwrap();
        assert_eq!(fa.t.column(0).as_slice(), &[0.0, 1.0]);
        assert!(fa.symplectic_defect() < 1e-14);
    }
}
