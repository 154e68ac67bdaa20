//! JSON report of one analysis run.
//!
//! Field names are stable; matrices are row-major arrays of rows and
//! eigenvalues are sorted descending.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamflow::ExtremalState;
use crate::jacobi::{curvature_report, CurvatureReport, FitOptions, RESIDUAL_THRESHOLD};
use crate::model::ControlModel;

/// Documented field list of [`AnalysisReport`], in serialization order.
pub const REPORT_FIELDS: &[(&str, &str)] = &[
    ("model", "model name"),
    ("base_point", "x₀ in model coordinates"),
    ("covector", "initial covector λ₀ in model coordinates"),
    ("growth_vector", "dimensions k₁ < … < k_m of the flag at t = 0"),
    ("young_diagram", "row lengths, longest first"),
    ("geodesic_dimension", "N = Σ(2i − 1)dᵢ"),
    ("i_matrix", "I_λ in control coordinates, row-major"),
    ("i_eigenvalues", "eigenvalues of I_λ, descending"),
    ("r_matrix", "R_λ in control coordinates, row-major"),
    ("ric", "trace of R_λ"),
    ("residual", "relative residual of the Laurent fit"),
    ("reliable", "fit residual below threshold and no invariant warnings"),
    ("warnings", "violated report invariants"),
    ("tool_version", "crate version"),
    ("settings", "window, grid, degree, seed and tolerances"),
];

/// Run settings recorded in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    /// Fit window `[t_min, ε]` actually used.
    pub window: [f64; 2],
    pub grid: usize,
    pub degree: i32,
    pub seed: Option<u64>,
    pub residual_threshold: f64,
    pub rank_tolerance: f64,
}

/// Structured result of `analyze`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub model: String,
    pub base_point: Vec<f64>,
    pub covector: Vec<f64>,
    pub growth_vector: Vec<usize>,
    pub young_diagram: Vec<usize>,
    pub geodesic_dimension: usize,
    pub i_matrix: Vec<Vec<f64>>,
    pub i_eigenvalues: Vec<f64>,
    pub r_matrix: Vec<Vec<f64>>,
    pub ric: f64,
    pub residual: f64,
    pub reliable: bool,
    pub warnings: Vec<String>,
    pub tool_version: String,
    pub settings: ReportSettings,
}

/// Row-major rows of a matrix.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl AnalysisReport {
    pub fn from_curvature(
        model: &ControlModel<f64>,
        lambda0: &ExtremalState,
        rep: &CurvatureReport,
        opts: &FitOptions,
        seed: Option<u64>,
    ) -> Self {
        let mut eig = rep.i_eigenvalues.clone();
        eig.sort_by(|a, b| b.total_cmp(a));
        Self {
            model: model.name().to_string(),
            base_point: lambda0.x.clone(),
            covector: lambda0.p.clone(),
            growth_vector: rep.growth_vector.ks.clone(),
            young_diagram: rep.young_diagram.rows.clone(),
            geodesic_dimension: rep.geodesic_dimension,
            i_matrix: matrix_rows(&rep.i_matrix),
            i_eigenvalues: eig,
            r_matrix: matrix_rows(&rep.r_matrix),
            ric: rep.ric,
            residual: rep.residual,
            reliable: rep.reliable,
            warnings: rep.warnings.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            settings: ReportSettings {
                window: [rep.window.0, rep.window.1],
                grid: opts.grid,
                degree: opts.degree,
                seed,
                residual_threshold: RESIDUAL_THRESHOLD,
                rank_tolerance: rep.growth_vector.rank_tol,
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(format!("report serialization: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("report parse: {e}")))
    }
}

/// Runs the curvature pipeline at the model's base point.
pub fn analyze(model: &ControlModel<f64>, covector: &[f64], opts: FitOptions) -> Result<AnalysisReport> {
    if covector.len() != model.n() {
        return Err(Error::Dimension(format!(
            "covector has {} components, model has dimension {}",
            covector.len(),
            model.n()
        )));
    }
    let lambda0 = ExtremalState::new(model.base_point().to_vec(), covector.to_vec());
    let rep = curvature_report(model, &lambda0, opts)?;
    Ok(AnalysisReport::from_curvature(model, &lambda0, &rep, &opts, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, Params};

    #[test]
    fn round_trip_is_byte_identical() {
        let m = builtin_model("heisenberg", &Params::new()).unwrap().to_f64();
        let r = analyze(&m, &[0.0, 1.0, 1.0], FitOptions::default()).unwrap();
        assert!((r.i_eigenvalues[0] - 4.0).abs() < 1e-4 && (r.i_eigenvalues[1] - 1.0).abs() < 1e-4);
        assert!((r.ric - 0.4).abs() < 1e-3);
        let s = r.to_json().unwrap();
        let back = AnalysisReport::from_json(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), s);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let mut documented: Vec<&str> = REPORT_FIELDS.iter().map(|f| f.0).collect();
        documented.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, documented);
    }
}
