//! Shared plumbing for the `srcurv` binary: model loading, covector grids
//! and the sweep table.

use std::path::Path;

use rayon::prelude::*;
use srcurv::jacobi::FitOptions;
use srcurv::model::{builtin_model, model_from_config, parse_builtin_spec};
use srcurv::report::{analyze, AnalysisReport};
use srcurv::{ControlModel, Error};

/// Loads a model from a configuration file when `spec` names an existing
/// path, otherwise from a built-in `name[:params]`.
pub fn load_model(spec: &str) -> Result<ControlModel<f64>, Error> {
    let path = Path::new(spec);
    let exact = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{spec}: {e}")))?;
        model_from_config(&text)?
    } else {
        let (name, params) = parse_builtin_spec(spec)?;
        builtin_model(&name, &params)?
    };
    Ok(exact.to_f64())
}

/// Parses a comma-separated list of reals.
pub fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

/// One axis of a covector grid: `start:stop:count` (inclusive, evenly
/// spaced) or a comma list.
pub fn parse_axis(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("range `{s}` must be start:stop:count"));
        };
        let a: f64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
        let b: f64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
        let c: usize = c.trim().parse().map_err(|e| format!("`{c}`: {e}"))?;
        Ok(match c {
            0 => vec![],
            1 => vec![a],
            _ => (0..c).map(|i| a + (b - a) * i as f64 / (c - 1) as f64).collect(),
        })
    } else {
        parse_reals(s)
    }
}

/// Cartesian product of `;`-separated axes, last axis fastest. An empty
/// spec or any empty axis gives no covectors.
pub fn parse_grid(spec: &str) -> Result<Vec<Vec<f64>>, String> {
    if spec.trim().is_empty() {
        return Ok(vec![]);
    }
    let axes = spec.split(';').map(parse_axis).collect::<Result<Vec<_>, _>>()?;
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        out = out
            .iter()
            .flat_map(|head| {
                axis.iter().map(move |v| {
                    let mut row = head.clone();
                    row.push(*v);
                    row
                })
            })
            .collect();
    }
    Ok(out)
}

/// Analyzes every covector in parallel; results keep the input order.
pub fn sweep(model: &ControlModel<f64>, grid: &[Vec<f64>], opts: FitOptions) -> Vec<Result<AnalysisReport, Error>> {
    grid.par_iter().map(|p| analyze(model, p, opts)).collect()
}

fn join(xs: impl IntoIterator<Item = String>) -> String {
    xs.into_iter().collect::<Vec<_>>().join(" ")
}

/// Writes the sweep table. Multi-valued columns are space-separated.
pub fn write_csv<W: std::io::Write>(out: W, n: usize, reports: &[AnalysisReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
    header.extend(["growth_vector", "geodesic_dimension", "i_eigenvalues", "ric", "residual"].map(String::from));
    w.write_record(&header)?;
    for r in reports {
        let mut row: Vec<String> = r.covector.iter().map(f64::to_string).collect();
        row.push(join(r.growth_vector.iter().map(usize::to_string)));
        row.push(r.geodesic_dimension.to_string());
        row.push(join(r.i_eigenvalues.iter().map(f64::to_string)));
        row.push(r.ric.to_string());
        row.push(format!("{:e}", r.residual));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
