//! End-to-end runs of the `srcurv` binary.

use std::process::{Command, Output};

fn srcurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srcurv")).args(args).output().unwrap()
}

fn report(args: &[&str]) -> serde_json::Value {
    let out = srcurv(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
    serde_json::from_slice(&out.stdout).unwrap()
}

fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn analyze_heisenberg() {
    let r = report(&["analyze", "--model", "heisenberg", "--covector", "0,1,1"]);
    let eig = floats(&r["i_eigenvalues"]);
    assert!((eig[0] - 4.0).abs() < 1e-6 && (eig[1] - 1.0).abs() < 1e-6);
    assert!((r["ric"].as_f64().unwrap() - 0.4).abs() < 1e-6);
    assert_eq!(r["geodesic_dimension"], 5);
    assert_eq!(r["reliable"], true);
}

#[test]
fn analyze_euclidean_and_lq() {
    let r = report(&["analyze", "--model", "euclidean", "--covector", "1,0"]);
    let i = &r["i_matrix"];
    for (a, row) in i.as_array().unwrap().iter().enumerate() {
        for (b, v) in floats(row).into_iter().enumerate() {
            assert!((v - (a == b) as u8 as f64).abs() < 1e-6);
        }
    }
    for row in r["r_matrix"].as_array().unwrap() {
        assert!(floats(row).iter().all(|v| v.abs() < 1e-6));
    }
    let r = report(&["analyze", "--model", "lq:double_integrator", "--covector", "1,0"]);
    assert_eq!(r["growth_vector"], serde_json::json!([1, 2]));
    assert!((floats(&r["i_eigenvalues"])[0] - 4.0).abs() < 1e-6);
}

#[test]
fn analyze_model_file_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("heis.toml");
    std::fs::write(
        &model,
        "name = \"file-heisenberg\"\nn = 3\nk = 2\nfield_1 = [\"1\", \"0\", \"-1/2*x2\"]\nfield_2 = [\"0\", \"1\", \"1/2*x1\"]\n",
    )
    .unwrap();
    let out_path = dir.path().join("r.json");
    let out = srcurv(&[
        "analyze",
        "--model",
        model.to_str().unwrap(),
        "--covector",
        "0,1,1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty() && out.stderr.is_empty());
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(r["model"], "file-heisenberg");
    assert!((r["ric"].as_f64().unwrap() - 0.4).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(srcurv(&["analyze", "--model", "heisenberg"]).status.code(), Some(64));
    assert_eq!(srcurv(&["analyze", "--model", "heisenberg", "--covector", "x"]).status.code(), Some(64));
    assert_eq!(srcurv(&["analyze", "--model", "heisenberg", "--covector", "1,0"]).status.code(), Some(64));
    assert_eq!(srcurv(&["check", "--suite", "nope"]).status.code(), Some(64));
    assert_eq!(srcurv(&["analyze", "--model", "nope", "--covector", "1"]).status.code(), Some(65));
    assert_eq!(srcurv(&["analyze", "--model", "lq:bogus", "--covector", "1,0"]).status.code(), Some(65));
    // Two parallel fields do not generate the tangent space.
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.toml");
    std::fs::write(&model, "name = \"bad\"\nn = 2\nk = 2\nfield_1 = [\"1\", \"0\"]\nfield_2 = [\"2\", \"0\"]\n")
        .unwrap();
    let out = srcurv(&["analyze", "--model", model.to_str().unwrap(), "--covector", "1,0"]);
    assert_eq!(out.status.code(), Some(65));
    assert!(!out.stderr.is_empty());
}

#[test]
fn check_tables() {
    let out = srcurv(&["check", "--suite", "tables"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() > 1);
    assert!(lines[..lines.len() - 1].iter().all(|l| l.starts_with("PASS tables/")), "{text}");
    let (a, b) = lines.last().unwrap().split_once(" checks").unwrap().0.split_once('/').unwrap();
    assert_eq!(a, b);
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn sweep_heisenberg_hz_grid() {
    let out = srcurv(&["sweep", "--model", "heisenberg", "--covector-grid", "0;1;0.5:2:4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("p1,p2,p3,growth_vector,geodesic_dimension,i_eigenvalues,ric,residual\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    for row in rows {
        let hz: f64 = row[2].parse().unwrap();
        let ric: f64 = row[6].parse().unwrap();
        assert!((ric - 0.4 * hz * hz).abs() < 1e-6 * hz * hz, "{row:?}");
        let eig: Vec<f64> = row[5].split(' ').map(|s| s.parse().unwrap()).collect();
        assert!((eig[0] - 4.0).abs() < 1e-6 && (eig[1] - 1.0).abs() < 1e-6);
        assert_eq!(row[3], "2 3");
        assert_eq!(row[4], "5");
    }
}

#[test]
fn sweep_direction_grid_is_constant() {
    // Unit horizontal directions at h_z = 1, listed explicitly.
    let (c, s) = (0.6f64, 0.8f64);
    let spec = format!("{},{};{},{};1", -s, c, c, s);
    let out = srcurv(&["sweep", "--model", "heisenberg", "--covector-grid", &spec]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][..3], ["-0.8", "0.6", "1"]);
    assert_eq!(rows[1][..3], ["-0.8", "0.8", "1"]);
    for row in &rows {
        let eig: Vec<f64> = row[5].split(' ').map(|s| s.parse().unwrap()).collect();
        assert!((eig[0] - 4.0).abs() < 1e-6 && (eig[1] - 1.0).abs() < 1e-6, "{row:?}");
    }
}

#[test]
fn sweep_empty_grid_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = srcurv(&["sweep", "--model", "heisenberg", "--covector-grid", "", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty() && out.stderr.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text, "p1,p2,p3,growth_vector,geodesic_dimension,i_eigenvalues,ric,residual\n");
}
