use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strain-tomo"))
        .args(args)
        .env_remove("LRT_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Mesh, noisy sinogram and truth for a small beam, in `dir`.
fn beam_inputs(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let (mesh, sino, truth) = (p(dir, "mesh.json"), p(dir, "sino.csv"), p(dir, "truth.csv"));
    ok(&["meshgen", "--shape", "rect", "--nx", "10", "--ny", "5", "--out", s(&mesh)]);
    ok(&[
        "simulate", "--mesh", s(&mesh), "--field", "beam", "--mode", "exact", "--angles", "19", "--offsets", "24",
        "--noise-sigma", "1e-5", "--seed", "4", "--out", s(&sino), "--truth-out", s(&truth),
    ]);
    (mesh, sino, truth)
}

#[test]
fn meshgen_rect_element_count() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = p(dir.path(), "m.json");
    ok(&["meshgen", "--shape", "rect", "--nx", "20", "--ny", "10", "--out", s(&mesh)]);
    let v = json(&mesh);
    assert_eq!(v["elements"].as_array().unwrap().len(), 200);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 21 * 11);
}

#[test]
fn meshgen_ring_plug_in_millimetres() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (p(dir.path(), "a.json"), p(dir.path(), "b.json"));
    ok(&["meshgen", "--shape", "ring-plug", "--element-size", "0.002", "--out", s(&a)]);
    ok(&[
        "meshgen", "--shape", "ring-plug", "--mm", "--element-size", "2", "--outer-radius", "25", "--bore-radius", "10.5",
        "--out", s(&b),
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = p(dir.path(), "m.json");
    assert_eq!(run(&["meshgen", "--nx", "2", "--ny", "2", "--out", s(&mesh)]).status.code(), Some(2));

    ok(&["meshgen", "--shape", "rect", "--nx", "4", "--ny", "2", "--out", s(&mesh)]);
    let sino = p(dir.path(), "s.csv");
    let noisy_without_seed =
        run(&["simulate", "--mesh", s(&mesh), "--field", "beam", "--angles", "4", "--offsets", "4", "--noise-sigma", "1e-4", "--out", s(&sino)]);
    assert_eq!(noisy_without_seed.status.code(), Some(2));
    assert!(!sino.exists());
}

#[test]
fn runtime_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reconstruct", "--mesh", s(&p(dir.path(), "missing.json")), "--sinogram", "x.csv", "--out", "y.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<Vec<u8>>> = ["a", "b"]
        .iter()
        .map(|tag| {
            let sub = dir.path().join(tag);
            std::fs::create_dir(&sub).unwrap();
            let (mesh, sino, truth) = beam_inputs(&sub);
            let (field, vtk, report) = (p(&sub, "f.csv"), p(&sub, "f.vtk"), p(&sub, "r.json"));
            ok(&[
                "reconstruct", "--mesh", s(&mesh), "--sinogram", s(&sino), "--alpha", "0.01", "--reg", "stiffness",
                "--out", s(&field), "--vtk", s(&vtk), "--report", s(&report),
            ]);
            [mesh, sino, truth, field, vtk]
                .iter()
                .map(|f| std::fs::read(f).unwrap())
                .collect()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn reconstruct_report_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, sino, truth) = beam_inputs(dir.path());
    let (field, report) = (p(dir.path(), "f.csv"), p(dir.path(), "r.json"));
    ok(&["reconstruct", "--mesh", s(&mesh), "--sinogram", s(&sino), "--out", s(&field), "--report", s(&report)]);
    let r = json(&report);
    for key in ["run_config", "data_residual", "constraint_residual", "reg_norm", "stats"] {
        assert!(r.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(r["run_config"]["constraint_mode"], "kkt");
    assert!(r["constraint_residual"].as_f64().unwrap() <= 1e-8);

    let cmp = p(dir.path(), "c.json");
    ok(&["compare", "--mesh", s(&mesh), "--a", s(&field), "--b", s(&truth), "--report", s(&cmp)]);
    let c = json(&cmp);
    for comp in ["exx", "exy", "eyy"] {
        let rel = c[comp]["relative_rmse"].as_f64().unwrap();
        assert!(rel.is_finite() && rel < 0.5, "{comp}: {rel}");
    }

    ok(&["compare", "--mesh", s(&mesh), "--a", s(&truth), "--b", s(&truth), "--report", s(&cmp)]);
    let c = json(&cmp);
    for comp in ["exx", "exy", "eyy"] {
        assert_eq!(c[comp]["rmse"].as_f64(), Some(0.0));
        assert_eq!(c[comp]["max_abs_error"].as_f64(), Some(0.0));
    }
}

#[test]
fn compare_rejects_fields_from_another_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, _, truth) = beam_inputs(dir.path());
    let other = p(dir.path(), "other.json");
    let other_truth = p(dir.path(), "other_truth.csv");
    ok(&["meshgen", "--shape", "rect", "--nx", "6", "--ny", "3", "--out", s(&other)]);
    ok(&[
        "simulate", "--mesh", s(&other), "--field", "beam", "--angles", "4", "--offsets", "4", "--out",
        s(&p(dir.path(), "o.csv")), "--truth-out", s(&other_truth),
    ]);
    let out = run(&["compare", "--mesh", s(&mesh), "--a", s(&truth), "--b", s(&other_truth)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn penalty_mode_echoes_its_weight() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, sino, _) = beam_inputs(dir.path());
    let report = p(dir.path(), "r.json");
    ok(&[
        "reconstruct", "--mesh", s(&mesh), "--sinogram", s(&sino), "--constraint", "penalty", "--penalty-weight", "1e3",
        "--out", s(&p(dir.path(), "f.csv")), "--report", s(&report),
    ]);
    let r = json(&report);
    assert_eq!(r["run_config"]["constraint_mode"], "penalty");
    assert_eq!(r["run_config"]["penalty_weight"].as_f64(), Some(1e3));
}
