//! Scripted runs of the command-line examples.

use std::path::{Path, PathBuf};
use std::process::Command;

use kulkarni::gallery::kissing_pairing;
use kulkarni::projective::{cx, Cpx, MobiusMap};
use serde_json::{json, Value};

struct Run {
    code: i32,
    stdout: String,
    json: Value,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_kulkarni")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).expect("utf-8 output");
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    Run { code: out.status.code().unwrap_or(-1), stdout, json }
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kulkarni-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn real_matrix(rows: [[f64; 3]; 3]) -> Value {
    json!({"matrix": rows.map(|r| r.map(|x| [x, 0.0]))})
}

fn cpx(v: &Value) -> Cpx {
    cx(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn gallery(dir: &Path, family: &str, extra: &[&str]) -> (String, Value) {
    let mut args = vec!["gallery", family];
    args.extend_from_slice(extra);
    let r = run(&args);
    assert_eq!(r.code, 0, "gallery {family} failed: {}", r.stdout);
    let path = write(dir, &format!("{family}.json"), &r.json);
    (path, r.json)
}

#[test]
fn classify_strong_loxodromic_has_two_domains() {
    let dir = scratch("classify-diag");
    let m = write(&dir, "m.json", &real_matrix([[0.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]));
    let r = run(&["classify", "--matrix", &m]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["class"], "DIAG_STRONG_LOXODROMIC");
    assert_eq!(r.json["maximal_domains"]["regions"].as_array().unwrap().len(), 2);
}

#[test]
fn classify_identity_has_empty_limit_set() {
    let dir = scratch("classify-id");
    let m = write(&dir, "m.json", &real_matrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]));
    let r = run(&["classify", "--matrix", &m]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["class"], "IDENTITY");
    let lambda = &r.json["limit_set"]["Lambda"];
    assert!(lambda["points"].as_array().unwrap().is_empty() && lambda["lines"].as_array().unwrap().is_empty());
    assert_eq!(lambda["whole_plane"], false);
}

#[test]
fn classify_kissing_generator_matches_predicted_eigenvalues() {
    let dir = scratch("classify-meps");
    let (path, doc) = gallery(&dir, "kissing-schottky", &["--depth", "3"]);
    let r = run(&["classify", "--matrix", &path, "--generator", "Meps"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let got: Vec<Cpx> = r.json["eigen"]["eigenvalues"].as_array().unwrap().iter().map(cpx).collect();
    let want: Vec<Cpx> = doc["diagnostics"]["eigenvalues"].as_array().unwrap().iter().map(cpx).collect();
    for w in &want {
        let d = got.iter().map(|g| (g - w).norm()).fold(f64::INFINITY, f64::min);
        assert!(d <= 1e-9, "eigenvalue {w} missing, nearest at {d}");
    }
}

#[test]
fn oracle_on_diagonal_element_passes_table_check() {
    let dir = scratch("oracle-diag");
    let m = write(&dir, "m.json", &real_matrix([[0.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]));
    let csv_path = dir.join("cloud.csv");
    let r = run(&["limit-set", "--group", &m, "--mode", "oracle", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(r.json["table_check"]["pass"], true);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("chart,re1,im1,re2,im2,word_length"));
    assert!(lines.count() >= 1000);
}

#[test]
fn oracle_on_kissing_group_reports_containment() {
    let dir = scratch("oracle-kissing");
    let (path, _) = gallery(&dir, "kissing-schottky", &["--depth", "4"]);
    let r = run(&["limit-set", "--group", &path, "--mode", "oracle", "--word-len", "5", "--n-min", "5", "--samples", "100"]);
    let c = &r.json["containment"];
    let within = c["within"].as_u64().unwrap() as f64;
    let points = c["points"].as_u64().unwrap() as f64;
    assert!(points > 1000.0);
    // words of length five are still far from the parabolic fixed points,
    // so a small fraction of the cloud lies outside the tolerance
    assert!(within / points >= 0.99, "only {within} of {points} points within tolerance");
    let contained = c["contained"].as_bool().unwrap();
    assert_eq!(r.code, if contained { 0 } else { 1 });
}

#[test]
fn empty_generator_list_is_a_usage_error() {
    let dir = scratch("empty");
    let g = write(&dir, "g.json", &json!({"generators": []}));
    let r = run(&["limit-set", "--group", &g, "--mode", "oracle"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.json["exit_code"], 2);
}

#[test]
fn table_mode_rejects_several_generators() {
    let dir = scratch("table-multi");
    let (path, _) = gallery(&dir, "gamma-a", &[]);
    let r = run(&["limit-set", "--group", &path, "--mode", "table"]);
    assert_eq!(r.code, 2);
}

#[test]
fn kissing_group_projects_to_the_three_mobius_maps() {
    let dir = scratch("project-kissing");
    let (path, _) = gallery(&dir, "kissing-schottky", &["--depth", "3"]);
    let r = run(&["project", "--group", &path, "--word-len", "4"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let i = cx(0.0, 1.0);
    let one = cx(1.0, 0.0);
    let expected = [
        ("M1", MobiusMap::from_coeffs(one + i, -i, i, one - i).unwrap()),
        ("M2", MobiusMap::from_coeffs(one - i, -i, i, one + i).unwrap()),
        ("Meps", MobiusMap::from_coeffs(i * 3.0, i * 10.0, i, i * 3.0).unwrap()),
    ];
    let gens = r.json["generators"].as_array().unwrap();
    for (name, want) in expected {
        let entry = gens.iter().find(|g| g[0] == name).expect("generator present");
        let got: MobiusMap = serde_json::from_value(entry[1].clone()).unwrap();
        assert!(got.proj_eq(&want, 1e-9), "{name}: {got:?}");
    }
    assert!(r.json["kernel"].as_array().unwrap().is_empty());
}

#[test]
fn sol_group_projects_to_real_maps() {
    let dir = scratch("project-sm");
    let (path, _) = gallery(&dir, "inoue-sm", &["--int-matrix", "0,0,1;1,0,1;0,1,0"]);
    let r = run(&["project", "--group", &path, "--word-len", "3"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    for g in r.json["generators"].as_array().unwrap() {
        let m: MobiusMap = serde_json::from_value(g[1].clone()).unwrap();
        let entries = [m.a(), m.b(), m.c(), m.d()];
        let big = entries.iter().fold(entries[0], |acc, z| if z.norm() > acc.norm() { *z } else { acc });
        let phase = big.conj() / big.norm();
        assert!(entries.iter().all(|z| (z * phase).im.abs() <= 1e-9), "{m:?}");
    }
}

#[test]
fn projection_from_a_moving_point_is_a_precondition_violation() {
    let dir = scratch("project-moving");
    let (path, _) = gallery(&dir, "gamma-a", &[]);
    let r = run(&[
        "project",
        "--group",
        &path,
        "--point",
        "[[1,0],[0,0],[0,0]]",
        "--line",
        "[[1,0],[0,0],[0,0]]",
    ]);
    assert_eq!(r.code, 3, "{}", r.stdout);
}

#[test]
fn kissing_pairing_verifies() {
    let dir = scratch("schottky-ok");
    let (path, _) = gallery(&dir, "kissing-schottky", &["--depth", "3"]);
    let r = run(&["schottky-verify", "--group", &path]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["valid"], true);
    assert_eq!(r.json["kissing"], true);
}

#[test]
fn perturbed_pairing_fails() {
    let dir = scratch("schottky-bad");
    let (path, _) = gallery(&dir, "kissing-schottky", &["--depth", "3"]);
    let pairing = write(&dir, "pairing.json", &serde_json::to_value(kissing_pairing(1.5).unwrap()).unwrap());
    let r = run(&["schottky-verify", "--group", &path, "--pairing", &pairing]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json["valid"], false);
}

#[test]
fn pairing_without_control_data_is_a_precondition_violation() {
    let dir = scratch("schottky-nocontrol");
    let (_, mut doc) = gallery(&dir, "kissing-schottky", &["--depth", "3"]);
    let group = doc["group"].as_object_mut().unwrap();
    group.remove("point");
    group.remove("line");
    let path = write(&dir, "bare.json", &doc);
    let r = run(&["schottky-verify", "--group", &path]);
    assert_eq!(r.code, 3);
}

#[test]
fn gallery_suspension_branches() {
    let finite = run(&["gallery", "suspension", "--scalars", "-1,0"]);
    assert_eq!(finite.code, 0);
    assert_eq!(finite.json["scalar_group_infinite"], false);
    assert!(finite.json["prediction"]["extra_lines"].as_array().unwrap().is_empty());
    let infinite = run(&["gallery", "suspension", "--scalars", "2,0"]);
    assert_eq!(infinite.code, 0);
    assert_eq!(infinite.json["scalar_group_infinite"], true);
    assert_eq!(infinite.json["prediction"]["extra_lines"].as_array().unwrap().len(), 1);
}

#[test]
fn gallery_gamma_a_has_two_generators() {
    let r = run(&["gallery", "gamma-a", "--a", "2,0.5"]);
    assert_eq!(r.code, 0);
    let names: Vec<&str> =
        r.json["group"]["generators"].as_array().unwrap().iter().map(|g| g["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["Ma", "B"]);
    assert_eq!(r.json["prediction"]["lines"].as_array().unwrap().len(), 3);
}

#[test]
fn gallery_kissing_diagnostics() {
    let r = run(&["gallery", "kissing-schottky", "--depth", "3"]);
    assert_eq!(r.code, 0);
    let d = &r.json["diagnostics"];
    assert!(d["char_poly_residuals"].as_array().unwrap().iter().all(|x| x.as_f64().unwrap() <= 1e-9));
    assert!(d["eigenvector_residuals"].as_array().unwrap().iter().all(|x| x.as_f64().unwrap() <= 1e-8));
    assert_eq!(d["degenerate"], false);
    let degenerate = run(&["gallery", "kissing-schottky", "--eps2", "0,0", "--eps3", "0,0", "--depth", "3"]);
    assert_eq!(degenerate.code, 0);
    assert_eq!(degenerate.json["diagnostics"]["degenerate"], true);
}

#[test]
fn gallery_inoue_sm() {
    let r = run(&["gallery", "inoue-sm", "--int-matrix", "0,0,1;1,0,1;0,1,0"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["family"], "SOL4_0");
    assert!((r.json["alpha"].as_f64().unwrap() - 1.324717957244746).abs() < 1e-12);
    let bad = run(&["gallery", "inoue-sm", "--int-matrix", "1,0,0;0,1,0;0,0,1"]);
    assert_eq!(bad.code, 3);
}

#[test]
fn gallery_inoue_sn() {
    let r = run(&["gallery", "inoue-sn", "--int-matrix", "2,1;1,1", "--r", "1", "--sign", "plus"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["family"], "SOL4_1");
    assert_eq!(r.json["integrability_unchecked"], true);
    let a: Vec<f64> = r.json["a"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let b: Vec<f64> = r.json["b"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let expected = b[0] * a[1] - b[1] * a[0];
    assert!((r.json["central_translation"].as_f64().unwrap() - expected).abs() <= 1e-10);
    let rotation = run(&["gallery", "inoue-sn", "--int-matrix", "0,-1;1,0"]);
    assert_eq!(rotation.code, 3);
}

#[test]
fn outputs_are_deterministic() {
    let dir = scratch("determinism");
    let m = write(&dir, "m.json", &real_matrix([[0.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]));
    let once = |k: usize| {
        let csv = dir.join(format!("c{k}.csv"));
        let r = run(&["--seed", "5", "limit-set", "--group", &m, "--mode", "oracle", "--word-len", "40", "--samples", "200",
            "--out", csv.to_str().unwrap()]);
        (r.stdout, std::fs::read(csv).unwrap())
    };
    assert_eq!(once(0), once(1));
    assert_eq!(run(&["gallery", "inoue-sm"]).stdout, run(&["gallery", "inoue-sm"]).stdout);
}
