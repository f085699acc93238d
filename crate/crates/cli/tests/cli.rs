use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use attrib_core::io::load_model;
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn attrib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attrib"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// A temp dir holding every fixture as `<name>.model`.
fn fixtures() -> (TempDir, impl Fn(&str) -> String) {
    let dir = TempDir::new().unwrap();
    let out = attrib(&["fixtures", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().to_path_buf();
    (dir, move |name: &str| root.join(format!("{name}.model")).to_str().unwrap().to_string())
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn values(doc: &Value) -> Vec<f64> {
    doc["result"]["values"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect()
}

#[test]
fn fixtures_are_written_and_load() {
    let (dir, model) = fixtures();
    for name in ["appendix_f", "appendix_g", "min2", "logistic_sym2", "one_relu", "symmetry_cex"] {
        let text = std::fs::read_to_string(model(name)).unwrap();
        load_model(&text).unwrap();
    }
    let f = load_model(&std::fs::read_to_string(model("appendix_f")).unwrap()).unwrap();
    assert_eq!(f.value(&attrib_core::Tensor64::from_f64s(&[3.0, 1.0]).unwrap()).unwrap(), 1.0);
    drop(dir);
}

#[test]
fn attribute_ig_on_appendix_f() {
    let (_dir, model) = fixtures();
    let out = attrib(&["attribute", "--model", &model("appendix_f"), "--input", "3,1", "--method", "ig", "--steps", "1000"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out.stdout);
    let v = values(&doc);
    assert!((v[0] - 1.5).abs() <= 0.01 && (v[1] + 0.5).abs() <= 0.01, "{v:?}");
    assert!(doc["result"]["completeness_gap"].as_f64().unwrap() <= 0.01);
    assert_eq!(doc["result"]["method"]["config"]["steps"], 1000);
}

#[test]
fn attribute_shapley_on_min2() {
    let (_dir, model) = fixtures();
    let out = attrib(&["attribute", "--method", "shapley", "--model", &model("min2"), "--input", "1,3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(values(&json(&out.stdout)), vec![0.5, 0.5]);
}

#[test]
fn validation_errors_exit_2() {
    let (_dir, model) = fixtures();
    let out = attrib(&["attribute", "--model", &model("min2"), "--input", "1,3,5", "--method", "ig"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("model expects 2"));

    let out = attrib(&["attribute", "--model", &model("min2"), "--input", "1,3", "--method", "deeplift"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("'min'"));

    let out = attrib(&["attribute", "--model", "/nonexistent.model", "--input", "1", "--method", "ig"]);
    assert_eq!(code(&out), 2);

    let out = attrib(&["attribute", "--model", &model("min2"), "--input", "1,3", "--method", "nope"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn overflow_exits_3() {
    let out = attrib(&["attribute", "--model", "fixture:linear(2,3;0)", "--input", "1e308,1e308", "--method", "gradients"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn outputs_are_reproducible_and_recorded() {
    let (dir, model) = fixtures();
    let path = |name: &str| dir.path().join(name);
    let run = |out: &Path, format: &str| {
        let o = attrib(&[
            "attribute", "--model", &model("appendix_f"), "--input", "3,1", "--method", "ig",
            "--out", out.to_str().unwrap(), "--format", format,
        ]);
        assert_eq!(code(&o), 0);
    };
    run(&path("a.json"), "json");
    run(&path("b.json"), "json");
    let a = std::fs::read(path("a.json")).unwrap();
    assert_eq!(a, std::fs::read(path("b.json")).unwrap());

    let record = json(&std::fs::read(path("a.json.run.json")).unwrap());
    assert_eq!(record["result_sha256"], hex::encode(Sha256::digest(&a)));
    let model_bytes = std::fs::read(model("appendix_f")).unwrap();
    assert_eq!(record["model_sha256"], hex::encode(Sha256::digest(&model_bytes)));
    assert!(record.get("timing_ms").is_none());

    // CSV carries the same values to 12 significant digits
    run(&path("a.csv"), "csv");
    let csv = std::fs::read_to_string(path("a.csv")).unwrap();
    let from_csv: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    for (c, j) in from_csv.iter().zip(values(&json(&a))) {
        assert!((c - j).abs() <= 1e-11 * j.abs().max(1e-300), "{c} vs {j}");
    }
}

#[test]
fn steps_command() {
    let (_dir, model) = fixtures();
    let out = attrib(&["steps", "--model", &model("appendix_f"), "--input", "3,1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("chosen m=20"), "{text}");

    let out = attrib(&["steps", "--model", &model("linear"), "--input", "1,1"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("m=20     gap=0"));

    let out = attrib(&["steps", "--model", &model("appendix_f"), "--input", "3.3,1", "--tol", "1e-9", "--max", "40"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("budget exhausted"));
}

#[test]
fn audit_examples() {
    let (dir, model) = fixtures();
    let report = dir.path().join("audit.json");
    let pair = format!("{},{}", model("appendix_f"), model("appendix_g"));
    let out = attrib(&[
        "audit", "--pair", &pair, "--method", "deeplift", "--input", "3,1",
        "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let batch = json(&std::fs::read(&report).unwrap());
    let inv = batch["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["axiom"] == "implementation_invariance")
        .unwrap();
    assert_eq!(inv["verdict"], "fail");
    assert_eq!(inv["witness"]["input"], serde_json::json!([3.0, 1.0]));

    let out = attrib(&["audit", "--model", &model("one_relu"), "--method", "gradients", "--axioms", "sensitivity_a"]);
    assert_eq!(code(&out), 1);

    let out = attrib(&["audit", "--model", &model("logistic_sym2"), "--method", "ig", "--axioms", "symmetry"]);
    assert_eq!(code(&out), 0);

    let out = attrib(&["audit", "--model", &model("one_relu"), "--method", "ig", "--axioms", "beauty"]);
    assert_eq!(code(&out), 2);

    // same seed, same report
    let args = ["audit", "--model", &model("appendix_f"), "--method", "guided", "--seed", "9"];
    let (a, b) = (attrib(&args), attrib(&args));
    assert_eq!(code(&a), 1);
    assert_eq!(a.stdout, b.stdout);
}

fn write_result(dir: &Path, name: &str, vals: &[f64]) -> PathBuf {
    let mut csv = String::from("feature,input,baseline,attribution\n");
    for (i, v) in vals.iter().enumerate() {
        csv.push_str(&format!("{i},0,0,{v}\n"));
    }
    let p = dir.join(name);
    std::fs::write(&p, csv).unwrap();
    p
}

fn render(attrib_file: &Path, shape: &str, base: Option<&Path>, out: &Path) -> Output {
    let mut args = vec!["render", "--attrib", attrib_file.to_str().unwrap(), "--shape", shape, "--out", out.to_str().unwrap()];
    if let Some(b) = base {
        args.extend(["--base", b.to_str().unwrap()]);
    }
    attrib(&args)
}

fn raster(ppm: &[u8]) -> &[u8] {
    // header is three newline-terminated lines
    let mut newlines = 0;
    let start = ppm
        .iter()
        .position(|&b| {
            newlines += usize::from(b == b'\n');
            newlines == 3
        })
        .unwrap();
    &ppm[start + 1..]
}

#[test]
fn render_examples() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.ppm");

    let zeros = write_result(dir.path(), "zeros.csv", &[0.0; 4]);
    assert_eq!(code(&render(&zeros, "2x2", None, &out)), 0);
    assert!(raster(&std::fs::read(&out).unwrap()).iter().all(|&p| p == 128));

    let single = write_result(dir.path(), "single.csv", &[0.0, 0.0, 5.0, 0.0]);
    assert_eq!(code(&render(&single, "2x2", None, &out)), 0);
    let px = raster(&std::fs::read(&out).unwrap()).to_vec();
    assert_eq!(&px[6..9], &[0, 255, 0]);
    assert_eq!(&px[0..3], &[128, 128, 128]);

    let base = dir.path().join("base.pgm");
    std::fs::write(&base, b"P5\n2 2\n255\n\x00\x64\xc8\xff").unwrap();
    let mixed = write_result(dir.path(), "mixed.csv", &[1.0, -4.0, 2.0, -1.0]);
    assert_eq!(code(&render(&mixed, "2x2", Some(&base), &out)), 0);
    let bytes = std::fs::read(&out).unwrap();
    assert!(bytes.starts_with(b"P6\n2 2\n255\n"));
    assert_eq!(raster(&bytes), &[0, 64, 0, 255, 0, 0, 100, 228, 100, 255, 191, 191]);
    let meta = json(&std::fs::read(dir.path().join("out.ppm.run.json")).unwrap());
    assert_eq!(meta["config"]["render"]["normalization"], "max_abs");
    assert_eq!(meta["config"]["render"]["divisor"], 4.0);

    assert_eq!(code(&render(&mixed, "3x2", None, &out)), 2);
}

#[test]
fn pgm_inputs_are_scaled() {
    let dir = TempDir::new().unwrap();
    let img = dir.path().join("x.pgm");
    std::fs::write(&img, b"P5\n2 1\n255\n\xff\x00").unwrap();
    let out = attrib(&["attribute", "--model", "fixture:linear(2,3;0)", "--input", img.to_str().unwrap(), "--method", "grad-times-input"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(values(&json(&out.stdout)), vec![2.0, 0.0]);
}
