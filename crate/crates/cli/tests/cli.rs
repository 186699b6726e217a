use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("STEKLOV_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = lab(out, args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn ball_spectrum_has_one_row_per_degree() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("s");
    ok(&d, &["spectrum", "--set", "model.n=3", "--set", "model.kmax=50"]);
    let csv = read(&d, "spectrum.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 51);
    assert_eq!(rows[50], "50,101");
}

#[test]
fn kmax_zero_is_a_single_zero_row() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["spectrum", "--set", "model.kmax=0"]);
    assert_eq!(read(tmp.path(), "spectrum.csv"), "sigma,multiplicity\n0,1\n");
}

#[test]
fn cylinder_rows_come_in_tanh_coth_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        tmp.path(),
        &["spectrum", "--set", "model.kind=cylinder", "--set", "model.length=2", "--set", "model.lambdas=[1,4]"],
    );
    let sig: Vec<f64> = read(tmp.path(), "spectrum.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    let mut expect: Vec<f64> = [1.0f64, 2.0]
        .iter()
        .flat_map(|&m: &f64| [m * m.tanh(), m / m.tanh()])
        .collect();
    expect.sort_by(f64::total_cmp);
    assert_eq!(sig.len(), 4);
    for (a, b) in sig.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn geodesics_at_word_length_one() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["geodesics", "--set", "surface.max_word_length=1"]);
    let doc = json(tmp.path(), "classes.json");
    let classes = doc["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 4);
    let expect = 2.0 * (1.0 + 2f64.sqrt()).acosh();
    for c in classes {
        assert!((c["length"].as_f64().unwrap() - expect).abs() < 1e-9);
    }
    assert!((expect - 3.05714).abs() < 1e-5);
}

#[test]
fn empty_spectrum_file_gives_zero_signal() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("empty.csv");
    fs::write(&spec, "sigma,multiplicity\n").unwrap();
    let d = tmp.path().join("t");
    let set = format!("trace.spectrum_file={}", spec.display());
    ok(&d, &["trace", "--set", &set, "--set", "trace.t_max=2"]);
    let csv = read(&d, "trace.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",0,0,0")));
}

#[test]
fn recover_finds_planted_order_three() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        tmp.path(),
        &[
            "recover",
            "--seed",
            "5",
            "--set",
            "surface.max_word_length=3",
            "--set",
            "surface.basis_size=10",
            "--set",
            "recover.planted_order=3",
        ],
    );
    let v = json(tmp.path(), "verdict.json");
    assert_eq!(v["first_nonzero"], 3);
    assert_eq!(v["verdict"], "jets-differ");
    assert!(v["relative_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "xray",
        "--seed",
        "11",
        "--set",
        "surface.max_word_length=3",
        "--set",
        "surface.basis_size=8",
    ];
    let snapshot = |dir: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let d = tmp.path().join("run");
    ok(&d, &args);
    let first = snapshot(&d);
    ok(&d, &args);
    assert_eq!(first, snapshot(&d));
    assert_eq!(json(&d, "manifest.json")["seed"], 11);
}

#[test]
fn manifest_checksums_match_files() {
    use sha2::{Digest, Sha256};
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["oplab", "--format", "csv", "--format", "svg", "--set", "oplab.n=64"]);
    let manifest = json(tmp.path(), "manifest.json");
    let artifacts = manifest["artifacts"].as_array().unwrap();
    let names: Vec<&str> = artifacts.iter().map(|a| a["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["config.json", "oplab.csv", "oplab.svg"]);
    for a in artifacts {
        let bytes = fs::read(tmp.path().join(a["path"].as_str().unwrap())).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(a["sha256"], hex.as_str());
    }
    let cfg = json(tmp.path(), "config.json");
    assert_eq!(cfg["oplab"]["n"], 64);
    assert_eq!(cfg["command"], "oplab");
}

#[test]
fn exit_codes_separate_input_and_numerical_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(tmp.path(), &["spectrum", "--set", "model.bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lab(tmp.path(), &["spectrum", "--set", "model.n=5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lab(
        tmp.path(),
        &[
            "xray",
            "--set",
            "surface.max_word_length=3",
            "--set",
            "surface.basis_size=10",
            "--set",
            "surface.bump_width=0.01",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_and_command_must_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"command": "weyl", "model": {"n": 2, "kmax": 300}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let d = tmp.path().join("w");
    ok(&d, &["weyl", "--config", c]);
    let v = json(&d, "weyl.json")["volume"].as_f64().unwrap();
    assert!((v / (2.0 * std::f64::consts::PI) - 1.0).abs() < 0.01);
    let o = lab(&d, &["spectrum", "--config", c]);
    assert_eq!(o.status.code(), Some(2));
}
