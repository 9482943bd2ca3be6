use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bondmix(sub: &str, config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_bondmix"))
        .args([sub, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    serde_json::from_str(stderr.trim()).unwrap()
}

#[test]
fn bundled_verify_suite_passes_and_manifest_hashes_match() {
    let dir = tempfile::tempdir().unwrap();
    let out = bondmix("verify", "[verify]\nsuite = \"bundled\"\n", dir.path());
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(dir.path());
    assert_eq!(m["command"], "verify");
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        let bytes = std::fs::read(dir.path().join("out").join(o["path"].as_str().unwrap())).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(o["sha256"], hex);
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/verify.json")).unwrap()).unwrap();
    assert_eq!(report["failures"], 0);
}

#[test]
fn reruns_are_bit_identical() {
    let config = "seed = 5\n[interactions]\npreset = \"nn\"\n[verify]\nsuite = \"random\"\nfields = 6\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(bondmix("verify", config, a.path()).status.code(), Some(0));
    assert_eq!(bondmix("verify", config, b.path()).status.code(), Some(0));
    for name in ["verify.csv", "verify.json", "manifest.json"] {
        let x = std::fs::read(a.path().join("out").join(name)).unwrap();
        let y = std::fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn all_alpha_polygon_is_the_rotated_square() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[field]\nfile = \"bundled:all_alpha_nn\"\n[schedule]\ndirections = 64\n";
    let out = bondmix("tension", config, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("out/polygon.txt")).unwrap();
    let mut n = 0;
    for line in text.lines() {
        let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        let r = v[0].hypot(v[1]);
        // On the ray through (cos a, sin a) the square |x| + |y| = 1 has radius 1 / (|cos a| + |sin a|).
        let exact = r / (v[0].abs() + v[1].abs());
        assert!((r - exact).abs() <= 0.05 * exact, "{line}");
        n += 1;
    }
    assert_eq!(n, 64);
}

#[test]
fn octagon_design_emits_field_audit_and_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[interactions]\npreset = \"nn_diag\"\nalpha = [\"1\"]\nbeta = [\"2\"]\n[design]\nuniform = \"1/2\"\npolygon_directions = 16\n";
    let out = bondmix("design", config, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    let names: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    for f in ["audit.json", "field.txt", "polygon.txt", "verify.json"] {
        assert!(names.contains(&f), "{names:?}");
    }
    let field = std::fs::read_to_string(dir.path().join("out/field.txt")).unwrap();
    let parsed = bondmix::io::read_field(&field).unwrap();
    let theta = bondmix::lattice::volume_fractions(&parsed).unwrap();
    assert!(theta.per_direction.iter().all(|t| *t == num_rational::Ratio::new(1, 2)));
}

#[test]
fn malformed_config_is_a_single_line_error_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bondmix("tension", "[field\n", dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "config");
}

#[test]
fn random_generator_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[interactions]\npreset = \"nn\"\n[field]\ngenerator = \"random\"\nperiod = 2\nfractions = [0.5, 0.5]\n";
    let out = bondmix("tension", config, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn failed_check_exits_3_and_still_writes_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[field]\nfile = \"bundled:all_alpha_nn\"\n[schedule]\ndirections = 8\nradii = [16.0]\norder = 0\n[check]\nreference = \"beta\"\n";
    let out = bondmix("tension", config, dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "verification");
    assert_eq!(manifest(dir.path())["passed"], false);
}
