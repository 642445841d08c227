use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn srcirc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srcirc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SRCIRC_OUT_DIR")
        .output()
        .unwrap()
}

fn shipped() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const RAMAN: &str = r#"
seed = 1
[[sequence]]
name = "raman"
preset = { kind = "raman_spectroscopy", n_init = 51 }
"#;

#[test]
fn shipped_configs_validate_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let files = shipped();
    assert_eq!(files.iter().filter(|p| p.extension().is_some_and(|e| e == "toml")).count(), files.len());
    assert!(files.len() >= 8);
    for f in files {
        let o = srcirc(&["validate", f.to_str().unwrap()], tmp.path());
        assert!(o.status.success(), "{}: {}", f.display(), stderr(&o));
    }
}

#[test]
fn negative_duration_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &RAMAN.replace("n_init = 51", "n_init = 51, duration = -2.0"));
    let o = srcirc(&["validate", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert_eq!(e.lines().filter(|l| l.starts_with("sequence[")).count(), 1, "{e}");
    assert!(e.contains("steps[1]") && e.contains("duration"), "{e}");
}

#[test]
fn unknown_scan_path_lists_valid_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[[sequence]]
name = "custom"
[sequence.spec]
id = "custom"
initial = { kind = "ground_mixture", n = 51 }
readout = { kind = "channel", n = 49 }
[[sequence.spec.steps]]
pulse = { type = "microwave", transition = { n_a = 51, n_b = 49, two_photon = true }, source_freq = 52.6787735, rabi = 33.3, duration = 15.0 }
[sequence.spec.scan]
name = "f"
paths = ["steps[0].frequency"]
values = [52.6787735]
"#;
    let cfg = write(tmp.path(), "c.toml", text);
    let o = srcirc(&["validate", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("steps[0].frequency") && e.contains("steps[0].source_freq"), "{e}");
}

#[test]
fn empty_scan_fails_validation_on_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &format!("{RAMAN}scan_values = []\n"));
    let o = srcirc(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scan.values"));
    assert!(!tmp.path().join("srcirc-out").exists());
}

#[test]
fn parse_error_reports_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "seed = 1\n[model\n");
    let o = srcirc(&["validate", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "blocker", "");
    let text = format!("output_dir = \"blocker/out\"\n{RAMAN}");
    let cfg = write(tmp.path(), "c.toml", &text);
    let o = srcirc(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn run_writes_dataset_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", RAMAN);
    let o = srcirc(&["run", &cfg], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("srcirc-out");
    for f in ["raman.csv", "raman.json", "summary.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("raman.csv")).unwrap();
    assert!(csv.starts_with("delta_khz,value,error,shots"), "{csv}");
}

#[test]
fn env_var_sets_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_srcirc"))
        .args(["reproduce", "figS1", "--noiseless"])
        .current_dir(tmp.path())
        .env("SRCIRC_OUT_DIR", tmp.path().join("env-out"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("env-out/figS1/summary.csv").exists());
}

#[test]
fn reproduce_inset_reports_theta() {
    let tmp = tempfile::tempdir().unwrap();
    let o = srcirc(&["reproduce", "fig3-inset", "--noiseless", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = std::fs::read_to_string(tmp.path().join("o/fig3-inset/summary.csv")).unwrap();
    for q in ["delta_n49", "delta_n51", "delta_n53", "theta", "b"] {
        assert!(summary.lines().any(|l| l.starts_with(&format!("{q},"))), "{q}");
    }
}

#[test]
fn unknown_recipe_is_rejected_by_the_parser() {
    let tmp = tempfile::tempdir().unwrap();
    let o = srcirc(&["reproduce", "fig9"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = srcirc(&["reproduce", "fig2", "--seed", "5", "--out", out], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = tmp.path().join("a/fig2");
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 5);
    for n in names {
        let x = std::fs::read(a.join(&n)).unwrap();
        let y = std::fs::read(tmp.path().join("b/fig2").join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}
