use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oblique-dg"))
}

#[test]
fn mesh_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("disk.mesh");
    let gen = bin()
        .args(["mesh", "gen", "--level", "1", "--grade", "0.5", "--out"])
        .arg(&file)
        .output()
        .unwrap();
    assert!(gen.status.success());
    let check = bin().args(["mesh", "check"]).arg(&file).output().unwrap();
    assert!(check.status.success());
    let out = String::from_utf8(check.stdout).unwrap();
    assert!(out.contains("0 violations"), "{out}");

    std::fs::write(&file, "not a mesh").unwrap();
    let bad = bin().args(["mesh", "check"]).arg(&file).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn run_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["run", "--experiment", "1", "--degree", "2", "--levels", "2", "--sigma-rule", "theorem", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let csv = std::fs::read_to_string(dir.path().join("exp1_p2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let json = std::fs::read_to_string(dir.path().join("exp1_p2.json")).unwrap();
    assert!(json.contains("\"theorem\""));
}

#[test]
fn invalid_arguments_are_rejected() {
    assert!(!bin().args(["run", "--experiment", "4"]).output().unwrap().status.success());
    let st = bin().args(["run", "--levels", "1"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin().args(["run", "--levels", "2"]).env("OBLIQUE_DG_THREADS", "zero").output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let ok = bin().args(["verify", "--json"]).arg(&json).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(std::fs::read_to_string(&json).unwrap().contains("\"passed\": true"));
    let weak = bin().args(["verify", "--mu-scale", "1e-3"]).output().unwrap();
    assert_eq!(weak.status.code(), Some(1));
    let out = String::from_utf8(weak.stdout).unwrap();
    assert!(out.contains("FAIL coercivity.exp1"), "{out}");
}
