use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_defect-forge"));
    c.env_remove("DEFECT_FORGE_LOG");
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn compile_into(dir: &Path, input: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["compile", "--input", input.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn compile_writes_required_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = compile_into(dir.path(), &fixture("t_gadget.qc"), &[]);
    assert!(o.status.success(), "{o:?}");
    let names: Vec<String> = files(dir.path()).into_iter().map(|(n, _)| n).collect();
    for want in ["t_gadget.icm.qc", "t_gadget.wires.json", "t_gadget.assembly.json", "t_gadget.report.json"] {
        assert!(names.iter().any(|n| n == want), "{want} missing from {names:?}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("t_gadget.report.json")).unwrap()).unwrap();
    assert_eq!(report["qubit_count"], 6);
    assert_eq!(report["cnot_count"], 6);
}

#[test]
fn compile_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = compile_into(d.path(), &fixture("mixed.qc"), &["--seed", "42", "--obj"]);
        assert!(o.status.success());
    }
    assert_eq!(files(a.path()), files(b.path()));
}

#[test]
fn resume_from_icm_matches_one_shot() {
    let (full, staged) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(compile_into(full.path(), &fixture("serial_t10.qc"), &[]).status.success());
    assert!(compile_into(staged.path(), &fixture("serial_t10.qc"), &["--stop-after", "icm"]).status.success());
    assert!(!staged.path().join("serial_t10.assembly.json").exists());
    let icm = staged.path().join("serial_t10.icm.qc");
    assert!(compile_into(staged.path(), &icm, &[]).status.success());
    assert_eq!(files(full.path()), files(staged.path()));
}

#[test]
fn distillation_flags_reach_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let o = compile_into(
        dir.path(),
        &fixture("t_gate.qc"),
        &["--distill-p-a", "0.5", "--box-dims-a", "10x4x4", "--target-reliability", "0.99", "--seed", "3"],
    );
    assert!(o.status.success(), "{o:?}");
    let plan: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("t_gate.plan.json")).unwrap()).unwrap();
    // P[Bin(n, 0.5) >= 1] >= 0.99 first holds at n = 7
    assert_eq!(plan["boxes"]["A"], 7);
    assert_eq!(plan["seed"], 3);
    assert_eq!(plan["specs"]["A"]["box_dims"], serde_json::json!([10, 4, 4]));
}

#[test]
fn stage_failure_is_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qc");
    fs::write(&bad, "input q\nrz q 1/8pi\noutput q\n").unwrap();
    let o = compile_into(dir.path(), &bad, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[icm]"));
    fs::write(&bad, "input q\nfrobnicate q\n").unwrap();
    let o = compile_into(dir.path(), &bad, &[]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[parse]"));
}

#[test]
fn bad_flags_are_usage_errors() {
    let o = run(&["compile", "--input", "x.qc", "--stop-after", "nowhere"]);
    assert_eq!(o.status.code(), Some(64));
    let o = run(&["stats", "--input", fixture("t_gate.qc").to_str().unwrap(), "--box-dims-a", "1,2"]);
    assert_eq!(o.status.code(), Some(64));
    let o = run(&["stats", "--input", fixture("t_gate.qc").to_str().unwrap(), "--target-reliability", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_s_and_t_pass() {
    let o = run(&["verify", "--input", fixture("t_gate.qc").to_str().unwrap(), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS: 128 branches over 4 inputs"));
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.qc");
    fs::write(&s, "input q\ns q\noutput q\n").unwrap();
    let o = run(&["verify", "--input", s.to_str().unwrap(), "--inputs", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS: 20 branches"));
}

#[test]
fn verify_corrupted_gadget_fails_with_branch() {
    let o = run(&[
        "verify",
        "--input",
        fixture("t_gate.qc").to_str().unwrap(),
        "--icm",
        fixture("t_gate_corrupt.icm.qc").to_str().unwrap(),
        "--corrections",
        fixture("t_gate_corrupt.corrections.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("FAIL: input 0 branch "), "{last}");
}

#[test]
fn verify_capacity_exit_code() {
    let o = run(&["verify", "--input", fixture("t_gate.qc").to_str().unwrap(), "--max-qubits", "3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn stats_examples() {
    let o = run(&["stats", "--input", fixture("t_gate.qc").to_str().unwrap(), "--json"]);
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        (s["t_count"].as_u64(), s["required"]["A"].as_u64(), s["required"]["Y"].as_u64()),
        (Some(1), Some(1), Some(1))
    );
    let o = run(&["stats", "--input", fixture("clifford.qc").to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.contains("t_count: 0") && text.contains("A required: 0"), "{text}");
}

#[test]
fn log_level_from_env() {
    let o = bin()
        .env("DEFECT_FORGE_LOG", "info")
        .args(["stats", "--input", fixture("t_gate.qc").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("DEFECT_FORGE_LOG", "debug")
        .args(["compile", "--input", fixture("t_gate.qc").to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("DEBUG"));
    let o = compile_into(dir.path(), &fixture("t_gate.qc"), &[]);
    assert!(o.stderr.is_empty());
}
