use std::path::Path;
use std::process::Command;

fn dacond(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dacond"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_args(out: &Path) -> Vec<String> {
    [
        "--n", "40", "--p", "20", "--lb-grid", "0.1,0.5", "--lr-grid", "0.2:0.6:0.2",
        "--operator", "H2", "--operator", "H4", "--seed", "11", "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out.display().to_string()])
    .collect()
}

fn run_in(dir: &Path, cmd: &str) -> std::process::Output {
    let mut args = vec![cmd.to_string()];
    args.extend(small_args(dir));
    let refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    dacond(&refs)
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("sweep-cond", "sweep_cond.csv"),
        ("sweep-bounds", "sweep_bounds.csv"),
        ("sweep-cg", "sweep_cg.csv"),
        ("spectrum", "spectrum.json"),
    ] {
        for d in [&a, &b] {
            let out = run_in(d.path(), cmd);
            assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between runs");
    }
}

#[test]
fn rows_carry_the_header_hash() {
    let d = tempfile::tempdir().unwrap();
    assert!(run_in(d.path(), "sweep-cond").status.success());
    let text = std::fs::read_to_string(d.path().join("sweep_cond.csv")).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value =
        serde_json::from_str(lines.next().unwrap().trim_start_matches("# ")).unwrap();
    let hash = header["config_hash"].as_str().unwrap();
    assert_eq!(header["seed"], 11);
    let body: Vec<&str> = lines.skip(1).collect();
    assert_eq!(body.len(), 2 * 2 * 3);
    assert!(body.iter().all(|l| l.ends_with(hash)));
    assert!(body[0].starts_with("H2,0.1,0.2,40,20,"));
}

#[test]
fn config_file_overrides_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 5, "operators": ["H1"], "lr_grid": [0.3]}"#).unwrap();
    let mut args = vec!["sweep-cond".to_string()];
    args.extend(small_args(d.path()));
    args.extend(["--config".to_string(), cfg.display().to_string()]);
    let refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let out = dacond(&refs);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(d.path().join("sweep_cond.csv")).unwrap();
    let body: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(body.len(), 2);
    assert!(body.iter().all(|l| l.starts_with("H1,")));
    assert!(text.lines().next().unwrap().contains("\"seed\":5"));
}

#[test]
fn table1_defaults_to_the_five_lengthscales() {
    let d = tempfile::tempdir().unwrap();
    let out = dacond(&["table1", "--out", d.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(d.path().join("table1.csv")).unwrap();
    let body: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(body.len(), 10);
    assert!(body[1].starts_with("R,100,0.33,"));
    assert!(body[9].starts_with("B,200,1.0,"));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let out_dir = d.path().to_str().unwrap();
    // a numerically singular R makes one cell fail; the sweep still completes
    let out = dacond(&[
        "sweep-cond", "--n", "400", "--p", "200", "--operator", "H2", "--lb-grid", "0.5",
        "--lr-grid", "0.5,1e6", "--out", out_dir,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = std::fs::read_to_string(d.path().join("sweep_cond.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains(",error,"));

    let bad = dacond(&["sweep-cond", "--n", "10", "--p", "7", "--out", out_dir]);
    assert_eq!(bad.status.code(), Some(2));
    let bad_cell = dacond(&["spectrum", "--cell", "H7:0.1:0.1", "--out", out_dir]);
    assert_eq!(bad_cell.status.code(), Some(2));
}

#[test]
fn cg_traces_sidecar() {
    let d = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep-cg".to_string(), "--traces".to_string()];
    args.extend(small_args(d.path()));
    let refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    assert!(dacond(&refs).status.success());
    let traces = std::fs::read_to_string(d.path().join("cg_traces.jsonl")).unwrap();
    assert_eq!(traces.lines().count(), 12);
    let first: serde_json::Value = serde_json::from_str(traces.lines().next().unwrap()).unwrap();
    assert!(first["relative_residual_trace"].as_array().unwrap().len() > 1);
}
