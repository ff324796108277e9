use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_renormlab"))
}

#[test]
fn invalid_config_exits_with_two_and_lists_every_issue() {
    let dir = std::env::temp_dir().join(format!("renormlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, r#"{"experiment":"nope","grid":{"dim":3,"N":7},"time":{"T":0.1,"dt":0.03}}"#).unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["unknown experiment", "grid.dim", "grid.N", "time"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
}

#[test]
fn run_then_inspect_flow_output() {
    let dir = std::env::temp_dir().join(format!("renormlab-cli-run-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("flow.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"flow_conservation","grid":{"dim":2,"N":16},"time":{"T":0.05,"dt":0.01},
            "scalars":{"mc_members":2},"output_dir":"out"}"#,
    )
    .unwrap();
    let out = bin().env("RENORMLAB_THREADS", "2").arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("out/flow_conservation.csv")).unwrap();
    assert!(csv.starts_with("# renormlab v1\nmember,step,time,mass,lp_ratio\n"));
    assert_eq!(csv.lines().count(), 2 + 2 * 6);
    let out = bin().arg("inspect").arg(dir.join("out/flow.flo")).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"seeds\""));
}
