use std::process::Command;

fn memcomm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memcomm"))
}

#[test]
fn demo480_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = memcomm().args(["demo480", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(report, String::from_utf8(out.stdout).unwrap());
    assert!(report.contains("\"bits_wrong\": 0"));
    for f in ["constellation_rx.csv", "constellation_tx.csv", "tx_conductance.csv", "rx_conductance.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 7\ntrials = 3\nmedium = \"optical\"\n").unwrap();
    let out = memcomm()
        .args(["constellation", "--trials", "2", "--snr-db", "-1.5", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"seed\": 7"));
    assert!(text.contains("\"trials\": 2"));
    assert!(text.contains("\"medium\": \"optical\""));
    assert!(text.contains("\"snr_db\": -1.5"));
}

#[test]
fn energy_prints_figures() {
    let out = memcomm().arg("energy").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"efficiency_tops_per_watt\": 222.2"));
}

#[test]
fn invalid_input_fails_with_diagnostic() {
    let out = memcomm().args(["demo480", "--programming-error", "1.5"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("programming error"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "no_such_field = 1\n").unwrap();
    let out = memcomm().args(["mimo224", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));

    let out = memcomm().args(["demo480", "--medium", "sonar"]).output().unwrap();
    assert!(!out.status.success());
}
