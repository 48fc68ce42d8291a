use std::process::Command;

fn rsiot(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rsiot")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn list_scenarios_names_every_builtin() {
    let (code, out) = rsiot(&["list-scenarios"]);
    assert_eq!(code, 0);
    for name in ["honest", "malicious_relay_inject", "malicious_reporting", "registration_only"] {
        assert!(out.contains(&format!("name={name} ")), "{out}");
    }
}

#[test]
fn run_writes_transcript_and_gas_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let (code, out) = rsiot(&["run", "registration_only", "--seed", "9", "--out", out_dir]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().last().unwrap().starts_with("verdict pass"));
    let transcript = dir.path().join("registration_only-9.transcript");
    assert!(transcript.exists());
    assert!(dir.path().join("registration_only-9.gas").exists());

    let (code, report) = rsiot(&["gas-report", transcript.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(report.starts_with("gas-report total_gas=109000 "), "{report}");
    assert!(report.contains("group name=registration gas=109000"));
}

#[test]
fn unmet_expectation_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wrong.toml");
    std::fs::write(&path, "name = \"wrong\"\nseed = 1\n[traffic]\npackets = 3\n[expect]\nrelay_revenue = 7\n").unwrap();
    let (code, out) = rsiot(&["run", path.to_str().unwrap()]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("verdict fail relay_revenue: expected 7, got 6"), "{out}");
}

#[test]
fn gas_table_flag_overrides_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("gas.toml");
    let mut t = rsiot::ledger::GasTable::default();
    t.base.insert("reg_user.create".into(), 50_000);
    std::fs::write(&table, t.to_toml_string()).unwrap();
    let (code, out) = rsiot(&["run", "registration_only", "--gas-table", table.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("total_gas: expected 109000, got 112000"), "{out}");
}

#[test]
fn tamper_mc_edge_cases() {
    let (code, out) = rsiot(&["tamper-mc", "--l", "64", "--n", "8", "--m", "0", "--trials", "2000", "--seed", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("detected=0 rate=0.000000"), "{out}");
    let (code, out) = rsiot(&["tamper-mc", "--l", "64", "--n", "8", "--m", "64", "--trials", "2000", "--seed", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("rate=1.000000"), "{out}");
    let (code, _) = rsiot(&["tamper-mc", "--l", "4", "--n", "8", "--m", "5", "--trials", "10", "--seed", "1"]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_scenario_is_an_error() {
    let (code, _) = rsiot(&["run", "no_such_scenario"]);
    assert_eq!(code, 2);
}
