use super::*;

#[test]
fn every_builtin_passes_at_its_own_seed() {
    for s in builtins() {
        let t = run(&s).unwrap();
        assert!(t.passed(), "{}: {:?}", s.name, t.failures);
        assert_eq!(t.outcome.escrow_violations, 0, "{}", s.name);
    }
}

#[test]
fn replay_is_byte_identical() {
    let s = builtin("honest").unwrap();
    assert_eq!(run(&s).unwrap().to_text(), run(&s).unwrap().to_text());
}

#[test]
fn different_seeds_give_different_transcripts_same_verdict() {
    let mut a = builtin("honest").unwrap();
    let mut b = a.clone();
    a.seed = 10;
    b.seed = 11;
    let (ta, tb) = (run(&a).unwrap(), run(&b).unwrap());
    assert_ne!(ta.to_text(), tb.to_text());
    assert!(ta.passed() && tb.passed());
}

#[test]
fn honest_billing_arithmetic() {
    let t = run(&builtin("honest").unwrap()).unwrap();
    let o = &t.outcome;
    assert_eq!(o.relay_revenue, 200);
    assert_eq!(o.device_refund, 50_000 - 200);
    // The deposit stays escrowed while the relay remains registered.
    assert_eq!(o.delta("relay"), Some(200 - 1_000_000));
    assert_eq!(o.delta("device"), Some(-200));
    assert_eq!(o.delta("controller"), Some(0));
    assert_eq!(o.net_flow(), 0);
}

#[test]
fn transcript_carries_every_record_kind() {
    let text = run(&builtin("commit_cycle").unwrap()).unwrap().to_text();
    for prefix in ["scenario ", "gas-table ", "actor ", "msg ", "call ", "receipt ", "event ", "deliver ", "balance ", "state ", "outcome ", "verdict pass"] {
        assert!(text.lines().any(|l| l.starts_with(prefix)), "missing {prefix:?}");
    }
}

#[test]
fn gas_report_reads_back_a_transcript() {
    let t = run(&builtin("registration_only").unwrap()).unwrap();
    let r = gas_report(&t.to_text());
    assert_eq!(r.total, 109_000);
    assert_eq!(r.registration_gas(), 109_000);
    assert_eq!(r.by_actor["relay"], 40_000);
    assert_eq!(r.by_actor["device"] + r.by_actor["controller"], 69_000);
}

#[test]
fn unmet_expectation_fails_the_verdict() {
    let mut s = builtin("honest").unwrap();
    s.traffic.packets = 10;
    let t = run(&s).unwrap();
    assert!(!t.passed());
    assert!(t.failures.iter().any(|f| f.starts_with("relay_revenue")));
    assert!(t.lines.last().unwrap().starts_with("verdict fail"));
}

#[test]
fn scenario_round_trips_through_toml() {
    for s in builtins() {
        assert_eq!(Scenario::from_toml_str(&s.to_toml_string()).unwrap(), s);
    }
}

#[test]
fn malformed_scenarios_are_rejected() {
    assert!(matches!(Scenario::from_toml_str("name = 1"), Err(ScenarioError::Parse(_))));
    assert!(matches!(
        Scenario::from_toml_str("name = \"x\"\nseed = 1\nbogus = 2"),
        Err(ScenarioError::Parse(_))
    ));
    assert!(matches!(
        Scenario::from_toml_str("name = \"x\"\nseed = 1\n[actors]\nrelay = \"sneaky\""),
        Err(ScenarioError::Invalid(_))
    ));
    assert!(matches!(
        Scenario::from_toml_str("name = \"x\"\nseed = 1\n[traffic]\nmin_size = 9\nmax_size = 3"),
        Err(ScenarioError::Invalid(_))
    ));
    assert!(matches!(builtin("nope"), Err(ScenarioError::UnknownBuiltin(_))));
}

#[test]
fn gas_table_file_overrides_pricing() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = crate::ledger::GasTable::default();
    table.base.insert("reg_server".into(), 41_000);
    std::fs::write(dir.path().join("gas.toml"), table.to_toml_string()).unwrap();
    let src = "name = \"r\"\nseed = 3\n[traffic]\nstop_after = \"registration\"\n[gas]\ntable = \"gas.toml\"\n[expect]\ntotal_gas = 110000\n";
    std::fs::write(dir.path().join("s.toml"), src).unwrap();
    let s = Scenario::load(&dir.path().join("s.toml")).unwrap();
    let t = run(&s).unwrap();
    assert!(t.passed(), "{:?}", t.failures);
}

#[test]
fn missing_gas_table_is_an_error() {
    let mut s = builtin("registration_only").unwrap();
    s.gas.table = Some("/nonexistent/gas.toml".into());
    assert!(matches!(run(&s), Err(RunError::GasTable(_))));
}

#[test]
fn settle_every_splits_payments() {
    let mut s = builtin("honest").unwrap();
    s.traffic.settle_every = 25;
    let t = run(&s).unwrap();
    assert!(t.passed(), "{:?}", t.failures);
    assert_eq!(t.outcome.settlements, 4);
}
