mod common;

use std::fs;

use common::{example, example_statements};
use empnet_core::session::canonical::{quantize, to_bytes};
use empnet_core::session::store::{StoreError, EVENTS_FILE, STATE_FILE};
use empnet_core::session::DEFAULT_REPAIR_LIMIT;
use empnet_core::{
    CoreError, EmpathicStatement, Panel, Phase, Relation, Session, SessionDir, SessionState, SessionStore, StatementPayload,
    TargetSpec, Thresholds,
};

fn panel() -> Panel {
    Panel { n: 10, m: 5, experts: vec![], alternatives: vec![] }
}

/// Judgments, completion, contradictory statements, repair, relations,
/// one selection and welfare.
fn worked_session() -> Session {
    let ex = example();
    let mut s = Session::new("demo", panel(), Thresholds::default()).unwrap();
    for k in 0..10 {
        s.set_judgments(k, ex.incomplete(k)).unwrap();
    }
    s.add_intrinsic_statements(ex.intrinsic_statements.clone()).unwrap();
    let outcome = s.complete_judgments().unwrap();
    assert!(outcome.intrinsic.is_some());
    assert_eq!(s.state.phase, Phase::EmpathicElicitation);

    let mut stmts = example_statements();
    stmts.push(EmpathicStatement::new(
        "g",
        StatementPayload::Preference { dm: 0, first: 3, second: 0, relation: Relation::Strict },
    ));
    s.add_statements(stmts).unwrap();
    let check = s.check(DEFAULT_REPAIR_LIMIT).unwrap();
    assert!(!check.consistent);
    let report = check.report.unwrap();
    assert_eq!(report.cardinality, 1);
    let k = report.sets.iter().position(|set| set == &vec!["g".to_string()]).expect("g alone repairs");
    let fixed = s.resolve_set(k, DEFAULT_REPAIR_LIMIT).unwrap();
    assert!(fixed.consistent);
    assert_eq!(s.state.phase, Phase::Resolved);
    s.relations().unwrap();
    s.select(&TargetSpec::Sparse, 0).unwrap();
    s.welfare(None).unwrap();
    s
}

#[test]
fn workflow_persists_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = SessionDir::new(tmp.path().join("demo"));
    let mut s = worked_session();
    {
        let lock = dir.lock().unwrap();
        dir.create(&mut s, &lock).unwrap();
    }
    assert!(s.pending().is_empty());
    let loaded = dir.load().unwrap();
    assert_eq!(loaded.state, s.state);
    let replayed = dir.replay().unwrap();
    assert_eq!(replayed, s.state);
    let events = dir.events().unwrap();
    assert_eq!(events.len() as u64, s.state.events);
    assert!(events.windows(2).all(|w| w[1].seq == w[0].seq + 1));
    // Saved state uses canonical bytes: saving again changes nothing.
    let before = fs::read(dir.state_path()).unwrap();
    let mut again = dir.load().unwrap();
    dir.save(&mut again, &dir.lock().unwrap()).unwrap();
    assert_eq!(fs::read(dir.state_path()).unwrap(), before);
}

#[test]
fn relations_are_cached_by_fingerprint() {
    let mut s = worked_session();
    let events = s.state.events;
    s.relations().unwrap();
    assert_eq!(s.state.events, events, "unchanged system must not recompute");
}

#[test]
fn phase_guards() {
    let mut s = Session::new("p", panel(), Thresholds::default()).unwrap();
    assert!(matches!(s.add_statements(example_statements()), Err(CoreError::Phase(_))));
    assert!(matches!(s.check(4), Err(CoreError::Phase(_))));
    assert!(matches!(s.relations(), Err(CoreError::Phase(_))));
    assert!(matches!(s.complete_judgments(), Err(CoreError::Precondition(_))));
    s.set_intrinsic(example().ui()).unwrap();
    assert!(matches!(s.relations(), Err(CoreError::Phase(_))));
    assert!(matches!(s.set_judgments(0, example().incomplete(0)), Err(CoreError::Phase(_))));
    let mut done = worked_session();
    let t = Thresholds { eps_prime: 0.02, ..Thresholds::default() };
    assert!(matches!(done.set_thresholds(t), Err(CoreError::Phase(_))));
    let t = Thresholds { delta: 0.02, ..Thresholds::default() };
    done.set_thresholds(t).unwrap();
}

#[test]
fn input_errors_point_at_batch_positions() {
    let mut s = Session::new("e", panel(), Thresholds::default()).unwrap();
    s.set_intrinsic(example().ui()).unwrap();
    s.add_statements(example_statements()).unwrap();
    let bad = vec![
        EmpathicStatement::new("x", StatementPayload::ArcPresence { i: 0, j: 1 }),
        EmpathicStatement::new("y", StatementPayload::ArcPresence { i: 0, j: 40 }),
    ];
    match s.add_statements(bad) {
        Err(CoreError::Invalid { field, .. }) => assert_eq!(field, "statements[2].j"),
        other => panic!("{other:?}"),
    }
    assert!(s.set_judgments(12, example().incomplete(0)).is_err());
    assert!(Session::new("bad", Panel { n: 1, m: 5, experts: vec![], alternatives: vec![] }, Thresholds::default()).is_err());
}

#[test]
fn failed_completion_reports_repair_positions() {
    let ex = example();
    let mut s = Session::new("r", panel(), Thresholds::default()).unwrap();
    for k in 0..10 {
        s.set_judgments(k, ex.incomplete(k)).unwrap();
    }
    s.add_intrinsic_statements(ex.intrinsic_statements.clone()).unwrap();
    // R_1 fixes r_12 = 0.8, so a2 over a1 for d1 contradicts it.
    s.add_intrinsic_statements(vec![empnet_core::IntrinsicStatement::preference(0, 1, 0)]).unwrap();
    let out = s.complete_judgments().unwrap();
    assert!(out.intrinsic.is_none());
    assert_eq!(s.state.phase, Phase::IntrinsicElicitation);
    let last = ex.intrinsic_statements.len();
    match &out.completions[0].repair {
        Some(empnet_core::judgment::JudgmentRepair::Sets { sets, .. }) => assert_eq!(sets, &vec![vec![last]]),
        other => panic!("{other:?}"),
    }
    s.remove_intrinsic_statements(vec![last]).unwrap();
    assert!(s.complete_judgments().unwrap().intrinsic.is_some());
}

#[test]
fn corrupt_files_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = SessionDir::new(tmp.path().join("c"));
    let mut s = Session::new("c", panel(), Thresholds::default()).unwrap();
    dir.create(&mut s, &dir.lock().unwrap()).unwrap();
    let path = dir.state_path();
    let good = fs::read_to_string(&path).unwrap();

    fs::write(&path, &good[..good.len() / 2]).unwrap();
    assert!(matches!(dir.load(), Err(StoreError::Corrupt { .. })));

    fs::write(&path, good.replace("\"n\":10", "\"n\":11")).unwrap();
    match dir.load() {
        Err(StoreError::Corrupt { reason, .. }) => assert!(reason.contains("checksum")),
        other => panic!("{other:?}"),
    }

    fs::write(&path, good.replace("\"version\":1", "\"version\":9")).unwrap();
    assert!(matches!(dir.load(), Err(StoreError::Version { found: 9, .. })));

    fs::write(&path, &good).unwrap();
    fs::write(dir.events_path(), "{\"seq\":1,").unwrap();
    assert!(matches!(dir.events(), Err(StoreError::Corrupt { .. })));
    assert!(dir.load().is_ok());
}

#[test]
fn lock_and_existence() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = SessionDir::new(tmp.path().join("l"));
    assert!(matches!(dir.load(), Err(StoreError::NotFound(_))));
    let lock = dir.lock().unwrap();
    assert!(matches!(dir.lock(), Err(StoreError::Locked(_))));
    let mut s = Session::new("l", panel(), Thresholds::default()).unwrap();
    dir.create(&mut s, &lock).unwrap();
    assert!(matches!(dir.create(&mut s, &lock), Err(StoreError::Exists(_))));
    drop(lock);
    assert!(dir.lock().is_ok());
    assert!(dir.root().join(STATE_FILE).is_file());
    assert!(dir.root().join(EVENTS_FILE).is_file());
}

#[test]
fn store_lists_sessions() {
    let tmp = tempfile::tempdir().unwrap();
    let store = SessionStore::open(tmp.path()).unwrap();
    for id in ["b", "a"] {
        let dir = store.dir(id).unwrap();
        let mut s = Session::new(id, panel(), Thresholds::default()).unwrap();
        dir.create(&mut s, &dir.lock().unwrap()).unwrap();
    }
    fs::create_dir(tmp.path().join("stray")).unwrap();
    let ids: Vec<String> = store.list().unwrap().into_iter().map(|s| s.id).collect();
    assert_eq!(ids, ["a", "b"]);
    for bad in ["", "../x", "a/b", "a b"] {
        assert!(store.dir(bad).is_err(), "{bad:?}");
    }
}

#[test]
fn canonical_encoding() {
    assert_eq!(quantize(0.1 + 0.2), 0.3);
    assert_eq!(quantize(1.0 / 3.0), 0.333333333333);
    assert_eq!(quantize(0.0), 0.0);
    let bytes = to_bytes(&serde_json::json!({"b": 1, "a": [0.30000000000000004]})).unwrap();
    assert_eq!(String::from_utf8(bytes).unwrap(), r#"{"a":[0.3],"b":1}"#);
}

#[test]
fn state_json_round_trips() {
    let s = worked_session();
    let json = serde_json::to_string(&s.state).unwrap();
    let back: SessionState = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s.state);
}
