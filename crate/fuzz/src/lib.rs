//! Fuzz bodies, shared by the cargo-fuzz targets and the corpus replay
//! test. Each decodes untrusted bytes and, when decoding succeeds, pushes
//! the value through the code that consumes it. Errors are fine; panics,
//! hangs and runaway allocation are not.

use empnet_core::judgment::{complete, validate};
use empnet_core::session::store::{decode_event, decode_state};
use empnet_core::{
    assemble, classify_network, compare_networks, global_weight_matrix, EmpathicMatrix, EmpathicStatement,
    FuzzyJudgmentMatrix, IntrinsicStatement, NetworkInput, SessionState, TargetSpec, Thresholds, UtilityKind,
    UtilityMatrix,
};

/// Larger inputs only exercise decoding.
const MAX_SOLVE: usize = 8;

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

/// Four experts over three alternatives.
fn utilities() -> UtilityMatrix {
    let rows = vec![
        vec![0.5, 0.3, 0.2],
        vec![0.2, 0.5, 0.3],
        vec![0.3, 0.2, 0.5],
        vec![0.4, 0.4, 0.2],
    ];
    UtilityMatrix::new(UtilityKind::Intrinsic, rows).expect("fixed utilities are valid")
}

pub fn judgment_matrix(data: &[u8]) {
    let Ok(r) = serde_json::from_slice::<FuzzyJudgmentMatrix>(data) else { return };
    if validate(&r).is_empty() && r.m() <= MAX_SOLVE {
        let _ = complete(&r, &[]);
    }
}

pub fn empathic_matrix(data: &[u8]) {
    let Ok(w) = serde_json::from_slice::<EmpathicMatrix>(data) else { return };
    let _ = classify_network(&w, &Thresholds::default());
    if w.n() <= 4 * MAX_SOLVE {
        let _ = global_weight_matrix(&w);
    }
}

pub fn utility_matrix(data: &[u8]) {
    let _ = serde_json::from_slice::<UtilityMatrix>(data);
}

pub fn intrinsic_statements(data: &[u8]) {
    let Ok(stmts) = serde_json::from_slice::<Vec<IntrinsicStatement>>(data) else { return };
    let r = FuzzyJudgmentMatrix::new(vec![vec![Some(0.5), None, None], vec![None, Some(0.5), None], vec![None, None, Some(0.5)]])
        .expect("fixed judgments are valid");
    if stmts.len() <= MAX_SOLVE && stmts.iter().all(|s| s.dm == 0) {
        let _ = complete(&r, &stmts);
    }
}

pub fn empathic_statements(data: &[u8]) {
    let Ok(stmts) = serde_json::from_slice::<Vec<EmpathicStatement>>(data) else { return };
    if stmts.len() > MAX_SOLVE {
        return;
    }
    let t = Thresholds::default();
    if let Ok(sys) = assemble(&utilities(), &stmts, &t) {
        let _ = sys.feasible();
    }
}

pub fn target_spec(data: &[u8]) {
    let Ok(spec) = serde_json::from_slice::<TargetSpec>(data) else { return };
    let _ = spec.name();
    if let TargetSpec::Tree { tree } = spec {
        let _ = tree.validate(4);
    }
}

pub fn network_inputs(data: &[u8]) {
    let Ok(inputs) = serde_json::from_slice::<Vec<NetworkInput>>(data) else { return };
    if inputs.len() <= MAX_SOLVE {
        let _ = compare_networks(&utilities(), &inputs);
    }
}

pub fn thresholds(data: &[u8]) {
    let Ok(t) = serde_json::from_slice::<Thresholds>(data) else { return };
    let _ = t.validate(4);
}

pub fn session_state(data: &[u8]) {
    let _ = decode_state(data);
}

pub fn event_line(data: &[u8]) {
    let Some(line) = text(data) else { return };
    if let Ok(rec) = decode_event(line) {
        let _ = SessionState::replay(&[rec]);
    }
}

pub fn problem(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(p) = empnet_cli::Problem::parse(s) {
        let small = p.panel.n <= 4 * MAX_SOLVE && p.panel.m <= MAX_SOLVE;
        if small {
            let _ = p.into_session("fuzz", |t| t);
        }
    }
}

/// Every body by target name.
pub const TARGETS: &[(&str, fn(&[u8]))] = &[
    ("judgment_matrix", judgment_matrix),
    ("empathic_matrix", empathic_matrix),
    ("utility_matrix", utility_matrix),
    ("intrinsic_statements", intrinsic_statements),
    ("empathic_statements", empathic_statements),
    ("target_spec", target_spec),
    ("network_inputs", network_inputs),
    ("thresholds", thresholds),
    ("session_state", session_state),
    ("event_line", event_line),
    ("problem", problem),
];
