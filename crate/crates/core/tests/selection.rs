mod common;

use common::{example, example_system, example_tree};
use empnet_core::selection::{bus, central, most_discriminating, resilient_global, resilient_local, sparsest, star, tree};
use empnet_core::{
    assemble, global_weight_matrix, is_irreducible, select, CoreError, Direction, EmpathicStatement, Relation, StatementPayload,
    TargetSpec, Thresholds, TreeEdge, TreeSpec, UtilityKind, UtilityMatrix,
};

fn t() -> Thresholds {
    Thresholds::default()
}

fn arcs(w: &empnet_core::EmpathicMatrix) -> Vec<(usize, usize)> {
    let n = w.n();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && w.get(i, j) > 1e-9).collect()
}

#[test]
fn most_discriminating_reaches_system_slack() {
    let sys = example_system();
    let r = most_discriminating(&sys, &t()).unwrap();
    let obj = r.objective.unwrap();
    assert!((obj - 0.1840).abs() < 1e-3);
    assert_eq!(r.eps, obj);
    assert!(sys.verify(&r.network, r.eps, 1e-6, &[]).is_empty());
}

#[test]
fn printed_discriminating_network_is_compatible() {
    let sys = example_system();
    let w1 = example().network("W_1");
    // Printed to four decimals, so only loosely.
    assert!(sys.verify(&w1, 0.18, 2e-3, &[]).is_empty(), "{:?}", sys.verify(&w1, 0.18, 2e-3, &[]));
}

#[test]
fn sparse_network_has_one_arc() {
    let sys = example_system();
    let r = sparsest(&sys, &t()).unwrap();
    assert_eq!(r.objective, Some(11.0));
    assert_eq!(arcs(&r.network), vec![(1, 2)]);
    assert!(r.eps >= t().eps_min - 1e-12);
}

#[test]
fn central_and_distributed() {
    let sys = example_system();
    let c = central(&sys, &t(), Some(8), 3).unwrap();
    assert!(c.diagnostics.is_central);
    assert!(c.certificate.notes.is_empty());
    assert_eq!(c.target, TargetSpec::Central { starts: Some(8), seed: Some(3) });
    let d = select(&sys, &TargetSpec::Distributed, &t(), 0).unwrap();
    assert!(d.diagnostics.is_distributed);
    assert!((d.diagnostics.entropy - 10f64.ln()).abs() < 1e-6);
}

#[test]
fn resilient_local_is_dense_and_rejects_zero_statements() {
    let sys = example_system();
    let r = resilient_local(&sys, &t()).unwrap();
    assert_eq!(r.diagnostics.density, 1.0);
    assert!(r.network.rows().iter().flatten().all(|&v| v >= t().eps_prime - 1e-12));

    let mut stmts = common::example_statements();
    stmts.push(EmpathicStatement::new("z", StatementPayload::ZeroWeight { i: 3, j: 4 }));
    let sys = assemble(&example().ui(), &stmts, &t()).unwrap();
    match resilient_local(&sys, &t()) {
        Err(CoreError::TargetConflict { target, statements }) => {
            assert_eq!(target, "resilient-local");
            assert_eq!(statements, vec!["z".to_string()]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn resilient_global_both_directions() {
    let sys = example_system();
    for dir in [Direction::Forward, Direction::Reverse] {
        let r = resilient_global(&sys, &t(), dir).unwrap();
        assert!(is_irreducible(&r.network, t().eps_prime));
        let g = r.global.as_ref().unwrap();
        assert_eq!(g, &global_weight_matrix(&r.network).unwrap());
        assert!(g.rows().iter().flatten().all(|&v| v > 0.0));
        assert!(r.global_diagnostics.is_some());
        for j in 0..10 {
            assert!((r.network.get(j, j) - t().eps_prime).abs() < 1e-9);
        }
    }
    let fwd = resilient_global(&sys, &t(), Direction::Forward).unwrap();
    assert!((fwd.objective.unwrap() - 0.135965).abs() < 1e-4);
}

#[test]
fn star_centers() {
    let sys = example_system();
    // Node 2 must send weight to node 3, so only node 3 can be the center.
    assert!(matches!(star(&sys, &t(), Some(1)), Err(CoreError::Infeasible(_))));
    let at3 = star(&sys, &t(), Some(2)).unwrap();
    assert!((at3.objective.unwrap() - 0.1310).abs() < 1e-3);
    assert!(arcs(&at3.network).iter().all(|&(_, j)| j == 2));
    let best = star(&sys, &t(), None).unwrap();
    assert_eq!(best.certificate.center, Some(2));
    assert_eq!(best.target, TargetSpec::Star { center: None });
    assert!(best.certificate.notes.iter().any(|n| n.starts_with("infeasible centers")));
    assert!(star(&sys, &t(), Some(10)).is_err());
}

#[test]
fn bus_and_tree() {
    let sys = example_system();
    let b = bus(&sys, &t(), Direction::Forward).unwrap();
    assert!((b.objective.unwrap() - 0.0922).abs() < 1e-3);
    assert!(arcs(&b.network).iter().all(|&(i, j)| j == i + 1));
    assert!(matches!(bus(&sys, &t(), Direction::Reverse), Err(CoreError::Infeasible(_))));

    let spec = example_tree();
    let r = tree(&sys, &t(), &spec).unwrap();
    assert!((r.objective.unwrap() - 0.040491).abs() < 1e-5, "{:?}", r.objective);
    for e in &spec.edges {
        assert_eq!(r.network.get(e.parent, e.parent), 0.0);
    }
    let leaves = [0, 5, 6, 7, 8, 9];
    for &l in &leaves {
        assert!((r.network.get(l, l) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn tree_spec_validation() {
    let e = |p, c| TreeEdge { parent: p, child: c };
    let bad = [
        TreeSpec { edges: vec![e(0, 1)] },
        TreeSpec { edges: vec![e(0, 1), e(2, 1)] },
        TreeSpec { edges: vec![e(0, 1), e(1, 0)] },
        TreeSpec { edges: vec![e(0, 1), e(0, 5)] },
        TreeSpec { edges: vec![e(0, 0), e(1, 2)] },
    ];
    for spec in bad {
        assert!(spec.validate(3).is_err(), "{spec:?}");
    }
    let (root, children) = TreeSpec { edges: vec![e(1, 0), e(1, 2)] }.validate(3).unwrap();
    assert_eq!(root, 1);
    assert_eq!(children[1], vec![0, 2]);
}

#[test]
fn two_node_tree_with_free_root_diagonal() {
    // Root 1 gives everything to 2, which must then prefer what 2 prefers.
    let u = UtilityMatrix::new(UtilityKind::Intrinsic, vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let stmts = vec![EmpathicStatement::new(
        "p",
        StatementPayload::Preference { dm: 0, first: 1, second: 0, relation: Relation::Strict },
    )];
    let sys = assemble(&u, &stmts, &t()).unwrap();
    let spec = TreeSpec { edges: vec![TreeEdge { parent: 0, child: 1 }] };
    let r = tree(&sys, &t(), &spec).unwrap();
    assert_eq!(r.network.rows(), &[vec![0.0, 1.0], vec![0.0, 1.0]]);
    assert!((r.eps - 0.6).abs() < 1e-9);
}

#[test]
fn unbounded_slack_falls_back() {
    let u = UtilityMatrix::new(UtilityKind::Intrinsic, vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    let sys = assemble(&u, &[], &t()).unwrap();
    let r = most_discriminating(&sys, &t()).unwrap();
    assert_eq!(r.objective, None);
    assert_eq!(r.eps, 0.0);
    assert!(!r.certificate.notes.is_empty());
}

#[test]
fn target_json() {
    let parse = |s: &str| serde_json::from_str::<TargetSpec>(s).unwrap();
    assert_eq!(parse(r#"{"kind":"discriminating"}"#), TargetSpec::MostDiscriminating);
    assert_eq!(parse(r#"{"kind":"star","center":3}"#), TargetSpec::Star { center: Some(2) });
    assert_eq!(parse(r#"{"kind":"star"}"#), TargetSpec::Star { center: None });
    assert_eq!(parse(r#"{"kind":"bus","direction":"rev"}"#), TargetSpec::Bus { direction: Direction::Reverse });
    assert_eq!(parse(r#"{"kind":"resilient-global"}"#), TargetSpec::ResilientGlobal { direction: Direction::Forward });
    let tree = parse(r#"{"kind":"tree","tree":{"edges":[{"parent":1,"child":2}]}}"#);
    assert_eq!(tree, TargetSpec::Tree { tree: TreeSpec { edges: vec![TreeEdge { parent: 0, child: 1 }] } });
    assert!(serde_json::from_str::<TargetSpec>(r#"{"kind":"star","center":0}"#).is_err());
    assert!(serde_json::from_str::<TargetSpec>(r#"{"kind":"blob"}"#).is_err());
    let json = serde_json::to_string(&TargetSpec::Star { center: Some(2) }).unwrap();
    assert_eq!(json, r#"{"kind":"star","center":3}"#);
}

#[test]
fn selection_result_round_trips() {
    let sys = example_system();
    let r = select(&sys, &TargetSpec::Sparse, &t(), 0).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: empnet_core::SelectionResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}
