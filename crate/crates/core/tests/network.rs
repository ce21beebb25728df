mod common;

use common::{example, max_abs_diff};
use empnet_core::network::{local_utilities, utilities_under, PRINTED_TOL};
use empnet_core::{
    centrality_entropy, classify_network, empathic_centrality, global_utilities, global_weight_matrix, is_irreducible,
    network_density, CoreError, EmpathicMatrix, MatrixKind, Thresholds, UtilityKind, UtilityMatrix,
};

fn local(rows: Vec<Vec<f64>>) -> EmpathicMatrix {
    EmpathicMatrix::new(MatrixKind::Local, rows).unwrap()
}

#[test]
fn centralities_are_column_sums() {
    let w = local(vec![vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.2, 0.3, 0.5]]);
    let c = empathic_centrality(&w);
    assert_eq!(c.omega, vec![0.7, 1.8, 0.5]);
    let total: f64 = c.omega.iter().sum();
    assert!((total - 3.0).abs() < 1e-12);
}

#[test]
fn entropy_extremes() {
    let id = EmpathicMatrix::identity(4);
    assert!((centrality_entropy(&id) - 4f64.ln()).abs() < 1e-12);
    let sink = local(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
    assert_eq!(centrality_entropy(&sink), 0.0);
    let d = classify_network(&sink, &Thresholds::default());
    assert!(d.zero_centrality);
    assert!(d.is_central);
    assert!(!d.is_distributed);
}

#[test]
fn density_counts_arcs_at_threshold() {
    let w = local(vec![vec![0.99, 0.01, 0.0], vec![0.0, 0.995, 0.005], vec![0.5, 0.0, 0.5]]);
    // 0.01 meets ε' = 0.01 exactly; 0.005 does not.
    assert!((network_density(&w, 0.01).unwrap() - 2.0 / 6.0).abs() < 1e-12);
    assert!(matches!(network_density(&EmpathicMatrix::identity(1), 0.01), Err(CoreError::Precondition(_))));
}

#[test]
fn irreducibility_of_cycle_and_chain() {
    let cycle = local(vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]]);
    let chain = local(vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.0, 0.0, 1.0]]);
    assert!(is_irreducible(&cycle, 0.01));
    assert!(!is_irreducible(&chain, 0.01));
    assert!(global_weight_matrix(&cycle).unwrap().rows().iter().flatten().all(|&v| v > 0.0));
    assert!(global_weight_matrix(&chain).unwrap().rows().iter().flatten().any(|&v| v < 1e-12));
}

#[test]
fn global_matrix_solves_its_defining_equation() {
    // (I - W + D) G = D with D the diagonal of W.
    let w = local(vec![vec![0.6, 0.4, 0.0], vec![0.1, 0.7, 0.2], vec![0.3, 0.0, 0.7]]);
    let g = global_weight_matrix(&w).unwrap();
    assert_eq!(g.kind(), MatrixKind::Global);
    for i in 0..3 {
        for j in 0..3 {
            let wg: f64 = (0..3).map(|k| w.get(i, k) * g.get(k, j)).sum();
            let d = if i == j { w.get(i, i) } else { 0.0 };
            let lhs = g.get(i, j) - wg + w.get(i, i) * g.get(i, j);
            assert!((lhs - d).abs() < 1e-12, "({i},{j}): {lhs} vs {d}");
        }
    }
}

#[test]
fn printed_global_matrix_reproduced() {
    let ex = example();
    let g = global_weight_matrix(&ex.network("W_6")).unwrap();
    assert!(max_abs_diff(g.rows(), &ex.global_w6) < 2e-3);
    let g7 = global_weight_matrix(&ex.network("W_7")).unwrap();
    assert!(max_abs_diff(g7.rows(), &ex.global_w7) < 2e-3);
}

#[test]
fn printed_matrices_give_printed_utilities() {
    let ex = example();
    let ui = ex.ui();
    for (w, u) in [("W_1", "U_1"), ("W_2", "U_2"), ("W_3", "U_3"), ("W_4", "U_4"), ("W_5", "U_5"), ("W_7", "U_8")] {
        let got = local_utilities(&ex.network(w), &ui).unwrap();
        assert_eq!(got.kind(), UtilityKind::LocalEmpathic);
        assert!(max_abs_diff(got.rows(), &ex.utilities[u]) < 2e-4, "{w}");
    }
    let global = global_utilities(&ex.network("W_6"), &ui).unwrap();
    assert_eq!(global.kind(), UtilityKind::GlobalEmpathic);
    assert!(max_abs_diff(global.rows(), &ex.utilities["U_6"]) < 2e-4);
    let g = global_weight_matrix(&ex.network("W_6")).unwrap();
    assert_eq!(utilities_under(&g, &ui).unwrap().kind(), UtilityKind::GlobalEmpathic);
}

#[test]
fn printed_rows_are_renormalized_but_strict_constructor_rejects() {
    let ex = example();
    let raw = ex.networks["W_5"].clone();
    let worst = raw.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst > 1e-9 && worst < PRINTED_TOL);
    assert!(EmpathicMatrix::new(MatrixKind::Local, raw.clone()).is_err());
    let w = EmpathicMatrix::from_printed(MatrixKind::Local, raw).unwrap();
    assert!(w.max_row_error() < 1e-12);
    let far = vec![vec![0.5, 0.4], vec![0.0, 1.0]];
    assert!(EmpathicMatrix::from_printed(MatrixKind::Local, far).is_err());
}

#[test]
fn matrix_json_is_validated() {
    let ok: EmpathicMatrix = serde_json::from_str(r#"{"n":2,"kind":"local","rows":[[0.5,0.5],[0,1]]}"#).unwrap();
    assert_eq!(ok.n(), 2);
    let back: EmpathicMatrix = serde_json::from_str(&serde_json::to_string(&ok).unwrap()).unwrap();
    assert_eq!(back, ok);
    for bad in [
        r#"{"n":3,"kind":"local","rows":[[0.5,0.5],[0,1]]}"#,
        r#"{"n":2,"kind":"local","rows":[[0.5,0.6],[0,1]]}"#,
        r#"{"n":2,"kind":"local","rows":[[1.5,-0.5],[0,1]]}"#,
        r#"{"n":2,"kind":"local","rows":[[1,0],[0]]}"#,
        r#"{"n":2,"kind":"sideways","rows":[[1,0],[0,1]]}"#,
    ] {
        assert!(serde_json::from_str::<EmpathicMatrix>(bad).is_err(), "{bad}");
    }
}

#[test]
fn utility_dimensions_must_agree() {
    let w = EmpathicMatrix::identity(3);
    let u = UtilityMatrix::new(UtilityKind::Intrinsic, vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
    assert!(matches!(local_utilities(&w, &u), Err(CoreError::Dimension(_))));
    assert!(UtilityMatrix::new(UtilityKind::Intrinsic, vec![vec![0.5, 0.6]]).is_err());
    assert!(UtilityMatrix::new(UtilityKind::LocalEmpathic, vec![vec![0.5, 0.6]]).is_ok());
}

#[test]
fn thresholds_validate() {
    let t = Thresholds::default();
    assert_eq!(t.big_m(10), 21.0);
    assert!(t.validate(10).is_ok());
    assert!(t.validate(100).is_err(), "ε' must stay below 1/n");
    let bad = Thresholds { delta: -1.0, ..Thresholds::default() };
    assert!(bad.validate(3).is_err());
    let parsed: Thresholds = serde_json::from_str(r#"{"eps_prime":0.02}"#).unwrap();
    assert_eq!(parsed.delta, 0.015);
    assert!(serde_json::from_str::<Thresholds>(r#"{"epsilon":0.02}"#).is_err());
}

#[test]
fn dot_lists_arcs_above_threshold() {
    let w = local(vec![vec![0.995, 0.005], vec![0.25, 0.75]]);
    let dot = empnet_core::export::to_dot(&w, 0.01, "net");
    assert_eq!(dot, "digraph \"net\" {\n  graph [comment=\"local\"];\n  d1;\n  d2;\n  d2 -> d1 [label=\"0.2500\"];\n}\n");
}
