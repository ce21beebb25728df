//! Shared fixtures: the worked ten-expert, five-alternative example.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;

use empnet_core::{
    assemble, ConstraintSystem, EmpathicMatrix, EmpathicStatement, FuzzyJudgmentMatrix, IntrinsicStatement,
    MatrixKind, Relation, StatementPayload, Thresholds, TreeEdge, TreeSpec, UtilityKind, UtilityMatrix,
};
use serde::Deserialize;

#[derive(Deserialize)]
pub struct TableRow {
    pub label: String,
    pub sw: Vec<f64>,
    pub best: usize,
}

#[derive(Deserialize)]
pub struct Example {
    pub judgments_incomplete: Vec<Vec<Vec<Option<f64>>>>,
    pub judgments_completed: Vec<Vec<Vec<f64>>>,
    pub intrinsic_statements: Vec<IntrinsicStatement>,
    pub intrinsic: Vec<Vec<f64>>,
    pub networks: BTreeMap<String, Vec<Vec<f64>>>,
    pub utilities: BTreeMap<String, Vec<Vec<f64>>>,
    pub global_w6: Vec<Vec<f64>>,
    pub global_w7: Vec<Vec<f64>>,
    pub welfare_table: Vec<TableRow>,
}

pub fn example() -> &'static Example {
    static EX: OnceLock<Example> = OnceLock::new();
    EX.get_or_init(|| serde_json::from_str(include_str!("../fixtures/example.json")).expect("fixture parses"))
}

impl Example {
    pub fn incomplete(&self, k: usize) -> FuzzyJudgmentMatrix {
        FuzzyJudgmentMatrix::new(self.judgments_incomplete[k].clone()).unwrap()
    }

    pub fn completed(&self, k: usize) -> FuzzyJudgmentMatrix {
        FuzzyJudgmentMatrix::complete_from(self.judgments_completed[k].clone()).unwrap()
    }

    /// Statements of expert `k` (zero-based).
    pub fn statements_of(&self, k: usize) -> Vec<IntrinsicStatement> {
        self.intrinsic_statements.iter().filter(|s| s.dm == k).cloned().collect()
    }

    pub fn ui(&self) -> UtilityMatrix {
        UtilityMatrix::from_printed(UtilityKind::Intrinsic, self.intrinsic.clone()).unwrap()
    }

    pub fn network(&self, name: &str) -> EmpathicMatrix {
        EmpathicMatrix::from_printed(MatrixKind::Local, self.networks[name].clone()).unwrap()
    }

    pub fn utility(&self, name: &str) -> UtilityMatrix {
        UtilityMatrix::new(UtilityKind::LocalEmpathic, self.utilities[name].clone()).unwrap()
    }
}

fn pref(id: &str, dm: usize, first: usize, second: usize) -> EmpathicStatement {
    EmpathicStatement::new(id, StatementPayload::Preference { dm, first, second, relation: Relation::Strict })
}

/// The analyst's six statements (zero-based indices):
/// d1 a1≻a4, d2 a1≻a3, d5 a2≻a3, d9 a5≻a4, arc 2→3, w11 ≥ 2·w13.
pub fn example_statements() -> Vec<EmpathicStatement> {
    vec![
        pref("a", 0, 0, 3),
        pref("b", 1, 0, 2),
        pref("c", 4, 1, 2),
        pref("d", 8, 4, 3),
        EmpathicStatement::new("e", StatementPayload::ArcPresence { i: 1, j: 2 }),
        EmpathicStatement::new(
            "f",
            StatementPayload::WeightDominance { i: 0, j: 0, k: 0, h: 2, factor: 2.0, relation: Relation::Weak },
        ),
    ]
}

pub fn example_system() -> ConstraintSystem {
    assemble(&example().ui(), &example_statements(), &Thresholds::default()).unwrap()
}

/// Rooted at expert 2: 2→{3,4,5}, 3→{6,7}, 4→{1,8}, 5→{9,10} (zero-based below).
pub fn example_tree() -> TreeSpec {
    let pairs = [(1, 2), (1, 3), (1, 4), (2, 5), (2, 6), (3, 0), (3, 7), (4, 8), (4, 9)];
    TreeSpec { edges: pairs.iter().map(|&(parent, child)| TreeEdge { parent, child }).collect() }
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

pub mod oracle {
    use empnet_core::{ConstraintSystem, EmpathicMatrix, EmpathicStatement, MatrixKind, Relation, StatementPayload};
    use rand::{Rng, RngCore};

    /// Random local matrix with positive diagonal. Off-diagonal entries are
    /// present with probability `p`, and every present entry is at least
    /// `1/(10n)` after normalization.
    pub fn random_local(rng: &mut impl RngCore, n: usize, p: f64) -> EmpathicMatrix {
        let rows = (0..n)
            .map(|i| {
                let raw: Vec<f64> = (0..n)
                    .map(|j| if i == j || rng.random_bool(p) { rng.random_range(1.0..10.0) } else { 0.0 })
                    .collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            })
            .collect();
        EmpathicMatrix::new(MatrixKind::Local, rows).unwrap()
    }

    /// Strong connectivity by Floyd-Warshall closure over arcs `w_ij > 0`.
    pub fn strongly_connected(w: &EmpathicMatrix) -> bool {
        let n = w.n();
        let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || w.get(i, j) > 0.0).collect()).collect();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        reach.iter().all(|r| r.iter().all(|&b| b))
    }

    /// Grid values of one matrix row: multiples of `step` summing to one,
    /// with the diagonal entry at least `step`.
    fn grid_rows(step: f64, diag: usize) -> Vec<[f64; 3]> {
        let k = (1.0 / step).round() as usize;
        let mut out = Vec::new();
        for a in 0..=k {
            for b in 0..=k - a {
                let v = [a as f64 * step, b as f64 * step, (k - a - b) as f64 * step];
                if v[diag] >= step - 1e-12 {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Largest slack ε over every `3×3` grid matrix, split by the state of
    /// each off-diagonal entry: `best[i][j][0]` with `w_ij = 0`,
    /// `best[i][j][1]` with `w_ij >= eps_prime`. `-inf` when no grid point
    /// satisfies the non-slack rows.
    pub fn relation_grid(sys: &ConstraintSystem, step: f64) -> [[[f64; 2]; 3]; 3] {
        let rows: Vec<_> = sys.groups.iter().flat_map(|g| g.rows.iter()).collect();
        // contrib[i][c][r]: row r's left-hand side from matrix row i at candidate c.
        let cands: Vec<Vec<[f64; 3]>> = (0..3).map(|i| grid_rows(step, i)).collect();
        let contrib: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|i| {
                cands[i]
                    .iter()
                    .map(|v| {
                        rows.iter()
                            .map(|r| r.terms.iter().filter(|t| t.i == i).map(|t| t.coef * v[t.j]).sum())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut best = [[[f64::NEG_INFINITY; 2]; 3]; 3];
        for (a, ca) in contrib[0].iter().enumerate() {
            for (b, cb) in contrib[1].iter().enumerate() {
                for (c, cc) in contrib[2].iter().enumerate() {
                    let mut s = 1e6f64;
                    for (r, row) in rows.iter().enumerate() {
                        let gap = ca[r] + cb[r] + cc[r] - row.rhs;
                        if row.eps > 0.0 {
                            s = s.min(gap / row.eps);
                        } else if gap < -1e-12 {
                            s = f64::NEG_INFINITY;
                            break;
                        }
                    }
                    let w = [cands[0][a], cands[1][b], cands[2][c]];
                    for i in 0..3 {
                        for j in (0..3).filter(|&j| j != i) {
                            let k = usize::from(w[i][j] >= sys.eps_prime);
                            if k == 1 || w[i][j] == 0.0 {
                                best[i][j][k] = best[i][j][k].max(s);
                            }
                        }
                    }
                }
            }
        }
        best
    }

    /// Bound on the slack lost by moving each weight at most `step`:
    /// `step` times the largest `Σ|coef| / eps` over slack rows.
    pub fn grid_margin(sys: &ConstraintSystem, step: f64) -> f64 {
        let l = sys
            .groups
            .iter()
            .flat_map(|g| g.rows.iter())
            .filter(|r| r.eps > 0.0)
            .map(|r| r.terms.iter().map(|t| t.coef.abs()).sum::<f64>() / r.eps)
            .fold(0.0, f64::max);
        step * l + 1e-9
    }

    /// Random statements for three experts over `m` alternatives.
    pub fn random_statements(rng: &mut impl RngCore, m: usize) -> Vec<EmpathicStatement> {
        let count = rng.random_range(1..=3);
        let mut out = Vec::new();
        for k in 0..count {
            let dm = rng.random_range(0..3);
            let first = rng.random_range(0..m);
            let second = (first + rng.random_range(1..m)) % m;
            out.push(EmpathicStatement::new(
                format!("p{k}"),
                StatementPayload::Preference { dm, first, second, relation: Relation::Strict },
            ));
        }
        if rng.random_bool(0.5) {
            let (i, j, k, h) = (rng.random_range(0..3), rng.random_range(0..3), rng.random_range(0..3), rng.random_range(0..3));
            if (i, j) != (k, h) {
                out.push(EmpathicStatement::new(
                    "dom",
                    StatementPayload::WeightDominance { i, j, k, h, factor: 1.0, relation: Relation::Strict },
                ));
            }
        }
        out
    }
}
