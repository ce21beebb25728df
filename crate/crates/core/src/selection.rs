//! Representative-network selection over the compatible set: slack
//! maximization, sparsity, entropy targets, resilience and fixed topologies.

use empnet_solver::{
    maximize_entropy, minimize_entropy, solve_milp, Cmp, EntropyObjective, LinExpr, MathProgram, Objective, Sense,
    SolveResult, SolveStatus, StartTrace, DEFAULT_STARTS,
};
use serde::{Deserialize, Serialize};

use crate::constraints::{run_lp, ConstraintSystem, EpsMode, Formulation, StatementPayload};
use crate::error::{CoreError, Result};
use crate::index::{one_based, one_based_opt};
use crate::network::{classify_network, global_weight_matrix, EmpathicMatrix, NetworkDiagnostics, Thresholds};

/// Tolerance for re-checking a selected network against the system.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[default]
    #[serde(rename = "forward", alias = "fwd")]
    Forward,
    #[serde(rename = "reverse", alias = "rev")]
    Reverse,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    #[serde(with = "one_based")]
    pub parent: usize,
    #[serde(with = "one_based")]
    pub child: usize,
}

/// Rooted tree over all nodes, given as parent → child edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub edges: Vec<TreeEdge>,
}

impl TreeSpec {
    /// Root and child lists, after checking the edges span a rooted tree.
    pub fn validate(&self, n: usize) -> Result<(usize, Vec<Vec<usize>>)> {
        let field = "tree.edges";
        if self.edges.len() + 1 != n {
            return Err(CoreError::invalid(field, format!("a tree on {n} nodes has {} edges, got {}", n - 1, self.edges.len())));
        }
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for e in &self.edges {
            if e.parent >= n || e.child >= n {
                return Err(CoreError::invalid(field, format!("edge {}→{} leaves 1..={n}", e.parent + 1, e.child + 1)));
            }
            if e.parent == e.child {
                return Err(CoreError::invalid(field, format!("self-loop at node {}", e.parent + 1)));
            }
            if parent[e.child].replace(e.parent).is_some() {
                return Err(CoreError::invalid(field, format!("node {} has two parents", e.child + 1)));
            }
            children[e.parent].push(e.child);
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        let [root] = roots[..] else {
            return Err(CoreError::invalid(field, format!("expected one root, found {}", roots.len())));
        };
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            seen[v] = true;
            stack.extend(children[v].iter().copied().filter(|&c| !seen[c]));
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(CoreError::invalid(field, format!("node {} is not reachable from the root", v + 1)));
        }
        Ok((root, children))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSpec {
    #[serde(alias = "discriminating")]
    MostDiscriminating,
    Sparse,
    Central {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        starts: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Distributed,
    ResilientLocal,
    ResilientGlobal {
        #[serde(default)]
        direction: Direction,
    },
    Star {
        #[serde(default, with = "one_based_opt", skip_serializing_if = "Option::is_none")]
        center: Option<usize>,
    },
    Bus {
        #[serde(default)]
        direction: Direction,
    },
    Tree {
        tree: TreeSpec,
    },
}

impl TargetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MostDiscriminating => "most-discriminating",
            Self::Sparse => "sparse",
            Self::Central { .. } => "central",
            Self::Distributed => "distributed",
            Self::ResilientLocal => "resilient-local",
            Self::ResilientGlobal { .. } => "resilient-global",
            Self::Star { .. } => "star",
            Self::Bus { .. } => "bus",
            Self::Tree { .. } => "tree",
        }
    }
}

/// Solver evidence attached to a selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub status: SolveStatus,
    pub iterations: usize,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub starts: Vec<StartTrace>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    #[serde(default, with = "one_based_opt", skip_serializing_if = "Option::is_none")]
    pub center: Option<usize>,
}

impl Certificate {
    fn from(r: &SolveResult) -> Self {
        Self {
            status: r.status,
            iterations: r.meta.iterations,
            nodes: r.meta.nodes,
            seed: r.meta.seed,
            starts: r.meta.starts.clone(),
            notes: Vec::new(),
            center: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub target: TargetSpec,
    pub network: EmpathicMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global: Option<EmpathicMatrix>,
    /// `None` when the objective is ε and no statement bounds it.
    pub objective: Option<f64>,
    /// Slack at which the network satisfies the statements.
    pub eps: f64,
    pub diagnostics: NetworkDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_diagnostics: Option<NetworkDiagnostics>,
    pub certificate: Certificate,
}

/// Shared tail of every model: extract, re-verify, diagnose.
struct Finish<'a> {
    target: TargetSpec,
    objective: Option<f64>,
    eps: f64,
    certificate: Certificate,
    free_diagonal: Vec<bool>,
    t: &'a Thresholds,
}

impl Finish<'_> {
    fn run(self, f: &Formulation, built: &crate::constraints::Built, values: &[f64]) -> Result<SelectionResult> {
        let w = f.matrix(built, values)?;
        let bad = f.sys.verify(&w, self.eps, VERIFY_TOL, &self.free_diagonal);
        if !bad.is_empty() {
            return Err(CoreError::Internal(format!("{} network violates {}", self.target.name(), bad.join(", "))));
        }
        Ok(SelectionResult {
            diagnostics: classify_network(&w, self.t),
            network: w,
            global: None,
            global_diagnostics: None,
            target: self.target,
            objective: self.objective,
            eps: self.eps,
            certificate: self.certificate,
        })
    }
}

fn precheck(sys: &ConstraintSystem, t: &Thresholds) -> Result<()> {
    t.validate(sys.n)
}

fn infeasible(target: &TargetSpec, why: &str) -> CoreError {
    CoreError::Infeasible(format!("{}: {why}", target.name()))
}

/// Maximizes ε on `f`. An unbounded ε falls back to any feasible point at
/// ε = 0 and reports no objective.
fn solve_max_eps(f: &mut Formulation, target: &TargetSpec, t: &Thresholds, free: Vec<bool>) -> Result<SelectionResult> {
    f.eps = EpsMode::Free;
    let built = f.build();
    let mut p = built.program.clone();
    p.set_objective(Objective::Linear(LinExpr::var(built.eps)));
    let r = run_lp(&p)?;
    match r.status {
        SolveStatus::Optimal => {
            let fin = Finish {
                target: target.clone(),
                objective: Some(r.objective),
                eps: r.objective,
                certificate: Certificate::from(&r),
                free_diagonal: free,
                t,
            };
            fin.run(f, &built, &r.values)
        }
        SolveStatus::Infeasible => Err(infeasible(target, "no compatible network has this structure")),
        SolveStatus::Unbounded => {
            f.eps = EpsMode::Fixed(0.0);
            let built = f.build();
            let r = run_lp(&built.program)?;
            if r.status != SolveStatus::Optimal {
                return Err(infeasible(target, "no compatible network has this structure"));
            }
            let mut certificate = Certificate::from(&r);
            certificate.status = SolveStatus::Unbounded;
            certificate.notes.push("ε is unbounded: no statement constrains it".into());
            let fin = Finish { target: target.clone(), objective: None, eps: 0.0, certificate, free_diagonal: free, t };
            fin.run(f, &built, &r.values)
        }
        other => Err(CoreError::Internal(format!("LP ended with status {other:?}"))),
    }
}

/// Discriminating: maximize the shared slack.
pub fn most_discriminating(sys: &ConstraintSystem, t: &Thresholds) -> Result<SelectionResult> {
    precheck(sys, t)?;
    let mut f = Formulation::new(sys);
    solve_max_eps(&mut f, &TargetSpec::MostDiscriminating, t, vec![])
}

/// Sparse: fewest nonzero weights, diagonals included, at ε >= ε_min.
pub fn sparsest(sys: &ConstraintSystem, t: &Thresholds) -> Result<SelectionResult> {
    precheck(sys, t)?;
    let n = sys.n;
    let mut f = Formulation::new(sys);
    f.eps = EpsMode::AtLeast(t.eps_min);
    f.sense = Sense::Minimize;
    let built = f.build();
    let mut p = built.program.clone();
    let m = t.big_m(n).min(1.0);
    let mut obj = LinExpr::new();
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let w = built.w[k];
            let g = p.add_binary(format!("gamma_{}_{}", i + 1, j + 1));
            if f.lower[k] > 0.0 {
                p.vars[g.0].lower = 1.0;
            }
            if f.upper[k] <= 0.0 {
                p.vars[g.0].upper = 0.0;
            }
            p.add_constraint(format!("on_{}_{}", i + 1, j + 1), LinExpr::var(w).term(g, -sys.eps_prime), Cmp::Ge, 0.0);
            p.add_constraint(format!("cap_{}_{}", i + 1, j + 1), LinExpr::var(w).term(g, -m), Cmp::Le, 0.0);
            obj.add(g, 1.0);
        }
    }
    p.set_objective(Objective::Linear(obj));
    let r = solve_milp(&p).map_err(|source| CoreError::Solver { source, dump: empnet_solver::dump_lp(&p) })?;
    let target = TargetSpec::Sparse;
    match r.status {
        SolveStatus::Optimal | SolveStatus::IterationLimit if !r.values.is_empty() => {
            let mut certificate = Certificate::from(&r);
            if r.status == SolveStatus::IterationLimit {
                certificate.notes.push(format!("node limit reached; bound {:?}", r.meta.bound));
            }
            let eps = r.values[built.eps.0];
            let fin = Finish { target, objective: Some(r.objective.round()), eps, certificate, free_diagonal: vec![], t };
            fin.run(&f, &built, &r.values)
        }
        SolveStatus::Infeasible => Err(infeasible(&target, "no compatible network at ε = ε_min")),
        other => Err(CoreError::Internal(format!("sparsity program ended with status {other:?}"))),
    }
}

fn entropy_objective(n: usize, built: &crate::constraints::Built) -> Objective {
    let args = (0..n)
        .map(|j| {
            let mut e = LinExpr::new();
            for i in 0..n {
                e.add(built.w[i * n + j], 1.0);
            }
            e
        })
        .collect();
    Objective::Entropy(EntropyObjective { args, scale: n as f64 })
}

fn entropy_program(f: &Formulation, sense: Sense) -> (MathProgram, crate::constraints::Built) {
    let built = f.build();
    let mut p = built.program.clone();
    p.sense = sense;
    p.set_objective(entropy_objective(f.sys.n, &built));
    (p, built)
}

fn solver_err(p: &MathProgram) -> impl FnOnce(empnet_solver::SolverError) -> CoreError + '_ {
    move |source| CoreError::Solver { source, dump: empnet_solver::dump_lp(p) }
}

/// Central: minimum centrality entropy by multistart local descent.
pub fn central(sys: &ConstraintSystem, t: &Thresholds, starts: Option<usize>, seed: u64) -> Result<SelectionResult> {
    precheck(sys, t)?;
    let n = sys.n;
    let mut f = Formulation::new(sys);
    f.eps = EpsMode::Fixed(t.eps_min);
    let (p, built) = entropy_program(&f, Sense::Minimize);
    let starts = starts.unwrap_or(DEFAULT_STARTS);
    let r = minimize_entropy(&p, starts, seed).map_err(solver_err(&p))?;
    let target = TargetSpec::Central { starts: Some(starts), seed: Some(seed) };
    if !r.status.has_point() {
        return Err(infeasible(&target, "no compatible network at ε = ε_min"));
    }
    let fin = Finish {
        target,
        objective: Some(r.objective),
        eps: t.eps_min,
        certificate: Certificate::from(&r),
        free_diagonal: vec![],
        t,
    };
    let mut out = fin.run(&f, &built, &r.values)?;
    if !out.diagnostics.is_central {
        let reach = max_centralities(&f)?;
        let note = if reach.iter().all(|&w| w < n as f64 / 2.0) {
            "no central network compatible with the statements"
        } else {
            "a central network is compatible but no start reached it"
        };
        out.certificate.notes.push(note.into());
    }
    Ok(out)
}

/// Largest attainable `ω_j` for each node under `f`.
fn max_centralities(f: &Formulation) -> Result<Vec<f64>> {
    let n = f.sys.n;
    (0..n)
        .map(|j| {
            let built = f.build();
            let mut p = built.program;
            let mut e = LinExpr::new();
            for i in 0..n {
                e.add(built.w[i * n + j], 1.0);
            }
            p.sense = Sense::Maximize;
            p.set_objective(Objective::Linear(e));
            let r = run_lp(&p)?;
            Ok(if r.status == SolveStatus::Optimal { r.objective } else { 0.0 })
        })
        .collect()
}

fn max_entropy(f: &Formulation, target: TargetSpec, t: &Thresholds, eps: f64) -> Result<SelectionResult> {
    let (p, built) = entropy_program(f, Sense::Maximize);
    let r = maximize_entropy(&p).map_err(solver_err(&p))?;
    if !r.status.has_point() {
        return Err(infeasible(&target, "no compatible network with this structure"));
    }
    let fin = Finish { target, objective: Some(r.objective), eps, certificate: Certificate::from(&r), free_diagonal: vec![], t };
    fin.run(f, &built, &r.values)
}

/// Distributed: maximum centrality entropy.
pub fn distributed(sys: &ConstraintSystem, t: &Thresholds) -> Result<SelectionResult> {
    precheck(sys, t)?;
    let mut f = Formulation::new(sys);
    f.eps = EpsMode::Fixed(t.eps_min);
    max_entropy(&f, TargetSpec::Distributed, t, t.eps_min)
}

/// Resilient (local): maximum entropy with every arc at least ε'.
pub fn resilient_local(sys: &ConstraintSystem, t: &Thresholds) -> Result<SelectionResult> {
    precheck(sys, t)?;
    let target = TargetSpec::ResilientLocal;
    let zeros: Vec<String> = sys
        .statements
        .iter()
        .filter(|s| matches!(s.payload, StatementPayload::ZeroWeight { .. }))
        .map(|s| s.id.clone())
        .collect();
    if !zeros.is_empty() {
        return Err(CoreError::TargetConflict { target: target.name().into(), statements: zeros });
    }
    let n = sys.n;
    let mut f = Formulation::new(sys);
    f.eps = EpsMode::Fixed(t.eps_min);
    for i in 0..n {
        for j in 0..n {
            f.bound(i, j, sys.eps_prime, f64::INFINITY);
        }
    }
    max_entropy(&f, target, t, t.eps_min)
}

fn cycle_arc(k: usize, n: usize, dir: Direction) -> (usize, usize) {
    match dir {
        Direction::Forward => (k, (k + 1) % n),
        Direction::Reverse => ((k + 1) % n, k),
    }
}

/// Models 10 and 11: maximum slack with a directed Hamiltonian cycle of
/// arcs and diagonals pinned at ε'; among the optimal networks the most
/// even centralities are then chosen. Returns the global matrix as well.
pub fn resilient_global(sys: &ConstraintSystem, t: &Thresholds, direction: Direction) -> Result<SelectionResult> {
    precheck(sys, t)?;
    let n = sys.n;
    let target = TargetSpec::ResilientGlobal { direction };
    let mut f = Formulation::new(sys);
    for j in 0..n {
        f.bound(j, j, sys.eps_prime, sys.eps_prime);
    }
    for k in 0..n {
        let (i, j) = cycle_arc(k, n, direction);
        if i != j {
            f.bound(i, j, sys.eps_prime, f64::INFINITY);
        }
    }
    let stage1 = solve_max_eps(&mut f, &target, t, vec![])?;
    let eps = stage1.objective.map_or(0.0, |e| e - 1e-9);
    f.eps = EpsMode::Fixed(eps);
    let mut out = match max_entropy(&f, target.clone(), t, eps) {
        Ok(mut r) => {
            r.objective = stage1.objective;
            r.certificate.notes.push("centrality entropy maximized among slack-optimal networks".into());
            r
        }
        Err(CoreError::Infeasible(_)) => stage1,
        Err(e) => return Err(e),
    };
    let g = global_weight_matrix(&out.network)?;
    if g.rows().iter().flatten().any(|&v| v <= 0.0) {
        out.certificate.notes.push("global matrix has non-positive entries".into());
    }
    out.global_diagnostics = Some(classify_network(&g, t));
    out.global = Some(g);
    Ok(out)
}

/// Zeroes every off-diagonal weight not in `arcs` and floors the arcs at ε'.
fn pattern(f: &mut Formulation, arcs: &[(usize, usize)]) {
    let n = f.sys.n;
    let eps_prime = f.sys.eps_prime;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                if arcs.contains(&(i, j)) {
                    f.bound(i, j, eps_prime, f64::INFINITY);
                } else {
                    f.bound(i, j, 0.0, 0.0);
                }
            }
        }
    }
}

fn star_at(sys: &ConstraintSystem, t: &Thresholds, center: usize) -> Result<SelectionResult> {
    let n = sys.n;
    let arcs: Vec<(usize, usize)> = (0..n).filter(|&i| i != center).map(|i| (i, center)).collect();
    let mut f = Formulation::new(sys);
    pattern(&mut f, &arcs);
    let mut r = solve_max_eps(&mut f, &TargetSpec::Star { center: Some(center) }, t, vec![])?;
    r.certificate.center = Some(center);
    Ok(r)
}

/// Star: every node points only at `center`. Without a center, all
/// nodes are tried and the largest slack wins, ties to the lowest index.
pub fn star(sys: &ConstraintSystem, t: &Thresholds, center: Option<usize>) -> Result<SelectionResult> {
    precheck(sys, t)?;
    if let Some(c) = center {
        if c >= sys.n {
            return Err(CoreError::invalid("center", format!("node {} out of range 1..={}", c + 1, sys.n)));
        }
        return star_at(sys, t, c);
    }
    let mut best: Option<SelectionResult> = None;
    let mut skipped = Vec::new();
    for c in 0..sys.n {
        match star_at(sys, t, c) {
            Ok(r) => {
                let score = r.objective.unwrap_or(f64::INFINITY);
                if best.as_ref().is_none_or(|b| score > b.objective.unwrap_or(f64::INFINITY)) {
                    best = Some(r);
                }
            }
            Err(CoreError::Infeasible(_)) => skipped.push(c + 1),
            Err(e) => return Err(e),
        }
    }
    let mut r = best.ok_or_else(|| infeasible(&TargetSpec::Star { center: None }, "no feasible center"))?;
    r.target = TargetSpec::Star { center: None };
    if !skipped.is_empty() {
        r.certificate.notes.push(format!("infeasible centers: {skipped:?}"));
    }
    Ok(r)
}

/// Bus: a single directed chain `1 → 2 → … → n` or its reverse.
pub fn bus(sys: &ConstraintSystem, t: &Thresholds, direction: Direction) -> Result<SelectionResult> {
    precheck(sys, t)?;
    let n = sys.n;
    let arcs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|k| cycle_arc(k, n, direction)).collect();
    let mut f = Formulation::new(sys);
    pattern(&mut f, &arcs);
    solve_max_eps(&mut f, &TargetSpec::Bus { direction }, t, vec![])
}

/// Tree: each internal node spreads all its weight over its children;
/// leaves keep full diagonal mass. Internal diagonals are released from
/// the ε' floor, which mass conservation would otherwise contradict.
pub fn tree(sys: &ConstraintSystem, t: &Thresholds, spec: &TreeSpec) -> Result<SelectionResult> {
    precheck(sys, t)?;
    let n = sys.n;
    let (_, children) = spec.validate(n)?;
    let arcs: Vec<(usize, usize)> = spec.edges.iter().map(|e| (e.parent, e.child)).collect();
    let mut f = Formulation::new(sys);
    pattern(&mut f, &arcs);
    let internal: Vec<bool> = children.iter().map(|c| !c.is_empty()).collect();
    for (p, &is_internal) in internal.iter().enumerate() {
        if is_internal {
            f.bound(p, p, 0.0, 0.0);
        }
    }
    let mut r = solve_max_eps(&mut f, &TargetSpec::Tree { tree: spec.clone() }, t, internal.clone())?;
    let lifted: Vec<usize> = (0..n).filter(|&p| internal[p]).map(|p| p + 1).collect();
    r.certificate.notes.push(format!("diagonal floor lifted for internal nodes {lifted:?}"));
    Ok(r)
}

/// Dispatches on the target kind. `seed` feeds the multistart search.
pub fn select(sys: &ConstraintSystem, target: &TargetSpec, t: &Thresholds, seed: u64) -> Result<SelectionResult> {
    match target {
        TargetSpec::MostDiscriminating => most_discriminating(sys, t),
        TargetSpec::Sparse => sparsest(sys, t),
        TargetSpec::Central { starts, seed: s } => central(sys, t, *starts, s.unwrap_or(seed)),
        TargetSpec::Distributed => distributed(sys, t),
        TargetSpec::ResilientLocal => resilient_local(sys, t),
        TargetSpec::ResilientGlobal { direction } => resilient_global(sys, t, *direction),
        TargetSpec::Star { center } => star(sys, t, *center),
        TargetSpec::Bus { direction } => bus(sys, t, *direction),
        TargetSpec::Tree { tree: spec } => tree(sys, t, spec),
    }
}
