//! Interactive session state, its event log, and the workflow operations
//! that move it forward.

pub mod canonical;
pub mod store;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use store::{SessionDir, SessionLock, SessionStore, SessionSummary, StoreError};

use crate::constraints::{assemble, ConstraintSystem, EmpathicStatement, EpsStar};
use crate::error::{CoreError, Result};
use crate::inconsistency::{apply_resolution, enumerate_sets, InconsistencyReport};
use crate::index::one_based;
use crate::judgment::{
    complete, intrinsic_matrix, judgment_inconsistency, validate, CompletionResult, CompletionStatus,
    FuzzyJudgmentMatrix, IntrinsicStatement, JudgmentRepair,
};
use crate::network::{Thresholds, UtilityKind, UtilityMatrix};
use crate::relations::{relation_matrix, RelationMatrix};
use crate::selection::{select, SelectionResult, TargetSpec};
use crate::welfare::{compare_networks, NetworkInput, Propagation, WelfareReport};

/// Default cap on enumerated repair sets.
pub const DEFAULT_REPAIR_LIMIT: usize = 16;

/// Largest panel accepted; the programs grow with `n²`.
pub const MAX_EXPERTS: usize = 200;
pub const MAX_ALTERNATIVES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    IntrinsicElicitation,
    EmpathicElicitation,
    Resolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub experts: Vec<String>,
    #[serde(default)]
    pub alternatives: Vec<String>,
}

impl Panel {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(CoreError::invalid("panel.n", "need at least two experts"));
        }
        if self.m < 2 {
            return Err(CoreError::invalid("panel.m", "need at least two alternatives"));
        }
        if self.n > MAX_EXPERTS {
            return Err(CoreError::invalid("panel.n", format!("at most {MAX_EXPERTS} experts")));
        }
        if self.m > MAX_ALTERNATIVES {
            return Err(CoreError::invalid("panel.m", format!("at most {MAX_ALTERNATIVES} alternatives")));
        }
        if !self.experts.is_empty() && self.experts.len() != self.n {
            return Err(CoreError::invalid("panel.experts", format!("expected {} labels", self.n)));
        }
        if !self.alternatives.is_empty() && self.alternatives.len() != self.m {
            return Err(CoreError::invalid("panel.alternatives", format!("expected {} labels", self.m)));
        }
        Ok(())
    }
}

/// Per-expert outcome of judgment completion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpertCompletion {
    #[serde(with = "one_based")]
    pub dm: usize,
    pub result: CompletionResult,
    /// Repair sets, as positions in the session's intrinsic statement list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<JudgmentRepair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub panel: Panel,
    pub phase: Phase,
    pub thresholds: Thresholds,
    /// Indexed by expert; `None` until supplied.
    pub judgments: Vec<Option<FuzzyJudgmentMatrix>>,
    pub intrinsic_statements: Vec<IntrinsicStatement>,
    pub completions: Vec<ExpertCompletion>,
    pub intrinsic: Option<UtilityMatrix>,
    pub statements: Vec<EmpathicStatement>,
    pub feasibility: Option<EpsStar>,
    pub inconsistencies: Option<InconsistencyReport>,
    /// Statement ids removed by each applied resolution, in order.
    pub resolutions: Vec<Vec<String>>,
    pub relations: Option<RelationMatrix>,
    /// Latest result per target name.
    pub selections: BTreeMap<String, SelectionResult>,
    pub welfare: Option<WelfareReport>,
    pub events: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Created { id: String, panel: Panel, thresholds: Thresholds },
    ThresholdsSet { thresholds: Thresholds },
    JudgmentsSet { #[serde(with = "one_based")] dm: usize, matrix: FuzzyJudgmentMatrix },
    IntrinsicStatementsAdded { statements: Vec<IntrinsicStatement> },
    IntrinsicStatementsRemoved { positions: Vec<usize> },
    CompletionRecorded { completions: Vec<ExpertCompletion>, intrinsic: Option<UtilityMatrix> },
    IntrinsicSet { utilities: UtilityMatrix },
    StatementsAdded { statements: Vec<EmpathicStatement> },
    FeasibilityChecked { eps_star: EpsStar, report: Option<InconsistencyReport> },
    ResolutionApplied { removed: Vec<String>, eps_star: EpsStar, report: Option<InconsistencyReport> },
    RelationsComputed { relations: RelationMatrix },
    NetworkSelected { result: SelectionResult },
    WelfareComputed { report: WelfareReport },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub at: String,
    pub event: Event,
}

impl SessionState {
    fn new(id: String, panel: Panel, thresholds: Thresholds) -> Self {
        Self {
            id,
            judgments: vec![None; panel.n],
            panel,
            phase: Phase::IntrinsicElicitation,
            thresholds,
            intrinsic_statements: Vec::new(),
            completions: Vec::new(),
            intrinsic: None,
            statements: Vec::new(),
            feasibility: None,
            inconsistencies: None,
            resolutions: Vec::new(),
            relations: None,
            selections: BTreeMap::new(),
            welfare: None,
            events: 0,
        }
    }

    fn invalidate_analysis(&mut self) {
        self.feasibility = None;
        self.inconsistencies = None;
        self.relations = None;
        self.selections.clear();
        self.welfare = None;
    }

    fn record_feasibility(&mut self, eps_star: EpsStar, report: Option<InconsistencyReport>) {
        self.feasibility = Some(eps_star);
        self.inconsistencies = report;
        if eps_star.is_positive() {
            self.phase = Phase::Resolved;
        }
    }

    /// Applies an already validated event.
    fn apply(&mut self, e: &Event) {
        match e {
            Event::Created { .. } => {}
            Event::ThresholdsSet { thresholds } => {
                self.thresholds = thresholds.clone();
                self.relations = None;
                self.selections.clear();
                self.welfare = None;
            }
            Event::JudgmentsSet { dm, matrix } => {
                self.judgments[*dm] = Some(matrix.clone());
                self.completions.clear();
            }
            Event::IntrinsicStatementsAdded { statements } => {
                self.intrinsic_statements.extend(statements.iter().cloned());
                self.completions.clear();
            }
            Event::IntrinsicStatementsRemoved { positions } => {
                let mut k = 0;
                self.intrinsic_statements.retain(|_| {
                    k += 1;
                    !positions.contains(&(k - 1))
                });
                self.completions.clear();
            }
            Event::CompletionRecorded { completions, intrinsic } => {
                self.completions = completions.clone();
                if let Some(u) = intrinsic {
                    self.intrinsic = Some(u.clone());
                    self.phase = Phase::EmpathicElicitation;
                }
            }
            Event::IntrinsicSet { utilities } => {
                self.intrinsic = Some(utilities.clone());
                self.phase = Phase::EmpathicElicitation;
            }
            Event::StatementsAdded { statements } => {
                self.statements.extend(statements.iter().cloned());
                self.invalidate_analysis();
            }
            Event::FeasibilityChecked { eps_star, report } => self.record_feasibility(*eps_star, report.clone()),
            Event::ResolutionApplied { removed, eps_star, report } => {
                self.statements.retain(|s| !removed.contains(&s.id));
                self.resolutions.push(removed.clone());
                self.invalidate_analysis();
                self.record_feasibility(*eps_star, report.clone());
            }
            Event::RelationsComputed { relations } => self.relations = Some(relations.clone()),
            Event::NetworkSelected { result } => {
                self.selections.insert(result.target.name().to_string(), result.clone());
            }
            Event::WelfareComputed { report } => self.welfare = Some(report.clone()),
        }
        self.events += 1;
    }

    /// Structural checks for a state read from disk.
    pub fn check_shape(&self) -> std::result::Result<(), String> {
        self.panel.validate().map_err(|e| e.to_string())?;
        if self.judgments.len() != self.panel.n {
            return Err(format!("{} judgment slots for {} experts", self.judgments.len(), self.panel.n));
        }
        if let Some(u) = &self.intrinsic {
            if u.n() != self.panel.n || u.m() != self.panel.m {
                return Err("intrinsic utilities do not match the panel".into());
            }
        }
        Ok(())
    }

    /// Rebuilds a state from its full event log.
    pub fn replay(events: &[EventRecord]) -> std::result::Result<Self, String> {
        let Some(first) = events.first() else {
            return Err("event log is empty".into());
        };
        let Event::Created { id, panel, thresholds } = &first.event else {
            return Err("event log does not start with creation".into());
        };
        panel.validate().map_err(|e| e.to_string())?;
        let mut state = Self::new(id.clone(), panel.clone(), thresholds.clone());
        for (k, rec) in events.iter().enumerate() {
            if rec.seq != k as u64 + 1 {
                return Err(format!("event {} has sequence number {}", k + 1, rec.seq));
            }
            if k > 0 && matches!(rec.event, Event::Created { .. }) {
                return Err(format!("event {} recreates the session", k + 1));
            }
            if let Event::JudgmentsSet { dm, .. } = rec.event {
                if dm >= state.panel.n {
                    return Err(format!("event {} names expert {} of {}", k + 1, dm + 1, state.panel.n));
                }
            }
            state.apply(&rec.event);
        }
        Ok(state)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionOutcome {
    pub completions: Vec<ExpertCompletion>,
    pub intrinsic: Option<UtilityMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub eps_star: EpsStar,
    pub consistent: bool,
    pub report: Option<InconsistencyReport>,
}

/// A session in memory plus events not yet persisted.
#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub state: SessionState,
    pending: Vec<EventRecord>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Session {
    pub fn new(id: impl Into<String>, panel: Panel, thresholds: Thresholds) -> Result<Self> {
        panel.validate()?;
        thresholds.validate(panel.n)?;
        let id = id.into();
        let state = SessionState::new(id.clone(), panel.clone(), thresholds.clone());
        let mut s = Self { state, pending: Vec::new() };
        s.commit(Event::Created { id, panel, thresholds })?;
        Ok(s)
    }

    pub fn from_state(state: SessionState) -> Self {
        Self { state, pending: Vec::new() }
    }

    pub fn take_pending(&mut self) -> Vec<EventRecord> {
        std::mem::take(&mut self.pending)
    }

    pub fn pending(&self) -> &[EventRecord] {
        &self.pending
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.state.id.clone(),
            phase: self.state.phase,
            n: self.state.panel.n,
            m: self.state.panel.m,
            events: self.state.events,
        }
    }

    /// Canonicalizes the event, applies it and queues it for the log, so
    /// replaying the log reproduces the state exactly.
    fn commit(&mut self, event: Event) -> Result<()> {
        let event = canonical::normalize(&event).map_err(|e| CoreError::Internal(format!("event encoding: {e}")))?;
        self.state.apply(&event);
        self.pending.push(EventRecord { seq: self.state.events, at: now(), event });
        Ok(())
    }

    fn require(&self, phase: Phase, what: &str) -> Result<()> {
        if self.state.phase != phase {
            return Err(CoreError::Phase(format!("{what} needs phase {phase:?}; session is in {:?}", self.state.phase)));
        }
        Ok(())
    }

    fn require_resolved(&self, what: &str) -> Result<()> {
        if self.state.phase != Phase::Resolved {
            let hint = match self.state.feasibility {
                Some(e) if !e.is_positive() => "; the statements are inconsistent, see the inconsistency report",
                _ => "; run the feasibility check first",
            };
            return Err(CoreError::Phase(format!("{what} needs a consistent statement system{hint}")));
        }
        Ok(())
    }

    pub fn set_thresholds(&mut self, t: Thresholds) -> Result<()> {
        t.validate(self.state.panel.n)?;
        if t == self.state.thresholds {
            return Ok(());
        }
        if self.state.phase == Phase::Resolved && t.eps_prime != self.state.thresholds.eps_prime {
            return Err(CoreError::Phase("ε' is fixed once the statement system is resolved".into()));
        }
        self.commit(Event::ThresholdsSet { thresholds: t })
    }

    pub fn set_judgments(&mut self, dm: usize, matrix: FuzzyJudgmentMatrix) -> Result<()> {
        self.require(Phase::IntrinsicElicitation, "entering judgments")?;
        if dm >= self.state.panel.n {
            return Err(CoreError::invalid("dm", format!("expert {} out of range 1..={}", dm + 1, self.state.panel.n)));
        }
        if matrix.m() != self.state.panel.m {
            return Err(CoreError::invalid("matrix.m", format!("expected {} alternatives", self.state.panel.m)));
        }
        if let Some(v) = validate(&matrix).first() {
            return Err(CoreError::invalid(format!("matrix[{}][{}]", v.s + 1, v.t + 1), format!("{:?} violation", v.kind)));
        }
        self.commit(Event::JudgmentsSet { dm, matrix })
    }

    pub fn add_intrinsic_statements(&mut self, statements: Vec<IntrinsicStatement>) -> Result<()> {
        self.require(Phase::IntrinsicElicitation, "adding intrinsic statements")?;
        let (n, m) = (self.state.panel.n, self.state.panel.m);
        for (k, st) in statements.iter().enumerate() {
            if st.dm >= n {
                return Err(CoreError::invalid(format!("statements[{}].dm", k + 1), format!("expert out of range 1..={n}")));
            }
            let idx = match st.kind {
                crate::judgment::IntrinsicKind::Preference { better, worse } => vec![better, worse],
                crate::judgment::IntrinsicKind::Intensity { first, second } => vec![first.0, first.1, second.0, second.1],
            };
            if idx.iter().any(|&a| a >= m) {
                return Err(CoreError::invalid(format!("statements[{}]", k + 1), format!("alternative out of range 1..={m}")));
            }
        }
        self.commit(Event::IntrinsicStatementsAdded { statements })
    }

    /// Drops intrinsic statements by zero-based position.
    pub fn remove_intrinsic_statements(&mut self, mut positions: Vec<usize>) -> Result<()> {
        self.require(Phase::IntrinsicElicitation, "removing intrinsic statements")?;
        positions.sort_unstable();
        positions.dedup();
        if let Some(&p) = positions.iter().find(|&&p| p >= self.state.intrinsic_statements.len()) {
            return Err(CoreError::invalid("positions", format!("no intrinsic statement {}", p + 1)));
        }
        self.commit(Event::IntrinsicStatementsRemoved { positions })
    }

    /// Completes every expert's judgments; when all succeed the intrinsic
    /// utilities are derived and the session moves to empathic elicitation.
    pub fn complete_judgments(&mut self) -> Result<CompletionOutcome> {
        self.require(Phase::IntrinsicElicitation, "judgment completion")?;
        let t = &self.state.thresholds;
        let mut completions = Vec::new();
        for (dm, r) in self.state.judgments.iter().enumerate() {
            let r = r.as_ref().ok_or_else(|| CoreError::Precondition(format!("expert d{} has no judgments", dm + 1)))?;
            let positions: Vec<usize> =
                (0..self.state.intrinsic_statements.len()).filter(|&k| self.state.intrinsic_statements[k].dm == dm).collect();
            let stmts: Vec<IntrinsicStatement> = positions.iter().map(|&k| self.state.intrinsic_statements[k].clone()).collect();
            let result = complete(r, &stmts)?;
            let repair = if result.status == CompletionStatus::Inconsistent {
                let big_m = t.big_m(r.m());
                Some(match judgment_inconsistency(r, &stmts, t.eps_min, big_m, DEFAULT_REPAIR_LIMIT)? {
                    JudgmentRepair::Sets { sets, exhausted } => JudgmentRepair::Sets {
                        sets: sets.into_iter().map(|s| s.into_iter().map(|k| positions[k]).collect()).collect(),
                        exhausted,
                    },
                    other => other,
                })
            } else {
                None
            };
            completions.push(ExpertCompletion { dm, result, repair });
        }
        let intrinsic = if completions.iter().all(|c| c.result.status == CompletionStatus::Completed) {
            let matrices: Vec<FuzzyJudgmentMatrix> =
                completions.iter().map(|c| c.result.completed.clone().expect("completed matrix")).collect();
            Some(intrinsic_matrix(&matrices)?)
        } else {
            None
        };
        self.commit(Event::CompletionRecorded { completions, intrinsic })?;
        Ok(CompletionOutcome { completions: self.state.completions.clone(), intrinsic: self.state.intrinsic.clone() })
    }

    /// Loads intrinsic utilities directly, skipping completion.
    pub fn set_intrinsic(&mut self, utilities: UtilityMatrix) -> Result<()> {
        self.require(Phase::IntrinsicElicitation, "setting intrinsic utilities")?;
        if utilities.kind() != UtilityKind::Intrinsic {
            return Err(CoreError::invalid("utilities.kind", "expected intrinsic utilities"));
        }
        if utilities.n() != self.state.panel.n || utilities.m() != self.state.panel.m {
            return Err(CoreError::invalid("utilities", format!("expected {}x{}", self.state.panel.n, self.state.panel.m)));
        }
        self.commit(Event::IntrinsicSet { utilities })
    }

    pub fn intrinsic(&self) -> Result<&UtilityMatrix> {
        self.state.intrinsic.as_ref().ok_or_else(|| CoreError::Phase("intrinsic utilities are not available yet".into()))
    }

    pub fn system(&self) -> Result<ConstraintSystem> {
        assemble(self.intrinsic()?, &self.state.statements, &self.state.thresholds)
    }

    pub fn add_statements(&mut self, statements: Vec<EmpathicStatement>) -> Result<()> {
        self.require(Phase::EmpathicElicitation, "adding empathic statements")?;
        let mut all = self.state.statements.clone();
        let offset = all.len();
        all.extend(statements.iter().cloned());
        assemble(self.intrinsic()?, &all, &self.state.thresholds).map_err(|e| match e {
            CoreError::Invalid { field, reason } => {
                let field = renumber(&field, offset);
                CoreError::Invalid { field, reason }
            }
            other => other,
        })?;
        self.commit(Event::StatementsAdded { statements })
    }

    fn report_for(&self, sys: &ConstraintSystem, eps_star: EpsStar, limit: usize) -> Result<Option<InconsistencyReport>> {
        if eps_star.is_positive() {
            Ok(None)
        } else {
            enumerate_sets(sys, &self.state.thresholds, limit).map(Some)
        }
    }

    /// Feasibility of the statement system; reports repair sets when it fails.
    pub fn check(&mut self, limit: usize) -> Result<CheckOutcome> {
        if self.state.phase == Phase::IntrinsicElicitation {
            return Err(CoreError::Phase("intrinsic utilities are not available yet".into()));
        }
        let sys = self.system()?;
        let eps_star = sys.feasible()?;
        let report = self.report_for(&sys, eps_star, limit)?;
        if self.state.phase != Phase::Resolved || !eps_star.is_positive() {
            self.commit(Event::FeasibilityChecked { eps_star, report: report.clone() })?;
        }
        Ok(CheckOutcome { eps_star, consistent: eps_star.is_positive(), report })
    }

    /// Applies repair set `k` (zero-based) from the current report.
    pub fn resolve_set(&mut self, k: usize, limit: usize) -> Result<CheckOutcome> {
        let report = self
            .state
            .inconsistencies
            .as_ref()
            .ok_or_else(|| CoreError::Phase("no inconsistency report; run the feasibility check first".into()))?;
        let chosen = report
            .sets
            .get(k)
            .cloned()
            .ok_or_else(|| CoreError::invalid("set", format!("set {} out of range 1..={}", k + 1, report.sets.len())))?;
        self.resolve_statements(chosen, limit)
    }

    /// Removes the named statements and re-checks feasibility.
    pub fn resolve_statements(&mut self, chosen: Vec<String>, limit: usize) -> Result<CheckOutcome> {
        self.require(Phase::EmpathicElicitation, "resolving inconsistencies")?;
        let sys = self.system()?;
        let res = apply_resolution(&sys, &chosen)?;
        let eps_star = res.system.feasible()?;
        let report = self.report_for(&res.system, eps_star, limit)?;
        self.commit(Event::ResolutionApplied { removed: chosen, eps_star, report: report.clone() })?;
        Ok(CheckOutcome { eps_star, consistent: eps_star.is_positive(), report })
    }

    /// Relation matrix, reused while the system fingerprint is unchanged.
    pub fn relations(&mut self) -> Result<RelationMatrix> {
        self.require_resolved("relations")?;
        let sys = self.system()?;
        if let Some(r) = &self.state.relations {
            if r.fingerprint == sys.fingerprint() {
                return Ok(r.clone());
            }
        }
        let relations = relation_matrix(&sys)?;
        self.commit(Event::RelationsComputed { relations })?;
        Ok(self.state.relations.clone().expect("relations recorded"))
    }

    pub fn select(&mut self, target: &TargetSpec, seed: u64) -> Result<SelectionResult> {
        self.require_resolved("network selection")?;
        let sys = self.system()?;
        let result = select(&sys, target, &self.state.thresholds, seed)?;
        let name = result.target.name().to_string();
        self.commit(Event::NetworkSelected { result })?;
        Ok(self.state.selections[&name].clone())
    }

    /// Welfare for the given networks, or for every selected network when
    /// `networks` is `None` (global propagation for the resilient-global one).
    pub fn welfare(&mut self, networks: Option<Vec<NetworkInput>>) -> Result<WelfareReport> {
        let ui = self.intrinsic()?.clone();
        let inputs = match networks {
            Some(n) => n,
            None => self
                .state
                .selections
                .values()
                .map(|r| NetworkInput {
                    label: r.target.name().to_string(),
                    matrix: Some(r.network.clone()),
                    propagation: match r.target {
                        TargetSpec::ResilientGlobal { .. } => Propagation::Global,
                        _ => Propagation::Local,
                    },
                    utilities: None,
                })
                .collect(),
        };
        let report = compare_networks(&ui, &inputs)?;
        self.commit(Event::WelfareComputed { report })?;
        Ok(self.state.welfare.clone().expect("welfare recorded"))
    }
}

/// Shifts `statements[k]` in an error field by the number of statements
/// already in the session, so errors point into the submitted batch.
fn renumber(field: &str, offset: usize) -> String {
    let Some(rest) = field.strip_prefix("statements[") else {
        return field.to_string();
    };
    let Some((num, tail)) = rest.split_once(']') else {
        return field.to_string();
    };
    match num.parse::<usize>() {
        Ok(k) if k > offset => format!("statements[{}]{tail}", k - offset),
        _ => field.to_string(),
    }
}
