//! Problem files accepted by `init`.

use empnet_core::{
    EmpathicStatement, FuzzyJudgmentMatrix, IntrinsicStatement, Panel, Session, Thresholds, UtilityKind, UtilityMatrix,
};
use serde::Deserialize;

use crate::CliError;

/// Everything needed to start a session. Judgment rows use `null` for
/// missing entries; `intrinsic` rows may be printed at limited precision
/// and are rescaled to unit sums.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    #[serde(default)]
    pub id: Option<String>,
    pub panel: Panel,
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
    #[serde(default)]
    pub judgments: Vec<Option<Vec<Vec<Option<f64>>>>>,
    #[serde(default)]
    pub intrinsic_statements: Vec<IntrinsicStatement>,
    #[serde(default)]
    pub intrinsic: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub statements: Vec<EmpathicStatement>,
}

impl Problem {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse { what: "problem", source: e })
    }

    /// Builds the session, applying every section in workflow order.
    pub fn into_session(self, default_id: &str, overrides: impl FnOnce(Thresholds) -> Thresholds) -> Result<Session, CliError> {
        let id = self.id.unwrap_or_else(|| default_id.to_string());
        let thresholds = overrides(self.thresholds.unwrap_or_default());
        let mut s = Session::new(id, self.panel, thresholds)?;
        if self.judgments.len() > s.state.panel.n {
            return Err(empnet_core::CoreError::invalid("judgments", format!("at most {} matrices", s.state.panel.n)).into());
        }
        for (dm, rows) in self.judgments.into_iter().enumerate() {
            if let Some(rows) = rows {
                let matrix = FuzzyJudgmentMatrix::new(rows).map_err(|e| field_prefix(e, &format!("judgments[{}]", dm + 1)))?;
                s.set_judgments(dm, matrix).map_err(|e| field_prefix(e, &format!("judgments[{}]", dm + 1)))?;
            }
        }
        if !self.intrinsic_statements.is_empty() {
            s.add_intrinsic_statements(self.intrinsic_statements).map_err(|e| field_prefix(e, "intrinsic_statements"))?;
        }
        if let Some(rows) = self.intrinsic {
            let u = UtilityMatrix::from_printed(UtilityKind::Intrinsic, rows).map_err(|e| field_prefix(e, "intrinsic"))?;
            s.set_intrinsic(u)?;
        }
        if !self.statements.is_empty() {
            s.add_statements(self.statements)?;
        }
        Ok(s)
    }
}

/// Qualifies a field name with the section it came from.
fn field_prefix(e: empnet_core::CoreError, prefix: &str) -> CliError {
    match e {
        empnet_core::CoreError::Invalid { field, reason } if !field.starts_with(prefix) => {
            let field = if field.starts_with("statements[") {
                format!("{prefix}{}", &field["statements".len()..])
            } else {
                format!("{prefix}.{field}")
            };
            empnet_core::CoreError::Invalid { field, reason }.into()
        }
        other => other.into(),
    }
}
