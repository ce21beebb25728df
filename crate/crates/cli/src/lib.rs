//! `empnet` command-line front end. Each subcommand maps onto one session
//! operation; the session lives in a directory given by `--session`.
//!
//! Exit codes: 0 success, 1 infeasible or inconsistent (a report path is
//! printed), 2 usage or input errors, 3 internal failures.

pub mod args;
mod problem;
mod render;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use empnet_core::session::canonical;
use empnet_core::session::{SessionLock, StoreError};
use empnet_core::{
    CoreError, EmpathicStatement, IntrinsicStatement, NetworkInput, Session, SessionDir, TargetSpec, Thresholds,
    TreeSpec, UtilityKind, UtilityMatrix,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use args::{Cli, Command, DirectionArg, FormatArg, Global, TargetArg, WhatArg};
pub use problem::Problem;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot parse {what}: {source}")]
    Parse { what: &'static str, source: serde_json::Error },
    #[error("cannot read {path}: {source}")]
    Input { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    /// Infeasible or inconsistent; details were written to `report`.
    #[error("{message}")]
    Reported { message: String, report: PathBuf },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(e) => core_code(e),
            Self::Store(e) => store_code(e),
            Self::Parse { .. } | Self::Input { .. } | Self::Usage(_) => 2,
            Self::Output { .. } => 3,
            Self::Reported { .. } => 1,
        }
    }
}

fn core_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Invalid { .. } | CoreError::Dimension(_) | CoreError::Precondition(_) | CoreError::Phase(_) => 2,
        CoreError::Infeasible(_) | CoreError::Unbounded | CoreError::TargetConflict { .. } => 1,
        CoreError::NoConvergence { .. } | CoreError::Solver { .. } | CoreError::Internal(_) => 3,
        CoreError::Storage(s) => store_code(s),
    }
}

fn store_code(e: &StoreError) -> i32 {
    match e {
        StoreError::NotFound(_) | StoreError::Exists(_) | StoreError::Locked(_) => 2,
        StoreError::Io { .. } | StoreError::Corrupt { .. } | StoreError::Version { .. } => 3,
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                return 2;
            }
            let _ = out.write_all(text.as_bytes());
            return 0;
        }
    };
    let mut ctx = Ctx { dir: SessionDir::new(&cli.global.session), g: &cli.global, out };
    match ctx.execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Reported { report, .. } = &e {
                let _ = writeln!(err, "report: {}", report.display());
            }
            e.exit_code()
        }
    }
}

struct Ctx<'a> {
    g: &'a Global,
    dir: SessionDir,
    out: &'a mut dyn Write,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Input { path: path.to_path_buf(), source })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, what: &'static str) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Parse { what, source })
}

/// Pretty JSON with sorted keys and quantized floats.
pub fn stable_json<T: Serialize>(v: &T) -> String {
    let value = canonical::to_value(v).expect("results serialize");
    let mut s = serde_json::to_string_pretty(&value).expect("a JSON value always serializes");
    s.push('\n');
    s
}

fn apply_overrides(g: &Global, mut t: Thresholds) -> Thresholds {
    if let Some(v) = g.eps_prime {
        t.eps_prime = v;
    }
    if let Some(v) = g.delta {
        t.delta = v;
    }
    if let Some(v) = g.rho0 {
        t.rho0 = v;
    }
    if let Some(v) = g.big_m {
        t.big_m = Some(v);
    }
    t
}

fn target_spec(target: TargetArg, center: Option<usize>, direction: DirectionArg, tree: Option<TreeSpec>, starts: Option<usize>) -> Result<TargetSpec> {
    let direction = match direction {
        DirectionArg::Fwd => empnet_core::Direction::Forward,
        DirectionArg::Rev => empnet_core::Direction::Reverse,
    };
    Ok(match target {
        TargetArg::Discriminating => TargetSpec::MostDiscriminating,
        TargetArg::Sparse => TargetSpec::Sparse,
        TargetArg::Central => TargetSpec::Central { starts, seed: None },
        TargetArg::Distributed => TargetSpec::Distributed,
        TargetArg::ResilientLocal => TargetSpec::ResilientLocal,
        TargetArg::ResilientGlobal => TargetSpec::ResilientGlobal { direction },
        TargetArg::Star => {
            let center = match center {
                Some(0) => return Err(CliError::Usage("--center is 1-based".into())),
                c => c.map(|c| c - 1),
            };
            TargetSpec::Star { center }
        }
        TargetArg::Bus => TargetSpec::Bus { direction },
        TargetArg::Tree => TargetSpec::Tree {
            tree: tree.ok_or_else(|| CliError::Usage("--target tree needs --tree FILE".into()))?,
        },
    })
}

impl Ctx<'_> {
    fn execute(&mut self, cmd: &Command) -> Result<i32> {
        match cmd {
            Command::Init { problem } => self.init(problem),
            Command::Status => self.status(),
            Command::CompleteJudgments => self.complete(),
            Command::Intrinsic { file } => self.intrinsic(file.as_deref()),
            Command::IntrinsicStatements { file, drop } => self.intrinsic_statements(file.as_deref(), drop),
            Command::Statements { file } => self.statements(file),
            Command::Check { limit } => self.check(*limit),
            Command::Resolve { set, drop, limit } => self.resolve(*set, drop, *limit),
            Command::Relations => self.relations(),
            Command::Select { target, center, direction, tree, starts } => {
                let tree = tree.as_deref().map(|p| parse::<TreeSpec>(p, "tree")).transpose()?;
                let spec = target_spec(*target, *center, *direction, tree, *starts)?;
                self.select(&spec)
            }
            Command::Welfare { networks } => self.welfare(networks.as_deref()),
            Command::Export { format, what, target, output } => self.export(*format, *what, target.as_deref(), output.as_deref()),
        }
    }

    fn print(&mut self, text: &str) -> Result<()> {
        self.out.write_all(text.as_bytes()).map_err(|source| CliError::Output { path: "<stdout>".into(), source })
    }

    /// JSON under `--json`, otherwise the text rendering.
    fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) -> Result<()> {
        let s = if self.g.json { stable_json(value) } else { text() };
        self.print(&s)
    }

    /// Locks and loads the session, then applies threshold flags.
    fn open_mut(&self) -> Result<(Session, SessionLock)> {
        let lock = self.dir.lock()?;
        let mut s = self.dir.load()?;
        let t = apply_overrides(self.g, s.state.thresholds.clone());
        s.set_thresholds(t)?;
        Ok((s, lock))
    }

    fn load(&self) -> Result<Session> {
        Ok(self.dir.load()?)
    }

    fn export_file(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        Ok(self.dir.write_export(name, bytes)?)
    }

    /// Converts a "needs a consistent system" phase error on an
    /// inconsistent session into a reported failure.
    fn inconsistent_guard(&self, s: &Session, e: CoreError) -> CliError {
        let inconsistent = matches!(e, CoreError::Phase(_)) && s.state.feasibility.is_some_and(|f| !f.is_positive());
        if !inconsistent {
            return e.into();
        }
        let body = json!({ "eps_star": s.state.feasibility, "report": s.state.inconsistencies });
        match self.export_file("inconsistencies.json", stable_json(&body).as_bytes()) {
            Ok(report) => CliError::Reported { message: e.to_string(), report },
            Err(w) => w,
        }
    }

    fn init(&mut self, path: &Path) -> Result<i32> {
        let problem = Problem::parse(&read(path)?)?;
        let default_id = self.dir.root().file_name().and_then(|n| n.to_str()).unwrap_or("session").to_string();
        let mut s = problem.into_session(&default_id, |t| apply_overrides(self.g, t))?;
        let lock = self.dir.lock()?;
        self.dir.create(&mut s, &lock)?;
        let summary = s.summary();
        self.emit(&summary, || render::summary(&summary))?;
        Ok(0)
    }

    fn status(&mut self) -> Result<i32> {
        let s = self.load()?;
        let summary = s.summary();
        let st = &s.state;
        let body = json!({
            "summary": summary,
            "thresholds": st.thresholds,
            "intrinsic_statements": st.intrinsic_statements.len(),
            "statements": st.statements.len(),
            "feasibility": st.feasibility,
            "selections": st.selections.keys().collect::<Vec<_>>(),
        });
        self.emit(&body, || render::status(&s))?;
        Ok(0)
    }

    fn complete(&mut self) -> Result<i32> {
        let (mut s, lock) = self.open_mut()?;
        let outcome = s.complete_judgments();
        self.dir.save(&mut s, &lock)?;
        let outcome = outcome?;
        let mut exports = Vec::new();
        for c in &outcome.completions {
            if let (Some(done), Some(Some(orig))) = (&c.result.completed, s.state.judgments.get(c.dm)) {
                let name = format!("completion-d{}.csv", c.dm + 1);
                self.export_file(&name, empnet_core::judgment::completion_csv(orig, done).as_bytes())?;
                exports.push(name);
            }
        }
        let failed: Vec<_> = outcome.completions.iter().filter(|c| c.repair.is_some()).collect();
        let report = if failed.is_empty() {
            None
        } else {
            Some(self.export_file("judgment-repair.json", stable_json(&failed).as_bytes())?)
        };
        let body = json!({ "outcome": outcome, "exports": exports, "report": report });
        self.emit(&body, || render::completion(&outcome, &s.state.intrinsic_statements))?;
        match report {
            None => Ok(0),
            Some(report) => Err(CliError::Reported {
                message: format!("{} expert(s) gave contradictory intrinsic statements", failed.len()),
                report,
            }),
        }
    }

    fn intrinsic(&mut self, file: Option<&Path>) -> Result<i32> {
        let s = match file {
            None => self.load()?,
            Some(path) => {
                let rows: Vec<Vec<f64>> = parse(path, "intrinsic utilities")?;
                let u = UtilityMatrix::from_printed(UtilityKind::Intrinsic, rows)?;
                let (mut s, lock) = self.open_mut()?;
                let r = s.set_intrinsic(u);
                self.dir.save(&mut s, &lock)?;
                r?;
                s
            }
        };
        let u = s.intrinsic()?.clone();
        self.export_file("intrinsic.json", stable_json(&u).as_bytes())?;
        self.emit(&u, || render::matrix(u.rows()))?;
        Ok(0)
    }

    fn intrinsic_statements(&mut self, file: Option<&Path>, drop: &[usize]) -> Result<i32> {
        let (mut s, lock) = self.open_mut()?;
        let r = match file {
            Some(path) => {
                let stmts: Vec<IntrinsicStatement> = parse(path, "intrinsic statements")?;
                s.add_intrinsic_statements(stmts)
            }
            None => {
                if drop.contains(&0) {
                    return Err(CliError::Usage("--drop positions are 1-based".into()));
                }
                s.remove_intrinsic_statements(drop.iter().map(|p| p - 1).collect())
            }
        };
        self.dir.save(&mut s, &lock)?;
        r?;
        let list = s.state.intrinsic_statements.clone();
        self.emit(&list, || format!("{} intrinsic statement(s)\n", list.len()))?;
        Ok(0)
    }

    fn statements(&mut self, path: &Path) -> Result<i32> {
        let stmts: Vec<EmpathicStatement> = parse(path, "statements")?;
        let added = stmts.len();
        let (mut s, lock) = self.open_mut()?;
        let r = s.add_statements(stmts);
        self.dir.save(&mut s, &lock)?;
        r?;
        let total = s.state.statements.len();
        let body = json!({ "added": added, "total": total });
        self.emit(&body, || format!("added {added} statement(s); {total} in total\n"))?;
        Ok(0)
    }

    fn report_check(&mut self, outcome: empnet_core::session::CheckOutcome) -> Result<i32> {
        let report = if outcome.consistent {
            None
        } else {
            let body = json!({ "eps_star": outcome.eps_star, "report": outcome.report });
            Some(self.export_file("inconsistencies.json", stable_json(&body).as_bytes())?)
        };
        let body = json!({ "eps_star": outcome.eps_star, "consistent": outcome.consistent, "report": outcome.report, "report_path": report });
        self.emit(&body, || render::check(&outcome))?;
        match report {
            None => Ok(0),
            Some(report) => Err(CliError::Reported { message: "the statements are inconsistent".into(), report }),
        }
    }

    fn check(&mut self, limit: usize) -> Result<i32> {
        let (mut s, lock) = self.open_mut()?;
        let r = s.check(limit);
        self.dir.save(&mut s, &lock)?;
        self.report_check(r?)
    }

    fn resolve(&mut self, set: Option<usize>, drop: &[String], limit: usize) -> Result<i32> {
        let (mut s, lock) = self.open_mut()?;
        let r = match set {
            Some(0) => return Err(CliError::Usage("--set is 1-based".into())),
            Some(k) => s.resolve_set(k - 1, limit),
            None => s.resolve_statements(drop.to_vec(), limit),
        };
        self.dir.save(&mut s, &lock)?;
        self.report_check(r?)
    }

    fn relations(&mut self) -> Result<i32> {
        let (mut s, lock) = self.open_mut()?;
        let r = s.relations();
        self.dir.save(&mut s, &lock)?;
        let rm = r.map_err(|e| self.inconsistent_guard(&s, e))?;
        let csv = rm.to_csv();
        self.export_file("relations.csv", csv.as_bytes())?;
        let heat = rm.heatmap();
        self.export_file("relations.json", stable_json(&heat).as_bytes())?;
        self.emit(&heat, || csv.clone())?;
        Ok(0)
    }

    fn select(&mut self, spec: &TargetSpec) -> Result<i32> {
        let (mut s, lock) = self.open_mut()?;
        let r = s.select(spec, self.g.seed);
        self.dir.save(&mut s, &lock)?;
        let name = spec.name();
        let r = match r {
            Ok(r) => r,
            Err(e @ (CoreError::Infeasible(_) | CoreError::TargetConflict { .. } | CoreError::Unbounded)) => {
                let body = json!({ "target": spec, "error": e.to_string() });
                let report = self.export_file(&format!("infeasible-{name}.json"), stable_json(&body).as_bytes())?;
                return Err(CliError::Reported { message: e.to_string(), report });
            }
            Err(e) => return Err(self.inconsistent_guard(&s, e)),
        };
        let eps_prime = s.state.thresholds.eps_prime;
        let mut exports = vec![format!("network-{name}.json"), format!("network-{name}.dot"), format!("diagnostics-{name}.json")];
        self.export_file(&exports[0], stable_json(&r.network).as_bytes())?;
        self.export_file(&exports[1], empnet_core::export::to_dot(&r.network, eps_prime, name).as_bytes())?;
        let diag = json!({
            "target": r.target,
            "objective": r.objective,
            "eps": r.eps,
            "diagnostics": r.diagnostics,
            "global_diagnostics": r.global_diagnostics,
            "certificate": r.certificate,
        });
        self.export_file(&exports[2], stable_json(&diag).as_bytes())?;
        if let Some(g) = &r.global {
            exports.push(format!("network-{name}-global.json"));
            self.export_file(&exports[3], stable_json(g).as_bytes())?;
        }
        let body = json!({ "result": r, "exports": exports });
        self.emit(&body, || render::selection(&r, eps_prime, &exports))?;
        Ok(0)
    }

    fn welfare(&mut self, networks: Option<&Path>) -> Result<i32> {
        let inputs = networks.map(|p| parse::<Vec<NetworkInput>>(p, "networks")).transpose()?;
        let (mut s, lock) = self.open_mut()?;
        let r = s.welfare(inputs);
        self.dir.save(&mut s, &lock)?;
        let report = r?;
        let csv = report.to_csv();
        self.export_file("welfare.csv", csv.as_bytes())?;
        self.export_file("welfare.json", stable_json(&report).as_bytes())?;
        self.emit(&report, || csv.clone())?;
        Ok(0)
    }

    fn export(&mut self, format: FormatArg, what: Option<WhatArg>, target: Option<&str>, output: Option<&Path>) -> Result<i32> {
        let s = self.load()?;
        let what = what.unwrap_or(match format {
            FormatArg::Dot => WhatArg::Network,
            FormatArg::Csv => WhatArg::Relations,
            FormatArg::Json => WhatArg::Session,
        });
        let unsupported = || CliError::Usage(format!("{format:?} export of {what:?} is not supported").to_lowercase());
        let missing = |thing: &str| CliError::Core(CoreError::Precondition(format!("no {thing} computed yet")));
        let text = match what {
            WhatArg::Session => match format {
                FormatArg::Json => stable_json(&s.state),
                _ => return Err(unsupported()),
            },
            WhatArg::Network => {
                let sel = match target {
                    Some(t) => {
                        let key = if t == "discriminating" { "most-discriminating" } else { t };
                        s.state.selections.get(key).ok_or_else(|| missing(&format!("{t} network")))?
                    }
                    None => match s.state.selections.len() {
                        1 => s.state.selections.values().next().expect("one selection"),
                        0 => return Err(missing("network")),
                        _ => return Err(CliError::Usage("several networks are selected; pass --target".into())),
                    },
                };
                let name = sel.target.name();
                match format {
                    FormatArg::Dot => empnet_core::export::to_dot(&sel.network, s.state.thresholds.eps_prime, name),
                    FormatArg::Csv => empnet_core::export::matrix_csv(sel.network.rows()),
                    FormatArg::Json => stable_json(&json!({ "target": sel.target, "network": sel.network, "diagnostics": sel.diagnostics })),
                }
            }
            WhatArg::Relations => {
                let rm = s.state.relations.as_ref().ok_or_else(|| missing("relations"))?;
                match format {
                    FormatArg::Csv => rm.to_csv(),
                    FormatArg::Json => stable_json(&rm.heatmap()),
                    FormatArg::Dot => return Err(unsupported()),
                }
            }
            WhatArg::Welfare => {
                let w = s.state.welfare.as_ref().ok_or_else(|| missing("welfare"))?;
                match format {
                    FormatArg::Csv => w.to_csv(),
                    FormatArg::Json => stable_json(w),
                    FormatArg::Dot => return Err(unsupported()),
                }
            }
            WhatArg::Intrinsic => {
                let u = s.intrinsic()?;
                match format {
                    FormatArg::Csv => empnet_core::export::matrix_csv(u.rows()),
                    FormatArg::Json => stable_json(u),
                    FormatArg::Dot => return Err(unsupported()),
                }
            }
        };
        match output {
            Some(path) => fs::write(path, text).map_err(|source| CliError::Output { path: path.to_path_buf(), source })?,
            None => self.print(&text)?,
        }
        Ok(0)
    }
}
