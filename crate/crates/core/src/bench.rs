//! Experimental protocol: settings, batch runs, CSV reports and
//! shifted-geometric-mean summary tables.
//!
//! A [`ProblemInstance`] paired with a [`Setting`] prepares into a program
//! plus the symmetry machinery the setting calls for:
//!
//! * `no-sym`: the bare formulation.
//! * `orbitope`: orbitopal fixing for every declared matrix.
//! * `ineq`: static SHIs (for MKP together with the item orbitopes, whose
//!   symmetry the inequalities do not cover).
//! * `act`: orbitopal fixing plus the family's activation handler; for MKCS
//!   the handler comes in `act-consec` and `act-allpairs` variants.
//!
//! Batch runs emit one CSV row per (instance, setting) with the fixed
//! column order `instance,setting,status,objective,nodes,time_s,seed`.
//! Timed-out solves are recorded with the time set to the limit.
//! Summaries report, per time class `[a,b)` (instances whose solves all
//! finished in that band) and per setting, the number solved to optimality
//! and the shifted geometric mean time with a shift of one second;
//! instances where every setting hit the limit are excluded, as are
//! instances with error rows (counted in a footer).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::bnb::{self, Plugins, SolveStatus, SolverConfig};
use crate::instances::{build_mkcs, build_mkp, build_mucp};
use crate::model::{MixedBinaryProgram, Rat};
use crate::oracle::ColumnAction;
use crate::par;
use crate::subsym::{
    add_mkp_shis, add_mucp_shis, MkcsData, MkcsHandler, MkpData, MkpHandler, MkpShi, MucpData,
    PairMode,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    NoSym,
    Orbitope,
    Ineq,
    Act,
    ActConsec,
    ActAllPairs,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::NoSym => "no-sym",
            Setting::Orbitope => "orbitope",
            Setting::Ineq => "ineq",
            Setting::Act => "act",
            Setting::ActConsec => "act-consec",
            Setting::ActAllPairs => "act-allpairs",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Setting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no-sym" => Ok(Setting::NoSym),
            "orbitope" => Ok(Setting::Orbitope),
            "ineq" => Ok(Setting::Ineq),
            "act" => Ok(Setting::Act),
            "act-consec" => Ok(Setting::ActConsec),
            "act-allpairs" => Ok(Setting::ActAllPairs),
            other => Err(format!("unknown setting '{other}'")),
        }
    }
}

/// A benchmarkable instance of one of the three problem families.
pub enum ProblemInstance {
    Mkp { name: String, data: MkpData },
    Mucp { name: String, data: MucpData },
    Mkcs { name: String, data: MkcsData },
}

impl ProblemInstance {
    pub fn name(&self) -> &str {
        match self {
            ProblemInstance::Mkp { name, .. }
            | ProblemInstance::Mucp { name, .. }
            | ProblemInstance::Mkcs { name, .. } => name,
        }
    }

    /// Settings meaningful for this family.
    pub fn supported_settings(&self) -> Vec<Setting> {
        match self {
            ProblemInstance::Mkp { .. } | ProblemInstance::Mucp { .. } => vec![
                Setting::NoSym,
                Setting::Orbitope,
                Setting::Ineq,
                Setting::Act,
            ],
            ProblemInstance::Mkcs { .. } => vec![
                Setting::NoSym,
                Setting::Orbitope,
                Setting::ActConsec,
                Setting::ActAllPairs,
            ],
        }
    }

    /// Default wall-clock limit in seconds (longer for graph coloring).
    pub fn default_time_limit(&self) -> f64 {
        match self {
            ProblemInstance::Mkcs { .. } => 7200.0,
            _ => 3600.0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrepareError {
    #[error("setting '{setting}' is not defined for {family}")]
    InvalidSetting {
        family: &'static str,
        setting: &'static str,
    },
}

/// A program plus the symmetry plugins one setting calls for.
pub struct Prepared {
    pub program: MixedBinaryProgram,
    pub plugins: Plugins,
    /// Variable count of the base formulation (SHI auxiliaries follow).
    pub n_base_vars: usize,
    /// SHI blocks when the setting added them (MKP only).
    pub mkp_shis: Vec<MkpShi>,
}

/// Builds the program and plugins for one (instance, setting) pair.
pub fn prepare(instance: &ProblemInstance, setting: Setting) -> Result<Prepared, PrepareError> {
    let invalid = |family| {
        Err(PrepareError::InvalidSetting {
            family,
            setting: setting.as_str(),
        })
    };
    match instance {
        ProblemInstance::Mkp { name, data } => {
            let built = build_mkp(data, name);
            let n_base_vars = built.program.n_vars();
            let mut program = built.program;
            let mut plugins = Plugins::none();
            let mut mkp_shis = Vec::new();
            match setting {
                Setting::NoSym => {}
                Setting::Orbitope => {
                    plugins.global_matrices.push(built.knapsack_matrix);
                    plugins.global_matrices.extend(&built.item_matrices);
                }
                Setting::Ineq => {
                    mkp_shis = add_mkp_shis(&mut program, data, &built.y);
                    plugins.global_matrices.extend(&built.item_matrices);
                }
                Setting::Act => {
                    plugins.global_matrices.push(built.knapsack_matrix);
                    plugins.global_matrices.extend(&built.item_matrices);
                    plugins
                        .handlers
                        .push(Box::new(MkpHandler::new(data, built.knapsack_matrix)));
                }
                Setting::ActConsec | Setting::ActAllPairs => return invalid("mkp"),
            }
            Ok(Prepared {
                program,
                plugins,
                n_base_vars,
                mkp_shis,
            })
        }
        ProblemInstance::Mucp { name, data } => {
            let built = build_mucp(data, name);
            let n_base_vars = built.program.n_vars();
            let mut plugins = Plugins::none();
            match setting {
                Setting::NoSym | Setting::Ineq => {}
                Setting::Orbitope | Setting::Act => {
                    plugins
                        .global_matrices
                        .extend(built.type_matrices.iter().map(|(_, _, m)| *m));
                    if setting == Setting::Act {
                        for handler in built.handlers() {
                            plugins.handlers.push(Box::new(handler));
                        }
                    }
                }
                Setting::ActConsec | Setting::ActAllPairs => return invalid("mucp"),
            }
            let mut program = built.program;
            if setting == Setting::Ineq {
                add_mucp_shis(&mut program, data, &built.x, &built.u, true);
            }
            Ok(Prepared {
                program,
                plugins,
                n_base_vars,
                mkp_shis: Vec::new(),
            })
        }
        ProblemInstance::Mkcs { name, data } => {
            let built = build_mkcs(data, name);
            let n_base_vars = built.program.n_vars();
            let program = built.program;
            let mut plugins = Plugins::none();
            let mut add_handler = |mode| {
                plugins.global_matrices.push(built.color_matrix);
                plugins
                    .handlers
                    .push(Box::new(MkcsHandler::new(data, built.color_matrix, mode)));
            };
            match setting {
                Setting::NoSym => {}
                Setting::Orbitope => plugins.global_matrices.push(built.color_matrix),
                Setting::ActConsec => add_handler(PairMode::Consecutive),
                Setting::ActAllPairs => add_handler(PairMode::AllPairs),
                Setting::Ineq | Setting::Act => return invalid("mkcs"),
            }
            Ok(Prepared {
                program,
                plugins,
                n_base_vars,
                mkp_shis: Vec::new(),
            })
        }
    }
}

/// Column actions (with companion variables) of every matrix the instance
/// declares, labelled by the matrix label. Ground truth for orbit tests.
pub fn declared_column_actions(instance: &ProblemInstance) -> Vec<(String, ColumnAction)> {
    match instance {
        ProblemInstance::Mkp { name, data } => {
            let built = build_mkp(data, name);
            built
                .program
                .matrices
                .iter()
                .map(|matrix| {
                    let columns = (0..matrix.cols)
                        .map(|c| (0..matrix.rows).map(|r| matrix.entry(r, c)).collect())
                        .collect();
                    (matrix.label.clone(), ColumnAction { columns })
                })
                .collect()
        }
        ProblemInstance::Mucp { name, data } => {
            let built = build_mucp(data, name);
            built
                .type_matrices
                .iter()
                .map(|(h, members, matrix)| {
                    let m = &built.program.matrices[*matrix];
                    let columns = members
                        .iter()
                        .enumerate()
                        .map(|(c, &unit)| {
                            let mut col: Vec<crate::model::VarId> =
                                (0..m.rows).map(|t| m.entry(t, c)).collect();
                            col.extend((0..m.rows).map(|t| built.u[t][unit]));
                            col
                        })
                        .collect();
                    (format!("type{h}"), ColumnAction { columns })
                })
                .collect()
        }
        ProblemInstance::Mkcs { name, data } => {
            let built = build_mkcs(data, name);
            let m = &built.program.matrices[built.color_matrix];
            let columns = (0..m.cols)
                .map(|c| (0..m.rows).map(|r| m.entry(r, c)).collect())
                .collect();
            vec![("colors".into(), ColumnAction { columns })]
        }
    }
}

/// Batch-run knobs; `None` limits fall back to per-family defaults.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<u64>,
    /// Worker threads for independent solves; 1 keeps timing fidelity.
    pub jobs: usize,
    /// Recorded in every CSV row for provenance.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            time_limit_s: None,
            node_limit: None,
            jobs: 1,
            seed: 0,
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub instance: String,
    pub setting: String,
    pub status: String,
    pub objective: Option<Rat>,
    pub nodes: u64,
    pub time_s: f64,
    pub seed: u64,
}

/// Solves one (instance, setting) pair into a report row. Invalid pairs
/// become `status = "error"` rows rather than failures.
pub fn run_one(instance: &ProblemInstance, setting: Setting, cfg: &RunConfig) -> ReportRow {
    let limit = cfg
        .time_limit_s
        .unwrap_or_else(|| instance.default_time_limit());
    let error_row = |instance: &ProblemInstance| ReportRow {
        instance: instance.name().to_string(),
        setting: setting.to_string(),
        status: "error".into(),
        objective: None,
        nodes: 0,
        time_s: 0.0,
        seed: cfg.seed,
    };
    let Ok(prepared) = prepare(instance, setting) else {
        return error_row(instance);
    };
    let config = SolverConfig {
        setting: setting.to_string(),
        time_limit_s: limit,
        node_limit: cfg.node_limit,
        random_seed: cfg.seed,
        ..SolverConfig::default()
    };
    let report = bnb::solve(&prepared.program, &prepared.plugins, &config);
    ReportRow {
        instance: instance.name().to_string(),
        setting: setting.to_string(),
        status: match report.status {
            SolveStatus::Optimal => "optimal".into(),
            SolveStatus::Infeasible => "infeasible".into(),
            SolveStatus::TimeLimit => "time_limit".into(),
        },
        objective: report.objective,
        nodes: report.nodes,
        time_s: match report.status {
            SolveStatus::TimeLimit => limit,
            _ => report.time_s,
        },
        seed: cfg.seed,
    }
}

/// Runs the full (instance x setting) matrix; rows come back in
/// instance-major order regardless of the degree of parallelism.
pub fn run_matrix(
    instances: &[ProblemInstance],
    settings: &[Setting],
    cfg: &RunConfig,
) -> Vec<ReportRow> {
    let tasks: Vec<(usize, Setting)> = instances
        .iter()
        .enumerate()
        .flat_map(|(i, _)| settings.iter().map(move |&s| (i, s)))
        .collect();
    let run = |(i, s): (usize, Setting)| run_one(&instances[i], s, cfg);
    if cfg.jobs <= 1 {
        par::map_seq(tasks, run)
    } else {
        par::with_jobs(cfg.jobs, || par::map(tasks, run))
    }
}

// --- CSV ------------------------------------------------------------------

pub const CSV_HEADER: [&str; 7] = [
    "instance", "setting", "status", "objective", "nodes", "time_s", "seed",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected {CSV_HEADER:?}")]
    Header,
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

pub fn write_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.instance.as_str(),
            r.setting.as_str(),
            r.status.as_str(),
            &r.objective.as_ref().map(|o| o.to_string()).unwrap_or_default(),
            &r.nodes.to_string(),
            &format!("{:.6}", r.time_s),
            &r.seed.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf8")
}

pub fn read_csv(text: &str) -> Result<Vec<ReportRow>, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    if reader.headers()?.iter().ne(CSV_HEADER) {
        return Err(CsvError::Header);
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or_default().to_string();
        let bad = |message: String| CsvError::Row {
            row: idx + 2,
            message,
        };
        let objective = {
            let raw = field(3);
            if raw.is_empty() {
                None
            } else {
                Some(raw.parse().map_err(|e| bad(format!("objective: {e}")))?)
            }
        };
        rows.push(ReportRow {
            instance: field(0),
            setting: field(1),
            status: field(2),
            objective,
            nodes: field(4).parse().map_err(|e| bad(format!("nodes: {e}")))?,
            time_s: field(5).parse().map_err(|e| bad(format!("time_s: {e}")))?,
            seed: field(6).parse().map_err(|e| bad(format!("seed: {e}")))?,
        });
    }
    Ok(rows)
}

// --- summaries ---------------------------------------------------------------

/// `exp(mean(ln(t + shift))) - shift`.
pub fn shifted_geomean(times: &[f64], shift: f64) -> f64 {
    if times.is_empty() {
        return 0.0;
    }
    let mean = times.iter().map(|t| (t + shift).ln()).sum::<f64>() / times.len() as f64;
    mean.exp() - shift
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryCell {
    pub solved: usize,
    pub mean_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub count: usize,
    pub cells: Vec<SummaryCell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub settings: Vec<String>,
    pub rows: Vec<SummaryRow>,
    pub excluded_all_timeout: usize,
    pub excluded_error: usize,
}

/// Aggregates rows into the per-class table; see module docs for the class
/// and exclusion semantics. `class_bounds` are the ascending left edges of
/// the classes after the first (which starts at 0); the last class is
/// open-ended.
pub fn summarize(rows: &[ReportRow], class_bounds: &[f64]) -> Summary {
    let mut settings: Vec<String> = Vec::new();
    for r in rows {
        if !settings.contains(&r.setting) {
            settings.push(r.setting.clone());
        }
    }
    // canonical column order, independent of row order
    let rank = |s: &str| {
        ["no-sym", "orbitope", "ineq", "act", "act-consec", "act-allpairs"]
            .iter()
            .position(|&k| k == s)
            .unwrap_or(usize::MAX)
    };
    settings.sort_by(|a, b| rank(a).cmp(&rank(b)).then(a.cmp(b)));
    let mut by_instance: BTreeMap<&str, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        by_instance.entry(&r.instance).or_default().push(r);
    }

    let mut excluded_error = 0;
    let mut excluded_all_timeout = 0;
    let mut included: Vec<(&str, &Vec<&ReportRow>)> = Vec::new();
    for (name, group) in &by_instance {
        if group.iter().any(|r| r.status == "error") {
            excluded_error += 1;
        } else if group.iter().all(|r| r.status == "time_limit") {
            excluded_all_timeout += 1;
        } else {
            included.push((name, group));
        }
    }

    let mut edges: Vec<f64> = Vec::with_capacity(class_bounds.len() + 1);
    edges.push(0.0);
    edges.extend(
        class_bounds
            .iter()
            .copied()
            .filter(|&b| b > 0.0),
    );

    let cell = |members: &[(&str, &Vec<&ReportRow>)], setting: &str| {
        let mut solved = 0;
        let mut times = Vec::new();
        for (_, group) in members {
            for r in group.iter().filter(|r| r.setting == setting) {
                if r.status == "optimal" {
                    solved += 1;
                }
                times.push(r.time_s);
            }
        }
        SummaryCell {
            solved,
            mean_time: shifted_geomean(&times, 1.0),
        }
    };

    let mut table_rows = Vec::new();
    let all_cells = settings.iter().map(|s| cell(&included, s)).collect();
    table_rows.push(SummaryRow {
        label: "all".into(),
        count: included.len(),
        cells: all_cells,
    });
    for (ci, &lo) in edges.iter().enumerate() {
        let hi = edges.get(ci + 1).copied();
        let members: Vec<(&str, &Vec<&ReportRow>)> = included
            .iter()
            .filter(|(_, group)| {
                group
                    .iter()
                    .all(|r| r.time_s >= lo && hi.map_or(true, |h| r.time_s < h))
            })
            .copied()
            .collect();
        if members.is_empty() {
            continue;
        }
        let label = match hi {
            Some(h) => format!("[{lo},{h})"),
            None => format!("[{lo},inf)"),
        };
        let cells = settings.iter().map(|s| cell(&members, s)).collect();
        table_rows.push(SummaryRow {
            label,
            count: members.len(),
            cells,
        });
    }

    Summary {
        settings,
        rows: table_rows,
        excluded_all_timeout,
        excluded_error,
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<14}{:>6}", "instances", "#")?;
        for s in &self.settings {
            write!(f, "{:>12}{:>10}", format!("{s} Opt"), "Time")?;
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "{:<14}{:>6}", row.label, row.count)?;
            for cell in &row.cells {
                write!(f, "{:>12}{:>10.1}", cell.solved, cell.mean_time)?;
            }
            writeln!(f)?;
        }
        if self.excluded_all_timeout > 0 {
            writeln!(
                f,
                "excluded: {} instance(s) where all settings reach the time limit",
                self.excluded_all_timeout
            )?;
        }
        if self.excluded_error > 0 {
            writeln!(f, "excluded: {} instance(s) with error rows", self.excluded_error)?;
        }
        Ok(())
    }
}
