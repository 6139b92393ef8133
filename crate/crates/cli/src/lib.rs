//! Report assembly and rendering for the `ksec` command-line tool.
//!
//! Every subcommand builds one report value, then renders it as JSON or as
//! CSV with a header row, `.` decimals and LF line endings.

use std::io::Write;

use ksec_core::exact::{self, to_f64};
use ksec_core::montecarlo::{mc_estimate_with, McEstimate, Sampler};
use ksec_core::optimizer::{self, OptimisticOptimum, OptimumRow, OptimumTable, SearchConfig};
use ksec_core::oracle::{self, OracleTable, VerificationReport};
use ksec_core::{Policy, PolicyKind, PolicyParams};
use serde::Serialize;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters (exit 2).
    Usage(String),
    /// A check ran and failed (exit 1). The report, if any, is still written.
    Failed { message: String, report: Option<String> },
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Failed { .. } => exit::VERIFICATION_FAILED,
        }
    }
}

impl From<ksec_core::Error> for CliError {
    fn from(e: ksec_core::Error) -> Self {
        match e {
            ksec_core::Error::Check(_) => CliError::Failed { message: e.to_string(), report: None },
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A report that can be rendered in both output formats.
pub trait Report: Serialize {
    fn csv_header(&self) -> Vec<&'static str>;
    fn csv_rows(&self) -> Vec<Vec<String>>;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
                w.write_record(self.csv_header()).expect("in-memory write");
                for row in self.csv_rows() {
                    w.write_record(row).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
            }
        }
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_output(text: &str, path: Option<&std::path::Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamsOut {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub r: usize,
}

impl From<PolicyParams> for ParamsOut {
    fn from(p: PolicyParams) -> Self {
        ParamsOut { n: p.n(), k: p.k(), t: p.t(), r: p.r() }
    }
}

// ---------------------------------------------------------------- exact

#[derive(Debug, Clone, Serialize)]
pub struct ExactReport {
    pub params: ParamsOut,
    /// Probability that a dominating item is accept `j`, `j = 1..=k`.
    pub p_dom: Vec<f64>,
    /// `p_item[i-1][j-1]`: item `i ≤ k` taken as accept `j`.
    pub p_item: Vec<Vec<f64>>,
    pub ratio: f64,
    /// Exact ratio as a reduced fraction (only for `n ≤ 2000`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_exact: Option<String>,
}

/// Largest `n` for which the exact report also prints the rational ratio.
pub const RATIONAL_MAX_N: usize = 2000;

pub fn exact_report(n: usize, k: usize, t: usize, r: usize) -> CliResult<ExactReport> {
    let p = PolicyParams::new(n, k, t, r)?;
    let p_dom = (0..k).map(|j| exact::dominating_accept_prob(p, j)).collect::<Result<Vec<_>, _>>()?;
    let p_item = (1..=k)
        .map(|i| (1..=k).map(|j| exact::item_slot_prob(p, i, j)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let ratio_exact = (n <= RATIONAL_MAX_N).then(|| exact::single_ref_ratio_exact(p).to_string());
    Ok(ExactReport { params: p.into(), p_dom, p_item, ratio: exact::single_ref_ratio(p), ratio_exact })
}

impl Report for ExactReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["n", "k", "t", "r", "quantity", "item", "slot", "value"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let ParamsOut { n, k, t, r } = self.params;
        let lead = || vec![n.to_string(), k.to_string(), t.to_string(), r.to_string()];
        let mut rows = Vec::new();
        for (j, v) in self.p_dom.iter().enumerate() {
            rows.push([lead(), vec!["p_dom".into(), String::new(), (j + 1).to_string(), num(*v)]].concat());
        }
        for (i, row) in self.p_item.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                rows.push([lead(), vec!["p_item".into(), (i + 1).to_string(), (j + 1).to_string(), num(*v)]].concat());
            }
        }
        rows.push([lead(), vec!["ratio".into(), String::new(), String::new(), num(self.ratio)]].concat());
        rows
    }
}

// ---------------------------------------------------------------- table

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TableReport {
    pub rows: Vec<TableRowOut>,
    pub monotonicity_violations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TableRowOut {
    pub k: usize,
    pub r: usize,
    pub c: f64,
    pub cr: f64,
    pub kleinberg: Option<f64>,
}

pub fn table_report(k_max: usize, c_tol: f64) -> CliResult<TableReport> {
    let table: OptimumTable = optimizer::build_table_with(k_max, &SearchConfig::with_tolerance(c_tol))?;
    Ok(TableReport {
        rows: table
            .rows
            .iter()
            .map(|row| {
                let o = row.optimum;
                TableRowOut { k: o.k, r: o.r, c: o.c, cr: o.ratio, kleinberg: row.kleinberg }
            })
            .collect(),
        monotonicity_violations: table.monotonicity_violations,
    })
}

impl Report for TableReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["k", "r", "c", "cr", "kleinberg"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![r.k.to_string(), r.r.to_string(), num(r.c), num(r.cr), opt_num(r.kleinberg)])
            .collect()
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulateReport {
    pub params: ParamsOut,
    pub policy: PolicyKind,
    pub trials: u64,
    pub seed: u64,
    pub ratio_estimate: f64,
    pub stderr: f64,
    pub per_slot: Vec<SlotEstimate>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlotEstimate {
    pub item: usize,
    pub slot: usize,
    pub estimate: f64,
    pub stderr: f64,
}

pub fn simulate_report(
    policy: PolicyKind,
    params: PolicyParams,
    trials: u64,
    seed: u64,
    sampler: Sampler,
) -> CliResult<SimulateReport> {
    let e: McEstimate = mc_estimate_with(params, policy, trials, seed, sampler)?;
    let k = params.k();
    let per_slot = (1..=k)
        .flat_map(|i| (1..=k).map(move |j| (i, j)))
        .map(|(i, j)| SlotEstimate { item: i, slot: j, estimate: e.prob(i, j), stderr: e.se(i, j) })
        .collect();
    Ok(SimulateReport {
        params: params.into(),
        policy,
        trials,
        seed,
        ratio_estimate: e.ratio,
        stderr: e.ratio_se,
        per_slot,
    })
}

impl Report for SimulateReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["policy", "n", "k", "t", "r", "trials", "seed", "quantity", "item", "slot", "estimate", "stderr"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let ParamsOut { n, k, t, r } = self.params;
        let lead = || {
            [self.policy.name().to_string(), n.to_string(), k.to_string(), t.to_string(), r.to_string()]
                .into_iter()
                .chain([self.trials.to_string(), self.seed.to_string()])
                .collect::<Vec<_>>()
        };
        let mut rows: Vec<Vec<String>> = self
            .per_slot
            .iter()
            .map(|s| {
                [lead(), vec!["slot".into(), s.item.to_string(), s.slot.to_string(), num(s.estimate), num(s.stderr)]]
                    .concat()
            })
            .collect();
        rows.push([lead(), vec!["ratio".into(), String::new(), String::new(), num(self.ratio_estimate), num(self.stderr)]].concat());
        rows
    }
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub n_max: usize,
    pub passed: bool,
    pub instances: usize,
    pub configurations: usize,
    pub failures: usize,
    pub checks: Vec<oracle::IdentityCheck>,
}

pub fn verify_report(n_max: usize) -> CliResult<VerifyReport> {
    let rep: VerificationReport = oracle::verify_identities(n_max)?;
    Ok(VerifyReport {
        n_max,
        passed: rep.all_passed(),
        instances: rep.checks.len(),
        configurations: rep.configurations(),
        failures: rep.failures().count(),
        checks: rep.checks,
    })
}

impl Report for VerifyReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["identity", "policy", "n", "k", "t", "r", "passed", "detail"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.checks
            .iter()
            .map(|c| {
                vec![
                    c.identity.name().into(),
                    c.policy.name().into(),
                    c.n.to_string(),
                    c.k.to_string(),
                    c.t.to_string(),
                    c.r.map(|r| r.to_string()).unwrap_or_default(),
                    c.passed.to_string(),
                    c.detail.clone(),
                ]
            })
            .collect()
    }
}

// ---------------------------------------------------------------- optimize

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum OptimizeReport {
    SingleRef(OptimumRow),
    OptimisticK2(OptimisticOptimum),
}

pub fn optimize_report(k: Option<usize>, optimistic_k2: bool, c_tol: f64) -> CliResult<OptimizeReport> {
    match (k, optimistic_k2) {
        (Some(k), false) => Ok(OptimizeReport::SingleRef(optimizer::optimize_single_ref(k, c_tol)?)),
        (None, true) => Ok(OptimizeReport::OptimisticK2(optimizer::optimize_optimistic_k2(c_tol)?)),
        _ => Err(CliError::Usage("pass exactly one of --k or --optimistic-k2".into())),
    }
}

impl Report for OptimizeReport {
    fn csv_header(&self) -> Vec<&'static str> {
        match self {
            OptimizeReport::SingleRef(_) => vec!["k", "r", "c", "cr"],
            OptimizeReport::OptimisticK2(_) => vec!["c", "cr"],
        }
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        match self {
            OptimizeReport::SingleRef(o) => vec![vec![o.k.to_string(), o.r.to_string(), num(o.c), num(o.ratio)]],
            OptimizeReport::OptimisticK2(o) => vec![vec![num(o.c), num(o.ratio)]],
        }
    }
}

// ---------------------------------------------------------------- oracle

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleReport {
    pub params: ParamsOut,
    pub policy: PolicyKind,
    /// `n!`
    pub orders: u64,
    /// `counts[i-1][j-1]`: orders in which item `i` is accept `j`.
    pub counts: Vec<Vec<u64>>,
    pub ratio: f64,
    pub ratio_exact: String,
}

pub fn oracle_report(policy: PolicyKind, params: PolicyParams) -> CliResult<OracleReport> {
    let t: OracleTable = oracle::oracle_table(Policy::new(policy, params))?;
    let ratio = t.ratio();
    Ok(OracleReport {
        params: params.into(),
        policy,
        orders: t.total,
        counts: t.counts.chunks(t.k).map(<[u64]>::to_vec).collect(),
        ratio: to_f64(&ratio),
        ratio_exact: ratio.to_string(),
    })
}

impl Report for OracleReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["item", "slot", "count", "orders", "probability"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let total = self.orders;
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter().enumerate().map(move |(j, &c)| {
                    vec![(i + 1).to_string(), (j + 1).to_string(), c.to_string(), total.to_string(), num(c as f64 / total as f64)]
                })
            })
            .collect()
    }
}
