//! File emission. Every float is written with Rust's shortest round-trip formatting so the
//! same results always give the same bytes.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use cvb_core::gmm::Algorithm;
use serde::Serialize;

use crate::config::Config;
use crate::experiments::{BivariateRow, GmmRow, OracleRow, Outcome, TraceFile, Violation};

/// Bumped whenever a column is added, removed or reordered.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const BIVARIATE_COLUMNS: [&str; 10] = [
    "label",
    "rho_init",
    "kl_init",
    "kl_final",
    "iterations",
    "converged",
    "truncated",
    "var1_final",
    "var2_final",
    "rho_final",
];

pub const GMM_COLUMNS: [&str; 10] = [
    "seed",
    "radius",
    "algorithm",
    "purity",
    "mse",
    "elbo_final",
    "elbo_heuristic",
    "iterations",
    "truncated",
    "empty_flag",
];

pub const ORACLE_COLUMNS: [&str; 11] = [
    "seed",
    "n",
    "radius",
    "algorithm",
    "elbo_final",
    "log_evidence",
    "bound_ok",
    "trace_bound_ok",
    "purity",
    "exact_purity",
    "map_purity",
];

pub const TRACE_COLUMNS: [&str; 5] = ["iteration", "slot", "elbo", "delta", "empty_flag"];

fn f(x: f64) -> String {
    format!("{x}")
}

fn b(x: bool) -> String {
    (if x { "1" } else { "0" }).to_string()
}

/// Results of one experiment, ready to write.
#[derive(Clone, Debug)]
pub enum Report {
    Bivariate(Outcome<BivariateRow>),
    Gmm(Outcome<GmmRow>),
    OracleCheck(Outcome<OracleRow>),
}

impl Report {
    pub fn violations(&self) -> &[Violation] {
        match self {
            Report::Bivariate(o) => &o.violations,
            Report::Gmm(o) => &o.violations,
            Report::OracleCheck(o) => &o.violations,
        }
    }

    fn traces(&self) -> &[TraceFile] {
        match self {
            Report::Bivariate(o) => &o.traces,
            Report::Gmm(o) => &o.traces,
            Report::OracleCheck(o) => &o.traces,
        }
    }

    fn csv(&self) -> (&'static str, Vec<&'static str>, Vec<Vec<String>>) {
        match self {
            Report::Bivariate(o) => (
                "bivariate",
                BIVARIATE_COLUMNS.to_vec(),
                o.rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.label.to_string(),
                            f(r.rho_init),
                            f(r.kl_init),
                            f(r.kl_final),
                            r.iterations.to_string(),
                            b(r.converged),
                            b(r.truncated),
                            f(r.var1_final),
                            f(r.var2_final),
                            f(r.rho_final),
                        ]
                    })
                    .collect(),
            ),
            Report::Gmm(o) => (
                "gmm",
                GMM_COLUMNS.to_vec(),
                o.rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.seed.to_string(),
                            f(r.radius),
                            r.algorithm.name().to_string(),
                            f(r.purity),
                            f(r.mse),
                            f(r.elbo_final),
                            b(r.elbo_heuristic),
                            f(r.iterations),
                            b(r.truncated),
                            b(r.empty_flag),
                        ]
                    })
                    .collect(),
            ),
            Report::OracleCheck(o) => (
                "oracle-check",
                ORACLE_COLUMNS.to_vec(),
                o.rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.seed.to_string(),
                            r.n.to_string(),
                            f(r.radius),
                            r.algorithm.name().to_string(),
                            f(r.elbo_final),
                            f(r.log_evidence),
                            b(r.bound_ok),
                            b(r.trace_bound_ok),
                            f(r.purity),
                            f(r.exact_purity),
                            f(r.map_purity),
                        ]
                    })
                    .collect(),
            ),
        }
    }

    pub fn summary(&self, cfg: &Config) -> Summary {
        let groups = match self {
            Report::Bivariate(o) => SummaryGroups::Bivariate(bivariate_summary(&o.rows)),
            Report::Gmm(o) => SummaryGroups::Gmm(gmm_summary(&o.rows)),
            Report::OracleCheck(o) => SummaryGroups::OracleCheck(oracle_summary(&o.rows)),
        };
        Summary {
            schema: format!("cvb-summary/{CSV_SCHEMA_VERSION}"),
            experiment: cfg.experiment.name().to_string(),
            config: cfg.clone(),
            violations: self
                .violations()
                .iter()
                .map(|v| format!("{}: {}", v.context, v.message))
                .collect(),
            results: groups,
        }
    }

    /// Write `runs.csv`, `summary.json` and any traces into `dir`, creating it if needed.
    pub fn write(&self, cfg: &Config, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let (name, cols, rows) = self.csv();
        write_csv(
            &dir.join("runs.csv"),
            &format!("# cvb runs v{CSV_SCHEMA_VERSION} experiment={name}"),
            &cols,
            &rows,
        )?;
        let path = dir.join("summary.json");
        let mut json = serde_json::to_string_pretty(&self.summary(cfg))?;
        json.push('\n');
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        for t in self.traces() {
            write_trace(dir, t)?;
        }
        Ok(())
    }
}

fn write_csv(path: &Path, comment: &str, cols: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut buf = BufWriter::new(file);
    writeln!(buf, "{comment}")?;
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(cols)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// One row per recorded ELBO; row 0 is the initial bound when the model defines one.
pub fn write_trace(dir: &Path, t: &TraceFile) -> Result<()> {
    let mut cols: Vec<&str> = TRACE_COLUMNS.to_vec();
    cols.extend(t.snapshot_columns.iter().map(String::as_str));
    let mut rows = Vec::with_capacity(t.trace.rows.len() + 1);
    if let Some(e) = t.trace.initial_elbo {
        let mut r = vec!["0".into(), String::new(), f(e), String::new(), "0".into()];
        r.resize(cols.len(), String::new());
        rows.push(r);
    }
    for row in &t.trace.rows {
        let mut r = vec![
            row.iteration.to_string(),
            row.slot.to_string(),
            f(row.elbo),
            f(row.delta),
            b(row.empty_flag),
        ];
        if let Some(s) = &row.snapshot {
            r.extend(s.iter().map(|&x| f(x)));
        }
        r.resize(cols.len(), String::new());
        rows.push(r);
    }
    write_csv(
        &dir.join(format!("trace_{}.csv", t.id)),
        &format!("# cvb trace v{CSV_SCHEMA_VERSION} id={}", t.id),
        &cols,
        &rows,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema: String,
    pub experiment: String,
    pub config: Config,
    pub violations: Vec<String>,
    pub results: SummaryGroups,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum SummaryGroups {
    Bivariate(BivariateSummary),
    Gmm(Vec<GmmGroup>),
    OracleCheck(Vec<OracleGroup>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = xs.into_iter().collect();
        if v.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BivariateSummary {
    pub vb_iterations: Option<usize>,
    pub vb_kl_final: Option<f64>,
    pub vb_var_final: Option<[f64; 2]>,
    pub cvb_points: usize,
    pub cvb_iterations: MeanStd,
    pub cvb_kl_final_min: f64,
    pub cvb_rho_init_at_min: f64,
    pub cvb_kl_nonincreasing: bool,
}

fn bivariate_summary(rows: &[BivariateRow]) -> BivariateSummary {
    let vb = rows.iter().find(|r| r.label == "vb");
    let grid: Vec<&BivariateRow> = rows.iter().filter(|r| r.label == "cvb").collect();
    let best = grid.iter().min_by(|a, b| a.kl_final.total_cmp(&b.kl_final));
    BivariateSummary {
        vb_iterations: vb.map(|r| r.iterations),
        vb_kl_final: vb.map(|r| r.kl_final),
        vb_var_final: vb.map(|r| [r.var1_final, r.var2_final]),
        cvb_points: grid.len(),
        cvb_iterations: MeanStd::of(grid.iter().map(|r| r.iterations as f64)),
        cvb_kl_final_min: best.map_or(f64::NAN, |r| r.kl_final),
        cvb_rho_init_at_min: best.map_or(f64::NAN, |r| r.rho_init),
        cvb_kl_nonincreasing: rows.iter().all(|r| r.kl_final <= r.kl_init + 1e-12),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GmmGroup {
    pub radius: f64,
    pub algorithm: String,
    pub runs: usize,
    pub purity: MeanStd,
    pub mse: MeanStd,
    pub elbo_final: MeanStd,
    pub iterations: MeanStd,
    pub truncated_runs: usize,
    pub empty_runs: usize,
}

/// Group key with radii ordered by value.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Key(u64, Algorithm);

fn radius_key(r: f64) -> u64 {
    // Order-preserving map of nonnegative floats to integers.
    r.to_bits()
}

pub fn gmm_summary(rows: &[GmmRow]) -> Vec<GmmGroup> {
    let mut groups: BTreeMap<Key, Vec<&GmmRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(Key(radius_key(r.radius), r.algorithm))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|g| GmmGroup {
            radius: g[0].radius,
            algorithm: g[0].algorithm.name().to_string(),
            runs: g.len(),
            purity: MeanStd::of(g.iter().map(|r| r.purity)),
            mse: MeanStd::of(g.iter().map(|r| r.mse)),
            elbo_final: MeanStd::of(g.iter().map(|r| r.elbo_final)),
            iterations: MeanStd::of(g.iter().map(|r| r.iterations)),
            truncated_runs: g.iter().filter(|r| r.truncated).count(),
            empty_runs: g.iter().filter(|r| r.empty_flag).count(),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleGroup {
    pub algorithm: String,
    pub instances: usize,
    pub bound_violations: usize,
    pub trace_bound_violations: usize,
    /// Largest `elbo_final − log_evidence`.
    pub max_excess: f64,
    pub purity: MeanStd,
    pub exact_purity: MeanStd,
    pub map_purity: MeanStd,
}

pub fn oracle_summary(rows: &[OracleRow]) -> Vec<OracleGroup> {
    let mut groups: BTreeMap<Algorithm, Vec<&OracleRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.algorithm).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(a, g)| OracleGroup {
            algorithm: a.name().to_string(),
            instances: g.len(),
            bound_violations: g.iter().filter(|r| !r.bound_ok).count(),
            trace_bound_violations: g.iter().filter(|r| !r.trace_bound_ok).count(),
            max_excess: g
                .iter()
                .map(|r| r.elbo_final - r.log_evidence)
                .fold(f64::NEG_INFINITY, f64::max),
            purity: MeanStd::of(g.iter().map(|r| r.purity)),
            exact_purity: MeanStd::of(g.iter().map(|r| r.exact_purity)),
            map_purity: MeanStd::of(g.iter().map(|r| r.map_purity)),
        })
        .collect()
}
