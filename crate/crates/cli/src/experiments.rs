//! The three experiments. Each returns typed rows plus the traces it was asked to keep;
//! [`crate::output`] turns them into files.

use anyhow::Result;
use cvb_core::bivariate::{rho_grid, run_bivariate_with, BivarTrueModel, CvbBivarState};
use cvb_core::engine::{RunOptions, StoppingRule, Trace};
use cvb_core::gmm::{evaluate, generate_data, purity, Algorithm, Generated, Init, MethodResult};
use cvb_core::oracle::enumerate_posterior;
use cvb_core::rng::Stream;
use cvb_core::Error;
use rayon::prelude::*;

use crate::config::Config;

/// A trace destined for `trace_<id>.csv`. `snapshot_columns` names the state columns
/// appended after the ELBO columns (empty when snapshots were not recorded).
#[derive(Clone, Debug)]
pub struct TraceFile {
    pub id: String,
    pub trace: Trace,
    pub snapshot_columns: Vec<String>,
}

/// A run that stopped because its ELBO decreased.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub context: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BivariateRow {
    /// `vb` for the factorised start, `cvb` for grid points.
    pub label: &'static str,
    pub rho_init: f64,
    pub kl_init: f64,
    pub kl_final: f64,
    pub iterations: usize,
    pub converged: bool,
    pub truncated: bool,
    pub var1_final: f64,
    pub var2_final: f64,
    pub rho_final: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmmRow {
    pub seed: u64,
    pub radius: f64,
    pub algorithm: Algorithm,
    pub purity: f64,
    pub mse: f64,
    pub elbo_final: f64,
    pub elbo_heuristic: bool,
    /// Mean over anchors for the CVB schemes.
    pub iterations: f64,
    pub truncated: bool,
    pub empty_flag: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub seed: u64,
    pub n: usize,
    pub radius: f64,
    pub algorithm: Algorithm,
    pub elbo_final: f64,
    pub log_evidence: f64,
    /// Final ELBO at most the log evidence plus 1e-9.
    pub bound_ok: bool,
    /// Every ELBO along every trace of the algorithm within the same bound.
    pub trace_bound_ok: bool,
    pub purity: f64,
    /// Purity of the argmax of the exact label marginals.
    pub exact_purity: f64,
    /// Purity of the single most probable labeling.
    pub map_purity: f64,
}

#[derive(Clone, Debug)]
pub struct Outcome<R> {
    pub rows: Vec<R>,
    pub traces: Vec<TraceFile>,
    pub violations: Vec<Violation>,
}

impl<R> Default for Outcome<R> {
    fn default() -> Self {
        Self {
            rows: Vec::new(),
            traces: Vec::new(),
            violations: Vec::new(),
        }
    }
}

pub const BOUND_SLACK: f64 = 1e-9;

fn violation_or_err(context: String, e: Error) -> Result<Violation> {
    match e {
        Error::ElboDecrease { .. } => Ok(Violation {
            context,
            message: e.to_string(),
        }),
        other => Err(anyhow::Error::new(other).context(context)),
    }
}

pub fn run_bivariate_experiment(cfg: &Config) -> Result<Outcome<BivariateRow>> {
    let b = &cfg.bivariate;
    let rule = cfg.stopping_rule()?;
    let model = BivarTrueModel::new(b.var1.sqrt(), b.var2.sqrt(), b.rho)?;
    let starts: Vec<(&'static str, f64)> = std::iter::once(("vb", 0.0))
        .chain(rho_grid(b.rho_grid_step)?.into_iter().map(|r| ("cvb", r)))
        .collect();
    let opts = RunOptions {
        snapshots: cfg.output.traces,
    };
    let runs: Vec<_> = starts
        .par_iter()
        .map(|&(label, r0)| -> Result<_> {
            let init = CvbBivarState::new(b.init_sd, b.init_sd, r0)?;
            Ok((label, r0, run_bivariate_with(&model, &init, &rule, opts)))
        })
        .collect::<Result<_>>()?;
    let mut out = Outcome::default();
    for (idx, (label, r0, run)) in runs.into_iter().enumerate() {
        let context = format!("bivariate {label} rho_init={r0}");
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                out.violations.push(violation_or_err(context, e)?);
                continue;
            }
        };
        let (v1, v2) = run.state.variances();
        out.rows.push(BivariateRow {
            label,
            rho_init: r0,
            kl_init: run.kl_init(),
            kl_final: run.kl_final(),
            iterations: run.trace.iterations(),
            converged: run.trace.converged,
            truncated: run.trace.truncated,
            var1_final: v1,
            var2_final: v2,
            rho_final: run.state.rho_t,
        });
        if cfg.output.traces {
            let id = if idx == 0 {
                "bivariate_vb".to_string()
            } else {
                format!("bivariate_cvb_{idx:02}")
            };
            out.traces.push(TraceFile {
                id,
                trace: run.trace,
                snapshot_columns: vec!["sigma1".into(), "sigma2".into(), "rho".into()],
            });
        }
    }
    Ok(out)
}

/// Evenly spaced anchors `⌊i·N/S⌋`, or every point when no subsample is requested.
pub fn anchor_indices(n: usize, subsample: Option<usize>) -> Vec<usize> {
    match subsample {
        Some(s) if s < n => (0..s).map(|i| i * n / s).collect(),
        _ => (0..n).collect(),
    }
}

/// Run the algorithms on one instance. Non-CVB methods run one at a time so a failure in one
/// does not hide the others; the CVB schemes share their anchored runs.
fn evaluate_grouped(
    g: &Generated,
    init: &Init,
    rule: &StoppingRule,
    algorithms: &[Algorithm],
    anchors: &[usize],
    context: &str,
) -> Result<(Vec<MethodResult>, Vec<Violation>)> {
    let mut groups: Vec<Vec<Algorithm>> = algorithms.iter().filter(|a| !a.is_cvb()).map(|&a| vec![a]).collect();
    let cvb: Vec<Algorithm> = algorithms.iter().copied().filter(Algorithm::is_cvb).collect();
    if !cvb.is_empty() {
        groups.push(cvb);
    }
    let mut results = Vec::new();
    let mut violations = Vec::new();
    for group in groups {
        match evaluate(g, init, rule, &group, Some(anchors)) {
            Ok(r) => results.extend(r),
            Err(e) => {
                let names: Vec<&str> = group.iter().map(|a| a.name()).collect();
                violations.push(violation_or_err(format!("{context} {}", names.join("+")), e)?);
            }
        }
    }
    results.sort_by_key(|r| r.algorithm);
    Ok((results, violations))
}

fn keep_traces(id_prefix: &str, results: &[MethodResult], out: &mut Vec<TraceFile>) {
    for r in results {
        // CVB schemes repeat the same anchored traces; keep them once under the first scheme.
        if r.algorithm.is_cvb()
            && results
                .iter()
                .any(|o| o.algorithm.is_cvb() && o.algorithm < r.algorithm)
        {
            continue;
        }
        for (name, t) in &r.traces {
            let name = if r.algorithm.is_cvb() {
                name.replacen(r.algorithm.name(), "cvb", 1)
            } else {
                name.clone()
            };
            out.push(TraceFile {
                id: format!("{id_prefix}_{name}"),
                trace: t.clone(),
                snapshot_columns: Vec::new(),
            });
        }
    }
}

pub fn run_gmm_experiment(cfg: &Config) -> Result<Outcome<GmmRow>> {
    let g = &cfg.gmm;
    let rule = cfg.stopping_rule()?;
    let algorithms = cfg.gmm_algorithms()?;
    let init = Init::corners(g.k);
    let anchors = anchor_indices(g.n, g.cvb_anchor_subsample);
    let tasks: Vec<(usize, u64)> = (0..g.radii.len())
        .flat_map(|ri| (0..cfg.seeds.count).map(move |s| (ri, s)))
        .collect();
    let per_task = tasks
        .par_iter()
        .map(|&(ri, seed)| -> Result<Outcome<GmmRow>> {
            let radius = g.radii[ri];
            // Common random numbers across radii: the stream depends on the seed only.
            let mut stream = Stream::new(cfg.seeds.base, seed);
            let inst = generate_data(g.k, radius, g.n, &mut stream)?;
            let context = format!("gmm radius={radius} seed={seed}");
            let (results, violations) = evaluate_grouped(&inst, &init, &rule, &algorithms, &anchors, &context)?;
            let mut o = Outcome {
                violations,
                ..Outcome::default()
            };
            if cfg.output.traces && seed < cfg.output.trace_seeds {
                keep_traces(&format!("gmm_r{radius}_s{seed}"), &results, &mut o.traces);
            }
            o.rows = results
                .into_iter()
                .map(|r| GmmRow {
                    seed,
                    radius,
                    algorithm: r.algorithm,
                    purity: r.purity,
                    mse: r.mse,
                    elbo_final: r.elbo_final,
                    elbo_heuristic: r.elbo_heuristic,
                    iterations: r.iterations,
                    truncated: r.truncated,
                    empty_flag: r.empty_flag,
                })
                .collect();
            Ok(o)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    for o in per_task {
        out.rows.extend(o.rows);
        out.traces.extend(o.traces);
        out.violations.extend(o.violations);
    }
    // Task order is already (radius index, seed) and rows within a task are in algorithm
    // order; sort by value as well so reordered radius lists give the same file.
    out.rows.sort_by(|a, b| {
        a.radius
            .total_cmp(&b.radius)
            .then(a.seed.cmp(&b.seed))
            .then(a.algorithm.cmp(&b.algorithm))
    });
    out.traces.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn run_oracle_experiment(cfg: &Config) -> Result<Outcome<OracleRow>> {
    let o = &cfg.oracle;
    let rule = cfg.stopping_rule()?;
    let algorithms = cfg.oracle_algorithms()?;
    let init = Init::corners(o.k);
    let per_instance = (0..cfg.seeds.count)
        .into_par_iter()
        .map(|seed| -> Result<Outcome<OracleRow>> {
            let mut stream = Stream::new(cfg.seeds.base, seed);
            let n = o.n_values[stream.category(o.n_values.len())];
            let radius = stream.uniform_in(o.radius_min, o.radius_max);
            let inst = generate_data(o.k, radius, n, &mut stream)?;
            let exact = enumerate_posterior(&inst.data)?;
            let exact_purity = purity(&exact.label_marginals.argmax_labels(), &inst.truth);
            let map_purity = purity(&exact.map_labeling(), &inst.truth);
            let anchors = anchor_indices(n, None);
            let context = format!("oracle-check seed={seed} n={n} radius={radius}");
            let (results, violations) = evaluate_grouped(&inst, &init, &rule, &algorithms, &anchors, &context)?;
            let mut out = Outcome {
                violations,
                ..Outcome::default()
            };
            if cfg.output.traces && seed < cfg.output.trace_seeds {
                keep_traces(&format!("oracle_s{seed}"), &results, &mut out.traces);
            }
            out.rows = results
                .into_iter()
                .map(|r| OracleRow {
                    seed,
                    n,
                    radius,
                    algorithm: r.algorithm,
                    elbo_final: r.elbo_final,
                    log_evidence: exact.log_evidence,
                    bound_ok: r.elbo_final <= exact.log_evidence + BOUND_SLACK,
                    trace_bound_ok: r.traces.iter().all(|(_, t)| t.elbo_gap_bound_check(exact.log_evidence)),
                    purity: r.purity,
                    exact_purity,
                    map_purity,
                })
                .collect();
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    for o in per_instance {
        out.rows.extend(o.rows);
        out.traces.extend(o.traces);
        out.violations.extend(o.violations);
    }
    out.traces.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_are_evenly_spaced() {
        assert_eq!(anchor_indices(10, Some(4)), vec![0, 2, 5, 7]);
        assert_eq!(anchor_indices(3, Some(5)), vec![0, 1, 2]);
        assert_eq!(anchor_indices(4, None), vec![0, 1, 2, 3]);
        assert_eq!(anchor_indices(100, Some(20)).len(), 20);
    }

    #[test]
    fn bivariate_default_has_grid_plus_vb_rows() {
        let cfg = Config {
            experiment: crate::config::Experiment::Bivariate,
            ..Config::default()
        };
        let o = run_bivariate_experiment(&cfg).unwrap();
        assert_eq!(o.rows.len(), 40);
        assert_eq!(o.rows[0].label, "vb");
        assert!((o.rows[0].kl_final - 0.5108256237659909).abs() < 1e-12);
        assert!(o.violations.is_empty());
    }
}
