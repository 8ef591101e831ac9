//! One entry point over every algorithm, as used by the experiment harness.

use super::{
    cvb_run, em1_run, em2_run, kmeans_run, mse_means, purity, scheme_cvb1, scheme_cvb2, scheme_cvb3, vb_run,
    CvbAnchorResult, Generated, Init, LabelMatrix,
};
use crate::engine::{StoppingRule, Trace};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    KMeans,
    Em1,
    Em2,
    Vb,
    Cvb1,
    Cvb2,
    Cvb3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::KMeans,
        Algorithm::Em1,
        Algorithm::Em2,
        Algorithm::Vb,
        Algorithm::Cvb1,
        Algorithm::Cvb2,
        Algorithm::Cvb3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::Em1 => "em1",
            Algorithm::Em2 => "em2",
            Algorithm::Vb => "vb",
            Algorithm::Cvb1 => "cvb1",
            Algorithm::Cvb2 => "cvb2",
            Algorithm::Cvb3 => "cvb3",
        }
    }

    pub fn is_cvb(&self) -> bool {
        matches!(self, Algorithm::Cvb1 | Algorithm::Cvb2 | Algorithm::Cvb3)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let a = match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" | "icm" => Algorithm::KMeans,
            "em1" => Algorithm::Em1,
            "em2" => Algorithm::Em2,
            "vb" => Algorithm::Vb,
            "cvb1" => Algorithm::Cvb1,
            "cvb2" => Algorithm::Cvb2,
            "cvb3" => Algorithm::Cvb3,
            other => return Err(Error::InvalidInput(format!("unknown algorithm `{other}`"))),
        };
        Ok(a)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Scores of one algorithm on one instance.
#[derive(Clone, Debug)]
pub struct MethodResult {
    pub algorithm: Algorithm,
    pub labels: LabelMatrix,
    pub means: Vec<[f64; 2]>,
    pub purity: f64,
    pub mse: f64,
    pub elbo_final: f64,
    pub elbo_heuristic: bool,
    /// Iterations to convergence; the mean over anchors for CVB schemes.
    pub iterations: f64,
    pub truncated: bool,
    pub empty_flag: bool,
    /// Traces behind this result: one for mean-field methods, one per anchor for CVB.
    pub traces: Vec<(String, Trace)>,
}

/// Run the requested algorithms on a generated instance.
///
/// `anchors` selects the CVB structures (all points when `None`). The CVB runs are shared
/// between the three schemes. An ELBO decrease in any run is returned as an error.
pub fn evaluate(
    g: &Generated,
    init: &Init,
    rule: &StoppingRule,
    algorithms: &[Algorithm],
    anchors: Option<&[usize]>,
) -> Result<Vec<MethodResult>> {
    let mut out = Vec::with_capacity(algorithms.len());
    let mut cvb: Option<Vec<CvbAnchorResult>> = None;
    for &alg in algorithms {
        let base = |labels: LabelMatrix, means: Vec<[f64; 2]>, trace: Trace| MethodResult {
            algorithm: alg,
            purity: purity(&labels, &g.truth),
            mse: mse_means(&means, &g.means),
            labels,
            means,
            elbo_final: trace.final_elbo(),
            elbo_heuristic: false,
            iterations: trace.iterations() as f64,
            truncated: trace.truncated,
            empty_flag: trace.any_empty(),
            traces: vec![(alg.name().to_string(), trace)],
        };
        let r = match alg {
            Algorithm::KMeans => {
                let r = kmeans_run(&g.data, init, rule)?;
                base(r.labels, r.means, r.trace)
            }
            Algorithm::Em1 => {
                let r = em1_run(&g.data, init, rule)?;
                base(r.labels, r.means, r.trace)
            }
            Algorithm::Em2 => {
                let r = em2_run(&g.data, init, rule)?;
                base(r.p.argmax_labels(), r.means, r.trace)
            }
            Algorithm::Vb => {
                let r = vb_run(&g.data, init, rule)?;
                base(r.p.argmax_labels(), r.means, r.trace)
            }
            Algorithm::Cvb1 | Algorithm::Cvb2 | Algorithm::Cvb3 => {
                if cvb.is_none() {
                    let all: Vec<usize> = (0..g.data.n()).collect();
                    let list = anchors.unwrap_or(&all);
                    let runs = list
                        .iter()
                        .map(|&j| cvb_run(&g.data, j, init, rule))
                        .collect::<Result<Vec<_>>>()?;
                    cvb = Some(runs);
                }
                let runs = cvb.as_ref().expect("filled above");
                let s = match alg {
                    Algorithm::Cvb1 => scheme_cvb1(runs)?,
                    Algorithm::Cvb2 => scheme_cvb2(runs)?,
                    _ => scheme_cvb3(runs)?,
                };
                let iters = runs.iter().map(|r| r.trace.iterations()).sum::<usize>() as f64 / runs.len() as f64;
                MethodResult {
                    algorithm: alg,
                    purity: purity(&s.labels, &g.truth),
                    mse: mse_means(&s.means, &g.means),
                    labels: s.labels,
                    means: s.means,
                    elbo_final: s.elbo,
                    elbo_heuristic: s.elbo_heuristic,
                    iterations: iters,
                    truncated: runs.iter().any(|r| r.trace.truncated),
                    empty_flag: runs.iter().any(|r| r.trace.any_empty()),
                    traces: runs
                        .iter()
                        .map(|r| (format!("{}_a{}", alg.name(), r.anchor), r.trace.clone()))
                        .collect(),
                }
            }
        };
        out.push(r);
    }
    Ok(out)
}
