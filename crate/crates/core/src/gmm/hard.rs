//! Hard-assignment algorithms: k-means/ICM and EM₁ (point-mass labels, Gaussian means).

use super::{posterior_stats, DataSet, Init, LabelMatrix};
use crate::engine::{self, ConditionalModel, Convergence, StepOutcome, StoppingRule, Trace};
use crate::error::Result;
use crate::numeric::{argmax, log_norm_iso, LN_2PI_E};

/// Slot 0 assigns labels, slot 1 refits the means (and, for EM₁, the scales).
///
/// k-means scores clusters by `ln N(x; μₖ, I₂)`; EM₁ subtracts the penalty `σ̃ₖ²`.
/// Clusters left empty keep their previous parameters.
#[derive(Clone, Debug)]
pub struct HardAssign<'a> {
    data: &'a DataSet,
    penalized: bool,
    pub mu: Vec<[f64; 2]>,
    pub s2: Vec<f64>,
    pub labels: Option<Vec<usize>>,
}

impl<'a> HardAssign<'a> {
    pub fn kmeans(data: &'a DataSet, init: &Init) -> Self {
        Self::new(data, init, false)
    }

    pub fn em1(data: &'a DataSet, init: &Init) -> Self {
        Self::new(data, init, true)
    }

    fn new(data: &'a DataSet, init: &Init, penalized: bool) -> Self {
        assert_eq!(init.k(), data.k, "initialisation must have K clusters");
        Self {
            data,
            penalized,
            mu: init.means.clone(),
            s2: init.s2.clone(),
            labels: None,
        }
    }

    fn score(&self, x: [f64; 2], k: usize) -> f64 {
        let l = log_norm_iso(x, self.mu[k]);
        if self.penalized {
            l - self.s2[k]
        } else {
            l
        }
    }

    /// k-means: `Σᵢ ln N(xᵢ; μ_{kᵢ})`. EM₁ adds the scale penalties and the entropy of
    /// every cluster's Gaussian factor `Σₖ ln(2πe σ̃ₖ²)`.
    pub fn elbo(&self) -> f64 {
        let Some(labels) = &self.labels else {
            return f64::NAN;
        };
        let fit: f64 = self.data.x.iter().zip(labels).map(|(&x, &l)| self.score(x, l)).sum();
        if self.penalized {
            fit + self.s2.iter().map(|s| LN_2PI_E + s.ln()).sum::<f64>()
        } else {
            fit
        }
    }

    pub fn label_matrix(&self) -> Option<LabelMatrix> {
        self.labels
            .as_ref()
            .map(|l| LabelMatrix::new(self.data.k, l.clone()).expect("labels in range"))
    }
}

impl ConditionalModel for HardAssign<'_> {
    fn slots(&self) -> usize {
        2
    }

    fn convergence(&self) -> Convergence {
        Convergence::NoChange
    }

    fn update(&mut self, slot: usize) -> StepOutcome {
        let k = self.data.k;
        if slot == 0 {
            let mut scores = vec![0.0; k];
            let new: Vec<usize> = self
                .data
                .x
                .iter()
                .map(|&x| {
                    for (c, s) in scores.iter_mut().enumerate() {
                        *s = self.score(x, c);
                    }
                    argmax(&scores)
                })
                .collect();
            let changed = self.labels.as_ref() != Some(&new);
            self.labels = Some(new);
            StepOutcome {
                elbo: self.elbo(),
                changed,
                empty_flag: false,
            }
        } else {
            let lm = self.label_matrix().expect("labels assigned before means");
            let st = posterior_stats(self.data, &lm.to_soft());
            for c in 0..k {
                if !st.empty[c] {
                    self.mu[c] = st.mu_bar[c];
                    self.s2[c] = st.weight_sum[c].recip();
                }
            }
            StepOutcome {
                elbo: self.elbo(),
                changed: true,
                empty_flag: st.any_empty(),
            }
        }
    }

    fn snapshot(&self) -> Vec<f64> {
        self.mu
            .iter()
            .flatten()
            .copied()
            .chain(self.s2.iter().copied())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct HardResult {
    pub means: Vec<[f64; 2]>,
    pub s2: Vec<f64>,
    pub labels: LabelMatrix,
    pub trace: Trace,
}

fn run_hard(mut m: HardAssign<'_>, rule: &StoppingRule, opts: engine::RunOptions) -> Result<HardResult> {
    let trace = engine::run_with(&mut m, rule, opts)?;
    Ok(HardResult {
        labels: m.label_matrix().expect("at least one label step"),
        means: m.mu,
        s2: m.s2,
        trace,
    })
}

/// k-means (ICM on this model). Converges on a label step that changes nothing.
pub fn kmeans_run(data: &DataSet, init: &Init, rule: &StoppingRule) -> Result<HardResult> {
    run_hard(HardAssign::kmeans(data, init), rule, engine::RunOptions::default())
}

/// EM₁ with hard labels and variance-penalised assignment.
pub fn em1_run(data: &DataSet, init: &Init, rule: &StoppingRule) -> Result<HardResult> {
    run_hard(HardAssign::em1(data, init), rule, engine::RunOptions::default())
}
