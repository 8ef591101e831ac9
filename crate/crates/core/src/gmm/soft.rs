//! Soft-assignment algorithms: EM₂ (point-mass means, Multinomial labels) and VB
//! (Gaussian means, Multinomial labels).

use super::{posterior_stats, DataSet, Init, SoftLabelMatrix};
use crate::engine::{self, ConditionalModel, StepOutcome, StoppingRule, Trace};
use crate::error::Result;
use crate::numeric::{log_norm_iso, softmax_in_place, xlogx, LN_2PI_E};

/// Slot 0 updates the responsibilities, slot 1 the mean factor.
///
/// VB weights `p̃ₖᵢ ∝ N(xᵢ; μ̃ₖ, I₂) exp(−σ̃ₖ²)`, EM₂ drops the `exp(−σ̃ₖ²)` factor and
/// keeps the means as point estimates.
#[derive(Clone, Debug)]
pub struct SoftAssign<'a> {
    data: &'a DataSet,
    variational: bool,
    pub mu: Vec<[f64; 2]>,
    pub s2: Vec<f64>,
    pub p: Option<SoftLabelMatrix>,
}

impl<'a> SoftAssign<'a> {
    pub fn vb(data: &'a DataSet, init: &Init) -> Self {
        Self::new(data, init, true)
    }

    pub fn em2(data: &'a DataSet, init: &Init) -> Self {
        Self::new(data, init, false)
    }

    fn new(data: &'a DataSet, init: &Init, variational: bool) -> Self {
        assert_eq!(init.k(), data.k, "initialisation must have K clusters");
        Self {
            data,
            variational,
            mu: init.means.clone(),
            s2: init.s2.clone(),
            p: None,
        }
    }

    /// VB: `Σ p̃(ln N(x; μ̃) − σ̃²) + Σₖ ln(2πe σ̃ₖ²) − Σ p̃ ln p̃`.
    /// EM₂: `Σ p̃ ln N(x; μ̂) − Σ p̃ ln p̃`.
    pub fn elbo(&self) -> f64 {
        let Some(p) = &self.p else {
            return f64::NAN;
        };
        let mut e = 0.0;
        for (i, &x) in self.data.x.iter().enumerate() {
            for (c, &pk) in p.column(i).iter().enumerate() {
                if pk > 0.0 {
                    let pen = if self.variational { self.s2[c] } else { 0.0 };
                    e += pk * (log_norm_iso(x, self.mu[c]) - pen) - xlogx(pk);
                }
            }
        }
        if self.variational {
            e += self.s2.iter().map(|s| LN_2PI_E + s.ln()).sum::<f64>();
        }
        e
    }
}

impl ConditionalModel for SoftAssign<'_> {
    fn slots(&self) -> usize {
        2
    }

    fn update(&mut self, slot: usize) -> StepOutcome {
        let k = self.data.k;
        let mut empty_flag = false;
        if slot == 0 {
            let mut p = Vec::with_capacity(k * self.data.n());
            let mut col = vec![0.0; k];
            for &x in &self.data.x {
                for (c, v) in col.iter_mut().enumerate() {
                    *v = log_norm_iso(x, self.mu[c]) - if self.variational { self.s2[c] } else { 0.0 };
                }
                softmax_in_place(&mut col);
                p.extend_from_slice(&col);
            }
            self.p = Some(SoftLabelMatrix::from_raw(k, p));
        } else {
            let p = self.p.as_ref().expect("responsibilities before means");
            let st = posterior_stats(self.data, p);
            for c in 0..k {
                if st.empty[c] {
                    empty_flag = true;
                } else {
                    self.mu[c] = st.mu_bar[c];
                    if self.variational {
                        self.s2[c] = st.weight_sum[c].recip();
                    }
                }
            }
        }
        StepOutcome {
            elbo: self.elbo(),
            changed: true,
            empty_flag,
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
pub struct SoftResult {
    pub means: Vec<[f64; 2]>,
    pub s2: Vec<f64>,
    pub p: SoftLabelMatrix,
    pub trace: Trace,
}

fn run_soft(mut m: SoftAssign<'_>, rule: &StoppingRule) -> Result<SoftResult> {
    let trace = engine::run(&mut m, rule)?;
    Ok(SoftResult {
        p: m.p.expect("at least one responsibility step"),
        means: m.mu,
        s2: m.s2,
        trace,
    })
}

pub fn em2_run(data: &DataSet, init: &Init, rule: &StoppingRule) -> Result<SoftResult> {
    run_soft(SoftAssign::em2(data, init), rule)
}

pub fn vb_run(data: &DataSet, init: &Init, rule: &StoppingRule) -> Result<SoftResult> {
    run_soft(SoftAssign::vb(data, init), rule)
}
