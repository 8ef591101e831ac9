//! Ternary-partition CVB anchored at one data index `j`.
//!
//! The approximation keeps `l_j` as a Multinomial with weights `p`, every other label as a
//! left-stochastic transition `W[i]` from `l_j`, and the means as Gaussians conditional on
//! `l_j = m` with parameters `μ̃ₖₘ`, `σ̃ₖₘ²`.
//!
//! - Forward step (slot 0): refit every `W[i]` and `p` given the conditional Gaussians.
//! - Reverse step (slot 1): refit the conditional Gaussians and `p` given the `W[i]`.

#![allow(clippy::needless_range_loop)]

use super::{posterior_stats, DataSet, Init, SoftLabelMatrix};
use crate::engine::{self, ConditionalModel, StepOutcome, StoppingRule, Trace};
use crate::error::{Error, Result};
use crate::numeric::{log_norm_iso, logsumexp, softmax_in_place, xlogx, LN_2PI_E};

/// State of one anchored structure. Matrices indexed `[k][m]` are stored as `k * K + m`;
/// `W[i][k][m]` as `(i * K + k) * K + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct CvbStructureState {
    pub anchor: usize,
    pub k: usize,
    pub mu_t: Vec<[f64; 2]>,
    pub s2_t: Vec<f64>,
    pub w: Vec<f64>,
    pub p: Vec<f64>,
    pub elbo: f64,
}

impl CvbStructureState {
    /// Conditional parameters all equal to the shared initialisation; `W` starts at the
    /// identity for the anchor and uniform elsewhere, `p` uniform.
    pub fn new(data: &DataSet, anchor: usize, init: &Init) -> Result<Self> {
        let k = data.k;
        if anchor >= data.n() {
            return Err(Error::InvalidInput(format!(
                "anchor {anchor} out of range for N = {}",
                data.n()
            )));
        }
        if init.k() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: init.k(),
            });
        }
        let mut mu_t = Vec::with_capacity(k * k);
        let mut s2_t = Vec::with_capacity(k * k);
        for c in 0..k {
            for _ in 0..k {
                mu_t.push(init.means[c]);
                s2_t.push(init.s2[c]);
            }
        }
        let mut w = vec![1.0 / k as f64; data.n() * k * k];
        set_identity(&mut w, anchor, k);
        Ok(Self {
            anchor,
            k,
            mu_t,
            s2_t,
            w,
            p: vec![1.0 / k as f64; k],
            elbo: f64::NAN,
        })
    }

    /// `W[i][k][m]`.
    pub fn w_at(&self, i: usize, k: usize, m: usize) -> f64 {
        self.w[(i * self.k + k) * self.k + m]
    }

    /// Conditional mean `μ̃ₖₘ`.
    pub fn mu_at(&self, k: usize, m: usize) -> [f64; 2] {
        self.mu_t[k * self.k + m]
    }

    pub fn s2_at(&self, k: usize, m: usize) -> f64 {
        self.s2_t[k * self.k + m]
    }

    /// Largest deviation from one over every column of every `W[i]` and over `p`.
    pub fn max_stochastic_error(&self) -> f64 {
        let k = self.k;
        let n = self.w.len() / (k * k);
        let mut err = (self.p.iter().sum::<f64>() - 1.0).abs();
        for i in 0..n {
            for m in 0..k {
                let s: f64 = (0..k).map(|c| self.w_at(i, c, m)).sum();
                err = err.max((s - 1.0).abs());
            }
        }
        err
    }
}

fn set_identity(w: &mut [f64], i: usize, k: usize) {
    for c in 0..k {
        for m in 0..k {
            w[(i * k + c) * k + m] = if c == m { 1.0 } else { 0.0 };
        }
    }
}

/// Engine model over one anchored structure.
#[derive(Clone, Debug)]
pub struct CvbStructure<'a> {
    data: &'a DataSet,
    pub state: CvbStructureState,
}

impl<'a> CvbStructure<'a> {
    pub fn new(data: &'a DataSet, anchor: usize, init: &Init) -> Result<Self> {
        Ok(Self {
            data,
            state: CvbStructureState::new(data, anchor, init)?,
        })
    }

    fn forward(&mut self) -> f64 {
        let k = self.state.k;
        let j = self.state.anchor;
        let st = &mut self.state;
        // Per m: Σₖ ln(2πe σ̃ₖₘ²) + ln ω̃ₘₘ(xⱼ) + Σ_{i≠j} ln Σₖ ω̃ₖₘ(xᵢ)
        let mut lz: Vec<f64> = (0..k)
            .map(|m| {
                let ent: f64 = (0..k).map(|c| LN_2PI_E + st.s2_t[c * k + m].ln()).sum();
                let own = log_norm_iso(self.data.x[j], st.mu_t[m * k + m]) - st.s2_t[m * k + m];
                ent + own
            })
            .collect();
        let mut col = vec![0.0; k];
        for (i, &x) in self.data.x.iter().enumerate() {
            if i == j {
                continue;
            }
            for m in 0..k {
                for (c, v) in col.iter_mut().enumerate() {
                    *v = log_norm_iso(x, st.mu_t[c * k + m]) - st.s2_t[c * k + m];
                }
                lz[m] += softmax_in_place(&mut col);
                for (c, &v) in col.iter().enumerate() {
                    st.w[(i * k + c) * k + m] = v;
                }
            }
        }
        let e = softmax_in_place(&mut lz);
        st.p = lz;
        e
    }

    fn reverse(&mut self) -> (f64, bool) {
        let k = self.state.k;
        let j = self.state.anchor;
        let n = self.data.n();
        let mut empty = false;
        let mut lp = vec![0.0; k];
        let mut col = Vec::with_capacity(n * k);
        for m in 0..k {
            col.clear();
            for i in 0..n {
                for c in 0..k {
                    col.push(self.state.w[(i * k + c) * k + m]);
                }
            }
            let weights = SoftLabelMatrix::from_raw(k, std::mem::take(&mut col));
            let stats = posterior_stats(self.data, &weights);
            for c in 0..k {
                let idx = c * k + m;
                lp[m] += if stats.empty[c] {
                    // Kept factor: its entropy stays in the bound.
                    empty = true;
                    LN_2PI_E + self.state.s2_t[idx].ln()
                } else {
                    self.state.mu_t[idx] = stats.mu_bar[c];
                    self.state.s2_t[idx] = stats.weight_sum[c].recip();
                    let ent: f64 = (0..n).filter(|&i| i != j).map(|i| xlogx(weights.get(c, i))).sum();
                    stats.log_gamma[c] - ent
                };
            }
            col = weights.into_raw();
        }
        let e = logsumexp(&lp);
        for v in lp.iter_mut() {
            *v = (*v - e).exp();
        }
        self.state.p = lp;
        (e, empty)
    }
}

impl ConditionalModel for CvbStructure<'_> {
    fn slots(&self) -> usize {
        2
    }

    fn update(&mut self, slot: usize) -> StepOutcome {
        let (elbo, empty_flag) = if slot == 0 {
            (self.forward(), false)
        } else {
            self.reverse()
        };
        self.state.elbo = elbo;
        StepOutcome {
            elbo,
            changed: true,
            empty_flag,
        }
    }

    fn snapshot(&self) -> Vec<f64> {
        let s = &self.state;
        s.mu_t.iter().flatten().chain(&s.s2_t).chain(&s.p).copied().collect()
    }
}

/// Output of one anchored run plus its estimates.
#[derive(Clone, Debug)]
pub struct CvbAnchorResult {
    pub anchor: usize,
    pub state: CvbStructureState,
    pub trace: Trace,
    /// `Υ̂(j) = Σₘ pₘ Υ̃ₘ`.
    pub means: Vec<[f64; 2]>,
    /// `q̃ᵢ(j) = W[i] p`.
    pub q: SoftLabelMatrix,
}

impl CvbAnchorResult {
    pub fn elbo(&self) -> f64 {
        self.trace.final_elbo()
    }
}

pub fn cvb_run(data: &DataSet, anchor: usize, init: &Init, rule: &StoppingRule) -> Result<CvbAnchorResult> {
    cvb_run_with(data, anchor, init, rule, engine::RunOptions::default())
}

pub fn cvb_run_with(
    data: &DataSet,
    anchor: usize,
    init: &Init,
    rule: &StoppingRule,
    opts: engine::RunOptions,
) -> Result<CvbAnchorResult> {
    let mut m = CvbStructure::new(data, anchor, init)?;
    let trace = engine::run_with(&mut m, rule, opts)?;
    let (means, q) = cvb_marginal_estimates(&m.state);
    Ok(CvbAnchorResult {
        anchor,
        state: m.state,
        trace,
        means,
        q,
    })
}

/// Mean estimates `Σₘ pₘ μ̃ₖₘ` and label marginals `q̃ᵢ = W[i] p`.
pub fn cvb_marginal_estimates(state: &CvbStructureState) -> (Vec<[f64; 2]>, SoftLabelMatrix) {
    let k = state.k;
    let n = state.w.len() / (k * k);
    let means = (0..k)
        .map(|c| {
            let mut v = [0.0; 2];
            for m in 0..k {
                let mu = state.mu_at(c, m);
                v[0] += state.p[m] * mu[0];
                v[1] += state.p[m] * mu[1];
            }
            v
        })
        .collect();
    let mut q = Vec::with_capacity(n * k);
    for i in 0..n {
        for c in 0..k {
            q.push((0..k).map(|m| state.w_at(i, c, m) * state.p[m]).sum());
        }
    }
    (means, SoftLabelMatrix::from_raw(k, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn instance() -> super::super::Generated {
        super::super::generate_data(4, 2.0, 30, &mut Stream::new(11, 0)).unwrap()
    }

    #[test]
    fn single_cluster_is_exact() {
        let d = DataSet::new(vec![[0.0, 1.0], [2.0, 3.0], [-1.0, 0.5]], 1).unwrap();
        let init = Init {
            means: vec![[0.0, 0.0]],
            s2: vec![1.0],
        };
        let r = cvb_run(&d, 1, &init, &StoppingRule::default()).unwrap();
        assert_eq!(r.state.p, vec![1.0]);
        assert!(r.state.w.iter().all(|&v| v == 1.0));
        let vb = super::super::vb_run(&d, &init, &StoppingRule::default()).unwrap();
        assert!((r.means[0][0] - vb.means[0][0]).abs() < 1e-12);
        assert!((r.elbo() - vb.trace.final_elbo()).abs() < 1e-9);
    }

    #[test]
    fn first_forward_step_is_independent_of_anchor_label() {
        let g = instance();
        let mut m = CvbStructure::new(&g.data, 4, &Init::corners(4)).unwrap();
        m.update(0);
        let s = &m.state;
        for i in (0..g.data.n()).filter(|&i| i != 4) {
            for c in 0..4 {
                for mm in 1..4 {
                    assert_eq!(s.w_at(i, c, mm), s.w_at(i, c, 0));
                }
            }
        }
        // Subsequent reverse step makes conditionals depend on the anchor label.
        m.update(1);
        assert_ne!(m.state.mu_at(0, 0), m.state.mu_at(0, 1));
    }

    #[test]
    fn stochastic_invariants_hold_after_every_step() {
        let g = instance();
        let mut m = CvbStructure::new(&g.data, 0, &Init::corners(4)).unwrap();
        for slot in [0, 1, 0, 1, 0, 1] {
            m.update(slot);
            assert!(m.state.max_stochastic_error() < 1e-12);
            for c in 0..4 {
                for mm in 0..4 {
                    assert_eq!(m.state.w_at(0, c, mm), if c == mm { 1.0 } else { 0.0 });
                }
            }
        }
        let (_, q) = cvb_marginal_estimates(&m.state);
        assert!(q.max_column_error() < 1e-12);
        assert_eq!(q.column(0), &m.state.p[..]);
    }

    #[test]
    fn one_hot_p_selects_that_conditional() {
        let g = instance();
        let mut m = CvbStructure::new(&g.data, 2, &Init::corners(4)).unwrap();
        m.update(0);
        m.update(1);
        let mut st = m.state.clone();
        st.p = vec![0.0, 0.0, 1.0, 0.0];
        let (means, _) = cvb_marginal_estimates(&st);
        for c in 0..4 {
            assert_eq!(means[c], st.mu_at(c, 2));
        }
    }

    #[test]
    fn trace_is_monotone() {
        let g = instance();
        for j in [0, 7, 29] {
            let r = cvb_run(&g.data, j, &Init::corners(4), &StoppingRule::default()).unwrap();
            assert!(r.trace.is_monotone(1e-9));
            assert!(r.trace.converged);
        }
    }

    #[test]
    fn bad_anchor_is_rejected() {
        let g = instance();
        assert!(CvbStructure::new(&g.data, 30, &Init::corners(4)).is_err());
    }
}
