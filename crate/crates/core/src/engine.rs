//! Iterative driver shared by every model.
//!
//! A model owns a set of marginal slots. Iteration `ν` (1-based) updates slot
//! `(ν − 1) mod slots`, holding every other factor fixed, and reports the resulting ELBO.
//! The engine checks monotonicity, detects convergence and records a [`Trace`].

use crate::error::{Error, Result};

/// Absolute slack before a decrease in the ELBO is treated as a bug.
pub const ELBO_SLACK: f64 = 1e-9;

/// How a model declares convergence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    /// `0 ≤ ELBO^[ν] − ELBO^[ν−1] ≤ ε`.
    ElboDelta,
    /// An update that changed nothing (hard-assignment algorithms).
    NoChange,
}

/// What a single slot update reports back.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub elbo: f64,
    /// False when the update left the state exactly where it was.
    pub changed: bool,
    /// Some component had no mass and kept its previous parameters.
    pub empty_flag: bool,
}

/// A model whose marginals are updated one at a time with the rest held fixed.
pub trait ConditionalModel {
    /// Number of slots in the round-robin schedule.
    fn slots(&self) -> usize;

    /// Update one marginal slot in place.
    fn update(&mut self, slot: usize) -> StepOutcome;

    fn convergence(&self) -> Convergence {
        Convergence::ElboDelta
    }

    /// ELBO of the initial state when it is well defined.
    fn initial_elbo(&self) -> Option<f64> {
        None
    }

    /// Flat parameter vector for traces.
    fn snapshot(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            max_iters: 500,
        }
    }
}

impl StoppingRule {
    pub fn new(epsilon: f64, max_iters: usize) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        if max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        Ok(Self { epsilon, max_iters })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    /// 1-based iteration index.
    pub iteration: usize,
    pub slot: usize,
    pub elbo: f64,
    /// Change from the previous ELBO (`NaN` when there is none).
    pub delta: f64,
    pub empty_flag: bool,
    pub snapshot: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub initial_elbo: Option<f64>,
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    pub truncated: bool,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn final_elbo(&self) -> f64 {
        self.rows
            .last()
            .map(|r| r.elbo)
            .or(self.initial_elbo)
            .unwrap_or(f64::NAN)
    }

    pub fn elbos(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.elbo).collect()
    }

    pub fn any_empty(&self) -> bool {
        self.rows.iter().any(|r| r.empty_flag)
    }

    /// True when no ELBO falls more than `slack` below its predecessor.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let mut prev = self.initial_elbo;
        for r in &self.rows {
            if let Some(p) = prev {
                if r.elbo < p - slack {
                    return false;
                }
            }
            prev = Some(r.elbo);
        }
        true
    }

    /// True iff every recorded ELBO is at most `log_evidence + 1e-9`.
    pub fn elbo_gap_bound_check(&self, exact_log_evidence: f64) -> bool {
        self.initial_elbo
            .iter()
            .chain(self.rows.iter().map(|r| &r.elbo))
            .all(|&e| e <= exact_log_evidence + ELBO_SLACK)
    }
}

/// Options for [`run_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub snapshots: bool,
}

pub fn run<M: ConditionalModel + ?Sized>(model: &mut M, rule: &StoppingRule) -> Result<Trace> {
    run_with(model, rule, RunOptions::default())
}

/// Iterate until convergence or `max_iters`. An ELBO decrease beyond [`ELBO_SLACK`] is
/// returned as [`Error::ElboDecrease`].
pub fn run_with<M: ConditionalModel + ?Sized>(model: &mut M, rule: &StoppingRule, opts: RunOptions) -> Result<Trace> {
    let slots = model.slots();
    if slots == 0 {
        return Err(Error::InvalidInput("model has an empty slot schedule".into()));
    }
    let mode = model.convergence();
    let mut trace = Trace {
        initial_elbo: model.initial_elbo(),
        ..Trace::default()
    };
    let mut prev = trace.initial_elbo;
    for iteration in 1..=rule.max_iters {
        let slot = (iteration - 1) % slots;
        let out = model.update(slot);
        let delta = prev.map_or(f64::NAN, |p| out.elbo - p);
        if delta < -ELBO_SLACK {
            return Err(Error::ElboDecrease {
                iteration,
                slot,
                decrease: -delta,
            });
        }
        trace.rows.push(TraceRow {
            iteration,
            slot,
            elbo: out.elbo,
            delta,
            empty_flag: out.empty_flag,
            snapshot: opts.snapshots.then(|| model.snapshot()),
        });
        prev = Some(out.elbo);
        let done = match mode {
            Convergence::ElboDelta => delta >= 0.0 && delta <= rule.epsilon,
            Convergence::NoChange => !out.changed,
        };
        if done {
            trace.converged = true;
            return Ok(trace);
        }
    }
    trace.truncated = true;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ELBO climbs geometrically towards zero, one slot per step.
    struct Geometric {
        gap: f64,
        rate: f64,
    }

    impl ConditionalModel for Geometric {
        fn slots(&self) -> usize {
            2
        }
        fn update(&mut self, _slot: usize) -> StepOutcome {
            self.gap *= self.rate;
            StepOutcome {
                elbo: -self.gap,
                changed: true,
                empty_flag: false,
            }
        }
        fn initial_elbo(&self) -> Option<f64> {
            Some(-self.gap)
        }
        fn snapshot(&self) -> Vec<f64> {
            vec![self.gap]
        }
    }

    struct Decreasing(f64);

    impl ConditionalModel for Decreasing {
        fn slots(&self) -> usize {
            1
        }
        fn update(&mut self, _slot: usize) -> StepOutcome {
            self.0 -= 1.0;
            StepOutcome {
                elbo: self.0,
                changed: true,
                empty_flag: false,
            }
        }
    }

    #[test]
    fn fixed_point_converges_immediately() {
        let mut m = Geometric { gap: 0.0, rate: 0.5 };
        let t = run(&mut m, &StoppingRule::default()).unwrap();
        assert_eq!(t.iterations(), 1);
        assert!(t.converged);
        assert_eq!(t.rows[0].delta, 0.0);
    }

    #[test]
    fn geometric_model_stops_when_delta_is_small() {
        let mut m = Geometric { gap: 1.0, rate: 0.5 };
        let t = run_with(&mut m, &StoppingRule::default(), RunOptions { snapshots: true }).unwrap();
        // Deltas 0.5, 0.25, ... first ≤ 0.01 is 2^-7.
        assert_eq!(t.iterations(), 7);
        assert!(t.converged && !t.truncated);
        assert!(t.is_monotone(ELBO_SLACK));
        let last = t.rows.last().unwrap();
        assert!(last.delta >= 0.0 && last.delta <= 0.01);
        assert_eq!(last.snapshot.as_deref(), Some(&[2f64.powi(-7)][..]));
        assert_eq!(
            t.rows.iter().map(|r| r.slot).collect::<Vec<_>>(),
            vec![0, 1, 0, 1, 0, 1, 0]
        );
    }

    #[test]
    fn truncation_is_flagged() {
        let mut m = Geometric { gap: 1.0, rate: 0.999 };
        let t = run(&mut m, &StoppingRule::new(1e-9, 5).unwrap()).unwrap();
        assert!(t.truncated && !t.converged);
        assert_eq!(t.iterations(), 5);
    }

    #[test]
    fn decrease_is_a_hard_error() {
        let mut m = Decreasing(0.0);
        let err = run(&mut m, &StoppingRule::default()).unwrap_err();
        assert!(matches!(err, Error::ElboDecrease { iteration: 2, .. }));
    }

    #[test]
    fn gap_bound() {
        let t = Trace {
            initial_elbo: Some(-3.0),
            rows: vec![TraceRow {
                iteration: 1,
                slot: 0,
                elbo: -1.0,
                delta: 2.0,
                empty_flag: false,
                snapshot: None,
            }],
            converged: true,
            truncated: false,
        };
        assert!(t.elbo_gap_bound_check(-1.0));
        assert!(!t.elbo_gap_bound_check(-1.1));
    }

    #[test]
    fn rule_validation() {
        assert!(StoppingRule::new(0.0, 10).is_err());
        assert!(StoppingRule::new(0.01, 0).is_err());
    }
}
