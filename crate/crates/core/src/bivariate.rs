//! Closed-form CVB and VB for a zero-mean correlated bivariate Gaussian.
//!
//! The approximation keeps the form `f̃ = f̃₁ · f̃₂|₁` with a Gaussian conditional of slope
//! `β̃₂|₁` and scale `σ̃₂|₁`. Updating θ₁ replaces `f̃₁` by its CVA optimum, then the pair
//! `(ρ̃, σ̃₂)` is re-solved so the conditional factor is unchanged as a function. The next
//! iteration does the same with the roles of θ₁ and θ₂ swapped. VB is the special case
//! `ρ̃ = 0`.

use crate::divergence::{kl_gauss, BivariateGaussian, Gaussian};
use crate::engine::{self, ConditionalModel, StepOutcome, StoppingRule, Trace};
use crate::error::{Error, Result};

/// Target `N(0, Σ)` with scales `sigma1`, `sigma2` and correlation `rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BivarTrueModel {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl BivarTrueModel {
    pub fn new(sigma1: f64, sigma2: f64, rho: f64) -> Result<Self> {
        BivariateGaussian::zero_mean(sigma1, sigma2, rho)?;
        Ok(Self { sigma1, sigma2, rho })
    }

    /// `β₂|₁ = ρ σ₂ / σ₁`.
    pub fn beta(&self) -> f64 {
        self.rho * self.sigma2 / self.sigma1
    }

    /// `σ₂|₁ = σ₂ √(1 − ρ²)`.
    pub fn cond_sd(&self) -> f64 {
        self.sigma2 * (1.0 - self.rho * self.rho).sqrt()
    }

    pub fn swapped(&self) -> Self {
        Self {
            sigma1: self.sigma2,
            sigma2: self.sigma1,
            rho: self.rho,
        }
    }

    pub fn gaussian(&self) -> BivariateGaussian {
        BivariateGaussian {
            mean: [0.0, 0.0],
            sd: [self.sigma1, self.sigma2],
            rho: self.rho,
        }
    }
}

/// Current approximation `N(0, Σ̃)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvbBivarState {
    pub sigma1_t: f64,
    pub sigma2_t: f64,
    pub rho_t: f64,
    /// Marginal updated by the next iteration: 0 for θ₁, 1 for θ₂.
    pub next: usize,
}

impl CvbBivarState {
    pub fn new(sigma1_t: f64, sigma2_t: f64, rho_t: f64) -> Result<Self> {
        BivariateGaussian::zero_mean(sigma1_t, sigma2_t, rho_t)?;
        Ok(Self {
            sigma1_t,
            sigma2_t,
            rho_t,
            next: 0,
        })
    }

    pub fn beta_t(&self) -> f64 {
        self.rho_t * self.sigma2_t / self.sigma1_t
    }

    pub fn cond_sd_t(&self) -> f64 {
        self.sigma2_t * (1.0 - self.rho_t * self.rho_t).sqrt()
    }

    pub fn swapped(&self) -> Self {
        Self {
            sigma1_t: self.sigma2_t,
            sigma2_t: self.sigma1_t,
            rho_t: self.rho_t,
            next: 1 - self.next,
        }
    }

    pub fn gaussian(&self) -> BivariateGaussian {
        BivariateGaussian {
            mean: [0.0, 0.0],
            sd: [self.sigma1_t, self.sigma2_t],
            rho: self.rho_t,
        }
    }

    /// Marginal variances `(σ̃₁², σ̃₂²)`.
    pub fn variances(&self) -> (f64, f64) {
        (self.sigma1_t * self.sigma1_t, self.sigma2_t * self.sigma2_t)
    }
}

/// `KL(f̃‖f)` for the current state.
pub fn kl_state(state: &CvbBivarState, model: &BivarTrueModel) -> f64 {
    kl_gauss(&Gaussian::from(state.gaussian()), &Gaussian::from(model.gaussian())).expect("validated Gaussians")
}

/// CVA update of θ₁'s marginal with the conditional `f̃₂|₁` held fixed.
///
/// Returns the new scale `σ̃₁` and `ln ζ₁`, where `−ln ζ₁` is the KL after the update.
pub fn cva_update_sigma1(state: &CvbBivarState, model: &BivarTrueModel) -> (f64, f64) {
    let b = model.beta();
    let sc = model.cond_sd();
    let bt = state.beta_t();
    let sct = state.cond_sd_t();
    let s1 = model.sigma1;
    let s2 = model.sigma2;
    let one_r2 = 1.0 - model.rho * model.rho;
    let prec = 1.0 / (s1 * s1) + (bt - b) * (bt - b) / (s2 * s2 * one_r2);
    let sigma1_new = prec.sqrt().recip();
    let log_zeta = (sigma1_new / s1).ln() + (sct / sc).ln() + (sc * sc - sct * sct) / (2.0 * sc * sc);
    (sigma1_new, log_zeta)
}

/// Re-solve `(ρ̃, σ̃₂)` after `σ̃₁` moved to `sigma1_new`, keeping `β̃₂|₁` and `σ̃₂|₁`.
///
/// Only `ρ̃²` is determined; the sign of the incoming `ρ̃` is kept.
pub fn reverse_update(state: &CvbBivarState, sigma1_new: f64) -> CvbBivarState {
    let r0 = state.rho_t;
    let r02 = r0 * r0;
    let ratio = state.sigma1_t / sigma1_new;
    let rho2 = r02 / (r02 + ratio * ratio * (1.0 - r02));
    let sigma2_t = state.sigma2_t * (r02 / (ratio * ratio) + 1.0 - r02).sqrt();
    CvbBivarState {
        sigma1_t: sigma1_new,
        sigma2_t,
        rho_t: if r0 == 0.0 { 0.0 } else { rho2.sqrt().copysign(r0) },
        next: state.next,
    }
}

/// Bivariate CVB as an engine model. Slot 0 updates θ₁, slot 1 updates θ₂; the ELBO is
/// `−KL(f̃‖f)` (the log evidence of a normalised target is zero).
#[derive(Clone, Debug)]
pub struct BivariateCvb {
    pub model: BivarTrueModel,
    pub state: CvbBivarState,
}

impl BivariateCvb {
    pub fn new(model: BivarTrueModel, init: CvbBivarState) -> Self {
        Self { model, state: init }
    }
}

impl ConditionalModel for BivariateCvb {
    fn slots(&self) -> usize {
        2
    }

    fn update(&mut self, slot: usize) -> StepOutcome {
        let before = self.state;
        let (model, state) = if slot == 0 {
            (self.model, self.state)
        } else {
            (self.model.swapped(), self.state.swapped())
        };
        let (s_new, log_zeta) = cva_update_sigma1(&state, &model);
        let mut next = reverse_update(&state, s_new);
        if slot == 1 {
            next = next.swapped();
        }
        next.next = 1 - slot;
        self.state = next;
        StepOutcome {
            elbo: log_zeta,
            changed: self.state.sigma1_t != before.sigma1_t
                || self.state.sigma2_t != before.sigma2_t
                || self.state.rho_t != before.rho_t,
            empty_flag: false,
        }
    }

    fn initial_elbo(&self) -> Option<f64> {
        Some(-kl_state(&self.state, &self.model))
    }

    fn snapshot(&self) -> Vec<f64> {
        vec![self.state.sigma1_t, self.state.sigma2_t, self.state.rho_t]
    }
}

/// Result of one bivariate run.
#[derive(Clone, Debug)]
pub struct BivariateRun {
    pub trace: Trace,
    pub state: CvbBivarState,
}

impl BivariateRun {
    pub fn kl_init(&self) -> f64 {
        -self.trace.initial_elbo.expect("bivariate runs record the initial KL")
    }

    pub fn kl_final(&self) -> f64 {
        -self.trace.final_elbo()
    }
}

pub fn run_bivariate(model: &BivarTrueModel, init: &CvbBivarState, rule: &StoppingRule) -> Result<BivariateRun> {
    run_bivariate_with(model, init, rule, engine::RunOptions::default())
}

pub fn run_bivariate_with(
    model: &BivarTrueModel,
    init: &CvbBivarState,
    rule: &StoppingRule,
    opts: engine::RunOptions,
) -> Result<BivariateRun> {
    let mut m = BivariateCvb::new(*model, *init);
    let trace = engine::run_with(&mut m, rule, opts)?;
    Ok(BivariateRun { trace, state: m.state })
}

/// Initial correlations `−1 + step·i` strictly inside `(−1, 1)`, rounded to 1e-12.
/// The default step 0.05 gives 39 points.
pub fn rho_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::InvalidInput(format!("grid step {step} outside (0, 1)")));
    }
    let n = (2.0 / step).round() as usize;
    Ok((1..n)
        .map(|i| ((-1.0 + step * i as f64) * 1e12).round() / 1e12)
        .filter(|r: &f64| r.abs() < 1.0)
        .collect())
}
