//! Experiment configuration: a TOML file with one table per concern.
//!
//! Every table is optional and falls back to the desk-scale defaults. Unknown keys are
//! rejected so a typo never silently runs the default experiment.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cvb_core::engine::StoppingRule;
use cvb_core::gmm::Algorithm;
use cvb_core::oracle::MAX_LABELINGS;
use serde::{Deserialize, Serialize};

pub const DEFAULT_RADII: [f64; 9] = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Bivariate,
    Gmm,
    OracleCheck,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Bivariate => "bivariate",
            Experiment::Gmm => "gmm",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_experiment")]
    pub experiment: Experiment,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub stopping: Stopping,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub bivariate: Bivariate,
    #[serde(default)]
    pub gmm: Gmm,
    #[serde(default)]
    pub oracle: Oracle,
}

fn default_experiment() -> Experiment {
    Experiment::Gmm
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    /// Monte Carlo runs per radius (gmm) or tiny instances (oracle-check).
    pub count: u64,
    /// Base seed; run `s` draws from stream `s` of this key.
    pub base: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { count: 200, base: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Stopping {
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for Stopping {
    fn default() -> Self {
        let r = StoppingRule::default();
        Self {
            epsilon: r.epsilon,
            max_iters: r.max_iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    /// Not echoed into summary.json, so results do not depend on where they were written.
    #[serde(skip_serializing)]
    pub dir: PathBuf,
    /// Write `trace_<id>.csv` files.
    pub traces: bool,
    /// Only seeds below this index get trace files.
    pub trace_seeds: u64,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            traces: false,
            trace_seeds: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bivariate {
    /// Target variances σ₁², σ₂² and correlation ρ.
    pub var1: f64,
    pub var2: f64,
    pub rho: f64,
    /// Starting marginal standard deviation of both approximating factors.
    pub init_sd: f64,
    pub rho_grid_step: f64,
}

impl Default for Bivariate {
    fn default() -> Self {
        Self {
            var1: 4.0,
            var2: 1.0,
            rho: 0.8,
            init_sd: 1.0,
            rho_grid_step: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gmm {
    pub k: usize,
    pub n: usize,
    pub radii: Vec<f64>,
    pub algorithms: Vec<String>,
    /// Run CVB from this many evenly spaced anchors instead of all `n`.
    pub cvb_anchor_subsample: Option<usize>,
}

impl Default for Gmm {
    fn default() -> Self {
        Self {
            k: 4,
            n: 100,
            radii: DEFAULT_RADII.to_vec(),
            algorithms: Algorithm::ALL.iter().map(|a| a.name().to_string()).collect(),
            cvb_anchor_subsample: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Oracle {
    pub k: usize,
    pub n_values: Vec<usize>,
    pub radius_min: f64,
    pub radius_max: f64,
    pub algorithms: Vec<String>,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            k: 2,
            n_values: vec![4, 6, 8],
            radius_min: 1.0,
            radius_max: 4.0,
            algorithms: Algorithm::ALL.iter().map(|a| a.name().to_string()).collect(),
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            experiment: default_experiment(),
            seeds: Seeds::default(),
            stopping: Stopping::default(),
            output: Output::default(),
            bivariate: Bivariate::default(),
            gmm: Gmm::default(),
            oracle: Oracle::default(),
        }
    }
}

fn parse_algorithms(field: &str, names: &[String]) -> Result<Vec<Algorithm>> {
    if names.is_empty() {
        bail!("config field `{field}`: list is empty");
    }
    let mut out = Vec::with_capacity(names.len());
    for n in names {
        let a: Algorithm = n.parse().with_context(|| format!("config field `{field}`"))?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out.sort();
    Ok(out)
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).context("malformed config")?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn stopping_rule(&self) -> Result<StoppingRule> {
        let s = &self.stopping;
        if !(s.epsilon > 0.0 && s.epsilon.is_finite()) {
            bail!(
                "config field `stopping.epsilon`: must be positive and finite, got {}",
                s.epsilon
            );
        }
        if s.max_iters == 0 {
            bail!("config field `stopping.max_iters`: must be at least 1");
        }
        Ok(StoppingRule::new(s.epsilon, s.max_iters)?)
    }

    pub fn gmm_algorithms(&self) -> Result<Vec<Algorithm>> {
        parse_algorithms("gmm.algorithms", &self.gmm.algorithms)
    }

    pub fn oracle_algorithms(&self) -> Result<Vec<Algorithm>> {
        parse_algorithms("oracle.algorithms", &self.oracle.algorithms)
    }

    /// Check the tables the selected experiment reads; the others are ignored.
    pub fn validate(&self) -> Result<()> {
        self.stopping_rule()?;
        match self.experiment {
            Experiment::Bivariate => {
                let b = &self.bivariate;
                for (name, v) in [
                    ("bivariate.var1", b.var1),
                    ("bivariate.var2", b.var2),
                    ("bivariate.init_sd", b.init_sd),
                ] {
                    if !(v > 0.0 && v.is_finite()) {
                        bail!("config field `{name}`: must be positive and finite, got {v}");
                    }
                }
                if !(b.rho.abs() < 1.0) {
                    bail!("config field `bivariate.rho`: must lie in (-1, 1), got {}", b.rho);
                }
                if !(b.rho_grid_step > 0.0 && b.rho_grid_step < 1.0) {
                    bail!(
                        "config field `bivariate.rho_grid_step`: must lie in (0, 1), got {}",
                        b.rho_grid_step
                    );
                }
            }
            Experiment::Gmm => {
                let g = &self.gmm;
                if self.seeds.count == 0 {
                    bail!("config field `seeds.count`: the gmm experiment needs at least one seed");
                }
                if g.k == 0 {
                    bail!("config field `gmm.k`: must be at least 1");
                }
                if g.n == 0 {
                    bail!("config field `gmm.n`: must be at least 1");
                }
                if g.radii.is_empty() {
                    bail!("config field `gmm.radii`: list is empty");
                }
                if let Some(r) = g.radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
                    bail!("config field `gmm.radii`: radius {r} is not a nonnegative number");
                }
                if let Some(s) = g.cvb_anchor_subsample {
                    if s == 0 || s > g.n {
                        bail!(
                            "config field `gmm.cvb_anchor_subsample`: must lie in 1..={}, got {s}",
                            g.n
                        );
                    }
                }
                self.gmm_algorithms()?;
            }
            Experiment::OracleCheck => {
                let o = &self.oracle;
                if self.seeds.count == 0 {
                    bail!("config field `seeds.count`: the oracle-check experiment needs at least one instance");
                }
                if o.k == 0 {
                    bail!("config field `oracle.k`: must be at least 1");
                }
                if o.n_values.is_empty() {
                    bail!("config field `oracle.n_values`: list is empty");
                }
                for &n in &o.n_values {
                    let size = (o.k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
                    if n == 0 || size > MAX_LABELINGS {
                        bail!(
                            "config field `oracle.n_values`: N = {n} gives {size} labelings, limit is 1..={MAX_LABELINGS}"
                        );
                    }
                }
                if !(o.radius_min >= 0.0 && o.radius_min <= o.radius_max && o.radius_max.is_finite()) {
                    bail!(
                        "config fields `oracle.radius_min`/`oracle.radius_max`: need 0 <= min <= max, got {} and {}",
                        o.radius_min,
                        o.radius_max
                    );
                }
                self.oracle_algorithms()?;
            }
        }
        Ok(())
    }
}
