//! Monte Carlo reproduction of the snack-choice simulations, and the
//! end-to-end neural-to-behavioral identification pipeline.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::axioms::{audit, AxiomReport, Tolerances};
use crate::chain::{build_exploration, stationary, FastRunner, MarkovKernel, Topology};
use crate::choice::{all_menus, ChoiceDistribution, Menu, TimeGrid, TimePoint, Universe};
use crate::dataset::ChoiceDataset;
use crate::ddm::{is_transitive, zeta_from_global_prior, DdmSpec, GibbsPrior, DEFAULT_DT, TRANSITIVITY_TOL};
use crate::error::{Error, Result};
use crate::identify::{cross_validate, identify, CrossValidationReport, IdentifiedParams, NeuralParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Low and high pressure thresholds and their deadlines in seconds.
pub const BETA_HIGH_PRESSURE: f64 = 0.849;
pub const BETA_LOW_PRESSURE: f64 = 1.442;
pub const DEADLINE_HIGH_PRESSURE: f64 = 4.0;
pub const DEADLINE_LOW_PRESSURE: f64 = 12.0;

/// Calibrated range of neural utilities once shifted to start at zero.
pub const CALIBRATED_V_RANGE: [f64; 2] = [0.0, 7.071];

pub const PRESET_MENU_SIZE: usize = 8;
pub const PRESET_REPLICATIONS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityRule {
    /// `v(a) = a − (n−1)/2`.
    Linear,
    /// `v(a) = |a − (n−1)/2|`.
    Vee,
    Explicit(Vec<f64>),
}

impl UtilityRule {
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        let mid = (n as f64 - 1.0) / 2.0;
        match self {
            UtilityRule::Linear => Ok((0..n).map(|a| a as f64 - mid).collect()),
            UtilityRule::Vee => Ok((0..n).map(|a| (a as f64 - mid).abs()).collect()),
            UtilityRule::Explicit(v) if v.len() == n => Ok(v.clone()),
            UtilityRule::Explicit(v) => Err(Error::invalid(format!(
                "{} explicit utilities for a menu of {n}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasSource {
    #[default]
    Zero,
    /// Initial conditions built from a global prior (weights, normalized).
    FromPrior(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Algorithm,
    /// Draws straight from the stationary target; isolates sampling noise.
    Control,
}

fn default_replications() -> u64 {
    PRESET_REPLICATIONS
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub v: UtilityRule,
    pub beta: f64,
    #[serde(default)]
    pub zeta: BiasSource,
    #[serde(default)]
    pub topology: Topology,
    #[serde(default)]
    pub rho: f64,
    /// Initial distribution weights; uniform when absent.
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    pub deadline: f64,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub mode: Mode,
    /// Declared range for `v`, checked after validation.
    #[serde(default)]
    pub v_range: Option<[f64; 2]>,
}

/// Everything a run needs, built from a config.
pub struct Instance {
    pub spec: DdmSpec,
    pub menu: Menu,
    pub exploration: MarkovKernel,
    pub mu: ChoiceDistribution,
    pub target: ChoiceDistribution,
}

impl SimulationConfig {
    pub fn preset(id: u8) -> Result<Self> {
        let (v, beta, deadline) = match id {
            1 => (UtilityRule::Linear, BETA_HIGH_PRESSURE, DEADLINE_HIGH_PRESSURE),
            2 => (UtilityRule::Vee, BETA_HIGH_PRESSURE, DEADLINE_HIGH_PRESSURE),
            3 => (UtilityRule::Linear, BETA_LOW_PRESSURE, DEADLINE_LOW_PRESSURE),
            4 => (UtilityRule::Vee, BETA_LOW_PRESSURE, DEADLINE_LOW_PRESSURE),
            _ => return Err(Error::invalid(format!("unknown simulation {id}; expected 1 to 4"))),
        };
        let half = (PRESET_MENU_SIZE as f64 - 1.0) / 2.0;
        Ok(SimulationConfig {
            n: PRESET_MENU_SIZE,
            v,
            beta,
            zeta: BiasSource::Zero,
            topology: Topology::Uniform,
            rho: 0.0,
            mu: None,
            deadline,
            replications: PRESET_REPLICATIONS,
            seed: 0,
            dt: DEFAULT_DT,
            mode: Mode::Algorithm,
            v_range: Some([CALIBRATED_V_RANGE[0] - half, CALIBRATED_V_RANGE[1] - half]),
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("simulations need at least two alternatives"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("at least one replication is required"));
        }
        if !(self.deadline.is_finite() && self.deadline > 0.0) {
            return Err(Error::invalid(format!("deadline {} is not a positive real", self.deadline)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("step {} is not a positive real", self.dt)));
        }
        let v = self.v.values(self.n)?;
        if let Some([lo, hi]) = self.v_range {
            if let Some(x) = v.iter().find(|x| **x < lo || **x > hi) {
                return Err(Error::invalid(format!("utility {x} outside the declared range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn instance(&self) -> Result<Instance> {
        self.validate()?;
        let v = self.v.values(self.n)?;
        let labels: Vec<String> = (0..self.n).map(|a| a.to_string()).collect();
        let spec = match &self.zeta {
            BiasSource::Zero => DdmSpec::unbiased(labels.clone(), v, self.beta)?,
            BiasSource::FromPrior(w) => {
                let prior = GibbsPrior::from_weights(labels.clone(), w)?;
                zeta_from_global_prior(&v, self.beta, &prior)?
            }
        };
        let menu = Menu::new((0..self.n).collect(), self.n)?;
        let exploration = build_exploration(&menu, &self.topology, self.rho)?;
        let mu = match &self.mu {
            None => ChoiceDistribution::from_weights(menu.clone(), vec![1.0; self.n])?,
            Some(w) => ChoiceDistribution::from_weights(menu.clone(), w.clone())
                .map_err(|e| Error::InvalidNeuralBias(e.to_string()))?,
        };
        let target = stationary(&spec, &menu)?;
        Ok(Instance { spec, menu, exploration, mu, target })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub version: String,
    pub seed: u64,
    pub config: SimulationConfig,
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    pub empirical: Vec<f64>,
    pub target: Vec<f64>,
    pub tv: f64,
    pub chi2: f64,
    pub mean_iterations: f64,
    pub median_iterations: f64,
    /// Mean duration of the comparisons that finished before the deadline.
    pub mean_rt: Option<f64>,
}

impl SimulationReport {
    pub fn empirical_distribution(&self) -> Result<ChoiceDistribution> {
        let menu = Menu::new((0..self.counts.len()).collect(), self.counts.len())?;
        ChoiceDistribution::new(menu, self.empirical.clone())
    }

    /// Columns: alternative, count, empirical, target.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alternative,count,empirical,target\n");
        for i in 0..self.counts.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.labels[i], self.counts[i], self.empirical[i], self.target[i]
            ));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Stream for replication `index`: the master seed picks the key, the
/// index picks the ChaCha stream.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn median(mut xs: Vec<u32>) -> f64 {
    xs.sort_unstable();
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m] as f64
    } else {
        (xs[m - 1] as f64 + xs[m] as f64) / 2.0
    }
}

/// `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Pearson statistic `Σ (count − N q)² / (N q)`.
pub fn chi_square(counts: &[u64], q: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(q)
        .map(|(&c, &p)| {
            let e = total as f64 * p;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// Runs the configured number of replications in parallel. Replication `i`
/// uses [`replication_rng`]`(seed, i)`, so the report does not depend on
/// scheduling.
pub fn simulate(cfg: &SimulationConfig) -> Result<SimulationReport> {
    let inst = cfg.instance()?;
    let n = cfg.n;
    let outcomes: Vec<Result<(usize, u32, u32, u64)>> = match cfg.mode {
        Mode::Algorithm => {
            let runner = FastRunner::new(&inst.spec, &inst.exploration, &inst.mu, cfg.deadline, cfg.dt)?;
            (0..cfg.replications)
                .into_par_iter()
                .map(|i| {
                    let mut rng = replication_rng(cfg.seed, i);
                    runner
                        .choose(&mut rng)
                        .map(|s| (s.choice, s.iterations, s.completed, s.completed_steps))
                        .map_err(|e| Error::Replication { index: i, source: Box::new(e) })
                })
                .collect()
        }
        Mode::Control => {
            let draw = WeightedIndex::new(inst.target.probs())
                .map_err(|e| Error::invalid(format!("target distribution: {e}")))?;
            (0..cfg.replications)
                .into_par_iter()
                .map(|i| Ok((draw.sample(&mut replication_rng(cfg.seed, i)), 0, 0, 0)))
                .collect()
        }
    };
    let mut counts = vec![0u64; n];
    let mut iterations = Vec::with_capacity(outcomes.len());
    let (mut completed, mut steps) = (0u64, 0u64);
    for o in outcomes {
        let (choice, it, done, st) = o?;
        counts[choice] += 1;
        iterations.push(it);
        completed += done as u64;
        steps += st;
    }
    let total = cfg.replications as f64;
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let target = inst.target.probs().to_vec();
    Ok(SimulationReport {
        version: VERSION.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        labels: inst.spec.labels().to_vec(),
        tv: total_variation(&empirical, &target),
        chi2: chi_square(&counts, &target),
        mean_iterations: iterations.iter().map(|&x| x as f64).sum::<f64>() / total,
        median_iterations: median(iterations),
        mean_rt: (completed > 0).then(|| steps as f64 * cfg.dt / completed as f64),
        counts,
        empirical,
        target,
    })
}

/// One of the four calibrated simulations with the given seed.
pub fn reproduce(id: u8, seed: u64) -> Result<SimulationReport> {
    let mut cfg = SimulationConfig::preset(id)?;
    cfg.seed = seed;
    simulate(&cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub labels: Option<Vec<String>>,
    pub v: Vec<f64>,
    pub deadlines: Vec<f64>,
    /// Threshold at each deadline.
    pub beta: Vec<f64>,
    /// Global prior weights, also used as the initial distribution; uniform
    /// when absent.
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
    #[serde(default = "default_pipeline_tol")]
    pub tolerance: f64,
}

fn default_pipeline_tol() -> f64 {
    1e-9
}

impl PipelineConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub dataset: ChoiceDataset,
    pub axioms: Vec<AxiomReport>,
    pub axioms_passed: bool,
    pub identified: Option<IdentifiedParams>,
    pub cross_validation: Option<CrossValidationReport>,
}

impl PipelineReport {
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "version": VERSION,
            "config": self.config,
            "axioms_passed": self.axioms_passed,
            "axioms": self.axioms,
            "identified": self.identified.as_ref().map(IdentifiedParams::to_json),
            "cross_validation": self.cross_validation,
        })
    }
}

/// Builds the stationary choice tables of the neural process at every
/// deadline (and `μ` at the zero point), audits them, identifies the
/// softmax parameters and maps them back onto `(v, μ, β)`.
pub fn pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    let n = cfg.v.len();
    if cfg.deadlines.len() < 2 {
        return Err(Error::invalid("the pipeline needs at least two deadlines"));
    }
    if cfg.beta.len() != cfg.deadlines.len() {
        return Err(Error::invalid("one threshold per deadline is required"));
    }
    let labels = cfg.labels.clone().unwrap_or_else(|| (0..n).map(|a| a.to_string()).collect());
    let universe = Universe::new(labels.clone())?;
    let grid = TimeGrid::new(cfg.deadlines.clone())?;
    let prior = match &cfg.prior {
        Some(w) => GibbsPrior::from_weights(labels.clone(), w)?,
        None => GibbsPrior::uniform(labels.clone())?,
    };
    let mut dataset = ChoiceDataset::exact(universe, grid.clone());
    let menus = all_menus(n);
    for menu in &menus {
        let w: Vec<f64> = menu.members().iter().map(|&a| prior.probs()[a]).collect();
        dataset.insert(TimePoint::Zero, ChoiceDistribution::from_weights(menu.clone(), w)?)?;
    }
    for (i, &beta) in cfg.beta.iter().enumerate() {
        let spec = zeta_from_global_prior(&cfg.v, beta, &prior)?;
        let report = is_transitive(&spec, TRANSITIVITY_TOL)?;
        if !report.transitive {
            return Err(Error::Intransitive {
                triple: report.worst_triple.unwrap_or_default(),
                residual: report.worst_residual,
            });
        }
        for menu in &menus {
            dataset.insert(TimePoint::Deadline(i), stationary(&spec, menu)?)?;
        }
    }
    let axioms = audit(&dataset, &Tolerances::EXACT)?;
    let axioms_passed = axioms.iter().all(AxiomReport::passed);
    let mut report = PipelineReport {
        config: cfg.clone(),
        dataset,
        axioms,
        axioms_passed,
        identified: None,
        cross_validation: None,
    };
    if !axioms_passed {
        return Ok(report);
    }
    let id = identify(&report.dataset)?;
    let neural = NeuralParams { v: cfg.v.clone(), mu: prior.probs().to_vec(), beta: cfg.beta.clone() };
    report.cross_validation = Some(cross_validate(&id.params, &neural, cfg.tolerance)?);
    report.identified = Some(id);
    Ok(report)
}
