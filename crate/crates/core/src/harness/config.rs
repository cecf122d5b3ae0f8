use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acq_optimizer::InnerOptConfig;
use crate::acquisition::{AcquisitionKind, AcquisitionSpec};
use crate::benchmarks::{metric_by_name, problem_by_name, DurationModel, FomSpec, Metric, Problem};
use crate::design::InitialDesign;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::FitConfig;
use crate::scheduler::{Regime, RunConfig};

/// Algorithm variants compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    Ei,
    Lcb,
    Pbo,
    Phcbo,
    /// Randomized weights with hallucinated pending points.
    Easybo,
    /// Randomized weights, synchronous rounds, no hallucination.
    EasyboS,
    /// Randomized weights, asynchronous, pending points ignored.
    EasyboA,
    /// Randomized weights, synchronous rounds, earlier picks of the round
    /// hallucinated.
    EasyboSp,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Ei,
        Variant::Lcb,
        Variant::Pbo,
        Variant::Phcbo,
        Variant::Easybo,
        Variant::EasyboS,
        Variant::EasyboA,
        Variant::EasyboSp,
    ];

    pub fn kind(self) -> AcquisitionKind {
        match self {
            Variant::Ei => AcquisitionKind::Ei,
            Variant::Lcb => AcquisitionKind::Lcb,
            Variant::Pbo => AcquisitionKind::Pbo,
            Variant::Phcbo => AcquisitionKind::Phcbo,
            _ => AcquisitionKind::Easybo,
        }
    }

    pub fn hallucinates(self) -> bool {
        matches!(self, Variant::Easybo | Variant::EasyboSp)
    }

    /// Whether the variant is defined under `regime`. Every EasyBO flavour
    /// reduces to the same sequential algorithm with one worker.
    pub fn supports(self, regime: Regime) -> bool {
        use Variant::*;
        match regime {
            Regime::Sequential => !matches!(self, Pbo | Phcbo),
            Regime::Sync => matches!(self, Pbo | Phcbo | EasyboS | EasyboSp),
            Regime::Async => matches!(self, Easybo | EasyboA),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ei => "EI",
            Variant::Lcb => "LCB",
            Variant::Pbo => "PBO",
            Variant::Phcbo => "PHCBO",
            Variant::Easybo => "EASYBO",
            Variant::EasyboS => "EASYBO_S",
            Variant::EasyboA => "EASYBO_A",
            Variant::EasyboSp => "EASYBO_SP",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::invalid(format!("unknown variant '{s}', expected one of {names:?}"))
            })
    }
}

/// Optional replacements for acquisition parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionOverrides {
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
    pub hc_distance: Option<f64>,
    pub hc_scale: Option<f64>,
    pub history_window: Option<usize>,
}

/// One weighted component of a custom figure of merit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomTerm {
    pub metric: String,
    pub weight: f64,
}

/// A custom figure of merit over the unit cube, built from named metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomFom {
    pub terms: Vec<FomTerm>,
}

impl CustomFom {
    fn build(&self, name: &str) -> Result<Problem> {
        let mut metrics = Vec::with_capacity(self.terms.len());
        let mut weights = Vec::with_capacity(self.terms.len());
        let mut dim = None;
        for t in &self.terms {
            let (f, d) = metric_by_name(&t.metric)
                .ok_or_else(|| Error::invalid(format!("unknown metric '{}'", t.metric)))?;
            if *dim.get_or_insert(d) != d {
                return Err(Error::invalid(format!(
                    "metric '{}' has dimension {d}, earlier metrics have {}",
                    t.metric,
                    dim.unwrap_or(d)
                )));
            }
            metrics.push(Metric {
                name: t.metric.clone(),
                f,
            });
            weights.push(t.weight);
        }
        let spec = FomSpec::new(metrics, weights)?;
        let dim = dim.expect("FomSpec::new rejects empty metric lists");
        Ok(Problem::new(
            name,
            BoxDomain::unit(dim)?,
            spec.into_objective(),
            None,
        ))
    }
}

/// One experiment: `repeats` independent runs of a variant on a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in problem name, or the label of `fom` when that is set.
    pub problem: String,
    pub fom: Option<CustomFom>,
    pub regime: Regime,
    pub variant: Variant,
    #[serde(rename = "B", alias = "batch_size")]
    pub batch_size: usize,
    pub budget: usize,
    pub n_init: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub acquisition: AcquisitionOverrides,
    /// Replaces the problem's duration model.
    pub duration: Option<DurationModel>,
    pub fit: FitConfig,
    pub inner: InnerOptConfig,
    pub refit_every: usize,
    pub initial_design: InitialDesign,
    /// Output directory; nothing is written when absent.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let run = RunConfig::default();
        Self {
            problem: "branin".into(),
            fom: None,
            regime: Regime::Async,
            variant: Variant::Easybo,
            batch_size: 5,
            budget: run.budget,
            n_init: run.n_init,
            repeats: 20,
            base_seed: 0,
            acquisition: AcquisitionOverrides::default(),
            duration: None,
            fit: run.fit,
            inner: run.inner,
            refit_every: run.refit_every,
            initial_design: run.initial_design,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Workers used by each run: 1 for the sequential regime.
    pub fn workers(&self) -> usize {
        match self.regime {
            Regime::Sequential => 1,
            _ => self.batch_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.variant.supports(self.regime) {
            return Err(Error::invalid(format!(
                "variant {} is not defined for the {} regime",
                self.variant, self.regime
            )));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be >= 1"));
        }
        if self.regime == Regime::Sequential && self.batch_size != 1 {
            return Err(Error::invalid(format!(
                "sequential runs use one worker, got B = {}",
                self.batch_size
            )));
        }
        let problem = self.problem()?;
        problem.duration_model.validate(problem.dim())?;
        self.run_config().validate(self.regime)
    }

    pub fn problem(&self) -> Result<Problem> {
        let p = match &self.fom {
            Some(fom) => fom.build(&self.problem)?,
            None => problem_by_name(&self.problem)?,
        };
        Ok(match &self.duration {
            Some(d) => p.with_duration_model(d.clone()),
            None => p,
        })
    }

    pub fn acquisition_spec(&self) -> AcquisitionSpec {
        let mut spec = AcquisitionSpec::new(self.variant.kind());
        let o = &self.acquisition;
        if let Some(v) = o.kappa {
            spec.kappa = v;
        }
        if let Some(v) = o.lambda {
            spec.lambda = v;
        }
        if o.hc_distance.is_some() {
            spec.hc_distance = o.hc_distance;
        }
        if o.hc_scale.is_some() {
            spec.hc_scale = o.hc_scale;
        }
        if let Some(v) = o.history_window {
            spec.history_window = v;
        }
        spec
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            budget: self.budget,
            n_init: self.n_init,
            batch_size: self.workers(),
            acquisition: self.acquisition_spec(),
            hallucinate: self.variant.hallucinates(),
            fit: self.fit.clone(),
            inner: self.inner.clone(),
            refit_every: self.refit_every,
            initial_design: self.initial_design,
        }
    }

    /// Short label such as `EASYBO-async-B5`.
    pub fn label(&self) -> String {
        format!("{}-{}-B{}", self.variant, self.regime, self.workers())
    }
}
