//! Sequential, synchronous-batch and asynchronous-batch optimization loops.
//!
//! All three share one optimizer state ([`Optimizer`]) and run on an
//! [`Executor`]. With the default [`SimExecutor`] evaluations are discrete
//! events on a simulated clock, so a run is a pure function of
//! `(problem, config, seed)`.
//!
//! * **sequential**: one worker; fit, maximize, evaluate, repeat.
//! * **sync**: `B` points per round; the round ends when the slowest
//!   evaluation finishes.
//! * **async**: whenever a worker finishes, its result is added to the data
//!   and a new point is issued to it right away, conditioning on the
//!   evaluations still in flight.
//!
//! Model updates are serialized: completions are processed one at a time in
//! time order, ties broken by worker id.

mod clock;
mod executor;
mod record;

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use clock::SimClock;
pub use executor::{Completion, Executor, Job, SimExecutor, ThreadedExecutor};
pub use record::{best_curve, CurvePoint, Regime, RunEvent, RunRecord};

use crate::acq_optimizer::{maximize_acq, InnerOptConfig};
use crate::acquisition::{
    batch_slot_weights, expected_improvement, penalty_at, sample_weight, weighted, AcquisitionKind,
    AcquisitionSpec,
};
use crate::benchmarks::Problem;
use crate::design::InitialDesign;
use crate::domain::{Dataset, DesignPoint};
use crate::error::{Error, Result};
use crate::gp::{FitConfig, GpModel, KernelHyperparams};
use crate::seeds::{self, Stream};

/// Settings shared by all regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Completed evaluations, initial design included.
    pub budget: usize,
    pub n_init: usize,
    pub batch_size: usize,
    pub acquisition: AcquisitionSpec,
    /// Condition the exploration term on hallucinated observations at the
    /// points still being evaluated (async) or already chosen this round
    /// (sync).
    pub hallucinate: bool,
    pub fit: FitConfig,
    /// Screening and local-search settings; the seed is derived per
    /// suggestion and the value here is ignored.
    pub inner: InnerOptConfig,
    /// Refit hyperparameters on every `refit_every`-th model update and
    /// reuse the previous ones in between.
    pub refit_every: usize,
    pub initial_design: InitialDesign,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            budget: 150,
            n_init: 20,
            batch_size: 1,
            acquisition: AcquisitionSpec::default(),
            hallucinate: true,
            fit: FitConfig::default(),
            inner: InnerOptConfig::default(),
            refit_every: 1,
            initial_design: InitialDesign::Sobol,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, regime: Regime) -> Result<()> {
        self.acquisition.validate()?;
        self.fit.validate()?;
        self.inner.validate()?;
        if self.budget < self.n_init {
            return Err(Error::invalid(format!(
                "budget {} is smaller than n_init {}",
                self.budget, self.n_init
            )));
        }
        if self.budget > self.n_init && self.n_init < 2 {
            return Err(Error::invalid("a model needs n_init >= 2 initial points"));
        }
        if self.refit_every == 0 {
            return Err(Error::invalid("refit_every must be >= 1"));
        }
        match regime {
            Regime::Sequential => {}
            Regime::Sync => {
                if self.batch_size < 2 {
                    return Err(Error::invalid("synchronous batches need batch_size >= 2"));
                }
            }
            Regime::Async => {
                if self.batch_size == 0 {
                    return Err(Error::invalid("batch_size must be >= 1"));
                }
                if self.n_init < self.batch_size.min(self.budget) {
                    return Err(Error::invalid(format!(
                        "asynchronous runs fill the pool from the initial design: n_init {} < batch_size {}",
                        self.n_init, self.batch_size
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sequential optimization (one worker). `cfg.batch_size` is ignored.
pub fn run_sequential(problem: &Problem, cfg: &RunConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate(Regime::Sequential)?;
    let mut exec = SimExecutor::new(problem);
    drive_async(problem, cfg, seed, 1, Regime::Sequential, &mut exec)
}

/// Synchronous batches of `cfg.batch_size` points.
pub fn run_sync_batch(problem: &Problem, cfg: &RunConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate(Regime::Sync)?;
    let mut exec = SimExecutor::new(problem);
    drive_sync(problem, cfg, seed, &mut exec)
}

/// Asynchronous batch optimization over `cfg.batch_size` workers.
pub fn run_async(problem: &Problem, cfg: &RunConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate(Regime::Async)?;
    let mut exec = SimExecutor::new(problem);
    drive_async(problem, cfg, seed, cfg.batch_size, Regime::Async, &mut exec)
}

/// Runs `regime` on the simulated clock.
pub fn run(problem: &Problem, cfg: &RunConfig, regime: Regime, seed: u64) -> Result<RunRecord> {
    match regime {
        Regime::Sequential => run_sequential(problem, cfg, seed),
        Regime::Sync => run_sync_batch(problem, cfg, seed),
        Regime::Async => run_async(problem, cfg, seed),
    }
}

/// Asynchronous run on real threads; each evaluation sleeps
/// `duration * time_scale` real seconds. Timing is not reproducible.
pub fn run_async_threaded(
    problem: &Problem,
    cfg: &RunConfig,
    seed: u64,
    time_scale: f64,
) -> Result<RunRecord> {
    cfg.validate(Regime::Async)?;
    let mut exec = ThreadedExecutor::new(problem, time_scale)?;
    drive_async(problem, cfg, seed, cfg.batch_size, Regime::Async, &mut exec)
}

/// Issue-time bookkeeping carried over to the completion event.
struct IssueInfo {
    weight: Option<f64>,
    initial: bool,
    issued_after: usize,
}

/// Optimizer state shared by the regimes.
struct Optimizer<'a> {
    problem: &'a Problem,
    cfg: &'a RunConfig,
    seed: u64,
    data: Dataset,
    design: Vec<DesignPoint>,
    weight_rng: ChaCha8Rng,
    duration_rng: ChaCha8Rng,
    hyperparams: Option<KernelHyperparams>,
    model_updates: u64,
    suggestions: u64,
    issued: usize,
    issue_info: Vec<IssueInfo>,
    histories: Vec<VecDeque<DesignPoint>>,
    events: Vec<RunEvent>,
    regime: Regime,
}

impl<'a> Optimizer<'a> {
    fn new(problem: &'a Problem, cfg: &'a RunConfig, seed: u64, regime: Regime) -> Result<Self> {
        problem.duration_model.validate(problem.dim())?;
        let design = cfg.initial_design.generate(
            cfg.n_init,
            problem.dim(),
            seeds::derive(seed, Stream::InitialDesign, 0),
        )?;
        Ok(Self {
            problem,
            cfg,
            seed,
            data: Dataset::new(),
            design,
            weight_rng: seeds::rng(seeds::derive(seed, Stream::Weights, 0)),
            duration_rng: seeds::rng(seeds::derive(seed, Stream::Durations, 0)),
            hyperparams: None,
            model_updates: 0,
            suggestions: 0,
            issued: 0,
            issue_info: Vec::with_capacity(cfg.budget),
            histories: Vec::new(),
            events: Vec::with_capacity(cfg.budget),
            regime,
        })
    }

    fn context(&self, e: Error) -> Error {
        Error::Run {
            seed: self.seed,
            completed: self.data.len(),
            source: Box::new(e),
        }
    }

    /// GP on the observed data, refitting hyperparameters on schedule.
    fn model(&mut self) -> Result<GpModel> {
        let update = self.model_updates;
        self.model_updates += 1;
        let refit = update.is_multiple_of(self.cfg.refit_every as u64);
        let model = match (&self.hyperparams, refit) {
            (Some(h), false) => {
                GpModel::with_hyperparams(self.data.clone(), h.clone()).or_else(|_| {
                    GpModel::fit(
                        &self.data,
                        &self.cfg.fit,
                        seeds::derive(self.seed, Stream::Fit, update),
                        Some(h),
                    )
                })?
            }
            (warm, _) => GpModel::fit(
                &self.data,
                &self.cfg.fit,
                seeds::derive(self.seed, Stream::Fit, update),
                warm.as_ref(),
            )?,
        };
        self.hyperparams = Some(model.hyperparams().clone());
        Ok(model)
    }

    /// Maximizes the configured acquisition. `slot` / `n_slots` select the
    /// fixed weight for the slot-based criteria.
    fn propose(
        &mut self,
        model: &GpModel,
        pending: &[DesignPoint],
        slot: usize,
        n_slots: usize,
    ) -> Result<(DesignPoint, Option<f64>)> {
        let spec = &self.cfg.acquisition;
        let inner = InnerOptConfig {
            seed: seeds::derive(self.seed, Stream::Inner, self.suggestions),
            ..self.cfg.inner.clone()
        };
        self.suggestions += 1;

        let explore = if self.cfg.hallucinate && !pending.is_empty() {
            Some(model.hallucinate(pending)?)
        } else {
            None
        };
        // mean from the model, spread from the hallucinated one when present
        let moments = |q: &[f64]| match &explore {
            Some(h) => (model.mean_at(q), h.stddev_at(q)),
            None => {
                let p = model.posterior_at(q);
                (p.mean, p.stddev)
            }
        };
        let domain = &self.problem.domain;

        let (result, weight) = match spec.kind {
            // LCB minimized on the negated objective ranks points exactly as
            // UCB maximized on the objective itself.
            AcquisitionKind::Ucb | AcquisitionKind::Lcb => {
                let kappa = spec.kappa;
                let f = |q: &[f64]| {
                    let (m, s) = moments(q);
                    m + kappa * s
                };
                (maximize_acq(f, domain, &inner)?, None)
            }
            AcquisitionKind::Ei => {
                let best = self.data.best().unwrap_or(f64::NEG_INFINITY);
                let f = |q: &[f64]| {
                    let (m, s) = moments(q);
                    expected_improvement(m, s, best)
                };
                (maximize_acq(f, domain, &inner)?, None)
            }
            AcquisitionKind::Easybo => {
                let w = sample_weight(spec.lambda, &mut self.weight_rng);
                let f = |q: &[f64]| {
                    let (m, s) = moments(q);
                    weighted(m, s, w)
                };
                (maximize_acq(f, domain, &inner)?, Some(w))
            }
            AcquisitionKind::Pbo => {
                let w = batch_slot_weights(n_slots)[slot];
                let f = |q: &[f64]| {
                    let (m, s) = moments(q);
                    weighted(m, s, w)
                };
                (maximize_acq(f, domain, &inner)?, Some(w))
            }
            AcquisitionKind::Phcbo => {
                let w = batch_slot_weights(n_slots)[slot];
                let pen = spec.resolve_penalty(self.problem.dim(), self.data.range());
                let key = if spec.per_slot_history { slot } else { 0 };
                if self.histories.len() <= key {
                    self.histories.resize(key + 1, VecDeque::new());
                }
                let history: Vec<DesignPoint> = self.histories[key].iter().cloned().collect();
                let f = |q: &[f64]| {
                    let (m, s) = moments(q);
                    weighted(m, s, w) - penalty_at(q, &history, &pen)
                };
                let r = maximize_acq(f, domain, &inner)?;
                let h = &mut self.histories[key];
                h.push_back(r.point.clone());
                while h.len() > spec.history_window {
                    h.pop_front();
                }
                (r, Some(w))
            }
        };
        Ok((result.point, weight))
    }

    fn next_initial(&mut self) -> Option<DesignPoint> {
        self.design.get(self.issued).cloned()
    }

    fn submit<E: Executor>(
        &mut self,
        exec: &mut E,
        worker: usize,
        point: DesignPoint,
        weight: Option<f64>,
        initial: bool,
    ) -> Result<()> {
        let issue_index = self.issued;
        let duration =
            self.problem
                .duration_model
                .draw(&point, issue_index, &mut self.duration_rng);
        self.issue_info.push(IssueInfo {
            weight,
            initial,
            issued_after: self.data.len(),
        });
        self.issued += 1;
        exec.submit(Job {
            worker,
            issue_index,
            point,
            duration,
        })
    }

    fn complete(&mut self, c: Completion) -> Result<DesignPoint> {
        let info = &self.issue_info[c.job.issue_index];
        self.events.push(RunEvent {
            issue_index: c.job.issue_index,
            worker: c.job.worker,
            issue_time: c.issue_time,
            completion_time: c.completion_time,
            point: self.problem.domain.denormalize(&c.job.point),
            unit_point: c.job.point.coords().to_vec(),
            observation: c.observation,
            regime: self.regime,
            weight: info.weight,
            initial: info.initial,
            issued_after: info.issued_after,
        });
        self.data.push(c.job.point.clone(), c.observation)?;
        Ok(c.job.point)
    }

    fn finish(self, batch_size: usize, total_sim_time: f64) -> RunRecord {
        RunRecord::new(
            self.seed,
            self.regime,
            batch_size,
            self.events,
            total_sim_time,
        )
    }
}

/// Issue-on-idle loop. With one worker this is the sequential regime.
fn drive_async<E: Executor>(
    problem: &Problem,
    cfg: &RunConfig,
    seed: u64,
    workers: usize,
    regime: Regime,
    exec: &mut E,
) -> Result<RunRecord> {
    let mut opt = Optimizer::new(problem, cfg, seed, regime)?;
    // (worker, point) of every evaluation in flight
    let mut in_flight: Vec<(usize, DesignPoint)> = Vec::with_capacity(workers);

    let issue = |opt: &mut Optimizer,
                 exec: &mut E,
                 in_flight: &mut Vec<(usize, DesignPoint)>,
                 worker: usize|
     -> Result<()> {
        let (point, weight, initial) = match opt.next_initial() {
            Some(p) => (p, None, true),
            None => {
                let model = opt.model()?;
                let pending: Vec<DesignPoint> = in_flight.iter().map(|(_, p)| p.clone()).collect();
                let (p, w) = opt.propose(&model, &pending, worker, workers)?;
                (p, w, false)
            }
        };
        in_flight.push((worker, point.clone()));
        opt.submit(exec, worker, point, weight, initial)
    };

    for worker in 0..workers.min(cfg.budget) {
        issue(&mut opt, exec, &mut in_flight, worker).map_err(|e| opt.context(e))?;
    }
    // Workers freed before the model has two observations to fit wait here.
    let mut idle: VecDeque<usize> = VecDeque::new();
    while opt.data.len() < cfg.budget {
        let c = exec.wait_next().map_err(|e| opt.context(e))?;
        let worker = c.job.worker;
        in_flight.retain(|(w, _)| *w != worker);
        opt.complete(c).map_err(|e| opt.context(e))?;
        idle.push_back(worker);
        while opt.issued < cfg.budget && (opt.next_initial().is_some() || opt.data.len() >= 2) {
            let Some(worker) = idle.pop_front() else {
                break;
            };
            issue(&mut opt, exec, &mut in_flight, worker).map_err(|e| opt.context(e))?;
        }
    }
    let total = exec.now();
    Ok(opt.finish(workers, total))
}

/// Round-based loop: choose up to `B` points, wait for all of them.
fn drive_sync<E: Executor>(
    problem: &Problem,
    cfg: &RunConfig,
    seed: u64,
    exec: &mut E,
) -> Result<RunRecord> {
    let b = cfg.batch_size;
    let mut opt = Optimizer::new(problem, cfg, seed, Regime::Sync)?;
    while opt.issued < cfg.budget {
        // rounds never mix initial-design points with model suggestions
        let design_left = opt.design.len().saturating_sub(opt.issued);
        let mut round = b.min(cfg.budget - opt.issued);
        if design_left > 0 {
            round = round.min(design_left);
        }
        let mut model: Option<GpModel> = None;
        let mut chosen: Vec<DesignPoint> = Vec::with_capacity(round);
        for slot in 0..round {
            let step = (|| -> Result<()> {
                let (point, weight, initial) = match opt.next_initial() {
                    Some(p) => (p, None, true),
                    None => {
                        if model.is_none() {
                            model = Some(opt.model()?);
                        }
                        let m = model.as_ref().expect("just built");
                        let (p, w) = opt.propose(m, &chosen, slot, b)?;
                        (p, w, false)
                    }
                };
                chosen.push(point.clone());
                opt.submit(exec, slot, point, weight, initial)
            })();
            step.map_err(|e| opt.context(e))?;
        }
        for _ in 0..round {
            let c = exec.wait_next().map_err(|e| opt.context(e))?;
            opt.complete(c).map_err(|e| opt.context(e))?;
        }
    }
    let total = exec.now();
    Ok(opt.finish(b, total))
}
