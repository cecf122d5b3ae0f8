//! Where evaluations run: a deterministic discrete-event simulation, or real
//! threads that sleep for a scaled duration.

use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use super::clock::SimClock;
use crate::benchmarks::{ObjectiveFn, Problem};
use crate::domain::{BoxDomain, DesignPoint};
use crate::error::{Error, Result};

/// An evaluation handed to a worker.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub worker: usize,
    pub issue_index: usize,
    pub point: DesignPoint,
    /// Simulated seconds the evaluation takes.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub job: Job,
    pub issue_time: f64,
    pub completion_time: f64,
    pub observation: f64,
}

/// Runs jobs and hands back completions one at a time.
pub trait Executor {
    /// Current time in simulated seconds.
    fn now(&self) -> f64;
    fn submit(&mut self, job: Job) -> Result<()>;
    /// Blocks until the next job finishes.
    fn wait_next(&mut self) -> Result<Completion>;
    fn in_flight(&self) -> usize;
}

/// Discrete-event executor over a [`SimClock`]. Completions come back in
/// time order, ties broken by worker id.
#[derive(Debug)]
pub struct SimExecutor<'p> {
    problem: &'p Problem,
    clock: SimClock,
    running: Vec<(Job, f64, f64)>,
}

impl<'p> SimExecutor<'p> {
    pub fn new(problem: &'p Problem) -> Self {
        Self {
            problem,
            clock: SimClock::new(),
            running: Vec::new(),
        }
    }
}

impl Executor for SimExecutor<'_> {
    fn now(&self) -> f64 {
        self.clock.now()
    }

    fn submit(&mut self, job: Job) -> Result<()> {
        if !(job.duration.is_finite() && job.duration > 0.0) {
            return Err(Error::invalid(format!(
                "evaluation duration {} must be positive",
                job.duration
            )));
        }
        if self.running.iter().any(|(j, _, _)| j.worker == job.worker) {
            return Err(Error::invalid(format!("worker {} is busy", job.worker)));
        }
        let start = self.clock.now();
        let end = start + job.duration;
        self.running.push((job, start, end));
        Ok(())
    }

    fn wait_next(&mut self) -> Result<Completion> {
        let next = self
            .running
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.2.total_cmp(&b.2).then(a.0.worker.cmp(&b.0.worker)))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::invalid("no evaluation in flight"))?;
        let (job, issue_time, completion_time) = self.running.swap_remove(next);
        self.clock.advance_to(completion_time);
        let observation = self.problem.evaluate(&job.point);
        Ok(Completion {
            job,
            issue_time,
            completion_time,
            observation,
        })
    }

    fn in_flight(&self) -> usize {
        self.running.len()
    }
}

/// Evaluates on real threads, each sleeping `duration * time_scale` real
/// seconds. Times are reported in simulated seconds. Not deterministic.
pub struct ThreadedExecutor {
    objective: ObjectiveFn,
    domain: BoxDomain,
    time_scale: f64,
    start: Instant,
    tx: mpsc::Sender<Result<Completion>>,
    rx: mpsc::Receiver<Result<Completion>>,
    in_flight: usize,
}

impl ThreadedExecutor {
    pub fn new(problem: &Problem, time_scale: f64) -> Result<Self> {
        if !(time_scale.is_finite() && time_scale >= 0.0) {
            return Err(Error::invalid(format!(
                "time scale {time_scale} must be >= 0"
            )));
        }
        let (tx, rx) = mpsc::channel();
        Ok(Self {
            objective: problem.objective(),
            domain: problem.domain.clone(),
            time_scale,
            start: Instant::now(),
            tx,
            rx,
            in_flight: 0,
        })
    }

    fn sim_elapsed(start: Instant, time_scale: f64) -> f64 {
        let real = start.elapsed().as_secs_f64();
        if time_scale > 0.0 {
            real / time_scale
        } else {
            real
        }
    }
}

impl Executor for ThreadedExecutor {
    fn now(&self) -> f64 {
        Self::sim_elapsed(self.start, self.time_scale)
    }

    fn submit(&mut self, job: Job) -> Result<()> {
        if !(job.duration.is_finite() && job.duration > 0.0) {
            return Err(Error::invalid(format!(
                "evaluation duration {} must be positive",
                job.duration
            )));
        }
        let issue_time = self.now();
        let tx = self.tx.clone();
        let objective = self.objective.clone();
        let x = self.domain.denormalize(&job.point);
        let (start, scale) = (self.start, self.time_scale);
        thread::Builder::new()
            .name(format!("eval-worker-{}", job.worker))
            .spawn(move || {
                thread::sleep(Duration::from_secs_f64(job.duration * scale));
                let observation = objective(&x);
                let completion_time = Self::sim_elapsed(start, scale).max(issue_time);
                // the receiver only disappears when the run was abandoned
                let _ = tx.send(Ok(Completion {
                    job,
                    issue_time,
                    completion_time,
                    observation,
                }));
            })
            .map_err(|e| Error::io("worker thread", e))?;
        self.in_flight += 1;
        Ok(())
    }

    fn wait_next(&mut self) -> Result<Completion> {
        if self.in_flight == 0 {
            return Err(Error::invalid("no evaluation in flight"));
        }
        let c = self
            .rx
            .recv()
            .map_err(|_| Error::invalid("worker channel closed"))??;
        self.in_flight -= 1;
        Ok(c)
    }

    fn in_flight(&self) -> usize {
        self.in_flight
    }
}
