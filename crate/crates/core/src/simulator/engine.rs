use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::{BinomialAccumulator, Simulator, SweepState};
use crate::base::RandomSource;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LocalOptions {
    pub workers: usize,
    pub seed: u64,
    /// Results file rewritten at every parameter transition.
    pub state_path: Option<PathBuf>,
    pub persist_interval: Duration,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            seed: 0,
            state_path: None,
            persist_interval: Duration::from_secs(60),
        }
    }
}

/// Random stream for a given sweep position and progress, so a resumed run
/// does not replay frames already counted.
fn stream(seed: u64, position: usize, samples: u64, worker: usize) -> RandomSource {
    RandomSource::from_seed(seed)
        .fork(position as u64)
        .fork(samples)
        .fork(worker as u64)
}

fn persist(state: &SweepState, opts: &LocalOptions) -> Result<()> {
    match &opts.state_path {
        Some(path) => state.persist(path),
        None => Ok(()),
    }
}

/// Runs the remaining sweep in-process. `report` is called after each
/// parameter completes.
pub fn run_local(
    sim: &Simulator,
    state: &mut SweepState,
    opts: &LocalOptions,
    report: &mut dyn FnMut(&SweepState),
) -> Result<()> {
    if state.labels.len() != sim.measures() {
        return Err(Error::State(format!(
            "state has {} measures, system produces {}",
            state.labels.len(),
            sim.measures()
        )));
    }
    let mut last_persist = Instant::now();
    while let Some(parameter) = state.current_parameter() {
        let mut worker = sim.clone();
        worker.set_parameter(parameter)?;
        if opts.workers <= 1 {
            let mut rng = stream(opts.seed, state.position, state.current.samples(), 0);
            while !state.current_converged() {
                let r = worker.sample(&mut rng)?;
                state.current.accumulate(&r)?;
                if last_persist.elapsed() >= opts.persist_interval {
                    persist(state, opts)?;
                    last_persist = Instant::now();
                }
            }
        } else {
            run_parallel(&worker, state, opts, &mut last_persist)?;
        }
        state.advance();
        persist(state, opts)?;
        last_persist = Instant::now();
        report(state);
    }
    Ok(())
}

fn run_parallel(
    sim: &Simulator,
    state: &mut SweepState,
    opts: &LocalOptions,
    last_persist: &mut Instant,
) -> Result<()> {
    let shared = Mutex::new(state.current.clone());
    let done = AtomicBool::new(state.current_converged());
    let rule = state.rule;
    let (position, base_samples) = (state.position, state.current.samples());
    let outcome: Result<()> = thread::scope(|scope| {
        let handles: Vec<_> = (0..opts.workers)
            .map(|w| {
                let (shared, done) = (&shared, &done);
                let mut sim = sim.clone();
                scope.spawn(move || -> Result<()> {
                    let mut rng = stream(opts.seed, position, base_samples, w + 1);
                    let mut batch = 1u64;
                    while !done.load(Ordering::Relaxed) {
                        let t0 = Instant::now();
                        let mut local = BinomialAccumulator::new(sim.measures());
                        for _ in 0..batch {
                            let r = sim.sample(&mut rng).inspect_err(|_| done.store(true, Ordering::Relaxed))?;
                            local.accumulate(&r)?;
                        }
                        let mut acc = shared.lock().expect("accumulator lock");
                        if done.load(Ordering::Relaxed) {
                            break;
                        }
                        acc.merge(&local)?;
                        if rule.converged(&acc) {
                            done.store(true, Ordering::Relaxed);
                        }
                        drop(acc);
                        if t0.elapsed() < Duration::from_millis(50) {
                            batch *= 2;
                        }
                    }
                    Ok(())
                })
            })
            .collect();
        while !done.load(Ordering::Relaxed) && !handles.iter().all(|h| h.is_finished()) {
            thread::sleep(Duration::from_millis(20));
            if last_persist.elapsed() >= opts.persist_interval {
                let mut snapshot = state.clone();
                snapshot.current = shared.lock().expect("accumulator lock").clone();
                persist(&snapshot, opts)?;
                *last_persist = Instant::now();
            }
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    outcome?;
    state.current = shared.into_inner().expect("accumulator lock");
    Ok(())
}

/// Outcome of a time-bounded run at one parameter.
#[derive(Clone, Debug)]
pub struct QuickReport {
    pub parameter: f64,
    pub labels: Vec<String>,
    pub acc: BinomialAccumulator,
    pub elapsed: Duration,
    pub frame_bits: f64,
}

impl QuickReport {
    pub fn frames_per_second(&self) -> f64 {
        self.acc.samples() as f64 / self.elapsed.as_secs_f64()
    }

    pub fn bits_per_second(&self) -> f64 {
        self.frames_per_second() * self.frame_bits
    }
}

/// Samples at `parameter` until `duration` has passed (at least one frame).
pub fn run_for(sim: &Simulator, parameter: f64, duration: Duration, seed: u64) -> Result<QuickReport> {
    let mut sim = sim.clone();
    sim.set_parameter(parameter)?;
    let mut rng = RandomSource::from_seed(seed);
    let mut acc = BinomialAccumulator::new(sim.measures());
    let start = Instant::now();
    loop {
        acc.accumulate(&sim.sample(&mut rng)?)?;
        if start.elapsed() >= duration {
            break;
        }
    }
    Ok(QuickReport {
        parameter,
        labels: sim.labels(),
        acc,
        elapsed: start.elapsed(),
        frame_bits: sim.frame_bits(),
    })
}
