use std::collections::HashMap;
use std::io::{BufReader, ErrorKind};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::wire::{Message, PROTOCOL_VERSION};
use crate::config;
use crate::error::{Error, Result};
use crate::simulator::{write_atomic, Simulator, SweepState};

#[derive(Clone, Debug)]
pub struct ServerOptions {
    pub state_path: Option<PathBuf>,
    pub persist_interval: Duration,
    /// Setting this stops the server after a final persist, without
    /// telling clients to quit.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            state_path: None,
            persist_interval: Duration::from_secs(60),
            cancel: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServeOutcome {
    Completed,
    Cancelled,
}

enum Event {
    Joined { id: u64, writer: TcpStream },
    Results {
        id: u64,
        epoch: u64,
        samples: u64,
        errors: Vec<u64>,
        trials: Vec<u64>,
    },
    Left { id: u64 },
}

fn session(id: u64, stream: TcpStream, events: Sender<Event>) {
    let leave = |events: &Sender<Event>| {
        let _ = events.send(Event::Left { id });
    };
    let Ok(writer) = stream.try_clone() else {
        return;
    };
    let mut reader = BufReader::new(stream);
    match Message::read_from(&mut reader) {
        Ok(Some(Message::Hello { version })) if version == PROTOCOL_VERSION => {}
        Ok(Some(Message::Hello { .. })) => {
            let mut w = writer;
            let _ = Message::Hello {
                version: PROTOCOL_VERSION,
            }
            .write_to(&mut w);
            let _ = w.shutdown(Shutdown::Both);
            return;
        }
        _ => {
            let _ = writer.shutdown(Shutdown::Both);
            return;
        }
    }
    if events.send(Event::Joined { id, writer }).is_err() {
        return;
    }
    loop {
        match Message::read_from(&mut reader) {
            Ok(Some(Message::Results {
                epoch,
                samples,
                errors,
                trials,
            })) => {
                let ev = Event::Results {
                    id,
                    epoch,
                    samples,
                    errors,
                    trials,
                };
                if events.send(ev).is_err() {
                    return;
                }
            }
            // anything else from a client ends its session
            _ => return leave(&events),
        }
    }
}

fn acceptor(listener: TcpListener, events: Sender<Event>, stop: Arc<AtomicBool>) -> Result<()> {
    listener.set_nonblocking(true).map_err(Error::Network)?;
    let mut next_id = 0;
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false).map_err(Error::Network)?;
                let _ = stream.set_nodelay(true);
                let events = events.clone();
                let id = next_id;
                next_id += 1;
                thread::spawn(move || session(id, stream, events));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(10)),
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::Network(e)),
        }
    }
    Ok(())
}

/// Writes snapshots off the aggregation path; keeps only the newest pending one.
struct Persister {
    tx: Option<Sender<String>>,
    handle: Option<thread::JoinHandle<Result<()>>>,
}

impl Persister {
    fn new(path: Option<PathBuf>) -> Self {
        let Some(path) = path else {
            return Self {
                tx: None,
                handle: None,
            };
        };
        let (tx, rx): (Sender<String>, Receiver<String>) = mpsc::channel();
        let handle = thread::spawn(move || -> Result<()> {
            while let Ok(mut text) = rx.recv() {
                while let Ok(newer) = rx.try_recv() {
                    text = newer;
                }
                write_atomic(&path, &text)?;
            }
            Ok(())
        });
        Self {
            tx: Some(tx),
            handle: Some(handle),
        }
    }

    fn submit(&self, state: &SweepState) {
        if let Some(tx) = &self.tx {
            let _ = tx.send(state.to_text());
        }
    }

    fn finish(mut self) -> Result<()> {
        drop(self.tx.take());
        match self.handle.take() {
            Some(h) => h.join().expect("persister panicked"),
            None => Ok(()),
        }
    }
}

struct Roster {
    clients: HashMap<u64, TcpStream>,
}

impl Roster {
    fn send(&mut self, id: u64, msg: &Message) {
        let failed = match self.clients.get_mut(&id) {
            Some(w) => msg.write_to(w).is_err(),
            None => false,
        };
        if failed {
            self.drop_client(id);
        }
    }

    fn broadcast(&mut self, msg: &Message) {
        let ids: Vec<u64> = self.clients.keys().copied().collect();
        for id in ids {
            self.send(id, msg);
        }
    }

    fn drop_client(&mut self, id: u64) {
        if let Some(w) = self.clients.remove(&id) {
            let _ = w.shutdown(Shutdown::Both);
        }
    }

    fn close_all(&mut self) {
        for (_, w) in self.clients.drain() {
            let _ = w.shutdown(Shutdown::Both);
        }
    }
}

fn current_message(state: &SweepState) -> Message {
    match state.current_parameter() {
        Some(value) => Message::Param {
            epoch: state.position as u64,
            value,
        },
        None => Message::Idle,
    }
}

/// Runs the sweep in `state` using whatever clients connect to `listener`.
/// The epoch of each parameter is its position in the sweep.
pub fn serve(
    listener: TcpListener,
    sim: &Simulator,
    state: &mut SweepState,
    opts: &ServerOptions,
    report: &mut dyn FnMut(&SweepState),
) -> Result<ServeOutcome> {
    if state.labels.len() != sim.measures() {
        return Err(Error::State(format!(
            "state has {} measures, system produces {}",
            state.labels.len(),
            sim.measures()
        )));
    }
    let system = Message::System(config::to_text(sim).into_bytes());
    let (tx, events) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    let accept = {
        let (tx, stop) = (tx.clone(), stop.clone());
        thread::spawn(move || acceptor(listener, tx, stop))
    };
    drop(tx);
    let persister = Persister::new(opts.state_path.clone());
    let mut roster = Roster {
        clients: HashMap::new(),
    };
    let mut last_persist = Instant::now();
    let cancelled = || opts.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed));
    let mut outcome = ServeOutcome::Completed;

    while !state.finished {
        if cancelled() {
            outcome = ServeOutcome::Cancelled;
            break;
        }
        if accept.is_finished() {
            break;
        }
        if last_persist.elapsed() >= opts.persist_interval {
            persister.submit(state);
            last_persist = Instant::now();
        }
        let event = match events.recv_timeout(Duration::from_millis(20)) {
            Ok(ev) => ev,
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => break,
        };
        match event {
            Event::Joined { id, writer } => {
                roster.clients.insert(id, writer);
                roster.send(
                    id,
                    &Message::Hello {
                        version: PROTOCOL_VERSION,
                    },
                );
                roster.send(id, &system);
                roster.send(id, &current_message(state));
            }
            Event::Left { id } => roster.drop_client(id),
            Event::Results {
                id,
                epoch,
                samples,
                errors,
                trials,
            } => {
                if epoch != state.position as u64 || state.current_parameter().is_none() {
                    continue;
                }
                if state.current.accumulate_batch(samples, &errors, &trials).is_err() {
                    roster.drop_client(id);
                    continue;
                }
                if state.current_converged() {
                    roster.broadcast(&Message::Idle);
                    state.advance();
                    persister.submit(state);
                    last_persist = Instant::now();
                    report(state);
                    if !state.finished {
                        roster.broadcast(&current_message(state));
                    }
                }
            }
        }
    }

    if outcome == ServeOutcome::Completed && state.finished {
        roster.broadcast(&Message::Quit);
    }
    persister.submit(state);
    stop.store(true, Ordering::Relaxed);
    let accepted = accept.join().expect("acceptor panicked");
    roster.close_all();
    persister.finish()?;
    accepted?;
    Ok(outcome)
}
