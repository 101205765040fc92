use std::io::BufReader;
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, TryRecvError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::wire::{Message, PROTOCOL_VERSION};
use crate::base::RandomSource;
use crate::config;
use crate::error::{Error, Result};
use crate::simulator::{BinomialAccumulator, Simulator};

#[derive(Clone, Debug)]
pub struct ClientOptions {
    /// Sampling time between RESULTS messages.
    pub batch_time: Duration,
    /// Fixed seed; OS entropy when unset.
    pub seed: Option<u64>,
    /// Setting this drops the connection at once, as if the process died.
    pub kill: Option<Arc<AtomicBool>>,
}

impl Default for ClientOptions {
    fn default() -> Self {
        Self {
            batch_time: Duration::from_secs(1),
            seed: None,
            kill: None,
        }
    }
}

/// Why a client stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClientExit {
    Quit,
    ConnectionLost,
    Killed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClientSummary {
    pub exit: ClientExit,
    pub batches: u64,
    pub samples: u64,
}

enum Control {
    Message(Message),
    Lost,
}

fn handshake(stream: &mut TcpStream) -> Result<(Simulator, BufReader<TcpStream>)> {
    Message::Hello {
        version: PROTOCOL_VERSION,
    }
    .write_to(stream)?;
    let mut r = BufReader::new(stream.try_clone().map_err(Error::Network)?);
    match Message::read_from(&mut r)? {
        Some(Message::Hello { version }) if version == PROTOCOL_VERSION => {}
        Some(Message::Hello { version }) => {
            return Err(Error::Protocol(format!(
                "server speaks protocol {version}, this client {PROTOCOL_VERSION}"
            )))
        }
        other => return Err(Error::Protocol(format!("expected HELLO, got {other:?}"))),
    }
    let bytes = match Message::read_from(&mut r)? {
        Some(Message::System(bytes)) => bytes,
        other => return Err(Error::Protocol(format!("expected SYSTEM, got {other:?}"))),
    };
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Protocol("system description is not UTF-8".into()))?;
    Ok((config::from_text(&text)?, r))
}

/// Connects to a server and contributes samples until told to quit or the
/// connection drops.
pub fn run_client(addr: impl ToSocketAddrs, opts: &ClientOptions) -> Result<ClientSummary> {
    let mut stream = TcpStream::connect(addr).map_err(Error::Network)?;
    let _ = stream.set_nodelay(true);
    let (mut sim, buffered) = handshake(&mut stream)?;
    // the handshake reader may hold bytes already; keep reading through it
    let control = spawn_buffered_reader(buffered);
    let mut rng = match opts.seed {
        Some(s) => RandomSource::from_seed(s),
        None => RandomSource::from_entropy(),
    };
    let killed = || opts.kill.as_ref().is_some_and(|k| k.load(Ordering::Relaxed));
    let mut current: Option<u64> = None;
    let mut summary = ClientSummary {
        exit: ClientExit::Quit,
        batches: 0,
        samples: 0,
    };
    let finish = |stream: &TcpStream, mut summary: ClientSummary, exit| {
        let _ = stream.shutdown(Shutdown::Both);
        summary.exit = exit;
        Ok(summary)
    };

    loop {
        if killed() {
            return finish(&stream, summary, ClientExit::Killed);
        }
        let next = if current.is_some() {
            match control.try_recv() {
                Ok(c) => Some(c),
                Err(TryRecvError::Empty) => None,
                Err(TryRecvError::Disconnected) => Some(Control::Lost),
            }
        } else {
            match control.recv_timeout(Duration::from_millis(50)) {
                Ok(c) => Some(c),
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => Some(Control::Lost),
            }
        };
        match next {
            Some(Control::Message(Message::Param { epoch, value })) => {
                sim.set_parameter(value)?;
                current = Some(epoch);
                continue;
            }
            Some(Control::Message(Message::Idle)) => {
                current = None;
                continue;
            }
            Some(Control::Message(Message::Quit)) => {
                return finish(&stream, summary, ClientExit::Quit)
            }
            Some(Control::Message(other)) => {
                let _ = stream.shutdown(Shutdown::Both);
                return Err(Error::Protocol(format!("unexpected message {other:?}")));
            }
            Some(Control::Lost) => return finish(&stream, summary, ClientExit::ConnectionLost),
            None => {}
        }
        let Some(epoch) = current else { continue };
        let mut acc = BinomialAccumulator::new(sim.measures());
        let start = Instant::now();
        loop {
            if killed() {
                return finish(&stream, summary, ClientExit::Killed);
            }
            acc.accumulate(&sim.sample(&mut rng)?)?;
            if start.elapsed() >= opts.batch_time {
                break;
            }
        }
        let msg = Message::Results {
            epoch,
            samples: acc.samples(),
            errors: acc.errors().to_vec(),
            trials: acc.trials().to_vec(),
        };
        if msg.write_to(&mut stream).is_err() {
            return finish(&stream, summary, ClientExit::ConnectionLost);
        }
        summary.batches += 1;
        summary.samples += acc.samples();
    }
}

fn spawn_buffered_reader(mut r: BufReader<TcpStream>) -> Receiver<Control> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || loop {
        match Message::read_from(&mut r) {
            Ok(Some(m)) => {
                if tx.send(Control::Message(m)).is_err() {
                    return;
                }
            }
            _ => {
                let _ = tx.send(Control::Lost);
                return;
            }
        }
    });
    rx
}
