//! Master/slave sampling over TCP.
//!
//! A server holds the sweep state and hands the serialized system to each
//! client; clients sample the current parameter and report counts in batches.

mod client;
mod server;
mod wire;

pub use client::{run_client, ClientExit, ClientOptions, ClientSummary};
pub use server::{serve, ServeOutcome, ServerOptions};
pub use wire::{Message, PROTOCOL_VERSION};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Channel, ChannelKind};
    use crate::codec::{Codec, Uncoded};
    use crate::commsys::CommSystem;
    use crate::error::Error;
    use crate::mapper::Mapper;
    use crate::modem::{Modem, ModemKind};
    use crate::simulator::{Collector, Simulator, SourceSpec, StopRule, SweepSpec, SweepState};
    use std::io::BufReader;
    use std::net::{TcpListener, TcpStream};
    use std::thread;
    use std::time::Duration;

    fn qsc(n: usize) -> Simulator {
        let sys = CommSystem::new(
            Codec::Uncoded(Uncoded::new(2, n).unwrap()),
            Mapper::straight(),
            Modem::new(ModemKind::Direct { q: 2 }).unwrap(),
            Channel::new(ChannelKind::Qsc { q: 2 }).unwrap(),
            None,
        )
        .unwrap();
        Simulator::new(SourceSpec::Random, Collector::Hamming, sys).unwrap()
    }

    fn fast() -> ClientOptions {
        ClientOptions {
            batch_time: Duration::from_millis(5),
            ..Default::default()
        }
    }

    #[test]
    fn dead_server_is_network_error() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
        assert!(matches!(run_client(port, &fast()), Err(Error::Network(_))));
    }

    #[test]
    fn two_clients_complete_sweep() {
        let sim = qsc(40);
        let rule = StopRule::error_events(100).unwrap();
        let sweep = SweepSpec::new(0.3, 0.1, 0.1, crate::simulator::StepMode::Additive).unwrap();
        let mut state = SweepState::new(&sim, rule, sweep);
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let clients: Vec<_> = (0..2)
            .map(|_| thread::spawn(move || run_client(addr, &fast()).unwrap()))
            .collect();
        let outcome = serve(listener, &sim, &mut state, &ServerOptions::default(), &mut |_| {}).unwrap();
        assert_eq!(outcome, ServeOutcome::Completed);
        assert_eq!(state.completed.len(), 3);
        for c in clients {
            assert_eq!(c.join().unwrap().exit, ClientExit::Quit);
        }
        for (pt, p) in state.completed.iter().zip([0.3, 0.2, 0.1]) {
            assert!(pt.acc.errors().iter().all(|&e| e >= 100));
            let est = pt.acc.estimate(0).unwrap();
            assert!((est - p).abs() < 0.05, "{est} vs {p}");
        }
    }

    #[test]
    fn stale_results_ignored() {
        let sim = qsc(10);
        let rule = StopRule::error_events(50).unwrap();
        let mut state = SweepState::new(&sim, rule, SweepSpec::single(0.5));
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let driver = thread::spawn(move || {
            let mut s = TcpStream::connect(addr).unwrap();
            Message::Hello { version: 1 }.write_to(&mut s).unwrap();
            let mut r = BufReader::new(s.try_clone().unwrap());
            assert_eq!(Message::read_from(&mut r).unwrap(), Some(Message::Hello { version: 1 }));
            assert!(matches!(Message::read_from(&mut r).unwrap(), Some(Message::System(_))));
            assert_eq!(
                Message::read_from(&mut r).unwrap(),
                Some(Message::Param { epoch: 0, value: 0.5 })
            );
            // wrong epoch: ignored even though it would converge
            let stale = Message::Results {
                epoch: 7,
                samples: 100,
                errors: vec![500, 60],
                trials: vec![1000, 100],
            };
            stale.write_to(&mut s).unwrap();
            let good = Message::Results {
                epoch: 0,
                samples: 10,
                errors: vec![50, 10],
                trials: vec![100, 10],
            };
            good.write_to(&mut s).unwrap();
            let good2 = Message::Results {
                epoch: 0,
                samples: 40,
                errors: vec![200, 40],
                trials: vec![400, 40],
            };
            good2.write_to(&mut s).unwrap();
            let mut rest = Vec::new();
            while let Ok(Some(m)) = Message::read_from(&mut r) {
                rest.push(m);
            }
            rest
        });
        serve(listener, &sim, &mut state, &ServerOptions::default(), &mut |_| {}).unwrap();
        let acc = &state.completed[0].acc;
        assert_eq!(acc.samples(), 50);
        assert_eq!(acc.errors(), &[250, 50]);
        assert_eq!(driver.join().unwrap(), vec![Message::Idle, Message::Quit]);
    }

    #[test]
    fn version_mismatch_rejected() {
        let sim = qsc(10);
        let rule = StopRule::error_events(10).unwrap();
        let mut state = SweepState::new(&sim, rule, SweepSpec::single(0.5));
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let probe = thread::spawn(move || {
            let mut s = TcpStream::connect(addr).unwrap();
            Message::Hello { version: 99 }.write_to(&mut s).unwrap();
            let mut r = BufReader::new(s);
            let first = Message::read_from(&mut r).unwrap();
            let next = Message::read_from(&mut r).ok().flatten();
            // a real client still finishes the run afterwards
            let summary = run_client(addr, &fast()).unwrap();
            (first, next, summary)
        });
        serve(listener, &sim, &mut state, &ServerOptions::default(), &mut |_| {}).unwrap();
        let (first, next, summary) = probe.join().unwrap();
        assert_eq!(first, Some(Message::Hello { version: PROTOCOL_VERSION }));
        assert_eq!(next, None);
        assert_eq!(summary.exit, ClientExit::Quit);
    }

    #[test]
    fn entropy_clients_differ() {
        let sim = qsc(64);
        let a = sim.make_source(&mut crate::base::RandomSource::from_entropy());
        let b = sim.make_source(&mut crate::base::RandomSource::from_entropy());
        assert_ne!(a, b);
    }
}
