mod common;

use std::io::BufReader;
use std::net::{TcpListener, TcpStream};
use std::thread;

use commsim::base::RandomSource;
use commsim::channel::{Channel, ChannelKind};
use commsim::codec::{Codec, Uncoded};
use commsim::distributed::{serve, Message, ServerOptions};
use commsim::mapper::{Mapper, MapperKind};
use commsim::modem::{Modem, ModemKind};
use commsim::simulator::{write_atomic, BinomialAccumulator, StopRule, SweepSpec, SweepState};
use commsim::CommSystem;
use common::qsc_system;
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum ModemPick {
    Psk(usize),
    Qam(usize),
    Direct(usize),
}

#[derive(Clone, Debug)]
enum ChannelPick {
    Awgn,
    Laplacian,
    Qsc(usize),
    Qec(usize),
}

fn modem_pick() -> impl Strategy<Value = ModemPick> {
    prop_oneof![
        (1u32..=4).prop_map(|k| ModemPick::Psk(1 << k)),
        prop::sample::select(vec![4usize, 16]).prop_map(ModemPick::Qam),
        (2usize..=9).prop_map(ModemPick::Direct),
    ]
}

fn channel_pick() -> impl Strategy<Value = ChannelPick> {
    prop_oneof![
        Just(ChannelPick::Awgn),
        Just(ChannelPick::Laplacian),
        (2usize..=9).prop_map(ChannelPick::Qsc),
        (2usize..=9).prop_map(ChannelPick::Qec),
    ]
}

fn mapper_pick() -> impl Strategy<Value = MapperKind> {
    prop_oneof![
        Just(MapperKind::Straight),
        Just(MapperKind::Interleaved),
        (2usize..=3, 2u32..=3).prop_map(|(b, f)| MapperKind::Dividing { q_in: b.pow(f), q_out: b }),
        (2usize..=3, 2u32..=3).prop_map(|(b, f)| MapperKind::Aggregating { q_in: b, q_out: b.pow(f) }),
    ]
}

fn modem_of(m: &ModemPick) -> (ModemKind, usize, bool) {
    match *m {
        ModemPick::Psk(m) => (ModemKind::Mpsk { m }, m, true),
        ModemPick::Qam(m) => (ModemKind::Qam { m }, m, true),
        ModemPick::Direct(q) => (ModemKind::Direct { q }, q, false),
    }
}

fn channel_of(c: &ChannelPick) -> (ChannelKind, Option<usize>, bool) {
    match *c {
        ChannelPick::Awgn => (ChannelKind::Awgn, None, true),
        ChannelPick::Laplacian => (ChannelKind::Laplacian, None, true),
        ChannelPick::Qsc(q) => (ChannelKind::Qsc { q }, Some(q), false),
        ChannelPick::Qec(q) => (ChannelKind::Qec { q }, Some(q), false),
    }
}

fn power_of(big: usize, small: usize) -> Option<u32> {
    (2..=8).find(|&f| small.pow(f) == big)
}

/// Whether the chain is consistent, decided from first principles.
fn consistent(q_codec: usize, n: usize, mapper: &MapperKind, modem_q: usize, modem_signal: bool, channels: &[(Option<usize>, bool)]) -> bool {
    let mapper_ok = match *mapper {
        MapperKind::Straight | MapperKind::Interleaved => q_codec == modem_q,
        MapperKind::Dividing { q_in, q_out } => q_in == q_codec && q_out == modem_q && power_of(q_in, q_out).is_some(),
        MapperKind::Aggregating { q_in, q_out } => {
            q_in == q_codec && q_out == modem_q && power_of(q_out, q_in).is_some_and(|f| n % f as usize == 0)
        }
    };
    mapper_ok
        && channels
            .iter()
            .all(|&(q, signal)| signal == modem_signal && q.is_none_or(|q| q == modem_q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn wiring_validation_matches_rules(
        q_codec in 2usize..=16,
        n in 1usize..=12,
        mapper in mapper_pick(),
        modem in modem_pick(),
        tx in channel_pick(),
        rx in proptest::option::of(channel_pick()),
    ) {
        let (mk, mq, msig) = modem_of(&modem);
        let (tk, tq, tsig) = channel_of(&tx);
        let mut channels = vec![(tq, tsig)];
        let rx_channel = rx.as_ref().map(|c| {
            let (k, q, s) = channel_of(c);
            channels.push((q, s));
            Channel::new(k).unwrap()
        });
        let expect = consistent(q_codec, n, &mapper, mq, msig, &channels);
        let got = CommSystem::new(
            Codec::Uncoded(Uncoded::new(q_codec, n).unwrap()),
            Mapper::new(mapper).unwrap(),
            Modem::new(mk).unwrap(),
            Channel::new(tk).unwrap(),
            rx_channel,
        );
        prop_assert_eq!(got.is_ok(), expect, "{:?}", got.err());
    }

    #[test]
    fn cycle_reproducible(seed in any::<u64>(), p in 0.0f64..0.6) {
        let mut sim = qsc_system(3, 64);
        sim.set_parameter(p).unwrap();
        let src = sim.make_source(&mut RandomSource::from_seed(seed));
        let a = sim.system().clone().cycle(&src, &mut RandomSource::from_seed(seed)).unwrap();
        let b = sim.system_mut().cycle(&src, &mut RandomSource::from_seed(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

fn mismatched(tx_p: f64, rx_p: f64) -> f64 {
    let mut sim = qsc_system(2, 1000);
    sim.set_parameter(tx_p).unwrap();
    sim.system_mut().channels_mut().1.set_parameter(rx_p, 1.0).unwrap();
    assert_eq!(sim.system().tx_channel().level(), Some(tx_p));
    assert_eq!(sim.system().rx_channel().level(), Some(rx_p));
    let mut rng = RandomSource::from_seed(8);
    let mut acc = BinomialAccumulator::new(sim.measures());
    for _ in 0..100 {
        acc.accumulate(&sim.sample(&mut rng).unwrap()).unwrap();
    }
    acc.estimate(0).unwrap()
}

#[test]
fn separate_receive_channel_honored() {
    // 100k trials: standard deviation below 1e-3
    let ser = mismatched(0.1, 0.2);
    assert!((ser - 0.1).abs() < 0.005, "{ser}");
    // a receiver assuming p > 1/2 inverts every decision
    let ser = mismatched(0.1, 0.9);
    assert!((ser - 0.9).abs() < 0.005, "{ser}");
}

#[test]
fn uncoded_identity_without_noise() {
    let mut sim = qsc_system(5, 300);
    sim.set_parameter(0.0).unwrap();
    let mut rng = RandomSource::from_seed(3);
    for _ in 0..100 {
        let src = sim.make_source(&mut rng);
        let out = sim.system_mut().cycle(&src, &mut rng).unwrap();
        assert_eq!(out, src);
    }
}

/// Drives the protocol by hand: joins, sends the given batches for epoch 0,
/// then waits for the server to close.
fn scripted_client(addr: std::net::SocketAddr, batches: Vec<(u64, Vec<u64>, Vec<u64>)>) {
    let mut s = TcpStream::connect(addr).unwrap();
    Message::Hello { version: 1 }.write_to(&mut s).unwrap();
    let mut r = BufReader::new(s.try_clone().unwrap());
    assert!(matches!(Message::read_from(&mut r).unwrap(), Some(Message::Hello { .. })));
    assert!(matches!(Message::read_from(&mut r).unwrap(), Some(Message::System(_))));
    assert!(matches!(Message::read_from(&mut r).unwrap(), Some(Message::Param { epoch: 0, .. })));
    for (samples, errors, trials) in batches {
        Message::Results { epoch: 0, samples, errors, trials }.write_to(&mut s).unwrap();
    }
    while let Ok(Some(_)) = Message::read_from(&mut r) {}
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn server_aggregation_equals_local(
        batches in proptest::collection::vec((1u64..20, 1u64..6, 0u64..30), 1..24),
        clients in 1usize..=4,
        assignment in proptest::collection::vec(0usize..4, 24),
    ) {
        // every batch carries at least one event of each measure and the second
        // measure never has fewer than the first, so the run converges exactly
        // when the last batch arrives
        let batches: Vec<(u64, Vec<u64>, Vec<u64>)> = batches
            .into_iter()
            .map(|(s, e0, d)| (s, vec![e0, e0 + d], vec![e0 + 10, e0 + d + s]))
            .collect();
        let target: u64 = batches.iter().map(|(_, e, _)| e[0]).sum();
        let mut local = BinomialAccumulator::new(2);
        for (s, e, t) in &batches {
            local.accumulate_batch(*s, e, t).unwrap();
        }

        let sim = qsc_system(2, 10);
        let rule = StopRule::error_events(target).unwrap();
        let mut state = SweepState::new(&sim, rule, SweepSpec::single(0.1));
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let mut shares = vec![Vec::new(); clients];
        for (i, b) in batches.iter().enumerate() {
            shares[assignment[i] % clients].push(b.clone());
        }
        let handles: Vec<_> = shares
            .into_iter()
            .map(|share| thread::spawn(move || scripted_client(addr, share)))
            .collect();
        let done = serve(listener, &sim, &mut state, &ServerOptions::default(), &mut |_| {});
        for h in handles {
            h.join().unwrap();
        }
        done.unwrap();
        prop_assert_eq!(&state.completed[0].acc, &local);
    }
}

#[test]
fn atomic_writes_leave_no_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.txt");
    let sim = qsc_system(2, 8);
    let mut state = SweepState::new(&sim, StopRule::error_events(5).unwrap(), SweepSpec::single(0.2));
    for i in 0..50u64 {
        state.current.accumulate_batch(1, &[i % 3, 1], &[8, 1]).unwrap();
        write_atomic(&path, &state.to_text()).unwrap();
        let back = SweepState::restore(&path).unwrap();
        assert_eq!(back.current, state.current);
    }
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("results.txt")]);
}
