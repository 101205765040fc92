#![allow(dead_code)]

use std::path::PathBuf;

use commsim::base::{ProbTable, RandomSource};
use commsim::channel::{Channel, ChannelKind};
use commsim::codec::{Codec, MapCc, Repetition, Uncoded};
use commsim::config::{self, Component};
use commsim::fsm::{Fsm, GeneratorPolynomial, Nrcc, Rscc, Zsm};
use commsim::mapper::{Mapper, MapperKind};
use commsim::modem::{Modem, ModemKind};
use commsim::simulator::{Collector, SourceSpec};
use commsim::{CommSystem, Simulator};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn system_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("systems").join(name)
}

pub fn load_system(name: &str) -> Simulator {
    let text = std::fs::read_to_string(system_file(name)).unwrap();
    config::from_text(&text).unwrap()
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    Normal::standard().sf(x)
}

/// Uncoded BPSK bit error rate at `ebn0_db`.
pub fn bpsk_ber(ebn0_db: f64) -> f64 {
    q_function((2.0 * 10f64.powf(ebn0_db / 10.0)).sqrt())
}

pub fn qsc_system(q: usize, n: usize) -> Simulator {
    let sys = CommSystem::new(
        Codec::Uncoded(Uncoded::new(q, n).unwrap()),
        Mapper::straight(),
        Modem::new(ModemKind::Direct { q }).unwrap(),
        Channel::new(ChannelKind::Qsc { q }).unwrap(),
        None,
    )
    .unwrap();
    Simulator::new(SourceSpec::Random, Collector::Hamming, sys).unwrap()
}

// ---- random components ------------------------------------------------------

fn int(rng: &mut RandomSource, lo: usize, hi: usize) -> usize {
    lo + rng.uniform_int(hi - lo + 1)
}

fn poly(bits: &[bool]) -> GeneratorPolynomial {
    GeneratorPolynomial::new(bits.to_vec()).unwrap()
}

fn random_poly(rng: &mut RandomSource, len: usize) -> Vec<bool> {
    (0..len).map(|_| rng.uniform_int(2) == 1).collect()
}

fn random_generator(rng: &mut RandomSource, max_len: usize) -> GeneratorPolynomial {
    let len = int(rng, 1, max_len);
    poly(&random_poly(rng, len))
}

pub fn random_nrcc(rng: &mut RandomSource) -> Fsm {
    let n = int(rng, 1, 4);
    let memory = int(rng, 0, 6);
    let gens = (0..n)
        .map(|_| random_generator(rng, memory + 1))
        .collect();
    Fsm::Nrcc(Nrcc::new(gens).unwrap())
}

pub fn random_rscc(rng: &mut RandomSource) -> Fsm {
    let memory = int(rng, 1, 5);
    let mut fb = random_poly(rng, memory + 1);
    fb[0] = true;
    let ff = (0..int(rng, 1, 3))
        .map(|_| random_generator(rng, memory + 1))
        .collect();
    Fsm::Rscc(Rscc::new(poly(&fb), ff).unwrap())
}

pub fn random_zsm(rng: &mut RandomSource) -> Fsm {
    Fsm::Zsm(Zsm::new(int(rng, 2, 8), int(rng, 1, 4)).unwrap())
}

pub fn random_fsm(rng: &mut RandomSource) -> Fsm {
    match rng.uniform_int(3) {
        0 => random_nrcc(rng),
        1 => random_rscc(rng),
        _ => random_zsm(rng),
    }
}

fn random_codec_named(rng: &mut RandomSource, name: &str) -> Codec {
    match name {
        "uncoded<double>" => Codec::Uncoded(Uncoded::new(int(rng, 2, 16), int(rng, 1, 5000)).unwrap()),
        "repetition<double>" => Codec::Repetition(
            Repetition::new(int(rng, 2, 16), int(rng, 1, 2000), int(rng, 1, 6)).unwrap(),
        ),
        "mapcc<double>" => Codec::MapCc(MapCc::new(random_fsm(rng), int(rng, 1, 300)).unwrap()),
        other => panic!("no generator for codec {other}"),
    }
}

pub fn random_codec(rng: &mut RandomSource) -> Codec {
    let name = ["uncoded<double>", "repetition<double>", "mapcc<double>"][rng.uniform_int(3)];
    random_codec_named(rng, name)
}

fn random_mapper_named(rng: &mut RandomSource, name: &str) -> Mapper {
    let small = int(rng, 2, 5);
    let big = small.pow(int(rng, 2, 4) as u32);
    let kind = match name {
        "map_straight" => MapperKind::Straight,
        "map_interleaved" => MapperKind::Interleaved,
        "map_dividing" => MapperKind::Dividing { q_in: big, q_out: small },
        "map_aggregating" => MapperKind::Aggregating { q_in: small, q_out: big },
        other => panic!("no generator for mapper {other}"),
    };
    Mapper::new(kind).unwrap()
}

fn random_modem_named(rng: &mut RandomSource, name: &str) -> Modem {
    let kind = match name {
        "mpsk" => ModemKind::Mpsk { m: 1 << int(rng, 1, 6) },
        "qam" => ModemKind::Qam { m: [4, 16, 64][rng.uniform_int(3)] },
        "direct_blockmodem" => ModemKind::Direct { q: int(rng, 2, 32) },
        other => panic!("no generator for modem {other}"),
    };
    Modem::new(kind).unwrap()
}

fn random_channel_named(rng: &mut RandomSource, name: &str) -> Channel {
    let kind = match name {
        "awgn" => ChannelKind::Awgn,
        "laplacian" => ChannelKind::Laplacian,
        "qsc" => ChannelKind::Qsc { q: int(rng, 2, 32) },
        "qec" => ChannelKind::Qec { q: int(rng, 2, 32) },
        other => panic!("no generator for channel {other}"),
    };
    Channel::new(kind).unwrap()
}

fn random_collector_named(name: &str) -> Collector {
    match name {
        "errors_hamming" => Collector::Hamming,
        "errors_levenshtein" => Collector::Levenshtein,
        "hist_symerr" => Collector::HistSymerr,
        other => panic!("no generator for collector {other}"),
    }
}

/// A random system whose alphabets and block sizes are consistent.
pub fn random_system(rng: &mut RandomSource) -> CommSystem {
    loop {
        let codec = random_codec(rng);
        let info = commsim::codec::SoftOutCodec::info(&codec);
        let q = info.q_out;
        let signal = q.is_power_of_two() && q <= 64 && rng.uniform_int(2) == 0;
        let (mapper, modem_q) = match rng.uniform_int(3) {
            0 => (Mapper::straight(), q),
            1 => (Mapper::interleaved(), q),
            _ => {
                // split into bits or pack pairs when the sizes allow it
                if q.is_power_of_two() && q >= 4 {
                    (Mapper::new(MapperKind::Dividing { q_in: q, q_out: 2 }).unwrap(), 2)
                } else if info.output_block_size % 2 == 0 && q * q <= 64 {
                    (Mapper::new(MapperKind::Aggregating { q_in: q, q_out: q * q }).unwrap(), q * q)
                } else {
                    (Mapper::straight(), q)
                }
            }
        };
        let (modem, channel) = if signal && modem_q.is_power_of_two() && modem_q <= 64 {
            let modem = if modem_q >= 4 && (modem_q == 4 || modem_q == 16 || modem_q == 64) && rng.uniform_int(2) == 0 {
                ModemKind::Qam { m: modem_q }
            } else {
                ModemKind::Mpsk { m: modem_q }
            };
            let ch = if rng.uniform_int(2) == 0 { ChannelKind::Awgn } else { ChannelKind::Laplacian };
            (modem, ch)
        } else {
            let ch = if rng.uniform_int(2) == 0 {
                ChannelKind::Qsc { q: modem_q }
            } else {
                ChannelKind::Qec { q: modem_q }
            };
            (ModemKind::Direct { q: modem_q }, ch)
        };
        let tx = Channel::new(channel).unwrap();
        let rx = (rng.uniform_int(2) == 0).then(|| tx.clone());
        if let Ok(sys) = CommSystem::new(codec, mapper, Modem::new(modem).unwrap(), tx, rx) {
            return sys;
        }
    }
}

pub fn random_simulator(rng: &mut RandomSource) -> Simulator {
    let sys = random_system(rng);
    let collector = random_collector_named(
        ["errors_hamming", "errors_levenshtein", "hist_symerr"][rng.uniform_int(3)],
    );
    let source = match rng.uniform_int(3) {
        0 => SourceSpec::Zero,
        1 => SourceSpec::Random,
        _ => {
            let (q, n) = (sys.input_alphabet(), sys.input_size());
            SourceSpec::User((0..n).map(|_| rng.uniform_int(q)).collect())
        }
    };
    Simulator::new(source, collector, sys).unwrap()
}

/// A random instance of the registry entry `(category, name)`.
pub fn random_component(rng: &mut RandomSource, category: &str, name: &str) -> Component {
    match category {
        "simulator" => Component::Simulator(Box::new(random_simulator(rng))),
        "commsys" => Component::System(Box::new(random_system(rng))),
        "collector" => Component::Collector(random_collector_named(name)),
        "codec" => Component::Codec(random_codec_named(rng, name)),
        "fsm" => Component::Fsm(match name {
            "nrcc" => random_nrcc(rng),
            "rscc" => random_rscc(rng),
            "zsm" => random_zsm(rng),
            other => panic!("no generator for fsm {other}"),
        }),
        "mapper" => Component::Mapper(random_mapper_named(rng, name)),
        "modem" => Component::Modem(random_modem_named(rng, name)),
        "channel" => Component::Channel(random_channel_named(rng, name)),
        other => panic!("no generator for category {other}"),
    }
}

/// Serializes and parses back `count` random instances of every registered
/// component. Returns the first mismatch, if any, and the number checked.
pub fn round_trip_all(seed: u64, count: usize) -> Result<usize, String> {
    let mut rng = RandomSource::from_seed(seed);
    let mut checked = 0;
    for (category, name) in config::ComponentRegistry::global().entries() {
        for _ in 0..count {
            let c = random_component(&mut rng, category, name);
            if c.name() != name {
                // commsys and simulator have a single name each
                if category != "simulator" && category != "commsys" {
                    return Err(format!("generator for {name} produced {}", c.name()));
                }
            }
            let text = config::serialize_component(&c);
            let mut ts = config::TokenStream::new(&text);
            let back = config::deserialize_component(&mut ts, category)
                .map_err(|e| format!("{category}/{name}: {e}\n{text}"))?;
            if ts.peek().is_some() {
                return Err(format!("{category}/{name}: trailing tokens"));
            }
            if back != c {
                return Err(format!("{category}/{name}: round trip differs\n{text}"));
            }
            if config::serialize_component(&back) != text {
                return Err(format!("{category}/{name}: reserialized text differs"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

// ---- brute-force MAP oracle -------------------------------------------------

/// Binary convolutional encoder written directly from its polynomials.
#[derive(Clone, Debug)]
pub enum Machine {
    Nrcc(Vec<Vec<u8>>),
    Rscc { feedback: Vec<u8>, feedforward: Vec<Vec<u8>> },
}

fn bits(s: &[u8]) -> Vec<bool> {
    s.iter().map(|&b| b == 1).collect()
}

impl Machine {
    pub fn memory(&self) -> usize {
        let longest = match self {
            Machine::Nrcc(g) => g.iter().map(Vec::len).max().unwrap(),
            Machine::Rscc { feedback, feedforward } => feedforward
                .iter()
                .map(Vec::len)
                .chain([feedback.len()])
                .max()
                .unwrap(),
        };
        longest - 1
    }

    pub fn outputs(&self) -> usize {
        match self {
            Machine::Nrcc(g) => g.len(),
            Machine::Rscc { feedforward, .. } => 1 + feedforward.len(),
        }
    }

    pub fn to_fsm(&self) -> Fsm {
        match self {
            Machine::Nrcc(g) => Fsm::Nrcc(Nrcc::new(g.iter().map(|p| poly(&bits(p))).collect()).unwrap()),
            Machine::Rscc { feedback, feedforward } => Fsm::Rscc(
                Rscc::new(poly(&bits(feedback)), feedforward.iter().map(|p| poly(&bits(p))).collect())
                    .unwrap(),
            ),
        }
    }

    /// Codeword for `input` followed by the terminating tail.
    pub fn encode(&self, input: &[u8]) -> Vec<u8> {
        let nu = self.memory();
        let coef = |p: &[u8], i: usize| p.get(i).copied().unwrap_or(0);
        let mut out = Vec::new();
        match self {
            Machine::Nrcc(gens) => {
                let mut x: Vec<u8> = input.to_vec();
                x.extend(std::iter::repeat_n(0, nu));
                for t in 0..x.len() {
                    for g in gens {
                        let mut b = 0;
                        for i in 0..=t.min(nu) {
                            b ^= coef(g, i) & x[t - i];
                        }
                        out.push(b);
                    }
                }
            }
            Machine::Rscc { feedback, feedforward } => {
                // w holds the register input sequence
                let mut w: Vec<u8> = Vec::new();
                let steps = input.len() + nu;
                for t in 0..steps {
                    let fb = (1..=t.min(nu)).fold(0, |acc, i| acc ^ (coef(feedback, i) & w[t - i]));
                    let x = if t < input.len() { input[t] } else { fb };
                    let wt = x ^ fb;
                    w.push(wt);
                    out.push(x);
                    for g in feedforward {
                        let mut b = 0;
                        for i in 0..=t.min(nu) {
                            b ^= coef(g, i) & w[t - i];
                        }
                        out.push(b);
                    }
                }
            }
        }
        out
    }
}

/// Exact posteriors of the information and encoded bits by summing over
/// every input sequence.
pub fn brute_force_posteriors(
    m: &Machine,
    n: usize,
    r: &ProbTable,
    app: Option<&ProbTable>,
) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let len = r.len();
    let mut ri = vec![[0.0; 2]; n];
    let mut ro = vec![[0.0; 2]; len];
    for u in 0..(1usize << n) {
        let input: Vec<u8> = (0..n).map(|t| ((u >> t) & 1) as u8).collect();
        let code = m.encode(&input);
        assert_eq!(code.len(), len);
        let mut p = 1.0;
        for (j, &c) in code.iter().enumerate() {
            p *= r.row(j)[c as usize];
        }
        if let Some(a) = app {
            for (t, &x) in input.iter().enumerate() {
                p *= a.row(t)[x as usize];
            }
        }
        for (t, &x) in input.iter().enumerate() {
            ri[t][x as usize] += p;
        }
        for (j, &c) in code.iter().enumerate() {
            ro[j][c as usize] += p;
        }
    }
    for row in ri.iter_mut().chain(ro.iter_mut()) {
        let s = row[0] + row[1];
        row[0] /= s;
        row[1] /= s;
    }
    (ri, ro)
}

pub fn random_table(rng: &mut RandomSource, len: usize) -> ProbTable {
    let rows: Vec<[f64; 2]> = (0..len)
        .map(|_| [1e-3 + rng.uniform_real(), 1e-3 + rng.uniform_real()])
        .collect();
    ProbTable::from_rows(2, &rows).unwrap()
}

fn random_bits(rng: &mut RandomSource, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.uniform_int(2) as u8).collect()
}

/// Machines of a given memory and output count: random feedforward codes
/// (the first always of full length) and random recursive ones.
pub fn machines(rng: &mut RandomSource, nu: usize, n: usize, count: usize) -> Vec<Machine> {
    let mut out = Vec::new();
    for i in 0..count {
        if i % 3 == 2 && n >= 2 && nu >= 1 {
            let mut feedback = random_bits(rng, nu + 1);
            feedback[0] = 1;
            feedback[nu] = 1;
            let feedforward = (0..n - 1).map(|_| random_bits(rng, nu + 1)).collect();
            out.push(Machine::Rscc { feedback, feedforward });
        } else {
            let mut gens: Vec<Vec<u8>> = (0..n).map(|_| random_bits(rng, nu + 1)).collect();
            gens[0][nu] = 1;
            out.push(Machine::Nrcc(gens));
        }
    }
    out
}

/// Largest absolute difference between the decoder and the oracle over
/// `tables` random channel tables (half of them with random priors).
pub fn bcjr_max_error(m: &Machine, n: usize, tables: usize, rng: &mut RandomSource) -> f64 {
    use commsim::codec::SoftOutCodec;
    let mut codec = MapCc::new(m.to_fsm(), n).unwrap();
    let len = SoftOutCodec::info(&codec).output_block_size;
    assert_eq!(len, (n + m.memory()) * m.outputs());
    let mut worst = 0.0f64;
    for k in 0..tables {
        let r = random_table(rng, len);
        let app = (k % 2 == 1).then(|| random_table(rng, n));
        codec.init_decoder(&r, app.as_ref()).unwrap();
        let (ri, ro) = codec.softdecode_full().unwrap();
        let (ei, eo) = brute_force_posteriors(m, n, &r, app.as_ref());
        for (t, row) in ei.iter().enumerate() {
            for x in 0..2 {
                worst = worst.max((ri.row(t)[x] - row[x]).abs());
            }
        }
        for (j, row) in eo.iter().enumerate() {
            for x in 0..2 {
                worst = worst.max((ro.row(j)[x] - row[x]).abs());
            }
        }
    }
    worst
}
