//! Terminated convolutional code with a symbol-MAP (BCJR) decoder.

use super::{CodecInfo, DecoderInput, SoftOutCodec};
use crate::base::{ProbTable, SymbolBlock};
use crate::config::{self, ConfigWriter, TokenStream};
use crate::error::{Error, Result};
use crate::fsm::{Fsm, IoTable};

#[derive(Clone, Debug, Default)]
struct Trellis {
    gamma: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

/// Convolutional code over a finite state machine, encoded from the zero
/// state and driven back to it with `memory` tail steps. Decoding computes
/// exact per-symbol posteriors by forward-backward recursion, with the state
/// metrics renormalized at every step.
#[derive(Clone, Debug)]
pub struct MapCc {
    fsm: Fsm,
    n: usize,
    table: IoTable,
    tail: Vec<usize>,
    decoder: DecoderInput,
    trellis: Trellis,
}

impl PartialEq for MapCc {
    fn eq(&self, other: &Self) -> bool {
        self.fsm == other.fsm && self.n == other.n
    }
}

impl MapCc {
    pub fn new(fsm: Fsm, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("mapcc block length must be at least 1"));
        }
        let table = fsm.io_table()?;
        let tail = (0..fsm.num_states()).map(|s| fsm.tail_word(s)).collect();
        Ok(Self {
            fsm,
            n,
            table,
            tail,
            decoder: DecoderInput::default(),
            trellis: Trellis::default(),
        })
    }

    pub fn fsm(&self) -> &Fsm {
        &self.fsm
    }

    fn steps(&self) -> usize {
        self.n + self.fsm.memory()
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1).comment("Encoder");
        config::write_nested(w, &self.fsm);
        w.field("Block length (information symbols)", self.n);
    }

    pub(crate) fn read_payload(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("mapcc", 1)?;
        let fsm: Fsm = config::read_nested(ts)?;
        let line = ts.line();
        let n = ts.read_checked("block length", |&n: &usize| n >= 1)?;
        Self::new(fsm, n).map_err(|e| Error::parse(line, e.to_string()))
    }

    /// Likelihood of output word `word` at step `t`.
    fn word_metric(&self, r: &ProbTable, t: usize, mut word: usize) -> f64 {
        let (q, n_out) = (self.fsm.q(), self.fsm.outputs());
        let mut metric = 1.0;
        for j in (0..n_out).rev() {
            metric *= r.row(t * n_out + j)[word % q];
            word /= q;
        }
        metric
    }

    fn bcjr(&mut self, want_output: bool) -> Result<(ProbTable, Option<ProbTable>)> {
        let r = self.decoder.channel()?.clone();
        let states = self.fsm.num_states();
        let inputs = self.table.num_inputs();
        let branches = states * inputs;
        let steps = self.steps();
        let n_out = self.fsm.outputs();
        let q = self.fsm.q();
        let words = self.fsm.num_output_words();
        let cache_words = words <= branches;
        let mut degenerate = 0u64;

        let mut tr = std::mem::take(&mut self.trellis);
        tr.gamma.clear();
        tr.gamma.resize(steps * branches, 0.0);
        let mut metric = vec![0.0; if cache_words { words } else { 0 }];
        for t in 0..steps {
            if cache_words {
                for (w, m) in metric.iter_mut().enumerate() {
                    *m = self.word_metric(&r, t, w);
                }
            }
            let prior = if t < self.n {
                self.decoder.app.as_ref().map(|a| a.row(t))
            } else {
                None
            };
            let g = &mut tr.gamma[t * branches..(t + 1) * branches];
            for s in 0..states {
                for x in 0..inputs {
                    if t >= self.n && x != self.tail[s] {
                        continue;
                    }
                    let word = self.table.output(s, x);
                    let chan = if cache_words {
                        metric[word]
                    } else {
                        self.word_metric(&r, t, word)
                    };
                    g[s * inputs + x] = chan * prior.map_or(1.0, |p| p[x]);
                }
            }
        }

        // forward
        tr.alpha.clear();
        tr.alpha.resize((steps + 1) * states, 0.0);
        tr.alpha[0] = 1.0;
        for t in 0..steps {
            let (done, rest) = tr.alpha.split_at_mut((t + 1) * states);
            let cur = &done[t * states..];
            let next = &mut rest[..states];
            let g = &tr.gamma[t * branches..(t + 1) * branches];
            for s in 0..states {
                let a = cur[s];
                if a == 0.0 {
                    continue;
                }
                for x in 0..inputs {
                    next[self.table.next_state(s, x)] += a * g[s * inputs + x];
                }
            }
            degenerate += normalize(next);
        }

        // backward
        tr.beta.clear();
        tr.beta.resize((steps + 1) * states, 0.0);
        tr.beta[steps * states] = 1.0;
        for t in (0..steps).rev() {
            let (head, tail) = tr.beta.split_at_mut((t + 1) * states);
            let cur = &mut head[t * states..];
            let later = &tail[..states];
            let g = &tr.gamma[t * branches..(t + 1) * branches];
            for s in 0..states {
                cur[s] = (0..inputs)
                    .map(|x| g[s * inputs + x] * later[self.table.next_state(s, x)])
                    .sum();
            }
            degenerate += normalize(cur);
        }

        let mut ri = ProbTable::zeros(self.n, q);
        let mut ro = want_output.then(|| ProbTable::zeros(steps * n_out, q));
        let mut digits = vec![0usize; n_out];
        for t in 0..steps {
            let alpha = &tr.alpha[t * states..(t + 1) * states];
            let beta = &tr.beta[(t + 1) * states..(t + 2) * states];
            let g = &tr.gamma[t * branches..(t + 1) * branches];
            for s in 0..states {
                if alpha[s] == 0.0 {
                    continue;
                }
                for x in 0..inputs {
                    let p = alpha[s] * g[s * inputs + x] * beta[self.table.next_state(s, x)];
                    if p == 0.0 {
                        continue;
                    }
                    if t < self.n {
                        ri.row_mut(t)[x] += p;
                    }
                    if let Some(ro) = ro.as_mut() {
                        let mut word = self.table.output(s, x);
                        for d in digits.iter_mut().rev() {
                            *d = word % q;
                            word /= q;
                        }
                        for (j, &d) in digits.iter().enumerate() {
                            ro.row_mut(t * n_out + j)[d] += p;
                        }
                    }
                }
            }
        }
        degenerate += ri.normalize_rows() as u64;
        if let Some(ro) = ro.as_mut() {
            degenerate += ro.normalize_rows() as u64;
        }
        self.trellis = tr;
        self.decoder.degenerate += degenerate;
        Ok((ri, ro))
    }
}

/// Scales to unit sum; an all-zero vector becomes uniform and counts as one
/// degenerate event.
fn normalize(v: &mut [f64]) -> u64 {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        v.iter_mut().for_each(|x| *x /= sum);
        0
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
        1
    }
}

impl SoftOutCodec for MapCc {
    fn info(&self) -> CodecInfo {
        CodecInfo {
            input_block_size: self.n,
            output_block_size: self.steps() * self.fsm.outputs(),
            q_in: self.fsm.q(),
            q_out: self.fsm.q(),
            iterations: 1,
        }
    }

    fn encode(&self, src: &SymbolBlock) -> Result<SymbolBlock> {
        src.check_shape(self.fsm.q(), self.n)?;
        let n_out = self.fsm.outputs();
        let mut out = Vec::with_capacity(self.steps() * n_out);
        let mut state = 0;
        let inputs = src
            .as_slice()
            .iter()
            .copied()
            .map(Some)
            .chain(std::iter::repeat_n(None, self.fsm.memory()));
        for x in inputs {
            let x = x.unwrap_or(self.tail[state]);
            let word = self.table.output(state, x);
            out.extend(self.fsm.unpack_output(word));
            state = self.table.next_state(state, x);
        }
        debug_assert_eq!(state, 0);
        Ok(SymbolBlock::from_trusted(self.fsm.q(), out))
    }

    fn init_decoder(&mut self, ptable: &ProbTable, app: Option<&ProbTable>) -> Result<()> {
        let info = self.info();
        self.decoder.load(&info, ptable, app)
    }

    fn softdecode(&mut self) -> Result<ProbTable> {
        Ok(self.bcjr(false)?.0)
    }

    fn softdecode_full(&mut self) -> Result<(ProbTable, ProbTable)> {
        let (ri, ro) = self.bcjr(true)?;
        Ok((ri, ro.expect("output posteriors requested")))
    }

    fn degenerate_rows(&self) -> u64 {
        self.decoder.degenerate
    }
}
