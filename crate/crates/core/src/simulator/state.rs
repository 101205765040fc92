use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::{BinomialAccumulator, Floor, Simulator, StepMode, StopMode, StopRule, SweepSpec};
use crate::config::TokenStream;
use crate::error::{Error, Result};

const STATE_MARKER: &str = "# STATE";

/// Final counts for one swept parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct CompletedPoint {
    pub parameter: f64,
    pub acc: BinomialAccumulator,
}

/// Progress of a sweep, stored as the results file.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepState {
    pub digest: String,
    pub rule: StopRule,
    pub sweep: SweepSpec,
    pub labels: Vec<String>,
    pub started: String,
    pub completed: Vec<CompletedPoint>,
    /// Index into the sweep values of the parameter in progress.
    pub position: usize,
    pub current: BinomialAccumulator,
    pub finished: bool,
}

impl SweepState {
    pub fn new(sim: &Simulator, rule: StopRule, sweep: SweepSpec) -> Self {
        let labels = sim.labels();
        let finished = sweep.values().is_empty();
        Self {
            digest: sim.digest(),
            rule,
            sweep,
            current: BinomialAccumulator::new(labels.len()),
            labels,
            started: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            completed: Vec::new(),
            position: 0,
            finished,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.sweep.values()
    }

    pub fn current_parameter(&self) -> Option<f64> {
        if self.finished {
            return None;
        }
        self.values().get(self.position).copied()
    }

    /// Refuses to continue a sweep started for another system or rule.
    pub fn check_compatible(&self, digest: &str, rule: &StopRule, sweep: &SweepSpec) -> Result<()> {
        if self.digest != digest {
            return Err(Error::DigestMismatch {
                stored: self.digest.clone(),
                current: digest.to_owned(),
            });
        }
        if self.rule != *rule {
            return Err(Error::State(format!(
                "stop rule differs: stored `{}`, requested `{rule}`",
                self.rule
            )));
        }
        if self.sweep != *sweep {
            return Err(Error::State(format!(
                "sweep differs: stored `{}`, requested `{sweep}`",
                self.sweep
            )));
        }
        Ok(())
    }

    /// Whether the parameter in progress has met the stop rule.
    pub fn current_converged(&self) -> bool {
        self.rule.converged(&self.current)
    }

    /// Records the current parameter as done and moves on. Returns whether
    /// another parameter remains.
    pub fn advance(&mut self) -> bool {
        let Some(parameter) = self.current_parameter() else {
            return false;
        };
        let acc = std::mem::replace(&mut self.current, BinomialAccumulator::new(self.labels.len()));
        let floor = self.rule.floor_reached(&acc);
        self.completed.push(CompletedPoint { parameter, acc });
        self.position += 1;
        if floor || self.position >= self.values().len() {
            self.finished = true;
        }
        !self.finished
    }

    fn write_row(out: &mut String, parameter: f64, acc: &BinomialAccumulator, z: f64) {
        let _ = write!(out, "{parameter}");
        for k in 0..acc.measures() {
            let est = acc.estimate(k).unwrap_or(f64::NAN);
            let margin = acc.margin(k, z).unwrap_or(f64::NAN);
            let _ = write!(
                out,
                " {est:.6e} {margin:.6e} {} {}",
                acc.errors()[k],
                acc.trials()[k]
            );
        }
        out.push('\n');
    }

    fn write_counts(out: &mut String, acc: &BinomialAccumulator) {
        let _ = write!(out, "{}", acc.samples());
        for k in 0..acc.measures() {
            let _ = write!(out, " {} {}", acc.errors()[k], acc.trials()[k]);
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let z = self.rule.z();
        let _ = writeln!(out, "# System: {}", self.digest);
        let _ = writeln!(out, "# Rule: {}", self.rule);
        let _ = writeln!(out, "# Sweep: {}", self.sweep);
        let _ = writeln!(out, "# Started: {}", self.started);
        let _ = writeln!(
            out,
            "# Columns: parameter, then estimate, margin ({}% confidence), errors, trials for each of: {}",
            self.rule.confidence_level() * 100.0,
            self.labels.join(" ")
        );
        for p in &self.completed {
            Self::write_row(&mut out, p.parameter, &p.acc, z);
        }
        out.push_str(STATE_MARKER);
        out.push('\n');
        let _ = write!(
            out,
            "# Version\n1\n# System digest\n{}\n# Stop rule\n{}\n# Sweep\n{}\n# Started\n{}\n",
            self.digest, self.rule, self.sweep, self.started
        );
        let _ = write!(
            out,
            "# Measures\n{}\n{}\n# Finished (0 = no, 1 = yes)\n{}\n# Position\n{}\n",
            self.labels.len(),
            self.labels.join(" "),
            u8::from(self.finished),
            self.position
        );
        let _ = writeln!(
            out,
            "# Completed parameters (value, samples, then errors and trials per measure)\n{}",
            self.completed.len()
        );
        for p in &self.completed {
            let _ = write!(out, "{} ", p.parameter);
            Self::write_counts(&mut out, &p.acc);
            out.push('\n');
        }
        out.push_str("# Parameter in progress (samples, then errors and trials per measure)\n");
        Self::write_counts(&mut out, &self.current);
        out.push('\n');
        out
    }

    /// The `# STATE` section alone.
    pub fn state_section(text: &str) -> Option<&str> {
        text.find(&format!("{STATE_MARKER}\n")).map(|i| &text[i..])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let section = Self::state_section(text)
            .ok_or_else(|| Error::State("no STATE section in results file".into()))?;
        let offset = text[..text.len() - section.len()].lines().count();
        let mut ts = TokenStream::new(section);
        Self::parse(&mut ts).map_err(|e| match e {
            Error::Parse { line, message } => Error::parse(line + offset, message),
            other => other,
        })
    }

    fn read_counts(ts: &mut TokenStream, k: usize) -> Result<BinomialAccumulator> {
        let line = ts.line();
        let samples: u64 = ts.read("sample count")?;
        let mut errors = Vec::with_capacity(k);
        let mut trials = Vec::with_capacity(k);
        for _ in 0..k {
            errors.push(ts.read("error count")?);
            trials.push(ts.read("trial count")?);
        }
        BinomialAccumulator::from_parts(errors, trials, samples)
            .map_err(|e| Error::parse(line, e.to_string()))
    }

    fn parse(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("state", 1)?;
        let digest = ts.expect("system digest")?.text;
        let rule = parse_rule(ts)?;
        let sweep = parse_sweep(ts)?;
        let started = ts.expect("start time")?.text;
        let k: usize = ts.read_checked("measure count", |&k| k >= 1)?;
        let labels = (0..k)
            .map(|_| ts.expect("measure label").map(|t| t.text))
            .collect::<Result<Vec<_>>>()?;
        let finished: u8 = ts.read_checked("finished flag", |&f| f <= 1)?;
        let line = ts.line();
        let position: usize = ts.read("position")?;
        let count: usize = ts.read("completed count")?;
        if count != position {
            return Err(Error::parse(
                line,
                format!("position {position} disagrees with {count} completed parameters"),
            ));
        }
        let mut completed = Vec::with_capacity(count);
        for _ in 0..count {
            let parameter: f64 = ts.read("parameter")?;
            let acc = Self::read_counts(ts, k)?;
            completed.push(CompletedPoint { parameter, acc });
        }
        let current = Self::read_counts(ts, k)?;
        if let Some(extra) = ts.peek() {
            return Err(Error::parse(
                extra.line,
                format!("unexpected trailing token `{}`", extra.text),
            ));
        }
        Ok(Self {
            digest,
            rule,
            sweep,
            labels,
            started,
            completed,
            position,
            current,
            finished: finished == 1,
        })
    }

    /// Atomic replacement of the file at `path`.
    pub fn persist(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_text())
    }

    pub fn restore(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Writes to a temporary sibling, then renames over `path`.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let mut tmp = PathBuf::from(path);
    tmp.set_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_rule(ts: &mut TokenStream) -> Result<StopRule> {
    let tok = ts.expect("stop rule")?;
    let mode = match tok.text.as_str() {
        "confidence" => {
            let confidence: f64 = ts.read("confidence level")?;
            keyword(ts, "relative-error")?;
            let relative_error: f64 = ts.read("relative error")?;
            StopMode::Confidence {
                confidence,
                relative_error,
            }
        }
        "error-events" => StopMode::ErrorEvents {
            target: ts.read("error event target")?,
        },
        other => return Err(Error::parse(tok.line, format!("unknown stop rule `{other}`"))),
    };
    let tok = ts.expect("floor")?;
    let floor = match tok.text.as_str() {
        "floor-none" => None,
        "floor-min" => Some(Floor::Min(ts.read("floor")?)),
        "floor-max" => Some(Floor::Max(ts.read("floor")?)),
        other => return Err(Error::parse(tok.line, format!("unknown floor `{other}`"))),
    };
    keyword(ts, "min-samples")?;
    let min_samples: u64 = ts.read("minimum samples")?;
    let base = match mode {
        StopMode::Confidence {
            confidence,
            relative_error,
        } => StopRule::confidence(confidence, relative_error),
        StopMode::ErrorEvents { target } => StopRule::error_events(target),
    };
    base.and_then(|r| r.with_floor(floor))
        .map(|r| r.with_min_samples(min_samples))
        .map_err(|e| Error::parse(tok.line, e.to_string()))
}

fn parse_sweep(ts: &mut TokenStream) -> Result<SweepSpec> {
    let tok = ts.expect("step mode")?;
    let mode = match tok.text.as_str() {
        "additive" => StepMode::Additive,
        "multiplicative" => StepMode::Multiplicative,
        other => return Err(Error::parse(tok.line, format!("unknown step mode `{other}`"))),
    };
    let start: f64 = ts.read("start")?;
    let stop: f64 = ts.read("stop")?;
    let step: f64 = ts.read("step")?;
    if start == stop {
        return Ok(SweepSpec {
            start,
            stop,
            step,
            mode,
        });
    }
    SweepSpec::new(start, stop, step, mode).map_err(|e| Error::parse(tok.line, e.to_string()))
}

fn keyword(ts: &mut TokenStream, word: &str) -> Result<()> {
    let tok = ts.expect(word)?;
    if tok.text != word {
        return Err(Error::parse(
            tok.line,
            format!("expected `{word}`, found `{}`", tok.text),
        ));
    }
    Ok(())
}
