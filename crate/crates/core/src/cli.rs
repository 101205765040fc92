//! Command-line front end: `quicksim`, `simulate` and `client`.

use std::ffi::OsString;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{error::ErrorKind, Args, Parser, Subcommand};

use crate::distributed::{self, ClientExit, ClientOptions, ServerOptions};
use crate::error::Error;
use crate::simulator::{
    run_for, run_local, Floor, LocalOptions, StepMode, StopRule, SweepSpec, SweepState,
    DEFAULT_MIN_SAMPLES,
};
use crate::{config, Simulator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NETWORK: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "commsim", version, about = "Monte Carlo simulation of communication systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one parameter for a fixed time and print the estimates
    #[command(visible_alias = "quicksimulation")]
    Quicksim(QuickArgs),
    /// Sweep a parameter range until each point converges
    #[command(visible_aliases = ["server", "simcommsys"])]
    Simulate(SimulateArgs),
    /// Contribute samples to a running server
    Client(ClientArgs),
}

#[derive(Args, Debug)]
struct QuickArgs {
    /// System file
    #[arg(short = 'i', long = "input")]
    input: PathBuf,
    /// Channel parameter
    #[arg(short = 'r', long = "parameter", allow_negative_numbers = true)]
    parameter: f64,
    /// Wall-clock seconds to run
    #[arg(short = 't', long = "time")]
    time: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// System file; without it, `-e host:port` connects as a client
    #[arg(short = 'i', long = "input")]
    input: Option<PathBuf>,
    /// Results and state file
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Listen endpoint such as `:9000`
    #[arg(short = 'e', long = "endpoint")]
    endpoint: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    stop: Option<f64>,
    /// Additive step
    #[arg(long, conflicts_with = "mul_step")]
    step: Option<f64>,
    /// Multiplicative step factor
    #[arg(long = "mul-step")]
    mul_step: Option<f64>,
    /// Stop when any measure falls below this
    #[arg(long = "floor-min", conflicts_with = "floor_max")]
    floor_min: Option<f64>,
    /// Stop when every measure falls below this
    #[arg(long = "floor-max")]
    floor_max: Option<f64>,
    #[arg(long, conflicts_with = "error_events")]
    confidence: Option<f64>,
    #[arg(long = "relative-error", conflicts_with = "error_events")]
    relative_error: Option<f64>,
    #[arg(long = "error-events")]
    error_events: Option<u64>,
    #[arg(long = "min-samples")]
    min_samples: Option<u64>,
    /// Run without networking using this many threads
    #[arg(long = "local-workers", conflicts_with = "endpoint")]
    local_workers: Option<usize>,
    /// Seed for local runs
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds between periodic state writes
    #[arg(long = "persist-interval", default_value_t = 60.0)]
    persist_interval: f64,
}

#[derive(Args, Debug)]
struct ClientArgs {
    /// Server endpoint `host:port`
    #[arg(short = 'e', long = "endpoint")]
    endpoint: String,
    /// Seconds of sampling per report
    #[arg(long = "batch-time", default_value_t = 1.0)]
    batch_time: f64,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. }
            | Error::UnknownComponent { .. }
            | Error::UnsupportedVersion { .. }
            | Error::InvalidArgument(_)
            | Error::State(_)
            | Error::DigestMismatch { .. }
            | Error::Io(_) => EXIT_CONFIG,
            Error::Network(_) | Error::Protocol(_) => EXIT_NETWORK,
            Error::Capacity(_) | Error::Stage { .. } => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn read_system(path: &Path) -> Result<Simulator, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })?;
    config::from_text(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn positive_seconds(name: &str, secs: f64) -> Result<Duration, Failure> {
    if secs.is_finite() && secs > 0.0 {
        Ok(Duration::from_secs_f64(secs))
    } else {
        Err(Failure::usage(format!("{name} must be a positive number of seconds, got {secs}")))
    }
}

/// Splits `host:port`; the host may be empty only when `allow_empty_host`.
fn parse_endpoint(text: &str, allow_empty_host: bool) -> Result<(String, u16), Failure> {
    let bad = || Failure::usage(format!("endpoint `{text}` is not of the form host:port"));
    let (host, port) = text.rsplit_once(':').ok_or_else(bad)?;
    let port: u16 = port.parse().map_err(|_| bad())?;
    if host.is_empty() && !allow_empty_host {
        return Err(bad());
    }
    let host = host.trim_start_matches('[').trim_end_matches(']');
    Ok((host.to_owned(), port))
}

fn quicksim(args: QuickArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let duration = positive_seconds("-t", args.time)?;
    let sim = read_system(&args.input)?;
    let seed = args.seed.unwrap_or_else(rand::random);
    let r = run_for(&sim, args.parameter, duration, seed)?;
    let z = StopRule::confidence(0.95, 0.05).map_err(Failure::from)?.z();
    let _ = writeln!(out, "# Codec: {}", sim.system().codec().name());
    let _ = writeln!(out, "# Parameter: {}", r.parameter);
    let _ = writeln!(out, "# Seed: {seed}");
    let _ = writeln!(out, "# Measure, estimate, margin (95% confidence), errors, trials");
    for (k, label) in r.labels.iter().enumerate() {
        let est = r.acc.estimate(k).unwrap_or(f64::NAN);
        let margin = r.acc.margin(k, z).unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{label}\t{est:.6e}\t{margin:.6e}\t{}\t{}",
            r.acc.errors()[k],
            r.acc.trials()[k]
        );
    }
    let _ = writeln!(out, "Frames: {}", r.acc.samples());
    let _ = writeln!(out, "Time: {:.3} s", r.elapsed.as_secs_f64());
    let _ = writeln!(
        out,
        "Speed: {:.1} frames/s of {} bits, {:.4} Mbit/s",
        r.frames_per_second(),
        r.frame_bits,
        r.bits_per_second() / 1e6
    );
    Ok(())
}

fn stop_rule(a: &SimulateArgs) -> Result<StopRule, Failure> {
    let rule = match a.error_events {
        Some(n) => StopRule::error_events(n),
        None => StopRule::confidence(
            a.confidence.unwrap_or(crate::simulator::DEFAULT_CONFIDENCE),
            a.relative_error.unwrap_or(crate::simulator::DEFAULT_RELATIVE_ERROR),
        ),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    let floor = match (a.floor_min, a.floor_max) {
        (Some(t), _) => Some(Floor::Min(t)),
        (_, Some(t)) => Some(Floor::Max(t)),
        _ => None,
    };
    let rule = rule
        .with_floor(floor)
        .map_err(|e| Failure::usage(e.to_string()))?;
    Ok(rule.with_min_samples(a.min_samples.unwrap_or(DEFAULT_MIN_SAMPLES)))
}

fn sweep_spec(a: &SimulateArgs) -> Result<SweepSpec, Failure> {
    let start = a.start.ok_or_else(|| Failure::usage("--start is required"))?;
    let stop = a.stop.unwrap_or(start);
    let (step, mode) = match (a.step, a.mul_step) {
        (Some(s), None) => (s, StepMode::Additive),
        (None, Some(s)) => (s, StepMode::Multiplicative),
        _ if stop == start => return Ok(SweepSpec::single(start)),
        _ => return Err(Failure::usage("one of --step or --mul-step is required")),
    };
    SweepSpec::new(start, stop, step, mode).map_err(|e| Failure::usage(e.to_string()))
}

fn print_point(out: &mut dyn Write, state: &SweepState) {
    if let Some(p) = state.completed.last() {
        let z = state.rule.z();
        let _ = write!(out, "{}", p.parameter);
        for k in 0..p.acc.measures() {
            let est = p.acc.estimate(k).unwrap_or(f64::NAN);
            let margin = p.acc.margin(k, z).unwrap_or(f64::NAN);
            let _ = write!(out, "\t{}={est:.4e}±{margin:.2e}", state.labels[k]);
        }
        let _ = writeln!(out, "\t({} frames)", p.acc.samples());
        let _ = out.flush();
    }
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let Some(input) = args.input.clone() else {
        let endpoint = args
            .endpoint
            .as_deref()
            .ok_or_else(|| Failure::usage("-i is required unless -e names a server to join"))?;
        return client(
            ClientArgs {
                endpoint: endpoint.to_owned(),
                batch_time: 1.0,
            },
            out,
        );
    };
    let rule = stop_rule(&args)?;
    let sweep = sweep_spec(&args)?;
    let persist_interval = positive_seconds("--persist-interval", args.persist_interval)?;
    if args.local_workers == Some(0) {
        return Err(Failure::usage("--local-workers must be at least 1"));
    }
    let listen = match &args.endpoint {
        Some(e) => Some(parse_endpoint(e, true)?),
        None => None,
    };
    let sim = read_system(&input)?;

    let digest = sim.digest();
    let mut state = match &args.output {
        Some(path) if path.exists() => {
            let st = SweepState::restore(path)?;
            st.check_compatible(&digest, &rule, &sweep)?;
            match st.current_parameter() {
                Some(v) => {
                    let _ = writeln!(
                        out,
                        "Resuming {} at position {} of {} (parameter {v})",
                        path.display(),
                        st.position,
                        st.values().len()
                    );
                }
                None => {
                    let _ = writeln!(out, "{} is already complete", path.display());
                }
            }
            st
        }
        _ => SweepState::new(&sim, rule, sweep),
    };
    let mut report = |st: &SweepState| print_point(out, st);

    match listen {
        Some((host, port)) => {
            let host = if host.is_empty() { "0.0.0.0".to_owned() } else { host };
            let listener = TcpListener::bind((host.as_str(), port)).map_err(Error::Network)?;
            let opts = ServerOptions {
                state_path: args.output.clone(),
                persist_interval,
                cancel: None,
            };
            distributed::serve(listener, &sim, &mut state, &opts, &mut report)?;
        }
        None => {
            let opts = LocalOptions {
                workers: args.local_workers.unwrap_or(1),
                seed: args.seed.unwrap_or_else(rand::random),
                state_path: args.output.clone(),
                persist_interval,
            };
            run_local(&sim, &mut state, &opts, &mut report)?;
        }
    }
    if let Some(path) = &args.output {
        state.persist(path)?;
    } else {
        let _ = write!(out, "{}", state.to_text());
    }
    Ok(())
}

fn client(args: ClientArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (host, port) = parse_endpoint(&args.endpoint, false)?;
    let opts = ClientOptions {
        batch_time: positive_seconds("--batch-time", args.batch_time)?,
        ..Default::default()
    };
    let summary = distributed::run_client((host.as_str(), port), &opts)?;
    let how = match summary.exit {
        ClientExit::Quit => "server finished",
        ClientExit::ConnectionLost => "connection closed",
        ClientExit::Killed => "stopped",
    };
    let _ = writeln!(out, "{how}: sent {} frames in {} reports", summary.samples, summary.batches);
    Ok(())
}

/// Runs the command line in `args` (program name first), writing normal
/// output to `out` and a single-line diagnostic to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            _ => {
                let text = e.render().to_string();
                let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                let _ = writeln!(err, "{}", line.trim_start_matches("error: "));
                return EXIT_USAGE;
            }
        },
    };
    let result = match cli.command {
        Command::Quicksim(a) => quicksim(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Client(a) => client(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "{}", f.message.replace('\n', " "));
            f.code
        }
    }
}
