//! Command-line frontend. Exit codes: 0 ok, 1 check failure or invalid
//! schedule, 2 input error, 3 engine error.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::agents::ComparisonTimePolicy;
use crate::amplitude::{Amplitude, ExactReal};
use crate::engine::{
    build_report, canonical_expected, render_table, CheckpointCheck, Engine, EngineError, ExpectedCheckpoint, Mode,
    RunConfig, RunSample, SamplingSummary,
};
use crate::hilbert::TermDump;
use crate::protocol::{
    canonical_fr_schedule, parse_schedule, parse_unchecked, to_dsl, validate, Diagnostic, ParseError, Schedule,
};
use crate::time::TimeStamp;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ENGINE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "wignerbox",
    version,
    about = "Exact simulator for the four-agent Wigner's-friend protocol"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve one round and report checkpoints, outcome statistics and violations.
    Run(RunArgs),
    /// Compare checkpoint states with reference states (exact mode only).
    Check(CheckArgs),
    /// Repeat rounds until the halt condition holds, over many seeded runs.
    Sample(SampleArgs),
    /// Parse and validate a schedule file.
    Validate(ValidateArgs),
    /// Print the state after every step, or the schedule as source text.
    Dump(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    Fr,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Schedule file.
    #[arg(value_name = "PATH", conflicts_with_all = ["builtin", "file"])]
    path: Option<PathBuf>,
    /// Built-in schedule (the default when no file is given).
    #[arg(long, conflicts_with = "file")]
    builtin: Option<Builtin>,
    /// Schedule file.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Comma-separated times such as n:02,n:24.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<TimeStamp>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Ticks after a measurement at which its observed value is compared
    /// with predictions.
    #[arg(long, default_value_t = 1)]
    comparison_offset: u32,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Reference checkpoint files; the built-in references by default.
    #[arg(long, value_name = "JSON")]
    expected: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, required = true)]
    seed: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    max_rounds: u64,
    /// Keep runs that hit --max-rounds instead of failing.
    #[arg(long)]
    allow_partial: bool,
    /// Include every run's per-round outcomes in the output.
    #[arg(long)]
    draws: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Args)]
struct DumpArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Only the states at these times.
    #[arg(long, value_delimiter = ',')]
    at: Vec<TimeStamp>,
    /// Print the schedule as source text instead of states.
    #[arg(long)]
    dsl: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

/// Whether pass/fail markers are colored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Style {
    pub color: bool,
}

impl Style {
    /// Color only on a terminal, and never when `WIGNERBOX_NO_COLOR` is set.
    pub fn from_env() -> Self {
        Style {
            color: std::env::var_os("WIGNERBOX_NO_COLOR").is_none() && std::io::stdout().is_terminal(),
        }
    }

    fn mark(&self, ok: bool) -> String {
        let (text, code) = if ok { ("pass", 32) } else { ("FAIL", 31) };
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

/// A failure with its exit code; the message goes to the error stream.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Invalid(_) => EXIT_INPUT,
            _ => EXIT_ENGINE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the command line `args` (program name first).
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, style: Style) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Check(a) => cmd_check(a, out, style),
        Command::Sample(a) => cmd_sample(a, out, err),
        Command::Validate(a) => cmd_validate(a, out, style),
        Command::Dump(a) => cmd_dump(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

struct Loaded {
    name: String,
    text: Option<String>,
}

impl SourceArgs {
    fn load(&self) -> Result<Loaded, Failure> {
        match self.path.as_ref().or(self.file.as_ref()) {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::input(format!("cannot read {}: {e}", p.display())))?;
                Ok(Loaded {
                    name: p.display().to_string(),
                    text: Some(text),
                })
            }
            None => Ok(Loaded {
                name: "builtin fr".to_string(),
                text: None,
            }),
        }
    }

    /// The validated schedule.
    fn schedule(&self) -> Result<(String, Schedule), Failure> {
        let loaded = self.load()?;
        let schedule = match &loaded.text {
            None => canonical_fr_schedule(),
            Some(text) => parse_schedule(text).map_err(|e| parse_failure(&loaded.name, e))?,
        };
        Ok((loaded.name, schedule))
    }

    fn is_builtin(&self) -> bool {
        self.path.is_none() && self.file.is_none()
    }
}

fn parse_failure(name: &str, e: ParseError) -> Failure {
    Failure::input(match e {
        ParseError::Syntax { .. } => format!("{name}: {e}"),
        ParseError::Semantic(ds) => {
            let lines: Vec<String> = ds.iter().map(|d| format!("{name}: {d}")).collect();
            format!("schedule is invalid\n{}", lines.join("\n"))
        }
    })
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    let _ = writeln!(out, "{text}");
}

fn default_checkpoints(engine: &Engine, builtin: bool) -> Vec<TimeStamp> {
    if builtin {
        return canonical_expected().iter().filter_map(|e| e.time().ok()).collect();
    }
    let mut times: Vec<TimeStamp> = engine.steps().iter().map(|s| s.at).collect();
    times.dedup();
    times
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Outcome {
    let (name, schedule) = a.source.schedule()?;
    let engine = Engine::new(schedule)?;
    let checkpoints = if a.checkpoints.is_empty() {
        default_checkpoints(&engine, a.source.is_builtin())
    } else {
        a.checkpoints.clone()
    };
    let config = RunConfig {
        mode: a.mode,
        checkpoints,
        comparison_time_policy: ComparisonTimePolicy {
            observation_offset: a.comparison_offset,
        },
        ..RunConfig::default()
    };
    let report = build_report(&engine, &config, &name)?;
    match a.format {
        Format::Json => emit_json(out, &report),
        Format::Table => {
            let _ = write!(out, "{}", render_table(&report));
        }
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct CheckReport {
    source: String,
    passed: bool,
    checks: Vec<CheckpointCheck>,
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write, style: Style) -> Outcome {
    if a.mode != Mode::Exact {
        return Err(Failure::input("check compares exact amplitudes; use --mode exact"));
    }
    let (name, schedule) = a.source.schedule()?;
    let engine = Engine::new(schedule)?;
    let expected: Vec<ExpectedCheckpoint> = if a.expected.is_empty() {
        canonical_expected()
    } else {
        let mut v = Vec::new();
        for p in &a.expected {
            let text =
                std::fs::read_to_string(p).map_err(|e| Failure::input(format!("cannot read {}: {e}", p.display())))?;
            let exp: ExpectedCheckpoint =
                serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
            exp.time()
                .map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
            v.push(exp);
        }
        v
    };
    let (trace, failure) = engine.evolve_round_partial::<ExactReal>();
    let mut checks = Vec::with_capacity(expected.len());
    for exp in &expected {
        let t = exp.time()?;
        match &failure {
            Some((at, e)) if t >= *at => checks.push(CheckpointCheck {
                checkpoint: exp.checkpoint.clone(),
                rewrite: exp.rewrite.clone(),
                passed: false,
                mismatches: Vec::new(),
                notes: vec![format!("not reached: the step at {at} failed: {e}")],
            }),
            _ => checks.push(engine.check_checkpoint(&trace, exp)?),
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    match a.format {
        Format::Json => emit_json(
            out,
            &CheckReport {
                source: name,
                passed,
                checks,
            },
        ),
        Format::Table => {
            let _ = writeln!(out, "schedule {name}");
            for c in &checks {
                let basis = if c.rewrite.is_empty() {
                    "-".to_string()
                } else {
                    c.rewrite.join(", ")
                };
                let _ = writeln!(out, "{:<6} {:<10} {}", c.checkpoint, basis, style.mark(c.passed));
                for m in &c.mismatches {
                    let labels: Vec<String> = m.labels.iter().map(|(r, t)| format!("{r}={t}")).collect();
                    let _ = writeln!(
                        out,
                        "         |{}>  expected {}  actual {}",
                        labels.join(" "),
                        m.expected,
                        m.actual
                    );
                }
                for n in &c.notes {
                    let _ = writeln!(out, "         note: {n}");
                }
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            let _ = writeln!(out, "{} of {} checkpoints match", checks.len() - failed, checks.len());
        }
    }
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Debug, Serialize)]
struct SampleConfig {
    runs: u64,
    seed: u64,
    max_rounds: u64,
    allow_partial: bool,
}

#[derive(Debug, Serialize)]
struct SampleReport {
    source: String,
    config: SampleConfig,
    halt_outcome: String,
    summary: SamplingSummary,
    /// Binomial standard deviation of the per-round halt frequency.
    frequency_sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<RunSample>>,
}

fn cmd_sample(a: &SampleArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    if a.mode == Mode::Collapse {
        return Err(Failure::input(
            "sampling draws from the unitary distribution; use --mode exact",
        ));
    }
    let (name, schedule) = a.source.schedule()?;
    let engine = Engine::new(schedule)?;
    let mut summary = match engine.sample_many(a.runs, a.seed, a.max_rounds, a.allow_partial) {
        Ok(s) => s,
        Err(EngineError::MaxRoundsExceeded { partial }) => {
            let _ = writeln!(
                err,
                "partial run: {}",
                serde_json::to_string(&partial).unwrap_or_default()
            );
            return Err(EngineError::MaxRoundsExceeded { partial }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let samples = std::mem::take(&mut summary.samples);
    let p = summary.halt_probability;
    let n = summary.total_rounds.max(1) as f64;
    let report = SampleReport {
        source: name,
        config: SampleConfig {
            runs: a.runs,
            seed: a.seed,
            max_rounds: a.max_rounds,
            allow_partial: a.allow_partial,
        },
        halt_outcome: engine.halt_key().join(","),
        frequency_sigma: (p * (1.0 - p) / n).sqrt(),
        summary,
        samples: a.draws.then_some(samples),
    };
    match a.format {
        Format::Json => emit_json(out, &report),
        Format::Table => {
            let s = &report.summary;
            let _ = writeln!(out, "schedule {}  seed {}  runs {}", report.source, s.seed, s.runs);
            let _ = writeln!(out, "halted runs        {} (unhalted {})", s.halted, s.unhalted);
            match s.mean_halting_round {
                Some(m) => {
                    let _ = writeln!(out, "mean halting round {m:.4}");
                }
                None => {
                    let _ = writeln!(out, "mean halting round -");
                }
            }
            let _ = writeln!(out, "rounds sampled     {}", s.total_rounds);
            let _ = writeln!(
                out,
                "halt frequency     {:.6} (probability {:.6}, sigma {:.6})",
                s.halt_frequency, s.halt_probability, report.frequency_sigma
            );
            let _ = writeln!(out, "outcome counts");
            for (k, c) in &s.counts {
                let _ = writeln!(out, "  {k:<20} {c:>8}  {:.6}", *c as f64 / n);
            }
            if let Some(samples) = &report.samples {
                for r in samples {
                    let _ = writeln!(out, "run {}: {}", r.run, r.draws.join(" "));
                }
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    source: String,
    valid: bool,
    diagnostics: Vec<Diagnostic>,
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write, style: Style) -> Outcome {
    let loaded = a.source.load()?;
    let schedule = match &loaded.text {
        None => canonical_fr_schedule(),
        Some(text) => parse_unchecked(text).map_err(|e| parse_failure(&loaded.name, e))?,
    };
    let diagnostics = validate(&schedule);
    let valid = diagnostics.is_empty();
    match a.format {
        Format::Json => emit_json(
            out,
            &ValidateReport {
                source: loaded.name,
                valid,
                diagnostics,
            },
        ),
        Format::Table => {
            for d in &diagnostics {
                let _ = writeln!(out, "{}: {d}", loaded.name);
            }
            let _ = writeln!(out, "{} {}", loaded.name, style.mark(valid));
        }
    }
    Ok(if valid { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Debug, Serialize)]
struct StateDump {
    time: TimeStamp,
    step: Option<usize>,
    action: Option<&'static str>,
    norm_sqr: f64,
    terms: Vec<TermDump>,
}

#[derive(Debug, Serialize)]
struct DumpReport {
    source: String,
    mode: Mode,
    states: Vec<StateDump>,
}

fn dump_states<A: Amplitude>(engine: &Engine, at: &[TimeStamp]) -> Result<Vec<StateDump>, EngineError> {
    let trace = engine.evolve_round::<A>()?;
    if !at.is_empty() {
        return Ok(at
            .iter()
            .map(|&t| {
                let psi = trace.state_at(t);
                let step = engine.steps().iter().find(|s| s.at == t).map(|s| s.index);
                StateDump {
                    time: t,
                    step,
                    action: step.map(|i| engine.schedule().steps[i].action.kind()),
                    norm_sqr: psi.norm_sqr().to_f64(),
                    terms: psi.dump(),
                }
            })
            .collect());
    }
    Ok(engine
        .steps()
        .iter()
        .zip(&trace.after)
        .map(|(s, (t, psi))| StateDump {
            time: *t,
            step: Some(s.index),
            action: Some(engine.schedule().steps[s.index].action.kind()),
            norm_sqr: psi.norm_sqr().to_f64(),
            terms: psi.dump(),
        })
        .collect())
}

fn cmd_dump(a: &DumpArgs, out: &mut dyn Write) -> Outcome {
    let (name, schedule) = a.source.schedule()?;
    if a.dsl {
        let _ = write!(out, "{}", to_dsl(&schedule));
        return Ok(EXIT_OK);
    }
    let engine = Engine::new(schedule)?;
    let states = match a.mode {
        Mode::Exact => dump_states::<ExactReal>(&engine, &a.at)?,
        Mode::Float => dump_states::<f64>(&engine, &a.at)?,
        Mode::Collapse => {
            return Err(Failure::input(
                "dump shows the unitary evolution; use --mode exact or float",
            ))
        }
    };
    match a.format {
        Format::Json => emit_json(
            out,
            &DumpReport {
                source: name,
                mode: a.mode,
                states,
            },
        ),
        Format::Table => {
            for s in &states {
                let head = match (s.step, s.action) {
                    (Some(i), Some(k)) => format!("after step {i} ({k}) at {}", s.time),
                    _ => format!("at {}", s.time),
                };
                let _ = writeln!(out, "{head}");
                for t in &s.terms {
                    let labels: Vec<String> = t.labels.iter().map(|(r, v)| format!("{r}={v}")).collect();
                    let _ = writeln!(out, "  {:>16}  |{}>", t.amplitude_exact, labels.join(" "));
                }
            }
        }
    }
    Ok(EXIT_OK)
}
