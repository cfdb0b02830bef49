//! `minocc`: mine, generate, verify and benchmark from the command line.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 usage error,
//! 3 input error, 4 safety-bound refusal.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use minocc::bench::{self, BenchConfig, MinerKind};
use minocc::verify::{self, ConstraintMode, Counterexample, VerifyConfig};
use minocc::{
    generate_random_sequence, mine_naive_with, mine_with, parse_sequence, ConstraintSet, Error, MiningParams,
    RunLimits, Threshold, TimedSequence,
};
use serde::Serialize;

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_SAFETY: u8 = 4;

#[derive(Parser)]
#[command(name = "minocc", version, about = "Frequent pattern mining in a long timestamped sequence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine frequent patterns from a sequence file.
    Mine(MineArgs),
    /// Write a random sequence with equiprobable singleton itemsets.
    Generate(GenerateArgs),
    /// Fuzz both miners against the brute-force oracle.
    Verify(VerifyArgs),
    /// Benchmark the miners on generated sequences; CSV on stdout.
    Bench(BenchArgs),
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    input: PathBuf,
    /// Absolute count `N` or percentage of the sequence length `P%`.
    #[arg(long)]
    threshold: Threshold,
    #[arg(long, default_value_t = 10)]
    max_pattern_len: usize,
    #[arg(long, default_value_t = 1)]
    min_gap: i64,
    #[arg(long)]
    max_gap: Option<i64>,
    #[arg(long)]
    max_duration: Option<i64>,
    /// Comma-separated tokens that may not appear in patterns.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Use the naive generate-and-test miner.
    #[arg(long)]
    naive: bool,
    /// Lift the naive miner's safety bounds.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    jobs: Option<usize>,
    /// Accepted for symmetry with the other subcommands; mining is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_occurrences: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    length: usize,
    #[arg(long)]
    alphabet: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    None,
    Random,
    Mixed,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Maximum number of entries in a generated sequence.
    #[arg(long, default_value_t = 25)]
    max_length: usize,
    #[arg(long, default_value_t = 5)]
    max_alphabet: usize,
    #[arg(long, default_value_t = 4)]
    max_threshold: usize,
    #[arg(long, default_value_t = 5)]
    max_pattern_len: usize,
    /// Which trials draw random gap, duration and item constraints.
    #[arg(long, value_enum, default_value_t = ModeArg::Mixed)]
    constraint_mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    /// Re-check a counterexample printed by an earlier run.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// `A..B:STEP`, `A..B` or a comma list.
    #[arg(long, default_value = "20")]
    lengths: String,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "incremental")]
    miners: Vec<String>,
    /// `maxgap=N,mingap=N,maxduration=N,maxpatternlen=N`.
    #[arg(long)]
    constraints: Option<String>,
    #[arg(long, default_value_t = 10)]
    alphabet: usize,
    #[arg(long, default_value = "10%")]
    threshold: Threshold,
    #[arg(long, default_value_t = 10)]
    max_pattern_len: usize,
    /// Seconds per run before it is recorded as censored.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Resident memory in bytes before a run is recorded as censored.
    #[arg(long)]
    mem_budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
}

/// One output line of `mine`.
#[derive(Serialize)]
struct PatternRecord<'a> {
    pattern: Vec<&'a str>,
    support: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    occurrences: Option<Vec<&'a [i64]>>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Format { .. } => EXIT_INPUT,
            Error::SafetyBound(_) => EXIT_SAFETY,
            Error::InvalidParameter(_) | Error::BudgetExceeded(_) => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Mine(args) => cmd_mine(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("minocc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn set_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(())
}

fn read_sequence(path: &PathBuf) -> Result<TimedSequence, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_sequence(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn mine_constraints(args: &MineArgs, seq: &TimedSequence) -> Result<ConstraintSet, Failure> {
    if args.min_gap < 0 {
        return Err(Failure::usage("--min-gap must be non-negative"));
    }
    let mut c = ConstraintSet::default().with_min_gap(args.min_gap);
    if let Some(g) = args.max_gap {
        c = c.with_max_gap(g);
    }
    if let Some(d) = args.max_duration {
        c = c.with_max_duration(d);
    }
    // Tokens absent from the sequence cannot occur in any pattern anyway.
    c = c.with_excluded(args.exclude.iter().filter_map(|t| seq.alphabet().id(t.trim())));
    c.validate()?;
    Ok(c)
}

fn cmd_mine(args: MineArgs) -> CmdResult {
    set_jobs(args.jobs)?;
    let seq = read_sequence(&args.input)?;
    let constraints = mine_constraints(&args, &seq)?;
    let params = MiningParams::new(args.threshold)
        .with_max_pattern_len(args.max_pattern_len)
        .with_constraints(constraints);
    let limits = if args.force { RunLimits::forced() } else { RunLimits::default() };

    let started = Instant::now();
    let result = if args.naive {
        mine_naive_with(&seq, &params, &limits, |_, _| {})
    } else {
        mine_with(&seq, &params, &limits, |_, _| {})
    }?;
    let elapsed = started.elapsed();

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for m in &result.patterns {
        let record = PatternRecord {
            pattern: m.pattern().tokens(seq.alphabet()),
            support: m.support(),
            occurrences: (!args.no_occurrences).then(|| m.occurrences().iter().map(|o| o.positions()).collect()),
        };
        serde_json::to_writer(&mut out, &record).map_err(|e| Failure::input(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    eprintln!(
        "{} patterns, {} levels, threshold {}, {:.3}s ({})",
        result.len(),
        result.levels,
        result.threshold,
        elapsed.as_secs_f64(),
        if args.naive { "naive" } else { "incremental" }
    );
    Ok(0)
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let seq = generate_random_sequence(args.length, args.alphabet, args.seed)?;
    let text = seq.to_text();
    match args.output {
        Some(path) => fs::write(&path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    set_jobs(args.jobs)?;
    if let Some(path) = &args.replay {
        let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let cx: Counterexample =
            serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let case = cx.to_case().map_err(|e| Failure::input(e.to_string()))?;
        return Ok(match verify::check_case(&case) {
            Ok(_) => {
                eprintln!("replayed trial {}: all checks agree", cx.trial);
                0
            }
            Err(problem) => {
                eprintln!("replayed trial {}: {problem}", cx.trial);
                EXIT_MISMATCH
            }
        });
    }

    let cfg = VerifyConfig {
        trials: args.trials,
        max_sequence_len: args.max_length,
        max_alphabet: args.max_alphabet,
        max_threshold: args.max_threshold,
        max_pattern_len: args.max_pattern_len,
        mode: match args.constraint_mode {
            ModeArg::None => ConstraintMode::None,
            ModeArg::Random => ConstraintMode::Random,
            ModeArg::Mixed => ConstraintMode::Mixed,
        },
        seed: args.seed,
    };
    let started = Instant::now();
    let report = verify::run(&cfg)?;
    match &report.counterexample {
        None => {
            eprintln!(
                "{} trials agree: {} patterns and {} occurrences checked, {} trials exhaustive, {:.2}s",
                report.trials,
                report.patterns_checked,
                report.occurrences_checked,
                report.exhaustive_trials,
                started.elapsed().as_secs_f64()
            );
            Ok(0)
        }
        Some(cx) => {
            eprintln!("mismatch in trial {}: {}", cx.trial, cx.problem);
            let json = serde_json::to_string_pretty(cx).map_err(|e| Failure::input(e.to_string()))?;
            let _ = writeln!(io::stdout().lock(), "{json}");
            Ok(EXIT_MISMATCH)
        }
    }
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    set_jobs(args.jobs)?;
    let miners = args
        .miners
        .iter()
        .map(|m| m.parse::<MinerKind>())
        .collect::<Result<Vec<_>, _>>()?;
    let time_budget = args
        .time_budget
        .map(|s| {
            if s.is_finite() && s > 0.0 {
                Ok(Duration::from_secs_f64(s))
            } else {
                Err(Failure::usage("--time-budget must be positive"))
            }
        })
        .transpose()?;
    let cfg = BenchConfig {
        lengths: bench::parse_lengths(&args.lengths)?,
        reps: args.reps,
        alphabet: args.alphabet,
        threshold: args.threshold,
        max_pattern_len: args.max_pattern_len,
        miners,
        constraints: args.constraints.as_deref().map(bench::parse_constraints).transpose()?,
        time_budget,
        mem_budget: args.mem_budget,
        seed: args.seed,
    };

    let mut writer = bench::csv_writer(io::stdout().lock());
    bench::run(&cfg, |record| bench::write_record(&mut writer, record))?;
    Ok(0)
}
