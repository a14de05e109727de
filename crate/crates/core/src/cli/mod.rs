//! The `numtok` command line.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors, 2 for I/O
//! errors. Settings resolve as flag, then environment variable, then the
//! JSON file given by `--config`, then the built-in default.

mod bench;
mod config;

pub use bench::{bench_run, extract_answer, BenchConfig, BenchSummary, Prediction, Usage};
pub use config::FileConfig;

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use crate::api::{decode_batch, encode_batch, generate_dataset, EncoderSpec};
use crate::curriculum::{run_simulation, SimConfig, SimTask};
use crate::encoders::{read_ntke, write_ntke, Scheme};
use crate::numeric::Radix;
use crate::probe::{
    gradcheck, max_rel_error, noise_sweep, operator_learn_demo, train_identity_head,
    IdentityConfig, Loss, Network, Operation, OperatorConfig, Projection,
};
use crate::taskgen::{read_dataset, Task};
use crate::textparse::{tokenize, write_jsonl};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "numtok", version, about = "Number encodings, numeracy benchmarks and curriculum tools")]
struct Cli {
    /// JSON file with fallback values for any flag.
    #[arg(long, global = true, env = "NUMTOK_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a benchmark dataset as JSONL.
    Gen(GenArgs),
    /// Encode numbers (one per line) into an NTKE matrix.
    Encode(CodecArgs),
    /// Decode an NTKE matrix back into numbers.
    Decode(CodecArgs),
    /// Split text from standard input into text spans and numbers.
    Parse(ParseArgs),
    /// Score a predictions file against a reference dataset.
    Score(ScoreArgs),
    /// Run the curriculum scheduler against synthetic learning curves.
    CurriculumSim(SimArgs),
    /// Run a learnability probe.
    Probe(ProbeArgs),
    /// Query a chat-completions endpoint for every problem in a dataset.
    BenchRun(BenchArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    task: Option<String>,
    /// Number of problems.
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long, env = "NUMTOK_SEED")]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "NUMTOK_SHARDS")]
    shards: Option<usize>,
    /// Precision base, 2 or 10.
    #[arg(long)]
    base: Option<u32>,
}

#[derive(Debug, Args)]
struct CodecArgs {
    #[arg(long, env = "NUMTOK_SCHEME")]
    scheme: Option<String>,
    #[arg(long = "d-model", env = "NUMTOK_D_MODEL")]
    d_model: Option<usize>,
    /// BitToken block base, 2 or 10.
    #[arg(long)]
    radix: Option<u32>,
    /// Leave out the reciprocal block.
    #[arg(long = "no-reciprocal")]
    no_reciprocal: bool,
    /// Input file; `-` or omitted reads standard input.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParseArgs {
    /// Use the pattern without the optional minus sign.
    #[arg(long)]
    unsigned: bool,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Comma-separated `task:max_difficulty` pairs, e.g. `mult:12,mean:30`.
    #[arg(long)]
    tasks: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long = "batch-tokens")]
    batch_tokens: Option<u64>,
    #[arg(long, env = "NUMTOK_SEED")]
    seed: Option<u64>,
    #[arg(long = "log-every")]
    log_every: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// identity, operator, noise or gradcheck.
    kind: String,
    #[arg(long, env = "NUMTOK_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long = "d-model", env = "NUMTOK_D_MODEL")]
    d_model: Option<usize>,
    #[arg(long, env = "NUMTOK_SCHEME")]
    scheme: Option<String>,
    /// add or mult (operator probe).
    #[arg(long)]
    op: Option<String>,
    /// Comma-separated noise levels (noise probe).
    #[arg(long)]
    sigmas: Option<String>,
    /// Sample count (noise probe) or seed count (gradcheck).
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Full URL of the chat-completions endpoint.
    #[arg(long, env = "NUMTOK_ENDPOINT")]
    endpoint: Option<String>,
    #[arg(long, env = "NUMTOK_MODEL")]
    model: Option<String>,
    /// Environment variable that holds the API key.
    #[arg(long = "api-key-env")]
    api_key_env: Option<String>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long = "backoff-ms")]
    backoff_ms: Option<u64>,
    #[arg(long = "timeout-secs")]
    timeout_secs: Option<u64>,
    /// Only the first N problems.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Raw response log; defaults to the output path with `.raw.jsonl`.
    #[arg(long = "raw-log")]
    raw_log: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                    eprintln!("{first} (see --help)");
                    1
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let section = match &cli.command {
        Command::Gen(_) => "gen",
        Command::Encode(_) => "encode",
        Command::Decode(_) => "decode",
        Command::Parse(_) => "parse",
        Command::Score(_) => "score",
        Command::CurriculumSim(_) => "curriculum-sim",
        Command::Probe(_) => "probe",
        Command::BenchRun(_) => "bench-run",
    };
    let cfg = FileConfig::load(cli.config.as_deref(), section)?;
    match cli.command {
        Command::Gen(a) => gen(a, &cfg),
        Command::Encode(a) => encode(a, &cfg),
        Command::Decode(a) => decode(a, &cfg),
        Command::Parse(a) => parse(a, &cfg),
        Command::Score(a) => score(a, &cfg),
        Command::CurriculumSim(a) => curriculum_sim(a, &cfg),
        Command::Probe(a) => probe(a, &cfg),
        Command::BenchRun(a) => bench(a, &cfg),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_input(path: Option<&Path>) -> Result<Vec<u8>> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::read(p).map_err(|e| Error::io(p, e)),
        _ => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Error::io("<stdin>", e))?;
            Ok(buf)
        }
    }
}

fn gen(a: GenArgs, cfg: &FileConfig) -> Result<()> {
    let task: Task = cfg.require::<String>(a.task, "task")?.parse()?;
    let n: usize = cfg.require(a.n, "n")?;
    let seed = cfg.pick(a.seed, "seed", 0)?;
    let shards = cfg.pick(a.shards, "shards", 1)?;
    let base = Radix::from_base(cfg.pick(a.base, "base", 10)?)?;
    let bytes = generate_dataset(seed, task, n, shards, base)?;
    emit(out_path(a.out, cfg)?.as_deref(), &bytes)
}

fn out_path(flag: Option<PathBuf>, cfg: &FileConfig) -> Result<Option<PathBuf>> {
    match flag {
        Some(p) => Ok(Some(p)),
        None => cfg.get("out"),
    }
}

fn encoder_spec(a: &CodecArgs, cfg: &FileConfig) -> Result<EncoderSpec> {
    let scheme: Scheme = cfg.pick(a.scheme.clone(), "scheme", "bittoken".to_owned())?.parse()?;
    let d_model = cfg.pick(a.d_model, "d-model", 768)?;
    let radix = Radix::from_base(cfg.pick(a.radix, "radix", 2)?)?;
    let no_reciprocal = a.no_reciprocal || cfg.get::<bool>("no-reciprocal")?.unwrap_or(false);
    Ok(EncoderSpec {
        include_reciprocal: !no_reciprocal,
        radix,
        ..EncoderSpec::new(scheme, d_model)
    })
}

fn encode(a: CodecArgs, cfg: &FileConfig) -> Result<()> {
    let spec = encoder_spec(&a, cfg)?;
    let input: Option<PathBuf> = match &a.input {
        Some(p) => Some(p.clone()),
        None => cfg.get("in")?,
    };
    let out = out_path(a.out.clone(), cfg)?.ok_or_else(|| Error::invalid("--out is required for encode"))?;
    let text = read_input(input.as_deref())?;
    let text = String::from_utf8(text).map_err(|_| Error::invalid("input is not UTF-8"))?;
    let label = input.as_ref().map_or("<stdin>".to_owned(), |p| p.display().to_string());
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::invalid(format!("{label} line {}: {t:?} is not a number", i + 1)))?;
        values.push(v);
    }
    let m = encode_batch(&values, &spec)?;
    write_ntke(&out, &m)
}

fn decode(a: CodecArgs, cfg: &FileConfig) -> Result<()> {
    let spec = encoder_spec(&a, cfg)?;
    let input: PathBuf = cfg.require(a.input.clone(), "in")?;
    let m = read_ntke(&input)?;
    let values = decode_batch(&m, &spec)?;
    let mut buf = String::new();
    for v in values {
        buf.push_str(&format!("{v:?}\n"));
    }
    emit(out_path(a.out, cfg)?.as_deref(), buf.as_bytes())
}

fn parse(a: ParseArgs, cfg: &FileConfig) -> Result<()> {
    let unsigned = a.unsigned || cfg.get::<bool>("unsigned")?.unwrap_or(false);
    let input: Option<PathBuf> = match a.input {
        Some(p) => Some(p),
        None => cfg.get("in")?,
    };
    let bytes = read_input(input.as_deref())?;
    let text = String::from_utf8(bytes).map_err(|_| Error::invalid("input is not UTF-8"))?;
    let stream = tokenize(&text, !unsigned);
    let mut buf = Vec::new();
    write_jsonl(&stream, &mut buf)?;
    emit(out_path(a.out, cfg)?.as_deref(), &buf)
}

fn score(a: ScoreArgs, cfg: &FileConfig) -> Result<()> {
    let pred: PathBuf = cfg.require(a.pred, "pred")?;
    let reference: PathBuf = cfg.require(a.reference, "ref")?;
    let report = crate::metrics::score_file(&pred, &reference)?;
    let mut text = report.to_json();
    text.push('\n');
    emit(out_path(a.out, cfg)?.as_deref(), text.as_bytes())
}

fn parse_task_list(s: &str) -> Result<Vec<SimTask>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (t, d) = p
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected task:max_difficulty, got {p:?}")))?;
            let max_difficulty = d
                .parse()
                .map_err(|_| Error::invalid(format!("bad max difficulty in {p:?}")))?;
            Ok(SimTask {
                task: t.parse()?,
                max_difficulty,
                lag: 100.0,
            })
        })
        .collect()
}

fn curriculum_sim(a: SimArgs, cfg: &FileConfig) -> Result<()> {
    let tasks = match &a.tasks {
        Some(s) => parse_task_list(s)?,
        None => match cfg.get::<serde_json::Value>("tasks")? {
            Some(serde_json::Value::String(s)) => parse_task_list(&s)?,
            Some(v) => serde_json::from_value(v).map_err(|e| Error::json("config key \"tasks\"", e))?,
            None => return Err(Error::invalid("--tasks is required (e.g. mult:12,mean:30)")),
        },
    };
    let sim = SimConfig {
        tasks,
        steps: cfg.pick(a.steps, "steps", 10_000)?,
        batch_tokens: cfg.pick(a.batch_tokens, "batch-tokens", 4096)?,
        seed: cfg.pick(a.seed, "seed", 0)?,
        lr_max: cfg.pick(None, "lr-max", 1e-3)?,
        rate: cfg.pick(None, "rate", 0.02)?,
        log_every: cfg.pick(a.log_every, "log-every", 1)?,
    };
    let mut buf = Vec::new();
    let state = run_simulation(&sim, &mut buf)?;
    emit(out_path(a.out, cfg)?.as_deref(), &buf)?;
    let frontiers: Vec<String> = state
        .tasks
        .iter()
        .map(|t| format!("{}={}/{}", t.task, t.frontier, t.max_difficulty))
        .collect();
    eprintln!("final frontiers: {}", frontiers.join(" "));
    Ok(())
}

fn probe(a: ProbeArgs, cfg: &FileConfig) -> Result<()> {
    let seed = cfg.pick(a.seed, "seed", 0)?;
    let out = out_path(a.out.clone(), cfg)?;
    let value = match a.kind.as_str() {
        "identity" => {
            let defaults = IdentityConfig::default();
            let c = IdentityConfig {
                d_model: cfg.pick(a.d_model, "d-model", defaults.d_model)?,
                steps: cfg.pick(a.steps, "steps", defaults.steps)?,
                projection: cfg.pick(None, "projection", Projection::Orthogonal)?,
                label_noise: cfg.pick(None, "label-noise", 0.0)?,
                seed,
                ..defaults
            };
            serde_json::to_value(train_identity_head(&c)?)
        }
        "operator" => {
            let defaults = OperatorConfig::default();
            let scheme: Scheme = cfg.pick(a.scheme.clone(), "scheme", "fone".to_owned())?.parse()?;
            let op: Operation = cfg.pick(a.op.clone(), "op", "add".to_owned())?.parse()?;
            let c = OperatorConfig {
                scheme,
                operation: op,
                steps: cfg.pick(a.steps, "steps", defaults.steps)?,
                seed,
                ..defaults
            };
            serde_json::to_value(operator_learn_demo(&c)?)
        }
        "noise" => {
            let scheme: Scheme = cfg.pick(a.scheme.clone(), "scheme", "bittoken".to_owned())?.parse()?;
            let sigmas: String = cfg.pick(a.sigmas.clone(), "sigmas", "0,0.1,0.25,0.49,0.6".to_owned())?;
            let sigmas: Vec<f64> = sigmas
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite() && *v >= 0.0)
                        .ok_or_else(|| Error::invalid(format!("bad noise level {s:?}")))
                })
                .collect::<Result<_>>()?;
            let n = cfg.pick(a.n, "n", 10_000)?;
            let points = noise_sweep(scheme, &sigmas, n, seed)?;
            Ok(json!({"task": "noise_sweep", "scheme": scheme, "n": n, "seed": seed, "points": points}))
        }
        "gradcheck" => {
            let seeds = cfg.pick(a.n, "n", 20)? as u64;
            let mut worst_linear = 0.0f64;
            let mut worst_mlp = 0.0f64;
            for s in seed..seed + seeds {
                let mut rng = ChaCha20Rng::seed_from_u64(s);
                let x = Array2::from_shape_fn((16, 24), |_| rng.gen_range(-1.0..1.0));
                let t = Array2::from_shape_fn((16, 12), |_| f64::from(rng.gen_range(0..2u8)));
                let lin = Network::linear(&mut rng, 24, 12);
                worst_linear = worst_linear.max(max_rel_error(&gradcheck(&lin, &x, &t, Loss::Bce)?));
                let mlp = Network::mlp(&mut rng, 24, 32, 12);
                let xb = x.slice(ndarray::s![..8, ..]).to_owned();
                let tb = t.slice(ndarray::s![..8, ..]).to_owned();
                worst_mlp = worst_mlp.max(max_rel_error(&gradcheck(&mlp, &xb, &tb, Loss::Bce)?));
            }
            Ok(json!({
                "task": "gradcheck",
                "seeds": seeds,
                "first_seed": seed,
                "max_rel_error_linear": worst_linear,
                "max_rel_error_mlp": worst_mlp,
            }))
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown probe {other:?} (expected identity, operator, noise or gradcheck)"
            )))
        }
    }
    .map_err(|e| Error::json("probe report", e))?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::json("probe report", e))?;
    text.push('\n');
    emit(out.as_deref(), text.as_bytes())
}

fn bench(a: BenchArgs, cfg: &FileConfig) -> Result<()> {
    let reference: PathBuf = cfg.require(a.reference, "ref")?;
    let endpoint: String = cfg.require(a.endpoint, "endpoint")?;
    let model: String = cfg.require(a.model, "model")?;
    let out: PathBuf = cfg.require(a.out, "out")?;
    let raw_log = match a.raw_log {
        Some(p) => p,
        None => cfg
            .get::<PathBuf>("raw-log")?
            .unwrap_or_else(|| out.with_extension("raw.jsonl")),
    };
    let bc = BenchConfig {
        endpoint,
        model,
        api_key_env: cfg.pick(a.api_key_env, "api-key-env", "OPENAI_API_KEY".to_owned())?,
        concurrency: cfg.pick(a.concurrency, "concurrency", 4)?,
        retries: cfg.pick(a.retries, "retries", 3)?,
        backoff: Duration::from_millis(cfg.pick(a.backoff_ms, "backoff-ms", 500)?),
        timeout: Duration::from_secs(cfg.pick(a.timeout_secs, "timeout-secs", 60)?),
        out,
        raw_log,
    };
    let (_, mut problems) = read_dataset(&reference)?;
    if let Some(limit) = a.limit.map_or_else(|| cfg.get::<usize>("limit"), |l| Ok(Some(l)))? {
        problems.truncate(limit);
    }
    let summary = bench_run(&problems, &bc)?;
    eprintln!(
        "{} problems: {} answered, {} failed",
        summary.total, summary.answered, summary.failed
    );
    if summary.failed > 0 {
        eprintln!("warning: {} requests produced no answer; see {}", summary.failed, bc.raw_log.display());
    }
    Ok(())
}
