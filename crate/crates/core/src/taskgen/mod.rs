//! Deterministic generator for the nine numeracy benchmark tasks.
//!
//! Each problem is drawn from its own ChaCha20 substream (see [`substream`]),
//! answers are computed exactly from the operands as written in the prompt and
//! rounded to 15 significant digits, and samples that leave the benchmark
//! interval or lose information in plain `f64` evaluation are redrawn.

mod lists;
pub mod oracle;
mod prompts;
mod rng;
mod sample;

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use lists::{
    candidate_is_valid, draw_candidate, exact_mean_distance, gen_number_list, LIST_CANDIDATES,
    LIST_LENGTHS,
};
pub use oracle::Op;
pub use prompts::{
    arithmetic_system, interval_letter, interval_system, minmax_system, render_list,
    sorting_system,
};
pub use rng::{substream, MAX_INDEX, RNG_ID};
pub use sample::{
    in_range, pow10, round_to, sample_operand, sample_signs, split_precision, triangular,
    uniform_decade, DECADES, MAX_MAGNITUDE, MIN_MAGNITUDE,
};

use crate::numeric::{format_decimal, Radix};
use crate::{Error, Result};

/// Attempts per substream before moving to the next reseed stream.
pub const MAX_ATTEMPTS: usize = 10_000;
pub const GENERATOR: &str = concat!("numtok/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    MinMax,
    Interval,
    Sorting,
    Add,
    Mult,
    Div,
    Exp,
    Mean,
    Std,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::MinMax,
        Task::Interval,
        Task::Sorting,
        Task::Add,
        Task::Mult,
        Task::Div,
        Task::Exp,
        Task::Mean,
        Task::Std,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::MinMax => "minmax",
            Task::Interval => "interval",
            Task::Sorting => "sorting",
            Task::Add => "add",
            Task::Mult => "mult",
            Task::Div => "div",
            Task::Exp => "exp",
            Task::Mean => "mean",
            Task::Std => "std",
        }
    }

    /// Tasks answered with a list or a letter and scored by exact match only.
    pub fn is_list_task(self) -> bool {
        matches!(self, Task::MinMax | Task::Interval | Task::Sorting)
    }

    /// Tasks that use the difficulty curriculum.
    pub fn has_curriculum(self) -> bool {
        matches!(self, Task::Mult | Task::Div | Task::Exp | Task::Mean | Task::Std)
    }

    pub fn system_prompt(self) -> String {
        match self {
            Task::MinMax => minmax_system(),
            Task::Interval => interval_system(),
            Task::Sorting => sorting_system(),
            _ => arithmetic_system(),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown task {s:?} (expected one of minmax, interval, sorting, add, mult, div, exp, mean, std)"
                ))
            })
    }
}

/// Task-specific generation parameters stored with each problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p12: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swapped: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_clamped: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_base: Option<u32>,
}

/// One benchmark item. `answer_value` is absent for letter and list answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub task: Task,
    pub question: String,
    pub system: String,
    pub operands: Vec<f64>,
    pub answer: String,
    pub answer_value: Option<f64>,
    pub difficulty: u32,
    pub meta: Meta,
}

impl Problem {
    /// System and user messages sent to a model.
    pub fn render_prompt(&self) -> (&str, &str) {
        (&self.system, &self.question)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub task: Task,
    pub count: usize,
    pub precision_base: Radix,
    /// Percentages for both positive / one negative / both negative.
    pub sign_schema: [u32; 3],
}

impl SamplerConfig {
    pub fn new(seed: u64, task: Task, count: usize) -> Self {
        Self {
            seed,
            task,
            count,
            precision_base: Radix::Decimal,
            sign_schema: [40, 40, 20],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sign_schema.iter().sum::<u32>() != 100 {
            return Err(Error::invalid(format!(
                "sign schema {:?} must sum to 100",
                self.sign_schema
            )));
        }
        if self.count as u64 > MAX_INDEX {
            return Err(Error::invalid("count exceeds the substream index space"));
        }
        Ok(())
    }
}

fn finish(task: Task, operands: Vec<f64>, question: String, answer: String, value: Option<f64>, meta: Meta, radix: Radix) -> Problem {
    let mut p = Problem {
        task,
        question,
        system: task.system_prompt(),
        operands,
        answer,
        answer_value: value,
        difficulty: 0,
        meta,
    };
    p.difficulty = crate::curriculum::difficulty_of(&p, radix);
    p
}

fn negate_if(v: f64, neg: bool) -> f64 {
    if neg {
        -v
    } else {
        v
    }
}

fn gen_add<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Option<Problem> {
    let radix = cfg.precision_base;
    let (p12, mut p1, mut p2) = split_precision(rng, radix);
    let a_decade = rng.gen_range(DECADES);
    let mut a = round_to(uniform_decade(rng, a_decade), p1, radix);
    let b_decade = rng.gen_range(DECADES);
    let mut b = round_to(uniform_decade(rng, b_decade), p2, radix);
    let swapped = rng.gen_bool(0.5);
    if swapped {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut p1, &mut p2);
    }
    let (na, nb) = sample_signs(rng, &cfg.sign_schema);
    let (a, b) = (negate_if(a, na), negate_if(b, nb));
    let op = if rng.gen_bool(0.5) { Op::Add } else { Op::Sub };
    binary_problem(Task::Add, a, op, b, p12, vec![p1, p2], Some(swapped), radix)
}

fn gen_mult<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Option<Problem> {
    let radix = cfg.precision_base;
    let (p12, p1, p2) = split_precision(rng, radix);
    let a_decade = rng.gen_range(DECADES);
    let a = round_to(uniform_decade(rng, a_decade), p1, radix);
    let b_decade = rng.gen_range(DECADES);
    let b = round_to(uniform_decade(rng, b_decade), p2, radix);
    let (na, nb) = sample_signs(rng, &cfg.sign_schema);
    binary_problem(Task::Mult, negate_if(a, na), Op::Mul, negate_if(b, nb), p12, vec![p1, p2], None, radix)
}

/// Quotient and divisor are sampled; the dividend is their `f64` product.
fn gen_div<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Option<Problem> {
    let radix = cfg.precision_base;
    let (p12, p1, p2) = split_precision(rng, radix);
    let q_decade = rng.gen_range(DECADES);
    let q = round_to(uniform_decade(rng, q_decade), p1, radix);
    let d_decade = rng.gen_range(DECADES);
    let d = round_to(uniform_decade(rng, d_decade), p2, radix);
    let (nq, nd) = sample_signs(rng, &cfg.sign_schema);
    let (q, d) = (negate_if(q, nq), negate_if(d, nd));
    let dividend = q * d;
    binary_problem(Task::Div, dividend, Op::Div, d, p12, vec![p1, p2], None, radix)
}

#[allow(clippy::too_many_arguments)]
fn binary_problem(task: Task, a: f64, op: Op, b: f64, p12: u32, precision: Vec<u32>, swapped: Option<bool>, radix: Radix) -> Option<Problem> {
    if !(in_range(a) && in_range(b)) || a == 0.0 || b == 0.0 {
        return None;
    }
    let value = oracle::accept(oracle::binary(a, op, b), op.apply_f64(a, b))?;
    let meta = Meta {
        op: Some(op.symbol().to_string()),
        p12: Some(p12),
        precision: Some(precision),
        swapped,
        precision_base: Some(radix.base()),
        ..Meta::default()
    };
    let question = prompts::binary_question(a, op.symbol(), b);
    Some(finish(task, vec![a, b], question, format_decimal(value), Some(value), meta, radix))
}

/// Integer exponent range for `ξ` given the base decade `x`.
pub fn xi_bounds(x: i32) -> (i64, i64) {
    let d = (x.unsigned_abs() + 1) as f64;
    ((-13.0 / d).ceil() as i64, (14.0 / d).floor() as i64)
}

fn gen_exp<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Option<Problem> {
    let radix = cfg.precision_base;
    // decade biased toward zero
    let x_cont = rng.gen_range(-14.0..15.0) * rng.gen::<f64>();
    let x = (x_cont.floor() as i32).clamp(-14, 14);
    let p = sample::sample_precision(rng, radix);
    let mut base = round_to(uniform_decade(rng, x), p, radix);
    let (lo, hi) = xi_bounds(x);
    let choices: Vec<i64> = (lo..=hi).filter(|&v| v != 0 && v != 1).collect();
    let (xi, clamped) = if choices.is_empty() {
        (-1, true)
    } else {
        (choices[rng.gen_range(0..choices.len())], false)
    };
    let mut exponent = if xi > 1 { xi as f64 } else { 1.0 / xi as f64 };
    if rng.gen_bool(0.5) {
        exponent = -exponent;
    }
    let integer_exponent = exponent.fract() == 0.0;
    let flip = rng.gen_bool(0.5);
    if base > 1.0 && integer_exponent && flip {
        base = -base;
    }
    if !in_range(base) {
        return None;
    }
    let value = oracle::accept(oracle::binary(base, Op::Pow, exponent), base.powf(exponent))?;
    let meta = Meta {
        op: Some("^".into()),
        precision: Some(vec![p]),
        x: Some(x),
        xi: Some(xi),
        xi_clamped: clamped.then_some(true),
        precision_base: Some(radix.base()),
        ..Meta::default()
    };
    let question = prompts::binary_question(base, '^', exponent);
    Some(finish(Task::Exp, vec![base, exponent], question, format_decimal(value), Some(value), meta, radix))
}

/// Spread range for a list whose mean lies in decade `x`.
pub fn spread_range(task: Task, x: i32) -> (i32, i32) {
    let upper = match task {
        Task::Mean | Task::Std => (x + 17).min(13),
        _ => (x + 2).min(13),
    };
    ((x - 13).min(13), upper)
}

struct ListDraw {
    values: Vec<f64>,
    x: i32,
    spread: i32,
    target_mean: f64,
}

fn draw_list<R: Rng + ?Sized>(rng: &mut R, task: Task, radix: Radix) -> Option<ListDraw> {
    let l = rng.gen_range(LIST_LENGTHS);
    let x = rng.gen_range(DECADES);
    let (lo, hi) = spread_range(task, x);
    if lo > hi {
        return None;
    }
    let spread = rng.gen_range(lo..=hi);
    let m = negate_if(uniform_decade(rng, x), rng.gen_bool(0.5));
    let values = gen_number_list(rng, l, spread, m, radix)?;
    Some(ListDraw {
        values,
        x,
        spread,
        target_mean: m,
    })
}

fn list_meta(d: &ListDraw, radix: Radix) -> Meta {
    Meta {
        length: Some(d.values.len()),
        x: Some(d.x),
        spread: Some(d.spread),
        target_mean: Some(d.target_mean),
        precision_base: Some(radix.base()),
        ..Meta::default()
    }
}

fn gen_minmax<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Option<Problem> {
    let radix = cfg.precision_base;
    let d = draw_list(rng, Task::MinMax, radix)?;
    let maximum = rng.gen_bool(0.5);
    let pick = d
        .values
        .iter()
        .copied()
        .reduce(|a, b| if (b > a) == maximum { b } else { a })
        .expect("non-empty list");
    let mut meta = list_meta(&d, radix);
    meta.direction = Some(if maximum { "max" } else { "min" }.into());
    let question = prompts::minmax_question(&d.values, maximum);
    Some(finish(Task::MinMax, d.values, question, format_decimal(pick), Some(pick), meta, radix))
}

fn gen_sorting<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Option<Problem> {
    let radix = cfg.precision_base;
    let d = draw_list(rng, Task::Sorting, radix)?;
    let ascending = rng.gen_bool(0.5);
    let mut sorted = d.values.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if !ascending {
        sorted.reverse();
    }
    let mut meta = list_meta(&d, radix);
    meta.direction = Some(if ascending { "ascending" } else { "descending" }.into());
    let question = prompts::sorting_question(&d.values, ascending);
    Some(finish(Task::Sorting, d.values, question, render_list(&sorted), None, meta, radix))
}

/// Operands are `[x, L_0, …, L_{l-1}]` with `L` sorted ascending.
fn gen_interval<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig) -> Option<Problem> {
    let radix = cfg.precision_base;
    let d = draw_list(rng, Task::Interval, radix)?;
    let mut sorted = d.values.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let l = sorted.len();
    let pos = rng.gen_range(0..=l);
    let offset = pow10(d.spread) / l as f64;
    let reference = if pos == 0 {
        sorted[0] - offset
    } else if pos == l {
        sorted[l - 1] + offset
    } else {
        let (lo, hi) = (sorted[pos - 1], sorted[pos]);
        if lo >= hi {
            return None;
        }
        rng.gen_range(lo..hi)
    };
    if !in_range(reference) || sorted.iter().filter(|&&v| v <= reference).count() != pos {
        return None;
    }
    let mut meta = list_meta(&d, radix);
    meta.position = Some(pos);
    let question = prompts::interval_question(reference, &sorted);
    let mut operands = vec![reference];
    operands.extend_from_slice(&sorted);
    let answer = interval_letter(pos).to_string();
    Some(finish(Task::Interval, operands, question, answer, None, meta, radix))
}

fn gen_statistic<R: Rng + ?Sized>(rng: &mut R, cfg: &SamplerConfig, task: Task) -> Option<Problem> {
    let radix = cfg.precision_base;
    let d = draw_list(rng, task, radix)?;
    let value = if task == Task::Mean {
        let exact = oracle::mean(&d.values);
        oracle::accept(
            Some(crate::numeric::hiprec::HiValue::Exact(exact)),
            oracle::mean_f64(&d.values),
        )?
    } else {
        oracle::accept(oracle::std(&d.values), oracle::std_f64(&d.values))?
    };
    let meta = list_meta(&d, radix);
    let question = prompts::statistic_question(task.name(), &d.values);
    Some(finish(task, d.values, question, format_decimal(value), Some(value), meta, radix))
}

fn attempt<R: Rng + ?Sized>(task: Task, rng: &mut R, cfg: &SamplerConfig) -> Option<Problem> {
    match task {
        Task::Add => gen_add(rng, cfg),
        Task::Mult => gen_mult(rng, cfg),
        Task::Div => gen_div(rng, cfg),
        Task::Exp => gen_exp(rng, cfg),
        Task::MinMax => gen_minmax(rng, cfg),
        Task::Interval => gen_interval(rng, cfg),
        Task::Sorting => gen_sorting(rng, cfg),
        Task::Mean | Task::Std => gen_statistic(rng, cfg, task),
    }
}

/// One problem, redrawing rejected samples up to [`MAX_ATTEMPTS`] times.
pub fn gen_problem<R: Rng + ?Sized>(task: Task, rng: &mut R, cfg: &SamplerConfig) -> Result<Problem> {
    for _ in 0..MAX_ATTEMPTS {
        if let Some(p) = attempt(task, rng, cfg) {
            return Ok(p);
        }
    }
    Err(Error::RejectionExhausted(MAX_ATTEMPTS))
}

/// Problem `index` of the dataset described by `cfg`.
pub fn problem_at(cfg: &SamplerConfig, index: u64) -> Result<Problem> {
    for reseed in 0..=u8::MAX {
        let mut rng = substream(cfg.seed, cfg.task, reseed, index);
        match gen_problem(cfg.task, &mut rng, cfg) {
            Err(Error::RejectionExhausted(_)) => continue,
            other => return other,
        }
    }
    Err(Error::RejectionExhausted(MAX_ATTEMPTS * 256))
}

/// Generate `cfg.count` problems on `shards` threads. The output does not
/// depend on the shard count.
pub fn generate(cfg: &SamplerConfig, shards: usize) -> Result<Vec<Problem>> {
    cfg.validate()?;
    let shards = shards.clamp(1, cfg.count.max(1));
    let chunk = cfg.count.div_ceil(shards);
    let parts: Vec<Result<Vec<Problem>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..shards)
            .map(|k| {
                let start = k * chunk;
                let end = ((k + 1) * chunk).min(cfg.count);
                s.spawn(move || (start..end).map(|i| problem_at(cfg, i as u64)).collect())
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("generator thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(cfg.count);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// First line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub seed: u64,
    pub rng: String,
    pub precision_base: u32,
    pub generator: String,
    pub dataset_task: Task,
    pub count: usize,
    pub sign_schema: [u32; 3],
}

impl DatasetHeader {
    pub fn for_config(cfg: &SamplerConfig) -> Self {
        Self {
            seed: cfg.seed,
            rng: RNG_ID.to_owned(),
            precision_base: cfg.precision_base.base(),
            generator: GENERATOR.to_owned(),
            dataset_task: cfg.task,
            count: cfg.count,
            sign_schema: cfg.sign_schema,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    task: String,
    meta: DatasetHeader,
}

/// Serialize a dataset as JSONL: header line, then one problem per line.
pub fn dataset_to_jsonl(header: &DatasetHeader, problems: &[Problem]) -> Vec<u8> {
    let mut out = Vec::new();
    write_dataset_to(&mut out, header, problems).expect("writing to memory");
    out
}

fn write_dataset_to<W: Write>(w: &mut W, header: &DatasetHeader, problems: &[Problem]) -> std::io::Result<()> {
    let line = HeaderLine {
        task: "meta".into(),
        meta: header.clone(),
    };
    serde_json::to_writer(&mut *w, &line)?;
    w.write_all(b"\n")?;
    for p in problems {
        serde_json::to_writer(&mut *w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_dataset(path: &Path, header: &DatasetHeader, problems: &[Problem]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_dataset_to(&mut w, header, problems)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parse dataset JSONL. The header line is optional.
pub fn parse_dataset<R: BufRead>(reader: R, context: &str) -> Result<(Option<DatasetHeader>, Vec<Problem>)> {
    let mut header = None;
    let mut problems = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(context, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{context} line {}", i + 1), e))?;
        if value.get("task").and_then(|t| t.as_str()) == Some("meta") {
            if i != 0 {
                return Err(Error::Schema(format!("{context} line {}: header must be the first line", i + 1)));
            }
            let h: HeaderLine = serde_json::from_value(value)
                .map_err(|e| Error::json(format!("{context} header"), e))?;
            header = Some(h.meta);
        } else {
            let p: Problem = serde_json::from_value(value)
                .map_err(|e| Error::json(format!("{context} line {}", i + 1), e))?;
            problems.push(p);
        }
    }
    Ok((header, problems))
}

pub fn read_dataset(path: &Path) -> Result<(Option<DatasetHeader>, Vec<Problem>)> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(std::io::BufReader::new(f), &path.display().to_string())
}
