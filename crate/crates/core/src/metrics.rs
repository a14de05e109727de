//! Scoring primitives and per-task aggregation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::numeric::{format_canonical, format_decimal, parse_number, ANSWER_DIGITS};
use crate::taskgen::{Problem, Task};
use crate::{Error, Result};

/// Stabilizer in the sMAPE denominator.
pub const SMAPE_EPS: f64 = 1e-100;
/// Offset applied to every performance before the generalized mean.
pub const GMEAN_EPS: f64 = 1e-8;
/// Exponent of the harmonic mean used for multi-task aggregation.
pub const GMEAN_LAMBDA: f64 = -1.0;

/// `|ŷ - y| / (|y| + |ŷ| + ε)`; a non-finite side scores 1.
pub fn smape(pred: f64, target: f64) -> f64 {
    if !pred.is_finite() || !target.is_finite() {
        return 1.0;
    }
    (pred - target).abs() / (target.abs() + pred.abs() + SMAPE_EPS)
}

/// Fraction of `m` significant digits that are correct, in `[0, 1]`.
pub fn log_smape_with(pred: f64, target: f64, m: u32) -> f64 {
    (-(smape(pred, target) + SMAPE_EPS).log10() / m as f64).clamp(0.0, 1.0)
}

pub fn log_smape(pred: f64, target: f64) -> f64 {
    log_smape_with(pred, target, ANSWER_DIGITS)
}

/// Agreement on the first 15 significant digits.
pub fn exact_match(pred: &str, target: f64) -> bool {
    match parse_number(pred) {
        Some(v) if v.is_finite() && target.is_finite() => {
            format_canonical(v) == format_canonical(target)
        }
        _ => false,
    }
}

/// `((1/n) Σ (p + ε)^λ)^(1/λ)`.
pub fn generalized_mean(perfs: &[f64], lambda: f64, eps: f64) -> Result<f64> {
    if perfs.is_empty() {
        return Err(Error::invalid("generalized mean of an empty list"));
    }
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::invalid("generalized mean exponent must be finite and non-zero"));
    }
    let n = perfs.len() as f64;
    let s: f64 = perfs.iter().map(|p| (p + eps).powf(lambda)).sum();
    Ok((s / n).powf(1.0 / lambda))
}

/// Text of an `"answer"` field, whatever JSON type the model used.
pub fn answer_text(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Array(items) => {
            let parts: Option<Vec<String>> = items.iter().map(answer_text).collect();
            Some(format!("[{}]", parts?.join(", ")))
        }
        _ => None,
    }
}

fn canonical_list(s: &str) -> Option<String> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let items: Option<Vec<String>> = inner
        .split(',')
        .map(|t| parse_number(t).filter(|v| v.is_finite()).map(format_decimal))
        .collect();
    Some(format!("[{}]", items?.join(", ")))
}

fn canonical_number(s: &str) -> Option<String> {
    parse_number(s).filter(|v| v.is_finite()).map(format_decimal)
}

/// Whether `pred` has the shape of an answer to `task`.
fn parses(task: Task, pred: &str) -> bool {
    match task {
        Task::Interval => {
            let t = pred.trim().trim_matches('"').trim();
            t.len() == 1 && t.as_bytes()[0].is_ascii_uppercase()
        }
        Task::Sorting => canonical_list(pred).is_some(),
        _ => parse_number(pred).is_some(),
    }
}

/// Per-item score: `(exact, log_smape)`. List tasks use exact string match of
/// the canonicalized answer and report that indicator as their log-sMAPE.
pub fn score_answer(problem: &Problem, pred: Option<&str>) -> (bool, f64) {
    let Some(pred) = pred else {
        return (false, 0.0);
    };
    match problem.task {
        Task::Interval => {
            let t = pred.trim().trim_matches('"').trim();
            let ok = t == problem.answer;
            (ok, ok as u8 as f64)
        }
        Task::MinMax => {
            let ok = canonical_number(pred).is_some_and(|c| c == problem.answer);
            (ok, ok as u8 as f64)
        }
        Task::Sorting => {
            let ok = canonical_list(pred).is_some_and(|c| c == problem.answer);
            (ok, ok as u8 as f64)
        }
        _ => {
            let target = problem
                .answer_value
                .or_else(|| parse_number(&problem.answer))
                .unwrap_or(f64::NAN);
            let value = parse_number(pred).unwrap_or(f64::NAN);
            (exact_match(pred, target), log_smape(value, target))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub count: usize,
    pub exact_match_rate: f64,
    pub mean_log_smape: f64,
    pub unparseable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub lambda: f64,
    pub epsilon: f64,
    pub exact_match_rate: f64,
    pub log_smape: f64,
}

/// Per-task scores keyed by task name plus the generalized-mean aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub tasks: BTreeMap<String, TaskScore>,
    pub aggregate: Aggregate,
}

impl ScoreReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Score predictions aligned line-by-line with reference problems.
pub fn score(problems: &[Problem], predictions: &[Option<String>]) -> Result<ScoreReport> {
    if problems.len() != predictions.len() {
        return Err(Error::Schema(format!(
            "{} predictions for {} reference problems",
            predictions.len(),
            problems.len()
        )));
    }
    if problems.is_empty() {
        return Err(Error::invalid("nothing to score"));
    }
    let mut acc: BTreeMap<Task, (usize, usize, f64, usize)> = BTreeMap::new();
    for (p, pred) in problems.iter().zip(predictions) {
        let (ok, ls) = score_answer(p, pred.as_deref());
        let e = acc.entry(p.task).or_default();
        e.0 += 1;
        e.1 += ok as usize;
        e.2 += ls;
        if !pred.as_deref().is_some_and(|s| parses(p.task, s)) {
            e.3 += 1;
        }
    }
    let tasks: BTreeMap<String, TaskScore> = acc
        .iter()
        .map(|(t, &(n, ok, ls, bad))| {
            (
                t.name().to_owned(),
                TaskScore {
                    count: n,
                    exact_match_rate: ok as f64 / n as f64,
                    mean_log_smape: ls / n as f64,
                    unparseable: bad,
                },
            )
        })
        .collect();
    let em: Vec<f64> = tasks.values().map(|s| s.exact_match_rate).collect();
    let ls: Vec<f64> = tasks.values().map(|s| s.mean_log_smape).collect();
    Ok(ScoreReport {
        aggregate: Aggregate {
            lambda: GMEAN_LAMBDA,
            epsilon: GMEAN_EPS,
            exact_match_rate: generalized_mean(&em, GMEAN_LAMBDA, GMEAN_EPS)?,
            log_smape: generalized_mean(&ls, GMEAN_LAMBDA, GMEAN_EPS)?,
        },
        tasks,
    })
}

/// Predictions JSONL: one `{"answer": …}` object per line. Lines without a
/// usable answer become `None`.
pub fn read_predictions(path: &Path) -> Result<Vec<Option<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::json(format!("{} line {}", path.display(), i + 1), e))?;
        let obj = v.as_object().ok_or_else(|| {
            Error::Schema(format!("{} line {}: expected a JSON object", path.display(), i + 1))
        })?;
        out.push(obj.get("answer").and_then(answer_text));
    }
    Ok(out)
}

/// Score a predictions file against a reference dataset file.
pub fn score_file(pred: &Path, reference: &Path) -> Result<ScoreReport> {
    let (_, problems) = crate::taskgen::read_dataset(reference)?;
    let predictions = read_predictions(pred)?;
    score(&problems, &predictions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smape_examples() {
        assert_eq!(smape(1.0, 1.0), 0.0);
        assert!((smape(2.0, 1.0) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(smape(0.0, 0.0), 0.0);
        assert_eq!(smape(f64::NAN, 1.0), 1.0);
        assert_eq!(smape(f64::INFINITY, 1.0), 1.0);
    }

    #[test]
    fn log_smape_examples() {
        assert_eq!(log_smape(3.0, 3.0), 1.0);
        let v = log_smape(1.001, 1.0);
        let want = -(0.001f64 / 2.001).log10() / 15.0;
        assert!((v - want).abs() < 1e-12 && (v - 0.2201).abs() < 1e-4);
        assert!(log_smape(f64::NAN, 1.0) < 1e-15);
    }

    #[test]
    fn exact_match_examples() {
        assert!(exact_match("0.50", 0.5));
        assert!(exact_match("1.23456789012346", 1.234567890123456));
        assert!(exact_match("1.23456789012345", 1.234567890123454));
        assert!(!exact_match("1.23456789012345", 1.234567890123456));
        assert!(!exact_match("abc", 1.0));
        assert!(exact_match("\"1e3\"", 1000.0));
    }

    #[test]
    fn generalized_mean_examples() {
        let g = generalized_mean(&[0.5, 0.5], 3.0, 1e-8).unwrap();
        assert!((g - 0.5).abs() < 1e-7);
        assert!((generalized_mean(&[1.0, 1.0], -1.0, 1e-8).unwrap() - 1.0).abs() < 1e-7);
        let g = generalized_mean(&[0.2, 0.8], -1.0, 1e-8).unwrap();
        assert!((g - 0.32).abs() < 1e-7);
        assert!(generalized_mean(&[0.2], 0.0, 1e-8).is_err());
        assert!(generalized_mean(&[], -1.0, 1e-8).is_err());
    }

    #[test]
    fn answer_text_variants() {
        let v: serde_json::Value = serde_json::from_str(r#"{"a": 5, "b": "x", "c": [1, 2.5], "d": null}"#).unwrap();
        assert_eq!(answer_text(&v["a"]).unwrap(), "5");
        assert_eq!(answer_text(&v["b"]).unwrap(), "x");
        assert_eq!(answer_text(&v["c"]).unwrap(), "[1, 2.5]");
        assert_eq!(answer_text(&v["d"]), None);
        assert_eq!(canonical_list("[1.0, -2.50]").unwrap(), "[1, -2.5]");
    }

    proptest! {
        #[test]
        fn smape_symmetric_bounded(a in -1e12f64..1e12, b in -1e12f64..1e12) {
            let s = smape(a, b);
            prop_assert_eq!(s, smape(b, a));
            prop_assert!((0.0..=1.0).contains(&s));
            if a != 0.0 && (a > 0.0) == (b > 0.0) {
                prop_assert!(s < 1.0);
            }
        }

        #[test]
        fn log_smape_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f = |s: f64| (-(s + SMAPE_EPS).log10() / 15.0).clamp(0.0, 1.0);
            prop_assert!(f(lo) >= f(hi));
            prop_assert!((0.0..=1.0).contains(&f(lo)));
        }

        #[test]
        fn harmonic_below_arithmetic(v in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
            let h = generalized_mean(&v, -1.0, 1e-8).unwrap();
            let a = generalized_mean(&v, 1.0, 1e-8).unwrap();
            prop_assert!(h <= a + 1e-12);
        }
    }
}
