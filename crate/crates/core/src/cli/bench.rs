//! Benchmark runner against an OpenAI-compatible chat-completions endpoint.

use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};

use crate::metrics::answer_text;
use crate::taskgen::Problem;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub concurrency: usize,
    pub retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
    pub out: PathBuf,
    pub raw_log: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub total_tokens: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub answer: Option<String>,
    pub usage: Option<Usage>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct RawRecord {
    index: usize,
    attempts: u32,
    status: Option<u16>,
    body: Option<String>,
    error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSummary {
    pub total: usize,
    pub answered: usize,
    pub failed: usize,
}

/// Pull the `answer` field out of a model reply. Accepts a bare JSON
/// object, one wrapped in a code fence, or one embedded in prose.
pub fn extract_answer(content: &str) -> Option<String> {
    let from = |v: Value| v.as_object().and_then(|o| o.get("answer")).and_then(answer_text);
    let trimmed = strip_fence(content.trim());
    if let Ok(v) = serde_json::from_str::<Value>(trimmed) {
        if let Some(a) = from(v) {
            return Some(a);
        }
    }
    for (i, _) in content.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&content[i..]).into_iter::<Value>();
        if let Some(Ok(v)) = stream.next() {
            if let Some(a) = from(v) {
                return Some(a);
            }
        }
    }
    None
}

fn strip_fence(s: &str) -> &str {
    let Some(rest) = s.strip_prefix("```") else {
        return s;
    };
    let body = rest.split_once('\n').map_or("", |(_, b)| b);
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

fn usage_of(v: &Value) -> Option<Usage> {
    let u = v.get("usage")?;
    Some(Usage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64),
        total_tokens: u.get("total_tokens").and_then(Value::as_u64),
    })
}

struct Outcome {
    prediction: Prediction,
    raw: RawRecord,
}

fn ask(client: &reqwest::blocking::Client, cfg: &BenchConfig, key: Option<&str>, index: usize, p: &Problem) -> Outcome {
    let (system, user) = p.render_prompt();
    let body = json!({
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
    });
    let mut last_err = String::new();
    let mut last_status = None;
    let mut last_body = None;
    for attempt in 0..=cfg.retries {
        if attempt > 0 {
            std::thread::sleep(cfg.backoff * 2u32.saturating_pow(attempt - 1));
        }
        let mut req = client.post(&cfg.endpoint).json(&body);
        if let Some(k) = key {
            req = req.bearer_auth(k);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => {
                last_err = e.to_string();
                continue;
            }
        };
        let status = resp.status();
        last_status = Some(status.as_u16());
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => {
                last_err = e.to_string();
                continue;
            }
        };
        last_body = Some(text.clone());
        if !status.is_success() {
            last_err = format!("HTTP {status}");
            continue;
        }
        let parsed: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => {
                last_err = format!("response is not JSON: {e}");
                continue;
            }
        };
        let content = parsed
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .unwrap_or_default();
        let answer = extract_answer(content);
        return Outcome {
            prediction: Prediction {
                error: answer.is_none().then(|| "no answer field in reply".to_owned()),
                answer,
                usage: usage_of(&parsed),
            },
            raw: RawRecord {
                index,
                attempts: attempt + 1,
                status: last_status,
                body: last_body,
                error: None,
            },
        };
    }
    Outcome {
        prediction: Prediction {
            answer: None,
            usage: None,
            error: Some(last_err.clone()),
        },
        raw: RawRecord {
            index,
            attempts: cfg.retries + 1,
            status: last_status,
            body: last_body,
            error: Some(last_err),
        },
    }
}

/// Query every problem with bounded concurrency and write predictions and
/// raw responses in dataset order. Per-item failures are recorded, not fatal.
pub fn bench_run(problems: &[Problem], cfg: &BenchConfig) -> Result<BenchSummary> {
    if cfg.concurrency == 0 {
        return Err(Error::invalid("--concurrency must be at least 1"));
    }
    let key = std::env::var(&cfg.api_key_env).ok();
    if key.is_none() {
        eprintln!("warning: ${} is not set; sending requests without credentials", cfg.api_key_env);
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(cfg.timeout)
        .build()
        .map_err(|e| Error::invalid(format!("HTTP client: {e}")))?;
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Outcome>>> = problems.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..cfg.concurrency.min(problems.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= problems.len() {
                    break;
                }
                let o = ask(&client, cfg, key.as_deref(), i, &problems[i]);
                *slots[i].lock().expect("slot lock") = Some(o);
            });
        }
    });
    let mut preds = Vec::new();
    let mut raws = Vec::new();
    let mut summary = BenchSummary {
        total: problems.len(),
        answered: 0,
        failed: 0,
    };
    for slot in slots {
        let o = slot.into_inner().expect("slot lock").expect("every item processed");
        if o.prediction.answer.is_some() {
            summary.answered += 1;
        } else {
            summary.failed += 1;
        }
        serde_json::to_writer(&mut preds, &o.prediction).map_err(|e| Error::json("prediction", e))?;
        preds.push(b'\n');
        serde_json::to_writer(&mut raws, &o.raw).map_err(|e| Error::json("raw log", e))?;
        raws.push(b'\n');
    }
    write_all(&cfg.out, &preds)?;
    write_all(&cfg.raw_log, &raws)?;
    Ok(summary)
}

fn write_all(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}
