//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! and then asserts, so a failing criterion is both visible and red.
//!
//! Oracles live here, not in the library: answers are recomputed with
//! `astro-float` from the literals in the prompt, number spans with
//! `fancy-regex`, uniformity with `statrs`, and gradients by central
//! differences written below.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use astro_float::{BigFloat, Consts, Radix as AfRadix, RoundingMode};
use ndarray::Array2;
use numtok::curriculum::{preview_ratios, run_simulation, update_ratios, SimConfig, SimLogLine, SimTask};
use numtok::encoders::{bce_with_logits, bittoken_decode, bittoken_encode, homomorphism_residual, BitTokenConfig, FoneConfig};
use numtok::metrics::{log_smape, smape};
use numtok::numeric::{from_bits, to_bits, Radix};
use numtok::probe::{operator_learn_demo, random_finite, train_identity_head, IdentityConfig, Loss, Network, Operation, OperatorConfig};
use numtok::taskgen::{generate, sample_operand, Problem, SamplerConfig, Task, DECADES};
use numtok::textparse::{detokenize, find_numbers, tokenize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Written straight to the process stdout so the line survives test capture.
fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{verdict} criterion {criterion}: {detail}");
    let _ = out.flush();
}

fn verdict(criterion: u32, failures: &[String], summary: String) {
    let detail = match failures.first() {
        None => summary,
        Some(first) => format!("{summary}; {} failure(s), first: {first}", failures.len()),
    };
    report(criterion, failures.is_empty(), &detail);
    assert!(failures.is_empty(), "criterion {criterion}: {detail}");
}

// ---------------------------------------------------------------------------
// 1. Bit-level and BitToken round trips
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_roundtrip() {
    let start = Instant::now();
    let cfg = BitTokenConfig::with_d_model(128);
    let specials: Vec<u64> = [
        0u64,
        1,
        0x000F_FFFF_FFFF_FFFF,
        0x0010_0000_0000_0000,
        0x7FEF_FFFF_FFFF_FFFF,
        0x7FF0_0000_0000_0000,
        0x7FF8_0000_0000_0000,
        0x7FF0_0000_0000_0001,
        0x7FFF_FFFF_FFFF_FFFF,
        1.0f64.to_bits(),
    ]
    .iter()
    .flat_map(|&r| [r, r | 1 << 63])
    .collect();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let random = (0..1_000_000).map(|_| rng.gen::<u64>());
    let mut failures = Vec::new();
    let mut count = 0usize;
    for raw in specials.iter().copied().chain(random) {
        count += 1;
        let v = f64::from_bits(raw);
        let fb = to_bits(v);
        if fb.raw() != raw || from_bits(fb).to_bits() != raw {
            failures.push(format!("bits {raw:#018x}"));
            continue;
        }
        let enc = match bittoken_encode(v, &cfg) {
            Ok(e) => e.values,
            Err(e) => {
                failures.push(format!("encode {raw:#018x}: {e}"));
                continue;
            }
        };
        let recip = (1.0 / v).to_bits();
        let layout_ok = (0..64).all(|i| enc[i] == if raw >> (63 - i) & 1 == 1 { 1.0 } else { -1.0 })
            && (0..64).all(|i| enc[64 + i] == if recip >> (63 - i) & 1 == 1 { 1.0 } else { -1.0 });
        let probs: Vec<f64> = enc.iter().map(|x| (x + 1.0) / 2.0).collect();
        let back = bittoken_decode(&probs, &cfg).map(f64::to_bits);
        let same = match back {
            Ok(b) => b == raw || (v.is_nan() && f64::from_bits(b).is_nan()),
            Err(_) => false,
        };
        if !layout_ok || !same {
            failures.push(format!("bittoken {raw:#018x}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        failures.push(format!("took {secs:.1} s"));
    }
    verdict(1, &failures, format!("{count} patterns round-trip in {secs:.2} s"));
}

// ---------------------------------------------------------------------------
// 2. Decoding survives any perturbation that stays on the right side of 0.5
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_threshold_robustness() {
    let cfg = BitTokenConfig::with_d_model(128);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut worst_margin = 0.5f64;
    for _ in 0..10_000 {
        let v = random_finite(&mut rng);
        let raw = v.to_bits();
        let probs: Vec<f64> = (0..128)
            .map(|i| {
                let bit = if i < 64 { raw >> (63 - i) & 1 == 1 } else { (1.0 / v).to_bits() >> (127 - i) & 1 == 1 };
                // distance from the ideal 0/1 target, strictly below 0.5
                let d = rng.gen_range(0.0..0.5);
                worst_margin = worst_margin.min(0.5 - d);
                if bit {
                    1.0 - d
                } else {
                    d
                }
            })
            .collect();
        match bittoken_decode(&probs, &cfg) {
            Ok(b) if b.to_bits() == raw => {}
            _ => failures.push(format!("{v:e}")),
        }
    }
    verdict(
        2,
        &failures,
        format!("10000 perturbed values decode exactly (closest approach to threshold {worst_margin:.2e})"),
    );
}

// ---------------------------------------------------------------------------
// 3. FoNE is additive on its exact-phase domain
// ---------------------------------------------------------------------------

fn exact_phase_value<R: Rng>(rng: &mut R) -> f64 {
    // at most 16 significant digits, |v| < 5e15 and no digits past 1e-16
    let mantissa: u64 = rng.gen_range(0..10u64.pow(16));
    let scale: i32 = rng.gen_range(1..=32);
    let mut v: f64 = format!("{mantissa}e-{scale}").parse().unwrap();
    if rng.gen_bool(0.5) {
        v = -v;
    }
    v
}

#[test]
fn criterion_03_homomorphism() {
    let cfg = FoneConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for _ in 0..10_000 {
        let (x, y) = (exact_phase_value(&mut rng), exact_phase_value(&mut rng));
        match homomorphism_residual(x, y, &cfg) {
            Ok(r) => worst = worst.max(r),
            Err(e) => failures.push(format!("({x:e}, {y:e}): {e}")),
        }
    }
    if !(worst < 1e-9) {
        failures.push(format!("max residual {worst:e}"));
    }
    verdict(3, &failures, format!("max residual {worst:.3e} over 10000 pairs"));
}

// ---------------------------------------------------------------------------
// 4. log-sMAPE anchor
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_metric_anchor() {
    let (pred, target) = (1001.0, 999.0);
    let s = smape(pred, target);
    let l = log_smape(pred, target);
    let exact = log_smape(123.456, 123.456);
    let mut failures = Vec::new();
    if s != 1e-3 {
        failures.push(format!("sMAPE {s:e} is not 1e-3"));
    }
    if (l - 0.2).abs() > 1e-12 {
        failures.push(format!("log-sMAPE {l}"));
    }
    if exact != 1.0 {
        failures.push(format!("exact match scores {exact}"));
    }
    verdict(4, &failures, format!("sMAPE 1e-3 -> log-sMAPE {l}, exact match -> {exact}"));
}

// ---------------------------------------------------------------------------
// 5. Generated answers against an independent high-precision oracle
// ---------------------------------------------------------------------------

const BITS: usize = 512;
const RM: RoundingMode = RoundingMode::ToEven;

/// Sign, significant digits and the decimal exponent of the first digit.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Digits {
    negative: bool,
    digits: Vec<u8>,
    exp: i32,
}

impl Digits {
    fn parse(s: &str) -> Digits {
        let s = s.trim();
        let (negative, s) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (mant, e) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().unwrap()),
            None => (s, 0),
        };
        let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
        let all: Vec<u8> = int.bytes().chain(frac.bytes()).map(|b| b - b'0').collect();
        let lead = all.iter().take_while(|&&d| d == 0).count();
        if lead == all.len() {
            return Digits { negative: false, digits: vec![], exp: 0 };
        }
        let mut digits = all[lead..].to_vec();
        while digits.last() == Some(&0) {
            digits.pop();
        }
        Digits {
            negative,
            digits,
            exp: int.len() as i32 - 1 - lead as i32 + e,
        }
    }

    /// Round to `p` digits. With a non-zero `tie_window`, a 5 followed by
    /// that many zeros counts as a tie and rounds to even; otherwise ties
    /// round up.
    fn round(&self, p: usize, tie_window: usize) -> Digits {
        if self.digits.len() <= p {
            return self.clone();
        }
        let rest = &self.digits[p..];
        let window: Vec<u8> = (0..tie_window.max(1)).map(|i| rest.get(i).copied().unwrap_or(0)).collect();
        let tie = tie_window > 0 && window[0] == 5 && window[1..].iter().all(|&d| d == 0);
        let mut head = self.digits[..p].to_vec();
        let up = if tie { head[p - 1] % 2 == 1 } else { window[0] >= 5 };
        let mut exp = self.exp;
        if up {
            let mut i = p;
            loop {
                if i == 0 {
                    head.insert(0, 1);
                    head.pop();
                    exp += 1;
                    break;
                }
                i -= 1;
                if head[i] == 9 {
                    head[i] = 0;
                } else {
                    head[i] += 1;
                    break;
                }
            }
        }
        Digits::parse(&format!(
            "{}0.{}e{}",
            if self.negative { "-" } else { "" },
            head.iter().map(|d| char::from(b'0' + d)).collect::<String>(),
            exp + 1
        ))
    }
}

struct Oracle {
    cc: Consts,
}

impl Oracle {
    fn new() -> Self {
        Oracle { cc: Consts::new().unwrap() }
    }

    fn num(&mut self, s: &str) -> BigFloat {
        BigFloat::parse(s, AfRadix::Dec, BITS, RM, &mut self.cc)
    }

    fn int(&mut self, n: usize) -> BigFloat {
        BigFloat::from_u64(n as u64, BITS)
    }

    fn pow(&mut self, base: &BigFloat, exp_literal: &str) -> BigFloat {
        let e = self.num(exp_literal);
        if base.is_negative() {
            let odd = exp_literal.parse::<f64>().unwrap() % 2.0 != 0.0;
            let mag = base.abs().pow(&e, BITS, RM, &mut self.cc);
            if odd {
                mag.neg()
            } else {
                mag
            }
        } else {
            base.pow(&e, BITS, RM, &mut self.cc)
        }
    }

    /// Exact answer rounded to 15 significant digits, half to even. The
    /// binary result is first cut to 60 digits, where exact decimal answers
    /// are still exact and ties show up as a 5 followed by zeros.
    fn rounded(&mut self, v: &BigFloat) -> Digits {
        let s = v.format(AfRadix::Dec, RoundingMode::None, &mut self.cc).unwrap();
        Digits::parse(&s).round(60, 0).round(15, 45)
    }

    fn answer(&mut self, p: &Problem) -> Result<Digits, String> {
        let q = p.question.trim_start_matches("What is ").trim_end_matches('?');
        let value = match p.task {
            Task::Mean | Task::Std => {
                let inner = q.split_once('[').and_then(|(_, r)| r.split_once(']')).ok_or("no list")?.0;
                let xs: Vec<BigFloat> = inner.split(", ").map(|s| self.num(s)).collect();
                let n = self.int(xs.len());
                let sum = xs.iter().fold(BigFloat::from_u8(0, BITS), |acc, x| acc.add(x, BITS, RM));
                let mean = sum.div(&n, BITS, RM);
                if p.task == Task::Mean {
                    mean
                } else {
                    let ss = xs.iter().fold(BigFloat::from_u8(0, BITS), |acc, x| {
                        let d = x.sub(&mean, BITS, RM);
                        acc.add(&d.mul(&d, BITS, RM), BITS, RM)
                    });
                    ss.div(&n, BITS, RM).sqrt(BITS, RM)
                }
            }
            _ => {
                let (op, (a, b)) = [" + ", " - ", " * ", " / ", " ^ "]
                    .iter()
                    .find_map(|op| q.split_once(op).map(|parts| (op.trim(), parts)))
                    .ok_or_else(|| format!("no operator in {q:?}"))?;
                let x = self.num(a);
                let y = self.num(b);
                match op {
                    "+" => x.add(&y, BITS, RM),
                    "-" => x.sub(&y, BITS, RM),
                    "*" => x.mul(&y, BITS, RM),
                    "/" => x.div(&y, BITS, RM),
                    _ => self.pow(&x, b),
                }
            }
        };
        if value.is_nan() || value.is_inf() {
            return Err(format!("oracle produced {value:?}"));
        }
        Ok(self.rounded(&value))
    }
}

fn literals_match_operands(p: &Problem) -> bool {
    p.operands.iter().all(|v| p.question.contains(&format!("{v}")))
}

#[test]
fn criterion_05_generator_oracle() {
    let mut oracle = Oracle::new();
    let mut failures = Vec::new();
    let mut checked = 0usize;
    let tasks = [Task::Add, Task::Mult, Task::Div, Task::Exp, Task::Mean, Task::Std];
    let mut add_problems = Vec::new();
    for (k, task) in tasks.into_iter().enumerate() {
        let cfg = SamplerConfig::new(500 + k as u64, task, 10_000);
        let problems = generate(&cfg, 8).expect("generation");
        for p in &problems {
            checked += 1;
            if !literals_match_operands(p) {
                failures.push(format!("{task}: prompt literals differ from operands in {:?}", p.question));
                continue;
            }
            match oracle.answer(p) {
                Ok(want) if want == Digits::parse(&p.answer) => {}
                Ok(want) => failures.push(format!("{task}: {:?} stored {} oracle {want:?}", p.question, p.answer)),
                Err(e) => failures.push(format!("{task}: {e}")),
            }
        }
        if task == Task::Add {
            add_problems = problems;
        }
    }

    // decade of each sampled operand, read from the shortest round-trip form
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let bins = DECADES.len();
    let mut hist = vec![0u64; bins];
    for _ in 0..100_000 {
        let v = sample_operand(&mut rng, Radix::Decimal);
        let e: i32 = format!("{:e}", v.abs()).split_once('e').unwrap().1.parse().unwrap();
        match usize::try_from(e - DECADES.start).ok().filter(|&i| i < bins) {
            Some(i) => hist[i] += 1,
            None => failures.push(format!("operand {v:e} outside the decade range")),
        }
    }
    let expected = 100_000.0 / bins as f64;
    let chi2: f64 = hist.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p_value = ChiSquared::new((bins - 1) as f64).unwrap().sf(chi2);
    if !(p_value > 0.001) {
        failures.push(format!("exponent histogram chi2 {chi2:.1}, p = {p_value:e}"));
    }

    let mut classes = [0usize; 3];
    for p in &add_problems {
        let negatives = p.operands.iter().filter(|v| v.is_sign_negative()).count();
        classes[negatives] += 1;
    }
    let shares: Vec<f64> = classes.iter().map(|&c| 100.0 * c as f64 / add_problems.len() as f64).collect();
    for (share, target) in shares.iter().zip([40.0, 40.0, 20.0]) {
        if (share - target).abs() > 2.0 {
            failures.push(format!("sign schema {shares:.2?} vs 40/40/20"));
            break;
        }
    }
    verdict(
        5,
        &failures,
        format!(
            "{checked} answers match the oracle; exponent chi2 p = {p_value:.3}; add signs {:.1}/{:.1}/{:.1}",
            shares[0], shares[1], shares[2]
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Curriculum equations
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_curriculum() {
    let mut failures = Vec::new();
    let r = update_ratios(&[0.5, 1.0], &[0.5, 0.5], 0.5, -1.0).unwrap();
    if (r[0] - 0.75).abs() > 1e-12 || (r[1] - 0.25).abs() > 1e-12 {
        failures.push(format!("ratio update gave {r:?}"));
    }

    let preview = preview_ratios(3, 5);
    let norm = 0.8 + 0.8 * 0.8;
    let closed: BTreeMap<u32, f64> = [(4, 0.2 * 0.8 / norm), (5, 0.2 * 0.64 / norm)].into_iter().collect();
    let total: f64 = preview.values().sum();
    if preview.keys().ne(closed.keys()) || preview.iter().any(|(d, v)| (v - closed[d]).abs() > 1e-12) {
        failures.push(format!("preview ratios {preview:?}"));
    }
    if (total - 0.2).abs() > 1e-12 {
        failures.push(format!("preview total {total}"));
    }

    let cfg = SimConfig {
        tasks: vec![
            SimTask { task: Task::Mult, max_difficulty: 12, lag: 100.0 },
            SimTask { task: Task::Mean, max_difficulty: 30, lag: 60.0 },
            SimTask { task: Task::Exp, max_difficulty: 20, lag: 400.0 },
        ],
        steps: 10_000,
        batch_tokens: 4096,
        seed: 6,
        lr_max: 1e-3,
        rate: 0.02,
        log_every: 1,
    };
    let mut log = Vec::new();
    let state = run_simulation(&cfg, &mut log).unwrap();
    let mut last: BTreeMap<Task, u32> = BTreeMap::new();
    let mut lines = 0;
    for line in String::from_utf8(log).unwrap().lines() {
        let l: SimLogLine = serde_json::from_str(line).unwrap();
        lines += 1;
        for (task, f) in &l.frontiers {
            if let Some(prev) = last.insert(*task, *f) {
                if *f < prev {
                    failures.push(format!("{task} frontier fell from {prev} to {f} at step {}", l.step));
                }
            }
        }
        let sum: f64 = l.ratios.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            failures.push(format!("ratios sum to {sum} at step {}", l.step));
        }
    }
    if lines != 10_000 {
        failures.push(format!("{lines} log lines"));
    }
    let finals: Vec<String> = state.tasks.iter().map(|t| format!("{}={}/{}", t.task, t.frontier, t.max_difficulty)).collect();
    verdict(
        6,
        &failures,
        format!("r_new = ({}, {}); preview sum {total}; frontiers monotone over 10^4 steps ({})", r[0], r[1], finals.join(" ")),
    );
}

// ---------------------------------------------------------------------------
// 7. Analytic gradients against central differences
// ---------------------------------------------------------------------------

const H: f64 = 1e-5;

fn rel(a: &[f64], n: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() + n.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Largest per-tensor relative error between `loss_and_grad` and central
/// differences of `loss`.
fn network_error(net: &Network, x: &Array2<f64>, t: &Array2<f64>, loss: Loss) -> f64 {
    let (_, grads) = net.loss_and_grad(x, t, loss, 1.0).unwrap();
    let f = |n: &Network| n.loss(x, t, loss, 1.0).unwrap();
    let mut worst = 0.0f64;
    for (l, g) in grads.iter().enumerate() {
        let mut numeric_w = Vec::new();
        for idx in ndarray::indices_of(&net.layers[l].weight) {
            let mut plus = net.clone();
            plus.layers[l].weight[idx] += H;
            let mut minus = net.clone();
            minus.layers[l].weight[idx] -= H;
            numeric_w.push((f(&plus) - f(&minus)) / (2.0 * H));
        }
        let analytic_w: Vec<f64> = g.weight.iter().copied().collect();
        worst = worst.max(rel(&analytic_w, &numeric_w));
        let mut numeric_b = Vec::new();
        for i in 0..net.layers[l].bias.len() {
            let mut plus = net.clone();
            plus.layers[l].bias[i] += H;
            let mut minus = net.clone();
            minus.layers[l].bias[i] -= H;
            numeric_b.push((f(&plus) - f(&minus)) / (2.0 * H));
        }
        let analytic_b: Vec<f64> = g.bias.iter().copied().collect();
        worst = worst.max(rel(&analytic_b, &numeric_b));
    }
    worst
}

fn logits_error(z: &[f64], t: &[f64]) -> f64 {
    let (_, g) = bce_with_logits(z, t).unwrap();
    let numeric: Vec<f64> = (0..z.len())
        .map(|i| {
            let mut p = z.to_vec();
            p[i] += H;
            let mut m = z.to_vec();
            m[i] -= H;
            (bce_with_logits(&p, t).unwrap().0 - bce_with_logits(&m, t).unwrap().0) / (2.0 * H)
        })
        .collect();
    rel(&g, &numeric)
}

#[test]
fn criterion_07_gradients() {
    let mut worst = BTreeMap::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(700 + seed);
        let x = Array2::from_shape_fn((16, 24), |_| rng.gen_range(-1.0..1.0));
        let bits = Array2::from_shape_fn((16, 12), |_| f64::from(rng.gen_range(0..2u8)));
        let real = Array2::from_shape_fn((16, 12), |_| rng.gen_range(-1.0..1.0));
        let head = Network::linear(&mut rng, 24, 12);
        let mlp = Network::mlp(&mut rng, 24, 20, 12);
        let z: Vec<f64> = (0..128).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let zt: Vec<f64> = (0..128).map(|_| f64::from(rng.gen_range(0..2u8))).collect();
        let xs = x.slice(ndarray::s![..8, ..]).to_owned();
        let cases = [
            ("number head logits", logits_error(&z, &zt)),
            ("number head (linear, BCE)", network_error(&head, &x, &bits, Loss::Bce)),
            ("MLP BCE", network_error(&mlp, &xs, &bits.slice(ndarray::s![..8, ..]).to_owned(), Loss::Bce)),
            ("MLP MSE", network_error(&mlp, &xs, &real.slice(ndarray::s![..8, ..]).to_owned(), Loss::Mse)),
        ];
        for (name, e) in cases {
            let w = worst.entry(name).or_insert(0.0f64);
            *w = w.max(e);
        }
    }
    let failures: Vec<String> = worst
        .iter()
        .filter(|(_, &e)| !(e < 1e-4))
        .map(|(n, e)| format!("{n}: {e:e}"))
        .collect();
    let summary: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    verdict(7, &failures, format!("max relative error over 20 seeds: {}", summary.join(", ")));
}

// ---------------------------------------------------------------------------
// 8. Learnability probes
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_probes() {
    let mut failures = Vec::new();
    let id = train_identity_head(&IdentityConfig::default()).unwrap();
    let bit_acc = id.bit_accuracy.unwrap_or(0.0);
    if bit_acc != 1.0 || id.steps > 5_000 {
        failures.push(format!("identity head {bit_acc} bit accuracy after {} steps", id.steps));
    }
    let add = operator_learn_demo(&OperatorConfig::default()).unwrap();
    if !(add.exact_decode_rate >= 0.95) {
        failures.push(format!("FoNE addition exact decode {}", add.exact_decode_rate));
    }
    verdict(
        8,
        &failures,
        format!(
            "identity head 100% = {} after {} steps (d_model 256, seed 0); FoNE addition exact decode {:.4}",
            bit_acc == 1.0,
            id.steps,
            add.exact_decode_rate
        ),
    );

    // Comparisons that are reported but never asserted.
    if std::env::var_os("NUMTOK_REPORTS").is_some() {
        for (scheme, op) in [
            (numtok::encoders::Scheme::Fone, Operation::Mult),
            (numtok::encoders::Scheme::BitToken, Operation::Add),
            (numtok::encoders::Scheme::BitToken, Operation::Mult),
        ] {
            let cfg = OperatorConfig { scheme, operation: op, ..OperatorConfig::default() };
            if let Ok(r) = operator_learn_demo(&cfg) {
                let _ = writeln!(
                    std::io::stdout().lock(),
                    "REPORT {scheme} {op:?}: exact decode {:.4}, bit accuracy {:?}",
                    r.exact_decode_rate,
                    r.bit_accuracy
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 9. Number spans against a reference regex engine
// ---------------------------------------------------------------------------

const SIGNED: &str = r"[-]?(?:(?:0(?!\.[0-9]))|(?:[0-9]*[.][0-9]+)|(?:[1-9][0-9]*))";
const UNSIGNED: &str = r"(?:(?:0(?!\.[0-9]))|(?:[0-9]*[.][0-9]+)|(?:[1-9][0-9]*))";

fn corpus() -> Vec<String> {
    let mut docs: Vec<String> = [
        "007",
        "0.5",
        "-3",
        "1e5",
        "James Bond is 007 and owes 0.5 of -3 dollars, or 1e5 cents.",
        "",
        "-",
        ".",
        "0.",
        ".5",
        "-.5",
        "00.5",
        "0.0.0",
        "--2",
        "a-1",
        "1,000,000.25",
        "192.168.0.1",
        "2024-01-02",
        "3.14.15",
        "x0y",
        "-0",
        "-0.0",
        "0-0",
        "naïve café costs €4.50 or ٣ dirhams",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    docs.push("9".repeat(400));
    docs.push(format!("-{}.{}", "1".repeat(30), "0".repeat(30)));
    let pieces = [
        "0", "00", "007", "1", "12", "-", "--", ".", "..", "0.", ".0", "5", "e", "E", "+", " ", "\n", "\t", ",",
        "a", "word", "é", "€", "数", "1e10", "-1", "-0.25", "3.", "9999999999999999999", "0.000001", "x", "(", ")",
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    while docs.len() < 10_000 {
        let n = rng.gen_range(1..40);
        let doc: String = (0..n).map(|_| pieces[rng.gen_range(0..pieces.len())]).collect();
        docs.push(doc);
    }
    docs
}

#[test]
fn criterion_09_regex_parity() {
    let signed = fancy_regex::Regex::new(SIGNED).unwrap();
    let unsigned = fancy_regex::Regex::new(UNSIGNED).unwrap();
    let docs = corpus();
    let mut failures = Vec::new();
    let mut spans = 0usize;
    for doc in &docs {
        for (re, is_signed) in [(&signed, true), (&unsigned, false)] {
            let want: Vec<(usize, usize)> = re.find_iter(doc).map(|m| m.unwrap()).map(|m| (m.start(), m.end())).collect();
            let got: Vec<(usize, usize)> = find_numbers(doc, is_signed).iter().map(|s| (s.start, s.end)).collect();
            spans += got.len();
            if got != want {
                failures.push(format!("{doc:?} (signed {is_signed}): {got:?} vs {want:?}"));
            }
            match detokenize(&tokenize(doc, is_signed)) {
                Ok(back) if back == *doc => {}
                _ => failures.push(format!("round trip lost {doc:?}")),
            }
        }
    }
    verdict(9, &failures, format!("{} documents, {spans} spans identical; tokenize round trip lossless", docs.len()));
}

// ---------------------------------------------------------------------------
// 10. Command-line determinism and self-scoring
// ---------------------------------------------------------------------------

fn numtok(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_numtok")).args(args).output().unwrap();
    assert!(out.status.success(), "numtok {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn self_predictions(reference: &[u8], path: &Path) {
    let mut preds = String::new();
    for line in String::from_utf8_lossy(reference).lines().skip(1) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        preds.push_str(&serde_json::json!({"answer": v["answer"]}).to_string());
        preds.push('\n');
    }
    std::fs::write(path, preds).unwrap();
}

#[test]
fn criterion_10_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    let tasks = ["minmax", "interval", "sorting", "add", "mult", "div", "exp", "mean", "std"];
    for task in tasks {
        let a = numtok(&["gen", "--task", task, "--n", "200", "--seed", "10"]);
        let b = numtok(&["gen", "--task", task, "--n", "200", "--seed", "10"]);
        let c = numtok(&["gen", "--task", task, "--n", "200", "--seed", "10", "--shards", "4"]);
        if a != b {
            failures.push(format!("{task}: two runs differ"));
        }
        if a != c {
            failures.push(format!("{task}: 4 shards differ from 1"));
        }
        let reference = dir.path().join(format!("{task}.jsonl"));
        std::fs::write(&reference, &a).unwrap();
        let pred = dir.path().join(format!("{task}.pred.jsonl"));
        self_predictions(&a, &pred);
        let report = numtok(&["score", "--pred", pred.to_str().unwrap(), "--ref", reference.to_str().unwrap()]);
        let report: serde_json::Value = serde_json::from_slice(&report).unwrap();
        let rate = report["tasks"][task]["exact_match_rate"].as_f64();
        if rate != Some(1.0) {
            failures.push(format!("{task}: self-score exact_match_rate {rate:?}"));
        }
    }
    verdict(
        10,
        &failures,
        format!("gen byte-identical across runs and 1 vs 4 shards for {} tasks; self-score 1.0", tasks.len()),
    );
}
