use crate::numeric::format_decimal;

const HEADER_EACH: &str = "You are an expert in numeracy. For each problem, output only valid JSON in this format: \n";
const HEADER_ONE: &str = "You are an expert in numeracy. Return exactly one valid JSON object in this format: \n";
const NO_EXTRA: &str = "Do not explain, show steps, or add any extra text. Do not use code blocks to output the answer.\n";
const NO_TOOLS: &str = "DO NOT CALL ANY external APIs or use ANY external tool to solve the problem. DO NOT USE a calculator tool. DO NOT USE python. DO NOT USE Wolfram Alpha.\n";

fn system(header: &str, format: &str, last: &str) -> String {
    format!("{header}{{\"answer\": <{format}>}}\n{NO_EXTRA}{NO_TOOLS}{last}")
}

pub fn minmax_system() -> String {
    system(
        HEADER_EACH,
        "numeric_answer",
        "The answer must be a single number, exactly as it appears in the list.",
    )
}

pub fn interval_system() -> String {
    system(
        HEADER_EACH,
        "interval_multiple_choice_answer",
        "The answer must be one of the following: A, B, C, D, E, F.",
    )
}

pub fn sorting_system() -> String {
    system(HEADER_EACH, "sorted_list", "The answer must be a list of numbers.")
}

/// Shared by single-step (add, mult, div) and multi-step (exp, mean, std)
/// arithmetic.
pub fn arithmetic_system() -> String {
    system(
        HEADER_ONE,
        "numeric_answer",
        "If the answer is not an integer, give it as a decimal (not a fraction), rounded to at most 15 significant digits.",
    )
}

pub fn render_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|&v| format_decimal(v)).collect();
    format!("[{}]", items.join(", "))
}

pub fn minmax_question(values: &[f64], maximum: bool) -> String {
    let which = if maximum { "maximum" } else { "minimum" };
    format!("What is the {which} of the list {}", render_list(values))
}

pub fn sorting_question(values: &[f64], ascending: bool) -> String {
    let order = if ascending { "ascending" } else { "descending" };
    format!("Sort the list {} in {order} order.", render_list(values))
}

/// Letter of the interval at position `pos` (`0` → `A`).
pub fn interval_letter(pos: usize) -> char {
    (b'A' + pos as u8) as char
}

pub fn interval_question(x: f64, bounds: &[f64]) -> String {
    let b: Vec<String> = bounds.iter().map(|&v| format_decimal(v)).collect();
    let mut parts = Vec::with_capacity(b.len() + 1);
    parts.push(format!("{}: x < {}", interval_letter(0), b[0]));
    for i in 1..b.len() {
        parts.push(format!("{}: {} <= x < {}", interval_letter(i), b[i - 1], b[i]));
    }
    parts.push(format!("{}: {} <= x", interval_letter(b.len()), b[b.len() - 1]));
    format!(
        "What interval does x={} belong to? {}",
        format_decimal(x),
        parts.join(", ")
    )
}

pub fn binary_question(a: f64, op: char, b: f64) -> String {
    format!("What is {} {op} {}?", format_decimal(a), format_decimal(b))
}

pub fn statistic_question(name: &str, values: &[f64]) -> String {
    format!("What is the {name} of the list {}?", render_list(values))
}
