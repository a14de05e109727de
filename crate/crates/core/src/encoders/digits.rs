use serde::{Deserialize, Serialize};

/// Conventional multi-token digit tokenizers, used for token accounting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitScheme {
    SingleDigit,
    Subword3,
}

impl std::str::FromStr for DigitScheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "single_digit" => Ok(Self::SingleDigit),
            "subword3" => Ok(Self::Subword3),
            other => Err(crate::Error::invalid(format!("unknown digit scheme {other:?}"))),
        }
    }
}

/// Approximate token count of `rendered`.
///
/// Digit runs cost one token per digit, or one per greedy group of three.
/// Every other punctuation character is one token, each run of letters is one
/// token and whitespace is free.
pub fn digit_token_count(rendered: &str, scheme: DigitScheme) -> usize {
    let mut count = 0;
    let mut chars = rendered.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_ascii_digit() {
            let mut run = 1usize;
            while chars.next_if(|c| c.is_ascii_digit()).is_some() {
                run += 1;
            }
            count += match scheme {
                DigitScheme::SingleDigit => run,
                DigitScheme::Subword3 => run.div_ceil(3),
            };
        } else if c.is_alphabetic() {
            while chars.next_if(|c| c.is_alphabetic()).is_some() {}
            count += 1;
        } else if !c.is_whitespace() {
            count += 1;
        }
    }
    count
}
