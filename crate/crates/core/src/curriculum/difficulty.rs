use crate::numeric::{format_decimal, nonzero_digit_count, to_bits, Radix};
use crate::taskgen::{Problem, Task};

/// Non-zero digits (base 10) or one bits (base 2) in the fixed-point form of `v`.
pub fn nonzero_digits(v: f64, radix: Radix) -> u32 {
    match radix {
        Radix::Decimal => nonzero_digit_count(&format_decimal(v)),
        Radix::Binary => {
            let b = to_bits(v);
            if v == 0.0 || b.is_special() {
                return 0;
            }
            let implicit = if b.exponent_field() == 0 { 0 } else { 1 };
            b.significand().count_ones() + implicit
        }
    }
}

/// Curriculum difficulty of a problem. Tasks without a curriculum score 0.
///
/// * Mult: non-zero digits of both operands.
/// * Div: non-zero digits of dividend, divisor and quotient.
/// * Exp: product of the non-zero digit counts of base, exponent and result.
/// * Mean and Std: `s - x + 15` for spread `s` and mean decade `x`.
pub fn difficulty_of(p: &Problem, radix: Radix) -> u32 {
    let nz = |v: f64| nonzero_digits(v, radix);
    match p.task {
        Task::Mult => p.operands.iter().map(|&v| nz(v)).sum(),
        Task::Div => {
            let q = p.answer_value.unwrap_or(0.0);
            p.operands.iter().map(|&v| nz(v)).sum::<u32>() + nz(q)
        }
        Task::Exp => {
            let r = p.answer_value.unwrap_or(0.0);
            p.operands.iter().map(|&v| nz(v)).product::<u32>() * nz(r)
        }
        Task::Mean | Task::Std => match (p.meta.spread, p.meta.x) {
            (Some(s), Some(x)) => (s - x + 15).max(0) as u32,
            _ => 0,
        },
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgen::Meta;

    fn problem(task: Task, operands: Vec<f64>, answer: f64, meta: Meta) -> Problem {
        Problem {
            task,
            question: String::new(),
            system: String::new(),
            operands,
            answer: format_decimal(answer),
            answer_value: Some(answer),
            difficulty: 0,
            meta,
        }
    }

    #[test]
    #[allow(clippy::identity_op)]
    fn examples() {
        let m = problem(Task::Mult, vec![20.0, 300.0], 6000.0, Meta::default());
        assert_eq!(difficulty_of(&m, Radix::Decimal), 2);
        let m = problem(Task::Mult, vec![11.0, 101.0], 1111.0, Meta::default());
        // 11 = 0b1011, 101 = 0b1100101
        assert_eq!(difficulty_of(&m, Radix::Binary), 3 + 4);
        let meta = Meta {
            spread: Some(5),
            x: Some(3),
            ..Meta::default()
        };
        let mean = problem(Task::Mean, vec![1.0, 2.0], 1.5, meta);
        assert_eq!(difficulty_of(&mean, Radix::Decimal), 17);
        let d = problem(Task::Div, vec![6.25, 2.5], 2.5, Meta::default());
        assert_eq!(difficulty_of(&d, Radix::Decimal), 3 + 2 + 2);
        let e = problem(Task::Exp, vec![1.5, 2.0], 2.25, Meta::default());
        assert_eq!(difficulty_of(&e, Radix::Decimal), 2 * 1 * 3);
        let a = problem(Task::Add, vec![1.5, 2.0], 3.5, Meta::default());
        assert_eq!(difficulty_of(&a, Radix::Decimal), 0);
    }

    #[test]
    fn binary_counts_fraction_bits() {
        assert_eq!(nonzero_digits(0.75, Radix::Binary), 2);
        assert_eq!(nonzero_digits(-1.0, Radix::Binary), 1);
        assert_eq!(nonzero_digits(0.0, Radix::Binary), 0);
    }
}
