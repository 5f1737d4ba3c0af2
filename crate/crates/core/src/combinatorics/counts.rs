//! Closed-form counts over rank-normalized `n x n` fillings.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::tableaux::{count_tableaux_hook, Partition};

pub fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

fn cells(n: usize) -> u64 {
    (n * n) as u64
}

/// `((n^2)!, ((n^2)!)^2)`: rank configurations and fillings of the grid.
pub fn count_fillings(n: usize) -> (BigUint, BigUint) {
    let configs = factorial(cells(n));
    let fillings = &configs * &configs;
    (configs, fillings)
}

/// `((n^2)! / (n!)^n)^2`.
pub fn count_stable_fillings(n: usize) -> BigUint {
    let per_axis = factorial(cells(n)) / factorial(n as u64).pow(n as u32);
    &per_axis * &per_axis
}

/// `1 / (n!)^(2n)`.
pub fn stable_fraction(n: usize) -> BigRational {
    let denom = factorial(n as u64).pow(2 * n as u32);
    BigRational::new(BigUint::one().into(), denom.into())
}

/// `(n!)^(2n)`: stable fillings that satisfy both bin conditions.
pub fn count_bin_stable(n: usize) -> BigUint {
    factorial(n as u64).pow(2 * n as u32)
}

/// `f^(n,...,n)`, the number of standard Young tableaux of square shape.
pub fn square_tableaux_count(n: usize) -> BigUint {
    if n == 0 {
        return BigUint::one();
    }
    count_tableaux_hook(&Partition::square(n))
}

/// `log2` of a positive big integer, accurate to double precision.
pub fn log2_big(v: &BigUint) -> f64 {
    assert!(!v.is_zero(), "log2 of zero");
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().expect("64-bit value");
    top.log2() + shift as f64
}

/// Decision-tree lower bound `log2((n^2)! / f^(n,...,n))`, i.e. the log of
/// the product of all hook lengths of the square diagram, in three forms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub n: usize,
    /// From the exact big-integer quotient.
    pub exact_bits: f64,
    /// `sum_{i,j} log2(2n - i - j + 1)`.
    pub summation_bits: f64,
    /// `sum_{i=1}^{n} i*log2(i) + sum_{i=1}^{n-1} i*log2(2n - i)`.
    pub closed_form_bits: f64,
}

pub fn lower_bound_bits(n: usize) -> LowerBound {
    assert!(n >= 1, "n must be positive");
    let quotient = factorial(cells(n)) / square_tableaux_count(n);
    let exact_bits = log2_big(&quotient);

    let mut summation_bits = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            summation_bits += ((2 * n + 1 - i - j) as f64).log2();
        }
    }

    let nf = n as f64;
    let closed_form_bits = (1..=n).map(|i| i as f64 * (i as f64).log2()).sum::<f64>()
        + (1..n)
            .map(|i| i as f64 * (2.0 * nf - i as f64).log2())
            .sum::<f64>();

    LowerBound {
        n,
        exact_bits,
        summation_bits,
        closed_form_bits,
    }
}
