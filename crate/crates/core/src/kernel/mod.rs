//! Exact multivariate rational arithmetic over kernel symbols.

pub mod expr;
pub mod gcd;
pub mod poly;

pub use expr::Expr;
pub use poly::{q, q_frac, Monomial, Poly, Q};

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;

use crate::error::Error;
use crate::symbol::Symbol;

/// Outcome of a randomized zero test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroTest {
    /// Nonzero at some sampled point: certainly not identically zero.
    Nonzero,
    /// Zero at every pole-free sampled point.
    ProbablyZero,
}

/// Evaluates `e` at `points` random integer points drawn from
/// `[-range, range]`, resampling on poles. Only a pre-filter: a
/// `ProbablyZero` verdict is never a certificate.
pub fn random_zero_test<R: Rng>(e: &Expr, points: usize, range: i64, rng: &mut R) -> ZeroTest {
    let symbols = e.symbols();
    let mut found = 0;
    let mut attempts = 0;
    while found < points && attempts < points * 20 {
        attempts += 1;
        let point: HashMap<Symbol, Q> = symbols
            .iter()
            .map(|&s| (s, Q::from_integer(BigInt::from(rng.gen_range(-range..=range)))))
            .collect();
        match e.eval_map(&point) {
            Ok(v) if !v.is_zero() => return ZeroTest::Nonzero,
            Ok(_) => found += 1,
            Err(Error::Pole) => continue,
            Err(_) => continue,
        }
    }
    ZeroTest::ProbablyZero
}
