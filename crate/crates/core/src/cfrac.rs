//! Simple continued fractions of numbers in (0, 1): expansion, convergents and
//! bounded-type checks.
//!
//! Expansion runs on the exact dyadic rational carried by the `f64` input, so
//! no quotient is corrupted by rounding inside the floor/invert loop. The loop
//! stops once the current convergent reproduces the input to within 2^-52;
//! quotients past that point describe the binary representation rather than
//! the number the caller meant.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Golden mean conjugate (√5 − 1)/2, whose quotients are all 1.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

const RESIDUAL_STOP: f64 = 1.0 / 4_503_599_627_370_496.0; // 2^-52

/// `value = [0; a_1, a_2, ...]`, truncated to the computed prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub value: f64,
    pub quotients: Vec<u64>,
}

/// The convergent `p_k / q_k`, `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub p: u64,
    pub q: u64,
    pub index: usize,
}

impl Convergent {
    pub fn as_f64(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

impl ContinuedFraction {
    /// Builds a fraction from explicit quotients; `value` is the finite
    /// fraction they spell.
    pub fn from_quotients(quotients: Vec<u64>) -> Result<Self> {
        if quotients.is_empty() {
            return Err(Error::domain("continued fraction needs at least one quotient"));
        }
        if quotients.contains(&0) {
            return Err(Error::domain("partial quotients must be positive"));
        }
        let value = quotients
            .iter()
            .rev()
            .fold(0.0_f64, |tail, &a| 1.0 / (a as f64 + tail));
        Ok(Self { value, quotients })
    }

    /// Largest computed partial quotient.
    pub fn max_quotient(&self) -> u64 {
        self.quotients.iter().copied().max().unwrap_or(0)
    }
}

/// First `n_terms` partial quotients of `x` in (0, 1), fewer if the expansion
/// terminates or reaches double-precision resolution.
pub fn cf_expand(x: f64, n_terms: usize) -> Result<ContinuedFraction> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("cf_expand needs 0 < x < 1, got {x}")));
    }
    let exact = BigRational::from_float(x).expect("finite input");
    let mut rem = exact;
    let mut quotients = Vec::with_capacity(n_terms);
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (BigInt::zero(), BigInt::one());

    while quotients.len() < n_terms && !rem.is_zero() {
        let inv = rem.recip();
        let a = inv.floor();
        rem = inv - &a;
        let a = a.to_integer();
        let a_u64 = a
            .to_u64()
            .ok_or_else(|| Error::Resource("partial quotient overflows u64".into()))?;
        quotients.push(a_u64);

        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);

        let conv = BigRational::new(p.clone(), q.clone());
        let err = (BigRational::from_float(x).unwrap() - conv).abs();
        if err.to_f64().unwrap_or(f64::INFINITY) < RESIDUAL_STOP {
            break;
        }
    }
    Ok(ContinuedFraction { value: x, quotients })
}

/// Convergents `p_k / q_k` for `k = 1..=n` by the three-term recurrence.
pub fn convergents(cf: &ContinuedFraction) -> Result<Vec<Convergent>> {
    if cf.quotients.is_empty() {
        return Err(Error::domain("convergents of an empty continued fraction"));
    }
    let (mut p_prev, mut q_prev) = (1_u64, 0_u64);
    let (mut p, mut q) = (0_u64, 1_u64);
    let mut out = Vec::with_capacity(cf.quotients.len());
    for (i, &a) in cf.quotients.iter().enumerate() {
        let p_next = a
            .checked_mul(p)
            .and_then(|v| v.checked_add(p_prev))
            .ok_or_else(|| Error::Resource("convergent numerator overflows u64".into()))?;
        let q_next = a
            .checked_mul(q)
            .and_then(|v| v.checked_add(q_prev))
            .ok_or_else(|| Error::Resource("convergent denominator overflows u64".into()))?;
        debug_assert_eq!(p_next.gcd(&q_next), 1);
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
        out.push(Convergent { p, q, index: i + 1 });
    }
    Ok(out)
}

/// Denominators `q_0 = 1, q_1, ..., q_n` (the indexing used by dynamical
/// partitions, where level `n` uses `q_n + q_{n+1}` points).
pub fn denominators(cf: &ContinuedFraction) -> Result<Vec<u64>> {
    let mut qs = vec![1_u64];
    qs.extend(convergents(cf)?.iter().map(|c| c.q));
    Ok(qs)
}

/// True iff every computed quotient is at most `bound`.
///
/// The verdict concerns the computed prefix only: a finite expansion cannot
/// show that all later quotients stay bounded.
pub fn is_bounded_type(cf: &ContinuedFraction, bound: u64) -> bool {
    cf.quotients.iter().all(|&a| a <= bound)
}
