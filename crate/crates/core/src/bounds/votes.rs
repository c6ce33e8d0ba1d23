//! Velvet-fork voting: candidate miss probability, the binomial tail of an
//! inconsistent root collecting a majority, and the `alpha`/`beta` solvers.
//!
//! Fractions are exact rationals so small tails are summed without rounding.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::chernoff::BoundsError;

/// Parse `"1/3"`, `"0.25"` or `"2^-20"` into an exact rational.
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let base: i64 = base.trim().parse().ok()?;
        let exp: i32 = exp.trim().parse().ok()?;
        let b = BigRational::from_integer(BigInt::from(base));
        return Some(if exp >= 0 {
            num_traits::pow(b, exp as usize)
        } else {
            if base == 0 {
                return None;
            }
            num_traits::pow(b.recip(), exp.unsigned_abs() as usize)
        });
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) || s.contains(['e', 'E']) {
        let v: f64 = s.parse().ok()?;
        return BigRational::from_float(v);
    }
    let digits: BigInt = format!("{}{}", int, frac).parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Some(BigRational::new(digits, scale))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn rational(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

/// `M_a^beta`: every one of the `beta` candidates was mined by the adversary.
pub fn candidates_miss_prob_exact(
    m_a: &BigRational,
    beta: u32,
) -> Result<BigRational, BoundsError> {
    if m_a.is_negative_or_at_least_one() {
        return Err(BoundsError::AdversaryFraction(m_a.to_string()));
    }
    Ok(num_traits::pow(m_a.clone(), beta as usize))
}

pub fn candidates_miss_prob(m_a: &BigRational, beta: u32) -> Result<f64, BoundsError> {
    candidates_miss_prob_exact(m_a, beta).map(|r| to_f64(&r))
}

trait UnitRange {
    fn is_negative_or_at_least_one(&self) -> bool;
}

impl UnitRange for BigRational {
    fn is_negative_or_at_least_one(&self) -> bool {
        *self < BigRational::zero() || *self >= BigRational::one()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteTail {
    pub alpha: u32,
    /// `Pr{X >= ceil(alpha/2)}` for `X ~ Binomial(alpha, M_a)`, as `num/den`.
    pub exact: String,
    pub exact_f64: f64,
    /// `(M_a M_h)^((alpha-1)/2) * 2^(alpha-1)`.
    pub closed_form: f64,
}

fn binomial_row(n: u32) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for k in 0..n {
        let next = &row[k as usize] * BigUint::from(n - k) / BigUint::from(k + 1);
        row.push(next);
    }
    row
}

/// Exact binomial upper tail from `ceil(alpha/2)`.
///
/// With `M_a = a/d` the sum is `Σ C(alpha,i) a^i (d-a)^(alpha-i) / d^alpha`,
/// so only the final division leaves the integers.
pub fn vote_tail_exact(m_a: &BigRational, alpha: u32) -> BigRational {
    let d = m_a.denom().clone();
    let a = m_a.numer().clone();
    let b = &d - &a;
    let row = binomial_row(alpha);
    let from = alpha.div_ceil(2);
    let mut a_pow = num_traits::pow(a.clone(), from as usize);
    let mut b_pows = Vec::with_capacity((alpha - from + 1) as usize);
    let mut bp = BigInt::one();
    for _ in 0..=alpha - from {
        b_pows.push(bp.clone());
        bp *= &b;
    }
    let mut num = BigInt::zero();
    for i in from..=alpha {
        num += BigInt::from(row[i as usize].clone()) * &a_pow * &b_pows[(alpha - i) as usize];
        a_pow *= &a;
    }
    BigRational::new(num, num_traits::pow(d, alpha as usize))
}

pub fn vote_tail_closed_form(m_a: f64, alpha: u32) -> f64 {
    let m_h = 1.0 - m_a;
    ((alpha as f64 - 1.0) / 2.0 * (m_a * m_h).ln() + (alpha as f64 - 1.0) * 2f64.ln()).exp()
}

/// Probability that an inconsistent root is accepted by a majority of its
/// `alpha` voters when all adversarial voters accept it.
pub fn invalid_root_vote_tail(m_a: &BigRational, alpha: u32) -> Result<VoteTail, BoundsError> {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    if *m_a <= BigRational::zero() || *m_a >= half {
        return Err(BoundsError::AdversaryFraction(m_a.to_string()));
    }
    if alpha == 0 {
        return Err(BoundsError::InvalidConfig(
            "alpha must be at least 1".into(),
        ));
    }
    let exact = vote_tail_exact(m_a, alpha);
    Ok(VoteTail {
        alpha,
        exact_f64: to_f64(&exact),
        exact: exact.to_string(),
        closed_form: vote_tail_closed_form(to_f64(m_a), alpha),
    })
}

pub const DEFAULT_SEARCH_CAP: u32 = 4096;

/// Smallest `alpha` whose exact tail is at most `epsilon`. The tail is not
/// monotone in `alpha` (odd/even steps), so the search is linear.
pub fn solve_alpha(epsilon: f64, m_a: &BigRational, cap: u32) -> Result<u32, BoundsError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BoundsError::Epsilon(epsilon));
    }
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    if *m_a < BigRational::zero() || *m_a >= half {
        return Err(BoundsError::AdversaryFraction(m_a.to_string()));
    }
    let eps = rational(epsilon).ok_or(BoundsError::Epsilon(epsilon))?;
    (1..=cap)
        .find(|&alpha| vote_tail_exact(m_a, alpha) <= eps)
        .ok_or(BoundsError::SearchCap(cap as u64))
}

/// Smallest `beta` with `M_a^beta <= epsilon`.
pub fn solve_beta(epsilon: f64, m_a: &BigRational, cap: u32) -> Result<u32, BoundsError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BoundsError::Epsilon(epsilon));
    }
    if m_a.is_negative_or_at_least_one() {
        return Err(BoundsError::AdversaryFraction(m_a.to_string()));
    }
    let eps = rational(epsilon).ok_or(BoundsError::Epsilon(epsilon))?;
    let mut p = BigRational::one();
    for beta in 1..=cap {
        p *= m_a;
        if p <= eps {
            return Ok(beta);
        }
    }
    Err(BoundsError::SearchCap(cap as u64))
}
