//! Closed-form embedding constants.
//!
//! `C(d, m, k)^2 = sum_{s <= m} binom(s+d-1, s) (k!/(k-s)!)^2` bounds Sobolev
//! norms by the extended Barron penalty, and
//! `c~(d, m, k)^2 = sum_{s <= m} binom(s+d-1, s) (k!/(k-s)!)^2 (2 sqrt d)^{2(k-s)}`
//! does the same for the variation penalty. Every term is an integer, so
//! terms are summed exactly in `u128` and only fall back to log-space when
//! that overflows.

use crate::error::{Error, Result};

fn check(m: u32, k: u32, d: usize) -> Result<()> {
    if m > k {
        return Err(Error::Domain(format!("derivative order m = {m} exceeds k = {k}")));
    }
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(())
}

/// `binom(s+d-1, s)`: the number of multi-indices of order `s` in `d`
/// variables.
fn count_int(d: usize, s: u32) -> Option<u128> {
    let mut r: u128 = 1;
    for i in 1..=s as u128 {
        r = r.checked_mul(d as u128 - 1 + i)? / i;
    }
    Some(r)
}

fn falling_int(k: u32, s: u32) -> u128 {
    ((k - s + 1)..=k).map(u128::from).product()
}

fn ln_count(d: usize, s: u32) -> f64 {
    (1..=s).map(|i| ((d as f64 - 1.0 + i as f64) / i as f64).ln()).sum()
}

fn ln_falling(k: u32, s: u32) -> f64 {
    ((k - s + 1)..=k).map(|i| (i as f64).ln()).sum()
}

fn barron_term_int(d: usize, s: u32, k: u32) -> Option<u128> {
    let f = falling_int(k, s);
    count_int(d, s)?.checked_mul(f.checked_mul(f)?)
}

fn variation_term_int(d: usize, s: u32, k: u32) -> Option<u128> {
    let scale = (4 * d as u128).checked_pow(k - s)?;
    barron_term_int(d, s, k)?.checked_mul(scale)
}

fn ln_barron_term(d: usize, s: u32, k: u32) -> f64 {
    ln_count(d, s) + 2.0 * ln_falling(k, s)
}

fn ln_variation_term(d: usize, s: u32, k: u32) -> f64 {
    ln_barron_term(d, s, k) + (k - s) as f64 * (4.0 * d as f64).ln()
}

/// `sqrt(sum_s exp(ln_term(s)))`, exact when every term and the sum fit in
/// `u128`.
fn root_of_sum(m: u32, int_term: impl Fn(u32) -> Option<u128>, ln_term: impl Fn(u32) -> f64) -> f64 {
    let exact = (0..=m).try_fold(0u128, |acc, s| acc.checked_add(int_term(s)?));
    if let Some(total) = exact {
        return (total as f64).sqrt();
    }
    let logs: Vec<f64> = (0..=m).map(ln_term).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    (0.5 * lse).exp()
}

/// The order-`s` term `C_s` of the Barron constant.
pub fn barron_term(d: usize, s: u32, k: u32) -> f64 {
    match barron_term_int(d, s, k) {
        Some(v) => v as f64,
        None => ln_barron_term(d, s, k).exp(),
    }
}

/// The order-`s` term `I_s` of the variation constant.
pub fn variation_term(d: usize, s: u32, k: u32) -> f64 {
    match variation_term_int(d, s, k) {
        Some(v) => v as f64,
        None => ln_variation_term(d, s, k).exp(),
    }
}

/// `C(d, m, k)`.
pub fn barron_embedding_constant(d: usize, m: u32, k: u32) -> Result<f64> {
    check(m, k, d)?;
    Ok(root_of_sum(m, |s| barron_term_int(d, s, k), |s| ln_barron_term(d, s, k)))
}

/// `c~(d, m, k)`.
pub fn variation_embedding_constant(d: usize, m: u32, k: u32) -> Result<f64> {
    check(m, k, d)?;
    Ok(root_of_sum(m, |s| variation_term_int(d, s, k), |s| ln_variation_term(d, s, k)))
}
