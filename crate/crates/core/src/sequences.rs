//! The scalar sequences `a_k`, `b_k`, `c_k` used to bound the resolvent
//! differences, evaluated term by term.
//!
//! Every term is a monomial `coeff · (ik)^e · i^p`. Keeping the terms symbolic
//! until evaluation lets `k·b_k` be formed by shifting exponents, which keeps
//! the phase exact.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{i_pow, real_pow};

/// Standard binomial coefficient `n! / (p! (n−p)!)`.
pub fn binomial(n: u64, p: u64) -> f64 {
    if p > n {
        return 0.0;
    }
    let p = p.min(n - p);
    (0..p).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `coeff · (ik)^ik_power · i^i_power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub ik_power: i64,
    pub i_power: i64,
}

impl Monomial {
    fn new(coeff: f64, ik_power: i64, i_power: i64) -> Self {
        Monomial {
            coeff,
            ik_power,
            i_power,
        }
    }

    fn times(self, other: Monomial) -> Monomial {
        Monomial::new(
            self.coeff * other.coeff,
            self.ik_power + other.ik_power,
            self.i_power + other.i_power,
        )
    }

    /// `k^extra · coeff · (ik)^e · i^p`, computed as `coeff · k^{e+extra} · i^{e+p}`.
    pub fn eval_scaled(&self, k: i64, extra_k_power: i64) -> Complex64 {
        i_pow(self.ik_power + self.i_power)
            * (self.coeff * real_pow(k as f64, self.ik_power + extra_k_power))
    }
}

/// Merges monomials with equal `k`-power, reducing phases to `{1, i}`. The
/// coefficients are integers, so leading powers that cancel do so exactly.
pub fn collect(terms: &[Monomial]) -> Vec<Monomial> {
    let mut merged: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for t in terms {
        let phase = (t.ik_power + t.i_power).rem_euclid(4);
        let sign = if phase >= 2 { -1.0 } else { 1.0 };
        *merged.entry((t.ik_power, phase % 2)).or_insert(0.0) += sign * t.coeff;
    }
    merged
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((e, phase), coeff)| Monomial::new(coeff, e, phase - e))
        .collect()
}

fn sum(terms: &[Monomial], k: i64, extra: i64) -> Complex64 {
    collect(terms).iter().map(|t| t.eval_scaled(k, extra)).sum()
}

/// Terms of `a_k = n + Σ_{j=1}^{n−1} Σ_{p=1}^{j} C(j,p) (ik)^{j+1−n−p} i^{p−1}
///                   + Σ_{p=2}^{n} C(n,p) (ik)^{1−p} i^{p−1}`.
pub fn a_terms(n: u64) -> Vec<Monomial> {
    let ni = n as i64;
    let mut terms = vec![Monomial::new(n as f64, 0, 0)];
    for j in 1..n {
        for p in 1..=j {
            let (ji, pi) = (j as i64, p as i64);
            terms.push(Monomial::new(binomial(j, p), ji + 1 - ni - pi, pi - 1));
        }
    }
    for p in 2..=n {
        let pi = p as i64;
        terms.push(Monomial::new(binomial(n, p), 1 - pi, pi - 1));
    }
    terms
}

/// Terms of
/// `b_k = 2 Σ_{p=1}^{n} C(n,p)(ik)^{−p} i^p + Σ_{j=1}^{n−1} (ik)^{j−n}
///      + Σ_{j=1}^{n−1} Σ_{p=0}^{j} C(j,p)(ik)^{j−p−n} i^p
///      + (Σ_{p=1}^{n} C(n,p)(ik)^{−p} i^p)(Σ_{j=1}^{n−1} (ik)^{j−n})`.
pub fn b_terms(n: u64) -> Vec<Monomial> {
    let ni = n as i64;
    let binom_tail: Vec<Monomial> = (1..=n)
        .map(|p| Monomial::new(binomial(n, p), -(p as i64), p as i64))
        .collect();
    let geometric: Vec<Monomial> = (1..n)
        .map(|j| Monomial::new(1.0, j as i64 - ni, 0))
        .collect();

    let mut terms: Vec<Monomial> = binom_tail
        .iter()
        .map(|t| Monomial {
            coeff: 2.0 * t.coeff,
            ..*t
        })
        .collect();
    terms.extend(geometric.iter().copied());
    for j in 1..n {
        for p in 0..=j {
            terms.push(Monomial::new(
                binomial(j, p),
                j as i64 - p as i64 - ni,
                p as i64,
            ));
        }
    }
    for x in &binom_tail {
        for y in &geometric {
            terms.push(x.times(*y));
        }
    }
    terms
}

/// Terms of `c_k = (Σ_{p=0}^{n} C(n,p)(ik)^{n−p} i^p)(Σ_{j=1}^{n} (ik)^j)
///             − (ik)^n Σ_{j=1}^{n} Σ_{p=0}^{j} C(j,p)(ik)^{j−p} i^p`.
pub fn c_terms(n: u64) -> Vec<Monomial> {
    let ni = n as i64;
    let mut terms = Vec::new();
    for p in 0..=n {
        let x = Monomial::new(binomial(n, p), ni - p as i64, p as i64);
        for j in 1..=n {
            terms.push(x.times(Monomial::new(1.0, j as i64, 0)));
        }
    }
    for j in 1..=n {
        for p in 0..=j {
            terms.push(Monomial::new(
                -binomial(j, p),
                ni + j as i64 - p as i64,
                p as i64,
            ));
        }
    }
    terms
}

fn check(n: u64, k: i64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("order n must be at least 1"));
    }
    if k == 0 {
        return Err(Error::ZeroFrequency);
    }
    Ok(())
}

pub fn seq_a(n: u64, k: i64) -> Result<Complex64> {
    check(n, k)?;
    Ok(sum(&a_terms(n), k, 0))
}

pub fn seq_b(n: u64, k: i64) -> Result<Complex64> {
    check(n, k)?;
    Ok(sum(&b_terms(n), k, 0))
}

/// `k · b_k`, with the factor `k` folded into the exponents.
pub fn seq_kb(n: u64, k: i64) -> Result<Complex64> {
    check(n, k)?;
    Ok(sum(&b_terms(n), k, 1))
}

/// `c_k`; defined at `k = 0` as well since no negative powers occur.
pub fn seq_c(n: u64, k: i64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::invalid("order n must be at least 1"));
    }
    Ok(sum(&c_terms(n), k, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn first_order_specializations() {
        for k in [-7i64, -1, 1, 2, 3, 1000] {
            assert_eq!(seq_a(1, k).unwrap(), c(1.0, 0.0));
            assert!((seq_b(1, k).unwrap() - c(2.0 / k as f64, 0.0)).norm() < 1e-15);
            assert_eq!(seq_kb(1, k).unwrap(), c(2.0, 0.0));
        }
    }

    #[test]
    fn second_order_at_k_one() {
        assert!((seq_a(2, 1).unwrap() - c(3.0, -1.0)).norm() < 1e-15);
        assert!((seq_b(2, 1).unwrap() - c(6.0, -6.0)).norm() < 1e-15);
        assert!((seq_c(2, 1).unwrap() - c(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_frequency_is_rejected() {
        assert_eq!(seq_a(2, 0), Err(Error::ZeroFrequency));
        assert_eq!(seq_b(2, 0), Err(Error::ZeroFrequency));
        assert!(seq_c(2, 0).is_ok());
    }

    #[test]
    fn collected_c_has_no_leading_power() {
        // Both products in c_k start with (ik)^{2n}; they cancel exactly.
        for n in 1..=5u64 {
            let top = collect(&c_terms(n))
                .iter()
                .map(|t| t.ik_power)
                .max()
                .unwrap_or(0);
            assert!(top < 2 * n as i64, "n={n}: top power {top}");
        }
        assert!(collect(&c_terms(1)).is_empty());
    }

    #[test]
    fn large_k_values_are_exact() {
        // Exact integers: c(3, 1000) = 2003001000 + 1002001000000i,
        // c(4, −1000) = 1995003999000000 − 997000004996001000i.
        assert_eq!(seq_c(3, 1000).unwrap(), c(2003001000.0, 1002001000000.0));
        let got = seq_c(4, -1000).unwrap();
        assert_eq!(got.re, 1995003999000000.0);
        assert!((got.im + 997000004996001000.0).abs() <= 256.0);
    }

    #[test]
    fn term_counts_follow_the_sums() {
        // n + Σ_{j<n} j + (n−1)
        assert_eq!(a_terms(4).len(), 1 + 6 + 3);
        // 2n-term sum, n−1 geometric, Σ_{j<n}(j+1), n(n−1) products
        assert_eq!(b_terms(3).len(), 3 + 2 + 5 + 6);
        assert!(a_terms(1).len() == 1 && b_terms(1).len() == 1);
    }
}
