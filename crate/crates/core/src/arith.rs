//! Integer arithmetic substrate.
//!
//! A smallest-prime-factor sieve drives every multiplicative computation in
//! the crate: factorizations, square parts, the `ℓ`-fold divisor function
//! `τ_ℓ`, the Liouville function and the checks of the divisor-function
//! inequalities used by the point-counting arguments.
//!
//! Divisor values are computed in `u128` with checked arithmetic. Nothing
//! here wraps silently; overflow surfaces as [`Error::Overflow`].

use crate::error::{Error, Result};

/// Smallest prime factor table for `1..=limit`.
///
/// `spf[1] = 1` is a sentinel; index 0 is unused.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

impl FactorSieve {
    /// Linear sieve: each composite is crossed out exactly once by its
    /// smallest prime factor.
    pub fn new(limit: u64) -> Result<Self> {
        if limit == 0 {
            return Err(Error::InvalidLimit(0));
        }
        if limit > u32::MAX as u64 {
            return Err(Error::InvalidArgument(format!(
                "sieve limit {limit} exceeds 32-bit range"
            )));
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        spf[1] = 1;
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let Some(c) = i.checked_mul(p as usize) else {
                    break;
                };
                if c > n {
                    break;
                }
                spf[c] = p;
            }
        }
        Ok(Self { spf })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    fn check(&self, n: u64) -> Result<usize> {
        if n == 0 || n > self.limit() {
            return Err(Error::OutOfRange {
                value: n,
                limit: self.limit(),
            });
        }
        Ok(n as usize)
    }

    /// Smallest prime factor of `n` (1 for `n = 1`).
    pub fn spf(&self, n: u64) -> Result<u64> {
        Ok(self.spf[self.check(n)?] as u64)
    }

    /// Unchecked smallest prime factor for hot loops; `n` must be in range.
    #[inline]
    pub(crate) fn spf_unchecked(&self, n: usize) -> usize {
        self.spf[n] as usize
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit() && self.spf[n as usize] as u64 == n
    }

    /// Primes up to the limit in increasing order.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..self.spf.len())
            .filter(|&i| self.spf[i] as usize == i)
            .map(|i| i as u64)
    }

    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        let mut m = self.check(n)?;
        let mut out: Vec<(u64, u32)> = Vec::new();
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        Ok(Factorization(out))
    }

    /// Total number of prime factors counted with multiplicity.
    pub fn big_omega(&self, n: u64) -> Result<u32> {
        let mut m = self.check(n)?;
        let mut count = 0;
        while m > 1 {
            m /= self.spf[m] as usize;
            count += 1;
        }
        Ok(count)
    }

    /// Largest square divisor of `n`.
    pub fn sq(&self, n: u64) -> Result<u64> {
        Ok(self.factorize(n)?.sq() as u64)
    }

    /// `n / sq(n)`, the squarefree part of `n`.
    pub fn squarefree_kernel(&self, n: u64) -> Result<u64> {
        Ok(self.factorize(n)?.kernel() as u64)
    }

    pub fn tau(&self, n: u64, ell: u32) -> Result<u128> {
        self.factorize(n)?.tau(ell)
    }

    /// `λ(n) = (-1)^Ω(n)`.
    pub fn liouville(&self, n: u64) -> Result<i8> {
        Ok(if self.big_omega(n)? % 2 == 0 { 1 } else { -1 })
    }
}

/// Factorization by trial division, for integers outside any sieve.
pub fn factorize_trial(mut n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot factor 0".into()));
    }
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    Ok(Factorization(out))
}

/// Prime factorization as `(prime, exponent)` pairs with strictly increasing
/// primes and positive exponents. The factorization of 1 is empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization(pub Vec<(u64, u32)>);

impl Factorization {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn pairs(&self) -> &[(u64, u32)] {
        &self.0
    }

    /// The factored integer, or `None` if it does not fit in `u128`.
    pub fn value(&self) -> Option<u128> {
        self.0.iter().try_fold(1u128, |acc, &(p, e)| {
            (p as u128).checked_pow(e).and_then(|pe| acc.checked_mul(pe))
        })
    }

    /// Product of two factorizations (exponents add).
    pub fn mul(&self, other: &Factorization) -> Factorization {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Factorization(out)
    }

    /// Largest square divisor. Panics only if the input did not fit `u128`.
    pub fn sq(&self) -> u128 {
        self.0.iter().map(|&(p, e)| (p as u128).pow(e - e % 2)).product()
    }

    /// Squarefree kernel `n / sq(n)`.
    pub fn kernel(&self) -> u128 {
        self.0
            .iter()
            .filter(|&&(_, e)| e % 2 == 1)
            .map(|&(p, _)| p as u128)
            .product()
    }

    pub fn is_square(&self) -> bool {
        self.0.iter().all(|&(_, e)| e % 2 == 0)
    }

    /// `τ_ℓ(n) = Π_p C(e_p + ℓ - 1, ℓ - 1)`.
    pub fn tau(&self, ell: u32) -> Result<u128> {
        if ell == 0 {
            return Err(Error::InvalidArgument("τ_0 is undefined".into()));
        }
        self.0.iter().try_fold(1u128, |acc, &(_, e)| {
            binomial(e as u64 + ell as u64 - 1, ell as u64 - 1)
                .and_then(|c| acc.checked_mul(c))
                .ok_or(Error::Overflow("divisor function"))
        })
    }
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `n!` in `u128`, `None` past 34!.
pub fn factorial(n: u64) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, i| acc.checked_mul(i))
}

pub fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut acc: u128 = 1 % m;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Deterministic trial-division primality, adequate for moduli of Legendre
/// symbols and Fekete polynomials.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Legendre symbol `(n / p)` via Euler's criterion.
pub fn legendre(n: u64, p: u64) -> Result<i8> {
    if p < 3 || !is_prime_u64(p) {
        return Err(Error::NotOddPrime(p));
    }
    let r = pow_mod(n % p, (p - 1) / 2, p);
    Ok(match r {
        0 => 0,
        1 => 1,
        _ => -1,
    })
}

/// `lhs ≤ rhs` for an exact count against a floating bound, with the bound
/// relaxed to `floor(rhs·(1+1e-12))` so rounding never produces a false
/// negative.
pub fn le_real_bound(lhs: u128, rhs: f64) -> bool {
    let relaxed = (rhs * (1.0 + 1e-12)).floor();
    if !relaxed.is_finite() || relaxed >= u128::MAX as f64 {
        return true;
    }
    lhs <= relaxed as u128
}

/// Result of comparing `Σ_{n≤N} τ_ℓ(n)` with `N (2 log N)^{ℓ-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisorSumReport {
    pub n: u64,
    pub ell: u32,
    pub lhs: u128,
    pub rhs: f64,
    pub holds: bool,
}

pub fn divisor_sum_bound(n: u64, ell: u32) -> f64 {
    let n = n as f64;
    n * (2.0 * n.ln()).powi(ell as i32 - 1)
}

pub fn divisor_sum_check(sieve: &FactorSieve, n: u64, ell: u32) -> Result<DivisorSumReport> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "divisor-sum bound needs N ≥ 3, got {n}"
        )));
    }
    if ell == 0 {
        return Err(Error::InvalidArgument("ℓ must be at least 1".into()));
    }
    let mut lhs: u128 = 0;
    for m in 1..=n {
        lhs = lhs
            .checked_add(sieve.tau(m, ell)?)
            .ok_or(Error::Overflow("divisor sum"))?;
    }
    let rhs = divisor_sum_bound(n, ell);
    Ok(DivisorSumReport {
        n,
        ell,
        lhs,
        rhs,
        holds: le_real_bound(lhs, rhs),
    })
}

/// Outcome of one family of pointwise or summatory divisor checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl CheckOutcome {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs the divisor-function validators over `n ≤ n_max` with `j, k, ℓ ≤ max_ell`:
///
/// * `Σ_{n≤N} τ_ℓ(n) ≤ N(2 log N)^{ℓ-1}` for every `3 ≤ N ≤ n_max`;
/// * `τ_j(n) τ_k(n) ≤ τ_{jk}(n)` pointwise;
/// * `τ_k(nm) ≤ τ_k(n) τ_k(m)` for every pair with `nm ≤ n_max`;
/// * `Σ τ_ℓ(n)² ≤ Σ τ_{ℓ²}(n) ≤ N(2 log N)^{ℓ²-1}` for every prefix;
/// * `Σ τ_ℓ(n²) ≤ Σ τ_ℓ(n)²` for every prefix, and `τ_ℓ(n²) ≤ τ_ℓ(n)²` pointwise.
pub fn validate_divisor_bounds(sieve: &FactorSieve, n_max: u64, max_ell: u32) -> Result<Vec<CheckOutcome>> {
    if n_max > sieve.limit() {
        return Err(Error::OutOfRange {
            value: n_max,
            limit: sieve.limit(),
        });
    }
    if max_ell == 0 {
        return Err(Error::InvalidArgument("max ℓ must be at least 1".into()));
    }
    let facts: Vec<Factorization> = (1..=n_max).map(|n| sieve.factorize(n)).collect::<Result<_>>()?;
    let max_tau = max_ell * max_ell;
    // taus[n-1][ℓ-1] = τ_ℓ(n) for ℓ ≤ max_ell²
    let taus: Vec<Vec<u128>> = facts
        .iter()
        .map(|f| (1..=max_tau).map(|l| f.tau(l)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let mut lemma = CheckOutcome::new("divisor sum bound Σ τ_ℓ(n) ≤ N(2 log N)^(ℓ-1)");
    let mut product = CheckOutcome::new("τ_j(n)τ_k(n) ≤ τ_jk(n)");
    let mut submult = CheckOutcome::new("τ_k(nm) ≤ τ_k(n)τ_k(m)");
    let mut squared = CheckOutcome::new("Σ τ_ℓ(n)² ≤ Σ τ_ℓ²(n) ≤ N(2 log N)^(ℓ²-1)");
    let mut of_squares = CheckOutcome::new("Σ τ_ℓ(n²) ≤ Σ τ_ℓ(n)²");

    let overflow = || Error::Overflow("divisor validation");

    for ell in 1..=max_ell {
        let l = ell as usize;
        let (mut s1, mut s_sq, mut s_l2, mut s_of_sq) = (0u128, 0u128, 0u128, 0u128);
        for n in 1..=n_max {
            let idx = (n - 1) as usize;
            let t = taus[idx][l - 1];
            let t_sq = t.checked_mul(t).ok_or_else(overflow)?;
            let t_l2 = taus[idx][l * l - 1];
            let n2 = facts[idx].mul(&facts[idx]);
            let t_of_sq = n2.tau(ell)?;
            s1 = s1.checked_add(t).ok_or_else(overflow)?;
            s_sq = s_sq.checked_add(t_sq).ok_or_else(overflow)?;
            s_l2 = s_l2.checked_add(t_l2).ok_or_else(overflow)?;
            s_of_sq = s_of_sq.checked_add(t_of_sq).ok_or_else(overflow)?;
            of_squares.record(t_of_sq <= t_sq, || {
                format!("n={n}, ℓ={ell}: τ(n²)={t_of_sq} > τ(n)²={t_sq}")
            });
            if n >= 3 {
                let rhs = divisor_sum_bound(n, ell);
                lemma.record(le_real_bound(s1, rhs), || format!("N={n}, ℓ={ell}: {s1} > {rhs}"));
                let rhs2 = divisor_sum_bound(n, ell * ell);
                squared.record(s_sq <= s_l2 && le_real_bound(s_l2, rhs2), || {
                    format!("N={n}, ℓ={ell}: {s_sq}, {s_l2}, {rhs2}")
                });
                of_squares.record(s_of_sq <= s_sq, || format!("N={n}, ℓ={ell}: {s_of_sq} > {s_sq}"));
            }
        }
    }

    for n in 1..=n_max {
        let row = &taus[(n - 1) as usize];
        for j in 1..=max_ell as usize {
            for k in 1..=max_ell as usize {
                let lhs = row[j - 1].checked_mul(row[k - 1]).ok_or_else(overflow)?;
                let rhs = row[j * k - 1];
                product.record(lhs <= rhs, || format!("n={n}, j={j}, k={k}: {lhs} > {rhs}"));
            }
        }
    }

    for n in 1..=n_max {
        for m in 1..=n_max / n {
            let nm = (n * m - 1) as usize;
            let (tn, tm) = (&taus[(n - 1) as usize], &taus[(m - 1) as usize]);
            for k in 1..=max_ell as usize {
                let rhs = tn[k - 1].checked_mul(tm[k - 1]).ok_or_else(overflow)?;
                let lhs = taus[nm][k - 1];
                submult.record(lhs <= rhs, || format!("n={n}, m={m}, k={k}: {lhs} > {rhs}"));
            }
        }
    }

    Ok(vec![lemma, product, submult, squared, of_squares])
}

/// `τ_k(nm) ≤ τ_k(n)τ_k(m)` for arbitrary `n, m` in the sieve range; the
/// product need not be.
pub fn tau_submultiplicative(sieve: &FactorSieve, n: u64, m: u64, k: u32) -> Result<bool> {
    let (fnn, fm) = (sieve.factorize(n)?, sieve.factorize(m)?);
    let lhs = fnn.mul(&fm).tau(k)?;
    let rhs = fnn
        .tau(k)?
        .checked_mul(fm.tau(k)?)
        .ok_or(Error::Overflow("divisor function"))?;
    Ok(lhs <= rhs)
}
