//! Exact counts of the Diophantine systems behind expected moments.
//!
//! For tuples `m ∈ [1,N]^j`, `n ∈ [1,N]^k` with `Σm = Σn`:
//!
//! * [`SystemKind::SquareProduct`] counts `Πm·Πn = □` (the Rademacher
//!   moment system);
//! * [`SystemKind::EqualProduct`] counts `Πm = Πn` (the Steinhaus one).
//!
//! Counting is meet-in-the-middle. Each side is enumerated as sorted tuples
//! weighted by their number of arrangements and bucketed by
//! `(sum, key)`, where the key is the product (equal-product) or the
//! squarefree kernel of the product (square-product: `Πm·Πn` is a square
//! exactly when the two kernels agree). Joining buckets costs
//! `O(#buckets)` instead of `O(N^{j+k})`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{binomial, factorial, FactorSieve};
use crate::error::{Error, Result};
use crate::rmf::RmfKind;
use crate::stats::{self, McEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    /// `m_1⋯m_j n_1⋯n_k = □`.
    SquareProduct,
    /// `m_1⋯m_j = n_1⋯n_k`.
    EqualProduct,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::SquareProduct => "square-product",
            SystemKind::EqualProduct => "equal-product",
        }
    }

    /// The system whose count equals the expected moment for `kind`.
    pub fn for_kind(kind: RmfKind) -> Self {
        match kind {
            RmfKind::Rademacher => SystemKind::SquareProduct,
            RmfKind::Steinhaus => SystemKind::EqualProduct,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square-product" | "square" => Ok(SystemKind::SquareProduct),
            "equal-product" | "equal" => Ok(SystemKind::EqualProduct),
            other => Err(Error::InvalidArgument(format!("unknown system `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountOptions {
    /// Refuse jobs whose one-side enumeration exceeds this many tuples.
    pub enumeration_cap: u128,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            enumeration_cap: 100_000_000,
        }
    }
}

impl CountOptions {
    pub fn unlimited() -> Self {
        Self {
            enumeration_cap: u128::MAX,
        }
    }

    fn check(&self, what: &'static str, needed: u128) -> Result<()> {
        if needed > self.enumeration_cap {
            Err(Error::BudgetExceeded {
                what,
                needed,
                cap: self.enumeration_cap,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionCount {
    pub j: u32,
    pub k: u32,
    pub n: u64,
    pub kind: SystemKind,
    pub sum_constrained: bool,
    pub total: u128,
    pub diagonal: u128,
    pub offdiagonal: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarianceCount {
    pub j: u32,
    pub k: u32,
    pub n: u64,
    pub kind: SystemKind,
    pub value: u128,
}

/// Product or kernel key; `Small` whenever the value fits in `u128`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Small(u128),
    Big(BigUint),
}

impl Key {
    fn canonical(b: BigUint) -> Key {
        if b.bits() <= 128 {
            let digits = b.to_u64_digits();
            let lo = digits.first().copied().unwrap_or(0) as u128;
            let hi = digits.get(1).copied().unwrap_or(0) as u128;
            Key::Small(lo | (hi << 64))
        } else {
            Key::Big(b)
        }
    }

    #[cfg(test)]
    fn to_big(&self) -> BigUint {
        match self {
            Key::Small(v) => BigUint::from(*v),
            Key::Big(b) => b.clone(),
        }
    }

    fn mul(&self, x: u64) -> Key {
        match self {
            Key::Small(v) => match v.checked_mul(x as u128) {
                Some(p) => Key::Small(p),
                None => Key::Big(BigUint::from(*v) * x),
            },
            Key::Big(b) => Key::Big(b * x),
        }
    }

    /// Kernel of a product from the kernels of its factors:
    /// `ker(ab) = (ker a / g)(ker b / g)` with `g = gcd(ker a, ker b)`.
    fn kernel_mul(&self, kx: u64) -> Key {
        match self {
            Key::Small(v) => {
                let g = gcd128(*v, kx as u128);
                let (a, b) = (v / g, kx as u128 / g);
                match a.checked_mul(b) {
                    Some(p) => Key::Small(p),
                    None => Key::Big(BigUint::from(a) * b),
                }
            }
            Key::Big(big) => {
                let kb = BigUint::from(kx);
                let g = big.gcd(&kb);
                Key::canonical((big / &g) * (kb / g))
            }
        }
    }
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn overflow() -> Error {
    Error::Overflow("solution count")
}

/// Number of nondecreasing `r`-tuples from `[1, n]`.
fn sorted_tuple_count(n: u64, r: u32) -> u128 {
    binomial(n + r as u64 - 1, r as u64).unwrap_or(u128::MAX)
}

/// Depth-first walk over nondecreasing tuples starting with `first`,
/// reporting `(tuple, arrangement weight)` at each leaf.
fn walk_sorted<F: FnMut(&[u64], u128)>(n: u64, r: usize, first: u64, visit: &mut F) {
    let fact_r = factorial(r as u64).expect("tuple length at most 30");
    let mut tuple = vec![0u64; r];
    tuple[0] = first;
    fn rec<F: FnMut(&[u64], u128)>(
        tuple: &mut Vec<u64>,
        pos: usize,
        run: u128,
        denom: u128,
        n: u64,
        fact_r: u128,
        visit: &mut F,
    ) {
        if pos == tuple.len() {
            visit(tuple, fact_r / denom);
            return;
        }
        let prev = tuple[pos - 1];
        for v in prev..=n {
            tuple[pos] = v;
            if v == prev {
                rec(tuple, pos + 1, run + 1, denom * (run + 1), n, fact_r, visit);
            } else {
                rec(tuple, pos + 1, 1, denom, n, fact_r, visit);
            }
        }
    }
    rec(&mut tuple, 1, 1, 1, n, fact_r, visit);
}

fn check_arity(j: u32, k: u32) -> Result<()> {
    if j == 0 || k == 0 || j > 30 || k > 30 {
        return Err(Error::InvalidArgument(format!(
            "tuple lengths must lie in [1, 30], got ({j}, {k})"
        )));
    }
    Ok(())
}

type Buckets = HashMap<(u64, Key), u128>;

/// One side of the join: weighted sorted `r`-tuples keyed by
/// `(sum or 0, product key)`.
fn side_buckets(kind: SystemKind, r: u32, n: u64, constrained: bool, kernels: &[u64]) -> Result<Buckets> {
    let parts: Vec<Result<Buckets>> = (1..=n)
        .into_par_iter()
        .map(|first| {
            let mut map: Buckets = HashMap::new();
            let mut err = None;
            walk_sorted(n, r as usize, first, &mut |t, w| {
                let mut key = Key::Small(1);
                for &v in t {
                    key = match kind {
                        SystemKind::EqualProduct => key.mul(v),
                        SystemKind::SquareProduct => key.kernel_mul(kernels[v as usize]),
                    };
                }
                let sum = if constrained { t.iter().sum() } else { 0 };
                let slot = map.entry((sum, key)).or_insert(0);
                match slot.checked_add(w) {
                    Some(s) => *slot = s,
                    None => err = Some(overflow()),
                }
            });
            err.map_or(Ok(map), Err)
        })
        .collect();
    let mut merged: Buckets = HashMap::new();
    for part in parts {
        for (key, w) in part? {
            let slot = merged.entry(key).or_insert(0);
            *slot = slot.checked_add(w).ok_or_else(overflow)?;
        }
    }
    Ok(merged)
}

fn kernel_table(n: u64) -> Result<Vec<u64>> {
    let sieve = FactorSieve::new(n)?;
    let mut out = vec![0u64; n as usize + 1];
    for v in 1..=n {
        out[v as usize] = sieve.squarefree_kernel(v)?;
    }
    Ok(out)
}

/// `𝒟_{j,k}(N)`: pairs of tuples equal as multisets,
/// `Σ_{multisets} (arrangements)²`; zero when `j ≠ k`.
pub fn count_diagonal(j: u32, k: u32, n: u64, opts: &CountOptions) -> Result<u128> {
    check_arity(j, k)?;
    if n == 0 {
        return Err(Error::InvalidLimit(0));
    }
    if j != k {
        return Ok(0);
    }
    opts.check("diagonal multiset enumeration", sorted_tuple_count(n, k))?;
    let parts: Vec<Result<u128>> = (1..=n)
        .into_par_iter()
        .map(|first| {
            let mut acc: Option<u128> = Some(0);
            walk_sorted(n, k as usize, first, &mut |_, w| {
                acc = acc.and_then(|a| w.checked_mul(w).and_then(|s| a.checked_add(s)));
            });
            acc.ok_or_else(overflow)
        })
        .collect();
    parts
        .into_iter()
        .try_fold(0u128, |a, p| a.checked_add(p?).ok_or_else(overflow))
}

/// Exact `𝒩_{j,k}(N)` for the chosen system, with its diagonal and
/// off-diagonal parts.
pub fn count_system(
    kind: SystemKind,
    j: u32,
    k: u32,
    n: u64,
    sum_constrained: bool,
    opts: &CountOptions,
) -> Result<SolutionCount> {
    check_arity(j, k)?;
    if n == 0 {
        return Err(Error::InvalidLimit(0));
    }
    opts.check("meet-in-the-middle side", sorted_tuple_count(n, j.max(k)))?;
    let kernels = kernel_table(n)?;
    let left = side_buckets(kind, j, n, sum_constrained, &kernels)?;
    let total = if j == k {
        left.values()
            .try_fold(0u128, |a, &w| w.checked_mul(w).and_then(|s| a.checked_add(s)))
            .ok_or_else(overflow)?
    } else {
        let right = side_buckets(kind, k, n, sum_constrained, &kernels)?;
        let (small, large) = if left.len() <= right.len() {
            (&left, &right)
        } else {
            (&right, &left)
        };
        small
            .iter()
            .try_fold(0u128, |a, (key, &w)| {
                let other = large.get(key).copied().unwrap_or(0);
                w.checked_mul(other).and_then(|s| a.checked_add(s))
            })
            .ok_or_else(overflow)?
    };
    let diagonal = count_diagonal(j, k, n, opts)?;
    let offdiagonal = total
        .checked_sub(diagonal)
        .ok_or_else(|| Error::InvalidArgument(format!("diagonal {diagonal} exceeds total {total}")))?;
    Ok(SolutionCount {
        j,
        k,
        n,
        kind,
        sum_constrained,
        total,
        diagonal,
        offdiagonal,
    })
}

struct SideTuple {
    weight: u128,
    product: u128,
    kernel: u128,
}

fn tuples_by_sum(r: u32, n: u64, kernels: &[u64]) -> Result<Vec<Vec<SideTuple>>> {
    let mut by_sum: Vec<Vec<SideTuple>> = (0..=(r as u64 * n)).map(|_| Vec::new()).collect();
    let mut err = None;
    for first in 1..=n {
        walk_sorted(n, r as usize, first, &mut |t, w| {
            let mut product: Option<u128> = Some(1);
            let mut kernel = Key::Small(1);
            for &v in t {
                product = product.and_then(|p| p.checked_mul(v as u128));
                kernel = kernel.kernel_mul(kernels[v as usize]);
            }
            match (product, kernel) {
                (Some(product), Key::Small(kernel)) => by_sum[t.iter().sum::<u64>() as usize].push(SideTuple {
                    weight: w,
                    product,
                    kernel,
                }),
                _ => err = Some(overflow()),
            }
        });
    }
    err.map_or(Ok(by_sum), Err)
}

/// `𝒱_{j,k}(N)`: quadruples `(m, n, m', n')` with `Σm = Σn`, `Σm' = Σn'`,
/// each pair off the product relation, and the joint relation holding
/// (`ΠmΠm' = ΠnΠn'` for equal-product, `ΠmΠnΠm'Πn' = □` for square-product).
pub fn count_variance_system(kind: SystemKind, j: u32, k: u32, n: u64, opts: &CountOptions) -> Result<VarianceCount> {
    check_arity(j, k)?;
    if n == 0 {
        return Err(Error::InvalidLimit(0));
    }
    opts.check("variance side", sorted_tuple_count(n, j.max(k)))?;
    let kernels = kernel_table(n)?;
    let ms = tuples_by_sum(j, n, &kernels)?;
    let ns = if j == k {
        None
    } else {
        Some(tuples_by_sum(k, n, &kernels)?)
    };
    let ns = ns.as_ref().unwrap_or(&ms);
    let pairs: u128 = ms.iter().zip(ns).map(|(a, b)| a.len() as u128 * b.len() as u128).sum();
    opts.check("variance pair enumeration", pairs)?;

    let value = match kind {
        SystemKind::EqualProduct => {
            // Bucket each pair by the reduced ratio Πm/Πn = a/b; the joint
            // relation pairs ratio a/b with ratio b/a.
            let mut ratios: HashMap<(u128, u128), u128> = HashMap::new();
            for (a_side, b_side) in ms.iter().zip(ns) {
                for x in a_side {
                    for y in b_side {
                        if x.product == y.product {
                            continue;
                        }
                        let g = gcd128(x.product, y.product);
                        let w = x.weight.checked_mul(y.weight).ok_or_else(overflow)?;
                        let slot = ratios.entry((x.product / g, y.product / g)).or_insert(0);
                        *slot = slot.checked_add(w).ok_or_else(overflow)?;
                    }
                }
            }
            ratios.iter().try_fold(0u128, |acc, (&(a, b), &w)| {
                let other = ratios.get(&(b, a)).copied().unwrap_or(0);
                w.checked_mul(other)
                    .and_then(|s| acc.checked_add(s))
                    .ok_or_else(overflow)
            })?
        }
        SystemKind::SquareProduct => {
            let mut classes: HashMap<u128, u128> = HashMap::new();
            for (a_side, b_side) in ms.iter().zip(ns) {
                for x in a_side {
                    for y in b_side {
                        let g = gcd128(x.kernel, y.kernel);
                        let key = (x.kernel / g).checked_mul(y.kernel / g).ok_or_else(overflow)?;
                        if key == 1 {
                            continue;
                        }
                        let w = x.weight.checked_mul(y.weight).ok_or_else(overflow)?;
                        let slot = classes.entry(key).or_insert(0);
                        *slot = slot.checked_add(w).ok_or_else(overflow)?;
                    }
                }
            }
            classes
                .values()
                .try_fold(0u128, |acc, &w| w.checked_mul(w).and_then(|s| acc.checked_add(s)))
                .ok_or_else(overflow)?
        }
    };
    Ok(VarianceCount { j, k, n, kind, value })
}

/// Closed integer interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    pub fn new(lo: u64, hi: u64) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> u64 {
        if self.lo > self.hi {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn half_buckets(intervals: &[Interval], kernels: &[u64], constrained: bool) -> HashMap<(u64, Key), u128> {
    let mut map: HashMap<(u64, Key), u128> = HashMap::new();
    fn rec(
        intervals: &[Interval],
        kernels: &[u64],
        constrained: bool,
        sum: u64,
        key: Key,
        map: &mut HashMap<(u64, Key), u128>,
    ) {
        match intervals.split_first() {
            None => *map.entry((if constrained { sum } else { 0 }, key)).or_insert(0) += 1,
            Some((iv, rest)) => {
                for v in iv.lo..=iv.hi {
                    rec(
                        rest,
                        kernels,
                        constrained,
                        sum + v,
                        key.kernel_mul(kernels[v as usize]),
                        map,
                    );
                }
            }
        }
    }
    rec(intervals, kernels, constrained, 0, Key::Small(1), &mut map);
    map
}

/// Tuples `ν_r ∈ I_r` with `Π ν_r = □`; with `with_sum_constraint` the
/// tuple length must be even and the first half must sum to the second.
pub fn count_short_interval_square(
    intervals: &[Interval],
    with_sum_constraint: bool,
    opts: &CountOptions,
) -> Result<u128> {
    if intervals.is_empty() {
        return Err(Error::InvalidArgument("need at least one interval".into()));
    }
    if intervals.iter().any(|iv| iv.lo == 0 && !iv.is_empty()) {
        return Err(Error::InvalidArgument("intervals must lie in [1, ∞)".into()));
    }
    if with_sum_constraint && intervals.len() % 2 == 1 {
        return Err(Error::InvalidArgument(
            "sum constraint needs an even number of intervals".into(),
        ));
    }
    if intervals.iter().any(Interval::is_empty) {
        return Ok(0);
    }
    let budget = intervals
        .iter()
        .try_fold(1u128, |acc, iv| acc.checked_mul(iv.len() as u128 + 1))
        .unwrap_or(u128::MAX);
    opts.check("short-interval enumeration", budget)?;
    let max = intervals.iter().map(|iv| iv.hi).max().expect("nonempty");
    let kernels = kernel_table(max)?;
    let mid = intervals.len() / 2;
    let (first, second) = intervals.split_at(mid);
    let right = half_buckets(second, &kernels, with_sum_constraint);
    if first.is_empty() {
        return Ok(right.get(&(0, Key::Small(1))).copied().unwrap_or(0));
    }
    let left = half_buckets(first, &kernels, with_sum_constraint);
    left.iter()
        .try_fold(0u128, |acc, (key, &w)| {
            let other = right.get(key).copied().unwrap_or(0);
            w.checked_mul(other).and_then(|s| acc.checked_add(s))
        })
        .ok_or_else(overflow)
}

/// `count / (N^ε Π(|I_r|^{1/2} + 1))`, the normalized size of a short
/// interval count. The comparison bound carries an unspecified constant,
/// so this is reported rather than checked.
pub fn short_interval_ratio(count: u128, intervals: &[Interval], n: u64, eps: f64) -> f64 {
    let denom = (n as f64).powf(eps)
        * intervals
            .iter()
            .map(|iv| (iv.len() as f64).sqrt() + 1.0)
            .product::<f64>();
    count as f64 / denom
}

/// Compares `N^{(j+k)/2}·E 𝔪^{(j,k)}` estimated by Monte Carlo with the
/// exact count of the matching system.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub kind: RmfKind,
    pub count: SolutionCount,
    /// `𝒩 / N^{(j+k)/2}`, the predicted mean moment.
    pub predicted_mean: f64,
    pub estimate: McEstimate,
    pub z_re: f64,
    pub z_im: f64,
    pub sigmas: f64,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn expectation_identity_check(
    kind: RmfKind,
    j: u32,
    k: u32,
    n: u64,
    num_samples: u64,
    seed: u64,
    sigmas: f64,
    opts: &CountOptions,
) -> Result<IdentityReport> {
    let count = count_system(SystemKind::for_kind(kind), j, k, n, true, opts)?;
    let predicted_mean = count.total as f64 / (n as f64).powf((j + k) as f64 / 2.0);
    let estimate = stats::mc_moments(kind, n, j, k, num_samples, seed)?;
    let floor = 1e-9 * predicted_mean.abs().max(1.0);
    let dre = estimate.mean.re - predicted_mean;
    let dim = estimate.mean.im;
    // differences below the rounding floor are reported as z = 0: for
    // deterministic moments the standard error is itself rounding noise
    let z = |d: f64, se: f64| {
        if d.abs() <= floor {
            0.0
        } else if se > 0.0 {
            d / se
        } else {
            f64::INFINITY
        }
    };
    let pass =
        dre.abs() <= sigmas * estimate.std_error_re + floor && dim.abs() <= sigmas * estimate.std_error_im + floor;
    Ok(IdentityReport {
        kind,
        z_re: z(dre, estimate.std_error_re),
        z_im: z(dim, estimate.std_error_im),
        count,
        predicted_mean,
        estimate,
        sigmas,
        pass,
    })
}
