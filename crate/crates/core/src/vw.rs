//! Constructive Vaughan–Wooley factorizations.
//!
//! * [`triangular_factorize`]: integers `ν_1..ν_ℓ` whose product is a
//!   square become an upper-triangular array `b` with `b_rr² = sq(ν_r)` and
//!   `ν_r = (b_1r⋯b_rr)(b_rr⋯b_rℓ)`.
//! * [`rectangular_factorize`]: tuples `m`, `n` with equal products become a
//!   `j × k` array whose row products are `m` and column products are `n`.
//!
//! Neither array is unique. The triangular routine always merges the
//! lexicographically first pair of residual kernels sharing a factor, with
//! the full gcd; the rectangular routine uses the northwest-corner rule one
//! prime at a time. Both outputs are deterministic.

use std::collections::BTreeMap;
use std::fmt;

use crate::arith::{factorize_trial, Factorization};
use crate::error::{Error, Result};

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn isqrt(n: u128) -> u64 {
    let mut r = (n as f64).sqrt() as u128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r as u64
}

/// Upper-triangular array `b_rs`, `0 ≤ r ≤ s < ℓ`, of positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangularArray {
    ell: usize,
    /// Row-major upper triangle: row r holds columns r..ℓ.
    entries: Vec<u64>,
}

impl TriangularArray {
    /// All entries 1.
    pub fn ones(ell: usize) -> Self {
        Self {
            ell,
            entries: vec![1; ell * (ell + 1) / 2],
        }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    fn index(&self, r: usize, s: usize) -> usize {
        assert!(r <= s && s < self.ell, "({r},{s}) outside the upper triangle");
        r * self.ell - r * (r + 1) / 2 + s
    }

    /// Entry `b_rs` (0-based, `r ≤ s`).
    pub fn get(&self, r: usize, s: usize) -> u64 {
        self.entries[self.index(r, s)]
    }

    pub fn set(&mut self, r: usize, s: usize, v: u64) {
        assert!(v >= 1, "entries are positive");
        let i = self.index(r, s);
        self.entries[i] = v;
    }

    /// `b_r^* = (b_0r⋯b_rr)(b_rr⋯b_r,ℓ-1)`: column `r` down to the diagonal
    /// times row `r` from the diagonal, so `b_rr` appears twice.
    pub fn b_star(&self, r: usize) -> Option<u128> {
        let col = (0..=r).try_fold(1u128, |acc, q| acc.checked_mul(self.get(q, r) as u128))?;
        let row = (r..self.ell).try_fold(1u128, |acc, s| acc.checked_mul(self.get(r, s) as u128))?;
        col.checked_mul(row)
    }
}

impl fmt::Display for TriangularArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.ell {
            let row: Vec<String> = (0..self.ell)
                .map(|s| {
                    if s < r {
                        ".".to_string()
                    } else {
                        self.get(r, s).to_string()
                    }
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Factorizes `ν` into a triangular array. Fails with [`Error::NotSquare`]
/// (carrying the squarefree kernel of `Πν`) when the product is not a square.
pub fn triangular_factorize(nu: &[u64]) -> Result<TriangularArray> {
    let facts: Vec<Factorization> = nu.iter().map(|&v| factorize_trial(v)).collect::<Result<_>>()?;
    triangular_from_factorizations(&facts)
}

pub fn triangular_from_factorizations(facts: &[Factorization]) -> Result<TriangularArray> {
    let ell = facts.len();
    if ell == 0 {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    let mut arr = TriangularArray::ones(ell);
    let mut kernels: Vec<u64> = Vec::with_capacity(ell);
    for (r, f) in facts.iter().enumerate() {
        arr.set(r, r, isqrt(f.sq()));
        kernels.push(f.kernel() as u64);
    }
    loop {
        let pair = (0..ell)
            .flat_map(|u| (u + 1..ell).map(move |v| (u, v)))
            .find_map(|(u, v)| {
                let c = gcd(kernels[u], kernels[v]);
                (c > 1).then_some((u, v, c))
            });
        let Some((u, v, c)) = pair else { break };
        debug_assert_eq!(gcd(c, kernels[u] / c), 1, "kernel residuals stay squarefree");
        kernels[u] /= c;
        kernels[v] /= c;
        let cur = arr.get(u, v);
        arr.set(u, v, cur.checked_mul(c).ok_or(Error::Overflow("triangular entry"))?);
    }
    if kernels.iter().any(|&k| k > 1) {
        // Residual kernels are pairwise coprime, so their product is the
        // squarefree kernel of Πν.
        let kernel = kernels
            .iter()
            .try_fold(1u128, |acc, &k| acc.checked_mul(k as u128))
            .map_or_else(|| "overflow".to_string(), |k| k.to_string());
        return Err(Error::NotSquare { kernel });
    }
    Ok(arr)
}

/// `j × k` array of positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectArray {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl RectArray {
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![1; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, s: usize) -> u64 {
        self.entries[r * self.cols + s]
    }

    pub fn set(&mut self, r: usize, s: usize, v: u64) {
        assert!(v >= 1, "entries are positive");
        self.entries[r * self.cols + s] = v;
    }

    pub fn row_product(&self, r: usize) -> Option<u128> {
        (0..self.cols).try_fold(1u128, |acc, s| acc.checked_mul(self.get(r, s) as u128))
    }

    pub fn col_product(&self, s: usize) -> Option<u128> {
        (0..self.rows).try_fold(1u128, |acc, r| acc.checked_mul(self.get(r, s) as u128))
    }
}

impl fmt::Display for RectArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|s| self.get(r, s).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn exponents(facts: &[Factorization]) -> BTreeMap<u64, Vec<u32>> {
    let mut map: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    for (i, f) in facts.iter().enumerate() {
        for &(p, e) in f.pairs() {
            map.entry(p).or_insert_with(|| vec![0; facts.len()])[i] = e;
        }
    }
    map
}

/// Factorizes `m` (rows) against `n` (columns). Fails with
/// [`Error::UnequalProducts`] unless `Πm = Πn`.
pub fn rectangular_factorize(m: &[u64], n: &[u64]) -> Result<RectArray> {
    if m.is_empty() || n.is_empty() {
        return Err(Error::InvalidArgument("both tuples must be nonempty".into()));
    }
    let fm: Vec<Factorization> = m.iter().map(|&v| factorize_trial(v)).collect::<Result<_>>()?;
    let fnn: Vec<Factorization> = n.iter().map(|&v| factorize_trial(v)).collect::<Result<_>>()?;
    let (rows, cols) = (exponents(&fm), exponents(&fnn));
    if rows.keys().ne(cols.keys()) {
        return Err(Error::UnequalProducts);
    }
    let mut arr = RectArray::ones(m.len(), n.len());
    for (p, row_demand) in &rows {
        let col_demand = &cols[p];
        if row_demand.iter().sum::<u32>() != col_demand.iter().sum::<u32>() {
            return Err(Error::UnequalProducts);
        }
        // northwest corner: exhaust row r and column s greedily
        let (mut rd, mut cd) = (row_demand.clone(), col_demand.clone());
        let (mut r, mut s) = (0, 0);
        while r < rd.len() && s < cd.len() {
            let x = rd[r].min(cd[s]);
            if x > 0 {
                let pe = p.checked_pow(x).ok_or(Error::Overflow("rectangular entry"))?;
                let v = arr
                    .get(r, s)
                    .checked_mul(pe)
                    .ok_or(Error::Overflow("rectangular entry"))?;
                arr.set(r, s, v);
            }
            rd[r] -= x;
            cd[s] -= x;
            if rd[r] == 0 {
                r += 1;
            } else {
                s += 1;
            }
        }
    }
    Ok(arr)
}
