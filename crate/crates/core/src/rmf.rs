//! Random multiplicative functions and deterministic comparison sequences.
//!
//! A sample draws `X(p)` independently at every prime `p ≤ N` and extends it
//! completely multiplicatively, `X(n) = X(spf(n)) · X(n / spf(n))`, in one
//! pass over `2..=N`. Composite values are never drawn.
//!
//! Randomness comes from ChaCha8 keyed by the master seed, with the trial
//! index selecting the stream. Primes consume draws in increasing order, so
//! the value at the `i`-th prime is a pure function of `(seed, trial, i)`,
//! and a sample of length `N` is a prefix of any longer sample drawn with the
//! same seed spec.
//!
//! # Sample tables
//!
//! Text form, one header line followed by one row per `n`:
//!
//! ```text
//! # rmfkit-sample kind=steinhaus limit=3
//! 1    1    0
//! 2    -0.4161468365471424    0.9092974268256817
//! 3    ...
//! ```
//!
//! Columns are `n`, `Re X(n)`, `Im X(n)`, tab separated; floats are written
//! in shortest round-trip form. Binary form, all integers little endian:
//!
//! | offset | size | field                                  |
//! |-------:|-----:|----------------------------------------|
//! | 0      | 4    | magic `RMFS`                           |
//! | 4      | 1    | version (1)                            |
//! | 5      | 1    | kind: 0 Rademacher, 1 Steinhaus        |
//! | 6      | 2    | reserved, zero                         |
//! | 8      | 8    | limit `N` (u64)                        |
//! | 16     | 16·N | `Re X(n)`, `Im X(n)` as f64, n = 1..=N |
//!
//! Both decoders re-validate the sample: unit modulus, `X(1) = 1`, real `±1`
//! values for Rademacher, and complete multiplicativity.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{legendre, FactorSieve};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RmfKind {
    /// `X(p) = ±1` with probability 1/2 each.
    Rademacher,
    /// `X(p)` uniform on the unit circle.
    Steinhaus,
}

impl RmfKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RmfKind::Rademacher => "rademacher",
            RmfKind::Steinhaus => "steinhaus",
        }
    }
}

impl fmt::Display for RmfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RmfKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rademacher" => Ok(RmfKind::Rademacher),
            "steinhaus" => Ok(RmfKind::Steinhaus),
            other => Err(Error::InvalidArgument(format!("unknown kind `{other}`"))),
        }
    }
}

/// Master seed plus trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub trial: u64,
}

impl SeedSpec {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self { seed, trial }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.trial);
        rng
    }
}

/// Values `X(1..=N)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    /// Exact `±1` values (Rademacher).
    Signs(Vec<i8>),
    /// Unit-modulus complex values (Steinhaus).
    Unit(Vec<Complex64>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Signs(v) => v.len(),
            Values::Unit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `X(n)` for `1 ≤ n ≤ len`.
    pub fn get(&self, n: usize) -> Complex64 {
        match self {
            Values::Signs(v) => Complex64::new(v[n - 1] as f64, 0.0),
            Values::Unit(v) => v[n - 1],
        }
    }
}

/// One realization of a random multiplicative function on `[1, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmfSample {
    kind: RmfKind,
    limit: u64,
    prime_values: Vec<(u64, Complex64)>,
    values: Values,
}

impl RmfSample {
    pub fn kind(&self) -> RmfKind {
        self.kind
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    /// `(p, X(p))` for every prime `p ≤ N`, increasing in `p`.
    pub fn prime_values(&self) -> &[(u64, Complex64)] {
        &self.prime_values
    }

    pub fn prime_value(&self, p: u64) -> Option<Complex64> {
        self.prime_values
            .binary_search_by_key(&p, |&(q, _)| q)
            .ok()
            .map(|i| self.prime_values[i].1)
    }

    pub fn value(&self, n: u64) -> Option<Complex64> {
        (n >= 1 && n <= self.limit).then(|| self.values.get(n as usize))
    }

    /// Checks every structural invariant: `X(1) = 1`, unit modulus, real
    /// `±1` for Rademacher, `X(n) = X(spf(n))·X(n/spf(n))` for all `n`.
    pub fn check_invariants(&self, sieve: &FactorSieve, tol: f64) -> Result<()> {
        let n = self.limit as usize;
        if self.values.len() != n || sieve.limit() < self.limit {
            return Err(Error::Malformed("value table length mismatch".into()));
        }
        if (self.values.get(1) - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::Malformed("X(1) ≠ 1".into()));
        }
        for m in 1..=n {
            let x = self.values.get(m);
            if !x.re.is_finite() || !x.im.is_finite() || (x.norm() - 1.0).abs() > tol {
                return Err(Error::Malformed(format!("|X({m})| ≠ 1")));
            }
            if m >= 2 {
                let p = sieve.spf_unchecked(m);
                let expect = self.values.get(p) * self.values.get(m / p);
                if (x - expect).norm() > tol {
                    return Err(Error::Malformed(format!("X({m}) ≠ X({p})·X({})", m / p)));
                }
            }
        }
        Ok(())
    }
}

/// Draws a sample using a caller-supplied sieve covering `[1, N]`.
pub fn sample_rmf_with(sieve: &FactorSieve, kind: RmfKind, n: u64, seed: SeedSpec) -> Result<RmfSample> {
    if n == 0 {
        return Err(Error::InvalidLimit(0));
    }
    if sieve.limit() < n {
        return Err(Error::OutOfRange {
            value: n,
            limit: sieve.limit(),
        });
    }
    let len = n as usize;
    let mut rng = seed.rng();
    let mut prime_values = Vec::new();
    let values = match kind {
        RmfKind::Rademacher => {
            let mut v = vec![0i8; len];
            v[0] = 1;
            for m in 2..=len {
                let p = sieve.spf_unchecked(m);
                if p == m {
                    let s: i8 = if rng.random::<bool>() { 1 } else { -1 };
                    v[m - 1] = s;
                    prime_values.push((m as u64, Complex64::new(s as f64, 0.0)));
                } else {
                    v[m - 1] = v[p - 1] * v[m / p - 1];
                }
            }
            Values::Signs(v)
        }
        RmfKind::Steinhaus => {
            // Phases in [0,1) add modulo 1; evaluating e(phase) at the end
            // keeps every |X(n)| = 1 to machine precision.
            let mut phase = vec![0f64; len];
            for m in 2..=len {
                let p = sieve.spf_unchecked(m);
                if p == m {
                    phase[m - 1] = rng.random::<f64>();
                } else {
                    let t = phase[p - 1] + phase[m / p - 1];
                    phase[m - 1] = if t >= 1.0 { t - 1.0 } else { t };
                }
            }
            let v: Vec<Complex64> = phase.iter().map(|&u| unit(u)).collect();
            for m in 2..=len {
                if sieve.spf_unchecked(m) == m {
                    prime_values.push((m as u64, v[m - 1]));
                }
            }
            Values::Unit(v)
        }
    };
    Ok(RmfSample {
        kind,
        limit: n,
        prime_values,
        values,
    })
}

pub fn sample_rmf(kind: RmfKind, n: u64, seed: SeedSpec) -> Result<RmfSample> {
    let sieve = FactorSieve::new(n.max(1))?;
    sample_rmf_with(&sieve, kind, n, seed)
}

/// `e(u) = exp(2πiu)`.
pub fn unit(u: f64) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * u).sin_cos();
    Complex64::new(c, s)
}

/// Tests `X(mn) = X(m)X(n)` on `trials` random pairs with `mn ≤ N`
/// (exactly for Rademacher, to 1e-12 otherwise).
pub fn verify_multiplicativity(sample: &RmfSample, trials: u64) -> bool {
    let n = sample.limit;
    if n < 2 {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d75_6c74_6970_6c79);
    for _ in 0..trials {
        let a = rng.random_range(1..=n);
        let b = rng.random_range(1..=n / a);
        let ok = match &sample.values {
            Values::Signs(v) => v[(a * b - 1) as usize] == v[(a - 1) as usize] * v[(b - 1) as usize],
            Values::Unit(v) => (v[(a * b - 1) as usize] - v[(a - 1) as usize] * v[(b - 1) as usize]).norm() <= 1e-12,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Legendre symbols `(n/p)` for `n = 1..p-1`.
pub fn fekete_coeffs(p: u64) -> Result<Vec<i8>> {
    (1..p)
        .map(|n| legendre(n, p))
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::NotOddPrime(p))
            } else {
                Ok(v)
            }
        })
}

/// Liouville values `λ(n)` for `n = 1..=N`.
pub fn liouville_coeffs(n: u64) -> Result<Vec<i8>> {
    let sieve = FactorSieve::new(n)?;
    (1..=n).map(|m| sieve.liouville(m)).collect()
}

const MAGIC: &[u8; 4] = b"RMFS";
const VERSION: u8 = 1;
const VALIDATION_TOL: f64 = 1e-9;
/// Largest limit the decoders accept.
pub const MAX_DECODE_LIMIT: u64 = 1 << 28;

pub fn encode_binary(sample: &RmfSample) -> Vec<u8> {
    let n = sample.limit as usize;
    let mut out = Vec::with_capacity(16 + 16 * n);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(match sample.kind {
        RmfKind::Rademacher => 0,
        RmfKind::Steinhaus => 1,
    });
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&sample.limit.to_le_bytes());
    for m in 1..=n {
        let x = sample.values.get(m);
        out.extend_from_slice(&x.re.to_le_bytes());
        out.extend_from_slice(&x.im.to_le_bytes());
    }
    out
}

pub fn encode_text(sample: &RmfSample) -> String {
    use std::fmt::Write;
    let mut out = format!("# rmfkit-sample kind={} limit={}\n", sample.kind, sample.limit);
    for m in 1..=sample.limit as usize {
        let x = sample.values.get(m);
        let _ = writeln!(out, "{m}\t{}\t{}", x.re, x.im);
    }
    out
}

fn from_table(kind: RmfKind, values: Vec<Complex64>) -> Result<RmfSample> {
    let limit = values.len() as u64;
    if limit == 0 {
        return Err(Error::Malformed("empty sample".into()));
    }
    let sieve = FactorSieve::new(limit)?;
    let values = match kind {
        RmfKind::Rademacher => Values::Signs(
            values
                .iter()
                .enumerate()
                .map(|(i, x)| match (x.re, x.im) {
                    (r, i0) if r == 1.0 && i0 == 0.0 => Ok(1i8),
                    (r, i0) if r == -1.0 && i0 == 0.0 => Ok(-1i8),
                    _ => Err(Error::Malformed(format!("X({}) is not ±1", i + 1))),
                })
                .collect::<Result<_>>()?,
        ),
        RmfKind::Steinhaus => Values::Unit(values),
    };
    let prime_values = sieve.primes().map(|p| (p, values.get(p as usize))).collect();
    let sample = RmfSample {
        kind,
        limit,
        prime_values,
        values,
    };
    sample.check_invariants(&sieve, VALIDATION_TOL)?;
    Ok(sample)
}

pub fn decode_binary(bytes: &[u8]) -> Result<RmfSample> {
    if bytes.len() < 16 {
        return Err(Error::Malformed("truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Malformed("bad magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Malformed(format!("unsupported version {}", bytes[4])));
    }
    let kind = match bytes[5] {
        0 => RmfKind::Rademacher,
        1 => RmfKind::Steinhaus,
        k => return Err(Error::Malformed(format!("unknown kind byte {k}"))),
    };
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(Error::Malformed("reserved bytes not zero".into()));
    }
    let limit = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if limit == 0 || limit > MAX_DECODE_LIMIT {
        return Err(Error::Malformed(format!("limit {limit} out of range")));
    }
    let body = &bytes[16..];
    if body.len() as u64 != 16 * limit {
        return Err(Error::Malformed(format!(
            "expected {} payload bytes, found {}",
            16 * limit,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[0..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..16].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    from_table(kind, values)
}

pub fn decode_text(text: &str) -> Result<RmfSample> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Malformed("missing header".into()))?;
    let rest = header
        .strip_prefix("# rmfkit-sample")
        .ok_or_else(|| Error::Malformed("missing `# rmfkit-sample` header".into()))?;
    let (mut kind, mut limit) = (None, None);
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("kind", v)) => kind = Some(v.parse::<RmfKind>()?),
            Some(("limit", v)) => limit = Some(v.parse::<u64>().map_err(|e| Error::Malformed(format!("limit: {e}")))?),
            _ => return Err(Error::Malformed(format!("unknown header field `{field}`"))),
        }
    }
    let kind = kind.ok_or_else(|| Error::Malformed("header lacks kind".into()))?;
    let limit = limit.ok_or_else(|| Error::Malformed("header lacks limit".into()))?;
    if limit == 0 || limit > MAX_DECODE_LIMIT {
        return Err(Error::Malformed(format!("limit {limit} out of range")));
    }
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Malformed(format!("row {}: expected 3 columns", i + 1)));
        }
        let n: u64 = cols[0]
            .trim()
            .parse()
            .map_err(|e| Error::Malformed(format!("row {}: {e}", i + 1)))?;
        if n != i as u64 + 1 {
            return Err(Error::Malformed(format!("row {}: index {n} out of order", i + 1)));
        }
        if n > limit {
            return Err(Error::Malformed(format!("row {n} beyond limit {limit}")));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Malformed(format!("row {n}: {e}")))
        };
        values.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    if values.len() as u64 != limit {
        return Err(Error::Malformed(format!(
            "header says {limit} rows, found {}",
            values.len()
        )));
    }
    from_table(kind, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_one_is_identity() {
        for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
            let s = sample_rmf(kind, 1, SeedSpec::new(3, 0)).unwrap();
            assert_eq!(s.values().len(), 1);
            assert_eq!(s.value(1), Some(Complex64::new(1.0, 0.0)));
            assert!(s.prime_values().is_empty());
            assert!(verify_multiplicativity(&s, 10));
        }
        assert!(sample_rmf(RmfKind::Steinhaus, 0, SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn composite_values_forced_by_primes() {
        let sieve = FactorSieve::new(1000).unwrap();
        for trial in 0..20 {
            let s = sample_rmf_with(&sieve, RmfKind::Rademacher, 12, SeedSpec::new(1, trial)).unwrap();
            let (x2, x3) = (s.prime_value(2).unwrap(), s.prime_value(3).unwrap());
            assert_eq!(s.value(12).unwrap(), x2 * x2 * x3);
            assert_eq!(s.value(4).unwrap(), Complex64::new(1.0, 0.0));
            let t = sample_rmf_with(&sieve, RmfKind::Steinhaus, 9, SeedSpec::new(1, trial)).unwrap();
            let x3 = t.prime_value(3).unwrap();
            assert!((t.value(9).unwrap() - x3 * x3).norm() < 1e-14);
        }
    }

    #[test]
    fn rademacher_squares_are_one() {
        let s = sample_rmf(RmfKind::Rademacher, 10_000, SeedSpec::new(9, 4)).unwrap();
        for r in 1..=100u64 {
            assert_eq!(s.value(r * r).unwrap().re, 1.0);
        }
    }

    #[test]
    fn invariants_hold_and_deterministic() {
        let sieve = FactorSieve::new(100_000).unwrap();
        for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
            let a = sample_rmf_with(&sieve, kind, 100_000, SeedSpec::new(42, 7)).unwrap();
            let b = sample_rmf_with(&sieve, kind, 100_000, SeedSpec::new(42, 7)).unwrap();
            assert_eq!(a, b);
            a.check_invariants(&sieve, 1e-12).unwrap();
            assert!(verify_multiplicativity(&a, 10_000));
            let c = sample_rmf_with(&sieve, kind, 100_000, SeedSpec::new(42, 8)).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn shorter_sample_is_prefix() {
        let sieve = FactorSieve::new(500).unwrap();
        let long = sample_rmf_with(&sieve, RmfKind::Steinhaus, 500, SeedSpec::new(5, 2)).unwrap();
        let short = sample_rmf_with(&sieve, RmfKind::Steinhaus, 100, SeedSpec::new(5, 2)).unwrap();
        for n in 1..=100 {
            assert_eq!(long.value(n), short.value(n));
        }
    }

    #[test]
    fn broken_sample_fails_multiplicativity() {
        let mut s = sample_rmf(RmfKind::Rademacher, 64, SeedSpec::new(0, 0)).unwrap();
        if let Values::Signs(v) = &mut s.values {
            v[5] = -v[5];
        }
        let sieve = FactorSieve::new(64).unwrap();
        assert!(s.check_invariants(&sieve, 1e-12).is_err());
    }

    #[test]
    fn prime_values_are_unbiased() {
        let sieve = FactorSieve::new(7).unwrap();
        let trials = 10_000;
        for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
            let (mut sr, mut si) = (0.0, 0.0);
            for t in 0..trials {
                let s = sample_rmf_with(&sieve, kind, 7, SeedSpec::new(77, t)).unwrap();
                let x = s.prime_value(7).unwrap();
                sr += x.re;
                si += x.im;
            }
            let n = trials as f64;
            // per-component standard deviation: 1 for ±1, 1/√2 on the circle
            let sd = if kind == RmfKind::Rademacher {
                1.0
            } else {
                0.5f64.sqrt()
            };
            assert!((sr / n).abs() < 5.0 * sd / n.sqrt(), "{kind}: {}", sr / n);
            assert!((si / n).abs() < 5.0 * sd / n.sqrt() + 1e-15, "{kind}: {}", si / n);
        }
    }

    #[test]
    fn fekete_and_liouville() {
        assert_eq!(fekete_coeffs(5).unwrap(), vec![1, -1, -1, 1]);
        assert_eq!(fekete_coeffs(3).unwrap(), vec![1, -1]);
        assert_eq!(fekete_coeffs(9).unwrap_err(), Error::NotOddPrime(9));
        assert_eq!(liouville_coeffs(4).unwrap(), vec![1, -1, -1, 1]);
    }

    #[test]
    fn tables_round_trip() {
        for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
            let s = sample_rmf(kind, 300, SeedSpec::new(11, 3)).unwrap();
            assert_eq!(decode_binary(&encode_binary(&s)).unwrap(), s);
            assert_eq!(decode_text(&encode_text(&s)).unwrap(), s);
        }
    }

    #[test]
    fn decoders_reject_garbage() {
        let s = sample_rmf(RmfKind::Rademacher, 10, SeedSpec::new(0, 0)).unwrap();
        let mut b = encode_binary(&s);
        assert!(decode_binary(&b[..20]).is_err());
        b[0] = b'X';
        assert!(decode_binary(&b).is_err());
        let mut b = encode_binary(&s);
        // flip X(6) so it no longer equals X(2)X(3)
        let off = 16 + 16 * 5;
        let flipped = -f64::from_le_bytes(b[off..off + 8].try_into().unwrap());
        b[off..off + 8].copy_from_slice(&flipped.to_le_bytes());
        assert!(decode_binary(&b).is_err());
        assert!(decode_text("").is_err());
        assert!(decode_text("# rmfkit-sample kind=rademacher limit=2\n1\t1\t0\n").is_err());
        assert!(decode_text("# rmfkit-sample kind=rademacher limit=1\n1\t1\t0\n").is_ok());
        assert!(decode_text("# rmfkit-sample kind=rademacher limit=1\n1\t0.5\t0\n").is_err());
    }
}
