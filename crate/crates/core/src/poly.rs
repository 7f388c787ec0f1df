//! Trigonometric polynomials `P(θ) = s · Σ_{n=1}^{N} x_n e(nθ)` and their
//! unit-circle moments `∫ P^j conj(P)^k dθ`.
//!
//! Moments are computed two independent ways:
//!
//! * **convolution** – expand `(Σ x_n z^n)^j` and `(Σ x_n z^n)^k` into
//!   coefficient arrays `c^(j)`, `c^(k)`; orthogonality of `e(tθ)` gives
//!   `∫ P^j conj(P)^k = s^{j+k} Σ_t c^(j)_t conj(c^(k)_t)`. For `±1`
//!   coefficients this runs in exact `i128` arithmetic.
//! * **grid** – evaluate `P` at `M` equally spaced points with one FFT and
//!   average `P^j conj(P)^k`. Once `M > (j+k)N` every nonzero frequency of
//!   the integrand lies strictly inside `(-M, M)`, so the uniform rule is
//!   exact.
//!
//! The sup-norm certificate uses Bernstein's inequality `|P'| ≤ 2πN·max|P|`:
//! every `θ` lies within `1/(2M)` of a grid point, so
//! `max|P| ≤ grid_max / (1 - πN/M)`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::arith::FactorSieve;
use crate::error::{Error, Result};
use crate::rmf::{self, RmfKind, RmfSample, Values};

/// Where a coefficient vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Random(RmfKind),
    Fekete(u64),
    Liouville,
    Custom,
}

/// Raw coefficients `x_1..x_N` before normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeffs {
    Signs(Vec<i8>),
    Complex(Vec<Complex64>),
}

/// Coefficients of `P` together with their normalization `s`.
///
/// Random samples and Liouville use `s = 1/√N`; Fekete polynomials use
/// `1/√(p-1)`, which equals `1/√N` for their length `N = p - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    origin: Origin,
    coeffs: Coeffs,
    scale: f64,
}

impl CoeffVector {
    pub fn from_sample(sample: &RmfSample) -> Self {
        let coeffs = match sample.values() {
            Values::Signs(v) => Coeffs::Signs(v.clone()),
            Values::Unit(v) => Coeffs::Complex(v.clone()),
        };
        let n = sample.limit() as f64;
        Self {
            origin: Origin::Random(sample.kind()),
            coeffs,
            scale: 1.0 / n.sqrt(),
        }
    }

    pub fn fekete(p: u64) -> Result<Self> {
        let v = rmf::fekete_coeffs(p)?;
        Ok(Self {
            origin: Origin::Fekete(p),
            scale: 1.0 / ((p - 1) as f64).sqrt(),
            coeffs: Coeffs::Signs(v),
        })
    }

    pub fn liouville(n: u64) -> Result<Self> {
        let v = rmf::liouville_coeffs(n)?;
        Ok(Self {
            origin: Origin::Liouville,
            scale: 1.0 / (n as f64).sqrt(),
            coeffs: Coeffs::Signs(v),
        })
    }

    /// Arbitrary coefficients normalized by `1/√N`.
    pub fn from_complex(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient vector".into()));
        }
        let scale = 1.0 / (values.len() as f64).sqrt();
        Ok(Self {
            origin: Origin::Custom,
            coeffs: Coeffs::Complex(values),
            scale,
        })
    }

    pub fn from_signs(values: Vec<i8>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient vector".into()));
        }
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidArgument("sign coefficients must be ±1".into()));
        }
        let scale = 1.0 / (values.len() as f64).sqrt();
        Ok(Self {
            origin: Origin::Custom,
            coeffs: Coeffs::Signs(values),
            scale,
        })
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Degree `N` (the largest frequency).
    pub fn len(&self) -> usize {
        match &self.coeffs {
            Coeffs::Signs(v) => v.len(),
            Coeffs::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized `x_n` for `n = 1..=N`.
    pub fn raw(&self) -> Vec<Complex64> {
        match &self.coeffs {
            Coeffs::Signs(v) => v.iter().map(|&s| Complex64::new(s as f64, 0.0)).collect(),
            Coeffs::Complex(v) => v.clone(),
        }
    }

    /// Normalized `a_n = s·x_n`.
    pub fn normalized(&self) -> Vec<Complex64> {
        self.raw().into_iter().map(|x| x * self.scale).collect()
    }

    /// Direct summation `P(θ)`.
    pub fn eval(&self, theta: f64) -> Complex64 {
        self.normalized()
            .iter()
            .enumerate()
            .map(|(i, &a)| a * rmf::unit((i as f64 + 1.0) * theta))
            .sum()
    }

    /// `P(0) = s · Σ x_n`.
    pub fn value_at_zero(&self) -> Complex64 {
        self.raw().iter().sum::<Complex64>() * self.scale
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn inverse_plan(m: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(m))
}

fn forward_plan(m: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(m))
}

/// `P(t/M)` for `t = 0..M`, via one zero-padded inverse FFT.
pub fn eval_grid(coeffs: &CoeffVector, m: usize) -> Result<Vec<Complex64>> {
    let n = coeffs.len();
    if m < n + 1 {
        return Err(Error::GridTooSmall { grid: m, required: n });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, a) in coeffs.normalized().into_iter().enumerate() {
        buf[i + 1] = a;
    }
    // rustfft's inverse transform is unnormalized: out[t] = Σ_n buf[n] e(nt/M).
    inverse_plan(m).process(&mut buf);
    Ok(buf)
}

/// Smallest power of two strictly greater than both `4N` and `(j+k)N`.
pub fn default_grid_size(n: usize, j: u32, k: u32) -> usize {
    let need = (4 * n).max((j + k) as usize * n + 1);
    (need + 1).next_power_of_two()
}

/// Coefficients of `(Σ x_n z^n)^j`. Index `i` holds frequency `i + j`
/// (`j = 0` gives the constant polynomial 1 at frequency 0).
#[derive(Debug, Clone, PartialEq)]
pub enum PowerCoeffs {
    Exact(Vec<i128>),
    Float(Vec<Complex64>),
}

impl PowerCoeffs {
    pub fn len(&self) -> usize {
        match self {
            PowerCoeffs::Exact(v) => v.len(),
            PowerCoeffs::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Complex64 {
        match self {
            PowerCoeffs::Exact(v) => Complex64::new(v[i] as f64, 0.0),
            PowerCoeffs::Float(v) => v[i],
        }
    }
}

/// Tuning for the convolution route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    /// Largest coefficient array (in elements) the convolution route may
    /// allocate.
    pub memory_cap: usize,
    /// Above this many multiply-adds the schoolbook product is replaced by
    /// an FFT product.
    pub schoolbook_cap: u128,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            memory_cap: 1 << 26,
            schoolbook_cap: 200_000_000,
        }
    }
}

fn schoolbook_work(n: usize, j: u32) -> u128 {
    (1..j as u128).map(|i| (i * (n as u128 - 1) + 1) * n as u128).sum()
}

/// `n^e` as `u128` if it fits.
fn checked_pow(n: usize, e: u32) -> Option<u128> {
    (n as u128).checked_pow(e)
}

/// Exact integer coefficients of `(Σ s_n z^n)^j` for `±1` inputs. Fails with
/// [`Error::Overflow`] if `N^{j-1}` (the coefficient bound) leaves `i128`.
pub fn power_coeffs_exact(signs: &[i8], j: u32) -> Result<Vec<i128>> {
    if j == 0 {
        return Ok(vec![1]);
    }
    let n = signs.len();
    match checked_pow(n, j - 1) {
        Some(b) if b < (1u128 << 126) => {}
        _ => return Err(Error::Overflow("power coefficients")),
    }
    let mut cur: Vec<i128> = signs.iter().map(|&s| s as i128).collect();
    for _ in 1..j {
        let mut next = vec![0i128; cur.len() + n - 1];
        for (a, &c) in cur.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (b, &s) in signs.iter().enumerate() {
                if s > 0 {
                    next[a + b] += c;
                } else {
                    next[a + b] -= c;
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

fn power_coeffs_schoolbook(x: &[Complex64], j: u32) -> Vec<Complex64> {
    if j == 0 {
        return vec![Complex64::new(1.0, 0.0)];
    }
    let n = x.len();
    let mut cur = x.to_vec();
    for _ in 1..j {
        let mut next = vec![Complex64::new(0.0, 0.0); cur.len() + n - 1];
        for (a, &c) in cur.iter().enumerate() {
            for (b, &s) in x.iter().enumerate() {
                next[a + b] += c * s;
            }
        }
        cur = next;
    }
    cur
}

fn power_coeffs_fft(x: &[Complex64], j: u32) -> Vec<Complex64> {
    if j == 0 {
        return vec![Complex64::new(1.0, 0.0)];
    }
    let n = x.len();
    let out_len = j as usize * (n - 1) + 1;
    // P(z) = z·Q(z) with deg Q = n-1, so P^j = z^j Q^j and Q^j has out_len terms.
    let m = out_len.next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(x);
    forward_plan(m).process(&mut buf);
    for v in buf.iter_mut() {
        *v = v.powu(j);
    }
    inverse_plan(m).process(&mut buf);
    let inv = 1.0 / m as f64;
    buf.truncate(out_len);
    buf.iter_mut().for_each(|v| *v *= inv);
    buf
}

/// Coefficients of `(Σ x_n z^n)^j` (unnormalized). Sign inputs stay exact
/// while `N^{j-1}` fits and the schoolbook work is under the cap.
pub fn power_coeffs(coeffs: &CoeffVector, j: u32, opts: &MomentOptions) -> Result<PowerCoeffs> {
    let n = coeffs.len();
    let out_len = if j == 0 { 1 } else { j as usize * (n - 1) + 1 };
    if out_len > opts.memory_cap {
        return Err(Error::BudgetExceeded {
            what: "power coefficient array",
            needed: out_len as u128,
            cap: opts.memory_cap as u128,
        });
    }
    let small = schoolbook_work(n, j) <= opts.schoolbook_cap;
    if let (Coeffs::Signs(s), true) = (&coeffs.coeffs, small) {
        match power_coeffs_exact(s, j) {
            Ok(v) => return Ok(PowerCoeffs::Exact(v)),
            Err(Error::Overflow(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let raw = coeffs.raw();
    Ok(PowerCoeffs::Float(if small {
        power_coeffs_schoolbook(&raw, j)
    } else {
        power_coeffs_fft(&raw, j)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    ConvolutionExact,
    GridExact,
    MonteCarlo,
}

impl MomentMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentMethod::ConvolutionExact => "convolution-exact",
            MomentMethod::GridExact => "grid-exact",
            MomentMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// A value of `∫ P^j conj(P)^k dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentResult {
    pub j: u32,
    pub k: u32,
    pub n: usize,
    pub value: Complex64,
    pub method: MomentMethod,
    pub error_bound: f64,
    /// `Σ_t c^(j)_t c^(k)_t` when the sign path stayed exact; the moment is
    /// this integer times `s^{j+k}`.
    pub exact_numerator: Option<i128>,
    /// Grid size for the grid route.
    pub grid: Option<usize>,
}

pub fn moment_exact(coeffs: &CoeffVector, j: u32, k: u32) -> Result<MomentResult> {
    moment_exact_with(coeffs, j, k, &MomentOptions::default())
}

pub fn moment_exact_with(coeffs: &CoeffVector, j: u32, k: u32, opts: &MomentOptions) -> Result<MomentResult> {
    let n = coeffs.len();
    let scale = coeffs.scale.powi((j + k) as i32);
    let cj = power_coeffs(coeffs, j, opts)?;
    let ck = if j == k {
        cj.clone()
    } else {
        power_coeffs(coeffs, k, opts)?
    };
    // frequency of index i is i + j (resp. i + k)
    let (lo_j, lo_k) = (j as usize, k as usize);
    let hi_j = lo_j + cj.len() - 1;
    let hi_k = lo_k + ck.len() - 1;
    let (lo, hi) = (lo_j.max(lo_k), hi_j.min(hi_k));

    if let (PowerCoeffs::Exact(a), PowerCoeffs::Exact(b)) = (&cj, &ck) {
        let mut acc: Option<i128> = Some(0);
        if lo <= hi {
            for t in lo..=hi {
                acc = acc.and_then(|s| a[t - lo_j].checked_mul(b[t - lo_k]).and_then(|p| s.checked_add(p)));
            }
        }
        if let Some(num) = acc {
            let value = Complex64::new(num as f64 * scale, 0.0);
            return Ok(MomentResult {
                j,
                k,
                n,
                value,
                method: MomentMethod::ConvolutionExact,
                error_bound: 4.0 * f64::EPSILON * value.norm(),
                exact_numerator: Some(num),
                grid: None,
            });
        }
    }

    let mut sum = Complex64::new(0.0, 0.0);
    if lo <= hi {
        for t in lo..=hi {
            sum += cj.get(t - lo_j) * ck.get(t - lo_k).conj();
        }
    }
    let energy = |c: &PowerCoeffs| (0..c.len()).map(|i| c.get(i).norm_sqr()).sum::<f64>();
    let length = cj.len().max(ck.len()) as f64;
    let error_bound = 8.0 * (j + k) as f64 * length * f64::EPSILON * (energy(&cj) * energy(&ck)).sqrt() * scale;
    Ok(MomentResult {
        j,
        k,
        n,
        value: sum * scale,
        method: MomentMethod::ConvolutionExact,
        error_bound,
        exact_numerator: None,
        grid: None,
    })
}

/// `P^j conj(P)^k` at one point.
#[inline]
pub fn mixed_power(p: Complex64, j: u32, k: u32) -> Complex64 {
    if j == k {
        Complex64::new(p.norm_sqr().powi(j as i32), 0.0)
    } else {
        p.powu(j) * p.conj().powu(k)
    }
}

/// Moment from precomputed grid values; `values.len()` must exceed `(j+k)N`.
pub fn moment_from_grid(values: &[Complex64], n: usize, j: u32, k: u32) -> Result<MomentResult> {
    let m = values.len();
    let required = (j + k) as usize * n;
    if m <= required {
        return Err(Error::GridTooSmall { grid: m, required });
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut peak: f64 = 0.0;
    for &p in values {
        sum += mixed_power(p, j, k);
        peak = peak.max(p.norm());
    }
    let log_m = (m as f64).log2().max(1.0);
    Ok(MomentResult {
        j,
        k,
        n,
        value: sum / m as f64,
        method: MomentMethod::GridExact,
        error_bound: 8.0 * ((j + k) as f64 + log_m) * f64::EPSILON * peak.powi((j + k) as i32),
        exact_numerator: None,
        grid: Some(m),
    })
}

pub fn moment_grid(coeffs: &CoeffVector, j: u32, k: u32, m: usize) -> Result<MomentResult> {
    let required = (j + k) as usize * coeffs.len();
    if m <= required {
        return Err(Error::GridTooSmall { grid: m, required });
    }
    let values = eval_grid(coeffs, m)?;
    moment_from_grid(&values, coeffs.len(), j, k)
}

/// Picks the cheaper exact route: convolution for small `N`, grid otherwise.
pub fn moment_auto(coeffs: &CoeffVector, j: u32, k: u32) -> Result<MomentResult> {
    let n = coeffs.len();
    if schoolbook_work(n, j.max(k)) <= 4_000_000 {
        moment_exact(coeffs, j, k)
    } else {
        moment_grid(coeffs, j, k, default_grid_size(n, j, k))
    }
}

/// Interval known to contain `max_θ |P(θ)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormBound {
    pub grid_max: f64,
    pub certified_upper: f64,
    pub grid: usize,
}

impl SupNormBound {
    pub fn contains(&self, x: f64) -> bool {
        self.grid_max <= x && x <= self.certified_upper
    }
}

/// Certified bracket from grid values of a degree-`n` polynomial.
pub fn sup_norm_from_grid(values: &[Complex64], n: usize) -> Result<SupNormBound> {
    let m = values.len();
    let ratio = std::f64::consts::PI * n as f64 / m as f64;
    if ratio >= 1.0 {
        return Err(Error::GridTooSmall {
            grid: m,
            required: (std::f64::consts::PI * n as f64).ceil() as usize,
        });
    }
    let grid_max = values.iter().map(|p| p.norm()).fold(0.0, f64::max);
    Ok(SupNormBound {
        grid_max,
        certified_upper: grid_max / (1.0 - ratio),
        grid: m,
    })
}

/// Requires `M > πN`; the default grid (`M > 4N`) keeps the certificate
/// factor below `1/(1 - π/4)`.
pub fn sup_norm_certified(coeffs: &CoeffVector, m: usize) -> Result<SupNormBound> {
    let n = coeffs.len();
    if (m as f64) <= std::f64::consts::PI * n as f64 {
        return Err(Error::GridTooSmall {
            grid: m,
            required: (std::f64::consts::PI * n as f64).ceil() as usize,
        });
    }
    sup_norm_from_grid(&eval_grid(coeffs, m)?, n)
}

/// `∫ |Σ_{m0 < n ≤ m0+L} x_n e(nθ)|^p dθ` (unnormalized coefficients).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortIntervalLp {
    pub value: f64,
    /// True when `p` is an even integer and the grid integrates the
    /// trigonometric polynomial `|Q|^p` exactly.
    pub exact: bool,
}

pub fn short_interval_lp(coeffs: &CoeffVector, m0: usize, l: usize, p: f64, m: usize) -> Result<ShortIntervalLp> {
    if l == 0 || m0 + l > coeffs.len() {
        return Err(Error::InvalidArgument(format!(
            "interval ({m0}, {}] not inside [1, {}]",
            m0 + l,
            coeffs.len()
        )));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent {p} must be positive")));
    }
    if m < l + 1 {
        return Err(Error::GridTooSmall { grid: m, required: l });
    }
    // |Q| is unchanged by the shift e(-m0 θ), so evaluate Σ_{i=1}^{L} x_{m0+i} e(iθ).
    let raw = coeffs.raw();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[1..=l].copy_from_slice(&raw[m0..m0 + l]);
    inverse_plan(m).process(&mut buf);
    let value = buf.iter().map(|v| v.norm().powf(p)).sum::<f64>() / m as f64;
    let even = p.fract() == 0.0 && (p as u64).is_multiple_of(2);
    // |Q|^p = Q^{p/2} conj(Q)^{p/2} has frequencies in [-(p/2)(L-1), (p/2)(L-1)].
    let exact = even && (m as f64) > p / 2.0 * (l as f64 - 1.0);
    Ok(ShortIntervalLp { value, exact })
}

/// Builds the coefficient vector of a fresh sample; shared sieve helper for
/// ensembles.
pub fn sample_coeffs(sieve: &FactorSieve, kind: RmfKind, n: u64, seed: rmf::SeedSpec) -> Result<CoeffVector> {
    Ok(CoeffVector::from_sample(&rmf::sample_rmf_with(sieve, kind, n, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmf::{sample_rmf, SeedSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn single_harmonic_grid() {
        let p = CoeffVector::from_signs(vec![1]).unwrap();
        let g = eval_grid(&p, 4).unwrap();
        let expect = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (a, b) in g.iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }
        assert!(matches!(eval_grid(&p, 1), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn two_term_grid() {
        let p = CoeffVector::from_signs(vec![1, -1]).unwrap();
        let g = eval_grid(&p, 3).unwrap();
        assert!(close(g[0], c(0.0, 0.0), 1e-15));
        // P(1/2) = (e(1/2) - e(1))/√2 = -2/√2
        let half = p.eval(0.5);
        assert!(close(half, c(-2.0 / 2f64.sqrt(), 0.0), 1e-14));
        let g4 = eval_grid(&p, 4).unwrap();
        assert!(close(g4[2], half, 1e-14));
    }

    #[test]
    fn grid_matches_direct_summation() {
        for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
            let s = sample_rmf(kind, 2000, SeedSpec::new(8, 1)).unwrap();
            let p = CoeffVector::from_sample(&s);
            let m = 4096;
            let g = eval_grid(&p, m).unwrap();
            assert!(close(g[0], p.value_at_zero(), 1e-9));
            for t in (0..m).step_by(97) {
                assert!(close(g[t], p.eval(t as f64 / m as f64), 1e-9), "t={t}");
            }
        }
    }

    #[test]
    fn power_coeff_examples() {
        let opts = MomentOptions::default();
        let p = CoeffVector::from_signs(vec![1, -1]).unwrap();
        assert_eq!(power_coeffs(&p, 1, &opts).unwrap(), PowerCoeffs::Exact(vec![1, -1]));
        assert_eq!(power_coeffs(&p, 2, &opts).unwrap(), PowerCoeffs::Exact(vec![1, -2, 1]));
        let s = sample_rmf(RmfKind::Rademacher, 30, SeedSpec::new(1, 1)).unwrap();
        let q = CoeffVector::from_sample(&s);
        let total: i128 = q.raw().iter().map(|x| x.re as i128).sum();
        if let PowerCoeffs::Exact(v) = power_coeffs(&q, 3, &opts).unwrap() {
            assert_eq!(v.iter().sum::<i128>(), total.pow(3));
        } else {
            panic!("sign path should stay exact");
        }
    }

    #[test]
    fn fft_power_matches_schoolbook() {
        let s = sample_rmf(RmfKind::Steinhaus, 50, SeedSpec::new(2, 2)).unwrap();
        let raw = CoeffVector::from_sample(&s).raw();
        for j in 1..=4 {
            let a = power_coeffs_schoolbook(&raw, j);
            let b = power_coeffs_fft(&raw, j);
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!(close(*x, *y, 1e-8 * (50f64).powi(j as i32 - 1)));
            }
        }
    }

    #[test]
    fn moment_examples() {
        let p = CoeffVector::from_signs(vec![1, -1]).unwrap();
        let r = moment_exact(&p, 2, 2).unwrap();
        assert_eq!(r.exact_numerator, Some(6));
        assert!((r.value.re - 1.5).abs() < 1e-15);
        let g = moment_grid(&p, 2, 2, 16).unwrap();
        assert!((g.value.re - 1.5).abs() < 1e-14);
        assert!(matches!(moment_grid(&p, 2, 2, 8), Err(Error::GridTooSmall { .. })));

        let one = CoeffVector::from_signs(vec![1]).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let v = moment_exact(&one, j, k).unwrap().value;
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!(close(v, c(expect, 0.0), 1e-15), "({j},{k})");
            }
        }
        assert_eq!(moment_exact(&p, 0, 0).unwrap().value, c(1.0, 0.0));
        assert!(close(moment_grid(&p, 0, 0, 4).unwrap().value, c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn parseval_and_conjugate_symmetry() {
        for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
            for t in 0..10 {
                let s = sample_rmf(kind, 64, SeedSpec::new(5, t)).unwrap();
                let p = CoeffVector::from_sample(&s);
                assert!(close(moment_exact(&p, 1, 1).unwrap().value, c(1.0, 0.0), 1e-12));
                let a = moment_exact(&p, 1, 2).unwrap().value;
                let b = moment_exact(&p, 2, 1).unwrap().value;
                assert_eq!(a, b.conj());
            }
        }
    }

    #[test]
    fn holder_monotonicity() {
        for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
            let s = sample_rmf(kind, 200, SeedSpec::new(6, 0)).unwrap();
            let p = CoeffVector::from_sample(&s);
            let mut prev = 0.0;
            for k in 1..=5 {
                let m = moment_grid(&p, k, k, default_grid_size(200, k, k)).unwrap().value.re;
                let norm = m.powf(1.0 / k as f64);
                assert!(norm >= prev * (1.0 - 1e-12), "k={k}");
                prev = norm;
            }
        }
    }

    #[test]
    fn sup_norm_examples() {
        let one = CoeffVector::from_signs(vec![1]).unwrap();
        let b = sup_norm_certified(&one, 8).unwrap();
        assert!((b.grid_max - 1.0).abs() < 1e-15);
        assert!((b.certified_upper - 1.0 / (1.0 - std::f64::consts::PI / 8.0)).abs() < 1e-12);

        let p = CoeffVector::from_signs(vec![1, -1]).unwrap();
        for m in [9, 16, 33, 64] {
            let b = sup_norm_certified(&p, m).unwrap();
            assert!(b.contains(2f64.sqrt()), "M={m}: {b:?}");
        }
        assert!(sup_norm_certified(&p, 6).is_err());
    }

    #[test]
    fn sup_norm_brackets_moments() {
        for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
            for t in 0..5 {
                let s = sample_rmf(kind, 500, SeedSpec::new(13, t)).unwrap();
                let p = CoeffVector::from_sample(&s);
                let b = sup_norm_certified(&p, default_grid_size(500, 1, 1)).unwrap();
                for k in 1..=4 {
                    let m = moment_grid(&p, k, k, default_grid_size(500, k, k)).unwrap().value.re;
                    assert!(m.powf(0.5 / k as f64) <= b.certified_upper);
                }
                // a much finer grid never exceeds the certified bound
                let fine = eval_grid(&p, 1 << 16).unwrap();
                let fine_max = fine.iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!(fine_max <= b.certified_upper);
            }
        }
    }

    #[test]
    fn short_interval_examples() {
        let s = sample_rmf(RmfKind::Steinhaus, 100, SeedSpec::new(4, 4)).unwrap();
        let p = CoeffVector::from_sample(&s);
        let one = short_interval_lp(&p, 10, 1, 3.0, 8).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12);
        let two = short_interval_lp(&p, 30, 20, 2.0, 64).unwrap();
        assert!(two.exact);
        assert!((two.value - 20.0).abs() < 1e-10);
        assert!(!short_interval_lp(&p, 30, 20, 3.0, 64).unwrap().exact);
        assert!(short_interval_lp(&p, 90, 20, 2.0, 64).is_err());
    }

    #[test]
    fn fekete_normalization() {
        let f = CoeffVector::fekete(11).unwrap();
        assert_eq!(f.len(), 10);
        assert_eq!(f.origin(), Origin::Fekete(11));
        assert!((moment_exact(&f, 1, 1).unwrap().value.re - 1.0).abs() < 1e-14);
    }
}
