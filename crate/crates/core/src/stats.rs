//! Monte Carlo estimators over seeded ensembles of random polynomials.
//!
//! Trial `t` of a run with master seed `s` always draws from
//! `SeedSpec { seed: s, trial: t }`, and per-trial results are collected in
//! trial order before any reduction, so every estimate is bitwise
//! reproducible regardless of thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::arith::FactorSieve;
use crate::dcount::{count_variance_system, CountOptions, SystemKind, VarianceCount};
use crate::error::{Error, Result};
use crate::poly::{self, CoeffVector};
use crate::rmf::{RmfKind, SeedSpec};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

fn compensated_mean<I: Iterator<Item = f64>>(it: I, n: f64) -> f64 {
    let mut acc = KahanSum::default();
    it.for_each(|x| acc.add(x));
    acc.total() / n
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub name: String,
    pub mean: Complex64,
    /// Sample variance `Σ|x - mean|² / (n - 1)`.
    pub variance: f64,
    pub std_error: f64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    /// Approximate standard error of `variance`, `√((μ₄ - σ⁴)/n)`.
    pub variance_std_error: f64,
    pub num_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_values(name: &str, values: &[Complex64], seed: u64) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
        }
        let nf = n as f64;
        let mean = Complex64::new(
            compensated_mean(values.iter().map(|v| v.re), nf),
            compensated_mean(values.iter().map(|v| v.im), nf),
        );
        let dev = |f: fn(Complex64) -> f64| compensated_mean(values.iter().map(|v| f(v - mean)), nf - 1.0);
        let var_re = dev(|d| d.re * d.re);
        let var_im = dev(|d| d.im * d.im);
        let variance = var_re + var_im;
        let mu4 = compensated_mean(values.iter().map(|v| (v - mean).norm_sqr().powi(2)), nf);
        let sigma2 = variance * (nf - 1.0) / nf;
        Ok(Self {
            name: name.to_string(),
            mean,
            variance,
            std_error: (variance / nf).sqrt(),
            std_error_re: (var_re / nf).sqrt(),
            std_error_im: (var_im / nf).sqrt(),
            variance_std_error: ((mu4 - sigma2 * sigma2).max(0.0) / nf).sqrt(),
            num_samples: n as u64,
            seed,
        })
    }

    pub fn from_real(name: &str, values: &[f64], seed: u64) -> Result<Self> {
        let c: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_values(name, &c, seed)
    }
}

/// Runs `f` on `trials` independent samples of length `n`, in parallel,
/// returning results in trial order.
pub fn run_trials<T, F>(kind: RmfKind, n: u64, trials: u64, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&CoeffVector) -> Result<T> + Sync,
{
    let sieve = FactorSieve::new(n)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let coeffs = poly::sample_coeffs(&sieve, kind, n, SeedSpec::new(seed, t))?;
            f(&coeffs)
        })
        .collect()
}

/// Estimates `E 𝔪^{(j,k)}` from `trials` seeded samples.
pub fn mc_moments(kind: RmfKind, n: u64, j: u32, k: u32, trials: u64, seed: u64) -> Result<McEstimate> {
    let values = run_trials(kind, n, trials, seed, |c| Ok(poly::moment_auto(c, j, k)?.value))?;
    McEstimate::from_values(&format!("moment({j},{k})"), &values, seed)
}

/// `N^{2k}·Var(𝔪^{(k)})` by Monte Carlo against the exact variance count.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub kind: RmfKind,
    pub count: VarianceCount,
    pub predicted_variance: f64,
    pub estimate: McEstimate,
    pub z: f64,
    pub sigmas: f64,
    pub pass: bool,
}

pub fn variance_identity_check(
    kind: RmfKind,
    n: u64,
    k: u32,
    trials: u64,
    seed: u64,
    sigmas: f64,
    opts: &CountOptions,
) -> Result<VarianceReport> {
    let count = count_variance_system(SystemKind::for_kind(kind), k, k, n, opts)?;
    let predicted_variance = count.value as f64 / (n as f64).powi(2 * k as i32);
    let estimate = mc_moments(kind, n, k, k, trials, seed)?;
    let diff = estimate.variance - predicted_variance;
    // 𝔪^{(1)} is identically 1, so its sample variance is pure rounding noise
    let floor = 1e-9 * predicted_variance.max(1.0);
    let se = estimate.variance_std_error;
    let pass = diff.abs() <= sigmas * se + floor;
    let z = if diff.abs() <= floor {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY
    };
    Ok(VarianceReport {
        kind,
        count,
        predicted_variance,
        estimate,
        z,
        sigmas,
        pass,
    })
}

/// Value distribution of `P` over a uniform grid, binned into `q × q`
/// rectangles whose corners sit at the `i/q` quantiles of `N(0, 1/2)` in
/// each real coordinate. Each rectangle has Gaussian mass `1/q²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub grid: usize,
    pub q: usize,
    /// Interior cut points shared by both axes (`q - 1` of them).
    pub cuts: Vec<f64>,
    /// Row-major counts: `counts[a * q + b]` holds points with real part in
    /// band `a` and imaginary part in band `b`.
    pub counts: Vec<u64>,
}

impl EmpiricalMeasure {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn fraction(&self, a: usize, b: usize) -> f64 {
        self.counts[a * self.q + b] as f64 / self.grid as f64
    }

    /// Gaussian mass of rectangle `(a, b)` from the CDF of each coordinate.
    pub fn gaussian_mass(&self, a: usize, b: usize) -> f64 {
        let axis = axis_normal();
        let band = |i: usize| {
            let lo = if i == 0 { 0.0 } else { axis.cdf(self.cuts[i - 1]) };
            let hi = if i + 1 == self.q { 1.0 } else { axis.cdf(self.cuts[i]) };
            hi - lo
        };
        band(a) * band(b)
    }

    pub fn sup_discrepancy(&self) -> f64 {
        (0..self.q)
            .flat_map(|a| (0..self.q).map(move |b| (a, b)))
            .map(|(a, b)| (self.fraction(a, b) - self.gaussian_mass(a, b)).abs())
            .fold(0.0, f64::max)
    }
}

fn axis_normal() -> Normal {
    Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal")
}

fn band_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&c| c <= x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub measure: EmpiricalMeasure,
    pub sup_discrepancy: f64,
}

pub const MIN_CLT_GRID: usize = 1 << 14;

pub fn clt_empirical(coeffs: &CoeffVector, m: usize, q: usize) -> Result<CltReport> {
    if m < MIN_CLT_GRID {
        return Err(Error::GridTooSmall {
            grid: m,
            required: MIN_CLT_GRID,
        });
    }
    if q < 3 {
        return Err(Error::InvalidArgument(format!("need q ≥ 3 quantile bands, got {q}")));
    }
    let axis = axis_normal();
    let cuts: Vec<f64> = (1..q).map(|i| axis.inverse_cdf(i as f64 / q as f64)).collect();
    let values = poly::eval_grid(coeffs, m)?;
    let mut counts = vec![0u64; q * q];
    for v in &values {
        counts[band_of(&cuts, v.re) * q + band_of(&cuts, v.im)] += 1;
    }
    let measure = EmpiricalMeasure {
        grid: m,
        q,
        cuts,
        counts,
    };
    let sup_discrepancy = measure.sup_discrepancy();
    Ok(CltReport {
        measure,
        sup_discrepancy,
    })
}

/// `[(log N / log log N)^{1/6}, exp(3 √(log N · log log N))]`.
pub fn supnorm_window(n: u64) -> Result<(f64, f64)> {
    if n < 16 {
        // log log N must be positive and not tiny for the window to mean anything
        return Err(Error::InvalidArgument(format!("window needs N ≥ 16, got {n}")));
    }
    let l = (n as f64).ln();
    let ll = l.ln();
    Ok(((l / ll).powf(1.0 / 6.0), (3.0 * (l * ll).sqrt()).exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupNormSummary {
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub window: (f64, f64),
    pub bounds: Vec<poly::SupNormBound>,
    /// Trials whose whole certified bracket lies inside the window.
    pub inside: u64,
    pub median_grid_max: f64,
    pub median_certified: f64,
    pub sqrt_log_n: f64,
}

impl SupNormSummary {
    pub fn fraction_inside(&self) -> f64 {
        self.inside as f64 / self.trials as f64
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Certified sup norms of `trials` samples on the default grid (`M > 4N`).
pub fn supnorm_ensemble(kind: RmfKind, n: u64, trials: u64, seed: u64) -> Result<SupNormSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let window = supnorm_window(n)?;
    let m = poly::default_grid_size(n as usize, 1, 1);
    let bounds = run_trials(kind, n, trials, seed, |c| poly::sup_norm_certified(c, m))?;
    let inside = bounds
        .iter()
        .filter(|b| window.0 <= b.grid_max && b.certified_upper <= window.1)
        .count() as u64;
    let mut gm: Vec<f64> = bounds.iter().map(|b| b.grid_max).collect();
    let mut cu: Vec<f64> = bounds.iter().map(|b| b.certified_upper).collect();
    Ok(SupNormSummary {
        n,
        trials,
        seed,
        window,
        inside,
        median_grid_max: median(&mut gm),
        median_certified: median(&mut cu),
        sqrt_log_n: (n as f64).ln().sqrt(),
        bounds,
    })
}

/// `E 𝔪^{(k)}` against `E|P(0)|^{2k}` on the same samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LongtailReport {
    pub kind: RmfKind,
    pub n: u64,
    pub k: u32,
    pub moment: McEstimate,
    pub at_zero: McEstimate,
    /// Standard error of the paired difference `|P(0)|^{2k} - 𝔪^{(k)}`.
    pub joint_std_error: f64,
    /// `E|P(0)|^{2k} / E 𝔪^{(k)}`.
    pub ratio: f64,
    /// `Var 𝔪^{(k)} / (E 𝔪^{(k)})²`.
    pub variance_ratio: f64,
    pub sigmas: f64,
    pub pass: bool,
}

pub fn longtail_compare(kind: RmfKind, n: u64, k: u32, trials: u64, seed: u64, sigmas: f64) -> Result<LongtailReport> {
    let pairs = run_trials(kind, n, trials, seed, |c| {
        let m = poly::moment_auto(c, k, k)?.value.re;
        let z = c.value_at_zero().norm_sqr().powi(k as i32);
        Ok((m, z))
    })?;
    let ms: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let zs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let ds: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let moment = McEstimate::from_real(&format!("moment({k},{k})"), &ms, seed)?;
    let at_zero = McEstimate::from_real(&format!("abs_p0_pow({})", 2 * k), &zs, seed)?;
    let diff = McEstimate::from_real("difference", &ds, seed)?;
    let floor = 1e-9 * moment.mean.re.abs().max(1.0);
    let pass = moment.mean.re <= at_zero.mean.re + sigmas * diff.std_error + floor;
    Ok(LongtailReport {
        kind,
        n,
        k,
        ratio: at_zero.mean.re / moment.mean.re,
        variance_ratio: moment.variance / moment.mean.re.powi(2),
        joint_std_error: diff.std_error,
        moment,
        at_zero,
        sigmas,
        pass,
    })
}
