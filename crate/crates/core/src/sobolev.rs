//! Sobolev statistics of uniformity on `S^d`.
//!
//! A [`WeightScheme`] fixes the weights `v_{k,d}`; the kernel is
//! `ψ(x) = Σ_k (1 + 2k/(d−1)) v²_{k,d} C_k^{(d−1)/2}(x)` (with `2 v² cos(k arccos x)`
//! on the circle), the statistic is `T_n = (2/n) Σ_{i<j} ψ(X_i'X_j)`, and under
//! uniformity `T_n/σ_n` is asymptotically standard normal with
//! `σ_n² = 2 Σ_k v⁴_{k,d} d_{k,d}`.
//!
//! Built-in schemes all have finite support, so no truncation is involved.
//! The high-dimensional moment conditions hold for them by direct order
//! counting: for a k₀ term `E ψ⁴ ≍ d^{2k₀}` and `σ_n⁴ ≍ d^{2k₀}`, and a finite
//! sum of such terms inherits the bound from its leading degree. Custom schemes
//! are accepted as given.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{self, clamp_unit, normal_sf, PolyOrder};

/// Norm tolerance for rows of a [`SphereSample`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Weight of a single degree in a [`WeightScheme::Custom`] scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightRule {
    /// `v_{k,d} = c`, independent of the dimension.
    Constant(f64),
    /// `v_{k,d} = [c · k! · d^{−(k−1)}]^{1/4}`, the dimension-decaying form that
    /// keeps a Rayleigh component visible against integrated vMF alternatives.
    Decay(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CustomWeight {
    pub degree: u32,
    pub rule: WeightRule,
}

/// Rule `(k, d) ↦ v_{k,d}` identifying a Sobolev test.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightScheme {
    /// `v_{k,d} = δ_{k,k₀}`; `KSobolev(1)` is Rayleigh, `KSobolev(2)` is Bingham.
    KSobolev(u32),
    /// `v_{k,d} = 1{k ≤ k₀}`, `k₀ > 1`.
    Finite(u32),
    /// Unit weights on the listed degrees (`{1, 2}` is the Rayleigh–Bingham hybrid).
    Hybrid(Vec<u32>),
    /// `v_{k,d} = δ_{k,1} + [k! d^{−k}]^{1/4} 1{1 < k ≤ k₀}`.
    DecayAdjusted(u32),
    Custom(Vec<CustomWeight>),
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

impl WeightScheme {
    pub fn rayleigh() -> Self {
        WeightScheme::KSobolev(1)
    }

    pub fn bingham() -> Self {
        WeightScheme::KSobolev(2)
    }

    pub fn hybrid() -> Self {
        WeightScheme::Hybrid(vec![1, 2])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightScheme::KSobolev(k) if *k == 0 => domain("k-Sobolev degree must be at least 1"),
            WeightScheme::Finite(k) if *k < 2 => domain("finite scheme needs k0 > 1"),
            WeightScheme::DecayAdjusted(k) if *k < 2 => domain("decay-adjusted scheme needs k0 > 1"),
            WeightScheme::Hybrid(ks) if ks.is_empty() || ks.contains(&0) => {
                domain("hybrid scheme needs a non-empty set of degrees >= 1")
            }
            WeightScheme::Custom(ws) => {
                if ws.is_empty() {
                    return domain("custom scheme needs at least one weight");
                }
                for w in ws {
                    let c = match w.rule {
                        WeightRule::Constant(c) | WeightRule::Decay(c) => c,
                    };
                    if w.degree == 0 || !c.is_finite() || c < 0.0 {
                        return domain(format!("invalid custom weight {w:?}"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Largest degree with a (possibly) nonzero weight.
    pub fn max_degree(&self) -> u32 {
        match self {
            WeightScheme::KSobolev(k) | WeightScheme::Finite(k) | WeightScheme::DecayAdjusted(k) => *k,
            WeightScheme::Hybrid(ks) => ks.iter().copied().max().unwrap_or(0),
            WeightScheme::Custom(ws) => ws.iter().map(|w| w.degree).max().unwrap_or(0),
        }
    }

    /// `v_{k,d}`.
    pub fn weight(&self, k: u32, d: usize) -> f64 {
        let df = d as f64;
        match self {
            WeightScheme::KSobolev(k0) => f64::from(u8::from(k == *k0)),
            WeightScheme::Finite(k0) => f64::from(u8::from(k >= 1 && k <= *k0)),
            WeightScheme::Hybrid(ks) => f64::from(u8::from(ks.contains(&k))),
            WeightScheme::DecayAdjusted(k0) => {
                if k == 1 {
                    1.0
                } else if k <= *k0 {
                    (factorial(k) * df.powi(-(k as i32))).powf(0.25)
                } else {
                    0.0
                }
            }
            WeightScheme::Custom(ws) => ws
                .iter()
                .filter(|w| w.degree == k)
                .map(|w| match w.rule {
                    WeightRule::Constant(c) => c,
                    WeightRule::Decay(c) => (c * factorial(k) * df.powi(1 - k as i32)).powf(0.25),
                })
                .sum(),
        }
    }

    /// Degrees with nonzero weight at dimension `d`, ascending, with their weights.
    pub fn support(&self, d: usize) -> Vec<(u32, f64)> {
        (1..=self.max_degree()).map(|k| (k, self.weight(k, d))).filter(|(_, v)| *v != 0.0).collect()
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::KSobolev(1) => write!(f, "rayleigh"),
            WeightScheme::KSobolev(2) => write!(f, "bingham"),
            WeightScheme::KSobolev(k) => write!(f, "k:{k}"),
            WeightScheme::Finite(k) => write!(f, "finite:{k}"),
            WeightScheme::Hybrid(ks) if ks == &[1, 2] => write!(f, "hybrid"),
            WeightScheme::Hybrid(ks) => {
                let list: Vec<String> = ks.iter().map(u32::to_string).collect();
                write!(f, "hybrid:{}", list.join(","))
            }
            WeightScheme::DecayAdjusted(k) => write!(f, "decay:{k}"),
            WeightScheme::Custom(ws) => {
                let list: Vec<String> = ws
                    .iter()
                    .map(|w| match w.rule {
                        WeightRule::Constant(c) => format!("{}={c}", w.degree),
                        WeightRule::Decay(c) => format!("{}=decay({c})", w.degree),
                    })
                    .collect();
                write!(f, "custom:{}", list.join(","))
            }
        }
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    /// Parses `rayleigh`, `bingham`, `k:K`, `finite:K`, `hybrid`, `hybrid:1,3`,
    /// `decay:K` and `custom:1=1,2=decay(0.5)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        let int = |a: Option<&str>| -> Result<u32> {
            a.ok_or_else(|| Error::Domain(format!("scheme `{s}` needs an integer argument")))?
                .parse::<u32>()
                .map_err(|_| Error::Domain(format!("bad integer in scheme `{s}`")))
        };
        let scheme = match head.to_ascii_lowercase().as_str() {
            "rayleigh" => WeightScheme::rayleigh(),
            "bingham" => WeightScheme::bingham(),
            "k" => WeightScheme::KSobolev(int(arg)?),
            "finite" => WeightScheme::Finite(int(arg)?),
            "decay" => WeightScheme::DecayAdjusted(int(arg)?),
            "hybrid" => match arg {
                None => WeightScheme::hybrid(),
                Some(list) => WeightScheme::Hybrid(
                    list.split(',')
                        .map(|t| t.trim().parse::<u32>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::Domain(format!("bad degree list in `{s}`")))?,
                ),
            },
            "custom" => {
                let list = arg.ok_or_else(|| Error::Domain("custom scheme needs weights".into()))?;
                let mut ws = Vec::new();
                for item in list.split(',') {
                    let (k, v) = item
                        .split_once('=')
                        .ok_or_else(|| Error::Domain(format!("custom weight `{item}` is not k=v")))?;
                    let degree = k.trim().parse::<u32>().map_err(|_| Error::Domain(format!("bad degree `{k}`")))?;
                    let v = v.trim();
                    let rule = if let Some(inner) = v.strip_prefix("decay(").and_then(|r| r.strip_suffix(')')) {
                        WeightRule::Decay(inner.parse().map_err(|_| Error::Domain(format!("bad weight `{v}`")))?)
                    } else {
                        WeightRule::Constant(v.parse().map_err(|_| Error::Domain(format!("bad weight `{v}`")))?)
                    };
                    ws.push(CustomWeight { degree, rule });
                }
                WeightScheme::Custom(ws)
            }
            _ => return domain(format!("unknown weight scheme `{s}`")),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

impl Serialize for WeightScheme {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WeightScheme {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `n` points on `S^d`, stored row-major as an `n × (d+1)` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereSample {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl SphereSample {
    /// Wraps rows that are already unit vectors (checked to [`UNIT_NORM_TOL`]).
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        Self::check_shape(&data, n, d)?;
        let p = d + 1;
        for (i, row) in data.chunks_exact(p).enumerate() {
            let norm = dot(row, row).sqrt();
            if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
                return Err(Error::InvalidRow { row: i, reason: format!("norm {norm} is not 1") });
            }
        }
        Ok(Self { data, n, d })
    }

    /// Normalizes each row; zero rows are rejected.
    pub fn normalized(mut data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        Self::check_shape(&data, n, d)?;
        for (i, row) in data.chunks_exact_mut(d + 1).enumerate() {
            let norm = dot(row, row).sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::InvalidRow { row: i, reason: format!("cannot normalize a row of norm {norm}") });
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Self { data, n, d })
    }

    pub(crate) fn from_unit_rows(data: Vec<f64>, n: usize, d: usize) -> Self {
        debug_assert_eq!(data.len(), n * (d + 1));
        Self { data, n, d }
    }

    fn check_shape(data: &[f64], n: usize, d: usize) -> Result<()> {
        if n == 0 || d == 0 {
            return domain(format!("a sphere sample needs n >= 1 and d >= 1 (got n = {n}, d = {d})"));
        }
        if data.len() != n * (d + 1) {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot form {n} rows of length {}",
                data.len(),
                d + 1
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sphere dimension `d` (rows live in `R^{d+1}`).
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ambient_dim(&self) -> usize {
        self.d + 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.d + 1;
        &self.data[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d + 1)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Pairwise dot products `X_i'X_j`, `i < j`, packed row by row.
#[derive(Clone, Debug)]
pub struct Gram {
    n: usize,
    dots: Vec<f64>,
}

impl Gram {
    pub fn from_sample(sample: &SphereSample) -> Self {
        let n = sample.n();
        let mut dots = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            let xi = sample.row(i);
            for j in (i + 1)..n {
                dots.push(dot(xi, sample.row(j)));
            }
        }
        Self { n, dots }
    }

    /// Wraps precomputed dot products in `(0,1), (0,2), …, (1,2), …` order.
    pub fn from_packed(n: usize, dots: Vec<f64>) -> Result<Self> {
        if n == 0 || dots.len() != n * (n - 1) / 2 {
            return Err(Error::DimensionMismatch(format!("{} packed dot products do not match n = {n}", dots.len())));
        }
        Ok(Self { n, dots })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dots(&self) -> &[f64] {
        &self.dots
    }

    /// Iterates `(i, j, X_i'X_j)` over `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j))).zip(&self.dots).map(|((i, j), &x)| (i, j, x))
    }
}

/// `ψ` compiled for one dimension: per-degree coefficients
/// `(1 + 2k/(d−1)) v²_{k,d}` (or `v²_{k,1}` against `2 cos(k arccos x)`).
#[derive(Clone, Debug)]
pub struct SobolevKernel {
    d: usize,
    order: PolyOrder,
    coefs: Vec<f64>,
}

impl SobolevKernel {
    pub fn new(scheme: &WeightScheme, d: usize) -> Result<Self> {
        scheme.validate()?;
        let order = PolyOrder::for_sphere(d)?;
        let kmax = scheme.max_degree() as usize;
        let mut coefs = vec![0.0; kmax + 1];
        for (k, v) in scheme.support(d) {
            let scale = match order {
                PolyOrder::Chebyshev => 1.0,
                PolyOrder::Lambda(_) => 1.0 + 2.0 * f64::from(k) / (d as f64 - 1.0),
            };
            coefs[k as usize] = scale * v * v;
        }
        Ok(Self { d, order, coefs })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Highest degree evaluated.
    pub fn truncation(&self) -> u32 {
        self.coefs.len().saturating_sub(1) as u32
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let x = clamp_unit(x)?;
        let kmax = self.coefs.len() - 1;
        if kmax == 0 {
            return Ok(0.0);
        }
        match self.order {
            PolyOrder::Chebyshev => {
                let (mut t_prev, mut t_cur) = (1.0, x);
                let mut acc = self.coefs[1] * 2.0 * x;
                for k in 2..=kmax {
                    let t_next = 2.0 * x * t_cur - t_prev;
                    t_prev = t_cur;
                    t_cur = t_next;
                    acc += self.coefs[k] * 2.0 * t_cur;
                }
                Ok(acc)
            }
            PolyOrder::Lambda(lambda) => {
                let (mut c_prev, mut c_cur) = (1.0, 2.0 * lambda * x);
                let mut acc = self.coefs[1] * c_cur;
                for k in 2..=kmax {
                    let kf = k as f64;
                    let c_next = (2.0 * x * (kf + lambda - 1.0) * c_cur - (kf + 2.0 * lambda - 2.0) * c_prev) / kf;
                    if !(c_next.abs() <= specfun::GEGENBAUER_OVERFLOW) {
                        return Err(Error::Overflow { degree: k as u32 });
                    }
                    c_prev = c_cur;
                    c_cur = c_next;
                    acc += self.coefs[k] * c_cur;
                }
                Ok(acc)
            }
        }
    }
}

/// `ψ(x)` for a scheme on `S^d`.
pub fn psi_kernel(scheme: &WeightScheme, d: usize, x: f64) -> Result<f64> {
    SobolevKernel::new(scheme, d)?.eval(x)
}

/// `σ_n = (2 Σ_k v⁴_{k,d} d_{k,d})^{1/2}`, accumulated in log-scale.
pub fn sigma_n(scheme: &WeightScheme, d: usize) -> Result<f64> {
    scheme.validate()?;
    if d == 0 {
        return domain("sphere dimension must be at least 1");
    }
    let logs = scheme
        .support(d)
        .into_iter()
        .map(|(k, v)| Ok(4.0 * v.ln() + specfun::ln_harmonic_dim(k, d)?))
        .collect::<Result<Vec<f64>>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::DegenerateScheme { dim: d });
    }
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok((0.5 * (std::f64::consts::LN_2 + top + sum.ln())).exp())
}

/// Outcome of a Sobolev uniformity test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub raw_statistic: f64,
    pub sigma: f64,
    pub standardized: f64,
    /// Upper-tail p-value `1 − Φ(standardized)`.
    pub p_value: f64,
    /// Highest Gegenbauer degree in the kernel.
    pub truncation: u32,
    pub kernel_evaluations: u64,
    pub n: usize,
    pub d: usize,
}

/// Sobolev test of uniformity for a sample on `S^d`.
pub fn statistic(sample: &SphereSample, scheme: &WeightScheme) -> Result<TestReport> {
    statistic_from_gram(&Gram::from_sample(sample), sample.d(), scheme)
}

/// Same as [`statistic`] from precomputed pairwise dot products.
pub fn statistic_from_gram(gram: &Gram, d: usize, scheme: &WeightScheme) -> Result<TestReport> {
    let kernel = SobolevKernel::new(scheme, d)?;
    let mut sum = 0.0;
    for &x in gram.dots() {
        sum += kernel.eval(x)?;
    }
    report(gram, d, scheme, &kernel, sum)
}

/// [`statistic_from_gram`] together with the kernel row sums
/// `Σ_{j≠i} ψ(X_i'X_j)`, from a single pass over the pairs.
pub fn statistic_with_row_sums(gram: &Gram, d: usize, scheme: &WeightScheme) -> Result<(TestReport, Vec<f64>)> {
    let kernel = SobolevKernel::new(scheme, d)?;
    let mut sums = vec![0.0; gram.n()];
    let mut sum = 0.0;
    for (i, j, x) in gram.pairs() {
        let v = kernel.eval(x)?;
        sum += v;
        sums[i] += v;
        sums[j] += v;
    }
    Ok((report(gram, d, scheme, &kernel, sum)?, sums))
}

fn report(gram: &Gram, d: usize, scheme: &WeightScheme, kernel: &SobolevKernel, sum: f64) -> Result<TestReport> {
    let sigma = sigma_n(scheme, d)?;
    let n = gram.n();
    let raw = 2.0 * sum / n as f64;
    let standardized = raw / sigma;
    Ok(TestReport {
        raw_statistic: raw,
        sigma,
        standardized,
        p_value: normal_sf(standardized),
        truncation: kernel.truncation(),
        kernel_evaluations: gram.dots().len() as u64,
        n,
        d,
    })
}

/// `√(2 k₀!) / (d^{k₀/2} n) Σ_{i<j} C_{k₀}^{(d−1)/2}(X_i'X_j)`, the
/// asymptotic-constant normalization of a k₀-Sobolev statistic (`d ≥ 2`).
pub fn k0_standardized(sample: &SphereSample, k0: u32) -> Result<f64> {
    k0_standardized_from_gram(&Gram::from_sample(sample), sample.d(), k0)
}

pub fn k0_standardized_from_gram(gram: &Gram, d: usize, k0: u32) -> Result<f64> {
    if k0 == 0 {
        return domain("k0 must be at least 1");
    }
    if d < 2 {
        return domain("the k0 normalization needs d >= 2");
    }
    if gram.n() < 2 {
        return domain("the k0 normalization needs n >= 2");
    }
    let lambda = (d as f64 - 1.0) / 2.0;
    let mut buf = vec![0.0; k0 as usize + 1];
    let mut sum = 0.0;
    for &x in gram.dots() {
        specfun::gegenbauer_fill(lambda, clamp_unit(x)?, &mut buf)?;
        sum += buf[k0 as usize];
    }
    let scale = (2.0 * factorial(k0)).sqrt() / ((d as f64).powf(f64::from(k0) / 2.0) * gram.n() as f64);
    Ok(scale * sum)
}

/// Finite-`d` value of the local-power constant
/// `Γ_d = √d · v²_{1,d} / (√2 (Σ_k v⁴_{k,d} d_{k,d})^{1/2}) = √d v²_{1,d} / σ_n`.
pub fn gamma_constant(scheme: &WeightScheme, d: usize) -> Result<f64> {
    let sigma = sigma_n(scheme, d)?;
    let v1 = scheme.weight(1, d);
    Ok((d as f64).sqrt() * v1 * v1 / sigma)
}
