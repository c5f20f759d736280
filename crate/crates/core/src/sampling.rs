//! Seeded samplers for every model used in the experiments.
//!
//! All randomness flows through [`RngStream`]: a `(base_seed, stream_index)`
//! pair mapped to an independent ChaCha8 stream. Samplers take `&mut R` so a
//! replicate can draw several objects from one stream.
//!
//! Dimension convention: a model compiled for `dim` produces rows in `R^dim`.
//! Sphere-valued models therefore live on `S^{dim−1}`.
//!
//! Integrated (rotation-mixed) models draw one uniform location per call and
//! then sample conditionally on it. Mixing a fixed location over Haar
//! rotations `Q` yields the law of `Qθ`, which is uniform on the sphere, so the
//! two constructions have the same joint law while avoiding `O(d²)` matrices.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Cauchy, ChiSquared, Distribution, Exp1, FisherF, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::quadrature;
use crate::sobolev::{dot, SphereSample};
use crate::specfun::{self, normal_cdf, normal_sf};
use crate::symmetry::TangentFrame;

/// Independent random stream identified by a seed and a stream index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub base_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(base_seed: u64, stream_index: u64) -> Self {
        Self { base_seed, stream_index }
    }

    pub fn with_index(self, stream_index: u64) -> Self {
        Self { stream_index, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// `n` observations in `R^dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Points {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Points {
    pub fn new(data: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return domain(format!("need n >= 1 and dim >= 1 (got n = {n}, dim = {dim})"));
        }
        if data.len() != n * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot form {n} rows of length {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRow {
                row: pos / dim,
                reason: format!("non-finite value in column {}", pos % dim),
            });
        }
        Ok(Self { data, n, dim })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

impl From<SphereSample> for Points {
    fn from(s: SphereSample) -> Self {
        let (n, dim) = (s.n(), s.ambient_dim());
        Points { data: s.into_vec(), n, dim }
    }
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
}

fn normalize(row: &mut [f64]) {
    let norm = dot(row, row).sqrt();
    row.iter_mut().for_each(|v| *v /= norm);
}

fn uniform_unit<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        gaussian_vec(rng, out);
        if dot(out, out) > 0.0 {
            normalize(out);
            return;
        }
    }
}

fn check_unit(v: &[f64], what: &str) -> Result<()> {
    let norm = dot(v, v).sqrt();
    if !((norm - 1.0).abs() <= 1e-9) {
        return domain(format!("{what} must be a unit vector (norm {norm})"));
    }
    Ok(())
}

fn first_axis(p: usize) -> Vec<f64> {
    let mut e = vec![0.0; p];
    e[0] = 1.0;
    e
}

/// `n` iid uniform points on `S^d` (normalized Gaussian vectors).
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Result<SphereSample> {
    if n == 0 || d == 0 {
        return domain("uniform_sphere needs n >= 1 and d >= 1");
    }
    let p = d + 1;
    let mut data = vec![0.0; n * p];
    data.chunks_exact_mut(p).for_each(|row| uniform_unit(rng, row));
    Ok(SphereSample::from_unit_rows(data, n, d))
}

/// Cosine sampler for vMF(κ) in `R^p` by Wood's rejection scheme with a
/// `Beta((p−1)/2, (p−1)/2)` envelope.
#[derive(Clone, Debug)]
pub struct VmfCosine {
    kappa: f64,
    pm1: f64,
    b: f64,
    x0: f64,
    c: f64,
    envelope: Beta<f64>,
}

impl VmfCosine {
    pub fn new(p: usize, kappa: f64) -> Result<Self> {
        if p < 2 {
            return domain("vMF needs ambient dimension >= 2");
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return domain(format!("vMF concentration must be finite and >= 0, got {kappa}"));
        }
        let pm1 = p as f64 - 1.0;
        let b = pm1 / (2.0 * kappa + (4.0 * kappa * kappa + pm1 * pm1).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        let c = kappa * x0 + pm1 * (1.0 - x0 * x0).ln();
        let envelope = Beta::new(pm1 / 2.0, pm1 / 2.0).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Self { kappa, pm1, b, x0, c, envelope })
    }

    /// Draws `W = X'μ`; returns the value and the number of proposals used.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u32) {
        let mut tries = 0;
        loop {
            tries += 1;
            let z: f64 = self.envelope.sample(rng);
            let w = (1.0 - (1.0 + self.b) * z) / (1.0 - (1.0 - self.b) * z);
            let u: f64 = rng.gen();
            if self.kappa * w + self.pm1 * (1.0 - self.x0 * w).ln() - self.c >= u.ln() {
                return (w, tries);
            }
        }
    }
}

fn vmf_rows<R: Rng + ?Sized>(rng: &mut R, n: usize, mu: &[f64], kappa: f64, out: &mut [f64]) -> Result<()> {
    let p = mu.len();
    if kappa == 0.0 {
        out.chunks_exact_mut(p).for_each(|row| uniform_unit(rng, row));
        return Ok(());
    }
    let cos = VmfCosine::new(p, kappa)?;
    let frame = TangentFrame::new(mu)?;
    let mut u = vec![0.0; p - 1];
    let mut proposals = 0u64;
    for row in out.chunks_exact_mut(p) {
        let (w, tries) = cos.draw(rng);
        proposals += u64::from(tries);
        uniform_unit(rng, &mut u);
        frame.compose_into(w, &u, row);
    }
    log::trace!("vMF(kappa = {kappa}, p = {p}): acceptance rate {:.3}", n as f64 / proposals as f64);
    Ok(())
}

/// `n` iid vMF(μ, κ) points; `μ` is a unit vector in `R^{d+1}`.
pub fn sample_vmf<R: Rng + ?Sized>(rng: &mut R, n: usize, mu: &[f64], kappa: f64) -> Result<SphereSample> {
    check_unit(mu, "vMF location")?;
    if n == 0 || mu.len() < 2 {
        return domain("sample_vmf needs n >= 1 and a location in R^p, p >= 2");
    }
    let mut data = vec![0.0; n * mu.len()];
    vmf_rows(rng, n, mu, kappa, &mut data)?;
    Ok(SphereSample::from_unit_rows(data, n, mu.len() - 1))
}

/// Integrated vMF on `S^d`: one uniform location per call, then iid vMF draws.
pub fn sample_integrated_vmf<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, kappa: f64) -> Result<SphereSample> {
    if d == 0 {
        return domain("sphere dimension must be at least 1");
    }
    let mut theta = vec![0.0; d + 1];
    uniform_unit(rng, &mut theta);
    sample_vmf(rng, n, &theta, kappa)
}

/// Law `g` of the cosine `v = X'θ` in a tangent-normal model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CosineLaw {
    /// The cosine of a uniform point on `S^d`: density `∝ (1 − v²)^{d/2 − 1}`.
    #[default]
    ProjectedUniform,
    /// `v = 2B − 1` with `B ~ Beta(a, b)`.
    ScaledBeta { a: f64, b: f64 },
    /// The cosine of a vMF(κ) point on `S^d`: density `∝ e^{κv}(1 − v²)^{d/2 − 1}`.
    VonMises { kappa: f64 },
}

impl CosineLaw {
    fn beta_params(&self, d: usize) -> Option<(f64, f64)> {
        match *self {
            CosineLaw::ProjectedUniform => Some((d as f64 / 2.0, d as f64 / 2.0)),
            CosineLaw::ScaledBeta { a, b } => Some((a, b)),
            CosineLaw::VonMises { .. } => None,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if d == 0 {
            return domain("cosine law needs sphere dimension >= 1");
        }
        match *self {
            CosineLaw::ScaledBeta { a, b } if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) => {
                domain(format!("Beta parameters must be positive, got ({a}, {b})"))
            }
            CosineLaw::VonMises { kappa } if !(kappa >= 0.0 && kappa.is_finite()) => {
                domain(format!("vMF concentration must be finite and >= 0, got {kappa}"))
            }
            _ => Ok(()),
        }
    }

    /// Sampler for cosines of points on `S^d`.
    pub fn sampler(&self, d: usize) -> Result<CosineSampler> {
        self.validate(d)?;
        Ok(match self.beta_params(d) {
            Some((a, b)) => CosineSampler::Beta(Beta::new(a, b).map_err(|e| Error::Domain(e.to_string()))?),
            None => {
                let CosineLaw::VonMises { kappa } = *self else { unreachable!() };
                CosineSampler::Vmf(VmfCosine::new(d + 1, kappa)?)
            }
        })
    }

    /// `P(v ≤ t)` for cosines of points on `S^d`.
    pub fn cdf(&self, t: f64, d: usize) -> Result<f64> {
        self.validate(d)?;
        if t <= -1.0 {
            return Ok(0.0);
        }
        if t >= 1.0 {
            return Ok(1.0);
        }
        match self.beta_params(d) {
            Some((a, b)) => specfun::beta_inc(a, b, (1.0 + t) / 2.0),
            None => {
                let CosineLaw::VonMises { kappa } = *self else { unreachable!() };
                // t = cos φ: the density in φ is e^{κ(cos φ − 1)} sin^{d−1} φ on [0, π]
                let f = |phi: f64| (kappa * (phi.cos() - 1.0)).exp() * phi.sin().powi(d as i32 - 1);
                let total = quadrature::integrate(f, 0.0, std::f64::consts::PI, 1e-14, 1e-11)?;
                let upper = quadrature::integrate(f, t.acos(), std::f64::consts::PI, 1e-14, 1e-11)?;
                Ok((upper / total).clamp(0.0, 1.0))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum CosineSampler {
    Beta(Beta<f64>),
    Vmf(VmfCosine),
}

impl CosineSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CosineSampler::Beta(b) => 2.0 * b.sample(rng) - 1.0,
            CosineSampler::Vmf(v) => v.draw(rng).0,
        }
    }
}

/// Tangent vMF: `X = vθ + (1 − v²)^{1/2} Γ_θ U`, `v ~ g`, `U ~ vMF(μ, κ)` on
/// `S^{D−2}`; `θ ∈ R^D`, `μ ∈ R^{D−1}`.
pub fn sample_tangent_vmf<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    theta: &[f64],
    g: &CosineLaw,
    mu: &[f64],
    kappa: f64,
) -> Result<SphereSample> {
    let p = theta.len();
    if p < 3 || mu.len() + 1 != p {
        return Err(Error::DimensionMismatch(format!(
            "tangent vMF needs theta in R^D (D >= 3) and mu in R^(D-1); got {} and {}",
            p,
            mu.len()
        )));
    }
    check_unit(mu, "tangent vMF location")?;
    let frame = TangentFrame::new(theta)?;
    let cos = g.sampler(p - 1)?;
    let mut signs = vec![0.0; n * (p - 1)];
    vmf_rows(rng, n, mu, kappa, &mut signs)?;
    let mut data = vec![0.0; n * p];
    for (row, u) in data.chunks_exact_mut(p).zip(signs.chunks_exact(p - 1)) {
        let v = cos.draw(rng);
        frame.compose_into(v, u, row);
    }
    Ok(SphereSample::from_unit_rows(data, n, p - 1))
}

/// Integrated tangent vMF: `μ` uniform on `S^{D−2}` once per call.
pub fn sample_integrated_tangent_vmf<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    theta: &[f64],
    g: &CosineLaw,
    kappa: f64,
) -> Result<SphereSample> {
    if theta.len() < 3 {
        return domain("tangent vMF needs ambient dimension >= 3");
    }
    let mut mu = vec![0.0; theta.len() - 1];
    uniform_unit(rng, &mut mu);
    sample_tangent_vmf(rng, n, theta, g, &mu, kappa)
}

fn check_stable(beta: f64, gamma0: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) {
        return domain(format!("stable index beta must lie in (0, 2), got {beta}"));
    }
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return domain(format!("stable scale gamma0 must be positive, got {gamma0}"));
    }
    Ok(())
}

/// One draw of `A ~ S(β/2, 1, 2γ₀² cos(πβ/4)^{2/β}, 0)`, whose Laplace transform
/// is `E e^{−sA} = exp(−(2γ₀² s)^{β/2})`, by the Chambers–Mallows–Stuck
/// (Kanter) representation for `α = β/2 < 1`.
pub fn positive_stable_draw<R: Rng + ?Sized>(rng: &mut R, beta: f64, gamma0: f64) -> f64 {
    let alpha = beta / 2.0;
    loop {
        let u = std::f64::consts::PI * rng.gen::<f64>();
        let w: f64 = rng.sample(Exp1);
        if u == 0.0 || w == 0.0 {
            continue;
        }
        let s = (alpha * u).sin() / u.sin().powf(1.0 / alpha) * ((1.0 - alpha) * u).sin().powf((1.0 - alpha) / alpha)
            / w.powf((1.0 - alpha) / alpha);
        let a = 2.0 * gamma0 * gamma0 * s;
        if a > 0.0 && a.is_finite() {
            return a;
        }
    }
}

pub fn positive_stable<R: Rng + ?Sized>(rng: &mut R, n: usize, beta: f64, gamma0: f64) -> Result<Vec<f64>> {
    check_stable(beta, gamma0)?;
    Ok((0..n).map(|_| positive_stable_draw(rng, beta, gamma0)).collect())
}

/// Lower Cholesky factor of a symmetric matrix (row-major).
pub fn cholesky(a: &[f64], p: usize) -> Result<Vec<f64>> {
    if a.len() != p * p {
        return Err(Error::DimensionMismatch(format!("{} entries do not form a {p}x{p} matrix", a.len())));
    }
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let s = a[i * p + j] - dot(&l[i * p..i * p + j], &l[j * p..j * p + j]);
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite { pivot: i });
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Ok(l)
}

/// Covariance (or scale) matrix of a Gaussian-based model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Covariance {
    #[default]
    Identity,
    /// `c · I`.
    Scaled {
        c: f64,
    },
    /// `diag(0.5 × ⌊pd⌋, 1.5 × (d − ⌊pd⌋))`.
    SigmaP {
        p: f64,
    },
    /// Unit diagonal and `rho` off the diagonal.
    Equicorrelated {
        rho: f64,
    },
    Diagonal {
        values: Vec<f64>,
    },
    /// Row-major `dim × dim` matrix.
    Full {
        values: Vec<f64>,
    },
}

/// `Σ^{1/2}`-type factor applied to standard normal vectors.
#[derive(Clone, Debug)]
pub enum CovFactor {
    Scale(f64),
    Diagonal(Vec<f64>),
    /// `√(1−ρ) z + √ρ z₀ 1`, exact for the equicorrelated matrix.
    Equicorrelated {
        a: f64,
        b: f64,
    },
    Lower(Vec<f64>),
}

impl Covariance {
    pub fn factor(&self, dim: usize) -> Result<CovFactor> {
        Ok(match self {
            Covariance::Identity => CovFactor::Scale(1.0),
            Covariance::Scaled { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::NotPositiveDefinite { pivot: 0 });
                }
                CovFactor::Scale(c.sqrt())
            }
            Covariance::SigmaP { p } => {
                if !(0.0..=1.0).contains(p) {
                    return domain(format!("Sigma_p needs p in [0, 1], got {p}"));
                }
                let low = (p * dim as f64).floor() as usize;
                CovFactor::Diagonal((0..dim).map(|i| if i < low { 0.5f64.sqrt() } else { 1.5f64.sqrt() }).collect())
            }
            Covariance::Equicorrelated { rho } => {
                if !(0.0..1.0).contains(rho) {
                    // negative correlations fall back to a general factorization
                    let mut m = vec![*rho; dim * dim];
                    (0..dim).for_each(|i| m[i * dim + i] = 1.0);
                    return Ok(CovFactor::Lower(cholesky(&m, dim)?));
                }
                CovFactor::Equicorrelated { a: (1.0 - rho).sqrt(), b: rho.sqrt() }
            }
            Covariance::Diagonal { values } => {
                if values.len() != dim {
                    return Err(Error::DimensionMismatch(format!("{} diagonal entries for dim {dim}", values.len())));
                }
                if let Some(i) = values.iter().position(|v| !(*v > 0.0)) {
                    return Err(Error::NotPositiveDefinite { pivot: i });
                }
                CovFactor::Diagonal(values.iter().map(|v| v.sqrt()).collect())
            }
            Covariance::Full { values } => {
                for i in 0..dim {
                    for j in 0..i {
                        if values.len() == dim * dim && (values[i * dim + j] - values[j * dim + i]).abs() > 1e-12 {
                            return domain("covariance matrix is not symmetric");
                        }
                    }
                }
                CovFactor::Lower(cholesky(values, dim)?)
            }
        })
    }

    /// Diagonal entries of the matrix, used to build the skewing normalization.
    fn diag(&self, dim: usize) -> Vec<f64> {
        match self {
            Covariance::Identity | Covariance::Equicorrelated { .. } => vec![1.0; dim],
            Covariance::Scaled { c } => vec![*c; dim],
            Covariance::SigmaP { p } => {
                let low = (p * dim as f64).floor() as usize;
                (0..dim).map(|i| if i < low { 0.5 } else { 1.5 }).collect()
            }
            Covariance::Diagonal { values } => values.clone(),
            Covariance::Full { values } => (0..dim).map(|i| values[i * dim + i]).collect(),
        }
    }
}

impl CovFactor {
    /// Replaces a standard normal vector `z` by `L z`.
    pub fn apply(&self, z: &mut [f64], scratch: &mut Vec<f64>) {
        match self {
            CovFactor::Scale(s) => {
                if *s != 1.0 {
                    z.iter_mut().for_each(|v| *v *= s);
                }
            }
            CovFactor::Diagonal(s) => z.iter_mut().zip(s).for_each(|(v, s)| *v *= s),
            CovFactor::Equicorrelated { a, b } => {
                // the shared factor is carried in the scratch buffer's first slot
                let z0 = scratch.first().copied().unwrap_or(0.0);
                z.iter_mut().for_each(|v| *v = a * *v + b * z0);
            }
            CovFactor::Lower(l) => {
                let p = z.len();
                scratch.clear();
                scratch.extend_from_slice(z);
                for i in 0..p {
                    z[i] = dot(&l[i * p..i * p + i + 1], &scratch[..i + 1]);
                }
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut Vec<f64>) {
        gaussian_vec(rng, out);
        if let CovFactor::Equicorrelated { .. } = self {
            scratch.clear();
            scratch.push(rng.sample(StandardNormal));
        }
        self.apply(out, scratch);
    }
}

/// `n` iid `N(0, Σ)` rows in `R^dim`.
pub fn sample_mvnormal<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize, cov: &Covariance) -> Result<Points> {
    let f = cov.factor(dim)?;
    let mut data = vec![0.0; n * dim];
    let mut scratch = Vec::new();
    data.chunks_exact_mut(dim).for_each(|row| f.draw(rng, row, &mut scratch));
    Points::new(data, n, dim)
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return domain(format!("degrees of freedom must be positive, got {nu}"));
    }
    Ok(())
}

/// Centered multivariate t: `Z (ν/W)^{1/2}`, `Z ~ N(0, S)`, `W ~ χ²_ν`.
pub fn sample_mvt<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize, nu: f64, scale: &Covariance) -> Result<Points> {
    check_nu(nu)?;
    let f = scale.factor(dim)?;
    let chi = ChiSquared::new(nu).map_err(|e| Error::Domain(e.to_string()))?;
    let mut data = vec![0.0; n * dim];
    let mut scratch = Vec::new();
    for row in data.chunks_exact_mut(dim) {
        f.draw(rng, row, &mut scratch);
        let w: f64 = chi.sample(rng);
        let m = (nu / w).sqrt();
        row.iter_mut().for_each(|v| *v *= m);
    }
    Points::new(data, n, dim)
}

/// Skew-t by additive hidden truncation: with `U ~ N(0, Ω)` and an independent
/// `E ~ N(0, 1)`, `Z = U` if `ξ'ω^{−1}U + E > 0` and `−U` otherwise
/// (`ω = diag(Ω)^{1/2}`), then `X = Z (ν/W)^{1/2}`. `xi` is zero-padded to `dim`.
pub fn sample_skew_t<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    dim: usize,
    nu: f64,
    omega: &Covariance,
    xi: &[f64],
) -> Result<Points> {
    check_nu(nu)?;
    if xi.len() > dim {
        return Err(Error::DimensionMismatch(format!("skewing vector of length {} exceeds dim {dim}", xi.len())));
    }
    let f = omega.factor(dim)?;
    let diag = omega.diag(dim);
    let alpha: Vec<f64> = xi.iter().zip(&diag).map(|(x, w)| x / w.sqrt()).collect();
    let chi = ChiSquared::new(nu).map_err(|e| Error::Domain(e.to_string()))?;
    let mut data = vec![0.0; n * dim];
    let mut scratch = Vec::new();
    for row in data.chunks_exact_mut(dim) {
        f.draw(rng, row, &mut scratch);
        let e: f64 = rng.sample(StandardNormal);
        let proj = dot(&alpha, &row[..alpha.len()]);
        let w: f64 = chi.sample(rng);
        let m = (nu / w).sqrt() * if proj + e > 0.0 { 1.0 } else { -1.0 };
        row.iter_mut().for_each(|v| *v *= m);
    }
    Points::new(data, n, dim)
}

/// `χ²_d` quantile of `Φ(z)`, evaluated from the nearer tail.
fn chisq_quantile_of_normal(d: usize, z: f64) -> Result<f64> {
    let a = d as f64 / 2.0;
    Ok(2.0 * if z <= 0.0 { specfun::inv_gamma_p(a, normal_cdf(z))? } else { specfun::inv_gamma_q(a, normal_sf(z))? })
}

/// DMN(ρ): `Y ~ N(0, I_d)`, `Z = ρ'Y + (1 − ‖ρ‖²)^{1/2} E` with `ρ_k = ρ^k`,
/// `R = [F_{χ²_d}^{−1}(Φ(Z))]^{1/2}`, output `R Y/‖Y‖`.
pub fn sample_dmn<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize, rho: f64) -> Result<Points> {
    if !(0.0..=1.0).contains(&rho) {
        return domain(format!("DMN needs rho in [0, 1], got {rho}"));
    }
    let weights: Vec<f64> = (1..=dim as i32).map(|k| rho.powi(k)).collect();
    let norm2 = dot(&weights, &weights);
    if norm2 > 1.0 {
        return Err(Error::NotPositiveDefinite { pivot: 0 });
    }
    let resid = (1.0 - norm2).sqrt();
    let mut data = vec![0.0; n * dim];
    for row in data.chunks_exact_mut(dim) {
        loop {
            gaussian_vec(rng, row);
            if dot(row, row) > 0.0 {
                break;
            }
        }
        let e: f64 = rng.sample(StandardNormal);
        let z = dot(&weights, row) + resid * e;
        let r = chisq_quantile_of_normal(dim, z)?.sqrt();
        let scale = r / dot(row, row).sqrt();
        row.iter_mut().for_each(|v| *v *= scale);
    }
    Points::new(data, n, dim)
}

/// A parameter that is either a number or the model dimension (`"d"`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Df {
    Value(f64),
    Dim,
}

impl Df {
    pub fn resolve(self, dim: usize) -> f64 {
        match self {
            Df::Value(v) => v,
            Df::Dim => dim as f64,
        }
    }
}

impl Serialize for Df {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Df::Value(v) => s.serialize_f64(*v),
            Df::Dim => s.serialize_str("d"),
        }
    }
}

impl<'de> Deserialize<'de> for Df {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Df::Value(v)),
            Raw::Int(v) => Ok(Df::Value(v as f64)),
            Raw::Text(t) if t == "d" => Ok(Df::Dim),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"d\", got {t:?}"))),
        }
    }
}

/// Concentration: a fixed value, or the local-alternative rate
/// `κ = τ d^{3/4}/√n` (with `d` the dimension of the sphere carrying the vMF).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Kappa {
    Fixed(f64),
    Local { tau2: f64 },
}

impl Kappa {
    pub fn resolve(self, n: usize, sphere_dim: usize) -> f64 {
        match self {
            Kappa::Fixed(k) => k,
            Kappa::Local { tau2 } => tau2.sqrt() * (sphere_dim as f64).powf(0.75) / (n as f64).sqrt(),
        }
    }
}

/// Positive scalar multiplying each row of a [`ModelSpec::Product`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarLaw {
    /// `[χ²_df]^{1/2}`.
    SqrtChiSq {
        df: Df,
    },
    ChiSq {
        df: Df,
    },
    /// Shape `k`, scale `θ`.
    Gamma {
        shape: f64,
        scale: f64,
    },
    /// `[scale · F_{d1,d2}]^{1/2}`.
    SqrtScaledF {
        d1: Df,
        d2: f64,
        scale: Df,
    },
    /// `[S(β)]^{1/2}`.
    SqrtPositiveStable {
        beta: f64,
        #[serde(default = "one")]
        gamma0: f64,
    },
    /// `|Ca(location, scale)|`.
    AbsCauchy {
        location: f64,
        scale: f64,
    },
    /// `|t_df|`.
    AbsT {
        df: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug)]
pub enum ScalarSampler {
    SqrtChiSq(ChiSquared<f64>),
    ChiSq(ChiSquared<f64>),
    Gamma(Gamma<f64>),
    SqrtScaledF(FisherF<f64>, f64),
    SqrtPositiveStable(f64, f64),
    AbsCauchy(Cauchy<f64>),
    AbsT(StudentT<f64>),
}

impl ScalarLaw {
    pub fn sampler(&self, dim: usize) -> Result<ScalarSampler> {
        let de = |e: &dyn std::fmt::Display| Error::Domain(format!("{self:?}: {e}"));
        Ok(match *self {
            ScalarLaw::SqrtChiSq { df } => {
                ScalarSampler::SqrtChiSq(ChiSquared::new(df.resolve(dim)).map_err(|e| de(&e))?)
            }
            ScalarLaw::ChiSq { df } => ScalarSampler::ChiSq(ChiSquared::new(df.resolve(dim)).map_err(|e| de(&e))?),
            ScalarLaw::Gamma { shape, scale } => ScalarSampler::Gamma(Gamma::new(shape, scale).map_err(|e| de(&e))?),
            ScalarLaw::SqrtScaledF { d1, d2, scale } => {
                let s = scale.resolve(dim);
                if !(s > 0.0) {
                    return domain("F scale must be positive");
                }
                ScalarSampler::SqrtScaledF(FisherF::new(d1.resolve(dim), d2).map_err(|e| de(&e))?, s)
            }
            ScalarLaw::SqrtPositiveStable { beta, gamma0 } => {
                check_stable(beta, gamma0)?;
                ScalarSampler::SqrtPositiveStable(beta, gamma0)
            }
            ScalarLaw::AbsCauchy { location, scale } => {
                ScalarSampler::AbsCauchy(Cauchy::new(location, scale).map_err(|e| de(&e))?)
            }
            ScalarLaw::AbsT { df } => ScalarSampler::AbsT(StudentT::new(df).map_err(|e| de(&e))?),
        })
    }
}

impl ScalarSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = match self {
                ScalarSampler::SqrtChiSq(c) => c.sample(rng).sqrt(),
                ScalarSampler::ChiSq(c) => c.sample(rng),
                ScalarSampler::Gamma(g) => g.sample(rng),
                ScalarSampler::SqrtScaledF(f, s) => (s * f.sample(rng)).sqrt(),
                ScalarSampler::SqrtPositiveStable(b, g) => positive_stable_draw(rng, *b, *g).sqrt(),
                ScalarSampler::AbsCauchy(c) => c.sample(rng).abs(),
                ScalarSampler::AbsT(t) => t.sample(rng).abs(),
            };
            // a zero radius would leave the direction undefined downstream
            if v > 0.0 && v.is_finite() {
                return v;
            }
        }
    }
}

/// Declarative description of a data-generating model, independent of `(n, dim)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    UniformSphere,
    /// vMF on `S^{dim−1}`; `mu` defaults to the first axis.
    Vmf {
        kappa: Kappa,
        #[serde(default)]
        mu: Option<Vec<f64>>,
    },
    IntegratedVmf {
        kappa: Kappa,
    },
    TangentVmf {
        kappa: Kappa,
        #[serde(default)]
        g: CosineLaw,
        #[serde(default)]
        theta: Option<Vec<f64>>,
        #[serde(default)]
        mu: Option<Vec<f64>>,
    },
    IntegratedTangentVmf {
        kappa: Kappa,
        #[serde(default)]
        g: CosineLaw,
        #[serde(default)]
        theta: Option<Vec<f64>>,
    },
    MvNormal {
        #[serde(default)]
        cov: Covariance,
    },
    Mvt {
        nu: f64,
        #[serde(default)]
        scale: Covariance,
    },
    /// `xi` lists the leading entries of the skewing vector (zero-padded).
    SkewT {
        nu: f64,
        #[serde(default)]
        omega: Covariance,
        #[serde(default)]
        xi: Vec<f64>,
    },
    Dmn {
        rho: f64,
    },
    /// `X · Y` with `X` from `base` and an independent positive `Y`.
    Product {
        base: Box<ModelSpec>,
        radius: ScalarLaw,
    },
}

impl ModelSpec {
    /// Whether every draw lies on the unit sphere.
    pub fn is_spherical(&self) -> bool {
        matches!(
            self,
            ModelSpec::UniformSphere
                | ModelSpec::Vmf { .. }
                | ModelSpec::IntegratedVmf { .. }
                | ModelSpec::TangentVmf { .. }
                | ModelSpec::IntegratedTangentVmf { .. }
        )
    }

    /// Validates parameters and precomputes factors for samples of `n` rows in `R^dim`.
    pub fn compile(&self, n: usize, dim: usize) -> Result<Sampler> {
        if n == 0 {
            return domain("sample size must be at least 1");
        }
        if dim < 2 && self.is_spherical() {
            return domain("sphere-valued models need dim >= 2");
        }
        let axis = |v: &Option<Vec<f64>>, p: usize, what: &str| -> Result<Vec<f64>> {
            match v {
                None => Ok(first_axis(p)),
                Some(v) if v.len() == p => {
                    check_unit(v, what)?;
                    Ok(v.clone())
                }
                Some(v) => Err(Error::DimensionMismatch(format!("{what} has length {} but must have {p}", v.len()))),
            }
        };
        if matches!(self, ModelSpec::TangentVmf { .. } | ModelSpec::IntegratedTangentVmf { .. }) && dim < 3 {
            return domain("tangent vMF models need dim >= 3");
        }
        let kind = match self {
            ModelSpec::UniformSphere => Compiled::Uniform,
            ModelSpec::Vmf { kappa, mu } => {
                let k = kappa.resolve(n, dim - 1);
                VmfCosine::new(dim, k)?;
                Compiled::Vmf { mu: axis(mu, dim, "mu")?, kappa: k }
            }
            ModelSpec::IntegratedVmf { kappa } => {
                let k = kappa.resolve(n, dim - 1);
                VmfCosine::new(dim, k)?;
                Compiled::IntegratedVmf { kappa: k }
            }
            ModelSpec::TangentVmf { kappa, g, theta, mu } => {
                let k = kappa.resolve(n, dim - 2);
                g.sampler(dim - 1)?;
                Compiled::TangentVmf {
                    theta: axis(theta, dim, "theta")?,
                    mu: Some(axis(mu, dim - 1, "mu")?),
                    g: g.clone(),
                    kappa: k,
                }
            }
            ModelSpec::IntegratedTangentVmf { kappa, g, theta } => {
                let k = kappa.resolve(n, dim - 2);
                g.sampler(dim - 1)?;
                Compiled::TangentVmf { theta: axis(theta, dim, "theta")?, mu: None, g: g.clone(), kappa: k }
            }
            ModelSpec::MvNormal { cov } => Compiled::Normal(cov.factor(dim)?),
            ModelSpec::Mvt { nu, scale } => {
                check_nu(*nu)?;
                Compiled::Mvt { nu: *nu, factor: scale.factor(dim)? }
            }
            ModelSpec::SkewT { nu, omega, xi } => {
                check_nu(*nu)?;
                omega.factor(dim)?;
                if xi.len() > dim {
                    return Err(Error::DimensionMismatch("skewing vector longer than dim".into()));
                }
                Compiled::SkewT { nu: *nu, omega: omega.clone(), xi: xi.clone() }
            }
            ModelSpec::Dmn { rho } => Compiled::Dmn(*rho),
            ModelSpec::Product { base, radius } => {
                Compiled::Product(Box::new(base.compile(n, dim)?), radius.sampler(dim)?)
            }
        };
        Ok(Sampler { n, dim, kind })
    }
}

#[derive(Clone, Debug)]
enum Compiled {
    Uniform,
    Vmf { mu: Vec<f64>, kappa: f64 },
    IntegratedVmf { kappa: f64 },
    TangentVmf { theta: Vec<f64>, mu: Option<Vec<f64>>, g: CosineLaw, kappa: f64 },
    Normal(CovFactor),
    Mvt { nu: f64, factor: CovFactor },
    SkewT { nu: f64, omega: Covariance, xi: Vec<f64> },
    Dmn(f64),
    Product(Box<Sampler>, ScalarSampler),
}

/// A model compiled for fixed `(n, dim)`.
#[derive(Clone, Debug)]
pub struct Sampler {
    n: usize,
    dim: usize,
    kind: Compiled,
}

impl Sampler {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draws `n` rows in `R^dim`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Points> {
        let (n, dim) = (self.n, self.dim);
        match &self.kind {
            Compiled::Uniform => Ok(uniform_sphere(rng, n, dim - 1)?.into()),
            Compiled::Vmf { mu, kappa } => Ok(sample_vmf(rng, n, mu, *kappa)?.into()),
            Compiled::IntegratedVmf { kappa } => Ok(sample_integrated_vmf(rng, n, dim - 1, *kappa)?.into()),
            Compiled::TangentVmf { theta, mu: Some(mu), g, kappa } => {
                Ok(sample_tangent_vmf(rng, n, theta, g, mu, *kappa)?.into())
            }
            Compiled::TangentVmf { theta, mu: None, g, kappa } => {
                Ok(sample_integrated_tangent_vmf(rng, n, theta, g, *kappa)?.into())
            }
            Compiled::Normal(f) => {
                let mut data = vec![0.0; n * dim];
                let mut scratch = Vec::new();
                data.chunks_exact_mut(dim).for_each(|row| f.draw(rng, row, &mut scratch));
                Points::new(data, n, dim)
            }
            Compiled::Mvt { nu, factor } => {
                let chi = ChiSquared::new(*nu).map_err(|e| Error::Domain(e.to_string()))?;
                let mut data = vec![0.0; n * dim];
                let mut scratch = Vec::new();
                for row in data.chunks_exact_mut(dim) {
                    factor.draw(rng, row, &mut scratch);
                    let w: f64 = chi.sample(rng);
                    let m = (nu / w).sqrt();
                    row.iter_mut().for_each(|v| *v *= m);
                }
                Points::new(data, n, dim)
            }
            Compiled::SkewT { nu, omega, xi } => sample_skew_t(rng, n, dim, *nu, omega, xi),
            Compiled::Dmn(rho) => sample_dmn(rng, n, dim, *rho),
            Compiled::Product(base, radius) => {
                let mut data = base.draw(rng)?.into_vec();
                for row in data.chunks_exact_mut(dim) {
                    let y = radius.draw(rng);
                    row.iter_mut().for_each(|v| *v *= y);
                }
                Points::new(data, n, dim)
            }
        }
    }

    /// Draws `n` points and returns them as a sample on `S^{dim−1}`
    /// (Euclidean draws are projected onto the sphere).
    pub fn draw_sphere<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SphereSample> {
        let pts = self.draw(rng)?;
        SphereSample::normalized(pts.into_vec(), self.n, self.dim - 1)
    }
}
