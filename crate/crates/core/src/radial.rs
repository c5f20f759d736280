//! Radial goodness-of-fit: Anderson–Darling statistic and its limiting law,
//! radial null families, maximum-likelihood fits and the parametric bootstrap.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, FisherF, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature;
use crate::sampling::{positive_stable_draw, RngStream};
use crate::specfun::{self, beta_inc, gamma_p, lgamma};

const AD_TABLE: &str = include_str!("../data/ad_limit_cdf.txt");

/// Which variable follows the gamma law in [`RadialLaw::Gamma`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaVariable {
    Radius,
    SquaredRadius,
}

/// Law of the radius `‖X‖` of a spherically symmetric vector in `R^D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialLaw {
    /// `‖X‖² ~ χ²_D`.
    Normal,
    /// `‖X‖²/D ~ F_{D,ν}`.
    Student { nu: f64 },
    /// `‖X‖² = A·T`, `A ~ S(β/2, 1, 2γ₀² cos(πβ/4)^{2/β}, 0)`, `T ~ χ²_D`.
    Stable { beta: f64, gamma0: f64 },
    /// Shape `k` and scale `θ` for the radius or for its square.
    Gamma { shape: f64, scale: f64, variable: GammaVariable },
}

/// A fully specified radial null in dimension `dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialNull {
    pub law: RadialLaw,
    pub dim: usize,
}

impl RadialNull {
    pub fn new(law: RadialLaw, dim: usize) -> Result<Self> {
        if dim == 0 {
            return domain("radial null needs dimension >= 1");
        }
        let ok = match law {
            RadialLaw::Normal => true,
            RadialLaw::Student { nu } => nu > 0.0 && nu.is_finite(),
            RadialLaw::Stable { beta, gamma0 } => beta > 0.0 && beta < 2.0 && gamma0 > 0.0 && gamma0.is_finite(),
            RadialLaw::Gamma { shape, scale, .. } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
        };
        if !ok {
            return domain(format!("invalid radial law {law:?}"));
        }
        Ok(Self { law, dim })
    }

    /// `P(‖X‖ ≤ r)`.
    pub fn cdf(&self, r: f64) -> Result<f64> {
        if r.is_nan() {
            return domain("radius is NaN");
        }
        if r <= 0.0 {
            return Ok(0.0);
        }
        if r.is_infinite() {
            return Ok(1.0);
        }
        let half_d = self.dim as f64 / 2.0;
        let s = r * r;
        match self.law {
            RadialLaw::Normal => gamma_p(half_d, s / 2.0),
            RadialLaw::Student { nu } => beta_inc(half_d, nu / 2.0, s / (s + nu)),
            RadialLaw::Gamma { shape, scale, variable } => {
                let x = match variable {
                    GammaVariable::Radius => r,
                    GammaVariable::SquaredRadius => s,
                };
                gamma_p(shape, x / scale)
            }
            RadialLaw::Stable { beta, gamma0 } => stable_radius_cdf(s, self.dim, beta, gamma0),
        }
    }

    /// `n` iid radii.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        let d = self.dim as f64;
        let de = |e: &dyn fmt::Display| Error::Domain(e.to_string());
        Ok(match self.law {
            RadialLaw::Normal => {
                let c = ChiSquared::new(d).map_err(|e| de(&e))?;
                (0..n).map(|_| c.sample(rng).sqrt()).collect()
            }
            RadialLaw::Student { nu } => {
                let f = FisherF::new(d, nu).map_err(|e| de(&e))?;
                (0..n).map(|_| (d * f.sample(rng)).sqrt()).collect()
            }
            RadialLaw::Stable { beta, gamma0 } => {
                let c = ChiSquared::new(d).map_err(|e| de(&e))?;
                (0..n).map(|_| (positive_stable_draw(rng, beta, gamma0) * c.sample(rng)).sqrt()).collect()
            }
            RadialLaw::Gamma { shape, scale, variable } => {
                let g = Gamma::new(shape, scale).map_err(|e| de(&e))?;
                match variable {
                    GammaVariable::Radius => (0..n).map(|_| g.sample(rng)).collect(),
                    GammaVariable::SquaredRadius => (0..n).map(|_| g.sample(rng).sqrt()).collect(),
                }
            }
        })
    }
}

/// `P(A·T ≤ s)` with `T ~ χ²_D` and `A` positive stable.
///
/// For `β = 1`, `A = γ₀²/Z²` is Lévy, so `A·T/γ₀² = D·F_{D,1}` and the CDF is
/// `I_{s/(s+γ₀²)}(D/2, 1/2)`. Otherwise write `A = 2γ₀² S` with
/// `E e^{−uS} = e^{−u^α}`; Kanter's representation gives
/// `P(S ≤ x) = π^{−1} ∫_0^π exp(−a(u) x^{−α/(1−α)}) du` with
/// `a(u) = [sin(αu)^α sin((1−α)u)^{1−α} / sin u]^{1/(1−α)}`, and the `T`
/// expectation is taken on a log axis between extreme χ² quantiles.
pub fn stable_radius_cdf(s: f64, dim: usize, beta: f64, gamma0: f64) -> Result<f64> {
    if s <= 0.0 {
        return Ok(0.0);
    }
    let half_d = dim as f64 / 2.0;
    if (beta - 1.0).abs() < 1e-15 {
        let c = gamma0 * gamma0;
        return beta_inc(half_d, 0.5, s / (s + c));
    }
    let alpha = beta / 2.0;
    let p = alpha / (1.0 - alpha);
    let c = 2.0 * gamma0 * gamma0;
    let ln_a = |u: f64| {
        (alpha * (alpha * u).sin().ln() + (1.0 - alpha) * ((1.0 - alpha) * u).sin().ln() - u.sin().ln()) / (1.0 - alpha)
    };
    let lo = specfun::inv_gamma_p(half_d, 1e-15)?.ln() + std::f64::consts::LN_2;
    let hi = specfun::inv_gamma_q(half_d, 1e-15)?.ln() + std::f64::consts::LN_2;
    let ln_norm = half_d * 2f64.ln() + lgamma(half_d);
    let ln_cs = (c / s).ln();
    let mut inner_err = None;
    let outer = quadrature::integrate(
        |u| {
            if u <= 0.0 || u >= PI {
                return 0.0;
            }
            let la = ln_a(u);
            let r = quadrature::integrate(
                |x| {
                    let dens = (half_d * x - 0.5 * x.exp() - ln_norm).exp();
                    dens * (-(la + p * (ln_cs + x)).exp()).exp()
                },
                lo,
                hi,
                1e-13,
                1e-9,
            );
            match r {
                Ok(v) => v,
                Err(e) => {
                    inner_err = Some(e);
                    0.0
                }
            }
        },
        0.0,
        PI,
        1e-12,
        1e-8,
    )?;
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok((outer / PI).clamp(0.0, 1.0))
}

/// Anderson–Darling `A²` of probability-integral-transformed values.
pub fn ad_statistic_from_uniforms(u: &[f64]) -> Result<f64> {
    if u.is_empty() {
        return domain("Anderson-Darling statistic needs at least one value");
    }
    let mut v: Vec<f64> = u.iter().map(|x| x.clamp(1e-300, 1.0 - 1e-16)).collect();
    if v.iter().any(|x| x.is_nan()) {
        return domain("NaN in probability-integral transform");
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let nf = n as f64;
    let sum: f64 = (0..n).map(|i| (2.0 * i as f64 + 1.0) * (v[i].ln() + (1.0 - v[n - 1 - i]).ln())).sum();
    Ok(-nf - sum / nf)
}

/// `A²` of radii against a fully specified null.
pub fn ad_statistic(radii: &[f64], null: &RadialNull) -> Result<f64> {
    let u = radii.iter().map(|&r| null.cdf(r)).collect::<Result<Vec<f64>>>()?;
    ad_statistic_from_uniforms(&u)
}

fn ad_table() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut z = Vec::new();
        let mut f = Vec::new();
        for line in AD_TABLE.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let mut it = line.split_whitespace().map(|t| t.parse::<f64>().expect("numeric F_A table"));
            z.push(it.next().expect("z column"));
            f.push(it.next().expect("F column"));
        }
        (z, f)
    })
}

/// Limiting null CDF `F_A` of `A²`, by linear interpolation of the shipped
/// table on `[0, 12]`. Beyond the table the upper tail decays like `e^{−z}`,
/// the rate set by the largest weight (1/2) of the χ² series for `A²`.
pub fn ad_limit_cdf(z: f64) -> f64 {
    let (zs, fs) = ad_table();
    if !(z > 0.0) {
        return 0.0;
    }
    let last = zs.len() - 1;
    if z >= zs[last] {
        return 1.0 - (1.0 - fs[last]) * (-(z - zs[last])).exp();
    }
    let h = zs[1] - zs[0];
    let i = ((z / h) as usize).min(last - 1);
    let t = (z - zs[i]) / (zs[i + 1] - zs[i]);
    fs[i] + t * (fs[i + 1] - fs[i])
}

/// Upper-tail p-value `1 − F_A(z)`.
pub fn ad_limit_pvalue(z: f64) -> f64 {
    let (zs, fs) = ad_table();
    let last = zs.len() - 1;
    if z >= zs[last] {
        (1.0 - fs[last]) * (-(z - zs[last])).exp()
    } else {
        1.0 - ad_limit_cdf(z)
    }
}

/// Gamma maximum-likelihood fit `(shape, scale)` by safeguarded Newton on
/// `ln k − ψ(k) = ln(mean) − mean(ln x)`.
pub fn mle_gamma(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() < 2 {
        return Err(Error::Estimation("gamma fit needs at least two observations".into()));
    }
    if x.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Estimation("gamma fit needs positive finite data".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mean_ln = x.iter().map(|v| v.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_ln;
    if !(s > 1e-14) {
        return Err(Error::Estimation("gamma fit is degenerate (data are constant)".into()));
    }
    let mut k = (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..200 {
        let f = k.ln() - specfun::digamma_unchecked(k) - s;
        let df = 1.0 / k - specfun::trigamma(k)?;
        let mut next = k - f / df;
        if !(next > 0.0) {
            next = k / 2.0;
        }
        let done = (next - k).abs() <= 1e-12 * k;
        k = next;
        if done {
            return Ok((k, mean / k));
        }
    }
    Err(Error::Estimation(format!("gamma Newton iteration did not converge (s = {s})")))
}

fn f_loglik(x_over: &[f64], d1: f64, ln_nu: f64) -> f64 {
    let nu = ln_nu.exp();
    let n = x_over.len() as f64;
    let c = lgamma((d1 + nu) / 2.0) - lgamma(d1 / 2.0) - lgamma(nu / 2.0) + d1 / 2.0 * (d1 / nu).ln();
    let mut acc = 0.0;
    for &x in x_over {
        acc += (d1 / 2.0 - 1.0) * x.ln() - (d1 + nu) / 2.0 * (d1 * x / nu).ln_1p();
    }
    n * c + acc
}

/// Lower and upper limits of the degrees-of-freedom search.
pub const NU_RANGE: (f64, f64) = (0.1, 1e3);

/// Student degrees of freedom by golden-section maximization of the
/// `F_{D,ν}` log-likelihood of `r²/D` over `ν ∈ [0.1, 1000]` (on a log scale).
pub fn mle_student_nu(radii: &[f64], dim: usize) -> Result<f64> {
    if radii.len() < 2 {
        return Err(Error::Estimation("degrees-of-freedom fit needs at least two radii".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Estimation("degrees-of-freedom fit needs positive finite radii".into()));
    }
    let d = dim as f64;
    let x: Vec<f64> = radii.iter().map(|r| r * r / d).collect();
    let obj = |t: f64| -f_loglik(&x, d, t);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (NU_RANGE.0.ln(), NU_RANGE.1.ln());
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (obj(c), obj(e));
    for _ in 0..200 {
        if (b - a).abs() < 1e-10 {
            break;
        }
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = obj(e);
        }
    }
    let t = 0.5 * (a + b);
    if !obj(t).is_finite() {
        return Err(Error::Estimation("degrees-of-freedom likelihood is not finite".into()));
    }
    Ok(t.exp())
}

/// Parametric radial family with free parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialFamily {
    /// Both gamma parameters free.
    Gamma(GammaVariable),
    /// Student radius with free degrees of freedom.
    Student,
}

impl RadialFamily {
    /// Maximum-likelihood fit on the radii.
    pub fn estimate(&self, radii: &[f64], dim: usize) -> Result<RadialNull> {
        let law = match *self {
            RadialFamily::Gamma(variable) => {
                let (shape, scale) = match variable {
                    GammaVariable::Radius => mle_gamma(radii)?,
                    GammaVariable::SquaredRadius => mle_gamma(&radii.iter().map(|r| r * r).collect::<Vec<_>>())?,
                };
                RadialLaw::Gamma { shape, scale, variable }
            }
            RadialFamily::Student => RadialLaw::Student { nu: mle_student_nu(radii, dim)? },
        };
        RadialNull::new(law, dim).map_err(|e| Error::Estimation(e.to_string()))
    }
}

/// Simple or composite radial hypothesis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialHypothesis {
    Simple(RadialLaw),
    Composite(RadialFamily),
}

impl fmt::Display for RadialHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialHypothesis::Simple(RadialLaw::Normal) => write!(f, "normal"),
            RadialHypothesis::Simple(RadialLaw::Student { nu }) => write!(f, "student:{nu}"),
            RadialHypothesis::Simple(RadialLaw::Stable { beta, gamma0 }) if *gamma0 == 1.0 => {
                write!(f, "stable:{beta}")
            }
            RadialHypothesis::Simple(RadialLaw::Stable { beta, gamma0 }) => write!(f, "stable:{beta},{gamma0}"),
            RadialHypothesis::Simple(RadialLaw::Gamma { shape, scale, variable: GammaVariable::Radius }) => {
                write!(f, "gamma:{shape},{scale}")
            }
            RadialHypothesis::Simple(RadialLaw::Gamma { shape, scale, variable: GammaVariable::SquaredRadius }) => {
                write!(f, "gamma-sq:{shape},{scale}")
            }
            RadialHypothesis::Composite(RadialFamily::Student) => write!(f, "student-est"),
            RadialHypothesis::Composite(RadialFamily::Gamma(GammaVariable::Radius)) => write!(f, "gamma-est"),
            RadialHypothesis::Composite(RadialFamily::Gamma(GammaVariable::SquaredRadius)) => write!(f, "gamma-sq-est"),
        }
    }
}

impl FromStr for RadialHypothesis {
    type Err = Error;

    /// `normal`, `student:NU`, `stable:BETA[,GAMMA0]`, `gamma:K,THETA`,
    /// `gamma-sq:K,THETA`, `student-est`, `gamma-est`, `gamma-sq-est`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        let nums = |a: Option<&str>, want: &[usize]| -> Result<Vec<f64>> {
            let a = a.ok_or_else(|| Error::Domain(format!("family `{s}` needs numeric arguments")))?;
            let v = a
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Domain(format!("bad number in family `{s}`")))?;
            if !want.contains(&v.len()) {
                return domain(format!("family `{s}` takes {want:?} arguments"));
            }
            Ok(v)
        };
        let no_arg =
            |a: Option<&str>| if a.is_some() { domain(format!("family `{s}` takes no argument")) } else { Ok(()) };
        let h = match head {
            "normal" => {
                no_arg(arg)?;
                RadialHypothesis::Simple(RadialLaw::Normal)
            }
            "student" => RadialHypothesis::Simple(RadialLaw::Student { nu: nums(arg, &[1])?[0] }),
            "stable" => {
                let v = nums(arg, &[1, 2])?;
                RadialHypothesis::Simple(RadialLaw::Stable { beta: v[0], gamma0: v.get(1).copied().unwrap_or(1.0) })
            }
            "gamma" | "gamma-sq" => {
                let v = nums(arg, &[2])?;
                let variable = if head == "gamma" { GammaVariable::Radius } else { GammaVariable::SquaredRadius };
                RadialHypothesis::Simple(RadialLaw::Gamma { shape: v[0], scale: v[1], variable })
            }
            "student-est" => {
                no_arg(arg)?;
                RadialHypothesis::Composite(RadialFamily::Student)
            }
            "gamma-est" => {
                no_arg(arg)?;
                RadialHypothesis::Composite(RadialFamily::Gamma(GammaVariable::Radius))
            }
            "gamma-sq-est" => {
                no_arg(arg)?;
                RadialHypothesis::Composite(RadialFamily::Gamma(GammaVariable::SquaredRadius))
            }
            _ => return domain(format!("unknown radial family `{s}`")),
        };
        if let RadialHypothesis::Simple(law) = h {
            RadialNull::new(law, 1)?;
        }
        Ok(h)
    }
}

impl Serialize for RadialHypothesis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RadialHypothesis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Bootstrap size and random streams: draw `j` uses stream `offset + j·stride`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub offset: u64,
    pub stride: u64,
}

impl BootstrapConfig {
    /// Streams `1..=B` of `seed` (stream 0 is left to the caller).
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self { replicates, seed, offset: 1, stride: 1 }
    }

    /// Streams `M + j·M + r` for replicate `r` of an `M`-replicate experiment.
    pub fn for_replicate(replicates: usize, seed: u64, total: u64, replicate: u64) -> Self {
        Self { replicates, seed, offset: total + replicate, stride: total }
    }

    pub fn stream(&self, j: usize) -> RngStream {
        RngStream::new(self.seed, self.offset + j as u64 * self.stride)
    }
}

/// Result of a parametric bootstrap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapOutcome {
    pub p_value: f64,
    /// `A_n` under the fitted parameters.
    pub statistic: f64,
    pub estimate: RadialNull,
    /// Bootstrap draws whose first fit failed.
    pub retries: usize,
    /// Draws whose retry failed too; each counts as exceeding `A_n`.
    pub failures: usize,
}

/// Parametric bootstrap p-value `(1/B) Σ_j 1{Ã_j > A_n}`.
///
/// Fit on the data, compute `A_n` at the fit, then for each `j` draw `n` radii
/// from the fitted law, refit and compute `Ã_j` at the refit. A draw whose refit
/// fails is redrawn once from the same stream; a second failure is counted as
/// exceeding, which keeps the test conservative.
pub fn bootstrap_pvalue(
    radii: &[f64],
    family: &RadialFamily,
    dim: usize,
    cfg: &BootstrapConfig,
) -> Result<BootstrapOutcome> {
    if cfg.replicates == 0 {
        return domain("bootstrap needs at least one replicate");
    }
    let n = radii.len();
    let estimate = family.estimate(radii, dim)?;
    let statistic = ad_statistic(radii, &estimate)?;
    let (mut exceed, mut retries, mut failures) = (0usize, 0usize, 0usize);
    for j in 0..cfg.replicates {
        let mut rng = cfg.stream(j).rng();
        let mut attempt = || -> Result<f64> {
            let star = estimate.sample(&mut rng, n)?;
            let refit = family.estimate(&star, dim)?;
            ad_statistic(&star, &refit)
        };
        let a = match attempt() {
            Ok(a) => Some(a),
            Err(first) => {
                retries += 1;
                match attempt() {
                    Ok(a) => Some(a),
                    Err(second) => {
                        log::warn!(
                            "bootstrap draw {j}: estimation failed twice ({first}; {second}); counted as exceeding"
                        );
                        failures += 1;
                        None
                    }
                }
            }
        };
        if a.is_none_or(|a| a > statistic) {
            exceed += 1;
        }
    }
    Ok(BootstrapOutcome { p_value: exceed as f64 / cfg.replicates as f64, statistic, estimate, retries, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;

    #[test]
    fn ad_single_value() {
        let a = ad_statistic_from_uniforms(&[0.5]).unwrap();
        assert!((a - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((a - 0.3863).abs() < 1e-4);
        assert!(ad_statistic_from_uniforms(&[]).is_err());
        // clamping keeps extreme values finite
        assert!(ad_statistic_from_uniforms(&[0.0, 1.0]).unwrap().is_finite());
    }

    #[test]
    fn ad_limit_table_points() {
        assert_eq!(ad_limit_cdf(0.0), 0.0);
        assert!((ad_limit_cdf(2.492) - 0.95).abs() < 5e-4);
        assert!((ad_limit_cdf(3.878) - 0.99).abs() < 5e-4);
        let mut prev = 0.0;
        for i in 0..3000 {
            let v = ad_limit_cdf(i as f64 * 0.005);
            assert!(v >= prev);
            prev = v;
        }
        assert!(ad_limit_cdf(40.0) > 1.0 - 1e-15);
        assert!(ad_limit_pvalue(50.0) > 0.0);
        assert!((ad_limit_pvalue(2.492) + ad_limit_cdf(2.492) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normal_radius_closed_form() {
        let null = RadialNull::new(RadialLaw::Normal, 2).unwrap();
        for r in [0.1f64, 0.9, 2.5] {
            assert!((null.cdf(r).unwrap() - (1.0 - (-r * r / 2.0).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn student_radius_median() {
        // F_{2,2} has CDF x/(1+x); its median is 1, so r² = D·1 = 2
        let null = RadialNull::new(RadialLaw::Student { nu: 2.0 }, 2).unwrap();
        assert!((null.cdf(2f64.sqrt()).unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn stable_general_case_reduces_near_levy() {
        // the quadrature branch evaluated just off β = 1 tracks the closed form
        for (s, d) in [(3.0, 3usize), (40.0, 20), (0.8, 5)] {
            let exact = stable_radius_cdf(s, d, 1.0, 1.0).unwrap();
            let near = stable_radius_cdf(s, d, 1.0 + 1e-7, 1.0).unwrap();
            assert!((exact - near).abs() < 1e-6, "{s} {d}: {exact} vs {near}");
        }
    }

    #[test]
    fn stable_levy_scale() {
        // γ₀ = 2 gives A = 4/Z², so P(A·Z'² ≤ 2) = I_{2/6}(1/2, 1/2)
        let v = stable_radius_cdf(2.0, 1, 1.0, 2.0).unwrap();
        let exact = beta_inc(0.5, 0.5, 2.0 / 6.0).unwrap();
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn gamma_mle_examples() {
        let null =
            RadialNull::new(RadialLaw::Gamma { shape: 2.0, scale: 5.0, variable: GammaVariable::Radius }, 10).unwrap();
        let x = null.sample(&mut RngStream::new(8, 0).rng(), 10_000).unwrap();
        let (k, th) = mle_gamma(&x).unwrap();
        assert!((k - 2.0).abs() < 0.1 && (th - 5.0).abs() < 0.3, "{k} {th}");
        // the score equation holds at the fit
        let n = x.len() as f64;
        let s = (x.iter().sum::<f64>() / n).ln() - x.iter().map(|v| v.ln()).sum::<f64>() / n;
        assert!((k.ln() - specfun::digamma(k).unwrap() - s).abs() < 1e-10);
        assert!(matches!(mle_gamma(&[3.0; 10]), Err(Error::Estimation(_))));
    }

    #[test]
    fn student_mle_maximizes_likelihood() {
        let dim = 30;
        let null = RadialNull::new(RadialLaw::Student { nu: 5.0 }, dim).unwrap();
        let r = null.sample(&mut RngStream::new(10, 0).rng(), 2000).unwrap();
        let nu = mle_student_nu(&r, dim).unwrap();
        let x: Vec<f64> = r.iter().map(|v| v * v / dim as f64).collect();
        let best = f_loglik(&x, dim as f64, nu.ln());
        for t in [0.9, 0.99, 1.01, 1.1] {
            assert!(f_loglik(&x, dim as f64, (nu * t).ln()) <= best + 1e-8);
        }
        assert!((nu - 5.0).abs() < 1.0, "{nu}");
    }

    #[test]
    fn family_strings() {
        for s in [
            "normal",
            "student:5",
            "stable:1",
            "stable:0.8,2",
            "gamma:2,5",
            "gamma-sq:2,5",
            "student-est",
            "gamma-est",
            "gamma-sq-est",
        ] {
            let h: RadialHypothesis = s.parse().unwrap();
            assert_eq!(h.to_string(), s);
        }
        for bad in ["student", "stable:2", "gamma:1", "normal:3", "weibull"] {
            assert!(bad.parse::<RadialHypothesis>().is_err(), "{bad}");
        }
    }

    #[test]
    fn bootstrap_small_b_and_order_invariance() {
        let null =
            RadialNull::new(RadialLaw::Gamma { shape: 2.0, scale: 5.0, variable: GammaVariable::Radius }, 10).unwrap();
        let r = null.sample(&mut RngStream::new(3, 0).rng(), 60).unwrap();
        let fam = RadialFamily::Gamma(GammaVariable::Radius);
        let one = bootstrap_pvalue(&r, &fam, 10, &BootstrapConfig::new(1, 5)).unwrap();
        assert!(one.p_value == 0.0 || one.p_value == 1.0);
        let cfg = BootstrapConfig::new(50, 5);
        let a = bootstrap_pvalue(&r, &fam, 10, &cfg).unwrap();
        let mut rev = r.clone();
        rev.reverse();
        let b = bootstrap_pvalue(&rev, &fam, 10, &cfg).unwrap();
        assert_eq!(a.p_value, b.p_value);
        assert_eq!(a.failures, 0);
    }

    #[test]
    fn bootstrap_stream_layout() {
        let cfg = BootstrapConfig::for_replicate(200, 1, 300, 7);
        assert_eq!(cfg.stream(0).stream_index, 307);
        assert_eq!(cfg.stream(2).stream_index, 300 + 2 * 300 + 7);
    }
}
