//! Numerical self-checks of the special functions, kernels, limiting laws and
//! samplers against closed forms and independent simulations.
//!
//! Every check is deterministic given its seed and the whole suite runs in
//! well under a minute on one core.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::montecarlo::ks_one_sample;
use crate::quadrature::gauss_legendre;
use crate::radial::{ad_limit_cdf, ad_statistic_from_uniforms, GammaVariable, RadialLaw, RadialNull};
use crate::sampling::{positive_stable, uniform_sphere, RngStream};
use crate::sobolev::{dot, psi_kernel, sigma_n, WeightScheme};
use crate::specfun::{
    gegenbauer_eval, gegenbauer_norm, gegenbauer_norm_via_area, harmonic_dim, harmonic_dim_binomial, GegenbauerIndex,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Worst observed discrepancy (or KS distance, or |z|-score).
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value.is_finite() && value < tolerance }
    }
}

/// Gauss–Legendre rule mapped to `t ∈ [0, π]` with weights `sin^{d−1} t`, i.e.
/// the law of `cos t = XᵀY` on `S^d` up to normalization.
fn angular_rule(d: usize, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(nodes);
    let half = std::f64::consts::FRAC_PI_2;
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let t = half * (xi + 1.0);
            (t.cos(), half * wi * t.sin().powi(d as i32 - 1))
        })
        .unzip()
}

/// `∫ C_j C_k (1−x²)^{d/2−1} = δ_{jk} c_{k,d}`, relative error.
pub fn gegenbauer_orthogonality() -> Result<Check> {
    let mut worst = 0.0f64;
    for d in [2usize, 3, 4, 7, 10, 25] {
        let (x, w) = angular_rule(d, 256);
        let lambda = (d as f64 - 1.0) / 2.0;
        for j in 1..=8u32 {
            let cj: Vec<f64> =
                x.iter().map(|&t| gegenbauer_eval(GegenbauerIndex::new(j, lambda)?, t)).collect::<Result<_>>()?;
            let nj = gegenbauer_norm(j, d)?;
            for k in 1..=j {
                let ck: Vec<f64> =
                    x.iter().map(|&t| gegenbauer_eval(GegenbauerIndex::new(k, lambda)?, t)).collect::<Result<_>>()?;
                let integral: f64 = cj.iter().zip(&ck).zip(&w).map(|((a, b), wi)| a * b * wi).sum();
                let scale = (nj * gegenbauer_norm(k, d)?).sqrt();
                let err = if j == k { (integral - nj).abs() / nj } else { integral.abs() / scale };
                worst = worst.max(err);
            }
        }
    }
    Ok(Check::new("gegenbauer orthogonality", worst, 1e-8))
}

/// Two closed forms of `d_{k,d}` and of `c_{k,d}` agree.
pub fn dimension_identities() -> Result<Check> {
    let mut worst = 0.0f64;
    for d in [1usize, 2, 3, 5, 10, 100, 1000] {
        for k in 1..=20u32 {
            let a = harmonic_dim(k, d)?;
            worst = worst.max((a - harmonic_dim_binomial(k, d)?).abs() / a);
            if d >= 2 {
                let c = gegenbauer_norm(k, d)?;
                worst = worst.max((c - gegenbauer_norm_via_area(k, d)?).abs() / c);
            }
        }
    }
    Ok(Check::new("harmonic dimension identities", worst, 1e-10))
}

/// Even moments of `XᵀY` for independent uniform points against
/// `∏_{r<m} (1+2r)/(d+1+2r)`; reports the largest |z|-score.
pub fn dot_product_moments(seed: u64) -> Result<Check> {
    let pairs = 20_000;
    let mut worst = 0.0f64;
    for (i, d) in [3usize, 10, 100].into_iter().enumerate() {
        let mut rng = RngStream::new(seed, i as u64).rng();
        let a = uniform_sphere(&mut rng, pairs, d)?;
        let b = uniform_sphere(&mut rng, pairs, d)?;
        let dots: Vec<f64> = a.rows().zip(b.rows()).map(|(x, y)| dot(x, y)).collect();
        let exact =
            |m: u32| (0..m).map(|r| (1.0 + 2.0 * r as f64) / (d as f64 + 1.0 + 2.0 * r as f64)).product::<f64>();
        for m in 0..=3u32 {
            // m = 0 tests the odd first moment
            let (mean_exact, second) = if m == 0 { (0.0, exact(1)) } else { (exact(m), exact(2 * m)) };
            let power = if m == 0 { 1 } else { 2 * m as i32 };
            let mean = dots.iter().map(|x| x.powi(power)).sum::<f64>() / pairs as f64;
            let se = ((second - mean_exact * mean_exact) / pairs as f64).sqrt();
            worst = worst.max((mean - mean_exact).abs() / se);
        }
    }
    Ok(Check::new("dot-product moments (|z|)", worst, 4.0))
}

/// Under uniformity `E ψ(XᵀY) = 0` and `E ψ(XᵀY)² = σ_n²/2`.
pub fn kernel_moments() -> Result<Check> {
    let schemes = [
        WeightScheme::rayleigh(),
        WeightScheme::bingham(),
        WeightScheme::KSobolev(3),
        WeightScheme::hybrid(),
        WeightScheme::Finite(3),
        WeightScheme::DecayAdjusted(3),
    ];
    let mut worst = 0.0f64;
    for d in [1usize, 2, 3, 10, 100] {
        let (x, w) = angular_rule(d, 512);
        let total: f64 = w.iter().sum();
        for s in &schemes {
            let psi: Vec<f64> = x.iter().map(|&t| psi_kernel(s, d, t)).collect::<Result<_>>()?;
            let m1 = psi.iter().zip(&w).map(|(p, wi)| p * wi).sum::<f64>() / total;
            let m2 = psi.iter().zip(&w).map(|(p, wi)| p * p * wi).sum::<f64>() / total;
            let sig = sigma_n(s, d)?;
            worst = worst.max(m1.abs() / sig).max((m2 / (sig * sig) - 0.5).abs());
        }
    }
    Ok(Check::new("centered kernel and second moment 1/2", worst, 1e-8))
}

/// The tabulated limiting `A²` law against simulated `A²` at `n = 100`.
pub fn ad_limit_table(seed: u64) -> Result<Check> {
    let draws = 100_000;
    let n = 100;
    let mut rng = RngStream::new(seed, 0).rng();
    let mut u = vec![0.0; n];
    let mut stats = Vec::with_capacity(draws);
    for _ in 0..draws {
        u.iter_mut().for_each(|x| *x = rng.gen());
        stats.push(ad_statistic_from_uniforms(&u)?);
    }
    let (ks, _) = ks_one_sample(&stats, ad_limit_cdf)?;
    Ok(Check::new("limiting A2 table vs simulation (KS)", ks, 0.01))
}

/// Radial nulls covered by [`pit_uniformity`].
pub fn pit_laws() -> Vec<(RadialLaw, usize)> {
    vec![
        (RadialLaw::Normal, 10),
        (RadialLaw::Student { nu: 5.0 }, 50),
        (RadialLaw::Stable { beta: 1.0, gamma0: 1.0 }, 20),
        (RadialLaw::Stable { beta: 1.5, gamma0: 0.7 }, 5),
        (RadialLaw::Gamma { shape: 2.0, scale: 5.0, variable: GammaVariable::Radius }, 100),
        (RadialLaw::Gamma { shape: 3.0, scale: 2.0, variable: GammaVariable::SquaredRadius }, 30),
    ]
}

/// `F(R)` is uniform when `R` is drawn from the null `F`; KS distance at `n = 10⁴`.
pub fn pit_uniformity(law: RadialLaw, dim: usize, seed: u64) -> Result<Check> {
    let null = RadialNull::new(law, dim)?;
    let mut rng = RngStream::new(seed, 0).rng();
    let radii = null.sample(&mut rng, 10_000)?;
    let u: Vec<f64> = radii.iter().map(|&r| null.cdf(r)).collect::<Result<_>>()?;
    let (ks, _) = ks_one_sample(&u, |x| x.clamp(0.0, 1.0))?;
    Ok(Check::new(format!("PIT uniformity {law:?}, dim {dim} (KS)"), ks, 0.02))
}

/// Positive stable draws at `β = 1` against `P(A ≤ a) = erfc(γ₀/√(2a))`.
pub fn levy_sampler(seed: u64) -> Result<Check> {
    let gamma0 = 1.3;
    let mut rng = RngStream::new(seed, 0).rng();
    let a = positive_stable(&mut rng, 100_000, 1.0, gamma0)?;
    let (ks, _) = ks_one_sample(&a, |x| if x <= 0.0 { 0.0 } else { libm::erfc(gamma0 / (2.0 * x).sqrt()) })?;
    Ok(Check::new("Levy closed form vs stable sampler (KS)", ks, 0.01))
}

/// Runs every check.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![
        gegenbauer_orthogonality()?,
        dimension_identities()?,
        dot_product_moments(seed)?,
        kernel_moments()?,
        ad_limit_table(seed.wrapping_add(1))?,
    ];
    for (i, (law, dim)) in pit_laws().into_iter().enumerate() {
        out.push(pit_uniformity(law, dim, seed.wrapping_add(10 + i as u64))?);
    }
    out.push(levy_sampler(seed.wrapping_add(2))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_checks_pass() {
        for c in [gegenbauer_orthogonality().unwrap(), dimension_identities().unwrap(), kernel_moments().unwrap()] {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn angular_rule_matches_area_ratio() {
        use crate::specfun::surface_area;
        for d in [2usize, 5, 40] {
            let (_, w) = angular_rule(d, 256);
            let ratio = surface_area(d).unwrap() / surface_area(d - 1).unwrap();
            assert!((w.iter().sum::<f64>() - ratio).abs() < 1e-10 * ratio);
        }
    }
}
