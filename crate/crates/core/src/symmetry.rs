//! Tangent-normal geometry, rotational-symmetry tests and the spherical
//! symmetry goodness-of-fit pipeline.
//!
//! A point `x` on `S^{D−1}` decomposes about a unit `θ` as
//! `x = v θ + (1 − v²)^{1/2} Γ_θ u`, with cosine `v = x'θ` and sign `u` on
//! `S^{D−2}`. The complement `Γ_θ` is never stored: it is the trailing block of
//! a Householder reflection. Any other complement differs from it by a rotation
//! of `S^{D−2}`, which every Sobolev statistic ignores.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::radial::{self, BootstrapConfig, RadialFamily, RadialHypothesis, RadialLaw, RadialNull};
use crate::sampling::Points;
use crate::sobolev::{self, Gram, SphereSample, TestReport, WeightScheme};

/// Signs closer than this to `±θ` (in `1 − |v|`) are undefined.
pub const SIGN_DEGENERACY_TOL: f64 = 1e-12;

/// Householder reflection `H = I − 2ww'/w'w` with `Hθ = −s e₁`, `s = sign(θ₁)`.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    theta: Vec<f64>,
    w: Vec<f64>,
    w_norm2: f64,
    s: f64,
}

impl TangentFrame {
    pub fn new(theta: &[f64]) -> Result<Self> {
        if theta.len() < 2 {
            return domain("a tangent frame needs dimension >= 2");
        }
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= 1e-9) {
            return domain(format!("theta must be a unit vector (norm {norm})"));
        }
        let s = if theta[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut w = theta.to_vec();
        w[0] += s;
        let w_norm2 = w.iter().map(|v| v * v).sum();
        Ok(Self { theta: theta.to_vec(), w, w_norm2, s })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    fn reflect(&self, x: &mut [f64]) {
        let c = 2.0 * crate::sobolev::dot(&self.w, x) / self.w_norm2;
        x.iter_mut().zip(&self.w).for_each(|(xi, wi)| *xi -= c * wi);
    }

    /// Returns `(x'θ, Γ_θ'x)`; the second part has length `D − 1`.
    pub fn split(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut y = x.to_vec();
        self.reflect(&mut y);
        let v = -self.s * y[0];
        y.remove(0);
        (v, y)
    }

    /// `Γ_θ u` for `u` in `R^{D−1}`.
    pub fn complement(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len() + 1, self.dim());
        let mut y = Vec::with_capacity(self.dim());
        y.push(0.0);
        y.extend_from_slice(u);
        self.reflect(&mut y);
        y
    }

    /// `v θ + (1 − v²)^{1/2} Γ_θ u`, written into `out`.
    pub fn compose_into(&self, v: f64, u: &[f64], out: &mut [f64]) {
        let r = (1.0 - v * v).max(0.0).sqrt();
        out[0] = -self.s * v;
        out[1..].iter_mut().zip(u).for_each(|(o, ui)| *o = r * ui);
        self.reflect(out);
    }

    pub fn compose(&self, v: f64, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.compose_into(v, u, &mut out);
        out
    }

    /// Cosine and sign `u_θ(x) = Γ_θ'x / ‖Γ_θ'x‖` of a unit vector.
    pub fn sign(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (v, mut t) = self.split(x);
        if 1.0 - v.abs() <= SIGN_DEGENERACY_TOL {
            return domain("point coincides with ±theta; its sign is undefined");
        }
        let norm = t.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("point coincides with ±theta; its sign is undefined".into()));
        }
        t.iter_mut().for_each(|a| *a /= norm);
        Ok((v, t))
    }
}

/// Splits points in `R^D` into directions on `S^{D−1}` and radii.
pub fn project_radius(points: &Points) -> Result<(SphereSample, Vec<f64>)> {
    let dim = points.dim();
    if dim < 2 {
        return domain("projection onto the sphere needs dimension >= 2");
    }
    let mut radii = Vec::with_capacity(points.n());
    let mut dirs = Vec::with_capacity(points.n() * dim);
    for (i, row) in points.rows().enumerate() {
        let r = sobolev::dot(row, row).sqrt();
        if !(r > 0.0) {
            return Err(Error::InvalidRow { row: i, reason: "zero vector has no direction".into() });
        }
        radii.push(r);
        dirs.extend(row.iter().map(|v| v / r));
    }
    Ok((SphereSample::normalized(dirs, points.n(), dim - 1)?, radii))
}

/// Multivariate signs on `S^{D−2}` and cosines about `θ` for a sample on `S^{D−1}`.
pub fn tangent_signs(sample: &SphereSample, theta: &[f64]) -> Result<(SphereSample, Vec<f64>)> {
    let p = sample.ambient_dim();
    if theta.len() != p {
        return Err(Error::DimensionMismatch(format!("theta has length {} but points live in R^{p}", theta.len())));
    }
    if p < 3 {
        return domain("signs need ambient dimension >= 3");
    }
    let frame = TangentFrame::new(theta)?;
    let mut cos = Vec::with_capacity(sample.n());
    let mut signs = Vec::with_capacity(sample.n() * (p - 1));
    for (i, x) in sample.rows().enumerate() {
        let (v, u) = frame.sign(x).map_err(|e| Error::InvalidRow { row: i, reason: e.to_string() })?;
        cos.push(v);
        signs.extend(u);
    }
    Ok((SphereSample::normalized(signs, sample.n(), p - 2)?, cos))
}

/// Sobolev test of uniformity of the signs about `θ`, a necessary condition
/// for rotational symmetry about `θ`.
pub fn rotsym_test(sample: &SphereSample, theta: &[f64], scheme: &WeightScheme) -> Result<TestReport> {
    let (signs, _) = tangent_signs(sample, theta)?;
    sobolev::statistic(&signs, scheme)
}

/// Fisher aggregation `G = −2(ln p₁ + ln p₂)` (arguments floored at 1e-300)
/// and its `χ²₂` upper-tail probability `e^{−G/2}(1 + G/2)`.
pub fn fisher_combine(p1: f64, p2: f64) -> (f64, f64) {
    let g = -2.0 * (p1.max(1e-300).ln() + p2.max(1e-300).ln());
    (g, (-g / 2.0).exp() * (1.0 + g / 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GofMode {
    Simple,
    Composite { bootstrap: usize },
}

/// Outcome of the spherical-symmetry goodness-of-fit test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GofReport {
    pub ad_statistic: f64,
    pub radial_p: f64,
    pub sobolev_standardized: f64,
    pub directional_p: f64,
    pub g_statistic: f64,
    pub p_value: f64,
    #[serde(flatten)]
    pub mode: GofMode,
    pub n: usize,
    pub dim: usize,
    /// Radial law used for `A_n` (the fit, in the composite case).
    pub radial_null: RadialNull,
    pub bootstrap_retries: usize,
    pub bootstrap_failures: usize,
    /// Pearson correlation between radii and directional kernel row sums.
    /// Reported for inspection only; it does not enter `G_n`.
    pub radius_direction_correlation: Option<f64>,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() < 3 {
        return None;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let r = sab / (saa * sbb).sqrt();
    r.is_finite().then_some(r)
}

struct Directional {
    report: TestReport,
    correlation: Option<f64>,
}

fn directional(dirs: &SphereSample, radii: &[f64], scheme: &WeightScheme) -> Result<Directional> {
    let gram = Gram::from_sample(dirs);
    let (report, sums) = sobolev::statistic_with_row_sums(&gram, dirs.d(), scheme)?;
    Ok(Directional { report, correlation: pearson(radii, &sums) })
}

struct Radial {
    ad: f64,
    p_value: f64,
    null: RadialNull,
    retries: usize,
    failures: usize,
}

fn assemble(radial: Radial, dir: Directional, mode: GofMode, dim: usize) -> GofReport {
    let Radial { ad, p_value: radial_p, null, retries, failures } = radial;
    let (g, p) = fisher_combine(radial_p, dir.report.p_value);
    GofReport {
        ad_statistic: ad,
        radial_p,
        sobolev_standardized: dir.report.standardized,
        directional_p: dir.report.p_value,
        g_statistic: g,
        p_value: p,
        mode,
        n: dir.report.n,
        dim,
        radial_null: null,
        bootstrap_retries: retries,
        bootstrap_failures: failures,
        radius_direction_correlation: dir.correlation,
    }
}

/// Goodness-of-fit against a fully specified spherically symmetric law:
/// Anderson–Darling on the radii (limiting p-value) and a Sobolev test on the
/// directions, combined by Fisher's method.
pub fn gof_simple(points: &Points, law: RadialLaw, scheme: &WeightScheme) -> Result<GofReport> {
    let null = RadialNull::new(law, points.dim())?;
    let (dirs, radii) = project_radius(points)?;
    let ad = radial::ad_statistic(&radii, &null)?;
    let dir = directional(&dirs, &radii, scheme)?;
    let radial = Radial { ad, p_value: radial::ad_limit_pvalue(ad), null, retries: 0, failures: 0 };
    Ok(assemble(radial, dir, GofMode::Simple, points.dim()))
}

/// Composite version: the radial p-value comes from the parametric bootstrap
/// while the directional part is unchanged.
pub fn gof_composite(
    points: &Points,
    family: RadialFamily,
    scheme: &WeightScheme,
    cfg: &BootstrapConfig,
) -> Result<GofReport> {
    let (dirs, radii) = project_radius(points)?;
    let boot = radial::bootstrap_pvalue(&radii, &family, points.dim(), cfg)?;
    let dir = directional(&dirs, &radii, scheme)?;
    let mode = GofMode::Composite { bootstrap: cfg.replicates };
    let radial = Radial {
        ad: boot.statistic,
        p_value: boot.p_value,
        null: boot.estimate,
        retries: boot.retries,
        failures: boot.failures,
    };
    Ok(assemble(radial, dir, mode, points.dim()))
}

/// Dispatches on the hypothesis; `cfg` is used only for composite nulls.
pub fn gof(
    points: &Points,
    hypothesis: RadialHypothesis,
    scheme: &WeightScheme,
    cfg: &BootstrapConfig,
) -> Result<GofReport> {
    match hypothesis {
        RadialHypothesis::Simple(law) => gof_simple(points, law, scheme),
        RadialHypothesis::Composite(family) => gof_composite(points, family, scheme, cfg),
    }
}
