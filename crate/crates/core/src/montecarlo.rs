//! Scenario-driven Monte Carlo experiments.
//!
//! Replicate `r` of a scenario draws from stream `r` of the scenario seed and
//! bootstrap draw `j` inside it uses stream `M + j·M + r`, so results depend
//! only on the seed and never on how replicates are scheduled across workers.
//! Rejections are tallied as integer counts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::radial::{BootstrapConfig, RadialHypothesis};
use crate::sampling::{ModelSpec, RngStream};
use crate::sobolev::{self, Gram, WeightScheme};
use crate::specfun::normal_cdf;
use crate::symmetry;

fn default_scheme() -> WeightScheme {
    WeightScheme::rayleigh()
}

fn default_bootstrap() -> usize {
    200
}

/// Test applied to every replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestSpec {
    /// Sobolev uniformity test of the directions.
    Uniformity {
        #[serde(default = "default_scheme")]
        scheme: WeightScheme,
    },
    /// Uniformity of the signs about `theta` (first axis by default).
    Rotsym {
        #[serde(default = "default_scheme")]
        scheme: WeightScheme,
        #[serde(default)]
        theta: Option<Vec<f64>>,
    },
    GofSimple {
        null: RadialHypothesis,
        #[serde(default = "default_scheme")]
        scheme: WeightScheme,
    },
    GofComposite {
        family: RadialHypothesis,
        #[serde(default = "default_scheme")]
        scheme: WeightScheme,
        #[serde(default = "default_bootstrap")]
        bootstrap: usize,
    },
}

impl TestSpec {
    fn validate(&self) -> Result<()> {
        match self {
            TestSpec::Uniformity { scheme } | TestSpec::Rotsym { scheme, .. } => scheme.validate(),
            TestSpec::GofSimple { null, scheme } => {
                if !matches!(null, RadialHypothesis::Simple(_)) {
                    return Err(Error::Scenario(format!("gof-simple needs a fully specified null, got `{null}`")));
                }
                scheme.validate()
            }
            TestSpec::GofComposite { family, scheme, bootstrap } => {
                if !matches!(family, RadialHypothesis::Composite(_)) {
                    return Err(Error::Scenario(format!("gof-composite needs an estimable family, got `{family}`")));
                }
                if *bootstrap == 0 {
                    return Err(Error::Scenario("bootstrap must be at least 1".into()));
                }
                scheme.validate()
            }
        }
    }
}

/// One experiment cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub id: String,
    pub model: ModelSpec,
    pub test: TestSpec,
    pub n: usize,
    /// Rows live in `R^dim` (sphere-valued models on `S^{dim−1}`).
    pub dim: usize,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    /// Published rejection rate in percent, when there is one.
    pub reference: Option<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Scenario("replicates must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Scenario(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if self.n == 0 || self.dim < 2 {
            return Err(Error::Scenario(format!("need n >= 1 and dim >= 2, got n = {}, dim = {}", self.n, self.dim)));
        }
        if matches!(self.test, TestSpec::GofSimple { .. } | TestSpec::GofComposite { .. }) && self.model.is_spherical()
        {
            return Err(Error::Scenario("goodness-of-fit tests need a model in R^dim, not on the sphere".into()));
        }
        self.test.validate()?;
        self.model.compile(self.n, self.dim).map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub n: usize,
    pub dim: usize,
    #[serde(default)]
    pub reference: Option<f64>,
}

fn default_replicates() -> usize {
    1000
}

fn default_level() -> f64 {
    0.05
}

/// Scenario file: one model and test evaluated over a grid of `(n, dim)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    pub model: ModelSpec,
    pub test: TestSpec,
    pub grid: Vec<GridPoint>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        if file.grid.is_empty() {
            return Err(Error::Scenario(format!("scenario `{}` has an empty grid", file.id)));
        }
        for s in file.scenarios() {
            s.validate()?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Expands the grid; every cell shares the file's seed.
    pub fn scenarios(&self) -> Vec<Scenario> {
        self.grid
            .iter()
            .map(|g| Scenario {
                id: self.id.clone(),
                model: self.model.clone(),
                test: self.test.clone(),
                n: g.n,
                dim: g.dim,
                replicates: self.replicates,
                level: self.level,
                seed: self.seed,
                reference: g.reference,
            })
            .collect()
    }
}

/// Resolves a scenario argument: an existing path, or a bare name looked up
/// as `<dir>/<name>.toml` in each search directory.
pub fn resolve_scenario_path(arg: &str, search: &[PathBuf]) -> Option<PathBuf> {
    let direct = PathBuf::from(arg);
    if direct.is_file() {
        return Some(direct);
    }
    search.iter().map(|dir| dir.join(format!("{arg}.toml"))).find(|p| p.is_file())
}

/// Empirical rejection rate of one scenario cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectionRow {
    pub id: String,
    pub n: usize,
    pub dim: usize,
    pub replicates: usize,
    pub level: f64,
    pub rejections: usize,
    pub rejection_rate: f64,
    /// `√(p̂(1 − p̂)/M)`.
    pub mc_stderr: f64,
    pub reference: Option<f64>,
    /// Bootstrap draws counted as exceeding after failed refits, over all replicates.
    pub bootstrap_failures: usize,
    /// Seconds; not part of the CSV so that output depends only on the seed.
    #[serde(skip)]
    pub wall_time: f64,
}

impl RejectionRow {
    pub const CSV_HEADER: &'static str =
        "id,n,dim,replicates,level,rejections,rejection_rate,mc_stderr,reference,bootstrap_failures";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.6},{},{}",
            self.id,
            self.n,
            self.dim,
            self.replicates,
            self.level,
            self.rejections,
            self.rejection_rate,
            self.mc_stderr,
            self.reference.map(|r| r.to_string()).unwrap_or_default(),
            self.bootstrap_failures
        )
    }
}

struct Outcome {
    reject: bool,
    failures: usize,
}

fn run_replicate(s: &Scenario, sampler: &crate::sampling::Sampler, r: usize) -> Result<Outcome> {
    let mut rng = RngStream::new(s.seed, r as u64).rng();
    let plain = |reject| Ok(Outcome { reject, failures: 0 });
    match &s.test {
        TestSpec::Uniformity { scheme } => {
            let sample = sampler.draw_sphere(&mut rng)?;
            plain(sobolev::statistic(&sample, scheme)?.p_value < s.level)
        }
        TestSpec::Rotsym { scheme, theta } => {
            let sample = sampler.draw_sphere(&mut rng)?;
            let theta = theta.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; s.dim];
                e[0] = 1.0;
                e
            });
            plain(symmetry::rotsym_test(&sample, &theta, scheme)?.p_value < s.level)
        }
        TestSpec::GofSimple { null, scheme } => {
            let pts = sampler.draw(&mut rng)?;
            let RadialHypothesis::Simple(law) = null else { unreachable!("validated") };
            plain(symmetry::gof_simple(&pts, *law, scheme)?.p_value < s.level)
        }
        TestSpec::GofComposite { family, scheme, bootstrap } => {
            let pts = sampler.draw(&mut rng)?;
            let RadialHypothesis::Composite(fam) = family else { unreachable!("validated") };
            let cfg = BootstrapConfig::for_replicate(*bootstrap, s.seed, s.replicates as u64, r as u64);
            let rep = symmetry::gof_composite(&pts, *fam, scheme, &cfg)?;
            Ok(Outcome { reject: rep.p_value < s.level, failures: rep.bootstrap_failures })
        }
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| Error::Scenario(format!("cannot start worker pool: {e}")))
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(results.len());
    for (replicate, r) in results.into_iter().enumerate() {
        out.push(r.map_err(|e| Error::Replicate { replicate, source: Box::new(e) })?);
    }
    Ok(out)
}

/// Runs `M` replicates of a scenario on `workers` threads (all cores if `None`).
pub fn run_scenario(s: &Scenario, workers: Option<usize>) -> Result<RejectionRow> {
    s.validate()?;
    let start = Instant::now();
    let sampler = s.model.compile(s.n, s.dim)?;
    let results: Vec<Result<Outcome>> =
        pool(workers)?.install(|| (0..s.replicates).into_par_iter().map(|r| run_replicate(s, &sampler, r)).collect());
    let outcomes = first_error(results)?;
    let rejections = outcomes.iter().filter(|o| o.reject).count();
    let bootstrap_failures = outcomes.iter().map(|o| o.failures).sum();
    let m = s.replicates as f64;
    let rate = rejections as f64 / m;
    Ok(RejectionRow {
        id: s.id.clone(),
        n: s.n,
        dim: s.dim,
        replicates: s.replicates,
        level: s.level,
        rejections,
        rejection_rate: rate,
        mc_stderr: (rate * (1.0 - rate) / m).sqrt(),
        reference: s.reference,
        bootstrap_failures,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Kolmogorov limiting survival function `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form, fast for small λ
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=20)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (c * m * m).exp()
            })
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov–Smirnov distance and asymptotic p-value.
pub fn ks_one_sample(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return domain("KS test needs at least one value");
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut dist = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        dist = dist.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok((dist, kolmogorov_sf(n.sqrt() * dist)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

impl Histogram {
    /// `lower,upper,count` per bin, for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lower,upper,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

/// Histogram with Freedman–Diaconis bin width `2·IQR·n^{−1/3}`.
pub fn histogram(values: &[f64]) -> Result<Histogram> {
    if values.is_empty() {
        return domain("histogram needs at least one value");
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
    let width = 2.0 * iqr / (v.len() as f64).cbrt();
    let bins = if width > 0.0 && hi > lo { (((hi - lo) / width).ceil() as usize).clamp(1, 10_000) } else { 1 };
    let step = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + step * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for x in &v {
        let i = (((x - lo) / step) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Statistic recorded in a convergence experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConvergenceStatistic {
    /// The k₀-Sobolev statistic with the asymptotic normalization.
    K0Standardized { k0: u32 },
    /// `T_n/σ_n` for a weight scheme.
    Standardized { scheme: WeightScheme },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub statistic: ConvergenceStatistic,
    pub target_mean: f64,
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub ks_distance: f64,
    pub ks_p: f64,
    pub histogram: Histogram,
}

/// Settings shared by the statistics of one convergence experiment.
#[derive(Clone, Debug)]
pub struct ConvergenceConfig {
    pub model: ModelSpec,
    pub n: usize,
    /// Sphere dimension `d`; data are drawn in `R^{d+1}`.
    pub d: usize,
    pub replicates: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

/// Draws `M` samples and evaluates every requested statistic on each (from a
/// single Gram matrix), then compares each empirical law with `N(target, 1)`.
pub fn convergence_experiment(
    cfg: &ConvergenceConfig,
    stats: &[(ConvergenceStatistic, f64)],
) -> Result<Vec<ConvergenceReport>> {
    if cfg.replicates < 2 || stats.is_empty() {
        return domain("convergence experiment needs at least two replicates and one statistic");
    }
    let sampler = cfg.model.compile(cfg.n, cfg.d + 1)?;
    let eval = |r: usize| -> Result<Vec<f64>> {
        let mut rng = RngStream::new(cfg.seed, r as u64).rng();
        let sample = sampler.draw_sphere(&mut rng)?;
        let gram = Gram::from_sample(&sample);
        stats
            .iter()
            .map(|(s, _)| match s {
                ConvergenceStatistic::K0Standardized { k0 } => sobolev::k0_standardized_from_gram(&gram, cfg.d, *k0),
                ConvergenceStatistic::Standardized { scheme } => {
                    Ok(sobolev::statistic_from_gram(&gram, cfg.d, scheme)?.standardized)
                }
            })
            .collect()
    };
    let results: Vec<Result<Vec<f64>>> =
        pool(cfg.workers)?.install(|| (0..cfg.replicates).into_par_iter().map(eval).collect());
    let rows = first_error(results)?;
    stats
        .iter()
        .enumerate()
        .map(|(k, (stat, target))| {
            let values: Vec<f64> = rows.iter().map(|row| row[k]).collect();
            let m = values.len() as f64;
            let mean = values.iter().sum::<f64>() / m;
            let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
            let (ks_distance, ks_p) = ks_one_sample(&values, |x| normal_cdf(x - target))?;
            Ok(ConvergenceReport {
                statistic: stat.clone(),
                target_mean: *target,
                histogram: histogram(&values)?,
                values,
                mean,
                variance,
                ks_distance,
                ks_p,
            })
        })
        .collect()
}
