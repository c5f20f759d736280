//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Rates are desk-scale (M in the hundreds or low thousands) and every
//! tolerance is the one fixed in the acceptance table.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use sobolev_core::montecarlo::{ConvergenceConfig, ConvergenceStatistic, TestSpec};
use sobolev_core::sampling::Kappa;
use sobolev_core::specfun::normal_sf;
use sobolev_core::{
    convergence_experiment, run_scenario, selftest, ModelSpec, RejectionRow, ScenarioFile, WeightScheme,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Runs one grid cell of a shipped scenario file with desk-scale `M` (and `B`).
fn cell(
    name: &str,
    n: usize,
    dim: usize,
    m: usize,
    b: Option<usize>,
    seed: Option<u64>,
) -> Result<RejectionRow, String> {
    let file = ScenarioFile::load(&scenario_dir().join(format!("{name}.toml"))).map_err(|e| e.to_string())?;
    let mut s = file
        .scenarios()
        .into_iter()
        .find(|s| s.n == n && s.dim == dim)
        .ok_or_else(|| format!("{name} has no cell ({n}, {dim})"))?;
    s.replicates = m;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let (Some(b), TestSpec::GofComposite { bootstrap, .. }) = (b, &mut s.test) {
        *bootstrap = b;
    }
    run_scenario(&s, None).map_err(|e| e.to_string())
}

fn pct(r: &RejectionRow) -> f64 {
    100.0 * r.rejection_rate
}

struct Tally {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { notes: Vec::new(), failures: Vec::new() }
    }

    fn check(&mut self, label: String, ok: bool) {
        if ok {
            self.notes.push(label);
        } else {
            self.failures.push(label);
        }
    }

    fn finish(self) -> Outcome {
        if self.failures.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            Err(format!("failed: {} | passed: {}", self.failures.join("; "), self.notes.join("; ")))
        }
    }

    fn rate(&mut self, what: &str, row: &RejectionRow, lo: f64, hi: f64) {
        let p = pct(row);
        self.check(format!("{what} {p:.1}% in [{lo}, {hi}]"), p >= lo && p <= hi);
    }
}

fn criterion1() -> Outcome {
    let schemes = [
        WeightScheme::rayleigh(),
        WeightScheme::bingham(),
        WeightScheme::KSobolev(3),
        WeightScheme::hybrid(),
        WeightScheme::Finite(3),
        WeightScheme::DecayAdjusted(3),
    ];
    let stats: Vec<_> =
        schemes.iter().map(|s| (ConvergenceStatistic::Standardized { scheme: s.clone() }, 0.0)).collect();
    let mut t = Tally::new();
    let start = Instant::now();
    for (n, d) in [(100, 100), (200, 300)] {
        let cfg =
            ConvergenceConfig { model: ModelSpec::UniformSphere, n, d, replicates: 1000, seed: 11, workers: None };
        let reports = convergence_experiment(&cfg, &stats).map_err(|e| e.to_string())?;
        for (s, r) in schemes.iter().zip(&reports) {
            let rate = 100.0 * r.values.iter().filter(|&&z| normal_sf(z) < 0.05).count() as f64 / r.values.len() as f64;
            t.check(format!("{s} ({n},{d}) {rate:.1}%"), (3.0..=7.0).contains(&rate));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    t.check(format!("runtime {secs:.0}s < 300s"), secs < 300.0);
    t.finish()
}

fn criterion2() -> Outcome {
    let cfg = ConvergenceConfig {
        model: ModelSpec::UniformSphere,
        n: 500,
        d: 500,
        replicates: 2000,
        seed: 12,
        workers: None,
    };
    let stats =
        [(ConvergenceStatistic::K0Standardized { k0: 1 }, 0.0), (ConvergenceStatistic::K0Standardized { k0: 3 }, 0.0)];
    let reports = convergence_experiment(&cfg, &stats).map_err(|e| e.to_string())?;
    let mut t = Tally::new();
    for (k0, r) in [1, 3].iter().zip(&reports) {
        t.check(format!("k0={k0} KS p {:.3} > 0.01", r.ks_p), r.ks_p > 0.01);
        t.check(format!("k0={k0} var {:.3} in [0.9, 1.1]", r.variance), (0.9..=1.1).contains(&r.variance));
    }
    t.finish()
}

fn criterion3() -> Outcome {
    let model = ModelSpec::IntegratedVmf { kappa: Kappa::Local { tau2: 2f64.sqrt() } };
    let cfg = ConvergenceConfig { model, n: 500, d: 500, replicates: 1000, seed: 13, workers: None };
    let targets = [
        (WeightScheme::rayleigh(), 1.0, 0.15),
        (WeightScheme::bingham(), 0.0, 0.12),
        (WeightScheme::Finite(3), 0.0, 0.12),
        (WeightScheme::DecayAdjusted(3), 1.0, 0.2),
    ];
    let stats: Vec<_> =
        targets.iter().map(|(s, m, _)| (ConvergenceStatistic::Standardized { scheme: s.clone() }, *m)).collect();
    let reports = convergence_experiment(&cfg, &stats).map_err(|e| e.to_string())?;
    let mut t = Tally::new();
    for ((s, m, tol), r) in targets.iter().zip(&reports) {
        t.check(format!("{s} mean {:.3} in {m} +- {tol}", r.mean), (r.mean - m).abs() <= *tol);
    }
    t.finish()
}

fn criterion4() -> Outcome {
    let mut t = Tally::new();
    t.rate("N_d(0,I) (100,100)", &cell("table1_row1", 100, 100, 500, None, None)?, 2.0, 8.0);
    let r = cell("table1_row11", 100, 100, 500, None, None)?;
    t.check(format!("t_10(I) (100,100) {:.1}% >= 97", pct(&r)), pct(&r) >= 97.0);
    t.rate("t_500(I) (100,300)", &cell("table1_row14", 100, 300, 500, None, None)?, 33.0, 53.0);
    t.rate("vMF(4)x[chi2_d]^1/2 (200,100)", &cell("table1_row6", 200, 100, 500, None, None)?, 42.0, 56.0);
    t.finish()
}

fn criterion5() -> Outcome {
    let mut t = Tally::new();
    t.rate("t_5 simple (100,100)", &cell("table2_row1", 100, 100, 300, None, None)?, 1.0, 9.0);
    t.rate("t_7 simple (500,200)", &cell("table2_row3", 500, 200, 300, None, None)?, 78.0, 92.0);
    t.rate("t_5(0.8 I) composite (100,100)", &cell("table2_row13", 100, 100, 300, Some(200), None)?, 78.0, 92.0);
    let r = cell("table2_row20", 100, 100, 300, Some(200), None)?;
    t.check(format!("vMF(10)x[dF]^1/2 composite (100,100) {:.1}% >= 92", pct(&r)), pct(&r) >= 92.0);
    t.finish()
}

fn criterion6() -> Outcome {
    let mut t = Tally::new();
    t.rate("stable null (100,100)", &cell("table3_row1", 100, 100, 300, None, None)?, 1.0, 9.0);
    t.rate("t_1.5 (100,50)", &cell("table3_row4", 100, 50, 300, None, None)?, 33.0, 51.0);
    // common random numbers across rho
    let rows: Vec<RejectionRow> = ["table3_row5", "table3_row6", "table3_row7"]
        .iter()
        .map(|name| cell(name, 100, 100, 300, None, Some(3005)))
        .collect::<Result<_, _>>()?;
    for (rho, r) in ["0", "0.25", "0.5"].iter().zip(&rows) {
        t.rate(&format!("DMN({rho}) (100,100)"), r, 66.0, 82.0);
    }
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let diff = rows[i].rejection_rate - rows[j].rejection_rate;
            let se = (rows[i].mc_stderr.powi(2) + rows[j].mc_stderr.powi(2)).sqrt();
            t.check(
                format!("diff {i}-{j} {:.1}pp within 2SE {:.1}pp", 100.0 * diff, 200.0 * se),
                diff.abs() <= 2.0 * se,
            );
        }
    }
    t.finish()
}

fn criterion7() -> Outcome {
    let mut t = Tally::new();
    t.rate("vMF(0)xG(2,5) (100,100)", &cell("table4_row1", 100, 100, 300, Some(200), None)?, 1.0, 9.0);
    let r = cell("table4_row7", 100, 100, 300, Some(200), None)?;
    t.check(format!("vMF(10)xG(2,5) (100,100) {:.1}% >= 95", pct(&r)), pct(&r) >= 95.0);
    let r = cell("table4_row7", 100, 1000, 300, Some(200), None)?;
    t.check(format!("vMF(10)xG(2,5) (100,1000) {:.1}% <= 12", pct(&r)), pct(&r) <= 12.0);
    let r = cell("table4_row9", 100, 100, 300, Some(200), None)?;
    t.check(format!("vMF(0.25)x|Ca(2,5)| (100,100) {:.1}% >= 92", pct(&r)), pct(&r) >= 92.0);
    t.finish()
}

fn criterion8() -> Outcome {
    let start = Instant::now();
    let checks = selftest::run_all(8).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let mut t = Tally::new();
    for c in &checks {
        t.check(format!("{} {:.2e} < {:.0e}", c.name, c.value, c.tolerance), c.passed);
    }
    t.check(format!("runtime {secs:.1}s < 60s"), secs < 60.0);
    t.finish()
}

fn criterion9() -> Outcome {
    let dir = std::env::temp_dir().join(format!("sobolev-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut t = Tally::new();
    for (scenario, m) in [("table4_row1", "24"), ("table1_row6", "60")] {
        let mut outputs = Vec::new();
        for workers in ["1", "2", "4", "1"] {
            let out = dir.join(format!("{scenario}-{workers}-{}.csv", outputs.len()));
            let status = Command::new(env!("CARGO_BIN_EXE_sobolev"))
                .args(["--seed", "9", "simulate", "--scenario", scenario, "--replicates", m, "--bootstrap", "20"])
                .args(["--workers", workers, "--output"])
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("simulate exited with {status}"));
            }
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        t.check(format!("{scenario}: {} runs (workers 1, 2, 4, 1) byte-identical", outputs.len()), same);
    }
    let _ = std::fs::remove_dir_all(&dir);
    t.finish()
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("null calibration", criterion1),
        ("k0 convergence to N(0,1)", criterion2),
        ("non-null means", criterion3),
        ("normality rows", criterion4),
        ("Student rows", criterion5),
        ("stable rows", criterion6),
        ("gamma rows", criterion7),
        ("oracle suite", criterion8),
        ("determinism across workers", criterion9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.0}s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.0}s] {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
