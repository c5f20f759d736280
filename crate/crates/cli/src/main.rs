use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sobolev_core::montecarlo::{resolve_scenario_path, RejectionRow};
use sobolev_core::radial::RadialHypothesis;
use sobolev_core::selftest;
use sobolev_core::symmetry::{self, GofMode, GofReport};
use sobolev_core::{
    run_scenario, sobolev, BootstrapConfig, ModelSpec, Points, RngStream, ScenarioFile, SphereSample, TestReport,
    WeightScheme,
};

#[derive(Parser)]
#[command(name = "sobolev", version, about = "Sobolev tests of uniformity and symmetry in high dimension")]
struct Cli {
    /// Seed for every random draw (default 1; for `simulate`, overrides the scenario seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print a JSON document instead of text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test uniformity of directions on the sphere
    Uniformity {
        #[command(flatten)]
        input: InputArgs,
        /// Scale each row to unit length instead of rejecting non-unit rows
        #[arg(long)]
        normalize: bool,
        #[command(flatten)]
        test: TestArgs,
    },
    /// Test rotational symmetry about a known location
    Rotsym {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        normalize: bool,
        /// CSV file holding the symmetry axis (normalized if needed)
        #[arg(long)]
        theta: PathBuf,
        #[command(flatten)]
        test: TestArgs,
    },
    /// Goodness-of-fit test of a spherically symmetric law
    Gof {
        #[command(flatten)]
        input: InputArgs,
        /// normal | student:NU | stable:BETA[,G0] | gamma:K,T | gamma-sq:K,T | student-est | gamma-est | gamma-sq-est
        #[arg(long)]
        family: RadialHypothesis,
        /// Bootstrap resamples for estimated families
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[command(flatten)]
        test: TestArgs,
    },
    /// Run a Monte Carlo scenario file and print one CSV row per grid point
    Simulate {
        /// Scenario file, or a bare name looked up in scenarios/
        #[arg(long)]
        scenario: String,
        /// Worker threads (default: available parallelism)
        #[arg(long)]
        workers: Option<usize>,
        /// Override the number of replicates M
        #[arg(long)]
        replicates: Option<usize>,
        /// Override the bootstrap size B
        #[arg(long)]
        bootstrap: Option<usize>,
        /// Write results here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw a sample from a model and print it as CSV
    Dist {
        /// Model as inline TOML (`kind = "vmf", kappa = 4`), a bare kind, or a TOML file
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        /// Ambient dimension of the rows
        #[arg(long)]
        d: usize,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = ",")]
        delim: char,
    },
    /// Run the numerical self-checks
    Selftest,
}

#[derive(Args)]
struct InputArgs {
    /// CSV file, one observation per row
    #[arg(long)]
    input: PathBuf,
    /// Skip the first line
    #[arg(long)]
    header: bool,
    #[arg(long, default_value = ",")]
    delim: char,
}

#[derive(Args)]
struct TestArgs {
    /// rayleigh | bingham | k:K | finite:K | hybrid[:K1,K2,..] | decay:K | custom:...
    #[arg(long, default_value = "rayleigh")]
    scheme: WeightScheme,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<sobolev_core::Error> for Failure {
    fn from(e: sobolev_core::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn read_matrix(path: &Path, header: bool, delim: char) -> Result<(Vec<f64>, usize, usize), Failure> {
    if !delim.is_ascii() {
        return Err(Failure::Usage(format!("delimiter {delim:?} is not ASCII")));
    }
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .delimiter(delim as u8)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let first_line = if header { 2 } else { 1 };
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let line = first_line + i;
        let record = record.map_err(|e| Failure::Compute(format!("{}: line {line}: {e}", path.display())))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(Failure::Compute(format!(
                "{}: line {line}: expected {} columns, found {}",
                path.display(),
                width.unwrap_or(0),
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Failure::Compute(format!(
                    "{}: line {line}, column {}: `{field}` is not a number",
                    path.display(),
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Failure::Compute(format!(
                    "{}: line {line}, column {}: value is not finite",
                    path.display(),
                    j + 1
                )));
            }
            data.push(v);
        }
        rows += 1;
    }
    match width {
        Some(w) => Ok((data, rows, w)),
        None => Err(Failure::Compute(format!("{}: no data rows", path.display()))),
    }
}

fn read_sphere(input: &InputArgs, normalize: bool) -> Result<SphereSample, Failure> {
    let (data, n, p) = read_matrix(&input.input, input.header, input.delim)?;
    if p < 2 {
        return Err(Failure::Compute("rows need at least two coordinates".into()));
    }
    let sample = if normalize { SphereSample::normalized(data, n, p - 1) } else { SphereSample::new(data, n, p - 1) };
    sample.map_err(|e| match e {
        sobolev_core::Error::InvalidRow { row, reason } => Failure::Compute(format!(
            "{}: data row {}: {reason}{}",
            input.input.display(),
            row + 1,
            if normalize { "" } else { " (use --normalize to rescale rows)" }
        )),
        other => other.into(),
    })
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Result<(), Failure> {
    let out =
        if json { serde_json::to_string_pretty(value).map_err(|e| Failure::Compute(e.to_string()))? } else { text() };
    println!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct Decision<'a, T> {
    #[serde(flatten)]
    report: &'a T,
    level: f64,
    reject: bool,
}

fn verdict(p: f64, level: f64) -> String {
    if p < level {
        format!("reject at level {level}")
    } else {
        format!("do not reject at level {level}")
    }
}

fn sobolev_text(title: &str, scheme: &WeightScheme, r: &TestReport, level: f64) -> String {
    format!(
        "{title}\n  scheme        {scheme}\n  n, d          {}, {}\n  statistic     {:.6}\n  sigma_n       {:.6}\n  standardized  {:.6}\n  p-value       {:.6e}\n  truncation    {}\n  decision      {}",
        r.n,
        r.d,
        r.raw_statistic,
        r.sigma,
        r.standardized,
        r.p_value,
        r.truncation,
        verdict(r.p_value, level)
    )
}

fn gof_text(r: &GofReport, level: f64) -> String {
    let mode = match r.mode {
        GofMode::Simple => "simple (limiting A2 law)".to_string(),
        GofMode::Composite { bootstrap } => {
            format!(
                "composite (parametric bootstrap, B = {bootstrap}, retries {}, failures {})",
                r.bootstrap_retries, r.bootstrap_failures
            )
        }
    };
    let corr = r.radius_direction_correlation.map(|c| format!("{c:.4}")).unwrap_or_else(|| "n/a".into());
    format!(
        "Spherical symmetry goodness of fit\n  mode          {mode}\n  n, dim        {}, {}\n  radial null   {:?}\n  A2            {:.6}  (p = {:.6e})\n  directions    {:.6}  (p = {:.6e})\n  G             {:.6}\n  p-value       {:.6e}\n  corr(radius, direction) {corr}\n  decision      {}",
        r.n,
        r.dim,
        r.radial_null.law,
        r.ad_statistic,
        r.radial_p,
        r.sobolev_standardized,
        r.directional_p,
        r.g_statistic,
        r.p_value,
        verdict(r.p_value, level)
    )
}

fn check_level(level: f64) -> Result<(), Failure> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--level must lie in (0, 1), got {level}")))
    }
}

fn parse_model(arg: &str) -> Result<ModelSpec, Failure> {
    #[derive(serde::Deserialize)]
    struct Inline {
        model: ModelSpec,
    }
    let path = Path::new(arg);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| io_err(path, e))?
    } else if arg.contains('=') {
        // accept the comma-separated inline-table form as well as plain TOML
        if let Ok(m) = toml::from_str::<Inline>(&format!("model = {{ {arg} }}")) {
            return Ok(m.model);
        }
        arg.to_string()
    } else {
        format!("kind = \"{arg}\"")
    };
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("invalid model: {e}")))
}

fn scenario_dirs() -> Vec<PathBuf> {
    vec![PathBuf::from("scenarios"), Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")]
}

fn writer(output: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed.unwrap_or(1);
    let seed_override = cli.seed;
    let json = cli.json;
    match cli.command {
        Command::Uniformity { input, normalize, test } => {
            check_level(test.level)?;
            let sample = read_sphere(&input, normalize)?;
            let r = sobolev::statistic(&sample, &test.scheme)?;
            let d = Decision { report: &r, level: test.level, reject: r.p_value < test.level };
            emit(json, &d, || sobolev_text("Sobolev test of uniformity", &test.scheme, &r, test.level))
        }
        Command::Rotsym { input, normalize, theta, test } => {
            check_level(test.level)?;
            let sample = read_sphere(&input, normalize)?;
            let (mut axis, _, _) = read_matrix(&theta, false, input.delim)?;
            let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm.is_nan() || norm <= 0.0 {
                return Err(Failure::Compute("theta must be a nonzero vector".into()));
            }
            axis.iter_mut().for_each(|v| *v /= norm);
            let r = symmetry::rotsym_test(&sample, &axis, &test.scheme)?;
            let d = Decision { report: &r, level: test.level, reject: r.p_value < test.level };
            emit(json, &d, || {
                sobolev_text("Rotational symmetry test (signs about theta)", &test.scheme, &r, test.level)
            })
        }
        Command::Gof { input, family, bootstrap, test } => {
            check_level(test.level)?;
            if bootstrap == 0 {
                return Err(Failure::Usage("--bootstrap must be at least 1".into()));
            }
            let (data, n, dim) = read_matrix(&input.input, input.header, input.delim)?;
            let points = Points::new(data, n, dim)?;
            let r = symmetry::gof(&points, family, &test.scheme, &BootstrapConfig::new(bootstrap, seed))?;
            let d = Decision { report: &r, level: test.level, reject: r.p_value < test.level };
            emit(json, &d, || gof_text(&r, test.level))
        }
        Command::Simulate { scenario, workers, replicates, bootstrap, output } => {
            if workers == Some(0) {
                return Err(Failure::Usage("--workers must be at least 1".into()));
            }
            let path = resolve_scenario_path(&scenario, &scenario_dirs())
                .ok_or_else(|| Failure::Usage(format!("scenario `{scenario}` not found")))?;
            let mut file = ScenarioFile::load(&path)?;
            if let Some(s) = seed_override {
                file.seed = s;
            }
            if let Some(m) = replicates {
                file.replicates = m;
            }
            if let Some(b) = bootstrap {
                if let sobolev_core::TestSpec::GofComposite { bootstrap, .. } = &mut file.test {
                    *bootstrap = b;
                }
            }
            let mut rows: Vec<RejectionRow> = Vec::new();
            for s in file.scenarios() {
                let row = run_scenario(&s, workers)?;
                log::info!(
                    "{} n={} dim={}: {:.1}% in {:.1}s",
                    row.id,
                    row.n,
                    row.dim,
                    100.0 * row.rejection_rate,
                    row.wall_time
                );
                rows.push(row);
            }
            let mut w = writer(&output)?;
            let res = if json {
                serde_json::to_writer_pretty(&mut w, &rows).map_err(io::Error::from).and_then(|_| writeln!(w))
            } else {
                writeln!(w, "{}", RejectionRow::CSV_HEADER)
                    .and_then(|_| rows.iter().try_for_each(|r| writeln!(w, "{}", r.csv_line())))
            };
            res.and_then(|_| w.flush()).map_err(|e| Failure::Compute(e.to_string()))
        }
        Command::Dist { model, n, d, output, delim } => {
            let spec = parse_model(&model)?;
            let sampler = spec.compile(n, d)?;
            let points = sampler.draw(&mut RngStream::new(seed, 0).rng())?;
            let mut w = writer(&output)?;
            let sep = delim.to_string();
            let res = points
                .rows()
                .try_for_each(|row| {
                    let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    writeln!(w, "{}", line.join(&sep))
                })
                .and_then(|_| w.flush());
            res.map_err(|e| Failure::Compute(e.to_string()))
        }
        Command::Selftest => {
            let checks = selftest::run_all(seed)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            emit(json, &checks, || {
                checks
                    .iter()
                    .map(|c| {
                        format!(
                            "{} {:<70} {:.3e} (< {:.0e})",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.name,
                            c.value,
                            c.tolerance
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            })?;
            if failed > 0 {
                return Err(Failure::Compute(format!("{failed} self-check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
