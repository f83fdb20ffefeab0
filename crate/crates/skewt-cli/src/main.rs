//! Command-line front end: tail-dependence constants, lambda computations,
//! rate fitting, quantile comparison, sampling, and empirical estimation,
//! with CSV data files and JSON reports.
//!
//! Every run prints a single JSON report to stdout containing a `manifest`
//! (command, parameters, tolerances, generator, version, duration). Data
//! rows go to `--out` when given; without `--out` the CSV takes stdout and
//! the report moves to stderr.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use skewt::asymptotics::{cross_quantile_expansion, integration_limits, quantile_asymptotic, tail_constants};
use skewt::model::{read_pairs_csv, GENERATOR_ALGORITHM};
use skewt::tail::{
    empirical_lambda, fit_rate_curve, lambda_limit, lambda_limit_with_error, lambda_of_u,
    rate_constants, rate_grid, sample_rate_curve,
};
use skewt::{Error as SkewtError, Margin, QuadConfig, SkewTParams};
use std::collections::HashMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<SkewtError> for CliError {
    fn from(e: SkewtError) -> Self {
        let code = match e {
            SkewtError::InvalidParameter(_)
            | SkewtError::Domain(_)
            | SkewtError::MalformedCsv { .. } => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "skewt",
    version,
    about = "Bivariate skew-t tail dependence: constants, lambda curves, rates, samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    /// Degrees of freedom eta > 0
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// Correlation, |rho| < 1 (default 0)
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    /// First skewness component (default 0)
    #[arg(long, allow_negative_numbers = true)]
    theta1: Option<f64>,
    /// Second skewness component (default 0)
    #[arg(long, allow_negative_numbers = true)]
    theta2: Option<f64>,
    /// Absolute quadrature tolerance
    #[arg(long = "abs-tol")]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance
    #[arg(long = "rel-tol")]
    rel_tol: Option<f64>,
    /// Maximum adaptive subdivision depth
    #[arg(long = "max-depth")]
    max_depth: Option<u32>,
    /// key=value file supplying defaults; explicit flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the data rows here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Data format (default csv)
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// All closed-form and integral constants for one parameter set
    Constants {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// lambda_L(u) on a list of levels, plus the limit lambda_L
    Lambda {
        #[command(flatten)]
        common: CommonArgs,
        /// Levels, comma separated (each in (0,1))
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Log-log fit of |lambda_L(u) - lambda_L| on a geometric grid
    Rate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "u-lo", default_value_t = 1e-4)]
        u_lo: f64,
        #[arg(long = "u-hi", default_value_t = 1e-2)]
        u_hi: f64,
        #[arg(long, default_value_t = 7)]
        points: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Numeric marginal quantiles against the second-order asymptote
    Quantile {
        #[command(flatten)]
        common: CommonArgs,
        /// Margin, 1 or 2
        #[arg(long, default_value_t = 1)]
        margin: u8,
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw seeded sample pairs and write them as CSV
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of pairs
        #[arg(short, long)]
        n: Option<u64>,
        /// RNG seed (default 0)
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Empirical tail dependence from a sample CSV
    Empirical {
        /// Input CSV with header x1,x2
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// 17 significant digits; parsing and reformatting is the identity on f64.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn read_config(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                i + 1
            )));
        };
        map.insert(
            key.trim().replace('_', "-").to_ascii_lowercase(),
            value.trim().to_string(),
        );
    }
    Ok(map)
}

struct Resolved {
    params: SkewTParams,
    cfg: QuadConfig,
    file: HashMap<String, String>,
}

impl CommonArgs {
    fn resolve(&self, default_cfg: QuadConfig) -> Result<Resolved, CliError> {
        let file = match &self.config {
            Some(path) => read_config(path)?,
            None => HashMap::new(),
        };
        let from_file = |key: &str| -> Result<Option<f64>, CliError> {
            file.get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| CliError::usage(format!("config key {key}: {e}")))
                })
                .transpose()
        };
        let eta = match self.eta.or(from_file("eta")?) {
            Some(v) => v,
            None => return Err(CliError::usage("--eta is required (flag or config file)")),
        };
        let rho = self.rho.or(from_file("rho")?).unwrap_or(0.0);
        let theta1 = self.theta1.or(from_file("theta1")?).unwrap_or(0.0);
        let theta2 = self.theta2.or(from_file("theta2")?).unwrap_or(0.0);
        let cfg = QuadConfig {
            abs_tol: self.abs_tol.or(from_file("abs-tol")?).unwrap_or(default_cfg.abs_tol),
            rel_tol: self.rel_tol.or(from_file("rel-tol")?).unwrap_or(default_cfg.rel_tol),
            max_depth: self
                .max_depth
                .or(from_file("max-depth")?.map(|v| v as u32))
                .unwrap_or(default_cfg.max_depth),
        };
        cfg.validate()?;
        Ok(Resolved {
            params: SkewTParams::new(eta, rho, theta1, theta2)?,
            cfg,
            file,
        })
    }
}

fn manifest(
    command: &str,
    params: &SkewTParams,
    cfg: &QuadConfig,
    extra: Map<String, Value>,
    seed: Option<u64>,
    started: Instant,
) -> Value {
    let mut parameters = Map::new();
    parameters.insert("eta".into(), json!(params.eta()));
    parameters.insert("rho".into(), json!(params.rho()));
    parameters.insert("theta1".into(), json!(params.theta1()));
    parameters.insert("theta2".into(), json!(params.theta2()));
    for (k, v) in extra {
        parameters.insert(k, v);
    }
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("parameters".into(), Value::Object(parameters));
    m.insert(
        "tolerances".into(),
        json!({
            "abs_tol": cfg.abs_tol,
            "rel_tol": cfg.rel_tol,
            "max_depth": cfg.max_depth,
        }),
    );
    if let Some(seed) = seed {
        m.insert("seed".into(), json!(seed));
        m.insert("generator".into(), json!(GENERATOR_ALGORITHM));
    }
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert(
        "duration_seconds".into(),
        json!(started.elapsed().as_secs_f64()),
    );
    Value::Object(m)
}

/// Rows already formatted as CSV fields (no header).
struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (name, field) in self.header.iter().zip(row) {
                        let v = if field.is_empty() {
                            Value::Null
                        } else {
                            match field.parse::<f64>() {
                                Ok(x) => json!(x),
                                Err(_) => json!(field),
                            }
                        };
                        obj.insert((*name).to_string(), v);
                    }
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Route the data table and the JSON report to the right streams.
fn emit(table: Option<(&Table, &OutputArgs)>, report: Value) -> Result<(), CliError> {
    let mut report_to_stderr = false;
    if let Some((table, output)) = table {
        let payload = match output.format {
            Format::Csv => table.to_csv(),
            Format::Json => format!("{:#}\n", table.to_json()),
        };
        match &output.out {
            Some(path) => fs::write(path, payload)?,
            None => {
                io::stdout().write_all(payload.as_bytes())?;
                report_to_stderr = true;
            }
        }
    }
    let text = format!("{report:#}\n");
    if report_to_stderr {
        io::stderr().write_all(text.as_bytes())?;
    } else {
        io::stdout().write_all(text.as_bytes())?;
    }
    Ok(())
}

fn validate_levels(u: &[f64]) -> Result<(), CliError> {
    for &v in u {
        if !(v > 0.0 && v < 1.0) {
            return Err(CliError::usage(format!("u must lie in (0,1), got {v}")));
        }
    }
    Ok(())
}

fn cmd_constants(common: &CommonArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let r = common.resolve(QuadConfig::default())?;
    let p = &r.params;
    let skew = p.marginal_skewness();
    let t1 = tail_constants(p, Margin::One);
    let t2 = tail_constants(p, Margin::Two);
    let cross = cross_quantile_expansion(p);
    let lims = integration_limits(p);
    let lambda = lambda_limit(p, &r.cfg)
        .map_err(|e| CliError::numerical(format!("lambda_L integral: {e}")))?;
    let rc = rate_constants(p, &r.cfg)
        .map_err(|e| CliError::numerical(format!("rate-constant integral: {e}")))?;

    let mut report = Map::new();
    report.insert("lambda1".into(), json!(skew.lambda1));
    report.insert("lambda2".into(), json!(skew.lambda2));
    report.insert("c1".into(), json!(t1.c));
    report.insert("d1".into(), json!(t1.d));
    report.insert("c2".into(), json!(t2.c));
    report.insert("d2".into(), json!(t2.d));
    report.insert("ratio".into(), json!(cross.ratio));
    report.insert("first_order".into(), json!(cross.first_order));
    report.insert("a21".into(), json!(lims.a21));
    report.insert("a12".into(), json!(lims.a12));
    report.insert("L1".into(), json!(lims.l1));
    report.insert("L2".into(), json!(lims.l2));
    report.insert("lambda_L".into(), json!(lambda));
    report.insert("k21".into(), json!(rc.k21));
    report.insert("k12".into(), json!(rc.k12));
    report.insert("k".into(), json!(rc.k));
    report.insert("prefactor".into(), json!(rc.prefactor));
    report.insert(
        "manifest".into(),
        manifest("constants", p, &r.cfg, Map::new(), None, started),
    );
    emit(None, Value::Object(report))
}

fn cmd_lambda(common: &CommonArgs, u: &[f64], output: &OutputArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let r = common.resolve(QuadConfig::default())?;
    validate_levels(u)?;
    let limit = lambda_limit(&r.params, &r.cfg)
        .map_err(|e| CliError::numerical(format!("lambda_L integral: {e}")))?;
    let mut rows = Vec::new();
    for &level in u {
        let v = lambda_of_u(&r.params, level, &r.cfg)
            .map_err(|e| CliError::numerical(format!("lambda_L({level}): {e}")))?;
        rows.push(vec![fmt17(level), fmt17(v)]);
    }
    let table = Table {
        header: &["u", "lambda_u"],
        rows,
    };
    let mut extra = Map::new();
    extra.insert("u".into(), json!(u));
    let report = json!({
        "lambda_L": limit,
        "manifest": manifest("lambda", &r.params, &r.cfg, extra, None, started),
    });
    emit(Some((&table, output)), report)
}

fn cmd_rate(
    common: &CommonArgs,
    u_lo: f64,
    u_hi: f64,
    points: usize,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let started = Instant::now();
    let r = common.resolve(QuadConfig::tail_rate())?;
    let grid = rate_grid(u_lo, u_hi, points)?;
    let (limit, limit_err) = lambda_limit_with_error(&r.params, &r.cfg)
        .map_err(|e| CliError::numerical(format!("lambda_L integral: {e}")))?;
    let evaluated = sample_rate_curve(&r.params, &grid, &r.cfg);

    let mut rows = Vec::new();
    let mut good = Vec::new();
    let mut failures = Vec::new();
    for (u, res) in grid.iter().zip(evaluated) {
        match res {
            Ok(s) => {
                let diff = (s.lambda_u - limit).abs();
                rows.push(vec![
                    fmt17(s.u),
                    fmt17(s.lambda_u),
                    fmt17(diff),
                    fmt17(s.u.ln()),
                    fmt17(diff.ln()),
                ]);
                good.push(s);
            }
            Err(e) => {
                rows.push(vec![
                    fmt17(*u),
                    String::new(),
                    String::new(),
                    fmt17(u.ln()),
                    String::new(),
                ]);
                failures.push(json!({ "u": u, "error": e.to_string() }));
            }
        }
    }
    let table = Table {
        header: &["u", "lambda_u", "abs_diff", "log_u", "log_abs_diff"],
        rows,
    };

    let theory_slope = 2.0 / r.params.eta();
    let rc = rate_constants(&r.params, &r.cfg)
        .map_err(|e| CliError::numerical(format!("rate-constant integral: {e}")))?;
    let mut report = Map::new();
    report.insert("lambda_L".into(), json!(limit));
    report.insert("theory_slope".into(), json!(theory_slope));
    report.insert("theory_prefactor".into(), json!(rc.prefactor));
    if failures.is_empty() {
        let fit = fit_rate_curve(&good, limit, limit_err, r.cfg.abs_tol)?;
        report.insert("slope".into(), json!(fit.slope));
        report.insert("prefactor_hat".into(), json!(fit.prefactor_hat));
        report.insert("r_squared".into(), json!(fit.fit.r_squared));
        if !fit.excluded.is_empty() {
            report.insert("excluded_u".into(), json!(fit.excluded));
        }
    } else {
        report.insert("failed_points".into(), Value::Array(failures.clone()));
    }
    let mut extra = Map::new();
    extra.insert("u_lo".into(), json!(u_lo));
    extra.insert("u_hi".into(), json!(u_hi));
    extra.insert("points".into(), json!(points));
    report.insert(
        "manifest".into(),
        manifest("rate", &r.params, &r.cfg, extra, None, started),
    );
    emit(Some((&table, output)), Value::Object(report))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::numerical(format!(
            "{} of {} grid points failed; partial CSV written",
            failures.len(),
            points
        )))
    }
}

fn cmd_quantile(
    common: &CommonArgs,
    margin: u8,
    u: &[f64],
    output: &OutputArgs,
) -> Result<(), CliError> {
    let started = Instant::now();
    let r = common.resolve(QuadConfig::default())?;
    let margin = Margin::try_from(margin)?;
    validate_levels(u)?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &level in u {
        let numeric = r
            .params
            .marginal_quantile(margin, level, &r.cfg)
            .map_err(|e| CliError::numerical(format!("inversion at u = {level}: {e}")))?;
        let asym = quantile_asymptotic(&r.params, margin, level)?;
        let rel_err = ((numeric - asym) / numeric).abs();
        if level > 0.1 {
            warnings.push(format!(
                "u = {level} is outside the asymptotic regime (u <= 0.1)"
            ));
        }
        rows.push(vec![
            fmt17(level),
            fmt17(numeric),
            fmt17(asym),
            fmt17(rel_err),
        ]);
    }
    let table = Table {
        header: &["u", "numeric", "asymptotic", "rel_err"],
        rows,
    };
    let mut extra = Map::new();
    extra.insert("margin".into(), json!(margin.index()));
    extra.insert("u".into(), json!(u));
    let mut report = Map::new();
    if !warnings.is_empty() {
        report.insert("warnings".into(), json!(warnings));
    }
    report.insert(
        "manifest".into(),
        manifest("quantile", &r.params, &r.cfg, extra, None, started),
    );
    emit(Some((&table, output)), Value::Object(report))
}

fn cmd_sample(
    common: &CommonArgs,
    n: Option<u64>,
    seed: Option<u64>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let started = Instant::now();
    let r = common.resolve(QuadConfig::default())?;
    let n = n
        .or_else(|| r.file.get("n").and_then(|v| v.parse().ok()))
        .ok_or_else(|| CliError::usage("-n is required (flag or config file)"))?;
    if n == 0 {
        return Err(CliError::usage("sample count must be at least 1"));
    }
    let seed = seed
        .or_else(|| r.file.get("seed").and_then(|v| v.parse().ok()))
        .unwrap_or(0);
    let pairs = r.params.sample(n as usize, seed)?;

    let mut report_to_stderr = false;
    match output.format {
        Format::Csv => match &output.out {
            Some(path) => {
                let file = fs::File::create(path)?;
                let mut w = BufWriter::new(file);
                pairs.write_csv(&mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = BufWriter::new(stdout.lock());
                pairs.write_csv(&mut w)?;
                w.flush()?;
                report_to_stderr = true;
            }
        },
        Format::Json => {
            let rows: Vec<Value> = pairs
                .rows()
                .iter()
                .map(|&(a, b)| json!({ "x1": a, "x2": b }))
                .collect();
            let payload = format!("{:#}\n", Value::Array(rows));
            match &output.out {
                Some(path) => fs::write(path, payload)?,
                None => {
                    io::stdout().write_all(payload.as_bytes())?;
                    report_to_stderr = true;
                }
            }
        }
    }

    let mut extra = Map::new();
    extra.insert("n".into(), json!(n));
    if let Some(path) = &output.out {
        extra.insert("out".into(), json!(path.display().to_string()));
    }
    let report = json!({
        "rows": pairs.len(),
        "manifest": manifest("sample", &r.params, &r.cfg, extra, Some(seed), started),
    });
    let text = format!("{report:#}\n");
    if report_to_stderr {
        io::stderr().write_all(text.as_bytes())?;
    } else {
        io::stdout().write_all(text.as_bytes())?;
    }
    Ok(())
}

fn cmd_empirical(input: &Path, u: &[f64], output: &OutputArgs) -> Result<(), CliError> {
    let started = Instant::now();
    validate_levels(u)?;
    let file = fs::File::open(input)?;
    let pairs = read_pairs_csv(io::BufReader::new(file))?;
    let n = pairs.len();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &level in u {
        let est = empirical_lambda(&pairs, level)?;
        if !est.reliable {
            warnings.push(format!(
                "u = {level}: n*u = {:.1} < 20, estimate unreliable",
                n as f64 * level
            ));
        }
        let std_err = (est.value * (1.0 - est.value) / est.order as f64).sqrt();
        rows.push(vec![
            fmt17(level),
            fmt17(est.value),
            est.tail_count.to_string(),
            fmt17(std_err),
        ]);
    }
    let table = Table {
        header: &["u", "lambda_hat", "count", "std_err"],
        rows,
    };
    let mut report = Map::new();
    report.insert("n".into(), json!(n));
    if !warnings.is_empty() {
        report.insert("warnings".into(), json!(warnings));
    }
    let mut m = Map::new();
    m.insert("command".into(), json!("empirical"));
    m.insert(
        "parameters".into(),
        json!({ "input": input.display().to_string(), "u": u }),
    );
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert(
        "duration_seconds".into(),
        json!(started.elapsed().as_secs_f64()),
    );
    report.insert("manifest".into(), Value::Object(m));
    emit(Some((&table, output)), Value::Object(report))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Constants { common } => cmd_constants(common),
        Command::Lambda { common, u, output } => cmd_lambda(common, u, output),
        Command::Rate {
            common,
            u_lo,
            u_hi,
            points,
            output,
        } => cmd_rate(common, *u_lo, *u_hi, *points, output),
        Command::Quantile {
            common,
            margin,
            u,
            output,
        } => cmd_quantile(common, *margin, u, output),
        Command::Sample {
            common,
            n,
            seed,
            output,
        } => cmd_sample(common, *n, *seed, output),
        Command::Empirical { input, u, output } => cmd_empirical(input, u, output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
