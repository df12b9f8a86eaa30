//! The `recurlab` command-line driver.
//!
//! Subcommands return an exit status instead of calling `process::exit`, so
//! they can be driven in-process. Status 0 means every check passed, 1 a
//! usage or configuration error, 2 a refusal or a failed check.
//!
//! Every report embeds a [`RunManifest`]. JSON is canonical; CSV output is a
//! projection preceded by one `# manifest: {..}` comment line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certifier::{certify, CertifyReport, Verdict, DEFAULT_EPS_GRID};
use crate::error::Error;
use crate::probsim::{
    convergence_in_probability_scan, make_x, make_y, parse_rational, quartile_verdict,
    rational_string, rho_bracket, rho_exact, rho_mc, tail_probability_exact, tail_probability_mc,
    union_probability_exact, verify_recurrence_identity, McConfig, McEstimate, RVLinearExpr,
    RhoBracket, ScanMode, ScanRow, ScanTable, GENERATOR, MAX_ENUM_TERMS, RHO_EXACT_MAX_FREE_TERMS,
    ROUNDING_SLACK,
};
use crate::pspace::{PSeminorm, SeminormFamily, Vector};
use crate::seqlab::SequenceSpec;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

pub const DEFAULT_PREFIX: usize = 200;
pub const DEFAULT_SAMPLES: u64 = 100_000;
/// Largest number of free events for which `counterexample` computes an
/// exact ρ bracket.
pub const RHO_BRACKET_MAX_FREE_TERMS: usize = 20;
/// MC estimates must lie within this many standard errors of their oracle.
pub const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(
    name = "recurlab",
    version,
    about = "Averaging-transform convergence certificates and counterexamples"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify `x_n → x` from a JSON config.
    Certify(CertifyArgs),
    /// Reproduce the convergence-in-probability counterexample.
    Counterexample(CounterexampleArgs),
    /// Tabulate `P(|r_n| > eps)` for a family of variables.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Mc,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanFamily {
    /// `Y_n`
    Y,
    /// `X_n`
    X,
    /// `X_{2n+1}`
    XOdd,
    /// The zero variable.
    Zero,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated epsilon grid; overrides the config.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Prefix length; overrides the config.
    #[arg(long)]
    pub prefix: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock runtime in the manifest.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Indices, e.g. `1..10` or `1,2,5` or `1..3,8`.
    #[arg(long = "n", value_parser = parse_index_list)]
    pub n: IndexList,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: u64,
    /// Required for `mc` and `both`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub family: ScanFamily,
    #[arg(long = "n", value_parser = parse_index_list)]
    pub n: IndexList,
    /// Threshold as `p/q`, an integer or a decimal.
    #[arg(long, default_value = "1/2")]
    pub eps: String,
    /// `both` enumerates where feasible and samples elsewhere.
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub mode: Mode,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub timings: bool,
}

/// Nonempty list of positive indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexList(pub Vec<u64>);

/// Parses `a..b` (inclusive) ranges and single indices separated by commas.
pub fn parse_index_list(s: &str) -> Result<IndexList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part.is_empty() {
            return Err("empty entry in index list".into());
        }
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("`{t}`: {e}"));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(part)?),
        }
    }
    if out.contains(&0) {
        return Err("indices start at 1".into());
    }
    Ok(IndexList(out))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: field `{field}`: {kind}: {message}")]
    Config {
        path: String,
        field: String,
        kind: &'static str,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{}: {}", .0.kind(), .0)]
    Model(#[from] Error),
}

/// Provenance block embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub parameters: Value,
    pub config_path: Option<String>,
    pub output_path: Option<String>,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl RunManifest {
    fn new(
        subcommand: &'static str,
        parameters: Value,
        out: Option<&Path>,
        seed: Option<u64>,
    ) -> Self {
        Self {
            subcommand,
            parameters,
            config_path: None,
            output_path: out.map(|p| p.display().to_string()),
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            runtime_ms: None,
        }
    }

    fn finish(&mut self, timings: bool, start: Instant) {
        if timings {
            self.runtime_ms = Some(start.elapsed().as_millis() as u64);
        }
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Certify(a) => run_certify(a),
        Command::Counterexample(a) => run_counterexample(a),
        Command::Scan(a) => run_scan(a),
    };
    match outcome {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_VIOLATION,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, body).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_with_manifest<R: Serialize>(
    manifest: &RunManifest,
    rows: impl IntoIterator<Item = R>,
) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv row serializes");
    }
    let body = String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8");
    format!(
        "# manifest: {}\n{body}",
        serde_json::to_string(manifest).expect("manifest serializes")
    )
}

fn require_seed(mode: Mode, seed: Option<u64>) -> Result<Option<u64>, CliError> {
    match (mode, seed) {
        (Mode::Exact, _) => Ok(None),
        (_, Some(s)) => Ok(Some(s)),
        (_, None) => Err(CliError::Usage(
            "--seed is required for mode mc and both".into(),
        )),
    }
}

// ---------------------------------------------------------------- certify

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeminormEntry {
    p: f64,
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertifyConfig {
    family: Vec<SeminormEntry>,
    sequence: SequenceSpec,
    limit: Vec<f64>,
    #[serde(default)]
    eps: Option<Vec<f64>>,
    #[serde(default)]
    prefix: Option<usize>,
}

/// Validated certify input.
#[derive(Debug, Clone)]
pub struct CertifyInput {
    pub family: SeminormFamily<f64>,
    pub sequence: SequenceSpec,
    pub limit: Vector<BigRational>,
    pub eps: Vec<f64>,
    pub prefix: usize,
}

/// Reads and validates a certify config. Errors name the offending field.
pub fn load_certify_config(
    path: &Path,
    eps: Option<&[f64]>,
    prefix: Option<usize>,
) -> Result<CertifyInput, CliError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: shown.clone(),
        source,
    })?;
    let config_err = |field: String, e: Error| CliError::Config {
        path: shown.clone(),
        field,
        kind: e.kind(),
        message: e.to_string(),
    };

    let mut de = serde_json::Deserializer::from_str(&text);
    let raw: CertifyConfig =
        serde_path_to_error::deserialize(&mut de).map_err(|e| CliError::Config {
            path: shown.clone(),
            field: e.path().to_string(),
            kind: "Parse",
            message: e.inner().to_string(),
        })?;

    let mut members = Vec::with_capacity(raw.family.len());
    for (i, s) in raw.family.into_iter().enumerate() {
        let m = PSeminorm::new(s.p, s.weights).map_err(|e| {
            let field = match &e {
                Error::ExponentOutOfRange { .. } => format!("family[{i}].p"),
                Error::InvalidWeight { index, .. } => format!("family[{i}].weights[{index}]"),
                _ => format!("family[{i}]"),
            };
            config_err(field, e)
        })?;
        members.push(m);
    }
    let family = SeminormFamily::new(members).map_err(|e| config_err("family".into(), e))?;

    let dim = raw
        .sequence
        .dim()
        .map_err(|e| config_err("sequence".into(), e))?;
    if dim != family.dim() {
        return Err(config_err(
            "sequence".into(),
            Error::DimensionMismatch {
                expected: family.dim(),
                found: dim,
            },
        ));
    }
    if raw.limit.len() != family.dim() {
        return Err(config_err(
            "limit".into(),
            Error::DimensionMismatch {
                expected: family.dim(),
                found: raw.limit.len(),
            },
        ));
    }
    let limit = Vector::new(raw.limit)
        .and_then(|v| v.to_exact())
        .map_err(|e| config_err("limit".into(), e))?;

    let eps = eps
        .map(<[f64]>::to_vec)
        .or(raw.eps)
        .unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec());
    if eps.is_empty() {
        return Err(config_err(
            "eps".into(),
            Error::InvalidArgument("epsilon grid is empty".into()),
        ));
    }
    if let Some(&bad) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(config_err(
            "eps".into(),
            Error::InvalidArgument(format!("epsilon {bad} must be positive and finite")),
        ));
    }
    let prefix = prefix.or(raw.prefix).unwrap_or(DEFAULT_PREFIX);
    if prefix < 3 {
        return Err(config_err(
            "prefix".into(),
            Error::PrefixTooShort {
                len: prefix,
                min: 3,
            },
        ));
    }
    Ok(CertifyInput {
        family,
        sequence: raw.sequence,
        limit,
        eps,
        prefix,
    })
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    manifest: &'a RunManifest,
    op: &'static str,
    report: &'a CertifyReport<f64>,
}

#[derive(Serialize)]
struct CertifyCsvRow {
    seminorm_index: usize,
    p: f64,
    epsilon: f64,
    verdict: Verdict,
    #[serde(rename = "N")]
    n: Option<usize>,
    m: Option<usize>,
    observed: Option<f64>,
    bound: Option<f64>,
    pass: Option<bool>,
}

fn certify_csv_rows(report: &CertifyReport<f64>) -> Vec<CertifyCsvRow> {
    let mut rows = Vec::new();
    for c in &report.certificates {
        let base = |m: Option<usize>,
                    observed: Option<f64>,
                    bound: Option<f64>,
                    pass: Option<bool>| CertifyCsvRow {
            seminorm_index: c.seminorm_index,
            p: c.p,
            epsilon: c.epsilon,
            verdict: c.verdict,
            n: c.n,
            m,
            observed,
            bound,
            pass,
        };
        if c.rows.is_empty() {
            rows.push(base(None, None, None, None));
        }
        for r in &c.rows {
            rows.push(base(
                Some(r.m),
                Some(r.observed),
                Some(r.bound),
                Some(r.pass),
            ));
        }
    }
    rows
}

/// `certify`: returns whether every (σ, ε) pair certified.
pub fn run_certify(args: &CertifyArgs) -> Result<bool, CliError> {
    let start = Instant::now();
    let input = load_certify_config(&args.config, args.eps.as_deref(), args.prefix)?;
    let report = certify::<BigRational, f64>(
        &input.family,
        &input.sequence,
        &input.limit,
        &input.eps,
        input.prefix,
    )
    .map_err(|e| CliError::Config {
        path: args.config.display().to_string(),
        field: match e {
            Error::PrefixTooShort { .. } => "sequence.terms".into(),
            _ => "sequence".into(),
        },
        kind: e.kind(),
        message: e.to_string(),
    })?;

    let mut manifest = RunManifest::new(
        "certify",
        json!({ "eps": input.eps, "prefix": input.prefix, "format": args.format }),
        args.out.as_deref(),
        None,
    );
    manifest.config_path = Some(args.config.display().to_string());
    manifest.finish(args.timings, start);

    let body = match args.format {
        Format::Json => to_json(&CertifyOutput {
            manifest: &manifest,
            op: "certify",
            report: &report,
        }),
        Format::Csv => csv_with_manifest(&manifest, certify_csv_rows(&report)),
    };
    emit(args.out.as_deref(), &body)?;
    Ok(report.all_certified)
}

// --------------------------------------------------------- counterexample

/// Reference value an MC estimate is compared against.
#[derive(Debug, Clone, PartialEq)]
enum Oracle {
    Exact(BigRational),
    Bracket(RhoBracket),
    AtLeast(BigRational),
}

impl Oracle {
    fn describe(&self) -> String {
        match self {
            Oracle::Exact(v) => format!("= {}", rational_string(v)),
            Oracle::Bracket(b) => format!(
                "in [{}, {}]",
                rational_string(&b.lower),
                rational_string(&b.upper)
            ),
            Oracle::AtLeast(v) => format!(">= {}", rational_string(v)),
        }
    }

    fn admits(&self, e: &McEstimate) -> bool {
        let f = |v: &BigRational| v.to_f64().unwrap_or(f64::NAN);
        match self {
            Oracle::Exact(v) => e.within(f(v), MC_SIGMAS),
            Oracle::Bracket(b) => {
                e.at_least(f(&b.lower), MC_SIGMAS)
                    && e.mean <= f(&b.upper) + MC_SIGMAS * e.stderr + ROUNDING_SLACK
            }
            Oracle::AtLeast(v) => e.at_least(f(v), MC_SIGMAS),
        }
    }
}

/// One reported quantity: exact value, MC estimate and their checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    /// Index of the variable (`n` for `Y_n`, `2n+1` for `X_{2n+1}`).
    pub index: u64,
    /// The claim the exact value is checked against.
    pub claim: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<RhoBracket>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim_holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_within_4_stderr: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl Quantity {
    fn new(index: u64, claim: &'static str) -> Self {
        Self {
            index,
            claim,
            exact: None,
            bracket: None,
            claim_holds: None,
            mc: None,
            oracle: None,
            mc_within_4_stderr: None,
            skipped: None,
        }
    }

    fn passed(&self) -> bool {
        self.claim_holds != Some(false) && self.mc_within_4_stderr != Some(false)
    }

    fn attach_mc(&mut self, e: McEstimate, oracle: &Oracle) {
        self.mc_within_4_stderr = Some(oracle.admits(&e));
        self.oracle = Some(oracle.describe());
        self.mc = Some(e);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleEntry {
    pub n: u64,
    pub union_probability_exact: String,
    pub union_is_half: bool,
    pub recurrence_identity: bool,
    /// `P(|Y_n| > 1/2)`.
    pub y_tail: Quantity,
    /// `P(|X_{2n+1}| > 1/2)`.
    pub x_tail: Quantity,
    /// `ρ(Y_n, 0)`.
    pub rho_y: Quantity,
    /// `ρ(X_{2n+1}, 0)`.
    pub rho_x: Quantity,
    pub pass: bool,
}

#[derive(Serialize)]
struct CounterexampleOutput<'a> {
    manifest: &'a RunManifest,
    op: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<&'static str>,
    entries: &'a [CounterexampleEntry],
    all_pass: bool,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `ρ(Y_n, 0) = 2^n / (n(2^n + 1))`.
fn rho_y_closed_form(n: u64) -> BigRational {
    let p = BigInt::one() << n as usize;
    BigRational::new(p.clone(), BigInt::from(n) * (p + 1))
}

fn counterexample_entry(
    n: u64,
    mode: Mode,
    mc: Option<&McConfig>,
) -> Result<CounterexampleEntry, CliError> {
    let half = q(1, 2);
    let sixth = q(1, 6);
    let union = union_probability_exact(n)?;
    let identity = verify_recurrence_identity(n)?;
    let y = make_y(n)?;
    let x = make_x(2 * n + 1)?;
    let zero = RVLinearExpr::zero();
    let want_exact = mode != Mode::Mc;

    let mut y_tail = Quantity::new(n, "= 1/n");
    let y_tail_value = tail_probability_exact(&y, &half)?;
    let y_tail_oracle = q(1, n as i64);
    if want_exact {
        y_tail.claim_holds = Some(y_tail_value == y_tail_oracle);
        y_tail.exact = Some(rational_string(&y_tail_value));
    }

    let mut rho_y = Quantity::new(n, "= 2^n/(n(2^n+1))");
    let rho_y_value = rho_exact(&y, &zero)?;
    let rho_y_oracle = rho_y_closed_form(n);
    if want_exact {
        rho_y.claim_holds = Some(rho_y_value == rho_y_oracle);
        rho_y.exact = Some(rational_string(&rho_y_value));
    }

    let mut x_tail = Quantity::new(2 * n + 1, ">= 1/2");
    let x_tail_oracle = if x.num_terms() <= MAX_ENUM_TERMS {
        let v = tail_probability_exact(&x, &half)?;
        if want_exact {
            x_tail.claim_holds = Some(v >= half);
            x_tail.exact = Some(rational_string(&v));
        }
        Oracle::Exact(v)
    } else {
        if want_exact {
            x_tail.skipped = Some(format!(
                "{} events exceed the enumeration cap of {MAX_ENUM_TERMS}",
                x.num_terms()
            ));
        }
        Oracle::AtLeast(half.clone())
    };

    let mut rho_x = Quantity::new(2 * n + 1, "> 1/6");
    // X always contains the sure event S_1, which is not a free term.
    let free = x.num_terms() - 1;
    let rho_x_oracle = if free <= RHO_EXACT_MAX_FREE_TERMS {
        let v = rho_exact(&x, &zero)?;
        if want_exact {
            rho_x.claim_holds = Some(v > sixth);
            rho_x.exact = Some(rational_string(&v));
        }
        Oracle::Exact(v)
    } else if free <= RHO_BRACKET_MAX_FREE_TERMS {
        let b = rho_bracket(&x, &zero)?;
        if want_exact {
            rho_x.claim_holds = Some(b.lower > sixth);
            rho_x.bracket = Some(b.clone());
        }
        Oracle::Bracket(b)
    } else {
        if want_exact {
            rho_x.skipped = Some(format!(
                "{free} free events exceed the bracket cap of {RHO_BRACKET_MAX_FREE_TERMS}"
            ));
        }
        Oracle::AtLeast(sixth)
    };

    if let Some(cfg) = mc {
        y_tail.attach_mc(
            tail_probability_mc(&y, &half, cfg)?,
            &Oracle::Exact(y_tail_oracle),
        );
        rho_y.attach_mc(rho_mc(&y, &zero, cfg)?, &Oracle::Exact(rho_y_oracle));
        x_tail.attach_mc(tail_probability_mc(&x, &half, cfg)?, &x_tail_oracle);
        rho_x.attach_mc(rho_mc(&x, &zero, cfg)?, &rho_x_oracle);
    }

    let union_is_half = union == half;
    let pass = union_is_half
        && identity
        && [&y_tail, &x_tail, &rho_y, &rho_x]
            .iter()
            .all(|q| q.passed());
    Ok(CounterexampleEntry {
        n,
        union_probability_exact: rational_string(&union),
        union_is_half,
        recurrence_identity: identity,
        y_tail,
        x_tail,
        rho_y,
        rho_x,
        pass,
    })
}

/// Runs the counterexample over `ns`.
pub fn counterexample_entries(
    ns: &[u64],
    mode: Mode,
    mc: Option<&McConfig>,
) -> Result<Vec<CounterexampleEntry>, CliError> {
    if ns.is_empty() {
        return Err(CliError::Usage("index list is empty".into()));
    }
    if mode != Mode::Exact && mc.is_none() {
        return Err(CliError::Usage("sampling configuration missing".into()));
    }
    if let Some(cfg) = mc {
        cfg.validate(ns.iter().map(|n| 2 * n + 1).max())?;
    }
    let mc = if mode == Mode::Exact { None } else { mc };
    ns.iter()
        .map(|&n| counterexample_entry(n, mode, mc))
        .collect()
}

#[derive(Serialize)]
struct CounterexampleCsvRow<'a> {
    n: u64,
    quantity: &'static str,
    index: u64,
    exact: Option<&'a str>,
    mc_mean: Option<f64>,
    mc_stderr: Option<f64>,
    pass: bool,
}

/// `counterexample`: returns whether every check passed.
pub fn run_counterexample(args: &CounterexampleArgs) -> Result<bool, CliError> {
    let start = Instant::now();
    let seed = require_seed(args.mode, args.seed)?;
    let cfg = seed.map(|s| McConfig::membership(s, args.samples));
    let entries = counterexample_entries(&args.n.0, args.mode, cfg.as_ref())?;
    let all_pass = entries.iter().all(|e| e.pass);

    let mut params = json!({ "n": args.n.0, "mode": args.mode, "format": args.format });
    if cfg.is_some() {
        params["samples"] = json!(args.samples);
    }
    let mut manifest = RunManifest::new("counterexample", params, args.out.as_deref(), seed);
    manifest.finish(args.timings, start);

    let body = match args.format {
        Format::Json => to_json(&CounterexampleOutput {
            manifest: &manifest,
            op: "counterexample",
            generator: cfg.map(|_| GENERATOR),
            entries: &entries,
            all_pass,
        }),
        Format::Csv => {
            let rows = entries.iter().flat_map(|e| {
                [
                    ("y_tail", &e.y_tail),
                    ("x_tail", &e.x_tail),
                    ("rho_y", &e.rho_y),
                    ("rho_x", &e.rho_x),
                ]
                .into_iter()
                .map(move |(name, qn)| CounterexampleCsvRow {
                    n: e.n,
                    quantity: name,
                    index: qn.index,
                    exact: qn.exact.as_deref(),
                    mc_mean: qn.mc.map(|m| m.mean),
                    mc_stderr: qn.mc.map(|m| m.stderr),
                    pass: qn.passed(),
                })
            });
            csv_with_manifest(&manifest, rows)
        }
    };
    emit(args.out.as_deref(), &body)?;
    Ok(all_pass)
}

// ------------------------------------------------------------------- scan

fn scan_variable(family: ScanFamily, n: u64) -> crate::Result<RVLinearExpr> {
    match family {
        ScanFamily::Y => make_y(n),
        ScanFamily::X => make_x(n),
        ScanFamily::XOdd => make_x(2 * n + 1),
        ScanFamily::Zero => Ok(RVLinearExpr::zero()),
    }
}

/// Tabulates the scan for any mode. `mc` is required unless `mode` is exact.
pub fn scan_table(
    family: ScanFamily,
    eps: &BigRational,
    ns: &[u64],
    mode: Mode,
    mc: Option<&McConfig>,
) -> Result<ScanTable, CliError> {
    let var = |n| scan_variable(family, n);
    match mode {
        Mode::Exact => Ok(convergence_in_probability_scan(var, eps, ns, None)?),
        Mode::Both => Ok(convergence_in_probability_scan(var, eps, ns, mc)?),
        Mode::Mc => {
            let cfg = mc.ok_or_else(|| CliError::Usage("sampling configuration missing".into()))?;
            if ns.is_empty() {
                return Err(CliError::Usage("index list is empty".into()));
            }
            let mut rows = Vec::with_capacity(ns.len());
            for &n in ns {
                let e = tail_probability_mc(&var(n)?, eps, cfg)?;
                rows.push(ScanRow {
                    n,
                    value: e.mean,
                    exact: None,
                    stderr: e.stderr,
                    mode: ScanMode::Mc,
                });
            }
            let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
            Ok(ScanTable {
                verdict: quartile_verdict(&values),
                rows,
            })
        }
    }
}

#[derive(Serialize)]
struct ScanOutput<'a> {
    manifest: &'a RunManifest,
    op: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<&'static str>,
    table: &'a ScanTable,
}

#[derive(Serialize)]
struct ScanCsvRow {
    n: u64,
    value: f64,
    stderr: f64,
    mode: ScanMode,
}

/// `scan`: descriptive, so any successful run passes.
pub fn run_scan(args: &ScanArgs) -> Result<bool, CliError> {
    let start = Instant::now();
    let eps = parse_rational(&args.eps).map_err(|e| CliError::Usage(format!("--eps: {e}")))?;
    if eps < q(0, 1) {
        return Err(CliError::Usage("--eps must be nonnegative".into()));
    }
    let seed = require_seed(args.mode, args.seed)?;
    let cfg = seed.map(|s| McConfig::membership(s, args.samples));
    let table = scan_table(args.family, &eps, &args.n.0, args.mode, cfg.as_ref())?;

    let mut params = json!({
        "family": args.family,
        "n": args.n.0,
        "eps": rational_string(&eps),
        "mode": args.mode,
        "format": args.format,
    });
    if cfg.is_some() {
        params["samples"] = json!(args.samples);
    }
    let mut manifest = RunManifest::new("scan", params, args.out.as_deref(), seed);
    manifest.finish(args.timings, start);

    let body = match args.format {
        Format::Json => to_json(&ScanOutput {
            manifest: &manifest,
            op: "scan",
            generator: cfg.map(|_| GENERATOR),
            table: &table,
        }),
        Format::Csv => csv_with_manifest(
            &manifest,
            table.rows.iter().map(|r| ScanCsvRow {
                n: r.n,
                value: r.value,
                stderr: r.stderr,
                mode: r.mode,
            }),
        ),
    };
    emit(args.out.as_deref(), &body)?;
    Ok(true)
}
