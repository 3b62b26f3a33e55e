//! Command-line front end. [`run`] parses arguments, executes one subcommand and
//! returns the process exit code:
//! `0` success, `1` failed KMS audit, `2` usage or validation error, `3` numeric overflow.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asymptotics::critical_beta;
use crate::error::{Error, Result};
use crate::flow::PotentialRule;
use crate::kms::{gibbs_state, kms_defect_criterion, kms_defect_direct, log_partition_function, partition_function};
use crate::numeric::fmt_f64;
use crate::operator::{band_decompose, reassemble, BandOperator, TripletJson};
use crate::sample;
use crate::space::{from_distance_matrix, growth_profile, make_interval, make_squares, make_tree, FiniteSpace, SpaceJson, SpaceKind, TruncationSequence};
use crate::tree::phase_report;
use crate::VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "ROE_KMS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "roe-kms", version, about = "KMS states and Gibbs equilibria for band operators on metric spaces")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the artifact here instead of standard output.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (falls back to ROE_KMS_THREADS, then all cores).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// β values given either as a list or as an inclusive linear grid.
#[derive(Debug, Clone, Args, Serialize)]
pub struct BetaGrid {
    /// Explicit β values, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_max: Option<f64>,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    pub steps: Option<usize>,
}

impl BetaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let mut out = self.beta.clone();
        match (self.beta_min, self.beta_max, self.steps) {
            (None, None, None) => {}
            (Some(lo), Some(hi), steps) => {
                let steps = steps.unwrap_or(11);
                if steps == 0 || hi < lo {
                    return Err(Error::InvalidArgument(format!("bad grid [{lo}, {hi}] with {steps} steps")));
                }
                if steps == 1 {
                    out.push(lo);
                } else {
                    let h = (hi - lo) / (steps - 1) as f64;
                    out.extend((0..steps).map(|i| if i + 1 == steps { hi } else { lo + h * i as f64 }));
                }
            }
            _ => return Err(Error::InvalidArgument("--beta-min and --beta-max go together".into())),
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("no β given: use --beta or --beta-min/--beta-max".into()));
        }
        if out.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("β values must be finite".into()));
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build a space and report its ball-growth profile.
    Space {
        /// interval:N, squares:N, tree:N:DEPTH or a JSON file.
        #[arg(long)]
        space: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 4.0])]
        radii: Vec<f64>,
    },
    /// Partition function Z(β) over a β grid.
    Zsweep {
        #[arg(long)]
        space: String,
        /// word-length, label, log-label, log-sqrt-label, zero or table:v0,v1,…
        #[arg(long)]
        potential: Option<String>,
        #[command(flatten)]
        grid: BetaGrid,
    },
    /// Bracket the critical β of a truncation family.
    Critical {
        /// interval, squares or tree:N.
        #[arg(long)]
        family: String,
        #[arg(long)]
        potential: Option<String>,
        #[command(flatten)]
        grid: BetaGrid,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1024, 2048, 4096, 8192, 16384, 32768, 65536])]
        depths: Vec<usize>,
    },
    /// Check the KMS condition of the Gibbs state on seeded test populations.
    KmsAudit {
        #[arg(long)]
        space: String,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 100)]
        translations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = crate::kms::DEFAULT_KMS_TOL)]
        tol: f64,
        /// Also write the Gibbs weights as CSV (id,label,weight).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Split a band operator into diagonal-times-partial-translation terms.
    Decompose {
        #[arg(long)]
        space: String,
        /// Operator in triplet JSON ({rows, cols, re, im}); random when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Phase classification of the n-branching tree across β.
    TreeReport {
        #[arg(short = 'n', long = "branching")]
        n: usize,
        #[command(flatten)]
        grid: BetaGrid,
        #[arg(long, value_delimiter = ',', default_values_t = vec![256, 512, 1024])]
        depths: Vec<usize>,
    },
}

impl Command {
    fn seed(&self) -> Option<u64> {
        match self {
            Command::KmsAudit { seed, .. } | Command::Decompose { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// Parses `interval:N`, `squares:N`, `tree:N:DEPTH`, or reads a space JSON file.
pub fn parse_space(spec: &str) -> Result<FiniteSpace> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{spec}: {e}")));
    match parts.as_slice() {
        ["interval", n] => make_interval(num(n)?),
        ["squares", n] => make_squares(num(n)?),
        ["tree", n, d] => make_tree(num(n)?, num(d)?),
        _ if spec.ends_with(".json") => {
            let text = std::fs::read_to_string(spec)?;
            if let Ok(json) = serde_json::from_str::<SpaceJson>(&text) {
                return FiniteSpace::from_json(&json);
            }
            let d: Vec<Vec<f64>> = serde_json::from_str(&text)?;
            from_distance_matrix(&d)
        }
        _ => Err(Error::Parse(format!("unknown space '{spec}'"))),
    }
}

/// Parses `interval`, `squares` or `tree:N`.
pub fn parse_family(spec: &str) -> Result<TruncationSequence> {
    match spec.split(':').collect::<Vec<_>>().as_slice() {
        ["interval"] => Ok(TruncationSequence::Interval),
        ["squares"] => Ok(TruncationSequence::Squares),
        ["tree", n] => {
            let n = n.parse::<usize>().map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
            if n == 0 {
                return Err(Error::InvalidArgument("tree branching must be at least 1".into()));
            }
            Ok(TruncationSequence::Tree { n })
        }
        _ => Err(Error::Parse(format!("unknown family '{spec}'"))),
    }
}

fn potential_for(space: &FiniteSpace, spec: Option<&str>) -> Result<PotentialRule> {
    match spec {
        Some(s) => s.parse(),
        None => Ok(match space.kind() {
            SpaceKind::Interval { .. } => PotentialRule::LogLabel,
            SpaceKind::Squares { .. } => PotentialRule::LogSqrtLabel,
            SpaceKind::Tree { .. } => PotentialRule::WordLength,
            SpaceKind::Custom => PotentialRule::Zero,
        }),
    }
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    tool: &'static str,
    seed: Option<u64>,
    config: &'a Cli,
    result: T,
}

/// A CSV table with its provenance header.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn render(&self, cli: &Cli) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "# tool: {VERSION}")?;
        writeln!(buf, "# seed: {}", cli.command.seed().map_or("none".to_string(), |s| s.to_string()))?;
        writeln!(buf, "# config: {}", serde_json::to_string(cli)?)?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }
}

fn render_json<T: Serialize>(cli: &Cli, result: T) -> Result<Vec<u8>> {
    let art = Artifact { tool: VERSION, seed: cli.command.seed(), config: cli, result };
    let mut buf = serde_json::to_vec_pretty(&art)?;
    buf.push(b'\n');
    Ok(buf)
}

struct Outcome {
    bytes: Vec<u8>,
    code: i32,
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let csv = cli.format == Format::Csv;
    let ok = |bytes: Vec<u8>| Ok(Outcome { bytes, code: EXIT_OK });
    match &cli.command {
        Command::Space { space, radii } => {
            let s = parse_space(space)?;
            let growth = growth_profile(&s, radii)?;
            if csv {
                let mut t = Table::new(&["id", "label"]);
                for p in s.points() {
                    t.rows.push(vec![p.id.to_string(), p.label.clone().unwrap_or_default()]);
                }
                ok(t.render(cli)?)
            } else {
                #[derive(Serialize)]
                struct Out {
                    space: SpaceJson,
                    growth: Vec<(f64, usize)>,
                }
                ok(render_json(cli, Out { space: s.to_json(), growth })?)
            }
        }
        Command::Zsweep { space, potential, grid } => {
            let s = parse_space(space)?;
            let h = potential_for(&s, potential.as_deref())?.on(&s)?;
            #[derive(Serialize)]
            struct Row {
                beta: f64,
                log_z: f64,
                z: f64,
            }
            let rows = grid
                .values()?
                .into_iter()
                .map(|beta| {
                    Ok(Row { beta, log_z: log_partition_function(&s, &h, beta)?, z: partition_function(&s, &h, beta)? })
                })
                .collect::<Result<Vec<_>>>()?;
            if csv {
                let mut t = Table::new(&["beta", "log_z", "z"]);
                t.rows = rows.iter().map(|r| vec![fmt_f64(r.beta), fmt_f64(r.log_z), fmt_f64(r.z)]).collect();
                ok(t.render(cli)?)
            } else {
                ok(render_json(cli, rows)?)
            }
        }
        Command::Critical { family, potential, grid, depths } => {
            let seq = parse_family(family)?;
            let rule = match potential {
                Some(p) => p.parse()?,
                None => PotentialRule::default_for(seq),
            };
            let est = critical_beta(seq, &rule, &grid.values()?, depths)?;
            if csv {
                let mut t = Table::new(&["beta", "verdict", "tail_increment", "growth"]);
                t.rows = est
                    .verdicts
                    .iter()
                    .map(|v| vec![fmt_f64(v.beta), v.verdict.to_string(), fmt_f64(v.tail_increment), fmt_f64(v.growth)])
                    .collect();
                ok(t.render(cli)?)
            } else {
                ok(render_json(cli, est)?)
            }
        }
        Command::KmsAudit { space, potential, beta, pairs, translations, seed, tol, weights } => {
            let s = parse_space(space)?.into_shared();
            let h = potential_for(&s, potential.as_deref())?.on(&s)?;
            let phi = gibbs_state(&s, &h, *beta)?;
            let ops = sample::operator_pairs(&s, *pairs, *seed);
            let fs = sample::translations(&s, *translations, seed.wrapping_add(1));
            let report = kms_defect_direct(&phi, &h, *beta, &ops)?.merge(kms_defect_criterion(&phi, &h, *beta, &fs)?);
            let passes = report.passes(*tol);
            if let Some(path) = weights {
                let file = std::fs::File::create(path)?;
                phi.write_csv(&s, file)?;
            }
            let bytes = if csv {
                let mut t = Table::new(&["beta", "defect_direct", "defect_criterion", "samples", "tol", "passes"]);
                let opt = |d: Option<f64>| d.map(fmt_f64).unwrap_or_default();
                t.rows.push(vec![
                    fmt_f64(report.beta),
                    opt(report.defect_direct),
                    opt(report.defect_criterion),
                    report.samples.to_string(),
                    fmt_f64(*tol),
                    passes.to_string(),
                ]);
                t.render(cli)?
            } else {
                #[derive(Serialize)]
                struct Out {
                    report: crate::kms::KmsReport,
                    tol: f64,
                    passes: bool,
                }
                render_json(cli, Out { report, tol: *tol, passes })?
            };
            Ok(Outcome { bytes, code: if passes { EXIT_OK } else { EXIT_AUDIT_FAILED } })
        }
        Command::Decompose { space, input, radius, density, seed } => {
            let s = parse_space(space)?.into_shared();
            let a = match input {
                Some(path) => {
                    let t: TripletJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                    BandOperator::from_triplets(s.clone(), &t)?
                }
                None => sample::random_band_operator(&s, *radius, *density, &mut sample::rng(*seed)),
            };
            let terms = band_decompose(&a);
            let error = reassemble(s.clone(), &terms)?.max_abs_diff(&a)?;
            let ball_bound = s.max_ball_size(a.propagation());
            if csv {
                let mut t = Table::new(&["term", "domain_size", "displacement", "nonzero_coefficients"]);
                for (i, (d, f)) in terms.iter().enumerate() {
                    t.rows.push(vec![
                        i.to_string(),
                        f.len().to_string(),
                        fmt_f64(f.displacement()),
                        d.support().len().to_string(),
                    ]);
                }
                ok(t.render(cli)?)
            } else {
                #[derive(Serialize)]
                struct Term {
                    coefficients: TripletJson,
                    translation: crate::translation::TranslationJson,
                    displacement: f64,
                }
                #[derive(Serialize)]
                struct Out {
                    nnz: usize,
                    propagation: f64,
                    ball_bound: usize,
                    term_count: usize,
                    reconstruction_error: f64,
                    terms: Vec<Term>,
                }
                let terms_json = terms
                    .iter()
                    .map(|(d, f)| Term {
                        coefficients: BandOperator::diagonal(s.clone(), d).map(|b| b.to_triplets()).unwrap_or_default(),
                        translation: f.to_json(),
                        displacement: f.displacement(),
                    })
                    .collect();
                ok(render_json(
                    cli,
                    Out {
                        nnz: a.nnz(),
                        propagation: a.propagation(),
                        ball_bound,
                        term_count: terms.len(),
                        reconstruction_error: error,
                        terms: terms_json,
                    },
                )?)
            }
        }
        Command::TreeReport { n, grid, depths } => {
            let report = phase_report(*n, &grid.values()?, depths)?;
            if csv {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                let mut out = Vec::new();
                writeln!(out, "# tool: {VERSION}")?;
                writeln!(out, "# seed: none")?;
                writeln!(out, "# config: {}", serde_json::to_string(cli)?)?;
                out.extend(buf);
                ok(out)
            } else {
                ok(render_json(cli, report)?)
            }
        }
    }
}

fn thread_count(cli: &Cli) -> Result<Option<usize>> {
    if let Some(t) = cli.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|e| Error::InvalidArgument(format!("{THREADS_ENV}={v}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_overflow() {
        EXIT_OVERFLOW
    } else {
        EXIT_USAGE
    }
}

/// Runs the tool with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = thread_count(&cli).and_then(|threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| execute(&cli))
    });
    match result {
        Ok(outcome) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &outcome.bytes).map_err(Error::from),
                None => out.write_all(&outcome.bytes).map_err(Error::from),
            };
            match written {
                Ok(()) => outcome.code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs the tool against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
