//! Command-line surface for the associative memory.
//!
//! Models live in a single binary file. Oracle data (each stored pattern with
//! its label and code) lives in a `<model>.registry` sidecar so the model file
//! itself holds nothing localist. Commands that write take a `<model>.lock`
//! file for their duration, validate all input first, and replace files by
//! renaming a finished temp file into place.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdrqc_core::bench::{run_scaling, run_sisc, Emit, Format, ScalingConfig, SiscConfig};
use sdrqc_core::{
    BitPattern, CostReport, FieldGeometry, Memory, ModelParams, Registry, SelectMode,
};

pub mod patterns;

use patterns::Labeled;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sdrqc_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0} is locked by another process (remove the lock file if it is stale)")]
    Locked(PathBuf),
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "sdrqc",
    version,
    about = "Sparse distributed associative memory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a fresh model file and print its geometry.
    Init {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Replace an existing model and discard its registry.
        #[arg(long)]
        force: bool,
    },
    /// Store each pattern and print `label<TAB>code<TAB>G`.
    Store {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        patterns: PatternArgs,
    },
    /// Recall each probe without modifying the model.
    Query {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        patterns: PatternArgs,
        /// Cross-check each probe against a linear scan of the registry.
        #[arg(long)]
        oracle: bool,
    },
    /// Learn or replay temporal sequences.
    Seq {
        #[command(subcommand)]
        action: SeqAction,
    },
    /// Run an experiment; exits nonzero when its built-in check fails.
    Bench {
        #[command(subcommand)]
        experiment: Experiment,
    },
}

#[derive(Debug, Subcommand)]
pub enum SeqAction {
    /// Learn the file's patterns, in order, as one sequence.
    Learn {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        patterns: PatternArgs,
    },
    /// Prime with the file's first pattern, then step through time.
    Replay {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        patterns: PatternArgs,
        /// Maximum number of steps after the prime.
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Operation counts of SDR store/query and a linear scan across stored counts.
    Scaling {
        #[command(flatten)]
        params: BenchParams,
        #[command(flatten)]
        report: ReportArgs,
        /// Stored counts, strictly increasing.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,5000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 32)]
        active_bits: usize,
        /// Also record wall-clock nanoseconds (makes output nondeterministic).
        #[arg(long)]
        wall_clock: bool,
    },
    /// Input-overlap versus code-overlap curve.
    Sisc {
        #[command(flatten)]
        params: BenchParams,
        #[command(flatten)]
        report: ReportArgs,
        /// Input overlap fractions.
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.8,0.6,0.4,0.2,0.0")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 40)]
        active_bits: usize,
        /// Minimum Spearman correlation for the check to pass.
        #[arg(long, default_value_t = 0.8)]
        min_rho: f64,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    /// Lines of 0/1 characters, each optionally prefixed by `label<TAB>`.
    #[arg(long)]
    pub patterns: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Number of winner-take-all clusters.
    #[arg(long)]
    pub q: usize,
    /// Units per cluster.
    #[arg(long)]
    pub k: usize,
    /// Input field width.
    #[arg(long)]
    pub n_in: usize,
    /// Output field width [default: n-in].
    #[arg(long)]
    pub n_out: Option<usize>,
    #[command(flatten)]
    pub common: CommonParams,
}

#[derive(Debug, Args)]
pub struct BenchParams {
    #[arg(long, default_value_t = 16)]
    pub q: usize,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 256)]
    pub n_in: usize,
    /// [default: n-in]
    #[arg(long)]
    pub n_out: Option<usize>,
    #[command(flatten)]
    pub common: CommonParams,
}

#[derive(Debug, Args)]
pub struct CommonParams {
    /// Selection temperature at full familiarity.
    #[arg(long, default_value_t = sdrqc_core::memory::DEFAULT_TAU_MIN)]
    pub tau_min: f64,
    /// Selection temperature at zero familiarity.
    #[arg(long, default_value_t = sdrqc_core::memory::DEFAULT_TAU_MAX)]
    pub tau_max: f64,
    #[arg(long, env = "SDRQC_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    /// Report file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl From<ReportFormat> for Format {
    fn from(f: ReportFormat) -> Self {
        match f {
            ReportFormat::Csv => Format::Csv,
            ReportFormat::Jsonl => Format::JsonLines,
        }
    }
}

fn model_params(
    q: usize,
    k: usize,
    n_in: usize,
    n_out: Option<usize>,
    c: &CommonParams,
) -> Result<ModelParams> {
    let geometry = FieldGeometry::new(q, k, n_in, n_out.unwrap_or(n_in))?;
    let params = ModelParams::new(geometry, c.seed).with_temperatures(c.tau_min, c.tau_max);
    params.validate()?;
    Ok(params)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn registry_path(model: &Path) -> PathBuf {
    sibling(model, ".registry")
}

pub fn lock_path(model: &Path) -> PathBuf {
    sibling(model, ".lock")
}

/// Advisory single-writer lock, released on drop.
struct Lock(PathBuf);

impl Lock {
    fn acquire(model: &Path) -> Result<Self> {
        let path = lock_path(model);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Lock(path)),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                Err(CliError::Locked(model.into()))
            }
            Err(e) => Err(CliError::io(&path)(e)),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = sibling(path, ".tmp");
    fs::write(&tmp, contents).map_err(CliError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(CliError::io(path))
}

fn load_model(path: &Path) -> Result<Memory> {
    if !path.exists() {
        return Err(CliError::Io {
            path: path.into(),
            source: io::Error::new(io::ErrorKind::NotFound, "no such model file"),
        });
    }
    Ok(Memory::load(path)?)
}

fn load_registry(model: &Path, memory: &Memory) -> Result<Registry> {
    let path = registry_path(model);
    match fs::read_to_string(&path) {
        Ok(text) => Ok(Registry::parse_dump(&text, *memory.geometry())?),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Registry::new(*memory.geometry())),
        Err(e) => Err(CliError::io(&path)(e)),
    }
}

fn read_patterns(path: &Path, memory: &Memory) -> Result<Vec<Labeled>> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let items = patterns::parse(&text)?;
    for (i, item) in items.iter().enumerate() {
        if item.pattern.width() != memory.geometry().n_in() {
            return Err(CliError::Usage(format!(
                "{}: pattern {} has width {}, model expects {}",
                path.display(),
                i + 1,
                item.pattern.width(),
                memory.geometry().n_in()
            )));
        }
    }
    Ok(items)
}

fn bits(p: &BitPattern) -> String {
    p.to_string()
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Init {
            model,
            params,
            force,
        } => init(&model.model, &params, force, out),
        Command::Store { model, patterns } => store(&model.model, &patterns.patterns, out),
        Command::Query {
            model,
            patterns,
            oracle,
        } => query(&model.model, &patterns.patterns, oracle, out),
        Command::Seq { action } => match action {
            SeqAction::Learn { model, patterns } => {
                seq_learn(&model.model, &patterns.patterns, out)
            }
            SeqAction::Replay {
                model,
                patterns,
                limit,
            } => seq_replay(&model.model, &patterns.patterns, limit, out),
        },
        Command::Bench { experiment } => bench(experiment, out),
    }
}

fn init(path: &Path, args: &ParamArgs, force: bool, out: &mut dyn Write) -> Result<()> {
    let params = model_params(args.q, args.k, args.n_in, args.n_out, &args.common)?;
    let memory = Memory::new(params)?;
    let _lock = Lock::acquire(path)?;
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} already exists (pass --force to replace it)",
            path.display()
        )));
    }
    memory.save(path)?;
    let registry = registry_path(path);
    if registry.exists() {
        fs::remove_file(&registry).map_err(CliError::io(&registry))?;
    }
    let g = memory.geometry();
    let w = stdout_err;
    writeln!(
        out,
        "geometry\tq={} k={} n_in={} n_out={}",
        g.q(),
        g.k(),
        g.n_in(),
        g.n_out()
    )
    .map_err(w)?;
    writeln!(out, "units\t{}", g.units()).map_err(w)?;
    match g.num_codes() {
        Ok(n) => writeln!(out, "codes\t{n}"),
        Err(_) => writeln!(out, "codes\t{}^{} (exceeds 128 bits)", g.k(), g.q()),
    }
    .map_err(w)?;
    writeln!(out, "levels\t{}", g.num_levels()).map_err(w)?;
    Ok(())
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::io(Path::new("stdout"))(e)
}

fn store(path: &Path, patterns: &Path, out: &mut dyn Write) -> Result<()> {
    let _lock = Lock::acquire(path)?;
    let mut memory = load_model(path)?;
    let mut registry = load_registry(path, &memory)?;
    let items = read_patterns(patterns, &memory)?;
    let labels = patterns::assign_labels(&items, &registry)?;

    let autoassociative = memory.geometry().n_in() == memory.geometry().n_out();
    let mut lines = Vec::with_capacity(items.len());
    for (item, label) in items.into_iter().zip(labels) {
        let output = autoassociative.then_some(&item.pattern);
        let learned = memory.learn(&item.pattern, output, false)?;
        lines.push(format!(
            "{label}\t{}\t{:.6}",
            learned.code, learned.familiarity
        ));
        registry.register(label, item.pattern, learned.code)?;
    }
    memory.save(path)?;
    write_atomic(&registry_path(path), registry.dump().as_bytes())?;
    for line in lines {
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(())
}

fn query(path: &Path, patterns: &Path, oracle: bool, out: &mut dyn Write) -> Result<()> {
    // Recall draws tie-breaks from the in-memory generator; nothing is saved.
    let mut memory = load_model(path)?;
    let registry = if oracle {
        Some(load_registry(path, &memory)?)
    } else {
        None
    };
    let items = read_patterns(patterns, &memory)?;
    let mut cost = CostReport::default();
    for (i, item) in items.iter().enumerate() {
        let label = item.label.clone().unwrap_or_else(|| format!("q{i}"));
        let r = memory.query(&item.pattern)?;
        let mut line = format!(
            "{label}\t{}\t{}\t{:.6}",
            r.code,
            bits(&r.output),
            r.familiarity
        );
        if let Some(registry) = &registry {
            if registry.is_empty() {
                line.push_str("\t-\tfalse");
            } else {
                let scan = registry.linear_scan_best_match(&item.pattern, &mut cost)?;
                let decoded = registry.decode(&r.code)?;
                let agree = !scan.tie && decoded.is_some_and(|(l, _)| l == scan.label);
                line.push_str(&format!("\t{}\t{agree}", scan.label));
            }
        }
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(())
}

fn seq_learn(path: &Path, patterns: &Path, out: &mut dyn Write) -> Result<()> {
    let _lock = Lock::acquire(path)?;
    let mut memory = load_model(path)?;
    let items = read_patterns(patterns, &memory)?;
    if items.len() < 2 {
        return Err(CliError::Usage(
            "a sequence needs at least two patterns".into(),
        ));
    }
    let seq: Vec<BitPattern> = items.iter().map(|i| i.pattern.clone()).collect();
    let codes = memory.learn_sequence(&seq)?;
    memory.save(path)?;
    for (i, (item, code)) in items.iter().zip(codes).enumerate() {
        let label = item.label.clone().unwrap_or_else(|| format!("s{i}"));
        writeln!(out, "{label}\t{code}").map_err(stdout_err)?;
    }
    Ok(())
}

/// Prints the prime as step 0, then one line per step up to `limit`.
fn seq_replay(path: &Path, patterns: &Path, limit: usize, out: &mut dyn Write) -> Result<()> {
    let mut memory = load_model(path)?;
    let items = read_patterns(patterns, &memory)?;
    let prime = items
        .first()
        .ok_or_else(|| CliError::Usage("replay needs a prime pattern".into()))?;
    let r = memory.query(&prime.pattern)?;
    if r.familiarity == 0.0 {
        return Err(sdrqc_core::Error::NoActiveState.into());
    }
    writeln!(out, "0\t{}\t{}", r.code, bits(&r.output)).map_err(stdout_err)?;
    for t in 1..=limit {
        let r = memory.step(SelectMode::Argmax)?;
        writeln!(out, "{t}\t{}\t{}", r.code, bits(&r.output)).map_err(stdout_err)?;
    }
    Ok(())
}

fn emit_report(report: &impl Emit, args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let text = report.emit(args.format.into());
    match &args.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => out.write_all(text.as_bytes()).map_err(stdout_err),
    }
}

fn bench(experiment: Experiment, out: &mut dyn Write) -> Result<()> {
    match experiment {
        Experiment::Scaling {
            params,
            report,
            sizes,
            active_bits,
            wall_clock,
        } => {
            let p = model_params(
                params.q,
                params.k,
                params.n_in,
                params.n_out,
                &params.common,
            )?;
            let mut config = ScalingConfig::new(sizes, active_bits, params.common.seed);
            config.wall_clock = wall_clock;
            let result = run_scaling(&p, &config)?;
            emit_report(&result, &report, out)?;
            result.check().map_err(CliError::Check)
        }
        Experiment::Sisc {
            params,
            report,
            levels,
            trials,
            active_bits,
            min_rho,
        } => {
            let p = model_params(
                params.q,
                params.k,
                params.n_in,
                params.n_out,
                &params.common,
            )?;
            let config = SiscConfig {
                levels,
                ..SiscConfig::new(trials, params.common.seed, active_bits)
            };
            let result = run_sisc(&p, &config)?;
            emit_report(&result, &report, out)?;
            result.check(min_rho).map_err(CliError::Check)
        }
    }
}
