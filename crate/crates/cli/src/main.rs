use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rhem::covariates::{CovariateSpec, ModelVariant};
use rhem::estimator::{self, write_contributions_csv, FitConfig, FitReport, TieMethod};
use rhem::pipeline::{self, default_covariates, write_event_tsv, InputFormat, RunConfig};
use rhem::sampling::{build_instance_table, InstanceTable, SamplingConfig};
use rhem::simulator::{simulate, SimConfig};
use rhem::DecayConfig;

#[derive(Parser)]
#[command(name = "rhem", version, about = "Relational hyperevent models for coauthoring and citation networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert AMiner JSON or event TSV into canonical event TSV.
    Ingest(IngestArgs),
    /// Build the case-control instance table.
    Covariates(CovariatesArgs),
    /// Fit the stratified Cox model to an instance table.
    Fit(FitArgs),
    /// Single-covariate and leave-one-out log-likelihood contributions.
    Contrib(FitArgs),
    /// Refit on stratum groups resampled with replacement.
    Bootstrap(BootstrapArgs),
    /// Generate a synthetic event stream with known coefficients.
    Simulate(SimulateArgs),
    /// Ingest, build the instance table, fit and report.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    AminerJson,
    EventTsv,
}

impl From<Format> for InputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::AminerJson => InputFormat::AminerJson,
            Format::EventTsv => InputFormat::EventTsv,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "event-tsv")]
    format: Format,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Event TSV output.
    #[arg(long)]
    out: PathBuf,
    /// Ingest report output (AMiner input only).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "joint")]
    model: ModelVariant,
    /// Comma-separated covariates, e.g. `sqrt(prior_papers),self_citation`.
    /// Defaults to every covariate applicable to the model, square-rooted.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<CovariateSpec>>,
    /// Half-life in time units, or `inf` for no decay.
    #[arg(long, default_value = "3")]
    half_life: f64,
}

impl ModelArgs {
    fn specs(&self) -> Vec<CovariateSpec> {
        self.covariates.clone().unwrap_or_else(|| default_covariates(self.model))
    }

    fn half_life(&self) -> Option<f64> {
        self.half_life.is_finite().then_some(self.half_life)
    }
}

#[derive(Args)]
struct CovariatesArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    q: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = rhem::sampling::DEFAULT_MAX_REJECTIONS)]
    max_rejections: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimatorArgs {
    #[arg(long, default_value = "efron")]
    ties: TieMethod,
    /// Skip the robust (sandwich) standard errors.
    #[arg(long)]
    no_robust: bool,
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    #[arg(long, default_value_t = 50)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    rel_tolerance: f64,
}

impl EstimatorArgs {
    fn config(&self) -> FitConfig {
        FitConfig {
            max_iterations: self.max_iterations,
            rel_tolerance: self.rel_tolerance,
            tie_method: self.ties,
            robust: !self.no_robust,
            ridge: self.ridge,
            ..FitConfig::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    instances: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Output directory (fit: fit.json and fit.txt; contrib: contrib.csv).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long)]
    instances: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config JSON; flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    events: usize,
    /// Comma-separated covariates aligned with `--beta`.
    #[arg(long, value_delimiter = ',', default_value = "sqrt(prior_papers),sqrt(paper_citation_popularity)")]
    covariates: Vec<CovariateSpec>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0.5,0.5")]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 6)]
    candidates: usize,
    #[arg(long, default_value_t = 300)]
    seed_authors: usize,
    #[arg(long, default_value_t = 500)]
    seed_papers: usize,
    #[arg(long, default_value = "3")]
    half_life: f64,
    #[arg(long)]
    seed: u64,
    /// Writes events.tsv, provenance.json and choice_instances.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Run config JSON. Flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    model: Option<ModelVariant>,
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<CovariateSpec>>,
    #[arg(long)]
    half_life: Option<f64>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    ties: Option<TieMethod>,
    #[arg(long)]
    no_robust: bool,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    no_contrib: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn read_table(path: &Path) -> Result<InstanceTable> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(InstanceTable::read_csv(BufReader::new(f))?)
}

fn load(input: &InputArgs) -> Result<(rhem::EventStream, Option<pipeline::IngestReport>)> {
    let mut cfg = RunConfig::new(input.input.clone(), input.format.into(), 0, PathBuf::new());
    cfg.covariates = None;
    Ok(pipeline::load_stream(&cfg)?)
}

fn ingest(args: IngestArgs) -> Result<ExitCode> {
    let (stream, report) = load(&args.input)?;
    let mut w = create(&args.out)?;
    write_event_tsv(&stream, &mut w)?;
    w.flush()?;
    if let (Some(path), Some(report)) = (&args.report, &report) {
        let mut w = create(path)?;
        writeln!(w, "{}", serde_json::to_string_pretty(report)?)?;
        w.flush()?;
    }
    eprintln!("{} events, {} authors, {} papers", stream.len(), stream.num_authors(), stream.num_papers());
    Ok(ExitCode::SUCCESS)
}

fn covariates(args: CovariatesArgs) -> Result<ExitCode> {
    let (stream, _) = load(&args.input)?;
    let decay = match args.model.half_life() {
        Some(h) => DecayConfig::half_life(h)?,
        None => DecayConfig::infinite(),
    };
    let config = SamplingConfig {
        q: args.q,
        seed: args.seed,
        model: args.model.model,
        max_rejections: args.max_rejections,
    };
    let table = build_instance_table(&stream, &args.model.specs(), &config, decay)?;
    let mut w = create(&args.out)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let short = table.short_events(args.q).len();
    eprintln!("{} instances for {} events ({short} short)", table.instances.len(), table.num_events());
    Ok(ExitCode::SUCCESS)
}

fn fit(args: FitArgs) -> Result<ExitCode> {
    let table = read_table(&args.instances)?;
    let result = estimator::fit(&table, &args.estimator.config())?;
    let report = FitReport::new(&result);
    fs::create_dir_all(&args.out_dir)?;
    fs::write(args.out_dir.join("fit.json"), report.to_json() + "\n")?;
    fs::write(args.out_dir.join("fit.txt"), report.to_text())?;
    print!("{}", report.to_text());
    Ok(if result.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn contrib(args: FitArgs) -> Result<ExitCode> {
    let table = read_table(&args.instances)?;
    let rows = estimator::contribution_analysis(&table, &args.estimator.config())?;
    fs::create_dir_all(&args.out_dir)?;
    let mut w = create(&args.out_dir.join("contrib.csv"))?;
    write_contributions_csv(&rows, &mut w)?;
    w.flush()?;
    for r in &rows {
        println!("{:<45} {:>14.3} {:>14.3}", r.covariate, r.over_null, r.leave_one_out);
    }
    Ok(ExitCode::SUCCESS)
}

fn bootstrap(args: BootstrapArgs) -> Result<ExitCode> {
    let table = read_table(&args.instances)?;
    let boot = estimator::bootstrap(&table, &args.estimator.config(), args.replicates, args.seed)?;
    let mut w = create(&args.out)?;
    boot.write_csv(&mut w)?;
    w.flush()?;
    for (c, name) in boot.columns.iter().enumerate() {
        println!("{name:<45} sign agreement {:.2}", boot.sign_agreement[c]);
    }
    if !boot.failures.is_empty() {
        eprintln!("{} of {} replicates failed", boot.failures.len(), args.replicates);
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate_cmd(args: SimulateArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => {
            let mut c = SimConfig::new(args.covariates.clone(), args.beta.clone(), args.events, args.seed);
            c.candidates_per_event = args.candidates;
            c.num_seed_authors = args.seed_authors;
            c.num_seed_papers = args.seed_papers;
            c.half_life = args.half_life.is_finite().then_some(args.half_life);
            c
        }
    };
    config.seed = args.seed;
    let out = simulate(&config)?;
    fs::create_dir_all(&args.out_dir)?;
    let mut w = create(&args.out_dir.join("events.tsv"))?;
    write_event_tsv(&out.stream, &mut w)?;
    w.flush()?;
    fs::write(args.out_dir.join("provenance.json"), out.provenance_json() + "\n")?;
    let mut w = create(&args.out_dir.join("choice_instances.csv"))?;
    out.choice_table.write_csv(&mut w)?;
    w.flush()?;
    eprintln!("{} events written to {}", out.stream.len(), args.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text).context("parsing run config")?
        }
        None => {
            let (Some(input), Some(format), Some(out)) = (&args.input, args.format, &args.out_dir) else {
                bail!("--input, --format and --out-dir are required without --config");
            };
            RunConfig::new(input.clone(), format.into(), args.seed, out.clone())
        }
    };
    config.seed = args.seed;
    if let Some(v) = &args.input {
        config.input_path = v.clone();
    }
    if let Some(v) = args.format {
        config.input_format = v.into();
    }
    if let Some(v) = args.model {
        config.model = v;
    }
    if let Some(v) = &args.covariates {
        config.covariates = Some(v.clone());
    }
    if let Some(v) = args.half_life {
        config.half_life = v.is_finite().then_some(v);
    }
    if let Some(v) = args.q {
        config.q = v;
    }
    if let Some(v) = args.ties {
        config.tie_method = v;
    }
    if args.no_robust {
        config.robust = false;
    }
    if let Some(v) = args.bootstrap {
        config.bootstrap_b = v;
    }
    if args.no_contrib {
        config.contributions = false;
    }
    if let Some(v) = &args.out_dir {
        config.output_dir = v.clone();
    }
    let summary = pipeline::run(&config)?;
    print!("{}", FitReport::new(&summary.fit).to_text());
    if summary.converged() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("fit did not converge");
        Ok(ExitCode::from(2))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Covariates(a) => covariates(a),
        Command::Fit(a) => fit(a),
        Command::Contrib(a) => contrib(a),
        Command::Bootstrap(a) => bootstrap(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
