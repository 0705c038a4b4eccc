//! End-to-end runs: ingest, instance table, fit, contributions, bootstrap.

mod ingest;

use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{
    ingest_aminer, read_event_tsv, read_event_tsv_file, write_event_tsv, IngestError, IngestReport,
};

use crate::attributes::DecayConfig;
use crate::covariates::{Covariate, CovariateSpec, ModelVariant};
use crate::estimator::{self, write_contributions_csv, AliasPolicy, FitConfig, FitReport, FitResult, TieMethod};
use crate::events::EventStream;
use crate::sampling::{self, InstanceTable, SamplingConfig, DEFAULT_MAX_REJECTIONS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

fn stage<E: std::error::Error + Send + Sync + 'static>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputFormat {
    #[serde(rename = "aminer-json")]
    AminerJson,
    #[serde(rename = "event-tsv")]
    EventTsv,
}

fn default_q() -> usize {
    5
}
fn default_half_life() -> Option<f64> {
    Some(3.0)
}
fn default_true() -> bool {
    true
}
fn default_max_iterations() -> usize {
    FitConfig::default().max_iterations
}
fn default_rel_tolerance() -> f64 {
    FitConfig::default().rel_tolerance
}
fn default_max_rejections() -> usize {
    DEFAULT_MAX_REJECTIONS
}

/// Every covariate usable under `model`, square-root transformed.
pub fn default_covariates(model: ModelVariant) -> Vec<CovariateSpec> {
    Covariate::ALL
        .iter()
        .filter(|c| c.applies_to(model))
        .map(|&c| CovariateSpec::sqrt(c))
        .collect()
}

/// JSON run configuration. `seed`, `input_path` and `output_dir` are
/// required; the rest default to q = 5, a three-year half-life, Efron ties,
/// robust errors and every applicable covariate under a square root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub input_path: PathBuf,
    pub input_format: InputFormat,
    #[serde(default)]
    pub model: ModelVariant,
    #[serde(default)]
    pub covariates: Option<Vec<CovariateSpec>>,
    /// `null` disables decay.
    #[serde(default = "default_half_life")]
    pub half_life: Option<f64>,
    #[serde(default = "default_q")]
    pub q: usize,
    pub seed: u64,
    #[serde(default)]
    pub tie_method: TieMethod,
    #[serde(default = "default_true")]
    pub robust: bool,
    #[serde(default)]
    pub bootstrap_b: usize,
    #[serde(default = "default_true")]
    pub contributions: bool,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_rel_tolerance")]
    pub rel_tolerance: f64,
    #[serde(default)]
    pub ridge: f64,
    #[serde(default = "default_max_rejections")]
    pub max_rejections: usize,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn new(input_path: PathBuf, input_format: InputFormat, seed: u64, output_dir: PathBuf) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            input_path,
            input_format,
            model: ModelVariant::Joint,
            covariates: None,
            half_life: default_half_life(),
            q: default_q(),
            seed,
            tie_method: TieMethod::Efron,
            robust: true,
            bootstrap_b: 0,
            contributions: true,
            max_iterations: default_max_iterations(),
            rel_tolerance: default_rel_tolerance(),
            ridge: 0.0,
            max_rejections: DEFAULT_MAX_REJECTIONS,
            output_dir,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let config: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn specs(&self) -> Vec<CovariateSpec> {
        self.covariates.clone().unwrap_or_else(|| default_covariates(self.model))
    }

    pub fn decay(&self) -> Result<DecayConfig, PipelineError> {
        match self.half_life {
            None => Ok(DecayConfig::infinite()),
            Some(h) => DecayConfig::half_life(h).map_err(|e| PipelineError::Config(e.to_string())),
        }
    }

    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            q: self.q,
            seed: self.seed,
            model: self.model,
            max_rejections: self.max_rejections,
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            max_iterations: self.max_iterations,
            rel_tolerance: self.rel_tolerance,
            tie_method: self.tie_method,
            robust: self.robust,
            ridge: self.ridge,
            alias: AliasPolicy::Error,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.covariates.as_ref().is_some_and(Vec::is_empty) {
            return bad("covariate list is empty".into());
        }
        self.decay()?;
        self.sampling().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.fit_config().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        crate::covariates::validate_specs(&self.specs(), self.model).map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub ingest: Option<IngestReport>,
    pub table: InstanceTable,
    pub fit: FitResult,
    pub artifacts: Vec<PathBuf>,
}

impl RunSummary {
    pub fn converged(&self) -> bool {
        self.fit.converged
    }
}

fn write_file(
    dir: &Path,
    name: &str,
    artifacts: &mut Vec<PathBuf>,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), PipelineError> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(stage("write"))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| std::io::Write::flush(&mut w)).map_err(stage("write"))?;
    artifacts.push(path);
    Ok(())
}

pub fn load_stream(config: &RunConfig) -> Result<(EventStream, Option<IngestReport>), PipelineError> {
    match config.input_format {
        InputFormat::AminerJson => {
            let (s, r) = ingest_aminer(&config.input_path).map_err(stage("ingest"))?;
            Ok((s, Some(r)))
        }
        InputFormat::EventTsv => Ok((read_event_tsv_file(&config.input_path).map_err(stage("ingest"))?, None)),
    }
}

/// Runs every configured stage and writes `instances.csv`, `fit.json`,
/// `fit.txt`, and when enabled `ingest.json`, `contrib.csv` and
/// `bootstrap.csv` to the output directory.
pub fn run(config: &RunConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(stage("write"))?;
    let mut artifacts = Vec::new();

    let (stream, ingest) = load_stream(config)?;
    if let Some(r) = &ingest {
        let json = serde_json::to_string_pretty(r).expect("report serializes");
        write_file(dir, "ingest.json", &mut artifacts, |w| writeln!(w, "{json}"))?;
    }

    let specs = config.specs();
    let table = sampling::build_instance_table(&stream, &specs, &config.sampling(), config.decay()?)
        .map_err(stage("covariates"))?;
    write_file(dir, "instances.csv", &mut artifacts, |w| {
        table.write_csv(w).map_err(std::io::Error::other)
    })?;

    let fit_config = config.fit_config();
    let fit = estimator::fit(&table, &fit_config).map_err(stage("fit"))?;
    let report = FitReport::new(&fit);
    write_file(dir, "fit.json", &mut artifacts, |w| writeln!(w, "{}", report.to_json()))?;
    write_file(dir, "fit.txt", &mut artifacts, |w| write!(w, "{}", report.to_text()))?;

    if config.contributions {
        let rows = estimator::contribution_analysis(&table, &fit_config).map_err(stage("contrib"))?;
        write_file(dir, "contrib.csv", &mut artifacts, |w| write_contributions_csv(&rows, w))?;
    }
    if config.bootstrap_b > 0 {
        let boot =
            estimator::bootstrap(&table, &fit_config, config.bootstrap_b, config.seed).map_err(stage("bootstrap"))?;
        write_file(dir, "bootstrap.csv", &mut artifacts, |w| boot.write_csv(w))?;
    }
    Ok(RunSummary {
        ingest,
        table,
        fit,
        artifacts,
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c = RunConfig::from_json(
            r#"{"schema_version":1,"input_path":"x.tsv","input_format":"event-tsv","seed":3,"output_dir":"out"}"#,
        )
        .unwrap();
        assert_eq!(c.q, 5);
        assert_eq!(c.half_life, Some(3.0));
        assert_eq!(c.specs().len(), 23);
        assert!(c.specs().iter().all(|s| s.transform == crate::covariates::Transform::Sqrt));
        let missing_seed = r#"{"schema_version":1,"input_path":"x","input_format":"event-tsv","output_dir":"o"}"#;
        assert!(RunConfig::from_json(missing_seed).is_err());
        let bad_version = r#"{"schema_version":9,"input_path":"x","input_format":"event-tsv","seed":1,"output_dir":"o"}"#;
        assert!(RunConfig::from_json(bad_version).is_err());
        let citation = r#"{"schema_version":1,"input_path":"x","input_format":"event-tsv","seed":1,"output_dir":"o",
            "model":"citation","covariates":["sqrt(prior_papers)"]}"#;
        assert!(RunConfig::from_json(citation).is_err());
        let no_decay = r#"{"schema_version":1,"input_path":"x","input_format":"event-tsv","seed":1,"output_dir":"o",
            "half_life":null,"covariates":["self_citation"]}"#;
        let c = RunConfig::from_json(no_decay).unwrap();
        assert_eq!(c.half_life, None);
        assert_eq!(c.specs(), vec![CovariateSpec::raw(Covariate::SelfCitation)]);
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::new("in.tsv".into(), InputFormat::EventTsv, 42, "out".into());
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
