//! Case-control sampling: the observed event plus `q` uniformly drawn
//! non-events per event, with covariates evaluated against the pre-event
//! history.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::attributes::{AttributeError, AttributeLedger, DecayConfig, LedgerConfig};
use crate::covariates::{self, CovariateError, CovariateSpec, ModelVariant};
use crate::events::{AuthorId, EventError, EventStream, PaperId, PublicationEvent, RiskSetState};
use crate::util::{binomial, fmt_real, par_map_range, parse_real};

pub const DEFAULT_MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error("event {event}: risk set too small to form a candidate of the required size")]
    RiskSetTooSmall { event: usize },
    #[error("event {event}: {source}")]
    Covariate {
        event: usize,
        #[source]
        source: CovariateError,
    },
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Spec(#[from] CovariateError),
    #[error(transparent)]
    Attribute(#[from] AttributeError),
    #[error("instance table line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    pub q: usize,
    pub seed: u64,
    pub model: ModelVariant,
    pub max_rejections: usize,
}

impl SamplingConfig {
    pub fn new(q: usize, seed: u64, model: ModelVariant) -> Result<Self, SamplingError> {
        let config = Self {
            q,
            seed,
            model,
            max_rejections: DEFAULT_MAX_REJECTIONS,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if self.q == 0 {
            return Err(SamplingError::InvalidConfig("q must be at least 1".into()));
        }
        Ok(())
    }

    /// Per-event random stream, independent of evaluation order.
    pub fn rng_for(&self, event_index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(event_index as u64);
        rng
    }
}

/// Cox stratum: event time and hyperedge sizes. The reference count is
/// dropped for the coauthoring model.
#[derive(Debug, Clone, Copy)]
pub struct StratumKey {
    pub time: f64,
    pub n_authors: u32,
    pub n_refs: Option<u32>,
}

impl StratumKey {
    pub fn for_event(event: &PublicationEvent, model: ModelVariant) -> Self {
        Self {
            time: event.time,
            n_authors: event.authors.len() as u32,
            n_refs: (model != ModelVariant::Coauthoring).then_some(event.references.len() as u32),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut parts = s.split('|');
        let time = parse_real(parts.next()?)?;
        let n_authors = parts.next()?.parse().ok()?;
        let n_refs = match parts.next() {
            Some(p) => Some(p.parse().ok()?),
            None => None,
        };
        if parts.next().is_some() {
            return None;
        }
        Some(Self {
            time,
            n_authors,
            n_refs,
        })
    }
}

impl PartialEq for StratumKey {
    fn eq(&self, other: &Self) -> bool {
        self.time.to_bits() == other.time.to_bits()
            && self.n_authors == other.n_authors
            && self.n_refs == other.n_refs
    }
}

impl Eq for StratumKey {}

impl Hash for StratumKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.time.to_bits().hash(state);
        self.n_authors.hash(state);
        self.n_refs.hash(state);
    }
}

impl fmt::Display for StratumKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", fmt_real(self.time), self.n_authors)?;
        if let Some(l) = self.n_refs {
            write!(f, "|{l}")?;
        }
        Ok(())
    }
}

/// A candidate hyperedge. `papers` is empty for coauthoring-model controls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub authors: Vec<AuthorId>,
    pub papers: Vec<PaperId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlDraw {
    pub controls: Vec<Candidate>,
    /// Fewer than `q` controls could be drawn.
    pub short: bool,
}

/// One row of the instance table.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperedgeInstance {
    pub event_index: usize,
    pub stratum: StratumKey,
    pub is_case: bool,
    pub n_authors: u32,
    pub n_refs: u32,
    pub covariates: Vec<f64>,
}

fn draw_subset<R: Rng>(rng: &mut R, pool: usize, k: usize, map: impl Fn(usize) -> u32) -> Vec<u32> {
    let mut v: Vec<u32> = index::sample(rng, pool, k).into_iter().map(map).collect();
    v.sort_unstable();
    v
}

/// Uniform `k`-subset of the authors at risk, sorted.
pub(crate) fn draw_authors<R: Rng>(rng: &mut R, risk: &RiskSetState, k: usize) -> Vec<AuthorId> {
    let pool = risk.authors();
    draw_subset(rng, pool.len(), k, |x| pool[x].0).into_iter().map(AuthorId).collect()
}

/// Uniform `l`-subset of the papers at risk, skipping the risk-set position
/// `focal`, sorted.
pub(crate) fn draw_papers<R: Rng>(rng: &mut R, risk: &RiskSetState, focal: Option<usize>, l: usize) -> Vec<PaperId> {
    let pool = risk.papers();
    let skip = focal.unwrap_or(usize::MAX);
    let n = pool.len() - usize::from(focal.is_some());
    draw_subset(rng, n, l, |x| pool[if x >= skip { x + 1 } else { x }].0)
        .into_iter()
        .map(PaperId)
        .collect()
}

/// Draws up to `config.q` distinct controls for `event`, none equal to the
/// case. Author sets range over all authors at risk; reference sets over all
/// papers at risk except the event's own focal paper.
pub fn sample_controls<R: Rng>(
    risk: &RiskSetState,
    event: &PublicationEvent,
    event_index: usize,
    config: &SamplingConfig,
    rng: &mut R,
) -> Result<ControlDraw, SamplingError> {
    let k = event.authors.len();
    let l = event.references.len();
    let pool_a = risk.authors();
    let pool_p = risk.papers();
    let focal = risk.paper_position(event.paper);
    let n_p = pool_p.len() - usize::from(focal.is_some());
    let (draw_a, draw_p) = match config.model {
        ModelVariant::Joint => (true, true),
        ModelVariant::Coauthoring => (true, false),
        ModelVariant::Citation => (false, true),
    };
    if (draw_a && pool_a.len() < k) || (draw_p && n_p < l) {
        return Err(SamplingError::RiskSetTooSmall { event: event_index });
    }
    let mut space = 1.0;
    if draw_a {
        space *= binomial(pool_a.len(), k);
    }
    if draw_p {
        space *= binomial(n_p, l);
    }
    // The case itself is the only member of the candidate space.
    if space <= 1.0 {
        return Ok(ControlDraw {
            controls: Vec::new(),
            short: true,
        });
    }

    let case = Candidate {
        authors: event.authors.clone(),
        papers: if draw_p { event.references.clone() } else { Vec::new() },
    };
    let mut controls: Vec<Candidate> = Vec::with_capacity(config.q);
    let mut rejections = 0;
    while controls.len() < config.q {
        let authors = if draw_a { draw_authors(rng, risk, k) } else { event.authors.clone() };
        let papers = if draw_p { draw_papers(rng, risk, focal, l) } else { Vec::new() };
        let c = Candidate { authors, papers };
        if c == case || controls.contains(&c) {
            rejections += 1;
            if rejections >= config.max_rejections {
                break;
            }
            continue;
        }
        controls.push(c);
    }
    let short = controls.len() < config.q;
    Ok(ControlDraw { controls, short })
}

/// The case-control table together with its column names.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTable {
    pub columns: Vec<String>,
    pub instances: Vec<HyperedgeInstance>,
}

const FIXED_COLUMNS: [&str; 6] = ["event_index", "time", "stratum", "is_case", "n_authors", "n_refs"];

impl InstanceTable {
    pub fn num_events(&self) -> usize {
        self.instances.iter().filter(|x| x.is_case).count()
    }

    /// Events for which fewer than `q` controls were drawn.
    pub fn short_events(&self, q: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.instances.len() {
            let e = self.instances[i].event_index;
            let mut n = 0;
            while i < self.instances.len() && self.instances[i].event_index == e {
                n += 1;
                i += 1;
            }
            if n < q + 1 {
                out.push(e);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SamplingError> {
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<&str> = FIXED_COLUMNS
            .iter()
            .copied()
            .chain(self.columns.iter().map(String::as_str))
            .collect();
        out.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for x in &self.instances {
            row.clear();
            row.push(x.event_index.to_string());
            row.push(fmt_real(x.stratum.time));
            row.push(x.stratum.to_string());
            row.push(if x.is_case { "1" } else { "0" }.into());
            row.push(x.n_authors.to_string());
            row.push(x.n_refs.to_string());
            row.extend(x.covariates.iter().map(|&v| fmt_real(v)));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, SamplingError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
            return Err(SamplingError::Table {
                line: 1,
                reason: format!("header must start with {}", FIXED_COLUMNS.join(",")),
            });
        }
        let columns: Vec<String> = header.iter().skip(FIXED_COLUMNS.len()).map(str::to_owned).collect();
        let mut instances = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = n + 2;
            let bad = |reason: &str| SamplingError::Table {
                line,
                reason: reason.to_owned(),
            };
            if rec.len() != header.len() {
                return Err(bad("wrong number of fields"));
            }
            let stratum = StratumKey::parse(&rec[2]).ok_or_else(|| bad("malformed stratum"))?;
            let is_case = match &rec[3] {
                "1" => true,
                "0" => false,
                _ => return Err(bad("is_case must be 0 or 1")),
            };
            let covariates = rec
                .iter()
                .skip(FIXED_COLUMNS.len())
                .map(|s| parse_real(s).ok_or_else(|| bad("malformed covariate value")))
                .collect::<Result<Vec<_>, _>>()?;
            instances.push(HyperedgeInstance {
                event_index: rec[0].parse().map_err(|_| bad("malformed event_index"))?,
                stratum,
                is_case,
                n_authors: rec[4].parse().map_err(|_| bad("malformed n_authors"))?,
                n_refs: rec[5].parse().map_err(|_| bad("malformed n_refs"))?,
                covariates,
            });
        }
        Ok(Self { columns, instances })
    }
}

fn event_instances(
    ledger: &AttributeLedger,
    risk: &RiskSetState,
    specs: &[CovariateSpec],
    config: &SamplingConfig,
    event_index: usize,
    event: &PublicationEvent,
) -> Result<Vec<HyperedgeInstance>, SamplingError> {
    let mut rng = config.rng_for(event_index);
    let draw = sample_controls(risk, event, event_index, config, &mut rng)?;
    let stratum = StratumKey::for_event(event, config.model);
    let row = |is_case: bool, authors: &[AuthorId], papers: &[PaperId]| {
        covariates::compute_vector(ledger, specs, authors, papers, event.time, config.model)
            .map(|covariates| HyperedgeInstance {
                event_index,
                stratum,
                is_case,
                n_authors: event.authors.len() as u32,
                n_refs: event.references.len() as u32,
                covariates,
            })
            .map_err(|source| SamplingError::Covariate {
                event: event_index,
                source,
            })
    };
    let mut out = Vec::with_capacity(draw.controls.len() + 1);
    out.push(row(true, &event.authors, &event.references)?);
    for c in &draw.controls {
        let papers = if config.model == ModelVariant::Coauthoring { &[][..] } else { &c.papers };
        out.push(row(false, &c.authors, papers)?);
    }
    Ok(out)
}

/// Single time-ordered pass over `stream`: per batch, grow the risk set,
/// sample and evaluate every event against the pre-batch ledger, then
/// record the batch.
pub fn build_instance_table(
    stream: &EventStream,
    specs: &[CovariateSpec],
    config: &SamplingConfig,
    decay: DecayConfig,
) -> Result<InstanceTable, SamplingError> {
    config.validate()?;
    covariates::validate_specs(specs, config.model)?;
    let mut ledger = AttributeLedger::new(LedgerConfig {
        decay,
        orders: covariates::required_orders(specs),
    });
    let mut risk = RiskSetState::new();
    let mut instances = Vec::with_capacity(stream.len() * (config.q + 1));
    for (start, batch) in stream.batches() {
        risk.advance(batch)?;
        let rows = par_map_range(batch.len(), |k| {
            event_instances(&ledger, &risk, specs, config, start + k, &batch[k])
        });
        for r in rows {
            instances.extend(r?);
        }
        for e in batch {
            ledger.apply_event(e)?;
        }
    }
    Ok(InstanceTable {
        columns: specs.iter().map(ToString::to_string).collect(),
        instances,
    })
}
