//! Synthetic event streams with known coefficients.
//!
//! Each step draws `C` candidate hyperedges uniformly, exactly as the
//! sampler draws controls, and picks one with probability proportional to
//! `exp(beta' x)`. The stratified conditional logit over the choice sets is
//! then the exact likelihood of the chosen candidates.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attributes::{AttributeError, AttributeLedger, DecayConfig, LedgerConfig};
use crate::covariates::{self, CovariateError, CovariateSpec, ModelVariant};
use crate::events::{validate_stream, AuthorId, EventError, EventStream, Interner, PaperId, PublicationEvent, RiskSetState};
use crate::sampling::{
    draw_authors, draw_papers, HyperedgeInstance, InstanceTable, SamplingConfig, StratumKey, DEFAULT_MAX_REJECTIONS,
};
use crate::util::binomial;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("step {step}: seed pools too small for {candidates} distinct candidates")]
    RiskSetTooSmall { step: usize, candidates: usize },
    #[error(transparent)]
    Covariate(#[from] CovariateError),
    #[error(transparent)]
    Attribute(#[from] AttributeError),
    #[error(transparent)]
    Event(#[from] EventError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_seed_authors: usize,
    pub num_seed_papers: usize,
    pub num_events: usize,
    /// Probability of team size `k` at index `k - 1`.
    pub team_size_distribution: Vec<f64>,
    /// Probability of reference count `l` at index `l - 1`.
    pub ref_count_distribution: Vec<f64>,
    pub specs: Vec<CovariateSpec>,
    pub true_beta: Vec<f64>,
    pub candidates_per_event: usize,
    /// Fresh authors join the candidate pool before they appear in any
    /// event, so a nonzero rate breaks the match with re-sampled controls.
    pub new_author_rate: f64,
    pub seed: u64,
    pub start_time: f64,
    pub time_step: f64,
    /// `None` means no decay.
    pub half_life: Option<f64>,
}

impl SimConfig {
    /// Teams of 1-3, 2-5 references, 6 candidates, no fresh authors.
    pub fn new(specs: Vec<CovariateSpec>, true_beta: Vec<f64>, num_events: usize, seed: u64) -> Self {
        Self {
            num_seed_authors: 300,
            num_seed_papers: 500,
            num_events,
            team_size_distribution: vec![0.4, 0.35, 0.25],
            ref_count_distribution: vec![0.0, 0.3, 0.3, 0.2, 0.2],
            specs,
            true_beta,
            candidates_per_event: 6,
            new_author_rate: 0.0,
            seed,
            start_time: 0.0,
            time_step: 0.01,
            half_life: Some(3.0),
        }
    }

    pub fn decay(&self) -> Result<DecayConfig, AttributeError> {
        match self.half_life {
            Some(h) => DecayConfig::half_life(h),
            None => Ok(DecayConfig::infinite()),
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: &str| Err(SimulationError::ConfigInvalid(m.to_owned()));
        for (name, d) in [
            ("team_size_distribution", &self.team_size_distribution),
            ("ref_count_distribution", &self.ref_count_distribution),
        ] {
            if d.is_empty() || d.iter().any(|p| p.is_nan() || *p < 0.0) || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(&format!("{name} must be non-negative and sum to 1"));
            }
        }
        if self.specs.len() != self.true_beta.len() {
            return bad("true_beta must have one entry per covariate");
        }
        if self.true_beta.iter().any(|b| !b.is_finite()) {
            return bad("true_beta must be finite");
        }
        if self.candidates_per_event == 0 {
            return bad("candidates_per_event must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.new_author_rate) {
            return bad("new_author_rate must be a probability");
        }
        if self.time_step.is_nan() || self.time_step <= 0.0 || !self.start_time.is_finite() || self.start_time < 0.0 {
            return bad("time_step must be positive and start_time non-negative");
        }
        if self.num_seed_authors < self.team_size_distribution.len()
            || self.num_seed_papers < self.ref_count_distribution.len().max(2)
        {
            return Err(SimulationError::RiskSetTooSmall {
                step: 0,
                candidates: self.candidates_per_event,
            });
        }
        self.decay()?;
        covariates::validate_specs(&self.specs, ModelVariant::Joint)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub stream: EventStream,
    pub true_beta: Vec<f64>,
    pub config: SimConfig,
    /// Chosen candidate as the case, the other `C - 1` candidates as
    /// controls.
    pub choice_table: InstanceTable,
}

#[derive(Serialize)]
struct Provenance<'a> {
    generator: &'static str,
    true_beta: &'a [f64],
    columns: Vec<String>,
    config: &'a SimConfig,
}

impl SimOutput {
    pub fn provenance_json(&self) -> String {
        serde_json::to_string_pretty(&Provenance {
            generator: "conditional-choice",
            true_beta: &self.true_beta,
            columns: self.config.specs.iter().map(ToString::to_string).collect(),
            config: &self.config,
        })
        .expect("provenance serializes")
    }
}

/// One event per seed paper at `start_time`, together covering every seed
/// author, so the stream alone determines the initial risk set.
fn seed_batch(config: &SimConfig, authors: &mut Interner, papers: &mut Interner) -> Vec<PublicationEvent> {
    let (na, np) = (config.num_seed_authors, config.num_seed_papers);
    let ids: Vec<AuthorId> = (0..na).map(|a| AuthorId(authors.intern(&format!("a{a}")))).collect();
    let seeds: Vec<PaperId> = (0..np).map(|p| PaperId(papers.intern(&format!("s{p}")))).collect();
    (0..np)
        .map(|p| {
            let team = std::iter::once(p % na)
                .chain((np..na).filter(|j| j % np == p))
                .map(|j| ids[j])
                .collect();
            PublicationEvent::new(config.start_time, seeds[p], team, vec![seeds[(p + 1) % np]])
        })
        .collect()
}

/// Generates the seed batch followed by `config.num_events` events, one per
/// time step.
///
/// Candidates for the event at stream position `m` are drawn from the
/// stream `rng_for(m)` of a sampler seeded with `config.seed`, in the
/// sampler's own order. With `new_author_rate = 0`, building the instance
/// table with that seed and `q = C - 1` therefore reproduces every choice
/// set: the sampler skips the chosen candidate and keeps the rest.
pub fn simulate(config: &SimConfig) -> Result<SimOutput, SimulationError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);
    let draws = SamplingConfig {
        q: config.candidates_per_event.saturating_sub(1).max(1),
        seed: config.seed,
        model: ModelVariant::Joint,
        max_rejections: DEFAULT_MAX_REJECTIONS,
    };
    let team = WeightedIndex::new(&config.team_size_distribution).expect("validated");
    let refs = WeightedIndex::new(&config.ref_count_distribution).expect("validated");
    let mut ledger = AttributeLedger::new(LedgerConfig {
        decay: config.decay()?,
        orders: covariates::required_orders(&config.specs),
    });

    let mut authors = Interner::new();
    let mut papers = Interner::new();
    let mut events = seed_batch(config, &mut authors, &mut papers);
    let mut risk = RiskSetState::new();
    risk.advance(&events)?;
    for e in &events {
        ledger.apply_event(e)?;
    }
    let offset = events.len();

    let c = config.candidates_per_event;
    events.reserve(config.num_events);
    let mut instances = Vec::with_capacity(config.num_events * c);
    for step in 0..config.num_events {
        let index = offset + step;
        let t = config.start_time + (step + 1) as f64 * config.time_step;
        if rng.gen_bool(config.new_author_rate) {
            risk.add_author(AuthorId(authors.intern(&format!("n{step}"))));
        }
        let focal = PaperId(papers.intern(&format!("p{step}")));
        risk.add_paper(focal);
        let focal_pos = risk.paper_position(focal);
        let k = team.sample(&mut rng) + 1;
        let l = refs.sample(&mut rng) + 1;
        let n_p = risk.papers().len() - 1;
        if risk.authors().len() < k || n_p < l || binomial(risk.authors().len(), k) * binomial(n_p, l) < c as f64 {
            return Err(SimulationError::RiskSetTooSmall { step, candidates: c });
        }
        let mut draw_rng = draws.rng_for(index);
        let mut candidates: Vec<(Vec<AuthorId>, Vec<PaperId>)> = Vec::with_capacity(c);
        while candidates.len() < c {
            let a = draw_authors(&mut draw_rng, &risk, k);
            let p = draw_papers(&mut draw_rng, &risk, focal_pos, l);
            let cand = (a, p);
            if !candidates.contains(&cand) {
                candidates.push(cand);
            }
        }
        let xs = candidates
            .iter()
            .map(|(a, p)| covariates::compute_vector(&ledger, &config.specs, a, p, t, ModelVariant::Joint))
            .collect::<Result<Vec<_>, _>>()?;
        let eta: Vec<f64> = xs
            .iter()
            .map(|x| x.iter().zip(&config.true_beta).map(|(x, b)| x * b).sum())
            .collect();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();
        let pick = WeightedIndex::new(&weights).expect("positive weights").sample(&mut rng);

        let stratum = StratumKey {
            time: t,
            n_authors: k as u32,
            n_refs: Some(l as u32),
        };
        let order = std::iter::once(pick).chain((0..c).filter(|&i| i != pick));
        for i in order {
            instances.push(HyperedgeInstance {
                event_index: index,
                stratum,
                is_case: i == pick,
                n_authors: k as u32,
                n_refs: l as u32,
                covariates: xs[i].clone(),
            });
        }

        let (a, p) = candidates.swap_remove(pick);
        let event = PublicationEvent::new(t, focal, a, p);
        ledger.apply_event(&event)?;
        events.push(event);
    }

    Ok(SimOutput {
        stream: validate_stream(events, authors, papers)?,
        true_beta: config.true_beta.clone(),
        config: config.clone(),
        choice_table: InstanceTable {
            columns: config.specs.iter().map(ToString::to_string).collect(),
            instances,
        },
    })
}
