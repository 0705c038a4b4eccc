//! Time-decayed network attributes maintained incrementally over the event
//! stream.
//!
//! Every attribute is a sum over past events of `w(t - t_m)` times an
//! indicator (or, for the out-degree, the reference-list length). Counters
//! are stored with the time of their last update and decayed lazily on
//! read, which is exact because exponential decay is multiplicative:
//! `w(a) * w(b) = w(a + b)`.
//!
//! The author-to-paper attribute `cite_ap(I', J')` is materialized only for
//! the subset orders `(|I'|, |J'|)` that requested covariates need.

use std::f64::consts::LN_2;
use std::io::{BufRead, Write};

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::events::{AuthorId, PaperId, PublicationEvent};
use crate::util::{fmt_real, for_each_combination, parse_real};

/// Largest materializable subset size on either side of `cite_ap`.
pub const MAX_SUBSET_ORDER: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttributeError {
    #[error("half-life must be positive, got {0}")]
    InvalidHalfLife(f64),
    #[error("elapsed time must be non-negative, got {0}")]
    NegativeElapsed(f64),
    #[error("event at time {event} precedes ledger time {ledger}")]
    TimeRegression { event: f64, ledger: f64 },
    #[error("query at time {at} precedes last update {last}")]
    QueryBeforeUpdate { at: f64, last: f64 },
    #[error("cite_ap order ({authors},{papers}) is not materialized")]
    OrderNotMaterialized { authors: usize, papers: usize },
    #[error("subset order ({authors},{papers}) is invalid (max {max} per side, not both zero)", max = MAX_SUBSET_ORDER)]
    InvalidOrder { authors: usize, papers: usize },
    #[error("paper {0} published twice")]
    DuplicatePublication(PaperId),
    #[error("malformed checkpoint line {line}: {reason}")]
    Checkpoint { line: usize, reason: String },
    #[error("checkpoint i/o: {0}")]
    Io(String),
}

/// Exponential decay with a half-life, or no decay at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConfig {
    half_life: Option<f64>,
    rate: f64,
}

impl DecayConfig {
    pub fn half_life(half_life: f64) -> Result<Self, AttributeError> {
        if half_life.is_nan() || half_life <= 0.0 {
            return Err(AttributeError::InvalidHalfLife(half_life));
        }
        if half_life.is_infinite() {
            return Ok(Self::infinite());
        }
        Ok(Self {
            half_life: Some(half_life),
            rate: LN_2 / half_life,
        })
    }

    pub const fn infinite() -> Self {
        Self {
            half_life: None,
            rate: 0.0,
        }
    }

    /// `None` means an infinite half-life.
    pub fn half_life_years(&self) -> Option<f64> {
        self.half_life
    }

    /// `w(elapsed) = exp(-elapsed * ln 2 / half_life)`; always 1 without decay.
    pub fn weight(&self, elapsed: f64) -> Result<f64, AttributeError> {
        if elapsed < 0.0 || elapsed.is_nan() {
            return Err(AttributeError::NegativeElapsed(elapsed));
        }
        Ok(self.w(elapsed))
    }

    #[inline]
    pub(crate) fn w(&self, elapsed: f64) -> f64 {
        debug_assert!(elapsed >= 0.0);
        if self.half_life.is_none() {
            1.0
        } else {
            (-elapsed * self.rate).exp()
        }
    }
}

impl Default for DecayConfig {
    /// Three-year half-life.
    fn default() -> Self {
        Self::half_life(3.0).expect("positive")
    }
}

/// A decayed count stamped with the time it was last touched.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecayedCounter {
    pub value: f64,
    pub last_update: f64,
}

impl DecayedCounter {
    #[inline]
    pub fn read(&self, at: f64, decay: &DecayConfig) -> f64 {
        self.value * decay.w(at - self.last_update)
    }

    #[inline]
    pub fn bump(&mut self, at: f64, amount: f64, decay: &DecayConfig) {
        self.value = (self.read(at, decay) + amount).max(0.0);
        self.last_update = at;
    }
}

/// Canonical key of a `cite_ap` counter: sorted author and paper subsets,
/// each of size at most [`MAX_SUBSET_ORDER`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetKey {
    authors: [u32; MAX_SUBSET_ORDER],
    papers: [u32; MAX_SUBSET_ORDER],
    n_authors: u8,
    n_papers: u8,
}

impl SubsetKey {
    /// Build from already sorted, duplicate-free id lists.
    pub fn from_sorted(authors: &[u32], papers: &[u32]) -> Self {
        debug_assert!(authors.len() <= MAX_SUBSET_ORDER && papers.len() <= MAX_SUBSET_ORDER);
        debug_assert!(authors.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(papers.windows(2).all(|w| w[0] < w[1]));
        let mut key = Self {
            authors: [0; MAX_SUBSET_ORDER],
            papers: [0; MAX_SUBSET_ORDER],
            n_authors: authors.len() as u8,
            n_papers: papers.len() as u8,
        };
        key.authors[..authors.len()].copy_from_slice(authors);
        key.papers[..papers.len()].copy_from_slice(papers);
        key
    }

    pub fn authors(&self) -> &[u32] {
        &self.authors[..self.n_authors as usize]
    }

    pub fn papers(&self) -> &[u32] {
        &self.papers[..self.n_papers as usize]
    }

    pub fn order(&self) -> (usize, usize) {
        (self.n_authors as usize, self.n_papers as usize)
    }
}

/// Which `(authors, papers)` subset orders of `cite_ap` are materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OrderSet {
    mask: [[bool; MAX_SUBSET_ORDER + 1]; MAX_SUBSET_ORDER + 1],
}

impl OrderSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Every order with both sides at most `MAX_SUBSET_ORDER`.
    pub fn all() -> Self {
        let mut s = Self::empty();
        for k in 0..=MAX_SUBSET_ORDER {
            for l in 0..=MAX_SUBSET_ORDER {
                if k + l > 0 {
                    s.mask[k][l] = true;
                }
            }
        }
        s
    }

    pub fn insert(&mut self, authors: usize, papers: usize) -> Result<(), AttributeError> {
        if authors > MAX_SUBSET_ORDER || papers > MAX_SUBSET_ORDER || authors + papers == 0 {
            return Err(AttributeError::InvalidOrder { authors, papers });
        }
        self.mask[authors][papers] = true;
        Ok(())
    }

    pub fn contains(&self, authors: usize, papers: usize) -> bool {
        authors <= MAX_SUBSET_ORDER && papers <= MAX_SUBSET_ORDER && self.mask[authors][papers]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=MAX_SUBSET_ORDER)
            .flat_map(|k| (0..=MAX_SUBSET_ORDER).map(move |l| (k, l)))
            .filter(|&(k, l)| self.mask[k][l])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerConfig {
    pub decay: DecayConfig,
    pub orders: OrderSet,
}

impl LedgerConfig {
    /// All subset orders up to `(3, 3)`.
    pub fn full(decay: DecayConfig) -> Self {
        Self {
            decay,
            orders: OrderSet::all(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PaperRecord {
    time: f64,
    authors: Vec<AuthorId>,
    references: Vec<PaperId>,
}

/// Attribute addresses for [`AttributeLedger::query`].
#[derive(Debug, Clone, PartialEq)]
pub enum Attribute {
    /// Joint author-to-paper citations of an author subset and a paper subset.
    CiteAp(Vec<AuthorId>, Vec<PaperId>),
    /// Paper `.0` cites paper `.1`.
    CitePp(PaperId, PaperId),
    /// Author `.0` cited a paper authored by `.1`, counted per citing event.
    CiteAa(AuthorId, AuthorId),
    /// Author `.0` wrote paper `.1`.
    Author(AuthorId, PaperId),
    /// Number of citing events that cite at least one paper of the author.
    CitePopA(AuthorId),
    /// Reference-list length of the paper.
    Outdeg(PaperId),
}

/// Sparse store of all decayed network attributes.
#[derive(Debug, Clone)]
pub struct AttributeLedger {
    config: LedgerConfig,
    ap: FxHashMap<SubsetKey, DecayedCounter>,
    coauthors: Vec<FxHashSet<u32>>,
    cited_papers: Vec<FxHashSet<u32>>,
    aa: FxHashMap<(u32, u32), DecayedCounter>,
    aa_out: Vec<FxHashSet<u32>>,
    aa_in: Vec<FxHashSet<u32>>,
    citepop: Vec<DecayedCounter>,
    published: Vec<Option<PaperRecord>>,
    last_time: f64,
    num_events: usize,
}

fn slot<T: Default>(v: &mut Vec<T>, i: usize) -> &mut T {
    if i >= v.len() {
        v.resize_with(i + 1, T::default);
    }
    &mut v[i]
}

fn set_of(v: &[FxHashSet<u32>], i: usize) -> Option<&FxHashSet<u32>> {
    v.get(i).filter(|s| !s.is_empty())
}

impl AttributeLedger {
    pub fn new(config: LedgerConfig) -> Self {
        Self {
            config,
            ap: FxHashMap::default(),
            coauthors: Vec::new(),
            cited_papers: Vec::new(),
            aa: FxHashMap::default(),
            aa_out: Vec::new(),
            aa_in: Vec::new(),
            citepop: Vec::new(),
            published: Vec::new(),
            last_time: f64::NEG_INFINITY,
            num_events: 0,
        }
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn decay(&self) -> &DecayConfig {
        &self.config.decay
    }

    /// Time of the most recently applied event (`-inf` before any event).
    pub fn last_time(&self) -> f64 {
        self.last_time
    }

    pub fn num_events(&self) -> usize {
        self.num_events
    }

    /// Number of materialized `cite_ap` counters.
    pub fn num_subset_counters(&self) -> usize {
        self.ap.len()
    }

    /// Fold one event into every attribute. Events must arrive in
    /// non-decreasing time order.
    pub fn apply_event(&mut self, event: &PublicationEvent) -> Result<(), AttributeError> {
        let t = event.time;
        if t < self.last_time {
            return Err(AttributeError::TimeRegression {
                event: t,
                ledger: self.last_time,
            });
        }
        if matches!(self.published.get(event.paper.index()), Some(Some(_))) {
            return Err(AttributeError::DuplicatePublication(event.paper));
        }
        let decay = self.config.decay;
        let authors: Vec<u32> = event.authors.iter().map(|a| a.0).collect();
        let refs: Vec<u32> = event.references.iter().map(|p| p.0).collect();

        let mut a_buf = [0u32; MAX_SUBSET_ORDER];
        let mut p_buf = [0u32; MAX_SUBSET_ORDER];
        for (k, l) in self.config.orders.iter() {
            let ap = &mut self.ap;
            for_each_combination(authors.len(), k, |ai| {
                for (dst, &i) in a_buf.iter_mut().zip(ai) {
                    *dst = authors[i];
                }
                for_each_combination(refs.len(), l, |pi| {
                    for (dst, &i) in p_buf.iter_mut().zip(pi) {
                        *dst = refs[i];
                    }
                    let key = SubsetKey::from_sorted(&a_buf[..k], &p_buf[..l]);
                    ap.entry(key).or_default().bump(t, 1.0, &decay);
                });
            });
        }
        if self.config.orders.contains(2, 0) {
            for &a in &authors {
                let s = slot(&mut self.coauthors, a as usize);
                s.extend(authors.iter().copied().filter(|&b| b != a));
            }
        }
        if self.config.orders.contains(1, 1) {
            for &a in &authors {
                slot(&mut self.cited_papers, a as usize).extend(refs.iter().copied());
            }
        }

        // Authors of cited papers that were published by earlier events.
        let mut cited_authors: Vec<u32> = event
            .references
            .iter()
            .filter_map(|r| self.published.get(r.index()).and_then(|p| p.as_ref()))
            .flat_map(|rec| rec.authors.iter().map(|a| a.0))
            .collect();
        cited_authors.sort_unstable();
        cited_authors.dedup();
        for &citing in &authors {
            for &cited in &cited_authors {
                self.aa.entry((citing, cited)).or_default().bump(t, 1.0, &decay);
                slot(&mut self.aa_out, citing as usize).insert(cited);
                slot(&mut self.aa_in, cited as usize).insert(citing);
            }
        }
        for &cited in &cited_authors {
            slot(&mut self.citepop, cited as usize).bump(t, 1.0, &decay);
        }

        *slot(&mut self.published, event.paper.index()) = Some(PaperRecord {
            time: t,
            authors: event.authors.clone(),
            references: event.references.clone(),
        });
        self.last_time = t;
        self.num_events += 1;
        Ok(())
    }

    /// Read any attribute at time `at`; keys never touched read as zero.
    pub fn query(&self, key: &Attribute, at: f64) -> Result<f64, AttributeError> {
        let check = |last: f64| {
            if at < last {
                Err(AttributeError::QueryBeforeUpdate { at, last })
            } else {
                Ok(())
            }
        };
        let decay = &self.config.decay;
        match key {
            Attribute::CiteAp(authors, papers) => {
                let mut a: Vec<u32> = authors.iter().map(|x| x.0).collect();
                let mut p: Vec<u32> = papers.iter().map(|x| x.0).collect();
                a.sort_unstable();
                a.dedup();
                p.sort_unstable();
                p.dedup();
                if !self.config.orders.contains(a.len(), p.len()) {
                    return Err(AttributeError::OrderNotMaterialized {
                        authors: a.len(),
                        papers: p.len(),
                    });
                }
                match self.ap.get(&SubsetKey::from_sorted(&a, &p)) {
                    Some(c) => check(c.last_update).map(|_| c.read(at, decay)),
                    None => Ok(0.0),
                }
            }
            Attribute::CiteAa(i, j) => match self.aa.get(&(i.0, j.0)) {
                Some(c) => check(c.last_update).map(|_| c.read(at, decay)),
                None => Ok(0.0),
            },
            Attribute::CitePopA(i) => match self.citepop.get(i.index()) {
                Some(c) if c.value > 0.0 => check(c.last_update).map(|_| c.read(at, decay)),
                _ => Ok(0.0),
            },
            Attribute::CitePp(j, _) | Attribute::Author(_, j) | Attribute::Outdeg(j) => {
                if let Some(rec) = self.record(*j) {
                    check(rec.time)?;
                }
                Ok(match key {
                    Attribute::CitePp(j, r) => self.cite_pp(*j, *r, at),
                    Attribute::Author(i, j) => self.author_rel(*i, *j, at),
                    Attribute::Outdeg(j) => self.outdeg(*j, at),
                    _ => unreachable!(),
                })
            }
        }
    }

    fn record(&self, p: PaperId) -> Option<&PaperRecord> {
        self.published.get(p.index()).and_then(|r| r.as_ref())
    }

    /// Fast read of `cite_ap` for sorted, duplicate-free raw id lists whose
    /// order is materialized.
    #[inline]
    pub(crate) fn cite_ap_sorted(&self, authors: &[u32], papers: &[u32], at: f64) -> f64 {
        debug_assert!(self.config.orders.contains(authors.len(), papers.len()));
        self.ap
            .get(&SubsetKey::from_sorted(authors, papers))
            .map_or(0.0, |c| c.read(at, &self.config.decay))
    }

    pub fn coauth(&self, a: AuthorId, b: AuthorId, at: f64) -> f64 {
        let (x, y) = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
        if x == y {
            return 0.0;
        }
        self.cite_ap_sorted(&[x, y], &[], at)
    }

    pub fn author_cites_paper(&self, a: AuthorId, p: PaperId, at: f64) -> f64 {
        self.cite_ap_sorted(&[a.0], &[p.0], at)
    }

    pub fn prior_papers(&self, a: AuthorId, at: f64) -> f64 {
        self.cite_ap_sorted(&[a.0], &[], at)
    }

    pub fn cite_pp(&self, citing: PaperId, cited: PaperId, at: f64) -> f64 {
        match self.record(citing) {
            Some(rec) if rec.references.binary_search(&cited).is_ok() => {
                self.config.decay.w(at - rec.time)
            }
            _ => 0.0,
        }
    }

    pub fn cite_aa(&self, citing: AuthorId, cited: AuthorId, at: f64) -> f64 {
        self.aa
            .get(&(citing.0, cited.0))
            .map_or(0.0, |c| c.read(at, &self.config.decay))
    }

    pub fn author_rel(&self, a: AuthorId, p: PaperId, at: f64) -> f64 {
        match self.record(p) {
            Some(rec) if rec.authors.binary_search(&a).is_ok() => self.config.decay.w(at - rec.time),
            _ => 0.0,
        }
    }

    pub fn citepop(&self, a: AuthorId, at: f64) -> f64 {
        self.citepop
            .get(a.index())
            .map_or(0.0, |c| c.read(at, &self.config.decay))
    }

    pub fn outdeg(&self, p: PaperId, at: f64) -> f64 {
        self.record(p).map_or(0.0, |rec| {
            self.config.decay.w(at - rec.time) * rec.references.len() as f64
        })
    }

    /// Authors of a published paper (empty if unpublished).
    pub fn paper_authors(&self, p: PaperId) -> &[AuthorId] {
        self.record(p).map_or(&[], |r| &r.authors)
    }

    /// References of a published paper (empty if unpublished).
    pub fn paper_refs(&self, p: PaperId) -> &[PaperId] {
        self.record(p).map_or(&[], |r| &r.references)
    }

    pub fn is_published(&self, p: PaperId) -> bool {
        self.record(p).is_some()
    }

    /// Past coauthors of `a`. Requires order `(2,0)`.
    pub(crate) fn coauthors_of(&self, a: AuthorId) -> Option<&FxHashSet<u32>> {
        set_of(&self.coauthors, a.index())
    }

    /// Papers `a` has cited. Requires order `(1,1)`.
    pub(crate) fn papers_cited_by(&self, a: AuthorId) -> Option<&FxHashSet<u32>> {
        set_of(&self.cited_papers, a.index())
    }

    /// Authors whose papers `a` has cited.
    pub(crate) fn authors_cited_by(&self, a: AuthorId) -> Option<&FxHashSet<u32>> {
        set_of(&self.aa_out, a.index())
    }

    /// Authors who have cited papers of `a`.
    pub(crate) fn authors_citing(&self, a: AuthorId) -> Option<&FxHashSet<u32>> {
        set_of(&self.aa_in, a.index())
    }

    /// Line-oriented dump of every stored counter and paper record. Reals
    /// carry 17 significant digits, so [`Self::read_checkpoint`] restores an
    /// identical ledger.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<(), AttributeError> {
        let io = |e: std::io::Error| AttributeError::Io(e.to_string());
        let join = |ids: &mut dyn Iterator<Item = u32>| {
            ids.map(|i| i.to_string()).collect::<Vec<_>>().join(",")
        };
        writeln!(w, "rhem-ledger\t1").map_err(io)?;
        let hl = self.config.decay.half_life_years().map_or("inf".to_owned(), fmt_real);
        writeln!(w, "half_life\t{hl}").map_err(io)?;
        let orders: Vec<String> = self.config.orders.iter().map(|(k, l)| format!("{k}:{l}")).collect();
        writeln!(w, "orders\t{}", orders.join(",")).map_err(io)?;
        writeln!(w, "clock\t{}\t{}", fmt_real(self.last_time), self.num_events).map_err(io)?;
        for (p, rec) in self.published.iter().enumerate() {
            if let Some(rec) = rec {
                writeln!(
                    w,
                    "paper\t{p}\t{}\t{}\t{}",
                    fmt_real(rec.time),
                    join(&mut rec.authors.iter().map(|a| a.0)),
                    join(&mut rec.references.iter().map(|r| r.0)),
                )
                .map_err(io)?;
            }
        }
        let mut ap: Vec<_> = self.ap.iter().collect();
        ap.sort_by_key(|(k, _)| **k);
        for (k, c) in ap {
            writeln!(
                w,
                "ap\t{}\t{}\t{}\t{}",
                join(&mut k.authors().iter().copied()),
                join(&mut k.papers().iter().copied()),
                fmt_real(c.value),
                fmt_real(c.last_update)
            )
            .map_err(io)?;
        }
        let mut aa: Vec<_> = self.aa.iter().collect();
        aa.sort_by_key(|(k, _)| **k);
        for ((i, j), c) in aa {
            writeln!(w, "aa\t{i}\t{j}\t{}\t{}", fmt_real(c.value), fmt_real(c.last_update)).map_err(io)?;
        }
        for (i, c) in self.citepop.iter().enumerate() {
            if c.value > 0.0 {
                writeln!(w, "citepop\t{i}\t{}\t{}", fmt_real(c.value), fmt_real(c.last_update)).map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(r: R) -> Result<Self, AttributeError> {
        let mut ledger: Option<Self> = None;
        let mut half_life: Option<DecayConfig> = None;
        for (n, line) in r.lines().enumerate() {
            let lineno = n + 1;
            let line = line.map_err(|e| AttributeError::Io(e.to_string()))?;
            let bad = |reason: &str| AttributeError::Checkpoint {
                line: lineno,
                reason: reason.to_owned(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            let real = |s: &str| parse_real(s).ok_or_else(|| bad("bad real"));
            let ids = |s: &str| -> Result<Vec<u32>, AttributeError> {
                if s.is_empty() {
                    return Ok(Vec::new());
                }
                s.split(',').map(|x| x.parse().map_err(|_| bad("bad id"))).collect()
            };
            match (f[0], ledger.as_mut()) {
                ("rhem-ledger", _) if f.get(1) == Some(&"1") => {}
                ("half_life", None) => {
                    let d = match f.get(1) {
                        Some(&"inf") => DecayConfig::infinite(),
                        Some(s) => DecayConfig::half_life(real(s)?)?,
                        None => return Err(bad("missing half-life")),
                    };
                    half_life = Some(d);
                }
                ("orders", None) => {
                    let decay = half_life.ok_or_else(|| bad("orders before half_life"))?;
                    let mut orders = OrderSet::empty();
                    for o in f.get(1).unwrap_or(&"").split(',').filter(|s| !s.is_empty()) {
                        let (k, l) = o.split_once(':').ok_or_else(|| bad("bad order"))?;
                        let k = k.parse().map_err(|_| bad("bad order"))?;
                        let l = l.parse().map_err(|_| bad("bad order"))?;
                        orders.insert(k, l)?;
                    }
                    ledger = Some(Self::new(LedgerConfig { decay, orders }));
                }
                ("clock", Some(l)) if f.len() == 3 => {
                    l.last_time = real(f[1])?;
                    l.num_events = f[2].parse().map_err(|_| bad("bad count"))?;
                }
                ("paper", Some(l)) if f.len() == 5 => {
                    let p: usize = f[1].parse().map_err(|_| bad("bad id"))?;
                    let rec = PaperRecord {
                        time: real(f[2])?,
                        authors: ids(f[3])?.into_iter().map(AuthorId).collect(),
                        references: ids(f[4])?.into_iter().map(PaperId).collect(),
                    };
                    if l.config.orders.contains(2, 0) {
                        for a in &rec.authors {
                            slot(&mut l.coauthors, a.index())
                                .extend(rec.authors.iter().map(|b| b.0).filter(|&b| b != a.0));
                        }
                    }
                    if l.config.orders.contains(1, 1) {
                        for a in &rec.authors {
                            slot(&mut l.cited_papers, a.index()).extend(rec.references.iter().map(|r| r.0));
                        }
                    }
                    *slot(&mut l.published, p) = Some(rec);
                }
                ("ap", Some(l)) if f.len() == 5 => {
                    let a = ids(f[1])?;
                    let p = ids(f[2])?;
                    if a.len() > MAX_SUBSET_ORDER || p.len() > MAX_SUBSET_ORDER {
                        return Err(bad("subset too large"));
                    }
                    let c = DecayedCounter {
                        value: real(f[3])?,
                        last_update: real(f[4])?,
                    };
                    l.ap.insert(SubsetKey::from_sorted(&a, &p), c);
                }
                ("aa", Some(l)) if f.len() == 5 => {
                    let i: u32 = f[1].parse().map_err(|_| bad("bad id"))?;
                    let j: u32 = f[2].parse().map_err(|_| bad("bad id"))?;
                    let c = DecayedCounter {
                        value: real(f[3])?,
                        last_update: real(f[4])?,
                    };
                    l.aa.insert((i, j), c);
                    slot(&mut l.aa_out, i as usize).insert(j);
                    slot(&mut l.aa_in, j as usize).insert(i);
                }
                ("citepop", Some(l)) if f.len() == 4 => {
                    let i: usize = f[1].parse().map_err(|_| bad("bad id"))?;
                    *slot(&mut l.citepop, i) = DecayedCounter {
                        value: real(f[2])?,
                        last_update: real(f[3])?,
                    };
                }
                _ => return Err(bad("unexpected record")),
            }
        }
        ledger.ok_or(AttributeError::Checkpoint {
            line: 0,
            reason: "empty checkpoint".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::fixtures::StreamBuilder;
    use crate::events::EventStream;

    fn replay(stream: &EventStream, config: LedgerConfig) -> AttributeLedger {
        let mut ledger = AttributeLedger::new(config);
        for e in stream.events() {
            ledger.apply_event(e).unwrap();
        }
        ledger
    }

    /// Two-event example plus earlier events establishing that i5 wrote j4
    /// and j5 and i6 wrote j5 and j6.
    fn worked_example() -> StreamBuilder {
        StreamBuilder::default()
            .event(0.0, "j4", &["i5"], &["j0"])
            .event(0.0, "j5", &["i5", "i6"], &["j0"])
            .event(0.0, "j6", &["i6"], &["j0"])
            .event(1.0, "jt1", &["i1", "i2", "i3"], &["j1", "j2", "j3", "j4"])
            .event(2.0, "jt2", &["i2", "i3", "i4"], &["j2", "j3", "j4", "j5", "j6"])
    }

    #[test]
    fn decay_weight_examples() {
        let d = DecayConfig::half_life(3.0).unwrap();
        assert_eq!(d.weight(0.0).unwrap(), 1.0);
        assert!((d.weight(3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.weight(6.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(DecayConfig::infinite().weight(1e9).unwrap(), 1.0);
        assert!(matches!(d.weight(-1.0), Err(AttributeError::NegativeElapsed(_))));
        assert!(DecayConfig::half_life(0.0).is_err());
        assert!(DecayConfig::half_life(-2.0).is_err());
    }

    #[test]
    fn worked_attribute_values() {
        let b = worked_example();
        let (i2, i3, i5, i6, j2) = (b.author("i2"), b.author("i3"), b.author("i5"), b.author("i6"), b.paper("j2"));
        let i1 = b.author("i1");
        let ledger = replay(&b.build(), LedgerConfig::full(DecayConfig::infinite()));
        let t = 3.0;
        let q = |k: Attribute| ledger.query(&k, t).unwrap();
        assert_eq!(q(Attribute::CiteAp(vec![i2, i3], vec![j2])), 2.0);
        assert_eq!(q(Attribute::CiteAp(vec![i1, i2], vec![j2])), 1.0);
        assert_eq!(q(Attribute::CiteAa(i3, i5)), 2.0);
        assert_eq!(q(Attribute::CiteAa(i3, i6)), 1.0);
    }

    #[test]
    fn outdegree_of_second_paper_is_five() {
        let b = worked_example();
        let jt2 = b.paper("jt2");
        let ledger = replay(&b.build(), LedgerConfig::full(DecayConfig::infinite()));
        assert_eq!(ledger.query(&Attribute::Outdeg(jt2), 2.5).unwrap(), 5.0);
    }

    #[test]
    fn empty_history_reads_zero() {
        let b = worked_example();
        let (i1, j1) = (b.author("i1"), b.paper("j1"));
        let ledger = AttributeLedger::new(LedgerConfig::full(DecayConfig::default()));
        assert_eq!(ledger.query(&Attribute::CiteAp(vec![i1], vec![j1]), 0.0).unwrap(), 0.0);
        assert_eq!(ledger.query(&Attribute::CitePopA(i1), 0.0).unwrap(), 0.0);
        assert_eq!(ledger.query(&Attribute::Outdeg(j1), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn one_half_life_halves_a_counter() {
        let b = StreamBuilder::default().event(1.0, "x", &["a"], &["y"]);
        let a = b.author("a");
        let ledger = replay(&b.build(), LedgerConfig::full(DecayConfig::half_life(3.0).unwrap()));
        let v = ledger.query(&Attribute::CiteAp(vec![a], vec![]), 4.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn time_regression_and_early_query_rejected() {
        let b = StreamBuilder::default()
            .event(2.0, "x", &["a"], &["y"])
            .event(1.0, "z", &["a"], &["y"]);
        let a = b.author("a");
        let events = b.events.clone();
        let mut ledger = AttributeLedger::new(LedgerConfig::full(DecayConfig::default()));
        ledger.apply_event(&events[0]).unwrap();
        assert!(matches!(ledger.apply_event(&events[1]), Err(AttributeError::TimeRegression { .. })));
        assert!(matches!(
            ledger.query(&Attribute::CiteAp(vec![a], vec![]), 1.5),
            Err(AttributeError::QueryBeforeUpdate { .. })
        ));
    }

    #[test]
    fn unmaterialized_order_is_an_error() {
        let b = worked_example();
        let (i1, i2) = (b.author("i1"), b.author("i2"));
        let mut orders = OrderSet::empty();
        orders.insert(1, 0).unwrap();
        let ledger = replay(
            &b.build(),
            LedgerConfig {
                decay: DecayConfig::infinite(),
                orders,
            },
        );
        assert_eq!(ledger.query(&Attribute::CiteAp(vec![i1], vec![]), 3.0).unwrap(), 1.0);
        assert!(matches!(
            ledger.query(&Attribute::CiteAp(vec![i1, i2], vec![]), 3.0),
            Err(AttributeError::OrderNotMaterialized { authors: 2, papers: 0 })
        ));
        assert!(OrderSet::empty().insert(0, 0).is_err());
        assert!(OrderSet::empty().insert(4, 0).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let b = worked_example();
        let stream = b.build();
        let ledger = replay(&stream, LedgerConfig::full(DecayConfig::half_life(1.7).unwrap()));
        let mut buf = Vec::new();
        ledger.write_checkpoint(&mut buf).unwrap();
        let back = AttributeLedger::read_checkpoint(&buf[..]).unwrap();
        let mut buf2 = Vec::new();
        back.write_checkpoint(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(back.ap, ledger.ap);
        assert_eq!(back.aa, ledger.aa);
        assert_eq!(back.coauthors, ledger.coauthors);
        assert_eq!(back.cited_papers, ledger.cited_papers);
        // A restored ledger keeps accepting events.
        let mut back = back;
        let e = PublicationEvent::new(5.0, PaperId(99), vec![AuthorId(0)], vec![PaperId(1)]);
        back.apply_event(&e).unwrap();
    }
}
