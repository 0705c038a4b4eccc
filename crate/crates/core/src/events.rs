//! Publication events, stream validation and risk-set tracking.
//!
//! A publication event is the tuple `(time, focal paper, author set,
//! reference set)`. Node ids are dense integer handles interned from the
//! source strings, so every downstream sparse structure can index by `u32`.

use std::collections::HashMap;
use std::fmt;

use rustc_hash::FxHashSet;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AuthorId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PaperId(pub u32);

impl AuthorId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PaperId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AuthorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

impl fmt::Display for PaperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventError {
    #[error("paper {paper} is published by more than one event")]
    DuplicateFocalPaper { paper: String },
    #[error("paper {paper} cites itself")]
    SelfReference { paper: String },
    #[error("event for paper {paper} has an empty {which} set")]
    EmptySet { paper: String, which: &'static str },
    #[error("event time {time} is not a finite non-negative number")]
    InvalidTime { time: f64 },
    #[error("batch at time {batch} precedes current risk-set time {current}")]
    TimeRegression { batch: f64, current: f64 },
    #[error("batch mixes timestamps {first} and {other}")]
    MixedBatch { first: f64, other: f64 },
}

/// String-to-dense-id table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// One hyperevent: `authors` publish `paper` at `time`, citing `references`.
///
/// Author and reference lists are kept sorted and duplicate-free so they can
/// be compared and enumerated as sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicationEvent {
    pub time: f64,
    pub paper: PaperId,
    pub authors: Vec<AuthorId>,
    pub references: Vec<PaperId>,
}

impl PublicationEvent {
    pub fn new(
        time: f64,
        paper: PaperId,
        mut authors: Vec<AuthorId>,
        mut references: Vec<PaperId>,
    ) -> Self {
        authors.sort_unstable();
        authors.dedup();
        references.sort_unstable();
        references.dedup();
        Self {
            time,
            paper,
            authors,
            references,
        }
    }
}

/// A validated, time-ordered sequence of events together with the source
/// labels of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<PublicationEvent>,
    authors: Interner,
    papers: Interner,
}

impl EventStream {
    pub fn events(&self) -> &[PublicationEvent] {
        &self.events
    }

    pub fn author_labels(&self) -> &Interner {
        &self.authors
    }

    pub fn paper_labels(&self) -> &Interner {
        &self.papers
    }

    pub fn num_authors(&self) -> usize {
        self.authors.len()
    }

    pub fn num_papers(&self) -> usize {
        self.papers.len()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Maximal runs of events sharing one exact timestamp, with the index of
    /// the first event of each run.
    pub fn batches(&self) -> impl Iterator<Item = (usize, &[PublicationEvent])> {
        let mut start = 0;
        let events = &self.events;
        std::iter::from_fn(move || {
            if start >= events.len() {
                return None;
            }
            let t = events[start].time;
            let end = events[start..]
                .iter()
                .position(|e| e.time != t)
                .map_or(events.len(), |off| start + off);
            let batch = (start, &events[start..end]);
            start = end;
            Some(batch)
        })
    }
}

/// Validate events and return them as a time-ordered stream.
///
/// Unsorted input is stably sorted by time, so events with equal timestamps
/// keep their input order.
pub fn validate_stream(
    mut events: Vec<PublicationEvent>,
    authors: Interner,
    papers: Interner,
) -> Result<EventStream, EventError> {
    let label = |p: PaperId| -> String {
        if p.index() < papers.len() {
            papers.name(p.0).to_owned()
        } else {
            p.to_string()
        }
    };
    let mut seen = FxHashSet::default();
    for e in &events {
        if !e.time.is_finite() || e.time < 0.0 {
            return Err(EventError::InvalidTime { time: e.time });
        }
        if e.authors.is_empty() {
            return Err(EventError::EmptySet {
                paper: label(e.paper),
                which: "author",
            });
        }
        if e.references.is_empty() {
            return Err(EventError::EmptySet {
                paper: label(e.paper),
                which: "reference",
            });
        }
        if e.references.binary_search(&e.paper).is_ok() {
            return Err(EventError::SelfReference {
                paper: label(e.paper),
            });
        }
        if !seen.insert(e.paper) {
            return Err(EventError::DuplicateFocalPaper {
                paper: label(e.paper),
            });
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(EventStream {
        events,
        authors,
        papers,
    })
}

/// The authors who may publish and the papers that may be cited at the
/// current time. Membership only grows unless a node is explicitly retired.
#[derive(Debug, Clone, Default)]
pub struct RiskSetState {
    authors: Vec<AuthorId>,
    author_slot: Vec<Option<u32>>,
    papers: Vec<PaperId>,
    paper_slot: Vec<Option<u32>>,
    current_time: f64,
}

impl RiskSetState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current_time(&self) -> f64 {
        self.current_time
    }

    /// Authors at risk, in order of first appearance.
    pub fn authors(&self) -> &[AuthorId] {
        &self.authors
    }

    /// Papers at risk, in order of first appearance.
    pub fn papers(&self) -> &[PaperId] {
        &self.papers
    }

    pub fn contains_author(&self, a: AuthorId) -> bool {
        matches!(self.author_slot.get(a.index()), Some(Some(_)))
    }

    pub fn contains_paper(&self, p: PaperId) -> bool {
        matches!(self.paper_slot.get(p.index()), Some(Some(_)))
    }

    /// Position of `p` in [`Self::papers`].
    pub fn paper_position(&self, p: PaperId) -> Option<usize> {
        self.paper_slot.get(p.index()).copied().flatten().map(|s| s as usize)
    }

    pub fn add_author(&mut self, a: AuthorId) {
        if a.index() >= self.author_slot.len() {
            self.author_slot.resize(a.index() + 1, None);
        }
        if self.author_slot[a.index()].is_none() {
            self.author_slot[a.index()] = Some(self.authors.len() as u32);
            self.authors.push(a);
        }
    }

    pub fn add_paper(&mut self, p: PaperId) {
        if p.index() >= self.paper_slot.len() {
            self.paper_slot.resize(p.index() + 1, None);
        }
        if self.paper_slot[p.index()].is_none() {
            self.paper_slot[p.index()] = Some(self.papers.len() as u32);
            self.papers.push(p);
        }
    }

    /// Remove an author from the risk set. Not used by the default pipeline,
    /// which never retires authors.
    pub fn retire_author(&mut self, a: AuthorId) -> bool {
        let Some(Some(slot)) = self.author_slot.get(a.index()).copied() else {
            return false;
        };
        let slot = slot as usize;
        self.authors.swap_remove(slot);
        if let Some(moved) = self.authors.get(slot) {
            self.author_slot[moved.index()] = Some(slot as u32);
        }
        self.author_slot[a.index()] = None;
        true
    }

    /// Add every node of a same-time batch to the risk set and move the
    /// clock to the batch time.
    pub fn advance(&mut self, batch: &[PublicationEvent]) -> Result<(), EventError> {
        let Some(first) = batch.first() else {
            return Ok(());
        };
        let t = first.time;
        if let Some(other) = batch.iter().find(|e| e.time != t) {
            return Err(EventError::MixedBatch {
                first: t,
                other: other.time,
            });
        }
        if t < self.current_time {
            return Err(EventError::TimeRegression {
                batch: t,
                current: self.current_time,
            });
        }
        for e in batch {
            for &a in &e.authors {
                self.add_author(a);
            }
            self.add_paper(e.paper);
            for &r in &e.references {
                self.add_paper(r);
            }
        }
        self.current_time = t;
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::StreamBuilder;
    use super::*;

    fn worked_example() -> StreamBuilder {
        StreamBuilder::default()
            .event(1.0, "jt1", &["i1", "i2", "i3"], &["j1", "j2", "j3", "j4"])
            .event(2.0, "jt2", &["i2", "i3", "i4"], &["j2", "j3", "j4", "j5", "j6"])
    }

    #[test]
    fn duplicate_focal_paper_rejected() {
        let b = StreamBuilder::default()
            .event(1.0, "x", &["a"], &["y"])
            .event(2.0, "x", &["b"], &["z"]);
        let err = validate_stream(b.events, b.authors, b.papers).unwrap_err();
        assert!(matches!(err, EventError::DuplicateFocalPaper { .. }));
    }

    #[test]
    fn self_reference_rejected() {
        let b = StreamBuilder::default().event(1.0, "x", &["a"], &["x", "y"]);
        let err = validate_stream(b.events, b.authors, b.papers).unwrap_err();
        assert_eq!(err, EventError::SelfReference { paper: "x".into() });
    }

    #[test]
    fn empty_sets_rejected() {
        let b = StreamBuilder::default().event(1.0, "x", &[], &["y"]);
        let err = validate_stream(b.events, b.authors, b.papers).unwrap_err();
        assert!(matches!(err, EventError::EmptySet { which: "author", .. }));
        let b = StreamBuilder::default().event(1.0, "x", &["a"], &[]);
        let err = validate_stream(b.events, b.authors, b.papers).unwrap_err();
        assert!(matches!(err, EventError::EmptySet { which: "reference", .. }));
    }

    #[test]
    fn sorted_input_is_identity() {
        let b = StreamBuilder::default()
            .event(1.0, "x", &["a"], &["y"])
            .event(2.0, "z", &["b"], &["x"])
            .event(3.0, "w", &["a", "b"], &["x", "z"]);
        let original = b.events.clone();
        let s = validate_stream(b.events, b.authors, b.papers).unwrap();
        assert_eq!(s.events(), &original[..]);
    }

    #[test]
    fn unsorted_input_is_stably_sorted() {
        let b = StreamBuilder::default()
            .event(2.0, "x", &["a"], &["y"])
            .event(1.0, "z", &["b"], &["y"])
            .event(2.0, "w", &["c"], &["y"]);
        let s = b.build();
        let order: Vec<_> = s.events().iter().map(|e| s.paper_labels().name(e.paper.0)).collect();
        assert_eq!(order, ["z", "x", "w"]);
    }

    #[test]
    fn batches_group_exact_ties() {
        let s = StreamBuilder::default()
            .event(1.0, "x", &["a"], &["y"])
            .event(1.0, "z", &["b"], &["y"])
            .event(2.0, "w", &["c"], &["y"])
            .build();
        let sizes: Vec<_> = s.batches().map(|(start, b)| (start, b.len())).collect();
        assert_eq!(sizes, [(0, 2), (2, 1)]);
    }

    #[test]
    fn empty_batch_leaves_state_unchanged() {
        let mut rs = RiskSetState::new();
        rs.advance(&[]).unwrap();
        assert!(rs.authors().is_empty());
        assert_eq!(rs.current_time(), 0.0);
    }

    #[test]
    fn first_event_enters_risk_set() {
        let b = worked_example();
        let s = b.build();
        let mut rs = RiskSetState::new();
        let (_, first) = s.batches().next().unwrap();
        rs.advance(first).unwrap();
        let names: Vec<_> = rs.authors().iter().map(|a| s.author_labels().name(a.0)).collect();
        assert_eq!(names, ["i1", "i2", "i3"]);
        let mut papers: Vec<_> = rs.papers().iter().map(|p| s.paper_labels().name(p.0)).collect();
        papers.sort();
        assert_eq!(papers, ["j1", "j2", "j3", "j4", "jt1"]);
    }

    #[test]
    fn full_replay_counts() {
        let s = worked_example().build();
        let mut rs = RiskSetState::new();
        for (_, batch) in s.batches() {
            rs.advance(batch).unwrap();
        }
        assert_eq!(rs.authors().len(), 4);
        assert_eq!(rs.papers().len(), 8);
    }

    #[test]
    fn time_regression_rejected() {
        let s = worked_example().build();
        let mut rs = RiskSetState::new();
        let batches: Vec<_> = s.batches().collect();
        rs.advance(batches[1].1).unwrap();
        let err = rs.advance(batches[0].1).unwrap_err();
        assert!(matches!(err, EventError::TimeRegression { .. }));
    }

    #[test]
    fn retire_author_keeps_slots_consistent() {
        let mut rs = RiskSetState::new();
        for i in 0..4 {
            rs.add_author(AuthorId(i));
        }
        assert!(rs.retire_author(AuthorId(1)));
        assert!(!rs.contains_author(AuthorId(1)));
        for &a in rs.authors() {
            assert!(rs.contains_author(a));
        }
        assert_eq!(rs.authors().len(), 3);
        assert!(!rs.retire_author(AuthorId(1)));
    }
}
