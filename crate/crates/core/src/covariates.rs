//! Hyperedge covariates: statistics of a candidate `(authors, references)`
//! pair computed from the attribute ledger at a given time.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attributes::{AttributeError, AttributeLedger, OrderSet, MAX_SUBSET_ORDER};
use crate::events::{AuthorId, PaperId};
use crate::util::{binomial, for_each_combination};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CovariateError {
    #[error("subset repetition needs at least one non-zero order")]
    BothOrdersZero,
    #[error("subset order ({0},{1}) exceeds the supported maximum of {max}", max = MAX_SUBSET_ORDER)]
    OrderTooLarge(usize, usize),
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("covariate {covariate} cannot be used in the {model} model")]
    InapplicableCovariate { covariate: Covariate, model: ModelVariant },
    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),
    #[error(transparent)]
    Attribute(#[from] AttributeError),
}

/// Which candidate space the model ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    /// Author sets and reference lists are both random.
    #[default]
    Joint,
    /// Only the author set is random; references are ignored.
    Coauthoring,
    /// The author set is fixed to the observed one; only references vary.
    Citation,
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Joint => "joint",
            Self::Coauthoring => "coauthoring",
            Self::Citation => "citation",
        })
    }
}

impl FromStr for ModelVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "joint" => Ok(Self::Joint),
            "coauthoring" => Ok(Self::Coauthoring),
            "citation" => Ok(Self::Citation),
            _ => Err(format!("unknown model `{s}` (joint | coauthoring | citation)")),
        }
    }
}

/// What history an effect depends on: pure authorship (A), pure citation
/// (C), or both (M).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EffectType {
    #[serde(rename = "A")]
    Authorship,
    #[serde(rename = "C")]
    Citation,
    #[serde(rename = "M")]
    Mixed,
}

impl EffectType {
    pub fn code(self) -> char {
        match self {
            Self::Authorship => 'A',
            Self::Citation => 'C',
            Self::Mixed => 'M',
        }
    }
}

/// Which arguments of the candidate hyperedge a covariate reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arguments {
    Authors,
    Papers,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Covariate {
    PriorPapers,
    DiffPriorPapers,
    PriorJointPapers,
    AuthorCitationPopularity,
    DiffAuthorCitationPopularity,
    CollabWithCitingAuthor,
    CommonCoauthor,
    CitingCommonPaper,
    CitingCommonAuthor,
    CitedByCommonAuthor,
    PaperCitationPopularity,
    PaperPairCocitation,
    PaperTripleCocitation,
    AuthorCitationRepetition,
    AuthorPairCitationRepetition,
    AuthorTripleCitationRepetition,
    PaperOutdegreePopularity,
    CitePaperAndItsRefs,
    AdoptCitationOfCoauthor,
    SelfCitation,
    CiteCoauthorsPaper,
    AuthorAuthorCitationRepetition,
    AuthorAuthorCitationReciprocation,
}

impl Covariate {
    pub const ALL: [Covariate; 23] = [
        Self::PriorPapers,
        Self::DiffPriorPapers,
        Self::PriorJointPapers,
        Self::AuthorCitationPopularity,
        Self::DiffAuthorCitationPopularity,
        Self::CollabWithCitingAuthor,
        Self::CommonCoauthor,
        Self::CitingCommonPaper,
        Self::CitingCommonAuthor,
        Self::CitedByCommonAuthor,
        Self::PaperCitationPopularity,
        Self::PaperPairCocitation,
        Self::PaperTripleCocitation,
        Self::AuthorCitationRepetition,
        Self::AuthorPairCitationRepetition,
        Self::AuthorTripleCitationRepetition,
        Self::PaperOutdegreePopularity,
        Self::CitePaperAndItsRefs,
        Self::AdoptCitationOfCoauthor,
        Self::SelfCitation,
        Self::CiteCoauthorsPaper,
        Self::AuthorAuthorCitationRepetition,
        Self::AuthorAuthorCitationReciprocation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::PriorPapers => "prior_papers",
            Self::DiffPriorPapers => "diff_prior_papers",
            Self::PriorJointPapers => "prior_joint_papers",
            Self::AuthorCitationPopularity => "author_citation_popularity",
            Self::DiffAuthorCitationPopularity => "diff_author_citation_popularity",
            Self::CollabWithCitingAuthor => "collab_with_citing_author",
            Self::CommonCoauthor => "common_coauthor",
            Self::CitingCommonPaper => "citing_common_paper",
            Self::CitingCommonAuthor => "citing_common_author",
            Self::CitedByCommonAuthor => "cited_by_common_author",
            Self::PaperCitationPopularity => "paper_citation_popularity",
            Self::PaperPairCocitation => "paper_pair_cocitation",
            Self::PaperTripleCocitation => "paper_triple_cocitation",
            Self::AuthorCitationRepetition => "author_citation_repetition",
            Self::AuthorPairCitationRepetition => "author_pair_citation_repetition",
            Self::AuthorTripleCitationRepetition => "author_triple_citation_repetition",
            Self::PaperOutdegreePopularity => "paper_outdegree_popularity",
            Self::CitePaperAndItsRefs => "cite_paper_and_its_refs",
            Self::AdoptCitationOfCoauthor => "adopt_citation_of_coauthor",
            Self::SelfCitation => "self_citation",
            Self::CiteCoauthorsPaper => "cite_coauthors_paper",
            Self::AuthorAuthorCitationRepetition => "author_author_citation_repetition",
            Self::AuthorAuthorCitationReciprocation => "author_author_citation_reciprocation",
        }
    }

    pub fn arguments(self) -> Arguments {
        use Covariate::*;
        match self {
            PriorPapers | DiffPriorPapers | PriorJointPapers | AuthorCitationPopularity
            | DiffAuthorCitationPopularity | CollabWithCitingAuthor | CommonCoauthor
            | CitingCommonPaper | CitingCommonAuthor | CitedByCommonAuthor => Arguments::Authors,
            PaperCitationPopularity | PaperPairCocitation | PaperTripleCocitation
            | PaperOutdegreePopularity | CitePaperAndItsRefs => Arguments::Papers,
            _ => Arguments::Both,
        }
    }

    pub fn effect_type(self) -> EffectType {
        use Covariate::*;
        match self {
            PriorPapers | DiffPriorPapers | PriorJointPapers | CommonCoauthor => EffectType::Authorship,
            PaperCitationPopularity | PaperPairCocitation | PaperTripleCocitation
            | PaperOutdegreePopularity | CitePaperAndItsRefs => EffectType::Citation,
            _ => EffectType::Mixed,
        }
    }

    pub fn applies_to(self, model: ModelVariant) -> bool {
        match model {
            ModelVariant::Joint => true,
            ModelVariant::Coauthoring => self.arguments() == Arguments::Authors,
            ModelVariant::Citation => self.arguments() != Arguments::Authors,
        }
    }

    /// `(authors, papers)` subset orders of `cite_ap` this covariate reads.
    pub fn required_orders(self) -> &'static [(usize, usize)] {
        use Covariate::*;
        match self {
            PriorPapers | DiffPriorPapers => &[(1, 0)],
            PriorJointPapers | CommonCoauthor | CiteCoauthorsPaper => &[(2, 0)],
            PaperCitationPopularity => &[(0, 1)],
            PaperPairCocitation => &[(0, 2)],
            PaperTripleCocitation => &[(0, 3)],
            AuthorCitationRepetition | CitingCommonPaper => &[(1, 1)],
            AuthorPairCitationRepetition => &[(2, 1)],
            AuthorTripleCitationRepetition => &[(3, 1)],
            AdoptCitationOfCoauthor => &[(2, 0), (1, 1)],
            _ => &[],
        }
    }

    /// How the raw sum is normalized.
    pub fn normalization(self) -> &'static str {
        use Covariate::*;
        match self {
            PriorPapers | PriorJointPapers | PaperCitationPopularity | PaperPairCocitation
            | PaperTripleCocitation | AuthorCitationRepetition | AuthorPairCitationRepetition
            | AuthorTripleCitationRepetition => "mean over C(|I|,k)*C(|J|,l) subset pairs",
            DiffPriorPapers | DiffAuthorCitationPopularity | CommonCoauthor | CitingCommonPaper
            | CitingCommonAuthor | CitedByCommonAuthor => "divided by C(|I|,2) unordered author pairs",
            CollabWithCitingAuthor => "divided by |I|(|I|-1) ordered author pairs",
            CitePaperAndItsRefs => "divided by |J|(|J|-1) ordered paper pairs",
            AuthorCitationPopularity => "mean over |I| authors",
            PaperOutdegreePopularity => "mean over |J| papers",
            AdoptCitationOfCoauthor | SelfCitation | CiteCoauthorsPaper
            | AuthorAuthorCitationRepetition | AuthorAuthorCitationReciprocation => {
                "divided by |I|*|J| author-paper pairs"
            }
        }
    }

    /// Raw (untransformed) value for candidate `(authors, papers)` at `t`.
    /// Author-only covariates ignore `papers` and vice versa.
    pub fn evaluate(
        self,
        ledger: &AttributeLedger,
        authors: &[AuthorId],
        papers: &[PaperId],
        t: f64,
    ) -> Result<f64, CovariateError> {
        use Covariate::*;
        match self {
            PriorPapers => subset_repetition(ledger, authors, &[], 1, 0, t),
            PriorJointPapers => subset_repetition(ledger, authors, &[], 2, 0, t),
            PaperCitationPopularity => subset_repetition(ledger, &[], papers, 0, 1, t),
            PaperPairCocitation => subset_repetition(ledger, &[], papers, 0, 2, t),
            PaperTripleCocitation => subset_repetition(ledger, &[], papers, 0, 3, t),
            AuthorCitationRepetition => subset_repetition(ledger, authors, papers, 1, 1, t),
            AuthorPairCitationRepetition => subset_repetition(ledger, authors, papers, 2, 1, t),
            AuthorTripleCitationRepetition => subset_repetition(ledger, authors, papers, 3, 1, t),
            DiffPriorPapers => abs_diff_covariate(ledger, authors, NodeAttribute::PriorPapers, t),
            DiffAuthorCitationPopularity => {
                abs_diff_covariate(ledger, authors, NodeAttribute::CitationPopularity, t)
            }
            AuthorCitationPopularity => mean_author_citation_popularity(ledger, authors, t),
            PaperOutdegreePopularity => mean_paper_outdegree(ledger, papers, t),
            CitePaperAndItsRefs => Ok(paper_citation_density(ledger, papers, t)),
            CollabWithCitingAuthor => Ok(author_citation_density(ledger, authors, t)),
            SelfCitation => self_citation(ledger, authors, papers, t),
            CommonCoauthor => Ok(author_pair_closure(ledger, authors, PairClosure::CommonCoauthor, t)),
            CitingCommonPaper => Ok(author_pair_closure(ledger, authors, PairClosure::CiteCommonPaper, t)),
            CitingCommonAuthor => Ok(author_pair_closure(ledger, authors, PairClosure::CiteCommonAuthor, t)),
            CitedByCommonAuthor => {
                Ok(author_pair_closure(ledger, authors, PairClosure::CitedByCommonAuthor, t))
            }
            AdoptCitationOfCoauthor => {
                author_paper_closure(ledger, authors, papers, AuthorPaperClosure::AdoptCiteCoauthor, t)
            }
            CiteCoauthorsPaper => {
                author_paper_closure(ledger, authors, papers, AuthorPaperClosure::CiteCoauthorsPaper, t)
            }
            AuthorAuthorCitationRepetition => {
                author_paper_closure(ledger, authors, papers, AuthorPaperClosure::AuthAuthCiteRepetition, t)
            }
            AuthorAuthorCitationReciprocation => author_paper_closure(
                ledger,
                authors,
                papers,
                AuthorPaperClosure::AuthAuthCiteReciprocation,
                t,
            ),
        }
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Covariate {
    type Err = CovariateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| CovariateError::UnknownCovariate(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    None,
    #[default]
    Sqrt,
}

impl Transform {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::None => x,
            Self::Sqrt => x.max(0.0).sqrt(),
        }
    }
}

/// A covariate plus the transform applied to its raw value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CovariateSpec {
    pub covariate: Covariate,
    pub transform: Transform,
}

impl CovariateSpec {
    pub fn new(covariate: Covariate, transform: Transform) -> Self {
        Self { covariate, transform }
    }

    pub fn sqrt(covariate: Covariate) -> Self {
        Self::new(covariate, Transform::Sqrt)
    }

    pub fn raw(covariate: Covariate) -> Self {
        Self::new(covariate, Transform::None)
    }
}

/// Column header form: `name` or `sqrt(name)`.
impl fmt::Display for CovariateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.transform {
            Transform::None => write!(f, "{}", self.covariate),
            Transform::Sqrt => write!(f, "sqrt({})", self.covariate),
        }
    }
}

impl FromStr for CovariateSpec {
    type Err = CovariateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            Some(inner) => Ok(Self::sqrt(inner.parse()?)),
            None => Ok(Self::raw(s.parse()?)),
        }
    }
}

impl Serialize for CovariateSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CovariateSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The `cite_ap` orders a ledger must materialize for `specs`.
pub fn required_orders(specs: &[CovariateSpec]) -> OrderSet {
    let mut orders = OrderSet::empty();
    for spec in specs {
        for &(k, l) in spec.covariate.required_orders() {
            orders.insert(k, l).expect("static orders are valid");
        }
    }
    orders
}

/// Reject covariates that are not identifiable (or not computable) under
/// `model`.
pub fn validate_specs(specs: &[CovariateSpec], model: ModelVariant) -> Result<(), CovariateError> {
    for spec in specs {
        if !spec.covariate.applies_to(model) {
            return Err(CovariateError::InapplicableCovariate {
                covariate: spec.covariate,
                model,
            });
        }
    }
    Ok(())
}

fn sorted_ids<T: Copy>(ids: &[T], raw: impl Fn(T) -> u32) -> Vec<u32> {
    let mut v: Vec<u32> = ids.iter().map(|&x| raw(x)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Mean of `cite_ap(I', J')` over all `k`-subsets `I'` of `authors` and
/// `l`-subsets `J'` of `papers`; zero when no such subsets exist.
pub fn subset_repetition(
    ledger: &AttributeLedger,
    authors: &[AuthorId],
    papers: &[PaperId],
    k: usize,
    l: usize,
    t: f64,
) -> Result<f64, CovariateError> {
    if k == 0 && l == 0 {
        return Err(CovariateError::BothOrdersZero);
    }
    if k > MAX_SUBSET_ORDER || l > MAX_SUBSET_ORDER {
        return Err(CovariateError::OrderTooLarge(k, l));
    }
    if !ledger.config().orders.contains(k, l) {
        return Err(AttributeError::OrderNotMaterialized { authors: k, papers: l }.into());
    }
    let a = sorted_ids(authors, |x| x.0);
    let p = sorted_ids(papers, |x| x.0);
    let denom = binomial(a.len(), k) * binomial(p.len(), l);
    if denom == 0.0 {
        return Ok(0.0);
    }
    let mut a_buf = [0u32; MAX_SUBSET_ORDER];
    let mut p_buf = [0u32; MAX_SUBSET_ORDER];
    let mut sum = 0.0;
    for_each_combination(a.len(), k, |ai| {
        for (dst, &i) in a_buf.iter_mut().zip(ai) {
            *dst = a[i];
        }
        for_each_combination(p.len(), l, |pi| {
            for (dst, &i) in p_buf.iter_mut().zip(pi) {
                *dst = p[i];
            }
            sum += ledger.cite_ap_sorted(&a_buf[..k], &p_buf[..l], t);
        });
    });
    Ok(sum / denom)
}

/// Node-level author attributes used by the heterogeneity covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeAttribute {
    /// `cite_ap({i}, {})`.
    PriorPapers,
    /// `citepop(i)`.
    CitationPopularity,
}

/// Mean absolute difference of a node attribute over unordered author pairs.
pub fn abs_diff_covariate(
    ledger: &AttributeLedger,
    authors: &[AuthorId],
    attribute: NodeAttribute,
    t: f64,
) -> Result<f64, CovariateError> {
    if attribute == NodeAttribute::PriorPapers && !ledger.config().orders.contains(1, 0) {
        return Err(AttributeError::OrderNotMaterialized { authors: 1, papers: 0 }.into());
    }
    let ids = sorted_ids(authors, |x| x.0);
    if ids.len() < 2 {
        return Ok(0.0);
    }
    let values: Vec<f64> = ids
        .iter()
        .map(|&i| match attribute {
            NodeAttribute::PriorPapers => ledger.prior_papers(AuthorId(i), t),
            NodeAttribute::CitationPopularity => ledger.citepop(AuthorId(i), t),
        })
        .collect();
    let mut sum = 0.0;
    for (x, a) in values.iter().enumerate() {
        for b in &values[x + 1..] {
            sum += (a - b).abs();
        }
    }
    Ok(sum / binomial(values.len(), 2))
}

pub fn mean_paper_outdegree(ledger: &AttributeLedger, papers: &[PaperId], t: f64) -> Result<f64, CovariateError> {
    let ids = sorted_ids(papers, |x| x.0);
    if ids.is_empty() {
        return Err(CovariateError::EmptySet("paper"));
    }
    let sum: f64 = ids.iter().map(|&j| ledger.outdeg(PaperId(j), t)).sum();
    Ok(sum / ids.len() as f64)
}

pub fn mean_author_citation_popularity(
    ledger: &AttributeLedger,
    authors: &[AuthorId],
    t: f64,
) -> Result<f64, CovariateError> {
    let ids = sorted_ids(authors, |x| x.0);
    if ids.is_empty() {
        return Err(CovariateError::EmptySet("author"));
    }
    let sum: f64 = ids.iter().map(|&i| ledger.citepop(AuthorId(i), t)).sum();
    Ok(sum / ids.len() as f64)
}

/// Density of past paper-to-paper citations inside `papers`, normalized by
/// the number of ordered pairs.
pub fn paper_citation_density(ledger: &AttributeLedger, papers: &[PaperId], t: f64) -> f64 {
    let ids = sorted_ids(papers, |x| x.0);
    let n = ids.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for &u in &ids {
        let citing = PaperId(u);
        if !ledger.is_published(citing) {
            continue;
        }
        for r in ledger.paper_refs(citing) {
            if r.0 != u && ids.binary_search(&r.0).is_ok() {
                sum += ledger.cite_pp(citing, *r, t);
            }
        }
    }
    sum / (n * (n - 1)) as f64
}

/// Density of past author-to-author citations inside `authors`, normalized
/// by the number of ordered pairs.
pub fn author_citation_density(ledger: &AttributeLedger, authors: &[AuthorId], t: f64) -> f64 {
    let ids = sorted_ids(authors, |x| x.0);
    let n = ids.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for &u in &ids {
        let Some(out) = ledger.authors_cited_by(AuthorId(u)) else {
            continue;
        };
        for &v in &ids {
            if v != u && out.contains(&v) {
                sum += ledger.cite_aa(AuthorId(u), AuthorId(v), t);
            }
        }
    }
    sum / (n * (n - 1)) as f64
}

/// Density of the authorship relation between `authors` and `papers`.
pub fn self_citation(
    ledger: &AttributeLedger,
    authors: &[AuthorId],
    papers: &[PaperId],
    t: f64,
) -> Result<f64, CovariateError> {
    let a = sorted_ids(authors, |x| x.0);
    let p = sorted_ids(papers, |x| x.0);
    if a.is_empty() {
        return Err(CovariateError::EmptySet("author"));
    }
    if p.is_empty() {
        return Err(CovariateError::EmptySet("paper"));
    }
    let mut sum = 0.0;
    for &j in &p {
        for w in ledger.paper_authors(PaperId(j)) {
            if a.binary_search(&w.0).is_ok() {
                sum += ledger.author_rel(*w, PaperId(j), t);
            }
        }
    }
    Ok(sum / (a.len() * p.len()) as f64)
}

/// Triadic closure between two authors through a shared third node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClosure {
    /// Shared past coauthors.
    CommonCoauthor,
    /// Papers both have cited.
    CiteCommonPaper,
    /// Authors whose papers both have cited.
    CiteCommonAuthor,
    /// Authors who have cited papers of both.
    CitedByCommonAuthor,
}

/// Sum over unordered pairs `{i, i'}` of `authors` and third nodes `z` of
/// `min(rel(i, z), rel(i', z))`, divided by the number of pairs.
///
/// Third nodes are enumerated from the sparse neighborhoods of `i` and
/// `i'`; nodes outside both contribute `min(.., 0) = 0` anyway.
pub fn author_pair_closure(ledger: &AttributeLedger, authors: &[AuthorId], mode: PairClosure, t: f64) -> f64 {
    let ids = sorted_ids(authors, |x| x.0);
    if ids.len() < 2 {
        return 0.0;
    }
    let neighbors = |i: u32| -> Option<&FxHashSet<u32>> {
        let a = AuthorId(i);
        match mode {
            PairClosure::CommonCoauthor => ledger.coauthors_of(a),
            PairClosure::CiteCommonPaper => ledger.papers_cited_by(a),
            PairClosure::CiteCommonAuthor => ledger.authors_cited_by(a),
            PairClosure::CitedByCommonAuthor => ledger.authors_citing(a),
        }
    };
    let rel = |i: u32, z: u32| -> f64 {
        match mode {
            PairClosure::CommonCoauthor => ledger.coauth(AuthorId(i), AuthorId(z), t),
            PairClosure::CiteCommonPaper => ledger.author_cites_paper(AuthorId(i), PaperId(z), t),
            PairClosure::CiteCommonAuthor => ledger.cite_aa(AuthorId(i), AuthorId(z), t),
            PairClosure::CitedByCommonAuthor => ledger.cite_aa(AuthorId(z), AuthorId(i), t),
        }
    };
    let third_is_author = mode != PairClosure::CiteCommonPaper;
    let mut sum = 0.0;
    for (x, &i) in ids.iter().enumerate() {
        let Some(ni) = neighbors(i) else { continue };
        for &j in &ids[x + 1..] {
            let Some(nj) = neighbors(j) else { continue };
            let (small, large) = if ni.len() <= nj.len() { (ni, nj) } else { (nj, ni) };
            // Sorted for a fixed summation order.
            let mut common: Vec<u32> = small
                .iter()
                .copied()
                .filter(|z| large.contains(z) && !(third_is_author && (*z == i || *z == j)))
                .collect();
            common.sort_unstable();
            for z in common {
                sum += rel(i, z).min(rel(j, z));
            }
        }
    }
    sum / binomial(ids.len(), 2)
}

/// Triadic closure between an author and a paper through a third author.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthorPaperClosure {
    /// Coauthor of `i` has cited `j`.
    AdoptCiteCoauthor,
    /// Coauthor of `i` wrote `j`.
    CiteCoauthorsPaper,
    /// `i` has cited the author of `j` before.
    AuthAuthCiteRepetition,
    /// The author of `j` has cited `i` before.
    AuthAuthCiteReciprocation,
}

/// Sum over `i in authors`, `j in papers` and third authors `i' != i` of
/// `min(left(i, i'), right(i', j))`, divided by `|authors| * |papers|`.
pub fn author_paper_closure(
    ledger: &AttributeLedger,
    authors: &[AuthorId],
    papers: &[PaperId],
    mode: AuthorPaperClosure,
    t: f64,
) -> Result<f64, CovariateError> {
    let a = sorted_ids(authors, |x| x.0);
    let p = sorted_ids(papers, |x| x.0);
    if a.is_empty() {
        return Err(CovariateError::EmptySet("author"));
    }
    if p.is_empty() {
        return Err(CovariateError::EmptySet("paper"));
    }
    let mut sum = 0.0;
    match mode {
        AuthorPaperClosure::AdoptCiteCoauthor => {
            for &i in &a {
                let Some(co) = ledger.coauthors_of(AuthorId(i)) else { continue };
                let mut co: Vec<u32> = co.iter().copied().collect();
                co.sort_unstable();
                for &k in &co {
                    let left = ledger.coauth(AuthorId(i), AuthorId(k), t);
                    for &j in &p {
                        let right = ledger.author_cites_paper(AuthorId(k), PaperId(j), t);
                        if right > 0.0 {
                            sum += left.min(right);
                        }
                    }
                }
            }
        }
        _ => {
            for &i in &a {
                for &j in &p {
                    let paper = PaperId(j);
                    for &k in ledger.paper_authors(paper) {
                        if k.0 == i {
                            continue;
                        }
                        let left = match mode {
                            AuthorPaperClosure::CiteCoauthorsPaper => ledger.coauth(AuthorId(i), k, t),
                            AuthorPaperClosure::AuthAuthCiteRepetition => ledger.cite_aa(AuthorId(i), k, t),
                            AuthorPaperClosure::AuthAuthCiteReciprocation => ledger.cite_aa(k, AuthorId(i), t),
                            AuthorPaperClosure::AdoptCiteCoauthor => unreachable!(),
                        };
                        if left > 0.0 {
                            sum += left.min(ledger.author_rel(k, paper, t));
                        }
                    }
                }
            }
        }
    }
    Ok(sum / (a.len() * p.len()) as f64)
}

/// Transformed covariate values for one candidate, in `specs` order.
pub fn compute_vector(
    ledger: &AttributeLedger,
    specs: &[CovariateSpec],
    authors: &[AuthorId],
    papers: &[PaperId],
    t: f64,
    model: ModelVariant,
) -> Result<Vec<f64>, CovariateError> {
    validate_specs(specs, model)?;
    specs
        .iter()
        .map(|s| {
            let raw = s.covariate.evaluate(ledger, authors, papers, t)?;
            Ok(s.transform.apply(raw))
        })
        .collect()
}
