//! Direct covariate formulas over the raw event list, summing over every
//! node instead of the engine's sparse neighbourhoods.

use std::collections::BTreeSet;

use rhem::covariates::Covariate;
use rhem::events::{AuthorId, EventStream, PaperId, PublicationEvent};

pub struct Oracle<'a> {
    events: &'a [PublicationEvent],
    half_life: Option<f64>,
    n_authors: u32,
    n_papers: u32,
}

fn subsets<T: Copy>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![vec![]];
    }
    if items.len() < k {
        return vec![];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

impl<'a> Oracle<'a> {
    pub fn new(stream: &'a EventStream, half_life: Option<f64>) -> Self {
        Self {
            events: stream.events(),
            half_life,
            n_authors: stream.num_authors() as u32,
            n_papers: stream.num_papers() as u32,
        }
    }

    fn w(&self, e: &PublicationEvent, t: f64) -> f64 {
        match self.half_life {
            None => 1.0,
            Some(h) => (-(t - e.time) * std::f64::consts::LN_2 / h).exp(),
        }
    }

    /// Events strictly before `t`, with their stream positions.
    fn past(&self, t: f64) -> impl Iterator<Item = (usize, &PublicationEvent)> {
        self.events.iter().enumerate().filter(move |(_, e)| e.time < t)
    }

    /// Authors of `p` if it was published before stream position `pos`.
    fn authors_of_before(&self, p: PaperId, pos: usize) -> Vec<AuthorId> {
        self.events[..pos]
            .iter()
            .find(|e| e.paper == p)
            .map(|e| e.authors.clone())
            .unwrap_or_default()
    }

    pub fn cite_ap(&self, i: &[AuthorId], j: &[PaperId], t: f64) -> f64 {
        self.past(t)
            .filter(|(_, e)| i.iter().all(|a| e.authors.contains(a)) && j.iter().all(|p| e.references.contains(p)))
            .map(|(_, e)| self.w(e, t))
            .sum()
    }

    pub fn cite_pp(&self, a: PaperId, b: PaperId, t: f64) -> f64 {
        self.past(t)
            .filter(|(_, e)| e.paper == a && e.references.contains(&b))
            .map(|(_, e)| self.w(e, t))
            .sum()
    }

    pub fn author(&self, i: AuthorId, j: PaperId, t: f64) -> f64 {
        self.past(t)
            .filter(|(_, e)| e.paper == j && e.authors.contains(&i))
            .map(|(_, e)| self.w(e, t))
            .sum()
    }

    fn cites_author(&self, pos: usize, e: &PublicationEvent, cited: AuthorId) -> bool {
        e.references.iter().any(|&r| self.authors_of_before(r, pos).contains(&cited))
    }

    pub fn cite_aa(&self, a: AuthorId, b: AuthorId, t: f64) -> f64 {
        self.past(t)
            .filter(|(pos, e)| e.authors.contains(&a) && self.cites_author(*pos, e, b))
            .map(|(_, e)| self.w(e, t))
            .sum()
    }

    pub fn citepop(&self, a: AuthorId, t: f64) -> f64 {
        self.past(t)
            .filter(|(pos, e)| self.cites_author(*pos, e, a))
            .map(|(_, e)| self.w(e, t))
            .sum()
    }

    pub fn outdeg(&self, j: PaperId, t: f64) -> f64 {
        self.past(t)
            .filter(|(_, e)| e.paper == j)
            .map(|(_, e)| self.w(e, t) * e.references.len() as f64)
            .sum()
    }

    fn subrep(&self, i: &[AuthorId], j: &[PaperId], k: usize, l: usize, t: f64) -> f64 {
        let si = subsets(i, k);
        let sj = subsets(j, l);
        if si.is_empty() || sj.is_empty() {
            return 0.0;
        }
        let mut sum = 0.0;
        for a in &si {
            for b in &sj {
                sum += self.cite_ap(a, b, t);
            }
        }
        sum / (si.len() * sj.len()) as f64
    }

    fn all_authors(&self) -> Vec<AuthorId> {
        (0..self.n_authors).map(AuthorId).collect()
    }

    fn all_papers(&self) -> Vec<PaperId> {
        (0..self.n_papers).map(PaperId).collect()
    }

    fn pairs<T: Copy>(xs: &[T]) -> Vec<(T, T)> {
        let mut out = Vec::new();
        for x in 0..xs.len() {
            for y in x + 1..xs.len() {
                out.push((xs[x], xs[y]));
            }
        }
        out
    }

    fn pair_mean(&self, i: &[AuthorId], f: impl Fn(AuthorId, AuthorId) -> f64) -> f64 {
        let pairs = Self::pairs(i);
        if pairs.is_empty() {
            return 0.0;
        }
        pairs.iter().map(|&(a, b)| f(a, b)).sum::<f64>() / pairs.len() as f64
    }

    fn ordered_density<T: Copy + PartialEq>(xs: &[T], f: impl Fn(T, T) -> f64) -> f64 {
        let n = xs.len();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for &a in xs {
            for &b in xs {
                if a != b {
                    sum += f(a, b);
                }
            }
        }
        sum / (n * (n - 1)) as f64
    }

    fn author_paper(&self, i: &[AuthorId], j: &[PaperId], f: impl Fn(AuthorId, AuthorId, PaperId) -> f64) -> f64 {
        let mut sum = 0.0;
        for &a in i {
            for &p in j {
                for k in self.all_authors() {
                    if k != a {
                        sum += f(a, k, p);
                    }
                }
            }
        }
        sum / (i.len() * j.len()) as f64
    }

    /// Raw covariate value for candidate `(i, j)` at time `t`.
    pub fn covariate(&self, c: Covariate, i: &[AuthorId], j: &[PaperId], t: f64) -> f64 {
        let i: Vec<AuthorId> = i.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let j: Vec<PaperId> = j.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let coauth = |a: AuthorId, b: AuthorId| self.cite_ap(&[a, b], &[], t);
        use Covariate::*;
        match c {
            PriorPapers => self.subrep(&i, &j, 1, 0, t),
            PriorJointPapers => self.subrep(&i, &j, 2, 0, t),
            PaperCitationPopularity => self.subrep(&i, &j, 0, 1, t),
            PaperPairCocitation => self.subrep(&i, &j, 0, 2, t),
            PaperTripleCocitation => self.subrep(&i, &j, 0, 3, t),
            AuthorCitationRepetition => self.subrep(&i, &j, 1, 1, t),
            AuthorPairCitationRepetition => self.subrep(&i, &j, 2, 1, t),
            AuthorTripleCitationRepetition => self.subrep(&i, &j, 3, 1, t),
            DiffPriorPapers => self.pair_mean(&i, |a, b| {
                (self.cite_ap(&[a], &[], t) - self.cite_ap(&[b], &[], t)).abs()
            }),
            DiffAuthorCitationPopularity => {
                self.pair_mean(&i, |a, b| (self.citepop(a, t) - self.citepop(b, t)).abs())
            }
            AuthorCitationPopularity => i.iter().map(|&a| self.citepop(a, t)).sum::<f64>() / i.len() as f64,
            PaperOutdegreePopularity => j.iter().map(|&p| self.outdeg(p, t)).sum::<f64>() / j.len() as f64,
            CollabWithCitingAuthor => Self::ordered_density(&i, |a, b| self.cite_aa(a, b, t)),
            CitePaperAndItsRefs => Self::ordered_density(&j, |a, b| self.cite_pp(a, b, t)),
            CommonCoauthor => self.pair_mean(&i, |a, b| {
                self.all_authors()
                    .into_iter()
                    .filter(|&z| z != a && z != b)
                    .map(|z| coauth(a, z).min(coauth(b, z)))
                    .sum()
            }),
            CitingCommonPaper => self.pair_mean(&i, |a, b| {
                self.all_papers()
                    .into_iter()
                    .map(|z| self.cite_ap(&[a], &[z], t).min(self.cite_ap(&[b], &[z], t)))
                    .sum()
            }),
            CitingCommonAuthor => self.pair_mean(&i, |a, b| {
                self.all_authors()
                    .into_iter()
                    .filter(|&z| z != a && z != b)
                    .map(|z| self.cite_aa(a, z, t).min(self.cite_aa(b, z, t)))
                    .sum()
            }),
            CitedByCommonAuthor => self.pair_mean(&i, |a, b| {
                self.all_authors()
                    .into_iter()
                    .filter(|&z| z != a && z != b)
                    .map(|z| self.cite_aa(z, a, t).min(self.cite_aa(z, b, t)))
                    .sum()
            }),
            SelfCitation => {
                let mut s = 0.0;
                for &a in &i {
                    for &p in &j {
                        s += self.author(a, p, t);
                    }
                }
                s / (i.len() * j.len()) as f64
            }
            AdoptCitationOfCoauthor => {
                self.author_paper(&i, &j, |a, k, p| coauth(a, k).min(self.cite_ap(&[k], &[p], t)))
            }
            CiteCoauthorsPaper => self.author_paper(&i, &j, |a, k, p| coauth(a, k).min(self.author(k, p, t))),
            AuthorAuthorCitationRepetition => {
                self.author_paper(&i, &j, |a, k, p| self.cite_aa(a, k, t).min(self.author(k, p, t)))
            }
            AuthorAuthorCitationReciprocation => {
                self.author_paper(&i, &j, |a, k, p| self.cite_aa(k, a, t).min(self.author(k, p, t)))
            }
        }
    }
}
