//! Stratified conditional-logit partial likelihood with Efron or Breslow
//! handling of multi-case strata.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::sampling::{HyperedgeInstance, InstanceTable, StratumKey};
use crate::util::par_map;

/// Groups per parallel work unit. Fixed so the reduction order never
/// depends on the thread count.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TieMethod {
    #[default]
    Efron,
    Breslow,
}

impl fmt::Display for TieMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Efron => "efron",
            Self::Breslow => "breslow",
        })
    }
}

impl FromStr for TieMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "efron" => Ok(Self::Efron),
            "breslow" => Ok(Self::Breslow),
            _ => Err(format!("unknown tie method `{s}` (efron | breslow)")),
        }
    }
}

/// Instances sharing one stratum key, by row index into the table.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumGroup {
    pub stratum: StratumKey,
    pub cases: Vec<usize>,
    pub pool: Vec<usize>,
    /// False when the group has no controls, so it carries no information.
    pub informative: bool,
}

/// Partitions instances by stratum, in order of first appearance.
pub fn group_strata(instances: &[HyperedgeInstance]) -> Result<Vec<StratumGroup>, EstimatorError> {
    let mut index: FxHashMap<StratumKey, usize> = FxHashMap::default();
    let mut groups: Vec<StratumGroup> = Vec::new();
    for (row, x) in instances.iter().enumerate() {
        let g = *index.entry(x.stratum).or_insert_with(|| {
            groups.push(StratumGroup {
                stratum: x.stratum,
                cases: Vec::new(),
                pool: Vec::new(),
                informative: false,
            });
            groups.len() - 1
        });
        let group = &mut groups[g];
        group.pool.push(row);
        if x.is_case {
            group.cases.push(row);
        }
    }
    for g in &mut groups {
        if g.cases.is_empty() {
            return Err(EstimatorError::NoCaseInStratum(g.stratum.to_string()));
        }
        g.informative = g.pool.len() > g.cases.len();
    }
    Ok(groups)
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    len: usize,
    n_cases: usize,
}

/// Covariate rows packed contiguously by stratum group, cases first.
#[derive(Debug, Clone)]
pub struct Design {
    p: usize,
    columns: Vec<String>,
    x: Vec<f64>,
    blocks: Vec<Block>,
    n_events: usize,
    n_instances: usize,
    n_uninformative: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Level {
    Value,
    Score,
    Hessian,
}

/// Partial log-likelihood with its score and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialLikelihood {
    pub value: f64,
    pub score: Vec<f64>,
    /// Row-major `p x p`.
    pub hessian: Vec<f64>,
}

impl PartialLikelihood {
    fn zeros(p: usize, level: Level) -> Self {
        Self {
            value: 0.0,
            score: if level >= Level::Score { vec![0.0; p] } else { Vec::new() },
            hessian: if level >= Level::Hessian { vec![0.0; p * p] } else { Vec::new() },
        }
    }

    fn add(&mut self, other: &Self) {
        self.value += other.value;
        for (a, b) in self.score.iter_mut().zip(&other.score) {
            *a += b;
        }
        for (a, b) in self.hessian.iter_mut().zip(&other.hessian) {
            *a += b;
        }
    }
}

impl Design {
    /// Packs every informative stratum group of `table`, keeping the listed
    /// covariate columns.
    pub fn new(table: &InstanceTable, columns: &[usize]) -> Result<Self, EstimatorError> {
        let p = columns.len();
        let groups = group_strata(&table.instances)?;
        let mut x = Vec::new();
        let mut blocks = Vec::new();
        let mut n_uninformative = 0;
        let mut n_rows = 0;
        for g in &groups {
            if !g.informative {
                n_uninformative += 1;
                continue;
            }
            let start = n_rows;
            n_rows += g.pool.len();
            let rows = g.cases.iter().chain(g.pool.iter().filter(|r| !table.instances[**r].is_case));
            for &r in rows {
                let cov = &table.instances[r].covariates;
                x.extend(columns.iter().map(|&c| cov[c]));
            }
            blocks.push(Block {
                start,
                len: g.pool.len(),
                n_cases: g.cases.len(),
            });
        }
        Ok(Self {
            p,
            columns: columns.iter().map(|&c| table.columns[c].clone()).collect(),
            x,
            blocks,
            n_events: table.num_events(),
            n_instances: table.instances.len(),
            n_uninformative,
        })
    }

    pub fn from_table(table: &InstanceTable) -> Result<Self, EstimatorError> {
        let all: Vec<usize> = (0..table.columns.len()).collect();
        Self::new(table, &all)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// Number of informative stratum groups.
    pub fn num_groups(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_events(&self) -> usize {
        self.n_events
    }

    pub fn num_instances(&self) -> usize {
        self.n_instances
    }

    pub fn num_uninformative(&self) -> usize {
        self.n_uninformative
    }

    /// Number of multi-case (tied) groups.
    pub fn num_tied_groups(&self) -> usize {
        self.blocks.iter().filter(|b| b.n_cases > 1).count()
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.x[r * self.p..(r + 1) * self.p]
    }

    /// Columns with no within-group variation in any group.
    pub(crate) fn constant_columns(&self) -> Vec<bool> {
        (0..self.p)
            .map(|c| {
                self.blocks.iter().all(|b| {
                    let first = self.x[b.start * self.p + c];
                    (b.start..b.start + b.len).all(|r| self.x[r * self.p + c] == first)
                })
            })
            .collect()
    }

    fn group_eval(&self, g: usize, beta: &[f64], ties: TieMethod, level: Level, out: &mut PartialLikelihood) {
        let p = self.p;
        let b = self.blocks[g];
        let rows = b.start..b.start + b.len;
        let eta: Vec<f64> = rows
            .clone()
            .map(|r| self.row(r).iter().zip(beta).map(|(x, b)| x * b).sum())
            .collect();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let d = b.n_cases;
        let (mut s_r, mut s_d) = (0.0, 0.0);
        let mut a_r = vec![0.0; if level >= Level::Score { p } else { 0 }];
        let mut a_d = a_r.clone();
        let mut h_r = vec![0.0; if level >= Level::Hessian { p * p } else { 0 }];
        let mut h_d = h_r.clone();
        for (k, r) in rows.enumerate() {
            let w = (eta[k] - shift).exp();
            let x = self.row(r);
            let case = k < d;
            s_r += w;
            if case {
                s_d += w;
                out.value += eta[k];
            }
            if level >= Level::Score {
                for i in 0..p {
                    let wx = w * x[i];
                    a_r[i] += wx;
                    if case {
                        a_d[i] += wx;
                        out.score[i] += x[i];
                    }
                    if level >= Level::Hessian {
                        for j in 0..=i {
                            let v = wx * x[j];
                            h_r[i * p + j] += v;
                            if case {
                                h_d[i * p + j] += v;
                            }
                        }
                    }
                }
            }
        }
        let mut a = vec![0.0; a_r.len()];
        for r in 0..d {
            let c = match ties {
                TieMethod::Efron => r as f64 / d as f64,
                TieMethod::Breslow => 0.0,
            };
            let den = s_r - c * s_d;
            out.value -= den.ln() + shift;
            if level >= Level::Score {
                for i in 0..p {
                    a[i] = (a_r[i] - c * a_d[i]) / den;
                    out.score[i] -= a[i];
                }
            }
            if level >= Level::Hessian {
                for i in 0..p {
                    for j in 0..=i {
                        let v = (h_r[i * p + j] - c * h_d[i * p + j]) / den - a[i] * a[j];
                        out.hessian[i * p + j] -= v;
                    }
                }
            }
        }
    }

    /// Sum over `groups` (indices into the informative groups, repeats
    /// allowed) of the per-group contributions at `beta`.
    pub(crate) fn evaluate_groups(
        &self,
        groups: &[usize],
        beta: &[f64],
        ties: TieMethod,
        level: Level,
    ) -> Result<PartialLikelihood, EstimatorError> {
        let chunks: Vec<&[usize]> = groups.chunks(CHUNK).collect();
        let parts = par_map(&chunks, |chunk| {
            let mut acc = PartialLikelihood::zeros(self.p, level);
            for &g in *chunk {
                self.group_eval(g, beta, ties, level, &mut acc);
            }
            acc
        });
        let mut total = PartialLikelihood::zeros(self.p, level);
        for part in &parts {
            total.add(part);
        }
        if level >= Level::Hessian {
            let p = self.p;
            for i in 0..p {
                for j in 0..i {
                    total.hessian[j * p + i] = total.hessian[i * p + j];
                }
            }
        }
        if !total.value.is_finite() || total.score.iter().chain(&total.hessian).any(|v| !v.is_finite()) {
            return Err(EstimatorError::NonFiniteLikelihood);
        }
        Ok(total)
    }

    pub(crate) fn all_groups(&self) -> Vec<usize> {
        (0..self.blocks.len()).collect()
    }

    /// Log partial likelihood over all informative groups, with its score
    /// and Hessian.
    pub fn log_partial_likelihood(&self, beta: &[f64], ties: TieMethod) -> Result<PartialLikelihood, EstimatorError> {
        if beta.len() != self.p || beta.iter().any(|b| !b.is_finite()) {
            return Err(EstimatorError::InvalidConfig(format!(
                "beta must be {} finite values",
                self.p
            )));
        }
        self.evaluate_groups(&self.all_groups(), beta, ties, Level::Hessian)
    }

    /// Score contribution of each informative group at `beta`.
    pub(crate) fn group_scores(&self, beta: &[f64], ties: TieMethod) -> Vec<Vec<f64>> {
        par_map(&self.all_groups(), |&g| {
            let mut acc = PartialLikelihood::zeros(self.p, Level::Score);
            self.group_eval(g, beta, ties, Level::Score, &mut acc);
            acc.score
        })
    }
}
