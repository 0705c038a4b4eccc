//! Maximum partial-likelihood estimation on a case-control instance table.

mod bootstrap;
mod contrib;
mod likelihood;
mod linalg;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bootstrap::{bootstrap, bootstrap_with, BootstrapResult, IdentityResampler, Resampler, UniformResampler};
pub use contrib::{contribution_analysis, ContributionRow};
pub use likelihood::{group_strata, Design, PartialLikelihood, StratumGroup, TieMethod};
pub use report::{write_contributions_csv, CoefficientRow, FitReport};

use likelihood::Level;
use linalg::Cholesky;

use crate::sampling::InstanceTable;

/// Coefficients beyond this magnitude are reported as likely separation.
pub const SEPARATION_THRESHOLD: f64 = 15.0;
const PIVOT_TOLERANCE: f64 = 1e-10;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("stratum {0} has no case")]
    NoCaseInStratum(String),
    #[error("no stratum has both a case and a control")]
    NoInformativeStrata,
    #[error("singular Hessian: collinear covariates {}", .0.join(", "))]
    SingularHessian(Vec<String>),
    #[error("log partial likelihood is not finite")]
    NonFiniteLikelihood,
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
}

/// What to do with columns that are collinear with earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AliasPolicy {
    #[default]
    Error,
    /// Fix the coefficient at zero and report it as aliased.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub tie_method: TieMethod,
    pub robust: bool,
    /// Penalty used for a refit when separation is detected; 0 disables it.
    pub ridge: f64,
    pub alias: AliasPolicy,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            rel_tolerance: 1e-9,
            tie_method: TieMethod::Efron,
            robust: true,
            ridge: 0.0,
            alias: AliasPolicy::Error,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.rel_tolerance.is_nan() || self.rel_tolerance <= 0.0 {
            return Err(EstimatorError::InvalidConfig("rel_tolerance must be positive".into()));
        }
        if self.ridge.is_nan() || self.ridge < 0.0 {
            return Err(EstimatorError::InvalidConfig("ridge must be non-negative".into()));
        }
        if self.max_iterations == 0 {
            return Err(EstimatorError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub columns: Vec<String>,
    pub beta: Vec<f64>,
    /// NaN for aliased coefficients.
    pub se_model: Vec<f64>,
    pub se_robust: Option<Vec<f64>>,
    pub aliased: Vec<bool>,
    pub log_lik: f64,
    pub log_lik_null: f64,
    pub aic: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub n_events: usize,
    pub n_instances: usize,
    pub n_groups: usize,
    pub n_uninformative_groups: usize,
    pub n_tied_groups: usize,
    pub tie_method: TieMethod,
}

impl FitResult {
    pub fn p(&self) -> usize {
        self.beta.len()
    }
}

struct Newton {
    beta: Vec<f64>,
    active: Vec<usize>,
    log_lik: f64,
    iterations: usize,
    converged: bool,
}

fn sub_matrix(m: &[f64], p: usize, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * idx.len());
    for &i in idx {
        for &j in idx {
            out.push(m[i * p + j]);
        }
    }
    out
}

fn penalized(value: f64, beta: &[f64], ridge: f64) -> f64 {
    value - 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>()
}

fn newton(
    design: &Design,
    groups: &[usize],
    config: &FitConfig,
    mut active: Vec<usize>,
    ridge: f64,
    warnings: &mut Vec<String>,
) -> Result<Newton, EstimatorError> {
    let p = design.p();
    let ties = config.tie_method;
    let mut beta = vec![0.0; p];
    let mut cur = design.evaluate_groups(groups, &beta, ties, Level::Hessian)?;
    let mut obj = penalized(cur.value, &beta, ridge);
    let mut iterations = 0;
    let mut converged = active.is_empty();
    while !converged && iterations < config.max_iterations {
        let info: Vec<f64> = sub_matrix(&cur.hessian, p, &active)
            .iter()
            .enumerate()
            .map(|(k, h)| -h + if k % (active.len() + 1) == 0 { ridge } else { 0.0 })
            .collect();
        let chol = Cholesky::new(&info, active.len(), PIVOT_TOLERANCE);
        if !chol.is_full_rank() {
            let names: Vec<String> = chol
                .aliased
                .iter()
                .map(|&k| design.columns()[active[k]].clone())
                .collect();
            if config.alias == AliasPolicy::Error {
                return Err(EstimatorError::SingularHessian(names));
            }
            for n in &names {
                warnings.push(format!("{n}: aliased with other covariates, coefficient fixed at 0"));
            }
            let drop: Vec<usize> = chol.aliased.iter().map(|&k| active[k]).collect();
            for &c in &drop {
                beta[c] = 0.0;
            }
            active.retain(|c| !drop.contains(c));
            cur = design.evaluate_groups(groups, &beta, ties, Level::Hessian)?;
            obj = penalized(cur.value, &beta, ridge);
            converged = active.is_empty();
            continue;
        }
        let grad: Vec<f64> = active.iter().map(|&c| cur.score[c] - ridge * beta[c]).collect();
        let delta = chol.solve(&grad);
        iterations += 1;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = beta.clone();
            for (k, &c) in active.iter().enumerate() {
                trial[c] += step * delta[k];
            }
            let value = design.evaluate_groups(groups, &trial, ties, Level::Value);
            if let Ok(v) = value {
                let new_obj = penalized(v.value, &trial, ridge);
                if new_obj >= obj {
                    accepted = Some((trial, new_obj));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, new_obj)) = accepted else {
            // No ascent direction left: at the optimum up to rounding.
            converged = true;
            break;
        };
        converged = (new_obj - obj).abs() / (obj.abs() + 1.0) < config.rel_tolerance;
        beta = trial;
        obj = new_obj;
        cur = design.evaluate_groups(groups, &beta, ties, Level::Hessian)?;
    }
    Ok(Newton {
        beta,
        active,
        log_lik: cur.value,
        iterations,
        converged,
    })
}

/// Raw estimates on a design restricted to `groups`; used by bootstrap.
pub(crate) fn fit_groups(
    design: &Design,
    groups: &[usize],
    config: &FitConfig,
) -> Result<(Vec<f64>, bool), EstimatorError> {
    let constant = design.constant_columns();
    let active: Vec<usize> = (0..design.p()).filter(|&c| !constant[c]).collect();
    let mut warnings = Vec::new();
    let n = newton(design, groups, config, active, 0.0, &mut warnings)?;
    Ok((n.beta, n.converged))
}

/// Fits every column of `design`.
pub fn fit_design(design: &Design, config: &FitConfig) -> Result<FitResult, EstimatorError> {
    config.validate()?;
    if design.num_groups() == 0 {
        return Err(EstimatorError::NoInformativeStrata);
    }
    let p = design.p();
    let ties = config.tie_method;
    let groups = design.all_groups();
    let mut warnings = Vec::new();
    if design.num_uninformative() > 0 {
        warnings.push(format!(
            "{} stratum group(s) without controls ignored",
            design.num_uninformative()
        ));
    }
    let constant = design.constant_columns();
    for (c, name) in design.columns().iter().enumerate() {
        if constant[c] {
            warnings.push(format!("{name}: no within-stratum variation, coefficient fixed at 0"));
        }
    }
    let active: Vec<usize> = (0..p).filter(|&c| !constant[c]).collect();
    let log_lik_null = design.evaluate_groups(&groups, &vec![0.0; p], ties, Level::Value)?.value;

    let mut n = newton(design, &groups, config, active.clone(), 0.0, &mut warnings)?;
    let separated: Vec<&str> = n
        .active
        .iter()
        .filter(|&&c| n.beta[c].abs() > SEPARATION_THRESHOLD)
        .map(|&c| design.columns()[c].as_str())
        .collect();
    let mut ridge = 0.0;
    if !separated.is_empty() {
        warnings.push(format!(
            "possible separation: |beta| > {SEPARATION_THRESHOLD} for {}",
            separated.join(", ")
        ));
        if config.ridge > 0.0 {
            ridge = config.ridge;
            warnings.push(format!("refit with ridge penalty {ridge}"));
            let mut refit_warnings = Vec::new();
            n = newton(design, &groups, config, active, ridge, &mut refit_warnings)?;
        }
    }
    if !n.converged {
        warnings.push(format!("did not converge in {} iterations", config.max_iterations));
    }

    let at = design.evaluate_groups(&groups, &n.beta, ties, Level::Hessian)?;
    let mut aliased = vec![true; p];
    for &c in &n.active {
        aliased[c] = false;
    }
    let k = n.active.len();
    let info: Vec<f64> = sub_matrix(&at.hessian, p, &n.active)
        .iter()
        .enumerate()
        .map(|(i, h)| -h + if i % (k + 1) == 0 { ridge } else { 0.0 })
        .collect();
    let chol = Cholesky::new(&info, k, PIVOT_TOLERANCE);
    let cov = chol.inverse();
    let mut se_model = vec![f64::NAN; p];
    for (i, &c) in n.active.iter().enumerate() {
        se_model[c] = cov[i * k + i].sqrt();
    }
    let se_robust = config.robust.then(|| {
        let mut meat = vec![0.0; k * k];
        for u in design.group_scores(&n.beta, ties) {
            for (i, &ci) in n.active.iter().enumerate() {
                for (j, &cj) in n.active.iter().enumerate() {
                    meat[i * k + j] += u[ci] * u[cj];
                }
            }
        }
        let v = linalg::sandwich(&cov, &meat, k);
        let mut se = vec![f64::NAN; p];
        for (i, &c) in n.active.iter().enumerate() {
            se[c] = v[i * k + i].sqrt();
        }
        se
    });

    Ok(FitResult {
        columns: design.columns().to_vec(),
        beta: n.beta,
        se_model,
        se_robust,
        aliased,
        log_lik: n.log_lik,
        log_lik_null,
        aic: 2.0 * p as f64 - 2.0 * n.log_lik,
        iterations: n.iterations,
        converged: n.converged,
        warnings,
        n_events: design.num_events(),
        n_instances: design.num_instances(),
        n_groups: design.num_groups(),
        n_uninformative_groups: design.num_uninformative(),
        n_tied_groups: design.num_tied_groups(),
        tie_method: ties,
    })
}

/// Fits all covariate columns of `table`.
pub fn fit(table: &InstanceTable, config: &FitConfig) -> Result<FitResult, EstimatorError> {
    fit_design(&Design::from_table(table)?, config)
}

#[cfg(test)]
pub(crate) mod testing {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::sampling::{HyperedgeInstance, InstanceTable, StratumKey};

    /// Conditional-logit data: each event picks one of `q + 1` candidates
    /// with probability proportional to `exp(beta' x)`, `x` standard normal
    /// or Bernoulli.
    pub fn synthetic(n_events: usize, q: usize, beta: &[f64], seed: u64) -> InstanceTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = beta.len();
        let mut instances = Vec::new();
        for e in 0..n_events {
            let xs: Vec<Vec<f64>> = (0..=q)
                .map(|_| {
                    (0..p)
                        .map(|c| if c % 2 == 0 { rng.gen::<f64>() * 2.0 - 1.0 } else { f64::from(rng.gen_bool(0.3) as u8) })
                        .collect()
                })
                .collect();
            let w: Vec<f64> = xs
                .iter()
                .map(|x| x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp())
                .collect();
            let total: f64 = w.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = q;
            for (k, wk) in w.iter().enumerate() {
                if u < *wk {
                    pick = k;
                    break;
                }
                u -= wk;
            }
            let stratum = StratumKey {
                time: e as f64,
                n_authors: 1,
                n_refs: Some(1),
            };
            let mut order: Vec<usize> = vec![pick];
            order.extend((0..=q).filter(|&k| k != pick));
            for k in order {
                instances.push(HyperedgeInstance {
                    event_index: e,
                    stratum,
                    is_case: k == pick,
                    n_authors: 1,
                    n_refs: 1,
                    covariates: xs[k].clone(),
                });
            }
        }
        InstanceTable {
            columns: (0..p).map(|c| format!("x{c}")).collect(),
            instances,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testing::synthetic;
    use super::*;

    #[test]
    fn recovers_known_beta() {
        let beta = [1.0, -0.7];
        let t = synthetic(3000, 5, &beta, 11);
        let r = fit(&t, &FitConfig::default()).unwrap();
        assert!(r.converged);
        let se = r.se_robust.as_ref().unwrap();
        for c in 0..2 {
            assert!((r.beta[c] - beta[c]).abs() < 3.0 * se[c], "{:?}", r);
        }
        assert_eq!(r.aic, 2.0 * 2.0 - 2.0 * r.log_lik);
        assert!((r.log_lik_null + 3000.0 * 6f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn zero_covariates_give_null_fit() {
        let mut t = synthetic(50, 5, &[0.0], 3);
        for x in &mut t.instances {
            x.covariates[0] = 0.0;
        }
        let r = fit(&t, &FitConfig::default()).unwrap();
        assert_eq!(r.beta, vec![0.0]);
        assert_eq!(r.log_lik, r.log_lik_null);
        assert!(r.aliased[0]);
    }

    #[test]
    fn separation_warned() {
        let mut t = synthetic(40, 3, &[0.0], 5);
        for x in &mut t.instances {
            x.covariates[0] = if x.is_case { 1.0 } else { 0.0 };
        }
        let r = fit(&t, &FitConfig::default()).unwrap();
        assert!(r.beta[0] > SEPARATION_THRESHOLD);
        assert!(r.warnings.iter().any(|w| w.contains("separation")));
        let ridge = FitConfig { ridge: 1.0, ..FitConfig::default() };
        let r = fit(&t, &ridge).unwrap();
        assert!(r.beta[0] < SEPARATION_THRESHOLD);
    }

    #[test]
    fn collinear_columns() {
        let mut t = synthetic(200, 5, &[0.8], 9);
        t.columns.push("copy".into());
        for x in &mut t.instances {
            let v = x.covariates[0];
            x.covariates.push(2.0 * v);
        }
        assert!(matches!(
            fit(&t, &FitConfig::default()),
            Err(EstimatorError::SingularHessian(_))
        ));
        let drop = FitConfig { alias: AliasPolicy::Drop, ..FitConfig::default() };
        let r = fit(&t, &drop).unwrap();
        assert_eq!(r.aliased, vec![false, true]);
        assert!(r.se_model[1].is_nan());
    }

    #[test]
    fn efron_equals_breslow_without_ties() {
        let t = synthetic(100, 4, &[0.5, 0.5], 1);
        let d = Design::from_table(&t).unwrap();
        let b = [0.3, -0.2];
        let e = d.log_partial_likelihood(&b, TieMethod::Efron).unwrap();
        let br = d.log_partial_likelihood(&b, TieMethod::Breslow).unwrap();
        assert_eq!(e, br);
    }

    #[test]
    fn no_informative_strata() {
        let mut t = synthetic(3, 1, &[0.0], 1);
        t.instances.retain(|x| x.is_case);
        assert!(matches!(fit(&t, &FitConfig::default()), Err(EstimatorError::NoInformativeStrata)));
    }
}
