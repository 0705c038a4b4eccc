use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{fit_design, fit_groups, AliasPolicy, Design, EstimatorError, FitConfig};
use crate::sampling::InstanceTable;
use crate::util::{fmt_real, par_map_range};

/// Chooses which stratum groups make up a bootstrap replicate.
pub trait Resampler: Sync {
    /// `n_groups` draws from `0..n_groups` for replicate `replicate`.
    fn resample(&self, replicate: usize, n_groups: usize) -> Vec<usize>;
}

/// Draws groups uniformly with replacement, one random stream per replicate.
#[derive(Debug, Clone, Copy)]
pub struct UniformResampler {
    pub seed: u64,
}

impl Resampler for UniformResampler {
    fn resample(&self, replicate: usize, n_groups: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate as u64);
        (0..n_groups).map(|_| rng.gen_range(0..n_groups)).collect()
    }
}

/// Every replicate is the original data.
#[derive(Debug, Clone, Copy)]
pub struct IdentityResampler;

impl Resampler for IdentityResampler {
    fn resample(&self, _replicate: usize, n_groups: usize) -> Vec<usize> {
        (0..n_groups).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub columns: Vec<String>,
    pub full_beta: Vec<f64>,
    /// One entry per replicate; `None` when the refit failed.
    pub estimates: Vec<Option<Vec<f64>>>,
    pub failures: Vec<(usize, String)>,
    /// Share of successful replicates whose estimate has the sign of the
    /// full-data estimate.
    pub sign_agreement: Vec<f64>,
}

impl BootstrapResult {
    pub fn successful(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.estimates.iter().flatten()
    }

    /// `replicate,<columns>` with one row per successful replicate.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "replicate,{}", self.columns.join(","))?;
        for (r, est) in self.estimates.iter().enumerate() {
            if let Some(est) = est {
                let vals: Vec<String> = est.iter().map(|&v| fmt_real(v)).collect();
                writeln!(w, "{r},{}", vals.join(","))?;
            }
        }
        Ok(())
    }
}

/// `b` refits on stratum groups resampled with replacement.
pub fn bootstrap(
    table: &InstanceTable,
    config: &FitConfig,
    b: usize,
    seed: u64,
) -> Result<BootstrapResult, EstimatorError> {
    bootstrap_with(table, config, b, &UniformResampler { seed })
}

pub fn bootstrap_with<R: Resampler>(
    table: &InstanceTable,
    config: &FitConfig,
    b: usize,
    resampler: &R,
) -> Result<BootstrapResult, EstimatorError> {
    let design = Design::from_table(table)?;
    let config = FitConfig {
        robust: false,
        alias: AliasPolicy::Drop,
        ..*config
    };
    let full = fit_design(&design, &config)?;
    let n = design.num_groups();
    let outcomes = par_map_range(b, |r| {
        let groups = resampler.resample(r, n);
        match fit_groups(&design, &groups, &config) {
            Ok((beta, true)) => Ok(beta),
            Ok((_, false)) => Err("did not converge".to_owned()),
            Err(e) => Err(e.to_string()),
        }
    });
    let mut estimates = Vec::with_capacity(b);
    let mut failures = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(beta) => estimates.push(Some(beta)),
            Err(msg) => {
                failures.push((r, msg));
                estimates.push(None);
            }
        }
    }
    let ok: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
    let sign_agreement = (0..design.p())
        .map(|c| {
            if ok.is_empty() {
                return f64::NAN;
            }
            let s = full.beta[c].signum();
            ok.iter().filter(|e| e[c].signum() == s).count() as f64 / ok.len() as f64
        })
        .collect();
    Ok(BootstrapResult {
        columns: full.columns,
        full_beta: full.beta,
        estimates,
        failures,
        sign_agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testing::synthetic;
    use super::*;

    #[test]
    fn identity_resample_reproduces_full_fit() {
        let t = synthetic(300, 5, &[0.7, -0.4], 2);
        let r = bootstrap_with(&t, &FitConfig::default(), 1, &IdentityResampler).unwrap();
        assert_eq!(r.estimates[0].as_ref().unwrap(), &r.full_beta);
    }

    #[test]
    fn strong_effect_keeps_sign() {
        let t = synthetic(400, 5, &[1.5, 0.0], 6);
        let r = bootstrap(&t, &FitConfig::default(), 30, 1).unwrap();
        assert!(r.failures.is_empty());
        assert_eq!(r.sign_agreement[0], 1.0);
        let null: Vec<f64> = r.successful().map(|e| e[1]).collect();
        assert!(null.iter().any(|&v| v > 0.0) && null.iter().any(|&v| v < 0.0));
    }
}
