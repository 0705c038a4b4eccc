use serde::Serialize;

use super::{fit_design, AliasPolicy, Design, EstimatorError, FitConfig};
use crate::covariates::CovariateSpec;
use crate::sampling::InstanceTable;
use crate::util::par_map_range;

/// Log-likelihood improvements attributable to one covariate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContributionRow {
    pub covariate: String,
    /// `A`, `C` or `M` when the column names a known covariate.
    pub effect_type: Option<char>,
    /// Single-covariate model over the null model.
    pub over_null: f64,
    /// Full model over the full model without this covariate.
    pub leave_one_out: f64,
}

/// One row per covariate column, sorted by improvement over the null model
/// (largest first). Collinear columns are dropped rather than rejected in
/// the submodels, so a duplicated column has zero leave-one-out
/// contribution.
pub fn contribution_analysis(
    table: &InstanceTable,
    config: &FitConfig,
) -> Result<Vec<ContributionRow>, EstimatorError> {
    let config = FitConfig {
        alias: AliasPolicy::Drop,
        robust: false,
        ..*config
    };
    let p = table.columns.len();
    let full = fit_design(&Design::from_table(table)?, &config)?;
    let null = full.log_lik_null;
    let rows = par_map_range(p, |c| -> Result<ContributionRow, EstimatorError> {
        let single = fit_design(&Design::new(table, &[c])?, &config)?.log_lik;
        let reduced = if p == 1 {
            null
        } else {
            let others: Vec<usize> = (0..p).filter(|&k| k != c).collect();
            fit_design(&Design::new(table, &others)?, &config)?.log_lik
        };
        let name = &table.columns[c];
        Ok(ContributionRow {
            covariate: name.clone(),
            effect_type: name
                .parse::<CovariateSpec>()
                .ok()
                .map(|s| s.covariate.effect_type().code()),
            over_null: single - null,
            leave_one_out: full.log_lik - reduced,
        })
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| b.over_null.total_cmp(&a.over_null));
    Ok(rows)
}
