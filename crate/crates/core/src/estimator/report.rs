use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use statrs::function::erf::erfc;

use super::{ContributionRow, FitResult, TieMethod};
use crate::covariates::CovariateSpec;
use crate::util::fmt_real;

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub name: String,
    pub effect_type: Option<char>,
    pub estimate: f64,
    pub se_model: Option<f64>,
    pub se_robust: Option<f64>,
    /// Wald statistic on the robust SE when available, else the model SE.
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub aliased: bool,
}

/// Serializable summary of a fit. Non-finite values become `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub coefficients: Vec<CoefficientRow>,
    pub log_lik: f64,
    pub log_lik_null: f64,
    pub aic: f64,
    pub n_events: usize,
    pub n_instances: usize,
    pub n_groups: usize,
    pub n_uninformative_groups: usize,
    pub n_tied_groups: usize,
    pub iterations: usize,
    pub converged: bool,
    pub tie_method: TieMethod,
    pub robust_cluster: &'static str,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn new(fit: &FitResult) -> Self {
        let coefficients = (0..fit.p())
            .map(|c| {
                let se_model = finite(fit.se_model[c]);
                let se_robust = fit.se_robust.as_ref().and_then(|s| finite(s[c]));
                let z = se_robust
                    .or(se_model)
                    .filter(|s| *s > 0.0)
                    .map(|s| fit.beta[c] / s);
                CoefficientRow {
                    name: fit.columns[c].clone(),
                    effect_type: fit.columns[c]
                        .parse::<CovariateSpec>()
                        .ok()
                        .map(|s| s.covariate.effect_type().code()),
                    estimate: fit.beta[c],
                    se_model,
                    se_robust,
                    z,
                    p_value: z.map(|z| erfc(z.abs() / std::f64::consts::SQRT_2)),
                    aliased: fit.aliased[c],
                }
            })
            .collect();
        Self {
            coefficients,
            log_lik: fit.log_lik,
            log_lik_null: fit.log_lik_null,
            aic: fit.aic,
            n_events: fit.n_events,
            n_instances: fit.n_instances,
            n_groups: fit.n_groups,
            n_uninformative_groups: fit.n_uninformative_groups,
            n_tied_groups: fit.n_tied_groups,
            iterations: fit.iterations,
            converged: fit.converged,
            tie_method: fit.tie_method,
            robust_cluster: "stratum group",
            warnings: fit.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text coefficient table with standard errors in parentheses.
    pub fn to_text(&self) -> String {
        let width = self.coefficients.iter().map(|c| c.name.len()).max().unwrap_or(0).max(9);
        let num = |x: Option<f64>| x.map_or("NA".to_owned(), |v| format!("{v:.4}"));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  type  {:>10}  {:>10}  {:>10}  {:>8}  {:>10}",
            "covariate", "estimate", "se", "robust se", "z", "p"
        );
        for c in &self.coefficients {
            let _ = writeln!(
                s,
                "{:<width$}  {:<4}  {:>10.4}  {:>10}  {:>10}  {:>8}  {:>10}",
                c.name,
                c.effect_type.map_or(String::new(), |t| t.to_string()),
                c.estimate,
                num(c.se_model),
                num(c.se_robust),
                c.z.map_or("NA".to_owned(), |v| format!("{v:.2}")),
                c.p_value.map_or("NA".to_owned(), |v| format!("{v:.3e}")),
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<width$}  {}", "AIC", fmt_real(self.aic));
        let _ = writeln!(s, "{:<width$}  {}", "Log Likelihood", fmt_real(self.log_lik));
        let _ = writeln!(s, "{:<width$}  {}", "Null LogLik", fmt_real(self.log_lik_null));
        let _ = writeln!(s, "{:<width$}  {}", "Num. events", self.n_events);
        let _ = writeln!(s, "{:<width$}  {}", "Num. obs.", self.n_instances);
        let _ = writeln!(s, "{:<width$}  {}", "Iterations", self.iterations);
        let _ = writeln!(s, "{:<width$}  {}", "Converged", self.converged);
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// `covariate,type,over_null,leave_one_out`.
pub fn write_contributions_csv<W: Write>(rows: &[ContributionRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "covariate,type,over_null,leave_one_out")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.covariate,
            r.effect_type.map_or(String::new(), |t| t.to_string()),
            fmt_real(r.over_null),
            fmt_real(r.leave_one_out)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::testing::synthetic;
    use super::super::{fit, FitConfig};
    use super::*;

    #[test]
    fn report_fields() {
        let mut t = synthetic(300, 5, &[0.8], 1);
        t.columns = vec!["sqrt(prior_papers)".into()];
        let r = FitReport::new(&fit(&t, &FitConfig::default()).unwrap());
        let c = &r.coefficients[0];
        assert_eq!(c.effect_type, Some('A'));
        assert!(c.p_value.unwrap() < 1e-6);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["robust_cluster"], "stratum group");
        assert!(r.to_text().contains("sqrt(prior_papers)"));
    }
}
