use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::dist::{f_sf, student_t_quantile, student_t_two_sided};
use super::{DesignMatrix, FactorError};

/// Largest accepted condition number of the column-equilibrated X'X.
pub const MAX_CONDITION: f64 = 1e12;

/// Eigenvector weight above which a column is named as part of a near-dependency.
const DEPENDENCY_LOADING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub coef: f64,
    pub std_err: f64,
    pub t: f64,
    pub p_value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub dep_variable: String,
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub prob_f: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub rss: f64,
    pub n_obs: usize,
    pub df_resid: usize,
    pub df_model: usize,
}

impl RegressionReport {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn with_dep_variable(mut self, name: impl Into<String>) -> Self {
        self.dep_variable = name.into();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table in the usual OLS summary layout.
    pub fn summary(&self) -> String {
        let rule = "=".repeat(78);
        let mut s = String::new();
        let _ = writeln!(s, "{:^78}", "OLS Regression Results");
        let _ = writeln!(s, "{rule}");
        let rows = [
            ("Dep. Variable:", self.dep_variable.clone(), "R-squared:", fmt_g(self.r_squared)),
            ("Model:", "OLS".into(), "Adj. R-squared:", fmt_g(self.adj_r_squared)),
            ("Method:", "Least Squares".into(), "F-statistic:", fmt_g(self.f_statistic)),
            ("No. Observations:", self.n_obs.to_string(), "Prob (F-statistic):", fmt_g(self.prob_f)),
            ("Df Residuals:", self.df_resid.to_string(), "Log-Likelihood:", fmt_g(self.log_likelihood)),
            ("Df Model:", self.df_model.to_string(), "AIC:", fmt_g(self.aic)),
            ("", String::new(), "BIC:", fmt_g(self.bic)),
        ];
        for (l, lv, r, rv) in rows {
            let _ = writeln!(s, "{l:<20}{lv:>18}   {r:<22}{rv:>15}");
        }
        let _ = writeln!(s, "{rule}");
        let width = self
            .coefficients
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(0)
            .max(17);
        let _ = writeln!(
            s,
            "{:<width$} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            "", "coef", "std err", "t", "P>|t|", "[0.025", "0.975]"
        );
        let _ = writeln!(s, "{}", "-".repeat(width + 66));
        for c in &self.coefficients {
            let _ = writeln!(
                s,
                "{:<width$} {:>10.4} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
                c.name, c.coef, c.std_err, c.t, c.p_value, c.ci_lo, c.ci_hi
            );
        }
        let _ = writeln!(s, "{rule}");
        s
    }
}

fn fmt_g(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

/// Condition number of the column-equilibrated normal matrix and the
/// columns loading on its weakest direction.
fn conditioning(x: &DMatrix<f64>) -> (f64, Vec<usize>) {
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    let mut a = x.clone();
    for (j, mut col) in a.column_iter_mut().enumerate() {
        if norms[j] > 0.0 {
            col /= norms[j];
        }
    }
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one column");
    let lmax = eig.eigenvalues.max();
    let cond = if lmin <= 0.0 { f64::INFINITY } else { lmax / lmin };
    let weak = eig
        .eigenvectors
        .column(imin)
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > DEPENDENCY_LOADING)
        .map(|(j, _)| j)
        .collect();
    (cond, weak)
}

/// Ordinary least squares fit of `y` on `design` with the full diagnostic table.
pub fn fit_ols(design: &DesignMatrix, y: &[f64]) -> Result<RegressionReport, FactorError> {
    let (n, p) = (design.n_obs(), design.n_cols());
    if y.len() != n {
        return Err(FactorError::InvalidDesign(format!(
            "response has {} values, design has {n} rows",
            y.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(FactorError::InvalidDesign(format!("response holds non-finite value {v}")));
    }
    if n <= p {
        return Err(FactorError::TooFewObservations { n, p });
    }
    let x = design.matrix();
    let (condition, weak) = conditioning(x);
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(FactorError::SingularDesign {
            columns: weak.into_iter().map(|j| design.names()[j].clone()).collect(),
            condition,
        });
    }

    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| FactorError::SingularDesign {
            columns: design.names().to_vec(),
            condition,
        })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("triangular factor already solved once");
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted = x * &beta;
    let resid = &yv - &fitted;
    let mut rss = resid.norm_squared();
    if rss <= (f64::EPSILON * yv.norm()).powi(2) * n as f64 {
        rss = 0.0;
    }

    let has_const = design.has_intercept();
    let df_resid = n - p;
    let df_model = p - usize::from(has_const);
    let ybar = if has_const { yv.mean() } else { 0.0 };
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    let n_f = n as f64;
    let adj_r_squared =
        1.0 - (1.0 - r_squared) * (n_f - f64::from(u8::from(has_const))) / df_resid as f64;
    let (f_statistic, prob_f) = if df_model == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let f = (r_squared / df_model as f64) / ((1.0 - r_squared) / df_resid as f64);
        (f, f_sf(f, df_model as f64, df_resid as f64))
    };

    let s2 = rss / df_resid as f64;
    let q = student_t_quantile(0.975, df_resid as f64);
    let coefficients = design
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let coef = beta[j];
            let std_err = (s2 * xtx_inv[(j, j)]).sqrt();
            let t = coef / std_err;
            Coefficient {
                name: name.clone(),
                coef,
                std_err,
                t,
                p_value: student_t_two_sided(t, df_resid as f64),
                ci_lo: coef - q * std_err,
                ci_hi: coef + q * std_err,
            }
        })
        .collect();

    let log_likelihood =
        -0.5 * n_f * ((2.0 * std::f64::consts::PI).ln() + (rss / n_f).ln() + 1.0);
    let k = p as f64;
    Ok(RegressionReport {
        dep_variable: "y".into(),
        coefficients,
        r_squared,
        adj_r_squared,
        f_statistic,
        prob_f,
        log_likelihood,
        aic: 2.0 * k - 2.0 * log_likelihood,
        bic: k * n_f.ln() - 2.0 * log_likelihood,
        rss,
        n_obs: n,
        df_resid,
        df_model,
    })
}
