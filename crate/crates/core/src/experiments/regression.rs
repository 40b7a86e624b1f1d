//! Standardized OLS over sweep rows: both predictors and responses are
//! z-scored so coefficients are directly comparable across predictors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SweepRow;

pub const DEFAULT_PREDICTORS: [&str; 3] = ["robots", "unit_size_l", "deposits"];
pub const ALL_PREDICTORS: [&str; 5] =
    ["robots", "evaporation_rate", "exploitation_rate", "unit_size_l", "deposits"];

#[derive(Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("need at least {need} successful rows, have {have}")]
    TooFewRows { need: usize, have: usize },
    #[error("column `{0}` has zero variance across the sweep")]
    ZeroVariance(String),
    #[error("unknown predictor `{0}`")]
    UnknownPredictor(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
}

/// Coefficients for one response.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResponseFit {
    pub response: String,
    /// (predictor name, standardized coefficient), in predictor order.
    pub coefficients: Vec<(String, f64)>,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RegressionReport {
    pub rows_used: usize,
    pub predictors: Vec<String>,
    pub aut: ResponseFit,
    pub ftb: ResponseFit,
}

impl RegressionReport {
    pub fn coefficient(&self, response: &str, predictor: &str) -> Option<f64> {
        let fit = match response {
            "aut" => &self.aut,
            "ftb" => &self.ftb,
            _ => return None,
        };
        fit.coefficients.iter().find(|(p, _)| p == predictor).map(|&(_, b)| b)
    }
}

fn predictor_value(row: &SweepRow, name: &str) -> Result<f64, RegressionError> {
    Ok(match name {
        "robots" => row.robots as f64,
        "evaporation_rate" => row.evaporation_rate,
        "exploitation_rate" => row.exploitation_rate,
        "unit_size_l" => row.unit_size_l,
        "deposits" => row.deposits as f64,
        other => return Err(RegressionError::UnknownPredictor(other.to_string())),
    })
}

/// z-score with the sample standard deviation (n - 1).
fn standardize(name: &str, values: &[f64]) -> Result<Vec<f64>, RegressionError> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 || var.is_nan() {
        return Err(RegressionError::ZeroVariance(name.to_string()));
    }
    let sd = var.sqrt();
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Fit both responses (AUT, FTB) on the standardized predictors. Rows with a
/// recorded run failure are excluded.
pub fn standardized_regression(
    rows: &[SweepRow],
    predictors: &[String],
) -> Result<RegressionReport, RegressionError> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let need = predictors.len() + 2;
    if ok.len() < need {
        return Err(RegressionError::TooFewRows { need, have: ok.len() });
    }

    let mut columns = Vec::with_capacity(predictors.len());
    for name in predictors {
        let raw: Vec<f64> = ok
            .iter()
            .map(|r| predictor_value(r, name))
            .collect::<Result<_, _>>()?;
        columns.push(standardize(name, &raw)?);
    }

    let n = ok.len();
    let p = predictors.len();
    // Intercept column plus standardized predictors; the intercept soaks up
    // nothing since responses are standardized too, but keeps the solve
    // honest when rounding leaves tiny non-zero means.
    let mut x = DMatrix::<f64>::zeros(n, p + 1);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for (j, col) in columns.iter().enumerate() {
            x[(i, j + 1)] = col[i];
        }
    }
    let xtx = x.transpose() * &x;
    let decomp = xtx.clone().cholesky().ok_or(RegressionError::RankDeficient)?;

    let fit_one = |response: &str, raw: Vec<f64>| -> Result<ResponseFit, RegressionError> {
        let z = standardize(response, &raw)?;
        let y = DVector::from_vec(z);
        let beta = decomp.solve(&(x.transpose() * &y));
        let resid = &y - &x * &beta;
        let ss_res: f64 = resid.iter().map(|e| e * e).sum();
        let ss_tot: f64 = y.iter().map(|v| v * v).sum(); // standardized: mean 0
        Ok(ResponseFit {
            response: response.to_string(),
            coefficients: predictors
                .iter()
                .cloned()
                .zip(beta.iter().skip(1).copied())
                .collect(),
            r_squared: 1.0 - ss_res / ss_tot,
        })
    };

    Ok(RegressionReport {
        rows_used: n,
        predictors: predictors.to_vec(),
        aut: fit_one("aut", ok.iter().map(|r| r.aut_pct.unwrap()).collect())?,
        ftb: fit_one("ftb", ok.iter().map(|r| r.ftb_pct.unwrap()).collect())?,
    })
}
