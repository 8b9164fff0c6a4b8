//! Ordinary-least-squares models of contact frequency on the hashtag
//! indices, per ring and overall, for activated and non-activated ties.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashtags::TieRow;
use crate::model::RingId;

#[derive(Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("underdetermined: {n} rows for {p} predictors")]
    Underdetermined { n: usize, p: usize },
    #[error("design matrix is rank-deficient after dropping constant columns")]
    DegenerateDesign,
}

/// Non-fatal conditions noted while fitting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitNote {
    /// The named predictor was constant and dropped from the design.
    DroppedConstantPredictor(String),
    /// The response had no variance; R^2 reported as 0.
    ZeroVarianceResponse,
}

/// A fitted linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    /// Predictors retained in the fit, in design order.
    pub predictors: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// `1 - RSS/TSS`, clamped to [0, 1].
    pub r_squared: f64,
    pub n: usize,
    pub notes: Vec<FitNote>,
}

/// Fits `response ~ intercept + predictors` by least squares.
///
/// Constant predictor columns are dropped with a note; the solve runs on an
/// orthogonal decomposition of the design matrix, so it is deterministic and
/// stable on tall systems.
pub fn ols_fit(
    predictor_names: &[&str],
    rows: &[(Vec<f64>, f64)],
) -> Result<RegressionModel, RegressionError> {
    let n = rows.len();
    let p = predictor_names.len();
    if n <= p + 1 {
        return Err(RegressionError::Underdetermined { n, p });
    }
    let mut notes = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..p {
        let first = rows[0].0[j];
        if rows.iter().all(|(x, _)| x[j] == first) {
            notes.push(FitNote::DroppedConstantPredictor(predictor_names[j].to_string()));
        } else {
            kept.push(j);
        }
    }
    if n <= kept.len() + 1 {
        return Err(RegressionError::Underdetermined { n, p: kept.len() });
    }

    let design = DMatrix::from_fn(n, kept.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            rows[i].0[kept[j - 1]]
        }
    });
    let response = DVector::from_iterator(n, rows.iter().map(|(_, y)| *y));

    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * (n.max(kept.len() + 1) as f64) * f64::EPSILON;
    if svd.singular_values.iter().any(|&s| s <= tol) {
        return Err(RegressionError::DegenerateDesign);
    }
    let beta = svd.solve(&response, tol).map_err(|_| RegressionError::DegenerateDesign)?;

    let fitted = &design * &beta;
    let rss: f64 = (&response - &fitted).iter().map(|r| r * r).sum();
    let mean = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r_squared = if tss == 0.0 {
        notes.push(FitNote::ZeroVarianceResponse);
        0.0
    } else {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    };

    Ok(RegressionModel {
        predictors: kept.iter().map(|&j| predictor_names[j].to_string()).collect(),
        coefficients: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
        r_squared,
        n,
        notes,
    })
}

/// Predictors available for ties activated by a hashtag.
pub const ACTIVATED_PREDICTORS: [&str; 6] =
    ["n_r_hact", "n_e_hact", "n_r_hmax", "n_e_hmax", "d_rel", "u_rel"];

/// Predictors for non-activated ties (the activation indices are null there).
pub const NON_ACTIVATED_PREDICTORS: [&str; 4] = ["n_r_hmax", "n_e_hmax", "d_rel", "u_rel"];

/// Model scope: all rings pooled, or a single ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    All,
    Ring(RingId),
}

impl Scope {
    pub fn label(self) -> &'static str {
        match self {
            Scope::All => "ALL",
            Scope::Ring(r) => r.label(),
        }
    }
}

pub const SCOPES: [Scope; 6] = [
    Scope::All,
    Scope::Ring(RingId::R1),
    Scope::Ring(RingId::R2),
    Scope::Ring(RingId::R3),
    Scope::Ring(RingId::R4),
    Scope::Ring(RingId::R5),
];

/// One model cell; `model` is absent when the cell could not be fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCell {
    pub scope: Scope,
    pub model: Option<RegressionModel>,
    pub error: Option<String>,
}

/// The twelve models of one sample: {activated, non-activated} x {ALL, R1..R5}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub sample: String,
    pub activated: Vec<ModelCell>,
    pub non_activated: Vec<ModelCell>,
}

fn fit_cell(scope: Scope, predictors: &[&str], rows: &[&TieRow]) -> ModelCell {
    let design: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|r| {
            let x = predictors
                .iter()
                .map(|&name| match name {
                    "n_r_hact" => r.stats.n_r_hact as f64,
                    "n_e_hact" => r.stats.n_e_hact as f64,
                    "n_r_hmax" => r.stats.n_r_hmax as f64,
                    "n_e_hmax" => r.stats.n_e_hmax as f64,
                    "d_rel" => r.stats.d_rel as f64,
                    "u_rel" => r.stats.u_rel as f64,
                    other => unreachable!("unknown predictor {other}"),
                })
                .collect();
            (x, r.frequency)
        })
        .collect();
    match ols_fit(predictors, &design) {
        Ok(model) => ModelCell { scope, model: Some(model), error: None },
        Err(e) => ModelCell { scope, model: None, error: Some(e.to_string()) },
    }
}

/// Fits contact frequency against the hashtag indices for every scope and
/// activation group. Ring scopes use the tie's full-span ring assignment.
pub fn ring_regressions(sample: impl Into<String>, rows: &[TieRow]) -> RegressionReport {
    let cells = |activated: bool, predictors: &[&str]| {
        SCOPES
            .iter()
            .map(|&scope| {
                let in_scope: Vec<&TieRow> = rows
                    .iter()
                    .filter(|r| r.stats.activated == activated)
                    .filter(|r| match scope {
                        Scope::All => true,
                        Scope::Ring(ring) => r.ring == ring,
                    })
                    .collect();
                fit_cell(scope, predictors, &in_scope)
            })
            .collect()
    };
    RegressionReport {
        sample: sample.into(),
        activated: cells(true, &ACTIVATED_PREDICTORS),
        non_activated: cells(false, &NON_ACTIVATED_PREDICTORS),
    }
}
