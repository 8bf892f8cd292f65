//! Composition of per-segment SLA values along a path and extraction of the
//! per-query decision vector.
//!
//! Additive parameters sum segment by segment. Normal-sum parameters model
//! independent per-segment durations: means add and variances add, so an
//! end-to-end duration is again normal. A query then reduces each composed
//! parameter to one real decision value, either the composed scalar itself
//! or the probability of meeting a deadline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Composition, Extraction, ParamValue, ParameterSchema};

/// End-to-end values of one candidate, one entry per schema parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComposedValues {
    pub values: Vec<ParamValue>,
}

/// Query inputs referenced during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bindings {
    pub deadline_hours: Option<f64>,
}

impl Bindings {
    pub fn none() -> Self {
        Bindings { deadline_hours: None }
    }

    pub fn deadline(hours: f64) -> Self {
        Bindings { deadline_hours: Some(hours) }
    }
}

/// One real number per schema parameter, ready for constraint checking and
/// scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub x: Vec<f64>,
    pub bindings: Bindings,
}

/// Folds the per-segment values of a path into end-to-end values. Every
/// segment must carry one value per schema parameter, of the kind the
/// parameter declares.
pub fn compose_path(
    segments: &[&[ParamValue]],
    schema: &ParameterSchema,
) -> Result<ComposedValues, CalculusError> {
    if segments.is_empty() {
        return Err(CalculusError::EmptyPath);
    }
    let arity = schema.arity();
    for seg in segments {
        if seg.len() != arity {
            return Err(CalculusError::ArityMismatch { expected: arity, got: seg.len() });
        }
    }
    let mut values = Vec::with_capacity(arity);
    for (i, decl) in schema.params().iter().enumerate() {
        match decl.composition {
            Composition::Additive => {
                let mut total = 0.0;
                for seg in segments {
                    match &seg[i] {
                        ParamValue::Scalar(v) => total += v,
                        ParamValue::Normal { .. } => {
                            return Err(CalculusError::ValueKind { name: decl.name.clone() })
                        }
                    }
                }
                values.push(ParamValue::Scalar(total));
            }
            Composition::NormalSum => {
                let mut mean = 0.0;
                let mut var = 0.0;
                for seg in segments {
                    match &seg[i] {
                        ParamValue::Normal { mean: m, var: v } => {
                            mean += m;
                            var += v;
                        }
                        ParamValue::Scalar(_) => {
                            return Err(CalculusError::ValueKind { name: decl.name.clone() })
                        }
                    }
                }
                values.push(ParamValue::Normal { mean, var });
            }
        }
    }
    Ok(ComposedValues { values })
}

/// Standard normal cumulative distribution function.
///
/// Double-precision rational approximation after Hart: a degree-6/7
/// polynomial quotient scaled by the Gaussian density below |z| ≈ 7.07 and a
/// short continued fraction beyond, exact 0.5 at zero, saturating past
/// |z| = 37. Max absolute error is below 1e-15, and the two branches are built
/// from the tail probability of |z|, so phi(-z) + phi(z) reconstructs 1 to
/// within one rounding step.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z == 0.0 {
        return 0.5;
    }
    let x = z.abs();
    let tail = if x > 37.0 {
        0.0
    } else {
        let e = (-x * x / 2.0).exp();
        if x < 7.071_067_811_865_47 {
            let mut n = 3.526_249_659_989_11e-2 * x + 0.700_383_064_443_688;
            n = n * x + 6.373_962_203_531_65;
            n = n * x + 33.912_866_078_383;
            n = n * x + 112.079_291_497_871;
            n = n * x + 221.213_596_169_931;
            n = n * x + 220.206_867_912_376;
            let mut d = 8.838_834_764_831_84e-2 * x + 1.755_667_163_182_64;
            d = d * x + 16.064_177_579_207;
            d = d * x + 86.780_732_202_946_1;
            d = d * x + 296.564_248_779_674;
            d = d * x + 637.333_633_378_831;
            d = d * x + 793.826_512_519_948;
            d = d * x + 440.413_735_824_752;
            e * n / d
        } else {
            let mut b = x + 0.65;
            b = x + 4.0 / b;
            b = x + 3.0 / b;
            b = x + 2.0 / b;
            b = x + 1.0 / b;
            e / b / 2.506_628_274_631
        }
    };
    if z > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Reduces composed values to the query's decision vector. Scalar parameters
/// pass through (a normal under value extraction contributes its mean); an
/// on-time probability is the chance that the composed normal total stays at
/// or under the deadline, with a zero-variance total degenerating to 0 or 1.
pub fn extract_decision_vector(
    composed: &ComposedValues,
    schema: &ParameterSchema,
    bindings: &Bindings,
) -> Result<DecisionVector, CalculusError> {
    if composed.values.len() != schema.arity() {
        return Err(CalculusError::ArityMismatch {
            expected: schema.arity(),
            got: composed.values.len(),
        });
    }
    let mut x = Vec::with_capacity(schema.arity());
    for (value, decl) in composed.values.iter().zip(schema.params()) {
        let xi = match (decl.extraction, value) {
            (Extraction::Value, ParamValue::Scalar(v)) => *v,
            (Extraction::Value, ParamValue::Normal { mean, .. }) => *mean,
            (Extraction::OnTimeProbability, ParamValue::Normal { mean, var }) => {
                let deadline = bindings
                    .deadline_hours
                    .ok_or_else(|| CalculusError::MissingDeadline { name: decl.name.clone() })?;
                if !deadline.is_finite() || deadline <= 0.0 {
                    return Err(CalculusError::InvalidDeadline(deadline));
                }
                if *var < 0.0 {
                    return Err(CalculusError::NegativeVariance { name: decl.name.clone() });
                }
                if *var == 0.0 {
                    if *mean <= deadline {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    std_normal_cdf((deadline - mean) / var.sqrt())
                }
            }
            (Extraction::OnTimeProbability, ParamValue::Scalar(_)) => {
                return Err(CalculusError::ValueKind { name: decl.name.clone() })
            }
        };
        x.push(xi);
    }
    Ok(DecisionVector { x, bindings: *bindings })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("cannot compose an empty path")]
    EmptyPath,
    #[error("expected {expected} parameter values per segment, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("parameter `{name}`: value kind does not match the declared composition")]
    ValueKind { name: String },
    #[error("parameter `{name}` requires a deadline binding")]
    MissingDeadline { name: String },
    #[error("deadline must be a positive finite number of hours, got {0}")]
    InvalidDeadline(f64),
    #[error("parameter `{name}` has negative variance")]
    NegativeVariance { name: String },
}
