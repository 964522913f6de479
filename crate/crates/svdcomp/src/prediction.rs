//! Full-schedule prediction from child (and optionally adult) mortality.
//!
//! The procedure, given `5q0` and optionally `45q15`:
//!
//! 1. predict `logit(45q15)` from `5q0` via the adult model when no adult
//!    input is supplied;
//! 2. predict the four component weights from the pair;
//! 3. sum the weighted components into a schedule on the offset logit
//!    scale;
//! 4. remove the calibration offset;
//! 5. optionally overwrite age 0 with the infant model's prediction —
//!    the infant model is estimated on plain logits, so the replacement
//!    happens after the offset is removed;
//! 6. expit every element back to the probability scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calibration::{
    adult_predictor_row, infant_predictor_row, weight_predictor_row, CalibratedModel, SexModel,
};
use crate::error::{Error, Result};
use crate::lifetable::{clamp_probability, expit, logit, MortalitySchedule, Sex, AGE_GROUPS};
use crate::linalg::{ols_fit, DenseMatrix};

/// Where the adult-mortality value driving the weights came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdultSource {
    Input,
    Predicted,
}

/// Inputs for one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRequest {
    pub sex: Sex,
    /// Child mortality 5q0, strictly inside (0, 1).
    pub q5: f64,
    /// Adult mortality 45q15; predicted from `q5` when absent.
    pub q45: Option<f64>,
    /// Overwrite age 0 with the dedicated infant model (default true).
    pub replace_infant: bool,
    /// Use the kernel-smoothed components (default false).
    pub use_smoothed: bool,
}

impl PredictionRequest {
    pub fn new(sex: Sex, q5: f64) -> Self {
        PredictionRequest {
            sex,
            q5,
            q45: None,
            replace_infant: true,
            use_smoothed: false,
        }
    }

    pub fn with_adult(mut self, q45: f64) -> Self {
        self.q45 = Some(q45);
        self
    }

    fn validate(&self) -> Result<()> {
        check_probability("5q0", self.q5)?;
        if let Some(q45) = self.q45 {
            check_probability("45q15", q45)?;
        }
        Ok(())
    }
}

/// A predicted 110-age schedule plus how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedSchedule {
    /// Death probabilities for ages 0..=109, each strictly in (0, 1).
    pub qx: Vec<f64>,
    pub weights_used: Vec<f64>,
    pub q45_used: f64,
    pub q45_source: AdultSource,
    pub infant_replaced: bool,
    /// Set when an input fell outside the calibration corpus range; the
    /// prediction is still produced (no extrapolation guard beyond the
    /// logit-scale evaluation).
    pub out_of_support: bool,
}

impl PredictedSchedule {
    /// Aggregate death probability over `[start_age, start_age + width)`.
    pub fn aggregate(&self, start_age: usize, width: usize) -> Result<f64> {
        let end = start_age + width;
        if end > AGE_GROUPS {
            return Err(Error::argument(format!(
                "age range [{start_age}, {end}) out of bounds"
            )));
        }
        let survival: f64 = self.qx[start_age..end].iter().map(|q| 1.0 - q).product();
        Ok(1.0 - survival)
    }
}

fn check_probability(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::argument(format!(
            "{name} must be in (0, 1), got {value}"
        )));
    }
    Ok(())
}

/// Predict `45q15` from `5q0` with the stored adult model.
pub fn predict_adult(q5: f64, sex: Sex, model: &CalibratedModel) -> Result<f64> {
    check_probability("5q0", q5)?;
    let sex_model = model.sex_model(sex)?;
    Ok(expit(adult_logit(q5, sex_model)?))
}

fn adult_logit(q5: f64, sex_model: &SexModel) -> Result<f64> {
    let predictors = adult_predictor_row(q5)?;
    let c = &sex_model.adult_model.coefficients;
    Ok(c[0]
        + c[1] * predictors[0]
        + c[2] * predictors[1]
        + c[3] * predictors[2]
        + c[4] * predictors[3])
}

/// Predict the component weights from `(5q0, 45q15)`.
pub fn predict_weights(q5: f64, q45: f64, sex: Sex, model: &CalibratedModel) -> Result<Vec<f64>> {
    check_probability("5q0", q5)?;
    check_probability("45q15", q45)?;
    let sex_model = model.sex_model(sex)?;
    let predictors = weight_predictor_row(q5, q45)?;
    Ok(sex_model
        .weight_models
        .models
        .iter()
        .map(|m| {
            let mut acc = m.coefficients[0];
            for (c, x) in m.coefficients[1..].iter().zip(predictors) {
                acc += c * x;
            }
            acc
        })
        .collect())
}

/// Run the full prediction procedure.
pub fn predict_schedule(
    request: &PredictionRequest,
    model: &CalibratedModel,
) -> Result<PredictedSchedule> {
    request.validate()?;
    let sex_model = model.sex_model(request.sex)?;

    let (q45, q45_source) = match request.q45 {
        Some(q45) => (q45, AdultSource::Input),
        None => (
            predict_adult(request.q5, request.sex, model)?,
            AdultSource::Predicted,
        ),
    };
    let weights = predict_weights(request.q5, q45, request.sex, model)?;

    let out_of_support = {
        let s = &sex_model.input_support;
        request.q5 < s.q5_min || request.q5 > s.q5_max || q45 < s.q45_min || q45 > s.q45_max
    };

    let schedule = assemble_schedule(
        sex_model,
        model.offset,
        &weights,
        request.use_smoothed,
        request.replace_infant.then_some(request.q5),
    )?;

    Ok(PredictedSchedule {
        qx: schedule,
        weights_used: weights,
        q45_used: q45,
        q45_source,
        infant_replaced: request.replace_infant,
        out_of_support,
    })
}

/// Weighted component sum -> offset removal -> optional infant
/// replacement -> expit. `infant_from` carries the 5q0 input when age 0 is
/// to be overwritten.
fn assemble_schedule(
    sex_model: &SexModel,
    offset: f64,
    weights: &[f64],
    use_smoothed: bool,
    infant_from: Option<f64>,
) -> Result<Vec<f64>> {
    let components = if use_smoothed {
        &sex_model.components.smoothed_components
    } else {
        &sex_model.components.components
    };
    if weights.len() != components.len() {
        return Err(Error::argument(format!(
            "{} weights for {} components",
            weights.len(),
            components.len()
        )));
    }

    let mut logits = vec![0.0; AGE_GROUPS];
    for (w, component) in weights.iter().zip(components) {
        for (value, c) in logits.iter_mut().zip(component) {
            *value += w * c;
        }
    }
    // Back to the plain logit scale.
    logits.iter_mut().for_each(|v| *v -= offset);

    if let Some(q5) = infant_from {
        let predictors = infant_predictor_row(q5)?;
        let c = &sex_model.infant_model.coefficients;
        logits[0] = c[0] + c[1] * predictors[0] + c[2] * predictors[1];
    }

    if let Some(bad) = logits.iter().position(|v| !v.is_finite()) {
        return Err(Error::numeric(format!(
            "schedule assembly produced a non-finite logit at age {bad}"
        )));
    }
    // expit saturates to exactly 0.0 or 1.0 for |logit| beyond ~37; clamp
    // to the same open interval used at ingestion.
    Ok(logits
        .into_iter()
        .map(|v| clamp_probability(expit(v)))
        .collect())
}

/// Interpolate or smooth a partial schedule: zero-intercept least squares
/// of the observed offset logits on the component values at the observed
/// ages, then a full schedule from the estimated weights. Observed ages are
/// not forced to be reproduced exactly.
pub fn fit_partial_schedule(
    observed: &BTreeMap<usize, f64>,
    sex: Sex,
    model: &CalibratedModel,
) -> Result<PredictedSchedule> {
    let sex_model = model.sex_model(sex)?;
    let n_components = sex_model.components.components.len();
    if observed.len() < n_components {
        return Err(Error::argument(format!(
            "need at least {n_components} observed ages, got {}",
            observed.len()
        )));
    }
    for (&age, &q) in observed {
        if age >= AGE_GROUPS {
            return Err(Error::argument(format!("observed age {age} out of range")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::argument(format!(
                "observed qx at age {age} must be in (0, 1), got {q}"
            )));
        }
    }

    let ages: Vec<usize> = observed.keys().copied().collect();
    let design = DenseMatrix::from_fn(ages.len(), n_components, |r, c| {
        sex_model.components.components[c][ages[r]]
    })?;
    let response: Vec<f64> = observed
        .values()
        .map(|&q| logit(clamp_probability(q)).map(|h| h + model.offset))
        .collect::<Result<_>>()?;
    let fit = ols_fit(&design, &response, false)?;
    let weights = fit.coefficients;

    let qx = assemble_schedule(sex_model, model.offset, &weights, false, None)?;
    let schedule = PredictedSchedule {
        q45_used: 0.0,
        qx,
        weights_used: weights,
        q45_source: AdultSource::Predicted,
        infant_replaced: false,
        out_of_support: false,
    };
    let q45 = schedule.aggregate(15, 45)?;
    Ok(PredictedSchedule {
        q45_used: q45,
        ..schedule
    })
}

/// Observed-vs-predicted differences on the probability scale for one
/// schedule, using its own aggregates as the prediction inputs.
pub fn self_prediction_errors(
    schedule: &MortalitySchedule,
    model: &CalibratedModel,
    supply_adult: bool,
) -> Result<Vec<f64>> {
    let mut request = PredictionRequest::new(schedule.sex, schedule.child_mortality());
    if supply_adult {
        request = request.with_adult(schedule.adult_mortality());
    }
    let predicted = predict_schedule(&request, model)?;
    Ok(schedule
        .qx()
        .iter()
        .zip(&predicted.qx)
        .map(|(obs, pred)| obs - pred)
        .collect())
}
