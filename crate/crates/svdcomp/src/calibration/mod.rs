//! Calibration: offset logit matrices, per-sex SVDs, the twelve regression
//! models, and the serializable model artifact.
//!
//! For each sex the corpus becomes a 110 x L matrix of `logit(qx) + offset`
//! values, one column per schedule. The SVD of that matrix yields the
//! age-varying components (left singular vectors scaled by their singular
//! values) and the empirical per-schedule weights (right singular vector
//! elements). Regressions then tie the weights — and adult and infant
//! mortality — to child mortality, producing a model that predicts a full
//! schedule from `5q0` alone or from `(5q0, 45q15)`.

mod artifact;

pub use artifact::{
    corpus_fingerprint, load_model, save_model, FORMAT_VERSION, SUPPORTED_VERSIONS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifetable::{logit, Corpus, Sex, AGE_GROUPS};
use crate::linalg::{ols_fit, svd, DenseMatrix, OlsFit, SvdResult};

/// Offset added to every logit before the SVD. Separating the data cloud
/// from the origin gives all age groups comparable leverage on the first
/// component; the offset is removed again at prediction time.
pub const DEFAULT_OFFSET: f64 = -10.0;

/// Number of SVD components retained by default.
pub const DEFAULT_COMPONENTS: usize = 4;

/// Number of predictors in each weight regression (plus an intercept).
pub const WEIGHT_PREDICTORS: usize = 8;

/// A x L matrix of offset logit death probabilities for one sex.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMatrix {
    pub sex: Sex,
    pub values: DenseMatrix,
    pub offset: f64,
    pub column_labels: Vec<(String, i32)>,
}

/// Age-varying components for one sex: the scaled left singular vectors,
/// their kernel-smoothed versions, and per-component variance bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSet {
    pub sex: Sex,
    /// component_i\[a\] = s_i * u_i\[a\], one vector of length 110 per
    /// retained dimension.
    pub components: Vec<Vec<f64>>,
    pub smoothed_components: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    /// s_i^2 divided by the squared Frobenius norm of the calibration
    /// matrix (the total sum of squares).
    pub explained_fractions: Vec<f64>,
}

/// One fitted weight model: intercept plus eight predictor coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRegression {
    /// Intercept first, then coefficients for the eight predictors in
    /// [`weight_predictor_row`] order.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub residual_std_error: f64,
}

/// The per-component weight models for one sex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRegressionSet {
    pub sex: Sex,
    pub models: Vec<WeightRegression>,
}

/// logit(45q15) as a cubic-in-logit function of 5q0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdultRegression {
    /// (intercept, 5q0, logit(5q0), logit^2, logit^3)
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

/// logit(1q0) as a quadratic function of logit(5q0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfantRegression {
    /// (intercept, logit(5q0), logit^2(5q0))
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

/// Range of calibration inputs, used to flag extrapolating predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSupport {
    pub q5_min: f64,
    pub q5_max: f64,
    pub q45_min: f64,
    pub q45_max: f64,
}

/// Everything calibrated for one sex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SexModel {
    pub sex: Sex,
    pub components: ComponentSet,
    pub weight_models: WeightRegressionSet,
    pub adult_model: AdultRegression,
    pub infant_model: InfantRegression,
    pub input_support: InputSupport,
    pub n_schedules: usize,
}

/// The serializable calibrated model: both sexes (or one, when calibrated
/// single-sex), the offset they share, and corpus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub format_version: u32,
    pub offset: f64,
    pub n_schedules: usize,
    pub corpus_fingerprint: String,
    pub female: Option<SexModel>,
    pub male: Option<SexModel>,
}

impl CalibratedModel {
    pub fn sex_model(&self, sex: Sex) -> Result<&SexModel> {
        let model = match sex {
            Sex::Female => self.female.as_ref(),
            Sex::Male => self.male.as_ref(),
        };
        model.ok_or_else(|| Error::argument(format!("model has no {sex} calibration")))
    }

    pub fn n_components(&self) -> usize {
        self.female
            .as_ref()
            .or(self.male.as_ref())
            .map_or(0, |m| m.components.components.len())
    }
}

/// Arrange a single-sex corpus into the A x L offset logit matrix.
pub fn build_calibration_matrix(corpus: &Corpus, offset: f64) -> Result<CalibrationMatrix> {
    let sex = corpus.uniform_sex()?;
    if !offset.is_finite() {
        return Err(Error::argument("offset must be finite"));
    }
    let cols = corpus.len();
    let mut data = vec![0.0; AGE_GROUPS * cols];
    for (l, schedule) in corpus.schedules.iter().enumerate() {
        for (a, &q) in schedule.qx().iter().enumerate() {
            data[a * cols + l] = logit(q)? + offset;
        }
    }
    Ok(CalibrationMatrix {
        sex,
        values: DenseMatrix::new(AGE_GROUPS, cols, data)?,
        offset,
        column_labels: corpus
            .schedules
            .iter()
            .map(|s| (s.population_code.clone(), s.year))
            .collect(),
    })
}

/// Per-schedule weights: row l holds the first `n_components` elements of
/// the l-th row of V, exactly as the SVD produced them.
pub fn empirical_weights(factors: &SvdResult, n_components: usize) -> Result<Vec<Vec<f64>>> {
    if factors.k < n_components {
        return Err(Error::argument(format!(
            "factors retain {} components, need {n_components}",
            factors.k
        )));
    }
    Ok((0..factors.v.rows())
        .map(|l| (0..n_components).map(|i| factors.v.get(l, i)).collect())
        .collect())
}

/// The eight weight-model predictors, in coefficient order:
/// 5q0, logit(5q0), logit^2(5q0), logit^3(5q0),
/// 45q15, logit^2(45q15), logit^3(45q15), logit(5q0)*logit(45q15).
pub fn weight_predictor_row(q5: f64, q45: f64) -> Result<[f64; WEIGHT_PREDICTORS]> {
    let h5 = logit(q5)?;
    let h45 = logit(q45)?;
    Ok([
        q5,
        h5,
        h5 * h5,
        h5 * h5 * h5,
        q45,
        h45 * h45,
        h45 * h45 * h45,
        h5 * h45,
    ])
}

/// Adult-model predictors: 5q0, logit(5q0), logit^2, logit^3.
pub fn adult_predictor_row(q5: f64) -> Result<[f64; 4]> {
    let h5 = logit(q5)?;
    Ok([q5, h5, h5 * h5, h5 * h5 * h5])
}

/// Infant-model predictors: logit(5q0), logit^2(5q0).
pub fn infant_predictor_row(q5: f64) -> Result<[f64; 2]> {
    let h5 = logit(q5)?;
    Ok([h5, h5 * h5])
}

fn child_adult_inputs(corpus: &Corpus) -> Vec<(f64, f64)> {
    corpus
        .schedules
        .iter()
        .map(|s| (s.child_mortality(), s.adult_mortality()))
        .collect()
}

/// OLS with a shortcut for zero-variance responses: a constant target is
/// reproduced exactly by its intercept, which keeps degenerate corpora
/// (identical schedules, rank-deficient weight columns) calibratable.
fn fit_or_constant(design: &DenseMatrix, response: &[f64]) -> Result<OlsFit> {
    let max = response.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = response.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = max.abs().max(min.abs()).max(1.0);
    if max - min <= 1e-12 * scale {
        let mut coefficients = vec![0.0; design.cols() + 1];
        coefficients[0] = 0.5 * (max + min);
        return Ok(OlsFit {
            coefficients,
            r_squared: 1.0,
            residual_std_error: 0.0,
            n_obs: response.len(),
        });
    }
    ols_fit(design, response, true)
}

/// Fit the per-component weight models for one sex.
pub fn fit_weight_regressions(
    weights: &[Vec<f64>],
    corpus: &Corpus,
) -> Result<WeightRegressionSet> {
    let sex = corpus.uniform_sex()?;
    if weights.len() != corpus.len() {
        return Err(Error::argument(format!(
            "{} weight rows do not align with {} corpus columns",
            weights.len(),
            corpus.len()
        )));
    }
    let n_components = weights.first().map_or(0, Vec::len);
    if n_components == 0 {
        return Err(Error::argument("weight rows are empty"));
    }
    let inputs = child_adult_inputs(corpus);
    let design = DenseMatrix::from_fn(corpus.len(), WEIGHT_PREDICTORS, |l, c| {
        weight_predictor_row(inputs[l].0, inputs[l].1).expect("corpus probabilities are interior")
            [c]
    })?;
    let mut models = Vec::with_capacity(n_components);
    for i in 0..n_components {
        let response: Vec<f64> = weights.iter().map(|row| row[i]).collect();
        let fit = fit_or_constant(&design, &response)
            .map_err(|e| Error::numeric(format!("weight model {}: {e}", i + 1)))?;
        models.push(WeightRegression {
            coefficients: fit.coefficients,
            r_squared: fit.r_squared,
            residual_std_error: fit.residual_std_error,
        });
    }
    Ok(WeightRegressionSet { sex, models })
}

/// Fit logit(45q15) ~ 5q0 + logit(5q0) + logit^2 + logit^3.
pub fn fit_adult_regression(corpus: &Corpus) -> Result<AdultRegression> {
    corpus.uniform_sex()?;
    let inputs = child_adult_inputs(corpus);
    let design = DenseMatrix::from_fn(corpus.len(), 4, |l, c| {
        adult_predictor_row(inputs[l].0).expect("corpus probabilities are interior")[c]
    })?;
    let response: Vec<f64> = inputs
        .iter()
        .map(|&(_, q45)| logit(q45))
        .collect::<Result<_>>()?;
    let fit = fit_or_constant(&design, &response)
        .map_err(|e| Error::numeric(format!("adult model: {e}")))?;
    Ok(AdultRegression {
        coefficients: fit.coefficients,
        r_squared: fit.r_squared,
    })
}

/// Fit logit(1q0) ~ logit(5q0) + logit^2(5q0).
pub fn fit_infant_regression(corpus: &Corpus) -> Result<InfantRegression> {
    corpus.uniform_sex()?;
    let design = DenseMatrix::from_fn(corpus.len(), 2, |l, c| {
        infant_predictor_row(corpus.schedules[l].child_mortality())
            .expect("corpus probabilities are interior")[c]
    })?;
    let response: Vec<f64> = corpus
        .schedules
        .iter()
        .map(|s| logit(s.q_at(0)))
        .collect::<Result<_>>()?;
    let fit = fit_or_constant(&design, &response)
        .map_err(|e| Error::numeric(format!("infant model: {e}")))?;
    Ok(InfantRegression {
        coefficients: fit.coefficients,
        r_squared: fit.r_squared,
    })
}

/// Gaussian kernel smoothing of the components. Component i (1-based) is
/// left untouched at ages <= i and smoothed with bandwidth i+1 above that,
/// with kernel weights renormalized at the boundaries. Raw components are
/// preserved alongside.
pub fn smooth_components(set: &ComponentSet) -> ComponentSet {
    let mut out = set.clone();
    out.smoothed_components = set
        .components
        .iter()
        .enumerate()
        .map(|(idx, raw)| smooth_component(raw, idx + 1))
        .collect();
    out
}

fn smooth_component(raw: &[f64], component_index: usize) -> Vec<f64> {
    let bandwidth = (component_index + 1) as f64;
    raw.iter()
        .enumerate()
        .map(|(age, &value)| {
            if age <= component_index {
                value
            } else {
                let weights = gaussian_weights(age, bandwidth, raw.len());
                weights.iter().zip(raw).map(|(w, r)| w * r).sum()
            }
        })
        .collect()
}

/// Normalized Gaussian kernel weights centered on `center`, truncated to
/// the age range.
fn gaussian_weights(center: usize, bandwidth: f64, len: usize) -> Vec<f64> {
    let mut weights: Vec<f64> = (0..len)
        .map(|b| {
            let z = (b as f64 - center as f64) / bandwidth;
            (-0.5 * z * z).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

/// Full single-sex calibration: matrix, SVD, weights, and all regressions.
pub fn calibrate_sex(corpus: &Corpus, offset: f64, n_components: usize) -> Result<SexModel> {
    let sex = corpus.uniform_sex()?;
    if n_components == 0 {
        return Err(Error::argument("at least one component must be retained"));
    }
    let matrix = build_calibration_matrix(corpus, offset)?;
    let factors = svd(&matrix.values, n_components)
        .map_err(|e| Error::numeric(format!("{sex} calibration svd: {e}")))?;

    let total_ss = matrix.values.frobenius_norm_sq();
    let explained_fractions: Vec<f64> = factors.s.iter().map(|s| s * s / total_ss).collect();
    let components: Vec<Vec<f64>> = (0..n_components)
        .map(|i| {
            (0..AGE_GROUPS)
                .map(|a| factors.s[i] * factors.u.get(a, i))
                .collect()
        })
        .collect();
    let component_set = smooth_components(&ComponentSet {
        sex,
        smoothed_components: Vec::new(),
        components,
        singular_values: factors.s.clone(),
        explained_fractions,
    });

    let weights = empirical_weights(&factors, n_components)?;
    let weight_models = fit_weight_regressions(&weights, corpus)?;
    let adult_model = fit_adult_regression(corpus)?;
    let infant_model = fit_infant_regression(corpus)?;

    let inputs = child_adult_inputs(corpus);
    let input_support = InputSupport {
        q5_min: inputs.iter().map(|i| i.0).fold(f64::INFINITY, f64::min),
        q5_max: inputs.iter().map(|i| i.0).fold(f64::NEG_INFINITY, f64::max),
        q45_min: inputs.iter().map(|i| i.1).fold(f64::INFINITY, f64::min),
        q45_max: inputs.iter().map(|i| i.1).fold(f64::NEG_INFINITY, f64::max),
    };

    Ok(SexModel {
        sex,
        components: component_set,
        weight_models,
        adult_model,
        infant_model,
        input_support,
        n_schedules: corpus.len(),
    })
}

/// Calibrate both sexes into one model artifact.
pub fn calibrate(
    corpus_f: &Corpus,
    corpus_m: &Corpus,
    offset: f64,
    n_components: usize,
) -> Result<CalibratedModel> {
    if corpus_f.uniform_sex()? != Sex::Female {
        return Err(Error::argument("first corpus must be female"));
    }
    if corpus_m.uniform_sex()? != Sex::Male {
        return Err(Error::argument("second corpus must be male"));
    }
    let (female, male) = rayon::join(
        || calibrate_sex(corpus_f, offset, n_components),
        || calibrate_sex(corpus_m, offset, n_components),
    );
    Ok(CalibratedModel {
        format_version: FORMAT_VERSION,
        offset,
        n_schedules: corpus_f.len() + corpus_m.len(),
        corpus_fingerprint: corpus_fingerprint([corpus_f, corpus_m]),
        female: Some(female?),
        male: Some(male?),
    })
}
