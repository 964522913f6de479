//! Prediction-error reporting, cross-validation, and baseline comparison.
//!
//! Errors are always observed minus predicted on the probability scale.
//! Reports carry the raw per-age error vectors plus fixed quantile
//! summaries, an overall median and interquartile range, and the one-year
//! total absolute error. Five-year summaries aggregate both observed and
//! predicted schedules into the 22 standard age groups (0-4 ... 105-109)
//! before differencing.

mod crossval;
mod logquad;

pub use crossval::{
    cross_validate, pooled_reports, CvDesign, CvFailure, CvResult, CvSample, SexCvReports,
};
pub use logquad::{
    fit_demo_coefficients, load_logquad_csv, load_logquad_file, logquad_predict, FiveYearCell,
    LogQuadCoefficients, LogQuadModel,
};

use std::fmt;

use crate::calibration::CalibratedModel;
use crate::error::{Error, Result};
use crate::lifetable::{Corpus, MortalitySchedule, Sex, AGE_GROUPS};
use crate::prediction::{predict_schedule, PredictionRequest};

/// Number of standard five-year age groups covering ages 0-109.
pub const FIVE_YEAR_GROUPS: usize = AGE_GROUPS / 5;

/// Which inputs drive the prediction being scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    /// 5q0 only; 45q15 comes from the adult model.
    ChildOnly,
    /// Both 5q0 and 45q15 taken from the observed schedule.
    ChildAdult,
}

impl InputMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InputMode::ChildOnly => "child_only",
            InputMode::ChildAdult => "child_adult",
        }
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "child_only" | "child" => Ok(InputMode::ChildOnly),
            "child_adult" | "both" => Ok(InputMode::ChildAdult),
            other => Err(Error::argument(format!("unknown input mode {other:?}"))),
        }
    }
}

/// Whether the scored schedules calibrated the model being scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    InSample,
    OutOfSample,
    All,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::InSample => "in_sample",
            SampleStatus::OutOfSample => "out_of_sample",
            SampleStatus::All => "all",
        }
    }
}

impl fmt::Display for SampleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Age grouping for total absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgeGrouping {
    OneYear,
    FiveYear,
}

/// Summary of prediction errors for one sex and one input mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub sex: Sex,
    pub input_mode: InputMode,
    pub sample_status: SampleStatus,
    pub n_schedules: usize,
    /// errors\[age\]\[i\] = observed - predicted for the i-th scored
    /// schedule at that age.
    pub per_age_errors: Vec<Vec<f64>>,
    /// Per age: the 10%, 25%, 50%, 75%, 90% quantiles of the errors.
    pub per_age_quantiles: Vec<[f64; 5]>,
    pub overall_median: f64,
    pub overall_iqr: f64,
    /// Sum of |error| over all schedules and single-year ages.
    pub total_absolute_error: f64,
}

impl ErrorReport {
    pub fn from_errors(
        sex: Sex,
        input_mode: InputMode,
        sample_status: SampleStatus,
        per_age_errors: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if per_age_errors.len() != AGE_GROUPS {
            return Err(Error::argument(format!(
                "expected {AGE_GROUPS} per-age error vectors, got {}",
                per_age_errors.len()
            )));
        }
        let n_schedules = per_age_errors[0].len();
        if per_age_errors.iter().any(|v| v.len() != n_schedules) {
            return Err(Error::argument("ragged per-age error vectors"));
        }
        let per_age_quantiles = per_age_errors
            .iter()
            .map(|errors| {
                let mut sorted = errors.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                [0.10, 0.25, 0.50, 0.75, 0.90].map(|p| quantile_sorted(&sorted, p))
            })
            .collect();
        let mut all: Vec<f64> = per_age_errors.iter().flatten().copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let overall_median = quantile_sorted(&all, 0.5);
        let overall_iqr = quantile_sorted(&all, 0.75) - quantile_sorted(&all, 0.25);
        let total_absolute_error = all.iter().map(|e| e.abs()).sum();
        Ok(ErrorReport {
            sex,
            input_mode,
            sample_status,
            n_schedules,
            per_age_errors,
            per_age_quantiles,
            overall_median,
            overall_iqr,
            total_absolute_error,
        })
    }

    /// Merge several reports (same sex, mode, status) by pooling their
    /// error vectors.
    pub fn pooled(reports: &[&ErrorReport]) -> Result<ErrorReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::argument("nothing to pool"))?;
        let mut per_age_errors = vec![Vec::new(); AGE_GROUPS];
        for report in reports {
            for (pool, errors) in per_age_errors.iter_mut().zip(&report.per_age_errors) {
                pool.extend_from_slice(errors);
            }
        }
        ErrorReport::from_errors(
            first.sex,
            first.input_mode,
            first.sample_status,
            per_age_errors,
        )
    }

    /// CSV rows in the export schema
    /// (sex, age, q10, q25, q50, q75, q90, input_mode, sample_status).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sex,age,q10,q25,q50,q75,q90,input_mode,sample_status\n");
        for (age, q) in self.per_age_quantiles.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{:e},{},{}\n",
                self.sex, age, q[0], q[1], q[2], q[3], q[4], self.input_mode, self.sample_status
            ));
        }
        out
    }
}

/// Linear-interpolation quantile of pre-sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn errors_for_schedule(
    schedule: &MortalitySchedule,
    model: &CalibratedModel,
    input_mode: InputMode,
) -> Result<Vec<f64>> {
    let mut request = PredictionRequest::new(schedule.sex, schedule.child_mortality());
    if input_mode == InputMode::ChildAdult {
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

/// Score a model against every schedule in a single-sex corpus.
pub fn prediction_errors(
    corpus: &Corpus,
    model: &CalibratedModel,
    input_mode: InputMode,
) -> Result<ErrorReport> {
    prediction_errors_with_status(corpus, model, input_mode, SampleStatus::All)
}

pub(crate) fn prediction_errors_with_status(
    corpus: &Corpus,
    model: &CalibratedModel,
    input_mode: InputMode,
    status: SampleStatus,
) -> Result<ErrorReport> {
    let sex = corpus.uniform_sex()?;
    let mut per_age_errors: Vec<Vec<f64>> = (0..AGE_GROUPS)
        .map(|_| Vec::with_capacity(corpus.len()))
        .collect();
    for schedule in &corpus.schedules {
        let errors = errors_for_schedule(schedule, model, input_mode)?;
        for (pool, e) in per_age_errors.iter_mut().zip(errors) {
            pool.push(e);
        }
    }
    ErrorReport::from_errors(sex, input_mode, status, per_age_errors)
}

/// Aggregate a 110-age schedule into the 22 standard five-year groups.
pub fn five_year_aggregates(qx: &[f64]) -> Vec<f64> {
    (0..FIVE_YEAR_GROUPS)
        .map(|g| {
            let survival: f64 = qx[5 * g..5 * g + 5].iter().map(|q| 1.0 - q).product();
            1.0 - survival
        })
        .collect()
}

/// Total absolute prediction error over a corpus, on one-year or five-year
/// age groups.
pub fn total_absolute_error(
    corpus: &Corpus,
    model: &CalibratedModel,
    input_mode: InputMode,
    grouping: AgeGrouping,
) -> Result<f64> {
    corpus.uniform_sex()?;
    let mut total = 0.0;
    for schedule in &corpus.schedules {
        let mut request = PredictionRequest::new(schedule.sex, schedule.child_mortality());
        if input_mode == InputMode::ChildAdult {
            request = request.with_adult(schedule.adult_mortality());
        }
        let predicted = predict_schedule(&request, model)?;
        match grouping {
            AgeGrouping::OneYear => {
                total += schedule
                    .qx()
                    .iter()
                    .zip(&predicted.qx)
                    .map(|(obs, pred)| (obs - pred).abs())
                    .sum::<f64>();
            }
            AgeGrouping::FiveYear => {
                let obs = five_year_aggregates(schedule.qx());
                let pred = five_year_aggregates(&predicted.qx);
                total += obs
                    .iter()
                    .zip(&pred)
                    .map(|(o, p)| (o - p).abs())
                    .sum::<f64>();
            }
        }
    }
    Ok(total)
}

/// A model that predicts the 22 standard five-year death probabilities
/// from child (and optionally adult) mortality. Implemented by the
/// log-quadratic baseline; test doubles can stand in for it.
pub trait FiveYearBaseline {
    fn predict_five_year(&self, sex: Sex, q5: f64, q45: Option<f64>) -> Result<Vec<f64>>;
}

/// Total absolute error of the component model and a five-year baseline,
/// per sex and input mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub female: SexComparison,
    pub male: SexComparison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SexComparison {
    pub sex: Sex,
    pub model_child: f64,
    pub model_both: f64,
    pub baseline_child: f64,
    pub baseline_both: f64,
}

impl SexComparison {
    pub fn additive_difference(&self) -> (f64, f64) {
        (
            self.baseline_child - self.model_child,
            self.baseline_both - self.model_both,
        )
    }

    /// (baseline - model) / model, in percent.
    pub fn proportional_difference(&self) -> (f64, f64) {
        let (d_child, d_both) = self.additive_difference();
        (
            100.0 * d_child / self.model_child,
            100.0 * d_both / self.model_both,
        )
    }
}

/// Score both models on both sexes with both input modes.
pub fn compare_models(
    corpus_f: &Corpus,
    corpus_m: &Corpus,
    model: &CalibratedModel,
    baseline: &dyn FiveYearBaseline,
) -> Result<ModelComparison> {
    let head = |corpus: &Corpus| -> Result<SexComparison> {
        let sex = corpus.uniform_sex()?;
        let model_child =
            total_absolute_error(corpus, model, InputMode::ChildOnly, AgeGrouping::FiveYear)?;
        let model_both =
            total_absolute_error(corpus, model, InputMode::ChildAdult, AgeGrouping::FiveYear)?;
        let mut baseline_child = 0.0;
        let mut baseline_both = 0.0;
        for schedule in &corpus.schedules {
            let q5 = schedule.child_mortality();
            let q45 = schedule.adult_mortality();
            let obs = five_year_aggregates(schedule.qx());
            let pred_child = baseline.predict_five_year(sex, q5, None)?;
            let pred_both = baseline.predict_five_year(sex, q5, Some(q45))?;
            if pred_child.len() != FIVE_YEAR_GROUPS || pred_both.len() != FIVE_YEAR_GROUPS {
                return Err(Error::argument("baseline must predict 22 five-year groups"));
            }
            baseline_child += obs
                .iter()
                .zip(&pred_child)
                .map(|(o, p)| (o - p).abs())
                .sum::<f64>();
            baseline_both += obs
                .iter()
                .zip(&pred_both)
                .map(|(o, p)| (o - p).abs())
                .sum::<f64>();
        }
        Ok(SexComparison {
            sex,
            model_child,
            model_both,
            baseline_child,
            baseline_both,
        })
    };
    Ok(ModelComparison {
        female: head(corpus_f)?,
        male: head(corpus_m)?,
    })
}

impl ModelComparison {
    /// Eight-row comparison table as CSV: per sex, the two models' totals,
    /// their additive difference, and the proportional difference, each
    /// under child-only (c1) and child+adult (c2) inputs with c3 = c2 - c1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sex,row,summary,c1_q5_only,c2_q5_q45,c3_difference\n");
        for (base_row, cmp) in [(1usize, &self.female), (5, &self.male)] {
            let sex = cmp.sex;
            let (d_child, d_both) = cmp.additive_difference();
            let (p_child, p_both) = cmp.proportional_difference();
            out.push_str(&format!(
                "{sex},R{},svdcomp,{:.4},{:.4},{:.4}\n",
                base_row,
                cmp.model_child,
                cmp.model_both,
                cmp.model_both - cmp.model_child
            ));
            out.push_str(&format!(
                "{sex},R{},baseline,{:.4},{:.4},{:.4}\n",
                base_row + 1,
                cmp.baseline_child,
                cmp.baseline_both,
                cmp.baseline_both - cmp.baseline_child
            ));
            out.push_str(&format!(
                "{sex},R{},baseline_minus_svdcomp,{:.4},{:.4},{:.4}\n",
                base_row + 2,
                d_child,
                d_both,
                d_both - d_child
            ));
            out.push_str(&format!(
                "{sex},R{},percent_of_svdcomp,{:.2},{:.2},{:.2}\n",
                base_row + 3,
                p_child,
                p_both,
                p_both - p_child
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::calibration::{calibrate, DEFAULT_COMPONENTS, DEFAULT_OFFSET};
    use crate::synth;

    fn model_and_corpora() -> (CalibratedModel, Corpus, Corpus) {
        let (f, m) = synth::corpora();
        let model = calibrate(&f, &m, DEFAULT_OFFSET, DEFAULT_COMPONENTS).unwrap();
        (model, f, m)
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(quantile_sorted(&sorted, 0.5), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile_sorted(&sorted, 0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile_sorted(&sorted, 1.0), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile_sorted(&[7.0], 0.25), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn report_quantiles_are_monotone_and_consistent() {
        let (model, f, _) = model_and_corpora();
        let report = prediction_errors(&f, &model, InputMode::ChildAdult).unwrap();
        assert_eq!(report.n_schedules, f.len());
        for q in &report.per_age_quantiles {
            assert!(q[0] <= q[1] && q[1] <= q[2] && q[2] <= q[3] && q[3] <= q[4]);
        }
        // total_absolute_error equals the sum over the per-age vectors.
        let direct: f64 = report
            .per_age_errors
            .iter()
            .flatten()
            .map(|e| e.abs())
            .sum();
        assert_abs_diff_eq!(report.total_absolute_error, direct, epsilon = 1e-9);
        // And matches the one-year total from the dedicated operation.
        let tae =
            total_absolute_error(&f, &model, InputMode::ChildAdult, AgeGrouping::OneYear).unwrap();
        assert_abs_diff_eq!(report.total_absolute_error, tae, epsilon = 1e-9);
    }

    #[test]
    fn single_schedule_report_median_is_its_error_median() {
        let (model, f, _) = model_and_corpora();
        let one = Corpus::new(vec![f.schedules[10].clone()], "one");
        let report = prediction_errors(&one, &model, InputMode::ChildOnly).unwrap();
        let mut errors: Vec<f64> = report.per_age_errors.iter().map(|v| v[0]).collect();
        errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(
            report.overall_median,
            quantile_sorted(&errors, 0.5),
            epsilon = 1e-15
        );
    }

    #[test]
    fn five_year_grouping_matches_survival_products() {
        let (_, f, _) = model_and_corpora();
        let s = &f.schedules[3];
        let groups = five_year_aggregates(s.qx());
        assert_eq!(groups.len(), FIVE_YEAR_GROUPS);
        for (g, &q) in groups.iter().enumerate() {
            let expected = crate::lifetable::aggregate_q(s, 5 * g, 5).unwrap();
            assert_abs_diff_eq!(q, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn supplying_adult_mortality_does_not_hurt_in_aggregate() {
        let (model, f, m) = model_and_corpora();
        for corpus in [&f, &m] {
            let child =
                total_absolute_error(corpus, &model, InputMode::ChildOnly, AgeGrouping::FiveYear)
                    .unwrap();
            let both =
                total_absolute_error(corpus, &model, InputMode::ChildAdult, AgeGrouping::FiveYear)
                    .unwrap();
            assert!(
                both <= child,
                "{}: child_adult {both} vs child_only {child}",
                corpus.provenance
            );
        }
    }

    #[test]
    fn echo_baseline_comparison_is_all_zeros() {
        // A baseline that echoes the component model's own five-year
        // output must produce zero differences.
        struct Echo<'a>(&'a CalibratedModel);
        impl FiveYearBaseline for Echo<'_> {
            fn predict_five_year(&self, sex: Sex, q5: f64, q45: Option<f64>) -> Result<Vec<f64>> {
                let mut request = PredictionRequest::new(sex, q5);
                if let Some(q45) = q45 {
                    request = request.with_adult(q45);
                }
                Ok(five_year_aggregates(
                    &predict_schedule(&request, self.0)?.qx,
                ))
            }
        }

        let (model, f, m) = model_and_corpora();
        let cmp = compare_models(&f, &m, &model, &Echo(&model)).unwrap();
        for sexcmp in [&cmp.female, &cmp.male] {
            let (d_child, d_both) = sexcmp.additive_difference();
            assert_abs_diff_eq!(d_child, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(d_both, 0.0, epsilon = 1e-9);
        }
        let csv = cmp.to_csv();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("sex,row,summary,c1_q5_only,c2_q5_q45,c3_difference"));
        let r3 = csv.lines().nth(3).unwrap();
        assert!(r3.contains("R3"), "{r3}");
    }

    #[test]
    fn report_csv_has_export_schema() {
        let (model, f, _) = model_and_corpora();
        let report = prediction_errors(&f, &model, InputMode::ChildOnly).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sex,age,q10,q25,q50,q75,q90,input_mode,sample_status"
        );
        assert_eq!(csv.lines().count(), AGE_GROUPS + 1);
        let first = lines.next().unwrap();
        assert!(first.starts_with("female,0,"));
        assert!(first.ends_with("child_only,all"));
    }
}
