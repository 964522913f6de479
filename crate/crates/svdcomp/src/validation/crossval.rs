//! Seeded cross-validation over calibration corpora.
//!
//! Each sample draws a fraction of the schedules without replacement,
//! calibrates on the draw, predicts every schedule of the full corpora,
//! and splits the errors by membership. Sampling is driven by a
//! counter-mode RNG keyed on (seed, sample index), so results are
//! identical regardless of how many samples run or in what order; samples
//! themselves run in parallel and are merged by index.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::calibration::calibrate;
use crate::error::{Error, Result};
use crate::lifetable::Corpus;
use crate::validation::{prediction_errors_with_status, ErrorReport, InputMode, SampleStatus};
use crate::Sex;

/// Cross-validation design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvDesign {
    pub n_samples: usize,
    /// Fraction of each corpus calibrated on, strictly inside (0, 1).
    pub sample_fraction: f64,
    pub seed: u64,
    /// Draw the fraction within each population code instead of globally.
    pub stratify: bool,
}

impl CvDesign {
    pub fn new(n_samples: usize, sample_fraction: f64, seed: u64) -> Self {
        CvDesign {
            n_samples,
            sample_fraction,
            seed,
            stratify: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::argument("need at least one sample"));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return Err(Error::argument(format!(
                "sample fraction must be in (0, 1), got {}",
                self.sample_fraction
            )));
        }
        Ok(())
    }
}

/// In/out-of-sample reports for one sex of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SexCvReports {
    pub sex: Sex,
    pub in_sample: ErrorReport,
    pub out_of_sample: ErrorReport,
}

/// One completed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSample {
    pub sample_index: usize,
    pub by_sex: Vec<SexCvReports>,
}

/// A sample whose calibration failed; the run continues without it.
#[derive(Debug, Clone, PartialEq)]
pub struct CvFailure {
    pub sample_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub samples: Vec<CvSample>,
    pub failures: Vec<CvFailure>,
}

/// Membership flags for one corpus: true = calibrating (in-sample).
fn draw_membership(
    rng: &mut ChaCha8Rng,
    corpus: &Corpus,
    fraction: f64,
    stratify: bool,
) -> Vec<bool> {
    let len = corpus.len();
    let target = ((fraction * len as f64).round() as usize).clamp(1, len - 1);
    let mut selected = vec![false; len];
    if stratify {
        // Deterministic population order, then a per-population draw.
        let mut by_pop: Vec<(&str, Vec<usize>)> = Vec::new();
        for (idx, s) in corpus.schedules.iter().enumerate() {
            match by_pop
                .iter_mut()
                .find(|(code, _)| *code == s.population_code)
            {
                Some((_, v)) => v.push(idx),
                None => by_pop.push((&s.population_code, vec![idx])),
            }
        }
        by_pop.sort_by_key(|(code, _)| code.to_owned());
        for (_, mut indices) in by_pop {
            let take = ((fraction * indices.len() as f64).round() as usize).min(indices.len());
            indices.shuffle(rng);
            for &idx in indices.iter().take(take) {
                selected[idx] = true;
            }
        }
        // Keep both partitions non-empty.
        if selected.iter().all(|&b| b) {
            selected[len - 1] = false;
        }
        if !selected.iter().any(|&b| b) {
            selected[0] = true;
        }
    } else {
        let mut indices: Vec<usize> = (0..len).collect();
        indices.shuffle(rng);
        for &idx in indices.iter().take(target) {
            selected[idx] = true;
        }
    }
    selected
}

fn split(corpus: &Corpus, membership: &[bool]) -> (Corpus, Corpus) {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (schedule, &is_in) in corpus.schedules.iter().zip(membership) {
        if is_in {
            inside.push(schedule.clone());
        } else {
            outside.push(schedule.clone());
        }
    }
    (
        Corpus::new(inside, format!("{} (in-sample)", corpus.provenance)),
        Corpus::new(outside, format!("{} (out-of-sample)", corpus.provenance)),
    )
}

/// The two corpora "align" when they list the same (population, year)
/// labels in the same order; aligned corpora share each sample's draw.
fn aligned(corpus_f: &Corpus, corpus_m: &Corpus) -> bool {
    corpus_f.len() == corpus_m.len()
        && corpus_f
            .schedules
            .iter()
            .zip(&corpus_m.schedules)
            .all(|(a, b)| a.population_code == b.population_code && a.year == b.year)
}

#[allow(clippy::too_many_arguments)]
fn run_sample(
    sample_index: usize,
    corpus_f: &Corpus,
    corpus_m: &Corpus,
    design: &CvDesign,
    input_mode: InputMode,
    offset: f64,
    n_components: usize,
    share_draw: bool,
) -> std::result::Result<CvSample, CvFailure> {
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    rng.set_stream(sample_index as u64 + 1);

    let membership_f = draw_membership(&mut rng, corpus_f, design.sample_fraction, design.stratify);
    let membership_m = if share_draw {
        membership_f.clone()
    } else {
        draw_membership(&mut rng, corpus_m, design.sample_fraction, design.stratify)
    };

    let fail = |message: String| CvFailure {
        sample_index,
        message,
    };

    let (in_f, out_f) = split(corpus_f, &membership_f);
    let (in_m, out_m) = split(corpus_m, &membership_m);
    let model = calibrate(&in_f, &in_m, offset, n_components).map_err(|e| fail(e.to_string()))?;

    let mut by_sex = Vec::with_capacity(2);
    for (inside, outside) in [(&in_f, &out_f), (&in_m, &out_m)] {
        let sex = inside.uniform_sex().map_err(|e| fail(e.to_string()))?;
        let in_report =
            prediction_errors_with_status(inside, &model, input_mode, SampleStatus::InSample)
                .map_err(|e| fail(e.to_string()))?;
        let out_report =
            prediction_errors_with_status(outside, &model, input_mode, SampleStatus::OutOfSample)
                .map_err(|e| fail(e.to_string()))?;
        by_sex.push(SexCvReports {
            sex,
            in_sample: in_report,
            out_of_sample: out_report,
        });
    }
    Ok(CvSample {
        sample_index,
        by_sex,
    })
}

/// Run the full cross-validation design.
pub fn cross_validate(
    corpus_f: &Corpus,
    corpus_m: &Corpus,
    design: &CvDesign,
    input_mode: InputMode,
    offset: f64,
    n_components: usize,
) -> Result<CvResult> {
    design.validate()?;
    for corpus in [corpus_f, corpus_m] {
        if corpus.len() < 2 {
            return Err(Error::argument(
                "cross-validation needs at least two schedules per sex",
            ));
        }
    }
    let share_draw = aligned(corpus_f, corpus_m);

    let outcomes: Vec<std::result::Result<CvSample, CvFailure>> = (0..design.n_samples)
        .into_par_iter()
        .map(|i| {
            run_sample(
                i,
                corpus_f,
                corpus_m,
                design,
                input_mode,
                offset,
                n_components,
                share_draw,
            )
        })
        .collect();

    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(sample) => samples.push(sample),
            Err(failure) => failures.push(failure),
        }
    }
    Ok(CvResult { samples, failures })
}

/// Pool reports across samples: one report per (sex, in/out status).
pub fn pooled_reports(result: &CvResult) -> Result<Vec<ErrorReport>> {
    let mut out = Vec::new();
    for sex in Sex::BOTH {
        for in_sample in [true, false] {
            let parts: Vec<&ErrorReport> = result
                .samples
                .iter()
                .flat_map(|s| s.by_sex.iter())
                .filter(|r| r.sex == sex)
                .map(|r| {
                    if in_sample {
                        &r.in_sample
                    } else {
                        &r.out_of_sample
                    }
                })
                .collect();
            if !parts.is_empty() {
                out.push(ErrorReport::pooled(&parts)?);
            }
        }
    }
    Ok(out)
}
