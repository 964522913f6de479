//! Full-pipeline integration test on a heterogeneous mock archive:
//! several populations with different year ranges and mortality regimes,
//! a year with a missing cell, an exclusion-listed year, and boundary
//! probabilities that need clamping.

use std::fs;

use svdcomp::calibration::{calibrate, corpus_fingerprint, DEFAULT_COMPONENTS, DEFAULT_OFFSET};
use svdcomp::cli::load_hmd_dir;
use svdcomp::lifetable::{apply_exclusions, expit, ExclusionRule, Sex, AGE_GROUPS};
use svdcomp::validation::{
    cross_validate, prediction_errors, total_absolute_error, AgeGrouping, CvDesign, InputMode,
};

/// A population's worth of life-table text with its own mortality regime.
fn population_text(
    sex: Sex,
    pop_seed: f64,
    years: std::ops::Range<i32>,
    break_year: Option<i32>,
) -> String {
    let mut out = format!("Mockland {pop_seed}, Life tables (period 1x1), {sex:?}\n\n");
    out.push_str("  Year          Age         mx           qx           ax           lx           dx           Lx           Tx           ex\n");
    for year in years {
        let t = (year - 1900) as f64 / 100.0;
        for age in 0..AGE_GROUPS {
            let a = age as f64;
            // A plausible logit-mortality surface that varies by
            // population, year, and sex.
            let level = -6.2 + pop_seed * 0.4 - 1.5 * t;
            let aging = 0.062 * a + if sex == Sex::Male { 0.004 * a } else { 0.0 };
            let infant = (2.6 - pop_seed * 0.2) * (-a / 2.2).exp();
            let hump = 0.7 * (-((a - 22.0) / 8.0) * ((a - 22.0) / 8.0)).exp();
            let mut q = expit(level + aging + infant + hump);
            if age == 109 && pop_seed > 2.0 {
                q = 1.0; // boundary cell, must be clamped on ingestion
            }
            let cell = if Some(year) == break_year && age == 71 {
                ".".to_owned() // missing cell, year must be skipped
            } else {
                format!("{q:.8}")
            };
            out.push_str(&format!(
                "  {year}     {age}     0.1    {cell}    0.5   100000    100     99000   5000000    40.0\n"
            ));
        }
        out.push_str(&format!(
            "  {year}     110+     0.7    1.00000    1.4   100    100     140   140    1.40\n"
        ));
    }
    out
}

#[test]
fn heterogeneous_archive_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let populations = [
        ("AAA", 1.0, 1880..1990),
        ("BBB", 2.0, 1920..2000),
        ("CCC", 3.0, 1950..2010),
    ];
    for (code, seed, years) in &populations {
        for sex in Sex::BOTH {
            let suffix = match sex {
                Sex::Female => "fltper_1x1",
                Sex::Male => "mltper_1x1",
            };
            // One broken year in BBB's female file.
            let break_year = (sex == Sex::Female && *code == "BBB").then_some(1944);
            let text = population_text(sex, *seed, years.clone(), break_year);
            fs::write(dir.path().join(format!("{code}.{suffix}.txt")), text).unwrap();
        }
    }

    let (corpus, skipped) = load_hmd_dir(dir.path()).unwrap();
    assert_eq!(skipped.len(), 1);
    assert_eq!(skipped[0].year, 1944);
    let expected_total: usize = populations.iter().map(|(_, _, y)| y.len()).sum::<usize>() * 2 - 1;
    assert_eq!(corpus.len(), expected_total);

    // Exclude a named stretch of one population.
    let rules = vec![ExclusionRule {
        population_code: "AAA".into(),
        sex: None,
        years: (1914..=1918).collect(),
    }];
    let corpus = apply_exclusions(&corpus, &rules);
    assert_eq!(corpus.len(), expected_total - 10);

    let female = corpus.filter_sex(Sex::Female);
    let male = corpus.filter_sex(Sex::Male);
    let model = calibrate(&female, &male, DEFAULT_OFFSET, DEFAULT_COMPONENTS).unwrap();
    assert_eq!(model.n_schedules, female.len() + male.len());
    assert_eq!(
        model.corpus_fingerprint,
        corpus_fingerprint([&female, &male])
    );

    // The four components capture a smooth three-population surface well.
    let fractions = &model
        .female
        .as_ref()
        .unwrap()
        .components
        .explained_fractions;
    let retained: f64 = fractions.iter().sum();
    assert!(retained > 0.9999, "retained energy {retained}");

    // Errors are small on the training corpus and better with both inputs.
    for corpus in [&female, &male] {
        let report = prediction_errors(corpus, &model, InputMode::ChildAdult).unwrap();
        for (age, q) in report.per_age_quantiles.iter().enumerate() {
            assert!(q[2].abs() < 0.025, "age {age}: median {}", q[2]);
        }
        let child =
            total_absolute_error(corpus, &model, InputMode::ChildOnly, AgeGrouping::FiveYear)
                .unwrap();
        let both =
            total_absolute_error(corpus, &model, InputMode::ChildAdult, AgeGrouping::FiveYear)
                .unwrap();
        assert!(both <= child);
    }

    // Stratified cross-validation over the three populations.
    let design = CvDesign {
        n_samples: 3,
        sample_fraction: 0.5,
        seed: 11,
        stratify: true,
    };
    let result = cross_validate(
        &female,
        &male,
        &design,
        InputMode::ChildOnly,
        DEFAULT_OFFSET,
        DEFAULT_COMPONENTS,
    )
    .unwrap();
    assert!(result.failures.is_empty());
    for sample in &result.samples {
        for reports in &sample.by_sex {
            assert!(reports.in_sample.n_schedules > 0 && reports.out_of_sample.n_schedules > 0);
        }
    }
}
