//! Seeded cross-validation: calibrate on repeated half-samples, score
//! every schedule, and compare in- versus out-of-sample error profiles.
//!
//! ```bash
//! cargo run --example cross_validation
//! ```

use svdcomp::calibration::{DEFAULT_COMPONENTS, DEFAULT_OFFSET};
use svdcomp::synth;
use svdcomp::validation::{cross_validate, pooled_reports, CvDesign, InputMode};

fn main() -> anyhow::Result<()> {
    let (female, male) = synth::corpora();
    let design = CvDesign::new(10, 0.5, 42);
    let result = cross_validate(
        &female,
        &male,
        &design,
        InputMode::ChildOnly,
        DEFAULT_OFFSET,
        DEFAULT_COMPONENTS,
    )?;
    println!(
        "{} samples completed, {} failed",
        result.samples.len(),
        result.failures.len()
    );

    for report in pooled_reports(&result)? {
        println!(
            "{:<7} {:<13} n={:<4} overall median {:+.3e}, iqr {:.3e}",
            report.sex.to_string(),
            report.sample_status.to_string(),
            report.n_schedules,
            report.overall_median,
            report.overall_iqr
        );
    }

    // Per-age interquartile ranges, in vs out, every tenth age.
    let pooled = pooled_reports(&result)?;
    println!("\nage,in_q25,in_q75,out_q25,out_q75");
    let inside = &pooled[0];
    let outside = &pooled[1];
    for age in (0..110).step_by(10) {
        let i = inside.per_age_quantiles[age];
        let o = outside.per_age_quantiles[age];
        println!("{age},{:.3e},{:.3e},{:.3e},{:.3e}", i[1], i[3], o[1], o[3]);
    }
    Ok(())
}
