//! Predict complete single-year mortality schedules from child mortality
//! alone, and from a (child, adult) pair.
//!
//! ```bash
//! cargo run --example predict_schedules
//! ```

use svdcomp::calibration::{calibrate, DEFAULT_COMPONENTS, DEFAULT_OFFSET};
use svdcomp::lifetable::Sex;
use svdcomp::prediction::{predict_adult, predict_schedule, predict_weights, PredictionRequest};
use svdcomp::synth;

fn main() -> anyhow::Result<()> {
    let (female, male) = synth::corpora();
    let model = calibrate(&female, &male, DEFAULT_OFFSET, DEFAULT_COMPONENTS)?;

    // One-parameter use: 45q15 is predicted from 5q0 first.
    let q5 = 0.05;
    let q45 = predict_adult(q5, Sex::Female, &model)?;
    let weights = predict_weights(q5, q45, Sex::Female, &model)?;
    println!("female, 5q0 = {q5}");
    println!("  predicted 45q15 = {q45:.5}");
    println!("  predicted weights = {weights:?}");

    let child_only = predict_schedule(&PredictionRequest::new(Sex::Female, q5), &model)?;
    println!(
        "  schedule aggregates: 5q0 = {:.5}, 45q15 = {:.5}",
        child_only.aggregate(0, 5)?,
        child_only.aggregate(15, 45)?
    );

    // Two-parameter use: supply the adult level directly.
    let both = predict_schedule(
        &PredictionRequest::new(Sex::Female, q5).with_adult(0.22),
        &model,
    )?;
    println!("female, 5q0 = {q5}, 45q15 = 0.22 supplied");
    println!("  schedule 45q15 = {:.5}", both.aggregate(15, 45)?);

    // Print a few schedules side by side as CSV.
    println!("\nage,qx_low,qx_mid,qx_high");
    let low = predict_schedule(&PredictionRequest::new(Sex::Male, 0.01), &model)?;
    let mid = predict_schedule(&PredictionRequest::new(Sex::Male, 0.05), &model)?;
    let high = predict_schedule(&PredictionRequest::new(Sex::Male, 0.2), &model)?;
    for age in 0..110 {
        println!(
            "{age},{:.6e},{:.6e},{:.6e}",
            low.qx[age], mid.qx[age], high.qx[age]
        );
    }
    Ok(())
}
