//! Inspect the calibrated age components and their kernel-smoothed
//! versions.
//!
//! Component i passes through unsmoothed at ages <= i and is smoothed
//! with a Gaussian kernel of bandwidth i+1 above that; predictions can
//! use either set.
//!
//! ```bash
//! cargo run --example smoothed_components > components.csv
//! ```

use svdcomp::calibration::{calibrate, DEFAULT_COMPONENTS, DEFAULT_OFFSET};
use svdcomp::lifetable::Sex;
use svdcomp::prediction::{predict_schedule, PredictionRequest};
use svdcomp::synth;

fn main() -> anyhow::Result<()> {
    let (female, male) = synth::corpora();
    let model = calibrate(&female, &male, DEFAULT_OFFSET, DEFAULT_COMPONENTS)?;
    let components = &model.sex_model(Sex::Female)?.components;

    eprintln!("singular values: {:?}", components.singular_values);
    eprintln!("explained fractions: {:?}", components.explained_fractions);

    // Smoothed predictions differ from raw ones mostly at old ages.
    let raw = predict_schedule(&PredictionRequest::new(Sex::Female, 0.05), &model)?;
    let mut request = PredictionRequest::new(Sex::Female, 0.05);
    request.use_smoothed = true;
    let smooth = predict_schedule(&request, &model)?;
    let worst = raw
        .qx
        .iter()
        .zip(&smooth.qx)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    eprintln!("largest raw-vs-smoothed probability difference: {worst:.3e}");

    println!("age,comp1,comp1_smooth,comp2,comp2_smooth,comp3,comp3_smooth,comp4,comp4_smooth");
    for age in 0..110 {
        let mut row = format!("{age}");
        for i in 0..4 {
            row.push_str(&format!(
                ",{:.6e},{:.6e}",
                components.components[i][age], components.smoothed_components[i][age]
            ));
        }
        println!("{row}");
    }
    Ok(())
}
