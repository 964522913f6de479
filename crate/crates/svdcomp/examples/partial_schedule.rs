//! Complete a schedule from a handful of observed ages.
//!
//! The estimated weights come from a zero-intercept least-squares fit of
//! the observed logits on the model components, so the output smooths the
//! observations rather than interpolating them exactly.
//!
//! ```bash
//! cargo run --example partial_schedule
//! ```

use std::collections::BTreeMap;

use svdcomp::calibration::{calibrate, DEFAULT_COMPONENTS, DEFAULT_OFFSET};
use svdcomp::lifetable::Sex;
use svdcomp::prediction::fit_partial_schedule;
use svdcomp::synth;

fn main() -> anyhow::Result<()> {
    let (female, male) = synth::corpora();
    let model = calibrate(&female, &male, DEFAULT_OFFSET, DEFAULT_COMPONENTS)?;

    // Take sparse, slightly noisy observations from a real schedule.
    let truth = &female.schedules[60];
    let observed: BTreeMap<usize, f64> = [0usize, 1, 5, 15, 30, 45, 60, 75, 90]
        .iter()
        .enumerate()
        .map(|(i, &age)| {
            let noise = 1.0 + 0.03 * if i % 2 == 0 { 1.0 } else { -1.0 };
            (age, truth.q_at(age) * noise)
        })
        .collect();

    let fitted = fit_partial_schedule(&observed, Sex::Female, &model)?;
    println!("estimated weights: {:?}", fitted.weights_used);
    println!(
        "implied 45q15: {:.5} (true {:.5})",
        fitted.q45_used,
        truth.adult_mortality()
    );
    println!("\nage,observed,fitted,true");
    for age in 0..110 {
        let obs = observed
            .get(&age)
            .map(|q| format!("{q:.6e}"))
            .unwrap_or_default();
        println!("{age},{obs},{:.6e},{:.6e}", fitted.qx[age], truth.q_at(age));
    }
    Ok(())
}
