//! Calibrate a model from the bundled synthetic corpus and save the
//! artifact.
//!
//! ```bash
//! cargo run --example calibrate_and_save
//! ```
//!
//! Swap in your own corpus by parsing HMD 1x1 files (see the
//! `parse_hmd_files` example) and passing the resulting corpora to
//! [`svdcomp::calibration::calibrate`].

use svdcomp::calibration::{calibrate, save_model, DEFAULT_COMPONENTS, DEFAULT_OFFSET};
use svdcomp::synth;

fn main() -> anyhow::Result<()> {
    let (female, male) = synth::corpora();
    println!(
        "corpus: {} female + {} male schedules",
        female.len(),
        male.len()
    );

    let model = calibrate(&female, &male, DEFAULT_OFFSET, DEFAULT_COMPONENTS)?;

    for sex_model in [model.female.as_ref().unwrap(), model.male.as_ref().unwrap()] {
        println!("\n{} calibration:", sex_model.sex);
        println!(
            "  explained fractions: {:?}",
            sex_model.components.explained_fractions
        );
        for (i, wm) in sex_model.weight_models.models.iter().enumerate() {
            println!(
                "  weight model {}: r2 = {:.4}, residual sd = {:.2e}",
                i + 1,
                wm.r_squared,
                wm.residual_std_error
            );
        }
        println!(
            "  adult model:  r2 = {:.4}",
            sex_model.adult_model.r_squared
        );
        println!(
            "  infant model: r2 = {:.4}",
            sex_model.infant_model.r_squared
        );
        println!(
            "  input support: 5q0 in [{:.4}, {:.4}], 45q15 in [{:.4}, {:.4}]",
            sex_model.input_support.q5_min,
            sex_model.input_support.q5_max,
            sex_model.input_support.q45_min,
            sex_model.input_support.q45_max
        );
    }

    let path = std::env::temp_dir().join("svdcomp_example_model.json");
    save_model(&model, &path)?;
    println!("\nartifact written to {}", path.display());
    println!("fingerprint: {}", model.corpus_fingerprint);
    Ok(())
}
