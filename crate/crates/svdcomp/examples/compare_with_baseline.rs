//! Compare the component model against the log-quadratic baseline on
//! five-year age groups.
//!
//! Published baseline coefficients load from a CSV
//! (`sex,age_group_start,n,a,b,c,v`); here a demonstration table is
//! fitted from the synthetic corpus so the example is self-contained.
//!
//! ```bash
//! cargo run --example compare_with_baseline
//! ```

use svdcomp::calibration::{calibrate, DEFAULT_COMPONENTS, DEFAULT_OFFSET};
use svdcomp::lifetable::Sex;
use svdcomp::synth;
use svdcomp::validation::{compare_models, fit_demo_coefficients, logquad_predict, LogQuadModel};

fn main() -> anyhow::Result<()> {
    let (female, male) = synth::corpora();
    let model = calibrate(&female, &male, DEFAULT_OFFSET, DEFAULT_COMPONENTS)?;
    let coefficients = fit_demo_coefficients(&female, &male)?;

    // The baseline's native age groups: 0, 1-4, then five-year groups.
    println!("baseline schedule at 5q0 = 0.05 (no adult input, k = 0):");
    for cell in logquad_predict(0.05, None, Sex::Female, &coefficients)? {
        println!(
            "  ages {:>3}-{:<3} q = {:.6}",
            cell.age_start,
            cell.age_start + cell.n - 1,
            cell.q
        );
    }

    // Matching a supplied 45q15 through the correction factor.
    let cells = logquad_predict(0.05, Some(0.25), Sex::Female, &coefficients)?;
    let survival: f64 = cells
        .iter()
        .filter(|c| c.age_start >= 15 && c.age_start < 60)
        .map(|c| 1.0 - c.q)
        .product();
    println!(
        "\nwith 45q15 = 0.25 supplied, achieved: {:.8}",
        1.0 - survival
    );

    let baseline = LogQuadModel::new(coefficients);
    let comparison = compare_models(&female, &male, &model, &baseline)?;
    println!("\ntotal absolute error comparison (five-year groups):");
    print!("{}", comparison.to_csv());
    Ok(())
}
