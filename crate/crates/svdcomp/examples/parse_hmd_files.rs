//! Ingest HMD-format 1x1 life-table files and apply the default
//! exclusion list.
//!
//! Points at the bundled synthetic data directory by default; pass a
//! directory of real HMD files to parse those instead:
//!
//! ```bash
//! cargo run --example parse_hmd_files [-- /path/to/hmd_statistics]
//! ```

use svdcomp::cli::load_hmd_dir;
use svdcomp::lifetable::{apply_exclusions, default_exclusion_rules, Sex};

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| format!("{}/data/synthetic", env!("CARGO_MANIFEST_DIR")));
    println!("reading {dir}");

    let (corpus, skipped) = load_hmd_dir(std::path::Path::new(&dir))?;
    println!(
        "parsed {} schedules; {} year(s) skipped",
        corpus.len(),
        skipped.len()
    );
    for skip in skipped.iter().take(10) {
        println!(
            "  skipped {} {} {}: {}",
            skip.population_code, skip.sex, skip.year, skip.reason
        );
    }

    let rules = default_exclusion_rules();
    let filtered = apply_exclusions(&corpus, &rules);
    println!(
        "exclusion rules removed {} schedules; {} remain",
        corpus.len() - filtered.len(),
        filtered.len()
    );

    for sex in Sex::BOTH {
        let sub = filtered.filter_sex(sex);
        if sub.is_empty() {
            continue;
        }
        let years: Vec<i32> = sub.schedules.iter().map(|s| s.year).collect();
        let q5s: Vec<f64> = sub.schedules.iter().map(|s| s.child_mortality()).collect();
        println!(
            "{sex}: {} schedules, years {}..{}, 5q0 range [{:.4}, {:.4}]",
            sub.len(),
            years.iter().min().unwrap(),
            years.iter().max().unwrap(),
            q5s.iter().cloned().fold(1.0, f64::min),
            q5s.iter().cloned().fold(0.0, f64::max),
        );
    }
    Ok(())
}
