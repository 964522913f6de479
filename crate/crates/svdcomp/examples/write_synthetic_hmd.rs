//! Regenerate the bundled HMD-format synthetic data files in
//! `data/synthetic/`. The corpus is deterministic, so this only changes
//! anything when the generator itself changes.
//!
//! ```bash
//! cargo run --example write_synthetic_hmd
//! ```

use std::fs;
use std::path::Path;

use svdcomp::lifetable::Sex;
use svdcomp::synth;

fn main() -> anyhow::Result<()> {
    let out_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    fs::create_dir_all(&out_dir)?;

    for (sex, file, title) in [
        (
            Sex::Female,
            "SYN.fltper_1x1.txt",
            "Synthetica, Life tables (period 1x1), Females\tLast modified: generated; Methods: four-component synthetic corpus",
        ),
        (
            Sex::Male,
            "SYN.mltper_1x1.txt",
            "Synthetica, Life tables (period 1x1), Males\tLast modified: generated; Methods: four-component synthetic corpus",
        ),
    ] {
        let corpus = synth::corpus(sex);
        let text = synth::hmd_text(&corpus, title);
        let path = out_dir.join(file);
        fs::write(&path, text)?;
        println!("wrote {} ({} schedules)", path.display(), corpus.len());
    }
    Ok(())
}
