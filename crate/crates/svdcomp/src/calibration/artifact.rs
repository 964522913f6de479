//! Model artifact persistence: versioned JSON with an integrity checksum.
//!
//! The file layout is `{ format_version, checksum, model }`. The checksum
//! is the SHA-256 of the model's canonical (compact) JSON serialization,
//! so a truncated or edited file fails loudly instead of yielding a partial
//! model. Floats are written in shortest round-trip form, which
//! deserializes to bit-identical values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::CalibratedModel;
use crate::error::{Error, Result};
use crate::lifetable::Corpus;

pub const FORMAT_VERSION: u32 = 1;
pub const SUPPORTED_VERSIONS: &[u32] = &[1];

#[derive(Serialize)]
struct ArtifactRef<'a> {
    format_version: u32,
    checksum: String,
    model: &'a CalibratedModel,
}

#[derive(Deserialize)]
struct ArtifactOwned {
    format_version: u32,
    checksum: String,
    model: CalibratedModel,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn model_checksum(model: &CalibratedModel) -> Result<String> {
    let canonical = serde_json::to_string(model)
        .map_err(|e| Error::Format(format!("model not serializable: {e}")))?;
    Ok(sha256_hex(canonical.as_bytes()))
}

/// Write the model artifact. Repeated saves of the same model produce
/// byte-identical files.
pub fn save_model(model: &CalibratedModel, path: &Path) -> Result<()> {
    let artifact = ArtifactRef {
        format_version: model.format_version,
        checksum: model_checksum(model)?,
        model,
    };
    let json = serde_json::to_string_pretty(&artifact)
        .map_err(|e| Error::Format(format!("artifact not serializable: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// Load and verify a model artifact.
pub fn load_model(path: &Path) -> Result<CalibratedModel> {
    let text = fs::read_to_string(path)?;

    // Version gate before the full structural parse, so an unsupported
    // version reports as such rather than as a field mismatch.
    let probe: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Corruption(format!("artifact is not valid JSON: {e}")))?;
    let version = probe
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Format("artifact has no format_version".to_owned()))?;
    if !SUPPORTED_VERSIONS.contains(&(version as u32)) {
        return Err(Error::Format(format!(
            "artifact format_version {version} is not supported (supported: {SUPPORTED_VERSIONS:?})"
        )));
    }

    let artifact: ArtifactOwned = serde_json::from_str(&text)
        .map_err(|e| Error::Corruption(format!("artifact structure invalid: {e}")))?;
    if artifact.model.format_version != artifact.format_version {
        return Err(Error::Format(format!(
            "wrapper version {} disagrees with model version {}",
            artifact.format_version, artifact.model.format_version
        )));
    }
    let recomputed = model_checksum(&artifact.model)?;
    if recomputed != artifact.checksum {
        return Err(Error::Corruption(format!(
            "checksum mismatch: stored {}, recomputed {recomputed}",
            artifact.checksum
        )));
    }
    Ok(artifact.model)
}

/// Stable hex digest over the sorted (population, sex, year) triples of
/// one or more corpora; identifies what a model was calibrated on.
pub fn corpus_fingerprint<'a>(corpora: impl IntoIterator<Item = &'a Corpus>) -> String {
    let mut labels: Vec<String> = corpora
        .into_iter()
        .flat_map(|c| c.schedules.iter())
        .map(|s| format!("{}|{}|{}", s.population_code, s.sex, s.year))
        .collect();
    labels.sort();
    let mut hasher = Sha256::new();
    for label in labels {
        hasher.update(label.as_bytes());
        hasher.update(b"\n");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
