//! Corpus directories: `NNNN.pgm` images with `NNNN.truth.json` ground
//! truth, and `NNNN.json` transcription results.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{decode_image, encode_pgm, GrayImage};
use crate::pipeline::TranscriptionResult;
use crate::synth::GroundTruth;

pub const TRUTH_SUFFIX: &str = ".truth.json";

pub fn line_id(index: usize) -> String {
    format!("{index:04}")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_slice(&read(path)?).map_err(|e| Error::json(path, e))
}

pub fn read_image(path: &Path) -> Result<GrayImage> {
    decode_image(&read(path)?).map_err(|e| match e {
        Error::Decode(m) => Error::Decode(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_corpus(dir: &Path, lines: &[(GrayImage, GroundTruth)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, (img, truth)) in lines.iter().enumerate() {
        let id = line_id(i);
        write(&dir.join(format!("{id}.pgm")), &encode_pgm(img))?;
        let json = serde_json::to_string_pretty(truth).expect("truth serializes") + "\n";
        write(&dir.join(format!("{id}{TRUTH_SUFFIX}")), json.as_bytes())?;
    }
    Ok(())
}

/// Files in `dir` whose names end with `suffix`, sorted by name, paired
/// with the name minus the suffix.
pub fn list_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(id) = name.strip_suffix(suffix) {
            if path.is_file() && !id.is_empty() {
                out.push((id.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Every `<id>.truth.json` with its image, which must be `<id>.pgm` or `<id>.png`.
pub fn read_corpus(dir: &Path) -> Result<Vec<(String, GrayImage, GroundTruth)>> {
    list_with_suffix(dir, TRUTH_SUFFIX)?
        .into_iter()
        .map(|(id, truth_path)| {
            let truth: GroundTruth = read_json(&truth_path)?;
            let image_path = ["pgm", "png"]
                .iter()
                .map(|ext| dir.join(format!("{id}.{ext}")))
                .find(|p| p.is_file())
                .ok_or_else(|| {
                    Error::io(
                        dir.join(format!("{id}.pgm")),
                        std::io::Error::new(std::io::ErrorKind::NotFound, "image for ground truth not found"),
                    )
                })?;
            Ok((id, read_image(&image_path)?, truth))
        })
        .collect()
}

pub fn write_result(path: &Path, r: &TranscriptionResult) -> Result<()> {
    write(path, (r.to_json() + "\n").as_bytes())
}

pub fn read_result(path: &Path) -> Result<TranscriptionResult> {
    let text = String::from_utf8_lossy(&read(path)?).into_owned();
    TranscriptionResult::from_json(&text).map_err(|e| match e {
        Error::Model(m) => Error::Model(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Results `<id>.json` and truths `<id>.truth.json` paired by id; the two
/// id sets must coincide.
pub fn read_aligned(pred_dir: &Path, truth_dir: &Path) -> Result<(Vec<TranscriptionResult>, Vec<GroundTruth>)> {
    let preds: Vec<(String, PathBuf)> = list_with_suffix(pred_dir, ".json")?
        .into_iter()
        .filter(|(id, _)| !id.ends_with(".truth"))
        .collect();
    let truths = list_with_suffix(truth_dir, TRUTH_SUFFIX)?;
    let ids = |v: &[(String, PathBuf)]| v.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>();
    if ids(&preds) != ids(&truths) {
        return Err(Error::LengthMismatch(preds.len(), truths.len()));
    }
    let results = preds.iter().map(|(_, p)| read_result(p)).collect::<Result<Vec<_>>>()?;
    let gts = truths.iter().map(|(_, p)| read_json(p)).collect::<Result<Vec<_>>>()?;
    Ok((results, gts))
}
