//! Packed binary weight files.
//!
//! A weight file is a sequence of matrix records, one per synapse block in
//! layer order. Each record is a 16-byte header followed by the packed
//! rows:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SNNW"
//! 4       2     version (LE, currently 1)
//! 6       2     reserved (0)
//! 8       4     rows (LE)
//! 12      4     cols (LE)
//! 16      -     rows * ceil(cols/8) packed bytes, row-major, bit j of a
//!               byte is column 8k+j; bit 1 = +1, bit 0 = -1
//! ```
//!
//! A 128-wide row therefore occupies exactly 16 bytes. The bundled model
//! file wraps the same records with a header carrying the activation bit
//! width and per-layer thresholds:
//!
//! ```text
//! 0       4     magic "SNNB"
//! 4       2     version (LE, currently 1)
//! 6       2     activation bits
//! 8       4     layer count N (LE)
//! 12      4*N   thresholds (LE)
//! -       -     N-1 weight records as above
//! ```

use std::path::Path;

use crate::model::WeightMatrix;
use crate::oracle::BnnModel;

use super::FormatError;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"SNNW";
pub const MODEL_MAGIC: &[u8; 4] = b"SNNB";
pub const WEIGHTS_VERSION: u16 = 1;

fn put_record(out: &mut Vec<u8>, m: &WeightMatrix) {
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&m.rows().to_le_bytes());
    out.extend_from_slice(&m.cols().to_le_bytes());
    out.extend_from_slice(m.packed());
}

fn take_record(bytes: &[u8], at: &mut usize, path: &str) -> Result<WeightMatrix, FormatError> {
    let header = bytes
        .get(*at..*at + 16)
        .ok_or_else(|| FormatError::malformed(path, "truncated weight record header"))?;
    if &header[0..4] != WEIGHTS_MAGIC {
        return Err(FormatError::malformed(path, "bad weight record magic"));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != WEIGHTS_VERSION {
        return Err(FormatError::malformed(
            path,
            format!("weight record version {version} not supported"),
        ));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let cols = u32::from_le_bytes(header[12..16].try_into().unwrap());
    let len = rows as usize * WeightMatrix::row_stride_bytes(cols);
    let body = bytes
        .get(*at + 16..*at + 16 + len)
        .ok_or_else(|| FormatError::malformed(path, "truncated weight record body"))?;
    *at += 16 + len;
    WeightMatrix::from_packed(rows, cols, body.to_vec())
        .map_err(|e| FormatError::malformed(path, e.to_string()))
}

pub fn encode_weights(matrices: &[WeightMatrix]) -> Vec<u8> {
    let mut out = Vec::new();
    for m in matrices {
        put_record(&mut out, m);
    }
    out
}

pub fn decode_weights(bytes: &[u8], path: &str) -> Result<Vec<WeightMatrix>, FormatError> {
    let mut matrices = Vec::new();
    let mut at = 0;
    while at < bytes.len() {
        matrices.push(take_record(bytes, &mut at, path)?);
    }
    Ok(matrices)
}

pub fn write_weights(path: &Path, matrices: &[WeightMatrix]) -> Result<(), FormatError> {
    let shown = path.display().to_string();
    std::fs::write(path, encode_weights(matrices)).map_err(|e| FormatError::io(&shown, e))
}

pub fn read_weights(path: &Path) -> Result<Vec<WeightMatrix>, FormatError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(&shown, e))?;
    decode_weights(&bytes, &shown)
}

pub fn encode_model(model: &BnnModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.activation_bits as u16).to_le_bytes());
    out.extend_from_slice(&(model.thresholds.len() as u32).to_le_bytes());
    for t in &model.thresholds {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for m in &model.weights {
        put_record(&mut out, m);
    }
    out
}

pub fn decode_model(bytes: &[u8], path: &str) -> Result<BnnModel, FormatError> {
    let header = bytes
        .get(0..12)
        .ok_or_else(|| FormatError::malformed(path, "truncated model header"))?;
    if &header[0..4] != MODEL_MAGIC {
        return Err(FormatError::malformed(path, "bad model magic"));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != WEIGHTS_VERSION {
        return Err(FormatError::malformed(
            path,
            format!("model version {version} not supported"),
        ));
    }
    let bits = u16::from_le_bytes([header[6], header[7]]) as u32;
    let layers = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut at = 12;
    let mut thresholds = Vec::with_capacity(layers);
    for _ in 0..layers {
        let t = bytes
            .get(at..at + 4)
            .ok_or_else(|| FormatError::malformed(path, "truncated threshold list"))?;
        thresholds.push(u32::from_le_bytes(t.try_into().unwrap()));
        at += 4;
    }
    let mut weights = Vec::new();
    while at < bytes.len() {
        weights.push(take_record(bytes, &mut at, path)?);
    }
    if weights.len() + 1 != layers {
        return Err(FormatError::malformed(
            path,
            format!(
                "model holds {} weight records for {layers} layers",
                weights.len()
            ),
        ));
    }
    Ok(BnnModel::new(weights, thresholds, bits))
}

/// True when the file starts with the bundled-model magic rather than a bare
/// weight record.
pub fn is_model_file(bytes: &[u8]) -> bool {
    bytes.get(0..4) == Some(MODEL_MAGIC.as_slice())
}

pub fn write_model(path: &Path, model: &BnnModel) -> Result<(), FormatError> {
    let shown = path.display().to_string();
    std::fs::write(path, encode_model(model)).map_err(|e| FormatError::io(&shown, e))
}

pub fn read_model(path: &Path) -> Result<BnnModel, FormatError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(&shown, e))?;
    decode_model(&bytes, &shown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn a_full_width_row_occupies_sixteen_bytes() {
        let m = WeightMatrix::checkerboard(2, 128);
        let bytes = encode_weights(&[m]);
        assert_eq!(bytes.len(), 16 + 2 * 16);
    }

    #[test]
    fn weight_files_round_trip_bit_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let matrices: Vec<WeightMatrix> = (0..rng.gen_range(1..4))
                .map(|_| {
                    let rows = rng.gen_range(1..=64);
                    let cols = rng.gen_range(1..=128);
                    WeightMatrix::from_fn(rows, cols, |_, _| rng.gen_bool(0.5))
                })
                .collect();
            let bytes = encode_weights(&matrices);
            let back = decode_weights(&bytes, "mem").unwrap();
            assert_eq!(back, matrices);
            assert_eq!(encode_weights(&back), bytes);
        }
    }

    #[test]
    fn truncation_and_bad_magic_are_rejected() {
        let bytes = encode_weights(&[WeightMatrix::checkerboard(4, 9)]);
        assert!(decode_weights(&bytes[..bytes.len() - 1], "mem").is_err());
        let mut garbled = bytes.clone();
        garbled[0] = b'X';
        assert!(decode_weights(&garbled, "mem").is_err());
    }

    #[test]
    fn model_bundle_round_trips() {
        let model = BnnModel::new(
            vec![
                WeightMatrix::checkerboard(16, 8),
                WeightMatrix::checkerboard(8, 4),
            ],
            vec![1, 5, 2],
            6,
        );
        let bytes = encode_model(&model);
        assert!(is_model_file(&bytes));
        let back = decode_model(&bytes, "mem").unwrap();
        assert_eq!(back, model);
        assert!(!is_model_file(&encode_weights(&model.weights)));
    }
}
