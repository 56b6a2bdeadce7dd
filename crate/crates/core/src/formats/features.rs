//! Feature stream files: one frame per line as `frame_index,ch0,...,chN`,
//! frame indices sequential from 0. Lines starting with `#` and blank lines
//! are ignored.

use std::path::Path;

use crate::oracle::FeatureFrame;

use super::FormatError;

pub fn parse_features(text: &str, path: &str) -> Result<Vec<FeatureFrame>, FormatError> {
    let mut frames: Vec<FeatureFrame> = Vec::new();
    let mut channels = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let index_field = fields.next().unwrap_or("");
        let index: usize = index_field.trim().parse().map_err(|_| {
            FormatError::parse(path, lineno, format!("bad frame index '{index_field}'"))
        })?;
        if index != frames.len() {
            return Err(FormatError::parse(
                path,
                lineno,
                format!(
                    "frame index {index} out of order (expected {})",
                    frames.len()
                ),
            ));
        }
        let mut values = Vec::new();
        for f in fields {
            let v: u32 = f.trim().parse().map_err(|_| {
                FormatError::parse(path, lineno, format!("bad feature value '{f}'"))
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(FormatError::parse(path, lineno, "frame has no channels"));
        }
        match channels {
            None => channels = Some(values.len()),
            Some(c) if c != values.len() => {
                return Err(FormatError::parse(
                    path,
                    lineno,
                    format!("frame has {} channels, expected {c}", values.len()),
                ));
            }
            Some(_) => {}
        }
        frames.push(FeatureFrame { values });
    }
    Ok(frames)
}

pub fn render_features(frames: &[FeatureFrame]) -> String {
    let mut out = String::new();
    for (i, f) in frames.iter().enumerate() {
        out.push_str(&i.to_string());
        for v in &f.values {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureFrame>, FormatError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(&shown, e))?;
    parse_features(&text, &shown)
}

pub fn write_features(path: &Path, frames: &[FeatureFrame]) -> Result<(), FormatError> {
    let shown = path.display().to_string();
    std::fs::write(path, render_features(frames)).map_err(|e| FormatError::io(&shown, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sequential_frames() {
        let text = "# features\n0,1,2,3\n1,4,5,6\n";
        let frames = parse_features(text, "mem").unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].values, vec![4, 5, 6]);
        assert_eq!(
            parse_features(&render_features(&frames), "mem").unwrap(),
            frames
        );
    }

    #[test]
    fn rejects_gaps_and_ragged_rows() {
        let err = parse_features("0,1,2\n2,3,4\n", "f.csv").unwrap_err();
        assert!(err.to_string().contains("f.csv:2"));
        let err = parse_features("0,1,2\n1,3\n", "f.csv").unwrap_err();
        assert!(err.to_string().contains("expected 2"));
    }
}
