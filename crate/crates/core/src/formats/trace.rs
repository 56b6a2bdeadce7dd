//! Spike trace files: a version header line, then one spike per line as
//! `time_us,channel,polarity` with polarity `+` or `-`. Lines starting with
//! `#` and blank lines are ignored.

use std::path::Path;

use crate::model::{Polarity, SpikeEvent};
use crate::time::SimTime;

use super::FormatError;

pub const TRACE_HEADER: &str = "trace v1";

pub fn parse_trace(text: &str, path: &str) -> Result<Vec<SpikeEvent>, FormatError> {
    Ok(parse_trace_with_lines(text, path)?.0)
}

/// As [`parse_trace`], additionally returning the 1-based source line of
/// each spike so later validation failures can name the line.
pub fn parse_trace_with_lines(
    text: &str,
    path: &str,
) -> Result<(Vec<SpikeEvent>, Vec<usize>), FormatError> {
    let mut spikes = Vec::new();
    let mut lines = Vec::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != TRACE_HEADER {
                return Err(FormatError::parse(
                    path,
                    lineno,
                    format!("expected header '{TRACE_HEADER}', found '{line}'"),
                ));
            }
            saw_header = true;
            continue;
        }
        let mut fields = line.split(',');
        let (Some(t), Some(ch), Some(pol), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(FormatError::parse(
                path,
                lineno,
                "expected 'time_us,channel,polarity'",
            ));
        };
        let time: u64 = t
            .trim()
            .parse()
            .map_err(|_| FormatError::parse(path, lineno, format!("bad time '{t}'")))?;
        let channel: u16 = ch
            .trim()
            .parse()
            .map_err(|_| FormatError::parse(path, lineno, format!("bad channel '{ch}'")))?;
        let polarity = match pol.trim() {
            "+" => Polarity::Plus,
            "-" => Polarity::Minus,
            other => {
                return Err(FormatError::parse(
                    path,
                    lineno,
                    format!("bad polarity '{other}' (expected + or -)"),
                ))
            }
        };
        spikes.push(SpikeEvent {
            time: SimTime(time),
            target_core: 0,
            target_neuron: channel,
            polarity,
        });
        lines.push(lineno);
    }
    if !saw_header {
        return Err(FormatError::malformed(path, "missing trace header"));
    }
    Ok((spikes, lines))
}

pub fn render_trace(spikes: &[SpikeEvent]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for s in spikes {
        out.push_str(&format!(
            "{},{},{}\n",
            s.time.ticks(),
            s.target_neuron,
            s.polarity
        ));
    }
    out
}

pub fn read_trace(path: &Path) -> Result<Vec<SpikeEvent>, FormatError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(&shown, e))?;
    parse_trace(&text, &shown)
}

pub fn read_trace_with_lines(path: &Path) -> Result<(Vec<SpikeEvent>, Vec<usize>), FormatError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(&shown, e))?;
    parse_trace_with_lines(&text, &shown)
}

pub fn write_trace(path: &Path, spikes: &[SpikeEvent]) -> Result<(), FormatError> {
    let shown = path.display().to_string();
    std::fs::write(path, render_trace(spikes)).map_err(|e| FormatError::io(&shown, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "trace v1\n# comment\n100,3,+\n250,0,-\n";
        let spikes = parse_trace(text, "mem").unwrap();
        assert_eq!(spikes.len(), 2);
        assert_eq!(spikes[0].time, SimTime(100));
        assert_eq!(spikes[0].target_neuron, 3);
        assert_eq!(spikes[0].polarity, Polarity::Plus);
        assert_eq!(spikes[1].polarity, Polarity::Minus);
        let rendered = render_trace(&spikes);
        assert_eq!(parse_trace(&rendered, "mem").unwrap(), spikes);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "trace v1\n100,3,+\nbogus line\n";
        let err = parse_trace(text, "t.csv").unwrap_err();
        assert_eq!(
            err.to_string(),
            "t.csv:3: expected 'time_us,channel,polarity'"
        );

        let text = "trace v1\n100,3,*\n";
        let err = parse_trace(text, "t.csv").unwrap_err();
        assert!(err.to_string().starts_with("t.csv:2: bad polarity"));
    }

    #[test]
    fn header_is_required() {
        assert!(parse_trace("100,3,+\n", "mem").is_err());
        assert!(parse_trace("", "mem").is_err());
        assert!(parse_trace("trace v2\n", "mem").is_err());
    }
}
