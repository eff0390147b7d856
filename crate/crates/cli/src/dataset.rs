//! The `count,frequency` text format.

use std::collections::BTreeMap;
use std::path::Path;

use edm_core::inference::CountDataset;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("no records found")]
    Empty,
    #[error("{0}")]
    Dataset(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn at(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Line {
        line,
        message: message.into(),
    }
}

/// Parses one record per line, `count,frequency`. A trailing `+` on the
/// largest count marks an open tail; `#` starts a comment line; blank lines
/// are skipped. Counts must cover `0..=K` exactly once each.
pub fn parse_dataset(name: &str, text: &str) -> Result<CountDataset, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut records: BTreeMap<u64, (u64, usize)> = BTreeMap::new();
    let mut open: Option<(u64, usize)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(count), Some(freq), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(at(line_no, format!("expected 'count,frequency', got '{line}'")));
        };
        let count = count.trim();
        let (count, plus) = match count.strip_suffix('+') {
            Some(c) => (c.trim(), true),
            None => (count, false),
        };
        let k: u64 = count
            .parse()
            .map_err(|_| at(line_no, format!("count '{count}' is not a nonnegative integer")))?;
        let freq = freq.trim();
        let n: u64 = freq
            .parse()
            .map_err(|_| at(line_no, format!("frequency '{freq}' is not a nonnegative integer")))?;
        if let Some((_, first)) = records.get(&k) {
            return Err(at(line_no, format!("count {k} already given on line {first}")));
        }
        if plus {
            if let Some((_, first)) = open {
                return Err(at(line_no, format!("second open-tail record (first on line {first})")));
            }
            open = Some((k, line_no));
        }
        records.insert(k, (n, line_no));
    }
    let (&k_max, &(_, last_line)) = records.iter().next_back().ok_or(ParseError::Empty)?;
    if let Some((k, line)) = open {
        if k != k_max {
            return Err(at(
                line,
                format!("'+' must be on the largest count ({k_max}), found on {k}"),
            ));
        }
    }
    if records.len() as u64 != k_max + 1 {
        let missing = (0..=k_max).find(|k| !records.contains_key(k)).unwrap_or(0);
        return Err(at(
            last_line,
            format!("counts must run from 0 to {k_max} without gaps; {missing} is missing"),
        ));
    }
    let counts: Vec<u64> = records.values().map(|(n, _)| *n).collect();
    CountDataset::new(name, counts, open.is_some()).map_err(|e| ParseError::Dataset(e.to_string()))
}

pub fn read_dataset(path: &Path) -> Result<CountDataset, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    parse_dataset(name, &text)
}

/// Canonical text form; parsing it returns the same dataset.
pub fn format_dataset(data: &CountDataset) -> String {
    let last = data.max_count();
    let mut out = String::new();
    for (k, n) in data.counts().iter().enumerate() {
        let plus = if data.open_tail() && k == last { "+" } else { "" };
        out.push_str(&format!("{k}{plus},{n}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments_and_crlf() {
        let d = parse_dataset("x", "# claims\r\n0,10\r\n\r\n1, 4\r\n2+,1\r\n").unwrap();
        assert_eq!(d.counts(), &[10, 4, 1]);
        assert!(d.open_tail());
    }

    #[test]
    fn order_free() {
        let d = parse_dataset("x", "2,1\n0,5\n1,3\n").unwrap();
        assert_eq!(d.counts(), &[5, 3, 1]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_dataset("x", "0,1\n1,abc\n").unwrap_err();
        assert_eq!(err.to_string(), "line 2: frequency 'abc' is not a nonnegative integer");
        let err = parse_dataset("x", "0,1\n# c\n0,2\n").unwrap_err();
        assert!(matches!(err, ParseError::Line { line: 3, .. }));
        let err = parse_dataset("x", "0,1\n2,2\n").unwrap_err();
        assert!(err.to_string().contains("1 is missing"), "{err}");
        let err = parse_dataset("x", "0+,1\n1,2\n").unwrap_err();
        assert!(matches!(err, ParseError::Line { line: 1, .. }));
        assert!(parse_dataset("x", "0,1,2\n").is_err());
        assert!(parse_dataset("x", "-1,1\n").is_err());
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(parse_dataset("x", "").unwrap_err(), ParseError::Empty);
        assert_eq!(parse_dataset("x", "# nothing\n\n").unwrap_err(), ParseError::Empty);
        assert!(matches!(
            parse_dataset("x", "0,0\n1,0\n").unwrap_err(),
            ParseError::Dataset(_)
        ));
    }

    #[test]
    fn canonical_round_trip() {
        let d = parse_dataset("x", "0,2659\n1,244\n2,19\n3,2\n4+,0\n").unwrap();
        assert_eq!(parse_dataset("x", &format_dataset(&d)).unwrap(), d);
    }
}
