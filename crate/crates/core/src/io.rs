//! Class file formats.
//!
//! Text (`.hc`): a header line `n m`, then `m` rows of exactly `n` characters
//! from `{0,1}`. Lines starting with `#` are comments. Custom names survive a
//! round trip through two comment lines, `# points: ...` and
//! `# hypotheses: ...`, written after the rows.
//!
//! Structured (`.json`): `{"domain": [names], "hypotheses": [{"name", "bits"}]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::class::HypothesisClass;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

impl Format {
    /// `.json` is structured, anything else is text.
    pub fn for_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Structured,
            _ => Format::Text,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StructuredHypothesis {
    name: String,
    bits: String,
}

#[derive(Serialize, Deserialize)]
struct StructuredClass {
    domain: Vec<String>,
    hypotheses: Vec<StructuredHypothesis>,
}

pub fn load(path: impl AsRef<Path>) -> Result<HypothesisClass> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse(&text)
}

/// Parses either format, sniffing a leading `{` for the structured one.
pub fn parse(text: &str) -> Result<HypothesisClass> {
    if text.trim_start().starts_with('{') {
        parse_structured(text)
    } else {
        parse_text(text)
    }
}

pub fn store(class: &HypothesisClass, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let body = match Format::for_path(path) {
        Format::Text => to_text(class)?,
        Format::Structured => to_structured(class)?,
    };
    fs::write(path, body)?;
    Ok(())
}

pub fn parse_text(text: &str) -> Result<HypothesisClass> {
    let mut lines = text.lines().enumerate();
    let (n, m) = loop {
        let Some((ln, line)) = lines.next() else {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "missing `n m` header".into(),
            });
        };
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        break parse_header(ln + 1, line)?;
    };

    let mut rows = Vec::with_capacity(m);
    let mut point_names = None;
    let mut hypothesis_names = None;
    for (ln, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("points:") {
                point_names = Some(rest.split_whitespace().map(String::from).collect::<Vec<_>>());
            } else if let Some(rest) = comment.strip_prefix("hypotheses:") {
                hypothesis_names =
                    Some(rest.split_whitespace().map(String::from).collect::<Vec<_>>());
            }
            continue;
        }
        if line.trim().is_empty() && (n > 0 || rows.len() >= m) {
            continue;
        }
        if rows.len() == m {
            return Err(Error::Parse {
                line: ln + 1,
                column: 1,
                message: format!("more than the declared {m} hypothesis rows"),
            });
        }
        let line = line.trim();
        let mut row = BitSet::new(line.len());
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => row.insert(col),
                other => {
                    return Err(Error::Parse {
                        line: ln + 1,
                        column: col + 1,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
        if row.len() != n {
            return Err(Error::LengthMismatch {
                row: rows.len(),
                expected: n,
                found: row.len(),
            });
        }
        rows.push(row);
    }
    if rows.len() != m {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            column: 1,
            message: format!("declared {m} hypothesis rows, found {}", rows.len()),
        });
    }
    HypothesisClass::new(n, rows)?.with_names(point_names, hypothesis_names)
}

fn parse_header(line_no: usize, line: &str) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let bad = |message: &str| Error::Parse {
        line: line_no,
        column: 1,
        message: message.into(),
    };
    let n = parts
        .next()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| bad("header must be `n m`"))?;
    let m = parts
        .next()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| bad("header must be `n m`"))?;
    if parts.next().is_some() {
        return Err(bad("header must be `n m`"));
    }
    Ok((n, m))
}

pub fn to_text(class: &HypothesisClass) -> Result<String> {
    let mut out = format!("{} {}\n", class.domain_size(), class.len());
    for row in class.rows() {
        out.push_str(&row.to_bit_string());
        out.push('\n');
    }
    if class.has_custom_names() {
        let points: Vec<String> = (0..class.domain_size()).map(|i| class.point_name(i)).collect();
        let hyps: Vec<String> = (0..class.len()).map(|j| class.hypothesis_name(j)).collect();
        if points.iter().chain(&hyps).any(|s| s.is_empty() || s.contains(char::is_whitespace)) {
            return Err(Error::domain(
                "names with whitespace need the structured format",
            ));
        }
        out.push_str(&format!("# points: {}\n", points.join(" ")));
        out.push_str(&format!("# hypotheses: {}\n", hyps.join(" ")));
    }
    Ok(out)
}

pub fn parse_structured(text: &str) -> Result<HypothesisClass> {
    let doc: StructuredClass = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = doc.domain.len();
    let mut rows = Vec::with_capacity(doc.hypotheses.len());
    for (j, h) in doc.hypotheses.iter().enumerate() {
        let row = BitSet::from_bit_str(&h.bits).ok_or_else(|| {
            Error::domain(format!("hypothesis {j} bits `{}` are not a 0/1 string", h.bits))
        })?;
        if row.len() != n {
            return Err(Error::LengthMismatch {
                row: j,
                expected: n,
                found: row.len(),
            });
        }
        rows.push(row);
    }
    let names = doc.hypotheses.into_iter().map(|h| h.name).collect();
    HypothesisClass::new(n, rows)?.with_names(Some(doc.domain), Some(names))
}

pub fn to_structured(class: &HypothesisClass) -> Result<String> {
    let doc = StructuredClass {
        domain: (0..class.domain_size()).map(|i| class.point_name(i)).collect(),
        hypotheses: (0..class.len())
            .map(|j| StructuredHypothesis {
                name: class.hypothesis_name(j),
                bits: class.row(j).to_bit_string(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    #[test]
    fn text_round_trip() {
        let full3 = generate::full(3).unwrap();
        assert_eq!(parse_text(&to_text(&full3).unwrap()).unwrap(), full3);
        let named = full3
            .clone()
            .with_names(Some(vec!["a".into(), "b".into(), "c".into()]), None)
            .unwrap();
        let back = parse_text(&to_text(&named).unwrap()).unwrap();
        assert_eq!(back, named);
        assert_ne!(back, full3);
    }

    #[test]
    fn structured_round_trip() {
        let t = generate::threshold(4);
        assert_eq!(parse(&to_structured(&t).unwrap()).unwrap(), t);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = generate::random(5, 9, 3).unwrap();
        for name in ["c.hc", "c.json"] {
            let p = dir.path().join(name);
            store(&c, &p).unwrap();
            assert_eq!(load(&p).unwrap(), c);
        }
    }

    #[test]
    fn duplicate_rows_rejected() {
        assert!(matches!(
            parse_text("2 2\n01\n01"),
            Err(Error::DuplicateRows { first: 0, second: 1 })
        ));
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            parse_text("3 1\n0101"),
            Err(Error::LengthMismatch { row: 0, expected: 3, found: 4 })
        ));
    }

    #[test]
    fn bad_character_position() {
        match parse_text("3 2\n010\n0x1\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_empty_class() {
        let c = parse_text("3 0\n# nothing here\n").unwrap();
        assert!(c.is_empty());
        let c = parse_text("2 1\n10\n# trailing\n").unwrap();
        assert_eq!(c.len(), 1);
        assert!(parse_text("2 2\n10\n").is_err());
    }
}
