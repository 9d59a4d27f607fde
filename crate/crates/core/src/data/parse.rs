use std::io::Read;
use std::path::Path;

use super::{statlog_specs, Dataset, STATLOG_FEATURES};
use crate::error::{Error, Result};

const STATLOG_FIELDS: usize = 14;

/// Short column names used by the UCI documentation, accepted as CSV headers.
const UCI_ALIASES: [&str; 13] = [
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak",
    "slope", "ca", "thal",
];

fn statlog_label(token: f64, line: usize) -> Result<u8> {
    if token == 1.0 {
        Ok(0)
    } else if token == 2.0 {
        Ok(1)
    } else {
        Err(Error::Domain(format!(
            "line {line}: class label {token} is not 1 (absence) or 2 (presence)"
        )))
    }
}

fn number(token: &str, line: usize) -> Result<f64> {
    match token.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse { line, msg: format!("'{token}' is not a finite number") }),
    }
}

/// Parses the whitespace-separated Statlog heart layout: 13 features then a
/// class label in `{1, 2}` per line. Blank lines are skipped.
pub fn parse_statlog<R: Read>(mut reader: R) -> Result<Dataset> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != STATLOG_FIELDS {
            return Err(Error::Parse {
                line,
                msg: format!("expected {STATLOG_FIELDS} values, found {}", tokens.len()),
            });
        }
        let row = tokens
            .iter()
            .map(|t| number(t, line))
            .collect::<Result<Vec<_>>>()?;
        labels.push(statlog_label(row[13], line)?);
        values.extend_from_slice(&row[..13]);
    }
    if labels.is_empty() {
        return Err(Error::NoRecords);
    }
    Dataset::new(values, labels, statlog_specs())
}

fn feature_slot(header: &str) -> Option<usize> {
    let h = header.trim().to_ascii_lowercase();
    STATLOG_FEATURES
        .iter()
        .position(|(name, _)| name.to_ascii_lowercase() == h)
        .or_else(|| UCI_ALIASES.iter().position(|a| *a == h))
}

/// Parses a CSV with a header row. The 13 feature columns are matched to the
/// Statlog names case-insensitively (in any order); the single remaining
/// column is the class label, using the same `{1, 2}` convention.
pub fn parse_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .clone();

    let mut slots = vec![None; headers.len()];
    let mut label_col = None;
    for (c, h) in headers.iter().enumerate() {
        match feature_slot(h) {
            Some(slot) if slots.contains(&Some(slot)) => {
                return Err(Error::Parse { line: 1, msg: format!("duplicate column '{h}'") });
            }
            Some(slot) => slots[c] = Some(slot),
            None if label_col.is_none() => label_col = Some(c),
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unknown column '{h}' (label column already taken)"),
                });
            }
        }
    }
    let Some(label_col) = label_col else {
        return Err(Error::Parse { line: 1, msg: "no class label column".into() });
    };
    if slots.iter().flatten().count() != 13 {
        return Err(Error::Parse {
            line: 1,
            msg: "header must name all 13 heart features".into(),
        });
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} values, found {}", headers.len(), rec.len()),
            });
        }
        let mut row = [0.0; 13];
        for (c, tok) in rec.iter().enumerate() {
            let v = number(tok, line)?;
            match slots[c] {
                Some(slot) => row[slot] = v,
                None if c == label_col => labels.push(statlog_label(v, line)?),
                None => unreachable!(),
            }
        }
        values.extend_from_slice(&row);
    }
    if labels.is_empty() {
        return Err(Error::NoRecords);
    }
    Dataset::new(values, labels, statlog_specs())
}

/// Reads `path` as CSV when it ends in `.csv`, otherwise as Statlog `.dat`.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_csv(file)
    } else {
        parse_statlog(file)
    }
}
