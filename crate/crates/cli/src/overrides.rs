//! `dotted.path=value` assignments on a JSON document.
//!
//! The value is parsed as JSON when possible and taken as a string
//! otherwise. Numeric segments index arrays; missing object keys are
//! created.

use serde_json::{Map, Value};

use crate::error::CliError;

pub fn apply(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let bad = |msg: String| CliError::Config(format!("override '{assignment}': {msg}"));
    let (path, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value".into()))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(bad("empty path segment".into()));
    }
    let mut at = doc;
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth + 1 == segments.len();
        at = match at {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let len = items.len();
                let slot = seg
                    .parse::<usize>()
                    .ok()
                    .and_then(|i| items.get_mut(i))
                    .ok_or_else(|| bad(format!("'{seg}' is not an index below {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            other => return Err(bad(format!("cannot descend into {other} at '{seg}'"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nested_keys_arrays_and_strings() {
        let mut doc = json!({"ga": {"population_size": 10}, "pipeline": [{"stage": "classifier"}]});
        apply(&mut doc, "ga.population_size=50").unwrap();
        apply(&mut doc, "ga.alpha=0.5").unwrap();
        apply(&mut doc, "pipeline.0.learner=knn").unwrap();
        apply(&mut doc, "stack.meta_mode=oof:3").unwrap();
        assert_eq!(doc["ga"], json!({"population_size": 50, "alpha": 0.5}));
        assert_eq!(doc["pipeline"][0]["learner"], "knn");
        assert_eq!(doc["stack"]["meta_mode"], "oof:3");
        assert!(apply(&mut doc, "pipeline.4.learner=knn").is_err());
        assert!(apply(&mut doc, "ga.population_size.x=1").is_err());
        assert!(apply(&mut doc, "novalue").is_err());
        assert!(apply(&mut doc, "a..b=1").is_err());
    }
}
