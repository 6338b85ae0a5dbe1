//! JSON model and policy files.
//!
//! ```json
//! { "states": ["s1", "s2"], "actions": ["a"],
//!   "transitions": { "a": [[1.0, 0.0], [0.2, 0.8]] },
//!   "costs": [[0.0], [1.0]] }
//! ```
//!
//! A policy file maps state labels either to an action label or to a
//! distribution over action labels:
//! `{"policy": {"s1": "a", "s2": {"a": 0.5, "b": 0.5}}}`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use riskmdp_core::{Error as CoreError, MdpModel, StationaryPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub transitions: BTreeMap<String, Vec<Vec<f64>>>,
    pub costs: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(model: &MdpModel) -> Self {
        ModelFile {
            states: model.state_labels().to_vec(),
            actions: model.action_labels().to_vec(),
            transitions: model.action_labels().iter().cloned().zip(model.kernel().iter().cloned()).collect(),
            costs: model.costs().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn into_model(self) -> Result<MdpModel, CliError> {
        check_unique("state", &self.states)?;
        check_unique("action", &self.actions)?;
        let mut transitions = self.transitions;
        let mut kernel = Vec::with_capacity(self.actions.len());
        for a in &self.actions {
            let m = transitions
                .remove(a)
                .ok_or_else(|| CliError::Model(format!("no transition matrix for action \"{a}\"")))?;
            kernel.push(m);
        }
        if let Some(extra) = transitions.keys().next() {
            return Err(CliError::Model(format!("transition matrix for undeclared action \"{extra}\"")));
        }
        let states = self.states.clone();
        let actions = self.actions.clone();
        MdpModel::new(self.states, self.actions, kernel, self.costs).map_err(|e| describe(e, &states, &actions))
    }
}

fn check_unique(what: &str, labels: &[String]) -> Result<(), CliError> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(CliError::Model(format!("duplicate {what} label \"{l}\"")));
        }
    }
    Ok(())
}

/// Restate index-based validation errors with the file's labels.
fn describe(e: CoreError, states: &[String], actions: &[String]) -> CliError {
    let st = |i: usize| states.get(i).map_or_else(|| i.to_string(), |s| format!("\"{s}\""));
    let act = |u: Option<usize>| match u {
        Some(u) => format!(", action {}", actions.get(u).map_or_else(|| u.to_string(), |a| format!("\"{a}\""))),
        None => String::new(),
    };
    match e {
        CoreError::RowSum { state, action, deviation } => CliError::Model(format!(
            "transition row (state {}{}) sums to {} (deviation {deviation:+e})",
            st(state),
            act(action),
            1.0 + deviation
        )),
        CoreError::BadProbability { state, action, target, value } => CliError::Model(format!(
            "transition probability to state {} from (state {}{}) is {value}",
            st(target),
            st(state),
            act(action)
        )),
        CoreError::NonFiniteCost { state, action } => {
            CliError::Model(format!("cost of (state {}{}) is not finite", st(state), act(Some(action))))
        }
        other => other.into(),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn parse_model(text: &str, path: &Path) -> Result<MdpModel, CliError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    file.into_model()
}

/// A loaded model together with the digest of its canonical JSON form.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: MdpModel,
    pub digest: String,
}

pub fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = read(path)?;
    let model = parse_model(&text, path)?;
    let digest = canonical_digest(&text).map_err(|message| CliError::Parse { path: path.to_path_buf(), message })?;
    Ok(LoadedModel { model, digest })
}

/// SHA-256 of the document re-serialized with sorted keys and no
/// whitespace, so formatting and key order do not change the digest.
pub fn canonical_digest(text: &str) -> Result<String, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let canonical = serde_json::to_string(&value).map_err(|e| e.to_string())?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    policy: BTreeMap<String, PolicyEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PolicyEntry {
    Pure(String),
    Mixed(BTreeMap<String, f64>),
}

pub fn load_policy(path: &Path, model: &MdpModel) -> Result<StationaryPolicy, CliError> {
    let text = read(path)?;
    parse_policy(&text, path, model)
}

pub fn parse_policy(text: &str, path: &Path, model: &MdpModel) -> Result<StationaryPolicy, CliError> {
    let bad = |message: String| CliError::Parse { path: path.to_path_buf(), message };
    let file: PolicyFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let action_index = |a: &str| {
        model.action_labels().iter().position(|x| x == a).ok_or_else(|| bad(format!("unknown action \"{a}\"")))
    };
    let mut rows = Vec::with_capacity(model.num_states());
    for state in model.state_labels() {
        let entry = file.policy.get(state).ok_or_else(|| bad(format!("no entry for state \"{state}\"")))?;
        let mut row = vec![0.0; model.num_actions()];
        match entry {
            PolicyEntry::Pure(a) => row[action_index(a)?] = 1.0,
            PolicyEntry::Mixed(dist) => {
                for (a, &p) in dist {
                    row[action_index(a)?] += p;
                }
            }
        }
        rows.push(row);
    }
    if let Some(extra) = file.policy.keys().find(|k| !model.state_labels().contains(k)) {
        return Err(bad(format!("unknown state \"{extra}\"")));
    }
    StationaryPolicy::new(rows).map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{"states":["1","2"],"actions":["u"],
        "transitions":{"u":[[1.0,0.0],[0.2,0.8]]},"costs":[[0.0],[1.0]]}"#;

    #[test]
    fn digest_ignores_layout() {
        let spaced = r#"{ "costs": [[0.0],[1.0]], "actions": ["u"], "states": ["1","2"],
            "transitions": { "u": [[1.0, 0.0], [0.2, 0.8]] } }"#;
        assert_eq!(canonical_digest(EXAMPLE).unwrap(), canonical_digest(spaced).unwrap());
        assert_eq!(canonical_digest(EXAMPLE).unwrap().len(), 64);
    }

    #[test]
    fn row_sum_names_the_row() {
        let text = EXAMPLE.replace("[0.2,0.8]", "[0.2,0.7]");
        let err = parse_model(&text, Path::new("m.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("state \"2\"") && msg.contains("action \"u\""), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn round_trip() {
        let m = parse_model(EXAMPLE, Path::new("m.json")).unwrap();
        let again = parse_model(&ModelFile::from_model(&m).to_json(), Path::new("m.json")).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn transitions_must_match_actions() {
        let text = EXAMPLE.replace("\"u\":[[", "\"w\":[[");
        assert!(parse_model(&text, Path::new("m.json")).is_err());
    }

    #[test]
    fn policies_pure_and_mixed() {
        let text = r#"{"states":["x","y"],"actions":["a","b"],
            "transitions":{"a":[[1,0],[0,1]],"b":[[0,1],[1,0]]},"costs":[[0,1],[1,0]]}"#;
        let m = parse_model(text, Path::new("m.json")).unwrap();
        let p = parse_policy(r#"{"policy":{"x":"b","y":{"a":0.25,"b":0.75}}}"#, Path::new("p"), &m).unwrap();
        assert_eq!(p.rows(), &[vec![0.0, 1.0], vec![0.25, 0.75]]);
        assert!(parse_policy(r#"{"policy":{"x":"c","y":"a"}}"#, Path::new("p"), &m).is_err());
        assert!(parse_policy(r#"{"policy":{"x":"a"}}"#, Path::new("p"), &m).is_err());
    }
}
