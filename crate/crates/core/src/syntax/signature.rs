//! Action signatures: a finite Kripke frame of action types with a fixed
//! enumeration, loaded from JSON.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ast::Agent;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    name: String,
    agents: BTreeSet<Agent>,
    /// The fixed enumeration sigma_1..sigma_n (0-indexed internally).
    types: Vec<String>,
    /// Arrows between action types, per agent, by type index.
    arrows: BTreeMap<Agent, BTreeSet<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("signature has no action types")]
    Empty,
    #[error("duplicate action type {0:?} in enumeration")]
    DuplicateType(String),
    #[error("duplicate agent {0:?}")]
    DuplicateAgent(String),
    #[error("arrow mentions undeclared agent {0:?}")]
    UnknownAgent(String),
    #[error("arrow endpoint {0:?} is not a declared action type")]
    UnknownType(String),
    #[error("invalid identifier {0:?}")]
    BadIdentifier(String),
    #[error("signature JSON: {0}")]
    Json(String),
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Signature {
    pub fn new(
        name: impl Into<String>,
        agents: Vec<String>,
        types: Vec<String>,
        arrows: BTreeMap<Agent, Vec<(String, String)>>,
    ) -> Result<Signature, SignatureError> {
        if types.is_empty() {
            return Err(SignatureError::Empty);
        }
        let mut agent_set = BTreeSet::new();
        for a in &agents {
            if !is_identifier(a) {
                return Err(SignatureError::BadIdentifier(a.clone()));
            }
            if !agent_set.insert(a.clone()) {
                return Err(SignatureError::DuplicateAgent(a.clone()));
            }
        }
        let mut index = BTreeMap::new();
        for (i, t) in types.iter().enumerate() {
            if !is_identifier(t) {
                return Err(SignatureError::BadIdentifier(t.clone()));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(SignatureError::DuplicateType(t.clone()));
            }
        }
        let mut arrow_sets: BTreeMap<Agent, BTreeSet<(usize, usize)>> = BTreeMap::new();
        for (agent, pairs) in arrows {
            if !agent_set.contains(&agent) {
                return Err(SignatureError::UnknownAgent(agent));
            }
            let entry = arrow_sets.entry(agent).or_default();
            for (src, dst) in pairs {
                let i = *index
                    .get(&src)
                    .ok_or(SignatureError::UnknownType(src.clone()))?;
                let j = *index
                    .get(&dst)
                    .ok_or(SignatureError::UnknownType(dst.clone()))?;
                entry.insert((i, j));
            }
        }
        Ok(Signature {
            name: name.into(),
            agents: agent_set,
            types,
            arrows: arrow_sets,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of action types, the arity of every basic action.
    pub fn arity(&self) -> usize {
        self.types.len()
    }

    pub fn agents(&self) -> &BTreeSet<Agent> {
        &self.agents
    }

    pub fn has_agent(&self, agent: &str) -> bool {
        self.agents.contains(agent)
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name)
    }

    pub fn type_name(&self, index: usize) -> &str {
        &self.types[index]
    }

    pub fn has_arrow(&self, agent: &str, from: usize, to: usize) -> bool {
        self.arrows
            .get(agent)
            .map_or(false, |s| s.contains(&(from, to)))
    }

    /// Type indices reachable from `from` in one `agent`-step.
    pub fn type_successors(&self, agent: &str, from: usize) -> Vec<usize> {
        match self.arrows.get(agent) {
            Some(set) => set
                .iter()
                .filter(|(i, _)| *i == from)
                .map(|(_, j)| *j)
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn arrows(&self) -> &BTreeMap<Agent, BTreeSet<(usize, usize)>> {
        &self.arrows
    }

    pub fn from_json(text: &str) -> Result<Signature, SignatureError> {
        let raw: SignatureJson =
            serde_json::from_str(text).map_err(|e| SignatureError::Json(e.to_string()))?;
        let arrows = raw
            .arrows
            .into_iter()
            .map(|(agent, pairs)| {
                (
                    agent,
                    pairs.into_iter().map(|[a, b]| (a, b)).collect::<Vec<_>>(),
                )
            })
            .collect();
        Signature::new(raw.name, raw.agents, raw.types, arrows)
    }

    pub fn to_json(&self) -> String {
        let raw = SignatureJson {
            name: self.name.clone(),
            agents: self.agents.iter().cloned().collect(),
            types: self.types.clone(),
            arrows: self
                .arrows
                .iter()
                .map(|(agent, pairs)| {
                    (
                        agent.clone(),
                        pairs
                            .iter()
                            .map(|(i, j)| [self.types[*i].clone(), self.types[*j].clone()])
                            .collect(),
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("signature serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct SignatureJson {
    name: String,
    agents: Vec<String>,
    types: Vec<String>,
    #[serde(default)]
    arrows: BTreeMap<String, Vec<[String; 2]>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pub_json() -> &'static str {
        r#"{"name":"pub","agents":["A","B"],"types":["Pub"],
            "arrows":{"A":[["Pub","Pub"]],"B":[["Pub","Pub"]]}}"#
    }

    fn pri_json() -> &'static str {
        r#"{"name":"pri_a","agents":["A","B"],"types":["Pri","skp"],
            "arrows":{"A":[["Pri","Pri"],["skp","skp"]],
                      "B":[["Pri","skp"],["skp","skp"]]}}"#
    }

    #[test]
    fn pub_signature_parses() {
        let sig = Signature::from_json(pub_json()).unwrap();
        assert_eq!(sig.arity(), 1);
        assert!(sig.has_arrow("A", 0, 0));
        assert!(sig.has_arrow("B", 0, 0));
    }

    #[test]
    fn pri_signature_parses() {
        let sig = Signature::from_json(pri_json()).unwrap();
        assert_eq!(sig.arity(), 2);
        let pri = sig.type_index("Pri").unwrap();
        let skp = sig.type_index("skp").unwrap();
        assert!(sig.has_arrow("A", pri, pri));
        assert!(sig.has_arrow("B", pri, skp));
        assert!(!sig.has_arrow("B", pri, pri));
        assert!(sig.has_arrow("A", skp, skp));
        assert!(sig.has_arrow("B", skp, skp));
    }

    #[test]
    fn empty_type_list_rejected() {
        let err = Signature::from_json(r#"{"name":"x","agents":["A"],"types":[],"arrows":{}}"#)
            .unwrap_err();
        assert_eq!(err, SignatureError::Empty);
    }

    #[test]
    fn dangling_arrow_endpoint_rejected() {
        let err = Signature::from_json(
            r#"{"name":"x","agents":["A"],"types":["t"],"arrows":{"A":[["t","u"]]}}"#,
        )
        .unwrap_err();
        assert_eq!(err, SignatureError::UnknownType("u".to_string()));
    }

    #[test]
    fn json_round_trip() {
        let sig = Signature::from_json(pri_json()).unwrap();
        let again = Signature::from_json(&sig.to_json()).unwrap();
        assert_eq!(sig, again);
    }
}
