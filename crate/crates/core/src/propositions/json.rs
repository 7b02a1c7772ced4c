//! JSON form of propositions.
//!
//! ```json
//! {"op": "and", "args": [
//!     {"op": "atom", "set": ["+x⊗+y"], "time": 0.0, "basis": "xy"},
//!     {"op": "not", "arg": {"op": "certain", "p": 0.9, "tag": "detector"}}
//! ]}
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Proposition;
use crate::error::{Error, Result};
use crate::hilbert::{Basis, StationarySet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum PropositionSpec {
    Atom {
        set: Vec<String>,
        time: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<String>,
    },
    Not {
        arg: Box<PropositionSpec>,
    },
    And {
        args: Vec<PropositionSpec>,
    },
    Or {
        args: Vec<PropositionSpec>,
    },
    Certain {
        p: f64,
        tag: String,
    },
}

/// Named bases available to atoms; atoms without a basis use the default.
#[derive(Clone, Debug)]
pub struct BasisRegistry {
    default: Arc<Basis>,
    named: BTreeMap<String, Arc<Basis>>,
}

impl BasisRegistry {
    pub fn new(default: Arc<Basis>) -> Self {
        let mut named = BTreeMap::new();
        named.insert(default.name().to_string(), default.clone());
        Self { default, named }
    }

    pub fn register(&mut self, basis: Arc<Basis>) {
        self.named.insert(basis.name().to_string(), basis);
    }

    pub fn get(&self, name: Option<&str>) -> Result<&Arc<Basis>> {
        match name {
            None => Ok(&self.default),
            Some(n) => self
                .named
                .get(n)
                .ok_or_else(|| Error::InvalidProposition(format!("unknown basis '{n}'"))),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.named.keys().map(String::as_str)
    }
}

impl PropositionSpec {
    pub fn resolve(&self, registry: &BasisRegistry) -> Result<Proposition> {
        Ok(match self {
            PropositionSpec::Atom { set, time, basis } => {
                let b = registry.get(basis.as_deref())?;
                Proposition::atom(StationarySet::from_labels(b, set)?, *time)
            }
            PropositionSpec::Not { arg } => !arg.resolve(registry)?,
            PropositionSpec::And { args } => Proposition::And(
                args.iter()
                    .map(|a| a.resolve(registry))
                    .collect::<Result<_>>()?,
            ),
            PropositionSpec::Or { args } => Proposition::Or(
                args.iter()
                    .map(|a| a.resolve(registry))
                    .collect::<Result<_>>()?,
            ),
            PropositionSpec::Certain { p, tag } => Proposition::certain(*p, tag.clone()),
        })
    }

    pub fn from_proposition(p: &Proposition) -> Self {
        match p {
            Proposition::Atom { set, time } => PropositionSpec::Atom {
                set: set.labels().into_iter().map(String::from).collect(),
                time: *time,
                basis: Some(set.basis().name().to_string()),
            },
            Proposition::Not(q) => PropositionSpec::Not {
                arg: Box::new(Self::from_proposition(q)),
            },
            Proposition::And(qs) => PropositionSpec::And {
                args: qs.iter().map(Self::from_proposition).collect(),
            },
            Proposition::Or(qs) => PropositionSpec::Or {
                args: qs.iter().map(Self::from_proposition).collect(),
            },
            Proposition::Certain { p, tag } => PropositionSpec::Certain {
                p: *p,
                tag: tag.clone(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::HilbertSpace;

    #[test]
    fn round_trip() {
        let s = Arc::new(HilbertSpace::new(["g", "e"]).unwrap());
        let reg = BasisRegistry::new(Basis::computational(&s));
        let text = r#"{"op":"or","args":[
            {"op":"atom","set":["e"],"time":1.5},
            {"op":"not","arg":{"op":"certain","p":0.25,"tag":"c"}}]}"#;
        let spec: PropositionSpec = serde_json::from_str(text).unwrap();
        let p = spec.resolve(&reg).unwrap();
        let back = PropositionSpec::from_proposition(&p);
        assert_eq!(back.resolve(&reg).unwrap().to_string(), p.to_string());
    }

    #[test]
    fn unknown_label_and_field_rejected() {
        let s = Arc::new(HilbertSpace::new(["g", "e"]).unwrap());
        let reg = BasisRegistry::new(Basis::computational(&s));
        let spec: PropositionSpec =
            serde_json::from_str(r#"{"op":"atom","set":["x"],"time":0}"#).unwrap();
        assert!(spec.resolve(&reg).is_err());
        assert!(serde_json::from_str::<PropositionSpec>(
            r#"{"op":"atom","set":["g"],"time":0,"extra":1}"#
        )
        .is_err());
    }
}
