//! JSON model files.
//!
//! ```json
//! {
//!   "n_types": 2,
//!   "letters": [
//!     { "name": "col0",
//!       "laws": [ [ {"z": [0,0], "p": 0.75}, {"z": [1,0], "p": 0.25} ],
//!                 [ {"z": [0,0], "p": 1.0} ] ] }
//!   ],
//!   "environment": { "kind": "iid", "probs": [1.0] }
//! }
//! ```
//!
//! `laws` is indexed `[parent_type][support_entry]`. The environment may also
//! be `{"kind": "markov", "initial": [...], "transition": [[...], ...]}`.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use super::{CountVector, EnvironmentDistribution, EnvironmentLetter, ModelSpec, OffspringLaw};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    n_types: usize,
    letters: Vec<RawLetter>,
    environment: RawEnvironment,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLetter {
    name: String,
    laws: Vec<Vec<RawOutcome>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    z: Vec<u32>,
    p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawEnvironment {
    Iid(RawIid),
    Markov(RawMarkov),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIid {
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarkov {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

fn at(path: String) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Invariant(msg) => Error::Invariant(format!("{path}: {msg}")),
        other => other,
    }
}

pub fn parse_model(text: &[u8]) -> Result<ModelSpec> {
    let de = &mut serde_json::Deserializer::from_slice(text);
    let raw: RawModel = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    let mut letters = Vec::with_capacity(raw.letters.len());
    for (li, letter) in raw.letters.into_iter().enumerate() {
        let mut laws = Vec::with_capacity(letter.laws.len());
        for (k, support) in letter.laws.into_iter().enumerate() {
            let entries = support
                .into_iter()
                .map(|o| (CountVector::new(o.z), o.p))
                .collect();
            laws.push(OffspringLaw::new(entries).map_err(at(format!("letters[{li}].laws[{k}]")))?);
        }
        letters.push(EnvironmentLetter::new(letter.name, laws));
    }
    let environment = match raw.environment {
        RawEnvironment::Iid(RawIid { probs }) => EnvironmentDistribution::Iid { probs },
        RawEnvironment::Markov(RawMarkov {
            initial,
            transition,
        }) => EnvironmentDistribution::Markov {
            initial,
            transition,
        },
    };
    ModelSpec::new(raw.n_types, letters, environment)
}

pub fn write_model(model: &ModelSpec) -> String {
    let raw = RawModel {
        n_types: model.n_types(),
        letters: model
            .letters()
            .iter()
            .map(|l| RawLetter {
                name: l.name.clone(),
                laws: l
                    .laws
                    .iter()
                    .map(|law| {
                        law.support()
                            .iter()
                            .map(|(z, p)| RawOutcome {
                                z: z.entries().to_vec(),
                                p: *p,
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect(),
        environment: match model.environment() {
            EnvironmentDistribution::Iid { probs } => RawEnvironment::Iid(RawIid {
                probs: probs.clone(),
            }),
            EnvironmentDistribution::Markov {
                initial,
                transition,
            } => RawEnvironment::Markov(RawMarkov {
                initial: initial.clone(),
                transition: transition.clone(),
            }),
        },
    };
    let mut out = serde_json::to_string_pretty(&raw).expect("model serialises");
    out.push('\n');
    out
}
