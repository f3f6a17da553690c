//! JSON instance format.
//!
//! ```json
//! {"matroid": {"type": "laminar", "bins": [{"members": [0, 1], "capacity": 1}]},
//!  "distributions": [[{"value": "3/2", "prob": 0.5}, {"value": 0, "prob": "1/2"}], ...]}
//! ```
//!
//! A graphic matroid is `{"type": "graphic", "vertices": 3, "edges": [[0, 1], ...]}`.
//! Every number may be a JSON number or a `"p/q"` string. Distributions whose
//! probabilities were written as floats are renormalised when their mass is
//! within `1e-12` of one.

use num::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::model::{validate, Atom, Bin, GraphicGround, Ground, Instance, LaminarFamily, ValueDistribution, Violation};
use crate::rational::{self, ParseRationalError, Rational};

const FLOAT_MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Number(#[from] ParseRationalError),
    #[error("invalid instance: {0}")]
    Invalid(#[from] Violation),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Text(String),
    Float(f64),
}

impl Number {
    fn to_rational(&self) -> Result<(Rational, bool), ParseRationalError> {
        match self {
            Number::Text(s) => rational::parse(s).map(|r| (r, false)),
            Number::Float(x) => rational::from_f64_decimal(*x)
                .map(|r| (r, x.fract() != 0.0))
                .ok_or_else(|| ParseRationalError { input: x.to_string() }),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AtomJson {
    value: Number,
    prob: Number,
}

#[derive(Debug, Serialize, Deserialize)]
struct BinJson {
    members: Vec<usize>,
    capacity: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum MatroidJson {
    Laminar { bins: Vec<BinJson> },
    Graphic { vertices: usize, edges: Vec<[usize; 2]> },
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceJson {
    matroid: MatroidJson,
    distributions: Vec<Vec<AtomJson>>,
}

/// Parses and validates an instance.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let raw: InstanceJson = serde_json::from_str(text)?;
    let ground = match raw.matroid {
        MatroidJson::Laminar { bins } => Ground::Laminar(LaminarFamily::new(
            bins.into_iter().map(|b| Bin::new(b.members, b.capacity)).collect(),
        )),
        MatroidJson::Graphic { vertices, edges } => Ground::Graphic(GraphicGround::new(
            vertices,
            edges.into_iter().map(|[a, b]| (a, b)).collect(),
        )),
    };
    let mut distributions = Vec::with_capacity(raw.distributions.len());
    for atoms in raw.distributions {
        let mut parsed = Vec::with_capacity(atoms.len());
        let mut float_mode = false;
        for a in &atoms {
            let (value, _) = a.value.to_rational()?;
            let (prob, was_float) = a.prob.to_rational()?;
            float_mode |= was_float;
            parsed.push(Atom::new(value, prob));
        }
        let mut dist = ValueDistribution::from_atoms_unchecked(parsed);
        if float_mode {
            renormalize(&mut dist);
        }
        dist.atoms.sort_by(|a, b| a.value.cmp(&b.value));
        distributions.push(dist);
    }
    let instance = Instance {
        ground,
        distributions,
    };
    validate(&instance)?;
    Ok(instance)
}

fn renormalize(dist: &mut ValueDistribution) {
    let mass = dist.total_mass();
    if mass.is_one() || !mass.is_positive() {
        return;
    }
    if (rational::to_f64(&mass) - 1.0).abs() <= FLOAT_MASS_TOLERANCE {
        for a in &mut dist.atoms {
            a.prob = &a.prob / &mass;
        }
    }
}

/// Serialises with every number as an exact `"p/q"` string.
pub fn instance_to_json(instance: &Instance) -> String {
    let matroid = match &instance.ground {
        Ground::Laminar(f) => MatroidJson::Laminar {
            bins: f
                .bins
                .iter()
                .map(|b| BinJson {
                    members: b.members.clone(),
                    capacity: b.capacity,
                })
                .collect(),
        },
        Ground::Graphic(g) => MatroidJson::Graphic {
            vertices: g.vertex_count,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        },
    };
    let distributions = instance
        .distributions
        .iter()
        .map(|d| {
            d.atoms
                .iter()
                .map(|a| AtomJson {
                    value: Number::Text(rational::format(&a.value)),
                    prob: Number::Text(rational::format(&a.prob)),
                })
                .collect()
        })
        .collect();
    serde_json::to_string_pretty(&InstanceJson {
        matroid,
        distributions,
    })
    .expect("instance serialisation cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn parses_mixed_number_forms() {
        let text = r#"{"matroid":{"type":"laminar","bins":[{"members":[0,1],"capacity":1}]},
            "distributions":[[{"value":"3/2","prob":0.5},{"value":0,"prob":"1/2"}],
                             [{"value":2,"prob":1}]]}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.len(), 2);
        assert_eq!(inst.distributions[0].atoms[0].value, int(0));
        assert_eq!(inst.distributions[0].atoms[1].value, ratio(3, 2));
        assert_eq!(inst.distributions[0].atoms[1].prob, ratio(1, 2));
    }

    #[test]
    fn float_probabilities_within_tolerance_are_renormalised() {
        let text = r#"{"matroid":{"type":"graphic","vertices":2,"edges":[[0,1]]},
            "distributions":[[{"value":1,"prob":0.1},{"value":2,"prob":0.2},{"value":3,"prob":0.7}]]}"#;
        let inst = parse_instance(text).unwrap();
        assert!(inst.distributions[0].total_mass().is_one());
    }

    #[test]
    fn reports_bad_mass_and_bad_json() {
        let text = r#"{"matroid":{"type":"laminar","bins":[]},
            "distributions":[[{"value":1,"prob":0.5},{"value":2,"prob":0.6}]]}"#;
        match parse_instance(text) {
            Err(IoError::Invalid(Violation::MassNotOne { element: 0, .. })) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_instance("{not json"), Err(IoError::Json(_))));
        let bad_num = r#"{"matroid":{"type":"laminar","bins":[]},"distributions":[[{"value":"x/y","prob":1}]]}"#;
        assert!(matches!(parse_instance(bad_num), Err(IoError::Number(_))));
    }

    #[test]
    fn round_trips_through_text() {
        let inst = Instance::graphic(
            3,
            vec![(0, 1), (1, 2)],
            vec![
                ValueDistribution::two_point(ratio(7, 3), ratio(1, 3)).unwrap(),
                ValueDistribution::point(int(2)),
            ],
        )
        .unwrap();
        let again = parse_instance(&instance_to_json(&inst)).unwrap();
        assert_eq!(again, inst);
    }
}
