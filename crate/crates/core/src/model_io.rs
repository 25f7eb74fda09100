//! The JSON model file.
//!
//! ```json
//! { "format_version": 1, "k": 2, "d": 2, "scaling": "sum", "a0": 0.0,
//!   "neurons": [ { "a": 1.0, "w": [0.6, 0.8], "b": -0.1 } ],
//!   "poly_tail": [ { "coef": 0.5, "alpha": [1, 0] } ] }
//! ```
//!
//! Every number is written with 17 significant digits, so coefficients
//! survive a round trip bit for bit. `poly_tail` is `null` when the network
//! has no polynomial part.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, exact_vec, Exact};
use crate::network::{MultiIndex, Neuron, PolyTerm, RepuNetwork, Scaling};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct NeuronOut {
    a: Exact,
    w: Vec<Exact>,
    b: Exact,
}

#[derive(Serialize)]
struct TermOut<'a> {
    coef: Exact,
    alpha: &'a MultiIndex,
}

#[derive(Serialize)]
struct ModelOut<'a> {
    format_version: u32,
    k: u32,
    d: usize,
    scaling: Scaling,
    a0: Exact,
    neurons: Vec<NeuronOut>,
    poly_tail: Option<Vec<TermOut<'a>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelIn {
    format_version: u32,
    k: u32,
    d: usize,
    scaling: Scaling,
    a0: f64,
    neurons: Vec<Neuron>,
    #[serde(default)]
    poly_tail: Option<Vec<PolyTerm>>,
}

pub fn to_json(net: &RepuNetwork) -> Result<String> {
    let out = ModelOut {
        format_version: MODEL_FORMAT_VERSION,
        k: net.k(),
        d: net.d(),
        scaling: net.scaling(),
        a0: Exact(net.a0()),
        neurons: net
            .neurons()
            .iter()
            .map(|n| NeuronOut {
                a: Exact(n.a),
                w: exact_vec(&n.w),
                b: Exact(n.b),
            })
            .collect(),
        poly_tail: net.poly_tail().map(|tail| {
            tail.iter()
                .map(|t| TermOut {
                    coef: Exact(t.coef),
                    alpha: &t.alpha,
                })
                .collect()
        }),
    };
    io::to_json_pretty(&out)
}

pub fn from_json(text: &str) -> Result<RepuNetwork> {
    let raw: ModelIn = serde_json::from_str(text).map_err(io::parse_error)?;
    if raw.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Invalid {
            path: "format_version".into(),
            message: format!("unsupported version {} (expected {MODEL_FORMAT_VERSION})", raw.format_version),
        });
    }
    let mut net = RepuNetwork::new(raw.k, raw.d, raw.scaling)
        .map_err(|e| Error::Invalid {
            path: "k/d".into(),
            message: e.to_string(),
        })?
        .with_neurons(raw.neurons)?
        .with_a0(raw.a0);
    if let Some(tail) = raw.poly_tail {
        net = net.with_poly_tail(tail)?;
    }
    Ok(net)
}

pub fn save(net: &RepuNetwork, path: &Path) -> Result<()> {
    io::write_atomic(path, to_json(net)?.as_bytes())
}

pub fn load(path: &Path) -> Result<RepuNetwork> {
    from_json(&io::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RepuNetwork {
        RepuNetwork::new(2, 2, Scaling::Sum)
            .unwrap()
            .with_neurons(vec![
                Neuron::new(0.1, vec![0.6, 0.8], -1.0 / 3.0),
                Neuron::new(-2.0e-17, vec![1.0, 0.0], 0.4),
                Neuron::new(7.25, vec![-0.28, 0.96], 1.1),
            ])
            .unwrap()
            .with_a0(std::f64::consts::PI)
            .with_zero_tail()
            .unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        let net = sample();
        let back = from_json(&to_json(&net).unwrap()).unwrap();
        assert_eq!(back, net);
        assert_eq!(
            back.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
            net.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn tail_degree_violation_is_rejected() {
        let text = r#"{"format_version":1,"k":2,"d":2,"scaling":"sum","a0":0,
            "neurons":[],"poly_tail":[{"coef":1.0,"alpha":[2,1]}]}"#;
        match from_json(text) {
            Err(Error::Invalid { path, .. }) => assert_eq!(path, "poly_tail[0].alpha"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_neuron_list_is_constant() {
        let text = r#"{"format_version":1,"k":3,"d":2,"scaling":"mean_field","a0":0.5,"neurons":[],"poly_tail":null}"#;
        let net = from_json(text).unwrap();
        assert_eq!(net.width(), 0);
        assert_eq!(net.eval(&[0.2, 0.9]).unwrap(), 0.5);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let text = "{\n  \"format_version\": 1,\n  \"k\": oops\n}";
        match from_json(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_and_versions_are_rejected() {
        let text = r#"{"format_version":1,"k":2,"d":1,"scaling":"sum","a0":0,"neurons":[],"extra":1}"#;
        assert!(matches!(from_json(text), Err(Error::Parse { .. })));
        let text = r#"{"format_version":9,"k":2,"d":1,"scaling":"sum","a0":0,"neurons":[]}"#;
        assert!(matches!(from_json(text), Err(Error::Invalid { .. })));
    }

    #[test]
    fn wrong_weight_length_is_rejected() {
        let text = r#"{"format_version":1,"k":2,"d":2,"scaling":"sum","a0":0,"neurons":[{"a":1,"w":[1],"b":0}]}"#;
        assert!(matches!(from_json(text), Err(Error::Invalid { .. })));
    }
}
