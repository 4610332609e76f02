//! Observable sources: built-in names or JSON documents.
//!
//! The JSON form is
//!
//! ```json
//! {"values": {"0": 0.5, "1": -0.25}, "sup_bound": 0.5, "lip_const": 1.0}
//! ```
//!
//! with one entry per state, keyed by the state id. The declared bounds are
//! verified against the values on the loaded model.

use std::collections::BTreeMap;
use std::fs;

use anyhow::{bail, Context, Result};
use eprop_core::{identity_on_norm, min1_2norm, MetricModel, Observable};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
struct ObservableDoc {
    values: BTreeMap<String, f64>,
    sup_bound: f64,
    lip_const: f64,
}

/// Resolves an observable source: a built-in name (`identity_on_norm`,
/// `min1_2norm`) or a path to a JSON document.
pub fn load_observable(model: &MetricModel, source: &str) -> Result<Observable> {
    match source {
        "identity_on_norm" => Ok(identity_on_norm(model)),
        "min1_2norm" => Ok(min1_2norm(model)),
        path => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read observable file {path:?}"))?;
            let doc: ObservableDoc =
                serde_json::from_str(&text).context("observable document does not parse")?;
            let n = model.num_states();
            let mut values = vec![f64::NAN; n];
            for (key, v) in &doc.values {
                let id: usize = key
                    .parse()
                    .with_context(|| format!("observable key {key:?} is not a state id"))?;
                if id >= n {
                    bail!("observable key {id} out of range (model has {n} states)");
                }
                values[id] = *v;
            }
            if let Some(missing) = values.iter().position(|v| v.is_nan()) {
                bail!("observable is missing a value for state {missing}");
            }
            Observable::new(model, values, doc.sup_bound, doc.lip_const)
                .map_err(|e| anyhow::anyhow!("observable validation failed: {e}"))
        }
    }
}
