//! JSON document formats for models and measures.
//!
//! A model document carries the state list, the metric rule, the kernel
//! rows, and optionally the invariant measure:
//!
//! ```json
//! {
//!   "name": "my-chain",
//!   "states": [{"id": 0, "label": "a", "coords": [0.0]}, ...],
//!   "metric": {"kind": "explicit" | "coords_linf" | "real_abs",
//!              "matrix": [[...]]},
//!   "kernel": [{"from": 0, "to": [{"state": 0, "p": 1.0}]}, ...],
//!   "invariant": [{"state": 0, "w": 1.0}]
//! }
//! ```
//!
//! The loader rejects malformed ids, non-finite or negative probabilities,
//! and shape mismatches before handing the data to the model validator,
//! which enforces the metric and stochasticity axioms.

use anyhow::{bail, Context, Result};
use eprop_core::{DiscreteMeasure, MetricModel, MetricRule, StateId, StateInfo};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelDoc {
    pub name: String,
    pub states: Vec<StateDoc>,
    pub metric: MetricDoc,
    pub kernel: Vec<RowDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant: Option<Vec<AtomDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateDoc {
    pub id: usize,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RowDoc {
    pub from: usize,
    pub to: Vec<ProbDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProbDoc {
    pub state: usize,
    pub p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AtomDoc {
    pub state: usize,
    pub w: f64,
}

fn measure_from_doc(atoms: &[AtomDoc], num_states: usize, what: &str) -> Result<DiscreteMeasure<f64>> {
    let mut out = Vec::with_capacity(atoms.len());
    for a in atoms {
        if a.state >= num_states {
            bail!("{what}: state {} out of range (model has {num_states} states)", a.state);
        }
        if !a.w.is_finite() || a.w < 0.0 {
            bail!("{what}: weight {} at state {} must be finite and nonnegative", a.w, a.state);
        }
        out.push((StateId(a.state), a.w));
    }
    Ok(DiscreteMeasure::from_atoms(out))
}

/// Parses and validates a model document into a checked model.
pub fn model_from_json(text: &str) -> Result<MetricModel> {
    let doc: ModelDoc = serde_json::from_str(text).context("model document does not parse")?;
    let n = doc.states.len();
    if n == 0 {
        bail!("model document declares no states");
    }
    for (pos, s) in doc.states.iter().enumerate() {
        if s.id != pos {
            bail!("state ids must be 0..{} in order; position {pos} has id {}", n - 1, s.id);
        }
    }
    let states: Vec<StateInfo> = doc
        .states
        .iter()
        .map(|s| StateInfo::new(s.label.clone(), s.coords.clone().unwrap_or_default()))
        .collect();

    let metric = match doc.metric.kind.as_str() {
        "explicit" => {
            let matrix = doc
                .metric
                .matrix
                .as_ref()
                .context("metric kind \"explicit\" requires a \"matrix\" field")?;
            if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
                bail!("metric matrix must be {n}x{n}");
            }
            let mut flat = Vec::with_capacity(n * n);
            for row in matrix {
                flat.extend_from_slice(row);
            }
            MetricRule::Explicit(flat)
        }
        "coords_linf" => MetricRule::CoordsLinf,
        "real_abs" => MetricRule::RealAbs,
        other => bail!(
            "unknown metric kind {other:?}; expected \"explicit\", \"coords_linf\", or \"real_abs\""
        ),
    };

    if doc.kernel.len() != n {
        bail!("kernel must have one row per state ({n}), got {}", doc.kernel.len());
    }
    let mut kernel: Vec<Option<DiscreteMeasure<f64>>> = (0..n).map(|_| None).collect();
    for row in &doc.kernel {
        if row.from >= n {
            bail!("kernel row \"from\" state {} out of range", row.from);
        }
        if kernel[row.from].is_some() {
            bail!("duplicate kernel row for state {}", row.from);
        }
        let mut atoms = Vec::with_capacity(row.to.len());
        for t in &row.to {
            if t.state >= n {
                bail!("kernel row {}: target state {} out of range", row.from, t.state);
            }
            if !t.p.is_finite() || t.p < 0.0 {
                bail!(
                    "kernel row {}: probability {} to state {} must be finite and nonnegative",
                    row.from,
                    t.p,
                    t.state
                );
            }
            atoms.push((StateId(t.state), t.p));
        }
        kernel[row.from] = Some(DiscreteMeasure::from_atoms(atoms));
    }
    let kernel: Vec<DiscreteMeasure<f64>> = kernel
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("missing kernel row for state {i}")))
        .collect::<Result<_>>()?;

    let invariant = match &doc.invariant {
        Some(atoms) => Some(measure_from_doc(atoms, n, "invariant")?),
        None => None,
    };

    MetricModel::new(doc.name, states, metric, kernel, invariant)
        .map_err(|e| anyhow::anyhow!("model validation failed: {e}"))
}
