//! JSON model files.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Cell, Entry, ModelSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Variable reference: position in the combined (observed, then latent)
/// variable list, or a variable name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VarRef {
    Index(usize),
    Name(String),
}

/// One matrix entry: `{row, col, value}` (fixed) or `{row, col, param}` (free).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternEntry {
    pub row: VarRef,
    pub col: VarRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartValue {
    pub param: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub observed: Vec<String>,
    #[serde(default)]
    pub latent: Vec<String>,
    #[serde(default)]
    pub directed: Vec<PatternEntry>,
    #[serde(default)]
    pub symmetric: Vec<PatternEntry>,
    #[serde(default)]
    pub start_values: Vec<StartValue>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    fn resolve(&self, r: &VarRef) -> Result<usize> {
        let m = self.observed.len() + self.latent.len();
        match r {
            VarRef::Index(i) if *i < m => Ok(*i),
            VarRef::Index(i) => Err(Error::InvalidModel(format!("variable index {i} out of range"))),
            VarRef::Name(name) => self
                .observed
                .iter()
                .chain(self.latent.iter())
                .position(|v| v == name)
                .ok_or_else(|| Error::InvalidModel(format!("unknown variable '{name}'"))),
        }
    }

    /// Builds the model. Parameters are numbered in order of first
    /// appearance, directed entries before symmetric ones.
    pub fn to_spec<T: Real>(&self) -> Result<ModelSpec<T>> {
        let mut names: Vec<String> = Vec::new();
        let mut convert = |e: &PatternEntry, this: &Self| -> Result<Cell<T>> {
            let row = this.resolve(&e.row)?;
            let col = this.resolve(&e.col)?;
            let entry = match (&e.value, &e.param) {
                (Some(v), None) => Entry::Fixed(T::lit(*v)),
                (None, Some(p)) => {
                    let k = match names.iter().position(|n| n == p) {
                        Some(k) => k,
                        None => {
                            names.push(p.clone());
                            names.len() - 1
                        }
                    };
                    Entry::Free(k)
                }
                _ => {
                    return Err(Error::InvalidModel(format!(
                        "entry ({:?}, {:?}) needs exactly one of 'value' or 'param'",
                        e.row, e.col
                    )))
                }
            };
            Ok(Cell { row, col, entry })
        };
        let directed = self.directed.iter().map(|e| convert(e, self)).collect::<Result<Vec<_>>>()?;
        let symmetric = self.symmetric.iter().map(|e| convert(e, self)).collect::<Result<Vec<_>>>()?;

        let start = if self.start_values.is_empty() {
            None
        } else {
            let mut start = vec![None; names.len()];
            for sv in &self.start_values {
                let k = names
                    .iter()
                    .position(|n| *n == sv.param)
                    .ok_or_else(|| Error::InvalidModel(format!("start value for unknown parameter '{}'", sv.param)))?;
                start[k] = Some(T::lit(sv.value));
            }
            let missing: Vec<&str> =
                names.iter().zip(&start).filter(|(_, v)| v.is_none()).map(|(n, _)| n.as_str()).collect();
            if !missing.is_empty() {
                return Err(Error::InvalidModel(format!("start_values incomplete, missing {}", missing.join(", "))));
            }
            Some(DVector::from_iterator(start.len(), start.into_iter().flatten()))
        };

        ModelSpec::new(self.observed.len(), self.latent.len(), directed, symmetric, names, start)
    }

    /// Describes an existing model; variables are named `v0, v1, ...`.
    pub fn from_spec<T: Real>(model: &ModelSpec<T>) -> Self {
        let var = |i: usize| VarRef::Name(format!("v{i}"));
        let entry = |c: &Cell<T>| {
            let (value, param) = match c.entry {
                Entry::Fixed(v) => (Some(v.as_f64()), None),
                Entry::Free(k) => (None, Some(model.theta_names()[k].clone())),
            };
            PatternEntry { row: var(c.row), col: var(c.col), value, param }
        };
        let p = model.n_observed();
        ModelFile {
            observed: (0..p).map(|i| format!("v{i}")).collect(),
            latent: (p..model.n_vars()).map(|i| format!("v{i}")).collect(),
            directed: model.directed().iter().map(entry).collect(),
            symmetric: model.symmetric().iter().map(entry).collect(),
            start_values: Vec::new(),
        }
    }
}
