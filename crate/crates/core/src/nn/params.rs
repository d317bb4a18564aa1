use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Checkpoint document version accepted by [`ParamStore::load_json`].
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
    /// Frozen parameters enter the tape as constants and never receive gradient.
    pub frozen: bool,
}

/// Named parameters, kept sorted by name so that iteration, gradient
/// layout and checkpoints share one deterministic order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    params: Vec<Param>,
    index: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter, keeping name order. Re-adding a name is an error.
    pub fn insert(&mut self, name: &str, rows: usize, cols: usize, value: Vec<f64>) -> Result<()> {
        if value.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                name: name.to_string(),
                expected: vec![rows, cols],
                actual: vec![value.len()],
            });
        }
        if self.index.contains_key(name) {
            return Err(Error::InvalidArgument(format!("parameter `{name}` already exists")));
        }
        let at = self.names.partition_point(|n| n.as_str() < name);
        self.names.insert(at, name.to_string());
        self.params.insert(
            at,
            Param {
                rows,
                cols,
                value,
                frozen: false,
            },
        );
        self.index = self.names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Ok(())
    }

    /// Adds a `rows × cols` parameter drawn uniformly from `±gain/√fan_in`.
    pub fn insert_uniform(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        fan_in: usize,
        gain: f64,
        rng: &mut impl Rng,
    ) -> Result<()> {
        let bound = gain / (fan_in.max(1) as f64).sqrt();
        let value = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
        self.insert(name, rows, cols, value)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.index_of(name).map(|i| &self.params[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.index_of(name).map(move |i| &mut self.params[i])
    }

    pub fn get_by_index(&self, idx: usize) -> &Param {
        &self.params[idx]
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn set_frozen(&mut self, name: &str, frozen: bool) -> Result<()> {
        let p = self
            .get_mut(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        p.frozen = frozen;
        Ok(())
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            slots: self.params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CheckpointDoc {
            schema_version: CHECKPOINT_VERSION,
            params: self
                .names
                .iter()
                .zip(&self.params)
                .map(|(n, p)| CheckpointEntry {
                    name: n.clone(),
                    shape: [p.rows, p.cols],
                    values: p.value.clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// Overwrites values from a checkpoint. The checkpoint must name exactly
    /// the parameters of `self`, each with the same shape.
    pub fn load_json(&mut self, text: &str) -> Result<()> {
        let doc: CheckpointDoc = serde_json::from_str(text)?;
        if doc.schema_version != CHECKPOINT_VERSION {
            return Err(Error::SchemaVersion {
                expected: CHECKPOINT_VERSION,
                found: doc.schema_version,
            });
        }
        let mut seen = vec![false; self.params.len()];
        for e in &doc.params {
            let idx = self
                .index_of(&e.name)
                .ok_or_else(|| Error::UnknownParameter(e.name.clone()))?;
            let p = &self.params[idx];
            if e.shape != [p.rows, p.cols] || e.values.len() != p.rows * p.cols {
                return Err(Error::ShapeMismatch {
                    name: e.name.clone(),
                    expected: vec![p.rows, p.cols],
                    actual: e.shape.to_vec(),
                });
            }
            seen[idx] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "checkpoint lacks parameter `{}`",
                self.names[i]
            )));
        }
        for e in doc.params {
            let idx = self.index[&e.name];
            self.params[idx].value = e.values;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    schema_version: u32,
    params: Vec<CheckpointEntry>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry {
    name: String,
    shape: [usize; 2],
    values: Vec<f64>,
}

/// One gradient slot per parameter, laid out like the owning store.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    slots: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn slot(&self, idx: usize) -> &[f64] {
        &self.slots[idx]
    }

    pub fn slots(&self) -> &[Vec<f64>] {
        &self.slots
    }

    pub(crate) fn accumulate(&mut self, idx: usize, g: &[f64]) {
        self.slots[idx].iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.slots.iter_mut().flatten().for_each(|v| *v *= s);
    }

    pub fn max_abs(&self) -> f64 {
        self.slots.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}
