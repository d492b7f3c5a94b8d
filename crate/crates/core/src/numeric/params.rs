use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::tensor::Tensor;

/// Named tensors, iterated in lexicographic name order.
///
/// Used both for trainable parameters and for gradients with respect to
/// them; the two always carry the same names and shapes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::ParamMismatch(format!("missing parameter `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::ParamMismatch(format!("missing parameter `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn zeros_like(&self) -> Self {
        ParamSet {
            tensors: self
                .tensors
                .iter()
                .map(|(k, v)| (k.clone(), Tensor::zeros(v.shape())))
                .collect(),
        }
    }

    /// Fails unless `other` has exactly the same names and shapes.
    pub fn check_compatible(&self, other: &ParamSet) -> Result<()> {
        for name in self.names() {
            if !other.contains(name) {
                return Err(Error::ParamMismatch(format!("missing gradient `{name}`")));
            }
        }
        for (name, t) in other.iter() {
            let mine = self
                .tensors
                .get(name)
                .ok_or_else(|| Error::ParamMismatch(format!("unexpected gradient `{name}`")))?;
            mine.check_same_shape("param set", t)?;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &ParamSet) -> Result<()> {
        self.check_compatible(other)?;
        for (name, t) in self.tensors.iter_mut() {
            t.add_assign(&other.tensors[name])?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.tensors.values_mut().for_each(|t| t.scale(factor));
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors
            .values()
            .flat_map(|t| t.data())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `name=norm` pairs, used in diagnostics.
    pub fn norms_summary(&self) -> String {
        self.iter()
            .map(|(n, t)| format!("{n}={:.4e}", t.norm()))
            .collect::<Vec<_>>()
            .join(", ")
    }
}
