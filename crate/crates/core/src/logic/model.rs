use std::collections::BTreeMap;

use super::registry::{VarId, VarRegistry};

/// Partial or total truth assignment indexed by `VarId`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Model {
    values: Vec<Option<bool>>,
}

impl Model {
    pub fn from_values(values: Vec<Option<bool>>) -> Self {
        Model { values }
    }

    pub fn total(values: Vec<bool>) -> Self {
        Model { values: values.into_iter().map(Some).collect() }
    }

    pub fn get(&self, v: VarId) -> Option<bool> {
        self.values.get(v.index()).copied().flatten()
    }

    /// Value of `v`, treating unassigned as false.
    pub fn is_true(&self, v: VarId) -> bool {
        self.get(v) == Some(true)
    }

    pub fn set(&mut self, v: VarId, b: bool) {
        if self.values.len() <= v.index() {
            self.values.resize(v.index() + 1, None);
        }
        self.values[v.index()] = Some(b);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_total(&self, n: usize) -> bool {
        self.values.len() >= n && self.values[..n].iter().all(|v| v.is_some())
    }

    pub fn values(&self) -> &[Option<bool>] {
        &self.values
    }

    /// Label to value map over non-auxiliary variables.
    pub fn to_label_map(&self, reg: &VarRegistry) -> BTreeMap<String, bool> {
        reg.source_vars()
            .filter_map(|v| self.get(v).map(|b| (reg.label(v).to_string(), b)))
            .collect()
    }

    pub fn to_json(&self, reg: &VarRegistry) -> String {
        serde_json::to_string_pretty(&self.to_label_map(reg)).expect("map of strings serializes")
    }

    pub fn true_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == Some(true))
            .map(|(i, _)| VarId(i as u32))
    }
}
