use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Structured tag attached to every variable, e.g. `matched(m1,w2)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub kind: String,
    pub args: Vec<String>,
    pub aux: bool,
}

impl Label {
    pub fn new<S: Into<String>>(kind: S, args: Vec<String>) -> Self {
        Label { kind: kind.into(), args, aux: false }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.aux {
            write!(f, "~")?;
        }
        write!(f, "{}", self.kind)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

/// Build a label from a kind and any displayable arguments.
#[macro_export]
macro_rules! label {
    ($kind:expr $(, $arg:expr)* $(,)?) => {
        $crate::logic::Label::new($kind, vec![$(format!("{}", $arg)),*])
    };
}

#[derive(Clone, Debug, Default)]
pub struct VarRegistry {
    labels: Vec<Label>,
    index: HashMap<Label, VarId>,
    aux_count: u32,
}

impl VarRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `label`, registering it if unseen.
    pub fn var(&mut self, label: Label) -> VarId {
        if let Some(&v) = self.index.get(&label) {
            return v;
        }
        let v = VarId(self.labels.len() as u32);
        self.index.insert(label.clone(), v);
        self.labels.push(label);
        v
    }

    pub fn lookup(&self, label: &Label) -> Option<VarId> {
        self.index.get(label).copied()
    }

    pub fn fresh_aux(&mut self, kind: &str) -> VarId {
        let n = self.aux_count;
        self.aux_count += 1;
        let label = Label { kind: kind.to_string(), args: vec![n.to_string()], aux: true };
        self.var(label)
    }

    pub fn label(&self, v: VarId) -> &Label {
        &self.labels[v.index()]
    }

    pub fn is_aux(&self, v: VarId) -> bool {
        self.labels[v.index()].aux
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = (VarId, &Label)> {
        self.labels.iter().enumerate().map(|(i, l)| (VarId(i as u32), l))
    }

    pub fn source_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.aux)
            .map(|(i, _)| VarId(i as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registration_is_dense_and_idempotent() {
        let mut r = VarRegistry::new();
        let a = r.var(label!("gt", "a", "b"));
        let b = r.var(label!("gt", "b", "a"));
        assert_eq!(a, VarId(0));
        assert_eq!(b, VarId(1));
        assert_eq!(r.var(label!("gt", "a", "b")), a);
        let x = r.fresh_aux("t");
        assert!(r.is_aux(x));
        assert_eq!(r.source_vars().count(), 2);
        assert_eq!(r.label(a).to_string(), "gt(a,b)");
    }
}
