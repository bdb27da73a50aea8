//! Extending strict partial orders to total orders.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label;
use crate::logic::{Atom, Encoding, Formula, Model, VarId, VarRegistry};

/// `pairs` holds `(a, b)` meaning `a > b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrictPartialOrder {
    pub elements: Vec<String>,
    pub pairs: Vec<(String, String)>,
}

impl StrictPartialOrder {
    pub fn new<S: AsRef<str>>(elements: &[S], pairs: &[(S, S)]) -> Self {
        StrictPartialOrder {
            elements: elements.iter().map(|e| e.as_ref().to_string()).collect(),
            pairs: pairs.iter().map(|(a, b)| (a.as_ref().to_string(), b.as_ref().to_string())).collect(),
        }
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.elements.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect()
    }

    /// Pairs as element indices, after checking the order is well formed.
    pub fn indexed_pairs(&self) -> Result<Vec<(usize, usize)>> {
        let idx = self.index();
        if idx.len() != self.elements.len() {
            return Err(Error::InvalidOrder("duplicate element".into()));
        }
        let mut out = Vec::new();
        for (a, b) in &self.pairs {
            let (Some(&i), Some(&j)) = (idx.get(a.as_str()), idx.get(b.as_str())) else {
                return Err(Error::InvalidOrder(format!("unknown element in ({a},{b})")));
            };
            if i == j {
                return Err(Error::InvalidOrder(format!("reflexive pair ({a},{a})")));
            }
            out.push((i, j));
        }
        if linearize(self.elements.len(), &out).is_none() {
            return Err(Error::InvalidOrder("transitive closure contains a cycle".into()));
        }
        Ok(out)
    }
}

/// Kahn's algorithm, always taking the lowest available index.
fn linearize(n: usize, pairs: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in pairs {
        succ[a].push(b);
        indeg[b] += 1;
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        out.push(i);
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert(j);
            }
        }
    }
    (out.len() == n).then_some(out)
}

pub struct OrderEncoding {
    pub enc: Encoding,
    /// `gt[a][b]` for a != b.
    pub gt: Vec<Vec<Option<VarId>>>,
}

impl OrderEncoding {
    /// Reads the total order (greatest first) off a model.
    pub fn decode(&self, o: &StrictPartialOrder, m: &Model) -> Vec<String> {
        let n = o.elements.len();
        let mut wins: Vec<(usize, usize)> = (0..n)
            .map(|a| ((0..n).filter(|&b| self.gt[a][b].is_some_and(|v| m.is_true(v))).count(), a))
            .collect();
        wins.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
        wins.into_iter().map(|(_, a)| o.elements[a].clone()).collect()
    }
}

pub fn gt_vars(reg: &mut VarRegistry, elements: &[String]) -> Vec<Vec<Option<VarId>>> {
    let n = elements.len();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| (a != b).then(|| reg.var(label!("gt", elements[a], elements[b]))))
                .collect()
        })
        .collect()
}

/// Base facts, totality (once per unordered pair), asymmetry, transitivity.
pub fn order_axioms(gt: &[Vec<Option<VarId>>], out: &mut Vec<Formula>) {
    let n = gt.len();
    let g = |a: usize, b: usize| Atom(gt[a][b].unwrap());
    for a in 0..n {
        for b in a + 1..n {
            out.push(Formula::or([g(a, b), g(b, a)]));
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                out.push(Formula::not(Formula::and([g(a, b), g(b, a)])));
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if a != b && b != c && a != c {
                    out.push(Formula::implies(Formula::and([g(a, b), g(b, c)]), g(a, c)));
                }
            }
        }
    }
}

pub fn encode_extension(o: &StrictPartialOrder) -> Result<OrderEncoding> {
    let pairs = o.indexed_pairs()?;
    let mut enc = Encoding::new();
    let gt = gt_vars(&mut enc.reg, &o.elements);
    for &(a, b) in &pairs {
        enc.push(Atom(gt[a][b].unwrap()));
    }
    order_axioms(&gt, &mut enc.formulas);
    Ok(OrderEncoding { enc, gt })
}

pub fn extend_total_finite(o: &StrictPartialOrder) -> Result<Vec<String>> {
    let pairs = o.indexed_pairs()?;
    let lin = linearize(o.elements.len(), &pairs).expect("validated acyclic");
    Ok(lin.into_iter().map(|i| o.elements[i].clone()).collect())
}

pub fn verify_extension(o: &StrictPartialOrder, total: &[String]) -> Result<bool> {
    let mut sorted_a: Vec<&String> = o.elements.iter().collect();
    let mut sorted_b: Vec<&String> = total.iter().collect();
    sorted_a.sort();
    sorted_b.sort();
    if sorted_a != sorted_b {
        return Err(Error::PermutationMismatch(format!("{total:?}")));
    }
    let pos: HashMap<&str, usize> = total.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    Ok(o.pairs.iter().all(|(a, b)| match (pos.get(a.as_str()), pos.get(b.as_str())) {
        (Some(i), Some(j)) => i < j,
        _ => false,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn model_counts() {
        let cases: [(&[&str], &[(&str, &str)], usize); 3] = [
            (&["a", "b"], &[], 2),
            (&["a", "b", "c"], &[("a", "b")], 3),
            (&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")], 1),
        ];
        for (els, pairs, expected) in cases {
            let o = StrictPartialOrder::new(els, pairs);
            let e = encode_extension(&o).unwrap();
            let (models, done) = e.enc.models(1000);
            assert!(done);
            assert_eq!(models.len(), expected);
            for m in &models {
                assert!(verify_extension(&o, &e.decode(&o, m)).unwrap());
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let chain = StrictPartialOrder::new(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert_eq!(extend_total_finite(&chain).unwrap(), s(&["a", "b", "c"]));
        let empty = StrictPartialOrder::new(&["a", "b"], &[]);
        assert_eq!(extend_total_finite(&empty).unwrap(), s(&["a", "b"]));
        let o = StrictPartialOrder::new(&["a", "b", "c"], &[("b", "a"), ("c", "a")]);
        assert_eq!(extend_total_finite(&o).unwrap(), s(&["b", "c", "a"]));
    }

    #[test]
    fn verify_examples() {
        let o = StrictPartialOrder::new(&["a", "b"], &[("a", "b")]);
        assert!(verify_extension(&o, &s(&["a", "b"])).unwrap());
        assert!(!verify_extension(&o, &s(&["b", "a"])).unwrap());
        assert!(matches!(verify_extension(&o, &s(&["a"])), Err(Error::PermutationMismatch(_))));
    }

    #[test]
    fn invalid_orders_rejected() {
        let refl = StrictPartialOrder::new(&["a"], &[("a", "a")]);
        assert!(matches!(encode_extension(&refl), Err(Error::InvalidOrder(_))));
        let cyc = StrictPartialOrder::new(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        assert!(matches!(extend_total_finite(&cyc), Err(Error::InvalidOrder(_))));
    }
}
