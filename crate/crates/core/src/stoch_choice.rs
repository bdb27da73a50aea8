//! Stochastic choice: ARSP, rationalization by distributions over orders,
//! marginal families and the dyadic probability-grid encoding.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label;
use crate::logic::arith::{self, Bits};
use crate::logic::{Atom, Encoding, Formula, Model, VarId};
use crate::lp::{parse_q, q, q_str, Cmp, LinearProgram, Q};

pub const MAX_ARSP_ITEMS: usize = 7;
pub const MAX_RATIONALIZE_ITEMS: usize = 6;
pub const MAX_ENCODE_ITEMS: usize = 7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StochEntry {
    /// Sorted item indices.
    pub menu: Vec<usize>,
    pub choice: usize,
    pub prob: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StochDataset {
    pub items: Vec<String>,
    pub entries: Vec<StochEntry>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    menu: Vec<String>,
    choice: String,
    prob: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    items: Vec<String>,
    entries: Vec<EntryJson>,
}

fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

impl StochDataset {
    pub fn new(items: Vec<String>, entries: Vec<(Vec<usize>, usize, Q)>) -> Result<Self> {
        let entries = entries
            .into_iter()
            .map(|(mut menu, choice, prob)| {
                menu.sort_unstable();
                StochEntry { menu, choice, prob }
            })
            .collect();
        let mut ds = StochDataset { items, entries };
        ds.complete();
        ds.validate()?;
        Ok(ds)
    }

    /// Fills in the one unrecorded choice of a menu with the remaining mass.
    fn complete(&mut self) {
        let mut per_menu: BTreeMap<Vec<usize>, (Q, BTreeSet<usize>)> = BTreeMap::new();
        for e in &self.entries {
            let slot = per_menu.entry(e.menu.clone()).or_insert((q(0), BTreeSet::new()));
            slot.0 += &e.prob;
            slot.1.insert(e.choice);
        }
        for (menu, (total, chosen)) in per_menu {
            let missing: Vec<usize> = menu.iter().copied().filter(|x| !chosen.contains(x)).collect();
            if missing.len() == 1 && total <= q(1) {
                self.entries.push(StochEntry { menu, choice: missing[0], prob: q(1) - total });
            }
        }
    }

    /// Entries given by item names; items are collected in order of appearance.
    pub fn from_named(entries: &[(&[&str], &str, Q)]) -> Result<Self> {
        let mut items: Vec<String> = Vec::new();
        let idx = |s: &str, items: &mut Vec<String>| match items.iter().position(|i| i == s) {
            Some(i) => i,
            None => {
                items.push(s.to_string());
                items.len() - 1
            }
        };
        let mut es = Vec::new();
        for (menu, choice, p) in entries {
            let menu: Vec<usize> = menu.iter().map(|m| idx(m, &mut items)).collect();
            let c = idx(choice, &mut items);
            es.push((menu, c, p.clone()));
        }
        StochDataset::new(items, es)
    }

    pub fn validate(&self) -> Result<()> {
        let mut per_menu: BTreeMap<&[usize], (Q, BTreeSet<usize>)> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.menu.is_empty() || e.menu.windows(2).any(|w| w[0] == w[1]) || e.menu.iter().any(|&x| x >= self.items.len()) {
                return Err(Error::InvalidInstance(format!("entry {i}: bad menu")));
            }
            if !e.menu.contains(&e.choice) {
                return Err(Error::InvalidInstance(format!("entry {i}: choice not in menu")));
            }
            if e.prob < q(0) || e.prob > q(1) {
                return Err(Error::InvalidInstance(format!("entry {i}: probability outside [0,1]")));
            }
            let slot = per_menu.entry(&e.menu).or_insert((q(0), BTreeSet::new()));
            if !slot.1.insert(e.choice) {
                return Err(Error::InvalidInstance(format!("entry {i}: duplicate (menu, choice)")));
            }
            slot.0 += &e.prob;
        }
        for (menu, (total, chosen)) in per_menu {
            if chosen.len() != menu.len() {
                return Err(Error::InvalidInstance(format!("menu {:?}: more than one choice unrecorded", self.names(menu))));
            }
            if total != q(1) {
                return Err(Error::InvalidInstance(format!("menu {:?}: probabilities sum to {}", self.names(menu), q_str(&total))));
            }
        }
        Ok(())
    }

    pub fn names(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.items[i].clone()).collect()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_with(s, false)
    }

    /// With `allow_float`, JSON numbers are read as the exact binary value
    /// of the float; otherwise probabilities must be integers or strings.
    pub fn from_json_with(s: &str, allow_float: bool) -> Result<Self> {
        let raw: DatasetJson = serde_json::from_str(s)?;
        let idx = |name: &str| raw.items.iter().position(|i| i == name).ok_or_else(|| Error::Parse(format!("unknown item {name}")));
        let mut es = Vec::new();
        for e in &raw.entries {
            let prob = match &e.prob {
                serde_json::Value::String(s) => parse_q(s).ok_or_else(|| Error::Parse(format!("bad probability {s:?}")))?,
                serde_json::Value::Number(n) if n.is_i64() => q(n.as_i64().unwrap()),
                serde_json::Value::Number(n) if allow_float => Q::from_float(n.as_f64().unwrap()).ok_or_else(|| Error::Parse("bad float".into()))?,
                other => return Err(Error::Parse(format!("probability {other} must be an exact rational string"))),
            };
            es.push((e.menu.iter().map(|m| idx(m)).collect::<Result<Vec<_>>>()?, idx(&e.choice)?, prob));
        }
        StochDataset::new(raw.items.clone(), es)
    }

    pub fn to_json(&self) -> String {
        let raw = DatasetJson {
            items: self.items.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EntryJson { menu: self.names(&e.menu), choice: self.items[e.choice].clone(), prob: q_str(&e.prob).into() })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("serializable")
    }

    fn max_menu(&self) -> usize {
        self.entries.iter().map(|e| e.menu.len()).max().unwrap_or(0)
    }
}

/// `rank[item]` of a permutation listed best first.
fn ranks(perm: &[usize], n: usize) -> Vec<usize> {
    let mut r = vec![usize::MAX; n];
    for (i, &x) in perm.iter().enumerate() {
        r[x] = i;
    }
    r
}

fn tops(e: &StochEntry, rank: &[usize]) -> bool {
    e.menu.iter().all(|&y| y == e.choice || rank[e.choice] < rank[y])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArspReport {
    pub satisfied: bool,
    /// Entry indices (with repetition) of the first violating sequence.
    pub witness: Vec<usize>,
    pub lhs: String,
    pub rhs: usize,
}

pub fn check_arsp(ds: &StochDataset, max_len: usize) -> Result<ArspReport> {
    let n = ds.items.len();
    for len in 1..=max_len {
        for seq in (0..ds.entries.len()).combinations_with_replacement(len) {
            let union: BTreeSet<usize> = seq.iter().flat_map(|&i| ds.entries[i].menu.iter().copied()).collect();
            if union.len() > MAX_ARSP_ITEMS {
                return Err(Error::SizeBound(format!("sequence spans {} items (max {MAX_ARSP_ITEMS})", union.len())));
            }
            let lhs: Q = seq.iter().map(|&i| ds.entries[i].prob.clone()).sum();
            let mut best = 0;
            for perm in union.iter().copied().permutations(union.len()) {
                let r = ranks(&perm, n);
                best = best.max(seq.iter().filter(|&&i| tops(&ds.entries[i], &r)).count());
                if best == seq.len() {
                    break;
                }
            }
            if lhs > q(best as i64) {
                return Ok(ArspReport { satisfied: false, witness: seq, lhs: q_str(&lhs), rhs: best });
            }
        }
    }
    Ok(ArspReport { satisfied: true, witness: vec![], lhs: String::new(), rhs: 0 })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderDistribution {
    pub num_items: usize,
    /// Orders listed best first, with positive weights.
    pub orders: Vec<(Vec<usize>, Q)>,
}

impl OrderDistribution {
    pub fn new(num_items: usize, orders: Vec<(Vec<usize>, Q)>) -> Result<Self> {
        let total: Q = orders.iter().map(|(_, w)| w.clone()).sum();
        if orders.iter().any(|(o, w)| w < &q(0) || o.len() != num_items || o.iter().copied().collect::<BTreeSet<_>>().len() != num_items || o.iter().any(|&x| x >= num_items))
            || total != q(1)
        {
            return Err(Error::InvalidInstance("not a distribution over total orders".into()));
        }
        Ok(OrderDistribution { num_items, orders: orders.into_iter().filter(|(_, w)| !w.is_zero()).collect() })
    }

    pub fn choice_prob(&self, menu: &[usize], x: usize) -> Q {
        let e = StochEntry { menu: menu.to_vec(), choice: x, prob: q(0) };
        self.orders.iter().filter(|(o, _)| tops(&e, &ranks(o, self.num_items))).map(|(_, w)| w.clone()).sum()
    }

    /// `Pr[a1 > a2 > ... > an]`.
    pub fn tuple_prob(&self, t: &[usize]) -> Q {
        self.orders
            .iter()
            .filter(|(o, _)| {
                let r = ranks(o, self.num_items);
                t.windows(2).all(|w| r[w[0]] < r[w[1]])
            })
            .map(|(_, w)| w.clone())
            .sum()
    }

    pub fn marginals(&self, max_len: usize) -> MarginalFamily {
        let mut values = BTreeMap::new();
        for t in tuples(self.num_items, max_len) {
            let p = self.tuple_prob(&t);
            values.insert(t, p);
        }
        MarginalFamily { values }
    }

    pub fn induce(&self, items: Vec<String>, menus: &[(Vec<usize>, usize)]) -> Result<StochDataset> {
        StochDataset::new(items, menus.iter().map(|(m, x)| (m.clone(), *x, self.choice_prob(m, *x))).collect())
    }
}

pub fn rationalize_finite(ds: &StochDataset) -> Result<Option<OrderDistribution>> {
    let n = ds.items.len();
    if n > MAX_RATIONALIZE_ITEMS {
        return Err(Error::SizeBound(format!("{n} items (max {MAX_RATIONALIZE_ITEMS})")));
    }
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let rks: Vec<Vec<usize>> = perms.iter().map(|p| ranks(p, n)).collect();
    let mut lp = LinearProgram::new(perms.len());
    lp.add((0..perms.len()).map(|i| (i, q(1))).collect(), Cmp::Eq, q(1));
    for e in &ds.entries {
        let row = (0..perms.len()).filter(|&i| tops(e, &rks[i])).map(|i| (i, q(1))).collect();
        lp.add(row, Cmp::Eq, e.prob.clone());
    }
    Ok(lp.feasible().map(|w| OrderDistribution { num_items: n, orders: perms.into_iter().zip(w).filter(|(_, w)| !w.is_zero()).collect() }))
}

/// All tuples of distinct items from `0..n` of length `1..=max_len`.
pub fn tuples(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    (1..=max_len.min(n)).flat_map(|k| (0..n).permutations(k)).collect()
}

fn insert_at(t: &[usize], i: usize, a: usize) -> Vec<usize> {
    let mut v = t.to_vec();
    v.insert(i, a);
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalFamily {
    pub values: BTreeMap<Vec<usize>, Q>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarginalViolation {
    Singleton { item: usize, value: Q },
    Insertion { tuple: Vec<usize>, item: usize, lhs: Q, rhs: Q },
}

impl MarginalFamily {
    pub fn get(&self, t: &[usize]) -> Option<&Q> {
        self.values.get(t)
    }

    fn items(&self) -> BTreeSet<usize> {
        self.values.keys().flatten().copied().collect()
    }

    /// Insertion identities where every side is stored: `(tuple, item,
    /// value of tuple, sum over insertions)`.
    pub fn insertions(&self) -> Vec<(Vec<usize>, usize, Q, Q)> {
        let items = self.items();
        let mut out = Vec::new();
        for (t, p) in &self.values {
            for &a in &items {
                if t.contains(&a) {
                    continue;
                }
                let parts: Option<Vec<&Q>> = (0..=t.len()).map(|i| self.values.get(&insert_at(t, i, a))).collect();
                if let Some(parts) = parts {
                    out.push((t.clone(), a, p.clone(), parts.into_iter().sum()));
                }
            }
        }
        out
    }

    /// Probability of choosing `x` from `menu`, when the needed tuples are stored.
    pub fn choice_prob(&self, menu: &[usize], x: usize) -> Option<Q> {
        let rest: Vec<usize> = menu.iter().copied().filter(|&y| y != x).collect();
        let k = rest.len();
        rest.into_iter()
            .permutations(k)
            .map(|p| self.values.get(&[vec![x], p].concat()).cloned())
            .sum()
    }
}

/// Exact consistency: singletons are one and all stored insertion identities hold.
pub fn check_marginal_consistency(mf: &MarginalFamily) -> std::result::Result<(), MarginalViolation> {
    check_marginal_within(mf, &q(0))
}

/// Consistency with the grid slack: each insertion sum lies in
/// `[p - (m+1)·eps, p]`, `m` the tuple length.
pub fn check_marginal_within(mf: &MarginalFamily, eps: &Q) -> std::result::Result<(), MarginalViolation> {
    for (t, v) in &mf.values {
        if t.len() == 1 && *v != q(1) {
            return Err(MarginalViolation::Singleton { item: t[0], value: v.clone() });
        }
    }
    for (t, a, p, s) in mf.insertions() {
        let slack = eps * q(t.len() as i64 + 1);
        if s > p || s < &p - slack {
            return Err(MarginalViolation::Insertion { tuple: t, item: a, lhs: p, rhs: s });
        }
    }
    Ok(())
}

pub struct StochEncoding {
    pub enc: Encoding,
    pub n_max: u32,
    pub tuples: Vec<Vec<usize>>,
    /// `vars[n-1][tuple][j]` is `prob(n, tuple, j·2^-n)`.
    pub vars: Vec<Vec<Vec<VarId>>>,
    /// Formula count after each level `1..=n_max`.
    pub level_ends: Vec<usize>,
}

/// Tuple length used for `ds`: at least `max_len`, and long enough for every menu.
pub fn effective_len(ds: &StochDataset, max_len: usize) -> usize {
    max_len.max(ds.max_menu())
}

pub fn encode_stoch_fragment(ds: &StochDataset, n_max: u32, max_len: usize) -> Result<StochEncoding> {
    ds.validate()?;
    let ni = ds.items.len();
    if ni > MAX_ENCODE_ITEMS {
        return Err(Error::SizeBound(format!("{ni} items (max {MAX_ENCODE_ITEMS})")));
    }
    if n_max == 0 || n_max > 20 {
        return Err(Error::SizeBound("n_max must be in 1..=20".into()));
    }
    let len = effective_len(ds, max_len);
    let ts = tuples(ni, len);
    let index: BTreeMap<Vec<usize>, usize> = ts.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let mut enc = Encoding::new();
    let tname = |t: &[usize]| ds.names(t).join(">");
    let vars: Vec<Vec<Vec<VarId>>> = (1..=n_max)
        .map(|n| {
            ts.iter()
                .map(|t| {
                    let nm = tname(t);
                    (0..=(1u64 << n)).map(|j| enc.reg.var(label!("prob", n, nm, format!("{j}/{}", 1u64 << n)))).collect()
                })
                .collect()
        })
        .collect();
    let mut level_ends = Vec::new();
    for n in 1..=n_max {
        let lv = &vars[n as usize - 1];
        let top = 1u64 << n;
        for row in lv {
            // 1, 2
            enc.extend(Formula::exactly_one(row));
        }
        // 3
        if n < n_max {
            let nx = &vars[n as usize];
            for (ti, row) in lv.iter().enumerate() {
                for j in 0..=top as usize {
                    let next = if j as u64 == top { vec![Atom(nx[ti][2 * j])] } else { vec![Atom(nx[ti][2 * j]), Atom(nx[ti][2 * j + 1])] };
                    enc.push(Formula::implies(Atom(row[j]), Formula::or(next)));
                }
            }
        }
        // 4
        for (ti, t) in ts.iter().enumerate() {
            if t.len() == 1 {
                enc.push(Atom(lv[ti][top as usize]));
            }
        }
        let mut bits: Vec<Option<Bits>> = vec![None; ts.len()];
        let mut bits_of = |enc: &mut Encoding, ti: usize| -> Bits {
            if bits[ti].is_none() {
                bits[ti] = Some(arith::onehot_bits(enc, &lv[ti]));
            }
            bits[ti].clone().unwrap()
        };
        // 5: insertion identity within (m+1)·eps_n
        for (ti, t) in ts.iter().enumerate() {
            if t.len() + 1 > len {
                continue;
            }
            for a in 0..ni {
                if t.contains(&a) {
                    continue;
                }
                let parts: Vec<Bits> = (0..=t.len()).map(|i| bits_of(&mut enc, index[&insert_at(t, i, a)])).collect();
                let s = arith::sum(&mut enc, &parts);
                let p = bits_of(&mut enc, ti);
                let slackened = arith::add(&mut enc, &s, &arith::constant(t.len() as u64 + 1, arith::width_for(t.len() as u64 + 1)));
                enc.push(arith::le(&s, &p));
                enc.push(arith::le(&p, &slackened));
            }
        }
        // 6: rationalization within (|A|-1)!·eps_n
        for e in &ds.entries {
            let rest: Vec<usize> = e.menu.iter().copied().filter(|&y| y != e.choice).collect();
            let k = rest.len();
            let parts: Vec<Bits> =
                rest.into_iter().permutations(k).map(|p| bits_of(&mut enc, index[&[vec![e.choice], p].concat()])).collect();
            let s = arith::sum(&mut enc, &parts);
            let scaled = &e.prob * q(top as i64);
            let hi = scaled.floor().to_integer().to_u64().unwrap_or(0);
            let lo = (scaled.ceil().to_integer().to_i64().unwrap_or(0) - factorial(k) as i64).max(0) as u64;
            enc.push(arith::le_const(&s, hi));
            enc.push(arith::ge_const(&s, lo));
        }
        level_ends.push(enc.formulas.len());
    }
    Ok(StochEncoding { enc, n_max, tuples: ts, vars, level_ends })
}

impl StochEncoding {
    pub fn level(&self, m: &Model, n: u32) -> MarginalFamily {
        let lv = &self.vars[n as usize - 1];
        let values = self
            .tuples
            .iter()
            .zip(lv)
            .map(|(t, row)| {
                let j = row.iter().position(|&v| m.is_true(v)).unwrap_or(0);
                (t.clone(), Q::new((j as i64).into(), (1i64 << n).into()))
            })
            .collect();
        MarginalFamily { values }
    }

    /// Source-variable model rounding `mf` down at every level; auxiliary
    /// variables are left unset.
    pub fn rounded_assignment(&self, mf: &MarginalFamily) -> BTreeMap<VarId, bool> {
        let mut out = BTreeMap::new();
        for (n, lv) in self.vars.iter().enumerate() {
            let scale = q(1i64 << (n + 1));
            for (t, row) in self.tuples.iter().zip(lv) {
                let v = mf.values.get(t).cloned().unwrap_or_else(|| q(0));
                let j = (v * &scale).floor().to_integer().to_usize().unwrap_or(0).min(row.len() - 1);
                for (k, &var) in row.iter().enumerate() {
                    out.insert(var, k == j);
                }
            }
        }
        out
    }
}

pub fn decode_marginals(se: &StochEncoding, m: &Model) -> MarginalFamily {
    se.level(m, se.n_max)
}

/// Largest ARSP-style violation the encoder may absorb at level `n`: the
/// widest rationalization slack over the dataset's entries.
pub fn detection_slack(ds: &StochDataset, n: u32) -> Q {
    let k = ds.entries.iter().map(|e| factorial(e.menu.len() - 1)).max().unwrap_or(0);
    Q::new((k as i64).into(), (1i64 << n).into())
}

pub fn cyclic_fixture(p: Q) -> StochDataset {
    StochDataset::from_named(&[(&["a", "b"], "a", p.clone()), (&["b", "c"], "b", p.clone()), (&["a", "c"], "c", p)]).expect("valid")
}
