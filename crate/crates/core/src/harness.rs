//! Infinite formula sets as restartable streams of finite blocks, solved
//! through growing fragments.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::Serialize;

use crate::dynamic_matching::{encode_dynamic_window, no_finite_presence_truncated, parity_line, period_formulas};
use crate::error::{Error, Result};
use crate::label;
use crate::logic::{Atom, Encoding, Formula, Label, Lit, Model, SolveResult, Solver, VarId, VarRegistry};
use crate::lp::{q, Q};
use crate::revealed_pref::{encode_rationalization_fragment, violating_pair, DemandDataset, GridConfig};
use crate::stoch_choice::{cyclic_fixture, encode_stoch_fragment, StochDataset};

pub const MAX_PREFIX_VARS: usize = 24;
/// Consecutive empty blocks tolerated before a stream is treated as stuck.
const MAX_EMPTY_BLOCKS: usize = 1024;

/// A deterministic generator of formula blocks. Block `b` registers its
/// variables in `reg` by label; `None` marks the end of a finite stream.
pub trait FormulaStream: Send + Sync {
    fn block(&self, b: usize, reg: &mut VarRegistry) -> Result<Option<Vec<Formula>>>;
}

impl<F> FormulaStream for F
where
    F: Fn(usize, &mut VarRegistry) -> Result<Option<Vec<Formula>>> + Send + Sync,
{
    fn block(&self, b: usize, reg: &mut VarRegistry) -> Result<Option<Vec<Formula>>> {
        self(b, reg)
    }
}

/// A finished encoding replayed block by block; `ends[b]` is the formula
/// count after block `b`.
pub struct EncodingStream {
    pub enc: Encoding,
    pub ends: Vec<usize>,
}

impl FormulaStream for EncodingStream {
    fn block(&self, b: usize, reg: &mut VarRegistry) -> Result<Option<Vec<Formula>>> {
        let Some(&end) = self.ends.get(b) else { return Ok(None) };
        let start = if b == 0 { 0 } else { self.ends[b - 1] };
        let mut rename = |v: VarId| {
            let mut l = self.enc.reg.label(v).clone();
            if l.aux {
                // keep clear of auxiliaries the fragment's own CNF conversion creates
                l.kind = format!("{}@stream", l.kind);
            }
            reg.var(l)
        };
        Ok(Some(self.enc.formulas[start..end].iter().map(|f| f.map_vars(&mut rename)).collect()))
    }
}

#[derive(Clone)]
pub struct InfiniteInstance {
    pub name: String,
    pub domain: String,
    /// How formulas are ordered in the stream; fragments are prefixes of it.
    pub ordering: String,
    stream: Arc<dyn FormulaStream>,
}

impl std::fmt::Debug for InfiniteInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InfiniteInstance").field("name", &self.name).field("domain", &self.domain).finish()
    }
}

impl InfiniteInstance {
    pub fn new(name: &str, domain: &str, ordering: &str, stream: impl FormulaStream + 'static) -> Self {
        InfiniteInstance { name: name.into(), domain: domain.into(), ordering: ordering.into(), stream: Arc::new(stream) }
    }

    /// Walks blocks until `enough` says stop or the stream ends.
    fn walk(&self, mut enough: impl FnMut(&Encoding) -> bool) -> Result<Encoding> {
        let mut enc = Encoding::new();
        let mut empty = 0;
        let mut b = 0;
        while !enough(&enc) {
            match self.stream.block(b, &mut enc.reg)? {
                None => break,
                Some(fs) => {
                    empty = if fs.is_empty() { empty + 1 } else { 0 };
                    if empty > MAX_EMPTY_BLOCKS {
                        return Err(Error::Budget(format!("{}: stream stopped producing formulas", self.name)));
                    }
                    enc.extend(fs);
                }
            }
            b += 1;
        }
        Ok(enc)
    }

    /// The first `k` formulas of the stream (fewer if it is finite and shorter).
    pub fn fragment(&self, k: usize) -> Result<Encoding> {
        let mut enc = self.walk(|e| e.formulas.len() >= k)?;
        enc.formulas.truncate(k);
        Ok(enc)
    }

    /// The first `m` variables in the order the stream registers them.
    pub fn variables(&self, m: usize) -> Result<Vec<Label>> {
        let enc = self.walk(|e| e.reg.source_vars().count() >= m)?;
        Ok(enc.reg.source_vars().take(m).map(|v| enc.reg.label(v).clone()).collect())
    }
}

/// One finite formula set of a ladder, tagged with its size parameter.
#[derive(Clone, Debug)]
pub struct Rung {
    pub k: usize,
    pub enc: Encoding,
}

/// Fragments `step, 2·step, ..., k_max` (with `k_max` itself always included).
pub fn fragment_rungs(inst: &InfiniteInstance, k_max: usize, step: usize) -> Result<Vec<Rung>> {
    if step == 0 {
        return Err(Error::InvalidInstance("ladder step must be positive".into()));
    }
    let mut ks: Vec<usize> = (1..).map_while(|i: usize| i.checked_mul(step)).take_while(|&k| k <= k_max).collect();
    if ks.last() != Some(&k_max) {
        ks.push(k_max);
    }
    let full = inst.fragment(k_max)?;
    let mut rungs: Vec<Rung> = ks
        .into_iter()
        .map(|k| {
            let mut enc = full.clone();
            enc.formulas.truncate(k);
            Rung { k, enc }
        })
        .collect();
    // a finite stream shorter than k_max gives repeated rungs
    rungs.dedup_by_key(|r| r.enc.formulas.len());
    Ok(rungs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RungStatus {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Forcing {
    /// Not mentioned by the rung.
    Absent,
    /// The rung has no model (or ran out of budget).
    Void,
    True,
    False,
    /// Both values extend to a model.
    Free,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stabilization {
    /// Forced to `value` at every rung from `since_k` on.
    Stable { value: bool, since_k: usize },
    Unstable,
}

#[derive(Clone, Debug, Serialize)]
pub struct RungReport {
    pub k: usize,
    pub formulas: usize,
    pub variables: usize,
    pub status: RungStatus,
    /// Hash of the true source variables of the model found.
    pub digest: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VarHistory {
    pub label: String,
    /// Value in each rung's model.
    pub values: Vec<Option<bool>>,
    pub forced: Vec<Forcing>,
    pub stabilization: Stabilization,
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderReport {
    pub instance: String,
    pub domain: String,
    pub ordering: String,
    /// Whether each rung contains the previous one.
    pub nested: bool,
    pub rungs: Vec<RungReport>,
    pub variables: Vec<VarHistory>,
    /// No rung is satisfiable after an unsatisfiable one.
    pub monotone: bool,
    pub first_unsat: Option<usize>,
}

impl LadderReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn unstable(&self) -> Vec<&str> {
        self.variables.iter().filter(|v| v.stabilization == Stabilization::Unstable).map(|v| v.label.as_str()).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LadderConfig {
    /// Number of leading variables whose histories are tracked.
    pub track: usize,
    pub conflict_budget: Option<u64>,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig { track: 8, conflict_budget: None }
    }
}

fn digest(enc: &Encoding, m: &Model) -> String {
    let mut labels: Vec<String> = enc.reg.source_vars().filter(|&v| m.is_true(v)).map(|v| enc.reg.label(v).to_string()).collect();
    labels.sort();
    let mut h = DefaultHasher::new();
    labels.hash(&mut h);
    format!("{:016x}", h.finish())
}

struct RungOutcome {
    report: RungReport,
    values: Vec<Option<bool>>,
    forced: Vec<Forcing>,
}

fn solve_rung(rung: &Rung, tracked: &[Label], budget: Option<u64>) -> RungOutcome {
    let (cs, _) = rung.enc.to_cnf();
    let mut solver = Solver::from_clauses(&cs);
    solver.set_conflict_budget(budget);
    let first = solver.solve(&[]);
    let status = match &first {
        SolveResult::Sat(_) => RungStatus::Sat,
        SolveResult::Unsat => RungStatus::Unsat,
        SolveResult::Unknown => RungStatus::Unknown,
    };
    let ids: Vec<Option<VarId>> = tracked.iter().map(|l| rung.enc.reg.lookup(l)).collect();
    let model = first.into_model();
    let values = ids.iter().map(|v| Some(model.as_ref()?.is_true((*v)?))).collect();
    let forced = ids
        .iter()
        .map(|v| match (v, &model) {
            (None, _) => Forcing::Absent,
            (_, None) => Forcing::Void,
            (Some(v), Some(m)) => {
                // the model already witnesses its own value
                let other = !m.is_true(*v);
                match solver.solve(&[Lit::new(*v, other)]) {
                    SolveResult::Sat(_) | SolveResult::Unknown => Forcing::Free,
                    SolveResult::Unsat if other => Forcing::False,
                    SolveResult::Unsat => Forcing::True,
                }
            }
        })
        .collect();
    let report = RungReport {
        k: rung.k,
        formulas: rung.enc.formulas.len(),
        variables: rung.enc.reg.source_vars().count(),
        status,
        digest: model.as_ref().map(|m| digest(&rung.enc, m)),
    };
    RungOutcome { report, values, forced }
}

/// Solves every rung (concurrently) and assembles the report.
pub fn ladder_over(meta: (&str, &str, &str), nested: bool, rungs: &[Rung], tracked: &[Label], budget: Option<u64>) -> LadderReport {
    let outcomes: Vec<RungOutcome> = std::thread::scope(|s| {
        let handles: Vec<_> = rungs.iter().map(|r| s.spawn(move || solve_rung(r, tracked, budget))).collect();
        handles.into_iter().map(|h| h.join().expect("rung worker panicked")).collect()
    });
    let first_unsat = outcomes.iter().find(|o| o.report.status == RungStatus::Unsat).map(|o| o.report.k);
    let monotone = outcomes
        .iter()
        .skip_while(|o| o.report.status != RungStatus::Unsat)
        .all(|o| o.report.status != RungStatus::Sat);
    let variables = tracked
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let forced: Vec<Forcing> = outcomes.iter().map(|o| o.forced[j]).collect();
            let values = outcomes.iter().map(|o| o.values[j]).collect();
            let stabilization = match forced.last() {
                Some(&f @ (Forcing::True | Forcing::False)) => {
                    let tail = forced.iter().rev().take_while(|&&g| g == f).count();
                    Stabilization::Stable { value: f == Forcing::True, since_k: rungs[rungs.len() - tail].k }
                }
                _ => Stabilization::Unstable,
            };
            VarHistory { label: l.to_string(), values, forced, stabilization }
        })
        .collect();
    LadderReport {
        instance: meta.0.into(),
        domain: meta.1.into(),
        ordering: meta.2.into(),
        nested,
        rungs: outcomes.into_iter().map(|o| o.report).collect(),
        variables,
        monotone,
        first_unsat,
    }
}

pub fn ladder_solve(inst: &InfiniteInstance, k_max: usize, step: usize, cfg: &LadderConfig) -> Result<LadderReport> {
    let rungs = fragment_rungs(inst, k_max, step)?;
    let tracked = inst.variables(cfg.track)?;
    Ok(ladder_over((&inst.name, &inst.domain, &inst.ordering), true, &rungs, &tracked, cfg.conflict_budget))
}

#[derive(Clone, Debug, Serialize)]
pub struct PrefixSearch {
    pub labels: Vec<String>,
    pub rungs: Vec<usize>,
    /// Surviving prefixes, in search order (false before true).
    pub prefixes: Vec<Vec<bool>>,
    /// The whole prefix tree was explored.
    pub complete: bool,
    pub nodes: usize,
}

impl PrefixSearch {
    pub fn exhausted(&self) -> bool {
        self.prefixes.is_empty() && self.complete
    }

    pub fn named(&self, i: usize) -> BTreeMap<String, bool> {
        self.labels.iter().cloned().zip(self.prefixes[i].iter().copied()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Assumption literals for `prefix` in a rung; labels the rung never
/// mentions are left out.
pub fn prefix_assumptions(enc: &Encoding, labels: &[Label], prefix: &[bool]) -> Vec<Lit> {
    labels.iter().zip(prefix).filter_map(|(l, &b)| Some(Lit::new(enc.reg.lookup(l)?, b))).collect()
}

/// Depth-first search over assignments to `labels`, keeping a branch while
/// every rung stays satisfiable under it. Stops after `cap` prefixes.
pub fn prefix_search(rungs: &[Rung], labels: &[Label], cap: usize) -> Result<PrefixSearch> {
    if labels.len() > MAX_PREFIX_VARS {
        return Err(Error::SizeBound(format!("{} prefix variables (max {MAX_PREFIX_VARS})", labels.len())));
    }
    let mut solvers: Vec<Solver> = rungs.iter().map(|r| Solver::from_clauses(&r.enc.to_cnf().0)).collect();
    let ids: Vec<Vec<Option<VarId>>> = rungs.iter().map(|r| labels.iter().map(|l| r.enc.reg.lookup(l)).collect()).collect();
    let mut out = PrefixSearch {
        labels: labels.iter().map(|l| l.to_string()).collect(),
        rungs: rungs.iter().map(|r| r.k).collect(),
        prefixes: vec![],
        complete: true,
        nodes: 0,
    };
    let mut prefix = Vec::new();
    dfs(&mut solvers, &ids, &mut prefix, cap, &mut out);
    Ok(out)
}

fn dfs(solvers: &mut [Solver], ids: &[Vec<Option<VarId>>], prefix: &mut Vec<bool>, cap: usize, out: &mut PrefixSearch) -> bool {
    out.nodes += 1;
    for (s, vars) in solvers.iter_mut().zip(ids) {
        let assumptions: Vec<Lit> = vars.iter().zip(prefix.iter()).filter_map(|(v, &b)| Some(Lit::new((*v)?, b))).collect();
        if !s.solve(&assumptions).is_sat() {
            return true;
        }
    }
    if prefix.len() == ids.first().map_or(0, |v| v.len()) {
        out.prefixes.push(prefix.clone());
        if out.prefixes.len() >= cap {
            out.complete = false;
            return false;
        }
        return true;
    }
    for b in [false, true] {
        prefix.push(b);
        let go_on = dfs(solvers, ids, prefix, cap, out);
        prefix.pop();
        if !go_on {
            return false;
        }
    }
    true
}

/// A prefix over the first `m` variables consistent with every fragment of
/// the ladder, or exhaustion.
pub fn prefix_limit(inst: &InfiniteInstance, m: usize, k_max: usize, step: usize) -> Result<PrefixSearch> {
    let rungs = fragment_rungs(inst, k_max, step)?;
    let labels = inst.variables(m)?;
    prefix_search(&rungs, &labels, 1)
}

fn time_of_block(b: usize) -> i64 {
    // 0, -1, 1, -2, 2, ...
    if b % 2 == 1 {
        -((b as i64 + 1) / 2)
    } else {
        b as i64 / 2
    }
}

/// Naturals with `gt(a, b)` variables. Block `n` adds element `n` with its
/// totality, asymmetry and transitivity formulas (every triple whose largest
/// element is `n`), preceded by the facts `gt(n, j)` for `j < n` if `facts`.
pub fn szpilrajn_naturals(facts: bool) -> InfiniteInstance {
    let stream = move |n: usize, reg: &mut VarRegistry| -> Result<Option<Vec<Formula>>> {
        let mut gt = |a: usize, b: usize| Atom(reg.var(label!("gt", a, b)));
        let mut out = Vec::new();
        for j in 0..n {
            gt(j, n);
            gt(n, j);
        }
        if facts {
            out.extend((0..n).map(|j| gt(n, j)));
        }
        for j in 0..n {
            out.push(Formula::or([gt(j, n), gt(n, j)]));
            out.push(Formula::not(Formula::and([gt(j, n), gt(n, j)])));
        }
        for a in 0..=n {
            for b in 0..=n {
                for c in 0..=n {
                    if a == b || b == c || a == c || a.max(b).max(c) != n {
                        continue;
                    }
                    out.push(Formula::implies(Formula::and([gt(a, b), gt(b, c)]), gt(a, c)));
                }
            }
        }
        Ok(Some(out))
    };
    let name = if facts { "szpilrajn" } else { "szpilrajn_free" };
    InfiniteInstance::new(name, "orders", "by largest element, facts then totality, asymmetry, transitivity", stream)
}

/// Men `m_i` and women `w_i` acceptable only to each other.
pub fn disjoint_pairs() -> InfiniteInstance {
    let stream = |i: usize, reg: &mut VarRegistry| -> Result<Option<Vec<Formula>>> {
        let v = reg.var(label!("matched", format!("m{i}"), format!("w{i}")));
        // no better partner on either side, so the pair must be matched
        Ok(Some(vec![Formula::implies(Formula::not(Atom(v)), Formula::Const(false))]))
    };
    InfiniteInstance::new("disjoint_pairs", "matching", "by pair index", stream)
}

/// Man `m_i` ranks `w_{i+1}` over `w_i`; woman `w_i` ranks `m_i` over
/// `m_{i-1}`. Exactly two stable matchings: everyone with the same index,
/// or every man shifted one woman up.
pub fn shift_market() -> InfiniteInstance {
    let stream = |n: usize, reg: &mut VarRegistry| -> Result<Option<Vec<Formula>>> {
        let mut v = |m: usize, w: usize| reg.var(label!("matched", format!("m{m}"), format!("w{w}")));
        let own = v(n, n);
        if n == 0 {
            return Ok(Some(vec![]));
        }
        let (up, keep) = (v(n - 1, n), v(n - 1, n - 1));
        let mut out = Formula::at_most_one(&[keep, up]);
        out.extend(Formula::at_most_one(&[own, up]));
        out.push(Formula::implies(Formula::not(Atom(up)), Atom(own)));
        out.push(Formula::implies(Formula::not(Atom(keep)), Atom(up)));
        Ok(Some(out))
    };
    InfiniteInstance::new("shift_market", "matching", "by largest participant index", stream)
}

/// `P`, then fresh atoms, with `¬P` as block 3.
pub fn contradictory() -> InfiniteInstance {
    let stream = |b: usize, reg: &mut VarRegistry| -> Result<Option<Vec<Formula>>> {
        let p = reg.var(label!("p"));
        Ok(Some(match b {
            0 => vec![Atom(p)],
            3 => vec![Formula::not(Atom(p))],
            _ => vec![Atom(reg.var(label!("q", b)))],
        }))
    };
    InfiniteInstance::new("contradictory", "logic", "p, q1, q2, not p, q4, ...", stream)
}

/// The dynamic market with one woman and man `m_t` on the market at `t` and
/// `t + 1` for every integer `t`.
pub fn parity_line_stream() -> InfiniteInstance {
    let stream = |b: usize, reg: &mut VarRegistry| -> Result<Option<Vec<Formula>>> {
        let t = time_of_block(b);
        let mkt = parity_line(t - 2, t)?;
        Ok(Some(period_formulas(&mkt, t, reg)))
    };
    InfiniteInstance::new("parity_line", "dynamic_matching", "by |t| (negative first), then man", stream)
}

/// Grid rationalization formulas by resolution level `1..=n_cap`.
pub fn revealed_pref_stream(name: &str, ds: &DemandDataset, n_cap: u32) -> Result<InfiniteInstance> {
    let ge = encode_rationalization_fragment(ds, &GridConfig::new(n_cap))?;
    let stream = EncodingStream { enc: ge.enc, ends: ge.level_ends };
    Ok(InfiniteInstance::new(name, "revealed_pref", "by grid level, then formula type", stream))
}

/// Marginal-family formulas by resolution level `1..=n_cap`.
pub fn stoch_stream(name: &str, ds: &StochDataset, n_cap: u32, max_len: usize) -> Result<InfiniteInstance> {
    let se = encode_stoch_fragment(ds, n_cap, max_len)?;
    let stream = EncodingStream { enc: se.enc, ends: se.level_ends };
    Ok(InfiniteInstance::new(name, "stoch_choice", "by grid level, then formula type", stream))
}

/// Observation `k` has prices `(1, k + 1)` and bundle `(k + 1, 1)`: demand
/// of an equal-share Cobb-Douglas consumer.
pub fn cobb_douglas_dataset(count: usize) -> DemandDataset {
    let obs = (0..count).map(|k| (vec![q(1), q(k as i64 + 1)], vec![q(k as i64 + 1), q(1)])).collect();
    DemandDataset::new(2, obs).expect("valid")
}

/// Uniform choice over every menu of `{a, b, c}`.
pub fn uniform_stoch() -> StochDataset {
    let third = Q::new(1.into(), 3.into());
    let half = Q::new(1.into(), 2.into());
    StochDataset::from_named(&[
        (&["a", "b"], "a", half.clone()),
        (&["b", "c"], "b", half.clone()),
        (&["a", "c"], "a", half),
        (&["a", "b", "c"], "a", third.clone()),
        (&["a", "b", "c"], "b", third),
    ])
    .expect("valid")
}

pub const BUILTIN_FAMILIES: &[&str] = &[
    "szpilrajn",
    "szpilrajn_free",
    "disjoint_pairs",
    "shift_market",
    "contradictory",
    "parity_line",
    "cobb_douglas",
    "violating_pair",
    "stoch_uniform",
    "stoch_cyclic",
];

pub fn builtin(name: &str) -> Result<InfiniteInstance> {
    match name {
        "szpilrajn" => Ok(szpilrajn_naturals(true)),
        "szpilrajn_free" => Ok(szpilrajn_naturals(false)),
        "disjoint_pairs" => Ok(disjoint_pairs()),
        "shift_market" => Ok(shift_market()),
        "contradictory" => Ok(contradictory()),
        "parity_line" => Ok(parity_line_stream()),
        "cobb_douglas" => revealed_pref_stream(name, &cobb_douglas_dataset(3), 4),
        "violating_pair" => revealed_pref_stream(name, &violating_pair(), 4),
        "stoch_uniform" => stoch_stream(name, &uniform_stoch(), 4, 3),
        "stoch_cyclic" => stoch_stream(name, &cyclic_fixture(Q::new(7.into(), 10.into())), 8, 3),
        _ => Err(Error::InvalidInstance(format!("unknown family {name}; known: {}", BUILTIN_FAMILIES.join(", ")))),
    }
}

/// Window encodings of the no-finite-presence family cut to `m_1 .. m_T`
/// over `[-T, -1]`, one rung per `T`. The rungs are not nested.
pub fn no_finite_presence_rungs(ts: std::ops::RangeInclusive<i64>) -> Result<Vec<Rung>> {
    ts.map(|t| {
        let mkt = no_finite_presence_truncated(t)?;
        Ok(Rung { k: t as usize, enc: encode_dynamic_window(&mkt, -t, -1)?.enc })
    })
    .collect()
}

/// `matched(m_j, w, -1)` for `j = 1..=count`.
pub fn time_minus_one_labels(count: usize) -> Vec<Label> {
    (1..=count).map(|j| label!("matched", format!("m{j}"), "w", -1)).collect()
}
