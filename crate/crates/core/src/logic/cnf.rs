use std::fmt;
use std::ops::Not;

use super::formula::Formula;
use super::registry::{VarId, VarRegistry};

/// Signed literal packed as `2 * var + negated`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(v: VarId, positive: bool) -> Self {
        Lit(v.0 * 2 + u32::from(!positive))
    }
    pub fn pos(v: VarId) -> Self {
        Lit::new(v, true)
    }
    pub fn neg(v: VarId) -> Self {
        Lit::new(v, false)
    }
    pub fn var(self) -> VarId {
        VarId(self.0 >> 1)
    }
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }
    pub fn code(self) -> usize {
        self.0 as usize
    }
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.0 >> 1) + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
    pub fn from_dimacs(x: i64) -> Self {
        assert!(x != 0);
        Lit::new(VarId((x.unsigned_abs() - 1) as u32), x > 0)
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Sorts, dedups, and returns `None` for a tautology.
pub fn normalize_clause(mut lits: Vec<Lit>) -> Option<Vec<Lit>> {
    lits.sort_unstable();
    lits.dedup();
    if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
        return None;
    }
    Some(lits)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClauseSet {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

impl ClauseSet {
    pub fn new(num_vars: usize) -> Self {
        ClauseSet { num_vars, clauses: Vec::new() }
    }

    /// Adds a clause after normalization. Tautologies are dropped; an empty
    /// clause is a caller bug.
    pub fn add(&mut self, lits: Vec<Lit>) {
        assert!(!lits.is_empty(), "empty clause");
        if let Some(c) = normalize_clause(lits) {
            let top = c.iter().map(|l| l.var().index() + 1).max().unwrap_or(0);
            self.num_vars = self.num_vars.max(top);
            self.clauses.push(c);
        }
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

/// Appends the clauses of `f` to `out`, creating auxiliaries in `reg`.
///
/// Subformulae that sit in a single polarity get a one-directional
/// definition (the auxiliary implies the subformula); biconditional
/// children are defined in both polarities.
pub fn encode_into(f: &Formula, reg: &mut VarRegistry, out: &mut ClauseSet) {
    let mut enc = Tseitin { reg, out };
    enc.top(f);
    let n = enc.reg.len();
    out.num_vars = out.num_vars.max(n);
}

pub fn to_cnf(fs: &[Formula], reg: &mut VarRegistry) -> ClauseSet {
    let mut out = ClauseSet::new(reg.len());
    for f in fs {
        encode_into(f, reg, &mut out);
    }
    out.num_vars = out.num_vars.max(reg.len());
    out
}

struct Tseitin<'a> {
    reg: &'a mut VarRegistry,
    out: &'a mut ClauseSet,
}

impl Tseitin<'_> {
    fn top(&mut self, f: &Formula) {
        match f {
            Formula::And(fs) => fs.iter().for_each(|g| self.top(g)),
            Formula::Const(true) => {}
            Formula::Const(false) => {
                let x = self.reg.fresh_aux("false");
                self.out.add(vec![Lit::pos(x)]);
                self.out.add(vec![Lit::neg(x)]);
            }
            Formula::Not(g) if matches!(**g, Formula::Or(_)) => {
                if let Formula::Or(gs) = &**g {
                    for h in gs {
                        self.top(&Formula::not(h.clone()));
                    }
                }
            }
            _ => self.emit(&[(f, false)], None),
        }
    }

    /// Emits the clause `guard -> (p1 or p2 ...)` where each part is a
    /// subformula taken positively or negated.
    fn emit(&mut self, parts: &[(&Formula, bool)], guard: Option<VarId>) {
        let mut lits = Vec::new();
        if let Some(g) = guard {
            lits.push(Lit::neg(g));
        }
        for &(f, neg) in parts {
            if self.collect(f, neg, &mut lits) {
                return;
            }
        }
        if lits.is_empty() {
            let x = self.reg.fresh_aux("false");
            self.out.add(vec![Lit::pos(x)]);
            self.out.add(vec![Lit::neg(x)]);
            return;
        }
        self.out.add(lits);
    }

    /// Pushes literals whose disjunction implies `f` (or `!f` when `neg`).
    /// Returns true if the disjunction is trivially true.
    fn collect(&mut self, f: &Formula, neg: bool, out: &mut Vec<Lit>) -> bool {
        match (f, neg) {
            (Formula::Const(b), _) => *b != neg,
            (Formula::Atom(v), _) => {
                out.push(Lit::new(*v, !neg));
                false
            }
            (Formula::Not(g), _) => self.collect(g, !neg, out),
            (Formula::Or(gs), false) | (Formula::And(gs), true) => {
                for g in gs {
                    if self.collect(g, neg, out) {
                        return true;
                    }
                }
                false
            }
            (Formula::Implies(a, b), false) => self.collect(a, true, out) || self.collect(b, false, out),
            _ => {
                let x = self.define(f, neg);
                out.push(Lit::pos(x));
                false
            }
        }
    }

    /// Fresh auxiliary `x` with clauses `x -> f` (or `x -> !f`).
    fn define(&mut self, f: &Formula, neg: bool) -> VarId {
        let x = self.reg.fresh_aux("ts");
        match (f, neg) {
            (Formula::And(gs), false) | (Formula::Or(gs), true) => {
                for g in gs {
                    self.emit(&[(g, neg)], Some(x));
                }
            }
            (Formula::Implies(a, b), true) => {
                self.emit(&[(a, false)], Some(x));
                self.emit(&[(b, true)], Some(x));
            }
            (Formula::Iff(a, b), false) => {
                self.emit(&[(a, true), (b, false)], Some(x));
                self.emit(&[(a, false), (b, true)], Some(x));
            }
            (Formula::Iff(a, b), true) => {
                self.emit(&[(a, false), (b, false)], Some(x));
                self.emit(&[(a, true), (b, true)], Some(x));
            }
            _ => unreachable!("collect handles clausal shapes"),
        }
        x
    }
}
