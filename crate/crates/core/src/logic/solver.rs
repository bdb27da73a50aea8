use super::cnf::{normalize_clause, ClauseSet, Lit};
use super::model::Model;
use super::registry::VarId;

const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Branching {
    /// Activity-ordered branching with lowest-index tie-break.
    #[default]
    Activity,
    /// Always branch on the lowest unassigned index.
    LowestIndex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Model),
    Unsat,
    /// Conflict budget exhausted before a verdict.
    Unknown,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat)
    }
    pub fn model(&self) -> Option<&Model> {
        match self {
            SolveResult::Sat(m) => Some(m),
            _ => None,
        }
    }
    pub fn into_model(self) -> Option<Model> {
        match self {
            SolveResult::Sat(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Stats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

/// Conflict-driven clause-learning solver with two watched literals.
/// The clause database persists across `solve` calls so fragments can be
/// extended incrementally.
pub struct Solver {
    ok: bool,
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    branching: Branching,
    lowest_cursor: usize,
    conflict_budget: Option<u64>,
    pub stats: Stats,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            ok: true,
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            phase: Vec::new(),
            activity: Vec::new(),
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 0.0,
            branching: Branching::Activity,
            lowest_cursor: 0,
            conflict_budget: None,
            stats: Stats::default(),
        }
    }

    pub fn with_branching(mut self, b: Branching) -> Self {
        self.branching = b;
        self
    }

    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn from_clauses(cs: &ClauseSet) -> Self {
        let mut s = Solver::new();
        s.load(cs);
        s
    }

    pub fn load(&mut self, cs: &ClauseSet) {
        self.ensure_vars(cs.num_vars);
        for c in &cs.clauses {
            self.add_clause(c);
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn ensure_vars(&mut self, n: usize) {
        while self.assigns.len() < n {
            let v = self.assigns.len();
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(NO_REASON);
            self.phase.push(false);
            self.activity.push(0.0);
            self.seen.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.heap.insert(v as u32, &self.activity);
        }
    }

    fn value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var().index()];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ u8::from(!l.is_positive())
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a permanent clause. Returns false once the database is known
    /// unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        if let Some(top) = lits.iter().map(|l| l.var().index() + 1).max() {
            self.ensure_vars(top);
        }
        let Some(c) = normalize_clause(lits.to_vec()) else {
            return true;
        };
        if c.iter().any(|&l| self.value(l) == 1) {
            return true;
        }
        let c: Vec<Lit> = c.into_iter().filter(|&l| self.value(l) != 0).collect();
        match c.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(c, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watcher { cref, blocker: lits[1] });
        self.watches[lits[1].code()].push(Watcher { cref, blocker: lits[0] });
        self.clauses.push(Clause { lits, learnt, deleted: false, activity: 0.0 });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var().index();
        self.assigns[v] = u8::from(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Returns the conflicting clause, if any.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.value(first) == 1 {
                    ws[j] = Watcher { cref: w.cref, blocker: first };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let lk = self.clauses[cref].lits[k];
                    if self.value(lk) != 0 {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[lk.code()].push(Watcher { cref: w.cref, blocker: first });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher { cref: w.cref, blocker: first };
                j += 1;
                if self.value(first) == 0 {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            let slot = &mut self.watches[false_lit.code()];
            ws.append(slot);
            *slot = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increase(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::pos(VarId(0))];
        let mut path = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let dl = self.decision_level();
        loop {
            self.bump_clause(confl);
            let lits = self.clauses[confl as usize].lits.clone();
            let start = usize::from(p.is_some());
            for &q in &lits[start..] {
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().index()] {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            self.seen[pl.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[pl.var().index()];
        }
        learnt[0] = !p.unwrap();

        // drop literals implied by the rest of the clause
        let mut keep = vec![learnt[0]];
        for &q in &learnt[1..] {
            let r = self.reason[q.var().index()];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits.iter().skip(1).all(|x| {
                    let v = x.var().index();
                    self.seen[v] || self.level[v] == 0
                });
            if !redundant {
                keep.push(q);
            }
        }
        for &q in &learnt {
            self.seen[q.var().index()] = false;
        }
        let mut learnt = keep;
        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().index()]
        };
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.phase[v] = l.is_positive();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            if !self.heap.contains(v as u32) {
                self.heap.insert(v as u32, &self.activity);
            }
            if v < self.lowest_cursor {
                self.lowest_cursor = v;
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        match self.branching {
            Branching::LowestIndex => {
                while self.lowest_cursor < self.assigns.len() {
                    if self.assigns[self.lowest_cursor] == UNDEF {
                        return Some(Lit::neg(VarId(self.lowest_cursor as u32)));
                    }
                    self.lowest_cursor += 1;
                }
                None
            }
            Branching::Activity => {
                while let Some(v) = self.heap.pop(&self.activity) {
                    if self.assigns[v as usize] == UNDEF {
                        return Some(Lit::new(VarId(v), self.phase[v as usize]));
                    }
                }
                None
            }
        }
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let l = c.lits[0];
        self.value(l) == 1 && self.reason[l.var().index()] == cref
    }

    fn reduce_db(&mut self) {
        let mut ls: Vec<u32> = self.learnts.clone();
        ls.sort_by(|&a, &b| {
            let ca = &self.clauses[a as usize];
            let cb = &self.clauses[b as usize];
            (ca.lits.len() > 2)
                .cmp(&(cb.lits.len() > 2))
                .reverse()
                .then(ca.activity.partial_cmp(&cb.activity).unwrap())
        });
        let half = ls.len() / 2;
        let mut kept = Vec::with_capacity(ls.len());
        for (i, &cref) in ls.iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if i < half && c.lits.len() > 2 && !self.locked(cref) {
                self.clauses[cref as usize].deleted = true;
                self.clauses[cref as usize].lits.shrink_to_fit();
            } else {
                kept.push(cref);
            }
        }
        kept.sort_unstable();
        self.learnts = kept;
    }

    /// Searches for a model extending `assumptions`, which are taken as the
    /// first decisions. The solver returns to level 0 afterwards.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        if !self.ok {
            return SolveResult::Unsat;
        }
        if let Some(top) = assumptions.iter().map(|l| l.var().index() + 1).max() {
            self.ensure_vars(top);
        }
        if self.max_learnts == 0.0 {
            self.max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        }
        let start_conflicts = self.stats.conflicts;
        let mut restart_no = 0u32;
        let result = loop {
            let limit = 100 * luby(restart_no);
            match self.search(assumptions, limit, start_conflicts) {
                Some(r) => break r,
                None => {
                    restart_no += 1;
                    self.stats.restarts += 1;
                }
            }
        };
        self.cancel_until(0);
        result
    }

    fn search(&mut self, assumptions: &[Lit], limit: u64, start: u64) -> Option<SolveResult> {
        let mut local = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                local += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SolveResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if let Some(b) = self.conflict_budget {
                    if self.stats.conflicts - start >= b {
                        return Some(SolveResult::Unknown);
                    }
                }
            } else {
                if local >= limit {
                    self.cancel_until(0);
                    return None;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    match self.value(a) {
                        1 => self.trail_lim.push(self.trail.len()),
                        0 => return Some(SolveResult::Unsat),
                        _ => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let lit = match next {
                    Some(a) => a,
                    None => match self.pick_branch() {
                        Some(l) => l,
                        None => {
                            let vals = self.assigns.iter().map(|&a| Some(a == 1)).collect();
                            return Some(SolveResult::Sat(Model::from_values(vals)));
                        }
                    },
                };
                self.stats.decisions += 1;
                self.trail_lim.push(self.trail.len());
                self.enqueue(lit, NO_REASON);
            }
        }
    }
}

fn luby(mut x: u32) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < u64::from(x) + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != u64::from(x) {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size as u32;
    }
    1u64 << seq
}

/// Binary max-heap on activity, lower index wins ties.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<usize>,
}

impl VarHeap {
    const ABSENT: usize = usize::MAX;

    fn better(a: u32, b: u32, act: &[f64]) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn contains(&self, v: u32) -> bool {
        (v as usize) < self.pos.len() && self.pos[v as usize] != Self::ABSENT
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.pos.len() <= v as usize {
            self.pos.resize(v as usize + 1, Self::ABSENT);
        }
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = self.heap.len();
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn increase(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v as usize], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top as usize] = Self::ABSENT;
        if !self.heap.is_empty() {
            self.pos[self.heap[0] as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if !Self::better(v, self.heap[p], act) {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i] as usize] = i;
            i = p;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && Self::better(self.heap[r], self.heap[l], act) { r } else { l };
            if !Self::better(self.heap[c], v, act) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }
}

pub fn solve(cs: &ClauseSet, assumptions: &[Lit]) -> SolveResult {
    let mut s = Solver::from_clauses(cs);
    s.ensure_vars(cs.num_vars);
    s.solve(assumptions)
}

/// Enumerates models up to `limit`, distinct on `project`, by adding
/// blocking clauses. Returns the models and whether enumeration finished.
pub fn enumerate_models(cs: &ClauseSet, project: &[VarId], limit: usize) -> (Vec<Model>, bool) {
    let mut s = Solver::from_clauses(cs);
    s.ensure_vars(cs.num_vars);
    let mut out = Vec::new();
    loop {
        if out.len() >= limit {
            return (out, false);
        }
        match s.solve(&[]) {
            SolveResult::Sat(m) => {
                let block: Vec<Lit> = project.iter().map(|&v| Lit::new(v, !m.is_true(v))).collect();
                out.push(m);
                if block.is_empty() || !s.add_clause(&block) {
                    return (out, true);
                }
            }
            _ => return (out, true),
        }
    }
}
