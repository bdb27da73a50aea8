pub mod arith;
mod cnf;
mod dimacs;
mod formula;
mod model;
mod registry;
mod solver;

pub use cnf::{encode_into, normalize_clause, to_cnf, ClauseSet, Lit};
pub use dimacs::{parse_dimacs, write_dimacs};
pub use formula::{Atom, Formula};
pub use model::Model;
pub use registry::{Label, VarId, VarRegistry};
pub use solver::{enumerate_models, solve, Branching, SolveResult, Solver, Stats};

/// A formula set together with the registry naming its variables.
#[derive(Clone, Debug, Default)]
pub struct Encoding {
    pub reg: VarRegistry,
    pub formulas: Vec<Formula>,
}

impl Encoding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, f: Formula) {
        self.formulas.push(f);
    }

    pub fn extend<I: IntoIterator<Item = Formula>>(&mut self, fs: I) {
        self.formulas.extend(fs);
    }

    pub fn to_cnf(&self) -> (ClauseSet, VarRegistry) {
        let mut reg = self.reg.clone();
        let cs = to_cnf(&self.formulas, &mut reg);
        (cs, reg)
    }

    pub fn solve(&self) -> SolveResult {
        let (cs, _) = self.to_cnf();
        solve(&cs, &[])
    }

    /// All models, distinct on source variables, up to `limit`.
    pub fn models(&self, limit: usize) -> (Vec<Model>, bool) {
        let (cs, reg) = self.to_cnf();
        let project: Vec<VarId> = self.reg.source_vars().collect();
        let _ = reg;
        enumerate_models(&cs, &project, limit)
    }

    /// Checks every source formula under `m`.
    pub fn check(&self, m: &Model) -> bool {
        self.formulas.iter().all(|f| f.eval(m).unwrap_or(false))
    }
}
