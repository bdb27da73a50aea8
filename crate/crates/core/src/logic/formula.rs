use std::fmt;

use super::model::Model;
use super::registry::{VarId, VarRegistry};
use crate::error::{Error, Result};

/// Propositional formula. `Const` only appears when a smart constructor
/// folds an empty conjunction or disjunction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Atom(VarId),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

pub use Formula::Atom;

impl Formula {
    pub fn atom(v: VarId) -> Self {
        Formula::Atom(v)
    }

    pub fn not(f: Formula) -> Self {
        match f {
            Formula::Const(b) => Formula::Const(!b),
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn and<I: IntoIterator<Item = Formula>>(fs: I) -> Self {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::Const(true) => {}
                Formula::Const(false) => return Formula::Const(false),
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::Const(true),
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or<I: IntoIterator<Item = Formula>>(fs: I) -> Self {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::Const(false) => {}
                Formula::Const(true) => return Formula::Const(true),
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::Const(false),
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        match (a, b) {
            (Formula::Const(false), _) | (_, Formula::Const(true)) => Formula::Const(true),
            (Formula::Const(true), b) => b,
            (a, Formula::Const(false)) => Formula::not(a),
            (a, b) => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        match (a, b) {
            (Formula::Const(true), x) | (x, Formula::Const(true)) => x,
            (Formula::Const(false), x) | (x, Formula::Const(false)) => Formula::not(x),
            (a, b) => Formula::Iff(Box::new(a), Box::new(b)),
        }
    }

    /// At most one of `vs` is true, as pairwise exclusions.
    pub fn at_most_one(vs: &[VarId]) -> Vec<Formula> {
        let mut out = Vec::new();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                out.push(Formula::not(Formula::and([Atom(vs[i]), Atom(vs[j])])));
            }
        }
        out
    }

    pub fn exactly_one(vs: &[VarId]) -> Vec<Formula> {
        let mut out = vec![Formula::or(vs.iter().map(|&v| Atom(v)))];
        out.extend(Formula::at_most_one(vs));
        out
    }

    pub fn eval(&self, m: &Model) -> Result<bool> {
        Ok(match self {
            Formula::Const(b) => *b,
            Formula::Atom(v) => m.get(*v).ok_or(Error::UnassignedAtom(v.0))?,
            Formula::Not(f) => !f.eval(m)?,
            Formula::And(fs) => {
                let mut val = true;
                for f in fs {
                    val &= f.eval(m)?;
                }
                val
            }
            Formula::Or(fs) => {
                let mut val = false;
                for f in fs {
                    val |= f.eval(m)?;
                }
                val
            }
            Formula::Implies(a, b) => !a.eval(m)? || b.eval(m)?,
            Formula::Iff(a, b) => a.eval(m)? == b.eval(m)?,
        })
    }

    pub fn atoms(&self, out: &mut Vec<VarId>) {
        match self {
            Formula::Const(_) => {}
            Formula::Atom(v) => out.push(*v),
            Formula::Not(f) => f.atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.atoms(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
        }
    }

    /// Same shape with every atom renamed by `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(VarId) -> VarId) -> Formula {
        match self {
            Formula::Const(b) => Formula::Const(*b),
            Formula::Atom(v) => Formula::Atom(f(*v)),
            Formula::Not(g) => Formula::Not(Box::new(g.map_vars(f))),
            Formula::And(fs) => Formula::And(fs.iter().map(|g| g.map_vars(f)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|g| g.map_vars(f)).collect()),
            Formula::Implies(a, b) => Formula::Implies(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Formula::Iff(a, b) => Formula::Iff(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Atom(_) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(|f| f.size()).sum::<usize>(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn display<'a>(&'a self, reg: &'a VarRegistry) -> FormulaDisplay<'a> {
        FormulaDisplay { f: self, reg }
    }
}

pub struct FormulaDisplay<'a> {
    f: &'a Formula,
    reg: &'a VarRegistry,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reg = self.reg;
        let sub = move |g| FormulaDisplay { f: g, reg };
        match self.f {
            Formula::Const(b) => write!(out, "{}", if *b { "T" } else { "F" }),
            Formula::Atom(v) => write!(out, "{}", self.reg.label(*v)),
            Formula::Not(g) => write!(out, "!{}", sub(g)),
            Formula::And(fs) | Formula::Or(fs) => {
                let sep = if matches!(self.f, Formula::And(_)) { " & " } else { " | " };
                write!(out, "(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(out, "{sep}")?;
                    }
                    write!(out, "{}", sub(g))?;
                }
                write!(out, ")")
            }
            Formula::Implies(a, b) => write!(out, "({} -> {})", sub(a), sub(b)),
            Formula::Iff(a, b) => write!(out, "({} <-> {})", sub(a), sub(b)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label;

    fn setup() -> (VarRegistry, VarId, VarId) {
        let mut r = VarRegistry::new();
        let p = r.var(label!("P"));
        let q = r.var(label!("Q"));
        (r, p, q)
    }

    #[test]
    fn eval_examples() {
        let (_, p, q) = setup();
        let m = Model::from_values(vec![Some(true), Some(false)]);
        assert!(Formula::or([Atom(p), Atom(q)]).eval(&m).unwrap());
        assert!(!Formula::implies(Atom(p), Atom(q)).eval(&m).unwrap());
        let both = Model::from_values(vec![Some(true), Some(true)]);
        assert!(!Formula::not(Formula::and([Atom(p), Atom(q)])).eval(&both).unwrap());
    }

    #[test]
    fn eval_reports_unassigned() {
        let (_, p, q) = setup();
        let m = Model::from_values(vec![Some(true), None]);
        let err = Formula::and([Atom(p), Atom(q)]).eval(&m).unwrap_err();
        assert!(matches!(err, Error::UnassignedAtom(1)));
    }

    #[test]
    fn constructors_fold_constants() {
        let (_, p, _) = setup();
        assert_eq!(Formula::and([]), Formula::Const(true));
        assert_eq!(Formula::or([]), Formula::Const(false));
        assert_eq!(Formula::implies(Atom(p), Formula::or([])), Formula::not(Atom(p)));
        assert_eq!(Formula::not(Formula::not(Atom(p))), Atom(p));
    }
}
