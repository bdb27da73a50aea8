//! Exact rational linear feasibility and optimization (two-phase simplex,
//! Bland's rule). All variables are nonnegative.

use num::{BigInt, BigRational, One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Renders a rational as `n` or `n/d`.
pub fn q_str(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((w, f)) = s.split_once('.') {
        let neg = w.starts_with('-');
        let whole: BigInt = if w == "-" || w.is_empty() { BigInt::zero() } else { w.parse().ok()? };
        let frac: BigInt = if f.is_empty() { BigInt::zero() } else { f.parse().ok()? };
        let scale = num::pow(BigInt::from(10), f.len());
        let fq = Q::new(frac, scale);
        let wq = Q::from_integer(whole);
        return Some(if neg { wq - fq } else { wq + fq });
    }
    s.parse::<BigInt>().ok().map(Q::from_integer)
}

pub fn q_to_f64(x: &Q) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Q)>,
    pub cmp: Cmp,
    pub rhs: Q,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Q, x: Vec<Q> },
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, constraints: Vec::new() }
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Q)>, cmp: Cmp, rhs: Q) {
        debug_assert!(coeffs.iter().all(|(i, _)| *i < self.num_vars));
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    pub fn feasible(&self) -> Option<Vec<Q>> {
        match self.maximize(&[]) {
            LpOutcome::Optimal { x, .. } => Some(x),
            LpOutcome::Unbounded => unreachable!("zero objective is bounded"),
            LpOutcome::Infeasible => None,
        }
    }

    pub fn satisfied_by(&self, x: &[Q]) -> bool {
        x.iter().all(|v| !v.is_negative())
            && self.constraints.iter().all(|c| {
                let lhs: Q = c.coeffs.iter().map(|(i, a)| a * &x[*i]).sum();
                match c.cmp {
                    Cmp::Le => lhs <= c.rhs,
                    Cmp::Eq => lhs == c.rhs,
                    Cmp::Ge => lhs >= c.rhs,
                }
            })
    }

    /// Maximizes `sum obj[i].1 * x[obj[i].0]`.
    pub fn maximize(&self, obj: &[(usize, Q)]) -> LpOutcome {
        Tableau::build(self).run(self.num_vars, obj)
    }
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    ncols: usize,
    first_art: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars;
        let m = lp.constraints.len();
        let mut norm: Vec<(Vec<Q>, Cmp, Q)> = Vec::with_capacity(m);
        for c in &lp.constraints {
            let mut row = vec![Q::zero(); n];
            for (i, a) in &c.coeffs {
                row[*i] += a;
            }
            let (mut cmp, mut rhs) = (c.cmp, c.rhs.clone());
            if rhs.is_negative() {
                row.iter_mut().for_each(|x| *x = -x.clone());
                rhs = -rhs;
                cmp = match cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
            }
            norm.push((row, cmp, rhs));
        }
        let n_slack = norm.iter().filter(|r| r.1 != Cmp::Eq).count();
        let n_art = norm.iter().filter(|r| r.1 != Cmp::Le).count();
        let first_art = n + n_slack;
        let ncols = first_art + n_art;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut s, mut a) = (n, first_art);
        for (coef, cmp, rhs) in norm {
            let mut row = coef;
            row.resize(ncols + 1, Q::zero());
            match cmp {
                Cmp::Le => {
                    row[s] = Q::one();
                    basis.push(s);
                    s += 1;
                }
                Cmp::Ge => {
                    row[s] = -Q::one();
                    s += 1;
                    row[a] = Q::one();
                    basis.push(a);
                    a += 1;
                }
                Cmp::Eq => {
                    row[a] = Q::one();
                    basis.push(a);
                    a += 1;
                }
            }
            row[ncols] = rhs;
            rows.push(row);
        }
        Tableau { rows, basis, ncols, first_art }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for x in self.rows[r].iter_mut() {
                if !x.is_zero() {
                    *x /= &p;
                }
            }
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(prow.iter()) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over columns `< limit`; false when unbounded.
    fn optimize(&mut self, cost: &[Q], limit: usize) -> bool {
        loop {
            // reduced cost d_j = c_j - sum_i c_{B_i} a_ij
            let mut enter = None;
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    let cb = &cost[self.basis[i]];
                    if !cb.is_zero() && !row[j].is_zero() {
                        d -= cb * &row[j];
                    }
                }
                if d.is_negative() {
                    enter = Some(j);
                    break;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[self.ncols] / &row[c];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }

    fn run(mut self, n: usize, obj: &[(usize, Q)]) -> LpOutcome {
        if self.first_art < self.ncols {
            let mut cost = vec![Q::zero(); self.ncols];
            for c in cost.iter_mut().skip(self.first_art) {
                *c = Q::one();
            }
            self.optimize(&cost, self.ncols);
            let infeas: Q = self
                .basis
                .iter()
                .zip(self.rows.iter())
                .filter(|(b, _)| **b >= self.first_art)
                .map(|(_, row)| row[self.ncols].clone())
                .sum();
            if infeas.is_positive() {
                return LpOutcome::Infeasible;
            }
            // drive remaining (zero-valued) artificials out of the basis
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.first_art {
                    match (0..self.first_art).find(|&j| !self.rows[i][j].is_zero()) {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            self.rows.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }
        let mut cost = vec![Q::zero(); self.ncols];
        for (j, c) in obj {
            cost[*j] -= c;
        }
        if !self.optimize(&cost, self.first_art) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![Q::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rows[i][self.ncols].clone();
            }
        }
        let value = obj.iter().map(|(j, c)| c * &x[*j]).sum();
        LpOutcome::Optimal { value, x }
    }
}


/// Serde adapters: rationals are written as `"n/d"` strings and read from
/// strings or JSON numbers.
pub mod serde_q {
    use super::{parse_q, q_str, Q};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    fn from_value<E: serde::de::Error>(v: serde_json::Value) -> Result<Q, E> {
        let s = match v {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(E::custom(format!("expected rational, got {other}"))),
        };
        parse_q(&s).ok_or_else(|| E::custom(format!("bad rational {s}")))
    }

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        q_str(x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        from_value(serde_json::Value::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
            xs.iter().map(q_str).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
            let vs = Vec::<serde_json::Value>::deserialize(d)?;
            vs.into_iter().map(from_value::<D::Error>).collect()
        }
    }
}
