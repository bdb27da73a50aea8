//! Revealed preference: GARP, Afriat inequalities, and dyadic grid-utility
//! fragments.

use std::collections::HashMap;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label;
use crate::logic::{Atom, Encoding, Formula, Model, VarId};
use crate::lp::{q, q_str, serde_q, Cmp, LinearProgram, Q};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(with = "serde_q::vec")]
    pub p: Vec<Q>,
    #[serde(with = "serde_q::vec")]
    pub x: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandDataset {
    pub m: usize,
    pub observations: Vec<Observation>,
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bundle_str(x: &[Q]) -> String {
    format!("({})", x.iter().map(q_str).collect::<Vec<_>>().join(";"))
}

impl DemandDataset {
    pub fn new(m: usize, obs: Vec<(Vec<Q>, Vec<Q>)>) -> Result<Self> {
        let ds = DemandDataset { m, observations: obs.into_iter().map(|(p, x)| Observation { p, x }).collect() };
        ds.validate()?;
        Ok(ds)
    }

    pub fn from_ints(m: usize, obs: &[(&[i64], &[i64])]) -> Result<Self> {
        let conv = |v: &[i64]| v.iter().map(|&a| q(a)).collect::<Vec<_>>();
        DemandDataset::new(m, obs.iter().map(|(p, x)| (conv(p), conv(x))).collect())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, o) in self.observations.iter().enumerate() {
            if o.p.len() != self.m || o.x.len() != self.m {
                return Err(Error::InvalidInstance(format!("observation {i}: dimension mismatch")));
            }
            if o.p.iter().any(|v| v.is_negative()) || o.p.iter().all(|v| v.is_zero()) {
                return Err(Error::InvalidInstance(format!("observation {i}: prices must be nonnegative and nonzero")));
            }
            if o.x.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidInstance(format!("observation {i}: negative bundle")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ds: DemandDataset = serde_json::from_str(s)?;
        ds.validate()?;
        Ok(ds)
    }

    /// Reads one observation per CSV row from the named columns.
    pub fn from_csv(text: &str, price_cols: &[&str], bundle_cols: &[&str]) -> Result<Self> {
        if price_cols.len() != bundle_cols.len() {
            return Err(Error::InvalidInstance("price and bundle column counts differ".into()));
        }
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse(format!("missing column {name}")))
        };
        let pc = price_cols.iter().map(|c| col(c)).collect::<Result<Vec<_>>>()?;
        let bc = bundle_cols.iter().map(|c| col(c)).collect::<Result<Vec<_>>>()?;
        let mut obs = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let get = |i: usize| {
                let s = rec.get(i).unwrap_or("");
                crate::lp::parse_q(s).ok_or_else(|| Error::Parse(format!("bad number {s:?}")))
            };
            obs.push((pc.iter().map(|&i| get(i)).collect::<Result<Vec<_>>>()?, bc.iter().map(|&i| get(i)).collect::<Result<Vec<_>>>()?));
        }
        DemandDataset::new(price_cols.len(), obs)
    }

    fn expenditure(&self, i: usize, j: usize) -> Q {
        dot(&self.observations[i].p, &self.observations[j].x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GarpReport {
    pub satisfied: bool,
    /// Observation indices `i1, ..., ik` with each `x_i` weakly revealed
    /// preferred to the next and `x_ik` strictly revealed preferred to `x_i1`.
    pub witness: Vec<usize>,
}

pub fn check_garp(ds: &DemandDataset) -> GarpReport {
    let n = ds.observations.len();
    let own: Vec<Q> = (0..n).map(|i| ds.expenditure(i, i)).collect();
    let weak = |i: usize, j: usize| ds.expenditure(i, j) <= own[i];
    let strict = |i: usize, j: usize| ds.expenditure(i, j) < own[i];
    // reach[i][j]: path i -> j in R; next hop for reconstruction
    let mut next: Vec<Vec<Option<usize>>> = (0..n).map(|i| (0..n).map(|j| weak(i, j).then_some(j)).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            if next[i][k].is_none() {
                continue;
            }
            for j in 0..n {
                if next[i][j].is_none() && next[k][j].is_some() {
                    next[i][j] = next[i][k];
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if next[i][j].is_some() && strict(j, i) {
                let mut path = vec![i];
                let mut cur = i;
                while cur != j {
                    cur = next[cur][j].unwrap();
                    path.push(cur);
                }
                return GarpReport { satisfied: false, witness: path };
            }
        }
    }
    GarpReport { satisfied: true, witness: vec![] }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AfriatSolution {
    #[serde(with = "serde_q::vec")]
    pub u: Vec<Q>,
    #[serde(with = "serde_q::vec")]
    pub lambda: Vec<Q>,
}

impl AfriatSolution {
    /// `min_i u_i + λ_i p_i·(y − x_i)`, the induced concave utility.
    pub fn utility(&self, ds: &DemandDataset, y: &[Q]) -> Q {
        (0..self.u.len())
            .map(|i| {
                let o = &ds.observations[i];
                let diff: Vec<Q> = y.iter().zip(&o.x).map(|(a, b)| a - b).collect();
                &self.u[i] + &self.lambda[i] * dot(&o.p, &diff)
            })
            .min()
            .unwrap_or_else(Q::zero)
    }

    pub fn satisfies(&self, ds: &DemandDataset) -> bool {
        let n = self.u.len();
        (0..n).all(|i| {
            self.lambda[i].is_positive()
                && (0..n).all(|j| {
                    let o = &ds.observations[i];
                    let diff: Vec<Q> = ds.observations[j].x.iter().zip(&o.x).map(|(a, b)| a - b).collect();
                    self.u[j] <= &self.u[i] + &self.lambda[i] * dot(&o.p, &diff)
                })
        })
    }
}

/// Afriat inequalities as an LP; `None` when infeasible. Utilities are
/// shifted to be nonnegative and multipliers scaled to be at least one.
pub fn afriat_feasible(ds: &DemandDataset) -> Option<AfriatSolution> {
    let n = ds.observations.len();
    let mut lp = LinearProgram::new(2 * n);
    for i in 0..n {
        lp.add(vec![(n + i, q(1))], Cmp::Ge, q(1));
        let own = ds.expenditure(i, i);
        for j in 0..n {
            if i == j {
                continue;
            }
            // u_j - u_i - λ_i (p_i·x_j - p_i·x_i) <= 0
            let c = ds.expenditure(i, j) - &own;
            lp.add(vec![(j, q(1)), (i, q(-1)), (n + i, -c)], Cmp::Le, q(0));
        }
    }
    let x = lp.feasible()?;
    Some(AfriatSolution { u: x[..n].to_vec(), lambda: x[n..].to_vec() })
}

pub fn afriat_rationalize(ds: &DemandDataset) -> Result<AfriatSolution> {
    let g = check_garp(ds);
    if !g.satisfied {
        return Err(Error::Precondition(format!("GARP fails along {:?}", g.witness)));
    }
    afriat_feasible(ds).ok_or_else(|| Error::Precondition("Afriat system infeasible although GARP holds".into()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridConfig {
    pub n_max: u32,
    pub queries: Vec<Vec<Q>>,
    /// Rational pairs taken from the diagonal enumeration, after the
    /// data-anchored ones.
    pub extra_pairs: usize,
}

impl GridConfig {
    pub fn new(n_max: u32) -> Self {
        GridConfig { n_max, queries: vec![], extra_pairs: 1 }
    }
}

/// Finite point set with the structure the formula families range over.
#[derive(Clone, Debug)]
pub struct FragmentPlan {
    pub n_max: u32,
    pub points: Vec<Vec<Q>>,
    /// `(q1, q2)` point indices; pair `k` carries gap `2^-(k+1)` for levels `n > k`.
    pub pairs: Vec<(usize, usize)>,
    /// `(x, y, z)` with `z` the midpoint of `x` and `y`.
    pub triples: Vec<(usize, usize, usize)>,
    /// `(x, y)` with `x <= y` componentwise, `x != y`.
    pub comparable: Vec<(usize, usize)>,
    /// `(observation, its point, affordable point)`.
    pub budget: Vec<(usize, usize, usize)>,
}

/// Nonnegative rationals ordered by numerator + denominator, then numerator.
fn rational_seq(len: usize) -> Vec<Q> {
    let mut out = vec![Q::zero()];
    let mut s = 2i64;
    while out.len() < len {
        for num in 1..s {
            let den = s - num;
            if num::integer::gcd(num, den) == 1 {
                out.push(Q::new(num.into(), den.into()));
            }
        }
        s += 1;
    }
    out.truncate(len);
    out
}

/// Diagonal enumeration of pairs `q1 << q2` in the nonnegative orthant.
pub fn rational_pairs(m: usize, count: usize) -> Vec<(Vec<Q>, Vec<Q>)> {
    let mut out = Vec::new();
    let mut total = 0usize;
    while out.len() < count {
        let seq = rational_seq(total + 1);
        // all index vectors of length 2m summing to `total`, lexicographic
        let mut idx = vec![0usize; 2 * m];
        fn rec(pos: usize, left: usize, idx: &mut Vec<usize>, seq: &[Q], m: usize, out: &mut Vec<(Vec<Q>, Vec<Q>)>, count: usize) {
            if out.len() >= count {
                return;
            }
            if pos == idx.len() - 1 {
                idx[pos] = left;
                let a: Vec<Q> = idx[..m].iter().map(|&i| seq[i].clone()).collect();
                let b: Vec<Q> = idx[m..].iter().map(|&i| seq[i].clone()).collect();
                if a.iter().zip(&b).all(|(x, y)| x < y) {
                    out.push((a, b));
                }
                return;
            }
            for v in 0..=left {
                idx[pos] = v;
                rec(pos + 1, left - v, idx, seq, m, out, count);
            }
        }
        if m > 0 {
            rec(0, total, &mut idx, &seq, m, &mut out, count);
        } else {
            break;
        }
        total += 1;
    }
    out
}

impl FragmentPlan {
    pub fn build(ds: &DemandDataset, cfg: &GridConfig) -> Result<Self> {
        ds.validate()?;
        let m = ds.m;
        for qv in &cfg.queries {
            if qv.len() != m || qv.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidInstance("query bundle outside the orthant".into()));
            }
        }
        let mut points: Vec<Vec<Q>> = Vec::new();
        let mut index: HashMap<Vec<Q>, usize> = HashMap::new();
        let mut add = |p: Vec<Q>, points: &mut Vec<Vec<Q>>| -> usize {
            *index.entry(p.clone()).or_insert_with(|| {
                points.push(p);
                points.len() - 1
            })
        };
        for o in &ds.observations {
            add(o.x.clone(), &mut points);
        }
        for qv in &cfg.queries {
            add(qv.clone(), &mut points);
        }
        // data-anchored pairs: (x_a, x_a + t·1), still affordable wherever
        // x_a is strictly cheaper than the chosen bundle
        let n = ds.observations.len();
        let mut raw_pairs: Vec<(Vec<Q>, Vec<Q>)> = Vec::new();
        for a in 0..n {
            let xa = &ds.observations[a].x;
            let mut t: Option<Q> = None;
            for b in 0..n {
                let pb = &ds.observations[b].p;
                let slack = ds.expenditure(b, b) - dot(pb, xa);
                if slack.is_positive() {
                    let s: Q = pb.iter().sum();
                    let cand = slack / s;
                    t = Some(match t {
                        Some(cur) if cur < cand => cur,
                        _ => cand,
                    });
                }
            }
            if let Some(t) = t {
                raw_pairs.push((xa.clone(), xa.iter().map(|v| v + &t).collect()));
            }
        }
        raw_pairs.extend(rational_pairs(m, cfg.extra_pairs));
        let mut pairs = Vec::new();
        for (a, b) in raw_pairs {
            let ia = add(a, &mut points);
            let ib = add(b, &mut points);
            pairs.push((ia, ib));
        }
        let base = points.len();
        let mut triples = Vec::new();
        for i in 0..base {
            for j in i + 1..base {
                let mid: Vec<Q> = points[i].iter().zip(&points[j]).map(|(a, b)| (a + b) / q(2)).collect();
                let k = add(mid, &mut points);
                if k != i && k != j {
                    triples.push((i, j, k));
                }
            }
        }
        let mut comparable = Vec::new();
        for i in 0..points.len() {
            for j in 0..points.len() {
                if i != j && points[i].iter().zip(&points[j]).all(|(a, b)| a <= b) {
                    comparable.push((i, j));
                }
            }
        }
        let mut budget = Vec::new();
        for (oi, o) in ds.observations.iter().enumerate() {
            let xi = index[&o.x];
            let own = dot(&o.p, &o.x);
            for (yi, y) in points.iter().enumerate() {
                if yi != xi && dot(&o.p, y) <= own {
                    budget.push((oi, xi, yi));
                }
            }
        }
        Ok(FragmentPlan { n_max: cfg.n_max, points, pairs, triples, comparable, budget })
    }

    pub fn point_index(&self, x: &[Q]) -> Option<usize> {
        self.points.iter().position(|p| p == x)
    }
}

pub struct GridEncoding {
    pub enc: Encoding,
    pub plan: FragmentPlan,
    /// `vars[n-1][point][j]` is `utility(n, point, j·2^-n)`.
    pub vars: Vec<Vec<Vec<VarId>>>,
    /// Formula count after each level `1..=n_max`.
    pub level_ends: Vec<usize>,
}

/// Grid values are integers `j` meaning `j / 2^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GridUtility {
    /// `levels[n-1][point]`.
    pub levels: Vec<Vec<u64>>,
}

impl GridUtility {
    pub fn value(&self, n: u32, point: usize) -> Q {
        Q::new(self.levels[n as usize - 1][point].into(), (1u64 << n).into())
    }

    pub fn finest(&self, point: usize) -> Q {
        self.value(self.levels.len() as u32, point)
    }

    /// Grid utility obtained by rounding exact values down at every level.
    pub fn from_values(values: &[Q], n_max: u32) -> Self {
        let levels = (1..=n_max)
            .map(|n| {
                values
                    .iter()
                    .map(|v| {
                        let scaled = v * Q::from_integer((1u64 << n).into());
                        let f = scaled.floor().to_integer();
                        u64::try_from(f).unwrap_or(0).min(1u64 << n)
                    })
                    .collect()
            })
            .collect();
        GridUtility { levels }
    }
}

pub fn encode_rationalization_fragment(ds: &DemandDataset, cfg: &GridConfig) -> Result<GridEncoding> {
    let plan = FragmentPlan::build(ds, cfg)?;
    Ok(encode_plan(plan))
}

pub fn encode_plan(plan: FragmentPlan) -> GridEncoding {
    let mut enc = Encoding::new();
    let names: Vec<String> = plan.points.iter().map(|p| bundle_str(p)).collect();
    let vars: Vec<Vec<Vec<VarId>>> = (1..=plan.n_max)
        .map(|n| {
            names
                .iter()
                .map(|pn| (0..=(1u64 << n)).map(|j| enc.reg.var(label!("utility", n, pn, format!("{j}/{}", 1u64 << n)))).collect())
                .collect()
        })
        .collect();
    let np = plan.points.len();
    let mut level_ends = Vec::new();
    for n in 1..=plan.n_max {
        let lv = &vars[n as usize - 1];
        let top = 1u64 << n;
        let at_least = |pt: usize, lo: u64| Formula::or((lo..=top).map(|w| Atom(lv[pt][w as usize])));
        let at_most = |pt: usize, hi: u64| Formula::or((0..=hi.min(top)).map(|w| Atom(lv[pt][w as usize])));
        for row in lv.iter() {
            // 1, 2
            enc.extend(Formula::exactly_one(row));
        }
        // 3: refinement
        if n < plan.n_max {
            let nx = &vars[n as usize];
            for pt in 0..np {
                for j in 0..=top {
                    enc.push(Formula::implies(
                        Atom(lv[pt][j as usize]),
                        Formula::or([Atom(nx[pt][2 * j as usize]), Atom(nx[pt][(2 * j + 1).min(2 * top) as usize])]),
                    ));
                }
            }
        }
        // 4: quasiconcavity
        for &(x, y, z) in &plan.triples {
            for v in 0..=top {
                for w in 0..=top {
                    enc.push(Formula::implies(
                        Formula::and([Atom(lv[x][v as usize]), Atom(lv[y][w as usize])]),
                        at_least(z, v.min(w)),
                    ));
                }
            }
        }
        // 5: monotonicity
        for &(x, y) in &plan.comparable {
            for v in 0..=top {
                enc.push(Formula::implies(Atom(lv[x][v as usize]), at_least(y, v)));
            }
        }
        // 6: strict gaps
        for (k, &(a, b)) in plan.pairs.iter().enumerate() {
            if (n as usize) <= k {
                continue;
            }
            let gap = 1u64 << (n as usize - k - 1);
            for v in 0..=top {
                enc.push(Formula::implies(Atom(lv[a][v as usize]), at_least(b, v + gap)));
            }
        }
        // 7: weak rationalization
        for &(_, x, y) in &plan.budget {
            for v in 0..=top {
                enc.push(Formula::implies(Atom(lv[x][v as usize]), at_most(y, v)));
            }
        }
        level_ends.push(enc.formulas.len());
    }
    GridEncoding { enc, plan, vars, level_ends }
}

impl GridEncoding {
    pub fn decode(&self, m: &Model) -> GridUtility {
        let levels = self
            .vars
            .iter()
            .map(|lv| lv.iter().map(|row| row.iter().position(|&v| m.is_true(v)).unwrap_or(0) as u64).collect())
            .collect();
        GridUtility { levels }
    }

    /// Model that sets exactly the variables named by `gu`.
    pub fn model_of(&self, gu: &GridUtility) -> Model {
        let mut m = Model::total(vec![false; self.enc.reg.len()]);
        for (n, lv) in self.vars.iter().enumerate() {
            for (pt, row) in lv.iter().enumerate() {
                m.set(row[gu.levels[n][pt] as usize], true);
            }
        }
        m
    }
}

pub fn decode_grid_utility(ge: &GridEncoding, m: &Model) -> GridUtility {
    ge.decode(m)
}

/// Checks weak rationalization, monotonicity, quasiconcavity, the strict
/// gaps, and refinement coherence on the plan's point set.
pub fn verify_rationalization(plan: &FragmentPlan, gu: &GridUtility) -> bool {
    let n_max = plan.n_max;
    if gu.levels.len() != n_max as usize || gu.levels.iter().any(|l| l.len() != plan.points.len()) {
        return false;
    }
    for n in 1..n_max {
        for pt in 0..plan.points.len() {
            let a = gu.levels[n as usize - 1][pt];
            let b = gu.levels[n as usize][pt];
            if b / 2 != a && !(a == 1u64 << n && b == 1u64 << (n + 1)) {
                return false;
            }
        }
    }
    let f = |pt: usize| gu.finest(pt);
    plan.budget.iter().all(|&(_, x, y)| f(y) <= f(x))
        && plan.comparable.iter().all(|&(x, y)| f(x) <= f(y))
        && plan.triples.iter().all(|&(x, y, z)| f(z) >= f(x).min(f(y)))
        && plan.pairs.iter().enumerate().all(|(k, &(a, b))| {
            (n_max as usize) <= k || f(b) >= f(a) + Q::new(1.into(), (1u64 << (k + 1)).into())
        })
}

/// Turns exact utility values on the plan's points into a grid utility:
/// squash into `[0, 2^-n_max)`, open a gap of `2^-(k+1)` above pair `k`, then
/// round down at every level. `None` if some pair is not strictly increasing.
pub fn massage_to_grid(plan: &FragmentPlan, exact: &[Q]) -> Option<GridUtility> {
    let tmin = exact.iter().min()?.clone();
    let c = Q::new(1.into(), (1u64 << plan.n_max).into());
    let mut vals: Vec<Q> = exact
        .iter()
        .map(|t| {
            let d = t - &tmin;
            &c * &d / (&d + q(1))
        })
        .collect();
    for (k, &(a, b)) in plan.pairs.iter().enumerate().take(plan.n_max as usize) {
        if exact[a] >= exact[b] {
            return None;
        }
        let cut = vals[b].clone();
        let gap = Q::new(1.into(), (1u64 << (k + 1)).into());
        for v in vals.iter_mut() {
            if *v >= cut {
                *v += &gap;
            }
        }
    }
    Some(GridUtility::from_values(&vals, plan.n_max))
}

/// Afriat utility evaluated on the plan's points.
pub fn afriat_values(ds: &DemandDataset, sol: &AfriatSolution, plan: &FragmentPlan) -> Vec<Q> {
    plan.points.iter().map(|y| sol.utility(ds, y)).collect()
}

/// Two observations, each strictly revealed preferred to the other.
pub fn violating_pair() -> DemandDataset {
    DemandDataset::from_ints(2, &[(&[1, 2], &[1, 2]), (&[2, 1], &[2, 1])]).expect("valid")
}
