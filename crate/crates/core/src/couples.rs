//! Many-to-one matching with couples and capacities perturbed by at most two.

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label;
use crate::logic::{Atom, Encoding, Formula, Lit, Model, Solver, VarId};

pub const MAX_RANKED: usize = 12;
pub const ORACLE_MAX_DOCTORS: usize = 8;
pub const ORACLE_MAX_HOSPITALS: usize = 4;

/// A couple's ranked assignment `(first member, second member)`; `None` is
/// unassigned.
pub type Slot = (Option<usize>, Option<usize>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplesMarket {
    pub doctors: Vec<String>,
    pub hospitals: Vec<String>,
    pub capacity: Vec<usize>,
    /// Hospital rankings over doctor indices.
    pub ranking: Vec<Vec<usize>>,
    /// `(doctor, hospital list)` for each single.
    pub singles: Vec<(usize, Vec<usize>)>,
    /// `(first, second, ranked slots)` for each couple.
    pub couples: Vec<(usize, usize, Vec<Slot>)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HospitalJson {
    pub capacity: usize,
    pub ranking: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoupleJson {
    pub members: (String, String),
    pub prefs: Vec<(Option<String>, Option<String>)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplesJson {
    pub singles: indexmap::IndexMap<String, Vec<String>>,
    pub couples: Vec<CoupleJson>,
    pub hospitals: indexmap::IndexMap<String, HospitalJson>,
}

/// TRUE iff every ranked pair of actual hospitals has both projections ranked.
pub fn validate_downward_closed(prefs: &[Slot]) -> bool {
    prefs.iter().all(|p| match *p {
        (Some(h), Some(h2)) => prefs.contains(&(Some(h), None)) && prefs.contains(&(None, Some(h2))),
        _ => true,
    })
}

impl CouplesMarket {
    pub fn from_json(s: &str) -> Result<Self> {
        let j: CouplesJson = serde_json::from_str(s)?;
        let mut doctors: Vec<String> = j.singles.keys().cloned().collect();
        for c in &j.couples {
            doctors.push(c.members.0.clone());
            doctors.push(c.members.1.clone());
        }
        let hospitals: Vec<String> = j.hospitals.keys().cloned().collect();
        let didx: HashMap<&str, usize> = doctors.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
        let hidx: HashMap<&str, usize> = hospitals.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
        if didx.len() != doctors.len() {
            return Err(Error::InvalidInstance("duplicate doctor id".into()));
        }
        let d = |s: &str| didx.get(s).copied().ok_or_else(|| Error::InvalidInstance(format!("unknown doctor {s}")));
        let h = |s: &str| hidx.get(s).copied().ok_or_else(|| Error::InvalidInstance(format!("unknown hospital {s}")));
        let oh = |s: &Option<String>| s.as_deref().map(h).transpose();
        let mut capacity = Vec::new();
        let mut ranking = Vec::new();
        for hj in j.hospitals.values() {
            capacity.push(hj.capacity);
            ranking.push(hj.ranking.iter().map(|x| d(x)).collect::<Result<Vec<_>>>()?);
        }
        let mut singles = Vec::new();
        for (name, l) in &j.singles {
            singles.push((d(name)?, l.iter().map(|x| h(x)).collect::<Result<Vec<_>>>()?));
        }
        let mut couples = Vec::new();
        for c in &j.couples {
            let prefs = c.prefs.iter().map(|(a, b)| Ok((oh(a)?, oh(b)?))).collect::<Result<Vec<_>>>()?;
            couples.push((d(&c.members.0)?, d(&c.members.1)?, prefs));
        }
        let m = CouplesMarket { doctors, hospitals, capacity, ranking, singles, couples };
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> CouplesJson {
        let dn = |i: usize| self.doctors[i].clone();
        let hn = |i: Option<usize>| i.map(|i| self.hospitals[i].clone());
        CouplesJson {
            singles: self.singles.iter().map(|(d, l)| (dn(*d), l.iter().map(|&h| self.hospitals[h].clone()).collect())).collect(),
            couples: self
                .couples
                .iter()
                .map(|(a, b, p)| CoupleJson { members: (dn(*a), dn(*b)), prefs: p.iter().map(|&(x, y)| (hn(x), hn(y))).collect() })
                .collect(),
            hospitals: (0..self.hospitals.len())
                .map(|h| {
                    (self.hospitals[h].clone(), HospitalJson { capacity: self.capacity[h], ranking: self.ranking[h].iter().map(|&d| dn(d)).collect() })
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nd = self.doctors.len();
        let nh = self.hospitals.len();
        if self.capacity.len() != nh || self.ranking.len() != nh {
            return Err(Error::InvalidInstance("hospital data length mismatch".into()));
        }
        let mut role = vec![0u8; nd];
        for (d, l) in &self.singles {
            role[*d] += 1;
            if !l.iter().all(|&h| h < nh) || !l.iter().all_unique() {
                return Err(Error::InvalidInstance(format!("bad list for single {}", self.doctors[*d])));
            }
        }
        for (a, b, p) in &self.couples {
            role[*a] += 1;
            role[*b] += 1;
            if a == b || !p.iter().all_unique() || p.contains(&(None, None)) {
                return Err(Error::InvalidInstance(format!("bad couple list for ({},{})", self.doctors[*a], self.doctors[*b])));
            }
            if p.iter().any(|&(x, y)| x.is_some_and(|h| h >= nh) || y.is_some_and(|h| h >= nh)) {
                return Err(Error::InvalidInstance("unknown hospital in couple list".into()));
            }
        }
        if role.iter().any(|&r| r != 1) {
            return Err(Error::InvalidInstance("each doctor must be exactly one single or couple member".into()));
        }
        for (h, r) in self.ranking.iter().enumerate() {
            if !r.iter().all(|&d| d < nd) || !r.iter().all_unique() {
                return Err(Error::InvalidInstance(format!("bad ranking for {}", self.hospitals[h])));
            }
            if r.len() > MAX_RANKED {
                return Err(Error::SizeBound(format!("{} ranks more than {MAX_RANKED} doctors", self.hospitals[h])));
            }
        }
        Ok(())
    }

    pub fn hospital_rank(&self, h: usize, d: usize) -> Option<usize> {
        self.ranking[h].iter().position(|&x| x == d)
    }

    pub fn quota_range(&self, h: usize) -> std::ops::RangeInclusive<usize> {
        self.capacity[h].saturating_sub(2)..=self.capacity[h] + 2
    }

    /// Couple lists with every `(h,h')` ranked below one of its projections
    /// removed; such slots are never individually rational, and any block
    /// through one is also a block through the projection.
    pub fn effective_couple_prefs(&self, c: usize) -> Vec<Slot> {
        let p = &self.couples[c].2;
        let pos = |s: &Slot| p.iter().position(|x| x == s);
        p.iter()
            .enumerate()
            .filter(|(i, s)| match **s {
                (Some(h), Some(h2)) => {
                    pos(&(Some(h), None)).is_none_or(|j| j > *i) && pos(&(None, Some(h2))).is_none_or(|j| j > *i)
                }
                _ => true,
            })
            .map(|(_, s)| *s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbedOutcome {
    pub assignment: Vec<Option<usize>>,
    pub kstar: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CouplesViolation {
    CapacityDeviation(usize),
    OverCapacity(usize),
    UnacceptableSingle(usize),
    UnacceptableCouple(usize),
    /// Single doctor and hospital.
    SingleBlock(usize, usize),
    /// Couple and a hospital taking both members.
    SameHospitalBlock(usize, usize),
    /// Couple and a slot with distinct entries.
    SplitBlock(usize, Slot),
}

/// Hospital `h` with capacity `cap` keeps its `cap` best-ranked doctors from
/// `pool`; does that selection contain all of `want`?
fn chooses(mkt: &CouplesMarket, h: usize, cap: usize, pool: &[usize], want: &[usize]) -> bool {
    let mut ranked: Vec<(usize, usize)> = pool.iter().filter_map(|&d| mkt.hospital_rank(h, d).map(|r| (r, d))).collect();
    ranked.sort_unstable();
    ranked.dedup();
    let top: Vec<usize> = ranked.iter().take(cap).map(|x| x.1).collect();
    want.iter().all(|d| top.contains(d))
}

pub fn is_stable_with_couples(mkt: &CouplesMarket, out: &PerturbedOutcome) -> Result<(bool, Vec<CouplesViolation>)> {
    let nh = mkt.hospitals.len();
    if out.assignment.len() != mkt.doctors.len() || out.kstar.len() != nh {
        return Err(Error::MalformedMatching("outcome dimensions do not match market".into()));
    }
    if out.assignment.iter().any(|a| a.is_some_and(|h| h >= nh)) {
        return Err(Error::MalformedMatching("unknown hospital in assignment".into()));
    }
    let mut v = Vec::new();
    let at: Vec<Vec<usize>> = (0..nh).map(|h| (0..mkt.doctors.len()).filter(|&d| out.assignment[d] == Some(h)).collect()).collect();
    for h in 0..nh {
        if out.kstar[h].abs_diff(mkt.capacity[h]) > 2 {
            v.push(CouplesViolation::CapacityDeviation(h));
        }
        if at[h].len() > out.kstar[h] {
            v.push(CouplesViolation::OverCapacity(h));
        }
    }
    for (d, l) in &mkt.singles {
        if let Some(h) = out.assignment[*d] {
            if !l.contains(&h) || mkt.hospital_rank(h, *d).is_none() {
                v.push(CouplesViolation::UnacceptableSingle(*d));
            }
        }
        let cur = out.assignment[*d].and_then(|h| l.iter().position(|&x| x == h));
        for (r, &h) in l.iter().enumerate() {
            if cur.is_some_and(|c| r >= c) {
                break;
            }
            if mkt.hospital_rank(h, *d).is_some() {
                let mut pool = at[h].clone();
                pool.push(*d);
                if chooses(mkt, h, out.kstar[h], &pool, &[*d]) {
                    v.push(CouplesViolation::SingleBlock(*d, h));
                }
            }
        }
    }
    for (ci, &(a, b, _)) in mkt.couples.iter().enumerate() {
        let prefs = mkt.effective_couple_prefs(ci);
        let cur: Slot = (out.assignment[a], out.assignment[b]);
        let cur_rank = prefs.iter().position(|s| *s == cur);
        if cur != (None, None) {
            let ir = cur_rank.is_some()
                && cur.0.is_none_or(|h| mkt.hospital_rank(h, a).is_some())
                && cur.1.is_none_or(|h| mkt.hospital_rank(h, b).is_some());
            if !ir {
                v.push(CouplesViolation::UnacceptableCouple(ci));
            }
        }
        for (r, &slot) in prefs.iter().enumerate() {
            if cur_rank.is_some_and(|c| r >= c) {
                break;
            }
            match slot {
                (Some(h), Some(h2)) if h == h2 => {
                    if mkt.hospital_rank(h, a).is_some() && mkt.hospital_rank(h, b).is_some() {
                        let mut pool = at[h].clone();
                        pool.extend([a, b]);
                        if chooses(mkt, h, out.kstar[h], &pool, &[a, b]) {
                            v.push(CouplesViolation::SameHospitalBlock(ci, h));
                        }
                    }
                }
                (x, y) => {
                    let accepts = |hh: Option<usize>, d: usize| match hh {
                        None => true,
                        Some(h) => {
                            let mut pool = at[h].clone();
                            pool.push(d);
                            mkt.hospital_rank(h, d).is_some() && chooses(mkt, h, out.kstar[h], &pool, &[d])
                        }
                    };
                    if accepts(x, a) && accepts(y, b) {
                        v.push(CouplesViolation::SplitBlock(ci, slot));
                    }
                }
            }
        }
    }
    Ok((v.is_empty(), v))
}

pub struct CouplesEncoding {
    pub enc: Encoding,
    /// `x[d][h]`.
    pub x: Vec<Vec<VarId>>,
    /// `matched(d,∅)` for couple members.
    pub unmatched: BTreeMap<usize, VarId>,
    /// `(q, var)` per hospital.
    pub quota: Vec<Vec<(usize, VarId)>>,
}

impl CouplesEncoding {
    pub fn decode(&self, m: &Model) -> PerturbedOutcome {
        let assignment = self.x.iter().map(|row| row.iter().position(|&v| m.is_true(v))).collect();
        let kstar = self
            .quota
            .iter()
            .map(|qs| qs.iter().find(|(_, v)| m.is_true(*v)).map(|(q, _)| *q).unwrap_or(0))
            .collect();
        PerturbedOutcome { assignment, kstar }
    }

    /// A model at the original capacities when one exists, else any model.
    pub fn solve_preferring_original(&self, mkt: &CouplesMarket) -> Option<Model> {
        let (cs, _) = self.enc.to_cnf();
        let mut solver = Solver::from_clauses(&cs);
        let original: Vec<Lit> = self
            .quota
            .iter()
            .enumerate()
            .filter_map(|(h, qs)| qs.iter().find(|(q, _)| *q == mkt.capacity[h]).map(|(_, v)| Lit::pos(*v)))
            .collect();
        solver.solve(&original).into_model().or_else(|| solver.solve(&[]).into_model())
    }
}

/// Formula families: quota existence/uniqueness, one hospital per doctor,
/// capacity respect, individual rationality, the unassigned-partner
/// shorthand, and the three no-blocking families.
pub fn encode_couples(mkt: &CouplesMarket) -> Result<CouplesEncoding> {
    mkt.validate()?;
    for (a, b, p) in &mkt.couples {
        if !validate_downward_closed(p) {
            return Err(Error::InvalidInstance(format!(
                "preferences of couple ({},{}) are not downward closed",
                mkt.doctors[*a], mkt.doctors[*b]
            )));
        }
    }
    let nd = mkt.doctors.len();
    let nh = mkt.hospitals.len();
    let mut enc = Encoding::new();
    let x: Vec<Vec<VarId>> = (0..nd)
        .map(|d| (0..nh).map(|h| enc.reg.var(label!("matched", mkt.doctors[d], mkt.hospitals[h]))).collect())
        .collect();
    let mut unmatched = BTreeMap::new();
    for (a, b, _) in &mkt.couples {
        for &d in &[*a, *b] {
            unmatched.insert(d, enc.reg.var(label!("matched", mkt.doctors[d], "∅")));
        }
    }
    let quota: Vec<Vec<(usize, VarId)>> = (0..nh)
        .map(|h| mkt.quota_range(h).map(|q| (q, enc.reg.var(label!("quota", mkt.hospitals[h], q)))).collect())
        .collect();
    let slot_var = |d: usize, h: Option<usize>| match h {
        Some(h) => Atom(x[d][h]),
        None => Atom(unmatched[&d]),
    };
    // at-hospital conjunction for a tuple of doctors
    let all_at = |ds: &[usize], h: usize| Formula::and(ds.iter().map(|&d| Atom(x[d][h])));
    let better_tuples = |h: usize, ahead: &[usize], size: usize| -> Vec<Formula> {
        ahead.iter().copied().combinations(size).map(|t| all_at(&t, h)).collect()
    };

    // 1, 2: one adjusted capacity per hospital
    for qs in &quota {
        let vs: Vec<VarId> = qs.iter().map(|p| p.1).collect();
        enc.extend(Formula::exactly_one(&vs));
    }
    // 3: at most one hospital per doctor
    for row in &x {
        for (i, &a) in row.iter().enumerate() {
            for &b in &row[i + 1..] {
                enc.push(Formula::implies(Atom(a), Formula::not(Atom(b))));
            }
        }
    }
    // 4: capacity respect over ranked doctors
    for h in 0..nh {
        for &(q, qv) in &quota[h] {
            for set in mkt.ranking[h].iter().copied().combinations(q + 1) {
                let mut parts = vec![Atom(qv)];
                parts.extend(set.iter().map(|&d| Atom(x[d][h])));
                enc.push(Formula::not(Formula::and(parts)));
            }
        }
    }
    // 5a-c: individual rationality of single placements
    let prefs: Vec<Vec<Slot>> = (0..mkt.couples.len()).map(|c| mkt.effective_couple_prefs(c)).collect();
    for d in 0..nd {
        for h in 0..nh {
            let hosp_ok = mkt.hospital_rank(h, d).is_some();
            let doc_ok = if let Some((_, l)) = mkt.singles.iter().find(|s| s.0 == d) {
                l.contains(&h)
            } else {
                let (ci, first) = mkt
                    .couples
                    .iter()
                    .enumerate()
                    .find_map(|(ci, c)| if c.0 == d { Some((ci, true)) } else if c.1 == d { Some((ci, false)) } else { None })
                    .expect("doctor is single or in a couple");
                prefs[ci].iter().any(|s| if first { s.0 == Some(h) } else { s.1 == Some(h) })
            };
            if !hosp_ok || !doc_ok {
                enc.push(Formula::not(Atom(x[d][h])));
            }
        }
    }
    for (ci, &(a, b, _)) in mkt.couples.iter().enumerate() {
        let p = &prefs[ci];
        // 6: unranked hospital pairs
        for h in 0..nh {
            for h2 in 0..nh {
                if !p.contains(&(Some(h), Some(h2))) {
                    enc.push(Formula::not(Formula::and([Atom(x[a][h]), Atom(x[b][h2])])));
                }
            }
        }
        // 7a, 7b: unassigned-partner shorthand
        for h in 0..nh {
            if p.contains(&(Some(h), None)) {
                let partners = p.iter().filter_map(|s| (s.0 == Some(h)).then_some(s.1).flatten());
                let any = Formula::or(partners.map(|h2| Atom(x[b][h2])));
                enc.push(Formula::implies(Atom(x[a][h]), Formula::iff(Atom(unmatched[&b]), Formula::not(any))));
            }
            if p.contains(&(None, Some(h))) {
                let partners = p.iter().filter_map(|s| (s.1 == Some(h)).then_some(s.0).flatten());
                let any = Formula::or(partners.map(|h2| Atom(x[a][h2])));
                enc.push(Formula::implies(Atom(x[b][h]), Formula::iff(Atom(unmatched[&a]), Formula::not(any))));
            }
        }
        // pins the shorthand to FALSE when the whole couple is unassigned
        for (d, partner) in [(a, b), (b, a)] {
            let any = Formula::or((0..nh).map(|h| Atom(x[partner][h])));
            enc.push(Formula::implies(Atom(unmatched[&d]), any));
        }
    }
    // 8: singles
    for (d, l) in &mkt.singles {
        let d = *d;
        for (r, &h) in l.iter().enumerate() {
            let Some(hr) = mkt.hospital_rank(h, d) else { continue };
            let ahead = &mkt.ranking[h][..hr];
            for &(q, qv) in &quota[h] {
                let mut rhs: Vec<Formula> = l[..r].iter().map(|&h2| Atom(x[d][h2])).collect();
                rhs.extend(better_tuples(h, ahead, q));
                enc.push(Formula::implies(
                    Formula::and([Atom(qv), Formula::not(Atom(x[d][h]))]),
                    Formula::or(rhs),
                ));
            }
        }
    }
    // 9, 9a, 9b, 10: couples
    for (ci, &(a, b, _)) in mkt.couples.iter().enumerate() {
        let p = &prefs[ci];
        for (r, &slot) in p.iter().enumerate() {
            let better: Vec<Formula> = p[..r]
                .iter()
                .map(|&(s1, s2)| Formula::and([slot_var(a, s1), slot_var(b, s2)]))
                .collect();
            match slot {
                (Some(h), Some(h2)) if h == h2 => {
                    let (Some(ra), Some(rb)) = (mkt.hospital_rank(h, a), mkt.hospital_rank(h, b)) else { continue };
                    let worse = ra.max(rb);
                    let ahead: Vec<usize> = mkt.ranking[h][..worse].iter().copied().filter(|&d| d != a && d != b).collect();
                    for &(q, qv) in &quota[h] {
                        if q == 0 {
                            continue;
                        }
                        let mut rhs = better.clone();
                        rhs.extend(better_tuples(h, &ahead, q - 1));
                        enc.push(Formula::implies(
                            Formula::and([Atom(qv), Formula::not(Formula::and([Atom(x[a][h]), Atom(x[b][h])]))]),
                            Formula::or(rhs),
                        ));
                    }
                }
                (Some(h), Some(h2)) => {
                    let (Some(ra), Some(rb)) = (mkt.hospital_rank(h, a), mkt.hospital_rank(h2, b)) else { continue };
                    for &(q, qv) in &quota[h] {
                        for &(q2, qv2) in &quota[h2] {
                            let mut rhs = better.clone();
                            rhs.extend(better_tuples(h, &mkt.ranking[h][..ra], q));
                            rhs.extend(better_tuples(h2, &mkt.ranking[h2][..rb], q2));
                            enc.push(Formula::implies(
                                Formula::and([
                                    Atom(qv),
                                    Atom(qv2),
                                    Formula::not(Formula::and([Atom(x[a][h]), Atom(x[b][h2])])),
                                ]),
                                Formula::or(rhs),
                            ));
                        }
                    }
                }
                (Some(h), None) | (None, Some(h)) => {
                    let (member, other) = if slot.0.is_some() { (a, b) } else { (b, a) };
                    let Some(rm) = mkt.hospital_rank(h, member) else { continue };
                    for &(q, qv) in &quota[h] {
                        let mut rhs = better.clone();
                        rhs.extend(better_tuples(h, &mkt.ranking[h][..rm], q));
                        enc.push(Formula::implies(
                            Formula::and([
                                Atom(qv),
                                Formula::not(Formula::and([Atom(x[member][h]), Atom(unmatched[&other])])),
                            ]),
                            Formula::or(rhs),
                        ));
                    }
                }
                (None, None) => unreachable!("validated"),
            }
        }
    }
    Ok(CouplesEncoding { enc, x, unmatched, quota })
}

/// Two couples, two hospitals, no stable matching at the stated capacities.
/// Found by exhaustive search over small random instances.
pub const NO_STABLE_AT_K: &str = r#"{"singles":{},"couples":[{"members":["d0","d1"],"prefs":[["h1","h0"],["h0","h1"],["h1",null],[null,"h0"],["h0",null],[null,"h1"]]},{"members":["d2","d3"],"prefs":[["h0","h0"],["h1","h1"],["h1","h0"],[null,"h1"],["h0",null],[null,"h0"],["h1",null]]}],"hospitals":{"h0":{"capacity":2,"ranking":["d0","d3","d2","d1"]},"h1":{"capacity":1,"ranking":["d3","d1","d0"]}}}"#;

pub fn no_stable_fixture() -> CouplesMarket {
    CouplesMarket::from_json(NO_STABLE_AT_K).expect("fixture parses")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub outcome: PerturbedOutcome,
    pub total_deviation: usize,
    /// `sum k <= sum k* <= sum k + 4`.
    pub sum_bound_holds: bool,
}

/// Individually rational placements ignoring capacity, per doctor.
fn ir_assignments(mkt: &CouplesMarket) -> Vec<Vec<Option<usize>>> {
    let nd = mkt.doctors.len();
    // each unit is a list of (doctor, hospital) option sets
    let mut units: Vec<Vec<Vec<(usize, Option<usize>)>>> = Vec::new();
    for (d, l) in &mkt.singles {
        let mut opts = vec![vec![(*d, None)]];
        for &h in l {
            if mkt.hospital_rank(h, *d).is_some() {
                opts.push(vec![(*d, Some(h))]);
            }
        }
        units.push(opts);
    }
    for (ci, &(a, b, _)) in mkt.couples.iter().enumerate() {
        let mut opts = vec![vec![(a, None), (b, None)]];
        for (x, y) in mkt.effective_couple_prefs(ci) {
            if x.is_none_or(|h| mkt.hospital_rank(h, a).is_some()) && y.is_none_or(|h| mkt.hospital_rank(h, b).is_some()) {
                opts.push(vec![(a, x), (b, y)]);
            }
        }
        units.push(opts);
    }
    let mut out = Vec::new();
    for combo in units.iter().map(|u| u.iter()).multi_cartesian_product() {
        let mut asg = vec![None; nd];
        for opt in combo {
            for &(d, h) in opt {
                asg[d] = h;
            }
        }
        out.push(asg);
    }
    if units.is_empty() {
        out.push(vec![None; nd]);
    }
    out
}

/// Exhaustive search for a stable outcome minimizing total capacity change.
pub fn bruteforce_near_feasible(mkt: &CouplesMarket) -> Result<Option<OracleResult>> {
    mkt.validate()?;
    if mkt.doctors.len() > ORACLE_MAX_DOCTORS || mkt.hospitals.len() > ORACLE_MAX_HOSPITALS {
        return Err(Error::SizeBound(format!(
            "oracle handles at most {ORACLE_MAX_DOCTORS} doctors and {ORACLE_MAX_HOSPITALS} hospitals"
        )));
    }
    let nh = mkt.hospitals.len();
    let assignments = ir_assignments(mkt);
    let mut kstars: Vec<Vec<usize>> = (0..nh).map(|h| mkt.quota_range(h)).multi_cartesian_product().collect();
    if nh == 0 {
        kstars = vec![vec![]];
    }
    let dev = |ks: &[usize]| ks.iter().zip(&mkt.capacity).map(|(a, b)| a.abs_diff(*b)).sum::<usize>();
    kstars.sort_by_key(|ks| (dev(ks), ks.clone()));
    for ks in kstars {
        for asg in &assignments {
            let out = PerturbedOutcome { assignment: asg.clone(), kstar: ks.clone() };
            if is_stable_with_couples(mkt, &out)?.0 {
                let sk: usize = mkt.capacity.iter().sum();
                let sks: usize = ks.iter().sum();
                return Ok(Some(OracleResult {
                    total_deviation: dev(&ks),
                    sum_bound_holds: sk <= sks && sks <= sk + 4,
                    outcome: out,
                }));
            }
        }
    }
    Ok(None)
}

/// Is there a stable outcome at exactly the given capacities?
pub fn stable_exists_at(mkt: &CouplesMarket, kstar: &[usize]) -> Result<bool> {
    for asg in ir_assignments(mkt) {
        let out = PerturbedOutcome { assignment: asg, kstar: kstar.to_vec() };
        if is_stable_with_couples(mkt, &out)?.0 {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_market() -> CouplesMarket {
        CouplesMarket {
            doctors: vec!["d".into()],
            hospitals: vec!["h".into()],
            capacity: vec![1],
            ranking: vec![vec![0]],
            singles: vec![(0, vec![0])],
            couples: vec![],
        }
    }

    #[test]
    fn original_capacities_preferred() {
        let mkt = single_market();
        let ce = encode_couples(&mkt).unwrap();
        let out = ce.decode(&ce.solve_preferring_original(&mkt).unwrap());
        assert_eq!(out.kstar, vec![1]);
        assert_eq!(out.assignment, vec![Some(0)]);
        let fx = no_stable_fixture();
        let ce = encode_couples(&fx).unwrap();
        let out = ce.decode(&ce.solve_preferring_original(&fx).unwrap());
        assert_ne!(out.kstar, fx.capacity);
        assert!(is_stable_with_couples(&fx, &out).unwrap().0);
    }

    #[test]
    fn downward_closure() {
        assert!(validate_downward_closed(&[(Some(0), Some(1)), (Some(0), None), (None, Some(1))]));
        assert!(!validate_downward_closed(&[(Some(0), Some(1))]));
        assert!(validate_downward_closed(&[(Some(0), None)]));
    }

    #[test]
    fn single_doctor_models() {
        let mkt = single_market();
        let ce = encode_couples(&mkt).unwrap();
        let (models, done) = ce.enc.models(100);
        assert!(done);
        let outs: Vec<PerturbedOutcome> = models.iter().map(|m| ce.decode(m)).collect();
        assert!(outs.contains(&PerturbedOutcome { assignment: vec![Some(0)], kstar: vec![1] }));
        for o in &outs {
            assert!(o.assignment[0].is_some() || o.kstar[0] == 0);
            assert!(is_stable_with_couples(&mkt, o).unwrap().0);
        }
        // quota values 0..=3 with d placed except at 0
        assert_eq!(outs.len(), 4);
    }

    #[test]
    fn single_block_detected() {
        let mkt = single_market();
        let out = PerturbedOutcome { assignment: vec![None], kstar: vec![1] };
        let (ok, v) = is_stable_with_couples(&mkt, &out).unwrap();
        assert!(!ok);
        assert_eq!(v, vec![CouplesViolation::SingleBlock(0, 0)]);
    }

    #[test]
    fn couple_same_hospital_block() {
        let mkt = CouplesMarket {
            doctors: vec!["a".into(), "b".into()],
            hospitals: vec!["h".into()],
            capacity: vec![2],
            ranking: vec![vec![0, 1]],
            singles: vec![],
            couples: vec![(0, 1, vec![(Some(0), Some(0)), (Some(0), None), (None, Some(0))])],
        };
        let out = PerturbedOutcome { assignment: vec![Some(0), None], kstar: vec![2] };
        let (ok, v) = is_stable_with_couples(&mkt, &out).unwrap();
        assert!(!ok);
        assert!(v.contains(&CouplesViolation::SameHospitalBlock(0, 0)));
    }

    #[test]
    fn rejects_non_downward_closed() {
        let mkt = CouplesMarket {
            doctors: vec!["a".into(), "b".into()],
            hospitals: vec!["h1".into(), "h2".into()],
            capacity: vec![1, 1],
            ranking: vec![vec![0], vec![1]],
            singles: vec![],
            couples: vec![(0, 1, vec![(Some(0), Some(1))])],
        };
        assert!(matches!(encode_couples(&mkt), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn perturbation_needed_fixture() {
        let mkt = no_stable_fixture();
        assert!(!stable_exists_at(&mkt, &mkt.capacity).unwrap());
        let r = bruteforce_near_feasible(&mkt).unwrap().unwrap();
        assert_ne!(r.outcome.kstar, mkt.capacity);
        assert!(r.total_deviation > 0);
        let ce = encode_couples(&mkt).unwrap();
        let m = ce.enc.solve().into_model().unwrap();
        let o = ce.decode(&m);
        assert_ne!(o.kstar, mkt.capacity);
        assert!(is_stable_with_couples(&mkt, &o).unwrap().0);
        // pinning quotas to k is UNSAT
        let mut pinned = ce.enc.clone();
        for (h, qs) in ce.quota.iter().enumerate() {
            let v = qs.iter().find(|(q, _)| *q == mkt.capacity[h]).unwrap().1;
            pinned.push(Atom(v));
        }
        assert!(pinned.solve().is_unsat());
    }

    #[test]
    fn empty_market() {
        let mkt = CouplesMarket {
            doctors: vec![],
            hospitals: vec![],
            capacity: vec![],
            ranking: vec![],
            singles: vec![],
            couples: vec![],
        };
        let r = bruteforce_near_feasible(&mkt).unwrap().unwrap();
        assert_eq!(r.total_deviation, 0);
        assert!(encode_couples(&mkt).unwrap().enc.solve().is_sat());
    }
}
