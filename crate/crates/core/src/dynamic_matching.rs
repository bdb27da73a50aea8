//! Dynamic one-to-one matching where men arrive and depart and keep tenure
//! with their current partner.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label;
use crate::logic::{Atom, Encoding, Formula, Model, VarId, VarRegistry};
use crate::matching::{gale_shapley, MarriageMarket, Side};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicMarket {
    pub market: MarriageMarket,
    pub arrival: Vec<i64>,
    pub departure: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct ManJson {
    prefs: Vec<String>,
    arrival: i64,
    departure: i64,
}

#[derive(Serialize, Deserialize)]
struct DynamicJson {
    men: IndexMap<String, ManJson>,
    women: IndexMap<String, Vec<String>>,
}

impl DynamicMarket {
    pub fn new(market: MarriageMarket, arrival: Vec<i64>, departure: Vec<i64>) -> Result<Self> {
        if arrival.len() != market.men.len() || departure.len() != market.men.len() {
            return Err(Error::InvalidInstance("one arrival and departure per man".into()));
        }
        for m in 0..arrival.len() {
            if arrival[m] >= departure[m] {
                return Err(Error::InvalidInstance(format!("man {}: arrival must precede departure", market.men[m])));
            }
        }
        Ok(DynamicMarket { market, arrival, departure })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: DynamicJson = serde_json::from_str(s)?;
        let men: Vec<(String, Vec<String>)> = raw.men.iter().map(|(k, v)| (k.clone(), v.prefs.clone())).collect();
        let women: Vec<(String, Vec<String>)> = raw.women.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let market = MarriageMarket::from_names(&men, &women)?;
        DynamicMarket::new(market, raw.men.values().map(|v| v.arrival).collect(), raw.men.values().map(|v| v.departure).collect())
    }

    pub fn to_json(&self) -> String {
        let mk = &self.market;
        let men = (0..mk.men.len())
            .map(|m| {
                let prefs = mk.men_prefs[m].iter().map(|&w| mk.women[w].clone()).collect();
                (mk.men[m].clone(), ManJson { prefs, arrival: self.arrival[m], departure: self.departure[m] })
            })
            .collect();
        let women = (0..mk.women.len()).map(|w| (mk.women[w].clone(), mk.women_prefs[w].iter().map(|&m| mk.men[m].clone()).collect())).collect();
        serde_json::to_string_pretty(&DynamicJson { men, women }).expect("serializable")
    }

    pub fn present(&self, m: usize, t: i64) -> bool {
        self.arrival[m] <= t && t < self.departure[m]
    }

    pub fn present_at(&self, t: i64) -> Vec<usize> {
        (0..self.market.men.len()).filter(|&m| self.present(m, t)).collect()
    }

    /// Men on the market at both `t` and `t + 1`.
    pub fn continuing(&self, t: i64) -> Vec<usize> {
        (0..self.market.men.len()).filter(|&m| self.present(m, t) && self.present(m, t + 1)).collect()
    }

    pub fn man(&self, name: &str) -> Option<usize> {
        self.market.men.iter().position(|x| x == name)
    }
}

/// Assignment of men to women per time over `[lo, hi]`. `pre_window`
/// optionally records who each woman held at `lo - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Chronology {
    pub lo: i64,
    pub hi: i64,
    pub assign: BTreeMap<(usize, i64), usize>,
    pub pre_window: Option<BTreeMap<usize, usize>>,
}

impl Chronology {
    pub fn partner_of_woman(&self, w: usize, t: i64) -> Option<usize> {
        if t == self.lo - 1 {
            return self.pre_window.as_ref().and_then(|p| p.get(&w).copied());
        }
        self.assign.get(&(w, t)).copied()
    }

    pub fn partner_of_man(&self, m: usize, t: i64) -> Option<usize> {
        if t == self.lo - 1 {
            return self.pre_window.as_ref().and_then(|p| p.iter().find(|(_, &x)| x == m).map(|(&w, _)| w));
        }
        self.assign.iter().find(|(&(_, s), &x)| s == t && x == m).map(|(&(w, _), _)| w)
    }

    /// Times at which woman `w` holds man `m`.
    pub fn times_of(&self, w: usize, m: usize) -> Vec<i64> {
        self.assign.iter().filter(|(&(x, _), &y)| x == w && y == m).map(|(&(_, t), _)| t).collect()
    }

    pub fn named(&self, mkt: &DynamicMarket) -> Vec<(i64, String, String)> {
        self.assign.iter().map(|(&(w, t), &m)| (t, mkt.market.women[w].clone(), mkt.market.men[m].clone())).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DynViolation {
    Unacceptable { man: usize, woman: usize, t: i64 },
    /// `man` holds a worse partner at `t + 1` than at `t`.
    Tenure { man: usize, t: i64 },
    Blocking { man: usize, woman: usize, t: i64 },
}

pub fn is_stable_subject_to_tenure(mkt: &DynamicMarket, ch: &Chronology) -> Result<(bool, Vec<DynViolation>)> {
    let mk = &mkt.market;
    let mut out = Vec::new();
    let mut seen: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    for (&(w, t), &m) in &ch.assign {
        if t < ch.lo || t > ch.hi || w >= mk.women.len() || m >= mk.men.len() {
            return Err(Error::MalformedMatching(format!("entry ({w}, {t}) -> {m} outside the chronology")));
        }
        if !mkt.present(m, t) {
            return Err(Error::MalformedMatching(format!("{} assigned at {t} while off the market", mk.men[m])));
        }
        if seen.insert((m, t), w).is_some() {
            return Err(Error::MalformedMatching(format!("{} matched twice at {t}", mk.men[m])));
        }
        if !mk.mutually_acceptable(m, w) {
            out.push(DynViolation::Unacceptable { man: m, woman: w, t });
        }
    }
    let pm = |m: usize, t: i64| seen.get(&(m, t)).copied();
    for t in ch.lo..ch.hi {
        for m in mkt.continuing(t) {
            if let Some(w) = pm(m, t) {
                let next = pm(m, t + 1);
                if next != Some(w) && !mk.man_prefers(m, next.unwrap_or(usize::MAX), Some(w)) {
                    out.push(DynViolation::Tenure { man: m, t });
                }
            }
        }
    }
    for t in ch.lo..=ch.hi {
        for m in mkt.present_at(t) {
            let cur_m = pm(m, t);
            for &w in &mk.men_prefs[m] {
                if cur_m == Some(w) || !mk.mutually_acceptable(m, w) {
                    continue;
                }
                let cur_w = ch.partner_of_woman(w, t);
                if !mk.man_prefers(m, w, cur_m) || !mk.woman_prefers(w, m, cur_w) {
                    continue;
                }
                let protected = match cur_w {
                    None => false,
                    Some(c) if t == ch.lo && ch.pre_window.is_none() => mkt.present(c, t - 1),
                    Some(c) => mkt.present(c, t - 1) && ch.partner_of_woman(w, t - 1) == Some(c),
                };
                if !protected {
                    out.push(DynViolation::Blocking { man: m, woman: w, t });
                }
            }
        }
    }
    Ok((out.is_empty(), out))
}

/// Iterated man-optimal matching from `t0`, promoting each continuing
/// incumbent to the top of his partner's list for the next period.
pub fn pereyra_forward(mkt: &DynamicMarket, t0: i64, t1: i64) -> Result<Chronology> {
    if let Some(m) = (0..mkt.market.men.len()).find(|&m| mkt.arrival[m] < t0 && mkt.departure[m] > t0) {
        return Err(Error::Precondition(format!("{} arrives before the starting period {t0}", mkt.market.men[m])));
    }
    let mk = &mkt.market;
    let mut ch = Chronology { lo: t0, hi: t1, assign: BTreeMap::new(), pre_window: Some(BTreeMap::new()) };
    for t in t0..=t1 {
        let present = mkt.present_at(t);
        let local: BTreeMap<usize, usize> = present.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let men_prefs: Vec<Vec<usize>> = present.iter().map(|&m| mk.men_prefs[m].clone()).collect();
        let women_prefs: Vec<Vec<usize>> = (0..mk.women.len())
            .map(|w| {
                let incumbent = (t > t0).then(|| ch.partner_of_woman(w, t - 1)).flatten().filter(|&m| mkt.present(m, t));
                let mut l: Vec<usize> = mk.women_prefs[w].iter().filter(|m| local.contains_key(m)).copied().collect();
                if let Some(inc) = incumbent {
                    if let Some(pos) = l.iter().position(|&x| x == inc) {
                        l.remove(pos);
                        l.insert(0, inc);
                    }
                }
                l.into_iter().map(|m| local[&m]).collect()
            })
            .collect();
        let sub = MarriageMarket::from_indices(present.iter().map(|&m| mk.men[m].clone()).collect(), mk.women.clone(), men_prefs, women_prefs)?;
        for (i, w) in gale_shapley(&sub, Side::Men).pairs {
            ch.assign.insert((w, t), present[i]);
        }
    }
    Ok(ch)
}

pub struct DynEncoding {
    pub enc: Encoding,
    pub lo: i64,
    pub hi: i64,
    /// `matched(m, w, t)` for `t` in the window, plus `t = lo - 1` for men
    /// present at both `lo - 1` and `lo`.
    pub vars: BTreeMap<(usize, usize, i64), VarId>,
}

fn matched_label(mkt: &DynamicMarket, m: usize, w: usize, t: i64) -> crate::logic::Label {
    label!("matched", mkt.market.men[m], mkt.market.women[w], t)
}

/// Types 1-2 (and 3 for unacceptable pairs) at time `t` over `men`.
fn snapshot_formulas(mkt: &DynamicMarket, t: i64, men: &[usize], reg: &mut VarRegistry) -> Vec<Formula> {
    let mk = &mkt.market;
    let nw = mk.women.len();
    let vars: Vec<Vec<VarId>> = men.iter().map(|&m| (0..nw).map(|w| reg.var(matched_label(mkt, m, w, t))).collect()).collect();
    let mut out = Vec::new();
    for row in &vars {
        out.extend(Formula::at_most_one(row));
    }
    for w in 0..nw {
        let col: Vec<VarId> = vars.iter().map(|row| row[w]).collect();
        out.extend(Formula::at_most_one(&col));
    }
    for (i, &m) in men.iter().enumerate() {
        for w in 0..nw {
            if !mk.mutually_acceptable(m, w) {
                out.push(Formula::not(Atom(vars[i][w])));
            }
        }
    }
    out
}

/// Formula types 1-4 at time `t` for the men present then. Variables are
/// labelled by names, so periods built from different materializations of
/// one family share them. Tenure refers to `matched` at `t - 1`.
pub fn period_formulas(mkt: &DynamicMarket, t: i64, reg: &mut VarRegistry) -> Vec<Formula> {
    let mk = &mkt.market;
    let present = mkt.present_at(t);
    let mut out = snapshot_formulas(mkt, t, &present, reg);
    let incumbents = mkt.continuing(t - 1);
    for &m in &present {
        for w in 0..mk.women.len() {
            if !mk.mutually_acceptable(m, w) {
                continue;
            }
            let mut at = |m: usize, w: usize, s: i64| mkt.present(m, s).then(|| Atom(reg.var(matched_label(mkt, m, w, s))));
            let rm = mk.man_rank(m, w).unwrap();
            let rw = mk.woman_rank(w, m).unwrap();
            let better_w = Formula::or(mk.men_prefs[m][..rm].iter().filter_map(|&w2| at(m, w2, t)).collect::<Vec<_>>());
            let better_m = Formula::or(mk.women_prefs[w][..rw].iter().filter_map(|&m2| at(m2, w, t)).collect::<Vec<_>>());
            let was = at(m, w, t - 1).map(Formula::not).unwrap_or(Formula::Const(true));
            let tenured = Formula::or(
                incumbents.iter().filter_map(|&m2| Some(Formula::and([at(m2, w, t)?, at(m2, w, t - 1)?]))).collect::<Vec<_>>(),
            );
            let here = at(m, w, t).unwrap();
            out.push(Formula::implies(Formula::not(here), Formula::or([better_w, Formula::and([better_m, was]), tenured])));
        }
    }
    out
}

/// Formula types 1-4 for every time in `[lo, hi]`. Incumbency at `lo` refers
/// to variables at `lo - 1` for the men present then and at `lo`, which only
/// carry types 1-3; the result is a finite subset of the full formula set.
pub fn encode_dynamic_window(mkt: &DynamicMarket, lo: i64, hi: i64) -> Result<DynEncoding> {
    if lo > hi {
        return Err(Error::InvalidInstance("empty window".into()));
    }
    let mut enc = Encoding::new();
    let boundary = mkt.continuing(lo - 1);
    let fs = snapshot_formulas(mkt, lo - 1, &boundary, &mut enc.reg);
    enc.extend(fs);
    for t in lo..=hi {
        let fs = period_formulas(mkt, t, &mut enc.reg);
        enc.extend(fs);
    }
    let mut vars = BTreeMap::new();
    for t in lo - 1..=hi {
        let men = if t < lo { boundary.clone() } else { mkt.present_at(t) };
        for m in men {
            for w in 0..mkt.market.women.len() {
                vars.insert((m, w, t), enc.reg.var(matched_label(mkt, m, w, t)));
            }
        }
    }
    Ok(DynEncoding { enc, lo, hi, vars })
}

impl DynEncoding {
    pub fn decode(&self, m: &Model) -> Chronology {
        let mut ch = Chronology { lo: self.lo, hi: self.hi, assign: BTreeMap::new(), pre_window: Some(BTreeMap::new()) };
        for (&(man, w, t), &v) in &self.vars {
            if m.is_true(v) {
                if t < self.lo {
                    ch.pre_window.as_mut().unwrap().insert(w, man);
                } else {
                    ch.assign.insert((w, t), man);
                }
            }
        }
        ch
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Presence {
    Finite,
    /// Infinitely many men at both `t` and `t + 1`.
    Infinite { t: i64 },
    /// The count at `t` exceeded the enumeration budget.
    Unknown { t: i64 },
}

/// Built-in infinite families and finite markets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DynamicFamily {
    /// One woman; man `m_t` for every integer `t` on the market at `t` and
    /// `t + 1`; the woman prefers later arrivals.
    ParityLine,
    /// One woman; man `m_t` for every `t >= 1` with arrival `-t` and
    /// departure 0; the woman prefers earlier indices.
    NoFinitePresence,
    Fixed(DynamicMarket),
}

impl DynamicFamily {
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "parity_line" => Some(DynamicFamily::ParityLine),
            "no_finite_presence" => Some(DynamicFamily::NoFinitePresence),
            _ => None,
        }
    }

    /// Number of men on the market at both `t` and `t + 1`; `None` if infinite.
    pub fn continuing_count(&self, t: i64) -> Option<usize> {
        match self {
            DynamicFamily::ParityLine => Some(1),
            DynamicFamily::NoFinitePresence => (t + 1 >= 0).then_some(0),
            DynamicFamily::Fixed(mkt) => Some(mkt.continuing(t).len()),
        }
    }

    /// The men relevant to `[lo - 1, hi]` as a finite market.
    pub fn materialize(&self, lo: i64, hi: i64) -> Result<DynamicMarket> {
        match self {
            DynamicFamily::ParityLine => parity_line(lo - 2, hi),
            DynamicFamily::NoFinitePresence => {
                if lo - 1 < -1 && hi >= lo - 1 {
                    Err(Error::Precondition(format!("infinitely many men on the market in [{}, {hi}]", lo - 1)))
                } else {
                    no_finite_presence_truncated(0)
                }
            }
            DynamicFamily::Fixed(mkt) => Ok(mkt.clone()),
        }
    }
}

pub fn check_finite_presence(fam: &DynamicFamily, lo: i64, hi: i64, budget: usize) -> Presence {
    for t in lo..hi {
        match fam.continuing_count(t) {
            None => return Presence::Infinite { t },
            Some(c) if c > budget => return Presence::Unknown { t },
            _ => {}
        }
    }
    Presence::Finite
}

/// Men `m_t` for `t` in `[first, last]`, each present at `t` and `t + 1`.
pub fn parity_line(first: i64, last: i64) -> Result<DynamicMarket> {
    let ts: Vec<i64> = (first..=last).collect();
    let men: Vec<String> = ts.iter().map(|t| format!("m{t}")).collect();
    let w_prefs: Vec<usize> = (0..ts.len()).rev().collect();
    let market = MarriageMarket::from_indices(men, vec!["w".into()], vec![vec![0]; ts.len()], vec![w_prefs])?;
    DynamicMarket::new(market, ts.clone(), ts.iter().map(|t| t + 2).collect())
}

/// The family without finite presence cut to men `m_1 .. m_T`.
pub fn no_finite_presence_truncated(t_max: i64) -> Result<DynamicMarket> {
    let ts: Vec<i64> = (1..=t_max).collect();
    let men: Vec<String> = ts.iter().map(|t| format!("m{t}")).collect();
    let market = MarriageMarket::from_indices(men, vec!["w".into()], vec![vec![0]; ts.len()], vec![(0..ts.len()).collect()])?;
    DynamicMarket::new(market, ts.iter().map(|t| -t).collect(), vec![0; ts.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{enumerate_stable, Matching};

    #[test]
    fn pereyra_examples() {
        // w prefers m1 but m0 keeps her at t = 1
        let market = MarriageMarket::from_names(&[("m0", vec!["w"]), ("m1", vec!["w"])], &[("w", vec!["m1", "m0"])]).unwrap();
        let mkt = DynamicMarket::new(market, vec![0, 1], vec![2, 3]).unwrap();
        let ch = pereyra_forward(&mkt, 0, 2).unwrap();
        assert_eq!(ch.partner_of_woman(0, 0), Some(0));
        assert_eq!(ch.partner_of_woman(0, 1), Some(0));
        assert_eq!(ch.partner_of_woman(0, 2), Some(1));
        assert!(is_stable_subject_to_tenure(&mkt, &ch).unwrap().0);
        // parity line from 0: even arrivals hold the woman
        let pl = parity_line(0, 8).unwrap();
        let ch = pereyra_forward(&pl, 0, 8).unwrap();
        for t in 0..=8 {
            let m = ch.partner_of_woman(0, t).unwrap();
            assert_eq!(pl.arrival[m] % 2, 0);
        }
        assert!(pereyra_forward(&pl, 1, 3).is_err());
    }

    #[test]
    fn checker_examples() {
        let market = MarriageMarket::from_names(&[("m0", vec!["w", "v"]), ("m1", vec!["w"])], &[("w", vec!["m0", "m1"]), ("v", vec!["m0"])]).unwrap();
        let mkt = DynamicMarket::new(market, vec![0, 0], vec![2, 2]).unwrap();
        // m0 demoted from w to v at t = 1
        let mut assign = BTreeMap::new();
        assign.insert((0, 0), 0);
        assign.insert((1, 1), 0);
        assign.insert((0, 1), 1);
        let ch = Chronology { lo: 0, hi: 1, assign, pre_window: Some(BTreeMap::new()) };
        let (ok, v) = is_stable_subject_to_tenure(&mkt, &ch).unwrap();
        assert!(!ok);
        assert!(v.contains(&DynViolation::Tenure { man: 0, t: 0 }));
        // static unstable matching embedded at one period
        let mut assign = BTreeMap::new();
        assign.insert((0, 0), 1);
        let ch = Chronology { lo: 0, hi: 0, assign, pre_window: Some(BTreeMap::new()) };
        let (ok, v) = is_stable_subject_to_tenure(&mkt, &ch).unwrap();
        assert!(!ok);
        assert!(v.contains(&DynViolation::Blocking { man: 0, woman: 0, t: 0 }));
    }

    #[test]
    fn single_period_window_matches_static_stability() {
        let market = MarriageMarket::from_names(
            &[("a", vec!["x", "y"]), ("b", vec!["y", "x"])],
            &[("x", vec!["b", "a"]), ("y", vec!["a", "b"])],
        )
        .unwrap();
        let mkt = DynamicMarket::new(market.clone(), vec![0, 0], vec![1, 1]).unwrap();
        let de = encode_dynamic_window(&mkt, 0, 0).unwrap();
        let (models, done) = de.enc.models(100);
        assert!(done);
        let mut got: Vec<Matching> = models
            .iter()
            .map(|m| Matching::from_pairs(de.decode(m).assign.iter().map(|(&(w, _), &man)| (man, w))))
            .collect();
        got.sort_by(|a, b| a.pairs.cmp(&b.pairs));
        let mut want = enumerate_stable(&market).unwrap();
        want.sort_by(|a, b| a.pairs.cmp(&b.pairs));
        assert_eq!(got, want);
    }

    #[test]
    fn parity_line_window_has_two_models() {
        let mkt = DynamicFamily::ParityLine.materialize(-3, 3).unwrap();
        let de = encode_dynamic_window(&mkt, -3, 3).unwrap();
        let (models, done) = de.enc.models(10);
        assert!(done);
        assert_eq!(models.len(), 2);
        let parities: Vec<i64> = models
            .iter()
            .map(|m| {
                let ch = de.decode(m);
                assert!(is_stable_subject_to_tenure(&mkt, &ch).unwrap().0);
                let ps: Vec<i64> = (-3..=3).map(|t| mkt.arrival[ch.partner_of_woman(0, t).unwrap()].rem_euclid(2)).collect();
                assert!(ps.iter().all(|&p| p == ps[0]));
                ps[0]
            })
            .collect();
        assert_ne!(parities[0], parities[1]);
    }

    #[test]
    fn presence_examples() {
        assert_eq!(check_finite_presence(&DynamicFamily::ParityLine, -3, 3, 10), Presence::Finite);
        assert_eq!(check_finite_presence(&DynamicFamily::NoFinitePresence, -2, -1, 1000), Presence::Infinite { t: -2 });
        let empty = DynamicMarket::new(MarriageMarket::from_indices(vec![], vec!["w".into()], vec![], vec![vec![]]).unwrap(), vec![], vec![]).unwrap();
        assert_eq!(check_finite_presence(&DynamicFamily::Fixed(empty), -5, 5, 0), Presence::Finite);
    }

    #[test]
    fn truncations_never_settle_at_minus_one() {
        let mut seen = Vec::new();
        for t_max in 2..=8 {
            let mkt = no_finite_presence_truncated(t_max).unwrap();
            let de = encode_dynamic_window(&mkt, -t_max, -1).unwrap();
            let (models, done) = de.enc.models(10);
            assert!(done);
            assert_eq!(models.len(), 1);
            let ch = de.decode(&models[0]);
            let m = ch.partner_of_woman(0, -1).unwrap();
            seen.push(mkt.market.men[m].clone());
        }
        let distinct: std::collections::BTreeSet<_> = seen.iter().collect();
        assert_eq!(distinct.len(), seen.len());
    }

    #[test]
    fn json_round_trip() {
        let pl = parity_line(0, 3).unwrap();
        assert_eq!(DynamicMarket::from_json(&pl.to_json()).unwrap(), pl);
    }
}
