//! One-to-one marriage markets.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label;
use crate::logic::{Atom, Encoding, Formula, Model, VarId};

pub const DEFAULT_ENUM_BOUND: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Men,
    Women,
}

/// Preference lists are index lists, most preferred first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarriageMarket {
    pub men: Vec<String>,
    pub women: Vec<String>,
    pub men_prefs: Vec<Vec<usize>>,
    pub women_prefs: Vec<Vec<usize>>,
    men_rank: Vec<HashMap<usize, usize>>,
    women_rank: Vec<HashMap<usize, usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarketJson {
    pub men: IndexMap<String, Vec<String>>,
    pub women: IndexMap<String, Vec<String>>,
}

fn rank_maps(prefs: &[Vec<usize>]) -> Vec<HashMap<usize, usize>> {
    prefs.iter().map(|l| l.iter().enumerate().map(|(r, &x)| (x, r)).collect()).collect()
}

impl MarriageMarket {
    pub fn from_indices(men: Vec<String>, women: Vec<String>, men_prefs: Vec<Vec<usize>>, women_prefs: Vec<Vec<usize>>) -> Result<Self> {
        if men_prefs.len() != men.len() || women_prefs.len() != women.len() {
            return Err(Error::InvalidInstance("preference list count mismatch".into()));
        }
        for (who, prefs, bound) in [("man", &men_prefs, women.len()), ("woman", &women_prefs, men.len())] {
            for (i, l) in prefs.iter().enumerate() {
                let mut seen = BTreeSet::new();
                for &x in l {
                    if x >= bound || !seen.insert(x) {
                        return Err(Error::InvalidInstance(format!("bad preference list for {who} {i}")));
                    }
                }
            }
        }
        let men_rank = rank_maps(&men_prefs);
        let women_rank = rank_maps(&women_prefs);
        Ok(MarriageMarket { men, women, men_prefs, women_prefs, men_rank, women_rank })
    }

    /// Builds a market from `(name, [partner names])` lists.
    pub fn from_names<S: AsRef<str>>(men: &[(S, Vec<S>)], women: &[(S, Vec<S>)]) -> Result<Self> {
        let mnames: Vec<String> = men.iter().map(|(m, _)| m.as_ref().to_string()).collect();
        let wnames: Vec<String> = women.iter().map(|(w, _)| w.as_ref().to_string()).collect();
        let midx: HashMap<&str, usize> = mnames.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let widx: HashMap<&str, usize> = wnames.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if midx.len() != mnames.len() || widx.len() != wnames.len() {
            return Err(Error::InvalidInstance("duplicate agent id".into()));
        }
        let lookup = |idx: &HashMap<&str, usize>, l: &[S]| -> Result<Vec<usize>> {
            l.iter()
                .map(|x| idx.get(x.as_ref()).copied().ok_or_else(|| Error::InvalidInstance(format!("unknown agent {}", x.as_ref()))))
                .collect()
        };
        let mp = men.iter().map(|(_, l)| lookup(&widx, l)).collect::<Result<Vec<_>>>()?;
        let wp = women.iter().map(|(_, l)| lookup(&midx, l)).collect::<Result<Vec<_>>>()?;
        MarriageMarket::from_indices(mnames, wnames, mp, wp)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: MarketJson = serde_json::from_str(s)?;
        let men: Vec<(String, Vec<String>)> = j.men.into_iter().collect();
        let women: Vec<(String, Vec<String>)> = j.women.into_iter().collect();
        MarriageMarket::from_names(&men, &women)
    }

    pub fn to_json(&self) -> MarketJson {
        let side = |names: &[String], prefs: &[Vec<usize>], other: &[String]| {
            names
                .iter()
                .zip(prefs)
                .map(|(n, l)| (n.clone(), l.iter().map(|&x| other[x].clone()).collect()))
                .collect()
        };
        MarketJson {
            men: side(&self.men, &self.men_prefs, &self.women),
            women: side(&self.women, &self.women_prefs, &self.men),
        }
    }

    pub fn man_rank(&self, m: usize, w: usize) -> Option<usize> {
        self.men_rank[m].get(&w).copied()
    }

    pub fn woman_rank(&self, w: usize, m: usize) -> Option<usize> {
        self.women_rank[w].get(&m).copied()
    }

    pub fn mutually_acceptable(&self, m: usize, w: usize) -> bool {
        self.man_rank(m, w).is_some() && self.woman_rank(w, m).is_some()
    }

    /// Does `m` strictly prefer `w` to his current partner `cur`?
    pub fn man_prefers(&self, m: usize, w: usize, cur: Option<usize>) -> bool {
        match (self.man_rank(m, w), cur) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(r), Some(c)) => self.man_rank(m, c).is_none_or(|rc| r < rc),
        }
    }

    pub fn woman_prefers(&self, w: usize, m: usize, cur: Option<usize>) -> bool {
        match (self.woman_rank(w, m), cur) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(r), Some(c)) => self.woman_rank(w, c).is_none_or(|rc| r < rc),
        }
    }

    /// Same market with man `m` reporting `prefs`.
    pub fn with_man_prefs(&self, m: usize, prefs: Vec<usize>) -> Result<Self> {
        let mut mp = self.men_prefs.clone();
        mp[m] = prefs;
        MarriageMarket::from_indices(self.men.clone(), self.women.clone(), mp, self.women_prefs.clone())
    }

    pub fn size(&self) -> usize {
        self.men.len() + self.women.len()
    }
}

/// Pairs `(man, woman)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Matching {
    pub pairs: BTreeSet<(usize, usize)>,
}

impl Matching {
    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(it: I) -> Self {
        Matching { pairs: it.into_iter().collect() }
    }

    pub fn partner_of_man(&self, m: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == m).map(|p| p.1)
    }

    pub fn partner_of_woman(&self, w: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == w).map(|p| p.0)
    }

    pub fn named(&self, mkt: &MarriageMarket) -> Vec<(String, String)> {
        self.pairs.iter().map(|&(m, w)| (mkt.men[m].clone(), mkt.women[w].clone())).collect()
    }

    fn check_well_formed(&self, mkt: &MarriageMarket) -> Result<()> {
        let mut ms = BTreeSet::new();
        let mut ws = BTreeSet::new();
        for &(m, w) in &self.pairs {
            if m >= mkt.men.len() || w >= mkt.women.len() {
                return Err(Error::MalformedMatching(format!("unknown agent in pair ({m},{w})")));
            }
            if !ms.insert(m) {
                return Err(Error::MalformedMatching(format!("man {} matched twice", mkt.men[m])));
            }
            if !ws.insert(w) {
                return Err(Error::MalformedMatching(format!("woman {} matched twice", mkt.women[w])));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Unacceptable(usize, usize),
    Blocking(usize, usize),
}

pub fn is_stable(mkt: &MarriageMarket, mu: &Matching) -> Result<(bool, Vec<Violation>)> {
    mu.check_well_formed(mkt)?;
    let mut out = Vec::new();
    for &(m, w) in &mu.pairs {
        if !mkt.mutually_acceptable(m, w) {
            out.push(Violation::Unacceptable(m, w));
        }
    }
    let pm: Vec<Option<usize>> = (0..mkt.men.len()).map(|m| mu.partner_of_man(m)).collect();
    let pw: Vec<Option<usize>> = (0..mkt.women.len()).map(|w| mu.partner_of_woman(w)).collect();
    for m in 0..mkt.men.len() {
        for &w in &mkt.men_prefs[m] {
            if pm[m] == Some(w) {
                continue;
            }
            if mkt.man_prefers(m, w, pm[m]) && mkt.woman_prefers(w, m, pw[w]) {
                out.push(Violation::Blocking(m, w));
            }
        }
    }
    Ok((out.is_empty(), out))
}

/// Deferred acceptance; the result is optimal for `proposing`.
pub fn gale_shapley(mkt: &MarriageMarket, proposing: Side) -> Matching {
    let (prop_prefs, n_prop, n_recv) = match proposing {
        Side::Men => (&mkt.men_prefs, mkt.men.len(), mkt.women.len()),
        Side::Women => (&mkt.women_prefs, mkt.women.len(), mkt.men.len()),
    };
    let recv_rank = |r: usize, p: usize| match proposing {
        Side::Men => mkt.woman_rank(r, p),
        Side::Women => mkt.man_rank(r, p),
    };
    let mut next = vec![0usize; n_prop];
    let mut held: Vec<Option<usize>> = vec![None; n_recv];
    let mut free: VecDeque<usize> = (0..n_prop).collect();
    while let Some(p) = free.pop_front() {
        while next[p] < prop_prefs[p].len() {
            let r = prop_prefs[p][next[p]];
            next[p] += 1;
            let Some(rank) = recv_rank(r, p) else { continue };
            match held[r] {
                None => {
                    held[r] = Some(p);
                    break;
                }
                Some(cur) if rank < recv_rank(r, cur).unwrap() => {
                    held[r] = Some(p);
                    free.push_front(cur);
                    break;
                }
                _ => {}
            }
        }
    }
    Matching::from_pairs(held.iter().enumerate().filter_map(|(r, p)| {
        p.map(|p| match proposing {
            Side::Men => (p, r),
            Side::Women => (r, p),
        })
    }))
}

pub fn enumerate_stable(mkt: &MarriageMarket) -> Result<Vec<Matching>> {
    enumerate_stable_bounded(mkt, DEFAULT_ENUM_BOUND)
}

pub fn enumerate_stable_bounded(mkt: &MarriageMarket, bound: usize) -> Result<Vec<Matching>> {
    if mkt.size() > bound {
        return Err(Error::SizeBound(format!("{} agents exceeds bound {bound}", mkt.size())));
    }
    let mut out = Vec::new();
    let mut taken = vec![false; mkt.women.len()];
    let mut cur = Vec::new();
    fn rec(mkt: &MarriageMarket, m: usize, taken: &mut [bool], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Matching>) {
        if m == mkt.men.len() {
            let mu = Matching::from_pairs(cur.iter().copied());
            if is_stable(mkt, &mu).map(|r| r.0).unwrap_or(false) {
                out.push(mu);
            }
            return;
        }
        rec(mkt, m + 1, taken, cur, out);
        for &w in &mkt.men_prefs[m] {
            if !taken[w] && mkt.woman_rank(w, m).is_some() {
                taken[w] = true;
                cur.push((m, w));
                rec(mkt, m + 1, taken, cur, out);
                cur.pop();
                taken[w] = false;
            }
        }
    }
    rec(mkt, 0, &mut taken, &mut cur, &mut out);
    out.sort();
    Ok(out)
}

pub struct MatchingEncoding {
    pub enc: Encoding,
    /// `x[m][w]` is `matched(m,w)`.
    pub x: Vec<Vec<VarId>>,
}

impl MatchingEncoding {
    pub fn decode(&self, m: &Model) -> Matching {
        let mut mu = Matching::default();
        for (i, row) in self.x.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if m.is_true(v) {
                    mu.pairs.insert((i, j));
                }
            }
        }
        mu
    }

    /// All models, decoded.
    pub fn all_matchings(&self, limit: usize) -> (Vec<Matching>, bool) {
        let (models, done) = self.enc.models(limit);
        let mut out: Vec<Matching> = models.iter().map(|m| self.decode(m)).collect();
        out.sort();
        (out, done)
    }
}

fn base_encoding(mkt: &MarriageMarket) -> MatchingEncoding {
    let mut enc = Encoding::new();
    let x: Vec<Vec<VarId>> = (0..mkt.men.len())
        .map(|m| (0..mkt.women.len()).map(|w| enc.reg.var(label!("matched", mkt.men[m], mkt.women[w]))).collect())
        .collect();
    let (nm, nw) = (mkt.men.len(), mkt.women.len());
    for row in &x {
        for a in 0..nw {
            for b in a + 1..nw {
                enc.push(Formula::implies(Atom(row[a]), Formula::not(Atom(row[b]))));
            }
        }
    }
    for w in 0..nw {
        for a in 0..nm {
            for b in a + 1..nm {
                enc.push(Formula::implies(Atom(x[a][w]), Formula::not(Atom(x[b][w]))));
            }
        }
    }
    for m in 0..nm {
        for w in 0..nw {
            if !mkt.mutually_acceptable(m, w) {
                enc.push(Formula::not(Atom(x[m][w])));
            }
        }
    }
    MatchingEncoding { enc, x }
}

/// Stability formulae: at-most-one per side, unacceptability, and the
/// no-blocking implication for each mutually acceptable pair.
pub fn encode_stability(mkt: &MarriageMarket) -> MatchingEncoding {
    let mut me = base_encoding(mkt);
    for m in 0..mkt.men.len() {
        for w in 0..mkt.women.len() {
            if !mkt.mutually_acceptable(m, w) {
                continue;
            }
            let rm = mkt.man_rank(m, w).unwrap();
            let rw = mkt.woman_rank(w, m).unwrap();
            let better_w = mkt.men_prefs[m][..rm].iter().map(|&w2| Atom(me.x[m][w2]));
            let better_m = mkt.women_prefs[w][..rw].iter().map(|&m2| Atom(me.x[m2][w]));
            me.enc.push(Formula::implies(
                Formula::not(Atom(me.x[m][w])),
                Formula::or(better_w.chain(better_m)),
            ));
        }
    }
    me
}

/// The pairwise-exclusion variant, kept to show that it is not a stability
/// encoding: the empty matching always satisfies it.
pub fn encode_flawed_alternative(mkt: &MarriageMarket) -> MatchingEncoding {
    let mut me = base_encoding(mkt);
    for m in 0..mkt.men.len() {
        let lm = &mkt.men_prefs[m];
        for (i, &w) in lm.iter().enumerate() {
            let lw = &mkt.women_prefs[w];
            let Some(rw) = mkt.woman_rank(w, m) else { continue };
            for &w2 in &lm[i + 1..] {
                for &m2 in &lw[rw + 1..] {
                    me.enc.push(Formula::not(Formula::and([Atom(me.x[m][w2]), Atom(me.x[m2][w])])));
                }
            }
        }
    }
    me
}

/// Men matched in some stable matching, with their best stable partner.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ManOptimalContext {
    pub best_woman: BTreeMap<usize, usize>,
}

impl ManOptimalContext {
    pub fn from_stable_set(mkt: &MarriageMarket, stable: &[Matching]) -> Self {
        let mut best: BTreeMap<usize, usize> = BTreeMap::new();
        for mu in stable {
            for &(m, w) in &mu.pairs {
                let better = match best.get(&m) {
                    None => true,
                    Some(&cur) => mkt.man_rank(m, w) < mkt.man_rank(m, cur),
                };
                if better {
                    best.insert(m, w);
                }
            }
        }
        ManOptimalContext { best_woman: best }
    }

    pub fn compute(mkt: &MarriageMarket) -> Result<Self> {
        Ok(Self::from_stable_set(mkt, &enumerate_stable(mkt)?))
    }
}

pub fn encode_man_optimal(mkt: &MarriageMarket, ctx: &ManOptimalContext) -> MatchingEncoding {
    let mut me = encode_stability(mkt);
    for (&m, &wm) in &ctx.best_woman {
        let r = mkt.man_rank(m, wm).expect("best woman is acceptable");
        let f = Formula::or(mkt.men_prefs[m][..=r].iter().map(|&w| Atom(me.x[m][w])));
        me.enc.push(f);
    }
    me
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManipulationReport {
    pub man: String,
    pub truthful: Option<String>,
    pub manipulated: Option<String>,
    /// Outcome when reporting only the manipulated partner.
    pub truncated: Option<String>,
    pub strictly_improves: bool,
    pub truncation_keeps_partner: bool,
}

pub fn check_manipulation(mkt: &MarriageMarket, man: usize, misreport: &[usize]) -> Result<ManipulationReport> {
    let truth = gale_shapley(mkt, Side::Men).partner_of_man(man);
    let lied = mkt.with_man_prefs(man, misreport.to_vec())?;
    let got = gale_shapley(&lied, Side::Men).partner_of_man(man);
    let strictly = match got {
        Some(w) => mkt.man_prefers(man, w, truth),
        None => false,
    };
    let (truncated, keeps) = match got {
        Some(w) => {
            let t = gale_shapley(&mkt.with_man_prefs(man, vec![w])?, Side::Men).partner_of_man(man);
            (t, t == Some(w))
        }
        None => (None, true),
    };
    let name = |w: Option<usize>| w.map(|w| mkt.women[w].clone());
    Ok(ManipulationReport {
        man: mkt.men[man].clone(),
        truthful: name(truth),
        manipulated: name(got),
        truncated: name(truncated),
        strictly_improves: strictly,
        truncation_keeps_partner: keeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn market(men: &[(&str, &[&str])], women: &[(&str, &[&str])]) -> MarriageMarket {
        let m: Vec<(&str, Vec<&str>)> = men.iter().map(|(a, l)| (*a, l.to_vec())).collect();
        let w: Vec<(&str, Vec<&str>)> = women.iter().map(|(a, l)| (*a, l.to_vec())).collect();
        MarriageMarket::from_names(&m, &w).unwrap()
    }

    fn two_stable() -> MarriageMarket {
        market(
            &[("m1", &["w1", "w2"]), ("m2", &["w2", "w1"])],
            &[("w1", &["m2", "m1"]), ("w2", &["m1", "m2"])],
        )
    }

    fn unique_stable() -> MarriageMarket {
        market(
            &[("m1", &["w1", "w2"]), ("m2", &["w1", "w2"])],
            &[("w1", &["m2", "m1"]), ("w2", &["m1", "m2"])],
        )
    }

    #[test]
    fn singleton_market() {
        let mkt = market(&[("m", &["w"])], &[("w", &["m"])]);
        let (ms, _) = encode_stability(&mkt).all_matchings(10);
        assert_eq!(ms, vec![Matching::from_pairs([(0, 0)])]);
        let (ok, v) = is_stable(&mkt, &Matching::default()).unwrap();
        assert!(!ok);
        assert_eq!(v, vec![Violation::Blocking(0, 0)]);
    }

    #[test]
    fn model_counts_match_enumeration() {
        let u = unique_stable();
        let (ms, _) = encode_stability(&u).all_matchings(10);
        assert_eq!(ms, vec![Matching::from_pairs([(0, 1), (1, 0)])]);
        assert_eq!(enumerate_stable(&u).unwrap(), ms);
        let t = two_stable();
        let (ms, _) = encode_stability(&t).all_matchings(10);
        assert_eq!(ms.len(), 2);
        assert_eq!(enumerate_stable(&t).unwrap(), ms);
    }

    #[test]
    fn gale_shapley_sides() {
        let t = two_stable();
        assert_eq!(gale_shapley(&t, Side::Men), Matching::from_pairs([(0, 0), (1, 1)]));
        assert_eq!(gale_shapley(&t, Side::Women), Matching::from_pairs([(0, 1), (1, 0)]));
        let empty = market(&[("m1", &[])], &[("w1", &[])]);
        assert!(gale_shapley(&empty, Side::Men).pairs.is_empty());
    }

    #[test]
    fn malformed_matching_rejected() {
        let t = two_stable();
        let bad = Matching::from_pairs([(0, 0), (1, 0)]);
        assert!(matches!(is_stable(&t, &bad), Err(Error::MalformedMatching(_))));
    }

    #[test]
    fn flawed_alternative_admits_empty_model() {
        let t = two_stable();
        let fe = encode_flawed_alternative(&t);
        let all_false = Model::total(vec![false; fe.enc.reg.len()]);
        assert!(fe.enc.check(&all_false));
        let (ms, _) = fe.all_matchings(100);
        assert!(ms.len() > 2);
        let empty = market(&[], &[]);
        assert!(encode_flawed_alternative(&empty).enc.solve().is_sat());
        assert_eq!(enumerate_stable(&empty).unwrap(), vec![Matching::default()]);
    }

    #[test]
    fn man_optimal_encoding() {
        let t = two_stable();
        let ctx = ManOptimalContext::compute(&t).unwrap();
        let (ms, _) = encode_man_optimal(&t, &ctx).all_matchings(10);
        assert_eq!(ms, vec![gale_shapley(&t, Side::Men)]);
        // two men, one woman: the rejected man is never matched
        let mkt = market(&[("m1", &["w1"]), ("m2", &["w1"])], &[("w1", &["m1", "m2"])]);
        let ctx = ManOptimalContext::compute(&mkt).unwrap();
        assert_eq!(ctx.best_woman.keys().copied().collect::<Vec<_>>(), vec![0]);
        let plain = encode_stability(&mkt).enc.formulas.len();
        assert_eq!(encode_man_optimal(&mkt, &ctx).enc.formulas.len(), plain + 1);
    }

    #[test]
    fn truthful_and_truncated_reports() {
        let t = two_stable();
        let r = check_manipulation(&t, 0, &t.men_prefs[0].clone()).unwrap();
        assert_eq!(r.truthful, r.manipulated);
        assert!(!r.strictly_improves);
        let r = check_manipulation(&t, 0, &[1]).unwrap();
        assert_eq!(r.manipulated.as_deref(), Some("w2"));
        assert!(r.truncation_keeps_partner);
        assert!(!r.strictly_improves);
    }

    #[test]
    fn size_gate() {
        let names: Vec<(String, Vec<String>)> = (0..8).map(|i| (format!("a{i}"), vec![])).collect();
        let mkt = MarriageMarket::from_names(&names, &names).unwrap();
        assert!(matches!(enumerate_stable(&mkt), Err(Error::SizeBound(_))));
    }
}
