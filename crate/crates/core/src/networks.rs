//! Trading networks with quasilinear utilities over held objects:
//! (ε-)demand, price bounds, substitutability on a grid, the ε-Walrasian
//! encoding and refinement to an exact equilibrium.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use num::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label;
use crate::logic::{Atom, Encoding, Formula, Lit, Model, Solver, VarId};
use crate::lp::{parse_q, q, q_str, Cmp, LinearProgram, LpOutcome, Q};

pub const MAX_OBJECTS_PER_AGENT: usize = 10;
pub const MAX_ENCODED_OBJECTS_PER_AGENT: usize = 3;
pub const MAX_PRICE_COMBOS: usize = 400_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub object: String,
    pub seller: String,
    pub buyer: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TradingNetwork {
    pub agents: Vec<String>,
    pub trades: Vec<Trade>,
    pub seller: Vec<usize>,
    pub buyer: Vec<usize>,
    /// Objects each agent can hold, ascending.
    pub objects_of: Vec<Vec<usize>>,
    /// `utility[i][mask]`, bit `k` of `mask` meaning `objects_of[i][k]` is
    /// held; `None` is minus infinity.
    pub utility: Vec<Vec<Option<Q>>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    trades: Vec<Trade>,
    utilities: IndexMap<String, IndexMap<String, String>>,
}

impl TradingNetwork {
    /// Utilities are given per agent as `(held object names, value)`;
    /// unlisted bundles are impossible.
    pub fn new(trades: Vec<Trade>, utilities: &IndexMap<String, Vec<(Vec<String>, Option<Q>)>>) -> Result<Self> {
        let mut agents: Vec<String> = Vec::new();
        let idx = |a: &str, agents: &mut Vec<String>| match agents.iter().position(|x| x == a) {
            Some(i) => i,
            None => {
                agents.push(a.to_string());
                agents.len() - 1
            }
        };
        let mut seller = Vec::new();
        let mut buyer = Vec::new();
        for (k, t) in trades.iter().enumerate() {
            if t.seller == t.buyer {
                return Err(Error::InvalidInstance(format!("trade {}: seller equals buyer", t.object)));
            }
            if trades[..k].iter().any(|u| u.object == t.object) {
                return Err(Error::InvalidInstance(format!("object {} traded twice", t.object)));
            }
            seller.push(idx(&t.seller, &mut agents));
            buyer.push(idx(&t.buyer, &mut agents));
        }
        for a in utilities.keys() {
            idx(a, &mut agents);
        }
        let mut objects_of = vec![Vec::new(); agents.len()];
        for o in 0..trades.len() {
            objects_of[seller[o]].push(o);
            objects_of[buyer[o]].push(o);
        }
        let mut utility = Vec::new();
        for (i, a) in agents.iter().enumerate() {
            let objs = &objects_of[i];
            if objs.len() > MAX_OBJECTS_PER_AGENT {
                return Err(Error::SizeBound(format!("agent {a} holds {} objects", objs.len())));
            }
            let mut table = vec![None; 1 << objs.len()];
            for (bundle, v) in utilities.get(a).map(|v| v.as_slice()).unwrap_or(&[]) {
                let mut mask = 0usize;
                for name in bundle {
                    let k = objs
                        .iter()
                        .position(|&o| &trades[o].object == name)
                        .ok_or_else(|| Error::InvalidInstance(format!("agent {a} cannot hold {name}")))?;
                    mask |= 1 << k;
                }
                table[mask] = v.clone();
            }
            utility.push(table);
        }
        let net = TradingNetwork { agents, trades, seller, buyer, objects_of, utility };
        for i in 0..net.agents.len() {
            if net.utility[i][net.endowment(i)] != Some(q(0)) {
                return Err(Error::InvalidInstance(format!("agent {}: endowment utility must be 0", net.agents[i])));
            }
        }
        Ok(net)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: NetworkJson = serde_json::from_str(s)?;
        let mut utils = IndexMap::new();
        for (a, table) in &raw.utilities {
            let mut rows = Vec::new();
            for (key, v) in table {
                let bundle: Vec<String> = key.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                let val = if v.trim() == "-inf" { None } else { Some(parse_q(v).ok_or_else(|| Error::Parse(format!("bad value {v:?}")))?) };
                rows.push((bundle, val));
            }
            utils.insert(a.clone(), rows);
        }
        TradingNetwork::new(raw.trades, &utils)
    }

    pub fn to_json(&self) -> String {
        let mut utilities = IndexMap::new();
        for (i, a) in self.agents.iter().enumerate() {
            let mut table = IndexMap::new();
            for (mask, v) in self.utility[i].iter().enumerate() {
                if let Some(v) = v {
                    table.insert(self.bundle_names(i, mask).join(","), q_str(v));
                }
            }
            utilities.insert(a.clone(), table);
        }
        serde_json::to_string_pretty(&NetworkJson { trades: self.trades.clone(), utilities }).expect("serializable")
    }

    pub fn agent(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn num_objects(&self) -> usize {
        self.trades.len()
    }

    pub fn bundle_names(&self, i: usize, mask: usize) -> Vec<String> {
        self.objects_of[i].iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &o)| self.trades[o].object.clone()).collect()
    }

    /// Mask of the objects `i` holds without trading: those it sells.
    pub fn endowment(&self, i: usize) -> usize {
        self.objects_of[i].iter().enumerate().filter(|(_, &o)| self.seller[o] == i).map(|(k, _)| 1 << k).sum()
    }

    /// Quasilinear payoff of holding `mask` at `prices`; `None` if impossible.
    pub fn payoff(&self, i: usize, mask: usize, prices: &[Q]) -> Option<Q> {
        let mut v = self.utility[i][mask].clone()?;
        for (k, &o) in self.objects_of[i].iter().enumerate() {
            let held = mask >> k & 1 == 1;
            if held && self.buyer[o] == i {
                v -= &prices[o];
            }
            if !held && self.seller[o] == i {
                v += &prices[o];
            }
        }
        Some(v)
    }

    /// Bundles (masks) within `eps` of the best payoff.
    pub fn demand(&self, i: usize, prices: &[Q], eps: &Q) -> Vec<usize> {
        let pays: Vec<Option<Q>> = (0..self.utility[i].len()).map(|m| self.payoff(i, m, prices)).collect();
        let Some(best) = pays.iter().flatten().max().cloned() else { return vec![] };
        let floor = best - eps;
        pays.iter().enumerate().filter(|(_, p)| p.as_ref().is_some_and(|p| *p >= floor)).map(|(m, _)| m).collect()
    }

    pub fn compute_price_bound(&self, o: usize) -> u64 {
        let mut span = Q::zero();
        for i in [self.seller[o], self.buyer[o]] {
            let k = self.objects_of[i].iter().position(|&x| x == o).unwrap();
            for mask in 0..self.utility[i].len() {
                if mask >> k & 1 == 1 {
                    continue;
                }
                if let (Some(a), Some(b)) = (&self.utility[i][mask], &self.utility[i][mask | 1 << k]) {
                    span = span.max((b - a).abs());
                }
            }
        }
        (span.floor().to_integer() + num::BigInt::from(1)).to_u64().unwrap_or(u64::MAX)
    }

    /// Local mask of agent `i` from a global holder assignment.
    pub fn mask_of(&self, i: usize, holder: &[usize]) -> usize {
        self.objects_of[i].iter().enumerate().filter(|(_, &o)| holder[o] == i).map(|(k, _)| 1 << k).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutabilityReport {
    pub substitutable: bool,
    /// `(p, p', object)` with `p <= p'`, equal price on `object`, which is
    /// demanded at `p` but not at `p'`.
    pub counterexample: Option<(Vec<Q>, Vec<Q>, usize)>,
}

/// Tests substitutability of agent `i` over all price vectors on `grid`
/// (prices of objects outside `O_i` are irrelevant and set to 0).
pub fn check_substitutable(net: &TradingNetwork, i: usize, grid: &[Q]) -> SubstitutabilityReport {
    let objs = &net.objects_of[i];
    let k = objs.len();
    let mut singles: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut prices = vec![Q::zero(); net.num_objects()];
    for code in 0..grid.len().pow(k as u32) {
        let idx: Vec<usize> = (0..k).map(|j| code / grid.len().pow(j as u32) % grid.len()).collect();
        for (j, &o) in objs.iter().enumerate() {
            prices[o] = grid[idx[j]].clone();
        }
        let d = net.demand(i, &prices, &Q::zero());
        if d.len() == 1 {
            singles.push((idx, d[0]));
        }
    }
    for (pi, dm) in &singles {
        for (pj, dm2) in &singles {
            if !(0..k).all(|j| pi[j] <= pj[j]) {
                continue;
            }
            for j in 0..k {
                if pi[j] == pj[j] && dm >> j & 1 == 1 && dm2 >> j & 1 == 0 {
                    let vec = |ix: &Vec<usize>| ix.iter().map(|&g| grid[g].clone()).collect();
                    return SubstitutabilityReport { substitutable: false, counterexample: Some((vec(pi), vec(pj), objs[j])) };
                }
            }
        }
    }
    SubstitutabilityReport { substitutable: true, counterexample: None }
}

/// Integer prices in `[-H, H]` for every object of `i`, refined by `steps`.
pub fn default_grid(net: &TradingNetwork, i: usize, steps: i64) -> Vec<Q> {
    let h = net.objects_of[i].iter().map(|&o| net.compute_price_bound(o)).max().unwrap_or(1) as i64;
    (-h * steps..=h * steps).map(|v| Q::new(v.into(), steps.into())).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceGrid {
    pub n: u64,
    pub bounds: Vec<u64>,
}

impl PriceGrid {
    pub fn for_network(net: &TradingNetwork, n: u64) -> Self {
        PriceGrid { n, bounds: (0..net.num_objects()).map(|o| net.compute_price_bound(o)).collect() }
    }

    pub fn prices(&self, o: usize) -> Vec<Q> {
        let h = (self.bounds[o] * self.n) as i64;
        (-h..=h).map(|v| Q::new(v.into(), (self.n as i64).into())).collect()
    }

    pub fn eps(&self) -> Q {
        Q::new(1.into(), (self.n as i64).into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketOutcome {
    pub prices: Vec<Q>,
    /// Agent holding each object after trade (its seller or its buyer).
    pub holder: Vec<usize>,
}

impl MarketOutcome {
    pub fn traded(&self, net: &TradingNetwork) -> Vec<bool> {
        (0..net.num_objects()).map(|o| self.holder[o] == net.buyer[o]).collect()
    }

    pub fn to_json(&self, net: &TradingNetwork) -> serde_json::Value {
        let objs: Vec<serde_json::Value> = (0..net.num_objects())
            .map(|o| {
                serde_json::json!({
                    "object": net.trades[o].object,
                    "price": q_str(&self.prices[o]),
                    "holder": net.agents[self.holder[o]],
                    "traded": self.holder[o] == net.buyer[o],
                })
            })
            .collect();
        serde_json::json!({ "objects": objs })
    }
}

pub fn verify_eps_walrasian(net: &TradingNetwork, out: &MarketOutcome, eps: &[Q]) -> Result<bool> {
    let no = net.num_objects();
    if out.prices.len() != no || out.holder.len() != no || eps.len() != net.agents.len() {
        return Err(Error::InvalidInstance("outcome dimensions do not match the network".into()));
    }
    for o in 0..no {
        if out.holder[o] != net.seller[o] && out.holder[o] != net.buyer[o] {
            return Err(Error::InvalidInstance(format!("object {} held by a non-party", net.trades[o].object)));
        }
        if out.prices[o].abs() > q(net.compute_price_bound(o) as i64) {
            return Err(Error::InvalidInstance(format!("price of {} outside [-H, H]", net.trades[o].object)));
        }
    }
    Ok((0..net.agents.len()).all(|i| net.demand(i, &out.prices, &eps[i]).contains(&net.mask_of(i, &out.holder))))
}

pub fn eps_vector(net: &TradingNetwork, n: u64) -> Vec<Q> {
    net.objects_of.iter().map(|objs| Q::new((objs.len() as i64).into(), (n as i64).into())).collect()
}

pub struct WalrasEncoding {
    pub enc: Encoding,
    pub grid: PriceGrid,
    /// `price[o][k]` for the `k`-th grid price of `o`.
    pub price: Vec<Vec<VarId>>,
    /// `consumes[i][k]` for `objects_of[i][k]`.
    pub consumes: Vec<Vec<VarId>>,
}

pub fn encode_eps_walrasian(net: &TradingNetwork, grid: &PriceGrid) -> Result<WalrasEncoding> {
    let no = net.num_objects();
    if grid.bounds.len() != no || grid.n == 0 {
        return Err(Error::InvalidInstance("grid does not match the network".into()));
    }
    for o in 0..no {
        if grid.bounds[o] < net.compute_price_bound(o) {
            return Err(Error::InvalidInstance(format!("bound for {} below the price bound", net.trades[o].object)));
        }
    }
    let mut enc = Encoding::new();
    let grids: Vec<Vec<Q>> = (0..no).map(|o| grid.prices(o)).collect();
    let price: Vec<Vec<VarId>> =
        (0..no).map(|o| grids[o].iter().map(|p| enc.reg.var(label!("price", net.trades[o].object, q_str(p)))).collect()).collect();
    let consumes: Vec<Vec<VarId>> = (0..net.agents.len())
        .map(|i| net.objects_of[i].iter().map(|&o| enc.reg.var(label!("consumes", net.agents[i], net.trades[o].object))).collect())
        .collect();
    let slot = |i: usize, o: usize| net.objects_of[i].iter().position(|&x| x == o).unwrap();
    for o in 0..no {
        // 1, 2
        enc.extend(Formula::exactly_one(&price[o]));
        // 3
        let (s, b) = (net.seller[o], net.buyer[o]);
        enc.push(Formula::iff(Atom(consumes[b][slot(b, o)]), Formula::not(Atom(consumes[s][slot(s, o)]))));
    }
    // 4, as one clause per excluded bundle
    for i in 0..net.agents.len() {
        let objs = &net.objects_of[i];
        if objs.len() > MAX_ENCODED_OBJECTS_PER_AGENT {
            return Err(Error::SizeBound(format!("agent {} has {} objects", net.agents[i], objs.len())));
        }
        let combos: usize = objs.iter().map(|&o| grids[o].len()).product();
        if combos > MAX_PRICE_COMBOS {
            return Err(Error::SizeBound(format!("agent {}: {combos} price vectors", net.agents[i])));
        }
        let eps = Q::new((objs.len() as i64).into(), (grid.n as i64).into());
        let mut prices = vec![Q::zero(); no];
        let mut idx = vec![0usize; objs.len()];
        for _ in 0..combos {
            for (j, &o) in objs.iter().enumerate() {
                prices[o] = grids[o][idx[j]].clone();
            }
            let d = net.demand(i, &prices, &eps);
            let guard: Vec<Formula> = objs.iter().enumerate().map(|(j, &o)| Atom(price[o][idx[j]])).collect();
            for mask in 0..(1usize << objs.len()) {
                if d.contains(&mask) {
                    continue;
                }
                let bundle = (0..objs.len()).map(|k| {
                    let a = Atom(consumes[i][k]);
                    if mask >> k & 1 == 1 {
                        a
                    } else {
                        Formula::not(a)
                    }
                });
                enc.push(Formula::implies(Formula::and(guard.clone()), Formula::not(Formula::and(bundle))));
            }
            for j in 0..objs.len() {
                idx[j] += 1;
                if idx[j] < grids[objs[j]].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
    Ok(WalrasEncoding { enc, grid: grid.clone(), price, consumes })
}

impl WalrasEncoding {
    /// A model whose set of executed trades is inclusion-minimal: trades are
    /// greedily forced off, in object order, while the encoding stays SAT.
    pub fn solve_fewest_trades(&self, net: &TradingNetwork) -> Option<Model> {
        let (cs, _) = self.enc.to_cnf();
        let mut solver = Solver::from_clauses(&cs);
        let mut best = solver.solve(&[]).into_model()?;
        let mut assumptions = Vec::new();
        for o in 0..net.num_objects() {
            let b = net.buyer[o];
            let k = net.objects_of[b].iter().position(|&x| x == o).unwrap();
            let lit = Lit::neg(self.consumes[b][k]);
            assumptions.push(lit);
            match solver.solve(&assumptions).into_model() {
                Some(m) => best = m,
                None => {
                    assumptions.pop();
                }
            }
        }
        Some(best)
    }

    pub fn decode(&self, net: &TradingNetwork, m: &Model) -> MarketOutcome {
        let prices = (0..net.num_objects())
            .map(|o| {
                let k = self.price[o].iter().position(|&v| m.is_true(v)).unwrap_or(0);
                self.grid.prices(o)[k].clone()
            })
            .collect();
        let holder = (0..net.num_objects())
            .map(|o| {
                let b = net.buyer[o];
                let k = net.objects_of[b].iter().position(|&x| x == o).unwrap();
                if m.is_true(self.consumes[b][k]) {
                    b
                } else {
                    net.seller[o]
                }
            })
            .collect();
        MarketOutcome { prices, holder }
    }
}

fn holder_from_traded(net: &TradingNetwork, traded: &[bool]) -> Vec<usize> {
    (0..net.num_objects()).map(|o| if traded[o] { net.buyer[o] } else { net.seller[o] }).collect()
}

/// Price LP for a fixed allocation: every agent's bundle must be optimal,
/// prices within `[-H, H]`. Variables are `p_o + H_o >= 0`.
fn price_lp(net: &TradingNetwork, holder: &[usize]) -> (LinearProgram, Vec<Q>) {
    let no = net.num_objects();
    let h: Vec<Q> = (0..no).map(|o| q(net.compute_price_bound(o) as i64)).collect();
    let mut lp = LinearProgram::new(no);
    for o in 0..no {
        lp.add(vec![(o, q(1))], Cmp::Le, &h[o] * q(2));
    }
    for i in 0..net.agents.len() {
        let cur = net.mask_of(i, holder);
        // payoff(mask) = u(mask) + sum_o c(mask, o) p_o with c in {-1, 0, 1}
        let coeffs = |mask: usize| -> Vec<(usize, i64)> {
            net.objects_of[i]
                .iter()
                .enumerate()
                .filter_map(|(k, &o)| {
                    let held = mask >> k & 1 == 1;
                    if held && net.buyer[o] == i {
                        Some((o, -1))
                    } else if !held && net.seller[o] == i {
                        Some((o, 1))
                    } else {
                        None
                    }
                })
                .collect()
        };
        let Some(ucur) = net.utility[i][cur].clone() else {
            lp.add(vec![], Cmp::Ge, q(1));
            continue;
        };
        for other in 0..net.utility[i].len() {
            let Some(uo) = net.utility[i][other].clone() else { continue };
            // u(cur) + c_cur·p >= u(other) + c_other·p
            let mut row: BTreeMap<usize, i64> = BTreeMap::new();
            for (o, c) in coeffs(cur) {
                *row.entry(o).or_default() += c;
            }
            for (o, c) in coeffs(other) {
                *row.entry(o).or_default() -= c;
            }
            // substitute p_o = y_o - H_o
            let mut rhs = &uo - &ucur;
            let mut terms = Vec::new();
            for (o, c) in row {
                if c != 0 {
                    terms.push((o, q(c)));
                    rhs += q(c) * &h[o];
                }
            }
            lp.add(terms, Cmp::Ge, rhs);
        }
    }
    (lp, h)
}

/// Exact equilibrium prices supporting `traded`, if any: the midpoint of the
/// price vectors minimizing and maximizing total price.
pub fn exact_prices_for(net: &TradingNetwork, traded: &[bool]) -> Option<Vec<Q>> {
    let holder = holder_from_traded(net, traded);
    let (lp, h) = price_lp(net, &holder);
    let no = net.num_objects();
    let up: Vec<(usize, Q)> = (0..no).map(|o| (o, q(1))).collect();
    let down: Vec<(usize, Q)> = (0..no).map(|o| (o, q(-1))).collect();
    let (LpOutcome::Optimal { x: hi, .. }, LpOutcome::Optimal { x: lo, .. }) = (lp.maximize(&up), lp.maximize(&down)) else {
        return None;
    };
    Some((0..no).map(|o| (&hi[o] + &lo[o]) / q(2) - &h[o]).collect())
}

/// Brute-force oracle: every trade set admitting exact equilibrium prices.
pub fn brute_force_equilibria(net: &TradingNetwork) -> Result<Vec<MarketOutcome>> {
    let no = net.num_objects();
    if no > 12 {
        return Err(Error::SizeBound(format!("{no} trades for exhaustive search")));
    }
    let mut out = Vec::new();
    for code in 0..(1usize << no) {
        let traded: Vec<bool> = (0..no).map(|o| code >> o & 1 == 1).collect();
        if let Some(prices) = exact_prices_for(net, &traded) {
            out.push(MarketOutcome { prices, holder: holder_from_traded(net, &traded) });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct RefineReport {
    pub outcome: MarketOutcome,
    /// Resolution whose allocation was completed to an exact equilibrium.
    pub n: u64,
    /// Decoded approximate outcome per resolution tried.
    pub history: Vec<(u64, MarketOutcome)>,
}

/// Solves the ε-Walrasian encoding along `ladder` and stops at the first
/// resolution whose allocation supports exact equilibrium prices.
pub fn refine_to_exact(net: &TradingNetwork, ladder: &[u64]) -> Result<RefineReport> {
    let mut history = Vec::new();
    for &n in ladder {
        let we = encode_eps_walrasian(net, &PriceGrid::for_network(net, n))?;
        let Some(m) = we.solve_fewest_trades(net) else {
            return Err(Error::NonConvergence(format!("no ε-Walrasian outcome at n = {n}")));
        };
        let approx = we.decode(net, &m);
        let traded = approx.traded(net);
        history.push((n, approx));
        if let Some(prices) = exact_prices_for(net, &traded) {
            let outcome = MarketOutcome { prices, holder: holder_from_traded(net, &traded) };
            let zeros = vec![Q::zero(); net.agents.len()];
            if verify_eps_walrasian(net, &outcome, &zeros)? {
                return Ok(RefineReport { outcome, n, history });
            }
        }
    }
    Err(Error::NonConvergence(format!("allocation did not stabilize on an exact equilibrium over n in {ladder:?}")))
}

/// One object sold by `s` (keep value `keep`) to `b` (value `value`).
pub fn single_trade(keep: i64, value: i64) -> TradingNetwork {
    let trades = vec![Trade { object: "o".into(), seller: "s".into(), buyer: "b".into() }];
    let mut u = IndexMap::new();
    u.insert("s".to_string(), vec![(vec!["o".to_string()], Some(q(0))), (vec![], Some(q(-keep)))]);
    u.insert("b".to_string(), vec![(vec![], Some(q(0))), (vec!["o".to_string()], Some(q(value)))]);
    TradingNetwork::new(trades, &u).expect("valid")
}

/// Random network with `agents` agents and `trades` trades, small integer
/// utilities and occasional impossible bundles.
pub fn random_network<R: rand::Rng>(rng: &mut R, agents: usize, trades: usize, max_value: i64) -> TradingNetwork {
    let names: Vec<String> = (0..agents).map(|i| format!("a{i}")).collect();
    let mut ts = Vec::new();
    let mut load = vec![0usize; agents];
    while ts.len() < trades {
        let s = rng.gen_range(0..agents);
        let b = rng.gen_range(0..agents);
        if s == b || load[s] >= MAX_ENCODED_OBJECTS_PER_AGENT || load[b] >= MAX_ENCODED_OBJECTS_PER_AGENT {
            continue;
        }
        load[s] += 1;
        load[b] += 1;
        ts.push(Trade { object: format!("o{}", ts.len()), seller: names[s].clone(), buyer: names[b].clone() });
    }
    let mut utils = IndexMap::new();
    for (i, a) in names.iter().enumerate() {
        let objs: Vec<usize> = (0..ts.len()).filter(|&o| ts[o].seller == *a || ts[o].buyer == *a).collect();
        let endow: usize = objs.iter().enumerate().filter(|(_, &o)| ts[o].seller == *a).map(|(k, _)| 1 << k).sum();
        let mut rows = Vec::new();
        for mask in 0..(1usize << objs.len()) {
            let bundle = objs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &o)| ts[o].object.clone()).collect();
            let v = if mask == endow {
                Some(q(0))
            } else if rng.gen_ratio(1, 10) {
                None
            } else {
                Some(q(rng.gen_range(-max_value..=max_value)))
            };
            rows.push((bundle, v));
        }
        let _ = i;
        utils.insert(a.clone(), rows);
    }
    TradingNetwork::new(ts, &utils).expect("generated network is valid")
}

/// Supply chain `a -> b -> c -> d` over objects `o1, o2, o3`: the two
/// intermediaries can only sell what they bought.
pub fn chain_fixture() -> TradingNetwork {
    let t = |o: &str, s: &str, b: &str| Trade { object: o.into(), seller: s.into(), buyer: b.into() };
    let trades = vec![t("o1", "a", "b"), t("o2", "b", "c"), t("o3", "c", "d")];
    let v = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut u = IndexMap::new();
    u.insert("a".to_string(), vec![(v(&["o1"]), Some(q(0))), (v(&[]), Some(q(-1)))]);
    u.insert("b".to_string(), vec![(v(&["o2"]), Some(q(0))), (v(&["o1", "o2"]), Some(q(0))), (v(&["o1"]), Some(q(0))), (v(&[]), None)]);
    u.insert("c".to_string(), vec![(v(&["o3"]), Some(q(0))), (v(&["o2", "o3"]), Some(q(0))), (v(&["o2"]), Some(q(-1))), (v(&[]), None)]);
    u.insert("d".to_string(), vec![(v(&[]), Some(q(0))), (v(&["o3"]), Some(q(5)))]);
    TradingNetwork::new(trades, &u).expect("valid")
}

/// Whether every agent passes `check_substitutable` on the integer grid.
pub fn substitutable_on_grid(net: &TradingNetwork) -> bool {
    (0..net.agents.len()).all(|i| check_substitutable(net, i, &default_grid(net, i, 1)).substitutable)
}

/// The supply chain followed by seeded random networks with at most three
/// trades, all substitutable on the integer grid.
pub fn substitutable_fixtures(count: usize, seed: u64) -> Vec<TradingNetwork> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![chain_fixture()];
    out.truncate(count);
    while out.len() < count {
        let agents = rand::Rng::gen_range(&mut rng, 2..=3);
        let trades = rand::Rng::gen_range(&mut rng, 1..=3);
        let net = random_network(&mut rng, agents, trades, 3);
        if substitutable_on_grid(&net) {
            out.push(net);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::qr;

    fn complements() -> TradingNetwork {
        let trades = vec![
            Trade { object: "x".into(), seller: "s1".into(), buyer: "b".into() },
            Trade { object: "y".into(), seller: "s2".into(), buyer: "b".into() },
        ];
        let mut u = IndexMap::new();
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        u.insert("b".to_string(), vec![(s(&[]), Some(q(0))), (s(&["x"]), Some(q(0))), (s(&["y"]), Some(q(0))), (s(&["x", "y"]), Some(q(4)))]);
        u.insert("s1".to_string(), vec![(s(&["x"]), Some(q(0))), (s(&[]), Some(q(0)))]);
        u.insert("s2".to_string(), vec![(s(&["y"]), Some(q(0))), (s(&[]), Some(q(0)))]);
        TradingNetwork::new(trades, &u).unwrap()
    }

    #[test]
    fn demand_examples() {
        let net = single_trade(0, 10);
        let b = net.agent("b").unwrap();
        let s = net.agent("s").unwrap();
        assert_eq!(net.demand(b, &[q(5)], &q(0)), vec![1]);
        assert_eq!(net.demand(b, &[q(10)], &q(0)), vec![0, 1]);
        assert_eq!(net.demand(s, &[q(5)], &q(0)), vec![0]);
        assert_eq!(net.compute_price_bound(0), 11);
        assert_eq!(single_trade(0, 0).compute_price_bound(0), 1);
    }

    #[test]
    fn substitutability_examples() {
        let net = single_trade(0, 10);
        let b = net.agent("b").unwrap();
        assert!(check_substitutable(&net, b, &default_grid(&net, b, 1)).substitutable);
        let c = complements();
        let b = c.agent("b").unwrap();
        let r = check_substitutable(&c, b, &default_grid(&c, b, 1));
        assert!(!r.substitutable);
        let (p, p2, o) = r.counterexample.unwrap();
        assert_eq!(p[if o == 0 { 0 } else { 1 }], p2[if o == 0 { 0 } else { 1 }]);
    }

    #[test]
    fn single_trade_encoding_and_refinement() {
        let net = single_trade(0, 10);
        let we = encode_eps_walrasian(&net, &PriceGrid::for_network(&net, 2)).unwrap();
        let (models, done) = we.enc.models(10_000);
        assert!(done && !models.is_empty());
        for m in &models {
            let out = we.decode(&net, m);
            assert!(verify_eps_walrasian(&net, &out, &eps_vector(&net, 2)).unwrap());
            if out.prices[0] > q(0) && out.prices[0] < q(10) {
                assert!(out.traded(&net)[0]);
            }
        }
        let r = refine_to_exact(&net, &[1, 2, 4]).unwrap();
        assert!(r.outcome.traded(&net)[0]);
        assert_eq!(r.outcome.prices[0], q(5));
        let zero = single_trade(0, 0);
        let r = refine_to_exact(&zero, &[1, 2]).unwrap();
        assert!(!r.outcome.traded(&zero)[0]);
        assert_eq!(r.outcome.prices[0], q(0));
    }

    #[test]
    fn verification_errors() {
        let net = single_trade(0, 10);
        let out = MarketOutcome { prices: vec![q(12)], holder: vec![net.agent("b").unwrap()] };
        assert!(verify_eps_walrasian(&net, &out, &[q(0), q(0)]).is_err());
        let out = MarketOutcome { prices: vec![qr(11, 2)], holder: vec![net.agent("s").unwrap()] };
        assert!(!verify_eps_walrasian(&net, &out, &[q(0), q(0)]).unwrap());
        assert!(encode_eps_walrasian(&net, &PriceGrid { n: 1, bounds: vec![3] }).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = complements();
        let back = TradingNetwork::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let s = r#"{"trades":[{"object":"o","seller":"s","buyer":"b"}],"utilities":{"s":{"o":"0","":"-inf"},"b":{"":"0","o":"7/2"}}}"#;
        let n = TradingNetwork::from_json(s).unwrap();
        assert_eq!(n.utility[0], vec![None, Some(q(0))]);
    }
}
