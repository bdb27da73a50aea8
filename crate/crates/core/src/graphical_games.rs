//! Games on graphs: strategy-grid planning, ε-best responses, the ε-Nash
//! encoding, verification and a shrinking-ε ladder.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use num::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label;
use crate::logic::{Atom, Encoding, Formula, Model, VarId};
use crate::lp::{parse_q, q, q_str, Q};

pub const MAX_PROFILE_COMBOS: usize = 1_000_000;
pub const MAX_GRID_DENOMINATOR: u64 = 1 << 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Player {
    pub id: String,
    /// Players whose strategies enter the payoff, including this one.
    pub neighbors: Vec<usize>,
    pub strategies: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphicalGame {
    pub players: Vec<Player>,
    /// `payoffs[i][k]`, `k` the mixed-radix index of a pure profile of
    /// `neighbors` (first neighbor most significant).
    pub payoffs: Vec<Vec<Q>>,
}

#[derive(Serialize, Deserialize)]
struct PlayerJson {
    id: String,
    neighbors: Vec<String>,
    strategies: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct GameJson {
    players: Vec<PlayerJson>,
    payoffs: IndexMap<String, IndexMap<String, String>>,
}

pub type MixedStrategy = Vec<Q>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedProfile {
    pub strategies: Vec<MixedStrategy>,
}

fn strategy_str(s: &[Q]) -> String {
    format!("({})", s.iter().map(q_str).collect::<Vec<_>>().join(";"))
}

impl GraphicalGame {
    pub fn new(players: Vec<Player>, payoffs: Vec<Vec<Q>>) -> Result<Self> {
        let g = GraphicalGame { players, payoffs };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.payoffs.len() != self.players.len() {
            return Err(Error::InvalidInstance("one payoff table per player required".into()));
        }
        for (i, p) in self.players.iter().enumerate() {
            if !p.neighbors.contains(&i) {
                return Err(Error::InvalidInstance(format!("player {} is not among its neighbors", p.id)));
            }
            if p.neighbors.iter().collect::<BTreeSet<_>>().len() != p.neighbors.len() || p.neighbors.iter().any(|&j| j >= self.players.len()) {
                return Err(Error::InvalidInstance(format!("player {}: bad neighbor list", p.id)));
            }
            if p.strategies.is_empty() {
                return Err(Error::InvalidInstance(format!("player {} has no strategies", p.id)));
            }
            if self.payoffs[i].len() != self.table_size(i) {
                return Err(Error::InvalidInstance(format!("player {}: payoff table incomplete", p.id)));
            }
        }
        Ok(())
    }

    fn table_size(&self, i: usize) -> usize {
        self.players[i].neighbors.iter().map(|&j| self.players[j].strategies.len()).product()
    }

    /// Two-player game from row and column payoff matrices.
    pub fn bimatrix(ids: [&str; 2], strategies: [&[&str]; 2], row: &[Vec<i64>], col: &[Vec<i64>]) -> Result<Self> {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let players = vec![
            Player { id: ids[0].into(), neighbors: vec![0, 1], strategies: s(strategies[0]) },
            Player { id: ids[1].into(), neighbors: vec![1, 0], strategies: s(strategies[1]) },
        ];
        let (m, n) = (strategies[0].len(), strategies[1].len());
        let mut p0 = Vec::new();
        for a in 0..m {
            for b in 0..n {
                p0.push(q(row[a][b]));
            }
        }
        let mut p1 = Vec::new();
        for b in 0..n {
            for a in 0..m {
                p1.push(q(col[a][b]));
            }
        }
        GraphicalGame::new(players, vec![p0, p1])
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: GameJson = serde_json::from_str(s)?;
        let idx = |id: &str| raw.players.iter().position(|p| p.id == id).ok_or_else(|| Error::Parse(format!("unknown player {id}")));
        let mut players = Vec::new();
        for p in &raw.players {
            players.push(Player { id: p.id.clone(), neighbors: p.neighbors.iter().map(|n| idx(n)).collect::<Result<_>>()?, strategies: p.strategies.clone() });
        }
        let mut g = GraphicalGame { players, payoffs: vec![] };
        for i in 0..g.players.len() {
            let table = raw.payoffs.get(&g.players[i].id).ok_or_else(|| Error::Parse(format!("no payoffs for {}", g.players[i].id)))?;
            let mut vals = vec![None; g.table_size(i)];
            for (key, v) in table {
                let labels: Vec<&str> = key.split(',').map(str::trim).collect();
                let nb = &g.players[i].neighbors;
                if labels.len() != nb.len() {
                    return Err(Error::Parse(format!("payoff key {key:?} has wrong arity")));
                }
                let mut k = 0;
                for (&j, l) in nb.iter().zip(&labels) {
                    let sj = &g.players[j].strategies;
                    let s = sj.iter().position(|x| x == l).ok_or_else(|| Error::Parse(format!("unknown strategy {l}")))?;
                    k = k * sj.len() + s;
                }
                vals[k] = Some(parse_q(v).ok_or_else(|| Error::Parse(format!("bad payoff {v:?}")))?);
            }
            g.payoffs.push(vals.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| Error::InvalidInstance("payoff table incomplete".into()))?);
        }
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        let players = self
            .players
            .iter()
            .map(|p| PlayerJson { id: p.id.clone(), neighbors: p.neighbors.iter().map(|&j| self.players[j].id.clone()).collect(), strategies: p.strategies.clone() })
            .collect();
        let mut payoffs = IndexMap::new();
        for (i, p) in self.players.iter().enumerate() {
            let mut table = IndexMap::new();
            for (k, v) in self.payoffs[i].iter().enumerate() {
                let mut rem = k;
                let mut labels = Vec::new();
                for &j in p.neighbors.iter().rev() {
                    let sj = &self.players[j].strategies;
                    labels.push(sj[rem % sj.len()].clone());
                    rem /= sj.len();
                }
                labels.reverse();
                table.insert(labels.join(","), q_str(v));
            }
            payoffs.insert(p.id.clone(), table);
        }
        serde_json::to_string_pretty(&GameJson { players, payoffs }).expect("serializable")
    }

    pub fn span(&self, i: usize) -> Q {
        let t = &self.payoffs[i];
        t.iter().max().unwrap() - t.iter().min().unwrap()
    }

    /// Expected payoff of each pure strategy of `i` against `profile`
    /// (its own entry is ignored).
    pub fn pure_payoffs(&self, i: usize, profile: &MixedProfile) -> Vec<Q> {
        let nb = &self.players[i].neighbors;
        let me = nb.iter().position(|&j| j == i).unwrap();
        let radix: Vec<usize> = nb.iter().map(|&j| self.players[j].strategies.len()).collect();
        let mut out = vec![Q::zero(); radix[me]];
        for (k, v) in self.payoffs[i].iter().enumerate() {
            let mut rem = k;
            let mut digits = vec![0; nb.len()];
            for p in (0..nb.len()).rev() {
                digits[p] = rem % radix[p];
                rem /= radix[p];
            }
            let mut w = v.clone();
            for (p, &j) in nb.iter().enumerate() {
                if p != me {
                    w *= &profile.strategies[j][digits[p]];
                    if w.is_zero() {
                        break;
                    }
                }
            }
            out[digits[me]] += w;
        }
        out
    }

    pub fn payoff(&self, i: usize, profile: &MixedProfile) -> Q {
        self.pure_payoffs(i, profile).iter().zip(&profile.strategies[i]).map(|(u, p)| u * p).sum()
    }

    pub fn validate_profile(&self, profile: &MixedProfile) -> Result<()> {
        if profile.strategies.len() != self.players.len() {
            return Err(Error::InvalidInstance("profile size".into()));
        }
        for (i, s) in profile.strategies.iter().enumerate() {
            if s.len() != self.players[i].strategies.len() || s.iter().any(|x| x.is_negative()) || s.iter().sum::<Q>() != q(1) {
                return Err(Error::InvalidInstance(format!("strategy of {} is not a distribution", self.players[i].id)));
            }
        }
        Ok(())
    }

    /// Players `j` with `j ∈ N(i)` or `i ∈ N(j)`.
    pub fn related(&self, i: usize) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = self.players[i].neighbors.iter().copied().collect();
        for (j, p) in self.players.iter().enumerate() {
            if p.neighbors.contains(&i) {
                out.insert(j);
            }
        }
        out
    }
}

pub fn pure(k: usize, n: usize) -> MixedStrategy {
    (0..n).map(|j| if j == k { q(1) } else { q(0) }).collect()
}

/// All points of the simplex over `n` strategies with denominator `d`.
pub fn simplex_lattice(n: usize, d: u64) -> Vec<MixedStrategy> {
    fn rec(left: u64, slots: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in (0..=left).rev() {
            cur.push(v);
            rec(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(d, n, &mut Vec::new(), &mut raw);
    raw.into_iter().map(|v| v.into_iter().map(|x| Q::new((x as i64).into(), (d as i64).into())).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscretizationPlan {
    pub eps: Q,
    /// `L_i = span(u_i) · Σ_{j ∈ N(i)} |S_j|`.
    pub lipschitz: Vec<Q>,
    /// `ε / (2 L_i)`, `None` when `L_i = 0`.
    pub delta_hat: Vec<Option<Q>>,
    pub delta: Vec<Option<Q>>,
    /// Lattice denominator, 1 meaning pure strategies only.
    pub denominator: Vec<u64>,
    pub grids: Vec<Vec<MixedStrategy>>,
    /// Grid points scaled by their denominator.
    pub numerators: Vec<Vec<Vec<i64>>>,
}

pub fn plan_discretization(g: &GraphicalGame, eps: &Q) -> Result<DiscretizationPlan> {
    if !eps.is_positive() {
        return Err(Error::InvalidInstance("ε must be positive".into()));
    }
    let np = g.players.len();
    let lipschitz: Vec<Q> = (0..np)
        .map(|i| g.span(i) * q(g.players[i].neighbors.iter().map(|&j| g.players[j].strategies.len() as i64).sum::<i64>()))
        .collect();
    let delta_hat: Vec<Option<Q>> = lipschitz.iter().map(|l| (!l.is_zero()).then(|| eps / (q(2) * l))).collect();
    let delta: Vec<Option<Q>> = (0..np).map(|i| g.related(i).into_iter().filter_map(|j| delta_hat[j].clone()).min()).collect();
    let mut denominator = Vec::new();
    let mut grids = Vec::new();
    for i in 0..np {
        let n = g.players[i].strategies.len();
        let d = match &delta[i] {
            None => 1,
            Some(dl) => {
                let need = (q(1) / dl).ceil().to_integer().to_u64().unwrap_or(u64::MAX);
                let d = need.max(1).next_power_of_two();
                if d > MAX_GRID_DENOMINATOR {
                    return Err(Error::SizeBound(format!("player {}: grid denominator {d}", g.players[i].id)));
                }
                d
            }
        };
        denominator.push(d);
        grids.push(if d == 1 { (0..n).map(|k| pure(k, n)).collect() } else { simplex_lattice(n, d) });
    }
    let numerators = grids
        .iter()
        .zip(&denominator)
        .map(|(gr, &d)| gr.iter().map(|s| s.iter().map(|x| (x * q(d as i64)).to_integer().to_i64().unwrap()).collect()).collect())
        .collect();
    Ok(DiscretizationPlan { eps: eps.clone(), lipschitz, delta_hat, delta, denominator, grids, numerators })
}

/// Closest grid point of denominator `d` in max-coordinate distance
/// (largest-remainder rounding, error below `1/d` per coordinate).
pub fn round_to_lattice(s: &[Q], d: u64) -> MixedStrategy {
    let dq = q(d as i64);
    let scaled: Vec<Q> = s.iter().map(|x| x * &dq).collect();
    let mut base: Vec<i64> = scaled.iter().map(|x| x.floor().to_integer().to_i64().unwrap()).collect();
    let mut left = d as i64 - base.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| (&scaled[b] - scaled[b].floor()).cmp(&(&scaled[a] - scaled[a].floor())).then(a.cmp(&b)));
    for &k in &order {
        if left == 0 {
            break;
        }
        base[k] += 1;
        left -= 1;
    }
    base.into_iter().map(|x| Q::new(x.into(), (d as i64).into())).collect()
}

/// Grid strategies of `i` within `eps` of the best pure response.
pub fn eps_best_responses(g: &GraphicalGame, i: usize, profile: &MixedProfile, eps: &Q, plan: &DiscretizationPlan) -> Result<Vec<usize>> {
    for &j in &g.players[i].neighbors {
        if j != i && !plan.grids[j].contains(&profile.strategies[j]) {
            return Err(Error::InvalidInstance(format!("strategy of {} is off its grid", g.players[j].id)));
        }
    }
    let u = g.pure_payoffs(i, profile);
    let best = u.iter().max().unwrap().clone();
    // loss of grid point x/d is sum_s x_s (best - u_s) / d; compare in integers
    let d = plan.denominator[i] as i64;
    let gaps: Vec<Q> = u.iter().map(|v| &best - v).collect();
    let bound = eps * q(d);
    let scale = gaps.iter().chain([&bound]).fold(num::BigInt::from(1), |acc, x| num::integer::lcm(acc, x.denom().clone()));
    let to_int = |x: &Q| (x * Q::from_integer(scale.clone())).to_integer();
    let gi: Vec<num::BigInt> = gaps.iter().map(to_int).collect();
    let bi = to_int(&bound);
    Ok(plan.numerators[i]
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let loss: num::BigInt = s.iter().zip(&gi).filter(|(&x, _)| x != 0).map(|(&x, g)| g * x).sum();
            loss <= bi
        })
        .map(|(k, _)| k)
        .collect())
}

pub struct NashEncoding {
    pub enc: Encoding,
    pub plan: DiscretizationPlan,
    /// `plays[i][k]` for grid strategy `k` of player `i`.
    pub plays: Vec<Vec<VarId>>,
}

/// Encoding with best-response slack `eps` over the grids of `plan`.
pub fn encode_eps_nash(g: &GraphicalGame, eps: &Q, plan: &DiscretizationPlan) -> Result<NashEncoding> {
    let np = g.players.len();
    let mut enc = Encoding::new();
    let plays: Vec<Vec<VarId>> = (0..np)
        .map(|i| plan.grids[i].iter().map(|s| enc.reg.var(label!("plays", g.players[i].id, strategy_str(s)))).collect())
        .collect();
    for row in &plays {
        // 1, 2
        enc.extend(Formula::exactly_one(row));
    }
    // 3
    for i in 0..np {
        let others: Vec<usize> = g.players[i].neighbors.iter().copied().filter(|&j| j != i).collect();
        let combos: usize = others.iter().map(|&j| plan.grids[j].len()).product();
        if combos > MAX_PROFILE_COMBOS {
            return Err(Error::SizeBound(format!("player {}: {combos} neighbor profiles", g.players[i].id)));
        }
        let mut profile = MixedProfile {
            strategies: (0..np).map(|j| plan.grids[j][0].clone()).collect(),
        };
        let mut idx = vec![0usize; others.len()];
        for _ in 0..combos {
            for (p, &j) in others.iter().enumerate() {
                profile.strategies[j] = plan.grids[j][idx[p]].clone();
            }
            let br = eps_best_responses(g, i, &profile, eps, plan)?;
            let guard = Formula::and(others.iter().enumerate().map(|(p, &j)| Atom(plays[j][idx[p]])));
            enc.push(Formula::implies(guard, Formula::or(br.into_iter().map(|k| Atom(plays[i][k])))));
            for p in 0..others.len() {
                idx[p] += 1;
                if idx[p] < plan.grids[others[p]].len() {
                    break;
                }
                idx[p] = 0;
            }
        }
    }
    Ok(NashEncoding { enc, plan: plan.clone(), plays })
}

impl NashEncoding {
    pub fn decode(&self, m: &Model) -> MixedProfile {
        MixedProfile {
            strategies: self
                .plays
                .iter()
                .enumerate()
                .map(|(i, row)| self.plan.grids[i][row.iter().position(|&v| m.is_true(v)).unwrap_or(0)].clone())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NashReport {
    pub ok: bool,
    /// Best pure deviation gain per player.
    pub gains: Vec<Q>,
    pub worst: Q,
}

pub fn verify_eps_nash(g: &GraphicalGame, profile: &MixedProfile, eps: &Q) -> Result<NashReport> {
    g.validate_profile(profile)?;
    let gains: Vec<Q> = (0..g.players.len())
        .map(|i| {
            let u = g.pure_payoffs(i, profile);
            let cur: Q = u.iter().zip(&profile.strategies[i]).map(|(a, b)| a * b).sum();
            u.iter().max().unwrap() - cur
        })
        .collect();
    let worst = gains.iter().max().cloned().unwrap_or_else(Q::zero);
    Ok(NashReport { ok: worst <= *eps, gains, worst })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LadderStep {
    pub eps: Q,
    /// Best-response slack actually encoded: `min(eps, previous worst gain)`.
    pub threshold: Q,
    pub profile: MixedProfile,
    pub worst_gain: Q,
}

/// Solves along decreasing `eps` values. Power-of-two grids are nested, so
/// the previous profile stays on the grid and the slack can be tightened
/// to the previous worst gain, making worst gains non-increasing.
pub fn eps_nash_ladder(g: &GraphicalGame, eps_values: &[Q]) -> Result<Vec<LadderStep>> {
    let mut steps: Vec<LadderStep> = Vec::new();
    for eps in eps_values {
        let plan = plan_discretization(g, eps)?;
        let threshold = match steps.last() {
            Some(prev) if prev.worst_gain < *eps => prev.worst_gain.clone(),
            _ => eps.clone(),
        };
        let ne = encode_eps_nash(g, &threshold, &plan)?;
        let m = ne.enc.solve().into_model().ok_or_else(|| Error::NonConvergence(format!("no grid ε-Nash profile at ε = {}", q_str(eps))))?;
        let profile = ne.decode(&m);
        let worst_gain = verify_eps_nash(g, &profile, &threshold)?.worst;
        steps.push(LadderStep { eps: eps.clone(), threshold, profile, worst_gain });
    }
    Ok(steps)
}

pub fn matching_pennies() -> GraphicalGame {
    GraphicalGame::bimatrix(["row", "col"], [&["H", "T"], &["H", "T"]], &[vec![1, -1], vec![-1, 1]], &[vec![-1, 1], vec![1, -1]]).expect("valid")
}

pub fn prisoners_dilemma() -> GraphicalGame {
    GraphicalGame::bimatrix(["p1", "p2"], [&["C", "D"], &["C", "D"]], &[vec![3, 0], vec![5, 1]], &[vec![3, 5], vec![0, 1]]).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::qr;

    fn half() -> MixedStrategy {
        vec![qr(1, 2), qr(1, 2)]
    }

    #[test]
    fn plan_examples() {
        let solo = GraphicalGame::new(
            vec![Player { id: "x".into(), neighbors: vec![0], strategies: vec!["a".into(), "b".into()] }],
            vec![vec![q(1), q(0)]],
        )
        .unwrap();
        let p = plan_discretization(&solo, &qr(1, 2)).unwrap();
        assert_eq!(p.lipschitz[0], q(2));
        assert_eq!(p.delta_hat[0], Some(qr(1, 8)));
        assert_eq!(p.grids[0].len(), 9);
        let flat = GraphicalGame::new(
            vec![Player { id: "x".into(), neighbors: vec![0], strategies: vec!["a".into(), "b".into()] }],
            vec![vec![q(3), q(3)]],
        )
        .unwrap();
        assert_eq!(plan_discretization(&flat, &qr(1, 2)).unwrap().grids[0], vec![pure(0, 2), pure(1, 2)]);
        let mp = plan_discretization(&matching_pennies(), &qr(1, 10)).unwrap();
        assert!(mp.grids.iter().all(|gr| gr.contains(&half())));
    }

    #[test]
    fn best_response_examples() {
        let g = matching_pennies();
        let plan = plan_discretization(&g, &qr(1, 2)).unwrap();
        let vs_half = MixedProfile { strategies: vec![half(), half()] };
        assert_eq!(eps_best_responses(&g, 0, &vs_half, &qr(1, 100), &plan).unwrap().len(), plan.grids[0].len());
        let vs_heads = MixedProfile { strategies: vec![half(), pure(0, 2)] };
        for k in eps_best_responses(&g, 0, &vs_heads, &qr(1, 2), &plan).unwrap() {
            assert!(plan.grids[0][k][0] >= qr(3, 4));
        }
        let off = MixedProfile { strategies: vec![half(), vec![qr(1, 3), qr(2, 3)]] };
        assert!(eps_best_responses(&g, 0, &off, &qr(1, 2), &plan).is_err());
    }

    #[test]
    fn verify_examples() {
        let g = matching_pennies();
        assert!(verify_eps_nash(&g, &MixedProfile { strategies: vec![half(), half()] }, &q(0)).unwrap().ok);
        let r = verify_eps_nash(&g, &MixedProfile { strategies: vec![pure(0, 2), pure(0, 2)] }, &q(1)).unwrap();
        assert!(!r.ok);
        assert_eq!(r.worst, q(2));
    }

    #[test]
    fn encoder_examples() {
        let pd = prisoners_dilemma();
        let eps = qr(1, 2);
        let plan = plan_discretization(&pd, &eps).unwrap();
        let ne = encode_eps_nash(&pd, &eps, &plan).unwrap();
        let (models, _) = ne.enc.models(40);
        let profiles: Vec<MixedProfile> = models.iter().map(|m| ne.decode(m)).collect();
        let dd = |k: usize| plan.grids[k].iter().position(|s| *s == pure(1, 2)).unwrap();
        let mut e = ne.enc.clone();
        e.push(Atom(ne.plays[0][dd(0)]));
        e.push(Atom(ne.plays[1][dd(1)]));
        assert!(e.solve().is_sat());
        for p in &profiles {
            assert!(verify_eps_nash(&pd, p, &eps).unwrap().ok);
            assert!(p.strategies.iter().all(|s| s[1] >= &q(1) - &eps));
        }
        let mp = matching_pennies();
        let eps = qr(1, 4);
        let plan = plan_discretization(&mp, &eps).unwrap();
        let ne = encode_eps_nash(&mp, &eps, &plan).unwrap();
        let mut e = ne.enc.clone();
        let k0 = plan.grids[0].iter().position(|s| *s == half()).unwrap();
        let k1 = plan.grids[1].iter().position(|s| *s == half()).unwrap();
        e.push(Atom(ne.plays[0][k0]));
        e.push(Atom(ne.plays[1][k1]));
        assert!(e.solve().is_sat());
    }

    #[test]
    fn single_indifferent_player_every_point_a_model() {
        let solo = GraphicalGame::new(
            vec![Player { id: "x".into(), neighbors: vec![0], strategies: vec!["a".into(), "b".into()] }],
            vec![vec![q(1), q(0)]],
        )
        .unwrap();
        // payoff ties are not needed: a huge slack makes every grid point a best response
        let plan = plan_discretization(&solo, &qr(1, 2)).unwrap();
        let ne = encode_eps_nash(&solo, &q(1), &plan).unwrap();
        assert_eq!(ne.enc.models(100).0.len(), plan.grids[0].len());
    }

    #[test]
    fn lattice_rounding() {
        let s = vec![qr(1, 3), qr(1, 3), qr(1, 3)];
        let r = round_to_lattice(&s, 4);
        assert_eq!(r.iter().sum::<Q>(), q(1));
        assert!(r.iter().zip(&s).all(|(a, b)| (a - b).abs() < qr(1, 4)));
        assert_eq!(simplex_lattice(3, 2).len(), 6);
    }
}
