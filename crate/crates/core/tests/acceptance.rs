//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::collections::BTreeSet;
use std::time::Instant;

use compactness::couples::*;
use compactness::dynamic_matching::*;
use compactness::graphical_games::*;
use compactness::harness::*;
use compactness::logic::{solve, to_cnf, Atom, Formula, Lit, Model, Solver, VarId, VarRegistry};
use compactness::lp::{q, qr, Q};
use compactness::matching::*;
use compactness::networks::*;
use compactness::orders::*;
use compactness::revealed_pref::*;
use compactness::stoch_choice::*;
use compactness::label;
use itertools::Itertools;
use num::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---- solver completeness ----

fn random_formula(rng: &mut ChaCha8Rng, nvars: u32, depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        let a = Atom(VarId(rng.gen_range(0..nvars)));
        return if rng.gen_bool(0.5) { a } else { Formula::not(a) };
    }
    let kids = |rng: &mut ChaCha8Rng, k: usize| (0..k).map(|_| random_formula(rng, nvars, depth - 1)).collect::<Vec<_>>();
    match rng.gen_range(0..5) {
        0 => Formula::Not(Box::new(random_formula(rng, nvars, depth - 1))),
        1 => {
            let k = rng.gen_range(1..4);
            Formula::And(kids(rng, k))
        }
        2 => {
            let k = rng.gen_range(1..4);
            Formula::Or(kids(rng, k))
        }
        3 => {
            let mut k = kids(rng, 2);
            Formula::Implies(Box::new(k.remove(0)), Box::new(k.remove(0)))
        }
        _ => {
            let mut k = kids(rng, 2);
            Formula::Iff(Box::new(k.remove(0)), Box::new(k.remove(0)))
        }
    }
}

/// Truth table of `f` over all `2^n` assignments, 64 rows per word.
fn table(f: &Formula, n: u32) -> Vec<u64> {
    let rows = 1usize << n;
    let words = rows.div_ceil(64);
    let mask_last = if rows % 64 == 0 { u64::MAX } else { (1u64 << (rows % 64)) - 1 };
    let fix = |mut v: Vec<u64>| {
        *v.last_mut().unwrap() &= mask_last;
        v
    };
    match f {
        Formula::Const(b) => fix(vec![if *b { u64::MAX } else { 0 }; words]),
        Formula::Atom(v) => fix((0..words)
            .map(|w| (0..64).filter(|&b| (w * 64 + b) < rows && (w * 64 + b) >> v.0 & 1 == 1).fold(0u64, |acc, b| acc | 1 << b))
            .collect()),
        Formula::Not(g) => fix(table(g, n).into_iter().map(|x| !x).collect()),
        Formula::And(gs) => gs.iter().map(|g| table(g, n)).reduce(|a, b| a.iter().zip(&b).map(|(x, y)| x & y).collect()).unwrap(),
        Formula::Or(gs) => gs.iter().map(|g| table(g, n)).reduce(|a, b| a.iter().zip(&b).map(|(x, y)| x | y).collect()).unwrap(),
        Formula::Implies(a, b) => fix(table(a, n).iter().zip(table(b, n)).map(|(x, y)| !x | y).collect()),
        Formula::Iff(a, b) => fix(table(a, n).iter().zip(table(b, n)).map(|(x, y)| !(x ^ y)).collect()),
    }
}

fn solver_completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut solve_time = 0.0;
    let mut sat = 0;
    for case in 0..1000 {
        let n = rng.gen_range(1..=16u32);
        let count = rng.gen_range(1..=6);
        let fs: Vec<Formula> = (0..count).map(|_| random_formula(&mut rng, n, 4)).collect();
        let mut reg = VarRegistry::new();
        for i in 0..n {
            reg.var(label!("x", i));
        }
        let start = Instant::now();
        let cs = to_cnf(&fs, &mut reg);
        let res = solve(&cs, &[]);
        solve_time += start.elapsed().as_secs_f64();
        let all = fs.iter().map(|f| table(f, n)).reduce(|a, b| a.iter().zip(&b).map(|(x, y)| x & y).collect()).unwrap();
        let brute = all.iter().any(|&w| w != 0);
        ensure!(res.is_sat() == brute, "case {case}: solver {} vs truth table {brute}", res.is_sat());
        if let Some(m) = res.model() {
            sat += 1;
            ensure!(fs.iter().all(|f| f.eval(m).unwrap()), "case {case}: model violates a formula");
        }
    }
    ensure!(solve_time < 10.0, "solving took {solve_time:.2}s");
    Ok(format!("1000 sets ({sat} SAT), solve time {solve_time:.2}s"))
}

// ---- Szpilrajn ----

fn random_order(rng: &mut ChaCha8Rng, n: usize) -> StrictPartialOrder {
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(rng);
    let els: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let density = rng.gen_range(0.0..1.0);
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rank[a] < rank[b] && rng.gen_bool(density) {
                pairs.push((els[a].clone(), els[b].clone()));
            }
        }
    }
    StrictPartialOrder { elements: els, pairs }
}

fn szpilrajn() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut total = 0;
    for case in 0..200 {
        let n = rng.gen_range(1..=5);
        let o = random_order(&mut rng, n);
        let e = encode_extension(&o).map_err(|e| e.to_string())?;
        let (models, done) = e.enc.models(500);
        let brute = o.elements.iter().cloned().permutations(n).filter(|p| verify_extension(&o, p).unwrap()).count();
        ensure!(done && models.len() == brute, "case {case}: {} models vs {brute} extensions", models.len());
        total += brute;
    }
    Ok(format!("200 orders, {total} extensions counted both ways"))
}

// ---- matching ----

fn random_market(rng: &mut ChaCha8Rng, nm: usize, nw: usize, full: bool) -> MarriageMarket {
    let mut side = |n: usize, k: usize| -> Vec<Vec<usize>> {
        (0..n)
            .map(|_| {
                let mut p: Vec<usize> = (0..k).collect();
                p.shuffle(rng);
                let len = if full || rng.gen_bool(0.5) { k } else { rng.gen_range(0..=k) };
                p.truncate(len);
                p
            })
            .collect()
    };
    let mp = side(nm, nw);
    let wp = side(nw, nm);
    MarriageMarket::from_indices((0..nm).map(|i| format!("m{i}")).collect(), (0..nw).map(|i| format!("w{i}")).collect(), mp, wp).unwrap()
}

fn matching_bijection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut stable_total = 0;
    let mut flawed_checked = 0;
    for case in 0..300 {
        let (nm, nw) = (rng.gen_range(0..=6), rng.gen_range(0..=6));
        let mkt = random_market(&mut rng, nm, nw, false);
        let (ms, done) = encode_stability(&mkt).all_matchings(10_000);
        let want = enumerate_stable(&mkt).map_err(|e| e.to_string())?;
        let a: BTreeSet<_> = ms.iter().map(|m| m.pairs.clone()).collect();
        let b: BTreeSet<_> = want.iter().map(|m| m.pairs.clone()).collect();
        ensure!(done && a == b, "case {case}: encoder and enumeration differ");
        stable_total += want.len();
        let ctx = ManOptimalContext::compute(&mkt).map_err(|e| e.to_string())?;
        let (opt, _) = encode_man_optimal(&mkt, &ctx).all_matchings(10);
        ensure!(opt == vec![gale_shapley(&mkt, Side::Men)], "case {case}: man-optimal model differs from men-proposing outcome");
        if nm > 0 && nw > 0 {
            let fe = encode_flawed_alternative(&mkt);
            ensure!(fe.enc.check(&Model::total(vec![false; fe.enc.reg.len()])), "case {case}: flawed encoding rejects all-false");
            flawed_checked += 1;
        }
    }
    Ok(format!("300 markets, {stable_total} stable matchings, all-false admitted on {flawed_checked} nonempty instances"))
}

fn strategy_proofness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut lies = 0;
    for case in 0..200 {
        let mkt = random_market(&mut rng, 3, 3, true);
        for man in 0..3 {
            for len in 0..=3 {
                for lie in (0..3).permutations(len) {
                    let r = check_manipulation(&mkt, man, &lie).map_err(|e| e.to_string())?;
                    ensure!(!r.strictly_improves, "case {case}: {r:?}");
                    lies += 1;
                }
            }
        }
    }
    Ok(format!("200 markets, {lies} misreports, no strict improvement"))
}

// ---- couples ----

fn shuffled_prefix(rng: &mut ChaCha8Rng, n: usize, k: usize, min: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    let len = rng.gen_range(min.min(n)..=k.min(n));
    p.truncate(len);
    p
}

fn random_couples(rng: &mut ChaCha8Rng) -> CouplesMarket {
    let nh: usize = rng.gen_range(1..=3);
    let ns = rng.gen_range(0..=3);
    let nc = rng.gen_range(0..=2);
    let nd = ns + 2 * nc;
    let slots: Vec<Slot> =
        (0..=nh).cartesian_product(0..=nh).filter(|&(a, b)| a + b > 0).map(|(a, b)| (a.checked_sub(1), b.checked_sub(1))).collect();
    let capacity = (0..nh).map(|_| rng.gen_range(0..=2)).collect();
    let ranking = (0..nh).map(|_| shuffled_prefix(rng, nd, nd, 0)).collect();
    let singles = (0..ns).map(|d| (d, shuffled_prefix(rng, nh, nh, 0))).collect();
    let couples = (0..nc)
        .map(|i| {
            let mut prefs: Vec<Slot> = shuffled_prefix(rng, slots.len(), 5, 1).into_iter().map(|j| slots[j]).collect();
            for s in prefs.clone() {
                if let (Some(h), Some(h2)) = s {
                    for proj in [(Some(h), None), (None, Some(h2))] {
                        if !prefs.contains(&proj) {
                            prefs.push(proj);
                        }
                    }
                }
            }
            (ns + 2 * i, ns + 2 * i + 1, prefs)
        })
        .collect();
    CouplesMarket {
        doctors: (0..nd).map(|i| format!("d{i}")).collect(),
        hospitals: (0..nh).map(|i| format!("h{i}")).collect(),
        capacity,
        ranking,
        singles,
        couples,
    }
}

fn couples() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sat = 0;
    for case in 0..100 {
        let mkt = random_couples(&mut rng);
        let ce = encode_couples(&mkt).map_err(|e| e.to_string())?;
        let res = ce.enc.solve();
        let oracle = bruteforce_near_feasible(&mkt).map_err(|e| e.to_string())?;
        ensure!(res.is_sat() == oracle.is_some(), "case {case}: encoder {} vs oracle {}", res.is_sat(), oracle.is_some());
        if let Some(m) = res.model() {
            sat += 1;
            let o = ce.decode(m);
            ensure!((0..mkt.hospitals.len()).all(|h| o.kstar[h].abs_diff(mkt.capacity[h]) <= 2), "case {case}: capacity moved by more than 2");
            ensure!(is_stable_with_couples(&mkt, &o).unwrap().0, "case {case}: decoded outcome unstable");
        }
    }
    let fx = no_stable_fixture();
    ensure!(!stable_exists_at(&fx, &fx.capacity).unwrap(), "fixture has a stable outcome at k");
    let ce = encode_couples(&fx).unwrap();
    let m = ce.enc.solve().into_model().ok_or("fixture encoder UNSAT")?;
    let o = ce.decode(&m);
    ensure!(o.kstar != fx.capacity && is_stable_with_couples(&fx, &o).unwrap().0, "fixture outcome not a perturbed stable outcome");
    Ok(format!("100 instances ({sat} SAT), fixture needs k* = {:?} for k = {:?}", o.kstar, fx.capacity))
}

// ---- revealed preference ----

fn afriat_garp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut rational = 0;
    for case in 0..200 {
        let count = rng.gen_range(1..=4);
        let obs = (0..count)
            .map(|_| {
                let p = vec![qr(rng.gen_range(1..5), rng.gen_range(1..3)), qr(rng.gen_range(0..4), rng.gen_range(1..3))];
                let x = vec![q(rng.gen_range(0..5)), q(rng.gen_range(0..5))];
                (p, x)
            })
            .collect();
        let ds = DemandDataset::new(2, obs).map_err(|e| e.to_string())?;
        let garp = check_garp(&ds).satisfied;
        let afriat = afriat_feasible(&ds).is_some();
        let frag = encode_rationalization_fragment(&ds, &GridConfig::new(4)).map_err(|e| e.to_string())?.enc.solve().is_sat();
        ensure!(garp == afriat && afriat == frag, "case {case}: GARP {garp}, Afriat {afriat}, fragment {frag}");
        rational += garp as usize;
    }
    let bad = violating_pair();
    ensure!(!check_garp(&bad).satisfied, "violating pair passes GARP");
    ensure!(encode_rationalization_fragment(&bad, &GridConfig::new(4)).unwrap().enc.solve().is_unsat(), "violating pair fragment SAT");
    Ok(format!("200 datasets ({rational} rationalizable), violating pair UNSAT"))
}

// ---- stochastic choice ----

fn stochastic() -> Outcome {
    let ds = cyclic_fixture(qr(7, 10));
    let r = check_arsp(&ds, 3).map_err(|e| e.to_string())?;
    ensure!(!r.satisfied && r.lhs == "21/10" && r.rhs == 2, "ARSP report {r:?}");
    ensure!(rationalize_finite(&ds).unwrap().is_none(), "cyclic data LP-feasible");
    for n in [8, 9] {
        ensure!(encode_stoch_fragment(&ds, n, 3).unwrap().enc.solve().is_unsat(), "encoder SAT at n_max = {n}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let items: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let menus: Vec<(Vec<usize>, usize)> = (2..=3).flat_map(|k| (0..3).combinations(k)).flat_map(|m| m.clone().into_iter().map(move |x| (m.clone(), x))).collect();
    for case in 0..20 {
        let w: Vec<i64> = (0..6).map(|_| rng.gen_range(0..4)).collect();
        let total: i64 = w.iter().sum::<i64>().max(1);
        let orders: Vec<(Vec<usize>, Q)> = (0..3).permutations(3).zip(&w).map(|(p, &x)| (p, qr(x, total))).collect();
        let orders = if w.iter().all(|&x| x == 0) { vec![(vec![0, 1, 2], q(1))] } else { orders };
        let d = OrderDistribution::new(3, orders).unwrap();
        let data = d.induce(items.clone(), &menus).unwrap();
        let sol = rationalize_finite(&data).unwrap().ok_or(format!("fixture {case} infeasible"))?;
        let mf = sol.marginals(3);
        for e in &data.entries {
            ensure!(mf.choice_prob(&e.menu, e.choice) == Some(e.prob.clone()), "fixture {case}: marginal mismatch");
        }
    }
    Ok(format!("cyclic 0.7: sum {} vs {}, LP infeasible, UNSAT at n_max 8 and 9; 20 fixtures round-trip", r.lhs, r.rhs))
}

// ---- networks ----

fn walrasian() -> Outcome {
    let fixtures = substitutable_fixtures(20, 7);
    let mut decoded = 0;
    for (k, net) in fixtures.iter().take(8).enumerate() {
        for n in [1u64, 2, 4] {
            let we = encode_eps_walrasian(net, &PriceGrid::for_network(net, n)).map_err(|e| e.to_string())?;
            let (models, _) = we.enc.models(20);
            for m in &models {
                ensure!(verify_eps_walrasian(net, &we.decode(net, m), &eps_vector(net, n)).unwrap(), "fixture {k} at n = {n}: decoded outcome fails");
                decoded += 1;
            }
        }
    }
    let mut small = 0;
    for (k, net) in fixtures.iter().enumerate() {
        let r = refine_to_exact(net, &[1, 2, 4, 8]).map_err(|e| format!("fixture {k}: {e}"))?;
        let zeros = vec![Q::zero(); net.agents.len()];
        ensure!(verify_eps_walrasian(net, &r.outcome, &zeros).unwrap(), "fixture {k}: refined outcome not exact");
        if net.trades.len() <= 3 {
            let oracle = brute_force_equilibria(net).unwrap();
            ensure!(oracle.iter().any(|o| o.holder == r.outcome.holder), "fixture {k}: allocation not among oracle equilibria");
            small += 1;
        }
    }
    Ok(format!("{decoded} decoded outcomes verified, 20 fixtures exact, {small} checked against the oracle"))
}

// ---- games ----

fn eps_nash() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut games = vec![matching_pennies(), prisoners_dilemma()];
    for _ in 0..6 {
        let mut v = || (0..4).map(|_| rng.gen_range(-2..=2)).collect::<Vec<i64>>();
        let (a, b) = (v(), v());
        games.push(
            GraphicalGame::bimatrix(["r", "c"], [&["x", "y"], &["x", "y"]], &[vec![a[0], a[1]], vec![a[2], a[3]]], &[vec![b[0], b[1]], vec![b[2], b[3]]])
                .unwrap(),
        );
    }
    for (k, g) in games.iter().enumerate() {
        for eps in [qr(1, 2), qr(1, 4)] {
            let plan = plan_discretization(g, &eps).unwrap();
            let ne = encode_eps_nash(g, &eps, &plan).unwrap();
            let (models, _) = ne.enc.models(10);
            ensure!(!models.is_empty(), "game {k}: no model at ε = {eps}");
            for m in &models {
                ensure!(verify_eps_nash(g, &ne.decode(m), &eps).unwrap().ok, "game {k}: decoded profile fails at ε = {eps}");
            }
        }
        let steps = eps_nash_ladder(g, &[qr(1, 2), qr(1, 4), qr(1, 8)]).unwrap();
        ensure!(steps.windows(2).all(|w| w[1].worst_gain <= w[0].worst_gain), "game {k}: ladder gains increase");
    }
    let g = matching_pennies();
    let eps = qr(1, 4);
    let plan = plan_discretization(&g, &eps).unwrap();
    let ne = encode_eps_nash(&g, &eps, &plan).unwrap();
    let half = vec![qr(1, 2), qr(1, 2)];
    let lits: Vec<Lit> = (0..2)
        .map(|i| plan.grids[i].iter().position(|s| *s == half).map(|k| Lit::pos(ne.plays[i][k])))
        .collect::<Option<_>>()
        .ok_or("(1/2, 1/2) not on the grid")?;
    let (cs, _) = ne.enc.to_cnf();
    ensure!(Solver::from_clauses(&cs).solve(&lits).is_sat(), "no model plays (1/2, 1/2)");
    Ok(format!("{} games verified at ε = 1/2, 1/4; matching pennies admits (1/2, 1/2); ladders non-increasing", games.len()))
}

// ---- dynamic ----

fn dynamic_parity() -> Outcome {
    let mkt = DynamicFamily::ParityLine.materialize(-3, 3).unwrap();
    let de = encode_dynamic_window(&mkt, -3, 3).unwrap();
    let (models, done) = de.enc.models(10);
    ensure!(done && models.len() == 2, "{} window models", models.len());
    let mut parities = BTreeSet::new();
    for m in &models {
        let ch = de.decode(m);
        ensure!(is_stable_subject_to_tenure(&mkt, &ch).unwrap().0, "window model unstable");
        let ps: BTreeSet<i64> = (-3..=3).map(|t| mkt.arrival[ch.partner_of_woman(0, t).unwrap()].rem_euclid(2)).collect();
        ensure!(ps.len() == 1, "mixed parities in one model");
        parities.extend(ps);
    }
    ensure!(parities.len() == 2, "parities not complementary");
    let pl = parity_line(0, 12).unwrap();
    let ch = pereyra_forward(&pl, 0, 12).unwrap();
    for t in 0..=12 {
        let m = ch.partner_of_woman(0, t).ok_or(format!("woman unmatched at {t}"))?;
        ensure!(pl.arrival[m] % 2 == 0, "odd arrival matched at {t}");
    }
    for m in 0..pl.market.men.len() {
        let held = !ch.times_of(0, m).is_empty();
        ensure!(held == (pl.arrival[m] % 2 == 0), "{} held: {held}", pl.market.men[m]);
    }
    let rungs = no_finite_presence_rungs(2..=8).unwrap();
    let mut holders = Vec::new();
    for r in &rungs {
        let t = r.k as i64;
        let mkt = no_finite_presence_truncated(t).unwrap();
        let de = encode_dynamic_window(&mkt, -t, -1).unwrap();
        let (ms, _) = de.enc.models(5);
        ensure!(ms.len() == 1, "T = {t}: {} models", ms.len());
        holders.push(mkt.market.men[de.decode(&ms[0]).partner_of_woman(0, -1).unwrap()].clone());
    }
    ensure!(holders.iter().collect::<BTreeSet<_>>().len() == holders.len(), "holder at -1 repeats: {holders:?}");
    let ps = prefix_search(&rungs, &time_minus_one_labels(8), 1).unwrap();
    ensure!(ps.exhausted(), "a prefix at time -1 survives every truncation");
    Ok(format!("2 parity models; even arrivals matched on [0, 12]; holders at -1 {holders:?}; prefix search exhausted"))
}

// ---- harness ----

fn harness_monotonicity() -> Outcome {
    let plan = |name: &str| match name {
        "szpilrajn" | "szpilrajn_free" => (80, 10, 6),
        "disjoint_pairs" => (16, 2, 8),
        "shift_market" => (40, 5, 6),
        "contradictory" => (8, 1, 3),
        "parity_line" => (120, 15, 8),
        "cobb_douglas" | "violating_pair" => (8000, 1000, 4),
        _ => (usize::MAX, 1, 4),
    };
    let mut rungs_total = 0;
    for &name in BUILTIN_FAMILIES {
        let inst = builtin(name).map_err(|e| e.to_string())?;
        let (k_max, step, m) = plan(name);
        let rungs = if step == 1 && k_max == usize::MAX {
            // level streams: one rung per level
            let full = inst.fragment(usize::MAX).unwrap();
            let mut out = Vec::new();
            let mut k = 0;
            while k < full.formulas.len() {
                k = (k + full.formulas.len().div_ceil(4)).min(full.formulas.len());
                let mut enc = full.clone();
                enc.formulas.truncate(k);
                out.push(Rung { k, enc });
            }
            out
        } else {
            fragment_rungs(&inst, k_max, step).unwrap()
        };
        let sat: Vec<bool> = rungs.iter().map(|r| Solver::from_clauses(&r.enc.to_cnf().0).solve(&[]).is_sat()).collect();
        ensure!(!sat.windows(2).any(|w| !w[0] && w[1]), "{name}: UNSAT then SAT in {sat:?}");
        let labels = inst.variables(m).unwrap();
        let ps = prefix_search(&rungs, &labels, 4).unwrap();
        for p in &ps.prefixes {
            for r in &rungs {
                let lits = prefix_assumptions(&r.enc, &labels, p);
                ensure!(Solver::from_clauses(&r.enc.to_cnf().0).solve(&lits).is_sat(), "{name}: prefix fails at k = {}", r.k);
            }
        }
        ensure!(ps.exhausted() == sat.contains(&false), "{name}: exhaustion disagrees with rung status");
        rungs_total += rungs.len();
    }
    Ok(format!("{} families, {rungs_total} rungs, monotone, prefixes sound", BUILTIN_FAMILIES.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("solver completeness", solver_completeness),
        ("szpilrajn bijection", szpilrajn),
        ("matching bijection", matching_bijection),
        ("strategy-proofness sweep", strategy_proofness),
        ("couples", couples),
        ("afriat/garp equivalence", afriat_garp),
        ("stochastic choice", stochastic),
        ("eps-walrasian guarantee", walrasian),
        ("eps-nash", eps_nash),
        ("dynamic parity", dynamic_parity),
        ("harness monotonicity", harness_monotonicity),
    ];
    let results: Vec<(String, Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(name, f)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
                    (name.to_string(), out, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (name, out, secs) in &results {
        match out {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
