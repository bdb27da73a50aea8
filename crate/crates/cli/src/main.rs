use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compactness::couples::{bruteforce_near_feasible, encode_couples, is_stable_with_couples, CouplesMarket};
use compactness::dynamic_matching::{
    check_finite_presence, encode_dynamic_window, is_stable_subject_to_tenure, pereyra_forward, Chronology, DynamicFamily, DynamicMarket,
    Presence,
};
use compactness::graphical_games::{encode_eps_nash, plan_discretization, verify_eps_nash, GraphicalGame};
use compactness::harness::{
    builtin, fragment_rungs, ladder_over, ladder_solve, no_finite_presence_rungs, prefix_search, time_minus_one_labels, LadderConfig,
    BUILTIN_FAMILIES,
};
use compactness::logic::{write_dimacs, Encoding};
use compactness::lp::{parse_q, q_str, Q};
use compactness::matching::{
    check_manipulation, encode_man_optimal, encode_stability, gale_shapley, is_stable, ManOptimalContext, MarriageMarket, Matching, Side,
};
use compactness::networks::{
    encode_eps_walrasian, eps_vector, refine_to_exact, substitutable_fixtures, verify_eps_walrasian, PriceGrid, TradingNetwork,
};
use compactness::orders::{encode_extension, extend_total_finite, verify_extension, StrictPartialOrder};
use compactness::revealed_pref::{afriat_feasible, check_garp, encode_rationalization_fragment, verify_rationalization, DemandDataset, GridConfig};
use compactness::stoch_choice::{check_arsp, decode_marginals, encode_stoch_fragment, rationalize_finite, StochDataset};
use compactness::Error;
use itertools::Itertools;
use serde_json::{json, Value};

const MAX_MODELS: usize = 10_000;

#[derive(Parser)]
#[command(name = "compactness", version, about = "Finite-fragment SAT encodings of market and choice models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct DemandCols {
    /// CSV price columns, comma separated (CSV input only).
    #[arg(long, value_delimiter = ',')]
    price_cols: Vec<String>,
    /// CSV bundle columns, comma separated (CSV input only).
    #[arg(long, value_delimiter = ',')]
    bundle_cols: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stable matching of a marriage market.
    Match {
        instance: PathBuf,
        /// List every stable matching.
        #[arg(long)]
        enumerate: bool,
    },
    /// The man-optimal stable matching via its encoding.
    MatchOptimal { instance: PathBuf },
    /// Look for profitable misreports by men under men-proposing deferred acceptance.
    Manipulate {
        instance: PathBuf,
        /// Only this man (default: every man).
        #[arg(long)]
        man: Option<String>,
        /// A specific misreport, comma separated women (requires --man).
        #[arg(long, value_delimiter = ',')]
        report: Option<Vec<String>>,
    },
    /// Stable outcome with couples, capacities moved by at most two.
    Couples {
        instance: PathBuf,
        /// Also run the exhaustive oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// GARP check of a demand dataset.
    Garp {
        instance: PathBuf,
        #[command(flatten)]
        cols: DemandCols,
    },
    /// Afriat rationalization, and the grid fragment at resolution --n.
    Rationalize {
        instance: PathBuf,
        #[arg(long)]
        n: Option<u32>,
        #[command(flatten)]
        cols: DemandCols,
    },
    /// Axiom of revealed stochastic preference.
    Arsp {
        instance: PathBuf,
        /// Longest sequence length.
        #[arg(long, default_value_t = 3)]
        len: usize,
        /// Accept decimal probabilities, read as exact decimals.
        #[arg(long)]
        allow_float: bool,
    },
    /// Distribution over orders rationalizing stochastic choice data.
    StochRationalize {
        instance: PathBuf,
        /// Also solve the marginal-family fragment at this resolution.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value_t = 3)]
        len: usize,
        #[arg(long)]
        allow_float: bool,
    },
    /// Approximate (or, with --exact, exact) Walrasian equilibrium of a trading network.
    Walrasian {
        /// Network JSON; omit to use a generated substitutable fixture.
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        n: u64,
        /// Refine along 1, 2, 4, ..., n to exact prices.
        #[arg(long)]
        exact: bool,
        /// Fixture index when no instance is given.
        #[arg(long, default_value_t = 0)]
        fixture: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// ε-Nash equilibrium of a graphical game.
    Nash {
        instance: PathBuf,
        #[arg(long, default_value = "1/2")]
        eps: String,
    },
    /// Stable-subject-to-tenure chronologies over a window.
    Dynamic {
        /// Dynamic market JSON; or use --family.
        instance: Option<PathBuf>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
        window: Vec<i64>,
        #[arg(long)]
        enumerate: bool,
        /// Run iterated deferred acceptance from LO instead.
        #[arg(long)]
        pereyra: bool,
    },
    /// Total extension of a strict partial order.
    Szpilrajn {
        instance: PathBuf,
        #[arg(long)]
        enumerate: bool,
    },
    /// Solve growing fragments of a built-in infinite family.
    Ladder {
        #[arg(long)]
        family: String,
        #[arg(long)]
        kmax: usize,
        #[arg(long, default_value_t = 1)]
        step: usize,
        /// Number of leading variables to track.
        #[arg(long, default_value_t = 8)]
        track: usize,
    },
    /// Prefix over the first m variables consistent with every fragment.
    PrefixLimit {
        #[arg(long)]
        family: String,
        #[arg(long)]
        prefix: usize,
        #[arg(long)]
        kmax: usize,
        #[arg(long, default_value_t = 1)]
        step: usize,
        /// Stop after this many surviving prefixes.
        #[arg(long, default_value_t = 1)]
        cap: usize,
    },
    /// Write an encoding as DIMACS CNF.
    ExportCnf {
        #[arg(long, value_enum)]
        domain: Domain,
        /// Instance file (or family name for --domain family).
        instance: String,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, default_value = "1/2")]
        eps: String,
        #[arg(long, default_value_t = 3)]
        len: usize,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
        window: Vec<i64>,
        #[arg(long, default_value_t = 100)]
        kmax: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Domain {
    Matching,
    MatchOptimal,
    Couples,
    Orders,
    RevealedPref,
    Stoch,
    Network,
    Game,
    Dynamic,
    Family,
}

/// Exit status: 0 solved or verified, 1 a valid negative answer.
enum Verdict {
    Yes,
    No,
}

type CmdResult = Result<(Verdict, String), Error>;

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, f: impl FnOnce(&str) -> Result<T, Error>) -> Result<T, Error> {
    f(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn verdict(ok: bool, v: Value) -> CmdResult {
    Ok((if ok { Verdict::Yes } else { Verdict::No }, pretty(&v)))
}

fn parse_eps(s: &str) -> Result<Q, Error> {
    parse_q(s).ok_or_else(|| Error::Parse(format!("not a rational number: {s}")))
}

fn window(w: &[i64]) -> Result<(i64, i64), Error> {
    match w {
        [lo, hi] if lo <= hi => Ok((*lo, *hi)),
        [] => Err(Error::InvalidInstance("--window LO HI is required".into())),
        _ => Err(Error::InvalidInstance("window needs LO <= HI".into())),
    }
}

fn matching_json(mkt: &MarriageMarket, mu: &Matching) -> Value {
    json!(mu.named(mkt).into_iter().map(|(m, w)| [m, w]).collect::<Vec<_>>())
}

fn load_demand(path: &Path, cols: &DemandCols) -> Result<DemandDataset, Error> {
    if path.extension().is_some_and(|e| e == "csv") {
        if cols.price_cols.is_empty() || cols.price_cols.len() != cols.bundle_cols.len() {
            return Err(Error::InvalidInstance("CSV input needs --price-cols and --bundle-cols of equal length".into()));
        }
        let p: Vec<&str> = cols.price_cols.iter().map(String::as_str).collect();
        let b: Vec<&str> = cols.bundle_cols.iter().map(String::as_str).collect();
        in_file(path, |s| DemandDataset::from_csv(s, &p, &b))
    } else {
        in_file(path, DemandDataset::from_json)
    }
}

fn chronology_json(mkt: &DynamicMarket, ch: &Chronology) -> Value {
    json!(ch.named(mkt).into_iter().map(|(t, w, m)| json!({"t": t, "woman": w, "man": m})).collect::<Vec<_>>())
}

fn dynamic_market(instance: &Option<PathBuf>, family: &Option<String>, lo: i64, hi: i64) -> Result<(DynamicMarket, Option<DynamicFamily>), Error> {
    match (instance, family) {
        (Some(p), None) => Ok((in_file(p, DynamicMarket::from_json)?, None)),
        (None, Some(name)) => {
            let fam = DynamicFamily::by_name(name).ok_or_else(|| Error::InvalidInstance(format!("unknown dynamic family {name}")))?;
            if let Presence::Infinite { t } = check_finite_presence(&fam, lo - 1, hi, 10_000) {
                return Err(Error::Precondition(format!("{name}: infinitely many men on the market at {t} and {}", t + 1)));
            }
            Ok((fam.materialize(lo, hi)?, Some(fam)))
        }
        _ => Err(Error::InvalidInstance("give exactly one of an instance file and --family".into())),
    }
}

fn run(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Match { instance, enumerate } => {
            let mkt = in_file(&instance, MarriageMarket::from_json)?;
            let me = encode_stability(&mkt);
            if enumerate {
                let (ms, complete) = me.all_matchings(MAX_MODELS);
                let list: Vec<Value> = ms.iter().map(|mu| matching_json(&mkt, mu)).collect();
                return verdict(true, json!({"count": ms.len(), "complete": complete, "stable_matchings": list}));
            }
            let m = me.enc.solve().into_model().ok_or_else(|| Error::NonConvergence("stability encoding UNSAT".into()))?;
            let mu = me.decode(&m);
            let stable = is_stable(&mkt, &mu)?.0;
            verdict(stable, json!({"matching": matching_json(&mkt, &mu), "stable": stable}))
        }
        Cmd::MatchOptimal { instance } => {
            let mkt = in_file(&instance, MarriageMarket::from_json)?;
            let ctx = ManOptimalContext::compute(&mkt)?;
            let (ms, _) = encode_man_optimal(&mkt, &ctx).all_matchings(2);
            let gs = gale_shapley(&mkt, Side::Men);
            let Some(mu) = ms.first() else { return verdict(false, json!({"matching": null})) };
            verdict(
                true,
                json!({"matching": matching_json(&mkt, mu), "unique": ms.len() == 1, "agrees_with_deferred_acceptance": *mu == gs}),
            )
        }
        Cmd::Manipulate { instance, man, report } => {
            let mkt = in_file(&instance, MarriageMarket::from_json)?;
            let man_idx = |name: &str| {
                mkt.men.iter().position(|m| m == name).ok_or_else(|| Error::InvalidInstance(format!("unknown man {name}")))
            };
            let woman_idx = |name: &str| {
                mkt.women.iter().position(|w| w == name).ok_or_else(|| Error::InvalidInstance(format!("unknown woman {name}")))
            };
            if let Some(lie) = report {
                let m = man_idx(man.as_deref().ok_or_else(|| Error::InvalidInstance("--report needs --man".into()))?)?;
                let lie: Vec<usize> = lie.iter().map(|w| woman_idx(w)).collect::<Result<_, _>>()?;
                let r = check_manipulation(&mkt, m, &lie)?;
                return verdict(!r.strictly_improves, serde_json::to_value(&r)?);
            }
            let nw = mkt.women.len();
            if nw > 6 {
                return Err(Error::SizeBound(format!("{nw} women (misreport sweep handles at most 6)")));
            }
            let men: Vec<usize> = match &man {
                Some(name) => vec![man_idx(name)?],
                None => (0..mkt.men.len()).collect(),
            };
            let mut checked = 0;
            let mut gains = Vec::new();
            for &m in &men {
                for len in 0..=nw {
                    for lie in (0..nw).permutations(len) {
                        let r = check_manipulation(&mkt, m, &lie)?;
                        checked += 1;
                        if r.strictly_improves {
                            gains.push(json!({"report": r, "misreport": lie.iter().map(|&w| mkt.women[w].clone()).collect::<Vec<_>>()}));
                        }
                    }
                }
            }
            verdict(gains.is_empty(), json!({"misreports_checked": checked, "profitable": gains}))
        }
        Cmd::Couples { instance, oracle } => {
            let mkt = in_file(&instance, CouplesMarket::from_json)?;
            let ce = encode_couples(&mkt)?;
            let model = ce.solve_preferring_original(&mkt);
            let oracle_json = if oracle {
                match bruteforce_near_feasible(&mkt)? {
                    Some(o) => json!({"found": true, "total_deviation": o.total_deviation, "kstar": o.outcome.kstar}),
                    None => json!({"found": false}),
                }
            } else {
                Value::Null
            };
            let Some(m) = model.as_ref() else { return verdict(false, json!({"sat": false, "oracle": oracle_json})) };
            let o = ce.decode(m);
            let stable = is_stable_with_couples(&mkt, &o)?.0;
            let assignment: serde_json::Map<String, Value> =
                mkt.doctors.iter().zip(&o.assignment).map(|(d, h)| (d.clone(), json!(h.map(|h| mkt.hospitals[h].clone())))).collect();
            let hospitals: serde_json::Map<String, Value> = (0..mkt.hospitals.len())
                .map(|h| (mkt.hospitals[h].clone(), json!({"capacity": mkt.capacity[h], "kstar": o.kstar[h]})))
                .collect();
            verdict(stable, json!({"sat": true, "stable": stable, "assignment": assignment, "hospitals": hospitals, "oracle": oracle_json}))
        }
        Cmd::Garp { instance, cols } => {
            let ds = load_demand(&instance, &cols)?;
            let r = check_garp(&ds);
            verdict(r.satisfied, serde_json::to_value(&r)?)
        }
        Cmd::Rationalize { instance, n, cols } => {
            let ds = load_demand(&instance, &cols)?;
            let Some(sol) = afriat_feasible(&ds) else {
                return verdict(false, json!({"rationalizable": false, "garp": check_garp(&ds)}));
            };
            let fragment = match n {
                Some(n) => {
                    let ge = encode_rationalization_fragment(&ds, &GridConfig::new(n))?;
                    match ge.enc.solve().into_model() {
                        Some(m) => {
                            let gu = ge.decode(&m);
                            let values: Vec<Value> = ge
                                .plan
                                .points
                                .iter()
                                .enumerate()
                                .map(|(i, p)| json!({"bundle": p.iter().map(q_str).collect::<Vec<_>>(), "utility": q_str(&gu.finest(i))}))
                                .collect();
                            json!({"n_max": n, "sat": true, "verified": verify_rationalization(&ge.plan, &gu), "grid_utility": values})
                        }
                        None => json!({"n_max": n, "sat": false}),
                    }
                }
                None => Value::Null,
            };
            verdict(true, json!({"rationalizable": true, "afriat": sol, "fragment": fragment}))
        }
        Cmd::Arsp { instance, len, allow_float } => {
            let ds = in_file(&instance, |s| StochDataset::from_json_with(s, allow_float))?;
            let r = check_arsp(&ds, len)?;
            verdict(r.satisfied, serde_json::to_value(&r)?)
        }
        Cmd::StochRationalize { instance, n, len, allow_float } => {
            let ds = in_file(&instance, |s| StochDataset::from_json_with(s, allow_float))?;
            let fragment = match n {
                Some(n) => {
                    let se = encode_stoch_fragment(&ds, n, len)?;
                    match se.enc.solve().into_model() {
                        Some(m) => {
                            let mf = decode_marginals(&se, &m);
                            let vals: serde_json::Map<String, Value> =
                                mf.values.iter().map(|(t, p)| (ds.names(t).join(">"), json!(q_str(p)))).collect();
                            json!({"n_max": n, "sat": true, "marginals": vals})
                        }
                        None => json!({"n_max": n, "sat": false}),
                    }
                }
                None => Value::Null,
            };
            match rationalize_finite(&ds)? {
                Some(d) => {
                    let orders: Vec<Value> =
                        d.orders.iter().map(|(o, p)| json!({"order": ds.names(o), "prob": q_str(p)})).collect();
                    verdict(true, json!({"rationalizable": true, "distribution": orders, "fragment": fragment}))
                }
                None => verdict(false, json!({"rationalizable": false, "fragment": fragment})),
            }
        }
        Cmd::Walrasian { instance, n, exact, fixture, seed } => {
            let net = match &instance {
                Some(p) => in_file(p, TradingNetwork::from_json)?,
                None => substitutable_fixtures(fixture + 1, seed).pop().expect("fixture"),
            };
            if n == 0 {
                return Err(Error::InvalidInstance("--n must be positive".into()));
            }
            if exact {
                let ladder: Vec<u64> = std::iter::successors(Some(1u64), |x| x.checked_mul(2)).take_while(|&x| x <= n).collect();
                let r = refine_to_exact(&net, &ladder)?;
                let ok = verify_eps_walrasian(&net, &r.outcome, &vec![Q::from_integer(0.into()); net.agents.len()])?;
                return verdict(ok, json!({"exact": true, "resolution": r.n, "outcome": r.outcome.to_json(&net), "verified": ok}));
            }
            let we = encode_eps_walrasian(&net, &PriceGrid::for_network(&net, n))?;
            let Some(m) = we.solve_fewest_trades(&net) else { return verdict(false, json!({"sat": false, "n": n})) };
            let out = we.decode(&net, &m);
            let eps = eps_vector(&net, n);
            let ok = verify_eps_walrasian(&net, &out, &eps)?;
            let eps_json: serde_json::Map<String, Value> = net.agents.iter().zip(&eps).map(|(a, e)| (a.clone(), json!(q_str(e)))).collect();
            verdict(ok, json!({"sat": true, "n": n, "eps": eps_json, "outcome": out.to_json(&net), "verified": ok}))
        }
        Cmd::Nash { instance, eps } => {
            let g = in_file(&instance, GraphicalGame::from_json)?;
            let eps = parse_eps(&eps)?;
            let plan = plan_discretization(&g, &eps)?;
            let ne = encode_eps_nash(&g, &eps, &plan)?;
            let Some(m) = ne.enc.solve().into_model() else { return verdict(false, json!({"sat": false})) };
            let profile = ne.decode(&m);
            let rep = verify_eps_nash(&g, &profile, &eps)?;
            let players: Vec<Value> = g
                .players
                .iter()
                .zip(&profile.strategies)
                .zip(&rep.gains)
                .map(|((p, s), gain)| {
                    let mix: serde_json::Map<String, Value> = p.strategies.iter().zip(s).map(|(a, x)| (a.clone(), json!(q_str(x)))).collect();
                    json!({"player": p.id, "strategy": mix, "gain": q_str(gain)})
                })
                .collect();
            verdict(rep.ok, json!({"eps": q_str(&eps), "profile": players, "worst_gain": q_str(&rep.worst), "verified": rep.ok}))
        }
        Cmd::Dynamic { instance, family, window: w, enumerate, pereyra } => {
            let (lo, hi) = window(&w)?;
            let (mkt, _) = dynamic_market(&instance, &family, lo, hi)?;
            if pereyra {
                let ch = pereyra_forward(&mkt, lo, hi)?;
                let ok = is_stable_subject_to_tenure(&mkt, &ch)?.0;
                return verdict(ok, json!({"window": [lo, hi], "chronology": chronology_json(&mkt, &ch), "stable": ok}));
            }
            let de = encode_dynamic_window(&mkt, lo, hi)?;
            let (models, complete) = de.enc.models(if enumerate { MAX_MODELS } else { 1 });
            let chs: Vec<Value> = models.iter().map(|m| chronology_json(&mkt, &de.decode(m))).collect();
            let mut out = json!({"window": [lo, hi], "chronologies": chs});
            if enumerate {
                out["count"] = json!(models.len());
                out["complete"] = json!(complete);
            }
            verdict(!models.is_empty(), out)
        }
        Cmd::Szpilrajn { instance, enumerate } => {
            let o: StrictPartialOrder = in_file(&instance, |s| Ok(serde_json::from_str(s)?))?;
            let total = extend_total_finite(&o)?;
            let ok = verify_extension(&o, &total)?;
            let mut out = json!({"extension": total, "verified": ok});
            if enumerate {
                let e = encode_extension(&o)?;
                let (models, complete) = e.enc.models(MAX_MODELS);
                out["count"] = json!(models.len());
                out["complete"] = json!(complete);
                out["extensions"] = json!(models.iter().map(|m| e.decode(&o, m)).collect::<Vec<_>>());
            }
            verdict(ok, out)
        }
        Cmd::Ladder { family, kmax, step, track } => {
            let report = if family == "no_finite_presence" {
                let top = kmax.max(2) as i64;
                let rungs = no_finite_presence_rungs(2..=top)?;
                ladder_over(("no_finite_presence", "dynamic_matching", "truncation to m_1..m_T over [-T, -1]"), false, &rungs, &time_minus_one_labels(track.min(top as usize)), None)
            } else {
                ladder_solve(&builtin(&family)?, kmax, step, &LadderConfig { track, conflict_budget: None })?
            };
            Ok((if report.first_unsat.is_none() { Verdict::Yes } else { Verdict::No }, report.to_json()))
        }
        Cmd::PrefixLimit { family, prefix, kmax, step, cap } => {
            let ps = if family == "no_finite_presence" {
                let top = kmax.max(2) as i64;
                prefix_search(&no_finite_presence_rungs(2..=top)?, &time_minus_one_labels(prefix), cap)?
            } else {
                let inst = builtin(&family)?;
                prefix_search(&fragment_rungs(&inst, kmax, step)?, &inst.variables(prefix)?, cap)?
            };
            Ok((if ps.exhausted() { Verdict::No } else { Verdict::Yes }, ps.to_json()))
        }
        Cmd::ExportCnf { domain, instance, n, eps, len, window: w, kmax } => {
            let path = PathBuf::from(&instance);
            let enc: Encoding = match domain {
                Domain::Matching => encode_stability(&in_file(&path, MarriageMarket::from_json)?).enc,
                Domain::MatchOptimal => {
                    let mkt = in_file(&path, MarriageMarket::from_json)?;
                    encode_man_optimal(&mkt, &ManOptimalContext::compute(&mkt)?).enc
                }
                Domain::Couples => encode_couples(&in_file(&path, CouplesMarket::from_json)?)?.enc,
                Domain::Orders => encode_extension(&in_file(&path, |s| Ok(serde_json::from_str::<StrictPartialOrder>(s)?))?)?.enc,
                Domain::RevealedPref => encode_rationalization_fragment(&in_file(&path, DemandDataset::from_json)?, &GridConfig::new(n))?.enc,
                Domain::Stoch => encode_stoch_fragment(&in_file(&path, StochDataset::from_json)?, n, len)?.enc,
                Domain::Network => {
                    let net = in_file(&path, TradingNetwork::from_json)?;
                    encode_eps_walrasian(&net, &PriceGrid::for_network(&net, n as u64))?.enc
                }
                Domain::Game => {
                    let g = in_file(&path, GraphicalGame::from_json)?;
                    let eps = parse_eps(&eps)?;
                    encode_eps_nash(&g, &eps, &plan_discretization(&g, &eps)?)?.enc
                }
                Domain::Dynamic => {
                    let (lo, hi) = window(&w)?;
                    encode_dynamic_window(&in_file(&path, DynamicMarket::from_json)?, lo, hi)?.enc
                }
                Domain::Family => builtin(&instance)?.fragment(kmax)?,
            };
            let (cs, reg) = enc.to_cnf();
            Ok((Verdict::Yes, write_dimacs(&cs, Some(&reg))))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Cmd::Ladder { family, .. } | Cmd::PrefixLimit { family, .. } = &cli.cmd {
        if family != "no_finite_presence" && !BUILTIN_FAMILIES.contains(&family.as_str()) {
            eprintln!("error: unknown family {family}; known: no_finite_presence, {}", BUILTIN_FAMILIES.join(", "));
            return ExitCode::from(2);
        }
    }
    let target = cli.out;
    match run(cli.cmd) {
        Ok((v, text)) => {
            let text = if text.ends_with('\n') { text } else { text + "\n" };
            match target {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, text) {
                        eprintln!("error: {}: {e}", p.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(match v {
                Verdict::Yes => 0,
                Verdict::No => 1,
            })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
