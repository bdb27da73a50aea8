use compactness::lp::Q;
use compactness::networks::*;
use num::Zero;

#[test]
fn fixtures_refine_to_exact_and_match_oracle() {
    for (k, net) in substitutable_fixtures(20, 7).iter().enumerate() {
        let oracle = brute_force_equilibria(net).unwrap();
        assert!(!oracle.is_empty(), "fixture {k} has no equilibrium:\n{}", net.to_json());
        let r = refine_to_exact(net, &[1, 2, 4, 8]).unwrap();
        let zeros = vec![Q::zero(); net.agents.len()];
        assert!(verify_eps_walrasian(net, &r.outcome, &zeros).unwrap());
        assert!(oracle.iter().any(|o| o.holder == r.outcome.holder), "fixture {k}");
        for (n, approx) in &r.history {
            assert!(verify_eps_walrasian(net, approx, &eps_vector(net, *n)).unwrap());
        }
        // rounding an exact equilibrium to the grid keeps bundles |O_i|/n-optimal
        for n in [1u64, 2, 4] {
            for eq in &oracle {
                let rounded = MarketOutcome {
                    prices: eq.prices.iter().map(|p| (p * Q::from_integer((n as i64).into())).round() / Q::from_integer((n as i64).into())).collect(),
                    holder: eq.holder.clone(),
                };
                assert!(verify_eps_walrasian(net, &rounded, &eps_vector(net, n)).unwrap());
            }
        }
    }
}

#[test]
fn decoded_models_are_eps_walrasian() {
    for net in substitutable_fixtures(6, 11) {
        for n in [1u64, 2] {
            let we = encode_eps_walrasian(&net, &PriceGrid::for_network(&net, n)).unwrap();
            let (models, _) = we.enc.models(50);
            assert!(!models.is_empty());
            for m in &models {
                let out = we.decode(&net, m);
                assert!(verify_eps_walrasian(&net, &out, &eps_vector(&net, n)).unwrap());
            }
        }
    }
}

#[test]
fn supply_chain_trades_end_to_end() {
    let net = chain_fixture();
    assert!(substitutable_on_grid(&net));
    let r = refine_to_exact(&net, &[1, 2, 4, 8]).unwrap();
    assert_eq!(r.outcome.traded(&net), vec![true, true, true]);
    let oracle = brute_force_equilibria(&net).unwrap();
    assert_eq!(oracle.len(), 1);
    assert_eq!(oracle[0].holder, r.outcome.holder);
}
