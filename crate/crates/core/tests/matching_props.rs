use compactness::logic::Model;
use compactness::matching::*;
use itertools::Itertools;
use proptest::prelude::*;

fn arb_market(max_men: usize, max_women: usize) -> impl Strategy<Value = MarriageMarket> {
    (0..=max_men, 0..=max_women).prop_flat_map(|(nm, nw)| {
        let side = |n: usize, k: usize| {
            prop::collection::vec(
                Just((0..k).collect::<Vec<usize>>()).prop_shuffle().prop_flat_map(move |p| (Just(p), 0..=k)),
                n,
            )
        };
        (side(nm, nw), side(nw, nm)).prop_map(move |(mp, wp)| {
            MarriageMarket::from_indices(
                (0..nm).map(|i| format!("m{i}")).collect(),
                (0..nw).map(|i| format!("w{i}")).collect(),
                mp.into_iter().map(|(p, l)| p[..l].to_vec()).collect(),
                wp.into_iter().map(|(p, l)| p[..l].to_vec()).collect(),
            )
            .unwrap()
        })
    })
}

fn has_mutual_pair(mkt: &MarriageMarket) -> bool {
    (0..mkt.men.len()).any(|m| (0..mkt.women.len()).any(|w| mkt.mutually_acceptable(m, w)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn stable_models_biject_with_enumeration(mkt in arb_market(6, 6)) {
        let (ms, done) = encode_stability(&mkt).all_matchings(10_000);
        prop_assert!(done);
        prop_assert_eq!(&ms, &enumerate_stable(&mkt).unwrap());
        for mu in &ms {
            prop_assert!(is_stable(&mkt, mu).unwrap().0);
        }
    }

    #[test]
    fn gale_shapley_outputs_are_stable(mkt in arb_market(7, 7)) {
        for side in [Side::Men, Side::Women] {
            let (ok, v) = is_stable(&mkt, &gale_shapley(&mkt, side)).unwrap();
            prop_assert!(ok);
            prop_assert!(v.is_empty());
        }
    }

    #[test]
    fn man_optimal_model_is_men_proposing_outcome(mkt in arb_market(6, 6)) {
        let ctx = ManOptimalContext::compute(&mkt).unwrap();
        let (ms, _) = encode_man_optimal(&mkt, &ctx).all_matchings(100);
        prop_assert_eq!(ms, vec![gale_shapley(&mkt, Side::Men)]);
    }

    #[test]
    fn flawed_alternative_accepts_unstable_empty(mkt in arb_market(5, 5)) {
        let fe = encode_flawed_alternative(&mkt);
        prop_assert!(fe.enc.check(&Model::total(vec![false; fe.enc.reg.len()])));
        if has_mutual_pair(&mkt) {
            prop_assert!(!is_stable(&mkt, &Matching::default()).unwrap().0);
        }
    }

    #[test]
    fn no_profitable_misreport(mkt in arb_market(3, 3)) {
        let nw = mkt.women.len();
        for man in 0..mkt.men.len() {
            for len in 0..=nw {
                for lie in (0..nw).permutations(len) {
                    let r = check_manipulation(&mkt, man, &lie).unwrap();
                    prop_assert!(!r.strictly_improves, "{:?}", r);
                    prop_assert!(r.truncation_keeps_partner);
                }
            }
        }
    }
}
