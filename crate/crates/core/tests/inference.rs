use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snbi_core::bayes::{Assignment, BayesError, BayesNet};
use snbi_core::sim::random_net;

/// P(query | evidence) by summing the full joint over every completion.
fn enumerate(net: &BayesNet, evidence: &Assignment, query: usize) -> Option<Vec<f64>> {
    let cards: Vec<usize> = net.variables().iter().map(|v| v.card()).collect();
    let mut post = vec![0.0; cards[query]];
    let mut a = vec![0usize; cards.len()];
    'outer: loop {
        let consistent = evidence.iter().zip(&a).all(|(e, s)| e.is_none_or(|e| e == *s));
        if consistent {
            let mut p = 1.0;
            for (v, &s) in a.iter().enumerate() {
                let parents = net.structure().parents(v);
                let row = parents.iter().fold(0, |acc, &u| acc * cards[u] + a[u]);
                p *= net.table(v)[row * cards[v] + s];
            }
            post[a[query]] += p;
        }
        for i in (0..a.len()).rev() {
            a[i] += 1;
            if a[i] < cards[i] {
                continue 'outer;
            }
            a[i] = 0;
        }
        break;
    }
    let z: f64 = post.iter().sum();
    (z > 0.0).then(|| post.into_iter().map(|p| p / z).collect())
}

fn random_query(net: &BayesNet, rng: &mut ChaCha8Rng) -> (Assignment, usize) {
    let n = net.variables().len();
    let query = rng.gen_range(0..n);
    let evidence = (0..n)
        .map(|v| {
            (v != query && rng.gen_bool(0.4)).then(|| rng.gen_range(0..net.variables()[v].card()))
        })
        .collect();
    (evidence, query)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn elimination_matches_enumeration_on_random_nets() {
    let mut worst = 0.0f64;
    for seed in 0..40 {
        let net = random_net(seed, 8, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        for _ in 0..40 {
            let (e, q) = random_query(&net, &mut rng);
            let expected = enumerate(&net, &e, q).expect("positive tables");
            let got = net.posterior(&e, q).unwrap();
            worst = worst.max(max_diff(&got, &expected));
        }
    }
    assert!(worst < 1e-9, "max deviation {worst}");
}

#[test]
fn order_does_not_change_the_posterior() {
    for seed in 0..20 {
        let net = random_net(seed, 8, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, q) = random_query(&net, &mut rng);
        let reference = net.posterior(&e, q).unwrap();
        let mut hidden: Vec<usize> = (0..e.len()).filter(|&v| v != q && e[v].is_none()).collect();
        for _ in 0..5 {
            use rand::seq::SliceRandom;
            hidden.shuffle(&mut rng);
            let got = net.posterior_with_order(&e, q, &hidden).unwrap();
            assert!(max_diff(&got, &reference) < 1e-12);
        }
        if !hidden.is_empty() {
            let short = &hidden[1..];
            assert!(net.posterior_with_order(&e, q, short).is_err());
        }
    }
}

#[test]
fn impossible_evidence_is_reported() {
    let net: BayesNet = serde_json::from_str(
        r#"{"variables":[{"name":"a","states":["x","y"]},{"name":"b","states":["u","v"]}],
            "cpts":[{"child":"a","parents":[],"table":[1.0,0.0]},
                    {"child":"b","parents":["a"],"table":[0.5,0.5,0.2,0.8]}]}"#,
    )
    .unwrap();
    assert_eq!(
        net.infer_posterior(&[("a", "y")], "b"),
        Err(BayesError::ZeroEvidence)
    );
    let post = net.infer_posterior(&[("b", "v")], "a").unwrap();
    assert_eq!(post, vec![1.0, 0.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn posteriors_are_distributions(seed in 0u64..10_000, qseed in 0u64..10_000) {
        let net = random_net(seed, 6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        let (e, q) = random_query(&net, &mut rng);
        let post = net.posterior(&e, q).unwrap();
        prop_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(post.iter().all(|p| (0.0..=1.0).contains(p)));
        let expected = enumerate(&net, &e, q).unwrap();
        prop_assert!(max_diff(&post, &expected) < 1e-9);
    }
}
