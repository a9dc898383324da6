mod support;

use cpgraph::metrics::{khop_neighbors, metric_report, ncc, ncd, node_counts, Metric};
use cpgraph::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_match_full_bfs(seed: u64, n in 1usize..80, deg in 0.0f64..5.0) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, deg, 0);
        let y = random_labels(&mut r, n, 0.3);
        let table = node_counts(&g, &y, &HOPS, 1).unwrap();
        for (h, &k) in HOPS.iter().enumerate() {
            let oracle = oracle_counts(&g, &y, k);
            for (i, &(pos, reach)) in oracle.iter().enumerate() {
                let c = table.get(i, h);
                prop_assert_eq!((c.positives as usize, c.reach as usize), (pos, reach));
            }
        }
    }

    #[test]
    fn report_matches_oracle(seed: u64, n in 2usize..80, deg in 0.5f64..5.0) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, deg, 0);
        let y = random_labels(&mut r, n, 0.4);
        let expected: Vec<_> = HOPS
            .iter()
            .flat_map(|&k| [0u8, 1].map(|z| (z, k, oracle_average(&g, &y, z, k))))
            .collect();
        match metric_report(&g, &y, &HOPS, 1) {
            Ok(rep) => {
                for (z, k, (avg, counted, excluded)) in expected {
                    let (ancd, ancc) = avg.expect("report succeeded");
                    let a = rep.average(Metric::Ancd, z, k).unwrap();
                    prop_assert_eq!((a.counted, a.excluded_isolated), (counted, excluded));
                    prop_assert!((a.value - ancd).abs() < 1e-12);
                    prop_assert!((rep.value(Metric::Ancc, z, k).unwrap() - ancc).abs() < 1e-12);
                }
            }
            Err(Error::NoEligibleNodes { .. }) => {
                prop_assert!(expected.iter().any(|(_, _, (avg, _, _))| avg.is_none()));
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn pointwise_and_monotone(seed: u64, n in 2usize..60) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 2.0, 0);
        let y = random_labels(&mut r, n, 0.3);
        for i in 0..n {
            let mut prev = khop_neighbors(&g, i, 1).unwrap();
            for k in 1..6 {
                let d = ncd(&g, &y, i, k).unwrap();
                let c = ncc(&g, &y, i, k).unwrap();
                if let Some(d) = d {
                    prop_assert!(c as f64 >= d);
                    prop_assert_eq!(c == 1, d > 0.0);
                }
                let next = khop_neighbors(&g, i, k + 1).unwrap();
                prop_assert!(prev.iter().all(|v| next.contains(v)));
                prev = next;
            }
        }
        if let Ok(rep) = metric_report(&g, &y, &[1, 2, 3, 4, 5, 6], 1) {
            for z in [0, 1] {
                let ancc = rep.ancc.class(z);
                prop_assert!(ancc.windows(2).all(|w| w[0] <= w[1]));
                for (d, c) in rep.ancd.class(z).iter().zip(ancc) {
                    prop_assert!(c >= d);
                }
            }
        }
    }

    #[test]
    fn permutation_equivariance(seed: u64, n in 2usize..60) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 3.0, 2);
        let y = random_labels(&mut r, n, 0.4);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let (pg, py) = permute(&g, &y, &perm);
        let a = metric_report(&g, &y, &HOPS, 1);
        let b = metric_report(&pg, &py, &HOPS, 1);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a.counted, &b.counted);
                prop_assert_eq!(&a.excluded, &b.excluded);
                for (u, v) in a.ancd.negative.iter().chain(&a.ancd.positive).chain(&a.ancc.negative).chain(&a.ancc.positive)
                    .zip(b.ancd.negative.iter().chain(&b.ancd.positive).chain(&b.ancc.negative).chain(&b.ancc.positive))
                {
                    prop_assert!((u - v).abs() < 1e-12);
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => panic!("{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn complement_mirrors_density(seed: u64, n in 4usize..60) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 3.0, 0);
        let y = random_labels(&mut r, n, 0.5);
        if let (Ok(a), Ok(b)) = (metric_report(&g, &y, &HOPS, 1), metric_report(&g, &y.complement(), &HOPS, 1)) {
            for h in 0..HOPS.len() {
                prop_assert!((b.ancd.positive[h] - (1.0 - a.ancd.negative[h])).abs() < 1e-12);
                prop_assert!((b.ancd.negative[h] - (1.0 - a.ancd.positive[h])).abs() < 1e-12);
                prop_assert_eq!(b.counted.positive[h], a.counted.negative[h]);
            }
        }
    }
}

#[test]
fn parallel_reports_are_bitwise_equal() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let n = 300 + 50 * seed as usize;
        let g = random_graph(&mut r, n, 2.5, 0);
        let y = random_labels(&mut r, n, 0.3);
        let base = metric_report(&g, &y, &HOPS, 1).unwrap();
        for workers in [2, 8] {
            let other = metric_report(&g, &y, &HOPS, workers).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&base.ancd.negative), bits(&other.ancd.negative));
            assert_eq!(bits(&base.ancd.positive), bits(&other.ancd.positive));
            assert_eq!(bits(&base.ancc.negative), bits(&other.ancc.negative));
            assert_eq!(bits(&base.ancc.positive), bits(&other.ancc.positive));
            assert_eq!(base, other);
        }
    }
}
