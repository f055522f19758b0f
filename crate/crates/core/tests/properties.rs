mod common;

use common::*;
use geomoea::adversary;
use geomoea::domain::{load_domain, DatasetSpec, Domain, Location};
use geomoea::grid::{binary_partition, partition_levels};
use geomoea::mechanism::{
    build_matrix, verify_all_cross_pls, verify_dp_within_pls, verify_geo_indistinguishability, verify_row_stochastic,
};
use geomoea::moea::{dominates, fast_nondominated_sort, hypervolume};
use geomoea::pls::{ret_c, PrivacyConfig};
use geomoea::rng;
use proptest::prelude::*;

fn small_case() -> impl Strategy<Value = (Domain, geomoea::pls::PlsPartition)> {
    (2usize..=12, any::<u64>()).prop_map(|(n, seed)| {
        let mut r = rng::stream(seed, &[]);
        let d = random_domain(n, &mut r);
        let p = random_partition(&d, &mut r);
        (d, p)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn within_pls_ratio_bounded_by_own_budget((d, p) in small_case()) {
        let m = build_matrix(&p, &d).unwrap();
        for (pls, range) in p.plss.iter().zip(&p.reporting_ranges) {
            let bound = pls.epsilon.exp() * (1.0 + 1e-9);
            for &x in &pls.members {
                for &y in &pls.members {
                    for &o in range {
                        let ratio = m.row(x).prob(o) / m.row(y).prob(o);
                        prop_assert!(ratio <= bound, "ratio {} > {}", ratio, bound);
                    }
                }
            }
        }
        let eps0 = p.plss.iter().map(|q| q.epsilon).fold(0.0, f64::max);
        prop_assert!(verify_dp_within_pls(&m, &p, &d, eps0).pass);
    }

    #[test]
    fn verifiers_pass_on_mechanism_output((d, p) in small_case()) {
        let m = build_matrix(&p, &d).unwrap();
        let eps0 = p.plss.iter().map(|q| q.epsilon).fold(0.0, f64::max);
        prop_assert!(verify_row_stochastic(&m, &d).pass);
        prop_assert!(verify_geo_indistinguishability(&m, &p, &d).pass);
        for c in verify_all_cross_pls(&m, &p, &d, eps0) {
            prop_assert!(c.pass, "pair ({}, {}): {} > {}", c.i, c.j, c.observed_max, c.bound);
        }
    }

    #[test]
    fn expected_error_at_least_its_floor((d, p) in small_case()) {
        let m = build_matrix(&p, &d).unwrap();
        let e = adversary::evaluate(&d, &m);
        prop_assert!(e.exp_err + 1e-12 >= e.min_conditional_error);
        prop_assert!(e.qloss >= 0.0);
    }

    #[test]
    fn quality_loss_non_increasing_in_rate(seed in any::<u64>()) {
        let mut r = rng::stream(seed, &[]);
        let (d, x, _) = ring_domain(&mut r);
        let mut prev = f64::INFINITY;
        for step in 1..=50 {
            let rate = step as f64 / 10.0;
            let l = ring_quality_loss(&d, x, rate);
            prop_assert!(l <= prev + 1e-12, "L({}) = {} > {}", rate, l, prev);
            prev = l;
        }
    }

    #[test]
    fn cell_counts_balanced(n in 2usize..700, n0 in 2usize..60, seed in any::<u64>()) {
        prop_assume!(n >= n0);
        let mut r = rng::stream(seed, &[]);
        let locs: Vec<Location> = (0..n as u32)
            .map(|id| Location { id, x: rand::Rng::gen_range(&mut r, 0.0..8.0), y: rand::Rng::gen_range(&mut r, 0.0..5.0) })
            .collect();
        let d = Domain::with_uniform_prior(locs).unwrap();
        let t = binary_partition(&d, n0).unwrap();
        let levels = partition_levels(n, n0);
        prop_assert_eq!(t.cells.len(), 1 << levels);
        let lo = n >> levels;
        let hi = n.div_ceil(1 << levels);
        let mut seen = vec![false; n];
        for c in &t.cells {
            prop_assert!(c.members.len() >= lo && c.members.len() <= hi);
            // Always at least n0 and at most 2 n0; strictly below 2 n0 unless
            // n / 2^L falls strictly between 2 n0 - 1 and 2 n0.
            prop_assert!(c.members.len() >= n0 && c.members.len() <= 2 * n0);
            for &m in &c.members {
                prop_assert!(!seen[m]);
                seen[m] = true;
                let l = d.location(m);
                prop_assert!(c.bounds.contains(l.x, l.y));
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        if n % (1 << levels) == 0 || n < ((2 * n0 - 1) << levels) {
            prop_assert!(t.cells.iter().all(|c| c.members.len() < 2 * n0));
        }
    }

    #[test]
    fn first_front_mutually_nondominated(pts in prop::collection::vec((0.0f64..5.0, -5.0f64..0.0), 1..50)) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
        let fronts = fast_nondominated_sort(&pts);
        prop_assert_eq!(fronts.iter().map(Vec::len).sum::<usize>(), pts.len());
        for f in &fronts {
            for &a in f {
                for &b in f {
                    prop_assert!(!dominates(&pts[a], &pts[b]));
                }
            }
        }
        for w in fronts.windows(2) {
            for &b in &w[1] {
                prop_assert!(w[0].iter().any(|&a| dominates(&pts[a], &pts[b])));
            }
        }
    }

    #[test]
    fn hypervolume_monotone_under_insertion(
        pts in prop::collection::vec((0.0f64..5.0, -5.0f64..0.0), 1..30),
        extra in (0.0f64..5.0, -5.0f64..0.0),
    ) {
        let r = [6.0, 1.0];
        let mut pts: Vec<[f64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
        let before = hypervolume(&pts, r).unwrap();
        pts.push([extra.0, extra.1]);
        prop_assert!(hypervolume(&pts, r).unwrap() >= before);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn randomized_partitions_of_benchmark_pass_all_checks(seed in any::<u64>(), eps0 in 0.5f64..1.5, em in 0.1f64..0.2) {
        let d = load_domain(&DatasetSpec::benchmark_400(seed % 7)).unwrap();
        let t = binary_partition(&d, 33).unwrap();
        let cfg = PrivacyConfig::new(eps0, em);
        let p = ret_c(&t, &d, &cfg, &mut rng::stream(seed, &[])).unwrap();
        p.validate(&d, &cfg, Some(&t), true).unwrap();
        let m = build_matrix(&p, &d).unwrap();
        prop_assert!(verify_dp_within_pls(&m, &p, &d, eps0).pass);
        prop_assert!(verify_row_stochastic(&m, &d).pass);
        prop_assert!(verify_geo_indistinguishability(&m, &p, &d).pass);
        prop_assert!(adversary::min_conditional_error(&d, &m) >= em - 1e-9);
    }
}
