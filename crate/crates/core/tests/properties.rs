use proptest::prelude::*;

use coclust::model::densify;
use coclust::report::{export_json, import_json, mutual_information_matrix};
use coclust::synthetic::random_mixed;
use coclust::{verify_counts, CoclusterModel, Criterion, CriterionOptions, Dataset, PartitionSet};

fn arb_model() -> impl Strategy<Value = (Dataset, CoclusterModel)> {
    (0u64..10_000, 1usize..14, 1usize..4, 1usize..7, 1usize..5, any::<u64>()).prop_map(
        |(seed, instances, vars, distinct, p, labels)| {
            let data = random_mixed(seed, instances, vars, distinct);
            let parts = PartitionSet::equal_frequency(&data, p).unwrap();
            let g_u = 1 + (labels % 4) as usize;
            let g_p = 1 + (labels / 4 % 4) as usize;
            let inst: Vec<usize> = (0..instances).map(|i| (i * 7 + (labels as usize >> 4)) % g_u).collect();
            let part: Vec<usize> = (0..parts.n_parts()).map(|j| (j * 5 + (labels as usize >> 8)) % g_p).collect();
            let model = CoclusterModel::build(&data, parts, densify(&inst), densify(&part)).unwrap();
            (data, model)
        },
    )
}

fn crit(m: &CoclusterModel) -> Criterion {
    Criterion::for_model(m, CriterionOptions::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn total_is_prior_plus_likelihood((_, m) in arb_model()) {
        let v = crit(&m).evaluate(&m);
        prop_assert!((v.total - (v.prior + v.likelihood)).abs() <= 1e-9 * v.total.abs().max(1.0));
        let summed: f64 = v.terms.iter().map(|t| t.value).sum();
        prop_assert!((v.total - summed).abs() <= 1e-9 * v.total.abs().max(1.0));
    }

    #[test]
    fn relabeling_clusters_keeps_every_bit((_, m) in arb_model(), shift in 0usize..4) {
        let g_u = m.n_instance_clusters();
        let g_p = m.n_part_clusters();
        let rows: Vec<usize> = (0..g_u).map(|r| (r + shift) % g_u).collect();
        let cols: Vec<usize> = (0..g_p).map(|c| (c + shift) % g_p).collect();
        let relabeled = m.regroup(&rows, &cols).unwrap();
        let c = crit(&m);
        prop_assert_eq!(c.total(&m).to_bits(), c.total(&relabeled).to_bits());
    }

    #[test]
    fn every_delta_matches_recompute((_, m) in arb_model()) {
        let c = crit(&m);
        let before = c.total(&m);
        for mv in m.candidate_moves() {
            let d = c.delta(&m, &mv).unwrap();
            let after = c.total(&m.with_move(&mv).unwrap());
            prop_assert!((d - (after - before)).abs() <= 1e-9 * (after - before).abs().max(1.0), "{}", mv);
        }
    }

    #[test]
    fn deltas_along_a_path_add_up((_, m) in arb_model(), picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let c = crit(&m);
        let start = c.total(&m);
        let mut cur = m.clone();
        let mut summed = 0.0;
        for pick in picks {
            let moves = cur.candidate_moves();
            if moves.is_empty() {
                break;
            }
            let mv = moves[pick.index(moves.len())];
            summed += c.delta(&cur, &mv).unwrap();
            cur.apply_move(&mv).unwrap();
        }
        let end = c.total(&cur);
        prop_assert!(((end - start) - summed).abs() <= 1e-9 * start.abs().max(1.0));
    }

    #[test]
    fn applied_moves_match_rebuild((data, m) in arb_model(), pick in any::<prop::sample::Index>()) {
        let moves = m.candidate_moves();
        prop_assume!(!moves.is_empty());
        let mv = moves[pick.index(moves.len())];
        let moved = m.with_move(&mv).unwrap();
        prop_assert!(verify_counts(&moved, &data).is_ok());
    }

    #[test]
    fn mutual_information_is_non_negative((_, m) in arb_model()) {
        let mi = mutual_information_matrix(&m);
        prop_assert!(mi.total() >= -1e-12);
        for (r, row) in mi.empty.iter().enumerate() {
            for (c, &e) in row.iter().enumerate() {
                prop_assert_eq!(e, m.cell(r, c) == 0);
                if e {
                    prop_assert_eq!(mi.values[r][c], 0.0);
                }
            }
        }
    }

    #[test]
    fn document_round_trip_is_exact((data, m) in arb_model()) {
        let text = export_json(&m, data.schema(), data.instances(), CriterionOptions::default());
        let back = import_json(&text).unwrap();
        prop_assert_eq!(&back.model, &m);
        prop_assert!(back.first_divergent_term().is_none());
        prop_assert!(verify_counts(&back.model, &data).is_ok());
    }
}
