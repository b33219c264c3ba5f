use proptest::prelude::*;

use crt_core::distributions::{gem_sticks, sample_ml, AlphaTheta};
use crt_core::growth::{discrete_two_colour, marchal, shape_prob_oracle, two_colour_state, OracleModel};
use crt_core::metrics::{gh_labeled, gh_marked_truncated, prokhorov_finite, ProkhorovMode};
use crt_core::rtree::{export, import, Format};
use crt_core::scalar::Exact;
use crt_core::{stream, DiscreteTree, Rational};

fn random_tree(seed: u64, n: usize) -> DiscreteTree {
    let mut rng = stream(seed, 0);
    let mut tree = discrete_two_colour(1.0 / 3.0, n, &mut rng).unwrap().pop().unwrap();
    for (i, e) in (0..tree.edge_count()).enumerate() {
        tree.edge_mut(e).length = 0.1 + ((seed as usize + 7 * i) % 13) as f64 / 5.0;
    }
    tree
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn two_colour_states_are_well_formed(beta in 0.05f64..0.5, k in 0usize..25, seed in any::<u64>()) {
        let state = two_colour_state(beta, k, &mut stream(seed, 0)).unwrap();
        prop_assert!(state.tree.check().is_ok());
        prop_assert_eq!(state.tree.edge_count(), 3 * k + 1);
        prop_assert!((state.tree.total_mass() - 1.0).abs() < 1e-9);
        for c in &state.components {
            prop_assert!(c.lengths.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            prop_assert!((c.length() - state.tree.component_length(c.id)).abs() < 1e-9 * (1.0 + c.length()));
        }
    }

    #[test]
    fn reduce_keeps_leaf_distances(seed in any::<u64>(), n in 3usize..20) {
        let tree = random_tree(seed, n);
        let keep = [0u32, 1, 2];
        let small = tree.reduce(&keep).unwrap();
        let (big, sub) = (tree.leaf_matrix(), small.leaf_matrix());
        let pos = |t: &DiscreteTree, l: u32| t.leaves().iter().position(|(x, _)| *x == l).unwrap();
        for &a in &keep {
            for &b in &keep {
                prop_assert!((big[pos(&tree, a)][pos(&tree, b)] - sub[pos(&small, a)][pos(&small, b)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn metrics_satisfy_axioms(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let trees = [random_tree(s1, 6), random_tree(s2, 6), random_tree(s3, 6)];
        let d = |i: usize, j: usize| gh_labeled(&trees[i], &trees[j]).unwrap();
        prop_assert!(d(0, 0).abs() < 1e-12);
        prop_assert!((d(0, 1) - d(1, 0)).abs() < 1e-12);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        let t = |i: usize, j: usize| gh_marked_truncated(&trees[i], &trees[j], 4).unwrap().value;
        prop_assert!((t(0, 1) - t(1, 0)).abs() < 1e-12);
        prop_assert!(t(0, 2) <= t(0, 1) + t(1, 2) + 1e-12);
    }

    #[test]
    fn prokhorov_is_bounded_by_one(seed in any::<u64>(), w in proptest::collection::vec(0.01f64..1.0, 14)) {
        let tree = random_tree(seed, 6);
        let dist = tree.leaf_matrix();
        let n = dist.len();
        let norm = |v: &[f64]| { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s).collect::<Vec<_>>() };
        let mu = norm(&w[..n]);
        let nu = norm(&w[w.len() - n..]);
        let p = prokhorov_finite(&mu, &nu, &dist, ProkhorovMode::Exact).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        prop_assert!(prokhorov_finite(&mu, &mu, &dist, ProkhorovMode::Exact).unwrap().abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_keeps_the_tree(seed in any::<u64>(), n in 1usize..15) {
        let tree = random_tree(seed, n);
        let bytes = export(&tree, Format::Json).unwrap();
        let back = import(&bytes, Format::Json).unwrap();
        prop_assert_eq!(back.shape_key(), tree.shape_key());
        let lengths = |t: &DiscreteTree| {
            let mut v: Vec<f64> = t.edges().iter().map(|e| e.length).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        prop_assert_eq!(lengths(&back), lengths(&tree));
        let again = export(&back, Format::Json).unwrap();
        prop_assert_eq!(export(&import(&again, Format::Json).unwrap(), Format::Json).unwrap(), again);
    }

    #[test]
    fn gem_sticks_sum_below_one(alpha in 0.05f64..0.95, theta in 0.0f64..3.0, seed in any::<u64>()) {
        let sticks = gem_sticks(AlphaTheta::new(alpha, theta).unwrap(), 40, &mut stream(seed, 0)).unwrap();
        let total: f64 = sticks.sticks.iter().sum();
        prop_assert!(sticks.sticks.iter().all(|w| *w >= 0.0) && total <= 1.0 + 1e-12);
    }

    #[test]
    fn ml_samples_are_positive(alpha in 0.2f64..0.95, theta in 0.0f64..3.0, seed in any::<u64>()) {
        let x = sample_ml(AlphaTheta::new(alpha, theta).unwrap(), &mut stream(seed, 0)).unwrap();
        prop_assert!(x.is_finite() && x > 0.0);
    }

    #[test]
    fn marchal_trees_grow_one_leaf_per_step(beta in 0.05f64..0.5, n in 1usize..30, seed in any::<u64>()) {
        let trees = marchal(beta, n, &mut stream(seed, 0)).unwrap();
        for (i, t) in trees.iter().enumerate() {
            prop_assert!(t.check().is_ok());
            prop_assert_eq!(t.leaves().len(), i + 1);
        }
    }
}

#[test]
fn oracle_laws_sum_to_one() {
    let r = |a, b| Rational::from_ratio(a, b);
    let models = [
        OracleModel::Marchal { beta: r(1, 3) },
        OracleModel::TwoColour { beta: r(1, 4) },
        OracleModel::AlphaGamma { alpha: r(1, 2), gamma: r(1, 3) },
    ];
    for model in &models {
        for labeled in [true, false] {
            let total = shape_prob_oracle(model, 4, labeled).unwrap().into_values().fold(r(0, 1), |a, p| a + p);
            assert_eq!(total, r(1, 1), "{model:?} labeled={labeled}");
        }
    }
}
