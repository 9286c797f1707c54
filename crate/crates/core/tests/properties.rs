use eigenoptions::env::{normalize_map_text, parse_map, FeatureMap, GridWorld};
use eigenoptions::metrics::{diffusion_time, DiffusionSpec};
use eigenoptions::options::{default_cap, eigenoption, option_trajectory, RolloutEnd};
use eigenoptions::sampled::{collect_exhaustive, verify_incidence_gram};
use eigenoptions::spectral::{build_graph, laplacian, Eigenpurpose, LaplacianKind, PurposeSource, Sign};
use proptest::prelude::*;

/// Keeps the connected component of the first free cell of a random grid.
fn connected_map(h: usize, w: usize, free: &[bool]) -> Option<String> {
    let first = free.iter().position(|&f| f)?;
    let mut keep = vec![false; h * w];
    let mut stack = vec![first];
    keep[first] = true;
    while let Some(i) = stack.pop() {
        let (r, c) = (i / w, i % w);
        let mut near = vec![];
        if r > 0 {
            near.push(i - w);
        }
        if r + 1 < h {
            near.push(i + w);
        }
        if c > 0 {
            near.push(i - 1);
        }
        if c + 1 < w {
            near.push(i + 1);
        }
        for j in near {
            if free[j] && !keep[j] {
                keep[j] = true;
                stack.push(j);
            }
        }
    }
    Some(
        (0..h)
            .map(|r| (0..w).map(|c| if keep[r * w + c] { '.' } else { 'X' }).collect::<String>() + "\n")
            .collect(),
    )
}

fn world() -> impl Strategy<Value = GridWorld> {
    (2usize..7, 2usize..7)
        .prop_flat_map(|(h, w)| (Just(h), Just(w), prop::collection::vec(prop::bool::weighted(0.75), h * w)))
        .prop_filter_map("needs two connected cells", |(h, w, free)| {
            let g = parse_map(&connected_map(h, w, &free)?).ok()?;
            (g.num_states() >= 2).then_some(g)
        })
}

fn purpose(vector: Vec<f64>) -> Eigenpurpose {
    Eigenpurpose {
        vector,
        eigenvalue: 0.0,
        sign: Sign::Positive,
        source: PurposeSource::Laplacian,
        rank: 0,
    }
}

fn world_and_vector() -> impl Strategy<Value = (GridWorld, Vec<f64>)> {
    world().prop_flat_map(|g| {
        let n = g.num_states();
        (Just(g), prop::collection::vec(-1.0f64..1.0, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_round_trips(g in world()) {
        let text = g.render();
        prop_assert_eq!(parse_map(&text).unwrap().render(), normalize_map_text(&text));
        prop_assert!(g.transitions_are_symmetric());
    }

    #[test]
    fn termination_set_nonempty_and_reached((g, v) in world_and_vector(), gamma in 0.05f64..0.995) {
        let e = eigenoption(&g, &purpose(v), FeatureMap::TabularOneHot, gamma).unwrap();
        prop_assert!(!e.option.termination_states().is_empty());
        for s in e.option.initiation_states() {
            let t = option_trajectory(&g, &e.option, s, None, default_cap(&g)).unwrap();
            prop_assert_eq!(t.outcome, RolloutEnd::Terminated);
            prop_assert!(e.option.termination[t.end]);
        }
    }

    #[test]
    fn constant_shift_changes_nothing((g, v) in world_and_vector(), shift in -10.0f64..10.0) {
        let base = eigenoption(&g, &purpose(v.clone()), FeatureMap::TabularOneHot, 0.9).unwrap();
        let moved = eigenoption(&g, &purpose(v.iter().map(|x| x + shift).collect()), FeatureMap::TabularOneHot, 0.9).unwrap();
        for s in 0..g.num_states() {
            for a in 0..5 {
                prop_assert!((base.q.values[s][a] - moved.q.values[s][a]).abs() <= 1e-9);
            }
        }
        prop_assert_eq!(base.option.initiation, moved.option.initiation);
        prop_assert_eq!(base.option.termination, moved.option.termination);
        prop_assert_eq!(base.option.policy, moved.option.policy);
    }

    #[test]
    fn incidence_gram_is_twice_laplacian(g in world()) {
        let t = collect_exhaustive(&g, FeatureMap::TabularOneHot);
        let l = laplacian(&build_graph(&g), LaplacianKind::Combinatorial).unwrap();
        prop_assert!(verify_incidence_gram(&t, &l).unwrap() <= 1e-12);
    }

    #[test]
    fn diffusion_time_positive_and_finite(g in world()) {
        let d = diffusion_time(&DiffusionSpec::primitives_only(&g).unwrap()).unwrap();
        prop_assert!(d.is_finite() && d >= 1.0);
    }
}
