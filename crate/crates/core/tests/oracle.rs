use bondmix::lattice::{
    ball_sites, evaluate_energy, make_field, BondScope, BoxWindow, FieldKind, HalfSpaceTrace, InteractionSet, Site,
    Strength,
};
use bondmix::mincut::{brute_force_ground_state, build_instance, solve_min_cut};
use proptest::prelude::*;

fn int(n: i64) -> Strength {
    Strength::from_integer(n)
}

#[test]
fn small_ball_matches_enumeration() {
    let set = InteractionSet::nearest_neighbor(2, int(1), int(3)).unwrap();
    let field = make_field(FieldKind::HomogeneousAlpha, &set, 1).unwrap();
    let center = [0.0, 0.0, 0.0];
    let region = ball_sites(2, &center, 2.0);
    let trace = HalfSpaceTrace::oriented(center, [0.0, 1.0, 0.0]);
    let fast = solve_min_cut(&build_instance(&field, &region, &trace, BondScope::Touching).unwrap()).unwrap();
    let slow = brute_force_ground_state(&field, &region, &trace, BondScope::Touching).unwrap();
    assert_eq!(fast.value, slow.value);
}

#[test]
fn returned_state_realizes_the_value() {
    let set = InteractionSet::nn_diagonal(int(1), int(2)).unwrap();
    let field = make_field(FieldKind::Random { fractions: vec![0.5, 0.25, 0.75, 0.5], seed: 9 }, &set, 3).unwrap();
    let window = BoxWindow::new(2, [0, 0, 0], [4, 4, 1]);
    let region: Vec<Site> = window.sites().collect();
    let trace = HalfSpaceTrace::oriented([1.5, 1.5, 0.0], [0.6, 0.8, 0.0]);
    let res = solve_min_cut(&build_instance(&field, &region, &trace, BondScope::Touching).unwrap()).unwrap();
    let state = res.state.expect("solver reports the configuration");
    let energy = evaluate_energy(&field, &state, &trace, &region, BondScope::Touching).unwrap();
    assert_eq!(energy, res.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn min_cut_equals_enumeration(
        seed in any::<u64>(),
        diag in any::<bool>(),
        period in 1usize..4,
        w in 1i64..5,
        h in 1i64..4,
        angle in 0.0f64..std::f64::consts::TAU,
        based in any::<bool>(),
    ) {
        let set = if diag {
            InteractionSet::nn_diagonal(int(2), int(5)).unwrap()
        } else {
            InteractionSet::nearest_neighbor(2, int(1), int(4)).unwrap()
        };
        let fractions = vec![0.5; set.len()];
        let field = make_field(FieldKind::Random { fractions, seed }, &set, period).unwrap();
        let region: Vec<Site> = BoxWindow::new(2, [0, 0, 0], [w, h, 1]).sites().collect();
        let trace = HalfSpaceTrace::oriented([w as f64 / 2.0, h as f64 / 2.0, 0.0], [angle.cos(), angle.sin(), 0.0]);
        let scope = if based { BondScope::Based } else { BondScope::Touching };
        let fast = solve_min_cut(&build_instance(&field, &region, &trace, scope).unwrap()).unwrap();
        let slow = brute_force_ground_state(&field, &region, &trace, scope).unwrap();
        prop_assert_eq!(fast.value, slow.value);
    }
}
