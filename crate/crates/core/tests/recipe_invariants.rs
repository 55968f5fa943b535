use bipotential::conjugate::{convexity_defect, default_convexity_tol};
use bipotential::covers::{cover_union_graph, load_tabulated_cover, quadratic_fan, write_tabulated_cover};
use bipotential::fancheck::FanInstance;
use bipotential::{
    extract_graph, graphs_equal, minimax_verify, synth_table, Cover, GraphTol, Grid1D, LambdaSet,
    ParamSet, SampledFn, StarMode,
};
use proptest::prelude::*;

fn grid(n: usize) -> Grid1D {
    Grid1D::new(-2.0, 2.0, n).unwrap()
}

fn fan(k: usize, n: usize, stars: StarMode) -> Cover {
    let g = grid(n);
    quadratic_fan(ParamSet::geometric(0.25, 4.0, k, LambdaSet::Interval).unwrap(), &g, &g, stars).unwrap()
}

/// Random convex cover: `φ_k(x) = a_k x^2 / 2 + c_k x + d_k` plus `|x - s_k|`.
fn random_cover(seed: u64, k: usize, n: usize) -> Cover {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let g = grid(n);
    let params = ParamSet::new((1..=k).map(|m| m as f64).collect(), LambdaSet::Finite).unwrap();
    let phi = (0..k)
        .map(|_| {
            let (a, c, d, s) = (
                rng.gen_range(0.1..3.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-2.0..2.0),
            );
            SampledFn::from_fn(&g, move |x: f64| a * x * x / 2.0 + c * x + d + (x - s).abs()).unwrap()
        })
        .collect();
    Cover::from_potentials(params, phi, g).unwrap()
}

#[test]
fn tabulated_copy_of_fan_reproduces_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fan.csv");
    let builtin = fan(17, 81, StarMode::Computed);
    write_tabulated_cover(&builtin, &path).unwrap();
    let g = grid(81);
    let loaded = load_tabulated_cover(&path, &g, &g, LambdaSet::Interval).unwrap();
    let (a, b) = (synth_table(&builtin), synth_table(&loaded));
    for i in 0..81 {
        for j in 0..81 {
            assert!((a.get(i, j).to_f64() - b.get(i, j).to_f64()).abs() <= 1e-9);
        }
    }
}

#[test]
fn table_is_bit_deterministic() {
    let c = fan(33, 81, StarMode::ClosedForm);
    assert_eq!(synth_table(&c), synth_table(&c));
}

#[test]
fn graph_of_b_contains_union_within_one_step() {
    for c in [fan(9, 81, StarMode::ClosedForm), fan(9, 81, StarMode::Computed), random_cover(4, 5, 81)] {
        let tol = GraphTol::default();
        let mb = extract_graph(&synth_table(&c), tol).unwrap();
        let u = cover_union_graph(&c, tol).unwrap();
        assert!(u.is_subset(&mb));
        assert!(graphs_equal(&mb, &u, 1).unwrap());
    }
}

#[test]
fn saddle_rows_are_concave_in_z() {
    let c = fan(17, 81, StarMode::ClosedForm);
    let inst = FanInstance::saddle(&c, 20, 60).unwrap();
    for k in 0..c.len() {
        let row: Vec<_> = (0..81)
            .map(|z| bipotential::ExtValue::finite(-inst.get(k, z)))
            .collect();
        let d = convexity_defect(&row);
        assert!(d.passes(default_convexity_tol(&row)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn b_is_below_every_candidate(seed in any::<u64>(), k in 1usize..6) {
        let c = random_cover(seed, k, 41);
        let t = synth_table(&c);
        for i in 0..41 {
            for j in 0..41 {
                for m in 0..k {
                    prop_assert!(t.get(i, j) <= c.f_value(m, i, j));
                }
                prop_assert!(t.gap(i, j) >= -1e-12);
            }
        }
    }

    #[test]
    fn enlarging_the_cover_never_raises_b(seed in any::<u64>(), stride in 2usize..5) {
        let c = random_cover(seed, 7, 41);
        let sub = c.thinned(stride).unwrap();
        let (t, ts) = (synth_table(&c), synth_table(&sub));
        for i in 0..41 {
            for j in 0..41 {
                prop_assert!(t.get(i, j) <= ts.get(i, j));
            }
        }
    }

    #[test]
    fn weak_duality_and_lhs_identity(seed in any::<u64>(), i in 0usize..41, j in 0usize..41) {
        let c = random_cover(seed, 4, 41);
        let r = minimax_verify(&c, i, j, 1e-12).unwrap();
        prop_assert!(r.gap >= 0.0);
        prop_assert_eq!(r.lhs, r.b_value);
        prop_assert!(r.rhs_matches_xbar);
    }
}
