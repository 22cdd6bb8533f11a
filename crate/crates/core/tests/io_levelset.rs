use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use switchgain::example::{pendulum, PendulumParams};
use switchgain::gain::{lower_bound, truncated_storage, PNorm};
use switchgain::io::{load_system, parse_system, save_system, system_to_json};
use switchgain::levelset::{emit_level_sets, is_convex_polygon};
use switchgain::random::{random_system, RandomSystemSpec};
use switchgain::realization::minimize;
use switchgain::Vector;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn json_round_trip_is_bit_exact(seed in 0u64..1_000_000, nodes in 1usize..4, io in 1usize..3) {
        let spec = RandomSystemSpec {
            nodes,
            min_dim: 0,
            max_dim: 3,
            input_dim: io,
            output_dim: 3 - io,
            extra_edges: 2,
            a_norm: None,
            feedthrough: true,
        };
        let sys = random_system(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = parse_system(&system_to_json(&sys)).unwrap();
        prop_assert_eq!(back.dims(), sys.dims());
        prop_assert_eq!(back.edges().len(), sys.edges().len());
        for (e, f) in sys.edges().iter().zip(back.edges()) {
            prop_assert_eq!((e.from, e.to, e.original_label), (f.from, f.to, f.original_label));
            prop_assert_eq!(&e.a, &f.a);
            prop_assert_eq!(&e.b, &f.b);
            prop_assert_eq!(&e.c, &f.c);
            prop_assert_eq!(&e.d, &f.d);
        }
    }
}

#[test]
fn malformed_files_are_rejected() {
    let bad = [
        "{}",
        r#"{"input_dim":1,"output_dim":1,"nodes":[{"name":"a","dim":1}],"edges":[]}"#,
        r#"{"input_dim":1,"output_dim":1,"nodes":[{"name":"a","dim":1}],
            "edges":[{"from":"a","to":"a","A":[[0.5]],"B":[[1,2]],"C":[[1]],"D":[[0]]}]}"#,
        r#"{"input_dim":1,"output_dim":1,"nodes":[{"name":"a","dim":1}],
            "edges":[{"from":"a","to":"z","A":[[0.5]],"B":[[1]],"C":[[1]],"D":[[0]]}]}"#,
        r#"{"input_dim":1,"output_dim":1,"extra":0,"nodes":[{"name":"a","dim":1}],
            "edges":[{"from":"a","to":"a","A":[[0.5]],"B":[[1]],"C":[[1]],"D":[[0]]}]}"#,
    ];
    for text in bad {
        assert!(parse_system(text).is_err(), "{text}");
    }
}

#[test]
fn pendulum_file_round_trip() {
    let sys = pendulum(&PendulumParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pendulum.json");
    save_system(&sys, &p).unwrap();
    let back = load_system(&p).unwrap();
    for k in 1..=4 {
        let a = lower_bound(&sys, k, PNorm::Two).unwrap().value;
        let b = lower_bound(&back, k, PNorm::Two).unwrap().value;
        assert_eq!(a, b);
    }
}

#[test]
fn pendulum_level_sets_are_convex_unit_curves() {
    let (sys, _) = minimize(&pendulum(&PendulumParams::default()).unwrap(), None);
    let b = sys.node_index("b").unwrap();
    let gamma = 1.5 * lower_bound(&sys, 4, PNorm::Two).unwrap().value;
    let st = truncated_storage(&sys, gamma, 4).unwrap().pruned();
    let ls = emit_level_sets(&st, b, 256).unwrap();
    assert_eq!(ls.dim, sys.dim(b));
    assert!(!ls.sections.is_empty());
    for s in &ls.sections {
        assert_eq!(s.points.len(), 257);
        assert_eq!(s.points[0], s.points[256]);
        assert!(is_convex_polygon(&s.planar(), 1e-9));
        for p in &s.points {
            let f = st.evaluate(b, &Vector::from_vec(p.clone()));
            assert!((f - 1.0).abs() <= 1e-6, "{f}");
        }
    }
    let csv = ls.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 1 + 257 * ls.sections.len());
}
