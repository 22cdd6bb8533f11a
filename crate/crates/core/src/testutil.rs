use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::random::{gaussian, random_system, RandomSystemSpec};
use crate::system::{EdgeSpec, Mode, NodeSpec, SwitchingSystem};
use crate::Mat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn scalar_lti(a: f64, b: f64, c: f64, d: f64) -> SwitchingSystem {
    let m = |x: f64| Mat::from_element(1, 1, x);
    SwitchingSystem::new(
        vec![NodeSpec {
            name: "a".into(),
            dim: 1,
        }],
        vec![EdgeSpec {
            from: 0,
            to: 0,
            label: 1,
            original_label: 1,
            a: m(a),
            b: m(b),
            c: m(c),
            d: m(d),
        }],
        1,
        1,
    )
    .unwrap()
}

pub fn rand_mode(n: usize, d: usize, m: usize, seed: u64) -> Mode {
    let mut r = rng(seed);
    Mode {
        a: gaussian(&mut r, n, n),
        b: gaussian(&mut r, n, d),
        c: gaussian(&mut r, m, n),
        d: gaussian(&mut r, m, d),
    }
}

/// Random 2-node system with dims in 1..=3.
pub fn two_node_system(seed: u64) -> SwitchingSystem {
    let spec = RandomSystemSpec {
        nodes: 2,
        input_dim: 2,
        output_dim: 1,
        ..Default::default()
    };
    random_system(&spec, &mut rng(seed))
}
