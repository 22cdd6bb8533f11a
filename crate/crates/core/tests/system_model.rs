use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use switchgain::random::{gaussian, random_system, RandomSystemSpec};
use switchgain::{Mat, Path, SwitchingSystem, Vector};

fn system(seed: u64, nodes: usize, d: usize, m: usize) -> SwitchingSystem {
    let spec = RandomSystemSpec {
        nodes,
        input_dim: d,
        output_dim: m,
        extra_edges: 3,
        ..Default::default()
    };
    random_system(&spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn max_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// step-by-step simulation of x⁺ = Ax + Bw, z = Cx + Dw
fn simulate(sys: &SwitchingSystem, pi: &Path, x0: &Vector, w: &[Vector]) -> (Vector, Vector) {
    let m = sys.output_dim();
    let mut z = Vector::zeros(pi.len() * m);
    let mut x = x0.clone();
    for (t, &ei) in pi.edges().iter().enumerate() {
        let e = sys.edge(ei);
        z.rows_mut(t * m, m).copy_from(&(&e.c * &x + &e.d * &w[t]));
        x = &e.a * &x + &e.b * &w[t];
    }
    (x, z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lifted_operators_reproduce_simulation(seed in 0u64..10_000, k in 1usize..6, pick in 0usize..1000) {
        let sys = system(seed, 3, 2, 2);
        let all: Vec<Path> = sys.paths(k, None, None).collect();
        let pi = &all[pick % all.len()];
        let pm = sys.path_matrices(pi);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let x0 = gaussian(&mut rng, sys.dim(pi.start()), 1).column(0).into_owned();
        let w: Vec<Vector> = (0..k).map(|_| gaussian(&mut rng, 2, 1).column(0).into_owned()).collect();
        let mut wstack = Vector::zeros(2 * k);
        for (t, wt) in w.iter().enumerate() {
            wstack.rows_mut(2 * t, 2).copy_from(wt);
        }
        let (x_end, z) = simulate(&sys, pi, &x0, &w);
        let z_lift = &pm.c * &x0 + &pm.d * &wstack;
        let x_lift = &pm.a * &x0 + &pm.b * &wstack;
        prop_assert!((z - z_lift).amax() < 1e-10);
        prop_assert!((x_end - x_lift).amax() < 1e-10);
    }

    #[test]
    fn transition_composes(seed in 0u64..10_000, k in 2usize..6, split in 1usize..5) {
        let sys = system(seed, 2, 1, 1);
        let pi = sys.paths(k, None, None).last().unwrap();
        let i = split.min(k - 1);
        let head = pi.subpath(1, i).unwrap();
        let tail = pi.subpath(i + 1, k).unwrap();
        let whole = sys.path_matrices(&pi).a;
        let prod = sys.path_matrices(&tail).a * sys.path_matrices(&head).a;
        prop_assert!(max_diff(&whole, &prod) < 1e-12);
    }
}

#[test]
fn feedthrough_blocks_follow_markov_formula() {
    let sys = system(11, 3, 2, 1);
    for pi in sys.paths(4, None, None).step_by(3) {
        let d = sys.path_matrices(&pi).d;
        let (din, dout) = (2, 1);
        for t in 0..4 {
            for s in 0..4 {
                let block = d.view((t * dout, s * din), (dout, din)).into_owned();
                let et = sys.edge(pi.edges()[t]);
                let expected = if s > t {
                    Mat::zeros(dout, din)
                } else if s == t {
                    et.d.clone()
                } else {
                    let mut r = sys.edge(pi.edges()[s]).b.clone();
                    for j in s + 1..t {
                        r = &sys.edge(pi.edges()[j]).a * r;
                    }
                    &et.c * r
                };
                assert!(max_diff(&block, &expected) < 1e-12);
            }
        }
    }
}

#[test]
fn path_counts_match_adjacency_powers() {
    let sys = system(5, 3, 1, 1);
    let nv = sys.nodes().len();
    let mut adj = Mat::zeros(nv, nv);
    for e in sys.edges() {
        adj[(e.from, e.to)] += 1.0;
    }
    let mut power = Mat::identity(nv, nv);
    for k in 1..=6 {
        power = &power * &adj;
        assert_eq!(sys.paths(k, None, None).count() as f64, power.sum());
        for u in 0..nv {
            for v in 0..nv {
                assert_eq!(sys.paths(k, Some(u), Some(v)).count() as f64, power[(u, v)]);
            }
        }
    }
}

#[test]
fn enumeration_is_lexicographic_and_unique() {
    let sys = system(9, 2, 1, 1);
    let words: Vec<Vec<usize>> = sys.paths(5, None, None).map(|p| p.labels()).collect();
    let mut sorted = words.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(words, sorted);
}

#[test]
fn dual_feedthrough_is_block_reversed_transpose() {
    let sys = system(21, 3, 2, 3);
    let dual = sys.dual();
    let (d, m) = (2, 3);
    for pi in sys.paths(3, None, None).take(10) {
        let dp = sys.path_matrices(&pi).d;
        let rev = dual.path(pi.reversed().edges().to_vec()).unwrap();
        let dd = dual.path_matrices(&rev).d;
        let k = pi.len();
        for t in 0..k {
            for s in 0..k {
                let primal = dp.view((t * m, s * d), (m, d)).transpose();
                let mirrored = dd.view(((k - 1 - s) * d, (k - 1 - t) * m), (d, m)).into_owned();
                assert!(max_diff(&primal, &mirrored) < 1e-12);
            }
        }
    }
}

#[test]
fn rectangular_shapes() {
    let sys = system(3, 3, 2, 1);
    for pi in sys.paths(3, None, None) {
        let pm = sys.path_matrices(&pi);
        let (n0, nk) = (sys.dim(pi.start()), sys.dim(pi.end()));
        assert_eq!(pm.a.shape(), (nk, n0));
        assert_eq!(pm.b.shape(), (nk, 6));
        assert_eq!(pm.c.shape(), (3, n0));
        assert_eq!(pm.d.shape(), (3, 6));
    }
}
