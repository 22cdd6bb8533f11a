//! Random system generators for tests, benchmarks and sampled checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::spectral_norm;
use crate::system::{EdgeSpec, NodeSpec, SwitchingSystem};
use crate::Mat;

#[derive(Debug, Clone)]
pub struct RandomSystemSpec {
    pub nodes: usize,
    /// Node dimensions drawn uniformly from `min_dim..=max_dim`.
    pub min_dim: usize,
    pub max_dim: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Edges added on top of a Hamiltonian cycle.
    pub extra_edges: usize,
    /// Every `A` is rescaled to this spectral norm (`None` keeps raw draws).
    pub a_norm: Option<f64>,
    pub feedthrough: bool,
}

impl Default for RandomSystemSpec {
    fn default() -> Self {
        RandomSystemSpec {
            nodes: 2,
            min_dim: 1,
            max_dim: 3,
            input_dim: 1,
            output_dim: 1,
            extra_edges: 2,
            a_norm: Some(0.8),
            feedthrough: true,
        }
    }
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Strongly connected random rectangular system: a cycle through all nodes
/// plus `extra_edges` random edges (self-loops allowed).
pub fn random_system<R: Rng + ?Sized>(spec: &RandomSystemSpec, rng: &mut R) -> SwitchingSystem {
    let nv = spec.nodes.max(1);
    let dims: Vec<usize> = (0..nv).map(|_| rng.gen_range(spec.min_dim..=spec.max_dim)).collect();
    let nodes: Vec<NodeSpec> = dims
        .iter()
        .enumerate()
        .map(|(i, &dim)| NodeSpec {
            name: format!("v{i}"),
            dim,
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (0..nv).map(|i| (i, (i + 1) % nv)).collect();
    for _ in 0..spec.extra_edges {
        pairs.push((rng.gen_range(0..nv), rng.gen_range(0..nv)));
    }
    let (d, m) = (spec.input_dim, spec.output_dim);
    let edges = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (u, v))| {
            let mut a = gaussian(rng, dims[v], dims[u]);
            if let Some(target) = spec.a_norm {
                let s = spectral_norm(&a);
                if s > 0.0 {
                    a *= target / s;
                }
            }
            let dd = if spec.feedthrough {
                gaussian(rng, m, d) * 0.3
            } else {
                Mat::zeros(m, d)
            };
            EdgeSpec {
                from: u,
                to: v,
                label: i + 1,
                original_label: (i + 1) as u64,
                a,
                b: gaussian(rng, dims[v], d),
                c: gaussian(rng, m, dims[u]),
                d: dd,
            }
        })
        .collect();
    SwitchingSystem::new(nodes, edges, d, m).expect("generator builds valid systems")
}

/// Multiply every `A` by `s`.
pub fn scale_dynamics(sys: &SwitchingSystem, s: f64) -> SwitchingSystem {
    sys.with_matrices(sys.dims(), |e| (&e.a * s, e.b.clone(), e.c.clone(), e.d.clone()))
}

/// Multiply every `B` and `D` by `s`, which scales the input-output map by `s`.
pub fn scale_gain(sys: &SwitchingSystem, s: f64) -> SwitchingSystem {
    sys.with_matrices(sys.dims(), |e| (e.a.clone(), &e.b * s, e.c.clone(), &e.d * s))
}

/// Random orthogonal `n × n` matrix.
pub fn orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    gaussian(rng, n, n).qr().q()
}

/// Inflate every node `v` by `unobservable[v]` states that are driven by
/// the original state but never seen, and `unreachable[v]` states that
/// feed the output but are never excited, then apply a random orthogonal
/// change of basis per node. The input-output map is unchanged.
pub fn embed_nonminimal<R: Rng + ?Sized>(
    sys: &SwitchingSystem,
    unobservable: &[usize],
    unreachable: &[usize],
    rng: &mut R,
) -> SwitchingSystem {
    let n = sys.dims();
    let big: Vec<usize> = (0..n.len()).map(|v| n[v] + unobservable[v] + unreachable[v]).collect();
    let basis: Vec<Mat> = big.iter().map(|&k| orthogonal(rng, k)).collect();
    let d = sys.input_dim();
    let m = sys.output_dim();
    let blocks: Vec<(Mat, Mat, Mat)> = sys
        .edges()
        .iter()
        .map(|e| {
            let (u, v) = (e.from, e.to);
            let (nu, nv) = (n[u], n[v]);
            let (eu, ev) = (unobservable[u], unobservable[v]);
            let (ru, rv) = (unreachable[u], unreachable[v]);
            let mut a = Mat::zeros(big[v], big[u]);
            a.view_mut((0, 0), (nv, nu)).copy_from(&e.a);
            a.view_mut((0, nu + eu), (nv, ru)).copy_from(&gaussian(rng, nv, ru));
            a.view_mut((nv, 0), (ev, nu)).copy_from(&gaussian(rng, ev, nu));
            a.view_mut((nv, nu), (ev, eu)).copy_from(&(gaussian(rng, ev, eu) * 0.5));
            a.view_mut((nv, nu + eu), (ev, ru)).copy_from(&gaussian(rng, ev, ru));
            a.view_mut((nv + ev, nu + eu), (rv, ru))
                .copy_from(&(gaussian(rng, rv, ru) * 0.5));
            let mut b = Mat::zeros(big[v], d);
            b.view_mut((0, 0), (nv, d)).copy_from(&e.b);
            b.view_mut((nv, 0), (ev, d)).copy_from(&gaussian(rng, ev, d));
            let mut c = Mat::zeros(m, big[u]);
            c.view_mut((0, 0), (m, nu)).copy_from(&e.c);
            c.view_mut((0, nu + eu), (m, ru)).copy_from(&gaussian(rng, m, ru));
            (a, b, c)
        })
        .collect();
    sys.with_matrices(big.clone(), |e| {
        let (a, b, c) = &blocks[e.label - 1];
        let (tu, tv) = (&basis[e.from], &basis[e.to]);
        (tv * a * tu.transpose(), tv * b, c * tu.transpose(), e.d.clone())
    })
}
