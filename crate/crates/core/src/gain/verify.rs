//! Sampled and exact checks of the one-step dissipation inequality
//! `F_v(Ax + Bw) + ‖Cx + Dw‖² ≤ F_u(x) + γ²‖w‖²`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{HorizonCertificate, QuadraticStorage};
use crate::linalg;
use crate::system::{EdgeSpec, SwitchingSystem};
use crate::{Mat, Vector};

/// A storage candidate.
#[derive(Debug, Clone)]
pub enum Storage {
    /// One matrix per node.
    NodeQuadratic(Vec<Mat>),
    MaxOfQuadratics(QuadraticStorage),
    /// Path-dependent `X_π`, indexed by the next `K` edges.
    Horizon(HorizonCertificate),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DissipationReport {
    pub gamma: f64,
    pub samples: usize,
    pub adversarial: usize,
    /// Largest violation over samples with `‖x‖² + ‖w‖² = 1`.
    pub max_violation: f64,
    /// Label word of the edge (or path) where it occurred.
    pub worst: Vec<usize>,
    /// Largest eigenvalue over all residual blocks, when the storage is a
    /// single quadratic per node (or per path).
    pub exact_residual: Option<f64>,
}

impl DissipationReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.exact_residual.is_none_or(|r| r <= tol)
    }
}

/// `[A B]ᵀ X_next [A B] + [C D]ᵀ[C D] − diag(X_cur, γ²I)`.
fn residual_block(e: &EdgeSpec, next: &Mat, cur: &Mat, gamma: f64) -> Mat {
    let ab = linalg::hstack(&e.a, &e.b);
    let cd = linalg::hstack(&e.c, &e.d);
    let mut m = ab.transpose() * next * &ab + cd.transpose() * &cd;
    let n = e.a.ncols();
    let mut top = m.view_mut((0, 0), (n, n));
    top -= cur;
    for i in n..m.nrows() {
        m[(i, i)] -= gamma * gamma;
    }
    linalg::sym(&m)
}

fn split(e: &EdgeSpec, v: &Vector) -> (Vector, Vector) {
    let n = e.a.ncols();
    (v.rows(0, n).into_owned(), v.rows(n, v.len() - n).into_owned())
}

fn max_quad(ms: &[Mat], x: &Vector) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    ms.iter().map(|g| x.dot(&(g * x))).fold(f64::NEG_INFINITY, f64::max)
}

// violation at (x, w) given evaluators for the current and next storage
fn violation(e: &EdgeSpec, v: &Vector, gamma: f64, cur: &dyn Fn(&Vector) -> f64, next: &dyn Fn(&Vector) -> f64) -> f64 {
    let (x, w) = split(e, v);
    let xn = &e.a * &x + &e.b * &w;
    let z = &e.c * &x + &e.d * &w;
    next(&xn) + z.norm_squared() - cur(&x) - gamma * gamma * w.norm_squared()
}

fn unit_sample(rng: &mut ChaCha8Rng, len: usize) -> Vector {
    let v = Vector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

fn random_walk(sys: &SwitchingSystem, rng: &mut ChaCha8Rng, len: usize) -> Vec<usize> {
    let mut e = rng.gen_range(0..sys.edges().len());
    let mut w = vec![e];
    while w.len() < len {
        e = *sys
            .out_edges(sys.edge(e).to)
            .choose(rng)
            .expect("every node has an out-edge");
        w.push(e);
    }
    w
}

const ADVERSARIAL_PAIRS: usize = 8;

/// Sample random `(x, w, edge)` triples plus adversarial directions (top
/// eigenvectors of residual quadratics) and report the worst violation.
pub fn verify_dissipation(
    sys: &SwitchingSystem,
    storage: &Storage,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> DissipationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    let mut note = |v: f64, word: Vec<usize>| {
        if v > worst.0 {
            worst = (v, word);
        }
    };
    let din = sys.input_dim();
    let mut adversarial = 0;
    let mut exact = None;

    match storage {
        Storage::NodeQuadratic(q) => {
            let mut ex = f64::NEG_INFINITY;
            for e in sys.edges() {
                let m = residual_block(e, &q[e.to], &q[e.from], gamma);
                if let Some((lam, v)) = linalg::top_eigenvector(&m) {
                    ex = ex.max(lam);
                    let val = violation(e, &v, gamma, &|x| max_quad(&q[e.from..=e.from], x), &|x| {
                        max_quad(&q[e.to..=e.to], x)
                    });
                    note(val, vec![e.label]);
                    adversarial += 1;
                }
            }
            exact = Some(ex);
            for _ in 0..samples {
                let e = sys.edge(rng.gen_range(0..sys.edges().len()));
                let v = unit_sample(&mut rng, e.a.ncols() + din);
                let val = violation(e, &v, gamma, &|x| max_quad(&q[e.from..=e.from], x), &|x| {
                    max_quad(&q[e.to..=e.to], x)
                });
                note(val, vec![e.label]);
            }
        }
        Storage::MaxOfQuadratics(st) => {
            let pruned = st.pruned();
            let eval = |node: usize| {
                let ms = &pruned.nodes[node].matrices;
                move |x: &Vector| max_quad(ms, x)
            };
            for e in sys.edges() {
                let (cur, next) = (eval(e.from), eval(e.to));
                let src = &pruned.nodes[e.from].matrices;
                let dst = &pruned.nodes[e.to].matrices;
                for gi in src.iter().take(ADVERSARIAL_PAIRS) {
                    for gj in dst.iter().take(ADVERSARIAL_PAIRS) {
                        if let Some((_, v)) = linalg::top_eigenvector(&residual_block(e, gj, gi, gamma)) {
                            note(violation(e, &v, gamma, &cur, &next), vec![e.label]);
                            adversarial += 1;
                        }
                    }
                }
            }
            for _ in 0..samples {
                let e = sys.edge(rng.gen_range(0..sys.edges().len()));
                let v = unit_sample(&mut rng, e.a.ncols() + din);
                note(violation(e, &v, gamma, &eval(e.from), &eval(e.to)), vec![e.label]);
            }
        }
        Storage::Horizon(cert) => {
            let lookup = cert.lookup();
            let k = cert.horizon;
            let at = |word: &[usize]| -> &Mat {
                let labels: Vec<usize> = word.iter().map(|&e| e + 1).collect();
                &cert.matrices[lookup[&labels]]
            };
            let mut ex = f64::NEG_INFINITY;
            for rho in sys.paths(k + 1, None, None) {
                let w = rho.edges();
                let e = sys.edge(w[0]);
                let m = residual_block(e, at(&w[1..]), at(&w[..k]), gamma);
                if let Some((lam, v)) = linalg::top_eigenvector(&m) {
                    ex = ex.max(lam);
                    let (xc, xn) = (at(&w[..k]), at(&w[1..]));
                    let val = violation(e, &v, gamma, &|x| max_quad(std::slice::from_ref(xc), x), &|x| {
                        max_quad(std::slice::from_ref(xn), x)
                    });
                    note(val, rho.labels());
                    adversarial += 1;
                }
            }
            exact = Some(ex);
            for _ in 0..samples {
                let w = random_walk(sys, &mut rng, k + 1);
                let e = sys.edge(w[0]);
                let v = unit_sample(&mut rng, e.a.ncols() + din);
                let (xc, xn) = (at(&w[..k]), at(&w[1..]));
                let val = violation(e, &v, gamma, &|x| max_quad(std::slice::from_ref(xc), x), &|x| {
                    max_quad(std::slice::from_ref(xn), x)
                });
                note(val, w.iter().map(|&e| e + 1).collect());
            }
        }
    }

    DissipationReport {
        gamma,
        samples,
        adversarial,
        max_violation: worst.0.max(f64::MIN),
        worst: worst.1,
        exact_residual: exact,
    }
}
