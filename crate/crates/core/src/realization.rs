//! Unobservable / reachable subspaces and minimal rectangular realizations.
//!
//! The unobservable subspace at node `v` is the set of states producing a
//! zero output along every path leaving `v`. It is the limit of
//!
//! ```text
//! X_{v,1} = Σ C_σᵀ C_σ,   X_{v,k+1} = Σ A_σᵀ X_{u,k} A_σ,   𝒞_{v,k} = ker Σ_{t≤k} X_{v,t}
//! ```
//!
//! (sums over edges `(v, u, σ)`). Because a kernel of a sum of PSD terms is
//! the intersection of the kernels, each term can be rescaled freely; the
//! iteration below keeps the terms well scaled by replacing the accumulated
//! `Σ_t X_{u,t}` with the orthogonal projector onto its range and dividing
//! every stacked block by its norm. Kernels are decided by SVD of the
//! stacked factor rather than of the squared sum.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, rank_decision, spectral_norm, subspace_distance};
use crate::system::SwitchingSystem;
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceKind {
    Unobservable,
    Reachable,
}

/// One orthonormal basis per node.
#[derive(Debug, Clone)]
pub struct SubspaceFamily {
    pub kind: SubspaceKind,
    pub bases: Vec<Mat>,
    /// Sweeps performed before the subspaces stabilized.
    pub sweeps: usize,
    /// Some singular value fell within a factor 10 of the rank threshold.
    pub ambiguous: bool,
}

impl SubspaceFamily {
    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }
}

fn stack(blocks: &[Mat], cols: usize) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), b.shape()).copy_from(b);
        r += b.nrows();
    }
    out
}

fn normalized(m: Mat) -> Option<Mat> {
    let s = spectral_norm(&m);
    (s > 0.0).then(|| m / s)
}

/// Unobservable subspaces `𝒞_v`. `tol = None` uses the default
/// `sqrt(eps)·σ_max` threshold of each stacked factor.
pub fn unobservable_subspaces(sys: &SwitchingSystem, tol: Option<f64>) -> SubspaceFamily {
    let nv = sys.nodes().len();
    let cap = sys.total_dim().max(1);
    let dist_tol = tol.unwrap_or(0.0).max(1e-9);
    let mut ambiguous = false;
    // complement bases Q_u of the current 𝒞_{u,k}
    let mut current: Vec<Mat> = Vec::new();
    let mut sweeps = 0;
    for k in 1..=cap {
        sweeps = k;
        let mut next = Vec::with_capacity(nv);
        for v in 0..nv {
            let n = sys.dim(v);
            let mut blocks = Vec::new();
            for &ei in sys.out_edges(v) {
                let e = sys.edge(ei);
                blocks.extend(normalized(e.c.clone()));
                if k > 1 {
                    let q = linalg::orth_complement(&current[e.to], sys.dim(e.to));
                    blocks.extend(normalized(q.transpose() * &e.a));
                }
            }
            let rd = rank_decision(&stack(&blocks, n), tol);
            ambiguous |= rd.ambiguous;
            next.push(rd.kernel);
        }
        let stable = k > 1
            && next
                .iter()
                .zip(&current)
                .all(|(a, b)| subspace_distance(a, b) < dist_tol);
        current = next;
        if stable {
            break;
        }
    }
    SubspaceFamily {
        kind: SubspaceKind::Unobservable,
        bases: current,
        sweeps,
        ambiguous,
    }
}

/// Reachable subspaces `ℬ_v`, from the unobservable subspaces of the dual
/// system (`ℬ_v^⊥ = ⋂ ker B_πᵀ`).
pub fn reachable_subspaces(sys: &SwitchingSystem, tol: Option<f64>) -> SubspaceFamily {
    let dual = unobservable_subspaces(&sys.dual(), tol);
    let bases = dual
        .bases
        .iter()
        .enumerate()
        .map(|(v, perp)| linalg::orth_complement(perp, sys.dim(v)))
        .collect();
    SubspaceFamily {
        kind: SubspaceKind::Reachable,
        bases,
        sweeps: dual.sweeps,
        ambiguous: dual.ambiguous,
    }
}

// (L_vᵀ A L_u, L_vᵀ B, C L_u, D) for orthonormal per-node bases L.
fn restrict(sys: &SwitchingSystem, bases: &[Mat]) -> SwitchingSystem {
    let dims = bases.iter().map(|b| b.ncols()).collect();
    sys.with_matrices(dims, |e| {
        let (lu, lv) = (&bases[e.from], &bases[e.to]);
        (
            lv.transpose() * &e.a * lu,
            lv.transpose() * &e.b,
            &e.c * lu,
            e.d.clone(),
        )
    })
}

/// Restrict every node to its reachable subspace.
pub fn restrict_to_reachable(sys: &SwitchingSystem, family: &SubspaceFamily) -> SwitchingSystem {
    assert_eq!(family.kind, SubspaceKind::Reachable);
    restrict(sys, &family.bases)
}

/// Project every node onto the orthogonal complement of its unobservable
/// subspace.
pub fn restrict_to_observable(sys: &SwitchingSystem, family: &SubspaceFamily) -> SwitchingSystem {
    assert_eq!(family.kind, SubspaceKind::Unobservable);
    let bases: Vec<Mat> = family
        .bases
        .iter()
        .enumerate()
        .map(|(v, c)| linalg::orth_complement(c, sys.dim(v)))
        .collect();
    restrict(sys, &bases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationReport {
    pub node_names: Vec<String>,
    pub initial_dims: Vec<usize>,
    /// Node dimensions after each reach-then-observe iteration.
    pub iterations: Vec<Vec<usize>>,
    pub final_dims: Vec<usize>,
    /// Nodes whose dimension reached 0.
    pub zero_dim_nodes: Vec<String>,
    /// A rank decision was numerically close to the threshold.
    pub ambiguous_rank: bool,
}

/// Alternate reachable and observable restrictions until node dimensions
/// stop changing (at most `Σ n_v` iterations).
pub fn minimize(sys: &SwitchingSystem, tol: Option<f64>) -> (SwitchingSystem, MinimizationReport) {
    let initial = sys.dims();
    let cap = sys.total_dim().max(1);
    let mut current = sys.clone();
    let mut iterations = Vec::new();
    let mut ambiguous = false;
    for _ in 0..cap {
        let before = current.dims();
        let reach = reachable_subspaces(&current, tol);
        let reduced = restrict_to_reachable(&current, &reach);
        let unobs = unobservable_subspaces(&reduced, tol);
        current = restrict_to_observable(&reduced, &unobs);
        ambiguous |= reach.ambiguous || unobs.ambiguous;
        let after = current.dims();
        iterations.push(after.clone());
        if after == before {
            break;
        }
    }
    let final_dims = current.dims();
    let report = MinimizationReport {
        node_names: sys.nodes().iter().map(|n| n.name.clone()).collect(),
        initial_dims: initial,
        iterations,
        zero_dim_nodes: sys
            .nodes()
            .iter()
            .zip(&final_dims)
            .filter(|(_, &d)| d == 0)
            .map(|(n, _)| n.name.clone())
            .collect(),
        final_dims,
        ambiguous_rank: ambiguous,
    };
    (current, report)
}

/// `ℬ_v = ℝ^{n_v}` and `𝒞_v = {0}` at every node.
pub fn is_minimal(sys: &SwitchingSystem, tol: Option<f64>) -> bool {
    let reach = reachable_subspaces(sys, tol);
    let unobs = unobservable_subspaces(sys, tol);
    reach.dims() == sys.dims() && unobs.dims().iter().all(|&d| d == 0)
}
