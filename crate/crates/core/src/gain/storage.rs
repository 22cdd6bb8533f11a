//! Path storage matrices `G_{π,γ}`, their dynamic-programming realization
//! and the truncated max-of-quadratics storage.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::linalg;
use crate::system::{Path, SwitchingSystem};
use crate::{Mat, Vector};

/// `G = C_πᵀC_π + C_πᵀD_π(γ²I − D_πᵀD_π)⁻¹D_πᵀC_π`, the value of
/// `sup_w ‖C_π x + D_π w‖² − γ²‖w‖²` as a quadratic form in `x`.
pub fn storage_matrix_direct(sys: &SwitchingSystem, pi: &Path, gamma: f64) -> Result<Mat> {
    let pm = sys.path_matrices(pi);
    let too_small = || Error::GammaTooSmall {
        gamma,
        d_norm: linalg::spectral_norm(&pm.d),
        path: pi.labels(),
    };
    let cc = pm.c.transpose() * &pm.c;
    if pm.d.ncols() == 0 {
        return Ok(cc);
    }
    if gamma <= linalg::spectral_norm(&pm.d) {
        return Err(too_small());
    }
    let dd = pm.d.transpose() * &pm.d;
    let h = Mat::identity(dd.nrows(), dd.ncols()) * (gamma * gamma) - dd;
    let chol = Cholesky::new(linalg::sym(&h)).ok_or_else(too_small)?;
    // YᵀY with Y = L⁻¹ D_πᵀ C_π
    let l = chol.l();
    let mut y = pm.d.transpose() * &pm.c;
    let _ = l.solve_lower_triangular_mut(&mut y);
    Ok(linalg::sym(&(cc + y.transpose() * y)))
}

/// Backward recursion for the same quadratic form, with the maximizing
/// feedback `w_t = Φ_t x_t` at every step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpStorage {
    #[serde(with = "crate::io::mat")]
    pub g: Mat,
    /// `Φ_0, …, Φ_{K−1}`.
    #[serde(with = "crate::io::mat_list")]
    pub gains: Vec<Mat>,
}

pub fn storage_matrix_dp(sys: &SwitchingSystem, pi: &Path, gamma: f64) -> Result<DpStorage> {
    let k = pi.len();
    let din = sys.input_dim();
    let n_end = sys.dim(pi.end());
    let mut p = Mat::zeros(n_end, n_end);
    let mut gains = vec![Mat::zeros(0, 0); k];
    for t in (0..k).rev() {
        let e = sys.edge(pi.edges()[t]);
        let pb = &p * &e.b;
        let h = Mat::identity(din, din) * (gamma * gamma) - e.d.transpose() * &e.d - e.b.transpose() * &pb;
        let r = e.d.transpose() * &e.c + pb.transpose() * &e.a;
        let phi = if din == 0 {
            Mat::zeros(0, e.a.ncols())
        } else {
            let chol = Cholesky::new(linalg::sym(&h)).ok_or(Error::NotConcave {
                step: t,
                path: pi.labels(),
            })?;
            chol.solve(&r)
        };
        p = linalg::sym(&(e.c.transpose() * &e.c + e.a.transpose() * &p * &e.a + r.transpose() * &phi));
        gains[t] = phi;
    }
    Ok(DpStorage { g: p, gains })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorstCaseRun {
    pub path: Vec<usize>,
    pub gamma: f64,
    pub x0: Vec<f64>,
    /// `w_0, …, w_{K−1}`.
    pub disturbance: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    #[serde(with = "crate::io::mat_list")]
    pub gains: Vec<Mat>,
    /// `Σ‖z_t‖² − γ²Σ‖w_t‖²` along the simulated run.
    pub attained: f64,
    /// `x0ᵀ G x0`.
    pub predicted: f64,
}

impl WorstCaseRun {
    pub fn relative_error(&self) -> f64 {
        (self.attained - self.predicted).abs() / self.predicted.abs().max(1e-300).max(self.attained.abs())
    }
}

/// Objective `Σ‖z_t‖² − γ²Σ‖w_t‖²` of a run from `x0` under `w`.
pub fn path_objective(sys: &SwitchingSystem, pi: &Path, gamma: f64, x0: &Vector, w: &[Vector]) -> f64 {
    let mut x = x0.clone();
    let mut total = 0.0;
    for (t, &ei) in pi.edges().iter().enumerate() {
        let e = sys.edge(ei);
        let z = &e.c * &x + &e.d * &w[t];
        total += z.norm_squared() - gamma * gamma * w[t].norm_squared();
        x = &e.a * &x + &e.b * &w[t];
    }
    total
}

/// Replay the maximizing disturbance along `π` from `x0`.
pub fn worst_case_disturbance(sys: &SwitchingSystem, pi: &Path, gamma: f64, x0: &Vector) -> Result<WorstCaseRun> {
    let n0 = sys.dim(pi.start());
    if x0.len() != n0 {
        return Err(Error::Dimension(format!(
            "x0 has length {} but node {} has dimension {n0}",
            x0.len(),
            sys.nodes()[pi.start()].name
        )));
    }
    let dp = storage_matrix_dp(sys, pi, gamma)?;
    let mut x = x0.clone();
    let mut states = vec![x.iter().copied().collect::<Vec<_>>()];
    let (mut ws, mut zs) = (Vec::new(), Vec::new());
    let mut attained = 0.0;
    for (t, &ei) in pi.edges().iter().enumerate() {
        let e = sys.edge(ei);
        let w = &dp.gains[t] * &x;
        let z = &e.c * &x + &e.d * &w;
        attained += z.norm_squared() - gamma * gamma * w.norm_squared();
        x = &e.a * &x + &e.b * &w;
        ws.push(w.iter().copied().collect());
        zs.push(z.iter().copied().collect());
        states.push(x.iter().copied().collect());
    }
    let predicted = x0.dot(&(&dp.g * x0));
    Ok(WorstCaseRun {
        path: pi.labels(),
        gamma,
        x0: x0.iter().copied().collect(),
        disturbance: ws,
        states,
        outputs: zs,
        gains: dp.gains,
        attained,
        predicted,
    })
}

/// Max-of-quadratics storage at one node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeStorage {
    pub node: String,
    pub dim: usize,
    /// Label words of the paths, parallel to `matrices`.
    pub paths: Vec<Vec<usize>>,
    #[serde(with = "crate::io::mat_list")]
    pub matrices: Vec<Mat>,
}

impl NodeStorage {
    /// `max_π xᵀ G_π x` (0 for a zero-dimensional node).
    pub fn evaluate(&self, x: &Vector) -> f64 {
        self.matrices
            .iter()
            .map(|g| x.dot(&(g * x)))
            .fold(if self.dim == 0 { 0.0 } else { f64::NEG_INFINITY }, f64::max)
    }

    /// Index of a maximizing quadratic at `x`.
    pub fn argmax(&self, x: &Vector) -> Option<usize> {
        self.matrices
            .iter()
            .map(|g| x.dot(&(g * x)))
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    /// Drop every quadratic dominated by another one.
    pub fn pruned(&self) -> NodeStorage {
        let mut order: Vec<usize> = (0..self.matrices.len()).collect();
        order.sort_by(|&a, &b| self.matrices[b].trace().total_cmp(&self.matrices[a].trace()));
        let mut kept: Vec<usize> = Vec::new();
        for i in order {
            let g = &self.matrices[i];
            let dominated = kept.iter().any(|&j| {
                let h = &self.matrices[j];
                let slack = 1e-12 * (1.0 + linalg::spectral_norm(h));
                linalg::min_eigenvalue(&(h - g)) >= -slack
            });
            if !dominated {
                kept.push(i);
            }
        }
        kept.sort_unstable();
        NodeStorage {
            node: self.node.clone(),
            dim: self.dim,
            paths: kept.iter().map(|&i| self.paths[i].clone()).collect(),
            matrices: kept.iter().map(|&i| self.matrices[i].clone()).collect(),
        }
    }
}

/// `F̌_v(x) = max_{|π| = K, π from v} xᵀ G_{π,γ} x` for every node `v`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticStorage {
    pub gamma: f64,
    pub horizon: usize,
    pub nodes: Vec<NodeStorage>,
}

impl QuadraticStorage {
    pub fn evaluate(&self, node: usize, x: &Vector) -> f64 {
        self.nodes[node].evaluate(x)
    }

    pub fn pruned(&self) -> QuadraticStorage {
        QuadraticStorage {
            gamma: self.gamma,
            horizon: self.horizon,
            nodes: self.nodes.iter().map(NodeStorage::pruned).collect(),
        }
    }

    pub fn quadratic_count(&self) -> usize {
        self.nodes.iter().map(|n| n.matrices.len()).sum()
    }
}

pub fn truncated_storage(sys: &SwitchingSystem, gamma: f64, horizon: usize) -> Result<QuadraticStorage> {
    truncated_storage_with(sys, gamma, horizon, ExecMode::Parallel)
}

type Labeled = (Vec<usize>, Mat);

/// Requires `γ > γ̌_K`.
pub fn truncated_storage_with(
    sys: &SwitchingSystem,
    gamma: f64,
    horizon: usize,
    mode: ExecMode,
) -> Result<QuadraticStorage> {
    let lower = super::lower_bound_with(sys, horizon, super::PNorm::Two, mode)?.value;
    if gamma <= lower {
        return Err(Error::BelowLowerBound { gamma, lower, horizon });
    }
    let edges: Vec<usize> = (0..sys.edges().len()).collect();
    // per first edge: (labels, G) for every path
    let chunks: Vec<Result<Vec<Labeled>>> = exec::map_collect(mode, &edges, |&e| {
        sys.paths_from_edge(e, horizon, None)
            .map(|pi| Ok((pi.labels(), storage_matrix_direct(sys, &pi, gamma)?)))
            .collect()
    });
    let mut nodes: Vec<NodeStorage> = sys
        .nodes()
        .iter()
        .map(|n| NodeStorage {
            node: n.name.clone(),
            dim: n.dim,
            paths: Vec::new(),
            matrices: Vec::new(),
        })
        .collect();
    for (e, chunk) in edges.iter().zip(chunks) {
        let v = sys.edge(*e).from;
        for (labels, g) in chunk? {
            nodes[v].paths.push(labels);
            nodes[v].matrices.push(g);
        }
    }
    Ok(QuadraticStorage { gamma, horizon, nodes })
}
