//! Interior-point backend built on the Clarabel conic solver.
//!
//! The feasibility problem is posed as the bounded program
//!
//! ```text
//! minimize t   s.t.   s_c·F_c(X) − ε_c I + t I ⪰ 0   for every constraint c,   t ≥ −1
//! ```
//!
//! with `s_c = +1` for "⪰" constraints and `−1` for "⪯" ones. The original
//! system is feasible iff the optimum is `≤ 0`; a strictly positive dual
//! objective certifies infeasibility.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::{BackendOutcome, LmiProblem, PsdBackend};
use crate::Mat;

#[derive(Debug, Clone)]
pub struct ClarabelBackend {
    pub max_iter: u32,
    /// Dual objective above this value is accepted as an infeasibility
    /// certificate.
    pub infeasible_threshold: f64,
    /// Chordal decomposition of the PSD cones. Off by default: the blocks
    /// produced here are small and decomposition only adds overhead.
    pub chordal: bool,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        ClarabelBackend {
            max_iter: 200,
            infeasible_threshold: 1e-7,
            chordal: false,
        }
    }
}

// Clarabel's packed upper triangle, column-major.
fn svec_index(row: usize, col: usize) -> usize {
    let (r, c) = if row <= col { (row, col) } else { (col, row) };
    c * (c + 1) / 2 + r
}

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

struct Layout {
    // first scalar column of every matrix variable
    var_offset: Vec<usize>,
    t_col: usize,
}

impl Layout {
    fn new(sizes: &[usize]) -> Self {
        let mut var_offset = Vec::with_capacity(sizes.len());
        let mut col = 0;
        for &s in sizes {
            var_offset.push(col);
            col += svec_len(s);
        }
        Layout { var_offset, t_col: col }
    }

    fn ncols(&self) -> usize {
        self.t_col + 1
    }
}

fn to_csc(rows: usize, cols: usize, mut trip: Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    trip.sort_by_key(|&(r, c, _)| (c, r));
    let mut colptr = vec![0usize; cols + 1];
    let mut rowval = Vec::with_capacity(trip.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(trip.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in trip {
        if last == Some((r, c)) {
            *nzval.last_mut().expect("entry exists") += v;
            continue;
        }
        last = Some((r, c));
        rowval.push(r);
        nzval.push(v);
        colptr[c + 1] += 1;
    }
    for c in 0..cols {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(rows, cols, colptr, rowval, nzval)
}

impl PsdBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, problem: &LmiProblem) -> BackendOutcome {
        let sizes = problem.var_sizes();
        let layout = Layout::new(sizes);
        let eps = problem.margin();
        let sqrt2 = std::f64::consts::SQRT_2;

        let mut trip: Vec<(usize, usize, f64)> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        let mut cones = Vec::new();

        // t ≥ −1  ⇔  s = 1 + t ≥ 0  ⇔  b = 1, A_t = −1
        trip.push((0, layout.t_col, -1.0));
        b.push(1.0);
        cones.push(SupportedConeT::NonnegativeConeT(1));

        for c in problem.constraints() {
            let n = c.size();
            if n == 0 {
                continue;
            }
            let r0 = b.len();
            let sign = c.sense.sign();
            let margin = if c.sense.is_strict() { eps } else { 0.0 };
            // b = svec(s·F0 − ε I)
            for col in 0..n {
                for row in 0..=col {
                    let scale = if row == col { 1.0 } else { sqrt2 };
                    let mut v = sign * c.constant[(row, col)];
                    if row == col {
                        v -= margin;
                    }
                    b.push(scale * v);
                }
            }
            // t column: −svec(I)
            for i in 0..n {
                trip.push((r0 + svec_index(i, i), layout.t_col, -1.0));
            }
            // variable columns: −svec(s·coeff·Mᵀ E_ab M)
            for term in &c.terms {
                let m = &term.factor;
                let k = m.nrows();
                let base = layout.var_offset[term.var.0];
                let w = -sign * term.coeff;
                for a in 0..k {
                    for bb in a..k {
                        let col = base + svec_index(a, bb);
                        let ra = m.row(a);
                        let rb = m.row(bb);
                        for j in 0..n {
                            for i in 0..=j {
                                // (Mᵀ E_ab M)_{ij}
                                let v = if a == bb {
                                    ra[i] * ra[j]
                                } else {
                                    ra[i] * rb[j] + rb[i] * ra[j]
                                };
                                if v == 0.0 {
                                    continue;
                                }
                                let scale = if i == j { 1.0 } else { sqrt2 };
                                trip.push((r0 + svec_index(i, j), col, w * scale * v));
                            }
                        }
                    }
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(n));
        }

        let nrows = b.len();
        let ncols = layout.ncols();
        let a = to_csc(nrows, ncols, trip);
        let p = CscMatrix::zeros((ncols, ncols));
        let mut q = vec![0.0; ncols];
        q[layout.t_col] = 1.0;

        let settings = match DefaultSettingsBuilder::default()
            .verbose(log::log_enabled!(log::Level::Trace))
            .max_iter(self.max_iter)
            .chordal_decomposition_enable(self.chordal)
            .build()
        {
            Ok(s) => s,
            Err(e) => return BackendOutcome::Failed(format!("settings: {e}")),
        };
        let mut solver = match DefaultSolver::new(&p, &q, &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(e) => return BackendOutcome::Failed(format!("setup: {e:?}")),
        };
        solver.solve();
        let sol = &solver.solution;
        match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let t = sol.x[layout.t_col];
                if sol.status == SolverStatus::Solved
                    && sol.obj_val_dual > self.infeasible_threshold
                    && t > self.infeasible_threshold
                {
                    return BackendOutcome::Infeasible {
                        bound: sol.obj_val_dual,
                    };
                }
                let witness = sizes
                    .iter()
                    .zip(&layout.var_offset)
                    .map(|(&n, &off)| {
                        let mut x = Mat::zeros(n, n);
                        for col in 0..n {
                            for row in 0..=col {
                                let v = sol.x[off + svec_index(row, col)];
                                x[(row, col)] = v;
                                x[(col, row)] = v;
                            }
                        }
                        x
                    })
                    .collect();
                BackendOutcome::Candidate(witness)
            }
            other => BackendOutcome::Failed(format!("clarabel status {other:?}")),
        }
    }
}
