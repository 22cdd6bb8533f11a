//! Horizon-dependent quadratic certificates: per-path matrices `X_π`
//! linked along overlapping path pairs, bisection on `γ`, and the scaled
//! converse test.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::linalg;
use crate::lmi::{self, FeasibilityStatus, LmiConstraint, LmiProblem, PsdBackend, Sense, VarId};
use crate::system::{EdgeSpec, Path, SwitchingSystem};
use crate::Mat;

pub const DEFAULT_TOL: f64 = 1e-3;
pub const MAX_DOUBLINGS: usize = 60;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonCertificate {
    pub gamma: f64,
    pub horizon: usize,
    /// Label words of all paths of length `K`, parallel to `matrices`.
    pub paths: Vec<Vec<usize>>,
    #[serde(with = "crate::io::mat_list")]
    pub matrices: Vec<Mat>,
    /// Largest relative LMI residual at the witness.
    pub residual: f64,
}

impl HorizonCertificate {
    pub fn lookup(&self) -> HashMap<Vec<usize>, usize> {
        self.paths.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect()
    }

    /// Re-check every LMI block by eigenvalues.
    pub fn verify(&self, sys: &SwitchingSystem) -> lmi::WitnessCheck {
        let (prob, _) = horizon_problem(sys, self.horizon, self.gamma, ExecMode::Parallel);
        prob.verify(&self.matrices)
    }
}

#[derive(Debug, Clone)]
pub enum HorizonOutcome {
    Feasible(HorizonCertificate),
    Infeasible,
    Inconclusive(String),
}

impl HorizonOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, HorizonOutcome::Feasible(_))
    }
}

/// `[A B]ᵀ X_next [A B] + [C D]ᵀ[C D] − diag(X_cur, γ²I) ⪯ 0` for one edge.
pub(crate) fn dissipation_block(e: &EdgeSpec, next: VarId, cur: VarId, gamma: f64) -> LmiConstraint {
    let n = e.a.ncols();
    let d = e.b.ncols();
    let ab = linalg::hstack(&e.a, &e.b);
    let cd = linalg::hstack(&e.c, &e.d);
    let mut constant = cd.transpose() * &cd;
    for i in n..n + d {
        constant[(i, i)] -= gamma * gamma;
    }
    let select = linalg::hstack(&Mat::identity(n, n), &Mat::zeros(n, d));
    LmiConstraint::new(constant, Sense::NegSemidef)
        .term(next, 1.0, ab)
        .term(cur, -1.0, select)
}

/// Variables `X_π` for `|π| = K` and one dissipation block per path of
/// length `K + 1`.
pub(crate) fn horizon_problem(
    sys: &SwitchingSystem,
    horizon: usize,
    gamma: f64,
    mode: ExecMode,
) -> (LmiProblem, Vec<Path>) {
    let paths: Vec<Path> = sys.paths(horizon, None, None).collect();
    let index: HashMap<&[usize], usize> = paths.iter().enumerate().map(|(i, p)| (p.edges(), i)).collect();
    let mut prob = LmiProblem::new();
    let vars: Vec<VarId> = paths.iter().map(|p| prob.add_var(sys.dim(p.start()))).collect();
    for (p, &v) in paths.iter().zip(&vars) {
        let n = sys.dim(p.start());
        prob.add_constraint(LmiConstraint::new(Mat::zeros(n, n), Sense::PosDef).term(v, 1.0, Mat::identity(n, n)));
    }
    let first: Vec<usize> = (0..sys.edges().len()).collect();
    let blocks: Vec<Vec<LmiConstraint>> = exec::map_collect(mode, &first, |&e| {
        sys.paths_from_edge(e, horizon + 1, None)
            .map(|rho| {
                let w = rho.edges();
                let cur = vars[index[&w[..horizon]]];
                let next = vars[index[&w[1..]]];
                dissipation_block(sys.edge(w[0]), next, cur, gamma)
            })
            .collect()
    });
    for c in blocks.into_iter().flatten() {
        prob.add_constraint(c);
    }
    (prob, paths)
}

fn solve_horizon(backend: &dyn PsdBackend, sys: &SwitchingSystem, horizon: usize, gamma: f64) -> HorizonOutcome {
    let (prob, paths) = horizon_problem(sys, horizon, gamma, ExecMode::Parallel);
    let res = lmi::solve_with(backend, &prob);
    match res.status {
        FeasibilityStatus::Feasible => HorizonOutcome::Feasible(HorizonCertificate {
            gamma,
            horizon,
            paths: paths.iter().map(Path::labels).collect(),
            matrices: res.witness.expect("feasible carries witness"),
            residual: res.residual,
        }),
        FeasibilityStatus::Infeasible => HorizonOutcome::Infeasible,
        FeasibilityStatus::Inconclusive(r) => HorizonOutcome::Inconclusive(r),
    }
}

/// Is there a horizon-`K` certificate for gain level `γ`?
pub fn horizon_upper_bound_feasible(sys: &SwitchingSystem, horizon: usize, gamma: f64) -> Result<HorizonOutcome> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let backend = lmi::backend_from_env()?;
    Ok(solve_horizon(backend.as_ref(), sys, horizon, gamma))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpperBound {
    pub gamma: f64,
    pub horizon: usize,
    /// `γ̌_K`, the start of the bisection interval.
    pub lower: f64,
    pub certificate: HorizonCertificate,
    pub solves: usize,
    pub inconclusive_steps: usize,
}

/// Smallest `γ` (to within `tol`) with a horizon-`K` certificate.
/// Inconclusive solves count as infeasible.
pub fn upper_bound_bisect(sys: &SwitchingSystem, horizon: usize, tol: f64) -> Result<UpperBound> {
    let lower = super::lower_bound(sys, horizon, super::PNorm::Two)?.value;
    let backend = lmi::backend_from_env()?;
    let mut solves = 0;
    let mut inconclusive = 0;
    let mut attempt = |gamma: f64| {
        solves += 1;
        match solve_horizon(backend.as_ref(), sys, horizon, gamma) {
            HorizonOutcome::Feasible(c) => Some(c),
            HorizonOutcome::Infeasible => None,
            HorizonOutcome::Inconclusive(r) => {
                log::debug!("horizon {horizon}, gamma {gamma}: {r}");
                inconclusive += 1;
                None
            }
        }
    };

    let mut lo = lower;
    let mut cap = (2.0 * lower).max(1.0);
    let mut best = None;
    for _ in 0..=MAX_DOUBLINGS {
        if let Some(c) = attempt(cap) {
            best = Some(c);
            break;
        }
        lo = lo.max(cap);
        cap *= 2.0;
    }
    let mut cert = best.ok_or(Error::NoUpperBound(horizon))?;
    let mut hi = cap;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match attempt(mid) {
            Some(c) => {
                hi = mid;
                cert = c;
            }
            None => lo = mid,
        }
    }
    Ok(UpperBound {
        gamma: hi,
        horizon,
        lower,
        certificate: cert,
        solves,
        inconclusive_steps: inconclusive,
    })
}

/// Per-node quadratic storage `Q_v ≻ 0` with one dissipation block per edge.
pub fn node_quadratic_feasible(sys: &SwitchingSystem, gamma: f64) -> Result<Option<Vec<Mat>>> {
    let mut prob = LmiProblem::new();
    let vars: Vec<VarId> = sys.dims().into_iter().map(|n| prob.add_var(n)).collect();
    for (v, n) in sys.dims().into_iter().enumerate() {
        prob.add_constraint(LmiConstraint::new(Mat::zeros(n, n), Sense::PosDef).term(
            vars[v],
            1.0,
            Mat::identity(n, n),
        ));
    }
    for e in sys.edges() {
        prob.add_constraint(dissipation_block(e, vars[e.to], vars[e.from], gamma));
    }
    let res = lmi::solve_with(lmi::backend_from_env()?.as_ref(), &prob);
    match res.status {
        FeasibilityStatus::Feasible => Ok(res.witness),
        FeasibilityStatus::Infeasible => Ok(None),
        FeasibilityStatus::Inconclusive(r) => Err(Error::Inconclusive(r)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledCheckResult {
    /// Both the scaled horizon-1 test and the node-quadratic LMI succeeded.
    pub passed: bool,
    pub scale: f64,
    pub scaled_feasible: bool,
    /// Outcome of the node-quadratic LMI on the original system, when run.
    pub original_feasible: Option<bool>,
    #[serde(default, with = "opt_mats", skip_serializing_if = "Option::is_none")]
    pub node_storage: Option<Vec<Mat>>,
}

mod opt_mats {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::Mat;

    pub fn serialize<S: Serializer>(m: &Option<Vec<Mat>>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref()
            .map(|ms| ms.iter().map(crate::io::rows_of).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Mat>>, D::Error> {
        let raw = Option::<Vec<Vec<Vec<f64>>>>::deserialize(d)?;
        raw.map(|all| {
            all.iter()
                .map(|rows| crate::io::mat_from_rows(rows, 0, "matrix").map_err(serde::de::Error::custom))
                .collect()
        })
        .transpose()
    }
}

/// Test `γ₂(Σ′) ≤ 1` for `Σ′ = (√n A, √n B, C, D)` with a horizon-1
/// certificate; on success, look for node-quadratic storage of the
/// original system at `γ = 1`.
pub fn converse_scaled_check(sys: &SwitchingSystem) -> Result<ScaledCheckResult> {
    let n = sys.uniform_dim().ok_or(Error::NotSquare)?;
    let s = (n as f64).sqrt();
    let scaled = sys.with_matrices(sys.dims(), |e| (&e.a * s, &e.b * s, e.c.clone(), e.d.clone()));
    let scaled_feasible = match horizon_upper_bound_feasible(&scaled, 1, 1.0)? {
        HorizonOutcome::Feasible(_) => true,
        HorizonOutcome::Infeasible => false,
        HorizonOutcome::Inconclusive(r) => return Err(Error::Inconclusive(r)),
    };
    if !scaled_feasible {
        return Ok(ScaledCheckResult {
            passed: false,
            scale: s,
            scaled_feasible,
            original_feasible: None,
            node_storage: None,
        });
    }
    let q = node_quadratic_feasible(sys, 1.0)?;
    Ok(ScaledCheckResult {
        passed: q.is_some(),
        scale: s,
        scaled_feasible,
        original_feasible: Some(q.is_some()),
        node_storage: q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;

    #[test]
    fn zero_system_is_feasible_at_any_gamma() {
        let sys = scalar_lti(0.0, 0.0, 0.0, 0.0);
        for g in [1e-3, 1.0, 10.0] {
            assert!(horizon_upper_bound_feasible(&sys, 2, g).unwrap().is_feasible());
        }
        let ub = upper_bound_bisect(&sys, 1, 1e-3).unwrap();
        assert!(ub.gamma <= 1e-3);
    }

    #[test]
    fn bounded_real_lemma_on_scalar_lti() {
        let sys = scalar_lti(0.5, 1.0, 1.0, 0.0);
        assert!(horizon_upper_bound_feasible(&sys, 1, 2.01).unwrap().is_feasible());
        assert!(matches!(
            horizon_upper_bound_feasible(&sys, 1, 1.99).unwrap(),
            HorizonOutcome::Infeasible
        ));
        let ub = upper_bound_bisect(&sys, 1, 1e-3).unwrap();
        assert!((ub.gamma - 2.0).abs() <= 1e-3, "{}", ub.gamma);
        assert!(ub.certificate.verify(&sys).ok);
    }

    #[test]
    fn horizon_lmi_sizes() {
        let sys = two_node_system(2);
        let (prob, paths) = horizon_problem(&sys, 2, 5.0, ExecMode::Sequential);
        let n2 = sys.paths(2, None, None).count();
        let n3 = sys.paths(3, None, None).count();
        assert_eq!(paths.len(), n2);
        assert_eq!(prob.constraints().len(), n2 + n3);
    }

    #[test]
    fn converse_requires_uniform_dimension() {
        let sys = crate::random::random_system(
            &crate::random::RandomSystemSpec {
                min_dim: 1,
                max_dim: 1,
                ..Default::default()
            },
            &mut rng(0),
        );
        let _ = converse_scaled_check(&sys).unwrap();
        let mut dims = sys.dims();
        dims[0] = 2;
        let mixed = sys.with_matrices(dims, |e| (e.a.clone(), e.b.clone(), e.c.clone(), e.d.clone()));
        assert!(matches!(converse_scaled_check(&mixed), Err(Error::NotSquare)));
    }

    #[test]
    fn converse_on_zero_system_passes() {
        let sys = scalar_lti(0.0, 0.0, 0.0, 0.0);
        let r = converse_scaled_check(&sys).unwrap();
        assert!(r.passed);
        assert_eq!(r.scale, 1.0);
    }
}
