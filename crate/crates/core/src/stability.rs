//! Sufficient internal-stability test via quadratic multinorms on the
//! `T`-lifted system, plus a cycle-based lower bound on the constrained
//! joint spectral radius.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::{self, ExecMode};
use crate::linalg;
use crate::lmi::{self, FeasibilityStatus, LmiConstraint, LmiProblem, Sense, VarId};
use crate::system::{Path, SwitchingSystem};
use crate::Mat;

pub const MAX_BISECTION_STEPS: usize = 40;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityCertificate {
    /// Upper bound on the constrained joint spectral radius.
    pub rho_upper: f64,
    /// Largest `ρ(A_c)^{1/|c|}` over closed walks of length `≤ T + 2`.
    pub rho_lower: f64,
    pub horizon: usize,
    /// Per-node `P_v` with `A_πᵀ P_{end} A_π ⪯ ρ^{2T} P_{start}` for all
    /// `|π| = T` at `ρ = rho_upper`.
    #[serde(with = "crate::io::mat_list")]
    pub witness: Vec<Mat>,
    /// Some bisection step returned an inconclusive solver status.
    pub inconclusive_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriState {
    Stable,
    Unstable,
    Unknown,
}

/// Largest `ρ(A_c)^{1/|c|}` over closed walks `c` of length `1..=max_len`.
pub fn cycle_lower_bound(sys: &SwitchingSystem, max_len: usize) -> f64 {
    let nodes: Vec<usize> = (0..sys.nodes().len()).collect();
    let mut best: f64 = 0.0;
    for len in 1..=max_len {
        let b = exec::map_reduce(
            ExecMode::Parallel,
            &nodes,
            0.0_f64,
            |&v| {
                sys.paths(len, Some(v), Some(v))
                    .map(|c| linalg::spectral_radius(&sys.path_matrices(&c).a).powf(1.0 / len as f64))
                    .fold(0.0, f64::max)
            },
            f64::max,
        );
        best = best.max(b);
    }
    best
}

fn lifted_problem(sys: &SwitchingSystem, paths: &[(Path, Mat)], rho: f64) -> (LmiProblem, Vec<VarId>) {
    let mut p = LmiProblem::new();
    let vars: Vec<VarId> = sys.dims().into_iter().map(|n| p.add_var(n)).collect();
    for (v, &n) in sys.dims().iter().enumerate() {
        p.add_constraint(
            LmiConstraint::new(-Mat::identity(n, n), Sense::PosSemidef)
                .term(vars[v], 1.0, Mat::identity(n, n))
                .tagged(format!("P_{v} >= I")),
        );
    }
    let t = paths.first().map_or(1, |(pi, _)| pi.len());
    let scale = rho.powi(2 * t as i32);
    for (pi, a) in paths {
        let n0 = a.ncols();
        p.add_constraint(
            LmiConstraint::new(Mat::zeros(n0, n0), Sense::NegSemidef)
                .term(vars[pi.end()], 1.0, a.clone())
                .term(vars[pi.start()], -scale, Mat::identity(n0, n0)),
        );
    }
    (p, vars)
}

/// Bisection on `ρ` for the quadratic `T`-lifted multinorm test.
pub fn quadratic_cjsr_bound(sys: &SwitchingSystem, horizon: usize, tol: f64) -> Result<StabilityCertificate> {
    if horizon == 0 {
        return Err(crate::Error::ZeroHorizon);
    }
    let rho_lower = cycle_lower_bound(sys, horizon + 2);
    let all: Vec<Path> = sys.paths(horizon, None, None).collect();
    let paths: Vec<(Path, Mat)> =
        exec::map_collect(ExecMode::Parallel, &all, |pi| (pi.clone(), sys.path_matrices(pi).a));

    let max_norm = sys
        .edges()
        .iter()
        .map(|e| linalg::spectral_norm(&e.a))
        .fold(0.0, f64::max);
    // P_v = I certifies ρ = max ‖A_σ‖ at any horizon.
    let identity: Vec<Mat> = sys.dims().into_iter().map(|n| Mat::identity(n, n)).collect();
    let mut hi = max_norm;
    let mut witness = identity;
    let mut lo = rho_lower.min(hi);
    let mut inconclusive = 0;
    let backend = lmi::backend_from_env()?;
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (prob, _) = lifted_problem(sys, &paths, mid);
        let res = lmi::solve_with(backend.as_ref(), &prob);
        match res.status {
            FeasibilityStatus::Feasible => {
                hi = mid;
                witness = res.witness.expect("feasible carries witness");
            }
            FeasibilityStatus::Infeasible => lo = mid,
            FeasibilityStatus::Inconclusive(reason) => {
                log::debug!("stability bisection at rho={mid}: {reason}");
                inconclusive += 1;
                lo = mid;
            }
        }
    }
    Ok(StabilityCertificate {
        rho_upper: hi,
        rho_lower,
        horizon,
        witness,
        inconclusive_steps: inconclusive,
    })
}

/// Re-check a certificate's witness on the lifted inequalities.
pub fn verify_certificate(sys: &SwitchingSystem, cert: &StabilityCertificate) -> lmi::WitnessCheck {
    let all: Vec<Path> = sys.paths(cert.horizon, None, None).collect();
    let paths: Vec<(Path, Mat)> = all
        .into_iter()
        .map(|pi| {
            let a = sys.path_matrices(&pi).a;
            (pi, a)
        })
        .collect();
    let (prob, _) = lifted_problem(sys, &paths, cert.rho_upper);
    prob.verify(&cert.witness)
}

/// `Stable` if `rho_upper < 1 − tol`, `Unstable` if `rho_lower > 1 + tol`,
/// `Unknown` otherwise. Never claims more than the certificate shows.
pub fn check_internal_stability(
    sys: &SwitchingSystem,
    horizon: usize,
    tol: f64,
) -> Result<(TriState, StabilityCertificate)> {
    let cert = quadratic_cjsr_bound(sys, horizon, tol)?;
    Ok((classify(&cert, tol), cert))
}

pub fn classify(cert: &StabilityCertificate, tol: f64) -> TriState {
    if cert.rho_upper < 1.0 - tol {
        TriState::Stable
    } else if cert.rho_lower > 1.0 + tol {
        TriState::Unstable
    } else {
        TriState::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{EdgeSpec, NodeSpec};
    use crate::testutil::*;

    fn single(a: Mat) -> SwitchingSystem {
        let n = a.nrows();
        SwitchingSystem::new(
            vec![NodeSpec {
                name: "a".into(),
                dim: n,
            }],
            vec![EdgeSpec {
                from: 0,
                to: 0,
                label: 1,
                original_label: 1,
                a,
                b: Mat::zeros(n, 1),
                c: Mat::zeros(1, n),
                d: Mat::zeros(1, 1),
            }],
            1,
            1,
        )
        .unwrap()
    }

    #[test]
    fn scaled_identity_is_exact() {
        let cert = quadratic_cjsr_bound(&single(Mat::identity(2, 2) * 0.7), 1, 1e-4).unwrap();
        assert!((cert.rho_upper - 0.7).abs() <= 1e-4);
        assert!((cert.rho_lower - 0.7).abs() <= 1e-9);
    }

    #[test]
    fn lifting_approaches_spectral_radius() {
        // rotation scaled by 0.9 plus a shear: ρ = 0.9, ‖A‖ > 0.9
        let th: f64 = 0.7;
        let rot = Mat::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]) * 0.9;
        let shear = Mat::from_row_slice(2, 2, &[1.0, 1.5, 0.0, 1.0]);
        let a = &shear * rot * shear.clone().try_inverse().unwrap();
        let rho = linalg::spectral_radius(&a);
        assert!((rho - 0.9).abs() < 1e-12);
        let sys = single(a);
        let mut prev = f64::INFINITY;
        for t in [1, 2, 4, 8] {
            let cert = quadratic_cjsr_bound(&sys, t, 1e-4).unwrap();
            assert!(cert.rho_upper >= rho - 1e-4);
            assert!(cert.rho_upper <= prev + 2e-4, "nonincreasing in T");
            assert!(verify_certificate(&sys, &cert).ok);
            prev = cert.rho_upper;
        }
        // a single quadratic norm is exact for one LTI mode
        assert!(prev - rho < 2e-3, "{prev} vs {rho}");
    }

    #[test]
    fn zero_dynamics_are_stable() {
        let (s, cert) = check_internal_stability(&single(Mat::zeros(2, 2)), 1, 1e-3).unwrap();
        assert_eq!(s, TriState::Stable);
        assert_eq!(cert.rho_upper, 0.0);
    }

    #[test]
    fn expanding_self_loop_is_unstable() {
        let a = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.1]);
        let (s, cert) = check_internal_stability(&single(a), 1, 1e-3).unwrap();
        assert_eq!(s, TriState::Unstable);
        assert!((cert.rho_lower - 2.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_rotation_is_unknown() {
        let th: f64 = 0.3;
        let a = Mat::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let (s, _) = check_internal_stability(&single(a), 1, 1e-3).unwrap();
        assert_eq!(s, TriState::Unknown);
    }

    #[test]
    fn scaling_equivariance() {
        let sys = two_node_system(21);
        let base = quadratic_cjsr_bound(&sys, 2, 1e-4).unwrap();
        let scaled = quadratic_cjsr_bound(&crate::random::scale_dynamics(&sys, 2.5), 2, 1e-4).unwrap();
        assert!((scaled.rho_upper - 2.5 * base.rho_upper).abs() < 2.5 * 3e-4);
        assert!((scaled.rho_lower - 2.5 * base.rho_lower).abs() < 1e-9);
        assert!(base.rho_lower <= base.rho_upper + 1e-6);
    }
}
