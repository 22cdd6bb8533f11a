//! Feasibility of finite families of linear matrix inequalities in
//! symmetric matrix variables.
//!
//! Every constraint is `F(X) = F0 + Σ c_k M_kᵀ X_{j_k} M_k` compared against
//! zero. The numerical work is delegated to a [`PsdBackend`]; whatever the
//! backend returns as a witness is re-checked here by an eigenvalue
//! decomposition of every constraint, so a `Feasible` verdict never rests on
//! the backend alone.

mod clarabel_backend;

pub use clarabel_backend::ClarabelBackend;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::Mat;

/// Environment variable selecting the backend by name.
pub const SOLVER_ENV: &str = "SWITCHGAIN_SOLVER";

/// Residual allowed on non-strict constraints of a verified witness,
/// relative to the magnitude of the constraint's terms.
pub const WITNESS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// `coeff · factorᵀ X_var factor`.
#[derive(Debug, Clone)]
pub struct Term {
    pub var: VarId,
    pub coeff: f64,
    pub factor: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// `F ⪯ 0`
    NegSemidef,
    /// `F ⪰ 0`
    PosSemidef,
    /// `F ≺ 0`, enforced as `F ⪯ -εI`
    NegDef,
    /// `F ≻ 0`, enforced as `F ⪰ εI`
    PosDef,
}

impl Sense {
    fn is_strict(self) -> bool {
        matches!(self, Sense::NegDef | Sense::PosDef)
    }

    // +1 when the constraint reads "F ⪰ …"
    fn sign(self) -> f64 {
        match self {
            Sense::PosSemidef | Sense::PosDef => 1.0,
            Sense::NegSemidef | Sense::NegDef => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmiConstraint {
    pub constant: Mat,
    pub terms: Vec<Term>,
    pub sense: Sense,
    pub tag: String,
}

impl LmiConstraint {
    pub fn new(constant: Mat, sense: Sense) -> Self {
        assert_eq!(constant.nrows(), constant.ncols(), "constant must be square");
        LmiConstraint {
            constant,
            terms: Vec::new(),
            sense,
            tag: String::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    /// Add `coeff · factorᵀ X factor`.
    pub fn term(mut self, var: VarId, coeff: f64, factor: Mat) -> Self {
        assert_eq!(factor.ncols(), self.size(), "factor columns must match constraint size");
        self.terms.push(Term { var, coeff, factor });
        self
    }

    pub fn tagged(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }
}

/// A feasibility problem: find symmetric `X_1, …, X_J` satisfying every
/// constraint.
#[derive(Debug, Clone, Default)]
pub struct LmiProblem {
    var_sizes: Vec<usize>,
    constraints: Vec<LmiConstraint>,
    margin: Option<f64>,
}

impl LmiProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, size: usize) -> VarId {
        self.var_sizes.push(size);
        VarId(self.var_sizes.len() - 1)
    }

    pub fn add_constraint(&mut self, c: LmiConstraint) {
        for t in &c.terms {
            assert!(t.var.0 < self.var_sizes.len(), "unknown variable");
            assert_eq!(
                t.factor.nrows(),
                self.var_sizes[t.var.0],
                "factor rows must match variable size"
            );
        }
        self.constraints.push(c);
    }

    /// Override the strictness margin ε.
    pub fn set_margin(&mut self, eps: f64) {
        self.margin = Some(eps);
    }

    pub fn var_sizes(&self) -> &[usize] {
        &self.var_sizes
    }

    pub fn constraints(&self) -> &[LmiConstraint] {
        &self.constraints
    }

    /// Strictness margin: explicit, or `1e-8 · max(1, max ‖F0‖₂)`.
    pub fn margin(&self) -> f64 {
        self.margin.unwrap_or_else(|| {
            let scale = self
                .constraints
                .iter()
                .map(|c| linalg::spectral_norm(&c.constant))
                .fold(1.0, f64::max);
            1e-8 * scale
        })
    }

    /// `F(X)` for one constraint at a given assignment.
    pub fn evaluate(&self, index: usize, witness: &[Mat]) -> Mat {
        let c = &self.constraints[index];
        let mut f = c.constant.clone();
        for t in &c.terms {
            f += t.factor.transpose() * &witness[t.var.0] * &t.factor * t.coeff;
        }
        linalg::sym(&f)
    }

    // magnitude used to make residuals relative
    fn magnitude(&self, index: usize, witness: &[Mat]) -> f64 {
        let c = &self.constraints[index];
        let mut s = linalg::spectral_norm(&c.constant);
        for t in &c.terms {
            let fnorm = linalg::spectral_norm(&t.factor);
            s += t.coeff.abs() * fnorm * fnorm * linalg::spectral_norm(&witness[t.var.0]);
        }
        s.max(1.0)
    }

    /// Re-check an assignment by eigenvalue decomposition of every
    /// constraint.
    pub fn verify(&self, witness: &[Mat]) -> WitnessCheck {
        let eps = self.margin();
        let mut worst_nonstrict: f64 = f64::NEG_INFINITY;
        let mut worst_strict: f64 = f64::NEG_INFINITY;
        let mut worst_index = None;
        let mut worst_rel = f64::NEG_INFINITY;
        for (i, c) in self.constraints.iter().enumerate() {
            if c.size() == 0 {
                continue;
            }
            let f = self.evaluate(i, witness);
            let viol = match c.sense {
                Sense::NegSemidef | Sense::NegDef => linalg::max_eigenvalue(&f),
                Sense::PosSemidef | Sense::PosDef => -linalg::min_eigenvalue(&f),
            };
            if c.sense.is_strict() {
                // needs margin ≥ ε/2
                worst_strict = worst_strict.max(viol + eps / 2.0);
            } else {
                let rel = viol / self.magnitude(i, witness);
                worst_nonstrict = worst_nonstrict.max(rel);
            }
            let score = if c.sense.is_strict() {
                viol + eps / 2.0
            } else {
                viol / self.magnitude(i, witness) - WITNESS_TOL
            };
            if score > worst_rel {
                worst_rel = score;
                worst_index = Some(i);
            }
        }
        let ok = worst_nonstrict <= WITNESS_TOL && worst_strict <= 0.0;
        WitnessCheck {
            ok,
            nonstrict_residual: worst_nonstrict.max(0.0),
            strict_shortfall: worst_strict.max(0.0),
            worst_constraint: worst_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessCheck {
    pub ok: bool,
    /// Largest relative violation among non-strict constraints.
    pub nonstrict_residual: f64,
    /// How far the worst strict constraint is from margin ε/2.
    pub strict_shortfall: f64,
    pub worst_constraint: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    Inconclusive(String),
}

#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// Verified assignment, present iff `Feasible`.
    pub witness: Option<Vec<Mat>>,
    /// Max relative residual of the backend's candidate (0 if none).
    pub residual: f64,
    pub backend: &'static str,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// What a backend reports before verification.
#[derive(Debug, Clone)]
pub enum BackendOutcome {
    /// A candidate assignment; verified by the caller.
    Candidate(Vec<Mat>),
    /// Certified infeasible: `bound` is a proven positive lower bound on
    /// the smallest uniform relaxation that would make the problem feasible.
    Infeasible {
        bound: f64,
    },
    Failed(String),
}

pub trait PsdBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &LmiProblem) -> BackendOutcome;
}

/// Backend named by `SWITCHGAIN_SOLVER` (default `clarabel`).
pub fn backend_from_env() -> Result<Box<dyn PsdBackend>> {
    match std::env::var(SOLVER_ENV) {
        Ok(name) => backend_by_name(&name),
        Err(_) => Ok(Box::new(ClarabelBackend::default())),
    }
}

pub fn backend_by_name(name: &str) -> Result<Box<dyn PsdBackend>> {
    match name.trim().to_ascii_lowercase().as_str() {
        "" | "clarabel" => Ok(Box::new(ClarabelBackend::default())),
        other => Err(Error::UnknownBackend(other.to_string())),
    }
}

/// Solve with the backend selected by the environment.
pub fn solve_feasibility(problem: &LmiProblem) -> FeasibilityResult {
    match backend_from_env() {
        Ok(b) => solve_with(b.as_ref(), problem),
        Err(e) => FeasibilityResult {
            status: FeasibilityStatus::Inconclusive(e.to_string()),
            witness: None,
            residual: 0.0,
            backend: "none",
        },
    }
}

pub fn solve_with(backend: &dyn PsdBackend, problem: &LmiProblem) -> FeasibilityResult {
    let name = backend.name();
    match backend.solve(problem) {
        BackendOutcome::Candidate(w) => {
            let check = problem.verify(&w);
            if check.ok {
                FeasibilityResult {
                    status: FeasibilityStatus::Feasible,
                    witness: Some(w),
                    residual: check.nonstrict_residual,
                    backend: name,
                }
            } else {
                FeasibilityResult {
                    status: FeasibilityStatus::Inconclusive(format!(
                        "candidate failed verification (residual {:.3e}, strict shortfall {:.3e}, constraint {:?})",
                        check.nonstrict_residual, check.strict_shortfall, check.worst_constraint
                    )),
                    witness: None,
                    residual: check.nonstrict_residual,
                    backend: name,
                }
            }
        }
        BackendOutcome::Infeasible { .. } => FeasibilityResult {
            status: FeasibilityStatus::Infeasible,
            witness: None,
            residual: 0.0,
            backend: name,
        },
        BackendOutcome::Failed(reason) => FeasibilityResult {
            status: FeasibilityStatus::Inconclusive(reason),
            witness: None,
            residual: 0.0,
            backend: name,
        },
    }
}
