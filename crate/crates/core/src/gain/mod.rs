//! Bounds on the worst-case `L_p` gain, extremal storage functions and
//! their certificates.

mod storage;
mod upper;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::linalg;
use crate::realization::{self, MinimizationReport};
use crate::stability::{self, StabilityCertificate, TriState};
use crate::system::SwitchingSystem;

pub use storage::{
    path_objective, storage_matrix_direct, storage_matrix_dp, truncated_storage, truncated_storage_with,
    worst_case_disturbance, DpStorage, NodeStorage, QuadraticStorage, WorstCaseRun,
};
pub use upper::{
    converse_scaled_check, horizon_upper_bound_feasible, node_quadratic_feasible, upper_bound_bisect,
    HorizonCertificate, HorizonOutcome, ScaledCheckResult, UpperBound, DEFAULT_TOL, MAX_DOUBLINGS,
};
pub use verify::{verify_dissipation, DissipationReport, Storage};

/// Induced norm used for the lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PNorm {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl PNorm {
    pub fn of(self, m: &crate::Mat) -> f64 {
        match self {
            PNorm::One => linalg::norm_1(m),
            PNorm::Two => linalg::spectral_norm(m),
            PNorm::Inf => linalg::norm_inf(m),
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(PNorm::One),
            "2" => Ok(PNorm::Two),
            "inf" | "infinity" => Ok(PNorm::Inf),
            other => Err(Error::UnsupportedNorm(other.to_string())),
        }
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PNorm::One => "1",
            PNorm::Two => "2",
            PNorm::Inf => "inf",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    pub horizon: usize,
    pub p: PNorm,
    /// Labels of a maximizing path.
    pub path: Vec<usize>,
}

/// `γ̌_{K,p}`: the largest induced `p`-norm of `D_π` over all paths of
/// length `K`.
pub fn lower_bound(sys: &SwitchingSystem, horizon: usize, p: PNorm) -> Result<LowerBound> {
    lower_bound_with(sys, horizon, p, ExecMode::Parallel)
}

pub fn lower_bound_with(sys: &SwitchingSystem, horizon: usize, p: PNorm, mode: ExecMode) -> Result<LowerBound> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let (value, path) = sys.fold_paths(
        horizon,
        None,
        None,
        mode,
        (f64::NEG_INFINITY, Vec::new()),
        |pi| (p.of(&sys.path_matrices(pi).d), pi.labels()),
        |a, b| {
            // ties go to the lexicographically smaller word
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        },
    );
    Ok(LowerBound {
        value: value.max(0.0),
        horizon,
        p,
        path,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainBracket {
    pub p: PNorm,
    pub lower: f64,
    pub lower_horizon: usize,
    pub lower_path: Vec<usize>,
    pub upper: f64,
    pub upper_horizon: usize,
    pub stability: TriState,
    pub stability_certificate: StabilityCertificate,
    /// The input system was already minimal.
    pub was_minimal: bool,
    pub minimization: MinimizationReport,
    pub certificate: HorizonCertificate,
}

impl GainBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn relative_gap(&self) -> f64 {
        if self.upper > 0.0 {
            (self.upper - self.lower) / self.upper
        } else {
            0.0
        }
    }
}

/// Stability horizons tried in turn by [`gain_bracket`].
pub const STABILITY_HORIZONS: [usize; 3] = [1, 2, 4];

/// Minimize, check internal stability, then bound the `L_2` gain from both
/// sides at horizon `K`.
pub fn gain_bracket(sys: &SwitchingSystem, horizon: usize, tol: f64) -> Result<GainBracket> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let (min, report) = realization::minimize(sys, None);
    let was_minimal = report.initial_dims == report.final_dims;

    let mut state = None;
    for &t in &STABILITY_HORIZONS {
        let (s, cert) = stability::check_internal_stability(&min, t, tol)?;
        let done = s != TriState::Unknown;
        state = Some((s, cert));
        if done {
            break;
        }
    }
    let (stab, stab_cert) = state.expect("at least one horizon");
    match stab {
        TriState::Unstable => {
            return Err(Error::Unstable {
                rho_lower: stab_cert.rho_lower,
            })
        }
        TriState::Unknown => log::warn!(
            "internal stability not certified (rho in [{:.6}, {:.6}]); upper bound may not exist",
            stab_cert.rho_lower,
            stab_cert.rho_upper
        ),
        TriState::Stable => {}
    }

    let lower = lower_bound(&min, horizon, PNorm::Two)?;
    let up = upper_bound_bisect(&min, horizon, tol)?;
    Ok(GainBracket {
        p: PNorm::Two,
        lower: lower.value,
        lower_horizon: horizon,
        lower_path: lower.path,
        upper: up.gamma,
        upper_horizon: horizon,
        stability: stab,
        stability_certificate: stab_cert,
        was_minimal,
        minimization: report,
        certificate: up.certificate,
    })
}
