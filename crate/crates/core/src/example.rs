//! Inverted pendulum under LQR control with a lossy actuator link.
//!
//! When the control packet arrives the plant applies `u_t = K x_t` and the
//! controller memory stores `x_t`; when it is lost the actuator reuses the
//! gain on the stored state and the disturbance enters through `B`. The
//! graph allows at most two losses in a row.
//!
//! Physical constants beyond the mass, sample rate and LQR weights are a
//! documented completion: length 0.5 m, g = 9.81 m/s², no damping,
//! zero-order hold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::system::{self, Mode, SwitchingSystem};
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    /// kg
    pub mass: f64,
    /// m
    pub length: f64,
    /// m/s²
    pub gravity: f64,
    /// Hz
    pub sample_rate: f64,
    /// State weight `Q = q I`.
    pub q_weight: f64,
    /// Input weight `R = r`.
    pub r_weight: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            mass: 2.0,
            length: 0.5,
            gravity: 9.81,
            sample_rate: 100.0,
            q_weight: 1.0,
            r_weight: 10.0,
        }
    }
}

impl PendulumParams {
    /// Exact zero-order-hold discretization of
    /// `θ'' = (g/l) θ + u / (m l²)` with state `(θ, θ')`.
    pub fn discretize(&self) -> (Mat, Mat) {
        let w = (self.gravity / self.length).sqrt();
        let h = 1.0 / self.sample_rate;
        let (ch, sh) = ((w * h).cosh(), (w * h).sinh());
        let a = Mat::from_row_slice(2, 2, &[ch, sh / w, w * sh, ch]);
        let gain = 1.0 / (self.mass * self.length * self.length);
        let b = Mat::from_row_slice(2, 1, &[gain * (ch - 1.0) / (w * w), gain * sh / w]);
        (a, b)
    }
}

/// Infinite-horizon discrete LQR gain `K` (with `u = K x`), by iterating
/// the Riccati recursion to a fixed point.
pub fn dlqr(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Mat> {
    let mut p = q.clone();
    for _ in 0..100_000 {
        let bp = b.transpose() * &p;
        let h = r + &bp * b;
        let k = linalg::spd_solve(&h, &(&bp * a))
            .ok_or_else(|| Error::Dimension("R + BᵀPB is not positive definite".into()))?;
        let next = linalg::sym(&(q + a.transpose() * &p * a - (a.transpose() * &p * b) * &k));
        let diff = linalg::max_abs_diff(&next, &p);
        p = next;
        if diff <= 1e-13 * (1.0 + linalg::spectral_norm(&p)) {
            let bp = b.transpose() * &p;
            let k = linalg::spd_solve(&(r + &bp * b), &(&bp * a)).expect("checked above");
            return Ok(-k);
        }
    }
    Err(Error::Dimension("Riccati iteration did not converge".into()))
}

/// Node names and `(from, to, mode)` edges of the loss graph: `a` after a
/// delivered packet, `b` after one loss, `c` after two.
pub fn default_graph() -> (Vec<String>, Vec<(usize, usize, usize)>) {
    let names = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let edges = vec![(0, 0, 1), (0, 1, 2), (1, 0, 1), (1, 2, 2), (2, 0, 1)];
    (names, edges)
}

/// The two modes on the augmented state `(x, memory)`.
pub fn delayed_control_modes(a: &Mat, b: &Mat, k_gain: &Mat) -> Result<[Mode; 2]> {
    let n = a.nrows();
    let q = b.ncols();
    if a.ncols() != n || b.nrows() != n || k_gain.shape() != (q, n) {
        return Err(Error::Dimension(format!(
            "need A n×n, B n×q, K q×n; got A {:?}, B {:?}, K {:?}",
            a.shape(),
            b.shape(),
            k_gain.shape()
        )));
    }
    let i = Mat::identity(n, n);
    let z = Mat::zeros(n, n);
    let bk = b * k_gain;
    let stack =
        |tl: &Mat, tr: &Mat, bl: &Mat, br: &Mat| linalg::vstack(&linalg::hstack(tl, tr), &linalg::hstack(bl, br));
    let c = linalg::hstack(&i, &z);
    let d = Mat::zeros(n, q);
    let delivered = Mode {
        a: stack(&(a + &bk), &z, &i, &z),
        b: Mat::zeros(2 * n, q),
        c: c.clone(),
        d: d.clone(),
    };
    let lost = Mode {
        a: stack(a, &bk, &z, &i),
        b: linalg::vstack(b, &Mat::zeros(n, q)),
        c,
        d,
    };
    Ok([delivered, lost])
}

pub fn build_delayed_control_example(a: &Mat, b: &Mat, k_gain: &Mat) -> Result<SwitchingSystem> {
    let (names, edges) = default_graph();
    build_delayed_control_example_on(a, b, k_gain, &names, &edges)
}

/// Same as [`build_delayed_control_example`] on a caller-supplied graph
/// (modes 1 = delivered, 2 = lost).
pub fn build_delayed_control_example_on(
    a: &Mat,
    b: &Mat,
    k_gain: &Mat,
    names: &[String],
    edges: &[(usize, usize, usize)],
) -> Result<SwitchingSystem> {
    let modes = delayed_control_modes(a, b, k_gain)?;
    let sys = system::lift_to_rectangular(names, &modes, edges)?;
    let report = sys.validate();
    if !report.is_ok() {
        return Err(Error::Invalid(report));
    }
    Ok(sys)
}

/// The pendulum system with the given parameters on the default graph.
pub fn pendulum(params: &PendulumParams) -> Result<SwitchingSystem> {
    let (a, b) = params.discretize();
    let q = Mat::identity(2, 2) * params.q_weight;
    let r = Mat::from_element(1, 1, params.r_weight);
    let k = dlqr(&a, &b, &q, &r)?;
    build_delayed_control_example(&a, &b, &k)
}
