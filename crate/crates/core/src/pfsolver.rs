//! Fixed-point load-flow solver.
//!
//! The load-flow equations `v_h * conj(i_h) = s_h`, `v = v0*1 + Z i` are
//! solved as a fixed point `f = G(f)` of
//!
//! ```text
//! G(f) = -(1 / v0^2) diag(f + s) Z conj(f + s),    f = v0 conj(i) - s
//! ```
//!
//! iterated from `f = 0` (the open-circuit profile). Convergence of this
//! iteration is exactly what the certificates in [`crate::certificates`]
//! guarantee, so the solver doubles as the constructive check behind them
//! and as the solvability predicate of the boundary oracle. Non-convergence
//! is reported as a value, not an error: the boundary search deliberately
//! drives the iteration past the contraction region.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::certificates::LoadVector;
use crate::error::{Error, Result};
use crate::netmodel::ImpedanceMatrix;

/// Default tolerance on the infinity norm of `G(f) - f`.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Iterates are declared divergent once their infinity norm exceeds
/// `1e3 * v0^2 / max(||Z||_2*, eps)`.
const DIVERGENCE_FACTOR: f64 = 1e3;
const NORM_FLOOR: f64 = 1e-12;

/// Terminal state of the fixed-point iteration.
#[derive(Debug, Clone)]
pub struct FixedPointState {
    pub f: DVector<Complex64>,
    /// Number of map applications performed.
    pub iteration: usize,
    /// `||G(f) - f||_inf` at the final iterate.
    pub last_step_norm: f64,
}

/// Recovered load-flow solution. `residual` is the max modulus of
/// `v_h * conj(i_h) - s_h` over the load buses.
#[derive(Debug, Clone)]
pub struct PFSolution {
    pub v: DVector<Complex64>,
    pub i: DVector<Complex64>,
    pub residual: f64,
    pub converged: bool,
    pub state: FixedPointState,
}

/// One application of the map `G`.
pub fn apply_map(
    z: &ImpedanceMatrix,
    s: &LoadVector,
    v0: f64,
    f: &DVector<Complex64>,
) -> DVector<Complex64> {
    let u = f + s.injections();
    let zu = z.entries() * u.map(|e| e.conj());
    let scale = -1.0 / (v0 * v0);
    u.component_mul(&zu).map(|e| e * scale)
}

fn inf_norm(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// Plain fixed-point iteration from `f = 0`.
pub fn solve_fixed_point(
    z: &ImpedanceMatrix,
    s: &LoadVector,
    v0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PFSolution> {
    let f0 = DVector::zeros(z.n());
    solve_fixed_point_damped(z, s, v0, &f0, tol, max_iter, 1.0)
}

/// Fixed-point iteration from an arbitrary start with relaxation
/// `f <- (1 - alpha) f + alpha G(f)`; `alpha = 1` is the plain iteration.
/// Used by the boundary oracle for warm-started continuation.
pub fn solve_fixed_point_damped(
    z: &ImpedanceMatrix,
    s: &LoadVector,
    v0: f64,
    f0: &DVector<Complex64>,
    tol: f64,
    max_iter: usize,
    alpha: f64,
) -> Result<PFSolution> {
    if s.len() != z.n() {
        return Err(Error::DimensionMismatch { expected: z.n(), actual: s.len() });
    }
    if f0.len() != z.n() {
        return Err(Error::DimensionMismatch { expected: z.n(), actual: f0.len() });
    }
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(Error::InvalidArgument(format!("v0 must be positive, got {v0}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1]".into()));
    }

    let bound = DIVERGENCE_FACTOR * v0 * v0 / z.nuclear_norm_2().max(NORM_FLOOR);

    let mut f = f0.clone();
    let mut g = apply_map(z, s, v0, &f);
    let mut applications = 1usize;
    let mut converged = false;
    let mut step = inf_norm(&(&g - &f));

    loop {
        // The fixed-point defect ||G(f) - f|| equals the power-equation
        // residual of the recovered (v, i), so testing it here makes the
        // convergence flag and the reported residual consistent.
        if step < tol && step.is_finite() {
            converged = true;
            break;
        }
        if applications >= max_iter {
            break;
        }
        f = if alpha == 1.0 {
            g
        } else {
            f.map(|e| e * (1.0 - alpha)) + g.map(|e| e * alpha)
        };
        let fn_norm = inf_norm(&f);
        if !fn_norm.is_finite() || fn_norm > bound {
            // Diverged; report the last iterate without further work.
            step = f64::INFINITY;
            break;
        }
        g = apply_map(z, s, v0, &f);
        applications += 1;
        step = inf_norm(&(&g - &f));
    }

    // Recover conj(i) = (f + s) / v0, then v = v0*1 + Z i.
    let conj_i = (&f + s.injections()).map(|e| e / v0);
    let i = conj_i.map(|e| e.conj());
    let v = DVector::from_element(z.n(), Complex64::new(v0, 0.0)) + z.entries() * &i;
    let residual = power_residual(&v, &i, s);

    Ok(PFSolution {
        v,
        i,
        residual,
        converged,
        state: FixedPointState { f, iteration: applications, last_step_norm: step },
    })
}

fn power_residual(v: &DVector<Complex64>, i: &DVector<Complex64>, s: &LoadVector) -> f64 {
    v.iter()
        .zip(i.iter())
        .zip(s.injections().iter())
        .map(|((vh, ih), sh)| (vh * ih.conj() - sh).norm())
        .fold(0.0, f64::max)
}

/// Residual of candidate voltages against the load-flow equations, with the
/// currents recovered through `Y_LL` (`i = Y_LL (v - v0*1)`), avoiding any
/// fresh inversion.
pub fn pf_residual(
    z: &ImpedanceMatrix,
    s: &LoadVector,
    v0: f64,
    v: &DVector<Complex64>,
) -> Result<f64> {
    if s.len() != z.n() {
        return Err(Error::DimensionMismatch { expected: z.n(), actual: s.len() });
    }
    if v.len() != z.n() {
        return Err(Error::DimensionMismatch { expected: z.n(), actual: v.len() });
    }
    let dv = v - DVector::from_element(z.n(), Complex64::new(v0, 0.0));
    let i = z.y_ll() * dv;
    Ok(power_residual(v, &i, s))
}
