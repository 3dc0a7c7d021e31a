//! Numerical approximation of the true solvability boundary and its
//! comparison against the certificate boundaries.
//!
//! Loads are projected onto a 2-D `(P, Q)` plane through a fixed per-bus
//! weight pattern: a plane point `(P, Q)` maps to the consumption
//! `s_k = P w_p[k] + j Q w_q[k]`. Along a ray `t * (dP, dQ)` every
//! certificate boundary has a closed form (the criteria are homogeneous of
//! degree one in `t`), while the true boundary is bracketed by warm-started
//! continuation of the fixed-point solver plus bisection, with a damped
//! iteration fallback near the nose. "Unsolvable" therefore means the damped
//! fixed-point iteration fails, which can only under-estimate the true
//! boundary; the certificates stay inside it either way.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::certificates::{rhombus, LoadVector, Norm, ScalingMatrix};
use crate::error::{Error, Result};
use crate::netmodel::ImpedanceMatrix;
use crate::pfsolver::{solve_fixed_point_damped, PFSolution, DEFAULT_TOL};

/// Iteration cap for boundary probes; larger than the plain solver default
/// so the operational boundary tracks the certificate boundary to well
/// below the bisection tolerance even where the two touch.
pub const ORACLE_MAX_ITER: usize = 10_000;
/// Relaxation factor of the damped fallback iteration.
pub const ORACLE_DAMPING: f64 = 0.5;
/// Doubling the upper bracket stops here; beyond it a ray is reported
/// unbounded.
pub const T_HI_LIMIT: f64 = 1_048_576.0; // 2^20
/// Number of continuation steps used to march toward the upper bracket.
pub const CONTINUATION_STEPS: f64 = 200.0;
/// Default starting upper bracket and bisection tolerance.
pub const DEFAULT_T_HI: f64 = 1.0;
pub const DEFAULT_BISECT_TOL: f64 = 1e-6;

/// Per-bus weights mapping a scalar `(P, Q)` onto a full load vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadPattern {
    weights_p: Vec<f64>,
    weights_q: Vec<f64>,
}

impl LoadPattern {
    pub fn new(weights_p: Vec<f64>, weights_q: Vec<f64>) -> Result<Self> {
        if weights_p.len() != weights_q.len() {
            return Err(Error::DimensionMismatch {
                expected: weights_p.len(),
                actual: weights_q.len(),
            });
        }
        if weights_p.is_empty() {
            return Err(Error::InvalidArgument("load pattern is empty".into()));
        }
        if weights_p
            .iter()
            .chain(weights_q.iter())
            .any(|w| !w.is_finite())
        {
            return Err(Error::InvalidArgument("load pattern has non-finite weights".into()));
        }
        if weights_p.iter().chain(weights_q.iter()).all(|&w| w == 0.0) {
            return Err(Error::InvalidArgument("load pattern has no nonzero weight".into()));
        }
        Ok(LoadPattern { weights_p, weights_q })
    }

    /// Uniform pattern `w_p = w_q = 1` on `n` buses.
    pub fn uniform(n: usize) -> Self {
        LoadPattern { weights_p: vec![1.0; n], weights_q: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.weights_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights_p.is_empty()
    }

    pub fn weights_p(&self) -> &[f64] {
        &self.weights_p
    }

    pub fn weights_q(&self) -> &[f64] {
        &self.weights_q
    }

    /// Load vector at plane point `(p, q)` (consumption positive), converted
    /// to the internal injection convention.
    pub fn load_at(&self, p: f64, q: f64) -> LoadVector {
        LoadVector::from_injections(
            self.weights_p
                .iter()
                .zip(self.weights_q.iter())
                .map(|(&wp, &wq)| Complex64::new(-p * wp, -q * wq))
                .collect(),
        )
        .expect("finite weights produce finite loads")
    }

    /// Per-bus complex direction loads `dP w_p[k] + j dQ w_q[k]`
    /// (consumption side) for a unit plane direction.
    fn direction_loads(&self, direction: [f64; 2]) -> Vec<Complex64> {
        self.weights_p
            .iter()
            .zip(self.weights_q.iter())
            .map(|(&wp, &wq)| Complex64::new(direction[0] * wp, direction[1] * wq))
            .collect()
    }
}

/// A load pattern together with a unit direction in the projection plane.
#[derive(Debug, Clone)]
pub struct RaySpec {
    pub pattern: LoadPattern,
    direction: [f64; 2],
}

impl RaySpec {
    pub fn new(pattern: LoadPattern, direction: [f64; 2]) -> Result<Self> {
        let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "ray direction must be a nonzero finite vector".into(),
            ));
        }
        Ok(RaySpec {
            pattern,
            direction: [direction[0] / norm, direction[1] / norm],
        })
    }

    pub fn from_angle(pattern: LoadPattern, theta: f64) -> Result<Self> {
        Self::new(pattern, [theta.cos(), theta.sin()])
    }

    pub fn direction(&self) -> [f64; 2] {
        self.direction
    }

    pub fn angle(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }
}

/// How a boundary sample was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMethod {
    Oracle,
    Hull,
    Base2,
    BaseInf,
    Rescaled,
}

impl BoundaryMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryMethod::Oracle => "oracle",
            BoundaryMethod::Hull => "hull",
            BoundaryMethod::Base2 => "base2",
            BoundaryMethod::BaseInf => "base_inf",
            BoundaryMethod::Rescaled => "rescaled",
        }
    }
}

/// Critical scaling along one ray. For the oracle, `bracket_width` is the
/// final bisection bracket (solvable at `t_star`, unsolvable at
/// `t_star + bracket_width`); closed-form methods report zero width.
#[derive(Debug, Clone)]
pub struct BoundarySample {
    pub direction: [f64; 2],
    pub t_star: f64,
    pub method: BoundaryMethod,
    pub unbounded: bool,
    pub bracket_width: f64,
}

impl BoundarySample {
    pub fn angle(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }
}

/// Certificate selector for closed-form boundary evaluation.
#[derive(Debug, Clone)]
pub enum CertificateKind {
    Base(Norm),
    Rescaled(ScalingMatrix, Norm),
    Hull,
}

/// Boundary probe selector for sweeps.
#[derive(Debug, Clone)]
pub enum ProbeMethod {
    Oracle { t_hi: f64, tol: f64 },
    Certificate(CertificateKind),
}

/// Angular extent of a sweep in the `(P, Q)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepArc {
    FirstQuadrant,
    FullCircle,
}

fn check_pattern(z: &ImpedanceMatrix, pattern: &LoadPattern) -> Result<()> {
    if pattern.len() != z.n() {
        return Err(Error::DimensionMismatch { expected: z.n(), actual: pattern.len() });
    }
    Ok(())
}

/// Warm-started solve with a damped fallback; `None` means unsolvable by
/// this procedure.
fn converged_solution(
    z: &ImpedanceMatrix,
    v0: f64,
    s: &LoadVector,
    warm: &DVector<Complex64>,
) -> Option<PFSolution> {
    let sol = solve_fixed_point_damped(z, s, v0, warm, DEFAULT_TOL, ORACLE_MAX_ITER, 1.0)
        .expect("inputs validated by caller");
    if sol.converged {
        return Some(sol);
    }
    let sol = solve_fixed_point_damped(z, s, v0, warm, DEFAULT_TOL, ORACLE_MAX_ITER, ORACLE_DAMPING)
        .expect("inputs validated by caller");
    if sol.converged {
        Some(sol)
    } else {
        None
    }
}

/// Brackets the critical scaling `t*` along a ray by warm-started
/// continuation plus bisection.
///
/// The march ascends from the last solvable point, so every recorded failure
/// lies above every recorded success and the bisection keeps the smallest
/// observed failure as its upper bracket. If doubling the upper bound past
/// [`T_HI_LIMIT`] never produces a failure the ray is flagged unbounded.
pub fn oracle_t_star(
    z: &ImpedanceMatrix,
    v0: f64,
    ray: &RaySpec,
    t_hi: f64,
    tol: f64,
) -> Result<BoundarySample> {
    check_pattern(z, &ray.pattern)?;
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(Error::InvalidArgument(format!("v0 must be positive, got {v0}")));
    }
    if !(t_hi > 0.0) || !t_hi.is_finite() {
        return Err(Error::InvalidArgument(format!("t_hi must be positive, got {t_hi}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("bisection tol must be positive".into()));
    }
    let w = ray.pattern.direction_loads(ray.direction);
    if w.iter().all(|e| e.norm() == 0.0) {
        return Err(Error::InvalidArgument("projected load is zero along this ray".into()));
    }
    // injected load per unit of t
    let w_inj: Vec<Complex64> = w.iter().map(|e| -e).collect();
    let load_at = |t: f64| -> LoadVector {
        LoadVector::from_injections(w_inj.iter().map(|e| e * t).collect()).expect("finite")
    };

    let mut t_ok = 0.0;
    let mut f_ok = DVector::zeros(z.n());
    let mut hi = t_hi;

    let mut t_fail = loop {
        let step = hi / CONTINUATION_STEPS;
        let mut failure = None;
        let mut t = t_ok;
        while t < hi {
            let t_next = (t + step).min(hi);
            match converged_solution(z, v0, &load_at(t_next), &f_ok) {
                Some(sol) => {
                    t_ok = t_next;
                    f_ok = sol.state.f;
                }
                None => {
                    failure = Some(t_next);
                    break;
                }
            }
            t = t_next;
        }
        if let Some(tf) = failure {
            break tf;
        }
        if hi >= T_HI_LIMIT {
            return Ok(BoundarySample {
                direction: ray.direction,
                t_star: f64::INFINITY,
                method: BoundaryMethod::Oracle,
                unbounded: true,
                bracket_width: 0.0,
            });
        }
        hi *= 2.0;
    };

    let mut guard = 0;
    while t_fail - t_ok > tol && guard < 200 {
        guard += 1;
        let mid = 0.5 * (t_ok + t_fail);
        match converged_solution(z, v0, &load_at(mid), &f_ok) {
            Some(sol) => {
                t_ok = mid;
                f_ok = sol.state.f;
            }
            None => t_fail = mid,
        }
    }

    Ok(BoundarySample {
        direction: ray.direction,
        t_star: t_ok,
        method: BoundaryMethod::Oracle,
        unbounded: false,
        bracket_width: t_fail - t_ok,
    })
}

/// Closed-form critical scaling of a certificate along a ray. All criteria
/// are positively homogeneous of degree one in `t`, so the boundary crossing
/// is explicit; e.g. for the hull criterion
/// `t* = 1 / sum_k (|w_k| / s_max_k)`.
pub fn certificate_t_star(
    z: &ImpedanceMatrix,
    v0: f64,
    ray: &RaySpec,
    kind: &CertificateKind,
) -> Result<BoundarySample> {
    check_pattern(z, &ray.pattern)?;
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(Error::InvalidArgument(format!("v0 must be positive, got {v0}")));
    }
    let w = ray.pattern.direction_loads(ray.direction);
    if w.iter().all(|e| e.norm() == 0.0) {
        return Err(Error::InvalidArgument("projected load is zero along this ray".into()));
    }

    let (t_star, method) = match kind {
        CertificateKind::Hull => {
            let rh = rhombus(z, v0)?;
            let denom: f64 = w
                .iter()
                .zip(rh.s_max().iter())
                .map(|(e, &m)| e.norm() / m)
                .sum();
            (1.0 / denom, BoundaryMethod::Hull)
        }
        CertificateKind::Base(norm) => {
            let mat = match norm {
                Norm::Two => z.nuclear_norm_2(),
                Norm::Inf => z.nuclear_norm_inf(),
            };
            let vec = vector_norm_of(&w, *norm);
            let method = match norm {
                Norm::Two => BoundaryMethod::Base2,
                Norm::Inf => BoundaryMethod::BaseInf,
            };
            (v0 * v0 / (4.0 * mat * vec), method)
        }
        CertificateKind::Rescaled(lambda, norm) => {
            if lambda.len() != z.n() {
                return Err(Error::DimensionMismatch { expected: z.n(), actual: lambda.len() });
            }
            let zl = lambda.scale_columns(z.entries());
            let mat = match norm {
                Norm::Two => crate::certificates::nuclear_norm_2(&zl),
                Norm::Inf => crate::certificates::nuclear_norm_inf(&zl),
            };
            let scaled: Vec<Complex64> = w
                .iter()
                .zip(lambda.diagonal().iter())
                .map(|(e, &l)| e / l)
                .collect();
            let vec = vector_norm_of(&scaled, *norm);
            (v0 * v0 / (4.0 * mat * vec), BoundaryMethod::Rescaled)
        }
    };

    Ok(BoundarySample {
        direction: ray.direction,
        t_star,
        method,
        unbounded: false,
        bracket_width: 0.0,
    })
}

fn vector_norm_of(w: &[Complex64], norm: Norm) -> f64 {
    match norm {
        Norm::Two => w.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt(),
        Norm::Inf => w.iter().map(|e| e.norm()).sum(),
    }
}

/// Uniformly spaced sweep angles. The first-quadrant sweep includes both
/// axes; the full circle omits the duplicate endpoint at `2 pi`.
pub fn sweep_angles(n_rays: usize, arc: SweepArc) -> Result<Vec<f64>> {
    if n_rays < 2 {
        return Err(Error::InvalidArgument("need at least 2 rays".into()));
    }
    Ok(match arc {
        SweepArc::FirstQuadrant => (0..n_rays)
            .map(|i| std::f64::consts::FRAC_PI_2 * i as f64 / (n_rays - 1) as f64)
            .collect(),
        SweepArc::FullCircle => (0..n_rays)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_rays as f64)
            .collect(),
    })
}

/// Samples one boundary method along uniformly spaced rays. Rays are
/// independent work units; the output order follows the angle order
/// regardless of scheduling.
pub fn sweep_boundary(
    z: &ImpedanceMatrix,
    v0: f64,
    pattern: &LoadPattern,
    n_rays: usize,
    method: &ProbeMethod,
    arc: SweepArc,
) -> Result<Vec<BoundarySample>> {
    check_pattern(z, pattern)?;
    let angles = sweep_angles(n_rays, arc)?;
    angles
        .par_iter()
        .map(|&theta| {
            let ray = RaySpec::from_angle(pattern.clone(), theta)?;
            match method {
                ProbeMethod::Oracle { t_hi, tol } => oracle_t_star(z, v0, &ray, *t_hi, *tol),
                ProbeMethod::Certificate(kind) => certificate_t_star(z, v0, &ray, kind),
            }
        })
        .collect()
}

/// Closed-form rescaled-criterion boundary for one scaling matrix, sampled
/// along the shared first-quadrant ray set.
#[derive(Debug, Clone)]
pub struct LambdaPolyline {
    pub lambda_index: usize,
    pub samples: Vec<BoundarySample>,
}

/// Rescaled-criterion boundaries for a whole grid of scalings; the per-ray
/// maximum over the grid is the empirical union envelope.
pub fn lambda_union_samples(
    z: &ImpedanceMatrix,
    v0: f64,
    pattern: &LoadPattern,
    grid: &[ScalingMatrix],
    norm: Norm,
    n_rays: usize,
) -> Result<Vec<LambdaPolyline>> {
    check_pattern(z, pattern)?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("scaling grid is empty".into()));
    }
    let angles = sweep_angles(n_rays, SweepArc::FirstQuadrant)?;
    grid.par_iter()
        .enumerate()
        .map(|(lambda_index, lambda)| {
            let kind = CertificateKind::Rescaled(lambda.clone(), norm);
            let samples = angles
                .iter()
                .map(|&theta| {
                    let ray = RaySpec::from_angle(pattern.clone(), theta)?;
                    certificate_t_star(z, v0, &ray, &kind)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LambdaPolyline { lambda_index, samples })
        })
        .collect()
}

/// Per-ray maximum of `t*` over the polylines.
pub fn union_envelope(polylines: &[LambdaPolyline]) -> Result<Vec<f64>> {
    let first = polylines
        .first()
        .ok_or_else(|| Error::InvalidArgument("no polylines".into()))?;
    let n = first.samples.len();
    let mut envelope = vec![f64::NEG_INFINITY; n];
    for poly in polylines {
        if poly.samples.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: poly.samples.len() });
        }
        for (e, s) in envelope.iter_mut().zip(poly.samples.iter()) {
            *e = e.max(s.t_star);
        }
    }
    Ok(envelope)
}

/// Voltage-vs-active-power curve at fixed reactive power.
#[derive(Debug, Clone)]
pub struct PvCurve {
    /// `(P, |v_watch|)` samples up to the last converged point.
    pub points: Vec<(f64, f64)>,
    /// Last `P` at which the solver converged, if any.
    pub nose_p: Option<f64>,
    /// Where the hull certificate stops certifying along the same fixed-Q
    /// line, if it certifies at `P = 0` at all.
    pub certificate_p: Option<f64>,
}

/// Marches `P` from zero toward the nose at fixed `Q`, warm-starting each
/// solve from the previous one and stopping at the first failure.
pub fn pv_curve(
    z: &ImpedanceMatrix,
    v0: f64,
    pattern: &LoadPattern,
    q_fixed: f64,
    p_max_hint: f64,
    n_points: usize,
    watch_bus: usize,
) -> Result<PvCurve> {
    check_pattern(z, pattern)?;
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(Error::InvalidArgument(format!("v0 must be positive, got {v0}")));
    }
    if !q_fixed.is_finite() {
        return Err(Error::InvalidArgument("q_fixed must be finite".into()));
    }
    if n_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 points".into()));
    }
    if !(p_max_hint > 0.0) || !p_max_hint.is_finite() {
        return Err(Error::InvalidArgument("p_max_hint must be positive".into()));
    }
    if watch_bus >= z.n() {
        return Err(Error::InvalidArgument(format!(
            "watch bus index {watch_bus} out of range for {} load buses",
            z.n()
        )));
    }

    let mut points = Vec::with_capacity(n_points);
    let mut warm = DVector::zeros(z.n());
    let mut nose_p = None;
    for j in 0..n_points {
        let p = p_max_hint * j as f64 / (n_points - 1) as f64;
        let s = pattern.load_at(p, q_fixed);
        match converged_solution(z, v0, &s, &warm) {
            Some(sol) => {
                points.push((p, sol.v[watch_bus].norm()));
                warm = sol.state.f;
                nose_p = Some(p);
            }
            None => break,
        }
    }

    let certificate_p = hull_crossing_p(z, v0, pattern, q_fixed)?;
    Ok(PvCurve { points, nose_p, certificate_p })
}

/// Largest `P >= 0` still certified by the hull criterion on the line of
/// fixed `Q`. The hull sum is monotone nondecreasing in `P`, so a doubling
/// search plus bisection pins the crossing.
fn hull_crossing_p(
    z: &ImpedanceMatrix,
    v0: f64,
    pattern: &LoadPattern,
    q_fixed: f64,
) -> Result<Option<f64>> {
    let rh = rhombus(z, v0)?;
    let hull_sum = |p: f64| -> f64 {
        pattern
            .weights_p
            .iter()
            .zip(pattern.weights_q.iter())
            .zip(rh.s_max().iter())
            .map(|((&wp, &wq), &m)| (p * wp).hypot(q_fixed * wq) / m)
            .sum()
    };
    if hull_sum(0.0) > 1.0 {
        return Ok(None);
    }
    let mut hi = 1.0;
    let mut doubled = 0;
    while hull_sum(hi) <= 1.0 {
        hi *= 2.0;
        doubled += 1;
        if doubled > 60 {
            // all-reactive pattern: P never breaks the certificate
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hull_sum(mid) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
