//! Solvability certificates and boundary tooling for distribution-grid
//! load flow.
//!
//! The crate answers one question several ways: given a radial network and a
//! complex load vector, does the load-flow problem provably have a solution?
//!
//! * [`netmodel`] parses network documents, assembles the nodal admittance
//!   matrix, and exposes the load-bus impedance matrix `Z`.
//! * [`certificates`] evaluates the algebraic sufficient conditions: the
//!   base norm criteria, their rescaled family, and the cross-polytope hull
//!   criterion that envelopes the family.
//! * [`pfsolver`] is the constructive side: the fixed-point iteration whose
//!   convergence the certificates guarantee.
//! * [`boundary`] compares certificate boundaries against a numerically
//!   bracketed true boundary along rays, sweeps scaling grids, and traces
//!   PV curves.
//! * [`io`] defines the CSV interchange formats used by the CLI.

pub mod boundary;
pub mod certificates;
pub mod error;
pub mod io;
pub mod netmodel;
pub mod pfsolver;

pub use boundary::{
    certificate_t_star, lambda_union_samples, oracle_t_star, pv_curve, sweep_boundary,
    union_envelope, BoundaryMethod, BoundarySample, CertificateKind, LambdaPolyline, LoadPattern,
    ProbeMethod, PvCurve, RaySpec, SweepArc,
};
pub use certificates::{
    certify_base, certify_hull, certify_rescaled, lambda_grid, nuclear_norm_2, nuclear_norm_inf,
    rhombus, CertificateVerdict, Criterion, LoadVector, Norm, Rhombus, ScalingMatrix,
};
pub use error::{Error, Result};
pub use netmodel::{
    build_admittance, impedance_submatrix, parse_network, Bus, ImpedanceMatrix, Line, Network,
};
pub use pfsolver::{
    apply_map, pf_residual, solve_fixed_point, solve_fixed_point_damped, FixedPointState,
    PFSolution, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
