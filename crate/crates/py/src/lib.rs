//! Python bindings for the gridcert core: network parsing, the certificate
//! family, the fixed-point solver, and the boundary tooling.
//!
//! The module mirrors the Rust API with plain Python types: complex numbers
//! map to `complex`, vectors to lists, and verdicts/samples to small classes.

use gridcert_core as core;
use nalgebra::DVector;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py_err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_norm(norm: &str) -> PyResult<core::Norm> {
    match norm {
        "2" => Ok(core::Norm::Two),
        "inf" => Ok(core::Norm::Inf),
        other => Err(PyValueError::new_err(format!(
            "unknown norm '{other}' (expected '2' or 'inf')"
        ))),
    }
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<nalgebra::DMatrix<Complex64>> {
    let nr = rows.len();
    if nr == 0 {
        return Err(PyValueError::new_err("matrix must be nonempty"));
    }
    let nc = rows[0].len();
    if rows.iter().any(|r| r.len() != nc) {
        return Err(PyValueError::new_err("matrix rows have unequal lengths"));
    }
    Ok(nalgebra::DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

#[pyclass(name = "Network")]
struct PyNetwork {
    inner: core::Network,
}

#[pymethods]
impl PyNetwork {
    /// Parse a network from a JSON document string.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyNetwork { inner: core::parse_network(text).map_err(to_py_err)? })
    }

    /// Parse a network from a JSON document file.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyValueError::new_err(format!("cannot read {path}: {e}")))?;
        Self::from_json(&text)
    }

    #[getter]
    fn v0(&self) -> f64 {
        self.inner.v0()
    }

    #[getter]
    fn n_load_buses(&self) -> usize {
        self.inner.n_load_buses()
    }

    fn impedance(&self) -> PyResult<PyImpedanceMatrix> {
        Ok(PyImpedanceMatrix { inner: self.inner.impedance().map_err(to_py_err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(v0={}, load_buses={})",
            self.inner.v0(),
            self.inner.n_load_buses()
        )
    }
}

#[pyclass(name = "ImpedanceMatrix", skip_from_py_object)]
#[derive(Clone)]
struct PyImpedanceMatrix {
    inner: core::ImpedanceMatrix,
}

#[pymethods]
impl PyImpedanceMatrix {
    /// Wrap a literal impedance matrix given as nested lists of complex.
    #[staticmethod]
    fn from_entries(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let m = matrix_from_rows(rows)?;
        let order = (1..=m.nrows()).collect();
        Ok(PyImpedanceMatrix {
            inner: core::ImpedanceMatrix::from_matrix(m, order).map_err(to_py_err)?,
        })
    }

    fn entries(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.entries();
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }

    fn bus_order(&self) -> Vec<usize> {
        self.inner.bus_order().to_vec()
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn nuclear_norm_2(&self) -> f64 {
        self.inner.nuclear_norm_2()
    }

    fn nuclear_norm_inf(&self) -> f64 {
        self.inner.nuclear_norm_inf()
    }

    fn __repr__(&self) -> String {
        format!("ImpedanceMatrix(n={})", self.inner.n())
    }
}

#[pyclass(name = "LoadVector", skip_from_py_object)]
#[derive(Clone)]
struct PyLoadVector {
    inner: core::LoadVector,
}

#[pymethods]
impl PyLoadVector {
    /// Consumption-positive (P, Q) pairs, one per load bus.
    #[staticmethod]
    fn from_consumption(pq: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(PyLoadVector { inner: core::LoadVector::from_consumption(&pq).map_err(to_py_err)? })
    }

    /// Injection-positive complex powers (loads negative).
    #[staticmethod]
    fn from_injections(s: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyLoadVector { inner: core::LoadVector::from_injections(s).map_err(to_py_err)? })
    }

    fn injections(&self) -> Vec<Complex64> {
        self.inner.injections().iter().copied().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "ScalingMatrix", from_py_object)]
#[derive(Clone)]
struct PyScalingMatrix {
    inner: core::ScalingMatrix,
}

#[pymethods]
impl PyScalingMatrix {
    #[new]
    fn new(diagonal: Vec<f64>) -> PyResult<Self> {
        Ok(PyScalingMatrix { inner: core::ScalingMatrix::new(diagonal).map_err(to_py_err)? })
    }

    fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal().iter().copied().collect()
    }
}

#[pyclass(name = "LoadPattern", skip_from_py_object)]
#[derive(Clone)]
struct PyLoadPattern {
    inner: core::LoadPattern,
}

#[pymethods]
impl PyLoadPattern {
    #[new]
    fn new(weights_p: Vec<f64>, weights_q: Vec<f64>) -> PyResult<Self> {
        Ok(PyLoadPattern {
            inner: core::LoadPattern::new(weights_p, weights_q).map_err(to_py_err)?,
        })
    }

    /// Unit weights on `n` buses.
    #[staticmethod]
    fn uniform(n: usize) -> Self {
        PyLoadPattern { inner: core::LoadPattern::uniform(n) }
    }

    fn load_at(&self, p: f64, q: f64) -> PyLoadVector {
        PyLoadVector { inner: self.inner.load_at(p, q) }
    }
}

#[pyclass(name = "Verdict")]
struct PyVerdict {
    #[pyo3(get)]
    certified: bool,
    #[pyo3(get)]
    criterion: String,
    #[pyo3(get)]
    margin: f64,
}

impl From<core::CertificateVerdict> for PyVerdict {
    fn from(v: core::CertificateVerdict) -> Self {
        PyVerdict {
            certified: v.certified,
            criterion: v.criterion.as_str().to_string(),
            margin: v.margin,
        }
    }
}

#[pymethods]
impl PyVerdict {
    fn __repr__(&self) -> String {
        format!(
            "Verdict(criterion='{}', certified={}, margin={})",
            self.criterion,
            if self.certified { "True" } else { "False" },
            self.margin
        )
    }
}

#[pyclass(name = "Rhombus")]
struct PyRhombus {
    inner: core::Rhombus,
}

#[pymethods]
impl PyRhombus {
    fn s_max(&self) -> Vec<f64> {
        self.inner.s_max().iter().copied().collect()
    }
}

#[pyclass(name = "Solution")]
struct PySolution {
    #[pyo3(get)]
    residual: f64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    iterations: usize,
    v: Vec<Complex64>,
    i: Vec<Complex64>,
}

#[pymethods]
impl PySolution {
    fn v(&self) -> Vec<Complex64> {
        self.v.clone()
    }

    fn i(&self) -> Vec<Complex64> {
        self.i.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(converged={}, residual={}, iterations={})",
            if self.converged { "True" } else { "False" },
            self.residual,
            self.iterations
        )
    }
}

impl From<core::PFSolution> for PySolution {
    fn from(sol: core::PFSolution) -> Self {
        PySolution {
            residual: sol.residual,
            converged: sol.converged,
            iterations: sol.state.iteration,
            v: sol.v.iter().copied().collect(),
            i: sol.i.iter().copied().collect(),
        }
    }
}

#[pyclass(name = "BoundarySample")]
struct PyBoundarySample {
    #[pyo3(get)]
    direction: (f64, f64),
    #[pyo3(get)]
    t_star: f64,
    #[pyo3(get)]
    method: String,
    #[pyo3(get)]
    unbounded: bool,
    #[pyo3(get)]
    bracket_width: f64,
}

#[pymethods]
impl PyBoundarySample {
    #[getter]
    fn angle(&self) -> f64 {
        self.direction.1.atan2(self.direction.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "BoundarySample(method='{}', angle={}, t_star={})",
            self.method,
            self.angle(),
            self.t_star
        )
    }
}

impl From<core::BoundarySample> for PyBoundarySample {
    fn from(s: core::BoundarySample) -> Self {
        PyBoundarySample {
            direction: (s.direction[0], s.direction[1]),
            t_star: s.t_star,
            method: s.method.as_str().to_string(),
            unbounded: s.unbounded,
            bracket_width: s.bracket_width,
        }
    }
}

#[pyclass(name = "PvCurve")]
struct PyPvCurve {
    #[pyo3(get)]
    points: Vec<(f64, f64)>,
    #[pyo3(get)]
    nose_p: Option<f64>,
    #[pyo3(get)]
    certificate_p: Option<f64>,
}

#[pyfunction]
fn nuclear_norm_2(rows: Vec<Vec<Complex64>>) -> PyResult<f64> {
    Ok(core::nuclear_norm_2(&matrix_from_rows(rows)?))
}

#[pyfunction]
fn nuclear_norm_inf(rows: Vec<Vec<Complex64>>) -> PyResult<f64> {
    Ok(core::nuclear_norm_inf(&matrix_from_rows(rows)?))
}

#[pyfunction]
fn certify_base(
    z: &PyImpedanceMatrix,
    s: &PyLoadVector,
    v0: f64,
    norm: &str,
) -> PyResult<PyVerdict> {
    core::certify_base(&z.inner, &s.inner, v0, parse_norm(norm)?)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn certify_rescaled(
    z: &PyImpedanceMatrix,
    s: &PyLoadVector,
    v0: f64,
    lam: &PyScalingMatrix,
    norm: &str,
) -> PyResult<PyVerdict> {
    core::certify_rescaled(&z.inner, &s.inner, v0, &lam.inner, parse_norm(norm)?)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn rhombus(z: &PyImpedanceMatrix, v0: f64) -> PyResult<PyRhombus> {
    Ok(PyRhombus { inner: core::rhombus(&z.inner, v0).map_err(to_py_err)? })
}

#[pyfunction]
fn certify_hull(rh: &PyRhombus, s: &PyLoadVector) -> PyResult<PyVerdict> {
    core::certify_hull(&rh.inner, &s.inner)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn lambda_grid(lo: f64, hi: f64, points_per_axis: usize, n: usize) -> PyResult<Vec<PyScalingMatrix>> {
    Ok(core::lambda_grid(lo, hi, points_per_axis, n)
        .map_err(to_py_err)?
        .into_iter()
        .map(|inner| PyScalingMatrix { inner })
        .collect())
}

#[pyfunction]
fn apply_map(
    z: &PyImpedanceMatrix,
    s: &PyLoadVector,
    v0: f64,
    f: Vec<Complex64>,
) -> Vec<Complex64> {
    core::apply_map(&z.inner, &s.inner, v0, &DVector::from_vec(f))
        .iter()
        .copied()
        .collect()
}

#[pyfunction]
#[pyo3(signature = (z, s, v0, tol = 1e-10, max_iter = 1000))]
fn solve_fixed_point(
    z: &PyImpedanceMatrix,
    s: &PyLoadVector,
    v0: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<PySolution> {
    core::solve_fixed_point(&z.inner, &s.inner, v0, tol, max_iter)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn pf_residual(
    z: &PyImpedanceMatrix,
    s: &PyLoadVector,
    v0: f64,
    v: Vec<Complex64>,
) -> PyResult<f64> {
    core::pf_residual(&z.inner, &s.inner, v0, &DVector::from_vec(v)).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (z, v0, pattern, direction, t_hi = 1.0, tol = 1e-6))]
fn oracle_t_star(
    z: &PyImpedanceMatrix,
    v0: f64,
    pattern: &PyLoadPattern,
    direction: (f64, f64),
    t_hi: f64,
    tol: f64,
) -> PyResult<PyBoundarySample> {
    let ray = core::RaySpec::new(pattern.inner.clone(), [direction.0, direction.1])
        .map_err(to_py_err)?;
    core::oracle_t_star(&z.inner, v0, &ray, t_hi, tol)
        .map(Into::into)
        .map_err(to_py_err)
}

fn certificate_kind(method: &str, lam: Option<&PyScalingMatrix>) -> PyResult<core::CertificateKind> {
    Ok(match method {
        "hull" => core::CertificateKind::Hull,
        "base2" => core::CertificateKind::Base(core::Norm::Two),
        "base_inf" | "baseinf" => core::CertificateKind::Base(core::Norm::Inf),
        "rescaled_2" | "rescaled_inf" => {
            let lam = lam.ok_or_else(|| {
                PyValueError::new_err("rescaled methods need a ScalingMatrix argument")
            })?;
            let norm = if method == "rescaled_2" { core::Norm::Two } else { core::Norm::Inf };
            core::CertificateKind::Rescaled(lam.inner.clone(), norm)
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method '{other}' (expected hull, base2, base_inf, rescaled_2, rescaled_inf)"
            )))
        }
    })
}

#[pyfunction]
#[pyo3(signature = (z, v0, pattern, direction, method, lam = None))]
fn certificate_t_star(
    z: &PyImpedanceMatrix,
    v0: f64,
    pattern: &PyLoadPattern,
    direction: (f64, f64),
    method: &str,
    lam: Option<&PyScalingMatrix>,
) -> PyResult<PyBoundarySample> {
    let ray = core::RaySpec::new(pattern.inner.clone(), [direction.0, direction.1])
        .map_err(to_py_err)?;
    core::certificate_t_star(&z.inner, v0, &ray, &certificate_kind(method, lam)?)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (z, v0, pattern, n_rays, method, lam = None, full_circle = false, t_hi = 1.0, tol = 1e-6))]
#[allow(clippy::too_many_arguments)]
fn sweep_boundary(
    z: &PyImpedanceMatrix,
    v0: f64,
    pattern: &PyLoadPattern,
    n_rays: usize,
    method: &str,
    lam: Option<&PyScalingMatrix>,
    full_circle: bool,
    t_hi: f64,
    tol: f64,
) -> PyResult<Vec<PyBoundarySample>> {
    let probe = if method == "oracle" {
        core::ProbeMethod::Oracle { t_hi, tol }
    } else {
        core::ProbeMethod::Certificate(certificate_kind(method, lam)?)
    };
    let arc = if full_circle { core::SweepArc::FullCircle } else { core::SweepArc::FirstQuadrant };
    Ok(core::sweep_boundary(&z.inner, v0, &pattern.inner, n_rays, &probe, arc)
        .map_err(to_py_err)?
        .into_iter()
        .map(Into::into)
        .collect())
}

#[pyfunction]
fn lambda_union_samples(
    z: &PyImpedanceMatrix,
    v0: f64,
    pattern: &PyLoadPattern,
    grid: Vec<PyScalingMatrix>,
    norm: &str,
    n_rays: usize,
) -> PyResult<Vec<(usize, Vec<PyBoundarySample>)>> {
    let grid: Vec<core::ScalingMatrix> = grid.into_iter().map(|g| g.inner).collect();
    Ok(
        core::lambda_union_samples(&z.inner, v0, &pattern.inner, &grid, parse_norm(norm)?, n_rays)
            .map_err(to_py_err)?
            .into_iter()
            .map(|poly| {
                (
                    poly.lambda_index,
                    poly.samples.into_iter().map(Into::into).collect(),
                )
            })
            .collect(),
    )
}

#[pyfunction]
#[pyo3(signature = (z, v0, pattern, q_fixed, p_max_hint, n_points, watch_bus))]
fn pv_curve(
    z: &PyImpedanceMatrix,
    v0: f64,
    pattern: &PyLoadPattern,
    q_fixed: f64,
    p_max_hint: f64,
    n_points: usize,
    watch_bus: usize,
) -> PyResult<PyPvCurve> {
    let curve = core::pv_curve(&z.inner, v0, &pattern.inner, q_fixed, p_max_hint, n_points, watch_bus)
        .map_err(to_py_err)?;
    Ok(PyPvCurve {
        points: curve.points,
        nose_p: curve.nose_p,
        certificate_p: curve.certificate_p,
    })
}

#[pyfunction]
fn parse_loads_csv(text: &str, n: usize) -> PyResult<PyLoadVector> {
    Ok(PyLoadVector { inner: core::io::parse_loads_csv(text, n).map_err(to_py_err)? })
}

#[pyfunction]
fn parse_pattern_csv(text: &str, n: usize) -> PyResult<PyLoadPattern> {
    Ok(PyLoadPattern { inner: core::io::parse_pattern_csv(text, n).map_err(to_py_err)? })
}

#[pymodule]
fn gridcert_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyImpedanceMatrix>()?;
    m.add_class::<PyLoadVector>()?;
    m.add_class::<PyScalingMatrix>()?;
    m.add_class::<PyLoadPattern>()?;
    m.add_class::<PyVerdict>()?;
    m.add_class::<PyRhombus>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyBoundarySample>()?;
    m.add_class::<PyPvCurve>()?;

    m.add_function(wrap_pyfunction!(nuclear_norm_2, m)?)?;
    m.add_function(wrap_pyfunction!(nuclear_norm_inf, m)?)?;
    m.add_function(wrap_pyfunction!(certify_base, m)?)?;
    m.add_function(wrap_pyfunction!(certify_rescaled, m)?)?;
    m.add_function(wrap_pyfunction!(rhombus, m)?)?;
    m.add_function(wrap_pyfunction!(certify_hull, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_grid, m)?)?;
    m.add_function(wrap_pyfunction!(apply_map, m)?)?;
    m.add_function(wrap_pyfunction!(solve_fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(pf_residual, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_t_star, m)?)?;
    m.add_function(wrap_pyfunction!(certificate_t_star, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_union_samples, m)?)?;
    m.add_function(wrap_pyfunction!(pv_curve, m)?)?;
    m.add_function(wrap_pyfunction!(parse_loads_csv, m)?)?;
    m.add_function(wrap_pyfunction!(parse_pattern_csv, m)?)?;
    Ok(())
}
