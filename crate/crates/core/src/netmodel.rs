//! Network model: bus/line descriptions, nodal admittance assembly, and the
//! load-bus impedance matrix `Z = Y_LL^-1`.
//!
//! Bus 0 is always the slack bus with fixed voltage magnitude `v0`; the
//! remaining buses `1..=n` are PQ load buses. All quantities are per unit.
//!
//! The internal sign convention is *injection positive*: load consumption
//! enters as negative complex power. Certificates only see `Z` through entry
//! magnitudes and norms, so a network may alternatively supply a literal
//! impedance matrix (`z_override` in the document format) when the matrix is
//! known but the line data behind it is not.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Condition-estimate threshold above which `Y_LL` is treated as singular.
pub const SINGULARITY_COND_LIMIT: f64 = 1e12;

/// A single bus. `shunt` is the shunt admittance `g + jb`; capacitor banks
/// contribute a positive imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub shunt: Complex64,
}

/// A series branch between two buses with impedance `r + jx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r: f64,
    pub x: f64,
}

impl Line {
    pub fn impedance(&self) -> Complex64 {
        Complex64::new(self.r, self.x)
    }

    /// Series admittance `1/(r + jx)`.
    pub fn admittance(&self) -> Result<Complex64> {
        let z = self.impedance();
        if z.norm_sqr() == 0.0 {
            return Err(Error::InvalidNetwork(format!(
                "line {}-{} has zero impedance (r = x = 0)",
                self.from_bus, self.to_bus
            )));
        }
        Ok(z.inv())
    }
}

/// A validated network: contiguous bus ids `0..=n` with bus 0 as slack,
/// a connected line graph (unless a literal `Z` was supplied), and `v0 > 0`.
#[derive(Debug, Clone)]
pub struct Network {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    v0: f64,
    z_override: Option<DMatrix<Complex64>>,
}

impl Network {
    pub fn new(buses: Vec<Bus>, lines: Vec<Line>, v0: f64) -> Result<Self> {
        Self::build(buses, lines, v0, None)
    }

    /// Builds a network whose impedance matrix is the supplied `z` instead of
    /// the inverse of the assembled `Y_LL` (fixture mode). Lines may be empty
    /// here; the override defines the electrical coupling.
    pub fn with_z_override(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        v0: f64,
        z: DMatrix<Complex64>,
    ) -> Result<Self> {
        Self::build(buses, lines, v0, Some(z))
    }

    fn build(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        v0: f64,
        z_override: Option<DMatrix<Complex64>>,
    ) -> Result<Self> {
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(Error::InvalidNetwork(format!(
                "slack voltage must be positive and finite, got {v0}"
            )));
        }
        let n_buses = buses.len();
        if n_buses < 2 {
            return Err(Error::InvalidNetwork(
                "need at least one load bus besides the slack".into(),
            ));
        }

        if !buses.iter().any(|b| b.id == 0) {
            return Err(Error::InvalidNetwork("no slack bus (bus id 0)".into()));
        }
        let mut seen = vec![false; n_buses];
        for bus in &buses {
            if bus.id >= n_buses {
                return Err(Error::InvalidNetwork(format!(
                    "bus ids must be contiguous 0..{}, got id {}",
                    n_buses - 1,
                    bus.id
                )));
            }
            if seen[bus.id] {
                return Err(Error::InvalidNetwork(format!("duplicate bus id {}", bus.id)));
            }
            seen[bus.id] = true;
            if !bus.shunt.re.is_finite() || !bus.shunt.im.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "bus {} has non-finite shunt admittance",
                    bus.id
                )));
            }
        }

        for line in &lines {
            if line.from_bus == line.to_bus {
                return Err(Error::InvalidNetwork(format!(
                    "line endpoints coincide at bus {}",
                    line.from_bus
                )));
            }
            if line.from_bus >= n_buses || line.to_bus >= n_buses {
                return Err(Error::InvalidNetwork(format!(
                    "line {}-{} references a missing bus",
                    line.from_bus, line.to_bus
                )));
            }
            if !line.r.is_finite() || !line.x.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "line {}-{} has non-finite impedance",
                    line.from_bus, line.to_bus
                )));
            }
            if line.r * line.r + line.x * line.x == 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "line {}-{} has zero impedance (r = x = 0)",
                    line.from_bus, line.to_bus
                )));
            }
        }

        let n = n_buses - 1;
        if let Some(z) = &z_override {
            if z.nrows() != n || z.ncols() != n {
                return Err(Error::InvalidNetwork(format!(
                    "z_override is {}x{}, expected {n}x{n}",
                    z.nrows(),
                    z.ncols()
                )));
            }
            if z.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
                return Err(Error::InvalidNetwork("z_override has non-finite entries".into()));
            }
        } else if !connected(n_buses, &lines) {
            return Err(Error::InvalidNetwork("graph is not connected".into()));
        }

        let mut buses = buses;
        buses.sort_by_key(|b| b.id);
        Ok(Network {
            buses,
            lines,
            v0,
            z_override,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// Number of PQ load buses (total buses minus the slack).
    pub fn n_load_buses(&self) -> usize {
        self.buses.len() - 1
    }

    pub fn has_z_override(&self) -> bool {
        self.z_override.is_some()
    }

    /// Load-bus impedance matrix: the supplied override when present,
    /// otherwise the inverse of the assembled `Y_LL`.
    pub fn impedance(&self) -> Result<ImpedanceMatrix> {
        match &self.z_override {
            Some(z) => {
                let order = (1..=self.n_load_buses()).collect();
                ImpedanceMatrix::from_matrix(z.clone(), order)
            }
            None => {
                let y = build_admittance(self)?;
                impedance_submatrix(&y)
            }
        }
    }
}

fn connected(n_buses: usize, lines: &[Line]) -> bool {
    let mut adj = vec![Vec::new(); n_buses];
    for line in lines {
        adj[line.from_bus].push(line.to_bus);
        adj[line.to_bus].push(line.from_bus);
    }
    let mut visited = vec![false; n_buses];
    let mut stack = vec![0usize];
    visited[0] = true;
    while let Some(b) = stack.pop() {
        for &next in &adj[b] {
            if !visited[next] {
                visited[next] = true;
                stack.push(next);
            }
        }
    }
    visited.into_iter().all(|v| v)
}

/// Dense load-bus impedance matrix together with its inverse `Y_LL`
/// (kept for residual evaluation) and the load-bus ordering.
#[derive(Debug, Clone)]
pub struct ImpedanceMatrix {
    entries: DMatrix<Complex64>,
    y_ll: DMatrix<Complex64>,
    bus_order: Vec<usize>,
}

impl ImpedanceMatrix {
    /// Wraps a literal impedance matrix, computing `Y_LL = Z^-1`.
    pub fn from_matrix(z: DMatrix<Complex64>, bus_order: Vec<usize>) -> Result<Self> {
        if z.nrows() == 0 || z.nrows() != z.ncols() {
            return Err(Error::InvalidArgument(format!(
                "impedance matrix must be square and nonempty, got {}x{}",
                z.nrows(),
                z.ncols()
            )));
        }
        if bus_order.len() != z.nrows() {
            return Err(Error::DimensionMismatch {
                expected: z.nrows(),
                actual: bus_order.len(),
            });
        }
        let y_ll = invert_checked(&z)?;
        Ok(ImpedanceMatrix {
            entries: z,
            y_ll,
            bus_order,
        })
    }

    #[cfg(test)]
    pub(crate) fn from_parts_unchecked(
        entries: DMatrix<Complex64>,
        y_ll: DMatrix<Complex64>,
        bus_order: Vec<usize>,
    ) -> Self {
        ImpedanceMatrix { entries, y_ll, bus_order }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// The load-bus admittance submatrix `Y_LL` (inverse of `entries`).
    pub fn y_ll(&self) -> &DMatrix<Complex64> {
        &self.y_ll
    }

    pub fn bus_order(&self) -> &[usize] {
        &self.bus_order
    }

    /// Max row Euclidean norm of `Z`.
    pub fn nuclear_norm_2(&self) -> f64 {
        crate::certificates::nuclear_norm_2(&self.entries)
    }

    /// Max entrywise modulus of `Z`.
    pub fn nuclear_norm_inf(&self) -> f64 {
        crate::certificates::nuclear_norm_inf(&self.entries)
    }
}

/// Assembles the full `(n+1) x (n+1)` nodal admittance matrix:
/// `Y_hk = -1/(r + jx)` for each line `h-k`, and the diagonal collects the
/// bus shunt plus the admittances of incident lines.
pub fn build_admittance(net: &Network) -> Result<DMatrix<Complex64>> {
    let n_buses = net.buses().len();
    let mut y = DMatrix::<Complex64>::zeros(n_buses, n_buses);
    for bus in net.buses() {
        y[(bus.id, bus.id)] += bus.shunt;
    }
    for line in net.lines() {
        let adm = line.admittance()?;
        y[(line.from_bus, line.from_bus)] += adm;
        y[(line.to_bus, line.to_bus)] += adm;
        y[(line.from_bus, line.to_bus)] -= adm;
        y[(line.to_bus, line.from_bus)] -= adm;
    }
    Ok(y)
}

/// Strips the slack row/column from `Y` and inverts the remaining `Y_LL`
/// by LU with partial pivoting.
pub fn impedance_submatrix(y: &DMatrix<Complex64>) -> Result<ImpedanceMatrix> {
    if y.nrows() < 2 || y.nrows() != y.ncols() {
        return Err(Error::InvalidArgument(format!(
            "admittance matrix must be square with at least 2 buses, got {}x{}",
            y.nrows(),
            y.ncols()
        )));
    }
    let n = y.nrows() - 1;
    let y_ll = y.view((1, 1), (n, n)).into_owned();
    let z = invert_checked(&y_ll)?;
    Ok(ImpedanceMatrix {
        entries: z,
        y_ll,
        bus_order: (1..=n).collect(),
    })
}

/// Induced 1-norm (max absolute column sum).
fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|e| e.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts `m`, rejecting exactly singular matrices and matrices whose
/// condition estimate `||m||_1 * ||m^-1||_1` exceeds the singularity limit.
fn invert_checked(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("matrix is exactly singular".into()))?;
    let cond = one_norm(m) * one_norm(&inv);
    if !cond.is_finite() || cond > SINGULARITY_COND_LIMIT {
        return Err(Error::Singular(format!(
            "condition estimate {cond:.3e} exceeds {SINGULARITY_COND_LIMIT:.0e}"
        )));
    }
    Ok(inv)
}

#[derive(Deserialize)]
struct NetworkDoc {
    v0: f64,
    buses: Vec<BusDoc>,
    #[serde(default)]
    lines: Vec<LineDoc>,
    #[serde(default)]
    z_override: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Deserialize)]
struct BusDoc {
    id: usize,
    #[serde(default)]
    shunt_g: f64,
    #[serde(default)]
    shunt_b: f64,
}

#[derive(Deserialize)]
struct LineDoc {
    from: usize,
    to: usize,
    r: f64,
    x: f64,
}

/// Parses the JSON network document format.
///
/// ```json
/// {
///   "v0": 1.0,
///   "buses": [{"id": 0}, {"id": 1, "shunt_b": 0.2}],
///   "lines": [{"from": 0, "to": 1, "r": 1.0, "x": 0.0}],
///   "z_override": [[[re, im], ...], ...]   // optional fixture matrix
/// }
/// ```
pub fn parse_network(text: &str) -> Result<Network> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("network document: {e}")))?;
    let buses = doc
        .buses
        .into_iter()
        .map(|b| Bus {
            id: b.id,
            shunt: Complex64::new(b.shunt_g, b.shunt_b),
        })
        .collect();
    let lines = doc
        .lines
        .into_iter()
        .map(|l| Line {
            from_bus: l.from,
            to_bus: l.to,
            r: l.r,
            x: l.x,
        })
        .collect();
    match doc.z_override {
        Some(rows) => {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Parse("z_override rows have unequal lengths".into()));
            }
            let z = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
            Network::with_z_override(buses, lines, doc.v0, z)
        }
        None => Network::new(buses, lines, doc.v0),
    }
}

/// Impedance matrix of the 3-bus reference case (two load buses), used as a
/// shared fixture across the crate's tests and example data.
pub fn three_bus_fixture_z() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(-1.0 / 7.0, 0.0),
            Complex64::new(-1.0 / 7.0, 0.0),
            Complex64::new(-1.0 / 7.0, 0.0),
            Complex64::new(-64.0 / 203.0, 2.0 / 29.0),
        ],
    )
}
