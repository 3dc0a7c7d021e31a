//! `gridcert`: certify load solvability, solve the load flow, and trace
//! solvability boundaries for radial distribution networks.
//!
//! Exit codes: 0 success / certified, 1 not certified or not converged,
//! 2 usage, file, or data errors.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridcert_core::{
    boundary, certificates, io as csvio, lambda_grid, parse_network, pv_curve, rhombus,
    solve_fixed_point, CertificateKind, Error, ImpedanceMatrix, LoadPattern, Network, Norm,
    ProbeMethod, Result, SweepArc,
};
use svg::Series;

#[derive(Parser)]
#[command(name = "gridcert", version, about = "Load-flow solvability certificates for distribution grids")]
struct Cli {
    /// Network document (JSON)
    #[arg(long, global = true, value_name = "PATH")]
    network: Option<PathBuf>,

    /// Write the result CSV here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Also render an SVG plot next to --out (boundary, sweep, pvcurve)
    #[arg(long, global = true)]
    svg: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate solvability certificates for a load file
    Check {
        /// Load CSV: bus_id,P,Q (consumption positive)
        loads: PathBuf,
        /// Criterion: 2 | inf | hull | all
        #[arg(long, default_value = "all")]
        norm: String,
    },
    /// Solve the load flow by fixed-point iteration
    Solve {
        /// Load CSV: bus_id,P,Q (consumption positive)
        loads: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 1000)]
        max_iter: usize,
    },
    /// Per-bus load limits and the vertices they span
    Rhombus,
    /// Sample solvability boundaries along rays in the (P,Q) plane
    Boundary {
        /// Pattern CSV: bus_id,wp,wq
        pattern: PathBuf,
        #[arg(long, default_value_t = 64)]
        rays: usize,
        /// Comma-separated: oracle,hull,base2,baseinf
        #[arg(long, default_value = "oracle,hull")]
        methods: String,
        /// Sweep the first quadrant only (default)
        #[arg(long, conflicts_with = "full")]
        quadrant: bool,
        /// Sweep the full circle
        #[arg(long)]
        full: bool,
        /// Initial upper bracket for the oracle search
        #[arg(long = "t-hi", default_value_t = boundary::DEFAULT_T_HI)]
        t_hi: f64,
        /// Bisection tolerance of the oracle search
        #[arg(long = "bisect-tol", default_value_t = boundary::DEFAULT_BISECT_TOL)]
        bisect_tol: f64,
    },
    /// Per-scaling rescaled-criterion boundaries over a diagonal grid
    Sweep {
        /// Pattern CSV: bus_id,wp,wq
        pattern: PathBuf,
        #[arg(long = "lambda-lo", default_value_t = 0.5)]
        lambda_lo: f64,
        #[arg(long = "lambda-hi", default_value_t = 25.0)]
        lambda_hi: f64,
        #[arg(long = "lambda-points", default_value_t = 8)]
        lambda_points: usize,
        /// Norm pair: 2 | inf
        #[arg(long, default_value = "2")]
        norm: String,
        #[arg(long, default_value_t = 64)]
        rays: usize,
    },
    /// Voltage magnitude against active power at fixed reactive power
    Pvcurve {
        /// Pattern CSV: bus_id,wp,wq
        pattern: PathBuf,
        /// Fixed reactive-power scale
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        /// Load bus id to watch
        #[arg(long)]
        bus: usize,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Active-power scale at the end of the continuation grid
        #[arg(long = "p-max", default_value_t = 1.0)]
        p_max: f64,
    },
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("gridcert: error: {err}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("GRIDCERT_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(0) => {} // auto
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Err(_) => eprintln!("gridcert: warning: ignoring invalid GRIDCERT_THREADS={raw}"),
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let (net, z) = load_network(cli)?;
    match &cli.command {
        Command::Check { loads, norm } => cmd_check(cli, &net, &z, loads, norm),
        Command::Solve { loads, tol, max_iter } => cmd_solve(cli, &net, &z, loads, *tol, *max_iter),
        Command::Rhombus => cmd_rhombus(cli, &net, &z),
        Command::Boundary { pattern, rays, methods, full, t_hi, bisect_tol, .. } => cmd_boundary(
            cli,
            &net,
            &z,
            pattern,
            *rays,
            methods,
            if *full { SweepArc::FullCircle } else { SweepArc::FirstQuadrant },
            *t_hi,
            *bisect_tol,
        ),
        Command::Sweep { pattern, lambda_lo, lambda_hi, lambda_points, norm, rays } => cmd_sweep(
            cli,
            &net,
            &z,
            pattern,
            *lambda_lo,
            *lambda_hi,
            *lambda_points,
            norm,
            *rays,
        ),
        Command::Pvcurve { pattern, q, bus, points, p_max } => {
            cmd_pvcurve(cli, &net, &z, pattern, *q, *bus, *points, *p_max)
        }
    }
}

fn load_network(cli: &Cli) -> Result<(Network, ImpedanceMatrix)> {
    let path = cli
        .network
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--network PATH is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let net = parse_network(&text)?;
    let z = net.impedance()?;
    Ok((net, z))
}

fn read_pattern(path: &Path, n: usize) -> Result<LoadPattern> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    csvio::parse_pattern_csv(&text, n)
}

/// Writes the CSV to --out (or stdout) and optionally an SVG sibling.
fn emit(cli: &Cli, csv: &str, plot: Option<(&[Series], &str, &str, &str)>) -> Result<()> {
    match &cli.out {
        Some(path) => {
            fs::write(path, csv)?;
            if cli.svg {
                let (series, title, xl, yl) = plot.ok_or_else(|| {
                    Error::InvalidArgument("--svg is not supported for this command".into())
                })?;
                let doc = svg::render_svg(series, title, xl, yl)?;
                fs::write(path.with_extension("svg"), doc)?;
            }
        }
        None => {
            if cli.svg {
                return Err(Error::InvalidArgument("--svg requires --out".into()));
            }
            print!("{csv}");
        }
    }
    Ok(())
}

fn cmd_check(cli: &Cli, net: &Network, z: &ImpedanceMatrix, loads: &Path, norm: &str) -> Result<u8> {
    let text = fs::read_to_string(loads)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", loads.display())))?;
    let s = csvio::parse_loads_csv(&text, z.n())?;
    let v0 = net.v0();

    if !matches!(norm, "2" | "inf" | "hull" | "all") {
        return Err(Error::InvalidArgument(format!(
            "unknown --norm '{norm}' (expected 2, inf, hull, or all)"
        )));
    }
    let all = norm == "all";

    let mut verdicts = Vec::new();
    if all || norm == "2" {
        verdicts.push(("norm2", certificates::certify_base(z, &s, v0, Norm::Two)?));
    }
    if all || norm == "inf" {
        verdicts.push(("norm_inf", certificates::certify_base(z, &s, v0, Norm::Inf)?));
    }
    if all || norm == "hull" {
        let rh = rhombus(z, v0)?;
        verdicts.push(("hull", certificates::certify_hull(&rh, &s)?));
    }

    let mut report = String::new();
    for (name, verdict) in &verdicts {
        report.push_str(&format!(
            "{name}: {} margin={}\n",
            if verdict.certified { "certified" } else { "not certified" },
            verdict.margin
        ));
    }
    print!("{report}");
    if let Some(path) = &cli.out {
        fs::write(path, &report)?;
    }
    // With --norm all, any single certificate suffices (the hull envelopes
    // the others, so this matches "hull certifies").
    Ok(if verdicts.iter().any(|(_, v)| v.certified) { 0 } else { 1 })
}

fn cmd_solve(
    cli: &Cli,
    net: &Network,
    z: &ImpedanceMatrix,
    loads: &Path,
    tol: f64,
    max_iter: usize,
) -> Result<u8> {
    let text = fs::read_to_string(loads)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", loads.display())))?;
    let s = csvio::parse_loads_csv(&text, z.n())?;
    let sol = solve_fixed_point(z, &s, net.v0(), tol, max_iter)?;
    emit(cli, &csvio::solution_csv(z, &sol), None)?;
    if sol.converged {
        Ok(0)
    } else {
        eprintln!(
            "gridcert: did not converge within {max_iter} iterations (last step {})",
            sol.state.last_step_norm
        );
        Ok(1)
    }
}

fn cmd_rhombus(cli: &Cli, net: &Network, z: &ImpedanceMatrix) -> Result<u8> {
    let rh = rhombus(z, net.v0())?;
    emit(cli, &csvio::rhombus_csv(&rh, z.bus_order()), None)?;
    // vertex list of the certified cross-polytope in |s| space
    let mut vertices = String::new();
    for (k, &bus) in z.bus_order().iter().enumerate() {
        for sign in ["+", "-"] {
            vertices.push_str(&format!(
                "vertex {sign}e_{bus}: |s_{bus}| = {}\n",
                rh.s_max()[k]
            ));
        }
    }
    print!("{vertices}");
    Ok(0)
}

fn parse_methods(names: &str, t_hi: f64, tol: f64) -> Result<Vec<(String, ProbeMethod)>> {
    names.split(',')
        .map(|m| m.trim())
        .filter(|m| !m.is_empty())
        .map(|m| {
            let probe = match m {
                "oracle" => ProbeMethod::Oracle { t_hi, tol },
                "hull" => ProbeMethod::Certificate(CertificateKind::Hull),
                "base2" => ProbeMethod::Certificate(CertificateKind::Base(Norm::Two)),
                "baseinf" | "base_inf" => ProbeMethod::Certificate(CertificateKind::Base(Norm::Inf)),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown method '{other}' (expected oracle, hull, base2, baseinf)"
                    )))
                }
            };
            Ok((m.to_string(), probe))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_boundary(
    cli: &Cli,
    net: &Network,
    z: &ImpedanceMatrix,
    pattern: &Path,
    rays: usize,
    methods: &str,
    arc: SweepArc,
    t_hi: f64,
    bisect_tol: f64,
) -> Result<u8> {
    let pat = read_pattern(pattern, z.n())?;
    let methods = parse_methods(methods, t_hi, bisect_tol)?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods requested".into()));
    }

    let mut all_samples = Vec::new();
    let mut series = Vec::new();
    for (name, probe) in &methods {
        let samples = boundary::sweep_boundary(z, net.v0(), &pat, rays, probe, arc)?;
        series.push(Series {
            label: name.clone(),
            points: samples
                .iter()
                .map(|s| (s.t_star * s.direction[0], s.t_star * s.direction[1]))
                .collect(),
        });
        all_samples.extend(samples);
    }
    emit(
        cli,
        &csvio::boundary_csv(&all_samples),
        Some((&series, "solvability boundary", "P (p.u.)", "Q (p.u.)")),
    )?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    cli: &Cli,
    net: &Network,
    z: &ImpedanceMatrix,
    pattern: &Path,
    lambda_lo: f64,
    lambda_hi: f64,
    lambda_points: usize,
    norm: &str,
    rays: usize,
) -> Result<u8> {
    let pat = read_pattern(pattern, z.n())?;
    let norm = match norm {
        "2" => Norm::Two,
        "inf" => Norm::Inf,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown --norm '{other}' (expected 2 or inf)"
            )))
        }
    };
    let grid = lambda_grid(lambda_lo, lambda_hi, lambda_points, z.n())?;
    let polylines = boundary::lambda_union_samples(z, net.v0(), &pat, &grid, norm, rays)?;
    let series: Vec<Series> = polylines
        .iter()
        .map(|poly| Series {
            label: format!("lambda_{}", poly.lambda_index),
            points: poly
                .samples
                .iter()
                .map(|s| (s.t_star * s.direction[0], s.t_star * s.direction[1]))
                .collect(),
        })
        .collect();
    emit(
        cli,
        &csvio::lambda_union_csv(&polylines),
        Some((&series, "rescaled-criterion boundaries", "P (p.u.)", "Q (p.u.)")),
    )?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_pvcurve(
    cli: &Cli,
    net: &Network,
    z: &ImpedanceMatrix,
    pattern: &Path,
    q: f64,
    bus: usize,
    points: usize,
    p_max: f64,
) -> Result<u8> {
    let pat = read_pattern(pattern, z.n())?;
    let watch = z
        .bus_order()
        .iter()
        .position(|&b| b == bus)
        .ok_or_else(|| Error::InvalidArgument(format!("bus {bus} is not a load bus")))?;
    let curve = pv_curve(z, net.v0(), &pat, q, p_max, points, watch)?;
    let series = [Series {
        label: format!("|v_{bus}| at Q={q}"),
        points: curve.points.clone(),
    }];
    emit(
        cli,
        &csvio::pv_csv(&curve),
        Some((&series, "PV curve", "P (p.u.)", "|v| (p.u.)")),
    )?;
    if let Some(nose) = curve.nose_p {
        eprintln!("gridcert: last converged P = {nose}");
    }
    if let Some(pe) = curve.certificate_p {
        eprintln!("gridcert: certificate limit P = {pe}");
    }
    Ok(0)
}
