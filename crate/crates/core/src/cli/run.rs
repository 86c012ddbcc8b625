use std::fmt::Write as _;

use log::{debug, info};
use rayon::prelude::*;

use super::config::{ExperimentConfig, Mode, Phantom, Window};
use crate::error::Error;
use crate::field::{bump, eigenfunction, gaussian, zero, ScalarField};
use crate::inversion::{reconstruct_point, FDScheme, ReconstructionPlan};
use crate::means::{eigen_mean, spherical_mean};
use crate::potential::TimeWindow;
use crate::quadrature::QuadSpec;
use crate::specfun::BesselIndex;
use crate::spectral::{default_panel, symbol_check, FreqPoint};

/// Why a run stopped; each maps to a process exit code.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Plan(Error),
    Numerical(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Plan(_) => 3,
            RunError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Plan(e) => write!(f, "invalid reconstruction plan: {e}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

/// A CSV table. Numbers carry 17 significant digits; rows end in `\n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format!("{v:.16e}"),
                    Cell::Text(t) => t.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Rows whose status column is neither `ok` nor a summary.
    pub fn failed_rows(&self) -> usize {
        let Some(col) = self.header.iter().position(|h| h == "status") else {
            return 0;
        };
        self.rows
            .iter()
            .filter(|r| !matches!(&r[col], Cell::Text(t) if t == "ok" || t.starts_with("summary")))
            .count()
    }
}

/// Short machine-readable tag for the status column.
pub fn status_tag(e: &Error) -> &'static str {
    match e {
        Error::Domain { .. } => "domain",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::UnsupportedDimension(_) => "unsupported_dimension",
        Error::NonConvergence { .. } => "non_convergence",
        Error::NonFinite(_) => "non_finite",
        Error::CutBeyondCap { .. } => "cut_beyond_cap",
        Error::TailBound { .. } => "tail_bound",
        Error::OrderTooSmall { .. } => "order_too_small",
        Error::ProfileRange { .. } => "profile_range",
        Error::MissingProfile(_) => "missing_profile",
        Error::WindowVanishes(_) => "window_vanishes",
        Error::DecayMissing(_) => "decay_missing",
        Error::NearCone { .. } => "near_cone",
        Error::Invalid(_) => "invalid",
    }
}

fn config(e: Error) -> RunError {
    RunError::Config(e.to_string())
}

fn index(cfg: &ExperimentConfig) -> Result<BesselIndex, RunError> {
    BesselIndex::new(cfg.gamma.clone()).map_err(config)
}

fn phantom(cfg: &ExperimentConfig, idx: &BesselIndex) -> Result<ScalarField, RunError> {
    let f = match cfg.phantom.as_ref() {
        Some(Phantom::Eigenfunction { xi }) => eigenfunction(idx, xi),
        Some(Phantom::Gaussian { scale }) => gaussian(idx.n(), *scale),
        Some(Phantom::Bump { center, radius }) => bump(center, *radius),
        Some(Phantom::Zero) => zero(idx.n()),
        None => return Err(RunError::Config("phantom.kind: required for this mode".into())),
    };
    f.map_err(config)
}

fn window(cfg: &ExperimentConfig) -> Result<TimeWindow, RunError> {
    match cfg.window {
        Window::Exp => Ok(TimeWindow::exp()),
        Window::Gaussian { width } => TimeWindow::gaussian(width).map_err(config),
    }
}

fn coordinate_header(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn require_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<(), RunError> {
    if cfg.mode == mode {
        Ok(())
    } else {
        Err(RunError::Config(format!("mode: expected {mode}, got {}", cfg.mode)))
    }
}

/// Rows `(x, ρ, M_ρ f(x), residual, status)`, grid-major and radius-minor.
/// The residual against the closed form is filled in for the eigenfunction.
pub fn run_forward(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    require_mode(cfg, Mode::Forward)?;
    let idx = index(cfg)?;
    let f = phantom(cfg, &idx)?;
    let spec = QuadSpec::with_tol(cfg.tol);
    let points = cfg.grid.as_ref().map(|g| g.points()).unwrap_or_default();
    let radii = cfg.radii.as_ref().map(|r| r.values()).unwrap_or_default();
    let xi = match &cfg.phantom {
        Some(Phantom::Eigenfunction { xi }) => Some(xi.clone()),
        _ => None,
    };
    info!("forward: {} points x {} radii", points.len(), radii.len());
    let mut header = coordinate_header(idx.n());
    header.extend(["rho", "mean", "residual", "status"].map(String::from));
    let mut table = Table::new(header);
    let blocks: Vec<Vec<Vec<Cell>>> = points
        .par_iter()
        .map(|x| {
            radii
                .iter()
                .map(|&rho| {
                    let mut row: Vec<Cell> = x.iter().map(|&v| Cell::Num(v)).collect();
                    row.push(Cell::Num(rho));
                    let value = spherical_mean(&f, &idx, x, rho, &spec);
                    let exact = xi.as_ref().map(|xi| eigen_mean(&idx, xi, x, rho));
                    match (value, exact) {
                        (Ok(v), Some(Ok(e))) => {
                            row.extend([Cell::Num(v), Cell::Num((v - e).abs()), Cell::Text("ok".into())]);
                        }
                        (Ok(v), None) => row.extend([Cell::Num(v), Cell::Empty, Cell::Text("ok".into())]),
                        (Err(e), _) | (Ok(_), Some(Err(e))) => {
                            debug!("forward row at {x:?}, rho {rho}: {e}");
                            row.extend([Cell::Empty, Cell::Empty, Cell::Text(status_tag(&e).into())]);
                        }
                    }
                    row
                })
                .collect()
        })
        .collect();
    table.rows = blocks.into_iter().flatten().collect();
    Ok(table)
}

/// The reconstruction plan described by a config. Validation failures are
/// [`RunError::Plan`].
pub fn plan_for(cfg: &ExperimentConfig) -> Result<ReconstructionPlan, RunError> {
    let idx = index(cfg)?;
    let m = cfg.m.unwrap_or_else(|| idx.minimal_m());
    let h = window(cfg)?;
    ReconstructionPlan::new(
        idx,
        Some(m),
        h,
        cfg.t_eval.clone(),
        FDScheme::for_power(m),
        QuadSpec::with_tol(cfg.tol),
    )
    .map_err(RunError::Plan)
}

/// Rows `(x, f_true, f_reconstructed, rel_err, t_spread, status)` and two
/// summary rows with the maximum and median `rel_err`. Where `f_true = 0`
/// the error column holds the absolute error.
pub fn run_invert(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    require_mode(cfg, Mode::Invert)?;
    let plan = plan_for(cfg)?;
    let idx = plan.idx().clone();
    let f = phantom(cfg, &idx)?;
    let points = cfg.grid.as_ref().map(|g| g.points()).unwrap_or_default();
    info!("invert: {} points, m = {}, fd = {:?}", points.len(), plan.m(), plan.fd());
    let mut header = coordinate_header(idx.n());
    header.extend(["f_true", "f_reconstructed", "rel_err", "t_spread", "status"].map(String::from));
    let mut table = Table::new(header);
    let results: Vec<(Vec<Cell>, Option<f64>)> = points
        .par_iter()
        .map(|x| {
            let mut row: Vec<Cell> = x.iter().map(|&v| Cell::Num(v)).collect();
            let truth = f.eval(x);
            row.push(Cell::Num(truth));
            match reconstruct_point(&plan, &f, x) {
                Ok(r) => {
                    let diff = (r.value - truth).abs();
                    let rel = if truth == 0.0 { diff } else { diff / truth.abs() };
                    row.extend([
                        Cell::Num(r.value),
                        Cell::Num(rel),
                        Cell::Num(r.spread),
                        Cell::Text("ok".into()),
                    ]);
                    (row, Some(rel))
                }
                Err(e) => {
                    debug!("invert at {x:?}: {e}");
                    row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Text(status_tag(&e).into())]);
                    (row, None)
                }
            }
        })
        .collect();
    let mut errs: Vec<f64> = results.iter().filter_map(|(_, e)| *e).collect();
    table.rows = results.into_iter().map(|(r, _)| r).collect();
    if !errs.is_empty() {
        errs.sort_by(f64::total_cmp);
        let max = errs[errs.len() - 1];
        let mid = errs.len() / 2;
        let median = if errs.len() % 2 == 1 {
            errs[mid]
        } else {
            0.5 * (errs[mid - 1] + errs[mid])
        };
        for (tag, v) in [("summary_max", max), ("summary_median", median)] {
            let mut row = vec![Cell::Empty; idx.n() + 2];
            row.extend([Cell::Num(v), Cell::Empty, Cell::Text(tag.into())]);
            table.rows.push(row);
        }
    }
    Ok(table)
}

/// Rows `(tau, xi, region, lhs_re, lhs_im, rhs_re, rhs_im, deviation, status)`.
pub fn run_spectral(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    require_mode(cfg, Mode::Spectral)?;
    let idx = index(cfg)?;
    if idx.n() != 1 {
        return Err(RunError::Config("gamma: spectral mode works in one dimension".into()));
    }
    let g = idx.gamma()[0];
    let k = cfg.spectral_k.unwrap_or(g + 0.5);
    let h = window(cfg)?;
    let f = match cfg.phantom {
        None => gaussian(1, 1.0).map_err(config)?,
        Some(_) => phantom(cfg, &idx)?,
    };
    let points: Vec<FreqPoint> = if cfg.spectral_points.is_empty() {
        default_panel()
    } else {
        cfg.spectral_points
            .iter()
            .map(|&(t, x)| FreqPoint::new(t, x))
            .collect::<Result<_, _>>()
            .map_err(config)?
    };
    let check = symbol_check(k, g, &h, &f, &points, &QuadSpec::with_tol(cfg.tol)).map_err(|e| match e {
        Error::Invalid(_) | Error::NearCone { .. } | Error::OrderTooSmall { .. } => config(e),
        e => RunError::Numerical(e),
    })?;
    let header = ["tau", "xi", "region", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "deviation", "status"];
    let mut table = Table::new(header.map(String::from).to_vec());
    for (i, p) in check.points.iter().enumerate() {
        table.rows.push(vec![
            Cell::Num(p.tau),
            Cell::Num(p.xi),
            Cell::Text(format!("{:?}", p.region()).to_lowercase()),
            Cell::Num(check.lhs[i].re),
            Cell::Num(check.lhs[i].im),
            Cell::Num(check.rhs[i].re),
            Cell::Num(check.rhs[i].im),
            Cell::Num(check.deviations[i]),
            Cell::Text(if check.deviations[i].is_finite() { "ok" } else { "non_finite" }.into()),
        ]);
    }
    Ok(table)
}
