//! Flat `key = value` experiment files.
//!
//! ```text
//! # comment
//! mode = invert
//! gamma = 0.5 0.5
//! phantom.kind = eigenfunction
//! phantom.xi = 1.0, 0.5
//! grid.points = 0.5 0.5; 1.0 0.25
//! ```
//!
//! Lists separate numbers by spaces or commas; point lists separate points
//! by `;`. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line of the offending entry, when there is one.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Forward,
    Invert,
    Verify,
    Spectral,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::Invert => "invert",
            Mode::Verify => "verify",
            Mode::Spectral => "spectral",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "forward" => Ok(Mode::Forward),
            "invert" => Ok(Mode::Invert),
            "verify" => Ok(Mode::Verify),
            "spectral" => Ok(Mode::Spectral),
            _ => Err(format!("unknown mode '{s}' (forward, invert, verify, spectral)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Phantom {
    Eigenfunction { xi: Vec<f64> },
    Gaussian { scale: f64 },
    Bump { center: Vec<f64>, radius: f64 },
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Window {
    Exp,
    Gaussian { width: f64 },
}

/// Spatial evaluation points: an explicit list or a tensor lattice with
/// `count[i]` equispaced values in `[lo[i], hi[i]]`, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Points(Vec<Vec<f64>>),
    Lattice { lo: Vec<f64>, hi: Vec<f64>, count: Vec<usize> },
}

impl Grid {
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            Grid::Points(p) => p.clone(),
            Grid::Lattice { lo, hi, count } => {
                let mut out = vec![Vec::new()];
                for ((&a, &b), &c) in lo.iter().zip(hi).zip(count) {
                    let axis: Vec<f64> = (0..c)
                        .map(|i| if c == 1 { a } else { a + (b - a) * i as f64 / (c - 1) as f64 })
                        .collect();
                    out = out
                        .into_iter()
                        .flat_map(|p| {
                            axis.iter().map(move |&v| {
                                let mut q = p.clone();
                                q.push(v);
                                q
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Grid::Points(p) => p.first().map(Vec::len),
            Grid::Lattice { lo, .. } => Some(lo.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Radii {
    Values(Vec<f64>),
    /// `0, step, 2 step, …` up to and including `max`.
    Uniform { step: f64, max: f64 },
}

impl Radii {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Radii::Values(v) => v.clone(),
            Radii::Uniform { step, max } => {
                let n = (max / step + 1e-9).floor() as usize;
                (0..=n).map(|i| i as f64 * step).collect()
            }
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_T_EVAL: [f64; 3] = [0.5, 1.25, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Empty when the mode does not need a multi-index.
    pub gamma: Vec<f64>,
    pub phantom: Option<Phantom>,
    pub m: Option<u32>,
    pub window: Window,
    pub t_eval: Vec<f64>,
    pub grid: Option<Grid>,
    pub radii: Option<Radii>,
    pub tol: f64,
    pub output: Option<PathBuf>,
    /// `verify.spectral`: run the spectral suite in verify mode.
    pub verify_spectral: bool,
    /// `spectral.k`: potential order for spectral mode.
    pub spectral_k: Option<f64>,
    /// `spectral.points`: `(τ, ξ)` pairs; empty means the built-in panel.
    pub spectral_points: Vec<(f64, f64)>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            gamma: Vec::new(),
            phantom: None,
            m: None,
            window: Window::Exp,
            t_eval: DEFAULT_T_EVAL.to_vec(),
            grid: None,
            radii: None,
            tol: DEFAULT_TOL,
            output: None,
            verify_spectral: true,
            spectral_k: None,
            spectral_points: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_mode(text, None)
    }

    /// As [`ExperimentConfig::parse`]; `mode` fills in a missing `mode` key and
    /// must agree with it when both are present.
    pub fn parse_with_mode(text: &str, mode: Option<Mode>) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(Some(line), body, "expected 'key = value'"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err(Some(line), "", "empty key"));
            }
            if let Some((first, _)) = entries.get(key) {
                return Err(err(Some(line), key, format!("repeated key (first set on line {first})")));
            }
            entries.insert(key.to_string(), (line, value.trim().to_string()));
        }
        let mut r = Reader { entries };
        let cfg = r.build(mode)?;
        if let Some((key, (line, _))) = r.entries.iter().next() {
            return Err(err(Some(*line), key, "unknown key"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Mode-specific requirements.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let need = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(err(None, key, msg)) };
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(err(None, "tol", "must lie in (0, 1)"));
        }
        if self.mode == Mode::Verify {
            return Ok(());
        }
        need((1..=3).contains(&self.gamma.len()), "gamma", "needs 1 to 3 components")?;
        let n = self.gamma.len();
        match self.mode {
            Mode::Forward | Mode::Invert => {
                need(self.phantom.is_some(), "phantom.kind", "required for this mode")?;
                need(self.grid.is_some(), "grid", "required for this mode (grid.points or grid.lo/hi/count)")?;
                if self.mode == Mode::Forward {
                    need(self.radii.is_some(), "radii", "required for forward mode (radii.values or radii.step/max)")?;
                }
                need(!self.t_eval.is_empty(), "t_eval", "needs at least one time")?;
            }
            Mode::Spectral => {
                need(n == 1, "gamma", "spectral mode works in one dimension")?;
                need(
                    matches!(self.window, Window::Gaussian { .. }),
                    "window.kind",
                    "spectral mode needs a gaussian window",
                )?;
                need(
                    matches!(self.phantom, None | Some(Phantom::Gaussian { .. }) | Some(Phantom::Zero)),
                    "phantom.kind",
                    "spectral mode needs a gaussian or zero phantom",
                )?;
            }
            Mode::Verify => unreachable!(),
        }
        match &self.phantom {
            Some(Phantom::Eigenfunction { xi }) => need(xi.len() == n, "phantom.xi", "length must match gamma")?,
            Some(Phantom::Bump { center, .. }) => need(center.len() == n, "phantom.center", "length must match gamma")?,
            _ => {}
        }
        if let Some(g) = &self.grid {
            if let Grid::Points(p) = g {
                need(p.iter().all(|q| q.len() == n), "grid.points", "every point needs one coordinate per gamma component")?;
            }
            if let Some(d) = g.dim() {
                need(d == n, "grid", "dimension must match gamma")?;
            }
        }
        Ok(())
    }

    /// Canonical text; [`ExperimentConfig::parse`] reads it back unchanged.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("mode", self.mode.to_string());
        if !self.gamma.is_empty() {
            put("gamma", list(&self.gamma));
        }
        match &self.phantom {
            None => {}
            Some(Phantom::Eigenfunction { xi }) => {
                put("phantom.kind", "eigenfunction".into());
                put("phantom.xi", list(xi));
            }
            Some(Phantom::Gaussian { scale }) => {
                put("phantom.kind", "gaussian".into());
                put("phantom.scale", scale.to_string());
            }
            Some(Phantom::Bump { center, radius }) => {
                put("phantom.kind", "bump".into());
                put("phantom.center", list(center));
                put("phantom.radius", radius.to_string());
            }
            Some(Phantom::Zero) => put("phantom.kind", "zero".into()),
        }
        if let Some(m) = self.m {
            put("m", m.to_string());
        }
        match &self.window {
            Window::Exp => put("window.kind", "exp".into()),
            Window::Gaussian { width } => {
                put("window.kind", "gaussian".into());
                put("window.width", width.to_string());
            }
        }
        put("t_eval", list(&self.t_eval));
        match &self.grid {
            None => {}
            Some(Grid::Points(p)) => put("grid.points", p.iter().map(|q| list(q)).collect::<Vec<_>>().join("; ")),
            Some(Grid::Lattice { lo, hi, count }) => {
                put("grid.lo", list(lo));
                put("grid.hi", list(hi));
                put("grid.count", count.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
            }
        }
        match &self.radii {
            None => {}
            Some(Radii::Values(v)) => put("radii.values", list(v)),
            Some(Radii::Uniform { step, max }) => {
                put("radii.step", step.to_string());
                put("radii.max", max.to_string());
            }
        }
        put("tol", self.tol.to_string());
        if let Some(o) = &self.output {
            put("output", o.display().to_string());
        }
        put("verify.spectral", self.verify_spectral.to_string());
        if let Some(k) = self.spectral_k {
            put("spectral.k", k.to_string());
        }
        if !self.spectral_points.is_empty() {
            let pts: Vec<String> = self.spectral_points.iter().map(|(t, x)| format!("{t} {x}")).collect();
            put("spectral.points", pts.join("; "));
        }
        s
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

struct Reader {
    entries: BTreeMap<String, (usize, String)>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take(key).map(|(l, v)| real(l, key, &v)).transpose()
    }

    fn numbers(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.take(key).map(|(l, v)| reals(l, key, &v)).transpose()
    }

    fn build(&mut self, fallback: Option<Mode>) -> Result<ExperimentConfig, ConfigError> {
        let mode = match (self.take("mode"), fallback) {
            (Some((l, v)), fb) => {
                let m: Mode = v.parse().map_err(|e: String| err(Some(l), "mode", e))?;
                if let Some(fb) = fb.filter(|&fb| fb != m) {
                    return Err(err(Some(l), "mode", format!("file says '{m}' but '{fb}' was requested")));
                }
                m
            }
            (None, Some(fb)) => fb,
            (None, None) => return Err(err(None, "mode", "missing")),
        };
        let mut cfg = ExperimentConfig::new(mode);
        if let Some(g) = self.numbers("gamma")? {
            cfg.gamma = g;
        }
        if let Some((l, g)) = cfg.gamma.iter().enumerate().find(|(_, g)| **g < 0.0).map(|(i, g)| (i, *g)) {
            return Err(err(None, "gamma", format!("component {l} is negative ({g})")));
        }
        cfg.phantom = self.phantom()?;
        if let Some((l, v)) = self.take("m") {
            let m: u32 = v.parse().map_err(|_| err(Some(l), "m", format!("'{v}' is not a positive integer")))?;
            if m == 0 {
                return Err(err(Some(l), "m", "must be positive"));
            }
            cfg.m = Some(m);
        }
        cfg.window = self.window()?;
        if let Some(t) = self.numbers("t_eval")? {
            cfg.t_eval = t;
        }
        cfg.grid = self.grid()?;
        cfg.radii = self.radii()?;
        if let Some(t) = self.number("tol")? {
            cfg.tol = t;
        }
        if let Some((l, v)) = self.take("output") {
            if v.is_empty() {
                return Err(err(Some(l), "output", "empty path"));
            }
            cfg.output = Some(PathBuf::from(v));
        }
        if let Some((l, v)) = self.take("verify.spectral") {
            cfg.verify_spectral = v
                .parse()
                .map_err(|_| err(Some(l), "verify.spectral", format!("'{v}' is not true or false")))?;
        }
        cfg.spectral_k = self.number("spectral.k")?;
        if let Some((l, v)) = self.take("spectral.points") {
            for p in point_list(l, "spectral.points", &v)? {
                match p.as_slice() {
                    &[t, x] if x >= 0.0 => cfg.spectral_points.push((t, x)),
                    _ => return Err(err(Some(l), "spectral.points", "each point is 'tau xi' with xi >= 0")),
                }
            }
        }
        Ok(cfg)
    }

    fn phantom(&mut self) -> Result<Option<Phantom>, ConfigError> {
        let Some((l, kind)) = self.take("phantom.kind") else {
            return Ok(None);
        };
        let required = |r: &mut Self, key: &str| -> Result<(usize, String), ConfigError> {
            r.take(key).ok_or_else(|| err(Some(l), key, format!("required by phantom.kind = {kind}")))
        };
        let p = match kind.as_str() {
            "eigenfunction" => {
                let (lx, v) = required(self, "phantom.xi")?;
                Phantom::Eigenfunction {
                    xi: nonneg(lx, "phantom.xi", reals(lx, "phantom.xi", &v)?)?,
                }
            }
            "gaussian" => {
                let (ls, v) = required(self, "phantom.scale")?;
                Phantom::Gaussian {
                    scale: positive(ls, "phantom.scale", real(ls, "phantom.scale", &v)?)?,
                }
            }
            "bump" => {
                let (lc, c) = required(self, "phantom.center")?;
                let (lr, r) = required(self, "phantom.radius")?;
                Phantom::Bump {
                    center: nonneg(lc, "phantom.center", reals(lc, "phantom.center", &c)?)?,
                    radius: positive(lr, "phantom.radius", real(lr, "phantom.radius", &r)?)?,
                }
            }
            "zero" => Phantom::Zero,
            other => {
                return Err(err(
                    Some(l),
                    "phantom.kind",
                    format!("unknown phantom '{other}' (eigenfunction, gaussian, bump, zero)"),
                ))
            }
        };
        Ok(Some(p))
    }

    fn window(&mut self) -> Result<Window, ConfigError> {
        let width = self.take("window.width");
        match (self.take("window.kind"), width) {
            (None, None) => Ok(Window::Exp),
            (Some((_, k)), None) if k == "exp" => Ok(Window::Exp),
            (Some((l, k)), _) if k == "exp" => Err(err(Some(l), "window.width", "only a gaussian window has a width")),
            (Some((l, k)), w) if k == "gaussian" => {
                let (lw, w) = w.ok_or_else(|| err(Some(l), "window.width", "required by window.kind = gaussian"))?;
                Ok(Window::Gaussian {
                    width: positive(lw, "window.width", real(lw, "window.width", &w)?)?,
                })
            }
            (Some((l, k)), _) => Err(err(Some(l), "window.kind", format!("unknown window '{k}' (exp, gaussian)"))),
            (None, Some((l, _))) => Err(err(Some(l), "window.width", "needs window.kind = gaussian")),
        }
    }

    fn grid(&mut self) -> Result<Option<Grid>, ConfigError> {
        let points = self.take("grid.points");
        let lo = self.take("grid.lo");
        let hi = self.take("grid.hi");
        let count = self.take("grid.count");
        match (points, lo, hi, count) {
            (None, None, None, None) => Ok(None),
            (Some((l, v)), None, None, None) => Ok(Some(Grid::Points(point_list(l, "grid.points", &v)?))),
            (None, Some((l1, lo)), Some((l2, hi)), Some((l3, c))) => {
                let lo = nonneg(l1, "grid.lo", reals(l1, "grid.lo", &lo)?)?;
                let hi = nonneg(l2, "grid.hi", reals(l2, "grid.hi", &hi)?)?;
                let count = c
                    .split(|ch: char| ch == ',' || ch.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<usize>().map_err(|_| err(Some(l3), "grid.count", format!("'{s}' is not a count"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if lo.len() != hi.len() || lo.len() != count.len() {
                    return Err(err(Some(l3), "grid", "grid.lo, grid.hi and grid.count need equal lengths"));
                }
                Ok(Some(Grid::Lattice { lo, hi, count }))
            }
            (Some((l, _)), ..) => Err(err(Some(l), "grid.points", "cannot be combined with grid.lo/hi/count")),
            (None, a, b, c) => {
                let line = a.or(b).or(c).map(|(l, _)| l);
                Err(err(line, "grid", "a lattice needs all of grid.lo, grid.hi and grid.count"))
            }
        }
    }

    fn radii(&mut self) -> Result<Option<Radii>, ConfigError> {
        let values = self.take("radii.values");
        let step = self.take("radii.step");
        let max = self.take("radii.max");
        match (values, step, max) {
            (None, None, None) => Ok(None),
            (Some((l, v)), None, None) => Ok(Some(Radii::Values(nonneg(l, "radii.values", reals(l, "radii.values", &v)?)?))),
            (None, Some((ls, s)), Some((lm, m))) => Ok(Some(Radii::Uniform {
                step: positive(ls, "radii.step", real(ls, "radii.step", &s)?)?,
                max: nonneg(lm, "radii.max", vec![real(lm, "radii.max", &m)?])?[0],
            })),
            (Some((l, _)), ..) => Err(err(Some(l), "radii.values", "cannot be combined with radii.step/max")),
            (None, a, b) => Err(err(a.or(b).map(|(l, _)| l), "radii", "a uniform grid needs radii.step and radii.max")),
        }
    }
}

fn real(line: usize, key: &str, s: &str) -> Result<f64, ConfigError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| err(Some(line), key, format!("'{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(err(Some(line), key, "must be finite"));
    }
    Ok(v)
}

fn reals(line: usize, key: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| real(line, key, t))
        .collect()
}

fn point_list(line: usize, key: &str, s: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| reals(line, key, p))
        .collect()
}

fn positive(line: usize, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(err(Some(line), key, "must be positive"))
    }
}

fn nonneg(line: usize, key: &str, v: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    if v.iter().all(|x| *x >= 0.0) {
        Ok(v)
    } else {
        Err(err(Some(line), key, "entries must be >= 0"))
    }
}
