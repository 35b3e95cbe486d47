//! Plain-text run configuration: one `key = value` per line, `#` starts a
//! comment, lists are comma-separated. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::engine::Coupling;
use crate::error::{Error, Result};
use crate::fields::Vec2;
use crate::pushers::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SingleParticle,
    ApSweep,
    OrderSweep,
    Diocotron,
    GcCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::SingleParticle,
        Experiment::ApSweep,
        Experiment::OrderSweep,
        Experiment::Diocotron,
        Experiment::GcCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SingleParticle => "single-particle",
            Experiment::ApSweep => "ap-sweep",
            Experiment::OrderSweep => "order-sweep",
            Experiment::Diocotron => "diocotron",
            Experiment::GcCompare => "gc-compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Periodic,
    Disc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Text,
    Binary,
}

/// Experiment selected by a configuration file, with the raw key-value
/// pairs it set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentSpec {
    pub name: Option<Experiment>,
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub workers: usize,
    pub output_every: usize,
    pub snapshot_times: Vec<f64>,
    pub snapshot_format: SnapshotFormat,
    // analytic single-particle field
    pub alpha: f64,
    pub b_modulation: f64,
    pub b_min: f64,
    pub x0: Vec2,
    pub z0: Vec2,
    pub schemes: Vec<Scheme>,
    pub ref_dt: f64,
    // sweeps
    pub eps_list: Vec<f64>,
    pub ap_scheme: Scheme,
    pub well_prepared: bool,
    pub dt_list: Vec<f64>,
    // grid and field solve
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub domain: DomainKind,
    pub disc_radius: f64,
    pub box_length: f64,
    pub poisson_tol: f64,
    pub poisson_max_iter: usize,
    pub shape_order: u8,
    pub b0: f64,
    pub coupling: Coupling,
    // diocotron
    pub particles_per_cell: usize,
    pub n_particles: usize,
    pub diocotron_alpha: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub mode: u32,
    pub mode_radius: f64,
    pub gc_scheme: Scheme,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps: 0.1,
            dt: 0.1,
            t_end: 10.0,
            scheme: Scheme::Imex3,
            seed: 1,
            workers: 0,
            output_every: 1,
            snapshot_times: Vec::new(),
            snapshot_format: SnapshotFormat::Text,
            alpha: 0.02,
            b_modulation: 0.1,
            b_min: 0.5,
            x0: Vec2::new(1.0, 1.4),
            z0: Vec2::new(3.0, 5.0),
            schemes: Scheme::AP.to_vec(),
            ref_dt: 1e-5,
            eps_list: vec![0.1, 0.03, 0.01, 0.003, 0.001],
            ap_scheme: Scheme::EulerSI,
            well_prepared: true,
            dt_list: vec![0.02, 0.01, 0.005, 0.0025],
            grid_nx: 64,
            grid_ny: 64,
            domain: DomainKind::Disc,
            disc_radius: 15.0,
            box_length: 20.0,
            poisson_tol: 1e-10,
            poisson_max_iter: 5000,
            shape_order: 2,
            b0: 1.0,
            coupling: Coupling::Extrapolated,
            particles_per_cell: 100,
            n_particles: 0,
            diocotron_alpha: 0.01,
            r_minus: 5.0,
            r_plus: 8.0,
            mode: 7,
            mode_radius: 6.5,
            gc_scheme: Scheme::GcRk3,
        }
    }
}

/// Every accepted key with a one-line description, in listing order.
pub const KEYS: &[(&str, &str)] = &[
    ("experiment", "experiment to run when no subcommand is given"),
    ("eps", "stiffness parameter eps > 0"),
    ("dt", "time step"),
    ("t_end", "final time"),
    ("scheme", "particle pusher: euler-si, sdirk2-a, sdirk2-l, imex3, gc-euler, gc-heun, gc-lstable, gc-rk3, rk4"),
    ("seed", "random seed of the particle sampler"),
    ("workers", "worker threads (0 = all cores, 1 = canonical serial run)"),
    ("output_every", "steps between diagnostics rows"),
    ("snapshot_times", "times at which density snapshots are written"),
    ("snapshot_format", "text or binary"),
    ("alpha", "amplitude of the cos^2 term of the analytic potential"),
    ("b_modulation", "amplitude of sin(2 pi x) in the analytic magnetic field"),
    ("b_min", "smallest magnetic amplitude accepted"),
    ("x0", "initial position of the single particle"),
    ("z0", "initial velocity divided by eps of the single particle"),
    ("schemes", "schemes compared by single-particle and order-sweep"),
    ("ref_dt", "RK4 reference step (reduced to the stability bound when needed)"),
    ("eps_list", "eps values of ap-sweep"),
    ("ap_scheme", "AP scheme compared with its guiding-center limit in ap-sweep"),
    ("well_prepared", "ap-sweep also reports the corrected guiding-center start"),
    ("dt_list", "time steps of order-sweep"),
    ("grid_nx", "grid nodes along x"),
    ("grid_ny", "grid nodes along y"),
    ("domain", "disc (Dirichlet) or periodic"),
    ("disc_radius", "radius of the disc domain"),
    ("box_length", "side of the periodic box, centered on the origin"),
    ("poisson_tol", "relative residual target of the Poisson solver"),
    ("poisson_max_iter", "iteration cap of the disc Poisson solver"),
    ("shape_order", "B-spline order 1, 2 or 3"),
    ("b0", "magnetic amplitude of self-consistent runs"),
    ("coupling", "field seen by the stages of a step: frozen or extrapolated"),
    ("particles_per_cell", "macro-particles per grid cell of the initial annulus"),
    ("n_particles", "total macro-particles (0 = use particles_per_cell)"),
    ("diocotron_alpha", "perturbation amplitude of the initial annulus"),
    ("r_minus", "inner radius of the initial annulus"),
    ("r_plus", "outer radius of the initial annulus"),
    ("mode", "azimuthal mode number of the perturbation"),
    ("mode_radius", "radius at which mode amplitudes are measured"),
    ("gc_scheme", "guiding-center scheme of gc-compare"),
];

fn parse_num<T: FromStr>(key: &str, value: &str, line: Option<usize>) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(line, key, format!("cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str, line: Option<usize>) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(key, v, line)).collect()
}

fn parse_vec2(key: &str, value: &str, line: Option<usize>) -> Result<Vec2> {
    let v: Vec<f64> = parse_list(key, value, line)?;
    match v.as_slice() {
        [x, y] => Ok(Vec2::new(*x, *y)),
        _ => Err(Error::config(line, key, "expected two comma-separated numbers")),
    }
}

fn parse_scheme(key: &str, value: &str, line: Option<usize>) -> Result<Scheme> {
    value
        .trim()
        .parse()
        .map_err(|e: Error| Error::config(line, key, e.to_string()))
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<()> {
        let v = value.trim();
        match key {
            "eps" => self.eps = parse_num(key, v, line)?,
            "dt" => self.dt = parse_num(key, v, line)?,
            "t_end" => self.t_end = parse_num(key, v, line)?,
            "scheme" => self.scheme = parse_scheme(key, v, line)?,
            "seed" => self.seed = parse_num(key, v, line)?,
            "workers" => self.workers = parse_num(key, v, line)?,
            "output_every" => self.output_every = parse_num(key, v, line)?,
            "snapshot_times" => self.snapshot_times = parse_list(key, v, line)?,
            "snapshot_format" => {
                self.snapshot_format = match v {
                    "text" => SnapshotFormat::Text,
                    "binary" => SnapshotFormat::Binary,
                    _ => return Err(Error::config(line, key, "expected `text` or `binary`")),
                }
            }
            "alpha" => self.alpha = parse_num(key, v, line)?,
            "b_modulation" => self.b_modulation = parse_num(key, v, line)?,
            "b_min" => self.b_min = parse_num(key, v, line)?,
            "x0" => self.x0 = parse_vec2(key, v, line)?,
            "z0" => self.z0 = parse_vec2(key, v, line)?,
            "schemes" => {
                self.schemes = v
                    .split(',')
                    .map(|s| parse_scheme(key, s, line))
                    .collect::<Result<_>>()?
            }
            "ref_dt" => self.ref_dt = parse_num(key, v, line)?,
            "eps_list" => self.eps_list = parse_list(key, v, line)?,
            "ap_scheme" => self.ap_scheme = parse_scheme(key, v, line)?,
            "well_prepared" => self.well_prepared = parse_num(key, v, line)?,
            "dt_list" => self.dt_list = parse_list(key, v, line)?,
            "grid_nx" => self.grid_nx = parse_num(key, v, line)?,
            "grid_ny" => self.grid_ny = parse_num(key, v, line)?,
            "domain" => {
                self.domain = match v {
                    "disc" => DomainKind::Disc,
                    "periodic" => DomainKind::Periodic,
                    _ => return Err(Error::config(line, key, "expected `disc` or `periodic`")),
                }
            }
            "disc_radius" => self.disc_radius = parse_num(key, v, line)?,
            "box_length" => self.box_length = parse_num(key, v, line)?,
            "poisson_tol" => self.poisson_tol = parse_num(key, v, line)?,
            "poisson_max_iter" => self.poisson_max_iter = parse_num(key, v, line)?,
            "shape_order" => self.shape_order = parse_num(key, v, line)?,
            "b0" => self.b0 = parse_num(key, v, line)?,
            "coupling" => {
                self.coupling = match v {
                    "frozen" => Coupling::Frozen,
                    "extrapolated" => Coupling::Extrapolated,
                    _ => return Err(Error::config(line, key, "expected `frozen` or `extrapolated`")),
                }
            }
            "particles_per_cell" => self.particles_per_cell = parse_num(key, v, line)?,
            "n_particles" => self.n_particles = parse_num(key, v, line)?,
            "diocotron_alpha" => self.diocotron_alpha = parse_num(key, v, line)?,
            "r_minus" => self.r_minus = parse_num(key, v, line)?,
            "r_plus" => self.r_plus = parse_num(key, v, line)?,
            "mode" => self.mode = parse_num(key, v, line)?,
            "mode_radius" => self.mode_radius = parse_num(key, v, line)?,
            "gc_scheme" => self.gc_scheme = parse_scheme(key, v, line)?,
            _ => return Err(Error::config(line, key, "unknown key")),
        }
        Ok(())
    }

    /// All keys with their current values, in [`KEYS`] order (without
    /// `experiment`).
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let fmt_snapshot = |s: SnapshotFormat| match s {
            SnapshotFormat::Text => "text",
            SnapshotFormat::Binary => "binary",
        };
        vec![
            ("eps", self.eps.to_string()),
            ("dt", self.dt.to_string()),
            ("t_end", self.t_end.to_string()),
            ("scheme", self.scheme.to_string()),
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("output_every", self.output_every.to_string()),
            ("snapshot_times", join(&self.snapshot_times)),
            ("snapshot_format", fmt_snapshot(self.snapshot_format).to_string()),
            ("alpha", self.alpha.to_string()),
            ("b_modulation", self.b_modulation.to_string()),
            ("b_min", self.b_min.to_string()),
            ("x0", format!("{}, {}", self.x0.x, self.x0.y)),
            ("z0", format!("{}, {}", self.z0.x, self.z0.y)),
            ("schemes", join(&self.schemes)),
            ("ref_dt", self.ref_dt.to_string()),
            ("eps_list", join(&self.eps_list)),
            ("ap_scheme", self.ap_scheme.to_string()),
            ("well_prepared", self.well_prepared.to_string()),
            ("dt_list", join(&self.dt_list)),
            ("grid_nx", self.grid_nx.to_string()),
            ("grid_ny", self.grid_ny.to_string()),
            (
                "domain",
                match self.domain {
                    DomainKind::Disc => "disc",
                    DomainKind::Periodic => "periodic",
                }
                .to_string(),
            ),
            ("disc_radius", self.disc_radius.to_string()),
            ("box_length", self.box_length.to_string()),
            ("poisson_tol", self.poisson_tol.to_string()),
            ("poisson_max_iter", self.poisson_max_iter.to_string()),
            ("shape_order", self.shape_order.to_string()),
            ("b0", self.b0.to_string()),
            (
                "coupling",
                match self.coupling {
                    Coupling::Frozen => "frozen",
                    Coupling::Extrapolated => "extrapolated",
                }
                .to_string(),
            ),
            ("particles_per_cell", self.particles_per_cell.to_string()),
            ("n_particles", self.n_particles.to_string()),
            ("diocotron_alpha", self.diocotron_alpha.to_string()),
            ("r_minus", self.r_minus.to_string()),
            ("r_plus", self.r_plus.to_string()),
            ("mode", self.mode.to_string()),
            ("mode_radius", self.mode_radius.to_string()),
            ("gc_scheme", self.gc_scheme.to_string()),
        ]
    }

    /// Checks value ranges. Errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::config(None, key, msg.to_string()));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.eps) {
            return bad("eps", "must be positive");
        }
        if !positive(self.dt) {
            return bad("dt", "must be positive");
        }
        if self.t_end < 0.0 || !self.t_end.is_finite() {
            return bad("t_end", "must be nonnegative");
        }
        if self.output_every == 0 {
            return bad("output_every", "must be at least 1");
        }
        if self.snapshot_times.iter().any(|t| *t < 0.0 || t.is_nan()) {
            return bad("snapshot_times", "must be nonnegative");
        }
        if !positive(self.b_min) {
            return bad("b_min", "must be positive");
        }
        if self.b_modulation.abs() >= 1.0 || 1.0 - self.b_modulation.abs() < self.b_min {
            return bad("b_modulation", "magnetic amplitude would drop below b_min");
        }
        if self.b0.abs() < self.b_min {
            return bad("b0", "must be at least b_min in magnitude");
        }
        if self.schemes.is_empty() {
            return bad("schemes", "must not be empty");
        }
        if !positive(self.ref_dt) {
            return bad("ref_dt", "must be positive");
        }
        if self.eps_list.len() < 2 || !self.eps_list.iter().all(|&e| positive(e)) {
            return bad("eps_list", "needs at least two positive values");
        }
        if self.ap_scheme.gc_counterpart().is_none() {
            return bad("ap_scheme", "must be one of euler-si, sdirk2-a, sdirk2-l, imex3");
        }
        if self.dt_list.len() < 2 || !self.dt_list.iter().all(|&d| positive(d)) {
            return bad("dt_list", "needs at least two positive values");
        }
        if self.grid_nx < 12 || self.grid_ny < 12 {
            return bad("grid_nx", "grids need at least 12 nodes per side");
        }
        if !positive(self.disc_radius) {
            return bad("disc_radius", "must be positive");
        }
        if !positive(self.box_length) {
            return bad("box_length", "must be positive");
        }
        if !positive(self.poisson_tol) {
            return bad("poisson_tol", "must be positive");
        }
        if !(1..=3).contains(&self.shape_order) {
            return bad("shape_order", "must be 1, 2 or 3");
        }
        if self.particles_per_cell == 0 && self.n_particles == 0 {
            return bad("particles_per_cell", "either particles_per_cell or n_particles must be positive");
        }
        if !(0.0 < self.r_minus && self.r_minus < self.r_plus) {
            return bad("r_minus", "needs 0 < r_minus < r_plus");
        }
        if self.domain == DomainKind::Disc && self.r_plus >= self.disc_radius {
            return bad("r_plus", "the initial annulus must fit inside the disc");
        }
        if self.domain == DomainKind::Disc && self.mode_radius >= self.disc_radius {
            return bad("mode_radius", "must lie inside the disc");
        }
        if !self.gc_scheme.is_gc() {
            return bad("gc_scheme", "must be a guiding-center scheme");
        }
        Ok(())
    }

    /// Resolved configuration in the same format as the input files.
    pub fn to_text(&self, experiment: Option<Experiment>) -> String {
        let mut s = String::new();
        if let Some(e) = experiment {
            s.push_str(&format!("experiment = {e}\n"));
        }
        for (k, v) in self.entries() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Listing of every key with its default value and description.
    pub fn defaults_listing() -> String {
        let defaults = RunConfig::default();
        let entries = defaults.entries();
        let mut s = String::from("# magpic configuration keys and defaults\n");
        for (key, doc) in KEYS {
            s.push_str(&format!("# {doc}\n"));
            match entries.iter().find(|(k, _)| k == key) {
                Some((_, v)) => s.push_str(&format!("{key} = {v}\n")),
                None => s.push_str(&format!("# {key} =\n")),
            }
        }
        s
    }
}

/// Parses configuration text over the defaults and validates the result.
pub fn parse_config_str(text: &str) -> Result<(RunConfig, ExperimentSpec)> {
    let mut cfg = RunConfig::default();
    let mut spec = ExperimentSpec::default();
    let mut seen: Vec<String> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = Some(n + 1);
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, content, "expected `key = value`"))?;
        let key = key.trim();
        if seen.iter().any(|k| k == key) {
            return Err(Error::config(line, key, "duplicate key"));
        }
        seen.push(key.to_string());
        if key == "experiment" {
            spec.name = Some(value.trim().parse().map_err(|e: Error| Error::config(line, key, e.to_string()))?);
        } else {
            cfg.set(key, value, line)?;
        }
        spec.overrides.push((key.to_string(), value.trim().to_string()));
    }
    cfg.validate()?;
    Ok((cfg, spec))
}

pub fn parse_config(path: &Path) -> Result<(RunConfig, ExperimentSpec)> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}
