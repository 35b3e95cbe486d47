//! Experiment drivers behind the `magpic` subcommands. Each `cmd_*`
//! function writes its files into a run directory and returns a short
//! human-readable summary; the underlying computations are exposed
//! separately so they can be checked without touching the filesystem.

use std::io::Write;
use std::path::Path;

use crate::config::{DomainKind, Experiment, RunConfig};
use crate::diagnostics::{self, fmt_f64, DiagnosticsRecord};
use crate::engine::{self, DiocotronProfile, PicSetup, Simulation};
use crate::error::{Error, Result};
use crate::fields::{AnalyticField, FieldProvider, Vec2};
use crate::output::RunDir;
use crate::par::Workers;
use crate::poisson::{Grid2D, SolverOptions};
use crate::pushers::{self, ParticleState, PusherConfig, Scheme};
use crate::shape::ShapeOrder;

pub fn analytic_field(cfg: &RunConfig) -> AnalyticField {
    AnalyticField::new(cfg.alpha, cfg.b_modulation)
}

/// Initial single-particle state `(x0, eps z0)`.
pub fn initial_particle(cfg: &RunConfig, eps: f64) -> ParticleState {
    ParticleState::new(cfg.x0, cfg.z0 * eps, 1.0)
}

/// RK4 reference states at `0, dt, 2 dt, ...` (`n_steps + 1` states), using
/// an integer number of substeps per step no longer than `ref_dt` and the
/// stability bound.
pub fn reference_trajectory<F: FieldProvider + ?Sized>(
    p0: ParticleState,
    eps: f64,
    dt: f64,
    n_steps: usize,
    ref_dt: f64,
    field: &F,
) -> Result<Vec<ParticleState>> {
    let b_sup = field
        .b_max()
        .ok_or_else(|| Error::InvalidInput("the reference integrator needs a bounded magnetic field".into()))?;
    let h_max = ref_dt.min(pushers::rk4_max_dt(eps, b_sup));
    let sub = (dt / h_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let cfg = PusherConfig::new(eps, dt / sub as f64, Scheme::Rk4Oracle)?;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(p0);
    let mut p = p0;
    for n in 0..n_steps {
        for k in 0..sub {
            let t = n as f64 * dt + k as f64 * cfg.dt;
            p = pushers::push_rk4_oracle(p, &cfg, field, t)?;
        }
        out.push(p);
    }
    Ok(out)
}

/// `sqrt(Σ_{n≥1} dt |x^n - x_ref(t_n)|²)`.
pub fn l2_trajectory_error(traj: &[ParticleState], reference: &[ParticleState], dt: f64) -> f64 {
    traj.iter()
        .zip(reference)
        .skip(1)
        .map(|(a, b)| (a.x - b.x).norm_sq() * dt)
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone)]
pub struct SchemeTrajectory {
    pub scheme: Scheme,
    pub states: Vec<ParticleState>,
    pub l2_error: f64,
    pub final_error: f64,
}

#[derive(Debug, Clone)]
pub struct SingleParticleResult {
    pub reference: Vec<ParticleState>,
    pub runs: Vec<SchemeTrajectory>,
}

/// Every configured scheme against the RK4 reference in the analytic field.
pub fn single_particle(cfg: &RunConfig) -> Result<SingleParticleResult> {
    let field = analytic_field(cfg);
    let n = engine::step_count(cfg.t_end, cfg.dt);
    let p0 = initial_particle(cfg, cfg.eps);
    let reference = reference_trajectory(p0, cfg.eps, cfg.dt, n, cfg.ref_dt, &field)?;
    let mut runs = Vec::new();
    for &scheme in &cfg.schemes {
        let pc = PusherConfig::new(cfg.eps, cfg.dt, scheme)?;
        engine::check_rk4(&pc, 1.0 + cfg.b_modulation.abs())?;
        let states = engine::run_given_field(p0, &pc, &field, 0.0, n)?;
        let l2_error = l2_trajectory_error(&states, &reference, cfg.dt);
        let final_error = (states[n].x - reference[n].x).norm();
        runs.push(SchemeTrajectory { scheme, states, l2_error, final_error });
    }
    Ok(SingleParticleResult { reference, runs })
}

fn write_trajectory<W: Write>(mut out: W, states: &[ParticleState], dt: f64, eps: f64) -> Result<()> {
    writeln!(out, "t,x,y,vx,vy,ux,uy")?;
    for (n, p) in states.iter().enumerate() {
        let u = p.v / eps;
        let cols = [n as f64 * dt, p.x.x, p.x.y, p.v.x, p.v.y, u.x, u.y];
        let line: Vec<String> = cols.iter().map(|&c| fmt_f64(c)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn cmd_single_particle(cfg: &RunConfig, out: &Path) -> Result<String> {
    let dir = RunDir::create(out, Experiment::SingleParticle, cfg)?;
    let res = single_particle(cfg)?;
    write_trajectory(dir.writer("trajectory_rk4.csv")?, &res.reference, cfg.dt, cfg.eps)?;
    let mut summary = dir.writer("summary.csv")?;
    writeln!(summary, "scheme,l2_error,final_error")?;
    let mut report = format!("single particle, eps = {}, dt = {}, T = {}\n", cfg.eps, cfg.dt, cfg.t_end);
    for run in &res.runs {
        write_trajectory(dir.writer(&format!("trajectory_{}.csv", run.scheme))?, &run.states, cfg.dt, cfg.eps)?;
        writeln!(summary, "{},{},{}", run.scheme, fmt_f64(run.l2_error), fmt_f64(run.final_error))?;
        report.push_str(&format!("  {:<10} L2 error {:.3e}  final error {:.3e}\n", run.scheme, run.l2_error, run.final_error));
    }
    summary.flush()?;
    Ok(report)
}

/// One row of the AP sweep: max over steps `n ≥ 1` of `|x^n - y^n|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApRow {
    pub eps: f64,
    pub err_plain: f64,
    pub err_well_prepared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApSweep {
    pub scheme: Scheme,
    pub gc_scheme: Scheme,
    pub rows: Vec<ApRow>,
    pub slope: f64,
}

fn max_distance(a: &[ParticleState], b: &[ParticleState]) -> f64 {
    a.iter().zip(b).skip(1).map(|(p, q)| (p.x - q.x).norm()).fold(0.0, f64::max)
}

/// AP scheme against its guiding-center limit over the `eps` list, from the
/// plain start `y0 = x0` and from the well-prepared start.
pub fn ap_sweep(cfg: &RunConfig) -> Result<ApSweep> {
    let field = analytic_field(cfg);
    let n = engine::step_count(cfg.t_end, cfg.dt);
    let gc_scheme = cfg
        .ap_scheme
        .gc_counterpart()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no guiding-center limit", cfg.ap_scheme)))?;
    let mut rows = Vec::new();
    for &eps in &cfg.eps_list {
        let p0 = initial_particle(cfg, eps);
        let ap = engine::run_given_field(p0, &PusherConfig::new(eps, cfg.dt, cfg.ap_scheme)?, &field, 0.0, n)?;
        let gc_cfg = PusherConfig::new(eps, cfg.dt, gc_scheme)?;
        let gc = engine::run_given_field(p0, &gc_cfg, &field, 0.0, n)?;
        let y0 = pushers::well_prepared_init(p0.x, p0.v, eps, &field, 0.0)?;
        let gc_wp = engine::run_given_field(ParticleState { x: y0, ..p0 }, &gc_cfg, &field, 0.0, n)?;
        rows.push(ApRow {
            eps,
            err_plain: max_distance(&ap, &gc),
            err_well_prepared: max_distance(&ap, &gc_wp),
        });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.err_plain)).collect();
    let slope = diagnostics::convergence_order(&pts)?;
    Ok(ApSweep { scheme: cfg.ap_scheme, gc_scheme, rows, slope })
}

pub fn cmd_ap_sweep(cfg: &RunConfig, out: &Path) -> Result<String> {
    let dir = RunDir::create(out, Experiment::ApSweep, cfg)?;
    let sweep = ap_sweep(cfg)?;
    let mut w = dir.writer("ap_sweep.csv")?;
    if cfg.well_prepared {
        writeln!(w, "eps,err_plain,err_well_prepared")?;
    } else {
        writeln!(w, "eps,err_plain")?;
    }
    let mut report = format!("{} vs {}, dt = {}, T = {}\n", sweep.scheme, sweep.gc_scheme, cfg.dt, cfg.t_end);
    for r in &sweep.rows {
        if cfg.well_prepared {
            writeln!(w, "{},{},{}", fmt_f64(r.eps), fmt_f64(r.err_plain), fmt_f64(r.err_well_prepared))?;
            report.push_str(&format!("  eps {:<8} error {:.3e}  well-prepared {:.3e}\n", r.eps, r.err_plain, r.err_well_prepared));
        } else {
            writeln!(w, "{},{}", fmt_f64(r.eps), fmt_f64(r.err_plain))?;
            report.push_str(&format!("  eps {:<8} error {:.3e}\n", r.eps, r.err_plain));
        }
    }
    w.flush()?;
    std::fs::write(dir.file("ap_slope.txt"), format!("slope = {}\n", fmt_f64(sweep.slope)))?;
    report.push_str(&format!("  fitted slope in eps: {:.3}\n", sweep.slope));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderSweep {
    /// `(scheme, [(dt, error at T)])`.
    pub errors: Vec<(Scheme, Vec<(f64, f64)>)>,
    pub slopes: Vec<(Scheme, f64)>,
}

/// Phase-space error at `T` against RK4 for every scheme and step.
pub fn order_sweep(cfg: &RunConfig) -> Result<OrderSweep> {
    let field = analytic_field(cfg);
    let p0 = initial_particle(cfg, cfg.eps);
    let n_ref = (cfg.t_end / cfg.ref_dt).round().max(1.0) as usize;
    let reference = reference_trajectory(p0, cfg.eps, cfg.t_end, 1, cfg.t_end / n_ref as f64, &field)?[1];
    let mut errors = Vec::new();
    let mut slopes = Vec::new();
    for &scheme in &cfg.schemes {
        let mut pts = Vec::new();
        for &dt in &cfg.dt_list {
            let n = (cfg.t_end / dt).round() as usize;
            if ((n as f64) * dt - cfg.t_end).abs() > 1e-9 * cfg.t_end.max(1.0) {
                return Err(Error::config(None, "dt_list", format!("{dt} does not divide t_end")));
            }
            let pc = PusherConfig::new(cfg.eps, dt, scheme)?;
            engine::check_rk4(&pc, 1.0 + cfg.b_modulation.abs())?;
            let p = *engine::run_given_field(p0, &pc, &field, 0.0, n)?.last().unwrap();
            let err = ((p.x - reference.x).norm_sq() + (p.v - reference.v).norm_sq()).sqrt();
            pts.push((dt, err));
        }
        slopes.push((scheme, diagnostics::convergence_order(&pts)?));
        errors.push((scheme, pts));
    }
    Ok(OrderSweep { errors, slopes })
}

pub fn cmd_order_sweep(cfg: &RunConfig, out: &Path) -> Result<String> {
    let dir = RunDir::create(out, Experiment::OrderSweep, cfg)?;
    let sweep = order_sweep(cfg)?;
    let mut w = dir.writer("order_sweep.csv")?;
    writeln!(w, "scheme,dt,error")?;
    for (scheme, pts) in &sweep.errors {
        for (dt, e) in pts {
            writeln!(w, "{scheme},{},{}", fmt_f64(*dt), fmt_f64(*e))?;
        }
    }
    w.flush()?;
    let mut s = dir.writer("order_slopes.csv")?;
    writeln!(s, "scheme,slope,nominal_order")?;
    let mut report = format!("order sweep, eps = {}, T = {}\n", cfg.eps, cfg.t_end);
    for (scheme, slope) in &sweep.slopes {
        writeln!(s, "{scheme},{},{}", fmt_f64(*slope), scheme.order())?;
        report.push_str(&format!("  {:<10} slope {:.3} (nominal {})\n", scheme, slope, scheme.order()));
    }
    s.flush()?;
    Ok(report)
}

/// Empty grid of the configured domain.
pub fn build_grid(cfg: &RunConfig) -> Result<Grid2D> {
    match cfg.domain {
        DomainKind::Disc => Grid2D::disc(cfg.grid_nx, cfg.grid_ny, cfg.disc_radius),
        DomainKind::Periodic => {
            let l = cfg.box_length;
            Grid2D::periodic(cfg.grid_nx, cfg.grid_ny, l / cfg.grid_nx as f64, Vec2::new(-0.5 * l, -0.5 * l))
        }
    }
}

pub fn diocotron_profile(cfg: &RunConfig) -> DiocotronProfile {
    DiocotronProfile {
        alpha: cfg.diocotron_alpha,
        r_minus: cfg.r_minus,
        r_plus: cfg.r_plus,
        mode: cfg.mode,
    }
}

/// Seeded initial ensemble on the configured grid.
pub fn diocotron_ensemble(cfg: &RunConfig, grid: &Grid2D) -> Result<engine::ParticleEnsemble> {
    let profile = diocotron_profile(cfg);
    let n = if cfg.n_particles > 0 {
        cfg.n_particles
    } else {
        (cfg.particles_per_cell as f64 * profile.annulus_area() / grid.cell_area()).round() as usize
    };
    engine::sample_diocotron(n, cfg.seed, &profile, grid.h)
}

fn pic_setup(cfg: &RunConfig, scheme: Scheme) -> Result<PicSetup> {
    let pusher = PusherConfig::new(cfg.eps, cfg.dt, scheme)?;
    engine::check_rk4(&pusher, cfg.b0)?;
    Ok(PicSetup {
        pusher,
        order: ShapeOrder::new(cfg.shape_order)?,
        solver: SolverOptions {
            tol: cfg.poisson_tol,
            max_iter: cfg.poisson_max_iter,
        },
        b0: cfg.b0,
        mode_radius: cfg.mode_radius,
        coupling: cfg.coupling,
    })
}

/// A self-consistent run initialized from the diocotron profile.
pub fn diocotron_simulation(cfg: &RunConfig, scheme: Scheme) -> Result<Simulation> {
    let grid = build_grid(cfg)?;
    let ensemble = diocotron_ensemble(cfg, &grid)?;
    Simulation::new(pic_setup(cfg, scheme)?, grid, &ensemble, Workers::new(cfg.workers))
}

/// Step indices at which snapshots are taken.
pub fn snapshot_steps(cfg: &RunConfig) -> Vec<usize> {
    let n = engine::step_count(cfg.t_end, cfg.dt);
    let mut steps: Vec<usize> = cfg
        .snapshot_times
        .iter()
        .map(|t| (t / cfg.dt).round() as usize)
        .filter(|&s| s <= n)
        .collect();
    steps.sort_unstable();
    steps.dedup();
    steps
}

fn records_due(step: usize, n: usize, every: usize) -> bool {
    step.is_multiple_of(every) || step == n
}

/// Runs the configured scheme to `t_end`, calling `on_output` on every state
/// reached. Returns the diagnostics series.
pub fn run_diocotron<F>(cfg: &RunConfig, mut on_output: F) -> Result<Vec<DiagnosticsRecord>>
where
    F: FnMut(&Simulation) -> Result<()>,
{
    let mut sim = diocotron_simulation(cfg, cfg.scheme)?;
    let n = engine::step_count(cfg.t_end, cfg.dt);
    let mut series = Vec::new();
    loop {
        if records_due(sim.steps(), n, cfg.output_every) {
            series.push(sim.diagnostics()?);
        }
        on_output(&sim)?;
        if sim.steps() == n {
            break;
        }
        sim.advance()?;
    }
    Ok(series)
}

fn snapshot_stem(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t:09.3}")
}

pub fn cmd_diocotron(cfg: &RunConfig, out: &Path) -> Result<String> {
    let dir = RunDir::create(out, Experiment::Diocotron, cfg)?;
    let snaps = snapshot_steps(cfg);
    let mut n0 = None;
    let series = run_diocotron(cfg, |sim| {
        n0.get_or_insert(sim.live());
        if snaps.binary_search(&sim.steps()).is_ok() {
            dir.snapshot(&snapshot_stem("rho", sim.time()), &sim.grid, sim.time(), cfg.snapshot_format)?;
        }
        Ok(())
    })?;
    diagnostics::write_csv(dir.writer("diagnostics.csv")?, &series)?;
    let first = series.first().expect("at least the initial record");
    let last = series.last().expect("at least the initial record");
    let am = |r: &DiagnosticsRecord| r.mode_amp.get(cfg.mode as usize).copied().unwrap_or(0.0);
    let max_growth = series.iter().map(|r| am(r) / am(first)).fold(0.0, f64::max);
    Ok(format!(
        "diocotron, {} at eps = {}: {} particles\n  t = {}: e_tot {:.6e} (initial {:.6e}), {} live\n  max A{m}(t)/A{m}(0) = {:.3}\n",
        cfg.scheme,
        cfg.eps,
        n0.unwrap_or(0),
        last.t,
        last.e_tot,
        first.e_tot,
        last.n_live,
        max_growth,
        m = cfg.mode,
    ))
}

/// One row of the density comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub l1_diff: f64,
    pub total_charge: f64,
}

impl CompareRow {
    pub fn l1_rel(&self) -> f64 {
        self.l1_diff / self.total_charge
    }
}

/// `Σ |ρ_a - ρ_b| h²` over active nodes.
pub fn l1_density_difference(a: &Grid2D, b: &Grid2D) -> f64 {
    (0..a.len())
        .filter(|&k| a.is_active(k))
        .map(|k| (a.rho[k] - b.rho[k]).abs())
        .sum::<f64>()
        * a.cell_area()
}

#[derive(Debug, Clone)]
pub struct GcCompare {
    pub vlasov: Vec<DiagnosticsRecord>,
    pub gc: Vec<DiagnosticsRecord>,
    pub rows: Vec<CompareRow>,
}

/// Runs the full model with `scheme` and the guiding-center model with
/// `gc_scheme` in lockstep from the same initial particles.
pub fn gc_compare<F>(cfg: &RunConfig, mut on_output: F) -> Result<GcCompare>
where
    F: FnMut(&Simulation, &Simulation) -> Result<()>,
{
    let grid = build_grid(cfg)?;
    let ensemble = diocotron_ensemble(cfg, &grid)?;
    let q = ensemble.total_weight();
    let mut a = Simulation::new(pic_setup(cfg, cfg.scheme)?, grid.clone(), &ensemble, Workers::new(cfg.workers))?;
    let mut b = Simulation::new(pic_setup(cfg, cfg.gc_scheme)?, grid, &ensemble, Workers::new(cfg.workers))?;
    let n = engine::step_count(cfg.t_end, cfg.dt);
    let mut res = GcCompare { vlasov: Vec::new(), gc: Vec::new(), rows: Vec::new() };
    loop {
        if records_due(a.steps(), n, cfg.output_every) {
            res.vlasov.push(a.diagnostics()?);
            res.gc.push(b.diagnostics()?);
            res.rows.push(CompareRow {
                t: a.time(),
                l1_diff: l1_density_difference(&a.grid, &b.grid),
                total_charge: q,
            });
        }
        on_output(&a, &b)?;
        if a.steps() == n {
            break;
        }
        a.advance()?;
        b.advance()?;
    }
    Ok(res)
}

pub fn cmd_gc_compare(cfg: &RunConfig, out: &Path) -> Result<String> {
    let dir = RunDir::create(out, Experiment::GcCompare, cfg)?;
    let snaps = snapshot_steps(cfg);
    let res = gc_compare(cfg, |a, b| {
        if snaps.binary_search(&a.steps()).is_ok() {
            dir.snapshot(&snapshot_stem("rho_vlasov", a.time()), &a.grid, a.time(), cfg.snapshot_format)?;
            dir.snapshot(&snapshot_stem("rho_gc", b.time()), &b.grid, b.time(), cfg.snapshot_format)?;
        }
        Ok(())
    })?;
    diagnostics::write_csv(dir.writer("diagnostics_vlasov.csv")?, &res.vlasov)?;
    diagnostics::write_csv(dir.writer("diagnostics_gc.csv")?, &res.gc)?;
    let mut w = dir.writer("compare.csv")?;
    writeln!(w, "t,l1_diff,total_charge,l1_rel")?;
    for r in &res.rows {
        writeln!(w, "{},{},{},{}", fmt_f64(r.t), fmt_f64(r.l1_diff), fmt_f64(r.total_charge), fmt_f64(r.l1_rel()))?;
    }
    w.flush()?;
    let last = res.rows.last().expect("at least the initial row");
    Ok(format!(
        "{} (eps = {}) vs {}: L1 density difference at t = {} is {:.3e} ({:.2}% of the total charge)\n",
        cfg.scheme,
        cfg.eps,
        cfg.gc_scheme,
        last.t,
        last.l1_diff,
        100.0 * last.l1_rel()
    ))
}

/// Dispatches to the experiment's command.
pub fn run(experiment: Experiment, cfg: &RunConfig, out: &Path) -> Result<String> {
    match experiment {
        Experiment::SingleParticle => cmd_single_particle(cfg, out),
        Experiment::ApSweep => cmd_ap_sweep(cfg, out),
        Experiment::OrderSweep => cmd_order_sweep(cfg, out),
        Experiment::Diocotron => cmd_diocotron(cfg, out),
        Experiment::GcCompare => cmd_gc_compare(cfg, out),
    }
}
