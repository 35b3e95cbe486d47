//! The particle-in-cell loop (deposit → solve → differentiate → push) and
//! the given-field single-particle loop.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::diagnostics::{self, DiagnosticsRecord, MODE_COUNT};
use crate::error::{Error, Result};
use crate::fields::{FieldProvider, GridField, Vec2};
use crate::par::Workers;
use crate::poisson::{self, Domain, Grid2D, SolverOptions};
use crate::pushers::{self, ParticleState, PusherConfig, Scheme};
use crate::shape::{self, ShapeOrder};

/// Structure-of-arrays particle storage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticleEnsemble {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub w: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn with_capacity(n: usize) -> Self {
        ParticleEnsemble {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            vx: Vec::with_capacity(n),
            vy: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn push(&mut self, p: ParticleState) {
        self.x.push(p.x.x);
        self.y.push(p.x.y);
        self.vx.push(p.v.x);
        self.vy.push(p.v.y);
        self.w.push(p.w);
    }

    pub fn get(&self, i: usize) -> ParticleState {
        ParticleState::new(Vec2::new(self.x[i], self.y[i]), Vec2::new(self.vx[i], self.vy[i]), self.w[i])
    }

    pub fn to_states(&self) -> Vec<ParticleState> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.w.iter().sum()
    }
}

impl FromIterator<ParticleState> for ParticleEnsemble {
    fn from_iter<I: IntoIterator<Item = ParticleState>>(iter: I) -> Self {
        let mut e = ParticleEnsemble::default();
        iter.into_iter().for_each(|p| e.push(p));
        e
    }
}

/// Annular initial density of the diocotron experiment:
/// `(1 + alpha cos(l θ)) exp(-4 (|x| - 6.5)^2)` on `r_minus <= |x| <= r_plus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiocotronProfile {
    pub alpha: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub mode: u32,
}

impl Default for DiocotronProfile {
    fn default() -> Self {
        DiocotronProfile {
            alpha: 0.01,
            r_minus: 5.0,
            r_plus: 8.0,
            mode: 7,
        }
    }
}

impl DiocotronProfile {
    pub const CENTER: f64 = 6.5;

    pub fn density(&self, x: Vec2) -> f64 {
        let r = x.norm();
        if r < self.r_minus || r > self.r_plus {
            return 0.0;
        }
        let theta = x.y.atan2(x.x);
        (1.0 + self.alpha * (self.mode as f64 * theta).cos()) * (-4.0 * (r - Self::CENTER).powi(2)).exp()
    }

    pub fn annulus_area(&self) -> f64 {
        PI * (self.r_plus * self.r_plus - self.r_minus * self.r_minus)
    }

    /// `∫ρ₀` by an 8x8 midpoint rule on each cell of size `cell` covering
    /// `[-r_plus, r_plus]^2`.
    pub fn total_charge(&self, cell: f64) -> f64 {
        let n = (2.0 * self.r_plus / cell).ceil() as usize;
        let start = -0.5 * n as f64 * cell;
        let sub = cell / 8.0;
        let mut q = 0.0;
        for cj in 0..n {
            for ci in 0..n {
                let mut acc = 0.0;
                for b in 0..8 {
                    for a in 0..8 {
                        let x = start + ci as f64 * cell + (a as f64 + 0.5) * sub;
                        let y = start + cj as f64 * cell + (b as f64 + 0.5) * sub;
                        acc += self.density(Vec2::new(x, y));
                    }
                }
                q += acc * sub * sub;
            }
        }
        q
    }
}

/// Rejection-samples `n` particles from `ρ₀(x) exp(-|v|²/2) / 2π` with equal
/// weights `Q / n`. Reproducible for a given seed.
pub fn sample_diocotron(n: usize, seed: u64, profile: &DiocotronProfile, quadrature_cell: f64) -> Result<ParticleEnsemble> {
    if n == 0 {
        return Err(Error::InvalidInput("particle count must be positive".into()));
    }
    let q = profile.total_charge(quadrature_cell);
    let w = q / n as f64;
    let bound = 1.0 + profile.alpha.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ParticleEnsemble::with_capacity(n);
    let r = profile.r_plus;
    while out.len() < n {
        let x = Vec2::new(rng.random_range(-r..r), rng.random_range(-r..r));
        let u: f64 = rng.random::<f64>() * bound;
        if u >= profile.density(x) {
            continue;
        }
        let vx: f64 = rng.sample(StandardNormal);
        let vy: f64 = rng.sample(StandardNormal);
        out.push(ParticleState::new(x, Vec2::new(vx, vy), w));
    }
    Ok(out)
}

/// Number of time steps `[T / dt]` (tolerant to rounding of `T / dt`).
pub fn step_count(t_end: f64, dt: f64) -> usize {
    if t_end <= 0.0 {
        return 0;
    }
    ((t_end / dt) * (1.0 + 1e-12)).floor() as usize
}

/// Pushes one particle through `n_steps` steps in a given field and returns
/// the states at `t0, t0 + dt, ...`.
pub fn run_given_field<F: FieldProvider + ?Sized>(
    p0: ParticleState,
    cfg: &PusherConfig,
    field: &F,
    t0: f64,
    n_steps: usize,
) -> Result<Vec<ParticleState>> {
    let mut traj = Vec::with_capacity(n_steps + 1);
    traj.push(p0);
    let mut p = p0;
    for n in 0..n_steps {
        p = pushers::push(p, cfg, field, t0 + n as f64 * cfg.dt)?;
        traj.push(p);
    }
    Ok(traj)
}

/// How the grid field enters the stages of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Every stage sees the field of the start of the step.
    Frozen,
    /// Stages see the field extrapolated linearly in time from the last two
    /// solves (frozen on the first step).
    #[default]
    Extrapolated,
}

/// Parameters of a self-consistent run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicSetup {
    pub pusher: PusherConfig,
    pub order: ShapeOrder,
    pub solver: SolverOptions,
    /// Constant magnetic amplitude.
    pub b0: f64,
    /// Radius of the circle on which mode amplitudes are measured.
    pub mode_radius: f64,
    pub coupling: Coupling,
}

enum Outcome {
    Live(ParticleState),
    Escaped,
    Failed(Error),
}

/// State of a self-consistent run. The grid always holds the density,
/// potential and field of the current particle positions.
#[derive(Debug)]
pub struct Simulation {
    pub setup: PicSetup,
    pub grid: Grid2D,
    pub particles: Vec<ParticleState>,
    pub escaped: usize,
    steps: usize,
    workers: Workers,
    /// Field increment of the last step, kept for extrapolated coupling.
    trend: Option<(Vec<f64>, Vec<f64>)>,
}

impl Simulation {
    pub fn new(setup: PicSetup, grid: Grid2D, ensemble: &ParticleEnsemble, workers: Workers) -> Result<Self> {
        let mut sim = Simulation {
            setup,
            grid,
            particles: ensemble.to_states(),
            escaped: 0,
            steps: 0,
            workers,
            trend: None,
        };
        sim.particles.retain(|p| {
            let keep = sim.grid.contains(p.x);
            if !keep {
                sim.escaped += 1;
            }
            keep
        });
        sim.refresh_field()?;
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.setup.pusher.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn live(&self) -> usize {
        self.particles.len()
    }

    pub fn ensemble(&self) -> ParticleEnsemble {
        self.particles.iter().copied().collect()
    }

    /// Deposit, solve and differentiate for the current positions.
    pub fn refresh_field(&mut self) -> Result<()> {
        shape::deposit_with(&self.workers, &self.particles, &mut self.grid, self.setup.order)?;
        poisson::solve_poisson(&mut self.grid, self.setup.solver)?;
        poisson::gradient_field(&mut self.grid);
        Ok(())
    }

    pub fn diagnostics(&self) -> Result<DiagnosticsRecord> {
        let (e_kin, e_pot) = diagnostics::energies(&self.particles, &self.grid);
        let mut mode_amp = [0.0; MODE_COUNT];
        if matches!(self.grid.domain, Domain::DiscDirichlet { .. }) {
            let a = diagnostics::mode_amplitudes(&self.grid, self.setup.mode_radius, MODE_COUNT - 1)?;
            mode_amp.copy_from_slice(&a);
        }
        Ok(DiagnosticsRecord {
            t: self.time(),
            e_kin,
            e_pot,
            e_tot: e_kin + e_pot,
            e_inf: diagnostics::field_inf_norm(&self.grid),
            mode_amp,
            n_live: self.live(),
        })
    }

    /// Pushes every particle once against the field frozen at the start of
    /// the step, drops escaped particles and refreshes the field.
    pub fn advance(&mut self) -> Result<()> {
        let t = self.time();
        let setup = self.setup;
        let mut field = GridField::new(&self.grid, setup.order, setup.b0);
        if let Some((dex, dey)) = &self.trend {
            field = field.with_trend(dex, dey, t, setup.pusher.dt);
        }
        let grid = &self.grid;
        let mut outcomes: Vec<Outcome> = self.particles.iter().map(|&p| Outcome::Live(p)).collect();
        self.workers.for_each_mut(&mut outcomes, |_, slot| {
            if let Outcome::Live(p) = *slot {
                *slot = match pushers::push(p, &setup.pusher, &field, t) {
                    Ok(q) if grid.contains(q.x) => Outcome::Live(ParticleState { x: grid.wrap(q.x), ..q }),
                    Ok(_) | Err(Error::Escaped { .. }) => Outcome::Escaped,
                    Err(e) => Outcome::Failed(e),
                };
            }
        });
        let mut next = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            match o {
                Outcome::Live(p) => next.push(p),
                Outcome::Escaped => self.escaped += 1,
                Outcome::Failed(e) => return Err(e),
            }
        }
        self.particles = next;
        self.steps += 1;
        if setup.coupling == Coupling::Frozen {
            return self.refresh_field();
        }
        let (ex0, ey0) = (self.grid.ex.clone(), self.grid.ey.clone());
        self.refresh_field()?;
        let diff = |new: &[f64], old: &[f64]| new.iter().zip(old).map(|(a, b)| a - b).collect::<Vec<f64>>();
        self.trend = Some((diff(&self.grid.ex, &ex0), diff(&self.grid.ey, &ey0)));
        Ok(())
    }

    /// Diagnostics of the current state followed by one step.
    pub fn step(&mut self) -> Result<DiagnosticsRecord> {
        let rec = self.diagnostics()?;
        self.advance()?;
        Ok(rec)
    }
}

/// One self-consistent step as a free function: returns the advanced
/// ensemble and grid with the diagnostics of the incoming state.
pub fn step_self_consistent(
    ensemble: &ParticleEnsemble,
    grid: Grid2D,
    setup: PicSetup,
    t: f64,
) -> Result<(ParticleEnsemble, Grid2D, DiagnosticsRecord)> {
    let mut sim = Simulation::new(setup, grid, ensemble, Workers::serial())?;
    let mut rec = sim.step()?;
    rec.t = t;
    Ok((sim.ensemble(), sim.grid, rec))
}

/// Checks the RK4 stability bound for a run.
pub fn check_rk4(cfg: &PusherConfig, b_sup: f64) -> Result<()> {
    if cfg.scheme == Scheme::Rk4Oracle && cfg.dt > pushers::rk4_max_dt(cfg.eps, b_sup) {
        return Err(Error::InvalidInput(format!(
            "rk4 needs dt <= eps^2/(4 sup b) = {:e}",
            pushers::rk4_max_dt(cfg.eps, b_sup)
        )));
    }
    Ok(())
}
