//! WebAssembly bindings for the static demo page in `www/`.

use magpic::cli::{self, analytic_field, initial_particle, reference_trajectory};
use magpic::config::RunConfig;
use magpic::engine::{self, Simulation};
use magpic::fields::{uniform_field, Vec2};
use magpic::pushers::{ParticleState, PusherConfig, Scheme};
use wasm_bindgen::prelude::*;

fn js(e: magpic::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn flatten(states: &[ParticleState]) -> Vec<f64> {
    states.iter().flat_map(|p| [p.x.x, p.x.y]).collect()
}

fn single_particle_config(eps: f64, dt: f64, t_end: f64) -> RunConfig {
    RunConfig {
        eps,
        dt,
        t_end,
        ..RunConfig::default()
    }
}

/// Positions `[x0, y0, x1, y1, ...]` of one particle in the analytic field.
#[wasm_bindgen]
pub fn trajectory(scheme: &str, eps: f64, dt: f64, t_end: f64) -> Result<Vec<f64>, JsError> {
    let scheme: Scheme = scheme.parse().map_err(js)?;
    let cfg = single_particle_config(eps, dt, t_end);
    let pc = PusherConfig::new(eps, dt, scheme).map_err(js)?;
    let field = analytic_field(&cfg);
    let n = engine::step_count(t_end, dt);
    let states = engine::run_given_field(initial_particle(&cfg, eps), &pc, &field, 0.0, n).map_err(js)?;
    Ok(flatten(&states))
}

/// RK4 reference positions at the same times as [`trajectory`], with RK4
/// substeps no longer than `max_substep`.
#[wasm_bindgen]
pub fn reference(eps: f64, dt: f64, t_end: f64, max_substep: f64) -> Result<Vec<f64>, JsError> {
    let cfg = single_particle_config(eps, dt, t_end);
    let field = analytic_field(&cfg);
    let n = engine::step_count(t_end, dt);
    let states = reference_trajectory(initial_particle(&cfg, eps), eps, dt, n, max_substep, &field).map_err(js)?;
    Ok(flatten(&states))
}

/// `|v^n|² / |v^0|²` without electric field and with `b = 1`.
#[wasm_bindgen]
pub fn kinetic_energy_history(scheme: &str, eps: f64, dt: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    let scheme: Scheme = scheme.parse().map_err(js)?;
    let pc = PusherConfig::new(eps, dt, scheme).map_err(js)?;
    let field = uniform_field(Vec2::new(0.0, 0.0), 1.0).map_err(js)?;
    let p0 = ParticleState::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 1.0);
    let states = engine::run_given_field(p0, &pc, &field, 0.0, steps).map_err(js)?;
    Ok(states.iter().map(|p| p.v.norm_sq()).collect())
}

/// Self-consistent diocotron run on a disc.
#[wasm_bindgen]
pub struct DiocotronDemo {
    sim: Simulation,
    mode: usize,
    a0: f64,
}

#[wasm_bindgen]
impl DiocotronDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(scheme: &str, eps: f64, dt: f64, nx: usize, particles_per_cell: usize, seed: u64) -> Result<DiocotronDemo, JsError> {
        let cfg = RunConfig {
            scheme: scheme.parse().map_err(js)?,
            eps,
            dt,
            grid_nx: nx,
            grid_ny: nx,
            particles_per_cell,
            seed,
            workers: 1,
            ..RunConfig::default()
        };
        cfg.validate().map_err(js)?;
        let sim = cli::diocotron_simulation(&cfg, cfg.scheme).map_err(js)?;
        let mode = cfg.mode as usize;
        let a0 = sim.diagnostics().map_err(js)?.mode_amp[mode];
        Ok(DiocotronDemo { sim, mode, a0 })
    }

    pub fn step(&mut self, steps: usize) -> Result<(), JsError> {
        for _ in 0..steps {
            self.sim.advance().map_err(js)?;
        }
        Ok(())
    }

    /// Nodal density, row-major.
    pub fn density(&self) -> Vec<f64> {
        self.sim.grid.rho.clone()
    }

    pub fn nx(&self) -> usize {
        self.sim.grid.nx
    }

    pub fn ny(&self) -> usize {
        self.sim.grid.ny
    }

    pub fn time(&self) -> f64 {
        self.sim.time()
    }

    pub fn live(&self) -> usize {
        self.sim.live()
    }

    /// Current mode amplitude relative to its initial value.
    pub fn mode_growth(&self) -> Result<f64, JsError> {
        let rec = self.sim.diagnostics().map_err(js)?;
        Ok(rec.mode_amp[self.mode] / self.a0)
    }
}
