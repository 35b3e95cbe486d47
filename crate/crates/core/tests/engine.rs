use magpic::cli;
use magpic::config::RunConfig;
use magpic::engine::{self, Coupling, DiocotronProfile, ParticleEnsemble, PicSetup, Simulation};
use magpic::fields::{uniform_field, GridField, Vec2};
use magpic::par::Workers;
use magpic::poisson::{self, Grid2D, SolverOptions};
use magpic::pushers::{self, ParticleState, PusherConfig, Scheme};
use magpic::shape::{self, ShapeOrder};

fn setup(scheme: Scheme, eps: f64, dt: f64, coupling: Coupling) -> PicSetup {
    PicSetup {
        pusher: PusherConfig::new(eps, dt, scheme).unwrap(),
        order: ShapeOrder::QUADRATIC,
        solver: SolverOptions::default(),
        b0: 1.0,
        mode_radius: 6.5,
        coupling,
    }
}

fn annulus(n: usize, alpha: f64, seed: u64) -> ParticleEnsemble {
    let profile = DiocotronProfile { alpha, ..DiocotronProfile::default() };
    engine::sample_diocotron(n, seed, &profile, 0.5).unwrap()
}

#[test]
fn zero_charge_particles_rotate_freely() {
    let mut ens = annulus(200, 0.01, 5);
    ens.w.iter_mut().for_each(|w| *w = 0.0);
    let s = setup(Scheme::Imex3, 0.3, 0.05, Coupling::Extrapolated);
    let mut sim = Simulation::new(s, Grid2D::disc(32, 32, 10.0).unwrap(), &ens, Workers::serial()).unwrap();
    for _ in 0..5 {
        sim.advance().unwrap();
    }
    let free = uniform_field(Vec2::ZERO, 1.0).unwrap();
    for (k, p) in ens.to_states().into_iter().enumerate() {
        let q = engine::run_given_field(p, &s.pusher, &free, 0.0, 5).unwrap()[5];
        assert_eq!(sim.particles[k].x, q.x);
        assert_eq!(sim.particles[k].v, q.v);
    }
}

#[test]
fn one_step_is_the_composition_of_its_parts() {
    let ens = annulus(3000, 0.01, 9);
    let s = setup(Scheme::Sdirk2L, 0.1, 0.05, Coupling::Frozen);
    let grid = Grid2D::disc(40, 40, 10.0).unwrap();
    let (next, _, rec) = engine::step_self_consistent(&ens, grid.clone(), s, 0.0).unwrap();

    let mut g = grid;
    let particles = ens.to_states();
    shape::deposit(&particles, &mut g, s.order).unwrap();
    poisson::solve_poisson(&mut g, s.solver).unwrap();
    poisson::gradient_field(&mut g);
    let field = GridField::new(&g, s.order, s.b0);
    let manual: Vec<ParticleState> = particles.iter().map(|&p| pushers::push(p, &s.pusher, &field, 0.0).unwrap()).collect();
    assert_eq!(next.to_states(), manual);
    assert_eq!(rec.n_live, 3000);
    assert_eq!(rec.t, 0.0);
}

#[test]
fn deposited_charge_tracks_live_particles() {
    let ens = annulus(4000, 0.01, 2);
    let s = setup(Scheme::Imex3, 1.0, 0.1, Coupling::Extrapolated);
    let mut sim = Simulation::new(s, Grid2D::disc(32, 32, 8.5).unwrap(), &ens, Workers::serial()).unwrap();
    for _ in 0..30 {
        sim.advance().unwrap();
        let q: f64 = sim.particles.iter().map(|p| p.w).sum();
        let deposited = sim.grid.rho.iter().sum::<f64>() * sim.grid.cell_area();
        assert!((deposited - q).abs() < 1e-12 * ens.total_weight());
        assert_eq!(sim.live() + sim.escaped, 4000);
    }
    // a wall at 8.5 is inside the reach of the eps = 1 gyration
    assert!(sim.escaped > 0);
}

#[test]
fn worker_count_does_not_change_results() {
    let ens = annulus(20_000, 0.01, 4);
    let run = |workers: usize| {
        let s = setup(Scheme::Imex3, 0.01, 0.05, Coupling::Extrapolated);
        let mut sim = Simulation::new(s, Grid2D::disc(40, 40, 10.0).unwrap(), &ens, Workers::new(workers)).unwrap();
        (0..4).map(|_| sim.step().unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn zero_end_time_gives_initial_diagnostics_only() {
    let cfg = RunConfig { t_end: 0.0, grid_nx: 24, grid_ny: 24, particles_per_cell: 5, ..RunConfig::default() };
    let series = cli::run_diocotron(&cfg, |_| Ok(())).unwrap();
    assert_eq!(series.len(), 1);
    assert_eq!(series[0].t, 0.0);
}

#[test]
fn sampled_ensemble_statistics() {
    let n = 1_000_000;
    let ens = annulus(n, 0.01, 12);
    let v2: Vec<f64> = (0..n).map(|k| ens.vx[k] * ens.vx[k] + ens.vy[k] * ens.vy[k]).collect();
    let mean = v2.iter().sum::<f64>() / n as f64;
    // |v|² of a 2D standard normal is exponential with mean 2 and variance 4
    assert!((mean - 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt(), "mean |v|^2 = {mean}");

    // radial marginal ∝ r exp(-4 (r - 6.5)²) on [5, 8]
    let bins = 30;
    let width = 3.0 / bins as f64;
    let mut counts = vec![0usize; bins];
    for k in 0..n {
        let r = ens.x[k].hypot(ens.y[k]);
        assert!((5.0..=8.0).contains(&r));
        counts[((r - 5.0) / width).floor().min(bins as f64 - 1.0) as usize] += 1;
    }
    let weight = |r: f64| r * (-4.0 * (r - 6.5) * (r - 6.5)).exp();
    let mass: Vec<f64> = (0..bins)
        .map(|b| {
            let a = 5.0 + b as f64 * width;
            let m = 200;
            (0..m).map(|i| weight(a + (i as f64 + 0.5) * width / m as f64)).sum::<f64>() * width / m as f64
        })
        .collect();
    let total: f64 = mass.iter().sum();
    let chi2: f64 = counts
        .iter()
        .zip(&mass)
        .map(|(&c, &m)| {
            let expected = n as f64 * m / total;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    // 29 degrees of freedom; 70 is far in the tail
    assert!(chi2 < 70.0, "chi2 = {chi2}");
}

#[test]
fn radial_column_rotates_without_spreading_in_the_limit() {
    let ens = annulus(40_000, 0.0, 8);
    let s = setup(Scheme::GcRk3, 1e-3, 0.1, Coupling::Extrapolated);
    let mut sim = Simulation::new(s, Grid2D::disc(64, 64, 10.0).unwrap(), &ens, Workers::serial()).unwrap();
    let mean_r = |ps: &[ParticleState]| ps.iter().map(|p| p.x.norm()).sum::<f64>() / ps.len() as f64;
    let r0 = mean_r(&sim.particles);
    let theta0 = sim.particles[0].x.y.atan2(sim.particles[0].x.x);
    for _ in 0..20 {
        sim.advance().unwrap();
    }
    assert!((mean_r(&sim.particles) - r0).abs() < 2e-3, "{} vs {r0}", mean_r(&sim.particles));
    let theta1 = sim.particles[0].x.y.atan2(sim.particles[0].x.x);
    assert!((theta1 - theta0).abs() > 1e-2);
}

#[test]
fn extrapolated_coupling_keeps_potential_energy_closer() {
    let ens = annulus(30_000, 0.01, 3);
    let drift = |coupling| {
        let s = setup(Scheme::GcRk3, 1e-3, 0.2, coupling);
        let mut sim = Simulation::new(s, Grid2D::disc(48, 48, 10.0).unwrap(), &ens, Workers::serial()).unwrap();
        let e0 = sim.diagnostics().unwrap().e_pot;
        (0..100).map(|_| (sim.step().unwrap().e_pot - e0).abs() / e0).fold(0.0, f64::max)
    };
    assert!(drift(Coupling::Extrapolated) < drift(Coupling::Frozen));
}
