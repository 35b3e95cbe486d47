use std::f64::consts::PI;

use magpic::diagnostics;
use magpic::fields::Vec2;
use magpic::poisson::{self, Grid2D, SolverOptions};

fn fill(grid: &mut Grid2D, f: impl Fn(Vec2) -> f64) {
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.idx(i, j);
            if grid.is_active(k) {
                grid.rho[k] = f(grid.node(i, j));
            }
        }
    }
}

#[test]
fn manufactured_periodic_field_converges_at_second_order() {
    let mut pts = Vec::new();
    for n in [16, 32, 64] {
        let h = 2.0 / n as f64;
        let mut g = Grid2D::periodic(n, n, h, Vec2::new(-1.0, -1.0)).unwrap();
        fill(&mut g, |p| 2.0 * PI * PI * (PI * p.x).cos() * (PI * p.y).sin());
        poisson::solve_poisson(&mut g, SolverOptions::default()).unwrap();
        poisson::gradient_field(&mut g);
        let mut err: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let p = g.node(i, j);
                let ex = PI * (PI * p.x).sin() * (PI * p.y).sin();
                err = err.max((g.ex[g.idx(i, j)] - ex).abs());
            }
        }
        pts.push((h, err));
    }
    let slope = diagnostics::convergence_order(&pts).unwrap();
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn disc_solution_inherits_symmetries_of_the_charge() {
    let mut g = Grid2D::disc(41, 41, 5.0).unwrap();
    fill(&mut g, |p| (1.0 + 0.3 * (2.0 * p.y.atan2(p.x)).cos()) * (-(p.norm() - 2.5).powi(2)).exp());
    poisson::solve_poisson(&mut g, SolverOptions { tol: 1e-13, max_iter: 10_000 }).unwrap();
    let n = g.nx;
    let scale = g.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..n {
        for i in 0..n {
            // reflection (x, y) -> (x, -y)
            let a = g.phi[g.idx(i, j)];
            let b = g.phi[g.idx(i, n - 1 - j)];
            assert!((a - b).abs() < 1e-9 * scale);
        }
    }
    let mut r = Grid2D::disc(41, 41, 5.0).unwrap();
    fill(&mut r, |p| (-(p.norm() - 2.5).powi(2)).exp() * (1.0 + 0.2 * (4.0 * p.y.atan2(p.x)).cos()));
    poisson::solve_poisson(&mut r, SolverOptions { tol: 1e-13, max_iter: 10_000 }).unwrap();
    let scale = r.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..n {
        for i in 0..n {
            // quarter turn (x, y) -> (-y, x)
            let a = r.phi[r.idx(i, j)];
            let b = r.phi[r.idx(n - 1 - j, i)];
            assert!((a - b).abs() < 1e-9 * scale);
        }
    }
}

#[test]
fn disc_uniform_charge_converges_at_second_order() {
    // exact solution φ = (R² - r²)/4
    let radius = 3.0;
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let mut g = Grid2D::disc(n, n, radius).unwrap();
        fill(&mut g, |_| 1.0);
        poisson::solve_poisson(&mut g, SolverOptions { tol: 1e-12, max_iter: 20_000 }).unwrap();
        let mut err: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let k = g.idx(i, j);
                if g.is_active(k) {
                    let r2 = g.node(i, j).norm_sq();
                    err = err.max((g.phi[k] - (radius * radius - r2) / 4.0).abs());
                }
            }
        }
        errs.push((g.h, err));
    }
    let slope = diagnostics::convergence_order(&errs).unwrap();
    assert!(slope > 1.8, "{errs:?}");
}

#[test]
fn potential_energy_of_manufactured_potential() {
    let n = 64;
    let h = 1.0 / n as f64;
    let mut g = Grid2D::periodic(n, n, h, Vec2::ZERO).unwrap();
    for j in 0..n {
        for i in 0..n {
            let p = g.node(i, j);
            let k = g.idx(i, j);
            g.phi[k] = (2.0 * PI * p.x).sin() * (2.0 * PI * p.y).sin();
        }
    }
    poisson::gradient_field(&mut g);
    let (e_kin, e_pot) = diagnostics::energies(&[], &g);
    let damping = (2.0 * PI * h).sin() / (2.0 * PI * h);
    assert_eq!(e_kin, 0.0);
    assert!((e_pot - PI * PI * damping * damping).abs() < 1e-12);
    assert!((e_pot - PI * PI).abs() < 0.01 * PI * PI);
}

#[test]
fn zero_charge_means_zero_energy() {
    let mut g = Grid2D::disc(32, 32, 2.0).unwrap();
    poisson::solve_poisson(&mut g, SolverOptions::default()).unwrap();
    poisson::gradient_field(&mut g);
    assert_eq!(diagnostics::energies(&[], &g).1, 0.0);
    assert_eq!(diagnostics::field_inf_norm(&g), 0.0);
}
