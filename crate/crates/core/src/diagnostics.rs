//! Energies, field norms, azimuthal mode amplitudes and log-log order fits.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::Vec2;
use crate::poisson::Grid2D;
use crate::pushers::ParticleState;
use crate::shape::{self, ShapeOrder};

/// Number of azimuthal modes reported (`l = 0..=MODE_COUNT-1`).
pub const MODE_COUNT: usize = 9;
/// Quadrature points on the sampling circle.
pub const MODE_SAMPLES: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_tot: f64,
    pub e_inf: f64,
    pub mode_amp: [f64; MODE_COUNT],
    pub n_live: usize,
}

/// `e_kin = ½ Σ w |v|²`, `e_pot = ½ Σ |E|² h²` over active nodes.
pub fn energies(particles: &[ParticleState], grid: &Grid2D) -> (f64, f64) {
    let e_kin = 0.5 * particles.iter().map(|p| p.w * p.v.norm_sq()).sum::<f64>();
    let e_pot = 0.5
        * grid.cell_area()
        * (0..grid.len())
            .filter(|&k| grid.is_active(k))
            .map(|k| grid.ex[k] * grid.ex[k] + grid.ey[k] * grid.ey[k])
            .sum::<f64>();
    (e_kin, e_pot)
}

/// `max |E|` over active nodes.
pub fn field_inf_norm(grid: &Grid2D) -> f64 {
    (0..grid.len())
        .filter(|&k| grid.is_active(k))
        .map(|k| grid.ex[k].hypot(grid.ey[k]))
        .fold(0.0, f64::max)
}

/// `A_l = |∮ ρ(r0, θ) e^{-i l θ} dθ|` for `l = 0..=l_max`, with `ρ` sampled
/// on the circle by bilinear interpolation of the nodal density.
pub fn mode_amplitudes(grid: &Grid2D, radius: f64, l_max: usize) -> Result<Vec<f64>> {
    let dtheta = 2.0 * PI / MODE_SAMPLES as f64;
    let samples = (0..MODE_SAMPLES)
        .map(|j| {
            let th = j as f64 * dtheta;
            let x = Vec2::new(radius * th.cos(), radius * th.sin());
            shape::interpolate_scalar(grid, &grid.rho, x, ShapeOrder::LINEAR).map(|r| (th, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..=l_max)
        .map(|l| {
            let (mut re, mut im) = (0.0, 0.0);
            for &(th, r) in &samples {
                let (s, c) = (l as f64 * th).sin_cos();
                re += r * c;
                im -= r * s;
            }
            re.hypot(im) * dtheta
        })
        .collect())
}

/// Least-squares slope of `log(error)` against `log(step)`.
pub fn convergence_order(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("an order fit needs at least two points".into()));
    }
    if points.iter().any(|&(h, e)| h <= 0.0 || e <= 0.0 || h.is_nan() || e.is_nan()) {
        return Err(Error::InvalidInput("an order fit needs positive steps and errors".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("an order fit needs distinct steps".into()));
    }
    Ok(sxy / sxx)
}

pub const CSV_HEADER: &str = "t,e_kin,e_pot,e_tot,e_inf,A0,A1,A2,A3,A4,A5,A6,A7,A8,n_live,e_tot_rel";

/// Floats are written with 17 significant digits so they parse back exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the series as CSV. The last column is `e_tot(t) - e_tot(0)`.
pub fn write_csv<W: Write>(mut out: W, series: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let e0 = series.first().map(|r| r.e_tot).unwrap_or(0.0);
    for r in series {
        let mut cols = vec![fmt_f64(r.t), fmt_f64(r.e_kin), fmt_f64(r.e_pot), fmt_f64(r.e_tot), fmt_f64(r.e_inf)];
        cols.extend(r.mode_amp.iter().map(|&a| fmt_f64(a)));
        cols.push(r.n_live.to_string());
        cols.push(fmt_f64(r.e_tot - e0));
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<_> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&h| (h, 3.0 * h * h)).collect();
        assert_relative_eq!(convergence_order(&pts).unwrap(), 2.0, epsilon = 1e-12);
        let two = [(0.2, 0.8), (0.1, 0.1)];
        assert_relative_eq!(convergence_order(&two).unwrap(), (8.0f64).ln() / 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn order_fit_rejects_bad_input() {
        assert!(convergence_order(&[(0.1, 1.0)]).is_err());
        assert!(convergence_order(&[(0.1, 1.0), (0.2, 0.0)]).is_err());
        assert!(convergence_order(&[(0.1, 1.0), (-0.2, 1.0)]).is_err());
        assert!(convergence_order(&[(0.1, 1.0), (0.1, 2.0)]).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let r = DiagnosticsRecord {
            t: 0.1,
            e_kin: 1.0 / 3.0,
            e_pot: 2.0f64.sqrt(),
            e_tot: 1.0 / 3.0 + 2.0f64.sqrt(),
            e_inf: 1e-300,
            mode_amp: [0.1; MODE_COUNT],
            n_live: 7,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(cols.len(), CSV_HEADER.split(',').count());
        assert_eq!(cols[1].parse::<f64>().unwrap(), r.e_kin);
        assert_eq!(cols[2].parse::<f64>().unwrap(), r.e_pot);
        assert_eq!(cols[4].parse::<f64>().unwrap(), r.e_inf);
        assert_eq!(cols[14], "7");
    }
}
