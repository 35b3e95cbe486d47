//! B-spline particle shapes, charge deposition and field interpolation.
//!
//! A shape of order `m` is the centered uniform B-spline of degree `m`
//! scaled by the grid spacing; its support covers `m + 1` nodes per axis.
//! Deposition and interpolation use the same tensor-product weights, which
//! makes them adjoint to each other.

use crate::error::{Error, Result};
use crate::fields::Vec2;
use crate::par::Workers;
use crate::poisson::{Domain, Grid2D};
use crate::pushers::ParticleState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeOrder(u8);

impl ShapeOrder {
    pub const LINEAR: ShapeOrder = ShapeOrder(1);
    pub const QUADRATIC: ShapeOrder = ShapeOrder(2);
    pub const CUBIC: ShapeOrder = ShapeOrder(3);

    pub fn new(order: u8) -> Result<Self> {
        match order {
            1..=3 => Ok(ShapeOrder(order)),
            _ => Err(Error::InvalidInput(format!(
                "shape order must be 1, 2 or 3 (got {order})"
            ))),
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn support(self) -> usize {
        self.0 as usize + 1
    }
}

impl Default for ShapeOrder {
    fn default() -> Self {
        ShapeOrder::QUADRATIC
    }
}

/// Up to four 1D weights; only the first `len` are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    w: [f64; 4],
    len: usize,
}

impl Weights {
    pub fn as_slice(&self) -> &[f64] {
        &self.w[..self.len]
    }
}

/// Segment basis of the uniform B-spline: the weights of the `m + 1`
/// consecutive nodes influencing a point at offset `xi ∈ [0, 1)` past the
/// first node of its shifted cell.
pub fn spline_weights(xi: f64, order: ShapeOrder) -> Weights {
    let mut w = [0.0; 4];
    match order.0 {
        1 => {
            w[0] = 1.0 - xi;
            w[1] = xi;
        }
        2 => {
            let r = 1.0 - xi;
            w[0] = 0.5 * r * r;
            w[1] = 0.5 + xi * r;
            w[2] = 0.5 * xi * xi;
        }
        _ => {
            let r = 1.0 - xi;
            let xi2 = xi * xi;
            let xi3 = xi2 * xi;
            w[0] = r * r * r / 6.0;
            w[1] = (3.0 * xi3 - 6.0 * xi2 + 4.0) / 6.0;
            w[2] = (-3.0 * xi3 + 3.0 * xi2 + 3.0 * xi + 1.0) / 6.0;
            w[3] = xi3 / 6.0;
        }
    }
    Weights {
        w,
        len: order.support(),
    }
}

/// First node index and weights for a coordinate `u` in grid units.
pub fn stencil_1d(u: f64, order: ShapeOrder) -> (i64, Weights) {
    let s = u - 0.5 * (order.0 as f64 - 1.0);
    let first = s.floor();
    (first as i64, spline_weights(s - first, order))
}

/// Centered B-spline kernel of the given order in units of the grid spacing.
pub fn kernel(y: f64, order: ShapeOrder) -> f64 {
    let a = y.abs();
    match order.0 {
        1 => (1.0 - a).max(0.0),
        2 => {
            if a <= 0.5 {
                0.75 - a * a
            } else if a <= 1.5 {
                0.5 * (1.5 - a) * (1.5 - a)
            } else {
                0.0
            }
        }
        _ => {
            if a <= 1.0 {
                (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
            } else if a <= 2.0 {
                (2.0 - a).powi(3) / 6.0
            } else {
                0.0
            }
        }
    }
}

/// Resolved 2D stencil: row/column node indices (already wrapped for
/// periodic grids) and their weights.
struct Stencil2 {
    ix: [usize; 4],
    iy: [usize; 4],
    wx: Weights,
    wy: Weights,
}

fn resolve(grid: &Grid2D, x: Vec2, order: ShapeOrder) -> Result<Stencil2> {
    if !x.is_finite() || !grid.contains(x) {
        return Err(Error::escaped(x));
    }
    let u = (x.x - grid.origin.x) / grid.h;
    let v = (x.y - grid.origin.y) / grid.h;
    let (fx, wx) = stencil_1d(u, order);
    let (fy, wy) = stencil_1d(v, order);
    let n = order.support();
    let mut ix = [0usize; 4];
    let mut iy = [0usize; 4];
    let periodic = matches!(grid.domain, Domain::PeriodicBox);
    for k in 0..n {
        let (a, b) = (fx + k as i64, fy + k as i64);
        if periodic {
            ix[k] = a.rem_euclid(grid.nx as i64) as usize;
            iy[k] = b.rem_euclid(grid.ny as i64) as usize;
        } else {
            if a < 0 || b < 0 || a >= grid.nx as i64 || b >= grid.ny as i64 {
                return Err(Error::escaped(x));
            }
            ix[k] = a as usize;
            iy[k] = b as usize;
        }
    }
    Ok(Stencil2 { ix, iy, wx, wy })
}

fn scatter(grid_nx: usize, st: &Stencil2, q: f64, out: &mut [f64]) {
    for (b, &wy) in st.wy.as_slice().iter().enumerate() {
        let row = st.iy[b] * grid_nx;
        for (a, &wx) in st.wx.as_slice().iter().enumerate() {
            out[row + st.ix[a]] += q * wx * wy;
        }
    }
}

fn gather(grid_nx: usize, st: &Stencil2, fields: [&[f64]; 2]) -> Vec2 {
    let mut acc = Vec2::ZERO;
    for (b, &wy) in st.wy.as_slice().iter().enumerate() {
        let row = st.iy[b] * grid_nx;
        let mut line = Vec2::ZERO;
        for (a, &wx) in st.wx.as_slice().iter().enumerate() {
            let k = row + st.ix[a];
            line += Vec2::new(fields[0][k], fields[1][k]) * wx;
        }
        acc += line * wy;
    }
    acc
}

const DEPOSIT_CHUNK: usize = 8192;

/// Deposits particle charges onto `grid.rho` (overwriting it) as a nodal
/// density, so that `sum(rho) h^2 = sum(w)`.
pub fn deposit(particles: &[ParticleState], grid: &mut Grid2D, order: ShapeOrder) -> Result<()> {
    deposit_with(&Workers::serial(), particles, grid, order)
}

/// Parallel [`deposit`]: fixed-size chunks accumulate into private grids
/// that are merged in chunk order.
pub fn deposit_with(
    workers: &Workers,
    particles: &[ParticleState],
    grid: &mut Grid2D,
    order: ShapeOrder,
) -> Result<()> {
    let len = grid.len();
    let inv_area = 1.0 / (grid.h * grid.h);
    let g: &Grid2D = grid;
    let partials = workers.map_chunks(particles, DEPOSIT_CHUNK, |offset, chunk| {
        let mut local = vec![0.0; len];
        for (k, p) in chunk.iter().enumerate() {
            let st = resolve(g, p.x, order).map_err(|e| e.with_index(offset + k))?;
            scatter(g.nx, &st, p.w * inv_area, &mut local);
        }
        Ok::<_, Error>(local)
    });
    grid.rho.iter_mut().for_each(|r| *r = 0.0);
    for part in partials {
        let part = part?;
        for (r, p) in grid.rho.iter_mut().zip(&part) {
            *r += p;
        }
    }
    Ok(())
}

/// Tensor-product spline interpolation of the nodal electric field.
pub fn interpolate(grid: &Grid2D, x: Vec2, order: ShapeOrder) -> Result<Vec2> {
    let st = resolve(grid, x, order)?;
    Ok(gather(grid.nx, &st, [&grid.ex, &grid.ey]))
}

/// Interpolates `E + s (dex, dey)` at `x` with a single stencil.
pub fn interpolate_shifted(grid: &Grid2D, dex: &[f64], dey: &[f64], s: f64, x: Vec2, order: ShapeOrder) -> Result<Vec2> {
    let st = resolve(grid, x, order)?;
    let mut acc = Vec2::ZERO;
    for (b, &wy) in st.wy.as_slice().iter().enumerate() {
        let row = st.iy[b] * grid.nx;
        let mut line = Vec2::ZERO;
        for (a, &wx) in st.wx.as_slice().iter().enumerate() {
            let k = row + st.ix[a];
            line += Vec2::new(grid.ex[k] + s * dex[k], grid.ey[k] + s * dey[k]) * wx;
        }
        acc += line * wy;
    }
    Ok(acc)
}

/// Interpolates a single nodal array (e.g. the density) at `x`.
pub fn interpolate_scalar(grid: &Grid2D, values: &[f64], x: Vec2, order: ShapeOrder) -> Result<f64> {
    let st = resolve(grid, x, order)?;
    Ok(gather(grid.nx, &st, [values, values]).x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub order: ShapeOrder,
    pub mass: f64,
    pub first_moment: f64,
    pub second_moment: f64,
    pub min_value: f64,
}

impl MomentReport {
    /// Unit mass and vanishing first moment, i.e. a moment condition of
    /// order at least 2, and a nonnegative kernel.
    pub fn passes(&self) -> bool {
        (self.mass - 1.0).abs() < 1e-10 && self.first_moment.abs() < 1e-10 && self.min_value >= 0.0
    }
}

/// Integrates the kernel numerically with the composite midpoint rule
/// (about 10^4 points, aligned with the polynomial breakpoints).
pub fn moment_check(order: ShapeOrder) -> MomentReport {
    let half = order.support() as f64 / 2.0;
    let pieces = order.support();
    let per_piece = 10_000usize.div_ceil(pieces);
    let dy = 1.0 / per_piece as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    let mut min_value = f64::INFINITY;
    for p in 0..pieces {
        for i in 0..per_piece {
            let y = -half + p as f64 + (i as f64 + 0.5) * dy;
            let k = kernel(y, order);
            min_value = min_value.min(k);
            m0 += k * dy;
            m1 += y * k * dy;
            m2 += y * y * k * dy;
        }
    }
    MomentReport {
        order,
        mass: m0,
        first_moment: m1,
        second_moment: m2,
        min_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn orders() -> [ShapeOrder; 3] {
        [ShapeOrder::LINEAR, ShapeOrder::QUADRATIC, ShapeOrder::CUBIC]
    }

    #[test]
    fn linear_weights() {
        assert_eq!(spline_weights(0.0, ShapeOrder::LINEAR).as_slice(), &[1.0, 0.0]);
        assert_eq!(spline_weights(0.5, ShapeOrder::LINEAR).as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn cubic_weights_at_node() {
        let w = spline_weights(0.0, ShapeOrder::CUBIC);
        let expect = [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0, 0.0];
        for (a, b) in w.as_slice().iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn segment_basis_matches_kernel() {
        // brute force: weight of node first+k is kernel(u - (first + k))
        for order in orders() {
            for &u in &[3.0, 3.2, 3.5, 3.77, 4.999] {
                let (first, w) = stencil_1d(u, order);
                for (k, wk) in w.as_slice().iter().enumerate() {
                    let node = (first + k as i64) as f64;
                    assert_relative_eq!(*wk, kernel(u - node, order), epsilon = 1e-14);
                }
                // nodes outside the stencil carry no weight
                assert_eq!(kernel(u - (first - 1) as f64, order), 0.0);
                assert!(kernel(u - (first + order.support() as i64) as f64, order) < 1e-15);
            }
        }
    }

    #[test]
    fn moments() {
        for order in orders() {
            let r = moment_check(order);
            assert!(r.passes(), "{r:?}");
            // variance of the sum of m+1 independent unit uniforms
            let expect = order.support() as f64 / 12.0;
            assert_relative_eq!(r.second_moment, expect, epsilon = 1e-8);
        }
        assert_relative_eq!(moment_check(ShapeOrder::CUBIC).second_moment, 1.0 / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn rejects_bad_order() {
        assert!(ShapeOrder::new(0).is_err());
        assert!(ShapeOrder::new(4).is_err());
    }

    proptest! {
        #[test]
        fn partition_of_unity(xi in 0.0f64..1.0, o in 1u8..=3) {
            let w = spline_weights(xi, ShapeOrder::new(o).unwrap());
            let s: f64 = w.as_slice().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-14);
            prop_assert!(w.as_slice().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn reproduces_linear_coordinate(u in 5.0f64..20.0, o in 1u8..=3) {
            let (first, w) = stencil_1d(u, ShapeOrder::new(o).unwrap());
            let s: f64 = w.as_slice().iter().enumerate().map(|(k, wk)| wk * (first + k as i64) as f64).sum();
            prop_assert!((s - u).abs() < 1e-12);
        }
    }
}
