//! Plane vectors, electromagnetic field samples and field providers.
//!
//! The magnetic field is always out of plane, `B_ext = b e_z`, and providers
//! return the O(1) profile `b`. The `1/eps` scaling of the magnetic field is
//! applied by the pushers.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::poisson::Grid2D;
use crate::shape::{self, ShapeOrder};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// `w ∧ (b e_z)` restricted to the plane: `b (w_y, -w_x)`.
    pub fn cross_bz(self, b: f64) -> Vec2 {
        Vec2::new(b * self.y, -b * self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

/// Electric field and out-of-plane magnetic amplitude at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub e: Vec2,
    pub b: f64,
}

impl FieldSample {
    /// Guiding-center drift `E ∧ B / |B|^2 = (E_y, -E_x) / b`.
    pub fn drift(&self) -> Vec2 {
        self.e.cross_bz(1.0 / self.b)
    }
}

pub trait FieldProvider: Send + Sync {
    fn sample(&self, t: f64, x: Vec2) -> Result<FieldSample>;

    /// Upper bound of `|b|` over the domain when one is known.
    fn b_max(&self) -> Option<f64> {
        None
    }
}

impl<F: FieldProvider + ?Sized> FieldProvider for &F {
    fn sample(&self, t: f64, x: Vec2) -> Result<FieldSample> {
        (**self).sample(t, x)
    }

    fn b_max(&self) -> Option<f64> {
        (**self).b_max()
    }
}

/// Static test field of the single-particle experiment:
/// `phi(x, y) = (x^2 + y^2 + alpha cos^2(2 pi y)) / 2`, `E = -grad phi`,
/// `b(x, y) = 1 + modulation * sin(2 pi x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticField {
    pub alpha: f64,
    pub b_modulation: f64,
}

impl AnalyticField {
    pub const DEFAULT_ALPHA: f64 = 0.02;
    pub const DEFAULT_B_MODULATION: f64 = 0.1;

    pub fn new(alpha: f64, b_modulation: f64) -> Self {
        AnalyticField {
            alpha,
            b_modulation,
        }
    }

    pub fn potential(&self, x: Vec2) -> f64 {
        let c = (2.0 * PI * x.y).cos();
        0.5 * (x.norm_sq() + self.alpha * c * c)
    }
}

impl Default for AnalyticField {
    fn default() -> Self {
        Self::new(Self::DEFAULT_ALPHA, Self::DEFAULT_B_MODULATION)
    }
}

impl FieldProvider for AnalyticField {
    fn sample(&self, t: f64, x: Vec2) -> Result<FieldSample> {
        Ok(analytic_single_particle_field(t, x, self.alpha, self.b_modulation))
    }

    fn b_max(&self) -> Option<f64> {
        Some(1.0 + self.b_modulation.abs())
    }
}

/// Closed-form sample of [`AnalyticField`].
pub fn analytic_single_particle_field(_t: f64, x: Vec2, alpha: f64, b_modulation: f64) -> FieldSample {
    let (s, c) = (2.0 * PI * x.y).sin_cos();
    FieldSample {
        e: Vec2::new(-x.x, -x.y + 2.0 * PI * alpha * c * s),
        b: 1.0 + b_modulation * (2.0 * PI * x.x).sin(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    e: Vec2,
    b: f64,
}

impl FieldProvider for UniformField {
    fn sample(&self, _t: f64, _x: Vec2) -> Result<FieldSample> {
        Ok(FieldSample {
            e: self.e,
            b: self.b,
        })
    }

    fn b_max(&self) -> Option<f64> {
        Some(self.b.abs())
    }
}

/// Field constant in space and time. A vanishing magnetic amplitude is
/// rejected: the guiding-center limit is undefined there.
pub fn uniform_field(e0: Vec2, b0: f64) -> Result<UniformField> {
    if !e0.is_finite() || !b0.is_finite() {
        return Err(Error::InvalidInput("uniform field must be finite".into()));
    }
    if b0 == 0.0 {
        return Err(Error::InvalidInput(
            "uniform field requires a nonzero magnetic amplitude".into(),
        ));
    }
    Ok(UniformField { e: e0, b: b0 })
}

/// Self-consistent field: `E` interpolated from the nodal arrays of a solved
/// grid, with a constant magnetic amplitude. With a trend attached the field
/// is extrapolated linearly in time,
/// `E(t) = E(t0) + (t - t0) / dt * (dex, dey)`.
#[derive(Debug, Clone, Copy)]
pub struct GridField<'a> {
    grid: &'a Grid2D,
    order: ShapeOrder,
    b: f64,
    trend: Option<Trend<'a>>,
}

#[derive(Debug, Clone, Copy)]
struct Trend<'a> {
    dex: &'a [f64],
    dey: &'a [f64],
    t0: f64,
    dt: f64,
}

impl<'a> GridField<'a> {
    pub fn new(grid: &'a Grid2D, order: ShapeOrder, b: f64) -> Self {
        GridField { grid, order, b, trend: None }
    }

    /// Adds the per-step field increment `(dex, dey)` taken at time `t0`.
    pub fn with_trend(mut self, dex: &'a [f64], dey: &'a [f64], t0: f64, dt: f64) -> Self {
        self.trend = Some(Trend { dex, dey, t0, dt });
        self
    }
}

impl FieldProvider for GridField<'_> {
    fn sample(&self, t: f64, x: Vec2) -> Result<FieldSample> {
        let e = match &self.trend {
            Some(tr) if t != tr.t0 => {
                shape::interpolate_shifted(self.grid, tr.dex, tr.dey, (t - tr.t0) / tr.dt, x, self.order)?
            }
            _ => shape::interpolate(self.grid, x, self.order)?,
        };
        Ok(FieldSample { e, b: self.b })
    }

    fn b_max(&self) -> Option<f64> {
        Some(self.b.abs())
    }
}

/// Grid-backed provider with `b = 1`.
pub fn grid_field(grid: &Grid2D, order: ShapeOrder) -> GridField<'_> {
    GridField::new(grid, order, 1.0)
}
