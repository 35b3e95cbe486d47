//! Particle time integrators for
//!
//! ```text
//! eps dx/dt = v
//! eps dv/dt = (v / eps) ∧ B_ext(t, x) + E(t, x)
//! ```
//!
//! The semi-implicit schemes treat the Lorentz term implicitly in `v` with
//! the magnetic amplitude frozen at the stage point, so every implicit stage
//! is one closed-form 2x2 solve ([`rotate_solve`]). They stay stable for
//! `dt / eps^2 → ∞` and reduce to explicit schemes for the guiding-center
//! drift `dy/dt = E ∧ B / |B|^2` ([`push_gc`]).

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::{FieldProvider, FieldSample, Vec2};

/// One macro-particle. `v` is the unscaled velocity of the model, not
/// `v / eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub x: Vec2,
    pub v: Vec2,
    pub w: f64,
}

impl ParticleState {
    pub fn new(x: Vec2, v: Vec2, w: f64) -> Self {
        ParticleState { x, v, w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    EulerSI,
    Sdirk2A,
    Sdirk2L,
    Imex3,
    GcEuler,
    GcHeun,
    GcLStable,
    GcRk3,
    Rk4Oracle,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::EulerSI,
        Scheme::Sdirk2A,
        Scheme::Sdirk2L,
        Scheme::Imex3,
        Scheme::GcEuler,
        Scheme::GcHeun,
        Scheme::GcLStable,
        Scheme::GcRk3,
        Scheme::Rk4Oracle,
    ];

    /// The asymptotic-preserving schemes.
    pub const AP: [Scheme; 4] = [Scheme::EulerSI, Scheme::Sdirk2A, Scheme::Sdirk2L, Scheme::Imex3];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EulerSI => "euler-si",
            Scheme::Sdirk2A => "sdirk2-a",
            Scheme::Sdirk2L => "sdirk2-l",
            Scheme::Imex3 => "imex3",
            Scheme::GcEuler => "gc-euler",
            Scheme::GcHeun => "gc-heun",
            Scheme::GcLStable => "gc-lstable",
            Scheme::GcRk3 => "gc-rk3",
            Scheme::Rk4Oracle => "rk4",
        }
    }

    pub fn is_gc(self) -> bool {
        matches!(self, Scheme::GcEuler | Scheme::GcHeun | Scheme::GcLStable | Scheme::GcRk3)
    }

    /// Limit scheme reached by an AP scheme when `eps → 0` at fixed `dt`.
    pub fn gc_counterpart(self) -> Option<Scheme> {
        match self {
            Scheme::EulerSI => Some(Scheme::GcEuler),
            Scheme::Sdirk2A => Some(Scheme::GcHeun),
            Scheme::Sdirk2L => Some(Scheme::GcLStable),
            Scheme::Imex3 => Some(Scheme::GcRk3),
            _ => None,
        }
    }

    /// Formal order of accuracy in `dt`.
    pub fn order(self) -> u32 {
        match self {
            Scheme::EulerSI | Scheme::GcEuler => 1,
            Scheme::Sdirk2A | Scheme::Sdirk2L | Scheme::GcHeun | Scheme::GcLStable => 2,
            Scheme::Imex3 | Scheme::GcRk3 => 3,
            Scheme::Rk4Oracle => 4,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidInput(format!("unknown scheme `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PusherConfig {
    pub eps: f64,
    pub dt: f64,
    pub scheme: Scheme,
}

impl PusherConfig {
    pub fn new(eps: f64, dt: f64, scheme: Scheme) -> Result<Self> {
        if eps <= 0.0 || !eps.is_finite() {
            return Err(Error::InvalidInput(format!("eps must be positive (got {eps})")));
        }
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive (got {dt})")));
        }
        Ok(PusherConfig { eps, dt, scheme })
    }

    /// Stiffness ratio `dt / eps^2`.
    pub fn lambda(&self) -> f64 {
        self.dt / (self.eps * self.eps)
    }
}

/// Diagonal coefficient of the L-stable SDIRK2 pair, the smallest root of
/// `g^2 - 2 g + 1/2`.
pub const GAMMA2: f64 = 1.0 - FRAC_1_SQRT_2;

/// Coefficients of the four-stage third-order IMEX pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub gamma3: f64,
    pub gamma2: f64,
}

pub const STAGES: StageCoefficients = {
    let alpha = 0.24169426078821;
    let beta = alpha / 4.0;
    let eta = 0.12915286960590;
    StageCoefficients {
        alpha,
        beta,
        eta,
        gamma3: 0.5 - alpha - beta - eta,
        gamma2: GAMMA2,
    }
};

/// Solves `(Id - lam R_b) v = rhs` with `R_b w = w ∧ (b e_z) = b (w_y, -w_x)`.
/// Since `R_b^2 = -b^2 Id`, the inverse is `(Id + lam R_b) / (1 + lam^2 b^2)`.
#[inline]
pub fn rotate_solve(rhs: Vec2, lam: f64, b: f64) -> Vec2 {
    let lb = lam * b;
    Vec2::new(rhs.x + lb * rhs.y, rhs.y - lb * rhs.x) / (1.0 + lb * lb)
}

/// `F = (v / eps) ∧ B + E` at a stage.
#[inline]
fn force(v: Vec2, eps: f64, f: &FieldSample) -> Vec2 {
    (v / eps).cross_bz(f.b) + f.e
}

/// Advances one particle by one step with the configured scheme.
pub fn push<F: FieldProvider + ?Sized>(p: ParticleState, cfg: &PusherConfig, field: &F, t: f64) -> Result<ParticleState> {
    match cfg.scheme {
        Scheme::EulerSI => push_euler_si(p, cfg, field, t),
        Scheme::Sdirk2A => push_sdirk2_astable(p, cfg, field, t),
        Scheme::Sdirk2L => push_sdirk2_lstable(p, cfg, field, t),
        Scheme::Imex3 => push_imex3(p, cfg, field, t),
        Scheme::GcEuler | Scheme::GcHeun | Scheme::GcLStable | Scheme::GcRk3 => push_gc(p, cfg, field, t),
        Scheme::Rk4Oracle => push_rk4_oracle(p, cfg, field, t),
    }
}

/// Backward Euler on the Lorentz term, forward Euler on `E`.
pub fn push_euler_si<F: FieldProvider + ?Sized>(p: ParticleState, cfg: &PusherConfig, field: &F, t: f64) -> Result<ParticleState> {
    let (eps, dt) = (cfg.eps, cfg.dt);
    let f = field.sample(t, p.x)?;
    let v = rotate_solve(p.v + f.e * (dt / eps), cfg.lambda(), f.b);
    Ok(ParticleState {
        x: p.x + v * (dt / eps),
        v,
        w: p.w,
    })
}

/// Heun explicit part with the A-stable two-stage SDIRK implicit part
/// (diagonal 1/2). Conserves `|v|` exactly when `E = 0` and `b` is constant.
pub fn push_sdirk2_astable<F: FieldProvider + ?Sized>(p: ParticleState, cfg: &PusherConfig, field: &F, t: f64) -> Result<ParticleState> {
    let (eps, dt) = (cfg.eps, cfg.dt);
    let c = 0.5 * dt / eps;
    let lam = 0.5 * cfg.lambda();

    let f1 = field.sample(t, p.x)?;
    let v1 = rotate_solve(p.v + f1.e * c, lam, f1.b);
    let x1 = p.x + v1 * c;

    let f2 = field.sample(t + dt, x1 * 2.0 - p.x)?;
    let v2 = rotate_solve(p.v + f2.e * c, lam, f2.b);
    let x2 = p.x + v2 * c;

    Ok(ParticleState {
        x: x1 + x2 - p.x,
        v: v1 + v2 - p.v,
        w: p.w,
    })
}

/// Two-stage L-stable SDIRK implicit part (diagonal `GAMMA2`) paired with an
/// explicit part whose second stage sits at `t + dt / (2 GAMMA2)`; that
/// abscissa lies beyond `t + dt`.
pub fn push_sdirk2_lstable<F: FieldProvider + ?Sized>(p: ParticleState, cfg: &PusherConfig, field: &F, t: f64) -> Result<ParticleState> {
    let (eps, dt) = (cfg.eps, cfg.dt);
    let g = GAMMA2;
    let cg = g * dt / eps;
    let c1g = (1.0 - g) * dt / eps;
    let lam = g * cfg.lambda();

    let f1 = field.sample(t, p.x)?;
    let v1 = rotate_solve(p.v + f1.e * cg, lam, f1.b);
    let force1 = force(v1, eps, &f1);

    let t_hat = t + dt / (2.0 * g);
    let x_hat = p.x + v1 * (dt / (2.0 * g * eps));
    let f2 = field.sample(t_hat, x_hat)?;
    let v2 = rotate_solve(p.v + force1 * c1g + f2.e * cg, lam, f2.b);

    Ok(ParticleState {
        x: p.x + v1 * c1g + v2 * cg,
        v: v2,
        w: p.w,
    })
}

/// Four-stage third-order IMEX pair: L-stable SDIRK implicit part with
/// diagonal `alpha`, explicit part with abscissae `(0, 0, 1, 1/2)`.
pub fn push_imex3<F: FieldProvider + ?Sized>(p: ParticleState, cfg: &PusherConfig, field: &F, t: f64) -> Result<ParticleState> {
    let (eps, dt) = (cfg.eps, cfg.dt);
    let StageCoefficients {
        alpha,
        beta,
        eta,
        gamma3,
        ..
    } = STAGES;
    let k = dt / eps;
    let lam = alpha * cfg.lambda();

    // stages 1 and 2 share the field at (t, x)
    let f0 = field.sample(t, p.x)?;
    let v1 = rotate_solve(p.v + f0.e * (alpha * k), lam, f0.b);
    let force1 = force(v1, eps, &f0);

    let v2 = rotate_solve(p.v - force1 * (alpha * k) + f0.e * (alpha * k), lam, f0.b);
    let force2 = force(v2, eps, &f0);

    let x_bar2 = p.x + v2 * k;
    let f3 = field.sample(t + dt, x_bar2)?;
    let v3 = rotate_solve(p.v + force2 * ((1.0 - alpha) * k) + f3.e * (alpha * k), lam, f3.b);
    let force3 = force(v3, eps, &f3);

    let x_bar3 = p.x + (v2 + v3) * (0.25 * k);
    let f4 = field.sample(t + 0.5 * dt, x_bar3)?;
    let known = force1 * beta + force2 * eta + force3 * gamma3;
    let v4 = rotate_solve(p.v + known * k + f4.e * (alpha * k), lam, f4.b);
    let force4 = force(v4, eps, &f4);

    let c = k / 6.0;
    Ok(ParticleState {
        x: p.x + (v2 + v3 + v4 * 4.0) * c,
        v: p.v + (force2 + force3 + force4 * 4.0) * c,
        w: p.w,
    })
}

fn drift_at<F: FieldProvider + ?Sized>(field: &F, t: f64, y: Vec2) -> Result<Vec2> {
    Ok(field.sample(t, y)?.drift())
}

/// Explicit guiding-center schemes, the `eps → 0` limits of the AP schemes.
/// The stored velocity is `eps` times the mean drift over the step, the
/// limit of `v^{n+1}` in the AP schemes.
pub fn push_gc<F: FieldProvider + ?Sized>(p: ParticleState, cfg: &PusherConfig, field: &F, t: f64) -> Result<ParticleState> {
    let dt = cfg.dt;
    let y = p.x;
    let y_next = match cfg.scheme {
        Scheme::GcEuler => y + drift_at(field, t, y)? * dt,
        Scheme::GcHeun => {
            let y1 = y + drift_at(field, t, y)? * (0.5 * dt);
            let y2 = y + drift_at(field, t + dt, y1 * 2.0 - y)? * (0.5 * dt);
            y1 + y2 - y
        }
        Scheme::GcLStable => {
            let g = GAMMA2;
            let u0 = drift_at(field, t, y)?;
            let y_hat = y + u0 * (dt / (2.0 * g));
            let u1 = drift_at(field, t + dt / (2.0 * g), y_hat)?;
            y + u0 * ((1.0 - g) * dt) + u1 * (g * dt)
        }
        Scheme::GcRk3 => {
            let u2 = drift_at(field, t, y)?;
            let y2 = y + u2 * dt;
            let u3 = drift_at(field, t + dt, y2)?;
            let y3 = y + (u2 + u3) * (0.25 * dt);
            let u4 = drift_at(field, t + 0.5 * dt, y3)?;
            y + (u2 + u3 + u4 * 4.0) * (dt / 6.0)
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "push_gc called with non guiding-center scheme {other}"
            )))
        }
    };
    Ok(ParticleState {
        x: y_next,
        v: (y_next - y) * (cfg.eps / dt),
        w: p.w,
    })
}

/// Largest stable step accepted by the RK4 reference integrator.
pub fn rk4_max_dt(eps: f64, b_sup: f64) -> f64 {
    eps * eps / (4.0 * b_sup.abs())
}

/// Classical RK4 on `dx/dt = v/eps`, `dv/dt = ((v/eps) ∧ B + E)/eps`.
/// Requires `dt <= eps^2 / (4 sup|b|)`.
pub fn push_rk4_oracle<F: FieldProvider + ?Sized>(p: ParticleState, cfg: &PusherConfig, field: &F, t: f64) -> Result<ParticleState> {
    let (eps, dt) = (cfg.eps, cfg.dt);
    let b_sup = match field.b_max() {
        Some(b) => b,
        None => field.sample(t, p.x)?.b.abs(),
    };
    if dt > rk4_max_dt(eps, b_sup) * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "rk4 step {dt} exceeds the stability bound eps^2/(4 sup b) = {}",
            rk4_max_dt(eps, b_sup)
        )));
    }
    let rhs = |tt: f64, x: Vec2, v: Vec2| -> Result<(Vec2, Vec2)> {
        let f = field.sample(tt, x)?;
        Ok((v / eps, force(v, eps, &f) / eps))
    };
    let (k1x, k1v) = rhs(t, p.x, p.v)?;
    let (k2x, k2v) = rhs(t + 0.5 * dt, p.x + k1x * (0.5 * dt), p.v + k1v * (0.5 * dt))?;
    let (k3x, k3v) = rhs(t + 0.5 * dt, p.x + k2x * (0.5 * dt), p.v + k2v * (0.5 * dt))?;
    let (k4x, k4v) = rhs(t + dt, p.x + k3x * dt, p.v + k3v * dt)?;
    let c = dt / 6.0;
    Ok(ParticleState {
        x: p.x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * c,
        v: p.v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * c,
        w: p.w,
    })
}

/// Corrected guiding-center starting point
/// `y0 = x0 + eps (v0 ∧ B + eps E(t0, x0)) / b^2`, which cancels the
/// leading initial-layer term of the first-order scheme. For `|B| = 1`
/// this is `x0 + eps (v0 ∧ B + eps E)`.
pub fn well_prepared_init<F: FieldProvider + ?Sized>(x0: Vec2, v0: Vec2, eps: f64, field: &F, t0: f64) -> Result<Vec2> {
    let f = field.sample(t0, x0)?;
    Ok(x0 + (v0.cross_bz(f.b) + f.e * eps) * (eps / (f.b * f.b)))
}
