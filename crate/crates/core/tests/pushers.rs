use magpic::cli;
use magpic::config::RunConfig;
use magpic::diagnostics;
use magpic::engine;
use magpic::fields::{uniform_field, AnalyticField, FieldProvider, Vec2};
use magpic::pushers::{self, ParticleState, PusherConfig, Scheme};

/// Guiding-center order sweep against a fine GC_RK3 reference.
fn gc_slope(scheme: Scheme) -> f64 {
    let field = AnalyticField::default();
    let p0 = ParticleState::new(Vec2::new(1.0, 1.4), Vec2::ZERO, 1.0);
    let t_end = 2.0;
    let run = |s: Scheme, dt: f64| {
        let pc = PusherConfig::new(1e-3, dt, s).unwrap();
        let n = (t_end / dt).round() as usize;
        engine::run_given_field(p0, &pc, &field, 0.0, n).unwrap()[n].x
    };
    let reference = run(Scheme::GcRk3, 1e-4);
    let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&dt| (dt, (run(scheme, dt) - reference).norm())).collect();
    diagnostics::convergence_order(&pts).unwrap()
}

#[test]
fn guiding_center_schemes_reach_their_orders() {
    for scheme in [Scheme::GcEuler, Scheme::GcHeun, Scheme::GcLStable, Scheme::GcRk3] {
        let slope = gc_slope(scheme);
        assert!((slope - scheme.order() as f64).abs() < 0.25, "{scheme}: {slope}");
    }
}

#[test]
fn first_order_scheme_drifts_from_reference_at_eps_one() {
    let cfg = RunConfig { eps: 1.0, t_end: 10.0, ref_dt: 1e-4, ..RunConfig::default() };
    let res = cli::single_particle(&cfg).unwrap();
    let err = |s: Scheme| res.runs.iter().find(|r| r.scheme == s).unwrap().l2_error;
    assert!(err(Scheme::EulerSI) >= 10.0 * err(Scheme::Imex3));
    assert!(err(Scheme::Imex3) < err(Scheme::Sdirk2L) && err(Scheme::Sdirk2L) < err(Scheme::EulerSI));
}

#[test]
fn ap_schemes_approach_their_limits_as_eps_vanishes() {
    let field = AnalyticField::default();
    for scheme in Scheme::AP {
        let gc = scheme.gc_counterpart().unwrap();
        let dist = |eps: f64| {
            let p0 = ParticleState::new(Vec2::new(1.0, 1.4), Vec2::new(3.0, 5.0) * eps, 1.0);
            let a = engine::run_given_field(p0, &PusherConfig::new(eps, 0.1, scheme).unwrap(), &field, 0.0, 10).unwrap();
            let b = engine::run_given_field(p0, &PusherConfig::new(eps, 0.1, gc).unwrap(), &field, 0.0, 10).unwrap();
            a.iter().zip(&b).map(|(p, q)| (p.x - q.x).norm()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (dist(1e-2), dist(1e-3));
        assert!(fine < 0.05 * coarse, "{scheme}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn uniform_field_drift_in_the_limit() {
    // E = (0, 1), b = 1: the guiding center moves with U = (1, 0)
    let field = uniform_field(Vec2::new(0.0, 1.0), 1.0).unwrap();
    let p0 = ParticleState::new(Vec2::ZERO, Vec2::new(0.0, 1e-4), 1.0);
    for scheme in Scheme::AP {
        let pc = PusherConfig::new(1e-4, 0.1, scheme).unwrap();
        let traj = engine::run_given_field(p0, &pc, &field, 0.0, 20).unwrap();
        let x = traj.last().unwrap().x;
        assert!((x - Vec2::new(2.0, 0.0)).norm() < 1e-6, "{scheme}: {x:?}");
    }
}

#[test]
fn field_evaluations_per_step() {
    struct Counting(std::sync::atomic::AtomicUsize, AnalyticField);
    impl FieldProvider for Counting {
        fn sample(&self, t: f64, x: Vec2) -> magpic::Result<magpic::FieldSample> {
            self.0.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            self.1.sample(t, x)
        }
        fn b_max(&self) -> Option<f64> {
            self.1.b_max()
        }
    }
    let expected = [
        (Scheme::EulerSI, 1),
        (Scheme::Sdirk2A, 2),
        (Scheme::Sdirk2L, 2),
        (Scheme::Imex3, 3),
        (Scheme::GcEuler, 1),
        (Scheme::GcHeun, 2),
        (Scheme::GcLStable, 2),
        (Scheme::GcRk3, 3),
    ];
    for (scheme, calls) in expected {
        let f = Counting(Default::default(), AnalyticField::default());
        let p = ParticleState::new(Vec2::new(0.2, 0.3), Vec2::new(0.1, 0.0), 1.0);
        pushers::push(p, &PusherConfig::new(0.1, 0.05, scheme).unwrap(), &f, 0.0).unwrap();
        assert_eq!(f.0.into_inner(), calls, "{scheme}");
    }
}
