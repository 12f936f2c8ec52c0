mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::field_diff_norm;
use nldg::studies::{manufactured_forcing, manufactured_run, run_delta_limit, DeltaSpec, StudyConfig};
use nldg::{make_kernel, make_space, stiffness_matrix, CnState, Forcing, SQuadConfig, SchemeVariant};

fn sin2pi(x: f64) -> f64 {
    (2.0 * PI * x).sin()
}

#[test]
fn stepping_is_reversible() {
    let space = make_space(0.0, 1.0, 16, 2).unwrap();
    let kernel = make_kernel(1.5, 2.0 * space.h()).unwrap();
    let s = Arc::new(stiffness_matrix(&space, &kernel, &SQuadConfig::default(), SchemeVariant::Forward).unwrap());
    let mut st = CnState::new(&space, s, sin2pi, |x| (4.0 * PI * x).cos(), Forcing::None, 0.01).unwrap();
    let (u0, u1) = (st.u_prev(), st.u_curr());
    for _ in 0..200 {
        st.step();
    }
    st.swap_levels();
    for _ in 0..200 {
        st.step();
    }
    let scale = u0.l2_norm().max(u1.l2_norm());
    assert!(field_diff_norm(&st.u_curr(), &u0) <= 1e-9 * scale);
    assert!(field_diff_norm(&st.u_prev(), &u1) <= 1e-9 * scale);
}

#[test]
fn time_error_is_second_order() {
    let space = make_space(0.0, 1.0, 40, 2).unwrap();
    let kernel = make_kernel(0.5, 0.2).unwrap();
    let squad = SQuadConfig::default();
    let runs: Vec<_> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| manufactured_run(&space, &kernel, &squad, SchemeVariant::Forward, dt, 1.0).unwrap())
        .collect();
    let d1 = field_diff_norm(&runs[0], &runs[1]);
    let d2 = field_diff_norm(&runs[1], &runs[2]);
    let order = (d1 / d2).log2();
    assert!((order - 2.0).abs() <= 0.2, "observed order {order}");
}

#[test]
fn energy_is_conserved_for_unforced_runs() {
    for &alpha in &[2.0 / 3.0, 1.5] {
        for k in [1, 3] {
            let space = make_space(0.0, 1.0, 20, k).unwrap();
            let kernel = make_kernel(alpha, 2.0 * space.h()).unwrap();
            let s = Arc::new(stiffness_matrix(&space, &kernel, &SQuadConfig::default(), SchemeVariant::Backward).unwrap());
            let mut st = CnState::new(&space, s, sin2pi, |_| 0.0, Forcing::None, 0.1).unwrap();
            let (_, trace) = st.solve_to(100.0, 1).unwrap();
            let e0 = trace[0].energy;
            let drift = trace.iter().map(|e| (e.energy - e0).abs() / e0).fold(0.0, f64::max);
            assert!(drift <= 1e-10, "alpha={alpha} k={k}: {drift:e}");
            assert_eq!(trace.len(), 1000);
        }
    }
}

/// Closed-form Crank-Nicolson recurrence for a single mode with eigenvalue `lambda`,
/// started from `u^0 = 1`, `u^1 = 1 - dt^2 lambda / 2`.
fn modal_cn(lambda: f64, dt: f64, steps: usize) -> f64 {
    let x2 = lambda * dt * dt;
    let theta = (1.0 / (1.0 + 0.5 * x2)).acos();
    let u1 = 1.0 - 0.5 * x2;
    let b = (u1 - theta.cos()) / theta.sin();
    (steps as f64 * theta).cos() + b * (steps as f64 * theta).sin()
}

#[test]
fn limit_study_matches_single_mode_recurrence() {
    let mut cfg = StudyConfig::limit();
    cfg.delta = DeltaSpec::Fixed(vec![5e-3, 2.5e-3]);
    let table = run_delta_limit(&cfg).unwrap();
    for row in &table.rows {
        let lambda = -make_kernel(row.alpha, row.delta).unwrap().forcing_coefficient();
        let steps = (row.t / row.dt).round() as usize;
        let predicted = (modal_cn(lambda, row.dt, steps) - (2.0 * PI * row.t).cos()).abs();
        assert!(
            (row.linf_err - predicted).abs() <= 1e-3 * predicted,
            "alpha={} delta={}: {} vs {predicted}",
            row.alpha,
            row.delta,
            row.linf_err
        );
    }
}

#[test]
fn forced_run_tracks_exact_solution() {
    let space = make_space(0.0, 1.0, 20, 2).unwrap();
    let kernel = make_kernel(1.5, 0.2).unwrap();
    let s = Arc::new(stiffness_matrix(&space, &kernel, &SQuadConfig::default(), SchemeVariant::Forward).unwrap());
    let forcing = manufactured_forcing(&kernel);
    let general = Forcing::general(move |x, t| forcing.eval(x, t));
    let mut a = CnState::new(&space, s.clone(), sin2pi, |_| 0.0, general, 1e-3).unwrap();
    let mut b = CnState::new(&space, s, sin2pi, |_| 0.0, forcing.to_forcing(&space), 1e-3).unwrap();
    let (ua, _) = a.solve_to(0.5, 0).unwrap();
    let (ub, _) = b.solve_to(0.5, 0).unwrap();
    assert!(field_diff_norm(&ua, &ub) < 1e-12);
    let err = nldg::l2_error(&ua, |x| (PI).cos() * sin2pi(x));
    assert!(err < 2e-4, "{err}");
}
