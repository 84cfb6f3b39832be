use iontc_core::semiclassical::{inverse_canonical_transform, transformed_energy, ZeroEnergyFamily};
use iontc_core::{
    canonical_transform, eom_rhs, fixed_point, integrate, linearize, sde_integrate, zero_energy_curve, Error,
    ModelParams, PhasePoint, SweepConfig,
};
use proptest::prelude::*;

// H = X (Jx + chi) - Y Jy with {X, Y} = 1 and {Ja, Jb} = eps_abc Jc,
// written out by hand.
fn oracle_rhs(y: [f64; 5], chi: f64) -> [f64; 5] {
    let [x, p, jx, jy, jz] = y;
    [-jy, -(jx + chi), -p * jz, -x * jz, x * jy + p * jx]
}

fn rk4(mut y: [f64; 5], chi: f64, dt: f64, steps: usize) -> [f64; 5] {
    let add = |a: [f64; 5], b: [f64; 5], s: f64| std::array::from_fn(|i| a[i] + s * b[i]);
    for _ in 0..steps {
        let k1 = oracle_rhs(y, chi);
        let k2 = oracle_rhs(add(y, k1, dt / 2.0), chi);
        let k3 = oracle_rhs(add(y, k2, dt / 2.0), chi);
        let k4 = oracle_rhs(add(y, k3, dt), chi);
        y = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

#[test]
fn adaptive_solver_matches_fixed_step_oracle() {
    let p0 = PhasePoint::new(0.3, -0.2, 0.4, 0.1, -0.6);
    let cfg = SweepConfig { chi: 0.25, t_end: 10.0, sample_dt: Some(10.0), ..Default::default() };
    let tr = integrate(&p0, &cfg).unwrap();
    let want = rk4(p0.to_array(), 0.25, 1e-5, 1_000_000);
    let got = tr.points.last().unwrap().to_array();
    for i in 0..5 {
        assert!((got[i] - want[i]).abs() <= 1e-6, "component {i}: {} vs {}", got[i], want[i]);
    }
}

#[test]
fn rhs_agrees_with_oracle() {
    let p = PhasePoint::new(0.7, -1.1, 0.2, -0.5, 0.8);
    assert_eq!(eom_rhs(&p, -0.4).to_array(), oracle_rhs(p.to_array(), -0.4));
}

#[test]
fn fixed_point_is_stationary_and_hyperbolic() {
    for n in [2.0, 4.0, 8.0] {
        for chi in [0.0, 0.2 * n, 0.45 * n] {
            let fp = fixed_point(chi, n).unwrap();
            assert!(eom_rhs(&fp, chi).to_array().iter().all(|v| v.abs() < 1e-14));
            assert!((fp.spin_norm2() - n * n / 4.0).abs() < 1e-12);
            let l = linearize(&fp, chi).unwrap();
            assert!(l.growth_rate > 0.0);
            assert!((l.growth_rate - fp.jz.sqrt()).abs() < 1e-7, "N = {n}, chi = {chi}");
        }
    }
    assert!(matches!(fixed_point(1.01, 2.0), Err(Error::NoFixedPoint { .. })));
}

#[test]
fn south_pole_oscillates() {
    for n in [2.0, 6.0] {
        let l = linearize(&PhasePoint::new(0.0, 0.0, 0.0, 0.0, -n / 2.0), 0.0).unwrap();
        assert!(l.eigenvalues.iter().all(|z| z.re.abs() < 1e-12));
        assert!(l.growth_rate.abs() < 1e-12);
    }
}

#[test]
fn invariants_hold_over_long_runs() {
    let p0 = PhasePoint::new(0.1, 0.2, 0.3, -0.4, -0.8);
    let cfg = SweepConfig { chi: 0.3, t_end: 100.0, rel_tol: 1e-12, abs_tol: 1e-15, ..Default::default() };
    let tr = integrate(&p0, &cfg).unwrap();
    assert!(tr.max_spin_drift <= 1e-8, "{}", tr.max_spin_drift);
    assert!(tr.max_energy_drift <= 1e-8, "{}", tr.max_energy_drift);
}

#[test]
fn spin_norm_holds_at_default_tolerance() {
    let p0 = PhasePoint::new(0.1, 0.2, 0.3, -0.4, -0.75f64.sqrt());
    let cfg = SweepConfig { chi: 0.5, t_end: 100.0, ..Default::default() };
    let tr = integrate(&p0, &cfg).unwrap();
    assert!(tr.max_spin_drift <= 1e-8, "{}", tr.max_spin_drift);
}

#[test]
fn zero_energy_curve_joins_fixed_point_at_threshold() {
    let c = zero_energy_curve(&ModelParams::from_x(2, 1.0, 1.0).unwrap()).unwrap();
    let p = c.point(ZeroEnergyFamily::YbarZero, 0.0, 0.0, 0.0);
    assert!(p.max_abs_diff(&fixed_point(1.0, 2.0).unwrap()) < 1e-15);
    let c = zero_energy_curve(&ModelParams::from_x(4, 1.0, 1.25).unwrap()).unwrap();
    assert!((c.theta.cos() - 0.8).abs() < 1e-15);
    assert!(matches!(zero_energy_curve(&ModelParams::from_x(4, 1.0, 0.9).unwrap()), Err(Error::BelowThreshold { .. })));
}

#[test]
fn frozen_spin_ensemble_diffuses() {
    let (gamma, chi, t) = (0.2, 0.3, 2.0);
    let cfg =
        SweepConfig { chi, gamma, t_end: t, dt: 1e-3, n_traj: 4000, seed: 11, spin_frozen: true, ..Default::default() };
    let p0 = PhasePoint::new(0.5, -0.5, 0.0, 0.0, 0.0);
    let st = sde_integrate(&p0, &cfg).unwrap();
    let k = st.times.len() - 1;
    assert_eq!(st.times[k], t);
    assert!((st.mean_x[k] - 0.5).abs() <= 4.0 * st.stderr_x[k]);
    assert!((st.mean_y[k] - (-0.5 - chi * t)).abs() <= 4.0 * st.stderr_y[k]);
    assert!((st.var_x[k] - gamma * t).abs() <= 4.0 * st.stderr_var_x[k]);
    assert!((st.var_y[k] - gamma * t).abs() <= 4.0 * st.stderr_var_y[k]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_preserves_energy(
        x in -2.0f64..2.0, y in -2.0f64..2.0, jx in -1.0f64..1.0, jy in -1.0f64..1.0, jz in -1.0f64..1.0,
        theta in 0.0f64..1.5, chi in -1.0f64..1.0,
    ) {
        let p = PhasePoint::new(x, y, jx, jy, jz);
        let b = canonical_transform(&p, theta);
        prop_assert!((b.spin_norm2() - p.spin_norm2()).abs() < 1e-13);
        prop_assert!(inverse_canonical_transform(&b, theta).max_abs_diff(&p) < 1e-14);
        prop_assert!((transformed_energy(&b, theta, chi) - p.energy(chi)).abs() < 1e-13);
    }

    #[test]
    fn zero_energy_families_have_zero_energy(
        x in 1.0f64..20.0, n in 1usize..=10, q in -3.0f64..3.0, s in -2.0f64..2.0, jz in -2.0f64..2.0,
    ) {
        let c = zero_energy_curve(&ModelParams::from_x(n, 1.0, x).unwrap()).unwrap();
        prop_assert!((c.theta.cos() - 1.0 / x).abs() < 1e-14);
        for fam in [ZeroEnergyFamily::XbarZero, ZeroEnergyFamily::YbarZero] {
            let p = c.point(fam, q, s, jz);
            prop_assert!(p.energy(c.chi).abs() < 1e-11 * (1.0 + c.chi.abs()));
        }
    }

    #[test]
    fn growth_rate_is_root_jz(n in 1usize..=10, frac in 0.0f64..0.99) {
        let nf = n as f64;
        let chi = frac * nf / 2.0;
        let fp = fixed_point(chi, nf).unwrap();
        let l = linearize(&fp, chi).unwrap();
        prop_assert!((l.growth_rate - fp.jz.sqrt()).abs() < 1e-6 * (1.0 + fp.jz.sqrt()));
    }
}
