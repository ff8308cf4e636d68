use std::f64::consts::PI;

use mhd_regularity::solver::{
    fit_spectrum_slope, random_solenoidal_init, run, shell_spectrum, step_rk4, taylor_green_3d,
    taylor_green_init, RunOptions, SolverParams,
};
use mhd_regularity::Grid;

#[test]
fn taylor_green_decays_at_the_exact_rate() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let init = taylor_green_init(g);
    let params = SolverParams {
        nu: 0.1,
        xi: 0.1,
        dt: 1e-3,
        t_end: 0.1,
        ..Default::default()
    };
    let out = run(&init, &params, RunOptions { record_every: 10, snapshot_every: None }, None).unwrap();
    let f = (-2.0 * 0.1 * 0.1f64).exp();
    let err = (0..3)
        .map(|d| {
            out.final_state
                .u
                .component(d)
                .zip_map(init.u.component(d), |a, b| a - f * b)
                .unwrap()
                .max_abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "max error {err}");
    let e0 = init.energy();
    for r in &out.records {
        let exact = (-4.0 * 0.1 * r.t).exp();
        assert!(((r.energy_u + r.energy_b) / e0 - exact).abs() < 1e-5);
    }
}

#[test]
fn three_dimensional_taylor_green_shows_fourth_order() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let init = taylor_green_3d(g);
    let solve = |dt: f64| {
        let params = SolverParams {
            nu: 0.05,
            xi: 0.05,
            dt,
            t_end: 1.0,
            ..Default::default()
        };
        run(&init, &params, RunOptions { record_every: 1000000, snapshot_every: None }, None)
            .unwrap()
            .final_state
    };
    let reference = solve(1.0 / 256.0);
    let errors: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&dt| {
            let s = solve(dt);
            (0..3)
                .map(|d| {
                    s.u.component(d)
                        .zip_map(reference.u.component(d), |a, b| a - b)
                        .unwrap()
                        .max_abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() < 0.2, "errors {errors:?}, order {order}");
    }
}

#[test]
fn energy_balance_and_solenoidality_over_a_long_run() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let init = random_solenoidal_init(g, 7, -5.0 / 3.0).unwrap();
    let params = SolverParams {
        nu: 0.05,
        xi: 0.05,
        dt: 1e-3,
        t_end: 0.2,
        ..Default::default()
    };
    let out = run(&init, &params, RunOptions { record_every: 50, snapshot_every: None }, None).unwrap();
    let e0 = init.energy();
    assert!(out.max_step_energy_residual < 1e-6 * e0, "{}", out.max_step_energy_residual);
    for r in &out.records {
        assert!(r.max_divergence < 1e-12, "{}", r.max_divergence);
    }
    let last = out.records.last().unwrap();
    assert!(last.energy_u + last.energy_b < e0);
}

#[test]
fn prescribed_spectrum_slope_is_recovered() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let s = random_solenoidal_init(g, 1, -5.0 / 3.0).unwrap();
    let shells = shell_spectrum(&s.u).unwrap();
    let slope = fit_spectrum_slope(&shells, 2, 9).unwrap();
    assert!((slope + 5.0 / 3.0).abs() < 0.2, "slope {slope}");
}

#[test]
fn cfl_violation_blows_up_with_a_step_index() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let init = random_solenoidal_init(g, 2, -5.0 / 3.0).unwrap();
    let limit = mhd_regularity::solver::cfl_limit(&init, 0.5);
    let params = SolverParams {
        nu: 1e-3,
        xi: 1e-3,
        dt: 10.0 * limit,
        t_end: 2000.0 * limit,
        ..Default::default()
    };
    let err = run(&init, &params, RunOptions::default(), None).unwrap_err();
    assert!(matches!(err, mhd_regularity::Error::BlowUp { step, .. } if step > 0), "{err}");
    assert!(step_rk4(&init, &SolverParams { dt: 1e-4, ..params }).is_ok());
}
