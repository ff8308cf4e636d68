use mhd_regularity_web::{gamma_curve_rows, kernel_profile_rows, pressure_slice_rows};

#[test]
fn gamma_curves_start_at_zero_and_increase() {
    let rows = gamma_curve_rows(1.0, 5.0, 11).unwrap();
    assert_eq!(rows.len(), 33);
    assert_eq!(&rows[..3], &[0.0, 0.0, 0.0]);
    for w in rows.chunks(3).collect::<Vec<_>>().windows(2) {
        assert!(w[1][1] > w[0][1] && w[1][2] > w[0][2]);
    }
    assert!(gamma_curve_rows(1.0, 0.0, 11).is_err());
    assert!(gamma_curve_rows(-1.0, 1.0, 11).is_err());
}

#[test]
fn kernel_profile_closed_form_matches_quadrature() {
    let rows = kernel_profile_rows(0.5, 3.0, 12).unwrap();
    for r in rows.chunks(3) {
        assert!((r[1] - r[2]).abs() <= 1e-6 * r[1].abs(), "{r:?}");
    }
}

#[test]
fn taylor_green_slice_matches_the_pressure_of_the_initial_vortex() {
    // p = (cos 2x + cos 2y)(cos 2z + 2) / 16 for the 3-D vortex; z = pi here.
    let n = 16;
    let rows = pressure_slice_rows(n, 0, 0.01, false, 0).unwrap();
    let h = 2.0 * std::f64::consts::PI / n as f64;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let exact = ((2.0 * x).cos() + (2.0 * y).cos()) * 3.0 / 16.0;
            assert!((rows[i * n + j] - exact).abs() < 1e-12, "{i} {j}");
        }
    }
    let stepped = pressure_slice_rows(n, 3, 0.01, true, 4).unwrap();
    assert!(stepped.iter().all(|v| v.is_finite()));
    assert!(pressure_slice_rows(2, 0, 0.01, false, 0).is_err());
}
