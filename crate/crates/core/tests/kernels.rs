use std::f64::consts::PI;
use std::time::Instant;

use mhd_regularity::kernels::{
    hessian_potential_analytic, kernel_sweep, potential_analytic, sphere_potential_analytic, trace,
    DEFAULT_ALPHAS, DEFAULT_RATIOS,
};
use proptest::prelude::*;

#[test]
fn full_sweep_meets_tolerances() {
    let start = Instant::now();
    let rows = kernel_sweep(&DEFAULT_ALPHAS, &DEFAULT_RATIOS).unwrap();
    assert_eq!(rows.len(), 25);
    for r in &rows {
        assert!(r.potential_rel_error <= 1e-8, "{r:?}");
        assert!(r.hessian_rel_error <= 1e-4, "{r:?}");
        assert!(r.trace_error <= 1e-4, "{r:?}");
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn sweep_rejects_the_sphere_annulus() {
    assert!(kernel_sweep(&[0.5], &[0.95]).is_err());
    assert!(kernel_sweep(&[1.5], &[0.5]).is_err());
}

fn point(dir: [f64; 3], rho: f64) -> [f64; 3] {
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    dir.map(|c| c * rho / n)
}

proptest! {
    #[test]
    fn analytic_traces_are_exact(
        alpha in 0.0f64..=1.0,
        rho in 0.05f64..4.0,
        big_r in 0.5f64..2.0,
        dir in prop::array::uniform3(0.1f64..1.0),
    ) {
        let x = point(dir, rho);
        let m = hessian_potential_analytic(x, [0.0; 3], big_r, alpha).unwrap();
        let t = trace(&m);
        if rho <= big_r {
            let e = -4.0 * PI * rho.powf(-alpha);
            prop_assert!((t - e).abs() <= 1e-12 * e.abs());
        } else {
            prop_assert!(t.abs() <= 1e-12 * m[0][0].abs().max(m[2][2].abs()));
        }
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(m[i][j], m[j][i]);
            }
        }
    }

    #[test]
    fn closed_forms_are_continuous_on_the_sphere(alpha in 0.0f64..=1.0, r in 0.1f64..5.0) {
        let x0 = [0.3, -0.1, 0.2];
        let on = [x0[0], x0[1], x0[2] + r];
        let out = [x0[0], x0[1], x0[2] + r * (1.0 + 1e-12)];
        let a = sphere_potential_analytic(on, x0, r);
        let b = sphere_potential_analytic(out, x0, r);
        prop_assert!((a - b).abs() <= 1e-10 * a);
        let a = potential_analytic(on, x0, r, alpha).unwrap();
        let b = potential_analytic(out, x0, r, alpha).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }
}
