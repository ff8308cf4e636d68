//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the report is always printed; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mhd_regularity::identities::{identity_28, localized_energy_inequality_residual};
use mhd_regularity::kernels::{
    hessian_potential_analytic, kernel_sweep, sphere_potential_analytic, sphere_potential_quadrature, DEFAULT_ALPHAS,
    DEFAULT_RATIOS, SWEEP_DIRECTION,
};
use mhd_regularity::logpot::{d1_d2_split_with, lemma11_check, measured_c, riesz_ball_potential};
use mhd_regularity::pressure::{pressure_freespace, pressure_periodic};
use mhd_regularity::snapshot;
use mhd_regularity::solver::{random_solenoidal_init, run, taylor_green_init, RunOptions, SimState, SolverParams};
use mhd_regularity::synthetic::{radial_bump, CurlBump, PeriodicGaussian, ScalarTestFunction, TimeProfile};
use mhd_regularity::{Grid, VectorField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Outcome;

fn sphere_potential() -> Outcome {
    let x0 = [0.0; 3];
    let dir = [2.0 / 7.0, 3.0 / 7.0, 6.0 / 7.0];
    let mut worst: f64 = 0.0;
    for d in [0.25, 0.5, 2.0, 4.0] {
        let x = dir.map(|c| c * d);
        let exact = sphere_potential_analytic(x, x0, 1.0);
        let quad = sphere_potential_quadrature(x, x0, 1.0, 32);
        worst = worst.max((quad - exact).abs() / exact);
    }
    outcome(worst <= 1e-8, format!("max rel error {worst:.2e} (tol 1e-8)"))
}

fn hessian_sweep() -> Outcome {
    let rows = kernel_sweep(&DEFAULT_ALPHAS, &DEFAULT_RATIOS).expect("sweep");
    let hess = rows.iter().map(|r| r.hessian_rel_error).fold(0.0, f64::max);
    let trace = rows.iter().map(|r| r.trace_error).fold(0.0, f64::max);
    // Closed-form traces: -4 pi rho^-alpha inside the ball, 0 outside.
    let mut exact_trace: f64 = 0.0;
    for &alpha in &DEFAULT_ALPHAS {
        for &ratio in &DEFAULT_RATIOS {
            let x = SWEEP_DIRECTION.map(|c| c * ratio);
            let h = hessian_potential_analytic(x, [0.0; 3], 1.0, alpha).unwrap();
            let expected = if ratio < 1.0 { -4.0 * PI * ratio.powf(-alpha) } else { 0.0 };
            exact_trace = exact_trace.max((mhd_regularity::kernels::trace(&h) - expected).abs() / (4.0 * PI));
        }
    }
    outcome(
        rows.len() == 25 && hess <= 1e-4 && trace <= 1e-4 && exact_trace <= 1e-12,
        format!(
            "{} cases, max Hessian rel error {hess:.2e} (tol 1e-4), FD trace error {trace:.2e}, closed-form trace error {exact_trace:.1e}",
            rows.len()
        ),
    )
}

fn identity_three_way() -> Outcome {
    let x0 = [0.1, -0.05, 0.07];
    let residual = |n: usize| {
        let g = Grid::centered(n, 4.0).unwrap();
        let u = CurlBump::around([0.0; 3], 0.8, 1.0).sample(g);
        let b = VectorField::zeros(g);
        let p = pressure_freespace(&u, &b, 2).unwrap().p;
        identity_28(&u, &b, &p, x0, 0.5).unwrap().rel_residual
    };
    let (coarse, fine) = (residual(64), residual(128));
    let factor = coarse / fine;
    outcome(
        fine <= 0.02 && factor >= 1.8,
        format!("rel residual {coarse:.3e} (n=64) -> {fine:.3e} (n=128), factor {factor:.2} (need <=2%, >=1.8)"),
    )
}

fn taylor_green() -> Outcome {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let init = taylor_green_init(g);
    let params = SolverParams {
        nu: 0.1,
        xi: 0.1,
        dt: 1e-3,
        t_end: 0.1,
        ..Default::default()
    };
    let out = run(&init, &params, RunOptions::default(), None).unwrap();
    let s = &out.final_state;
    let decay = (-2.0 * params.nu * s.t).exp();
    let mut vel: f64 = 0.0;
    for m in 0..g.len() {
        let (a, b) = (s.u.at(m), init.u.at(m));
        for d in 0..3 {
            vel = vel.max((a[d] - decay * b[d]).abs());
        }
    }
    let p = pressure_periodic(&s.u, &s.b).unwrap().p;
    let pd = (-4.0 * params.nu * s.t).exp();
    let mut pres: f64 = 0.0;
    for m in 0..g.len() {
        let x = g.position_of(m);
        let exact = -0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * pd;
        pres = pres.max((p.values()[m] - exact).abs());
    }
    outcome(
        vel <= 1e-6 && pres <= 1e-6,
        format!("velocity max error {vel:.2e}, pressure max error {pres:.2e} at t={:.3} (tol 1e-6)", s.t),
    )
}

fn energy_audit() -> Outcome {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let init = random_solenoidal_init(g, 42, -5.0 / 3.0).unwrap();
    let params = SolverParams {
        nu: 0.05,
        xi: 0.05,
        dt: 1e-3,
        t_end: 1.0,
        ..Default::default()
    };
    let out = run(
        &init,
        &params,
        RunOptions {
            record_every: 100,
            snapshot_every: None,
        },
        None,
    )
    .unwrap();
    let e0 = init.energy();
    let rel = out.max_step_energy_residual / e0;
    let div = out.records.iter().map(|r| r.max_divergence).fold(0.0, f64::max);
    let steps = out.records.last().map_or(0, |r| r.step);
    outcome(
        steps == 1000 && rel <= 1e-6 && div <= 1e-12,
        format!("{steps} steps, max step residual {rel:.2e} E(0) (tol 1e-6), max divergence {div:.2e} (tol 1e-12)"),
    )
}

fn lemma11_envelope() -> Outcome {
    let g = Grid::centered(64, 1.0).unwrap();
    let f = radial_bump(g, [0.0; 3], 0.3, 20.0);
    let radii: Vec<f64> = (1..=5).map(|k| 0.5f64.powi(k)).filter(|&r| r > 2.5 * g.spacing()).collect();
    let centers = [[0.0; 3], [0.0625, 0.0, 0.0], [0.125, 0.125, 0.0]];
    let mut checked = 0;
    let mut violations = 0;
    let mut missing = 0;
    for gamma in [0.5, 1.0, 2.0] {
        let rep = lemma11_check(&f, gamma, &radii, &centers).unwrap();
        if rep.threshold.is_none() {
            missing += 1;
        }
        checked += rep.rows.len();
        violations += rep.violations().len();
    }
    outcome(
        checked > 0 && violations == 0 && missing == 0,
        format!("{checked} (gamma, r, center) cases below threshold, {violations} violations"),
    )
}

fn riesz_split() -> Outcome {
    let g = Grid::centered(160, 1.0).unwrap();
    let f = radial_bump(g, [0.0; 3], 0.3, 1.0);
    let gamma = 1.0;
    let radii: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
    let c = measured_c(&f, [0.0; 3], radii[0], gamma).unwrap();
    let (mut split_err, mut ratio1, mut ratio2): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &r in &radii {
        let d = d1_d2_split_with(&f, [0.0; 3], r, gamma, c).unwrap();
        let riesz = riesz_ball_potential(&f, [0.0; 3], r).unwrap();
        split_err = split_err.max((d.d1 + d.d2 - riesz).abs() / riesz);
        let l = (1.0 / r).ln();
        ratio1 = ratio1.max(d.d1 * gamma * l.powf(gamma) / c);
        ratio2 = ratio2.max(d.d2 * l.powf(1.0 + gamma) / c);
    }
    outcome(
        split_err <= 0.01 && ratio1 <= 1.0 && ratio2 <= 1.0 + 1e-12,
        format!(
            "6 radii, max |D1+D2-Riesz|/Riesz {split_err:.2e} (tol 1e-2), max D1/bound {ratio1:.3}, max D2/bound {ratio2:.3}"
        ),
    )
}

fn energy_inequality() -> Outcome {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let params = SolverParams {
        nu: 0.1,
        xi: 0.1,
        dt: 1e-3,
        t_end: 0.3,
        ..Default::default()
    };
    let out = run(
        &taylor_green_init(g),
        &params,
        RunOptions {
            record_every: 5,
            snapshot_every: Some(5),
        },
        None,
    )
    .unwrap();
    let traj: Vec<SimState> = out.snapshots.into_iter().map(|(_, s)| s).collect();
    let psi = ScalarTestFunction {
        time: TimeProfile::Bump { start: 0.05, end: 0.25 },
        space: PeriodicGaussian {
            center: [1.0, 2.0, 0.5],
            kappa: 2.0,
            length: 2.0 * PI,
        },
    };
    let rep = localized_energy_inequality_residual(&traj, &params, &psi).unwrap();
    outcome(
        rep.relative.abs() <= 1e-3,
        format!("lhs {:.6e}, rhs {:.6e}, relative residual {:.2e} (tol 1e-3)", rep.lhs, rep.rhs, rep.relative),
    )
}

fn determinism() -> Outcome {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    std::fs::create_dir_all(&dir).unwrap();
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let params = SolverParams {
        t_end: 0.05,
        ..Default::default()
    };
    let mut bytes = Vec::new();
    for attempt in 0..2 {
        let init = random_solenoidal_init(g, 2024, -5.0 / 3.0).unwrap();
        let out = run(
            &init,
            &params,
            RunOptions {
                record_every: 10,
                snapshot_every: Some(25),
            },
            None,
        )
        .unwrap();
        let mut files = Vec::new();
        for (step, state) in &out.snapshots {
            let path = dir.join(format!("run{attempt}-{step:06}.mhdf"));
            snapshot::save(&path, &state.fields()).unwrap();
            files.push(std::fs::read(&path).unwrap());
        }
        bytes.push(files);
    }
    let same = !bytes[0].is_empty() && bytes[0] == bytes[1];
    outcome(same, format!("{} snapshot files per run, identical: {same}", bytes[0].len()))
}

fn main() -> ExitCode {
    let checks: [(&str, Check, Duration); 9] = [
        ("sphere potential quadrature (GL order 32)", sphere_potential, Duration::from_secs(1)),
        ("finite-difference Hessians vs closed forms", hessian_sweep, Duration::from_secs(60)),
        ("three-way ball identity and refinement", identity_three_way, Duration::from_secs(300)),
        ("Taylor-Green velocity and pressure", taylor_green, Duration::from_secs(60)),
        ("discrete energy audit, 1000 steps", energy_audit, Duration::from_secs(300)),
        ("log-potential envelope below threshold", lemma11_envelope, Duration::from_secs(120)),
        ("layer-cake split of the Riesz potential", riesz_split, Duration::from_secs(120)),
        ("localized energy balance on Taylor-Green", energy_inequality, Duration::from_secs(120)),
        ("bit-identical snapshots for equal seeds", determinism, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in checks.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *budget;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} | {name} | {} | {:.2}s (budget {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failures, checks.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
