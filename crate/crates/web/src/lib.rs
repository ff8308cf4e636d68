//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a flat `Float64Array`; the row layout is given in
//! each function's doc. The `*_rows` functions are the plain Rust versions
//! used by the exports and by the tests.

use mhd_regularity::kernels::{potential_analytic, potential_quadrature, SWEEP_DIRECTION};
use mhd_regularity::logpot::{f_gamma, phi_gamma};
use mhd_regularity::pressure::pressure_periodic;
use mhd_regularity::solver::{random_solenoidal_init, run, taylor_green_3d, RunOptions, SolverParams};
use mhd_regularity::Grid;
use wasm_bindgen::prelude::*;

/// Rows `(s, F_gamma(s), Phi_gamma(s))` for `samples` points on `[0, s_max]`.
pub fn gamma_curve_rows(gamma: f64, s_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(s_max.is_finite() && s_max > 0.0) || samples < 2 {
        return Err(format!("need s_max > 0 and at least 2 samples, got {s_max}, {samples}"));
    }
    let mut out = Vec::with_capacity(3 * samples);
    for i in 0..samples {
        let s = s_max * i as f64 / (samples - 1) as f64;
        out.push(s);
        out.push(f_gamma(s, gamma).map_err(|e| e.to_string())?);
        out.push(phi_gamma(s, gamma).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Rows `(|x - x0| / R, closed form, quadrature)` of the unit-ball potential
/// with weight `|y - x0|^(-alpha)`, sampled on `(0, ratio_max]`.
pub fn kernel_profile_rows(alpha: f64, ratio_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(ratio_max.is_finite() && ratio_max > 0.0) || samples < 1 {
        return Err(format!("need ratio_max > 0 and at least 1 sample, got {ratio_max}, {samples}"));
    }
    let mut out = Vec::with_capacity(3 * samples);
    for i in 1..=samples {
        let q = ratio_max * i as f64 / samples as f64;
        let x = SWEEP_DIRECTION.map(|d| q * d);
        out.push(q);
        out.push(potential_analytic(x, [0.0; 3], 1.0, alpha).map_err(|e| e.to_string())?);
        out.push(potential_quadrature(x, [0.0; 3], 1.0, alpha).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Pressure on the mid-plane `z = L/2` after `steps` solver steps from a
/// Taylor–Green (`random = false`) or random solenoidal start on an `n^3`
/// grid of edge `2 pi`. Row-major `n x n`, `x` slowest.
pub fn pressure_slice_rows(n: usize, steps: usize, dt: f64, random: bool, seed: u64) -> Result<Vec<f64>, String> {
    if !(4..=48).contains(&n) {
        return Err(format!("n must lie in [4, 48], got {n}"));
    }
    let grid = Grid::new(n, 2.0 * std::f64::consts::PI).map_err(|e| e.to_string())?;
    let init = if random {
        random_solenoidal_init(grid, seed, -5.0 / 3.0).map_err(|e| e.to_string())?
    } else {
        taylor_green_3d(grid)
    };
    let state = if steps == 0 {
        init
    } else {
        let params = SolverParams {
            dt,
            t_end: dt * steps as f64,
            ..SolverParams::default()
        };
        let options = RunOptions {
            record_every: steps,
            snapshot_every: None,
        };
        run(&init, &params, options, None).map_err(|e| e.to_string())?.final_state
    };
    let p = pressure_periodic(&state.u, &state.b).map_err(|e| e.to_string())?.p;
    let k = n / 2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(p.values()[grid.index(i, j, k)]);
        }
    }
    Ok(out)
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// See [`gamma_curve_rows`].
#[wasm_bindgen]
pub fn gamma_curves(gamma: f64, s_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    js(gamma_curve_rows(gamma, s_max, samples))
}

/// See [`kernel_profile_rows`].
#[wasm_bindgen]
pub fn kernel_profile(alpha: f64, ratio_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    js(kernel_profile_rows(alpha, ratio_max, samples))
}

/// See [`pressure_slice_rows`].
#[wasm_bindgen]
pub fn pressure_slice(n: usize, steps: usize, dt: f64, random: bool, seed: u64) -> Result<Vec<f64>, JsError> {
    js(pressure_slice_rows(n, steps, dt, random, seed))
}
