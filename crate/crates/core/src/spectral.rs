//! Fourier transforms on periodic grids and the spectral differential
//! operators built on them.
//!
//! Convention: the forward transform is unnormalized, the inverse carries
//! `1/n^3`. Odd-order derivatives drop the Nyquist mode so that real fields
//! stay real; the Laplacian uses the same wavenumbers so that
//! `divergence(gradient(f)) == laplacian(f)` holds to round-off.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};

type Plan = Arc<dyn Fft<f64>>;

fn plans(m: usize) -> (Plan, Plan) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Plan, Plan)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(m)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft(m, FftDirection::Forward),
                planner.plan_fft(m, FftDirection::Inverse),
            )
        })
        .clone()
}

/// In-place 3-D transform of an `m^3` cube stored z-fastest. Unnormalized in
/// both directions.
pub(crate) fn fft3_in_place(data: &mut [Complex64], m: usize, direction: FftDirection) {
    assert_eq!(data.len(), m * m * m, "buffer is not an m^3 cube");
    let (fwd, inv) = plans(m);
    let plan = match direction {
        FftDirection::Forward => fwd,
        FftDirection::Inverse => inv,
    };
    let plane = m * m;

    // z lines, then y lines (via per-plane transpose); planes are independent.
    let per_plane = |slab: &mut [Complex64]| {
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(slab, &mut scratch);
        let mut t = vec![Complex64::default(); plane];
        for j in 0..m {
            for k in 0..m {
                t[k * m + j] = slab[j * m + k];
            }
        }
        plan.process_with_scratch(&mut t, &mut scratch);
        for j in 0..m {
            for k in 0..m {
                slab[j * m + k] = t[k * m + j];
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(plane).for_each(per_plane);
    }
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(plane).for_each(per_plane);

    // x lines: gather the (i, k) slab at fixed j.
    let mut slab = vec![Complex64::default(); plane];
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    for j in 0..m {
        for i in 0..m {
            let row = &data[(i * m + j) * m..(i * m + j + 1) * m];
            for (k, v) in row.iter().enumerate() {
                slab[k * m + i] = *v;
            }
        }
        plan.process_with_scratch(&mut slab, &mut scratch);
        for i in 0..m {
            let row = &mut data[(i * m + j) * m..(i * m + j + 1) * m];
            for (k, v) in row.iter_mut().enumerate() {
                *v = slab[k * m + i];
            }
        }
    }
}

/// Signed integer mode number of FFT index `i` on an `n`-point axis.
#[inline]
pub fn mode_number(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Per-axis angular wavenumbers, identical on all three axes.
#[derive(Clone, Debug)]
pub struct Wavenumbers {
    /// `2 pi m / L` with the Nyquist entry (even `n`) set to zero.
    pub derivative: Vec<f64>,
    /// Signed mode numbers `m`.
    pub modes: Vec<i64>,
}

impl Wavenumbers {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let base = 2.0 * std::f64::consts::PI / grid.length();
        let modes: Vec<i64> = (0..n).map(|i| mode_number(i, n)).collect();
        let derivative = modes
            .iter()
            .map(|&m| {
                if n % 2 == 0 && m == -(n as i64) / 2 {
                    0.0
                } else {
                    base * m as f64
                }
            })
            .collect();
        Self { derivative, modes }
    }

    #[inline]
    pub fn k(&self, idx: [usize; 3]) -> [f64; 3] {
        [
            self.derivative[idx[0]],
            self.derivative[idx[1]],
            self.derivative[idx[2]],
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalar {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coefficients: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_coefficients(grid: Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::invalid("coefficients", "length does not match grid"));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    /// Largest violation of `F(-k) = conj(F(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let neg = |i: usize| (n - i) % n;
        let mut worst: f64 = 0.0;
        for idx in 0..self.grid.len() {
            let [i, j, k] = self.grid.coords(idx);
            let mirror = self.grid.index(neg(i), neg(j), neg(k));
            worst = worst.max((self.coefficients[idx] - self.coefficients[mirror].conj()).norm());
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector {
    pub components: [SpectralScalar; 3],
}

impl SpectralVector {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: [
                SpectralScalar::zeros(grid),
                SpectralScalar::zeros(grid),
                SpectralScalar::zeros(grid),
            ],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.components[0].grid
    }
}

pub fn forward_transform(f: &ScalarField) -> Result<SpectralScalar> {
    f.ensure_finite("forward transform input")?;
    Ok(forward_unchecked(f))
}

pub(crate) fn forward_unchecked(f: &ScalarField) -> SpectralScalar {
    let grid = *f.grid();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft3_in_place(&mut data, grid.n(), FftDirection::Forward);
    SpectralScalar {
        grid,
        coefficients: data,
    }
}

pub fn inverse_transform(f: &SpectralScalar) -> ScalarField {
    let grid = f.grid;
    let mut data = f.coefficients.clone();
    fft3_in_place(&mut data, grid.n(), FftDirection::Inverse);
    let scale = 1.0 / grid.len() as f64;
    ScalarField::from_raw(grid, data.into_iter().map(|c| c.re * scale).collect())
}

pub fn forward_vector(v: &VectorField) -> Result<SpectralVector> {
    v.ensure_finite("forward transform input")?;
    Ok(SpectralVector {
        components: [
            forward_unchecked(v.component(0)),
            forward_unchecked(v.component(1)),
            forward_unchecked(v.component(2)),
        ],
    })
}

pub fn inverse_vector(v: &SpectralVector) -> VectorField {
    let [x, y, z] = [
        inverse_transform(&v.components[0]),
        inverse_transform(&v.components[1]),
        inverse_transform(&v.components[2]),
    ];
    VectorField::new(x, y, z).expect("components share the grid")
}

/// Multiplies every coefficient by `symbol(k)`.
pub(crate) fn apply_symbol(
    f: &SpectralScalar,
    symbol: impl Fn([f64; 3]) -> Complex64,
) -> SpectralScalar {
    let wn = Wavenumbers::new(&f.grid);
    let coefficients = f
        .coefficients
        .iter()
        .enumerate()
        .map(|(idx, &c)| c * symbol(wn.k(f.grid.coords(idx))))
        .collect();
    SpectralScalar {
        grid: f.grid,
        coefficients,
    }
}

/// Spectral `d/dx_axis`.
pub fn derivative_spectral(f: &SpectralScalar, axis: usize) -> SpectralScalar {
    apply_symbol(f, |k| Complex64::new(0.0, k[axis]))
}

pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    let fh = forward_transform(f)?;
    let [x, y, z] = [0, 1, 2].map(|d| inverse_transform(&derivative_spectral(&fh, d)));
    VectorField::new(x, y, z)
}

pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let vh = forward_vector(v)?;
    Ok(inverse_transform(&divergence_spectral(&vh)))
}

pub fn divergence_spectral(v: &SpectralVector) -> SpectralScalar {
    let grid = *v.grid();
    let wn = Wavenumbers::new(&grid);
    let coefficients = (0..grid.len())
        .map(|idx| {
            let k = wn.k(grid.coords(idx));
            let i = Complex64::new(0.0, 1.0);
            i * (v.components[0].coefficients[idx] * k[0]
                + v.components[1].coefficients[idx] * k[1]
                + v.components[2].coefficients[idx] * k[2])
        })
        .collect();
    SpectralScalar { grid, coefficients }
}

pub fn curl(v: &VectorField) -> Result<VectorField> {
    let vh = forward_vector(v)?;
    Ok(inverse_vector(&curl_spectral(&vh)))
}

pub fn curl_spectral(v: &SpectralVector) -> SpectralVector {
    let grid = *v.grid();
    let wn = Wavenumbers::new(&grid);
    let mut out = SpectralVector::zeros(grid);
    let i = Complex64::new(0.0, 1.0);
    for idx in 0..grid.len() {
        let k = wn.k(grid.coords(idx));
        let a = [
            v.components[0].coefficients[idx],
            v.components[1].coefficients[idx],
            v.components[2].coefficients[idx],
        ];
        out.components[0].coefficients[idx] = i * (a[2] * k[1] - a[1] * k[2]);
        out.components[1].coefficients[idx] = i * (a[0] * k[2] - a[2] * k[0]);
        out.components[2].coefficients[idx] = i * (a[1] * k[0] - a[0] * k[1]);
    }
    out
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    let fh = forward_transform(f)?;
    Ok(inverse_transform(&laplacian_spectral(&fh)))
}

pub fn laplacian_spectral(f: &SpectralScalar) -> SpectralScalar {
    apply_symbol(f, |k| Complex64::new(-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]), 0.0))
}

/// Removes the gradient part of `v` in place (Leray projection).
pub fn leray_project(v: &mut SpectralVector) {
    let grid = *v.grid();
    let wn = Wavenumbers::new(&grid);
    for idx in 0..grid.len() {
        let k = wn.k(grid.coords(idx));
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let kv = (v.components[0].coefficients[idx] * k[0]
            + v.components[1].coefficients[idx] * k[1]
            + v.components[2].coefficients[idx] * k[2])
            / k2;
        for d in 0..3 {
            v.components[d].coefficients[idx] -= kv * k[d];
        }
    }
}

/// Keep-mask of the truncation rule: a mode survives when every
/// `|m_d| <= floor(fraction * n / 2)`. `fraction = 2/3` is the classical
/// alias-free cutoff for quadratic products.
pub fn dealias_mask(grid: &Grid, fraction: f64) -> Vec<bool> {
    let n = grid.n();
    let cutoff = (fraction * n as f64 / 2.0 + 1e-12).floor() as i64;
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            let m = mode_number(i, n);
            m.abs() <= cutoff && !(n % 2 == 0 && m == -(n as i64) / 2)
        })
        .collect();
    (0..grid.len())
        .map(|idx| {
            let [i, j, k] = grid.coords(idx);
            keep[i] && keep[j] && keep[k]
        })
        .collect()
}

/// `sum |f|^2` recovered from the spectrum (Parseval).
pub fn spectral_sum_of_squares(f: &SpectralScalar) -> f64 {
    f.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() / f.grid.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScalarField::from_values(grid, values).unwrap()
    }

    #[test]
    fn constant_field_has_only_the_mean_mode() {
        let g = Grid::new(8, 2.0).unwrap();
        let f = forward_transform(&ScalarField::constant(g, 3.5)).unwrap();
        assert!((f.coefficients()[0].re - 3.5 * 512.0).abs() < 1e-10);
        assert!(f.coefficients()[1..].iter().all(|c| c.norm() < 1e-10));
    }

    #[test]
    fn single_sine_has_two_modes() {
        let g = Grid::new(16, 3.0).unwrap();
        let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0] / 3.0).sin());
        let fh = forward_transform(&f).unwrap();
        let big = fh.coefficients().iter().filter(|c| c.norm() > 1e-9).count();
        assert_eq!(big, 2);
    }

    #[test]
    fn round_trip_and_parseval_on_all_sizes() {
        for n in [8, 16, 32, 64] {
            let g = Grid::new(n, 1.7).unwrap();
            let f = random_field(g, n as u64);
            let fh = forward_transform(&f).unwrap();
            let back = inverse_transform(&fh);
            let err = f
                .values()
                .iter()
                .zip(back.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-12 * f.max_abs(), "n={n} err={err}");
            let direct: f64 = f.values().iter().map(|v| v * v).sum();
            let parseval = spectral_sum_of_squares(&fh);
            assert!(((direct - parseval) / direct).abs() < 1e-12);
            assert!(fh.hermitian_defect() < 1e-10 * (n * n * n) as f64);
        }
    }

    #[test]
    fn single_mode_derivative_is_exact() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(g, |p| (2.0 * p[0] + 3.0 * p[1] - p[2]).cos());
        let grad = gradient(&f).unwrap();
        for (d, m) in [2.0, 3.0, -1.0].into_iter().enumerate() {
            for idx in 0..g.len() {
                let p = g.position_of(idx);
                let exact = -m * (2.0 * p[0] + 3.0 * p[1] - p[2]).sin();
                assert!((grad.component(d).values()[idx] - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vector_identities_hold_to_round_off() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let a = VectorField::new(random_field(g, 1), random_field(g, 2), random_field(g, 3)).unwrap();
        let div_curl = divergence(&curl(&a).unwrap()).unwrap();
        assert!(div_curl.max_abs() < 1e-12 * 100.0, "{}", div_curl.max_abs());

        let f = random_field(g, 4);
        let lhs = divergence(&gradient(&f).unwrap()).unwrap();
        let rhs = laplacian(&f).unwrap();
        let diff = lhs.zip_map(&rhs, |a, b| a - b).unwrap().max_abs();
        assert!(diff < 1e-12 * rhs.max_abs().max(1.0) * 10.0, "{diff}");
    }

    #[test]
    fn sine_is_a_laplacian_eigenfunction() {
        let l = 3.0;
        let g = Grid::new(16, l).unwrap();
        let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0] / l).sin());
        let lap = laplacian(&f).unwrap();
        let c = -(2.0 * PI / l).powi(2);
        for idx in 0..g.len() {
            assert!((lap.values()[idx] - c * f.values()[idx]).abs() < 1e-11);
        }
        let grad_const = gradient(&ScalarField::constant(g, 2.0)).unwrap();
        assert!(grad_const.max_abs() < 1e-14);
    }

    #[test]
    fn projection_removes_gradients() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let f = random_field(g, 9);
        let grad = gradient(&f).unwrap();
        let mut gh = forward_vector(&grad).unwrap();
        leray_project(&mut gh);
        let left = inverse_vector(&gh);
        assert!(left.max_abs() < 1e-12, "{}", left.max_abs());
    }

    #[test]
    fn two_thirds_mask_cutoff() {
        let g = Grid::new(32, 1.0).unwrap();
        let mask = dealias_mask(&g, 2.0 / 3.0);
        assert!(mask[g.index(10, 0, 0)]);
        assert!(!mask[g.index(11, 0, 0)]);
        assert!(mask[g.index(22, 0, 0)]); // m = -10
        assert!(!mask[g.index(21, 0, 0)]); // m = -11
    }
}
