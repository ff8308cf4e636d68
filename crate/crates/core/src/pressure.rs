//! Pressure recovery from `(u, b)`.
//!
//! With total pressure `P = p + |b|^2/2` and stress `T = u (x) u - b (x) b`,
//! taking the divergence of the momentum equation gives
//!
//! ```text
//! -lap P = d_i d_j T_ij,     P = G * (d_i d_j T_ij),   G(x) = 1 / (4 pi |x|).
//! ```
//!
//! The periodic mode solves this spectrally with zero-mean `P`; the
//! free-space mode convolves with `G` on a zero-padded grid.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, ScalarField, VectorField};
use crate::quadrature::{cube_power_integral, gauss_legendre_on, interpolate, SphereRule};
use crate::spectral::{
    derivative_spectral, fft3_in_place, forward_unchecked, inverse_transform, SpectralScalar, Wavenumbers,
};

/// Pressure, its sign parts and the Bernoulli pressure on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureBundle {
    pub p: ScalarField,
    pub p_plus: ScalarField,
    pub p_minus: ScalarField,
    /// `|u|^2/2 + |b|^2/2 + p`.
    pub bernoulli: ScalarField,
}

impl PressureBundle {
    /// Builds the bundle from the total pressure `p + |b|^2/2`.
    pub fn from_total(total: &ScalarField, u: &VectorField, b: &VectorField) -> Result<Self> {
        let b2 = b.magnitude_squared();
        let u2 = u.magnitude_squared();
        let p = total.zip_map(&b2, |t, q| t - 0.5 * q)?;
        let bernoulli = p.zip_map(&u2, |pv, q| pv + 0.5 * q)?.zip_map(&b2, |v, q| v + 0.5 * q)?;
        Ok(Self {
            p_plus: p.map(|v| v.max(0.0)),
            p_minus: p.map(|v| (-v).max(0.0)),
            p,
            bernoulli,
        })
    }

    pub fn bernoulli_plus(&self) -> ScalarField {
        self.bernoulli.map(|v| v.max(0.0))
    }

    /// Fields in snapshot order `p, p_plus, p_minus, bernoulli`.
    pub fn fields(&self) -> [&ScalarField; 4] {
        [&self.p, &self.p_plus, &self.p_minus, &self.bernoulli]
    }
}

pub(crate) const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    PAIRS.iter().position(|&p| p == (a, b)).expect("valid pair")
}

fn check_pair(u: &VectorField, b: &VectorField) -> Result<()> {
    if !u.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    u.ensure_finite("velocity")?;
    b.ensure_finite("magnetic field")
}

/// Independent entries of `u (x) u - b (x) b` in the order
/// `xx, xy, xz, yy, yz, zz`.
pub fn stress_tensor(u: &VectorField, b: &VectorField) -> Result<[ScalarField; 6]> {
    if !u.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    Ok(PAIRS.map(|(i, j)| {
        let uu = u.component(i).zip_map(u.component(j), |a, c| a * c).expect("same grid");
        let bb = b.component(i).zip_map(b.component(j), |a, c| a * c).expect("same grid");
        uu.zip_map(&bb, |a, c| a - c).expect("same grid")
    }))
}

fn stress_spectra(u: &VectorField, b: &VectorField) -> Result<Vec<SpectralScalar>> {
    Ok(stress_tensor(u, b)?.iter().map(forward_unchecked).collect())
}

/// `d_i d_j T_ij` in spectral space.
fn source_spectrum(t_hat: &[SpectralScalar]) -> SpectralScalar {
    let grid = *t_hat[0].grid();
    let wn = Wavenumbers::new(&grid);
    let coeffs = (0..grid.len())
        .map(|m| {
            let k = wn.k(grid.coords(m));
            let mut acc = Complex64::default();
            for (q, &(i, j)) in PAIRS.iter().enumerate() {
                let w = if i == j { 1.0 } else { 2.0 };
                acc -= t_hat[q].coefficients()[m] * (w * k[i] * k[j]);
            }
            acc
        })
        .collect();
    SpectralScalar::from_coefficients(grid, coeffs).expect("grid-sized")
}

/// `d_i d_j (u_i u_j - b_i b_j)`, differentiated spectrally.
pub fn stress_source(u: &VectorField, b: &VectorField) -> Result<ScalarField> {
    check_pair(u, b)?;
    Ok(inverse_transform(&source_spectrum(&stress_spectra(u, b)?)))
}

/// Periodic total pressure `p + |b|^2/2` with zero mean.
pub fn total_pressure_periodic(u: &VectorField, b: &VectorField) -> Result<ScalarField> {
    check_pair(u, b)?;
    let s = source_spectrum(&stress_spectra(u, b)?);
    let grid = *s.grid();
    let wn = Wavenumbers::new(&grid);
    let coeffs = s
        .coefficients()
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            let k = wn.k(grid.coords(m));
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                Complex64::default()
            } else {
                c / k2
            }
        })
        .collect();
    Ok(inverse_transform(&SpectralScalar::from_coefficients(grid, coeffs)?))
}

/// Pressure on the periodic box, normalized so `p + |b|^2/2` has zero mean.
pub fn pressure_periodic(u: &VectorField, b: &VectorField) -> Result<PressureBundle> {
    let total = total_pressure_periodic(u, b)?;
    PressureBundle::from_total(&total, u, b)
}

/// `(||lap P + d_i d_j T_ij||_2, ||d_i d_j T_ij||_2)` for a candidate total
/// pressure `P` on the periodic box.
pub fn poisson_residual(u: &VectorField, b: &VectorField, total: &ScalarField) -> Result<(f64, f64)> {
    let s = stress_source(u, b)?;
    let lap = crate::spectral::laplacian(total)?;
    let res = lap.zip_map(&s, |a, c| a + c)?;
    Ok((
        crate::quadrature::lp_norm(&res, 2.0)?,
        crate::quadrature::lp_norm(&s, 2.0)?,
    ))
}

/// Field magnitude outside the central sub-box of edge `L / pad_factor`,
/// relative to the global maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportReport {
    pub tail_ratio: f64,
    pub tail_mass: f64,
    pub within_tolerance: bool,
}

pub const SUPPORT_TOLERANCE: f64 = 1e-10;

pub fn support_report(u: &VectorField, b: &VectorField, pad_factor: usize) -> Result<SupportReport> {
    if pad_factor < 2 {
        return Err(Error::invalid("pad_factor", format!("need at least 2, got {pad_factor}")));
    }
    check_pair(u, b)?;
    let grid = *u.grid();
    let center = grid.center();
    let half = 0.5 * grid.length() / pad_factor as f64;
    let (mut tail_max, mut all_max, mut tail_mass): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for m in 0..grid.len() {
        let x = grid.position_of(m);
        let inside = (0..3).all(|d| (x[d] - center[d]).abs() <= half);
        let uv = u.at(m);
        let bv = b.at(m);
        let mag = uv.iter().chain(bv.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
        all_max = all_max.max(mag);
        if !inside {
            tail_max = tail_max.max(mag);
            tail_mass += uv.iter().chain(bv.iter()).map(|v| v * v).sum::<f64>();
        }
    }
    let tail_ratio = if all_max > 0.0 { tail_max / all_max } else { 0.0 };
    Ok(SupportReport {
        tail_ratio,
        tail_mass: tail_mass * grid.cell_volume(),
        within_tolerance: tail_ratio <= SUPPORT_TOLERANCE,
    })
}

/// Cell average of `1/(4 pi |x|)` over the cell of edge `h` centered at 0.
fn singular_cell_value(h: f64) -> f64 {
    cube_power_integral([0.0; 3], h, [0.0; 3], 1.0) / (4.0 * PI * h * h * h)
}

/// Free-space total pressure `G * (d_i d_j T_ij)` at the grid nodes, the
/// fields being taken as zero outside the box. The convolution runs on a
/// doubled grid so no periodic image reaches the box.
pub fn total_pressure_freespace(u: &VectorField, b: &VectorField, pad_factor: usize) -> Result<ScalarField> {
    let report = support_report(u, b, pad_factor)?;
    if !report.within_tolerance {
        warn!(
            "fields are not supported in the central 1/{pad_factor} sub-box: tail ratio {:.3e}, tail mass {:.3e}",
            report.tail_ratio, report.tail_mass
        );
    }
    let s = stress_source(u, b)?;
    let grid = *s.grid();
    let n = grid.n();
    let m = 2 * n;
    let h = grid.spacing();

    let kernel_hat: Vec<f64> = {
        let mut g = vec![Complex64::default(); m * m * m];
        let off = |i: usize| if i < m / 2 { i as f64 } else { i as f64 - m as f64 };
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let r = h * (off(i).powi(2) + off(j).powi(2) + off(k).powi(2)).sqrt();
                    let v = if r == 0.0 { singular_cell_value(h) } else { 1.0 / (4.0 * PI * r) };
                    g[(i * m + j) * m + k] = Complex64::new(v, 0.0);
                }
            }
        }
        fft3_in_place(&mut g, m, FftDirection::Forward);
        g.into_iter().map(|c| c.re).collect()
    };

    let mut data = vec![Complex64::default(); m * m * m];
    for i in 0..n {
        for j in 0..n {
            let src = grid.index(i, j, 0);
            let dst = (i * m + j) * m;
            for k in 0..n {
                data[dst + k] = Complex64::new(s.values()[src + k], 0.0);
            }
        }
    }
    fft3_in_place(&mut data, m, FftDirection::Forward);
    for (c, &g) in data.iter_mut().zip(&kernel_hat) {
        *c *= g;
    }
    drop(kernel_hat);
    fft3_in_place(&mut data, m, FftDirection::Inverse);
    let scale = h * h * h / (m * m * m) as f64;
    let mut values = vec![0.0; grid.len()];
    for i in 0..n {
        for j in 0..n {
            let src = (i * m + j) * m;
            let dst = grid.index(i, j, 0);
            for k in 0..n {
                values[dst + k] = data[src + k].re * scale;
            }
        }
    }
    ScalarField::from_values(grid, values)
}

/// Free-space pressure bundle.
pub fn pressure_freespace(u: &VectorField, b: &VectorField, pad_factor: usize) -> Result<PressureBundle> {
    let total = total_pressure_freespace(u, b, pad_factor)?;
    PressureBundle::from_total(&total, u, b)
}

/// Direct summation of the kernel form
///
/// ```text
/// P(x) = -tr T(x) / 3 + (1 / 4 pi) p.v. int K(y - x) : T(y) dy,
/// K_ij(e) = (3 e_i e_j - delta_ij |e|^2) / |e|^5,
/// ```
///
/// which needs no derivatives of the fields. When `x` is a grid node its own
/// cell is omitted from the sum, which realizes the principal value by
/// symmetry. Off-node points are accurate only away from the support;
/// points outside the box see the fields only through the sum.
pub fn total_pressure_direct(u: &VectorField, b: &VectorField, points: &[Point]) -> Result<Vec<f64>> {
    let t = stress_tensor(u, b)?;
    let grid = *u.grid();
    let h = grid.spacing();
    Ok(points
        .iter()
        .map(|&x| {
            let mut acc = 0.0;
            for m in 0..grid.len() {
                let y = grid.position_of(m);
                let e = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
                let r2 = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
                if r2 <= 1e-18 * h * h {
                    continue;
                }
                acc += kernel_contract(&t, m, e, r2);
            }
            let o = grid.origin();
            let inside = (0..3).all(|d| x[d] >= o[d] && x[d] < o[d] + grid.length());
            let trace = if inside {
                interpolate(&t[0], x) + interpolate(&t[3], x) + interpolate(&t[5], x)
            } else {
                0.0
            };
            -trace / 3.0 + acc * grid.cell_volume() / (4.0 * PI)
        })
        .collect())
}

/// `K(e) : T` at grid index `m`.
fn kernel_contract(t: &[ScalarField; 6], m: usize, e: Point, r2: f64) -> f64 {
    let mut kt = 0.0;
    for (q, &(i, j)) in PAIRS.iter().enumerate() {
        let tv = t[q].values()[m];
        if tv == 0.0 {
            continue;
        }
        let mult = if i == j { 1.0 } else { 2.0 };
        let kij = 3.0 * e[i] * e[j] - if i == j { r2 } else { 0.0 };
        kt += mult * kij * tv;
    }
    kt / (r2 * r2 * r2.sqrt())
}

fn smooth_step(tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / tau).exp();
    let b = (-1.0 / (1.0 - tau)).exp();
    a / (a + b)
}

/// Width, in grid spacings, of the shell where the far-field kernel
/// integral switches from sphere quadrature to the grid sum.
const BLEND_CELLS: f64 = 10.0;

/// Near/far split of the free-space pressure integral at `x` with radius
/// `d`, returning `(I1, I2)` such that `(I1 + I2) / (4 pi) = p + |b|^2/2`.
///
/// `I1` is `int_{B_d} (d_i d_j T_ij) / |x - y|` plus the two sphere terms
/// produced by integrating the exterior part by parts twice; `I2` is the
/// exterior integral of `K : T` with
/// `K_ij = (3 e_i e_j - delta_ij) / |x - y|^3`, `e = (y - x)/|y - x|`.
/// Fields are treated as zero outside the box.
pub fn pointwise_split(u: &VectorField, b: &VectorField, x: Point, d: f64) -> Result<(f64, f64)> {
    check_pair(u, b)?;
    let grid = *u.grid();
    let h = grid.spacing();
    if !(d.is_finite() && d >= 2.0 * h) {
        return Err(Error::RadiusTooSmall {
            radius: d,
            minimum: 2.0 * h,
        });
    }
    let t = stress_tensor(u, b)?;
    let t_hat: Vec<SpectralScalar> = t.iter().map(forward_unchecked).collect();
    let source = inverse_transform(&source_spectrum(&t_hat));
    // div T, component i = d_j T_ij.
    let div_t: Vec<ScalarField> = (0..3)
        .map(|i| {
            let mut acc = SpectralScalar::zeros(grid);
            for j in 0..3 {
                let dj = derivative_spectral(&t_hat[pair_index(i, j)], j);
                for (a, c) in acc.coefficients_mut().iter_mut().zip(dj.coefficients()) {
                    *a += c;
                }
            }
            inverse_transform(&acc)
        })
        .collect();

    let sphere = SphereRule::new(16);
    let at = |r: f64, w: Point| [x[0] + r * w[0], x[1] + r * w[1], x[2] + r * w[2]];
    let contract = |pos: Point, w: Point| -> (f64, f64) {
        // (e.T.e, trace T)
        let mut ete = 0.0;
        let mut tr = 0.0;
        for (q, &(i, j)) in PAIRS.iter().enumerate() {
            let v = interpolate(&t[q], pos);
            let mult = if i == j { 1.0 } else { 2.0 };
            ete += mult * w[i] * w[j] * v;
            if i == j {
                tr += v;
            }
        }
        (ete, tr)
    };

    let mut volume = 0.0;
    for (r, wr) in gauss_legendre_on(16, 0.0, d) {
        volume += wr * r * sphere.integrate(|w| interpolate(&source, at(r, w)));
    }
    let surface = sphere.integrate(|w| {
        let pos = at(d, w);
        let flux: f64 = (0..3).map(|i| w[i] * interpolate(&div_t[i], pos)).sum();
        let (ete, _) = contract(pos, w);
        -d * flux - ete
    });
    let i1 = volume + surface;

    let width = BLEND_CELLS * h;
    let mut near = 0.0;
    for (r, wr) in gauss_legendre_on(32, d, d + width) {
        let keep = 1.0 - smooth_step((r - d) / width);
        if keep == 0.0 {
            continue;
        }
        near += wr * keep / r
            * sphere.integrate(|w| {
                let (ete, tr) = contract(at(r, w), w);
                3.0 * ete - tr
            });
    }
    let mut far = 0.0;
    for m in 0..grid.len() {
        let y = grid.position_of(m);
        let e = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
        let r = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
        let chi = smooth_step((r - d) / width);
        if chi == 0.0 {
            continue;
        }
        far += chi * kernel_contract(&t, m, e, r * r);
    }
    let i2 = near + far * grid.cell_volume();
    Ok((i1, i2))
}

/// Grid and fields used by the free-space checks: a centered box of edge
/// `length` carrying a compact solenoidal bump of given radius.
pub fn freespace_bump_state(n: usize, length: f64, radius: f64) -> Result<(VectorField, VectorField)> {
    let grid = Grid::centered(n, length)?;
    let u = crate::synthetic::CurlBump::around([0.0; 3], radius, 1.0).sample(grid);
    Ok((u, VectorField::zeros(grid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::taylor_green_init;

    fn box32() -> Grid {
        Grid::new(32, 2.0 * PI).unwrap()
    }

    #[test]
    fn degenerate_shear_has_no_pressure() {
        let g = box32();
        let u = VectorField::from_fn(g, |p| [p[1].sin(), 0.0, 0.0]);
        let bundle = pressure_periodic(&u, &VectorField::zeros(g)).unwrap();
        assert!(bundle.p.max_abs() < 1e-14);
    }

    #[test]
    fn taylor_green_pressure_is_recovered() {
        let g = box32();
        let s = taylor_green_init(g);
        let bundle = pressure_periodic(&s.u, &s.b).unwrap();
        let exact = ScalarField::from_fn(g, |p| -0.25 * ((2.0 * p[0]).cos() + (2.0 * p[1]).cos()));
        let err = bundle.p.zip_map(&exact, |a, c| a - c).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
        let total = total_pressure_periodic(&s.u, &s.b).unwrap();
        let (res, rhs) = poisson_residual(&s.u, &s.b, &total).unwrap();
        assert!(res <= 1e-10 * rhs);
    }

    #[test]
    fn pure_single_mode_field_gives_minus_half_b_squared() {
        let g = box32();
        let b = VectorField::from_fn(g, |p| [0.0, (p[0] + 2.0 * p[2]).sin(), 0.0]);
        let u = VectorField::zeros(g);
        let bundle = pressure_periodic(&u, &b).unwrap();
        let total = total_pressure_periodic(&u, &b).unwrap();
        assert!(total.max_abs() < 1e-13);
        let b2 = b.magnitude_squared();
        let err = bundle.p.zip_map(&b2, |p, q| p + 0.5 * q).unwrap().max_abs();
        assert!(err < 1e-13);
    }

    #[test]
    fn bundle_parts_are_consistent() {
        let g = box32();
        let s = crate::solver::random_solenoidal_init(g, 4, -5.0 / 3.0).unwrap();
        let bun = pressure_periodic(&s.u, &s.b).unwrap();
        let u2 = s.u.magnitude_squared();
        let b2 = s.b.magnitude_squared();
        for m in 0..g.len() {
            let (p, pp, pm) = (bun.p.values()[m], bun.p_plus.values()[m], bun.p_minus.values()[m]);
            assert!(pp >= 0.0 && pm >= 0.0);
            assert_eq!(pp * pm, 0.0);
            assert_eq!(pp - pm, p);
            let bern = 0.5 * u2.values()[m] + 0.5 * b2.values()[m] + p;
            assert!((bun.bernoulli.values()[m] - bern).abs() < 1e-13);
        }
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = VectorField::zeros(Grid::new(8, 1.0).unwrap());
        let b = VectorField::zeros(Grid::new(8, 2.0).unwrap());
        assert!(matches!(pressure_periodic(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn freespace_zero_and_equal_fields() {
        let (u, _) = freespace_bump_state(16, 4.0, 0.8).unwrap();
        let zero = VectorField::zeros(*u.grid());
        let p0 = pressure_freespace(&zero, &zero, 2).unwrap();
        assert_eq!(p0.p.max_abs(), 0.0);
        let eq = pressure_freespace(&u, &u, 2).unwrap();
        let u2 = u.magnitude_squared();
        let err = eq.p.zip_map(&u2, |p, q| p + 0.5 * q).unwrap().max_abs();
        assert!(err < 1e-14);
    }

    #[test]
    fn small_radius_is_rejected() {
        let (u, b) = freespace_bump_state(16, 4.0, 0.8).unwrap();
        let err = pointwise_split(&u, &b, [0.0; 3], 0.3).unwrap_err();
        assert!(matches!(err, Error::RadiusTooSmall { .. }));
    }

    #[test]
    fn support_violation_is_reported() {
        let g = Grid::centered(16, 2.0).unwrap();
        let u = crate::synthetic::CurlBump::around([0.0; 3], 0.9, 1.0).sample(g);
        let rep = support_report(&u, &VectorField::zeros(g), 2).unwrap();
        assert!(!rep.within_tolerance && rep.tail_mass > 0.0);
    }
}
