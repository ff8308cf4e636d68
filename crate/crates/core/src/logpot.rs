//! Log-modulated functionals and local potential bounds.
//!
//! `F_g(s) = s [ln(1 + s)]^(1 + g)` and `Phi_g = F_g^(3/2)` define the
//! integrability class used for the pressure. The scans here measure
//!
//! ```text
//! J(x0, r) = (ln 1/r)^(1+g) / r * int_{B_r(x0)} f
//! ```
//!
//! over finite sets of centers and radii, the Riesz ball potential
//! `int_{B_r(x0)} f / |x - x0|`, and its layer-cake split into `D1 + D2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, ScalarField};
use crate::quadrature::{cube_ball_volume, cube_power_integral};

/// Validated exponent `gamma > 0`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaParams {
    pub gamma: f64,
}

impl GammaParams {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self { gamma })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid("gamma", format!("must be positive, got {gamma}")));
    }
    Ok(())
}

fn check_nonnegative(name: &'static str, s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid(name, format!("must be finite and non-negative, got {s}")));
    }
    Ok(())
}

fn f_raw(s: f64, gamma: f64) -> f64 {
    s * s.ln_1p().powf(1.0 + gamma)
}

fn phi_raw(s: f64, gamma: f64) -> f64 {
    f_raw(s, gamma).powf(1.5)
}

fn phi_derivative(s: f64, gamma: f64) -> f64 {
    let l = s.ln_1p();
    let f = s * l.powf(1.0 + gamma);
    let df = l.powf(1.0 + gamma) + (1.0 + gamma) * s * l.powf(gamma) / (1.0 + s);
    1.5 * f.sqrt() * df
}

/// `F_g(s) = s [ln(1 + s)]^(1 + g)`.
pub fn f_gamma(s: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_nonnegative("s", s)?;
    Ok(f_raw(s, gamma))
}

/// `Phi_g(s) = F_g(s)^(3/2)`.
pub fn phi_gamma(s: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_nonnegative("s", s)?;
    Ok(phi_raw(s, gamma))
}

/// Inverse of `Phi_g`: bisection on a doubling bracket to relative width
/// `1e-12`, then two Newton steps.
pub fn phi_gamma_inv(y: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_nonnegative("y", y)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while phi_raw(hi, gamma) < y {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if phi_raw(mid, gamma) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..2 {
        let d = phi_derivative(s, gamma);
        if d > 0.0 {
            let next = s - (phi_raw(s, gamma) - y) / d;
            if next > 0.0 {
                s = next;
            }
        }
    }
    Ok(s)
}

fn check_field_nonnegative(f: &ScalarField) -> Result<()> {
    f.ensure_finite("field")?;
    if let Some((i, v)) = f.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::invalid(
            "field",
            format!("must be non-negative, found {v} at index {i}"),
        ));
    }
    Ok(())
}

/// `||F_g(f)||_{3/2} = (int Phi_g(f))^(2/3)` over the box.
pub fn orlicz_l32_norm(f: &ScalarField, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_field_nonnegative(f)?;
    let s: f64 = f.values().iter().map(|&v| phi_raw(v, gamma)).sum();
    Ok((s * f.grid().cell_volume()).powf(2.0 / 3.0))
}

/// `(ln 1/r)^(1+g) / r`.
pub fn log_weight(r: f64, gamma: f64) -> f64 {
    (1.0 / r).ln().powf(1.0 + gamma) / r
}

/// `J` with its split over `{f <= 1}` and `{f > 1}` at one center and radius.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LocalSupEntry {
    pub center: Point,
    pub r: f64,
    pub j: f64,
    pub j1: f64,
    pub j2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSupReport {
    pub sup_value: f64,
    pub argmax_center: Point,
    pub argmax_radius: f64,
    pub sup_j1: f64,
    pub sup_j2: f64,
    pub r_grid: Vec<f64>,
    pub center_grid: Vec<Point>,
    /// Every `(center, r)` pair, radii varying fastest.
    pub entries: Vec<LocalSupEntry>,
}

fn check_radius_unit(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid("r", format!("must lie in (0, 1), got {r}")));
    }
    Ok(())
}

fn check_center(grid: &Grid, c: Point) -> Result<()> {
    let o = grid.origin();
    if (0..3).any(|d| !(c[d] >= o[d] && c[d] <= o[d] + grid.length())) {
        return Err(Error::invalid("center", format!("{c:?} lies outside the box")));
    }
    Ok(())
}

/// Split ball integral `(int_{B_r} f 1{f <= 1}, int_{B_r} f 1{f > 1})`.
fn split_ball_integral(f: &ScalarField, x0: Point, r: f64) -> Result<(f64, f64)> {
    let v = f.values();
    let (mut low, mut high) = (0.0, 0.0);
    f.grid().for_each_in_ball(x0, r, |idx, _, _| {
        let s = v[idx];
        if s > 1.0 {
            high += s;
        } else {
            low += s;
        }
    })?;
    let dv = f.grid().cell_volume();
    Ok((low * dv, high * dv))
}

/// Exhaustive scan of `J(x0, r)` over `center_set x r_set`. Ties keep the
/// first maximum in scan order (centers outer, radii inner).
pub fn weighted_local_sup(f: &ScalarField, gamma: f64, r_set: &[f64], center_set: &[Point]) -> Result<LocalSupReport> {
    check_gamma(gamma)?;
    check_field_nonnegative(f)?;
    if r_set.is_empty() || center_set.is_empty() {
        return Err(Error::invalid("grids", "radius and center sets must be non-empty"));
    }
    for &r in r_set {
        check_radius_unit(r)?;
    }
    for &c in center_set {
        check_center(f.grid(), c)?;
    }
    let mut entries = Vec::with_capacity(r_set.len() * center_set.len());
    for &center in center_set {
        for &r in r_set {
            let (low, high) = split_ball_integral(f, center, r)?;
            let w = log_weight(r, gamma);
            entries.push(LocalSupEntry {
                center,
                r,
                j: w * (low + high),
                j1: w * low,
                j2: w * high,
            });
        }
    }
    let best = entries
        .iter()
        .fold(&entries[0], |best, e| if e.j > best.j { e } else { best });
    Ok(LocalSupReport {
        sup_value: best.j,
        argmax_center: best.center,
        argmax_radius: best.r,
        sup_j1: entries.iter().map(|e| e.j1).fold(0.0, f64::max),
        sup_j2: entries.iter().map(|e| e.j2).fold(0.0, f64::max),
        r_grid: r_set.to_vec(),
        center_grid: center_set.to_vec(),
        entries,
    })
}

/// Dyadic radii `2^-k` within `[r_min, r_max]`, largest first.
pub fn dyadic_radii(r_min: f64, r_max: f64) -> Vec<f64> {
    (0..200)
        .map(|k| 0.5f64.powi(k))
        .filter(|&r| r >= r_min && r <= r_max)
        .collect()
}

/// Grid nodes with every index a multiple of `stride`.
pub fn strided_centers(grid: &Grid, stride: usize) -> Vec<Point> {
    let stride = stride.max(1);
    let n = grid.n();
    let mut out = Vec::new();
    for i in (0..n).step_by(stride) {
        for j in (0..n).step_by(stride) {
            for k in (0..n).step_by(stride) {
                out.push(grid.position(i, j, k));
            }
        }
    }
    out
}

/// Cell containing `x0`, as `(flat index, center - x0)` with the minimal
/// image displacement.
fn host_cell(grid: &Grid, x0: Point) -> (usize, Point) {
    let [i, j, k] = grid.nearest_node(x0);
    let c = grid.position(i, j, k);
    let d = grid.minimal_image([c[0] - x0[0], c[1] - x0[1], c[2] - x0[2]]);
    (grid.index(i, j, k), d)
}

fn check_resolvable(grid: &Grid, r: f64) -> Result<()> {
    let minimum = 2.0 * grid.spacing();
    if !(r > minimum) {
        return Err(Error::RadiusTooSmall { radius: r, minimum });
    }
    Ok(())
}

/// `int_{B_r(x0)} f / |x - x0|`, cell-center rule with the exact kernel
/// integral over the cell containing `x0`.
pub fn riesz_ball_potential(f: &ScalarField, x0: Point, r: f64) -> Result<f64> {
    check_field_nonnegative(f)?;
    let grid = *f.grid();
    check_resolvable(&grid, r)?;
    let (host, d) = host_cell(&grid, x0);
    let v = f.values();
    let mut acc = 0.0;
    grid.for_each_in_ball(x0, r, |idx, _, rho| {
        if idx != host {
            acc += v[idx] / rho;
        }
    })?;
    let singular = v[host] * cube_power_integral(d, grid.spacing(), [0.0; 3], 1.0);
    Ok(acc * grid.cell_volume() + singular)
}

/// Layer-cake split of the Riesz ball potential:
/// `D1 = int_0^r mu(B_z) / z^2 dz`, `D2 = mu(B_r) / r`, with the bounds
/// `c / (g (ln 1/r)^g)` and `c / (ln 1/r)^(1+g)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DSplit {
    pub d1: f64,
    pub d2: f64,
    pub bound1: f64,
    pub bound2: f64,
    pub c: f64,
}

/// Number of log-spaced nodes in the `D1` trapezoid.
pub const D1_NODES: usize = 64;

/// Cumulative mass `mu(B_z(x0))`: cell-center steps, except that the cell
/// containing `x0` enters through its exact overlap with the ball.
struct MassProfile {
    radii: Vec<f64>,
    cumulative: Vec<f64>,
    host_value: f64,
    host_offset: Point,
    edge: f64,
}

impl MassProfile {
    fn new(f: &ScalarField, x0: Point, r: f64) -> Result<Self> {
        let grid = *f.grid();
        let (host, d) = host_cell(&grid, x0);
        let v = f.values();
        let mut cells = Vec::new();
        grid.for_each_in_ball(x0, r, |idx, _, rho| {
            if idx != host {
                cells.push((rho, v[idx]));
            }
        })?;
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        let dv = grid.cell_volume();
        let mut total = 0.0;
        let mut radii = Vec::with_capacity(cells.len());
        let mut cumulative = Vec::with_capacity(cells.len());
        for (rho, val) in cells {
            total += val * dv;
            radii.push(rho);
            cumulative.push(total);
        }
        Ok(Self {
            radii,
            cumulative,
            host_value: v[host],
            host_offset: d,
            edge: grid.spacing(),
        })
    }

    fn at(&self, z: f64) -> f64 {
        let n = self.radii.partition_point(|&rho| rho <= z);
        let outer = if n == 0 { 0.0 } else { self.cumulative[n - 1] };
        outer + self.host_value * cube_ball_volume(self.host_offset, self.edge, [0.0; 3], z)
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0) + self.host_value * self.edge.powi(3)
    }
}

/// `D1` by a log-spaced trapezoid on `(h/2, r)` plus the inner piece
/// `f(x0) (2 pi / 3) (h/2)^2` (the ball `B_{h/2}` sits inside one cell);
/// `D2 = mu(B_r) / r`.
pub fn d1_d2_split_with(f: &ScalarField, x0: Point, r: f64, gamma: f64, c: f64) -> Result<DSplit> {
    check_gamma(gamma)?;
    check_radius_unit(r)?;
    check_field_nonnegative(f)?;
    let grid = *f.grid();
    check_resolvable(&grid, r)?;
    let profile = MassProfile::new(f, x0, r)?;
    let z_min = 0.5 * grid.spacing();
    let ratio = (r / z_min).ln();
    let nodes: Vec<f64> = (0..D1_NODES)
        .map(|i| z_min * (ratio * i as f64 / (D1_NODES - 1) as f64).exp())
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&z| profile.at(z) / (z * z)).collect();
    let mut d1 = 0.0;
    for i in 1..D1_NODES {
        d1 += 0.5 * (values[i] + values[i - 1]) * (nodes[i] - nodes[i - 1]);
    }
    d1 += profile.host_value * (2.0 * PI / 3.0) * z_min * z_min;
    let d2 = profile.total() / r;
    let l = (1.0 / r).ln();
    Ok(DSplit {
        d1,
        d2,
        bound1: c / (gamma * l.powf(gamma)),
        bound2: c / l.powf(1.0 + gamma),
        c,
    })
}

/// `sup J(x0, z)` over the dyadic radii `r 2^-k` above twice the spacing,
/// and `r` itself: the constant of the potential bound as seen from `x0`.
pub fn measured_c(f: &ScalarField, x0: Point, r: f64, gamma: f64) -> Result<f64> {
    let floor = 2.0 * f.grid().spacing();
    let radii: Vec<f64> = (0..200)
        .map(|k| r * 0.5f64.powi(k))
        .take_while(|&z| z > floor)
        .collect();
    if radii.is_empty() {
        return Err(Error::RadiusTooSmall { radius: r, minimum: floor });
    }
    Ok(weighted_local_sup(f, gamma, &radii, &[x0])?.sup_value)
}

/// [`d1_d2_split_with`] with `c` from [`measured_c`].
pub fn d1_d2_split(f: &ScalarField, x0: Point, r: f64, gamma: f64) -> Result<DSplit> {
    let c = measured_c(f, x0, r, gamma)?;
    d1_d2_split_with(f, x0, r, gamma, c)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DecayRow {
    pub r: f64,
    /// `sup` over times and centers of the Riesz ball potential.
    pub sup_potential: f64,
    /// `c (1/(g (ln 1/r)^g) + 1/(ln 1/r)^(1+g))` with `c` the largest `J`
    /// over all times, centers and radii of the scan.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayProfile {
    pub rows: Vec<DecayRow>,
    pub c: f64,
    /// Least-squares slope of `ln sup_potential` against `ln r`.
    pub exponent: f64,
}

/// Uniform-in-time Riesz potential profile over a family of fields.
pub fn uniform_decay_profile(
    fields: &[ScalarField],
    gamma: f64,
    r_set: &[f64],
    center_set: &[Point],
) -> Result<DecayProfile> {
    check_gamma(gamma)?;
    let first = fields
        .first()
        .ok_or_else(|| Error::invalid("fields", "need at least one field"))?;
    if fields.iter().any(|f| !f.grid().same_as(first.grid())) {
        return Err(Error::GridMismatch);
    }
    let mut c: f64 = 0.0;
    let mut sups = vec![0.0f64; r_set.len()];
    for f in fields {
        c = c.max(weighted_local_sup(f, gamma, r_set, center_set)?.sup_value);
        for (s, &r) in sups.iter_mut().zip(r_set) {
            for &x0 in center_set {
                *s = s.max(riesz_ball_potential(f, x0, r)?);
            }
        }
    }
    let rows: Vec<DecayRow> = r_set
        .iter()
        .zip(&sups)
        .map(|(&r, &s)| {
            let l = (1.0 / r).ln();
            DecayRow {
                r,
                sup_potential: s,
                bound: c * (1.0 / (gamma * l.powf(gamma)) + 1.0 / l.powf(1.0 + gamma)),
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.sup_potential > 0.0)
        .map(|row| (row.r.ln(), row.sup_potential.ln()))
        .collect();
    let exponent = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(DecayProfile { rows, c, exponent })
}

/// `c1 = (3 / 4 pi) int Phi_g(f 1{f > 1})`.
pub fn lemma11_c1(f: &ScalarField, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_field_nonnegative(f)?;
    let s: f64 = f
        .values()
        .iter()
        .filter(|&&v| v > 1.0)
        .map(|&v| phi_raw(v, gamma))
        .sum();
    Ok(3.0 / (4.0 * PI) * s * f.grid().cell_volume())
}

/// `A_g(r) = Phi_g^{-1}(c1 / r^3)`.
pub fn a_gamma(r: f64, c1: f64, gamma: f64) -> Result<f64> {
    check_radius_unit(r)?;
    phi_gamma_inv(c1 / (r * r * r), gamma)
}

/// The two envelopes `(4 pi / 3) r^2 (ln 1/r)^(1+g)` for `J1` and
/// `(4 pi / 3) c1^(2/3) (ln(1/r) / ln(1 + A_g(r)))^(1+g)` for `J2`.
pub fn lemma11_envelopes(r: f64, c1: f64, gamma: f64) -> Result<(f64, f64)> {
    let l = (1.0 / r).ln();
    let j1 = 4.0 * PI / 3.0 * r * r * l.powf(1.0 + gamma);
    let j2 = if c1 == 0.0 {
        0.0
    } else {
        let a = a_gamma(r, c1, gamma)?;
        4.0 * PI / 3.0 * c1.powf(2.0 / 3.0) * (l / a.ln_1p()).powf(1.0 + gamma)
    };
    Ok((j1, j2))
}

/// Deepest dyadic exponent examined by [`lemma11_threshold`].
pub const THRESHOLD_DEPTH: i32 = 64;

/// Largest dyadic `r = 2^-k` such that for it and every smaller dyadic
/// radius down to `2^-64` both `J1`-envelope `< 1` and
/// `r^3 Phi_g(1/r - 1) < c1` hold. Without mass above 1 (`c1 = 0`) only the
/// first condition applies.
pub fn lemma11_threshold(c1: f64, gamma: f64) -> Result<Option<f64>> {
    check_gamma(gamma)?;
    check_nonnegative("c1", c1)?;
    let holds = |k: i32| -> bool {
        let r = 0.5f64.powi(k);
        let l = (1.0 / r).ln();
        let env = 4.0 * PI / 3.0 * r * r * l.powf(1.0 + gamma);
        let second = c1 == 0.0 || r.powi(3) * phi_raw(1.0 / r - 1.0, gamma) < c1;
        env < 1.0 && second
    };
    let mut best = None;
    for k in (1..=THRESHOLD_DEPTH).rev() {
        if holds(k) {
            best = Some(0.5f64.powi(k));
        } else {
            break;
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Lemma11Row {
    pub r: f64,
    pub center: Point,
    pub j: f64,
    pub j1: f64,
    pub j2: f64,
    pub j1_envelope: f64,
    pub j2_envelope: f64,
    pub a_gamma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma11Report {
    pub gamma: f64,
    pub c1: f64,
    pub threshold: Option<f64>,
    /// One row per radius, at the center maximizing `J`.
    pub rows: Vec<Lemma11Row>,
}

impl Lemma11Report {
    /// Radii at or below the threshold where `J` exceeds the envelope sum.
    pub fn violations(&self) -> Vec<f64> {
        let Some(t) = self.threshold else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|row| row.r <= t && row.j > row.j1_envelope + row.j2_envelope)
            .map(|row| row.r)
            .collect()
    }
}

/// Scan of `J` against the two envelopes.
pub fn lemma11_check(f: &ScalarField, gamma: f64, r_set: &[f64], center_set: &[Point]) -> Result<Lemma11Report> {
    let c1 = lemma11_c1(f, gamma)?;
    let threshold = lemma11_threshold(c1, gamma)?;
    let scan = weighted_local_sup(f, gamma, r_set, center_set)?;
    let mut rows = Vec::with_capacity(r_set.len());
    for &r in r_set {
        let best = scan
            .entries
            .iter()
            .filter(|e| e.r == r)
            .fold(None::<&LocalSupEntry>, |b, e| match b {
                Some(b) if b.j >= e.j => Some(b),
                _ => Some(e),
            })
            .expect("non-empty center set");
        let (j1_envelope, j2_envelope) = lemma11_envelopes(r, c1, gamma)?;
        rows.push(Lemma11Row {
            r,
            center: best.center,
            j: best.j,
            j1: best.j1,
            j2: best.j2,
            j1_envelope,
            j2_envelope,
            a_gamma: a_gamma(r, c1, gamma)?,
        });
    }
    Ok(Lemma11Report {
        gamma,
        c1,
        threshold,
        rows,
    })
}

/// `avg_B Phi_g(g) - Phi_g(avg_B g)` over the cells of `B_r(x0)`; Jensen's
/// inequality makes it non-negative.
pub fn jensen_gap(g: &ScalarField, x0: Point, r: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_field_nonnegative(g)?;
    let v = g.values();
    let (mut n, mut s, mut sp) = (0usize, 0.0, 0.0);
    g.grid().for_each_in_ball(x0, r, |idx, _, _| {
        n += 1;
        s += v[idx];
        sp += phi_raw(v[idx], gamma);
    })?;
    if n == 0 {
        return Ok(0.0);
    }
    let n = n as f64;
    Ok(sp / n - phi_raw(s / n, gamma))
}
