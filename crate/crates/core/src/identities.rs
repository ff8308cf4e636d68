//! Radial/tangential decompositions, the weighted ball identities for the
//! total pressure, energy-inequality and weak-form residuals along solver
//! trajectories, and the pressure condition monitors.
//!
//! The ball identities are statements on `R^3`: they are evaluated for
//! compactly supported fields on a box whose outer half is empty, with the
//! free-space pressure. Integrals over `B_R(x0)` and its complement run in
//! spherical coordinates about `x0` (Gauss–Legendre in radius, a product
//! rule on spheres) on six-point interpolants of the fields, so neither the
//! singular weight nor the sphere cuts through grid cells.

use log::{info, warn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dot, norm, sub, Grid, Point, ScalarField, VectorField};
use crate::logpot::orlicz_l32_norm;
use crate::pressure::{pressure_periodic, support_report, PressureBundle, PAIRS};
use crate::quadrature::{gauss_legendre_on, interpolate_many, SphereRule};
use crate::solver::{DiagnosticsRecord, SimState, SolverParams};
use crate::spectral::gradient;
use crate::synthetic::{ScalarTestFunction, SolenoidalTestField, TimeProfile};

/// Radial and tangential parts of a vector field about `center`, using the
/// plain displacement `x - center` (no periodic wrap).
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub v_r: VectorField,
    pub v_p: VectorField,
    pub center: Point,
}

/// Splits `v` into `((v.e) e, v - (v.e) e)` with `e = (x - x0)/|x - x0|`.
/// At `x = x0` the whole field counts as tangential.
pub fn radial_tangential_decompose(v: &VectorField, x0: Point) -> Decomposition {
    let grid = *v.grid();
    let mut radial = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    let mut tangential = radial.clone();
    for m in 0..grid.len() {
        let d = sub(grid.position_of(m), x0);
        let rho = norm(d);
        let w = v.at(m);
        let vr = if rho > 0.0 {
            let e = [d[0] / rho, d[1] / rho, d[2] / rho];
            let s = dot(w, e);
            [s * e[0], s * e[1], s * e[2]]
        } else {
            [0.0; 3]
        };
        for c in 0..3 {
            radial[c][m] = vr[c];
            tangential[c][m] = w[c] - vr[c];
        }
    }
    let build = |[x, y, z]: [Vec<f64>; 3]| {
        VectorField::new(
            ScalarField::from_raw(grid, x),
            ScalarField::from_raw(grid, y),
            ScalarField::from_raw(grid, z),
        )
        .expect("components share a grid")
    };
    Decomposition {
        v_r: build(radial),
        v_p: build(tangential),
        center: x0,
    }
}

/// Expressions of one ball identity evaluated independently.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    /// Third expression, when the identity has one.
    pub mid: Option<f64>,
    pub rhs: f64,
    /// Rearranged form of `mid`, when available.
    pub restated: Option<f64>,
    /// Largest pairwise difference over the largest magnitude.
    pub rel_residual: f64,
    pub grid_n: usize,
}

impl IdentityReport {
    fn new(lhs: f64, mid: Option<f64>, rhs: f64, restated: Option<f64>, grid_n: usize) -> Self {
        let vals: Vec<f64> = [Some(lhs), mid, Some(rhs), restated].into_iter().flatten().collect();
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut spread: f64 = 0.0;
        for (i, a) in vals.iter().enumerate() {
            for b in &vals[i + 1..] {
                spread = spread.max((a - b).abs());
            }
        }
        let rel_residual = if scale > 0.0 { spread / scale } else { 0.0 };
        Self {
            lhs,
            mid,
            rhs,
            restated,
            rel_residual,
            grid_n,
        }
    }
}

/// Gauss–Legendre order in the polar angle of the spherical rule used for
/// ball integrals; the azimuth takes twice as many points.
pub const ANGULAR_ORDER: usize = 48;
/// Radial nodes inside the ball.
pub const INNER_RADIAL_NODES: usize = 48;
/// Radial nodes between the sphere and the support.
pub const OUTER_RADIAL_NODES: usize = 96;

/// Field quantities at one quadrature point.
struct PointSample {
    rho: f64,
    /// Product of the radial and angular weights times `rho^2`.
    weight: f64,
    u2: f64,
    b2: f64,
    ur2: f64,
    br2: f64,
    p: f64,
}

/// Spherical-coordinate samples about `x0` inside and outside the sphere of
/// radius `R`, with fields interpolated from the grid.
struct BallScan {
    inner: Vec<PointSample>,
    outer: Vec<PointSample>,
}

impl BallScan {
    fn new(u: &VectorField, b: &VectorField, p: &ScalarField, x0: Point, radius: f64) -> Result<Self> {
        let grid = *u.grid();
        if !u.same_grid(b) || !p.grid().same_as(&grid) {
            return Err(Error::GridMismatch);
        }
        u.ensure_finite("velocity")?;
        b.ensure_finite("magnetic field")?;
        p.ensure_finite("pressure")?;
        let h = grid.spacing();
        if !(radius.is_finite() && radius >= 4.0 * h) {
            return Err(Error::RadiusTooSmall {
                radius,
                minimum: 4.0 * h,
            });
        }
        let origin = grid.origin();
        let (lo, hi) = (3.0 * h, grid.length() - 4.0 * h);
        for d in 0..3 {
            let (a, c) = (x0[d] - radius - origin[d], x0[d] + radius - origin[d]);
            if a < lo || c > hi {
                return Err(Error::invalid(
                    "R",
                    format!("ball of radius {radius} about {x0:?} reaches the box boundary"),
                ));
            }
        }
        let report = support_report(u, b, 2)?;
        if !report.within_tolerance {
            warn!(
                "fields are not compactly supported in the central half box (tail ratio {:.3e}, tail mass {:.3e})",
                report.tail_ratio, report.tail_mass
            );
        }
        // Support cube of the fields; the exterior integrand vanishes beyond it.
        let center = grid.center();
        let quarter = 0.25 * grid.length();
        let in_support = |x: Point| (0..3).all(|d| (x[d] - center[d]).abs() <= quarter);
        let reach = (0..8)
            .map(|c: usize| {
                let corner: Point =
                    [0, 1, 2].map(|d| center[d] + if c >> d & 1 == 1 { quarter } else { -quarter });
                norm(sub(corner, x0))
            })
            .fold(0.0, f64::max);

        let sphere = SphereRule::new(ANGULAR_ORDER);
        // Quadratic densities are interpolated as products so that pointwise
        // cancellations between u, b and p survive interpolation.
        let mut products: Vec<ScalarField> = Vec::with_capacity(12);
        for v in [u, b] {
            for (i, j) in PAIRS {
                products.push(v.component(i).zip_map(v.component(j), |a, c| a * c)?);
            }
        }
        let mut fields: Vec<&ScalarField> = products.iter().collect();
        fields.push(p);
        let mut vals = [0.0; 13];
        let sample = |rho: f64, weight: f64, omega: Point, vals: &mut [f64; 13]| {
            let x = [x0[0] + rho * omega[0], x0[1] + rho * omega[1], x0[2] + rho * omega[2]];
            interpolate_many(&fields, x, vals);
            let quad = |t: &[f64]| -> (f64, f64) {
                let tr = t[0] + t[3] + t[5];
                let (a, b, c) = (omega[0], omega[1], omega[2]);
                let radial = t[0] * a * a + t[3] * b * b + t[5] * c * c
                    + 2.0 * (t[1] * a * b + t[2] * a * c + t[4] * b * c);
                (tr, radial)
            };
            let (u2, ur2) = quad(&vals[..6]);
            let (b2, br2) = quad(&vals[6..12]);
            PointSample {
                rho,
                weight,
                u2,
                b2,
                ur2,
                br2,
                p: vals[12],
            }
        };
        // rho = R s^2 keeps fractional powers of rho smooth at the center.
        let mut inner = Vec::with_capacity(INNER_RADIAL_NODES * sphere.weights.len());
        for (s, ws) in gauss_legendre_on(INNER_RADIAL_NODES, 0.0, 1.0) {
            let rho = radius * s * s;
            let wr = ws * 2.0 * radius * s * rho * rho;
            for (&omega, &wo) in sphere.directions.iter().zip(&sphere.weights) {
                inner.push(sample(rho, wr * wo, omega, &mut vals));
            }
        }
        let mut outer = Vec::new();
        if reach > radius {
            for (rho, wr) in gauss_legendre_on(OUTER_RADIAL_NODES, radius, reach) {
                for (&omega, &wo) in sphere.directions.iter().zip(&sphere.weights) {
                    let x = [x0[0] + rho * omega[0], x0[1] + rho * omega[1], x0[2] + rho * omega[2]];
                    if in_support(x) {
                        outer.push(sample(rho, wr * wo * rho * rho, omega, &mut vals));
                    }
                }
            }
        }
        Ok(Self { inner, outer })
    }

    /// `int_{B_R} rho^-alpha f`.
    fn interior(&self, alpha: f64, f: impl Fn(&PointSample) -> f64) -> f64 {
        self.inner.iter().map(|s| s.weight * s.rho.powf(-alpha) * f(s)).sum()
    }

    /// `int_{|x - x0| > R} rho^-3 f`.
    fn exterior(&self, f: impl Fn(&PointSample) -> f64) -> f64 {
        self.outer.iter().map(|s| s.weight * f(s) / (s.rho * s.rho * s.rho)).sum()
    }
}

/// `2|u_r|^2 - |u_p|^2 - 2|b_r|^2 + |b_p|^2`.
fn exterior_density(s: &PointSample) -> f64 {
    let up2 = s.u2 - s.ur2;
    let bp2 = s.b2 - s.br2;
    2.0 * s.ur2 - up2 - 2.0 * s.br2 + bp2
}

/// Both sides of the weighted ball identity for the total pressure,
///
/// ```text
/// int_{B_R} rho^-a (p + |b|^2/2)
///   = 1/(3-a) [ int_{B_R} rho^-a (-|u|^2 + |b|^2 + a|u_r|^2 - a|b_r|^2)
///             + int_{|x-x0|>R} R^(3-a) rho^-3 (2|u_r|^2 - |u_p|^2 - 2|b_r|^2 + |b_p|^2) ],
/// ```
///
/// `rho = |x - x0|`, for compactly supported `u, b` and the free-space `p`.
pub fn identity_weighted(
    u: &VectorField,
    b: &VectorField,
    p: &ScalarField,
    x0: Point,
    radius: f64,
    alpha: f64,
) -> Result<IdentityReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    let scan = BallScan::new(u, b, p, x0, radius)?;
    let lhs = scan.interior(alpha, |s| s.p + 0.5 * s.b2);
    let inner = scan.interior(alpha, |s| -s.u2 + s.b2 + alpha * (s.ur2 - s.br2));
    let outer = radius.powf(3.0 - alpha) * scan.exterior(exterior_density);
    let rhs = (inner + outer) / (3.0 - alpha);
    Ok(IdentityReport::new(lhs, None, rhs, None, u.grid().n()))
}

/// The three expressions obtained from the weighted identity at `alpha = 1`
/// and `alpha = 0`:
///
/// ```text
/// lhs = int_{B_R} (2p + |u_p|^2 + |b_r|^2) / rho
/// mid = (1/R) int_{B_R} (3p + |u|^2 + |b|^2/2)
/// rhs = int_{|x-x0|>R} R^2 rho^-3 (2|u_r|^2 - |u_p|^2 - 2|b_r|^2 + |b_p|^2)
/// ```
///
/// `restated` evaluates `mid` as
/// `-(1/2R) int (|u|^2 + 2|b|^2) + (3/2R) int (2p + |u|^2 + |b|^2)`.
pub fn identity_28(u: &VectorField, b: &VectorField, p: &ScalarField, x0: Point, radius: f64) -> Result<IdentityReport> {
    let scan = BallScan::new(u, b, p, x0, radius)?;
    let lhs = scan.interior(1.0, |s| 2.0 * s.p + (s.u2 - s.ur2) + s.br2);
    let mid = scan.interior(0.0, |s| 3.0 * s.p + s.u2 + 0.5 * s.b2) / radius;
    let rhs = radius * radius * scan.exterior(exterior_density);
    let restated = -scan.interior(0.0, |s| s.u2 + 2.0 * s.b2) / (2.0 * radius)
        + 1.5 * scan.interior(0.0, |s| 2.0 * s.p + s.u2 + s.b2) / radius;
    Ok(IdentityReport::new(lhs, Some(mid), rhs, Some(restated), u.grid().n()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalEnergyRow {
    pub center: Point,
    pub r: f64,
    /// `(1/R) int_{B_R(x0)} |u|^2`.
    pub ratio_u: f64,
    /// `(1/R) int_{B_R(x0)} |b|^2`.
    pub ratio_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalEnergyTable {
    pub sup_u: f64,
    pub sup_b: f64,
    pub rows: Vec<LocalEnergyRow>,
}

/// Scaled local energies `(1/R) ||u||^2_{2; B_R(x0)}` and the same for `b`
/// over every pair of the given sets (cell-center balls, periodic images).
pub fn local_energy_ratios(state: &SimState, centers: &[Point], radii: &[f64]) -> Result<LocalEnergyTable> {
    if centers.is_empty() || radii.is_empty() {
        return Err(Error::invalid("sets", "need at least one center and one radius"));
    }
    let grid = *state.grid();
    let (u2, b2) = (state.u.magnitude_squared(), state.b.magnitude_squared());
    let mut rows = Vec::with_capacity(centers.len() * radii.len());
    let (mut sup_u, mut sup_b): (f64, f64) = (0.0, 0.0);
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::invalid("R", format!("must be positive, got {r}")));
        }
        for &c in centers {
            let (mut su, mut sb) = (0.0, 0.0);
            grid.for_each_in_ball(c, r, |m, _, _| {
                su += u2.values()[m];
                sb += b2.values()[m];
            })?;
            let scale = grid.cell_volume() / r;
            let row = LocalEnergyRow {
                center: c,
                r,
                ratio_u: su * scale,
                ratio_b: sb * scale,
            };
            sup_u = sup_u.max(row.ratio_u);
            sup_b = sup_b.max(row.ratio_b);
            rows.push(row);
        }
    }
    Ok(LocalEnergyTable { sup_u, sup_b, rows })
}

/// `int_{|x - center| > R} (|u|^2 + |b|^2)` with plain displacements; `R = 0`
/// covers the whole box.
pub fn tail_energy_about(state: &SimState, center: Point, radius: f64) -> Result<f64> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::invalid("R", format!("must be non-negative, got {radius}")));
    }
    let grid = *state.grid();
    let (u2, b2) = (state.u.magnitude_squared(), state.b.magnitude_squared());
    let mut total = 0.0;
    let mut farthest: f64 = 0.0;
    for m in 0..grid.len() {
        let rho = norm(sub(grid.position_of(m), center));
        farthest = farthest.max(rho);
        if radius == 0.0 || rho > radius {
            total += u2.values()[m] + b2.values()[m];
        }
    }
    if radius >= farthest {
        info!("tail radius {radius} exceeds the box (farthest node at {farthest:.4}); tail energy is 0");
    }
    Ok(total * grid.cell_volume())
}

/// Tail energy outside `B_R(0)`.
pub fn tail_energy(state: &SimState, radius: f64) -> Result<f64> {
    tail_energy_about(state, [0.0; 3], radius)
}

fn check_trajectory(trajectory: &[SimState]) -> Result<Grid> {
    let first = trajectory
        .first()
        .ok_or_else(|| Error::invalid("trajectory", "is empty"))?;
    let grid = *first.grid();
    for w in trajectory.windows(2) {
        if !w[1].grid().same_as(&grid) {
            return Err(Error::GridMismatch);
        }
        if !(w[1].t > w[0].t) {
            return Err(Error::invalid("trajectory", "times must increase strictly"));
        }
    }
    Ok(grid)
}

/// Trapezoid rule over the snapshot times.
fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Rows `J[i][j] = d_j v_i` of the spectral Jacobian.
fn jacobian(v: &VectorField) -> Result<[VectorField; 3]> {
    Ok([gradient(v.component(0))?, gradient(v.component(1))?, gradient(v.component(2))?])
}

fn jacobian_at(j: &[VectorField; 3], m: usize) -> [[f64; 3]; 3] {
    [j[0].at(m), j[1].at(m), j[2].at(m)]
}

fn frobenius2(a: &[[f64; 3]; 3]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum()
}

/// Directional derivative `(w . grad) v` from the Jacobian of `v`.
fn advect(w: Point, jac: &[[f64; 3]; 3]) -> Point {
    [dot(jac[0], w), dot(jac[1], w), dot(jac[2], w)]
}

/// Space-time integrals entering the localized energy balance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyInequalityReport {
    /// `2 int int (nu |grad u|^2 + xi |grad b|^2) psi`.
    pub lhs: f64,
    /// `int int (|u|^2 + |b|^2) d_t psi + nu |u|^2 lap psi + xi |b|^2 lap psi
    ///  + (|u|^2 + 2|b|^2 + 2p) u . grad psi - 2 (u . b) (b . grad psi)`.
    pub rhs: f64,
    /// `rhs - lhs`.
    pub residual: f64,
    /// `residual / max(|lhs|, |rhs|)`, 0 when both vanish.
    pub relative: f64,
}

/// Evaluates both sides of the localized energy inequality along a
/// trajectory of periodic states, with time integrals by the trapezoid rule
/// over the snapshots. The time factor of `psi` must be a bump supported
/// strictly inside the recorded time span.
pub fn localized_energy_inequality_residual(
    trajectory: &[SimState],
    params: &SolverParams,
    psi: &ScalarTestFunction,
) -> Result<EnergyInequalityReport> {
    let grid = check_trajectory(trajectory)?;
    psi.time.validate()?;
    let (t0, t1) = (trajectory[0].t, trajectory[trajectory.len() - 1].t);
    match psi.time {
        TimeProfile::Bump { start, end } if start > t0 && end < t1 => {}
        TimeProfile::Bump { start, end } => {
            return Err(Error::TestFunction(format!(
                "time support [{start}, {end}] must lie strictly inside the trajectory span [{t0}, {t1}]"
            )))
        }
        TimeProfile::Cutoff { .. } => {
            return Err(Error::TestFunction("the energy inequality needs a compactly supported time bump".into()))
        }
    }
    let space: Vec<(f64, Point, f64)> = (0..grid.len())
        .map(|m| {
            let x = grid.position_of(m);
            (psi.space.value(x), psi.space.gradient(x), psi.space.laplacian(x))
        })
        .collect();
    let (nu, xi) = (params.nu, params.xi);
    let cell = grid.cell_volume();
    let mut times = Vec::with_capacity(trajectory.len());
    let (mut lhs_t, mut rhs_t) = (Vec::new(), Vec::new());
    for state in trajectory {
        let (theta, dtheta) = psi.time.value_and_derivative(state.t);
        times.push(state.t);
        if theta == 0.0 && dtheta == 0.0 {
            lhs_t.push(0.0);
            rhs_t.push(0.0);
            continue;
        }
        let p = pressure_periodic(&state.u, &state.b)?.p;
        let (ju, jb) = (jacobian(&state.u)?, jacobian(&state.b)?);
        let (mut l, mut mass, mut flux) = (0.0, 0.0, 0.0);
        for (m, &(g, grad_g, lap_g)) in space.iter().enumerate() {
            let (uv, bv) = (state.u.at(m), state.b.at(m));
            let (u2, b2) = (dot(uv, uv), dot(bv, bv));
            let grad_u2 = frobenius2(&jacobian_at(&ju, m));
            let grad_b2 = frobenius2(&jacobian_at(&jb, m));
            l += (nu * grad_u2 + xi * grad_b2) * g;
            mass += (u2 + b2) * g;
            flux += nu * u2 * lap_g + xi * b2 * lap_g + (u2 + 2.0 * b2 + 2.0 * p.values()[m]) * dot(uv, grad_g)
                - 2.0 * dot(uv, bv) * dot(bv, grad_g);
        }
        lhs_t.push(2.0 * theta * l * cell);
        rhs_t.push((dtheta * mass + theta * flux) * cell);
    }
    let lhs = trapezoid(&times, &lhs_t);
    let rhs = trapezoid(&times, &rhs_t);
    let residual = rhs - lhs;
    let scale = lhs.abs().max(rhs.abs());
    Ok(EnergyInequalityReport {
        lhs,
        rhs,
        residual,
        relative: if scale > 0.0 { residual / scale } else { 0.0 },
    })
}

/// Weak-form defects of the momentum and induction equations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakFormReport {
    pub res_u: f64,
    pub res_b: f64,
    /// Each residual over the largest magnitude among its own terms.
    pub rel_u: f64,
    pub rel_b: f64,
}

fn relative(res: f64, terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale > 0.0 {
        res / scale
    } else {
        0.0
    }
}

/// Evaluates, for the solenoidal test field `phi`,
///
/// ```text
/// int int [-u . d_t phi + (u . grad u) . phi - (b . grad b) . phi + nu grad u : grad phi] - int u0 . phi(t0)
/// int int [-b . d_t phi + (u . grad b) . phi - (b . grad u) . phi + xi grad b : grad phi] - int b0 . phi(t0)
/// ```
///
/// along a periodic trajectory, time integrals by the trapezoid rule. The
/// time factor must vanish by the last snapshot.
pub fn weak_form_residual(
    trajectory: &[SimState],
    params: &SolverParams,
    phi: &SolenoidalTestField,
) -> Result<WeakFormReport> {
    let grid = check_trajectory(trajectory)?;
    phi.time.validate()?;
    let t1 = trajectory[trajectory.len() - 1].t;
    let end = match phi.time {
        TimeProfile::Bump { end, .. } | TimeProfile::Cutoff { end, .. } => end,
    };
    if end > t1 {
        return Err(Error::TestFunction(format!(
            "time support ends at {end}, after the last snapshot at {t1}"
        )));
    }
    let space: Vec<(Point, [[f64; 3]; 3])> = (0..grid.len())
        .map(|m| {
            let x = grid.position_of(m);
            (phi.spatial(x), phi.spatial_jacobian(x))
        })
        .collect();
    let jac_scale = space.iter().fold(0.0f64, |a, (_, j)| a.max(frobenius2(j).sqrt()));
    let div_max = space.iter().fold(0.0f64, |a, (_, j)| a.max((j[0][0] + j[1][1] + j[2][2]).abs()));
    if div_max > 1e-10 * jac_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::TestFunction(format!(
            "test field is not solenoidal (max divergence {div_max:.3e})"
        )));
    }
    let (nu, xi) = (params.nu, params.xi);
    let cell = grid.cell_volume();
    let times: Vec<f64> = trajectory.iter().map(|s| s.t).collect();
    // Per snapshot: [time derivative, advection, stretching, diffusion] for u then b.
    let mut series = vec![[0.0; 8]; trajectory.len()];
    for (state, row) in trajectory.iter().zip(series.iter_mut()) {
        let (theta, dtheta) = phi.time.value_and_derivative(state.t);
        if theta == 0.0 && dtheta == 0.0 {
            continue;
        }
        let (ju, jb) = (jacobian(&state.u)?, jacobian(&state.b)?);
        let mut acc = [0.0; 8];
        for (m, (f, jf)) in space.iter().enumerate() {
            let (uv, bv) = (state.u.at(m), state.b.at(m));
            let (jum, jbm) = (jacobian_at(&ju, m), jacobian_at(&jb, m));
            let contract = |a: &[[f64; 3]; 3]| -> f64 { (0..3).map(|i| dot(a[i], jf[i])).sum() };
            acc[0] -= dot(uv, *f) * dtheta;
            acc[1] += dot(advect(uv, &jum), *f) * theta;
            acc[2] -= dot(advect(bv, &jbm), *f) * theta;
            acc[3] += nu * contract(&jum) * theta;
            acc[4] -= dot(bv, *f) * dtheta;
            acc[5] += dot(advect(uv, &jbm), *f) * theta;
            acc[6] -= dot(advect(bv, &jum), *f) * theta;
            acc[7] += xi * contract(&jbm) * theta;
        }
        *row = acc.map(|v| v * cell);
    }
    let mut terms = [0.0; 8];
    for (k, term) in terms.iter_mut().enumerate() {
        let vals: Vec<f64> = series.iter().map(|r| r[k]).collect();
        *term = trapezoid(&times, &vals);
    }
    let first = &trajectory[0];
    let theta0 = phi.time.value(first.t);
    let (mut init_u, mut init_b) = (0.0, 0.0);
    for (m, (f, _)) in space.iter().enumerate() {
        init_u += dot(first.u.at(m), *f);
        init_b += dot(first.b.at(m), *f);
    }
    init_u *= theta0 * cell;
    init_b *= theta0 * cell;
    let res_u = terms[..4].iter().sum::<f64>() - init_u;
    let res_b = terms[4..].iter().sum::<f64>() - init_b;
    let (mut tu, mut tb) = (terms[..4].to_vec(), terms[4..].to_vec());
    tu.push(init_u);
    tb.push(init_b);
    Ok(WeakFormReport {
        res_u,
        res_b,
        rel_u: relative(res_u, &tu),
        rel_b: relative(res_b, &tb),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonitorPoint {
    pub t: f64,
    pub value: f64,
    pub running_sup: f64,
}

fn monitor(
    trajectory: &[SimState],
    gamma: f64,
    pick: impl Fn(&PressureBundle) -> ScalarField,
) -> Result<Vec<MonitorPoint>> {
    let mut out = Vec::with_capacity(trajectory.len());
    let mut sup: f64 = 0.0;
    for state in trajectory {
        let bundle = pressure_periodic(&state.u, &state.b)?;
        let value = orlicz_l32_norm(&pick(&bundle), gamma)?;
        sup = sup.max(value);
        out.push(MonitorPoint {
            t: state.t,
            value,
            running_sup: sup,
        });
    }
    Ok(out)
}

/// `||F_gamma(p_-)||_{3/2}` per state with its running supremum.
pub fn condition_a_monitor(trajectory: &[SimState], gamma: f64) -> Result<Vec<MonitorPoint>> {
    monitor(trajectory, gamma, |b| b.p_minus.clone())
}

/// `||F_gamma(B_+)||_{3/2}` of the Bernoulli pressure per state with its
/// running supremum.
pub fn condition_b_monitor(trajectory: &[SimState], gamma: f64) -> Result<Vec<MonitorPoint>> {
    monitor(trajectory, gamma, |b| b.bernoulli_plus())
}

/// What a diagnostics hook computes on each recorded periodic state.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsConfig {
    pub gamma: f64,
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    /// Tail radius, measured from the box center.
    pub tail_radius: f64,
}

/// Fills the pressure, local-energy and tail entries of `record`.
pub fn fill_diagnostics(state: &SimState, config: &DiagnosticsConfig, record: &mut DiagnosticsRecord) -> Result<()> {
    let bundle = pressure_periodic(&state.u, &state.b)?;
    record.orlicz_p_minus = orlicz_l32_norm(&bundle.p_minus, config.gamma)?;
    record.orlicz_bernoulli_plus = orlicz_l32_norm(&bundle.bernoulli_plus(), config.gamma)?;
    let table = local_energy_ratios(state, &config.centers, &config.radii)?;
    record.local_energy_sup_u = table.sup_u;
    record.local_energy_sup_b = table.sup_b;
    record.tail_energy = tail_energy_about(state, state.grid().center(), config.tail_radius)?;
    Ok(())
}
