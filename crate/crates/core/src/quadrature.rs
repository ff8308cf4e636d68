//! Quadrature rules and grid integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Point, ScalarField};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(&xi, &wi)| (mid + half * xi, half * wi)).collect()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(mid);
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * GAUSS7_WEIGHTS[3];
    for (i, (&x, &w)) in GK_NODES.iter().zip(&GK_WEIGHTS).take(7).enumerate() {
        let pair = f(mid - half * x) + f(mid + half * x);
        kronrod += w * pair;
        if i % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Intervals are bisected until the local error estimate falls below its
/// share of `max(abs_tol, rel_tol * |integral|)`.
pub fn adaptive_gk(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (whole, err) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, whole, err)];
    for _ in 0..2000 {
        let total: f64 = intervals.iter().map(|s| s.2).sum();
        let total_err: f64 = intervals.iter().map(|s| s.3).sum();
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (l, le) = gk15(&mut f, lo, mid);
        let (r, re) = gk15(&mut f, mid, hi);
        intervals.push((lo, mid, l, le));
        intervals.push((mid, hi, r, re));
    }
    intervals.iter().map(|s| s.2).sum()
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos(theta)` times a
/// uniform azimuth with `2 * order` points. Weights sum to `4 pi`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub directions: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(order: usize) -> Self {
        let (t, w) = gauss_legendre(order);
        let m = 2 * order;
        let dphi = 2.0 * PI / m as f64;
        let mut directions = Vec::with_capacity(order * m);
        let mut weights = Vec::with_capacity(order * m);
        for (&ti, &wi) in t.iter().zip(&w) {
            let s = (1.0 - ti * ti).max(0.0).sqrt();
            for j in 0..m {
                let phi = (j as f64 + 0.5) * dphi;
                directions.push([s * phi.cos(), s * phi.sin(), ti]);
                weights.push(wi * dphi);
            }
        }
        Self { directions, weights }
    }

    /// `int_{S^2} f(omega) d omega`.
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.directions.iter().zip(&self.weights).map(|(&d, &w)| w * f(d)).sum()
    }
}

/// `int_0^a int_0^b (c^2 + x^2 + y^2)^(-alpha/2) dy dx` for `alpha < 2`, using
/// polar coordinates about the corner (the radial part is closed-form).
fn rectangle_corner_power(a: f64, b: f64, c: f64, alpha: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let e = 1.0 - 0.5 * alpha;
    let c2 = c * c;
    let base = c2.powf(e);
    let radial = |p: f64| ((c2 + p * p).powf(e) - base) / (2.0 - alpha);
    let split = (b / a).atan();
    let mut total = 0.0;
    for (theta, w) in gauss_legendre_on(32, 0.0, split) {
        total += w * radial(a / theta.cos());
    }
    for (theta, w) in gauss_legendre_on(32, split, 0.5 * PI) {
        total += w * radial(b / theta.sin());
    }
    total
}

/// `int` over the rectangle `[x0, x1] x [y0, y1]` in a plane at height `c`
/// of `(c^2 + x^2 + y^2)^(-alpha/2)`, the foot of the perpendicular at the
/// coordinate origin.
fn rectangle_power(x0: f64, x1: f64, y0: f64, y1: f64, c: f64, alpha: f64) -> f64 {
    // Signed decomposition into corner rectangles anchored at the foot.
    let part = |x: f64, y: f64| x.signum() * y.signum() * rectangle_corner_power(x.abs(), y.abs(), c, alpha);
    part(x1, y1) - part(x0, y1) - part(x1, y0) + part(x0, y0)
}

/// Exact `int_cube |y - x0|^(-alpha) dy` over the axis-aligned cube of given
/// center and edge, for `0 <= alpha < 2`. Meant for cubes at or next to
/// `x0`; far away the face decomposition loses digits to cancellation. Uses `div(y |y|^-alpha) =
/// (3 - alpha) |y|^-alpha` to reduce to face integrals.
pub fn cube_power_integral(center: Point, edge: f64, x0: Point, alpha: f64) -> f64 {
    let half = 0.5 * edge;
    let lo = [center[0] - half - x0[0], center[1] - half - x0[1], center[2] - half - x0[2]];
    let hi = [center[0] + half - x0[0], center[1] + half - x0[1], center[2] + half - x0[2]];
    let mut total = 0.0;
    for d in 0..3 {
        let (p, q) = ((d + 1) % 3, (d + 2) % 3);
        for (c, sign) in [(hi[d], 1.0), (lo[d], -1.0)] {
            if c == 0.0 {
                continue;
            }
            total += sign * c * rectangle_power(lo[p], hi[p], lo[q], hi[q], c, alpha);
        }
    }
    total / (3.0 - alpha)
}

/// Volume of `cube ∩ B_r(x0)`, by Gauss–Legendre over the cube's xy face
/// with exact z chords.
pub fn cube_ball_volume(center: Point, edge: f64, x0: Point, r: f64) -> f64 {
    let half = 0.5 * edge;
    let rule_x = gauss_legendre_on(64, center[0] - half, center[0] + half);
    let rule_y = gauss_legendre_on(64, center[1] - half, center[1] + half);
    let (z0, z1) = (center[2] - half - x0[2], center[2] + half - x0[2]);
    let mut total = 0.0;
    for &(x, wx) in &rule_x {
        for &(y, wy) in &rule_y {
            let rho2 = (x - x0[0]).powi(2) + (y - x0[1]).powi(2);
            if rho2 >= r * r {
                continue;
            }
            let s = (r * r - rho2).sqrt();
            let len = (z1.min(s) - z0.max(-s)).max(0.0);
            total += wx * wy * len;
        }
    }
    total
}

const LAGRANGE_POINTS: usize = 6;

/// Six-point periodic Lagrange interpolation of `f` at an arbitrary point.
pub fn interpolate(f: &ScalarField, x: Point) -> f64 {
    let mut out = [0.0];
    interpolate_many(&[f], x, &mut out);
    out[0]
}

/// Interpolates several fields sharing one grid at the same point, writing
/// one value per field into `out`.
pub fn interpolate_many(fields: &[&ScalarField], x: Point, out: &mut [f64]) {
    debug_assert_eq!(fields.len(), out.len());
    let Some(first) = fields.first() else {
        return;
    };
    let g = first.grid();
    let n = g.n() as i64;
    let h = g.spacing();
    let origin = g.origin();
    let mut idx = [[0usize; LAGRANGE_POINTS]; 3];
    let mut wts = [[0.0; LAGRANGE_POINTS]; 3];
    for d in 0..3 {
        let s = (x[d] - origin[d]) / h;
        let base = s.floor() as i64 - 2;
        let t = s - base as f64;
        for m in 0..LAGRANGE_POINTS {
            idx[d][m] = (base + m as i64).rem_euclid(n) as usize;
            let mut w = 1.0;
            for q in 0..LAGRANGE_POINTS {
                if q != m {
                    w *= (t - q as f64) / (m as f64 - q as f64);
                }
            }
            wts[d][m] = w;
        }
    }
    out.iter_mut().for_each(|o| *o = 0.0);
    for a in 0..LAGRANGE_POINTS {
        for b in 0..LAGRANGE_POINTS {
            let wab = wts[0][a] * wts[1][b];
            let row = g.index(idx[0][a], idx[1][b], 0);
            for c in 0..LAGRANGE_POINTS {
                let w = wab * wts[2][c];
                let m = row + idx[2][c];
                for (o, f) in out.iter_mut().zip(fields) {
                    *o += w * f.values()[m];
                }
            }
        }
    }
}

/// `int f` over the periodic box (cell-center rule).
pub fn integrate(f: &ScalarField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid("p", format!("need p >= 1, got {p}")));
    }
    Ok(())
}

/// `(int |f|^p)^(1/p)` over the box.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    check_p(p)?;
    let s: f64 = f.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((s * f.grid().cell_volume()).powf(1.0 / p))
}

/// `(int_{B_r(x0)} |f|^p)^(1/p)` with cell-center membership.
pub fn lp_norm_ball(f: &ScalarField, x0: Point, r: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(r > 0.0) {
        return Err(Error::invalid("radius", format!("must be positive, got {r}")));
    }
    let v = f.values();
    let mut s = 0.0;
    f.grid().for_each_in_ball(x0, r, |idx, _, _| s += v[idx].abs().powf(p))?;
    Ok((s * f.grid().cell_volume()).powf(1.0 / p))
}

/// `int_{B_r(x0)} f` with cell-center membership.
pub fn integrate_ball(f: &ScalarField, x0: Point, r: f64) -> Result<f64> {
    let v = f.values();
    let mut s = 0.0;
    f.grid().for_each_in_ball(x0, r, |idx, _, _| s += v[idx])?;
    Ok(s * f.grid().cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in [1, 2, 5, 16, 32, 64] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * order - 1;
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    fn adaptive_rule_handles_endpoint_singularity() {
        let v = adaptive_gk(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12, 1e-12);
        assert!((v - 2.0).abs() < 1e-9, "{v}");
        let v = adaptive_gk(f64::sin, 0.0, PI, 1e-14, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_rule_weights_and_moments() {
        let rule = SphereRule::new(16);
        assert!((rule.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-12);
        let zz = rule.integrate(|d| d[2] * d[2]);
        assert!((zz - 4.0 * PI / 3.0).abs() < 1e-12);
        let xxyy = rule.integrate(|d| d[0] * d[0] * d[1] * d[1]);
        assert!((xxyy - 4.0 * PI / 15.0).abs() < 1e-12);
    }

    #[test]
    fn cube_integral_reproduces_volume_and_known_constants() {
        let v = cube_power_integral([0.3, -0.2, 0.1], 0.7, [1.0, 1.0, 1.0], 0.0);
        assert!((v - 0.343).abs() < 1e-13);
        // int over the unit cube of 1/|y| about its center is about 2.380077 (h = 1).
        let c = cube_power_integral([0.0; 3], 1.0, [0.0; 3], 1.0);
        assert!((c - 2.380_077_363_4).abs() < 1e-8, "{c}");
        // A nearby but disjoint cube against a plain tensor rule.
        let x0 = [0.3, 0.05, -0.02];
        let near = cube_power_integral([0.0; 3], 0.1, x0, 1.0);
        let rule = gauss_legendre_on(12, -0.05, 0.05);
        let mut tensor = 0.0;
        for &(x, wx) in &rule {
            for &(y, wy) in &rule {
                for &(z, wz) in &rule {
                    let r = ((x - x0[0]).powi(2) + (y - x0[1]).powi(2) + (z - x0[2]).powi(2)).sqrt();
                    tensor += wx * wy * wz / r;
                }
            }
        }
        assert!(((near - tensor) / tensor).abs() < 1e-10, "{near} {tensor}");
    }

    #[test]
    fn cube_integral_matches_brute_force_off_center() {
        let x0 = [0.13, -0.31, 0.22];
        let alpha = 0.6;
        let exact = cube_power_integral([0.0; 3], 1.0, x0, alpha);
        // Split at x0 so each sub-box has the singularity on a corner.
        let mut brute = 0.0;
        let pieces = |c: f64| [(-0.5, c), (c, 0.5)];
        for (ax, bx) in pieces(x0[0]) {
            for (ay, by) in pieces(x0[1]) {
                for (az, bz) in pieces(x0[2]) {
                    for &(x, wx) in &gauss_legendre_on(40, ax, bx) {
                        for &(y, wy) in &gauss_legendre_on(40, ay, by) {
                            for &(z, wz) in &gauss_legendre_on(40, az, bz) {
                                let r = ((x - x0[0]).powi(2) + (y - x0[1]).powi(2) + (z - x0[2]).powi(2)).sqrt();
                                brute += wx * wy * wz * r.powf(-alpha);
                            }
                        }
                    }
                }
            }
        }
        assert!(((exact - brute) / exact).abs() < 1e-4, "{exact} {brute}");
    }

    #[test]
    fn cube_ball_volume_limits() {
        let inscribed = cube_ball_volume([0.0; 3], 1.0, [0.0; 3], 0.5);
        assert!((inscribed - PI / 6.0).abs() < 1e-3, "{inscribed}");
        let covering = cube_ball_volume([0.0; 3], 1.0, [0.0; 3], 0.9);
        assert!((covering - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_accurate_for_smooth_periodic_fields() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(g, |p| (p[0]).sin() * (2.0 * p[1]).cos() + p[2].cos());
        for x in [[0.11f64, 2.3, 5.9], [6.2, 0.01, 3.3], [-0.4, 7.0, 1.0]] {
            let exact = x[0].sin() * (2.0 * x[1]).cos() + x[2].cos();
            assert!((interpolate(&f, x) - exact).abs() < 2e-4);
        }
        let node = g.position(3, 4, 5);
        assert!((interpolate(&f, node) - f.values()[g.index(3, 4, 5)]).abs() < 1e-13);
    }

    #[test]
    fn box_integrals_of_constants() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let one = ScalarField::constant(g, 1.0);
        assert!((integrate(&one) - (2.0 * PI).powi(3)).abs() < 1e-9);
        assert!((lp_norm(&one, 2.0).unwrap() - (2.0 * PI).powf(1.5)).abs() < 1e-10);
        assert!(lp_norm(&one, 0.5).is_err());
    }

    #[test]
    fn ball_volume_within_two_percent() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let h = g.spacing();
        let x0 = [PI + 0.5 * h, PI + 0.5 * h, PI + 0.5 * h];
        let v = lp_norm_ball(&one, x0, 0.5, 1.0).unwrap();
        let exact = 4.0 * PI / 3.0 * 0.125;
        assert!(((v - exact) / exact).abs() < 0.02, "{v} vs {exact}");
        assert!(lp_norm_ball(&one, x0, 4.0, 1.0).is_err());
    }

    #[test]
    fn ball_error_shrinks_under_refinement() {
        // Average over several off-lattice centers to smooth out lattice luck.
        let err = |n: usize| {
            let g = Grid::new(n, 2.0).unwrap();
            let f = ScalarField::from_fn(g, |p| 1.0 + 0.5 * (PI * p[0]).cos());
            let centers = [[1.01, 0.97, 1.03], [0.93, 1.07, 1.011], [1.05, 1.02, 0.94]];
            centers
                .iter()
                .map(|&c| {
                    let v = integrate_ball(&f, c, 0.6).unwrap();
                    // Radial oracle: average of cos over the ball.
                    let k = PI;
                    let r: f64 = 0.6;
                    let jball = 3.0 * ((k * r).sin() - k * r * (k * r).cos()) / (k * r).powi(3);
                    let exact = 4.0 * PI / 3.0 * r.powi(3) * (1.0 + 0.5 * (k * c[0]).cos() * jball);
                    ((v - exact) / exact).abs()
                })
                .sum::<f64>()
        };
        let (coarse, fine) = (err(32), err(128));
        assert!(fine < coarse, "{coarse} -> {fine}");
    }
}
