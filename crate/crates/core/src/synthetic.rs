//! Smooth synthetic fields and space-time test functions with closed-form
//! derivatives.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, ScalarField, VectorField};

/// `exp(1 - 1/(1 - s^2))` on `|s| < 1`, zero outside; equals 1 at `s = 0`.
pub fn bump(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

/// `d bump / ds`.
pub fn bump_derivative(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        -2.0 * s / (q * q) * bump(s)
    }
}

/// Radial bump `amplitude * bump(|x - center| / radius)`.
pub fn radial_bump(grid: Grid, center: Point, radius: f64, amplitude: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let r = dist(x, center);
        amplitude * bump(r / radius)
    })
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Divergence-free, compactly supported velocity `curl A` where
/// `A_i = amplitude * exp(-4 s^2 / (1 - s^2))`, `s = |x - c_i| / radius`.
/// The profile is Gaussian-like in the core, so its spectrum is well
/// resolved even though it vanishes identically for `s >= 1`. The curl is
/// evaluated in closed form, so the sampled field is exactly solenoidal
/// pointwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurlBump {
    pub centers: [Point; 3],
    pub radius: f64,
    pub amplitude: f64,
}

impl CurlBump {
    /// Three potentials with slightly offset centers around `center`, so the
    /// curl has no special symmetry.
    pub fn around(center: Point, radius: f64, amplitude: f64) -> Self {
        let o = 0.12 * radius;
        Self {
            centers: [
                [center[0] + o, center[1], center[2] - 0.5 * o],
                [center[0], center[1] - o, center[2] + 0.3 * o],
                [center[0] - 0.4 * o, center[1] + 0.6 * o, center[2] + o],
            ],
            radius,
            amplitude,
        }
    }

    /// Radius of a ball about `center` (the argument given to `around`)
    /// containing the support.
    pub fn support_radius(&self, center: Point) -> f64 {
        self.centers.iter().map(|&c| dist(c, center)).fold(0.0, f64::max) + self.radius
    }

    fn potential_gradient(&self, i: usize, x: Point) -> Point {
        let c = self.centers[i];
        let a = self.radius;
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let s2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (a * a);
        let q = 1.0 - s2;
        if q <= 0.0 {
            return [0.0; 3];
        }
        let phi = (-4.0 * s2 / q).exp();
        let f = -8.0 * phi / (a * a * q * q) * self.amplitude;
        [f * d[0], f * d[1], f * d[2]]
    }

    pub fn velocity(&self, x: Point) -> [f64; 3] {
        let g: [Point; 3] = [0, 1, 2].map(|i| self.potential_gradient(i, x));
        [
            g[2][1] - g[1][2],
            g[0][2] - g[2][0],
            g[1][0] - g[0][1],
        ]
    }

    pub fn sample(&self, grid: Grid) -> VectorField {
        VectorField::from_fn(grid, |x| self.velocity(x))
    }
}

/// Temporal factor of a separable test function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeProfile {
    /// Smooth bump supported in `(start, end)`.
    Bump { start: f64, end: f64 },
    /// Equal to 1 up to `start`, smoothly decreasing to 0 at `end`.
    Cutoff { start: f64, end: f64 },
}

fn smooth_step_parts(tau: f64) -> (f64, f64) {
    // S(tau) = f(tau) / (f(tau) + f(1 - tau)), f(t) = exp(-1/t).
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let df = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() / (t * t) };
    let (a, b) = (f(tau), f(1.0 - tau));
    let s = a / (a + b);
    let ds = (df(tau) * b + a * df(1.0 - tau)) / ((a + b) * (a + b));
    (s, ds)
}

impl TimeProfile {
    pub fn validate(&self) -> Result<()> {
        let (start, end) = match *self {
            TimeProfile::Bump { start, end } | TimeProfile::Cutoff { start, end } => (start, end),
        };
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::TestFunction(format!("time window [{start}, {end}] is empty")));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        self.value_and_derivative(t).0
    }

    pub fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        match *self {
            TimeProfile::Bump { start, end } => {
                let w = 0.5 * (end - start);
                let s = (t - 0.5 * (start + end)) / w;
                (bump(s), bump_derivative(s) / w)
            }
            TimeProfile::Cutoff { start, end } => {
                if t <= start {
                    return (1.0, 0.0);
                }
                if t >= end {
                    return (0.0, 0.0);
                }
                let w = end - start;
                let (s, ds) = smooth_step_parts((t - start) / w);
                (1.0 - s, -ds / w)
            }
        }
    }
}

/// Periodic, strongly localized spatial profile
/// `g(x) = prod_d exp(kappa (cos(2 pi (x_d - c_d) / L) - 1))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicGaussian {
    pub center: Point,
    pub kappa: f64,
    pub length: f64,
}

/// Value and derivatives up to third order of one axis factor.
fn axis_factor(x: f64, c: f64, kappa: f64, length: f64) -> [f64; 4] {
    let k = 2.0 * PI / length;
    let th = k * (x - c);
    let (s, co) = th.sin_cos();
    let e = (kappa * (co - 1.0)).exp();
    // With q = kappa (cos th - 1): q' = -kappa k sin, q'' = -kappa k^2 cos, q''' = kappa k^3 sin.
    let q1 = -kappa * k * s;
    let q2 = -kappa * k * k * co;
    let q3 = kappa * k * k * k * s;
    [
        e,
        e * q1,
        e * (q1 * q1 + q2),
        e * (q1 * q1 * q1 + 3.0 * q1 * q2 + q3),
    ]
}

impl PeriodicGaussian {
    fn factors(&self, x: Point) -> [[f64; 4]; 3] {
        [0, 1, 2].map(|d| axis_factor(x[d], self.center[d], self.kappa, self.length))
    }

    pub fn value(&self, x: Point) -> f64 {
        let f = self.factors(x);
        f[0][0] * f[1][0] * f[2][0]
    }

    pub fn gradient(&self, x: Point) -> Point {
        let f = self.factors(x);
        [
            f[0][1] * f[1][0] * f[2][0],
            f[0][0] * f[1][1] * f[2][0],
            f[0][0] * f[1][0] * f[2][1],
        ]
    }

    pub fn laplacian(&self, x: Point) -> f64 {
        let f = self.factors(x);
        f[0][2] * f[1][0] * f[2][0] + f[0][0] * f[1][2] * f[2][0] + f[0][0] * f[1][0] * f[2][2]
    }

    /// Mixed partial derivative with multi-index given as derivative orders
    /// per axis (each order at most 3).
    pub fn derivative(&self, x: Point, orders: [usize; 3]) -> f64 {
        let f = self.factors(x);
        f[0][orders[0]] * f[1][orders[1]] * f[2][orders[2]]
    }

    pub fn hessian(&self, x: Point) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut o = [0; 3];
                o[i] += 1;
                o[j] += 1;
                *v = self.derivative(x, o);
            }
        }
        h
    }
}

/// Nonnegative separable test function `psi(x, t) = theta(t) g(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarTestFunction {
    pub time: TimeProfile,
    pub space: PeriodicGaussian,
}

/// Solenoidal test field `phi(x, t) = theta(t) curl(g a) = theta(t) grad g x a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolenoidalTestField {
    pub time: TimeProfile,
    pub space: PeriodicGaussian,
    pub direction: [f64; 3],
}

fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl SolenoidalTestField {
    /// Spatial part `grad g x a`.
    pub fn spatial(&self, x: Point) -> Point {
        cross(self.space.gradient(x), self.direction)
    }

    /// Spatial Jacobian `J[i][j] = d_j (grad g x a)_i`.
    pub fn spatial_jacobian(&self, x: Point) -> [[f64; 3]; 3] {
        let h = self.space.hessian(x);
        let a = self.direction;
        let mut jac = [[0.0; 3]; 3];
        for j in 0..3 {
            let col = cross([h[0][j], h[1][j], h[2][j]], a);
            for i in 0..3 {
                jac[i][j] = col[i];
            }
        }
        jac
    }

    /// Spatial divergence, identically zero up to round-off.
    pub fn spatial_divergence(&self, x: Point) -> f64 {
        let j = self.spatial_jacobian(x);
        j[0][0] + j[1][1] + j[2][2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compact_and_normalized() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.5), 0.0);
        let h = 1e-6;
        for s in [-0.7, -0.2, 0.1, 0.5, 0.9] {
            let fd = (bump(s + h) - bump(s - h)) / (2.0 * h);
            assert!((fd - bump_derivative(s)).abs() < 1e-6);
        }
    }

    #[test]
    fn curl_bump_is_solenoidal_and_compact() {
        let g = Grid::centered(32, 4.0).unwrap();
        let bumpf = CurlBump::around([0.0; 3], 0.8, 1.0);
        let u = bumpf.sample(g);
        assert!(u.max_abs() > 0.1);
        let h = 1e-5;
        for x in [[0.2, -0.3, 0.1], [0.5, 0.4, -0.2], [-0.1, 0.05, 0.6]] {
            let mut div = 0.0;
            for d in 0..3 {
                let (mut xp, mut xm) = (x, x);
                xp[d] += h;
                xm[d] -= h;
                div += (bumpf.velocity(xp)[d] - bumpf.velocity(xm)[d]) / (2.0 * h);
            }
            assert!(div.abs() < 1e-6, "{div}");
        }
        assert_eq!(bumpf.velocity([1.5, 0.0, 0.0]), [0.0; 3]);
    }

    #[test]
    fn time_profiles_have_consistent_derivatives() {
        let profiles = [
            TimeProfile::Bump { start: 0.1, end: 0.4 },
            TimeProfile::Cutoff { start: 0.05, end: 0.3 },
        ];
        let h = 1e-6;
        for p in profiles {
            p.validate().unwrap();
            for t in [0.12, 0.2, 0.25, 0.29] {
                let fd = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
                let (_, d) = p.value_and_derivative(t);
                assert!((fd - d).abs() < 1e-5 * (1.0 + d.abs()), "{p:?} t={t}");
            }
        }
        assert_eq!(profiles[0].value(0.0), 0.0);
        assert_eq!(profiles[1].value(0.0), 1.0);
        assert_eq!(profiles[1].value(0.5), 0.0);
        assert!(TimeProfile::Bump { start: 1.0, end: 1.0 }.validate().is_err());
    }

    #[test]
    fn periodic_gaussian_derivatives_match_differences() {
        let g = PeriodicGaussian {
            center: [1.0, 2.0, 3.0],
            kappa: 4.0,
            length: 2.0 * PI,
        };
        let x = [1.3, 1.7, 3.4];
        let h = 1e-5;
        let grad = g.gradient(x);
        let hess = g.hessian(x);
        for d in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            assert!(((g.value(xp) - g.value(xm)) / (2.0 * h) - grad[d]).abs() < 1e-7);
            let gp = g.gradient(xp);
            let gm = g.gradient(xm);
            for e in 0..3 {
                assert!(((gp[e] - gm[e]) / (2.0 * h) - hess[e][d]).abs() < 1e-6);
            }
        }
        let trace = hess[0][0] + hess[1][1] + hess[2][2];
        assert!((trace - g.laplacian(x)).abs() < 1e-12);
        let third = g.derivative(x, [3, 0, 0]);
        let mut xp = x;
        let mut xm = x;
        xp[0] += h;
        xm[0] -= h;
        let fd = (g.derivative(xp, [2, 0, 0]) - g.derivative(xm, [2, 0, 0])) / (2.0 * h);
        assert!((fd - third).abs() < 1e-5);
    }

    #[test]
    fn solenoidal_test_field_is_divergence_free() {
        let phi = SolenoidalTestField {
            time: TimeProfile::Cutoff { start: 0.0, end: 1.0 },
            space: PeriodicGaussian {
                center: [3.0, 3.0, 3.0],
                kappa: 3.0,
                length: 2.0 * PI,
            },
            direction: [0.3, -1.0, 0.5],
        };
        for x in [[2.0, 3.5, 4.0], [0.1, 5.0, 2.2]] {
            assert!(phi.spatial_divergence(x).abs() < 1e-12);
        }
    }
}
