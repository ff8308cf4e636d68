//! Potentials of power-law densities over balls.
//!
//! For a ball `B_R(x0)` and density `|y - x0|^(-alpha)`, `alpha in [0, 1]`,
//!
//! ```text
//! V(x) = int_{B_R(x0)} |y - x0|^(-alpha) / |x - y| dy
//!      = 4 pi R^(2-a) / (2-a) - 4 pi rho^(2-a) / ((3-a)(2-a))   rho <= R
//!      = 4 pi R^(3-a) / ((3-a) rho)                             rho >  R
//! ```
//!
//! with `rho = |x - x0|`. The closed forms are checked against quadrature
//! built from sphere potentials, and their Hessians against finite
//! differences of that quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{dot, norm, sub, Point};
use crate::quadrature::{adaptive_gk, SphereRule};

pub type Matrix3 = [[f64; 3]; 3];

/// Floor used in relative errors so that vanishing analytic values (the
/// outside trace) do not divide by zero.
pub const EPS_FLOOR: f64 = 1e-14;

const QUAD_TOL: f64 = 1e-13;

/// Analytic value next to an independent numerical one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEvaluation<T> {
    pub analytic: T,
    pub quadrature: T,
    pub rel_error: f64,
}

impl KernelEvaluation<f64> {
    pub fn scalar(analytic: f64, quadrature: f64) -> Self {
        Self {
            analytic,
            quadrature,
            rel_error: (analytic - quadrature).abs() / analytic.abs().max(EPS_FLOOR),
        }
    }
}

impl KernelEvaluation<Matrix3> {
    pub fn matrix(analytic: Matrix3, quadrature: Matrix3) -> Self {
        let mut diff = 0.0;
        let mut norm = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                diff += (analytic[i][j] - quadrature[i][j]).powi(2);
                norm += analytic[i][j].powi(2);
            }
        }
        Self {
            analytic,
            quadrature,
            rel_error: diff.sqrt() / norm.sqrt().max(EPS_FLOOR),
        }
    }
}

pub fn trace(m: &Matrix3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

fn distance(x: Point, x0: Point) -> f64 {
    norm(sub(x, x0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn check_radius(name: &'static str, r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(name, format!("must be positive, got {r}")));
    }
    Ok(())
}

/// `int_{S_r(x0)} dS / |x - y|`: `4 pi r` inside the sphere, `4 pi r^2 / |x - x0|`
/// outside.
pub fn sphere_potential_analytic(x: Point, x0: Point, r: f64) -> f64 {
    let d = distance(x, x0);
    if d <= r {
        4.0 * PI * r
    } else {
        4.0 * PI * r * r / d
    }
}

/// Orthonormal frame whose third vector is `e`.
fn frame(e: Point) -> [Point; 3] {
    let helper = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let a = {
        let p = dot(helper, e);
        let v = [helper[0] - p * e[0], helper[1] - p * e[1], helper[2] - p * e[2]];
        let n = dot(v, v).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    let b = [
        e[1] * a[2] - e[2] * a[1],
        e[2] * a[0] - e[0] * a[2],
        e[0] * a[1] - e[1] * a[0],
    ];
    [a, b, e]
}

/// Product rule (Gauss-Legendre in `cos theta`, uniform azimuth) for the
/// sphere potential, polar axis along `x - x0`. Converges slowly when
/// `|x - x0|` is close to `r`.
pub fn sphere_potential_quadrature(x: Point, x0: Point, r: f64, order: usize) -> f64 {
    let d = sub(x, x0);
    let dn = dot(d, d).sqrt();
    let axis = if dn > 0.0 { [d[0] / dn, d[1] / dn, d[2] / dn] } else { [0.0, 0.0, 1.0] };
    let [a, b, e] = frame(axis);
    let rule = SphereRule::new(order);
    r * r
        * rule.integrate(|w| {
            let y = [
                r * (w[0] * a[0] + w[1] * b[0] + w[2] * e[0]),
                r * (w[0] * a[1] + w[1] * b[1] + w[2] * e[1]),
                r * (w[0] * a[2] + w[1] * b[2] + w[2] * e[2]),
            ];
            let q = sub(d, y);
            1.0 / dot(q, q).sqrt()
        })
}

/// Sphere potential by adaptive quadrature in `t = cos theta`. The
/// substitution `t = 1 - w^2` removes the inverse square root that appears
/// at `t = 1` when `d = r`.
fn sphere_potential_adaptive(d: f64, r: f64) -> f64 {
    if d == 0.0 {
        return 4.0 * PI * r;
    }
    let a = d * d + r * r;
    let c = 2.0 * d * r;
    let f = |w: f64| {
        let t = 1.0 - w * w;
        let q = (a - c * t).max(0.0);
        // The w -> 0 limit at d = r is 2 / sqrt(c); keep it finite.
        if q == 0.0 {
            2.0 / c.sqrt()
        } else {
            2.0 * w / q.sqrt()
        }
    };
    2.0 * PI * r * r * adaptive_gk(f, 0.0, 2f64.sqrt(), 0.0, QUAD_TOL)
}

/// Closed form of the ball potential with weight `|y - x0|^(-alpha)`.
pub fn potential_analytic(x: Point, x0: Point, big_r: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_radius("R", big_r)?;
    let rho = distance(x, x0);
    Ok(if rho <= big_r {
        4.0 * PI * big_r.powf(2.0 - alpha) / (2.0 - alpha)
            - 4.0 * PI * rho.powf(2.0 - alpha) / ((3.0 - alpha) * (2.0 - alpha))
    } else {
        4.0 * PI * big_r.powf(3.0 - alpha) / ((3.0 - alpha) * rho)
    })
}

/// `int_0^R r^(-alpha) (int_{S_r(x0)} dS / |x - y|) dr` by nested adaptive
/// quadrature. The radial integral is split at `|x - x0|`, where the sphere
/// potential has a kink, and uses `r = s^(1/(1 - alpha))` so the weight
/// becomes constant.
pub fn potential_quadrature(x: Point, x0: Point, big_r: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_radius("R", big_r)?;
    let d = distance(x, x0);
    let radial = |a: f64, b: f64| -> f64 {
        if alpha == 0.0 || alpha == 1.0 {
            adaptive_gk(
                |r| r.powf(-alpha) * sphere_potential_adaptive(d, r),
                a,
                b,
                0.0,
                QUAD_TOL,
            )
        } else {
            let k = 1.0 - alpha;
            let inner = adaptive_gk(
                |s| sphere_potential_adaptive(d, s.powf(1.0 / k)),
                a.powf(k),
                b.powf(k),
                0.0,
                QUAD_TOL,
            );
            inner / k
        }
    };
    if d > 0.0 && d < big_r {
        Ok(radial(0.0, d) + radial(d, big_r))
    } else {
        Ok(radial(0.0, big_r))
    }
}

/// Hessian of `|x - x0|^beta`:
/// `beta (beta - 2) rho^(beta - 4) (x - x0)(x - x0)^T + beta rho^(beta - 2) I`.
pub fn hessian_power_law(x: Point, x0: Point, beta: f64) -> Result<Matrix3> {
    let d = sub(x, x0);
    let rho2 = dot(d, d);
    if rho2 == 0.0 {
        return Err(Error::invalid("x", "power-law Hessian is singular at x = x0"));
    }
    let rho = rho2.sqrt();
    let a = beta * (beta - 2.0) * rho.powf(beta - 4.0);
    let c = beta * rho.powf(beta - 2.0);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            m[i][j] = a * d[i] * d[j] + if i == j { c } else { 0.0 };
            m[j][i] = m[i][j];
        }
    }
    Ok(m)
}

/// Closed-form Hessian of the ball potential: inside,
/// `(4 pi / (3 - alpha)) rho^(-alpha) (-I + alpha e e^T)`; outside,
/// `(4 pi R^(3 - alpha) / (3 - alpha)) rho^(-3) (-I + 3 e e^T)`. The sphere
/// `rho = R` belongs to the inside branch.
pub fn hessian_potential_analytic(x: Point, x0: Point, big_r: f64, alpha: f64) -> Result<Matrix3> {
    check_alpha(alpha)?;
    check_radius("R", big_r)?;
    let d = sub(x, x0);
    let rho = dot(d, d).sqrt();
    let (scale, stretch) = if rho <= big_r {
        if rho == 0.0 && alpha > 0.0 {
            return Err(Error::invalid("x", "inside Hessian is singular at x = x0 for alpha > 0"));
        }
        let s = if rho == 0.0 { 1.0 } else { rho.powf(-alpha) };
        (4.0 * PI / (3.0 - alpha) * s, alpha)
    } else {
        (4.0 * PI * big_r.powf(3.0 - alpha) / ((3.0 - alpha) * rho.powi(3)), 3.0)
    };
    let e = if rho > 0.0 { [d[0] / rho, d[1] / rho, d[2] / rho] } else { [0.0; 3] };
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            m[i][j] = scale * (stretch * e[i] * e[j] - if i == j { 1.0 } else { 0.0 });
            m[j][i] = m[i][j];
        }
    }
    Ok(m)
}

/// Second-order central differences of [`potential_quadrature`] at steps
/// `h_fd` and `2 h_fd`, Richardson-combined, compared with the closed-form
/// Hessian. The wider stencil must stay on one side of the sphere.
pub fn hessian_fd_check(x: Point, x0: Point, big_r: f64, alpha: f64, h_fd: f64) -> Result<KernelEvaluation<Matrix3>> {
    check_radius("h_fd", h_fd)?;
    let analytic = hessian_potential_analytic(x, x0, big_r, alpha)?;
    let reach = 2.0 * 2f64.sqrt() * h_fd;
    let distance = (distance(x, x0) - big_r).abs();
    if distance <= reach {
        return Err(Error::StencilCrossing { distance, reach });
    }
    let v = |p: Point| potential_quadrature(p, x0, big_r, alpha);
    let shifted = |di: [f64; 3]| [x[0] + di[0], x[1] + di[1], x[2] + di[2]];
    let center = v(x)?;
    let fd = |h: f64| -> Result<Matrix3> {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = h;
            let plus = v(shifted(e))?;
            let minus = v(shifted([-e[0], -e[1], -e[2]]))?;
            m[i][i] = (plus - 2.0 * center + minus) / (h * h);
            for j in (i + 1)..3 {
                let mut pp = [0.0; 3];
                pp[i] = h;
                pp[j] = h;
                let mut pm = pp;
                pm[j] = -h;
                let mut mp = pp;
                mp[i] = -h;
                let mut mm = pm;
                mm[i] = -h;
                let val = (v(shifted(pp))? - v(shifted(pm))? - v(shifted(mp))? + v(shifted(mm))?) / (4.0 * h * h);
                m[i][j] = val;
                m[j][i] = val;
            }
        }
        Ok(m)
    };
    let fine = fd(h_fd)?;
    let coarse = fd(2.0 * h_fd)?;
    let mut quadrature = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            quadrature[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    Ok(KernelEvaluation::matrix(analytic, quadrature))
}

/// One point of a kernel verification sweep.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub ratio: f64,
    pub potential_rel_error: f64,
    pub hessian_rel_error: f64,
    /// `|trace(FD Hessian) - expected| / max(|expected|, 4 pi R^(-alpha))`,
    /// with expected `-4 pi rho^(-alpha)` inside and 0 outside.
    pub trace_error: f64,
}

/// Direction used to place evaluation points; generic so that no Hessian
/// entry vanishes by symmetry.
pub const SWEEP_DIRECTION: Point = [2.0 / 7.0, 3.0 / 7.0, 6.0 / 7.0];

pub const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_RATIOS: [f64; 5] = [0.2, 0.5, 0.8, 1.5, 3.0];

/// Potential and Hessian checks over `alphas x ratios`, `ratio = |x - x0| / R`,
/// with `R = 1`, `x0 = 0` and `h_fd = 1e-3`. Ratios within 10% of 1 are
/// rejected.
pub fn kernel_sweep(alphas: &[f64], ratios: &[f64]) -> Result<Vec<SweepRow>> {
    let x0 = [0.0; 3];
    let mut rows = Vec::with_capacity(alphas.len() * ratios.len());
    for &alpha in alphas {
        check_alpha(alpha)?;
        for &ratio in ratios {
            if !(ratio > 0.0) || (ratio - 1.0).abs() < 0.1 {
                return Err(Error::invalid(
                    "ratio",
                    format!("{ratio} is not positive or lies in the annulus (0.9, 1.1)"),
                ));
            }
            let x = SWEEP_DIRECTION.map(|c| c * ratio);
            let pot = KernelEvaluation::scalar(
                potential_analytic(x, x0, 1.0, alpha)?,
                potential_quadrature(x, x0, 1.0, alpha)?,
            );
            let hess = hessian_fd_check(x, x0, 1.0, alpha, 1e-3)?;
            let (expected, scale) = if ratio <= 1.0 {
                let e = -4.0 * PI * ratio.powf(-alpha);
                (e, e.abs())
            } else {
                (0.0, 4.0 * PI)
            };
            rows.push(SweepRow {
                alpha,
                ratio,
                potential_rel_error: pot.rel_error,
                hessian_rel_error: hess.rel_error,
                trace_error: (trace(&hess.quadrature) - expected).abs() / scale,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_potential_branches() {
        let x0 = [0.0; 3];
        assert_relative_eq!(sphere_potential_analytic([0.5, 0.0, 0.0], x0, 1.0), 4.0 * PI);
        assert_relative_eq!(sphere_potential_analytic([0.0, 2.0, 0.0], x0, 1.0), 2.0 * PI);
        let on = sphere_potential_analytic([0.0, 0.0, 1.0], x0, 1.0);
        let just_out = 4.0 * PI / 1.0;
        assert_eq!(on, just_out);
    }

    #[test]
    fn sphere_quadrature_matches_at_order_32() {
        let x0 = [0.3, -0.2, 0.1];
        for d in [0.25, 0.5, 2.0, 4.0] {
            let x = [x0[0] + d * 0.6, x0[1], x0[2] + d * 0.8];
            let q = sphere_potential_quadrature(x, x0, 1.0, 32);
            let a = sphere_potential_analytic(x, x0, 1.0);
            assert!((q - a).abs() <= 1e-8 * a, "d {d}: {q} vs {a}");
        }
        let q = sphere_potential_quadrature(x0, x0, 2.0, 4);
        assert_relative_eq!(q, 8.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_sphere_potential_handles_the_sphere_itself() {
        for (d, r) in [(0.3, 1.0), (1.0, 1.0), (2.0, 0.7)] {
            let exact = sphere_potential_analytic([d, 0.0, 0.0], [0.0; 3], r);
            let q = sphere_potential_adaptive(d, r);
            assert!((q - exact).abs() < 1e-11 * exact, "{d} {r}: {q} {exact}");
        }
    }

    #[test]
    fn potential_closed_forms() {
        let x0 = [0.0; 3];
        assert_relative_eq!(potential_analytic(x0, x0, 1.0, 0.0).unwrap(), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(
            potential_analytic([2.0, 0.0, 0.0], x0, 1.0, 1.0).unwrap(),
            PI,
            max_relative = 1e-15
        );
        for (x, alpha) in [([0.3, 0.0, 0.0], 0.5), (x0, 0.0), ([2.0, 0.0, 0.0], 1.0), ([0.0, 0.5, 0.5], 0.75)] {
            let a = potential_analytic(x, x0, 1.0, alpha).unwrap();
            let q = potential_quadrature(x, x0, 1.0, alpha).unwrap();
            assert!((a - q).abs() <= 1e-8 * a, "{x:?} {alpha}: {a} vs {q}");
        }
        assert!(potential_quadrature(x0, x0, 1.0, 1.5).is_err());
    }

    #[test]
    fn analytic_hessian_examples() {
        let x0 = [0.0; 3];
        let m = hessian_potential_analytic([0.2, 0.1, 0.0], x0, 1.0, 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { -4.0 * PI / 3.0 } else { 0.0 };
                assert_relative_eq!(m[i][j], e, epsilon = 1e-15);
            }
        }
        let m = hessian_potential_analytic([0.0, 0.0, 2.0], x0, 1.0, 0.3).unwrap();
        let c = 4.0 * PI / 2.7 / 8.0;
        assert_relative_eq!(m[2][2], 2.0 * c, max_relative = 1e-14);
        assert_relative_eq!(m[0][0], -c, max_relative = 1e-14);
        assert!(trace(&m).abs() < 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        assert!(hessian_potential_analytic(x0, x0, 1.0, 0.5).is_err());
        assert!(hessian_potential_analytic(x0, x0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn power_law_hessian_reproduces_both_branches() {
        let x0 = [0.1, 0.0, -0.1];
        assert_eq!(
            hessian_power_law([1.0, 2.0, 3.0], x0, 2.0).unwrap(),
            [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]
        );
        let m = hessian_power_law([0.1, 0.0, 0.9], x0, -1.0).unwrap();
        let e = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[i][j], e[i][j], epsilon = 1e-14);
            }
        }
        let alpha = 0.5;
        let x = [0.1 + 0.4 * 0.6, 0.4 * 0.8, -0.1];
        let chain = hessian_power_law(x, x0, 2.0 - alpha).unwrap();
        let inside = hessian_potential_analytic(x, x0, 1.0, alpha).unwrap();
        let k = -4.0 * PI / ((3.0 - alpha) * (2.0 - alpha));
        let x = [0.1, 0.0, -0.1 + 2.5];
        let outside_chain = hessian_power_law(x, x0, -1.0).unwrap();
        let outside = hessian_potential_analytic(x, x0, 1.0, alpha).unwrap();
        let ko = 4.0 * PI / (3.0 - alpha);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(k * chain[i][j], inside[i][j], epsilon = 1e-13);
                assert_relative_eq!(ko * outside_chain[i][j], outside[i][j], epsilon = 1e-13);
            }
        }
        assert!(hessian_power_law(x0, x0, 1.0).is_err());
    }

    #[test]
    fn fd_check_inside_and_outside() {
        let x0 = [0.0; 3];
        let inside = hessian_fd_check([0.1, 0.2, -0.1], x0, 1.0, 0.0, 1e-3).unwrap();
        assert!(inside.rel_error < 1e-4, "{}", inside.rel_error);
        let outside = hessian_fd_check([0.0, 0.0, 2.0], x0, 1.0, 1.0, 1e-3).unwrap();
        assert!(outside.rel_error < 1e-4, "{}", outside.rel_error);
        let err = hessian_fd_check([0.0, 0.0, 0.999], x0, 1.0, 0.5, 1e-3).unwrap_err();
        assert!(matches!(err, Error::StencilCrossing { .. }));
    }
}
