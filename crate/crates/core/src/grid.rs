//! Uniform cubic grids and the real-space fields sampled on them.
//!
//! Layout is row-major with z fastest: the flat index of node `(i, j, k)`
//! (x, y, z) is `(i * n + j) * n + k`. Node `(i, j, k)` sits at
//! `origin + h * (i, j, k)` and is the center of its quadrature cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

pub(crate) fn norm(p: Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
    origin: Point,
}

impl Grid {
    /// Grid on the box `[0, L)^3`.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        Self::with_origin(n, length, [0.0; 3])
    }

    /// Grid on `[-L/2, L/2)^3`, the usual choice for free-space boxes.
    pub fn centered(n: usize, length: f64) -> Result<Self> {
        Self::with_origin(n, length, [-0.5 * length; 3])
    }

    pub fn with_origin(n: usize, length: f64, origin: Point) -> Result<Self> {
        if n < 4 {
            return Err(Error::invalid("n", format!("need at least 4 points per axis, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("L", format!("box edge must be positive, got {length}")));
        }
        if origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("origin", "must be finite"));
        }
        Ok(Self { n, length, origin })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    /// Number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> Point {
        let h = self.spacing();
        [
            self.origin[0] + h * i as f64,
            self.origin[1] + h * j as f64,
            self.origin[2] + h * k as f64,
        ]
    }

    #[inline]
    pub fn position_of(&self, idx: usize) -> Point {
        let [i, j, k] = self.coords(idx);
        self.position(i, j, k)
    }

    /// Center of the box.
    pub fn center(&self) -> Point {
        let half = 0.5 * self.length;
        [self.origin[0] + half, self.origin[1] + half, self.origin[2] + half]
    }

    /// Periodic minimal image of a displacement.
    pub fn minimal_image(&self, d: Point) -> Point {
        let l = self.length;
        let wrap = |x: f64| x - l * (x / l).round();
        [wrap(d[0]), wrap(d[1]), wrap(d[2])]
    }

    /// Minimal-image displacement from `x0` to node `idx`.
    pub fn displacement(&self, x0: Point, idx: usize) -> Point {
        self.minimal_image(sub(self.position_of(idx), x0))
    }

    /// Index of the node nearest to `p` (periodic).
    pub fn nearest_node(&self, p: Point) -> [usize; 3] {
        let h = self.spacing();
        let n = self.n as i64;
        let mut out = [0usize; 3];
        for d in 0..3 {
            let m = ((p[d] - self.origin[d]) / h).round() as i64;
            out[d] = m.rem_euclid(n) as usize;
        }
        out
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.length == other.length && self.origin == other.origin
    }

    /// Visits every node whose center lies in the closed ball `|x - x0| <= r`
    /// (minimal-image distance). The callback receives the flat index, the
    /// displacement `x - x0` and its length.
    pub fn for_each_in_ball<F>(&self, x0: Point, r: f64, mut visit: F) -> Result<()>
    where
        F: FnMut(usize, Point, f64),
    {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid("radius", format!("must be non-negative, got {r}")));
        }
        let limit = 0.5 * self.length;
        if r > limit {
            return Err(Error::BallTooLarge { radius: r, limit });
        }
        let h = self.spacing();
        let n = self.n as i64;
        let axis = |d: usize| -> Vec<(usize, f64)> {
            let lo = ((x0[d] - r - self.origin[d]) / h).ceil() as i64;
            let mut hi = ((x0[d] + r - self.origin[d]) / h).floor() as i64;
            if hi - lo + 1 > n {
                hi = lo + n - 1;
            }
            (lo..=hi)
                .map(|m| {
                    let offset = self.origin[d] + h * m as f64 - x0[d];
                    (m.rem_euclid(n) as usize, offset)
                })
                .collect()
        };
        let (xs, ys, zs) = (axis(0), axis(1), axis(2));
        let r2 = r * r;
        for &(i, dx) in &xs {
            for &(j, dy) in &ys {
                let dxy = dx * dx + dy * dy;
                if dxy > r2 {
                    continue;
                }
                for &(k, dz) in &zs {
                    let rho2 = dxy + dz * dz;
                    if rho2 <= r2 {
                        visit(self.index(i, j, k), [dx, dy, dz], rho2.sqrt());
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        let field = Self { grid, values };
        field.ensure_finite("scalar field")?;
        Ok(field)
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position_of(idx))).collect();
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { context, index }),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        if !x.grid.same_as(&y.grid) || !x.grid.same_as(&z.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            components: [x, y, z],
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.position_of(idx));
            for (d, c) in out.components.iter_mut().enumerate() {
                c.values[idx] = v[d];
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.components[0].grid
    }

    pub fn component(&self, d: usize) -> &ScalarField {
        &self.components[d]
    }

    pub fn component_mut(&mut self, d: usize) -> &mut ScalarField {
        &mut self.components[d]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [
            self.components[0].values[idx],
            self.components[1].values[idx],
            self.components[2].values[idx],
        ]
    }

    pub fn magnitude_squared(&self) -> ScalarField {
        let grid = *self.grid();
        let values = (0..grid.len())
            .map(|idx| {
                let v = self.at(idx);
                dot(v, v)
            })
            .collect();
        ScalarField::from_raw(grid, values)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            components: self.components.clone().map(|c| c.map(|v| v * s)),
        }
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        self.components.iter().try_for_each(|c| c.ensure_finite(context))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &VectorField) -> bool {
        self.grid().same_as(other.grid())
    }
}
