//! Grid data model and discrete calculus.
//!
//! A [`ScalarField`] is a function sampled on the nodes of a uniform
//! rectangular [`GridDomain`]. Values are stored row-major: node `(i, j)`
//! lives at `j * nx + i`, with `i` running along x.

mod boundary;
mod io;

pub(crate) use boundary::boundary_nodes;
pub use boundary::{BoundarySpec, Edge, Segment, SegmentValue, Trace};
pub use io::{read_field, write_field, FIELD_EXTENSION};

use crate::error::{Error, Result};

/// Uniform rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDomain {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
}

impl GridDomain {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite extent".into()));
        }
        if !(x_min < x_max) || !(y_min < y_max) {
            return Err(Error::InvalidGrid(format!(
                "empty extent [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3x3 nodes, got {nx}x{ny}"
            )));
        }
        Ok(GridDomain {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        })
    }

    /// Grid whose spacing is as close as possible to `h` in both directions.
    pub fn with_spacing(x_min: f64, x_max: f64, y_min: f64, y_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {h}"
            )));
        }
        let nx = ((x_max - x_min) / h).round().max(2.0) as usize + 1;
        let ny = ((y_max - y_min) / h).round().max(2.0) as usize + 1;
        Self::new(x_min, x_max, y_min, y_max, nx, ny)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }
    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    /// x coordinate of column `i`, exact at both ends and antisymmetric on
    /// grids symmetric about zero.
    pub fn x(&self, i: usize) -> f64 {
        lerp_node(self.x_min, self.x_max, i, self.nx)
    }

    /// y coordinate of row `j`.
    pub fn y(&self, j: usize) -> f64 {
        lerp_node(self.y_min, self.y_max, j, self.ny)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.nx || j >= self.ny {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                nx: self.nx,
                ny: self.ny,
            });
        }
        Ok(())
    }

    /// Column whose coordinate is nearest to `x` (clamped to the grid).
    pub fn nearest_i(&self, x: f64) -> usize {
        let t = ((x - self.x_min) / self.hx()).round();
        t.clamp(0.0, (self.nx - 1) as f64) as usize
    }

    pub fn nearest_j(&self, y: f64) -> usize {
        let t = ((y - self.y_min) / self.hy()).round();
        t.clamp(0.0, (self.ny - 1) as f64) as usize
    }

    /// Column index whose coordinate equals `x` exactly, if any.
    pub fn node_i(&self, x: f64) -> Option<usize> {
        let i = self.nearest_i(x);
        (self.x(i) == x).then_some(i)
    }

    pub fn node_j(&self, y: f64) -> Option<usize> {
        let j = self.nearest_j(y);
        (self.y(j) == y).then_some(j)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Same spacing, shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        Self::new(
            self.x_min + dx,
            self.x_max + dx,
            self.y_min + dy,
            self.y_max + dy,
            self.nx,
            self.ny,
        )
    }

    /// Cell coordinates of `(x, y)`: cell index and fractional offset.
    fn locate(&self, x: f64, y: f64) -> Option<(usize, f64, usize, f64)> {
        if !self.contains(x, y) {
            return None;
        }
        let (i, s) = locate_1d(x, self.x_min, self.hx(), self.nx);
        let (j, t) = locate_1d(y, self.y_min, self.hy(), self.ny);
        Some((i, s, j, t))
    }
}

fn lerp_node(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
    let m = (n - 1) as f64;
    ((n - 1 - k) as f64 * lo + k as f64 * hi) / m
}

fn locate_1d(x: f64, lo: f64, h: f64, n: usize) -> (usize, f64) {
    let r = (x - lo) / h;
    let near = r.round();
    // Snap to a node when within roundoff so node samples stay exact.
    if (r - near).abs() < 1e-10 {
        let k = near as usize;
        if k + 1 >= n {
            return (n - 2, 1.0);
        }
        return (k, 0.0);
    }
    let k = (r.floor() as usize).min(n - 2);
    (k, (r - k as f64).clamp(0.0, 1.0))
}

/// Normalization record: the field takes `value` at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// A graph function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    domain: GridDomain,
    values: Vec<f64>,
    anchor: Option<Anchor>,
}

impl ScalarField {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                domain.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite value at offset {k}"
            )));
        }
        Ok(ScalarField {
            domain,
            values,
            anchor: None,
        })
    }

    pub fn zeros(domain: GridDomain) -> Self {
        ScalarField {
            domain,
            values: vec![0.0; domain.len()],
            anchor: None,
        }
    }

    pub fn from_fn(domain: GridDomain, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(domain.len());
        for j in 0..domain.ny {
            let y = domain.y(j);
            for i in 0..domain.nx {
                values.push(f(domain.x(i), y));
            }
        }
        Self::new(domain, values)
    }

    pub fn try_from_fn(
        domain: GridDomain,
        mut f: impl FnMut(f64, f64) -> Result<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(domain.len());
        for j in 0..domain.ny {
            let y = domain.y(j);
            for i in 0..domain.nx {
                values.push(f(domain.x(i), y)?);
            }
        }
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchor(&self) -> Option<Anchor> {
        self.anchor
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.index(i, j)]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.domain.index(i, j);
        self.values[k] = v;
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Adds a constant so that the value at node `(i, j)` becomes `value`,
    /// and records the anchor.
    pub fn anchored_at(mut self, i: usize, j: usize, value: f64) -> Result<Self> {
        self.domain.check(i, j)?;
        let shift = value - self.at(i, j);
        for v in &mut self.values {
            *v += shift;
        }
        self.set(i, j, value);
        self.anchor = Some(Anchor {
            x: self.domain.x(i),
            y: self.domain.y(j),
            value,
        });
        Ok(self)
    }

    pub(crate) fn with_anchor(mut self, anchor: Option<Anchor>) -> Self {
        self.anchor = anchor;
        self
    }

    /// Maximum absolute value over all nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute value over interior nodes.
    pub fn max_abs_interior(&self) -> f64 {
        let d = &self.domain;
        let mut m = 0.0f64;
        for j in 1..d.ny - 1 {
            for i in 1..d.nx - 1 {
                m = m.max(self.at(i, j).abs());
            }
        }
        m
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.domain, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Node-wise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.domain, values)
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let (i, s, j, t) = self.domain.locate(x, y)?;
        let v00 = self.at(i, j);
        if s == 0.0 && t == 0.0 {
            return Some(v00);
        }
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Some((1.0 - t) * ((1.0 - s) * v00 + s * v10) + t * ((1.0 - s) * v01 + s * v11))
    }

    /// Every `stride`-th node in both directions (the last row/column is kept).
    pub fn decimate(&self, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        let pick = |n: usize| -> Vec<usize> {
            let mut v: Vec<usize> = (0..n).step_by(stride).collect();
            if *v.last().unwrap() != n - 1 {
                v.push(n - 1);
            }
            v
        };
        let is = pick(self.domain.nx);
        let js = pick(self.domain.ny);
        let d = &self.domain;
        // Non-uniform tails would break the grid model: require exact division.
        if (d.nx - 1) % stride != 0 || (d.ny - 1) % stride != 0 {
            return Err(Error::InvalidGrid(format!(
                "stride {stride} does not divide {}x{} cells",
                d.nx - 1,
                d.ny - 1
            )));
        }
        let domain = GridDomain::new(d.x_min, d.x_max, d.y_min, d.y_max, is.len(), js.len())?;
        let mut values = Vec::with_capacity(domain.len());
        for &j in &js {
            for &i in &is {
                values.push(self.at(i, j));
            }
        }
        Self::new(domain, values)
    }
}

/// Discrete gradient `(ux, uy)` at node `(i, j)`.
///
/// Second-order central differences in the interior, second-order one-sided
/// differences on boundary rows and columns.
pub fn gradient(u: &ScalarField, i: usize, j: usize) -> Result<(f64, f64)> {
    let d = u.domain();
    d.check(i, j)?;
    let ux = diff_1d(|k| u.at(k, j), i, d.nx, d.hx());
    let uy = diff_1d(|k| u.at(i, k), j, d.ny, d.hy());
    Ok((ux, uy))
}

fn diff_1d(f: impl Fn(usize) -> f64, k: usize, n: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if k + 1 == n {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// Upward unit normal `(-ux, -uy, 1) / sqrt(1 + ux^2 + uy^2)` of the graph.
pub fn upward_normal(u: &ScalarField, i: usize, j: usize) -> Result<[f64; 3]> {
    let (ux, uy) = gradient(u, i, j)?;
    Ok(normal_from_gradient(ux, uy))
}

pub fn normal_from_gradient(ux: f64, uy: f64) -> [f64; 3] {
    let s = (1.0 + ux * ux + uy * uy).sqrt();
    [-ux / s, -uy / s, 1.0 / s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridDomain {
        GridDomain::new(-1.0, 2.0, 0.5, 3.0, n, n + 2).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridDomain::new(1.0, 1.0, 0.0, 1.0, 5, 5).is_err());
        assert!(GridDomain::new(0.0, 1.0, 0.0, 1.0, 2, 5).is_err());
        assert!(GridDomain::new(0.0, f64::NAN, 0.0, 1.0, 5, 5).is_err());
        assert!(ScalarField::new(grid(5), vec![0.0; 3]).is_err());
        let mut vals = vec![0.0; grid(5).len()];
        vals[4] = f64::INFINITY;
        assert!(ScalarField::new(grid(5), vals).is_err());
    }

    #[test]
    fn node_coordinates_round_trip() {
        let d = GridDomain::new(-12.0, 12.0, 0.05, PI - 0.05, 481, 63).unwrap();
        for i in 0..d.nx() {
            assert_eq!(d.node_i(d.x(i)), Some(i));
        }
        for j in 0..d.ny() {
            assert_eq!(d.node_j(d.y(j)), Some(j));
        }
        assert_eq!(d.x(d.nx() - 1), 12.0);
    }

    #[test]
    fn gradient_of_linear_and_constant() {
        let u = ScalarField::from_fn(grid(7), |x, _| x).unwrap();
        for j in 0..u.domain().ny() {
            for i in 0..u.domain().nx() {
                let (ux, uy) = gradient(&u, i, j).unwrap();
                assert!((ux - 1.0).abs() < 1e-14 && uy.abs() < 1e-14);
            }
        }
        let c = ScalarField::from_fn(grid(7), |_, _| 3.5).unwrap();
        assert_eq!(gradient(&c, 3, 3).unwrap(), (0.0, 0.0));
        assert!(matches!(
            gradient(&c, 7, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn gradient_of_grim_reaper() {
        let hy = 1e-3;
        let y0 = PI / 4.0;
        let d = GridDomain::new(0.0, 2.0 * hy, y0 - hy, y0 + hy, 3, 3).unwrap();
        let u = ScalarField::from_fn(d, |_, y| y.cos().ln()).unwrap();
        let (_, uy) = gradient(&u, 1, 1).unwrap();
        assert!((uy + 1.0).abs() < 1e-5, "uy = {uy}");
    }

    #[test]
    fn normals() {
        let c = ScalarField::zeros(grid(5));
        assert_eq!(upward_normal(&c, 2, 2).unwrap(), [0.0, 0.0, 1.0]);
        let u = ScalarField::from_fn(grid(5), |_, y| y).unwrap();
        let n = upward_normal(&u, 2, 2).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((n[0]).abs() < 1e-15 && (n[1] + r).abs() < 1e-12 && (n[2] - r).abs() < 1e-12);

        let h = 1e-4;
        let y0 = PI / 4.0;
        let d = GridDomain::new(0.0, 2.0 * h, y0 - h, y0 + h, 3, 3).unwrap();
        let g = ScalarField::from_fn(d, |_, y| y.cos().ln()).unwrap();
        let n = upward_normal(&g, 1, 1).unwrap();
        assert!((n[1] - r).abs() < 1e-6, "nu.e2 = {}", n[1]);
    }

    #[test]
    fn bilinear_sampling_is_exact_at_nodes_and_on_bilinear_functions() {
        let d = grid(9);
        let u = ScalarField::from_fn(d, |x, y| 1.0 + 2.0 * x - y + 0.5 * x * y).unwrap();
        assert_eq!(u.sample(d.x(3), d.y(4)), Some(u.at(3, 4)));
        let v = u.sample(0.123, 1.777).unwrap();
        assert!((v - (1.0 + 0.246 - 1.777 + 0.5 * 0.123 * 1.777)).abs() < 1e-12);
        assert_eq!(u.sample(5.0, 1.0), None);
    }

    #[test]
    fn anchoring_pins_value() {
        let u = ScalarField::from_fn(grid(5), |x, y| x * y).unwrap();
        let a = u.anchored_at(2, 3, 7.0).unwrap();
        assert_eq!(a.at(2, 3), 7.0);
        assert_eq!(a.anchor().unwrap().value, 7.0);
    }

    #[test]
    fn decimation_keeps_corners() {
        let d = GridDomain::new(0.0, 1.0, 0.0, 1.0, 9, 5).unwrap();
        let u = ScalarField::from_fn(d, |x, y| x + 10.0 * y).unwrap();
        let v = u.decimate(2).unwrap();
        assert_eq!((v.domain().nx(), v.domain().ny()), (5, 3));
        assert_eq!(v.at(4, 2), u.at(8, 4));
        assert!(u.decimate(3).is_err());
    }

    proptest! {
        #[test]
        fn affine_gradient_is_exact(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64,
                                   i in 0usize..9, j in 0usize..11) {
            let u = ScalarField::from_fn(grid(9), |x, y| a * x + b * y + c).unwrap();
            let (ux, uy) = gradient(&u, i, j).unwrap();
            prop_assert!((ux - a).abs() < 1e-12 * (1.0 + a.abs() + b.abs() + c.abs()) * 10.0);
            prop_assert!((uy - b).abs() < 1e-12 * (1.0 + a.abs() + b.abs() + c.abs()) * 10.0);
        }

        #[test]
        fn normal_is_unit_and_upward(ux in -1e6..1e6f64, uy in -1e6..1e6f64) {
            let n = normal_from_gradient(ux, uy);
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert!(n[2] > 0.0);
        }
    }
}
