//! Geometric diagnostics on graph fields: Gauss-map samples, the angular
//! derivative about the vertical axis, rotation angles between graphs,
//! slope profiles, ridges of `u_y` and translated profiles.

use crate::error::{Error, Result};
use crate::fields::{gradient, normal_from_gradient, Anchor, GridDomain, ScalarField};

/// Relative tolerance of the built-in chain-rule / normal-form check.
const IDENTITY_TOL: f64 = 1e-10;
/// Bisection stops once the angle bracket is this narrow.
const ANGLE_TOL: f64 = 1e-10;

fn require_interior(d: &GridDomain, i: usize, j: usize) -> Result<()> {
    d.check(i, j)?;
    if d.is_boundary(i, j) {
        return Err(Error::InvalidParameter(format!(
            "node ({i}, {j}) is not interior"
        )));
    }
    Ok(())
}

fn require_polar(d: &GridDomain) -> Result<()> {
    if d.x_min() <= 0.0 {
        return Err(Error::PolarChartUndefined { x_min: d.x_min() });
    }
    Ok(())
}

/// Both expressions of `du/dtheta` at an interior node: the chain rule
/// `-y ux + x uy` and the normal form `W (y nu_1 - x nu_2)`.
pub fn angular_derivative_forms(u: &ScalarField, i: usize, j: usize) -> Result<(f64, f64)> {
    let d = u.domain();
    require_polar(d)?;
    require_interior(d, i, j)?;
    let (x, y) = (d.x(i), d.y(j));
    let (ux, uy) = gradient(u, i, j)?;
    let chain = -y * ux + x * uy;
    let nu = normal_from_gradient(ux, uy);
    let w = 1.0 / nu[2];
    let normal = w * (y * nu[0] - x * nu[1]);
    Ok((chain, normal))
}

/// `du/dtheta = -y ux + x uy` at an interior node of a grid in `x > 0`.
pub fn angular_derivative(u: &ScalarField, i: usize, j: usize) -> Result<f64> {
    let (chain, normal) = angular_derivative_forms(u, i, j)?;
    if (chain - normal).abs() > IDENTITY_TOL * (1.0 + chain.abs()) {
        return Err(Error::InvalidParameter(format!(
            "angular derivative forms disagree at ({i}, {j}): {chain:e} vs {normal:e}"
        )));
    }
    Ok(chain)
}

/// Signed angle `omega` (counterclockwise positive) of the rotation about
/// the vertical axis carrying `(p, u1(p))` onto the graph of `u2`, found
/// along the circle of radius `|p|`. Requires `u2` strictly decreasing in
/// the angle along the searched arc.
pub fn omega(u1: &ScalarField, u2: &ScalarField, i: usize, j: usize) -> Result<f64> {
    let d = *u1.domain();
    if *u2.domain() != d {
        return Err(Error::InvalidGrid(
            "omega needs both fields on one grid".into(),
        ));
    }
    require_polar(&d)?;
    d.check(i, j)?;
    let (x, y) = (d.x(i), d.y(j));
    let r = x.hypot(y);
    let theta0 = y.atan2(x);
    let target = u1.at(i, j);
    let phi0 = u2.at(i, j) - target;
    if phi0 == 0.0 {
        return Ok(0.0);
    }
    let phi = |theta: f64| -> Option<f64> {
        u2.sample(r * theta.cos(), r * theta.sin())
            .map(|v| v - target)
    };
    // phi decreases counterclockwise, so a positive gap is closed by turning left
    let dir = if phi0 > 0.0 { 1.0 } else { -1.0 };
    let step = 0.25 * d.hx().min(d.hy()) / r;
    let scale = 1e-13 * (1.0 + target.abs());
    let (mut a, mut fa) = (0.0f64, phi0);
    loop {
        let b = a + step;
        let fb = phi(theta0 + dir * b).ok_or(Error::ArcExitsDomain)?;
        // moving by +dir in the angle must move phi towards -dir
        if dir * (fb - fa) > scale {
            return Err(Error::NotMonotoneOnArc);
        }
        if fb == 0.0 {
            return Ok(dir * b);
        }
        if (fb > 0.0) != (fa > 0.0) {
            let (mut lo, mut hi) = (a, b);
            let mut flo = fa;
            while hi - lo > ANGLE_TOL {
                let mid = 0.5 * (lo + hi);
                let fm = phi(theta0 + dir * mid).ok_or(Error::ArcExitsDomain)?;
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Ok(dir * 0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
        if a > std::f64::consts::PI {
            return Err(Error::ArcExitsDomain);
        }
    }
}

/// Upward unit normals at every `stride`-th interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussMapSample {
    pub normals: Vec<[f64; 3]>,
    pub nodes: Vec<(usize, usize)>,
}

pub fn gauss_map_sample(u: &ScalarField, stride: usize) -> GaussMapSample {
    let d = u.domain();
    let stride = stride.max(1);
    let mut normals = Vec::new();
    let mut nodes = Vec::new();
    for j in (1..d.ny() - 1).step_by(stride) {
        for i in (1..d.nx() - 1).step_by(stride) {
            let (ux, uy) = gradient(u, i, j).expect("interior node");
            normals.push(normal_from_gradient(ux, uy));
            nodes.push((i, j));
        }
    }
    GaussMapSample { normals, nodes }
}

fn great_circle(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt().atan2(dot)
}

/// Symmetric Hausdorff distance between two samples in the great-circle
/// metric of the sphere.
pub fn hausdorff(a: &GaussMapSample, b: &GaussMapSample) -> Result<f64> {
    if a.normals.is_empty() || b.normals.is_empty() {
        return Err(Error::WindowEmpty("Gauss map sample has no points".into()));
    }
    let one_sided = |p: &[[f64; 3]], q: &[[f64; 3]]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| great_circle(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    Ok(one_sided(&a.normals, &b.normals).max(one_sided(&b.normals, &a.normals)))
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Distance from `n` to the shorter great-circle arc from `a` to `b`.
fn arc_distance(n: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let c = cross3(a, b);
    let len = dot3(&c, &c).sqrt();
    let ends = great_circle(n, a).min(great_circle(n, b));
    if len < 1e-15 {
        return ends;
    }
    let c = c.map(|v| v / len);
    let s = dot3(n, &c);
    let p = [n[0] - s * c[0], n[1] - s * c[1], n[2] - s * c[2]];
    if dot3(&cross3(a, &p), &c) >= 0.0
        && dot3(&cross3(&p, b), &c) >= 0.0
        && dot3(&p, &[a[0] + b[0], a[1] + b[1], a[2] + b[2]]) > 0.0
    {
        s.abs().min(1.0).asin()
    } else {
        ends
    }
}

fn triangle_distance(n: &[f64; 3], t: &[[f64; 3]; 3]) -> f64 {
    let [a, b, c] = t;
    let vol = dot3(&cross3(a, b), c);
    let centre = [a[0] + b[0] + c[0], a[1] + b[1] + c[1], a[2] + b[2] + c[2]];
    if vol.abs() > 1e-18 && dot3(n, &centre) > 0.0 {
        let s = [
            dot3(&cross3(a, b), n),
            dot3(&cross3(b, c), n),
            dot3(&cross3(c, a), n),
        ];
        if s.iter().all(|v| v * vol >= 0.0) {
            return 0.0;
        }
    }
    arc_distance(n, a, b)
        .min(arc_distance(n, b, c))
        .min(arc_distance(n, c, a))
}

/// Largest great-circle distance from a point of `sample` to the Gauss
/// image of `v`, the latter taken as the union of the spherical triangles
/// spanned by the normals at the corners of interior grid cells.
pub fn distance_to_image(sample: &GaussMapSample, v: &ScalarField) -> Result<f64> {
    let d = v.domain();
    if d.nx() < 4 || d.ny() < 4 {
        return Err(Error::WindowEmpty("grid has no interior cells".into()));
    }
    let mut tris = Vec::with_capacity(2 * (d.nx() - 3) * (d.ny() - 3));
    let nu = |i, j| -> [f64; 3] {
        let (ux, uy) = gradient(v, i, j).expect("interior node");
        normal_from_gradient(ux, uy)
    };
    for j in 1..d.ny() - 2 {
        for i in 1..d.nx() - 2 {
            let (a, b, c, e) = (nu(i, j), nu(i + 1, j), nu(i + 1, j + 1), nu(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, e]);
        }
    }
    let bounds: Vec<([f64; 3], f64)> = tris
        .iter()
        .map(|t| {
            let m = [
                t[0][0] + t[1][0] + t[2][0],
                t[0][1] + t[1][1] + t[2][1],
                t[0][2] + t[1][2] + t[2][2],
            ];
            let l = dot3(&m, &m).sqrt();
            let m = m.map(|x| x / l);
            (m, t.iter().map(|p| great_circle(&m, p)).fold(0.0, f64::max))
        })
        .collect();
    let mut worst = 0.0f64;
    for n in &sample.normals {
        let mut best = f64::INFINITY;
        for (t, (m, r)) in tris.iter().zip(&bounds) {
            if great_circle(n, m) - r >= best {
                continue;
            }
            best = best.min(triangle_distance(n, t));
            if best == 0.0 {
                break;
            }
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Symmetric Hausdorff distance between the Gauss images of two fields,
/// each side measured from the samples of one field to the interpolated
/// image of the other.
pub fn image_hausdorff(u: &ScalarField, v: &ScalarField, stride: usize) -> Result<f64> {
    let a = distance_to_image(&gauss_map_sample(u, stride), v)?;
    let b = distance_to_image(&gauss_map_sample(v, stride), u)?;
    Ok(a.max(b))
}

fn column_at(d: &GridDomain, x: f64) -> Result<usize> {
    let i = d.nearest_i(x);
    if (d.x(i) - x).abs() > 1e-9 * d.hx() {
        return Err(Error::OutsideDomain(format!(
            "x = {x} is not a grid column"
        )));
    }
    Ok(i)
}

/// `(y, u_y)` down the grid column at `x_probe`, which must be at least two
/// columns from either side.
pub fn left_slope_profile(u: &ScalarField, x_probe: f64) -> Result<Vec<(f64, f64)>> {
    let d = u.domain();
    let i = column_at(d, x_probe)?;
    if i < 2 || i + 3 > d.nx() {
        return Err(Error::OutsideDomain(format!(
            "column x = {x_probe} is within two columns of the edge"
        )));
    }
    (0..d.ny())
        .map(|j| Ok((d.y(j), gradient(u, i, j)?.1)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePoint {
    pub x: f64,
    pub y: f64,
    /// `|u_y|` at `(x, y)` from a centred difference of the interpolated field.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RidgeFlag {
    NoRidge,
    MultipleRidges(usize),
}

/// Roots of `u_y` per column; columns without exactly one sign change are
/// listed in `flagged`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RidgeCurve {
    pub points: Vec<RidgePoint>,
    pub flagged: Vec<(f64, RidgeFlag)>,
}

impl RidgeCurve {
    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// Ridge `Y(x)`: for every column with `x` in `x_range`, the root of the
/// linearly interpolated `u_y` among interior rows with `y` in `y_window`.
pub fn ridge(u: &ScalarField, x_range: (f64, f64), y_window: (f64, f64)) -> RidgeCurve {
    let d = *u.domain();
    let mut out = RidgeCurve::default();
    let rows: Vec<usize> = (1..d.ny() - 1)
        .filter(|&j| (y_window.0..=y_window.1).contains(&d.y(j)))
        .collect();
    for i in 0..d.nx() {
        let x = d.x(i);
        if x < x_range.0 || x > x_range.1 {
            continue;
        }
        let uy: Vec<f64> = rows
            .iter()
            .map(|&j| gradient(u, i, j).expect("node in range").1)
            .collect();
        let mut roots = Vec::new();
        for k in 0..uy.len() {
            if uy[k] == 0.0 {
                roots.push(d.y(rows[k]));
            } else if k + 1 < uy.len() && uy[k + 1] != 0.0 && (uy[k] > 0.0) != (uy[k + 1] > 0.0) {
                let t = uy[k] / (uy[k] - uy[k + 1]);
                let (y0, y1) = (d.y(rows[k]), d.y(rows[k + 1]));
                roots.push(y0 + t * (y1 - y0));
            }
        }
        match roots.len() {
            0 => out.flagged.push((x, RidgeFlag::NoRidge)),
            1 => {
                let y = roots[0];
                let h = d.hy();
                let residual = match (u.sample(x, y + h), u.sample(x, y - h)) {
                    (Some(a), Some(b)) => ((a - b) / (2.0 * h)).abs(),
                    _ => f64::NAN,
                };
                out.points.push(RidgePoint { x, y, residual });
            }
            n => out.flagged.push((x, RidgeFlag::MultipleRidges(n))),
        }
    }
    out
}

/// `w_s(x, y) = u(x + s, y) - u(s, anchor_y)` on the grid of `u` moved by
/// `-s`, anchored at `(0, anchor_y)`.
pub fn translated_profile(u: &ScalarField, s: f64, anchor_y: f64) -> Result<ScalarField> {
    let d = u.domain();
    let base = u.sample(s, anchor_y).ok_or_else(|| {
        Error::WindowEmpty(format!("anchor ({s}, {anchor_y}) lies outside the grid"))
    })?;
    let moved = d.translated(-s, 0.0)?;
    let vals = u.values().iter().map(|v| v - base).collect();
    Ok(ScalarField::new(moved, vals)?.with_anchor(Some(Anchor {
        x: 0.0,
        y: anchor_y,
        value: 0.0,
    })))
}

/// Max over the nodes of `a` inside the grid of `b` of `|a - b|`, with `b`
/// interpolated.
pub fn profile_gap(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    let d = a.domain();
    let mut gap: Option<f64> = None;
    for j in 0..d.ny() {
        for i in 0..d.nx() {
            if let Some(v) = b.sample(d.x(i), d.y(j)) {
                let g = (a.at(i, j) - v).abs();
                gap = Some(gap.map_or(g, |m| m.max(g)));
            }
        }
    }
    gap.ok_or_else(|| Error::WindowEmpty("profiles do not overlap".into()))
}

/// Per column with `x` in `x_range`, the lowest interior row with
/// `y < y_max` where `u_y < 0`.
pub fn descent_witnesses(
    u: &ScalarField,
    x_range: (f64, f64),
    y_max: f64,
) -> Vec<(f64, Option<f64>)> {
    let d = u.domain();
    let mut out = Vec::new();
    for i in 0..d.nx() {
        let x = d.x(i);
        if x < x_range.0 || x > x_range.1 {
            continue;
        }
        let hit = (1..d.ny() - 1)
            .take_while(|&j| d.y(j) < y_max)
            .find(|&j| gradient(u, i, j).expect("node in range").1 < 0.0)
            .map(|j| d.y(j));
        out.push((x, hit));
    }
    out
}
