//! Triangle meshes of graph pieces and their images under rotations by
//! `pi` about vertical lines.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::ScalarField;

/// Vertices closer than this are the same point.
pub const WELD_TOL: f64 = 1e-9;
/// Triangles with smaller area are degenerate.
pub const MIN_AREA: f64 = 1e-14;

/// Where a vertex came from: the piece it was created in and the word of
/// line reflections applied to the fundamental piece (`Z` for the z-axis,
/// `L` for the other line).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub piece: usize,
    pub word: String,
}

/// A vertical boundary line of a piece and the mesh vertices on it,
/// ordered by height.
#[derive(Debug, Clone, PartialEq)]
pub struct Seam {
    pub foot: [f64; 2],
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub provenance: Vec<Provenance>,
    pub seams: Vec<Seam>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    dot(sub(a, b), sub(a, b)).sqrt()
}

impl SurfaceMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|k| self.vertices[k]);
        let n = cross(sub(b, a), sub(c, a));
        0.5 * dot(n, n).sqrt()
    }

    /// Checks index ranges and triangle areas.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.provenance.len() != n {
            return Err(Error::InvalidParameter(
                "provenance does not cover every vertex".into(),
            ));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&k| k >= n) {
                return Err(Error::InvalidParameter(format!(
                    "triangle {t} has an index out of range"
                )));
            }
            let area = self.triangle_area(t);
            if !(area >= MIN_AREA) {
                return Err(Error::InvalidParameter(format!(
                    "triangle {t} is degenerate (area {area:e})"
                )));
            }
        }
        Ok(())
    }

    /// Number of distinct `piece` tags.
    pub fn pieces(&self) -> usize {
        self.provenance
            .iter()
            .map(|p| p.piece + 1)
            .max()
            .unwrap_or(0)
    }

    fn map_points(&self, f: impl Fn([f64; 3]) -> [f64; 3], label: char) -> SurfaceMesh {
        let foot = |p: [f64; 2]| {
            let q = f([p[0], p[1], 0.0]);
            [q[0], q[1]]
        };
        SurfaceMesh {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            provenance: self
                .provenance
                .iter()
                .map(|p| Provenance {
                    piece: p.piece,
                    word: format!("{label}{}", p.word),
                })
                .collect(),
            seams: self
                .seams
                .iter()
                .map(|s| Seam {
                    foot: foot(s.foot),
                    vertices: s.vertices.clone(),
                })
                .collect(),
        }
    }
}

/// Two triangles per grid cell, vertex `k` at node `k` of the grid.
pub fn graph_to_mesh(u: &ScalarField) -> SurfaceMesh {
    let d = u.domain();
    let (nx, ny) = (d.nx(), d.ny());
    let mut vertices = Vec::with_capacity(d.len());
    for j in 0..ny {
        for i in 0..nx {
            vertices.push([d.x(i), d.y(j), u.at(i, j)]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = d.index(i, j);
            let (b, c, e) = (a + 1, a + nx + 1, a + nx);
            triangles.push([a, b, c]);
            triangles.push([a, c, e]);
        }
    }
    let provenance = vec![
        Provenance {
            piece: 0,
            word: String::new()
        };
        vertices.len()
    ];
    SurfaceMesh {
        vertices,
        triangles,
        provenance,
        seams: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowEdge {
    Bottom,
    Top,
}

/// A vertical line standing in for a jump of the boundary data along the
/// bottom or top row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamSpec {
    pub edge: RowEdge,
    pub jump_x: f64,
    pub foot: [f64; 2],
    /// Number of segments of the seam polyline.
    pub levels: usize,
}

/// Graph mesh closed off by seam strips: the row nodes bracketing each jump
/// are zipped to a vertical polyline at the foot spanning their heights.
pub fn graph_piece(u: &ScalarField, seams: &[SeamSpec]) -> Result<SurfaceMesh> {
    let d = *u.domain();
    let mut m = graph_to_mesh(u);
    for spec in seams {
        if spec.levels == 0 {
            return Err(Error::InvalidParameter(
                "a seam needs at least one level".into(),
            ));
        }
        if !(d.x_min() < spec.jump_x && spec.jump_x < d.x_max()) {
            return Err(Error::InvalidParameter(format!(
                "seam jump x = {} is off the grid",
                spec.jump_x
            )));
        }
        let j = match spec.edge {
            RowEdge::Bottom => 0,
            RowEdge::Top => d.ny() - 1,
        };
        if (spec.foot[1] - d.y(j)).abs() < WELD_TOL {
            return Err(Error::InvalidParameter(
                "seam foot lies on the boundary row".into(),
            ));
        }
        let lo = (0..d.nx())
            .rev()
            .find(|&i| d.x(i) < spec.jump_x)
            .expect("jump inside grid");
        let hi = (0..d.nx())
            .find(|&i| d.x(i) > spec.jump_x)
            .expect("jump inside grid");
        // the grid walks the bottom row left to right and the top row right to left
        let mut row: Vec<usize> = (lo..=hi).map(|i| d.index(i, j)).collect();
        if spec.edge == RowEdge::Top {
            row.reverse();
        }
        let z0 = m.vertices[row[0]][2];
        let z1 = m.vertices[*row.last().unwrap()][2];
        if z0 == z1 {
            return Err(Error::InvalidParameter(format!(
                "no jump in the boundary row at x = {}",
                spec.jump_x
            )));
        }
        let levels = spec.levels;
        let base = m.vertices.len();
        let seam: Vec<usize> = (0..=levels).map(|k| base + k).collect();
        for k in 0..=levels {
            let t = k as f64 / levels as f64;
            m.vertices
                .push([spec.foot[0], spec.foot[1], (1.0 - t) * z0 + t * z1]);
            m.provenance.push(Provenance {
                piece: 0,
                word: String::new(),
            });
        }
        let progress = |z: f64| ((z - z0) / (z1 - z0)).clamp(0.0, 1.0);
        let (mut a, mut b) = (0, 0);
        while a + 1 < row.len() || b < levels {
            let advance_row = b == levels
                || (a + 1 < row.len()
                    && progress(m.vertices[row[a + 1]][2]) <= (b + 1) as f64 / levels as f64);
            if advance_row {
                m.triangles.push([row[a + 1], row[a], seam[b]]);
                a += 1;
            } else {
                m.triangles.push([row[a], seam[b], seam[b + 1]]);
                b += 1;
            }
        }
        m.seams.push(Seam {
            foot: spec.foot,
            vertices: seam,
        });
    }
    m.validate()?;
    Ok(m)
}

/// Half pitchfork: the bottom jump at the origin closed by the z-axis.
pub fn pitchfork_piece(u: &ScalarField, levels: usize) -> Result<SurfaceMesh> {
    graph_piece(
        u,
        &[SeamSpec {
            edge: RowEdge::Bottom,
            jump_x: 0.0,
            foot: [0.0, 0.0],
            levels,
        }],
    )
}

/// Helicoid fundamental piece over `R x (0, w)`: the z-axis seam first,
/// then the line through `(a, w)`.
pub fn helicoid_piece(u: &ScalarField, a: f64, w: f64, levels: usize) -> Result<SurfaceMesh> {
    graph_piece(
        u,
        &[
            SeamSpec {
                edge: RowEdge::Bottom,
                jump_x: 0.0,
                foot: [0.0, 0.0],
                levels,
            },
            SeamSpec {
                edge: RowEdge::Top,
                jump_x: a,
                foot: [a, w],
                levels,
            },
        ],
    )
}

/// Image under `(x, y, z) -> (-x, -y, z)`, with triangle winding flipped so
/// the union with the original is consistently oriented.
pub fn rotate_pi_about_z(m: &SurfaceMesh) -> SurfaceMesh {
    m.map_points(|[x, y, z]| [-x, -y, z], 'Z')
}

/// Image under `(x, y, z) -> (2a - x, 2b - y, z)`, the rotation by `pi`
/// about the vertical line through `(a, b)`; winding flipped.
pub fn reflect_about_vertical_line(m: &SurfaceMesh, a: f64, b: f64) -> SurfaceMesh {
    m.map_points(|[x, y, z]| [2.0 * a - x, 2.0 * b - y, z], 'L')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyFamily {
    Pitchfork,
    Helicoid,
}

fn same_foot(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).hypot(a[1] - b[1]) <= WELD_TOL
}

/// Appends `copy`, welding the vertices of its seam at `foot` onto the
/// matching seam already in `mesh`.
fn weld_in(mesh: &mut SurfaceMesh, copy: SurfaceMesh, foot: [f64; 2]) -> Result<()> {
    let own = mesh
        .seams
        .iter()
        .position(|s| same_foot(s.foot, foot))
        .ok_or_else(|| Error::InvalidParameter(format!("no seam at ({}, {})", foot[0], foot[1])))?;
    let theirs = copy
        .seams
        .iter()
        .position(|s| same_foot(s.foot, foot))
        .ok_or_else(|| {
            Error::InvalidParameter(format!("copy has no seam at ({}, {})", foot[0], foot[1]))
        })?;
    let targets = &mesh.seams[own].vertices;
    let mut remap: Vec<Option<usize>> = vec![None; copy.vertices.len()];
    let mut max_gap = 0.0f64;
    for &v in &copy.seams[theirs].vertices {
        let p = copy.vertices[v];
        let (best, gap) = targets
            .iter()
            .map(|&t| (t, dist(mesh.vertices[t], p)))
            .fold((usize::MAX, f64::INFINITY), |acc, x| {
                if x.1 < acc.1 {
                    x
                } else {
                    acc
                }
            });
        max_gap = max_gap.max(gap);
        remap[v] = Some(best);
    }
    if max_gap > WELD_TOL || targets.len() != copy.seams[theirs].vertices.len() {
        return Err(Error::SeamMismatch { max_gap });
    }
    let mut index = Vec::with_capacity(copy.vertices.len());
    for (v, r) in remap.iter().enumerate() {
        index.push(match r {
            Some(t) => *t,
            None => {
                mesh.vertices.push(copy.vertices[v]);
                mesh.provenance.push(copy.provenance[v].clone());
                mesh.vertices.len() - 1
            }
        });
    }
    mesh.triangles
        .extend(copy.triangles.iter().map(|t| t.map(|k| index[k])));
    for (s, seam) in copy.seams.iter().enumerate() {
        if s != theirs {
            mesh.seams.push(Seam {
                foot: seam.foot,
                vertices: seam.vertices.iter().map(|&k| index[k]).collect(),
            });
        }
    }
    Ok(())
}

fn retag(m: &mut SurfaceMesh, piece: usize, word: &str) {
    for p in &mut m.provenance {
        p.piece = piece;
        p.word = word.to_string();
    }
}

/// Pitchfork: the piece and its rotation about the z-axis (`copies` must
/// be 1). Helicoid: the piece followed by `copies` successive reflections,
/// each about the free line of the previous copy, starting with the
/// second seam of the piece.
pub fn assemble(family: AssemblyFamily, piece: &SurfaceMesh, copies: usize) -> Result<SurfaceMesh> {
    if copies == 0 {
        return Err(Error::InvalidParameter(
            "assembly needs at least one copy".into(),
        ));
    }
    let mut base = piece.clone();
    retag(&mut base, 0, "");
    match family {
        AssemblyFamily::Pitchfork => {
            if copies != 1 {
                return Err(Error::InvalidParameter(
                    "a pitchfork has exactly one rotated copy".into(),
                ));
            }
            let mut rot = rotate_pi_about_z(&base);
            retag(&mut rot, 1, "Z");
            let mut out = base;
            weld_in(&mut out, rot, [0.0, 0.0])?;
            out.validate()?;
            Ok(out)
        }
        AssemblyFamily::Helicoid => {
            if piece.seams.len() != 2 {
                return Err(Error::InvalidParameter(
                    "a helicoid piece needs exactly two seams".into(),
                ));
            }
            let mut shared = base.seams[0].foot;
            let mut free = base.seams[1].foot;
            let mut prev = base.clone();
            let mut out = base;
            let mut word = String::new();
            for n in 1..=copies {
                word.push(if n % 2 == 1 { 'L' } else { 'Z' });
                let mut next = reflect_about_vertical_line(&prev, free[0], free[1]);
                retag(&mut next, n, &word);
                let new_free = [2.0 * free[0] - shared[0], 2.0 * free[1] - shared[1]];
                weld_in(&mut out, next.clone(), free)?;
                shared = free;
                free = new_free;
                prev = next;
            }
            out.validate()?;
            Ok(out)
        }
    }
}

/// `T = R_L o R_Z`: the horizontal translation by twice the vector from the
/// z-axis foot to the foot of `L`.
pub fn helicoid_translation(piece: &SurfaceMesh) -> Result<[f64; 2]> {
    if piece.seams.len() != 2 {
        return Err(Error::InvalidParameter(
            "a helicoid piece needs exactly two seams".into(),
        ));
    }
    let (z, l) = (piece.seams[0].foot, piece.seams[1].foot);
    Ok([2.0 * (l[0] - z[0]), 2.0 * (l[1] - z[1])])
}

/// Hash of points on a lattice of spacing `cell`.
pub struct PointIndex<'a> {
    points: &'a [[f64; 3]],
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> PointIndex<'a> {
    pub fn new(points: &'a [[f64; 3]], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (k, &p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(k);
        }
        PointIndex {
            points,
            cell,
            buckets,
        }
    }

    fn key(p: [f64; 3], cell: f64) -> [i64; 3] {
        p.map(|c| (c / cell).floor() as i64)
    }

    /// Closest indexed point within one cell of `p`.
    pub fn nearest(&self, p: [f64; 3]) -> Option<(usize, f64)> {
        let k = Self::key(p, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(list) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) else {
                        continue;
                    };
                    for &q in list {
                        let d = dist(self.points[q], p);
                        if d <= self.cell && best.map_or(true, |b| d < b.1) {
                            best = Some((q, d));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Largest distance from a point of `from` to the nearest point of `to`,
/// or infinity if some point has no partner within `tol`.
pub fn point_set_gap(from: &[[f64; 3]], to: &[[f64; 3]], tol: f64) -> f64 {
    let index = PointIndex::new(to, tol);
    from.iter()
        .map(|&p| index.nearest(p).map_or(f64::INFINITY, |(_, d)| d))
        .fold(0.0, f64::max)
}

/// Pairs of distinct vertices closer than `tol`.
pub fn duplicate_vertices(m: &SurfaceMesh, tol: f64) -> Vec<(usize, usize)> {
    let index = PointIndex::new(&m.vertices, tol);
    let mut out = Vec::new();
    for (a, &p) in m.vertices.iter().enumerate() {
        let k = PointIndex::key(p, tol);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(list) = index.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) else {
                        continue;
                    };
                    out.extend(
                        list.iter()
                            .filter(|&&b| b > a && dist(m.vertices[b], p) <= tol)
                            .map(|&b| (a, b)),
                    );
                }
            }
        }
    }
    out.sort_unstable();
    out
}

fn segment_hits_triangle(p: [f64; 3], q: [f64; 3], tri: [[f64; 3]; 3]) -> bool {
    // Moller-Trumbore on the segment, strict inside
    let eps = 1e-12;
    let dir = sub(q, p);
    let e1 = sub(tri[1], tri[0]);
    let e2 = sub(tri[2], tri[0]);
    let h = cross(dir, e2);
    let det = dot(e1, h);
    if det.abs() < eps * (dot(e1, e1) * dot(dir, dir)).sqrt().max(1e-300) {
        return false;
    }
    let s = sub(p, tri[0]);
    let u = dot(s, h) / det;
    if !(eps..=1.0 - eps).contains(&u) {
        return false;
    }
    let qv = cross(s, e1);
    let v = dot(dir, qv) / det;
    if v < eps || u + v > 1.0 - eps {
        return false;
    }
    let t = dot(e2, qv) / det;
    t > eps && t < 1.0 - eps
}

/// Pairs of triangles without a shared vertex that intersect, by brute
/// force with bounding-box rejection.
pub fn self_intersections(m: &SurfaceMesh) -> Vec<(usize, usize)> {
    let tris: Vec<[[f64; 3]; 3]> = m
        .triangles
        .iter()
        .map(|t| t.map(|k| m.vertices[k]))
        .collect();
    let boxes: Vec<([f64; 3], [f64; 3])> = tris
        .iter()
        .map(|t| {
            let mut lo = t[0];
            let mut hi = t[0];
            for p in &t[1..] {
                for c in 0..3 {
                    lo[c] = lo[c].min(p[c]);
                    hi[c] = hi[c].max(p[c]);
                }
            }
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    for a in 0..tris.len() {
        for b in a + 1..tris.len() {
            let (la, ha) = boxes[a];
            let (lb, hb) = boxes[b];
            if (0..3).any(|c| ha[c] < lb[c] || hb[c] < la[c]) {
                continue;
            }
            let (ta, tb) = (m.triangles[a], m.triangles[b]);
            if ta.iter().any(|k| tb.contains(k)) {
                continue;
            }
            let edges = |t: &[[f64; 3]; 3]| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])];
            let hit = edges(&tris[a])
                .iter()
                .any(|&(p, q)| segment_hits_triangle(p, q, tris[b]))
                || edges(&tris[b])
                    .iter()
                    .any(|&(p, q)| segment_hits_triangle(p, q, tris[a]));
            if hit {
                out.push((a, b));
            }
        }
    }
    out
}

/// ASCII OBJ: `v` lines in vertex order, then 1-based `f` lines.
pub fn to_obj(m: &SurfaceMesh) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "# vertices {} triangles {} pieces {}",
        m.vertices.len(),
        m.triangles.len(),
        m.pieces()
    )
    .unwrap();
    for v in &m.vertices {
        writeln!(s, "v {:?} {:?} {:?}", v[0], v[1], v[2]).unwrap();
    }
    for t in &m.triangles {
        writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    s
}

pub fn write_obj(path: impl AsRef<Path>, m: &SurfaceMesh) -> Result<()> {
    std::fs::write(path, to_obj(m))?;
    Ok(())
}
