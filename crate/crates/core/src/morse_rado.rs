//! Zero sets of difference fields as planar networks.
//!
//! Marching squares with linear interpolation on cell edges. Nodes whose
//! value equals the iso level exactly are nudged by `+1e-13` and become
//! vertices of the zero set themselves, so level lines running through grid
//! nodes (diagonals of `x^2 - y^2`, the axis of a linear field) are followed
//! exactly. Strands of the level set that pass within `hx + hy` of each
//! other away from the boundary touch at grid resolution and are merged into
//! one junction; saddle cells are split by the sign of the cell centre.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::{gradient, GridDomain, ScalarField};

const NUDGE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndClass {
    LeftInfinity,
    RightInfinity,
    BoundaryPoint {
        x: f64,
        y: f64,
    },
    /// Dangling end away from the grid boundary.
    Interior {
        x: f64,
        y: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexKind {
    /// Even valence, at least 4.
    Junction,
    End(EndClass),
    /// Valence 2: anchors a closed loop or a contact of two strand ends.
    Regular,
    /// Merged cluster whose valence came out odd; kept for connectivity only.
    OddValence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub valence: usize,
    pub kind: VertexKind,
    /// Number of raw zero-set vertices merged into this one.
    pub merged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEdge {
    pub from: usize,
    pub to: usize,
    pub points: Vec<[f64; 2]>,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    pub has_cycle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flag {
    /// Junction found only by proximity of strands, not by a shared vertex.
    NearTangency {
        x: f64,
        y: f64,
    },
    OddValence {
        vertex: usize,
        valence: usize,
    },
    /// A closed loop in the zero set.
    Cycle {
        component: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSetNetwork {
    pub domain: GridDomain,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<NetworkEdge>,
    pub ends: Vec<(usize, EndClass)>,
    pub components: Vec<Component>,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EndKind {
    LeftInfinity,
    RightInfinity,
    BoundaryPoint,
    /// Within `3h` of the caller's singular point with this index.
    SingularPoint(usize),
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Node(usize),
    /// Crossing on the edge from node `a` to node `b`, `a < b`.
    Edge(usize, usize),
}

struct RawGraph {
    pos: Vec<[f64; 2]>,
    ids: HashMap<Key, usize>,
    adj: BTreeSet<(usize, usize)>,
}

impl RawGraph {
    fn vertex(&mut self, key: Key, p: [f64; 2]) -> usize {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.pos.len();
        self.pos.push(p);
        self.ids.insert(key, id);
        id
    }

    fn link(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj.insert((a.min(b), a.max(b)));
        }
    }
}

/// Extracts the level set `g = iso` as a network.
pub fn extract_zero_set(g: &ScalarField, iso: f64) -> ZeroSetNetwork {
    let d = *g.domain();
    let (nx, ny) = (d.nx(), d.ny());
    let mut zero = vec![false; d.len()];
    let vals: Vec<f64> = g
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let s = v - iso;
            if s == 0.0 {
                zero[k] = true;
                NUDGE
            } else {
                s
            }
        })
        .collect();
    let node_pos = |k: usize| [d.x(k % nx), d.y(k / nx)];

    let mut raw = RawGraph {
        pos: Vec::new(),
        ids: HashMap::new(),
        adj: BTreeSet::new(),
    };

    let crossing = |raw: &mut RawGraph, a: usize, b: usize| -> usize {
        if zero[a] {
            return raw.vertex(Key::Node(a), node_pos(a));
        }
        if zero[b] {
            return raw.vertex(Key::Node(b), node_pos(b));
        }
        let (pa, pb) = (node_pos(a), node_pos(b));
        let t = vals[a] / (vals[a] - vals[b]);
        let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        raw.vertex(Key::Edge(a.min(b), a.max(b)), p)
    };

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // counterclockwise corners, then the edges between consecutive ones
            let c = [
                j * nx + i,
                j * nx + i + 1,
                (j + 1) * nx + i + 1,
                (j + 1) * nx + i,
            ];
            let v = [vals[c[0]], vals[c[1]], vals[c[2]], vals[c[3]]];
            let mut cut = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (vals[a] > 0.0) != (vals[b] > 0.0) {
                    cut.push((e, crossing(&mut raw, a, b)));
                }
            }
            match cut.len() {
                2 => raw.link(cut[0].1, cut[1].1),
                4 => {
                    // saddle cell: split by the sign of the cell-centre interpolant
                    let centre_pos = v.iter().sum::<f64>() > 0.0;
                    if centre_pos == (v[0] > 0.0) {
                        // corners 1 and 3 are cut off
                        raw.link(cut[0].1, cut[1].1);
                        raw.link(cut[2].1, cut[3].1);
                    } else {
                        raw.link(cut[3].1, cut[0].1);
                        raw.link(cut[1].1, cut[2].1);
                    }
                }
                _ => {}
            }
        }
    }
    build_network(d, raw)
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Maximal paths of the raw graph through degree-2 vertices.
struct Strand {
    verts: Vec<usize>,
    /// Cumulative arc length along `verts`.
    arc: Vec<f64>,
    closed: bool,
}

impl Strand {
    fn gap(&self, a: usize, b: usize) -> f64 {
        let g = (self.arc[a] - self.arc[b]).abs();
        if self.closed {
            g.min(self.arc[self.arc.len() - 1] - g)
        } else {
            g
        }
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn trace_strands(pos: &[[f64; 2]], nbrs: &[Vec<usize>]) -> Vec<Strand> {
    let mut used = BTreeSet::new();
    let mut out = Vec::new();
    let walk = |start: usize, first: usize, used: &mut BTreeSet<(usize, usize)>| {
        let mut verts = vec![start, first];
        used.insert(edge_key(start, first));
        let (mut prev, mut cur) = (start, first);
        while nbrs[cur].len() == 2 && cur != start {
            let next = if nbrs[cur][0] == prev {
                nbrs[cur][1]
            } else {
                nbrs[cur][0]
            };
            if !used.insert(edge_key(cur, next)) {
                break;
            }
            verts.push(next);
            prev = cur;
            cur = next;
        }
        let closed = verts.len() > 2 && verts[0] == *verts.last().unwrap();
        let mut arc = vec![0.0];
        for w in verts.windows(2) {
            let (p, q) = (pos[w[0]], pos[w[1]]);
            arc.push(arc.last().unwrap() + (p[0] - q[0]).hypot(p[1] - q[1]));
        }
        Strand { verts, arc, closed }
    };
    for a in 0..pos.len() {
        if nbrs[a].len() == 2 {
            continue;
        }
        for &b in &nbrs[a] {
            if !used.contains(&edge_key(a, b)) {
                out.push(walk(a, b, &mut used));
            }
        }
    }
    for a in 0..pos.len() {
        if nbrs[a].len() == 2 && !used.contains(&edge_key(a, nbrs[a][0])) {
            out.push(walk(a, nbrs[a][0], &mut used));
        }
    }
    out
}

fn classify_end(d: &GridDomain, p: [f64; 2]) -> EndClass {
    let tol = 1e-9 * (d.hx() + d.hy());
    let on_left = (p[0] - d.x_min()).abs() <= tol;
    let on_right = (p[0] - d.x_max()).abs() <= tol;
    let on_bottom = (p[1] - d.y_min()).abs() <= tol;
    let on_top = (p[1] - d.y_max()).abs() <= tol;
    let (x, y) = (p[0], p[1]);
    match (on_left, on_right, on_bottom || on_top) {
        (_, _, true) => EndClass::BoundaryPoint { x, y },
        (true, _, false) => EndClass::LeftInfinity,
        (_, true, false) => EndClass::RightInfinity,
        _ => EndClass::Interior { x, y },
    }
}

fn build_network(d: GridDomain, raw: RawGraph) -> ZeroSetNetwork {
    let n = raw.pos.len();
    let pos = &raw.pos;
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &raw.adj {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let deg: Vec<usize> = nbrs.iter().map(Vec::len).collect();
    let strands = trace_strands(pos, &nbrs);
    let mut member: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (s, st) in strands.iter().enumerate() {
        for (k, &v) in st.verts.iter().enumerate() {
            member[v].push((s, k));
        }
    }

    // Distinct strands passing within `reach` of each other touch at grid
    // resolution; so do far-apart stretches of the same strand.
    let reach = d.hx() + d.hy();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut seeded = vec![false; n];
    for a in 0..n {
        seeded[a] = deg[a] >= 3;
    }
    let interior = |p: [f64; 2]| {
        p[0] - d.x_min() > reach
            && d.x_max() - p[0] > reach
            && p[1] - d.y_min() > reach
            && d.y_max() - p[1] > reach
    };
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let cell = |p: [f64; 2]| ((p[0] / reach).floor() as i64, (p[1] / reach).floor() as i64);
    for a in 0..n {
        if interior(pos[a]) {
            buckets.entry(cell(pos[a])).or_default().push(a);
        }
    }
    for a in 0..n {
        if !interior(pos[a]) {
            continue;
        }
        let (cx, cy) = cell(pos[a]);
        for bx in cx - 1..=cx + 1 {
            for by in cy - 1..=cy + 1 {
                let Some(list) = buckets.get(&(bx, by)) else {
                    continue;
                };
                for &b in list {
                    if b <= a || (pos[a][0] - pos[b][0]).hypot(pos[a][1] - pos[b][1]) > reach {
                        continue;
                    }
                    let near_along = member[a].iter().any(|&(s, ka)| {
                        member[b]
                            .iter()
                            .any(|&(t, kb)| s == t && strands[s].gap(ka, kb) <= 3.0 * reach)
                    });
                    if !near_along {
                        union(&mut parent, a, b);
                        seeded[a] = true;
                        seeded[b] = true;
                    }
                }
            }
        }
    }
    // close clusters along strands so each strand enters and leaves once
    let mut changed = true;
    while changed {
        changed = false;
        for st in &strands {
            let mut last: Option<usize> = None;
            for k in 0..st.verts.len() {
                let v = st.verts[k];
                if !seeded[v] {
                    continue;
                }
                if let Some(l) = last {
                    let u = st.verts[l];
                    if find(&mut parent, u) != find(&mut parent, v) && st.gap(l, k) <= 3.0 * reach {
                        for m in l + 1..=k {
                            let w = st.verts[m];
                            seeded[w] = true;
                            union(&mut parent, u, w);
                        }
                        changed = true;
                    }
                }
                last = Some(k);
            }
        }
    }

    let root: Vec<usize> = (0..n).map(|a| find(&mut parent, a)).collect();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for a in 0..n {
        if seeded[a] || deg[a] != 2 {
            groups.entry(root[a]).or_default().push(a);
        }
    }
    let mut flags = Vec::new();
    let mut vertices = Vec::new();
    let mut vid = vec![usize::MAX; n];
    let mut ends = Vec::new();
    for group in groups.values() {
        let valence = group
            .iter()
            .map(|&a| {
                nbrs[a]
                    .iter()
                    .filter(|&&b| root[b] != root[a] || !(seeded[b] || deg[b] != 2))
                    .count()
            })
            .sum::<usize>();
        let (mut x, mut y) = (0.0, 0.0);
        for &a in group {
            x += pos[a][0];
            y += pos[a][1];
        }
        let (x, y) = (x / group.len() as f64, y / group.len() as f64);
        let id = vertices.len();
        let kind = match valence {
            0 => continue,
            1 => {
                let e = classify_end(&d, [x, y]);
                ends.push((id, e));
                VertexKind::End(e)
            }
            2 => VertexKind::Regular,
            v if v % 2 == 1 => {
                flags.push(Flag::OddValence {
                    vertex: id,
                    valence: v,
                });
                VertexKind::OddValence
            }
            _ => VertexKind::Junction,
        };
        if !group.iter().any(|&a| deg[a] >= 3) && group.len() > 1 {
            flags.push(Flag::NearTangency { x, y });
        }
        for &a in group {
            vid[a] = id;
        }
        vertices.push(Vertex {
            id,
            x,
            y,
            valence,
            kind,
            merged: group.len(),
        });
    }

    // edges: chains of unclustered degree-2 vertices between network vertices
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut edges = Vec::new();
    let walk = |start: usize, first: usize, used: &mut BTreeSet<(usize, usize)>, vid: &[usize]| {
        let mut pts = vec![pos[start], pos[first]];
        used.insert(edge_key(start, first));
        let (mut prev, mut cur) = (start, first);
        while vid[cur] == usize::MAX {
            let next = if nbrs[cur][0] == prev {
                nbrs[cur][1]
            } else {
                nbrs[cur][0]
            };
            if !used.insert(edge_key(cur, next)) {
                break;
            }
            pts.push(pos[next]);
            prev = cur;
            cur = next;
        }
        (cur, pts)
    };
    for a in 0..n {
        if vid[a] == usize::MAX {
            continue;
        }
        for &b in &nbrs[a] {
            if used.contains(&edge_key(a, b)) || vid[b] == vid[a] {
                continue;
            }
            let (end, pts) = walk(a, b, &mut used, &vid);
            edges.push(NetworkEdge {
                from: vid[a],
                to: vid[end],
                points: pts,
                component: 0,
            });
        }
    }
    for a in 0..n {
        if vid[a] != usize::MAX || deg[a] != 2 || used.contains(&edge_key(a, nbrs[a][0])) {
            continue;
        }
        let id = vertices.len();
        vertices.push(Vertex {
            id,
            x: pos[a][0],
            y: pos[a][1],
            valence: 2,
            kind: VertexKind::Regular,
            merged: 1,
        });
        vid[a] = id;
        let (_, pts) = walk(a, nbrs[a][0], &mut used, &vid);
        edges.push(NetworkEdge {
            from: id,
            to: id,
            points: pts,
            component: 0,
        });
    }

    let mut cp: Vec<usize> = (0..vertices.len()).collect();
    for e in &edges {
        union(&mut cp, e.from, e.to);
    }
    let mut comp_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut components: Vec<Component> = Vec::new();
    for v in 0..vertices.len() {
        let r = find(&mut cp, v);
        let c = *comp_of_root.entry(r).or_insert_with(|| {
            components.push(Component {
                edges: Vec::new(),
                vertices: Vec::new(),
                has_cycle: false,
            });
            components.len() - 1
        });
        components[c].vertices.push(v);
    }
    for (k, e) in edges.iter_mut().enumerate() {
        let c = comp_of_root[&find(&mut cp, e.from)];
        e.component = c;
        components[c].edges.push(k);
    }
    for (c, comp) in components.iter_mut().enumerate() {
        if comp.edges.len() + 1 > comp.vertices.len() {
            comp.has_cycle = true;
            flags.push(Flag::Cycle { component: c });
        }
    }
    ZeroSetNetwork {
        domain: d,
        vertices,
        edges,
        ends,
        components,
        flags,
    }
}

impl ZeroSetNetwork {
    pub fn junctions(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Junction)
    }

    pub fn has_cycle(&self) -> bool {
        self.components.iter().any(|c| c.has_cycle)
    }

    /// Component containing the network vertex or edge point nearest `(x, y)`.
    pub fn component_near(&self, x: f64, y: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for e in &self.edges {
            for p in &e.points {
                let dist = (p[0] - x).hypot(p[1] - y);
                if best.map_or(true, |(b, _)| dist < b) {
                    best = Some((dist, e.component));
                }
            }
        }
        best.map(|(_, c)| c)
    }

    /// One line per vertex, one block per edge, one line per end.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vertex id x y valence");
        for v in &self.vertices {
            let _ = writeln!(s, "vertex {} {:?} {:?} {}", v.id, v.x, v.y, v.valence);
        }
        let _ = writeln!(s, "# edge from to component points");
        for e in &self.edges {
            let _ = writeln!(
                s,
                "edge {} {} {} {}",
                e.from,
                e.to,
                e.component,
                e.points.len()
            );
            for p in &e.points {
                let _ = writeln!(s, "  {:?} {:?}", p[0], p[1]);
            }
        }
        let _ = writeln!(s, "# end vertex class x y");
        for (v, c) in &self.ends {
            let vx = &self.vertices[*v];
            let name = match c {
                EndClass::LeftInfinity => "left_infinity",
                EndClass::RightInfinity => "right_infinity",
                EndClass::BoundaryPoint { .. } => "boundary_point",
                EndClass::Interior { .. } => "interior",
            };
            let _ = writeln!(s, "end {v} {name} {:?} {:?}", vx.x, vx.y);
        }
        for f in &self.flags {
            let _ = match f {
                Flag::NearTangency { x, y } => writeln!(s, "flag near_tangency {x:?} {y:?}"),
                Flag::OddValence { vertex, valence } => {
                    writeln!(s, "flag odd_valence {vertex} {valence}")
                }
                Flag::Cycle { component } => writeln!(s, "flag cycle {component}"),
            };
        }
        s
    }
}

/// Tally of end classes in one component. Boundary ends within `3h` of one
/// of `singular` are counted against that point instead.
pub fn count_ends(
    net: &ZeroSetNetwork,
    component: usize,
    singular: &[(f64, f64)],
) -> Result<BTreeMap<EndKind, usize>> {
    let comp = net.components.get(component).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "component {component} out of range ({} components)",
            net.components.len()
        ))
    })?;
    let tol = 3.0 * net.domain.hx().max(net.domain.hy());
    let mut out = BTreeMap::new();
    for (v, class) in &net.ends {
        if !comp.vertices.contains(v) {
            continue;
        }
        let kind = match *class {
            EndClass::LeftInfinity => EndKind::LeftInfinity,
            EndClass::RightInfinity => EndKind::RightInfinity,
            EndClass::Interior { .. } => EndKind::Interior,
            EndClass::BoundaryPoint { x, y } => singular
                .iter()
                .position(|&(sx, sy)| (x - sx).hypot(y - sy) <= tol)
                .map_or(EndKind::BoundaryPoint, EndKind::SingularPoint),
        };
        *out.entry(kind).or_insert(0) += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub grad_norm: f64,
    pub value: f64,
}

/// Interior nodes where `|Dg|` is a local minimum over the eight neighbours,
/// below `max_grad`, with `g` inside `level_window`.
pub fn critical_points(
    g: &ScalarField,
    level_window: (f64, f64),
    max_grad: f64,
) -> Vec<CriticalPoint> {
    let d = *g.domain();
    let (nx, ny) = (d.nx(), d.ny());
    let mut norm = vec![0.0; d.len()];
    for j in 0..ny {
        for i in 0..nx {
            let (gx, gy) = gradient(g, i, j).expect("node in range");
            norm[d.index(i, j)] = gx.hypot(gy);
        }
    }
    let mut out = Vec::new();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let m = norm[d.index(i, j)];
            let v = g.at(i, j);
            if !(m < max_grad) || v < level_window.0 || v > level_window.1 {
                continue;
            }
            let is_min = (-1isize..=1).all(|dj| {
                (-1isize..=1).all(|di| {
                    let k = d.index((i as isize + di) as usize, (j as isize + dj) as usize);
                    m <= norm[k]
                })
            });
            if is_min {
                out.push(CriticalPoint {
                    i,
                    j,
                    x: d.x(i),
                    y: d.y(j),
                    grad_norm: m,
                    value: v,
                });
            }
        }
    }
    out
}

/// `g(p) = f1(p) - f2(p + v)` over the nodes `p` of `f1` whose translate lies
/// in the grid of `f2`, with `f2` interpolated bilinearly.
pub fn shifted_difference(f1: &ScalarField, f2: &ScalarField, v: [f64; 2]) -> Result<ScalarField> {
    let d = *f1.domain();
    let e = *f2.domain();
    let is: Vec<usize> = (0..d.nx())
        .filter(|&i| (e.x_min() - 1e-12..=e.x_max() + 1e-12).contains(&(d.x(i) + v[0])))
        .collect();
    let js: Vec<usize> = (0..d.ny())
        .filter(|&j| (e.y_min() - 1e-12..=e.y_max() + 1e-12).contains(&(d.y(j) + v[1])))
        .collect();
    if is.len() < 2 || js.len() < 2 {
        return Err(Error::WindowEmpty(format!(
            "shift ({}, {}) leaves no overlap",
            v[0], v[1]
        )));
    }
    let (i0, i1, j0, j1) = (is[0], *is.last().unwrap(), js[0], *js.last().unwrap());
    let sub = GridDomain::new(d.x(i0), d.x(i1), d.y(j0), d.y(j1), i1 - i0 + 1, j1 - j0 + 1)?;
    let clampx = |x: f64| x.clamp(e.x_min(), e.x_max());
    let clampy = |y: f64| y.clamp(e.y_min(), e.y_max());
    let mut vals = Vec::with_capacity(sub.len());
    for j in j0..=j1 {
        for i in i0..=i1 {
            let q = f2
                .sample(clampx(d.x(i) + v[0]), clampy(d.y(j) + v[1]))
                .expect("inside grid");
            vals.push(f1.at(i, j) - q);
        }
    }
    ScalarField::new(sub, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{sample_reaper, ReaperParams, Tilt};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn junction_valences_are_even(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, e in -0.3f64..0.3) {
            let g = ScalarField::from_fn(square(33), |x, y| a * x * x + b * x * y + c * y * y + e + 0.2 * x * x * y).unwrap();
            let net = extract_zero_set(&g, 0.0);
            for v in net.junctions() {
                prop_assert!(v.valence % 2 == 0 && v.valence >= 4);
            }
            for f in &net.flags {
                if let Flag::OddValence { vertex, .. } = f {
                    prop_assert!(net.vertices[*vertex].kind == VertexKind::OddValence);
                }
            }
        }
    }

    fn square(n: usize) -> GridDomain {
        GridDomain::new(-1.0, 1.0, -1.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn saddle_has_one_valence_four_junction() {
        let g = ScalarField::from_fn(square(41), |x, y| x * x - y * y).unwrap();
        let net = extract_zero_set(&g, 0.0);
        let js: Vec<_> = net.junctions().collect();
        assert_eq!(js.len(), 1, "{}", net.to_text());
        assert_eq!(js[0].valence, 4);
        assert!(js[0].x.abs() < 1e-12 && js[0].y.abs() < 1e-12);
        assert_eq!(net.ends.len(), 4);
        assert_eq!(net.components.len(), 1);
        let c = count_ends(&net, 0, &[]).unwrap();
        assert_eq!(c.get(&EndKind::BoundaryPoint), Some(&4));
        assert!(!net.has_cycle());
    }

    #[test]
    fn offset_saddle_is_resolved_in_its_cell() {
        let g = ScalarField::from_fn(square(40), |x, y| (x - 0.013) * (y + 0.007)).unwrap();
        let net = extract_zero_set(&g, 0.0);
        let js: Vec<_> = net.junctions().collect();
        assert_eq!(js.len(), 1);
        assert_eq!(js[0].valence, 4);
        assert!((js[0].x - 0.013).abs() < 0.06 && (js[0].y + 0.007).abs() < 0.06);
        assert_eq!(net.ends.len(), 4);
    }

    #[test]
    fn offset_diagonal_saddle_touches_at_resolution() {
        let g = ScalarField::from_fn(square(40), |x, y| (x - 0.013).powi(2) - (y + 0.007).powi(2))
            .unwrap();
        let net = extract_zero_set(&g, 0.0);
        let js: Vec<_> = net.junctions().collect();
        assert_eq!(js.len(), 1);
        assert_eq!(js[0].valence, 4);
        assert!(net
            .flags
            .iter()
            .any(|f| matches!(f, Flag::NearTangency { .. })));
    }

    #[test]
    fn resolution_stability() {
        let fields: [fn(f64, f64) -> f64; 3] = [
            |x, y| x * x - y * y,
            |x, y| x * x * x - 3.0 * x * y * y,
            |x, _| 2.0 * x * 3f64.sqrt(),
        ];
        for f in fields {
            let coarse = extract_zero_set(&ScalarField::from_fn(square(41), f).unwrap(), 0.0);
            let fine = extract_zero_set(&ScalarField::from_fn(square(81), f).unwrap(), 0.0);
            assert_eq!(coarse.ends.len(), fine.ends.len());
            let (a, b): (Vec<_>, Vec<_>) =
                (coarse.junctions().collect(), fine.junctions().collect());
            assert_eq!(a.len(), b.len());
            for (p, q) in a.iter().zip(&b) {
                assert!((p.x - q.x).hypot(p.y - q.y) <= 2.0 * 0.05);
                assert_eq!(p.valence, q.valence);
            }
        }
    }

    #[test]
    fn monkey_saddle_has_valence_six() {
        let g = ScalarField::from_fn(square(201), |x, y| x * x * x - 3.0 * x * y * y).unwrap();
        let net = extract_zero_set(&g, 0.0);
        let js: Vec<_> = net.junctions().collect();
        assert_eq!(
            js.len(),
            1,
            "{:?}",
            net.vertices
                .iter()
                .filter(|v| v.x.abs() < 0.1 && v.y.abs() < 0.1)
                .collect::<Vec<_>>()
        );
        assert_eq!(js[0].valence, 6);
        assert_eq!(net.ends.len(), 6);
        assert!(!net.has_cycle());
    }

    #[test]
    fn opposite_reapers_differ_along_a_line() {
        let c = 2.0;
        let d = GridDomain::with_spacing(-2.0, 2.0, -2.0, 2.0, 0.05).unwrap();
        let p = sample_reaper(&ReaperParams::new(c, Tilt::Plus, 0.0, 0.0).unwrap(), d).unwrap();
        let m = sample_reaper(&ReaperParams::new(c, Tilt::Minus, 0.0, 0.0).unwrap(), d).unwrap();
        let g = p.zip_with(&m, |a, b| a - b).unwrap();
        let net = extract_zero_set(&g, 0.0);
        assert_eq!(net.junctions().count(), 0);
        assert_eq!(net.components.len(), 1);
        assert_eq!(net.edges.len(), 1);
        assert_eq!(
            count_ends(&net, 0, &[])
                .unwrap()
                .get(&EndKind::BoundaryPoint),
            Some(&2)
        );
        for p in &net.edges[0].points {
            assert!(p[0].abs() < 1e-9);
        }
    }

    #[test]
    fn circle_is_flagged_as_cycle() {
        let g = ScalarField::from_fn(square(31), |x, y| x * x + y * y - 0.4).unwrap();
        let net = extract_zero_set(&g, 0.0);
        assert_eq!(net.components.len(), 1);
        assert!(net.has_cycle());
        assert!(net.ends.is_empty());
        assert!(net.flags.iter().any(|f| matches!(f, Flag::Cycle { .. })));
    }

    #[test]
    fn side_ends_are_classified_as_infinities() {
        let d = GridDomain::new(-3.0, 3.0, 0.0, 1.0, 31, 11).unwrap();
        let g = ScalarField::from_fn(d, |_, y| y - 0.47).unwrap();
        let net = extract_zero_set(&g, 0.0);
        let c = count_ends(&net, 0, &[]).unwrap();
        assert_eq!(c.get(&EndKind::LeftInfinity), Some(&1));
        assert_eq!(c.get(&EndKind::RightInfinity), Some(&1));
        assert!(count_ends(&net, 5, &[]).is_err());
    }

    #[test]
    fn singular_point_ends() {
        let d = GridDomain::new(-1.0, 1.0, 0.0, 1.0, 21, 11).unwrap();
        let g = ScalarField::from_fn(d, |x, y| x + 0.3 * y).unwrap();
        let net = extract_zero_set(&g, 0.0);
        let c = count_ends(&net, 0, &[(0.0, 0.0)]).unwrap();
        assert_eq!(c.get(&EndKind::SingularPoint(0)), Some(&1));
        assert_eq!(c.get(&EndKind::BoundaryPoint), Some(&1));
    }

    #[test]
    fn critical_point_examples() {
        for f in [
            |x: f64, y: f64| x * x + y * y,
            |x: f64, y: f64| x * x - y * y,
        ] {
            let g = ScalarField::from_fn(square(21), f).unwrap();
            let cps = critical_points(&g, (-10.0, 10.0), 0.5);
            assert_eq!(cps.len(), 1);
            assert_eq!((cps[0].i, cps[0].j), (10, 10));
        }
        let g = ScalarField::from_fn(square(21), |x, _| x).unwrap();
        assert!(critical_points(&g, (-10.0, 10.0), 0.5).is_empty());
    }

    #[test]
    fn shifted_difference_of_affine_field_is_constant() {
        let d = square(21);
        let f = ScalarField::from_fn(d, |x, y| 2.0 * x - y).unwrap();
        let g = shifted_difference(&f, &f, [0.3, 0.2]).unwrap();
        assert!(g.values().iter().all(|v| (v + 0.4).abs() < 1e-12));
        assert!(g.domain().x_max() + 0.3 <= 1.0 + 1e-12);
        assert!(shifted_difference(&f, &f, [5.0, 0.0]).is_err());
    }

    #[test]
    fn text_serialisation_lists_everything() {
        let g = ScalarField::from_fn(square(11), |x, y| x * x - y * y).unwrap();
        let net = extract_zero_set(&g, 0.0);
        let t = net.to_text();
        assert_eq!(
            t.lines().filter(|l| l.starts_with("vertex ")).count(),
            net.vertices.len()
        );
        assert_eq!(
            t.lines().filter(|l| l.starts_with("edge ")).count(),
            net.edges.len()
        );
        assert_eq!(t.lines().filter(|l| l.starts_with("end ")).count(), 4);
    }
}
