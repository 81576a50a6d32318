//! Piecewise Dirichlet data with capped infinities.

use super::{GridDomain, ScalarField};
use crate::error::{Error, Result};
use crate::oracles::{reaper_eval, ReaperParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    /// `y = y_min`, parameterized by x.
    Bottom,
    /// `y = y_max`, parameterized by x.
    Top,
    /// `x = x_min`, parameterized by y.
    Left,
    /// `x = x_max`, parameterized by y.
    Right,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Top, Edge::Left, Edge::Right];

    fn extent(self, d: &GridDomain) -> (f64, f64) {
        match self {
            Edge::Bottom | Edge::Top => (d.x_min(), d.x_max()),
            Edge::Left | Edge::Right => (d.y_min(), d.y_max()),
        }
    }

    /// Point of the edge at parameter `t`.
    fn point(self, d: &GridDomain, t: f64) -> (f64, f64) {
        match self {
            Edge::Bottom => (t, d.y_min()),
            Edge::Top => (t, d.y_max()),
            Edge::Left => (d.x_min(), t),
            Edge::Right => (d.x_max(), t),
        }
    }
}

/// Boundary values sourced from a function rather than a constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    /// Tilted grim reaper plus `cap_coeff * M`.
    Reaper {
        params: ReaperParams,
        cap_coeff: f64,
    },
    /// Linear ramp from `from * M` at the low end of the segment (clipped to
    /// the edge) to `to * M` at the high end.
    Ramp { from: f64, to: f64 },
    /// Stored `(t, value)` samples, linearly interpolated and held constant
    /// past either end. Parameters must be strictly increasing.
    Samples(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentValue {
    Finite(f64),
    PlusInf,
    MinusInf,
    Trace(Trace),
}

/// One piece of an edge: the parameter interval `[start, end]` and its data.
/// Infinite interval bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value: SegmentValue,
}

impl Segment {
    pub fn new(start: f64, end: f64, value: SegmentValue) -> Self {
        Segment { start, end, value }
    }

    /// Segment spanning the whole real line.
    pub fn whole(value: SegmentValue) -> Self {
        Segment {
            start: f64::NEG_INFINITY,
            end: f64::INFINITY,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    bottom: Vec<Segment>,
    top: Vec<Segment>,
    left: Vec<Segment>,
    right: Vec<Segment>,
    cap: f64,
}

impl BoundarySpec {
    pub fn new(
        bottom: Vec<Segment>,
        top: Vec<Segment>,
        left: Vec<Segment>,
        right: Vec<Segment>,
        cap: f64,
    ) -> Result<Self> {
        if !(cap > 0.0) || !cap.is_finite() {
            return Err(Error::InvalidBoundary(format!(
                "cap must be positive and finite, got {cap}"
            )));
        }
        for (name, segs) in [
            ("bottom", &bottom),
            ("top", &top),
            ("left", &left),
            ("right", &right),
        ] {
            check_segments(name, segs)?;
        }
        Ok(BoundarySpec {
            bottom,
            top,
            left,
            right,
            cap,
        })
    }

    /// Same value on every edge.
    pub fn uniform(value: SegmentValue, cap: f64) -> Result<Self> {
        let s = vec![Segment::whole(value)];
        Self::new(s.clone(), s.clone(), s.clone(), s, cap)
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn with_cap(&self, cap: f64) -> Result<Self> {
        Self::new(
            self.bottom.clone(),
            self.top.clone(),
            self.left.clone(),
            self.right.clone(),
            cap,
        )
    }

    pub fn edge(&self, e: Edge) -> &[Segment] {
        match e {
            Edge::Bottom => &self.bottom,
            Edge::Top => &self.top,
            Edge::Left => &self.left,
            Edge::Right => &self.right,
        }
    }

    /// Whether any value depends on the cap magnitude.
    pub fn depends_on_cap(&self) -> bool {
        Edge::ALL
            .iter()
            .flat_map(|&e| self.edge(e))
            .any(|s| match &s.value {
                SegmentValue::PlusInf | SegmentValue::MinusInf => true,
                SegmentValue::Trace(Trace::Ramp { from, to }) => *from != 0.0 || *to != 0.0,
                SegmentValue::Trace(Trace::Reaper { cap_coeff, .. }) => *cap_coeff != 0.0,
                _ => false,
            })
    }

    /// Checks that every edge's segments cover the edge of `d`.
    pub fn validate_for(&self, d: &GridDomain) -> Result<()> {
        for e in Edge::ALL {
            let segs = self.edge(e);
            let (lo, hi) = e.extent(d);
            if segs[0].start > lo || segs[segs.len() - 1].end < hi {
                return Err(Error::InvalidBoundary(format!(
                    "{e:?} segments [{}, {}] do not cover [{lo}, {hi}]",
                    segs[0].start,
                    segs[segs.len() - 1].end
                )));
            }
        }
        Ok(())
    }

    /// Capped value of edge `e` at parameter `t`.
    ///
    /// At a point shared by two segments the two values are averaged, so a
    /// `PlusInf`/`MinusInf` jump evaluates to 0.
    pub fn value_on_edge(&self, d: &GridDomain, e: Edge, t: f64) -> Result<f64> {
        let segs = self.edge(e);
        let k = segs
            .iter()
            .position(|s| t >= s.start && t <= s.end)
            .ok_or_else(|| Error::InvalidBoundary(format!("{e:?} edge has no segment at {t}")))?;
        let here = self.eval_segment(d, e, &segs[k], t)?;
        match segs.get(k + 1) {
            Some(next) if t == segs[k].end => {
                let there = self.eval_segment(d, e, next, t)?;
                Ok(0.5 * (here + there))
            }
            _ => Ok(here),
        }
    }

    fn eval_segment(&self, d: &GridDomain, e: Edge, s: &Segment, t: f64) -> Result<f64> {
        let m = self.cap;
        Ok(match &s.value {
            SegmentValue::Finite(v) => *v,
            SegmentValue::PlusInf => m,
            SegmentValue::MinusInf => -m,
            SegmentValue::Trace(Trace::Reaper { params, cap_coeff }) => {
                let (x, y) = e.point(d, t);
                reaper_eval(params, x, y)? + cap_coeff * m
            }
            SegmentValue::Trace(Trace::Ramp { from, to }) => {
                let (lo, hi) = e.extent(d);
                let a = s.start.max(lo);
                let b = s.end.min(hi);
                let r = if b > a {
                    ((t - a) / (b - a)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                m * (from + (to - from) * r)
            }
            SegmentValue::Trace(Trace::Samples(pts)) => interp_samples(pts, t),
        })
    }

    /// Capped value at boundary node `(i, j)`. Corner nodes average the two
    /// edges that meet there.
    pub fn node_value(&self, d: &GridDomain, i: usize, j: usize) -> Result<f64> {
        d.check(i, j)?;
        let (x, y) = (d.x(i), d.y(j));
        let mut acc = 0.0;
        let mut n = 0;
        if j == 0 {
            acc += self.value_on_edge(d, Edge::Bottom, x)?;
            n += 1;
        }
        if j + 1 == d.ny() {
            acc += self.value_on_edge(d, Edge::Top, x)?;
            n += 1;
        }
        if i == 0 {
            acc += self.value_on_edge(d, Edge::Left, y)?;
            n += 1;
        }
        if i + 1 == d.nx() {
            acc += self.value_on_edge(d, Edge::Right, y)?;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidBoundary(format!(
                "node ({i}, {j}) is not on the boundary"
            )));
        }
        Ok(acc / n as f64)
    }

    /// Overwrites the boundary nodes of `u` with the capped data.
    pub fn apply(&self, u: &mut ScalarField) -> Result<()> {
        let d = *u.domain();
        self.validate_for(&d)?;
        for (i, j) in boundary_nodes(&d) {
            let v = self.node_value(&d, i, j)?;
            if !v.is_finite() {
                return Err(Error::InvalidBoundary(format!(
                    "non-finite value at node ({i}, {j})"
                )));
            }
            u.set(i, j, v);
        }
        Ok(())
    }
}

/// Boundary nodes in a fixed order: bottom row, top row, then the interior
/// parts of the left and right columns.
pub(crate) fn boundary_nodes(d: &GridDomain) -> impl Iterator<Item = (usize, usize)> + '_ {
    let (nx, ny) = (d.nx(), d.ny());
    (0..nx)
        .map(|i| (i, 0))
        .chain((0..nx).map(move |i| (i, ny - 1)))
        .chain((1..ny - 1).map(|j| (0, j)))
        .chain((1..ny - 1).map(move |j| (nx - 1, j)))
}

fn check_segments(name: &str, segs: &[Segment]) -> Result<()> {
    if segs.is_empty() {
        return Err(Error::InvalidBoundary(format!(
            "{name} edge has no segments"
        )));
    }
    for s in segs {
        if !(s.start < s.end) {
            return Err(Error::InvalidBoundary(format!(
                "{name} segment [{}, {}] is empty",
                s.start, s.end
            )));
        }
        match &s.value {
            SegmentValue::Finite(v) if !v.is_finite() => {
                return Err(Error::InvalidBoundary(format!("{name} edge: Finite({v})")));
            }
            SegmentValue::Trace(Trace::Samples(p)) => {
                if p.is_empty() || p.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(Error::InvalidBoundary(format!(
                        "{name} edge: samples must be non-empty with increasing parameters"
                    )));
                }
            }
            _ => {}
        }
    }
    for w in segs.windows(2) {
        if w[0].end != w[1].start {
            return Err(Error::InvalidBoundary(format!(
                "{name} segments are not contiguous at {} / {}",
                w[0].end, w[1].start
            )));
        }
    }
    Ok(())
}

fn interp_samples(pts: &[(f64, f64)], t: f64) -> f64 {
    if t <= pts[0].0 {
        return pts[0].1;
    }
    let last = pts[pts.len() - 1];
    if t >= last.0 {
        return last.1;
    }
    let k = pts.partition_point(|p| p.0 <= t);
    let (a, b) = (pts[k - 1], pts[k]);
    let r = (t - a.0) / (b.0 - a.0);
    a.1 + r * (b.1 - a.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jump_spec(cap: f64) -> BoundarySpec {
        BoundarySpec::new(
            vec![
                Segment::new(f64::NEG_INFINITY, 0.0, SegmentValue::MinusInf),
                Segment::new(0.0, f64::INFINITY, SegmentValue::PlusInf),
            ],
            vec![Segment::whole(SegmentValue::MinusInf)],
            vec![Segment::whole(SegmentValue::Finite(-1.0))],
            vec![Segment::whole(SegmentValue::Trace(Trace::Ramp {
                from: 1.0,
                to: -1.0,
            }))],
            cap,
        )
        .unwrap()
    }

    #[test]
    fn capped_evaluation() {
        let d = GridDomain::new(-2.0, 2.0, 0.0, 1.0, 5, 3).unwrap();
        let b = jump_spec(6.0);
        assert_eq!(b.value_on_edge(&d, Edge::Bottom, -1.0).unwrap(), -6.0);
        assert_eq!(b.value_on_edge(&d, Edge::Bottom, 1.0).unwrap(), 6.0);
        assert_eq!(b.value_on_edge(&d, Edge::Bottom, 0.0).unwrap(), 0.0);
        assert_eq!(b.value_on_edge(&d, Edge::Top, 0.0).unwrap(), -6.0);
        assert_eq!(b.value_on_edge(&d, Edge::Right, 0.5).unwrap(), 0.0);
        assert_eq!(b.node_value(&d, 2, 0).unwrap(), 0.0);
        // corner: bottom +6 and ramp +6
        assert_eq!(b.node_value(&d, 4, 0).unwrap(), 6.0);
        // corner: top -6 and left -1
        assert_eq!(b.node_value(&d, 0, 2).unwrap(), -3.5);
        assert!(b.node_value(&d, 2, 1).is_err());
    }

    #[test]
    fn apply_sets_only_boundary() {
        let d = GridDomain::new(-2.0, 2.0, 0.0, 1.0, 5, 4).unwrap();
        let mut u = ScalarField::from_fn(d, |_, _| 9.0).unwrap();
        jump_spec(2.0).apply(&mut u).unwrap();
        assert_eq!(u.at(1, 1), 9.0);
        assert_eq!(u.at(0, 0), -1.5);
        assert_eq!(u.at(3, 0), 2.0);
        assert_eq!(boundary_nodes(&d).count(), 2 * 5 + 2 * 2);
    }

    #[test]
    fn rejects_gaps_and_bad_caps() {
        let gap = vec![
            Segment::new(f64::NEG_INFINITY, 0.0, SegmentValue::MinusInf),
            Segment::new(0.5, f64::INFINITY, SegmentValue::PlusInf),
        ];
        let w = vec![Segment::whole(SegmentValue::Finite(0.0))];
        assert!(BoundarySpec::new(gap, w.clone(), w.clone(), w.clone(), 1.0).is_err());
        assert!(BoundarySpec::uniform(SegmentValue::Finite(0.0), 0.0).is_err());
        assert!(BoundarySpec::uniform(SegmentValue::Finite(f64::NAN), 1.0).is_err());
        let short = vec![Segment::new(-1.0, 1.0, SegmentValue::Finite(0.0))];
        let b = BoundarySpec::new(short, w.clone(), w.clone(), w, 1.0).unwrap();
        let d = GridDomain::new(-2.0, 2.0, 0.0, 1.0, 5, 3).unwrap();
        assert!(b.validate_for(&d).is_err());
    }

    #[test]
    fn samples_interpolate_linearly() {
        let pts = vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)];
        assert_eq!(interp_samples(&pts, -1.0), 1.0);
        assert_eq!(interp_samples(&pts, 0.5), 2.0);
        assert_eq!(interp_samples(&pts, 1.5), 2.5);
        assert_eq!(interp_samples(&pts, 5.0), 2.0);
    }

    #[test]
    fn cap_dependence() {
        assert!(jump_spec(1.0).depends_on_cap());
        assert!(!BoundarySpec::uniform(SegmentValue::Finite(1.0), 1.0)
            .unwrap()
            .depends_on_cap());
    }
}
