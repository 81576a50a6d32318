//! Boundary-value problems for the pitchfork, helicoid and yeti families.
//!
//! Each preset truncates an infinite strip (or half-plane) to a rectangle
//! `[x_min, x_max] x [y_min, y_max]` held a small margin away from the
//! singular boundary lines, with `±∞` data replaced by `±M`.
//! Artificial left/right edges carry an asymptotic model of the family.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{BoundarySpec, GridDomain, Segment, SegmentValue, Trace};
use crate::oracles::{pitchfork_left_model, reaper_eval};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Strip `R x (0, w)`, `w ≥ pi`: `-∞` on top, `-∞ | +∞` on the bottom
    /// with the jump at the origin.
    Pitchfork {
        w: f64,
    },
    /// Strip `R x (0, w)`, `w < pi`: `+∞ | -∞` on the bottom (jump at 0)
    /// and `-∞ | +∞` on top (jump at `a`).
    Helicoid {
        w: f64,
        a: f64,
    },
    /// Half-plane `y > 0`: `+∞ | -∞` on the bottom, truncated at `ymax`.
    YetiHalfPlane {
        ymax: f64,
    },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvpPreset {
    pub family: Family,
    pub truncation: GridDomain,
    pub boundary: BoundarySpec,
}

fn jump(left: SegmentValue, at: f64, right: SegmentValue) -> Vec<Segment> {
    vec![
        Segment::new(f64::NEG_INFINITY, at, left),
        Segment::new(at, f64::INFINITY, right),
    ]
}

fn ramp(from: f64, to: f64) -> Vec<Segment> {
    vec![Segment::whole(SegmentValue::Trace(Trace::Ramp {
        from,
        to,
    }))]
}

fn check_strip(w: f64, d: &GridDomain) -> Result<()> {
    if !(d.y_min() > 0.0 && d.y_max() < w) {
        return Err(Error::InvalidParameter(format!(
            "truncation [{}, {}] in y must lie strictly inside (0, {w})",
            d.y_min(),
            d.y_max()
        )));
    }
    Ok(())
}

fn check_contains_x(d: &GridDomain, xs: &[f64]) -> Result<()> {
    for &x in xs {
        if !(d.x_min() < x && x < d.x_max()) {
            return Err(Error::InvalidParameter(format!(
                "boundary jump at x = {x} must lie inside ({}, {})",
                d.x_min(),
                d.x_max()
            )));
        }
    }
    Ok(())
}

impl BvpPreset {
    pub fn pitchfork(w: f64, truncation: GridDomain, cap: f64) -> Result<Self> {
        if !(w >= PI) {
            return Err(Error::InvalidParameter(format!(
                "pitchfork requires width w ≥ π (no such translator exists for w < π), got w = {w}"
            )));
        }
        check_strip(w, &truncation)?;
        check_contains_x(&truncation, &[0.0])?;
        // Far-left model: tilted reaper of width w, anchored so its value at
        // the bottom-left corner is -M.
        let base = pitchfork_left_model(w, 0.0)?;
        let at_corner = reaper_eval(&base, truncation.x_min(), truncation.y_min())?;
        let model = pitchfork_left_model(w, -at_corner)?;
        let boundary = BoundarySpec::new(
            jump(SegmentValue::MinusInf, 0.0, SegmentValue::PlusInf),
            vec![Segment::whole(SegmentValue::MinusInf)],
            vec![Segment::whole(SegmentValue::Trace(Trace::Reaper {
                params: model,
                cap_coeff: -1.0,
            }))],
            ramp(1.0, -1.0),
            cap,
        )?;
        Ok(BvpPreset {
            family: Family::Pitchfork { w },
            truncation,
            boundary,
        })
    }

    pub fn helicoid(w: f64, a: f64, truncation: GridDomain, cap: f64) -> Result<Self> {
        if !(w < PI && w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "helicoid requires width 0 < w < π (no such translator exists for w ≥ π), got w = {w}"
            )));
        }
        if !a.is_finite() {
            return Err(Error::InvalidParameter(
                "helicoid offset a must be finite".into(),
            ));
        }
        check_strip(w, &truncation)?;
        check_contains_x(&truncation, &[0.0, a])?;
        let boundary = BoundarySpec::new(
            jump(SegmentValue::PlusInf, 0.0, SegmentValue::MinusInf),
            jump(SegmentValue::MinusInf, a, SegmentValue::PlusInf),
            ramp(1.0, -1.0),
            ramp(-1.0, 1.0),
            cap,
        )?;
        Ok(BvpPreset {
            family: Family::Helicoid { w, a },
            truncation,
            boundary,
        })
    }

    /// Capped yeti data on `[x_min, x_max] x [y_min, ymax]`; the top edge is
    /// held at 0 and the sides ramp linearly from the bottom caps to 0.
    pub fn yeti(truncation: GridDomain, cap: f64) -> Result<Self> {
        if !(truncation.y_min() > 0.0) {
            return Err(Error::InvalidParameter(
                "yeti truncation needs y_min > 0".into(),
            ));
        }
        check_contains_x(&truncation, &[0.0])?;
        let boundary = BoundarySpec::new(
            jump(SegmentValue::PlusInf, 0.0, SegmentValue::MinusInf),
            vec![Segment::whole(SegmentValue::Finite(0.0))],
            ramp(1.0, 0.0),
            ramp(-1.0, 0.0),
            cap,
        )?;
        Ok(BvpPreset {
            family: Family::YetiHalfPlane {
                ymax: truncation.y_max(),
            },
            truncation,
            boundary,
        })
    }

    pub fn custom(truncation: GridDomain, boundary: BoundarySpec) -> Result<Self> {
        boundary.validate_for(&truncation)?;
        Ok(BvpPreset {
            family: Family::Custom,
            truncation,
            boundary,
        })
    }

    /// Distance from the grid to the nearest singular boundary line.
    pub fn margin(&self) -> Option<f64> {
        let d = &self.truncation;
        match self.family {
            Family::Pitchfork { w } | Family::Helicoid { w, .. } => {
                Some(d.y_min().min(w - d.y_max()))
            }
            Family::YetiHalfPlane { .. } => Some(d.y_min()),
            Family::Custom => None,
        }
    }

    /// Whether the cap dominates the margin error: `M ≥ |ln δ| + 2`.
    pub fn cap_margin_ok(&self) -> Option<bool> {
        self.margin()
            .map(|delta| self.boundary.cap() >= delta.ln().abs() + 2.0)
    }

    pub fn with_cap(&self, cap: f64) -> Result<Self> {
        Ok(BvpPreset {
            boundary: self.boundary.with_cap(cap)?,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Pitchfork { .. } => "pitchfork",
            Family::Helicoid { .. } => "helicoid",
            Family::YetiHalfPlane { .. } => "yeti",
            Family::Custom => "custom",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Edge;

    fn strip(w: f64) -> GridDomain {
        GridDomain::new(-4.0, 4.0, 0.05, w - 0.05, 41, 11).unwrap()
    }

    #[test]
    fn width_hypotheses() {
        let e = BvpPreset::pitchfork(2.0, strip(2.0), 6.0).unwrap_err();
        assert!(e.to_string().contains("w ≥ π"), "{e}");
        let e = BvpPreset::helicoid(2.0 * PI, 0.0, strip(2.0 * PI), 6.0).unwrap_err();
        assert!(e.to_string().contains("w < π"), "{e}");
        assert!(BvpPreset::pitchfork(PI, strip(PI), 6.0).is_ok());
        assert!(BvpPreset::helicoid(PI / 2.0, 0.5, strip(PI / 2.0), 6.0).is_ok());
        assert!(BvpPreset::pitchfork(PI, strip(4.0), 6.0).is_err());
    }

    #[test]
    fn pitchfork_left_trace_is_anchored_to_cap() {
        let p = BvpPreset::pitchfork(PI, strip(PI), 6.0).unwrap();
        let d = p.truncation;
        let b = &p.boundary;
        let v = b.value_on_edge(&d, Edge::Left, d.y_min()).unwrap();
        assert!((v + 6.0).abs() < 1e-12);
        let top = b.value_on_edge(&d, Edge::Left, d.y_max()).unwrap();
        assert!((top + 6.0).abs() < 1e-12);
        assert_eq!(b.value_on_edge(&d, Edge::Bottom, 0.0).unwrap(), 0.0);
        assert_eq!(b.value_on_edge(&d, Edge::Right, d.y_min()).unwrap(), 6.0);
        assert!((p.margin().unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(p.cap_margin_ok(), Some(true));
        assert_eq!(p.with_cap(4.0).unwrap().cap_margin_ok(), Some(false));
    }

    #[test]
    fn helicoid_data_symmetry() {
        let w = PI / 2.0;
        let d = GridDomain::new(-4.0, 4.0, 0.05, w - 0.05, 41, 11).unwrap();
        let p = BvpPreset::helicoid(w, 0.0, d, 5.0).unwrap();
        // data is invariant under the half-turn (x, y) -> (-x, w - y)
        for i in 0..d.nx() {
            let a = p.boundary.node_value(&d, i, 0).unwrap();
            let b = p
                .boundary
                .node_value(&d, d.nx() - 1 - i, d.ny() - 1)
                .unwrap();
            assert_eq!(a, b);
        }
    }
}
