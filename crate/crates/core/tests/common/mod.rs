#![allow(dead_code)]

use std::f64::consts::PI;

use translab::fields::{BoundarySpec, Segment, SegmentValue, Trace};
use translab::oracles::ReaperParams;
use translab::solver::{solve, BvpPreset, SolveConfig};
use translab::{GridDomain, ScalarField};

/// Dirichlet data equal to the reaper on all four edges.
pub fn reaper_data(p: ReaperParams) -> BoundarySpec {
    let s = vec![Segment::whole(SegmentValue::Trace(Trace::Reaper {
        params: p,
        cap_coeff: 0.0,
    }))];
    BoundarySpec::new(s.clone(), s.clone(), s.clone(), s, 10.0).unwrap()
}

pub fn pitchfork_domain(x_min: f64, x_max: f64, h: f64) -> GridDomain {
    GridDomain::with_spacing(x_min, x_max, 0.05, PI - 0.05, h).unwrap()
}

pub fn solve_pitchfork(x_min: f64, x_max: f64, h: f64, cap: f64) -> ScalarField {
    let pre = BvpPreset::pitchfork(PI, pitchfork_domain(x_min, x_max, h), cap).unwrap();
    solve(&pre, &SolveConfig::default(), None).unwrap().0
}

pub fn solve_helicoid(x_min: f64, x_max: f64, h: f64, cap: f64) -> ScalarField {
    let w = PI / 2.0;
    let d = GridDomain::with_spacing(x_min, x_max, 0.05, w - 0.05, h).unwrap();
    let pre = BvpPreset::helicoid(w, 0.0, d, cap).unwrap();
    solve(&pre, &SolveConfig::default(), None).unwrap().0
}

pub fn max_gap(a: &ScalarField, b: &ScalarField) -> f64 {
    a.zip_with(b, |p, q| p - q).unwrap().max_abs()
}
