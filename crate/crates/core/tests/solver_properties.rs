mod common;

use common::*;
use translab::fields::{BoundarySpec, Segment, SegmentValue, Trace};
use translab::oracles::{sample_reaper, ReaperParams, Tilt};
use translab::solver::{residual, solve, BvpPreset, SolveConfig};
use translab::{GridDomain, ScalarField};

fn ramp(from: f64, to: f64) -> Vec<Segment> {
    vec![Segment::whole(SegmentValue::Trace(Trace::Ramp {
        from,
        to,
    }))]
}

fn constant(v: f64) -> Vec<Segment> {
    vec![Segment::whole(SegmentValue::Finite(v))]
}

#[test]
fn ordered_data_give_ordered_solutions() {
    let d = GridDomain::new(-1.0, 1.0, 0.0, 2.0, 31, 31).unwrap();
    let low = BoundarySpec::new(
        constant(0.0),
        constant(0.0),
        constant(0.0),
        constant(0.0),
        10.0,
    )
    .unwrap();
    let high = BoundarySpec::new(
        constant(0.0),
        constant(1.5),
        ramp(0.0, 1.5),
        ramp(0.0, 1.5),
        10.0,
    )
    .unwrap();
    let cfg = SolveConfig::default();
    let (u1, _) = solve(&BvpPreset::custom(d, low).unwrap(), &cfg, None).unwrap();
    let (u2, _) = solve(&BvpPreset::custom(d, high).unwrap(), &cfg, None).unwrap();
    let diff = u2.zip_with(&u1, |a, b| a - b).unwrap();
    let mut boundary_max = f64::MIN;
    for j in 0..d.ny() {
        for i in 0..d.nx() {
            let v = diff.at(i, j);
            if d.is_boundary(i, j) {
                boundary_max = boundary_max.max(v);
            } else {
                assert!(v > 0.0, "({i},{j}) {v}");
            }
        }
    }
    assert!(diff.max_abs_interior() <= boundary_max);
}

#[test]
fn solves_are_bit_deterministic() {
    let a = solve_pitchfork(-3.0, 3.0, 0.2, 4.0);
    let b = solve_pitchfork(-3.0, 3.0, 0.2, 4.0);
    assert_eq!(a.values(), b.values());
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let p = ReaperParams::new(2.0, Tilt::Plus, 0.0, 0.0).unwrap();
    let mut errs = Vec::new();
    for h in [0.08, 0.04, 0.02] {
        let d = GridDomain::with_spacing(-1.0, 1.0, -1.0, 1.0, h).unwrap();
        let pre = BvpPreset::custom(d, reaper_data(p)).unwrap();
        let (u, rep) = solve(&pre, &SolveConfig::default(), Some(&ScalarField::zeros(d))).unwrap();
        assert!(rep.final_residual <= 1e-10);
        errs.push(max_gap(&u, &sample_reaper(&p, d).unwrap()));
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "errors {errs:?}");
    }
}

#[test]
fn constants_pass_through_the_solve() {
    let d = GridDomain::new(-1.0, 1.0, -0.5, 0.5, 17, 13).unwrap();
    let p = ReaperParams::new(1.2, Tilt::Plus, 0.0, 0.0).unwrap();
    let q = ReaperParams::new(1.2, Tilt::Plus, -7.5, 0.0).unwrap();
    let cfg = SolveConfig::default();
    let (u, _) = solve(&BvpPreset::custom(d, reaper_data(p)).unwrap(), &cfg, None).unwrap();
    let (v, _) = solve(&BvpPreset::custom(d, reaper_data(q)).unwrap(), &cfg, None).unwrap();
    let gap = u.zip_with(&v, |a, b| a - b - 7.5).unwrap().max_abs();
    assert!(gap < 1e-9, "{gap}");
}

#[test]
fn helicoid_solution_is_even_under_the_half_turn() {
    let u = solve_helicoid(-4.0, 4.0, 0.1, 4.0);
    let d = *u.domain();
    let mut worst = 0.0f64;
    for j in 0..d.ny() {
        for i in 0..d.nx() {
            let v = u.at(d.nx() - 1 - i, d.ny() - 1 - j);
            worst = worst.max((u.at(i, j) - v).abs());
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn pitchfork_solution_has_small_discrete_residual() {
    let u = solve_pitchfork(-4.0, 4.0, 0.1, 6.0);
    let r = residual(&u).unwrap().max_abs_interior();
    assert!(r < 1e-7, "{r}");
}
