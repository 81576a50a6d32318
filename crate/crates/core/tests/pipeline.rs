mod common;

use std::f64::consts::PI;

use common::*;
use translab::analysis::{image_hausdorff, ridge};
use translab::morse_rado::{count_ends, critical_points, extract_zero_set, shifted_difference};
use translab::solver::{solve, BvpPreset, SolveConfig};
use translab::GridDomain;

#[test]
fn shifted_pitchfork_difference_has_a_junction_at_its_critical_point() {
    let u = solve_pitchfork(-8.0, 8.0, 0.1, 6.0);
    let g = shifted_difference(&u, &u, [0.3, 0.2]).unwrap();
    let p = critical_points(&g, (f64::NEG_INFINITY, f64::INFINITY), f64::INFINITY)
        .into_iter()
        .min_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm))
        .unwrap();
    let net = extract_zero_set(&g.map(|v| v - p.value).unwrap(), 0.0);
    assert!(!net.has_cycle());
    let h = g.domain().hx().max(g.domain().hy());
    let near = net
        .junctions()
        .map(|j| (j.x - p.x).hypot(j.y - p.y))
        .fold(f64::INFINITY, f64::min);
    assert!(near <= 2.0 * h, "nearest junction {near}");
}

#[test]
fn solver_differences_have_no_cycles() {
    let u = solve_pitchfork(-6.0, 6.0, 0.1, 6.0);
    for v in [[0.5, 0.0], [1.0, 0.3], [-0.7, 0.4], [2.0, -0.2]] {
        let g = shifted_difference(&u, &u, v).unwrap();
        for iso in [0.0, 0.1, -0.3] {
            let net = extract_zero_set(&g, iso);
            assert!(!net.has_cycle(), "v={v:?} iso={iso}");
        }
    }
    let w = solve_pitchfork(-6.0, 6.0, 0.1, 4.0);
    let g = u.zip_with(&w, |a, b| a - b).unwrap();
    assert!(!extract_zero_set(&g, 0.0).has_cycle());
}

#[test]
fn shifted_helicoid_difference_has_four_ends() {
    let u = solve_helicoid(-8.0, 8.0, 0.1, 6.0);
    let g = shifted_difference(&u, &u, [0.3, 0.2]).unwrap();
    let p = critical_points(&g, (f64::NEG_INFINITY, f64::INFINITY), f64::INFINITY)
        .into_iter()
        .min_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm))
        .unwrap();
    let net = extract_zero_set(&g.map(|v| v - p.value).unwrap(), 0.0);
    assert!(!net.has_cycle());
    let c = net.component_near(p.x, p.y).unwrap();
    let ends: usize = count_ends(&net, c, &[]).unwrap().values().sum();
    assert!(ends >= 4, "{ends} ends");
}

#[test]
fn capped_yeti_ridge_stays_above_quarter_pi() {
    let d = GridDomain::with_spacing(-6.0, 6.0, 0.05, 6.0, 0.1).unwrap();
    let pre = BvpPreset::yeti(d, 4.0).unwrap();
    let (u, _) = solve(&pre, &SolveConfig::default(), None).unwrap();
    let r = ridge(&u, (1.0, 6.0), (d.y_min(), d.y_max()));
    assert!(!r.points.is_empty());
    assert!(r.max_residual() < 1e-10);
    for p in &r.points {
        assert!(p.y > PI / 4.0 - d.hy(), "ridge at ({}, {})", p.x, p.y);
    }
}

#[test]
fn gauss_images_agree_across_left_truncations() {
    let a = solve_pitchfork(-12.0, 12.0, 0.1, 6.0);
    let b = solve_pitchfork(-11.0, 12.0, 0.1, 6.0);
    let h = image_hausdorff(&a, &b, 2).unwrap();
    assert!(h <= 0.05, "{h}");
}
