//! Discrete translator operator on a uniform grid.
//!
//! The graph equation `div(Du / W) = -1 / W`, `W^2 = 1 + |Du|^2`, is used in
//! its nondivergence form
//!
//! ```text
//! R(u) = (1 + uy^2) uxx - 2 ux uy uxy + (1 + ux^2) uyy + (1 + ux^2 + uy^2) = 0,
//! ```
//!
//! which is `W^3` times the divergence form. All derivatives are classical
//! second-order central differences, so the linearization couples each
//! interior node to its 3x3 neighbourhood.

use crate::error::{Error, Result};
use crate::fields::{GridDomain, ScalarField};

struct Derivs {
    ux: f64,
    uy: f64,
    uxx: f64,
    uyy: f64,
    uxy: f64,
}

#[inline]
fn derivs(u: &ScalarField, i: usize, j: usize, hx: f64, hy: f64) -> Derivs {
    let c = u.at(i, j);
    let e = u.at(i + 1, j);
    let w = u.at(i - 1, j);
    let n = u.at(i, j + 1);
    let s = u.at(i, j - 1);
    Derivs {
        ux: (e - w) / (2.0 * hx),
        uy: (n - s) / (2.0 * hy),
        uxx: (e - 2.0 * c + w) / (hx * hx),
        uyy: (n - 2.0 * c + s) / (hy * hy),
        uxy: (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1) + u.at(i - 1, j - 1))
            / (4.0 * hx * hy),
    }
}

fn check_grid(d: &GridDomain) -> Result<()> {
    if d.nx() < 3 || d.ny() < 3 {
        return Err(Error::InvalidGrid(
            "residual needs at least a 3x3 grid".into(),
        ));
    }
    Ok(())
}

/// Nondivergence residual at interior nodes; boundary nodes are zero.
pub fn residual(u: &ScalarField) -> Result<ScalarField> {
    let d = *u.domain();
    check_grid(&d)?;
    let (hx, hy) = (d.hx(), d.hy());
    let mut r = ScalarField::zeros(d);
    for j in 1..d.ny() - 1 {
        for i in 1..d.nx() - 1 {
            let q = derivs(u, i, j, hx, hy);
            let v = (1.0 + q.uy * q.uy) * q.uxx - 2.0 * q.ux * q.uy * q.uxy
                + (1.0 + q.ux * q.ux) * q.uyy
                + (1.0 + q.ux * q.ux + q.uy * q.uy);
            r.set(i, j, v);
        }
    }
    Ok(r)
}

/// `R / (1 + |Du|^2)`: the same equation with principal coefficients
/// `I - Du Du^T / W^2`, which stay bounded as the gradient grows.
pub fn scaled_residual(u: &ScalarField) -> Result<ScalarField> {
    let d = *u.domain();
    let mut r = residual(u)?;
    let (hx, hy) = (d.hx(), d.hy());
    for j in 1..d.ny() - 1 {
        for i in 1..d.nx() - 1 {
            let q = derivs(u, i, j, hx, hy);
            let g = 1.0 + q.ux * q.ux + q.uy * q.uy;
            r.set(i, j, r.at(i, j) / g);
        }
    }
    Ok(r)
}

/// Flux-differenced divergence form, scaled by `W^3` at the node so it is
/// directly comparable with [`residual`]. Used as an independent check of the
/// nondivergence expansion.
pub fn divergence_residual(u: &ScalarField) -> Result<ScalarField> {
    let d = *u.domain();
    check_grid(&d)?;
    let (hx, hy) = (d.hx(), d.hy());
    let mut r = ScalarField::zeros(d);
    // x-flux through the face between (i, j) and (i+1, j)
    let flux_x = |i: usize, j: usize| {
        let ux = (u.at(i + 1, j) - u.at(i, j)) / hx;
        let uy = (u.at(i, j + 1) - u.at(i, j - 1) + u.at(i + 1, j + 1) - u.at(i + 1, j - 1))
            / (4.0 * hy);
        ux / (1.0 + ux * ux + uy * uy).sqrt()
    };
    let flux_y = |i: usize, j: usize| {
        let uy = (u.at(i, j + 1) - u.at(i, j)) / hy;
        let ux = (u.at(i + 1, j) - u.at(i - 1, j) + u.at(i + 1, j + 1) - u.at(i - 1, j + 1))
            / (4.0 * hx);
        uy / (1.0 + ux * ux + uy * uy).sqrt()
    };
    for j in 2..d.ny() - 2 {
        for i in 2..d.nx() - 2 {
            let q = derivs(u, i, j, hx, hy);
            let w = (1.0 + q.ux * q.ux + q.uy * q.uy).sqrt();
            let div =
                (flux_x(i, j) - flux_x(i - 1, j)) / hx + (flux_y(i, j) - flux_y(i, j - 1)) / hy;
            r.set(i, j, w * w * w * (div + 1.0 / w));
        }
    }
    Ok(r)
}

/// Exact linearization of [`residual`]: nine coefficients per interior node,
/// ordered `(di, dj)` with `di` fastest, both running over `-1, 0, 1`.
#[derive(Debug, Clone)]
pub struct StencilJacobian {
    domain: GridDomain,
    coeffs: Vec<[f64; 9]>,
}

#[inline]
pub(crate) fn slot(di: isize, dj: isize) -> usize {
    ((di + 1) + 3 * (dj + 1)) as usize
}

impl StencilJacobian {
    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    /// Coefficients of interior node `(i, j)`.
    pub fn stencil(&self, i: usize, j: usize) -> &[f64; 9] {
        &self.coeffs[(j - 1) * (self.domain.nx() - 2) + (i - 1)]
    }

    /// `J v` at interior nodes; boundary nodes are zero.
    pub fn apply(&self, v: &ScalarField) -> Result<ScalarField> {
        let d = self.domain;
        if *v.domain() != d {
            return Err(Error::InvalidGrid(
                "direction lives on a different grid".into(),
            ));
        }
        let mut out = ScalarField::zeros(d);
        for j in 1..d.ny() - 1 {
            for i in 1..d.nx() - 1 {
                let c = self.stencil(i, j);
                let mut acc = 0.0;
                for dj in -1isize..=1 {
                    for di in -1isize..=1 {
                        let vv = v.at((i as isize + di) as usize, (j as isize + dj) as usize);
                        acc += c[slot(di, dj)] * vv;
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }
}

/// Assembles the 9-point Jacobian of [`residual`] at `u`.
pub fn jacobian_assemble(u: &ScalarField) -> Result<StencilJacobian> {
    let d = *u.domain();
    check_grid(&d)?;
    let (hx, hy) = (d.hx(), d.hy());
    let mut coeffs = Vec::with_capacity((d.nx() - 2) * (d.ny() - 2));
    for j in 1..d.ny() - 1 {
        for i in 1..d.nx() - 1 {
            let q = derivs(u, i, j, hx, hy);
            let a = 1.0 + q.uy * q.uy;
            let b = q.ux * q.uy;
            let cc = 1.0 + q.ux * q.ux;
            // partial derivatives of R with respect to ux and uy
            let p = -2.0 * q.uy * q.uxy + 2.0 * q.ux * q.uyy + 2.0 * q.ux;
            let r = 2.0 * q.uy * q.uxx - 2.0 * q.ux * q.uxy + 2.0 * q.uy;

            let mut c = [0.0; 9];
            let (ihx2, ihy2) = (1.0 / (hx * hx), 1.0 / (hy * hy));
            c[slot(-1, 0)] += a * ihx2 - p / (2.0 * hx);
            c[slot(1, 0)] += a * ihx2 + p / (2.0 * hx);
            c[slot(0, -1)] += cc * ihy2 - r / (2.0 * hy);
            c[slot(0, 1)] += cc * ihy2 + r / (2.0 * hy);
            c[slot(0, 0)] += -2.0 * a * ihx2 - 2.0 * cc * ihy2;
            let m = -2.0 * b / (4.0 * hx * hy);
            c[slot(1, 1)] += m;
            c[slot(-1, -1)] += m;
            c[slot(1, -1)] -= m;
            c[slot(-1, 1)] -= m;
            coeffs.push(c);
        }
    }
    Ok(StencilJacobian { domain: d, coeffs })
}

/// Exact linearization of [`scaled_residual`].
pub fn scaled_jacobian_assemble(u: &ScalarField) -> Result<StencilJacobian> {
    let mut jac = jacobian_assemble(u)?;
    let r = residual(u)?;
    let d = *u.domain();
    let (hx, hy) = (d.hx(), d.hy());
    let nx = d.nx() - 2;
    for j in 1..d.ny() - 1 {
        for i in 1..d.nx() - 1 {
            let q = derivs(u, i, j, hx, hy);
            let g = 1.0 + q.ux * q.ux + q.uy * q.uy;
            let s = r.at(i, j) / g;
            let c = &mut jac.coeffs[(j - 1) * nx + (i - 1)];
            // d(R/g) = dR/g - (R/g) dg/g with dg = 2 ux dux + 2 uy duy
            c[slot(1, 0)] -= s * q.ux / hx;
            c[slot(-1, 0)] += s * q.ux / hx;
            c[slot(0, 1)] -= s * q.uy / hy;
            c[slot(0, -1)] += s * q.uy / hy;
            for v in c.iter_mut() {
                *v /= g;
            }
        }
    }
    Ok(jac)
}

/// Second-order part of [`scaled_residual`] with the coefficients frozen at
/// `u`: `L v = (I - Du Du^T / W^2) : D^2 v`, so that `L u + 1` is the scaled
/// residual. Solving `L delta = -S(u)` is one Picard step.
pub fn frozen_coefficient_assemble(u: &ScalarField) -> Result<StencilJacobian> {
    let d = *u.domain();
    check_grid(&d)?;
    let (hx, hy) = (d.hx(), d.hy());
    let (ihx2, ihy2) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let mut coeffs = Vec::with_capacity((d.nx() - 2) * (d.ny() - 2));
    for j in 1..d.ny() - 1 {
        for i in 1..d.nx() - 1 {
            let q = derivs(u, i, j, hx, hy);
            let g = 1.0 + q.ux * q.ux + q.uy * q.uy;
            let (a, b, cc) = (
                (1.0 + q.uy * q.uy) / g,
                q.ux * q.uy / g,
                (1.0 + q.ux * q.ux) / g,
            );
            let mut c = [0.0; 9];
            c[slot(-1, 0)] = a * ihx2;
            c[slot(1, 0)] = a * ihx2;
            c[slot(0, -1)] = cc * ihy2;
            c[slot(0, 1)] = cc * ihy2;
            c[slot(0, 0)] = -2.0 * a * ihx2 - 2.0 * cc * ihy2;
            let m = -2.0 * b / (4.0 * hx * hy);
            c[slot(1, 1)] = m;
            c[slot(-1, -1)] = m;
            c[slot(1, -1)] = -m;
            c[slot(-1, 1)] = -m;
            coeffs.push(c);
        }
    }
    Ok(StencilJacobian { domain: d, coeffs })
}

/// Jacobian-vector product without storing the stencil.
pub fn jacobian_apply(u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    jacobian_assemble(u)?.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{sample_reaper, ReaperParams, Tilt};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn reaper_grid(margin: f64, h: f64) -> ScalarField {
        let d = GridDomain::with_spacing(-1.0, 1.0, margin, PI - margin, h).unwrap();
        ScalarField::from_fn(d, |_, y| y.sin().ln()).unwrap()
    }

    #[test]
    fn zero_field_has_unit_residual() {
        let d = GridDomain::new(0.0, 1.0, 0.0, 1.0, 6, 5).unwrap();
        let r = residual(&ScalarField::zeros(d)).unwrap();
        for j in 0..5 {
            for i in 0..6 {
                let want = if d.is_boundary(i, j) { 0.0 } else { 1.0 };
                assert_eq!(r.at(i, j), want);
            }
        }
    }

    #[test]
    fn scaled_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = GridDomain::new(-1.0, 1.0, -1.0, 1.0, 17, 13).unwrap();
        let u = ScalarField::from_fn(d, |x, y| (2.0 * x).sin() + x * y * y).unwrap();
        let jac = scaled_jacobian_assemble(&u).unwrap();
        let eps = 1e-6;
        for _ in 0..5 {
            let v = smooth_direction(d, &mut rng);
            let jv = jac.apply(&v).unwrap();
            let up = u.zip_with(&v, |a, b| a + eps * b).unwrap();
            let (r0, r1) = (scaled_residual(&u).unwrap(), scaled_residual(&up).unwrap());
            let fd = r1.zip_with(&r0, |a, b| (a - b) / eps).unwrap();
            let err = fd.zip_with(&jv, |a, b| a - b).unwrap().max_abs();
            assert!(err <= 1e-5 * (1.0 + jv.max_abs()), "{err}");
        }
    }

    #[test]
    fn grim_reaper_residual_is_second_order() {
        let r1 = residual(&reaper_grid(0.5, 0.01))
            .unwrap()
            .max_abs_interior();
        let r2 = residual(&reaper_grid(0.5, 0.005))
            .unwrap()
            .max_abs_interior();
        assert!(r1 <= 1e-3, "h=0.01 residual {r1}");
        assert!(r1 / r2 >= 3.5, "ratio {}", r1 / r2);
    }

    #[test]
    fn tilted_reaper_residual() {
        let p = ReaperParams::new(2.0, Tilt::Plus, 0.0, 0.0).unwrap();
        for &h in &[0.01, 0.005] {
            let d = GridDomain::with_spacing(-2.0, 2.0, -2.0, 2.0, h).unwrap();
            let u = sample_reaper(&p, d).unwrap();
            let r = residual(&u).unwrap().max_abs_interior();
            assert!(r <= 10.0 * h * h, "h={h}: {r}");
        }
    }

    #[test]
    fn divergence_form_agrees_with_expansion() {
        let mut prev = None;
        let p = ReaperParams::new(2.0, Tilt::Plus, 0.0, 0.0).unwrap();
        for &h in &[0.02, 0.01] {
            let d = GridDomain::with_spacing(-2.0, 2.0, -2.0, 2.0, h).unwrap();
            let u = sample_reaper(&p, d).unwrap();
            let a = residual(&u).unwrap();
            let b = divergence_residual(&u).unwrap();
            let d = *u.domain();
            let mut gap = 0.0f64;
            for j in 2..d.ny() - 2 {
                for i in 2..d.nx() - 2 {
                    gap = gap.max((a.at(i, j) - b.at(i, j)).abs());
                }
            }
            if let Some(p) = prev {
                assert!(p / gap > 3.5, "gap ratio {}", p / gap);
            }
            prev = Some(gap);
        }
    }

    fn smooth_direction(d: GridDomain, rng: &mut ChaCha8Rng) -> ScalarField {
        let (a, b, c, e) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(-1.0..1.0),
        );
        ScalarField::from_fn(d, |x, y| a * (b * x).sin() * (c * y).cos() + e * x * y).unwrap()
    }

    #[test]
    fn jacobian_matches_directional_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = GridDomain::new(-1.0, 1.0, 0.2, 2.8, 17, 21).unwrap();
        let u = ScalarField::from_fn(d, |x, y| y.sin().ln() + 0.3 * x * x - 0.2 * x * y).unwrap();
        let j = jacobian_assemble(&u).unwrap();
        let r0 = residual(&u).unwrap();
        let eps = 1e-6;
        for _ in 0..5 {
            let v = smooth_direction(d, &mut rng);
            let up = u.zip_with(&v, |a, b| a + eps * b).unwrap();
            let fd = residual(&up)
                .unwrap()
                .zip_with(&r0, |a, b| (a - b) / eps)
                .unwrap();
            let jv = j.apply(&v).unwrap();
            let err = fd.zip_with(&jv, |a, b| a - b).unwrap().max_abs();
            assert!(err <= 1e-5 * jv.max_abs(), "rel err {}", err / jv.max_abs());
        }
    }

    #[test]
    fn frozen_operator_reproduces_the_scaled_residual() {
        let d = GridDomain::new(-1.0, 1.0, -0.7, 0.9, 15, 13).unwrap();
        let u = ScalarField::from_fn(d, |x, y| (1.3 * x).sin() * y + 0.4 * x * x).unwrap();
        let lu = frozen_coefficient_assemble(&u).unwrap().apply(&u).unwrap();
        let s = scaled_residual(&u).unwrap();
        for j in 1..d.ny() - 1 {
            for i in 1..d.nx() - 1 {
                assert!((lu.at(i, j) + 1.0 - s.at(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linearization_at_flat_state_is_laplacian() {
        let d = GridDomain::new(0.0, 1.0, 0.0, 2.0, 9, 13).unwrap();
        let j = jacobian_assemble(&ScalarField::zeros(d)).unwrap();
        let (hx, hy) = (d.hx(), d.hy());
        let s = j.stencil(4, 6);
        let want = [
            0.0,
            1.0 / (hy * hy),
            0.0,
            1.0 / (hx * hx),
            -2.0 / (hx * hx) - 2.0 / (hy * hy),
            1.0 / (hx * hx),
            0.0,
            1.0 / (hy * hy),
            0.0,
        ];
        for k in 0..9 {
            assert!(
                (s[k] - want[k]).abs() < 1e-9,
                "slot {k}: {} vs {}",
                s[k],
                want[k]
            );
        }
    }

    #[test]
    fn jacobian_commutes_with_reflection_for_even_fields() {
        let d = GridDomain::new(-1.0, 1.0, 0.0, 1.0, 11, 7).unwrap();
        let u = ScalarField::from_fn(d, |x, y| x * x * y + (1.0 + y).ln()).unwrap();
        let v = ScalarField::from_fn(d, |x, y| x + x * x * y - y * y * x).unwrap();
        let reflect = |f: &ScalarField| {
            let vals = (0..d.ny())
                .flat_map(|j| (0..d.nx()).map(move |i| (i, j)))
                .map(|(i, j)| f.at(d.nx() - 1 - i, j))
                .collect();
            ScalarField::new(d, vals).unwrap()
        };
        let j = jacobian_assemble(&u).unwrap();
        let a = reflect(&j.apply(&v).unwrap());
        let b = j.apply(&reflect(&v)).unwrap();
        let gap = a.zip_with(&b, |p, q| p - q).unwrap().max_abs();
        assert!(gap < 1e-10 * a.max_abs().max(1.0), "{gap}");
    }
}
