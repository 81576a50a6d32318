//! Closed-form translators: tilted grim reapers and the far-left slope
//! profile of a pitchfork.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{GridDomain, ScalarField};

/// Sign of the linear term of a tilted grim reaper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tilt {
    Plus,
    Minus,
    None,
}

impl Tilt {
    pub fn sign(self) -> f64 {
        match self {
            Tilt::Plus => 1.0,
            Tilt::Minus => -1.0,
            Tilt::None => 0.0,
        }
    }

    pub fn from_sign(s: f64) -> Tilt {
        if s > 0.0 {
            Tilt::Plus
        } else if s < 0.0 {
            Tilt::Minus
        } else {
            Tilt::None
        }
    }
}

/// `f(x, y) = c^2 log cos((y - y_center) / c) + tilt * x * sqrt(c^2 - 1) + shift`
/// over the strip `|y - y_center| < c * pi / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReaperParams {
    c: f64,
    tilt: Tilt,
    pub shift: f64,
    pub y_center: f64,
}

impl ReaperParams {
    pub fn new(c: f64, tilt: Tilt, shift: f64, y_center: f64) -> Result<Self> {
        if !(c >= 1.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must be ≥ 1, got {c}")));
        }
        if tilt == Tilt::None && c != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "an untilted reaper needs c = 1, got c = {c}"
            )));
        }
        if !shift.is_finite() || !y_center.is_finite() {
            return Err(Error::InvalidParameter(
                "shift and y_center must be finite".into(),
            ));
        }
        Ok(ReaperParams {
            c,
            tilt,
            shift,
            y_center,
        })
    }

    /// The standard grim reaper `log cos y`.
    pub fn grim_reaper() -> Self {
        ReaperParams {
            c: 1.0,
            tilt: Tilt::None,
            shift: 0.0,
            y_center: 0.0,
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tilt(&self) -> Tilt {
        self.tilt
    }

    /// Half-width of the strip, `c * pi / 2`.
    pub fn half_width(&self) -> f64 {
        self.c * PI / 2.0
    }

    /// The constant x-slope `tilt * sqrt(c^2 - 1)`.
    pub fn slope_x(&self) -> f64 {
        self.tilt.sign() * ((self.c - 1.0) * (self.c + 1.0)).sqrt()
    }

    fn check_strip(&self, y: f64) -> Result<f64> {
        let offset = y - self.y_center;
        let half_width = self.half_width();
        if !(offset.abs() < half_width - 1e-9) {
            return Err(Error::OutsideReaperStrip {
                offset: offset.abs(),
                half_width,
            });
        }
        Ok(offset)
    }
}

pub fn reaper_eval(p: &ReaperParams, x: f64, y: f64) -> Result<f64> {
    let off = p.check_strip(y)?;
    Ok(p.c * p.c * (off / p.c).cos().ln() + p.slope_x() * x + p.shift)
}

/// `f_y = -c tan((y - y_center) / c)`.
pub fn reaper_dy(p: &ReaperParams, _x: f64, y: f64) -> Result<f64> {
    let off = p.check_strip(y)?;
    Ok(-p.c * (off / p.c).tan())
}

pub fn reaper_dx(p: &ReaperParams, _x: f64, y: f64) -> Result<f64> {
    p.check_strip(y)?;
    Ok(p.slope_x())
}

/// A tilted grim reaper centered on `y = 0` and a height `y` at which its
/// gradient equals `v` for every x.
///
/// `c = sqrt(1 + v1^2)` so the strip half-width `c pi / 2` is at least
/// `pi / 2`; the tilt takes the sign of `v1`.
pub fn reaper_for_gradient(v: [f64; 2]) -> (ReaperParams, f64) {
    let c = v[0].hypot(1.0);
    let tilt = Tilt::from_sign(v[0]);
    let c = if tilt == Tilt::None { 1.0 } else { c };
    let y = -c * (v[1] / c).atan();
    (
        ReaperParams {
            c,
            tilt,
            shift: 0.0,
            y_center: 0.0,
        },
        y,
    )
}

/// Limit of `f_y` at the far left end of a pitchfork of width `w`:
/// `(w / pi) cot(pi y / w)` for `0 < y < w`.
pub fn psi(w: f64, y: f64) -> Result<f64> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "width must be positive, got {w}"
        )));
    }
    if !(y > 0.0 && y < w) {
        return Err(Error::OutsideDomain(format!(
            "psi needs 0 < y < {w}, got {y}"
        )));
    }
    let t = PI * y / w;
    let v = (w / PI) * t.cos() / t.sin();
    if !v.is_finite() {
        return Err(Error::OutsideDomain(format!("psi overflows at y = {y}")));
    }
    Ok(v)
}

/// Samples a reaper onto every node of `domain`.
pub fn sample_reaper(p: &ReaperParams, domain: GridDomain) -> Result<ScalarField> {
    ScalarField::try_from_fn(domain, |x, y| reaper_eval(p, x, y))
}

/// The asymptotic model at the far left of a pitchfork of width `w`:
/// `(w/pi)^2 log sin(pi y / w) - x sqrt(w^2/pi^2 - 1) + shift`.
pub fn pitchfork_left_model(w: f64, shift: f64) -> Result<ReaperParams> {
    let c = w / PI;
    let tilt = if c == 1.0 { Tilt::None } else { Tilt::Minus };
    ReaperParams::new(c, tilt, shift, w / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reaper_values() {
        let g = ReaperParams::grim_reaper();
        assert_eq!(reaper_eval(&g, 5.0, 0.0).unwrap(), 0.0);
        assert!((reaper_eval(&g, 0.0, PI / 3.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let t = ReaperParams::new(2.0, Tilt::Plus, 0.0, 0.0).unwrap();
        assert!((reaper_eval(&t, 1.0, 0.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            reaper_eval(&g, 0.0, 1.6),
            Err(Error::OutsideReaperStrip { .. })
        ));
        assert!(reaper_eval(&g, 0.0, -PI / 2.0).is_err());
    }

    #[test]
    fn reaper_slopes() {
        let g = ReaperParams::grim_reaper();
        assert_eq!(reaper_dy(&g, 3.0, 0.0).unwrap(), 0.0);
        assert!((reaper_dy(&g, 0.0, PI / 4.0).unwrap() + 1.0).abs() < 1e-15);
        let t = ReaperParams::new(2.0, Tilt::Minus, 1.0, 0.0).unwrap();
        let want = -2.0 * (PI / 8.0).tan();
        assert!((reaper_dy(&t, 0.0, PI / 4.0).unwrap() - want).abs() < 1e-15);
        assert!((want + 0.8284271).abs() < 1e-7);
        let t2 = ReaperParams::new(2.0, Tilt::Plus, 0.0, 0.7).unwrap();
        assert_eq!(reaper_dy(&t2, -4.0, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(ReaperParams::new(0.5, Tilt::Plus, 0.0, 0.0).is_err());
        assert!(ReaperParams::new(2.0, Tilt::None, 0.0, 0.0).is_err());
        assert!(ReaperParams::new(1.0, Tilt::None, 0.0, 0.0).is_ok());
    }

    #[test]
    fn gradient_inverse_examples() {
        let (p, y) = reaper_for_gradient([0.0, 0.0]);
        assert_eq!((p.c(), p.tilt(), y), (1.0, Tilt::None, 0.0));
        let (p, y) = reaper_for_gradient([3f64.sqrt(), 0.0]);
        assert!((p.c() - 2.0).abs() < 1e-15 && p.tilt() == Tilt::Plus && y == 0.0);
        let (p, y) = reaper_for_gradient([0.0, 1.0]);
        assert_eq!(p.c(), 1.0);
        assert!((y + PI / 4.0).abs() < 1e-15);
        assert!((reaper_dy(&p, 0.0, y).unwrap().abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi_values() {
        assert!(psi(PI, PI / 2.0).unwrap().abs() < 1e-15);
        assert!((psi(PI, PI / 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((psi(2.0 * PI, PI / 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(psi(PI, 0.0).is_err());
        assert!(psi(PI, PI).is_err());
        assert!(psi(PI, 4.0).is_err());
    }

    #[test]
    fn psi_matches_left_model_slope() {
        for &w in &[PI, 4.0, 7.5] {
            let m = pitchfork_left_model(w, 0.0).unwrap();
            for k in 1..20 {
                let y = w * k as f64 / 20.0;
                let a = reaper_dy(&m, 0.0, y).unwrap();
                let b = psi(w, y).unwrap();
                assert!(
                    (a - b).abs() < 1e-12 * (1.0 + b.abs()),
                    "w={w} y={y}: {a} vs {b}"
                );
            }
        }
    }
}
