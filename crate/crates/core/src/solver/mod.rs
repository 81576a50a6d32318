//! Damped Newton solver with continuation in the cap magnitude.

mod discrete;
mod presets;

pub use discrete::{
    divergence_residual, frozen_coefficient_assemble, jacobian_apply, jacobian_assemble, residual,
    scaled_jacobian_assemble, scaled_residual, StencilJacobian,
};
pub use presets::{BvpPreset, Family};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::{BoundarySpec, GridDomain, ScalarField};
use discrete::slot;
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub max_newton_iters: usize,
    /// Max-norm tolerance on the scaled discrete residual.
    pub residual_tol: f64,
    /// Step-length reduction factor for backtracking.
    pub damping: f64,
    pub max_halvings: usize,
    /// Intermediate caps, strictly increasing. Caps at or above the preset's
    /// own cap are skipped; the preset's cap is always the last step.
    pub continuation_caps: Vec<f64>,
    /// Relative tolerance on the Newton-step linear residual.
    pub linear_solver_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_newton_iters: 50,
            residual_tol: 1e-10,
            damping: 0.5,
            max_halvings: 20,
            continuation_caps: vec![1.0, 2.0, 4.0, 6.0, 8.0],
            linear_solver_tol: 1e-12,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) || !(self.linear_solver_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping must be in (0, 1), got {}",
                self.damping
            )));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_newton_iters must be ≥ 1".into(),
            ));
        }
        if self
            .continuation_caps
            .iter()
            .any(|c| !(*c > 0.0) || !c.is_finite())
            || self.continuation_caps.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::InvalidParameter(
                "continuation_caps must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    fn schedule(&self, final_cap: f64, cap_dependent: bool) -> Vec<f64> {
        if !cap_dependent {
            return vec![final_cap];
        }
        let mut caps: Vec<f64> = self
            .continuation_caps
            .iter()
            .copied()
            .filter(|&c| c < final_cap)
            .collect();
        caps.push(final_cap);
        caps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Newton,
    /// Frozen-coefficient step `L(u) delta = -S(u)`.
    Picard,
    PseudoTime,
}

impl StepKind {
    fn label(self) -> &'static str {
        match self {
            StepKind::Newton => "newton",
            StepKind::Picard => "picard",
            StepKind::PseudoTime => "pseudo-time",
        }
    }
}

/// Newton history for one cap value.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub cap: f64,
    /// Max-norm residual before each Newton update, then after the last one.
    pub residuals: Vec<f64>,
    /// Accepted damping factor of each update.
    pub step_lengths: Vec<f64>,
    /// Pseudo-time shift `1 / dt` of each update; zero otherwise.
    pub shifts: Vec<f64>,
    pub kinds: Vec<StepKind>,
    pub converged: bool,
    /// Inserted after a stall of the following step.
    pub intermediate: bool,
}

impl StepReport {
    pub fn iterations(&self) -> usize {
        self.step_lengths.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub family: String,
    pub nx: usize,
    pub ny: usize,
    pub steps: Vec<StepReport>,
    pub final_cap: f64,
    /// Max-norm of the scaled residual, the quantity held to `residual_tol`.
    pub final_residual: f64,
    /// Max-norm of the unscaled nondivergence residual.
    pub final_raw_residual: f64,
    pub retries: usize,
    pub margin: Option<f64>,
    pub cap_margin_ok: Option<bool>,
}

impl ConvergenceReport {
    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(StepReport::iterations).sum()
    }

    /// `key=value` summary followed by a per-iteration residual table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "family={}", self.family);
        let _ = writeln!(s, "nx={}", self.nx);
        let _ = writeln!(s, "ny={}", self.ny);
        let _ = writeln!(s, "status=converged");
        let _ = writeln!(s, "continuation_steps={}", self.steps.len());
        let _ = writeln!(s, "total_newton_iterations={}", self.total_iterations());
        let _ = writeln!(s, "retries={}", self.retries);
        let _ = writeln!(s, "final_cap={:?}", self.final_cap);
        let _ = writeln!(s, "final_residual={:e}", self.final_residual);
        let _ = writeln!(s, "final_raw_residual={:e}", self.final_raw_residual);
        if let Some(m) = self.margin {
            let _ = writeln!(s, "margin={m:?}");
        }
        if let Some(ok) = self.cap_margin_ok {
            let _ = writeln!(s, "cap_margin_ok={ok}");
        }
        let caps: Vec<String> = self
            .steps
            .iter()
            .map(|st| format!("{:?}", st.cap))
            .collect();
        let _ = writeln!(s, "caps={}", caps.join(","));
        let iters: Vec<String> = self
            .steps
            .iter()
            .map(|st| st.iterations().to_string())
            .collect();
        let _ = writeln!(s, "iterations_per_cap={}", iters.join(","));
        let _ = writeln!(s, "# step cap iteration residual step_length shift kind");
        for (k, st) in self.steps.iter().enumerate() {
            for (it, r) in st.residuals.iter().enumerate() {
                let lam = st
                    .step_lengths
                    .get(it)
                    .map_or("-".to_string(), |l| format!("{l:?}"));
                let sh = st
                    .shifts
                    .get(it)
                    .map_or("-".to_string(), |l| format!("{l:e}"));
                let kind = st.kinds.get(it).map_or("-", |k| k.label());
                let _ = writeln!(s, "{k} {:?} {it} {r:e} {lam} {sh} {kind}", st.cap);
            }
        }
        s
    }
}

/// Coons-patch interpolation of the capped boundary values, clamped to the
/// range of those values (and to `[-M, M]` when the data depends on the cap).
pub fn default_init(preset: &BvpPreset) -> Result<ScalarField> {
    init_from_boundary(&preset.truncation, &preset.boundary)
}

fn init_from_boundary(d: &GridDomain, boundary: &BoundarySpec) -> Result<ScalarField> {
    let mut u = ScalarField::zeros(*d);
    boundary.apply(&mut u)?;
    let (nx, ny) = (d.nx(), d.ny());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, j) in crate::fields::boundary_nodes(d) {
        lo = lo.min(u.at(i, j));
        hi = hi.max(u.at(i, j));
    }
    if boundary.depends_on_cap() {
        let m = boundary.cap();
        lo = lo.max(-m);
        hi = hi.min(m).max(lo);
    }
    let (b00, b10, b01, b11) = (
        u.at(0, 0),
        u.at(nx - 1, 0),
        u.at(0, ny - 1),
        u.at(nx - 1, ny - 1),
    );
    for j in 1..ny - 1 {
        let t = j as f64 / (ny - 1) as f64;
        let (left, right) = (u.at(0, j), u.at(nx - 1, j));
        for i in 1..nx - 1 {
            let s = i as f64 / (nx - 1) as f64;
            let (bot, top) = (u.at(i, 0), u.at(i, ny - 1));
            let v = (1.0 - s) * left + s * right + (1.0 - t) * bot + t * top
                - ((1.0 - s) * (1.0 - t) * b00
                    + s * (1.0 - t) * b10
                    + (1.0 - s) * t * b01
                    + s * t * b11);
            u.set(i, j, v.clamp(lo, hi));
        }
    }
    Ok(u)
}

/// Solves `(A - shift I) delta = -r` over the interior unknowns, with `A`
/// the stencil operator restricted to them (boundary values held fixed).
fn linear_step(
    a: &StencilJacobian,
    r: &ScalarField,
    shift: f64,
    linear_tol: f64,
) -> Result<ScalarField> {
    let d = *r.domain();
    let (mx, my) = (d.nx() - 2, d.ny() - 2);
    let id = |i: usize, j: usize| (j - 1) * mx + (i - 1);
    let n = mx * my;
    let mut triplets = Vec::with_capacity(9 * n);
    let mut rhs = Col::<f64>::zeros(n);
    for j in 1..d.ny() - 1 {
        for i in 1..d.nx() - 1 {
            let row = id(i, j);
            rhs[row] = -r.at(i, j);
            let c = a.stencil(i, j);
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                    if d.is_boundary(ii, jj) {
                        continue;
                    }
                    let mut v = c[slot(di, dj)];
                    if di == 0 && dj == 0 {
                        v -= shift;
                    }
                    triplets.push(Triplet::new(row, id(ii, jj), v));
                }
            }
        }
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::InvalidParameter(format!("sparse assembly failed: {e:?}")))?;
    let lu = m.sp_lu().map_err(|_| Error::SingularMatrix(0))?;
    let mut x = lu.solve(&rhs);
    let scale = rhs.norm_max().max(1.0);
    for _ in 0..3 {
        let res = &rhs - &m * &x;
        if !(res.norm_max() > linear_tol * scale) {
            break;
        }
        x += lu.solve(&res);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix(0));
    }
    let mut delta = ScalarField::zeros(d);
    for j in 1..d.ny() - 1 {
        for i in 1..d.nx() - 1 {
            delta.set(i, j, x[id(i, j)]);
        }
    }
    Ok(delta)
}

fn norms(r: &ScalarField) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sq = 0.0;
    for v in r.values() {
        max = max.max(v.abs());
        sq += v * v;
    }
    (max, sq.sqrt())
}

/// Pseudo-time steps allowed per cap on top of the Newton budget.
const MAX_PSEUDO_STEPS: usize = 400;
/// Backtracking below this step length hands over to pseudo-time stepping.
const MIN_USEFUL_STEP: f64 = 1.0 / 16.0;

fn step(u: &ScalarField, delta: &ScalarField, lambda: f64) -> ScalarField {
    let mut trial = u.clone();
    for (t, dv) in trial.values_mut().iter_mut().zip(delta.values()) {
        *t += lambda * dv;
    }
    trial
}

/// Newton iteration at a single cap. `u` already carries that cap's
/// boundary values.
///
/// Damped Newton with backtracking on the scaled residual. When
/// backtracking only admits short steps the iteration takes Picard steps
/// (the equation linearized with frozen coefficients) until the residual has
/// dropped tenfold, then tries Newton again. If a Picard step fails to
/// reduce the residual it falls back to implicit pseudo-time stepping
/// `(J - I / dt) delta = -r`, growing the time step as the residual falls
/// and returning to Newton once `1 / dt` is negligible.
fn newton_at_cap(
    mut u: ScalarField,
    cap: f64,
    cfg: &SolveConfig,
) -> (std::result::Result<ScalarField, Error>, StepReport) {
    enum Mode {
        Newton,
        Picard { target: f64 },
        Pseudo { shift: f64 },
    }
    let mut rep = StepReport {
        cap,
        residuals: Vec::new(),
        step_lengths: Vec::new(),
        shifts: Vec::new(),
        kinds: Vec::new(),
        converged: false,
        intermediate: false,
    };
    let mut r = match scaled_residual(&u) {
        Ok(r) => r,
        Err(e) => return (Err(e), rep),
    };
    let (mut rmax, mut rl2) = norms(&r);
    let (mut newton_steps, mut extra_steps) = (0usize, 0usize);
    let mut mode = Mode::Newton;
    let diverged = |rep| (Err(Error::Diverged { cap }), rep);
    loop {
        rep.residuals.push(rmax);
        if !rmax.is_finite() {
            return diverged(rep);
        }
        if rmax <= cfg.residual_tol {
            rep.converged = true;
            return (Ok(u), rep);
        }
        if newton_steps >= cfg.max_newton_iters || extra_steps >= MAX_PSEUDO_STEPS {
            break;
        }
        let (op, shift) = match mode {
            Mode::Newton => (scaled_jacobian_assemble(&u), 0.0),
            Mode::Picard { .. } => (frozen_coefficient_assemble(&u), 0.0),
            Mode::Pseudo { shift } => (scaled_jacobian_assemble(&u), shift),
        };
        let delta = match op.and_then(|a| linear_step(&a, &r, shift, cfg.linear_solver_tol)) {
            Ok(d) => d,
            Err(Error::SingularMatrix(_)) => return diverged(rep),
            Err(e) => return (Err(e), rep),
        };
        let trial_of = |lambda: f64| {
            let trial = step(&u, &delta, lambda);
            scaled_residual(&trial).ok().and_then(|rt| {
                let (tmax, tl2) = norms(&rt);
                tmax.is_finite().then_some((trial, rt, tmax, tl2))
            })
        };
        match mode {
            Mode::Picard { target } => {
                extra_steps += 1;
                match trial_of(1.0) {
                    Some((nu, nr, nmax, nl2)) if nl2 < rl2 => {
                        rep.step_lengths.push(1.0);
                        rep.shifts.push(0.0);
                        rep.kinds.push(StepKind::Picard);
                        u = nu;
                        r = nr;
                        (rmax, rl2) = (nmax, nl2);
                        if rl2 <= target {
                            mode = Mode::Newton;
                        }
                    }
                    _ => {
                        rep.residuals.pop();
                        mode = Mode::Pseudo { shift: 1.0 };
                    }
                }
            }
            Mode::Pseudo { shift } => {
                extra_steps += 1;
                match trial_of(1.0) {
                    Some((nu, nr, nmax, nl2)) if nl2 < 10.0 * rl2 => {
                        rep.step_lengths.push(1.0);
                        rep.shifts.push(shift);
                        rep.kinds.push(StepKind::PseudoTime);
                        // switched evolution relaxation: dt scales with 1 / |r|
                        let next = (shift * nl2 / rl2).clamp(shift / 10.0, 2.0 * shift);
                        mode = if next < 1e-8 {
                            Mode::Newton
                        } else {
                            Mode::Pseudo { shift: next }
                        };
                        u = nu;
                        r = nr;
                        (rmax, rl2) = (nmax, nl2);
                    }
                    _ => {
                        rep.residuals.pop();
                        if shift * 4.0 > 1e12 {
                            break;
                        }
                        mode = Mode::Pseudo { shift: shift * 4.0 };
                    }
                }
            }
            Mode::Newton => {
                newton_steps += 1;
                let mut lambda = 1.0;
                let mut accepted = None;
                for _ in 0..=cfg.max_halvings {
                    if let Some(t) = trial_of(lambda) {
                        if t.3 < rl2 || t.2 <= cfg.residual_tol {
                            accepted = Some(t);
                            break;
                        }
                    }
                    lambda *= cfg.damping;
                }
                let picard = Mode::Picard { target: rl2 / 10.0 };
                match accepted {
                    Some((nu, nr, nmax, nl2)) => {
                        rep.step_lengths.push(lambda);
                        rep.shifts.push(0.0);
                        rep.kinds.push(StepKind::Newton);
                        u = nu;
                        r = nr;
                        (rmax, rl2) = (nmax, nl2);
                        if lambda < MIN_USEFUL_STEP {
                            mode = picard;
                        }
                    }
                    None => {
                        rep.residuals.pop();
                        mode = picard;
                    }
                }
            }
        }
    }
    if rep.residuals.len() == rep.step_lengths.len() {
        rep.residuals.push(rmax);
    }
    (
        Err(Error::Stalled {
            cap,
            residual: rmax,
            last_iterate: Box::new(u),
        }),
        rep,
    )
}

fn reseed(prev: &ScalarField, boundary: &BoundarySpec) -> Result<ScalarField> {
    let mut u = prev.clone();
    boundary.apply(&mut u)?;
    Ok(u)
}

/// Solves the preset at its cap, continuing through the configured
/// intermediate caps. A stalled step is retried once after inserting the
/// geometric mean of the neighbouring caps.
pub fn solve(
    preset: &BvpPreset,
    cfg: &SolveConfig,
    init: Option<&ScalarField>,
) -> Result<(ScalarField, ConvergenceReport)> {
    cfg.validate()?;
    let d = preset.truncation;
    preset.boundary.validate_for(&d)?;
    let schedule = cfg.schedule(preset.boundary.cap(), preset.boundary.depends_on_cap());

    let first = preset.boundary.with_cap(schedule[0])?;
    let mut u = match init {
        Some(f) => {
            if *f.domain() != d {
                return Err(Error::InvalidGrid(
                    "initial guess lives on a different grid".into(),
                ));
            }
            reseed(f, &first)?
        }
        None => init_from_boundary(&d, &first)?,
    };

    let mut steps = Vec::new();
    let mut retries = 0;
    let mut prev_cap: Option<f64> = None;
    for &cap in &schedule {
        let bc = preset.boundary.with_cap(cap)?;
        let seed = reseed(&u, &bc)?;
        let (out, rep) = newton_at_cap(seed, cap, cfg);
        steps.push(rep);
        match out {
            Ok(v) => u = v,
            Err(e) if e.is_numerical() && retries == 0 => {
                retries += 1;
                let mid = match prev_cap {
                    Some(p) => (p * cap).sqrt(),
                    None => 0.5 * cap,
                };
                let (mid_out, mut mid_rep) =
                    newton_at_cap(reseed(&u, &preset.boundary.with_cap(mid)?)?, mid, cfg);
                mid_rep.intermediate = true;
                steps.push(mid_rep);
                let mid_u = mid_out?;
                let (out2, rep2) = newton_at_cap(reseed(&mid_u, &bc)?, cap, cfg);
                steps.push(rep2);
                u = out2?;
            }
            Err(e) => return Err(e),
        }
        prev_cap = Some(cap);
    }

    let final_residual = scaled_residual(&u)?.max_abs();
    let final_raw_residual = residual(&u)?.max_abs();
    let report = ConvergenceReport {
        family: preset.name().to_string(),
        nx: d.nx(),
        ny: d.ny(),
        steps,
        final_cap: preset.boundary.cap(),
        final_residual,
        final_raw_residual,
        retries,
        margin: preset.margin(),
        cap_margin_ok: preset.cap_margin_ok(),
    };
    Ok((u, report))
}
