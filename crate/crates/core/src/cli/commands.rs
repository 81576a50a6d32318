use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::*;
use super::{Outcome, Resolved, EXIT_NUMERICAL, EXIT_OK};
use crate::analysis::{
    descent_witnesses, gauss_map_sample, image_hausdorff, left_slope_profile, profile_gap, ridge,
    translated_profile,
};
use crate::assembly::{
    assemble, duplicate_vertices, graph_to_mesh, helicoid_piece, helicoid_translation,
    pitchfork_piece, point_set_gap, self_intersections, to_obj, AssemblyFamily, WELD_TOL,
};
use crate::error::{Error, Result};
use crate::fields::{read_field, upward_normal, write_field, GridDomain, ScalarField};
use crate::morse_rado::{
    count_ends, critical_points, extract_zero_set, shifted_difference, EndKind,
};
use crate::oracles::{pitchfork_left_model, psi, sample_reaper, ReaperParams, Tilt};
use crate::solver::{default_init, solve, BvpPreset, SolveConfig};

/// Largest mesh the embedding check is run on.
const EMBED_MAX_TRIANGLES: usize = 5000;

fn echo<T: Serialize>(section: &str, p: &T) -> String {
    let body = toml::to_string(p).unwrap_or_else(|e| format!("# unserializable: {e}\n"));
    format!("# resolved config\n[{section}]\n{body}\n")
}

fn required(p: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let path = p
        .clone()
        .ok_or_else(|| Error::Config(format!("missing required parameter `{name}`")))?;
    if !path.is_file() {
        return Err(Error::Config(format!(
            "{name}: no such file {}",
            path.display()
        )));
    }
    Ok(path)
}

fn optional(p: &Option<PathBuf>, name: &str) -> Result<()> {
    match p {
        Some(path) if !path.is_file() => Err(Error::Config(format!(
            "{name}: no such file {}",
            path.display()
        ))),
        _ => Ok(()),
    }
}

/// Path checks done before any compute.
pub fn validate_inputs(r: &Resolved) -> Result<()> {
    match r {
        Resolved::Oracle(p) => {
            parse_grid(&p.grid)?;
        }
        Resolved::Solve(p) => optional(&p.init, "init")?,
        Resolved::Verify(p) => {
            required(&p.field, "field")?;
            optional(&p.compare, "compare")?;
        }
        Resolved::DiffNetwork(p) => {
            required(&p.field, "field")?;
            optional(&p.field2, "field2")?;
        }
        Resolved::Assemble(p) => {
            required(&p.field, "field")?;
        }
        Resolved::ProbeYeti(_) => {}
        Resolved::Export(p) => {
            required(&p.field, "field")?;
        }
    }
    Ok(())
}

pub fn run(r: Resolved, dir: &Path) -> Result<Outcome> {
    match r {
        Resolved::Oracle(p) => oracle(&p, dir),
        Resolved::Solve(p) => solve_cmd(&p, dir),
        Resolved::Verify(p) => verify(&p),
        Resolved::DiffNetwork(p) => diff_network(&p, dir),
        Resolved::Assemble(p) => assemble_cmd(&p, dir),
        Resolved::ProbeYeti(p) => probe_yeti(&p, dir),
        Resolved::Export(p) => export(&p, dir),
    }
}

fn ok(report: String) -> Outcome {
    Outcome {
        report,
        exit_code: EXIT_OK,
    }
}

fn oracle(p: &OracleParams, dir: &Path) -> Result<Outcome> {
    let d = parse_grid(&p.grid)?;
    let params = match p.family.as_str() {
        "reaper" => ReaperParams::new(p.c, Tilt::from_sign(p.tilt), p.shift, p.y_center)?,
        "pitchfork-left" => pitchfork_left_model(p.w, p.shift)?,
        other => return Err(Error::Config(format!("unknown oracle family {other:?}"))),
    };
    if ![-1.0, 0.0, 1.0].contains(&p.tilt) {
        return Err(Error::InvalidParameter(format!(
            "tilt must be -1, 0 or 1, got {}",
            p.tilt
        )));
    }
    let u = sample_reaper(&params, d)?;
    write_field(dir.join("oracle.field.csv"), &u)?;
    let mut s = echo("oracle", p);
    let k = (0..d.len()).fold(0, |b, k| if u.values()[k] > u.values()[b] { k } else { b });
    let _ = writeln!(s, "nx={}\nny={}", d.nx(), d.ny());
    let _ = writeln!(s, "c={:?}\nslope_x={:?}", params.c(), params.slope_x());
    let _ = writeln!(
        s,
        "max_value={:?}\nmax_at_y={:?}",
        u.values()[k],
        d.y(k / d.nx())
    );
    let _ = writeln!(s, "output=oracle.field.csv");
    Ok(ok(s))
}

fn solve_preset(p: &SolveParams) -> Result<BvpPreset> {
    let w = p.w.unwrap_or_else(|| default_width(&p.family));
    match p.family.as_str() {
        "pitchfork" => {
            let d = GridDomain::with_spacing(p.x_min, p.x_max, p.margin, w - p.margin, p.h)?;
            BvpPreset::pitchfork(w, d, p.cap)
        }
        "helicoid" => {
            let d = GridDomain::with_spacing(p.x_min, p.x_max, p.margin, w - p.margin, p.h)?;
            BvpPreset::helicoid(w, p.a, d, p.cap)
        }
        "yeti" => {
            let d = GridDomain::with_spacing(p.x_min, p.x_max, p.margin, p.y_max, p.h)?;
            BvpPreset::yeti(d, p.cap)
        }
        other => Err(Error::Config(format!("unknown solve family {other:?}"))),
    }
}

/// Adds independent uniform noise in `[-amp, amp]` to every node.
pub fn perturbed(u: &ScalarField, amp: f64, seed: u64) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = u
        .values()
        .iter()
        .map(|v| v + rng.gen_range(-amp..=amp))
        .collect();
    ScalarField::new(*u.domain(), vals)
}

fn solve_cmd(p: &SolveParams, dir: &Path) -> Result<Outcome> {
    let mut p = p.clone();
    if p.family != "yeti" {
        p.w = Some(p.w.unwrap_or_else(|| default_width(&p.family)));
    }
    let preset = solve_preset(&p)?;
    let cfg = SolveConfig {
        continuation_caps: p.caps.clone(),
        max_newton_iters: p.max_newton_iters,
        residual_tol: p.residual_tol,
        ..SolveConfig::default()
    };
    cfg.validate()?;
    let mut init = match &p.init {
        Some(path) => Some(read_field(path)?),
        None => None,
    };
    if p.perturb > 0.0 {
        let base = match init.take() {
            Some(u) => u,
            None => default_init(&preset)?,
        };
        init = Some(perturbed(&base, p.perturb, p.seed)?);
    }
    let mut s = echo("solve", &p);
    match solve(&preset, &cfg, init.as_ref()) {
        Ok((u, rep)) => {
            write_field(dir.join("solution.field.csv"), &u)?;
            s.push_str(&rep.to_text());
            let _ = writeln!(s, "output=solution.field.csv");
            Ok(ok(s))
        }
        Err(Error::Stalled {
            cap,
            residual,
            last_iterate,
        }) => {
            write_field(dir.join("last_iterate.field.csv"), &last_iterate)?;
            let _ = writeln!(
                s,
                "family={}\nstatus=stalled\ncap={cap:?}\nresidual={residual:e}",
                preset.name()
            );
            let _ = writeln!(s, "output=last_iterate.field.csv");
            Ok(Outcome {
                report: s,
                exit_code: EXIT_NUMERICAL,
            })
        }
        Err(e) if e.is_numerical() => {
            let _ = writeln!(s, "family={}\nstatus=failed\nerror={e}", preset.name());
            Ok(Outcome {
                report: s,
                exit_code: EXIT_NUMERICAL,
            })
        }
        Err(e) => Err(e),
    }
}

struct Check {
    name: &'static str,
    value: Option<f64>,
    tol: f64,
    pass: Option<bool>,
}

fn column(d: &GridDomain, x: f64) -> usize {
    d.nearest_i(x).clamp(2, d.nx().saturating_sub(3))
}

/// `nu . e2` along a column over the rows with `y` in `band`.
fn normal_e2(u: &ScalarField, i: usize, band: (f64, f64)) -> Result<Vec<f64>> {
    let d = u.domain();
    (0..d.ny())
        .filter(|&j| (band.0..=band.1).contains(&d.y(j)))
        .map(|j| Ok(upward_normal(u, i, j)?[1]))
        .collect()
}

fn verify(p: &VerifyParams) -> Result<Outcome> {
    let mut p = p.clone();
    p.w = Some(p.w.unwrap_or_else(|| default_width(&p.family)));
    let w = p.w.unwrap();
    let u = read_field(p.field.as_ref().unwrap())?;
    let d = *u.domain();
    let band = p.band()?;
    let x_probe = d.x(column(&d, p.x_probe.unwrap_or(d.x_min() + 1.0)));
    let x_right = d.x(column(&d, p.x_right.unwrap_or(d.x_max() - 1.0)));
    p.x_probe = Some(x_probe);
    p.x_right = Some(x_right);
    let mut checks = Vec::new();

    let gauss = match &p.compare {
        Some(path) => {
            let other = read_field(path)?;
            let h = image_hausdorff(&u, &other, p.stride)?;
            Check {
                name: "gauss_map_hausdorff",
                value: Some(h),
                tol: p.gauss_tol,
                pass: Some(h <= p.gauss_tol),
            }
        }
        None => Check {
            name: "gauss_map_hausdorff",
            value: None,
            tol: p.gauss_tol,
            pass: None,
        },
    };
    checks.push(gauss);

    match p.family.as_str() {
        "pitchfork" => {
            let prof = left_slope_profile(&u, x_probe)?;
            let mut err = 0.0f64;
            for (y, uy) in prof {
                if (band.0..=band.1).contains(&y) {
                    err = err.max((uy - psi(w, y)?).abs());
                }
            }
            checks.push(Check {
                name: "left_slope_vs_psi",
                value: Some(err),
                tol: p.psi_tol,
                pass: Some(err <= p.psi_tol),
            });
            let n = normal_e2(&u, d.nearest_i(x_right), band)?;
            let worst = n.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let gap = 1.0 - worst;
            checks.push(Check {
                name: "right_normal_e2",
                value: Some(gap),
                tol: p.normal_tol,
                pass: Some(gap <= p.normal_tol),
            });
        }
        "helicoid" => {
            let left = normal_e2(&u, d.nearest_i(x_probe), band)?;
            let gap = 1.0 - left.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            checks.push(Check {
                name: "left_normal_e2",
                value: Some(gap),
                tol: p.normal_tol,
                pass: Some(gap <= p.normal_tol),
            });
            let right = normal_e2(&u, d.nearest_i(x_right), band)?;
            let gap = 1.0 + right.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            checks.push(Check {
                name: "right_normal_minus_e2",
                value: Some(gap),
                tol: p.normal_tol,
                pass: Some(gap <= p.normal_tol),
            });
        }
        other => {
            return Err(Error::Config(format!(
                "verify supports pitchfork and helicoid, got {other:?}"
            )))
        }
    }

    let mut s = echo("verify", &p);
    let mut failed = false;
    for c in &checks {
        let (value, status) = match (c.value, c.pass) {
            (Some(v), Some(true)) => (format!("{v:e}"), "PASS"),
            (Some(v), _) => {
                failed = true;
                (format!("{v:e}"), "FAIL")
            }
            (None, _) => ("-".into(), "SKIP"),
        };
        let _ = writeln!(s, "check {} value={value} tol={:e} {status}", c.name, c.tol);
    }
    let _ = writeln!(s, "status={}", if failed { "failed" } else { "passed" });
    Ok(Outcome {
        report: s,
        exit_code: if failed { EXIT_NUMERICAL } else { EXIT_OK },
    })
}

fn kind_name(k: &EndKind) -> String {
    match k {
        EndKind::LeftInfinity => "left_infinity".into(),
        EndKind::RightInfinity => "right_infinity".into(),
        EndKind::BoundaryPoint => "boundary_point".into(),
        EndKind::SingularPoint(n) => format!("singular_{n}"),
        EndKind::Interior => "interior".into(),
    }
}

fn diff_network(p: &DiffNetworkParams, dir: &Path) -> Result<Outcome> {
    let f1 = read_field(p.field.as_ref().unwrap())?;
    let f2 = match &p.field2 {
        Some(path) => read_field(path)?,
        None => f1.clone(),
    };
    let v = p.shift_vector()?;
    let singular = p.singular_points()?;
    let mut g = shifted_difference(&f1, &f2, v)?;
    let mut s = echo("diff-network", p);
    let mut focus = None;
    if p.normalize {
        let cps = critical_points(&g, (f64::NEG_INFINITY, f64::INFINITY), f64::INFINITY);
        let best = cps
            .iter()
            .min_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm))
            .copied()
            .ok_or_else(|| Error::WindowEmpty("difference field has no critical node".into()))?;
        let _ = writeln!(
            s,
            "critical_point={:?},{:?} grad_norm={:e} value={:?}",
            best.x, best.y, best.grad_norm, best.value
        );
        g = g.map(|x| x - best.value)?;
        focus = Some(best);
    }
    let net = extract_zero_set(&g, p.iso);
    std::fs::write(dir.join("network.txt"), net.to_text())?;
    let gd = g.domain();
    let _ = writeln!(s, "grid={}x{}", gd.nx(), gd.ny());
    let _ = writeln!(s, "components={}", net.components.len());
    let _ = writeln!(s, "junctions={}", net.junctions().count());
    let _ = writeln!(s, "has_cycle={}", net.has_cycle());
    for v in net.junctions() {
        let _ = writeln!(s, "junction {:?} {:?} valence={}", v.x, v.y, v.valence);
    }
    for c in 0..net.components.len() {
        let ends = count_ends(&net, c, &singular)?;
        let tally: Vec<String> = ends
            .iter()
            .map(|(k, n)| format!("{}={n}", kind_name(k)))
            .collect();
        let total: usize = ends.values().sum();
        let comp = &net.components[c];
        let _ = writeln!(
            s,
            "component {c} vertices={} edges={} cycle={} ends={total} {}",
            comp.vertices.len(),
            comp.edges.len(),
            comp.has_cycle,
            tally.join(" ")
        );
    }
    if let Some(cp) = focus {
        let h = gd.hx().max(gd.hy());
        let near = net
            .junctions()
            .map(|v| (v.x - cp.x).hypot(v.y - cp.y) / h)
            .fold(f64::INFINITY, f64::min);
        let _ = writeln!(s, "nearest_junction_cells={near:?}");
        if let Some(c) = net.component_near(cp.x, cp.y) {
            let total: usize = count_ends(&net, c, &singular)?.values().sum();
            let _ = writeln!(s, "focus_component={c} focus_ends={total}");
        }
    }
    let _ = writeln!(s, "output=network.txt");
    Ok(ok(s))
}

fn build_assembly(p: &AssembleParams, u: &ScalarField) -> Result<crate::assembly::SurfaceMesh> {
    let piece = match p.family.as_str() {
        "pitchfork" => pitchfork_piece(u, p.levels)?,
        "helicoid" => helicoid_piece(u, p.a, p.w.unwrap(), p.levels)?,
        other => return Err(Error::Config(format!("unknown assembly family {other:?}"))),
    };
    let family = if p.family == "pitchfork" {
        AssemblyFamily::Pitchfork
    } else {
        AssemblyFamily::Helicoid
    };
    assemble(family, &piece, p.copies)
}

fn assemble_cmd(p: &AssembleParams, dir: &Path) -> Result<Outcome> {
    let mut p = p.clone();
    if p.family == "helicoid" {
        p.w = Some(p.w.unwrap_or_else(|| default_width("helicoid")));
    }
    let u = read_field(p.field.as_ref().unwrap())?.decimate(p.decimate)?;
    let mesh = build_assembly(&p, &u)?;
    std::fs::write(dir.join("mesh.obj"), to_obj(&mesh))?;
    let mut s = echo("assemble", &p);
    let _ = writeln!(s, "pieces={}", mesh.pieces());
    let _ = writeln!(s, "vertices={}", mesh.vertices.len());
    let _ = writeln!(s, "triangles={}", mesh.triangles.len());
    let _ = writeln!(
        s,
        "duplicate_vertices={}",
        duplicate_vertices(&mesh, WELD_TOL).len()
    );
    let mut exit_code = EXIT_OK;
    if p.family == "helicoid" && p.copies >= 2 {
        let piece = helicoid_piece(&u, p.a, p.w.unwrap(), p.levels)?;
        let t = helicoid_translation(&piece)?;
        let moved: Vec<[f64; 3]> = mesh
            .vertices
            .iter()
            .zip(&mesh.provenance)
            .filter(|(_, pr)| pr.piece == 0)
            .map(|(v, _)| [v[0] + t[0], v[1] + t[1], v[2]])
            .collect();
        let gap = point_set_gap(&moved, &mesh.vertices, WELD_TOL);
        let _ = writeln!(s, "translation={:?},{:?}", t[0], t[1]);
        let _ = writeln!(s, "translation_gap={gap:e}");
        if gap > WELD_TOL {
            exit_code = EXIT_NUMERICAL;
        }
    }
    if p.check_embedding {
        let d = *u.domain();
        let (cx, cy) = (d.nx() - 1, d.ny() - 1);
        let per = (mesh.triangles.len() + mesh.pieces() - 1) / mesh.pieces().max(1);
        let stride = (1..=cx.max(cy))
            .filter(|s| cx % s == 0 && cy % s == 0)
            .find(|s| per * mesh.pieces() / (s * s) <= EMBED_MAX_TRIANGLES);
        match stride {
            Some(st) => {
                let coarse = build_assembly(&p, &u.decimate(st)?)?;
                let hits = self_intersections(&coarse);
                let _ = writeln!(s, "embedding_check_stride={st}");
                let _ = writeln!(s, "embedding_check_triangles={}", coarse.triangles.len());
                let _ = writeln!(s, "self_intersections={}", hits.len());
                if !hits.is_empty() {
                    exit_code = EXIT_NUMERICAL;
                }
            }
            None => {
                let _ = writeln!(s, "embedding_check=skipped (no grid stride reaches {EMBED_MAX_TRIANGLES} triangles)");
            }
        }
    }
    let _ = writeln!(s, "output=mesh.obj");
    Ok(Outcome {
        report: s,
        exit_code,
    })
}

fn probe_yeti(p: &ProbeYetiParams, dir: &Path) -> Result<Outcome> {
    let mut p = p.clone();
    p.witness_c = Some(p.witness_c.unwrap_or(p.y_max));
    let c = p.witness_c.unwrap();
    let mut caps = p.caps.clone();
    caps.sort_by(f64::total_cmp);
    let mut s = echo("probe-yeti", &p);
    for &half in &p.truncations {
        for &cap in &caps {
            let d = GridDomain::with_spacing(-half, half, p.y_min, p.y_max, p.h)?;
            let preset = BvpPreset::yeti(d, cap)?;
            let cfg = SolveConfig {
                max_newton_iters: p.max_newton_iters,
                ..SolveConfig::default()
            };
            let _ = writeln!(s, "[run L={half:?} M={cap:?}]");
            let _ = writeln!(s, "grid={}x{}", d.nx(), d.ny());
            let u = match solve(&preset, &cfg, None) {
                Ok((u, rep)) => {
                    let _ = writeln!(s, "status=converged");
                    let _ = writeln!(s, "newton_iterations={}", rep.total_iterations());
                    let _ = writeln!(s, "final_residual={:e}", rep.final_residual);
                    u
                }
                Err(e) => {
                    let _ = writeln!(s, "status=no_solution_found");
                    let _ = writeln!(s, "finding={e}");
                    continue;
                }
            };
            let name = format!("yeti_L{half}_M{cap}.field.csv");
            write_field(dir.join(&name), &u)?;
            let _ = writeln!(s, "field={name}");

            let r = ridge(&u, (p.x_start, half), (p.y_min, c));
            let hy = d.hy();
            let ys: Vec<f64> = r.points.iter().map(|q| q.y).collect();
            let (lo, hi) = ys
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
                    (a.min(y), b.max(y))
                });
            let mean = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
            let _ = writeln!(s, "ridge_points={}", r.points.len());
            let _ = writeln!(s, "ridge_flagged={}", r.flagged.len());
            if !ys.is_empty() {
                let _ = writeln!(
                    s,
                    "ridge_y_min={lo:?}\nridge_y_max={hi:?}\nridge_y_mean={mean:?}"
                );
                let _ = writeln!(s, "ridge_above_pi_over_4={}", lo > PI / 4.0 - hy);
                let _ = writeln!(s, "ridge_max_residual={:e}", r.max_residual());
            }
            for q in &r.points {
                let _ = writeln!(s, "ridge {:?} {:?}", q.x, q.y);
            }
            let wit = descent_witnesses(&u, (0.5 * d.hx(), half), c);
            let found = wit.iter().filter(|w| w.1.is_some()).count();
            let _ = writeln!(s, "witness_columns={found}/{}", wit.len());
            for (x, y) in &wit {
                match y {
                    Some(y) => writeln!(s, "witness {x:?} {y:?}"),
                    None => writeln!(s, "witness {x:?} none"),
                }
                .unwrap();
            }
            for &sh in &p.shifts {
                let base = u.sample(sh, p.anchor_y);
                let pair = translated_profile(&u, sh, p.anchor_y)
                    .and_then(|a| Ok((a, translated_profile(&u, 2.0 * sh, p.anchor_y)?)))
                    .and_then(|(a, b)| profile_gap(&b, &a));
                let value = base.map_or("n/a".to_string(), |v| format!("{v:?}"));
                let gap = pair.map_or("n/a".to_string(), |g| format!("{g:?}"));
                let _ = writeln!(s, "D s={sh:?} u(s,anchor)={value} D={gap}");
            }
        }
    }
    Ok(ok(s))
}

fn export(p: &ExportParams, dir: &Path) -> Result<Outcome> {
    let u = read_field(p.field.as_ref().unwrap())?;
    let d = *u.domain();
    let mut p = p.clone();
    let mut out = String::new();
    let file = match p.kind.as_str() {
        "gauss-map" => {
            out.push_str("nu_x,nu_y,nu_z\n");
            for n in gauss_map_sample(&u, p.stride).normals {
                let _ = writeln!(out, "{:?},{:?},{:?}", n[0], n[1], n[2]);
            }
            "gauss_map.csv"
        }
        "slope-profile" => {
            let x = d.x(column(&d, p.x_probe.unwrap_or(d.x_min() + 1.0)));
            p.x_probe = Some(x);
            out.push_str("y,u_y\n");
            for (y, uy) in left_slope_profile(&u, x)? {
                let _ = writeln!(out, "{y:?},{uy:?}");
            }
            "slope_profile.csv"
        }
        "ridge" => {
            let win = p.window()?.unwrap_or((d.y_min(), d.y_max()));
            out.push_str("x,y\n");
            for q in ridge(&u, (d.x_min(), d.x_max()), win).points {
                let _ = writeln!(out, "{:?},{:?}", q.x, q.y);
            }
            "ridge.csv"
        }
        "mesh" => {
            out = to_obj(&graph_to_mesh(&u.decimate(p.stride)?));
            "graph.obj"
        }
        other => return Err(Error::Config(format!("unknown export kind {other:?}"))),
    };
    std::fs::write(dir.join(file), &out)?;
    let mut s = echo("export", &p);
    let _ = writeln!(s, "lines={}", out.lines().count());
    let _ = writeln!(s, "output={file}");
    Ok(ok(s))
}
