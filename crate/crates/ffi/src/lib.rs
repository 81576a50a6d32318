//! C interface to `translab`.
//!
//! Fields and meshes cross the boundary as opaque handles owned by the
//! caller and released with the matching `*_free`. Every fallible call
//! returns a [`TlStatus`]; on failure [`tl_last_error`] describes it.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use translab::assembly::{
    assemble, helicoid_piece, pitchfork_piece, to_obj, AssemblyFamily, SurfaceMesh,
};
use translab::fields::{read_field, write_field};
use translab::oracles::{sample_reaper, ReaperParams, Tilt};
use translab::solver::{residual, solve, BvpPreset, SolveConfig};
use translab::{Error, GridDomain, ScalarField};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlFamily {
    Pitchfork = 0,
    Helicoid = 1,
    Yeti = 2,
}

/// Sampled scalar field on a uniform grid.
pub struct TlField(ScalarField);

/// Triangulated surface.
pub struct TlMesh(SurfaceMesh);

/// Parameters of a capped solve. Start from [`tl_solve_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlSolveOptions {
    pub family: TlFamily,
    /// Strip width; unused by the yeti.
    pub w: f64,
    /// Helicoid top-edge jump.
    pub a: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub h: f64,
    pub cap: f64,
    pub max_newton_iters: u32,
    pub residual_tol: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        _ if e.is_numerical() => TlStatus::Numerical,
        Error::Io(_) | Error::Parse { .. } => TlStatus::Io,
        _ => TlStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (TlStatus, String)>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside translab".into());
            TlStatus::Panic
        }
    }
}

fn lib(e: Error) -> (TlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TlStatus, String) {
    (TlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, (TlStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| (TlStatus::InvalidArgument, "path is not UTF-8".into()))
}

unsafe fn field_ref<'a>(f: *const TlField) -> Result<&'a ScalarField, (TlStatus, String)> {
    f.as_ref().map(|f| &f.0).ok_or_else(|| null("field"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples the tilted grim reaper `c^2 log cos((y - y_center)/c) + tilt x sqrt(c^2 - 1) + shift`
/// on an `nx` by `ny` grid. `tilt` is -1, 0 or 1.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn tl_reaper_sample(
    c: f64,
    tilt: i32,
    shift: f64,
    y_center: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
    out: *mut *mut TlField,
) -> TlStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = ReaperParams::new(c, Tilt::from_sign(tilt as f64), shift, y_center).map_err(lib)?;
        let d = GridDomain::new(x_min, x_max, y_min, y_max, nx, ny).map_err(lib)?;
        let u = sample_reaper(&p, d).map_err(lib)?;
        *out = Box::into_raw(Box::new(TlField(u)));
        Ok(())
    })
}

/// Reads a field from its CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_field_read(path: *const c_char, out: *mut *mut TlField) -> TlStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let u = read_field(path_arg(path)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(TlField(u)));
        Ok(())
    })
}

/// # Safety
/// `f` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tl_field_write(f: *const TlField, path: *const c_char) -> TlStatus {
    guard(|| write_field(path_arg(path)?, field_ref(f)?).map_err(lib))
}

/// # Safety
/// `f` must be a live handle; `nx` and `ny` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tl_field_dims(
    f: *const TlField,
    nx: *mut usize,
    ny: *mut usize,
) -> TlStatus {
    guard(|| {
        let d = *field_ref(f)?.domain();
        let (nx, ny) = (nx.as_mut(), ny.as_mut());
        let (Some(nx), Some(ny)) = (nx, ny) else {
            return Err(null("nx or ny"));
        };
        *nx = d.nx();
        *ny = d.ny();
        Ok(())
    })
}

/// Writes `[x_min, x_max, y_min, y_max]` into `bounds`.
///
/// # Safety
/// `f` must be a live handle and `bounds` point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_field_bounds(f: *const TlField, bounds: *mut f64) -> TlStatus {
    guard(|| {
        let d = *field_ref(f)?.domain();
        if bounds.is_null() {
            return Err(null("bounds"));
        }
        let b = std::slice::from_raw_parts_mut(bounds, 4);
        b.copy_from_slice(&[d.x_min(), d.x_max(), d.y_min(), d.y_max()]);
        Ok(())
    })
}

/// Value at node `(i, j)`.
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_field_at(
    f: *const TlField,
    i: usize,
    j: usize,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let u = field_ref(f)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        u.domain().check(i, j).map_err(lib)?;
        *out = u.at(i, j);
        Ok(())
    })
}

/// Copies all values, row-major with `x` fastest, into `buf`.
///
/// # Safety
/// `f` must be a live handle and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_field_values(f: *const TlField, buf: *mut f64, len: usize) -> TlStatus {
    guard(|| {
        let v = field_ref(f)?.values();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != v.len() {
            return Err((
                TlStatus::InvalidArgument,
                format!("buffer holds {len} values, field has {}", v.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(v);
        Ok(())
    })
}

/// Max-norm of the discrete translator residual over interior nodes.
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_field_residual(f: *const TlField, out: *mut f64) -> TlStatus {
    guard(|| {
        let r = residual(field_ref(f)?).map_err(lib)?;
        *out.as_mut().ok_or_else(|| null("out"))? = r.max_abs_interior();
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_field_free(f: *mut TlField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Defaults for `family`: `[-12, 12]`, margin 0.05 from the strip edges
/// (yeti: `y` up to 6), `h = 0.1`, cap 6.
#[no_mangle]
pub extern "C" fn tl_solve_options_default(family: TlFamily) -> TlSolveOptions {
    let w = match family {
        TlFamily::Helicoid => std::f64::consts::FRAC_PI_2,
        _ => std::f64::consts::PI,
    };
    let cfg = SolveConfig::default();
    TlSolveOptions {
        family,
        w,
        a: 0.0,
        x_min: -12.0,
        x_max: 12.0,
        y_min: 0.05,
        y_max: if family == TlFamily::Yeti {
            6.0
        } else {
            w - 0.05
        },
        h: 0.1,
        cap: 6.0,
        max_newton_iters: cfg.max_newton_iters as u32,
        residual_tol: cfg.residual_tol,
    }
}

/// Solves a capped preset. `init` may be null for the default initial guess.
///
/// # Safety
/// `opts` and `out` must be valid pointers; `init` null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_solve(
    opts: *const TlSolveOptions,
    init: *const TlField,
    out: *mut *mut TlField,
) -> TlStatus {
    guard(|| {
        let o = *opts.as_ref().ok_or_else(|| null("opts"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let d = GridDomain::with_spacing(o.x_min, o.x_max, o.y_min, o.y_max, o.h).map_err(lib)?;
        let preset = match o.family {
            TlFamily::Pitchfork => BvpPreset::pitchfork(o.w, d, o.cap),
            TlFamily::Helicoid => BvpPreset::helicoid(o.w, o.a, d, o.cap),
            TlFamily::Yeti => BvpPreset::yeti(d, o.cap),
        }
        .map_err(lib)?;
        let cfg = SolveConfig {
            max_newton_iters: o.max_newton_iters as usize,
            residual_tol: o.residual_tol,
            ..SolveConfig::default()
        };
        let init = init.as_ref().map(|f| &f.0);
        let (u, _) = solve(&preset, &cfg, init).map_err(lib)?;
        *out = Box::into_raw(Box::new(TlField(u)));
        Ok(())
    })
}

/// Assembles a pitchfork (`copies` must be 1) or a helicoid with `copies`
/// reflected copies from a solved field.
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_assemble(
    f: *const TlField,
    family: TlFamily,
    a: f64,
    w: f64,
    copies: usize,
    levels: usize,
    out: *mut *mut TlMesh,
) -> TlStatus {
    guard(|| {
        let u = field_ref(f)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (piece, fam) = match family {
            TlFamily::Pitchfork => (pitchfork_piece(u, levels), AssemblyFamily::Pitchfork),
            TlFamily::Helicoid => (helicoid_piece(u, a, w, levels), AssemblyFamily::Helicoid),
            TlFamily::Yeti => {
                return Err((TlStatus::InvalidArgument, "no assembly for the yeti".into()))
            }
        };
        let m = assemble(fam, &piece.map_err(lib)?, copies).map_err(lib)?;
        *out = Box::into_raw(Box::new(TlMesh(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle; `vertices` and `triangles` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tl_mesh_counts(
    m: *const TlMesh,
    vertices: *mut usize,
    triangles: *mut usize,
) -> TlStatus {
    guard(|| {
        let m = &m.as_ref().ok_or_else(|| null("mesh"))?.0;
        *vertices.as_mut().ok_or_else(|| null("vertices"))? = m.vertices.len();
        *triangles.as_mut().ok_or_else(|| null("triangles"))? = m.triangles.len();
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tl_mesh_write_obj(m: *const TlMesh, path: *const c_char) -> TlStatus {
    guard(|| {
        let m = &m.as_ref().ok_or_else(|| null("mesh"))?.0;
        std::fs::write(path_arg(path)?, to_obj(m)).map_err(|e| lib(e.into()))
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_mesh_free(m: *mut TlMesh) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
