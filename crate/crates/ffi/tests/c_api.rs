use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use translab_ffi::*;

fn last_error() -> String {
    let p = tl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn reaper_handle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("r.field.csv").to_str().unwrap()).unwrap();
    unsafe {
        let mut f = ptr::null_mut();
        let s = tl_reaper_sample(1.0, 0, 0.0, 0.0, -1.0, 1.0, -1.0, 1.0, 5, 9, &mut f);
        assert_eq!(s, TlStatus::Ok);
        let (mut nx, mut ny) = (0, 0);
        assert_eq!(tl_field_dims(f, &mut nx, &mut ny), TlStatus::Ok);
        assert_eq!((nx, ny), (5, 9));
        let mut v = 1.0;
        assert_eq!(tl_field_at(f, 2, 4, &mut v), TlStatus::Ok);
        assert_eq!(v, 0.0);
        let mut b = [0.0; 4];
        assert_eq!(tl_field_bounds(f, b.as_mut_ptr()), TlStatus::Ok);
        assert_eq!(b, [-1.0, 1.0, -1.0, 1.0]);
        let mut r = 1.0;
        assert_eq!(tl_field_residual(f, &mut r), TlStatus::Ok);
        assert!(r < 0.05, "{r}");

        assert_eq!(tl_field_write(f, path.as_ptr()), TlStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(tl_field_read(path.as_ptr(), &mut g), TlStatus::Ok);
        let mut a = vec![0.0; 45];
        let mut c = vec![0.0; 45];
        assert_eq!(tl_field_values(f, a.as_mut_ptr(), 45), TlStatus::Ok);
        assert_eq!(tl_field_values(g, c.as_mut_ptr(), 45), TlStatus::Ok);
        assert_eq!(a, c);
        assert_eq!(
            tl_field_values(g, c.as_mut_ptr(), 44),
            TlStatus::InvalidArgument
        );
        tl_field_free(f);
        tl_field_free(g);
        tl_field_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_codes_and_messages() {
    unsafe {
        let mut f = ptr::null_mut();
        let s = tl_reaper_sample(0.5, 0, 0.0, 0.0, -1.0, 1.0, -0.5, 0.5, 5, 5, &mut f);
        assert_eq!(s, TlStatus::InvalidArgument);
        assert!(f.is_null());
        assert!(last_error().contains("c must be"), "{}", last_error());

        let mut v = 0.0;
        assert_eq!(
            tl_field_at(ptr::null(), 0, 0, &mut v),
            TlStatus::NullPointer
        );
        assert!(last_error().contains("null"));

        let missing = CString::new("/nonexistent/x.field.csv").unwrap();
        assert_eq!(tl_field_read(missing.as_ptr(), &mut f), TlStatus::Io);
    }
}

#[test]
fn solve_and_assemble_pitchfork() {
    let dir = tempfile::tempdir().unwrap();
    let obj = CString::new(dir.path().join("m.obj").to_str().unwrap()).unwrap();
    let mut o = tl_solve_options_default(TlFamily::Pitchfork);
    o.x_min = -4.0;
    o.x_max = 4.0;
    o.h = 0.2;
    o.cap = 4.0;
    unsafe {
        let mut u = ptr::null_mut();
        assert_eq!(
            tl_solve(&o, ptr::null(), &mut u),
            TlStatus::Ok,
            "{}",
            last_error()
        );
        let mut r = 1.0;
        assert_eq!(tl_field_residual(u, &mut r), TlStatus::Ok);
        assert!(r < 1e-6, "{r}");
        let mut m = ptr::null_mut();
        let s = tl_assemble(u, TlFamily::Pitchfork, 0.0, o.w, 1, 8, &mut m);
        assert_eq!(s, TlStatus::Ok, "{}", last_error());
        let (mut nv, mut nt) = (0, 0);
        assert_eq!(tl_mesh_counts(m, &mut nv, &mut nt), TlStatus::Ok);
        assert!(nv > 0 && nt > nv);
        assert_eq!(tl_mesh_write_obj(m, obj.as_ptr()), TlStatus::Ok);
        assert!(std::fs::read_to_string(dir.path().join("m.obj"))
            .unwrap()
            .contains("\nf "));
        let mut bad = ptr::null_mut();
        let s = tl_assemble(u, TlFamily::Pitchfork, 0.0, o.w, 2, 8, &mut bad);
        assert_eq!(s, TlStatus::InvalidArgument);
        tl_mesh_free(m);
        tl_field_free(u);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/translab.h")
}

#[test]
fn header_declares_the_surface() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "tl_last_error",
        "tl_reaper_sample",
        "tl_field_read",
        "tl_field_free",
        "tl_solve_options_default",
        "tl_solve",
        "tl_assemble",
        "tl_mesh_write_obj",
        "tl_mesh_free",
        "TL_STATUS_NUMERICAL = 3",
        "typedef struct tl_field tl_field;",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_the_library() {
    let Ok(cc) = which("cc") else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("libtranslab_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipped", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "translab.h"
int main(void) {
    tl_field *f = NULL;
    if (tl_reaper_sample(2.0, 1, 0.0, 0.0, -1.0, 1.0, -1.0, 1.0, 41, 41, &f) != TL_STATUS_OK) return 1;
    double r = 1.0;
    if (tl_field_residual(f, &r) != TL_STATUS_OK || r > 1e-3) return 2;
    tl_field_free(f);
    if (tl_reaper_sample(0.5, 0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 3, 3, &f) != TL_STATUS_INVALID_ARGUMENT) return 3;
    if (tl_last_error() == NULL) return 4;
    printf("%s\n", tl_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let st = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{:?}", out.status);
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        env!("CARGO_PKG_VERSION")
    );
}

fn which(name: &str) -> Result<PathBuf, ()> {
    std::env::var_os("PATH")
        .and_then(|p| {
            std::env::split_paths(&p)
                .map(|d| d.join(name))
                .find(|c| c.is_file())
        })
        .ok_or(())
}
