use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use mpdg_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mpdg_last_error()) }.to_string_lossy().into_owned()
}

fn small_tube() -> CString {
    CString::new(r#"{"case": "euler1d-3species", "cells": 16, "t_final": 5e-5}"#).unwrap()
}

#[test]
fn stage_solve_conserves_and_stays_positive() {
    let explicit = [1.0, 2.0, 0.5];
    let production = [0.0, 3.0, 0.0, 0.0, 0.0, 40.0, 1.0, 0.0, 0.0];
    let sigma = [1.0, 2.0, 0.5];
    let mut x = [0.0; 3];
    let status = unsafe { mpdg_stage_solve(3, explicit.as_ptr(), production.as_ptr(), sigma.as_ptr(), 10.0, x.as_mut_ptr()) };
    assert_eq!(status, MpdgStatus::Ok);
    assert!(x.iter().all(|&v| v > 0.0));
    assert!((x.iter().sum::<f64>() - 3.5).abs() < 1e-14);
}

#[test]
fn null_arguments_are_reported() {
    let mut x = [0.0; 2];
    let status = unsafe { mpdg_stage_solve(2, ptr::null(), ptr::null(), ptr::null(), 1.0, x.as_mut_ptr()) };
    assert_eq!(status, MpdgStatus::NullPointer);
    assert!(last_error().contains("explicit"));
    assert!(unsafe { mpdg_solver_time(ptr::null()) }.is_nan());
    unsafe { mpdg_solver_free(ptr::null_mut()) };
}

#[test]
fn ode_case_is_not_a_solver() {
    let cfg = CString::new(r#"{"case": "ode-linear"}"#).unwrap();
    let mut status = MpdgStatus::Ok;
    let s = unsafe { mpdg_solver_new(cfg.as_ptr(), &mut status) };
    assert!(s.is_null());
    assert_eq!(status, MpdgStatus::InvalidArgument);
    assert!(last_error().contains("ode-linear"));
}

#[test]
fn bad_json_is_an_invalid_argument() {
    let cfg = CString::new("{not json").unwrap();
    let mut status = MpdgStatus::Ok;
    assert!(unsafe { mpdg_solver_new(cfg.as_ptr(), &mut status) }.is_null());
    assert_eq!(status, MpdgStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn solver_handle_round_trip() {
    let cfg = small_tube();
    let mut status = MpdgStatus::Panic;
    let s = unsafe { mpdg_solver_new(cfg.as_ptr(), &mut status) };
    assert_eq!(status, MpdgStatus::Ok, "{}", last_error());
    let (mut cells, mut nodes, mut vars) = (0, 0, 0);
    assert_eq!(unsafe { mpdg_solver_shape(s, &mut cells, &mut nodes, &mut vars) }, MpdgStatus::Ok);
    assert_eq!((cells, nodes, vars), (16, 2, 6));

    let mut info = MpdgStepInfo::default();
    assert_eq!(unsafe { mpdg_solver_step(s, 5e-5, &mut info) }, MpdgStatus::Ok, "{}", last_error());
    assert_eq!(info.step, 1);
    assert!(info.dt > 0.0 && info.min_density > 0.0 && info.min_pressure > 0.0);
    assert_eq!(unsafe { mpdg_solver_time(s) }, info.time);

    assert_eq!(unsafe { mpdg_solver_run(s, -1.0) }, MpdgStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { mpdg_solver_time(s) }, 5e-5);
    assert!(unsafe { mpdg_solver_steps(s) } > 1);

    let mut short = vec![0.0; 10];
    assert_eq!(unsafe { mpdg_solver_copy_field(s, short.as_mut_ptr(), short.len()) }, MpdgStatus::BufferTooSmall);
    let mut data = vec![f64::NAN; cells * nodes * vars];
    assert_eq!(unsafe { mpdg_solver_copy_field(s, data.as_mut_ptr(), data.len()) }, MpdgStatus::Ok);
    // ρ, ρu, E, then the partial densities
    for u in data.chunks(vars) {
        let sum: f64 = u[3..].iter().sum();
        assert!(u[0] > 0.0 && (sum - u[0]).abs() <= 1e-12 * u[0]);
    }
    unsafe { mpdg_solver_free(s) };
}

#[test]
fn run_case_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let cfg = small_tube();
    assert_eq!(unsafe { mpdg_run_case(cfg.as_ptr(), out.as_ptr()) }, MpdgStatus::Ok, "{}", last_error());
    for f in ["config.json", "log.csv", "final.chk", "snapshots/index.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(mpdg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/mpdg.h");
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).output() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "mpdg.h"

int main(void) {
    double b[2] = {1.0, 1.0}, w[4] = {0.0, 0.0, 5.0, 0.0}, s[2] = {1.0, 1.0}, x[2];
    if (mpdg_stage_solve(2, b, w, s, 1.0, x) != MPDG_STATUS_OK) return 1;
    if (mpdg_solver_new("{", NULL) != NULL) return 2;
    printf("%s %.17g %.17g\n", mpdg_version(), x[0], x[1]);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_shared_library() {
    // target/<profile>/deps/<test> -> target/<profile>
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    if !lib_dir.join("libmpdg_ffi.so").exists() {
        eprintln!("no shared library in {}; skipped", lib_dir.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let lib = lib_dir.display().to_string();
    let Ok(build) = Command::new("cc")
        .args([src.to_str().unwrap(), "-I", include, "-L", &lib, "-lmpdg_ffi", &format!("-Wl,-rpath,{lib}"), "-o"])
        .arg(&exe)
        .output()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(fields[0], env!("CARGO_PKG_VERSION"));
    let x: Vec<f64> = fields[1..].iter().map(|f| f.parse().unwrap()).collect();
    // p₁₀ = 5: x₀ = 1 − 5 x₀, x₁ = 1 + 5 x₀
    assert!((x[0] - 1.0 / 6.0).abs() < 1e-15 && (x[1] - 11.0 / 6.0).abs() < 1e-15);
}
