use std::ffi::{CStr, CString};
use std::ptr;

use phonocav_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { pc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn cavity_modes(h: f64, count: usize) -> *mut PcModeSet {
    let cav = pc_cavity_reference();
    let mat = pc_material_diamond();
    let mut mesh = ptr::null_mut();
    unsafe {
        assert_eq!(pc_mesh_cavity(&cav, h, &mut mesh), PcStatus::Ok, "{}", last_error());
        let mut set = ptr::null_mut();
        let st = pc_modes_solve(mesh, &mat, PcModel::InPlane, 0.5e-6, 2.838e9, count, &mut set);
        assert_eq!(st, PcStatus::Ok, "{}", last_error());
        pc_mesh_free(mesh);
        set
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(pc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_pointers_are_reported() {
    let mut mesh = ptr::null_mut();
    let st = unsafe { pc_mesh_unit_cell(ptr::null(), 1e-7, &mut mesh) };
    assert_eq!(st, PcStatus::NullPointer);
    assert!(mesh.is_null());
    assert!(last_error().contains("params"));
    assert_eq!(unsafe { pc_mesh_node_count(ptr::null()) }, 0);
    unsafe { pc_mesh_free(ptr::null_mut()) };
}

#[test]
fn invalid_arguments_set_message_and_success_clears_it() {
    let mut bad = pc_unit_cell_reference();
    bad.a = -1.0;
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { pc_mesh_unit_cell(&bad, 1e-7, &mut mesh) }, PcStatus::InvalidArgument);
    assert!(!last_error().is_empty());

    let mut n = 0.0;
    assert_eq!(unsafe { pc_thermal_occupation(2.4e9, 4.0, &mut n) }, PcStatus::Ok);
    assert!((n - 34.23).abs() < 0.01, "{n}");
    assert_eq!(unsafe { pc_last_error_message(ptr::null_mut(), 0) }, 0);
}

#[test]
fn error_message_truncates_safely() {
    let mut n = 0.0;
    assert_eq!(unsafe { pc_thermal_occupation(-1.0, 4.0, &mut n) }, PcStatus::InvalidArgument);
    let full = unsafe { pc_last_error_message(ptr::null_mut(), 0) };
    assert!(full > 5);
    let mut buf = [0x7f as std::ffi::c_char; 5];
    assert_eq!(unsafe { pc_last_error_message(buf.as_mut_ptr(), buf.len()) }, full);
    assert_eq!(buf[4], 0);
}

#[test]
fn cooling_report_matches_reference_figures() {
    let inputs = PcCoolingInputs {
        omega_hz: 2.838e9,
        q: 1e5,
        temp_k: 4.0,
        gamma_xy_hz: 15e6,
        omega_r_hz: 0.0,
        convention: PcGammaConvention::Full,
    };
    let mut r = PcCoolingReport { n_th: 0.0, gamma_th_hz: 0.0, c: 0.0, gamma_e1_hz: 0.0, gamma_e2_hz: 0.0, n_fin: 0.0 };
    assert_eq!(unsafe { pc_cooling_report(5e6, &inputs, &mut r) }, PcStatus::Ok, "{}", last_error());
    assert!((r.n_th - 28.87).abs() < 0.01, "{}", r.n_th);
    assert!((r.c - 8.1).abs() < 0.1, "{}", r.c);
}

#[test]
fn mesh_save_load_roundtrip() {
    let cell = pc_unit_cell_reference();
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { pc_mesh_unit_cell(&cell, 1e-7, &mut mesh) }, PcStatus::Ok, "{}", last_error());
    let dir = tempfile::tempdir().unwrap();
    let file = CString::new(dir.path().join("cell.txt").to_str().unwrap()).unwrap();
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(pc_mesh_save(mesh, file.as_ptr()), PcStatus::Ok, "{}", last_error());
        assert_eq!(pc_mesh_load(file.as_ptr(), &mut back), PcStatus::Ok, "{}", last_error());
        assert_eq!(pc_mesh_node_count(mesh), pc_mesh_node_count(back));
        assert_eq!(pc_mesh_element_count(mesh), pc_mesh_element_count(back));
        assert!(pc_mesh_node_count(mesh) > 0);
        pc_mesh_free(mesh);
        pc_mesh_free(back);
    }
    let missing = CString::new(dir.path().join("nope.txt").to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pc_mesh_load(missing.as_ptr(), &mut m) }, PcStatus::Io);
}

#[test]
fn band_gaps_report_required_capacity() {
    let cell = pc_unit_cell_reference();
    let mat = pc_material_diamond();
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { pc_mesh_unit_cell(&cell, 2e-7, &mut mesh) }, PcStatus::Ok, "{}", last_error());
    let mut len = 0usize;
    let st = unsafe { pc_band_gaps(mesh, &mat, 4, 8, ptr::null_mut(), 0, &mut len) };
    if len == 0 {
        assert_eq!(st, PcStatus::Ok);
    } else {
        assert_eq!(st, PcStatus::BufferTooSmall);
        let mut gaps = vec![PcGap { lo_hz: 0.0, hi_hz: 0.0 }; len];
        let st = unsafe { pc_band_gaps(mesh, &mat, 4, 8, gaps.as_mut_ptr(), gaps.len(), &mut len) };
        assert_eq!(st, PcStatus::Ok, "{}", last_error());
        assert!(gaps.iter().all(|g| g.hi_hz > g.lo_hz && g.lo_hz > 0.0));
    }
    unsafe { pc_mesh_free(mesh) };
}

#[test]
fn cavity_modes_strain_and_couplings() {
    let set = cavity_modes(2e-7, 2);
    unsafe {
        assert_eq!(pc_modes_len(set), 2);
        let mut rep = std::mem::zeroed::<PcModeReport>();
        assert_eq!(pc_mode_report(set, 0, &mut rep), PcStatus::Ok, "{}", last_error());
        assert!(rep.frequency_hz > 1e9 && rep.veff_m3 > 0.0);
        assert_eq!(pc_mode_report(set, 7, &mut rep), PcStatus::InvalidArgument);

        let mut eps = [0.0f64; 9];
        assert_eq!(pc_mode_zero_point_strain(set, 0, 0.0, 0.0, eps.as_mut_ptr()), PcStatus::Ok, "{}", last_error());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(eps[3 * i + j], eps[3 * j + i]);
            }
        }
        assert_eq!(pc_mode_zero_point_strain(set, 0, 1.0, 1.0, eps.as_mut_ptr()), PcStatus::OutsideMesh);

        let o = PcOrientation { z: [1, 1, 1], x: [-1, -1, 2] };
        let mut g = PcCouplings { g_a: 0.0, g_e1: 0.0, g_e2: 0.0 };
        assert_eq!(pc_mode_couplings(set, 0, 0.0, 0.0, &o, ptr::null(), &mut g), PcStatus::Ok, "{}", last_error());
        assert!(g.g_a.is_nan());
        assert!(g.g_e1.is_finite() && g.g_e2.is_finite());

        let bad = PcOrientation { z: [1, 1, 1], x: [1, 1, 0] };
        assert_eq!(pc_mode_couplings(set, 0, 0.0, 0.0, &bad, ptr::null(), &mut g), PcStatus::InvalidArgument);
        pc_modes_free(set);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/phonocav.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
