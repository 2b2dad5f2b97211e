//! C interface to phonocav.
//!
//! Every fallible call returns a [`PcStatus`]; on failure the message is kept
//! per thread and read back with [`pc_last_error_message`]. Meshes and mode
//! sets are opaque heap handles released with their `_free` function.
//!
//! # Safety
//!
//! Pointer arguments must be null or point to live, aligned data of the
//! declared type for the duration of the call. Handles must come from this
//! library and must not be used after being freed.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use phonocav::fem::{self, BandOptions, Model};
use phonocav::mesh::{self, CavityParams, GeometrySpec, Mesh, Shape, Termination, UnitCellParams};
use phonocav::modes::{self, ElasticMode};
use phonocav::nv::{self, CoolingInputs, GammaConvention, Miller, NvOrientation, StrainSusceptibilities};
use phonocav::{Error, Frequency, IsotropicMaterial};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Geometry = 3,
    Solver = 4,
    OutsideMesh = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcModel {
    InPlane = 0,
    OutOfPlane = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcGammaConvention {
    Half = 0,
    Full = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcMaterial {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcUnitCell {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub gap: f64,
    pub height: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcCavity {
    pub d: f64,
    pub c: f64,
    pub e: f64,
    pub r_prime: f64,
    pub theta: f64,
    pub mirror: PcUnitCell,
    pub mirror_cells: usize,
    /// Clamps the outer faces of the mirror when set.
    pub clamped: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcGap {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

/// Volumes over λ³ are NaN when the frequency is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcModeReport {
    pub frequency_hz: f64,
    pub veff_m3: f64,
    pub veff_over_lambda_p3: f64,
    pub veff_over_lambda_s3: f64,
    pub equipartition_ratio: f64,
    pub max_h_j_per_m3: f64,
    pub degenerate: bool,
}

/// Miller indices of the NV axis and of its x axis.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcOrientation {
    pub z: [i32; 3],
    pub x: [i32; 3],
}

/// Susceptibilities [Hz]; the A₁ pair is used only when `has_a` is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcSusceptibilities {
    pub lambda_e: f64,
    pub lambda_e_prime: f64,
    pub lambda_a: f64,
    pub lambda_a_prime: f64,
    pub has_a: bool,
}

/// Coupling rates g/2π [Hz]; `g_a` is NaN without A₁ susceptibilities.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcCouplings {
    pub g_a: f64,
    pub g_e1: f64,
    pub g_e2: f64,
}

/// `omega_r_hz <= 0` selects Ω_R = Γ_x/y.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcCoolingInputs {
    pub omega_hz: f64,
    pub q: f64,
    pub temp_k: f64,
    pub gamma_xy_hz: f64,
    pub omega_r_hz: f64,
    pub convention: PcGammaConvention,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcCoolingReport {
    pub n_th: f64,
    pub gamma_th_hz: f64,
    pub c: f64,
    pub gamma_e1_hz: f64,
    pub gamma_e2_hz: f64,
    pub n_fin: f64,
}

/// Opaque triangle mesh.
pub struct PcMesh {
    mesh: Arc<Mesh>,
}

/// Opaque set of eigenmodes sharing one mesh and material.
pub struct PcModeSet {
    modes: Vec<ElasticMode>,
    material: IsotropicMaterial,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(PcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::GeometrySelfIntersection(_)
            | Error::FeatureUnresolved(_)
            | Error::Meshing(_)
            | Error::InvalidMesh(_)
            | Error::InvertedElement { .. }
            | Error::Parse { .. } => PcStatus::Geometry,
            Error::RigidModesPresent { .. } | Error::FactorizationBreakdown { .. } | Error::NoConvergence(_) => {
                PcStatus::Solver
            }
            Error::OutsideMesh { .. } => PcStatus::OutsideMesh,
            Error::Io { .. } | Error::Json(_) => PcStatus::Io,
            _ => PcStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            PcStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown".into());
            set_error(format!("panic: {what}"));
            PcStatus::Panic
        }
    }
}

unsafe fn read<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(PcStatus::NullPointer, format!("null pointer: {name}")))
}

unsafe fn write<T>(p: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail(PcStatus::NullPointer, format!("null pointer: {name}")));
    }
    p.write(value);
    Ok(())
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PcStatus::NullPointer, "null pointer: path".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(PcStatus::InvalidArgument, "path is not UTF-8".into()))
}

fn material(m: &PcMaterial) -> Result<IsotropicMaterial, Fail> {
    Ok(IsotropicMaterial::new(m.youngs_modulus, m.poisson_ratio, m.density)?)
}

fn cell(c: &PcUnitCell) -> UnitCellParams {
    UnitCellParams { a: c.a, b: c.b, r: c.r, gap: c.gap, height: c.height }
}

fn pc_cell(c: &UnitCellParams) -> PcUnitCell {
    PcUnitCell { a: c.a, b: c.b, r: c.r, gap: c.gap, height: c.height }
}

fn model(m: PcModel) -> Model {
    match m {
        PcModel::InPlane => Model::InPlane,
        PcModel::OutOfPlane => Model::OutOfPlane,
    }
}

fn mode_at(set: &PcModeSet, index: usize) -> Result<&ElasticMode, Fail> {
    set.modes.get(index).ok_or_else(|| {
        Fail(PcStatus::InvalidArgument, format!("mode index {index} out of range ({} modes)", set.modes.len()))
    })
}

fn mesh_from(spec: GeometrySpec, out: *mut *mut PcMesh) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(PcStatus::NullPointer, "null pointer: out".into()));
    }
    spec.validate()?;
    let mesh = mesh::generate(&spec)?;
    unsafe { out.write(Box::into_raw(Box::new(PcMesh { mesh: Arc::new(mesh) }))) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error of this thread into `buf` (truncated, always
/// NUL-terminated when `len > 0`) and returns the full length plus one.
/// Returns 0 when the last call succeeded.
#[no_mangle]
pub unsafe extern "C" fn pc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// E = 1050 GPa, ν = 0.2, ρ = 3500 kg/m³.
#[no_mangle]
pub extern "C" fn pc_material_diamond() -> PcMaterial {
    let d = IsotropicMaterial::diamond();
    PcMaterial { youngs_modulus: d.youngs_modulus(), poisson_ratio: d.poisson_ratio(), density: d.density() }
}

#[no_mangle]
pub extern "C" fn pc_unit_cell_reference() -> PcUnitCell {
    pc_cell(&UnitCellParams::reference())
}

#[no_mangle]
pub extern "C" fn pc_cavity_reference() -> PcCavity {
    let p = CavityParams::reference();
    PcCavity {
        d: p.d,
        c: p.c,
        e: p.e,
        r_prime: p.r_prime,
        theta: p.theta,
        mirror: pc_cell(&p.mirror),
        mirror_cells: p.mirror_cells,
        clamped: p.termination == Termination::Clamped,
    }
}

/// Meshes one periodic phononic-crystal cell with target edge length `h` [m].
#[no_mangle]
pub unsafe extern "C" fn pc_mesh_unit_cell(params: *const PcUnitCell, h: f64, out: *mut *mut PcMesh) -> PcStatus {
    guard(|| {
        let p = read(params, "params")?;
        mesh_from(GeometrySpec::new(Shape::UnitCell(cell(p)), h), out)
    })
}

/// Meshes the defect cavity with its finite mirrors.
#[no_mangle]
pub unsafe extern "C" fn pc_mesh_cavity(params: *const PcCavity, h: f64, out: *mut *mut PcMesh) -> PcStatus {
    guard(|| {
        let p = read(params, "params")?;
        let params = CavityParams {
            d: p.d,
            c: p.c,
            e: p.e,
            r_prime: p.r_prime,
            theta: p.theta,
            mirror: cell(&p.mirror),
            mirror_cells: p.mirror_cells,
            termination: if p.clamped { Termination::Clamped } else { Termination::Free },
        };
        mesh_from(GeometrySpec::new(Shape::Cavity(params), h), out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn pc_mesh_load(file: *const c_char, out: *mut *mut PcMesh) -> PcStatus {
    guard(|| {
        let p = path(file)?;
        if out.is_null() {
            return Err(Fail(PcStatus::NullPointer, "null pointer: out".into()));
        }
        let mesh = mesh::load(p)?;
        out.write(Box::into_raw(Box::new(PcMesh { mesh: Arc::new(mesh) })));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pc_mesh_save(handle: *const PcMesh, file: *const c_char) -> PcStatus {
    guard(|| {
        let m = read(handle, "mesh")?;
        mesh::save(&m.mesh, path(file)?)?;
        Ok(())
    })
}

/// Vertex count; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pc_mesh_node_count(handle: *const PcMesh) -> usize {
    handle.as_ref().map_or(0, |m| m.mesh.node_count())
}

/// Triangle count; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pc_mesh_element_count(handle: *const PcMesh) -> usize {
    handle.as_ref().map_or(0, |m| m.mesh.element_count())
}

#[no_mangle]
pub unsafe extern "C" fn pc_mesh_free(handle: *mut PcMesh) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Complete gaps of a periodic cell over both polarization families. Writes
/// at most `capacity` gaps and the total count to `len`; returns
/// `BufferTooSmall` when `capacity` is insufficient.
#[no_mangle]
pub unsafe extern "C" fn pc_band_gaps(
    handle: *const PcMesh,
    mat: *const PcMaterial,
    n_k: usize,
    n_bands: usize,
    out: *mut PcGap,
    capacity: usize,
    len: *mut usize,
) -> PcStatus {
    guard(|| {
        let m = read(handle, "mesh")?;
        let mat = material(read(mat, "material")?)?;
        let opts = BandOptions { n_k, n_bands, ..BandOptions::default() };
        let bs = fem::band_structure(&m.mesh, &[mat], &opts)?;
        write(len, bs.gaps.len(), "len")?;
        if bs.gaps.len() > capacity {
            return Err(Fail(
                PcStatus::BufferTooSmall,
                format!("{} gaps found, buffer holds {capacity}", bs.gaps.len()),
            ));
        }
        if !bs.gaps.is_empty() && out.is_null() {
            return Err(Fail(PcStatus::NullPointer, "null pointer: out".into()));
        }
        for (i, g) in bs.gaps.iter().enumerate() {
            out.add(i).write(PcGap { lo_hz: g.lo, hi_hz: g.hi });
        }
        Ok(())
    })
}

/// The `count` eigenmodes nearest `shift_hz`, sorted by frequency.
#[no_mangle]
pub unsafe extern "C" fn pc_modes_solve(
    handle: *const PcMesh,
    mat: *const PcMaterial,
    kind: PcModel,
    thickness: f64,
    shift_hz: f64,
    count: usize,
    out: *mut *mut PcModeSet,
) -> PcStatus {
    guard(|| {
        let m = read(handle, "mesh")?;
        let mat = material(read(mat, "material")?)?;
        if out.is_null() {
            return Err(Fail(PcStatus::NullPointer, "null pointer: out".into()));
        }
        let sys = Arc::new(fem::assemble(&m.mesh, &mat, model(kind), thickness)?);
        let modes = fem::solve_modes(&sys, Frequency::from_hz(shift_hz)?, count)?;
        out.write(Box::into_raw(Box::new(PcModeSet { modes, material: mat })));
        Ok(())
    })
}

/// Number of modes; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pc_modes_len(handle: *const PcModeSet) -> usize {
    handle.as_ref().map_or(0, |s| s.modes.len())
}

#[no_mangle]
pub unsafe extern "C" fn pc_mode_report(handle: *const PcModeSet, index: usize, out: *mut PcModeReport) -> PcStatus {
    guard(|| {
        let set = read(handle, "modes")?;
        let r = modes::report(mode_at(set, index)?, &set.material)?;
        let report = PcModeReport {
            frequency_hz: r.frequency_hz,
            veff_m3: r.veff_m3,
            veff_over_lambda_p3: r.veff_over_lambda_p3.unwrap_or(f64::NAN),
            veff_over_lambda_s3: r.veff_over_lambda_s3.unwrap_or(f64::NAN),
            equipartition_ratio: r.equipartition_ratio,
            max_h_j_per_m3: r.max_h_j_per_m3,
            degenerate: r.degenerate,
        };
        write(out, report, "out")
    })
}

/// Single-phonon strain tensor at (x, y), row-major into `out[9]`.
#[no_mangle]
pub unsafe extern "C" fn pc_mode_zero_point_strain(
    handle: *const PcModeSet,
    index: usize,
    x: f64,
    y: f64,
    out: *mut f64,
) -> PcStatus {
    guard(|| {
        let set = read(handle, "modes")?;
        let eps = modes::zero_point_strain(mode_at(set, index)?, [x, y])?;
        if out.is_null() {
            return Err(Fail(PcStatus::NullPointer, "null pointer: out".into()));
        }
        for (i, v) in eps.iter().flatten().enumerate() {
            out.add(i).write(*v);
        }
        Ok(())
    })
}

/// Strain couplings of an NV at (x, y); a null `sus` selects the default
/// E-doublet susceptibilities.
#[no_mangle]
pub unsafe extern "C" fn pc_mode_couplings(
    handle: *const PcModeSet,
    index: usize,
    x: f64,
    y: f64,
    orientation: *const PcOrientation,
    sus: *const PcSusceptibilities,
    out: *mut PcCouplings,
) -> PcStatus {
    guard(|| {
        let set = read(handle, "modes")?;
        let o = read(orientation, "orientation")?;
        let o = NvOrientation::new(Miller(o.z), Miller(o.x))?;
        let s = match sus.as_ref() {
            None => StrainSusceptibilities::default(),
            Some(s) => StrainSusceptibilities {
                lambda_a: s.has_a.then_some(s.lambda_a),
                lambda_a_prime: s.has_a.then_some(s.lambda_a_prime),
                lambda_e: s.lambda_e,
                lambda_e_prime: s.lambda_e_prime,
            },
        };
        s.validate()?;
        let c = nv::coupling_coefficients(mode_at(set, index)?, [x, y], &o, &s)?;
        write(out, PcCouplings { g_a: c.g_a.unwrap_or(f64::NAN), g_e1: c.g_e1, g_e2: c.g_e2 }, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pc_modes_free(handle: *mut PcModeSet) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Bose–Einstein occupation of a mode at `omega_hz` and `temp_k`.
#[no_mangle]
pub unsafe extern "C" fn pc_thermal_occupation(omega_hz: f64, temp_k: f64, out: *mut f64) -> PcStatus {
    guard(|| {
        let n = nv::thermal_occupation(Frequency::from_hz(omega_hz)?, temp_k)?;
        write(out, n, "out")
    })
}

/// Cooperativity and cooling figures for a coupling rate `g_hz` = g/2π.
#[no_mangle]
pub unsafe extern "C" fn pc_cooling_report(
    g_hz: f64,
    inputs: *const PcCoolingInputs,
    out: *mut PcCoolingReport,
) -> PcStatus {
    guard(|| {
        let i = read(inputs, "inputs")?;
        let mut ci = CoolingInputs::new(Frequency::from_hz(i.omega_hz)?, i.q, i.temp_k);
        ci.gamma_xy = Frequency::from_hz(i.gamma_xy_hz)?;
        ci.omega_r = if i.omega_r_hz > 0.0 { Some(Frequency::from_hz(i.omega_r_hz)?) } else { None };
        ci.convention = match i.convention {
            PcGammaConvention::Half => GammaConvention::Half,
            PcGammaConvention::Full => GammaConvention::Full,
        };
        let r = nv::cooling_report(g_hz, &ci)?;
        let report = PcCoolingReport {
            n_th: r.n_th,
            gamma_th_hz: r.gamma_th_hz,
            c: r.c,
            gamma_e1_hz: r.gamma_e1_hz,
            gamma_e2_hz: r.gamma_e2_hz,
            n_fin: r.n_fin,
        };
        write(out, report, "out")
    })
}
