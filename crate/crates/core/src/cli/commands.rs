//! Subcommand bodies. Each takes a validated configuration and writes its
//! artifacts through [`Output`].

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{OracleKind, RunConfig};
use super::output::{Cell, Output};
use crate::error::{Error, Result};
use crate::fem::{
    assemble, band_structure, solve_modes, solve_static, BandOptions, Constraint, Load, Model, Prescribed, Target,
};
use crate::material::{Frequency, IsotropicMaterial};
use crate::mesh::{self, generate, BoundaryTag, GeometrySpec, Shape, WedgeParams};
use crate::modes::{
    decades_per_step, decay_profile, energy_density, energy_fraction_within, normalize, report, ElasticMode,
    ModeReport, Normalization, StrainPadding,
};
use crate::nv::{cooling_report, coupling_map, CoolingInputs, CoolingReport, Grid};
use crate::oracles::{layered_dispersion, stop_bands, wedge_strain, wedge_strain_force_balance, WedgeSpec};

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Least-squares slope of ln y against ln x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct WedgeSummary {
    pub nodes: usize,
    pub elements: usize,
    pub relative_residual: f64,
    pub slope: f64,
    pub max_rel_dev_formula: f64,
    pub max_rel_dev_force_balance: f64,
}

pub fn wedge(cfg: &RunConfig, out: &Output) -> Result<WedgeSummary> {
    let w = &cfg.wedge;
    let mat = cfg.material()?;
    let shape = Shape::Wedge(WedgeParams { half_angle: w.half_angle, tip_width: w.tip_width, length: w.length });
    let mut spec = GeometrySpec::new(shape, w.h);
    spec.refinement = (w.h / w.hot_size).max(1.0);
    spec.validate()?;
    let mesh = Arc::new(generate(&spec)?);
    let sys = assemble(&mesh, &mat, Model::InPlane, 1.0)?;
    let loads = [Load::Traction { tag: BoundaryTag::Load, traction: [w.force / w.tip_width, 0.0] }];
    let fixed = [Constraint { target: Target::Tag(BoundaryTag::Clamped), value: Prescribed::FIXED }];
    let sol = solve_static(&sys, &loads, &fixed)?;

    let oracle = WedgeSpec::new(w.force, w.half_angle, mat.youngs_modulus())?;
    let apex = -0.5 * w.tip_width / w.half_angle.tan();
    let radii = log_space(w.r_min, w.r_max, w.samples);
    let mut rows = Vec::with_capacity(radii.len());
    let (mut fem, mut dev_f, mut dev_b) = (Vec::new(), 0.0f64, 0.0f64);
    for &r in &radii {
        let e = sol.strain_at([apex + r, 0.0])?[0];
        let formula = wedge_strain(&oracle, r, 0.0)?.rr;
        let balance = wedge_strain_force_balance(&oracle, r, 0.0)?;
        dev_f = dev_f.max((e / formula - 1.0).abs());
        dev_b = dev_b.max((e / balance - 1.0).abs());
        fem.push(e);
        rows.push(vec![Cell::from(r), e.into(), formula.into(), balance.into()]);
    }
    out.csv("wedge.csv", &["r", "e_rr_fem", "e_rr_formula", "e_rr_force_balance"], rows)?;
    let summary = WedgeSummary {
        nodes: mesh.node_count(),
        elements: mesh.element_count(),
        relative_residual: sol.relative_residual(),
        slope: log_log_slope(&radii, &fem),
        max_rel_dev_formula: dev_f,
        max_rel_dev_force_balance: dev_b,
    };
    out.json("wedge.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
struct GapRecord {
    lo_hz: f64,
    hi_hz: f64,
    width_hz: f64,
    midgap_hz: f64,
}

#[derive(Debug, Clone, Serialize)]
struct GapsFile {
    lattice_constant: f64,
    ceiling_hz: f64,
    gaps: Vec<GapRecord>,
    widest: Option<GapRecord>,
}

pub fn bands(cfg: &RunConfig, out: &Output) -> Result<()> {
    let b = &cfg.bands;
    let mat = cfg.material()?;
    let spec = GeometrySpec::new(Shape::UnitCell(cfg.cell_params()), b.h);
    spec.validate()?;
    let mesh = Arc::new(generate(&spec)?);
    let opts = BandOptions { n_k: b.n_k, n_bands: b.n_bands, families: b.families.clone(), thickness: b.thickness };
    let bs = band_structure(&mesh, &[mat], &opts)?;
    let mut rows = Vec::new();
    for fam in &bs.families {
        for (k, freqs) in bs.k_samples.iter().zip(&fam.bands) {
            for (i, f) in freqs.iter().enumerate() {
                rows.push(vec![Cell::from(*k), i.into(), fam.family.as_str().into(), (*f).into()]);
            }
        }
    }
    out.csv("bands.csv", &["k", "band_index", "family", "frequency_hz"], rows)?;
    let record =
        |g: crate::fem::Gap| GapRecord { lo_hz: g.lo, hi_hz: g.hi, width_hz: g.width(), midgap_hz: g.midgap() };
    let file = GapsFile {
        lattice_constant: bs.lattice_constant,
        ceiling_hz: bs.ceiling,
        gaps: bs.gaps.iter().copied().map(record).collect(),
        widest: bs.widest_gap().map(record),
    };
    out.json("gaps.json", &file)?;
    Ok(())
}

/// Self-contained eigenmode written by `modes` and read by `couple`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeExport {
    /// Mesh file, relative to the export.
    pub mesh: String,
    pub model: Model,
    pub thickness: f64,
    pub material: IsotropicMaterial,
    pub omega_rad_per_s: f64,
    pub frequency_hz: f64,
    pub degenerate: bool,
    /// Nodal displacements, kinetic-unit normalized.
    pub displacements: Vec<f64>,
}

impl ModeExport {
    pub fn read(path: &Path) -> Result<(ModeExport, ElasticMode)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let export: ModeExport = serde_json::from_str(&text)?;
        let mesh_path = path.parent().unwrap_or(Path::new(".")).join(&export.mesh);
        let mesh = Arc::new(mesh::load(&mesh_path)?);
        let sys = Arc::new(assemble(&mesh, &export.material, export.model, export.thickness)?);
        let raw =
            ElasticMode::new_raw(sys, Frequency::from_angular(export.omega_rad_per_s)?, export.displacements.clone())?;
        let mode = normalize(&raw)?;
        Ok((export, mode))
    }
}

#[derive(Debug, Clone, Serialize)]
struct ModeEntry {
    index: usize,
    field_file: String,
    mode_file: String,
    core_energy_fraction: f64,
    decades_per_cell: Vec<f64>,
    #[serde(flatten)]
    report: ModeReport,
}

#[derive(Debug, Clone, Serialize)]
struct ModesFile {
    nodes: usize,
    elements: usize,
    layout: mesh::CavityLayout,
    /// Nearest the shift among modes with most energy inside the defect.
    selected: Option<usize>,
    modes: Vec<ModeEntry>,
}

fn field_rows(mode: &ElasticMode, mat: &IsotropicMaterial) -> Result<Vec<Vec<Cell>>> {
    let h = energy_density(mode, mat);
    let mut rows = Vec::with_capacity(h.points.len());
    for (p, v) in h.points.iter().zip(&h.values) {
        let u = mode.displacement_at(*p)?;
        let s = mode.strain_at(*p)?;
        let row = match mode.model() {
            Model::InPlane => vec![p[0], p[1], u[0], u[1], s[0], s[1], s[2], *v],
            Model::OutOfPlane => vec![p[0], p[1], u[0], s[0], s[1], *v],
        };
        rows.push(row.into_iter().map(Cell::from).collect());
    }
    Ok(rows)
}

pub fn modes(cfg: &RunConfig, out: &Output) -> Result<()> {
    let m = &cfg.modes;
    let mat = cfg.material()?;
    let params = cfg.cavity_params();
    let layout = params.layout();
    let spec = GeometrySpec::new(Shape::Cavity(params), m.h);
    spec.validate()?;
    let mesh = Arc::new(generate(&spec)?);
    let sys = Arc::new(assemble(&mesh, &mat, m.model, m.thickness)?);
    let found = solve_modes(&sys, Frequency::from_hz(m.shift_hz)?, m.count)?;

    let mut mesh_text = Vec::new();
    mesh::write_mesh(&mesh, &mut mesh_text).map_err(|e| Error::io(out.path("mesh.txt"), e))?;
    out.text("mesh.txt", &String::from_utf8_lossy(&mesh_text))?;

    let edges: Vec<f64> = std::iter::once(0.0)
        .chain((0..=params.mirror_cells).map(|i| layout.first_cell + params.mirror.a * i as f64))
        .collect();
    let columns: &[&str] = match m.model {
        Model::InPlane => &["X", "Y", "uX", "uY", "eXX", "eYY", "eXY", "h"],
        Model::OutOfPlane => &["X", "Y", "uZ", "eXZ", "eYZ", "h"],
    };
    let mut entries = Vec::new();
    for (i, mode) in found.iter().enumerate() {
        let h = energy_density(mode, &mat);
        let field_file = format!("mode_{i}.csv");
        let mode_file = format!("mode_{i}.json");
        out.csv(&field_file, columns, field_rows(mode, &mat)?)?;
        debug_assert_eq!(mode.normalization(), Normalization::KineticUnit);
        let export = ModeExport {
            mesh: "mesh.txt".into(),
            model: m.model,
            thickness: m.thickness,
            material: mat,
            omega_rad_per_s: mode.omega().angular(),
            frequency_hz: mode.frequency_hz(),
            degenerate: mode.is_degenerate(),
            displacements: mode.displacements().to_vec(),
        };
        out.json(&mode_file, &export)?;
        entries.push(ModeEntry {
            index: i,
            field_file,
            mode_file,
            core_energy_fraction: energy_fraction_within(&h, layout.first_cell),
            decades_per_cell: decades_per_step(&decay_profile(&h, &edges)),
            report: report(mode, &mat)?,
        });
    }
    let selected = entries
        .iter()
        .filter(|e| e.core_energy_fraction > 0.5)
        .min_by(|a, b| {
            (a.report.frequency_hz - m.shift_hz).abs().total_cmp(&(b.report.frequency_hz - m.shift_hz).abs())
        })
        .map(|e| e.index);
    let file = ModesFile { nodes: mesh.node_count(), elements: mesh.element_count(), layout, selected, modes: entries };
    out.json("modes.json", &file)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Peak {
    value_hz: f64,
    x: f64,
    y: f64,
    orientation: String,
}

#[derive(Debug, Clone, Serialize)]
struct CoupleSummary {
    mode: String,
    frequency_hz: f64,
    grid: Grid,
    points_inside: usize,
    max_abs_g_e1: Option<Peak>,
    max_abs_g_e2: Option<Peak>,
}

pub fn couple(cfg: &RunConfig, out: &Output) -> Result<()> {
    let path = PathBuf::from(&cfg.couple.mode);
    let (export, mode) = ModeExport::read(&path)?;
    let grid = match cfg.grid()? {
        Some(g) => g,
        None => {
            let [x0, y0, x1, y1] = mode.space().mesh().bounding_box();
            Grid { x0, y0, x1, y1, nx: 101, ny: 101 }
        }
    };
    let orientations = cfg.orientations()?;
    let rows = coupling_map(&mode, &grid.points(), &orientations, &cfg.susceptibilities(), StrainPadding::PlaneStress)?;

    let mut csv = Vec::new();
    let mut inside = 0;
    let (mut e1, mut e2): (Option<Peak>, Option<Peak>) = (None, None);
    let better = |best: &Option<Peak>, v: f64| best.as_ref().is_none_or(|b| v.abs() > b.value_hz);
    for (i, row) in rows.iter().enumerate() {
        let Some(c) = row.couplings else { continue };
        if i % orientations.len() == 0 {
            inside += 1;
        }
        let label = row.orientation.label();
        let peak =
            |v: f64| Peak { value_hz: v.abs(), x: row.position[0], y: row.position[1], orientation: label.clone() };
        if better(&e1, c.g_e1) {
            e1 = Some(peak(c.g_e1));
        }
        if better(&e2, c.g_e2) {
            e2 = Some(peak(c.g_e2));
        }
        csv.push(vec![
            Cell::from(row.position[0]),
            row.position[1].into(),
            label.into(),
            c.g_a.unwrap_or(f64::NAN).into(),
            c.g_e1.into(),
            c.g_e2.into(),
        ]);
    }
    out.csv("couple.csv", &["X", "Y", "orientation", "g_A_hz", "g_E1_hz", "g_E2_hz"], csv)?;
    let summary = CoupleSummary {
        mode: cfg.couple.mode.clone(),
        frequency_hz: export.frequency_hz,
        grid,
        points_inside: inside,
        max_abs_g_e1: e1,
        max_abs_g_e2: e2,
    };
    out.json("couple.json", &summary)?;
    Ok(())
}

pub fn cool(cfg: &RunConfig, out: &Output) -> Result<CoolingReport> {
    let c = &cfg.cool;
    let mut inputs = CoolingInputs::new(Frequency::from_hz(c.omega_hz)?, c.q, c.temp_k);
    inputs.gamma_xy = Frequency::from_hz(c.gamma_xy_hz)?;
    inputs.omega_r = c.omega_r_hz.map(Frequency::from_hz).transpose()?;
    inputs.convention = c.gamma_convention;
    let report = cooling_report(c.g_hz, &inputs)?;
    out.json("cool.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
struct StopBand {
    lo_hz: f64,
    hi_hz: f64,
}

#[derive(Debug, Clone, Serialize)]
struct LayeredFile {
    period: f64,
    stop_bands: Vec<StopBand>,
}

pub fn oracle(cfg: &RunConfig, out: &Output) -> Result<()> {
    match cfg.oracle.kind {
        OracleKind::Wedge => {
            let w = &cfg.wedge;
            let spec = WedgeSpec::new(w.force, w.half_angle, cfg.material()?.youngs_modulus())?;
            let phi = cfg.oracle.phi;
            let rows = log_space(w.r_min, w.r_max, w.samples)
                .into_iter()
                .map(|r| Ok(vec![Cell::from(r), phi.into(), wedge_strain(&spec, r, phi)?.rr.into()]))
                .collect::<Result<Vec<_>>>()?;
            out.csv("oracle_wedge.csv", &["r", "phi", "e_rr"], rows)?;
        }
        OracleKind::Layered => {
            let o = &cfg.oracle;
            let stack = cfg.layer_stack()?;
            let rows = (0..o.samples)
                .map(|i| {
                    let f = o.f_max_hz * i as f64 / (o.samples - 1) as f64;
                    Ok(vec![Cell::from(f), layered_dispersion(&stack, Frequency::from_hz(f)?).into()])
                })
                .collect::<Result<Vec<_>>>()?;
            out.csv("oracle_layered.csv", &["f_hz", "cos_ka"], rows)?;
            let bands = stop_bands(&stack, o.f_max_hz, o.samples);
            let file = LayeredFile {
                period: stack.period(),
                stop_bands: bands.into_iter().map(|(lo_hz, hi_hz)| StopBand { lo_hz, hi_hz }).collect(),
            };
            out.json("oracle_layered.json", &file)?;
        }
    }
    Ok(())
}
