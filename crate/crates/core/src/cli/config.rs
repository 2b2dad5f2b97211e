//! Resolved run configuration: TOML sections with defaults, overridden by
//! command-line flags.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Model;
use crate::material::IsotropicMaterial;
use crate::mesh::{CavityParams, Termination, UnitCellParams};
use crate::nv::{GammaConvention, Grid, NvOrientation, StrainSusceptibilities};
use crate::oracles::{Layer, LayerStack};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub material: MaterialSection,
    pub wedge: WedgeSection,
    pub cell: CellSection,
    pub bands: BandsSection,
    pub cavity: CavitySection,
    pub modes: ModesSection,
    pub couple: CoupleSection,
    pub cool: CoolSection,
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSection {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
}

/// Tip-loaded truncated wedge and the window of the 1/r comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WedgeSection {
    pub half_angle: f64,
    pub tip_width: f64,
    pub length: f64,
    /// Axial tip force per unit thickness [N/m].
    pub force: f64,
    pub h: f64,
    /// Element size at the tip [m].
    pub hot_size: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellSection {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub gap: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsSection {
    pub h: f64,
    pub n_k: usize,
    pub n_bands: usize,
    pub thickness: f64,
    pub families: Vec<Model>,
}

/// Defect geometry; the mirror cells come from `[cell]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    pub d: f64,
    pub c: f64,
    pub e: f64,
    pub r_prime: f64,
    pub theta: f64,
    pub mirror_cells: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesSection {
    pub model: Model,
    pub thickness: f64,
    pub h: f64,
    pub shift_hz: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoupleSection {
    /// Mode export written by `modes`.
    pub mode: String,
    /// Orientation labels, or the keywords `reference` / `catalogue`.
    pub orientations: Vec<String>,
    /// `x0,y0,x1,y1,nx,ny`; empty means the mesh bounding box at 101×101.
    pub grid: String,
    pub lambda_e: f64,
    pub lambda_e_prime: f64,
    pub lambda_a: Option<f64>,
    pub lambda_a_prime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoolSection {
    pub g_hz: f64,
    pub omega_hz: f64,
    pub q: f64,
    pub temp_k: f64,
    pub gamma_xy_hz: f64,
    pub omega_r_hz: Option<f64>,
    pub gamma_convention: GammaConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Wedge,
    Layered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub kind: OracleKind,
    /// Polar angle of the wedge samples [rad].
    pub phi: f64,
    /// Layered rod as `length:density:modulus` triples.
    pub layers: Vec<String>,
    pub f_max_hz: f64,
    pub samples: usize,
}

impl Default for MaterialSection {
    fn default() -> Self {
        let d = IsotropicMaterial::diamond();
        MaterialSection { youngs_modulus: d.youngs_modulus(), poisson_ratio: d.poisson_ratio(), density: d.density() }
    }
}

impl Default for WedgeSection {
    fn default() -> Self {
        WedgeSection {
            half_angle: 0.15 * PI,
            tip_width: 10e-9,
            length: 10e-6,
            force: -1.0,
            h: 0.5e-6,
            hot_size: 5e-9,
            r_min: 0.2e-6,
            r_max: 2e-6,
            samples: 19,
        }
    }
}

impl Default for CellSection {
    fn default() -> Self {
        let p = UnitCellParams::reference();
        CellSection { a: p.a, b: p.b, r: p.r, gap: p.gap, height: p.height }
    }
}

impl Default for BandsSection {
    fn default() -> Self {
        BandsSection { h: 0.1e-6, n_k: 32, n_bands: 12, thickness: 1.0, families: Model::BOTH.to_vec() }
    }
}

impl Default for CavitySection {
    fn default() -> Self {
        let p = CavityParams::reference();
        CavitySection {
            d: p.d,
            c: p.c,
            e: p.e,
            r_prime: p.r_prime,
            theta: p.theta,
            mirror_cells: p.mirror_cells,
            termination: p.termination,
        }
    }
}

impl Default for ModesSection {
    fn default() -> Self {
        ModesSection { model: Model::InPlane, thickness: 0.5e-6, h: 0.1e-6, shift_hz: 2.838e9, count: 6 }
    }
}

impl Default for CoupleSection {
    fn default() -> Self {
        let s = StrainSusceptibilities::default();
        CoupleSection {
            mode: String::new(),
            orientations: vec!["reference".into()],
            grid: String::new(),
            lambda_e: s.lambda_e,
            lambda_e_prime: s.lambda_e_prime,
            lambda_a: None,
            lambda_a_prime: None,
        }
    }
}

impl Default for CoolSection {
    fn default() -> Self {
        CoolSection {
            g_hz: 5e6,
            omega_hz: 2.838e9,
            q: 1e5,
            temp_k: 4.0,
            gamma_xy_hz: 15e6,
            omega_r_hz: None,
            gamma_convention: GammaConvention::Full,
        }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        let d = IsotropicMaterial::diamond();
        let (rho, mu) = (d.density(), d.shear_modulus());
        OracleSection {
            kind: OracleKind::Wedge,
            phi: 0.0,
            layers: vec![format!("5e-7:{rho:e}:{mu:e}"), format!("5e-7:{:e}:{:e}", rho / 4.0, mu / 4.0)],
            f_max_hz: 20e9,
            samples: 4000,
        }
    }
}

fn positive(name: &str, v: f64, problems: &mut Vec<String>) {
    if !(v.is_finite() && v > 0.0) {
        problems.push(format!("{name} must be positive and finite, got {v}"));
    }
}

fn at_least(name: &str, v: usize, min: usize, problems: &mut Vec<String>) {
    if v < min {
        problems.push(format!("{name} must be at least {min}, got {v}"));
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn material(&self) -> Result<IsotropicMaterial> {
        let m = &self.material;
        IsotropicMaterial::new(m.youngs_modulus, m.poisson_ratio, m.density)
    }

    fn check_material(&self, problems: &mut Vec<String>) {
        if let Err(e) = self.material() {
            problems.push(format!("material: {e}"));
        }
    }

    pub fn cell_params(&self) -> UnitCellParams {
        let c = &self.cell;
        UnitCellParams { a: c.a, b: c.b, r: c.r, gap: c.gap, height: c.height }
    }

    pub fn cavity_params(&self) -> CavityParams {
        let c = &self.cavity;
        CavityParams {
            d: c.d,
            c: c.c,
            e: c.e,
            r_prime: c.r_prime,
            theta: c.theta,
            mirror: self.cell_params(),
            mirror_cells: c.mirror_cells,
            termination: c.termination,
        }
    }

    pub fn susceptibilities(&self) -> StrainSusceptibilities {
        let c = &self.couple;
        StrainSusceptibilities {
            lambda_a: c.lambda_a,
            lambda_a_prime: c.lambda_a_prime,
            lambda_e: c.lambda_e,
            lambda_e_prime: c.lambda_e_prime,
        }
    }

    pub fn orientations(&self) -> Result<Vec<NvOrientation>> {
        let mut out = Vec::new();
        for s in &self.couple.orientations {
            match s.trim() {
                "reference" => out.extend(NvOrientation::reference_set()),
                "catalogue" => out.extend(NvOrientation::catalogue()),
                label => out.push(label.parse()?),
            }
        }
        Ok(out)
    }

    pub fn grid(&self) -> Result<Option<Grid>> {
        let g = self.couple.grid.trim();
        if g.is_empty() {
            Ok(None)
        } else {
            g.parse().map(Some)
        }
    }

    pub fn layer_stack(&self) -> Result<LayerStack> {
        let mut layers = Vec::new();
        for s in &self.oracle.layers {
            let v: Vec<f64> = s
                .split(':')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidParameter(format!("layer `{s}` must be length:density:modulus")))?;
            if v.len() != 3 {
                return Err(Error::InvalidParameter(format!("layer `{s}` must be length:density:modulus")));
            }
            layers.push(Layer { length: v[0], density: v[1], modulus: v[2] });
        }
        LayerStack::new(layers)
    }

    /// Every violated field for `command`, reported together.
    pub fn validate(&self, command: Command) -> Result<()> {
        let mut p = Vec::new();
        match command {
            Command::Wedge => {
                self.check_material(&mut p);
                let w = &self.wedge;
                if !(w.half_angle > 0.0 && w.half_angle < PI / 2.0) {
                    p.push(format!("wedge.half_angle must lie in (0, pi/2), got {}", w.half_angle));
                }
                positive("wedge.tip_width", w.tip_width, &mut p);
                positive("wedge.length", w.length, &mut p);
                positive("wedge.h", w.h, &mut p);
                positive("wedge.hot_size", w.hot_size, &mut p);
                positive("wedge.r_min", w.r_min, &mut p);
                if !w.force.is_finite() || w.force == 0.0 {
                    p.push(format!("wedge.force must be finite and nonzero, got {}", w.force));
                }
                if !(w.r_max > w.r_min) {
                    p.push(format!("wedge.r_max ({}) must exceed wedge.r_min ({})", w.r_max, w.r_min));
                }
                at_least("wedge.samples", w.samples, 2, &mut p);
            }
            Command::Bands => {
                self.check_material(&mut p);
                self.check_cell(&mut p);
                let b = &self.bands;
                positive("bands.h", b.h, &mut p);
                positive("bands.thickness", b.thickness, &mut p);
                at_least("bands.n_k", b.n_k, 2, &mut p);
                at_least("bands.n_bands", b.n_bands, 1, &mut p);
                if b.families.is_empty() {
                    p.push("bands.families must name at least one model".into());
                }
            }
            Command::Modes => {
                self.check_material(&mut p);
                self.check_cell(&mut p);
                let c = &self.cavity;
                for (name, v) in
                    [("cavity.d", c.d), ("cavity.c", c.c), ("cavity.e", c.e), ("cavity.r_prime", c.r_prime)]
                {
                    positive(name, v, &mut p);
                }
                if !(c.theta > 0.0 && c.theta < PI / 2.0) {
                    p.push(format!("cavity.theta must lie in (0, pi/2), got {}", c.theta));
                }
                at_least("cavity.mirror_cells", c.mirror_cells, 1, &mut p);
                let m = &self.modes;
                positive("modes.thickness", m.thickness, &mut p);
                positive("modes.h", m.h, &mut p);
                if !(m.shift_hz.is_finite() && m.shift_hz >= 0.0) {
                    p.push(format!("modes.shift_hz must be non-negative, got {}", m.shift_hz));
                }
                at_least("modes.count", m.count, 1, &mut p);
            }
            Command::Couple => {
                self.check_material(&mut p);
                if self.couple.mode.trim().is_empty() {
                    p.push("couple.mode must name a mode export file".into());
                }
                match self.orientations() {
                    Ok(o) if o.is_empty() => p.push("couple.orientations is empty".into()),
                    Ok(_) => {}
                    Err(e) => p.push(format!("couple.orientations: {e}")),
                }
                if let Err(e) = self.grid() {
                    p.push(format!("couple.grid: {e}"));
                }
                if let Err(e) = self.susceptibilities().validate() {
                    p.push(format!("couple: {e}"));
                }
            }
            Command::Cool => {
                let c = &self.cool;
                if !c.g_hz.is_finite() {
                    p.push(format!("cool.g_hz must be finite, got {}", c.g_hz));
                }
                positive("cool.omega_hz", c.omega_hz, &mut p);
                if !(c.q.is_finite() && c.q >= 1.0) {
                    p.push(format!("cool.q must be at least 1, got {}", c.q));
                }
                if !(c.temp_k.is_finite() && c.temp_k >= 0.0) {
                    p.push(format!("cool.temp_k must be non-negative, got {}", c.temp_k));
                }
                positive("cool.gamma_xy_hz", c.gamma_xy_hz, &mut p);
                if let Some(r) = c.omega_r_hz {
                    positive("cool.omega_r_hz", r, &mut p);
                }
            }
            Command::Oracle => match self.oracle.kind {
                OracleKind::Wedge => {
                    self.check_material(&mut p);
                    let w = &self.wedge;
                    if !(w.half_angle > 0.0 && w.half_angle < PI / 2.0) {
                        p.push(format!("wedge.half_angle must lie in (0, pi/2), got {}", w.half_angle));
                    }
                    if !(self.oracle.phi.abs() <= w.half_angle) {
                        p.push(format!("oracle.phi must lie within ±wedge.half_angle, got {}", self.oracle.phi));
                    }
                    positive("wedge.r_min", w.r_min, &mut p);
                    if !(w.r_max > w.r_min) {
                        p.push(format!("wedge.r_max ({}) must exceed wedge.r_min ({})", w.r_max, w.r_min));
                    }
                    at_least("wedge.samples", w.samples, 2, &mut p);
                }
                OracleKind::Layered => {
                    if let Err(e) = self.layer_stack() {
                        p.push(format!("oracle.layers: {e}"));
                    }
                    positive("oracle.f_max_hz", self.oracle.f_max_hz, &mut p);
                    at_least("oracle.samples", self.oracle.samples, 2, &mut p);
                }
            },
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    fn check_cell(&self, p: &mut Vec<String>) {
        let c = &self.cell;
        for (name, v) in
            [("cell.a", c.a), ("cell.b", c.b), ("cell.r", c.r), ("cell.gap", c.gap), ("cell.height", c.height)]
        {
            positive(name, v, p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Wedge,
    Bands,
    Modes,
    Couple,
    Cool,
    Oracle,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Wedge => "wedge",
            Command::Bands => "bands",
            Command::Modes => "modes",
            Command::Couple => "couple",
            Command::Cool => "cool",
            Command::Oracle => "oracle",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c = RunConfig::from_toml("[cell]\nb = 3.5e-7\n\n[cool]\nq = 1e6\n").unwrap();
        assert_eq!(c.cell.b, 3.5e-7);
        assert_eq!(c.cool.q, 1e6);
        assert_eq!(c.cell.a, CellSection::default().a);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml("[cell]\nbb = 1.0\n"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("[nope]\n").is_err());
    }

    #[test]
    fn all_problems_listed() {
        let mut c = RunConfig::default();
        c.cool.q = 0.5;
        c.cool.temp_k = -1.0;
        c.cool.omega_hz = 0.0;
        match c.validate(Command::Cool) {
            Err(Error::Config(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::default().validate(Command::Cool).is_ok());
    }

    #[test]
    fn orientation_keywords() {
        let mut c = RunConfig::default();
        assert_eq!(c.orientations().unwrap().len(), 4);
        c.couple.orientations = vec!["catalogue".into(), "z=[1,1,1],x=[-1,-1,2]".into()];
        assert_eq!(c.orientations().unwrap().len(), 13);
    }

    #[test]
    fn layer_triples() {
        let mut c = RunConfig::default();
        c.oracle.layers = vec!["5e-7:3500:4.375e11".into(), "5e-7:875:1.09375e11".into()];
        assert_eq!(c.layer_stack().unwrap().layers().len(), 2);
        c.oracle.layers.push("1:2".into());
        assert!(c.layer_stack().is_err());
    }
}
