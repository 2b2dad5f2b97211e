//! Modal post-processing: energy density, effective mode volume, kinetic
//! normalization and single-phonon (zero-point) strain.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::element::QUADRATURE;
use crate::fem::{element_displacement, element_strain, FeSpace, Model, SystemMatrices};
use crate::material::{wavelengths, Frequency, IsotropicMaterial, HBAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// ∫ρ|u|² dV = 1 [kg m²]⁻¹-scaled field.
    KineticUnit,
    Raw,
}

/// Treatment of ε_ZZ when embedding an in-plane strain in 3D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrainPadding {
    /// ε_ZZ = −ν(ε_XX + ε_YY)/(1 − ν).
    #[default]
    PlaneStress,
    Zero,
}

/// An eigenmode (or any trial field) on an assembled system.
#[derive(Debug, Clone)]
pub struct ElasticMode {
    system: Arc<SystemMatrices>,
    omega: Frequency,
    u: Vec<f64>,
    normalization: Normalization,
    degenerate: bool,
}

impl ElasticMode {
    pub(crate) fn from_parts(
        system: Arc<SystemMatrices>,
        omega: Frequency,
        u: Vec<f64>,
        normalization: Normalization,
        degenerate: bool,
    ) -> Self {
        ElasticMode { system, omega, u, normalization, degenerate }
    }

    /// Wraps a user-supplied nodal field, e.g. an analytic mode shape.
    pub fn new_raw(system: Arc<SystemMatrices>, omega: Frequency, u: Vec<f64>) -> Result<Self> {
        if u.len() != system.dof_count() {
            return Err(Error::InvalidParameter(format!(
                "field has {} entries, system has {} DOFs",
                u.len(),
                system.dof_count()
            )));
        }
        Ok(ElasticMode { system, omega, u, normalization: Normalization::Raw, degenerate: false })
    }

    pub fn omega(&self) -> Frequency {
        self.omega
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega.hz()
    }

    pub fn model(&self) -> Model {
        self.system.model()
    }

    pub fn system(&self) -> &Arc<SystemMatrices> {
        &self.system
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        self.system.space()
    }

    pub fn thickness(&self) -> f64 {
        self.system.thickness()
    }

    pub fn displacements(&self) -> &[f64] {
        &self.u
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Amplitude-scaled copy, marked raw.
    pub fn scaled(&self, factor: f64) -> ElasticMode {
        ElasticMode {
            system: Arc::clone(&self.system),
            omega: self.omega,
            u: self.u.iter().map(|v| v * factor).collect(),
            normalization: Normalization::Raw,
            degenerate: self.degenerate,
        }
    }

    /// Rayleigh quotient uᵀKu / uᵀMu.
    pub fn rayleigh_quotient(&self) -> Result<f64> {
        let m = self.system.mass().quadratic_form(&self.u);
        if m <= 0.0 {
            return Err(Error::NullMode);
        }
        Ok(self.system.stiffness().quadratic_form(&self.u) / m)
    }

    /// ∫ρ|u|² dV.
    pub fn kinetic_norm(&self) -> f64 {
        self.system.mass().quadratic_form(&self.u)
    }

    fn locate(&self, p: [f64; 2]) -> Result<(usize, [f64; 3])> {
        self.space().locate(p).ok_or(Error::OutsideMesh { x: p[0], y: p[1] })
    }

    pub fn displacement_at(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let (e, l) = self.locate(p)?;
        Ok(element_displacement(self.model(), self.space(), &self.u, e, l))
    }

    /// In-plane [ε_XX, ε_YY, ε_XY] or out-of-plane [ε_XZ, ε_YZ, 0].
    pub fn strain_at(&self, p: [f64; 2]) -> Result<[f64; 3]> {
        let (e, l) = self.locate(p)?;
        Ok(element_strain(self.model(), self.space(), &self.u, e, l))
    }

    /// Full symmetric lab-frame strain tensor at a point.
    pub fn strain_tensor_at(&self, p: [f64; 2], padding: StrainPadding) -> Result<[[f64; 3]; 3]> {
        let (e, l) = self.locate(p)?;
        let s = element_strain(self.model(), self.space(), &self.u, e, l);
        Ok(embed(self.model(), s, self.system.material_of(e), padding))
    }

    /// Strain at the quadrature points of every element.
    pub fn element_strains(&self) -> Vec<[[f64; 3]; 6]> {
        (0..self.space().elements().len())
            .map(|e| {
                let mut out = [[0.0; 3]; 6];
                for (q, (l, _)) in QUADRATURE.iter().enumerate() {
                    out[q] = element_strain(self.model(), self.space(), &self.u, e, *l);
                }
                out
            })
            .collect()
    }
}

pub(crate) fn embed(model: Model, s: [f64; 3], mat: &IsotropicMaterial, padding: StrainPadding) -> [[f64; 3]; 3] {
    match model {
        Model::InPlane => {
            let ezz = match padding {
                StrainPadding::PlaneStress => mat.plane_stress_ezz(s[0], s[1]),
                StrainPadding::Zero => 0.0,
            };
            [[s[0], s[2], 0.0], [s[2], s[1], 0.0], [0.0, 0.0, ezz]]
        }
        Model::OutOfPlane => [[0.0, 0.0, s[0]], [0.0, 0.0, s[1]], [s[0], s[1], 0.0]],
    }
}

/// Energy density sampled at element quadrature points.
#[derive(Debug, Clone)]
pub struct EnergyDensity {
    pub points: Vec<[f64; 2]>,
    /// h [J/m³] at each point.
    pub values: Vec<f64>,
    /// Volume weight of each point [m³].
    pub weights: Vec<f64>,
    /// ∫ ½ ε:c̃:ε dV.
    pub strain_energy: f64,
    /// ∫ ½ Ω² ρ |u|² dV.
    pub kinetic_energy: f64,
    /// The Rayleigh quotient formed with this material differs from Ω² by more than 10⁻⁶.
    pub material_mismatch: bool,
}

impl EnergyDensity {
    pub fn total(&self) -> f64 {
        self.strain_energy + self.kinetic_energy
    }

    /// Largest sample and its position.
    pub fn max(&self) -> (f64, [f64; 2]) {
        let mut best = (0.0, [0.0; 2]);
        for (v, p) in self.values.iter().zip(&self.points) {
            if *v > best.0 {
                best = (*v, *p);
            }
        }
        best
    }

    /// Kinetic over strain energy; 1 for an exact eigenpair.
    pub fn equipartition_ratio(&self) -> f64 {
        self.kinetic_energy / self.strain_energy
    }
}

/// h(r) = ½ ε:c̃:ε + ½ Ω² ρ |u|², using `mat` everywhere.
pub fn energy_density(mode: &ElasticMode, mat: &IsotropicMaterial) -> EnergyDensity {
    let space = mode.space();
    let t = mode.thickness();
    let omega2 = mode.omega().squared();
    let ne = space.elements().len();
    let mut out = EnergyDensity {
        points: Vec::with_capacity(6 * ne),
        values: Vec::with_capacity(6 * ne),
        weights: Vec::with_capacity(6 * ne),
        strain_energy: 0.0,
        kinetic_energy: 0.0,
        material_mismatch: false,
    };
    for e in 0..ne {
        let geo = space.geometry(e);
        let nodes = &space.elements()[e];
        for (l, w) in QUADRATURE {
            let s = element_strain(mode.model(), space, &mode.u, e, l);
            let u = element_displacement(mode.model(), space, &mode.u, e, l);
            let eps = embed(mode.model(), s, mat, StrainPadding::PlaneStress);
            let strain = 0.5 * mat.strain_energy_product(&eps);
            let kinetic = 0.5 * omega2 * mat.density() * (u[0] * u[0] + u[1] * u[1]);
            let weight = w * geo.area * t;
            let mut p = [0.0; 2];
            for (node, n) in nodes.iter().zip(crate::fem::element::shape_values(l)) {
                let q = space.points()[*node];
                p[0] += n * q[0];
                p[1] += n * q[1];
            }
            out.points.push(p);
            out.values.push(strain + kinetic);
            out.weights.push(weight);
            out.strain_energy += weight * strain;
            out.kinetic_energy += weight * kinetic;
        }
    }
    if out.kinetic_energy > 0.0 {
        let ratio = out.strain_energy / out.kinetic_energy;
        out.material_mismatch = (ratio - 1.0).abs() > 1e-6;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeVolume {
    /// V_eff [m³].
    pub veff: f64,
    /// V_eff / t [m²].
    pub area: f64,
    pub over_lambda_p3: Option<f64>,
    pub over_lambda_s3: Option<f64>,
    pub max_h: f64,
    pub max_at: [f64; 2],
}

/// V_eff = ∫h dV / max h, the maximum taken over quadrature points.
pub fn effective_volume(mode: &ElasticMode, mat: &IsotropicMaterial) -> Result<ModeVolume> {
    let h = energy_density(mode, mat);
    volume_from_density(&h, mode, mat)
}

pub fn volume_from_density(h: &EnergyDensity, mode: &ElasticMode, mat: &IsotropicMaterial) -> Result<ModeVolume> {
    let (max_h, max_at) = h.max();
    if !(max_h > 0.0) {
        return Err(Error::NullMode);
    }
    let total: f64 = h.values.iter().zip(&h.weights).map(|(v, w)| v * w).sum();
    let veff = total / max_h;
    let (p3, s3) = match wavelengths(mat, mode.omega()) {
        Ok(w) => (Some(veff / w.longitudinal.powi(3)), Some(veff / w.shear.powi(3))),
        Err(_) => (None, None),
    };
    Ok(ModeVolume { veff, area: veff / mode.thickness(), over_lambda_p3: p3, over_lambda_s3: s3, max_h, max_at })
}

/// Share of ∫h dV carried by points with |X| ≤ `x_max`.
pub fn energy_fraction_within(h: &EnergyDensity, x_max: f64) -> f64 {
    let mut inside = 0.0;
    let mut total = 0.0;
    for ((v, w), p) in h.values.iter().zip(&h.weights).zip(&h.points) {
        total += v * w;
        if p[0].abs() <= x_max {
            inside += v * w;
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

/// Largest h in each band edges[i] ≤ |X| < edges[i+1].
pub fn decay_profile(h: &EnergyDensity, edges: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0f64; edges.len().saturating_sub(1)];
    for (v, p) in h.values.iter().zip(&h.points) {
        let x = p[0].abs();
        if let Some(i) = edges.windows(2).position(|w| x >= w[0] && x < w[1]) {
            out[i] = out[i].max(*v);
        }
    }
    out
}

/// Decades of max-h drop between consecutive bands of a decay profile.
pub fn decades_per_step(profile: &[f64]) -> Vec<f64> {
    profile.windows(2).map(|w| (w[0] / w[1]).log10()).collect()
}

/// Rescales to ∫ρ|u|² dV = 1 with the largest entry positive.
pub fn normalize(mode: &ElasticMode) -> Result<ElasticMode> {
    if mode.normalization == Normalization::KineticUnit {
        return Ok(mode.clone());
    }
    let norm2 = mode.kinetic_norm();
    if !(norm2 > 0.0) {
        return Err(Error::NullMode);
    }
    let s = norm2.sqrt();
    let mut u: Vec<f64> = mode.u.iter().map(|v| v / s).collect();
    crate::fem::fix_sign(&mut u);
    Ok(ElasticMode { u, normalization: Normalization::KineticUnit, ..mode.clone() })
}

/// (1/Ω²) ∫ ε:c̃:ε dV with the mode's own materials; 1 for a normalized eigenmode.
pub fn strain_normalization(mode: &ElasticMode) -> Result<f64> {
    let omega2 = mode.omega().squared();
    if omega2 <= 0.0 {
        return Err(Error::ZeroDenominator("strain normalization at zero frequency"));
    }
    Ok(mode.system().stiffness().quadratic_form(mode.displacements()) / omega2)
}

/// sqrt(ħ / 2Ω), the single-phonon amplitude factor.
pub fn zero_point_amplitude(omega: Frequency, hbar: f64) -> f64 {
    (hbar / (2.0 * omega.angular())).sqrt()
}

/// sqrt(ħ/2Ω) ε(r) for a kinetic-unit mode: the dimensionless single-phonon strain.
pub fn zero_point_strain(mode: &ElasticMode, p: [f64; 2]) -> Result<[[f64; 3]; 3]> {
    zero_point_strain_with(mode, p, StrainPadding::PlaneStress, HBAR)
}

pub fn zero_point_strain_with(
    mode: &ElasticMode,
    p: [f64; 2],
    padding: StrainPadding,
    hbar: f64,
) -> Result<[[f64; 3]; 3]> {
    if mode.normalization != Normalization::KineticUnit {
        return Err(Error::InvalidParameter("zero-point strain needs a kinetic-unit normalized mode".into()));
    }
    let eps = mode.strain_tensor_at(p, padding)?;
    if eps.iter().flatten().all(|&v| v == 0.0) {
        return Ok([[0.0; 3]; 3]);
    }
    if mode.omega().angular() <= 0.0 {
        return Err(Error::ZeroDenominator("zero-point amplitude at zero frequency"));
    }
    let a = zero_point_amplitude(mode.omega(), hbar);
    Ok(eps.map(|row| row.map(|v| a * v)))
}

/// Summary written by the `modes` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeReport {
    pub frequency_hz: f64,
    pub veff_m3: f64,
    pub veff_over_lambda_p3: Option<f64>,
    pub veff_over_lambda_s3: Option<f64>,
    pub equipartition_ratio: f64,
    pub max_h_j_per_m3: f64,
    pub degenerate: bool,
}

pub fn report(mode: &ElasticMode, mat: &IsotropicMaterial) -> Result<ModeReport> {
    let h = energy_density(mode, mat);
    let v = volume_from_density(&h, mode, mat)?;
    Ok(ModeReport {
        frequency_hz: mode.frequency_hz(),
        veff_m3: v.veff,
        veff_over_lambda_p3: v.over_lambda_p3,
        veff_over_lambda_s3: v.over_lambda_s3,
        equipartition_ratio: h.equipartition_ratio(),
        max_h_j_per_m3: v.max_h,
        degenerate: mode.is_degenerate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, solve_modes};
    use crate::mesh::{generate, GeometrySpec, Shape};

    fn strip(model: Model) -> Arc<SystemMatrices> {
        let spec = GeometrySpec::new(
            Shape::Rectangle { width: 4e-6, height: 0.5e-6, periodic: false, interfaces: vec![] },
            0.1e-6,
        );
        let mesh = Arc::new(generate(&spec).unwrap());
        Arc::new(assemble(&mesh, &IsotropicMaterial::diamond(), model, 0.5e-6).unwrap())
    }

    #[test]
    fn uniform_field_volume_is_geometric() {
        let sys = strip(Model::OutOfPlane);
        let u = vec![1.0; sys.dof_count()];
        let mode = ElasticMode::new_raw(Arc::clone(&sys), Frequency::from_hz(1e9).unwrap(), u).unwrap();
        let v = effective_volume(&mode, &IsotropicMaterial::diamond()).unwrap();
        let geometric = 4e-6 * 0.5e-6 * 0.5e-6;
        assert!((v.veff - geometric).abs() < 1e-9 * geometric);
    }

    #[test]
    fn rod_mode_has_uniform_density() {
        // u_Z = cos(nπX/L) with Ω = v_s nπ/L: strain ∝ sin², kinetic ∝ cos²
        let sys = strip(Model::OutOfPlane);
        let mat = IsotropicMaterial::diamond();
        let k = 2.0 * std::f64::consts::PI / 4e-6;
        let omega = Frequency::from_angular(k * (mat.shear_modulus() / mat.density()).sqrt()).unwrap();
        let u: Vec<f64> = sys.space().points().iter().map(|p| (k * p[0]).cos()).collect();
        let mode = ElasticMode::new_raw(Arc::clone(&sys), omega, u).unwrap();
        let h = energy_density(&mode, &mat);
        let (max, _) = h.max();
        let min = h.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((max - min) / max < 1e-2, "{min} {max}");
        let v = effective_volume(&mode, &mat).unwrap();
        assert!((v.veff / (4e-6 * 0.25e-12) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn normalization_and_equipartition() {
        let sys = strip(Model::InPlane);
        let mat = IsotropicMaterial::diamond();
        let modes = solve_modes(&sys, Frequency::from_hz(2e9).unwrap(), 3).unwrap();
        for m in &modes {
            let raw = m.scaled(7.0);
            let n = normalize(&raw).unwrap();
            assert!((n.kinetic_norm() - 1.0).abs() < 1e-12);
            assert!((strain_normalization(&n).unwrap() - 1.0).abs() < 1e-8);
            let h = energy_density(&n, &mat);
            assert!((h.equipartition_ratio() - 1.0).abs() < 1e-8);
            assert!(!h.material_mismatch);
            assert!((h.total() - n.omega().squared()).abs() < 1e-8 * n.omega().squared());
            let again = normalize(&n).unwrap();
            assert_eq!(again.displacements(), n.displacements());
            for (a, b) in n.displacements().iter().zip(m.displacements()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn wrong_material_is_flagged() {
        let sys = strip(Model::InPlane);
        let modes = solve_modes(&sys, Frequency::from_hz(2e9).unwrap(), 1).unwrap();
        let soft = IsotropicMaterial::new(500e9, 0.2, 3500.0).unwrap();
        assert!(energy_density(&modes[0], &soft).material_mismatch);
    }

    #[test]
    fn null_mode_rejected() {
        let sys = strip(Model::InPlane);
        let zero = ElasticMode::new_raw(Arc::clone(&sys), Frequency::from_hz(1e9).unwrap(), vec![0.0; sys.dof_count()])
            .unwrap();
        assert!(matches!(effective_volume(&zero, &IsotropicMaterial::diamond()), Err(Error::NullMode)));
        assert!(matches!(normalize(&zero), Err(Error::NullMode)));
    }

    #[test]
    fn zero_point_strain_scales_with_hbar() {
        let sys = strip(Model::InPlane);
        let m = &solve_modes(&sys, Frequency::from_hz(2e9).unwrap(), 1).unwrap()[0];
        let p = [1.3e-6, 0.1e-6];
        let a = zero_point_strain_with(m, p, StrainPadding::PlaneStress, HBAR).unwrap();
        let b = zero_point_strain_with(m, p, StrainPadding::PlaneStress, 2.0 * HBAR).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((b[i][j] - 2f64.sqrt() * a[i][j]).abs() <= 1e-15 * a[i][j].abs().max(1e-30));
            }
        }
        assert!(zero_point_strain(m, [10e-6, 0.0]).is_err());
    }

    #[test]
    fn rigid_translation_has_no_zero_point_strain() {
        let sys = strip(Model::InPlane);
        let u: Vec<f64> = (0..sys.dof_count()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let raw = ElasticMode::new_raw(Arc::clone(&sys), Frequency::ZERO, u).unwrap();
        let n = normalize(&raw).unwrap();
        assert_eq!(zero_point_strain(&n, [1e-6, 0.0]).unwrap(), [[0.0; 3]; 3]);
        let h = energy_density(&n, &IsotropicMaterial::diamond());
        // negligible next to the total energy Ω² of a normalized 1 GHz mode
        assert!(h.total() < 1e-6 * (2.0 * std::f64::consts::PI * 1e9f64).powi(2));
    }
}
