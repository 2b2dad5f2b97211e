//! Units, physical constants, and isotropic elastic materials.
//!
//! Everything inside the crate is SI with angular frequencies. The only place
//! where ordinary frequency (Hz) appears is at report boundaries, through
//! [`Frequency::hz`] and [`Frequency::from_hz`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;

/// Angular frequency [rad/s]; never negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub const ZERO: Frequency = Frequency(0.0);

    pub fn from_angular(omega: f64) -> Result<Self> {
        if omega.is_finite() && omega >= 0.0 {
            Ok(Frequency(omega))
        } else {
            Err(Error::InvalidParameter(format!("frequency must be finite and non-negative, got {omega:e} rad/s")))
        }
    }

    pub fn from_hz(f: f64) -> Result<Self> {
        Self::from_angular(2.0 * PI * f)
            .map_err(|_| Error::InvalidParameter(format!("frequency must be non-negative, got {f:e} Hz")))
    }

    /// Angular frequency Ω [rad/s].
    #[inline]
    pub fn angular(self) -> f64 {
        self.0
    }

    /// Ordinary frequency Ω/2π [Hz].
    #[inline]
    pub fn hz(self) -> f64 {
        self.0 / (2.0 * PI)
    }

    /// Ω² [rad²/s²], the generalized eigenvalue.
    #[inline]
    pub fn squared(self) -> f64 {
        self.0 * self.0
    }
}

/// Linear isotropic solid described by Young's modulus, Poisson ratio and density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicMaterial {
    /// Young's modulus [Pa].
    youngs: f64,
    /// Poisson ratio.
    poisson: f64,
    /// Mass density [kg/m³].
    density: f64,
}

impl IsotropicMaterial {
    pub fn new(youngs: f64, poisson: f64, density: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(youngs.is_finite() && youngs > 0.0) {
            problems.push(format!("E must be positive, got {youngs:e}"));
        }
        if !(density.is_finite() && density > 0.0) {
            problems.push(format!("rho must be positive, got {density:e}"));
        }
        if !(poisson.is_finite() && poisson > -1.0 && poisson < 0.5) {
            problems.push(format!("nu must lie in (-1, 0.5), got {poisson}"));
        }
        if problems.is_empty() {
            Ok(IsotropicMaterial { youngs, poisson, density })
        } else {
            Err(Error::InvalidMaterial(problems.join("; ")))
        }
    }

    /// Isotropic diamond: E = 1050 GPa, ν = 0.2, ρ = 3500 kg/m³.
    pub fn diamond() -> Self {
        IsotropicMaterial { youngs: 1050e9, poisson: 0.2, density: 3500.0 }
    }

    pub fn youngs_modulus(&self) -> f64 {
        self.youngs
    }

    pub fn poisson_ratio(&self) -> f64 {
        self.poisson
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    /// Shear modulus μ = E / 2(1+ν).
    pub fn shear_modulus(&self) -> f64 {
        self.youngs / (2.0 * (1.0 + self.poisson))
    }

    /// First Lamé parameter λ = Eν / (1+ν)(1−2ν).
    pub fn lame_lambda(&self) -> f64 {
        self.youngs * self.poisson / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson))
    }

    /// Plane-stress constitutive matrix acting on (ε_XX, ε_YY, γ_XY).
    pub fn plane_stress_matrix(&self) -> [[f64; 3]; 3] {
        let c = self.youngs / (1.0 - self.poisson * self.poisson);
        [[c, c * self.poisson, 0.0], [c * self.poisson, c, 0.0], [0.0, 0.0, c * (1.0 - self.poisson) / 2.0]]
    }

    /// Out-of-plane strain of a plane-stress state: ε_ZZ = −ν(ε_XX+ε_YY)/(1−ν).
    pub fn plane_stress_ezz(&self, exx: f64, eyy: f64) -> f64 {
        -self.poisson * (exx + eyy) / (1.0 - self.poisson)
    }

    /// Full 3D contraction ε:c̃:ε for a symmetric strain tensor.
    pub fn strain_energy_product(&self, eps: &[[f64; 3]; 3]) -> f64 {
        let mu = self.shear_modulus();
        let lambda = self.lame_lambda();
        let trace = eps[0][0] + eps[1][1] + eps[2][2];
        let mut double_dot = 0.0;
        for row in eps {
            for v in row {
                double_dot += v * v;
            }
        }
        lambda * trace * trace + 2.0 * mu * double_dot
    }
}

/// Longitudinal and shear bulk speeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveSpeeds {
    /// Longitudinal (p) speed [m/s].
    pub longitudinal: f64,
    /// Shear (s) speed [m/s].
    pub shear: f64,
}

pub fn wave_speeds(mat: &IsotropicMaterial) -> WaveSpeeds {
    let (e, nu, rho) = (mat.youngs, mat.poisson, mat.density);
    WaveSpeeds {
        longitudinal: (e * (1.0 - nu) / (rho * (1.0 + nu) * (1.0 - 2.0 * nu))).sqrt(),
        shear: (e / (2.0 * rho * (1.0 + nu))).sqrt(),
    }
}

/// Bulk wavelengths at a given frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Wavelengths {
    pub longitudinal: f64,
    pub shear: f64,
}

pub fn wavelengths(mat: &IsotropicMaterial, f: Frequency) -> Result<Wavelengths> {
    let hz = f.hz();
    if hz <= 0.0 {
        return Err(Error::DegenerateWavelength);
    }
    let v = wave_speeds(mat);
    Ok(Wavelengths { longitudinal: v.longitudinal / hz, shear: v.shear / hz })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_speeds() {
        // hand evaluation: v_p = sqrt(840e9/2520), v_s = sqrt(1050e9/8400)
        let v = wave_speeds(&IsotropicMaterial::diamond());
        assert!((v.longitudinal - 18_257.418_583_505_5).abs() < 1e-6);
        assert!((v.shear - 11_180.339_887_498_9).abs() < 1e-6);
    }

    #[test]
    fn zero_poisson_collapses() {
        let m = IsotropicMaterial::new(200e9, 0.0, 8000.0).unwrap();
        let v = wave_speeds(&m);
        assert!((v.longitudinal - (200e9f64 / 8000.0).sqrt()).abs() < 1e-9);
        assert!((v.shear - (200e9f64 / 16000.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn diamond_wavelengths_at_cavity_frequency() {
        let w = wavelengths(&IsotropicMaterial::diamond(), Frequency::from_hz(2.838e9).unwrap()).unwrap();
        assert!((w.longitudinal - 6.433e-6).abs() < 1e-9);
        assert!((w.shear - 3.939e-6).abs() < 1e-9);
        let ratio = (w.longitudinal / w.shear).powi(3);
        assert!((ratio - 4.3546).abs() < 1e-3);
    }

    #[test]
    fn zero_frequency_rejected() {
        let err = wavelengths(&IsotropicMaterial::diamond(), Frequency::ZERO).unwrap_err();
        assert!(matches!(err, Error::DegenerateWavelength));
    }

    #[test]
    fn invalid_materials_list_every_problem() {
        let err = IsotropicMaterial::new(-1.0, 0.5, 0.0).unwrap_err().to_string();
        assert!(err.contains("E must"));
        assert!(err.contains("rho must"));
        assert!(err.contains("nu must"));
    }

    #[test]
    fn plane_stress_energy_matches_3d_contraction() {
        let m = IsotropicMaterial::diamond();
        let (exx, eyy, exy) = (1.3e-4, -0.4e-4, 0.7e-4);
        let d = m.plane_stress_matrix();
        let e = [exx, eyy, 2.0 * exy];
        let mut two_w = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                two_w += e[i] * d[i][j] * e[j];
            }
        }
        let ezz = m.plane_stress_ezz(exx, eyy);
        let full = m.strain_energy_product(&[[exx, exy, 0.0], [exy, eyy, 0.0], [0.0, 0.0, ezz]]);
        assert!((two_w - full).abs() < 1e-12 * full.abs());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn longitudinal_exceeds_shear(e in 1e6f64..1e13, nu in -0.99f64..0.499, rho in 1.0f64..2e4) {
                let m = IsotropicMaterial::new(e, nu, rho).unwrap();
                let v = wave_speeds(&m);
                prop_assert!(v.longitudinal > v.shear);
                let expected = (2.0 * (1.0 - nu) / (1.0 - 2.0 * nu)).sqrt();
                prop_assert!((v.longitudinal / v.shear - expected).abs() < 1e-10 * expected);
            }

            #[test]
            fn wavelength_scales_inversely(f in 1e6f64..1e11, scale in 1.01f64..10.0) {
                let m = IsotropicMaterial::diamond();
                let a = wavelengths(&m, Frequency::from_hz(f).unwrap()).unwrap();
                let b = wavelengths(&m, Frequency::from_hz(f * scale).unwrap()).unwrap();
                prop_assert!((a.longitudinal / b.longitudinal - scale).abs() < 1e-12 * scale);
                prop_assert!((a.shear / b.shear - scale).abs() < 1e-12 * scale);
            }
        }
    }
}
