use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::coupling::CouplingSet;
use crate::error::{Error, Result};
use crate::material::{Frequency, HBAR, K_B};

/// Which re-thermalization rate feeds the cooperativities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaConvention {
    /// γ_th = n_th Ω / 2Q.
    Half,
    /// γ_th = n_th Ω / Q.
    #[default]
    Full,
}

impl GammaConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            GammaConvention::Half => "half",
            GammaConvention::Full => "full",
        }
    }
}

impl fmt::Display for GammaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GammaConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "half" => Ok(GammaConvention::Half),
            "full" => Ok(GammaConvention::Full),
            other => Err(format!("unknown gamma convention `{other}` (expected half or full)")),
        }
    }
}

/// Bose occupation [exp(ħΩ/k_BT) − 1]⁻¹; zero at T = 0.
pub fn thermal_occupation(omega: Frequency, temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter(format!("temperature must be non-negative, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    if omega.angular() <= 0.0 {
        return Err(Error::InvalidParameter("thermal occupation needs a positive frequency".into()));
    }
    Ok(1.0 / (HBAR * omega.angular() / (K_B * temperature)).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingInputs {
    pub omega: Frequency,
    pub q: f64,
    pub temperature: f64,
    /// Orbital dephasing Γ_x/y.
    pub gamma_xy: Frequency,
    /// Drive Rabi frequency; defaults to Γ_x/y.
    pub omega_r: Option<Frequency>,
    pub convention: GammaConvention,
}

impl CoolingInputs {
    /// Γ_x/y = 2π·15 MHz, Ω_R = Γ_x/y, `full` convention.
    pub fn new(omega: Frequency, q: f64, temperature: f64) -> Self {
        CoolingInputs {
            omega,
            q,
            temperature,
            gamma_xy: Frequency::from_angular(2.0 * PI * 15e6).expect("positive"),
            omega_r: None,
            convention: GammaConvention::Full,
        }
    }

    pub fn rabi(&self) -> Frequency {
        self.omega_r.unwrap_or(self.gamma_xy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega.angular() <= 0.0 {
            return Err(Error::InvalidParameter("mode frequency must be positive".into()));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("quality factor must be ≥ 1, got {}", self.q)));
        }
        if self.gamma_xy.angular() <= 0.0 || self.rabi().angular() <= 0.0 {
            return Err(Error::InvalidParameter("dephasing and Rabi rates must be positive".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!("temperature must be non-negative, got {}", self.temperature)));
        }
        Ok(())
    }
}

/// γ_th = n_th Ω / 2Q (`half`) or n_th Ω / Q (`full`).
pub fn rethermalization_rate(inputs: &CoolingInputs) -> Result<Frequency> {
    inputs.validate()?;
    let n = thermal_occupation(inputs.omega, inputs.temperature)?;
    let factor = match inputs.convention {
        GammaConvention::Half => 0.5,
        GammaConvention::Full => 1.0,
    };
    Frequency::from_angular(factor * n * inputs.omega.angular() / inputs.q)
}

/// C = 4g² / (γ Γ), all rates in one convention.
pub fn cooperativity(g: Frequency, gamma_th: Frequency, gamma_xy: Frequency) -> Result<f64> {
    let den = gamma_th.angular() * gamma_xy.angular();
    if den <= 0.0 {
        return Err(Error::ZeroDenominator("cooperativity"));
    }
    Ok(4.0 * g.squared() / den)
}

/// Γ_E1 = g² Ω_R² / (Γ Ω²).
pub fn offresonant_cooling_rate(
    g: Frequency,
    omega_r: Frequency,
    gamma_xy: Frequency,
    omega: Frequency,
) -> Result<Frequency> {
    let den = gamma_xy.angular() * omega.squared();
    if den <= 0.0 {
        return Err(Error::ZeroDenominator("off-resonant cooling rate"));
    }
    Frequency::from_angular(g.squared() * omega_r.squared() / den)
}

/// Γ_E2 = 4 g² Ω_R² / Γ³.
pub fn resonant_cooling_rate(g: Frequency, omega_r: Frequency, gamma_xy: Frequency) -> Result<Frequency> {
    let den = gamma_xy.angular().powi(3);
    if den <= 0.0 {
        return Err(Error::ZeroDenominator("resonant cooling rate"));
    }
    Frequency::from_angular(4.0 * g.squared() * omega_r.squared() / den)
}

/// n_fin = γ_th / Γ_E2.
pub fn final_occupation(gamma_th: Frequency, gamma_e2: Frequency) -> Result<f64> {
    if gamma_e2.angular() <= 0.0 {
        return Err(Error::ZeroDenominator("final occupation"));
    }
    Ok(gamma_th.angular() / gamma_e2.angular())
}

/// N emitters cool N times faster.
pub fn collective_rate(single: Frequency, n: usize) -> Result<Frequency> {
    if n == 0 {
        return Err(Error::InvalidParameter("emitter count must be at least 1".into()));
    }
    Frequency::from_angular(single.angular() * n as f64)
}

/// Collective rate of an ensemble of density ρ filling V_eff when the
/// single-emitter rate scales as `rate_volume` / V_eff. The volume cancels.
pub fn ensemble_rate(density: f64, veff: f64, rate_volume: f64) -> Result<Frequency> {
    if !(density > 0.0 && veff > 0.0 && rate_volume >= 0.0) {
        return Err(Error::InvalidParameter("density, volume and rate must be positive".into()));
    }
    let n = density * veff;
    Frequency::from_angular(n * (rate_volume / veff))
}

fn from_hz_abs(g: f64) -> Result<Frequency> {
    Frequency::from_hz(g.abs())
}

/// Figures of merit for one coupling rate, as written by the `cool` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolingReport {
    pub n_th: f64,
    pub gamma_th_hz: f64,
    pub c: f64,
    pub gamma_e1_hz: f64,
    pub gamma_e2_hz: f64,
    pub n_fin: f64,
    pub convention: GammaConvention,
    /// Γ_E1 exceeds γ_th.
    pub offresonant_efficient: bool,
}

/// `g_hz` is the coupling rate g/2π.
pub fn cooling_report(g_hz: f64, inputs: &CoolingInputs) -> Result<CoolingReport> {
    inputs.validate()?;
    let g = from_hz_abs(g_hz)?;
    let n_th = thermal_occupation(inputs.omega, inputs.temperature)?;
    let gamma_th = rethermalization_rate(inputs)?;
    let e1 = offresonant_cooling_rate(g, inputs.rabi(), inputs.gamma_xy, inputs.omega)?;
    let e2 = resonant_cooling_rate(g, inputs.rabi(), inputs.gamma_xy)?;
    let n_fin = if e2.angular() > 0.0 { final_occupation(gamma_th, e2)? } else { f64::INFINITY };
    Ok(CoolingReport {
        n_th,
        gamma_th_hz: gamma_th.hz(),
        c: cooperativity(g, gamma_th, inputs.gamma_xy)?,
        gamma_e1_hz: e1.hz(),
        gamma_e2_hz: e2.hz(),
        n_fin,
        convention: inputs.convention,
        offresonant_efficient: e1.angular() > gamma_th.angular(),
    })
}

/// Couplings and all derived figures at one emitter site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub couplings: CouplingSet,
    pub n_th: f64,
    pub gamma_th_hz: f64,
    pub c_e1: f64,
    pub c_e2: f64,
    pub gamma_e1_hz: f64,
    pub gamma_e2_hz: f64,
    pub n_fin: f64,
    pub position: [f64; 2],
    pub orientation: String,
    pub convention: GammaConvention,
}

pub fn coupling_report(
    couplings: CouplingSet,
    position: [f64; 2],
    orientation: &super::NvOrientation,
    inputs: &CoolingInputs,
) -> Result<CouplingReport> {
    let e1 = cooling_report(couplings.g_e1, inputs)?;
    let e2 = cooling_report(couplings.g_e2, inputs)?;
    Ok(CouplingReport {
        couplings,
        n_th: e1.n_th,
        gamma_th_hz: e1.gamma_th_hz,
        c_e1: e1.c,
        c_e2: e2.c,
        gamma_e1_hz: e1.gamma_e1_hz,
        gamma_e2_hz: e2.gamma_e2_hz,
        n_fin: e2.n_fin,
        position,
        orientation: orientation.label(),
        convention: inputs.convention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(hz: f64) -> Frequency {
        Frequency::from_hz(hz).unwrap()
    }

    #[test]
    fn occupation_limits() {
        assert_eq!(thermal_occupation(f(1e9), 0.0).unwrap(), 0.0);
        assert!(thermal_occupation(f(1e13), 0.1).unwrap() < 1e-200);
        let x = 0.04;
        let omega = Frequency::from_angular(x * K_B * 4.0 / HBAR).unwrap();
        let n = thermal_occupation(omega, 4.0).unwrap();
        assert!((n * x - 1.0).abs() < 0.02);
    }

    #[test]
    fn conventions_differ_by_two() {
        let mut inputs = CoolingInputs::new(f(2.838e9), 1e5, 4.0);
        let full = rethermalization_rate(&inputs).unwrap();
        inputs.convention = GammaConvention::Half;
        let half = rethermalization_rate(&inputs).unwrap();
        assert_eq!(full.angular(), 2.0 * half.angular());
        // n_th ≈ 28.9 → γ_th/2π ≈ 0.41 MHz in the half convention
        assert!((half.hz() / 0.41e6 - 1.0).abs() < 0.02, "{}", half.hz());
        inputs.q = 1e300;
        assert!(rethermalization_rate(&inputs).unwrap().hz() < 1e-280);
    }

    #[test]
    fn resonant_rate_at_equal_rabi_and_dephasing() {
        let g = f(1.5e6);
        let gamma = f(15e6);
        assert!((resonant_cooling_rate(g, gamma, gamma).unwrap().hz() - 0.6e6).abs() < 1e-6);
    }

    #[test]
    fn scaling_rules() {
        let (g, r, gm, om) = (f(5e6), f(15e6), f(15e6), f(2.4e9));
        let a = offresonant_cooling_rate(g, r, gm, om).unwrap().hz();
        let b = offresonant_cooling_rate(g, r, gm, f(4.0 * 2.4e9)).unwrap().hz();
        assert!((a / b - 16.0).abs() < 1e-12);
        let e2 = resonant_cooling_rate(g, r, gm).unwrap();
        let e2x = resonant_cooling_rate(g, f(30e6), gm).unwrap();
        assert!((e2x.hz() / e2.hz() - 4.0).abs() < 1e-12);
        let gt = f(1e6);
        assert!((final_occupation(gt, e2).unwrap() / final_occupation(gt, e2x).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn collective_scaling() {
        let single = f(60.0);
        assert_eq!(collective_rate(single, 1).unwrap(), single);
        assert!((collective_rate(single, 10).unwrap().hz() - 600.0).abs() < 1e-9);
        assert!(collective_rate(single, 0).is_err());
        let a = ensemble_rate(1e23, 1e-19, 3.0).unwrap();
        let b = ensemble_rate(1e23, 7e-17, 3.0).unwrap();
        assert!((a.angular() / b.angular() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators() {
        assert!(matches!(cooperativity(f(1e6), Frequency::ZERO, f(1e6)), Err(Error::ZeroDenominator(_))));
        assert!(final_occupation(f(1.0), Frequency::ZERO).is_err());
    }

    proptest! {
        #[test]
        fn homogeneous_degrees(g in 1e3..1e8f64, s in 0.1..10.0f64) {
            let (gt, gm, r, om) = (f(1e6), f(15e6), f(20e6), f(3e9));
            let c1 = cooperativity(f(g), gt, gm).unwrap();
            let c2 = cooperativity(f(s * g), gt, gm).unwrap();
            prop_assert!((c2 / c1 - s * s).abs() < 1e-9 * s * s);
            let e1 = offresonant_cooling_rate(f(g), r, gm, om).unwrap().hz();
            let e1s = offresonant_cooling_rate(f(g), f(s * r.hz()), gm, f(s * om.hz())).unwrap().hz();
            prop_assert!((e1s / e1 - 1.0).abs() < 1e-9);
            let e2 = resonant_cooling_rate(f(g), r, gm).unwrap().hz();
            let e2s = resonant_cooling_rate(f(s * g), f(s * r.hz()), gm).unwrap().hz();
            prop_assert!((e2s / e2 - s.powi(4)).abs() < 1e-9 * s.powi(4));
        }
    }
}
