//! Closed-form references used to check the finite-element results: the
//! point-loaded 2D wedge and the 1D layered-rod transfer matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::Frequency;

/// Tip-loaded wedge of half-angle θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeSpec {
    /// Axial tip force per unit thickness [N/m]; negative pulls the tip away from the body.
    pub force: f64,
    pub theta: f64,
    pub youngs_modulus: f64,
}

impl WedgeSpec {
    pub fn new(force: f64, theta: f64, youngs_modulus: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!("wedge half-angle {theta} outside (0, π/2)")));
        }
        if !(youngs_modulus.is_finite() && youngs_modulus > 0.0) {
            return Err(Error::InvalidParameter(format!("Young's modulus must be positive, got {youngs_modulus:e}")));
        }
        if !force.is_finite() {
            return Err(Error::InvalidParameter("tip force must be finite".into()));
        }
        Ok(WedgeSpec { force, theta, youngs_modulus })
    }

    fn check(&self, r: f64, phi: f64) -> Result<()> {
        if !(r > 0.0) {
            return Err(Error::SingularPoint(r));
        }
        if !(phi.abs() <= self.theta * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("polar angle {phi} outside the wedge (±{})", self.theta)));
        }
        Ok(())
    }
}

/// Polar strain components at a point of the wedge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarStrain {
    pub rr: f64,
    pub phi_r: f64,
    pub phi_phi: f64,
}

/// ε_rr = −(F_r/E) cos φ / (r [θ − ½ sin 2θ]), ε_φr = ε_φφ = 0.
pub fn wedge_strain(spec: &WedgeSpec, r: f64, phi: f64) -> Result<PolarStrain> {
    spec.check(r, phi)?;
    let t = spec.theta;
    let rr = -spec.force / spec.youngs_modulus * phi.cos() / (r * (t - 0.5 * (2.0 * t).sin()));
    Ok(PolarStrain { rr, phi_r: 0.0, phi_phi: 0.0 })
}

/// Radial strain of the Flamant wedge fixed by axial force balance,
/// ∫ σ_rr cos φ r dφ = −F_r, which gives the constant θ + ½ sin 2θ.
pub fn wedge_strain_force_balance(spec: &WedgeSpec, r: f64, phi: f64) -> Result<f64> {
    spec.check(r, phi)?;
    let t = spec.theta;
    Ok(-spec.force / spec.youngs_modulus * phi.cos() / (r * (t + 0.5 * (2.0 * t).sin())))
}

/// Homogeneous segment of a 1D rod.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub length: f64,
    pub density: f64,
    /// Modulus governing the wave: E for longitudinal, μ for shear.
    pub modulus: f64,
}

impl Layer {
    pub fn speed(&self) -> f64 {
        (self.modulus / self.density).sqrt()
    }
}

/// One period of a layered rod.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("layer stack is empty".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            for (name, v) in [("length", l.length), ("density", l.density), ("modulus", l.modulus)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidParameter(format!("layer {i}: {name} must be positive, got {v:e}")));
                }
            }
        }
        Ok(LayerStack { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Period a.
    pub fn period(&self) -> f64 {
        self.layers.iter().map(|l| l.length).sum()
    }

    /// Same layers, first one moved to the end.
    pub fn rotated(&self) -> LayerStack {
        let mut layers = self.layers.clone();
        layers.rotate_left(1);
        LayerStack { layers }
    }
}

/// cos(k a) = ½ tr(T_n ⋯ T_1) for waves of frequency f.
///
/// Each layer maps (u, σ) across its length L with
/// T = [[cos qL, sin qL / Z], [−Z sin qL, cos qL]], q = ω/v, Z = ρ v ω.
pub fn layered_dispersion(stack: &LayerStack, f: Frequency) -> f64 {
    let omega = f.angular();
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for layer in &stack.layers {
        let v = layer.speed();
        let (s, c) = (omega * layer.length / v).sin_cos();
        let z = layer.density * v * omega;
        let t = if z == 0.0 { [[1.0, layer.length / layer.modulus], [0.0, 1.0]] } else { [[c, s / z], [-z * s, c]] };
        m = [
            [t[0][0] * m[0][0] + t[0][1] * m[1][0], t[0][0] * m[0][1] + t[0][1] * m[1][1]],
            [t[1][0] * m[0][0] + t[1][1] * m[1][0], t[1][0] * m[0][1] + t[1][1] * m[1][1]],
        ];
    }
    0.5 * (m[0][0] + m[1][1])
}

/// Wavevector in [0, π/a] at frequency f, or `None` inside a stop band.
pub fn layered_wavevector(stack: &LayerStack, f: Frequency) -> Option<f64> {
    let d = layered_dispersion(stack, f);
    (d.abs() <= 1.0).then(|| d.acos() / stack.period())
}

/// Stop bands (|cos ka| > 1) below `f_max` [Hz], located by a uniform scan
/// with `samples` points and refined by bisection.
pub fn stop_bands(stack: &LayerStack, f_max: f64, samples: usize) -> Vec<(f64, f64)> {
    let excess = |f: f64| layered_dispersion(stack, Frequency::from_hz(f).unwrap_or(Frequency::ZERO)).abs() - 1.0;
    let refine = |mut a: f64, mut b: f64| {
        let inside_a = excess(a) > 0.0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (excess(m) > 0.0) == inside_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let samples = samples.max(2);
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    let mut prev = f_max / samples as f64 * 1e-3;
    let mut prev_in = excess(prev) > 0.0;
    for i in 1..=samples {
        let f = f_max * i as f64 / samples as f64;
        let inside = excess(f) > 0.0;
        if inside != prev_in {
            let edge = refine(prev, f);
            if inside {
                start = Some(edge);
            } else if let Some(s) = start.take() {
                out.push((s, edge));
            }
        }
        prev = f;
        prev_in = inside;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn spec(theta: f64) -> WedgeSpec {
        WedgeSpec::new(-1.0, theta, 1050e9).unwrap()
    }

    #[test]
    fn reference_value() {
        // 1 / (1.05e12 · 1e-6 · (π/4 − ½))
        let e = wedge_strain(&spec(PI / 4.0), 1e-6, 0.0).unwrap();
        assert!((e.rr - 3.337_025_512e-6).abs() < 1e-14);
        assert_eq!((e.phi_r, e.phi_phi), (0.0, 0.0));
    }

    #[test]
    fn inverse_radius_scaling() {
        let s = spec(0.3);
        for r in [1e-8, 3e-7, 2e-6] {
            let a = wedge_strain(&s, r, 0.1).unwrap().rr;
            let b = wedge_strain(&s, 2.0 * r, 0.1).unwrap().rr;
            assert!((b / a - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn flank_value_follows_cosine() {
        let s = spec(0.49 * PI);
        let axis = wedge_strain(&s, 1e-6, 0.0).unwrap().rr;
        let flank = wedge_strain(&s, 1e-6, s.theta).unwrap().rr;
        assert!((flank / axis - s.theta.cos()).abs() < 1e-14);
    }

    #[test]
    fn force_balance_constant() {
        // ∫_{−θ}^{θ} σ_rr cos φ r dφ must equal −F_r
        let s = spec(0.4);
        let n = 2000;
        let r = 1e-6;
        let mut total = 0.0;
        for i in 0..n {
            let phi = -s.theta + (i as f64 + 0.5) * 2.0 * s.theta / n as f64;
            total += s.youngs_modulus * wedge_strain_force_balance(&s, r, phi).unwrap() * phi.cos() * r * 2.0 * s.theta
                / n as f64;
        }
        assert!((total + s.force).abs() < 1e-6);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(wedge_strain(&spec(0.3), 0.0, 0.0), Err(Error::SingularPoint(_))));
        assert!(wedge_strain(&spec(0.3), 1e-6, 0.5).is_err());
        assert!(WedgeSpec::new(-1.0, PI / 2.0, 1e9).is_err());
        assert!(WedgeSpec::new(-1.0, 0.3, 0.0).is_err());
        assert!(LayerStack::new(vec![]).is_err());
    }

    fn two_layer(ratio: f64) -> LayerStack {
        // equal transit times, impedance ratio `ratio`
        LayerStack::new(vec![
            Layer { length: 0.5e-6, density: 3500.0, modulus: 500e9 },
            Layer { length: 0.5e-6, density: 3500.0 / ratio, modulus: 500e9 / ratio },
        ])
        .unwrap()
    }

    #[test]
    fn single_layer_is_free_propagation() {
        let l = Layer { length: 1e-6, density: 3500.0, modulus: 1050e9 };
        let s = LayerStack::new(vec![l]).unwrap();
        for f in [1e8, 2.7e9, 9e9] {
            let d = layered_dispersion(&s, Frequency::from_hz(f).unwrap());
            assert!((d - (2.0 * PI * f * 1e-6 / l.speed()).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn bragg_gap_opens_at_half_wavelength() {
        let s = two_layer(4.0);
        let v = s.layers()[0].speed();
        // both layers have the same speed, so the period is one wavelength at v/a
        let f_bragg = v / (2.0 * s.period());
        let gaps = stop_bands(&s, 1.5 * f_bragg, 3000);
        assert!(!gaps.is_empty());
        let (lo, hi) = gaps[0];
        assert!(lo < f_bragg && f_bragg < hi, "{gaps:?} {f_bragg}");
        assert!(layered_dispersion(&s, Frequency::from_hz(f_bragg).unwrap()) < -1.0);
    }

    #[test]
    fn uniform_stack_has_no_gap() {
        let s = two_layer(1.0);
        let v = s.layers()[0].speed();
        assert!(stop_bands(&s, 3.0 * v / s.period(), 4000).is_empty());
    }

    proptest! {
        #[test]
        fn cyclic_rotation_invariant(
            l1 in 0.1e-6..1e-6f64, l2 in 0.1e-6..1e-6f64, l3 in 0.1e-6..1e-6f64,
            r2 in 0.2..5.0f64, f in 1e8..2e10f64,
        ) {
            let s = LayerStack::new(vec![
                Layer { length: l1, density: 3500.0, modulus: 1e12 },
                Layer { length: l2, density: 3500.0 * r2, modulus: 4e11 },
                Layer { length: l3, density: 2000.0, modulus: 2e11 * r2 },
            ]).unwrap();
            let f = Frequency::from_hz(f).unwrap();
            let a = layered_dispersion(&s, f);
            let b = layered_dispersion(&s.rotated(), f);
            prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn even_in_polar_angle(r in 1e-8..1e-5f64, theta in 0.05..1.5f64, x in 0.0..1.0f64) {
            let s = spec(theta);
            let phi = x * theta;
            prop_assert_eq!(wedge_strain(&s, r, phi).unwrap().rr, wedge_strain(&s, r, -phi).unwrap().rr);
        }
    }
}
