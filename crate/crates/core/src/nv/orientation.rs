use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// Crystallographic direction in the cubic basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Miller(pub [i32; 3]);

impl Miller {
    pub fn dot(self, other: Miller) -> i32 {
        (0..3).map(|i| self.0[i] * other.0[i]).sum()
    }

    pub fn cross(self, o: Miller) -> Miller {
        let [a, b, c] = self.0;
        let [d, e, f] = o.0;
        Miller([b * f - c * e, c * d - a * f, a * e - b * d])
    }

    pub fn norm(self) -> f64 {
        (self.dot(self) as f64).sqrt()
    }

    pub fn unit(self) -> [f64; 3] {
        let n = self.norm();
        self.0.map(|v| v as f64 / n)
    }
}

impl fmt::Display for Miller {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for v in self.0 {
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for Miller {
    type Err = Error;

    /// Accepts `[-1-1-1]`, `[1 1 -2]`, `1,1,-2` and the overbar form `[1̄1̄2]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidOrientation(format!("cannot parse direction `{s}`"));
        let body = s.trim().trim_start_matches('[').trim_end_matches(']');
        let mut out = Vec::new();
        if body.contains([',', ' ']) {
            for part in body.split([',', ' ']).filter(|p| !p.is_empty()) {
                out.push(part.parse::<i32>().map_err(|_| bad())?);
            }
        } else {
            let mut negative = false;
            for ch in body.chars() {
                match ch {
                    '-' | '−' => negative = true,
                    '\u{0304}' | '\u{0305}' => {
                        let last = out.last_mut().ok_or_else(bad)?;
                        *last = -*last;
                    }
                    d if d.is_ascii_digit() => {
                        let v = d.to_digit(10).ok_or_else(bad)? as i32;
                        out.push(if negative { -v } else { v });
                        negative = false;
                    }
                    _ => return Err(bad()),
                }
            }
        }
        let v: [i32; 3] = out.try_into().map_err(|_| bad())?;
        if v == [0; 3] {
            return Err(Error::InvalidOrientation("zero direction".into()));
        }
        Ok(Miller(v))
    }
}

/// NV axis z_dir with the in-plane x_dir fixed by one of the carbon neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NvOrientation {
    z: Miller,
    x: Miller,
}

/// The four N–V directions.
pub const NV_AXES: [Miller; 4] = [Miller([-1, -1, -1]), Miller([1, 1, -1]), Miller([-1, 1, 1]), Miller([1, -1, 1])];

impl NvOrientation {
    pub fn new(z: Miller, x: Miller) -> Result<Self> {
        if z.0 == [0; 3] || x.0 == [0; 3] {
            return Err(Error::InvalidOrientation("zero direction".into()));
        }
        if z.dot(x) != 0 {
            return Err(Error::InvalidOrientation(format!("x {x} is not perpendicular to z {z}")));
        }
        Ok(NvOrientation { z, x })
    }

    pub fn z(&self) -> Miller {
        self.z
    }

    pub fn x(&self) -> Miller {
        self.x
    }

    /// The orientations of the coupling maps: [1̄1̄1̄]([112̄]), [111̄]([1̄1̄2̄]),
    /// [1̄11]([11̄2]), [11̄1]([1̄12]).
    pub fn reference_set() -> [NvOrientation; 4] {
        NV_AXES.map(|z| NvOrientation { z, x: x_choices(z)[0] })
    }

    /// All twelve (z, x) pairs.
    pub fn catalogue() -> Vec<NvOrientation> {
        NV_AXES.iter().flat_map(|&z| x_choices(z).map(|x| NvOrientation { z, x })).collect()
    }

    /// Same z, another x choice.
    pub fn with_x_choice(&self, choice: usize) -> Result<Self> {
        let options = x_choices(self.z);
        options
            .get(choice)
            .map(|&x| NvOrientation { z: self.z, x })
            .ok_or_else(|| Error::InvalidOrientation(format!("x choice {choice} out of range (0..3)")))
    }

    /// Compact label, e.g. `z[-1-1-1]x[11-2]`.
    pub fn label(&self) -> String {
        format!("z{}x{}", self.z, self.x)
    }
}

impl fmt::Display for NvOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for NvOrientation {
    type Err = Error;

    /// `z=[-1-1-1],x=[11-2]`, or `z[-1-1-1]x[11-2]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (z, x) = if let Some(rest) = s.strip_prefix("z=") {
            let (z, x) = rest
                .split_once(",x=")
                .ok_or_else(|| Error::InvalidOrientation(format!("expected z=[..],x=[..], got `{s}`")))?;
            (z, x)
        } else if let Some(rest) = s.strip_prefix('z') {
            rest.split_once('x').ok_or_else(|| Error::InvalidOrientation(format!("cannot parse orientation `{s}`")))?
        } else {
            return Err(Error::InvalidOrientation(format!("cannot parse orientation `{s}`")));
        };
        NvOrientation::new(z.parse()?, x.parse()?)
    }
}

/// The three x directions for axis z: each flips z and doubles one
/// component, giving three ⟨112⟩ vectors 120° apart. The first is the one
/// used by [`NvOrientation::reference_set`].
pub fn x_choices(z: Miller) -> [Miller; 3] {
    let pick = |k: usize| {
        let mut v = z.0.map(|c| -c);
        v[k] = 2 * z.0[k];
        Miller(v)
    };
    [pick(2), pick(0), pick(1)]
}

/// Rows are the lab axes X ∥ [110], Y ∥ [1̄10], Z ∥ [001] in crystal coordinates.
pub fn rotation_cryst_to_lab() -> Mat3 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[s, s, 0.0], [-s, s, 0.0], [0.0, 0.0, 1.0]]
}

/// Rows are the NV axes x̂, ŷ = ẑ × x̂, ẑ in crystal coordinates.
pub fn rotation_cryst_to_nv(o: &NvOrientation) -> Mat3 {
    [o.x.unit(), o.z.cross(o.x).unit(), o.z.unit()]
}

pub fn rotation_lab_to_nv(o: &NvOrientation) -> Mat3 {
    mat_mul(&rotation_cryst_to_nv(o), &transpose(&rotation_cryst_to_lab()))
}

pub(crate) fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub(crate) fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

#[cfg(test)]
fn determinant(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// ε_NV = R ε_lab Rᵀ with R = R_cryst→NV R_cryst→labᵀ.
pub fn transform_strain(eps_lab: &Mat3, o: &NvOrientation) -> Result<Mat3> {
    let scale = eps_lab.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut asym = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            asym = asym.max((eps_lab[i][j] - eps_lab[j][i]).abs());
        }
    }
    if asym > 1e-12 * scale {
        return Err(Error::AsymmetricStrain(asym / scale));
    }
    let r = rotation_lab_to_nv(o);
    Ok(mat_mul(&mat_mul(&r, eps_lab), &transpose(&r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-15;

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    #[test]
    fn lab_rotation_matches_reference() {
        let s = 1.0 / 2f64.sqrt();
        let expected = [[s, s, 0.0], [-s, s, 0.0], [0.0, 0.0, 2f64.sqrt() * s]];
        let r = rotation_cryst_to_lab();
        assert!(close(&r, &expected, TOL));
        assert!((determinant(&r) - 1.0).abs() < TOL);
        let x = mat_mul(&r, &[[s, 0.0, 0.0], [s, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!((x[0][0] - 1.0).abs() < TOL && x[1][0].abs() < TOL);
    }

    #[test]
    fn nv_rotation_matches_reference() {
        let o: NvOrientation = "z=[-1-1-1],x=[11-2]".parse().unwrap();
        let (r6, r2, r3) = (6f64.sqrt(), 2f64.sqrt(), 3f64.sqrt());
        let expected = [[1.0 / r6, 1.0 / r6, -2.0 / r6], [r3 / r6, -r3 / r6, 0.0], [-r2 / r6, -r2 / r6, -r2 / r6]];
        assert!(close(&rotation_cryst_to_nv(&o), &expected, TOL));
    }

    #[test]
    fn reference_set_matches_labels() {
        let labels = ["z[-1-1-1]x[11-2]", "z[11-1]x[-1-1-2]", "z[-111]x[1-12]", "z[1-11]x[-112]"];
        for (o, l) in NvOrientation::reference_set().iter().zip(labels) {
            assert_eq!(o.label(), l);
            assert_eq!(&l.parse::<NvOrientation>().unwrap(), o);
        }
    }

    #[test]
    fn every_frame_is_proper_and_orthonormal() {
        for o in NvOrientation::catalogue() {
            for r in [rotation_cryst_to_nv(&o), rotation_lab_to_nv(&o)] {
                let rrt = mat_mul(&r, &transpose(&r));
                let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                assert!(close(&rrt, &id, 1e-12));
                assert!((determinant(&r) - 1.0).abs() < 1e-12);
            }
            let r = rotation_cryst_to_nv(&o);
            let z = o.z().unit();
            let rz: Vec<f64> = (0..3).map(|i| (0..3).map(|k| r[i][k] * z[k]).sum()).collect();
            assert!(rz[0].abs() < 1e-15 && rz[1].abs() < 1e-15 && (rz[2] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn x_choices_are_perpendicular_and_120_degrees_apart() {
        for z in NV_AXES {
            let xs = x_choices(z);
            for x in xs {
                assert_eq!(x.dot(z), 0);
            }
            for i in 0..3 {
                let (a, b) = (xs[i], xs[(i + 1) % 3]);
                assert_eq!(2 * a.dot(b), -a.dot(a));
            }
        }
    }

    #[test]
    fn miller_parsing() {
        assert_eq!("[1̄1̄2]".parse::<Miller>().unwrap(), Miller([-1, -1, 2]));
        assert_eq!("1, 1, -2".parse::<Miller>().unwrap(), Miller([1, 1, -2]));
        assert_eq!("[1 -1 0]".parse::<Miller>().unwrap(), Miller([1, -1, 0]));
        assert!("[12]".parse::<Miller>().is_err());
        assert!("[000]".parse::<Miller>().is_err());
        assert!("z=[111],x=[110]".parse::<NvOrientation>().is_err());
    }

    #[test]
    fn hydrostatic_strain_unchanged() {
        let eps = [[2e-6, 0.0, 0.0], [0.0, 2e-6, 0.0], [0.0, 0.0, 2e-6]];
        for o in NvOrientation::catalogue() {
            assert!(close(&transform_strain(&eps, &o).unwrap(), &eps, 1e-21));
        }
    }

    #[test]
    fn uniaxial_lab_strain_by_hand() {
        // lab ε_XX = s along [110]/√2: in crystal axes ε = s n nᵀ with
        // n = (1,1,0)/√2. The NV frame rows for z=[1̄1̄1̄], x=[112̄] give
        // n·x̂ = 2/√12, n·ŷ = 0, n·ẑ = −2/√6, so ε_NV = s (n·eᵢ)(n·eⱼ).
        let s = 1e-5;
        let o = NvOrientation::reference_set()[0];
        let got = transform_strain(&[[s, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]], &o).unwrap();
        let p = [2.0 / 12f64.sqrt(), 0.0, -2.0 / 6f64.sqrt()];
        for i in 0..3 {
            for j in 0..3 {
                assert!((got[i][j] - s * p[i] * p[j]).abs() < 1e-20, "{got:?}");
            }
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let eps = [[0.0, 1e-6, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(matches!(transform_strain(&eps, &NvOrientation::reference_set()[0]), Err(Error::AsymmetricStrain(_))));
    }
}
