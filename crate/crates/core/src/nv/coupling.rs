use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orientation::{transform_strain, Mat3, NvOrientation};
use crate::error::{Error, Result};
use crate::material::HBAR;
use crate::modes::{zero_point_strain_with, ElasticMode, StrainPadding};

/// Strain susceptibilities [Hz per unit strain].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainSusceptibilities {
    pub lambda_a: Option<f64>,
    pub lambda_a_prime: Option<f64>,
    pub lambda_e: f64,
    pub lambda_e_prime: f64,
}

impl Default for StrainSusceptibilities {
    /// λ_E = −0.85 PHz, λ_E′ = 0.02 PHz; the A₁ pair has no default.
    fn default() -> Self {
        StrainSusceptibilities { lambda_a: None, lambda_a_prime: None, lambda_e: -0.85e15, lambda_e_prime: 0.02e15 }
    }
}

impl StrainSusceptibilities {
    pub fn validate(&self) -> Result<()> {
        let all = [Some(self.lambda_e), Some(self.lambda_e_prime), self.lambda_a, self.lambda_a_prime];
        if all.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("strain susceptibilities must be finite".into()));
        }
        if self.lambda_a.is_some() != self.lambda_a_prime.is_some() {
            return Err(Error::InvalidParameter("lambda_a and lambda_a_prime must be given together".into()));
        }
        Ok(())
    }
}

/// Coupling rates [Hz]: the angular rates divided by 2π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub g_a: Option<f64>,
    pub g_e1: f64,
    pub g_e2: f64,
}

impl CouplingSet {
    pub const ZERO: CouplingSet = CouplingSet { g_a: None, g_e1: 0.0, g_e2: 0.0 };
}

/// Projects an NV-frame strain onto the A₁ and E irreducible combinations:
/// g_A = λ_A ε_zz + λ_A′ (ε_xx + ε_yy),
/// g_E1 = λ_E (ε_yy − ε_xx) + 2 λ_E′ ε_xz,
/// g_E2 = 2 (λ_E ε_xy + λ_E′ ε_yz).
pub fn project(eps_nv: &Mat3, sus: &StrainSusceptibilities) -> CouplingSet {
    let e = eps_nv;
    let g_a = match (sus.lambda_a, sus.lambda_a_prime) {
        (Some(a), Some(ap)) => Some(a * e[2][2] + ap * (e[0][0] + e[1][1])),
        _ => None,
    };
    CouplingSet {
        g_a,
        g_e1: sus.lambda_e * (e[1][1] - e[0][0]) + 2.0 * sus.lambda_e_prime * e[0][2],
        g_e2: 2.0 * (sus.lambda_e * e[0][1] + sus.lambda_e_prime * e[1][2]),
    }
}

/// Couplings of a lab-frame strain tensor for one orientation.
pub fn couplings_from_strain(eps_lab: &Mat3, o: &NvOrientation, sus: &StrainSusceptibilities) -> Result<CouplingSet> {
    sus.validate()?;
    Ok(project(&transform_strain(eps_lab, o)?, sus))
}

/// Single-phonon couplings of a kinetic-unit mode at `position`.
pub fn coupling_coefficients(
    mode: &ElasticMode,
    position: [f64; 2],
    o: &NvOrientation,
    sus: &StrainSusceptibilities,
) -> Result<CouplingSet> {
    coupling_coefficients_with(mode, position, o, sus, StrainPadding::PlaneStress)
}

pub fn coupling_coefficients_with(
    mode: &ElasticMode,
    position: [f64; 2],
    o: &NvOrientation,
    sus: &StrainSusceptibilities,
    padding: StrainPadding,
) -> Result<CouplingSet> {
    let eps = zero_point_strain_with(mode, position, padding, HBAR)?;
    couplings_from_strain(&eps, o, sus)
}

/// One row of a coupling map; `couplings` is `None` outside the mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingRow {
    pub position: [f64; 2],
    pub orientation: NvOrientation,
    pub couplings: Option<CouplingSet>,
}

/// Couplings on every grid point for every orientation, point-major.
pub fn coupling_map(
    mode: &ElasticMode,
    grid: &[[f64; 2]],
    orientations: &[NvOrientation],
    sus: &StrainSusceptibilities,
    padding: StrainPadding,
) -> Result<Vec<CouplingRow>> {
    sus.validate()?;
    let rows: Vec<Vec<CouplingRow>> = grid
        .par_iter()
        .map(|&p| {
            let eps = match zero_point_strain_with(mode, p, padding, HBAR) {
                Ok(e) => Some(e),
                Err(Error::OutsideMesh { .. }) => None,
                Err(e) => return Err(e),
            };
            orientations
                .iter()
                .map(|o| {
                    let couplings = match &eps {
                        Some(e) => Some(couplings_from_strain(e, o, sus)?),
                        None => None,
                    };
                    Ok(CouplingRow { position: p, orientation: *o, couplings })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Rectangular grid with `nx × ny` points, X fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<[f64; 2]> {
        let step =
            |a: f64, b: f64, n: usize, i: usize| if n <= 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push([step(self.x0, self.x1, self.nx, i), step(self.y0, self.y1, self.ny, j)]);
            }
        }
        out
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    /// `x0,y0,x1,y1,nx,ny`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidParameter(format!("grid must be x0,y0,x1,y1,nx,ny, got `{s}`"));
        if parts.len() != 6 {
            return Err(bad());
        }
        let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
        let n = |i: usize| parts[i].parse::<usize>().map_err(|_| bad());
        let g = Grid { x0: f(0)?, y0: f(1)?, x1: f(2)?, y1: f(3)?, nx: n(4)?, ny: n(5)? };
        if g.nx == 0 || g.ny == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
        }
        Ok(g)
    }
}

/// √(g_E1² + g_E2²), the E-doublet splitting independent of the x-axis choice.
pub fn invariant_coupling_norm(set: &CouplingSet) -> f64 {
    set.g_e1.hypot(set.g_e2)
}

/// Eigen-decomposition of [[g_A + g_E1, g_E2], [g_E2, g_A − g_E1]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticSplitting {
    /// g_A + g_E, g_A − g_E [Hz].
    pub eigenvalues: [f64; 2],
    /// ½ atan2(g_E2, g_E1) [rad].
    pub mixing_angle: f64,
    pub degenerate: bool,
}

pub fn static_diagonalize(set: &CouplingSet) -> StaticSplitting {
    let ga = set.g_a.unwrap_or(0.0);
    let ge = invariant_coupling_norm(set);
    let degenerate = ge == 0.0;
    StaticSplitting {
        eigenvalues: [ga + ge, ga - ge],
        mixing_angle: if degenerate { 0.0 } else { 0.5 * set.g_e2.atan2(set.g_e1) },
        degenerate,
    }
}
