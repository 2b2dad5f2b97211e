use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::eigen::shift_invert;
use super::SystemMatrices;
use crate::error::{Error, Result};
use crate::material::Frequency;
use crate::mesh::BoundaryTag;
use crate::modes::{ElasticMode, Normalization};

/// Relative frequency split below which two modes are flagged degenerate.
pub const DEGENERACY_SPLIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeOptions {
    pub shift: Frequency,
    pub count: usize,
    /// Boundary tags held fixed in every component.
    pub fixed: Vec<BoundaryTag>,
}

impl ModeOptions {
    pub fn new(shift: Frequency, count: usize) -> Self {
        ModeOptions { shift, count, fixed: vec![BoundaryTag::Clamped] }
    }
}

/// Eigenmodes nearest `shift`, clamped edges fixed, kinetic-unit normalized.
pub fn solve_modes(sys: &Arc<SystemMatrices>, shift: Frequency, count: usize) -> Result<Vec<ElasticMode>> {
    solve_modes_with(sys, &ModeOptions::new(shift, count))
}

pub fn solve_modes_with(sys: &Arc<SystemMatrices>, opts: &ModeOptions) -> Result<Vec<ElasticMode>> {
    if opts.count == 0 {
        return Err(Error::InvalidParameter("mode count must be at least 1".into()));
    }
    let nc = sys.model().components();
    let n = sys.dof_count();
    let mut is_fixed = vec![false; n];
    for &tag in &opts.fixed {
        for node in sys.space().tagged_nodes(tag) {
            for c in 0..nc {
                is_fixed[node * nc + c] = true;
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    if free.is_empty() {
        return Err(Error::InvalidParameter("every degree of freedom is fixed".into()));
    }
    let (k, m) = if free.len() == n {
        (sys.stiffness().clone(), sys.mass().clone())
    } else {
        (sys.stiffness().submatrix(&free), sys.mass().submatrix(&free))
    };
    let pairs = shift_invert(&k, &m, opts.shift.squared(), opts.count, None)?;
    let omegas: Vec<f64> = pairs.iter().map(|p| p.lambda.max(0.0).sqrt()).collect();
    let mut modes = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.into_iter().enumerate() {
        let mut u = vec![0.0; n];
        for (j, &dof) in free.iter().enumerate() {
            u[dof] = pair.vector[j];
        }
        fix_sign(&mut u);
        let degenerate = omegas
            .iter()
            .enumerate()
            .any(|(j, &o)| j != i && (o - omegas[i]).abs() <= DEGENERACY_SPLIT * o.max(omegas[i]));
        let omega = Frequency::from_angular(omegas[i])?;
        modes.push(ElasticMode::from_parts(Arc::clone(sys), omega, u, Normalization::KineticUnit, degenerate));
    }
    Ok(modes)
}

/// Makes the entry of largest magnitude positive.
pub(crate) fn fix_sign(u: &mut [f64]) {
    let mut best = 0.0f64;
    for &v in u.iter() {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < 0.0 {
        for v in u.iter_mut() {
            *v = -*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, Model};
    use crate::material::IsotropicMaterial;
    use crate::mesh::{generate, GeometrySpec, Shape};

    fn system(w: f64, h: f64, size: f64, model: Model) -> Arc<SystemMatrices> {
        let spec =
            GeometrySpec::new(Shape::Rectangle { width: w, height: h, periodic: false, interfaces: vec![] }, size);
        let mesh = Arc::new(generate(&spec).unwrap());
        Arc::new(assemble(&mesh, &IsotropicMaterial::diamond(), model, 1.0).unwrap())
    }

    #[test]
    fn free_square_has_three_rigid_modes() {
        let sys = system(1e-6, 1e-6, 0.125e-6, Model::InPlane);
        let opts = ModeOptions { shift: Frequency::ZERO, count: 4, fixed: vec![] };
        let modes = solve_modes_with(&sys, &opts).unwrap();
        let mut l: Vec<f64> = modes.iter().map(|m| m.omega().squared()).collect();
        l.sort_by(f64::total_cmp);
        assert!(l[3] > 0.0);
        for v in &l[..3] {
            assert!(v.abs() < 1e-6 * l[3], "{l:?}");
        }
    }

    #[test]
    fn clamped_rod_matches_quarter_wave() {
        // fixed-free slender rod, plane stress: f_n = (2n−1) sqrt(E/ρ) / 4L
        let (len, h) = (20e-6, 1e-6);
        let sys = system(len, h, 0.5e-6, Model::InPlane);
        let mat = IsotropicMaterial::diamond();
        let v = (mat.youngs_modulus() / mat.density()).sqrt();
        let f1 = v / (4.0 * len);
        // the first longitudinal mode sits among flexural ones: take the nearest
        let modes = solve_modes(&sys, Frequency::from_hz(f1).unwrap(), 3).unwrap();
        let nearest =
            modes.iter().map(|m| m.omega().hz()).min_by(|a, b| (a - f1).abs().total_cmp(&(b - f1).abs())).unwrap();
        assert!((nearest - f1).abs() < 0.02 * f1, "{nearest} vs {f1}");
    }

    #[test]
    fn modes_are_m_orthogonal() {
        let sys = system(2e-6, 1e-6, 0.25e-6, Model::InPlane);
        let modes = solve_modes(&sys, Frequency::from_hz(1e9).unwrap(), 5).unwrap();
        for (i, a) in modes.iter().enumerate() {
            let ma = sys.mass().mul_vec(a.displacements());
            for (j, b) in modes.iter().enumerate() {
                let g = crate::fem::sparse::dot(b.displacements(), &ma);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g - e).abs() < 1e-8, "{i} {j} {g}");
            }
        }
    }
}
