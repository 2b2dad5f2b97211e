//! Bloch-Floquet reduction of a periodic unit cell.
//!
//! Right-edge DOFs are slaved to their left partners with phase e^{ikA}. For
//! a general k the Hermitian reduced problem A + iB is doubled to the real
//! symmetric [[A, −B], [B, A]], stored interleaved (re, im per DOF) so the
//! profile stays narrow. Every eigenvalue then appears twice; the partner
//! (x, y) → (−y, x) is locked alongside each converged vector.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::shift_invert;
use super::sparse::Csr;
use super::{assemble_regions, Model, SystemMatrices};
use crate::error::{Error, Result};
use crate::material::IsotropicMaterial;
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandOptions {
    pub n_k: usize,
    pub n_bands: usize,
    pub families: Vec<Model>,
    /// Slab thickness [m]; the spectrum does not depend on it.
    pub thickness: f64,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions { n_k: 32, n_bands: 12, families: Model::BOTH.to_vec(), thickness: 1.0 }
    }
}

/// A frequency interval [Hz] free of every computed band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midgap(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, f: f64) -> bool {
        f > self.lo && f < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyBands {
    pub family: Model,
    /// Ascending frequencies [Hz] at each k-sample.
    pub bands: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    /// Bloch wavevectors [rad/m] spanning [0, π/A].
    pub k_samples: Vec<f64>,
    pub lattice_constant: f64,
    pub families: Vec<FamilyBands>,
    pub gaps: Vec<Gap>,
    /// Gaps are searched below this frequency [Hz]; higher bands were not computed.
    pub ceiling: f64,
}

impl BandStructure {
    /// Every band at k-sample `i`, ascending, with its family.
    pub fn merged(&self, i: usize) -> Vec<(f64, Model)> {
        let mut out: Vec<(f64, Model)> =
            self.families.iter().flat_map(|f| f.bands[i].iter().map(move |&v| (v, f.family))).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    pub fn family(&self, model: Model) -> Option<&FamilyBands> {
        self.families.iter().find(|f| f.family == model)
    }

    /// Widest gap, if any.
    pub fn widest_gap(&self) -> Option<Gap> {
        self.gaps.iter().copied().max_by(|a, b| a.width().total_cmp(&b.width()))
    }
}

/// DOF map of the reduced problem: every full DOF maps to a reduced DOF and
/// carries phase 1 (master) or e^{ikA} (slaved right-edge DOF).
struct Reduction {
    map: Vec<usize>,
    slaved: Vec<bool>,
    size: usize,
}

fn reduction(sys: &SystemMatrices) -> Result<Reduction> {
    let pairs = sys.space().periodic_pairs();
    if pairs.is_empty() {
        return Err(Error::NotAUnitCell);
    }
    let nc = sys.model().components();
    let nodes = sys.space().node_count();
    let mut master: Vec<usize> = (0..nodes).collect();
    let mut slaved_node = vec![false; nodes];
    for &(l, r) in pairs {
        master[r] = l;
        slaved_node[r] = true;
    }
    let mut index = vec![usize::MAX; nodes];
    let mut size = 0;
    for node in 0..nodes {
        if !slaved_node[node] {
            index[node] = size;
            size += 1;
        }
    }
    let mut map = Vec::with_capacity(nodes * nc);
    let mut slaved = Vec::with_capacity(nodes * nc);
    for node in 0..nodes {
        let m = index[master[node]];
        for c in 0..nc {
            map.push(m * nc + c);
            slaved.push(slaved_node[node]);
        }
    }
    Ok(Reduction { map, slaved, size: size * nc })
}

fn reduce_real(a: &Csr, red: &Reduction, sign: f64) -> Csr {
    let mut t = Vec::with_capacity(a.nnz());
    for i in 0..a.dim() {
        let zi = if red.slaved[i] { sign } else { 1.0 };
        for (j, v) in a.row(i) {
            let zj = if red.slaved[j] { sign } else { 1.0 };
            t.push((red.map[i], red.map[j], zi * zj * v));
        }
    }
    Csr::from_triplets(red.size, t)
}

/// T^H A T doubled and interleaved.
fn reduce_complex(a: &Csr, red: &Reduction, phase: (f64, f64)) -> Csr {
    let mut t = Vec::with_capacity(4 * a.nnz());
    for i in 0..a.dim() {
        // conj(z_i)
        let (ci, si) = if red.slaved[i] { (phase.0, -phase.1) } else { (1.0, 0.0) };
        for (j, v) in a.row(i) {
            let (cj, sj) = if red.slaved[j] { phase } else { (1.0, 0.0) };
            let re = v * (ci * cj - si * sj);
            let im = v * (ci * sj + si * cj);
            let (p, q) = (2 * red.map[i], 2 * red.map[j]);
            t.push((p, q, re));
            t.push((p + 1, q + 1, re));
            if im != 0.0 {
                t.push((p, q + 1, -im));
                t.push((p + 1, q, im));
            }
        }
    }
    Csr::from_triplets(2 * red.size, t)
}

/// Multiplication by i in the interleaved real representation.
fn rotate(x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for (out, pair) in y.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
        out[0] = -pair[1];
        out[1] = pair[0];
    }
    y
}

/// Negative shift below the acoustic branch: K − σM stays positive definite.
fn lower_shift(sys: &SystemMatrices, a: f64) -> f64 {
    let speed = sys.materials().iter().map(|m| (m.shear_modulus() / m.density()).sqrt()).fold(f64::INFINITY, f64::min);
    -0.1 * (PI * speed / a).powi(2)
}

/// Lowest `n_bands` frequencies [Hz] at Bloch wavevector `k` [rad/m].
pub fn solve_bloch(sys: &SystemMatrices, k: f64, n_bands: usize) -> Result<Vec<f64>> {
    if n_bands == 0 {
        return Err(Error::InvalidParameter("band count must be at least 1".into()));
    }
    let a = sys.mesh().lattice_constant().ok_or(Error::NotAUnitCell)?;
    let red = reduction(sys)?;
    let edge = PI / a;
    if !k.is_finite() || k.abs() > edge * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter(format!("wavevector {k:e} outside [−π/A, π/A] with π/A = {edge:e}")));
    }
    let sigma = lower_shift(sys, a);
    let ka = k * a;
    let real_sign = if ka == 0.0 {
        Some(1.0)
    } else if (ka.abs() - PI).abs() <= 1e-9 * PI {
        Some(-1.0)
    } else {
        None
    };
    let lambdas: Vec<f64> = match real_sign {
        Some(sign) => {
            let kr = reduce_real(sys.stiffness(), &red, sign);
            let mr = reduce_real(sys.mass(), &red, sign);
            shift_invert(&kr, &mr, sigma, n_bands, None)?.into_iter().map(|p| p.lambda).collect()
        }
        None => {
            let phase = (ka.cos(), ka.sin());
            let kr = reduce_complex(sys.stiffness(), &red, phase);
            let mr = reduce_complex(sys.mass(), &red, phase);
            shift_invert(&kr, &mr, sigma, n_bands, Some(&rotate))?.into_iter().map(|p| p.lambda).collect()
        }
    };
    let mut f: Vec<f64> = lambdas.into_iter().map(|l| l.max(0.0).sqrt() / (2.0 * PI)).collect();
    f.sort_by(f64::total_cmp);
    Ok(f)
}

/// Bands on a uniform grid k_j = j π/(A (n_k − 1)) for each family, with the
/// complete gaps between them.
pub fn band_structure(mesh: &Arc<Mesh>, materials: &[IsotropicMaterial], opts: &BandOptions) -> Result<BandStructure> {
    if opts.n_k < 2 {
        return Err(Error::InvalidParameter(format!("n_k must be at least 2, got {}", opts.n_k)));
    }
    if opts.families.is_empty() {
        return Err(Error::InvalidParameter("no band family selected".into()));
    }
    let a = mesh.lattice_constant().ok_or(Error::NotAUnitCell)?;
    let k_samples: Vec<f64> = (0..opts.n_k).map(|j| j as f64 * PI / (a * (opts.n_k - 1) as f64)).collect();
    let mut families = Vec::with_capacity(opts.families.len());
    for &model in &opts.families {
        let sys = assemble_regions(mesh, materials, model, opts.thickness)?;
        let bands = k_samples.par_iter().map(|&k| solve_bloch(&sys, k, opts.n_bands)).collect::<Result<Vec<_>>>()?;
        families.push(FamilyBands { family: model, bands });
    }
    let (gaps, ceiling) = find_gaps(&families);
    Ok(BandStructure { k_samples, lattice_constant: a, families, gaps, ceiling })
}

/// Gaps narrower than this fraction of their upper edge are band touchings
/// resolved by the k-sampling, not gaps.
pub const MIN_RELATIVE_GAP: f64 = 1e-3;

/// Complement of the band ranges below the lowest top-band frequency.
pub(crate) fn find_gaps(families: &[FamilyBands]) -> (Vec<Gap>, f64) {
    let mut ceiling = f64::INFINITY;
    let mut ranges: Vec<(f64, f64)> = Vec::new();
    for fam in families {
        let n = fam.bands.iter().map(Vec::len).min().unwrap_or(0);
        if n == 0 {
            return (Vec::new(), 0.0);
        }
        for j in 0..n {
            let lo = fam.bands.iter().map(|b| b[j]).fold(f64::INFINITY, f64::min);
            let hi = fam.bands.iter().map(|b| b[j]).fold(f64::NEG_INFINITY, f64::max);
            ranges.push((lo, hi));
            if j + 1 == n {
                ceiling = ceiling.min(lo);
            }
        }
    }
    ranges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    let mut reach = ranges.first().map_or(0.0, |r| r.1);
    for &(lo, hi) in &ranges[1..] {
        if lo > ceiling {
            break;
        }
        if lo - reach > MIN_RELATIVE_GAP * lo {
            gaps.push(Gap { lo: reach, hi: lo });
        }
        reach = reach.max(hi);
    }
    (gaps, ceiling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::mesh::{generate, GeometrySpec, Shape};

    fn cell(width: f64, height: f64, interfaces: Vec<f64>, h: f64) -> Arc<Mesh> {
        let spec = GeometrySpec::new(Shape::Rectangle { width, height, periodic: true, interfaces }, h);
        Arc::new(generate(&spec).unwrap())
    }

    #[test]
    fn empty_lattice_shear_branch() {
        let a = 1e-6;
        let mesh = cell(a, 0.1e-6, vec![], 0.05e-6);
        let mat = IsotropicMaterial::diamond();
        let sys = assemble(&mesh, &mat, Model::OutOfPlane, 1.0).unwrap();
        let vs = (mat.shear_modulus() / mat.density()).sqrt();
        for frac in [0.1, 0.25, 0.5] {
            let k = frac * PI / a;
            let f = solve_bloch(&sys, k, 2).unwrap();
            let exact = vs * k / (2.0 * PI);
            assert!((f[0] - exact).abs() < 0.01 * exact, "{} vs {exact}", f[0]);
        }
        let f0 = solve_bloch(&sys, 0.0, 2).unwrap();
        assert!(f0[0].abs() < 1e-3 * f0[1]);
    }

    #[test]
    fn time_reversal_symmetry() {
        let mesh = cell(1e-6, 0.3e-6, vec![0.4e-6], 0.1e-6);
        let soft = IsotropicMaterial::new(200e9, 0.25, 2000.0).unwrap();
        let sys = assemble_regions(&mesh, &[IsotropicMaterial::diamond(), soft], Model::InPlane, 1.0).unwrap();
        let k = 0.37 * PI / 1e-6;
        let plus = solve_bloch(&sys, k, 6).unwrap();
        let minus = solve_bloch(&sys, -k, 6).unwrap();
        for (p, m) in plus.iter().zip(&minus) {
            assert!((p - m).abs() < 1e-8 * p, "{plus:?} {minus:?}");
        }
    }

    #[test]
    fn zone_edge_matches_nearby_complex_solve() {
        let mesh = cell(1e-6, 0.2e-6, vec![0.5e-6], 0.1e-6);
        let soft = IsotropicMaterial::new(300e9, 0.2, 2500.0).unwrap();
        let sys = assemble_regions(&mesh, &[IsotropicMaterial::diamond(), soft], Model::OutOfPlane, 1.0).unwrap();
        let edge = solve_bloch(&sys, PI / 1e-6, 4).unwrap();
        let near = solve_bloch(&sys, PI / 1e-6 * (1.0 - 1e-7), 4).unwrap();
        for (a, b) in edge.iter().zip(&near) {
            assert!((a - b).abs() < 1e-6 * a, "{edge:?} {near:?}");
        }
    }

    #[test]
    fn missing_pairs_rejected() {
        let spec = GeometrySpec::new(
            Shape::Rectangle { width: 1e-6, height: 1e-6, periodic: false, interfaces: vec![] },
            0.25e-6,
        );
        let mesh = Arc::new(generate(&spec).unwrap());
        let sys = assemble(&mesh, &IsotropicMaterial::diamond(), Model::InPlane, 1.0).unwrap();
        assert!(matches!(solve_bloch(&sys, 0.0, 3), Err(Error::NotAUnitCell)));
    }

    #[test]
    fn homogeneous_cell_has_no_gap() {
        let mesh = cell(1e-6, 0.2e-6, vec![], 0.1e-6);
        let opts = BandOptions { n_k: 8, n_bands: 4, ..BandOptions::default() };
        let bs = band_structure(&mesh, &[IsotropicMaterial::diamond()], &opts).unwrap();
        assert!(bs.gaps.is_empty(), "{:?}", bs.gaps);
        for i in 0..bs.k_samples.len() {
            let m = bs.merged(i);
            assert!(m.windows(2).all(|w| w[0].0 <= w[1].0));
        }
    }

    #[test]
    fn two_point_grid_is_well_formed() {
        let mesh = cell(1e-6, 0.2e-6, vec![0.5e-6], 0.1e-6);
        let soft = IsotropicMaterial::new(100e9, 0.2, 8000.0).unwrap();
        let opts = BandOptions { n_k: 2, n_bands: 3, ..BandOptions::default() };
        let bs = band_structure(&mesh, &[IsotropicMaterial::diamond(), soft], &opts).unwrap();
        assert_eq!(bs.k_samples.len(), 2);
        for g in &bs.gaps {
            assert!(g.lo < g.hi && g.hi <= bs.ceiling);
        }
        for w in bs.gaps.windows(2) {
            assert!(w[0].hi < w[1].lo);
        }
    }

    #[test]
    fn gap_bookkeeping() {
        let fam = |family, bands| FamilyBands { family, bands };
        let fams = vec![
            fam(Model::InPlane, vec![vec![0.0, 3.0, 9.0], vec![1.0, 4.0, 10.0]]),
            fam(Model::OutOfPlane, vec![vec![0.0, 2.5, 8.0], vec![0.5, 3.5, 8.5]]),
        ];
        let (gaps, ceiling) = find_gaps(&fams);
        assert_eq!(ceiling, 8.0);
        assert_eq!(gaps, vec![Gap { lo: 1.0, hi: 2.5 }, Gap { lo: 4.0, hi: 8.0 }]);
    }
}
