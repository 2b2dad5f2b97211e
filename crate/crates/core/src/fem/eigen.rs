//! Shift-invert Lanczos for K x = λ M x with full M-reorthogonalization.
//!
//! Converged Ritz vectors are locked and every further Krylov sequence is kept
//! M-orthogonal to them, so repeated eigenvalues are picked up one copy per
//! pass. The search stops once a fresh pass produces nothing closer to the
//! shift than the wanted set.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{dot, norm, Csr, Skyline};
use crate::error::{Error, Result};

const SEED: u64 = 0x7068_6f6e_6f63_6176;
/// Relative true-residual bound ‖Kx − λMx‖ / (‖Kx‖ + |λ|‖Mx‖).
pub(crate) const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub(crate) struct EigenPair {
    pub lambda: f64,
    /// M-normalized.
    pub vector: Vec<f64>,
}

/// Maps an eigenvector to a second, M-orthogonal eigenvector of the same
/// eigenvalue that should be locked alongside it.
pub(crate) type Partner<'a> = &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync);

/// Up to `count` eigenpairs nearest to `sigma`, ordered by |λ − σ|.
pub(crate) fn shift_invert(
    k: &Csr,
    m: &Csr,
    sigma: f64,
    count: usize,
    partner: Option<Partner>,
) -> Result<Vec<EigenPair>> {
    let n = k.dim();
    if n == 0 || count == 0 {
        return Ok(Vec::new());
    }
    let (fac, sigma) = factor_shifted(k, m, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // locked pairs (θ, x) and every vector the Krylov space must avoid
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut avoid: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut steps = (2 * count + 20).max(40);
    let mut passes = 0;
    loop {
        passes += 1;
        if passes > 4 * count + 20 {
            return Err(Error::NoConvergence(format!(
                "found {} of {count} eigenpairs near shift {sigma:e}",
                locked.len()
            )));
        }
        let room = n.saturating_sub(avoid.len());
        if room == 0 {
            break;
        }
        let run = lanczos_run(&fac, m, &avoid, steps.min(room), &mut rng);
        let Some(run) = run else { break };
        let mut ritz = run.ritz;
        ritz.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
        let threshold = wanted_threshold(&locked, count);
        let top_converged = ritz.first().is_some_and(|r| r.2);
        let mut added_wanted = false;
        for (theta, s, converged) in &ritz {
            if !converged {
                continue;
            }
            let mut x = vec![0.0; n];
            for (q, c) in run.basis.iter().zip(s) {
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi += c * qi;
                }
            }
            if !orthonormalize(&mut x, m, &avoid) {
                continue;
            }
            if threshold.is_none_or(|t| theta.abs() > t) {
                added_wanted = true;
            }
            let mx = m.mul_vec(&x);
            if let Some(p) = partner {
                let mut y = p(&x);
                avoid.push((x.clone(), mx));
                if orthonormalize(&mut y, m, &avoid) {
                    let my = m.mul_vec(&y);
                    avoid.push((y, my));
                }
            } else {
                avoid.push((x.clone(), mx));
            }
            locked.push((*theta, x));
        }
        if locked.len() >= count && !added_wanted && top_converged {
            break;
        }
        if !top_converged {
            steps = (steps * 3 / 2).min(n);
        }
    }

    locked.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
    locked.truncate(count);
    let mut out = Vec::with_capacity(locked.len());
    for (_, mut x) in locked {
        let lambda = polish(k, m, &fac, &mut x)?;
        out.push(EigenPair { lambda, vector: x });
    }
    out.sort_by(|a, b| (a.lambda - sigma).abs().total_cmp(&(b.lambda - sigma).abs()));
    Ok(out)
}

/// Factors K − σM, nudging the shift away from an eigenvalue up to three times.
pub(crate) fn factor_shifted(k: &Csr, m: &Csr, sigma: f64) -> Result<(Skyline, f64)> {
    let scale = typical_ratio(k, m);
    let mut shift = sigma;
    let mut last = None;
    for attempt in 0..4 {
        if attempt > 0 {
            let delta = 1e-8 * scale * 10f64.powi(attempt - 1) + 1e-6 * sigma.abs();
            shift = sigma - delta;
        }
        match Skyline::factor(&k.add_scaled(-shift, m)) {
            Ok(f) => return Ok((f, shift)),
            Err(Error::RigidModesPresent { pivot }) => last = Some(pivot),
            Err(e) => return Err(e),
        }
    }
    Err(Error::FactorizationBreakdown { pivot: last.unwrap_or(0), shift })
}

/// Median K_ii / M_ii, a stand-in for the spectral scale.
fn typical_ratio(k: &Csr, m: &Csr) -> f64 {
    let (kd, md) = (k.diagonal(), m.diagonal());
    let mut r: Vec<f64> = kd.iter().zip(&md).filter(|(_, &b)| b > 0.0).map(|(a, b)| a / b).collect();
    if r.is_empty() {
        return 1.0;
    }
    r.sort_by(f64::total_cmp);
    r[r.len() / 2]
}

fn wanted_threshold(locked: &[(f64, Vec<f64>)], count: usize) -> Option<f64> {
    if locked.len() < count {
        return None;
    }
    let mut t: Vec<f64> = locked.iter().map(|(th, _)| th.abs()).collect();
    t.sort_by(|a, b| b.total_cmp(a));
    Some(t[count - 1])
}

/// Removes the components along `avoid` (twice) and M-normalizes.
/// Returns false if nothing is left.
fn orthonormalize(x: &mut [f64], m: &Csr, avoid: &[(Vec<f64>, Vec<f64>)]) -> bool {
    let before = m.quadratic_form(x).sqrt();
    for _ in 0..2 {
        for (v, mv) in avoid {
            let c = dot(mv, x);
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi -= c * vi;
            }
        }
    }
    let after = m.quadratic_form(x).sqrt();
    if !(after > 1e-8 * before) {
        return false;
    }
    for xi in x.iter_mut() {
        *xi /= after;
    }
    true
}

struct Run {
    basis: Vec<Vec<f64>>,
    /// (θ, coefficients in the basis, converged)
    ritz: Vec<(f64, Vec<f64>, bool)>,
}

fn lanczos_run(
    fac: &Skyline,
    m: &Csr,
    avoid: &[(Vec<f64>, Vec<f64>)],
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Run> {
    let n = m.dim();
    let mut q0 = vec![0.0; n];
    let mut ok = false;
    for _ in 0..5 {
        for v in q0.iter_mut() {
            *v = rng.random::<f64>() - 0.5;
        }
        if orthonormalize(&mut q0, m, avoid) {
            ok = true;
            break;
        }
    }
    if !ok {
        return None;
    }
    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut mbasis: Vec<Vec<f64>> = vec![m.mul_vec(&basis[0])];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last_beta = 0.0;
    for j in 0..steps {
        let mut w = fac.solve(&mbasis[j]);
        let a = dot(&w, &mbasis[j]);
        alpha.push(a);
        for _ in 0..2 {
            let mw = m.mul_vec(&w);
            for (v, _) in avoid {
                let c = dot(v, &mw);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
            for q in &basis {
                let c = dot(q, &mw);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let mw = m.mul_vec(&w);
        let b = dot(&w, &mw).max(0.0).sqrt();
        if b <= 1e-13 * a.abs().max(beta.last().copied().unwrap_or(0.0)) {
            // invariant subspace: the Ritz pairs are exact
            last_beta = 0.0;
            break;
        }
        last_beta = b;
        if j + 1 == steps {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|v| v / b).collect());
        mbasis.push(mw.iter().map(|v| v / b).collect());
    }
    let size = alpha.len();
    let mut t = DMatrix::<f64>::zeros(size, size);
    for i in 0..size {
        t[(i, i)] = alpha[i];
        if i + 1 < size {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let top = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let ritz = (0..size)
        .map(|i| {
            let theta = eig.eigenvalues[i];
            let s: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let estimate = last_beta * s[size - 1].abs();
            let converged = estimate <= 1e-10 * theta.abs().max(1e-6 * top);
            (theta, s, converged)
        })
        .collect();
    basis.truncate(size);
    Some(Run { basis, ritz })
}

/// Rayleigh quotient of a locked vector, refined by inverse iteration until
/// the true residual meets the tolerance.
fn polish(k: &Csr, m: &Csr, fac: &Skyline, x: &mut Vec<f64>) -> Result<f64> {
    let floor = 1e-13 * k.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for _ in 0..6 {
        let kx = k.mul_vec(x);
        let mx = m.mul_vec(x);
        let lambda = dot(x, &kx) / dot(x, &mx);
        let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
        if norm(&r) <= RESIDUAL_TOL * (norm(&kx) + lambda.abs() * norm(&mx)) + floor * norm(x) {
            return Ok(lambda);
        }
        let mut y = fac.solve(&mx);
        let s = m.quadratic_form(&y).sqrt();
        for v in y.iter_mut() {
            *v /= s;
        }
        *x = y;
    }
    Err(Error::NoConvergence("eigenvector residual above tolerance after refinement".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fixed-fixed string: K = tridiag(−1, 2, −1), M = I, λ_k = 2 − 2cos(kπ/(n+1)).
    fn string(n: usize) -> (Csr, Csr) {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        (Csr::from_triplets(n, t), Csr::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect()))
    }

    fn exact(n: usize, k: usize) -> f64 {
        2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos()
    }

    #[test]
    fn lowest_string_modes() {
        let n = 200;
        let (k, m) = string(n);
        let pairs = shift_invert(&k, &m, 0.0, 5, None).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            assert!((p.lambda - exact(n, i + 1)).abs() < 1e-10 * exact(n, i + 1));
        }
    }

    #[test]
    fn interior_shift() {
        let n = 100;
        let (k, m) = string(n);
        let sigma = exact(n, 40) + 1e-4;
        let pairs = shift_invert(&k, &m, sigma, 3, None).unwrap();
        assert!((pairs[0].lambda - exact(n, 40)).abs() < 1e-10);
        let mut got: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
        got.sort_by(f64::total_cmp);
        assert!((got[0] - exact(n, 39)).abs() < 1e-10);
        assert!((got[2] - exact(n, 41)).abs() < 1e-10);
    }

    #[test]
    fn repeated_eigenvalues_are_all_found() {
        // two decoupled identical strings: every eigenvalue doubled
        let n = 60;
        let (k1, _) = string(n);
        let mut t = Vec::new();
        for i in 0..n {
            for (j, v) in k1.row(i) {
                t.push((i, j, v));
                t.push((i + n, j + n, v));
            }
        }
        let k = Csr::from_triplets(2 * n, t);
        let m = Csr::from_triplets(2 * n, (0..2 * n).map(|i| (i, i, 1.0)).collect());
        let pairs = shift_invert(&k, &m, 0.0, 4, None).unwrap();
        let mut got: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
        got.sort_by(f64::total_cmp);
        for (g, e) in got.iter().zip([exact(n, 1), exact(n, 1), exact(n, 2), exact(n, 2)]) {
            assert!((g - e).abs() < 1e-10, "{got:?}");
        }
    }

    #[test]
    fn exact_eigenvalue_shift_is_nudged() {
        let n = 3;
        // eigenvalues 2 − √2, 2, 2 + √2
        let (k, m) = string(n);
        let pairs = shift_invert(&k, &m, 2.0, 1, None).unwrap();
        assert!((pairs[0].lambda - 2.0).abs() < 1e-10);
    }

    #[test]
    fn vectors_are_m_orthonormal() {
        let n = 80;
        let (k, _) = string(n);
        let m = Csr::from_triplets(n, (0..n).map(|i| (i, i, 1.0 + (i % 3) as f64)).collect());
        let pairs = shift_invert(&k, &m, 0.0, 6, None).unwrap();
        for (i, a) in pairs.iter().enumerate() {
            for (j, b) in pairs.iter().enumerate() {
                let g = dot(&a.vector, &m.mul_vec(&b.vector));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-8);
            }
        }
    }
}
