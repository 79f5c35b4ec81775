use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::Spectrum;
use crate::{CVector, Complex};

/// Radii multipliers cycled through by the global random starts.
const GLOBAL_RADII: [f64; 3] = [1.0, 4.0, 16.0];

/// `Σ c_m f_m` scaled to `‖·‖_K = radius`, using the K-orthogonality of the
/// eigenvectors. `coeffs[j]` multiplies `f_{first+j}` (0-based).
pub(crate) fn combine(spectrum: &Spectrum, first: usize, coeffs: &[Complex], radius: f64) -> CVector {
    let d = spectrum.vectors.nrows();
    let mut u = CVector::zeros(d);
    let mut norm2 = 0.0;
    for (j, c) in coeffs.iter().enumerate() {
        let m = first + j;
        u += spectrum.vectors.column(m) * *c;
        norm2 += c.norm_sqr() * spectrum.eigenvalues[m];
    }
    u * Complex::new(radius / norm2.sqrt(), 0.0)
}

pub(crate) fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex> {
    loop {
        let c: Vec<Complex> = (0..n)
            .map(|_| Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        if c.iter().any(|z| z.norm() > 1e-12) {
            return c;
        }
    }
}

pub(crate) fn check_range(spectrum: &Spectrum, h: usize, k: usize) -> Result<()> {
    if h == 0 || h > k || k > spectrum.len() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= h <= k <= {} (computed eigenpairs), got h = {h}, k = {k}",
            spectrum.len()
        )));
    }
    Ok(())
}

/// Deterministic Newton starts built from the eigenvectors (1-based `h..=k`):
///
/// - `ρ f_m / ‖f_m‖_K` for `h ≤ m ≤ k`;
/// - `ρ (f_m ± f_m') / ‖·‖_K` for `h ≤ m < m' ≤ k`;
/// - `2(k − h + 1)` random complex combinations in `span{f_h..f_k}` on the
///   sphere of radius `ρ`;
/// - `extra_random` random combinations of all computed eigenvectors at
///   radii `ρ`, `4ρ`, `16ρ` in turn.
pub fn multistart_from_eigenspaces(
    spectrum: &Spectrum,
    h: usize,
    k: usize,
    rho: f64,
    extra_random: usize,
    seed: u64,
) -> Result<Vec<CVector>> {
    check_range(spectrum, h, k)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho = {rho} must be positive")));
    }
    let one = Complex::new(1.0, 0.0);
    let n = k - h + 1;
    let first = h - 1;
    let mut starts = Vec::new();
    for j in 0..n {
        starts.push(combine(spectrum, first + j, &[one], rho));
    }
    for a in 0..n {
        for b in a + 1..n {
            for sign in [1.0, -1.0] {
                let mut c = vec![Complex::new(0.0, 0.0); b - a + 1];
                c[0] = one;
                c[b - a] = Complex::new(sign, 0.0);
                starts.push(combine(spectrum, first + a, &c, rho));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..2 * n {
        let c = random_coeffs(&mut rng, n);
        starts.push(combine(spectrum, first, &c, rho));
    }
    for i in 0..extra_random {
        let c = random_coeffs(&mut rng, spectrum.len());
        starts.push(combine(spectrum, 0, &c, rho * GLOBAL_RADII[i % GLOBAL_RADII.len()]));
    }
    Ok(starts)
}
