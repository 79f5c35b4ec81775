use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::multistart::{check_range, combine, random_coeffs};
use super::problem::ProblemSpec;
use crate::error::{Error, Result};
use crate::spectral::Spectrum;
use crate::Complex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingReport {
    pub h: usize,
    pub k: usize,
    pub rho: f64,
    pub samples: usize,
    /// Smallest sampled `J` on the sphere `‖u‖_K = ρ` in `E_h`.
    pub c0_est: f64,
    /// Largest sampled `J` on `H_k`.
    pub cinf_est: f64,
    /// `‖u‖_K` at which `cinf_est` was attained.
    pub cinf_radius: f64,
    pub geometry_ok: bool,
}

/// `J` restricted to a ray `t v` with `v = Σ c_m f_m`, using the
/// orthogonality of the eigenvectors for the quadratic part.
struct Ray<'a> {
    spec: &'a ProblemSpec,
    nodal: Vec<f64>,
    quad: f64,
}

impl<'a> Ray<'a> {
    fn new(spec: &'a ProblemSpec, spectrum: &Spectrum, first: usize, c: &[Complex]) -> Self {
        let v = combine(spectrum, first, c, 1.0);
        let scale = c
            .iter()
            .enumerate()
            .map(|(j, z)| z.norm_sqr() * spectrum.eigenvalues[first + j])
            .sum::<f64>();
        // ‖v‖_K = 1 after combine; |v|² = Σ|c|² / Σβ|c|²
        let mass = c.iter().map(|z| z.norm_sqr()).sum::<f64>() / scale;
        Ray {
            spec,
            nodal: v.iter().map(|z| z.norm_sqr()).collect(),
            quad: 1.0 - spec.beta_inf * mass,
        }
    }

    fn energy(&self, t: f64) -> f64 {
        let t2 = t * t;
        let nl: f64 = self
            .nodal
            .iter()
            .zip(self.spec.weights.iter())
            .map(|(a, w)| w * self.spec.nonlinearity.F(t2 * a))
            .sum();
        0.5 * t2 * self.quad - 0.5 * nl
    }

    /// Maximum over `t ≥ 0`, scanning geometrically outwards from `t0` until
    /// `J` has turned down, then refining by golden section.
    fn maximum(&self, t0: f64) -> (f64, f64) {
        let ratio = 1.25;
        let mut best = (0.0, 0.0);
        let mut t = t0 / 64.0;
        for _ in 0..400 {
            let j = self.energy(t);
            if j > best.1 {
                best = (t, j);
            }
            if j < best.1 - best.1.abs().max(1e-300) && t > 4.0 * best.0 {
                break;
            }
            t *= ratio;
        }
        if best.0 == 0.0 {
            return best;
        }
        let (mut a, mut b) = (best.0 / ratio, best.0 * ratio);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if self.energy(x1) > self.energy(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let t = 0.5 * (a + b);
        let j = self.energy(t);
        if j > best.1 {
            (t, j)
        } else {
            best
        }
    }
}

/// Sampled linking levels: `c0_est` is the minimum of `J` over the sphere
/// `‖u‖_K = ρ` in `span{f_h, f_{h+1}, ..}` (the computed part of `E_h`),
/// `cinf_est` the maximum of `J` over `H_k = span{f_1..f_k}`. Both sample
/// sets contain the pure eigenvector directions followed by `samples`
/// seeded random directions.
pub fn linking_diagnostics(
    spec: &ProblemSpec,
    spectrum: &Spectrum,
    h: usize,
    k: usize,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<LinkingReport> {
    check_range(spectrum, h, k)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho = {rho} must be positive")));
    }
    if spectrum.vectors.nrows() != spec.dim() {
        return Err(Error::InvalidArgument("spectrum and problem dimensions differ".into()));
    }
    let one = Complex::new(1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let first = h - 1;
    let n_e = spectrum.len() - first;
    let mut c0 = f64::INFINITY;
    for j in 0..n_e {
        let mut c = vec![Complex::new(0.0, 0.0); j + 1];
        c[j] = one;
        c0 = c0.min(Ray::new(spec, spectrum, first, &c).energy(rho));
    }
    for _ in 0..samples {
        let c = random_coeffs(&mut rng, n_e);
        c0 = c0.min(Ray::new(spec, spectrum, first, &c).energy(rho));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut cinf = (0.0, 0.0);
    let mut consider = |c: &[Complex]| {
        let (t, j) = Ray::new(spec, spectrum, 0, c).maximum(rho);
        if j > cinf.1 {
            cinf = (t, j);
        }
    };
    for j in 0..k {
        let mut c = vec![Complex::new(0.0, 0.0); j + 1];
        c[j] = one;
        consider(&c);
    }
    for _ in 0..samples {
        consider(&random_coeffs(&mut rng, k));
    }

    Ok(LinkingReport {
        h,
        k,
        rho,
        samples,
        c0_est: c0,
        cinf_est: cinf.1,
        cinf_radius: cinf.0,
        geometry_ok: c0 > 0.0 && cinf.1 > c0,
    })
}
