use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::problem::{gradient, orbit_distance_with, residual_of, ProblemSpec};
use super::{CriticalPoint, SolutionSet, TRIVIAL_NORM};
use crate::{CVector, Complex, RVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    /// Accept when the `M⁻¹` residual is below this.
    pub tol: f64,
    pub max_iter: usize,
    pub dedup_tol: f64,
    pub seed: u64,
    /// Perturbed restarts allowed per start after a singular Jacobian.
    pub max_restarts: usize,
    /// Shift in `μ(u) = Π (δ(u, u_k)^{−p} + shift)`.
    pub deflation_shift: f64,
    pub deflation_power: i32,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 80,
            dedup_tol: 1e-4,
            seed: 0,
            max_restarts: 3,
            deflation_shift: 1.0,
            deflation_power: 2,
        }
    }
}

/// Pivot ratio below which the Newton matrix is treated as singular.
const SINGULAR_RATIO: f64 = 1e-13;

/// Newton direction for `g(u) = 0`. The phase direction `iu` is removed by
/// bordering with the constraint `Re((iu)ᴴ M d) = 0`, except near `u = 0`.
/// `None` when the bordered matrix is numerically singular.
pub(crate) fn newton_direction(spec: &ProblemSpec, u: &CVector, g: &CVector) -> Option<CVector> {
    let d = spec.dim();
    let h = spec.hessian(u);
    let mu = spec.mass_complex() * u;
    let bordered = spec.mass_norm(u) > TRIVIAL_NORM;
    let n = if bordered { 2 * d + 1 } else { 2 * d };
    let hn = h.amax().max(f64::MIN_POSITIVE);
    let mut a = h.resize(n, n, 0.0);
    let mut rhs = RVector::zeros(n);
    for i in 0..d {
        rhs[i] = -g[i].re;
        rhs[i + d] = -g[i].im;
    }
    if bordered {
        let scale = mu.norm();
        for i in 0..d {
            let (tr, ti) = (-mu[i].im / scale * hn, mu[i].re / scale * hn);
            a[(i, 2 * d)] = tr;
            a[(2 * d, i)] = tr;
            a[(i + d, 2 * d)] = ti;
            a[(2 * d, i + d)] = ti;
        }
    }
    let lu = a.lu();
    let diag = lu.u().diagonal().map(f64::abs);
    let (lo, hi) = (diag.min(), diag.max());
    if !(hi > 0.0) || lo < SINGULAR_RATIO * hi {
        return None;
    }
    let x = lu.solve(&rhs)?;
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(CVector::from_iterator(
        d,
        (0..d).map(|i| Complex::new(x[i], x[i + d])),
    ))
}

/// Deflation factor `μ(u)` and the complex representation of `∇μ/μ`.
fn deflation(
    spec: &ProblemSpec,
    u: &CVector,
    known: &[CVector],
    opts: &NewtonOptions,
) -> (f64, CVector) {
    let mc = spec.mass_complex();
    let mu_vec = mc * u;
    let p = opts.deflation_power as f64;
    let mut factor = 1.0;
    let mut grad = CVector::zeros(u.len());
    for v in known {
        let z = v.dotc(&mu_vec);
        let delta = orbit_distance_with(u, v, mc).max(1e-300);
        let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex::new(1.0, 0.0) };
        let grad_delta = (&mu_vec - mc * v * phase) / Complex::new(delta, 0.0);
        let inv = delta.powf(-p);
        let term = inv + opts.deflation_shift;
        factor *= term;
        // ∇(δ^{-p}) / (δ^{-p} + shift)
        grad += grad_delta * Complex::new(-p * inv / delta / term, 0.0);
    }
    (factor, grad)
}

/// Residual recomputed entry by entry, independent of the matrix products
/// used by `gradient`.
fn verify_residual(u: &CVector, spec: &ProblemSpec) -> f64 {
    let d = u.len();
    let mut g = CVector::zeros(d);
    for i in 0..d {
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..d {
            let k = spec.k.matrix[(i, j)];
            let lr = k.re - spec.beta_inf * spec.m.matrix[(i, j)];
            re += lr * u[j].re - k.im * u[j].im;
            im += lr * u[j].im + k.im * u[j].re;
        }
        let w = spec.weights[i] * spec.nonlinearity.f(u[i].re * u[i].re + u[i].im * u[i].im);
        g[i] = Complex::new(re - w * u[i].re, im - w * u[i].im);
    }
    residual_of(&g, spec)
}

fn random_direction(rng: &mut ChaCha8Rng, spec: &ProblemSpec) -> CVector {
    let d = spec.dim();
    let v = CVector::from_fn(d, |_, _| {
        Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let n = spec.mass_norm(&v);
    v / Complex::new(n, 0.0)
}

enum Outcome {
    Converged(CVector),
    Failed,
}

fn run_start(
    spec: &ProblemSpec,
    start: &CVector,
    index: usize,
    known: &[CVector],
    opts: &NewtonOptions,
) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut u = start.clone();
    let blowup = 1e8 * (1.0 + spec.mass_norm(start));
    let mut restarts = 0;
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        let g = gradient(&u, spec);
        let r = residual_of(&g, spec);
        if r <= opts.tol {
            return Outcome::Converged(u);
        }
        let Some(dir) = newton_direction(spec, &u, &g) else {
            if restarts >= opts.max_restarts {
                log::debug!("start {index}: singular Jacobian, restarts exhausted");
                return Outcome::Failed;
            }
            restarts += 1;
            let scale = 1e-2 * spec.mass_norm(&u).max(1e-3);
            u += random_direction(&mut rng, spec) * Complex::new(scale, 0.0);
            continue;
        };
        let (mu0, glog) = deflation(spec, &u, known, opts);
        let slope = glog.dotc(&dir).re;
        let denom = 1.0 - slope;
        let tau = if denom.abs() > 1e-12 { 1.0 / denom } else { 1.0 };
        let step = dir * Complex::new(tau, 0.0);
        let merit0 = mu0 * r;

        let mut best: Option<(f64, CVector)> = None;
        let mut lambda = 1.0;
        for _ in 0..20 {
            let trial = &u + &step * Complex::new(lambda, 0.0);
            let rt = residual_of(&gradient(&trial, spec), spec);
            let (mt, _) = deflation(spec, &trial, known, opts);
            let merit = mt * rt;
            if merit.is_finite() && best.as_ref().is_none_or(|(b, _)| merit < *b) {
                best = Some((merit, trial));
            }
            if merit.is_finite() && merit < (1.0 - 1e-4 * lambda) * merit0 {
                break;
            }
            lambda *= 0.5;
        }
        let Some((_, next)) = best else {
            return Outcome::Failed;
        };
        u = next;
        if spec.mass_norm(&u) > blowup {
            log::debug!("start {index}: iterate diverged");
            return Outcome::Failed;
        }
    }
    let r = residual_of(&gradient(&u, spec), spec);
    if r <= opts.tol {
        Outcome::Converged(u)
    } else {
        log::debug!("start {index}: no convergence, residual {r:.3e}");
        Outcome::Failed
    }
}

/// Deflated Newton from each start in order. Converged points on a new phase
/// orbit are added to the set and deflated for later starts. Starts that
/// fail are skipped.
pub fn newton_deflated(spec: &ProblemSpec, starts: &[CVector], opts: &NewtonOptions) -> SolutionSet {
    let mut set = SolutionSet::new(opts.dedup_tol);
    let mut known: Vec<CVector> = Vec::new();
    for (index, start) in starts.iter().enumerate() {
        if start.len() != spec.dim() {
            log::warn!("start {index} has length {}, expected {}", start.len(), spec.dim());
            continue;
        }
        let Outcome::Converged(u) = run_start(spec, start, index, &known, opts) else {
            continue;
        };
        if verify_residual(&u, spec) > 10.0 * opts.tol {
            log::warn!("start {index}: converged point failed re-verification");
            continue;
        }
        let cp = CriticalPoint::from_iterate(u, spec, index);
        let u = cp.u.clone();
        let trivial = cp.trivial;
        if set.insert(cp, spec) {
            known.push(if trivial { CVector::zeros(spec.dim()) } else { u });
        }
    }
    set
}
