//! Generalized Hermitian eigenproblem `K f = β M f` and checks of its
//! variational characterizations.

use nalgebra::{Cholesky, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::assembly::{FormMatrix, FormMetadata, MassMatrix};
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, Complex, RMatrix};

/// Relative gap under which consecutive eigenvalues form one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// `β_1 ≤ … ≤ β_{m_max}`.
    pub eigenvalues: Vec<f64>,
    /// `M`-orthonormal eigenvectors as columns, phase fixed so that the
    /// first coefficient of largest modulus is real and positive.
    pub vectors: CMatrix,
    /// Groups of 0-based indices whose eigenvalues agree to `CLUSTER_TOL`.
    pub clusters: Vec<Vec<usize>>,
    /// `β_{m_max+1}` when it exists; decides whether the last cluster is
    /// complete.
    pub next_eigenvalue: Option<f64>,
    pub source: FormMetadata,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, m: usize) -> CVector {
        self.vectors.column(m).into_owned()
    }

    /// Cluster label of each eigenvalue.
    pub fn cluster_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (c, members) in self.clusters.iter().enumerate() {
            for &m in members {
                out[m] = c;
            }
        }
        out
    }

    /// True when `β_m` and `β_{m+1}` (1-based) are in the same cluster, i.e.
    /// splitting after the first `m` eigenpairs is ill-defined.
    pub fn splits_cluster(&self, m: usize) -> bool {
        if m == 0 {
            return false;
        }
        let next = if m < self.len() {
            self.eigenvalues[m]
        } else {
            match self.next_eigenvalue {
                Some(v) => v,
                None => return false,
            }
        };
        same_cluster(self.eigenvalues[m - 1], next)
    }

    /// Worst `|fᵢᴴ M fⱼ − δᵢⱼ|` and worst `|fᵢᴴ K fⱼ − βᵢ δᵢⱼ| / β_max`.
    pub fn orthogonality_defects(&self, k: &CMatrix, m: &MassMatrix) -> (f64, f64) {
        let f = &self.vectors;
        let gm = f.adjoint() * m.to_complex() * f;
        let gk = f.adjoint() * k * f;
        let scale = self.eigenvalues.last().copied().unwrap_or(1.0).abs().max(1e-300);
        let mut dm: f64 = 0.0;
        let mut dk: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let (em, ek) = if i == j {
                    (1.0, self.eigenvalues[i])
                } else {
                    (0.0, 0.0)
                };
                dm = dm.max((gm[(i, j)] - em).norm());
                dk = dk.max((gk[(i, j)] - ek).norm() / scale);
            }
        }
        (dm, dk)
    }

    /// CSV with columns `m,beta,multiplicity_cluster` (1-based `m`).
    pub fn to_csv(&self) -> String {
        let labels = self.cluster_of();
        let mut out = String::from("m,beta,multiplicity_cluster\n");
        for (i, b) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{},{:.17e},{}\n", i + 1, b, labels[i] + 1));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vectors: Vec<serde_json::Value> = (0..self.len())
            .map(|m| {
                let v = self.vectors.column(m);
                serde_json::json!({
                    "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
                    "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "eigenvalues": self.eigenvalues,
            "clusters": self.clusters.iter().map(|c| c.iter().map(|m| m + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "vectors": vectors,
            "source": self.source,
        })
    }
}

fn same_cluster(a: f64, b: f64) -> bool {
    (b - a).abs() <= CLUSTER_TOL * a.abs().max(b.abs())
}

fn cluster(values: &[f64]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if same_cluster(values[*c.last().unwrap()], v) => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Estimate of the spectral condition number of an SPD matrix from power
/// and inverse iteration.
fn condition_estimate(m: &RMatrix, chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let d = m.nrows();
    let start = nalgebra::DVector::from_fn(d, |i, _| 1.0 + 0.01 * ((i * 7919) % 101) as f64);
    let mut v = start.normalize();
    let mut hi = 0.0;
    for _ in 0..50 {
        let w = m * &v;
        hi = w.norm();
        v = w / hi;
    }
    let mut v = start.normalize();
    let mut lo_inv = 0.0;
    for _ in 0..50 {
        let w = chol.solve(&v);
        lo_inv = w.norm();
        v = w / lo_inv;
    }
    hi * lo_inv
}

/// Solve `K f = β M f` for the smallest `m_max` eigenpairs.
///
/// Reduction through the Cholesky factor `M = LLᵀ` to the Hermitian
/// problem `L⁻¹KL⁻ᵀ y = β y`, `f = L⁻ᵀ y`.
pub fn solve_eigs(k: &FormMatrix, m: &MassMatrix, m_max: usize) -> Result<Spectrum> {
    let d = k.dim();
    if m.dim() != d {
        return Err(Error::InvalidArgument(format!(
            "K is {d}x{d} but M is {0}x{0}",
            m.dim()
        )));
    }
    if m_max == 0 || m_max > d {
        return Err(Error::InvalidArgument(format!(
            "m_max = {m_max} must lie in 1..={d}"
        )));
    }
    let chol = Cholesky::new(m.matrix.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?;
    let condition = condition_estimate(&m.matrix, &chol);
    if condition > MAX_CONDITION {
        return Err(Error::Conditioning { condition });
    }
    let l = chol.l().map(|x| Complex::new(x, 0.0));
    let y = l
        .solve_lower_triangular(&k.matrix)
        .ok_or_else(|| Error::NotPositiveDefinite("mass factor is singular".into()))?;
    let c = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or_else(|| Error::NotPositiveDefinite("mass factor is singular".into()))?
        .adjoint();
    let c = (&c + c.adjoint()) * Complex::new(0.5, 0.0);
    let eig = SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order[..m_max].iter().map(|&i| eig.eigenvalues[i]).collect();
    let next_eigenvalue = order.get(m_max).map(|&i| eig.eigenvalues[i]);

    let lt = l.adjoint();
    let mut vectors = CMatrix::zeros(d, m_max);
    for (col, &i) in order[..m_max].iter().enumerate() {
        let yv = eig.eigenvectors.column(i).into_owned();
        let f = lt
            .solve_upper_triangular(&yv)
            .ok_or_else(|| Error::NotPositiveDefinite("mass factor is singular".into()))?;
        vectors.set_column(col, &fix_phase(f));
    }
    if eigenvalues[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {} is not positive",
            eigenvalues[0]
        )));
    }
    Ok(Spectrum {
        clusters: cluster(&eigenvalues),
        eigenvalues,
        vectors,
        next_eigenvalue,
        source: k.meta.clone(),
    })
}

/// Rotate `f` so that its first coefficient of (numerically) largest
/// modulus is real and positive.
pub fn fix_phase(mut f: CVector) -> CVector {
    let max = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return f;
    }
    let pivot = f.iter().position(|z| z.norm() >= (1.0 - 1e-9) * max).unwrap();
    let rot = f[pivot].conj() / f[pivot].norm();
    f *= rot;
    f[pivot] = Complex::new(f[pivot].norm(), 0.0);
    f
}

/// `(uᴴKu) / (uᴴMu)`.
pub fn rayleigh_quotient(u: &CVector, k: &CMatrix, m: &MassMatrix) -> Result<f64> {
    let den = mass_norm_sq(u, m);
    if den <= 0.0 || u.iter().all(|z| *z == Complex::new(0.0, 0.0)) {
        return Err(Error::InvalidArgument("Rayleigh quotient of the zero vector".into()));
    }
    Ok(hermitian_form(u, k) / den)
}

pub(crate) fn hermitian_form(u: &CVector, k: &CMatrix) -> f64 {
    u.dotc(&(k * u)).re
}

pub(crate) fn mass_norm_sq(u: &CVector, m: &MassMatrix) -> f64 {
    let d = u.len();
    let mut acc = 0.0;
    for j in 0..d {
        let mut col = Complex::new(0.0, 0.0);
        for i in 0..d {
            col += u[i].conj() * m.matrix[(i, j)];
        }
        acc += (col * u[j]).re;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSplit {
    /// Columns `f_1..f_m` spanning `H_m`.
    pub h_basis: CMatrix,
    /// `P = I − Σ_{j≤m} f_j f_jᴴ M`, the projector onto `E_{m+1}` along
    /// `H_m`; it is orthogonal for both the `M` and the `K` inner product.
    pub projector: CMatrix,
}

/// Split the space after the first `m` eigenpairs.
pub fn subspace_split(spec: &Spectrum, m: usize, mass: &MassMatrix) -> Result<SubspaceSplit> {
    if m >= spec.len() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} needs at least {} computed eigenpairs",
            m + 1
        )));
    }
    if spec.splits_cluster(m) {
        let label = spec.cluster_of()[m - 1];
        return Err(Error::SplitAmbiguous {
            m,
            cluster: spec.clusters[label].iter().map(|i| i + 1).collect(),
        });
    }
    let d = spec.vectors.nrows();
    let h = spec.vectors.columns(0, m).into_owned();
    let mc = mass.to_complex();
    let projector = CMatrix::identity(d, d) - &h * (h.adjoint() * mc);
    Ok(SubspaceSplit { h_basis: h, projector })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourantLevel {
    pub m: usize,
    pub skipped: bool,
    /// `β_{m+1}`, the minimum of the Rayleigh quotient over `E_{m+1}`.
    pub beta_next: f64,
    pub min_sampled_e: f64,
    pub rq_at_f_next: f64,
    /// `β_m`, the maximum over `H_m` (absent for `m = 0`).
    pub beta_m: Option<f64>,
    pub max_sampled_h: Option<f64>,
    pub rq_at_f_m: Option<f64>,
    /// `min_sampled_e / β_{m+1} − 1` (should be ≥ −tol).
    pub min_margin: f64,
    /// `1 − max_sampled_h / β_m` (should be ≥ −tol).
    pub max_margin: Option<f64>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourantReport {
    pub trials: usize,
    pub tolerance: f64,
    pub levels: Vec<CourantLevel>,
    pub total_violations: usize,
    pub worst_min_margin: f64,
    pub worst_max_margin: f64,
}

fn random_complex(d: usize, rng: &mut ChaCha8Rng) -> CVector {
    CVector::from_fn(d, |_, _| {
        Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Sample the min characterization over `E_{m+1}` and the max
/// characterization over `H_m` for `m = 0 .. len−1`.
pub fn verify_courant(
    spec: &Spectrum,
    k: &CMatrix,
    mass: &MassMatrix,
    trials: usize,
    seed: u64,
) -> CourantReport {
    verify_courant_levels(spec, k, mass, trials, seed, spec.len().saturating_sub(1))
}

/// As [`verify_courant`], limited to levels `m ≤ max_level`.
pub fn verify_courant_levels(
    spec: &Spectrum,
    k: &CMatrix,
    mass: &MassMatrix,
    trials: usize,
    seed: u64,
    max_level: usize,
) -> CourantReport {
    let tol = 1e-8;
    let d = spec.vectors.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::new();
    let last = max_level.min(spec.len().saturating_sub(1));
    for m in 0..=last {
        if spec.len() < m + 1 {
            break;
        }
        let beta_next = spec.eigenvalues[m];
        let beta_m = (m > 0).then(|| spec.eigenvalues[m - 1]);
        let split = match subspace_split(spec, m, mass) {
            Ok(s) => s,
            Err(_) => {
                levels.push(CourantLevel {
                    m,
                    skipped: true,
                    beta_next,
                    min_sampled_e: f64::NAN,
                    rq_at_f_next: f64::NAN,
                    beta_m,
                    max_sampled_h: None,
                    rq_at_f_m: None,
                    min_margin: f64::NAN,
                    max_margin: None,
                    violations: 0,
                });
                continue;
            }
        };
        let rq = |u: &CVector| rayleigh_quotient(u, k, mass).unwrap_or(f64::NAN);
        let mut violations = 0;
        let mut min_e = f64::INFINITY;
        let mut max_h = f64::NEG_INFINITY;
        for _ in 0..trials {
            let u = &split.projector * random_complex(d, &mut rng);
            let r = rq(&u);
            min_e = min_e.min(r);
            if r < beta_next * (1.0 - tol) {
                violations += 1;
            }
            if m > 0 {
                let c = random_complex(m, &mut rng);
                let r = rq(&(&split.h_basis * c));
                max_h = max_h.max(r);
                if r > beta_m.unwrap() * (1.0 + tol) {
                    violations += 1;
                }
            }
        }
        let rq_next = rq(&spec.vector(m));
        let rq_m = (m > 0).then(|| rq(&spec.vector(m - 1)));
        levels.push(CourantLevel {
            m,
            skipped: false,
            beta_next,
            min_sampled_e: min_e,
            rq_at_f_next: rq_next,
            beta_m,
            max_sampled_h: (m > 0).then_some(max_h),
            rq_at_f_m: rq_m,
            min_margin: min_e / beta_next - 1.0,
            max_margin: beta_m.map(|b| 1.0 - max_h / b),
            violations,
        });
    }
    let total_violations = levels.iter().map(|l| l.violations).sum();
    let worst_min_margin = levels
        .iter()
        .filter(|l| !l.skipped)
        .map(|l| l.min_margin)
        .fold(f64::INFINITY, f64::min);
    let worst_max_margin = levels
        .iter()
        .filter_map(|l| l.max_margin)
        .fold(f64::INFINITY, f64::min);
    CourantReport {
        trials,
        tolerance: tol,
        levels,
        total_violations,
        worst_min_margin,
        worst_max_margin,
    }
}
