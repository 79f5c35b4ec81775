use nalgebra::Cholesky;

use super::Nonlinearity;
use crate::assembly::{FormMatrix, MassMatrix};
use crate::error::{Error, Result};
use crate::spectral::Spectrum;
use crate::{CMatrix, CVector, Complex, RMatrix, RVector};

/// Relative gap required between `β∞` and every computed eigenvalue.
pub const RESONANCE_GAP: f64 = 1e-6;

/// Discrete problem `K u − β∞ M u − W(u) u = 0`, where `W(u)` is diagonal
/// with entries `w_i f(|u_i|²)` and `w_i` are the lumped masses, optionally
/// multiplied by a nodal spatial weight.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub k: FormMatrix,
    pub m: MassMatrix,
    pub beta_inf: f64,
    pub nonlinearity: Nonlinearity,
    /// Nodal weights of the F-integral.
    pub weights: RVector,
    /// Eigenvalues known when the problem was built, smallest first.
    pub eigenvalues: Vec<f64>,
    mass_chol: Cholesky<f64, nalgebra::Dyn>,
    mc: CMatrix,
}

impl ProblemSpec {
    /// Build a problem, rejecting `β∞` within `RESONANCE_GAP` (relative) of
    /// an eigenvalue of `spectrum`.
    pub fn new(
        k: &FormMatrix,
        m: &MassMatrix,
        beta_inf: f64,
        nonlinearity: Nonlinearity,
        spectrum: &Spectrum,
    ) -> Result<Self> {
        if !beta_inf.is_finite() {
            return Err(Error::InvalidArgument(format!("beta_inf = {beta_inf}")));
        }
        for (i, &b) in spectrum.eigenvalues.iter().enumerate() {
            if (beta_inf - b).abs() <= RESONANCE_GAP * b.abs() {
                return Err(Error::Resonant {
                    beta_inf,
                    index: i + 1,
                    eigenvalue: b,
                });
            }
        }
        let top = spectrum.next_eigenvalue.unwrap_or(f64::INFINITY);
        if beta_inf >= top * (1.0 - RESONANCE_GAP) {
            log::warn!(
                "beta_inf = {beta_inf} lies above the computed eigenvalues; nonresonance is not checked there"
            );
        }
        Self::build(k, m, beta_inf, nonlinearity, spectrum.eigenvalues.clone())
    }

    /// Skip the nonresonance guard. Only for tests of the resonant case.
    #[doc(hidden)]
    pub fn new_resonant_unchecked(
        k: &FormMatrix,
        m: &MassMatrix,
        beta_inf: f64,
        nonlinearity: Nonlinearity,
        spectrum: &Spectrum,
    ) -> Result<Self> {
        Self::build(k, m, beta_inf, nonlinearity, spectrum.eigenvalues.clone())
    }

    fn build(
        k: &FormMatrix,
        m: &MassMatrix,
        beta_inf: f64,
        nonlinearity: Nonlinearity,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        let d = k.dim();
        if m.dim() != d {
            return Err(Error::InvalidArgument(format!(
                "K is {d}x{d} but M is {0}x{0}",
                m.dim()
            )));
        }
        if !nonlinearity.beta0.is_finite() {
            return Err(Error::InvalidArgument("beta0 must be finite".into()));
        }
        let mass_chol = Cholesky::new(m.matrix.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?;
        Ok(ProblemSpec {
            k: k.clone(),
            m: m.clone(),
            beta_inf,
            nonlinearity,
            weights: m.lumped.clone(),
            eigenvalues,
            mass_chol,
            mc: m.to_complex(),
        })
    }

    /// Multiply the nodal weights by a spatial factor `m(x_i)`.
    pub fn with_spatial_weight(mut self, factor: &[f64]) -> Result<Self> {
        if factor.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "spatial weight has {} entries, expected {}",
                factor.len(),
                self.dim()
            )));
        }
        if factor.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("spatial weight must be finite".into()));
        }
        for (w, f) in self.weights.iter_mut().zip(factor) {
            *w *= f;
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub(crate) fn mass_complex(&self) -> &CMatrix {
        &self.mc
    }

    /// `M⁻¹ v` for complex `v`.
    pub(crate) fn mass_solve(&self, v: &CVector) -> CVector {
        let re = self.mass_chol.solve(&v.map(|z| z.re));
        let im = self.mass_chol.solve(&v.map(|z| z.im));
        CVector::from_iterator(v.len(), re.iter().zip(im.iter()).map(|(a, b)| Complex::new(*a, *b)))
    }

    /// `‖u‖_M`.
    pub fn mass_norm(&self, u: &CVector) -> f64 {
        u.dotc(&(&self.mc * u)).re.max(0.0).sqrt()
    }

    /// `‖u‖_K`.
    pub fn form_norm(&self, u: &CVector) -> f64 {
        u.dotc(&(&self.k.matrix * u)).re.max(0.0).sqrt()
    }

    /// Real Hessian of `J` in the coordinates `(Re u, Im u)`.
    pub fn hessian(&self, u: &CVector) -> RMatrix {
        let d = self.dim();
        let nl = &self.nonlinearity;
        let mut h = RMatrix::zeros(2 * d, 2 * d);
        for j in 0..d {
            for i in 0..d {
                let l = self.k.matrix[(i, j)] - self.beta_inf * self.m.matrix[(i, j)];
                h[(i, j)] = l.re;
                h[(i + d, j + d)] = l.re;
                h[(i + d, j)] = l.im;
                h[(i, j + d)] = -l.im;
            }
        }
        for i in 0..d {
            let t = u[i].norm_sqr();
            let (a, b) = (u[i].re, u[i].im);
            let w = self.weights[i];
            let f = w * nl.f(t);
            let c = 2.0 * w * nl.df(t);
            h[(i, i)] -= f + c * a * a;
            h[(i + d, i + d)] -= f + c * b * b;
            h[(i, i + d)] -= c * a * b;
            h[(i + d, i)] -= c * a * b;
        }
        h
    }
}

/// `J(u) = ½uᴴKu − (β∞/2)uᴴMu − ½Σ w_i F(|u_i|²)`.
pub fn energy(u: &CVector, spec: &ProblemSpec) -> f64 {
    let ku = u.dotc(&(&spec.k.matrix * u)).re;
    let mu = u.dotc(&(spec.mass_complex() * u)).re;
    let nl: f64 = u
        .iter()
        .zip(spec.weights.iter())
        .map(|(z, w)| w * spec.nonlinearity.F(z.norm_sqr()))
        .sum();
    0.5 * ku - 0.5 * spec.beta_inf * mu - 0.5 * nl
}

/// `g(u) = Ku − β∞Mu − W(u)u`; the differential of `J` is `φ ↦ Re(φᴴg)`.
pub fn gradient(u: &CVector, spec: &ProblemSpec) -> CVector {
    let mut g = &spec.k.matrix * u - spec.mass_complex() * u * Complex::new(spec.beta_inf, 0.0);
    for i in 0..u.len() {
        g[i] -= u[i] * (spec.weights[i] * spec.nonlinearity.f(u[i].norm_sqr()));
    }
    g
}

/// `sqrt(gᴴ M⁻¹ g)`.
pub fn residual(u: &CVector, spec: &ProblemSpec) -> f64 {
    residual_of(&gradient(u, spec), spec)
}

pub(crate) fn residual_of(g: &CVector, spec: &ProblemSpec) -> f64 {
    if g.iter().all(|z| *z == Complex::new(0.0, 0.0)) {
        return 0.0;
    }
    g.dotc(&spec.mass_solve(g)).re.max(0.0).sqrt()
}

/// `min_θ ‖u − e^{iθ}v‖_M`, attained at `θ = arg(vᴴMu)`.
pub fn orbit_distance(u: &CVector, v: &CVector, m: &MassMatrix) -> f64 {
    let mc = m.to_complex();
    orbit_distance_with(u, v, &mc)
}

pub(crate) fn orbit_distance_with(u: &CVector, v: &CVector, mc: &CMatrix) -> f64 {
    let mu = mc * u;
    let uu = u.dotc(&mu).re;
    let vv = v.dotc(&(mc * v)).re;
    let z = v.dotc(&mu);
    (uu + vv - 2.0 * z.norm()).max(0.0).sqrt()
}
