//! The energy `J`, its differential, and critical-point search.

mod linking;
mod minimize;
mod multistart;
mod newton;
mod nonlinearity;
mod problem;
mod validate;

use serde::{Deserialize, Serialize};

use crate::{CVector, Complex};

pub use linking::{linking_diagnostics, LinkingReport};
pub use minimize::{minimize, minimize_with, MinimizeOptions};
pub use multistart::multistart_from_eigenspaces;
pub use newton::{newton_deflated, NewtonOptions};
pub use nonlinearity::{f_eval, F_eval, Nonlinearity, NonlinearityFamily};
pub use problem::{energy, gradient, orbit_distance, residual, ProblemSpec, RESONANCE_GAP};
pub use validate::{default_t_grid, validate_nonlinearity, EpsilonBound, NonlinearityReport};

/// `‖u‖_M` below which a critical point counts as trivial.
pub const TRIVIAL_NORM: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    #[serde(with = "complex_vec")]
    pub u: CVector,
    pub energy: f64,
    pub residual: f64,
    pub trivial: bool,
    /// Index of the start that produced this point.
    pub start: usize,
    pub norm_m: f64,
    pub norm_k: f64,
    /// `None` for the trivial solution.
    pub rayleigh: Option<f64>,
}

impl CriticalPoint {
    pub(crate) fn from_iterate(u: CVector, spec: &ProblemSpec, start: usize) -> Self {
        let g = gradient(&u, spec);
        let norm_m = spec.mass_norm(&u);
        let norm_k = spec.form_norm(&u);
        CriticalPoint {
            energy: energy(&u, spec),
            residual: problem::residual_of(&g, spec),
            trivial: norm_m < TRIVIAL_NORM,
            start,
            norm_m,
            norm_k,
            rayleigh: (norm_m >= TRIVIAL_NORM).then(|| norm_k * norm_k / (norm_m * norm_m)),
            u,
        }
    }
}

/// Critical points, one representative per phase orbit `{e^{iθ}u}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub solutions: Vec<CriticalPoint>,
    /// Relative dedup tolerance; two points are the same orbit when their
    /// orbit distance is at most `dedup_tol·max(‖u‖_M, ‖v‖_M, 1)`.
    pub dedup_tol: f64,
}

impl SolutionSet {
    pub fn new(dedup_tol: f64) -> Self {
        SolutionSet {
            solutions: Vec::new(),
            dedup_tol,
        }
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.solutions.iter().filter(|c| !c.trivial)
    }

    pub fn nontrivial_count(&self) -> usize {
        self.nontrivial().count()
    }

    pub fn has_trivial(&self) -> bool {
        self.solutions.iter().any(|c| c.trivial)
    }

    /// Whether `u` lies on the orbit of a stored representative.
    pub fn contains(&self, u: &CVector, spec: &ProblemSpec) -> bool {
        let nu = spec.mass_norm(u);
        self.solutions.iter().any(|c| {
            let tol = self.dedup_tol * nu.max(c.norm_m).max(1.0);
            problem::orbit_distance_with(u, &c.u, spec.mass_complex()) <= tol
        })
    }

    /// Insert unless already present. Returns whether it was new.
    pub fn insert(&mut self, c: CriticalPoint, spec: &ProblemSpec) -> bool {
        if self.contains(&c.u, spec) {
            return false;
        }
        self.solutions.push(c);
        true
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("solution set serializes")
    }

    /// One line per solution, without coefficients.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("index,kind,energy,residual,norm_m,norm_k,rayleigh,start\n");
        for (i, c) in self.solutions.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.12e},{:.3e},{:.12e},{:.12e},{},{}\n",
                i,
                if c.trivial { "trivial" } else { "nontrivial" },
                c.energy,
                c.residual,
                c.norm_m,
                c.norm_k,
                c.rayleigh.map(|r| format!("{r:.12e}")).unwrap_or_default(),
                c.start
            ));
        }
        out
    }
}

/// Complex vectors as `{"re": [...], "im": [...]}`.
pub(crate) mod complex_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Planes {
        re: Vec<f64>,
        im: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(u: &CVector, s: S) -> Result<S::Ok, S::Error> {
        Planes {
            re: u.iter().map(|z| z.re).collect(),
            im: u.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let p = Planes::deserialize(d)?;
        if p.re.len() != p.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        Ok(CVector::from_iterator(
            p.re.len(),
            p.re.iter().zip(&p.im).map(|(a, b)| Complex::new(*a, *b)),
        ))
    }
}

#[cfg(test)]
mod tests;
