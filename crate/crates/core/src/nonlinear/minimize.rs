use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use super::newton::newton_direction;
use super::problem::{energy, gradient, residual_of, ProblemSpec};
use super::CriticalPoint;
use crate::error::{Error, Result};
use crate::{CVector, Complex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Try Newton steps once the residual is below this.
    pub newton_switch: f64,
    pub armijo: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol: 1e-10,
            max_iter: 10_000,
            newton_switch: 1e-3,
            armijo: 1e-4,
        }
    }
}

/// Descent from `u0` to a critical point with residual at most `tol`.
pub fn minimize(spec: &ProblemSpec, u0: &CVector, tol: f64) -> Result<CriticalPoint> {
    let opts = MinimizeOptions {
        tol,
        ..Default::default()
    };
    minimize_with(spec, u0, &opts).map(|(c, _)| c)
}

/// As `minimize`, also returning `J` at every accepted iterate.
///
/// Gradient steps are preconditioned by `K⁻¹` with an Armijo line search;
/// near convergence phase-fixed Newton steps are taken when they do not
/// raise `J`.
pub fn minimize_with(
    spec: &ProblemSpec,
    u0: &CVector,
    opts: &MinimizeOptions,
) -> Result<(CriticalPoint, Vec<f64>)> {
    if u0.len() != spec.dim() {
        return Err(Error::InvalidArgument(format!(
            "start has length {}, expected {}",
            u0.len(),
            spec.dim()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if let Some(&b1) = spec.eigenvalues.first() {
        if spec.beta_inf >= b1 {
            log::warn!(
                "beta_inf = {} is not below beta_1 = {b1}; J need not be bounded below",
                spec.beta_inf
            );
        }
    }
    let chol = Cholesky::new(spec.k.matrix.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("form matrix".into()))?;

    let mut u = u0.clone();
    let mut j = energy(&u, spec);
    let mut trace = vec![j];
    let mut alpha = 1.0;
    for it in 0..opts.max_iter {
        let g = gradient(&u, spec);
        let r = residual_of(&g, spec);
        if r <= opts.tol {
            return Ok((CriticalPoint::from_iterate(u, spec, 0), trace));
        }
        if r < opts.newton_switch {
            if let Some(dir) = newton_direction(spec, &u, &g) {
                let trial = &u + dir;
                let jt = energy(&trial, spec);
                let rt = residual_of(&gradient(&trial, spec), spec);
                if jt <= j + 1e-13 * (1.0 + j.abs()) && rt < r {
                    u = trial;
                    j = jt.min(j);
                    trace.push(j);
                    continue;
                }
            }
        }
        let p = -chol.solve(&g);
        let slope = g.dotc(&p).re;
        if !(slope < 0.0) {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &u + &p * Complex::new(alpha, 0.0);
            let jt = energy(&trial, spec);
            if jt <= j + opts.armijo * alpha * slope {
                u = trial;
                j = jt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            log::debug!("line search stalled at iteration {it}, residual {r:.3e}");
            break;
        }
        trace.push(j);
        alpha = (alpha * 2.0).min(1.0);
    }
    let best = CriticalPoint::from_iterate(u, spec, 0);
    if best.residual <= opts.tol {
        return Ok((best, trace));
    }
    Err(Error::NoConvergence {
        iterations: trace.len() - 1,
        residual: best.residual,
        best: Box::new(best),
    })
}
