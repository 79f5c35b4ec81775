use super::OracleConfig;
use crate::nonlinear::{energy, ProblemSpec};
use crate::{CVector, Complex};

/// Central differences of `energy` along every real coordinate, returned as
/// the covector `∂J/∂(Re u_i) + i ∂J/∂(Im u_i)`, which pairs with a
/// direction `φ` as `Re(φᴴ g)`.
pub fn fd_gradient(spec: &ProblemSpec, u: &CVector, cfg: &OracleConfig) -> CVector {
    let scale = u.iter().map(|z| z.norm()).fold(1.0, f64::max);
    fd_gradient_with_step(spec, u, cfg.fd_step * scale)
}

/// `fd_gradient` with an absolute step.
pub fn fd_gradient_with_step(spec: &ProblemSpec, u: &CVector, step: f64) -> CVector {
    let mut g = CVector::zeros(u.len());
    let mut w = u.clone();
    for i in 0..u.len() {
        let mut parts = [0.0; 2];
        for (p, dir) in [Complex::new(step, 0.0), Complex::new(0.0, step)].iter().enumerate() {
            w[i] = u[i] + dir;
            let plus = energy(&w, spec);
            w[i] = u[i] - dir;
            let minus = energy(&w, spec);
            w[i] = u[i];
            parts[p] = (plus - minus) / (2.0 * step);
        }
        g[i] = Complex::new(parts[0], parts[1]);
    }
    g
}
