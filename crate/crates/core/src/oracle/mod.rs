//! Brute-force references for certifying the main code paths.

mod dense;
mod eig;
mod fd;
mod gk;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dense::dense_assembly_reference;
pub use eig::eig_reference;
pub use fd::{fd_gradient, fd_gradient_with_step};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Relative tolerance of the adaptive integrals.
    pub tol: f64,
    /// Radius of the excised diagonal band, relative to the mesh size.
    pub eps_sing: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Largest accepted relative change under halving of `eps_sing`.
    pub certificate_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            tol: 1e-11,
            eps_sing: 1e-8,
            fd_step: 1e-6,
            certificate_tol: 1e-5,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol", self.tol),
            ("eps_sing", self.eps_sing),
            ("fd_step", self.fd_step),
            ("certificate_tol", self.certificate_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("oracle {name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}
