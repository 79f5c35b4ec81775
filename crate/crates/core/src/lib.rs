//! Galerkin discretization of the fractional magnetic Laplacian
//! `(-Δ)^s_A` on bounded domains of the line and the plane, with the
//! exterior condition `u = 0` outside the domain.
//!
//! The crate assembles the nonlocal magnetic Dirichlet form (and its local
//! `s = 1` counterpart), solves the generalized Hermitian eigenproblem
//! `K f = β M f`, and computes critical points of the asymptotically linear
//! energy
//!
//! ```text
//! J(u) = ½‖u‖² − (β∞/2)|u|₂² − ½∫ F(|u|²)
//! ```
//!
//! by descent, deflated Newton and eigenspace multistart.
//!
//! ```no_run
//! use fracmag_core::prelude::*;
//!
//! let mesh = build_mesh(&Domain::interval(-1.0, 1.0), 32)?;
//! let k = assemble_nonlocal_form(&mesh, 0.4, &MagneticPotential::constant(vec![1.0]),
//!                                &KernelQuadratureConfig::default())?;
//! let m = assemble_mass(&mesh);
//! let spectrum = solve_eigs(&k, &m, 4)?;
//! println!("beta_1 = {}", spectrum.eigenvalues[0]);
//! # Ok::<(), fracmag_core::Error>(())
//! ```

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod nonlinear;
pub mod oracle;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};

pub type Complex = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<Complex>;
pub type CVector = nalgebra::DVector<Complex>;
pub type RMatrix = nalgebra::DMatrix<f64>;
pub type RVector = nalgebra::DVector<f64>;

pub mod prelude {
    pub use crate::assembly::{
        assemble_local_magnetic_form, assemble_mass, assemble_nonlocal_form, assemble_tail,
        kernel_constant, magnetic_phase, FormKind, FormMatrix, KernelQuadratureConfig,
        MagneticPotential, MassMatrix,
    };
    pub use crate::geometry::{build_mesh, interior_dof_map, Domain, Mesh};
    pub use crate::nonlinear::{
        energy, gradient, linking_diagnostics, minimize, multistart_from_eigenspaces,
        newton_deflated, orbit_distance, residual, validate_nonlinearity, CriticalPoint,
        NewtonOptions, Nonlinearity, NonlinearityFamily, ProblemSpec, SolutionSet,
    };
    pub use crate::spectral::{rayleigh_quotient, solve_eigs, subspace_split, verify_courant, Spectrum};
    pub use crate::{CMatrix, CVector, Complex, Error, Result};
}
