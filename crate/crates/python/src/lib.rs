//! Python bindings: meshes, assembled forms, spectra and the nonlinear
//! solvers. Vectors cross the boundary as lists of Python `complex`.

use fracmag_core::assembly::{FormMatrix, MagneticPotential as CorePotential, MassMatrix};
use fracmag_core::nonlinear::{
    self as nl, CriticalPoint as CoreCritical, NewtonOptions, Nonlinearity as CoreNonlinearity,
    ProblemSpec,
};
use fracmag_core::prelude::{
    assemble_local_magnetic_form, assemble_mass, assemble_nonlocal_form, build_mesh, solve_eigs,
    Domain, KernelQuadratureConfig, Mesh as CoreMesh, Spectrum as CoreSpectrum,
};
use fracmag_core::{CVector, Complex, Error};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(fracmag_py, FracmagError, PyException);
create_exception!(fracmag_py, ResonanceError, FracmagError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Resonant { .. } => ResonanceError::new_err(e.to_string()),
        Error::InvalidArgument(_) | Error::InvalidDomain(_) => PyValueError::new_err(e.to_string()),
        _ => FracmagError::new_err(e.to_string()),
    }
}

fn vector(u: Vec<Complex>, d: usize) -> PyResult<CVector> {
    if u.len() != d {
        return Err(PyValueError::new_err(format!("expected {d} entries, got {}", u.len())));
    }
    Ok(CVector::from_vec(u))
}

#[pyclass(frozen)]
struct Mesh(CoreMesh);

#[pymethods]
impl Mesh {
    #[staticmethod]
    fn interval(a: f64, b: f64, resolution: usize) -> PyResult<Self> {
        build_mesh(&Domain::interval(a, b), resolution).map(Mesh).map_err(to_py)
    }

    #[staticmethod]
    fn rectangle(x: (f64, f64), y: (f64, f64), resolution: usize) -> PyResult<Self> {
        build_mesh(&Domain::rectangle([x.0, x.1], [y.0, y.1]), resolution)
            .map(Mesh)
            .map_err(to_py)
    }

    #[staticmethod]
    fn disk(center: (f64, f64), radius: f64, resolution: usize) -> PyResult<Self> {
        build_mesh(&Domain::disk([center.0, center.1], radius), resolution)
            .map(Mesh)
            .map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[getter]
    fn num_dofs(&self) -> usize {
        self.0.num_dofs()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }

    fn __repr__(&self) -> String {
        format!("Mesh(dim={}, num_dofs={}, h={:.4})", self.0.dim, self.0.num_dofs(), self.0.h)
    }
}

#[pyclass(frozen)]
struct MagneticPotential(CorePotential);

#[pymethods]
impl MagneticPotential {
    #[staticmethod]
    fn zero() -> Self {
        MagneticPotential(CorePotential::Zero)
    }

    #[staticmethod]
    fn constant(a: Vec<f64>) -> Self {
        MagneticPotential(CorePotential::constant(a))
    }

    /// Symmetric gauge of a uniform field `b` (2D only).
    #[staticmethod]
    fn landau(b: f64) -> Self {
        MagneticPotential(CorePotential::landau(b))
    }

    /// `A(x) = B x + a`.
    #[staticmethod]
    fn affine(b: Vec<Vec<f64>>, a: Vec<f64>) -> Self {
        MagneticPotential(CorePotential::affine(b, a))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(frozen)]
struct Form(FormMatrix);

#[pymethods]
impl Form {
    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn hermitian_defect(&self) -> f64 {
        self.0.hermitian_defect()
    }

    /// Row-major nested lists.
    fn to_list(&self) -> Vec<Vec<Complex>> {
        let m = &self.0.matrix;
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }
}

#[pyclass(frozen)]
struct Mass(MassMatrix);

#[pymethods]
impl Mass {
    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        let m = &self.0.matrix;
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }
}

/// Nonlocal form `K` for `(−Δ)^s_A`, exterior tail included.
#[pyfunction]
#[pyo3(signature = (mesh, s, potential = None, sequential = false))]
fn assemble_nonlocal(mesh: &Mesh, s: f64, potential: Option<&MagneticPotential>, sequential: bool) -> PyResult<Form> {
    let a = potential.map_or(CorePotential::Zero, |p| p.0.clone());
    let cfg = KernelQuadratureConfig { sequential, ..Default::default() };
    assemble_nonlocal_form(&mesh.0, s, &a, &cfg).map(Form).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (mesh, potential = None))]
fn assemble_local(mesh: &Mesh, potential: Option<&MagneticPotential>) -> PyResult<Form> {
    let a = potential.map_or(CorePotential::Zero, |p| p.0.clone());
    assemble_local_magnetic_form(&mesh.0, &a).map(Form).map_err(to_py)
}

#[pyfunction(name = "assemble_mass")]
fn mass(mesh: &Mesh) -> Mass {
    Mass(assemble_mass(&mesh.0))
}

#[pyclass(frozen)]
struct Spectrum(CoreSpectrum);

#[pymethods]
impl Spectrum {
    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues.clone()
    }

    /// `f_m` for 0-based `m`, normalized in the mass inner product.
    fn vector(&self, m: usize) -> PyResult<Vec<Complex>> {
        if m >= self.0.len() {
            return Err(PyValueError::new_err(format!("index {m} out of range")));
        }
        Ok(self.0.vector(m).iter().copied().collect())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }
}

#[pyfunction]
fn eigs(k: &Form, m: &Mass, m_max: usize) -> PyResult<Spectrum> {
    solve_eigs(&k.0, &m.0, m_max).map(Spectrum).map_err(to_py)
}

#[pyclass(frozen)]
struct Nonlinearity(CoreNonlinearity);

#[pymethods]
impl Nonlinearity {
    /// `β₀/(1+t)`.
    #[staticmethod]
    fn rational(beta0: f64) -> Self {
        Nonlinearity(CoreNonlinearity::rational(beta0))
    }

    /// `β₀ e^{−t}`.
    #[staticmethod]
    fn exponential(beta0: f64) -> Self {
        Nonlinearity(CoreNonlinearity::exponential(beta0))
    }

    #[staticmethod]
    fn zero() -> Self {
        Nonlinearity(CoreNonlinearity::zero())
    }

    fn f(&self, t: f64) -> PyResult<f64> {
        nl::f_eval(&self.0, t).map_err(to_py)
    }

    #[pyo3(name = "F")]
    fn antiderivative(&self, t: f64) -> PyResult<f64> {
        nl::F_eval(&self.0, t).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(frozen)]
struct CriticalPoint(CoreCritical);

#[pymethods]
impl CriticalPoint {
    #[getter]
    fn u(&self) -> Vec<Complex> {
        self.0.u.iter().copied().collect()
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.0.energy
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.0.residual
    }

    #[getter]
    fn trivial(&self) -> bool {
        self.0.trivial
    }

    #[getter]
    fn norm_m(&self) -> f64 {
        self.0.norm_m
    }

    fn __repr__(&self) -> String {
        format!(
            "CriticalPoint(energy={:.6e}, residual={:.2e}, trivial={})",
            self.0.energy, self.0.residual, self.0.trivial
        )
    }
}

/// Energy functional `J` with nonresonance checked against `spectrum`.
#[pyclass(frozen)]
struct Problem {
    spec: ProblemSpec,
}

#[pymethods]
impl Problem {
    #[new]
    fn new(k: &Form, m: &Mass, beta_inf: f64, nonlinearity: &Nonlinearity, spectrum: &Spectrum) -> PyResult<Self> {
        let spec = ProblemSpec::new(&k.0, &m.0, beta_inf, nonlinearity.0, &spectrum.0).map_err(to_py)?;
        Ok(Problem { spec })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn energy(&self, u: Vec<Complex>) -> PyResult<f64> {
        Ok(nl::energy(&vector(u, self.spec.dim())?, &self.spec))
    }

    fn gradient(&self, u: Vec<Complex>) -> PyResult<Vec<Complex>> {
        let g = nl::gradient(&vector(u, self.spec.dim())?, &self.spec);
        Ok(g.iter().copied().collect())
    }

    fn residual(&self, u: Vec<Complex>) -> PyResult<f64> {
        Ok(nl::residual(&vector(u, self.spec.dim())?, &self.spec))
    }

    fn minimize(&self, u0: Vec<Complex>, tol: f64) -> PyResult<CriticalPoint> {
        nl::minimize(&self.spec, &vector(u0, self.spec.dim())?, tol)
            .map(CriticalPoint)
            .map_err(to_py)
    }

    /// Linking levels as a JSON string.
    #[pyo3(signature = (spectrum, h, k, rho, samples = 200, seed = 0))]
    fn linking(&self, spectrum: &Spectrum, h: usize, k: usize, rho: f64, samples: usize, seed: u64) -> PyResult<String> {
        let r = nl::linking_diagnostics(&self.spec, &spectrum.0, h, k, rho, samples, seed).map_err(to_py)?;
        Ok(serde_json::to_string(&r).expect("report serializes"))
    }

    /// Deflated Newton from the eigenspace multistart over `f_h .. f_k`
    /// (1-based). Returns the distinct critical points, one per phase orbit.
    #[pyo3(signature = (spectrum, h, k, rho, extra_random = 6, seed = 0, tol = 1e-10))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        py: Python<'_>,
        spectrum: &Spectrum,
        h: usize,
        k: usize,
        rho: f64,
        extra_random: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<Vec<CriticalPoint>> {
        let starts = nl::multistart_from_eigenspaces(&spectrum.0, h, k, rho, extra_random, seed).map_err(to_py)?;
        let opts = NewtonOptions { tol, seed, ..Default::default() };
        let set = py.detach(|| nl::newton_deflated(&self.spec, &starts, &opts));
        Ok(set.solutions.into_iter().map(CriticalPoint).collect())
    }
}

#[pymodule]
pub fn fracmag_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mesh>()?;
    m.add_class::<MagneticPotential>()?;
    m.add_class::<Form>()?;
    m.add_class::<Mass>()?;
    m.add_class::<Spectrum>()?;
    m.add_class::<Nonlinearity>()?;
    m.add_class::<CriticalPoint>()?;
    m.add_class::<Problem>()?;
    m.add_function(wrap_pyfunction!(assemble_nonlocal, m)?)?;
    m.add_function(wrap_pyfunction!(assemble_local, m)?)?;
    m.add_function(wrap_pyfunction!(mass, m)?)?;
    m.add_function(wrap_pyfunction!(eigs, m)?)?;
    m.add("FracmagError", m.py().get_type::<FracmagError>())?;
    m.add("ResonanceError", m.py().get_type::<ResonanceError>())?;
    Ok(())
}
