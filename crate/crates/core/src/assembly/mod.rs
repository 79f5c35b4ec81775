//! Hermitian matrices of the nonlocal and local magnetic forms, the
//! exterior tail term and the mass matrix, all over interior dofs.
//!
//! Convention: `K[i][j] = ⟨φ_j, φ_i⟩` is linear in the column index, so the
//! discrete norm of `u = Σ u_j φ_j` is `uᴴ K u`.

mod local;
mod nonlocal;
mod pairs;
mod tail;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use crate::{CMatrix, Complex, RMatrix, RVector};

pub use local::{assemble_local_magnetic_form, assemble_mass};
pub use nonlocal::assemble_nonlocal_form;
pub use tail::{assemble_tail, TailKernel};

/// Vector potential `A`, in inverse length units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MagneticPotential {
    Zero,
    Constant { a: Vec<f64> },
    /// `A(x) = B x + a`, `b` given row by row.
    Affine { b: Vec<Vec<f64>>, a: Vec<f64> },
    /// Symmetric gauge of a uniform field: `A(x) = (b/2)(−x₂, x₁)`.
    Landau { b: f64 },
}

impl MagneticPotential {
    pub fn constant(a: Vec<f64>) -> Self {
        MagneticPotential::Constant { a }
    }

    pub fn landau(b: f64) -> Self {
        MagneticPotential::Landau { b }
    }

    pub fn affine(b: Vec<Vec<f64>>, a: Vec<f64>) -> Self {
        MagneticPotential::Affine { b, a }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, MagneticPotential::Zero)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            MagneticPotential::Zero => Ok(()),
            MagneticPotential::Constant { a } => {
                if a.len() != dim || !finite(a) {
                    return bad(format!("constant potential needs {dim} finite components"));
                }
                Ok(())
            }
            MagneticPotential::Affine { b, a } => {
                if a.len() != dim || b.len() != dim || b.iter().any(|r| r.len() != dim) {
                    return bad(format!("affine potential needs a {dim}x{dim} matrix and offset"));
                }
                if !finite(a) || b.iter().any(|r| !finite(r)) {
                    return bad("affine potential has non-finite entries".into());
                }
                Ok(())
            }
            MagneticPotential::Landau { b } => {
                if dim != 2 {
                    return bad("the landau potential is only defined in 2D".into());
                }
                if !b.is_finite() {
                    return bad("landau field strength must be finite".into());
                }
                Ok(())
            }
        }
    }

    /// Evaluate at `x`; components beyond the potential's dimension are 0.
    pub fn eval(&self, x: &Point) -> Point {
        match self {
            MagneticPotential::Zero => Point::zeros(),
            MagneticPotential::Constant { a } => {
                Point::new(a[0], a.get(1).copied().unwrap_or(0.0))
            }
            MagneticPotential::Affine { b, a } => {
                if a.len() == 1 {
                    Point::new(b[0][0] * x.x + a[0], 0.0)
                } else {
                    Point::new(
                        b[0][0] * x.x + b[0][1] * x.y + a[0],
                        b[1][0] * x.x + b[1][1] * x.y + a[1],
                    )
                }
            }
            MagneticPotential::Landau { b } => Point::new(-0.5 * b * x.y, 0.5 * b * x.x),
        }
    }

    /// The potential `−A`.
    pub fn negated(&self) -> Self {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        match self {
            MagneticPotential::Zero => MagneticPotential::Zero,
            MagneticPotential::Constant { a } => MagneticPotential::Constant { a: neg(a) },
            MagneticPotential::Affine { b, a } => MagneticPotential::Affine {
                b: b.iter().map(|r| neg(r)).collect(),
                a: neg(a),
            },
            MagneticPotential::Landau { b } => MagneticPotential::Landau { b: -b },
        }
    }

    /// The potential `A + c` for a constant vector `c`.
    pub fn plus_constant(&self, c: &[f64]) -> Self {
        let add = |a: &[f64]| a.iter().zip(c).map(|(x, y)| x + y).collect::<Vec<_>>();
        match self {
            MagneticPotential::Zero => MagneticPotential::Constant { a: c.to_vec() },
            MagneticPotential::Constant { a } => MagneticPotential::Constant { a: add(a) },
            MagneticPotential::Affine { b, a } => MagneticPotential::Affine {
                b: b.clone(),
                a: add(a),
            },
            MagneticPotential::Landau { b } => MagneticPotential::Affine {
                b: vec![vec![0.0, -0.5 * b], vec![0.5 * b, 0.0]],
                a: c.to_vec(),
            },
        }
    }
}

/// Normalization constant `c_{N,s}` of the fractional Laplacian.
pub fn kernel_constant(dim: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("s = {s} is not in (0, 1)")));
    }
    if !(dim == 1 || dim == 2) {
        return Err(Error::InvalidArgument(format!("dimension {dim} is not supported")));
    }
    let n = dim as f64;
    Ok(s * 4f64.powf(s) * gamma((n + 2.0 * s) / 2.0)
        / (std::f64::consts::PI.powf(n / 2.0) * gamma(1.0 - s)))
}

/// `exp(i (x−y)·A((x+y)/2))`.
pub fn magnetic_phase(x: &Point, y: &Point, a: &MagneticPotential) -> Complex {
    let theta = (x - y).dot(&a.eval(&(0.5 * (x + y))));
    Complex::new(theta.cos(), theta.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelQuadratureConfig {
    /// Minimum Gauss points per axis and element for well separated pairs.
    pub far_order: usize,
    /// Upper bound on the adaptive far-field order.
    pub max_far_order: usize,
    /// Target relative accuracy driving the far-field order.
    pub far_tol: f64,
    /// Subdivision levels for disjoint pairs that are close relative to
    /// their size.
    pub near_levels: usize,
    /// Points per axis in the singular rules for touching or identical pairs.
    pub singular_order: usize,
    /// Points per axis for the tail integral.
    pub tail_order: usize,
    pub include_tail: bool,
    /// Run the reduction on the calling thread only. The chunked reduction
    /// is ordered, so results are bit-identical either way.
    pub sequential: bool,
}

impl Default for KernelQuadratureConfig {
    fn default() -> Self {
        Self {
            far_order: 3,
            max_far_order: 12,
            far_tol: 1e-10,
            near_levels: 4,
            singular_order: 7,
            tail_order: 8,
            include_tail: true,
            sequential: false,
        }
    }
}

impl KernelQuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.far_order == 0
            || self.max_far_order < self.far_order
            || self.singular_order == 0
            || self.tail_order == 0
            || self.near_levels == 0
        {
            return Err(Error::InvalidArgument(format!("invalid quadrature config {self:?}")));
        }
        if !(self.far_tol > 0.0 && self.far_tol < 1.0) {
            return Err(Error::InvalidArgument("far_tol must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormKind {
    Nonlocal { s: f64 },
    Local,
    /// A matrix supplied directly by the caller.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormMetadata {
    pub kind: FormKind,
    pub potential: MagneticPotential,
    pub quadrature: Option<KernelQuadratureConfig>,
    pub tail_included: bool,
    /// Relative change of a sample singular block under order increase.
    pub estimated_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormMatrix {
    pub matrix: CMatrix,
    pub meta: FormMetadata,
}

impl FormMatrix {
    /// Wrap a caller-supplied matrix (for small hand-built problems).
    pub fn from_raw(matrix: CMatrix) -> Self {
        FormMatrix {
            matrix,
            meta: FormMetadata {
                kind: FormKind::Raw,
                potential: MagneticPotential::Zero,
                quadrature: None,
                tail_included: false,
                estimated_defect: None,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |K − Kᴴ|`.
    pub fn hermitian_defect(&self) -> f64 {
        let k = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                worst = worst.max((k[(i, j)] - k[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn to_json(&self) -> serde_json::Value {
        let d = self.dim();
        let plane = |f: fn(&Complex) -> f64| {
            (0..d)
                .map(|i| (0..d).map(|j| f(&self.matrix[(i, j)])).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        serde_json::json!({
            "d": d,
            "real": plane(|z| z.re),
            "imag": plane(|z| z.im),
            "metadata": self.meta,
        })
    }

    /// Row-major little-endian f64: the real plane, then the imaginary plane.
    pub fn to_binary(&self) -> Vec<u8> {
        let d = self.dim();
        let mut out = Vec::with_capacity(16 * d * d);
        for part in [0, 1] {
            for i in 0..d {
                for j in 0..d {
                    let z = self.matrix[(i, j)];
                    let v = if part == 0 { z.re } else { z.im };
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_binary(bytes: &[u8], meta: FormMetadata) -> Result<Self> {
        let n = bytes.len() / 16;
        let d = (n as f64).sqrt().round() as usize;
        if d * d * 16 != bytes.len() {
            return Err(Error::InvalidArgument("binary matrix has wrong length".into()));
        }
        let read = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
        let matrix = CMatrix::from_fn(d, d, |i, j| {
            Complex::new(read(i * d + j), read(d * d + i * d + j))
        });
        Ok(Self { matrix, meta })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix {
    pub matrix: RMatrix,
    /// `∫ φ_i`, the lumped mass of each interior dof.
    pub lumped: RVector,
}

impl MassMatrix {
    /// Wrap a caller-supplied SPD matrix; the lumped weights are its row sums.
    pub fn from_raw(matrix: RMatrix) -> Self {
        let lumped = RVector::from_iterator(matrix.nrows(), matrix.row_iter().map(|r| r.sum()));
        MassMatrix { matrix, lumped }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_complex(&self) -> CMatrix {
        self.matrix.map(|x| Complex::new(x, 0.0))
    }
}

pub(crate) fn check_order(dim: usize, s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("s = {s} is not in (0, 1)")));
    }
    if (dim as f64) <= 2.0 * s {
        return Err(Error::Precondition(format!(
            "N > 2s violated (N = {dim}, s = {s})"
        )));
    }
    Ok(())
}

pub(crate) fn check_mesh(mesh: &Mesh) -> Result<()> {
    mesh.validate()?;
    if mesh.num_dofs() == 0 {
        return Err(Error::InvalidArgument("mesh has no interior degrees of freedom".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kernel_constant_closed_forms() {
        assert!((kernel_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((kernel_constant(2, 0.5).unwrap() - 0.5 / PI).abs() < 1e-15);
        assert!(kernel_constant(1, 1.0).is_err());
        assert!(kernel_constant(2, 0.0).is_err());
    }

    #[test]
    fn phase_examples() {
        let x = Point::new(1.0, 0.0);
        let y = Point::new(0.0, 0.0);
        let one = Complex::new(1.0, 0.0);
        assert_eq!(magnetic_phase(&x, &y, &MagneticPotential::Zero), one);
        assert_eq!(magnetic_phase(&x, &x, &MagneticPotential::landau(3.0)), one);
        assert_eq!(magnetic_phase(&x, &y, &MagneticPotential::landau(2.0)), one);
        let z = magnetic_phase(&x, &Point::new(0.3, -0.8), &MagneticPotential::landau(2.0));
        assert!((z.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negated_potential_conjugates_phase_exactly() {
        let pots = [
            MagneticPotential::landau(1.7),
            MagneticPotential::constant(vec![0.3, -2.0]),
            MagneticPotential::affine(vec![vec![0.1, 2.0], vec![-0.4, 0.0]], vec![1.0, 0.5]),
        ];
        let x = Point::new(0.12, -0.9);
        let y = Point::new(-0.77, 0.31);
        for a in pots {
            let z = magnetic_phase(&x, &y, &a);
            assert_eq!(magnetic_phase(&x, &y, &a.negated()), z.conj());
        }
    }

    #[test]
    fn plus_constant_shifts() {
        let a = MagneticPotential::landau(2.0).plus_constant(&[1.0, 0.0]);
        let x = Point::new(0.3, 0.4);
        let expect = MagneticPotential::landau(2.0).eval(&x) + Point::new(1.0, 0.0);
        assert!((a.eval(&x) - expect).norm() < 1e-15);
    }

    #[test]
    fn landau_rejected_in_1d() {
        assert!(MagneticPotential::landau(1.0).validate(1).is_err());
        assert!(MagneticPotential::constant(vec![1.0]).validate(1).is_ok());
        assert!(MagneticPotential::constant(vec![1.0]).validate(2).is_err());
    }
}
