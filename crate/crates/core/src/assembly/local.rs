use super::nonlocal::hermitize_from_upper;
use super::{check_mesh, FormKind, FormMatrix, FormMetadata, MagneticPotential, MassMatrix};
use crate::error::Result;
use crate::geometry::{Mesh, Point};
use crate::quadrature::{gauss_legendre, triangle_rule};
use crate::{CMatrix, Complex, RMatrix, RVector};

/// Points per axis for the local form; exact for affine potentials.
const LOCAL_ORDER: usize = 4;

/// Hat function gradients on element `e`, one per vertex.
fn hat_gradients(p: &[Point]) -> Vec<Point> {
    if p.len() == 2 {
        let h = p[1].x - p[0].x;
        vec![Point::new(-1.0 / h, 0.0), Point::new(1.0 / h, 0.0)]
    } else {
        let det = (p[1] - p[0]).perp(&(p[2] - p[0]));
        (0..3)
            .map(|k| {
                let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                // rotate the opposite edge
                Point::new(a.y - b.y, b.x - a.x) / det
            })
            .collect()
    }
}

/// Reference rule as (barycentrics, weight summing to the element measure).
fn element_rule(mesh: &Mesh, e: usize, order: usize) -> Vec<([f64; 3], f64)> {
    let m = mesh.element_measure(e);
    if mesh.dim == 1 {
        gauss_legendre(order)
            .iter()
            .map(|(t, w)| ([1.0 - t, t, 0.0], w * m))
            .collect()
    } else {
        triangle_rule(order)
            .into_iter()
            .map(|(x, w)| ([1.0 - x[0] - x[1], x[0], x[1]], 2.0 * w * m))
            .collect()
    }
}

/// Local magnetic form `∫ conj(∇φ_i − iAφ_i)·(∇φ_j − iAφ_j)`.
pub fn assemble_local_magnetic_form(mesh: &Mesh, potential: &MagneticPotential) -> Result<FormMatrix> {
    check_mesh(mesh)?;
    potential.validate(mesh.dim)?;
    let d = mesh.num_dofs();
    let mut k = CMatrix::zeros(d, d);
    for (e, el) in mesh.elements.iter().enumerate() {
        let dofs: Vec<Option<usize>> = el.iter().map(|&n| mesh.dof(n)).collect();
        if dofs.iter().all(|x| x.is_none()) {
            continue;
        }
        let p: Vec<Point> = el.iter().map(|&n| mesh.nodes[n]).collect();
        let g = hat_gradients(&p);
        for (l, w) in element_rule(mesh, e, LOCAL_ORDER) {
            let x = p.iter().zip(&l).map(|(v, c)| v * *c).sum::<Point>();
            let a = potential.eval(&x);
            let a2 = a.norm_squared();
            for i in 0..el.len() {
                let Some(pi) = dofs[i] else { continue };
                for j in 0..el.len() {
                    let Some(pj) = dofs[j] else { continue };
                    if pi > pj {
                        continue;
                    }
                    // (g_i + iAφ_i)·(g_j − iAφ_j)
                    let re = g[i].dot(&g[j]) + a2 * l[i] * l[j];
                    let im = l[i] * a.dot(&g[j]) - l[j] * a.dot(&g[i]);
                    k[(pi, pj)] += Complex::new(re, im) * w;
                }
            }
        }
    }
    hermitize_from_upper(&mut k);
    Ok(FormMatrix {
        matrix: k,
        meta: FormMetadata {
            kind: FormKind::Local,
            potential: potential.clone(),
            quadrature: None,
            tail_included: false,
            estimated_defect: None,
        },
    })
}

/// Piecewise-linear mass matrix over interior dofs, with lumped weights
/// `∫ φ_i`.
pub fn assemble_mass(mesh: &Mesh) -> MassMatrix {
    let d = mesh.num_dofs();
    let mut m = RMatrix::zeros(d, d);
    let mut lumped = RVector::zeros(d);
    for (e, el) in mesh.elements.iter().enumerate() {
        let meas = mesh.element_measure(e);
        let nv = el.len();
        // ∫ φ_a φ_b = |E| (1 + δ_ab) / ((N+1)(N+2))
        let denom = ((nv) * (nv + 1)) as f64;
        for a in 0..nv {
            let Some(pa) = mesh.dof(el[a]) else { continue };
            lumped[pa] += meas / nv as f64;
            for b in 0..nv {
                let Some(pb) = mesh.dof(el[b]) else { continue };
                let factor = if a == b { 2.0 } else { 1.0 };
                m[(pa, pb)] += meas * factor / denom;
            }
        }
    }
    MassMatrix { matrix: m, lumped }
}
