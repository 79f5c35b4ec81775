use statrs::function::gamma::gamma;

use super::gk::{integrate, integrate_pieces};
use super::OracleConfig;
use crate::assembly::{FormKind, FormMatrix, FormMetadata, MagneticPotential};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use crate::{CMatrix, Complex};

/// Largest dof count the reference assembly accepts.
const MAX_DOFS: usize = 20;
/// Exterior integrals are done numerically out to this many diameters.
const TAIL_REACH: f64 = 1e3;

/// Up to four hats living on a pair of elements.
struct Locals {
    dofs: Vec<usize>,
    /// For each local dof: its vertex position in E and in F, if any.
    in_e: Vec<Option<usize>>,
    in_f: Vec<Option<usize>>,
}

fn hat(el: &[f64; 2], vertex: usize, x: f64) -> f64 {
    let t = (x - el[0]) / (el[1] - el[0]);
    if vertex == 0 {
        1.0 - t
    } else {
        t
    }
}

struct Setup<'a> {
    mesh: &'a Mesh,
    s: f64,
    potential: &'a MagneticPotential,
}

impl Setup<'_> {
    fn coords(&self, e: usize) -> [f64; 2] {
        let el = &self.mesh.elements[e];
        [self.mesh.nodes[el[0]].x, self.mesh.nodes[el[1]].x]
    }

    fn locals(&self, e: usize, f: usize) -> Locals {
        let mut dofs = Vec::new();
        for &el in &[e, f] {
            for &n in &self.mesh.elements[el] {
                if let Some(p) = self.mesh.dof(n) {
                    if !dofs.contains(&p) {
                        dofs.push(p);
                    }
                }
            }
        }
        let pos = |el: usize, p: usize| {
            self.mesh.elements[el]
                .iter()
                .position(|&n| self.mesh.dof(n) == Some(p))
        };
        Locals {
            in_e: dofs.iter().map(|&p| pos(e, p)).collect(),
            in_f: dofs.iter().map(|&p| pos(f, p)).collect(),
            dofs,
        }
    }

    /// `conj(ψ_a) ψ_b / |x − y|^{1+2s}` for all local pairs, packed as
    /// (re, im) of a 4×4 block.
    fn integrand(&self, loc: &Locals, ce: &[f64; 2], cf: &[f64; 2], x: f64, y: f64) -> [f64; 32] {
        let r = (x - y).abs();
        let a = self.potential.eval(&Point::new(0.5 * (x + y), 0.0)).x;
        let phase = Complex::from_polar(1.0, (x - y) * a);
        let k = r.powf(-1.0 - 2.0 * self.s);
        let mut psi = [Complex::new(0.0, 0.0); 4];
        for l in 0..loc.dofs.len() {
            let px = loc.in_e[l].map_or(0.0, |v| hat(ce, v, x));
            let py = loc.in_f[l].map_or(0.0, |v| hat(cf, v, y));
            psi[l] = Complex::new(px, 0.0) - phase * py;
        }
        let mut out = [0.0; 32];
        for i in 0..4 {
            for j in 0..4 {
                let z = psi[i].conj() * psi[j] * k;
                out[2 * (4 * i + j)] = z.re;
                out[2 * (4 * i + j) + 1] = z.im;
            }
        }
        out
    }

    /// `∫_E ∫_{F, |x−y|>ε}` of the pair integrand.
    fn pair(&self, e: usize, f: usize, eps: f64, tol: f64) -> ([f64; 32], bool) {
        let loc = self.locals(e, f);
        let (ce, cf) = (self.coords(e), self.coords(f));
        let mut ok = true;
        let breaks = [cf[0] - eps, cf[0], cf[0] + eps, cf[1] - eps, cf[1], cf[1] + eps];
        let (v, good) = integrate_pieces(ce[0], ce[1], &breaks, tol, &mut |x| {
            let mut acc = [0.0; 32];
            for (lo, hi) in [(cf[0], (x - eps).min(cf[1])), ((x + eps).max(cf[0]), cf[1])] {
                if hi > lo {
                    let (w, g) = integrate(lo, hi, tol, &mut |y| self.integrand(&loc, &ce, &cf, x, y));
                    ok &= g;
                    for n in 0..32 {
                        acc[n] += w[n];
                    }
                }
            }
            acc
        });
        (v, ok && good)
    }

    /// `∫_{ℝ∖Ω} |x − y|^{−1−2s} dy`, numerically out to `TAIL_REACH`
    /// diameters and in closed form beyond.
    fn zeta(&self, x: f64, lo: f64, hi: f64, tol: f64) -> f64 {
        let s = self.s;
        let reach = TAIL_REACH * (hi - lo);
        let mut total = 0.0;
        for edge in [hi, lo] {
            let gap = (edge - x).abs();
            let breaks: Vec<f64> = (0..12).map(|k| gap * 10f64.powi(k)).collect();
            let (v, _) = integrate_pieces(0.0, reach, &breaks, tol, &mut |t| {
                [(gap + t).powf(-1.0 - 2.0 * s)]
            });
            total += v[0] + (gap + reach).powf(-2.0 * s) / (2.0 * s);
        }
        total
    }
}

fn kernel_constant_1d(s: f64) -> f64 {
    s * 4f64.powf(s) * gamma(0.5 + s) / (std::f64::consts::PI.sqrt() * gamma(1.0 - s))
}

fn accumulate(k: &mut CMatrix, loc: &Locals, v: &[f64; 32], scale: f64) {
    for (i, &p) in loc.dofs.iter().enumerate() {
        for (j, &q) in loc.dofs.iter().enumerate() {
            let n = 2 * (4 * i + j);
            k[(p, q)] += Complex::new(v[n], v[n + 1]) * scale;
        }
    }
}

/// Nonlocal form on a 1D mesh by brute-force adaptive quadrature over every
/// ordered element pair, with a band `|x − y| < ε` excised. The result is
/// recomputed with `ε/2`; if any entry moves by more than
/// `cfg.certificate_tol` (relative) the oracle gives up. The largest
/// relative change is returned in `meta.estimated_defect`.
pub fn dense_assembly_reference(
    mesh: &Mesh,
    s: f64,
    potential: &MagneticPotential,
    cfg: &OracleConfig,
) -> Result<FormMatrix> {
    cfg.validate()?;
    if mesh.dim != 1 {
        return Err(Error::Unsupported("the reference assembly is one-dimensional".into()));
    }
    if !(s > 0.0 && s < 0.5) {
        return Err(Error::Precondition(format!("N > 2s violated (s = {s})")));
    }
    potential.validate(1)?;
    let d = mesh.num_dofs();
    if d == 0 || d > MAX_DOFS {
        return Err(Error::InvalidArgument(format!(
            "reference assembly needs 1..={MAX_DOFS} dofs, got {d}"
        )));
    }
    let setup = Setup { mesh, s, potential };
    let c = kernel_constant_1d(s);
    let eps = cfg.eps_sing * mesh.h;
    let ne = mesh.elements.len();
    let has_dof = |e: usize| mesh.elements[e].iter().any(|&n| mesh.dof(n).is_some());

    let mut k = CMatrix::zeros(d, d);
    let mut coarse = CMatrix::zeros(d, d);
    for e in 0..ne {
        for f in 0..ne {
            if !has_dof(e) && !has_dof(f) {
                continue;
            }
            let loc = setup.locals(e, f);
            let (ce, cf) = (setup.coords(e), setup.coords(f));
            let near = ce[0] <= cf[1] + eps && cf[0] <= ce[1] + eps;
            let (fine, ok) = setup.pair(e, f, 0.5 * eps, cfg.tol);
            if !ok {
                log::warn!("reference quadrature did not meet tolerance on pair ({e}, {f})");
            }
            accumulate(&mut k, &loc, &fine, 0.5 * c);
            let first = if near { setup.pair(e, f, eps, cfg.tol).0 } else { fine };
            accumulate(&mut coarse, &loc, &first, 0.5 * c);
        }
    }

    let (lo, hi) = (
        mesh.nodes.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
        mesh.nodes.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
    );
    let mut tail = CMatrix::zeros(d, d);
    for e in 0..ne {
        if !has_dof(e) {
            continue;
        }
        let loc = setup.locals(e, e);
        let ce = setup.coords(e);
        let (v, _) = integrate(ce[0], ce[1], cfg.tol, &mut |x| {
            let z = setup.zeta(x, lo, hi, cfg.tol);
            let mut out = [0.0; 32];
            for i in 0..loc.dofs.len() {
                for j in 0..loc.dofs.len() {
                    let pi = loc.in_e[i].map_or(0.0, |v| hat(&ce, v, x));
                    let pj = loc.in_e[j].map_or(0.0, |v| hat(&ce, v, x));
                    out[2 * (4 * i + j)] = pi * pj * z;
                }
            }
            out
        });
        accumulate(&mut tail, &loc, &v, c);
    }
    k += &tail;
    coarse += &tail;

    let kmax = k.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut change: f64 = 0.0;
    for (a, b) in k.iter().zip(coarse.iter()) {
        change = change.max((a - b).norm() / a.norm().max(1e-12 * kmax));
    }
    if change > cfg.certificate_tol {
        return Err(Error::OracleInconclusive(format!(
            "entries moved by {change:.2e} under halving of the excision radius"
        )));
    }
    // exact Hermitian symmetry, as for the main assembly
    let mut k = (&k + k.adjoint()) * Complex::new(0.5, 0.0);
    for i in 0..d {
        k[(i, i)].im = 0.0;
    }
    Ok(FormMatrix {
        matrix: k,
        meta: FormMetadata {
            kind: FormKind::Nonlocal { s },
            potential: potential.clone(),
            quadrature: None,
            tail_included: true,
            estimated_defect: Some(change),
        },
    })
}
