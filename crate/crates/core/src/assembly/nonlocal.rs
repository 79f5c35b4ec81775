use rayon::prelude::*;

use super::pairs::{self, RefPoint};
use super::{
    check_mesh, check_order, kernel_constant, tail, FormKind, FormMatrix, FormMetadata,
    KernelQuadratureConfig, MagneticPotential,
};
use crate::error::Result;
use crate::geometry::{Mesh, Point};
use crate::quadrature::{gauss_legendre, order_for_distance, triangle_rule};
use crate::{CMatrix, Complex};

/// Assemble the nonlocal magnetic form over interior dofs.
///
/// The double integral over `Ω × Ω` is split into element pairs; identical
/// and touching pairs use the collapsed rules of `pairs`, disjoint pairs a
/// tensor Gauss rule whose order follows their separation. The exterior
/// part is added by [`assemble_tail`](super::assemble_tail).
pub fn assemble_nonlocal_form(
    mesh: &Mesh,
    s: f64,
    potential: &MagneticPotential,
    q: &KernelQuadratureConfig,
) -> Result<FormMatrix> {
    check_order(mesh.dim, s)?;
    check_mesh(mesh)?;
    potential.validate(mesh.dim)?;
    q.validate()?;

    let ctx = Ctx::new(mesh, s, potential, q)?;
    let d = mesh.num_dofs();
    let ne = ctx.elems.len();

    // Fixed partition of the outer element index; the per-chunk
    // accumulators are summed in chunk order.
    let chunks = (256usize << 20) / (16 * d * d).max(1);
    let chunks = chunks.clamp(1, 8).min(ne);
    let bounds: Vec<(usize, usize)> = (0..chunks)
        .map(|c| (c * ne / chunks, (c + 1) * ne / chunks))
        .collect();
    let work = |&(lo, hi): &(usize, usize)| {
        let mut acc = CMatrix::zeros(d, d);
        for e in lo..hi {
            for f in e..ne {
                ctx.pair(e, f, &mut acc);
            }
        }
        acc
    };
    let parts: Vec<CMatrix> = if q.sequential {
        bounds.iter().map(work).collect()
    } else {
        bounds.par_iter().map(work).collect()
    };
    let mut k = CMatrix::zeros(d, d);
    for p in &parts {
        k += p;
    }

    if q.include_tail {
        let t = tail::tail_matrix(mesh, s, q.tail_order)?;
        for i in 0..d {
            for j in i..d {
                k[(i, j)].re += t[(i, j)];
            }
        }
    }
    hermitize_from_upper(&mut k);

    let defect = ctx.defect_estimate();
    if let Some(def) = defect {
        if def > 1e-6 {
            log::warn!("singular quadrature defect estimate {def:.2e} exceeds 1e-6");
        }
    }

    Ok(FormMatrix {
        matrix: k,
        meta: FormMetadata {
            kind: FormKind::Nonlocal { s },
            potential: potential.clone(),
            quadrature: Some(*q),
            tail_included: q.include_tail,
            estimated_defect: defect,
        },
    })
}

pub(crate) fn hermitize_from_upper(k: &mut CMatrix) {
    let d = k.nrows();
    for i in 0..d {
        k[(i, i)].im = 0.0;
        for j in i + 1..d {
            k[(j, i)] = k[(i, j)].conj();
        }
    }
}

#[derive(Debug, Clone)]
struct Elem {
    verts: [usize; 3],
    nv: usize,
    p: [Point; 3],
    dofs: [Option<usize>; 3],
    measure: f64,
    radius: f64,
    diam: f64,
}

impl Elem {
    fn has_dofs(&self) -> bool {
        self.dofs[..self.nv].iter().any(|d| d.is_some())
    }

    fn point(&self, l: &[f64; 3]) -> Point {
        let mut x = Point::zeros();
        for k in 0..self.nv {
            x += l[k] * self.p[k];
        }
        x
    }
}

/// Part of an element, given by the parent barycentric coordinates of its
/// vertices and its measure fraction.
#[derive(Debug, Clone, Copy)]
struct Sub {
    b: [[f64; 3]; 3],
    frac: f64,
}

impl Sub {
    fn whole() -> Self {
        Sub {
            b: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            frac: 1.0,
        }
    }

    fn map(&self, l: &[f64; 3], nv: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        for k in 0..nv {
            for (o, b) in out.iter_mut().zip(&self.b[k]) {
                *o += l[k] * b;
            }
        }
        out
    }

    fn children(&self, nv: usize) -> Vec<Sub> {
        let mid = |i: usize, j: usize| {
            let mut m = [0.0; 3];
            for k in 0..3 {
                m[k] = 0.5 * (self.b[i][k] + self.b[j][k]);
            }
            m
        };
        if nv == 2 {
            let m = mid(0, 1);
            vec![
                Sub { b: [self.b[0], m, [0.0; 3]], frac: self.frac / 2.0 },
                Sub { b: [m, self.b[1], [0.0; 3]], frac: self.frac / 2.0 },
            ]
        } else {
            let (m01, m12, m02) = (mid(0, 1), mid(1, 2), mid(0, 2));
            let f = self.frac / 4.0;
            vec![
                Sub { b: [self.b[0], m01, m02], frac: f },
                Sub { b: [m01, self.b[1], m12], frac: f },
                Sub { b: [m02, m12, self.b[2]], frac: f },
                Sub { b: [m12, m02, m01], frac: f },
            ]
        }
    }
}

struct Rules {
    identical: Vec<RefPoint>,
    edge: Vec<RefPoint>,
    vertex: Vec<RefPoint>,
}

/// Quadrature point on one element: parent barycentrics, physical point,
/// reference weight.
#[derive(Clone, Copy)]
struct ElemPoint {
    l: [f64; 3],
    x: Point,
    w: f64,
}

struct Ctx<'a> {
    dim: usize,
    s: f64,
    c: f64,
    half_power: f64,
    potential: &'a MagneticPotential,
    zero_potential: bool,
    elems: Vec<Elem>,
    rules: Rules,
    /// Reference element rules per order (index = points per axis).
    elem_rules: Vec<Vec<([f64; 3], f64)>>,
    q: KernelQuadratureConfig,
}

impl<'a> Ctx<'a> {
    fn new(
        mesh: &Mesh,
        s: f64,
        potential: &'a MagneticPotential,
        q: &KernelQuadratureConfig,
    ) -> Result<Self> {
        let dim = mesh.dim;
        let elems = (0..mesh.elements.len())
            .map(|e| {
                let el = &mesh.elements[e];
                let nv = el.len();
                let mut verts = [usize::MAX; 3];
                let mut p = [Point::zeros(); 3];
                let mut dofs = [None; 3];
                for k in 0..nv {
                    verts[k] = el[k];
                    p[k] = mesh.nodes[el[k]];
                    dofs[k] = mesh.dof(el[k]);
                }
                let centroid = p[..nv].iter().sum::<Point>() / nv as f64;
                let radius = p[..nv]
                    .iter()
                    .map(|v| (v - centroid).norm())
                    .fold(0.0, f64::max);
                Elem {
                    verts,
                    nv,
                    p,
                    dofs,
                    measure: mesh.element_measure(e),
                    radius,
                    diam: mesh.element_diameter(e),
                }
            })
            .collect();
        let n = q.singular_order;
        let rules = if dim == 1 {
            Rules {
                identical: pairs::identical_1d(n, s),
                edge: Vec::new(),
                vertex: pairs::touching_1d(n, s),
            }
        } else {
            Rules {
                identical: pairs::identical_2d(n, s),
                edge: pairs::edge_2d(n, s),
                vertex: pairs::vertex_2d(n, s),
            }
        };
        let elem_rules = (0..=q.max_far_order)
            .map(|order| {
                if order == 0 {
                    Vec::new()
                } else if dim == 1 {
                    gauss_legendre(order)
                        .iter()
                        .map(|(t, w)| ([1.0 - t, t, 0.0], w))
                        .collect()
                } else {
                    triangle_rule(order)
                        .into_iter()
                        .map(|(x, w)| ([1.0 - x[0] - x[1], x[0], x[1]], w))
                        .collect()
                }
            })
            .collect();
        Ok(Ctx {
            dim,
            s,
            c: kernel_constant(dim, s)?,
            half_power: 0.5 * (dim as f64 + 2.0 * s),
            potential,
            zero_potential: potential.is_zero(),
            elems,
            rules,
            elem_rules,
            q: *q,
        })
    }

    #[inline]
    fn phase(&self, x: &Point, y: &Point) -> Complex {
        if self.zero_potential {
            return Complex::new(1.0, 0.0);
        }
        let theta = (x - y).dot(&self.potential.eval(&(0.5 * (x + y))));
        Complex::new(theta.cos(), theta.sin())
    }

    #[inline]
    fn kernel(&self, x: &Point, y: &Point) -> f64 {
        (x - y).norm_squared().powf(-self.half_power)
    }

    /// Reference measure scale of an element (`2|T|` or `|I|`).
    fn jac(&self, e: &Elem) -> f64 {
        if self.dim == 1 {
            e.measure
        } else {
            2.0 * e.measure
        }
    }

    fn pair(&self, ei: usize, fi: usize, acc: &mut CMatrix) {
        let e = &self.elems[ei];
        let f = &self.elems[fi];
        if !e.has_dofs() && !f.has_dofs() {
            return;
        }
        let scale = self.jac(e) * self.jac(f) * if ei == fi { 0.5 * self.c } else { self.c };
        if ei == fi {
            let id = [0, 1, 2];
            self.singular(e, f, &id, &id, &self.rules.identical, scale, acc);
            return;
        }
        // shared vertices as (local index in e, local index in f)
        let mut shared = [(0usize, 0usize); 3];
        let mut ns = 0;
        for i in 0..e.nv {
            for j in 0..f.nv {
                if e.verts[i] == f.verts[j] {
                    shared[ns] = (i, j);
                    ns += 1;
                }
            }
        }
        let rest = |el: &Elem, used: &[usize]| -> Vec<usize> {
            (0..el.nv).filter(|k| !used.contains(k)).collect()
        };
        match ns {
            0 => self.disjoint(e, f, scale, acc),
            1 => {
                let (i, j) = shared[0];
                let mut pe = [i, 0, 0];
                let mut pf = [j, 0, 0];
                for (k, r) in rest(e, &[i]).into_iter().enumerate() {
                    pe[k + 1] = r;
                }
                for (k, r) in rest(f, &[j]).into_iter().enumerate() {
                    pf[k + 1] = r;
                }
                self.singular(e, f, &pe, &pf, &self.rules.vertex, scale, acc);
            }
            _ => {
                let (i0, j0) = shared[0];
                let (i1, j1) = shared[1];
                let pe = [i0, i1, rest(e, &[i0, i1])[0]];
                let pf = [j0, j1, rest(f, &[j0, j1])[0]];
                self.singular(e, f, &pe, &pf, &self.rules.edge, scale, acc);
            }
        }
    }

    /// Generic path: every point contributes `conj(ψ_u) ψ_v` for the union
    /// of dofs of both elements, `ψ_u = φ_u(x) − e^{iθ} φ_u(y)`.
    #[allow(clippy::too_many_arguments)]
    fn singular(
        &self,
        e: &Elem,
        f: &Elem,
        pe: &[usize; 3],
        pf: &[usize; 3],
        rule: &[RefPoint],
        scale: f64,
        acc: &mut CMatrix,
    ) {
        let (dofs, ie, jf) = union_dofs(e, f);
        let nu = dofs.len();
        let mut loc = [[Complex::new(0.0, 0.0); 6]; 6];
        let mut psi = [Complex::new(0.0, 0.0); 6];
        for p in rule {
            let mut lx = [0.0; 3];
            let mut ly = [0.0; 3];
            for k in 0..e.nv {
                lx[pe[k]] = p.lx[k];
                ly[pf[k]] = p.ly[k];
            }
            let x = e.point(&lx);
            let y = f.point(&ly);
            let w = p.w * self.kernel(&x, &y);
            let ph = self.phase(&x, &y);
            for u in 0..nu {
                let a = ie[u].map_or(0.0, |k| lx[k]);
                let b = jf[u].map_or(0.0, |k| ly[k]);
                psi[u] = Complex::new(a, 0.0) - ph * b;
            }
            for u in 0..nu {
                let cu = psi[u].conj() * w;
                for v in u..nu {
                    loc[u][v] += cu * psi[v];
                }
            }
        }
        for u in 0..nu {
            for v in u..nu {
                let val = loc[u][v] * scale;
                let (p, q) = (dofs[u], dofs[v]);
                if p < q {
                    acc[(p, q)] += val;
                } else if p > q {
                    acc[(q, p)] += val.conj();
                } else {
                    acc[(p, p)].re += val.re;
                }
            }
        }
    }

    fn disjoint(&self, e: &Elem, f: &Elem, scale: f64, acc: &mut CMatrix) {
        let mut blk = Block::default();
        self.disjoint_sub(e, f, &Sub::whole(), &Sub::whole(), 0, &mut blk);
        for a in 0..e.nv {
            let Some(p) = e.dofs[a] else { continue };
            for b in 0..e.nv {
                if let Some(q) = e.dofs[b] {
                    if p <= q {
                        acc[(p, q)].re += scale * blk.ee[a][b];
                    }
                }
            }
            for b in 0..f.nv {
                if let Some(q) = f.dofs[b] {
                    // conj(φ_a(x)) · (−e^{iθ} φ_b(y))
                    let val = -blk.ef[a][b] * scale;
                    if p < q {
                        acc[(p, q)] += val;
                    } else {
                        acc[(q, p)] += val.conj();
                    }
                }
            }
        }
        for a in 0..f.nv {
            let Some(p) = f.dofs[a] else { continue };
            for b in 0..f.nv {
                if let Some(q) = f.dofs[b] {
                    if p <= q {
                        acc[(p, q)].re += scale * blk.ff[a][b];
                    }
                }
            }
        }
    }

    fn disjoint_sub(&self, e: &Elem, f: &Elem, se: &Sub, sf: &Sub, level: usize, blk: &mut Block) {
        let ce = e.point(&centroid_of(se, e.nv));
        let cf = f.point(&centroid_of(sf, f.nv));
        let scale_e = if e.nv == 2 { se.frac } else { se.frac.sqrt() };
        let scale_f = if f.nv == 2 { sf.frac } else { sf.frac.sqrt() };
        let (re, rf) = (e.radius * scale_e, f.radius * scale_f);
        let dist = (ce - cf).norm() - re - rf;
        let diam = (e.diam * scale_e).max(f.diam * scale_f);
        if dist < 0.25 * diam && level < self.q.near_levels {
            // split the larger piece
            if re >= rf {
                for c in se.children(e.nv) {
                    self.disjoint_sub(e, f, &c, sf, level + 1, blk);
                }
            } else {
                for c in sf.children(f.nv) {
                    self.disjoint_sub(e, f, se, &c, level + 1, blk);
                }
            }
            return;
        }
        let n = order_for_distance(
            dist,
            diam,
            self.q.far_tol,
            self.q.far_order,
            self.q.max_far_order,
        );
        let pts = |el: &Elem, sub: &Sub| -> Vec<ElemPoint> {
            self.elem_rules[n]
                .iter()
                .map(|(l, w)| {
                    let lp = sub.map(l, el.nv);
                    ElemPoint { l: lp, x: el.point(&lp), w: w * sub.frac }
                })
                .collect()
        };
        let xs = pts(e, se);
        let ys = pts(f, sf);
        let mut sy = vec![0.0; ys.len()];
        for xp in &xs {
            let mut sx = 0.0;
            let mut cx = [Complex::new(0.0, 0.0); 3];
            for (k, yp) in ys.iter().enumerate() {
                let w = xp.w * yp.w * self.kernel(&xp.x, &yp.x);
                sx += w;
                sy[k] += w;
                let c = self.phase(&xp.x, &yp.x) * w;
                for b in 0..f.nv {
                    cx[b] += c * yp.l[b];
                }
            }
            for a in 0..e.nv {
                for b in 0..e.nv {
                    blk.ee[a][b] += sx * xp.l[a] * xp.l[b];
                }
                for b in 0..f.nv {
                    blk.ef[a][b] += cx[b] * xp.l[a];
                }
            }
        }
        for (k, yp) in ys.iter().enumerate() {
            for a in 0..f.nv {
                for b in 0..f.nv {
                    blk.ff[a][b] += sy[k] * yp.l[a] * yp.l[b];
                }
            }
        }
    }

    /// Relative change of the first identical block with dofs when the
    /// singular order is raised by 3.
    fn defect_estimate(&self) -> Option<f64> {
        let e = self.elems.iter().find(|e| e.has_dofs())?;
        let n = self.q.singular_order + 3;
        let finer = if self.dim == 1 {
            pairs::identical_1d(n, self.s)
        } else {
            pairs::identical_2d(n, self.s)
        };
        let d = self.elems.iter().flat_map(|e| e.dofs).flatten().max()? + 1;
        let id = [0, 1, 2];
        let scale = 0.5 * self.c * self.jac(e) * self.jac(e);
        let mut a = CMatrix::zeros(d, d);
        let mut b = CMatrix::zeros(d, d);
        self.singular(e, e, &id, &id, &self.rules.identical, scale, &mut a);
        self.singular(e, e, &id, &id, &finer, scale, &mut b);
        let norm = b.norm();
        (norm > 0.0).then(|| (a - b).norm() / norm)
    }
}

#[derive(Default)]
struct Block {
    ee: [[f64; 3]; 3],
    ff: [[f64; 3]; 3],
    ef: [[Complex; 3]; 3],
}

fn centroid_of(sub: &Sub, nv: usize) -> [f64; 3] {
    let w = 1.0 / nv as f64;
    sub.map(&[w, w, w], nv)
}

/// Interior dofs of `e ∪ f`, with their local index in each element.
#[allow(clippy::type_complexity)]
fn union_dofs(e: &Elem, f: &Elem) -> (Vec<usize>, Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut dofs = Vec::with_capacity(6);
    let mut ie = Vec::with_capacity(6);
    let mut jf = Vec::with_capacity(6);
    for k in 0..e.nv {
        if let Some(d) = e.dofs[k] {
            dofs.push(d);
            ie.push(Some(k));
            jf.push((0..f.nv).find(|&j| f.verts[j] == e.verts[k]));
        }
    }
    for k in 0..f.nv {
        if let Some(d) = f.dofs[k] {
            if !dofs.contains(&d) {
                dofs.push(d);
                ie.push(None);
                jf.push(Some(k));
            }
        }
    }
    (dofs, ie, jf)
}
