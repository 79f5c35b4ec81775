//! Exterior contribution of the nonlocal form.
//!
//! Since `u = 0` outside `Ω`, the pairs `(x, y) ∈ Ω × Ωᶜ` only see
//! `|u(x)|²`: the magnetic phase multiplies the vanishing exterior value and
//! drops out. Both mixed regions together contribute
//! `c_{N,s} ∫_Ω |u|² ζ` with `ζ(x) = ∫_{Ωᶜ} |x−y|^{−N−2s} dy`, so the tail
//! matrix is real and the same for every potential.
//!
//! In polar coordinates around `x`, each ray leaves `Ω` through boundary
//! segments; a segment at distance `d` from `x` seen under the tangent
//! range `[t₁, t₂]` contributes `± d^{−2s} (F(t₂) − F(t₁)) / 2s` with
//! `F(t) = ∫₀ᵗ (1+τ²)^{−1−s} dτ`. The sign is `+` when the ray leaves `Ω`
//! through the segment and `−` when it comes back in.

use std::collections::HashMap;
use std::sync::Arc;

use super::{check_mesh, check_order, kernel_constant};
use crate::error::Result;
use crate::geometry::{Mesh, Point};
use crate::quadrature::{gauss_jacobi, gauss_legendre, triangle_rule, Rule};
use crate::RMatrix;

#[derive(Debug, Clone)]
struct Segment {
    a: Point,
    b: Point,
    /// Unit normal pointing out of `Ω`.
    n: Point,
}

#[derive(Debug, Clone)]
pub struct TailKernel {
    s: f64,
    dim: usize,
    /// 1D: the two interval ends.
    ends: [f64; 2],
    segments: Vec<Segment>,
    /// Boundary facet (sorted node pair) → segment index.
    facet_segment: HashMap<(usize, usize), usize>,
    guard: f64,
    gl: Arc<Rule>,
    gj: Arc<Rule>,
    f_one: f64,
    g_one: f64,
}

impl TailKernel {
    pub fn new(mesh: &Mesh, s: f64) -> Result<Self> {
        check_order(mesh.dim, s)?;
        let gl = gauss_legendre(20);
        let gj = gauss_jacobi(20, 0.0, 2.0 * s);
        let mut kernel = TailKernel {
            s,
            dim: mesh.dim,
            ends: [0.0; 2],
            segments: Vec::new(),
            facet_segment: HashMap::new(),
            guard: 1e-12 * mesh.h,
            gl,
            gj,
            f_one: 0.0,
            g_one: 0.0,
        };
        kernel.f_one = kernel.f_small(1.0);
        kernel.g_one = kernel.g(1.0);
        if mesh.dim == 1 {
            let xs = mesh.nodes.iter().map(|p| p.x);
            kernel.ends = [
                xs.clone().fold(f64::INFINITY, f64::min),
                xs.fold(f64::NEG_INFINITY, f64::max),
            ];
        } else {
            kernel.build_segments(mesh);
        }
        Ok(kernel)
    }

    fn build_segments(&mut self, mesh: &Mesh) {
        let scale = mesh.diameter();
        let key_tol = 1e-9 * scale;
        // group collinear facets with the same outward normal
        let mut groups: HashMap<(i64, i64, i64), Vec<(f64, f64, (usize, usize))>> =
            HashMap::new();
        let mut frames: HashMap<(i64, i64, i64), (Point, Point, f64)> = HashMap::new();
        let mut facets: Vec<_> = mesh.boundary_facets().into_iter().collect();
        facets.sort();
        for (facet, e) in facets {
            let (i, j) = (facet[0], facet[1]);
            let (a, b) = (mesh.nodes[i], mesh.nodes[j]);
            let third = mesh.elements[e]
                .iter()
                .copied()
                .find(|&k| k != i && k != j)
                .unwrap();
            let t = (b - a).normalize();
            let mut n = Point::new(t.y, -t.x);
            if (mesh.nodes[third] - a).dot(&n) > 0.0 {
                n = -n;
            }
            let offset = n.dot(&a);
            let key = (
                (n.x * 1e9).round() as i64,
                (n.y * 1e9).round() as i64,
                (offset / key_tol).round() as i64,
            );
            let tangent = Point::new(-n.y, n.x);
            frames.entry(key).or_insert((n, tangent, offset));
            let (ta, tb) = (tangent.dot(&a), tangent.dot(&b));
            groups
                .entry(key)
                .or_default()
                .push((ta.min(tb), ta.max(tb), (i, j)));
        }
        let mut keys: Vec<_> = groups.keys().copied().collect();
        keys.sort();
        for key in keys {
            let (n, tangent, offset) = frames[&key];
            let mut items = groups.remove(&key).unwrap();
            items.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut current: Option<(f64, f64, Vec<(usize, usize)>)> = None;
            let flush = |seg: (f64, f64, Vec<(usize, usize)>), out: &mut Self| {
                let idx = out.segments.len();
                out.segments.push(Segment {
                    a: n * offset + tangent * seg.0,
                    b: n * offset + tangent * seg.1,
                    n,
                });
                for f in seg.2 {
                    out.facet_segment.insert(f, idx);
                }
            };
            for (lo, hi, f) in items {
                current = match current.take() {
                    Some((clo, chi, mut fs)) if (lo - chi).abs() <= key_tol => {
                        fs.push(f);
                        Some((clo, hi.max(chi), fs))
                    }
                    Some(done) => {
                        flush(done, self);
                        Some((lo, hi, vec![f]))
                    }
                    None => Some((lo, hi, vec![f])),
                };
            }
            if let Some(done) = current {
                flush(done, self);
            }
        }
    }

    /// `ζ(x) = ∫_{ℝᴺ∖Ω} |x−y|^{−N−2s} dy` for `x ∈ Ω`.
    pub fn zeta(&self, x: &Point) -> f64 {
        self.zeta_excluding(x, None)
    }

    fn zeta_excluding(&self, x: &Point, skip: Option<usize>) -> f64 {
        if self.dim == 1 {
            return self
                .ends
                .iter()
                .enumerate()
                .filter(|(k, _)| Some(*k) != skip)
                .map(|(_, &c)| self.end_term(x.x, c))
                .sum();
        }
        (0..self.segments.len())
            .filter(|&k| Some(k) != skip)
            .map(|k| self.segment_term(k, x))
            .sum()
    }

    fn end_term(&self, x: f64, c: f64) -> f64 {
        (x - c).abs().max(self.guard).powf(-2.0 * self.s) / (2.0 * self.s)
    }

    fn segment_term(&self, k: usize, x: &Point) -> f64 {
        let seg = &self.segments[k];
        let signed = (seg.a - x).dot(&seg.n);
        if signed.abs() <= 1e-14 * (seg.a - seg.b).norm() {
            return 0.0;
        }
        let sign = signed.signum();
        let d = signed.abs().max(self.guard);
        let foot = x + signed * seg.n;
        let tangent = (seg.b - seg.a).normalize();
        let t1 = (seg.a - foot).dot(&tangent) / d;
        let t2 = (seg.b - foot).dot(&tangent) / d;
        sign * d.powf(-2.0 * self.s) / (2.0 * self.s) * self.f_diff(t1, t2)
    }

    /// `F(t2) − F(t1)` for `t1 < t2`, without cancellation when both are
    /// large and of equal sign.
    fn f_diff(&self, t1: f64, t2: f64) -> f64 {
        if t1 >= 1.0 {
            self.g(1.0 / t1) - self.g(1.0 / t2)
        } else if t2 <= -1.0 {
            self.f_diff(-t2, -t1)
        } else {
            self.f(t2) - self.f(t1)
        }
    }

    fn f(&self, t: f64) -> f64 {
        let a = t.abs();
        let v = if a <= 1.0 {
            self.f_small(a)
        } else {
            self.f_one + self.g_one - self.g(1.0 / a)
        };
        v.copysign(t)
    }

    fn f_small(&self, t: f64) -> f64 {
        let p = -1.0 - self.s;
        t * self
            .gl
            .iter()
            .map(|(v, w)| w * (1.0 + t * t * v * v).powf(p))
            .sum::<f64>()
    }

    /// `∫₀ᶜ σ^{2s} (1+σ²)^{−1−s} dσ`.
    fn g(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        let p = -1.0 - self.s;
        c.powf(1.0 + 2.0 * self.s)
            * self
                .gj
                .iter()
                .map(|(v, w)| w * (1.0 + c * c * v * v).powf(p))
                .sum::<f64>()
    }
}

/// Tail matrix `c_{N,s} ∫_Ω φ_i φ_j ζ` over interior dofs, with the default
/// quadrature order.
pub fn assemble_tail(mesh: &Mesh, s: f64) -> Result<RMatrix> {
    tail_matrix(mesh, s, super::KernelQuadratureConfig::default().tail_order)
}

pub(crate) fn tail_matrix(mesh: &Mesh, s: f64, order: usize) -> Result<RMatrix> {
    check_order(mesh.dim, s)?;
    check_mesh(mesh)?;
    let kernel = TailKernel::new(mesh, s)?;
    let c = kernel_constant(mesh.dim, s)?;
    let d = mesh.num_dofs();
    let mut t = RMatrix::zeros(d, d);
    let boundary_node: Vec<bool> = mesh.interior.node_to_dof.iter().map(|x| x.is_none()).collect();

    let smooth_1d = gauss_legendre(order + 4);
    let collapse_1d = gauss_jacobi(order, 0.0, 2.0 - 2.0 * s);
    let smooth_2d = triangle_rule(order);
    let vertex_2d = triangle_rule(order + 4);
    let radial_2d = gauss_jacobi(order, 1.0, 2.0 - 2.0 * s);
    let lateral_2d = gauss_legendre(order);

    for (e, el) in mesh.elements.iter().enumerate() {
        let dofs: Vec<Option<usize>> = el.iter().map(|&n| mesh.dof(n)).collect();
        if dofs.iter().all(|d| d.is_none()) {
            continue;
        }
        let p: Vec<Point> = el.iter().map(|&n| mesh.nodes[n]).collect();
        // barycentrics and weight (ζ included) of every point
        let mut pts: Vec<(Vec<f64>, f64)> = Vec::new();

        if mesh.dim == 1 {
            let h = mesh.element_measure(e);
            for &c_end in &kernel.ends {
                let touching = (0..2).find(|&v| (p[v].x - c_end).abs() <= kernel.guard.max(1e-14));
                match touching {
                    Some(v) => {
                        // collapse toward the boundary end
                        for (tq, wq) in collapse_1d.iter() {
                            let mut l = vec![0.0; 2];
                            l[v] = 1.0 - tq;
                            l[1 - v] = tq;
                            let x = Point::new(l[0] * p[0].x + l[1] * p[1].x, 0.0);
                            let w = wq * h * tq.powf(2.0 * s - 2.0) * kernel.end_term(x.x, c_end);
                            pts.push((l, w));
                        }
                    }
                    None => {
                        for (tq, wq) in smooth_1d.iter() {
                            let l = vec![1.0 - tq, tq];
                            let x = l[0] * p[0].x + l[1] * p[1].x;
                            pts.push((l, wq * h * kernel.end_term(x, c_end)));
                        }
                    }
                }
            }
        } else {
            let jac = 2.0 * mesh.element_measure(e);
            let edge = (0..3).find_map(|k| {
                let (i, j) = (el[(k + 1) % 3], el[(k + 2) % 3]);
                let key = (i.min(j), i.max(j));
                kernel.facet_segment.get(&key).map(|&seg| (k, seg))
            });
            let point = |l: &[f64]| l[0] * p[0] + l[1] * p[1] + l[2] * p[2];
            match edge {
                Some((apex, seg)) => {
                    let (i, j) = ((apex + 1) % 3, (apex + 2) % 3);
                    for (tq, wt) in radial_2d.iter() {
                        for (v, wv) in lateral_2d.iter() {
                            let mut l = vec![0.0; 3];
                            l[apex] = tq;
                            l[i] = (1.0 - tq) * (1.0 - v);
                            l[j] = (1.0 - tq) * v;
                            let x = point(&l);
                            let w = wt * wv * jac * tq.powf(2.0 * s - 2.0)
                                * kernel.segment_term(seg, &x);
                            pts.push((l, w));
                        }
                    }
                    for (xi, w) in &smooth_2d {
                        let l = vec![1.0 - xi[0] - xi[1], xi[0], xi[1]];
                        let x = point(&l);
                        pts.push((l, w * jac * kernel.zeta_excluding(&x, Some(seg))));
                    }
                }
                None => {
                    let rule = if el.iter().any(|&n| boundary_node[n]) {
                        &vertex_2d
                    } else {
                        &smooth_2d
                    };
                    for (xi, w) in rule {
                        let l = vec![1.0 - xi[0] - xi[1], xi[0], xi[1]];
                        let x = point(&l);
                        pts.push((l, w * jac * kernel.zeta(&x)));
                    }
                }
            }
        }

        for (l, w) in &pts {
            for a in 0..el.len() {
                let Some(pa) = dofs[a] else { continue };
                for b in 0..el.len() {
                    let Some(pb) = dofs[b] else { continue };
                    if pa <= pb {
                        t[(pa, pb)] += c * w * l[a] * l[b];
                    }
                }
            }
        }
    }
    t.fill_lower_triangle_with_upper_triangle();
    Ok(t)
}
