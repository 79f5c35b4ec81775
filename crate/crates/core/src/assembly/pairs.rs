//! Reference quadrature for element pairs that touch.
//!
//! Each rule integrates over the product of two reference elements in
//! collapsed coordinates where one radial variable `ρ` measures the distance
//! to the singular set. The radial direction uses Gauss–Jacobi with the
//! power of `ρ` that the kernel, the Jacobian and the vanishing of
//! `φ(x) − e^{iθ}φ(y)` produce together; the stored weight is the true
//! measure divided by that Jacobi weight, so the integrand is evaluated as
//! is.
//!
//! Barycentric coordinates are given in a canonical vertex order:
//!
//! * identical: both elements `(v0, v1, v2)`;
//! * shared edge: `(v0, v1, p)` and `(v0, v1, q)`;
//! * shared vertex: `(v, p1, p2)` and `(v, q1, q2)` (1D: `(v, p)`, `(v, q)`).
//!
//! Weights are normalized to reference measure (1/4 for a pair of
//! triangles, 1 for a pair of intervals).

use crate::quadrature::{gauss_jacobi, gauss_legendre, triangle_rule};

#[derive(Debug, Clone, Copy)]
pub(crate) struct RefPoint {
    pub lx: [f64; 3],
    pub ly: [f64; 3],
    pub w: f64,
}

pub(crate) fn identical_1d(n: usize, s: f64) -> Vec<RefPoint> {
    let radial = gauss_jacobi(n, 1.0, 1.0 - 2.0 * s);
    let lateral = gauss_legendre(n);
    let mut out = Vec::with_capacity(2 * n * n);
    for (rho, wr) in radial.iter() {
        // measure (1−ρ) over Jacobi weight (1−ρ) ρ^{1−2s}
        let w0 = wr * rho.powf(2.0 * s - 1.0);
        for (tau, wt) in lateral.iter() {
            let xi = rho + (1.0 - rho) * tau;
            let eta = xi - rho;
            let a = [1.0 - xi, xi, 0.0];
            let b = [1.0 - eta, eta, 0.0];
            out.push(RefPoint { lx: a, ly: b, w: w0 * wt });
            out.push(RefPoint { lx: b, ly: a, w: w0 * wt });
        }
    }
    out
}

pub(crate) fn touching_1d(n: usize, s: f64) -> Vec<RefPoint> {
    let radial = gauss_jacobi(n, 0.0, 2.0 - 2.0 * s);
    let lateral = gauss_legendre(n);
    let mut out = Vec::with_capacity(2 * n * n);
    for (rho, wr) in radial.iter() {
        let w0 = wr * rho.powf(2.0 * s - 1.0);
        for (t, wt) in lateral.iter() {
            let (a, c) = (rho, rho * t);
            out.push(RefPoint {
                lx: [1.0 - a, a, 0.0],
                ly: [1.0 - c, c, 0.0],
                w: w0 * wt,
            });
            out.push(RefPoint {
                lx: [1.0 - c, c, 0.0],
                ly: [1.0 - a, a, 0.0],
                w: w0 * wt,
            });
        }
    }
    out
}

/// Identical triangles: `x − y` sweeps the hexagon `T − T`, split into six
/// sectors between consecutive vertices `e_i − e_j` (barycentric
/// differences).
pub(crate) fn identical_2d(n: usize, s: f64) -> Vec<RefPoint> {
    let hex: [[f64; 3]; 6] = [
        [1.0, -1.0, 0.0],
        [1.0, 0.0, -1.0],
        [0.0, 1.0, -1.0],
        [-1.0, 1.0, 0.0],
        [-1.0, 0.0, 1.0],
        [0.0, -1.0, 1.0],
    ];
    let radial = gauss_jacobi(n, 2.0, 1.0 - 2.0 * s);
    let lateral = gauss_legendre(n);
    let tri = triangle_rule(n);
    let mut out = Vec::with_capacity(6 * n * n * tri.len());
    for k in 0..6 {
        let va = hex[k];
        let vb = hex[(k + 1) % 6];
        // sector area factor in the (λ1, λ2) reference plane
        let det = (va[1] * vb[2] - va[2] * vb[1]).abs();
        for (rho, wr) in radial.iter() {
            let w0 = wr * det * rho.powf(2.0 * s);
            for (t, wt) in lateral.iter() {
                let mut dl = [0.0; 3];
                let mut m = [0.0; 3];
                for i in 0..3 {
                    dl[i] = rho * (va[i] + t * (vb[i] - va[i]));
                    m[i] = dl[i].max(0.0);
                }
                for (xi, ww) in &tri {
                    let what = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
                    let mut lx = [0.0; 3];
                    let mut ly = [0.0; 3];
                    for i in 0..3 {
                        lx[i] = m[i] + (1.0 - rho) * what[i];
                        ly[i] = lx[i] - dl[i];
                    }
                    out.push(RefPoint { lx, ly, w: w0 * wt * ww });
                }
            }
        }
    }
    out
}

/// Triangles sharing the edge `(v0, v1)`. With `x = v0 + αe + βP` and
/// `y = v0 + γe + δQ`, the singular set is `β = δ = 0, α = γ`; the
/// variables `(α − γ, β, δ)` are split into four cones.
pub(crate) fn edge_2d(n: usize, s: f64) -> Vec<RefPoint> {
    let radial = gauss_jacobi(n, 1.0, 2.0 - 2.0 * s);
    let gl = gauss_legendre(n);
    let mut out = Vec::with_capacity(4 * n.pow(4));
    for (rho, wr) in radial.iter() {
        // measure ρ²(1−ρ) over Jacobi weight (1−ρ) ρ^{2−2s}
        let w0 = wr * rho.powf(2.0 * s);
        let len = 1.0 - rho;
        for (a, wa) in gl.iter() {
            for (b, wb) in gl.iter() {
                // (sign of α−γ, |α−γ|, β, δ, face jacobian)
                let cones = [
                    (1.0, rho * a, rho * (1.0 - a), rho * b, 1.0),
                    (1.0, rho * a * (1.0 - b), rho * a * b, rho, a),
                    (-1.0, rho * a * (1.0 - b), rho, rho * a * b, a),
                    (-1.0, rho * a, rho * b, rho * (1.0 - a), 1.0),
                ];
                for &(sign, u, beta, delta, fj) in &cones {
                    for (tau, wt) in gl.iter() {
                        let (alpha, gamma) = if sign > 0.0 {
                            let alpha = u + tau * len;
                            (alpha, alpha - u)
                        } else {
                            let alpha = tau * len;
                            (alpha, alpha + u)
                        };
                        out.push(RefPoint {
                            lx: [1.0 - alpha - beta, alpha, beta],
                            ly: [1.0 - gamma - delta, gamma, delta],
                            w: w0 * wa * wb * wt * fj,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Triangles sharing one vertex. The coordinate sums `λ1 + λ2` and
/// `μ1 + μ2` are ordered in two cones.
pub(crate) fn vertex_2d(n: usize, s: f64) -> Vec<RefPoint> {
    let radial = gauss_jacobi(n, 0.0, 3.0 - 2.0 * s);
    let gl = gauss_legendre(n);
    let mut out = Vec::with_capacity(2 * n.pow(4));
    for (rho, wr) in radial.iter() {
        // measure ρ³ t over Jacobi weight ρ^{3−2s}
        let w0 = wr * rho.powf(2.0 * s);
        for (b, wb) in gl.iter() {
            let l = [rho * (1.0 - b), rho * b];
            for (t, wt) in gl.iter() {
                for (c, wc) in gl.iter() {
                    let m = [rho * t * (1.0 - c), rho * t * c];
                    let w = w0 * wb * wt * wc * t;
                    let bx = [1.0 - l[0] - l[1], l[0], l[1]];
                    let by = [1.0 - m[0] - m[1], m[0], m[1]];
                    out.push(RefPoint { lx: bx, ly: by, w });
                    out.push(RefPoint { lx: by, ly: bx, w });
                }
            }
        }
    }
    out
}
