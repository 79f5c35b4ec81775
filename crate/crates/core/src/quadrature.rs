//! Gauss rules on `[0, 1]` and on the reference triangle.
//!
//! Nodes and weights come from the Golub–Welsch eigenvalue formulation of
//! the Jacobi recurrence and are cached per `(n, α, β)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrate `f` over `[a, b]` (plain Legendre rules only).
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = b - a;
        self.iter().map(|(t, w)| w * f(a + h * t)).sum::<f64>() * h
    }
}

type Key = (usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<Key, Arc<Rule>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Rule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss–Legendre rule with `n` points on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// `n`-point rule for `∫₀¹ f(t) (1−t)^alpha t^beta dt`, with `alpha, beta > −1`.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Arc<Rule> {
    assert!(n >= 1, "quadrature order must be positive");
    assert!(alpha > -1.0 && beta > -1.0, "Jacobi exponents must exceed -1");
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = cache().lock().unwrap().get(&key) {
        return rule.clone();
    }
    let rule = Arc::new(golub_welsch(n, alpha, beta));
    cache().lock().unwrap().insert(key, rule.clone());
    rule
}

fn golub_welsch(n: usize, a: f64, b: f64) -> Rule {
    let ab = a + b;
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        j[(k, k)] = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                let c = 2.0 * m + ab;
                4.0 * m * (m + a) * (m + b) * (m + ab) / (c * c * (c + 1.0) * (c - 1.0))
            };
            j[(k, k + 1)] = beta.sqrt();
            j[(k + 1, k)] = beta.sqrt();
        }
    }
    // total mass of (1-t)^a t^b on [0,1]
    let mass = (ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(ab + 2.0)).exp();
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let x = eig.eigenvalues[k];
            let v0 = eig.eigenvectors[(0, k)];
            (0.5 * (1.0 + x), mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Collapsed Gauss rule on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`
/// with `n²` points; weights sum to 1/2.
pub fn triangle_rule(n: usize) -> Vec<([f64; 2], f64)> {
    let radial = gauss_jacobi(n, 1.0, 0.0);
    let lateral = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (u, wu) in radial.iter() {
        for (v, wv) in lateral.iter() {
            out.push(([u, v * (1.0 - u)], wu * wv));
        }
    }
    out
}

/// Points per axis needed to integrate a function analytic outside a
/// neighbourhood of size `dist` around an element of diameter `diam` to
/// relative accuracy `tol` (Bernstein ellipse estimate).
pub fn order_for_distance(dist: f64, diam: f64, tol: f64, min: usize, max: usize) -> usize {
    if dist <= 0.0 {
        return max;
    }
    let d = 1.0 + 2.0 * dist / diam;
    let rho = d + (d * d - 1.0).sqrt();
    let n = ((1.0 / tol).ln() / (2.0 * rho.ln())).ceil() as usize;
    n.clamp(min, max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta;

    #[test]
    fn legendre_is_exact_on_polynomials() {
        for n in 1..12 {
            let r = gauss_legendre(n);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for k in 0..2 * n {
                let approx: f64 = r.iter().map(|(t, w)| w * t.powi(k as i32)).sum();
                assert!(
                    (approx - 1.0 / (k as f64 + 1.0)).abs() < 1e-14,
                    "n={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn jacobi_moments() {
        for &(a, b) in &[(0.0, 0.2), (1.0, 0.2), (2.0, -0.6), (1.0, 1.4), (0.0, 1.98)] {
            for n in [1, 3, 6, 10] {
                let r = gauss_jacobi(n, a, b);
                for k in 0..2 * n {
                    let approx: f64 = r.iter().map(|(t, w)| w * t.powi(k as i32)).sum();
                    let exact = beta(k as f64 + b + 1.0, a + 1.0);
                    assert!(
                        (approx - exact).abs() < 1e-13 * exact.max(1.0),
                        "a={a} b={b} n={n} k={k}: {approx} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn nodes_are_inside_and_sorted() {
        let r = gauss_jacobi(15, 1.0, -0.5);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.nodes[0] > 0.0 && *r.nodes.last().unwrap() < 1.0);
    }

    #[test]
    fn triangle_rule_monomials() {
        // ∫ ξ^p η^q over the reference triangle = p! q! / (p+q+2)!
        let fact = |k: usize| (1..=k).product::<usize>() as f64;
        let rule = triangle_rule(5);
        for p in 0..5 {
            for q in 0..5 - p {
                let approx: f64 = rule
                    .iter()
                    .map(|(x, w)| w * x[0].powi(p as i32) * x[1].powi(q as i32))
                    .sum();
                let exact = fact(p) * fact(q) / fact(p + q + 2);
                assert!((approx - exact).abs() < 1e-13, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn order_grows_as_pairs_approach() {
        let far = order_for_distance(10.0, 1.0, 1e-10, 3, 12);
        let near = order_for_distance(0.5, 1.0, 1e-10, 3, 12);
        assert!(far < near);
        assert_eq!(order_for_distance(0.0, 1.0, 1e-10, 3, 12), 12);
    }
}
