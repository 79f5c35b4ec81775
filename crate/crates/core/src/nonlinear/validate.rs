use serde::{Deserialize, Serialize};

use super::{Nonlinearity, NonlinearityFamily};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Smallest admissible upper end of the amplitude grid.
const MIN_T_MAX: f64 = 1e6;
const EPS_GRID: [f64; 4] = [1.0, 0.1, 0.01, 0.001];
const SUP_RADII: [f64; 3] = [1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBound {
    pub eps: f64,
    /// Fitted `a_ε = max_t (|f(t²)t| − ε t)`; `None` when it keeps growing
    /// with the grid.
    pub a_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityReport {
    pub nonlinearity: Nonlinearity,
    pub t_max: f64,
    pub f_at_t_max: f64,
    pub vanishing_threshold: f64,
    /// `(a, sup_{0≤t≤a} |f(t²)t|)`.
    pub local_sup: Vec<(f64, f64)>,
    pub eps_bounds: Vec<EpsilonBound>,
    /// Largest relative mismatch between `F` and a quadrature of `f`.
    pub antiderivative_error: f64,
    pub failures: Vec<String>,
}

impl NonlinearityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `0` followed by 400 log-spaced amplitudes from 1e-6 to 1e6.
pub fn default_t_grid() -> Vec<f64> {
    let n = 400;
    std::iter::once(0.0)
        .chain((0..n).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / (n - 1) as f64)))
        .collect()
}

fn fit_a_eps(nl: &Nonlinearity, grid: &[f64], eps: f64) -> f64 {
    grid.iter()
        .map(|&t| nl.f(t * t).abs() * t - eps * t)
        .fold(0.0, f64::max)
}

fn quad_f(nl: &Nonlinearity, t: f64) -> f64 {
    let rule = gauss_legendre(10);
    let pieces = 200;
    let mut acc = 0.0;
    for p in 0..pieces {
        let a = t * p as f64 / pieces as f64;
        let b = t * (p + 1) as f64 / pieces as f64;
        acc += rule.integrate(a, b, |x| nl.f(x));
    }
    acc
}

/// Empirical check of the growth and decay conditions on `f` over an
/// amplitude grid `t_grid ⊂ [0, T]`, `T ≥ 1e6`: `|f(t²)t|` bounded on
/// bounded sets, `|f(t²)t| ≤ ε t + a_ε` with finite `a_ε`, `f(T) → 0`,
/// `f(0) = β₀ ≠ 0` and `F' = f`.
pub fn validate_nonlinearity(nl: &Nonlinearity, t_grid: &[f64]) -> Result<NonlinearityReport> {
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument("t_grid must be finite and nonnegative".into()));
    }
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    if t_max < MIN_T_MAX {
        return Err(Error::InvalidArgument(format!(
            "t_grid must reach {MIN_T_MAX:e}, got {t_max:e}"
        )));
    }
    let mut failures = Vec::new();
    let scale = nl.beta0.abs().max(1.0);

    if nl.family != NonlinearityFamily::Zero && nl.beta0 == 0.0 {
        failures.push("beta0 must be nonzero for a nonzero family".into());
    }
    if nl.f(0.0) != nl.beta0 {
        failures.push(format!("f(0) = {} differs from beta0 = {}", nl.f(0.0), nl.beta0));
    }

    let threshold = 1e-3 * scale;
    let f_at_t_max = nl.f(t_max);
    if !(f_at_t_max.abs() <= threshold) {
        failures.push(format!(
            "f does not vanish at infinity: f({t_max:e}) = {f_at_t_max:e}"
        ));
    }

    let local_sup: Vec<(f64, f64)> = SUP_RADII
        .iter()
        .map(|&a| {
            let s = t_grid
                .iter()
                .filter(|&&t| t <= a)
                .map(|&t| nl.f(t * t).abs() * t)
                .fold(0.0, f64::max);
            (a, s)
        })
        .collect();
    for &(a, s) in &local_sup {
        if !s.is_finite() {
            failures.push(format!("sup of |f(t^2) t| over [0, {a}] is not finite"));
        }
    }

    let half: Vec<f64> = t_grid.iter().copied().filter(|&t| t <= 0.5 * t_max).collect();
    let eps_bounds: Vec<EpsilonBound> = EPS_GRID
        .iter()
        .map(|&eps| {
            let full = fit_a_eps(nl, t_grid, eps);
            let part = fit_a_eps(nl, &half, eps);
            let bounded = full.is_finite() && full <= 1.5 * part + 1e-12 * scale;
            EpsilonBound {
                eps,
                a_eps: bounded.then_some(full),
            }
        })
        .collect();
    for b in &eps_bounds {
        if b.a_eps.is_none() {
            failures.push(format!("no finite a_eps for eps = {}", b.eps));
        }
    }

    let mut antiderivative_error: f64 = 0.0;
    for t in [0.1, 1.0, 10.0, 100.0] {
        let q = quad_f(nl, t);
        let err = (nl.F(t) - q).abs() / q.abs().max(scale * 1e-12);
        antiderivative_error = antiderivative_error.max(err);
    }
    if antiderivative_error > 1e-8 {
        failures.push(format!(
            "F is not the antiderivative of f (relative error {antiderivative_error:.2e})"
        ));
    }

    let report = NonlinearityReport {
        nonlinearity: *nl,
        t_max,
        f_at_t_max,
        vanishing_threshold: threshold,
        local_sup,
        eps_bounds,
        antiderivative_error,
        failures,
    };
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::ValidationFailed(Box::new(report)))
    }
}
