use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityFamily {
    /// `f(t) = β₀/(1+t)`.
    Rational,
    /// `f(t) = β₀ e^{−t}`.
    Exponential,
    Zero,
    /// `f ≡ β₀`. Does not vanish at infinity; kept for negative tests.
    Constant,
}

/// The perturbation `f(t)` of the asymptotically linear term, evaluated at
/// `t = |u|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub family: NonlinearityFamily,
    pub beta0: f64,
}

impl Nonlinearity {
    pub fn new(family: NonlinearityFamily, beta0: f64) -> Self {
        Nonlinearity { family, beta0 }
    }

    pub fn rational(beta0: f64) -> Self {
        Self::new(NonlinearityFamily::Rational, beta0)
    }

    pub fn exponential(beta0: f64) -> Self {
        Self::new(NonlinearityFamily::Exponential, beta0)
    }

    pub fn zero() -> Self {
        Self::new(NonlinearityFamily::Zero, 0.0)
    }

    pub fn f(&self, t: f64) -> f64 {
        let b = self.beta0;
        match self.family {
            NonlinearityFamily::Rational => b / (1.0 + t),
            NonlinearityFamily::Exponential => b * (-t).exp(),
            NonlinearityFamily::Zero => 0.0,
            NonlinearityFamily::Constant => b,
        }
    }

    /// `F(t) = ∫₀ᵗ f`.
    #[allow(non_snake_case)]
    pub fn F(&self, t: f64) -> f64 {
        let b = self.beta0;
        match self.family {
            NonlinearityFamily::Rational => b * t.ln_1p(),
            NonlinearityFamily::Exponential => -b * (-t).exp_m1(),
            NonlinearityFamily::Zero => 0.0,
            NonlinearityFamily::Constant => b * t,
        }
    }

    /// `f'(t)`.
    pub fn df(&self, t: f64) -> f64 {
        let b = self.beta0;
        match self.family {
            NonlinearityFamily::Rational => -b / ((1.0 + t) * (1.0 + t)),
            NonlinearityFamily::Exponential => -b * (-t).exp(),
            NonlinearityFamily::Zero | NonlinearityFamily::Constant => 0.0,
        }
    }
}

/// `f(t)`, rejecting `t < 0`.
pub fn f_eval(nl: &Nonlinearity, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::InvalidArgument(format!("f evaluated at t = {t} < 0")));
    }
    Ok(nl.f(t))
}

/// `F(t) = ∫₀ᵗ f`, rejecting `t < 0`.
#[allow(non_snake_case)]
pub fn F_eval(nl: &Nonlinearity, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::InvalidArgument(format!("F evaluated at t = {t} < 0")));
    }
    Ok(nl.F(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = Nonlinearity::rational(1.0);
        assert_eq!(f_eval(&r, 0.0).unwrap(), 1.0);
        assert!(f_eval(&r, 1e6).unwrap() < 1e-5);
        let z = Nonlinearity::zero();
        for t in [0.0, 1.0, 1e9] {
            assert_eq!(f_eval(&z, t).unwrap(), 0.0);
            assert_eq!(F_eval(&z, t).unwrap(), 0.0);
        }
        let r2 = Nonlinearity::rational(2.0);
        assert!((F_eval(&r2, 1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(f_eval(&r, -1.0).is_err());
        assert!(F_eval(&r, -1e-300).is_err());
    }

    #[test]
    fn derivative_matches_difference() {
        for nl in [Nonlinearity::rational(-1.5), Nonlinearity::exponential(0.7)] {
            for t in [0.3, 2.0, 10.0] {
                let h = 1e-6;
                let fd = (nl.f(t + h) - nl.f(t - h)) / (2.0 * h);
                assert!((fd - nl.df(t)).abs() < 1e-6, "{nl:?} t={t}");
            }
        }
    }

    #[test]
    fn antiderivative_at_zero() {
        for nl in [
            Nonlinearity::rational(3.0),
            Nonlinearity::exponential(-2.0),
            Nonlinearity::new(NonlinearityFamily::Constant, 1.0),
        ] {
            assert_eq!(nl.F(0.0), 0.0);
        }
    }
}
