//! Scale integrals `I_{N,k}(ε,L) = ∫_{[ε,L]^k} dT / (T_1+⋯+T_k)^N`, their AM-GM bounds and
//! limit verdicts.

use crate::error::{Result, ThftError};
use crate::quadrature::{integrate, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegulatorQuery {
    pub n: u32,
    pub k: u32,
    pub epsilon: f64,
    pub l: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum LimitVerdict {
    Finite,
    Unknown,
}

impl RegulatorQuery {
    pub fn new(n: u32, k: u32, epsilon: f64, l: f64) -> Result<Self> {
        let q = RegulatorQuery { n, k, epsilon, l };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(ThftError::InvalidRequest("cube dimension k must be positive".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= self.l && self.l.is_finite()) {
            return Err(ThftError::BadWindow { epsilon: self.epsilon, l: self.l });
        }
        if self.epsilon == 0.0 && self.n >= self.k {
            return Err(ThftError::LimitNotGuaranteed { n: self.n, k: self.k });
        }
        Ok(())
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, r: u32) -> f64 {
    factorial(n) / (factorial(r) * factorial(n - r))
}

/// A `k`-fold antiderivative of `s^{-N}`, up to polynomials of degree `< k`.
fn repeated_antiderivative(n: u32, k: u32, s: f64) -> f64 {
    if n > k {
        let denom: f64 = (1..=k).map(|j| j as f64 - n as f64).product();
        return s.powi(k as i32 - n as i32) / denom;
    }
    let power = k - n;
    if s == 0.0 {
        // `s^p ln s → 0` for `p ≥ 1`, and `n ≥ 1` whenever `p = 0` is reachable with ε = 0 excluded.
        return 0.0;
    }
    if n == 0 {
        return s.powi(k as i32) / factorial(k);
    }
    let sign = if (n - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / (factorial(n - 1) * factorial(power)) * s.powi(power as i32) * s.ln()
}

/// Closed form through the `k`-th forward difference of the repeated antiderivative.
pub fn i_integral_closed_form(q: &RegulatorQuery) -> Result<f64> {
    q.validate()?;
    if q.n == 0 {
        return Ok((q.l - q.epsilon).powi(q.k as i32));
    }
    let h = q.l - q.epsilon;
    let k = q.k;
    let mut acc = 0.0;
    for j in 0..=k {
        let sign = if (k - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * binomial(k, j) * repeated_antiderivative(q.n, k, k as f64 * q.epsilon + j as f64 * h);
    }
    Ok(acc)
}

/// Density of `T_1+⋯+T_k` for `T` uniform on `[ε,L]^k`, times `(L-ε)^k`.
fn sum_density(k: u32, epsilon: f64, h: f64, s: f64) -> f64 {
    let u = s - k as f64 * epsilon;
    let mut acc = 0.0;
    for j in 0..=k {
        let x = u - j as f64 * h;
        if x <= 0.0 {
            break;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(k, j) * x.powi(k as i32 - 1);
    }
    acc / factorial(k - 1)
}

/// Adaptive quadrature of the one-dimensional sum-density form, panel by panel.
pub fn i_integral_quadrature(q: &RegulatorQuery, opts: QuadOptions<f64>) -> Result<f64> {
    q.validate()?;
    let h = q.l - q.epsilon;
    if h == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for j in 0..q.k {
        let a = q.k as f64 * q.epsilon + j as f64 * h;
        let b = a + h;
        let r = integrate(|s: f64| sum_density(q.k, q.epsilon, h, s) * s.powi(-(q.n as i32)), a, b, opts);
        if !r.converged {
            return Err(ThftError::QuadratureNotConverged { value: r.value, error: r.abs_error });
        }
        total += r.value;
    }
    Ok(total)
}

/// `I_{N,k}(ε,L)`: closed forms for `k ≤ 3` and for `N = 0`, adaptive quadrature beyond.
pub fn i_integral(q: &RegulatorQuery) -> Result<f64> {
    if q.k <= 3 || q.n == 0 {
        i_integral_closed_form(q)
    } else {
        // the alternating density sum carries ~1e-14 relative noise for larger k
        i_integral_quadrature(q, QuadOptions::default().with_rel_tol(1e-10).with_abs_tol(1e-300))
    }
}

/// `k^{-N} (∫_ε^L T^{-N/k} dT)^k`.
pub fn amgm_bound(q: &RegulatorQuery) -> Result<f64> {
    q.validate()?;
    let a = q.n as f64 / q.k as f64;
    let one_dim = if q.n == q.k {
        (q.l / q.epsilon).ln()
    } else {
        (q.l.powf(1.0 - a) - q.epsilon.powf(1.0 - a)) / (1.0 - a)
    };
    Ok((q.k as f64).powi(-(q.n as i32)) * one_dim.powi(q.k as i32))
}

pub fn limit_verdict(n: u32, k: u32) -> LimitVerdict {
    if n < k {
        LimitVerdict::Finite
    } else {
        LimitVerdict::Unknown
    }
}
