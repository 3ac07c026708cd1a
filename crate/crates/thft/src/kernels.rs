//! Heat kernel, Gaussian `G_T`, the split kernel `E_T` and the holomorphic derivative rule.
//!
//! `E_T` is taken as `λ G_T`, with `λ` the operator `2 Σ_j [drop dz̄_j] ∂/∂z_j +
//! Σ_l [drop dx_l] ∂/∂x_l`. This gives `E_T = -(G_T / 2T) Σ_c coord_c · ι_{∂_c} vol`,
//! where `coord_c` is `x_l` or `z̄_j` and `vol = dx_1…dx_m dz̄_1…dz̄_n`.

use crate::error::{Result, ThftError};
use crate::exterior::{BiDegree, EdgePart, GenKind, SpaceSignature};
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::Real;
use num_complex::Complex;

/// A point of `R^m x C^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<R> {
    pub x: Vec<R>,
    pub z: Vec<Complex<R>>,
}

impl<R: Real> Point<R> {
    pub fn origin(sig: &SpaceSignature) -> Self {
        Point { x: vec![R::zero(); sig.m], z: vec![Complex::new(R::zero(), R::zero()); sig.n] }
    }

    pub fn new(x: Vec<R>, z: Vec<Complex<R>>) -> Self {
        Point { x, z }
    }

    pub fn fits(&self, sig: &SpaceSignature) -> bool {
        self.x.len() == sig.m && self.z.len() == sig.n
    }

    pub fn norm_sq(&self) -> R {
        let xs: R = self.x.iter().map(|&v| v * v).sum();
        let zs: R = self.z.iter().map(|v| v.norm_sqr()).sum();
        xs + zs
    }

    pub fn sub(&self, other: &Self) -> Self {
        Point {
            x: self.x.iter().zip(&other.x).map(|(&a, &b)| a - b).collect(),
            z: self.z.iter().zip(&other.z).map(|(&a, &b)| a - b).collect(),
        }
    }
}

/// Heat-kernel scales `T_1..T_k` with a regulator window.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ScaleVector<R> {
    pub t: Vec<R>,
    pub epsilon: R,
    pub l: R,
}

impl<R: Real> ScaleVector<R> {
    pub fn new(t: Vec<R>, epsilon: R, l: R) -> Result<Self> {
        if !(epsilon > R::zero() && epsilon <= l) {
            return Err(ThftError::BadWindow {
                epsilon: epsilon.to_f64().unwrap_or(f64::NAN),
                l: l.to_f64().unwrap_or(f64::NAN),
            });
        }
        if let Some(bad) = t.iter().find(|&&v| v < epsilon || v > l) {
            return Err(ThftError::InvalidRequest(format!(
                "scale {:?} outside the regulator window",
                bad
            )));
        }
        Ok(ScaleVector { t, epsilon, l })
    }

    pub fn sum(&self) -> R {
        self.t.iter().copied().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum KernelKind {
    EDeRham,
    EDolbeault,
    HeatKernel,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct KernelSplit {
    pub which: KernelKind,
    pub vertex_slot: usize,
}

impl KernelSplit {
    /// Bidegree of the kernel as a form on one factor; `None` when the piece is absent
    /// (`E^d` needs `m ≥ 1`, `E^∂̄` needs `n ≥ 1`).
    pub fn bidegree(&self, sig: &SpaceSignature) -> Option<BiDegree> {
        match self.which {
            KernelKind::EDeRham => (sig.m >= 1).then(|| BiDegree { de_rham: sig.m - 1, dolbeault: sig.n }),
            KernelKind::EDolbeault => (sig.n >= 1).then(|| BiDegree { de_rham: sig.m, dolbeault: sig.n - 1 }),
            KernelKind::HeatKernel => Some(BiDegree { de_rham: sig.m, dolbeault: sig.n }),
            KernelKind::Gaussian => Some(BiDegree { de_rham: 0, dolbeault: 0 }),
        }
    }
}

fn check_scale<R: Real>(t: R) -> Result<()> {
    if t > R::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(ThftError::NonPositiveScale(t.to_f64().unwrap_or(f64::NAN)))
    }
}

fn check_point<R: Real>(p: &Point<R>, sig: &SpaceSignature) -> Result<()> {
    if p.fits(sig) {
        Ok(())
    } else {
        Err(ThftError::InvalidRequest(format!(
            "point has {} real and {} complex coordinates, signature wants {} and {}",
            p.x.len(),
            p.z.len(),
            sig.m,
            sig.n
        )))
    }
}

/// `(4πT)^{-(2n+m)/2}`.
pub fn gaussian_normalization<R: Real>(t: R, sig: &SpaceSignature) -> R {
    let d = R::from_usize(sig.real_dim()).unwrap();
    (R::lit(4.0) * R::pi() * t).powf(-d / R::lit(2.0))
}

pub fn heat_kernel<R: Real>(p1: &Point<R>, p2: &Point<R>, t: R, sig: &SpaceSignature) -> Result<R> {
    check_point(p1, sig)?;
    check_point(p2, sig)?;
    gaussian_g(&p1.sub(p2), t, sig)
}

pub fn gaussian_g<R: Real>(q: &Point<R>, t: R, sig: &SpaceSignature) -> Result<R> {
    check_scale(t)?;
    check_point(q, sig)?;
    Ok(gaussian_normalization(t, sig) * (-q.norm_sq() / (R::lit(4.0) * t)).exp())
}

/// One summand of `E_T`: `value · (kept generators in order)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ECoefficient<R> {
    pub part: EdgePart,
    pub dropped: (GenKind, usize),
    pub kept: Vec<(GenKind, usize)>,
    pub value: Complex<R>,
}

/// Volume ordering `dx_1 … dx_m dz̄_1 … dz̄_n` on one factor.
pub fn volume_order(sig: &SpaceSignature) -> Vec<(GenKind, usize)> {
    let mut v: Vec<(GenKind, usize)> = (1..=sig.m).map(|i| (GenKind::Dy, i)).collect();
    v.extend((1..=sig.n).map(|j| (GenKind::Dwb, j)));
    v
}

/// Shape of `E_T` with the T-independent coordinate factor `sign · coord_c` per summand.
fn e_shape<R: Real>(q: &Point<R>, sig: &SpaceSignature) -> Vec<ECoefficient<R>> {
    let order = volume_order(sig);
    order
        .iter()
        .enumerate()
        .map(|(pos, &(kind, c))| {
            let coord = match kind {
                GenKind::Dy => Complex::new(q.x[c - 1], R::zero()),
                GenKind::Dwb => q.z[c - 1].conj(),
            };
            let sign = if pos % 2 == 1 { -R::one() } else { R::one() };
            let kept = order.iter().copied().filter(|&g| g != (kind, c)).collect();
            let part = match kind {
                GenKind::Dy => EdgePart::DeRham,
                GenKind::Dwb => EdgePart::Dolbeault,
            };
            ECoefficient { part, dropped: (kind, c), kept, value: coord * sign }
        })
        .collect()
}

/// The `m + n` coefficients of `E_T(q)`.
pub fn e_coefficients<R: Real>(q: &Point<R>, t: R, sig: &SpaceSignature) -> Result<Vec<ECoefficient<R>>> {
    let g = gaussian_g(q, t, sig)?;
    let factor = -g / (R::lit(2.0) * t);
    Ok(e_shape(q, sig)
        .into_iter()
        .map(|mut c| {
            c.value = c.value * factor;
            c
        })
        .collect())
}

/// `∂_z^I ∫_ε^L E_T(q) dT`, evaluated per coefficient by adaptive quadrature in `T`.
///
/// Each holomorphic derivative multiplies the integrand by `-z̄_j/(4T)`, so the result is
/// `(-1)^{|I|} ∫ z̄^I/(4T)^{|I|} E_T dT`. The mollified propagator is minus the `I = ∅` value.
pub fn propagator_derivative<R: Real>(
    q: &Point<R>,
    multi_index: &[u32],
    epsilon: R,
    l: R,
    sig: &SpaceSignature,
    opts: QuadOptions<R>,
) -> Result<Vec<ECoefficient<R>>> {
    check_point(q, sig)?;
    if !(epsilon > R::zero() && epsilon <= l) {
        return Err(ThftError::BadWindow {
            epsilon: epsilon.to_f64().unwrap_or(f64::NAN),
            l: l.to_f64().unwrap_or(f64::NAN),
        });
    }
    if multi_index.len() != sig.n {
        return Err(ThftError::InvalidRequest("multi-index length must equal n".into()));
    }
    let order: u32 = multi_index.iter().sum();
    let mut zbar_power = Complex::new(R::one(), R::zero());
    for (j, &p) in multi_index.iter().enumerate() {
        for _ in 0..p {
            zbar_power = zbar_power * (-q.z[j].conj());
        }
    }
    let r2 = q.norm_sq();
    let d = R::from_usize(sig.real_dim()).unwrap();
    let four = R::lit(4.0);
    let radial = integrate(
        |t: R| {
            (four * R::pi() * t).powf(-d / R::lit(2.0)) * (-r2 / (four * t)).exp()
                / (R::lit(2.0) * t * (four * t).powi(order as i32))
        },
        epsilon,
        l,
        opts,
    );
    if !radial.converged {
        return Err(ThftError::QuadratureNotConverged {
            value: radial.value.to_f64().unwrap_or(f64::NAN),
            error: radial.abs_error.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(e_shape(q, sig)
        .into_iter()
        .map(|mut c| {
            c.value = -c.value * zbar_power * radial.value;
            c
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(m: usize, n: usize) -> SpaceSignature {
        SpaceSignature::new(m, n, 2).unwrap()
    }

    #[test]
    fn coincident_points_value() {
        let s = sig(1, 0);
        let p = Point::<f64>::origin(&s);
        let v: f64 = heat_kernel(&p, &p, 1.0, &s).unwrap();
        assert!((v - 0.282_094_791_8).abs() < 1e-10);
    }

    #[test]
    fn gaussian_closed_form() {
        let s = sig(0, 1);
        let q = Point::new(vec![], vec![Complex::new(1.0, 0.0)]);
        let v = gaussian_g(&q, 0.25, &s).unwrap();
        let expected = (-1.0f64).exp() / std::f64::consts::PI;
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_scale() {
        let s = sig(1, 0);
        let p = Point::<f64>::origin(&s);
        assert!(gaussian_g(&p, 0.0, &s).is_err());
        assert!(gaussian_g(&p, -1.0, &s).is_err());
    }

    #[test]
    fn e_vanishes_at_origin() {
        let s = sig(2, 2);
        let p = Point::<f64>::origin(&s);
        for c in e_coefficients(&p, 0.7, &s).unwrap() {
            assert_eq!(c.value, Complex::new(0.0, 0.0));
        }
    }

    #[test]
    fn e_single_real_direction() {
        let s = sig(1, 0);
        let q = Point::<f64>::new(vec![0.3], vec![]);
        let c = e_coefficients(&q, 0.5, &s).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].kept.is_empty());
        let g = gaussian_g(&q, 0.5, &s).unwrap();
        assert!((c[0].value.re + 0.3 * g / 1.0).abs() < 1e-15);
    }
}
