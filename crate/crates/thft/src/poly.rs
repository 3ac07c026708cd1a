//! Sparse multivariate polynomials over the center-of-mass coordinates.
//!
//! Variables are `y^a_i` (real), `w^a_j`, `w̄^a_j` (complex, treated as independent)
//! and the formal inverse scales `1/T_a`. Vertex and coordinate indices are 1-based.

use crate::scalar::Coeff;
use num_rational::BigRational;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Y { vertex: u8, coord: u8 },
    W { vertex: u8, coord: u8 },
    Wb { vertex: u8, coord: u8 },
    InvT { edge: u8 },
}

impl Var {
    pub fn y(vertex: usize, coord: usize) -> Self {
        Var::Y { vertex: vertex as u8, coord: coord as u8 }
    }
    pub fn w(vertex: usize, coord: usize) -> Self {
        Var::W { vertex: vertex as u8, coord: coord as u8 }
    }
    pub fn wb(vertex: usize, coord: usize) -> Self {
        Var::Wb { vertex: vertex as u8, coord: coord as u8 }
    }
    pub fn inv_t(edge: usize) -> Self {
        Var::InvT { edge: edge as u8 }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::Y { vertex, coord } => write!(f, "y{vertex}_{coord}"),
            Var::W { vertex, coord } => write!(f, "w{vertex}_{coord}"),
            Var::Wb { vertex, coord } => write!(f, "wb{vertex}_{coord}"),
            Var::InvT { edge } => write!(f, "invT{edge}"),
        }
    }
}

/// Sorted list of (variable, exponent) with positive exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0.iter().find(|(w, _)| *w == v).map_or(0, |&(_, e)| e)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = self.0[i];
            let (b, eb) = other.0[j];
            if a < b {
                out.push((a, ea));
                i += 1;
            } else if b < a {
                out.push((b, eb));
                j += 1;
            } else {
                out.push((a, ea + eb));
                i += 1;
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Returns `(exponent, monomial with v removed)`.
    pub fn split_off(&self, v: Var) -> (u32, Monomial) {
        let e = self.exponent(v);
        let rest = self.0.iter().copied().filter(|(w, _)| *w != v).collect();
        (e, Monomial(rest))
    }

    fn lower(&self, v: Var) -> Option<(u32, Monomial)> {
        let e = self.exponent(v);
        if e == 0 {
            return None;
        }
        let rest = self
            .0
            .iter()
            .filter_map(|&(w, ew)| {
                if w == v {
                    (ew > 1).then_some((w, ew - 1))
                } else {
                    Some((w, ew))
                }
            })
            .collect();
        Some((e, Monomial(rest)))
    }
}

/// Polynomial with canonical (sorted, zero-free) term map.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<C: Coeff> {
    terms: BTreeMap<Monomial, C>,
}

pub type ExactPoly = Poly<BigRational>;

impl<C: Coeff> Default for Poly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn var(v: Var) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(v), C::one());
        p
    }

    pub fn term(m: Monomial, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&(-C::one()))
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative treating every variable as independent.
    pub fn derivative(&self, v: Var) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if let Some((e, rest)) = m.lower(v) {
                out.add_term(rest, c.clone() * C::from_i64(e as i64));
            }
        }
        out
    }

    /// Replaces `v` by the polynomial `value`.
    pub fn substitute(&self, v: Var, value: &Self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(v);
            let base = Self::term(rest, c.clone());
            out = out.add(&base.mul(&value.pow(e)));
        }
        out
    }

    /// Replaces every variable `v` with `image(v)` at once; `None` keeps `v`.
    pub fn substitute_all(&self, image: impl Fn(Var) -> Option<Self>) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut t = Self::constant(c.clone());
            for &(v, e) in &m.0 {
                let value = image(v).unwrap_or_else(|| Self::var(v));
                t = t.mul(&value.pow(e));
            }
            out = out.add(&t);
        }
        out
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Evaluates by assigning a value to every variable.
    pub fn eval(&self, value: impl Fn(Var) -> C) -> C {
        let mut total = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in &m.0 {
                let x = value(v);
                for _ in 0..e {
                    t = t * x.clone();
                }
            }
            total = total + t;
        }
        total
    }

    /// Groups terms by the part of each monomial built from variables that satisfy `keep`;
    /// the remaining variables go into the returned coefficient polynomials.
    pub fn collect_by(&self, keep: impl Fn(Var) -> bool) -> BTreeMap<Monomial, Poly<C>> {
        let mut out: BTreeMap<Monomial, Poly<C>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (a, b): (Vec<_>, Vec<_>) = m.0.iter().partition(|(v, _)| keep(*v));
            out.entry(Monomial(a))
                .or_default()
                .add_term(Monomial(b), c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (v, e) in &m.0 {
                if *e == 1 {
                    write!(f, "*{v}")?;
                } else {
                    write!(f, "*{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}
