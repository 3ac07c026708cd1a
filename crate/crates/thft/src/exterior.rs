//! Exact exterior algebra on the center-of-mass slots `Y^(k-1)` of `(R^m x C^n)^k`.
//!
//! Generators are `dy^a_i` and `dw̄^a_j` for `a` in `1..k`. The holomorphic volume
//! `∏ d^n w^a` is never materialized; it is carried as a flag and treated as a block of
//! degree `n(k-1)` placed to the left of every term.

use crate::error::{Result, ThftError};
use crate::poly::{ExactPoly, Var};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SpaceSignature {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl SpaceSignature {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(ThftError::InvalidSignature("k must be at least 1".into()));
        }
        if m > 16 || n > 16 || k > 64 {
            return Err(ThftError::InvalidSignature(format!(
                "dimensions too large: m={m} n={n} k={k}"
            )));
        }
        Ok(SpaceSignature { m, n, k })
    }

    /// Number of center-of-mass slots carrying forms.
    pub fn slots(&self) -> usize {
        self.k - 1
    }

    /// Real dimension of a single factor `R^m x C^n`.
    pub fn real_dim(&self) -> usize {
        self.m + 2 * self.n
    }

    pub fn holomorphic_volume_degree(&self) -> usize {
        self.n * self.slots()
    }

    /// Every generator of `Y^(k-1)` in canonical order.
    pub fn generators(&self) -> Vec<Generator> {
        let mut out = Vec::new();
        for a in 1..=self.slots() {
            for i in 1..=self.m {
                out.push(Generator::dy(a, i));
            }
        }
        for a in 1..=self.slots() {
            for j in 1..=self.n {
                out.push(Generator::dwb(a, j));
            }
        }
        out.sort();
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum GenKind {
    Dy,
    Dwb,
}

/// A 1-form generator; ordering is (kind, vertex, coord) with `dy` first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Generator {
    pub kind: GenKind,
    pub vertex: u8,
    pub coord: u8,
}

impl Generator {
    pub fn dy(vertex: usize, coord: usize) -> Self {
        Generator { kind: GenKind::Dy, vertex: vertex as u8, coord: coord as u8 }
    }

    pub fn dwb(vertex: usize, coord: usize) -> Self {
        Generator { kind: GenKind::Dwb, vertex: vertex as u8, coord: coord as u8 }
    }

    /// The scalar coordinate this generator differentiates.
    pub fn coordinate(&self) -> Var {
        match self.kind {
            GenKind::Dy => Var::y(self.vertex as usize, self.coord as usize),
            GenKind::Dwb => Var::wb(self.vertex as usize, self.coord as usize),
        }
    }

    pub fn fits(&self, sig: &SpaceSignature) -> bool {
        let a = self.vertex as usize;
        let c = self.coord as usize;
        let bound = match self.kind {
            GenKind::Dy => sig.m,
            GenKind::Dwb => sig.n,
        };
        a >= 1 && a <= sig.slots() && c >= 1 && c <= bound
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GenKind::Dy => write!(f, "dy{}_{}", self.vertex, self.coord),
            GenKind::Dwb => write!(f, "dwb{}_{}", self.vertex, self.coord),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BiDegree {
    pub de_rham: usize,
    pub dolbeault: usize,
}

impl BiDegree {
    pub fn of(gens: &[Generator]) -> Self {
        let de_rham = gens.iter().filter(|g| g.kind == GenKind::Dy).count();
        BiDegree { de_rham, dolbeault: gens.len() - de_rham }
    }

    /// True when a form of this bidegree cannot live on `Y^(k-1)`.
    pub fn overflows(&self, sig: &SpaceSignature) -> bool {
        self.de_rham > sig.m * sig.slots() || self.dolbeault > sig.n * sig.slots()
    }
}

/// Element of the exterior algebra with exact polynomial coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedForm {
    sig: SpaceSignature,
    holomorphic_volume: bool,
    terms: BTreeMap<Vec<Generator>, ExactPoly>,
}

/// Sign and merged list for `a ∧ b` on sorted generator lists, `None` on a repeat.
fn merge_sorted(a: &[Generator], b: &[Generator]) -> Option<(bool, Vec<Generator>)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut negative = false;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining a[i..].
            if (a.len() - i) % 2 == 1 {
                negative = !negative;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((negative, out))
}

impl MixedForm {
    pub fn zero(sig: SpaceSignature) -> Self {
        MixedForm { sig, holomorphic_volume: false, terms: BTreeMap::new() }
    }

    pub fn scalar(sig: SpaceSignature, coeff: ExactPoly) -> Self {
        let mut f = Self::zero(sig);
        f.add_term(Vec::new(), coeff);
        f
    }

    pub fn one(sig: SpaceSignature) -> Self {
        Self::scalar(sig, ExactPoly::one())
    }

    pub fn generator(sig: SpaceSignature, g: Generator) -> Result<Self> {
        if !g.fits(&sig) {
            return Err(ThftError::InvalidSignature(format!("generator {g} out of range")));
        }
        let mut f = Self::zero(sig);
        f.add_term(vec![g], ExactPoly::one());
        Ok(f)
    }

    /// Builds a monomial form from generators in the given (not necessarily sorted) order.
    pub fn monomial(sig: SpaceSignature, gens: &[Generator], coeff: ExactPoly) -> Result<Self> {
        let mut f = Self::scalar(sig, coeff);
        for g in gens {
            f = f.wedge(&Self::generator(sig, *g)?)?;
        }
        Ok(f)
    }

    /// Multiplies by the holomorphic volume block. Squares to zero.
    pub fn with_holomorphic_volume(&self) -> Self {
        if self.holomorphic_volume {
            return Self::zero(self.sig);
        }
        let mut out = Self::zero(self.sig);
        if self.is_zero() {
            return out;
        }
        out.holomorphic_volume = true;
        out.terms = self.terms.clone();
        out
    }

    pub fn signature(&self) -> SpaceSignature {
        self.sig
    }

    pub fn has_holomorphic_volume(&self) -> bool {
        self.holomorphic_volume
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Generator>, &ExactPoly)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, gens: &[Generator]) -> ExactPoly {
        self.terms.get(gens).cloned().unwrap_or_default()
    }

    fn add_term(&mut self, gens: Vec<Generator>, coeff: ExactPoly) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&gens) {
            Some(existing) => {
                let sum = existing.add(&coeff);
                if sum.is_zero() {
                    self.terms.remove(&gens);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(gens, coeff);
            }
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.sig != other.sig {
            return Err(ThftError::SignatureMismatch);
        }
        Ok(())
    }

    fn normalize_flag(&mut self) {
        if self.terms.is_empty() {
            self.holomorphic_volume = false;
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.holomorphic_volume != other.holomorphic_volume {
            return Err(ThftError::InvalidRequest(
                "sum of forms with and without the holomorphic volume".into(),
            ));
        }
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g.clone(), c.clone());
        }
        out.normalize_flag();
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.scale(&ExactPoly::constant(-BigRational::one()))
    }

    pub fn scale(&self, c: &ExactPoly) -> Self {
        let mut out = Self::zero(self.sig);
        out.holomorphic_volume = self.holomorphic_volume;
        for (g, p) in &self.terms {
            out.add_term(g.clone(), p.mul(c));
        }
        out.normalize_flag();
        out
    }

    /// Graded-commutative product; repeated generators annihilate.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zero(self.sig);
        if self.holomorphic_volume && other.holomorphic_volume {
            return Ok(out);
        }
        let hol_deg = self.sig.holomorphic_volume_degree();
        for (ga, ca) in &self.terms {
            for (gb, cb) in &other.terms {
                let Some((mut negative, merged)) = merge_sorted(ga, gb) else {
                    continue;
                };
                // Moving the volume block of `other` past the generators of `ga`.
                if other.holomorphic_volume && (ga.len() * hol_deg) % 2 == 1 {
                    negative = !negative;
                }
                let mut c = ca.mul(cb);
                if negative {
                    c = c.neg();
                }
                out.add_term(merged, c);
            }
        }
        out.holomorphic_volume = self.holomorphic_volume || other.holomorphic_volume;
        out.normalize_flag();
        Ok(out)
    }

    /// Interior product with a polynomial vector field.
    pub fn contract(&self, x: &PolyVectorField) -> Result<Self> {
        if self.sig != x.sig {
            return Err(ThftError::SignatureMismatch);
        }
        let mut out = Self::zero(self.sig);
        out.holomorphic_volume = self.holomorphic_volume;
        let flag_negative =
            self.holomorphic_volume && self.sig.holomorphic_volume_degree() % 2 == 1;
        for (gens, c) in &self.terms {
            for (pos, g) in gens.iter().enumerate() {
                let Some(component) = x.components.get(g) else {
                    continue;
                };
                let mut rest = gens.clone();
                rest.remove(pos);
                let mut coeff = c.mul(component);
                if (pos % 2 == 1) != flag_negative {
                    coeff = coeff.neg();
                }
                out.add_term(rest, coeff);
            }
        }
        out.normalize_flag();
        Ok(out)
    }

    /// Splits into homogeneous components keyed by bidegree.
    pub fn bidegree_partition(&self) -> BTreeMap<BiDegree, MixedForm> {
        let mut out: BTreeMap<BiDegree, MixedForm> = BTreeMap::new();
        for (g, c) in &self.terms {
            let part = out.entry(BiDegree::of(g)).or_insert_with(|| {
                let mut f = MixedForm::zero(self.sig);
                f.holomorphic_volume = self.holomorphic_volume;
                f
            });
            part.add_term(g.clone(), c.clone());
        }
        out
    }

    /// True iff every stored term overflows the available degrees (vacuous on zero).
    pub fn zero_by_degree(&self, sig: &SpaceSignature) -> bool {
        self.terms.keys().all(|g| BiDegree::of(g).overflows(sig))
    }

    /// Total degree in the `dy`/`dw̄` generators when homogeneous.
    pub fn degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(Vec::len);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }
}

impl fmt::Display for MixedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        if self.holomorphic_volume {
            write!(f, "[dw-volume] ")?;
        }
        for (idx, (g, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for gen in g {
                write!(f, "·{gen}")?;
            }
        }
        Ok(())
    }
}

/// `Σ c_g ∂_g` with `∂_g` dual to the generator `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField {
    sig: SpaceSignature,
    components: BTreeMap<Generator, ExactPoly>,
}

impl PolyVectorField {
    pub fn zero(sig: SpaceSignature) -> Self {
        PolyVectorField { sig, components: BTreeMap::new() }
    }

    pub fn basis(sig: SpaceSignature, g: Generator) -> Result<Self> {
        Self::zero(sig).with(g, ExactPoly::one())
    }

    pub fn with(mut self, g: Generator, c: ExactPoly) -> Result<Self> {
        if !g.fits(&self.sig) {
            return Err(ThftError::InvalidSignature(format!("generator {g} out of range")));
        }
        let entry = self.components.entry(g).or_default();
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.components.remove(&g);
        }
        Ok(self)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.sig != other.sig {
            return Err(ThftError::SignatureMismatch);
        }
        let mut out = self.clone();
        for (g, c) in &other.components {
            out = out.with(*g, c.clone())?;
        }
        Ok(out)
    }

    /// The Euler field of slot `a`: `Σ w̄^a_i ∂/∂w̄^a_i + Σ y^a_j ∂/∂y^a_j`.
    pub fn euler(sig: SpaceSignature, a: usize) -> Result<Self> {
        let mut x = Self::zero(sig);
        for i in 1..=sig.n {
            let g = Generator::dwb(a, i);
            x = x.with(g, ExactPoly::var(g.coordinate()))?;
        }
        for j in 1..=sig.m {
            let g = Generator::dy(a, j);
            x = x.with(g, ExactPoly::var(g.coordinate()))?;
        }
        Ok(x)
    }
}

/// Which piece of an edge kernel sits on an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EdgePart {
    /// `E^d`: a `dx` dropped from the volume, coefficient `x/T`.
    DeRham,
    /// `E^∂̄`: a `dz̄` dropped from the volume, coefficient `z̄/T`.
    Dolbeault,
    /// The full heat-kernel volume form, no coordinate coefficient.
    HeatKernel,
}

/// Linear pullback of a single-factor coordinate along edge `edge`.
///
/// Edge `a < k` maps to `-q^a`; the closing edge `k` maps to `Σ_b q^b`.
pub fn edge_pullback_terms(sig: &SpaceSignature, edge: usize) -> Vec<(usize, i64)> {
    if edge < sig.k {
        vec![(edge, -1)]
    } else {
        (1..=sig.slots()).map(|b| (b, 1)).collect()
    }
}

/// Pullback of the coordinate `x_coord` (kind `Dy`) or `z̄_coord` (kind `Dwb`).
pub fn pullback_coordinate(sig: &SpaceSignature, edge: usize, kind: GenKind, coord: usize) -> ExactPoly {
    let mut p = ExactPoly::zero();
    for (b, s) in edge_pullback_terms(sig, edge) {
        let v = match kind {
            GenKind::Dy => Var::y(b, coord),
            GenKind::Dwb => Var::wb(b, coord),
        };
        p = p.add(&ExactPoly::var(v).scale(&BigRational::from_integer(s.into())));
    }
    p
}

/// Pullback of the 1-form `dx_coord` or `dz̄_coord`.
pub fn pullback_one_form(sig: &SpaceSignature, edge: usize, kind: GenKind, coord: usize) -> MixedForm {
    let mut f = MixedForm::zero(*sig);
    for (b, s) in edge_pullback_terms(sig, edge) {
        let g = Generator { kind, vertex: b as u8, coord: coord as u8 };
        f.add_term(vec![g], ExactPoly::constant(BigRational::from_integer(s.into())));
    }
    f
}

/// Single-factor volume ordering `dx_1 … dx_m dz̄_1 … dz̄_n`.
fn volume_slots(sig: &SpaceSignature) -> Vec<(GenKind, usize)> {
    let mut v: Vec<(GenKind, usize)> = (1..=sig.m).map(|i| (GenKind::Dy, i)).collect();
    v.extend((1..=sig.n).map(|j| (GenKind::Dwb, j)));
    v
}

/// Pullback of `ι_{∂/∂g} vol` along `edge` for the single-factor generator `(kind, coord)`,
/// or of `vol` itself when `dropped` is `None`.
pub fn drop_volume_form(
    sig: &SpaceSignature,
    edge: usize,
    dropped: Option<(GenKind, usize)>,
) -> MixedForm {
    let slots = volume_slots(sig);
    let mut f = MixedForm::one(*sig);
    let mut negative = false;
    for (pos, &(kind, coord)) in slots.iter().enumerate() {
        if Some((kind, coord)) == dropped {
            negative = pos % 2 == 1;
            continue;
        }
        f = f.wedge(&pullback_one_form(sig, edge, kind, coord)).expect("same signature");
    }
    if negative {
        f.neg()
    } else {
        f
    }
}

/// Affine coefficient weights `(a, b)` for an edge form: the coefficient of the dropped
/// generator `c` becomes `(a·coord_c + b)/T`. `(1, 0)` gives the actual kernel; random
/// weights give generic coefficients of the same shape.
pub type EdgeWeights<'a> = &'a dyn Fn(usize, GenKind, usize) -> (BigRational, BigRational);

/// Edge form `Σ_c (a_c coord_c + b_c)/T_edge · ι_{∂_c} vol` restricted to `part`, pulled
/// back. The common Gaussian factor and the overall constant are omitted.
pub fn edge_form_weighted(
    sig: &SpaceSignature,
    edge: usize,
    part: EdgePart,
    weights: EdgeWeights<'_>,
) -> MixedForm {
    let kind = match part {
        EdgePart::HeatKernel => return drop_volume_form(sig, edge, None),
        EdgePart::DeRham => GenKind::Dy,
        EdgePart::Dolbeault => GenKind::Dwb,
    };
    let count = match kind {
        GenKind::Dy => sig.m,
        GenKind::Dwb => sig.n,
    };
    let inv_t = ExactPoly::var(Var::inv_t(edge));
    let mut f = MixedForm::zero(*sig);
    for c in 1..=count {
        let (a, b) = weights(edge, kind, c);
        let coeff = pullback_coordinate(sig, edge, kind, c)
            .scale(&a)
            .add(&ExactPoly::constant(b))
            .mul(&inv_t);
        let piece = drop_volume_form(sig, edge, Some((kind, c))).scale(&coeff);
        f = f.add(&piece).expect("same signature");
    }
    f
}

pub fn unit_weights(_: usize, _: GenKind, _: usize) -> (BigRational, BigRational) {
    (BigRational::one(), BigRational::zero())
}

pub fn edge_form(sig: &SpaceSignature, edge: usize, part: EdgePart) -> MixedForm {
    edge_form_weighted(sig, edge, part, &unit_weights)
}

/// Bidegree an edge part would have before any annihilation.
pub fn edge_part_bidegree(sig: &SpaceSignature, part: EdgePart) -> Option<BiDegree> {
    match part {
        EdgePart::DeRham => (sig.m >= 1).then(|| BiDegree { de_rham: sig.m - 1, dolbeault: sig.n }),
        EdgePart::Dolbeault => (sig.n >= 1).then(|| BiDegree { de_rham: sig.m, dolbeault: sig.n - 1 }),
        EdgePart::HeatKernel => Some(BiDegree { de_rham: sig.m, dolbeault: sig.n }),
    }
}

/// Edge parts for the wheel term labelled by `s` (edges in `s` carry `E^d`).
pub fn wheel_parts(sig: &SpaceSignature, s: &[usize]) -> Vec<EdgePart> {
    (1..=sig.k)
        .map(|e| if s.contains(&e) { EdgePart::DeRham } else { EdgePart::Dolbeault })
        .collect()
}

/// Edge parts for the anomaly term labelled by `s ⊆ {1..k-1}`; edge `k` is the heat kernel.
pub fn anomaly_parts(sig: &SpaceSignature, s: &[usize]) -> Vec<EdgePart> {
    (1..=sig.k)
        .map(|e| {
            if e == sig.k {
                EdgePart::HeatKernel
            } else if s.contains(&e) {
                EdgePart::DeRham
            } else {
                EdgePart::Dolbeault
            }
        })
        .collect()
}

/// Formal bidegree of the product of edge parts, counted before annihilation.
pub fn formal_bidegree(sig: &SpaceSignature, parts: &[EdgePart]) -> Option<BiDegree> {
    let mut total = BiDegree { de_rham: 0, dolbeault: 0 };
    for p in parts {
        let b = edge_part_bidegree(sig, *p)?;
        total.de_rham += b.de_rham;
        total.dolbeault += b.dolbeault;
    }
    Some(total)
}

/// Wedge of the edge forms in edge order.
pub fn assemble_product_weighted(
    sig: &SpaceSignature,
    parts: &[EdgePart],
    weights: EdgeWeights<'_>,
) -> MixedForm {
    let mut f = MixedForm::one(*sig);
    for (idx, part) in parts.iter().enumerate() {
        f = f
            .wedge(&edge_form_weighted(sig, idx + 1, *part, weights))
            .expect("same signature");
        if f.is_zero() {
            break;
        }
    }
    f
}

pub fn assemble_product(sig: &SpaceSignature, parts: &[EdgePart]) -> MixedForm {
    assemble_product_weighted(sig, parts, &unit_weights)
}

/// The wheel integrand summed over every `S ⊆ {1..k}`.
pub fn assemble_wheel_integrand(sig: &SpaceSignature) -> MixedForm {
    let mut total = MixedForm::zero(*sig);
    for mask in 0u64..(1u64 << sig.k) {
        let s: Vec<usize> = (1..=sig.k).filter(|e| mask >> (e - 1) & 1 == 1).collect();
        let term = assemble_product(sig, &wheel_parts(sig, &s));
        total = total.add(&term).expect("same signature");
    }
    total
}

/// Builds `θ ∧ (ι_{X^1} ⋯ ι_{X^{k-1}} ω)` for `k = m + n`, where `X^a` is the Euler
/// field of slot `a`, `θ = vol_w · ι_{ΣX}(∏_i Σ_a dw̄^a_i ∏_j Σ_a dy^a_j)` and
/// `ω = ∏_a (∏_i dw̄^a_i ∏_j dy^a_j)`.
pub fn assemble_edge_case(sig: &SpaceSignature) -> Result<MixedForm> {
    if sig.k != sig.m + sig.n || sig.k < 2 {
        return Err(ThftError::NotEdgeCase { m: sig.m, n: sig.n, k: sig.k });
    }
    let slots = sig.slots();
    let mut x_sum = PolyVectorField::zero(*sig);
    let mut fields = Vec::with_capacity(slots);
    for a in 1..=slots {
        let x = PolyVectorField::euler(*sig, a)?;
        x_sum = x_sum.add(&x)?;
        fields.push(x);
    }

    let summed = |g: fn(usize, usize) -> Generator, coord: usize| -> Result<MixedForm> {
        let mut f = MixedForm::zero(*sig);
        for a in 1..=slots {
            f = f.add(&MixedForm::generator(*sig, g(a, coord))?)?;
        }
        Ok(f)
    };
    let mut diag = MixedForm::one(*sig);
    for i in 1..=sig.n {
        diag = diag.wedge(&summed(Generator::dwb, i)?)?;
    }
    for j in 1..=sig.m {
        diag = diag.wedge(&summed(Generator::dy, j)?)?;
    }
    let theta = diag.contract(&x_sum)?.with_holomorphic_volume();

    let mut omega = MixedForm::one(*sig);
    for a in 1..=slots {
        for i in 1..=sig.n {
            omega = omega.wedge(&MixedForm::generator(*sig, Generator::dwb(a, i))?)?;
        }
        for j in 1..=sig.m {
            omega = omega.wedge(&MixedForm::generator(*sig, Generator::dy(a, j))?)?;
        }
    }
    let mut contracted = omega;
    for x in fields.iter().rev() {
        contracted = contracted.contract(x)?;
    }
    theta.wedge(&contracted)
}

/// Coefficient of the top generator monomial of `Y^(k-1)` (zero when absent).
pub fn top_coefficient(f: &MixedForm) -> ExactPoly {
    f.coefficient(&f.signature().generators())
}
