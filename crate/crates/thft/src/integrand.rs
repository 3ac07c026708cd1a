//! Shared evaluation pipeline for wheel and anomaly weights.
//!
//! A decorated term is turned into polynomial pieces times the product Gaussian `G^{(k)}`
//! and the test-input damping. Each piece is integrated over `Y^(k-1)` by exact Gaussian
//! moments at every scale point; the scale integral uses tensor Gauss–Kronrod rules on
//! log-spaced panels.

use crate::error::{Result, ThftError};
use crate::exterior::{drop_volume_form, pullback_coordinate, top_coefficient, GenKind, Generator, MixedForm, SpaceSignature};
use crate::gaussian::{complex_wick_expansion, real_wick_expansion, CovPoly, McEstimate, TMatrix};
use crate::poly::{ExactPoly, Poly, Var};
use crate::quadrature::{GkRule, LogPanelRule};
use nalgebra::DMatrix;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

pub type FloatPoly = Poly<f64>;

/// One summand `poly · e^{-damping} · generators` of a test input.
#[derive(Clone, Debug, PartialEq)]
pub struct FormComponent {
    pub generators: Vec<Generator>,
    pub poly: ExactPoly,
}

/// Polynomial times centered Gaussian test form on `Y^(k-1)`.
///
/// The damping is `exp(-Σ_i y_iᵀ D_i y_i - Σ_j w̄_jᵀ D'_j w_j)` with one symmetric positive
/// definite precision matrix per coordinate direction. The dependence on the last
/// center-of-mass slot is a unit-mass factor and is not represented.
#[derive(Clone, Debug, PartialEq)]
pub struct TestInput {
    pub sig: SpaceSignature,
    pub components: Vec<FormComponent>,
    pub real_precision: Vec<Vec<Vec<f64>>>,
    pub complex_precision: Vec<Vec<Vec<f64>>>,
    /// Declared C^M smoothness; informational, the inputs are analytic.
    pub smoothness: u32,
}

fn diagonal(widths: &[f64]) -> Vec<Vec<f64>> {
    let d = widths.len();
    (0..d).map(|a| (0..d).map(|b| if a == b { 1.0 / (widths[a] * widths[a]) } else { 0.0 }).collect()).collect()
}

fn check_precision(p: &[Vec<f64>], slots: usize) -> Result<()> {
    if p.len() != slots || p.iter().any(|r| r.len() != slots) {
        return Err(ThftError::InvalidRequest(format!("precision matrices must be {slots}x{slots}")));
    }
    for a in 0..slots {
        for b in 0..slots {
            if (p[a][b] - p[b][a]).abs() > 1e-12 * (1.0 + p[a][b].abs()) || !p[a][b].is_finite() {
                return Err(ThftError::InvalidRequest("precision matrices must be symmetric".into()));
            }
        }
    }
    let m = DMatrix::from_fn(slots, slots, |a, b| p[a][b]);
    if slots > 0 && nalgebra::Cholesky::new(m).is_none() {
        return Err(ThftError::InvalidRequest("precision matrices must be positive definite".into()));
    }
    Ok(())
}

impl TestInput {
    /// Damping `exp(-(y^a_i)²/width²)` and `exp(-|w^a_j|²/width²)` with per-slot widths.
    pub fn new(
        sig: SpaceSignature,
        components: Vec<FormComponent>,
        real_widths: &[Vec<f64>],
        complex_widths: &[Vec<f64>],
    ) -> Result<Self> {
        let bad = real_widths.iter().chain(complex_widths).flatten().any(|&w| !(w > 0.0 && w.is_finite()));
        if bad {
            return Err(ThftError::InvalidRequest("damping widths must be positive".into()));
        }
        Self::with_precision(
            sig,
            components,
            real_widths.iter().map(|w| diagonal(w)).collect(),
            complex_widths.iter().map(|w| diagonal(w)).collect(),
        )
    }

    pub fn with_precision(
        sig: SpaceSignature,
        components: Vec<FormComponent>,
        real_precision: Vec<Vec<Vec<f64>>>,
        complex_precision: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let slots = sig.slots();
        if real_precision.len() != sig.m || complex_precision.len() != sig.n {
            return Err(ThftError::InvalidRequest("one precision matrix per coordinate direction".into()));
        }
        for p in real_precision.iter().chain(&complex_precision) {
            check_precision(p, slots)?;
        }
        for c in &components {
            if c.generators.iter().any(|g| !g.fits(&sig)) {
                return Err(ThftError::InvalidRequest("test-input generator out of range".into()));
            }
            for (mono, _) in c.poly.terms() {
                for &(v, _) in &mono.0 {
                    let ok = match v {
                        Var::Y { vertex, coord } => (vertex as usize) <= slots && (coord as usize) <= sig.m,
                        Var::W { vertex, coord } | Var::Wb { vertex, coord } => {
                            (vertex as usize) <= slots && (coord as usize) <= sig.n
                        }
                        Var::InvT { .. } => false,
                    };
                    if !ok {
                        return Err(ThftError::InvalidRequest(format!("test-input variable {v} out of range")));
                    }
                }
            }
        }
        Ok(TestInput { sig, components, real_precision, complex_precision, smoothness: u32::MAX })
    }

    /// Same widths everywhere.
    pub fn uniform(sig: SpaceSignature, components: Vec<FormComponent>, width: f64) -> Result<Self> {
        let slots = sig.slots();
        Self::new(sig, components, &vec![vec![width; slots]; sig.m], &vec![vec![width; slots]; sig.n])
    }

    /// A bare Gaussian times a fixed generator monomial.
    pub fn gaussian(sig: SpaceSignature, generators: Vec<Generator>, width: f64) -> Result<Self> {
        Self::uniform(sig, vec![FormComponent { generators, poly: ExactPoly::one() }], width)
    }

    pub fn zero_like(&self) -> Self {
        TestInput { components: Vec::new(), ..self.clone() }
    }

    /// `a·self + b·other`; both must share their damping.
    pub fn combine(&self, a: &BigRational, other: &Self, b: &BigRational) -> Result<Self> {
        if self.sig != other.sig
            || self.real_precision != other.real_precision
            || self.complex_precision != other.complex_precision
        {
            return Err(ThftError::InvalidRequest("combined inputs must share signature and damping".into()));
        }
        let mut components: Vec<FormComponent> =
            self.components.iter().map(|c| FormComponent { generators: c.generators.clone(), poly: c.poly.scale(a) }).collect();
        components.extend(
            other.components.iter().map(|c| FormComponent { generators: c.generators.clone(), poly: c.poly.scale(b) }),
        );
        Ok(TestInput { components, ..self.clone() })
    }

    /// Pullback along the slot change `q^a = Σ_b map[a][b] q'^b`, applied to every coordinate
    /// direction alike.
    pub fn linear_pullback(&self, map: &[Vec<i64>]) -> Result<Self> {
        let sig = self.sig;
        let slots = sig.slots();
        if map.len() != slots || map.iter().any(|r| r.len() != slots) {
            return Err(ThftError::InvalidRequest(format!("slot map must be {slots}x{slots}")));
        }
        let combo = |make: &dyn Fn(usize) -> Var, a: usize| {
            let mut p = ExactPoly::zero();
            for (b, &c) in map[a - 1].iter().enumerate() {
                if c != 0 {
                    p = p.add(&ExactPoly::var(make(b + 1)).scale(&BigRational::from_integer(c.into())));
                }
            }
            p
        };
        let image = |v: Var| match v {
            Var::Y { vertex, coord } => Some(combo(&|b| Var::y(b, coord as usize), vertex as usize)),
            Var::W { vertex, coord } => Some(combo(&|b| Var::w(b, coord as usize), vertex as usize)),
            Var::Wb { vertex, coord } => Some(combo(&|b| Var::wb(b, coord as usize), vertex as usize)),
            Var::InvT { .. } => None,
        };
        let mut total = MixedForm::zero(sig);
        for comp in &self.components {
            let mut form = MixedForm::scalar(sig, comp.poly.substitute_all(image));
            for g in &comp.generators {
                let mut one = MixedForm::zero(sig);
                for (b, &c) in map[g.vertex as usize - 1].iter().enumerate() {
                    if c != 0 {
                        let h = Generator { vertex: (b + 1) as u8, ..*g };
                        let coeff = ExactPoly::constant(BigRational::from_integer(c.into()));
                        one = one.add(&MixedForm::generator(sig, h)?.scale(&coeff))?;
                    }
                }
                form = form.wedge(&one)?;
            }
            total = total.add(&form)?;
        }
        let components =
            total.terms().map(|(gens, poly)| FormComponent { generators: gens.clone(), poly: poly.clone() }).collect();
        let congruence = |d: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..slots)
                .map(|a| {
                    (0..slots)
                        .map(|b| {
                            let mut acc = 0.0;
                            for c in 0..slots {
                                for e in 0..slots {
                                    acc += map[c][a] as f64 * d[c][e] * map[e][b] as f64;
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        };
        let mut out = Self::with_precision(
            sig,
            components,
            self.real_precision.iter().map(congruence).collect(),
            self.complex_precision.iter().map(congruence).collect(),
        )?;
        out.smoothness = self.smoothness;
        Ok(out)
    }

    pub fn max_poly_degree(&self) -> u32 {
        self.components.iter().map(|c| c.poly.max_degree()).max().unwrap_or(0)
    }
}

/// What sits on one edge of a decorated diagram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// A mollified propagator with the named generator dropped from the volume.
    Propagator { dropped: (GenKind, usize) },
    /// The full heat kernel at a fixed scale.
    HeatKernel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSpec {
    pub kind: EdgeKind,
    /// Holomorphic derivative orders acting on this edge, one per holomorphic direction.
    pub derivatives: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Path {
    /// Holomorphic factors moved onto the test input with the ζ-operators.
    IntegratedByParts,
    /// The integrand as assembled, before integration by parts.
    Direct,
}

/// Exterior pairing of a test-input component with the edge forms.
pub fn pairing_sign(sig: &SpaceSignature, generators: &[Generator], edges: &[EdgeSpec]) -> BigRational {
    let mut f = MixedForm::monomial(*sig, generators, ExactPoly::one()).expect("generators checked");
    for (idx, e) in edges.iter().enumerate() {
        let dropped = match e.kind {
            EdgeKind::Propagator { dropped } => Some(dropped),
            EdgeKind::HeatKernel => None,
        };
        f = f.wedge(&drop_volume_form(sig, idx + 1, dropped)).expect("same signature");
        if f.is_zero() {
            return BigRational::zero();
        }
    }
    let top = top_coefficient(&f);
    let mut value = BigRational::zero();
    for (mono, c) in top.terms() {
        debug_assert!(mono.degree() == 0);
        value += c.clone();
    }
    value
}

/// A polynomial in the `u_a = T_a / ΣT`, keyed by exponent vectors over slots.
type UPoly = BTreeMap<Vec<u32>, f64>;

fn upoly_mul(a: &UPoly, b: &UPoly) -> UPoly {
    let mut out = UPoly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert(0.0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0.0);
    out
}

/// A term before compilation: `constant · ∏ T_e^{t_powers[e]} · Σ_μ u^μ · E[piece_μ]`.
#[derive(Clone, Debug)]
pub struct SymbolicTerm {
    pub constant: f64,
    pub t_powers: Vec<i32>,
    pub pieces: Vec<(Vec<u32>, FloatPoly)>,
}

fn to_float(p: &ExactPoly) -> FloatPoly {
    p.map_coeffs(|c| c.to_f64().unwrap_or(f64::NAN))
}

/// `∂/∂w^a_j` of `poly · e^{-damping}`, divided by the damping.
fn hol_derivative(p: &FloatPoly, slot: usize, j: usize, input: &TestInput) -> FloatPoly {
    let mut out = p.derivative(Var::w(slot, j));
    let d = &input.complex_precision[j - 1];
    let mut lin = FloatPoly::zero();
    for b in 1..=input.sig.slots() {
        let c = d[b - 1][slot - 1];
        if c != 0.0 {
            lin = lin.add(&FloatPoly::var(Var::wb(b, j)).scale(&c));
        }
    }
    out = out.sub(&p.mul(&lin));
    out
}

/// Builds the symbolic term for a fully decorated diagram; `None` when it pairs to zero.
pub fn build_term(
    sig: &SpaceSignature,
    edges: &[EdgeSpec],
    input: &TestInput,
    path: Path,
) -> Option<SymbolicTerm> {
    let k = sig.k;
    let slots = sig.slots();
    assert_eq!(edges.len(), k);
    let mut constant = 1.0;
    for e in edges {
        if matches!(e.kind, EdgeKind::Propagator { .. }) {
            constant *= 0.5;
        }
        let order: u32 = e.derivatives.iter().sum();
        constant *= (-0.25f64).powi(order as i32);
    }
    let mut t_powers = vec![0i32; k];
    // Factors that stay as polynomials, and holomorphic factors `π^*w̄_j / T_e`.
    let mut kept = ExactPoly::one();
    let mut hol: Vec<(usize, usize)> = Vec::new();
    for (idx, e) in edges.iter().enumerate() {
        let edge = idx + 1;
        if let EdgeKind::Propagator { dropped: (kind, c) } = e.kind {
            match (kind, path) {
                (GenKind::Dy, _) | (GenKind::Dwb, Path::Direct) => {
                    kept = kept.mul(&pullback_coordinate(sig, edge, kind, c));
                    t_powers[idx] -= 1;
                }
                (GenKind::Dwb, Path::IntegratedByParts) => hol.push((edge, c)),
            }
        }
        for (j0, &p) in e.derivatives.iter().enumerate() {
            for _ in 0..p {
                match path {
                    Path::Direct => {
                        kept = kept.mul(&pullback_coordinate(sig, edge, GenKind::Dwb, j0 + 1));
                        t_powers[idx] -= 1;
                    }
                    Path::IntegratedByParts => hol.push((edge, j0 + 1)),
                }
            }
        }
    }
    let kept = to_float(&kept);

    // Adjoint operators acting on the test input, as Σ_a coef_a(u) ∂/∂w^a_j.
    let mut ops: BTreeMap<Vec<u32>, UPoly> = BTreeMap::new();
    let mut unit = UPoly::new();
    unit.insert(vec![0; slots], 1.0);
    ops.insert(vec![0; slots * sig.n.max(1)], unit);
    for &(edge, j) in &hol {
        let mut next: BTreeMap<Vec<u32>, UPoly> = BTreeMap::new();
        for a in 1..=slots {
            let mut coef = UPoly::new();
            let mut ua = vec![0; slots];
            ua[a - 1] = 1;
            coef.insert(ua, 4.0);
            if edge < k && a == edge {
                coef.insert(vec![0; slots], -4.0);
            }
            for (beta, c) in &ops {
                let mut beta2 = beta.clone();
                beta2[(j - 1) * slots + a - 1] += 1;
                let prod = upoly_mul(c, &coef);
                let entry = next.entry(beta2).or_default();
                for (e, v) in prod {
                    *entry.entry(e).or_insert(0.0) += v;
                }
            }
        }
        for v in next.values_mut() {
            v.retain(|_, c| *c != 0.0);
        }
        next.retain(|_, v| !v.is_empty());
        ops = next;
    }

    let mut pieces: BTreeMap<Vec<u32>, FloatPoly> = BTreeMap::new();
    let mut any = false;
    for comp in &input.components {
        let sign = pairing_sign(sig, &comp.generators, edges);
        if sign.is_zero() {
            continue;
        }
        any = true;
        let sign = sign.to_f64().unwrap();
        let base = to_float(&comp.poly);
        let mut cache: HashMap<Vec<u32>, FloatPoly> = HashMap::new();
        for (beta, coef) in &ops {
            let derived = derive_multi(&base, beta, input, &mut cache);
            if derived.is_zero() {
                continue;
            }
            let prod = kept.mul(&derived);
            for (mu, c) in coef {
                let entry = pieces.entry(mu.clone()).or_insert_with(FloatPoly::zero);
                *entry = entry.add(&prod.scale(&(c * sign)));
            }
        }
    }
    if !any {
        return None;
    }
    pieces.retain(|_, p| !p.is_zero());
    Some(SymbolicTerm { constant, t_powers, pieces: pieces.into_iter().collect() })
}

fn derive_multi(
    base: &FloatPoly,
    beta: &[u32],
    input: &TestInput,
    cache: &mut HashMap<Vec<u32>, FloatPoly>,
) -> FloatPoly {
    if beta.iter().all(|&b| b == 0) {
        return base.clone();
    }
    if let Some(p) = cache.get(beta) {
        return p.clone();
    }
    let slots = input.sig.slots();
    let idx = beta.iter().position(|&b| b > 0).unwrap();
    let mut lower = beta.to_vec();
    lower[idx] -= 1;
    let prev = derive_multi(base, &lower, input, cache);
    let (j, a) = (idx / slots + 1, idx % slots + 1);
    let out = hol_derivative(&prev, a, j, input);
    cache.insert(beta.to_vec(), out.clone());
    out
}

/// Direction-wise exponent layout: for each real direction the slot exponents of `y`, for each
/// holomorphic direction those of `w` and `w̄`.
#[derive(Clone, Debug)]
struct Monomial {
    coeff: f64,
    real: Vec<usize>,
    complex: Vec<usize>,
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    constant: f64,
    t_powers: Vec<i32>,
    pieces: Vec<(Vec<u32>, Vec<Monomial>)>,
}

/// Compiled terms sharing one table of per-direction moment patterns.
#[derive(Clone, Debug)]
pub struct IntegrandSet {
    sig: SpaceSignature,
    real_precision: Vec<Vec<Vec<f64>>>,
    complex_precision: Vec<Vec<Vec<f64>>>,
    real_patterns: Vec<Vec<Vec<u32>>>,
    complex_patterns: Vec<Vec<(Vec<u32>, Vec<u32>)>>,
    /// Moment of each pattern as a polynomial in the covariance entries.
    real_moments: Vec<Vec<CovPoly>>,
    complex_moments: Vec<Vec<CovPoly>>,
    terms: Vec<CompiledTerm>,
}

/// Values of every moment polynomial of one direction at covariance `cov`.
fn moment_values(polys: &[CovPoly], cov: &[Vec<f64>]) -> Vec<f64> {
    let d = cov.len();
    let max = polys.iter().flatten().flat_map(|(_, e)| e.iter().copied()).max().unwrap_or(0) as usize;
    let powers: Vec<Vec<f64>> = (0..d * d)
        .map(|idx| {
            let x = cov[idx / d][idx % d];
            let mut row = vec![1.0; max + 1];
            for p in 1..=max {
                row[p] = row[p - 1] * x;
            }
            row
        })
        .collect();
    polys
        .iter()
        .map(|poly| {
            poly.iter()
                .map(|(c, e)| e.iter().enumerate().fold(*c, |acc, (idx, &p)| acc * powers[idx][p as usize]))
                .sum()
        })
        .collect()
}

fn intern<T: Clone + PartialEq>(table: &mut Vec<T>, item: T) -> usize {
    if let Some(i) = table.iter().position(|x| *x == item) {
        return i;
    }
    table.push(item);
    table.len() - 1
}

impl IntegrandSet {
    pub fn new(input: &TestInput) -> Self {
        IntegrandSet {
            sig: input.sig,
            real_precision: input.real_precision.clone(),
            complex_precision: input.complex_precision.clone(),
            real_patterns: vec![Vec::new(); input.sig.m],
            complex_patterns: vec![Vec::new(); input.sig.n],
            real_moments: vec![Vec::new(); input.sig.m],
            complex_moments: vec![Vec::new(); input.sig.n],
            terms: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: &SymbolicTerm) {
        let slots = self.sig.slots();
        let mut pieces = Vec::new();
        for (mu, poly) in &term.pieces {
            let mut monos = Vec::new();
            'mono: for (mono, &c) in poly.terms() {
                let mut y = vec![vec![0u32; slots]; self.sig.m];
                let mut w = vec![vec![0u32; slots]; self.sig.n];
                let mut wb = vec![vec![0u32; slots]; self.sig.n];
                for &(v, e) in &mono.0 {
                    match v {
                        Var::Y { vertex, coord } => y[coord as usize - 1][vertex as usize - 1] += e,
                        Var::W { vertex, coord } => w[coord as usize - 1][vertex as usize - 1] += e,
                        Var::Wb { vertex, coord } => wb[coord as usize - 1][vertex as usize - 1] += e,
                        Var::InvT { .. } => unreachable!("scale symbols never reach the moment table"),
                    }
                }
                if y.iter().any(|v| v.iter().sum::<u32>() % 2 == 1)
                    || w.iter().zip(&wb).any(|(a, b)| a.iter().sum::<u32>() != b.iter().sum::<u32>())
                {
                    continue 'mono;
                }
                let real = y.into_iter().enumerate().map(|(i, e)| intern(&mut self.real_patterns[i], e)).collect();
                let complex = w
                    .into_iter()
                    .zip(wb)
                    .enumerate()
                    .map(|(j, (a, b))| intern(&mut self.complex_patterns[j], (a, b)))
                    .collect();
                monos.push(Monomial { coeff: c, real, complex });
            }
            if !monos.is_empty() {
                pieces.push((mu.clone(), monos));
            }
        }
        self.terms.push(CompiledTerm { constant: term.constant, t_powers: term.t_powers.clone(), pieces });
        for (patterns, moments) in self.real_patterns.iter().zip(&mut self.real_moments) {
            moments.extend(patterns[moments.len()..].iter().map(|p| real_wick_expansion(p)));
        }
        for (patterns, moments) in self.complex_patterns.iter().zip(&mut self.complex_moments) {
            moments.extend(patterns[moments.len()..].iter().map(|(a, b)| complex_wick_expansion(a, b)));
        }
    }

    /// Value of every term at the full scale vector `T_1..T_k`.
    pub fn evaluate_terms(&self, t: &[f64]) -> Vec<f64> {
        let slots = self.sig.slots();
        let state = CombinedGaussian::at(&self.sig, &self.real_precision, &self.complex_precision, t);
        let prefactor = state.prefactor;
        let real_values: Vec<Vec<f64>> =
            (0..self.sig.m).map(|i| moment_values(&self.real_moments[i], &state.real_cov[i])).collect();
        let complex_values: Vec<Vec<f64>> =
            (0..self.sig.n).map(|j| moment_values(&self.complex_moments[j], &state.complex_cov[j])).collect();
        let total: f64 = t.iter().sum();
        let u: Vec<f64> = t[..slots].iter().map(|&v| v / total).collect();

        self.terms
            .iter()
            .map(|term| {
                let mut acc = 0.0;
                for (mu, monos) in &term.pieces {
                    let mut weight = 1.0;
                    for (a, &e) in mu.iter().enumerate() {
                        weight *= u[a].powi(e as i32);
                    }
                    let mut s = 0.0;
                    for mono in monos {
                        let mut v = mono.coeff;
                        for (i, &p) in mono.real.iter().enumerate() {
                            v *= real_values[i][p];
                        }
                        for (j, &p) in mono.complex.iter().enumerate() {
                            v *= complex_values[j][p];
                        }
                        s += v;
                    }
                    acc += weight * s;
                }
                let mut scale = term.constant * prefactor;
                for (a, &p) in term.t_powers.iter().enumerate() {
                    scale *= t[a].powi(p);
                }
                acc * scale
            })
            .collect()
    }

    pub fn evaluate(&self, t: &[f64]) -> f64 {
        self.evaluate_terms(t).iter().sum()
    }
}

/// The product Gaussian times the test-input damping at fixed scales: its total mass
/// (including the `(4πT)` normalizations) and the per-direction covariances.
#[derive(Clone, Debug)]
pub struct CombinedGaussian {
    pub prefactor: f64,
    /// `⟨y yᵀ⟩` per real direction.
    pub real_cov: Vec<Vec<Vec<f64>>>,
    /// `⟨w w̄ᵀ⟩` per holomorphic direction.
    pub complex_cov: Vec<Vec<Vec<f64>>>,
}

impl CombinedGaussian {
    pub fn at(sig: &SpaceSignature, real_precision: &[Vec<Vec<f64>>], complex_precision: &[Vec<Vec<f64>>], t: &[f64]) -> Self {
        let slots = sig.slots();
        let dense = TMatrix::new(t.to_vec()).expect("positive scales").dense();
        let pi = std::f64::consts::PI;
        let half_d = sig.m as f64 / 2.0 + sig.n as f64;
        let mut prefactor: f64 = t.iter().map(|&ta| (4.0 * pi * ta).powf(-half_d)).product();
        let combined = |d: &[Vec<f64>]| DMatrix::from_fn(slots, slots, |a, b| dense[a][b] / 4.0 + d[a][b]);
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { (0..slots).map(|a| (0..slots).map(|b| m[(a, b)]).collect()).collect() };
        let mut real_cov = Vec::with_capacity(sig.m);
        for d in real_precision {
            let a = combined(d);
            prefactor *= pi.powf(slots as f64 / 2.0) / a.determinant().sqrt();
            real_cov.push(rows(&(a * 2.0).try_inverse().expect("positive definite")));
        }
        let mut complex_cov = Vec::with_capacity(sig.n);
        for d in complex_precision {
            let a = combined(d);
            prefactor *= pi.powi(slots as i32) / a.determinant();
            complex_cov.push(rows(&a.try_inverse().expect("positive definite")));
        }
        CombinedGaussian { prefactor, real_cov, complex_cov }
    }
}

/// Complex value of a polynomial at a point given as `y[i][a]` and `w[j][a]`.
fn eval_complex(p: &FloatPoly, y: &[Vec<f64>], w: &[Vec<Complex<f64>>]) -> Complex<f64> {
    let mut total = Complex::new(0.0, 0.0);
    for (mono, &c) in p.terms() {
        let mut v = Complex::new(c, 0.0);
        for &(var, e) in &mono.0 {
            let x = match var {
                Var::Y { vertex, coord } => Complex::new(y[coord as usize - 1][vertex as usize - 1], 0.0),
                Var::W { vertex, coord } => w[coord as usize - 1][vertex as usize - 1],
                Var::Wb { vertex, coord } => w[coord as usize - 1][vertex as usize - 1].conj(),
                Var::InvT { .. } => unreachable!("scale symbols never reach pointwise evaluation"),
            };
            v *= x.powu(e);
        }
        total += v;
    }
    total
}

fn cholesky_rows(cov: &[Vec<f64>]) -> DMatrix<f64> {
    let d = cov.len();
    nalgebra::Cholesky::new(DMatrix::from_fn(d, d, |a, b| cov[a][b])).expect("positive definite").l()
}

/// Monte-Carlo estimate of `∫ dT ∫_{Y^(k-1)} (term integrand)` with the free scales drawn
/// log-uniformly from `[ε,L]` and the point drawn from the combined Gaussian at those scales.
/// `fixed_last` pins the last scale (the heat-kernel edge) instead of sampling it.
pub fn monte_carlo_term(
    term: &SymbolicTerm,
    input: &TestInput,
    epsilon: f64,
    l: f64,
    fixed_last: Option<f64>,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(epsilon > 0.0 && epsilon < l) {
        return Err(ThftError::BadWindow { epsilon, l });
    }
    let sig = input.sig;
    let k = sig.k;
    let slots = sig.slots();
    let free = if fixed_last.is_some() { k - 1 } else { k };
    let span = (l / epsilon).ln();
    const CHUNK: usize = 1 << 12;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            let mut t = vec![0.0; k];
            for _ in 0..count {
                let mut jac = 1.0;
                for ta in t.iter_mut().take(free) {
                    *ta = epsilon * (span * rng.random::<f64>()).exp();
                    jac *= *ta * span;
                }
                if let Some(v) = fixed_last {
                    t[k - 1] = v;
                }
                let state = CombinedGaussian::at(&sig, &input.real_precision, &input.complex_precision, &t);
                let y: Vec<Vec<f64>> = state
                    .real_cov
                    .iter()
                    .map(|cov| {
                        let z = nalgebra::DVector::from_fn(slots, |_, _| rng.sample::<f64, _>(StandardNormal));
                        (cholesky_rows(cov) * z).iter().copied().collect()
                    })
                    .collect();
                let w: Vec<Vec<Complex<f64>>> = state
                    .complex_cov
                    .iter()
                    .map(|cov| {
                        let l = cholesky_rows(cov) * std::f64::consts::FRAC_1_SQRT_2;
                        let re = &l * nalgebra::DVector::from_fn(slots, |_, _| rng.sample::<f64, _>(StandardNormal));
                        let im = &l * nalgebra::DVector::from_fn(slots, |_, _| rng.sample::<f64, _>(StandardNormal));
                        re.iter().zip(im.iter()).map(|(&a, &b)| Complex::new(a, b)).collect()
                    })
                    .collect();
                let total: f64 = t.iter().sum();
                let mut acc = 0.0;
                for (mu, poly) in &term.pieces {
                    let mut weight = 1.0;
                    for (a, &e) in mu.iter().enumerate() {
                        weight *= (t[a] / total).powi(e as i32);
                    }
                    acc += weight * eval_complex(poly, &y, &w).re;
                }
                let mut scale = term.constant * state.prefactor * jac;
                for (a, &p) in term.t_powers.iter().enumerate() {
                    scale *= t[a].powi(p);
                }
                let v = acc * scale;
                s1 += v;
                s2 += v * v;
            }
            (s1, s2, count)
        })
        .collect();
    let (s1, s2, n) = partial.iter().fold((0.0, 0.0, 0usize), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2));
    let nf = n as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    Ok(McEstimate { mean, std_error: (var / nf).sqrt(), samples: n })
}

/// Tensor-grid options for scale integrals.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScaleQuadrature {
    pub rule: GkRule,
    /// Panels per octave on the first pass; doubled on refinement.
    pub splits: usize,
    pub max_splits: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for ScaleQuadrature {
    fn default() -> Self {
        ScaleQuadrature { rule: GkRule::G7K15, splits: 1, max_splits: 4, rel_tol: 1e-8, abs_tol: 1e-14 }
    }
}

/// Per-octave-band sums `(kronrod, gauss)` of `f` over the tensor grid, where a point falls in
/// band `j` when its smallest coordinate lies in octave `j`.
fn banded_sums(f: &(dyn Fn(&[f64]) -> f64 + Sync), rule: &LogPanelRule, dims: usize, bands: usize) -> Vec<(f64, f64)> {
    let n = rule.len();
    if dims == 0 {
        let v = f(&[]);
        let mut out = vec![(0.0, 0.0); bands.max(1)];
        out[0] = (v, v);
        return out;
    }
    let rest: usize = n.pow(dims as u32 - 1);
    let partial: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut out = vec![(0.0, 0.0); bands];
            let mut point = vec![0.0; dims];
            for r in 0..rest {
                let mut idx = r;
                let mut wk = rule.kronrod[first];
                let mut wg = rule.gauss[first];
                let mut band = rule.octave[first];
                point[0] = rule.nodes[first];
                for d in 1..dims {
                    let i = idx % n;
                    idx /= n;
                    point[d] = rule.nodes[i];
                    wk *= rule.kronrod[i];
                    wg *= rule.gauss[i];
                    band = band.max(rule.octave[i]);
                }
                let v = f(&point);
                out[band].0 += wk * v;
                out[band].1 += wg * v;
            }
            out
        })
        .collect();
    let mut total = vec![(0.0, 0.0); bands];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            t.0 += v.0;
            t.1 += v.1;
        }
    }
    total
}

/// Value and error estimate of a scale integral.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ScaleIntegral {
    pub value: f64,
    pub error: f64,
    pub splits: usize,
}

fn accept(v: f64, err: f64, q: &ScaleQuadrature) -> bool {
    err <= q.rel_tol * v.abs() + q.abs_tol
}

/// `∫_{[ε,L]^dims} f(T) dT` with octave panels, refined until the Kronrod–Gauss gap passes.
pub fn integrate_scales(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    dims: usize,
    epsilon: f64,
    l: f64,
    q: &ScaleQuadrature,
) -> Result<ScaleIntegral> {
    if !(epsilon > 0.0 && epsilon <= l) {
        return Err(ThftError::BadWindow { epsilon, l });
    }
    if epsilon == l {
        return Ok(ScaleIntegral { value: 0.0, error: 0.0, splits: q.splits });
    }
    let octaves = ((l / epsilon).log2().ceil() as usize).max(1);
    let mut splits = q.splits;
    loop {
        let rule = LogPanelRule::log_interval(epsilon, l, octaves * splits, q.rule);
        let s = banded_sums(f, &rule, dims, 1)[0];
        let err = (s.0 - s.1).abs();
        if accept(s.0, err, q) {
            return Ok(ScaleIntegral { value: s.0, error: err, splits });
        }
        if splits * 2 > q.max_splits {
            return Err(ThftError::QuadratureNotConverged { value: s.0, error: err });
        }
        splits *= 2;
    }
}

/// Scale integrals over `[L·2^-j, L]^dims` for `j = 1..=rungs`, all from one grid.
pub fn integrate_scale_ladder(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    dims: usize,
    l: f64,
    rungs: usize,
    q: &ScaleQuadrature,
) -> Result<Vec<ScaleIntegral>> {
    let mut splits = q.splits;
    loop {
        let rule = LogPanelRule::octaves(l, rungs, splits, q.rule);
        let bands = banded_sums(f, &rule, dims, rungs);
        let mut out = Vec::with_capacity(rungs);
        let (mut k, mut g) = (0.0, 0.0);
        let mut ok = true;
        for b in bands {
            k += b.0;
            g += b.1;
            let err = (k - g).abs();
            ok &= accept(k, err, q);
            out.push(ScaleIntegral { value: k, error: err, splits });
        }
        if ok {
            return Ok(out);
        }
        if splits * 2 > q.max_splits {
            let last = out.last().unwrap();
            return Err(ThftError::QuadratureNotConverged { value: last.value, error: last.error });
        }
        splits *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_matches_direct_scale_integral() {
        let f = |t: &[f64]| 1.0 / (t[0] + t[1]).powf(1.5);
        let q = ScaleQuadrature::default();
        let ladder = integrate_scale_ladder(&f, 2, 1.0, 6, &q).unwrap();
        let direct = integrate_scales(&f, 2, 1.0 / 64.0, 1.0, &q).unwrap();
        assert!((ladder[5].value - direct.value).abs() < 1e-9 * direct.value);
    }

    #[test]
    fn pairing_of_one_dimensional_wheel() {
        let sig = SpaceSignature::new(1, 0, 2).unwrap();
        let edges = vec![
            EdgeSpec { kind: EdgeKind::Propagator { dropped: (GenKind::Dy, 1) }, derivatives: vec![] },
            EdgeSpec { kind: EdgeKind::Propagator { dropped: (GenKind::Dy, 1) }, derivatives: vec![] },
        ];
        assert_eq!(pairing_sign(&sig, &[Generator::dy(1, 1)], &edges), BigRational::from_integer(1.into()));
        assert!(pairing_sign(&sig, &[], &edges).is_zero());
    }
}
