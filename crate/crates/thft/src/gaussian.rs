//! Gaussian calculus for the product Gaussian on `Y^(k-1)`.
//!
//! The quadratic form in each coordinate direction is `qᵀ (M/4) q` with
//! `M = diag(1/T_1..1/T_{k-1}) + (1/T_k)·11ᵀ`. Real directions then have covariance
//! `2·M⁻¹` and complex directions have `⟨w w̄ᵀ⟩ = 4·M⁻¹`.

use crate::error::{Result, ThftError};
use crate::exterior::SpaceSignature;
use crate::poly::{ExactPoly, Monomial, Var};
use crate::quadrature::{integrate_box, QuadOptions};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// The matrix `M_T` for scales `T_1..T_k`; size `(k-1)×(k-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TMatrix<R> {
    t: Vec<R>,
}

impl<R: Real> TMatrix<R> {
    pub fn new(t: Vec<R>) -> Result<Self> {
        if t.is_empty() {
            return Err(ThftError::InvalidRequest("at least one scale is required".into()));
        }
        if let Some(&bad) = t.iter().find(|&&v| !(v > R::zero() && v.is_finite())) {
            return Err(ThftError::NonPositiveScale(bad.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(TMatrix { t })
    }

    pub fn k(&self) -> usize {
        self.t.len()
    }

    pub fn dim(&self) -> usize {
        self.t.len() - 1
    }

    pub fn scales(&self) -> &[R] {
        &self.t
    }

    pub fn total(&self) -> R {
        self.t.iter().copied().sum()
    }

    pub fn dense(&self) -> Vec<Vec<R>> {
        let d = self.dim();
        let b = R::one() / self.t[d];
        (0..d)
            .map(|a| (0..d).map(|c| if a == c { R::one() / self.t[a] + b } else { b }).collect())
            .collect()
    }
}

/// Inverse of `M_T`: diagonal `T_a - T_a²/ΣT`, off-diagonal `-T_a T_b/ΣT`.
pub fn sm_inverse<R: Real>(m: &TMatrix<R>) -> Vec<Vec<R>> {
    let total = m.total();
    let d = m.dim();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| {
                    let off = -m.t[a] * m.t[b] / total;
                    if a == b {
                        m.t[a] + off
                    } else {
                        off
                    }
                })
                .collect()
        })
        .collect()
}

/// `det(M_T⁻¹) = T_1⋯T_k / (T_1+⋯+T_k)`.
pub fn sm_det_inverse<R: Real>(m: &TMatrix<R>) -> R {
    let prod = m.t.iter().fold(R::one(), |acc, &v| acc * v);
    prod / m.total()
}

/// Mass of the unnormalized measure `exp(-Σ|q^a|²/4T_a - |Σq^a|²/4T_k) dq` on `Y^(k-1)`.
pub fn mu_mass<R: Real>(m: &TMatrix<R>, sig: &SpaceSignature) -> R {
    let half_d = R::lit(sig.m as f64 / 2.0 + sig.n as f64);
    let slots = R::from_usize(m.dim()).unwrap();
    (R::lit(4.0) * R::pi()).powf(slots * half_d) * sm_det_inverse(m).powf(half_d)
}

/// `∫ G^{(k)}_T dq = (4π ΣT)^{-(m/2+n)}`.
pub fn product_gaussian_mass<R: Real>(m: &TMatrix<R>, sig: &SpaceSignature) -> R {
    let half_d = R::lit(sig.m as f64 / 2.0 + sig.n as f64);
    (R::lit(4.0) * R::pi() * m.total()).powf(-half_d)
}

/// Moment of a `y`-monomial: exponents keyed by `(vertex, coord)`, both 1-based.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MomentRequest {
    pub exponents: BTreeMap<(usize, usize), u32>,
    pub normalized: bool,
}

impl MomentRequest {
    pub fn new(entries: &[((usize, usize), u32)], normalized: bool) -> Self {
        let mut exponents = BTreeMap::new();
        for &(key, e) in entries {
            if e > 0 {
                *exponents.entry(key).or_insert(0) += e;
            }
        }
        MomentRequest { exponents, normalized }
    }

    /// Rejects monomials containing holomorphic or scale variables.
    pub fn from_monomial(m: &Monomial, normalized: bool) -> Result<Self> {
        let mut entries = Vec::new();
        for &(v, e) in &m.0 {
            match v {
                Var::Y { vertex, coord } => entries.push(((vertex as usize, coord as usize), e)),
                other => {
                    return Err(ThftError::InvalidRequest(format!(
                        "moment requests take real coordinates only, got {other}"
                    )))
                }
            }
        }
        Ok(Self::new(&entries, normalized))
    }

    pub fn total_degree(&self) -> u32 {
        self.exponents.values().sum()
    }

    pub fn validate(&self, sig: &SpaceSignature) -> Result<()> {
        for &(a, i) in self.exponents.keys() {
            if a == 0 || a > sig.slots() || i == 0 || i > sig.m {
                return Err(ThftError::InvalidRequest(format!("variable y{a}_{i} out of range")));
            }
        }
        Ok(())
    }

    /// Exponent vector over vertices for coordinate direction `i`.
    fn direction(&self, i: usize, slots: usize) -> Vec<u32> {
        (1..=slots).map(|a| self.exponents.get(&(a, i)).copied().unwrap_or(0)).collect()
    }
}

/// Isserlis recursion for a centered real Gaussian with covariance `cov`.
pub struct RealWick<'a, R> {
    cov: &'a [Vec<R>],
    memo: HashMap<Vec<u32>, R>,
}

impl<'a, R: Real> RealWick<'a, R> {
    pub fn new(cov: &'a [Vec<R>]) -> Self {
        RealWick { cov, memo: HashMap::new() }
    }

    pub fn moment(&mut self, exps: &[u32]) -> R {
        let total: u32 = exps.iter().sum();
        if total == 0 {
            return R::one();
        }
        if total % 2 == 1 {
            return R::zero();
        }
        if let Some(v) = self.memo.get(exps) {
            return *v;
        }
        let i = exps.iter().position(|&e| e > 0).unwrap();
        let mut rest = exps.to_vec();
        rest[i] -= 1;
        let mut acc = R::zero();
        for j in 0..exps.len() {
            if rest[j] == 0 {
                continue;
            }
            let c = self.cov[i][j];
            if c == R::zero() {
                continue;
            }
            let mult = R::from_u32(rest[j]).unwrap();
            rest[j] -= 1;
            acc = acc + c * mult * self.moment(&rest);
            rest[j] += 1;
        }
        self.memo.insert(exps.to_vec(), acc);
        acc
    }
}

/// Moments `⟨w^a w̄^b⟩` of a centered complex Gaussian with `cov[i][j] = ⟨w_i w̄_j⟩`.
pub struct ComplexWick<'a, R> {
    cov: &'a [Vec<R>],
    memo: HashMap<(Vec<u32>, Vec<u32>), R>,
}

impl<'a, R: Real> ComplexWick<'a, R> {
    pub fn new(cov: &'a [Vec<R>]) -> Self {
        ComplexWick { cov, memo: HashMap::new() }
    }

    pub fn moment(&mut self, a: &[u32], b: &[u32]) -> R {
        let ta: u32 = a.iter().sum();
        let tb: u32 = b.iter().sum();
        if ta != tb {
            return R::zero();
        }
        if ta == 0 {
            return R::one();
        }
        let key = (a.to_vec(), b.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let i = a.iter().position(|&e| e > 0).unwrap();
        let mut ra = a.to_vec();
        ra[i] -= 1;
        let mut rb = b.to_vec();
        let mut acc = R::zero();
        for j in 0..b.len() {
            if rb[j] == 0 {
                continue;
            }
            let c = self.cov[i][j];
            if c == R::zero() {
                continue;
            }
            let mult = R::from_u32(rb[j]).unwrap();
            rb[j] -= 1;
            acc = acc + c * mult * self.moment(&ra, &rb);
            rb[j] += 1;
        }
        self.memo.insert(key, acc);
        acc
    }
}

/// A Wick moment written as a polynomial in covariance entries: integer multiplicities against
/// exponent vectors indexed by `i·d + j` for the entry `cov[i][j]`.
pub type CovPoly = Vec<(f64, Vec<u32>)>;

type CovMap = BTreeMap<Vec<u32>, u64>;

fn cov_times(acc: &mut CovMap, sub: &CovMap, entry: usize, mult: u64) {
    for (e, c) in sub {
        let mut e = e.clone();
        e[entry] += 1;
        *acc.entry(e).or_insert(0) += c * mult;
    }
}

fn real_expansion(exps: &[u32], memo: &mut HashMap<Vec<u32>, CovMap>) -> CovMap {
    let d = exps.len();
    let total: u32 = exps.iter().sum();
    if total == 0 {
        return CovMap::from([(vec![0; d * d], 1)]);
    }
    if total % 2 == 1 {
        return CovMap::new();
    }
    if let Some(v) = memo.get(exps) {
        return v.clone();
    }
    let i = exps.iter().position(|&e| e > 0).unwrap();
    let mut rest = exps.to_vec();
    rest[i] -= 1;
    let mut acc = CovMap::new();
    for j in 0..d {
        if rest[j] == 0 {
            continue;
        }
        let mult = u64::from(rest[j]);
        rest[j] -= 1;
        let sub = real_expansion(&rest, memo);
        rest[j] += 1;
        cov_times(&mut acc, &sub, i.min(j) * d + i.max(j), mult);
    }
    memo.insert(exps.to_vec(), acc.clone());
    acc
}

fn complex_expansion(a: &[u32], b: &[u32], memo: &mut HashMap<(Vec<u32>, Vec<u32>), CovMap>) -> CovMap {
    let d = a.len();
    let ta: u32 = a.iter().sum();
    if ta != b.iter().sum::<u32>() {
        return CovMap::new();
    }
    if ta == 0 {
        return CovMap::from([(vec![0; d * d], 1)]);
    }
    let key = (a.to_vec(), b.to_vec());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let i = a.iter().position(|&e| e > 0).unwrap();
    let mut ra = a.to_vec();
    ra[i] -= 1;
    let mut rb = b.to_vec();
    let mut acc = CovMap::new();
    for j in 0..d {
        if rb[j] == 0 {
            continue;
        }
        let mult = u64::from(rb[j]);
        rb[j] -= 1;
        let sub = complex_expansion(&ra, &rb, memo);
        rb[j] += 1;
        cov_times(&mut acc, &sub, i * d + j, mult);
    }
    memo.insert(key, acc.clone());
    acc
}

/// `⟨∏_a y_a^{exps_a}⟩` for a real Gaussian with symmetric covariance; entries are folded onto
/// `i ≤ j`.
pub fn real_wick_expansion(exps: &[u32]) -> CovPoly {
    real_expansion(exps, &mut HashMap::new()).into_iter().map(|(e, c)| (c as f64, e)).collect()
}

/// `⟨∏_a w_a^{a_a} w̄_a^{b_a}⟩` with `cov[i][j] = ⟨w_i w̄_j⟩`.
pub fn complex_wick_expansion(a: &[u32], b: &[u32]) -> CovPoly {
    complex_expansion(a, b, &mut HashMap::new()).into_iter().map(|(e, c)| (c as f64, e)).collect()
}

pub fn eval_cov_poly(poly: &CovPoly, cov: &[Vec<f64>]) -> f64 {
    let d = cov.len();
    poly.iter()
        .map(|(c, e)| {
            e.iter().enumerate().filter(|(_, &p)| p > 0).fold(*c, |acc, (idx, &p)| acc * cov[idx / d][idx % d].powi(p as i32))
        })
        .sum()
}

/// Real-direction covariance `2·M⁻¹`.
pub fn real_covariance<R: Real>(m: &TMatrix<R>) -> Vec<Vec<R>> {
    sm_inverse(m)
        .into_iter()
        .map(|row| row.into_iter().map(|v| v * R::lit(2.0)).collect())
        .collect()
}

/// Wick-theorem moment of `y^ν`. Normalized requests return the probability moment;
/// otherwise the result is multiplied by the mass of the unnormalized measure.
pub fn gaussian_moment<R: Real>(req: &MomentRequest, t: &[R], sig: &SpaceSignature) -> Result<R> {
    let m = TMatrix::new(t.to_vec())?;
    if m.k() != sig.k {
        return Err(ThftError::InvalidRequest(format!("expected {} scales, got {}", sig.k, m.k())));
    }
    req.validate(sig)?;
    let cov = real_covariance(&m);
    let mut wick = RealWick::new(&cov);
    let mut value = R::one();
    for i in 1..=sig.m {
        value = value * wick.moment(&req.direction(i, sig.slots()));
        wick.memo.clear();
    }
    if !req.normalized {
        value = value * mu_mass(&m, sig);
    }
    Ok(value)
}

/// Term `coeff · T^λ / (ΣT)^{|λ|/2}` of a normalized moment.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TTerm {
    pub lambda: Vec<u32>,
    #[serde(serialize_with = "ser_rational")]
    pub coeff: BigRational,
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

type TPoly = BTreeMap<Vec<u32>, BigRational>;

fn tpoly_mul(a: &TPoly, b: &TPoly) -> TPoly {
    let mut out = TPoly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let entry = out.entry(e).or_insert_with(BigRational::zero);
            *entry += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn tpoly_add_scaled(acc: &mut TPoly, p: &TPoly, s: &BigRational) {
    for (e, c) in p {
        let entry = acc.entry(e.clone()).or_insert_with(BigRational::zero);
        *entry += c * s;
    }
    acc.retain(|_, c| !c.is_zero());
}

/// Pair covariance `2(M⁻¹)_{ab}` times `ΣT`, as a homogeneous quadratic in `T_1..T_k`.
fn pair_poly(a: usize, b: usize, k: usize) -> TPoly {
    let mut p = TPoly::new();
    let two = BigRational::from_integer(2.into());
    if a == b {
        for c in 0..k {
            if c != a {
                let mut e = vec![0; k];
                e[a] += 1;
                e[c] += 1;
                p.insert(e, two.clone());
            }
        }
    } else {
        let mut e = vec![0; k];
        e[a] += 1;
        e[b] += 1;
        p.insert(e, -two);
    }
    p
}

fn tpoly_moment(exps: &[u32], k: usize, memo: &mut HashMap<Vec<u32>, TPoly>) -> TPoly {
    let total: u32 = exps.iter().sum();
    if total == 0 {
        let mut one = TPoly::new();
        one.insert(vec![0; k], BigRational::one());
        return one;
    }
    if total % 2 == 1 {
        return TPoly::new();
    }
    if let Some(v) = memo.get(exps) {
        return v.clone();
    }
    let i = exps.iter().position(|&e| e > 0).unwrap();
    let mut rest = exps.to_vec();
    rest[i] -= 1;
    let mut acc = TPoly::new();
    for j in 0..exps.len() {
        if rest[j] == 0 {
            continue;
        }
        let mult = BigRational::from_integer(rest[j].into());
        rest[j] -= 1;
        let sub = tpoly_moment(&rest, k, memo);
        rest[j] += 1;
        tpoly_add_scaled(&mut acc, &tpoly_mul(&pair_poly(i, j, k), &sub), &mult);
    }
    memo.insert(exps.to_vec(), acc.clone());
    acc
}

/// Exact T-dependence of the normalized moment of `y^ν` for `k` scales.
pub fn t_dependence(req: &MomentRequest, k: usize) -> Result<Vec<TTerm>> {
    if req.total_degree() % 2 == 1 {
        return Err(ThftError::InvalidRequest("odd total degree has zero moment".into()));
    }
    let slots = k.saturating_sub(1);
    if let Some(&(a, _)) = req.exponents.keys().find(|&&(a, _)| a == 0 || a > slots) {
        return Err(ThftError::InvalidRequest(format!("vertex {a} out of range for k={k}")));
    }
    let coords: Vec<usize> = {
        let mut c: Vec<usize> = req.exponents.keys().map(|&(_, i)| i).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut total = TPoly::new();
    total.insert(vec![0; k], BigRational::one());
    for i in coords {
        let exps: Vec<u32> = (1..=slots)
            .map(|a| req.exponents.get(&(a, i)).copied().unwrap_or(0))
            .chain(std::iter::once(0))
            .collect();
        let mut memo = HashMap::new();
        let dir = tpoly_moment(&exps[..slots], k, &mut memo);
        total = tpoly_mul(&total, &dir);
    }
    Ok(total.into_iter().map(|(lambda, coeff)| TTerm { lambda, coeff }).collect())
}

/// Evaluates a T-dependence expansion at concrete scales.
pub fn eval_t_terms(terms: &[TTerm], t: &[f64]) -> f64 {
    let total: f64 = t.iter().sum();
    terms
        .iter()
        .map(|term| {
            let num: f64 = term.lambda.iter().zip(t).map(|(&e, &v)| v.powi(e as i32)).product();
            let deg: u32 = term.lambda.iter().sum();
            rational_to_f64(&term.coeff) * num / total.powf(deg as f64 / 2.0)
        })
        .sum()
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// True when every λ respects the divisibility and degree constraints for `req`.
pub fn t_terms_respect_constraints(req: &MomentRequest, terms: &[TTerm]) -> bool {
    let deg = req.total_degree();
    terms.iter().all(|term| {
        term.lambda.iter().sum::<u32>() == deg
            && req.exponents.keys().all(|&(a, _)| term.lambda.get(a - 1).is_some_and(|&e| e >= 1))
    })
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Samples the normalized measure with a seeded ChaCha stream per chunk.
pub fn monte_carlo_moment(
    req: &MomentRequest,
    t: &[f64],
    sig: &SpaceSignature,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let m = TMatrix::new(t.to_vec())?;
    req.validate(sig)?;
    let d = m.dim();
    let cov = real_covariance(&m);
    let cov_mat = DMatrix::from_fn(d, d, |a, b| cov[a][b]);
    let chol = nalgebra::Cholesky::new(cov_mat)
        .ok_or_else(|| ThftError::InvalidRequest("covariance not positive definite".into()))?;
    let l = chol.l();
    let dirs: Vec<Vec<u32>> = (1..=sig.m).map(|i| req.direction(i, d)).collect();
    const CHUNK: usize = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let mut value = 1.0;
                for dir in &dirs {
                    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let y = &l * z;
                    for (a, &e) in dir.iter().enumerate() {
                        value *= y[a].powi(e as i32);
                    }
                }
                s1 += value;
                s2 += value * value;
            }
            (s1, s2, count)
        })
        .collect();
    let (s1, s2, n) = partial
        .iter()
        .fold((0.0, 0.0, 0usize), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
    let nf = n as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    let scale = if req.normalized { 1.0 } else { mu_mass(&m, sig) };
    Ok(McEstimate { mean: mean * scale, std_error: (var / nf).sqrt() * scale, samples: n })
}

/// Direct quadrature of the normalized moment, one coordinate direction at a time.
pub fn quadrature_moment(req: &MomentRequest, t: &[f64], sig: &SpaceSignature) -> Result<f64> {
    let m = TMatrix::new(t.to_vec())?;
    req.validate(sig)?;
    let d = m.dim();
    let dense = m.dense();
    let cov = real_covariance(&m);
    let opts = QuadOptions::default().with_rel_tol(1e-11).with_abs_tol(1e-15);
    let mut value = 1.0;
    for i in 1..=sig.m {
        let dir = req.direction(i, d);
        if dir.iter().all(|&e| e == 0) {
            continue;
        }
        let bounds: Vec<(f64, f64)> = (0..d)
            .map(|a| {
                let r = 12.0 * cov[a][a].sqrt();
                (-r, r)
            })
            .collect();
        let weight = |y: &[f64]| -> f64 {
            let mut q = 0.0;
            for a in 0..d {
                for b in 0..d {
                    q += y[a] * dense[a][b] * y[b];
                }
            }
            (-q / 4.0).exp()
        };
        let num = integrate_box(
            &|y: &[f64]| weight(y) * dir.iter().zip(y).map(|(&e, &v)| v.powi(e as i32)).product::<f64>(),
            &bounds,
            opts,
        );
        let den = integrate_box(&weight, &bounds, opts);
        value *= num.value / den.value;
    }
    if !req.normalized {
        value *= mu_mass(&m, sig);
    }
    Ok(value)
}

/// Exact residuals of the ζ or τ identities; all entries are expected to be zero.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResidual {
    /// `ζ G - (-(Σ_a w̄^a)/(4T_k)) G`, divided by `G`.
    pub main: ExactPoly,
    /// `(∂_a - ζ) G - (-w̄^a/(4T_a)) G` for `a = 1..k-1`, divided by `G`.
    pub corollary: Vec<ExactPoly>,
}

impl IdentityResidual {
    pub fn is_zero(&self) -> bool {
        self.main.is_zero() && self.corollary.iter().all(ExactPoly::is_zero)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Holomorphic,
    Real,
}

/// Exponent of `G^{(k)}` restricted to coordinate `c` of the chosen kind.
fn log_gaussian(dir: Direction, c: usize, t: &[BigRational]) -> ExactPoly {
    let k = t.len();
    let quarter = BigRational::new(1.into(), 4.into());
    let (lin, conj): (fn(usize, usize) -> Var, fn(usize, usize) -> Var) = match dir {
        Direction::Holomorphic => (Var::w, Var::wb),
        Direction::Real => (Var::y, Var::y),
    };
    let mut e = ExactPoly::zero();
    let mut sum_lin = ExactPoly::zero();
    let mut sum_conj = ExactPoly::zero();
    for a in 1..k {
        let term = ExactPoly::var(lin(a, c)).mul(&ExactPoly::var(conj(a, c)));
        e = e.sub(&term.scale(&(quarter.clone() / t[a - 1].clone())));
        sum_lin = sum_lin.add(&ExactPoly::var(lin(a, c)));
        sum_conj = sum_conj.add(&ExactPoly::var(conj(a, c)));
    }
    e.sub(&sum_lin.mul(&sum_conj).scale(&(quarter / t[k - 1].clone())))
}

fn identity_check(dir: Direction, c: usize, sig: &SpaceSignature, t: &[BigRational]) -> Result<IdentityResidual> {
    let k = t.len();
    if k != sig.k || k < 2 {
        return Err(ThftError::InvalidRequest("need k >= 2 scales matching the signature".into()));
    }
    if t.iter().any(|v| *v <= BigRational::zero()) {
        return Err(ThftError::InvalidRequest("scales must be positive".into()));
    }
    let (bound, lin, conj): (usize, fn(usize, usize) -> Var, fn(usize, usize) -> Var) = match dir {
        Direction::Holomorphic => (sig.n, Var::w, Var::wb),
        Direction::Real => (sig.m, Var::y, Var::y),
    };
    if c == 0 || c > bound {
        return Err(ThftError::InvalidRequest(format!("coordinate {c} out of range")));
    }
    // Holomorphic derivatives give 1/(4T); real ones 1/(2T) because y appears squared.
    let denom = match dir {
        Direction::Holomorphic => BigRational::from_integer(4.into()),
        Direction::Real => BigRational::from_integer(2.into()),
    };
    let exponent = log_gaussian(dir, c, t);
    let total: BigRational = t.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
    let partial: Vec<ExactPoly> = (1..k).map(|a| exponent.derivative(lin(a, c))).collect();
    let mut zeta = ExactPoly::zero();
    for a in 1..k {
        zeta = zeta.add(&partial[a - 1].scale(&(t[a - 1].clone() / total.clone())));
    }
    let mut sum_conj = ExactPoly::zero();
    for a in 1..k {
        sum_conj = sum_conj.add(&ExactPoly::var(conj(a, c)));
    }
    let main_rhs = sum_conj.scale(&(-BigRational::one() / (denom.clone() * t[k - 1].clone())));
    let main = zeta.sub(&main_rhs);
    let corollary = (1..k)
        .map(|a| {
            let lhs = partial[a - 1].sub(&zeta);
            let rhs = ExactPoly::var(conj(a, c)).scale(&(-BigRational::one() / (denom.clone() * t[a - 1].clone())));
            lhs.sub(&rhs)
        })
        .collect();
    Ok(IdentityResidual { main, corollary })
}

/// Exact check of `ζ^i G = -(Σ w̄^a_i)/(4T_k) G` and its corollary at rational scales.
pub fn zeta_identity_check(i: usize, sig: &SpaceSignature, t: &[BigRational]) -> Result<IdentityResidual> {
    if sig.n == 0 {
        return Err(ThftError::InvalidRequest("ζ needs n >= 1".into()));
    }
    identity_check(Direction::Holomorphic, i, sig, t)
}

/// Exact check of `τ^j G = -(Σ y^a_j)/(2T_k) G` and its corollary at rational scales.
pub fn tau_identity_check(j: usize, sig: &SpaceSignature, t: &[BigRational]) -> Result<IdentityResidual> {
    if sig.m == 0 {
        return Err(ThftError::InvalidRequest("τ needs m >= 1".into()));
    }
    identity_check(Direction::Real, j, sig, t)
}

/// A point of `Y^(k-1)` for numeric checks: `y[a][i]` and `w[a][j] = (re, im)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotPoint {
    pub y: Vec<Vec<f64>>,
    pub w: Vec<Vec<(f64, f64)>>,
}

/// `G^{(k)}_T` at a point of `Y^(k-1)`.
pub fn product_gaussian(p: &SlotPoint, t: &[f64], sig: &SpaceSignature) -> f64 {
    let k = t.len();
    let d = sig.real_dim() as f64;
    let mut log = 0.0;
    let mut norm = 1.0;
    for a in 0..k {
        norm *= (4.0 * std::f64::consts::PI * t[a]).powf(-d / 2.0);
    }
    for i in 0..sig.m {
        let mut s = 0.0;
        for a in 0..k - 1 {
            log -= p.y[a][i] * p.y[a][i] / (4.0 * t[a]);
            s += p.y[a][i];
        }
        log -= s * s / (4.0 * t[k - 1]);
    }
    for j in 0..sig.n {
        let (mut sr, mut si) = (0.0, 0.0);
        for a in 0..k - 1 {
            let (re, im) = p.w[a][j];
            log -= (re * re + im * im) / (4.0 * t[a]);
            sr += re;
            si += im;
        }
        log -= (sr * sr + si * si) / (4.0 * t[k - 1]);
    }
    norm * log.exp()
}

/// Largest finite-difference residual of the ζ identity and its corollary at `p`.
pub fn zeta_identity_numeric(i: usize, sig: &SpaceSignature, t: &[f64], p: &SlotPoint, h: f64) -> f64 {
    let k = t.len();
    let total: f64 = t.iter().sum();
    let g = product_gaussian(p, t, sig);
    // ∂/∂w = (∂/∂re - i ∂/∂im)/2 by central differences.
    let dw = |a: usize| -> (f64, f64) {
        let shifted = |dre: f64, dim: f64| {
            let mut q = p.clone();
            q.w[a][i - 1].0 += dre;
            q.w[a][i - 1].1 += dim;
            product_gaussian(&q, t, sig)
        };
        let dre = (shifted(h, 0.0) - shifted(-h, 0.0)) / (2.0 * h);
        let dim = (shifted(0.0, h) - shifted(0.0, -h)) / (2.0 * h);
        (0.5 * dre, -0.5 * dim)
    };
    let partials: Vec<(f64, f64)> = (0..k - 1).map(dw).collect();
    let zeta = partials
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |acc, (a, d)| (acc.0 + t[a] / total * d.0, acc.1 + t[a] / total * d.1));
    let (mut sr, mut si) = (0.0, 0.0);
    for a in 0..k - 1 {
        sr += p.w[a][i - 1].0;
        si -= p.w[a][i - 1].1;
    }
    let rhs = (-sr / (4.0 * t[k - 1]) * g, -si / (4.0 * t[k - 1]) * g);
    let mut worst = ((zeta.0 - rhs.0).powi(2) + (zeta.1 - rhs.1).powi(2)).sqrt();
    for a in 0..k - 1 {
        let lhs = (partials[a].0 - zeta.0, partials[a].1 - zeta.1);
        let (re, im) = p.w[a][i - 1];
        let r = (-re / (4.0 * t[a]) * g, im / (4.0 * t[a]) * g);
        worst = worst.max(((lhs.0 - r.0).powi(2) + (lhs.1 - r.1).powi(2)).sqrt());
    }
    worst
}

/// Largest finite-difference residual of the τ identity and its corollary at `p`.
pub fn tau_identity_numeric(j: usize, sig: &SpaceSignature, t: &[f64], p: &SlotPoint, h: f64) -> f64 {
    let k = t.len();
    let total: f64 = t.iter().sum();
    let g = product_gaussian(p, t, sig);
    let dy = |a: usize| -> f64 {
        let shifted = |d: f64| {
            let mut q = p.clone();
            q.y[a][j - 1] += d;
            product_gaussian(&q, t, sig)
        };
        (shifted(h) - shifted(-h)) / (2.0 * h)
    };
    let partials: Vec<f64> = (0..k - 1).map(dy).collect();
    let tau: f64 = partials.iter().enumerate().map(|(a, d)| t[a] / total * d).sum();
    let s: f64 = (0..k - 1).map(|a| p.y[a][j - 1]).sum();
    let mut worst = (tau + s / (2.0 * t[k - 1]) * g).abs();
    for a in 0..k - 1 {
        let lhs = partials[a] - tau;
        worst = worst.max((lhs + p.y[a][j - 1] / (2.0 * t[a]) * g).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn sm_examples() {
        let m = TMatrix::new(vec![1.0f64, 1.0, 1.0]).unwrap();
        let inv = sm_inverse(&m);
        let want = [[2.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, 2.0 / 3.0]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((inv[a][b] - want[a][b]).abs() < 1e-15);
            }
        }
        assert!((sm_det_inverse(&m) - 1.0 / 3.0).abs() < 1e-15);
        let m2 = TMatrix::new(vec![2.0f64, 3.0]).unwrap();
        assert!((sm_inverse(&m2)[0][0] - 6.0 / 5.0).abs() < 1e-15);
        assert!((sm_det_inverse(&m2) - 6.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn moment_examples() {
        let s = SpaceSignature::new(1, 0, 3).unwrap();
        let t = [1.0f64, 1.0, 1.0];
        let cross = gaussian_moment(&MomentRequest::new(&[((1, 1), 1), ((2, 1), 1)], true), &t, &s).unwrap();
        let square = gaussian_moment(&MomentRequest::new(&[((1, 1), 2)], true), &t, &s).unwrap();
        assert!((cross + 2.0 / 3.0).abs() < 1e-14);
        assert!((square - 4.0 / 3.0).abs() < 1e-14);
        let odd = gaussian_moment(&MomentRequest::new(&[((1, 1), 3)], true), &t, &s).unwrap();
        assert_eq!(odd, 0.0);
    }

    #[test]
    fn wick_expansions_match_recursions() {
        let real = vec![vec![1.3, -0.4, 0.2], vec![-0.4, 0.9, 0.1], vec![0.2, 0.1, 0.7]];
        let complex = vec![vec![1.1, 0.3, -0.2], vec![0.25, 0.8, 0.05], vec![-0.1, 0.4, 1.4]];
        for e in [[2u32, 0, 0], [1, 1, 2], [3, 1, 0], [2, 2, 2]] {
            let want = RealWick::new(&real).moment(&e);
            assert!((eval_cov_poly(&real_wick_expansion(&e), &real) - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
        for (a, b) in [([1u32, 0, 1], [0u32, 2, 0]), ([2, 1, 0], [1, 1, 1]), ([1, 1, 1], [1, 1, 1])] {
            let want = ComplexWick::new(&complex).moment(&a, &b);
            let got = eval_cov_poly(&complex_wick_expansion(&a, &b), &complex);
            assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn rejects_holomorphic_monomial() {
        let m = Monomial::var(Var::w(1, 1));
        assert!(MomentRequest::from_monomial(&m, true).is_err());
    }

    #[test]
    fn t_dependence_examples() {
        let cross = MomentRequest::new(&[((1, 1), 1), ((2, 1), 1)], true);
        let terms = t_dependence(&cross, 4).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].lambda, vec![1, 1, 0, 0]);
        let square = MomentRequest::new(&[((1, 1), 2)], true);
        let terms = t_dependence(&square, 3).unwrap();
        let lambdas: Vec<_> = terms.iter().map(|t| t.lambda.clone()).collect();
        assert_eq!(lambdas, vec![vec![1, 0, 1], vec![1, 1, 0]]);
        assert!(t_terms_respect_constraints(&square, &terms));
    }

    #[test]
    fn zeta_tau_small_exact() {
        let s = SpaceSignature::new(1, 1, 2).unwrap();
        let t = vec![rat(1, 3), rat(5, 2)];
        assert!(zeta_identity_check(1, &s, &t).unwrap().is_zero());
        assert!(tau_identity_check(1, &s, &t).unwrap().is_zero());
    }
}
