//! Analytic wheel weights `W^{k,(p)}_{ε<L}`: admissibility, algebraic vanishing, decorated
//! terms, exact Y-integration and ε→0 diagnostics.

use crate::error::{Result, ThftError};
use crate::exterior::{
    assemble_edge_case, assemble_product, assemble_wheel_integrand, formal_bidegree, wheel_parts, GenKind,
    SpaceSignature,
};
use crate::gaussian::McEstimate;
use crate::integrand::{
    build_term, integrate_scale_ladder, integrate_scales, monte_carlo_term, EdgeKind, EdgeSpec, IntegrandSet, Path,
    ScaleIntegral, ScaleQuadrature, SymbolicTerm, TestInput,
};
use crate::ladder::{assess, ConvergenceReport, LadderSpec};
use crate::quadrature::{integrate_box, QuadOptions};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct WheelData {
    pub sig: SpaceSignature,
    /// `p[α][j]`: holomorphic derivative order on edge `α+1` in direction `j+1`.
    pub p: Vec<Vec<u32>>,
}

impl WheelData {
    pub fn new(sig: SpaceSignature, p: Vec<Vec<u32>>) -> Result<Self> {
        if p.len() != sig.k || p.iter().any(|row| row.len() != sig.n) {
            return Err(ThftError::InvalidRequest(format!(
                "derivative matrix must be {}x{}",
                sig.k, sig.n
            )));
        }
        Ok(WheelData { sig, p })
    }

    /// No holomorphic derivatives.
    pub fn plain(sig: SpaceSignature) -> Self {
        WheelData { sig, p: vec![vec![0; sig.n]; sig.k] }
    }

    pub fn total_order(&self) -> u32 {
        self.p.iter().flatten().sum()
    }
}

/// Edges carrying `E^d` and the dropped coordinate on each of them, in ascending edge order.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct EdgeDecoration {
    pub s: Vec<usize>,
    pub f: Vec<usize>,
}

impl EdgeDecoration {
    pub fn new(s: Vec<usize>, f: Vec<usize>) -> Result<Self> {
        if s.len() != f.len() || s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ThftError::InvalidRequest("S must be strictly increasing with one index per edge".into()));
        }
        Ok(EdgeDecoration { s, f })
    }

    /// Indicator of the edges contributing a `y/T` factor.
    pub fn ell(&self, k: usize) -> Vec<u8> {
        (1..=k).map(|e| u8::from(self.s.contains(&e))).collect()
    }

    fn validate(&self, sig: &SpaceSignature) -> Result<()> {
        if self.s.iter().any(|&e| e == 0 || e > sig.k) || self.f.iter().any(|&i| i == 0 || i > sig.m) {
            return Err(ThftError::InvalidRequest("decoration out of range".into()));
        }
        Ok(())
    }
}

pub(crate) fn subsets_with_sizes(ground: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u64..(1u64 << ground))
        .map(|mask| (1..=ground).filter(|e| mask >> (e - 1) & 1 == 1).collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| s.len() >= lo && s.len() <= hi)
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// All `S ⊆ {1..k}` with `m ≤ |S| ≤ k-n`.
pub fn admissible_s(sig: &SpaceSignature) -> Vec<Vec<usize>> {
    if sig.k < sig.n {
        return Vec::new();
    }
    subsets_with_sizes(sig.k, sig.m, sig.k - sig.n)
}

/// Whether `S` lies inside the cardinality window.
pub fn in_window(sig: &SpaceSignature, s: &[usize]) -> bool {
    s.len() >= sig.m && s.len() + sig.n <= sig.k
}

/// Every map `S → {1..m}`, ascending edge order.
pub fn coordinate_maps(len: usize, range: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (1..=range).map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out
}

pub fn decorations(sig: &SpaceSignature) -> Vec<EdgeDecoration> {
    admissible_s(sig)
        .into_iter()
        .flat_map(|s| coordinate_maps(s.len(), sig.m).into_iter().map(move |f| EdgeDecoration { s: s.clone(), f }))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum VanishingMethod {
    /// Every S-term overflows a degree bound.
    DegreeCount,
    /// `k = m+n`: the edge-case form is exactly zero.
    EdgeCase,
    /// `k > m+n`: the weight must be evaluated.
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct VanishingReport {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub vanishes: bool,
    pub method: VanishingMethod,
    /// Number of S-terms inspected.
    pub terms_checked: usize,
    /// Whether the summed integrand assembled from all S-terms is exactly zero.
    pub integrand_zero: bool,
}

pub fn vanishes_algebraically(sig: &SpaceSignature) -> bool {
    sig.k <= sig.m + sig.n
}

/// Confirms the vanishing verdict with exact exterior algebra.
pub fn vanishing_proof(sig: &SpaceSignature) -> Result<VanishingReport> {
    let all = subsets_with_sizes(sig.k, 0, sig.k);
    let method = if sig.k < sig.m + sig.n {
        for s in &all {
            let parts = wheel_parts(sig, s);
            // A missing piece (E^d with m = 0, E^∂̄ with n = 0) is a zero term outright.
            if let Some(b) = formal_bidegree(sig, &parts) {
                if !b.overflows(sig) || !assemble_product(sig, &parts).is_zero() {
                    return Err(ThftError::InvalidRequest(format!("S-term {s:?} survives degree counting")));
                }
            }
        }
        VanishingMethod::DegreeCount
    } else if sig.k == sig.m + sig.n && sig.k >= 2 {
        if !assemble_edge_case(sig)?.is_zero() {
            return Err(ThftError::InvalidRequest("edge-case form is nonzero".into()));
        }
        VanishingMethod::EdgeCase
    } else if sig.k == sig.m + sig.n {
        // k = 1 = m + n: the single edge pulls back to the zero coordinate.
        VanishingMethod::EdgeCase
    } else {
        VanishingMethod::NotApplicable
    };
    let integrand_zero = assemble_wheel_integrand(sig).is_zero();
    if method != VanishingMethod::NotApplicable && !integrand_zero {
        return Err(ThftError::InvalidRequest("summed wheel integrand is nonzero".into()));
    }
    Ok(VanishingReport {
        m: sig.m,
        n: sig.n,
        k: sig.k,
        vanishes: method != VanishingMethod::NotApplicable,
        method,
        terms_checked: all.len(),
        integrand_zero,
    })
}

/// Edge specifications for decoration `dec` and holomorphic choice `g` on the complement.
pub fn edge_specs(wd: &WheelData, dec: &EdgeDecoration, g: &[usize]) -> Vec<EdgeSpec> {
    let mut g_iter = g.iter();
    (1..=wd.sig.k)
        .map(|e| {
            let dropped = match dec.s.iter().position(|&x| x == e) {
                Some(i) => (GenKind::Dy, dec.f[i]),
                None => (GenKind::Dwb, *g_iter.next().expect("one holomorphic index per complement edge")),
            };
            EdgeSpec { kind: EdgeKind::Propagator { dropped }, derivatives: wd.p[e - 1].clone() }
        })
        .collect()
}

/// Symbolic terms of one decoration, summed internally over `g: S^c → {1..n}`.
pub fn decoration_terms(wd: &WheelData, dec: &EdgeDecoration, input: &TestInput, path: Path) -> Vec<SymbolicTerm> {
    let sig = &wd.sig;
    let complement = sig.k - dec.s.len();
    if complement > 0 && sig.n == 0 {
        return Vec::new();
    }
    coordinate_maps(complement, sig.n)
        .into_iter()
        .filter_map(|g| build_term(sig, &edge_specs(wd, dec, &g), input, path))
        .collect()
}

pub(crate) fn check_input(wd: &WheelData, input: &TestInput) -> Result<()> {
    if input.sig != wd.sig {
        return Err(ThftError::SignatureMismatch);
    }
    if wd.sig.k < 2 {
        return Err(ThftError::InvalidRequest("numeric weights need k >= 2".into()));
    }
    Ok(())
}

pub(crate) fn compile(input: &TestInput, terms: &[SymbolicTerm]) -> IntegrandSet {
    let mut set = IntegrandSet::new(input);
    for t in terms {
        set.push(t);
    }
    set
}

/// Integrand of the full weight over `T ∈ [ε,L]^k` along the chosen path.
pub fn weight_integrand(wd: &WheelData, input: &TestInput, path: Path) -> Result<IntegrandSet> {
    check_input(wd, input)?;
    let mut terms = Vec::new();
    if !vanishes_algebraically(&wd.sig) {
        for dec in decorations(&wd.sig) {
            terms.extend(decoration_terms(wd, &dec, input, path));
        }
    }
    Ok(compile(input, &terms))
}

/// Integrand of every `S ⊆ {1..k}` together, including those outside the window.
pub fn undecomposed_integrand(wd: &WheelData, input: &TestInput) -> Result<IntegrandSet> {
    check_input(wd, input)?;
    let sig = &wd.sig;
    let mut terms = Vec::new();
    for s in subsets_with_sizes(sig.k, 0, sig.k) {
        if (!s.is_empty() && sig.m == 0) || (s.len() < sig.k && sig.n == 0) {
            continue;
        }
        for f in coordinate_maps(s.len(), sig.m) {
            let dec = EdgeDecoration { s: s.clone(), f };
            terms.extend(decoration_terms(wd, &dec, input, Path::Direct));
        }
    }
    Ok(compile(input, &terms))
}

/// One decorated term `W^{S,ℓ}` on the integrated-by-parts path.
pub fn weight_term(
    wd: &WheelData,
    dec: &EdgeDecoration,
    input: &TestInput,
    epsilon: f64,
    l: f64,
    q: &ScaleQuadrature,
) -> Result<ScaleIntegral> {
    weight_term_on(wd, dec, input, epsilon, l, q, Path::IntegratedByParts)
}

pub fn weight_term_on(
    wd: &WheelData,
    dec: &EdgeDecoration,
    input: &TestInput,
    epsilon: f64,
    l: f64,
    q: &ScaleQuadrature,
    path: Path,
) -> Result<ScaleIntegral> {
    check_input(wd, input)?;
    dec.validate(&wd.sig)?;
    if !(epsilon > 0.0 && epsilon <= l) {
        return Err(ThftError::BadWindow { epsilon, l });
    }
    if !in_window(&wd.sig, &dec.s) {
        return Ok(ScaleIntegral { value: 0.0, error: 0.0, splits: 0 });
    }
    let set = compile(input, &decoration_terms(wd, dec, input, path));
    if set.is_empty() {
        return Ok(ScaleIntegral { value: 0.0, error: 0.0, splits: 0 });
    }
    integrate_scales(&|t: &[f64]| set.evaluate(t), wd.sig.k, epsilon, l, q)
}

pub fn weight_total(wd: &WheelData, input: &TestInput, epsilon: f64, l: f64, q: &ScaleQuadrature) -> Result<ScaleIntegral> {
    weight_total_on(wd, input, epsilon, l, q, Path::IntegratedByParts)
}

pub fn weight_total_on(
    wd: &WheelData,
    input: &TestInput,
    epsilon: f64,
    l: f64,
    q: &ScaleQuadrature,
    path: Path,
) -> Result<ScaleIntegral> {
    if !(epsilon > 0.0 && epsilon <= l) {
        return Err(ThftError::BadWindow { epsilon, l });
    }
    let set = weight_integrand(wd, input, path)?;
    if set.is_empty() {
        return Ok(ScaleIntegral { value: 0.0, error: 0.0, splits: 0 });
    }
    integrate_scales(&|t: &[f64]| set.evaluate(t), wd.sig.k, epsilon, l, q)
}

/// Slot change `q = A q'` induced by renaming edge `α+1` to `α` cyclically.
pub fn rotation_slot_map(k: usize) -> Vec<Vec<i64>> {
    let slots = k - 1;
    (0..slots)
        .map(|a| (0..slots).map(|b| if a == 0 { -1 } else { i64::from(b + 1 == a) }).collect())
        .collect()
}

/// The same diagram with edge `α+1` renamed `α` (edge 1 becomes edge `k`): derivative rows
/// rotate and the test input is pulled back to the new center-of-mass slots.
pub fn rotate_labels(wd: &WheelData, input: &TestInput) -> Result<(WheelData, TestInput)> {
    check_input(wd, input)?;
    let k = wd.sig.k;
    let p = (0..k).map(|i| wd.p[(i + 1) % k].clone()).collect();
    Ok((WheelData { sig: wd.sig, p }, input.linear_pullback(&rotation_slot_map(k))?))
}

/// Sign relating a diagram to its [`rotate_labels`] image, given the form degree on each edge:
/// the slot change has determinant `(-1)^{k-1}` in each real direction, and the form on edge 1
/// moves past all the others.
pub fn rotation_sign(sig: &SpaceSignature, edge_degrees: &[usize]) -> f64 {
    let first = edge_degrees[0];
    let rest: usize = edge_degrees[1..].iter().sum();
    let exponent = (sig.k - 1) * sig.m + first * rest;
    if exponent.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Weights along `ε_j = L·2^{-j}` with Richardson extrapolation.
pub fn epsilon_limit(wd: &WheelData, input: &TestInput, spec: &LadderSpec, q: &ScaleQuadrature) -> Result<ConvergenceReport> {
    spec.validate()?;
    let eps = spec.epsilons();
    let set = weight_integrand(wd, input, Path::IntegratedByParts)?;
    if set.is_empty() {
        return Ok(assess(eps.into_iter().map(|e| (e, 0.0)).collect(), spec));
    }
    let values = integrate_scale_ladder(&|t: &[f64]| set.evaluate(t), wd.sig.k, spec.l, spec.rungs, q)?;
    Ok(assess(eps.into_iter().zip(values.iter().map(|v| v.value)).collect(), spec))
}

/// `∫_{[0,L]^k}` of the un-decomposed, pre-integration-by-parts integrand, split into the
/// `k` pyramids `T_d = max_c T_c`, with `T_d = L x²` and nested adaptive quadrature.
pub fn zero_cutoff_weight(wd: &WheelData, input: &TestInput, l: f64, opts: QuadOptions<f64>) -> Result<f64> {
    let set = undecomposed_integrand(wd, input)?;
    if set.is_empty() {
        return Ok(0.0);
    }
    let k = wd.sig.k;
    let mut total = 0.0;
    for d in 0..k {
        let f = |p: &[f64]| -> f64 {
            let x = p[0];
            let s = l * x * x;
            let mut t = Vec::with_capacity(k);
            let mut other = p[1..].iter();
            for c in 0..k {
                t.push(if c == d { s } else { s * other.next().unwrap() });
            }
            set.evaluate(&t) * s.powi(k as i32 - 1) * 2.0 * l * x
        };
        let r = integrate_box(&f, &vec![(0.0, 1.0); k], opts);
        if !r.converged {
            return Err(ThftError::QuadratureNotConverged { value: r.value, error: r.abs_error });
        }
        total += r.value;
    }
    Ok(total)
}

/// Monte-Carlo value of one decorated term from its pre-integration-by-parts integrand.
pub fn monte_carlo_weight_term(
    wd: &WheelData,
    dec: &EdgeDecoration,
    input: &TestInput,
    epsilon: f64,
    l: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_input(wd, input)?;
    dec.validate(&wd.sig)?;
    let terms = decoration_terms(wd, dec, input, Path::Direct);
    let mut mean = 0.0;
    let mut var = 0.0;
    for (i, t) in terms.iter().enumerate() {
        let e = monte_carlo_term(t, input, epsilon, l, None, samples, seed.wrapping_add(i as u64))?;
        mean += e.mean;
        var += e.std_error * e.std_error;
    }
    Ok(McEstimate { mean, std_error: var.sqrt(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(m: usize, n: usize, k: usize) -> SpaceSignature {
        SpaceSignature::new(m, n, k).unwrap()
    }

    #[test]
    fn admissible_counts() {
        assert_eq!(admissible_s(&sig(2, 1, 4)).len(), 10);
        assert_eq!(admissible_s(&sig(2, 1, 3)).len(), 3);
        assert_eq!(admissible_s(&sig(0, 2, 3)).len(), 4);
    }

    #[test]
    fn vanishing_examples() {
        let r = vanishing_proof(&sig(2, 1, 3)).unwrap();
        assert!(r.vanishes);
        assert_eq!(r.method, VanishingMethod::EdgeCase);
        assert!(vanishing_proof(&sig(1, 2, 3)).unwrap().vanishes);
        assert!(!vanishes_algebraically(&sig(1, 0, 2)));
        assert_eq!(vanishing_proof(&sig(2, 2, 3)).unwrap().method, VanishingMethod::DegreeCount);
    }
}
