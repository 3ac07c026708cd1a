//! Anomaly weights `Θ` with the heat kernel `K_ε` on a distinguished edge: admissibility,
//! the ε-then-L double limit, the 2d BF framing coefficient and the two-wheel factor check.
//!
//! The distinguished edge is edge `k`. Other positions are reached through
//! [`distinguished_to_last`], which relabels the wheel cyclically.

use crate::error::{Result, ThftError};
use crate::exterior::{GenKind, SpaceSignature};
use crate::integrand::{
    build_term, integrate_scales, EdgeKind, EdgeSpec, IntegrandSet, Path, ScaleIntegral, ScaleQuadrature,
    SymbolicTerm, TestInput,
};
use crate::ladder::{assess, ConvergenceReport, LadderSpec, Verdict};
use crate::quadrature::{integrate, QuadOptions};
use crate::wheel::{check_input, compile, coordinate_maps, rotate_labels, rotation_sign, subsets_with_sizes, WheelData};

/// One decorated anomaly diagram; `s` and `g` index edges `1..k-1`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AnomalyWheel {
    pub sig: SpaceSignature,
    pub p: Vec<Vec<u32>>,
    pub s: Vec<usize>,
    /// Real coordinate dropped on each edge of `s`.
    pub f: Vec<usize>,
    /// Holomorphic coordinate dropped on each remaining non-distinguished edge, ascending.
    pub g: Vec<usize>,
}

impl AnomalyWheel {
    pub fn new(sig: SpaceSignature, p: Vec<Vec<u32>>, s: Vec<usize>, f: Vec<usize>, g: Vec<usize>) -> Result<Self> {
        WheelData::new(sig, p.clone())?;
        let k = sig.k;
        if k < 2 {
            return Err(ThftError::InvalidRequest("anomaly wheels need k >= 2".into()));
        }
        if s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&e| e == 0 || e >= k) {
            return Err(ThftError::InvalidRequest("S must be a strictly increasing subset of 1..k-1".into()));
        }
        if f.len() != s.len() || f.iter().any(|&c| c == 0 || c > sig.m) {
            return Err(ThftError::InvalidRequest("f must map S into 1..m".into()));
        }
        if g.len() != k - 1 - s.len() || g.iter().any(|&c| c == 0 || c > sig.n) {
            return Err(ThftError::InvalidRequest("g must map the complement of S into 1..n".into()));
        }
        Ok(AnomalyWheel { sig, p, s, f, g })
    }

    pub fn distinguished_edge(&self) -> usize {
        self.sig.k
    }

    pub fn family(&self) -> WheelData {
        WheelData { sig: self.sig, p: self.p.clone() }
    }
}

/// All `S ⊆ {1..k-1}` with `m ≤ |S| ≤ k-n-1`.
pub fn admissible_s_anomaly(sig: &SpaceSignature) -> Vec<Vec<usize>> {
    if sig.k < sig.n + 1 || sig.k < 1 {
        return Vec::new();
    }
    subsets_with_sizes(sig.k - 1, sig.m, sig.k - sig.n - 1)
}

pub fn in_anomaly_window(sig: &SpaceSignature, s: &[usize]) -> bool {
    s.len() >= sig.m && s.len() + sig.n < sig.k
}

/// Every admissible `(S, f, g)` of the family.
pub fn anomaly_wheels(wd: &WheelData) -> Vec<AnomalyWheel> {
    let sig = wd.sig;
    let mut out = Vec::new();
    for s in admissible_s_anomaly(&sig) {
        for f in coordinate_maps(s.len(), sig.m) {
            for g in coordinate_maps(sig.k - 1 - s.len(), sig.n) {
                out.push(AnomalyWheel { sig, p: wd.p.clone(), s: s.clone(), f: f.clone(), g });
            }
        }
    }
    out
}

/// Edge specifications with `special` on edge `heat`; `s` and `g` run over the other edges in
/// ascending order.
fn specs_with(wd: &WheelData, heat: usize, special: EdgeKind, s: &[usize], f: &[usize], g: &[usize]) -> Vec<EdgeSpec> {
    let mut g_iter = g.iter();
    (1..=wd.sig.k)
        .map(|e| {
            let kind = if e == heat {
                special.clone()
            } else {
                let dropped = match s.iter().position(|&x| x == e) {
                    Some(i) => (GenKind::Dy, f[i]),
                    None => (GenKind::Dwb, *g_iter.next().expect("one holomorphic index per complement edge")),
                };
                EdgeKind::Propagator { dropped }
            };
            EdgeSpec { kind, derivatives: wd.p[e - 1].clone() }
        })
        .collect()
}

/// Admissible decorations of the edges other than `heat`, labelled by edge number.
fn decorations_around(sig: &SpaceSignature, heat: usize) -> Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let others: Vec<usize> = (1..=sig.k).filter(|&e| e != heat).collect();
    let mut out = Vec::new();
    for local in admissible_s_anomaly(sig) {
        let s: Vec<usize> = local.iter().map(|&i| others[i - 1]).collect();
        for f in coordinate_maps(s.len(), sig.m) {
            for g in coordinate_maps(sig.k - 1 - s.len(), sig.n) {
                out.push((s.clone(), f.clone(), g));
            }
        }
    }
    out
}

pub fn theta_terms(aw: &AnomalyWheel, input: &TestInput, path: Path) -> Option<SymbolicTerm> {
    let specs = specs_with(&aw.family(), aw.sig.k, EdgeKind::HeatKernel, &aw.s, &aw.f, &aw.g);
    build_term(&aw.sig, &specs, input, path)
}

/// `∫_{[ε,L]^{k-1}}` of the integrand with `T_heat = ε`.
fn integrate_theta(set: &IntegrandSet, k: usize, heat: usize, epsilon: f64, l: f64, q: &ScaleQuadrature) -> Result<ScaleIntegral> {
    if !(epsilon > 0.0 && epsilon <= l) {
        return Err(ThftError::BadWindow { epsilon, l });
    }
    if set.is_empty() {
        return Ok(ScaleIntegral { value: 0.0, error: 0.0, splits: 0 });
    }
    let f = |t: &[f64]| {
        let mut full = Vec::with_capacity(k);
        full.extend_from_slice(&t[..heat - 1]);
        full.push(epsilon);
        full.extend_from_slice(&t[heat - 1..]);
        set.evaluate(&full)
    };
    integrate_scales(&f, k - 1, epsilon, l, q)
}

/// `Θ^{k,S}_{ε<L}` of one decorated diagram; exact zero outside the admissible window.
pub fn theta_weight(aw: &AnomalyWheel, input: &TestInput, epsilon: f64, l: f64, q: &ScaleQuadrature) -> Result<ScaleIntegral> {
    check_input(&aw.family(), input)?;
    if !(epsilon > 0.0 && epsilon <= l) {
        return Err(ThftError::BadWindow { epsilon, l });
    }
    if !in_anomaly_window(&aw.sig, &aw.s) {
        return Ok(ScaleIntegral { value: 0.0, error: 0.0, splits: 0 });
    }
    let terms: Vec<SymbolicTerm> = theta_terms(aw, input, Path::IntegratedByParts).into_iter().collect();
    integrate_theta(&compile(input, &terms), aw.sig.k, aw.sig.k, epsilon, l, q)
}

fn theta_integrand(wd: &WheelData, input: &TestInput, heat: usize, path: Path) -> Result<IntegrandSet> {
    check_input(wd, input)?;
    if heat == 0 || heat > wd.sig.k {
        return Err(ThftError::InvalidRequest(format!("distinguished edge {heat} out of range")));
    }
    let terms: Vec<SymbolicTerm> = decorations_around(&wd.sig, heat)
        .into_iter()
        .filter_map(|(s, f, g)| build_term(&wd.sig, &specs_with(wd, heat, EdgeKind::HeatKernel, &s, &f, &g), input, path))
        .collect();
    Ok(compile(input, &terms))
}

/// Sum of `Θ` over all admissible `(S, f, g)`.
pub fn theta_total(wd: &WheelData, input: &TestInput, epsilon: f64, l: f64, q: &ScaleQuadrature) -> Result<ScaleIntegral> {
    theta_total_at(wd, input, wd.sig.k, epsilon, l, q)
}

/// [`theta_total`] with the heat kernel on edge `heat` instead of edge `k`.
pub fn theta_total_at(
    wd: &WheelData,
    input: &TestInput,
    heat: usize,
    epsilon: f64,
    l: f64,
    q: &ScaleQuadrature,
) -> Result<ScaleIntegral> {
    let set = theta_integrand(wd, input, heat, Path::IntegratedByParts)?;
    integrate_theta(&set, wd.sig.k, heat, epsilon, l, q)
}

/// Relabels the wheel cyclically so that edge `heat` becomes edge `k`. Returns the relabelled
/// family, the pulled-back input and the sign `σ` with `Θ_heat(wd, Φ) = σ·Θ_k(wd', Φ')`.
pub fn distinguished_to_last(wd: &WheelData, input: &TestInput, heat: usize) -> Result<(WheelData, TestInput, f64)> {
    let sig = wd.sig;
    if heat == 0 || heat > sig.k {
        return Err(ThftError::InvalidRequest(format!("distinguished edge {heat} out of range")));
    }
    let mut degrees: Vec<usize> = (1..=sig.k).map(|e| sig.m + sig.n - usize::from(e != heat)).collect();
    let (mut wd, mut input) = (wd.clone(), input.clone());
    let mut sign = 1.0;
    for _ in 0..heat % sig.k {
        sign *= rotation_sign(&sig, &degrees);
        (wd, input) = rotate_labels(&wd, &input)?;
        degrees.rotate_left(1);
    }
    Ok((wd, input, sign))
}

/// `Θ` with the distinguished edge turned back into a propagator dropping `dropped`, its scale
/// integrated over `[ε,L]` with the others, summed over the holomorphic choices `g`.
pub fn propagator_switch(
    wd: &WheelData,
    input: &TestInput,
    s: &[usize],
    f: &[usize],
    dropped: (GenKind, usize),
    epsilon: f64,
    l: f64,
    q: &ScaleQuadrature,
) -> Result<ScaleIntegral> {
    check_input(wd, input)?;
    let sig = wd.sig;
    let terms: Vec<SymbolicTerm> = coordinate_maps(sig.k - 1 - s.len(), sig.n)
        .into_iter()
        .filter_map(|g| {
            let specs = specs_with(wd, sig.k, EdgeKind::Propagator { dropped }, s, f, &g);
            build_term(&sig, &specs, input, Path::IntegratedByParts)
        })
        .collect();
    let set = compile(input, &terms);
    if set.is_empty() {
        return Ok(ScaleIntegral { value: 0.0, error: 0.0, splits: 0 });
    }
    integrate_scales(&|t: &[f64]| set.evaluate(t), sig.k, epsilon, l, q)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DoubleLimitSpec {
    /// Inner ε-ladder; its `l` is replaced by each outer scale.
    pub inner: LadderSpec,
    pub l0: f64,
    /// Outer scales `L_i = l0·2^{-i}`, `i = 0..outer_rungs`.
    pub outer_rungs: usize,
    /// The last outer value must fall below `tol` times the largest regulated weight.
    pub tol: f64,
}

impl Default for DoubleLimitSpec {
    fn default() -> Self {
        DoubleLimitSpec { inner: LadderSpec::default().with_rungs(16), l0: 1.0, outer_rungs: 8, tol: 1e-3 }
    }
}

impl DoubleLimitSpec {
    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return Err(ThftError::BadWindow { epsilon: 0.0, l: self.l0 });
        }
        if self.outer_rungs < 2 || !(self.tol > 0.0) {
            return Err(ThftError::InvalidRequest("outer ladder needs two rungs and a positive tolerance".into()));
        }
        Ok(())
    }

    pub fn outer_scales(&self) -> Vec<f64> {
        (0..self.outer_rungs).map(|i| self.l0 * 0.5f64.powi(i as i32)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DoubleLimitReport {
    /// One ε-ladder per outer scale.
    pub inner: Vec<ConvergenceReport>,
    /// `(L, lim_ε Θ)` pairs with limit `0`; Converged when every inner ladder converged, the
    /// magnitudes never increase and the last one is below `tol · weight_scale`.
    pub outer: ConvergenceReport,
    /// Largest `|Θ_{ε<L}|` met on any inner ladder.
    pub weight_scale: f64,
}

/// Outer report over `(L, value)` pairs, judged for decay to zero against `scale`. Values
/// below roundoff of `scale` count as zero when checking monotonicity.
pub fn assess_decay(points: Vec<(f64, f64)>, scale: f64, tol: f64, inner_ok: bool) -> ConvergenceReport {
    let mags: Vec<f64> = points.iter().map(|&(_, v)| v.abs()).collect();
    let differences: Vec<f64> = mags.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let noise = 1e-12 * scale;
    let last = mags.last().copied().unwrap_or(f64::NAN);
    let decreasing = mags.windows(2).all(|w| w[1] <= w[0] || w[1] <= noise);
    let converged = inner_ok && last.is_finite() && decreasing && last <= tol * scale;
    ConvergenceReport {
        extrapolated: points.iter().map(|&(_, v)| v).collect(),
        ladder: points,
        differences,
        limit: 0.0,
        error_estimate: last,
        verdict: if converged { Verdict::Converged } else { Verdict::Inconclusive },
    }
}

/// `lim_{L→0} lim_{ε→0} Θ[L]` summed over the family: an inner ε-ladder at each outer scale,
/// then the decay of the inner limits along the outer scales.
pub fn double_limit(wd: &WheelData, input: &TestInput, spec: &DoubleLimitSpec, q: &ScaleQuadrature) -> Result<DoubleLimitReport> {
    spec.validate()?;
    let sig = wd.sig;
    // k <= m+n is allowed and gives identically zero ladders
    if sig.m == 0 {
        return Err(ThftError::InvalidRequest("double limit needs m >= 1".into()));
    }
    let set = theta_integrand(wd, input, sig.k, Path::IntegratedByParts)?;
    let mut inner = Vec::new();
    let mut weight_scale: f64 = 0.0;
    for l in spec.outer_scales() {
        let ladder_spec = spec.inner.clone().with_l(l);
        let mut ladder = Vec::new();
        for eps in ladder_spec.epsilons() {
            let v = integrate_theta(&set, sig.k, sig.k, eps, l, q)?.value;
            weight_scale = weight_scale.max(v.abs());
            ladder.push((eps, v));
        }
        inner.push(assess(ladder, &ladder_spec));
    }
    let inner_ok = inner.iter().all(|r| r.verdict == Verdict::Converged);
    let points = spec.outer_scales().into_iter().zip(inner.iter().map(|r| r.limit)).collect();
    Ok(DoubleLimitReport { outer: assess_decay(points, weight_scale, spec.tol, inner_ok), inner, weight_scale })
}

/// The scale factor `∫_ε^L ε dt/(ε+t)² = 1/2 - ε/(ε+L)` of the 2d BF framing anomaly.
pub fn bf_anomaly_coefficient(epsilon: f64, l: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= l && l.is_finite()) {
        return Err(ThftError::BadWindow { epsilon, l });
    }
    Ok(0.5 - epsilon / (epsilon + l))
}

pub fn bf_anomaly_coefficient_quadrature(epsilon: f64, l: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= l && l.is_finite()) {
        return Err(ThftError::BadWindow { epsilon, l });
    }
    let opts = QuadOptions::default().with_rel_tol(1e-13).with_abs_tol(1e-15);
    let r = integrate(|t: f64| epsilon / ((epsilon + t) * (epsilon + t)), epsilon, l, opts);
    if !r.converged {
        return Err(ThftError::QuadratureNotConverged { value: r.value, error: r.abs_error });
    }
    Ok(r.value)
}

/// The BF coefficient along `ε_j = L·2^{-j}`. It is a rational function of `ε/L`, so the
/// Richardson exponents are replaced by `1, 2, …` (same count).
pub fn bf_coefficient_ladder(spec: &LadderSpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let spec = LadderSpec {
        richardson_exponents: (1..=spec.richardson_exponents.len()).map(|p| p as f64).collect(),
        ..spec.clone()
    };
    let ladder = spec
        .epsilons()
        .into_iter()
        .map(|e| bf_anomaly_coefficient(e, spec.l).map(|v| (e, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(assess(ladder, &spec))
}

/// One of the two wheels whose analytic factors are compared.
#[derive(Clone, Debug, PartialEq)]
pub struct PairConfig {
    pub wheel: WheelData,
    pub input: TestInput,
}

/// `Θ_A - Θ_B` for two purely holomorphic configurations; the relative sign between them is
/// flavor data and is not applied.
pub fn pair_factor_residual(a: &PairConfig, b: &PairConfig, epsilon: f64, l: f64, q: &ScaleQuadrature) -> Result<f64> {
    if a.wheel.sig != b.wheel.sig {
        return Err(ThftError::SignatureMismatch);
    }
    if a.wheel.sig.m != 0 {
        return Err(ThftError::InvalidRequest("pair comparison is for purely holomorphic theories".into()));
    }
    let va = theta_total(&a.wheel, &a.input, epsilon, l, q)?.value;
    let vb = theta_total(&b.wheel, &b.input, epsilon, l, q)?.value;
    Ok(va - vb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(m: usize, n: usize, k: usize) -> SpaceSignature {
        SpaceSignature::new(m, n, k).unwrap()
    }

    #[test]
    fn admissible_examples() {
        assert_eq!(admissible_s_anomaly(&sig(1, 2, 4)).len(), 3);
        assert!(admissible_s_anomaly(&sig(2, 1, 3)).is_empty());
        assert_eq!(admissible_s_anomaly(&sig(0, 1, 2)), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn bf_coefficient_examples() {
        assert_eq!(bf_anomaly_coefficient(1.0, 1.0).unwrap(), 0.0);
        assert!((bf_anomaly_coefficient(1.0, 3.0).unwrap() - 0.25).abs() < 1e-15);
        let q = bf_anomaly_coefficient_quadrature(1e-3, 1.0).unwrap();
        assert!((q - bf_anomaly_coefficient(1e-3, 1.0).unwrap()).abs() < 1e-12);
    }
}
