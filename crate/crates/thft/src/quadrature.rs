//! Adaptive Gauss–Kronrod quadrature and tensor rules on logarithmic panels.

#![allow(clippy::excessive_precision)]

use crate::scalar::Real;

// Kronrod 15-point abscissae (descending, last is the center) and weights; every odd
// index is also a 7-point Gauss node.
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const XGK7: [f64; 4] = [
    0.960_491_268_708_020_283_423_507_092_629_080,
    0.774_596_669_241_483_377_035_853_079_956_480,
    0.434_243_749_346_802_558_002_071_502_844_628,
    0.0,
];
const WGK7: [f64; 4] = [
    0.104_656_226_026_467_265_193_823_857_192_073,
    0.268_488_089_868_333_440_728_569_280_666_710,
    0.401_397_414_775_962_222_905_051_818_618_432,
    0.450_916_538_658_474_142_345_110_087_045_571,
];
const WG3: [f64; 2] = [0.555_555_555_555_555_555_555_555_555_556, 0.888_888_888_888_888_888_888_888_888_889];

/// Embedded Gauss/Kronrod pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GkRule {
    G3K7,
    G7K15,
}

impl GkRule {
    /// Nodes on [-1, 1] as `(x, kronrod weight, gauss weight)`, ascending in x.
    pub fn nodes(self) -> Vec<(f64, f64, f64)> {
        let (xs, wk, wg): (&[f64], &[f64], &[f64]) = match self {
            GkRule::G7K15 => (&XGK15, &WGK15, &WG7),
            GkRule::G3K7 => (&XGK7, &WGK7, &WG3),
        };
        let last = xs.len() - 1;
        let gauss_weight = |i: usize| if i % 2 == 1 { wg[i / 2] } else { 0.0 };
        let mut out = Vec::with_capacity(2 * last + 1);
        for i in 0..last {
            out.push((-xs[i], wk[i], gauss_weight(i)));
        }
        out.push((0.0, wk[last], gauss_weight(last)));
        for i in (0..last).rev() {
            out.push((xs[i], wk[i], gauss_weight(i)));
        }
        out
    }

    pub fn len(self) -> usize {
        match self {
            GkRule::G3K7 => 7,
            GkRule::G7K15 => 15,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions<R> {
    pub rel_tol: R,
    pub abs_tol: R,
    pub max_intervals: usize,
}

impl<R: Real> Default for QuadOptions<R> {
    fn default() -> Self {
        QuadOptions { rel_tol: R::lit(1e-9), abs_tol: R::lit(1e-14), max_intervals: 2000 }
    }
}

impl<R: Real> QuadOptions<R> {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = R::lit(rel_tol);
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = R::lit(abs_tol);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<R> {
    pub value: R,
    pub abs_error: R,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Interval<R> {
    a: R,
    b: R,
    value: R,
    error: R,
}

fn gk15<R: Real, F: FnMut(R) -> R>(f: &mut F, a: R, b: R) -> (R, R) {
    let half = (b - a) * R::lit(0.5);
    let center = (a + b) * R::lit(0.5);
    let fc = f(center);
    let mut kronrod = fc * R::lit(WGK15[7]);
    let mut gauss = fc * R::lit(WG7[3]);
    for i in 0..7 {
        let dx = half * R::lit(XGK15[i]);
        let s = f(center - dx) + f(center + dx);
        kronrod = kronrod + s * R::lit(WGK15[i]);
        if i % 2 == 1 {
            gauss = gauss + s * R::lit(WG7[i / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Initial panel edges: octave-spaced when `0 < a` and `b/a` is large, else one panel.
fn initial_edges<R: Real>(a: R, b: R) -> Vec<R> {
    if a > R::zero() && b > a * R::lit(4.0) {
        let octaves = (b / a).log2().ceil().to_usize().unwrap_or(1).clamp(1, 128);
        let ratio = (b / a).powf(R::one() / R::from_usize(octaves).unwrap());
        let mut edges = Vec::with_capacity(octaves + 1);
        let mut x = a;
        edges.push(a);
        for _ in 1..octaves {
            x = x * ratio;
            edges.push(x);
        }
        edges.push(b);
        edges
    } else {
        vec![a, b]
    }
}

/// Adaptive G7–K15 on `[a, b]` with log-spaced starting panels and bisection of the
/// worst panel. Never panics; `converged` reports whether the tolerance was met.
pub fn integrate<R: Real, F: FnMut(R) -> R>(mut f: F, a: R, b: R, opts: QuadOptions<R>) -> QuadResult<R> {
    if a == b {
        return QuadResult { value: R::zero(), abs_error: R::zero(), evaluations: 0, converged: true };
    }
    let (lo, hi, sign) = if a < b { (a, b, R::one()) } else { (b, a, -R::one()) };
    let edges = initial_edges(lo, hi);
    let mut intervals: Vec<Interval<R>> = Vec::new();
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        intervals.push(Interval { a: w[0], b: w[1], value, error });
    }
    loop {
        let total: R = intervals.iter().map(|i| i.value).sum();
        let err: R = intervals.iter().map(|i| i.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target || !err.is_finite() || intervals.len() >= opts.max_intervals {
            let converged = err <= target;
            return QuadResult { value: sign * total, abs_error: err, evaluations, converged };
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, R::neg_infinity()), |acc, (i, iv)| if iv.error > acc.1 { (i, iv.error) } else { acc });
        let iv = intervals.swap_remove(worst);
        let mid = (iv.a + iv.b) * R::lit(0.5);
        if mid <= iv.a || mid >= iv.b {
            // Interval collapsed to machine resolution; keep it and stop refining.
            intervals.push(iv);
            let total: R = intervals.iter().map(|i| i.value).sum();
            let err: R = intervals.iter().map(|i| i.error).sum();
            return QuadResult { value: sign * total, abs_error: err, evaluations, converged: false };
        }
        let (v1, e1) = gk15(&mut f, iv.a, mid);
        let (v2, e2) = gk15(&mut f, mid, iv.b);
        evaluations += 30;
        intervals.push(Interval { a: iv.a, b: mid, value: v1, error: e1 });
        intervals.push(Interval { a: mid, b: iv.b, value: v2, error: e2 });
        // Keep a deterministic order so sums are bit-stable.
        intervals.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(std::cmp::Ordering::Equal));
    }
}

/// Nested adaptive quadrature over a box, innermost dimension last.
pub fn integrate_box<R: Real>(
    f: &dyn Fn(&[R]) -> R,
    bounds: &[(R, R)],
    opts: QuadOptions<R>,
) -> QuadResult<R> {
    let mut point = vec![R::zero(); bounds.len()];
    let mut evaluations = 0usize;
    let mut all_converged = true;
    let value = nested(f, bounds, 0, &mut point, opts, &mut evaluations, &mut all_converged);
    QuadResult { value: value.0, abs_error: value.1, evaluations, converged: all_converged }
}

fn nested<R: Real>(
    f: &dyn Fn(&[R]) -> R,
    bounds: &[(R, R)],
    depth: usize,
    point: &mut Vec<R>,
    opts: QuadOptions<R>,
    evaluations: &mut usize,
    all_converged: &mut bool,
) -> (R, R) {
    if depth == bounds.len() {
        *evaluations += 1;
        return (f(point), R::zero());
    }
    let (a, b) = bounds[depth];
    let mut inner_err = R::zero();
    let res = integrate(
        |x| {
            point[depth] = x;
            let (v, e) = nested(f, bounds, depth + 1, point, opts, evaluations, all_converged);
            inner_err = inner_err.max(e);
            v
        },
        a,
        b,
        opts,
    );
    if !res.converged {
        *all_converged = false;
    }
    (res.value, res.abs_error + inner_err * (b - a).abs())
}

/// One-dimensional panel rule on `[lo, hi]` built from octave panels in `log T`, with the
/// Jacobian folded into the weights.
#[derive(Clone, Debug)]
pub struct LogPanelRule {
    /// Node positions in `T`, ascending.
    pub nodes: Vec<f64>,
    pub kronrod: Vec<f64>,
    pub gauss: Vec<f64>,
    /// Octave index `j` with the node inside `[hi·2^-(j+1), hi·2^-j]`.
    pub octave: Vec<usize>,
}

impl LogPanelRule {
    /// Rule covering `[hi·2^-octaves, hi]`, each octave split into `splits` panels.
    pub fn octaves(hi: f64, octaves: usize, splits: usize, rule: GkRule) -> Self {
        let base = rule.nodes();
        let ln2 = std::f64::consts::LN_2;
        let mut out = LogPanelRule { nodes: Vec::new(), kronrod: Vec::new(), gauss: Vec::new(), octave: Vec::new() };
        for j in (0..octaves).rev() {
            let top = hi.ln() - ln2 * j as f64;
            let bottom = top - ln2;
            let width = ln2 / splits as f64;
            for s in 0..splits {
                let a = bottom + width * s as f64;
                let half = 0.5 * width;
                let center = a + half;
                for &(x, wk, wg) in &base {
                    let t = (center + half * x).exp();
                    out.nodes.push(t);
                    out.kronrod.push(wk * half * t);
                    out.gauss.push(wg * half * t);
                    out.octave.push(j);
                }
            }
        }
        out
    }

    /// Rule on an arbitrary `[lo, hi]` with `lo > 0`, panels equally spaced in `log T`.
    pub fn log_interval(lo: f64, hi: f64, panels: usize, rule: GkRule) -> Self {
        let base = rule.nodes();
        let (a0, b0) = (lo.ln(), hi.ln());
        let width = (b0 - a0) / panels as f64;
        let mut out = LogPanelRule { nodes: Vec::new(), kronrod: Vec::new(), gauss: Vec::new(), octave: Vec::new() };
        for p in 0..panels {
            let half = 0.5 * width;
            let center = a0 + width * p as f64 + half;
            for &(x, wk, wg) in &base {
                let t = (center + half * x).exp();
                out.nodes.push(t);
                out.kronrod.push(wk * half * t);
                out.gauss.push(wg * half * t);
                out.octave.push(0);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
