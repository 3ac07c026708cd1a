//! One function per subcommand, each producing a [`Report`].

use thft::anomaly::{bf_coefficient_ladder, double_limit};
use thft::gaussian::{gaussian_moment, monte_carlo_moment, quadrature_moment, t_dependence, t_terms_respect_constraints, MomentRequest};
use thft::regulator::{amgm_bound, i_integral, limit_verdict, LimitVerdict, RegulatorQuery};
use thft::wheel::{decorations, epsilon_limit, monte_carlo_weight_term, vanishing_proof, weight_term, VanishingMethod, WheelData};
use thft::{SpaceSignature, Verdict};

use crate::config::{ExperimentConfig, InputSpec};
use crate::report::{McCheck, MomentTerm, MonteCarloMoment, Outcome, RegulatorQuerySpec, Report, ResolvedConfig, VanishEntry};
use crate::CliError;

fn base(command: &str, cfg: &ExperimentConfig) -> ResolvedConfig {
    ResolvedConfig {
        command: command.into(),
        preset: cfg.preset,
        m: None,
        n: None,
        k: None,
        p: None,
        input: None,
        ladder: None,
        double_limit: None,
        quadrature: None,
        regulator: None,
        moments: None,
        monte_carlo: None,
        seed: None,
    }
}

fn with_sig(mut r: ResolvedConfig, sig: SpaceSignature) -> ResolvedConfig {
    r.m = Some(sig.m);
    r.n = Some(sig.n);
    r.k = Some(sig.k);
    r
}

pub fn verdict_text(method: VanishingMethod) -> &'static str {
    match method {
        VanishingMethod::DegreeCount => "vanishes: algebraic (degree count)",
        VanishingMethod::EdgeCase => "vanishes: algebraic (edge case)",
        VanishingMethod::NotApplicable => "requires numerical evaluation",
    }
}

/// Vanishing verdicts for every `k' ≤ k` at the configured `(m, n)`.
pub fn cmd_vanish(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let sig = cfg.signature()?;
    let mut entries = Vec::new();
    for k in 1..=sig.k {
        let Ok(s) = SpaceSignature::new(sig.m, sig.n, k) else { continue };
        let r = vanishing_proof(&s)?;
        entries.push(VanishEntry {
            m: r.m,
            n: r.n,
            k: r.k,
            verdict: verdict_text(r.method).into(),
            method: format!("{:?}", r.method),
            terms_checked: r.terms_checked,
            integrand_zero: r.integrand_zero,
        });
    }
    let summary = entries
        .last()
        .map(|e| format!("(m,n,k) = ({},{},{}): {}", e.m, e.n, e.k, e.verdict))
        .unwrap_or_default();
    Ok(Report::new(with_sig(base("vanish", cfg), sig), summary, Outcome::Vanish { entries }))
}

fn wheel_data(cfg: &ExperimentConfig, sig: SpaceSignature) -> Result<WheelData, CliError> {
    match &cfg.p {
        Some(p) => Ok(WheelData::new(sig, p.clone())?),
        None => Ok(WheelData::plain(sig)),
    }
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Converged => "Converged",
        Verdict::Inconclusive => "Inconclusive",
    }
}

/// `ε → 0` ladder of the wheel weight, with an optional Monte-Carlo check per decoration.
pub fn cmd_weight(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let sig = cfg.signature()?;
    let wd = wheel_data(cfg, sig)?;
    let spec = cfg.input.clone().unwrap_or_else(|| InputSpec::generic(sig, sig.k.saturating_sub(sig.m + sig.n)));
    let input = spec.build(sig)?;
    let ladder_spec = cfg.ladder_spec();
    let q = cfg.scale_quadrature();
    let ladder = epsilon_limit(&wd, &input, &ladder_spec, &q)?;
    let mut monte_carlo = Vec::new();
    if let Some(mc) = &cfg.monte_carlo {
        let seed = cfg.seed.ok_or_else(|| CliError::Config("a seed is mandatory for Monte-Carlo runs".into()))?;
        for (i, dec) in decorations(&sig).into_iter().enumerate() {
            let exact = weight_term(&wd, &dec, &input, mc.epsilon, ladder_spec.l, &q)?.value;
            let est = monte_carlo_weight_term(&wd, &dec, &input, mc.epsilon, ladder_spec.l, mc.samples, seed.wrapping_add(1000 * i as u64))?;
            let deviation = if est.std_error > 0.0 { (est.mean - exact).abs() / est.std_error } else { 0.0 };
            monte_carlo.push(McCheck { s: dec.s, f: dec.f, exact, mean: est.mean, std_error: est.std_error, deviation });
        }
    }
    let summary = format!("weight limit {:e} ({})", ladder.limit, verdict_word(ladder.verdict));
    let mut r = with_sig(base("weight", cfg), sig);
    r.p = Some(wd.p.clone());
    r.input = Some(spec);
    r.ladder = Some(ladder_spec);
    r.quadrature = Some(q);
    r.monte_carlo = cfg.monte_carlo.clone();
    r.seed = cfg.monte_carlo.as_ref().and(cfg.seed);
    Ok(Report::new(r, summary, Outcome::Weight { ladder, monte_carlo }))
}

/// The BF framing coefficient for `(m, n) = (0, 1)`, the `L → 0` double limit for `m ≥ 1`.
pub fn cmd_anomaly(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (m, n) = cfg.dims()?;
    if m == 0 {
        if n != 1 {
            return Err(CliError::Config("with m = 0 only the (0, 1) framing coefficient is available".into()));
        }
        let spec = cfg.ladder_spec();
        let ladder = bf_coefficient_ladder(&spec)?;
        let summary = format!("framing coefficient {} ({})", ladder.limit, verdict_word(ladder.verdict));
        let mut r = base("anomaly", cfg);
        r.m = Some(0);
        r.n = Some(1);
        r.ladder = Some(spec);
        return Ok(Report::new(r, summary, Outcome::BfCoefficient { coefficient: ladder.limit, ladder }));
    }
    let sig = cfg.signature()?;
    let wd = wheel_data(cfg, sig)?;
    let spec = cfg.input.clone().unwrap_or_else(|| InputSpec::generic(sig, sig.k.saturating_sub(1 + sig.m + sig.n)));
    let input = spec.build(sig)?;
    let dl = cfg.double_limit_spec();
    let q = cfg.scale_quadrature();
    let rep = double_limit(&wd, &input, &dl, &q)?;
    let last = rep.outer.ladder.last().map_or(f64::NAN, |p| p.1);
    let summary = format!(
        "outer value {last:e} at smallest L, regulated scale {:e} ({})",
        rep.weight_scale,
        verdict_word(rep.outer.verdict)
    );
    let mut r = with_sig(base("anomaly", cfg), sig);
    r.p = Some(wd.p.clone());
    r.input = Some(spec);
    r.double_limit = Some(dl);
    r.quadrature = Some(q);
    Ok(Report::new(r, summary, Outcome::DoubleLimit { outer: rep.outer, inner: rep.inner, weight_scale: rep.weight_scale }))
}

/// `I_{N,k}(ε, L)` with its AM-GM bound.
pub fn cmd_regulator(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let power = cfg.regulator.power.ok_or_else(|| CliError::Config("regulator needs a power N".into()))?;
    let k = cfg.k.ok_or_else(|| CliError::Config("regulator needs k".into()))?;
    let k = u32::try_from(k).map_err(|_| CliError::Config("k out of range".into()))?;
    let epsilon = cfg.regulator.epsilon.unwrap_or(0.0);
    let l = cfg.regulator.l.unwrap_or(1.0);
    let query = RegulatorQuery::new(power, k, epsilon, l)?;
    let value = i_integral(&query)?;
    let bound = amgm_bound(&query)?;
    let method = if k <= 3 || power == 0 { "closed form" } else { "quadrature" };
    let limit = match limit_verdict(power, k) {
        LimitVerdict::Finite => "finite",
        LimitVerdict::Unknown => "unknown",
    };
    let mut r = base("regulator", cfg);
    r.preset = None;
    r.regulator = Some(RegulatorQuerySpec { power, k, epsilon, l });
    let summary = format!("I_{{{power},{k}}}({epsilon}, {l}) = {value:.6}");
    Ok(Report::new(
        r,
        summary,
        Outcome::Regulator { value, method: method.into(), amgm_bound: bound, limit: limit.into() },
    ))
}

/// Exact Gaussian moment, checked against quadrature and optionally Monte Carlo.
pub fn cmd_moments(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let sig = cfg.signature()?;
    let mc = cfg.moments.clone().ok_or_else(|| CliError::Config("moments section is required".into()))?;
    if mc.t.len() != sig.k {
        return Err(CliError::Config(format!("moments: need {} scale values, got {}", sig.k, mc.t.len())));
    }
    let entries: Vec<((usize, usize), u32)> = mc.exponents.iter().map(|&[a, i, e]| ((a, i), e as u32)).collect();
    let req = MomentRequest::new(&entries, mc.normalized);
    req.validate(&sig)?;
    let exact = gaussian_moment(&req, &mc.t, &sig)?;
    let quadrature = if mc.quadrature { Some(quadrature_moment(&req, &mc.t, &sig)?) } else { None };
    let monte_carlo = match mc.samples {
        Some(samples) => {
            let seed = cfg.seed.ok_or_else(|| CliError::Config("a seed is mandatory for Monte-Carlo runs".into()))?;
            let e = monte_carlo_moment(&req, &mc.t, &sig, samples, seed)?;
            Some(MonteCarloMoment { mean: e.mean, std_error: e.std_error, samples: e.samples })
        }
        None => None,
    };
    let terms = t_dependence(&req, sig.k)?;
    let t_terms_valid = t_terms_respect_constraints(&req, &terms);
    let t_terms = terms.iter().map(|t| MomentTerm { lambda: t.lambda.clone(), coeff: t.coeff.to_string() }).collect();
    let summary = format!("moment {exact:e}");
    let mut r = with_sig(base("moments", cfg), sig);
    r.seed = mc.samples.and(cfg.seed);
    r.moments = Some(mc);
    Ok(Report::new(r, summary, Outcome::Moments { exact, quadrature, monte_carlo, t_terms, t_terms_valid }))
}
