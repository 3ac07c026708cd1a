//! Experiment configuration: JSON files, presets, command-line overrides and validation.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thft::anomaly::DoubleLimitSpec;
use thft::exterior::{GenKind, Generator};
use thft::integrand::{FormComponent, TestInput};
use thft::poly::{ExactPoly, Monomial, Var};
use thft::{LadderSpec, SpaceSignature};

use crate::CliError;

/// Theories with a fixed `(m, n)`; `bf` leaves both free.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Cs4d,
    Cs5d,
    Bf,
    Kapustin,
    #[value(name = "bf2d-holomorphic")]
    Bf2dHolomorphic,
}

impl Preset {
    pub fn dims(self) -> Option<(usize, usize)> {
        match self {
            Preset::Cs4d | Preset::Kapustin => Some((2, 1)),
            Preset::Cs5d => Some((1, 2)),
            Preset::Bf2dHolomorphic => Some((0, 1)),
            Preset::Bf => None,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Cs4d => "4d Chern-Simons on R^2 x C",
            Preset::Cs5d => "5d Chern-Simons on R x C^2",
            Preset::Bf => "topological-holomorphic BF theory on R^m x C^n",
            Preset::Kapustin => "Kapustin twist of 4d N=2 on R^2 x C",
            Preset::Bf2dHolomorphic => "holomorphic BF theory on C",
        }
    }
}

/// Variable of a test-input polynomial, e.g. `{"var": "wb", "vertex": 2, "coord": 1, "power": 2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub var: VarKind,
    pub vertex: usize,
    pub coord: usize,
    #[serde(default = "one")]
    pub power: u32,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Y,
    W,
    Wb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// Rational coefficient such as `"3"` or `"-5/4"`.
    pub coeff: String,
    #[serde(default)]
    pub factors: Vec<FactorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GenKindSpec,
    pub vertex: usize,
    pub coord: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKindSpec {
    Dy,
    Dwb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    pub terms: Vec<TermSpec>,
}

/// Polynomial-times-Gaussian test form. Widths are per coordinate direction, then per slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub components: Vec<ComponentSpec>,
    pub real_widths: Vec<Vec<f64>>,
    pub complex_widths: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub rungs: Option<usize>,
    pub l: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_floor: Option<f64>,
    pub richardson_exponents: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterConfig {
    pub l0: Option<f64>,
    pub rungs: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorConfig {
    /// Power `N` of the total scale in the denominator.
    pub power: Option<u32>,
    pub epsilon: Option<f64>,
    pub l: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentConfig {
    /// `[vertex, coord, power]` triples of a real monomial.
    pub exponents: Vec<[usize; 3]>,
    /// Scale parameters, one per edge.
    pub t: Vec<f64>,
    #[serde(default = "yes")]
    pub normalized: bool,
    #[serde(default = "yes")]
    pub quadrature: bool,
    /// Monte-Carlo samples; needs a seed.
    #[serde(default)]
    pub samples: Option<usize>,
}

fn yes() -> bool {
    true
}

/// Per-decoration Monte-Carlo cross-check of a weight at one cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_splits: Option<usize>,
}

/// Contents of a `--config` file. Every field is optional; flags override file values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    /// Holomorphic derivative orders, `k` rows of `n` entries.
    pub p: Option<Vec<Vec<u32>>>,
    pub input: Option<InputSpec>,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default)]
    pub outer: OuterConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub regulator: RegulatorConfig,
    pub moments: Option<MomentConfig>,
    pub monte_carlo: Option<MonteCarloConfig>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `(m, n)` from the preset, checked against explicit values.
    pub fn dims(&self) -> Result<(usize, usize), CliError> {
        match self.preset.and_then(Preset::dims) {
            Some((pm, pn)) => {
                if self.m.is_some_and(|m| m != pm) || self.n.is_some_and(|n| n != pn) {
                    return Err(CliError::Config(format!(
                        "preset {:?} fixes (m, n) = ({pm}, {pn})",
                        self.preset.unwrap()
                    )));
                }
                Ok((pm, pn))
            }
            None => match (self.m, self.n) {
                (Some(m), Some(n)) => Ok((m, n)),
                _ => Err(CliError::Config("m and n are required (or a preset that fixes them)".into())),
            },
        }
    }

    /// The signature, with `k` defaulting to `m + n + 1`.
    pub fn signature(&self) -> Result<SpaceSignature, CliError> {
        let (m, n) = self.dims()?;
        let k = self.k.unwrap_or(m + n + 1);
        SpaceSignature::new(m, n, k).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn ladder_spec(&self) -> LadderSpec {
        let d = LadderSpec::default();
        let c = &self.ladder;
        LadderSpec {
            rungs: c.rungs.unwrap_or(d.rungs),
            l: c.l.unwrap_or(d.l),
            rel_tol: c.rel_tol.unwrap_or(d.rel_tol),
            abs_floor: c.abs_floor.unwrap_or(d.abs_floor),
            richardson_exponents: c.richardson_exponents.clone().unwrap_or(d.richardson_exponents),
        }
    }

    /// Inner ladders default to 16 rungs; the inner base scale is set per outer scale.
    pub fn double_limit_spec(&self) -> DoubleLimitSpec {
        let d = DoubleLimitSpec::default();
        let mut inner = self.ladder_spec();
        if self.ladder.rungs.is_none() {
            inner.rungs = d.inner.rungs;
        }
        DoubleLimitSpec {
            inner,
            l0: self.outer.l0.unwrap_or(d.l0),
            outer_rungs: self.outer.rungs.unwrap_or(d.outer_rungs),
            tol: self.outer.tol.unwrap_or(d.tol),
        }
    }

    pub fn scale_quadrature(&self) -> thft::integrand::ScaleQuadrature {
        let d = thft::integrand::ScaleQuadrature::default();
        thft::integrand::ScaleQuadrature {
            rel_tol: self.quadrature.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.quadrature.abs_tol.unwrap_or(d.abs_tol),
            max_splits: self.quadrature.max_splits.unwrap_or(d.max_splits),
            ..d
        }
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<(), CliError> {
        let ladder = self.ladder_spec();
        let outer = self.double_limit_spec();
        let q = self.scale_quadrature();
        let positive = [ladder.rel_tol, ladder.abs_floor, outer.tol, q.rel_tol, q.abs_tol];
        if positive.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(CliError::Config("all tolerances must be positive".into()));
        }
        let needs_seed = self.monte_carlo.is_some() || self.moments.as_ref().is_some_and(|mc| mc.samples.is_some());
        if needs_seed && self.seed.is_none() {
            return Err(CliError::Config("a seed is mandatory for Monte-Carlo runs".into()));
        }
        ladder.validate().map_err(|e| CliError::Config(format!("ladder: {e}")))?;
        Ok(())
    }
}

fn parse_coeff(s: &str) -> Result<BigRational, CliError> {
    BigRational::from_str(s.trim()).map_err(|_| CliError::Config(format!("bad rational coefficient {s:?}")))
}

impl InputSpec {
    pub fn build(&self, sig: SpaceSignature) -> Result<TestInput, CliError> {
        let mut components = Vec::new();
        for c in &self.components {
            let generators = c
                .generators
                .iter()
                .map(|g| match g.kind {
                    GenKindSpec::Dy => Generator::dy(g.vertex, g.coord),
                    GenKindSpec::Dwb => Generator::dwb(g.vertex, g.coord),
                })
                .collect();
            let mut poly = ExactPoly::zero();
            for t in &c.terms {
                let mut mono = Monomial::one();
                for f in &t.factors {
                    let v = match f.var {
                        VarKind::Y => Var::y(f.vertex, f.coord),
                        VarKind::W => Var::w(f.vertex, f.coord),
                        VarKind::Wb => Var::wb(f.vertex, f.coord),
                    };
                    for _ in 0..f.power {
                        mono = mono.mul(&Monomial::var(v));
                    }
                }
                poly.add_term(mono, parse_coeff(&t.coeff)?);
            }
            components.push(FormComponent { generators, poly });
        }
        TestInput::new(sig, components, &self.real_widths, &self.complex_widths)
            .map_err(|e| CliError::Config(format!("input: {e}")))
    }

    /// Unit widths; one component carrying the first `degree` generators times a dense
    /// quadratic in every slot coordinate with fixed rational coefficients.
    pub fn generic(sig: SpaceSignature, degree: usize) -> Self {
        let slots = sig.slots();
        let mut vars = Vec::new();
        for (kind, dim) in [(VarKind::Y, sig.m), (VarKind::W, sig.n), (VarKind::Wb, sig.n)] {
            for vertex in 1..=slots {
                for coord in 1..=dim {
                    vars.push(FactorSpec { var: kind, vertex, coord, power: 1 });
                }
            }
        }
        let mut terms = vec![TermSpec { coeff: "1".into(), factors: Vec::new() }];
        let mut c = 1i64;
        for (i, a) in vars.iter().enumerate() {
            terms.push(TermSpec { coeff: format!("{}/3", c % 5 + 1), factors: vec![a.clone()] });
            c += 1;
            for b in &vars[i..] {
                let num = c % 7 - 3;
                c += 3;
                if num != 0 {
                    terms.push(TermSpec { coeff: format!("{num}/4"), factors: vec![a.clone(), b.clone()] });
                }
            }
        }
        let generators = sig
            .generators()
            .into_iter()
            .take(degree)
            .map(|g| GeneratorSpec {
                kind: match g.kind {
                    GenKind::Dy => GenKindSpec::Dy,
                    GenKind::Dwb => GenKindSpec::Dwb,
                },
                vertex: g.vertex as usize,
                coord: g.coord as usize,
            })
            .collect();
        InputSpec {
            components: vec![ComponentSpec { generators, terms }],
            real_widths: vec![vec![1.0; slots]; sig.m],
            complex_widths: vec![vec![1.0; slots]; sig.n],
        }
    }
}
