//! Report records, config hashing and the JSON/CSV writers.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thft::anomaly::DoubleLimitSpec;
use thft::integrand::ScaleQuadrature;
use thft::{ConvergenceReport, LadderSpec, Verdict};

use crate::config::{InputSpec, MomentConfig, MonteCarloConfig, Preset};
use crate::CliError;

pub const SCHEMA: &str = "thft-report/1";

/// Everything that determines a run, after defaults are filled in. Output paths, format and
/// worker count are left out so they do not change the hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub preset: Option<Preset>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub p: Option<Vec<Vec<u32>>>,
    pub input: Option<InputSpec>,
    pub ladder: Option<LadderSpec>,
    pub double_limit: Option<DoubleLimitSpec>,
    pub quadrature: Option<ScaleQuadrature>,
    pub regulator: Option<RegulatorQuerySpec>,
    pub moments: Option<MomentConfig>,
    pub monte_carlo: Option<MonteCarloConfig>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulatorQuerySpec {
    pub power: u32,
    pub k: u32,
    pub epsilon: f64,
    pub l: f64,
}

impl ResolvedConfig {
    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishEntry {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub verdict: String,
    pub method: String,
    pub terms_checked: usize,
    pub integrand_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub s: Vec<usize>,
    pub f: Vec<usize>,
    pub exact: f64,
    pub mean: f64,
    pub std_error: f64,
    /// `|mean - exact| / std_error`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTerm {
    pub lambda: Vec<u32>,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Vanish {
        entries: Vec<VanishEntry>,
    },
    Weight {
        ladder: ConvergenceReport,
        monte_carlo: Vec<McCheck>,
    },
    BfCoefficient {
        coefficient: f64,
        ladder: ConvergenceReport,
    },
    DoubleLimit {
        outer: ConvergenceReport,
        inner: Vec<ConvergenceReport>,
        weight_scale: f64,
    },
    Regulator {
        value: f64,
        method: String,
        amgm_bound: f64,
        limit: String,
    },
    Moments {
        exact: f64,
        quadrature: Option<f64>,
        monte_carlo: Option<MonteCarloMoment>,
        t_terms: Vec<MomentTerm>,
        t_terms_valid: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloMoment {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub config_hash: String,
    pub config: ResolvedConfig,
    pub summary: String,
    /// Set when any ladder ended Inconclusive.
    pub inconclusive: bool,
    pub outcome: Outcome,
}

impl Report {
    pub fn new(config: ResolvedConfig, summary: String, outcome: Outcome) -> Self {
        let inconclusive = outcome.ladders().iter().any(|(_, r)| r.verdict == Verdict::Inconclusive);
        Report {
            schema: SCHEMA.into(),
            command: config.command.clone(),
            config_hash: config.hash(),
            config,
            summary,
            inconclusive,
            outcome,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("report: {e}")))
    }

    /// Ladder points as RFC-4180 CSV with columns `series,rung,scale,value`.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["series", "rung", "scale", "value"]).map_err(io)?;
        for (series, r) in self.outcome.ladders() {
            for (j, (x, v)) in r.ladder.iter().enumerate() {
                w.write_record([series.clone(), j.to_string(), format!("{x:e}"), format!("{v:e}")]).map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

impl Outcome {
    /// Named ladders carried by the outcome.
    pub fn ladders(&self) -> Vec<(String, &ConvergenceReport)> {
        match self {
            Outcome::Weight { ladder, .. } => vec![("weight".into(), ladder)],
            Outcome::BfCoefficient { ladder, .. } => vec![("bf coefficient".into(), ladder)],
            Outcome::DoubleLimit { outer, inner, .. } => {
                let mut v: Vec<(String, &ConvergenceReport)> = inner
                    .iter()
                    .map(|r| (format!("inner, L={}", r.ladder.first().map_or(0.0, |p| 2.0 * p.0)), r))
                    .collect();
                v.push(("outer".into(), outer));
                v
            }
            _ => Vec::new(),
        }
    }
}

/// Re-derives every verdict of a stored report from its raw ladders and embedded tolerances.
/// Returns the names of ladders whose stored verdict or limit disagrees.
pub fn recheck(report: &Report) -> Result<Vec<String>, CliError> {
    let cfg = &report.config;
    if cfg.hash() != report.config_hash {
        return Err(CliError::Config("config hash does not match the embedded config".into()));
    }
    let mut bad = Vec::new();
    let mut check = |name: &str, stored: &ConvergenceReport, fresh: ConvergenceReport| {
        let same_limit = stored.limit == fresh.limit || (stored.limit.is_nan() && fresh.limit.is_nan());
        if stored.verdict != fresh.verdict || !same_limit {
            bad.push(name.to_string());
        }
    };
    match &report.outcome {
        Outcome::Weight { ladder, .. } => {
            let spec = cfg.ladder.clone().ok_or_else(|| CliError::Config("report lacks ladder spec".into()))?;
            check("weight", ladder, thft::ladder::assess(ladder.ladder.clone(), &spec));
        }
        Outcome::BfCoefficient { ladder, .. } => {
            let spec = cfg.ladder.clone().ok_or_else(|| CliError::Config("report lacks ladder spec".into()))?;
            let spec = LadderSpec {
                richardson_exponents: (1..=spec.richardson_exponents.len()).map(|p| p as f64).collect(),
                ..spec
            };
            check("bf coefficient", ladder, thft::ladder::assess(ladder.ladder.clone(), &spec));
        }
        Outcome::DoubleLimit { outer, inner, weight_scale } => {
            let spec =
                cfg.double_limit.clone().ok_or_else(|| CliError::Config("report lacks double-limit spec".into()))?;
            for (r, l) in inner.iter().zip(spec.outer_scales()) {
                let fresh = thft::ladder::assess(r.ladder.clone(), &spec.inner.clone().with_l(l));
                check(&format!("inner, L={l}"), r, fresh);
            }
            let inner_ok = inner.iter().all(|r| r.verdict == Verdict::Converged);
            let fresh = thft::anomaly::assess_decay(outer.ladder.clone(), *weight_scale, spec.tol, inner_ok);
            check("outer", outer, fresh);
        }
        _ => {}
    }
    Ok(bad)
}
