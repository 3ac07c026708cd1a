//! Regulator ladders `ε_j = L·2^{-j}`, Richardson extrapolation and convergence verdicts.

use crate::error::{Result, ThftError};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LadderSpec {
    pub rungs: usize,
    pub l: f64,
    /// Tolerance on the last three Richardson-corrected differences, relative to the larger of
    /// `|limit|` and the largest ladder value. The last of the three must also not be the
    /// largest, unless it is at roundoff level.
    pub rel_tol: f64,
    pub abs_floor: f64,
    /// Error exponents removed in turn, assuming `value(ε) = limit + Σ c_p ε^p`.
    pub richardson_exponents: Vec<f64>,
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec { rungs: 12, l: 1.0, rel_tol: 1e-4, abs_floor: 1e-14, richardson_exponents: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0] }
    }
}

impl LadderSpec {
    pub fn with_l(mut self, l: f64) -> Self {
        self.l = l;
        self
    }

    pub fn with_rungs(mut self, rungs: usize) -> Self {
        self.rungs = rungs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rungs < 3 + self.richardson_exponents.len() {
            return Err(ThftError::InvalidRequest(format!(
                "ladder needs at least {} rungs",
                3 + self.richardson_exponents.len()
            )));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(ThftError::BadWindow { epsilon: 0.0, l: self.l });
        }
        if !(self.rel_tol > 0.0 && self.abs_floor > 0.0) {
            return Err(ThftError::InvalidRequest("tolerances must be positive".into()));
        }
        if self.richardson_exponents.iter().any(|&p| !(p > 0.0)) {
            return Err(ThftError::InvalidRequest("Richardson exponents must be positive".into()));
        }
        Ok(())
    }

    /// `ε_j = L·2^{-j}` for `j = 1..=rungs`.
    pub fn epsilons(&self) -> Vec<f64> {
        (1..=self.rungs).map(|j| self.l * 0.5f64.powi(j as i32)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    Converged,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceReport {
    /// `(ε, value)` pairs, `ε` strictly decreasing.
    pub ladder: Vec<(f64, f64)>,
    /// Final Richardson column, aligned with the tail of the ladder.
    pub extrapolated: Vec<f64>,
    pub differences: Vec<f64>,
    pub limit: f64,
    pub error_estimate: f64,
    pub verdict: Verdict,
}

/// Repeated Richardson elimination for a ladder halving `ε` each rung.
pub fn richardson(values: &[f64], exponents: &[f64]) -> Vec<f64> {
    let mut col = values.to_vec();
    for &p in exponents {
        if col.len() < 2 {
            break;
        }
        let f = 2f64.powf(p);
        col = col.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
    }
    col
}

/// Builds a report from ladder data.
pub fn assess(ladder: Vec<(f64, f64)>, spec: &LadderSpec) -> ConvergenceReport {
    let values: Vec<f64> = ladder.iter().map(|&(_, v)| v).collect();
    let extrapolated = richardson(&values, &spec.richardson_exponents);
    let differences: Vec<f64> = extrapolated.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let limit = extrapolated.last().copied().unwrap_or(f64::NAN);
    let error_estimate = differences.last().copied().unwrap_or(f64::INFINITY);
    // relative to the larger of the limit and the ladder, so that zero limits stay meaningful
    let scale = values.iter().fold(limit.abs(), |acc, v| acc.max(v.abs()));
    let tol = spec.rel_tol * scale + spec.abs_floor;
    let finite = values.iter().all(|v| v.is_finite());
    let converged = finite && differences.len() >= 3 && {
        let tail = &differences[differences.len() - 3..];
        // differences at roundoff level count as settled
        let noise = spec.abs_floor + 64.0 * f64::EPSILON * scale;
        tail.iter().all(|&d| d <= tol) && (tail[2] <= tail[0].max(tail[1]) || tail[2] <= noise)
    };
    ConvergenceReport {
        ladder,
        extrapolated,
        differences,
        limit,
        error_estimate,
        verdict: if converged { Verdict::Converged } else { Verdict::Inconclusive },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_power_terms() {
        let spec = LadderSpec::default();
        let ladder: Vec<(f64, f64)> =
            spec.epsilons().into_iter().map(|e| (e, 3.0 + 0.7 * e - 2.0 * e * e)).collect();
        let r = assess(ladder, &spec);
        assert!((r.limit - 3.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Converged);
    }

    #[test]
    fn oscillating_ladder_is_inconclusive() {
        let spec = LadderSpec::default();
        let ladder: Vec<(f64, f64)> =
            spec.epsilons().into_iter().enumerate().map(|(j, e)| (e, (j % 2) as f64)).collect();
        assert_eq!(assess(ladder, &spec).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn growing_differences_are_inconclusive() {
        let spec = LadderSpec::default();
        let ladder: Vec<(f64, f64)> =
            spec.epsilons().into_iter().enumerate().map(|(j, e)| (e, 1.0 + 1e-9 * (j * j * j) as f64)).collect();
        assert_eq!(assess(ladder, &spec).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn zero_ladder_converges_to_zero() {
        let spec = LadderSpec::default();
        let ladder: Vec<(f64, f64)> = spec.epsilons().into_iter().map(|e| (e, 0.0)).collect();
        let r = assess(ladder, &spec);
        assert_eq!(r.limit, 0.0);
        assert_eq!(r.verdict, Verdict::Converged);
    }
}
