//! Exactness checks of both encodings against the forward pass.

use serde::Serialize;

use crate::bnb::{solve_milp, MilpConfig, MilpError, MilpStatus};
use crate::embed::{encode_classic, encode_relu_plus, propagate_bounds, BigM, EmbedError, Encoding};
use crate::model::{LinModel, Sense, VarKind};
use crate::relu_net::ReluNet;
use crate::simplex::{solve_lp, LpStatus};

/// Agreement required between the embedded output and the forward pass.
pub const EXACTNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Binary-free encoding, objective `min theta`: expect `theta = f(x)`.
    ReluPlusMin,
    /// Binary-free encoding, objective `max theta`: expect unbounded.
    ReluPlusMaxUnbounded,
    ClassicMin,
    ClassicMax,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub check: Check,
    pub x: f64,
    pub expected: f64,
    /// Solver output, NaN when the status was not optimal.
    pub theta: f64,
    pub status: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub cases: Vec<CaseResult>,
    pub warnings: Vec<String>,
    /// Weights that block the binary-free encoding, if any.
    pub relu_plus_rejected: Option<Vec<String>>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

/// Builds a single-embedding model with its input fixed to `x`.
pub fn fixed_input_model(
    net: &ReluNet,
    x: f64,
    encoding: Encoding,
    sense: Sense,
    big_m: BigM,
    input_range: (f64, f64),
) -> Result<(LinModel, crate::embed::EmbeddingHandle), EmbedError> {
    let mut m = LinModel::new(sense);
    let input = m.add_var("x", VarKind::Continuous, x, x)?;
    let h = match encoding {
        Encoding::ReluPlus => encode_relu_plus(&mut m, net, input, "c0")?,
        Encoding::Classic => {
            let bounds = propagate_bounds(net, input_range);
            encode_classic(&mut m, net, input, "c0", &bounds, big_m)?
        }
    };
    m.set_objective(sense, [(h.output, 1.0)], 0.0)?;
    Ok((m, h))
}

/// Runs every check at every grid point.
pub fn verify_net(net: &ReluNet, grid: &[f64], big_m: BigM) -> VerifyReport {
    let mut cases = Vec::new();
    let mut warnings = Vec::new();
    if grid.is_empty() {
        warnings.push("empty grid: nothing to verify".to_string());
        return VerifyReport {
            cases,
            warnings,
            relu_plus_rejected: None,
            passed: true,
        };
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let report = net.check_nonneg();
    let relu_plus_rejected =
        (!report.compatible).then(|| report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    if relu_plus_rejected.is_some() {
        warnings.push("NegativeWeightRejected: binary-free encoding skipped".to_string());
    }

    for &x in grid {
        let expected = net.forward(x);
        if relu_plus_rejected.is_none() {
            for (check, sense) in [
                (Check::ReluPlusMin, Sense::Minimize),
                (Check::ReluPlusMaxUnbounded, Sense::Maximize),
            ] {
                let case = match fixed_input_model(net, x, Encoding::ReluPlus, sense, big_m, (lo, hi)) {
                    Err(e) => failed(check, x, expected, e.to_string()),
                    Ok((m, h)) => match solve_lp(&m, true) {
                        Err(e) => failed(check, x, expected, e.to_string()),
                        Ok(r) => {
                            let theta = if r.status == LpStatus::Optimal {
                                r.x[h.output.0]
                            } else {
                                f64::NAN
                            };
                            let passed = match check {
                                Check::ReluPlusMin => {
                                    r.status == LpStatus::Optimal && (theta - expected).abs() <= EXACTNESS_TOL
                                }
                                _ => r.status == LpStatus::Unbounded,
                            };
                            CaseResult {
                                check,
                                x,
                                expected,
                                theta,
                                status: format!("{:?}", r.status),
                                passed,
                            }
                        }
                    },
                };
                cases.push(case);
            }
        }
        for (check, sense) in [
            (Check::ClassicMin, Sense::Minimize),
            (Check::ClassicMax, Sense::Maximize),
        ] {
            let case = match fixed_input_model(net, x, Encoding::Classic, sense, big_m, (lo, hi)) {
                Err(e) => failed(check, x, expected, e.to_string()),
                Ok((m, h)) => match solve_milp(&m, &MilpConfig::default()) {
                    Err(MilpError::LimitReached(r)) => {
                        failed(check, x, expected, format!("limit reached after {} nodes", r.nodes))
                    }
                    Err(e) => failed(check, x, expected, e.to_string()),
                    Ok(r) => {
                        let theta = if r.status == MilpStatus::Optimal {
                            r.x[h.output.0]
                        } else {
                            f64::NAN
                        };
                        CaseResult {
                            check,
                            x,
                            expected,
                            theta,
                            status: format!("{:?}", r.status),
                            passed: r.status == MilpStatus::Optimal && (theta - expected).abs() <= EXACTNESS_TOL,
                        }
                    }
                },
            };
            cases.push(case);
        }
    }
    let passed = relu_plus_rejected.is_none() && cases.iter().all(|c| c.passed);
    VerifyReport {
        cases,
        warnings,
        relu_plus_rejected,
        passed,
    }
}

fn failed(check: Check, x: f64, expected: f64, status: String) -> CaseResult {
    CaseResult {
        check,
        x,
        expected,
        theta: f64::NAN,
        status,
        passed: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::{square_fixture, WeightIndex};

    #[test]
    fn empty_grid_is_vacuous() {
        let r = verify_net(&square_fixture(), &[], BigM::PerNode);
        assert!(r.passed && r.cases.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn fixture_passes_on_a_few_points() {
        let r = verify_net(&square_fixture(), &[0.0, 4.0, 10.0], BigM::PerNode);
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.cases.len(), 12);
    }

    #[test]
    fn negated_weight_blocks_relu_plus_only() {
        let net = square_fixture().with_weight(
            WeightIndex {
                j_hat: 0,
                layer: 1,
                j: 0,
            },
            -0.760635,
        );
        let r = verify_net(&net, &[2.0, 5.0], BigM::PerNode);
        assert!(!r.passed);
        assert_eq!(r.relu_plus_rejected.as_ref().map(Vec::len), Some(1));
        assert!(r
            .cases
            .iter()
            .all(|c| matches!(c.check, Check::ClassicMin | Check::ClassicMax)));
        assert!(r.cases.iter().all(|c| c.passed));
    }
}
