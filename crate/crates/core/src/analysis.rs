//! Reading noise out of a process matrix: deviation patterns, one-parameter
//! channel fits, the correlated/uncorrelated dephasing test and weak-noise
//! parameter budgets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{self, AffineProcess};
use crate::error::{QptError, Result};
use crate::linalg::{RealMatrix, RealVector};
use crate::pauli::{self, Axis};

/// Number of significant noise parameters under weak local noise with
/// pairwise crosstalk, next to the generic count `N⁴ − N²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterBudget {
    pub local: u64,
    pub crosstalk: u64,
    pub total: u64,
    pub generic: u128,
}

/// `12n + 3n(n−1)/2` and `16ⁿ − 4ⁿ`.
pub fn parameter_count(n: usize) -> ParameterBudget {
    weak_local_budget(n, false)
}

/// With `symmetric`, all qubits share the same 12 local parameters.
pub fn weak_local_budget(n: usize, symmetric: bool) -> ParameterBudget {
    let n64 = n as u64;
    let local = if symmetric { 12 } else { 12 * n64 };
    let crosstalk = 3 * n64 * n64.saturating_sub(1) / 2;
    let generic = 16u128.pow(n as u32) - 4u128.pow(n as u32);
    ParameterBudget {
        local,
        crosstalk,
        total: local + crosstalk,
        generic,
    }
}

/// Entries of `χ_F` deviating from the identity process by more than a
/// threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub threshold: f64,
    pub nonzero_count: usize,
    pub mask: Vec<Vec<bool>>,
}

pub fn sparsity_pattern(proc: &AffineProcess, threshold: f64) -> Result<PatternReport> {
    if !(threshold > 0.0) {
        return Err(QptError::ParamOutOfRange {
            name: "threshold",
            value: threshold,
            range: "(0, inf)",
        });
    }
    let chi = proc.chi();
    let mask: Vec<Vec<bool>> = (0..chi.nrows())
        .map(|i| {
            (0..chi.ncols())
                .map(|j| {
                    let reference = if i == j { 1.0 } else { 0.0 };
                    (chi[(i, j)] - reference).abs() > threshold
                })
                .collect()
        })
        .collect();
    let nonzero_count = mask.iter().flatten().filter(|&&b| b).count();
    Ok(PatternReport {
        threshold,
        nonzero_count,
        mask,
    })
}

/// One-parameter channel families with closed-form process matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    PhaseFlip,
    BitFlip,
    Depolarizing,
    AmplitudeDamping,
    UncorrelatedDephasing,
    CorrelatedDephasing,
}

/// Upper end of the `λ` search range; `e^{−4λ}` underflows long before.
pub const LAMBDA_SEARCH_MAX: f64 = 50.0;

impl Family {
    pub const ALL: [Family; 6] = [
        Family::PhaseFlip,
        Family::BitFlip,
        Family::Depolarizing,
        Family::AmplitudeDamping,
        Family::UncorrelatedDephasing,
        Family::CorrelatedDephasing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::PhaseFlip => "phase_flip",
            Family::BitFlip => "bit_flip",
            Family::Depolarizing => "depolarizing",
            Family::AmplitudeDamping => "amplitude_damping",
            Family::UncorrelatedDephasing => "uncorrelated_dephasing",
            Family::CorrelatedDephasing => "correlated_dephasing",
        }
    }

    pub fn n(self) -> usize {
        match self {
            Family::UncorrelatedDephasing | Family::CorrelatedDephasing => 2,
            _ => 1,
        }
    }

    pub fn param_name(self) -> &'static str {
        match self {
            Family::CorrelatedDephasing => "lambda",
            _ => "p",
        }
    }

    /// Closed interval searched by [`fit_channel`].
    pub fn range(self) -> (f64, f64) {
        match self {
            Family::PhaseFlip | Family::BitFlip | Family::UncorrelatedDephasing => (0.0, 0.5),
            Family::Depolarizing | Family::AmplitudeDamping => (0.0, 1.0),
            Family::CorrelatedDephasing => (0.0, LAMBDA_SEARCH_MAX),
        }
    }

    /// Closed-form process matrix at parameter `x`.
    pub fn model(self, x: f64) -> Result<AffineProcess> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&x) && self != Family::CorrelatedDephasing {
            return Err(QptError::ParamOutOfRange {
                name: self.param_name(),
                value: x,
                range: "family range",
            });
        }
        let diag = |d: &[f64], a: &[f64]| {
            AffineProcess::new(
                self.n(),
                RealMatrix::from_diagonal(&RealVector::from_row_slice(d)),
                RealVector::from_row_slice(a),
            )
        };
        match self {
            Family::PhaseFlip => {
                let g = 1.0 - 2.0 * x;
                diag(&[g, g, 1.0], &[0.0; 3])
            }
            Family::BitFlip => {
                let g = 1.0 - 2.0 * x;
                diag(&[1.0, g, g], &[0.0; 3])
            }
            Family::Depolarizing => {
                let s = 1.0 - x;
                diag(&[s, s, s], &[0.0; 3])
            }
            Family::AmplitudeDamping => {
                let s = (1.0 - x).sqrt();
                diag(&[s, s, 1.0 - x], &[0.0, 0.0, x])
            }
            Family::UncorrelatedDephasing => {
                let g = 1.0 - 2.0 * x;
                let d: Vec<f64> = pauli::all_strings(2)
                    .filter(|s| !s.is_identity())
                    .map(|s| {
                        let m = s
                            .axes()
                            .iter()
                            .filter(|a| matches!(a, Axis::X | Axis::Y))
                            .count();
                        g.powi(m as i32)
                    })
                    .collect();
                diag(&d, &[0.0; 15])
            }
            Family::CorrelatedDephasing => channels::correlated_dephasing(x),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = QptError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| QptError::Parse(format!("unknown channel family {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFit {
    pub family: Family,
    pub param: f64,
    /// `max|χ_F − χ_model|` at the fitted parameter.
    pub residual: f64,
}

fn sum_sq(proc: &AffineProcess, family: Family, x: f64) -> f64 {
    let model = family.model(x).expect("in range");
    (proc.chi() - model.chi()).iter().map(|d| d * d).sum()
}

const GRID_POINTS: usize = 400;
const GOLDEN_TOLERANCE: f64 = 1e-14;

/// Least-squares fit of a one-parameter family: coarse grid scan, then
/// golden-section refinement inside the best grid cell.
pub fn fit_channel(proc: &AffineProcess, family: Family) -> Result<ChannelFit> {
    if proc.n() != family.n() {
        return Err(QptError::WrongDimension {
            family: family.name(),
            expected: family.n(),
            actual: proc.n(),
        });
    }
    let (lo, hi) = family.range();
    let step = (hi - lo) / GRID_POINTS as f64;
    let grid = |i: usize| (lo + step * i as f64).min(hi);
    let best = (0..=GRID_POINTS)
        .min_by(|&a, &b| sum_sq(proc, family, grid(a)).total_cmp(&sum_sq(proc, family, grid(b))))
        .expect("non-empty grid");
    let mut a = grid(best.saturating_sub(1));
    let mut b = grid((best + 1).min(GRID_POINTS));
    let f = |x: f64| sum_sq(proc, family, x);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > GOLDEN_TOLERANCE * (1.0 + a.abs().max(b.abs())) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let param = [a, b, 0.5 * (a + b)]
        .into_iter()
        .min_by(|&u, &v| f(u).total_cmp(&f(v)))
        .expect("candidates");
    let residual = proc.max_abs_diff(&family.model(param)?);
    Ok(ChannelFit {
        family,
        param,
        residual,
    })
}

/// Residuals closer than this are reported as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub fits: Vec<ChannelFit>,
    pub best: Option<Family>,
    /// Several families reach the minimum residual within [`TIE_TOLERANCE`].
    pub ambiguous: bool,
}

/// Fits every family of matching qubit count.
pub fn fit_all(proc: &AffineProcess) -> Result<ModelSelection> {
    let fits = Family::ALL
        .into_iter()
        .filter(|f| f.n() == proc.n())
        .map(|f| fit_channel(proc, f))
        .collect::<Result<Vec<_>>>()?;
    let min = fits
        .iter()
        .map(|f| f.residual)
        .fold(f64::INFINITY, f64::min);
    let winners: Vec<&ChannelFit> = fits
        .iter()
        .filter(|f| f.residual - min <= TIE_TOLERANCE)
        .collect();
    Ok(ModelSelection {
        best: winners.first().map(|f| f.family),
        ambiguous: winners.len() > 1,
        fits,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Correlated,
    Uncorrelated,
    Inconclusive,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Correlated => "correlated",
            Classification::Uncorrelated => "uncorrelated",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

/// Tolerances of the discrimination test: `sum` bounds `|c_xx + c_yy − 1|`,
/// `yy` bounds `|c_yy|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscriminatorTolerance {
    pub sum: f64,
    pub yy: f64,
}

impl DiscriminatorTolerance {
    pub const EXACT: DiscriminatorTolerance = DiscriminatorTolerance {
        sum: 1e-6,
        yy: 1e-6,
    };

    /// Three standard deviations of each tested quantity.
    pub fn from_std_errors(se_xx: f64, se_yy: f64) -> Self {
        DiscriminatorTolerance {
            sum: 3.0 * se_xx.hypot(se_yy),
            yy: 3.0 * se_yy,
        }
    }

    pub fn uniform(tau: f64) -> Self {
        DiscriminatorTolerance { sum: tau, yy: tau }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    pub classification: Classification,
    pub g_hat: Option<f64>,
    pub g_std_error: Option<f64>,
}

/// Classifies dephasing from the `xx`/`yy` polarizations of `|+⟩|+⟩` after
/// the channel. Correlated dephasing keeps `c_xx + c_yy = 1` and moves weight
/// into `c_yy`; uncorrelated dephasing leaves `c_yy = 0`. When both
/// `c_xx ≈ 1` and `c_yy ≈ 0` the two models cannot be told apart.
pub fn dephasing_discriminator(
    c_xx: f64,
    c_yy: f64,
    tol: DiscriminatorTolerance,
) -> Result<Discrimination> {
    for (name, value) in [("c_xx", c_xx), ("c_yy", c_yy)] {
        if !(-1.0..=1.0).contains(&value) {
            return Err(QptError::InputOutOfRange { name, value });
        }
    }
    let yy_zero = c_yy.abs() <= tol.yy;
    let sum_one = (c_xx + c_yy - 1.0).abs() <= tol.sum;
    let (classification, g_hat) = if yy_zero && (1.0 - c_xx).abs() <= tol.sum {
        (Classification::Inconclusive, None)
    } else if sum_one && c_yy > tol.yy {
        (
            Classification::Correlated,
            Some((c_xx - c_yy).max(0.0).powf(0.25)),
        )
    } else if yy_zero {
        (Classification::Uncorrelated, Some(c_xx.max(0.0).sqrt()))
    } else {
        (Classification::Inconclusive, None)
    };
    Ok(Discrimination {
        classification,
        g_hat,
        g_std_error: None,
    })
}

/// [`dephasing_discriminator`] with 3σ tolerances and propagated error bars.
pub fn discriminate_with_errors(
    c_xx: f64,
    c_yy: f64,
    se_xx: f64,
    se_yy: f64,
) -> Result<Discrimination> {
    let mut d = dephasing_discriminator(
        c_xx,
        c_yy,
        DiscriminatorTolerance::from_std_errors(se_xx, se_yy),
    )?;
    d.g_std_error = match d.classification {
        Classification::Correlated => {
            let diff = (c_xx - c_yy).max(f64::MIN_POSITIVE);
            Some(0.25 * diff.powf(-0.75) * se_xx.hypot(se_yy))
        }
        Classification::Uncorrelated => Some(se_xx / (2.0 * c_xx.max(f64::MIN_POSITIVE).sqrt())),
        Classification::Inconclusive => None,
    };
    Ok(d)
}

/// Everything `analyze` reports about one process matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub pattern: PatternReport,
    pub fits: Vec<ChannelFit>,
    pub best: Option<Family>,
    pub ambiguous: bool,
    pub budget: ParameterBudget,
}

pub const DEFAULT_PATTERN_THRESHOLD: f64 = 1e-6;

pub fn analyze(proc: &AffineProcess, threshold: f64) -> Result<AnalysisReport> {
    let pattern = sparsity_pattern(proc, threshold)?;
    let selection = fit_all(proc)?;
    Ok(AnalysisReport {
        pattern,
        fits: selection.fits,
        best: selection.best,
        ambiguous: selection.ambiguous,
        budget: parameter_count(proc.n()),
    })
}

impl AnalysisReport {
    /// Plain-text summary for terminals.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "pattern: {} entries deviate from identity (threshold {:e})\n",
            self.pattern.nonzero_count, self.pattern.threshold
        ));
        out.push_str(&format!(
            "{:<24} {:>8} {:>22} {:>14}\n",
            "family", "param", "value", "residual"
        ));
        for fit in &self.fits {
            let mark = if Some(fit.family) == self.best {
                "*"
            } else {
                " "
            };
            out.push_str(&format!(
                "{mark}{:<23} {:>8} {:>22.15} {:>14.3e}\n",
                fit.family.name(),
                fit.family.param_name(),
                fit.param,
                fit.residual
            ));
        }
        if self.ambiguous {
            out.push_str("best fit is ambiguous (tied residuals)\n");
        }
        out.push_str(&format!(
            "budget: local {} + crosstalk {} = {} (generic {})\n",
            self.budget.local, self.budget.crosstalk, self.budget.total, self.budget.generic
        ));
        out
    }
}
