//! Finite-shot polarization measurements.
//!
//! A measurement setting assigns one of `X, Y, Z` to every qubit. Each qubit
//! is rotated so that its axis lines up with `z`, then all qubits are read
//! out in the computational basis: bit 0 is the `+1` eigenvalue, bit 1 is
//! `−1`. Coefficients of strings containing `I` are obtained from the
//! marginals of the setting that replaces every `I` by `Z`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channels::Channel;
use crate::error::{QptError, Result};
use crate::linalg::{self, c, CMatrix};
use crate::pauli::{self, all_strings, check_qubits, Axis, DensityMatrix, FanoVector, PauliString};
use crate::rng;
use crate::tomography::{self, preparation_basis, BasisMatrix, Reconstruction};
use crate::DEFAULT_QUBIT_CAP;

/// Negative probabilities down to this value are clamped to zero.
const NEGATIVE_PROBABILITY_CLAMP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementSetting(Vec<Axis>);

impl MeasurementSetting {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.contains(&Axis::I) {
            let label: String = axes.iter().map(|a| a.label()).collect();
            return Err(QptError::InvalidLabel(label));
        }
        Ok(MeasurementSetting(axes))
    }

    /// Setting used for a Pauli string: every `I` is measured as `Z`.
    pub fn for_string(s: &PauliString) -> Self {
        MeasurementSetting(
            s.axes()
                .iter()
                .map(|&a| if a == Axis::I { Axis::Z } else { a })
                .collect(),
        )
    }

    pub fn axes(&self) -> &[Axis] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Position among the `3ⁿ` settings (`X < Y < Z`, qubit 1 slowest).
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, a| acc * 3 + a.digit())
    }

    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut axes = vec![Axis::Z; n];
        for slot in axes.iter_mut().rev() {
            *slot = Axis::from_digit(index % 3);
            index /= 3;
        }
        MeasurementSetting(axes)
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.label().to_ascii_uppercase())?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementSetting {
    type Err = QptError;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|ch| Axis::from_char(ch).ok_or_else(|| QptError::InvalidLabel(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        MeasurementSetting::new(axes).map_err(|_| QptError::InvalidLabel(s.to_string()))
    }
}

/// All `3ⁿ` settings in index order.
pub fn all_settings(n: usize) -> Vec<MeasurementSetting> {
    (0..3usize.pow(n as u32))
        .map(|i| MeasurementSetting::from_index(n, i))
        .collect()
}

/// `W` with `W σ_axis W† = σ_z`: identity for `Z`, Hadamard for `X`,
/// `H S†` for `Y`. `I` maps to the identity.
pub fn rotation_for_axis(axis: Axis) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]);
    match axis {
        Axis::Z | Axis::I => linalg::identity(2),
        Axis::X => hadamard,
        Axis::Y => {
            let s_dag = CMatrix::from_row_slice(
                2,
                2,
                &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)],
            );
            hadamard * s_dag
        }
    }
}

fn setting_rotation(s: &MeasurementSetting) -> CMatrix {
    s.axes()
        .iter()
        .map(|&a| rotation_for_axis(a))
        .reduce(|acc, w| linalg::kron(&acc, &w))
        .expect("non-empty setting")
}

/// Born-rule probabilities of the `2ⁿ` outcomes, outcome `o` read with
/// qubit 1 as the most significant bit.
pub fn outcome_distribution(rho: &DensityMatrix, s: &MeasurementSetting) -> Result<Vec<f64>> {
    if rho.n() != s.n() {
        return Err(QptError::DimensionMismatch {
            expected: s.n(),
            actual: rho.n(),
        });
    }
    let w = setting_rotation(s);
    let rotated = &w * rho.matrix() * w.adjoint();
    let mut probs: Vec<f64> = rotated.diagonal().iter().map(|z| z.re).collect();
    if let Some(&min) = probs.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -NEGATIVE_PROBABILITY_CLAMP {
            return Err(QptError::NotPositive {
                min_eigenvalue: min,
            });
        }
    }
    for p in probs.iter_mut() {
        *p = p.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(probs)
}

pub fn outcome_label(outcome: usize, n: usize) -> String {
    (0..n)
        .map(|q| {
            if outcome >> (n - 1 - q) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

pub fn parse_outcome(label: &str, n: usize) -> Result<usize> {
    if label.len() != n || !label.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(QptError::Parse(format!(
            "invalid {n}-bit outcome {label:?}"
        )));
    }
    Ok(label
        .bytes()
        .fold(0, |acc, b| acc << 1 | (b - b'0') as usize))
}

/// Outcome counts of one measurement setting on one prepared state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotTable {
    pub state: usize,
    pub setting: MeasurementSetting,
    pub shots: u64,
    /// Nonzero counts keyed by outcome bit string, qubit 1 first.
    pub counts: BTreeMap<String, u64>,
    pub seed: u64,
}

impl ShotTable {
    pub fn new(
        state: usize,
        setting: MeasurementSetting,
        shots: u64,
        counts: BTreeMap<String, u64>,
        seed: u64,
    ) -> Result<Self> {
        if shots == 0 {
            return Err(QptError::Parse("shot count must be positive".into()));
        }
        let n = setting.n();
        let mut total: u64 = 0;
        for (k, &v) in &counts {
            parse_outcome(k, n)?;
            total = total
                .checked_add(v)
                .ok_or_else(|| QptError::Parse("count overflow".into()))?;
        }
        if total != shots {
            return Err(QptError::Parse(format!(
                "counts sum to {total}, expected {shots}"
            )));
        }
        Ok(ShotTable {
            state,
            setting,
            shots,
            counts,
            seed,
        })
    }

    /// Relative frequency per outcome index.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.setting.n();
        let mut f = vec![0.0; 1 << n];
        for (k, &v) in &self.counts {
            let o = parse_outcome(k, n).expect("validated on construction");
            f[o] = v as f64 / self.shots as f64;
        }
        f
    }
}

/// Draws `shots` outcomes from the stream keyed by `(seed, state, setting)`.
pub fn sample_shots(
    rho: &DensityMatrix,
    setting: &MeasurementSetting,
    shots: u64,
    seed: u64,
    state: usize,
) -> Result<ShotTable> {
    if shots == 0 {
        return Err(QptError::Parse("shot count must be positive".into()));
    }
    let probs = outcome_distribution(rho, setting)?;
    let mut stream = rng::keyed_stream(seed, state, setting.index());
    let draws = rng::multinomial(&probs, shots, &mut stream);
    let n = setting.n();
    let counts = draws
        .into_iter()
        .enumerate()
        .filter(|(_, k)| *k > 0)
        .map(|(o, k)| (outcome_label(o, n), k))
        .collect();
    Ok(ShotTable {
        state,
        setting: setting.clone(),
        shots,
        counts,
        seed,
    })
}

/// Estimated Bloch vector with per-entry standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct FanoEstimate {
    pub vector: FanoVector,
    pub std_errors: Vec<f64>,
}

/// `±1` eigenvalue product over the qubits where `s` is not `I`.
fn parity_sign(s: &PauliString, outcome: usize) -> f64 {
    let n = s.n();
    let odd = s
        .axes()
        .iter()
        .enumerate()
        .filter(|(q, a)| **a != Axis::I && outcome >> (n - 1 - q) & 1 == 1)
        .count()
        % 2
        == 1;
    if odd {
        -1.0
    } else {
        1.0
    }
}

/// Core estimator over per-setting frequency vectors, `shots = None` meaning
/// exact probabilities (standard errors reported as 0).
fn estimate_from_frequencies<F>(n: usize, mut lookup: F) -> Result<FanoEstimate>
where
    F: FnMut(&MeasurementSetting) -> Result<(Vec<f64>, Option<u64>)>,
{
    let mut cache: BTreeMap<MeasurementSetting, (Vec<f64>, Option<u64>)> = BTreeMap::new();
    let mut b = Vec::with_capacity((1 << (2 * n)) - 1);
    let mut se = Vec::with_capacity(b.capacity());
    for s in all_strings(n).filter(|s| !s.is_identity()) {
        let setting = MeasurementSetting::for_string(&s);
        if !cache.contains_key(&setting) {
            let entry = lookup(&setting)?;
            cache.insert(setting.clone(), entry);
        }
        let (freq, shots) = &cache[&setting];
        let value: f64 = freq
            .iter()
            .enumerate()
            .map(|(o, f)| parity_sign(&s, o) * f)
            .sum();
        b.push(value);
        se.push(match shots {
            Some(shots) => ((1.0 - value * value).max(0.0) / *shots as f64).sqrt(),
            None => 0.0,
        });
    }
    Ok(FanoEstimate {
        vector: FanoVector::with_slack(n, b, 1e-9)?,
        std_errors: se,
    })
}

/// Estimate from the `3ⁿ` shot tables of one state.
pub fn estimate_fano(n: usize, tables: &[ShotTable]) -> Result<FanoEstimate> {
    check_qubits(n, DEFAULT_QUBIT_CAP)?;
    let state = tables.first().map(|t| t.state).unwrap_or(0);
    estimate_from_frequencies(n, |setting| {
        let table = tables
            .iter()
            .find(|t| &t.setting == setting)
            .ok_or_else(|| QptError::MissingSetting {
                state,
                setting: setting.to_string(),
            })?;
        Ok((table.frequencies(), Some(table.shots)))
    })
}

/// The same estimator fed with exact Born probabilities.
pub fn estimate_fano_exact(rho: &DensityMatrix) -> Result<FanoEstimate> {
    estimate_from_frequencies(rho.n(), |setting| {
        Ok((outcome_distribution(rho, setting)?, None))
    })
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub reconstruction: Reconstruction,
    pub tables: Vec<ShotTable>,
    /// `4ⁿ · 3ⁿ · shots`.
    pub total_shots: u64,
    /// Standard errors of every measured output Fano vector, per state.
    pub std_errors: Vec<Vec<f64>>,
}

/// Full finite-shot process tomography of `channel`: prepare each basis
/// state, apply the channel, sample all `3ⁿ` settings, estimate the output
/// Fano vectors and invert.
pub fn tomography_experiment(channel: &Channel, shots: u64, seed: u64) -> Result<Experiment> {
    if shots == 0 {
        return Err(QptError::Parse("shot count must be positive".into()));
    }
    let n = channel.n();
    let basis = preparation_basis(n)?;
    let settings = all_settings(n);
    let per_state: Vec<Vec<ShotTable>> = basis
        .states()
        .par_iter()
        .enumerate()
        .map(|(i, rho)| {
            let out = channel.apply(rho)?;
            settings
                .iter()
                .map(|s| sample_shots(&out, s, shots, seed, i))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let tables: Vec<ShotTable> = per_state.into_iter().flatten().collect();
    let mut exp = reconstruct_from_tables(n, &tables)?;
    exp.total_shots = (basis.states().len() * settings.len()) as u64 * shots;
    Ok(exp)
}

/// Reconstruction from externally supplied (or previously exported) tables.
pub fn reconstruct_from_tables(n: usize, tables: &[ShotTable]) -> Result<Experiment> {
    check_qubits(n, DEFAULT_QUBIT_CAP)?;
    let basis = preparation_basis(n)?;
    let count = basis.states().len();
    let mut by_state: Vec<Vec<ShotTable>> = vec![Vec::new(); count];
    for t in tables {
        if t.setting.n() != n {
            return Err(QptError::DimensionMismatch {
                expected: n,
                actual: t.setting.n(),
            });
        }
        let slot = by_state.get_mut(t.state).ok_or_else(|| {
            QptError::Parse(format!("state index {} out of range 0..{count}", t.state))
        })?;
        slot.push(t.clone());
    }
    let estimates = by_state
        .iter()
        .enumerate()
        .map(|(i, ts)| {
            if ts.is_empty() {
                return Err(QptError::MissingSetting {
                    state: i,
                    setting: MeasurementSetting::from_index(n, 0).to_string(),
                });
            }
            estimate_fano(n, ts).map_err(|e| match e {
                QptError::MissingSetting { setting, .. } => {
                    QptError::MissingSetting { state: i, setting }
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cols: Vec<FanoVector> = estimates.iter().map(|e| e.vector.clone()).collect();
    let r_out = BasisMatrix::from_columns(n, &cols);
    let reconstruction = tomography::reconstruct(&r_out, &basis.r_matrix())?;
    Ok(Experiment {
        reconstruction,
        tables: tables.to_vec(),
        total_shots: tables.iter().map(|t| t.shots).sum(),
        std_errors: estimates.into_iter().map(|e| e.std_errors).collect(),
    })
}

/// Pipeline with exact probabilities substituted for sampled frequencies.
pub fn tomography_from_probabilities(channel: &Channel) -> Result<Reconstruction> {
    let n = channel.n();
    let basis = preparation_basis(n)?;
    let cols = basis
        .states()
        .iter()
        .map(|rho| Ok(estimate_fano_exact(&channel.apply(rho)?)?.vector))
        .collect::<Result<Vec<_>>>()?;
    tomography::reconstruct(&BasisMatrix::from_columns(n, &cols), &basis.r_matrix())
}

/// `xx` and `yy` polarizations after sending `|+⟩|+⟩` through a two-qubit
/// channel.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationPair {
    pub c_xx: f64,
    pub c_yy: f64,
    /// Standard errors; `None` for exact expectation values.
    pub std_errors: Option<(f64, f64)>,
    pub tables: Vec<ShotTable>,
}

/// Runs only the `XX` and `YY` settings on `|+⟩|+⟩`. `shots = None` returns
/// exact expectation values.
pub fn polarization_experiment(
    channel: &Channel,
    shots: Option<u64>,
    seed: u64,
) -> Result<PolarizationPair> {
    if channel.n() != 2 {
        return Err(QptError::DimensionMismatch {
            expected: 2,
            actual: channel.n(),
        });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityMatrix::from_pure(&[c(h, 0.0), c(h, 0.0)])?;
    let out = channel.apply(&plus.tensor(&plus))?;
    let xx: PauliString = "xx".parse()?;
    let yy: PauliString = "yy".parse()?;
    match shots {
        None => {
            let b = pauli::density_to_fano(&out)?;
            Ok(PolarizationPair {
                c_xx: b.get(&xx),
                c_yy: b.get(&yy),
                std_errors: None,
                tables: Vec::new(),
            })
        }
        Some(shots) => {
            let mut values = [0.0; 2];
            let mut errors = [0.0; 2];
            let mut tables = Vec::new();
            for (slot, s) in [&xx, &yy].into_iter().enumerate() {
                let setting = MeasurementSetting::for_string(s);
                let table = sample_shots(&out, &setting, shots, seed, 0)?;
                let value: f64 = table
                    .frequencies()
                    .iter()
                    .enumerate()
                    .map(|(o, f)| parity_sign(s, o) * f)
                    .sum();
                values[slot] = value;
                errors[slot] = ((1.0 - value * value).max(0.0) / shots as f64).sqrt();
                tables.push(table);
            }
            Ok(PolarizationPair {
                c_xx: values[0],
                c_yy: values[1],
                std_errors: Some((errors[0], errors[1])),
                tables,
            })
        }
    }
}
