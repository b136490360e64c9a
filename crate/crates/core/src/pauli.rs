//! Pauli-string basis, Fano-coefficient indexing and conversions between
//! density matrices and generalized Bloch vectors.
//!
//! Pauli strings are indexed 1-based with each axis mapped to a base-4 digit
//! `x=0, y=1, z=2, I=3` and qubit 1 as the most significant digit, so for two
//! qubits the order is `xx, xy, xz, xI, yx, ..., Iz, II` and the all-identity
//! string always takes the last slot `4ⁿ`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::linalg::{self, c, CMatrix, ONE, ZERO};
use crate::DEFAULT_QUBIT_CAP;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
    I,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::X, Axis::Y, Axis::Z, Axis::I];

    /// Base-4 digit used for indexing.
    pub fn digit(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
            Axis::I => 3,
        }
    }

    pub fn from_digit(d: usize) -> Axis {
        Axis::ALL[d & 3]
    }

    pub fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
            Axis::I => 'I',
        }
    }

    pub fn from_char(ch: char) -> Option<Axis> {
        match ch {
            'x' | 'X' => Some(Axis::X),
            'y' | 'Y' => Some(Axis::Y),
            'z' | 'Z' => Some(Axis::Z),
            'i' | 'I' => Some(Axis::I),
            _ => None,
        }
    }

    /// 2×2 Pauli matrix.
    pub fn matrix(self) -> CMatrix {
        let i = linalg::I;
        match self {
            Axis::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Axis::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
            Axis::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
            Axis::I => linalg::identity(2),
        }
    }

    fn flips(self) -> bool {
        matches!(self, Axis::X | Axis::Y)
    }

    /// Phase picked up when acting on a basis ket with the given bit.
    fn phase(self, bit: bool) -> Complex64 {
        match (self, bit) {
            (Axis::X, _) | (Axis::I, _) | (Axis::Z, false) => ONE,
            (Axis::Z, true) => -ONE,
            (Axis::Y, false) => linalg::I,
            (Axis::Y, true) => -linalg::I,
        }
    }
}

/// Tensor product of single-qubit Pauli operators, qubit 1 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Axis>);

impl PauliString {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(QptError::InvalidLabel(String::new()));
        }
        Ok(PauliString(axes))
    }

    pub fn identity(n: usize) -> Self {
        PauliString(vec![Axis::I; n])
    }

    /// Inverse of [`pauli_index`].
    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        let total = 1usize << (2 * n);
        if n == 0 || index == 0 || index > total {
            return Err(QptError::Parse(format!(
                "Pauli index {index} out of range for {n} qubit(s)"
            )));
        }
        let mut rest = index - 1;
        let mut axes = vec![Axis::I; n];
        for slot in axes.iter_mut().rev() {
            *slot = Axis::from_digit(rest % 4);
            rest /= 4;
        }
        Ok(PauliString(axes))
    }

    pub fn axes(&self) -> &[Axis] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&a| a == Axis::I)
    }

    /// Bit mask (basis-index convention) of the qubits whose bit is flipped.
    fn flip_mask(&self) -> usize {
        let n = self.n();
        self.0
            .iter()
            .enumerate()
            .filter(|(_, a)| a.flips())
            .fold(0, |m, (q, _)| m | 1 << (n - 1 - q))
    }

    /// Phase of `P|k⟩ = phase · |k ⊕ mask⟩`.
    fn phase_on(&self, ket: usize) -> Complex64 {
        let n = self.n();
        self.0.iter().enumerate().fold(ONE, |acc, (q, a)| {
            acc * a.phase(ket >> (n - 1 - q) & 1 == 1)
        })
    }

    /// `Tr(P · m)` in `O(2ⁿ)` using the permutation-with-phases structure.
    pub fn expectation(&self, m: &CMatrix) -> Complex64 {
        let mask = self.flip_mask();
        (0..m.nrows())
            .map(|k| self.phase_on(k) * m[(k, k ^ mask)])
            .sum()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.label())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = QptError;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|ch| Axis::from_char(ch).ok_or_else(|| QptError::InvalidLabel(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(axes)
    }
}

/// 1-based position of `s` in the Fano ordering; the all-identity string maps
/// to `4ⁿ`.
pub fn pauli_index(s: &PauliString) -> usize {
    s.0.iter().fold(0, |acc, a| acc * 4 + a.digit()) + 1
}

/// Dense `2ⁿ×2ⁿ` matrix of `s`, qubit 1 as the leftmost Kronecker factor.
pub fn pauli_matrix(s: &PauliString) -> CMatrix {
    let dim = 1usize << s.n();
    let mask = s.flip_mask();
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        m[(k ^ mask, k)] = s.phase_on(k);
    }
    m
}

/// All `4ⁿ` Pauli strings in index order.
pub fn all_strings(n: usize) -> impl Iterator<Item = PauliString> {
    (1..=(1usize << (2 * n))).map(move |i| PauliString::from_index(n, i).expect("index in range"))
}

/// Labels of the `4ⁿ − 1` Bloch-vector slots, in index order.
pub fn bloch_labels(n: usize) -> Vec<String> {
    all_strings(n)
        .filter(|s| !s.is_identity())
        .map(|s| s.to_string())
        .collect()
}

/// `Tr(P_α m)` for every Pauli string, in index order (identity last).
pub fn pauli_expectations(m: &CMatrix, n: usize) -> Vec<Complex64> {
    all_strings(n).map(|s| s.expectation(m)).collect()
}

pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(QptError::Parse(format!(
            "dimension {dim} is not a power of two ≥ 2"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn check_qubits(n: usize, cap: usize) -> Result<()> {
    if n == 0 || n > cap {
        Err(QptError::CapExceeded { n, cap })
    } else {
        Ok(())
    }
}

/// Tolerances applied when validating a density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateTolerance {
    pub hermitian: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl StateTolerance {
    pub const EXACT: StateTolerance = StateTolerance {
        hermitian: 1e-12,
        trace: 1e-12,
        min_eigenvalue: 1e-9,
    };

    /// Looser bounds for statistically estimated inputs.
    pub fn relaxed(tol: f64) -> Self {
        StateTolerance {
            hermitian: tol,
            trace: tol,
            min_eigenvalue: tol,
        }
    }
}

impl Default for StateTolerance {
    fn default() -> Self {
        StateTolerance::EXACT
    }
}

/// Hermitian, unit-trace, positive semidefinite `2ⁿ×2ⁿ` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: CMatrix,
}

impl DensityMatrix {
    pub fn new(data: CMatrix) -> Result<Self> {
        Self::with_tolerance(data, StateTolerance::EXACT)
    }

    pub fn with_tolerance(data: CMatrix, tol: StateTolerance) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(QptError::DimensionMismatch {
                expected: data.nrows(),
                actual: data.ncols(),
            });
        }
        let n = qubits_for_dim(data.nrows())?;
        check_qubits(n, DEFAULT_QUBIT_CAP)?;
        let residual = linalg::hermiticity_residual(&data);
        if !(residual <= tol.hermitian) {
            return Err(QptError::NonHermitianInput { residual });
        }
        let trace = linalg::trace(&data);
        if !((trace.re - 1.0).abs() <= tol.trace && trace.im.abs() <= tol.trace) {
            return Err(QptError::BadTrace { trace: trace.re });
        }
        let min_eigenvalue = linalg::min_hermitian_eigenvalue(&data);
        if min_eigenvalue < -tol.min_eigenvalue {
            return Err(QptError::NotPositive { min_eigenvalue });
        }
        Ok(DensityMatrix { n, data })
    }

    /// Skips validation. The caller guarantees the invariants.
    pub(crate) fn new_unchecked(n: usize, data: CMatrix) -> Self {
        DensityMatrix { n, data }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QptError::Parse("state vector has zero norm".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        DensityMatrix::new_unchecked(n, linalg::identity(dim) * c(1.0 / dim as f64, 0.0))
    }

    /// Tensor product, `self` as the more significant factor.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::new_unchecked(self.n + other.n, linalg::kron(&self.data, &other.data))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }
}

/// Generalized Bloch vector: the `4ⁿ − 1` real Pauli coefficients of a state,
/// the normalization coefficient `c_{I…I} = 1` left implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct FanoVector {
    n: usize,
    b: Vec<f64>,
}

impl FanoVector {
    /// Slack allowed beyond `[-1, 1]` for round-off.
    const RANGE_SLACK: f64 = 1e-12;

    pub fn new(n: usize, b: Vec<f64>) -> Result<Self> {
        Self::with_slack(n, b, Self::RANGE_SLACK)
    }

    /// Like [`FanoVector::new`] with a caller-chosen excess over `[-1, 1]`,
    /// for statistical estimates.
    pub fn with_slack(n: usize, b: Vec<f64>, slack: f64) -> Result<Self> {
        check_qubits(n, DEFAULT_QUBIT_CAP)?;
        let expected = (1usize << (2 * n)) - 1;
        if b.len() != expected {
            return Err(QptError::DimensionMismatch {
                expected,
                actual: b.len(),
            });
        }
        for (index, &value) in b.iter().enumerate() {
            if !value.is_finite() || value.abs() > 1.0 + slack {
                return Err(QptError::CoefficientOutOfRange {
                    index: index + 1,
                    value,
                });
            }
        }
        Ok(FanoVector { n, b })
    }

    pub(crate) fn new_unchecked(n: usize, b: Vec<f64>) -> Self {
        FanoVector { n, b }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.b
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.b
    }

    /// Coefficient of a Pauli string; the identity string returns 1.
    pub fn get(&self, s: &PauliString) -> f64 {
        let idx = pauli_index(s);
        if idx == self.b.len() + 1 {
            1.0
        } else {
            self.b[idx - 1]
        }
    }

    /// `[b; 1]`, the column used by the augmented affine map.
    pub fn augmented(&self) -> Vec<f64> {
        let mut v = self.b.clone();
        v.push(1.0);
        v
    }

    pub fn squared_norm(&self) -> f64 {
        self.b.iter().map(|x| x * x).sum()
    }
}

/// Maximum `|Im c_α|` tolerated before a coefficient is rejected.
const IMAG_TOLERANCE: f64 = 1e-9;

/// `b_α = Tr(P_α ρ)` for every non-identity string.
pub fn density_to_fano(rho: &DensityMatrix) -> Result<FanoVector> {
    let coeffs = pauli_expectations(rho.matrix(), rho.n());
    let mut b = Vec::with_capacity(coeffs.len() - 1);
    for z in &coeffs[..coeffs.len() - 1] {
        if z.im.abs() >= IMAG_TOLERANCE {
            return Err(QptError::NonHermitianInput {
                residual: z.im.abs(),
            });
        }
        b.push(z.re);
    }
    Ok(FanoVector::new_unchecked(rho.n(), b))
}

/// `Σ_α w_α P_α` over all `4ⁿ` strings, weights in index order.
pub fn pauli_combination(n: usize, weights: &[f64]) -> CMatrix {
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for (s, &w) in all_strings(n).zip(weights) {
        if w == 0.0 {
            continue;
        }
        let mask = s.flip_mask();
        for k in 0..dim {
            m[(k ^ mask, k)] += s.phase_on(k) * w;
        }
    }
    m
}

/// `(1/N) Σ c_α P_α` without a positivity check.
pub fn fano_to_matrix(v: &FanoVector) -> CMatrix {
    let dim = 1usize << v.n();
    pauli_combination(v.n(), &v.augmented()) / c(dim as f64, 0.0)
}

/// Rebuilds `ρ`; fails with [`QptError::NotPositive`] when `v` is not a
/// physical state. Use [`fano_to_matrix`] to get the raw matrix regardless.
pub fn fano_to_density(v: &FanoVector) -> Result<DensityMatrix> {
    let m = fano_to_matrix(v);
    let min_eigenvalue = linalg::min_hermitian_eigenvalue(&m);
    if min_eigenvalue < -StateTolerance::EXACT.min_eigenvalue {
        return Err(QptError::NotPositive { min_eigenvalue });
    }
    Ok(DensityMatrix::new_unchecked(v.n(), m))
}
