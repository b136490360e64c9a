//! Quantum operations: Kraus channels, the analytic correlated-dephasing
//! channel, tensor composition, unitary channels, and the exact conversion of
//! any channel to its affine map on Fano vectors.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{QptError, Result};
use crate::linalg::{self, c, CMatrix, RealMatrix, RealVector, ONE, ZERO};
use crate::pauli::{
    self, all_strings, check_qubits, qubits_for_dim, Axis, DensityMatrix, FanoVector,
};
use crate::DEFAULT_QUBIT_CAP;

/// Maximum `‖Σ E_k†E_k − I‖_max` accepted for a channel.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-10;

/// Unitarity tolerance for gates and KAK factors.
pub const UNITARY_TOLERANCE: f64 = 1e-12;

/// Max-norm residual of `Σ E_k† E_k − I`.
pub fn kraus_completeness(ops: &[CMatrix]) -> f64 {
    let Some(first) = ops.first() else {
        return f64::INFINITY;
    };
    let dim = first.nrows();
    let mut sum = CMatrix::zeros(dim, dim);
    for e in ops {
        sum += e.adjoint() * e;
    }
    linalg::max_abs(&(sum - linalg::identity(dim)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    n: usize,
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| QptError::Parse("Kraus channel needs at least one operator".into()))?;
        let dim = first.nrows();
        let n = qubits_for_dim(dim)?;
        check_qubits(n, DEFAULT_QUBIT_CAP)?;
        for op in &ops {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(QptError::DimensionMismatch {
                    expected: dim,
                    actual: op.nrows().max(op.ncols()),
                });
            }
        }
        let residual = kraus_completeness(&ops);
        if !(residual < COMPLETENESS_TOLERANCE) {
            return Err(QptError::IncompleteKraus { residual });
        }
        Ok(KrausChannel { n, ops })
    }

    pub fn identity(n: usize) -> Self {
        KrausChannel {
            n,
            ops: vec![linalg::identity(1 << n)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn completeness(&self) -> f64 {
        kraus_completeness(&self.ops)
    }

    /// `Σ E_k X E_k†` for an arbitrary operator `X`.
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        let dim = x.nrows();
        let mut out = CMatrix::zeros(dim, dim);
        for e in &self.ops {
            out += e * x * e.adjoint();
        }
        out
    }
}

/// `ρ' = Σ E_k ρ E_k†`.
pub fn apply_kraus(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if ch.n != rho.n() {
        return Err(QptError::DimensionMismatch {
            expected: ch.n,
            actual: rho.n(),
        });
    }
    let residual = ch.completeness();
    if !(residual < COMPLETENESS_TOLERANCE) {
        return Err(QptError::IncompleteKraus { residual });
    }
    let out = ch.apply_matrix(rho.matrix());
    Ok(DensityMatrix::new_unchecked(rho.n(), hermitize(out)))
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * c(0.5, 0.0)
}

/// How strictly the flip-channel probability range is enforced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlipRange {
    /// `0 ≤ p ≤ ½`.
    #[default]
    Strict,
    /// `0 ≤ p ≤ 1`; still CPTP, `1 − 2p` becomes negative.
    Full,
}

fn check_prob(name: &'static str, p: f64, max: f64, range: &'static str) -> Result<()> {
    if !(0.0..=max).contains(&p) {
        return Err(QptError::ParamOutOfRange {
            name,
            value: p,
            range,
        });
    }
    Ok(())
}

fn check_flip(p: f64, range: FlipRange) -> Result<()> {
    match range {
        FlipRange::Strict => check_prob("p", p, 0.5, "[0, 0.5]"),
        FlipRange::Full => check_prob("p", p, 1.0, "[0, 1]"),
    }
}

fn scaled(axis: Axis, weight: f64) -> CMatrix {
    axis.matrix() * c(weight.sqrt(), 0.0)
}

/// `ρ → p σ_z ρ σ_z + (1 − p) ρ`, `0 ≤ p ≤ ½`.
pub fn phase_flip(p: f64) -> Result<KrausChannel> {
    phase_flip_with(p, FlipRange::Strict)
}

pub fn phase_flip_with(p: f64, range: FlipRange) -> Result<KrausChannel> {
    check_flip(p, range)?;
    flip_channel(Axis::Z, p)
}

/// `ρ → p σ_x ρ σ_x + (1 − p) ρ`, `0 ≤ p ≤ ½`.
pub fn bit_flip(p: f64) -> Result<KrausChannel> {
    bit_flip_with(p, FlipRange::Strict)
}

pub fn bit_flip_with(p: f64, range: FlipRange) -> Result<KrausChannel> {
    check_flip(p, range)?;
    flip_channel(Axis::X, p)
}

fn flip_channel(axis: Axis, p: f64) -> Result<KrausChannel> {
    let mut ops = vec![scaled(Axis::I, 1.0 - p)];
    if p > 0.0 {
        ops.push(scaled(axis, p));
    }
    KrausChannel::new(ops)
}

/// Uniform Pauli mixture `(1 − ¾p) ρ + (p/4)(XρX + YρY + ZρZ)`, i.e. the
/// Bloch vector shrinks by `1 − p`. `0 ≤ p ≤ 1`.
pub fn depolarizing(p: f64) -> Result<KrausChannel> {
    check_prob("p", p, 1.0, "[0, 1]")?;
    let mut ops = vec![scaled(Axis::I, 1.0 - 0.75 * p)];
    if p > 0.0 {
        ops.extend([Axis::X, Axis::Y, Axis::Z].map(|a| scaled(a, p / 4.0)));
    }
    KrausChannel::new(ops)
}

/// Decay towards `|0⟩`: `E₀ = |0⟩⟨0| + √(1−p)|1⟩⟨1|`, `E₁ = √p|0⟩⟨1|`.
pub fn amplitude_damping(p: f64) -> Result<KrausChannel> {
    check_prob("p", p, 1.0, "[0, 1]")?;
    let e0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c((1.0 - p).sqrt(), 0.0)]);
    let e1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(p.sqrt(), 0.0), ZERO, ZERO]);
    KrausChannel::new(vec![e0, e1])
}

/// All pairwise tensor products; `ch1` acts on the more significant qubits.
pub fn tensor_channel(ch1: &KrausChannel, ch2: &KrausChannel) -> Result<KrausChannel> {
    check_qubits(ch1.n + ch2.n, DEFAULT_QUBIT_CAP)?;
    let ops = ch1
        .ops
        .iter()
        .flat_map(|a| ch2.ops.iter().map(move |b| linalg::kron(a, b)))
        .collect();
    Ok(KrausChannel {
        n: ch1.n + ch2.n,
        ops,
    })
}

fn unitarity_residual(u: &CMatrix) -> f64 {
    linalg::max_abs(&(u.adjoint() * u - linalg::identity(u.nrows())))
}

pub fn check_unitary(u: &CMatrix) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(QptError::DimensionMismatch {
            expected: u.nrows(),
            actual: u.ncols(),
        });
    }
    let residual = unitarity_residual(u);
    if !(residual <= UNITARY_TOLERANCE) {
        return Err(QptError::NotUnitary { residual });
    }
    Ok(())
}

/// Single-Kraus channel `{U}`.
pub fn unitary_channel(u: CMatrix) -> Result<KrausChannel> {
    check_unitary(&u)?;
    let n = qubits_for_dim(u.nrows())?;
    check_qubits(n, DEFAULT_QUBIT_CAP)?;
    Ok(KrausChannel { n, ops: vec![u] })
}

/// Single-qubit `R_z(θ) = diag(e^{−iθ/2}, e^{iθ/2})`.
pub fn rz(theta: f64) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::from_polar(1.0, -theta / 2.0),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, theta / 2.0),
        ],
    )
}

/// Common random `z`-rotation of every qubit, with the rotation angle drawn
/// from a zero-mean Gaussian of variance `2λ`.
///
/// Averaged over the angle, the element `ρ_jk` is multiplied by
/// `exp(−λ (S_j − S_k)² / 4)` where `S_j` counts `+1` per `|0⟩` and `−1`
/// per `|1⟩` in the basis state `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedDephasing {
    n: usize,
    lambda: f64,
}

impl CorrelatedDephasing {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        check_qubits(n, DEFAULT_QUBIT_CAP)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(QptError::ParamOutOfRange {
                name: "lambda",
                value: lambda,
                range: "[0, inf)",
            });
        }
        Ok(CorrelatedDephasing { n, lambda })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Single-coherence damping factor `g = e^{−λ}`.
    pub fn g(&self) -> f64 {
        (-self.lambda).exp()
    }

    fn magnetization(&self, basis: usize) -> i64 {
        let ones = basis.count_ones() as i64;
        self.n as i64 - 2 * ones
    }

    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        let dim = x.nrows();
        let s: Vec<i64> = (0..dim).map(|j| self.magnetization(j)).collect();
        CMatrix::from_fn(dim, dim, |j, k| {
            let d = (s[j] - s[k]) as f64;
            x[(j, k)] * (-self.lambda * d * d / 4.0).exp()
        })
    }
}

/// Analytic two-qubit correlated-dephasing map: with `g = e^{−λ}`,
/// `h = ½(1 + g⁴)` and `k = ½(1 − g⁴)`, the double coherences mix as
/// `xx' = h·xx + k·yy`, `xy' = h·xy − k·yx`, `yx' = h·yx − k·xy`,
/// `yy' = h·yy + k·xx`; single coherences shrink by `g`; populations are kept.
pub fn correlated_dephasing(lambda: f64) -> Result<AffineProcess> {
    let ch = CorrelatedDephasing::new(2, lambda)?;
    let g = ch.g();
    let g4 = g.powi(4);
    let h = 0.5 * (1.0 + g4);
    let k = 0.5 * (1.0 - g4);
    let idx = |label: &str| pauli::pauli_index(&label.parse().expect("label")) - 1;
    let mut m = RealMatrix::zeros(15, 15);
    for label in ["xz", "xI", "yz", "yI", "zx", "zy", "Ix", "Iy"] {
        m[(idx(label), idx(label))] = g;
    }
    for label in ["zz", "zI", "Iz"] {
        m[(idx(label), idx(label))] = 1.0;
    }
    for label in ["xx", "xy", "yx", "yy"] {
        m[(idx(label), idx(label))] = h;
    }
    m[(idx("xx"), idx("yy"))] = k;
    m[(idx("yy"), idx("xx"))] = k;
    m[(idx("xy"), idx("yx"))] = -k;
    m[(idx("yx"), idx("xy"))] = -k;
    AffineProcess::new(2, m, RealVector::zeros(15))
}

/// Any channel the crate can simulate.
#[derive(Clone, Debug, PartialEq)]
pub enum Channel {
    Kraus(KrausChannel),
    CorrelatedDephasing(CorrelatedDephasing),
}

impl From<KrausChannel> for Channel {
    fn from(k: KrausChannel) -> Self {
        Channel::Kraus(k)
    }
}

impl From<CorrelatedDephasing> for Channel {
    fn from(c: CorrelatedDephasing) -> Self {
        Channel::CorrelatedDephasing(c)
    }
}

impl Channel {
    pub fn n(&self) -> usize {
        match self {
            Channel::Kraus(k) => k.n(),
            Channel::CorrelatedDephasing(c) => c.n(),
        }
    }

    /// Linear extension of the channel to arbitrary operators.
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        match self {
            Channel::Kraus(k) => k.apply_matrix(x),
            Channel::CorrelatedDephasing(c) => c.apply_matrix(x),
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match self {
            Channel::Kraus(k) => apply_kraus(k, rho),
            Channel::CorrelatedDephasing(c) => {
                if c.n() != rho.n() {
                    return Err(QptError::DimensionMismatch {
                        expected: c.n(),
                        actual: rho.n(),
                    });
                }
                Ok(DensityMatrix::new_unchecked(
                    rho.n(),
                    c.apply_matrix(rho.matrix()),
                ))
            }
        }
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ 𝓔(|i⟩⟨j|)` built from matrix units.
    pub fn choi(&self) -> CMatrix {
        let dim = 1usize << self.n();
        let mut j = CMatrix::zeros(dim * dim, dim * dim);
        for r in 0..dim {
            for col in 0..dim {
                let mut unit = CMatrix::zeros(dim, dim);
                unit[(r, col)] = ONE;
                let image = self.apply_matrix(&unit);
                j.view_mut((r * dim, col * dim), (dim, dim))
                    .copy_from(&image);
            }
        }
        j
    }

    /// Kraus representation. Non-Kraus channels are decomposed through the
    /// eigenvectors of their Choi matrix.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        match self {
            Channel::Kraus(k) => Ok(k.clone()),
            Channel::CorrelatedDephasing(_) => {
                let dim = 1usize << self.n();
                let (values, vectors) = linalg::hermitian_eigen(&self.choi());
                let cutoff = 1e-14 * dim as f64;
                let mut ops = Vec::new();
                for (i, &v) in values.iter().enumerate() {
                    if v <= cutoff {
                        continue;
                    }
                    let col = vectors.column(i);
                    let scale = c(v.sqrt(), 0.0);
                    ops.push(CMatrix::from_fn(dim, dim, |out, inp| {
                        col[inp * dim + out] * scale
                    }));
                }
                KrausChannel::new(ops)
            }
        }
    }
}

/// Tensor product of two arbitrary channels, `a` on the more significant
/// qubits.
pub fn tensor(a: &Channel, b: &Channel) -> Result<Channel> {
    Ok(Channel::Kraus(tensor_channel(
        &a.to_kraus()?,
        &b.to_kraus()?,
    )?))
}

/// Affine map `[b'; 1] = 𝓜 [b; 1]` on Fano vectors, stored as its free part
/// `χ_F = [M | a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineProcess {
    n: usize,
    m: RealMatrix,
    a: RealVector,
}

impl AffineProcess {
    pub fn new(n: usize, m: RealMatrix, a: RealVector) -> Result<Self> {
        check_qubits(n, DEFAULT_QUBIT_CAP)?;
        let d = (1usize << (2 * n)) - 1;
        if m.nrows() != d || m.ncols() != d {
            return Err(QptError::DimensionMismatch {
                expected: d,
                actual: if m.nrows() != d { m.nrows() } else { m.ncols() },
            });
        }
        if a.len() != d {
            return Err(QptError::DimensionMismatch {
                expected: d,
                actual: a.len(),
            });
        }
        Ok(AffineProcess { n, m, a })
    }

    pub fn identity(n: usize) -> Self {
        let d = (1usize << (2 * n)) - 1;
        AffineProcess {
            n,
            m: RealMatrix::identity(d, d),
            a: RealVector::zeros(d),
        }
    }

    /// Splits a `(4ⁿ−1)×4ⁿ` matrix `[M | a]`.
    pub fn from_chi(n: usize, chi: &RealMatrix) -> Result<Self> {
        let d = (1usize << (2 * n)) - 1;
        if chi.nrows() != d || chi.ncols() != d + 1 {
            return Err(QptError::DimensionMismatch {
                expected: d,
                actual: chi.nrows(),
            });
        }
        AffineProcess::new(
            n,
            chi.columns(0, d).into_owned(),
            chi.column(d).into_owned(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> &RealMatrix {
        &self.m
    }

    pub fn a(&self) -> &RealVector {
        &self.a
    }

    /// `χ_F = [M | a]`.
    pub fn chi(&self) -> RealMatrix {
        let d = self.a.len();
        let mut chi = RealMatrix::zeros(d, d + 1);
        chi.columns_mut(0, d).copy_from(&self.m);
        chi.column_mut(d).copy_from(&self.a);
        chi
    }

    /// Full `4ⁿ×4ⁿ` matrix `𝓜` with last row `(0, …, 0, 1)`.
    pub fn full(&self) -> RealMatrix {
        let d = self.a.len();
        let mut full = RealMatrix::zeros(d + 1, d + 1);
        full.view_mut((0, 0), (d, d + 1)).copy_from(&self.chi());
        full[(d, d)] = 1.0;
        full
    }

    /// `true` when every `a` entry is exactly zero.
    pub fn is_unital(&self) -> bool {
        self.a.iter().all(|&x| x == 0.0)
    }

    pub fn max_abs_diff(&self, other: &AffineProcess) -> f64 {
        linalg::max_abs_real(&(self.chi() - other.chi()))
    }
}

/// `b' = M b + a`.
pub fn affine_apply(proc: &AffineProcess, v: &FanoVector) -> Result<FanoVector> {
    if proc.n != v.n() {
        return Err(QptError::DimensionMismatch {
            expected: proc.n,
            actual: v.n(),
        });
    }
    let b = DVector::from_column_slice(v.as_slice());
    let out = &proc.m * b + &proc.a;
    FanoVector::with_slack(proc.n, out.iter().copied().collect(), 1e-9)
}

/// Exact affine map of a channel: column `α` of `𝓜` is the Fano image of the
/// basis operator `P_α`, i.e. `𝓜_{βα} = Tr(P_β 𝓔(P_α)) / N`.
pub fn channel_to_affine(ch: &Channel) -> AffineProcess {
    let n = ch.n();
    let dim = 1usize << n;
    let total = dim * dim;
    let mut full = RealMatrix::zeros(total, total);
    for (alpha, s) in all_strings(n).enumerate() {
        let image = ch.apply_matrix(&pauli::pauli_matrix(&s));
        for (beta, v) in pauli::pauli_expectations(&image, n).into_iter().enumerate() {
            full[(beta, alpha)] = v.re / dim as f64;
        }
    }
    let d = total - 1;
    AffineProcess {
        n,
        m: full.view((0, 0), (d, d)).into_owned(),
        a: full.view((0, d), (d, 1)).column(0).into_owned(),
    }
}

/// Parameters of a two-qubit unitary in canonical (KAK) form
/// `(A₁⊗B₁) exp(i(θx XX + θy YY + θz ZZ)) (A₂⊗B₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KakParams {
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
    pub a1: CMatrix,
    pub b1: CMatrix,
    pub a2: CMatrix,
    pub b2: CMatrix,
}

impl KakParams {
    pub fn new(
        theta: [f64; 3],
        a1: CMatrix,
        b1: CMatrix,
        a2: CMatrix,
        b2: CMatrix,
    ) -> Result<Self> {
        for u in [&a1, &b1, &a2, &b2] {
            if u.nrows() != 2 {
                return Err(QptError::DimensionMismatch {
                    expected: 2,
                    actual: u.nrows(),
                });
            }
            check_unitary(u)?;
        }
        Ok(KakParams {
            theta_x: theta[0],
            theta_y: theta[1],
            theta_z: theta[2],
            a1,
            b1,
            a2,
            b2,
        })
    }

    /// Pure entangling core with identity local factors.
    pub fn core(theta: [f64; 3]) -> Self {
        let id = linalg::identity(2);
        KakParams {
            theta_x: theta[0],
            theta_y: theta[1],
            theta_z: theta[2],
            a1: id.clone(),
            b1: id.clone(),
            a2: id.clone(),
            b2: id,
        }
    }
}

/// `exp(i(θx XX + θy YY + θz ZZ))`, diagonal in the Bell basis.
pub fn kak_core(theta_x: f64, theta_y: f64, theta_z: f64) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // (Bell vector, XX, YY, ZZ eigenvalues)
    let bell: [([f64; 4], [f64; 3]); 4] = [
        ([h, 0.0, 0.0, h], [1.0, -1.0, 1.0]),
        ([h, 0.0, 0.0, -h], [-1.0, 1.0, 1.0]),
        ([0.0, h, h, 0.0], [1.0, 1.0, -1.0]),
        ([0.0, h, -h, 0.0], [-1.0, -1.0, -1.0]),
    ];
    let mut u = CMatrix::zeros(4, 4);
    for (v, ev) in bell {
        let phase = Complex64::from_polar(1.0, theta_x * ev[0] + theta_y * ev[1] + theta_z * ev[2]);
        let v = DVector::from_iterator(4, v.iter().map(|&x| c(x, 0.0)));
        u += &v * v.transpose() * phase;
    }
    u
}

pub fn kak_compose(kp: &KakParams) -> CMatrix {
    let left = linalg::kron(&kp.a1, &kp.b1);
    let right = linalg::kron(&kp.a2, &kp.b2);
    left * kak_core(kp.theta_x, kp.theta_y, kp.theta_z) * right
}

/// Random unitary: the Q factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    g.qr().q()
}

/// Random CPTP channel with `kraus_count` operators: a random isometry
/// `V: ℂᴺ → ℂᴺ ⊗ ℂᴷ` sliced into `K` blocks.
pub fn random_channel<R: Rng + ?Sized>(
    n: usize,
    kraus_count: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    check_qubits(n, DEFAULT_QUBIT_CAP)?;
    let dim = 1usize << n;
    let k = kraus_count.max(1);
    let g = CMatrix::from_fn(dim * k, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let v = g.qr().q();
    let ops = (0..k)
        .map(|i| v.view((i * dim, 0), (dim, dim)).into_owned())
        .collect();
    KrausChannel::new(ops)
}

/// Random mixed state `G G† / Tr(G G†)` from a complex Gaussian `G`.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    let dim = 1usize << n;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityMatrix::new_unchecked(n, hermitize(m / c(tr, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn approx(a: &RealMatrix, b: &[&[f64]], tol: f64) {
        assert_eq!(a.nrows(), b.len());
        for (i, row) in b.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!(
                    (a[(i, j)] - v).abs() < tol,
                    "({i},{j}) {} vs {v}",
                    a[(i, j)]
                );
            }
        }
    }

    fn state(b: [f64; 3]) -> DensityMatrix {
        pauli::fano_to_density(&FanoVector::new(1, b.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn identity_channel_leaves_state() {
        let rho = state([0.3, -0.2, 0.5]);
        let out = apply_kraus(&KrausChannel::identity(1), &rho).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - rho.matrix())) < 1e-15);
    }

    #[test]
    fn complete_dephasing_of_plus() {
        let out = apply_kraus(&phase_flip(0.5).unwrap(), &state([1.0, 0.0, 0.0])).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - linalg::identity(2) * c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn full_damping_of_excited_state() {
        let out = apply_kraus(&amplitude_damping(1.0).unwrap(), &state([0.0, 0.0, -1.0])).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        assert!(linalg::max_abs(&(out.matrix() - want)) < 1e-15);
    }

    #[test]
    fn apply_kraus_errors() {
        let rho2 = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            apply_kraus(&phase_flip(0.1).unwrap(), &rho2),
            Err(QptError::DimensionMismatch { .. })
        ));
        let bad = KrausChannel {
            n: 1,
            ops: vec![linalg::identity(2) * c(0.5f64.sqrt(), 0.0)],
        };
        assert!(matches!(
            apply_kraus(&bad, &DensityMatrix::maximally_mixed(1)),
            Err(QptError::IncompleteKraus { .. })
        ));
    }

    #[test]
    fn phase_flip_maps() {
        assert_eq!(phase_flip(0.0).unwrap().ops().len(), 1);
        assert_eq!(phase_flip(0.0).unwrap().ops()[0], linalg::identity(2));
        let m = channel_to_affine(&phase_flip(0.25).unwrap().into()).chi();
        approx(
            &m,
            &[&[0.5, 0., 0., 0.], &[0., 0.5, 0., 0.], &[0., 0., 1., 0.]],
            1e-15,
        );
        let m = channel_to_affine(&phase_flip(0.5).unwrap().into()).chi();
        approx(
            &m,
            &[&[0., 0., 0., 0.], &[0., 0., 0., 0.], &[0., 0., 1., 0.]],
            1e-15,
        );
    }

    #[test]
    fn flip_range_is_strict_by_default() {
        assert!(matches!(
            phase_flip(0.6),
            Err(QptError::ParamOutOfRange { .. })
        ));
        assert!(phase_flip(-0.1).is_err());
        assert!(phase_flip(f64::NAN).is_err());
        assert!(bit_flip(0.51).is_err());
        let relaxed = phase_flip_with(0.75, FlipRange::Full).unwrap();
        let m = channel_to_affine(&relaxed.into());
        assert!((m.m()[(0, 0)] + 0.5).abs() < 1e-15);
        assert!(amplitude_damping(1.01).is_err());
        assert!(depolarizing(-0.01).is_err());
    }

    #[test]
    fn bit_flip_and_depolarizing_maps() {
        let m = channel_to_affine(&bit_flip(0.25).unwrap().into()).chi();
        approx(
            &m,
            &[&[1., 0., 0., 0.], &[0., 0.5, 0., 0.], &[0., 0., 0.5, 0.]],
            1e-15,
        );
        let m = channel_to_affine(&depolarizing(1.0).unwrap().into()).chi();
        approx(
            &m,
            &[&[0., 0., 0., 0.], &[0., 0., 0., 0.], &[0., 0., 0., 0.]],
            1e-15,
        );
        let m = channel_to_affine(&depolarizing(0.0).unwrap().into());
        assert_eq!(m, AffineProcess::identity(1));
        let m = channel_to_affine(&depolarizing(0.3).unwrap().into()).chi();
        approx(
            &m,
            &[&[0.7, 0., 0., 0.], &[0., 0.7, 0., 0.], &[0., 0., 0.7, 0.]],
            1e-15,
        );
    }

    #[test]
    fn amplitude_damping_maps() {
        let m = channel_to_affine(&amplitude_damping(0.36).unwrap().into()).chi();
        approx(
            &m,
            &[
                &[0.8, 0., 0., 0.],
                &[0., 0.8, 0., 0.],
                &[0., 0., 0.64, 0.36],
            ],
            1e-15,
        );
        let m = channel_to_affine(&amplitude_damping(0.0).unwrap().into());
        assert_eq!(m, AffineProcess::identity(1));
        let m = channel_to_affine(&amplitude_damping(1.0).unwrap().into()).chi();
        approx(
            &m,
            &[&[0., 0., 0., 0.], &[0., 0., 0., 0.], &[0., 0., 0., 1.]],
            1e-15,
        );
    }

    #[test]
    fn unitality_markers() {
        let unital: Vec<Channel> = vec![
            phase_flip(0.2).unwrap().into(),
            bit_flip(0.2).unwrap().into(),
            depolarizing(0.2).unwrap().into(),
            tensor_channel(&phase_flip(0.2).unwrap(), &phase_flip(0.2).unwrap())
                .unwrap()
                .into(),
            CorrelatedDephasing::new(2, 0.3).unwrap().into(),
        ];
        for ch in &unital {
            assert!(channel_to_affine(ch).is_unital(), "{ch:?}");
        }
        assert!(correlated_dephasing(0.3).unwrap().is_unital());
        assert!(!channel_to_affine(&amplitude_damping(0.2).unwrap().into()).is_unital());
    }

    #[test]
    fn tensor_of_identities() {
        let t = tensor_channel(&KrausChannel::identity(1), &KrausChannel::identity(1)).unwrap();
        assert_eq!(t.n(), 2);
        assert_eq!(channel_to_affine(&t.into()), AffineProcess::identity(2));
    }

    #[test]
    fn tensor_counts_kraus_products() {
        let t = tensor_channel(
            &amplitude_damping(0.3).unwrap(),
            &depolarizing(0.2).unwrap(),
        )
        .unwrap();
        assert_eq!(t.ops().len(), 8);
        assert!(t.completeness() < 1e-14);
    }

    #[test]
    fn uncorrelated_dephasing_diagonal() {
        let p = 0.1;
        let g: f64 = 1.0 - 2.0 * p;
        let t = tensor_channel(&phase_flip(p).unwrap(), &phase_flip(p).unwrap()).unwrap();
        let m = channel_to_affine(&t.into());
        let g2 = g * g;
        let want = [g2, g2, g, g, g2, g2, g, g, g, g, 1., 1., g, g, 1.];
        for (i, &d) in want.iter().enumerate() {
            for j in 0..15 {
                let w = if i == j { d } else { 0.0 };
                assert!((m.m()[(i, j)] - w).abs() < 1e-15, "({i},{j})");
            }
        }
        assert!(m.a().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_sided_dephasing() {
        // Only qubit 1 dephases: factor g wherever qubit 1 carries x or y.
        let p = 0.2;
        let g = 1.0 - 2.0 * p;
        let t = tensor_channel(&phase_flip(p).unwrap(), &KrausChannel::identity(1)).unwrap();
        let m = channel_to_affine(&t.into());
        for (i, s) in all_strings(2).take(15).enumerate() {
            let w = if matches!(s.axes()[0], Axis::X | Axis::Y) {
                g
            } else {
                1.0
            };
            assert!((m.m()[(i, i)] - w).abs() < 1e-15, "{s}");
        }
    }

    #[test]
    fn correlated_dephasing_closed_form_matches_channel() {
        for lambda in [0.0, 0.01, 0.1, 1.0, 5.0] {
            let analytic = correlated_dephasing(lambda).unwrap();
            let numeric = channel_to_affine(&CorrelatedDephasing::new(2, lambda).unwrap().into());
            assert!(analytic.max_abs_diff(&numeric) < 1e-14, "lambda {lambda}");
        }
        assert_eq!(
            correlated_dephasing(0.0).unwrap(),
            AffineProcess::identity(2)
        );
        assert!(matches!(
            correlated_dephasing(-1.0),
            Err(QptError::ParamOutOfRange { .. })
        ));
    }

    #[test]
    fn correlated_dephasing_strong_limit() {
        let m = correlated_dephasing(60.0).unwrap();
        let mut b = vec![0.0; 15];
        b[0] = 0.3; // c_xx
        b[5] = 0.1; // c_yy
        let out = affine_apply(&m, &FanoVector::new(2, b).unwrap()).unwrap();
        assert!((out.as_slice()[0] - 0.2).abs() < 1e-15);
        assert!((out.as_slice()[5] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn affine_apply_examples() {
        let v = FanoVector::new(1, vec![0.3, 0.4, -0.5]).unwrap();
        assert_eq!(affine_apply(&AffineProcess::identity(1), &v).unwrap(), v);
        let full_damp = channel_to_affine(&amplitude_damping(1.0).unwrap().into());
        let out = affine_apply(&full_damp, &v).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0, 1.0]);
        assert!(matches!(
            affine_apply(&AffineProcess::identity(2), &v),
            Err(QptError::DimensionMismatch { .. })
        ));

        let lambda: f64 = 0.1;
        let g4 = (-4.0 * lambda).exp();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::from_pure(&[c(h, 0.0), c(h, 0.0)]).unwrap();
        let b = pauli::density_to_fano(&plus.tensor(&plus)).unwrap();
        let out = affine_apply(&correlated_dephasing(lambda).unwrap(), &b).unwrap();
        assert!((out.as_slice()[0] - 0.5 * (1.0 + g4)).abs() < 1e-15);
        assert!((out.as_slice()[5] - 0.5 * (1.0 - g4)).abs() < 1e-15);
    }

    #[test]
    fn completeness_residuals() {
        assert_eq!(kraus_completeness(&[linalg::identity(2)]), 0.0);
        assert_eq!(phase_flip(0.3).unwrap().completeness(), 0.0);
        let half = linalg::identity(2) * c(0.5f64.sqrt(), 0.0);
        assert!((kraus_completeness(&[half]) - 0.5).abs() < 1e-15);
        assert!(kraus_completeness(&[]).is_infinite());
    }

    #[test]
    fn kraus_constructor_validation() {
        assert!(KrausChannel::new(vec![]).is_err());
        assert!(matches!(
            KrausChannel::new(vec![linalg::identity(2) * c(0.9, 0.0)]),
            Err(QptError::IncompleteKraus { .. })
        ));
        assert!(KrausChannel::new(vec![linalg::identity(2), linalg::identity(4)]).is_err());
        assert!(KrausChannel::new(vec![linalg::identity(3)]).is_err());
    }

    #[test]
    fn kak_identity_and_zz() {
        assert!(
            linalg::max_abs(&(kak_compose(&KakParams::core([0.0; 3])) - linalg::identity(4)))
                < 1e-15
        );
        let t = 0.37;
        let u = kak_compose(&KakParams::core([0.0, 0.0, t]));
        let want = [t, -t, -t, t];
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == j {
                    Complex64::from_polar(1.0, want[i])
                } else {
                    ZERO
                };
                assert!((u[(i, j)] - w).norm() < 1e-15);
            }
        }
    }

    /// Taylor series for `exp(iH)`, independent of the Bell-basis route.
    fn expm_i(h: &CMatrix) -> CMatrix {
        let dim = h.nrows();
        let mut term = linalg::identity(dim);
        let mut sum = term.clone();
        for k in 1..80 {
            term = &term * h * c(0.0, 1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn kak_core_matches_series() {
        let (tx, ty, tz) = (0.3, -0.8, 1.1);
        let xx = linalg::kron(&Axis::X.matrix(), &Axis::X.matrix());
        let yy = linalg::kron(&Axis::Y.matrix(), &Axis::Y.matrix());
        let zz = linalg::kron(&Axis::Z.matrix(), &Axis::Z.matrix());
        let h = xx * c(tx, 0.0) + yy * c(ty, 0.0) + zz * c(tz, 0.0);
        assert!(linalg::max_abs(&(kak_core(tx, ty, tz) - expm_i(&h))) < 1e-13);
    }

    #[test]
    fn kak_with_locals_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let kp = KakParams::new(
            [0.2, 0.5, -0.4],
            random_unitary(2, &mut rng),
            random_unitary(2, &mut rng),
            random_unitary(2, &mut rng),
            random_unitary(2, &mut rng),
        )
        .unwrap();
        let u = kak_compose(&kp);
        assert!(check_unitary(&u).is_ok());
        assert!(unitary_channel(u).is_ok());
        let not_unitary = linalg::identity(2) * c(1.1, 0.0);
        assert!(matches!(
            KakParams::new(
                [0.0; 3],
                not_unitary.clone(),
                linalg::identity(2),
                linalg::identity(2),
                linalg::identity(2)
            ),
            Err(QptError::NotUnitary { .. })
        ));
        assert!(matches!(
            unitary_channel(not_unitary),
            Err(QptError::NotUnitary { .. })
        ));
    }

    #[test]
    fn common_rotation_by_pi() {
        let u = linalg::kron(&rz(std::f64::consts::PI), &rz(std::f64::consts::PI));
        let ch = unitary_channel(u).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::from_pure(&[c(h, 0.0), c(h, 0.0)]).unwrap();
        let out = apply_kraus(&ch, &plus.tensor(&plus)).unwrap();
        let b = pauli::density_to_fano(&out).unwrap();
        assert!((b.get(&"xx".parse().unwrap()) - 1.0).abs() < 1e-15);
        assert!((b.get(&"xI".parse().unwrap()) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn correlated_dephasing_kraus_decomposition() {
        let cd: Channel = CorrelatedDephasing::new(2, 0.4).unwrap().into();
        let k = cd.to_kraus().unwrap();
        assert!(k.completeness() < 1e-12);
        let via_kraus = channel_to_affine(&k.into());
        assert!(via_kraus.max_abs_diff(&channel_to_affine(&cd)) < 1e-12);
    }

    #[test]
    fn random_channels_are_cptp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=2 {
            for k in 1..=4 {
                let ch = random_channel(n, k, &mut rng).unwrap();
                assert_eq!(ch.ops().len(), k);
                assert!(ch.completeness() < 1e-12);
            }
        }
    }
}
