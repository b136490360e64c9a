//! Standard process tomography by linear inversion: `𝓜 = 𝓡′ 𝓡⁻¹`.
//!
//! The `4ⁿ` input states are tensor products of `|0⟩, |1⟩, |+⟩, |+i⟩`
//! enumerated lexicographically with qubit 1 varying slowest. With that order
//! the matrix of input Fano columns reproduces the well-known integer
//! matrices for one and two qubits; [`self_test`] checks this.

use std::sync::OnceLock;

use nalgebra::DVector;

use crate::channels::{AffineProcess, Channel};
use crate::error::{QptError, Result};
use crate::linalg::{self, c, CMatrix, RealMatrix, RealVector};
use crate::pauli::{self, check_qubits, DensityMatrix, FanoVector};
use crate::DEFAULT_QUBIT_CAP;

/// Residual `max|R·R⁻¹ − I|` above which an inversion is rejected.
const INVERSE_RESIDUAL_LIMIT: f64 = 1e-9;

/// The four single-qubit preparation states as state vectors.
fn single_qubit_states() -> [[num_complex::Complex64; 2]; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
        [c(h, 0.0), c(h, 0.0)],
        [c(h, 0.0), c(0.0, h)],
    ]
}

#[derive(Clone, Debug)]
pub struct PreparationBasis {
    n: usize,
    states: Vec<DensityMatrix>,
}

impl PreparationBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// Input matrix `𝓡` whose columns are `[b_i; 1]`.
    pub fn r_matrix(&self) -> BasisMatrix {
        let cols: Vec<FanoVector> = self
            .states
            .iter()
            .map(|s| pauli::density_to_fano(s).expect("basis states are Hermitian"))
            .collect();
        BasisMatrix::from_columns(self.n, &cols)
    }
}

pub fn preparation_basis(n: usize) -> Result<PreparationBasis> {
    preparation_basis_with_cap(n, DEFAULT_QUBIT_CAP)
}

pub fn preparation_basis_with_cap(n: usize, cap: usize) -> Result<PreparationBasis> {
    check_qubits(n, cap)?;
    let singles = single_qubit_states();
    let count = 1usize << (2 * n);
    let states = (0..count)
        .map(|i| {
            let mut psi = vec![c(1.0, 0.0)];
            for q in 0..n {
                let choice = (i >> (2 * (n - 1 - q))) & 3;
                psi = psi
                    .iter()
                    .flat_map(|a| singles[choice].iter().map(move |b| a * b))
                    .collect();
            }
            let v = DVector::from_vec(psi);
            DensityMatrix::new_unchecked(n, &v * v.adjoint())
        })
        .collect();
    Ok(PreparationBasis { n, states })
}

/// Real `4ⁿ×4ⁿ` matrix whose columns are augmented Fano vectors `[b; 1]`
/// of prepared (`𝓡`) or measured (`𝓡′`) states.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisMatrix {
    n: usize,
    data: RealMatrix,
}

impl BasisMatrix {
    pub fn new(n: usize, data: RealMatrix) -> Result<Self> {
        check_qubits(n, DEFAULT_QUBIT_CAP)?;
        let dim = 1usize << (2 * n);
        if data.nrows() != dim || data.ncols() != dim {
            return Err(QptError::DimensionMismatch {
                expected: dim,
                actual: data.nrows().max(data.ncols()),
            });
        }
        Ok(BasisMatrix { n, data })
    }

    pub fn from_columns(n: usize, cols: &[FanoVector]) -> Self {
        let dim = 1usize << (2 * n);
        let mut data = RealMatrix::zeros(dim, cols.len());
        for (j, v) in cols.iter().enumerate() {
            data.column_mut(j)
                .copy_from(&RealVector::from_vec(v.augmented()));
        }
        BasisMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &RealMatrix {
        &self.data
    }
}

/// `𝓡⁻¹` by LU decomposition with partial pivoting.
pub fn invert_r(r: &BasisMatrix) -> Result<BasisMatrix> {
    let singular = || QptError::SingularBasis {
        condition: linalg::condition_number(&r.data),
    };
    let inv = r.data.clone().lu().try_inverse().ok_or_else(singular)?;
    let dim = r.data.nrows();
    let residual = linalg::max_abs_real(&(&r.data * &inv - RealMatrix::identity(dim, dim)));
    if !(residual < INVERSE_RESIDUAL_LIMIT) {
        return Err(singular());
    }
    Ok(BasisMatrix { n: r.n, data: inv })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// `max|𝓜_last − (0, …, 0, 1)|` before the row is reset.
    pub last_row_residual: f64,
    pub min_choi_eigenvalue: f64,
    pub condition_number: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub process: AffineProcess,
    pub diagnostics: Diagnostics,
}

/// `𝓜 = 𝓡′ 𝓡⁻¹`. The last row of `𝓜` is measured against `(0, …, 0, 1)`,
/// reported, then overwritten before `χ_F` is extracted.
pub fn reconstruct(r_out: &BasisMatrix, r_in: &BasisMatrix) -> Result<Reconstruction> {
    if r_out.n != r_in.n {
        return Err(QptError::DimensionMismatch {
            expected: r_in.n,
            actual: r_out.n,
        });
    }
    let inv = invert_r(r_in)?;
    reconstruct_with_inverse(r_out, &inv, linalg::condition_number(&r_in.data))
}

fn reconstruct_with_inverse(
    r_out: &BasisMatrix,
    r_in_inv: &BasisMatrix,
    condition_number: f64,
) -> Result<Reconstruction> {
    let n = r_out.n;
    let full = &r_out.data * &r_in_inv.data;
    let d = full.nrows() - 1;
    let last_row_residual = (0..=d)
        .map(|j| {
            let want = if j == d { 1.0 } else { 0.0 };
            (full[(d, j)] - want).abs()
        })
        .fold(0.0, f64::max);
    let process = AffineProcess::new(
        n,
        full.view((0, 0), (d, d)).into_owned(),
        full.view((0, d), (d, 1)).column(0).into_owned(),
    )?;
    let min_choi_eigenvalue = min_choi_eigenvalue(&process);
    Ok(Reconstruction {
        process,
        diagnostics: Diagnostics {
            last_row_residual,
            min_choi_eigenvalue,
            condition_number,
        },
    })
}

/// Choi matrix `J = (1/N) Σ_α P_αᵀ ⊗ 𝓔(P_α)` with `𝓔(P_α) = Σ_β 𝓜_{βα} P_β`,
/// `𝓜` being the full Pauli-transfer matrix including its identity row.
pub fn chi_to_choi(proc: &AffineProcess) -> CMatrix {
    let n = proc.n();
    let dim = 1usize << n;
    let full = proc.full();
    let mut j = CMatrix::zeros(dim * dim, dim * dim);
    for (alpha, s) in pauli::all_strings(n).enumerate() {
        let column: Vec<f64> = full.column(alpha).iter().copied().collect();
        let image = pauli::pauli_combination(n, &column);
        let p_t = pauli::pauli_matrix(&s).transpose();
        for r in 0..dim {
            for col in 0..dim {
                let w = p_t[(r, col)];
                if w.re == 0.0 && w.im == 0.0 {
                    continue;
                }
                let mut block = j.view_mut((r * dim, col * dim), (dim, dim));
                block += &image * (w / c(dim as f64, 0.0));
            }
        }
    }
    j
}

pub fn min_choi_eigenvalue(proc: &AffineProcess) -> f64 {
    linalg::min_hermitian_eigenvalue(&chi_to_choi(proc))
}

/// Reconstruction from exact output states of a simulated channel.
pub fn exact_tomography(channel: &Channel) -> Result<Reconstruction> {
    let basis = preparation_basis(channel.n())?;
    let outputs = basis
        .states()
        .iter()
        .map(|rho| pauli::density_to_fano(&channel.apply(rho)?))
        .collect::<Result<Vec<_>>>()?;
    let r_out = BasisMatrix::from_columns(channel.n(), &outputs);
    reconstruct(&r_out, &basis.r_matrix())
}

/// Printed one-qubit input matrix.
pub const R1_REFERENCE: [[i8; 4]; 4] = [[0, 0, 1, 0], [0, 0, 0, 1], [1, -1, 0, 0], [1, 1, 1, 1]];

/// Printed one-qubit inverse, times 2.
pub const R1_INVERSE_TIMES_2: [[i8; 4]; 4] =
    [[-1, -1, 1, 1], [-1, -1, -1, 1], [2, 0, 0, 0], [0, 2, 0, 0]];

/// Printed two-qubit input matrix.
pub const R2_REFERENCE: [[i8; 16]; 16] = [
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, -1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1],
    [0, 0, 1, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, -1, 0, 0, -1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 1, 1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0],
    [0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1],
    [1, -1, 0, 0, 1, -1, 0, 0, 1, -1, 0, 0, 1, -1, 0, 0],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
];

/// Printed two-qubit inverse, times 4.
pub const R2_INVERSE_TIMES_4: [[i8; 16]; 16] = [
    [1, 1, -1, -1, 1, 1, -1, -1, -1, -1, 1, 1, -1, -1, 1, 1],
    [1, 1, 1, -1, 1, 1, 1, -1, -1, -1, -1, 1, -1, -1, -1, 1],
    [-2, 0, 0, 0, -2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0],
    [0, -2, 0, 0, 0, -2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0],
    [1, 1, -1, -1, 1, 1, -1, -1, 1, 1, -1, -1, -1, -1, 1, 1],
    [1, 1, 1, -1, 1, 1, 1, -1, 1, 1, 1, -1, -1, -1, -1, 1],
    [-2, 0, 0, 0, -2, 0, 0, 0, -2, 0, 0, 0, 2, 0, 0, 0],
    [0, -2, 0, 0, 0, -2, 0, 0, 0, -2, 0, 0, 0, 2, 0, 0],
    [-2, -2, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [-2, -2, -2, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, -2, -2, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, -2, -2, -2, 2, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
];

pub fn reference_matrix<const D: usize>(rows: &[[i8; D]; D], scale: f64) -> RealMatrix {
    RealMatrix::from_fn(D, D, |i, j| rows[i][j] as f64 / scale)
}

fn basis_mismatch() -> Result<()> {
    let worst = |a: &RealMatrix, b: &RealMatrix| linalg::max_abs_real(&(a - b));
    let r1 = preparation_basis(1)?.r_matrix();
    let r2 = preparation_basis(2)?.r_matrix();
    let checks = [
        worst(r1.data(), &reference_matrix(&R1_REFERENCE, 1.0)),
        worst(
            invert_r(&r1)?.data(),
            &reference_matrix(&R1_INVERSE_TIMES_2, 2.0),
        ),
        worst(r2.data(), &reference_matrix(&R2_REFERENCE, 1.0)),
        worst(
            invert_r(&r2)?.data(),
            &reference_matrix(&R2_INVERSE_TIMES_4, 4.0),
        ),
    ];
    let max = checks.into_iter().fold(0.0, f64::max);
    if max < 1e-12 {
        Ok(())
    } else {
        Err(QptError::Parse(format!(
            "preparation basis ordering does not reproduce the reference matrices (residual {max:e})"
        )))
    }
}

/// Confirms, once per process, that the preparation ordering and inversion
/// reproduce the reference one- and two-qubit matrices.
pub fn self_test() -> Result<()> {
    static RESULT: OnceLock<Result<()>> = OnceLock::new();
    RESULT.get_or_init(basis_mismatch).clone()
}
