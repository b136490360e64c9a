//! On-disk formats: complex matrices, Fano vectors and process matrices as
//! JSON, process matrices as CSV, and shot tables as JSON lines.
//!
//! Every parser validates shape, qubit cap and finiteness before building a
//! value, so arbitrary input yields an error rather than a panic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channels::AffineProcess;
use crate::error::{QptError, Result};
use crate::linalg::{c, CMatrix, RealMatrix, RealVector};
use crate::measurement::{MeasurementSetting, ShotTable};
use crate::pauli::{bloch_labels, check_qubits, FanoVector};
use crate::tomography::Diagnostics;
use crate::DEFAULT_QUBIT_CAP;

fn parse_err(e: serde_json::Error) -> QptError {
    QptError::Parse(e.to_string())
}

/// Turns `-0.0` into `0.0` so that output does not depend on the sign of
/// zero produced by round-off.
fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn check_finite(name: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(QptError::Parse(format!(
            "{name} contains a non-finite value"
        )))
    }
}

fn check_square(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<()> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(QptError::Parse(format!(
            "{name} must be a {dim}x{dim} array"
        )));
    }
    Ok(())
}

/// `{"n": qubits, "re": [[..]], "im": [[..]]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows().trailing_zeros() as usize;
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| clean(f(&m[(i, j)]))).collect())
                .collect()
        };
        MatrixDoc {
            n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        check_qubits(self.n, DEFAULT_QUBIT_CAP)?;
        let dim = 1usize << self.n;
        check_square("re", &self.re, dim)?;
        check_square("im", &self.im, dim)?;
        check_finite("matrix", self.re.iter().chain(&self.im).flatten().copied())?;
        Ok(CMatrix::from_fn(dim, dim, |i, j| {
            c(self.re[i][j], self.im[i][j])
        }))
    }
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string_pretty(&MatrixDoc::from_matrix(m)).expect("serializable")
}

pub fn parse_matrix_json(text: &str) -> Result<CMatrix> {
    serde_json::from_str::<MatrixDoc>(text)
        .map_err(parse_err)?
        .to_matrix()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FanoDoc {
    n: usize,
    b: Vec<f64>,
}

/// `{"n": qubits, "b": [4ⁿ − 1 coefficients]}`.
pub fn fano_to_json(v: &FanoVector) -> String {
    let doc = FanoDoc {
        n: v.n(),
        b: v.as_slice().iter().map(|&x| clean(x)).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn parse_fano_json(text: &str) -> Result<FanoVector> {
    let doc: FanoDoc = serde_json::from_str(text).map_err(parse_err)?;
    FanoVector::new(doc.n, doc.b)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChiDoc {
    n: usize,
    #[serde(rename = "M")]
    m: Vec<Vec<f64>>,
    a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    last_row_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_choi_eig: Option<f64>,
}

/// A process matrix read from disk, with the diagnostics stored beside it.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiRecord {
    pub process: AffineProcess,
    pub last_row_residual: Option<f64>,
    pub min_choi_eig: Option<f64>,
}

/// `{"n", "M", "a", "last_row_residual", "min_choi_eig"}`.
pub fn chi_to_json(proc: &AffineProcess, diagnostics: Option<&Diagnostics>) -> String {
    let m = proc.m();
    let doc = ChiDoc {
        n: proc.n(),
        m: (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| clean(m[(i, j)])).collect())
            .collect(),
        a: proc.a().iter().map(|&x| clean(x)).collect(),
        last_row_residual: diagnostics.map(|d| clean(d.last_row_residual)),
        min_choi_eig: diagnostics.map(|d| clean(d.min_choi_eigenvalue)),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn parse_chi_json(text: &str) -> Result<ChiRecord> {
    let doc: ChiDoc = serde_json::from_str(text).map_err(parse_err)?;
    check_qubits(doc.n, DEFAULT_QUBIT_CAP)?;
    let d = (1usize << (2 * doc.n)) - 1;
    check_square("M", &doc.m, d)?;
    if doc.a.len() != d {
        return Err(QptError::Parse(format!("a must have {d} entries")));
    }
    check_finite(
        "process matrix",
        doc.m
            .iter()
            .flatten()
            .chain(&doc.a)
            .chain(doc.last_row_residual.iter())
            .chain(doc.min_choi_eig.iter())
            .copied(),
    )?;
    let m = RealMatrix::from_fn(d, d, |i, j| doc.m[i][j]);
    let process = AffineProcess::new(doc.n, m, RealVector::from_vec(doc.a))?;
    Ok(ChiRecord {
        process,
        last_row_residual: doc.last_row_residual,
        min_choi_eig: doc.min_choi_eig,
    })
}

/// CSV with a header row of input labels plus `a`, and the output label
/// leading each row. Values carry 17 significant digits.
pub fn chi_to_csv(proc: &AffineProcess) -> String {
    let labels = bloch_labels(proc.n());
    let chi = proc.chi();
    let mut out = String::from("row");
    for l in &labels {
        out.push(',');
        out.push_str(l);
    }
    out.push_str(",a\n");
    for (i, l) in labels.iter().enumerate() {
        out.push_str(l);
        for j in 0..chi.ncols() {
            out.push_str(&format!(",{:.16e}", clean(chi[(i, j)])));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShotDoc {
    state: usize,
    setting: String,
    shots: u64,
    counts: BTreeMap<String, u64>,
    seed: u64,
}

/// One JSON object per line:
/// `{"state", "setting", "shots", "counts", "seed"}`.
pub fn shot_tables_to_jsonl(tables: &[ShotTable]) -> String {
    let mut out = String::new();
    for t in tables {
        let doc = ShotDoc {
            state: t.state,
            setting: t.setting.to_string(),
            shots: t.shots,
            counts: t.counts.clone(),
            seed: t.seed,
        };
        out.push_str(&serde_json::to_string(&doc).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Blank lines are skipped; errors name the offending line.
pub fn parse_shot_tables_jsonl(text: &str) -> Result<Vec<ShotTable>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let at = |e: QptError| QptError::Parse(format!("line {}: {e}", i + 1));
            let doc: ShotDoc = serde_json::from_str(line).map_err(|e| at(parse_err(e)))?;
            check_qubits(doc.setting.chars().count(), DEFAULT_QUBIT_CAP).map_err(at)?;
            let setting: MeasurementSetting = doc.setting.parse().map_err(at)?;
            ShotTable::new(doc.state, setting, doc.shots, doc.counts, doc.seed).map_err(at)
        })
        .collect()
}
