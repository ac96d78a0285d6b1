//! Numeric rank, nullspace and least-norm solves (SVD), plus Gauss–Jordan
//! elimination over symbolic expressions with sampled pivot tests.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::symexpr::{ScalarExpr, ZeroTestError, ZeroTester, ZeroVerdict};

/// Singular values of `m` (unordered is fine for counting).
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

fn cutoff(sv: &[f64], rel: f64) -> f64 {
    sv.iter().copied().fold(0.0, f64::max) * rel
}

/// Number of singular values above `rel * largest`.
pub fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    let sv = singular_values(m);
    let cut = cutoff(&sv, rel);
    if cut == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal basis of the right nullspace of `m`. Wide matrices are padded
/// with zero rows so the SVD yields a full set of right singular vectors.
pub fn nullspace(m: &DMatrix<f64>, rel: f64) -> Vec<DVector<f64>> {
    let (r, c) = m.shape();
    if c == 0 {
        return Vec::new();
    }
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let cut = cutoff(&sv, rel);
    let mut basis: Vec<(usize, DVector<f64>)> = sv
        .iter()
        .enumerate()
        .filter(|(_, &s)| cut == 0.0 || s <= cut)
        .map(|(i, _)| (i, vt.row(i).transpose()))
        .collect();
    basis.sort_by_key(|(i, _)| *i);
    basis.into_iter().map(|(_, v)| v).collect()
}

/// Least-norm least-squares solution of `m x = b` via the pseudo-inverse.
pub fn min_norm_solve(m: &DMatrix<f64>, b: &DVector<f64>, rel: f64) -> DVector<f64> {
    let (_, c) = m.shape();
    let sv = singular_values(m);
    let cut = cutoff(&sv, rel);
    if cut == 0.0 {
        return DVector::zeros(c);
    }
    let svd = m.clone().svd(true, true);
    svd.solve(b, cut).expect("U and V^T were requested")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EliminationError {
    #[error("singular system: {0}")]
    Singular(String),
    #[error("zero test inconclusive for pivot candidate in column {column}")]
    Inconclusive { column: usize },
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

/// Solve `A X = B` for a unique `X` by Gauss–Jordan elimination over
/// expressions. Columns are scanned in order and the pivot is the first
/// remaining row whose entry is not (sampled) zero.
///
/// `a` is `rows × cols`, `b` is `rows × q`; the result is `cols × q`.
pub fn symbolic_solve(
    mut a: Vec<Vec<ScalarExpr>>,
    mut b: Vec<Vec<ScalarExpr>>,
    tester: &ZeroTester,
) -> Result<Vec<Vec<ScalarExpr>>, EliminationError> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivot_of_col = vec![None; cols];
    let mut next = 0;
    for col in 0..cols {
        let mut pivot = None;
        for (i, row) in a.iter_mut().enumerate().skip(next) {
            let entry = &row[col];
            if entry.is_zero_const() {
                continue;
            }
            match tester.verdict(entry)? {
                ZeroVerdict::Zero => row[col] = ScalarExpr::zero(),
                ZeroVerdict::Inconclusive => return Err(EliminationError::Inconclusive { column: col }),
                ZeroVerdict::NonZero => {
                    pivot = Some(i);
                    break;
                }
            }
        }
        let Some(p) = pivot else { continue };
        a.swap(p, next);
        b.swap(p, next);
        let inv = a[next][col].recip();
        for j in col..cols {
            if !a[next][j].is_zero_const() {
                a[next][j] = &a[next][j] * &inv;
            }
        }
        a[next][col] = ScalarExpr::one();
        for v in b[next].iter_mut() {
            if !v.is_zero_const() {
                *v = &*v * &inv;
            }
        }
        for i in 0..rows {
            if i == next || a[i][col].is_zero_const() {
                continue;
            }
            let factor = a[i][col].clone();
            for j in col..cols {
                if !a[next][j].is_zero_const() {
                    a[i][j] = &a[i][j] - &factor * &a[next][j];
                }
            }
            a[i][col] = ScalarExpr::zero();
            for q in 0..b[i].len() {
                if !b[next][q].is_zero_const() {
                    b[i][q] = &b[i][q] - &factor * &b[next][q];
                }
            }
        }
        pivot_of_col[col] = Some(next);
        next += 1;
    }
    if let Some(free) = pivot_of_col.iter().position(Option::is_none) {
        return Err(EliminationError::Singular(format!("no pivot in column {free}; solution not unique")));
    }
    for (i, row) in b.iter().enumerate().skip(next) {
        for v in row {
            if tester.verdict(v)? != ZeroVerdict::Zero {
                return Err(EliminationError::Singular(format!("equation {i} is inconsistent")));
            }
        }
    }
    Ok(pivot_of_col.into_iter().map(|p| b[p.expect("checked")].clone()).collect())
}
