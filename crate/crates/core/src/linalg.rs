//! Dense real-symmetric eigensolver and a few small helpers shared by the
//! physics modules.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending, eigenvectors
/// as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Diagonalizes a real symmetric matrix (only the lower triangle is read).
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SymEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Eigen(format!("matrix is {}x{}, not square", n, m.ncols())));
    }
    if n == 0 {
        return Ok(SymEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();

    // faer returns ascending order already; sort anyway so callers never
    // depend on that.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| s[k]));
    let mut vectors = DMatrix::from_fn(n, n, |i, c| u[(i, order[c])]);
    fix_column_signs(&mut vectors);
    Ok(SymEigen { values, vectors })
}

/// Flips each column so that its first entry with magnitude above 1e-8 is
/// positive.
pub fn fix_column_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let pivot = col.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(0.0);
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Groups ascending `values` into runs whose neighbouring gaps are at most
/// `tol`.
pub fn degenerate_clusters(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > tol {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Max-abs deviation of `m` from its transpose.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Max-abs entry of VᵀV − I.
pub fn orthonormality_defect(v: &DMatrix<f64>) -> f64 {
    let g = v.transpose() * v;
    let mut worst = 0.0_f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Least-squares fit of `y ≈ Σ_k c_k x^k` for `k` in `0..=degree`.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, k| x[i].powi(k as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let c = svd.solve(&b, 1e-14).expect("svd computed with both factors");
    c.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_eigenpairs() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = sym_eigen(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 1)] - s).abs() < 1e-14);
        assert!((e.vectors[(1, 1)] - s).abs() < 1e-14);
        assert!((e.vectors[(0, 0)] - s).abs() < 1e-14);
        assert!((e.vectors[(1, 0)] + s).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_symmetric() {
        let n = 9;
        let m = DMatrix::from_fn(n, n, |i, j| ((i * 3 + j * 3 + i * j) % 7) as f64 - 2.5);
        let e = sym_eigen(&m).unwrap();
        let back = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!((back - &m).abs().max() < 1e-12);
        assert!(orthonormality_defect(&e.vectors) < 1e-12);
        assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn clusters_split_on_gaps() {
        let v = [0.0, 1e-12, 1.0, 2.0, 2.0];
        let c = degenerate_clusters(&v, 1e-9);
        assert_eq!(c, vec![0..2, 2..3, 3..5]);
        assert!(degenerate_clusters(&[], 1.0).is_empty());
    }

    #[test]
    fn polyfit_recovers_quadratic() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 - 0.5 * x + 3.0 * x * x).collect();
        let c = polyfit(&x, &y, 2);
        assert!((c[0] - 2.0).abs() < 1e-10);
        assert!((c[1] + 0.5).abs() < 1e-10);
        assert!((c[2] - 3.0).abs() < 1e-10);
    }
}
