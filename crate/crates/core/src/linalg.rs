//! Dense linear-algebra kernels shared by the LTI, LMI and solver layers.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

/// Symmetric part `(m + m')/2`.
pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Smallest eigenvalue of a symmetric matrix (`+inf` for an empty one).
pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    sym(m).symmetric_eigenvalues().min()
}

pub fn max_eig_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    sym(m).symmetric_eigenvalues().max()
}

/// Singular values of a complex matrix in descending order.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return vec![m[(0, 0)].norm()];
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Minimum gain `min_{|u|=1} |M u|`; zero when `M` has more columns than rows.
pub fn sigma_min_gain(m: &DMatrix<Complex64>) -> f64 {
    if m.ncols() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn sigma_max_real(m: &DMatrix<f64>) -> f64 {
    sigma_max(&m.map(|v| Complex64::new(v, 0.0)))
}

pub fn sigma_min_gain_real(m: &DMatrix<f64>) -> f64 {
    sigma_min_gain(&m.map(|v| Complex64::new(v, 0.0)))
}

/// Diagonal similarity scaling (Parlett-Reinsch) improving eigenvalue accuracy.
fn balance(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let radix = 2.0_f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
    m
}

/// Eigenvalues of a real square matrix. Returns NaN entries if the QR iteration fails.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    if a.iter().any(|v| !v.is_finite()) {
        return vec![Complex64::new(f64::NAN, f64::NAN); n];
    }
    let b = balance(a);
    match Schur::try_new(b, f64::EPSILON, 10_000 * n.max(10)) {
        Some(s) => s.complex_eigenvalues().iter().copied().collect(),
        None => vec![Complex64::new(f64::NAN, f64::NAN); n],
    }
}

/// Largest real part of the spectrum (`-inf` for an empty matrix).
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a)
        .iter()
        .map(|l| if l.re.is_nan() { f64::INFINITY } else { l.re })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `A X + X A' + Q = 0` for symmetric `Q` (Kronecker form on the upper triangle).
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    let idx = |i: usize, j: usize| -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // upper-triangular packed index
        i * n - i * (i + 1) / 2 + j
    };
    let m = n * (n + 1) / 2;
    let mut lhs = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for i in 0..n {
        for j in i..n {
            let row = idx(i, j);
            // (A X + X A')_{ij} = sum_k A_ik X_kj + X_ik A_jk
            for k in 0..n {
                lhs[(row, idx(k, j))] += a[(i, k)];
                lhs[(row, idx(i, k))] += a[(j, k)];
            }
            rhs[row] = -0.5 * (q[(i, j)] + q[(j, i)]);
        }
    }
    let sol = lhs.lu().solve(&rhs)?;
    let mut x = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            x[(i, j)] = sol[idx(i, j)];
        }
    }
    Some(x)
}

/// Orthonormal basis of the Krylov space spanned by `[B, AB, A^2 B, ...]`.
///
/// Columns are accepted while their residual after two Gram-Schmidt passes exceeds
/// `tol` relative to the norm of the candidate vector.
pub fn krylov_basis(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut frontier: Vec<DVector<f64>> =
        (0..b.ncols()).map(|j| b.column(j).into_owned()).collect();
    let scale_b = max_abs(b).max(f64::MIN_POSITIVE);
    let mut first = true;
    while !frontier.is_empty() && basis.len() < n {
        let mut next = Vec::new();
        for cand in frontier {
            let reference = if first { scale_b } else { cand.norm() };
            let mut v = cand;
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.dot(&v);
                    v.axpy(-proj, q, 1.0);
                }
            }
            let nv = v.norm();
            if reference > 0.0 && nv > tol * reference && nv > 0.0 {
                v /= nv;
                next.push(a * &v);
                basis.push(v);
                if basis.len() == n {
                    break;
                }
            }
        }
        first = false;
        frontier = next;
    }
    let mut out = DMatrix::zeros(n, basis.len());
    for (j, v) in basis.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

pub fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

pub fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols());
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}

/// Assembles a dense matrix from a grid of blocks; row heights and column widths
/// are taken from the first block in each row/column.
pub fn blocks(grid: &[Vec<&DMatrix<f64>>]) -> DMatrix<f64> {
    let heights: Vec<usize> = grid.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = grid[0].iter().map(|b| b.ncols()).collect();
    let mut m = DMatrix::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (i, row) in grid.iter().enumerate() {
        let mut c0 = 0;
        for (j, blk) in row.iter().enumerate() {
            assert_eq!(
                blk.shape(),
                (heights[i], widths[j]),
                "block ({i},{j}) shape"
            );
            m.view_mut((r0, c0), blk.shape()).copy_from(*blk);
            c0 += widths[j];
        }
        r0 += heights[i];
    }
    m
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Inverse with a reciprocal-condition guard based on the LU pivots.
pub fn guarded_inverse(m: &DMatrix<f64>, rtol: f64) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    let s = m.clone().singular_values();
    let smax = s.max();
    let smin = s.min();
    if !(smin > rtol * smax.max(1e-300)) {
        return None;
    }
    m.clone().try_inverse()
}
