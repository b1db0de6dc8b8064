//! Dense small-matrix kernel: symmetric/SPD arithmetic, Cholesky
//! factorization, symmetric eigendecomposition and the matrix exponential.
//!
//! Everything here is sized for the matrices this crate actually meets:
//! 2x2 Fisher matrices on the parameter plane and n x n induced metrics on
//! the sensor manifold, with n = 2J <= 16. All operations are deterministic
//! (no randomized pivoting) and pure.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};

/// General dense matrix used for non-symmetric intermediates
/// (e.g. products of the form `g^-1 h`).
pub type Matrix = DMatrix<f64>;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 16;

/// Relative pivot tolerance for positive-definiteness checks.
///
/// A factorization is rejected when a Cholesky pivot is <= this factor
/// times the largest diagonal entry of the input, which makes singularity
/// detection invariant under overall rescaling of the matrix.
pub const SPD_PIVOT_RTOL: f64 = 1e-12;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(CoreError::Dimension(dim));
    }
    Ok(())
}

/// Dense symmetric matrix. The constructor symmetrizes, so
/// `entries[i][j] == entries[j][i]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds from row-major entries, averaging mirrored pairs so the
    /// stored matrix is exactly symmetric.
    pub fn new(dim: usize, entries: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(CoreError::Dimension(entries.len()));
        }
        let raw = DMatrix::from_row_slice(dim, dim, entries);
        Ok(Self::symmetrize(&raw))
    }

    /// Symmetrizes an arbitrary square matrix as `(a + a^T) / 2`.
    pub fn symmetrize(a: &Matrix) -> Self {
        let dim = a.nrows();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = a[(i, i)];
            for j in 0..i {
                let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { m }
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = DMatrix::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        SymMatrix { m }
    }

    /// Rank-one term `scale * v v^T`.
    pub fn outer(v: &[f64], scale: f64) -> Self {
        let dim = v.len();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let e = scale * v[i] * v[j];
                m[(i, j)] = e;
                m[(j, i)] = e;
            }
        }
        SymMatrix { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Sets the `(i, j)` and `(j, i)` entries together.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[(i, j)] = v;
        self.m[(j, i)] = v;
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrix { m: &self.m * s }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        SymMatrix {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        SymMatrix {
            m: &self.m - &other.m,
        }
    }

    /// `self + s * other`, entrywise; stays exactly symmetric.
    pub fn add_scaled(&self, s: f64, other: &SymMatrix) -> Self {
        SymMatrix {
            m: &self.m + s * &other.m,
        }
    }
}

/// Symmetric positive-definite matrix, verified by Cholesky factorization
/// at construction. The lower factor is cached for reuse in solves.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    sym: SymMatrix,
    chol: DMatrix<f64>,
}

impl SpdMatrix {
    /// Verifies positive definiteness of `sym`; fails with the offending
    /// pivot otherwise.
    pub fn new(sym: SymMatrix) -> Result<Self> {
        let chol = cholesky(&sym)?;
        Ok(SpdMatrix { sym, chol })
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix {
            sym: SymMatrix::identity(dim),
            chol: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn as_matrix(&self) -> &Matrix {
        self.sym.as_matrix()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sym.get(i, j)
    }

    /// The lower-triangular Cholesky factor `L` with `L L^T = A`.
    pub fn cholesky_factor(&self) -> &Matrix {
        &self.chol
    }

    /// Solves `A X = B` by forward/backward substitution on the cached factor.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let n = self.dim();
        let k = b.ncols();
        let l = &self.chol;
        let mut x = b.clone();
        // L y = B
        for c in 0..k {
            for i in 0..n {
                let mut s = x[(i, c)];
                for j in 0..i {
                    s -= l[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
        }
        // L^T x = y
        for c in 0..k {
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for j in i + 1..n {
                    s -= l[(j, i)] * x[(j, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
        }
        x
    }

    pub fn solve_sym(&self, b: &SymMatrix) -> Matrix {
        self.solve_matrix(b.as_matrix())
    }

    /// `A^-1`, symmetrized.
    pub fn inverse(&self) -> SymMatrix {
        let inv = self.solve_matrix(&DMatrix::identity(self.dim(), self.dim()));
        SymMatrix::symmetrize(&inv)
    }

    /// `log det A` via the Cholesky diagonal; avoids overflow and keeps the
    /// positivity check implicit in construction.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.chol[(i, i)].ln()).sum::<f64>()
    }

    pub fn det(&self) -> f64 {
        let p: f64 = (0..self.dim()).map(|i| self.chol[(i, i)]).product();
        p * p
    }
}

/// Cholesky factorization `A = L L^T` of a symmetric matrix.
///
/// Rejects the input when a pivot falls at or below
/// `SPD_PIVOT_RTOL * max_i A[i][i]`, which signals a singular or indefinite
/// matrix (e.g. a Fisher matrix from collinear bearings).
pub fn cholesky(a: &SymMatrix) -> Result<Matrix> {
    if !a.is_finite() {
        return Err(CoreError::Overflow);
    }
    let n = a.dim();
    let max_diag = (0..n).map(|i| a.get(i, i)).fold(0.0_f64, f64::max);
    let tol = SPD_PIVOT_RTOL * max_diag;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            return Err(CoreError::NotPositiveDefinite {
                index: j,
                pivot: d,
                tolerance: tol,
            });
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

/// Solves `A X = B` for SPD `A`.
pub fn solve(a: &SpdMatrix, b: &Matrix) -> Matrix {
    a.solve_matrix(b)
}

/// Symmetric eigendecomposition, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as the columns of this matrix, in the same
    /// order as `values`. Each column is sign-normalized so its entry of
    /// largest magnitude is positive.
    pub vectors: Matrix,
}

/// Eigendecomposition of a symmetric matrix. Always solvable; the ordering
/// (descending, ties keeping the backend's stable order) and sign convention
/// make the result deterministic.
pub fn sym_eigen(a: &SymMatrix) -> SymEigen {
    let eig = a.as_matrix().clone().symmetric_eigen();
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("symmetric eigenvalues are finite")
    });
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (slot, &idx) in order.iter().enumerate() {
        values.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        // Sign convention: largest-magnitude component positive.
        let mut lead = 0;
        for r in 1..n {
            if col[r].abs() > col[lead].abs() {
                lead = r;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, slot)] = sign * col[r];
        }
    }
    SymEigen { values, vectors }
}

/// Matrix exponential by scaling and squaring with a fully converged
/// Taylor series on the scaled matrix.
///
/// Meets a 1e-12 relative-error contract for `||A|| <= 10`; errors with
/// `Overflow` when entries leave the finite range (extreme arguments).
pub fn mat_exp(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    check_dim(n)?;
    if a.ncols() != n {
        return Err(CoreError::Dimension(a.ncols()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::Overflow);
    }

    // Infinity norm decides the number of halvings; target ||B|| <= 0.5.
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a / 2.0_f64.powi(squarings as i32);

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &b / k as f64;
        result += &term;
        if term.norm() <= 1e-18 * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
        if result.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::Overflow);
        }
    }
    Ok(result)
}
