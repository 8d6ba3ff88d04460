//! Dense matrix numerics: exponential, principal logarithm, polar
//! decomposition, rank/nullspace with tolerances, norms.
//!
//! Every matrix is carried as complex; real matrices are complex with a
//! `Field::Real` tag and exactly-zero imaginary parts. Results of the
//! transcendental functions are checked against that tag and truncated.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Ground field of a matrix or module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Field of an expression combining the two operands.
    pub fn join(self, other: Field) -> Field {
        match (self, other) {
            (Field::Real, Field::Real) => Field::Real,
            _ => Field::Complex,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => write!(f, "real"),
            Field::Complex => write!(f, "complex"),
        }
    }
}

/// Numerical knobs used throughout the crate.
///
/// `rank_tol` is the relative singular-value factor: a singular value counts
/// as zero when it is below `rank_tol * sigma_max * max(rows, cols)`.
#[derive(Debug, Clone, Copy)]
pub struct ToleranceConfig {
    pub rank_tol: f64,
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    /// Largest accepted log-norm in exp-charts.
    pub trust_radius: f64,
    /// Default sup-norm distance within which retractions are attempted.
    pub locality_radius: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_tol: 1e-9,
            residual_tol: 1e-8,
            max_newton_iters: 30,
            trust_radius: 1.0,
            locality_radius: 0.5,
        }
    }
}

impl ToleranceConfig {
    /// Absolute singular-value threshold for a matrix with the given largest
    /// singular value and dimensions.
    pub fn effective_rank_tol(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        self.rank_tol * sigma_max.max(1e-300) * rows.max(cols) as f64
    }
}

/// Dense matrix over R or C, stored as complex entries with a field tag.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    data: CMatrix,
    field: Field,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix<{}> {}x{}", self.field, self.rows(), self.cols())?;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let z = self.data[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn from_cmatrix(data: CMatrix, field: Field) -> Result<Matrix> {
        if field == Field::Real {
            let max_imag = data.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if max_imag != 0.0 {
                return Err(Error::NotReal { max_imag });
            }
        }
        Ok(Matrix { data, field })
    }

    /// Wraps complex data without a field check.
    pub fn complex(data: CMatrix) -> Matrix {
        Matrix {
            data,
            field: Field::Complex,
        }
    }

    pub fn real_from(data: DMatrix<f64>) -> Matrix {
        Matrix {
            data: data.map(|x| Complex64::new(x, 0.0)),
            field: Field::Real,
        }
    }

    pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64], field: Field) -> Result<Matrix> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Matrix::from_cmatrix(CMatrix::from_row_slice(rows, cols, entries), field)
    }

    pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Matrix {
        Matrix::real_from(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn zeros(rows: usize, cols: usize, field: Field) -> Matrix {
        Matrix {
            data: CMatrix::zeros(rows, cols),
            field,
        }
    }

    pub fn identity(n: usize, field: Field) -> Matrix {
        Matrix {
            data: CMatrix::identity(n, n),
            field,
        }
    }

    pub fn scalar(n: usize, z: Complex64) -> Matrix {
        let field = if z.im == 0.0 { Field::Real } else { Field::Complex };
        Matrix {
            data: CMatrix::identity(n, n) * z,
            field,
        }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    fn require_square(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix {
            data: self.data.adjoint(),
            field: self.field,
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix {
            data: self.data.transpose(),
            field: self.field,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.diagonal().sum()
    }

    pub fn scale(&self, z: Complex64) -> Matrix {
        let field = if z.im == 0.0 { self.field } else { Field::Complex };
        Matrix {
            data: &self.data * z,
            field,
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn spectral_norm(&self) -> f64 {
        if self.rows() == 0 || self.cols() == 0 {
            return 0.0;
        }
        self.data
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.data.clone().singular_values().iter().copied().collect()
    }

    pub fn try_inverse(&self) -> Result<Matrix> {
        self.require_square()?;
        match self.data.clone().try_inverse() {
            Some(inv) => Ok(Matrix {
                data: inv,
                field: self.field,
            }),
            None => Err(Error::Singular { sigma_min: 0.0 }),
        }
    }

    /// Truncates imaginary parts when the field tag is real, after checking
    /// they are numerical noise.
    pub fn enforce_field(mut self, tol: f64) -> Result<Matrix> {
        if self.field == Field::Real {
            let max_imag = self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if max_imag > tol {
                return Err(Error::NotReal { max_imag });
            }
            self.data.apply(|z| *z = Complex64::new(z.re, 0.0));
        }
        Ok(self)
    }

    /// Hermitian conjugation residual from the identity, `||A* A - I||`.
    pub fn unitary_residual(&self) -> f64 {
        let n = self.cols();
        (self.data.adjoint() * &self.data - CMatrix::identity(n, n)).norm()
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        Matrix {
            data: &self.data + &rhs.data,
            field: self.field.join(rhs.field),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        Matrix {
            data: &self.data - &rhs.data,
            field: self.field.join(rhs.field),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        Matrix {
            data: &self.data * &rhs.data,
            field: self.field.join(rhs.field),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix {
            data: -&self.data,
            field: self.field,
        }
    }
}

/// Matrix exponential by scaling and squaring (Padé, via nalgebra).
pub fn mat_exp(x: &Matrix) -> Result<Matrix> {
    x.require_square()?;
    let e = x.data.exp();
    Matrix {
        data: e,
        field: x.field,
    }
    .enforce_field(1e-10)
}

/// Realification of a complex n x n matrix as a real 2n x 2n matrix with the
/// same spectrum union its conjugate.
fn realify(a: &CMatrix) -> DMatrix<f64> {
    let n = a.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            r[(i, j)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
            r[(i + n, j + n)] = z.re;
        }
    }
    r
}

/// Checks the principal-branch condition: no eigenvalue on the closed
/// negative real axis. Returns the offending eigenvalue if there is one.
fn negative_axis_eigenvalue(a: &CMatrix) -> Option<Complex64> {
    let scale = a.norm().max(1e-300);
    let eigs = realify(a).complex_eigenvalues();
    eigs.iter()
        .find(|z| z.im.abs() <= 1e-10 * scale && z.re <= 1e-12 * scale)
        .copied()
}

/// Principal square root by the Denman-Beavers iteration. Requires no
/// eigenvalues on the closed negative real axis.
fn sqrt_denman_beavers(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = CMatrix::identity(n, n);
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { sigma_min: 0.0 })?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { sigma_min: 0.0 })?;
        let y_next = (&y + z_inv) * Complex64::new(0.5, 0.0);
        let z_next = (&z + y_inv) * Complex64::new(0.5, 0.0);
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm().max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence {
        iters: 100,
        residual: f64::NAN,
    })
}

/// Principal matrix logarithm by inverse scaling and squaring: repeated
/// principal square roots until close to the identity, then the Mercator
/// series.
pub fn mat_log(a: &Matrix) -> Result<Matrix> {
    a.require_square()?;
    let n = a.rows();
    if let Some(eigenvalue) = negative_axis_eigenvalue(&a.data) {
        return Err(Error::OutsidePrincipalBranch { eigenvalue });
    }
    let id = CMatrix::identity(n, n);
    let mut b = a.data.clone();
    let mut squarings = 0u32;
    while (&b - &id).norm() > 0.25 {
        if squarings >= 60 {
            return Err(Error::NoConvergence {
                iters: 60,
                residual: (&b - &id).norm(),
            });
        }
        b = sqrt_denman_beavers(&b)?;
        squarings += 1;
    }
    // log(I + E) = E - E^2/2 + E^3/3 - ...
    let e = &b - &id;
    let mut term = e.clone();
    let mut acc = e.clone();
    for m in 2..200 {
        term *= &e;
        let contribution = &term * Complex64::new(if m % 2 == 0 { -1.0 } else { 1.0 } / m as f64, 0.0);
        acc += &contribution;
        if term.norm() / m as f64 <= 1e-18 {
            break;
        }
    }
    acc *= Complex64::new(f64::powi(2.0, squarings as i32), 0.0);
    Matrix {
        data: acc,
        field: a.field,
    }
    .enforce_field(1e-9)
}

/// Unitary factor of the polar decomposition `W = U P`, through the SVD.
pub fn polar_unitary(w: &Matrix, tol: &ToleranceConfig) -> Result<Matrix> {
    w.require_square()?;
    let svd = w.data.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let sigma_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = tol.effective_rank_tol(sigma_max, w.rows(), w.cols());
    if !(sigma_min > threshold) {
        return Err(Error::Singular { sigma_min });
    }
    let u = svd.u.as_ref().unwrap() * svd.v_t.as_ref().unwrap();
    Matrix {
        data: u,
        field: w.field,
    }
    .enforce_field(1e-10)
}

/// Orthonormal basis of the numerical kernel: right singular vectors whose
/// singular values fall below the rank threshold.
pub fn nullspace_basis(m: &Matrix, tol: &ToleranceConfig) -> Vec<CVector> {
    let rows = m.rows();
    let cols = m.cols();
    if cols == 0 {
        return Vec::new();
    }
    // Pad with zero rows so the thin SVD carries a full set of right
    // singular vectors.
    let data = if rows < cols {
        let mut padded = CMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(&m.data);
        padded
    } else {
        m.data.clone()
    };
    let svd = data.svd(false, true);
    let v_t = svd.v_t.as_ref().unwrap();
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = tol.effective_rank_tol(sigma_max, rows, cols);
    let mut basis = Vec::new();
    for (k, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma <= threshold {
            basis.push(v_t.row(k).adjoint());
        }
    }
    basis
}

/// Numerical rank through singular values.
pub fn rank(m: &Matrix, tol: &ToleranceConfig) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let sv = m.data.clone().singular_values();
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let threshold = tol.effective_rank_tol(sigma_max, m.rows(), m.cols());
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Minimum-norm least-squares solution of `M x = b`, with the residual
/// `||M x - b||` reported alongside.
pub fn least_squares_solve(m: &Matrix, b: &CVector, tol: &ToleranceConfig) -> Result<(CVector, f64)> {
    if b.len() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows but the right-hand side has {} entries",
            m.rows(),
            b.len()
        )));
    }
    let svd = m.data.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = tol.effective_rank_tol(sigma_max, m.rows(), m.cols());
    let u = svd.u.as_ref().unwrap();
    let v_t = svd.v_t.as_ref().unwrap();
    let mut coeffs = u.adjoint() * b;
    for (k, &sigma) in svd.singular_values.iter().enumerate() {
        coeffs[k] = if sigma > threshold {
            coeffs[k] / Complex64::new(sigma, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let x = v_t.adjoint() * coeffs;
    let residual = (&m.data * &x - b).norm();
    Ok((x, residual))
}

/// Eigenvalues of a normal matrix by simultaneous diagonalization of its
/// hermitian and skew-hermitian parts. Exact route for unitaries, where a
/// general nonsymmetric eigensolver is not otherwise needed.
pub fn normal_eigenvalues(m: &Matrix, tol: &ToleranceConfig) -> Result<Vec<Complex64>> {
    m.require_square()?;
    let n = m.rows();
    let a = &m.data;
    let scale = a.norm().max(1e-300);
    let normality = (a * a.adjoint() - a.adjoint() * a).norm();
    if normality > 1e-8 * scale * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not normal (residual {normality:.3e}); eigenvalues unsupported"
        )));
    }
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let s = (a - a.adjoint()) * Complex64::new(0.0, -0.5);
    let eig_h = nalgebra::SymmetricEigen::new(h);
    // Cluster the eigenvalues of the hermitian part, then diagonalize the
    // skew part restricted to each cluster's eigenspace.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig_h.eigenvalues[i].partial_cmp(&eig_h.eigenvalues[j]).unwrap());
    let cluster_tol = 1e-7 * scale.max(1.0);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && (eig_h.eigenvalues[order[end]] - eig_h.eigenvalues[order[end - 1]]).abs() <= cluster_tol
        {
            end += 1;
        }
        let k = end - start;
        let mut q = CMatrix::zeros(n, k);
        for (col, &idx) in order[start..end].iter().enumerate() {
            q.set_column(col, &eig_h.eigenvectors.column(idx));
        }
        let s_block = q.adjoint() * &s * &q;
        let eig_s = nalgebra::SymmetricEigen::new(s_block);
        for col in 0..k {
            let vec = &q * eig_s.eigenvectors.column(col);
            // Rayleigh quotient of the full matrix on the refined vector.
            let lambda_vec = a * &vec;
            let lambda = vec.dotc(&lambda_vec) / vec.dotc(&vec);
            eigenvalues.push(lambda);
        }
        start = end;
    }
    let _ = tol;
    Ok(eigenvalues)
}

/// Sparse linear operator given by coordinate triplets; computes rank and
/// nullity through the Gram matrix, whose assembly exploits row sparsity.
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    by_row: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOperator {
    pub fn new(rows: usize, cols: usize) -> SparseOperator {
        SparseOperator {
            rows,
            cols,
            by_row: vec![Vec::new(); rows],
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.rows && col < self.cols);
        if value != Complex64::new(0.0, 0.0) {
            self.by_row[row].push((col, value));
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// (rank, nullity) with the standard relative singular-value threshold.
    pub fn rank_nullity(&self, tol: &ToleranceConfig) -> (usize, usize) {
        if self.cols == 0 {
            return (0, 0);
        }
        if self.rows == 0 {
            return (0, self.cols);
        }
        let mut gram = CMatrix::zeros(self.cols, self.cols);
        for row in &self.by_row {
            // Merge duplicate column indices first so the rank-1 update is exact.
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
            for &(c, v) in row {
                match merged.iter_mut().find(|(mc, _)| *mc == c) {
                    Some((_, mv)) => *mv += v,
                    None => merged.push((c, v)),
                }
            }
            for &(ca, va) in &merged {
                for &(cb, vb) in &merged {
                    gram[(ca, cb)] += va.conj() * vb;
                }
            }
        }
        let eig = nalgebra::SymmetricEigen::new(gram);
        let sigma: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
        let threshold = tol.effective_rank_tol(sigma_max, self.rows, self.cols);
        let rank = sigma.iter().filter(|&&s| s > threshold).count();
        (rank, self.cols - rank)
    }

    /// Dense realization, for small operators and kernel-vector extraction.
    pub fn to_dense(&self) -> Matrix {
        let mut data = CMatrix::zeros(self.rows, self.cols);
        for (r, row) in self.by_row.iter().enumerate() {
            for &(c, v) in row {
                data[(r, c)] += v;
            }
        }
        Matrix::complex(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rotation_series(theta: f64, terms: usize) -> Matrix {
        // Independent oracle: partial sums of the power series of exp.
        let x = Matrix::from_real_rows(2, 2, &[0.0, -theta, theta, 0.0]);
        let mut acc = Matrix::identity(2, Field::Real);
        let mut term = Matrix::identity(2, Field::Real);
        for k in 1..=terms {
            term = &term * &x;
            term = term.scale(c(1.0 / k as f64, 0.0));
            acc = &acc + &term;
        }
        acc
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = Matrix::zeros(2, 2, Field::Real);
        let e = mat_exp(&z).unwrap();
        assert!((&e - &Matrix::identity(2, Field::Real)).fro_norm() < 1e-15);
    }

    #[test]
    fn exp_of_diagonal_is_entrywise() {
        let d = Matrix::from_real_rows(2, 2, &[0.3, 0.0, 0.0, -1.2]);
        let e = mat_exp(&d).unwrap();
        assert!((e.entry(0, 0).re - 0.3f64.exp()).abs() < 1e-14);
        assert!((e.entry(1, 1).re - (-1.2f64).exp()).abs() < 1e-14);
        assert!(e.entry(0, 1).norm() < 1e-15);
    }

    #[test]
    fn exp_rotation_matches_series_oracle() {
        let theta = 0.3;
        let x = Matrix::from_real_rows(2, 2, &[0.0, -theta, theta, 0.0]);
        let e = mat_exp(&x).unwrap();
        let oracle = rotation_series(theta, 20);
        assert!((&e - &oracle).fro_norm() < 1e-12);
        assert!((e.entry(0, 0).re - theta.cos()).abs() < 1e-14);
        assert!((e.entry(1, 0).re - theta.sin()).abs() < 1e-14);
    }

    #[test]
    fn exp_rejects_non_square() {
        let m = Matrix::zeros(2, 3, Field::Real);
        assert!(matches!(mat_exp(&m), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn log_of_identity_is_zero() {
        let l = mat_log(&Matrix::identity(3, Field::Real)).unwrap();
        assert!(l.fro_norm() < 1e-14);
    }

    #[test]
    fn log_round_trip_random() {
        let mut rng = crate::testrng(7);
        for _ in 0..20 {
            let x = random_bounded(&mut rng, 3, 0.5);
            let a = mat_exp(&x).unwrap();
            let l = mat_log(&a).unwrap();
            assert!((&l - &x).fro_norm() < 1e-10, "round trip failed");
        }
    }

    #[test]
    fn log_rejects_branch_cut() {
        let minus_i = Matrix::from_real_rows(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            mat_log(&minus_i),
            Err(Error::OutsidePrincipalBranch { .. })
        ));
    }

    #[test]
    fn polar_of_unitary_is_itself() {
        let theta: f64 = 0.4;
        let w = Matrix::from_real_rows(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let u = polar_unitary(&w, &ToleranceConfig::default()).unwrap();
        assert!((&u - &w).fro_norm() < 1e-12);
    }

    #[test]
    fn polar_strips_positive_part() {
        let w = Matrix::from_real_rows(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let u = polar_unitary(&w, &ToleranceConfig::default()).unwrap();
        assert!((&u - &Matrix::identity(2, Field::Real)).fro_norm() < 1e-12);
    }

    #[test]
    fn polar_recovers_constructed_factor() {
        let mut rng = crate::testrng(11);
        for _ in 0..10 {
            let u0 = random_unitary(&mut rng, 3);
            // Positive part from a random well-conditioned hermitian square.
            let b = random_bounded(&mut rng, 3, 0.4);
            let h = &(&b + &b.adjoint()).scale(c(0.5, 0.0)) + &Matrix::identity(3, Field::Complex);
            let w = &u0 * &h;
            let u = polar_unitary(&w, &ToleranceConfig::default()).unwrap();
            assert!((&u - &u0).fro_norm() < 1e-10);
            // And the reconstruction W = U sqrt(W* W).
            let p = sqrt_denman_beavers(&(w.adjoint().data() * w.data())).unwrap();
            let recon = u.data() * p;
            assert!((recon - w.data()).norm() < 1e-9);
        }
    }

    #[test]
    fn polar_rejects_singular() {
        let w = Matrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            polar_unitary(&w, &ToleranceConfig::default()),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn nullspace_of_zero_is_everything() {
        let z = Matrix::zeros(3, 3, Field::Real);
        let basis = nullspace_basis(&z, &ToleranceConfig::default());
        assert_eq!(basis.len(), 3);
    }

    #[test]
    fn nullspace_of_identity_is_empty() {
        let basis = nullspace_basis(&Matrix::identity(4, Field::Real), &ToleranceConfig::default());
        assert!(basis.is_empty());
    }

    #[test]
    fn nullspace_of_ones_matrix() {
        let m = Matrix::from_real_rows(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let basis = nullspace_basis(&m, &ToleranceConfig::default());
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        // Proportional to (1, -1)/sqrt(2), up to phase.
        assert!((v[0] + v[1]).norm() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_dimension_plus_rank_is_cols() {
        let mut rng = crate::testrng(3);
        for _ in 0..10 {
            let rows = 2 + (rand::Rng::gen_range(&mut rng, 0..3_usize));
            let cols = 2 + (rand::Rng::gen_range(&mut rng, 0..4_usize));
            let m = random_rect(&mut rng, rows, cols);
            let tol = ToleranceConfig::default();
            let r = rank(&m, &tol);
            let k = nullspace_basis(&m, &tol).len();
            assert_eq!(r + k, cols);
        }
    }

    #[test]
    fn least_squares_identity() {
        let m = Matrix::identity(3, Field::Real);
        let b = CVector::from_fn(3, |i, _| c(i as f64 + 1.0, 0.0));
        let (x, res) = least_squares_solve(&m, &b, &ToleranceConfig::default()).unwrap();
        assert!((x - b).norm() < 1e-14);
        assert!(res < 1e-14);
    }

    #[test]
    fn least_squares_consistent_overdetermined() {
        let mut rng = crate::testrng(5);
        let m = random_rect(&mut rng, 5, 3);
        let x_true = CVector::from_fn(3, |i, _| c(0.3 * i as f64 - 0.2, 0.1));
        let b = m.data() * &x_true;
        let (x, res) = least_squares_solve(&m, &b, &ToleranceConfig::default()).unwrap();
        assert!(res <= 1e-12);
        assert!((x - x_true).norm() < 1e-10);
    }

    #[test]
    fn least_squares_inconsistent_reports_projection_distance() {
        // 2x1 system: columns span (1, 0); distance of b = (1, 1) is 1.
        let m = Matrix::from_real_rows(2, 1, &[1.0, 0.0]);
        let b = CVector::from_fn(2, |_, _| c(1.0, 0.0));
        let (x, res) = least_squares_solve(&m, &b, &ToleranceConfig::default()).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((res - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exp_additivity_on_commuting_pair() {
        let x = Matrix::from_real_rows(2, 2, &[0.0, -0.3, 0.3, 0.0]);
        let y = x.scale(c(1.7, 0.0));
        let lhs = mat_exp(&(&x + &y)).unwrap();
        let rhs = &mat_exp(&x).unwrap() * &mat_exp(&y).unwrap();
        assert!((&lhs - &rhs).fro_norm() < 1e-10);
    }

    #[test]
    fn normal_eigenvalues_of_unitary() {
        let mut rng = crate::testrng(19);
        for _ in 0..10 {
            let u = random_unitary(&mut rng, 3);
            let eigs = normal_eigenvalues(&u, &ToleranceConfig::default()).unwrap();
            assert_eq!(eigs.len(), 3);
            for lambda in &eigs {
                assert!((lambda.norm() - 1.0).abs() < 1e-9);
            }
            // Trace is the eigenvalue sum.
            let sum: Complex64 = eigs.iter().sum();
            assert!((sum - u.trace()).norm() < 1e-9);
        }
    }

    #[test]
    fn normal_eigenvalues_distinguishes_conjugate_spectra() {
        let i_eig = Matrix::from_rows(
            2,
            2,
            &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
            Field::Complex,
        )
        .unwrap();
        let eigs = normal_eigenvalues(&i_eig, &ToleranceConfig::default()).unwrap();
        for lambda in eigs {
            assert!((lambda - c(0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn sparse_rank_matches_dense() {
        let mut rng = crate::testrng(23);
        for _ in 0..10 {
            let m = random_rect(&mut rng, 6, 4);
            let mut op = SparseOperator::new(6, 4);
            for i in 0..6 {
                for j in 0..4 {
                    op.add(i, j, m.entry(i, j));
                }
            }
            let tol = ToleranceConfig::default();
            let (r, n) = op.rank_nullity(&tol);
            assert_eq!(r, rank(&m, &tol));
            assert_eq!(r + n, 4);
        }
    }

    // -- small random generators for this module's tests --

    fn random_bounded(rng: &mut impl rand::Rng, n: usize, norm: f64) -> Matrix {
        let mut data = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                data[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let current = data.norm();
        Matrix::complex(data * c(norm / current, 0.0))
    }

    fn random_rect(rng: &mut impl rand::Rng, rows: usize, cols: usize) -> Matrix {
        let mut data = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                data[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        Matrix::complex(data)
    }

    fn random_unitary(rng: &mut impl rand::Rng, n: usize) -> Matrix {
        let x = random_bounded(rng, n, 1.0);
        let skew = (&x - &x.adjoint()).scale(c(0.5, 0.0));
        mat_exp(&skew).unwrap()
    }
}
