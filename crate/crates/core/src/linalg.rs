//! Small dense complex linear algebra: just what the detectors need.
//!
//! Matrices are row-major. The detector windows are `B x K` with one receive
//! antenna per row, so correlations with the sequence and Gram products are
//! dot products over contiguous rows.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::complex_normal_vec;

pub type C64 = Complex64;

/// Relative Hermitian defect accepted by the eigen routines.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Jacobi stops once the off-diagonal Frobenius mass falls below this fraction of `||X||_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Gram eigenvalues below this fraction of the largest are treated as zero in the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Power iteration keeps the current iterate when `||X q||` drops below this.
pub const POWER_ZERO_NORM: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                "from_row_major",
                format!("{} entries for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dims("from_rows", "ragged rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Builds a `len x columns.len()` matrix from column vectors.
    pub fn from_columns(len: usize, columns: &[Vec<C64>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::dims("from_columns", format!("columns must have length {len}")));
        }
        Ok(Self::from_fn(len, columns.len(), |i, j| columns[j][i]))
    }

    /// Real diagonal matrix.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn random_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self {
            rows,
            cols,
            data: complex_normal_vec(rng, rows * cols),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Disjoint mutable rows `i < j`.
    pub(crate) fn two_rows_mut(&mut self, i: usize, j: usize) -> (&mut [C64], &mut [C64]) {
        debug_assert!(i < j && j < self.rows);
        let c = self.cols;
        let (head, tail) = self.data.split_at_mut(j * c);
        (&mut head[i * c..(i + 1) * c], &mut tail[..c])
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    /// Columns `start..start+len` as a new matrix.
    pub fn columns(&self, start: usize, len: usize) -> CMatrix {
        debug_assert!(start + len <= self.cols);
        let mut data = Vec::with_capacity(self.rows * len);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[start..start + len]);
        }
        CMatrix {
            rows: self.rows,
            cols: len,
            data,
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                "sub",
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                "add",
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::dims(
                "matmul",
                format!("{:?} x {:?}", self.shape(), other.shape()),
            ));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::dims(
                "mul_vec",
                format!("{:?} x {}", self.shape(), v.len()),
            ));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        mul_vec_into(self, v, &mut out);
        Ok(out)
    }

    /// `self * self^H`.
    pub fn gram_rows(&self) -> CMatrix {
        let n = self.rows;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot_conj(self.row(i), self.row(j));
                out.data[i * n + j] = v;
                out.data[j * n + i] = v.conj();
            }
            out.data[i * n + i].im = 0.0;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `sum_k a_k * conj(b_k)`.
#[inline]
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.im * y.re - x.re * y.im;
    }
    C64::new(re, im)
}

#[inline]
fn mul_vec_into(m: &CMatrix, v: &[C64], out: &mut [C64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for (a, b) in m.row(i).iter().zip(v) {
            re += a.re * b.re - a.im * b.im;
            im += a.re * b.im + a.im * b.re;
        }
        *o = C64::new(re, im);
    }
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frob_norm_sq(m: &CMatrix) -> f64 {
    norm_sq(m.as_slice())
}

/// `||X - X^H||_F / ||X||_F` (zero for the zero matrix).
pub fn hermitian_defect(x: &CMatrix) -> f64 {
    if !x.is_square() {
        return f64::INFINITY;
    }
    let n = x.rows();
    let mut defect = 0.0;
    for i in 0..n {
        for j in 0..n {
            defect += (x[(i, j)] - x[(j, i)].conj()).norm_sqr();
        }
    }
    let norm = frob_norm_sq(x);
    if norm == 0.0 {
        0.0
    } else {
        (defect / norm).sqrt()
    }
}

fn check_hermitian(x: &CMatrix, op: &'static str) -> Result<()> {
    if !x.is_square() {
        return Err(Error::dims(op, format!("expected square matrix, got {:?}", x.shape())));
    }
    let defect = hermitian_defect(x);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Runs `t_max` normalize-and-multiply steps `q <- X q / ||X q||` in place.
/// When `X` annihilates the iterate, the current unit vector is kept.
/// `observe` sees the iterate after every step.
pub(crate) fn power_iteration(
    x: &CMatrix,
    q: &mut [C64],
    t_max: usize,
    scratch: &mut [C64],
    mut observe: impl FnMut(&[C64]),
) {
    for _ in 0..t_max {
        mul_vec_into(x, q, scratch);
        let norm = norm_sq(scratch).sqrt();
        if norm >= POWER_ZERO_NORM && norm.is_finite() {
            let inv = 1.0 / norm;
            for (qi, &s) in q.iter_mut().zip(scratch.iter()) {
                *qi = s * inv;
            }
        }
        observe(q);
    }
}

fn normalize_in_place(v: &mut [C64]) {
    let norm = norm_sq(v).sqrt();
    if norm > 0.0 {
        let inv = 1.0 / norm;
        v.iter_mut().for_each(|z| *z *= inv);
    }
}

/// Approximates the `num_vecs` dominant eigenvectors of a Hermitian PSD matrix
/// by power iteration with deflation.
///
/// Column `i` starts from a CN(0, I) draw, takes `t_max` power steps on the
/// deflated matrix, and is then removed from it as `X <- X - lambda_i q_i q_i^H`
/// with `lambda_i = q_i^H X q_i`. Columns are not re-orthogonalized, so for small
/// `t_max` they are only approximately orthonormal.
pub fn principal_subspace<R: Rng + ?Sized>(
    x: &CMatrix,
    num_vecs: usize,
    t_max: usize,
    rng: &mut R,
) -> Result<CMatrix> {
    check_hermitian(x, "principal_subspace")?;
    let b = x.rows();
    if num_vecs == 0 || num_vecs >= b {
        return Err(Error::InvalidArgument(format!(
            "number of vectors must satisfy 1 <= {num_vecs} < {b}"
        )));
    }
    if t_max == 0 {
        return Err(Error::InvalidArgument("t_max must be at least 1".into()));
    }
    Ok(principal_subspace_unchecked(x.clone(), num_vecs, t_max, rng))
}

/// Same as [`principal_subspace`] without argument validation; consumes `x`
/// as the deflation workspace.
pub(crate) fn principal_subspace_unchecked<R: Rng + ?Sized>(
    mut xbar: CMatrix,
    num_vecs: usize,
    t_max: usize,
    rng: &mut R,
) -> CMatrix {
    let b = xbar.rows();
    let mut out = CMatrix::zeros(b, num_vecs);
    let mut scratch = vec![C64::new(0.0, 0.0); b];
    for i in 0..num_vecs {
        let mut q = complex_normal_vec(rng, b);
        normalize_in_place(&mut q);
        power_iteration(&xbar, &mut q, t_max, &mut scratch, |_| {});
        mul_vec_into(&xbar, &q, &mut scratch);
        let lambda = dot_conj(&scratch, &q).re;
        for r in 0..b {
            let row = xbar.row_mut(r);
            let s = q[r] * lambda;
            for (x, qc) in row.iter_mut().zip(&q) {
                *x -= s * qc.conj();
            }
        }
        out.set_column(i, &q);
    }
    out
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Unitary; column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
}

impl EigenDecomposition {
    /// The leading `n` eigenvectors as a `B x n` matrix.
    pub fn leading(&self, n: usize) -> CMatrix {
        self.eigenvectors.columns(0, n)
    }

    /// `Q diag(lambda) Q^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let q = &self.eigenvectors;
        let n = q.rows();
        CMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| q[(i, k)] * self.eigenvalues[k] * q[(j, k)].conj())
                .sum()
        })
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn exact_hermitian_evd(x: &CMatrix) -> Result<EigenDecomposition> {
    check_hermitian(x, "exact_hermitian_evd")?;
    let n = x.rows();
    // symmetrize so rounding in the input cannot leak into the rotations
    let mut a: Vec<C64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (x[(i, j)] + x[(j, i)].conj()) * 0.5
        })
        .collect();
    // rows of `vt` are the eigenvectors, kept contiguous for the rotation updates
    let mut vt = CMatrix::identity(n);
    let target = JACOBI_TOL * a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let off_diag = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[i * n + j].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = off_diag(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut vt, n, p, q);
            }
        }
        sweeps += 1;
        converged = off_diag(&a) <= target;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re));
    let eigenvalues = order.iter().map(|&i| a[i * n + i].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| vt[(order[j], i)]);
    Ok(EigenDecomposition {
        eigenvectors,
        eigenvalues,
    })
}

/// Annihilates `a[p][q]` of the Hermitian row-major `a` with the unitary
/// rotation `G = [[c, s e^{i phi}], [-s e^{-i phi}, c]]` on coordinates p, q,
/// where `a[p][q] = |a_pq| e^{i phi}`. Applies `a <- G^H a G` through its
/// columns and mirrors them into the rows; applies `v <- v G` to the rows of `vt = v^T`.
fn jacobi_rotate(a: &mut [C64], vt: &mut CMatrix, n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let mag = apq.norm();
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    if mag == 0.0 {
        return;
    }
    if mag <= f64::EPSILON * 1e-3 * (app.abs() * aqq.abs()).sqrt() {
        // below rounding of both diagonal entries
        a[p * n + q] = C64::new(0.0, 0.0);
        a[q * n + p] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let g_pq = phase * s;
    let g_qp = -phase.conj() * s;

    for (k, row) in a.chunks_exact_mut(n).enumerate() {
        if k == p || k == q {
            continue;
        }
        let (akp, akq) = (row[p], row[q]);
        row[p] = akp * c + akq * g_qp;
        row[q] = akp * g_pq + akq * c;
    }
    for k in 0..n {
        a[p * n + k] = a[k * n + p].conj();
        a[q * n + k] = a[k * n + q].conj();
    }
    a[p * n + p] = C64::new(app - t * mag, 0.0);
    a[q * n + q] = C64::new(aqq + t * mag, 0.0);
    a[p * n + q] = C64::new(0.0, 0.0);
    a[q * n + p] = C64::new(0.0, 0.0);

    let (row_p, row_q) = vt.two_rows_mut(p, q);
    for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let (old_p, old_q) = (*vp, *vq);
        *vp = old_p * c + old_q * g_qp;
        *vq = old_p * g_pq + old_q * c;
    }
}

/// Moore-Penrose pseudoinverse of a tall `B x n` matrix through the
/// eigendecomposition of its `n x n` Gram matrix. Gram eigenvalues below
/// `PINV_CUTOFF * lambda_max` are zeroed, which handles rank deficiency.
pub fn pseudoinverse_tall(a: &CMatrix) -> Result<CMatrix> {
    let (b, n) = a.shape();
    if n == 0 || b < n {
        return Err(Error::dims(
            "pseudoinverse_tall",
            format!("expected B >= n >= 1, got {b}x{n}"),
        ));
    }
    let a_h = a.adjoint();
    let gram = a_h.gram_rows();
    let evd = exact_hermitian_evd(&gram)?;
    let lambda_max = evd.eigenvalues.first().copied().unwrap_or(0.0);
    let q = &evd.eigenvectors;
    // G^+ = Q diag(1/lambda) Q^H over the retained eigenvalues
    let inv: Vec<f64> = evd
        .eigenvalues
        .iter()
        .map(|&l| if lambda_max > 0.0 && l > PINV_CUTOFF * lambda_max { 1.0 / l } else { 0.0 })
        .collect();
    let gram_pinv = CMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| q[(i, k)] * inv[k] * q[(j, k)].conj()).sum()
    });
    gram_pinv.matmul(&a_h)
}

/// `V - A (A^+ V)` without forming the `B x B` projector.
pub fn residual_project(a: &CMatrix, a_pinv: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    if a_pinv.rows() != a.cols() || a_pinv.cols() != a.rows() || v.rows() != a.rows() {
        return Err(Error::dims(
            "residual_project",
            format!("A {:?}, A+ {:?}, V {:?}", a.shape(), a_pinv.shape(), v.shape()),
        ));
    }
    let coeffs = a_pinv.matmul(v)?;
    v.sub(&a.matmul(&coeffs)?)
}

/// Vector form of [`residual_project`].
pub fn residual_project_vec(a: &CMatrix, a_pinv: &CMatrix, v: &[C64]) -> Result<Vec<C64>> {
    if a_pinv.rows() != a.cols() || a_pinv.cols() != a.rows() || v.len() != a.rows() {
        return Err(Error::dims(
            "residual_project_vec",
            format!("A {:?}, A+ {:?}, v {}", a.shape(), a_pinv.shape(), v.len()),
        ));
    }
    let coeffs = a_pinv.mul_vec(v)?;
    let back = a.mul_vec(&coeffs)?;
    Ok(v.iter().zip(&back).map(|(x, y)| x - y).collect())
}
