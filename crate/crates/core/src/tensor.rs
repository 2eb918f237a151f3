//! Dense complex linear algebra for the small (2 through 16 dimensional)
//! objects this crate works with: gamma matrices, spinor representations,
//! two-particle states and their reduced density matrices.
//!
//! Hermitian eigenproblems are solved in closed form for 2x2 and by cyclic
//! complex Jacobi rotations otherwise. Everything here is a pure function of
//! its inputs.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Off-diagonal Frobenius threshold at which Jacobi sweeps stop.
const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a density matrix below this are treated as exact zeros.
pub const ENTROPY_EIGEN_FLOOR: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols,
            data,
        }
    }

    pub fn from_real<const R: usize, const K: usize>(m: &[[f64; K]; R]) -> Self {
        let data = m.iter().flatten().map(|&x| c(x, 0.0)).collect();
        Self {
            rows: R,
            cols: K,
            data,
        }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Column matrix holding the given vector.
    pub fn column(v: &ComplexVector) -> Self {
        Self {
            rows: v.dim(),
            cols: 1,
            data: v.as_slice().to_vec(),
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[&ComplexVector]) -> Result<Self> {
        let rows = cols.first().map(|v| v.dim()).unwrap_or(0);
        if rows == 0 || cols.iter().any(|v| v.dim() != rows) {
            return Err(Error::DimensionMismatch("column lengths differ".into()));
        }
        let mut m = Self::zeros(rows, cols.len());
        for (j, v) in cols.iter().enumerate() {
            for i in 0..rows {
                m[(i, j)] = v[i];
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn try_apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on a {}-vector",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let data = (0..self.rows)
            .map(|i| self.row(i).iter().zip(v.as_slice()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(ComplexVector::new(data))
    }

    /// Matrix-vector product; panics on a dimension mismatch.
    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        self.try_apply(v).expect("matrix-vector dimension mismatch")
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-row-sum norm.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// max |A[i,j] - conj(A[j,i])|, or infinity for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self * other + other * self
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        kron(self, rhs)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .unwrap();
            if a[(pivot, col)].norm() <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let d = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= d;
                inv[(col, j)] *= d;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(i, j)] -= f * ac;
                    inv[(i, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $f:ident) => {
        impl $tr for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$f(rhs)
            }
        }
        impl $tr<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: ComplexMatrix) -> ComplexMatrix {
                self.$f(&rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    data: Vec<C64>,
}

impl ComplexVector {
    pub fn new(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![ZERO; dim],
        }
    }

    /// The i-th standard basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[i] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(self.scale(c(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let mut data = Vec::with_capacity(self.dim() * rhs.dim());
        for &a in &self.data {
            data.extend(rhs.data.iter().map(|&b| a * b));
        }
        Self { data }
    }

    /// `|self><self|`.
    pub fn projector(&self) -> ComplexMatrix {
        let col = ComplexMatrix::column(self);
        &col * &col.adjoint()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

impl Add for &ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim());
        ComplexVector::new(self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim());
        ComplexVector::new(self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect())
    }
}

impl From<Vec<C64>> for ComplexVector {
    fn from(data: Vec<C64>) -> Self {
        Self::new(data)
    }
}

/// Kronecker product: `(A⊗B)[i·pB + k, j·qB + l] = A[i,j]·B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (pa, qa, pb, qb) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = ComplexMatrix::zeros(pa * pb, qa * qb);
    for i in 0..pa {
        for j in 0..qa {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..pb {
                for l in 0..qb {
                    out[(i * pb + k, j * qb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d: Vec<C64> = self.values.iter().map(|&x| c(f(x), 0.0)).collect();
        &(&self.vectors * &ComplexMatrix::diagonal(&d)) * &self.vectors.adjoint()
    }
}

/// Hermitian eigensolver. `tol` bounds the accepted hermiticity defect.
pub fn eigh(h: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    let defect = h.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian(defect));
    }
    let mut eig = if h.rows() == 2 {
        eigh_2x2(h)
    } else {
        eigh_jacobi(h)
    };
    sort_eigen_ascending(&mut eig);
    Ok(eig)
}

fn sort_eigen_ascending(eig: &mut HermitianEigen) {
    let n = eig.values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.values[a].total_cmp(&eig.values[b]));
    let values = order.iter().map(|&k| eig.values[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new)] = eig.vectors[(i, old)];
        }
    }
    eig.values = values;
    eig.vectors = vectors;
}

fn eigh_2x2(h: &ComplexMatrix) -> HermitianEigen {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    // average the two off-diagonal estimates so tiny asymmetries do not bias
    let b = (h[(0, 1)] + h[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let r = half_gap.hypot(b.norm());
    let (lo, hi) = (mean - r, mean + r);

    if b.norm() <= f64::EPSILON * (a.abs() + d.abs()).max(f64::MIN_POSITIVE) {
        return HermitianEigen {
            values: vec![a, d],
            vectors: ComplexMatrix::identity(2),
        };
    }

    // For eigenvalue λ both (b, λ - a) and (λ - d, b*) are eigenvectors;
    // take whichever has the larger norm.
    let vec_for = |lambda: f64| -> [C64; 2] {
        let v1 = [b, c(lambda - a, 0.0)];
        let v2 = [c(lambda - d, 0.0), b.conj()];
        let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
        let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
        if n1 >= n2 {
            [v1[0] / n1, v1[1] / n1]
        } else {
            [v2[0] / n2, v2[1] / n2]
        }
    };
    let vl = vec_for(lo);
    let vh = vec_for(hi);
    HermitianEigen {
        values: vec![lo, hi],
        vectors: ComplexMatrix::from_rows(&[[vl[0], vh[0]], [vl[1], vh[1]]]),
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi. Each rotation `R = D·P` first removes the phase of
/// `a_pq` with `D = diag(1, e^{-iφ})` on (p, q), then applies the real
/// symmetric Jacobi rotation `P`.
fn eigh_jacobi(h: &ComplexMatrix) -> HermitianEigen {
    let n = h.rows();
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] = c(a[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_OFF_TOL * h.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let ph_conj = phase.conj();

                // A <- A R
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * cs - akq * ph_conj * sn;
                    a[(k, q)] = akp * sn + akq * ph_conj * cs;
                }
                // A <- R^† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * cs - aqk * phase * sn;
                    a[(q, k)] = apk * sn + aqk * phase * cs;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = c(a[(p, p)].re, 0.0);
                a[(q, q)] = c(a[(q, q)].re, 0.0);
                // V <- V R
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cs - vkq * ph_conj * sn;
                    v[(k, q)] = vkp * sn + vkq * ph_conj * cs;
                }
            }
        }
    }
    HermitianEigen {
        values: (0..n).map(|i| a[(i, i)].re).collect(),
        vectors: v,
    }
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
///
/// Eigenvalues in `[-1e-9, 0)` are clamped to zero; anything more negative is
/// rejected.
pub fn hermitian_sqrt(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eigh(h, 1e-12 * h.max_abs().max(1.0))?;
    let scale = h.max_abs().max(1.0);
    if let Some(&neg) = eig.values.iter().find(|&&x| x < -1e-9 * scale) {
        return Err(Error::NegativeEigenvalue(neg));
    }
    let root = eig.reconstruct_with(|x| x.max(0.0).sqrt());
    // symmetrize away rounding so the result is Hermitian to the last bit
    Ok((&root + &root.adjoint()).scale_real(0.5))
}

/// Matrix exponential by scaling and squaring with a Taylor series
/// truncated at machine precision.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("exp of a non-square matrix".into()));
    }
    let n = a.rows();
    let norm = a.inf_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(squarings));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=60 {
        term = (&term * &scaled).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.max_abs() <= f64::EPSILON * 1e-2 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

/// Which factor of a bipartite system to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of a `dA·dB` square matrix, keeping one factor.
pub fn partial_trace(rho: &ComplexMatrix, keep: Subsystem, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if !rho.is_square() || rho.rows() != da * db || da == 0 || db == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix with subsystem dims ({da}, {db})",
            rho.rows(),
            rho.cols()
        )));
    }
    Ok(match keep {
        Subsystem::First => {
            let mut out = ComplexMatrix::zeros(da, da);
            for i in 0..da {
                for j in 0..da {
                    out[(i, j)] = (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum();
                }
            }
            out
        }
        Subsystem::Second => {
            let mut out = ComplexMatrix::zeros(db, db);
            for k in 0..db {
                for l in 0..db {
                    out[(k, l)] = (0..da).map(|i| rho[(i * db + k, i * db + l)]).sum();
                }
            }
            out
        }
    })
}

/// Reshapes a bipartite vector into its `dA x dB` coefficient matrix.
pub fn coefficient_matrix(psi: &ComplexVector, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if psi.dim() != da * db || da == 0 || db == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}-vector with subsystem dims ({da}, {db})",
            psi.dim()
        )));
    }
    ComplexMatrix::new(da, db, psi.as_slice().to_vec())
}

/// Squared singular values of the coefficient matrix of a normalized
/// bipartite pure state, descending, `min(dA, dB)` of them.
pub fn schmidt_coefficients(psi: &ComplexVector, dims: (usize, usize)) -> Result<Vec<f64>> {
    let m = coefficient_matrix(psi, dims)?;
    let n2 = psi.norm_sqr();
    if (n2 - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(n2));
    }
    let gram = if dims.0 <= dims.1 {
        &m * &m.adjoint()
    } else {
        &m.adjoint() * &m
    };
    let eig = eigh(&gram, 1e-10)?;
    let mut values: Vec<f64> = eig.values.into_iter().map(|x| x.max(0.0)).collect();
    // stable sort keeps ties in eigensolver order
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Shannon entropy in bits of a probability spectrum; entries below the
/// eigenvalue floor count as zero.
pub fn entropy_bits(spectrum: &[f64]) -> f64 {
    spectrum
        .iter()
        .filter(|&&p| p > ENTROPY_EIGEN_FLOOR)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Von Neumann entropy `-Tr ρ log₂ ρ` of a density matrix.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    if !rho.is_square() {
        return Err(Error::NotDensityMatrix("not square".into()));
    }
    let defect = rho.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::NotDensityMatrix(format!("hermiticity defect {defect:e}")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::NotDensityMatrix(format!("trace {tr}")));
    }
    let eig = eigh(rho, 1e-10)?;
    if let Some(&bad) = eig
        .values
        .iter()
        .find(|&&x| !(-1e-10..=1.0 + 1e-10).contains(&x))
    {
        return Err(Error::NotDensityMatrix(format!("eigenvalue {bad}")));
    }
    Ok(entropy_bits(&eig.values))
}

/// Pauli matrices `[σx, σy, σz]`.
pub fn pauli() -> [ComplexMatrix; 3] {
    [
        ComplexMatrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]]),
        ComplexMatrix::from_rows(&[[ZERO, -I], [I, ZERO]]),
        ComplexMatrix::from_rows(&[[ONE, ZERO], [ZERO, -ONE]]),
    ]
}

/// Block matrix `[[a, b], [c, d]]` from four equally sized square blocks.
pub fn block2(a: &ComplexMatrix, b: &ComplexMatrix, cc: &ComplexMatrix, d: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let mut out = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = a[(i, j)];
            out[(i, j + n)] = b[(i, j)];
            out[(i + n, j)] = cc[(i, j)];
            out[(i + n, j + n)] = d[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let data = (0..n * n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::new(n, n, data).unwrap()
    }

    fn rand_density(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let a = rand_matrix(rng, n);
        let p = &a * &a.adjoint();
        let t = p.trace().re;
        p.scale_real(1.0 / t)
    }

    fn rand_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let a = rand_matrix(rng, n);
        let h = (&a + &a.adjoint()).scale_real(0.5);
        matrix_exp(&h.scale(I)).unwrap()
    }

    #[test]
    fn kron_identity_and_pauli_z() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let [_, _, sz] = pauli();
        let zz = kron(&sz, &sz);
        let expect = ComplexMatrix::diagonal(&[ONE, -ONE, -ONE, ONE]);
        assert_eq!(zz, expect);
    }

    #[test]
    fn kron_is_bilinear_and_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = rand_matrix(&mut rng, 2);
            let b = rand_matrix(&mut rng, 2);
            let cm = rand_matrix(&mut rng, 2);
            let lhs = kron(&a, &(&b + &cm));
            let rhs = &kron(&a, &b) + &kron(&a, &cm);
            assert!(lhs.max_abs_diff(&rhs) < 1e-14);
            let l = kron(&kron(&a, &b), &cm);
            let r = kron(&a, &kron(&b, &cm));
            assert!(l.max_abs_diff(&r) <= 1e-12);
        }
    }

    #[test]
    fn kron_index_formula_rectangular() {
        let a = ComplexMatrix::new(2, 3, (0..6).map(|x| c(x as f64, 1.0)).collect()).unwrap();
        let b = ComplexMatrix::new(3, 2, (0..6).map(|x| c(1.0, x as f64)).collect()).unwrap();
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (6, 6));
        for i in 0..2 {
            for j in 0..3 {
                for p in 0..3 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 3 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn sqrt_scalar_and_diagonal() {
        let r = hermitian_sqrt(&ComplexMatrix::identity(2).scale_real(4.0)).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::identity(2).scale_real(2.0)) < 1e-15);
        let r = hermitian_sqrt(&ComplexMatrix::diagonal(&[ZERO, c(9.0, 0.0)])).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::diagonal(&[ZERO, c(3.0, 0.0)])) < 1e-15);
    }

    #[test]
    fn sqrt_of_boost_block() {
        // eigenvalues 0.5 (on |+>) and 2.0 (on |->)
        let [sx, _, _] = pauli();
        let h = &ComplexMatrix::identity(2).scale_real(1.25) - &sx.scale_real(0.75);
        let r = hermitian_sqrt(&h).unwrap();
        let a = (2f64.sqrt() + 0.5f64.sqrt()) / 2.0;
        let b = (0.5f64.sqrt() - 2f64.sqrt()) / 2.0;
        let expect = &ComplexMatrix::identity(2).scale_real(a) + &sx.scale_real(b);
        assert!(r.max_abs_diff(&expect) < 1e-14);
        assert!((a - 1.06066017178).abs() < 1e-10);
        assert!((b + 0.35355339059).abs() < 1e-10);
    }

    #[test]
    fn sqrt_errors() {
        let not_h = ComplexMatrix::from_rows(&[[ONE, ONE], [ZERO, ONE]]);
        assert!(matches!(hermitian_sqrt(&not_h), Err(Error::NotHermitian(_))));
        let neg = ComplexMatrix::diagonal(&[ONE, c(-0.5, 0.0)]);
        assert!(matches!(hermitian_sqrt(&neg), Err(Error::NegativeEigenvalue(_))));
        // tiny negative eigenvalues are clamped
        let clamp = ComplexMatrix::diagonal(&[ONE, c(-1e-13, 0.0)]);
        let r = hermitian_sqrt(&clamp).unwrap();
        assert_eq!(r[(1, 1)], ZERO);
    }

    #[test]
    fn sqrt_squares_back_for_random_psd_2x2() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let a = rand_matrix(&mut rng, 2);
            let h = &a * &a.adjoint();
            let r = hermitian_sqrt(&h).unwrap();
            assert!(r.is_hermitian(1e-14));
            assert!((&r * &r).max_abs_diff(&h) <= 1e-10);
            let eig = eigh(&r, 1e-12).unwrap();
            assert!(eig.values.iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn jacobi_diagonalizes_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3, 4, 8, 16] {
            let a = rand_matrix(&mut rng, n);
            let h = (&a + &a.adjoint()).scale_real(0.5);
            let eig = eigh(&h, 1e-12).unwrap();
            let back = eig.reconstruct_with(|x| x);
            assert!(back.max_abs_diff(&h) < 1e-12, "n = {n}");
            let vv = &eig.vectors.adjoint() * &eig.vectors;
            assert!(vv.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn exp_basics() {
        let z = ComplexMatrix::zeros(3, 3);
        assert_eq!(matrix_exp(&z).unwrap(), ComplexMatrix::identity(3));
        let [_, _, sz] = pauli();
        let theta = 0.3;
        let e = matrix_exp(&sz.scale(c(0.0, theta))).unwrap();
        let expect = ComplexMatrix::diagonal(&[C64::from_polar(1.0, theta), C64::from_polar(1.0, -theta)]);
        assert!(e.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn exp_inverse_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (n, scale) in [(2, 3.0), (4, 3.0), (4, 1.0), (16, 0.3)] {
            let a = rand_matrix(&mut rng, n).scale_real(scale);
            let p = &matrix_exp(&a).unwrap() * &matrix_exp(&-&a).unwrap();
            assert!(p.max_abs_diff(&ComplexMatrix::identity(n)) <= 1e-10, "n = {n}");
        }
    }

    #[test]
    fn inverse_roundtrip_and_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = rand_matrix(&mut rng, 4);
        let inv = a.inverse().unwrap();
        assert!((&a * &inv).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        let s = ComplexMatrix::from_rows(&[[ONE, ONE], [ONE, ONE]]);
        assert_eq!(s.inverse(), Err(Error::Singular));
    }

    #[test]
    fn partial_trace_of_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (da, db) in [(2, 2), (2, 3), (4, 4)] {
            let ra = rand_density(&mut rng, da);
            let rb = rand_density(&mut rng, db);
            let rho = kron(&ra, &rb);
            let a = partial_trace(&rho, Subsystem::First, (da, db)).unwrap();
            let b = partial_trace(&rho, Subsystem::Second, (da, db)).unwrap();
            assert!(a.max_abs_diff(&ra) <= 1e-12);
            assert!(b.max_abs_diff(&rb) <= 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexVector::new(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let red = partial_trace(&phi.projector(), Subsystem::First, (2, 2)).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = rand_density(&mut rng, 16);
        for keep in [Subsystem::First, Subsystem::Second] {
            let r = partial_trace(&rho, keep, (4, 4)).unwrap();
            assert!((r.trace() - rho.trace()).norm() <= 1e-12);
        }
        assert!(matches!(
            partial_trace(&rho, Subsystem::First, (3, 4)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn schmidt_of_product_and_epr() {
        let u = ComplexVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let v = ComplexVector::new(vec![c(1.0, 0.0), ZERO]);
        let sc = schmidt_coefficients(&u.kron(&v), (2, 2)).unwrap();
        assert!((sc[0] - 1.0).abs() < 1e-15 && sc[1].abs() < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ComplexVector::new(vec![ZERO, c(s, 0.0), c(0.0, -s), ZERO]);
        let sc = schmidt_coefficients(&psi, (2, 2)).unwrap();
        assert!((sc[0] - 0.5).abs() < 1e-15 && (sc[1] - 0.5).abs() < 1e-15);

        let unnorm = psi.scale(c(2.0, 0.0));
        assert!(matches!(schmidt_coefficients(&unnorm, (2, 2)), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn schmidt_invariant_under_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let raw = ComplexVector::new(
                (0..16)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
            );
            let psi = raw.normalized().unwrap();
            let ua = rand_unitary(&mut rng, 4);
            let ub = rand_unitary(&mut rng, 4);
            let moved = kron(&ua, &ub).apply(&psi);
            let s0 = schmidt_coefficients(&psi, (4, 4)).unwrap();
            let s1 = schmidt_coefficients(&moved, (4, 4)).unwrap();
            for (a, b) in s0.iter().zip(&s1) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((s0.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn entropy_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pure = ComplexVector::new(vec![c(s, 0.0), c(0.0, s)]).projector();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        let mixed = ComplexMatrix::identity(2).scale_real(0.5);
        assert!((von_neumann_entropy(&mixed).unwrap() - 1.0).abs() < 1e-15);
        // -(0.25 log2 0.25 + 0.75 log2 0.75)
        let d = ComplexMatrix::diagonal(&[c(0.25, 0.0), c(0.75, 0.0)]);
        assert!((von_neumann_entropy(&d).unwrap() - 0.811278124459).abs() < 1e-11);
        let bad = ComplexMatrix::diagonal(&[c(0.5, 0.0), c(0.6, 0.0)]);
        assert!(matches!(von_neumann_entropy(&bad), Err(Error::NotDensityMatrix(_))));
        let neg = ComplexMatrix::diagonal(&[c(1.5, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(von_neumann_entropy(&neg), Err(Error::NotDensityMatrix(_))));
    }

    #[test]
    fn schmidt_entropy_matches_reduced_state_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let psi = ComplexVector::new(
                (0..16)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
            )
            .normalized()
            .unwrap();
            let spec = schmidt_coefficients(&psi, (4, 4)).unwrap();
            let red = partial_trace(&psi.projector(), Subsystem::First, (4, 4)).unwrap();
            let s_vn = von_neumann_entropy(&red).unwrap();
            assert!((entropy_bits(&spec) - s_vn).abs() <= 1e-10);
            assert!(s_vn <= 2.0 + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn sqrt_reproduces_psd_input(
            re in proptest::collection::vec(-3.0f64..3.0, 4),
            im in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let a = ComplexMatrix::new(2, 2, re.iter().zip(&im).map(|(&r, &i)| c(r, i)).collect()).unwrap();
            let h = &a * &a.adjoint();
            let r = hermitian_sqrt(&h).unwrap();
            prop_assert!((&r * &r).max_abs_diff(&h) <= 1e-10 * h.max_abs().max(1.0));
        }

        #[test]
        fn exp_of_antihermitian_is_unitary(
            re in proptest::collection::vec(-2.0f64..2.0, 16),
            im in proptest::collection::vec(-2.0f64..2.0, 16),
        ) {
            let a = ComplexMatrix::new(4, 4, re.iter().zip(&im).map(|(&r, &i)| c(r, i)).collect()).unwrap();
            let h = (&a + &a.adjoint()).scale_real(0.5);
            let u = matrix_exp(&h.scale(I)).unwrap();
            prop_assert!((&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        }
    }
}
