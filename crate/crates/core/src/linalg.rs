//! Dense complex matrices, Hermitian spectral calculus, the matrix exponential
//! and superoperators.
//!
//! Vectorization is column-stacking throughout: the entry `(i, j)` of a
//! `d x d` matrix sits at index `i + j * d` of its vector, so that
//! `vec(A X B) = (B^T ⊗ A) vec(X)`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use num_complex::Complex64;

use crate::error::{QsError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance used by every Hermiticity precondition.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Floor applied to density-matrix eigenvalues before taking logarithms.
pub const LOG_CLAMP: f64 = 1e-14;
/// Default bound on the 1-norm accepted by [`matrix_exponential`].
pub const EXPM_NORM_BOUND: f64 = 1e4;

/// Runs every faer kernel on the calling thread, so decompositions do not
/// depend on the size of the thread pool.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(Par::Seq);
}

/// Dense square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4e}{:+.4e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(QsError::DimensionMismatch { expected: 1, found: 0 });
        }
        if data.len() != dim * dim {
            return Err(QsError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QsError::DomainError("non-finite matrix entry".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; dim])
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (k, &v) in diag.iter().enumerate() {
            m[(k, k)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let dim = rows.len();
        let data: Vec<C64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|k| self[(k, k)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self[(k, k)]).sum()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim, "trace_product dimension mismatch");
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.data[i * d + j] * other.data[j * d + i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "hadamard dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }

    /// `‖A − A†‖_F / max(1, ‖A‖_F)`.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim;
        let mut dev = 0.0;
        for i in 0..d {
            for j in 0..d {
                dev += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        dev.sqrt() / self.frobenius_norm().max(1.0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `(A − A†)/2i`, Hermitian for any `A`.
    pub fn antihermitian_part_over_i(&self) -> Self {
        Self::from_fn(self.dim, |i, j| {
            (self[(i, j)] - self[(j, i)].conj()) / C64::new(0.0, 2.0)
        })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        faer::linalg::matmul::matmul(
            MatMut::from_row_major_slice_mut(&mut out, d, d),
            Accum::Replace,
            self.view(),
            other.view(),
            ONE,
            Par::Seq,
        );
        Self { dim: d, data: out }
    }

    /// Column-stacked vector of the entries.
    pub fn vectorize(&self) -> Vec<C64> {
        let d = self.dim;
        let mut v = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                v[i + j * d] = self.data[i * d + j];
            }
        }
        v
    }

    /// Inverse of [`ComplexMatrix::vectorize`].
    pub fn devectorize(dim: usize, v: &[C64]) -> Result<Self> {
        if v.len() != dim * dim {
            return Err(QsError::DimensionMismatch {
                expected: dim * dim,
                found: v.len(),
            });
        }
        Ok(Self::from_fn(dim, |i, j| v[i + j * dim]))
    }

    /// Expresses `self` in the basis given by the columns of `v`: `V† A V`.
    pub fn to_basis(&self, v: &Self) -> Self {
        v.adjoint().matmul(&self.matmul(v))
    }

    /// Inverse of [`ComplexMatrix::to_basis`]: `V A V†`.
    pub fn from_basis(&self, v: &Self) -> Self {
        v.matmul(&self.matmul(&v.adjoint()))
    }

    pub(crate) fn view(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.dim, self.dim)
    }

    pub(crate) fn to_faer(&self) -> Mat<C64> {
        Mat::from_fn(self.dim, self.dim, |i, j| self[(i, j)])
    }

    pub(crate) fn from_faer(m: MatRef<'_, C64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QsError::DomainError("non-finite matrix entry".into()));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_same_dim(a, b)?;
    Ok(&a.matmul(b) - &b.matmul(a))
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_same_dim(a, b)?;
    Ok(&a.matmul(b) + &b.matmul(a))
}

fn check_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(QsError::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

/// Eigenvalues in ascending order with the matching unitary eigenvector matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigenSystem {
    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
            return Err(QsError::DomainError(format!(
                "function is not finite at eigenvalue {}",
                self.eigenvalues[k]
            )));
        }
        Ok(self.reconstruct(&vals))
    }

    /// `V diag(vals) V†` for arbitrary real `vals`.
    pub fn reconstruct(&self, vals: &[f64]) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let d = v.dim();
        let scaled = ComplexMatrix::from_fn(d, |i, j| v[(i, j)] * vals[j]);
        scaled.matmul(&v.adjoint()).hermitian_part()
    }
}

pub fn hermitian_eigendecompose(a: &ComplexMatrix) -> Result<HermitianEigenSystem> {
    a.check_finite()?;
    let deviation = a.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(QsError::NonHermitianInput { deviation });
    }
    let h = a.hermitian_part();
    let evd = h
        .view()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| QsError::ConvergenceFailure(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let d = a.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| s[x].re.total_cmp(&s[y].re));
    let eigenvalues = order.iter().map(|&k| s[k].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(d, |i, j| u[(i, order[j])]);
    Ok(HermitianEigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigendecompose(a)?.eigenvalues)
}

pub fn matrix_function_hermitian(
    a: &ComplexMatrix,
    f: impl Fn(f64) -> f64,
) -> Result<ComplexMatrix> {
    hermitian_eigendecompose(a)?.map(f)
}

/// `ln A` with eigenvalues below `eps` raised to `eps`. The second value is
/// the number of clamped eigenvalues.
pub fn log_clamped(a: &ComplexMatrix, eps: f64) -> Result<(ComplexMatrix, usize)> {
    let es = hermitian_eigendecompose(a)?;
    let clamped = es.eigenvalues.iter().filter(|&&l| l < eps).count();
    let m = es.map(|l| l.max(eps).ln())?;
    Ok((m, clamped))
}

/// `exp(A)` with the default norm bound.
pub fn matrix_exponential(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    matrix_exponential_bounded(a, EXPM_NORM_BOUND)
}

/// Hermitian input goes through the eigendecomposition; everything else
/// through scaling and squaring with a diagonal Padé approximant
/// (Higham 2005).
pub fn matrix_exponential_bounded(a: &ComplexMatrix, bound: f64) -> Result<ComplexMatrix> {
    a.check_finite()?;
    let norm = a.norm_one();
    if norm > bound {
        return Err(QsError::Overflow { norm, bound });
    }
    if a.is_hermitian(HERMITIAN_TOL) {
        return matrix_function_hermitian(a, f64::exp);
    }
    pade_expm(a, norm)
}

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade_expm(a: &ComplexMatrix, norm: f64) -> Result<ComplexMatrix> {
    let d = a.dim();
    let id = ComplexMatrix::identity(d);
    for &(m, theta) in &THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let a2 = a.matmul(a);
            // even powers A^0, A^2, ..., A^(m-1)
            let mut pows = vec![id.clone()];
            for k in 1..=(m / 2) {
                let next = pows[k - 1].matmul(&a2);
                pows.push(next);
            }
            let mut u = ComplexMatrix::zeros(d);
            let mut v = ComplexMatrix::zeros(d);
            for (k, p) in pows.iter().enumerate() {
                u += &p.scale_real(b[2 * k + 1]);
                v += &p.scale_real(b[2 * k]);
            }
            let u = a.matmul(&u);
            return pade_solve(&u, &v);
        }
    }

    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as i32;
    let a = a.scale_real(0.5f64.powi(s));
    let b = &B13;
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let mut u_inner = a6.scale_real(b[13]);
    u_inner += &a4.scale_real(b[11]);
    u_inner += &a2.scale_real(b[9]);
    let mut u = a6.matmul(&u_inner);
    u += &a6.scale_real(b[7]);
    u += &a4.scale_real(b[5]);
    u += &a2.scale_real(b[3]);
    u += &id.scale_real(b[1]);
    let u = a.matmul(&u);
    let mut v_inner = a6.scale_real(b[12]);
    v_inner += &a4.scale_real(b[10]);
    v_inner += &a2.scale_real(b[8]);
    let mut v = a6.matmul(&v_inner);
    v += &a6.scale_real(b[6]);
    v += &a4.scale_real(b[4]);
    v += &a2.scale_real(b[2]);
    v += &id.scale_real(b[0]);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r.check_finite()?;
    Ok(r)
}

/// Solves `(V − U) R = V + U`.
fn pade_solve(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let p = (v + u).to_faer();
    let q = (v - u).to_faer();
    let r = q.partial_piv_lu().solve(&p);
    let out = ComplexMatrix::from_faer(r.as_ref());
    out.check_finite()
        .map_err(|_| QsError::ConvergenceFailure("singular Padé denominator".into()))?;
    Ok(out)
}

/// Linear map on `d x d` matrices stored as a `d² x d²` matrix acting on
/// column-stacked vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    d: usize,
    mat: ComplexMatrix,
}

impl Superoperator {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            mat: ComplexMatrix::zeros(d * d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d,
            mat: ComplexMatrix::identity(d * d),
        }
    }

    pub fn from_matrix(d: usize, mat: ComplexMatrix) -> Result<Self> {
        if mat.dim() != d * d {
            return Err(QsError::DimensionMismatch {
                expected: d * d,
                found: mat.dim(),
            });
        }
        Ok(Self { d, mat })
    }

    /// The map `X ↦ A X B`, i.e. `B^T ⊗ A`.
    pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        let mut s = Self::zeros(a.dim());
        s.add_sandwich(ONE, a, b);
        s
    }

    /// Adds `c · (X ↦ A X B)` in place.
    pub fn add_sandwich(&mut self, c: C64, a: &ComplexMatrix, b: &ComplexMatrix) {
        let d = self.d;
        assert!(a.dim() == d && b.dim() == d, "sandwich dimension mismatch");
        let n = d * d;
        for l in 0..d {
            for j in 0..d {
                let blj = b[(l, j)] * c;
                if blj == ZERO {
                    continue;
                }
                for k in 0..d {
                    let col = k + l * d;
                    for i in 0..d {
                        let aik = a[(i, k)];
                        if aik != ZERO {
                            self.mat.data[(i + j * d) * n + col] += blj * aik;
                        }
                    }
                }
            }
        }
    }

    /// Adds `c · (X ↦ [A, X])`.
    pub fn add_commutator(&mut self, c: C64, a: &ComplexMatrix) {
        let id = ComplexMatrix::identity(self.d);
        self.add_sandwich(c, a, &id);
        self.add_sandwich(-c, &id, a);
    }

    /// Adds `c · (X ↦ [A, [A, X]])`.
    pub fn add_double_commutator(&mut self, c: C64, a: &ComplexMatrix) {
        let id = ComplexMatrix::identity(self.d);
        let a2 = a.matmul(a);
        self.add_sandwich(c, &a2, &id);
        self.add_sandwich(c * -2.0, a, a);
        self.add_sandwich(c, &id, &a2);
    }

    pub fn op_dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.d * self.d;
        assert_eq!(v.len(), n, "superoperator applied to wrong length");
        let mut out = vec![ZERO; n];
        faer::linalg::matmul::matmul(
            MatMut::from_column_major_slice_mut(&mut out, n, 1),
            Accum::Replace,
            self.mat.view(),
            MatRef::from_column_major_slice(v, n, 1),
            ONE,
            Par::Seq,
        );
        out
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let out = self.apply_vec(&x.vectorize());
        ComplexMatrix::devectorize(self.d, &out).expect("length checked in apply_vec")
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            d: self.d,
            mat: self.mat.matmul(&other.mat),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            d: self.d,
            mat: self.mat.scale_real(c),
        }
    }

    /// `exp(self · t)`.
    pub fn exp(&self, t: f64) -> Result<Self> {
        Ok(Self {
            d: self.d,
            mat: matrix_exponential(&self.mat.scale_real(t))?,
        })
    }

    /// Largest entry of `vec(I)† L`, zero for trace-preserving generators.
    pub fn trace_defect(&self) -> f64 {
        let d = self.d;
        let n = d * d;
        (0..n)
            .map(|col| {
                (0..d)
                    .map(|k| self.mat.data[(k * (d + 1)) * n + col])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.frobenius_norm()
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        Superoperator {
            d: self.d,
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        Superoperator {
            d: self.d,
            mat: &self.mat - &rhs.mat,
        }
    }
}

/// `X ↦ A X`, equal to `I ⊗ A`.
pub fn left_mult_superop(a: &ComplexMatrix) -> Superoperator {
    Superoperator::sandwich(a, &ComplexMatrix::identity(a.dim()))
}

/// `X ↦ X B`, equal to `B^T ⊗ I`.
pub fn right_mult_superop(b: &ComplexMatrix) -> Superoperator {
    Superoperator::sandwich(&ComplexMatrix::identity(b.dim()), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        let diff = (a - b).max_abs();
        assert!(diff <= tol, "max diff {diff:e} > {tol:e}\n{a:?}\n{b:?}");
    }

    fn sample(d: usize, seed: u64) -> ComplexMatrix {
        // deterministic pseudo-random entries, no RNG crate needed here
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        ComplexMatrix::from_fn(d, |_, _| c(next(), next()))
    }

    #[test]
    fn eig_identity() {
        let es = hermitian_eigendecompose(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(es.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn eig_diagonal_sorted() {
        let es = hermitian_eigendecompose(&ComplexMatrix::from_real_diagonal(&[3.0, 1.0])).unwrap();
        assert_abs_diff_eq!(es.eigenvalues[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(es.eigenvalues[1], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(es.eigenvectors[(1, 0)].norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(es.eigenvectors[(0, 1)].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ZERO, ZERO]]).unwrap();
        assert!(matches!(
            hermitian_eigendecompose(&a),
            Err(QsError::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn eig_reconstruction_and_unitarity() {
        let x = sample(12, 3);
        let h = &x + &x.adjoint();
        let es = hermitian_eigendecompose(&h).unwrap();
        let back = es.reconstruct(&es.eigenvalues);
        assert!((&back - &h).frobenius_norm() <= 1e-12 * h.frobenius_norm());
        let v = &es.eigenvectors;
        assert_close(&v.adjoint().matmul(v), &ComplexMatrix::identity(12), 1e-12);
        assert!(es.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn matrix_function_exp_values() {
        let z = ComplexMatrix::zeros(3);
        assert_close(
            &matrix_function_hermitian(&z, f64::exp).unwrap(),
            &ComplexMatrix::identity(3),
            0.0,
        );
        let a = ComplexMatrix::from_real_diagonal(&[0.5, 1.5]);
        let e = matrix_function_hermitian(&a, |x| (-x).exp()).unwrap();
        assert_abs_diff_eq!(e[(0, 0)].re, 0.6065306597126334, epsilon = 1e-15);
        assert_abs_diff_eq!(e[(1, 1)].re, 0.22313016014842982, epsilon = 1e-15);
    }

    #[test]
    fn log_of_projector_is_clamped() {
        let p = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(
            matrix_function_hermitian(&p, f64::ln),
            Err(QsError::DomainError(_))
        ));
        let (l, n) = log_clamped(&p, LOG_CLAMP).unwrap();
        assert_eq!(n, 1);
        assert_abs_diff_eq!(l[(0, 0)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 1)].re, LOG_CLAMP.ln(), epsilon = 1e-12);
    }

    #[test]
    fn expm_zero_and_rotation() {
        assert_close(
            &matrix_exponential(&ComplexMatrix::zeros(4)).unwrap(),
            &ComplexMatrix::identity(4),
            0.0,
        );
        let th = std::f64::consts::FRAC_PI_2;
        let a = ComplexMatrix::from_rows(&[&[ZERO, c(-th, 0.0)], &[c(th, 0.0), ZERO]]).unwrap();
        let e = matrix_exponential(&a).unwrap();
        let want = ComplexMatrix::from_rows(&[&[ZERO, c(-1.0, 0.0)], &[ONE, ZERO]]).unwrap();
        assert_close(&e, &want, 1e-14);
    }

    #[test]
    fn expm_of_antihermitian_is_unitary() {
        let x = sample(8, 11);
        let h = &x + &x.adjoint();
        let u = matrix_exponential(&h.scale(c(0.0, -0.3))).unwrap();
        assert_close(&u.adjoint().matmul(&u), &ComplexMatrix::identity(8), 1e-10);
    }

    #[test]
    fn expm_inverse_pair_over_norms() {
        for (k, scale) in [0.001, 0.1, 0.8, 2.0, 5.0, 10.0].iter().enumerate() {
            let x = sample(6, 20 + k as u64);
            let a = x.scale_real(scale / x.norm_one());
            let p = matrix_exponential(&a).unwrap();
            let m = matrix_exponential(&a.scale_real(-1.0)).unwrap();
            let err = (&p.matmul(&m) - &ComplexMatrix::identity(6)).frobenius_norm();
            assert!(err <= 1e-10, "scale {scale}: {err:e}");
        }
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        // independent oracle: long Taylor series on a small-norm matrix
        let x = sample(5, 7);
        let a = x.scale_real(0.7 / x.norm_one());
        let mut term = ComplexMatrix::identity(5);
        let mut sum = term.clone();
        for k in 1..40 {
            term = term.matmul(&a).scale_real(1.0 / k as f64);
            sum += &term;
        }
        assert_close(&matrix_exponential(&a).unwrap(), &sum, 1e-14);
    }

    #[test]
    fn expm_hermitian_matches_spectral() {
        let x = sample(6, 5);
        let h = (&x + &x.adjoint()).scale_real(0.4);
        let spectral = matrix_function_hermitian(&h, f64::exp).unwrap();
        let pade = pade_expm(&h, h.norm_one()).unwrap();
        assert!((&spectral - &pade).frobenius_norm() <= 1e-10 * spectral.frobenius_norm());
    }

    #[test]
    fn expm_overflow_bound() {
        let a = ComplexMatrix::from_real_diagonal(&[2e4, 0.0]);
        assert!(matches!(matrix_exponential(&a), Err(QsError::Overflow { .. })));
    }

    #[test]
    fn commutators() {
        let a = sample(3, 1);
        assert_close(&commutator(&a, &a).unwrap(), &ComplexMatrix::zeros(3), 0.0);
        let b = ComplexMatrix::zeros(2);
        assert!(matches!(
            commutator(&a, &b),
            Err(QsError::DimensionMismatch { .. })
        ));
        let x = sample(4, 2);
        let y = sample(4, 9);
        let (h1, h2) = (&x + &x.adjoint(), &y + &y.adjoint());
        assert!(anticommutator(&h1, &h2).unwrap().is_hermitian(1e-14));
    }

    #[test]
    fn superoperator_identity_and_composition() {
        let id = ComplexMatrix::identity(3);
        assert_eq!(left_mult_superop(&id), Superoperator::identity(3));
        let (a, x, b) = (sample(2, 1), sample(2, 2), sample(2, 3));
        let composed = right_mult_superop(&b).compose(&left_mult_superop(&a));
        let direct = a.matmul(&x).matmul(&b);
        assert_close(&composed.apply(&x), &direct, 1e-13);
        assert_close(&Superoperator::sandwich(&a, &b).apply(&x), &direct, 1e-13);
    }

    #[test]
    fn superoperator_commutator_identity() {
        let (a, x) = (sample(3, 4), sample(3, 5));
        let s = &left_mult_superop(&a) - &right_mult_superop(&a);
        assert_close(&s.apply(&x), &commutator(&a, &x).unwrap(), 1e-14);
        let mut s2 = Superoperator::zeros(3);
        s2.add_commutator(ONE, &a);
        assert_close(&s2.apply(&x), &commutator(&a, &x).unwrap(), 1e-14);
        let mut s3 = Superoperator::zeros(3);
        s3.add_double_commutator(c(0.0, 2.0), &a);
        let want = commutator(&a, &commutator(&a, &x).unwrap()).unwrap().scale(c(0.0, 2.0));
        assert_close(&s3.apply(&x), &want, 1e-13);
    }

    #[test]
    fn vec_convention_is_column_stacking() {
        let x = ComplexMatrix::from_rows(&[&[c(1.0, 0.0), c(2.0, 0.0)], &[c(3.0, 0.0), c(4.0, 0.0)]])
            .unwrap();
        let v: Vec<f64> = x.vectorize().iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn trace_defect_of_commutator_is_zero() {
        let mut s = Superoperator::zeros(4);
        s.add_commutator(c(0.0, -1.0), &sample(4, 8));
        assert!(s.trace_defect() < 1e-15);
    }
}
