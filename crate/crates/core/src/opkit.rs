//! Dense complex operators and the standard constructors built on them.
//!
//! Basis ordering is fixed project-wide: level 1 carries the largest `Sz`
//! eigenvalue, so a spin-j operator is written in the basis
//! `|j>, |j-1>, ..., |-j>`. Public level indices are 1-based, matching the
//! `sigma j k` notation used in model files.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used by [`Operator::is_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Residual norm below which a direction is treated as already spanned.
pub const SPAN_TOL: f64 = 1e-9;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// A dense complex square matrix.
#[derive(Clone, PartialEq)]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Operator(matrix))
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Operator::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = Complex64::new(d, 0.0);
        }
        Operator(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A^dag|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Operator(&self.0 * factor)
    }

    /// Hermitian part `(A + A^dag) / 2`.
    pub fn hermitian_part(&self) -> Operator {
        Operator((&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// Copy with the diagonal set to zero.
    pub fn off_diagonal(&self) -> Operator {
        let mut m = self.0.clone();
        for k in 0..self.dim() {
            m[(k, k)] = ZERO;
        }
        Operator(m)
    }

    /// Principal submatrix on the given 0-based levels.
    pub fn restrict(&self, levels: &[usize]) -> Operator {
        let n = levels.len();
        Operator(DMatrix::from_fn(n, n, |r, c| self.0[(levels[r], levels[c])]))
    }

    fn check_dims(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator{}", self.0)
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator(&self.0 * Complex64::new(rhs, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

/// Angular-momentum matrices for spin `j = (dim - 1) / 2`.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub splus: Operator,
    pub sminus: Operator,
}

pub fn spin_operators(dim: usize) -> Result<SpinOperators> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let j = (dim as f64 - 1.0) / 2.0;
    let m = |k: usize| j - k as f64;

    let sz = Operator::from_diagonal(&(0..dim).map(m).collect::<Vec<_>>());
    // S+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; level k-1 sits one step above level k.
    let mut splus = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        let mk = m(k);
        splus[(k - 1, k)] = Complex64::new((j * (j + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let splus = Operator(splus);
    let sminus = splus.adjoint();
    let sx = (&splus + &sminus).scale(Complex64::new(0.5, 0.0));
    let sy = (&splus - &sminus).scale(Complex64::new(0.0, -0.5));
    Ok(SpinOperators {
        sx,
        sy,
        sz,
        splus,
        sminus,
    })
}

/// `|j><k|` with 1-based level indices.
pub fn transition_op(dim: usize, j: usize, k: usize) -> Result<Operator> {
    if j == 0 || k == 0 || j > dim || k > dim {
        return Err(Error::IndexOutOfRange {
            dim,
            row: j,
            col: k,
        });
    }
    let mut m = DMatrix::zeros(dim, dim);
    m[(j - 1, k - 1)] = ONE;
    Ok(Operator(m))
}

pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.check_dims(b)?;
    Ok(Operator(&a.0 * &b.0 - &b.0 * &a.0))
}

pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.check_dims(b)?;
    Ok(Operator(&a.0 * &b.0 + &b.0 * &a.0))
}

/// `Tr(A^dag B)`.
pub fn frobenius_inner(a: &Operator, b: &Operator) -> Result<Complex64> {
    a.check_dims(b)?;
    Ok(a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Orthonormal (Frobenius) basis for the real span of a set of Hermitian
/// operators. The output length equals the rank of the span.
pub fn hermitian_orthonormalize(set: &[Operator]) -> Result<Vec<Operator>> {
    let Some(first) = set.first() else {
        return Ok(Vec::new());
    };
    let dim = first.dim();
    let mut basis = RealBasis::new(dim);
    for op in set {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: op.dim(),
            });
        }
        let defect = op.hermiticity_defect();
        if defect > 1e-10 {
            return Err(Error::NotHermitian(defect));
        }
        basis.try_add(op);
    }
    Ok(basis.operators())
}

/// Orthonormal set of Hermitian matrices stored as real vectors
/// `[Re a_11, Im a_11, Re a_12, ...]`, under which the Euclidean product
/// equals `Re Tr(A^dag B)`.
#[derive(Debug, Clone)]
pub(crate) struct RealBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl RealBasis {
    pub(crate) fn new(dim: usize) -> Self {
        RealBasis {
            dim,
            vectors: Vec::new(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.vectors.len()
    }

    fn vectorize(op: &Operator) -> Vec<f64> {
        op.0.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    /// Adds the normalized component of `op` orthogonal to the current span.
    /// Returns `false` when `op` is (numerically) already spanned.
    pub(crate) fn try_add(&mut self, op: &Operator) -> bool {
        let mut v = Self::vectorize(op);
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-12 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        // two Gram-Schmidt passes
        for _ in 0..2 {
            for b in &self.vectors {
                let p = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let residual = dot(&v, &v).sqrt();
        if residual < SPAN_TOL {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= residual);
        self.vectors.push(v);
        true
    }

    pub(crate) fn operator(&self, idx: usize) -> Operator {
        let v = &self.vectors[idx];
        let n = self.dim;
        // nalgebra iterates column-major; rebuild in the same order
        let data: Vec<Complex64> = v
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        Operator(DMatrix::from_column_slice(n, n, &data))
    }

    pub(crate) fn operators(&self) -> Vec<Operator> {
        (0..self.len()).map(|k| self.operator(k)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
