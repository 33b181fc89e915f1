//! Lindblad models, their Liouvillian superoperators, steady states and
//! fixed-step trajectories.
//!
//! Vectorization is column-stacking throughout: `vec(A X B) = (B^T (x) A) vec(X)`.
//! With that convention the generator of
//! `d rho/dt = -i[H, rho] + sum_k g_k D[O_k] rho` is
//!
//! ```text
//! L = -i (I (x) H - H^T (x) I)
//!     + sum_k g_k [ conj(O_k) (x) O_k - 1/2 I (x) O_k^dag O_k - 1/2 (O_k^dag O_k)^T (x) I ]
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::opkit::{Operator, I, ONE};

const MODEL_HERMITIAN_TOL: f64 = 1e-10;

/// Whether a Hamiltonian term belongs to the bare system or is an external drive.
///
/// Symmetry analysis only looks at bare terms unless drives are explicitly included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermRole {
    Bare,
    Drive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub op: Operator,
    pub coeff: f64,
    pub role: TermRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dissipator {
    pub jump: Operator,
    pub rate: f64,
}

/// Hamiltonian terms plus rated jump operators on a `dim`-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    dim: usize,
    hamiltonian: Vec<HamiltonianTerm>,
    dissipators: Vec<Dissipator>,
}

impl LindbladModel {
    pub fn new(
        dim: usize,
        hamiltonian: Vec<HamiltonianTerm>,
        dissipators: Vec<Dissipator>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        for term in &hamiltonian {
            if term.op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: term.op.dim(),
                });
            }
            let defect = term.op.hermiticity_defect();
            if defect > MODEL_HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
            if !term.coeff.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "coeff",
                    value: term.coeff,
                    reason: "must be finite",
                });
            }
        }
        for (index, d) in dissipators.iter().enumerate() {
            if d.jump.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: d.jump.dim(),
                });
            }
            if !(d.rate >= 0.0) || !d.rate.is_finite() {
                return Err(Error::NegativeRate {
                    index,
                    rate: d.rate,
                });
            }
        }
        Ok(LindbladModel {
            dim,
            hamiltonian,
            dissipators,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian_terms(&self) -> &[HamiltonianTerm] {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    /// Total Hamiltonian `sum_k coeff_k op_k`.
    pub fn hamiltonian(&self) -> Operator {
        self.hamiltonian
            .iter()
            .fold(Operator::zeros(self.dim), |acc, t| &acc + &(&t.op * t.coeff))
    }

    /// Right-hand side of the master equation evaluated by direct matrix products.
    pub fn rhs(&self, rho: &Operator) -> Operator {
        let h = self.hamiltonian();
        let mut out = (&(&h * rho) - &(rho * &h)).scale(-I);
        for d in &self.dissipators {
            let o = &d.jump;
            let od = o.adjoint();
            let odo = &od * o;
            let jump = &(o * rho) * &od;
            let anti = &(&odo * rho) + &(rho * &odo);
            let term = &jump - &(&anti * 0.5);
            out = &out + &(&term * d.rate);
        }
        out
    }

    /// Largest dissipation rate, used to set natural time scales.
    pub fn max_rate(&self) -> f64 {
        self.dissipators.iter().map(|d| d.rate).fold(0.0, f64::max)
    }
}

/// Column-stacked vectorization.
pub fn vectorize(op: &Operator) -> DVector<Complex64> {
    DVector::from_column_slice(op.matrix().as_slice())
}

pub fn unvectorize(v: &DVector<Complex64>, dim: usize) -> Operator {
    Operator::new(DMatrix::from_column_slice(dim, dim, v.as_slice()))
        .expect("vector length is dim^2")
}

/// A `dim^2 x dim^2` generator acting on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    dim: usize,
    matrix: DMatrix<Complex64>,
}

impl Liouvillian {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        if matrix.ncols() != n || dim * dim != n || dim == 0 {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        Ok(Liouvillian { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }

    /// Vectorized adjoint: the superoperator `X -> sum_k B_k^dag X A_k^dag`
    /// adjoint under the Hilbert-Schmidt product, i.e. the conjugate transpose.
    pub fn adjoint(&self) -> Liouvillian {
        Liouvillian {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
        }
    }
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

pub fn build_liouvillian(model: &LindbladModel) -> Liouvillian {
    let d = model.dim();
    let id: DMatrix<Complex64> = DMatrix::identity(d, d);
    let h = model.hamiltonian().into_matrix();
    let mut l = (kron(&id, &h) - kron(&h.transpose(), &id)) * (-I);
    for diss in model.dissipators() {
        if diss.rate == 0.0 {
            continue;
        }
        let o = diss.jump.matrix();
        let odo = o.adjoint() * o;
        let half = Complex64::new(0.5, 0.0);
        let term = kron(&o.map(|z| z.conj()), o)
            - kron(&id, &odo) * half
            - kron(&odo.transpose(), &id) * half;
        l += term * Complex64::new(diss.rate, 0.0);
    }
    Liouvillian { dim: d, matrix: l }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const EIGEN_FLOOR: f64 = -1e-9;

    pub fn new(op: Operator) -> Result<Self> {
        let defect = op.hermiticity_defect();
        if defect > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {:.12} differs from 1",
                tr.re
            )));
        }
        let state = DensityMatrix(op.hermitian_part());
        let min = state.min_eigenvalue();
        if min < Self::EIGEN_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(state)
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        DensityMatrix::new(Operator::from_diagonal(p))
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(Operator::from_diagonal(&vec![1.0 / dim as f64; dim]))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    /// Entry `rho_jk` with 0-based indices.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.0.get(j, k)
    }

    /// Modulus `R_jk = |rho_jk|`.
    pub fn r(&self, j: usize, k: usize) -> f64 {
        self.get(j, k).norm()
    }

    /// Phase `chi_jk` with `rho_jk = R_jk exp(-i chi_jk)`.
    pub fn chi(&self, j: usize, k: usize) -> f64 {
        -self.get(j, k).arg()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        (self.0.matrix() * self.0.matrix()).trace().re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.get(k, k).re).collect()
    }

    /// The state with all coherences removed.
    pub fn dephased(&self) -> DensityMatrix {
        DensityMatrix(Operator::from_diagonal(&self.diagonal()))
    }

    /// Principal block on the given 0-based levels together with its trace.
    /// The block is renormalized to unit trace when the trace is nonzero.
    pub fn block(&self, levels: &[usize]) -> Result<(DensityMatrix, f64)> {
        let sub = self.0.restrict(levels);
        let weight = sub.trace().re;
        if weight <= 1e-15 {
            return Ok((DensityMatrix::maximally_mixed(levels.len()), 0.0));
        }
        Ok((DensityMatrix::new(&sub * (1.0 / weight))?, weight))
    }
}

/// Knobs for [`steady_state_with`].
#[derive(Debug, Clone, Copy)]
pub struct SteadyStateOptions {
    /// Second-smallest over largest singular value below which the null space
    /// is treated as degenerate.
    pub degeneracy_ratio: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        SteadyStateOptions {
            degeneracy_ratio: 1e-8,
        }
    }
}

/// A steady state with solver diagnostics.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `||L vec(rho)||`.
    pub residual: f64,
    /// Largest singular value of `L`.
    pub norm: f64,
    pub smallest_singular: f64,
    pub second_singular: f64,
}

impl SteadyState {
    pub fn relative_residual(&self) -> f64 {
        if self.norm == 0.0 {
            self.residual
        } else {
            self.residual / self.norm
        }
    }
}

pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    steady_state_with(l, SteadyStateOptions::default())
}

/// Null vector of `L` from a full singular-value decomposition.
pub fn steady_state_with(l: &Liouvillian, opts: SteadyStateOptions) -> Result<SteadyState> {
    let d = l.dim();
    let svd = l.matrix.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sigma = |k: usize| svd.singular_values[order[k]];
    let norm = sigma(order.len() - 1);
    let smallest = sigma(0);
    let second = if order.len() > 1 { sigma(1) } else { norm };
    let threshold = opts.degeneracy_ratio * norm;
    if second < threshold {
        return Err(Error::DegenerateSteadyState { second, threshold });
    }

    let null: DVector<Complex64> = v_t.row(order[0]).adjoint();
    let raw = unvectorize(&null, d);
    let tr = raw.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::TracelessNullVector(tr.norm()));
    }
    // remove the arbitrary phase before Hermitizing, then fix the trace
    let rho = raw.scale(tr.conj() / tr.norm()).hermitian_part();
    let rho = &rho * (1.0 / rho.trace().re);
    let residual = (&l.matrix * vectorize(&rho)).norm();
    Ok(SteadyState {
        rho: DensityMatrix::new(rho)?,
        residual,
        norm,
        smallest_singular: smallest,
        second_singular: second,
    })
}

/// Fixed-step classical Runge-Kutta integration of the master equation.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be positive",
        });
    }
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_final",
            value: t_final,
            reason: "must be nonnegative",
        });
    }
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    if t_final == 0.0 {
        return Ok(rho0.clone());
    }
    let l = build_liouvillian(model);
    let m = &l.matrix;
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let h = t_final / steps as f64;
    let hc = Complex64::new(h, 0.0);
    let half = Complex64::new(h / 2.0, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let mut v = vectorize(rho0.as_operator());
    for step in 0..steps {
        let k1 = m * &v;
        let k2 = m * (&v + &k1 * half);
        let k3 = m * (&v + &k2 * half);
        let k4 = m * (&v + &k3 * hc);
        v += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * sixth;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Instability {
                t: (step + 1) as f64 * h,
                dt,
            });
        }
    }
    DensityMatrix::new(unvectorize(&v, model.dim()))
}
