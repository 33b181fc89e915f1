//! Phase-space and distance-based synchronization measures.
//!
//! Integrating the Husimi function over the population angles leaves
//!
//! ```text
//! S(phi) = 2 N sum_{j<k} z_jk R_jk cos((c_j - c_k).phi - chi_jk)
//!        = 2 N sum_{j<k} z_jk Re[rho_jk exp(i (c_j - c_k).phi)]
//! ```
//!
//! with `z_jk = int dOmega_theta r_j r_k`. [`sync_measure`] evaluates this sum,
//! [`sync_measure_direct`] integrates the Husimi function numerically and is
//! kept as an independent check.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::coherent::{phase_grid, phase_groups, q_function, CoherentFamily, PhaseGroup, Quadrature};
use crate::error::{Error, Result};
use crate::lindblad::DensityMatrix;
use crate::opkit::Operator;

/// Population-integrated amplitude overlaps `z_jk`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix {
    values: DMatrix<f64>,
    theta_nodes: usize,
}

impl ZMatrix {
    /// `z_jk` for 0-based indices.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[(j, k)]
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Gauss-Legendre nodes per angle used to build the matrix.
    pub fn theta_nodes(&self) -> usize {
        self.theta_nodes
    }
}

pub fn z_matrix(family: &CoherentFamily, quad: &Quadrature) -> ZMatrix {
    let d = family.dim();
    let mut values = DMatrix::zeros(d, d);
    for (theta, w) in quad.theta_rule() {
        let r = family.amplitudes(theta);
        for j in 0..d {
            for k in 0..d {
                values[(j, k)] += w * r[j] * r[k];
            }
        }
    }
    ZMatrix {
        values,
        theta_nodes: quad.theta_nodes(),
    }
}

/// Coherence terms `a exp(i d.phi)` whose real parts sum to `S(phi)`.
#[derive(Debug, Clone)]
struct Terms {
    n_phases: usize,
    list: Vec<(Vec<f64>, Complex64)>,
}

impl Terms {
    fn new(family: &CoherentFamily, z: &ZMatrix, rho: &DensityMatrix) -> Result<Self> {
        check_dims(family, z, rho)?;
        let pref = 2.0 * family.norm_const();
        let d = family.dim();
        let mut list = Vec::with_capacity(d * (d - 1) / 2);
        for j in 0..d {
            for k in j + 1..d {
                list.push((family.phase_difference(j, k), rho.get(j, k) * (pref * z.get(j, k))));
            }
        }
        Ok(Terms {
            n_phases: family.n_phases(),
            list,
        })
    }

    fn eval(&self, phi: &[f64]) -> f64 {
        self.list
            .iter()
            .map(|(d, a)| {
                let arg: f64 = d.iter().zip(phi).map(|(x, p)| x * p).sum();
                (a * Complex64::from_polar(1.0, arg)).re
            })
            .sum()
    }
}

fn check_dims(family: &CoherentFamily, z: &ZMatrix, rho: &DensityMatrix) -> Result<()> {
    for found in [z.dim(), rho.dim()] {
        if found != family.dim() {
            return Err(Error::DimensionMismatch {
                expected: family.dim(),
                found,
            });
        }
    }
    Ok(())
}

/// `S(phi)` from the coherence sum.
pub fn sync_measure(
    family: &CoherentFamily,
    z: &ZMatrix,
    rho: &DensityMatrix,
    phi: &[f64],
) -> Result<f64> {
    Ok(Terms::new(family, z, rho)?.eval(phi))
}

/// `int dOmega_theta Q(theta, phi) - (1/2pi)^n_phases` by direct quadrature.
pub fn sync_measure_direct(
    family: &CoherentFamily,
    rho: &DensityMatrix,
    phi: &[f64],
    quad: &Quadrature,
) -> Result<f64> {
    let mut total = 0.0;
    for (theta, w) in quad.theta_rule() {
        total += w * q_function(family, rho, theta, phi)?;
    }
    Ok(total - family.uniform_phase_density())
}

/// Extremum of `S` over the free phases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncResult {
    /// `S` at `argmax`.
    pub value: f64,
    /// `max |S(phi)|`.
    pub max_abs: f64,
    pub argmax: Vec<f64>,
    /// Uniform phase density subtracted in the measure.
    pub constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    Max,
    Min,
}

/// Best `(S, phi)` for the goal: grid scan, then coordinate-wise
/// golden-section refinement from the most promising grid points.
fn extremum(terms: &Terms, grid_size: usize, goal: Goal) -> (f64, Vec<f64>) {
    let sign = if goal == Goal::Max { 1.0 } else { -1.0 };
    let f = |p: &[f64]| sign * terms.eval(p);
    let n = terms.n_phases;
    if n == 0 {
        return (terms.eval(&[]), Vec::new());
    }
    let grid = phase_grid(n, grid_size);
    let values: Vec<f64> = grid.iter().map(|p| f(p)).collect();
    // stable sort keeps the lowest grid index first among ties
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let step = 2.0 * PI / grid_size as f64;

    let mut best = (values[order[0]], grid[order[0]].clone());
    for &start in order.iter().take(6) {
        let mut x = grid[start].clone();
        let mut fx = values[start];
        for _ in 0..60 {
            let before = fx;
            for axis in 0..n {
                let (xa, fa) = golden_max(
                    |t| {
                        let mut y = x.clone();
                        y[axis] = t;
                        f(&y)
                    },
                    x[axis] - step,
                    x[axis] + step,
                );
                if fa > fx {
                    x[axis] = xa;
                    fx = fa;
                }
            }
            if fx - before <= 1e-15 * fx.abs().max(1e-300) {
                break;
            }
        }
        if fx > best.0 {
            best = (fx, x);
        }
    }
    let phi = best.1.iter().map(|p| p.rem_euclid(2.0 * PI)).collect();
    (sign * best.0, phi)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-11 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

fn check_grid(family: &CoherentFamily, grid_size: usize) -> Result<()> {
    let required = family.min_phase_grid();
    if grid_size < required {
        return Err(Error::Resolution {
            given: grid_size,
            required,
        });
    }
    Ok(())
}

/// `max |S|` over the free phases.
///
/// The uniform grid is scanned first; since `S` is a trigonometric polynomial
/// the grid maximum at the minimum admissible resolution already lies near the
/// true one, and golden-section refinement then converges to ~1e-10 in phase.
pub fn sync_max(
    family: &CoherentFamily,
    z: &ZMatrix,
    rho: &DensityMatrix,
    phase_grid_size: usize,
) -> Result<SyncResult> {
    check_grid(family, phase_grid_size)?;
    let terms = Terms::new(family, z, rho)?;
    let (hi, arg_hi) = extremum(&terms, phase_grid_size, Goal::Max);
    let (lo, arg_lo) = extremum(&terms, phase_grid_size, Goal::Min);
    let (value, argmax) = if hi >= -lo { (hi, arg_hi) } else { (lo, arg_lo) };
    Ok(SyncResult {
        value,
        max_abs: value.abs(),
        argmax,
        constant: family.uniform_phase_density(),
    })
}

/// `(min S, max S)` over the free phases.
pub fn sync_range(
    family: &CoherentFamily,
    z: &ZMatrix,
    rho: &DensityMatrix,
    phase_grid_size: usize,
) -> Result<(f64, f64)> {
    check_grid(family, phase_grid_size)?;
    let terms = Terms::new(family, z, rho)?;
    Ok((
        extremum(&terms, phase_grid_size, Goal::Min).0,
        extremum(&terms, phase_grid_size, Goal::Max).0,
    ))
}

/// `sum_{j != k} |rho_jk|`.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let mut total = 0.0;
    for j in 0..d {
        for k in 0..d {
            if j != k {
                total += rho.r(j, k);
            }
        }
    }
    total
}

const ENTROPY_FLOOR: f64 = 1e-14;

/// von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of(&rho.eigenvalues())
}

fn entropy_of(p: &[f64]) -> f64 {
    p.iter()
        .map(|&x| {
            let x = x.max(0.0);
            -x * x.max(ENTROPY_FLOOR).ln()
        })
        .sum()
}

/// A distance to the nearest diagonal state and the minimizer.
#[derive(Debug, Clone)]
pub struct DiagonalDistance {
    pub value: f64,
    pub sigma: DensityMatrix,
}

/// `min_sigma S(rho || sigma)` over diagonal `sigma`, attained at the
/// dephased state, so the value is `S(diag rho) - S(rho)` (natural log).
pub fn rel_entropy_sync(rho: &DensityMatrix) -> DiagonalDistance {
    let sigma = rho.dephased();
    let value = (entropy_of(&rho.diagonal()) - von_neumann_entropy(rho)).max(0.0);
    DiagonalDistance { value, sigma }
}

/// `S(rho || sigma) = Tr rho log rho - Tr rho log sigma`, with the eigenvalue floor.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let eig = sigma.as_operator().matrix().clone().symmetric_eigen();
    let log_sigma = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| Complex64::new(x.max(ENTROPY_FLOOR).ln(), 0.0)))
        * eig.eigenvectors.adjoint();
    let cross = (rho.as_operator().matrix() * log_sigma).trace().re;
    -von_neumann_entropy(rho) - cross
}

/// Trace norm of a Hermitian operator.
pub fn trace_norm(op: &Operator) -> f64 {
    op.hermitian_part()
        .into_matrix()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|x| x.abs())
        .sum()
}

/// `min_sigma ||rho - sigma||_1` over diagonal `sigma`, by pairwise
/// coordinate descent on the probability simplex (tolerance 1e-8).
///
/// Slower than the other measures; no closed form is used.
pub fn trace_distance_sync(rho: &DensityMatrix) -> DiagonalDistance {
    let d = rho.dim();
    let target = rho.as_operator();
    let cost = |p: &[f64]| trace_norm(&(target - &Operator::from_diagonal(p)));
    let mut p = rho.diagonal();
    let mut value = cost(&p);
    for _ in 0..200 {
        let before = value;
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                // move mass t from b to a
                let (t, f) = golden_max(
                    |t| {
                        let mut q = p.clone();
                        q[a] += t;
                        q[b] -= t;
                        -cost(&q)
                    },
                    -p[a],
                    p[b],
                );
                if -f < value {
                    p[a] += t;
                    p[b] -= t;
                    value = -f;
                }
            }
        }
        if before - value < 1e-10 {
            break;
        }
    }
    let sigma = DensityMatrix::new(Operator::from_diagonal(&p))
        .unwrap_or_else(|_| rho.dephased());
    DiagonalDistance { value, sigma }
}

/// Residual of one group of coherence terms sharing a phase dependence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupResidual {
    pub difference: Vec<f64>,
    /// 1-based level pairs.
    pub pairs: Vec<(usize, usize)>,
    /// `|sum_group z_jk rho_jk|` (real part only for phase-independent groups).
    pub residual: f64,
}

/// Per-group blockade residuals. All residuals vanish iff `S(phi) = 0` for
/// every phase.
pub fn blockade_residual(
    family: &CoherentFamily,
    z: &ZMatrix,
    rho: &DensityMatrix,
) -> Result<Vec<GroupResidual>> {
    check_dims(family, z, rho)?;
    Ok(phase_groups(family.phase_coeffs())
        .into_iter()
        .map(|g| group_residual(&g, z, rho))
        .collect())
}

fn group_residual(g: &PhaseGroup, z: &ZMatrix, rho: &DensityMatrix) -> GroupResidual {
    let sum: Complex64 = g
        .pairs
        .iter()
        .zip(&g.flipped)
        .map(|(&(j, k), &flip)| {
            let r = rho.get(j, k);
            (if flip { r.conj() } else { r }) * z.get(j, k)
        })
        .sum();
    let residual = if g.is_constant() { sum.re.abs() } else { sum.norm() };
    GroupResidual {
        difference: g.difference.clone(),
        pairs: g.pairs.iter().map(|&(j, k)| (j + 1, k + 1)).collect(),
        residual,
    }
}

/// Gram matrix, over a uniform phase grid, of the functions
/// `cos(d_jk.phi)` and `sin(d_jk.phi)` for every pair `j < k`.
///
/// Full rank means the coherence terms are linearly independent, so `S`
/// vanishes identically only when every coherence does.
pub fn coherence_functional_gram(family: &CoherentFamily, grid_size: usize) -> Result<DMatrix<f64>> {
    check_grid(family, grid_size)?;
    let d = family.dim();
    let diffs: Vec<Vec<f64>> = (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .map(|(j, k)| family.phase_difference(j, k))
        .collect();
    let grid = phase_grid(family.n_phases(), grid_size);
    let samples: Vec<Vec<f64>> = grid
        .iter()
        .map(|phi| {
            diffs
                .iter()
                .flat_map(|dv| {
                    let arg: f64 = dv.iter().zip(phi).map(|(x, p)| x * p).sum();
                    [arg.cos(), arg.sin()]
                })
                .collect()
        })
        .collect();
    let m = 2 * diffs.len();
    let w = 1.0 / grid.len() as f64;
    Ok(DMatrix::from_fn(m, m, |a, b| {
        samples.iter().map(|s| s[a] * s[b]).sum::<f64>() * w
    }))
}

/// One block of a block-diagonal state.
#[derive(Debug, Clone, Copy)]
pub struct CompositeBlock<'a> {
    pub family: &'a CoherentFamily,
    pub z: &'a ZMatrix,
    /// Block renormalized to unit trace.
    pub rho: &'a DensityMatrix,
    /// Trace of the block in the full state.
    pub weight: f64,
}

fn check_weights(blocks: &[CompositeBlock<'_>]) -> Result<()> {
    let total: f64 = blocks.iter().map(|b| b.weight).sum();
    if (total - 1.0).abs() > 1e-10 || blocks.iter().any(|b| b.weight < 0.0) {
        return Err(Error::InvalidWeights(total));
    }
    Ok(())
}

/// `sum_k w_k S_k(phi_k)` with independent phases per block.
pub fn composite_sync(blocks: &[CompositeBlock<'_>], phases: &[Vec<f64>]) -> Result<f64> {
    check_weights(blocks)?;
    if phases.len() != blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: blocks.len(),
            found: phases.len(),
        });
    }
    blocks.iter().zip(phases).try_fold(0.0, |acc, (b, phi)| {
        Ok(acc + b.weight * sync_measure(b.family, b.z, b.rho, phi)?)
    })
}

/// Maximum of [`composite_sync`] over all block phases: the weighted sum of
/// the per-block maxima, since the blocks' phases are independent.
pub fn composite_max(blocks: &[CompositeBlock<'_>], phase_grid_size: usize) -> Result<f64> {
    check_weights(blocks)?;
    blocks.iter().try_fold(0.0, |acc, b| {
        let (_, hi) = sync_range(b.family, b.z, b.rho, phase_grid_size)?;
        Ok(acc + b.weight * hi)
    })
}
