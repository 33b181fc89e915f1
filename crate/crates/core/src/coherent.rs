//! Coherent-state families and their invariant measures.
//!
//! A family is described by real amplitudes `r_j(theta)`, per-component phase
//! coefficient vectors `c_j` and a population measure `w(theta) dtheta`, so that
//!
//! ```text
//! |alpha(theta, phi)>_j = r_j(theta) exp(-i c_j . phi)
//! ```
//!
//! The sign convention `exp(-i c_j . phi)` is used everywhere. Only the
//! differences `c_j - c_k` are observable.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::DensityMatrix;
use crate::opkit::Operator;

pub type AmplitudeFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Default Gauss-Legendre nodes per population angle.
pub const DEFAULT_THETA_NODES: usize = 64;

#[derive(Clone)]
pub struct CoherentFamily {
    name: String,
    dim: usize,
    n_theta: usize,
    n_phases: usize,
    amplitude: AmplitudeFn,
    phase_coeffs: Vec<Vec<f64>>,
    theta_domain: Vec<(f64, f64)>,
    weight: WeightFn,
    norm_const: f64,
}

impl fmt::Debug for CoherentFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoherentFamily")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("n_theta", &self.n_theta)
            .field("n_phases", &self.n_phases)
            .field("phase_coeffs", &self.phase_coeffs)
            .field("theta_domain", &self.theta_domain)
            .field("norm_const", &self.norm_const)
            .finish()
    }
}

impl CoherentFamily {
    /// Assembles a family from its parts. The amplitude function must return
    /// `dim` values and `phase_coeffs` must hold `dim` vectors of length `n_phases`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        amplitude: AmplitudeFn,
        phase_coeffs: Vec<Vec<f64>>,
        theta_domain: Vec<(f64, f64)>,
        weight: WeightFn,
        norm_const: f64,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if phase_coeffs.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: phase_coeffs.len(),
            });
        }
        let n_phases = phase_coeffs[0].len();
        if let Some(bad) = phase_coeffs.iter().find(|c| c.len() != n_phases) {
            return Err(Error::DimensionMismatch {
                expected: n_phases,
                found: bad.len(),
            });
        }
        Ok(CoherentFamily {
            name: name.into(),
            dim,
            n_theta: theta_domain.len(),
            n_phases,
            amplitude,
            phase_coeffs,
            theta_domain,
            weight,
            norm_const,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phases(&self) -> usize {
        self.n_phases
    }

    pub fn phase_coeffs(&self) -> &[Vec<f64>] {
        &self.phase_coeffs
    }

    pub fn theta_domain(&self) -> &[(f64, f64)] {
        &self.theta_domain
    }

    /// Normalization constant `N` of the resolution of identity.
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// Uniform phase density `(1/2pi)^n_phases`.
    pub fn uniform_phase_density(&self) -> f64 {
        (2.0 * PI).powi(-(self.n_phases as i32))
    }

    pub fn amplitudes(&self, theta: &[f64]) -> Vec<f64> {
        (self.amplitude)(theta)
    }

    pub fn measure_weight(&self, theta: &[f64]) -> f64 {
        (self.weight)(theta)
    }

    /// `c_j - c_k` for 0-based component indices.
    pub fn phase_difference(&self, j: usize, k: usize) -> Vec<f64> {
        self.phase_coeffs[j]
            .iter()
            .zip(&self.phase_coeffs[k])
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Largest `|c_j - c_k|` component over all pairs.
    pub fn max_phase_difference(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            for k in 0..self.dim {
                for d in self.phase_difference(j, k) {
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }

    /// Smallest phase grid on which every trigonometric integral is exact.
    pub fn min_phase_grid(&self) -> usize {
        2 * self.max_phase_difference().ceil() as usize + 1
    }

    pub fn state(&self, theta: &[f64], phi: &[f64]) -> DVector<Complex64> {
        let r = self.amplitudes(theta);
        DVector::from_iterator(
            self.dim,
            r.iter().zip(&self.phase_coeffs).map(|(&rj, c)| {
                let angle: f64 = c.iter().zip(phi).map(|(cj, p)| cj * p).sum();
                Complex64::from_polar(rj, -angle)
            }),
        )
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        Ok(())
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coherence terms `(j, k)`, `j < k`, sharing one free-phase dependence.
///
/// Terms whose difference vectors agree up to an overall sign oscillate
/// identically in `phi`; `flipped[i]` records that pair `i` enters with the
/// opposite sign, i.e. through `conj(rho_jk)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGroup {
    /// Canonical difference vector (first nonzero component positive).
    pub difference: Vec<f64>,
    /// 0-based level pairs.
    pub pairs: Vec<(usize, usize)>,
    pub flipped: Vec<bool>,
}

impl PhaseGroup {
    pub fn is_constant(&self) -> bool {
        self.difference.iter().all(|&d| d == 0.0)
    }
}

/// Groups the pairs `j < k` of the given levels by canonical `c_j - c_k`.
/// Groups are ordered by their first pair.
pub fn phase_groups(coeffs: &[Vec<f64>]) -> Vec<PhaseGroup> {
    // half-integer coefficients are exact on the doubled lattice
    let key = |d: &[f64]| -> Vec<i64> { d.iter().map(|x| (2.0 * x).round() as i64).collect() };
    let mut groups: Vec<(Vec<i64>, PhaseGroup)> = Vec::new();
    for j in 0..coeffs.len() {
        for k in j + 1..coeffs.len() {
            let diff: Vec<f64> = coeffs[j].iter().zip(&coeffs[k]).map(|(a, b)| a - b).collect();
            let mut kd = key(&diff);
            let flip = kd.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0);
            if flip {
                kd.iter_mut().for_each(|x| *x = -*x);
            }
            let canonical: Vec<f64> = kd.iter().map(|&x| x as f64 / 2.0).collect();
            match groups.iter_mut().find(|(k2, _)| *k2 == kd) {
                Some((_, g)) => {
                    g.pairs.push((j, k));
                    g.flipped.push(flip);
                }
                None => groups.push((
                    kd,
                    PhaseGroup {
                        difference: canonical,
                        pairs: vec![(j, k)],
                        flipped: vec![flip],
                    },
                )),
            }
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// SU(2) coherent states of spin `j = (dim - 1)/2`, obtained by rotating the
/// top state `|j>`. One free phase; `theta in [0, pi]` with weight `sin(theta)`.
pub fn make_spin_family(dim: usize) -> Result<CoherentFamily> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let n = (dim - 1) as u64;
    let j = n as f64 / 2.0;
    let prefactors: Vec<f64> = (0..=n).map(|k| binomial(n, k).sqrt()).collect();
    let amplitude: AmplitudeFn = Arc::new(move |theta: &[f64]| {
        let (s, c) = (theta[0] / 2.0).sin_cos();
        prefactors
            .iter()
            .enumerate()
            .map(|(k, p)| p * c.powi((n as usize - k) as i32) * s.powi(k as i32))
            .collect()
    });
    let phase_coeffs = (0..dim).map(|k| vec![j - k as f64]).collect();
    CoherentFamily::new(
        format!("spin-{}", fmt_spin(dim)),
        dim,
        amplitude,
        phase_coeffs,
        vec![(0.0, PI)],
        Arc::new(|theta: &[f64]| theta[0].sin()),
        dim as f64 / (4.0 * PI),
    )
}

fn fmt_spin(dim: usize) -> String {
    if dim % 2 == 1 {
        format!("{}", (dim - 1) / 2)
    } else {
        format!("{}/2", dim - 1)
    }
}

/// Full SU(3) coherent states for a three-level system, with two free phases
/// and the Fubini-Study weight `sin^3 t1 cos t1 sin t2 cos t2` on `[0, pi/2]^2`.
pub fn make_su3_family() -> CoherentFamily {
    let amplitude: AmplitudeFn = Arc::new(|theta: &[f64]| {
        let (s1, c1) = theta[0].sin_cos();
        let (s2, c2) = theta[1].sin_cos();
        vec![c1, c2 * s1, s2 * s1]
    });
    let weight: WeightFn = Arc::new(|theta: &[f64]| {
        let (s1, c1) = theta[0].sin_cos();
        let (s2, c2) = theta[1].sin_cos();
        s1.powi(3) * c1 * s2 * c2
    });
    CoherentFamily::new(
        "su3",
        3,
        amplitude,
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![(0.0, PI / 2.0), (0.0, PI / 2.0)],
        weight,
        6.0 / (PI * PI),
    )
    .expect("static family is well formed")
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor-product Gauss-Legendre rule over the population angles plus a
/// uniform grid over each free phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    theta_nodes: usize,
    phase_points: usize,
    /// `(theta, weight * w(theta))` over the full product grid.
    theta_rule: Vec<(Vec<f64>, f64)>,
}

impl Quadrature {
    pub fn new(family: &CoherentFamily, theta_nodes: usize, phase_points: usize) -> Result<Self> {
        if theta_nodes == 0 {
            return Err(Error::Resolution {
                given: 0,
                required: 1,
            });
        }
        let required = family.min_phase_grid();
        if phase_points < required {
            return Err(Error::Resolution {
                given: phase_points,
                required,
            });
        }
        let (x, w) = gauss_legendre(theta_nodes);
        let axes: Vec<Vec<(f64, f64)>> = family
            .theta_domain
            .iter()
            .map(|&(a, b)| {
                let half = (b - a) / 2.0;
                x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| (a + half * (xi + 1.0), half * wi))
                    .collect()
            })
            .collect();
        let mut theta_rule = vec![(Vec::new(), 1.0)];
        for axis in &axes {
            theta_rule = theta_rule
                .into_iter()
                .flat_map(|(pt, wt)| {
                    axis.iter().map(move |&(t, tw)| {
                        let mut p = pt.clone();
                        p.push(t);
                        (p, wt * tw)
                    })
                })
                .collect();
        }
        for (pt, wt) in &mut theta_rule {
            *wt *= family.measure_weight(pt);
        }
        Ok(Quadrature {
            theta_nodes,
            phase_points,
            theta_rule,
        })
    }

    /// 64 nodes per angle and `4 dim` phase points.
    pub fn reference(family: &CoherentFamily) -> Self {
        let phases = (4 * family.dim()).max(family.min_phase_grid());
        Quadrature::new(family, DEFAULT_THETA_NODES, phases).expect("reference grid is valid")
    }

    pub fn theta_nodes(&self) -> usize {
        self.theta_nodes
    }

    pub fn phase_points(&self) -> usize {
        self.phase_points
    }

    /// Population-angle nodes with the measure weight folded in.
    pub fn theta_rule(&self) -> &[(Vec<f64>, f64)] {
        &self.theta_rule
    }

    /// Uniform phase grid `(phi, weight)` over `[0, 2pi)^n_phases`.
    pub fn phase_rule(&self, n_phases: usize) -> Vec<(Vec<f64>, f64)> {
        phase_grid(n_phases, self.phase_points)
            .into_iter()
            .map(|p| (p, (2.0 * PI / self.phase_points as f64).powi(n_phases as i32)))
            .collect()
    }

    /// `int dOmega_theta f(theta)`.
    pub fn integrate_theta<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.theta_rule.iter().map(|(t, w)| w * f(t)).sum()
    }
}

/// Row-major product grid of `points` uniform samples per phase.
pub fn phase_grid(n_phases: usize, points: usize) -> Vec<Vec<f64>> {
    let step = 2.0 * PI / points as f64;
    let mut grid = vec![Vec::new()];
    for _ in 0..n_phases {
        grid = grid
            .into_iter()
            .flat_map(|p| {
                (0..points).map(move |k| {
                    let mut q = p.clone();
                    q.push(k as f64 * step);
                    q
                })
            })
            .collect();
    }
    grid
}

fn expectation(family: &CoherentFamily, rho: &Operator, theta: &[f64], phi: &[f64]) -> f64 {
    let alpha = family.state(theta, phi);
    let val = (alpha.adjoint() * rho.matrix() * &alpha)[(0, 0)];
    family.norm_const * val.re
}

/// Husimi function `N <alpha|rho|alpha>`.
pub fn q_function(
    family: &CoherentFamily,
    rho: &DensityMatrix,
    theta: &[f64],
    phi: &[f64],
) -> Result<f64> {
    family.check_state(rho)?;
    Ok(expectation(family, rho.as_operator(), theta, phi))
}

/// Contribution of the coherences of `rho` to the Husimi function.
pub fn q_function_offdiag(
    family: &CoherentFamily,
    rho: &DensityMatrix,
    theta: &[f64],
    phi: &[f64],
) -> Result<f64> {
    family.check_state(rho)?;
    Ok(expectation(family, &rho.as_operator().off_diagonal(), theta, phi))
}

/// `max |N int dOmega |alpha><alpha| - I|` by quadrature.
pub fn verify_completeness(family: &CoherentFamily, quad: &Quadrature) -> f64 {
    let d = family.dim();
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    let phases = quad.phase_rule(family.n_phases());
    for (theta, tw) in quad.theta_rule() {
        for (phi, pw) in &phases {
            let a = family.state(theta, phi);
            acc += (&a * a.adjoint()) * Complex64::new(tw * pw, 0.0);
        }
    }
    acc *= Complex64::new(family.norm_const(), 0.0);
    acc -= DMatrix::identity(d, d);
    acc.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `dim / ((2pi)^n_phases int dOmega_theta)`: the normalization implied by
/// the trace of the resolution of identity.
pub fn norm_const_from_volume(family: &CoherentFamily, quad: &Quadrature) -> f64 {
    let vol = (2.0 * PI).powi(family.n_phases() as i32) * quad.integrate_theta(|_| 1.0);
    family.dim() as f64 / vol
}
