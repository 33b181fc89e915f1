//! Symmetry classification of a model: level connectivity, dynamical Lie
//! algebra closure per block, and whether a synchronization blockade is
//! possible at all.

use num_complex::Complex64;
use serde::Serialize;

use crate::coherent::{phase_groups, CoherentFamily};
use crate::error::{Error, Result};
use crate::lindblad::{LindbladModel, TermRole};
use crate::opkit::{commutator, Operator, RealBasis, I};

const EDGE_TOL: f64 = 1e-12;
const GENERATOR_HERMITIAN_TOL: f64 = 1e-10;

/// Connected components of the level graph, with an edge `(j, k)` whenever
/// some generator has a nonzero `(j, k)` entry. Levels are 1-based and each
/// component is sorted; components are ordered by their smallest level.
pub fn connectivity_blocks(generators: &[Operator]) -> Result<Vec<Vec<usize>>> {
    let Some(first) = generators.first() else {
        return Ok(Vec::new());
    };
    let dim = first.dim();
    let mut parent: Vec<usize> = (0..dim).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
        for j in 0..dim {
            for k in 0..dim {
                if j != k && g.get(j, k).norm() > EDGE_TOL {
                    let (a, b) = (root(&mut parent, j), root(&mut parent, k));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; dim];
    for level in 0..dim {
        let r = root(&mut parent, level);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[index_of_root[r]].push(level + 1);
    }
    Ok(blocks)
}

/// Traceless part of the real Lie algebra generated by a Hermitian set.
#[derive(Debug, Clone)]
pub struct LieClosure {
    pub dim: usize,
    /// Frobenius-orthonormal traceless Hermitian basis.
    pub basis: Vec<Operator>,
}

impl LieClosure {
    pub fn is_abelian(&self) -> bool {
        self.basis.iter().enumerate().all(|(i, a)| {
            self.basis[..i]
                .iter()
                .all(|b| commutator(a, b).map(|c| c.max_abs() < 1e-10).unwrap_or(false))
        })
    }
}

fn traceless(op: &Operator) -> Operator {
    let n = op.dim();
    let shift = op.trace() / n as f64;
    op - &Operator::identity(n).scale(shift)
}

/// Closes a set of Hermitian generators under `(A, B) -> i[A, B]`.
///
/// The identity component is projected out first, so a generating set of
/// `su(N)` returns `N^2 - 1`.
pub fn lie_closure(generators: &[Operator], max_dim: usize) -> Result<LieClosure> {
    let Some(first) = generators.first() else {
        return Ok(LieClosure {
            dim: 0,
            basis: Vec::new(),
        });
    };
    let n = first.dim();
    let mut basis = RealBasis::new(n);
    let mut ops: Vec<Operator> = Vec::new();
    let push = |basis: &mut RealBasis, ops: &mut Vec<Operator>, op: &Operator| -> Result<()> {
        if basis.try_add(op) {
            ops.push(basis.operator(basis.len() - 1));
            if ops.len() > max_dim {
                return Err(Error::ClosureOverflow { max_dim });
            }
        }
        Ok(())
    };
    for g in generators {
        if g.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.dim(),
            });
        }
        let defect = g.hermiticity_defect();
        if defect > GENERATOR_HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        push(&mut basis, &mut ops, &traceless(&g.hermitian_part()))?;
    }
    let mut i = 1;
    while i < ops.len() {
        for j in 0..i {
            let c = commutator(&ops[i], &ops[j])?.scale(I);
            push(&mut basis, &mut ops, &c.hermitian_part())?;
        }
        i += 1;
    }
    Ok(LieClosure {
        dim: ops.len(),
        basis: ops,
    })
}

/// Counting of the free-phase dependences of the coherence terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseIndependence {
    /// Number of coherence pairs `j < k`.
    pub n_terms: usize,
    /// Distinct nonzero phase-difference vectors.
    pub n_independent: usize,
    /// Some phase dependence is shared by two or more terms, so their
    /// contributions can cancel.
    pub feasible: bool,
}

pub fn phase_independence(family: &CoherentFamily) -> PhaseIndependence {
    phase_independence_of(family.phase_coeffs())
}

fn phase_independence_of(coeffs: &[Vec<f64>]) -> PhaseIndependence {
    let groups = phase_groups(coeffs);
    PhaseIndependence {
        n_terms: groups.iter().map(|g| g.pairs.len()).sum(),
        n_independent: groups.iter().filter(|g| !g.is_constant()).count(),
        feasible: groups.iter().any(|g| g.pairs.len() > 1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureOptions {
    /// Count drive terms as part of the symmetry-defining Hamiltonian.
    pub include_drives: bool,
    /// Let jump operators couple levels when forming blocks.
    pub include_jumps: bool,
    /// Closure size limit per block; `None` means `N^2 - 1`.
    pub max_dim: Option<usize>,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions {
            include_drives: false,
            include_jumps: true,
            max_dim: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraReport {
    /// 1-based level sets.
    pub blocks: Vec<Vec<usize>>,
    pub block_dims: Vec<usize>,
    pub closure_dims: Vec<usize>,
    pub labels: Vec<String>,
    /// Closure smaller than the full `su(N_k)`.
    pub algebraic_feasible: Vec<bool>,
    /// Phase-counting verdict for the family restricted to each block.
    pub phase_feasible: Vec<Option<bool>>,
    pub blockade_feasible: Vec<bool>,
}

fn label(block_dim: usize, closure: &LieClosure) -> String {
    let full = block_dim * block_dim - 1;
    match closure.dim {
        _ if block_dim == 1 => "u(1)".to_string(),
        0 => "trivial".to_string(),
        d if d == full => format!("full su({block_dim})"),
        3 if !closure.is_abelian() => format!("su(2) in dim {block_dim}"),
        d if closure.is_abelian() => format!("abelian dim {d}"),
        d => format!("subalgebra dim {d}"),
    }
}

/// Blocks, closures and blockade verdicts for a model.
///
/// Blocks come from every Hamiltonian term and every jump operator with a
/// positive rate. Closures use the bare Hamiltonian terms (plus drives when
/// requested) restricted to each block. A block can host a blockade when its
/// closure is smaller than `su(N_k)` and, if a family is given, two coherence
/// terms share a phase dependence within the block.
pub fn analyze(
    model: &LindbladModel,
    family: Option<&CoherentFamily>,
    opts: ClosureOptions,
) -> Result<AlgebraReport> {
    let n = model.dim();
    if let Some(f) = family {
        if f.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.dim(),
            });
        }
    }
    let mut coupling: Vec<Operator> = model.hamiltonian_terms().iter().map(|t| t.op.clone()).collect();
    if opts.include_jumps {
        coupling.extend(
            model
                .dissipators()
                .iter()
                .filter(|d| d.rate > 0.0)
                .map(|d| d.jump.clone()),
        );
    }
    coupling.push(Operator::zeros(n));
    let blocks = connectivity_blocks(&coupling)?;

    let generators: Vec<Operator> = model
        .hamiltonian_terms()
        .iter()
        .filter(|t| opts.include_drives || t.role == TermRole::Bare)
        .map(|t| t.op.scale(Complex64::new(t.coeff, 0.0)))
        .collect();

    let mut report = AlgebraReport {
        blocks: Vec::new(),
        block_dims: Vec::new(),
        closure_dims: Vec::new(),
        labels: Vec::new(),
        algebraic_feasible: Vec::new(),
        phase_feasible: Vec::new(),
        blockade_feasible: Vec::new(),
    };
    for block in blocks {
        let levels: Vec<usize> = block.iter().map(|l| l - 1).collect();
        let d = levels.len();
        let full = d * d - 1;
        let restricted: Vec<Operator> = generators.iter().map(|g| g.restrict(&levels)).collect();
        let closure = lie_closure(&restricted, opts.max_dim.unwrap_or(full).max(full))?;
        let algebraic = closure.dim < full;
        let phase = family.map(|f| {
            let coeffs: Vec<Vec<f64>> = levels.iter().map(|&l| f.phase_coeffs()[l].clone()).collect();
            phase_independence_of(&coeffs).feasible
        });
        report.labels.push(label(d, &closure));
        report.closure_dims.push(closure.dim);
        report.block_dims.push(d);
        report.algebraic_feasible.push(algebraic);
        report.phase_feasible.push(phase);
        report.blockade_feasible.push(algebraic && phase.unwrap_or(true));
        report.blocks.push(block);
    }
    Ok(report)
}

/// Generators of a connected chain with distinct level gaps: `d - 1`
/// diagonal projectors with unequal weights and the `d - 1` real
/// nearest-neighbour couplings.
pub fn unequal_gap_chain(dim: usize) -> Result<Vec<Operator>> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut gens = Vec::with_capacity(2 * (dim - 1));
    for k in 1..dim {
        let diag: Vec<f64> = (0..dim)
            .map(|l| if l == k { 1.0 + 0.37 * k as f64 + 0.05 * (k * k) as f64 } else { 0.0 })
            .collect();
        gens.push(Operator::from_diagonal(&diag));
    }
    for k in 0..dim - 1 {
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        m[(k, k + 1)] = Complex64::new(1.0, 0.0);
        m[(k + 1, k)] = Complex64::new(1.0, 0.0);
        gens.push(Operator::new(m)?);
    }
    Ok(gens)
}

/// Embeds `op` on the given 0-based levels of a `dim`-level space.
pub fn embed(op: &Operator, levels: &[usize], dim: usize) -> Result<Operator> {
    if op.dim() != levels.len() {
        return Err(Error::DimensionMismatch {
            expected: levels.len(),
            found: op.dim(),
        });
    }
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for (r, &lr) in levels.iter().enumerate() {
        for (c, &lc) in levels.iter().enumerate() {
            if lr >= dim || lc >= dim {
                return Err(Error::IndexOutOfRange {
                    dim,
                    row: lr + 1,
                    col: lc + 1,
                });
            }
            m[(lr, lc)] = op.get(r, c);
        }
    }
    Operator::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{make_spin_family, make_su3_family};
    use crate::opkit::spin_operators;

    #[test]
    fn chain_closures_are_full() {
        for d in 2..=5 {
            let c = lie_closure(&unequal_gap_chain(d).unwrap(), d * d - 1).unwrap();
            assert_eq!(c.dim, d * d - 1);
        }
    }

    #[test]
    fn spin_pair_gives_su2() {
        let s = spin_operators(4).unwrap();
        let c = lie_closure(&[s.sz.clone(), s.sx.clone()], 15).unwrap();
        assert_eq!(c.dim, 3);
        assert!(!c.is_abelian());
        assert_eq!(label(4, &c), "su(2) in dim 4");
    }

    #[test]
    fn single_generator_is_abelian() {
        let s = spin_operators(2).unwrap();
        let c = lie_closure(&[s.sx], 3).unwrap();
        assert_eq!(c.dim, 1);
        assert!(c.is_abelian());
    }

    #[test]
    fn overflow_reported() {
        let gens = unequal_gap_chain(3).unwrap();
        assert_eq!(
            lie_closure(&gens, 5).unwrap_err(),
            Error::ClosureOverflow { max_dim: 5 }
        );
    }

    #[test]
    fn identity_is_not_counted() {
        let c = lie_closure(&[Operator::identity(3)], 8).unwrap();
        assert_eq!(c.dim, 0);
    }

    #[test]
    fn blocks_from_generators() {
        assert_eq!(connectivity_blocks(&[Operator::zeros(3)]).unwrap(), vec![vec![1], vec![2], vec![3]]);
        let sx = spin_operators(4).unwrap().sx;
        assert_eq!(connectivity_blocks(&[sx]).unwrap(), vec![vec![1, 2, 3, 4]]);
        let chain = unequal_gap_chain(7).unwrap();
        let levels: Vec<usize> = (1..8).collect();
        let embedded: Vec<Operator> = chain.iter().map(|g| embed(g, &levels, 8).unwrap()).collect();
        assert_eq!(connectivity_blocks(&embedded).unwrap(), vec![vec![1], (2..=8).collect()]);
    }

    #[test]
    fn phase_counts() {
        let p = phase_independence(&make_spin_family(3).unwrap());
        assert_eq!((p.n_terms, p.n_independent, p.feasible), (3, 2, true));
        let p = phase_independence(&make_su3_family());
        assert_eq!((p.n_terms, p.n_independent, p.feasible), (3, 3, false));
        let p = phase_independence(&make_spin_family(4).unwrap());
        assert_eq!((p.n_terms, p.n_independent, p.feasible), (6, 3, true));
    }
}
