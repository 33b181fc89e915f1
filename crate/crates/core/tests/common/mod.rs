#![allow(dead_code)]

use blockade_core::{DensityMatrix, Operator};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(dim: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> Operator {
    let m = random_matrix(dim, rng);
    Operator::new(&m + m.adjoint()).unwrap()
}

/// `G G^dag / Tr`, full rank with probability one.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = random_matrix(dim, rng);
    let p = &g * g.adjoint();
    let tr = p.trace();
    DensityMatrix::new(Operator::new(p / tr).unwrap()).unwrap()
}

/// Block-diagonal state from normalized blocks and weights.
pub fn block_diagonal(blocks: &[(&DensityMatrix, f64)]) -> DensityMatrix {
    let n: usize = blocks.iter().map(|(b, _)| b.dim()).sum();
    let mut m = DMatrix::zeros(n, n);
    let mut off = 0;
    for (b, w) in blocks {
        let d = b.dim();
        m.view_mut((off, off), (d, d))
            .copy_from(&(b.as_operator().matrix() * Complex64::new(*w, 0.0)));
        off += d;
    }
    DensityMatrix::new(Operator::new(m).unwrap()).unwrap()
}
