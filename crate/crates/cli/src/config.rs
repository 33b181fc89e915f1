//! JSON model configuration.

use blockade_core::coherent::CoherentFamily;
use blockade_core::experiments::{sx2_operator, FamilyKind};
use blockade_core::liealg::embed;
use blockade_core::opkit::{spin_operators, transition_op};
use blockade_core::{Dissipator, HamiltonianTerm, LindbladModel, Operator, TermRole};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// An operator given by name, as a product of names, embedded on a subset of
/// levels, or as an explicit matrix of `[re, im]` pairs (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OpSpec {
    Named(String),
    Product(Vec<String>),
    Embedded(EmbeddedOp),
    Matrix(MatrixOp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddedOp {
    pub embed: Box<OpSpec>,
    /// 1-based target levels.
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixOp {
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub op: OpSpec,
    pub coeff: f64,
    #[serde(default = "bare")]
    pub role: TermRole,
}

fn bare() -> TermRole {
    TermRole::Bare
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipatorConfig {
    pub op: OpSpec,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    #[serde(default)]
    pub hamiltonian: Vec<TermConfig>,
    #[serde(default)]
    pub dissipators: Vec<DissipatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn named(name: &str, dim: usize) -> Result<Operator, CliError> {
    let words: Vec<&str> = name.split_whitespace().collect();
    let index = |w: &str| -> Result<usize, CliError> {
        w.parse().map_err(|_| input(format!("bad level index {w:?} in operator {name:?}")))
    };
    let op = match words.as_slice() {
        ["Sx"] | ["Sy"] | ["Sz"] | ["Splus"] | ["Sminus"] => {
            let s = spin_operators(dim)?;
            match words[0] {
                "Sx" => s.sx,
                "Sy" => s.sy,
                "Sz" => s.sz,
                "Splus" => s.splus,
                _ => s.sminus,
            }
        }
        ["Sx2"] => sx2_operator(dim, 1.0)?,
        ["Sx2_resonant"] => sx2_operator(dim, 0.0)?,
        ["I"] => Operator::identity(dim),
        ["sigma", j, k] => transition_op(dim, index(j)?, index(k)?)?,
        ["sigma_x", j, k] => {
            let (j, k) = (index(j)?, index(k)?);
            &transition_op(dim, j, k)? + &transition_op(dim, k, j)?
        }
        ["sigma_y", j, k] => {
            let (j, k) = (index(j)?, index(k)?);
            let i = Complex64::new(0.0, 1.0);
            &transition_op(dim, j, k)?.scale(-i) + &transition_op(dim, k, j)?.scale(i)
        }
        _ => return Err(input(format!("unknown operator {name:?}"))),
    };
    Ok(op)
}

impl OpSpec {
    pub fn build(&self, dim: usize) -> Result<Operator, CliError> {
        match self {
            OpSpec::Named(name) => named(name, dim),
            OpSpec::Product(names) => {
                if names.is_empty() {
                    return Err(input("empty operator product"));
                }
                names.iter().try_fold(Operator::identity(dim), |acc, n| Ok(&acc * &named(n, dim)?))
            }
            OpSpec::Embedded(e) => {
                if e.levels.iter().any(|&l| l == 0 || l > dim) {
                    return Err(input(format!("embedding levels {:?} outside 1..={dim}", e.levels)));
                }
                let inner = e.embed.build(e.levels.len())?;
                let levels: Vec<usize> = e.levels.iter().map(|l| l - 1).collect();
                Ok(embed(&inner, &levels, dim)?)
            }
            OpSpec::Matrix(m) => {
                if m.matrix.len() != dim || m.matrix.iter().any(|r| r.len() != dim) {
                    return Err(input(format!("inline matrix must be {dim}x{dim}")));
                }
                let data = DMatrix::from_fn(dim, dim, |r, c| {
                    let [re, im] = m.matrix[r][c];
                    Complex64::new(re, im)
                });
                Ok(Operator::new(data)?)
            }
        }
    }
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| input(format!("invalid model config: {e}")))
    }

    pub fn model(&self) -> Result<LindbladModel, CliError> {
        let terms = self
            .hamiltonian
            .iter()
            .map(|t| {
                Ok(HamiltonianTerm {
                    op: t.op.build(self.dim)?,
                    coeff: t.coeff,
                    role: t.role,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let dissipators = self
            .dissipators
            .iter()
            .map(|d| {
                Ok(Dissipator {
                    jump: d.op.build(self.dim)?,
                    rate: d.rate,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(LindbladModel::new(self.dim, terms, dissipators)?)
    }

    pub fn family(&self) -> Result<CoherentFamily, CliError> {
        Ok(self.family.unwrap_or(FamilyKind::Spin).build(self.dim)?)
    }
}
