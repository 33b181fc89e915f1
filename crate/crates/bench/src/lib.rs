//! Shared inputs for the benchmarks.

use blockade_core::experiments::{spin1_model, spin32_model, Axis, Measure, ModelKind, Scale, SweepSpec};
use blockade_core::liealg::unequal_gap_chain;
use blockade_core::{LindbladModel, Operator};

pub fn spin1_blockade() -> LindbladModel {
    spin1_model(0.0, 0.01, 0.1, 0.1).expect("valid parameters")
}

pub fn spin32_v2() -> LindbladModel {
    spin32_model(0.0, 0.0, 0.01, 0.1, 1.0, 0.3, 0.2).expect("valid parameters")
}

pub fn chain(dim: usize) -> Vec<Operator> {
    unequal_gap_chain(dim).expect("dim >= 2")
}

/// An 8 x 4 spin-1 sweep over the rate ratio and drive strength.
pub fn small_sweep() -> SweepSpec {
    SweepSpec {
        model: ModelKind::Spin1,
        axes: vec![
            Axis {
                name: "gamma_ratio".into(),
                min: 0.5,
                max: 2.0,
                count: 8,
                scale: Scale::Log,
            },
            Axis {
                name: "epsilon_rel".into(),
                min: 0.01,
                max: 0.2,
                count: 4,
                scale: Scale::Linear,
            },
        ],
        fixed: Default::default(),
        measures: vec![Measure::SMax, Measure::L1],
        family: None,
        phase_grid: None,
        theta_nodes: None,
    }
}
