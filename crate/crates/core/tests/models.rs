mod common;

use std::f64::consts::PI;

use blockade_core::coherent::{norm_const_from_volume, q_function_offdiag, verify_completeness, Quadrature};
use blockade_core::experiments::{
    run_sweep, solve, spin1_model, spin32_model, su3_thermal_model, Axis, Measure, ModelKind, Scale,
    SweepSpec, ThermalParams,
};
use blockade_core::liealg::{analyze, ClosureOptions};
use blockade_core::lindblad::vectorize;
use blockade_core::syncmeas::{l1_coherence, sync_max, sync_measure, z_matrix};
use blockade_core::{
    build_liouvillian, evolve, make_spin_family, make_su3_family, DensityMatrix, HamiltonianTerm,
    LindbladModel, TermRole,
};

#[test]
fn spin1_liouvillian_matches_master_equation() {
    let model = spin1_model(0.0, 0.01, 0.1, 0.1).unwrap();
    let l = build_liouvillian(&model);
    let mut rng = common::rng(1);
    for _ in 0..20 {
        let rho = common::random_density(3, &mut rng).into_operator();
        let lhs = l.matrix() * vectorize(&rho);
        let rhs = vectorize(&model.rhs(&rho));
        assert!((lhs - rhs).camax() <= 1e-12);
    }
}

#[test]
fn driven_spin1_blockade_and_relaxation() {
    let on = solve(&spin1_model(0.0, 0.01, 0.1, 0.1).unwrap()).unwrap();
    assert!((on.rho.get(0, 1) + on.rho.get(1, 2)).norm() <= 1e-8);
    assert!(on.relative_residual() <= 1e-10);

    let undriven = spin1_model(0.0, 0.0, 0.1, 0.1).unwrap();
    let rho = evolve(&undriven, &DensityMatrix::maximally_mixed(3), 2000.0, 0.5).unwrap();
    let target = DensityMatrix::from_populations(&[0.0, 1.0, 0.0]).unwrap();
    assert!((rho.as_operator() - target.as_operator()).max_abs() <= 1e-6);
}

#[test]
fn trajectories_approach_steady_state() {
    let model = spin1_model(0.0, 0.01, 0.1, 0.1).unwrap();
    let ss = solve(&model).unwrap();
    let rho0 = DensityMatrix::maximally_mixed(3);
    let dist = |times: [f64; 3]| -> Vec<f64> {
        times
            .iter()
            .map(|t| {
                let rho = evolve(&model, &rho0, t / model.max_rate(), 0.1).unwrap();
                (rho.as_operator() - ss.rho.as_operator()).max_abs()
            })
            .collect()
    };
    let early = dist([5.0, 10.0, 20.0]);
    assert!(early[0] > early[1] && early[1] > early[2], "{early:?}");
    let late = dist([50.0, 100.0, 200.0]);
    assert!(late[0] >= late[1] - 1e-14 && late[1] >= late[2] - 1e-14 && late[2] <= 1e-12, "{late:?}");
}

#[test]
fn su3_family_constants() {
    let f = make_su3_family();
    let quad = Quadrature::reference(&f);
    assert!((f.norm_const() - 6.0 / (PI * PI)).abs() < 1e-15);
    assert!((norm_const_from_volume(&f, &quad) - f.norm_const()).abs() < 1e-12);
    let z = z_matrix(&f, &quad);
    for (j, k) in [(0, 1), (0, 2), (1, 2)] {
        assert!((z.get(j, k) - PI / 96.0).abs() < 1e-12);
    }
    let fine = Quadrature::new(&f, 48, 7).unwrap();
    assert!(verify_completeness(&f, &fine) <= 1e-8);
}

#[test]
fn spin_completeness_converges() {
    for d in 2..=6 {
        let f = make_spin_family(d).unwrap();
        let a = verify_completeness(&f, &Quadrature::new(&f, 64, 4 * d).unwrap());
        let b = verify_completeness(&f, &Quadrature::new(&f, 128, 4 * d).unwrap());
        assert!(a <= 1e-10 && (a - b).abs() < 1e-10);
        assert!((norm_const_from_volume(&f, &Quadrature::reference(&f)) - d as f64 / (4.0 * PI)).abs() < 1e-12);
    }
}

#[test]
fn blockade_offdiag_husimi_integrates_to_zero_at_every_phase() {
    let f = make_spin_family(3).unwrap();
    let quad = Quadrature::reference(&f);
    let rho = solve(&spin1_model(0.0, 0.01, 0.1, 0.1).unwrap()).unwrap().rho;
    let z = z_matrix(&f, &quad);
    for k in 0..16 {
        let phi = [2.0 * PI * k as f64 / 16.0];
        let integral: f64 = quad
            .theta_rule()
            .iter()
            .map(|(theta, w)| w * q_function_offdiag(&f, &rho, theta, &phi).unwrap())
            .sum();
        // only the second harmonic from rho_13 survives
        let second = 2.0 * f.norm_const() * z.get(0, 2) * (rho.get(0, 2) * num_complex::Complex64::from_polar(1.0, 2.0 * phi[0])).re;
        assert!((integral - second).abs() <= 1e-12);
        assert!((integral - sync_measure(&f, &z, &rho, &phi).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn spin1_measure_is_linear_in_drive() {
    let f = make_spin_family(3).unwrap();
    let z = z_matrix(&f, &Quadrature::reference(&f));
    let s = |eps: f64| {
        let rho = solve(&spin1_model(0.0, eps, 0.1, 0.05).unwrap()).unwrap().rho;
        sync_max(&f, &z, &rho, 12).unwrap().max_abs
    };
    let ratio = s(0.0005) / s(0.001);
    assert!((ratio - 0.5).abs() <= 0.025);
}

#[test]
fn spin32_v2_run_has_only_skip_coherences() {
    let rho = solve(&spin32_model(0.0, 0.0, 0.01, 0.1, 1.0, 0.1, 0.1).unwrap()).unwrap().rho;
    for (j, k) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
        assert!(rho.r(j, k) <= 1e-6);
    }
}

#[test]
fn thermal_drive_creates_visible_coherence() {
    let ss = solve(&ThermalParams::default().model().unwrap()).unwrap();
    let f = make_su3_family();
    let z = z_matrix(&f, &Quadrature::reference(&f));
    assert!(l1_coherence(&ss.rho) > 0.0);
    assert!(sync_max(&f, &z, &ss.rho, 12).unwrap().max_abs > 0.0);
}

#[test]
fn symmetry_verdicts_for_case_studies() {
    let spin1 = spin1_model(0.5, 0.01, 0.1, 0.1).unwrap();
    let f3 = make_spin_family(3).unwrap();
    let r = analyze(&spin1, Some(&f3), ClosureOptions::default()).unwrap();
    assert_eq!(r.blockade_feasible, vec![true]);

    let thermal = su3_thermal_model(0.2, 0.01, 0.1, 0.1, 2.0, 0.1).unwrap();
    let su3 = make_su3_family();
    let r = analyze(&thermal, Some(&su3), ClosureOptions::default()).unwrap();
    assert_eq!(r.blockade_feasible, vec![false]);
    assert_eq!(r.phase_feasible, vec![Some(false)]);

    // unequal gaps plus both couplings close to su(3)
    let mut terms: Vec<HamiltonianTerm> = thermal.hamiltonian_terms().to_vec();
    for t in &mut terms {
        t.role = TermRole::Bare;
    }
    terms.push(HamiltonianTerm {
        op: blockade_core::opkit::transition_op(3, 2, 2).unwrap(),
        coeff: 0.37,
        role: TermRole::Bare,
    });
    terms.push(HamiltonianTerm {
        op: &blockade_core::opkit::transition_op(3, 1, 2).unwrap() + &blockade_core::opkit::transition_op(3, 2, 1).unwrap(),
        coeff: 0.05,
        role: TermRole::Bare,
    });
    let chain = LindbladModel::new(3, terms, thermal.dissipators().to_vec()).unwrap();
    let r = analyze(&chain, Some(&su3), ClosureOptions::default()).unwrap();
    assert_eq!(r.closure_dims, vec![8]);
    assert_eq!(r.labels, vec!["full su(3)"]);
    assert_eq!(r.blockade_feasible, vec![false]);

    let with_drives = analyze(
        &spin1,
        None,
        ClosureOptions {
            include_drives: true,
            ..ClosureOptions::default()
        },
    )
    .unwrap();
    assert_eq!(with_drives.closure_dims, vec![3]);
}

#[test]
fn sweep_rows_are_deterministic_and_ordered() {
    let spec = SweepSpec {
        model: ModelKind::Spin1,
        axes: vec![
            Axis {
                name: "gamma_ratio".into(),
                min: 0.5,
                max: 2.0,
                count: 3,
                scale: Scale::Log,
            },
            Axis {
                name: "epsilon_rel".into(),
                min: 0.05,
                max: 0.1,
                count: 2,
                scale: Scale::Linear,
            },
        ],
        fixed: Default::default(),
        measures: vec![Measure::SMax, Measure::L1, Measure::Residuals],
        family: None,
        phase_grid: None,
        theta_nodes: None,
    };
    let a = run_sweep(&spec, 1).unwrap();
    let b = run_sweep(&spec, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 6);
    assert_eq!(a.rows[1].point, vec![0.5, 0.1]);
    assert_eq!(
        a.columns,
        vec!["gamma_ratio", "epsilon_rel", "s_max", "l1", "residual_1", "residual_2", "ss_residual", "trace_error", "min_eigenvalue"]
    );
    assert!(a.rows.iter().all(|r| r.status == "ok"));
}

#[test]
fn failed_points_are_recorded() {
    let spec = SweepSpec {
        model: ModelKind::Spin1,
        axes: vec![Axis {
            name: "gamma_d".into(),
            min: -0.1,
            max: 0.1,
            count: 2,
            scale: Scale::Linear,
        }],
        fixed: Default::default(),
        measures: vec![Measure::SMax],
        family: None,
        phase_grid: None,
        theta_nodes: None,
    };
    let t = run_sweep(&spec, 2).unwrap();
    assert_ne!(t.rows[0].status, "ok");
    assert!(t.rows[0].values.iter().all(|v| v.is_nan()));
    assert_eq!(t.rows[1].status, "ok");
}
