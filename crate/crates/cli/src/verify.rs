//! End-to-end self checks run by `blockade verify`.

use std::f64::consts::PI;

use blockade_core::coherent::{verify_completeness, Quadrature};
use blockade_core::experiments::{solve, spin1_model};
use blockade_core::liealg::{lie_closure, unequal_gap_chain};
use blockade_core::opkit::spin_operators;
use blockade_core::syncmeas::{l1_coherence, sync_max, sync_measure, sync_measure_direct, z_matrix};
use blockade_core::{make_spin_family, make_su3_family, CoherentFamily, DensityMatrix, Operator};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::CliResult;

pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// `tolerance` is an upper bound.
    pub upper: bool,
    pub note: String,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
            upper: true,
            note: String::new(),
        }
    }

    fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            pass: value >= tolerance,
            upper: false,
            ..Check::at_most(name, value, tolerance)
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn line(&self) -> String {
        let cmp = if self.upper { "<=" } else { ">=" };
        let mut s = format!(
            "{} {}: {:.3e} ({cmp} {:.0e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        );
        if !self.note.is_empty() {
            s.push_str(" ; ");
            s.push_str(&self.note);
        }
        s
    }
}

fn families() -> Vec<CoherentFamily> {
    let mut f: Vec<_> = (2..=6).map(|d| make_spin_family(d).expect("dim >= 2")).collect();
    f.push(make_su3_family());
    f
}

/// A fixed, well-spread test state: `A A^dag / tr` with trigonometric entries.
fn test_state(dim: usize, seed: usize) -> DensityMatrix {
    let s = seed as f64;
    let a = DMatrix::from_fn(dim, dim, |j, k| {
        let (j, k) = (j as f64, k as f64);
        Complex64::new((1.7 * j + 2.3 * k + 0.9 * s).sin(), (0.6 * j - 1.1 * k + 1.3 * s).cos())
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(Operator::new(m / tr).expect("square")).expect("positive by construction")
}

fn z_closed_forms() -> Vec<Check> {
    let two_n_z = |f: &CoherentFamily, pairs: &[(usize, usize)]| -> Vec<f64> {
        let z = z_matrix(f, &Quadrature::reference(f));
        pairs.iter().map(|&(j, k)| 2.0 * f.norm_const() * z.get(j - 1, k - 1)).collect()
    };
    let s3 = 3f64.sqrt();
    let spin1 = two_n_z(&make_spin_family(3).expect("dim 3"), &[(1, 2), (2, 3)]);
    let spin1_err = spin1.iter().map(|v| (v - 3.0 / (8.0 * 2f64.sqrt())).abs()).fold(0.0, f64::max);

    let expected = [5.0 * s3 * PI / 64.0, 9.0 * PI / 64.0, 5.0 * s3 * PI / 64.0, s3 / 6.0, s3 / 6.0, 3.0 * PI / 64.0];
    let pairs = [(1, 2), (2, 3), (3, 4), (1, 3), (2, 4), (1, 4)];
    let spin32_err = two_n_z(&make_spin_family(4).expect("dim 4"), &pairs)
        .iter()
        .zip(expected)
        .map(|(v, e)| (v - 2.0 / PI * e).abs())
        .fold(0.0, f64::max);

    let su3_err = two_n_z(&make_su3_family(), &[(1, 2), (1, 3), (2, 3)])
        .iter()
        .map(|v| (v - 1.0 / (8.0 * PI)).abs())
        .fold(0.0, f64::max);

    vec![
        Check::at_most("z-matrix spin-1 |2Nz - 3/(8 sqrt 2)|", spin1_err, 1e-10),
        Check::at_most("z-matrix spin-3/2 max |2Nz - closed form|", spin32_err, 1e-10),
        Check::at_most("z-matrix su(3) max |2Nz - 1/(8 pi)|", su3_err, 1e-10),
    ]
}

fn completeness() -> Vec<Check> {
    families()
        .iter()
        .map(|f| {
            Check::at_most(
                format!("completeness {}", f.name()),
                verify_completeness(f, &Quadrature::reference(f)),
                1e-8,
            )
        })
        .collect()
}

fn oracle() -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for f in [make_spin_family(3)?, make_spin_family(4)?, make_su3_family()] {
        let quad = Quadrature::reference(&f);
        let z = z_matrix(&f, &quad);
        let mut worst: f64 = 0.0;
        for seed in 0..10 {
            let rho = test_state(f.dim(), seed);
            let phi: Vec<f64> = (0..f.n_phases())
                .map(|i| (0.37 + 1.91 * seed as f64 + 0.73 * i as f64).rem_euclid(2.0 * PI))
                .collect();
            let a = sync_measure(&f, &z, &rho, &phi)?;
            let b = sync_measure_direct(&f, &rho, &phi, &quad)?;
            worst = worst.max((a - b).abs());
        }
        out.push(Check::at_most(format!("oracle {} |S - S_direct|", f.name()), worst, 1e-10));
    }
    Ok(out)
}

fn closures() -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for d in 2..=6 {
        let dim = lie_closure(&unequal_gap_chain(d)?, d * d - 1)?.dim;
        out.push(Check::at_most(
            format!("closure unequal-gap chain d={d} |dim - (d^2-1)|"),
            (dim as f64 - (d * d - 1) as f64).abs(),
            0.0,
        ));
    }
    let s = spin_operators(4)?;
    let dim = lie_closure(&[s.sz, s.sx], 15)?.dim;
    out.push(Check::at_most("closure {Sz, Sx} in dim 4 |dim - 3|", (dim as f64 - 3.0).abs(), 0.0));
    Ok(out)
}

fn spin1_blockade() -> CliResult<Vec<Check>> {
    let family = make_spin_family(3)?;
    let z = z_matrix(&family, &Quadrature::reference(&family));
    let on = solve(&spin1_model(0.0, 0.01, 0.1, 0.1)?)?;
    let off = solve(&spin1_model(0.0, 0.01, 0.1, 0.05)?)?;
    let s_on = sync_max(&family, &z, &on.rho, 12)?.max_abs;
    let s_off = sync_max(&family, &z, &off.rho, 12)?.max_abs;
    let mut out = vec![
        Check::at_most("spin-1 blockade |rho12 + rho23|", (on.rho.get(0, 1) + on.rho.get(1, 2)).norm(), 1e-9)
            .with_note(format!("S_max = {s_on:.3e} from the second harmonic")),
        Check::at_least("spin-1 blockade l1 coherence", l1_coherence(&on.rho), 1e-4),
        Check::at_least("spin-1 off blockade S_max (gamma_d = 0.05)", s_off, 1e-6),
    ];
    for (label, ss) in [("on", &on), ("off", &off)] {
        out.push(Check::at_most(format!("steady state {label} relative residual"), ss.relative_residual(), 1e-10));
        out.push(Check::at_most(
            format!("steady state {label} trace error"),
            (ss.rho.as_operator().trace() - Complex64::new(1.0, 0.0)).norm(),
            1e-10,
        ));
        out.push(Check::at_least(format!("steady state {label} min eigenvalue"), ss.rho.min_eigenvalue(), -1e-9));
    }
    Ok(out)
}

/// Runs every check; the report has one line per check.
pub fn run() -> CliResult<(String, bool)> {
    let mut checks = z_closed_forms();
    checks.extend(completeness());
    checks.extend(oracle()?);
    checks.extend(closures()?);
    checks.extend(spin1_blockade()?);
    let all = checks.iter().all(|c| c.pass);
    let mut text: String = checks.iter().map(|c| c.line() + "\n").collect();
    let failed = checks.iter().filter(|c| !c.pass).count();
    text.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    Ok((text, all))
}
