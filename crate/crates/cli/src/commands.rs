//! Subcommand bodies. Each returns the text to emit.

use std::f64::consts::PI;
use std::path::Path;

use blockade_core::coherent::{q_function, q_function_offdiag, CoherentFamily};
use blockade_core::experiments::{evaluate, run_sweep, solve, FamilyKind, MeasureContext, SweepSpec, STATUS_OK};
use blockade_core::syncmeas::{sync_max, sync_measure, GroupResidual};
use blockade_core::{analyze, AlgebraReport, ClosureOptions, SteadyState};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::ModelConfig;
use crate::output::{fmt_f64, to_csv, to_json};
use crate::{CliError, CliResult};

/// Flags shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub theta_nodes: Option<usize>,
    pub phase_grid: Option<usize>,
    pub workers: usize,
    pub threshold: Option<f64>,
    pub include_drives: bool,
    pub family: Option<FamilyKind>,
}

pub const DEFAULT_THRESHOLD: f64 = 1e-9;

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn load_config(path: &Path) -> CliResult<ModelConfig> {
    ModelConfig::parse(&read_text(path)?)
}

fn context(cfg: &ModelConfig, s: &Settings) -> CliResult<MeasureContext> {
    let family = s.family.or(cfg.family).unwrap_or(FamilyKind::Spin).build(cfg.dim)?;
    let q = cfg.quadrature.unwrap_or_default();
    Ok(MeasureContext::new(
        family,
        s.theta_nodes.or(q.theta_nodes),
        s.phase_grid.or(q.phase_grid),
    )?)
}

#[derive(Serialize)]
struct SymmetryOutput {
    #[serde(flatten)]
    report: AlgebraReport,
    /// Some block can host a blockade.
    feasible: bool,
}

pub fn symmetry(cfg: &ModelConfig, s: &Settings) -> CliResult<String> {
    let model = cfg.model()?;
    let family: Option<CoherentFamily> = s.family.or(cfg.family).map(|f| f.build(cfg.dim)).transpose()?;
    let opts = ClosureOptions {
        include_drives: s.include_drives,
        ..ClosureOptions::default()
    };
    let report = analyze(&model, family.as_ref(), opts)?;
    let feasible = report.blockade_feasible.iter().any(|&b| b);
    to_json(&SymmetryOutput { report, feasible })
}

#[derive(Serialize)]
struct Diagnostics {
    residual: f64,
    relative_residual: f64,
    trace_error: f64,
    min_eigenvalue: f64,
    smallest_singular: f64,
    second_singular: f64,
}

impl Diagnostics {
    fn of(ss: &SteadyState) -> Self {
        Diagnostics {
            residual: ss.residual,
            relative_residual: ss.relative_residual(),
            trace_error: (ss.rho.as_operator().trace() - Complex64::new(1.0, 0.0)).norm(),
            min_eigenvalue: ss.rho.min_eigenvalue(),
            smallest_singular: ss.smallest_singular,
            second_singular: ss.second_singular,
        }
    }
}

#[derive(Serialize)]
struct SteadyOutput {
    dim: usize,
    /// Row-major `[re, im]` entries.
    rho: Vec<Vec<[f64; 2]>>,
    eigenvalues: Vec<f64>,
    diagnostics: Diagnostics,
}

pub fn steady(cfg: &ModelConfig) -> CliResult<String> {
    let ss = solve(&cfg.model()?)?;
    let d = cfg.dim;
    let rho = (0..d)
        .map(|j| {
            (0..d)
                .map(|k| {
                    let z = ss.rho.get(j, k);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect();
    to_json(&SteadyOutput {
        dim: d,
        rho,
        eigenvalues: ss.rho.eigenvalues(),
        diagnostics: Diagnostics::of(&ss),
    })
}

#[derive(Serialize)]
struct SyncOutput {
    family: String,
    theta_nodes: usize,
    phase_grid: usize,
    s_max: f64,
    /// Signed `S` at `argmax`.
    s_value: f64,
    argmax: Vec<f64>,
    constant: f64,
    l1: f64,
    rel_entropy: f64,
    residuals: Vec<GroupResidual>,
    threshold: f64,
    blockade: bool,
    diagnostics: Diagnostics,
}

pub fn sync(cfg: &ModelConfig, s: &Settings) -> CliResult<String> {
    let ctx = context(cfg, s)?;
    let ss = solve(&cfg.model()?)?;
    let pm = evaluate(&ctx, &ss.rho, false)?;
    let best = sync_max(&ctx.family, &ctx.z, &ss.rho, ctx.phase_grid)?;
    let threshold = s.threshold.unwrap_or(DEFAULT_THRESHOLD);
    to_json(&SyncOutput {
        family: ctx.family.name().to_string(),
        theta_nodes: ctx.quadrature.theta_nodes(),
        phase_grid: ctx.phase_grid,
        s_max: pm.s_max,
        s_value: best.value,
        argmax: pm.argmax,
        constant: best.constant,
        l1: pm.l1,
        rel_entropy: pm.rel_entropy,
        residuals: pm.residuals,
        threshold,
        blockade: pm.s_max <= threshold,
        diagnostics: Diagnostics::of(&ss),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GridFormat {
    Json,
    Csv,
}

/// Largest Husimi grid a single call will tabulate.
pub const MAX_GRID_POINTS: usize = 2_000_000;

fn product<T: Clone>(axes: &[Vec<T>]) -> Vec<Vec<T>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect()
    })
}

#[derive(Serialize)]
struct QfuncOutput {
    family: String,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    /// `int dOmega_theta Q_offdiag` at every phase point of the grid.
    offdiag_phase_integral: Vec<Vec<f64>>,
}

/// Husimi function of the steady state on a grid with `theta_points` samples
/// per polar angle (endpoints included) and `phi_points` per phase.
pub fn qfunc(
    cfg: &ModelConfig,
    s: &Settings,
    theta_points: usize,
    phi_points: usize,
    format: GridFormat,
) -> CliResult<String> {
    if theta_points < 2 || phi_points < 1 {
        return Err(CliError::Input("qfunc needs at least 2 theta points and 1 phi point".into()));
    }
    let ctx = context(cfg, s)?;
    let f = &ctx.family;
    let total = (theta_points as f64).powi(f.n_theta() as i32) * (phi_points as f64).powi(f.n_phases() as i32);
    if total > MAX_GRID_POINTS as f64 {
        return Err(CliError::Input(format!(
            "grid of {total} points exceeds the limit of {MAX_GRID_POINTS}"
        )));
    }
    let rho = solve(&cfg.model()?)?.rho;

    let theta_axes: Vec<Vec<f64>> = f
        .theta_domain()
        .iter()
        .map(|&(a, b)| {
            (0..theta_points)
                .map(|i| a + (b - a) * i as f64 / (theta_points - 1) as f64)
                .collect()
        })
        .collect();
    let phi_axis: Vec<f64> = (0..phi_points).map(|j| 2.0 * PI * j as f64 / phi_points as f64).collect();
    let phis = product(&vec![phi_axis; f.n_phases()]);
    let thetas = product(&theta_axes);

    let mut columns: Vec<String> = (1..=f.n_theta()).map(|i| format!("theta_{i}")).collect();
    columns.extend((1..=f.n_phases()).map(|i| format!("phi_{i}")));
    columns.extend(["q".to_string(), "q_offdiag".to_string()]);

    let mut rows = Vec::with_capacity(thetas.len() * phis.len());
    for theta in &thetas {
        for phi in &phis {
            let mut row = theta.clone();
            row.extend(phi);
            row.push(q_function(f, &rho, theta, phi)?);
            row.push(q_function_offdiag(f, &rho, theta, phi)?);
            rows.push(row);
        }
    }

    match format {
        GridFormat::Csv => {
            let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect()).collect();
            to_csv(&columns, &cells)
        }
        GridFormat::Json => {
            let offdiag_phase_integral = phis
                .iter()
                .map(|phi| {
                    let mut r = phi.clone();
                    r.push(sync_measure(f, &ctx.z, &rho, phi)?);
                    Ok(r)
                })
                .collect::<CliResult<Vec<_>>>()?;
            to_json(&QfuncOutput {
                family: f.name().to_string(),
                columns,
                rows,
                offdiag_phase_integral,
            })
        }
    }
}

/// Result of a sweep: the CSV table and its JSON metadata.
pub struct SweepOutput {
    pub csv: String,
    pub metadata: String,
}

#[derive(Serialize)]
struct SweepSidecar<'a> {
    columns: Vec<String>,
    threshold: Option<f64>,
    failed_points: usize,
    #[serde(flatten)]
    metadata: &'a blockade_core::experiments::SweepMetadata,
}

pub fn sweep(spec_text: &str, s: &Settings) -> CliResult<SweepOutput> {
    let mut spec: SweepSpec =
        serde_json::from_str(spec_text).map_err(|e| CliError::Input(format!("invalid sweep spec: {e}")))?;
    if s.theta_nodes.is_some() {
        spec.theta_nodes = s.theta_nodes;
    }
    if s.phase_grid.is_some() {
        spec.phase_grid = s.phase_grid;
    }
    if s.family.is_some() {
        spec.family = s.family;
    }
    let table = run_sweep(&spec, s.workers)?;

    let mut header = table.columns.clone();
    let s_max_col = table.column("s_max");
    if s.threshold.is_some() && s_max_col.is_none() {
        return Err(CliError::Input("--threshold needs the s_max measure".into()));
    }
    if s.threshold.is_some() {
        header.push("blockade".into());
    }
    header.push("status".into());

    let cells: Vec<Vec<String>> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut cells: Vec<String> = r.point.iter().chain(&r.values).map(|&v| fmt_f64(v)).collect();
            if let (Some(t), Some(_)) = (s.threshold, s_max_col) {
                let below = table.value(i, "s_max").is_some_and(|v| v <= t);
                cells.push(u8::from(below).to_string());
            }
            cells.push(r.status.clone());
            cells
        })
        .collect();

    Ok(SweepOutput {
        csv: to_csv(&header, &cells)?,
        metadata: to_json(&SweepSidecar {
            columns: header,
            threshold: s.threshold,
            failed_points: table.rows.iter().filter(|r| r.status != STATUS_OK).count(),
            metadata: &table.metadata,
        })?,
    })
}
