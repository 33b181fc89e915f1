//! Model builders for the three case studies, parameter sweeps and blockade
//! searches on the spin-3/2 rate plane.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::{make_spin_family, make_su3_family, CoherentFamily, Quadrature};
use crate::error::{Error, Result};
use crate::lindblad::{
    build_liouvillian, steady_state, DensityMatrix, Dissipator, HamiltonianTerm, LindbladModel,
    SteadyState, TermRole,
};
use crate::opkit::{spin_operators, transition_op, Operator};
use crate::syncmeas::{
    blockade_residual, l1_coherence, rel_entropy_sync, sync_max, trace_distance_sync, z_matrix,
    GroupResidual, ZMatrix,
};

fn term(op: Operator, coeff: f64, role: TermRole) -> HamiltonianTerm {
    HamiltonianTerm { op, coeff, role }
}

fn jump(op: Operator, rate: f64) -> Dissipator {
    Dissipator { jump: op, rate }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spin1Params {
    pub delta: f64,
    pub epsilon: f64,
    pub gamma_g: f64,
    pub gamma_d: f64,
}

impl Default for Spin1Params {
    fn default() -> Self {
        Spin1Params {
            delta: 0.0,
            epsilon: 0.01,
            gamma_g: 0.1,
            gamma_d: 0.1,
        }
    }
}

impl Spin1Params {
    /// `H = delta Sz + epsilon Sy` with gain `S+ Sz` and loss `S- Sz`.
    pub fn model(&self) -> Result<LindbladModel> {
        let s = spin_operators(3)?;
        LindbladModel::new(
            3,
            vec![
                term(s.sz.clone(), self.delta, TermRole::Bare),
                term(s.sy.clone(), self.epsilon, TermRole::Drive),
            ],
            vec![
                jump(&s.splus * &s.sz, self.gamma_g),
                jump(&s.sminus * &s.sz, self.gamma_d),
            ],
        )
    }
}

pub fn spin1_model(delta: f64, epsilon: f64, gamma_g: f64, gamma_d: f64) -> Result<LindbladModel> {
    Spin1Params {
        delta,
        epsilon,
        gamma_g,
        gamma_d,
    }
    .model()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spin32Params {
    pub delta: f64,
    /// Amplitude of the `Sx` drive.
    pub epsilon: f64,
    /// Amplitude of the `Sx^2` drive.
    pub g: f64,
    pub gamma1p: f64,
    pub gamma2p: f64,
    pub gamma1d: f64,
    pub gamma2d: f64,
    /// Weight of the diagonal part of `Sx^2`. At 0 the second drive only
    /// couples `|3/2> <-> |-1/2>` and `|1/2> <-> |-3/2>` resonantly.
    pub v2_diagonal: f64,
}

impl Default for Spin32Params {
    fn default() -> Self {
        Spin32Params {
            delta: 0.0,
            epsilon: 0.0,
            g: 0.0,
            gamma1p: 0.1,
            gamma2p: 1.0,
            gamma1d: 0.1,
            gamma2d: 0.1,
            v2_diagonal: 0.0,
        }
    }
}

/// `Sx^2` with its diagonal scaled by `diagonal_weight`.
pub fn sx2_operator(dim: usize, diagonal_weight: f64) -> Result<Operator> {
    let sx = spin_operators(dim)?.sx;
    let sq = &sx * &sx;
    let diag: Vec<f64> = (0..dim).map(|k| sq.get(k, k).re).collect();
    Ok(&sq.off_diagonal() + &(&Operator::from_diagonal(&diag) * diagonal_weight))
}

impl Spin32Params {
    /// Levels ordered `3/2, 1/2, -1/2, -3/2`.
    pub fn model(&self) -> Result<LindbladModel> {
        let s = spin_operators(4)?;
        let sigma = |j, k| transition_op(4, j, k);
        LindbladModel::new(
            4,
            vec![
                term(s.sz.clone(), self.delta, TermRole::Bare),
                term(s.sx.clone(), self.epsilon, TermRole::Drive),
                term(sx2_operator(4, self.v2_diagonal)?, self.g, TermRole::Drive),
            ],
            vec![
                jump(sigma(3, 4)?, self.gamma1p),
                jump(sigma(1, 3)?, self.gamma2p),
                jump(sigma(2, 1)?, self.gamma1d),
                jump(sigma(4, 2)?, self.gamma2d),
            ],
        )
    }
}

/// Spin-3/2 model with the resonant `Sx^2` drive.
#[allow(clippy::too_many_arguments)]
pub fn spin32_model(
    delta: f64,
    epsilon: f64,
    g: f64,
    gamma1p: f64,
    gamma2p: f64,
    gamma1d: f64,
    gamma2d: f64,
) -> Result<LindbladModel> {
    Spin32Params {
        delta,
        epsilon,
        g,
        gamma1p,
        gamma2p,
        gamma1d,
        gamma2d,
        v2_diagonal: 0.0,
    }
    .model()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalParams {
    pub delta: f64,
    pub epsilon: f64,
    pub gamma_h: f64,
    pub gamma_c: f64,
    pub n_h: f64,
    pub n_c: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        ThermalParams {
            delta: 0.0,
            epsilon: 0.01,
            gamma_h: 0.1,
            gamma_c: 0.1,
            n_h: 2.0,
            n_c: 0.1,
        }
    }
}

impl ThermalParams {
    /// Three levels with a hot bath on `1 <-> 3`, a cold bath on `1 <-> 2`
    /// and a coherent drive on `2 <-> 3`.
    pub fn model(&self) -> Result<LindbladModel> {
        for (name, value) in [("n_h", self.n_h), ("n_c", self.n_c)] {
            if !(value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "thermal occupation must be nonnegative",
                });
            }
        }
        for (index, rate) in [(0, self.gamma_h), (2, self.gamma_c)] {
            if !(rate >= 0.0) {
                return Err(Error::NegativeRate { index, rate });
            }
        }
        let sigma = |j, k| transition_op(3, j, k);
        let drive = &sigma(2, 3)? + &sigma(3, 2)?;
        LindbladModel::new(
            3,
            vec![
                term(sigma(3, 3)?, self.delta, TermRole::Bare),
                term(drive, self.epsilon, TermRole::Drive),
            ],
            vec![
                jump(sigma(1, 3)?, self.gamma_h * (self.n_h + 1.0)),
                jump(sigma(3, 1)?, self.gamma_h * self.n_h),
                jump(sigma(1, 2)?, self.gamma_c * (self.n_c + 1.0)),
                jump(sigma(2, 1)?, self.gamma_c * self.n_c),
            ],
        )
    }
}

pub fn su3_thermal_model(
    delta: f64,
    epsilon: f64,
    gamma_h: f64,
    gamma_c: f64,
    n_h: f64,
    n_c: f64,
) -> Result<LindbladModel> {
    ThermalParams {
        delta,
        epsilon,
        gamma_h,
        gamma_c,
        n_h,
        n_c,
    }
    .model()
}

/// Steady state of a model.
pub fn solve(model: &LindbladModel) -> Result<SteadyState> {
    steady_state(&build_liouvillian(model))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Spin1,
    Spin32,
    Su3Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Spin,
    Su3,
}

impl FamilyKind {
    pub fn build(self, dim: usize) -> Result<CoherentFamily> {
        match self {
            FamilyKind::Spin => make_spin_family(dim),
            FamilyKind::Su3 if dim == 3 => Ok(make_su3_family()),
            FamilyKind::Su3 => Err(Error::DimensionMismatch {
                expected: 3,
                found: dim,
            }),
        }
    }
}

impl ModelKind {
    pub fn dim(self) -> usize {
        match self {
            ModelKind::Spin1 | ModelKind::Su3Thermal => 3,
            ModelKind::Spin32 => 4,
        }
    }

    pub fn default_family(self) -> FamilyKind {
        match self {
            ModelKind::Spin1 | ModelKind::Spin32 => FamilyKind::Spin,
            ModelKind::Su3Thermal => FamilyKind::Su3,
        }
    }

    /// Parameter names accepted in sweeps, including the derived ones.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Spin1 => &[
                "delta",
                "epsilon",
                "gamma_g",
                "gamma_d",
                "gamma_ratio",
                "epsilon_rel",
            ],
            ModelKind::Spin32 => &[
                "delta",
                "epsilon",
                "g",
                "gamma1p",
                "gamma2p",
                "gamma1d",
                "gamma2d",
                "v2_diagonal",
                "epsilon_rel",
                "g_rel",
            ],
            ModelKind::Su3Thermal => &["delta", "epsilon", "gamma_h", "gamma_c", "n_h", "n_c"],
        }
    }

    /// Builds the model from named values; unset parameters keep their defaults.
    ///
    /// `gamma_ratio` sets `gamma_d = gamma_g / ratio`; `epsilon_rel` and
    /// `g_rel` are in units of `gamma_g` (spin-1) or `gamma1p` (spin-3/2).
    pub fn build(self, values: &BTreeMap<String, f64>) -> Result<LindbladModel> {
        for name in values.keys() {
            if !self.parameter_names().contains(&name.as_str()) {
                return Err(Error::InvalidSweep(format!("unknown parameter {name:?}")));
            }
        }
        let get = |name: &str| values.get(name).copied();
        match self {
            ModelKind::Spin1 => {
                let mut p = Spin1Params::default();
                p.delta = get("delta").unwrap_or(p.delta);
                p.gamma_g = get("gamma_g").unwrap_or(p.gamma_g);
                p.gamma_d = get("gamma_d").unwrap_or(p.gamma_d);
                p.epsilon = get("epsilon").unwrap_or(p.epsilon);
                if let Some(r) = get("gamma_ratio") {
                    p.gamma_d = p.gamma_g / r;
                }
                if let Some(e) = get("epsilon_rel") {
                    p.epsilon = e * p.gamma_g;
                }
                p.model()
            }
            ModelKind::Spin32 => {
                let mut p = Spin32Params::default();
                p.delta = get("delta").unwrap_or(p.delta);
                p.epsilon = get("epsilon").unwrap_or(p.epsilon);
                p.g = get("g").unwrap_or(p.g);
                p.gamma1p = get("gamma1p").unwrap_or(p.gamma1p);
                p.gamma2p = get("gamma2p").unwrap_or(p.gamma2p);
                p.gamma1d = get("gamma1d").unwrap_or(p.gamma1d);
                p.gamma2d = get("gamma2d").unwrap_or(p.gamma2d);
                p.v2_diagonal = get("v2_diagonal").unwrap_or(p.v2_diagonal);
                if let Some(e) = get("epsilon_rel") {
                    p.epsilon = e * p.gamma1p;
                }
                if let Some(g) = get("g_rel") {
                    p.g = g * p.gamma1p;
                }
                p.model()
            }
            ModelKind::Su3Thermal => {
                let mut p = ThermalParams::default();
                p.delta = get("delta").unwrap_or(p.delta);
                p.epsilon = get("epsilon").unwrap_or(p.epsilon);
                p.gamma_h = get("gamma_h").unwrap_or(p.gamma_h);
                p.gamma_c = get("gamma_c").unwrap_or(p.gamma_c);
                p.n_h = get("n_h").unwrap_or(p.n_h);
                p.n_c = get("n_c").unwrap_or(p.n_c);
                p.model()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidSweep(format!("axis {:?}: {why}", self.name)));
        if !self.min.is_finite() || !self.max.is_finite() {
            return bad("bounds must be finite");
        }
        if self.count == 0 {
            return bad("count must be positive");
        }
        if self.count == 1 && self.min != self.max {
            return bad("a single point needs min = max");
        }
        if self.count >= 2 && !(self.min < self.max) {
            return bad("min must be below max");
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return bad("log scale needs positive bounds");
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + t * (self.max - self.min),
                    Scale::Log => (self.min.ln() + t * (self.max / self.min).ln()).exp(),
                }
            })
            .collect()
    }
}

/// `count` log-spaced points from `min` to `max`.
pub fn log_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    Axis {
        name: String::new(),
        min,
        max,
        count,
        scale: Scale::Log,
    }
    .values()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    SMax,
    L1,
    RelEntropy,
    TraceDistance,
    Residuals,
}

fn default_measures() -> Vec<Measure> {
    vec![Measure::SMax, Measure::L1, Measure::RelEntropy, Measure::Residuals]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default = "default_measures")]
    pub measures: Vec<Measure>,
    #[serde(default)]
    pub family: Option<FamilyKind>,
    #[serde(default)]
    pub phase_grid: Option<usize>,
    #[serde(default)]
    pub theta_nodes: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let names = self.model.parameter_names();
        for axis in &self.axes {
            axis.validate()?;
            if !names.contains(&axis.name.as_str()) {
                return Err(Error::InvalidSweep(format!("unknown parameter {:?}", axis.name)));
            }
            if self.fixed.contains_key(&axis.name) {
                return Err(Error::InvalidSweep(format!(
                    "parameter {:?} is both swept and fixed",
                    axis.name
                )));
            }
        }
        for (i, a) in self.axes.iter().enumerate() {
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidSweep(format!("axis {:?} repeated", a.name)));
            }
        }
        for name in self.fixed.keys() {
            if !names.contains(&name.as_str()) {
                return Err(Error::InvalidSweep(format!("unknown parameter {name:?}")));
            }
        }
        if self.measures.is_empty() {
            return Err(Error::InvalidSweep("no measures requested".into()));
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }
}

/// Family, quadrature and overlap matrix shared by every evaluation.
#[derive(Debug, Clone)]
pub struct MeasureContext {
    pub family: CoherentFamily,
    pub quadrature: Quadrature,
    pub z: ZMatrix,
    pub phase_grid: usize,
}

impl MeasureContext {
    /// Reference quadrature unless overridden.
    pub fn new(family: CoherentFamily, theta_nodes: Option<usize>, phase_grid: Option<usize>) -> Result<Self> {
        let reference = Quadrature::reference(&family);
        let quadrature = Quadrature::new(
            &family,
            theta_nodes.unwrap_or(reference.theta_nodes()),
            phase_grid.unwrap_or(reference.phase_points()),
        )?;
        let z = z_matrix(&family, &quadrature);
        let phase_grid = quadrature.phase_points();
        Ok(MeasureContext {
            family,
            quadrature,
            z,
            phase_grid,
        })
    }

    pub fn reference(family: CoherentFamily) -> Self {
        Self::new(family, None, None).expect("reference quadrature is admissible")
    }
}

/// Measures of one steady state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointMeasures {
    pub s_max: f64,
    pub argmax: Vec<f64>,
    pub l1: f64,
    pub rel_entropy: f64,
    pub trace_distance: Option<f64>,
    pub residuals: Vec<GroupResidual>,
}

pub fn evaluate(ctx: &MeasureContext, rho: &DensityMatrix, with_trace_distance: bool) -> Result<PointMeasures> {
    let sync = sync_max(&ctx.family, &ctx.z, rho, ctx.phase_grid)?;
    Ok(PointMeasures {
        s_max: sync.max_abs,
        argmax: sync.argmax,
        l1: l1_coherence(rho),
        rel_entropy: rel_entropy_sync(rho).value,
        trace_distance: with_trace_distance.then(|| trace_distance_sync(rho).value),
        residuals: blockade_residual(&ctx.family, &ctx.z, rho)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// Axis values in axis order.
    pub point: Vec<f64>,
    /// Values in the order of the non-axis columns; NaN when the solve failed.
    pub values: Vec<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub spec: SweepSpec,
    pub family: String,
    pub theta_nodes: usize,
    pub phase_grid: usize,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    /// Axis names, measure columns, then steady-state diagnostics.
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Value of a named column (axis or measure) in row `i`.
    pub fn value(&self, i: usize, name: &str) -> Option<f64> {
        let c = self.column(name)?;
        let row = &self.rows[i];
        let n = row.point.len();
        Some(if c < n { row.point[c] } else { row.values[c - n] })
    }
}

pub const STATUS_OK: &str = "ok";

/// Evaluates the spec on the full grid, row-major over the axes (last axis
/// fastest). Points run in parallel on `workers` threads (0 = all cores);
/// the output order does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepTable> {
    spec.validate()?;
    let family = spec
        .family
        .unwrap_or(spec.model.default_family())
        .build(spec.model.dim())?;
    let ctx = MeasureContext::new(family, spec.theta_nodes, spec.phase_grid)?;
    let n_groups = crate::coherent::phase_groups(ctx.family.phase_coeffs()).len();

    let mut columns: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    for m in &spec.measures {
        match m {
            Measure::SMax => columns.push("s_max".into()),
            Measure::L1 => columns.push("l1".into()),
            Measure::RelEntropy => columns.push("rel_entropy".into()),
            Measure::TraceDistance => columns.push("trace_distance".into()),
            Measure::Residuals => columns.extend((1..=n_groups).map(|k| format!("residual_{k}"))),
        }
    }
    columns.extend(["ss_residual", "trace_error", "min_eigenvalue"].map(String::from));
    let n_values = columns.len() - spec.axes.len();

    let axis_values: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect();
    let points: Vec<Vec<f64>> = (0..spec.n_points())
        .map(|mut idx| {
            let mut p = vec![0.0; axis_values.len()];
            for (a, vals) in axis_values.iter().enumerate().rev() {
                p[a] = vals[idx % vals.len()];
                idx /= vals.len();
            }
            p
        })
        .collect();

    let with_td = spec.measures.contains(&Measure::TraceDistance);
    let eval_point = |point: &Vec<f64>| -> SweepRow {
        let mut values = spec.fixed.clone();
        for (a, v) in spec.axes.iter().zip(point) {
            values.insert(a.name.clone(), *v);
        }
        let outcome = spec
            .model
            .build(&values)
            .and_then(|m| solve(&m))
            .and_then(|ss| Ok((evaluate(&ctx, &ss.rho, with_td)?, ss)));
        match outcome {
            Ok((pm, ss)) => {
                let mut out = Vec::with_capacity(n_values);
                for m in &spec.measures {
                    match m {
                        Measure::SMax => out.push(pm.s_max),
                        Measure::L1 => out.push(pm.l1),
                        Measure::RelEntropy => out.push(pm.rel_entropy),
                        Measure::TraceDistance => out.push(pm.trace_distance.unwrap_or(f64::NAN)),
                        Measure::Residuals => out.extend(pm.residuals.iter().map(|r| r.residual)),
                    }
                }
                out.push(ss.relative_residual());
                out.push((ss.rho.as_operator().trace() - Complex64::new(1.0, 0.0)).norm());
                out.push(ss.rho.min_eigenvalue());
                SweepRow {
                    point: point.clone(),
                    values: out,
                    status: STATUS_OK.into(),
                }
            }
            Err(e) => SweepRow {
                point: point.clone(),
                values: vec![f64::NAN; n_values],
                status: e.to_string(),
            },
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidSweep(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| points.par_iter().map(eval_point).collect());

    Ok(SweepTable {
        columns,
        rows,
        metadata: SweepMetadata {
            spec: spec.clone(),
            family: ctx.family.name().to_string(),
            theta_nodes: ctx.quadrature.theta_nodes(),
            phase_grid: ctx.phase_grid,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

/// A blockade point found on the `(gamma1d, gamma2d)` plane.
#[derive(Debug, Clone)]
pub struct BlockadePoint {
    pub params: Spin32Params,
    pub steady: SteadyState,
    /// Value of the scanned function at the refined point.
    pub condition: f64,
}

/// Scans rows of fixed `gamma1d` for a sign change of `f` between adjacent
/// `gamma2d` grid points and refines it by bisection in `log gamma2d`.
///
/// `f` returns `None` where its condition does not apply; such points break
/// brackets. Rows are tried in grid order and the first refined root whose
/// bracket stays valid is returned.
pub fn search_rate_plane<F>(base: &Spin32Params, grid: &[f64], f: F) -> Result<Option<BlockadePoint>>
where
    F: Fn(&DensityMatrix) -> Option<f64> + Sync,
{
    let eval = |g1d: f64, g2d: f64| -> Result<(Spin32Params, SteadyState, Option<f64>)> {
        let p = Spin32Params {
            gamma1d: g1d,
            gamma2d: g2d,
            ..*base
        };
        let ss = solve(&p.model()?)?;
        let v = f(&ss.rho);
        Ok((p, ss, v))
    };
    let rows: Vec<Result<Option<BlockadePoint>>> = grid
        .par_iter()
        .map(|&g1d| {
            let mut prev: Option<(f64, f64)> = None;
            for &g2d in grid {
                let (_, _, v) = eval(g1d, g2d)?;
                if let (Some((x0, f0)), Some(f1)) = (prev, v) {
                    if f0 == 0.0 || f0.signum() != f1.signum() {
                        if let Some(hit) = bisect(&eval, g1d, x0, f0, g2d)? {
                            return Ok(Some(hit));
                        }
                    }
                }
                prev = v.map(|fv| (g2d, fv));
            }
            Ok(None)
        })
        .collect();
    for r in rows {
        if let Some(hit) = r? {
            return Ok(Some(hit));
        }
    }
    Ok(None)
}

type Eval<'a> = dyn Fn(f64, f64) -> Result<(Spin32Params, SteadyState, Option<f64>)> + 'a;

fn bisect(eval: &Eval<'_>, g1d: f64, a: f64, fa: f64, b: f64) -> Result<Option<BlockadePoint>> {
    let (mut lo, mut hi) = (a.ln(), b.ln());
    let sign_lo = fa.signum();
    let mut best: Option<BlockadePoint> = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (params, steady, v) = eval(g1d, mid.exp())?;
        let Some(fm) = v else { return Ok(None) };
        if best.as_ref().is_none_or(|b| fm.abs() < b.condition.abs()) {
            best = Some(BlockadePoint {
                params,
                steady,
                condition: fm,
            });
        }
        if fm == 0.0 || hi - lo < 1e-15 {
            break;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// `Im(rho_13 + rho_24)`: with the resonant second drive the sum is purely
/// imaginary, so its sign change marks the second blockade condition.
pub fn v2_condition(rho: &DensityMatrix) -> Option<f64> {
    Some((rho.get(0, 2) + rho.get(1, 3)).im)
}

/// `5 sqrt3 (R12 + R34) - 9 R23`, defined where the adjacent coherences have
/// the phase pattern `chi34 = chi12`, `chi23 = chi12 + pi` needed for the
/// first blockade condition.
pub fn v1_condition(rho: &DensityMatrix) -> Option<f64> {
    let (c12, c23, c34) = (rho.get(0, 1), rho.get(1, 2), rho.get(2, 3));
    let aligned = (c12 * c34.conj()).re > 0.0 && (c12 * c23.conj()).re < 0.0;
    aligned.then(|| 5.0 * 3f64.sqrt() * (c12.norm() + c34.norm()) - 9.0 * c23.norm())
}

/// `chi_a - chi_b` wrapped to `(-pi, pi]`.
pub fn phase_gap(rho: &DensityMatrix, a: (usize, usize), b: (usize, usize)) -> f64 {
    let d = rho.chi(a.0, a.1) - rho.chi(b.0, b.1);
    let w = d.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn undriven_spin1_relaxes_to_middle_level() {
        let ss = solve(&spin1_model(0.0, 0.0, 0.1, 0.1).unwrap()).unwrap();
        let d = ss.rho.diagonal();
        assert_abs_diff_eq!(d[1], 1.0, epsilon = 1e-10);
        assert!(l1_coherence(&ss.rho) < 1e-10);
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(matches!(
            spin1_model(0.0, 0.01, -0.1, 0.1),
            Err(Error::NegativeRate { .. })
        ));
        assert!(matches!(
            su3_thermal_model(0.0, 0.01, 0.1, 0.1, -1.0, 0.1),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn resonant_sx2_has_no_diagonal() {
        let op = sx2_operator(4, 0.0).unwrap();
        for k in 0..4 {
            assert_eq!(op.get(k, k), Complex64::new(0.0, 0.0));
        }
        assert_abs_diff_eq!(op.get(0, 2).re, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        let full = sx2_operator(4, 1.0).unwrap();
        assert_abs_diff_eq!(full.get(0, 0).re, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(full.get(1, 1).re, 1.75, epsilon = 1e-15);
    }

    #[test]
    fn v2_run_only_has_skip_coherences() {
        let ss = solve(&spin32_model(0.0, 0.0, 0.01, 0.1, 1.0, 0.3, 0.2).unwrap()).unwrap();
        for (j, k) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            assert!(ss.rho.r(j, k) <= 1e-6);
        }
        assert!(ss.rho.r(0, 2) > 1e-4);
    }

    #[test]
    fn thermal_without_drive_is_diagonal() {
        let ss = solve(&su3_thermal_model(0.0, 0.0, 0.1, 0.1, 2.0, 0.1).unwrap()).unwrap();
        assert!(l1_coherence(&ss.rho) <= 1e-10);
    }

    #[test]
    fn axis_values_and_validation() {
        let a = Axis {
            name: "gamma_ratio".into(),
            min: 0.5,
            max: 2.0,
            count: 41,
            scale: Scale::Log,
        };
        let v = a.values();
        assert_abs_diff_eq!(v[20], 1.0, epsilon = 1e-14);
        assert_eq!(v[0], 0.5);
        let single = Axis { count: 1, max: 0.5, ..a.clone() };
        assert_eq!(single.values(), vec![0.5]);
        assert!(Axis { min: 0.0, ..a.clone() }.validate().is_err());
        assert!(Axis { max: 0.4, ..a }.validate().is_err());
    }

    #[test]
    fn unknown_parameter_rejected() {
        let mut values = BTreeMap::new();
        values.insert("gamma_h".to_string(), 0.1);
        assert!(matches!(ModelKind::Spin1.build(&values), Err(Error::InvalidSweep(_))));
    }

    #[test]
    fn phase_gap_wraps() {
        let c = |chi: f64| Complex64::from_polar(0.01, -chi);
        let z = Complex64::new(0.0, 0.0);
        let p = |x: f64| Complex64::new(x, 0.0);
        let rho = DensityMatrix::new(
            Operator::from_rows(
                3,
                &[p(0.4), c(3.0), z, c(3.0).conj(), p(0.3), c(-3.0), z, c(-3.0).conj(), p(0.3)],
            )
            .unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(phase_gap(&rho, (0, 1), (1, 2)), 6.0 - 2.0 * PI, epsilon = 1e-12);
    }
}
