use crate::config::{Format, Precision, RunConfig, SolverChoice};
use crate::error::{CliError, CliResult};
use crate::output::{emit, fmt_f64, render, Table};
use nahm_core::basis::relative_difference;
use nahm_core::basis_direct::solve_basis_direct;
use nahm_core::basis_lagrange::solve_all_lagrange;
use nahm_core::dirac::{monopole_fields, nahm_side_residuals, zero_mode_sample, TwistResidual, ZeroModeSample};
use nahm_core::nahm::{
    boundary_report, default_fd_step, frame, nahm_matrices_with, residuals_with, verification_samples, BoundaryReport,
    NahmData, Solver, VerificationReport,
};
use nahm_core::oracles::{exact_n1, exact_n2, n3_first_order, unrotate};
use nahm_core::perturbation::{expand_basis, first_order_lax, series_error};
use nahm_core::scalar::Real;
use nahm_core::spectral::{genericize, MonopoleConfig, Rotation, Spectral};
use nahm_core::Quad;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

/// Everything a command needs after config loading and CLI overrides.
pub struct Context {
    pub run: RunConfig,
    pub cfg: MonopoleConfig,
    pub rotation: Rotation,
    /// Configuration in the generic frame used for the computation.
    pub working: MonopoleConfig,
    pub grid: Vec<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub order: u32,
    pub x: Option<[f64; 3]>,
}

impl Context {
    pub fn new(run: RunConfig, order: u32, x: Option<[f64; 3]>, format: Option<Format>, out: Option<PathBuf>) -> CliResult<Self> {
        let cfg = run.validate()?;
        let (rotation, working) = genericize(&cfg, run.seed)?;
        if !rotation.is_identity() {
            log::info!("configuration rotated to a generic frame");
        }
        let mut grid = run.s_grid.values();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Ok(Context {
            format: format.unwrap_or(run.outputs.format),
            out: out.or_else(|| run.outputs.path.clone()),
            run,
            cfg,
            rotation,
            working,
            grid,
            order,
            x,
        })
    }

    fn map_grid<T, F>(&self, f: F) -> CliResult<Vec<T>>
    where
        T: Send,
        F: Fn(f64) -> CliResult<T> + Sync + Send,
    {
        if self.run.parallel {
            self.grid.par_iter().map(|&s| f(s)).collect()
        } else {
            self.grid.iter().map(|&s| f(s)).collect()
        }
    }

    fn fd_step(&self, s: f64) -> f64 {
        self.run.fd_step.unwrap_or_else(|| default_fd_step(s))
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        emit(self.out.as_deref(), text)
    }
}

enum Working {
    Double(Spectral<f64>),
    Extended(Spectral<Quad>),
}

fn working_spectral(ctx: &Context) -> CliResult<Working> {
    Ok(match ctx.run.precision {
        Precision::Double => Working::Double(Spectral::new(&ctx.working)?),
        Precision::Extended => Working::Extended(Spectral::new(&ctx.working)?),
    })
}

macro_rules! with_spectral {
    ($w:expr, $sp:ident => $body:expr) => {
        match $w {
            Working::Double($sp) => $body,
            Working::Extended($sp) => $body,
        }
    };
}

fn solver_name(s: Solver) -> &'static str {
    match s {
        Solver::Direct => "direct",
        Solver::Lagrange => "lagrange",
    }
}

fn nested(t: &NahmData) -> [Vec<Vec<Complex64>>; 4] {
    std::array::from_fn(|k| t.t[k].nested())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub s: f64,
    pub solver: String,
    pub precision: Precision,
    /// `[T0, T1, T2, T3]` in the input frame, row-major.
    pub nahm: [Vec<Vec<Complex64>>; 4],
    pub verification: VerificationReport,
    /// Relative coefficient difference between the two solvers, when both ran.
    pub solver_difference: Option<f64>,
    pub within_tolerance: bool,
    pub wall_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub points: Vec<[f64; 3]>,
    pub rotation: Rotation,
    pub records: Vec<ResultRecord>,
}

fn report_ok(ctx: &Context, r: &VerificationReport, solver_difference: Option<f64>) -> bool {
    let t = &ctx.run.tolerances;
    r.max_nahm() <= t.nahm
        && r.lax_residual <= t.lax
        && r.reality_residual <= t.reality
        && r.reality_residual_m <= t.reality
        && r.degree_residuals.iter().all(|&v| v <= t.degree)
        && r.spectrum_residual <= t.spectrum
        && r.gram_residual <= t.gram
        && r.zeta_spread <= t.spread
        && solver_difference.is_none_or(|d| d <= t.solver)
}

fn solve_one<R: Real>(ctx: &Context, sp: &Spectral<R>, s: f64) -> CliResult<ResultRecord> {
    let start = Instant::now();
    let solver = ctx.run.solver.primary();
    let t = nahm_matrices_with(sp, s, solver)?.to_f64();
    let samples = verification_samples(sp, ctx.run.seed);
    let report = residuals_with(sp, s, ctx.fd_step(s), &samples, solver)?;
    let solver_difference = match ctx.run.solver {
        SolverChoice::Both => {
            let a = solve_basis_direct(sp, s)?;
            let b = solve_all_lagrange(sp, s)?;
            Some(relative_difference(&a, &b))
        }
        _ => None,
    };
    let within_tolerance = report_ok(ctx, &report, solver_difference);
    if !within_tolerance {
        log::warn!("s = {s}: residuals above tolerance");
    }
    log::info!("s = {s}: max Nahm residual {:e}", report.max_nahm());
    Ok(ResultRecord {
        s,
        solver: solver_name(solver).to_string(),
        precision: ctx.run.precision,
        nahm: nested(&unrotate(&t, &ctx.rotation)),
        verification: report,
        solver_difference,
        within_tolerance,
        wall_time: ctx.run.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

pub fn solve(ctx: &Context) -> CliResult<()> {
    let w = working_spectral(ctx)?;
    let mut records = with_spectral!(&w, sp => ctx.map_grid(|s| solve_one(ctx, sp, s)))?;
    records.sort_by(|a, b| a.s.total_cmp(&b.s));
    let out = SolveOutput { points: ctx.cfg.points.clone(), rotation: ctx.rotation, records };
    ctx.emit(&render(ctx.format, &out, || solve_table(&out)))
}

fn solve_table(out: &SolveOutput) -> Table {
    let n = out.points.len();
    let mut header: Vec<String> = [
        "s",
        "solver",
        "nahm_residual",
        "lax_residual",
        "reality_residual",
        "reality_residual_m",
        "spectrum_residual",
        "gram_residual",
        "zeta_spread",
        "within_tolerance",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for mu in 0..4 {
        for i in 0..n {
            for j in 0..n {
                header.push(format!("t{mu}_{}{}_re", i + 1, j + 1));
                header.push(format!("t{mu}_{}{}_im", i + 1, j + 1));
            }
        }
    }
    let mut table = Table { header, rows: Vec::new() };
    for r in &out.records {
        let v = &r.verification;
        let mut row = vec![
            fmt_f64(r.s),
            r.solver.clone(),
            fmt_f64(v.max_nahm()),
            fmt_f64(v.lax_residual),
            fmt_f64(v.reality_residual),
            fmt_f64(v.reality_residual_m),
            fmt_f64(v.spectrum_residual),
            fmt_f64(v.gram_residual),
            fmt_f64(v.zeta_spread),
            r.within_tolerance.to_string(),
        ];
        for m in &r.nahm {
            for line in m {
                for z in line {
                    row.push(fmt_f64(z.re));
                    row.push(fmt_f64(z.im));
                }
            }
        }
        table.rows.push(row);
    }
    table
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub s: f64,
    pub report: VerificationReport,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub points: Vec<[f64; 3]>,
    pub rotation: Rotation,
    pub records: Vec<VerifyRecord>,
    pub boundary: BoundaryReport,
    pub boundary_passed: bool,
    pub passed: bool,
}

pub const BOUNDARY_SMALL_S: f64 = 1e-3;
pub const BOUNDARY_LARGE_S: f64 = 8.0;

fn boundary_ok(b: &BoundaryReport, n: usize, min_r: Option<f64>) -> bool {
    let casimir_scale = ((n * n - 1) as f64).max(1.0);
    let decay_ok = match min_r {
        Some(r) => ((b.decay_exponent - r) / r).abs() <= 0.2,
        None => true,
    };
    b.small_eigenvalue_error <= 1e-2 && b.casimir_residual <= 5e-2 * casimir_scale && decay_ok
}

pub fn verify(ctx: &Context) -> CliResult<()> {
    let w = working_spectral(ctx)?;
    let solver = ctx.run.solver.primary();
    let mut records = with_spectral!(&w, sp => ctx.map_grid(|s| {
        let samples = verification_samples(sp, ctx.run.seed);
        let report = residuals_with(sp, s, ctx.fd_step(s), &samples, solver)?;
        let passed = report_ok(ctx, &report, None);
        Ok(VerifyRecord { s, report, passed })
    }))?;
    records.sort_by(|a, b| a.s.total_cmp(&b.s));
    let (boundary, min_r) = with_spectral!(&w, sp => (boundary_report(sp, BOUNDARY_SMALL_S, BOUNDARY_LARGE_S)?, sp.to_f64().min_r()));
    let boundary_passed = boundary_ok(&boundary, ctx.cfg.n(), min_r);
    let passed = boundary_passed && records.iter().all(|r| r.passed);
    let out = VerifyOutput {
        points: ctx.cfg.points.clone(),
        rotation: ctx.rotation,
        records,
        boundary,
        boundary_passed,
        passed,
    };
    ctx.emit(&render(ctx.format, &out, || verify_table(&out)))?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Tolerance("verification failed: residuals above tolerance".into()))
    }
}

fn verify_table(out: &VerifyOutput) -> Table {
    let mut t = Table::new(&[
        "s",
        "nahm_residual",
        "lax_residual",
        "reality_residual",
        "reality_residual_m",
        "degree_residual_l",
        "degree_residual_m",
        "spectrum_residual",
        "gram_residual",
        "zeta_spread",
        "antihermitian_residual",
        "passed",
    ]);
    for r in &out.records {
        let v = &r.report;
        t.rows.push(vec![
            fmt_f64(r.s),
            fmt_f64(v.max_nahm()),
            fmt_f64(v.lax_residual),
            fmt_f64(v.reality_residual),
            fmt_f64(v.reality_residual_m),
            fmt_f64(v.degree_residuals[0]),
            fmt_f64(v.degree_residuals[1]),
            fmt_f64(v.spectrum_residual),
            fmt_f64(v.gram_residual),
            fmt_f64(v.zeta_spread),
            fmt_f64(v.antihermitian_residual),
            r.passed.to_string(),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub s: f64,
    /// `rows[l][j][k]`: row `l`, sheet `j`, coefficient of `ζ^k`.
    pub rows: Vec<Vec<Vec<Complex64>>>,
    pub normalized: Vec<Vec<Vec<Complex64>>>,
    pub norms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisOutput {
    /// Points in the frame the basis refers to.
    pub points: Vec<[f64; 3]>,
    pub rotation: Rotation,
    pub records: Vec<BasisRecord>,
}

pub fn basis(ctx: &Context) -> CliResult<()> {
    let w = working_spectral(ctx)?;
    let solver = ctx.run.solver.primary();
    let mut records = with_spectral!(&w, sp => ctx.map_grid(|s| {
        let fr = frame(sp, s, solver)?;
        Ok(BasisRecord {
            s,
            rows: fr.q.to_f64().rows,
            normalized: fr.qhat.to_f64().rows,
            norms: fr.norms.iter().map(|v| v.to_f64()).collect(),
        })
    }))?;
    records.sort_by(|a, b| a.s.total_cmp(&b.s));
    let out = BasisOutput { points: ctx.working.points.clone(), rotation: ctx.rotation, records };
    ctx.emit(&render(ctx.format, &out, || {
        let mut t = Table::new(&["s", "row", "sheet", "degree", "re", "im", "normalized_re", "normalized_im"]);
        for r in &out.records {
            for (l, row) in r.rows.iter().enumerate() {
                for (j, sheet) in row.iter().enumerate() {
                    for (k, c) in sheet.iter().enumerate() {
                        let q = r.normalized[l][j][k];
                        t.rows.push(vec![
                            fmt_f64(r.s),
                            (l + 1).to_string(),
                            (j + 1).to_string(),
                            k.to_string(),
                            fmt_f64(c.re),
                            fmt_f64(c.im),
                            fmt_f64(q.re),
                            fmt_f64(q.im),
                        ]);
                    }
                }
            }
        }
        t
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermOutput {
    /// Pair multiplicities keyed by 1-based `"i-j"`.
    pub exponents: BTreeMap<String, u32>,
    pub delta: f64,
    pub sheets: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSeries {
    pub row: usize,
    pub delta_cut: f64,
    pub terms: Vec<TermOutput>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesErrorRecord {
    pub s: f64,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbOutput {
    pub points: Vec<[f64; 3]>,
    pub rotation: Rotation,
    pub order: u32,
    pub rows: Vec<RowSeries>,
    pub errors: Vec<SeriesErrorRecord>,
}

pub fn perturb(ctx: &Context) -> CliResult<()> {
    let sp = Spectral::<f64>::new(&ctx.working)?;
    let n = sp.n;
    let rows = (0..n)
        .map(|l| {
            let ser = expand_basis(&sp, l, ctx.order)?;
            Ok(RowSeries {
                row: l + 1,
                delta_cut: ser.delta_cut,
                terms: ser
                    .terms
                    .iter()
                    .map(|t| TermOutput { exponents: t.key.labelled(n), delta: t.delta, sheets: t.sheets.clone() })
                    .collect(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut errors = ctx.map_grid(|s| Ok(SeriesErrorRecord { s, max_error: series_error(&sp, s, ctx.order)? }))?;
    errors.sort_by(|a, b| a.s.total_cmp(&b.s));
    let out = PerturbOutput { points: ctx.working.points.clone(), rotation: ctx.rotation, order: ctx.order, rows, errors };
    ctx.emit(&render(ctx.format, &out, || {
        let mut t = Table::new(&["row", "exponents", "delta", "sheet", "degree", "re", "im"]);
        for r in &out.rows {
            for term in &r.terms {
                let label = term.exponents.iter().map(|(k, m)| format!("{k}^{m}")).collect::<Vec<_>>().join(" ");
                for (j, sheet) in term.sheets.iter().enumerate() {
                    for (k, c) in sheet.iter().enumerate() {
                        t.rows.push(vec![
                            r.row.to_string(),
                            label.clone(),
                            fmt_f64(term.delta),
                            (j + 1).to_string(),
                            k.to_string(),
                            fmt_f64(c.re),
                            fmt_f64(c.im),
                        ]);
                    }
                }
            }
        }
        t
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroModeRecord {
    pub s: f64,
    /// Nahm-side twisted frame check at the same point.
    pub nahm_side: TwistResidual,
    /// One mode per basis row.
    pub modes: Vec<ZeroModeSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroModeOutput {
    pub points: Vec<[f64; 3]>,
    pub x: [f64; 3],
    /// Frame of the spinors; `x` is rotated into it before evaluation.
    pub rotation: Rotation,
    pub records: Vec<ZeroModeRecord>,
}

pub fn zeromode(ctx: &Context) -> CliResult<()> {
    let x = ctx.x.ok_or_else(|| CliError::Config("zeromode needs --x x1,x2,x3".into()))?;
    // reports AtSource and StringCrossing in the caller's frame
    monopole_fields(&ctx.cfg, x)?;
    let xr = ctx.rotation.apply(&x);
    let w = working_spectral(ctx)?;
    let mut records = with_spectral!(&w, sp => ctx.map_grid(|s| {
        let q = solve_basis_direct(sp, s)?.to_f64();
        let nahm_side = nahm_side_residuals(sp, s, xr, ctx.fd_step(s))?;
        let modes = q
            .rows
            .iter()
            .map(|row| {
                let mut m = zero_mode_sample(&ctx.working, s, xr, row)?;
                m.x = x;
                Ok(m)
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(ZeroModeRecord { s, nahm_side, modes })
    }))?;
    records.sort_by(|a, b| a.s.total_cmp(&b.s));
    let out = ZeroModeOutput { points: ctx.cfg.points.clone(), x, rotation: ctx.rotation, records };
    ctx.emit(&render(ctx.format, &out, || {
        let mut t = Table::new(&[
            "s", "row", "x1", "x2", "x3", "psi1_re", "psi1_im", "psi2_re", "psi2_im", "residual", "w_residual", "v_residual",
        ]);
        for r in &out.records {
            for (l, m) in r.modes.iter().enumerate() {
                t.rows.push(vec![
                    fmt_f64(r.s),
                    (l + 1).to_string(),
                    fmt_f64(m.x[0]),
                    fmt_f64(m.x[1]),
                    fmt_f64(m.x[2]),
                    fmt_f64(m.spinor[0].re),
                    fmt_f64(m.spinor[0].im),
                    fmt_f64(m.spinor[1].re),
                    fmt_f64(m.spinor[1].im),
                    fmt_f64(m.residual),
                    fmt_f64(r.nahm_side.w),
                    fmt_f64(r.nahm_side.v),
                ]);
            }
        }
        t
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub s: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub points: Vec<[f64; 3]>,
    pub method: String,
    pub records: Vec<OracleRecord>,
    pub max_deviation: f64,
    pub tolerance: f64,
}

/// Largest per-matrix Frobenius-relative difference; matrices that vanish
/// in the reference are compared absolutely against the tuple scale.
pub fn per_matrix_deviation(t: &NahmData, want: &NahmData) -> f64 {
    let total = want.t.iter().map(|m| m.norm().powi(2)).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    (0..4)
        .map(|k| {
            let d = (&t.t[k] - &want.t[k]).norm();
            d / want.t[k].norm().max(1e-14 * total)
        })
        .fold(0.0, f64::max)
}

fn invariant_deviation(t: &NahmData, want: &NahmData) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 1..4 {
        for k in 1..4 {
            let a = (&t.t[j] * &t.t[k]).trace();
            let b = (&want.t[j] * &want.t[k]).trace();
            worst = worst.max((a - b).norm() / b.norm().max(1.0));
        }
    }
    worst
}

fn pipeline_deviation<R: Real>(ctx: &Context, sp: &Spectral<R>, s: f64) -> CliResult<f64> {
    let t = unrotate(&nahm_matrices_with(sp, s, ctx.run.solver.primary())?.to_f64(), &ctx.rotation);
    let want = match ctx.cfg.n() {
        1 => NahmData { s, ..exact_n1(ctx.cfg.points[0]) },
        _ => exact_n2(&ctx.cfg, s)?,
    };
    Ok(if ctx.rotation.is_identity() { per_matrix_deviation(&t, &want) } else { invariant_deviation(&t, &want) })
}

fn display_deviation(sp: &Spectral<f64>) -> CliResult<f64> {
    let disp = n3_first_order(sp)?;
    let fo = first_order_lax(sp)?;
    let mut worst: f64 = 0.0;
    for (p, (i, j)) in [((0, 1), (1, 0)), ((0, 2), (2, 0)), ((1, 2), (2, 1))] {
        let dl = fo.dl[&p][(i, j)];
        let dm = fo.dm[&p][(i, j)];
        worst = worst.max((dl - disp.l[&(i, j)]).norm() / dl.norm().max(1.0));
        worst = worst.max((dm - disp.m[&(i, j)]).norm() / dm.norm().max(1.0));
    }
    for l in 0..3 {
        worst = worst.max((disp.norms[l] - fo.norms[l]).norm() / fo.norms[l].abs().max(1.0));
    }
    Ok(worst)
}

pub fn oracle(ctx: &Context) -> CliResult<()> {
    let n = ctx.cfg.n();
    let (method, mut records) = match n {
        1 | 2 => {
            let w = working_spectral(ctx)?;
            let method = if n == 1 {
                "exact single point"
            } else if ctx.rotation.is_identity() {
                "exact two point"
            } else {
                "exact two point, gauge invariants"
            };
            let recs = with_spectral!(&w, sp => ctx.map_grid(|s| Ok(OracleRecord { s, deviation: pipeline_deviation(ctx, sp, s)? })))?;
            (method, recs)
        }
        3 => {
            let sp = Spectral::<f64>::new(&ctx.working)?;
            // s-independent coefficients of e^{-s r_ij}
            let d = display_deviation(&sp)?;
            ("first-order three point display", ctx.grid.iter().map(|&s| OracleRecord { s, deviation: d }).collect())
        }
        _ => return Err(CliError::Config(format!("no closed-form oracle for {n} points"))),
    };
    records.sort_by(|a, b| a.s.total_cmp(&b.s));
    let max_deviation = records.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let tolerance = ctx.run.tolerances.oracle;
    let out = OracleOutput { points: ctx.cfg.points.clone(), method: method.to_string(), records, max_deviation, tolerance };
    ctx.emit(&render(ctx.format, &out, || {
        let mut t = Table::new(&["s", "deviation"]);
        for r in &out.records {
            t.rows.push(vec![fmt_f64(r.s), fmt_f64(r.deviation)]);
        }
        t
    }))?;
    if max_deviation <= tolerance {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!("oracle deviation {max_deviation:e} exceeds {tolerance:e}")))
    }
}
