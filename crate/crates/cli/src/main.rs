//! `ff`: witness search and derivative checks for composition operators
//! on periodic function spaces.
//!
//! Exit codes: 0 for a definite verdict, 2 when the run is inconclusive,
//! 1 for malformed input or an internal failure. Reports are JSON on
//! stdout (or `--out`), with optional CSV tables and SVG charts. The
//! `FF_THREADS` variable sets the worker count and never changes any
//! reported number.

mod chart;
mod report;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ff_core::expr::{self, SmoothExpr};
use ff_core::falsify::{falsify_bounded_claim, BoundedClaim, WitnessReport};
use ff_core::gateaux::{cb_continuity_probe, gateaux_analytic, gateaux_quotient, loglog_slope};
use ff_core::parse::{parse_expr, SourceText};
use ff_core::seminorm::{seminorm_sup, GridCfg};
use ff_core::smooth::{build_bump_monomial, build_trig_witness, bump_bound_check, PeriodicFn};
use ff_core::transport::{op_s, transport_growth_demo, CylinderFn};

use chart::{line_chart, Series};
use report::num;

#[derive(Parser)]
#[command(name = "ff", version, about = "Witness search and derivative checks for composition operators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search for a frequency witness violating a claimed derivative bound
    Falsify(FalsifyArgs),
    /// Compare difference quotients against the analytic derivative
    GateauxCheck(GateauxArgs),
    /// Verify bump-monomial derivative bounds across scales
    BumpCheck(BumpArgs),
    /// Perturbation growth table for the transport operator
    TransportDemo(TransportArgs),
    /// Evaluate grid seminorms of a periodic function
    Seminorm(SeminormArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a CSV table here
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write an SVG chart here
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Seed for randomized probes
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GridArgs {
    /// Base grid resolution
    #[arg(long, default_value_t = 1024)]
    resolution: usize,
    /// Golden-section refinement depth per grid argmax
    #[arg(long, default_value_t = 32)]
    refine: usize,
}

impl GridArgs {
    fn cfg(&self) -> GridCfg {
        GridCfg { resolution: self.resolution, refine_depth: self.refine }
    }
}

#[derive(Args)]
struct FalsifyArgs {
    /// Outer expression in the variable t
    #[arg(long)]
    phi: String,
    /// Base point of the claim
    #[arg(long, default_value_t = 0.0)]
    s0: f64,
    /// Input seminorm index (even, positive)
    #[arg(long)]
    i0: usize,
    /// Output seminorm index; must equal i0 + 1 when given
    #[arg(long)]
    i: Option<usize>,
    /// Claimed bound M
    #[arg(long = "bound-M", value_name = "M")]
    bound: f64,
    /// Radius of the input ball
    #[arg(long)]
    delta: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct GateauxArgs {
    /// Outer expression in the variable t
    #[arg(long)]
    phi: String,
    /// Base function, periodic in s
    #[arg(long)]
    x: String,
    /// Direction function, periodic in s
    #[arg(long)]
    u: String,
    /// Seminorm index for residuals and distances
    #[arg(long)]
    index: usize,
    /// Difference steps, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
    steps: Vec<f64>,
    /// Ball seminorm index for the continuity probe
    #[arg(long, default_value_t = 2)]
    i0: usize,
    /// Ball radius for the continuity probe
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Number of continuity probes, 0 disables the probe
    #[arg(long, default_value_t = 6)]
    probes: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BumpArgs {
    /// Multi-index alpha, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<u32>,
    /// Dimension; defaults to the length of alpha
    #[arg(long)]
    dim: Option<usize>,
    /// Scales checked against the calibrated bound
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.01")]
    deltas: Vec<f64>,
    /// Bound M; calibrated at scale 1 when omitted
    #[arg(long = "bound-M", value_name = "M")]
    bound: Option<f64>,
    /// Grid resolution per factor
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TransportArgs {
    /// Right-hand side over (t, eta, xi), 1-periodic in eta
    #[arg(long, default_value = "xi^2")]
    phi3: String,
    /// Initial data in s for the background state; default background is 0
    #[arg(long)]
    shift: Option<String>,
    /// Witness center inside (0, 1)
    #[arg(long, default_value_t = 0.5)]
    t0: f64,
    /// Witness order (positive)
    #[arg(long, default_value_t = 2)]
    i0: usize,
    /// Perturbation scales, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    deltas: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SeminormArgs {
    /// Periodic expression in the variable s
    #[arg(long)]
    f: String,
    /// Top seminorm index
    #[arg(long)]
    index: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version print to stdout and succeed; anything
            // else is a usage error
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli.cmd) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn init_threads() -> Result<(), String> {
    match std::env::var("FF_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("FF_THREADS must be a positive integer, got '{v}'"))?;
            if n == 0 {
                return Err("FF_THREADS must be a positive integer".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("thread pool setup failed: {e}"))
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(format!("FF_THREADS is not valid unicode: {e}")),
    }
}

fn run(cmd: Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Falsify(a) => run_falsify(a),
        Cmd::GateauxCheck(a) => run_gateaux(a),
        Cmd::BumpCheck(a) => run_bump(a),
        Cmd::TransportDemo(a) => run_transport(a),
        Cmd::Seminorm(a) => run_seminorm(a),
    }
}

fn parse_flag(flag: &str, text: &str, vars: &[&str]) -> Result<SmoothExpr, String> {
    let src = SourceText::new(text, vars).map_err(|e| format!("{flag}: {e}"))?;
    parse_expr(&src).map_err(|e| format!("{flag} '{text}': {e}"))
}

fn ctx<T>(what: &str, r: ff_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    report::emit_csv(path, header, rows).map_err(|e| format!("write {}: {e}", path.display()))
}

fn write_svg(path: &Path, content: &str) -> Result<(), String> {
    std::fs::write(path, content).map_err(|e| format!("write {}: {e}", path.display()))
}

fn emit_json<T: serde::Serialize>(out: Option<&PathBuf>, value: &T) -> Result<(), String> {
    report::emit_json(out.map(|p| p.as_path()), value).map_err(|e| format!("write report: {e}"))
}

fn run_falsify(a: FalsifyArgs) -> Result<ExitCode, String> {
    let phi = parse_flag("--phi", &a.phi, &["t"])?;
    let claim = ctx(
        "claim",
        match a.i {
            Some(i) => BoundedClaim::with_output_index(phi, "t", a.s0, a.i0, i, a.bound, a.delta),
            None => BoundedClaim::new(phi, "t", a.s0, a.i0, a.bound, a.delta),
        },
    )?;
    let rep = ctx("falsify", falsify_bounded_claim(&claim, a.grid.cfg()))?;

    emit_json(a.output.out.as_ref(), &report::falsify_report(&rep, a.output.seed))?;
    if let Some(p) = &a.output.csv {
        let header = [
            "phi", "s0", "i0", "i", "M", "delta", "A", "M2", "B", "C", "n", "witness_norm",
            "exact_lower", "numeric_seminorm", "verdict",
        ];
        let row = vec![
            rep.claim.phi.to_string(),
            num(rep.claim.s0),
            rep.claim.i0.to_string(),
            rep.claim.output_index().to_string(),
            num(rep.claim.bound),
            num(rep.claim.delta),
            num(rep.a),
            num(rep.m2.m2),
            rep.m2.b.to_string(),
            num(rep.m2.c),
            rep.n.to_string(),
            num(rep.witness_norm_exact),
            num(rep.exact_lower),
            num(rep.numeric.value),
            report::verdict_str(rep.verdict).to_string(),
        ];
        write_csv(p, &header, &[row])?;
    }
    if let Some(p) = &a.output.svg {
        write_svg(p, &falsify_chart(&rep, a.grid.cfg())?)?;
    }
    Ok(match rep.verdict {
        ff_core::falsify::Verdict::Inconclusive => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    })
}

/// Measured composed seminorm against the certified lower bound along a
/// frequency ladder ending at the chosen witness.
fn falsify_chart(rep: &WitnessReport, base: GridCfg) -> Result<String, String> {
    let phi1 = rep.claim.phi.diff_symbolic(&rep.claim.phi_var);
    let index = rep.claim.output_index();
    let mut ladder: Vec<u64> = Vec::new();
    let mut m = 100u64;
    while m < rep.n {
        ladder.push(m);
        m = m.saturating_mul(10);
    }
    if rep.n > 0 {
        ladder.push(rep.n);
    }
    let mut measured = Vec::new();
    let mut certified = Vec::new();
    for &m in &ladder {
        let u = ctx("witness", build_trig_witness(m, rep.claim.i0, rep.claim.s0))?;
        let shifted = expr::add(expr::konst(rep.claim.s0), u.expr().clone());
        let composed = ctx(
            "composition",
            PeriodicFn::new(phi1.substitute(&rep.claim.phi_var, &shifted), "s"),
        )?;
        let cfg = GridCfg {
            resolution: base.resolution.max(16usize.saturating_mul(m as usize)),
            ..base
        };
        let v = ctx("seminorm", seminorm_sup(&composed, index, cfg))?.value;
        let lx = (m as f64).log10();
        measured.push((lx, v.log10()));
        let y = (2.0 * PI * m as f64).sqrt();
        let lower = rep.a * y - rep.m2.m2 * (1.0 + 1.0 / y).powi(index as i32);
        if lower > 0.0 {
            certified.push((lx, lower.log10()));
        }
    }
    Ok(line_chart(
        "composed derivative growth",
        "log10 n",
        "log10 seminorm",
        &[
            Series { label: "measured".into(), points: measured },
            Series { label: "certified lower".into(), points: certified },
        ],
    ))
}

fn run_gateaux(a: GateauxArgs) -> Result<ExitCode, String> {
    let phi = parse_flag("--phi", &a.phi, &["t"])?;
    let x = ctx("--x", PeriodicFn::new(parse_flag("--x", &a.x, &["s"])?, "s"))?;
    let u = ctx("--u", PeriodicFn::new(parse_flag("--u", &a.u, &["s"])?, "s"))?;
    let cfg = a.grid.cfg();

    let mut residuals = Vec::with_capacity(a.steps.len());
    for &h in &a.steps {
        residuals.push(ctx("quotient", gateaux_quotient(&phi, "t", &x, &u, h, a.index, cfg))?);
    }
    let op = ctx("derivative", gateaux_analytic(&phi, "t", &x))?;
    let one = PeriodicFn::constant(1.0, "s");
    let multiplier_norm_lower = ctx("operator norm", op.norm_lower(a.index, &one, cfg))?;
    let analytic_norm = ctx(
        "seminorm",
        seminorm_sup(&ctx("apply", op.apply(&u))?, a.index, cfg),
    )?
    .value;

    // residuals at the level of evaluation roundoff mean the quotient
    // already equals the derivative; a slope fit would chase noise
    let floor = 1e-12 * (1.0 + analytic_norm);
    let max_res = residuals.iter().fold(0.0f64, |acc, r| acc.max(r.residual));
    let exact = max_res <= floor;
    let slope = if exact { None } else { loglog_slope(&residuals).ok() };
    let slope_ok = slope.map(|s| (s - 1.0).abs() <= 0.1).unwrap_or(false);
    let verdict = if exact || slope_ok { "verified" } else { "inconclusive" };

    let continuity = if a.probes > 0 {
        Some(ctx(
            "continuity probe",
            cb_continuity_probe(&phi, "t", &x, a.i0, a.delta, a.index, a.probes, a.output.seed, cfg),
        )?)
    } else {
        None
    };

    let rep = report::GateauxReport {
        pipeline: "gateaux-check",
        phi: a.phi.clone(),
        x: a.x.clone(),
        u: a.u.clone(),
        index: a.index,
        residuals: residuals.clone(),
        slope,
        multiplier_norm_lower,
        continuity,
        verdict,
        seed: a.output.seed,
        version: report::VERSION,
    };
    emit_json(a.output.out.as_ref(), &rep)?;

    if let Some(p) = &a.output.csv {
        let rows: Vec<Vec<String>> =
            residuals.iter().map(|r| vec![num(r.step), num(r.residual)]).collect();
        write_csv(p, &["step", "residual"], &rows)?;
    }
    if let Some(p) = &a.output.svg {
        let pts: Vec<(f64, f64)> = residuals
            .iter()
            .filter(|r| r.residual > 0.0)
            .map(|r| (r.step.abs().log10(), r.residual.log10()))
            .collect();
        let reference = match pts.iter().max_by(|p, q| p.0.total_cmp(&q.0)) {
            Some(&(hx, hy)) => pts.iter().map(|&(x, _)| (x, hy + (x - hx))).collect(),
            None => Vec::new(),
        };
        write_svg(
            p,
            &line_chart(
                "difference quotient residual",
                "log10 step",
                "log10 residual",
                &[
                    Series { label: "residual".into(), points: pts },
                    Series { label: "slope 1 reference".into(), points: reference },
                ],
            ),
        )?;
    }
    Ok(if verdict == "verified" { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn run_bump(a: BumpArgs) -> Result<ExitCode, String> {
    let dim = a.dim.unwrap_or(a.alpha.len());
    let origin_f = ctx("bump monomial", build_bump_monomial(dim, &a.alpha, 1.0))?;
    let calibration = ctx(
        "calibration",
        bump_bound_check(&origin_f, &a.alpha, 1.0, f64::INFINITY, a.resolution),
    )?;
    let bound = a.bound.unwrap_or(calibration.max_ratio * 1.01);

    let origin_partial = ctx("origin partial", origin_f.partial_at(&a.alpha, &vec![0.0; dim]))?;
    let origin_factorial: f64 = a.alpha.iter().map(|&k| factorial(k)).product();
    let origin_ok =
        (origin_partial - origin_factorial).abs() <= 1e-10 * origin_factorial.max(1.0);

    let mut rows = Vec::with_capacity(a.deltas.len());
    for &delta in &a.deltas {
        let f = ctx("bump monomial", build_bump_monomial(dim, &a.alpha, delta))?;
        let r = ctx("bound check", bump_bound_check(&f, &a.alpha, delta, bound, a.resolution))?;
        rows.push(report::BumpRow {
            delta,
            max_ratio: r.max_ratio,
            bound: r.bound,
            passes: r.passes,
            worst_kappa: r.worst_kappa,
        });
    }
    let all_pass = rows.iter().all(|r| r.passes);
    let verdict = if all_pass && origin_ok { "verified" } else { "inconclusive" };

    let rep = report::BumpReport {
        pipeline: "bump-check",
        dim,
        alpha: a.alpha.clone(),
        origin_partial,
        origin_factorial,
        calibrated_bound: bound,
        rows,
        verdict,
        seed: a.output.seed,
        version: report::VERSION,
    };
    emit_json(a.output.out.as_ref(), &rep)?;

    if let Some(p) = &a.output.csv {
        let rows: Vec<Vec<String>> = rep
            .rows
            .iter()
            .map(|r| {
                vec![num(r.delta), num(r.max_ratio), num(r.bound), r.passes.to_string()]
            })
            .collect();
        write_csv(p, &["delta", "max_ratio", "bound", "passes"], &rows)?;
    }
    if let Some(p) = &a.output.svg {
        let pts: Vec<(f64, f64)> =
            rep.rows.iter().map(|r| ((1.0 / r.delta).log10(), r.max_ratio)).collect();
        let cap: Vec<(f64, f64)> =
            rep.rows.iter().map(|r| ((1.0 / r.delta).log10(), r.bound)).collect();
        write_svg(
            p,
            &line_chart(
                "scaled derivative ratios",
                "log10 (1/delta)",
                "ratio",
                &[
                    Series { label: "max ratio".into(), points: pts },
                    Series { label: "bound".into(), points: cap },
                ],
            ),
        )?;
    }
    Ok(if verdict == "verified" { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run_transport(a: TransportArgs) -> Result<ExitCode, String> {
    let phi3 = parse_flag("--phi3", &a.phi3, &["t", "eta", "xi"])?;
    let y = match &a.shift {
        Some(text) => {
            let x = ctx("--shift", PeriodicFn::new(parse_flag("--shift", text, &["s"])?, "s"))?;
            op_s(&x)
        }
        None => CylinderFn::zero(),
    };
    let table = ctx("growth demo", transport_growth_demo(&phi3, &y, a.t0, a.i0, &a.deltas))?;

    let locally_linear = !table.nonlinear
        && table.rows.iter().all(|r| r.derivative_distance.abs() <= 1e-12);
    let verdict = if table.nonlinear {
        "growth"
    } else if locally_linear {
        "locally_linear"
    } else {
        "inconclusive"
    };

    let rep = report::TransportReport {
        pipeline: "transport-demo",
        phi3: a.phi3.clone(),
        t0: table.t0,
        i0: table.i0,
        nonlinear: table.nonlinear,
        rows: table.rows.clone(),
        verdict,
        seed: a.output.seed,
        version: report::VERSION,
    };
    emit_json(a.output.out.as_ref(), &rep)?;

    if let Some(p) = &a.output.csv {
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| {
                vec![
                    num(r.delta),
                    num(r.g_seminorm_i0),
                    num(r.exact_partial_lower),
                    num(r.derivative_distance),
                ]
            })
            .collect();
        write_csv(
            p,
            &["delta", "g_seminorm_i0", "exact_partial_lower", "derivative_distance"],
            &rows,
        )?;
    }
    if let Some(p) = &a.output.svg {
        let x = |d: f64| (1.0 / d).log10();
        let norms: Vec<(f64, f64)> =
            table.rows.iter().map(|r| (x(r.delta), r.g_seminorm_i0.log10())).collect();
        let dists: Vec<(f64, f64)> =
            table.rows.iter().map(|r| (x(r.delta), r.derivative_distance.log10())).collect();
        write_svg(
            p,
            &line_chart(
                "perturbation size against derivative movement",
                "log10 (1/delta)",
                "log10 value",
                &[
                    Series { label: "perturbation seminorm".into(), points: norms },
                    Series { label: "derivative distance".into(), points: dists },
                ],
            ),
        )?;
    }
    Ok(if verdict == "inconclusive" { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn run_seminorm(a: SeminormArgs) -> Result<ExitCode, String> {
    let f = ctx("--f", PeriodicFn::new(parse_flag("--f", &a.f, &["s"])?, "s"))?;
    let cfg = a.grid.cfg();
    let mut per_index = Vec::with_capacity(a.index + 1);
    for k in 0..=a.index {
        per_index.push(ctx("seminorm", seminorm_sup(&f, k, cfg))?.value);
    }
    let value = per_index[a.index];

    let rep = report::SeminormReport {
        pipeline: "seminorm",
        f: a.f.clone(),
        index: a.index,
        value,
        per_index: per_index.clone(),
        grid: report::grid_section(cfg),
        verdict: "evaluated",
        seed: a.output.seed,
        version: report::VERSION,
    };
    emit_json(a.output.out.as_ref(), &rep)?;

    if let Some(p) = &a.output.csv {
        let rows: Vec<Vec<String>> = per_index
            .iter()
            .enumerate()
            .map(|(k, v)| vec![k.to_string(), num(*v)])
            .collect();
        write_csv(p, &["index", "value"], &rows)?;
    }
    if let Some(p) = &a.output.svg {
        let pts: Vec<(f64, f64)> =
            per_index.iter().enumerate().map(|(k, v)| (k as f64, *v)).collect();
        write_svg(
            p,
            &line_chart(
                "seminorm by index",
                "index",
                "value",
                &[Series { label: "seminorm".into(), points: pts }],
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}
