use std::io::Write;
use std::path::Path;

use l1fit::synth::{run_simulation, BreakpointSource, SimulationSummary, PENALTY_LABELS};
use l1fit::{
    build_dual_certificate, fit_line, fit_line_preserving, l0_count, solution_path_with_parts, solve_subproblem,
    DataMatrix, LineFit, RatioList, SimConfig,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{BreakpointChoice, Cli, Command, Format, GlobalOpts, SimulateArgs};
use crate::document::{fingerprint, PathDocument};
use crate::error::{CliError, CliResult};
use crate::input::read_input;
use crate::number::{fmt_num, fmt_vec};

/// Runs a parsed command line, writing results to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let mut buf = Vec::new();
    let result = if cli.global.threads == 0 {
        dispatch(cli, &mut buf)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build()
            .map_err(|e| CliError::Validation(format!("cannot start {} threads: {e}", cli.global.threads)))?;
        pool.install(|| dispatch(cli, &mut buf))
    };
    out.write_all(&buf)?;
    result
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let g = &cli.global;
    if !(g.tol.is_finite() && g.tol >= 0.0) {
        return Err(CliError::Validation(format!("--tol must be nonnegative, got {}", g.tol)));
    }
    match &cli.command {
        Command::Fit { input, lambda } => cmd_fit(g, input, *lambda, out),
        Command::Path { input, per_coordinate } => cmd_path(g, input, *per_coordinate, out),
        Command::Simulate(args) => cmd_simulate(g, args, out),
        Command::Certify {
            input,
            lambdas,
            corrupt,
        } => cmd_certify(g, input, lambdas, *corrupt, out),
    }
}

fn one_based(p: Option<usize>) -> String {
    p.map_or_else(|| "none".into(), |p| (p + 1).to_string())
}

pub fn cmd_fit(g: &GlobalOpts, input: &Path, lambda: f64, out: &mut dyn Write) -> CliResult<()> {
    let data = read_input(input)?.data;
    let fit = fit_line(&data, lambda)?;
    write_fit(g, &fit, out)
}

fn write_fit(g: &GlobalOpts, fit: &LineFit, out: &mut dyn Write) -> CliResult<()> {
    let l0 = l0_count(&fit.v, g.tol);
    match g.format {
        Format::Text => {
            writeln!(out, "lambda: {}", fmt_num(fit.lambda))?;
            writeln!(out, "preserved: {}", one_based(fit.preserved))?;
            writeln!(out, "z: {}", fmt_num(fit.z))?;
            writeln!(out, "l0: {l0}")?;
            writeln!(out, "v: {}", fmt_vec(&fit.v))?;
        }
        Format::Json => {
            let doc = json!({
                "lambda": fit.lambda,
                "preserved": fit.preserved.map(|p| p + 1),
                "z": fit.z,
                "l0": l0,
                "v": fit.v,
                "alpha": fit.alpha,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json value"))?;
        }
    }
    Ok(())
}

pub fn cmd_path(g: &GlobalOpts, input: &Path, per_coordinate: bool, out: &mut dyn Write) -> CliResult<()> {
    let input = read_input(input)?;
    let (path, parts) = solution_path_with_parts(&input.data)?;
    let mut doc = PathDocument::new(&path, input.data.n(), fingerprint(&input.bytes));
    if per_coordinate {
        doc = doc.with_per_coordinate(&parts);
    }
    match g.format {
        Format::Json => writeln!(out, "{}", doc.to_json())?,
        Format::Text => write_path_text(&doc, out)?,
    }
    Ok(())
}

fn fmt_bound(b: &crate::document::Bound) -> String {
    b.0.finite().map_or_else(|| "inf".into(), fmt_num)
}

fn write_path_text(doc: &PathDocument, out: &mut dyn Write) -> CliResult<()> {
    writeln!(out, "schema_version: {}", doc.schema_version)?;
    writeln!(out, "fingerprint: {}", doc.fingerprint)?;
    writeln!(out, "n: {}", doc.n)?;
    writeln!(out, "m: {}", doc.m)?;
    writeln!(out, "intervals: {}", doc.intervals.len())?;
    for r in &doc.intervals {
        writeln!(
            out,
            "interval: lo={} hi={} preserved={} error_intercept={} l1_slope={} v={}",
            fmt_num(r.lo),
            fmt_bound(&r.hi),
            r.preserved.map_or_else(|| "none".into(), |p| p.to_string()),
            fmt_num(r.error_intercept),
            fmt_num(r.l1_slope),
            fmt_vec(&r.v).replace(' ', ","),
        )?;
    }
    for r in &doc.multi_crossing {
        writeln!(out, "multi_crossing: lo={} hi={}", fmt_num(r.lo), fmt_bound(&r.hi))?;
    }
    for c in doc.per_coordinate.iter().flatten() {
        writeln!(out, "breakpoints: preserved={} lambda={}", c.preserved, fmt_vec(&c.breakpoints).replace(' ', ","))?;
        for s in &c.segments {
            writeln!(
                out,
                "segment: preserved={} lo={} hi={} intercept={} slope={}",
                c.preserved,
                fmt_num(s.lo),
                fmt_bound(&s.hi),
                fmt_num(s.intercept),
                fmt_num(s.slope),
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MomentsJson {
    mean: f64,
    sd: f64,
}

#[derive(Serialize)]
struct MethodJson {
    method: &'static str,
    l0: MomentsJson,
    discordance: MomentsJson,
}

#[derive(Serialize)]
struct ReplicationJson {
    seed: u64,
    lambdas: [f64; 4],
    degenerate: bool,
    baseline_l0: usize,
    baseline_discordance: f64,
    baseline_converged: bool,
    l0: [usize; 4],
    discordance: [f64; 4],
}

pub fn cmd_simulate(g: &GlobalOpts, args: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut config = SimConfig::new(args.n, args.m, args.nc, args.mc, args.seed);
    config.noise_scale = args.noise_scale;
    config.outlier_scale = args.outlier_scale;
    let source = match args.breakpoints {
        BreakpointChoice::Merged => BreakpointSource::Merged,
        BreakpointChoice::Union => BreakpointSource::Union,
    };
    let summary = run_simulation(&config, args.reps, source, g.tol)?;
    match g.format {
        Format::Text => write_simulation_text(args, &summary, out),
        Format::Json => {
            let doc = json!({
                "config": {
                    "n": args.n, "m": args.m, "nc": args.nc, "mc": args.mc, "reps": args.reps,
                    "seed": args.seed, "noise_scale": args.noise_scale,
                    "outlier_scale": args.outlier_scale,
                    "breakpoints": format!("{:?}", args.breakpoints).to_lowercase(),
                },
                "methods": summary.methods.iter().map(|m| MethodJson {
                    method: m.label,
                    l0: MomentsJson { mean: m.l0.mean, sd: m.l0.sd },
                    discordance: MomentsJson { mean: m.discordance.mean, sd: m.discordance.sd },
                }).collect::<Vec<_>>(),
                "replications": summary.replications.iter().enumerate().map(|(r, rep)| ReplicationJson {
                    seed: config.replication(r).seed,
                    lambdas: rep.lambdas,
                    degenerate: rep.summary.degenerate,
                    baseline_l0: rep.baseline.l0,
                    baseline_discordance: rep.baseline.discordance,
                    baseline_converged: rep.baseline_converged,
                    l0: rep.regularized.map(|s| s.l0),
                    discordance: rep.regularized.map(|s| s.discordance),
                }).collect::<Vec<_>>(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json value"))?;
            Ok(())
        }
    }
}

fn write_simulation_text(args: &SimulateArgs, summary: &SimulationSummary, out: &mut dyn Write) -> CliResult<()> {
    writeln!(out, "n: {}", args.n)?;
    writeln!(out, "m: {}", args.m)?;
    writeln!(out, "nc: {}", args.nc)?;
    writeln!(out, "mc: {}", args.mc)?;
    writeln!(out, "reps: {}", args.reps)?;
    writeln!(out, "seed: {}", args.seed)?;
    for m in &summary.methods {
        writeln!(
            out,
            "method: {} l0_mean={} l0_sd={} discordance_mean={} discordance_sd={}",
            m.label,
            fmt_num(m.l0.mean),
            fmt_num(m.l0.sd),
            fmt_num(m.discordance.mean),
            fmt_num(m.discordance.sd),
        )?;
    }
    let reps = summary.replications.len() as f64;
    for (k, label) in PENALTY_LABELS.iter().enumerate().skip(1) {
        let mean = summary.replications.iter().map(|r| r.lambdas[k]).sum::<f64>() / reps;
        writeln!(out, "penalty: {label} mean={}", fmt_num(mean))?;
    }
    let degenerate = summary.replications.iter().filter(|r| r.summary.degenerate).count();
    writeln!(out, "degenerate_paths: {degenerate}")?;
    Ok(())
}

/// Certificates checked at one penalty.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub lambda: f64,
    pub certificates: usize,
    /// Largest `|dual - primal|` over the subproblems.
    pub max_gap: f64,
}

/// Certifies every subproblem of every usable preserved coordinate at
/// `lambda`, and checks that the certified parts add up to the fitted
/// objective.
pub fn certify_at(data: &DataMatrix, lambda: f64, corrupt: bool) -> CliResult<CertifyReport> {
    let mut report = CertifyReport {
        lambda,
        certificates: 0,
        max_gap: 0.0,
    };
    for p in (0..data.m()).filter(|&p| !data.column_is_zero(p)) {
        let mut total = lambda;
        for j in (0..data.m()).filter(|&j| j != p) {
            let list = RatioList::new(data, p, j)?;
            let s = solve_subproblem(&list, lambda)?;
            let mut cert = build_dual_certificate(&list, lambda, &s)?;
            if corrupt {
                cert.gamma += 1.0;
            }
            let dual = cert.verify(&list, lambda, s.value).map_err(|e| {
                CliError::Certification(format!("preserved {}, target {}, lambda {lambda}: {e}", p + 1, j + 1))
            })?;
            let primal = list.objective(s.value, lambda);
            report.max_gap = report.max_gap.max((dual - primal).abs());
            report.certificates += 1;
            total += primal + list.excluded_mass;
        }
        let z = fit_line_preserving(data, p, lambda)?.z;
        if (z - total).abs() > 1e-9 * z.abs().max(1.0) {
            return Err(CliError::Certification(format!(
                "preserved {}, lambda {lambda}: certified parts sum to {total}, fit reports {z}",
                p + 1
            )));
        }
    }
    Ok(report)
}

pub fn cmd_certify(
    g: &GlobalOpts,
    input: &Path,
    lambdas: &[f64],
    corrupt: bool,
    out: &mut dyn Write,
) -> CliResult<()> {
    let data = read_input(input)?.data;
    let reports = lambdas
        .iter()
        .map(|&l| certify_at(&data, l, corrupt))
        .collect::<CliResult<Vec<_>>>()?;
    match g.format {
        Format::Text => {
            for r in &reports {
                writeln!(
                    out,
                    "lambda: {} certificates={} max_gap={}",
                    fmt_num(r.lambda),
                    r.certificates,
                    fmt_num(r.max_gap)
                )?;
            }
            writeln!(out, "status: ok")?;
        }
        Format::Json => {
            let doc = json!({ "status": "ok", "lambdas": reports });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json value"))?;
        }
    }
    Ok(())
}
