mod input;
mod output;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use treeshift::analysis::{
    adjoint_eigen_residual, bpe_profile, is_bpe, kernel, path_bpe_radius, path_r2, r2_plus,
    spectral_report, BpeVerdict, ReportOptions, Trend, DEFAULT_GUARD, DEFAULT_PATH_BUDGET,
};
use treeshift::checks::{verify, VerifyOptions};
use treeshift::multiplier::{coefficient_bound_check, multiplier_norm_upper, Symbol, DEFAULT_GRID};
use treeshift::oracle::{materialize_multiplier, operator_norm, DEFAULT_DENSE_BUDGET};
use treeshift::shift::{boundedness_margin, power_norms};
use treeshift::{TruncationDiagnostic, VertexId, WeightedTree};

use input::{load_symbol, load_tree, parse_complex, TreeOptions};
use output::{fmt_f64, to_json, Csv};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Compute(#[from] treeshift::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Weighted shifts on rooted directed trees: norms, bounded point
/// evaluations, path radii and multipliers.
#[derive(Parser, Debug)]
#[command(name = "treeshift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Built-in profile (`t20`, `kary`, `kary:κ`, `ray`) or tree JSON file.
    #[arg(long, global = true, default_value = "t20")]
    tree: String,
    /// Weight JSON file; defaults to the family's normalized weights.
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
    /// Horizon depth, overriding the profile or file.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Arity of a κ-ary tree.
    #[arg(long, global = true)]
    kappa: Option<usize>,
    /// Store a κ-ary tree in full only while the vertex budget allows, then
    /// one descending chain per vertex.
    #[arg(long, global = true)]
    capped: bool,
    /// Vertex budget for κ-ary trees.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Power of the shift (`norm`) or largest power used (`report`, `mult`).
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Point `re` or `re,im`; repeatable.
    #[arg(long = "at", global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    at: Vec<Complex64>,
    /// Symbol JSON, inline or as a file path.
    #[arg(long, global = true)]
    symbol: Option<String>,
    /// Guard band (`bpe`), residual tolerance (`kernel`), tolerance scale
    /// (`verify`).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Path budget for path enumeration.
    #[arg(long, global = true, default_value_t = DEFAULT_PATH_BUDGET)]
    paths: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// ‖Sᵏ‖ by the vertex-supremum formula.
    Norm,
    /// Depth-slice sums and the bounded point evaluation radius.
    Bpe,
    /// Path radii r₂ and r₂⁺, and path bpe radii.
    Paths,
    /// Norm bounds and coefficient margins for a multiplier symbol.
    Mult,
    /// Evaluation kernels and their eigen-residuals.
    Kernel,
    /// Assembled spectral report.
    Report,
    /// Run the property suite; exits 1 when a check fails.
    Verify,
}

struct Rendered {
    text: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            if let Err(e) = emit(&cli, &r.text) {
                eprintln!("treeshift: {e}");
                return ExitCode::from(e.exit_code());
            }
            if r.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("treeshift: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => match io::stdout().lock().write_all(text.as_bytes()) {
            // A closed reader (`| head`) is not an error.
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                Err(CliError::Io(format!("stdout: {e}")))
            }
            _ => Ok(()),
        },
    }
}

fn run(cli: &Cli) -> Result<Rendered, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let wt = load_tree(&TreeOptions {
        tree: &cli.tree,
        weights: cli.weights.as_deref(),
        depth: cli.depth,
        kappa: cli.kappa,
        capped: cli.capped,
        budget: cli.budget,
    })?;
    let ok = |text| Ok(Rendered { text, ok: true });
    match cli.command {
        Command::Norm => ok(cmd_norm(cli, &wt)?),
        Command::Bpe => ok(cmd_bpe(cli, &wt)?),
        Command::Paths => ok(cmd_paths(cli, &wt)?),
        Command::Mult => ok(cmd_mult(cli, &wt)?),
        Command::Kernel => ok(cmd_kernel(cli, &wt)?),
        Command::Report => ok(cmd_report(cli, &wt)?),
        Command::Verify => cmd_verify(cli, &wt),
    }
}

fn label(wt: &WeightedTree, v: VertexId) -> String {
    wt.tree.label(v).to_string()
}

#[derive(Serialize)]
struct NormOut {
    k: usize,
    value: f64,
    squared: f64,
    argmax: VertexId,
    argmax_label: String,
    stabilized_at: usize,
    diagnostic: TruncationDiagnostic,
    bounded_trend: Option<bool>,
}

fn cmd_norm(cli: &Cli, wt: &WeightedTree) -> Result<String, CliError> {
    let k = cli.k.unwrap_or(1);
    if k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let norms = power_norms(wt, k)?;
    if cli.format == Format::Csv {
        let mut csv = Csv::new(&[
            "k",
            "value",
            "squared",
            "argmax",
            "argmax_label",
            "stabilized_at",
        ]);
        for p in &norms {
            csv.row([
                p.k.to_string(),
                fmt_f64(p.value),
                fmt_f64(p.squared),
                p.argmax.to_string(),
                label(wt, p.argmax),
                p.stabilized_at.to_string(),
            ]);
        }
        return Ok(csv.finish());
    }
    let p = norms.last().expect("k ≥ 1");
    let trend = (k == 1).then(|| !boundedness_margin(wt).unbounded_trend);
    to_json(&NormOut {
        k,
        value: p.value,
        squared: p.squared,
        argmax: p.argmax,
        argmax_label: label(wt, p.argmax),
        stabilized_at: p.stabilized_at,
        diagnostic: p.diagnostic,
        bounded_trend: trend,
    })
}

#[derive(Serialize)]
struct BpeOut {
    radius: f64,
    c_head: Vec<f64>,
    window_low: f64,
    window_high: f64,
    window_spread: f64,
    unstable: bool,
    diagnostic: TruncationDiagnostic,
    verdicts: Vec<BpeVerdict>,
}

fn cmd_bpe(cli: &Cli, wt: &WeightedTree) -> Result<String, CliError> {
    let p = bpe_profile(wt)?;
    if cli.format == Format::Csv {
        let mut csv = Csv::new(&["k", "c_k", "log_c_k", "root"]);
        for (k, (c, lc)) in p.c.iter().zip(&p.log_c).enumerate() {
            let root = if k == 0 {
                f64::NAN
            } else {
                (lc / (2 * k) as f64).exp()
            };
            csv.row([k.to_string(), fmt_f64(*c), fmt_f64(*lc), fmt_f64(root)]);
        }
        return Ok(csv.finish());
    }
    let guard = cli.tol.unwrap_or(DEFAULT_GUARD);
    to_json(&BpeOut {
        radius: p.radius_estimate,
        c_head: p.c.iter().take(16).copied().collect(),
        window_low: p.window_low,
        window_high: p.window_high,
        window_spread: p.window_spread,
        unstable: p.unstable,
        diagnostic: p.diagnostic,
        verdicts: cli.at.iter().map(|&w| is_bpe(&p, w, guard)).collect(),
    })
}

#[derive(Serialize)]
struct PathOut {
    end: VertexId,
    end_label: String,
    r2: f64,
    r2_window_spread: f64,
    trend: Trend,
    r2_diagnostic: TruncationDiagnostic,
    bpe_radius: f64,
    bpe_window_spread: f64,
    bpe_diagnostic: TruncationDiagnostic,
}

#[derive(Serialize)]
struct PathsOut {
    paths: Vec<PathOut>,
    paths_complete: bool,
    r2_plus: treeshift::analysis::R2Plus,
}

fn cmd_paths(cli: &Cli, wt: &WeightedTree) -> Result<String, CliError> {
    let enumeration = wt.tree.enumerate_paths(cli.paths);
    if cli.format == Format::Csv {
        let mut csv = Csv::new(&["path", "end_label", "k", "a_k"]);
        for (i, p) in enumeration.paths.iter().enumerate() {
            let r = path_r2(wt, p)?;
            for (k, a) in r.samples.iter().enumerate() {
                csv.row([
                    i.to_string(),
                    label(wt, p.end()),
                    (k + 1).to_string(),
                    fmt_f64(*a),
                ]);
            }
        }
        return Ok(csv.finish());
    }
    let paths = enumeration
        .paths
        .iter()
        .map(|p| {
            let r = path_r2(wt, p)?;
            let b = path_bpe_radius(wt, p)?;
            Ok(PathOut {
                end: p.end(),
                end_label: label(wt, p.end()),
                r2: r.r2_estimate,
                r2_window_spread: r.window_spread,
                trend: r.trend,
                r2_diagnostic: r.diagnostic,
                bpe_radius: b.radius,
                bpe_window_spread: b.window_spread,
                bpe_diagnostic: b.diagnostic,
            })
        })
        .collect::<Result<Vec<_>, treeshift::Error>>()?;
    to_json(&PathsOut {
        paths,
        paths_complete: enumeration.complete,
        r2_plus: r2_plus(wt, cli.paths)?,
    })
}

#[derive(Serialize)]
struct Evaluation {
    w: Complex64,
    value: Complex64,
}

#[derive(Serialize)]
struct MultOut {
    symbol: Symbol,
    norm_s: f64,
    sup_norm: treeshift::multiplier::SupNormBound,
    lower_bound: f64,
    oracle_norm: Option<f64>,
    coefficient_margins: Vec<treeshift::multiplier::CoefficientMargin>,
    evaluations: Vec<Evaluation>,
}

fn cmd_mult(cli: &Cli, wt: &WeightedTree) -> Result<String, CliError> {
    let arg = cli
        .symbol
        .as_deref()
        .ok_or_else(|| CliError::Usage("mult needs --symbol".into()))?;
    let phi = load_symbol(arg)?;
    let n = wt.tree.horizon();
    let kmax = cli
        .k
        .unwrap_or_else(|| phi.support_bound().unwrap_or(20))
        .min(n);
    let norm_s = power_norms(wt, 1)?[0].value;
    let sup_norm = multiplier_norm_upper(&phi, norm_s, DEFAULT_GRID)?;
    let oracle_norm = if phi.support_bound().is_some() && wt.n_vertices() <= DEFAULT_DENSE_BUDGET {
        Some(operator_norm(&materialize_multiplier(wt, &phi)?)?)
    } else {
        None
    };
    let reference = oracle_norm.unwrap_or(sup_norm.certified);
    let margins = coefficient_bound_check(wt, &phi, reference, kmax)?;
    let lower_bound = margins
        .iter()
        .map(|m| m.coeff_abs * m.power_norm)
        .fold(0.0, f64::max);
    if cli.format == Format::Csv {
        let mut csv = Csv::new(&["k", "coeff_re", "coeff_im", "power_norm", "margin"]);
        for m in &margins {
            let c = phi.coeff(m.k);
            csv.row([
                m.k.to_string(),
                fmt_f64(c.re),
                fmt_f64(c.im),
                fmt_f64(m.power_norm),
                fmt_f64(m.margin),
            ]);
        }
        return Ok(csv.finish());
    }
    let evaluations = cli
        .at
        .iter()
        .map(|&w| {
            Ok(Evaluation {
                w,
                value: phi.eval(w)?,
            })
        })
        .collect::<Result<Vec<_>, treeshift::Error>>()?;
    to_json(&MultOut {
        symbol: phi,
        norm_s,
        sup_norm,
        lower_bound,
        oracle_norm,
        coefficient_margins: margins,
        evaluations,
    })
}

/// Kernel values listed in JSON output, in BFS order.
const KERNEL_LISTING: usize = 256;

#[derive(Serialize)]
struct KernelValue {
    vertex: VertexId,
    label: String,
    depth: usize,
    value: Complex64,
}

#[derive(Serialize)]
struct KernelOut {
    w: Complex64,
    verdict: Option<BpeVerdict>,
    eigen_residual: Option<treeshift::analysis::EigenResidual>,
    eigen_ok: Option<bool>,
    max_abs: f64,
    values: Vec<KernelValue>,
    values_truncated: bool,
}

fn cmd_kernel(cli: &Cli, wt: &WeightedTree) -> Result<String, CliError> {
    if cli.at.is_empty() {
        return Err(CliError::Usage("kernel needs at least one --at".into()));
    }
    let tol = cli.tol.unwrap_or(1e-10);
    if cli.format == Format::Csv {
        let mut csv = Csv::new(&["w_re", "w_im", "vertex", "label", "depth", "re", "im"]);
        for &w in &cli.at {
            let k = kernel(wt, w);
            for v in wt.tree.bfs_order() {
                let z = k.values[v.0];
                csv.row([
                    fmt_f64(w.re),
                    fmt_f64(w.im),
                    v.to_string(),
                    label(wt, v),
                    wt.tree.depth(v).to_string(),
                    fmt_f64(z.re),
                    fmt_f64(z.im),
                ]);
            }
        }
        return Ok(csv.finish());
    }
    let profile = bpe_profile(wt).ok();
    let normalized = wt.weights.is_normalized();
    let out = cli
        .at
        .iter()
        .map(|&w| {
            let k = kernel(wt, w);
            let residual = if normalized {
                Some(adjoint_eigen_residual(
                    wt,
                    w,
                    wt.tree.horizon().saturating_sub(1),
                )?)
            } else {
                None
            };
            Ok(KernelOut {
                w,
                verdict: profile.as_ref().map(|p| is_bpe(p, w, DEFAULT_GUARD)),
                eigen_ok: residual.as_ref().map(|r| r.within(tol)),
                eigen_residual: residual,
                max_abs: k.max_abs(),
                values: wt
                    .tree
                    .bfs_order()
                    .take(KERNEL_LISTING)
                    .map(|v| KernelValue {
                        vertex: v,
                        label: label(wt, v),
                        depth: wt.tree.depth(v),
                        value: k.values[v.0],
                    })
                    .collect(),
                values_truncated: wt.n_vertices() > KERNEL_LISTING,
            })
        })
        .collect::<Result<Vec<_>, treeshift::Error>>()?;
    to_json(&out)
}

fn cmd_report(cli: &Cli, wt: &WeightedTree) -> Result<String, CliError> {
    let opts = ReportOptions {
        kmax: cli.k.unwrap_or(ReportOptions::default().kmax),
        path_budget: cli.paths,
        ..ReportOptions::default()
    };
    let report = spectral_report(wt, &opts)?;
    if cli.format == Format::Csv {
        let profile = bpe_profile(wt).ok();
        let mut csv = Csv::new(&["k", "c_k", "gelfand"]);
        let rows = profile
            .as_ref()
            .map_or(0, |p| p.c.len())
            .max(report.gelfand_seq.sequence.len() + 1);
        for k in 0..rows {
            let c = profile
                .as_ref()
                .and_then(|p| p.c.get(k))
                .map_or(String::new(), |c| fmt_f64(*c));
            let g = k
                .checked_sub(1)
                .and_then(|i| report.gelfand_seq.sequence.get(i))
                .map_or(String::new(), |g| fmt_f64(*g));
            csv.row([k.to_string(), c, g]);
        }
        return Ok(csv.finish());
    }
    to_json(&report)
}

fn cmd_verify(cli: &Cli, wt: &WeightedTree) -> Result<Rendered, CliError> {
    let opts = VerifyOptions {
        tol_scale: cli.tol.unwrap_or(1.0),
        ..VerifyOptions::default()
    };
    let report = verify(wt, &opts);
    let text = if cli.format == Format::Csv {
        let mut csv = Csv::new(&["name", "passed", "value", "tolerance", "detail"]);
        for c in &report.checks {
            csv.row([
                c.name.to_string(),
                c.passed.to_string(),
                fmt_f64(c.value),
                fmt_f64(c.tolerance),
                c.detail.clone(),
            ]);
        }
        csv.finish()
    } else {
        to_json(&report)?
    };
    Ok(Rendered {
        text,
        ok: report.passed,
    })
}
