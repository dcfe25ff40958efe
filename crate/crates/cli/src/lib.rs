//! `seriate`: generate instances, reorder similarity matrices, score
//! orderings, run benchmark grids and threshold searches, recover
//! duplicated layouts and draw the results.
//!
//! Exit codes: 0 success, 1 i/o error, 2 malformed input, 3 disconnected
//! matrix, 4 any other failure.

pub mod bench;
pub mod files;
pub mod grid;
pub mod metrics;
pub mod plot;
pub mod solve;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use seriation::duplication::{feasibility_residual, relative_distance, StopReason};
use seriation::generators::{gen_banded, gen_dupli_instance, gen_weighted_banded, FragmentModel};
use seriation::{
    alt_proj_dupli, estimate_bandwidth, mean_assignment_distance, DiagonalBounds, InnerSolver, Permutation,
    SeriationError, Similarity,
};

pub use files::{CliError, CliResult};
use solve::{LossName, SolverName};

#[derive(Debug, Parser)]
#[command(name = "seriate", version, about = "Robust seriation and seriation with duplications")]
pub struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel commands; all cores when absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress progress and warnings on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic instance and its ground truth.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Order a similarity matrix.
    Reorder(ReorderArgs),
    /// Score an ordering as one CSV row.
    Eval(EvalArgs),
    /// Run a benchmark grid described by a TOML file.
    Bench(BenchArgs),
    /// Search a threshold grid for the best truncated-objective ordering.
    GridThreshold(GridArgs),
    /// Recover the fragment layout of a duplicated matrix.
    Dupli(DupliArgs),
    /// Draw an ordering or a matrix as SVG.
    Plot {
        #[command(subcommand)]
        kind: PlotKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Band matrix with random out-of-band entries under a hidden shuffle.
    /// Writes BASE.sim and BASE.perm.
    Banded {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: usize,
        /// Out-of-band pairs as a multiple of n − δ − 1.
        #[arg(long, default_value_t = 0.0)]
        s_ratio: f64,
        /// Graded band values and weaker out-of-band values instead of ones.
        #[arg(long)]
        weighted: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Duplication instance. Writes BASE.sim, BASE.counts, BASE.assign and
    /// the fragment-level matrix BASE.s.sim.
    Dupli {
        /// Number of fragments N.
        #[arg(long)]
        total: usize,
        /// N / number of bins.
        #[arg(long)]
        ratio: f64,
        #[arg(long, value_enum, default_value_t = ModelName::Banded)]
        model: ModelName,
        /// Band half-width; N/5 when absent.
        #[arg(long)]
        delta: Option<usize>,
        /// Out-of-band symmetric pairs.
        #[arg(long, default_value_t = 0)]
        s: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Relative multiplicative noise level.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Banded,
    Powerlaw,
}

#[derive(Debug, Args)]
pub struct ReorderArgs {
    pub matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverName::EtaSpectral)]
    pub solver: SolverName,
    /// Objective for ubi, faq and fwtb; huber for ubi and fwtb-init, 2sum
    /// for faq and fwtb when absent.
    #[arg(long, value_enum)]
    pub loss: Option<LossName>,
    /// Bandwidth for Huber widths and truncation levels; estimated from the
    /// number of stored entries when absent.
    #[arg(long)]
    pub delta: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Permutation output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub matrix: PathBuf,
    pub permutation: PathBuf,
    /// Reference ordering for Kendall-τ.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also compute the distance to the strong-R set (slow).
    #[arg(long)]
    pub dist2r: bool,
    #[arg(long)]
    pub delta: Option<usize>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub spec: PathBuf,
    /// Leave elapsed_s empty so repeated runs give identical files.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    pub matrix: PathBuf,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long, default_value_t = 24)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = SolverName::EtaSpectral)]
    pub solver: SolverName,
    #[arg(long, value_enum, default_value_t = LossName::Huber)]
    pub loss: LossName,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Per-threshold CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Best ordering.
    #[arg(long)]
    pub best: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InnerName {
    Spectral,
    EtaSpectral,
    HUbi,
}

#[derive(Debug, Args)]
pub struct DupliArgs {
    pub matrix: PathBuf,
    pub counts: PathBuf,
    #[arg(long, value_enum, default_value_t = InnerName::EtaSpectral)]
    pub inner: InnerName,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Bound diagonal `d` of the fragment matrix by `d^-γ`.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub truth_assign: Option<PathBuf>,
    #[arg(long)]
    pub truth_s: Option<PathBuf>,
    /// Writes BASE.assign and BASE.s.sim.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PlotKind {
    /// Reference position against recovered position.
    Scatter {
        #[arg(long)]
        perm: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Do not try the mirrored ordering.
        #[arg(long)]
        no_flip: bool,
        /// Also try every circular shift.
        #[arg(long)]
        shift: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grayscale matrix laid out by an ordering.
    Heatmap {
        matrix: PathBuf,
        /// Identity when absent.
        #[arg(long)]
        perm: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Serialize)]
struct ReorderSummary<'a> {
    solver: &'a str,
    loss: &'a str,
    objective: f64,
    iterations: usize,
    elapsed_s: f64,
    delta_hat: usize,
    warnings: &'a [String],
}

#[derive(Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct EvalRow {
    pub n: usize,
    pub nnz: usize,
    pub delta: usize,
    pub kendall_tau: Option<f64>,
    pub two_sum: f64,
    pub r2sum: f64,
    pub huber: f64,
    pub dist2r: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DupliSummary {
    residual: f64,
    relative_residual: f64,
    iterations: usize,
    converged_by: &'static str,
    /// Over the recovered layout and its mirror, whichever is closer.
    mean_dist: Option<f64>,
    mean_dist_std: Option<f64>,
    d2s: Option<f64>,
}

struct Ctx {
    seed: u64,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn json_line<S: Serialize>(v: &S) -> CliResult<()> {
    let s = serde_json::to_string(v).map_err(|e| CliError::invalid(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}").map_err(|e| SeriationError::from(e).into())
}

fn default_loss(solver: SolverName) -> LossName {
    match solver {
        SolverName::Faq | SolverName::Fwtb => LossName::TwoSum,
        _ => LossName::Huber,
    }
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| CliError::invalid(e.to_string()))?;
    }
    let ctx = Ctx { seed: cli.seed, quiet: cli.quiet };
    match cli.command {
        Command::Gen { kind } => cmd_gen(&ctx, kind),
        Command::Reorder(args) => cmd_reorder(&ctx, args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(&ctx, args),
        Command::GridThreshold(args) => cmd_grid(&ctx, args),
        Command::Dupli(args) => cmd_dupli(&ctx, args),
        Command::Plot { kind } => cmd_plot(&ctx, kind),
    }
}

fn cmd_gen(ctx: &Ctx, kind: GenKind) -> CliResult<()> {
    match kind {
        GenKind::Banded { n, delta, s_ratio, weighted, out } => {
            let inst = if weighted {
                gen_weighted_banded::<f64>(n, delta, s_ratio, ctx.seed)?
            } else {
                gen_banded::<f64>(n, delta, s_ratio, ctx.seed)?
            };
            files::write_similarity(&files::sidecar(&out, ".sim"), &inst.a)?;
            files::write_permutation(&files::sidecar(&out, ".perm"), &inst.truth)?;
            ctx.note(format!("n {n}, δ {delta}, {} out-of-band pairs, seed {}", inst.s, ctx.seed));
        }
        GenKind::Dupli { total, ratio, model, delta, s, gamma, noise, out } => {
            let model = match model {
                ModelName::Banded => FragmentModel::Banded { delta: delta.unwrap_or(total / 5), s },
                ModelName::Powerlaw => FragmentModel::PowerLaw { gamma },
            };
            let inst = gen_dupli_instance::<f64>(total, ratio, model, noise, ctx.seed)?;
            files::write_similarity(&files::sidecar(&out, ".sim"), &inst.a)?;
            files::write_counts(&files::sidecar(&out, ".counts"), &inst.counts)?;
            files::write_assignment(&files::sidecar(&out, ".assign"), &inst.z_true)?;
            files::write_similarity(&files::sidecar(&out, ".s.sim"), &Similarity::from_dense(&inst.s_true)?)?;
            ctx.note(format!("{total} fragments in {} bins, seed {}", inst.counts.bins(), ctx.seed));
        }
    }
    Ok(())
}

fn cmd_reorder(ctx: &Ctx, args: ReorderArgs) -> CliResult<()> {
    let a = files::read_similarity(&args.matrix)?;
    a.check_connected().map_err(|e| CliError::at(&args.matrix, e))?;
    let delta = args.delta.unwrap_or_else(|| estimate_bandwidth(&a).0);
    let loss = args.loss.unwrap_or_else(|| default_loss(args.solver));
    let report = solve::run(&a, args.solver, loss, Some(delta), args.max_iter)?;
    for w in &report.warnings {
        ctx.note(format!("warning: {w}"));
    }
    files::write_permutation(&args.out, &report.permutation)?;
    json_line(&ReorderSummary {
        solver: args.solver.as_str(),
        loss: report.kind.name(),
        objective: report.objective,
        iterations: report.iterations,
        elapsed_s: report.elapsed,
        delta_hat: delta,
        warnings: &report.warnings,
    })
}

fn check_len(path: &Path, p: &Permutation, n: usize) -> CliResult<()> {
    if p.len() != n {
        return Err(CliError::at(path, SeriationError::DimensionMismatch { expected: n, got: p.len() }));
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    let a = files::read_similarity(&args.matrix)?;
    let perm = files::read_permutation(&args.permutation)?;
    check_len(&args.permutation, &perm, a.n())?;
    let truth = args.truth.as_deref().map(files::read_permutation).transpose()?;
    if let (Some(t), Some(path)) = (&truth, &args.truth) {
        check_len(path, t, a.n())?;
    }
    let delta = args.delta.unwrap_or_else(|| estimate_bandwidth(&a).0);
    let s = metrics::score(&a, &perm, truth.as_ref(), delta, args.dist2r)?;
    let row = EvalRow {
        n: a.n(),
        nnz: a.nnz(),
        delta,
        kendall_tau: s.kendall_tau,
        two_sum: s.two_sum,
        r2sum: s.r2sum,
        huber: s.huber,
        dist2r: s.dist2r,
    };
    match &args.output {
        Some(path) => files::write_csv(path, &[row]),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.serialize(&row).map_err(files::csv_error)?;
            w.flush().map_err(SeriationError::from)?;
            Ok(())
        }
    }
}

fn cmd_bench(ctx: &Ctx, args: BenchArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.spec).map_err(|e| CliError::at(&args.spec, e.into()))?;
    let spec: bench::BenchmarkSpec = toml::from_str(&text).map_err(|e| {
        let line = e.span().map_or(1, |s| text[..s.start].matches('\n').count() + 1);
        CliError::at(&args.spec, SeriationError::Parse { line, message: e.message().to_string() })
    })?;
    spec.validate().map_err(|m| CliError::at(&args.spec, SeriationError::InvalidArgument(m)))?;
    let master = spec.seed.unwrap_or(ctx.seed);
    let quiet = ctx.quiet;
    let rows = bench::run(&spec, master, !args.no_timing, &|done, total| {
        if !quiet {
            eprintln!("cell {done}/{total}");
        }
    });
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    files::write_csv(&spec.output, &rows)?;
    files::write_csv(&spec.summary_path(), &bench::summarize(&rows))?;
    ctx.note(format!("{} rows, {failures} failed, written to {}", rows.len(), spec.output.display()));
    Ok(())
}

fn cmd_grid(ctx: &Ctx, args: GridArgs) -> CliResult<()> {
    let a = files::read_similarity(&args.matrix)?;
    let truth = args.truth.as_deref().map(files::read_permutation).transpose()?;
    let spec =
        grid::GridThresholdSpec { lo: args.lo, hi: args.hi, count: args.count, solver: args.solver, loss: args.loss };
    let result = grid::run(&a, &spec, truth.as_ref())?;
    files::write_csv(&args.output, &result.rows)?;
    match result.best {
        Some((k, perm)) => {
            files::write_permutation(&args.best, &perm)?;
            ctx.note(format!("best threshold {} (λ {})", result.rows[k].threshold, result.lambda.unwrap_or(0.0)));
            Ok(())
        }
        None if result.rows.iter().all(|r| r.components > 1) => {
            let sizes = a.connected_components().iter().map(Vec::len).collect();
            Err(CliError::at(&args.matrix, SeriationError::Disconnected { sizes }))
        }
        None => Err(CliError::invalid("the solver failed at every connected threshold")),
    }
}

fn cmd_dupli(ctx: &Ctx, args: DupliArgs) -> CliResult<()> {
    let a = files::read_similarity(&args.matrix)?;
    let counts = files::read_counts(&args.counts)?;
    let bounds = args.gamma.map(|g| DiagonalBounds::power_law(counts.total(), g)).transpose()?;
    let inner = match args.inner {
        InnerName::Spectral => InnerSolver::Spectral,
        InnerName::EtaSpectral => InnerSolver::EtaSpectral,
        InnerName::HUbi => InnerSolver::HUbi,
    };
    let report = alt_proj_dupli(&a, &counts, inner, args.max_iter, bounds.as_ref()).map_err(|e| match e {
        SeriationError::Disconnected { .. } => CliError::at(&args.matrix, e),
        e => e.into(),
    })?;
    files::write_assignment(&files::sidecar(&args.out, ".assign"), &report.z)?;
    files::write_similarity(&files::sidecar(&args.out, ".s.sim"), &Similarity::from_dense(&report.s)?)?;
    let norm = a.to_dense().frobenius_norm();
    let residual = feasibility_residual(&report.z, &report.s, &a)?;
    let dist = match &args.truth_assign {
        Some(p) => {
            let truth = files::read_assignment(p)?;
            let d = mean_assignment_distance(&truth, &report.z).map_err(|e| CliError::at(p, e))?;
            let f = mean_assignment_distance(&truth, &report.z.flipped()).map_err(|e| CliError::at(p, e))?;
            Some(if f.mean < d.mean { f } else { d })
        }
        None => None,
    };
    let d2s = match &args.truth_s {
        Some(p) => {
            Some(relative_distance(&files::read_similarity(p)?.to_dense(), &report.s).map_err(|e| CliError::at(p, e))?)
        }
        None => None,
    };
    ctx.note(format!("{} rounds, residual {residual:e}", report.iterations));
    json_line(&DupliSummary {
        residual,
        relative_residual: if norm > 0.0 { residual / norm } else { residual },
        iterations: report.iterations,
        converged_by: match report.converged_by {
            StopReason::FixedPoint => "fixed-point",
            StopReason::MaxIter => "max-iter",
        },
        mean_dist: dist.map(|d| d.mean),
        mean_dist_std: dist.map(|d| d.std),
        d2s,
    })
}

fn cmd_plot(ctx: &Ctx, kind: PlotKind) -> CliResult<()> {
    match kind {
        PlotKind::Scatter { perm, truth, no_flip, shift, out } => {
            let p = files::read_permutation(&perm)?;
            let t = files::read_permutation(&truth)?;
            check_len(&perm, &p, t.len())?;
            let al = plot::align(&p, &t, !no_flip, shift);
            files::write_with(&out, |w| Ok(w.write_all(plot::scatter_svg(&al, &t).as_bytes())?))?;
            ctx.note(format!("{} of {} elements at their reference position", al.agreement, t.len()));
            json_line(&al)
        }
        PlotKind::Heatmap { matrix, perm, out } => {
            let a = files::read_similarity(&matrix)?;
            let p = match &perm {
                Some(path) => {
                    let p = files::read_permutation(path)?;
                    check_len(path, &p, a.n())?;
                    p
                }
                None => Permutation::identity(a.n()),
            };
            let svg = plot::heatmap_svg(&a, &p)?;
            files::write_with(&out, |w| Ok(w.write_all(svg.as_bytes())?))
        }
    }
}
