//! `mlt-lab`: batch command-line front end for maximum likelihood threshold
//! computations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mlt_core::experiments::{
    self, ErOptions, ErRecord, GlassoExpOptions, GlassoRecord, Record, ReportFormat,
};
use mlt_core::graph::{self, Graph};
use mlt_core::mlt::{self, BoundsOptions, EstimateOptions, EstimatedMlt, MltReport};
use mlt_core::models::{self, graphical_subspace, SemModel};
use mlt_core::solver::{
    self, CompletionVerdict, GlassoOptions, MleOptions, MleVerdict, Provenance, SampleCovariance,
};
use mlt_core::{rigidity, seed, Error};

const FILE_FORMATS: &str = "\
File formats:
  Edge list (--graph): one edge \"u v\" per line, vertices 1..n. An optional
    first line \"n <count>\" fixes the vertex count (isolated vertices);
    otherwise n is the largest vertex. '#' starts a comment.
  Digraph (--digraph): as the edge list, lines are arcs \"u v\" (u -> v) and
    the optional header is \"digraph n <count>\".
  RCON (--rcon): a line \"rcon\", then \"vparts: {1,2}|{3,4}\" and
    \"eparts: {1-2,2-3}|{3-4,1-4}\". The graph is the union of the edge parts.
  Data (--data): CSV with one observation per row and one column per
    variable. A non-numeric first row is treated as a header.

Exit codes: 0 success, 1 usage or input error, 2 computation error,
3 undetermined verdict.";

const REPORT_FORMATS: &str = "\
File formats:
  Records are generated, not read. --format json writes one JSON record per
    line (JSONL), csv a header row and one row per record, text a summary
    table of hit fractions with 95% Wilson intervals per cell.
  Plot (--plot): SVG of the fractions with their intervals, one series per
    line of the summary table.

Exit codes: 0 success, 1 usage or input error, 2 computation error,
3 undetermined verdict.";

const FORMULA_FORMATS: &str = "\
File formats:
  None read. Output is the threshold, or {n, m, mlt} with --format json.

Exit codes: 0 success, 1 usage or input error (m outside 1..=n(n+1)/2).";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Parser, Debug)]
#[command(
    name = "mlt-lab",
    version,
    about = "Maximum likelihood thresholds of Gaussian graphical and linear concentration models",
    after_help = FILE_FORMATS
)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = seed::DEFAULT_SEED)]
    seed: u64,
    /// Output format; csv is available for reports and record lists.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the primary output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Monte Carlo trials per rank (estimate) or per cell (experiments).
    #[arg(long, global = true, default_value_t = mlt::DEFAULT_TRIALS)]
    trials: usize,
    /// Stopping tolerance for the MLE solver (scaled problem; default 1e-8 * n).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Data CSV, one observation per row.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Use S = X X^T without subtracting the sample mean.
    #[arg(long)]
    no_center: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clique number, treewidth and rigidity bounds of a graph.
    #[command(after_help = FILE_FORMATS)]
    Bounds {
        /// Edge-list file.
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
    },
    /// Generic rigidity rank, d-independence and the smallest independence dimension.
    #[command(after_help = FILE_FORMATS)]
    Rigidity {
        /// Edge-list file.
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
        /// Report the generic rank and independence in this dimension.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Monte Carlo estimate of the threshold of a model.
    #[command(after_help = FILE_FORMATS)]
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        /// Skip the completion cross-check on graphical models.
        #[arg(long)]
        no_cross_check: bool,
    },
    /// Gaussian graphical model MLE for a graph and a data file.
    #[command(after_help = FILE_FORMATS)]
    Fit {
        /// Edge-list file.
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Positive definite completion feasibility of S on a graph.
    #[command(after_help = FILE_FORMATS)]
    Complete {
        /// Edge-list file.
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Graphical lasso on the sample covariance S / d; prints the selected graph.
    #[command(after_help = FILE_FORMATS)]
    Glasso {
        #[command(flatten)]
        data: DataArgs,
        /// Off-diagonal l1 penalty (positive).
        #[arg(long)]
        alpha: f64,
    },
    /// Threshold of a directed Gaussian SEM, with an optional regression fit.
    #[command(after_help = FILE_FORMATS)]
    Sem {
        /// Digraph file.
        #[arg(long, value_name = "FILE")]
        digraph: PathBuf,
        /// Data CSV (not centered; the model has mean zero).
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
    },
    /// Threshold versus rigidity on Erdős–Rényi graphs G(n, c/n).
    #[command(after_help = REPORT_FORMATS)]
    ErExp {
        /// Comma-separated vertex counts.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Comma-separated values of c (0 <= c < n).
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<f64>,
        /// Monte Carlo samples per rank for each graph.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Also write an SVG of the agreement fractions.
        #[arg(long, value_name = "PATH")]
        plot: Option<PathBuf>,
    },
    /// How often graphical lasso selects a model the same data can fit.
    #[command(after_help = REPORT_FORMATS)]
    GlassoExp {
        /// Number of variables.
        #[arg(long)]
        n: usize,
        /// Observations per trial (at least 2).
        #[arg(long)]
        d: usize,
        /// Comma-separated penalties.
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// Skip the direct MLE confirmation.
        #[arg(long)]
        no_confirm: bool,
        /// Also write an SVG of the fractions per alpha.
        #[arg(long, value_name = "PATH")]
        plot: Option<PathBuf>,
    },
    /// Threshold of a generic m-dimensional linear concentration model on n variables.
    #[command(after_help = FORMULA_FORMATS)]
    MltFormula { n: usize, m: usize },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ModelArgs {
    /// Graphical model from an edge-list file.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// RCON model from a specification file.
    #[arg(long, value_name = "FILE")]
    rcon: Option<PathBuf>,
    /// Generic linear concentration model "n,m" (drawn from --seed).
    #[arg(long, value_name = "N,M")]
    generic: Option<String>,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Capability(_) | Error::Precondition(_) | Error::Numerical(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        msg: msg.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Primary output plus whether the verdict was undetermined.
struct Output {
    text: String,
    undetermined: bool,
}

impl Output {
    fn done(text: String) -> Self {
        Output {
            text,
            undetermined: false,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = e.print();
                return ExitCode::from(1);
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("mlt-lab: {}", line.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(msg) = written {
                eprintln!("mlt-lab: {msg}");
                return ExitCode::from(1);
            }
            if out.undetermined {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            eprintln!("mlt-lab: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> CliResult<Graph> {
    graph::parse_edge_list(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_covariance(args: &DataArgs, n: Option<usize>) -> CliResult<SampleCovariance> {
    let data = load_data(&args.data)?;
    if let Some(n) = n {
        if data.nrows() != n {
            return Err(usage(format!(
                "{} has {} columns but the graph has {n} vertices",
                args.data.display(),
                data.nrows()
            )));
        }
    }
    let prov = Provenance::Data {
        file: args.data.display().to_string(),
    };
    Ok(SampleCovariance::from_data(&data, !args.no_center, prov)?)
}

fn load_data(path: &Path) -> CliResult<mlt_core::linalg::Mat> {
    solver::parse_data_csv(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn json_text(v: &Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("values serialize"))
}

fn no_csv(cmd: &str) -> Failure {
    usage(format!("--format csv is not available for '{cmd}'; use json or text"))
}

fn mle_options(cli: &Cli) -> CliResult<MleOptions> {
    if let Some(t) = cli.tol {
        if !(t > 0.0) {
            return Err(usage("--tol must be positive"));
        }
    }
    Ok(MleOptions {
        tol: cli.tol,
        ..MleOptions::default()
    })
}

fn run(cli: &Cli) -> CliResult<Output> {
    if cli.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let mle_opts = mle_options(cli)?;
    match &cli.command {
        Command::Bounds { graph } => {
            let g = load_graph(graph)?;
            let report = mlt::mlt_bounds(&g, &BoundsOptions { seed: cli.seed });
            Ok(Output::done(render_report(&report, cli.format)))
        }
        Command::Rigidity { graph, dim } => {
            let g = load_graph(graph)?;
            rigidity_cmd(cli, &g, *dim).map(Output::done)
        }
        Command::Estimate {
            model,
            no_cross_check,
        } => {
            let opts = EstimateOptions {
                mle: mle_opts,
                cross_check: !no_cross_check,
                ..EstimateOptions::default()
            };
            let bounds = BoundsOptions { seed: cli.seed };
            let mut report = if let Some(path) = &model.graph {
                let g = load_graph(path)?;
                mlt::estimate_graph(&g, cli.trials, cli.seed, &bounds, &opts)?
            } else if let Some(path) = &model.rcon {
                let spec = models::parse_rcon(&read(path)?)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                mlt::empirical_mlt(&spec.model()?, cli.trials, cli.seed, &opts)?
            } else {
                let spec = model.generic.as_deref().expect("argument group is required");
                let (n, m) = parse_pair(spec)?;
                let subspace = models::generic_subspace(n, m, cli.seed)?;
                let mut r = mlt::empirical_mlt(&subspace, cli.trials, cli.seed, &opts)?;
                let formula = mlt::mlt_generic_linear(n, m)?;
                r.notes.push(format!("closed form for generic n={n}, m={m}: {formula}"));
                r
            };
            report.seed = cli.seed;
            let undetermined = report.estimated_mlt == Some(EstimatedMlt::Undetermined);
            Ok(Output {
                text: render_report(&report, cli.format),
                undetermined,
            })
        }
        Command::Fit { graph, data } => {
            let g = load_graph(graph)?;
            let s = load_covariance(data, Some(g.n()))?;
            let out = solver::fit_mle(&graphical_subspace(&g), &s, &mle_opts)?;
            let mut v = out.to_json(true);
            v["rank_s"] = json!(s.rank());
            let text = match cli.format {
                Format::Json => json_text(&v),
                Format::Csv => return Err(no_csv("fit")),
                Format::Text => {
                    let mut t = format!(
                        "verdict     {}\nobjective   {}\ngrad_norm   {:.3e}\niterations  {}\nrank(S)     {}\n",
                        verdict_name(&v),
                        out.objective,
                        out.grad_norm,
                        out.iterations,
                        s.rank()
                    );
                    if let Some(k) = &out.k {
                        let _ = write!(t, "K =\n{}", matrix_text(k));
                    }
                    t
                }
            };
            Ok(Output {
                text,
                undetermined: out.verdict == MleVerdict::Undetermined,
            })
        }
        Command::Complete { graph, data } => {
            let g = load_graph(graph)?;
            let s = load_covariance(data, Some(g.n()))?;
            let out = solver::completion_feasible(&g, &s);
            let include = out.verdict == CompletionVerdict::Feasible;
            let v = out.to_json(include);
            let text = match cli.format {
                Format::Json => json_text(&v),
                Format::Csv => return Err(no_csv("complete")),
                Format::Text => {
                    let mut t = format!(
                        "verdict      {}\nmargin       {:.6e}\nupper_bound  {:.6e}\niterations   {}\n",
                        verdict_name(&v),
                        out.margin,
                        out.upper_bound,
                        out.iterations
                    );
                    if include {
                        let _ = write!(t, "completion =\n{}", matrix_text(&out.completion));
                    }
                    t
                }
            };
            Ok(Output {
                text,
                undetermined: out.verdict == CompletionVerdict::Marginal,
            })
        }
        Command::Glasso { data, alpha } => {
            let s = load_covariance(data, None)?;
            let d = load_data(&data.data)?.ncols();
            let fit = solver::glasso(&s.scaled(1.0 / d as f64), *alpha, &GlassoOptions::default())?;
            let edges: Vec<[usize; 2]> = fit.selected.edges().iter().map(|&(i, j)| [i, j]).collect();
            let v = json!({
                "alpha": alpha,
                "converged": fit.converged,
                "iterations": fit.iterations,
                "kkt_residual": fit.kkt_residual,
                "selected_edges": edges,
                "matrix": (0..fit.k.nrows())
                    .map(|i| (0..fit.k.ncols()).map(|j| fit.k[(i, j)]).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            });
            let text = match cli.format {
                Format::Json => json_text(&v),
                Format::Csv => return Err(no_csv("glasso")),
                Format::Text => format!(
                    "alpha         {alpha}\nconverged     {}\niterations    {}\nkkt_residual  {:.3e}\nselected graph:\n{}K =\n{}",
                    fit.converged,
                    fit.iterations,
                    fit.kkt_residual,
                    fit.selected.to_edge_list(),
                    matrix_text(&fit.k)
                ),
            };
            Ok(Output {
                text,
                undetermined: !fit.converged,
            })
        }
        Command::Sem { digraph, data } => {
            let dg = graph::parse_digraph(&read(digraph)?)
                .map_err(|e| usage(format!("{}: {e}", digraph.display())))?;
            let threshold = mlt::mlt_sem(&dg);
            let mut v = json!({
                "max_in_degree": graph::max_in_degree(&dg),
                "mlt": threshold,
            });
            if graph::max_in_degree(&dg) == 0 {
                v["note"] = json!("arcless digraph: the in-degree formula gives 0; one sample is needed to estimate the noise variances");
            }
            if let Some(path) = data {
                let x = load_data(path)?;
                if x.nrows() != dg.n() {
                    return Err(usage(format!(
                        "{} has {} columns but the digraph has {} vertices",
                        path.display(),
                        x.nrows(),
                        dg.n()
                    )));
                }
                let fit = solver::sem_fit(&SemModel { digraph: dg.clone() }, &x);
                v["fit"] = serde_json::to_value(&fit).expect("fit serializes");
                v["fit"]["samples"] = json!(x.ncols());
            }
            let text = match cli.format {
                Format::Json => json_text(&v),
                Format::Csv => return Err(no_csv("sem")),
                Format::Text => {
                    let mut t = format!("max_in_degree  {}\nmlt            {threshold}\n", v["max_in_degree"]);
                    if let Some(note) = v.get("note") {
                        let _ = writeln!(t, "note           {}", note.as_str().unwrap_or_default());
                    }
                    if let Some(fit) = v.get("fit") {
                        let _ = writeln!(t, "fit verdict    {}", fit["verdict"].as_str().unwrap_or_default());
                        let _ = writeln!(t, "failing        {}", fit["failing_vertices"]);
                        let _ = writeln!(t, "residual_ss    {}", fit["d"]);
                    }
                    t
                }
            };
            Ok(Output::done(text))
        }
        Command::ErExp { n, c, samples, plot } => {
            if *samples == 0 {
                return Err(usage("--samples must be at least 1"));
            }
            let opts = ErOptions {
                mlt_trials: *samples,
                estimate: EstimateOptions {
                    mle: mle_opts,
                    ..EstimateOptions::default()
                },
                ..ErOptions::default()
            };
            let records = experiments::er_experiment(n, c, cli.trials, cli.seed, &opts)?;
            if let Some(p) = plot {
                experiments::plot_summary(&records, p)?;
            }
            records_output::<ErRecord>(&records, cli.format)
        }
        Command::GlassoExp {
            n,
            d,
            alphas,
            no_confirm,
            plot,
        } => {
            let opts = GlassoExpOptions {
                confirm: !no_confirm,
                mle: mle_opts,
                ..GlassoExpOptions::default()
            };
            let records = experiments::glasso_experiment(*n, *d, alphas, cli.trials, cli.seed, &opts)?;
            if let Some(p) = plot {
                experiments::plot_summary(&records, p)?;
            }
            records_output::<GlassoRecord>(&records, cli.format)
        }
        Command::MltFormula { n, m } => {
            let k = mlt::mlt_generic_linear(*n, *m)?;
            let text = match cli.format {
                Format::Json => json_text(&json!({"n": n, "m": m, "mlt": k})),
                Format::Csv => return Err(no_csv("mlt-formula")),
                Format::Text => format!("{k}\n"),
            };
            Ok(Output::done(text))
        }
    }
}

fn parse_pair(spec: &str) -> CliResult<(usize, usize)> {
    let bad = || usage(format!("--generic expects \"n,m\", got '{spec}'"));
    let (a, b) = spec.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn verdict_name(v: &Value) -> &str {
    v["verdict"].as_str().unwrap_or("?")
}

fn matrix_text(m: &mlt_core::linalg::Mat) -> String {
    let mut t = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:>12.6}", m[(i, j)])).collect();
        let _ = writeln!(t, "{}", row.join(" "));
    }
    t
}

fn rigidity_cmd(cli: &Cli, g: &Graph, dim: Option<usize>) -> CliResult<String> {
    let min_dim = if g.num_edges() == 0 {
        None
    } else {
        Some(rigidity::min_independence_dim(g, cli.seed)?)
    };
    let mut v = json!({
        "n": g.n(),
        "edges": g.num_edges(),
        "min_independence_dim": min_dim,
    });
    if let Some(d) = dim {
        if d == 0 {
            return Err(usage("--dim must be at least 1"));
        }
        let rank = rigidity::generic_rank(g, d, cli.seed);
        v["dim"] = json!(d);
        v["rank"] = json!(rank);
        v["independent"] = json!(rank == g.num_edges());
    }
    Ok(match cli.format {
        Format::Json => json_text(&v),
        Format::Csv => return Err(no_csv("rigidity")),
        Format::Text => {
            let mut t = format!("n                     {}\nedges                 {}\n", g.n(), g.num_edges());
            let _ = writeln!(
                t,
                "min_independence_dim  {}",
                min_dim.map(|d| d.to_string()).unwrap_or_else(|| "none (edgeless)".into())
            );
            if let Some(d) = dim {
                let _ = writeln!(t, "rank in dimension {d}   {}", v["rank"]);
                let _ = writeln!(t, "independent           {}", v["independent"]);
            }
            t
        }
    })
}

fn render_report(r: &MltReport, format: Format) -> String {
    match format {
        Format::Json => json_text(&serde_json::to_value(r).expect("report serializes")),
        Format::Csv => format!("{}\n{}\n", MltReport::csv_header(), r.csv_row()),
        Format::Text => {
            let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
            let mut t = String::new();
            let _ = writeln!(t, "model           {}", r.id);
            let _ = writeln!(t, "omega           {}", opt(r.omega));
            let _ = writeln!(
                t,
                "buhl_upper      {}{}",
                opt(r.buhl_upper),
                if r.buhl_heuristic { " (heuristic)" } else { "" }
            );
            let _ = writeln!(t, "rigidity_d      {}", opt(r.rigidity_d));
            let _ = writeln!(t, "rigidity_upper  {}", opt(r.rigidity_upper));
            if let Some(e) = r.estimated_mlt {
                let _ = writeln!(t, "estimated_mlt   {e}");
            }
            if !r.per_rank.is_empty() {
                let _ = writeln!(t, "\n   d  success  trials  fail  marginal  disagree  resampled");
                for s in &r.per_rank {
                    let _ = writeln!(
                        t,
                        "{:>4}  {:>7}  {:>6}  {:>4}  {:>8}  {:>8}  {:>9}{}",
                        s.d,
                        s.successes,
                        s.trials,
                        s.failures,
                        s.marginals,
                        s.disagreements,
                        s.resamples,
                        if s.spot_check { "  (spot check)" } else { "" }
                    );
                }
            }
            for note in &r.notes {
                let _ = writeln!(t, "note: {note}");
            }
            t
        }
    }
}

fn records_output<R: Record>(records: &[R], format: Format) -> CliResult<Output> {
    let text = match format {
        Format::Json => experiments::render_report(records, ReportFormat::Jsonl)?,
        Format::Csv => experiments::render_report(records, ReportFormat::Csv)?,
        Format::Text => {
            let mut t = String::from("series          x      hits/count  fraction  95% interval\n");
            for c in R::summarize(records) {
                let _ = writeln!(
                    t,
                    "{:<14} {:>6}  {:>5}/{:<5}  {:>8.3}  [{:.3}, {:.3}]",
                    c.series, c.x, c.hits, c.count, c.fraction, c.lo, c.hi
                );
            }
            t
        }
    };
    Ok(Output::done(text))
}
