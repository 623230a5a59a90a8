use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gradsurf::bench::{gen_mesh_dataset, run_benchmark, BenchConfig, NoiseSpec, Scale, Table, TestFunction};
use gradsurf::io::{self as gio, Dataset, MeshMeta};
use gradsurf::{evaluate_layers, CombinationStrategy, DataView, Error, EvalConfig, Method, ScatteredView, SmoothConfig};

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "gradsurf", version, about = "Gradient and smooth-surface interpolation of multidimensional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the outcome at a single point and print it as JSON.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated query coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Estimate outcomes for every row of a query file.
    Impute {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        queries: PathBuf,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Run one of the accuracy tables and write a JSON Lines report.
    Bench {
        /// T1, T2, T3, T4 or averaging.
        #[arg(long)]
        table: Table,
        #[arg(long, default_value = "small")]
        scale: Scale,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Record wall-clock times (makes the report non-reproducible).
        #[arg(long)]
        timing: bool,
        /// Cap on queries per scenario.
        #[arg(long)]
        budget: Option<usize>,
        /// Report file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write points-vs-error rows for plotting.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[command(flatten)]
        smooth: SmoothArgs,
    },
    /// Write a synthetic mesh dataset and its mesh sidecar.
    Generate {
        /// T1, S1, S2 or H1:<n>, H2:<n>, H3:<n>.
        #[arg(long)]
        function: TestFunction,
        #[arg(long)]
        nodes: usize,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 3.0])]
        domain: Vec<f64>,
        /// Node displacement as a fraction of the local cell width.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        /// none, normal:<sigma> or uniform:<half-width>.
        #[arg(long, default_value = "none")]
        noise: NoiseSpec,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Training CSV with columns x1..xn and y (or y1..ym).
    #[arg(long)]
    data: PathBuf,
    /// Mesh sidecar; defaults to <data>.mesh.json when that file exists.
    #[arg(long)]
    mesh: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothArgs {
    /// Shape exponent of the approximating function.
    #[arg(long = "d-exponent", default_value_t = 1.0)]
    d: f64,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long = "max-iter", default_value_t = 20)]
    max_iter: usize,
}

impl SmoothArgs {
    fn config(&self) -> Result<SmoothConfig, Error> {
        let c = SmoothConfig {
            d: self.d,
            tolerance: self.tolerance,
            max_iterations: self.max_iter,
        };
        c.validate()?;
        for w in c.warnings() {
            eprintln!("warning: {w}");
        }
        Ok(c)
    }
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, default_value = "smooth")]
    method: Method,
    /// Point combinations averaged by the gradient method.
    #[arg(long, default_value_t = 1)]
    combinations: usize,
    /// nearest or disjoint.
    #[arg(long, default_value = "nearest")]
    strategy: CombinationStrategy,
    #[command(flatten)]
    smooth: SmoothArgs,
}

impl MethodArgs {
    fn config(&self) -> Result<EvalConfig, Error> {
        if self.combinations == 0 {
            return Err(Error::InvalidArgument("--combinations must be at least 1".into()));
        }
        Ok(EvalConfig {
            method: self.method,
            combinations: self.combinations,
            strategy: self.strategy,
            smooth: self.smooth.config()?,
        })
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Runs `f` with the view the configured method needs.
fn with_view<T>(ds: &Dataset, method: Method, f: impl FnOnce(DataView<'_>) -> T) -> Result<T, Error> {
    match (&ds.mesh, method) {
        (Some(mesh), _) => {
            let view = mesh.view(&ds.training);
            Ok(f(DataView::Mesh(&view)))
        }
        (None, Method::Smooth) => Err(Error::MeshRequired),
        (None, Method::Gradient) => {
            let scattered = ScatteredView::new(&ds.training);
            Ok(f(DataView::Scattered(&scattered)))
        }
    }
}

/// `Ok(true)` when every query succeeded.
fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Eval { data, at, method } => {
            let cfg = method.config()?;
            let ds = gio::load_dataset(&data.data, data.mesh.as_deref())?;
            if at.len() != ds.training.dim() {
                return Err(Error::DimensionMismatch {
                    context: "query".into(),
                    expected: ds.training.dim(),
                    got: at.len(),
                });
            }
            let result = with_view(&ds, cfg.method, |v| evaluate_layers(v, &at, &cfg))?;
            let mut out = io::stdout().lock();
            let mut ok = true;
            for (j, c) in result.components.iter().enumerate() {
                let line = match c {
                    Ok(e) => serde_json::json!({ "layer": j, "estimate": e }),
                    Err(e) => {
                        ok = false;
                        serde_json::json!({ "layer": j, "error": e.to_string() })
                    }
                };
                writeln!(out, "{line}")?;
            }
            Ok(ok)
        }
        Command::Impute {
            data,
            queries,
            output: out_path,
            workers,
            method,
        } => {
            let cfg = method.config()?;
            let ds = gio::load_dataset(&data.data, data.mesh.as_deref())?;
            let qs = gio::read_queries(File::open(&queries)?, ds.training.dim())?;
            let results = with_view(&ds, cfg.method, |v| gio::impute(v, &qs, &cfg, workers))??;
            gio::write_imputed(output(out_path.as_deref())?, &qs, &results, &cfg, ds.training.layer_count())?;
            Ok(results.iter().all(|r| r.components.iter().all(Result::is_ok)))
        }
        Command::Bench {
            table,
            scale,
            seed,
            workers,
            timing,
            budget,
            output: out_path,
            plot,
            smooth,
        } => {
            let mut cfg = BenchConfig::new(table, scale, seed);
            cfg.workers = workers;
            cfg.timing = timing;
            cfg.query_budget = budget;
            cfg.smooth = smooth.config()?;
            let report = run_benchmark(&cfg)?;
            gio::write_report_jsonl(output(out_path.as_deref())?, &report)?;
            if let Some(p) = plot {
                gio::write_plot_csv(BufWriter::new(File::create(p)?), &report)?;
            }
            Ok(true)
        }
        Command::Generate {
            function,
            nodes,
            domain,
            jitter,
            noise,
            seed,
            output: out_path,
        } => {
            let ds = gen_mesh_dataset(function, nodes, (domain[0], domain[1]), jitter, noise, seed)?;
            let meta = MeshMeta {
                axes: Some(ds.mesh.axes().to_vec()),
                jitter: ds.mesh.jitter(),
            };
            gio::save_dataset(&out_path, &ds.training, Some(&meta))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some queries failed; see the status column");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_RUNTIME })
        }
    }
}
