use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use hmvc_core::clustering::evaluate;
use hmvc_core::dataset::{read_edge_list, read_labels, read_matrix, MatrixFormat};
use hmvc_core::harness::{
    edge_quality_dense, edge_quality_sparse, report_csv, run, two_moons_demo, EdgeSelection, Method, RunConfig,
};
use hmvc_core::highorder::GraphOrder;

#[derive(Parser)]
#[command(name = "hmvc", version, about = "High-order multi-view clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the full model and cluster the consensus graph.
    Fit(RunArgs),
    /// Fit the anchor model (memory linear in the number of samples).
    FitAnchor(RunArgs),
    /// Run a parameter grid described by a config file and/or flags.
    Sweep(RunArgs),
    /// Edge quality of mixed graphs of several orders on a two-moons KNN graph.
    TwoMoonsDemo(DemoArgs),
    /// Edge quality of a graph against ground-truth labels.
    EdgeQuality(EdgeArgs),
    /// Clustering metrics of predicted labels against ground truth.
    Metrics(MetricArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Key-value config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feature matrix files, one per view (CSV or .bin).
    #[arg(long, value_delimiter = ',')]
    features: Vec<PathBuf>,
    /// Edge-list files, one per graph.
    #[arg(long, value_delimiter = ',')]
    graphs: Vec<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// CSV feature files start with a header line.
    #[arg(long)]
    header: bool,
    /// Reject asymmetric edge lists instead of symmetrizing them.
    #[arg(long)]
    strict_symmetry: bool,
    /// Synthetic data instead of files: `blobs` or `moons`.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    name: Option<String>,
    /// Number of clusters (defaults to the number of label classes).
    #[arg(long)]
    clusters: Option<usize>,
    /// Comma separated values sweep over a grid.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    filter_order: Option<String>,
    /// Similarity order(s); `inf` selects the infinite order.
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `symmetric` or `row`.
    #[arg(long)]
    normalization: Option<String>,
    #[arg(long)]
    anchors: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// Neighbours of the KNN graph used for anchor degrees on feature-only data.
    #[arg(long)]
    knn: Option<usize>,
    /// `spectral` or `kmeans`.
    #[arg(long)]
    cluster: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let join = |paths: &[PathBuf]| {
            paths
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out: Vec<(&'static str, String)> = Vec::new();
        if let Some(s) = &self.synthetic {
            out.push(("synthetic", s.clone()));
        }
        if !self.features.is_empty() {
            out.push(("features", join(&self.features)));
        }
        if !self.graphs.is_empty() {
            out.push(("graphs", join(&self.graphs)));
        }
        if let Some(p) = &self.labels {
            out.push(("labels", p.display().to_string()));
        }
        if self.header {
            out.push(("header", "true".into()));
        }
        if self.strict_symmetry {
            out.push(("symmetrize", "false".into()));
        }
        let opts: [(&'static str, Option<String>); 17] = [
            ("name", self.name.clone()),
            ("clusters", self.clusters.map(|v| v.to_string())),
            ("alpha", self.alpha.clone()),
            ("beta", self.beta.clone()),
            ("mu", self.mu.clone()),
            ("filter_order", self.filter_order.clone()),
            ("order", self.order.clone()),
            ("max_iters", self.max_iters.map(|v| v.to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("normalization", self.normalization.clone()),
            ("anchors", self.anchors.map(|v| v.to_string())),
            ("eta", self.eta.map(|v| v.to_string())),
            ("knn", self.knn.map(|v| v.to_string())),
            ("cluster", self.cluster.clone()),
            ("output", self.output.as_ref().map(|p| p.display().to_string())),
            ("jobs", self.jobs.map(|v| v.to_string())),
        ];
        out.extend(opts.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
        out
    }

    fn to_config(&self, method: Option<Method>) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for (key, value) in self.overrides() {
            cfg.set(key, &value).with_context(|| format!("--{}", key.replace('_', "-")))?;
        }
        if let Some(m) = method {
            cfg.method = m;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Neighbours of the KNN graph and edges kept per row.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,inf")]
    orders: Vec<GraphOrder>,
}

#[derive(Args)]
struct EdgeArgs {
    /// Edge list, or a dense matrix file (CSV or .bin) with `--dense`.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    dense: bool,
    /// Edges kept per row of a dense graph.
    #[arg(long, default_value_t = 5, conflicts_with = "threshold")]
    top_k: usize,
    /// Keep every dense entry above this value instead of top-K.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct MetricArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

fn run_grid(args: &RunArgs, method: Option<Method>) -> anyhow::Result<ExitCode> {
    let cfg = args.to_config(method)?;
    let outcome = run(&cfg)?;
    print!("{}", report_csv(&outcome.rows));
    if outcome.all_ok() {
        Ok(ExitCode::SUCCESS)
    } else {
        let failed = outcome.rows.iter().filter(|r| r.status != "ok").count();
        eprintln!("{failed} of {} grid points failed", outcome.rows.len());
        Ok(ExitCode::from(1))
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Fit(args) => run_grid(&args, Some(Method::Hmvc)),
        Command::FitAnchor(args) => run_grid(&args, Some(Method::Ahmvc)),
        Command::Sweep(args) => run_grid(&args, None),
        Command::TwoMoonsDemo(args) => {
            let rows = two_moons_demo(args.points, args.noise, args.seed, args.k, &args.orders)?;
            println!("order,nwe,acce,edges");
            for r in rows {
                println!("{},{},{},{}", r.order, r.quality.nwe, r.quality.acce, r.quality.edges);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::EdgeQuality(args) => {
            let labels = read_labels(&args.labels)?;
            let q = if args.dense {
                let g = read_matrix(&args.graph, MatrixFormat::from_path(&args.graph, false))?;
                let selection = match args.threshold {
                    Some(t) => EdgeSelection::Threshold(t),
                    None => EdgeSelection::TopK(args.top_k),
                };
                edge_quality_dense(&g, &labels, selection)?
            } else {
                if args.threshold.is_some() {
                    bail!("--threshold applies to dense graphs only");
                }
                edge_quality_sparse(&read_edge_list(&args.graph, labels.len(), true)?, &labels)?
            };
            println!("nwe,acce,edges");
            println!("{},{},{}", q.nwe, q.acce, q.edges);
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics(args) => {
            let m = evaluate(&read_labels(&args.pred)?, &read_labels(&args.truth)?)?;
            println!("acc,nmi,ari,f1,pur");
            println!("{},{},{},{},{}", m.acc, m.nmi, m.ari, m.f1, m.pur);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
