use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geospectral::kernel::KernelSpec;
use geospectral::pipeline::{self, Artifact, PipelineConfig, Source};
use geospectral::synth::GravityConfig;
use geospectral::{Error, Result};

const THREADS_ENV: &str = "GEOSPECTRAL_THREADS";

/// Diffusion maps, eigenvector colorings and cluster diagnostics for weighted interaction networks.
#[derive(Parser, Debug)]
#[command(name = "geospectral", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic gravity network as edge, node and label CSVs.
    Generate {
        /// Generator config, inline JSON or a path to a JSON file.
        #[arg(long)]
        generate: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the generator config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the kernel weights and write them as an edge list.
    Ingest(Common),
    /// Eigensolve and write the spectrum, eigenvectors, embedding and colorings.
    Analyze(Common),
    /// Write the collapse matrices and the ratio-degree ranking.
    Report(Common),
    /// All stages into one directory.
    Run(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Edge CSV: source,target,intensity[,duration_seconds]
    #[arg(long, requires = "nodes", conflicts_with = "generate")]
    edges: Option<PathBuf>,
    /// Node CSV: id,population,longitude,latitude[,cluster_label]
    #[arg(long, requires = "edges")]
    nodes: Option<PathBuf>,
    /// Generator config instead of input files, inline JSON or a path.
    #[arg(long)]
    generate: Option<String>,
    /// Kernel spec, inline JSON or a path; without it intensities are the weights.
    #[arg(long)]
    kernel: Option<String>,
    /// Eigenpairs to compute, counting the trivial one.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Diffusion time.
    #[arg(long, default_value_t = 1)]
    t: u32,
    /// Embedding dimension.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Eigenvector orders to export and color.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    eigvecs: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Seed for the eigensolver start vector and, with --generate, the generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Support threshold as a fraction of the peak magnitude.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Histogram bins.
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Eigensolver residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Eigensolver matvec budget.
    #[arg(long)]
    max_matvecs: Option<usize>,
    /// Comma-separated subset of embedding,colorings,spectrum,localization,collapse,ranking,alignment,svg.
    #[arg(long, value_delimiter = ',')]
    artifacts: Option<Vec<String>>,
}

fn json_arg(arg: &str) -> Result<String> {
    if arg.trim_start().starts_with('{') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(arg).map_err(|source| Error::Io {
        path: arg.to_string(),
        source,
    })
}

fn gravity_config(arg: &str, seed: Option<u64>) -> Result<GravityConfig> {
    let mut cfg: GravityConfig = serde_json::from_str(&json_arg(arg)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl Common {
    fn into_config(self) -> Result<PipelineConfig> {
        let source = match (self.edges, self.nodes, &self.generate) {
            (Some(edges), Some(nodes), None) => Source::Files { edges, nodes },
            (None, None, Some(g)) => Source::Generate(gravity_config(g, self.seed)?),
            _ => {
                return Err(Error::InvalidParameter(
                    "give either --edges and --nodes, or --generate".into(),
                ))
            }
        };
        let mut cfg = PipelineConfig::new(source, self.out);
        cfg.kernel = self
            .kernel
            .as_deref()
            .map(|k| KernelSpec::from_json(&json_arg(k)?))
            .transpose()?;
        cfg.k = self.k;
        cfg.t = self.t;
        cfg.dims = self.dims;
        cfg.eigvecs = self.eigvecs;
        cfg.seed = self.seed.unwrap_or(0);
        cfg.theta = self.theta;
        cfg.bins = self.bins;
        cfg.tol = self.tol;
        cfg.max_matvecs = self.max_matvecs;
        if let Some(list) = self.artifacts {
            cfg.artifacts = list
                .iter()
                .map(|a| Artifact::parse(a))
                .collect::<Result<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| {
        Error::InvalidParameter(format!("{THREADS_ENV}={raw} is not a thread count"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<()> {
    configure_threads()?;
    let manifest = match cli.command {
        Command::Generate {
            generate,
            out,
            seed,
        } => pipeline::stage_generate(&gravity_config(&generate, seed)?, &out)?,
        Command::Ingest(c) => pipeline::stage_ingest(&c.into_config()?)?,
        Command::Analyze(c) => pipeline::stage_analyze(&c.into_config()?)?,
        Command::Report(c) => pipeline::stage_report(&c.into_config()?)?,
        Command::Run(c) => pipeline::run(&c.into_config()?)?,
    };
    for (name, entry) in &manifest.files {
        println!("{name}\t{}", entry.rows);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
