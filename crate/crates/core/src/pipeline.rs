//! End-to-end stages behind the command-line tool.
//!
//! Each stage writes its artifacts into an output directory and merges an
//! entry per file into `manifest.json` there, so stages can run separately
//! against the same directory or all at once through [`run`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::cluster::{collapse, degrees, eigenvector_cut_alignment, rank_clusters, ClusterLabels};
use crate::diffusion::embed;
use crate::error::{Error, Result};
use crate::graph::{ingest_edges, NodeMeta, RawInteraction, WeightedGraph};
use crate::io;
use crate::kernel::{build_kernel, compute_mobile_aggregates, KernelKind, KernelSpec};
use crate::localization::{coloring, entry_histogram, localization_report};
use crate::spectral::{normalize, spectrum_histogram, top_eigenpairs, EigenOptions, EigenSystem};
use crate::synth::{generate, GravityConfig};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Artifact {
    Embedding,
    Colorings,
    Spectrum,
    Localization,
    Collapse,
    Ranking,
    Alignment,
    Svg,
}

impl Artifact {
    pub const ALL: [Artifact; 8] = [
        Artifact::Embedding,
        Artifact::Colorings,
        Artifact::Spectrum,
        Artifact::Localization,
        Artifact::Collapse,
        Artifact::Ranking,
        Artifact::Alignment,
        Artifact::Svg,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "embedding" => Artifact::Embedding,
            "colorings" => Artifact::Colorings,
            "spectrum" => Artifact::Spectrum,
            "localization" => Artifact::Localization,
            "collapse" => Artifact::Collapse,
            "ranking" => Artifact::Ranking,
            "alignment" => Artifact::Alignment,
            "svg" => Artifact::Svg,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown artifact `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Files { edges: PathBuf, nodes: PathBuf },
    Generate(GravityConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source: Source,
    /// `None` uses the input intensities as weights.
    pub kernel: Option<KernelSpec>,
    /// Eigenpairs to compute, including the trivial one.
    pub k: usize,
    pub t: u32,
    /// Embedding dimension.
    pub dims: usize,
    pub eigvecs: Vec<usize>,
    pub out: PathBuf,
    pub seed: u64,
    pub theta: f64,
    pub bins: usize,
    pub tol: Option<f64>,
    pub max_matvecs: Option<usize>,
    pub artifacts: Vec<Artifact>,
}

impl PipelineConfig {
    pub fn new(source: Source, out: impl Into<PathBuf>) -> Self {
        Self {
            source,
            kernel: None,
            k: 10,
            t: 1,
            dims: 2,
            eigvecs: vec![1, 2, 3],
            out: out.into(),
            seed: 0,
            theta: 0.5,
            bins: 50,
            tol: None,
            max_matvecs: None,
            artifacts: Artifact::ALL.to_vec(),
        }
    }

    /// Checks everything that does not need the input data.
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if self.t == 0 {
            return Err(Error::InvalidParameter(
                "diffusion time must be >= 1".into(),
            ));
        }
        if self.dims == 0 || self.dims >= self.k {
            return Err(Error::InvalidParameter(format!(
                "embedding dimension must lie in 1..{}, got {}",
                self.k, self.dims
            )));
        }
        if let Some(&bad) = self.eigvecs.iter().find(|&&r| r >= self.k) {
            return Err(Error::InvalidParameter(format!(
                "eigenvector {bad} requested but only {} are computed",
                self.k
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if self.bins == 0 {
            return Err(Error::InvalidParameter(
                "histograms need at least one bin".into(),
            ));
        }
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        if let Source::Generate(g) = &self.source {
            g.validate()?;
        }
        Ok(())
    }

    fn wants(&self, a: Artifact) -> bool {
        self.artifacts.contains(&a)
    }

    fn eigen_options(&self) -> EigenOptions<f64> {
        let mut o = EigenOptions::default().with_seed(self.seed);
        if let Some(tol) = self.tol {
            o = o.with_tol(tol);
        }
        o.max_matvecs = self.max_matvecs;
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub rows: usize,
}

/// Index of everything written to an output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, FileEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eigenvalues: Vec<f64>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        match fs::read_to_string(&path) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(source) => Err(Error::Io {
                path: path.display().to_string(),
                source,
            }),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        io::write_atomic(&dir.join(MANIFEST), text.as_bytes())
    }

    fn record(&mut self, name: &str, rows: usize) {
        self.files.insert(name.to_string(), FileEntry { rows });
    }
}

struct Output<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl<'a> Output<'a> {
    fn open(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir,
            manifest: Manifest::load(dir)?,
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<usize>) -> Result<()> {
        let rows = f(&self.dir.join(name))?;
        info!("wrote {name} ({rows} rows)");
        self.manifest.record(name, rows);
        Ok(())
    }

    fn finish(self) -> Result<Manifest> {
        self.manifest.save(self.dir)?;
        Ok(self.manifest)
    }
}

/// Raw input: interaction records plus node metadata.
#[derive(Debug, Clone)]
pub struct Input {
    pub records: Vec<RawInteraction<f64>>,
    pub meta: Vec<NodeMeta<f64>>,
}

pub fn load(source: &Source) -> Result<Input> {
    match source {
        Source::Files { edges, nodes } => Ok(Input {
            meta: io::read_nodes(nodes)?,
            records: io::read_edges(edges)?,
        }),
        Source::Generate(cfg) => {
            let net = generate::<f64>(cfg)?;
            Ok(Input {
                records: net.records(),
                meta: net.meta,
            })
        }
    }
}

/// The weight graph after ingestion and kernel construction, with metadata in graph order.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: WeightedGraph<f64>,
    pub meta: Vec<NodeMeta<f64>>,
    pub dropped: Vec<String>,
}

impl Prepared {
    /// Cluster labels, if every node has one.
    pub fn labels(&self) -> Result<Option<ClusterLabels>> {
        if self.meta.iter().all(|m| m.cluster_label.is_none()) {
            return Ok(None);
        }
        ClusterLabels::from_meta(&self.graph, &self.meta).map(Some)
    }
}

pub fn prepare(input: &Input, kernel: Option<&KernelSpec>) -> Result<Prepared> {
    let fin = ingest_edges(input.records.iter().cloned(), &input.meta)?;
    if !fin.dropped.is_empty() {
        warn!("dropped {} node(s) without interactions", fin.dropped.len());
    }
    let graph = match kernel {
        None => fin.graph,
        Some(spec) => {
            let mobile = matches!(
                spec.kind,
                KernelKind::MobileExpRt | KernelKind::MobileExpRn | KernelKind::MobileCallsOverProd
            );
            let agg = if mobile {
                Some(compute_mobile_aggregates(
                    input.records.iter().cloned(),
                    &input.meta,
                )?)
            } else {
                None
            };
            build_kernel(&fin.graph, &input.meta, spec, agg.as_ref())?
        }
    };
    let by_id: BTreeMap<&str, &NodeMeta<f64>> =
        input.meta.iter().map(|m| (m.id.as_str(), m)).collect();
    let meta = graph
        .ids()
        .iter()
        .map(|id| by_id[id.as_str()].clone())
        .collect();
    Ok(Prepared {
        graph,
        meta,
        dropped: fin.dropped,
    })
}

/// Writes the generator output as edge, node and label CSVs.
pub fn stage_generate(cfg: &GravityConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let net = generate::<f64>(cfg)?;
    let mut o = Output::open(out)?;
    o.write("edges.csv", |p| io::write_edges(p, &net.records()))?;
    o.write("nodes.csv", |p| io::write_nodes(p, &net.meta))?;
    o.write("labels.csv", |p| {
        io::write_labels(p, net.graph.ids(), &net.labels)
    })?;
    o.manifest.nodes = Some(net.graph.n());
    o.manifest.edges = Some(net.graph.edge_count());
    o.finish()
}

/// Writes the kernel weights as an edge list with the retained nodes.
pub fn stage_ingest(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let prep = prepare(&load(&cfg.source)?, cfg.kernel.as_ref())?;
    let mut o = Output::open(&cfg.out)?;
    write_prepared(&mut o, &prep, cfg)?;
    o.finish()
}

fn write_prepared(o: &mut Output<'_>, prep: &Prepared, cfg: &PipelineConfig) -> Result<()> {
    let g = &prep.graph;
    let records: Vec<RawInteraction<f64>> = g
        .edges()
        .map(|(i, j, w)| RawInteraction::new(g.id(i), g.id(j), w))
        .collect();
    o.write("weights.csv", |p| io::write_edges(p, &records))?;
    o.write("graph_nodes.csv", |p| io::write_nodes(p, &prep.meta))?;
    o.manifest.nodes = Some(g.n());
    o.manifest.edges = Some(g.edge_count());
    o.manifest.dropped = prep.dropped.clone();
    o.manifest.kernel = Some(
        cfg.kernel
            .as_ref()
            .map_or("none", |k| k.kind.name())
            .to_string(),
    );
    Ok(())
}

/// Eigensolve and every eigenvector-derived artifact.
pub fn stage_analyze(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let prep = prepare(&load(&cfg.source)?, cfg.kernel.as_ref())?;
    let mut o = Output::open(&cfg.out)?;
    analyze_into(&mut o, &prep, cfg)?;
    o.finish()
}

fn eigensystem(prep: &Prepared, cfg: &PipelineConfig) -> Result<EigenSystem<f64>> {
    let op = normalize(&prep.graph)?;
    let es = top_eigenpairs(&op, cfg.k, &cfg.eigen_options())?;
    info!("{} eigenpairs in {} matvecs", es.k(), es.matvecs);
    Ok(es)
}

fn analyze_into(o: &mut Output<'_>, prep: &Prepared, cfg: &PipelineConfig) -> Result<()> {
    let es = eigensystem(prep, cfg)?;
    let ids = prep.graph.ids();
    o.write("eigensystem.csv", |p| io::write_eigensystem(p, &es))?;
    for &r in &cfg.eigvecs {
        o.write(&format!("eigvec_{r}.csv"), |p| {
            io::write_eigenvector(p, &es, r, ids)
        })?;
    }
    if cfg.wants(Artifact::Spectrum) {
        let h = spectrum_histogram(&es, cfg.bins)?;
        o.write("spectrum_hist.csv", |p| io::write_histogram(p, &h))?;
    }
    if cfg.wants(Artifact::Embedding) {
        let emb = embed(&es, cfg.t, cfg.dims)?;
        o.write("embedding.csv", |p| {
            io::write_embedding(p, &emb, ids, Some(&prep.meta))
        })?;
    }
    if cfg.wants(Artifact::Colorings) {
        for &r in &cfg.eigvecs {
            let c = coloring(&es, r)?;
            o.write(&format!("coloring_{r}.csv"), |p| {
                io::write_coloring(p, &c, ids, &prep.meta)
            })?;
            let h = entry_histogram(&c, cfg.bins)?;
            o.write(&format!("coloring_{r}_hist.csv"), |p| {
                io::write_histogram(p, &h)
            })?;
            if cfg.wants(Artifact::Svg) {
                let svg = io::render_coloring_svg(&c, &prep.meta);
                o.write(&format!("coloring_{r}.svg"), |p| {
                    io::write_atomic(p, svg.as_bytes()).map(|_| prep.meta.len())
                })?;
            }
        }
    }
    let labels = prep.labels()?;
    if cfg.wants(Artifact::Localization) {
        let reports = (1..es.k())
            .map(|r| localization_report(&es, r, cfg.theta, labels.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        o.write("localization.csv", |p| io::write_localization(p, &reports))?;
    }
    if cfg.wants(Artifact::Alignment) {
        match &labels {
            Some(l) => {
                let orders: Vec<usize> = (1..es.k()).collect();
                let rows = eigenvector_cut_alignment(&es, &prep.graph, l, &orders)?;
                o.write("alignment.csv", |p| io::write_alignment(p, &rows))?;
            }
            None => warn!("no cluster labels; skipping alignment"),
        }
    }
    o.manifest.eigenvalues = es.lambdas.clone();
    Ok(())
}

/// Cluster-level artifacts: collapse matrices and the ratio-degree ranking.
pub fn stage_report(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let prep = prepare(&load(&cfg.source)?, cfg.kernel.as_ref())?;
    let mut o = Output::open(&cfg.out)?;
    report_into(&mut o, &prep, cfg)?;
    o.finish()
}

fn report_into(o: &mut Output<'_>, prep: &Prepared, cfg: &PipelineConfig) -> Result<()> {
    let Some(labels) = prep.labels()? else {
        warn!("no cluster labels; skipping cluster report");
        return Ok(());
    };
    let s = collapse(&prep.graph, &labels)?;
    if cfg.wants(Artifact::Collapse) {
        o.write("collapse.csv", |p| io::write_collapse(p, &s, false))?;
        o.write("collapse_log.csv", |p| io::write_collapse(p, &s, true))?;
    }
    if cfg.wants(Artifact::Ranking) {
        let ranked = rank_clusters(&degrees(&s), usize::MAX);
        o.write("ranking.csv", |p| io::write_ranking(p, &ranked))?;
    }
    Ok(())
}

/// Every stage into one directory.
pub fn run(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let mut o = Output::open(&cfg.out)?;
    let input = match &cfg.source {
        Source::Generate(g) => {
            let net = generate::<f64>(g)?;
            let records = net.records();
            o.write("edges.csv", |p| io::write_edges(p, &records))?;
            o.write("nodes.csv", |p| io::write_nodes(p, &net.meta))?;
            o.write("labels.csv", |p| {
                io::write_labels(p, net.graph.ids(), &net.labels)
            })?;
            Input {
                records,
                meta: net.meta,
            }
        }
        files => load(files)?,
    };
    let prep = prepare(&input, cfg.kernel.as_ref())?;
    write_prepared(&mut o, &prep, cfg)?;
    analyze_into(&mut o, &prep, cfg)?;
    report_into(&mut o, &prep, cfg)?;
    o.finish()
}
