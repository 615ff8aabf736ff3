//! CSV readers and artifact writers.
//!
//! Every writer renders the whole file in memory and moves it into place
//! with a rename, so an output path holds either a complete file or nothing
//! new.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use crate::cluster::{AlignmentRow, ClusterLabels, CollapseMatrix, RankedCluster};
use crate::diffusion::DiffusionEmbedding;
use crate::error::{Error, Result};
use crate::graph::{NodeMeta, RawInteraction};
use crate::histogram::Histogram;
use crate::localization::{Coloring, LocalizationReport};
use crate::scalar::Scalar;
use crate::spectral::EigenSystem;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

struct Table<'a> {
    path: &'a Path,
    reader: csv::Reader<fs::File>,
    columns: Vec<String>,
}

impl<'a> Table<'a> {
    fn open(path: &'a Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let columns = reader
            .headers()
            .map_err(|e| csv_err(path, 1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        Ok(Self {
            path,
            reader,
            columns,
        })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| csv_err(self.path, 1, format!("missing column `{name}`")))
    }

    fn rows(&mut self) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + '_ {
        let path = self.path;
        self.reader.records().map(move |r| {
            let rec = r.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                csv_err(path, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            Ok((line, rec))
        })
    }
}

fn parse_num<T: Scalar>(
    path: &Path,
    line: u64,
    rec: &csv::StringRecord,
    col: usize,
    name: &str,
) -> Result<T> {
    let raw = rec.get(col).unwrap_or("");
    raw.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .map(T::lit)
        .ok_or_else(|| csv_err(path, line, format!("`{name}` is not a number: `{raw}`")))
}

fn parse_id(
    path: &Path,
    line: u64,
    rec: &csv::StringRecord,
    col: usize,
    name: &str,
) -> Result<String> {
    match rec.get(col) {
        Some(s) if !s.is_empty() => Ok(s.to_string()),
        _ => Err(csv_err(path, line, format!("empty `{name}`"))),
    }
}

/// Reads `source,target,intensity[,duration_seconds]`.
pub fn read_edges<T: Scalar>(path: &Path) -> Result<Vec<RawInteraction<T>>> {
    let mut table = Table::open(path)?;
    let s = table.require("source")?;
    let t = table.require("target")?;
    let w = table.require("intensity")?;
    let dur = table.column("duration_seconds");
    let mut out = Vec::new();
    for row in table.rows() {
        let (line, rec) = row?;
        let mut r = RawInteraction::new(
            parse_id(path, line, &rec, s, "source")?,
            parse_id(path, line, &rec, t, "target")?,
            parse_num(path, line, &rec, w, "intensity")?,
        );
        if let Some(c) = dur {
            if rec.get(c).is_some_and(|v| !v.is_empty()) {
                r = r.with_duration(parse_num(path, line, &rec, c, "duration_seconds")?);
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Reads `id,population,longitude,latitude[,cluster_label]`.
pub fn read_nodes<T: Scalar>(path: &Path) -> Result<Vec<NodeMeta<T>>> {
    let mut table = Table::open(path)?;
    let id = table.require("id")?;
    let pop = table.require("population")?;
    let lon = table.require("longitude")?;
    let lat = table.require("latitude")?;
    let label = table.column("cluster_label");
    let mut out = Vec::new();
    for row in table.rows() {
        let (line, rec) = row?;
        let mut m = NodeMeta::new(
            parse_id(path, line, &rec, id, "id")?,
            parse_num(path, line, &rec, pop, "population")?,
            parse_num(path, line, &rec, lon, "longitude")?,
            parse_num(path, line, &rec, lat, "latitude")?,
        );
        if let Some(l) = label.and_then(|c| rec.get(c)).filter(|l| !l.is_empty()) {
            m = m.with_label(l);
        }
        out.push(m);
    }
    Ok(out)
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.partial"));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

struct CsvOut {
    w: csv::Writer<Vec<u8>>,
    rows: usize,
}

impl CsvOut {
    fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header.iter().map(AsRef::as_ref))
            .expect("in-memory write");
        Self { w, rows: 0 }
    }

    fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).expect("in-memory write");
        self.rows += 1;
    }

    fn save(self, path: &Path) -> Result<usize> {
        let bytes = self
            .w
            .into_inner()
            .map_err(|e| csv_err(path, 0, e.to_string()))?;
        write_atomic(path, &bytes)?;
        Ok(self.rows)
    }
}

fn s<D: Display>(x: D) -> String {
    x.to_string()
}

/// `source,target,intensity`, one row per unordered pair.
pub fn write_edges<T: Scalar>(path: &Path, records: &[RawInteraction<T>]) -> Result<usize> {
    let mut out = CsvOut::new(&["source", "target", "intensity"]);
    for r in records {
        out.row([r.source.clone(), r.target.clone(), s(r.intensity)]);
    }
    out.save(path)
}

pub fn write_nodes<T: Scalar>(path: &Path, meta: &[NodeMeta<T>]) -> Result<usize> {
    let mut out = CsvOut::new(&["id", "population", "longitude", "latitude", "cluster_label"]);
    for m in meta {
        out.row([
            m.id.clone(),
            s(m.population),
            s(m.longitude),
            s(m.latitude),
            m.cluster_label.clone().unwrap_or_default(),
        ]);
    }
    out.save(path)
}

pub fn write_labels(path: &Path, ids: &[String], labels: &ClusterLabels) -> Result<usize> {
    let mut out = CsvOut::new(&["node_id", "cluster_label"]);
    for (i, id) in ids.iter().enumerate() {
        out.row([id.as_str(), labels.label(i)]);
    }
    out.save(path)
}

/// `rank,lambda,residual`
pub fn write_eigensystem<T: Scalar>(path: &Path, es: &EigenSystem<T>) -> Result<usize> {
    let mut out = CsvOut::new(&["rank", "lambda", "residual"]);
    for (r, (l, res)) in es.lambdas.iter().zip(&es.residuals).enumerate() {
        out.row([s(r), s(l), s(res)]);
    }
    out.save(path)
}

/// `node_id,psi,phi` for eigenvector `r`.
pub fn write_eigenvector<T: Scalar>(
    path: &Path,
    es: &EigenSystem<T>,
    r: usize,
    ids: &[String],
) -> Result<usize> {
    let mut out = CsvOut::new(&["node_id", "psi", "phi"]);
    for (node, id) in ids.iter().enumerate() {
        out.row([id.clone(), s(es.psi[r][node]), s(es.phi[r][node])]);
    }
    out.save(path)
}

fn meta_fields<T: Scalar>(m: &NodeMeta<T>) -> [String; 3] {
    [
        s(m.longitude),
        s(m.latitude),
        m.cluster_label.clone().unwrap_or_default(),
    ]
}

/// `node_id,coord_1..coord_k[,longitude,latitude,cluster_label]`; `meta` follows graph order.
pub fn write_embedding<T: Scalar>(
    path: &Path,
    emb: &DiffusionEmbedding<T>,
    ids: &[String],
    meta: Option<&[NodeMeta<T>]>,
) -> Result<usize> {
    let mut header = vec!["node_id".to_string()];
    header.extend((1..=emb.k()).map(|a| format!("coord_{a}")));
    if meta.is_some() {
        header.extend(["longitude", "latitude", "cluster_label"].map(String::from));
    }
    let mut out = CsvOut::new(&header);
    for (node, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(emb.coords[node].iter().map(s));
        if let Some(m) = meta {
            row.extend(meta_fields(&m[node]));
        }
        out.row(row);
    }
    out.save(path)
}

/// `node_id,value,longitude,latitude[,cluster_label]`; `meta` follows graph order.
pub fn write_coloring<T: Scalar>(
    path: &Path,
    c: &Coloring<T>,
    ids: &[String],
    meta: &[NodeMeta<T>],
) -> Result<usize> {
    let labelled = meta.iter().any(|m| m.cluster_label.is_some());
    let mut header = vec!["node_id", "value", "longitude", "latitude"];
    if labelled {
        header.push("cluster_label");
    }
    let mut out = CsvOut::new(&header);
    for (node, id) in ids.iter().enumerate() {
        let [lon, lat, label] = meta_fields(&meta[node]);
        let mut row = vec![id.clone(), s(c.values[node]), lon, lat];
        if labelled {
            row.push(label);
        }
        out.row(row);
    }
    out.save(path)
}

/// Dot per node at (longitude, latitude), colored on a blue-white-red scale centered at 0.
pub fn render_coloring_svg<T: Scalar>(c: &Coloring<T>, meta: &[NodeMeta<T>]) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 12.0;
    let xs: Vec<f64> = meta.iter().map(|m| m.longitude.as_f64()).collect();
    let ys: Vec<f64> = meta.iter().map(|m| m.latitude.as_f64()).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, if hi > lo { hi - lo } else { 1.0 })
    };
    let (x0, xw) = span(&xs);
    let (y0, yw) = span(&ys);
    let peak = c
        .values
        .iter()
        .map(|v| v.as_f64().abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"0 0 {w} {w}\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n",
        w = SIZE + 2.0 * PAD
    );
    for (node, v) in c.values.iter().enumerate() {
        let u = (v.as_f64() / peak).clamp(-1.0, 1.0);
        let fade = (255.0 * (1.0 - u.abs())).round() as u8;
        let (r, g, b) = if u >= 0.0 {
            (255, fade, fade)
        } else {
            (fade, fade, 255)
        };
        let x = PAD + SIZE * (xs[node] - x0) / xw;
        let y = PAD + SIZE * (1.0 - (ys[node] - y0) / yw);
        svg.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"#{r:02x}{g:02x}{b:02x}\" stroke=\"#555555\" stroke-width=\"0.3\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// `bin,lo,hi,count`
pub fn write_histogram<T: Scalar>(path: &Path, h: &Histogram<T>) -> Result<usize> {
    let mut out = CsvOut::new(&["bin", "lo", "hi", "count"]);
    for (b, count) in h.counts.iter().enumerate() {
        out.row([s(b), s(h.edge(b)), s(h.edge(b + 1)), s(count)]);
    }
    out.save(path)
}

/// Square matrix with a label header row and a label first column.
/// With `log`, entries are written as `log10(1 + S_ij)`.
pub fn write_collapse<T: Scalar>(path: &Path, c: &CollapseMatrix<T>, log: bool) -> Result<usize> {
    let mut header = vec!["cluster".to_string()];
    header.extend(c.labels.iter().cloned());
    let mut out = CsvOut::new(&header);
    for (label, row) in c.labels.iter().zip(&c.s) {
        let mut fields = vec![label.clone()];
        fields.extend(
            row.iter()
                .map(|&x| if log { s((T::one() + x).log10()) } else { s(x) }),
        );
        out.row(fields);
    }
    out.save(path)
}

/// `rank,cluster,ratio`, with `inf` for isolated clusters.
pub fn write_ranking<T: Scalar>(path: &Path, ranked: &[RankedCluster<T>]) -> Result<usize> {
    let mut out = CsvOut::new(&["rank", "cluster", "ratio"]);
    for r in ranked {
        out.row([s(r.rank), r.label.clone(), s(r.ratio)]);
    }
    out.save(path)
}

/// `order,best_cluster,captured_mass,cluster_ratio_rank`
pub fn write_alignment<T: Scalar>(path: &Path, rows: &[AlignmentRow<T>]) -> Result<usize> {
    let mut out = CsvOut::new(&[
        "order",
        "best_cluster",
        "captured_mass",
        "cluster_ratio_rank",
    ]);
    for r in rows {
        out.row([
            s(r.order),
            r.best_cluster.clone(),
            s(r.captured_mass),
            s(r.cluster_ratio_rank),
        ]);
    }
    out.save(path)
}

/// `order,ipr,theta,support_fraction,top_cluster,top_cluster_mass`
pub fn write_localization<T: Scalar>(
    path: &Path,
    reports: &[LocalizationReport<T>],
) -> Result<usize> {
    let mut out = CsvOut::new(&[
        "order",
        "ipr",
        "theta",
        "support_fraction",
        "top_cluster",
        "top_cluster_mass",
    ]);
    for r in reports {
        let (label, mass) = r
            .top_clusters
            .first()
            .map(|(l, m)| (l.clone(), s(m)))
            .unwrap_or_default();
        out.row([
            s(r.order),
            s(r.ipr),
            s(r.theta),
            s(r.support_fraction),
            label,
            mass,
        ]);
    }
    out.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(name: &str) -> std::path::PathBuf {
        let dir =
            std::env::temp_dir().join(format!("geospectral-io-{}-{name}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn edges_roundtrip_with_optional_duration() {
        let dir = scratch("edges");
        let p = dir.join("e.csv");
        fs::write(
            &p,
            "source,target,intensity,duration_seconds\na,b,3,60\nb,c,1.5,\n",
        )
        .unwrap();
        let e: Vec<RawInteraction<f64>> = read_edges(&p).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].duration, Some(60.0));
        assert_eq!(e[1].duration, None);
        assert_eq!(e[1].intensity, 1.5);
        let q = dir.join("out.csv");
        assert_eq!(write_edges(&q, &e).unwrap(), 2);
        let back: Vec<RawInteraction<f64>> = read_edges(&q).unwrap();
        assert_eq!(back[0].intensity, 3.0);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = scratch("bad");
        let p = dir.join("e.csv");
        fs::write(&p, "source,target,intensity\na,b,1\na,c,lots\n").unwrap();
        let err = read_edges::<f64>(&p).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
        fs::write(&p, "source,intensity\na,1\n").unwrap();
        let err = read_edges::<f64>(&p).unwrap_err().to_string();
        assert!(err.contains("target"), "{err}");
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_nodes::<f64>(Path::new("/nonexistent/nodes.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/nodes.csv"));
    }

    #[test]
    fn nodes_with_and_without_labels() {
        let dir = scratch("nodes");
        let p = dir.join("n.csv");
        fs::write(
            &p,
            "id,population,longitude,latitude,cluster_label\na,10,1,2,VA\nb,5,0,0,\n",
        )
        .unwrap();
        let n: Vec<NodeMeta<f64>> = read_nodes(&p).unwrap();
        assert_eq!(n[0].cluster_label.as_deref(), Some("VA"));
        assert_eq!(n[1].cluster_label, None);
        assert_eq!(n[0].population, 10.0);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn collapse_csv_layout() {
        let dir = scratch("collapse");
        let c = CollapseMatrix {
            labels: vec!["a".into(), "b".into()],
            s: vec![vec![4.0, 2.0], vec![2.0, 99.0]],
        };
        let p = dir.join("c.csv");
        assert_eq!(write_collapse(&p, &c, false).unwrap(), 2);
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "cluster,a,b\na,4,2\nb,2,99\n"
        );
        write_collapse(&p, &c, true).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.lines().nth(2).unwrap().ends_with(",2"), "{text}");
        assert!(!dir.join(".c.csv.partial").exists());
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn svg_has_one_dot_per_node() {
        let meta = vec![
            NodeMeta::new("a", 1.0, 0.0, 0.0),
            NodeMeta::new("b", 1.0, 1.0, 1.0),
            NodeMeta::new("c", 1.0, 0.5, 0.2),
        ];
        let c = Coloring {
            order: 1,
            values: vec![-1.0, 1.0, 0.0],
        };
        let svg = render_coloring_svg(&c, &meta);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(
            svg.contains("#0000ff") && svg.contains("#ff0000") && svg.contains("#ffffff\" stroke")
        );
    }
}
