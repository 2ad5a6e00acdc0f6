//! Plain-text file formats: edge lists, feature CSVs, label files, attack
//! traces, score tables, curve CSVs and JSON reports. Reals are written with
//! 17 significant digits so every file parses back to identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::attacks::{AttackBudget, AttackMethod, AttackTrace, EdgeOp};
use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, Graph};
use crate::harness::{CurvePoint, TradeoffCurve};
use crate::tensor::Matrix;

/// `{:.16e}`: 17 significant digits, exact round trip.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_real(s: &str, path: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("`{s}` is not a real number")))
}

fn parse_index(s: &str, path: &str, line: usize) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::parse(path, line, format!("`{s}` is not a node index")))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Canonical edges plus the node count (`# nodes N` pragma, else max index + 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl EdgeList {
    pub fn into_graph(self, n: Option<usize>) -> Result<Graph> {
        let n = n.unwrap_or(self.n);
        if n < self.n {
            return Err(Error::InvalidGraph(format!(
                "edge list references node {} but only {n} nodes are declared",
                self.n - 1
            )));
        }
        Graph::from_edges(n, &self.edges)
    }
}

pub fn parse_edge_list_str(text: &str, path: &str) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashMap::new();
    let mut declared = None;
    let mut max_node = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if it.next() == Some("nodes") {
                let n = it
                    .next()
                    .ok_or_else(|| Error::parse(path, line_no, "missing node count"))?;
                declared = Some(parse_index(n, path, line_no)?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(path, line_no, format!("expected `u v`, found `{line}`")));
        }
        let u = parse_index(fields[0], path, line_no)?;
        let v = parse_index(fields[1], path, line_no)?;
        if u == v {
            return Err(Error::parse(path, line_no, format!("self-loop on node {u}")));
        }
        let e = canonical(u, v);
        if let Some(first) = seen.insert(e, line_no) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate edge {} {} (first at line {first})", e.0, e.1),
            ));
        }
        max_node = Some(max_node.unwrap_or(0).max(e.1));
        edges.push(e);
    }
    let implied = max_node.map_or(0, |m| m + 1);
    let n = match declared {
        Some(d) if d < implied => {
            return Err(Error::parse(path, 0, format!("declared {d} nodes but node {} appears", implied - 1)))
        }
        Some(d) => d,
        None => implied,
    };
    edges.sort_unstable();
    Ok(EdgeList { n, edges })
}

pub fn parse_edge_list(path: &Path) -> Result<EdgeList> {
    parse_edge_list_str(&read(path)?, &path.display().to_string())
}

/// `# nodes N` followed by canonical `u v` lines in sorted order.
pub fn format_edge_list(g: &Graph) -> String {
    let mut s = format!("# nodes {}\n", g.n());
    for (u, v) in g.edges() {
        let _ = writeln!(s, "{u} {v}");
    }
    s
}

pub fn parse_features_csv_str(text: &str, path: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| parse_real(f, path, i + 1))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("row {} has {} columns, expected {}", rows.len(), row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 0, "no feature rows"));
    }
    Matrix::from_rows(&rows)
}

pub fn parse_features_csv(path: &Path) -> Result<Matrix> {
    parse_features_csv_str(&read(path)?, &path.display().to_string())
}

pub fn format_features_csv(x: &Matrix) -> String {
    let mut s = String::new();
    for i in 0..x.rows() {
        let row: Vec<String> = x.row(i).iter().map(|&v| fmt_real(v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_labels_str(text: &str, path: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            line.parse::<usize>()
                .map_err(|_| Error::parse(path, i + 1, format!("`{line}` is not a class index")))?,
        );
    }
    Ok(out)
}

pub fn parse_labels(path: &Path) -> Result<Vec<usize>> {
    parse_labels_str(&read(path)?, &path.display().to_string())
}

pub fn format_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

/// Edge list, feature CSV and label file describing one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetBundle {
    pub name: String,
    pub graph: std::path::PathBuf,
    pub features: Option<std::path::PathBuf>,
    pub labels: Option<std::path::PathBuf>,
}

impl DatasetBundle {
    /// `edges.txt`, `features.csv`, `labels.txt` inside `dir` (the last two
    /// optional).
    pub fn from_dir(dir: &Path) -> Self {
        let opt = |name: &str| Some(dir.join(name)).filter(|p| p.exists());
        DatasetBundle {
            name: dir
                .file_name()
                .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned()),
            graph: dir.join("edges.txt"),
            features: opt("features.csv"),
            labels: opt("labels.txt"),
        }
    }

    pub fn load(&self) -> Result<Graph> {
        let edges = parse_edge_list(&self.graph)?;
        let features = self.features.as_deref().map(parse_features_csv).transpose()?;
        let labels = self.labels.as_deref().map(parse_labels).transpose()?;
        let n = features.as_ref().map(|x| x.rows()).or(labels.as_ref().map(|l| l.len()));
        if let (Some(x), Some(l)) = (&features, &labels) {
            if x.rows() != l.len() {
                return Err(Error::Shape(format!("{} feature rows but {} labels", x.rows(), l.len())));
            }
        }
        let mut g = edges.into_graph(n)?;
        if let Some(x) = features {
            g = g.with_features(x)?;
        }
        if let Some(l) = labels {
            g = g.with_labels(l)?;
        }
        Ok(g)
    }
}

/// Writes `dir/edges.txt`, `dir/features.csv` and `dir/labels.txt`.
pub fn write_bundle(dir: &Path, g: &Graph) -> Result<()> {
    write_file(&dir.join("edges.txt"), &format_edge_list(g))?;
    if g.has_features() {
        write_file(&dir.join("features.csv"), &format_features_csv(g.features()))?;
    }
    if let Some(l) = g.labels() {
        write_file(&dir.join("labels.txt"), &format_labels(l))?;
    }
    Ok(())
}

pub fn format_trace(t: &AttackTrace) -> String {
    let b = &t.budget;
    let mut s = format!(
        "# method={} seed={} delta={} gamma={} delta_c={} cap={}\n",
        t.method.name(),
        t.seed,
        b.delta,
        fmt_real(b.gamma),
        b.delta_c,
        fmt_real(b.noticeability_cap)
    );
    for op in &t.ops {
        let _ = writeln!(s, "{op}");
    }
    s
}

pub fn parse_trace_str(text: &str, path: &str) -> Result<AttackTrace> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty trace file"))?;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(path, 1, "trace header must start with `#`"))?;
    let mut method = None;
    let mut seed = None;
    let mut budget = AttackBudget::exact(0);
    for kv in header.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(path, 1, format!("bad header field `{kv}`")))?;
        match k {
            "method" => method = Some(AttackMethod::from_str(v).map_err(|e| Error::parse(path, 1, e.to_string()))?),
            "seed" => seed = Some(v.parse::<u64>().map_err(|_| Error::parse(path, 1, "bad seed"))?),
            "delta" => budget.delta = parse_index(v, path, 1)?,
            "gamma" => budget.gamma = parse_real(v, path, 1)?,
            "delta_c" => budget.delta_c = parse_index(v, path, 1)?,
            "cap" => budget.noticeability_cap = parse_real(v, path, 1)?,
            other => return Err(Error::parse(path, 1, format!("unknown header field `{other}`"))),
        }
    }
    let mut ops = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::parse(path, i + 1, format!("expected `I|D u v`, found `{line}`")));
        }
        let u = parse_index(f[1], path, i + 1)?;
        let v = parse_index(f[2], path, i + 1)?;
        if u == v {
            return Err(Error::parse(path, i + 1, "self-loop in trace"));
        }
        ops.push(match f[0] {
            "I" => EdgeOp::insert(u, v),
            "D" => EdgeOp::delete(u, v),
            other => return Err(Error::parse(path, i + 1, format!("unknown operation `{other}`"))),
        });
    }
    Ok(AttackTrace {
        ops,
        method: method.ok_or_else(|| Error::parse(path, 1, "missing method"))?,
        budget,
        seed: seed.ok_or_else(|| Error::parse(path, 1, "missing seed"))?,
    })
}

pub fn parse_trace(path: &Path) -> Result<AttackTrace> {
    parse_trace_str(&read(path)?, &path.display().to_string())
}

/// `u v score` rows.
pub fn format_scores(pairs: &[Edge], scores: &[f64]) -> String {
    let mut s = String::new();
    for (&(u, v), &x) in pairs.iter().zip(scores) {
        let _ = writeln!(s, "{u} {v} {}", fmt_real(x));
    }
    s
}

pub fn parse_scores_str(text: &str, path: &str) -> Result<(Vec<Edge>, Vec<f64>)> {
    let mut pairs = Vec::new();
    let mut scores = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::parse(path, i + 1, format!("expected `u v score`, found `{line}`")));
        }
        pairs.push((parse_index(f[0], path, i + 1)?, parse_index(f[1], path, i + 1)?));
        scores.push(parse_real(f[2], path, i + 1)?);
    }
    Ok((pairs, scores))
}

pub const CURVE_HEADER: &str = "t,accuracy,noticeability";

/// Curve CSV; undefined noticeability is an empty field.
pub fn format_curve(c: &TradeoffCurve) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for p in &c.points {
        let n = p.noticeability.map(fmt_real).unwrap_or_default();
        let _ = writeln!(s, "{},{},{n}", fmt_real(p.t), fmt_real(p.accuracy));
    }
    s
}

pub fn parse_curve_str(text: &str, path: &str, measure: &str, seed: u64) -> Result<TradeoffCurve> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CURVE_HEADER => {}
        _ => return Err(Error::parse(path, 1, format!("expected header `{CURVE_HEADER}`"))),
    }
    let mut points = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::parse(path, i + 1, "expected three columns"));
        }
        points.push(CurvePoint {
            t: parse_real(f[0], path, i + 1)?,
            accuracy: parse_real(f[1], path, i + 1)?,
            noticeability: if f[2].trim().is_empty() { None } else { Some(parse_real(f[2], path, i + 1)?) },
        });
    }
    Ok(TradeoffCurve {
        measure: measure.to_string(),
        points,
        seed,
    })
}

pub fn parse_curve(path: &Path) -> Result<TradeoffCurve> {
    parse_curve_str(&read(path)?, &path.display().to_string(), "", 0)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
