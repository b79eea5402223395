//! Text formats.
//!
//! Edge file: one `view_id src_id dst_id` per line, optional header
//! `#nodes N #views K`, other `#` lines are comments. Label file:
//! `node_id label_id` per line. An optional id map (`name id` per line) lets
//! both files use string node names.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use super::MultiViewGraph;
use crate::error::{Error, Result};

struct Header {
    nodes: Option<usize>,
    views: Option<usize>,
}

fn parse_header(line: &str) -> Option<Header> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if !toks.first().is_some_and(|t| *t == "#nodes" || *t == "#views") {
        return None;
    }
    let mut h = Header { nodes: None, views: None };
    for pair in toks.chunks(2) {
        let value = pair.get(1).and_then(|v| v.parse::<usize>().ok());
        match pair[0] {
            "#nodes" => h.nodes = value,
            "#views" => h.views = value,
            _ => {}
        }
    }
    Some(h)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn resolve(tok: &str, ids: Option<&HashMap<String, usize>>, path: &Path, line: usize) -> Result<usize> {
    if let Some(map) = ids {
        if let Some(&id) = map.get(tok) {
            return Ok(id);
        }
    }
    tok.parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("bad node id {tok:?}")))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read_id_map(path: &Path) -> Result<HashMap<String, usize>> {
    let text = read(path)?;
    let mut map = HashMap::new();
    for (no, line) in content_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, no, "expected `name id`"));
        }
        let id = toks[1]
            .parse::<usize>()
            .map_err(|_| parse_err(path, no, format!("bad id {:?}", toks[1])))?;
        map.insert(toks[0].to_string(), id);
    }
    Ok(map)
}

pub fn load_graph(edge_path: &Path, label_path: Option<&Path>) -> Result<MultiViewGraph> {
    load_graph_with_ids(edge_path, label_path, None)
}

pub fn load_graph_with_ids(
    edge_path: &Path,
    label_path: Option<&Path>,
    id_map_path: Option<&Path>,
) -> Result<MultiViewGraph> {
    let ids = id_map_path.map(read_id_map).transpose()?;
    let text = read(edge_path)?;
    let mut header = Header { nodes: None, views: None };
    for line in text.lines().map(str::trim).filter(|l| l.starts_with('#')) {
        if let Some(h) = parse_header(line) {
            header = h;
        }
    }
    let mut raw = Vec::new();
    let mut max_node = None::<usize>;
    for (no, line) in content_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(edge_path, no, format!("expected `view src dst`, got {line:?}")));
        }
        let view = toks[0]
            .parse::<usize>()
            .map_err(|_| parse_err(edge_path, no, format!("bad view id {:?}", toks[0])))?;
        let a = resolve(toks[1], ids.as_ref(), edge_path, no)?;
        let b = resolve(toks[2], ids.as_ref(), edge_path, no)?;
        if a == b {
            return Err(parse_err(edge_path, no, format!("self-loop on node {a}")));
        }
        if let Some(n) = header.nodes {
            for node in [a, b] {
                if node >= n {
                    return Err(Error::NodeOutOfBounds { node, n }.context(format!("{}:{no}", edge_path.display())));
                }
            }
        }
        max_node = Some(max_node.map_or(a.max(b), |m| m.max(a).max(b)));
        raw.push((view, a, b, no));
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let n = header.nodes.unwrap_or_else(|| max_node.map_or(0, |m| m + 1));
    let view_index: HashMap<usize, usize> = match header.views {
        Some(k) => (0..k).map(|v| (v, v)).collect(),
        None => raw
            .iter()
            .map(|r| r.0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(dense, v)| (v, dense))
            .collect(),
    };
    let k = view_index.len();
    let mut views = vec![Vec::new(); k];
    for (view, a, b, no) in raw {
        let l = *view_index
            .get(&view)
            .ok_or_else(|| parse_err(edge_path, no, format!("view {view} outside declared {k} views")))?;
        views[l].push((a, b));
    }
    let labels = label_path
        .map(|p| read_labels(p, n, ids.as_ref()))
        .transpose()?;
    MultiViewGraph::new(n, views, labels)
}

/// Read a `node_id label_id` file into a dense per-node label vector.
pub fn read_labels(path: &Path, n: usize, ids: Option<&HashMap<String, usize>>) -> Result<Vec<Option<u32>>> {
    let text = read(path)?;
    let mut labels = vec![None; n];
    for (no, line) in content_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, no, "expected `node_id label_id`"));
        }
        let node = resolve(toks[0], ids, path, no)?;
        if node >= n {
            return Err(Error::NodeOutOfBounds { node, n }.context(format!("{}:{no}", path.display())));
        }
        let label = toks[1]
            .parse::<u32>()
            .map_err(|_| parse_err(path, no, format!("bad label {:?}", toks[1])))?;
        if labels[node].is_some_and(|l| l != label) {
            return Err(parse_err(path, no, format!("node {node} has more than one label")));
        }
        labels[node] = Some(label);
    }
    Ok(labels)
}

pub fn write_edges<W: Write>(g: &MultiViewGraph, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "#nodes {} #views {}", g.n(), g.k())?;
    for l in 0..g.k() {
        for &(a, b) in g.view_edges(l) {
            writeln!(w, "{l} {a} {b}")?;
        }
    }
    Ok(())
}

pub fn write_labels<W: Write>(g: &MultiViewGraph, w: &mut W) -> std::io::Result<()> {
    if let Some(labels) = g.labels() {
        for (i, l) in labels.iter().enumerate() {
            if let Some(l) = l {
                writeln!(w, "{i} {l}")?;
            }
        }
    }
    Ok(())
}

pub fn save_graph(g: &MultiViewGraph, edge_path: &Path, label_path: Option<&Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_edges(g, &mut buf).expect("write to Vec");
    fs::write(edge_path, buf).map_err(|e| Error::io(edge_path, e))?;
    if let Some(p) = label_path {
        let mut buf = Vec::new();
        write_labels(g, &mut buf).expect("write to Vec");
        fs::write(p, buf).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}
