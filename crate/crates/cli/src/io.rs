//! File input and all-or-nothing file output.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use blowfish_core::adjacency::{induce_adjacency_graph, AdjacencyDocument};
use blowfish_core::channel::ChannelMatrix;
use blowfish_core::graph::{Graph, GraphDocument};
use blowfish_core::policy::BlowfishPolicy;
use blowfish_core::AdjacencyGraph;

/// A failure with its process exit code: 2 for bad input, 3 for a resource
/// cap.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<blowfish_core::Error> for CliError {
    fn from(e: blowfish_core::Error) -> Self {
        Self {
            code: if e.is_size_limit() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

pub fn read_policy(path: &Path) -> CliResult<BlowfishPolicy> {
    BlowfishPolicy::from_json(&read_text(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_channel(path: &Path) -> CliResult<(ChannelMatrix, Option<Vec<String>>)> {
    ChannelMatrix::from_csv(&read_text(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// A graph to check channels against, with one label per vertex.
pub struct LabelledGraph {
    pub graph: Graph,
    pub labels: Vec<String>,
    /// Present when the graph was induced from a policy.
    pub induced: Option<(BlowfishPolicy, AdjacencyGraph)>,
}

fn join_labels(parts: &[String]) -> String {
    format!("({})", parts.join(","))
}

/// Loads a graph from a policy (inducing it under `cap`) or from a graph
/// document, which may be an adjacency graph.
pub fn load_graph(
    policy: Option<&Path>,
    graph: Option<&Path>,
    cap: usize,
) -> CliResult<LabelledGraph> {
    match (policy, graph) {
        (Some(p), None) => {
            let policy = read_policy(p)?;
            let adj = induce_adjacency_graph(&policy, cap)?;
            let labels = adj
                .vertices
                .iter()
                .map(|d| d.display(policy.universe()).to_string())
                .collect();
            Ok(LabelledGraph {
                graph: adj.graph.clone(),
                labels,
                induced: Some((policy, adj)),
            })
        }
        (None, Some(g)) => {
            let text = read_text(g)?;
            let bad = |e: &dyn fmt::Display| CliError::input(format!("{}: {e}", g.display()));
            if let Ok(doc) = serde_json::from_str::<AdjacencyDocument>(&text) {
                let graph = doc.to_graph().map_err(|e| bad(&e))?;
                let labels = doc.vertices.iter().map(|v| join_labels(v)).collect();
                return Ok(LabelledGraph {
                    graph,
                    labels,
                    induced: None,
                });
            }
            let doc: GraphDocument = serde_json::from_str(&text).map_err(|e| bad(&e))?;
            let graph = doc.to_graph().map_err(|e| bad(&e))?;
            let labels = match &doc.vertices {
                Some(v) => v.iter().map(|x| join_labels(x)).collect(),
                None => (0..graph.vertex_count()).map(|i| i.to_string()).collect(),
            };
            Ok(LabelledGraph {
                graph,
                labels,
                induced: None,
            })
        }
        _ => Err(CliError::input("give exactly one of --policy or --graph")),
    }
}

/// Comma-separated numbers from a one-row or one-column CSV.
pub fn read_numbers(path: &Path) -> CliResult<Vec<f64>> {
    let text = read_text(path)?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| CliError::input(format!("{}: `{s}`: {e}", path.display())))
        })
        .collect()
}

fn temp_path(target: &Path) -> PathBuf {
    let name = target
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    target.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

/// Writes every file or none: contents go to temporary siblings first and
/// are renamed into place only once all of them are on disk.
pub fn write_all(outputs: &[(PathBuf, String)]) -> CliResult<()> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, &Path)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (target, content) in outputs {
        let tmp = temp_path(target);
        let written = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(content.as_bytes())?;
            f.sync_all()
        });
        staged.push((tmp, target));
        if let Err(e) = written {
            cleanup(&staged);
            return Err(CliError::input(format!(
                "cannot write {}: {e}",
                target.display()
            )));
        }
    }
    for (k, (tmp, target)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, target) {
            cleanup(&staged[k..]);
            return Err(CliError::input(format!(
                "cannot write {}: {e}",
                target.display()
            )));
        }
    }
    Ok(())
}

/// Writes `content` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(p) => write_all(&[(p.to_path_buf(), content.to_string())]),
        None => io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::input(format!("cannot write to stdout: {e}"))),
    }
}
