//! DIMACS graph files: `c` comment lines, one `p edge <n> <m>` header,
//! then `e <u> <v>` lines with 1-indexed endpoints.
//!
//! The parser is forgiving about the things real instance files get wrong:
//! duplicate edges and self-loops are skipped and counted in the returned
//! warnings instead of failing the load. Structural problems (no header,
//! out-of-range vertex, malformed line) are hard errors that carry the
//! offending line number.

use crate::graph::Graph;
use std::io::{BufRead, Write};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ParseWarnings {
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

impl ParseWarnings {
    pub fn any(&self) -> bool {
        self.duplicate_edges > 0 || self.self_loops > 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("no 'p' header line found")]
    MissingHeader,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> DimacsError {
    DimacsError::Syntax { line, msg: msg.into() }
}

pub fn parse<R: BufRead>(reader: R) -> Result<(Graph, ParseWarnings), DimacsError> {
    let mut graph: Option<Graph> = None;
    let mut warnings = ParseWarnings::default();
    let mut declared_edges = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            None | Some("c") => continue,
            Some("p") => {
                if graph.is_some() {
                    return Err(syntax(lineno, "second 'p' header"));
                }
                let _format = tokens
                    .next()
                    .ok_or_else(|| syntax(lineno, "'p' line missing format token"))?;
                let n: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| syntax(lineno, "'p' line missing vertex count"))?;
                declared_edges = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| syntax(lineno, "'p' line missing edge count"))?;
                graph = Some(Graph::new(n));
            }
            Some("e") => {
                let g = graph
                    .as_mut()
                    .ok_or_else(|| syntax(lineno, "'e' line before 'p' header"))?;
                let u: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| syntax(lineno, "bad edge endpoint"))?;
                let v: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| syntax(lineno, "bad edge endpoint"))?;
                if u == 0 || v == 0 || u > g.n() || v > g.n() {
                    return Err(syntax(
                        lineno,
                        format!("edge {u}-{v} out of range 1..={}", g.n()),
                    ));
                }
                if u == v {
                    warnings.self_loops += 1;
                    continue;
                }
                let (u, v) = (u - 1, v - 1);
                if g.has_edge(u, v) {
                    warnings.duplicate_edges += 1;
                    continue;
                }
                g.add_edge(u, v);
            }
            Some(other) => {
                return Err(syntax(lineno, format!("unrecognized line type '{other}'")));
            }
        }
    }

    let graph = graph.ok_or(DimacsError::MissingHeader)?;
    // The declared edge count is advisory in practice; real files are often
    // off by the number of duplicates. It is not validated.
    let _ = declared_edges;
    Ok((graph, warnings))
}

/// Write the present subgraph of `g` in the same format. Output is
/// deterministic: edges in lexicographic order, endpoints 1-indexed.
pub fn write<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "p edge {} {}", g.n(), g.edge_count())?;
    for (u, v) in g.edges() {
        writeln!(out, "e {} {}", u + 1, v + 1)?;
    }
    Ok(())
}

pub fn parse_str(text: &str) -> Result<(Graph, ParseWarnings), DimacsError> {
    parse(text.as_bytes())
}

pub fn to_string(g: &Graph) -> String {
    let mut buf = Vec::new();
    write(g, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("output is ASCII")
}
