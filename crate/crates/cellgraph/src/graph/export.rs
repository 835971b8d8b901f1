//! Graph serialization: GraphML and DOT for external tools, JSON for
//! lossless round-trips. All writers are byte-deterministic.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Node, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Graphml,
    Dot,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graphml" => Ok(ExportFormat::Graphml),
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown export format {other:?} (expected graphml, dot, or json)"
            ))),
        }
    }
}

pub fn export<W: Write>(g: &WeightedGraph, format: ExportFormat, out: &mut W) -> Result<()> {
    match format {
        ExportFormat::Graphml => write_graphml(g, out),
        ExportFormat::Dot => write_dot(g, out),
        ExportFormat::Json => write_json(g, out),
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

fn write_json<W: Write>(g: &WeightedGraph, out: &mut W) -> Result<()> {
    let doc = GraphDoc {
        nodes: g.nodes().to_vec(),
        edges: g.edges().to_vec(),
    };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Rebuild a graph from its JSON export, revalidating all invariants.
pub fn import_json<R: Read>(source: R) -> Result<WeightedGraph> {
    let doc: GraphDoc = serde_json::from_reader(source)?;
    let mut g = WeightedGraph::new();
    for node in doc.nodes {
        g.add_node(node)?;
    }
    for edge in doc.edges {
        g.add_edge(&edge.u, &edge.v, edge.w)?;
    }
    Ok(g)
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn write_graphml<W: Write>(g: &WeightedGraph, out: &mut W) -> Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#
    )?;
    writeln!(
        out,
        r#"  <key id="kind" for="node" attr.name="kind" attr.type="string"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="lat" for="node" attr.name="lat" attr.type="double"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="lon" for="node" attr.name="lon" attr.type="double"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="size" for="node" attr.name="size" attr.type="double"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="community" for="node" attr.name="community" attr.type="long"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>"#
    )?;
    writeln!(out, r#"  <graph id="G" edgedefault="undirected">"#)?;
    for node in g.nodes() {
        writeln!(out, r#"    <node id="{}">"#, escape_xml(&node.id))?;
        writeln!(
            out,
            r#"      <data key="kind">{}</data>"#,
            node.kind.as_str()
        )?;
        if let Some(lat) = node.lat {
            writeln!(out, r#"      <data key="lat">{lat}</data>"#)?;
        }
        if let Some(lon) = node.lon {
            writeln!(out, r#"      <data key="lon">{lon}</data>"#)?;
        }
        if let Some(size) = node.size {
            writeln!(out, r#"      <data key="size">{size}</data>"#)?;
        }
        if let Some(c) = node.community {
            writeln!(out, r#"      <data key="community">{c}</data>"#)?;
        }
        writeln!(out, r#"    </node>"#)?;
    }
    for edge in g.edges() {
        writeln!(
            out,
            r#"    <edge source="{}" target="{}">"#,
            escape_xml(&edge.u),
            escape_xml(&edge.v)
        )?;
        writeln!(out, r#"      <data key="weight">{}</data>"#, edge.w)?;
        writeln!(out, r#"    </edge>"#)?;
    }
    writeln!(out, r#"  </graph>"#)?;
    writeln!(out, r#"</graphml>"#)?;
    Ok(())
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn write_dot<W: Write>(g: &WeightedGraph, out: &mut W) -> Result<()> {
    writeln!(out, "graph g {{")?;
    writeln!(out, "  node [style=filled];")?;
    for node in g.nodes() {
        let mut attrs = vec![format!("kind=\"{}\"", node.kind.as_str())];
        if let Some(size) = node.size {
            attrs.push(format!("size=\"{size}\""));
        }
        if let Some(c) = node.community {
            attrs.push(format!("fillcolor={}", c + 1)); // colorscheme indexes from 1
        }
        writeln!(out, "  \"{}\" [{}];", escape_dot(&node.id), attrs.join(", "))?;
    }
    for edge in g.edges() {
        writeln!(
            out,
            "  \"{}\" -- \"{}\" [weight={}];",
            escape_dot(&edge.u),
            escape_dot(&edge.v),
            edge.w
        )?;
    }
    writeln!(out, "}}")?;
    Ok(())
}
