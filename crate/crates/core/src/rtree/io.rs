//! Extended Newick and JSON serialization.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DiscreteTree, EdgeSpec, Label, Mark, NodeId, Position};
use crate::error::{domain, Error, Result};
use crate::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Newick,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "newick" | "nwk" => Ok(Format::Newick),
            "json" => Ok(Format::Json),
            other => domain(format!("unknown tree format {other:?}")),
        }
    }
}

pub fn export(tree: &DiscreteTree, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Newick => Ok(to_newick(tree).into_bytes()),
        Format::Json => Ok(serde_json::to_vec_pretty(&to_json(tree)).map_err(|e| Error::Parse(e.to_string()))?),
    }
}

pub fn import(bytes: &[u8], format: Format) -> Result<DiscreteTree> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    match format {
        Format::Newick => from_newick(text),
        Format::Json => {
            let doc: JsonTree = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
            from_json(&doc)
        }
    }
}

fn label_text(label: Label) -> String {
    match label {
        Label::Root => "root".into(),
        Label::Leaf(l) => l.to_string(),
        Label::Internal => String::new(),
    }
}

fn parse_label(s: &str, is_root: bool) -> Result<Label> {
    if is_root {
        return Ok(Label::Root);
    }
    if s.is_empty() {
        return Ok(Label::Internal);
    }
    s.parse().map(Label::Leaf).map_err(|_| Error::Parse(format!("bad leaf label {s:?}")))
}

fn to_newick(tree: &DiscreteTree) -> String {
    fn walk(tree: &DiscreteTree, v: NodeId, out: &mut String) {
        let node = tree.node(v);
        if !node.children.is_empty() {
            out.push('(');
            for (i, &e) in node.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                walk(tree, tree.edge(e).child, out);
            }
            out.push(')');
        }
        out.push_str(&label_text(node.label));
        let mut attrs = Vec::new();
        if let Some(e) = node.parent {
            let edge = tree.edge(e);
            let pos = match tree.position(e) {
                Position::Internal => "i",
                Position::External => "e",
                Position::Unmarked => "u",
            };
            attrs.push(format!("len={}", fmt17(edge.length)));
            attrs.push(format!("mass={}", fmt17(edge.mass)));
            attrs.push(format!("mark={}", u8::from(edge.mark == Mark::Marked)));
            attrs.push(format!("comp={}", edge.component));
            attrs.push(format!("pos={pos}"));
        }
        if node.atom_mass != 0.0 {
            attrs.push(format!("atom={}", fmt17(node.atom_mass)));
        }
        if !attrs.is_empty() {
            out.push('[');
            out.push_str(&attrs.join(","));
            out.push(']');
        }
    }
    let mut out = String::new();
    walk(tree, 0, &mut out);
    out.push(';');
    out
}

#[derive(Default)]
struct Parsed {
    children: Vec<Parsed>,
    label: String,
    attrs: Vec<(String, String)>,
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn err<T>(&self, what: &str) -> Result<T> {
        Err(Error::Parse(format!("newick: {what} at byte {}", self.i)))
    }

    fn node(&mut self) -> Result<Parsed> {
        let mut p = Parsed::default();
        if self.peek() == Some(b'(') {
            self.i += 1;
            loop {
                p.children.push(self.node()?);
                match self.peek() {
                    Some(b',') => self.i += 1,
                    Some(b')') => {
                        self.i += 1;
                        break;
                    }
                    _ => return self.err("expected ',' or ')'"),
                }
            }
        }
        let start = self.i;
        while let Some(c) = self.peek() {
            if b"(),[;".contains(&c) {
                break;
            }
            self.i += 1;
        }
        p.label = String::from_utf8_lossy(&self.s[start..self.i]).trim().to_string();
        if self.peek() == Some(b'[') {
            let close = match self.s[self.i..].iter().position(|&c| c == b']') {
                Some(k) => self.i + k,
                None => return self.err("unterminated attribute block"),
            };
            let body = String::from_utf8_lossy(&self.s[self.i + 1..close]).to_string();
            for kv in body.split(',').filter(|kv| !kv.trim().is_empty()) {
                match kv.split_once('=') {
                    Some((k, v)) => p.attrs.push((k.trim().to_string(), v.trim().to_string())),
                    None => return self.err("attribute without '='"),
                }
            }
            self.i = close + 1;
        }
        Ok(p)
    }
}

fn attr_f64(p: &Parsed, key: &str) -> Result<f64> {
    match p.attrs.iter().find(|(k, _)| k == key) {
        Some((_, v)) => v.parse().map_err(|_| Error::Parse(format!("bad {key} value {v:?}"))),
        None => Ok(0.0),
    }
}

fn from_newick(text: &str) -> Result<DiscreteTree> {
    let mut parser = Parser { s: text.trim().as_bytes(), i: 0 };
    let root = parser.node()?;
    if parser.peek() != Some(b';') {
        return parser.err("expected ';'");
    }
    let mut tree = DiscreteTree::new();
    tree.node_mut(0).atom_mass = attr_f64(&root, "atom")?;
    let mut stack: Vec<(&Parsed, NodeId)> = root.children.iter().rev().map(|c| (c, 0)).collect();
    while let Some((p, parent)) = stack.pop() {
        let mark = attr_f64(p, "mark")?;
        let spec = EdgeSpec {
            length: attr_f64(p, "len")?,
            mass: attr_f64(p, "mass")?,
            mark: if mark == 1.0 { Mark::Marked } else { Mark::Unmarked },
            component: attr_f64(p, "comp")? as u32,
        };
        let (_, v) = tree.add_child(parent, spec, parse_label(&p.label, false)?);
        tree.node_mut(v).atom_mass = attr_f64(p, "atom")?;
        stack.extend(p.children.iter().rev().map(|c| (c, v)));
    }
    tree.check().map_err(Error::Parse)?;
    Ok(tree)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonNode {
    id: usize,
    parent: Option<usize>,
    label: String,
    atom_mass: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonEdge {
    child: usize,
    len: f64,
    mass: f64,
    mark: u8,
    comp: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonTree {
    nodes: Vec<JsonNode>,
    edges: Vec<JsonEdge>,
}

fn to_json(tree: &DiscreteTree) -> JsonTree {
    let nodes = tree
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, n)| JsonNode {
            id,
            parent: n.parent.map(|e| tree.edge(e).parent),
            label: label_text(n.label),
            atom_mass: n.atom_mass,
        })
        .collect();
    let edges = tree
        .edges()
        .iter()
        .map(|e| JsonEdge {
            child: e.child,
            len: e.length,
            mass: e.mass,
            mark: u8::from(e.mark == Mark::Marked),
            comp: e.component,
        })
        .collect();
    JsonTree { nodes, edges }
}

fn from_json(doc: &JsonTree) -> Result<DiscreteTree> {
    let n = doc.nodes.len();
    let bad = |m: &str| Error::Parse(format!("json tree: {m}"));
    let mut children = vec![Vec::new(); n];
    let mut root = None;
    for node in &doc.nodes {
        if node.id >= n {
            return Err(bad("node id out of range"));
        }
        match node.parent {
            Some(p) if p < n => children[p].push(node.id),
            Some(_) => return Err(bad("parent out of range")),
            None if root.is_none() => root = Some(node.id),
            None => return Err(bad("several roots")),
        }
    }
    let root = root.ok_or_else(|| bad("no root"))?;
    let mut edge_of = vec![None; n];
    for e in &doc.edges {
        if e.child >= n {
            return Err(bad("edge child out of range"));
        }
        edge_of[e.child] = Some(e);
    }
    let by_id = |id: usize| doc.nodes.iter().find(|x| x.id == id).expect("checked");
    let mut tree = DiscreteTree::new();
    tree.node_mut(0).atom_mass = by_id(root).atom_mass;
    let mut stack: Vec<(usize, NodeId)> = children[root].iter().rev().map(|&c| (c, 0)).collect();
    while let Some((c, parent)) = stack.pop() {
        let e = edge_of[c].ok_or_else(|| bad("node without parent edge"))?;
        let spec = EdgeSpec {
            length: e.len,
            mass: e.mass,
            mark: if e.mark == 1 { Mark::Marked } else { Mark::Unmarked },
            component: e.comp,
        };
        let (_, v) = tree.add_child(parent, spec, parse_label(&by_id(c).label, false)?);
        tree.node_mut(v).atom_mass = by_id(c).atom_mass;
        stack.extend(children[c].iter().rev().map(|&g| (g, v)));
    }
    tree.check().map_err(Error::Parse)?;
    Ok(tree)
}
