//! Labeled rooted trees describing knots built from torus or opaque knots by
//! braid satellites and connected sums, with their bridge-number calculus.

use std::fmt;

use num_integer::Integer;
use serde_json::{json, Value};
use thiserror::Error;

use crate::braid::{BraidError, BraidWord};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LeafLabel {
    Torus { p: u64, q: u64 },
    Opaque { name: String, bridge: u64, tame: bool },
}

impl LeafLabel {
    pub fn bridge_number(&self) -> u64 {
        match self {
            LeafLabel::Torus { p, q } => (*p).min(*q),
            LeafLabel::Opaque { bridge, .. } => *bridge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Leaf(LeafLabel),
    Satellite(BraidWord),
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: NodeLabel,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Partition class by number of children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexClass {
    V0,
    V1,
    V2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    BadTorus { vertex: usize, p: u64, q: u64 },
    TrivialOpaque { vertex: usize, bridge: u64 },
    LeafWithChildren(usize),
    SatelliteChildren { vertex: usize, children: usize },
    SumChildren { vertex: usize, children: usize },
    TooFewStrands(usize),
    NotKnotPattern(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadTorus { vertex, p, q } => {
                write!(f, "vertex {vertex}: torus({p},{q}) needs p > q >= 2 and gcd 1")
            }
            Violation::TrivialOpaque { vertex, bridge } => {
                write!(f, "vertex {vertex}: opaque leaf bridge number {bridge} < 2")
            }
            Violation::LeafWithChildren(v) => write!(f, "vertex {v}: leaf has children"),
            Violation::SatelliteChildren { vertex, children } => {
                write!(f, "vertex {vertex}: satellite vertex has {children} children, needs 1")
            }
            Violation::SumChildren { vertex, children } => {
                write!(f, "vertex {vertex}: sum vertex has {children} children, needs at least 2")
            }
            Violation::TooFewStrands(v) => write!(f, "vertex {v}: braid needs at least 2 strands"),
            Violation::NotKnotPattern(v) => write!(f, "vertex {v}: closed braid is not a knot"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid tree: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
}

/// A rooted tree with vertices numbered in preorder; the root is `0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KnotTree {
    nodes: Vec<Node>,
}

impl KnotTree {
    pub fn leaf(label: LeafLabel) -> Self {
        KnotTree { nodes: vec![Node { label: NodeLabel::Leaf(label), parent: None, children: vec![] }] }
    }

    pub fn torus(p: u64, q: u64) -> Self {
        Self::leaf(LeafLabel::Torus { p, q })
    }

    pub fn opaque(name: &str, bridge: u64, tame: bool) -> Self {
        Self::leaf(LeafLabel::Opaque { name: name.to_string(), bridge, tame })
    }

    pub fn satellite(braid: BraidWord, companion: KnotTree) -> Self {
        Self::join(NodeLabel::Satellite(braid), vec![companion])
    }

    pub fn sum(summands: Vec<KnotTree>) -> Self {
        Self::join(NodeLabel::Sum, summands)
    }

    fn join(label: NodeLabel, subtrees: Vec<KnotTree>) -> Self {
        let mut nodes = vec![Node { label, parent: None, children: vec![] }];
        for sub in subtrees {
            let offset = nodes.len();
            nodes[0].children.push(offset);
            for mut node in sub.nodes {
                node.parent = Some(node.parent.map_or(0, |p| p + offset));
                for c in &mut node.children {
                    *c += offset;
                }
                nodes.push(node);
            }
        }
        KnotTree { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, v: usize) -> Result<&Node, TreeError> {
        self.nodes.get(v).ok_or(TreeError::UnknownVertex(v))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.nodes[v].children
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.nodes[v].parent
    }

    pub fn class(&self, v: usize) -> VertexClass {
        match self.nodes[v].children.len() {
            0 => VertexClass::V0,
            1 => VertexClass::V1,
            _ => VertexClass::V2,
        }
    }

    pub fn braid(&self, v: usize) -> Option<&BraidWord> {
        match &self.nodes[v].label {
            NodeLabel::Satellite(b) => Some(b),
            _ => None,
        }
    }

    pub fn leaf_label(&self, v: usize) -> Option<&LeafLabel> {
        match &self.nodes[v].label {
            NodeLabel::Leaf(l) => Some(l),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        for (v, node) in self.nodes.iter().enumerate() {
            let kids = node.children.len();
            match &node.label {
                NodeLabel::Leaf(l) => {
                    if kids > 0 {
                        out.push(Violation::LeafWithChildren(v));
                    }
                    match l {
                        LeafLabel::Torus { p, q } => {
                            if !(*q >= 2 && p > q && p.gcd(q) == 1) {
                                out.push(Violation::BadTorus { vertex: v, p: *p, q: *q });
                            }
                        }
                        LeafLabel::Opaque { bridge, .. } => {
                            if *bridge < 2 {
                                out.push(Violation::TrivialOpaque { vertex: v, bridge: *bridge });
                            }
                        }
                    }
                }
                NodeLabel::Satellite(b) => {
                    if kids != 1 {
                        out.push(Violation::SatelliteChildren { vertex: v, children: kids });
                    }
                    if b.strands() < 2 {
                        out.push(Violation::TooFewStrands(v));
                    } else if !b.is_knot_pattern() {
                        out.push(Violation::NotKnotPattern(v));
                    }
                }
                NodeLabel::Sum => {
                    if kids < 2 {
                        out.push(Violation::SumChildren { vertex: v, children: kids });
                    }
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    fn check(&self) -> Result<(), TreeError> {
        self.validate().map_err(TreeError::Invalid)
    }

    /// Strand count for satellite vertices, `1` otherwise.
    pub fn n_of(&self, v: usize) -> Result<u64, TreeError> {
        Ok(match &self.node(v)?.label {
            NodeLabel::Satellite(b) if self.nodes[v].children.len() == 1 => b.strands() as u64,
            _ => 1,
        })
    }

    /// Product of `n` over the strict ancestors of `v`.
    pub fn height(&self, v: usize) -> Result<u64, TreeError> {
        self.node(v)?;
        let mut h = 1;
        let mut cur = v;
        while let Some(p) = self.nodes[cur].parent {
            h *= self.n_of(p)?;
            cur = p;
        }
        Ok(h)
    }

    pub fn height_plus(&self, v: usize) -> Result<u64, TreeError> {
        Ok(self.height(v)? * self.n_of(v)?)
    }

    pub fn vertices_of(&self, class: VertexClass) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| self.class(v) == class).collect()
    }

    /// Closed form: heights times leaf bridge numbers, less the sum
    /// corrections.
    pub fn bridge_number(&self) -> Result<u64, TreeError> {
        self.check()?;
        let mut plus = 0u64;
        let mut minus = 0u64;
        for v in 0..self.nodes.len() {
            match self.class(v) {
                VertexClass::V0 => {
                    plus += self.height(v)? * self.leaf_label(v).expect("valid leaf").bridge_number();
                }
                VertexClass::V2 => minus += self.height(v)? * (self.nodes[v].children.len() as u64 - 1),
                VertexClass::V1 => {}
            }
        }
        Ok(plus - minus)
    }

    /// Recursion on the root: satellites multiply, sums add less one per
    /// extra summand.
    pub fn bridge_number_recursive(&self) -> Result<u64, TreeError> {
        self.check()?;
        Ok(self.subtree_bridge(0))
    }

    /// Bridge number of the knot described by the subtree at `v`.
    pub fn subtree_bridge(&self, v: usize) -> u64 {
        let node = &self.nodes[v];
        match &node.label {
            NodeLabel::Leaf(l) => l.bridge_number(),
            NodeLabel::Satellite(b) => b.strands() as u64 * self.subtree_bridge(node.children[0]),
            NodeLabel::Sum => {
                node.children.iter().map(|&c| self.subtree_bridge(c)).sum::<u64>() - (node.children.len() as u64 - 1)
            }
        }
    }

    /// The subtree at `v` as a standalone tree.
    pub fn subtree(&self, v: usize) -> KnotTree {
        let node = &self.nodes[v];
        match &node.label {
            NodeLabel::Leaf(l) => KnotTree::leaf(l.clone()),
            label => KnotTree::join(label.clone(), node.children.iter().map(|&c| self.subtree(c)).collect()),
        }
    }

    pub fn to_json(&self) -> Result<Value, TreeError> {
        let bridge = self.bridge_number()?;
        let mut heights = serde_json::Map::new();
        for v in 0..self.nodes.len() {
            heights.insert(v.to_string(), json!(self.height(v)?));
        }
        Ok(json!({
            "bridge": bridge,
            "heights": heights,
            "partition": {
                "V0": self.vertices_of(VertexClass::V0),
                "V1": self.vertices_of(VertexClass::V1),
                "V2": self.vertices_of(VertexClass::V2),
            }
        }))
    }

    /// Parses and validates the tree DSL.
    pub fn parse(text: &str) -> Result<KnotTree, TreeError> {
        let mut p = Parser { chars: text.chars().collect(), pos: 0, line: 1, column: 1 };
        p.skip_ws();
        let tree = p.tree()?;
        p.skip_ws();
        if p.peek().is_some() {
            return Err(p.error("trailing input after tree"));
        }
        tree.check()?;
        Ok(tree)
    }

    fn fmt_vertex(&self, v: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let node = &self.nodes[v];
        match &node.label {
            NodeLabel::Leaf(LeafLabel::Torus { p, q }) => write!(f, "torus({p},{q})"),
            NodeLabel::Leaf(LeafLabel::Opaque { name, bridge, tame }) => {
                write!(f, "opaque({name},{bridge}{})", if *tame { ",tame" } else { "" })
            }
            NodeLabel::Satellite(b) => {
                write!(f, "sat(braid {} \"{}\", ", b.strands(), b)?;
                for &c in &node.children {
                    self.fmt_vertex(c, f)?;
                }
                write!(f, ")")
            }
            NodeLabel::Sum => {
                write!(f, "sum(")?;
                for (k, &c) in node.children.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    self.fmt_vertex(c, f)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for KnotTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_vertex(0, f)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Parser {
    fn error(&self, message: &str) -> TreeError {
        TreeError::Parse { line: self.line, column: self.column, message: message.to_string() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TreeError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn int(&mut self) -> Result<u64, TreeError> {
        self.skip_ws();
        let start = (self.line, self.column);
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        s.parse().map_err(|_| TreeError::Parse {
            line: start.0,
            column: start.1,
            message: "expected an integer".into(),
        })
    }

    fn tree(&mut self) -> Result<KnotTree, TreeError> {
        self.skip_ws();
        let (line, column) = (self.line, self.column);
        let head = self.ident();
        match head.as_str() {
            "torus" => {
                self.expect('(')?;
                let p = self.int()?;
                self.expect(',')?;
                let q = self.int()?;
                self.expect(')')?;
                Ok(KnotTree::torus(p, q))
            }
            "opaque" => {
                self.expect('(')?;
                self.skip_ws();
                let name = self.ident();
                if name.is_empty() {
                    return Err(self.error("expected a knot name"));
                }
                self.expect(',')?;
                let bridge = self.int()?;
                self.skip_ws();
                let mut tame = false;
                if self.peek() == Some(',') {
                    self.bump();
                    self.skip_ws();
                    if self.ident() != "tame" {
                        return Err(self.error("expected `tame`"));
                    }
                    tame = true;
                }
                self.expect(')')?;
                Ok(KnotTree::opaque(&name, bridge, tame))
            }
            "sat" => {
                self.expect('(')?;
                self.skip_ws();
                if self.ident() != "braid" {
                    return Err(self.error("expected `braid`"));
                }
                let strands = self.int()? as usize;
                self.expect('"')?;
                let (bl, bc) = (self.line, self.column);
                let mut text = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some(c) => text.push(c),
                        None => return Err(self.error("unterminated braid string")),
                    }
                }
                let braid = BraidWord::parse(strands, &text).map_err(|e: BraidError| TreeError::Parse {
                    line: bl,
                    column: bc,
                    message: e.to_string(),
                })?;
                self.expect(',')?;
                let child = self.tree()?;
                self.expect(')')?;
                Ok(KnotTree::satellite(braid, child))
            }
            "sum" => {
                self.expect('(')?;
                let mut parts = vec![self.tree()?];
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => {
                            self.bump();
                            parts.push(self.tree()?);
                        }
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.error("expected `,` or `)`")),
                    }
                }
                if parts.len() < 2 {
                    return Err(TreeError::Parse { line, column, message: "sum needs at least two summands".into() });
                }
                Ok(KnotTree::sum(parts))
            }
            "" => Err(self.error("expected a tree")),
            other => Err(TreeError::Parse { line, column, message: format!("unknown constructor `{other}`") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trefoil() -> KnotTree {
        KnotTree::torus(3, 2)
    }

    fn fig1_braid() -> BraidWord {
        BraidWord::parse(3, "s2 s1^-1 s2 s2").unwrap()
    }

    #[test]
    fn fixed_bridge_numbers() {
        assert_eq!(trefoil().bridge_number().unwrap(), 2);
        let sat = KnotTree::satellite(fig1_braid(), trefoil());
        assert_eq!(sat.bridge_number().unwrap(), 6);
        let sum = KnotTree::sum(vec![trefoil(), KnotTree::torus(5, 2)]);
        assert_eq!(sum.bridge_number().unwrap(), 3);
        let nested = KnotTree::sum(vec![sat.clone(), trefoil()]);
        assert_eq!(nested.bridge_number().unwrap(), 7);
        for t in [trefoil(), sat, sum, nested] {
            assert_eq!(t.bridge_number().unwrap(), t.bridge_number_recursive().unwrap());
        }
    }

    #[test]
    fn n_and_heights() {
        let sat = KnotTree::satellite(fig1_braid(), trefoil());
        assert_eq!(sat.n_of(0).unwrap(), 3);
        assert_eq!(sat.n_of(1).unwrap(), 1);
        assert_eq!(sat.height(0).unwrap(), 1);
        assert_eq!(sat.height(1).unwrap(), 3);
        let t = KnotTree::sum(vec![KnotTree::satellite(fig1_braid(), trefoil()), trefoil()]);
        assert_eq!(t.n_of(0).unwrap(), 1);
        assert_eq!(t.height(2).unwrap(), 3);
        assert_eq!(t.height_plus(1).unwrap(), 3);
        assert!(t.height(9).is_err());
    }

    #[test]
    fn validation() {
        assert!(trefoil().validate().is_ok());
        let bad = KnotTree::satellite(BraidWord::parse(2, "s1 s1").unwrap(), trefoil());
        assert_eq!(bad.validate(), Err(vec![Violation::NotKnotPattern(0)]));
        let lonely = KnotTree::sum(vec![trefoil()]);
        assert_eq!(lonely.validate(), Err(vec![Violation::SumChildren { vertex: 0, children: 1 }]));
        assert!(KnotTree::torus(4, 2).validate().is_err());
        assert!(KnotTree::opaque("u", 1, true).validate().is_err());
        assert!(lonely.bridge_number().is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(KnotTree::parse("torus(3,2)").unwrap(), trefoil());
        let t = KnotTree::parse("sat(braid 3 \"s2 s1^-1 s2 s2\", torus(3,2))").unwrap();
        assert_eq!(t, KnotTree::satellite(fig1_braid(), trefoil()));
        let t = KnotTree::parse("sum(torus(3,2), torus(5,2))").unwrap();
        assert_eq!(t.class(0), VertexClass::V2);
        assert_eq!(t.children(0), &[1, 2]);
        let t = KnotTree::parse(" sum(\n  opaque(fig8, 2, tame),\n  torus(3,2))").unwrap();
        assert_eq!(t.leaf_label(1), Some(&LeafLabel::Opaque { name: "fig8".into(), bridge: 2, tame: true }));
        assert_eq!(KnotTree::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn parse_errors_have_positions() {
        match KnotTree::parse("sum(torus(3,2),\n  torsu(5,2))") {
            Err(TreeError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        match KnotTree::parse("torus(3 2)") {
            Err(TreeError::Parse { line: 1, column: 9, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(KnotTree::parse("sum(torus(3,2))"), Err(TreeError::Parse { .. })));
        assert!(matches!(KnotTree::parse("torus(4,2)"), Err(TreeError::Invalid(_))));
    }

    #[test]
    fn json_shape() {
        let t = KnotTree::parse("sat(braid 3 \"s2 s1^-1 s2 s2\", torus(3,2))").unwrap();
        let j = t.to_json().unwrap();
        assert_eq!(j["bridge"], 6);
        assert_eq!(j["heights"]["1"], 3);
        assert_eq!(j["partition"]["V1"], json!([0]));
        assert_eq!(j["partition"]["V0"], json!([1]));
    }
}
