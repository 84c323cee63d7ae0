//! A-graphs over the tree of groups of a knot tree: tame vertex and edge
//! states, the complexity `c = (c1, c2)`, elementary folds and a fold driver
//! that checks tameness and strict descent of `c` after every move.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::braid::{BraidSpace, BraidSpaceElement, MeridionalClass};
use crate::freegroup::{GroupError, SubgroupGraph, Word};
use crate::graph_of_groups::{
    cs_classify, ComposingClass, ComposingElement, Element, GogError, TorusElement, TreeOfGroups, VertexGroup,
};
use crate::knot_tree::LeafLabel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error(transparent)]
    Gog(#[from] GogError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("path {path}: {message}")]
    BadPath { path: usize, message: String },
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("unknown edge {0}")]
    UnknownEdge(usize),
    #[error("edge endpoints do not match edge {0} of the tree")]
    BadEdge(usize),
    #[error("undecidable at leaf vertex {vertex}: {message}")]
    Undecidable { vertex: usize, message: String },
    #[error("fold guard violated: {0}")]
    Guard(String),
}

/// Edge group of a positively oriented edge.
impl FoldError {
    /// Prefixes undecidable-at-leaf errors with the move being tested.
    fn during(self, candidate: &str) -> FoldError {
        match self {
            FoldError::Undecidable { vertex, message } => {
                FoldError::Undecidable { vertex, message: format!("{candidate}: {message}") }
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeState {
    Trivial,
    MeridianZ,
    FullZ2,
}

impl EdgeState {
    pub fn tag(self) -> &'static str {
        match self {
            EdgeState::Trivial => "trivial",
            EdgeState::MeridianZ => "meridian",
            EdgeState::FullZ2 => "full",
        }
    }

    fn c2_weight(self) -> i64 {
        // 2|EB| - |E2B| - |E1B|/2 over both orientations.
        match self {
            EdgeState::Trivial => 4,
            EdgeState::MeridianZ => 3,
            EdgeState::FullZ2 => 2,
        }
    }
}

/// Vertex group, in one of the forms allowed by tameness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexState {
    /// Leaf group generated by the meridians `g m g⁻¹`.
    Meridians(Vec<Element>),
    LeafFull,
    /// Free on the meridians `g x1 g⁻¹`.
    FreeMeridional(Vec<BraidSpaceElement>),
    NormalClosure,
    BraidFull,
    Trivial,
    /// `<g_f l_[f] g_f⁻¹ : f> × <t>`, indexed by positive edge ids.
    Product(Vec<(usize, ComposingElement)>),
    ComposingFull,
}

impl VertexState {
    pub fn tag(&self) -> &'static str {
        match self {
            VertexState::Meridians(_) => "meridians",
            VertexState::LeafFull => "leaf_full",
            VertexState::FreeMeridional(_) => "free_meridional",
            VertexState::NormalClosure => "normal_closure",
            VertexState::BraidFull => "braid_full",
            VertexState::Trivial => "trivial",
            VertexState::Product(_) => "product",
            VertexState::ComposingFull => "composing_full",
        }
    }

    pub fn is_full_variant(&self) -> bool {
        matches!(self, VertexState::LeafFull | VertexState::BraidFull | VertexState::ComposingFull)
    }

    fn payload(&self) -> Value {
        match self {
            VertexState::Meridians(gs) => json!(gs.iter().map(|g| g.to_string()).collect::<Vec<_>>()),
            VertexState::FreeMeridional(gs) => json!(gs.iter().map(|g| g.to_compact_string()).collect::<Vec<_>>()),
            VertexState::Product(s) => {
                json!(s.iter().map(|(f, g)| json!({"edge": f, "g": g.to_compact_string()})).collect::<Vec<_>>())
            }
            _ => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BVertex {
    pub a_vertex: usize,
    pub state: VertexState,
}

/// An edge stored in its positive orientation, from the parent-type end to
/// the child-type end, labeled `(a, e, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BEdge {
    pub parent: usize,
    pub child: usize,
    pub a_edge: usize,
    pub a: Element,
    pub b: Element,
    pub state: EdgeState,
}

/// A stored edge read in one of its two directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Oriented {
    pub edge: usize,
    pub forward: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Complexity {
    pub c1: i64,
    pub c2: i64,
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.c1, self.c2)
    }
}

/// `a0, e1, a1, …, eq, aq` starting and ending at the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct APath {
    pub elements: Vec<Element>,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    IA { first: Oriented, second: Oriented, shift: (i64, i64), saturating: bool },
    IIAForward { edge: usize },
    IIABackward { edge: usize },
}

impl Move {
    pub fn kind(&self) -> &'static str {
        match self {
            Move::IA { .. } => "IA",
            Move::IIAForward { .. } => "IIA+",
            Move::IIABackward { .. } => "IIA-",
        }
    }

    pub fn edges(&self) -> Vec<usize> {
        match self {
            Move::IA { first, second, .. } => vec![first.edge, second.edge],
            Move::IIAForward { edge } | Move::IIABackward { edge } => vec![*edge],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AGraph {
    gog: TreeOfGroups,
    exact_torus: bool,
    vertices: BTreeMap<usize, BVertex>,
    edges: BTreeMap<usize, BEdge>,
    base: usize,
    next_vertex: usize,
    next_edge: usize,
}

impl AGraph {
    /// A single base vertex over the root with trivial group.
    pub fn empty(gog: &TreeOfGroups, exact_torus: bool) -> Self {
        let mut g = AGraph {
            gog: gog.clone(),
            exact_torus,
            vertices: BTreeMap::new(),
            edges: BTreeMap::new(),
            base: 0,
            next_vertex: 0,
            next_edge: 0,
        };
        let s = g.trivial_state(0);
        g.base = g.add_vertex(0, s);
        g
    }

    pub fn tree_of_groups(&self) -> &TreeOfGroups {
        &self.gog
    }

    pub fn exact_torus(&self) -> bool {
        self.exact_torus
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn vertices(&self) -> &BTreeMap<usize, BVertex> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeMap<usize, BEdge> {
        &self.edges
    }

    pub fn vertex(&self, u: usize) -> Result<&BVertex, FoldError> {
        self.vertices.get(&u).ok_or(FoldError::UnknownVertex(u))
    }

    pub fn edge(&self, f: usize) -> Result<&BEdge, FoldError> {
        self.edges.get(&f).ok_or(FoldError::UnknownEdge(f))
    }

    fn trivial_state(&self, v: usize) -> VertexState {
        match self.gog.group(v) {
            VertexGroup::KnotLeaf(_) => VertexState::Meridians(vec![]),
            VertexGroup::BraidSpace(_) => VertexState::FreeMeridional(vec![]),
            VertexGroup::ComposingSpace { .. } => VertexState::Trivial,
        }
    }

    /// The group generated by one meridian of the vertex type.
    fn meridian_state(&self, v: usize) -> VertexState {
        match self.gog.group(v) {
            VertexGroup::KnotLeaf(_) => VertexState::Meridians(vec![self.identity(v)]),
            VertexGroup::BraidSpace(bs) => VertexState::FreeMeridional(vec![BraidSpaceElement::identity(bs.rank())]),
            VertexGroup::ComposingSpace { .. } => VertexState::Product(vec![]),
        }
    }

    pub fn add_vertex(&mut self, a_vertex: usize, state: VertexState) -> usize {
        let id = self.next_vertex;
        self.next_vertex += 1;
        self.vertices.insert(id, BVertex { a_vertex, state });
        id
    }

    /// Adds an edge in positive orientation over tree edge `a_edge`.
    pub fn add_edge(
        &mut self,
        parent: usize,
        child: usize,
        a_edge: usize,
        a: Element,
        b: Element,
        state: EdgeState,
    ) -> Result<usize, FoldError> {
        let (pa, ch) = self.gog.endpoints(a_edge)?;
        if self.vertex(parent)?.a_vertex != pa || self.vertex(child)?.a_vertex != ch {
            return Err(FoldError::BadEdge(a_edge));
        }
        let a = self.normalize(pa, &a)?;
        let b = self.normalize(ch, &b)?;
        let id = self.next_edge;
        self.next_edge += 1;
        self.edges.insert(id, BEdge { parent, child, a_edge, a, b, state });
        Ok(id)
    }

    pub fn set_state(&mut self, u: usize, state: VertexState) -> Result<(), FoldError> {
        self.vertices.get_mut(&u).ok_or(FoldError::UnknownVertex(u))?.state = state;
        Ok(())
    }

    /// The graph built from meridian paths: one branch per path, each ending
    /// at a vertex carrying the meridian of the root.
    pub fn build_initial(gog: &TreeOfGroups, paths: &[APath], exact_torus: bool) -> Result<Self, FoldError> {
        let mut g = AGraph::empty(gog, exact_torus);
        let tree = gog.tree();
        for (i, path) in paths.iter().enumerate() {
            let bad = |message: &str| FoldError::BadPath { path: i, message: message.to_string() };
            if path.edges.is_empty() {
                return Err(bad("a path needs at least one edge"));
            }
            if path.elements.len() != path.edges.len() + 1 {
                return Err(bad("a path alternates elements and edges, starting and ending with an element"));
            }
            // Tree vertices visited and traversal directions.
            let mut at = vec![tree.root()];
            let mut forward = Vec::new();
            for &e in &path.edges {
                let (pa, ch) = gog.endpoints(e).map_err(|_| bad(&format!("no edge {e}")))?;
                let cur = *at.last().expect("nonempty");
                if cur == pa {
                    at.push(ch);
                    forward.push(true);
                } else if cur == ch {
                    at.push(pa);
                    forward.push(false);
                } else {
                    return Err(bad(&format!("edge {e} does not start at vertex {cur}")));
                }
            }
            if *at.last().expect("nonempty") != tree.root() {
                return Err(bad("path does not return to the root"));
            }
            let elems: Vec<Element> = path
                .elements
                .iter()
                .zip(&at)
                .map(|(x, &v)| g.normalize(v, x))
                .collect::<Result<_, _>>()
                .map_err(|err| bad(&err.to_string()))?;

            let q = path.edges.len();
            let mut prev = g.base;
            for j in 0..q {
                let head_type = at[j + 1];
                let last = j + 1 == q;
                let state = if last { g.meridian_state(head_type) } else { g.trivial_state(head_type) };
                let head = g.add_vertex(head_type, state);
                let alpha = elems[j].clone();
                let omega = if last { elems[q].clone() } else { g.identity(head_type) };
                if forward[j] {
                    g.add_edge(prev, head, path.edges[j], alpha, omega, EdgeState::Trivial)?;
                } else {
                    let a = g.inv(head_type, &omega)?;
                    let b = g.inv(at[j], &alpha)?;
                    g.add_edge(head, prev, path.edges[j], a, b, EdgeState::Trivial)?;
                }
                prev = head;
            }
        }
        Ok(g)
    }

    /// The folded graph isomorphic to the tree of groups, with every group
    /// full.
    pub fn complete(gog: &TreeOfGroups) -> Self {
        let mut g = AGraph {
            gog: gog.clone(),
            exact_torus: false,
            vertices: BTreeMap::new(),
            edges: BTreeMap::new(),
            base: 0,
            next_vertex: 0,
            next_edge: 0,
        };
        for v in 0..gog.tree().len() {
            let state = match gog.group(v) {
                VertexGroup::KnotLeaf(_) => VertexState::LeafFull,
                VertexGroup::BraidSpace(_) => VertexState::BraidFull,
                VertexGroup::ComposingSpace { .. } => VertexState::ComposingFull,
            };
            g.add_vertex(v, state);
        }
        for e in gog.edges() {
            let (pa, ch) = gog.endpoints(e).expect("tree edge");
            let (a, b) = (g.identity(pa), g.identity(ch));
            g.add_edge(pa, ch, e, a, b, EdgeState::FullZ2).expect("matching endpoints");
        }
        g
    }

    // ---- vertex group arithmetic ----

    fn count_mode_leaf(&self, v: usize) -> bool {
        match self.gog.group(v) {
            VertexGroup::KnotLeaf(LeafLabel::Torus { .. }) => !self.exact_torus,
            VertexGroup::KnotLeaf(LeafLabel::Opaque { .. }) => true,
            _ => false,
        }
    }

    fn identity(&self, v: usize) -> Element {
        if self.count_mode_leaf(v) {
            Element::Peripheral { m: 0, l: 0 }
        } else {
            self.gog.identity(v)
        }
    }

    fn normalize(&self, v: usize, x: &Element) -> Result<Element, FoldError> {
        if self.count_mode_leaf(v) {
            match x {
                Element::Peripheral { .. } => Ok(x.clone()),
                _ => Err(GogError::WrongKind { vertex: v, found: x.kind() }.into()),
            }
        } else {
            Ok(self.gog.multiply(v, &self.gog.identity(v), x)?)
        }
    }

    fn mul(&self, v: usize, a: &Element, b: &Element) -> Result<Element, FoldError> {
        if self.count_mode_leaf(v) {
            match (a, b) {
                (Element::Peripheral { m: m1, l: l1 }, Element::Peripheral { m: m2, l: l2 }) => {
                    Ok(Element::Peripheral { m: m1 + m2, l: l1 + l2 })
                }
                _ => Err(GogError::OpaqueArithmetic.into()),
            }
        } else {
            Ok(self.gog.multiply(v, a, b)?)
        }
    }

    fn inv(&self, v: usize, a: &Element) -> Result<Element, FoldError> {
        if self.count_mode_leaf(v) {
            match a {
                Element::Peripheral { m, l } => Ok(Element::Peripheral { m: -m, l: -l }),
                _ => Err(GogError::OpaqueArithmetic.into()),
            }
        } else {
            Ok(self.gog.invert(v, a)?)
        }
    }

    // ---- oriented edges ----

    pub fn origin(&self, o: Oriented) -> usize {
        let e = &self.edges[&o.edge];
        if o.forward {
            e.parent
        } else {
            e.child
        }
    }

    pub fn head(&self, o: Oriented) -> usize {
        let e = &self.edges[&o.edge];
        if o.forward {
            e.child
        } else {
            e.parent
        }
    }

    fn origin_type(&self, o: Oriented) -> usize {
        self.vertices[&self.origin(o)].a_vertex
    }

    fn head_type(&self, o: Oriented) -> usize {
        self.vertices[&self.head(o)].a_vertex
    }

    /// Label element at the origin of `o`.
    fn label_alpha(&self, o: Oriented) -> Result<Element, FoldError> {
        let e = &self.edges[&o.edge];
        if o.forward {
            Ok(e.a.clone())
        } else {
            self.inv(self.origin_type(o), &e.b)
        }
    }

    /// Label element at the head of `o`.
    fn label_omega(&self, o: Oriented) -> Result<Element, FoldError> {
        let e = &self.edges[&o.edge];
        if o.forward {
            Ok(e.b.clone())
        } else {
            self.inv(self.head_type(o), &e.a)
        }
    }

    fn set_label_alpha(&mut self, o: Oriented, x: Element) -> Result<(), FoldError> {
        let v = self.origin_type(o);
        let stored = if o.forward { x } else { self.inv(v, &x)? };
        let e = self.edges.get_mut(&o.edge).expect("edge exists");
        if o.forward {
            e.a = stored;
        } else {
            e.b = stored;
        }
        Ok(())
    }

    /// Image of `m^z1 l^z2` of the edge group in the group at the head of `o`.
    fn head_image(&self, o: Oriented, z1: i64, z2: i64) -> Result<Element, FoldError> {
        let e = self.edges[&o.edge].a_edge;
        if o.forward {
            if self.count_mode_leaf(self.head_type(o)) {
                return Ok(Element::Peripheral { m: z1, l: z2 });
            }
            Ok(self.gog.omega_map(e, z1, z2)?)
        } else {
            Ok(self.gog.alpha_map(e, z1, z2)?)
        }
    }

    /// All oriented edges starting at `u`, ordered by edge id.
    pub fn star(&self, u: usize) -> Vec<Oriented> {
        let mut out = Vec::new();
        for (&id, e) in &self.edges {
            if e.parent == u {
                out.push(Oriented { edge: id, forward: true });
            }
            if e.child == u {
                out.push(Oriented { edge: id, forward: false });
            }
        }
        out
    }

    /// Positively oriented edges starting at `u`.
    pub fn positive_star(&self, u: usize) -> Vec<usize> {
        self.edges.iter().filter(|(_, e)| e.parent == u).map(|(&id, _)| id).collect()
    }

    // ---- complexity ----

    pub fn is_isolated(&self, u: usize) -> Result<bool, FoldError> {
        self.vertex(u)?;
        Ok(self.positive_star(u).iter().all(|f| self.edges[f].state == EdgeState::Trivial))
    }

    fn val_plus_one(&self, u: usize) -> i64 {
        self.positive_star(u).iter().filter(|f| self.edges[f].state != EdgeState::Trivial).count() as i64
    }

    /// Meridional rank bookkeeping of the vertex group.
    pub fn weight(&self, u: usize) -> Result<i64, FoldError> {
        let vx = self.vertex(u)?;
        let tree = self.gog.tree();
        Ok(match &vx.state {
            VertexState::Meridians(gs) => gs.len() as i64,
            VertexState::FreeMeridional(gs) => gs.len() as i64,
            VertexState::NormalClosure => tree.n_of(vx.a_vertex).map_err(GogError::from)? as i64,
            VertexState::Trivial => 0,
            VertexState::Product(s) => s.len() as i64 + 1,
            VertexState::LeafFull | VertexState::BraidFull | VertexState::ComposingFull => {
                tree.subtree_bridge(vx.a_vertex) as i64
            }
        })
    }

    pub fn c1(&self) -> i64 {
        let tree = self.gog.tree();
        let mut total = 0i64;
        for (&u, vx) in &self.vertices {
            if self.is_isolated(u).expect("vertex exists") {
                let h = tree.height(vx.a_vertex).expect("tree vertex") as i64;
                total += h * self.weight(u).expect("vertex exists");
            } else {
                let hp = tree.height_plus(vx.a_vertex).expect("tree vertex") as i64;
                total -= hp * (self.val_plus_one(u) - 1);
            }
        }
        total
    }

    pub fn c2(&self) -> i64 {
        self.edges.values().map(|e| e.state.c2_weight()).sum()
    }

    pub fn complexity(&self) -> Complexity {
        Complexity { c1: self.c1(), c2: self.c2() }
    }

    // ---- fullness and tameness ----

    pub fn is_full(&self, u: usize) -> bool {
        let mut memo = HashMap::new();
        self.is_full_memo(u, &mut memo)
    }

    fn is_full_memo(&self, u: usize, memo: &mut HashMap<usize, bool>) -> bool {
        if let Some(&r) = memo.get(&u) {
            return r;
        }
        let Some(vx) = self.vertices.get(&u) else { return false };
        let mut ok = vx.state.is_full_variant();
        if ok {
            for &e in self.gog.tree().children(vx.a_vertex) {
                let covered = self.positive_star(u).iter().any(|f| {
                    let be = &self.edges[f];
                    be.a_edge == e && be.state == EdgeState::FullZ2 && self.is_full_memo(be.child, memo)
                });
                if !covered {
                    ok = false;
                    break;
                }
            }
        }
        memo.insert(u, ok);
        ok
    }

    fn braid_space(&self, v: usize) -> &BraidSpace {
        match self.gog.group(v) {
            VertexGroup::BraidSpace(bs) => bs,
            _ => panic!("vertex {v} is not a braid vertex"),
        }
    }

    fn composing_rank(&self, v: usize) -> usize {
        match self.gog.group(v) {
            VertexGroup::ComposingSpace { rank } => *rank,
            _ => panic!("vertex {v} is not a composing vertex"),
        }
    }

    fn leaf_bridge(&self, v: usize) -> usize {
        self.gog.tree().leaf_label(v).expect("leaf vertex").bridge_number() as usize
    }

    /// Stallings graph of the free meridional subgroup at a braid vertex.
    fn braid_subgroup_graph(&self, v: usize, state: &VertexState) -> Result<SubgroupGraph, FoldError> {
        let bs = self.braid_space(v);
        let words: Vec<Word> = match state {
            VertexState::FreeMeridional(gs) => gs.iter().map(|g| bs.rewrite_meridian_conjugate(g).element()).collect(),
            _ => (1..=bs.rank()).map(|i| Word::generator(i, bs.rank()).expect("in range")).collect(),
        };
        Ok(SubgroupGraph::build(&words, bs.rank())?)
    }

    /// Stallings graph of the free factor `F_u` at a composing vertex.
    fn composing_subgroup_graph(&self, v: usize, state: &VertexState) -> Result<SubgroupGraph, FoldError> {
        let rank = self.composing_rank(v);
        let words: Vec<Word> = match state {
            VertexState::Product(s) => s
                .iter()
                .map(|(f, g)| {
                    let j = self.gog.child_index(self.edges[f].a_edge)?;
                    Ok(Word::generator(j, rank)?.conjugate_by(&g.w)?)
                })
                .collect::<Result<_, FoldError>>()?,
            _ => vec![],
        };
        Ok(SubgroupGraph::build(&words, rank)?)
    }

    pub fn is_tame(&self) -> Result<(), Vec<String>> {
        let mut out = Vec::new();
        for (&id, e) in &self.edges {
            if e.state == EdgeState::FullZ2 && !self.is_full(e.child) {
                out.push(format!("edge {id}: full edge group but head {} is not full", e.child));
            }
        }
        for (&u, vx) in &self.vertices {
            let v = vx.a_vertex;
            match (&vx.state, self.gog.group(v)) {
                (VertexState::Meridians(gs), VertexGroup::KnotLeaf(_)) => {
                    if gs.len() >= self.leaf_bridge(v) {
                        out.push(format!("vertex {u}: {} meridians reach the bridge number", gs.len()));
                    }
                }
                (VertexState::LeafFull, VertexGroup::KnotLeaf(_)) => {}
                (VertexState::FreeMeridional(gs), VertexGroup::BraidSpace(bs)) => {
                    match bs.classify_meridional(gs) {
                        Ok(MeridionalClass::Free(b)) if b.elements.len() == gs.len() => {}
                        Ok(_) => out.push(format!("vertex {u}: meridians are not a free basis")),
                        Err(err) => out.push(format!("vertex {u}: {err}")),
                    }
                }
                (VertexState::NormalClosure, VertexGroup::BraidSpace(_)) => {}
                (VertexState::BraidFull, VertexGroup::BraidSpace(_))
                | (VertexState::ComposingFull, VertexGroup::ComposingSpace { .. }) => {
                    if !self.is_full(u) {
                        out.push(format!("vertex {u}: whole vertex group but not full"));
                    }
                }
                (VertexState::Trivial, VertexGroup::ComposingSpace { .. }) => {}
                (VertexState::Product(s), VertexGroup::ComposingSpace { rank }) => {
                    let mut items = Vec::new();
                    for (f, g) in s {
                        match self.edges.get(f) {
                            Some(be) if be.parent == u && be.state == EdgeState::FullZ2 => {
                                let j = self.gog.child_index(be.a_edge).expect("tree edge");
                                items.push((*f, g.clone(), j));
                            }
                            _ => out.push(format!("vertex {u}: product generator on edge {f} is not a full positive edge")),
                        }
                    }
                    let input: Vec<(ComposingElement, usize)> = items.iter().map(|(_, g, j)| (g.clone(), *j)).collect();
                    match cs_classify(&input, *rank) {
                        Ok(ComposingClass::Basis { basis, .. }) if basis.elements.len() == input.len() => {
                            for (f, g, j) in &items {
                                let Element::Composing(a) = &self.edges[f].a else { continue };
                                let x = Word::generator(*j, *rank).expect("in range");
                                if basis.graph.power_in_subgroup(&a.w, &x, &g.w.inverse()).is_none() {
                                    out.push(format!("vertex {u}: label of edge {f} is not conjugate to its generator"));
                                }
                            }
                        }
                        Ok(ComposingClass::WholeGroup) => {
                            out.push(format!("vertex {u}: product state generates the whole group"))
                        }
                        Ok(_) => out.push(format!("vertex {u}: product generators are not a free basis")),
                        Err(err) => out.push(format!("vertex {u}: {err}")),
                    }
                }
                (state, _) => out.push(format!("vertex {u}: state {} does not fit vertex {v}", state.tag())),
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// The morphism to the tree is bijective and every group is full.
    pub fn is_complete(&self) -> bool {
        let n = self.gog.tree().len();
        if self.vertices.len() != n || self.edges.len() + 1 != n {
            return false;
        }
        let mut seen = vec![false; n];
        for vx in self.vertices.values() {
            if seen[vx.a_vertex] || !vx.state.is_full_variant() {
                return false;
            }
            seen[vx.a_vertex] = true;
        }
        let mut seen_e = vec![false; n];
        for e in self.edges.values() {
            if seen_e[e.a_edge] || e.state != EdgeState::FullZ2 {
                return false;
            }
            seen_e[e.a_edge] = true;
        }
        true
    }
}

// ---- membership and moves ----

impl AGraph {
    /// A shift `c` in the edge group with `a2 ∈ B_u · a1 · α(c)`, where `a1`,
    /// `a2` are the labels of `o1`, `o2` at their common origin `u`.
    pub fn ia_witness(&self, o1: Oriented, o2: Oriented) -> Result<Option<(i64, i64)>, FoldError> {
        let u = self.origin(o1);
        let v = self.vertices[&u].a_vertex;
        let state = &self.vertices[&u].state;
        let (a1, a2) = (self.label_alpha(o1)?, self.label_alpha(o2)?);
        if state.is_full_variant() {
            return Ok(Some((0, 0)));
        }
        match (self.gog.group(v), a1, a2) {
            (VertexGroup::BraidSpace(bs), Element::Braid(a1), Element::Braid(a2)) => {
                let h = self.braid_subgroup_graph(v, state)?;
                if o1.forward {
                    let c = bs.boundary_word();
                    let j = h.power_in_subgroup(&a2.w, &c, &a1.w.inverse());
                    Ok(j.map(|j| (-j, a2.r - a1.r)))
                } else {
                    let n = bs.rank() as i64;
                    let d = a2.r - a1.r;
                    if d % n != 0 {
                        return Ok(None);
                    }
                    let k = d / n;
                    let lk = braid_pow(bs, &bs.longitude(), k);
                    let y = a2.w.concat(&bs.act(a1.r, &lk.w).inverse());
                    let c = bs.act(a1.r, &bs.meridian().w);
                    let j = h.power_in_subgroup(&y, &c, &a1.w.inverse());
                    Ok(j.map(|j| (-j, k)))
                }
            }
            (VertexGroup::ComposingSpace { rank }, Element::Composing(a1), Element::Composing(a2)) => {
                let h = self.composing_subgroup_graph(v, state)?;
                let c = if o1.forward {
                    Word::generator(self.gog.child_index(self.edges[&o1.edge].a_edge)?, *rank)?
                } else {
                    Word::boundary_product(*rank)
                };
                let j = h.power_in_subgroup(&a2.w, &c, &a1.w.inverse());
                Ok(j.map(|j| (a2.z - a1.z, -j)))
            }
            (VertexGroup::KnotLeaf(_), Element::Peripheral { m: m1, l: l1 }, Element::Peripheral { m: m2, l: l2 }) => {
                Ok(Some((m2 - m1, l2 - l1)))
            }
            (VertexGroup::KnotLeaf(_), Element::Torus(a1), Element::Torus(a2)) => {
                let d = a1.invert().multiply(&a2);
                if let Some(c) = torus_shift(&d) {
                    return Ok(Some(c));
                }
                let VertexState::Meridians(gs) = state else { return Ok(None) };
                // B_u inside a1 P a1⁻¹ makes the double coset a1 P.
                let inside = gs.iter().all(|g| match g {
                    Element::Torus(g) => a1.invert().multiply(g).peripheral_coordinates().is_some(),
                    _ => false,
                });
                if inside {
                    return Ok(None);
                }
                let m = TorusElement::meridian(a1.p, a1.q);
                for g in gs {
                    let Element::Torus(g) = g else { continue };
                    for k in (1..=4).flat_map(|k| [k, -k]) {
                        let h = g.multiply(&m.pow(k)).multiply(&g.invert());
                        let p = a1.invert().multiply(&h.invert()).multiply(&a2);
                        if let Some(c) = torus_shift(&p) {
                            return Ok(Some(c));
                        }
                    }
                }
                Err(FoldError::Undecidable {
                    vertex: u,
                    message: "double coset membership for a nontrivial meridional subgroup".into(),
                })
            }
            (_, a1, _) => Err(GogError::WrongKind { vertex: v, found: a1.kind() }.into()),
        }
    }

    /// Type of `α⁻¹(a⁻¹ B_x a)` for the origin `x` and label `a` of `o`.
    pub fn edge_image_class(&self, o: Oriented) -> Result<EdgeState, FoldError> {
        let x = self.origin(o);
        let v = self.vertices[&x].a_vertex;
        let state = &self.vertices[&x].state;
        if state.is_full_variant() {
            return Ok(EdgeState::FullZ2);
        }
        let a = self.label_alpha(o)?;
        match (self.gog.group(v), a) {
            (VertexGroup::BraidSpace(bs), Element::Braid(a)) => {
                if *state == VertexState::NormalClosure {
                    return Ok(EdgeState::MeridianZ);
                }
                let h = self.braid_subgroup_graph(v, state)?;
                let c = if o.forward { bs.boundary_word() } else { bs.act(a.r, &bs.meridian().w) };
                Ok(if h.contains(&c.conjugate_by(&a.w)?) { EdgeState::MeridianZ } else { EdgeState::Trivial })
            }
            (VertexGroup::ComposingSpace { rank }, Element::Composing(a)) => {
                if *state == VertexState::Trivial {
                    return Ok(EdgeState::Trivial);
                }
                let h = self.composing_subgroup_graph(v, state)?;
                let c = if o.forward {
                    Word::generator(self.gog.child_index(self.edges[&o.edge].a_edge)?, *rank)?
                } else {
                    Word::boundary_product(*rank)
                };
                Ok(if h.contains(&c.conjugate_by(&a.w)?) { EdgeState::FullZ2 } else { EdgeState::MeridianZ })
            }
            (VertexGroup::KnotLeaf(_), a) => {
                let VertexState::Meridians(gs) = state else {
                    return Err(FoldError::Guard(format!("vertex {x} has a non-leaf state")));
                };
                if gs.is_empty() {
                    return Ok(EdgeState::Trivial);
                }
                let Element::Torus(a) = a else { return Ok(EdgeState::MeridianZ) };
                let hit = gs.iter().any(|g| match g {
                    Element::Torus(g) => g.invert().multiply(&a).peripheral_coordinates().is_some(),
                    _ => false,
                });
                if hit {
                    Ok(EdgeState::MeridianZ)
                } else if gs.len() == 1 {
                    Ok(EdgeState::Trivial)
                } else {
                    Err(FoldError::Undecidable {
                        vertex: x,
                        message: "intersection of a conjugated meridional subgroup with the peripheral subgroup".into(),
                    })
                }
            }
            (_, a) => Err(GogError::WrongKind { vertex: v, found: a.kind() }.into()),
        }
    }

    /// A pair of positive edges that the saturation lemma says can be
    /// identified, if any starts at `u`.
    fn saturation_pair(&self, u: usize) -> Result<Option<(usize, usize)>, FoldError> {
        let vx = &self.vertices[&u];
        let pos = self.positive_star(u);
        match (&vx.state, self.gog.group(vx.a_vertex)) {
            (VertexState::NormalClosure | VertexState::BraidFull, VertexGroup::BraidSpace(_)) if pos.len() >= 2 => {
                Ok(Some((pos[0], pos[1])))
            }
            (VertexState::Product(_) | VertexState::ComposingFull, VertexGroup::ComposingSpace { rank }) => {
                let h = self.composing_subgroup_graph(vx.a_vertex, &vx.state)?;
                for &f in &pos {
                    let e = &self.edges[&f];
                    if e.state == EdgeState::FullZ2 {
                        continue;
                    }
                    let Element::Composing(a) = &e.a else { continue };
                    let x = Word::generator(self.gog.child_index(e.a_edge)?, *rank)?;
                    let inside = vx.state == VertexState::ComposingFull || h.contains(&x.conjugate_by(&a.w)?);
                    if !inside {
                        continue;
                    }
                    let partner = pos
                        .iter()
                        .copied()
                        .find(|g| *g != f && self.edges[g].a_edge == e.a_edge && self.edges[g].state == EdgeState::FullZ2);
                    if let Some(f0) = partner {
                        return Ok(Some((f0, f)));
                    }
                    return Err(FoldError::Guard(format!(
                        "edge {f}: boundary subgroup meets B_{u} but no full edge of the same type"
                    )));
                }
                Ok(None)
            }
            _ => Ok(None),
        }
    }

    /// The next move: saturation pairs first, then other identifications,
    /// then edge-group enlargements. `None` means the graph is folded.
    pub fn find_move(&self) -> Result<Option<Move>, FoldError> {
        for &u in self.vertices.keys() {
            if let Some((f0, f)) = self.saturation_pair(u)? {
                let (first, second) = (Oriented { edge: f0, forward: true }, Oriented { edge: f, forward: true });
                return match self.ia_witness(first, second)? {
                    Some(shift) => Ok(Some(Move::IA { first, second, shift, saturating: true })),
                    None => Err(FoldError::Guard(format!("edges {f0} and {f} fail the identification test"))),
                };
            }
        }
        for &u in self.vertices.keys() {
            let star = self.star(u);
            for (i, &o1) in star.iter().enumerate() {
                for &o2 in &star[i + 1..] {
                    if o1.forward != o2.forward || self.edges[&o1.edge].a_edge != self.edges[&o2.edge].a_edge {
                        continue;
                    }
                    let witness = self.ia_witness(o1, o2).map_err(|e| e.during(&format!("IA on edges {} and {}", o1.edge, o2.edge)))?;
                    if let Some(shift) = witness {
                        return Ok(Some(Move::IA { first: o1, second: o2, shift, saturating: false }));
                    }
                }
            }
        }
        for (&id, e) in &self.edges {
            let class = |forward: bool| {
                let kind = if forward { "IIA+" } else { "IIA-" };
                self.edge_image_class(Oriented { edge: id, forward }).map_err(|e| e.during(&format!("{kind} on edge {id}")))
            };
            if class(true)? > e.state {
                return Ok(Some(Move::IIAForward { edge: id }));
            }
            if class(false)? > e.state {
                return Ok(Some(Move::IIABackward { edge: id }));
            }
        }
        Ok(None)
    }

    pub fn is_folded(&self) -> Result<bool, FoldError> {
        Ok(self.find_move()?.is_none())
    }

    pub fn apply(&self, mv: &Move) -> Result<AGraph, FoldError> {
        let mut g = self.clone();
        match *mv {
            Move::IA { first, second, shift, .. } => g.identify(first, second, shift)?,
            Move::IIAForward { edge } => g.enlarge_forward(edge)?,
            Move::IIABackward { edge } => g.enlarge_backward(edge)?,
        }
        Ok(g)
    }

    fn identify(&mut self, o1: Oriented, o2: Oriented, shift: (i64, i64)) -> Result<(), FoldError> {
        self.edge(o1.edge)?;
        self.edge(o2.edge)?;
        if o1.edge == o2.edge || self.origin(o1) != self.origin(o2) {
            return Err(FoldError::Guard("identified edges must be distinct with a common origin".into()));
        }
        let (x, y) = (self.head(o1), self.head(o2));
        let w = self.head_type(o1);
        let a1 = self.label_alpha(o1)?;
        self.set_label_alpha(o2, a1)?;
        let s = self.head_image(o2, shift.0, shift.1)?;
        let b2 = self.mul(w, &s, &self.label_omega(o2)?)?;
        let b1 = self.label_omega(o1)?;
        let k = self.mul(w, &self.inv(w, &b1)?, &b2)?;
        for o in self.star(y) {
            if o.edge != o2.edge {
                let lab = self.mul(w, &k, &self.label_alpha(o)?)?;
                self.set_label_alpha(o, lab)?;
            }
        }
        let sy = self.conjugate_state(w, &self.vertices[&y].state, &k)?;
        let sx = self.vertices[&x].state.clone();
        let merged = self.edges[&o1.edge].state.max(self.edges[&o2.edge].state);
        self.edges.remove(&o2.edge);
        self.edges.get_mut(&o1.edge).expect("kept edge").state = merged;
        for e in self.edges.values_mut() {
            if e.parent == y {
                e.parent = x;
            }
            if e.child == y {
                e.child = x;
            }
        }
        self.vertices.remove(&y);
        if self.base == y {
            self.base = x;
        }
        let joined = self.join(w, sx, sy)?;
        self.vertices.get_mut(&x).expect("kept vertex").state = joined;
        self.remap_edge(o2.edge, o1.edge)?;
        Ok(())
    }

    /// Replaces references to a removed edge in product states.
    fn remap_edge(&mut self, from: usize, to: usize) -> Result<(), FoldError> {
        let ids: Vec<usize> = self.vertices.keys().copied().collect();
        for u in ids {
            let VertexState::Product(s) = &self.vertices[&u].state else { continue };
            if !s.iter().any(|(f, _)| *f == from) {
                continue;
            }
            let s: Vec<_> = s.iter().map(|(f, g)| (if *f == from { to } else { *f }, g.clone())).collect();
            let v = self.vertices[&u].a_vertex;
            let state = self.classify_product(v, s)?;
            self.vertices.get_mut(&u).expect("vertex").state = state;
        }
        Ok(())
    }

    fn conjugate_state(&self, v: usize, s: &VertexState, k: &Element) -> Result<VertexState, FoldError> {
        Ok(match s {
            VertexState::Meridians(gs) => {
                VertexState::Meridians(gs.iter().map(|g| self.mul(v, k, g)).collect::<Result<_, _>>()?)
            }
            VertexState::FreeMeridional(gs) => {
                let (bs, Element::Braid(k)) = (self.braid_space(v), k) else {
                    return Err(GogError::WrongKind { vertex: v, found: k.kind() }.into());
                };
                VertexState::FreeMeridional(gs.iter().map(|g| bs.multiply(k, g)).collect())
            }
            VertexState::Product(items) => {
                let Element::Composing(k) = k else {
                    return Err(GogError::WrongKind { vertex: v, found: k.kind() }.into());
                };
                VertexState::Product(items.iter().map(|(f, g)| (*f, k.multiply(g))).collect())
            }
            other => other.clone(),
        })
    }

    fn join(&self, v: usize, s1: VertexState, s2: VertexState) -> Result<VertexState, FoldError> {
        use VertexState::*;
        Ok(match (s1, s2) {
            (LeafFull, _) | (_, LeafFull) => LeafFull,
            (BraidFull, _) | (_, BraidFull) => BraidFull,
            (ComposingFull, _) | (_, ComposingFull) => ComposingFull,
            (NormalClosure, _) | (_, NormalClosure) => NormalClosure,
            (Meridians(mut a), Meridians(b)) => {
                a.extend(b);
                self.saturate_leaf(v, a)
            }
            (FreeMeridional(mut a), FreeMeridional(b)) => {
                a.extend(b);
                self.classify_braid(v, &a)?
            }
            (Trivial, s) | (s, Trivial) => s,
            (Product(mut a), Product(b)) => {
                a.extend(b);
                self.classify_product(v, a)?
            }
            (a, b) => return Err(FoldError::Guard(format!("cannot join states {} and {}", a.tag(), b.tag()))),
        })
    }

    fn saturate_leaf(&self, v: usize, gs: Vec<Element>) -> VertexState {
        if gs.len() >= self.leaf_bridge(v) {
            VertexState::LeafFull
        } else {
            VertexState::Meridians(gs)
        }
    }

    fn classify_braid(&self, v: usize, gs: &[BraidSpaceElement]) -> Result<VertexState, FoldError> {
        let bs = self.braid_space(v);
        Ok(match bs.classify_meridional(gs)? {
            MeridionalClass::NormalClosure => VertexState::NormalClosure,
            MeridionalClass::Free(basis) => VertexState::FreeMeridional(bs.basis_conjugators(&basis)),
        })
    }

    fn classify_product(&self, v: usize, s: Vec<(usize, ComposingElement)>) -> Result<VertexState, FoldError> {
        let rank = self.composing_rank(v);
        let input: Vec<(ComposingElement, usize)> = s
            .iter()
            .map(|(f, g)| Ok((g.clone(), self.gog.child_index(self.edges[f].a_edge)?)))
            .collect::<Result<_, FoldError>>()?;
        Ok(match cs_classify(&input, rank)? {
            ComposingClass::WholeGroup => VertexState::ComposingFull,
            ComposingClass::Basis { basis, .. } => VertexState::Product(
                basis
                    .elements
                    .iter()
                    .zip(&basis.sources)
                    .map(|(t, &src)| (s[src].0, ComposingElement::new(t.conjugator.clone(), 0)))
                    .collect(),
            ),
        })
    }

    fn enlarge_forward(&mut self, edge: usize) -> Result<(), FoldError> {
        let o = Oriented { edge, forward: true };
        let class = self.edge_image_class(o)?;
        let e = self.edge(edge)?.clone();
        if class != EdgeState::MeridianZ || e.state != EdgeState::Trivial {
            return Err(FoldError::Guard(format!(
                "forward enlargement of edge {edge} from {} to {}",
                e.state.tag(),
                class.tag()
            )));
        }
        self.edges.get_mut(&edge).expect("edge").state = EdgeState::MeridianZ;
        let w = self.vertices[&e.child].a_vertex;
        let conj = self.inv(w, &e.b)?;
        let state = self.vertices[&e.child].state.clone();
        let next = match state {
            VertexState::Meridians(mut gs) => {
                gs.push(conj);
                self.saturate_leaf(w, gs)
            }
            VertexState::FreeMeridional(mut gs) => {
                let Element::Braid(c) = conj else { unreachable!("braid vertex labels are braid elements") };
                gs.push(c);
                self.classify_braid(w, &gs)?
            }
            VertexState::Trivial => VertexState::Product(vec![]),
            other => other,
        };
        self.vertices.get_mut(&e.child).expect("vertex").state = next;
        Ok(())
    }

    fn enlarge_backward(&mut self, edge: usize) -> Result<(), FoldError> {
        let o = Oriented { edge, forward: false };
        let class = self.edge_image_class(o)?;
        let e = self.edge(edge)?.clone();
        if class <= e.state {
            return Err(FoldError::Guard(format!("edge {edge} is already {}", e.state.tag())));
        }
        self.edges.get_mut(&edge).expect("edge").state = class;
        let w = self.vertices[&e.parent].a_vertex;
        let state = self.vertices[&e.parent].state.clone();
        let next = match (state, class) {
            (VertexState::FreeMeridional(_), EdgeState::MeridianZ) => VertexState::NormalClosure,
            (VertexState::FreeMeridional(_) | VertexState::NormalClosure, EdgeState::FullZ2) => VertexState::BraidFull,
            (VertexState::Trivial, EdgeState::MeridianZ) => VertexState::Product(vec![]),
            (VertexState::Trivial | VertexState::Product(_), EdgeState::FullZ2) => {
                let mut s = match &self.vertices[&e.parent].state {
                    VertexState::Product(s) => s.clone(),
                    _ => vec![],
                };
                let Element::Composing(a) = &e.a else { unreachable!("composing vertex labels are composing elements") };
                s.push((edge, a.clone()));
                self.classify_product(w, s)?
            }
            (other, _) => other,
        };
        self.vertices.get_mut(&e.parent).expect("vertex").state = next;
        Ok(())
    }

    /// Folds until no move applies, checking tameness and descent of the
    /// complexity after each move.
    pub fn fold(&self, max_steps: Option<usize>) -> FoldTrace {
        let limit = max_steps.unwrap_or(DEFAULT_MAX_STEPS);
        let mut graph = self.clone();
        let mut steps = Vec::new();
        let termination = loop {
            let mv = match graph.find_move() {
                Ok(Some(mv)) => mv,
                Ok(None) => break Termination::Folded,
                Err(err) => break Termination::Error(err.to_string()),
            };
            if steps.len() >= limit {
                break Termination::StepLimit;
            }
            let before = graph.complexity();
            let next = match graph.apply(&mv) {
                Ok(g) => g,
                Err(err) => break Termination::Error(format!("{} on edges {:?}: {err}", mv.kind(), mv.edges())),
            };
            let after = next.complexity();
            let mut violations = next.is_tame().err().unwrap_or_default();
            let merged = match mv {
                Move::IA { first, second, .. } => Some((graph.head(second), graph.head(first))),
                _ => None,
            };
            for &u in graph.vertices.keys() {
                let image = match merged {
                    Some((y, x)) if y == u => x,
                    _ => u,
                };
                if graph.is_full(u) && !next.is_full(image) {
                    violations.push(format!("full vertex {u} has a non-full image {image}"));
                }
            }
            steps.push(FoldStep {
                kind: mv.kind(),
                edges: mv.edges(),
                saturating: matches!(mv, Move::IA { saturating: true, .. }),
                before,
                after,
                violations,
            });
            graph = next;
        };
        FoldTrace { steps, graph, termination }
    }

    pub fn to_json(&self) -> Value {
        let vertices: Vec<Value> = self
            .vertices
            .iter()
            .map(|(id, vx)| {
                json!({
                    "id": id,
                    "a_vertex": vx.a_vertex,
                    "state": vx.state.tag(),
                    "generators": vx.state.payload(),
                    "full": self.is_full(*id),
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|(id, e)| {
                json!({
                    "id": id,
                    "parent": e.parent,
                    "child": e.child,
                    "a_edge": e.a_edge,
                    "a": e.a.to_string(),
                    "b": e.b.to_string(),
                    "state": e.state.tag(),
                })
            })
            .collect();
        let c = self.complexity();
        json!({
            "base": self.base,
            "exact_torus": self.exact_torus,
            "complexity": {"c1": c.c1, "c2": c.c2},
            "tame": self.is_tame().is_ok(),
            "complete": self.is_complete(),
            "vertices": vertices,
            "edges": edges,
        })
    }
}

pub const DEFAULT_MAX_STEPS: usize = 10_000;

fn braid_pow(bs: &BraidSpace, g: &BraidSpaceElement, k: i64) -> BraidSpaceElement {
    let base = if k < 0 { bs.invert(g) } else { g.clone() };
    (0..k.unsigned_abs()).fold(BraidSpaceElement::identity(bs.rank()), |acc, _| bs.multiply(&acc, &base))
}

/// `(z1, z2)` with `x = m^z1 l^z2`, when `x` is peripheral.
fn torus_shift(x: &TorusElement) -> Option<(i64, i64)> {
    let (a, k) = x.peripheral_coordinates()?;
    Some((a + x.p * x.q * k, k))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldStep {
    pub kind: &'static str,
    pub edges: Vec<usize>,
    pub saturating: bool,
    pub before: Complexity,
    pub after: Complexity,
    pub violations: Vec<String>,
}

impl FoldStep {
    pub fn tame(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn decreased(&self) -> bool {
        self.after < self.before
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    Folded,
    StepLimit,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldTrace {
    pub steps: Vec<FoldStep>,
    pub graph: AGraph,
    pub termination: Termination,
}

impl FoldTrace {
    /// Folded, with every step tame and strictly decreasing.
    pub fn is_sound(&self) -> bool {
        self.termination == Termination::Folded && self.steps.iter().all(|s| s.tame() && s.decreased())
    }

    /// One tab-separated line per step.
    pub fn to_log(&self) -> String {
        let mut s = String::from("step\tmove\tedges\tl7\tc1_before\tc2_before\tc1_after\tc2_after\ttame\n");
        for (i, st) in self.steps.iter().enumerate() {
            let edges: Vec<String> = st.edges.iter().map(|e| e.to_string()).collect();
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                i + 1,
                st.kind,
                edges.join(","),
                st.saturating,
                st.before.c1,
                st.before.c2,
                st.after.c1,
                st.after.c2,
                st.tame()
            ));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|st| {
                json!({
                    "move": st.kind,
                    "edges": st.edges,
                    "saturating": st.saturating,
                    "before": {"c1": st.before.c1, "c2": st.before.c2},
                    "after": {"c1": st.after.c1, "c2": st.after.c2},
                    "tame": st.tame(),
                    "violations": st.violations,
                })
            })
            .collect();
        let termination = match &self.termination {
            Termination::Folded => json!("folded"),
            Termination::StepLimit => json!("step_limit"),
            Termination::Error(e) => json!({"error": e}),
        };
        json!({"steps": steps, "termination": termination, "graph": self.graph.to_json()})
    }
}

/// Parses an element of the group at `v`: `x1.X2@r` at braid and composing
/// vertices, `1`, `p(a,b)` or (with exact torus arithmetic) syllables such
/// as `u2.v-1` at leaves.
pub fn parse_element(gog: &TreeOfGroups, v: usize, text: &str, exact_torus: bool) -> Result<Element, FoldError> {
    let text = text.trim();
    let bad = || FoldError::Group(GroupError::BadToken(text.to_string()));
    match gog.group(v) {
        VertexGroup::BraidSpace(bs) => Ok(Element::Braid(BraidSpaceElement::parse(text, bs.rank())?)),
        VertexGroup::ComposingSpace { rank } => {
            let b = BraidSpaceElement::parse(text, *rank)?;
            Ok(Element::Composing(ComposingElement::new(b.w, b.r)))
        }
        VertexGroup::KnotLeaf(label) => {
            if text == "1" {
                return Ok(Element::Peripheral { m: 0, l: 0 });
            }
            if let Some(inner) = text.strip_prefix("p(").and_then(|t| t.strip_suffix(')')) {
                let (m, l) = inner.split_once(',').ok_or_else(bad)?;
                let m = m.trim().parse().map_err(|_| bad())?;
                let l = l.trim().parse().map_err(|_| bad())?;
                return Ok(Element::Peripheral { m, l });
            }
            match label {
                LeafLabel::Torus { p, q } if exact_torus => {
                    Ok(Element::Torus(TorusElement::parse(text, *p as i64, *q as i64)?))
                }
                _ => Err(bad()),
            }
        }
    }
}

impl APath {
    /// Whitespace-separated `a:<element>` and `e:<edge>` tokens, alternating
    /// and starting and ending with an element.
    pub fn parse(text: &str, gog: &TreeOfGroups, exact_torus: bool) -> Result<APath, FoldError> {
        let bad = |message: String| FoldError::BadPath { path: 0, message };
        let mut elements = Vec::new();
        let mut edges = Vec::new();
        let mut at = gog.tree().root();
        for (i, tok) in text.split_whitespace().enumerate() {
            let want_element = i % 2 == 0;
            match (tok.split_once(':'), want_element) {
                (Some(("a", x)), true) => elements.push(parse_element(gog, at, x, exact_torus)?),
                (Some(("e", x)), false) => {
                    let e: usize = x.parse().map_err(|_| bad(format!("bad edge `{x}`")))?;
                    let (pa, ch) = gog.endpoints(e).map_err(|_| bad(format!("no edge {e}")))?;
                    at = if at == pa {
                        ch
                    } else if at == ch {
                        pa
                    } else {
                        return Err(bad(format!("edge {e} does not start at vertex {at}")));
                    };
                    edges.push(e);
                }
                _ => {
                    let expected = if want_element { "a:<element>" } else { "e:<edge>" };
                    return Err(bad(format!("expected {expected}, found `{tok}`")));
                }
            }
        }
        if elements.len() != edges.len() + 1 {
            return Err(bad("a path must end with an element".into()));
        }
        Ok(APath { elements, edges })
    }
}

/// One path per nonempty line; `#` starts a comment.
pub fn parse_paths(text: &str, gog: &TreeOfGroups, exact_torus: bool) -> Result<Vec<APath>, FoldError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            APath::parse(l, gog, exact_torus).map_err(|err| match err {
                FoldError::BadPath { message, .. } => FoldError::BadPath { path: i, message },
                other => other,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knot_tree::KnotTree;

    const SAT3: &str = "sat(braid 3 \"s2 s1^-1 s2 s2\", torus(3,2))";
    const ROUND_TRIP: &str = "a:1 e:1 a:1 e:1 a:1";

    fn gog(tree: &str) -> TreeOfGroups {
        TreeOfGroups::build(&KnotTree::parse(tree).unwrap()).unwrap()
    }

    fn initial(tree: &str, paths: &str, exact: bool) -> AGraph {
        let g = gog(tree);
        AGraph::build_initial(&g, &parse_paths(paths, &g, exact).unwrap(), exact).unwrap()
    }

    fn leaf_id() -> Element {
        Element::Peripheral { m: 0, l: 0 }
    }

    #[test]
    fn initial_graph_shape() {
        let g = initial(SAT3, &[ROUND_TRIP; 3].join("\n"), false);
        assert_eq!(g.vertices().len(), 7);
        assert_eq!(g.edges().len(), 6);
        assert_eq!(g.complexity(), Complexity { c1: 3, c2: 24 });
        assert!(g.is_tame().is_ok());
        let ends = g.vertices().keys().filter(|&&u| g.weight(u).unwrap() == 1).count();
        assert_eq!(ends, 3);
    }

    #[test]
    fn path_errors() {
        let g = gog(SAT3);
        assert!(parse_paths("a:1 e:1 a:1", &g, false).is_ok());
        let p = parse_paths("a:1 e:1 a:1", &g, false).unwrap();
        assert!(matches!(AGraph::build_initial(&g, &p, false), Err(FoldError::BadPath { .. })));
        assert!(parse_paths("a:1 e:2 a:1", &g, false).is_err());
        assert!(parse_paths("a:1 e:1 a:u e:1 a:1", &g, false).is_err());
        assert!(parse_paths("a:1 e:1 a:u e:1 a:1", &g, true).is_ok());
        assert!(parse_paths("e:1 a:1", &g, false).is_err());
    }

    #[test]
    fn duplicate_paths_identify() {
        let tr = initial(SAT3, &[ROUND_TRIP; 2].join("\n"), false).fold(None);
        assert!(tr.is_sound());
        let kinds: Vec<_> = tr.steps.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, ["IA", "IA", "IA"]);
        for s in &tr.steps {
            assert_eq!(s.after.c2 - s.before.c2, -4);
        }
        assert!(tr.to_log().lines().count() == 4);
    }

    #[test]
    fn enlargement_deltas() {
        let tr = initial("sum(torus(3,2), torus(3,2))", "a:1 e:1 a:1 e:1 a:1\na:1 e:1 a:u e:1 a:1", true).fold(None);
        assert!(tr.is_sound(), "{:?}", tr.termination);
        let fwd: Vec<_> = tr.steps.iter().filter(|s| s.kind == "IIA+").collect();
        let bwd: Vec<_> = tr.steps.iter().filter(|s| s.kind == "IIA-").collect();
        assert!(!fwd.is_empty() && !bwd.is_empty());
        assert!(fwd.iter().all(|s| s.after.c2 - s.before.c2 == -1));
        assert!(bwd.iter().all(|s| s.after.c2 - s.before.c2 <= -1));
    }

    #[test]
    fn normal_closure_saturates() {
        let gg = gog("sat(braid 2 \"s1\", torus(3,2))");
        let mut g = AGraph::empty(&gg, false);
        g.set_state(0, VertexState::NormalClosure).unwrap();
        let l1 = g.add_vertex(1, VertexState::Meridians(vec![]));
        let l2 = g.add_vertex(1, VertexState::Meridians(vec![]));
        let x2 = parse_element(&gg, 0, "x2", false).unwrap();
        g.add_edge(0, l1, 1, gg.identity(0), leaf_id(), EdgeState::Trivial).unwrap();
        g.add_edge(0, l2, 1, x2, leaf_id(), EdgeState::Trivial).unwrap();
        assert!(g.is_tame().is_ok());
        assert!(matches!(g.find_move().unwrap(), Some(Move::IA { saturating: true, .. })));
        let tr = g.fold(None);
        assert!(tr.is_sound());
        assert!(tr.steps[0].saturating);
        assert_eq!(tr.graph.edges().len(), 1);
    }

    #[test]
    fn boundary_in_factor_saturates() {
        let gg = gog("sum(torus(3,2), torus(3,2))");
        let mut g = AGraph::empty(&gg, false);
        let full = g.add_vertex(1, VertexState::LeafFull);
        let empty = g.add_vertex(1, VertexState::Meridians(vec![]));
        let id = gg.identity(0);
        let f0 = g.add_edge(0, full, 1, id.clone(), leaf_id(), EdgeState::FullZ2).unwrap();
        let x1 = parse_element(&gg, 0, "x1", false).unwrap();
        g.add_edge(0, empty, 1, x1, leaf_id(), EdgeState::Trivial).unwrap();
        let Element::Composing(c) = id else { unreachable!() };
        g.set_state(0, VertexState::Product(vec![(f0, c)])).unwrap();
        assert!(g.is_tame().is_ok(), "{:?}", g.is_tame());
        let tr = g.fold(None);
        assert!(tr.is_sound(), "{:?}", tr.termination);
        assert!(tr.steps[0].saturating);
    }

    #[test]
    fn complete_graph_matches_bridge_number() {
        for tree in [SAT3, "sum(torus(3,2), torus(5,3), torus(7,2))", "sat(braid 2 \"s1 s1 s1\", sum(torus(3,2), torus(3,2)))"] {
            let gg = gog(tree);
            let g = AGraph::complete(&gg);
            assert!(g.is_complete());
            assert!(g.is_tame().is_ok());
            assert!(g.is_folded().unwrap());
            assert_eq!(g.c1() as u64, gg.tree().bridge_number().unwrap());
        }
    }

    #[test]
    fn tameness_violations() {
        let gg = gog(SAT3);
        let mut g = AGraph::empty(&gg, false);
        let leaf = g.add_vertex(1, VertexState::Meridians(vec![leaf_id(), leaf_id()]));
        g.add_edge(0, leaf, 1, gg.identity(0), leaf_id(), EdgeState::FullZ2).unwrap();
        let errs = g.is_tame().unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(matches!(
            g.add_edge(leaf, 0, 1, leaf_id(), gg.identity(0), EdgeState::Trivial),
            Err(FoldError::BadEdge(1))
        ));
    }
}
