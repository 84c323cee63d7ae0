//! The tree of groups of a knot tree: vertex groups, edge groups `Z²` and
//! their boundary maps, plus exact arithmetic in composing spaces
//! `F_n × <t>` and torus knot groups `<u, v | u^p = v^q>`.

use std::fmt;

use thiserror::Error;

use crate::braid::{BraidSpace, BraidSpaceElement};
use crate::freegroup::{peripheral_basis, GroupError, PeripheralBasis, PeripheralBasisResult, PeripheralConjugate, Word};
use crate::knot_tree::{KnotTree, LeafLabel, NodeLabel, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GogError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("vertex {0} is the root and has no parent edge")]
    NoEdge(usize),
    #[error("element of kind {found} does not belong to the group at vertex {vertex}")]
    WrongKind { vertex: usize, found: &'static str },
    #[error("opaque leaf groups only support peripheral elements")]
    OpaqueArithmetic,
}

/// `w · t^z` in `F_n × <t>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComposingElement {
    pub w: Word,
    pub z: i64,
}

impl ComposingElement {
    pub fn new(w: Word, z: i64) -> Self {
        ComposingElement { w, z }
    }

    pub fn identity(rank: usize) -> Self {
        ComposingElement { w: Word::identity(rank), z: 0 }
    }

    pub fn multiply(&self, other: &ComposingElement) -> ComposingElement {
        ComposingElement { w: self.w.concat(&other.w), z: self.z + other.z }
    }

    pub fn invert(&self) -> ComposingElement {
        ComposingElement { w: self.w.inverse(), z: -self.z }
    }

    pub fn is_identity(&self) -> bool {
        self.z == 0 && self.w.is_identity()
    }

    pub fn to_compact_string(&self) -> String {
        format!("{}@{}", self.w.to_compact_string(), self.z)
    }
}

impl fmt::Display for ComposingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.w, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TorusGen {
    U,
    V,
}

/// Normal form `c^center · s1 s2 …` in `<u, v | u^p = v^q>` with `c = u^p`,
/// alternating syllables `u^a` (`0 < a < p`) and `v^b` (`0 < b < q`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusElement {
    pub p: i64,
    pub q: i64,
    pub center: i64,
    pub syllables: Vec<(TorusGen, i64)>,
}

impl TorusElement {
    pub fn identity(p: i64, q: i64) -> Self {
        TorusElement { p, q, center: 0, syllables: Vec::new() }
    }

    pub fn central(p: i64, q: i64, k: i64) -> Self {
        TorusElement { p, q, center: k, syllables: Vec::new() }
    }

    /// Normal form of an arbitrary product of powers of `u` and `v`.
    pub fn normal_form(p: i64, q: i64, raw: &[(TorusGen, i64)]) -> Self {
        let mut out = Self::identity(p, q);
        for &(g, e) in raw {
            out.push(g, e);
        }
        out
    }

    fn order(&self, g: TorusGen) -> i64 {
        match g {
            TorusGen::U => self.p,
            TorusGen::V => self.q,
        }
    }

    fn push(&mut self, g: TorusGen, e: i64) {
        let ord = self.order(g);
        let mut e = e;
        if let Some(&(tg, te)) = self.syllables.last() {
            if tg == g {
                self.syllables.pop();
                e += te;
            }
        }
        self.center += e.div_euclid(ord);
        let r = e.rem_euclid(ord);
        if r != 0 {
            self.syllables.push((g, r));
        }
    }

    pub fn multiply(&self, other: &TorusElement) -> TorusElement {
        let mut out = self.clone();
        out.center += other.center;
        for &(g, e) in &other.syllables {
            out.push(g, e);
        }
        out
    }

    pub fn invert(&self) -> TorusElement {
        let mut out = Self::central(self.p, self.q, -self.center);
        for &(g, e) in self.syllables.iter().rev() {
            out.push(g, -e);
        }
        out
    }

    pub fn pow(&self, k: i64) -> TorusElement {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut out = Self::identity(self.p, self.q);
        for _ in 0..k.unsigned_abs() {
            out = out.multiply(&base);
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.center == 0 && self.syllables.is_empty()
    }

    pub fn is_central(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Image under `u ↦ q, v ↦ p`.
    pub fn abelianization(&self) -> i64 {
        self.center * self.p * self.q
            + self
                .syllables
                .iter()
                .map(|&(g, e)| match g {
                    TorusGen::U => e * self.q,
                    TorusGen::V => e * self.p,
                })
                .sum::<i64>()
    }

    /// `u^a v^b` with `a q + b p = 1`, `|a|` minimal, ties toward positive `a`.
    pub fn meridian(p: i64, q: i64) -> TorusElement {
        let (a, b) = meridian_exponents(p, q);
        Self::normal_form(p, q, &[(TorusGen::U, a), (TorusGen::V, b)])
    }

    /// `l = c · m^(-pq)`, commuting with the meridian and trivial in
    /// homology.
    pub fn longitude(p: i64, q: i64) -> TorusElement {
        Self::central(p, q, 1).multiply(&Self::meridian(p, q).pow(-p * q))
    }

    /// `m^z1 · l^z2`.
    pub fn peripheral(p: i64, q: i64, z1: i64, z2: i64) -> TorusElement {
        Self::meridian(p, q).pow(z1).multiply(&Self::longitude(p, q).pow(z2))
    }

    /// Writes `self = m^a · c^k` if it lies in the peripheral subgroup.
    pub fn peripheral_coordinates(&self) -> Option<(i64, i64)> {
        let len = self.syllables.len() as i64;
        if len % 2 != 0 {
            return None;
        }
        let m = Self::meridian(self.p, self.q);
        for a in [len / 2, -len / 2] {
            let rest = m.pow(a).invert().multiply(self);
            if rest.is_central() {
                return Some((a, rest.center));
            }
        }
        None
    }

    /// Dot-separated syllables `c1.u2.v-1`, `1` for the identity.
    pub fn to_compact_string(&self) -> String {
        let mut parts = Vec::new();
        if self.center != 0 {
            parts.push(format!("c{}", self.center));
        }
        for &(g, e) in &self.syllables {
            parts.push(format!("{}{}", if g == TorusGen::U { "u" } else { "v" }, e));
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(".")
        }
    }

    /// Parses `u2.v-1` style syllables; `c<k>` is the central `u^p`.
    pub fn parse(text: &str, p: i64, q: i64) -> Result<TorusElement, GroupError> {
        let mut raw = Vec::new();
        for tok in text.split('.').filter(|t| !t.is_empty() && *t != "1") {
            let bad = || GroupError::BadToken(tok.to_string());
            let (g, rest) = tok.split_at(1);
            let e: i64 = if rest.is_empty() { 1 } else { rest.parse().map_err(|_| bad())? };
            match g {
                "u" => raw.push((TorusGen::U, e)),
                "v" => raw.push((TorusGen::V, e)),
                "c" => raw.push((TorusGen::U, e * p)),
                _ => return Err(bad()),
            }
        }
        Ok(Self::normal_form(p, q, &raw))
    }
}

fn meridian_exponents(p: i64, q: i64) -> (i64, i64) {
    // a q ≡ 1 (mod p); candidates a0 and a0 - p.
    let a0 = (1..p).find(|a| (a * q).rem_euclid(p) == 1).expect("p and q coprime");
    let a1 = a0 - p;
    let a = if a0 <= -a1 { a0 } else { a1 };
    (a, (1 - a * q) / p)
}

/// An element of some vertex group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Braid(BraidSpaceElement),
    Composing(ComposingElement),
    /// `m^m · l^l` in a leaf's peripheral subgroup.
    Peripheral { m: i64, l: i64 },
    Torus(TorusElement),
}

impl Element {
    pub fn kind(&self) -> &'static str {
        match self {
            Element::Braid(_) => "braid",
            Element::Composing(_) => "composing",
            Element::Peripheral { .. } => "peripheral",
            Element::Torus(_) => "torus",
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Braid(b) => write!(f, "{}", b.to_compact_string()),
            Element::Composing(c) => write!(f, "{}", c.to_compact_string()),
            Element::Peripheral { m, l } => write!(f, "p({m},{l})"),
            Element::Torus(t) => write!(f, "{}", t.to_compact_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexGroup {
    KnotLeaf(LeafLabel),
    BraidSpace(BraidSpace),
    ComposingSpace { rank: usize },
}

/// Vertex groups over a knot tree. The edge into a non-root vertex is
/// identified with that vertex's id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeOfGroups {
    tree: KnotTree,
    groups: Vec<VertexGroup>,
}

impl TreeOfGroups {
    pub fn build(tree: &KnotTree) -> Result<Self, GogError> {
        tree.validate().map_err(TreeError::Invalid)?;
        let groups = tree
            .nodes()
            .iter()
            .map(|node| match &node.label {
                NodeLabel::Leaf(l) => VertexGroup::KnotLeaf(l.clone()),
                NodeLabel::Satellite(b) => VertexGroup::BraidSpace(BraidSpace::new(b.clone())),
                NodeLabel::Sum => VertexGroup::ComposingSpace { rank: node.children.len() },
            })
            .collect();
        Ok(TreeOfGroups { tree: tree.clone(), groups })
    }

    pub fn tree(&self) -> &KnotTree {
        &self.tree
    }

    pub fn group(&self, v: usize) -> &VertexGroup {
        &self.groups[v]
    }

    pub fn groups(&self) -> &[VertexGroup] {
        &self.groups
    }

    /// `(parent, child)` of edge `e`.
    pub fn endpoints(&self, e: usize) -> Result<(usize, usize), GogError> {
        self.tree.node(e)?;
        let parent = self.tree.parent(e).ok_or(GogError::NoEdge(e))?;
        Ok((parent, e))
    }

    /// Position `1..=n` of the child among its siblings.
    pub fn child_index(&self, e: usize) -> Result<usize, GogError> {
        let (parent, child) = self.endpoints(e)?;
        Ok(self.tree.children(parent).iter().position(|&c| c == child).expect("child of its parent") + 1)
    }

    pub fn edges(&self) -> Vec<usize> {
        (1..self.tree.len()).collect()
    }

    /// Image of `m_e^z1 l_e^z2` in the parent group.
    pub fn alpha_map(&self, e: usize, z1: i64, z2: i64) -> Result<Element, GogError> {
        let (parent, _) = self.endpoints(e)?;
        Ok(match &self.groups[parent] {
            VertexGroup::BraidSpace(bs) => {
                Element::Braid(BraidSpaceElement::new(bs.boundary_word().pow(z1), z2))
            }
            VertexGroup::ComposingSpace { rank } => {
                let j = self.child_index(e)?;
                Element::Composing(ComposingElement::new(Word::generator(j, *rank)?.pow(z2), z1))
            }
            VertexGroup::KnotLeaf(_) => unreachable!("leaves have no children"),
        })
    }

    /// Image of `m_e^z1 l_e^z2` in the child group.
    pub fn omega_map(&self, e: usize, z1: i64, z2: i64) -> Result<Element, GogError> {
        let (_, child) = self.endpoints(e)?;
        Ok(match &self.groups[child] {
            VertexGroup::KnotLeaf(LeafLabel::Torus { p, q }) => {
                Element::Torus(TorusElement::peripheral(*p as i64, *q as i64, z1, z2))
            }
            VertexGroup::KnotLeaf(LeafLabel::Opaque { .. }) => Element::Peripheral { m: z1, l: z2 },
            VertexGroup::BraidSpace(bs) => {
                let m = BraidSpaceElement::new(bs.meridian().w.pow(z1), 0);
                let l = bs.longitude();
                let mut lp = BraidSpaceElement::identity(bs.rank());
                let step = if z2 < 0 { bs.invert(&l) } else { l };
                for _ in 0..z2.unsigned_abs() {
                    lp = bs.multiply(&lp, &step);
                }
                Element::Braid(bs.multiply(&m, &lp))
            }
            VertexGroup::ComposingSpace { rank } => {
                Element::Composing(ComposingElement::new(Word::boundary_product(*rank).pow(z2), z1))
            }
        })
    }

    pub fn identity(&self, v: usize) -> Element {
        match &self.groups[v] {
            VertexGroup::KnotLeaf(LeafLabel::Torus { p, q }) => {
                Element::Torus(TorusElement::identity(*p as i64, *q as i64))
            }
            VertexGroup::KnotLeaf(_) => Element::Peripheral { m: 0, l: 0 },
            VertexGroup::BraidSpace(bs) => Element::Braid(BraidSpaceElement::identity(bs.rank())),
            VertexGroup::ComposingSpace { rank } => Element::Composing(ComposingElement::identity(*rank)),
        }
    }

    fn normalize(&self, v: usize, x: &Element) -> Result<Element, GogError> {
        match (&self.groups[v], x) {
            (VertexGroup::KnotLeaf(LeafLabel::Torus { p, q }), Element::Peripheral { m, l }) => {
                Ok(Element::Torus(TorusElement::peripheral(*p as i64, *q as i64, *m, *l)))
            }
            (VertexGroup::KnotLeaf(LeafLabel::Torus { .. }), Element::Torus(_))
            | (VertexGroup::KnotLeaf(LeafLabel::Opaque { .. }), Element::Peripheral { .. })
            | (VertexGroup::BraidSpace(_), Element::Braid(_))
            | (VertexGroup::ComposingSpace { .. }, Element::Composing(_)) => Ok(x.clone()),
            _ => Err(GogError::WrongKind { vertex: v, found: x.kind() }),
        }
    }

    /// Product in the group at `v`. Peripheral symbols at torus leaves are
    /// converted to torus words.
    pub fn multiply(&self, v: usize, a: &Element, b: &Element) -> Result<Element, GogError> {
        let (a, b) = (self.normalize(v, a)?, self.normalize(v, b)?);
        Ok(match (&self.groups[v], a, b) {
            (VertexGroup::BraidSpace(bs), Element::Braid(x), Element::Braid(y)) => Element::Braid(bs.multiply(&x, &y)),
            (_, Element::Composing(x), Element::Composing(y)) => Element::Composing(x.multiply(&y)),
            (_, Element::Torus(x), Element::Torus(y)) => Element::Torus(x.multiply(&y)),
            (_, Element::Peripheral { m: m1, l: l1 }, Element::Peripheral { m: m2, l: l2 }) => {
                Element::Peripheral { m: m1 + m2, l: l1 + l2 }
            }
            _ => unreachable!("normalize checked kinds"),
        })
    }

    pub fn invert(&self, v: usize, a: &Element) -> Result<Element, GogError> {
        let a = self.normalize(v, a)?;
        Ok(match (&self.groups[v], a) {
            (VertexGroup::BraidSpace(bs), Element::Braid(x)) => Element::Braid(bs.invert(&x)),
            (_, Element::Composing(x)) => Element::Composing(x.invert()),
            (_, Element::Torus(x)) => Element::Torus(x.invert()),
            (_, Element::Peripheral { m, l }) => Element::Peripheral { m: -m, l: -l },
            _ => unreachable!("normalize checked kinds"),
        })
    }

    pub fn is_identity(&self, v: usize, a: &Element) -> Result<bool, GogError> {
        Ok(match self.normalize(v, a)? {
            Element::Braid(x) => x.is_identity(),
            Element::Composing(x) => x.is_identity(),
            Element::Torus(x) => x.is_identity(),
            Element::Peripheral { m, l } => m == 0 && l == 0,
        })
    }

    /// Text form of the vertex groups and edge maps.
    pub fn presentation(&self) -> String {
        let mut s = String::new();
        for (v, g) in self.groups.iter().enumerate() {
            match g {
                VertexGroup::KnotLeaf(LeafLabel::Torus { p, q }) => {
                    let m = TorusElement::meridian(*p as i64, *q as i64);
                    s.push_str(&format!(
                        "vertex {v}: torus < u, v | u^{p} = v^{q} >, m = {}, l = u^{p} m^-{}\n",
                        m.to_compact_string(),
                        p * q
                    ));
                }
                VertexGroup::KnotLeaf(LeafLabel::Opaque { name, .. }) => {
                    s.push_str(&format!("vertex {v}: G({name}), meridian m{v}, longitude l{v}\n"));
                }
                VertexGroup::BraidSpace(bs) => {
                    let n = bs.rank();
                    let gens: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
                    let rels: Vec<String> =
                        (1..=n).map(|i| format!("t x{i} t^-1 = {}", bs.phi().image(i))).collect();
                    s.push_str(&format!(
                        "vertex {v}: braid space < {}, t | {} >, braid {}, m = x1, l = {}\n",
                        gens.join(", "),
                        rels.join("; "),
                        bs.braid(),
                        bs.longitude()
                    ));
                }
                VertexGroup::ComposingSpace { rank } => {
                    let gens: Vec<String> = (1..=*rank).map(|i| format!("x{i}")).collect();
                    s.push_str(&format!(
                        "vertex {v}: composing space < {}, t | t central >, m = t\n",
                        gens.join(", ")
                    ));
                }
            }
        }
        for e in self.edges() {
            let (a, b) = self.endpoints(e).expect("edge");
            let am = self.alpha_map(e, 1, 0).expect("edge");
            let al = self.alpha_map(e, 0, 1).expect("edge");
            let om = self.omega_map(e, 1, 0).expect("edge");
            let ol = self.omega_map(e, 0, 1).expect("edge");
            s.push_str(&format!(
                "edge {e}: {a} -> {b}, alpha(m) = {am}, alpha(l) = {al}, omega(m) = {om}, omega(l) = {ol}\n"
            ));
        }
        s
    }
}

/// Outcome of classifying a meridional subgroup of a composing space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComposingClass {
    WholeGroup,
    Basis {
        basis: PeripheralBasis,
        /// Entry `i - 1` is true when `x_i` itself lies in the subgroup, so
        /// that the boundary subgroup `<x_i, t>` is fully contained.
        full_at_identity: Vec<bool>,
    },
}

/// Classifies `<g x_i g⁻¹ : (g, i) ∈ S> × <t>` inside `F_n × <t>`.
pub fn cs_classify(s: &[(ComposingElement, usize)], rank: usize) -> Result<ComposingClass, GroupError> {
    let pcs: Vec<PeripheralConjugate> =
        s.iter().map(|(g, i)| PeripheralConjugate::new(g.w.clone(), *i)).collect::<Result<_, _>>()?;
    if pcs.iter().any(|pc| pc.index == rank + 1) {
        return Err(GroupError::Inconsistent("boundary generator towards the parent in a meridional set".into()));
    }
    match peripheral_basis(&pcs, rank)? {
        PeripheralBasisResult::WholeGroup => Ok(ComposingClass::WholeGroup),
        PeripheralBasisResult::Basis(basis) => {
            if !basis.graph.peripheral_cycles(rank + 1)?.is_empty() {
                return Err(GroupError::Inconsistent("subgroup meets the parent boundary".into()));
            }
            let full_at_identity = (1..=rank)
                .map(|i| basis.graph.contains(&Word::generator(i, rank).expect("in range")))
                .collect();
            Ok(ComposingClass::Basis { basis, full_at_identity })
        }
    }
}

/// Whether `g <x_i> g⁻¹` meets the subgroup with basis `basis` nontrivially,
/// decided through the basis elements of index `i`.
pub fn meets_boundary(basis: &PeripheralBasis, g: &Word, i: usize) -> bool {
    let x = Word::generator(i, g.rank()).expect("index in range");
    basis
        .elements
        .iter()
        .filter(|t| t.index == i)
        .any(|t| basis.graph.power_in_subgroup(g, &x, &t.conjugator.inverse()).is_some())
}
