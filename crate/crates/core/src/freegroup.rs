//! Words in the punctured-sphere group `F_n = <x1..x(n+1) | x1..x(n+1)>` and
//! Stallings core graphs of its finitely generated subgroups.
//!
//! The last puncture generator `x(n+1)` is stored as the reduced word
//! `(x1 x2 .. xn)^-1`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("generator index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: usize, rank: usize },
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("malformed word token `{0}`")]
    BadToken(String),
    #[error("`{0}` is not a conjugate of a generator")]
    NotGeneratorConjugate(String),
    #[error("inconsistent peripheral data: {0}")]
    Inconsistent(String),
}

/// A generator `x_gen` or its inverse. Generators are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub gen: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(gen: usize, inverse: bool) -> Self {
        Letter { gen, inverse }
    }

    pub fn pos(gen: usize) -> Self {
        Letter { gen, inverse: false }
    }

    pub fn neg(gen: usize) -> Self {
        Letter { gen, inverse: true }
    }

    pub fn inv(self) -> Self {
        Letter { gen: self.gen, inverse: !self.inverse }
    }

    /// Sign as used in the `(index, ±1)` notation.
    pub fn sign(self) -> i8 {
        if self.inverse {
            -1
        } else {
            1
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "X{}", self.gen)
        } else {
            write!(f, "x{}", self.gen)
        }
    }
}

/// A freely reduced word in the free group of the given rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    rank: usize,
    letters: Vec<Letter>,
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last() == Some(&l.inv()) {
        out.pop();
    } else {
        out.push(l);
    }
}

impl Word {
    pub fn identity(rank: usize) -> Self {
        Word { rank, letters: Vec::new() }
    }

    /// Freely reduces a raw letter sequence.
    pub fn reduce(letters: &[Letter], rank: usize) -> Result<Self, GroupError> {
        let mut out = Vec::with_capacity(letters.len());
        for &l in letters {
            if l.gen == 0 || l.gen > rank {
                return Err(GroupError::IndexOutOfRange { index: l.gen, rank });
            }
            push_reduced(&mut out, l);
        }
        Ok(Word { rank, letters: out })
    }

    /// Reduces a sequence given in `(index, sign)` form.
    pub fn from_signed(pairs: &[(usize, i8)], rank: usize) -> Result<Self, GroupError> {
        let letters: Vec<Letter> = pairs.iter().map(|&(g, s)| Letter::new(g, s < 0)).collect();
        Word::reduce(&letters, rank)
    }

    /// The puncture generator `x_i` for `1 <= i <= n+1`.
    pub fn generator(i: usize, rank: usize) -> Result<Self, GroupError> {
        if i == 0 || i > rank + 1 {
            return Err(GroupError::IndexOutOfRange { index: i, rank: rank + 1 });
        }
        if i <= rank {
            Ok(Word { rank, letters: vec![Letter::pos(i)] })
        } else {
            Ok(Word { rank, letters: (1..=rank).rev().map(Letter::neg).collect() })
        }
    }

    /// The product `x1 x2 .. xn`.
    pub fn boundary_product(rank: usize) -> Self {
        Word { rank, letters: (1..=rank).map(Letter::pos).collect() }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn multiply(&self, other: &Word) -> Result<Word, GroupError> {
        if self.rank != other.rank {
            return Err(GroupError::RankMismatch(self.rank, other.rank));
        }
        Ok(self.concat(other))
    }

    /// Product of two words of equal rank.
    ///
    /// Panics on a rank mismatch; use [`Word::multiply`] for checked input.
    pub fn concat(&self, other: &Word) -> Word {
        assert_eq!(self.rank, other.rank, "rank mismatch in word product");
        let mut out = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut out, l);
        }
        Word { rank: self.rank, letters: out }
    }

    pub fn inverse(&self) -> Word {
        Word { rank: self.rank, letters: self.letters.iter().rev().map(|l| l.inv()).collect() }
    }

    /// `g · self · g⁻¹`.
    pub fn conjugate_by(&self, g: &Word) -> Result<Word, GroupError> {
        Ok(g.multiply(self)?.concat(&g.inverse()))
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity(self.rank);
        for _ in 0..k.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    /// Writes `self = a · core · a⁻¹` with `core` cyclically reduced.
    pub fn cyclic_decompose(&self) -> (Word, Word) {
        let n = self.letters.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.letters[k] == self.letters[n - 1 - k].inv() {
            k += 1;
        }
        (
            Word { rank: self.rank, letters: self.letters[..k].to_vec() },
            Word { rank: self.rank, letters: self.letters[k..n - k].to_vec() },
        )
    }

    /// Writes `self = A · x_j · A⁻¹` for a puncture generator `x_j` with
    /// `1 <= j <= n`, returning `(A, j)`.
    pub fn as_generator_conjugate(&self) -> Result<(Word, usize), GroupError> {
        let (a, core) = self.cyclic_decompose();
        match core.letters.as_slice() {
            [l] if !l.inverse => Ok((a, l.gen)),
            _ => Err(GroupError::NotGeneratorConjugate(self.to_string())),
        }
    }

    /// Shortlex comparison: shorter first, then lexicographic on letters
    /// with `x_i < X_i < x_(i+1)`.
    pub fn shortlex_cmp(&self, other: &Word) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.letters.cmp(&other.letters))
    }

    /// Parses tokens `x3 X1 x2`; `1` or an empty string is the identity.
    /// Tokens may be separated by whitespace or `.`.
    pub fn parse(text: &str, rank: usize) -> Result<Word, GroupError> {
        let mut letters = Vec::new();
        for tok in text.split(|c: char| c.is_whitespace() || c == '.').filter(|t| !t.is_empty()) {
            if tok == "1" {
                continue;
            }
            let inverse = match tok.chars().next() {
                Some('x') => false,
                Some('X') => true,
                _ => return Err(GroupError::BadToken(tok.to_string())),
            };
            let gen: usize = tok[1..].parse().map_err(|_| GroupError::BadToken(tok.to_string()))?;
            letters.push(Letter::new(gen, inverse));
        }
        Word::reduce(&letters, rank)
    }

    /// Dot-separated form used inside whitespace-delimited files.
    pub fn to_compact_string(&self) -> String {
        if self.is_empty() {
            return "1".to_string();
        }
        self.letters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(".")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// `conjugator · x_index · conjugator⁻¹` with `1 <= index <= n+1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeripheralConjugate {
    pub conjugator: Word,
    pub index: usize,
}

impl PeripheralConjugate {
    pub fn new(conjugator: Word, index: usize) -> Result<Self, GroupError> {
        let rank = conjugator.rank();
        if index == 0 || index > rank + 1 {
            return Err(GroupError::IndexOutOfRange { index, rank: rank + 1 });
        }
        Ok(PeripheralConjugate { conjugator, index })
    }

    pub fn element(&self) -> Word {
        let x = Word::generator(self.index, self.conjugator.rank()).expect("index checked on construction");
        x.conjugate_by(&self.conjugator).expect("same rank")
    }
}

impl fmt::Display for PeripheralConjugate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.conjugator, self.index)
    }
}

/// A folded core graph with base vertex `0`.
///
/// Vertices are numbered in breadth-first order from the base (labels in
/// increasing order, outgoing before incoming), so two graphs representing the
/// same subgroup compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupGraph {
    rank: usize,
    num_vertices: usize,
    /// `(src, label, dst)`, sorted.
    edges: Vec<(usize, usize, usize)>,
    out: Vec<Vec<Option<usize>>>,
    inc: Vec<Vec<Option<usize>>>,
}

/// `(src, label, dst)`.
type EdgeKey = (usize, usize, usize);

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.0[hi] = lo;
        }
    }
}

/// Reads an unreduced word in a subgroup graph, reducing as it goes.
#[derive(Clone)]
struct Reader<'g> {
    graph: &'g SubgroupGraph,
    /// Letters of the reduced prefix with the vertex reached after each.
    stack: Vec<(Letter, Option<usize>)>,
}

impl<'g> Reader<'g> {
    fn new(graph: &'g SubgroupGraph, w: &Word) -> Self {
        let mut r = Reader { graph, stack: Vec::new() };
        r.push_word(w);
        r
    }

    fn vertex(&self) -> Option<usize> {
        self.stack.last().map_or(Some(0), |&(_, v)| v)
    }

    fn push(&mut self, l: Letter) -> Option<(Letter, Option<usize>)> {
        if self.stack.last().is_some_and(|&(top, _)| top == l.inv()) {
            return self.stack.pop();
        }
        let next = self.vertex().and_then(|v| self.graph.step(v, l));
        self.stack.push((l, next));
        None
    }

    fn push_word(&mut self, w: &Word) {
        for &l in w.letters() {
            self.push(l);
        }
    }

    /// Whether the current prefix followed by `w` lies in the subgroup; the
    /// reader is left unchanged.
    fn accepts_with(&mut self, w: &Word) -> bool {
        let mut undo = Vec::with_capacity(w.len());
        for &l in w.letters() {
            undo.push(self.push(l));
        }
        let inside = self.vertex() == Some(0);
        for popped in undo.into_iter().rev() {
            match popped {
                Some(entry) => self.stack.push(entry),
                None => {
                    self.stack.pop();
                }
            }
        }
        inside
    }
}

impl SubgroupGraph {
    /// Stallings graph of the subgroup generated by `gens`.
    pub fn build(gens: &[Word], rank: usize) -> Result<Self, GroupError> {
        let mut edges: Vec<(usize, usize, usize)> = Vec::new();
        let mut nv = 1usize;
        for w in gens {
            if w.rank() != rank {
                return Err(GroupError::RankMismatch(rank, w.rank()));
            }
            let len = w.len();
            let mut cur = 0usize;
            for (k, l) in w.letters().iter().enumerate() {
                let next = if k + 1 == len {
                    0
                } else {
                    nv += 1;
                    nv - 1
                };
                if l.inverse {
                    edges.push((next, l.gen, cur));
                } else {
                    edges.push((cur, l.gen, next));
                }
                cur = next;
            }
        }
        Ok(Self::fold_and_trim(rank, nv, edges, 0))
    }

    fn fold_and_trim(rank: usize, nv: usize, edges: Vec<(usize, usize, usize)>, base: usize) -> Self {
        let mut uf = UnionFind((0..nv).collect());
        let mut alive = vec![true; edges.len()];
        // Incidences `(edge, leaves the vertex)`, kept at union-find roots.
        let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); nv];
        for (id, &(s, _, d)) in edges.iter().enumerate() {
            adj[s].push((id, true));
            adj[d].push((id, false));
        }
        let mut queue: VecDeque<usize> = (0..nv).collect();
        while let Some(v) = queue.pop_front() {
            let v = uf.find(v);
            let mut seen = std::collections::HashMap::<(usize, bool), (usize, usize)>::new();
            let incident = std::mem::take(&mut adj[v]);
            let mut kept = Vec::with_capacity(incident.len());
            let mut merged = None;
            for (k, &(id, leaves)) in incident.iter().enumerate() {
                if !alive[id] {
                    continue;
                }
                let (s, l, d) = edges[id];
                let other = uf.find(if leaves { d } else { s });
                match seen.get(&(l, leaves)).filter(|&&(_, e)| alive[e]) {
                    Some(&(first, _)) if first == other => alive[id] = false,
                    Some(&(first, _)) => {
                        alive[id] = false;
                        merged = Some((first, other, k + 1));
                        break;
                    }
                    None => {
                        seen.insert((l, leaves), (other, id));
                        kept.push((id, leaves));
                    }
                }
            }
            match merged {
                None => adj[v] = kept,
                Some((a, b, rest)) => {
                    kept.extend_from_slice(&incident[rest..]);
                    adj[v] = kept;
                    let (ra, rb) = (uf.find(a), uf.find(b));
                    uf.union(ra, rb);
                    let root = uf.find(ra);
                    let gone = if root == ra { rb } else { ra };
                    let moved = std::mem::take(&mut adj[gone]);
                    adj[root].extend(moved);
                    queue.push_back(root);
                    queue.push_back(uf.find(v));
                }
            }
        }
        let base = uf.find(base);
        let mut current: BTreeSet<(usize, usize, usize)> = edges
            .iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .map(|(&(s, l, d), _)| (uf.find(s), l, uf.find(d)))
            .collect();

        // Trim hanging trees.
        let mut degree = std::collections::HashMap::<usize, usize>::new();
        let mut around = std::collections::HashMap::<usize, Vec<(usize, usize, usize)>>::new();
        for &e @ (s, _, d) in &current {
            for v in [s, d] {
                *degree.entry(v).or_default() += 1;
                around.entry(v).or_default().push(e);
            }
        }
        let mut leaves: Vec<usize> = degree.iter().filter(|&(&v, &deg)| v != base && deg <= 1).map(|(&v, _)| v).collect();
        while let Some(v) = leaves.pop() {
            for e @ (s, _, d) in around.remove(&v).unwrap_or_default() {
                if current.remove(&e) {
                    for u in [s, d] {
                        let deg = degree.get_mut(&u).expect("endpoint has a degree");
                        *deg -= 1;
                        if u != v && u != base && *deg == 1 {
                            leaves.push(u);
                        }
                    }
                }
            }
        }

        // Canonical renumbering.
        let mut out_adj = std::collections::BTreeMap::<(usize, usize), usize>::new();
        let mut in_adj = std::collections::BTreeMap::<(usize, usize), usize>::new();
        for &(s, l, d) in &current {
            out_adj.insert((s, l), d);
            in_adj.insert((d, l), s);
        }
        let mut order = std::collections::BTreeMap::<usize, usize>::new();
        order.insert(base, 0);
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for l in 1..=rank {
                for nb in [out_adj.get(&(v, l)), in_adj.get(&(v, l))].into_iter().flatten() {
                    if !order.contains_key(nb) {
                        let id = order.len();
                        order.insert(*nb, id);
                        queue.push_back(*nb);
                    }
                }
            }
        }
        let edges: Vec<(usize, usize, usize)> = {
            let mut e: Vec<_> = current.iter().map(|&(s, l, d)| (order[&s], l, order[&d])).collect();
            e.sort();
            e
        };
        Self::from_parts(rank, order.len(), edges)
    }

    fn from_parts(rank: usize, num_vertices: usize, edges: Vec<(usize, usize, usize)>) -> Self {
        let mut out = vec![vec![None; rank]; num_vertices];
        let mut inc = vec![vec![None; rank]; num_vertices];
        for &(s, l, d) in &edges {
            out[s][l - 1] = Some(d);
            inc[d][l - 1] = Some(s);
        }
        SubgroupGraph { rank, num_vertices, edges, out, inc }
    }

    pub fn ambient_rank(&self) -> usize {
        self.rank
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn base(&self) -> usize {
        0
    }

    pub fn edges(&self) -> &[(usize, usize, usize)] {
        &self.edges
    }

    /// Follows a letter from `v`, if the edge exists.
    pub fn step(&self, v: usize, l: Letter) -> Option<usize> {
        if l.inverse {
            self.inc[v][l.gen - 1]
        } else {
            self.out[v][l.gen - 1]
        }
    }

    /// Reads `w` starting at `v`.
    pub fn read_from(&self, v: usize, w: &Word) -> Option<usize> {
        w.letters().iter().try_fold(v, |cur, &l| self.step(cur, l))
    }

    pub fn contains(&self, w: &Word) -> bool {
        w.rank() == self.rank && self.read_from(0, w) == Some(0)
    }

    /// `|E| - |V| + 1`.
    pub fn rank(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.num_vertices)
    }

    pub fn is_whole_group(&self) -> bool {
        self.num_vertices == 1 && self.edges.len() == self.rank
    }

    /// Cycles of the partial map `v -> read_from(v, x_i)`: one entry per
    /// cycle, `(least vertex on the cycle, cycle length)`.
    pub fn peripheral_cycles(&self, i: usize) -> Result<Vec<(usize, usize)>, GroupError> {
        let c = Word::generator(i, self.rank)?;
        Ok(self.reading_cycles(&c, None))
    }

    fn reading_cycles(&self, c: &Word, removed: Option<&BTreeSet<(usize, usize, usize)>>) -> Vec<(usize, usize)> {
        let nv = self.num_vertices;
        let step = |v: usize| -> Option<usize> {
            let mut cur = v;
            for &l in c.letters() {
                let next = self.step(cur, l)?;
                if let Some(r) = removed {
                    let e = if l.inverse { (next, l.gen, cur) } else { (cur, l.gen, next) };
                    if r.contains(&e) {
                        return None;
                    }
                }
                cur = next;
            }
            Some(cur)
        };
        let mut found = Vec::new();
        for v in 0..nv {
            let mut cur = v;
            let mut min = v;
            for z in 1..=nv {
                match step(cur) {
                    None => break,
                    Some(next) => {
                        cur = next;
                        if cur == v {
                            if min == v {
                                found.push((v, z));
                            }
                            break;
                        }
                        min = min.min(cur);
                    }
                }
            }
        }
        found
    }

    /// Breadth-first path word from the base to `target`, avoiding `removed`
    /// edges.
    fn tree_path(&self, target: usize, removed: &BTreeSet<(usize, usize, usize)>) -> Option<Word> {
        let mut parent: Vec<Option<(usize, Letter)>> = vec![None; self.num_vertices];
        let mut reached = vec![false; self.num_vertices];
        reached[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            if v == target {
                break;
            }
            for l in 1..=self.rank {
                for letter in [Letter::pos(l), Letter::neg(l)] {
                    if let Some(nb) = self.step(v, letter) {
                        let e = if letter.inverse { (nb, l, v) } else { (v, l, nb) };
                        if !reached[nb] && !removed.contains(&e) {
                            reached[nb] = true;
                            parent[nb] = Some((v, letter));
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
        if !reached[target] {
            return None;
        }
        let mut letters = Vec::new();
        let mut cur = target;
        while let Some((prev, l)) = parent[cur] {
            letters.push(l);
            cur = prev;
        }
        letters.reverse();
        Some(Word { rank: self.rank, letters })
    }

    /// Smallest `|j|` (ties toward positive) with `y · c^j · z` in the
    /// subgroup. The search window is large enough for the membership
    /// pattern in `j` to have become periodic.
    pub fn power_in_subgroup(&self, y: &Word, c: &Word, z: &Word) -> Option<i64> {
        let (a, core) = c.cyclic_decompose();
        let y = y.concat(&a);
        let z = a.inverse().concat(z);
        let mut pos = Reader::new(self, &y);
        if pos.accepts_with(&z) {
            return Some(0);
        }
        if core.is_empty() {
            return None;
        }
        let mut neg = pos.clone();
        let core_inv = core.inverse();
        // Past `settled`, the outcome at `j` is a function of the vertex
        // reached `lag` copies earlier, so once that vertex repeats the
        // remaining outcomes repeat too.
        let settled = (y.len() + 2 * z.len()) / core.len() + 3;
        let lag = z.len() / core.len() + 2;
        let mut sides = [(&mut pos, &core, 1i64, BTreeSet::new(), None), (&mut neg, &core_inv, -1, BTreeSet::new(), None)];
        for j in 1.. {
            let mut live = false;
            for (reader, step, sign, seen, countdown) in sides.iter_mut() {
                if *countdown == Some(0) {
                    continue;
                }
                reader.push_word(step);
                if reader.accepts_with(&z) {
                    return Some(*sign * j as i64);
                }
                match countdown {
                    Some(left) => *left -= 1,
                    None if j >= settled && !seen.insert(reader.vertex()) => *countdown = Some(lag),
                    None => {}
                }
                live |= *countdown != Some(0);
            }
            if !live {
                break;
            }
        }
        None
    }

    /// Line-based dump: `base 0` header followed by `src label dst` lines.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("base {}\n", self.base());
        for &(a, l, b) in &self.edges {
            s.push_str(&format!("{a} {l} {b}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeripheralBasisResult {
    WholeGroup,
    Basis(PeripheralBasis),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeripheralBasis {
    pub elements: Vec<PeripheralConjugate>,
    /// For each basis element, the index of an input element it is conjugate to
    /// inside the subgroup.
    pub sources: Vec<usize>,
    pub graph: SubgroupGraph,
}

impl PeripheralBasisResult {
    pub fn basis(&self) -> Option<&PeripheralBasis> {
        match self {
            PeripheralBasisResult::WholeGroup => None,
            PeripheralBasisResult::Basis(b) => Some(b),
        }
    }
}

/// Free basis of peripheral conjugates for a subgroup generated by
/// peripheral conjugates, or `WholeGroup`.
///
/// The basis is read off the fat-graph structure of the core graph: every
/// edge lies on one `x_i`-chain and one `x_(n+1)`-chain. An edge whose two
/// chains are one closed puncture cycle and one open chain can be deleted
/// while splitting off `h · x_i · h⁻¹` as a free factor, with `h` a path to
/// the cycle in the remaining graph. Repeating until no closed puncture
/// cycles remain yields the basis.
pub fn peripheral_basis(s: &[PeripheralConjugate], rank: usize) -> Result<PeripheralBasisResult, GroupError> {
    for pc in s {
        if pc.conjugator.rank() != rank {
            return Err(GroupError::RankMismatch(rank, pc.conjugator.rank()));
        }
        if pc.index == 0 || pc.index > rank + 1 {
            return Err(GroupError::IndexOutOfRange { index: pc.index, rank: rank + 1 });
        }
    }
    let words: Vec<Word> = s.iter().map(|pc| pc.element()).collect();
    let graph = SubgroupGraph::build(&words, rank)?;
    if graph.is_whole_group() {
        return Ok(PeripheralBasisResult::WholeGroup);
    }

    let puncture_words: Vec<Word> = (1..=rank + 1).map(|i| Word::generator(i, rank).expect("in range")).collect();
    for (i, c) in puncture_words.iter().enumerate() {
        if let Some(&(v, z)) = graph.reading_cycles(c, None).iter().find(|&&(_, z)| z != 1) {
            return Err(GroupError::Inconsistent(format!(
                "puncture {} has a cycle of length {} at vertex {}",
                i + 1,
                z,
                v
            )));
        }
    }

    let mut removed: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    let mut elements = Vec::new();
    loop {
        // Closed unit puncture cycles in the current graph, as edge sets.
        let mut closed: Vec<(usize, usize, BTreeSet<EdgeKey>)> = Vec::new();
        for (k, c) in puncture_words.iter().enumerate() {
            for (v, _) in graph.reading_cycles(c, Some(&removed)) {
                let mut es = BTreeSet::new();
                let mut cur = v;
                for &l in c.letters() {
                    let next = graph.step(cur, l).expect("cycle is readable");
                    es.insert(if l.inverse { (next, l.gen, cur) } else { (cur, l.gen, next) });
                    cur = next;
                }
                closed.push((k + 1, v, es));
            }
        }
        if closed.is_empty() {
            break;
        }
        // An edge on exactly one closed cycle borders the outer face.
        let mut pick = None;
        'outer: for &e in graph.edges() {
            if removed.contains(&e) {
                continue;
            }
            let holders: Vec<usize> = (0..closed.len()).filter(|&c| closed[c].2.contains(&e)).collect();
            if holders.len() == 1 {
                pick = Some((e, holders[0]));
                break 'outer;
            }
        }
        let Some((edge, which)) = pick else {
            return Err(GroupError::Inconsistent(
                "every remaining puncture cycle is enclosed by others".into(),
            ));
        };
        removed.insert(edge);
        let (index, v, _) = &closed[which];
        let h = graph
            .tree_path(*v, &removed)
            .ok_or_else(|| GroupError::Inconsistent("edge removal disconnected the graph".into()))?;
        elements.push(PeripheralConjugate { conjugator: h, index: *index });
    }

    if elements.len() != graph.rank() {
        return Err(GroupError::Inconsistent(format!(
            "found {} puncture cycles but the subgroup has rank {}",
            elements.len(),
            graph.rank()
        )));
    }
    elements.sort_by(|a, b| a.index.cmp(&b.index).then_with(|| a.conjugator.shortlex_cmp(&b.conjugator)));

    let mut sources = Vec::with_capacity(elements.len());
    for t in &elements {
        let c = Word::generator(t.index, rank)?;
        let hinv = t.conjugator.inverse();
        let src = s.iter().position(|pc| {
            pc.index == t.index && graph.power_in_subgroup(&pc.conjugator, &c, &hinv).is_some()
        });
        match src {
            Some(k) => sources.push(k),
            None => {
                return Err(GroupError::Inconsistent(format!("basis element {t} matches no generator")))
            }
        }
    }

    let tgraph = SubgroupGraph::build(&elements.iter().map(|t| t.element()).collect::<Vec<_>>(), rank)?;
    if tgraph != graph {
        return Err(GroupError::Inconsistent("basis does not generate the subgroup".into()));
    }
    Ok(PeripheralBasisResult::Basis(PeripheralBasis { elements, sources, graph }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str, n: usize) -> Word {
        Word::parse(s, n).unwrap()
    }

    fn pc(g: &str, i: usize, n: usize) -> PeripheralConjugate {
        PeripheralConjugate::new(w(g, n), i).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert!(w("x1 X1", 2).is_empty());
        assert_eq!(w("x1 x2 X2 x1", 2), w("x1 x1", 2));
        assert_eq!(w("x1 x2 X2 X1 x3", 3), w("x3", 3));
        assert_eq!(
            Word::reduce(&[Letter::pos(4)], 3),
            Err(GroupError::IndexOutOfRange { index: 4, rank: 3 })
        );
    }

    #[test]
    fn products_and_conjugates() {
        let a = w("x1 x2 X3", 3);
        assert!(a.multiply(&a.inverse()).unwrap().is_empty());
        assert_eq!(a.conjugate_by(&Word::identity(3)).unwrap(), a);
        assert_eq!(w("x1", 2).conjugate_by(&w("x2", 2)).unwrap().to_string(), "x2 x1 X2");
        assert_eq!(a.multiply(&w("x1", 2)), Err(GroupError::RankMismatch(3, 2)));
    }

    #[test]
    fn generator_words() {
        assert_eq!(Word::generator(1, 3).unwrap().to_string(), "x1");
        assert_eq!(Word::generator(4, 3).unwrap().to_string(), "X3 X2 X1");
        assert_eq!(Word::generator(3, 2).unwrap().to_string(), "X2 X1");
        assert!(Word::generator(5, 3).is_err());
        assert!(Word::generator(0, 3).is_err());
    }

    #[test]
    fn small_graphs() {
        let g = SubgroupGraph::build(&[w("x1", 2)], 2).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 0)]);
        let g = SubgroupGraph::build(&[w("x1", 2), w("x2", 2)], 2).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 0), (0, 2, 0)]);
        assert!(g.is_whole_group());
        let g = SubgroupGraph::build(&[w("x2 x1 X2", 2)], 2).unwrap();
        assert_eq!(g.edges(), &[(0, 2, 1), (1, 1, 1)]);
        let g = SubgroupGraph::build(&[], 3).unwrap();
        assert_eq!(g.num_vertices(), 1);
        assert_eq!(g.rank(), 0);
    }

    #[test]
    fn membership_and_rank() {
        let g = SubgroupGraph::build(&[w("x1", 2)], 2).unwrap();
        assert!(g.contains(&w("x1 x1 x1", 2)));
        assert!(!g.contains(&w("x2", 2)));
        let g = SubgroupGraph::build(&[w("x2 x1 X2", 2), w("x2 x2", 2)], 2).unwrap();
        assert!(g.contains(&w("x2 x1 x1 X2", 2)));
        let g = SubgroupGraph::build(&[w("x2 x1 X2", 2), w("x2", 2)], 2).unwrap();
        assert_eq!(g.rank(), 2);
        assert!(!g.is_whole_group() || g.num_vertices() == 1);
        let g = SubgroupGraph::build(&[w("x1", 2), w("x2 x1 X2", 2)], 2).unwrap();
        assert!(!g.is_whole_group());
        assert_eq!(g.num_vertices(), 2);
    }

    #[test]
    fn cycles() {
        let g = SubgroupGraph::build(&[w("x1", 2)], 2).unwrap();
        assert_eq!(g.peripheral_cycles(1).unwrap(), vec![(0, 1)]);
        assert!(g.peripheral_cycles(2).unwrap().is_empty());
        let g = SubgroupGraph::build(&[w("x1 x2", 2)], 2).unwrap();
        assert_eq!(g.peripheral_cycles(3).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn basis_examples() {
        assert_eq!(
            peripheral_basis(&[pc("1", 1, 2), pc("1", 2, 2)], 2).unwrap(),
            PeripheralBasisResult::WholeGroup
        );
        let r = peripheral_basis(&[pc("1", 1, 2)], 2).unwrap();
        assert_eq!(r.basis().unwrap().elements, vec![pc("1", 1, 2)]);

        let s = [pc("x2", 1, 3), pc("1", 2, 3)];
        let r = peripheral_basis(&s, 3).unwrap();
        let b = r.basis().unwrap();
        assert_eq!(b.graph.rank(), 2);
        let idx: BTreeSet<usize> = b.elements.iter().map(|t| t.index).collect();
        assert_eq!(idx, BTreeSet::from([1, 2]));
        assert_eq!(b.elements, vec![pc("1", 1, 3), pc("1", 2, 3)]);
        assert_eq!(b.sources, vec![0, 1]);

        let r = peripheral_basis(&[], 3).unwrap();
        assert!(r.basis().unwrap().elements.is_empty());
    }

    #[test]
    fn basis_needs_correct_arcs() {
        // T = {x2 x1 X2, x1 x2 X1} generates a proper subgroup of <x1, x2>;
        // the basis must not simply echo the input.
        let s = [pc("x2", 1, 3), pc("x1", 2, 3), pc("1", 1, 3)];
        let r = peripheral_basis(&s, 3).unwrap();
        let b = r.basis().unwrap();
        assert_eq!(b.elements.len(), 2);
        let tg = SubgroupGraph::build(&b.elements.iter().map(|t| t.element()).collect::<Vec<_>>(), 3).unwrap();
        assert_eq!(tg, b.graph);
    }

    #[test]
    fn power_search() {
        let g = SubgroupGraph::build(&[w("x1", 2)], 2).unwrap();
        let id = Word::identity(2);
        assert_eq!(g.power_in_subgroup(&id, &w("x2", 2), &id), Some(0));
        assert_eq!(g.power_in_subgroup(&w("x2", 2), &w("x2", 2), &id), Some(-1));
        assert_eq!(g.power_in_subgroup(&w("x2", 2), &w("x1", 2), &id), None);
    }

    #[test]
    fn parse_and_print() {
        let a = w("x3 X1 x2", 3);
        assert_eq!(a.to_string(), "x3 X1 x2");
        assert_eq!(Word::parse(&a.to_compact_string(), 3).unwrap(), a);
        assert!(Word::parse("y1", 3).is_err());
        assert!(w("1", 2).is_empty());
    }
}
