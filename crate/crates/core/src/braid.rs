//! Braid words, their Artin action on free groups and the braid-space group
//! `F_n ⋊ <t>` in which `t` acts by the braid automorphism.

use std::fmt;

use thiserror::Error;

use crate::freegroup::{peripheral_basis, GroupError, PeripheralBasis, PeripheralBasisResult, PeripheralConjugate, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BraidError {
    #[error("a braid needs at least 2 strands, got {0}")]
    TooFewStrands(usize),
    #[error("generator s{index} out of range for {strands} strands")]
    IndexOutOfRange { index: usize, strands: usize },
    #[error("malformed braid token `{0}`")]
    BadToken(String),
    #[error("image of x{0} is not a conjugate of a generator")]
    NotBraidAutomorphism(usize),
    #[error("strand count mismatch: {0} vs {1}")]
    StrandMismatch(usize, usize),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BraidLetter {
    pub index: usize,
    pub inverse: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BraidWord {
    strands: usize,
    letters: Vec<BraidLetter>,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<BraidLetter>) -> Result<Self, BraidError> {
        if strands < 2 {
            return Err(BraidError::TooFewStrands(strands));
        }
        for l in &letters {
            if l.index == 0 || l.index >= strands {
                return Err(BraidError::IndexOutOfRange { index: l.index, strands });
            }
        }
        Ok(BraidWord { strands, letters })
    }

    /// Builds from `(index, ±1)` pairs.
    pub fn from_signed(strands: usize, pairs: &[(usize, i8)]) -> Result<Self, BraidError> {
        let letters = pairs.iter().map(|&(index, s)| BraidLetter { index, inverse: s < 0 }).collect();
        BraidWord::new(strands, letters)
    }

    /// Parses `s2 s1^-1 s2 s2`. `S1` is accepted for `s1^-1`, and `s1^k`
    /// repeats a letter.
    pub fn parse(strands: usize, text: &str) -> Result<Self, BraidError> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            let bad = || BraidError::BadToken(tok.to_string());
            let (head, power) = match tok.split_once('^') {
                Some((h, p)) => (h, p.parse::<i64>().map_err(|_| bad())?),
                None => (tok, 1),
            };
            let (inverse, digits) = if let Some(d) = head.strip_prefix('s') {
                (false, d)
            } else if let Some(d) = head.strip_prefix('S') {
                (true, d)
            } else {
                return Err(bad());
            };
            let index: usize = digits.parse().map_err(|_| bad())?;
            let inverse = inverse ^ (power < 0);
            for _ in 0..power.unsigned_abs() {
                letters.push(BraidLetter { index, inverse });
            }
        }
        BraidWord::new(strands, letters)
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[BraidLetter] {
        &self.letters
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord {
            strands: self.strands,
            letters: self.letters.iter().rev().map(|l| BraidLetter { index: l.index, inverse: !l.inverse }).collect(),
        }
    }

    pub fn concat(&self, other: &BraidWord) -> Result<BraidWord, BraidError> {
        if self.strands != other.strands {
            return Err(BraidError::StrandMismatch(self.strands, other.strands));
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(BraidWord { strands: self.strands, letters })
    }

    /// `τ = s_(i1) ∘ s_(i2) ∘ … ∘ s_(ik)`, transpositions combined in the
    /// order of the word.
    pub fn permutation(&self) -> Permutation {
        let mut images: Vec<usize> = (1..=self.strands).collect();
        for l in &self.letters {
            // images := images ∘ s
            images.swap(l.index - 1, l.index);
        }
        Permutation { images }
    }

    /// The closure is a knot.
    pub fn is_knot_pattern(&self) -> bool {
        self.permutation().is_full_cycle()
    }

    pub fn artin(&self) -> FreeAutomorphism {
        let n = self.strands;
        let mut phi = FreeAutomorphism::identity(n);
        for l in &self.letters {
            phi = phi.compose(&FreeAutomorphism::generator(n, l.index, l.inverse));
        }
        phi
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| if l.inverse { format!("s{}^-1", l.index) } else { format!("s{}", l.index) })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// A bijection of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (1..=n).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Option<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i == 0 || i > n || seen[i - 1] {
                return None;
            }
            seen[i - 1] = true;
        }
        Some(Permutation { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { images: other.images.iter().map(|&i| self.apply(i)).collect() }
    }

    pub fn is_full_cycle(&self) -> bool {
        let n = self.images.len();
        let mut cur = 1;
        for step in 1..=n {
            cur = self.apply(cur);
            if cur == 1 {
                return step == n;
            }
        }
        false
    }

    /// Smallest `r >= 0` with `τ^r(from) = to`.
    pub fn steps_between(&self, from: usize, to: usize) -> Option<usize> {
        let mut cur = from;
        for r in 0..self.images.len() {
            if cur == to {
                return Some(r);
            }
            cur = self.apply(cur);
        }
        None
    }
}

/// An endomorphism of `F_n` given by the images of the generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreeAutomorphism {
    rank: usize,
    images: Vec<Word>,
}

impl FreeAutomorphism {
    pub fn identity(rank: usize) -> Self {
        FreeAutomorphism { rank, images: (1..=rank).map(|i| Word::generator(i, rank).expect("in range")).collect() }
    }

    /// The action of `σ_i` or `σ_i⁻¹`.
    fn generator(rank: usize, i: usize, inverse: bool) -> Self {
        let mut phi = Self::identity(rank);
        let x = |k: usize| Word::generator(k, rank).expect("in range");
        if inverse {
            phi.images[i - 1] = x(i + 1);
            phi.images[i] = x(i).conjugate_by(&x(i + 1).inverse()).expect("same rank");
        } else {
            phi.images[i - 1] = x(i + 1).conjugate_by(&x(i)).expect("same rank");
            phi.images[i] = x(i);
        }
        phi
    }

    pub fn from_images(images: Vec<Word>) -> Self {
        FreeAutomorphism { rank: images.len(), images }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &Word {
        &self.images[i - 1]
    }

    pub fn apply(&self, w: &Word) -> Word {
        let mut out = Word::identity(self.rank);
        for l in w.letters() {
            let img = &self.images[l.gen - 1];
            out = if l.inverse { out.concat(&img.inverse()) } else { out.concat(img) };
        }
        out
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &FreeAutomorphism) -> FreeAutomorphism {
        FreeAutomorphism { rank: self.rank, images: other.images.iter().map(|w| self.apply(w)).collect() }
    }

    /// `φ(x_i) = A · x_target · A⁻¹` with `A` of minimal length.
    pub fn decompose_image(&self, i: usize) -> Result<(Word, usize), BraidError> {
        self.images[i - 1].as_generator_conjugate().map_err(|_| BraidError::NotBraidAutomorphism(i))
    }
}

/// An element `w · t^r` of the braid-space group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BraidSpaceElement {
    pub w: Word,
    pub r: i64,
}

impl BraidSpaceElement {
    pub fn new(w: Word, r: i64) -> Self {
        BraidSpaceElement { w, r }
    }

    pub fn identity(rank: usize) -> Self {
        BraidSpaceElement { w: Word::identity(rank), r: 0 }
    }

    pub fn t(rank: usize) -> Self {
        BraidSpaceElement { w: Word::identity(rank), r: 1 }
    }

    pub fn is_identity(&self) -> bool {
        self.r == 0 && self.w.is_identity()
    }

    /// `x1.X2@r`, with `1` for the empty word.
    pub fn to_compact_string(&self) -> String {
        format!("{}@{}", self.w.to_compact_string(), self.r)
    }

    pub fn parse(text: &str, rank: usize) -> Result<Self, GroupError> {
        let (w, r) = match text.split_once('@') {
            Some((w, r)) => (w, r.parse::<i64>().map_err(|_| GroupError::BadToken(text.to_string()))?),
            None => (text, 0),
        };
        Ok(BraidSpaceElement { w: Word::parse(w, rank)?, r })
    }
}

impl fmt::Display for BraidSpaceElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.w, self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeridionalClass {
    NormalClosure,
    Free(PeripheralBasis),
}

/// The group `F_n ⋊ <t>` with `t w t⁻¹ = φ(w)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BraidSpace {
    braid: BraidWord,
    phi: FreeAutomorphism,
    phi_inv: FreeAutomorphism,
    perm: Permutation,
}

impl BraidSpace {
    pub fn new(braid: BraidWord) -> Self {
        let phi = braid.artin();
        let phi_inv = braid.inverse().artin();
        let perm = braid.permutation();
        BraidSpace { braid, phi, phi_inv, perm }
    }

    pub fn braid(&self) -> &BraidWord {
        &self.braid
    }

    pub fn rank(&self) -> usize {
        self.braid.strands()
    }

    pub fn phi(&self) -> &FreeAutomorphism {
        &self.phi
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    /// `φ^r(w)`.
    pub fn act(&self, r: i64, w: &Word) -> Word {
        let f = if r < 0 { &self.phi_inv } else { &self.phi };
        let mut out = w.clone();
        for _ in 0..r.unsigned_abs() {
            out = f.apply(&out);
        }
        out
    }

    pub fn multiply(&self, g: &BraidSpaceElement, h: &BraidSpaceElement) -> BraidSpaceElement {
        BraidSpaceElement { w: g.w.concat(&self.act(g.r, &h.w)), r: g.r + h.r }
    }

    pub fn invert(&self, g: &BraidSpaceElement) -> BraidSpaceElement {
        BraidSpaceElement { w: self.act(-g.r, &g.w.inverse()), r: -g.r }
    }

    pub fn conjugate(&self, g: &BraidSpaceElement, x: &BraidSpaceElement) -> BraidSpaceElement {
        self.multiply(&self.multiply(g, x), &self.invert(g))
    }

    /// The meridian `x1`.
    pub fn meridian(&self) -> BraidSpaceElement {
        BraidSpaceElement::new(Word::generator(1, self.rank()).expect("rank >= 2"), 0)
    }

    /// `φ^r(x1) = A · x_i · A⁻¹`, returning `(A, i)`.
    fn meridian_image(&self, r: i64) -> (Word, usize) {
        let img = self.act(r, &Word::generator(1, self.rank()).expect("rank >= 2"));
        img.as_generator_conjugate().expect("braid automorphisms permute generator classes")
    }

    /// Writes `g · x1 · g⁻¹` as `w · x_i · w⁻¹` in `F_n`.
    pub fn rewrite_meridian_conjugate(&self, g: &BraidSpaceElement) -> PeripheralConjugate {
        let (a, i) = self.meridian_image(g.r);
        PeripheralConjugate::new(g.w.concat(&a), i).expect("index within rank")
    }

    /// Inverse of [`BraidSpace::rewrite_meridian_conjugate`] up to the
    /// choice `0 <= r < n`.
    pub fn meridian_conjugator(&self, pc: &PeripheralConjugate) -> Option<BraidSpaceElement> {
        let r = self.perm.steps_between(1, pc.index)? as i64;
        let (a, i) = self.meridian_image(r);
        debug_assert_eq!(i, pc.index);
        Some(BraidSpaceElement::new(pc.conjugator.concat(&a.inverse()), r))
    }

    /// Classifies the subgroup generated by the meridians `g x1 g⁻¹`.
    pub fn classify_meridional(&self, conjugators: &[BraidSpaceElement]) -> Result<MeridionalClass, GroupError> {
        let s: Vec<PeripheralConjugate> = conjugators.iter().map(|g| self.rewrite_meridian_conjugate(g)).collect();
        match peripheral_basis(&s, self.rank())? {
            PeripheralBasisResult::WholeGroup => Ok(MeridionalClass::NormalClosure),
            PeripheralBasisResult::Basis(b) => Ok(MeridionalClass::Free(b)),
        }
    }

    /// Basis conjugators of a free meridional subgroup.
    pub fn basis_conjugators(&self, basis: &PeripheralBasis) -> Vec<BraidSpaceElement> {
        basis
            .elements
            .iter()
            .map(|pc| self.meridian_conjugator(pc).expect("meridian conjugates have indices in the orbit of 1"))
            .collect()
    }

    /// The element commuting with `x1` that, together with `x1`, generates
    /// the peripheral subgroup: `(A⁻¹, n)` where `φ^n(x1) = A x1 A⁻¹`.
    pub fn longitude(&self) -> BraidSpaceElement {
        let n = self.rank() as i64;
        let (a, i) = self.meridian_image(n);
        debug_assert_eq!(i, 1);
        BraidSpaceElement::new(a.inverse(), n)
    }

    /// `x1 x2 … xn`, which together with `t` generates the boundary subgroup
    /// towards the parent.
    pub fn boundary_word(&self) -> Word {
        Word::boundary_product(self.rank())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str, n: usize) -> Word {
        Word::parse(s, n).unwrap()
    }

    #[test]
    fn permutations() {
        let b = BraidWord::parse(2, "s1").unwrap();
        assert_eq!(b.permutation().images(), &[2, 1]);
        let b = BraidWord::parse(3, "s2 s1^-1 s2 s2").unwrap();
        let p = b.permutation();
        assert_eq!((p.apply(1), p.apply(3), p.apply(2)), (3, 2, 1));
        assert!(b.is_knot_pattern());
        assert_eq!(BraidWord::parse(3, "").unwrap().permutation(), Permutation::identity(3));
        assert!(!BraidWord::parse(2, "").unwrap().is_knot_pattern());
        assert!(!BraidWord::parse(2, "s1 s1").unwrap().is_knot_pattern());
    }

    #[test]
    fn parse_forms() {
        let a = BraidWord::parse(3, "s2 s1^-1 s2^2").unwrap();
        let b = BraidWord::parse(3, "s2 S1 s2 s2").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "s2 s1^-1 s2 s2");
        assert!(BraidWord::parse(3, "s3").is_err());
        assert!(BraidWord::parse(3, "t1").is_err());
        assert!(BraidWord::parse(1, "").is_err());
    }

    #[test]
    fn artin_examples() {
        let phi = BraidWord::parse(2, "s1").unwrap().artin();
        assert_eq!(phi.image(1), &w("x1 x2 X1", 2));
        assert_eq!(phi.image(2), &w("x1", 2));
        assert_eq!(BraidWord::parse(3, "").unwrap().artin(), FreeAutomorphism::identity(3));
        assert_eq!(BraidWord::parse(3, "s1 s1^-1").unwrap().artin(), FreeAutomorphism::identity(3));
        assert_eq!(phi.decompose_image(1).unwrap(), (w("x1", 2), 2));
        assert_eq!(phi.decompose_image(2).unwrap(), (Word::identity(2), 1));
        let id = FreeAutomorphism::identity(3);
        assert_eq!(id.decompose_image(2).unwrap(), (Word::identity(3), 2));
    }

    #[test]
    fn braid_space_examples() {
        let bs = BraidSpace::new(BraidWord::parse(2, "s1").unwrap());
        let t = BraidSpaceElement::t(2);
        let tinv = BraidSpaceElement::new(Word::identity(2), -1);
        assert!(bs.multiply(&t, &tinv).is_identity());
        let x1 = BraidSpaceElement::new(w("x1", 2), 0);
        assert_eq!(bs.multiply(&t, &x1), BraidSpaceElement::new(w("x1 x2 X1", 2), 1));
        let x2 = BraidSpaceElement::new(w("x2", 2), 0);
        assert_eq!(bs.multiply(&x1, &x2), BraidSpaceElement::new(w("x1 x2", 2), 0));
    }

    #[test]
    fn meridian_rewrites() {
        let bs = BraidSpace::new(BraidWord::parse(2, "s1").unwrap());
        let id = BraidSpaceElement::identity(2);
        assert_eq!(bs.rewrite_meridian_conjugate(&id), PeripheralConjugate::new(Word::identity(2), 1).unwrap());
        assert_eq!(
            bs.rewrite_meridian_conjugate(&BraidSpaceElement::t(2)),
            PeripheralConjugate::new(w("x1", 2), 2).unwrap()
        );
        assert_eq!(
            bs.rewrite_meridian_conjugate(&BraidSpaceElement::new(w("x2", 2), 0)),
            PeripheralConjugate::new(w("x2", 2), 1).unwrap()
        );
    }

    #[test]
    fn classification_examples() {
        let bs = BraidSpace::new(BraidWord::parse(2, "s1").unwrap());
        let s = [BraidSpaceElement::identity(2), BraidSpaceElement::t(2)];
        assert_eq!(bs.classify_meridional(&s).unwrap(), MeridionalClass::NormalClosure);
        match bs.classify_meridional(&s[..1]).unwrap() {
            MeridionalClass::Free(b) => {
                assert_eq!(b.elements, vec![PeripheralConjugate::new(Word::identity(2), 1).unwrap()])
            }
            other => panic!("unexpected {other:?}"),
        }
        let bs3 = BraidSpace::new(BraidWord::parse(3, "s1 s2").unwrap());
        match bs3.classify_meridional(&[]).unwrap() {
            MeridionalClass::Free(b) => assert!(b.elements.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn longitude_commutes_with_meridian() {
        for (n, text) in [(2, "s1"), (2, "s1 s1 s1"), (3, "s2 s1^-1 s2 s2"), (4, "s1 s2 s3")] {
            let bs = BraidSpace::new(BraidWord::parse(n, text).unwrap());
            let m = bs.meridian();
            let l = bs.longitude();
            assert_eq!(bs.multiply(&m, &l), bs.multiply(&l, &m), "{text}");
            let c = BraidSpaceElement::new(bs.boundary_word(), 0);
            assert_eq!(bs.multiply(&c, &BraidSpaceElement::t(n)), bs.multiply(&BraidSpaceElement::t(n), &c));
        }
    }
}
