#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use meridian::braid::{BraidLetter, BraidWord};
use meridian::freegroup::{Letter, Word};
use meridian::graph_of_groups::TorusGen;
use meridian::knot_tree::KnotTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_word(rng: &mut impl Rng, rank: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    let letters: Vec<Letter> = (0..len).map(|_| Letter::new(rng.gen_range(1..=rank), rng.gen_bool(0.5))).collect();
    Word::reduce(&letters, rank).unwrap()
}

pub fn random_braid(rng: &mut impl Rng, strands: usize, max_len: usize) -> BraidWord {
    let len = rng.gen_range(0..=max_len);
    let letters =
        (0..len).map(|_| BraidLetter { index: rng.gen_range(1..strands), inverse: rng.gen_bool(0.5) }).collect();
    BraidWord::new(strands, letters).unwrap()
}

/// A braid whose permutation is an `n`-cycle.
pub fn random_knot_pattern(rng: &mut impl Rng, strands: usize, max_len: usize) -> BraidWord {
    for _ in 0..64 {
        let b = random_braid(rng, strands, max_len);
        if b.is_knot_pattern() {
            return b;
        }
    }
    let cycle: Vec<(usize, i8)> = (1..strands).map(|i| (i, if rng.gen_bool(0.5) { 1 } else { -1 })).collect();
    BraidWord::from_signed(strands, &cycle).unwrap()
}

pub fn random_leaf(rng: &mut impl Rng) -> KnotTree {
    const TORUS: [(u64, u64); 6] = [(3, 2), (5, 2), (5, 3), (7, 2), (4, 3), (7, 5)];
    if rng.gen_bool(0.8) {
        let (p, q) = TORUS[rng.gen_range(0..TORUS.len())];
        KnotTree::torus(p, q)
    } else {
        KnotTree::opaque("K", rng.gen_range(2..=4), true)
    }
}

pub fn random_tree(rng: &mut impl Rng, depth: usize, fanout: usize, strands: usize) -> KnotTree {
    if depth <= 1 || rng.gen_bool(0.3) {
        return random_leaf(rng);
    }
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(2..=strands);
        KnotTree::satellite(random_knot_pattern(rng, n, 6), random_tree(rng, depth - 1, fanout, strands))
    } else {
        let k = rng.gen_range(2..=fanout);
        KnotTree::sum((0..k).map(|_| random_tree(rng, depth - 1, fanout, strands)).collect())
    }
}

/// All reduced products of at most `max_len` factors from `gens ∪ gens⁻¹`.
pub fn products_up_to(gens: &[Word], rank: usize, max_len: usize) -> HashSet<Word> {
    let mut factors: Vec<Word> = gens.to_vec();
    factors.extend(gens.iter().map(|g| g.inverse()));
    let mut seen: HashSet<Word> = HashSet::from([Word::identity(rank)]);
    let mut frontier = vec![Word::identity(rank)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for f in &factors {
                let p = w.concat(f);
                if seen.insert(p.clone()) {
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Image in `Z_p * Z_q` as alternating syllables with exponents reduced.
pub fn free_product_image(p: i64, q: i64, raw: &[(TorusGen, i64)]) -> Vec<(TorusGen, i64)> {
    let mut out: Vec<(TorusGen, i64)> = Vec::new();
    for &(g, e) in raw {
        let ord = if g == TorusGen::U { p } else { q };
        let mut e = e;
        if let Some(&(last, le)) = out.last() {
            if last == g {
                out.pop();
                e += le;
            }
        }
        let r = e.rem_euclid(ord);
        if r != 0 {
            out.push((g, r));
        }
    }
    out
}

/// Abelianization `u ↦ q`, `v ↦ p`.
pub fn torus_abelian(p: i64, q: i64, raw: &[(TorusGen, i64)]) -> i64 {
    raw.iter().map(|&(g, e)| if g == TorusGen::U { e * q } else { e * p }).sum()
}

/// Two words in `<u, v | u^p = v^q>` agree iff their images in the free
/// product and their abelianizations agree, since the kernel of the
/// projection is the infinite cyclic center.
pub fn torus_equal(p: i64, q: i64, a: &[(TorusGen, i64)], b: &[(TorusGen, i64)]) -> bool {
    free_product_image(p, q, a) == free_product_image(p, q, b) && torus_abelian(p, q, a) == torus_abelian(p, q, b)
}

pub fn random_torus_word(rng: &mut impl Rng, max_len: usize) -> Vec<(TorusGen, i64)> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| (if rng.gen_bool(0.5) { TorusGen::U } else { TorusGen::V }, rng.gen_range(-6..=6)))
        .collect()
}

/// Letter-level Artin action of `σ_i: x_i ↦ x_i x_{i+1} x_i⁻¹, x_{i+1} ↦ x_i`,
/// with `artin(β1 β2)(w) = artin(β1)(artin(β2)(w))`.
pub fn artin_oracle(braid: &BraidWord, w: &Word) -> Word {
    let n = braid.strands();
    let mut cur = w.clone();
    for l in braid.letters().iter().rev() {
        let i = l.index;
        let (xi, xj) = (Word::generator(i, n).unwrap(), Word::generator(i + 1, n).unwrap());
        let (img_i, img_j) = if l.inverse {
            (xj.clone(), xj.inverse().concat(&xi).concat(&xj))
        } else {
            (xi.concat(&xj).concat(&xi.inverse()), xi.clone())
        };
        let mut out = Word::identity(n);
        for le in cur.letters() {
            let img = match le.gen {
                g if g == i => img_i.clone(),
                g if g == i + 1 => img_j.clone(),
                g => Word::generator(g, n).unwrap(),
            };
            out = out.concat(&if le.inverse { img.inverse() } else { img });
        }
        cur = out;
    }
    cur
}

pub fn index_set<I: IntoIterator<Item = usize>>(it: I) -> BTreeSet<usize> {
    it.into_iter().collect()
}
