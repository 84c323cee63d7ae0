mod common;

use common::{random_torus_word, random_tree, random_word, rng, torus_abelian, torus_equal};
use meridian::freegroup::Word;
use meridian::graph_of_groups::{
    cs_classify, meets_boundary, ComposingClass, ComposingElement, Element, TorusElement, TreeOfGroups, VertexGroup,
};
use proptest::prelude::*;
use rand::Rng;

const TORUS: [(i64, i64); 5] = [(3, 2), (5, 2), (5, 3), (7, 4), (7, 3)];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn boundary_maps_are_homomorphisms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let gog = TreeOfGroups::build(&random_tree(&mut r, 4, 3, 3)).unwrap();
        for e in gog.edges() {
            let (pa, ch) = gog.endpoints(e).unwrap();
            // Longitude powers in braid spaces grow exponentially under the Artin
            // action, so only one factor carries one.
            let (a, b) = ((r.gen_range(-2..=2), r.gen_range(-1..=1)), (r.gen_range(-2..=2), 0));
            for (map, v) in [(0, pa), (1, ch)] {
                let img = |z1, z2| if map == 0 { gog.alpha_map(e, z1, z2) } else { gog.omega_map(e, z1, z2) };
                let (x, y) = (img(a.0, a.1).unwrap(), img(b.0, b.1).unwrap());
                let sum = img(a.0 + b.0, a.1 + b.1).unwrap();
                prop_assert_eq!(gog.multiply(v, &x, &y).unwrap(), sum);
                // The images of m and l commute.
                let (m, l) = (img(1, 0).unwrap(), img(0, 1).unwrap());
                prop_assert_eq!(gog.multiply(v, &m, &l).unwrap(), gog.multiply(v, &l, &m).unwrap());
                if (a.0, a.1) != (0, 0) {
                    prop_assert!(!gog.is_identity(v, &x).unwrap());
                }
            }
        }
    }

    #[test]
    fn composing_center(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=4);
        let t = ComposingElement::new(Word::identity(n), 1);
        let w = ComposingElement::new(random_word(&mut r, n, 6), 0);
        prop_assert_eq!(t.multiply(&w), w.multiply(&t));
    }

    #[test]
    fn torus_normal_form_matches_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = TORUS[r.gen_range(0..TORUS.len())];
        let (a, b) = (random_torus_word(&mut r, 8), random_torus_word(&mut r, 8));
        let (na, nb) = (TorusElement::normal_form(p, q, &a), TorusElement::normal_form(p, q, &b));
        prop_assert_eq!(na == nb, torus_equal(p, q, &a, &b));
        prop_assert_eq!(na.abelianization(), torus_abelian(p, q, &a));
        let ab: Vec<_> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(na.multiply(&nb), TorusElement::normal_form(p, q, &ab));
        prop_assert_eq!(TorusElement::normal_form(p, q, &na.syllables).multiply(&TorusElement::central(p, q, na.center)), na.clone());
        prop_assert!(na.multiply(&na.invert()).is_identity());
        // Words that differ by a relator are equal.
        let mut c = a.clone();
        c.insert(r.gen_range(0..=a.len()), (meridian::graph_of_groups::TorusGen::U, p));
        c.push((meridian::graph_of_groups::TorusGen::V, -q));
        prop_assert_eq!(TorusElement::normal_form(p, q, &c), na);
    }

    #[test]
    fn torus_peripheral_subgroup(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = TORUS[r.gen_range(0..TORUS.len())];
        let m = TorusElement::meridian(p, q);
        let l = TorusElement::longitude(p, q);
        prop_assert_eq!(m.abelianization(), 1);
        prop_assert_eq!(l.abelianization(), 0);
        prop_assert_eq!(m.multiply(&l), l.multiply(&m));
        let (z1, z2) = (r.gen_range(-4..=4), r.gen_range(-3..=3));
        let x = TorusElement::peripheral(p, q, z1, z2);
        let (a, k) = x.peripheral_coordinates().unwrap();
        prop_assert_eq!(m.pow(a).multiply(&TorusElement::central(p, q, k)), x);
    }

    #[test]
    fn composing_classification_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=5);
        let k = r.gen_range(0..=4);
        let s: Vec<(ComposingElement, usize)> = (0..k)
            .map(|_| (ComposingElement::new(random_word(&mut r, n, 6), r.gen_range(-2..=2)), r.gen_range(1..=n)))
            .collect();
        match cs_classify(&s, n).unwrap() {
            ComposingClass::WholeGroup => prop_assert!(k >= n),
            ComposingClass::Basis { basis, full_at_identity } => {
                prop_assert!(basis.elements.len() <= k);
                prop_assert!(basis.graph.peripheral_cycles(n + 1).unwrap().is_empty());
                for (i, &full) in full_at_identity.iter().enumerate() {
                    prop_assert_eq!(full, meets_boundary(&basis, &Word::identity(n), i + 1));
                }
            }
        }
    }
}

#[test]
fn boundary_towards_parent_is_rejected() {
    let s = vec![(ComposingElement::identity(2), 3)];
    assert!(cs_classify(&s, 2).is_err());
}

#[test]
fn leaf_groups_in_trees() {
    let gog = TreeOfGroups::build(&meridian::knot_tree::KnotTree::parse("sum(torus(3,2), opaque(K, 3))").unwrap()).unwrap();
    assert!(matches!(gog.group(2), VertexGroup::KnotLeaf(_)));
    let m = gog.omega_map(2, 1, 2).unwrap();
    assert_eq!(m, Element::Peripheral { m: 1, l: 2 });
    assert!(gog.presentation().contains("G(K)"));
}
