mod common;

use common::{artin_oracle, random_braid, random_knot_pattern, random_word, rng};
use meridian::braid::{BraidSpace, BraidSpaceElement, FreeAutomorphism, MeridionalClass};
use meridian::freegroup::Word;
use proptest::prelude::*;
use rand::Rng;

fn images_equal(a: &FreeAutomorphism, b: &FreeAutomorphism) -> bool {
    a.images() == b.images()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn artin_matches_letter_action(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let b = random_braid(&mut r, n, 10);
        let w = random_word(&mut r, n, 8);
        prop_assert_eq!(b.artin().apply(&w), artin_oracle(&b, &w));
    }

    #[test]
    fn artin_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let (b1, b2) = (random_braid(&mut r, n, 10), random_braid(&mut r, n, 10));
        let product = Word::boundary_product(n);
        prop_assert_eq!(b1.artin().apply(&product), product.clone());
        let joined = b1.concat(&b2).unwrap().artin();
        prop_assert!(images_equal(&joined, &b1.artin().compose(&b2.artin())));
        let id = FreeAutomorphism::identity(n);
        prop_assert!(images_equal(&b1.artin().compose(&b1.inverse().artin()), &id));
        prop_assert!(images_equal(&b1.inverse().artin().compose(&b1.artin()), &id));
    }

    #[test]
    fn decompose_image_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let b = random_braid(&mut r, n, 10);
        let phi = b.artin();
        let tau = b.permutation();
        let mut product = Word::identity(n);
        for i in 1..=n {
            let (a, j) = phi.decompose_image(i).unwrap();
            prop_assert_eq!(j, tau.apply(i));
            let x = Word::generator(j, n).unwrap();
            prop_assert_eq!(x.conjugate_by(&a).unwrap(), phi.image(i).clone());
            product = product.concat(&x.conjugate_by(&a).unwrap());
        }
        prop_assert_eq!(product, Word::boundary_product(n));
    }

    #[test]
    fn braid_space_group_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=4);
        let bs = BraidSpace::new(random_knot_pattern(&mut r, n, 6));
        let elem = |r: &mut rand_chacha::ChaCha8Rng| BraidSpaceElement::new(random_word(r, n, 5), r.gen_range(-3..=3));
        let (a, b, c) = (elem(&mut r), elem(&mut r), elem(&mut r));
        prop_assert_eq!(bs.multiply(&bs.multiply(&a, &b), &c), bs.multiply(&a, &bs.multiply(&b, &c)));
        prop_assert!(bs.multiply(&a, &bs.invert(&a)).is_identity());
        prop_assert!(bs.multiply(&bs.invert(&a), &a).is_identity());
        // t commutes with x1⋯xn.
        let t = BraidSpaceElement::t(n);
        let boundary = BraidSpaceElement::new(bs.boundary_word(), 0);
        prop_assert_eq!(bs.conjugate(&t, &boundary), boundary);
        // The longitude commutes with the meridian.
        let l = bs.longitude();
        prop_assert_eq!(bs.conjugate(&l, &bs.meridian()), bs.meridian());
    }

    #[test]
    fn meridional_classification_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=4);
        let bs = BraidSpace::new(random_braid(&mut r, n, 6));
        let k = r.gen_range(0..=4);
        let gs: Vec<BraidSpaceElement> =
            (0..k).map(|_| BraidSpaceElement::new(random_word(&mut r, n, 4), r.gen_range(-2..=2))).collect();
        match bs.classify_meridional(&gs).unwrap() {
            MeridionalClass::NormalClosure => prop_assert!(k >= n),
            MeridionalClass::Free(basis) => {
                prop_assert!(basis.elements.len() <= k);
                for (g, h) in bs.basis_conjugators(&basis).iter().zip(&basis.elements) {
                    prop_assert_eq!(bs.rewrite_meridian_conjugate(g).element(), h.element());
                }
            }
        }
    }
}
