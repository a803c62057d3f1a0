mod common;

use common::*;
use proptest::prelude::*;
use rasir::graph::{canonical_form, enumerate_monos, Graph, Morphism};

fn shuffled(g: Graph) -> impl Strategy<Value = (Graph, Vec<u32>)> {
    let n = g.n();
    Just((0..n as u32).collect::<Vec<u32>>()).prop_shuffle().prop_map(move |p| (g.clone(), p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn certificate_matches_brute_force_iso(g in graph(5, 6), h in graph(5, 6)) {
        prop_assert_eq!(canonical_form(&g) == canonical_form(&h), brute_iso(&g, &h));
    }

    #[test]
    fn certificate_invariant_under_relabeling((g, p) in graph(5, 6).prop_flat_map(shuffled)) {
        let h = relabel(&g, &p);
        prop_assert!(brute_iso(&g, &h));
        prop_assert_eq!(canonical_form(&g), canonical_form(&h));
    }

    #[test]
    fn monos_agree_with_brute_force(p in graph(3, 3), x in graph(5, 6)) {
        let mut got = enumerate_monos(&p, &x).unwrap();
        let mut want = brute_monos(&p, &x);
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn mono_count_invariant_under_iso(
        (p, pp) in graph(3, 3).prop_flat_map(shuffled),
        (x, xp) in graph(5, 6).prop_flat_map(shuffled),
    ) {
        let n = enumerate_monos(&p, &x).unwrap().len();
        prop_assert_eq!(enumerate_monos(&relabel(&p, &pp), &x).unwrap().len(), n);
        prop_assert_eq!(enumerate_monos(&p, &relabel(&x, &xp)).unwrap().len(), n);
    }

    #[test]
    fn empty_pattern_has_one_match(x in graph(5, 6)) {
        let e = Graph::empty(&sig());
        let ms = enumerate_monos(&e, &x).unwrap();
        prop_assert_eq!(ms, vec![Morphism::empty()]);
    }

    #[test]
    fn monos_compose_to_monos(a in graph(2, 2), b in graph(4, 4), c in graph(5, 7)) {
        for f in enumerate_monos(&a, &b).unwrap() {
            for g in enumerate_monos(&b, &c).unwrap() {
                prop_assert!(f.then(&g).is_mono(&a, &c));
            }
        }
    }
}

#[test]
fn triangle_automorphisms() {
    let s = sig();
    let t = Graph::from_parts(&s, &["a", "a", "a"], &[("u", 0, 1), ("u", 1, 2), ("u", 0, 2)]);
    assert_eq!(enumerate_monos(&t, &t).unwrap().len(), 6);
    let d = Graph::from_parts(&s, &["a", "a", "a"], &[("d", 0, 1), ("d", 1, 2), ("d", 2, 0)]);
    assert_eq!(enumerate_monos(&d, &d).unwrap().len(), 3);
}
