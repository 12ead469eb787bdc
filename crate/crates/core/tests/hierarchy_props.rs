mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;

use common::*;
use neurolabel::hierarchy::{nearest_class, normalize_label};
use neurolabel::{entails, levenshtein, ClassHierarchy, ConceptExpression, HierarchyBuilder};

fn names_of(h: &ClassHierarchy, name: &str) -> BTreeSet<String> {
    let id = h.id(name).unwrap();
    h.ancestors(id)
        .iter()
        .map(|&a| h.name(a).to_owned())
        .collect()
}

#[test]
fn ancestors_match_dfs_on_random_dag() {
    for seed in 0..5 {
        let edges = random_dag(200, 3, seed);
        let h = build(200, &edges);
        for i in 0..200 {
            let name = format!("c{i}");
            assert_eq!(
                names_of(&h, &name),
                dfs_ancestors(&edges, &name),
                "seed {seed} {name}"
            );
        }
    }
}

#[test]
fn bitset_and_sorted_index_agree() {
    let edges = random_dag(300, 3, 9);
    let with_bits = build(300, &edges);
    let mut b = HierarchyBuilder::new().bitset_budget(0);
    for i in 0..300 {
        b.add_class(&format!("c{i}"));
    }
    for (c, p) in &edges {
        b.add_edge(c, p);
    }
    let sorted = b.build().unwrap();
    assert!(with_bits.has_bitset());
    assert!(!sorted.has_bitset());
    for a in 0..300 {
        for d in (0..300).step_by(7) {
            let (an, dn) = (format!("c{a}"), format!("c{d}"));
            let x = with_bits.is_ancestor(with_bits.id(&an).unwrap(), with_bits.id(&dn).unwrap());
            let y = sorted.is_ancestor(sorted.id(&an).unwrap(), sorted.id(&dn).unwrap());
            assert_eq!(x, y, "{an} over {dn}");
        }
    }
}

#[test]
fn edge_order_does_not_change_ancestor_sets() {
    let edges = random_dag(120, 3, 4);
    let h1 = build(120, &edges);
    let mut shuffled = edges.clone();
    shuffled.shuffle(&mut rng(77));
    let mut b = HierarchyBuilder::new();
    for (c, p) in &shuffled {
        b.add_edge(c, p);
    }
    let h2 = b.build().unwrap();
    for i in 0..120 {
        let name = format!("c{i}");
        if h2.id(&name).is_some() {
            assert_eq!(names_of(&h1, &name), names_of(&h2, &name));
        }
    }
}

#[test]
fn entailment_matches_descendant_enumeration() {
    let edges = random_dag(50, 2, 12);
    let h = build(50, &edges);
    let pairs = random_annotations(50, 80, 3, 13);
    let store = store(&h, &pairs);
    for c in 0..50 {
        let name = format!("c{c}");
        let below = dfs_descendants(&edges, &name);
        let e = ConceptExpression::parse(&h, &name).unwrap();
        for inst in store.instances() {
            let annotated: BTreeSet<String> = store
                .classes_of(inst)
                .unwrap()
                .iter()
                .map(|&k| h.name(k).to_owned())
                .collect();
            let expected = !annotated.is_disjoint(&below);
            assert_eq!(
                entails(&h, &store, &e, inst).unwrap(),
                expected,
                "{name} on {inst}"
            );
        }
    }
}

#[test]
fn cycle_is_rejected_with_witness() {
    let mut b = HierarchyBuilder::new();
    b.add_edge("a", "b");
    b.add_edge("b", "c");
    b.add_edge("c", "a");
    b.add_edge("d", "a");
    match b.build() {
        Err(neurolabel::Error::Cycle(path)) => {
            assert!(path.len() >= 3);
            for n in ["a", "b", "c"] {
                assert!(path.iter().any(|p| p == n), "{path:?}");
            }
        }
        other => panic!("expected a cycle, got {other:?}"),
    }
}

fn lev_oracle(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = lev_oracle(ra, rb) + usize::from(x != y);
            sub.min(lev_oracle(ra, b) + 1).min(lev_oracle(a, rb) + 1)
        }
    }
}

proptest! {
    #[test]
    fn levenshtein_is_a_metric(a in "[abc]{0,7}", b in "[abc]{0,7}", c in "[abc]{0,7}") {
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        if a != b {
            prop_assert!(levenshtein(&a, &b) > 0);
        }
    }

    #[test]
    fn levenshtein_matches_recursive_definition(a in "[a-cé]{0,6}", b in "[a-cé]{0,6}") {
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(levenshtein(&a, &b), lev_oracle(&ca, &cb));
    }

    #[test]
    fn normalization_is_idempotent(s in "[ A-Za-z_\t]{0,20}") {
        let once = normalize_label(&s);
        prop_assert_eq!(normalize_label(&once), once.clone());
        prop_assert!(!once.chars().any(char::is_whitespace));
    }

    #[test]
    fn nearest_class_is_closest(label in "[a-e]{1,6}", seed in 0u64..50) {
        let mut b = HierarchyBuilder::new();
        let mut names = Vec::new();
        let mut r = rng(seed);
        for _ in 0..20 {
            let len = rand::Rng::random_range(&mut r, 1..6);
            let n: String = (0..len).map(|_| (b'a' + rand::Rng::random_range(&mut r, 0..5u8)) as char).collect();
            b.add_class(&n);
            names.push(n);
        }
        let h = b.build().unwrap();
        let best = names.iter().map(|n| levenshtein(&label, n)).min().unwrap();
        match nearest_class(&h, &label, 10) {
            Some(id) => {
                let got = h.name(id);
                prop_assert_eq!(levenshtein(&label, got), best);
                let ties: Vec<&String> = names.iter().filter(|n| levenshtein(&label, n) == best).collect();
                prop_assert_eq!(got, ties.iter().min().unwrap().as_str());
            }
            None => prop_assert!(false, "no match within 10"),
        }
    }

    #[test]
    fn entailment_is_monotone_up_the_hierarchy(seed in 0u64..200) {
        let edges = random_dag(40, 2, seed);
        let h = build(40, &edges);
        let pairs = random_annotations(40, 20, 3, seed + 1);
        let s = store(&h, &pairs);
        for (c, p) in &edges {
            let ec = ConceptExpression::parse(&h, c).unwrap();
            let ep = ConceptExpression::parse(&h, p).unwrap();
            for inst in s.instances() {
                if entails(&h, &s, &ec, inst).unwrap() {
                    prop_assert!(entails(&h, &s, &ep, inst).unwrap());
                }
            }
        }
    }

    #[test]
    fn conjunction_is_intersection(seed in 0u64..200, a in 0usize..40, b in 0usize..40) {
        let edges = random_dag(40, 2, seed);
        let h = build(40, &edges);
        let pairs = random_annotations(40, 20, 3, seed + 3);
        let s = store(&h, &pairs);
        let (an, bn) = (format!("c{a}"), format!("c{b}"));
        let ea = ConceptExpression::parse(&h, &an).unwrap();
        let eb = ConceptExpression::parse(&h, &bn).unwrap();
        let eab = ConceptExpression::parse(&h, &format!("{an} ⊓ {bn}")).unwrap();
        for inst in s.instances() {
            let both = entails(&h, &s, &ea, inst).unwrap() && entails(&h, &s, &eb, inst).unwrap();
            prop_assert_eq!(entails(&h, &s, &eab, inst).unwrap(), both);
        }
    }
}
