mod common;

use common::{graph_of, oracle_partition, Gen};
use proptest::prelude::*;
use quadgit_core::atomic::iso_equal;
use quadgit_core::delta::{apply, diff, validate, DatasetDelta, Delta, DeltaError, GraphChangeKind};
use quadgit_core::rdf::{Graph, Triple};

/// Applies `d`, treating an empty delta as the identity.
fn step(g: &Graph, d: &Delta) -> Graph {
    if d.is_empty() {
        g.clone()
    } else {
        apply(g, d).unwrap()
    }
}

fn atoms(gen: &mut Gen, n: usize) -> Vec<Vec<Triple>> {
    (0..n).map(|_| gen.any_atom(3)).collect()
}

/// Two graphs that share some atoms, each written with its own labels.
fn pair(seed: u64, shared: usize, only_a: usize, only_b: usize) -> (Graph, Graph) {
    let mut gen = Gen::new(seed);
    let common = atoms(&mut gen, shared);
    let mut a: Vec<_> = common.iter().map(|x| gen.relabel(x)).collect();
    let mut b: Vec<_> = common.iter().map(|x| gen.relabel(x)).collect();
    a.extend(atoms(&mut gen, only_a));
    b.extend(atoms(&mut gen, only_b));
    (graph_of(&a), graph_of(&b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_diff_reaches_target(seed in any::<u64>(), s in 0usize..12, x in 0usize..12, y in 0usize..12) {
        let (a, b) = pair(seed, s, x, y);
        let d = diff(&a, &b).unwrap();
        let got = step(&a, &d);
        prop_assert!(iso_equal(&got, &b).unwrap());
        prop_assert_eq!(oracle_partition(&got), oracle_partition(&b));
    }

    #[test]
    fn inverse_undoes(seed in any::<u64>(), s in 0usize..12, x in 0usize..12, y in 0usize..12) {
        let (a, b) = pair(seed, s, x, y);
        let d = diff(&a, &b).unwrap();
        let back = step(&step(&a, &d), &d.invert());
        prop_assert!(iso_equal(&back, &a).unwrap());
    }

    #[test]
    fn additions_and_removals_are_disjoint(seed in any::<u64>(), s in 0usize..12, x in 0usize..12, y in 0usize..12) {
        let (a, b) = pair(seed, s, x, y);
        let d = diff(&a, &b).unwrap();
        prop_assert!(d.additions.is_disjoint(&d.removals));
        let removed: std::collections::BTreeSet<String> =
            d.removals.iter().map(|c| c.key().to_owned()).collect();
        prop_assert!(removed.iter().all(|k| oracle_partition(&a).contains(k)));
    }

    #[test]
    fn text_form_round_trips(seed in any::<u64>(), x in 0usize..8, y in 0usize..8) {
        let (a, b) = pair(seed, 2, x, y);
        let mut dd = DatasetDelta::new();
        dd.insert("http://ex.org/g1", GraphChangeKind::Modified, diff(&a, &b).unwrap());
        dd.insert("http://ex.org/g2", GraphChangeKind::Added, diff(&Graph::new(), &b).unwrap());
        let parsed = DatasetDelta::from_text(&dd.to_text()).unwrap();
        prop_assert_eq!(parsed, dd);
    }
}

#[test]
fn self_diff_is_empty() {
    let (a, _) = pair(3, 10, 5, 0);
    let relabelled = {
        let mut gen = Gen::new(4);
        graph_of(&[gen.relabel(&a.iter().cloned().collect::<Vec<_>>())])
    };
    assert!(diff(&a, &relabelled).unwrap().is_empty());
    assert_eq!(validate(&a, &diff(&a, &a).unwrap()).unwrap_err(), DeltaError::EmptyChangeset);
}
