use std::collections::BTreeSet;

use proptest::prelude::*;
use synbif::bifurcation::{predict_with, PredictOptions};
use synbif::classify::{annotate_with, entry_at, subspace_role, Role};
use synbif::network::Network;
use synbif::numerics::{continue_equilibria, synthesize, ContinuationOptions};
use synbif::par::Exec;
use synbif::spectrum::{jacobian_numeric, RealClass};
use synbif::synchrony::Partition;

fn network(max_cells: usize, max_types: usize) -> impl Strategy<Value = Network> {
    (1..=max_cells, 1..=max_types).prop_flat_map(|(n, k)| {
        proptest::collection::vec(proptest::collection::vec(0..n, n), k)
            .prop_map(move |inputs| Network::from_zero_indexed("prop", n, inputs).unwrap())
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synchrony_subspaces_are_flow_invariant(
        net in network(5, 3),
        f in proptest::collection::vec(-3.0f64..3.0, 4),
        y in proptest::collection::vec(-1.0f64..1.0, 5),
    ) {
        let al = annotate_with(&net, Exec::Sequential).unwrap();
        let j = jacobian_numeric(&net, &f[..=net.k()]);
        for node in &al.lattice.nodes {
            let p = &node.partition;
            let x: Vec<f64> = (0..net.n_cells()).map(|i| y[p.class_of(i)]).collect();
            let jx = &j * nalgebra::DVector::from_vec(x);
            for a in 0..net.n_cells() {
                for b in 0..net.n_cells() {
                    if p.class_of(a) == p.class_of(b) {
                        prop_assert!((jx[a] - jx[b]).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn annotations_are_consistent_with_the_lattice(net in network(4, 3)) {
        let al = annotate_with(&net, Exec::Sequential).unwrap();
        let lat = &al.lattice;
        let bottom = &al.annotations[lat.bottom].eigenfunctions;
        prop_assert_eq!(bottom.len(), 1);
        prop_assert!(bottom[0].kind.is_valency());
        for (i, report) in al.annotations.iter().enumerate() {
            let total: usize = report.eigenfunctions.iter().map(|e| e.alg_mult).sum();
            prop_assert_eq!(total, lat.nodes[i].dim());
            for mu in &report.eigenfunctions {
                if mu.real_class == RealClass::Never {
                    continue;
                }
                if subspace_role(&al, i, mu).role == Role::Maximal {
                    for d in lat.strictly_below(i) {
                        prop_assert!(entry_at(&al, d, &mu.kind).is_none());
                    }
                }
            }
        }
    }

    #[test]
    fn relabelling_cells_relabels_the_lattice(
        (net, perm) in network(5, 2).prop_flat_map(|net| {
            let n = net.n_cells();
            (Just(net), permutation(n))
        })
    ) {
        let al = annotate_with(&net, Exec::Sequential).unwrap();
        let moved = annotate_with(&net.permuted(&perm), Exec::Sequential).unwrap();
        let relabel = |p: &Partition| {
            let mut labels = vec![0; p.len()];
            for (i, &new_i) in perm.iter().enumerate() {
                labels[new_i] = p.class_of(i);
            }
            Partition::new(&labels)
        };
        let expected: BTreeSet<Partition> = al.lattice.nodes.iter().map(|s| relabel(&s.partition)).collect();
        let got: BTreeSet<Partition> = moved.lattice.nodes.iter().map(|s| s.partition.clone()).collect();
        prop_assert_eq!(expected, got);
        for (i, node) in al.lattice.nodes.iter().enumerate() {
            let j = moved.lattice.find(&relabel(&node.partition)).unwrap();
            prop_assert_eq!(&al.annotations[i].eigenfunctions, &moved.annotations[j].eigenfunctions);
        }
    }

    #[test]
    fn sequential_and_parallel_agree(net in network(4, 2), seed in 0u64..1000) {
        let seq = annotate_with(&net, Exec::Sequential).unwrap();
        let par = annotate_with(&net, Exec::Parallel).unwrap();
        prop_assert_eq!(&seq, &par);
        let opts = |exec| PredictOptions { seed, exec, ..PredictOptions::default() };
        let a = predict_with(&seq, &opts(Exec::Sequential));
        let b = predict_with(&par, &opts(Exec::Parallel));
        prop_assert_eq!(a.is_ok(), b.is_ok());
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn continuation_is_scheduling_independent(net in network(3, 2), seed in 0u64..1000) {
        let al = annotate_with(&net, Exec::Sequential).unwrap();
        let Some(mu) = al
            .top_report()
            .eigenfunctions
            .iter()
            .find(|e| e.real_class == RealClass::Always)
        else {
            return Ok(());
        };
        let Ok(profile) = synthesize(&net, mu, seed) else {
            return Ok(());
        };
        let run = |exec| {
            let opts = ContinuationOptions { grid: 9, starts: 40, exec, ..ContinuationOptions::default() };
            continue_equilibria(&net, &al.lattice, &profile, &opts).unwrap()
        };
        let a = run(Exec::Sequential);
        let b = run(Exec::Parallel);
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
