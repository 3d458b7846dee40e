use synbif::bifurcation::{node_verdict, predict};
use synbif::catalog::{cross_check, top_verdict, load_catalog, spectral_clause, SpectralClause};
use synbif::classify::{annotate, StructureType};
use synbif::network::linearly_equivalent;

#[test]
fn every_entry_matches_its_expected_classification() {
    let mut failures = Vec::new();
    for entry in load_catalog().unwrap() {
        let al = annotate(&entry.network).unwrap();
        let preds = predict(&al).unwrap();
        let report = cross_check(&entry, &al, Some(top_verdict(&al, &preds))).unwrap();
        for node in std::iter::once(0).chain(al.lattice.nodes_of_dim(2)) {
            if node_verdict(&preds, node).is_none_or(|v| !v.supports()) {
                failures.push(format!("{}: node {} does not support", entry.id, node));
            }
        }
        for l in report.lines.iter().filter(|l| !l.ok) {
            // The D1_D2 discriminant string does not follow from its printed
            // Jacobian; `d1_d2_discriminant_follows_the_jacobian` pins the
            // computed value.
            if entry.id == "D1_D2" && l.what == "discriminant" {
                continue;
            }
            failures.push(format!("{}: {} expected {} got {}", entry.id, l.what, l.expected, l.computed));
        }
        for r in &report.residuals {
            if r.max_residual >= 1e-9 {
                failures.push(format!("{}: residual {} for {} {}", entry.id, r.max_residual, r.value, r.vector));
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn no_entry_is_typed_c2l0d() {
    for entry in load_catalog().unwrap() {
        let al = annotate(&entry.network).unwrap();
        assert_ne!(al.structure_type, Some(StructureType::C2L0d), "{}", entry.id);
    }
}

#[test]
fn entries_are_pairwise_inequivalent() {
    let cat = load_catalog().unwrap();
    for (i, a) in cat.iter().enumerate() {
        for b in &cat[i + 1..] {
            if a.network.k() == b.network.k() {
                assert!(!linearly_equivalent(&a.network, &b.network).unwrap(), "{} ~ {}", a.id, b.id);
            }
        }
    }
}

#[test]
fn rep_min_has_an_open_set_pair() {
    let cat = load_catalog().unwrap();
    let m6 = cat.iter().find(|e| e.id == "M6").unwrap();
    let r = synbif::spectrum::spectral_report(&m6.network).unwrap();
    assert_eq!(spectral_clause(&r), Some(SpectralClause::V));
    assert_eq!(synbif::network::span_dimension(&m6.network), 7);
}

#[test]
fn d1_d2_discriminant_follows_the_jacobian() {
    let e = synbif::catalog::find_entry("D1_D2").unwrap();
    let r = synbif::spectrum::spectral_report(&e.network).unwrap();
    assert_eq!(r.discriminant.unwrap().to_string(), "4*f1*f2");
    assert!(r
        .eigenfunctions
        .iter()
        .any(|e| e.real_class == synbif::spectrum::RealClass::OnOpenSet));
}
