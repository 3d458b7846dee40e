//! End-to-end acceptance checks over the bundled catalog. Each check prints
//! one `criterion N: PASS|FAIL` line; the process fails if any check fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synbif::bifurcation::{determinacy, node_verdict, predict, Determinacy};
use synbif::catalog::{canonical, eigen_residuals, load_catalog, spectral_clause, top_verdict, CatalogEntry, TopVerdict};
use synbif::classify::{annotate, subspace_role, Role, StructureType};
use synbif::network::Network;
use synbif::numerics::{verify_predictions, VerifyOptions};
use synbif::reduction::{defective_condition, quadratic_branch_system, reduced_coefficients, sample_profile};
use synbif::spectrum::{spectral_report, RealClass};
use synbif::synchrony::{brute_force_balanced, enumerate_synchrony};

const RESIDUAL_TOL: f64 = 1e-9;
const RESIDUAL_SAMPLES: usize = 100;
const DETERMINACY_SAMPLES: usize = 50;
const DEFECTIVE_PROFILES: usize = 20;
const SEMISIMPLE_PROFILES: usize = 20;
const RANDOM_NETWORKS: usize = 50;

type Outcome = Result<String, String>;

fn entry<'a>(cat: &'a [CatalogEntry], id: &str) -> &'a CatalogEntry {
    cat.iter().find(|e| e.id == id).unwrap_or_else(|| panic!("missing catalog entry {id}"))
}

fn collect(failures: Vec<String>, ok: String) -> Outcome {
    if failures.is_empty() {
        Ok(ok)
    } else {
        Err(failures.join("; "))
    }
}

fn two_d_counts(cat: &[CatalogEntry]) -> Outcome {
    let mut failures = Vec::new();
    for e in cat {
        let lat = enumerate_synchrony(&e.network).map_err(|err| err.to_string())?;
        let found = lat.nodes_of_dim(2).len();
        if found != e.expected.two_d_count {
            failures.push(format!("{}: {} != {}", e.id, found, e.expected.two_d_count));
        }
    }
    collect(failures, format!("{} entries", cat.len()))
}

fn random_network(rng: &mut ChaCha8Rng) -> Network {
    let n = rng.random_range(1..=6usize);
    let k = rng.random_range(1..=3usize);
    let inputs = (0..k).map(|_| (0..n).map(|_| rng.random_range(0..n)).collect()).collect();
    Network::from_zero_indexed("random", n, inputs).unwrap()
}

fn oracle_equivalence(cat: &[CatalogEntry]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut nets: Vec<Network> = cat.iter().map(|e| e.network.clone()).collect();
    nets.extend((0..RANDOM_NETWORKS).map(|_| random_network(&mut rng)));
    let mut failures = Vec::new();
    for net in &nets {
        let lat = enumerate_synchrony(net).map_err(|err| err.to_string())?;
        let fast: BTreeSet<_> = lat.nodes.iter().map(|s| s.partition.clone()).collect();
        let slow: BTreeSet<_> = brute_force_balanced(net).into_iter().collect();
        if fast != slow || fast.len() != lat.len() {
            failures.push(format!("{} {:?}", net.name(), net.input_maps()));
        }
    }
    collect(failures, format!("{} networks", nets.len()))
}

fn spectral_clauses(cat: &[CatalogEntry]) -> Outcome {
    let mut failures = Vec::new();
    for e in cat {
        let report = spectral_report(&e.network).map_err(|err| err.to_string())?;
        let clause = spectral_clause(&report).map_or("-".to_string(), |c| c.to_string());
        if clause != e.expected.spectral_clause.to_string() {
            failures.push(format!("{}: clause {} != {}", e.id, clause, e.expected.spectral_clause));
        }
    }
    for (id, form) in [
        ("E6_B1", "f1^2 + 4*f2^2"),
        ("D1_D2", "4*f1*f2 - 8*f1^2"),
        ("C1_A2", "-3*f2^2"),
    ] {
        let e = entry(cat, id);
        let want = canonical(form, e.network.k() + 1).map_err(|err| err.to_string())?;
        let report = spectral_report(&e.network).map_err(|err| err.to_string())?;
        let got = report.discriminant.as_ref().map_or("-".to_string(), |q| q.to_string());
        if got != want {
            failures.push(format!("{id}: discriminant {got} != {want}"));
        }
    }
    collect(failures, format!("{} clauses, 3 discriminants", cat.len()))
}

fn structure_types(cat: &[CatalogEntry]) -> Outcome {
    let mut failures = Vec::new();
    for e in cat {
        let al = annotate(&e.network).map_err(|err| err.to_string())?;
        let got = al.structure_type.map_or("-".to_string(), |s| s.to_string());
        if got != e.expected.structure_type.to_string() {
            failures.push(format!("{}: {} != {}", e.id, got, e.expected.structure_type));
        }
        if al.structure_type == Some(StructureType::C2L0d) {
            failures.push(format!("{}: typed C2L0d", e.id));
        }
    }
    collect(failures, format!("{} entries", cat.len()))
}

fn eigen_expression_residuals(cat: &[CatalogEntry]) -> Outcome {
    let mut failures = Vec::new();
    let mut rows = 0;
    for e in cat.iter().filter(|e| e.expected.eigen_table.is_some()) {
        for r in eigen_residuals(e, RESIDUAL_SAMPLES, 0).map_err(|err| err.to_string())? {
            rows += 1;
            if !(r.max_residual < RESIDUAL_TOL) || r.samples != RESIDUAL_SAMPLES {
                failures.push(format!("{}: {} {} residual {:e}", e.id, r.value, r.vector, r.max_residual));
            }
        }
    }
    if rows == 0 {
        failures.push("no expression rows".into());
    }
    collect(failures, format!("{rows} rows"))
}

fn branch_verdicts(cat: &[CatalogEntry]) -> Outcome {
    let mut failures = Vec::new();
    for e in cat {
        let al = annotate(&e.network).map_err(|err| err.to_string())?;
        let preds = predict(&al).map_err(|err| err.to_string())?;
        for node in std::iter::once(al.lattice.bottom).chain(al.lattice.nodes_of_dim(2)) {
            if node_verdict(&preds, node).is_none_or(|v| !v.supports()) {
                failures.push(format!("{}: node {} not supporting", e.id, node));
            }
        }
        let got = top_verdict(&al, &preds);
        if got != e.expected.top_verdict {
            failures.push(format!("{}: top {} != {}", e.id, got, e.expected.top_verdict));
        }
        let open_set_source = matches!(e.expected.source.as_str(), "C3L0RI2" | "rep_min");
        if open_set_source != (got == TopVerdict::OpenSet) {
            failures.push(format!("{}: open-set verdict does not follow its table", e.id));
        }
    }
    collect(failures, format!("{} entries", cat.len()))
}

fn determinacy_ledger(cat: &[CatalogEntry]) -> Outcome {
    let expected: BTreeSet<(String, String)> = [
        ("E6_F5", "f0+f1-f2"),
        ("C1_B1", "f0-f2"),
        ("E6_F6", "f0+f1-f2"),
        ("E6_F4", "f0+f1-f2"),
        ("B1_F1", "f0+f1-f2"),
        ("F1_F2", "f0-f1-f2"),
        ("F1_F6", "f0-f1-f2"),
        ("F", "f0-f1"),
    ]
    .into_iter()
    .map(|(id, c)| {
        let vars = entry(cat, id).network.k() + 1;
        (id.to_string(), canonical(c, vars).unwrap())
    })
    .collect();
    let mut found = BTreeSet::new();
    for e in cat {
        let al = annotate(&e.network).map_err(|err| err.to_string())?;
        for mu in &al.top_report().eigenfunctions {
            if !mu.is_simple() || mu.real_class == RealClass::Never {
                continue;
            }
            let maximal = (0..al.lattice.len()).find(|&node| {
                al.annotations[node]
                    .find(&mu.kind)
                    .is_some_and(|ent| subspace_role(&al, node, ent).role == Role::Maximal)
            });
            let Some(node) = maximal else { continue };
            let d = determinacy(&al, mu, node).map_err(|err| err.to_string())?;
            if d != Determinacy::Determined(2) {
                let vars = e.network.k() + 1;
                found.insert((e.id.clone(), canonical(&mu.kind.to_string(), vars).map_err(|err| err.to_string())?));
            }
        }
    }
    if found == expected {
        Ok(format!("{} pairs, {DETERMINACY_SAMPLES} samples each", found.len()))
    } else {
        Err(format!(
            "missing {:?}, extra {:?}",
            expected.difference(&found).collect::<Vec<_>>(),
            found.difference(&expected).collect::<Vec<_>>()
        ))
    }
}

fn defective_witnesses(cat: &[CatalogEntry]) -> Outcome {
    let mut failures = Vec::new();
    for id in ["C1_D1", "C1_D4", "C1_D6", "D1_D4", "D"] {
        let net = &entry(cat, id).network;
        let report = spectral_report(net).map_err(|err| err.to_string())?;
        let Some(mu) = report.eigenfunctions.iter().find(|e| e.is_defective()) else {
            failures.push(format!("{id}: no defective eigenfunction"));
            continue;
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..DEFECTIVE_PROFILES {
            let p = sample_profile(net, mu, &mut rng).map_err(|err| err.to_string())?;
            let c = defective_condition(net, &p).map_err(|err| err.to_string())?;
            if !c.holds || c.witness != Some((0, 0)) {
                failures.push(format!("{id}: witness {:?} value {:e}", c.witness, c.value));
                break;
            }
        }
    }
    collect(failures, format!("5 networks x {DEFECTIVE_PROFILES} profiles"))
}

fn numerical_corroboration(cat: &[CatalogEntry]) -> Outcome {
    let opts = VerifyOptions::default();
    let mut failures = Vec::new();
    let mut lines = 0;
    for e in cat {
        let al = annotate(&e.network).map_err(|err| err.to_string())?;
        let preds = predict(&al).map_err(|err| err.to_string())?;
        let report = verify_predictions(&al, &preds, &opts);
        lines += report.lines.len();
        for l in report.lines.iter().filter(|l| l.status == synbif::numerics::Status::Fail) {
            failures.push(format!("{} node {} {} {}: {}", e.id, l.subspace, l.condition, l.verdict, l.detail));
        }
    }
    let budget = format!(
        "{} seeds x {} starts, lambda_max {}",
        opts.seeds, opts.continuation.starts, opts.continuation.lambda_max
    );
    collect(failures, format!("{lines} predictions, {budget}"))
}

fn semisimple_counts(cat: &[CatalogEntry]) -> Outcome {
    let mut failures = Vec::new();
    for id in ["C1_C2", "C"] {
        let net = &entry(cat, id).network;
        let report = spectral_report(net).map_err(|err| err.to_string())?;
        let Some(mu) = report.eigenfunctions.iter().find(|e| e.is_semisimple() && e.alg_mult == 2) else {
            failures.push(format!("{id}: no semisimple double eigenfunction"));
            continue;
        };
        if canonical(&mu.kind.to_string(), net.k() + 1) != canonical("f0", net.k() + 1) {
            failures.push(format!("{id}: double eigenfunction is {}", mu.kind));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..SEMISIMPLE_PROFILES {
            let p = sample_profile(net, mu, &mut rng).map_err(|err| err.to_string())?;
            let rs = reduced_coefficients(net, mu, &p).map_err(|err| err.to_string())?;
            let sys = quadratic_branch_system(&rs).map_err(|err| err.to_string())?;
            if sys.count() != 4 {
                failures.push(format!("{id}: {} real solutions", sys.count()));
                break;
            }
        }
    }
    collect(failures, format!("2 networks x {SEMISIMPLE_PROFILES} profiles"))
}

fn main() {
    let cat = load_catalog().expect("catalog loads");
    type Check = fn(&[CatalogEntry]) -> Outcome;
    let checks: [(u32, Check, Duration); 10] = [
        (1, two_d_counts, Duration::from_secs(1)),
        (2, oracle_equivalence, Duration::from_secs(10)),
        (3, spectral_clauses, Duration::from_secs(1)),
        (4, structure_types, Duration::from_secs(60)),
        (5, eigen_expression_residuals, Duration::from_secs(5)),
        (6, branch_verdicts, Duration::from_secs(2)),
        (7, determinacy_ledger, Duration::from_secs(30)),
        (8, defective_witnesses, Duration::from_secs(5)),
        (9, numerical_corroboration, Duration::from_secs(600)),
        (10, semisimple_counts, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (n, check, limit) in checks {
        let start = Instant::now();
        let outcome = check(&cat);
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => Err(format!("{msg}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {n}: PASS ({msg}; {elapsed:.2?})"),
            Err(msg) => {
                println!("criterion {n}: FAIL ({msg}; {elapsed:.2?})");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
