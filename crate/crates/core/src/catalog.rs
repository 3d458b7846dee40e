//! The bundled catalog of named 3-cell networks (plus one 6-input network)
//! with their expected classifications, used as regression oracles.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{node_verdict, BranchPrediction, Verdict};
use crate::classify::{AnnotatedLattice, StructureType};
use crate::error::{Error, Result};
use crate::expr::{self, parse, parse_poly, parse_vector, strip_defective_marker, Expr};
use crate::network::{is_connected, Network};
use crate::spectrum::{jacobian_form, jacobian_numeric, EigenKind, RealClass, SpectralReport};
use crate::synchrony::SynchronyLattice;

const NETWORKS_JSON: &str = include_str!("../fixtures/networks.json");
const EXPECTED_JSON: &str = include_str!("../fixtures/expected.json");

/// Spectral clauses (i)–(vi) of the 3-cell spectral classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpectralClause {
    /// A defective non-valency eigenfunction of multiplicities (1, 2).
    #[serde(rename = "i")]
    I,
    /// The valency eigenfunction has algebraic multiplicity 2.
    #[serde(rename = "ii")]
    II,
    /// A semisimple non-valency eigenfunction of multiplicity 2.
    #[serde(rename = "iii")]
    III,
    /// Three simple eigenfunctions, all real.
    #[serde(rename = "iv")]
    IV,
    /// A conjugate pair that is real only on an open set.
    #[serde(rename = "v")]
    V,
    /// A pair that is never real.
    #[serde(rename = "vi")]
    VI,
}

impl fmt::Display for SpectralClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpectralClause::I => "i",
            SpectralClause::II => "ii",
            SpectralClause::III => "iii",
            SpectralClause::IV => "iv",
            SpectralClause::V => "v",
            SpectralClause::VI => "vi",
        };
        f.write_str(s)
    }
}

/// Which spectral clause a 3-cell report falls under.
pub fn spectral_clause(report: &SpectralReport) -> Option<SpectralClause> {
    if report.n_cells != 3 {
        return None;
    }
    let eig = &report.eigenfunctions;
    if report.valency_eigenfunction().alg_mult == 2 {
        return Some(SpectralClause::II);
    }
    if let Some(e) = eig.iter().find(|e| !e.kind.is_valency() && e.alg_mult == 2) {
        return Some(if e.is_defective() {
            SpectralClause::I
        } else {
            SpectralClause::III
        });
    }
    if eig.iter().any(|e| e.real_class == RealClass::Never) {
        return Some(SpectralClause::VI);
    }
    if eig.iter().any(|e| e.real_class == RealClass::OnOpenSet) {
        return Some(SpectralClause::V);
    }
    if eig.len() == 3 && eig.iter().all(|e| e.is_simple()) {
        return Some(SpectralClause::IV);
    }
    None
}

/// Whole-network verdict on the full phase space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopVerdict {
    Supports,
    NotSupported,
    OpenSet,
}

impl fmt::Display for TopVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TopVerdict::Supports => "supports",
            TopVerdict::NotSupported => "not_supported",
            TopVerdict::OpenSet => "open_set",
        };
        f.write_str(s)
    }
}

/// Whole-phase-space summary of a prediction list.
pub fn top_verdict(al: &AnnotatedLattice, preds: &[BranchPrediction]) -> TopVerdict {
    match node_verdict(preds, al.lattice.top) {
        Some(Verdict::Supports) => TopVerdict::Supports,
        Some(Verdict::SupportsOnOpenSet) => TopVerdict::OpenSet,
        _ => TopVerdict::NotSupported,
    }
}

/// An eigenvalue/eigenvector pair as printed, e.g. `f_0 ^*` and
/// `(-f_2/f_1,1,1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenRow {
    pub value: String,
    pub vector: String,
}

/// Expected values, stored verbatim; nothing here is computed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub id: String,
    pub source: String,
    /// Eigenpairs of the single adjacency matrix (one-input networks).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adjacency_eigen: Vec<EigenRow>,
    /// Names `Delta_l` of the two-dimensional synchrony subspaces.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sync_2d: Vec<String>,
    pub two_d_count: usize,
    pub structure_type: StructureType,
    pub spectral_clause: SpectralClause,
    pub top_verdict: TopVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eigen: Vec<EigenRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen_table: Option<String>,
    /// The simple condition under which the quadratic reduced coefficient
    /// vanishes identically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_degenerate_condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminant: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpectedFile {
    version: u32,
    entries: Vec<Expected>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub network: Network,
    pub expected: Expected,
}

/// Normalize a network name into a catalog id (`E6&B1` → `E6_B1`).
pub fn normalize_id(name: &str) -> String {
    name.replace('&', "_")
}

fn corrupt(id: &str, reason: impl Into<String>) -> Error {
    Error::CorruptFixture {
        id: id.to_string(),
        reason: reason.into(),
    }
}

/// Load and validate every catalog entry.
pub fn load_catalog() -> Result<Vec<CatalogEntry>> {
    let networks: Vec<Network> =
        serde_json::from_str(NETWORKS_JSON).map_err(|e| corrupt("networks.json", e.to_string()))?;
    let file: ExpectedFile =
        serde_json::from_str(EXPECTED_JSON).map_err(|e| corrupt("expected.json", e.to_string()))?;
    if file.version != 1 {
        return Err(corrupt("expected.json", format!("unsupported version {}", file.version)));
    }
    if networks.len() != file.entries.len() {
        return Err(corrupt(
            "expected.json",
            format!("{} networks but {} expected entries", networks.len(), file.entries.len()),
        ));
    }
    networks
        .into_iter()
        .zip(file.entries)
        .map(|(network, expected)| {
            let id = normalize_id(network.name());
            if id != expected.id {
                return Err(corrupt(&id, format!("expected entry is `{}`", expected.id)));
            }
            if !is_connected(&network) {
                return Err(corrupt(&id, "network is disconnected"));
            }
            if let Some(rows) = &expected.jacobian {
                check_jacobian(&network, rows).map_err(|r| corrupt(&id, r))?;
            }
            Ok(CatalogEntry {
                id,
                network,
                expected,
            })
        })
        .collect()
}

/// Look up a catalog entry by id (`&` or `_` separators accepted).
pub fn find_entry(id: &str) -> Result<CatalogEntry> {
    let id = normalize_id(id);
    load_catalog()?
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::InvalidArgument(format!("no catalog entry `{id}`")))
}

/// The printed Jacobian must equal the one built from the input maps.
fn check_jacobian(net: &Network, rows: &[Vec<String>]) -> std::result::Result<(), String> {
    let vars = net.k() + 1;
    let j = jacobian_form(net);
    if rows.len() != j.len() || rows.iter().any(|r| r.len() != j.len()) {
        return Err("printed Jacobian has the wrong shape".into());
    }
    for (i, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let printed = parse_poly(cell, vars).map_err(|e| e.to_string())?;
            let built = j[i][c].to_poly();
            if printed != built {
                return Err(format!(
                    "Jacobian entry ({}, {}) is `{cell}` but the input maps give `{built}`",
                    i + 1,
                    c + 1
                ));
            }
        }
    }
    Ok(())
}

/// `Delta_l` names of the two-dimensional nodes of a 3-cell lattice: cell
/// `l` alone and the other two synchronized.
pub fn two_d_names(lat: &SynchronyLattice) -> Vec<String> {
    let mut names: Vec<String> = lat
        .nodes_of_dim(2)
        .into_iter()
        .filter_map(|i| {
            let blocks = lat.nodes[i].partition.blocks();
            blocks
                .iter()
                .find(|b| b.len() == 1)
                .map(|b| format!("Delta_{}", b[0] + 1))
        })
        .collect();
    names.sort();
    names
}

/// Worst residual of one printed eigenpair over the sampled points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResidual {
    pub value: String,
    pub vector: String,
    pub max_residual: f64,
    pub samples: usize,
}

/// Smallest |denominator| tolerated when sampling expressions.
pub const POLE_MARGIN: f64 = 0.05;

fn far_from_poles(exprs: &[&Expr], f: &[f64]) -> bool {
    exprs
        .iter()
        .flat_map(|e| e.denominators())
        .all(|d| d.eval(f).norm() > POLE_MARGIN)
}

/// Evaluate `‖(J − μ I) v‖` for every printed eigenpair of the entry at
/// `samples` random first-derivative points in `[-1, 1]`.
pub fn eigen_residuals(entry: &CatalogEntry, samples: usize, seed: u64) -> Result<Vec<EigenResidual>> {
    let net = &entry.network;
    let vars = net.k() + 1;
    let n = net.n_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, adjacency) = if entry.expected.eigen.is_empty() {
        (&entry.expected.adjacency_eigen, true)
    } else {
        (&entry.expected.eigen, false)
    };
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let value = parse(strip_defective_marker(&row.value).0)?;
        let vector = parse_vector(&row.vector)?;
        if vector.len() != n {
            return Err(corrupt(&entry.id, format!("vector `{}` has wrong length", row.vector)));
        }
        let mut exprs: Vec<&Expr> = vector.iter().collect();
        exprs.push(&value);
        let mut worst = 0.0f64;
        let mut taken = 0;
        let mut attempts = 0;
        while taken < samples {
            attempts += 1;
            if attempts > 100 * samples.max(1) {
                return Err(corrupt(&entry.id, format!("cannot sample away from poles of `{}`", row.vector)));
            }
            let f: Vec<f64> = (0..vars).map(|_| rng.random_range(-1.0..1.0)).collect();
            if !far_from_poles(&exprs, &f) {
                continue;
            }
            let j = jacobian_numeric(net, &f).map(|x| Complex64::new(x, 0.0));
            let mu = if adjacency {
                // One-input networks print eigenvalues of the adjacency
                // matrix; the Jacobian eigenvalue is f0 + value * f1.
                Complex64::new(f[0], 0.0) + value.eval(&f) * f[1]
            } else {
                value.eval(&f)
            };
            let v = nalgebra::DVector::from_iterator(n, vector.iter().map(|e| e.eval(&f)));
            let shifted = &j - DMatrix::<Complex64>::identity(n, n) * mu;
            worst = worst.max((shifted * v).norm());
            taken += 1;
        }
        out.push(EigenResidual {
            value: row.value.clone(),
            vector: row.vector.clone(),
            max_residual: worst,
            samples: taken,
        });
    }
    Ok(out)
}

/// One comparison of a cross-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub what: String,
    pub expected: String,
    pub computed: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub id: String,
    pub lattice_size: usize,
    pub lines: Vec<CheckLine>,
    pub residuals: Vec<EigenResidual>,
}

impl CrossCheck {
    pub fn ok(&self) -> bool {
        self.lines.iter().all(|l| l.ok)
    }
}

/// Canonical rendering of a printed discriminant/condition expression.
pub fn canonical(expr_text: &str, vars: usize) -> Result<String> {
    Ok(expr::parse_poly(expr_text, vars)?.to_string())
}

fn line(what: &str, expected: impl ToString, computed: impl ToString) -> CheckLine {
    let expected = expected.to_string();
    let computed = computed.to_string();
    CheckLine {
        what: what.to_string(),
        ok: expected == computed,
        expected,
        computed,
    }
}

/// Compare computed lattice, structure, spectrum and (optionally) the
/// whole-network verdict against the entry's expected values.
pub fn cross_check(
    entry: &CatalogEntry,
    al: &AnnotatedLattice,
    top_verdict: Option<TopVerdict>,
) -> Result<CrossCheck> {
    let exp = &entry.expected;
    let vars = entry.network.k() + 1;
    let report = al.top_report();
    let mut lines = vec![
        line("two_d_count", exp.two_d_count, al.two_dimensional_count()),
        line(
            "structure_type",
            exp.structure_type,
            al.structure_type.map_or("-".to_string(), |s| s.to_string()),
        ),
        line(
            "spectral_clause",
            exp.spectral_clause,
            spectral_clause(report).map_or("-".to_string(), |c| c.to_string()),
        ),
    ];
    if !exp.sync_2d.is_empty() {
        lines.push(line("sync_2d", exp.sync_2d.join(","), two_d_names(&al.lattice).join(",")));
    }
    if let Some(d) = &exp.discriminant {
        let computed = report
            .discriminant
            .as_ref()
            .map_or("-".to_string(), |q| q.to_string());
        lines.push(line("discriminant", canonical(d, vars)?, computed));
    }
    if let Some(v) = top_verdict {
        lines.push(line("top_verdict", exp.top_verdict, v));
    }
    for row in &exp.eigen {
        let (value, defective) = strip_defective_marker(&row.value);
        let want = parse_poly(value, vars)?;
        let found = report.eigenfunctions.iter().find(|e| match &e.kind {
            EigenKind::Valency(l) | EigenKind::Linear(l) => l.to_poly() == want,
            _ => false,
        });
        let computed = found.map_or("missing".to_string(), |e| {
            if e.is_defective() {
                format!("{}*", e.kind)
            } else {
                e.kind.to_string()
            }
        });
        let expected = if defective {
            format!("{want}*")
        } else {
            want.to_string()
        };
        lines.push(line("eigenvalue", expected, computed));
    }
    let residuals = eigen_residuals(entry, 100, 0)?;
    Ok(CrossCheck {
        id: entry.id.clone(),
        lattice_size: al.lattice.len(),
        lines,
        residuals,
    })
}
