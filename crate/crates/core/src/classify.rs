//! Synchrony lattices annotated with quotient eigenfunctions, the
//! maximal/submaximal roles of each subspace, and the seven lattice
//! structures of connected 3-cell networks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{is_connected, Network};
use crate::par::{self, Exec};
use crate::spectrum::{
    eigenfunctions_of_quotient, is_root, EigenKind, Eigenfunction, SpectralReport,
};
use crate::synchrony::{enumerate_synchrony_with, to_dot_with, valency_breaking_subspaces, SynchronyLattice};

/// Annotated lattice shapes of connected 3-cell networks.
///
/// `C<d>L<t><x>`: `d` distinct eigenfunctions, `t` two-dimensional synchrony
/// subspaces, and `v` (double valency), `s` (semisimple double
/// eigenfunction) or `d` (defective double eigenfunction).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructureType {
    C2L1v,
    C2L3s,
    C2L1d,
    C2L0d,
    C3L0,
    C3L1,
    C3L2,
}

impl fmt::Display for StructureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for StructureType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "C2L1v" => StructureType::C2L1v,
            "C2L3s" => StructureType::C2L3s,
            "C2L1d" => StructureType::C2L1d,
            "C2L0d" => StructureType::C2L0d,
            "C3L0" => StructureType::C3L0,
            "C3L1" => StructureType::C3L1,
            "C3L2" => StructureType::C3L2,
            other => return Err(Error::Parse(format!("unknown structure type `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedLattice {
    pub lattice: SynchronyLattice,
    /// Spectral report of each node's quotient, in node order.
    pub annotations: Vec<SpectralReport>,
    /// Set for connected 3-cell networks.
    pub structure_type: Option<StructureType>,
    /// Minimal nodes whose quotient has exactly two source components.
    pub valency_breaking: Vec<usize>,
}

impl AnnotatedLattice {
    /// The network itself (quotient by the trivial partition).
    pub fn network(&self) -> &Network {
        &self.lattice.nodes[self.lattice.top].quotient
    }

    pub fn top_report(&self) -> &SpectralReport {
        &self.annotations[self.lattice.top]
    }

    pub fn two_dimensional_count(&self) -> usize {
        self.lattice.nodes_of_dim(2).len()
    }
}

pub fn annotate(net: &Network) -> Result<AnnotatedLattice> {
    annotate_with(net, Exec::default())
}

pub fn annotate_with(net: &Network, exec: Exec) -> Result<AnnotatedLattice> {
    let lattice = enumerate_synchrony_with(net, exec)?;
    let annotations = par::map(exec, &lattice.nodes, eigenfunctions_of_quotient)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let valency_breaking = valency_breaking_subspaces(net, &lattice);
    let mut al = AnnotatedLattice {
        lattice,
        annotations,
        structure_type: None,
        valency_breaking,
    };
    if net.n_cells() == 3 && is_connected(net) {
        al.structure_type = Some(structure_type(&al)?);
    }
    Ok(al)
}

/// Is `mu` an eigenfunction of the quotient described by `report`?
pub fn eigenfunction_membership(mu: &Eigenfunction, report: &SpectralReport) -> bool {
    match &mu.kind {
        EigenKind::Valency(l) | EigenKind::Linear(l) => is_root(&report.char_poly, l),
        EigenKind::QuadraticRoot { alpha1, alpha0, .. } => {
            report.eigenfunctions.iter().any(|e| {
                matches!(&e.kind, EigenKind::QuadraticRoot { alpha1: a1, alpha0: a0, .. }
                    if a1 == alpha1 && a0 == alpha0)
            })
        }
        EigenKind::Residual { .. } => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Maximal,
    Submaximal { order: usize },
    NotAnEigenfunctionHere,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceRole {
    pub subspace: usize,
    pub eigenfunction: Eigenfunction,
    pub role: Role,
    /// Strictly smaller nodes where the eigenfunction is simple and maximal.
    pub simple_maximal_below: Vec<usize>,
}

/// Eigenfunction entry of `node` structurally equal to `mu`.
pub fn entry_at<'a>(al: &'a AnnotatedLattice, node: usize, mu: &EigenKind) -> Option<&'a Eigenfunction> {
    al.annotations[node].find(mu)
}

fn is_maximal_at(al: &AnnotatedLattice, node: usize, mu: &Eigenfunction) -> bool {
    al.lattice
        .strictly_below(node)
        .iter()
        .all(|&c| !eigenfunction_membership(mu, &al.annotations[c]))
}

/// Maximal iff no strictly smaller subspace carries `mu`; otherwise
/// submaximal with order equal to the number of strictly smaller subspaces
/// on which `mu` is simple and maximal.
pub fn subspace_role(al: &AnnotatedLattice, node: usize, mu: &Eigenfunction) -> SubspaceRole {
    let here = entry_at(al, node, &mu.kind).cloned();
    let Some(entry) = here else {
        return SubspaceRole {
            subspace: node,
            eigenfunction: mu.clone(),
            role: Role::NotAnEigenfunctionHere,
            simple_maximal_below: Vec::new(),
        };
    };
    if is_maximal_at(al, node, &entry) {
        return SubspaceRole {
            subspace: node,
            eigenfunction: entry,
            role: Role::Maximal,
            simple_maximal_below: Vec::new(),
        };
    }
    let below: Vec<usize> = al
        .lattice
        .strictly_below(node)
        .into_iter()
        .filter(|&c| {
            entry_at(al, c, &entry.kind).is_some_and(|e| e.is_simple() && is_maximal_at(al, c, e))
        })
        .collect();
    SubspaceRole {
        subspace: node,
        eigenfunction: entry,
        role: Role::Submaximal { order: below.len() },
        simple_maximal_below: below,
    }
}

/// Decide which of the seven 3-cell lattice structures applies.
pub fn structure_type(al: &AnnotatedLattice) -> Result<StructureType> {
    let net = al.network();
    if net.n_cells() != 3 {
        return Err(Error::WrongCellCount {
            expected: 3,
            found: net.n_cells(),
        });
    }
    if !is_connected(net) {
        return Err(Error::Disconnected);
    }
    let report = al.top_report();
    let two_d = al.two_dimensional_count();
    let valency = report.valency_eigenfunction();
    if valency.alg_mult == 2 {
        return Ok(StructureType::C2L1v);
    }
    let others: Vec<&Eigenfunction> = report
        .eigenfunctions
        .iter()
        .filter(|e| !e.kind.is_valency())
        .collect();
    let unclassifiable = || {
        Error::UnclassifiableLattice(format!(
            "{} eigenfunctions, {} two-dimensional subspaces",
            report.eigenfunctions.len(),
            two_d
        ))
    };
    if let Some(double) = others.iter().find(|e| e.alg_mult == 2) {
        return match (double.geo_mult, two_d) {
            (2, _) => Ok(StructureType::C2L3s),
            (1, 1) => Ok(StructureType::C2L1d),
            (1, 0) => Ok(StructureType::C2L0d),
            _ => Err(unclassifiable()),
        };
    }
    if report.eigenfunctions.len() == 3 && report.eigenfunctions.iter().all(Eigenfunction::is_simple) {
        return match two_d {
            0 => Ok(StructureType::C3L0),
            1 => Ok(StructureType::C3L1),
            2 => Ok(StructureType::C3L2),
            _ => Err(unclassifiable()),
        };
    }
    Err(unclassifiable())
}

/// Lattice DOT with each node's eigenfunctions; defective ones carry `*`.
pub fn to_dot_annotated(al: &AnnotatedLattice) -> String {
    to_dot_with(&al.lattice, al.network().name(), |i| {
        let labels: Vec<String> = al.annotations[i].eigenfunctions.iter().map(Eigenfunction::label).collect();
        Some(labels.join(", "))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(inputs: &[&[i64]]) -> Network {
        Network::new("t", 3, inputs.iter().map(|m| m.to_vec()).collect()).unwrap()
    }

    #[test]
    fn structure_examples() {
        let cases: [(&[&[i64]], StructureType); 7] = [
            (&[&[1, 1, 3], &[1, 3, 3]], StructureType::C2L1v),
            (&[&[2, 1, 1]], StructureType::C3L2),
            (&[&[1, 1, 2]], StructureType::C2L1d),
            (&[&[3, 1, 2]], StructureType::C3L0),
            (&[&[1, 1, 1]], StructureType::C2L3s),
            (&[&[1, 1, 1], &[2, 2, 2]], StructureType::C2L3s),
            (&[&[2, 1, 1], &[2, 3, 2]], StructureType::C3L1),
        ];
        for (inputs, expected) in cases {
            let al = annotate(&net(inputs)).unwrap();
            assert_eq!(al.structure_type, Some(expected), "{inputs:?}");
        }
    }

    #[test]
    fn disconnected_has_no_structure() {
        let al = annotate(&net(&[&[1, 2, 3]])).unwrap();
        assert_eq!(al.structure_type, None);
        assert_eq!(structure_type(&al), Err(Error::Disconnected));
    }

    #[test]
    fn valency_is_maximal_at_bottom() {
        let al = annotate(&net(&[&[2, 1, 1], &[2, 3, 2]])).unwrap();
        let v = al.annotations[0].eigenfunctions[0].clone();
        assert!(v.kind.is_valency());
        assert_eq!(subspace_role(&al, 0, &v).role, Role::Maximal);
        assert!(matches!(
            subspace_role(&al, al.lattice.top, &v).role,
            Role::Submaximal { .. }
        ));
    }

    #[test]
    fn annotated_dot_marks_defective_eigenfunctions() {
        let al = annotate(&net(&[&[1, 1, 2]])).unwrap();
        let dot = to_dot_annotated(&al);
        assert!(dot.contains("rankdir=BT"));
        assert!(dot.contains("x1=x2=x3"));
        assert!(dot.contains("f0*"), "{dot}");
        assert_eq!(dot.matches("->").count(), al.lattice.cover_edges.len());
    }

    #[test]
    fn semisimple_order_three() {
        let al = annotate(&net(&[&[1, 1, 1], &[2, 2, 2]])).unwrap();
        let mu = al
            .top_report()
            .eigenfunctions
            .iter()
            .find(|e| e.alg_mult == 2)
            .unwrap()
            .clone();
        assert_eq!(
            subspace_role(&al, al.lattice.top, &mu).role,
            Role::Submaximal { order: 3 }
        );
    }
}
