//! Balanced partitions, synchrony subspaces, quotient networks and the
//! synchrony lattice.
//!
//! Order convention: nodes are compared as subspaces. A coarser partition
//! (more cells equated) is a *smaller* subspace, so the bottom node is the
//! full-synchrony partition (one class) and the top node is the partition
//! into singletons (the whole phase space).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{source_components, Network};
use crate::par::{self, Exec};

/// Largest cell count accepted by [`enumerate_synchrony`].
pub const ENUMERATION_CAP: usize = 12;

/// Cell colouring with dense class indices numbered by first occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    classes: Vec<usize>,
    num_classes: usize,
}

impl Partition {
    /// Canonicalise an arbitrary labelling (labels renumbered by first occurrence).
    pub fn new<L: Ord + Clone>(labels: &[L]) -> Self {
        let mut seen: BTreeMap<L, usize> = BTreeMap::new();
        let mut classes = Vec::with_capacity(labels.len());
        for l in labels {
            let next = seen.len();
            classes.push(*seen.entry(l.clone()).or_insert(next));
        }
        Partition {
            num_classes: seen.len(),
            classes,
        }
    }

    /// Build from 1-indexed blocks, e.g. `[[1], [2, 3]]`.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &c in block {
                if c == 0 || c > n || labels[c - 1] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "cell {c} missing or repeated in partition blocks"
                    )));
                }
                labels[c - 1] = b;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::PartitionSizeMismatch {
                found: labels.iter().filter(|&&l| l != usize::MAX).count(),
                expected: n,
            });
        }
        Ok(Self::new(&labels))
    }

    pub fn singletons(n: usize) -> Self {
        Self::new(&(0..n).collect::<Vec<_>>())
    }

    pub fn full(n: usize) -> Self {
        Self::new(&vec![0usize; n])
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Class of 0-indexed cell `i`.
    pub fn class_of(&self, i: usize) -> usize {
        self.classes[i]
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    /// Blocks as 0-indexed cell lists ordered by class index.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut b = vec![Vec::new(); self.num_classes];
        for (i, &c) in self.classes.iter().enumerate() {
            b[c].push(i);
        }
        b
    }

    /// True iff every class of `self` lies inside a class of `other`,
    /// i.e. the polydiagonal of `other` is contained in that of `self`.
    pub fn refines(&self, other: &Partition) -> bool {
        let mut image: Vec<Option<usize>> = vec![None; self.num_classes];
        for (i, &c) in self.classes.iter().enumerate() {
            match image[c] {
                None => image[c] = Some(other.classes[i]),
                Some(o) if o != other.classes[i] => return false,
                _ => {}
            }
        }
        true
    }

    /// Merge classes: the finest partition coarser than both.
    pub fn merge(&self, other: &Partition) -> Partition {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for part in [self, other] {
            let mut first: Vec<Option<usize>> = vec![None; part.num_classes];
            for i in 0..n {
                let c = part.classes[i];
                match first[c] {
                    None => first[c] = Some(i),
                    Some(j) => {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a] = b;
                    }
                }
            }
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        Partition::new(&roots)
    }

    /// Common refinement: cells share a class iff they do in both.
    pub fn common_refinement(&self, other: &Partition) -> Partition {
        let labels: Vec<(usize, usize)> = self
            .classes
            .iter()
            .zip(&other.classes)
            .map(|(&a, &b)| (a, b))
            .collect();
        Partition::new(&labels)
    }

    /// Defining equalities with 1-indexed cells, e.g. `x2=x3`; empty for singletons.
    pub fn equalities(&self) -> Vec<String> {
        self.blocks()
            .into_iter()
            .filter(|b| b.len() > 1)
            .map(|b| {
                b.iter()
                    .map(|c| format!("x{}", c + 1))
                    .collect::<Vec<_>>()
                    .join("=")
            })
            .collect()
    }

    /// Human label: equalities joined by commas, or `R^n` for the whole space.
    pub fn label(&self) -> String {
        let eq = self.equalities();
        if eq.is_empty() {
            format!("R^{}", self.len())
        } else {
            eq.join(", ")
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| {
                b.iter()
                    .map(|c| (c + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "{{{}}}", blocks.join("|"))
    }
}

fn check_size(net: &Network, p: &Partition) -> Result<()> {
    if p.len() != net.n_cells() {
        return Err(Error::PartitionSizeMismatch {
            found: p.len(),
            expected: net.n_cells(),
        });
    }
    Ok(())
}

fn balanced_unchecked(net: &Network, classes: &[usize]) -> bool {
    let n = classes.len();
    let mut rep: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let c = classes[i];
        match rep[c] {
            None => rep[c] = Some(i),
            Some(r) => {
                for map in net.input_maps() {
                    if classes[map[i]] != classes[map[r]] {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Same-class cells have same-class sources for every input type.
pub fn is_balanced(net: &Network, p: &Partition) -> Result<bool> {
    check_size(net, p)?;
    Ok(balanced_unchecked(net, &p.classes))
}

/// Coarsest balanced partition refining `p` (iterated splitting by the
/// classes of each cell's sources).
pub fn coarsest_balanced_refinement(net: &Network, p: &Partition) -> Partition {
    let mut cur = p.clone();
    loop {
        let sig: Vec<Vec<usize>> = (0..net.n_cells())
            .map(|i| {
                let mut s = vec![cur.classes[i]];
                s.extend(net.input_maps().iter().map(|m| cur.classes[m[i]]));
                s
            })
            .collect();
        let next = Partition::new(&sig);
        if next.num_classes == cur.num_classes {
            return next;
        }
        cur = next;
    }
}

/// A balanced partition with its quotient network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynchronySubspace {
    pub partition: Partition,
    pub quotient: Network,
    /// Parent cell (0-indexed) to quotient cell (0-indexed).
    pub projection: Vec<usize>,
}

impl SynchronySubspace {
    pub fn dim(&self) -> usize {
        self.partition.num_classes()
    }

    pub fn label(&self) -> String {
        self.partition.label()
    }
}

/// Quotient network on the classes of a balanced partition.
pub fn quotient(net: &Network, p: &Partition) -> Result<SynchronySubspace> {
    if !is_balanced(net, p)? {
        return Err(Error::UnbalancedPartition);
    }
    let blocks = p.blocks();
    let inputs: Vec<Vec<usize>> = net
        .input_maps()
        .iter()
        .map(|m| blocks.iter().map(|b| p.classes[m[b[0]]]).collect())
        .collect();
    let name = format!("{}/{}", net.name(), p);
    let quotient = Network::from_zero_indexed(&name, p.num_classes, inputs)?;
    Ok(SynchronySubspace {
        partition: p.clone(),
        projection: p.classes.clone(),
        quotient,
    })
}

/// Immediate inclusion `below ⊂ above` between lattice nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoverEdge {
    pub below: usize,
    pub above: usize,
}

/// All synchrony subspaces of a network ordered by inclusion.
///
/// Nodes are sorted by dimension, then by canonical class vector, so the
/// bottom is node 0 and the top is the last node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynchronyLattice {
    pub nodes: Vec<SynchronySubspace>,
    pub cover_edges: Vec<CoverEdge>,
    pub bottom: usize,
    pub top: usize,
}

impl SynchronyLattice {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Subspace inclusion `a ⊆ b`.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.nodes[b].partition.refines(&self.nodes[a].partition)
    }

    /// Nodes strictly contained in `a`.
    pub fn strictly_below(&self, a: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| c != a && self.leq(c, a)).collect()
    }

    pub fn find(&self, p: &Partition) -> Option<usize> {
        self.nodes.iter().position(|s| &s.partition == p)
    }

    /// Nodes of a given dimension.
    pub fn nodes_of_dim(&self, d: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.nodes[i].dim() == d).collect()
    }
}

/// Largest synchrony subspace contained in both (intersection of polydiagonals).
pub fn meet(lat: &SynchronyLattice, a: usize, b: usize) -> usize {
    let p = lat.nodes[a].partition.merge(&lat.nodes[b].partition);
    lat.find(&p).expect("intersection of synchrony subspaces is a node")
}

/// Smallest synchrony subspace containing both.
pub fn join(lat: &SynchronyLattice, net: &Network, a: usize, b: usize) -> usize {
    let p = lat.nodes[a]
        .partition
        .common_refinement(&lat.nodes[b].partition);
    let p = coarsest_balanced_refinement(net, &p);
    lat.find(&p).expect("balanced refinement is a node")
}

/// Restricted-growth strings of length `n` with the given prefix, filtered.
fn extend_rgs(
    net: &Network,
    prefix: &mut Vec<usize>,
    max: usize,
    n: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if prefix.len() == n {
        if balanced_unchecked(net, prefix) {
            out.push(prefix.clone());
        }
        return;
    }
    for c in 0..=max + 1 {
        prefix.push(c);
        extend_rgs(net, prefix, max.max(c), n, out);
        prefix.pop();
    }
}

fn rgs_prefixes(len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0usize]];
    for _ in 1..len {
        let mut next = Vec::new();
        for p in &out {
            let max = *p.iter().max().expect("non-empty prefix");
            for c in 0..=max + 1 {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// All balanced partitions with the inclusion order and cover edges.
pub fn enumerate_synchrony(net: &Network) -> Result<SynchronyLattice> {
    enumerate_synchrony_with(net, Exec::default())
}

pub fn enumerate_synchrony_with(net: &Network, exec: Exec) -> Result<SynchronyLattice> {
    let n = net.n_cells();
    if n > ENUMERATION_CAP {
        return Err(Error::TooManyCells {
            cells: n,
            cap: ENUMERATION_CAP,
        });
    }
    let prefixes = rgs_prefixes(n.min(5));
    let chunks = par::map(exec, &prefixes, |p| {
        let mut prefix = p.clone();
        let max = *prefix.iter().max().expect("non-empty prefix");
        let mut out = Vec::new();
        extend_rgs(net, &mut prefix, max, n, &mut out);
        out
    });
    let mut parts: Vec<Partition> = chunks
        .into_iter()
        .flatten()
        .map(|c| Partition::new(&c))
        .collect();
    parts.sort_by(|a, b| a.num_classes.cmp(&b.num_classes).then_with(|| a.cmp(b)));
    build_lattice(net, parts)
}

fn build_lattice(net: &Network, parts: Vec<Partition>) -> Result<SynchronyLattice> {
    let nodes = parts
        .iter()
        .map(|p| quotient(net, p))
        .collect::<Result<Vec<_>>>()?;
    let m = nodes.len();
    let leq = |a: usize, b: usize| nodes[b].partition.refines(&nodes[a].partition);
    let mut cover_edges = Vec::new();
    for a in 0..m {
        for b in 0..m {
            if a == b || !leq(a, b) {
                continue;
            }
            let between = (0..m).any(|c| c != a && c != b && leq(a, c) && leq(c, b));
            if !between {
                cover_edges.push(CoverEdge { below: a, above: b });
            }
        }
    }
    let top = m - 1;
    Ok(SynchronyLattice {
        nodes,
        cover_edges,
        bottom: 0,
        top,
    })
}

/// Oracle: filter every set partition through [`is_balanced`] without any
/// enumeration shortcuts (used by tests).
pub fn brute_force_balanced(net: &Network) -> Vec<Partition> {
    let n = net.n_cells();
    let mut all: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &all {
            let max = p.iter().max().map_or(0, |m| m + 1);
            for c in 0..=max {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        all = next;
    }
    let mut out: BTreeSet<Partition> = BTreeSet::new();
    for labels in all {
        let p = Partition::new(&labels);
        if is_balanced(net, &p).unwrap_or(false) {
            out.insert(p);
        }
    }
    out.into_iter().collect()
}

/// Minimal synchrony subspaces whose quotient has exactly two source components.
pub fn valency_breaking_subspaces(net: &Network, lat: &SynchronyLattice) -> Vec<usize> {
    if source_components(net).count < 2 {
        return Vec::new();
    }
    let two: Vec<usize> = (0..lat.len())
        .filter(|&i| source_components(&lat.nodes[i].quotient).count == 2)
        .collect();
    two.iter()
        .copied()
        .filter(|&i| !two.iter().any(|&j| j != i && lat.leq(j, i)))
        .collect()
}

/// Graphviz rendering of the lattice: one node per subspace labelled with
/// its defining equalities plus any `extra` lines, cover edges pointing up,
/// bottom drawn lowest.
pub fn to_dot_with<F>(lat: &SynchronyLattice, name: &str, extra: F) -> String
where
    F: Fn(usize) -> Option<String>,
{
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", name.replace('"', "'"));
    out.push_str("  rankdir=BT;\n  node [shape=box];\n");
    for (i, node) in lat.nodes.iter().enumerate() {
        let mut label = node.label();
        if let Some(more) = extra(i) {
            label.push_str("\\n");
            label.push_str(&more);
        }
        let _ = writeln!(out, "  n{i} [label=\"{}\"];", label.replace('"', "'"));
    }
    for e in &lat.cover_edges {
        let _ = writeln!(out, "  n{} -> n{};", e.below, e.above);
    }
    out.push_str("}\n");
    out
}

pub fn to_dot(lat: &SynchronyLattice, name: &str) -> String {
    to_dot_with(lat, name, |_| None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(n: i64, inputs: &[&[i64]]) -> Network {
        Network::new("t", n, inputs.iter().map(|m| m.to_vec()).collect()).unwrap()
    }

    fn g() -> Network {
        net(3, &[&[2, 1, 1], &[2, 3, 2]])
    }

    #[test]
    fn balancedness_examples() {
        let p = Partition::from_blocks(3, &[vec![1], vec![2, 3]]).unwrap();
        assert!(is_balanced(&g(), &p).unwrap());
        assert!(is_balanced(&g(), &Partition::full(3)).unwrap());
        let p = Partition::from_blocks(3, &[vec![1, 2], vec![3]]).unwrap();
        assert!(!is_balanced(&g(), &p).unwrap());
        assert!(matches!(
            is_balanced(&g(), &Partition::full(2)),
            Err(Error::PartitionSizeMismatch { .. })
        ));
    }

    #[test]
    fn lattice_of_g() {
        let lat = enumerate_synchrony(&g()).unwrap();
        let labels: Vec<String> = lat.nodes.iter().map(|s| s.label()).collect();
        assert_eq!(labels, vec!["x1=x2=x3", "x2=x3", "R^3"]);
        assert_eq!(
            lat.cover_edges,
            vec![CoverEdge { below: 0, above: 1 }, CoverEdge { below: 1, above: 2 }]
        );
        let q = &lat.nodes[1].quotient;
        assert_eq!(q.to_raw().inputs, vec![vec![2, 1], vec![2, 2]]);
    }

    #[test]
    fn lattice_of_c_and_join_meet() {
        let c = net(3, &[&[1, 1, 1]]);
        let lat = enumerate_synchrony(&c).unwrap();
        assert_eq!(lat.len(), 5);
        assert_eq!(lat.nodes_of_dim(2).len(), 3);
        let d1 = lat
            .find(&Partition::from_blocks(3, &[vec![1], vec![2, 3]]).unwrap())
            .unwrap();
        let d2 = lat
            .find(&Partition::from_blocks(3, &[vec![1, 3], vec![2]]).unwrap())
            .unwrap();
        assert_eq!(join(&lat, &c, d1, d2), lat.top);
        assert_eq!(meet(&lat, d1, d2), lat.bottom);
        assert_eq!(meet(&lat, d1, d1), d1);
        for x in 0..lat.len() {
            assert_eq!(meet(&lat, lat.bottom, x), lat.bottom);
        }
        let q = quotient(&c, &lat.nodes[d2].partition).unwrap();
        assert_eq!(q.quotient.to_raw().inputs, vec![vec![1, 1]]);
    }

    #[test]
    fn identity_quotient() {
        let q = quotient(&g(), &Partition::singletons(3)).unwrap();
        assert_eq!(q.quotient.to_raw().inputs, g().to_raw().inputs);
        let bad = Partition::from_blocks(3, &[vec![1, 2], vec![3]]).unwrap();
        assert_eq!(quotient(&g(), &bad), Err(Error::UnbalancedPartition));
    }

    #[test]
    fn valency_breaking() {
        let e6e4 = net(3, &[&[1, 1, 3], &[1, 3, 3]]);
        let lat = enumerate_synchrony(&e6e4).unwrap();
        assert_eq!(valency_breaking_subspaces(&e6e4, &lat), vec![lat.top]);
        let a = net(3, &[&[3, 1, 2]]);
        let lat = enumerate_synchrony(&a).unwrap();
        assert!(valency_breaking_subspaces(&a, &lat).is_empty());
    }

    #[test]
    fn cap_enforced() {
        let big = Network::from_zero_indexed("big", 13, vec![(0..13).collect()]).unwrap();
        assert!(matches!(
            enumerate_synchrony(&big),
            Err(Error::TooManyCells { cells: 13, .. })
        ));
    }
}
