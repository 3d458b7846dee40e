//! Coupled cell networks with identical cells and asymmetric inputs.
//!
//! A network on `n` cells with `k` input types is stored as `k` source maps:
//! `sigma_l(i)` is the cell sending the type-`l` edge into cell `i`. Each
//! adjacency matrix therefore has exactly one 1 per row by construction.
//! Storage is 0-indexed; everything that is read or written by users
//! (files, reports, [`SourceDecomposition`]) is 1-indexed.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::algebra::{q, Q};
use crate::error::{Error, Result};
use crate::exact;

/// Unvalidated network description as found in a file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNetwork {
    #[serde(default)]
    pub name: String,
    pub cells: i64,
    pub inputs: Vec<Vec<i64>>,
}

/// Validated network.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Network {
    name: String,
    n: usize,
    inputs: Vec<Vec<usize>>,
}

impl Serialize for Network {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawNetwork::deserialize(d)?;
        validate_network(&raw).map_err(serde::de::Error::custom)
    }
}

/// Check a raw description and build a [`Network`].
pub fn validate_network(raw: &RawNetwork) -> Result<Network> {
    if raw.cells <= 0 {
        return Err(Error::NonPositiveCellCount(raw.cells));
    }
    if raw.inputs.is_empty() {
        return Err(Error::EmptyInputList);
    }
    let n = raw.cells as usize;
    let mut inputs = Vec::with_capacity(raw.inputs.len());
    for (l, map) in raw.inputs.iter().enumerate() {
        if map.len() != n {
            return Err(Error::InputLengthMismatch {
                field: format!("inputs[{l}]"),
                found: map.len(),
                expected: n,
            });
        }
        let mut m = Vec::with_capacity(n);
        for (i, &src) in map.iter().enumerate() {
            if src < 1 || src > raw.cells {
                return Err(Error::CellIndexOutOfRange {
                    field: format!("inputs[{l}][{i}]"),
                    value: src,
                    cells: n,
                });
            }
            m.push((src - 1) as usize);
        }
        inputs.push(m);
    }
    Ok(Network {
        name: raw.name.clone(),
        n,
        inputs,
    })
}

impl Network {
    /// Build from 1-indexed source maps.
    pub fn new(name: &str, cells: i64, inputs: Vec<Vec<i64>>) -> Result<Self> {
        validate_network(&RawNetwork {
            name: name.to_string(),
            cells,
            inputs,
        })
    }

    /// Build from 0-indexed source maps (used for quotients and generators).
    pub fn from_zero_indexed(name: &str, n: usize, inputs: Vec<Vec<usize>>) -> Result<Self> {
        let raw = RawNetwork {
            name: name.to_string(),
            cells: n as i64,
            inputs: inputs
                .iter()
                .map(|m| m.iter().map(|&s| s as i64 + 1).collect())
                .collect(),
        };
        validate_network(&raw)
    }

    /// Parse the JSON network format; errors cite line, column and field path.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawNetwork = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Parse(format!(
                "line {} column {} at `{}`: {}",
                inner.line(),
                inner.column(),
                path,
                inner
            ))
        })?;
        validate_network(&raw)
    }

    pub fn to_raw(&self) -> RawNetwork {
        RawNetwork {
            name: self.name.clone(),
            cells: self.n as i64,
            inputs: self
                .inputs
                .iter()
                .map(|m| m.iter().map(|&s| s as i64 + 1).collect())
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("network serialises")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn n_cells(&self) -> usize {
        self.n
    }

    /// Number of input types `k`.
    pub fn k(&self) -> usize {
        self.inputs.len()
    }

    /// 0-indexed source of the type-`l` edge (`l` in `1..=k`) into cell `i`;
    /// `l = 0` denotes the internal dynamics (identity).
    pub fn source(&self, l: usize, i: usize) -> usize {
        if l == 0 {
            i
        } else {
            self.inputs[l - 1][i]
        }
    }

    /// 0-indexed source maps for `l = 1..=k`.
    pub fn input_maps(&self) -> &[Vec<usize>] {
        &self.inputs
    }

    /// Adjacency matrix `A_l`, `l` in `1..=k` (entry `(i,j) = 1` iff `sigma_l(i) = j`).
    pub fn adjacency(&self, l: usize) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.n]; self.n];
        for i in 0..self.n {
            a[i][self.source(l, i)] = 1;
        }
        a
    }

    /// `(A_l v)_i = v_{sigma_l(i)}`, with `A_0 = Id`.
    pub fn apply(&self, l: usize, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| v[self.source(l, i)]).collect()
    }

    /// Relabel cells: new cell `perm[i]` is old cell `i` (0-indexed).
    pub fn permuted(&self, perm: &[usize]) -> Network {
        let mut inv = vec![0; self.n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let inputs = self
            .inputs
            .iter()
            .map(|m| (0..self.n).map(|new_i| perm[m[inv[new_i]]]).collect())
            .collect();
        Network {
            name: self.name.clone(),
            n: self.n,
            inputs,
        }
    }
}

/// True iff the underlying undirected multigraph is connected.
pub fn is_connected(net: &Network) -> bool {
    let n = net.n_cells();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut components = n;
    for map in net.input_maps() {
        for (i, &s) in map.iter().enumerate() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, s));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
    }
    components == 1
}

/// Source components: strongly connected cell sets receiving no edges from
/// outside. Cells are 1-indexed; components are sorted by smallest cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDecomposition {
    pub components: Vec<Vec<usize>>,
    pub count: usize,
}

/// Tarjan's algorithm over the edge relation `sigma_l(i) -> i`.
fn strongly_connected_components(net: &Network) -> Vec<Vec<usize>> {
    let n = net.n_cells();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for map in net.input_maps() {
        for (i, &s) in map.iter().enumerate() {
            succ[s].insert(i);
        }
    }
    let succ: Vec<Vec<usize>> = succ.into_iter().map(|s| s.into_iter().collect()).collect();

    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        // Iterative DFS: frames of (vertex, next successor position).
        let mut frames = vec![(root, 0usize)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("non-empty stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

pub fn source_components(net: &Network) -> SourceDecomposition {
    let comps = strongly_connected_components(net);
    let mut comp_of = vec![0; net.n_cells()];
    for (c, comp) in comps.iter().enumerate() {
        for &i in comp {
            comp_of[i] = c;
        }
    }
    let mut components: Vec<Vec<usize>> = comps
        .iter()
        .enumerate()
        .filter(|(c, comp)| {
            comp.iter().all(|&i| {
                net.input_maps()
                    .iter()
                    .all(|map| comp_of[map[i]] == *c)
            })
        })
        .map(|(_, comp)| comp.iter().map(|&i| i + 1).collect())
        .collect();
    components.sort();
    let count = components.len();
    SourceDecomposition { components, count }
}

fn span_rows(net: &Network) -> Vec<Vec<Q>> {
    let n = net.n_cells();
    let mut rows = Vec::with_capacity(net.k() + 1);
    for l in 0..=net.k() {
        let mut v = vec![Q::zero(); n * n];
        for i in 0..n {
            v[i * n + net.source(l, i)] = q(1);
        }
        rows.push(v);
    }
    rows
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

/// True iff some relabelling makes the spans of `{Id, A_1..A_k}` and
/// `{Id, B_1..B_k'}` coincide (exact rational comparison over all `n!`
/// permutations).
pub fn linearly_equivalent(a: &Network, b: &Network) -> Result<bool> {
    if a.n_cells() != b.n_cells() {
        return Err(Error::CellCountMismatch(a.n_cells(), b.n_cells()));
    }
    let ra = span_rows(a);
    let rank_a = exact::rank(&ra);
    for perm in permutations(a.n_cells()) {
        let rb = span_rows(&b.permuted(&perm));
        if exact::rank(&rb) != rank_a {
            return Ok(false);
        }
        let mut both = ra.clone();
        both.extend(rb);
        if exact::rank(&both) == rank_a {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Dimension of `span{Id, A_1..A_k}`.
pub fn span_dimension(net: &Network) -> usize {
    exact::rank(&span_rows(net))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(n: i64, inputs: &[&[i64]]) -> Network {
        Network::new("t", n, inputs.iter().map(|m| m.to_vec()).collect()).unwrap()
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(matches!(
            Network::new("x", 2, vec![vec![3, 1]]),
            Err(Error::CellIndexOutOfRange { value: 3, .. })
        ));
        assert_eq!(Network::new("x", 2, vec![]), Err(Error::EmptyInputList));
        assert_eq!(
            Network::new("x", 0, vec![vec![]]),
            Err(Error::NonPositiveCellCount(0))
        );
        assert!(Network::new("g", 3, vec![vec![2, 1, 1], vec![2, 3, 2]]).is_ok());
    }

    #[test]
    fn json_errors_cite_position() {
        let err = Network::from_json_str("{\"name\": \"x\", \"cells\": 2,\n \"inputs\": [[1, \"a\"]]}")
            .unwrap_err();
        let Error::Parse(msg) = err else { panic!() };
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("inputs[0][1]"), "{msg}");
    }

    #[test]
    fn json_round_trip() {
        let g = net(3, &[&[2, 1, 1], &[2, 3, 2]]);
        let back = Network::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn connectivity() {
        assert!(is_connected(&net(3, &[&[3, 1, 2]])));
        assert!(!is_connected(&net(2, &[&[1, 2]])));
    }

    #[test]
    fn sources() {
        let e6e4 = net(3, &[&[1, 1, 3], &[1, 3, 3]]);
        let s = source_components(&e6e4);
        assert_eq!(s.components, vec![vec![1], vec![3]]);
        assert_eq!(source_components(&net(3, &[&[3, 1, 2]])).components, vec![vec![1, 2, 3]]);
        assert_eq!(source_components(&net(3, &[&[1, 1, 1]])).components, vec![vec![1]]);
    }

    #[test]
    fn equivalence() {
        let a = net(3, &[&[3, 1, 2]]);
        let c = net(3, &[&[1, 1, 1]]);
        assert!(linearly_equivalent(&a, &a).unwrap());
        assert!(linearly_equivalent(&a, &a.permuted(&[1, 2, 0])).unwrap());
        assert!(!linearly_equivalent(&a, &c).unwrap());
        let two = net(2, &[&[1, 1]]);
        assert_eq!(linearly_equivalent(&a, &two), Err(Error::CellCountMismatch(3, 2)));
    }
}
