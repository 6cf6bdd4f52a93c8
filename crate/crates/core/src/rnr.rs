//! Relay-network recognition.
//!
//! A relay network is a fully connected subset (clique) of the candidate
//! forwarding set with at least two members. Recognition works on the
//! candidates' neighbor matrices: AND-ing the rows of a subset leaves the
//! positions that every member sees, and the popcount of that row is the
//! matrix sum `D`.
//!
//! A subset is a relay network exactly when every member position survives
//! the AND (each member is in every other member's row). `D >= n` alone is
//! not enough: two unlinked nodes with two common neighbors also reach
//! `D = 2`. Once the subset is known to be fully connected, `D = n` means no
//! outside candidate extends it (an o-network, i.e. a maximal clique) and
//! `D = m > n` means it sits inside a larger relay network (an s-network).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graphmodel::{BitRow, NeighborMatrix, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RnrError {
    #[error("matrix sum needs at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("neighbor rows have mismatched lengths {0} and {1}")]
    LengthMismatch(usize, usize),
}

/// Popcount of the position-wise AND over a set of neighbor rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatrixSum(pub usize);

pub fn matrix_sum(rows: &[&NeighborMatrix]) -> Result<MatrixSum, RnrError> {
    if rows.len() < 2 {
        return Err(RnrError::TooFewRows(rows.len()));
    }
    Ok(MatrixSum(common_row(rows)?.count_ones()))
}

fn common_row(rows: &[&NeighborMatrix]) -> Result<BitRow, RnrError> {
    let len = rows[0].len();
    let mut acc = rows[0].bits.clone();
    for r in &rows[1..] {
        if r.len() != len {
            return Err(RnrError::LengthMismatch(len, r.len()));
        }
        acc.and_assign(&r.bits);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelayKind {
    ONetwork,
    SNetwork { parent_degree: usize },
    NotRelay,
}

impl RelayKind {
    pub fn is_relay(self) -> bool {
        !matches!(self, RelayKind::NotRelay)
    }

    pub fn label(self) -> &'static str {
        match self {
            RelayKind::ONetwork => "o-network",
            RelayKind::SNetwork { .. } => "s-network",
            RelayKind::NotRelay => "not-relay",
        }
    }
}

/// A classified subset of candidate positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelayNetwork {
    /// Sorted candidate-set positions.
    pub members: Vec<usize>,
    pub kind: RelayKind,
    pub sum: MatrixSum,
}

impl RelayNetwork {
    pub fn degree(&self) -> usize {
        self.members.len()
    }
}

/// Classifies the subset of candidate positions `subset`.
///
/// # Panics
///
/// If `subset` has fewer than two positions, repeats a position, or indexes
/// past `matrices`.
pub fn classify(subset: &[usize], matrices: &[NeighborMatrix]) -> RelayNetwork {
    let mut members = subset.to_vec();
    members.sort_unstable();
    members.dedup();
    assert!(
        members.len() == subset.len() && members.len() >= 2,
        "relay networks need at least two distinct members"
    );
    let rows: Vec<&NeighborMatrix> = members.iter().map(|&i| &matrices[i]).collect();
    let common = common_row(&rows).expect("rows from one candidate set share a length");
    let d = common.count_ones();
    let n = members.len();
    let connected = members.iter().all(|&i| common.get(i));
    let kind = if !connected {
        RelayKind::NotRelay
    } else if d == n {
        RelayKind::ONetwork
    } else {
        RelayKind::SNetwork { parent_degree: d }
    };
    RelayNetwork {
        members,
        kind,
        sum: MatrixSum(d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCaps {
    pub max_degree: usize,
    pub max_count: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        Self {
            max_degree: 8,
            max_count: 4096,
        }
    }
}

impl EnumerationCaps {
    pub fn unbounded() -> Self {
        Self {
            max_degree: usize::MAX,
            max_count: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    /// Ascending degree, then lexicographic members.
    pub networks: Vec<RelayNetwork>,
    /// Set when more than `max_count` networks existed.
    pub truncated: bool,
}

fn adjacency_masks(matrices: &[NeighborMatrix]) -> Vec<BitRow> {
    matrices
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut row = m.bits.clone();
            row.set(i, false);
            row
        })
        .collect()
}

fn bron_kerbosch_pivot(
    adj: &[BitRow],
    r: &mut Vec<usize>,
    p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            let mut clique = r.clone();
            clique.sort_unstable();
            out.push(clique);
        }
        return;
    }
    // pivot: vertex of P ∪ X with the most neighbors in P
    let pivot = *p
        .iter()
        .chain(x.iter())
        .max_by_key(|&&u| {
            (
                p.iter().filter(|&&v| adj[u].get(v)).count(),
                std::cmp::Reverse(u),
            )
        })
        .unwrap();
    let todo: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot].get(v)).collect();
    let mut p = p;
    for v in todo {
        let next_p = p.iter().copied().filter(|&w| adj[v].get(w)).collect();
        let next_x = x.iter().copied().filter(|&w| adj[v].get(w)).collect();
        r.push(v);
        bron_kerbosch_pivot(adj, r, next_p, next_x, out);
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}

/// Maximal cliques of the candidate link graph (including isolated
/// singletons), each sorted, in lexicographic order.
pub fn maximal_cliques(matrices: &[NeighborMatrix]) -> Vec<Vec<usize>> {
    let adj = adjacency_masks(matrices);
    let mut out = Vec::new();
    bron_kerbosch_pivot(
        &adj,
        &mut Vec::new(),
        (0..matrices.len()).collect(),
        BTreeSet::new(),
        &mut out,
    );
    out.sort();
    out
}

/// Maximal cliques that contain every position in `subset`.
pub fn maximal_cliques_containing(
    subset: &[usize],
    matrices: &[NeighborMatrix],
) -> Vec<Vec<usize>> {
    maximal_cliques(matrices)
        .into_iter()
        .filter(|c| subset.iter().all(|s| c.binary_search(s).is_ok()))
        .collect()
}

/// Every relay network of degree `2..=caps.max_degree`, each classified.
///
/// Cliques are generated as subsets of the maximal cliques, deduplicated,
/// then ordered by degree and members before `max_count` truncation.
pub fn enumerate_relay_networks(matrices: &[NeighborMatrix], caps: EnumerationCaps) -> Enumeration {
    let mut found: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    for clique in maximal_cliques(matrices) {
        let top = clique.len().min(caps.max_degree);
        for k in 2..=top {
            for_each_combination(&clique, k, &mut |subset| {
                found.insert((k, subset.to_vec()));
            });
        }
    }
    let truncated = found.len() > caps.max_count;
    let networks = found
        .into_iter()
        .take(caps.max_count)
        .map(|(_, members)| classify(&members, matrices))
        .collect();
    Enumeration {
        networks,
        truncated,
    }
}

fn for_each_combination(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(
        items: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let need = k - cur.len();
        for i in start..=items.len() - need {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    if k <= items.len() {
        rec(items, k, 0, &mut Vec::with_capacity(k), f);
    }
}

/// Per-degree relay-network counts; `per_degree[i]` is the number of
/// `i`-degree networks (indices 0 and 1 are always zero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayCounts {
    pub per_degree: Vec<u64>,
    pub total: u64,
}

/// Counts all relay networks without materializing them, by extending each
/// clique only with higher-indexed common neighbors.
pub fn count_relay_networks(matrices: &[NeighborMatrix]) -> RelayCounts {
    let m = matrices.len();
    let adj = adjacency_masks(matrices);
    let mut per_degree = vec![0u64; m + 1];
    fn extend(adj: &[BitRow], candidates: &BitRow, last: usize, size: usize, per: &mut [u64]) {
        for v in candidates.iter_ones().filter(|&v| v > last) {
            per[size + 1] += 1;
            let mut next = candidates.clone();
            next.and_assign(&adj[v]);
            extend(adj, &next, v, size + 1, per);
        }
    }
    for v in 0..m {
        extend(&adj, &adj[v], v, 1, &mut per_degree);
    }
    let total = per_degree.iter().sum();
    RelayCounts { per_degree, total }
}

/// Whether the given topology nodes are pairwise linked, by counting the
/// induced edges against `n(n-1)/2`.
pub fn oracle_is_clique(subset: &[NodeId], topology: &Topology) -> bool {
    let n = subset.len();
    let mut edges = 0;
    for (i, &a) in subset.iter().enumerate() {
        for &b in &subset[i + 1..] {
            if topology.is_linked(a, b) {
                edges += 1;
            }
        }
    }
    edges == n * (n - 1) / 2
}

/// Whether two relay networks are relevant: neither contains the other and
/// their union is still a relay network. `None` when one contains the other.
pub fn relevant(a: &RelayNetwork, b: &RelayNetwork, matrices: &[NeighborMatrix]) -> Option<bool> {
    let sa: BTreeSet<usize> = a.members.iter().copied().collect();
    let sb: BTreeSet<usize> = b.members.iter().copied().collect();
    if sa.is_subset(&sb) || sb.is_subset(&sa) {
        return None;
    }
    let union: Vec<usize> = sa.union(&sb).copied().collect();
    Some(classify(&union, matrices).kind.is_relay())
}
