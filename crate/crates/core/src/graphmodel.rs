//! Static network topology, link delivery probabilities, candidate
//! forwarding sets and neighbor matrices.
//!
//! Two nodes share a link only when the distance between them is within
//! *both* transmission ranges. Links are therefore symmetric and the derived
//! graph is undirected.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Lower bound of the distance-decay model at the edge of the range.
pub const DECAY_FLOOR: f64 = 0.05;

/// Probabilities entering the delay/utility models are clamped to this range
/// since the models need `0 < P < 1`.
pub const PROB_MIN: f64 = 0.01;
pub const PROB_MAX: f64 = 0.99;

/// Dense node index, `0..N` within one topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned deployment rectangle anchored at the origin (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn square(side: f64) -> Self {
        Self::new(side, side)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("empty topology")]
    Empty,
    #[error("got {positions} positions but {ranges} ranges")]
    LengthMismatch { positions: usize, ranges: usize },
    #[error("node {0} lies outside the deployment area")]
    OutsideArea(NodeId),
    #[error("node {0} has a non-positive transmission range")]
    NonPositiveRange(NodeId),
    #[error("node {0} has a non-positive energy level")]
    NonPositiveEnergy(NodeId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Immutable node layout plus the derived bi-directional link set.
#[derive(Debug, Clone)]
pub struct Topology {
    positions: Vec<Point>,
    ranges: Vec<f64>,
    energies: Vec<f64>,
    area: Area,
    adjacency: Vec<Vec<NodeId>>,
}

/// Builds a topology and derives its links with the bi-directional rule.
pub fn build_topology(
    positions: Vec<Point>,
    ranges: Vec<f64>,
    area: Area,
) -> Result<Topology, TopologyError> {
    let energies = vec![1.0; positions.len()];
    Topology::with_energies(positions, ranges, energies, area)
}

impl Topology {
    pub fn with_energies(
        positions: Vec<Point>,
        ranges: Vec<f64>,
        energies: Vec<f64>,
        area: Area,
    ) -> Result<Self, TopologyError> {
        if positions.is_empty() {
            return Err(TopologyError::Empty);
        }
        if positions.len() != ranges.len() || positions.len() != energies.len() {
            return Err(TopologyError::LengthMismatch {
                positions: positions.len(),
                ranges: ranges.len(),
            });
        }
        for (i, p) in positions.iter().enumerate() {
            if !area.contains(p) {
                return Err(TopologyError::OutsideArea(NodeId(i)));
            }
            if ranges[i].is_nan() || ranges[i] <= 0.0 {
                return Err(TopologyError::NonPositiveRange(NodeId(i)));
            }
            if energies[i].is_nan() || energies[i] <= 0.0 {
                return Err(TopologyError::NonPositiveEnergy(NodeId(i)));
            }
        }
        let adjacency = derive_links(&positions, &ranges);
        Ok(Self {
            positions,
            ranges,
            energies,
            area,
            adjacency,
        })
    }

    /// Uniform random placement with a common transmission range.
    pub fn random_uniform<R: Rng + ?Sized>(
        nodes: usize,
        area: Area,
        range: f64,
        rng: &mut R,
    ) -> Result<Self, TopologyError> {
        let positions = (0..nodes)
            .map(|_| {
                Point::new(
                    rng.gen::<f64>() * area.width,
                    rng.gen::<f64>() * area.height,
                )
            })
            .collect();
        build_topology(positions, vec![range; nodes], area)
    }

    /// Parses the plain-text node format: one node per line as
    /// `id x y r [energy]`, `#` starts a comment. Ids must cover `0..N`
    /// exactly once, in any order. When `area` is `None` the bounding
    /// rectangle from the origin is used.
    pub fn from_node_file(text: &str, area: Option<Area>) -> Result<Self, TopologyError> {
        let mut rows: Vec<(usize, Point, f64, f64, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line_no = lineno + 1;
            let parse_err = |message: String| TopologyError::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(4..=5).contains(&fields.len()) {
                return Err(parse_err(format!(
                    "expected `id x y r [energy]`, got {} fields",
                    fields.len()
                )));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad node id `{}`", fields[0])))?;
            let num = |s: &str, what: &str| -> Result<f64, TopologyError> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(format!("bad {what} `{s}`")))
            };
            let x = num(fields[1], "x coordinate")?;
            let y = num(fields[2], "y coordinate")?;
            let r = num(fields[3], "range")?;
            let e = match fields.get(4) {
                Some(s) => num(s, "energy")?,
                None => 1.0,
            };
            rows.push((id, Point::new(x, y), r, e, line_no));
        }
        if rows.is_empty() {
            return Err(TopologyError::Empty);
        }
        let n = rows.len();
        let mut slots: Vec<Option<(Point, f64, f64)>> = vec![None; n];
        for (id, p, r, e, line) in rows {
            if id >= n {
                return Err(TopologyError::Parse {
                    line,
                    message: format!("node id {id} out of dense range 0..{n}"),
                });
            }
            if slots[id].is_some() {
                return Err(TopologyError::Parse {
                    line,
                    message: format!("duplicate node id {id}"),
                });
            }
            slots[id] = Some((p, r, e));
        }
        let rows: Vec<(Point, f64, f64)> = slots.into_iter().map(|s| s.unwrap()).collect();
        let area = area.unwrap_or_else(|| {
            let w = rows.iter().map(|r| r.0.x).fold(0.0, f64::max);
            let h = rows.iter().map(|r| r.0.y).fold(0.0, f64::max);
            Area::new(w, h)
        });
        Self::with_energies(
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            area,
        )
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    pub fn area(&self) -> Area {
        self.area
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.positions[id.0]
    }

    pub fn range(&self, id: NodeId) -> f64 {
        self.ranges[id.0]
    }

    pub fn energy(&self, id: NodeId) -> f64 {
        self.energies[id.0]
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.positions[a.0].distance(&self.positions[b.0])
    }

    /// Sorted link neighbors of `id`.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.0]
    }

    pub fn is_linked(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.adjacency[a.0].binary_search(&b).is_ok()
    }

    pub fn link_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Unordered links as `(low, high)` pairs in ascending order.
    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, ns)| {
            ns.iter()
                .filter(move |j| j.0 > i)
                .map(move |&j| (NodeId(i), j))
        })
    }
}

/// Grid-bucketed link derivation; cells are as wide as the largest range so
/// only the 3x3 neighborhood of a cell can hold link partners.
fn derive_links(positions: &[Point], ranges: &[f64]) -> Vec<Vec<NodeId>> {
    let n = positions.len();
    let cell = ranges.iter().cloned().fold(0.0, f64::max);
    let key = |p: &Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in positions.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let mut adjacency = vec![Vec::new(); n];
    for (i, p) in positions.iter().enumerate() {
        let (cx, cy) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    if j == i {
                        continue;
                    }
                    let d = p.distance(&positions[j]);
                    if d <= ranges[i] && d <= ranges[j] {
                        adjacency[i].push(NodeId(j));
                    }
                }
            }
        }
        adjacency[i].sort_unstable();
    }
    adjacency
}

/// How a link's delivery probability is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkProbModel {
    Constant(f64),
    /// `1 - (d / r_min)^beta`, floored at [`DECAY_FLOOR`].
    DistanceDecay {
        beta: f64,
    },
    /// Explicit per-link values keyed by the unordered pair.
    Table(HashMap<(NodeId, NodeId), f64>),
}

impl Default for LinkProbModel {
    fn default() -> Self {
        LinkProbModel::DistanceDecay { beta: 2.0 }
    }
}

impl LinkProbModel {
    pub fn table<I: IntoIterator<Item = ((NodeId, NodeId), f64)>>(entries: I) -> Self {
        LinkProbModel::Table(
            entries
                .into_iter()
                .map(|((a, b), p)| ((a.min(b), a.max(b)), p))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("no link between {0} and {1}")]
    NoLink(NodeId, NodeId),
    #[error("link {0}-{1} missing from the probability table")]
    MissingEntry(NodeId, NodeId),
    #[error("link probability {0} outside (0, 1]")]
    OutOfRange(f64),
}

/// Delivery probability of the link `i`-`j` under `model`.
pub fn link_probability(
    model: &LinkProbModel,
    topology: &Topology,
    i: NodeId,
    j: NodeId,
) -> Result<f64, LinkError> {
    if !topology.is_linked(i, j) {
        return Err(LinkError::NoLink(i, j));
    }
    let p = match model {
        LinkProbModel::Constant(p) => *p,
        LinkProbModel::DistanceDecay { beta } => {
            let r_min = topology.range(i).min(topology.range(j));
            let d = topology.distance(i, j);
            (1.0 - (d / r_min).powf(*beta)).clamp(DECAY_FLOOR, 1.0)
        }
        LinkProbModel::Table(t) => *t
            .get(&(i.min(j), i.max(j)))
            .ok_or(LinkError::MissingEntry(i, j))?,
    };
    if p > 0.0 && p <= 1.0 {
        Ok(p)
    } else {
        Err(LinkError::OutOfRange(p))
    }
}

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROB_MIN, PROB_MAX)
}

/// Raw per-node utility used to prioritise candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UtilityMetric {
    /// Distance reduction toward the destination divided by the sender's
    /// own distance, so values fall in `(0, 1]` and the destination scores 1.
    #[default]
    Progress,
    /// Per-node residual energy from the topology.
    Energy,
}

/// Candidate forwarding set construction policy: strictly positive
/// geographic progress, members scored with `utility`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CfsPolicy {
    pub utility: UtilityMetric,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfsError {
    #[error("sender and destination are both {0}")]
    SameEndpoints(NodeId),
    #[error("no progress neighbors")]
    NoProgressNeighbors,
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Candidate forwarding set of `sender` toward `destination`, members sorted
/// by descending raw utility (ties by node id).
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub sender: NodeId,
    pub destination: NodeId,
    pub members: Vec<NodeId>,
    /// Clamped delivery probability from the sender, per member.
    pub probs: Vec<f64>,
    pub utils: Vec<f64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn position_of(&self, node: NodeId) -> Option<usize> {
        self.members.iter().position(|&m| m == node)
    }
}

pub fn build_cfs(
    topology: &Topology,
    model: &LinkProbModel,
    sender: NodeId,
    destination: NodeId,
    policy: &CfsPolicy,
) -> Result<CandidateSet, CfsError> {
    if sender == destination {
        return Err(CfsError::SameEndpoints(sender));
    }
    let own = topology.distance(sender, destination);
    let mut scored = Vec::new();
    for &j in topology.neighbors(sender) {
        let remaining = topology.distance(j, destination);
        if remaining >= own {
            continue;
        }
        let p = clamp_probability(link_probability(model, topology, sender, j)?);
        let u = match policy.utility {
            UtilityMetric::Progress => (own - remaining) / own,
            UtilityMetric::Energy => topology.energy(j),
        };
        scored.push((j, p, u));
    }
    if scored.is_empty() {
        return Err(CfsError::NoProgressNeighbors);
    }
    scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    Ok(CandidateSet {
        sender,
        destination,
        members: scored.iter().map(|s| s.0).collect(),
        probs: scored.iter().map(|s| s.1).collect(),
        utils: scored.iter().map(|s| s.2).collect(),
    })
}

/// Fixed-length bit row with word-parallel AND and popcount.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut row = Self::zeros(len);
        for i in 0..len {
            row.set(i, true);
        }
        row
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn and_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

/// Adjacency row of one candidate over the candidate set's index space; a
/// node counts as its own neighbor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborMatrix {
    pub owner: NodeId,
    pub bits: BitRow,
}

impl NeighborMatrix {
    pub fn from_bits(owner: NodeId, bits: &[bool]) -> Self {
        let mut row = BitRow::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            row.set(i, b);
        }
        Self { owner, bits: row }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.bits.get(j)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|j| self.get(j)).collect()
    }
}

/// One row per candidate, restricted to the candidate set.
pub fn neighbor_matrices(topology: &Topology, cfs: &CandidateSet) -> Vec<NeighborMatrix> {
    let m = cfs.len();
    cfs.members
        .iter()
        .enumerate()
        .map(|(i, &owner)| {
            let mut bits = BitRow::zeros(m);
            for (j, &other) in cfs.members.iter().enumerate() {
                if i == j || topology.is_linked(owner, other) {
                    bits.set(j, true);
                }
            }
            NeighborMatrix { owner, bits }
        })
        .collect()
}

/// Node file describing a topology consistent with the paper's worked
/// relay-network example: sender 0, candidates 1..=8, destination 9.
pub const FIG2_FIXTURE: &str = include_str!("../fixtures/fig2.nodes");

pub fn fig2_fixture() -> Topology {
    Topology::from_node_file(FIG2_FIXTURE, None).expect("bundled fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(d: f64, r1: f64, r2: f64) -> Topology {
        build_topology(
            vec![Point::new(0.0, 0.0), Point::new(d, 0.0)],
            vec![r1, r2],
            Area::square(1000.0),
        )
        .unwrap()
    }

    fn brute_force_links(t: &Topology) -> usize {
        let mut count = 0;
        for i in 0..t.node_count() {
            for j in i + 1..t.node_count() {
                let d = t.distance(NodeId(i), NodeId(j));
                if d <= t.range(NodeId(i)) && d <= t.range(NodeId(j)) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn both_ranges_must_cover_the_distance() {
        assert_eq!(pair(200.0, 250.0, 250.0).link_count(), 1);
        assert_eq!(pair(200.0, 250.0, 150.0).link_count(), 0);
    }

    #[test]
    fn empty_topology_is_rejected() {
        let err = build_topology(vec![], vec![], Area::square(10.0)).unwrap_err();
        assert_eq!(err, TopologyError::Empty);
        assert_eq!(err.to_string(), "empty topology");
    }

    #[test]
    fn duplicate_positions_are_allowed() {
        let t = build_topology(
            vec![Point::new(5.0, 5.0), Point::new(5.0, 5.0)],
            vec![1.0, 1.0],
            Area::square(10.0),
        )
        .unwrap();
        assert!(t.is_linked(NodeId(0), NodeId(1)));
    }

    #[test]
    fn table5_density_link_count_matches_all_pairs_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let t = Topology::random_uniform(100, Area::square(2000.0), 250.0, &mut rng).unwrap();
        assert_eq!(t.link_count(), brute_force_links(&t));
        assert!(t.link_count() > 0);
    }

    #[test]
    fn link_probability_modes() {
        let t = pair(250.0, 250.0, 300.0);
        let (a, b) = (NodeId(0), NodeId(1));
        assert_eq!(
            link_probability(&LinkProbModel::Constant(0.8), &t, a, b).unwrap(),
            0.8
        );
        let decay = LinkProbModel::DistanceDecay { beta: 2.0 };
        assert_eq!(link_probability(&decay, &t, a, b).unwrap(), DECAY_FLOOR);
        let t0 = pair(0.0, 250.0, 250.0);
        assert_eq!(link_probability(&decay, &t0, a, b).unwrap(), 1.0);
        let table = LinkProbModel::table([((b, a), 0.42)]);
        assert_eq!(link_probability(&table, &t, a, b).unwrap(), 0.42);
        let far = pair(400.0, 250.0, 250.0);
        assert_eq!(
            link_probability(&LinkProbModel::Constant(0.8), &far, a, b),
            Err(LinkError::NoLink(a, b))
        );
    }

    fn star() -> Topology {
        // sender 0 at center, destination 4 far east, 1..3 east of the
        // sender, 5 and 6 west of it.
        let pts = [
            (500.0, 500.0),
            (600.0, 500.0),
            (580.0, 560.0),
            (550.0, 420.0),
            (990.0, 500.0),
            (400.0, 500.0),
            (450.0, 600.0),
        ];
        build_topology(
            pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            vec![150.0; pts.len()],
            Area::square(1000.0),
        )
        .unwrap()
    }

    #[test]
    fn star_cfs_matches_exhaustive_progress_scan() {
        let t = star();
        let (s, d) = (NodeId(0), NodeId(4));
        let cfs = build_cfs(&t, &LinkProbModel::default(), s, d, &CfsPolicy::default()).unwrap();
        let mut expected: Vec<NodeId> = t
            .nodes()
            .filter(|&j| t.is_linked(s, j) && t.distance(j, d) < t.distance(s, d))
            .collect();
        let mut got = cfs.members.clone();
        expected.sort();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 3);
        assert!(cfs.utils.windows(2).all(|w| w[0] >= w[1]));
        assert!(cfs
            .probs
            .iter()
            .all(|&p| (PROB_MIN..=PROB_MAX).contains(&p)));
    }

    #[test]
    fn adjacent_destination_is_a_candidate() {
        let t = pair(100.0, 250.0, 250.0);
        let cfs = build_cfs(
            &t,
            &LinkProbModel::Constant(1.0),
            NodeId(0),
            NodeId(1),
            &CfsPolicy::default(),
        )
        .unwrap();
        assert_eq!(cfs.members, vec![NodeId(1)]);
        assert_eq!(cfs.utils, vec![1.0]);
        assert_eq!(cfs.probs, vec![PROB_MAX]);
    }

    #[test]
    fn no_progress_is_signalled() {
        let t = star();
        let err = build_cfs(
            &t,
            &LinkProbModel::default(),
            NodeId(4),
            NodeId(5),
            &CfsPolicy::default(),
        )
        .unwrap_err();
        assert_eq!(err, CfsError::NoProgressNeighbors);
        assert_eq!(err.to_string(), "no progress neighbors");
    }

    #[test]
    fn energy_utility_orders_by_energy() {
        let t = fig2_fixture();
        let policy = CfsPolicy {
            utility: UtilityMetric::Energy,
        };
        let cfs = build_cfs(&t, &LinkProbModel::default(), NodeId(0), NodeId(9), &policy).unwrap();
        assert_eq!(cfs.members, (1..=8).map(NodeId).collect::<Vec<_>>());
    }

    #[test]
    fn single_member_matrix_is_one() {
        let t = pair(100.0, 250.0, 250.0);
        let cfs = build_cfs(
            &t,
            &LinkProbModel::Constant(0.5),
            NodeId(0),
            NodeId(1),
            &CfsPolicy::default(),
        )
        .unwrap();
        let rows = neighbor_matrices(&t, &cfs);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].to_bools(), vec![true]);
    }

    #[test]
    fn fixture_rows_follow_the_worked_example() {
        let t = fig2_fixture();
        let cfs = build_cfs(
            &t,
            &LinkProbModel::default(),
            NodeId(0),
            NodeId(9),
            &CfsPolicy::default(),
        )
        .unwrap();
        let mut members = cfs.members.clone();
        members.sort();
        assert_eq!(members, (1..=8).map(NodeId).collect::<Vec<_>>());
        let rows = neighbor_matrices(&t, &cfs);
        let pos = |n: usize| cfs.position_of(NodeId(n)).unwrap();
        assert!(!rows[pos(3)].get(pos(6)));
        assert!(!rows[pos(6)].get(pos(3)));
        for (a, b) in [
            (1, 2),
            (1, 3),
            (1, 7),
            (2, 3),
            (2, 7),
            (3, 7),
            (2, 6),
            (6, 7),
            (4, 5),
            (4, 8),
            (5, 8),
        ] {
            assert!(rows[pos(a)].get(pos(b)), "{a}-{b} should be linked");
        }
        assert!(!t.is_linked(NodeId(0), NodeId(9)));
    }

    #[test]
    fn random_cfs_rows_match_pairwise_adjacency() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Point> = (0..9)
            .map(|i| {
                if i == 0 {
                    Point::new(0.0, 250.0)
                } else {
                    Point::new(rng.gen_range(10.0..150.0), rng.gen_range(150.0..350.0))
                }
            })
            .chain([Point::new(1000.0, 250.0)])
            .collect();
        let t = build_topology(pts, vec![200.0; 10], Area::new(1000.0, 500.0)).unwrap();
        let cfs = build_cfs(
            &t,
            &LinkProbModel::default(),
            NodeId(0),
            NodeId(9),
            &CfsPolicy::default(),
        )
        .unwrap();
        assert_eq!(cfs.len(), 8);
        let rows = neighbor_matrices(&t, &cfs);
        for (i, row) in rows.iter().enumerate() {
            for j in 0..cfs.len() {
                let linked = i == j || t.is_linked(cfs.members[i], cfs.members[j]);
                assert_eq!(row.get(j), linked);
            }
        }
    }

    #[test]
    fn node_file_round_trip_and_errors() {
        let t = Topology::from_node_file("# c\n1 10 10 50\n0 0 0 50 0.5 # x\n", None).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.energy(NodeId(0)), 0.5);
        assert_eq!(t.energy(NodeId(1)), 1.0);
        assert!(t.is_linked(NodeId(0), NodeId(1)));
        assert!(matches!(
            Topology::from_node_file("0 0 0\n", None),
            Err(TopologyError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Topology::from_node_file("0 0 0 5\n0 1 1 5\n", None),
            Err(TopologyError::Parse { line: 2, .. })
        ));
        assert_eq!(
            Topology::from_node_file("# nothing\n", None).unwrap_err(),
            TopologyError::Empty
        );
    }

    fn arb_layout() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>)> {
        (2usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec((0.0..500.0f64, 0.0..500.0f64), n),
                prop::collection::vec(10.0..200.0f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn links_are_symmetric_and_match_rule((pts, ranges) in arb_layout()) {
            let t = build_topology(
                pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
                ranges,
                Area::square(500.0),
            ).unwrap();
            prop_assert_eq!(t.link_count(), brute_force_links(&t));
            for a in t.nodes() {
                prop_assert!(!t.is_linked(a, a));
                for b in t.nodes() {
                    prop_assert_eq!(t.is_linked(a, b), t.is_linked(b, a));
                }
            }
        }

        #[test]
        fn enlarging_ranges_never_removes_links((pts, ranges) in arb_layout(), grow in 1.0..3.0f64) {
            let points: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let small = build_topology(points.clone(), ranges.clone(), Area::square(500.0)).unwrap();
            let big = build_topology(points, ranges.iter().map(|r| r * grow).collect(), Area::square(500.0)).unwrap();
            for (a, b) in small.links() {
                prop_assert!(big.is_linked(a, b));
            }
        }

        #[test]
        fn neighbor_rows_are_symmetric((pts, ranges) in arb_layout()) {
            let mut points: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let mut ranges = ranges;
            points.push(Point::new(250.0, 250.0));
            ranges.push(500.0);
            points.push(Point::new(499.0, 499.0));
            ranges.push(1.0);
            let n = points.len();
            let t = build_topology(points, ranges, Area::square(500.0)).unwrap();
            if let Ok(cfs) = build_cfs(&t, &LinkProbModel::default(), NodeId(n - 2), NodeId(n - 1), &CfsPolicy::default()) {
                let rows = neighbor_matrices(&t, &cfs);
                for i in 0..cfs.len() {
                    prop_assert!(rows[i].get(i));
                    for j in 0..cfs.len() {
                        prop_assert_eq!(rows[i].get(j), rows[j].get(i));
                    }
                }
            }
        }
    }
}
